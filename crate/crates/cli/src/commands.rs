use std::io::Write;
use std::path::Path;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use structret::metrics::letters::counterexample_report;
use structret::pipeline::AllRejected;
use structret::retrieval::default_rate_grid;
use structret::synth::{half_space_crop, random_direction, ShapeGenerator, SynthConfig};
use structret::{
    build_database, default_gamma, extract_structure, filter_category, heat_samples, load_database, retrieve,
    save_database, Database, DatabaseParams, Error, MatchConfig, Metric, MissingRate, Point3, PointCloud,
    RetrievalResult,
};

use crate::io::{ensure_parent, find_clouds, format_of, read_cloud, stem_id, write_cloud, Format};
use crate::manifest::{manifest_path, RunManifest};
use crate::{BuildDbArgs, CliError, CompleteArgs, EvalArgs, ExportArgs, MatchArgs, RetrieveArgs, SampleOn, SynthArgs};

// Output streams are best effort: a closed stdout must not turn a finished
// run into a failure.
macro_rules! say {
    ($out:expr, $($t:tt)*) => {
        let _ = writeln!($out, $($t)*);
    };
}

fn load_db(path: &Path) -> Result<Database, CliError> {
    let db = load_database(path).map_err(|e| match e {
        Error::Io(io) => CliError::Data(format!("cannot read database {}: {io}", path.display())),
        other => CliError::Data(format!("{}: {other}", path.display())),
    })?;
    db.validate()?;
    Ok(db)
}

pub(crate) fn build_db(
    a: &BuildDbArgs,
    args: &[String],
    manifest: Option<&Path>,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> Result<(), CliError> {
    if a.k == 0 {
        return Err(CliError::Usage("--k must be at least 1".into()));
    }
    let t0 = Instant::now();
    let mut man = RunManifest::new("build-db", args);
    let params = DatabaseParams {
        gamma_default: a.gamma.unwrap_or_else(|| default_gamma(a.lambda)),
        ..DatabaseParams::new(a.k, a.lambda)
    };
    man.param("k", params.k);
    man.param("lambda", params.lambda);
    man.param("gamma_default", params.gamma_default);
    man.param("floor", params.floor);
    man.param("seed", a.seed);
    man.param("normalize", a.normalize);

    let found = find_clouds(&a.input)?;
    let mut skipped: Vec<(String, String)> = Vec::new();
    let mut clouds = Vec::new();
    for f in &found {
        man.input(&f.path);
        match read_cloud(&f.path, &f.id) {
            Ok(c) => {
                let c = if a.normalize { c.normalized_unit_cube() } else { c };
                clouds.push(c.with_category(f.category.clone()));
            }
            Err(e) => skipped.push((f.id.clone(), e.to_string())),
        }
    }
    man.time("load", t0);

    let t1 = Instant::now();
    let report = build_database(&clouds, &params, a.seed)?;
    man.time("build", t1);
    skipped.extend(report.skipped.iter().map(|(id, e)| (id.clone(), e.to_string())));
    for (id, why) in &skipped {
        say!(err, "skipped {id}: {why}");
    }
    let db = report.database;
    if db.is_empty() {
        return Err(CliError::Data(format!("no valid clouds under {}", a.input.display())));
    }

    let t2 = Instant::now();
    ensure_parent(&a.output)?;
    save_database(&db, &a.output)?;
    man.time("save", t2);
    man.output(&a.output);
    man.time("total", t0);
    man.report = json!({
        "entries": db.len(),
        "categories": db.categories(),
        "skipped": skipped.iter().map(|(id, why)| json!({"id": id, "reason": why})).collect::<Vec<_>>(),
    });
    man.write(&manifest_path(manifest, Some(&a.output), "build-db"))?;
    say!(
        out,
        "wrote {} entries ({} skipped) to {}",
        db.len(),
        skipped.len(),
        a.output.display()
    );
    Ok(())
}

/// Database (filtered by category), input cloud and match config.
fn prepare(m: &MatchArgs, man: &mut RunManifest) -> Result<(Database, PointCloud, MatchConfig), CliError> {
    let mut db = load_db(&m.db)?;
    man.input(&m.db);
    if let Some(cat) = &m.category {
        db = filter_category(&db, cat);
        if db.is_empty() {
            return Err(CliError::Data(format!("no entries in category `{cat}`")));
        }
    }
    let cloud = read_cloud(&m.input, &stem_id(&m.input))?;
    let cloud = if m.normalize {
        cloud.normalized_unit_cube()
    } else {
        cloud
    };
    man.input(&m.input);

    let mut cfg = MatchConfig::for_database(&db);
    if let Some(g) = m.gamma {
        cfg.gamma = g;
        cfg.gamma_back = g;
    }
    if let Some(g) = m.gamma_back {
        cfg.gamma_back = g;
    }
    cfg.seed = m.seed;
    if m.top == 0 {
        return Err(CliError::Usage("--top must be at least 1".into()));
    }

    man.param("k", cfg.k);
    man.param("lambda", cfg.lambda);
    man.param("gamma", cfg.gamma);
    man.param("gamma_back", cfg.gamma_back);
    man.param("seed", cfg.seed);
    man.param("category", &m.category);
    man.param("top", m.top);
    man.param("normalize", m.normalize);
    Ok((db, cloud, cfg))
}

fn ranking_json(ranking: &[RetrievalResult]) -> Value {
    ranking
        .iter()
        .enumerate()
        .map(|(i, r)| json!({"rank": i + 1, "entry_id": r.entry_id, "score": r.score, "rejected": r.rejected}))
        .collect()
}

fn print_ranking(out: &mut dyn Write, ranking: &[RetrievalResult]) {
    say!(out, "{:<5} {:<32} {:>14}  status", "rank", "entry", "score");
    for (i, r) in ranking.iter().enumerate() {
        let status = if r.rejected { "rejected" } else { "ok" };
        say!(out, "{:<5} {:<32} {:>14.6}  {status}", i + 1, r.entry_id, r.score);
    }
}

pub(crate) fn complete(
    a: &CompleteArgs,
    args: &[String],
    manifest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if format_of(&a.output).is_none() {
        return Err(CliError::Usage(format!(
            "{}: output must be .ply or .xyz",
            a.output.display()
        )));
    }
    if a.points == 0 {
        return Err(CliError::Usage("--points must be at least 1".into()));
    }
    let t0 = Instant::now();
    let mut man = RunManifest::new("complete", args);
    let (db, partial, cfg) = prepare(&a.m, &mut man)?;
    let missing_rate = match a.missing_rate {
        Some(r) => MissingRate::Given(r),
        None => MissingRate::Estimate(a.grid.clone().unwrap_or_else(default_rate_grid)),
    };
    match &missing_rate {
        MissingRate::Given(r) => man.param("missing_rate", r),
        MissingRate::Estimate(g) => man.param("grid", g),
    }
    man.param("points", a.points);
    man.time("load", t0);

    let req = structret::CompletionRequest {
        config: cfg,
        missing_rate,
        output_points: a.points,
        top_n: a.m.top,
    };
    let t1 = Instant::now();
    let result = structret::complete(&db, &partial, &req);
    man.time("complete", t1);
    let c = match result {
        Ok(c) => c,
        Err(structret::CompletionError::AllRejected(AllRejected { ranking, missing_rate })) => {
            say!(out, "missing rate: {missing_rate}");
            print_ranking(out, &ranking);
            man.report = json!({"missing_rate": missing_rate, "ranking": ranking_json(&ranking), "all_rejected": true});
            man.time("total", t0);
            man.write(&manifest_path(manifest, Some(&a.output), "complete"))?;
            return Err(CliError::AllRejected);
        }
        Err(structret::CompletionError::Other(e)) => return Err(e.into()),
    };

    let t2 = Instant::now();
    write_cloud(&a.output, &c.output.cloud, None)?;
    man.time("write", t2);
    man.output(&a.output);
    man.time("total", t0);
    man.report = json!({
        "missing_rate": c.missing_rate,
        "partial_structure_points": c.partial_structure.k(),
        "matched_entry": c.matched_entry,
        "missing_structure_points": c.missing,
        "retained_points": c.output.retained(),
        "output_points": c.output.cloud.len(),
        "ranking": ranking_json(&c.ranking),
        "sweep": c.sweep.iter().map(|s| json!({
            "rate": s.rate,
            "clusters": s.clusters,
            "best": s.best.as_ref().map(|b| &b.entry_id),
            "mean_score": s.mean_score,
            "spread_log_ratio": s.spread_log_ratio,
        })).collect::<Vec<_>>(),
    });
    man.write(&manifest_path(manifest, Some(&a.output), "complete"))?;

    say!(out, "missing rate: {}", c.missing_rate);
    print_ranking(out, &c.ranking);
    say!(
        out,
        "matched {}: {} missing structure points, {} of {} output points retained",
        c.matched_entry,
        c.missing,
        c.output.retained(),
        c.output.cloud.len()
    );
    say!(out, "wrote {}", a.output.display());
    Ok(())
}

pub(crate) fn retrieve_cmd(
    a: &RetrieveArgs,
    args: &[String],
    manifest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let t0 = Instant::now();
    let mut man = RunManifest::new("retrieve", args);
    let (db, partial, cfg) = prepare(&a.m, &mut man)?;
    man.param("missing_rate", a.missing_rate);
    let clusters = structret::partial_cluster_count(cfg.k, a.missing_rate)?;
    if clusters > partial.len() {
        return Err(Error::InvalidClusterCount {
            k: clusters,
            points: partial.len(),
        }
        .into());
    }
    let query = extract_structure(&partial, clusters, cfg.seed)?;
    let ranking = retrieve(&db, &query.centroids(), &cfg, a.m.top)?;
    man.time("total", t0);
    let rejected = ranking[0].rejected;
    man.report = json!({"clusters": clusters, "ranking": ranking_json(&ranking), "all_rejected": rejected});
    man.write(&manifest_path(manifest, None, "retrieve"))?;
    print_ranking(out, &ranking);
    if rejected {
        return Err(CliError::AllRejected);
    }
    Ok(())
}

pub(crate) fn eval(
    a: &EvalArgs,
    args: &[String],
    manifest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    let t0 = Instant::now();
    let mut man = RunManifest::new("eval", args);
    let metric = Metric::from(a.metric);
    let x = read_cloud(&a.a, &stem_id(&a.a))?;
    let y = read_cloud(&a.b, &stem_id(&a.b))?;
    man.input(&a.a);
    man.input(&a.b);
    man.param("metric", metric.name());
    let v = metric.compute(&x, &y).map_err(|e| match e {
        Error::SizeMismatch { left, right } => CliError::Data(format!(
            "emd needs clouds of equal size: {} has {left} points, {} has {right}",
            a.a.display(),
            a.b.display()
        )),
        other => other.into(),
    })?;
    man.time("total", t0);
    man.report = json!({"value": v.value});
    man.write(&manifest_path(manifest, None, "eval"))?;
    say!(out, "{}: {:.6}", metric.name(), v.value);
    say!(out, "metric={} value={}", metric.name(), v.value);
    Ok(())
}

/// Regular `res³` grid over the envelope's centers, padded by three of its
/// widest standard deviations.
fn envelope_grid(db: &Database, entry: &str, res: usize) -> PointCloud {
    let env = &db.get(entry).expect("checked by caller").envelope;
    let mut lo = env.components[0].mu;
    let mut hi = lo;
    let mut widest = 0.0_f64;
    for c in &env.components {
        lo = lo.min(&c.mu);
        hi = hi.max(&c.mu);
        widest = widest.max(c.nvar.iter().copied().fold(0.0, f64::max).sqrt());
    }
    let pad = Point3::new(3.0 * widest, 3.0 * widest, 3.0 * widest);
    let (lo, hi) = (lo - pad, hi + pad);
    let step = |i: usize, a: f64, b: f64| a + (b - a) * i as f64 / (res - 1) as f64;
    let mut pts = Vec::with_capacity(res * res * res);
    for i in 0..res {
        for j in 0..res {
            for k in 0..res {
                pts.push(Point3::new(
                    step(i, lo.x, hi.x),
                    step(j, lo.y, hi.y),
                    step(k, lo.z, hi.z),
                ));
            }
        }
    }
    PointCloud::new(pts, format!("{entry}-grid")).expect("grid is finite and non-empty")
}

pub(crate) fn export_envelope(
    a: &ExportArgs,
    args: &[String],
    manifest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if format_of(&a.output) != Some(Format::Ply) {
        return Err(CliError::Usage(format!(
            "{}: heat maps are written as .ply",
            a.output.display()
        )));
    }
    if a.on == SampleOn::Grid && a.resolution < 2 {
        return Err(CliError::Usage("--resolution must be at least 2".into()));
    }
    let t0 = Instant::now();
    let mut man = RunManifest::new("export-envelope", args);
    let db = load_db(&a.db)?;
    man.input(&a.db);
    let entry = db
        .get(&a.entry)
        .ok_or_else(|| CliError::Data(format!("no entry `{}` in {}", a.entry, a.db.display())))?;
    let samples = match a.on {
        SampleOn::Source => {
            if entry.source_path.is_empty() {
                return Err(CliError::Data(format!(
                    "entry `{}` has no source path; use --on grid",
                    a.entry
                )));
            }
            let src = Path::new(&entry.source_path);
            man.input(src);
            let c = read_cloud(src, &entry.entry_id)?;
            if a.normalize {
                c.normalized_unit_cube()
            } else {
                c
            }
        }
        SampleOn::Grid => envelope_grid(&db, &a.entry, a.resolution),
    };
    let heat = heat_samples(&entry.envelope, &samples);
    write_cloud(&a.output, &samples, Some(&heat.colors))?;
    man.output(&a.output);
    man.param("entry", &a.entry);
    man.param("on", format!("{:?}", a.on).to_lowercase());
    man.param("resolution", a.resolution);
    man.param("lambda", db.lambda);
    man.time("total", t0);
    let max = heat.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = heat.values.iter().copied().fold(f64::INFINITY, f64::min);
    man.report = json!({"samples": samples.len(), "components": entry.envelope.len(), "min": min, "max": max});
    man.write(&manifest_path(manifest, Some(&a.output), "export-envelope"))?;
    say!(
        out,
        "wrote {} samples of `{}` ({} components, values {min:.6}..{max:.6}) to {}",
        samples.len(),
        a.entry,
        entry.envelope.len(),
        a.output.display()
    );
    Ok(())
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

pub(crate) fn demo(args: &[String], manifest: Option<&Path>, out: &mut dyn Write) -> Result<(), CliError> {
    let t0 = Instant::now();
    let r = counterexample_report()?;
    let mut man = RunManifest::new("demo", args);
    man.param("lambda", r.lambda);
    man.param("gamma", r.gamma);
    man.param("spacing", structret::metrics::letters::LETTER_SPACING);

    say!(out, "chamfer(P,F)        = {:.6}", r.cd_p_f);
    say!(out, "chamfer(P,R)        = {:.6}", r.cd_p_r);
    say!(out, "pre_gt(E,F)         = {:.6}", r.pregt_e_f);
    say!(out, "pre_gt(E,E_shift)   = {:.6}", r.pregt_e_eshift);
    say!(out, "score(P->R)         = {:.6}", r.score_p_r);
    say!(out, "score(P->F)         = {:.6}", r.score_p_f);
    say!(out, "score(E->E_shift)   = {:.6}", r.score_e_eshift);
    say!(out, "score(E->F)         = {:.6}", r.score_e_f);
    say!(out, "lambda = {}, gamma = {:.6}", r.lambda, r.gamma);
    let orderings = [
        ("chamfer(P,F) < chamfer(P,R)", r.cd_prefers_f()),
        ("pre_gt(E,F) < pre_gt(E,E_shift)", r.pregt_prefers_f()),
        ("score(P->R) > score(P->F)", r.score_prefers_r()),
        ("score(E->E_shift) > score(E->F)", r.score_prefers_eshift()),
    ];
    for (what, ok) in orderings {
        say!(out, "{what}: {}", verdict(ok));
    }
    let names = [
        "chamfer(P,F) = 25/72",
        "chamfer(P,R) = 1/2",
        "pre_gt(E,F) = 5/11",
        "pre_gt(E,E_shift) = 1/2",
    ];
    let lattice = r.lattice_values();
    let matched = r.matches_fractions();
    for i in 0..4 {
        let tag = if matched[i] { "matched" } else { "unmatched" };
        say!(out, "{} cells^2: {tag} (got {:.12})", names[i], lattice[i]);
    }

    man.time("total", t0);
    man.report = json!({
        "cd_p_f": r.cd_p_f, "cd_p_r": r.cd_p_r,
        "pregt_e_f": r.pregt_e_f, "pregt_e_eshift": r.pregt_e_eshift,
        "score_p_r": r.score_p_r, "score_p_f": r.score_p_f,
        "score_e_eshift": r.score_e_eshift, "score_e_f": r.score_e_f,
        "orderings": orderings.iter().map(|(w, ok)| json!({"ordering": w, "pass": ok})).collect::<Vec<_>>(),
        "fractions_matched": matched,
    });
    man.write(&manifest_path(manifest, None, "demo"))?;
    if orderings.iter().all(|(_, ok)| *ok) {
        Ok(())
    } else {
        Err(CliError::Data("counterexample orderings do not hold".into()))
    }
}

pub(crate) fn synth(
    a: &SynthArgs,
    args: &[String],
    manifest: Option<&Path>,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if a.count == 0 || a.points == 0 {
        return Err(CliError::Usage("--count and --points must be at least 1".into()));
    }
    let t0 = Instant::now();
    let mut man = RunManifest::new("synth", args);
    man.param("count", a.count);
    man.param("points", a.points);
    man.param("seed", a.seed);
    man.param("keep", a.keep);
    let cfg = SynthConfig {
        points: a.points,
        ..Default::default()
    };
    let mut gen = ShapeGenerator::new(cfg, a.seed);
    let mut crop_rng = ChaCha8Rng::seed_from_u64(a.seed);
    for _ in 0..a.count {
        let shape = gen.next_shape();
        let cat = shape.category.clone().unwrap_or_default();
        let path = a.output.join(&cat).join(format!("{}.xyz", shape.id));
        write_cloud(&path, &shape, None)?;
        man.output(&path);
        if let Some(dir) = &a.partial {
            let crop = half_space_crop(&shape, random_direction(&mut crop_rng), a.keep);
            let path = dir.join(&cat).join(format!("{}.xyz", shape.id));
            write_cloud(&path, &crop, None)?;
            man.output(&path);
        }
    }
    man.time("total", t0);
    man.write(&manifest_path(manifest, None, "synth"))?;
    say!(out, "wrote {} shapes to {}", a.count, a.output.display());
    Ok(())
}
