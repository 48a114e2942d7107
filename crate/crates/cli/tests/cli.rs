use std::fs;
use std::path::Path;
use std::process::Command;

use structret::synth::{half_space_crop, ShapeGenerator, SynthConfig};
use structret::{parse_ply, parse_xyz, write_xyz, Point3};
use structret_cli::{main_with_args, EXIT_DATA, EXIT_OK, EXIT_REJECTED, EXIT_USAGE};

fn run(args: &[&str]) -> (u8, String, String) {
    let args: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    let (mut out, mut err) = (Vec::new(), Vec::new());
    let code = main_with_args(&args, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn s(p: &Path) -> String {
    p.display().to_string()
}

/// Five categories of shapes, two each, under `dir/shapes/<kind>/`.
fn shape_dir(dir: &Path) -> std::path::PathBuf {
    let mut g = ShapeGenerator::new(
        SynthConfig {
            points: 1024,
            ..Default::default()
        },
        11,
    );
    let root = dir.join("shapes");
    for _ in 0..10 {
        let c = g.next_shape();
        let sub = root.join(c.category.as_deref().unwrap());
        fs::create_dir_all(&sub).unwrap();
        fs::write(sub.join(format!("{}.xyz", c.id)), write_xyz(&c)).unwrap();
    }
    root
}

fn build(dir: &Path, extra: &[&str]) -> std::path::PathBuf {
    let shapes = shape_dir(dir);
    let db = dir.join("db.json");
    let (shapes_s, db_s) = (s(&shapes), s(&db));
    let mut args = vec!["build-db", "--input", &shapes_s, "--output", &db_s];
    args.extend_from_slice(extra);
    let (code, _, err) = run(&args);
    assert_eq!(code, EXIT_OK, "{err}");
    db
}

#[test]
fn build_db_records_categories_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let db = build(dir.path(), &["--k", "32", "--seed", "7"]);
    let first = fs::read(&db).unwrap();
    let loaded = structret::load_database(&db).unwrap();
    let cats = loaded.categories();
    assert_eq!(cats, vec!["blobs", "box", "chair", "lshape", "table"]);
    assert!(loaded.get("chair/chair-0003").is_some());
    assert!(dir.path().join("db.manifest.json").exists());

    let (code, _, _) = run(&[
        "build-db",
        "--input",
        &s(&dir.path().join("shapes")),
        "--output",
        &s(&db),
        "--k",
        "32",
        "--seed",
        "7",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(fs::read(&db).unwrap(), first);
}

#[test]
fn build_db_rejects_empty_and_missing_dirs() {
    let dir = tempfile::tempdir().unwrap();
    let empty = dir.path().join("empty");
    fs::create_dir(&empty).unwrap();
    let out = s(&dir.path().join("db.json"));
    assert_eq!(run(&["build-db", "--input", &s(&empty), "--output", &out]).0, EXIT_DATA);
    assert_eq!(
        run(&["build-db", "--input", &s(&dir.path().join("nope")), "--output", &out]).0,
        EXIT_DATA
    );
    assert!(!dir.path().join("db.json").exists());
}

#[test]
fn build_db_reports_bad_files() {
    let dir = tempfile::tempdir().unwrap();
    let shapes = shape_dir(dir.path());
    fs::write(shapes.join("broken.xyz"), "1 2\n").unwrap();
    fs::write(shapes.join("notes.txt"), "ignored").unwrap();
    let db = dir.path().join("db.json");
    let (code, _, err) = run(&["build-db", "--input", &s(&shapes), "--output", &s(&db)]);
    assert_eq!(code, EXIT_OK);
    assert!(err.contains("skipped broken"), "{err}");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("db.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["report"]["entries"], 10);
    assert_eq!(m["report"]["skipped"][0]["id"], "broken");
}

fn half_crop(dir: &Path, src: &str) -> String {
    let text = fs::read_to_string(dir.join("shapes").join(src)).unwrap();
    let full = parse_xyz(&text, "full").unwrap();
    let crop = half_space_crop(&full, Point3::new(0.3, 1.0, -0.2), 0.5);
    let path = dir.join("partial.xyz");
    fs::write(&path, write_xyz(&crop)).unwrap();
    s(&path)
}

#[test]
fn complete_retrieves_source_and_writes_requested_size() {
    let dir = tempfile::tempdir().unwrap();
    let db = s(&build(dir.path(), &[]));
    let input = half_crop(dir.path(), "table/table-0002.xyz");

    let out = dir.path().join("done.ply");
    let (code, stdout, err) = run(&[
        "complete",
        "--db",
        &db,
        "--input",
        &input,
        "--output",
        &s(&out),
        "--missing-rate",
        "0.5",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(stdout.contains("1     table/table-0002"), "{stdout}");
    let cloud = parse_ply(&fs::read_to_string(&out).unwrap(), "o").unwrap();
    assert_eq!(cloud.len(), 2048);
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("done.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["report"]["matched_entry"], "table/table-0002");
    assert_eq!(m["report"]["ranking"].as_array().unwrap().len(), 5);
    assert_eq!(m["parameters"]["k"], 64);

    let small = dir.path().join("small.xyz");
    let (code, _, _) = run(&[
        "complete",
        "--db",
        &db,
        "--input",
        &input,
        "--output",
        &s(&small),
        "--missing-rate",
        "0.5",
        "--points",
        "1024",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(
        parse_xyz(&fs::read_to_string(&small).unwrap(), "o").unwrap().len(),
        1024
    );
}

#[test]
fn complete_argument_errors_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let db = s(&build(dir.path(), &["--k", "16"]));
    let input = half_crop(dir.path(), "box/box-0005.xyz");
    let out = s(&dir.path().join("o.ply"));
    let base = ["complete", "--db", &db, "--input", &input, "--output", &out];
    let with = |extra: &[&str]| {
        let mut a = base.to_vec();
        a.extend_from_slice(extra);
        run(&a).0
    };
    assert_eq!(with(&["--missing-rate", "1.0"]), EXIT_USAGE);
    assert_eq!(with(&["--missing-rate", "-0.1"]), EXIT_USAGE);
    assert_eq!(with(&[]), EXIT_USAGE);
    assert_eq!(with(&["--missing-rate", "0.5", "--estimate-rate"]), EXIT_USAGE);
    assert_eq!(with(&["--missing-rate", "0.5", "--gamma", "-1"]), EXIT_USAGE);
    assert_eq!(
        run(&[
            "complete",
            "--db",
            &db,
            "--input",
            &input,
            "--output",
            "o.obj",
            "--missing-rate",
            "0.5"
        ])
        .0,
        EXIT_USAGE
    );
    assert_eq!(with(&["--missing-rate", "0.5", "--category", "nothing"]), EXIT_DATA);
}

#[test]
fn far_away_query_is_rejected_by_everything() {
    let dir = tempfile::tempdir().unwrap();
    let db = s(&build(dir.path(), &["--k", "16"]));
    let far: Vec<Point3> = (0..200)
        .map(|i| Point3::new(50.0 + (i % 10) as f64 * 0.01, 50.0 + (i / 10) as f64 * 0.01, 50.0))
        .collect();
    let input = dir.path().join("far.xyz");
    fs::write(&input, write_xyz(&structret::PointCloud::new(far, "far").unwrap())).unwrap();
    let out = dir.path().join("far-out.ply");
    let (code, stdout, err) = run(&[
        "complete",
        "--db",
        &db,
        "--input",
        &s(&input),
        "--output",
        &s(&out),
        "--missing-rate",
        "0.5",
    ]);
    assert_eq!(code, EXIT_REJECTED, "{err}");
    assert!(stdout.contains("rejected"));
    assert!(err.contains("rejected the query"));
    assert!(!out.exists());
    assert!(dir.path().join("far-out.manifest.json").exists());
}

#[test]
fn estimate_rate_with_custom_grid() {
    let dir = tempfile::tempdir().unwrap();
    let db = s(&build(dir.path(), &[]));
    let input = half_crop(dir.path(), "lshape/lshape-0001.xyz");
    let out = dir.path().join("est.xyz");
    let (code, stdout, err) = run(&[
        "complete",
        "--db",
        &db,
        "--input",
        &input,
        "--output",
        &s(&out),
        "--estimate-rate",
        "--grid",
        "0.25,0.5,0.75",
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert!(stdout.contains("missing rate: 0.5"), "{stdout}");
    let m: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("est.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["report"]["sweep"].as_array().unwrap().len(), 3);
    assert_eq!(m["parameters"]["grid"], serde_json::json!([0.25, 0.5, 0.75]));
}

#[test]
fn eval_values_and_errors() {
    let dir = tempfile::tempdir().unwrap();
    let w = |name: &str, text: &str| {
        let p = dir.path().join(name);
        fs::write(&p, text).unwrap();
        s(&p)
    };
    let a = w("a.xyz", "0 0 0\n");
    let b = w("b.xyz", "1 0 0\n");
    let three = w("three.xyz", "0 0 0\n1 0 0\n2 0 0\n");
    let four = w("four.xyz", "0 0 0\n1 0 0\n2 0 0\n3 0 0\n");
    let m = s(&dir.path().join("eval.json"));

    let (code, out, _) = run(&["eval", &a, &b, "--metric", "cd", "--manifest", &m]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(out, "cd: 2.000000\nmetric=cd value=2\n");

    let (_, out, _) = run(&["eval", &three, &three, "--manifest", &m]);
    assert!(out.starts_with("cd: 0.000000\n"));

    let (code, _, err) = run(&["eval", &three, &four, "--metric", "emd", "--manifest", &m]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("emd needs clouds of equal size"), "{err}");

    let (code, out, _) = run(&["eval", &three, &four, "--metric", "pregt", "--manifest", &m]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("metric=pregt value=0"));
    assert_eq!(run(&["eval", &a, &b, "--metric", "kl", "--manifest", &m]).0, EXIT_USAGE);
}

#[test]
fn export_envelope_colors_peaks_deepest() {
    let dir = tempfile::tempdir().unwrap();
    let db = s(&build(dir.path(), &[]));
    let out = dir.path().join("heat.ply");
    let (code, _, err) = run(&[
        "export-envelope",
        "--db",
        &db,
        "--entry",
        "box/box-0000",
        "--output",
        &s(&out),
    ]);
    assert_eq!(code, EXIT_OK, "{err}");
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.contains("property uchar red"));
    let rows: Vec<Vec<f64>> = text
        .split("end_header\n")
        .nth(1)
        .unwrap()
        .lines()
        .map(|l| l.split_whitespace().map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 1024);
    // green channel 0 is the deepest color; it sits next to a structure centroid
    let loaded = structret::load_database(dir.path().join("db.json")).unwrap();
    let entry = loaded.get("box/box-0000").unwrap();
    let deep = rows.iter().find(|r| r[4] == 0.0).expect("a deepest sample");
    let p = Point3::new(deep[0], deep[1], deep[2]);
    let nearest = entry
        .structure
        .points
        .iter()
        .map(|sp| sp.mu.dist(&p))
        .fold(f64::INFINITY, f64::min);
    assert!(nearest < 0.1, "{nearest}");

    let grid = dir.path().join("grid.ply");
    let (code, _, _) = run(&[
        "export-envelope",
        "--db",
        &db,
        "--entry",
        "box/box-0000",
        "--output",
        &s(&grid),
        "--on",
        "grid",
        "--resolution",
        "8",
    ]);
    assert_eq!(code, EXIT_OK);
    assert_eq!(parse_ply(&fs::read_to_string(&grid).unwrap(), "g").unwrap().len(), 512);

    let (code, _, err) = run(&["export-envelope", "--db", &db, "--entry", "nope", "--output", &s(&out)]);
    assert_eq!(code, EXIT_DATA);
    assert!(err.contains("no entry `nope`"));
}

#[test]
fn demo_passes_all_orderings() {
    let dir = tempfile::tempdir().unwrap();
    let m = s(&dir.path().join("demo.json"));
    let (code, out, _) = run(&["demo", "--manifest", &m]);
    assert_eq!(code, EXIT_OK);
    assert!(out.contains("chamfer(P,F) < chamfer(P,R): PASS"));
    assert!(out.contains("score(P->R) > score(P->F): PASS"));
    assert!(out.contains("score(E->E_shift) > score(E->F): PASS"));
    assert_eq!(out.matches("PASS").count(), 4);
    assert_eq!(out.matches(": matched").count(), 4);
}

#[test]
fn rerun_reproduces_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let db = s(&build(dir.path(), &["--k", "32"]));
    let input = half_crop(dir.path(), "chair/chair-0003.xyz");
    let out = dir.path().join("c.xyz");
    let (code, _, _) = run(&[
        "complete",
        "--db",
        &db,
        "--input",
        &input,
        "--output",
        &s(&out),
        "--estimate-rate",
        "--seed",
        "3",
    ]);
    assert_eq!(code, EXIT_OK);
    let first = fs::read(&out).unwrap();
    fs::remove_file(&out).unwrap();
    let (code, _, err) = run(&["rerun", &s(&dir.path().join("c.manifest.json"))]);
    assert_eq!(code, EXIT_OK, "{err}");
    assert_eq!(fs::read(&out).unwrap(), first);

    let (code, _, _) = run(&["rerun", &s(&dir.path().join("missing.json"))]);
    assert_eq!(code, EXIT_DATA);
}

#[test]
fn synth_writes_shapes_and_crops() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let parts = dir.path().join("p");
    let m = s(&dir.path().join("m.json"));
    let (code, _, _) = run(&[
        "synth",
        "--output",
        &s(&out),
        "--partial",
        &s(&parts),
        "--count",
        "5",
        "--points",
        "400",
        "--keep",
        "0.25",
        "--manifest",
        &m,
    ]);
    assert_eq!(code, EXIT_OK);
    let crop = parse_xyz(&fs::read_to_string(parts.join("blobs/blobs-0004.xyz")).unwrap(), "c").unwrap();
    assert_eq!(crop.len(), 100);
    assert!(out.join("box/box-0000.xyz").exists());
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_structret");
    let dir = tempfile::tempdir().unwrap();
    let status = |args: &[&str]| Command::new(bin).args(args).current_dir(dir.path()).output().unwrap();

    let o = status(&["--version"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&o.stdout).contains(env!("CARGO_PKG_VERSION")));
    assert_eq!(status(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(status(&["eval", "nope.xyz", "nope2.xyz"]).status.code(), Some(2));
    let o = status(&["demo"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("demo.manifest.json").exists());
}
