//! The structure database: complete shapes reduced to structure clouds and
//! envelopes, plus lossless JSON persistence.
//!
//! Every real number on disk is written twice: as the hexadecimal IEEE-754
//! bit pattern (authoritative) and as a decimal for people reading the file.

use std::collections::HashSet;
use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{build_envelope, normalize_variances, peak_value, Component, Envelope, DEFAULT_VARIANCE_FLOOR};
use crate::error::{Error, Result};
use crate::pointcloud::{Point3, PointCloud};
use crate::structure::{extract_structure, StructureCloud, StructurePoint};

pub const FORMAT_VERSION: u32 = 1;

/// Default rejection threshold as a fraction of one component's peak.
pub const DEFAULT_GAMMA_FRACTION: f64 = 0.05;

pub fn default_gamma(lambda: f64) -> f64 {
    DEFAULT_GAMMA_FRACTION * peak_value(lambda)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DatabaseEntry {
    pub entry_id: String,
    pub category: String,
    pub structure: StructureCloud,
    pub envelope: Envelope,
    pub source_path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Database {
    pub entries: Vec<DatabaseEntry>,
    pub k: usize,
    pub lambda: f64,
    pub floor: f64,
    pub gamma_default: f64,
    pub format_version: u32,
}

/// Shared parameters of a database.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DatabaseParams {
    pub k: usize,
    pub lambda: f64,
    pub floor: f64,
    pub gamma_default: f64,
}

impl DatabaseParams {
    pub fn new(k: usize, lambda: f64) -> Self {
        Self {
            k,
            lambda,
            floor: DEFAULT_VARIANCE_FLOOR,
            gamma_default: default_gamma(lambda),
        }
    }
}

/// Output of [`build_database`]: the database and the clouds that were left out.
#[derive(Debug)]
pub struct BuildReport {
    pub database: Database,
    pub skipped: Vec<(String, Error)>,
}

const UNCATEGORIZED: &str = "";

/// Extracts `K` structure points per cloud and builds its envelope. Clouds
/// that cannot be processed (too few points, repeated id) are skipped and
/// reported rather than failing the whole build.
pub fn build_database(clouds: &[PointCloud], params: &DatabaseParams, seed: u64) -> Result<BuildReport> {
    if params.k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if !(params.lambda > 0.0) || !(params.floor > 0.0) || !(params.gamma_default >= 0.0) {
        return Err(Error::InvalidParameter(format!("{params:?}")));
    }

    let built: Vec<Result<DatabaseEntry>> = clouds
        .par_iter()
        .map(|cloud| {
            if cloud.len() < params.k {
                return Err(Error::InvalidClusterCount {
                    k: params.k,
                    points: cloud.len(),
                });
            }
            let structure = extract_structure(cloud, params.k, seed)?;
            let envelope = build_envelope(&structure, params.lambda, params.floor)?;
            Ok(DatabaseEntry {
                entry_id: cloud.id.clone(),
                category: cloud.category.clone().unwrap_or_else(|| UNCATEGORIZED.to_string()),
                structure,
                envelope,
                source_path: cloud.source.clone().unwrap_or_default(),
            })
        })
        .collect();

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for (cloud, res) in clouds.iter().zip(built) {
        match res {
            Ok(entry) if !seen.insert(entry.entry_id.clone()) => {
                skipped.push((cloud.id.clone(), Error::DuplicateEntry(entry.entry_id)));
            }
            Ok(entry) => entries.push(entry),
            Err(e) => skipped.push((cloud.id.clone(), e)),
        }
    }

    Ok(BuildReport {
        database: Database {
            entries,
            k: params.k,
            lambda: params.lambda,
            floor: params.floor,
            gamma_default: params.gamma_default,
            format_version: FORMAT_VERSION,
        },
        skipped,
    })
}

impl Database {
    pub fn params(&self) -> DatabaseParams {
        DatabaseParams {
            k: self.k,
            lambda: self.lambda,
            floor: self.floor,
            gamma_default: self.gamma_default,
        }
    }

    pub fn get(&self, entry_id: &str) -> Option<&DatabaseEntry> {
        self.entries.iter().find(|e| e.entry_id == entry_id)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn categories(&self) -> Vec<&str> {
        let mut cats: Vec<&str> = self.entries.iter().map(|e| e.category.as_str()).collect();
        cats.sort_unstable();
        cats.dedup();
        cats
    }

    /// Checks the invariants a loaded database must satisfy.
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Version {
                found: self.format_version,
                supported: FORMAT_VERSION,
            });
        }
        if !(self.lambda > 0.0) || !(self.floor > 0.0) || self.k == 0 {
            return Err(Error::Integrity(format!(
                "bad header k={} lambda={} floor={}",
                self.k, self.lambda, self.floor
            )));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(e.entry_id.as_str()) {
                return Err(Error::DuplicateEntry(e.entry_id.clone()));
            }
            if e.structure.k() != self.k || e.envelope.len() != self.k {
                return Err(Error::Integrity(format!(
                    "entry `{}` has {} structure points / {} components, expected {}",
                    e.entry_id,
                    e.structure.k(),
                    e.envelope.len(),
                    self.k
                )));
            }
            if e.envelope.lambda != self.lambda {
                return Err(Error::Integrity(format!(
                    "entry `{}` built with another lambda",
                    e.entry_id
                )));
            }
            for (s, c) in e.structure.points.iter().zip(&e.envelope.components) {
                let expect = normalize_variances(s.var, self.lambda, self.floor)?;
                let consistent = s.mu == c.mu && expect.iter().zip(&c.nvar).all(|(a, b)| ((a - b) / a).abs() <= 1e-9);
                if !consistent {
                    return Err(Error::Integrity(format!(
                        "entry `{}`: envelope does not match its structure",
                        e.entry_id
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Entries of one category; shared parameters are kept.
pub fn filter_category(db: &Database, category: &str) -> Database {
    Database {
        entries: db.entries.iter().filter(|e| e.category == category).cloned().collect(),
        ..db.clone_header()
    }
}

impl Database {
    fn clone_header(&self) -> Database {
        Database {
            entries: Vec::new(),
            k: self.k,
            lambda: self.lambda,
            floor: self.floor,
            gamma_default: self.gamma_default,
            format_version: self.format_version,
        }
    }
}

// ---- on-disk representation ----

#[derive(Serialize, Deserialize)]
struct Real {
    hex: String,
    dec: f64,
}

impl Real {
    fn new(v: f64) -> Self {
        Real {
            hex: format!("{:016x}", v.to_bits()),
            dec: v,
        }
    }

    fn get(&self) -> Result<f64> {
        let bits =
            u64::from_str_radix(&self.hex, 16).map_err(|_| Error::Malformed(format!("bad hex real `{}`", self.hex)))?;
        let v = f64::from_bits(bits);
        let agrees = v == self.dec || ((v - self.dec) / v).abs() <= 1e-12;
        if !v.is_finite() || !agrees {
            return Err(Error::Malformed(format!(
                "real `{}` does not match its decimal {}",
                self.hex, self.dec
            )));
        }
        Ok(v)
    }
}

#[derive(Serialize, Deserialize)]
struct Real3 {
    hex: [String; 3],
    dec: [f64; 3],
}

impl Real3 {
    fn new(v: [f64; 3]) -> Self {
        let r = v.map(Real::new);
        let [a, b, c] = r;
        Real3 {
            hex: [a.hex, b.hex, c.hex],
            dec: v,
        }
    }

    fn get(&self) -> Result<[f64; 3]> {
        let mut out = [0.0; 3];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = Real {
                hex: self.hex[i].clone(),
                dec: self.dec[i],
            }
            .get()?;
        }
        Ok(out)
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format_version: u32,
    k: usize,
    lambda: Real,
    floor: Real,
    gamma_default: Real,
}

#[derive(Serialize, Deserialize)]
struct StoredPoint {
    mu: Real3,
    var: Real3,
    nvar: Real3,
}

#[derive(Serialize, Deserialize)]
struct StoredEntry {
    entry_id: String,
    category: String,
    source_path: String,
    points: Vec<StoredPoint>,
}

#[derive(Serialize, Deserialize)]
struct StoredDatabase {
    header: Header,
    entries: Vec<StoredEntry>,
}

/// Serializes to the JSON database format.
pub fn database_to_json(db: &Database) -> Result<String> {
    let stored = StoredDatabase {
        header: Header {
            format_version: db.format_version,
            k: db.k,
            lambda: Real::new(db.lambda),
            floor: Real::new(db.floor),
            gamma_default: Real::new(db.gamma_default),
        },
        entries: db
            .entries
            .iter()
            .map(|e| StoredEntry {
                entry_id: e.entry_id.clone(),
                category: e.category.clone(),
                source_path: e.source_path.clone(),
                points: e
                    .structure
                    .points
                    .iter()
                    .zip(&e.envelope.components)
                    .map(|(s, c)| StoredPoint {
                        mu: Real3::new(s.mu.to_array()),
                        var: Real3::new(s.var),
                        nvar: Real3::new(c.nvar),
                    })
                    .collect(),
            })
            .collect(),
    };
    let mut text = serde_json::to_string_pretty(&stored)?;
    text.push('\n');
    Ok(text)
}

/// Parses and validates the JSON database format.
pub fn database_from_json(text: &str) -> Result<Database> {
    // Check the version before the full schema so old files get a clear error.
    let probe: serde_json::Value = serde_json::from_str(text)?;
    let version = probe
        .get("header")
        .and_then(|h| h.get("format_version"))
        .and_then(|v| v.as_u64())
        .ok_or_else(|| Error::Malformed("missing header.format_version".into()))?;
    if version != FORMAT_VERSION as u64 {
        return Err(Error::Version {
            found: version as u32,
            supported: FORMAT_VERSION,
        });
    }

    let stored: StoredDatabase = serde_json::from_value(probe)?;
    let lambda = stored.header.lambda.get()?;
    let mut entries = Vec::with_capacity(stored.entries.len());
    for se in stored.entries {
        let mut points = Vec::with_capacity(se.points.len());
        let mut components = Vec::with_capacity(se.points.len());
        for sp in &se.points {
            let mu = Point3::from_array(sp.mu.get()?);
            points.push(StructurePoint { mu, var: sp.var.get()? });
            components.push(Component {
                mu,
                nvar: sp.nvar.get()?,
            });
        }
        entries.push(DatabaseEntry {
            structure: StructureCloud {
                points,
                source_id: se.entry_id.clone(),
            },
            envelope: Envelope {
                components,
                lambda,
                source_id: se.entry_id.clone(),
            },
            entry_id: se.entry_id,
            category: se.category,
            source_path: se.source_path,
        });
    }
    let db = Database {
        entries,
        k: stored.header.k,
        lambda,
        floor: stored.header.floor.get()?,
        gamma_default: stored.header.gamma_default.get()?,
        format_version: stored.header.format_version,
    };
    db.validate()?;
    Ok(db)
}

pub fn save_database(db: &Database, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, database_to_json(db)?)?;
    Ok(())
}

pub fn load_database(path: impl AsRef<Path>) -> Result<Database> {
    database_from_json(&fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{ShapeGenerator, SynthConfig};

    fn clouds(n: usize) -> Vec<PointCloud> {
        let mut g = ShapeGenerator::new(
            SynthConfig {
                points: 256,
                ..Default::default()
            },
            5,
        );
        (0..n).map(|_| g.next_shape()).collect()
    }

    #[test]
    fn builds_one_entry_per_cloud() {
        let report = build_database(&clouds(10), &DatabaseParams::new(64, 0.2), 7).unwrap();
        assert!(report.skipped.is_empty());
        assert_eq!(report.database.len(), 10);
        assert!(report
            .database
            .entries
            .iter()
            .all(|e| e.structure.k() == 64 && e.envelope.len() == 64));
        report.database.validate().unwrap();
    }

    #[test]
    fn small_and_duplicate_clouds_are_skipped() {
        let mut cs = clouds(3);
        let small = PointCloud::new(cs[0].points()[..32].to_vec(), "small").unwrap();
        cs.push(small);
        cs.push(cs[1].clone());
        let report = build_database(&cs, &DatabaseParams::new(64, 0.2), 0).unwrap();
        assert_eq!(report.database.len(), 3);
        assert_eq!(report.skipped.len(), 2);
        assert!(matches!(
            report.skipped[0].1,
            Error::InvalidClusterCount { k: 64, points: 32 }
        ));
        assert!(matches!(report.skipped[1].1, Error::DuplicateEntry(_)));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let db = build_database(&clouds(10), &DatabaseParams::new(16, 0.2), 1)
            .unwrap()
            .database;
        let text = database_to_json(&db).unwrap();
        let back = database_from_json(&text).unwrap();
        assert_eq!(back, db);
        assert_eq!(database_to_json(&back).unwrap(), text);
    }

    #[test]
    fn rebuild_is_byte_identical() {
        let cs = clouds(4);
        let p = DatabaseParams::new(16, 0.2);
        let a = database_to_json(&build_database(&cs, &p, 9).unwrap().database).unwrap();
        let b = database_to_json(&build_database(&cs, &p, 9).unwrap().database).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn load_rejects_bad_files() {
        let db = build_database(&clouds(2), &DatabaseParams::new(8, 0.2), 1)
            .unwrap()
            .database;
        let text = database_to_json(&db).unwrap();

        let v2 = text.replacen("\"format_version\": 1", "\"format_version\": 2", 1);
        assert!(matches!(
            database_from_json(&v2),
            Err(Error::Version { found: 2, supported: 1 })
        ));

        let dup = text.replacen(
            &format!("\"{}\"", db.entries[1].entry_id),
            &format!("\"{}\"", db.entries[0].entry_id),
            1,
        );
        assert!(matches!(database_from_json(&dup), Err(Error::DuplicateEntry(_))));

        assert!(database_from_json("{").is_err());
        assert!(matches!(
            database_from_json("{\"header\": {}}"),
            Err(Error::Malformed(_))
        ));

        let mut tampered = db.clone();
        tampered.entries[0].envelope.components[0].nvar[0] *= 2.0;
        let bad = database_to_json(&tampered).unwrap();
        assert!(matches!(database_from_json(&bad), Err(Error::Integrity(_))));
    }

    #[test]
    fn category_filter() {
        let db = build_database(&clouds(12), &DatabaseParams::new(8, 0.2), 1)
            .unwrap()
            .database;
        let cat = db.entries[0].category.clone();
        let f = filter_category(&db, &cat);
        assert!(!f.is_empty());
        assert!(f.entries.iter().all(|e| e.category == cat));
        assert_eq!(f.params(), db.params());
        assert_eq!(filter_category(&f, &cat), f);
        assert!(filter_category(&db, "no-such-category").is_empty());
    }
}
