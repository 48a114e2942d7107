//! Shared fixtures for the criterion benches.

use structret::synth::{half_space_crop, ShapeGenerator, SynthConfig};
use structret::{build_database, extract_structure, Database, DatabaseParams, Point3};

/// Database of `entries` synthetic shapes built with K=64, λ=0.2. Shapes are
/// sampled with `points` points each.
pub fn synthetic_database(entries: usize, points: usize, seed: u64) -> Database {
    let mut gen = ShapeGenerator::new(
        SynthConfig {
            points,
            ..Default::default()
        },
        seed,
    );
    let clouds: Vec<_> = (0..entries).map(|_| gen.next_shape()).collect();
    build_database(&clouds, &DatabaseParams::new(64, 0.2), seed)
        .expect("valid parameters")
        .database
}

/// 32 structure points of a half crop of a fresh synthetic shape.
pub fn half_crop_query(seed: u64) -> Vec<Point3> {
    let shape = ShapeGenerator::new(SynthConfig::default(), seed).next_shape();
    let crop = half_space_crop(&shape, Point3::new(0.0, 1.0, 0.0), 0.5);
    extract_structure(&crop, 32, seed)
        .expect("crop has >= 32 points")
        .centroids()
}
