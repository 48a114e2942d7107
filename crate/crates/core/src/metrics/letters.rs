//! Planar letter grids showing where Chamfer and one-sided Chamfer go wrong
//! as retrieval scores, and how the thresholded envelope score behaves on
//! the same inputs.
//!
//! The letters are 3×5 bitmaps on an integer lattice scaled by
//! [`LETTER_SPACING`] so they fit the unit square. `P` is a subset of `R`;
//! `E_shift` is `E` moved by half a cell along x and y.

use crate::database::default_gamma;
use crate::envelope::{build_envelope, DEFAULT_VARIANCE_FLOOR};
use crate::error::Result;
use crate::metrics::{chamfer, pre_gt};
use crate::pointcloud::{Point3, PointCloud};
use crate::retrieval::match_score;
use crate::structure::{StructureCloud, StructurePoint};

/// Lattice spacing of the letter grids (model units).
pub const LETTER_SPACING: f64 = 0.25;
/// Envelope scale used when scoring the letters: 0.8 cells.
pub const LETTER_LAMBDA: f64 = 0.8 * LETTER_SPACING;

const P: [&str; 5] = ["XX.", "X.X", "XX.", "X..", "X.."];
const F: [&str; 5] = ["XXX", "X..", "XXX", "X..", "X.."];
const R: [&str; 5] = ["XX.", "X.X", "XX.", "XX.", "X.X"];
const E: [&str; 5] = ["XXX", "X..", "XXX", "X..", "XXX"];

#[derive(Debug, Clone, PartialEq)]
pub struct LetterGrids {
    pub p: PointCloud,
    pub f: PointCloud,
    pub r: PointCloud,
    pub e: PointCloud,
    pub e_shift: PointCloud,
}

/// Top bitmap row is the highest y; x grows to the right; z = 0.
fn bitmap(rows: &[&str; 5], name: &str, offset: (f64, f64)) -> PointCloud {
    let mut pts = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        let y = (rows.len() - 1 - r) as f64;
        for (c, ch) in row.chars().enumerate() {
            if ch == 'X' {
                pts.push(Point3::new(
                    (c as f64 + offset.0) * LETTER_SPACING,
                    (y + offset.1) * LETTER_SPACING,
                    0.0,
                ));
            }
        }
    }
    PointCloud::new(pts, name).expect("letters are non-empty")
}

pub fn letter_grids() -> LetterGrids {
    LetterGrids {
        p: bitmap(&P, "P", (0.0, 0.0)),
        f: bitmap(&F, "F", (0.0, 0.0)),
        r: bitmap(&R, "R", (0.0, 0.0)),
        e: bitmap(&E, "E", (0.0, 0.0)),
        e_shift: bitmap(&E, "E_shift", (0.5, 0.5)),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CounterexampleReport {
    pub cd_p_f: f64,
    pub cd_p_r: f64,
    pub pregt_e_f: f64,
    pub pregt_e_eshift: f64,
    pub score_p_r: f64,
    pub score_p_f: f64,
    pub score_e_eshift: f64,
    pub score_e_f: f64,
    pub lambda: f64,
    pub gamma: f64,
}

impl CounterexampleReport {
    /// Chamfer prefers F over the true superset R.
    pub fn cd_prefers_f(&self) -> bool {
        self.cd_p_f < self.cd_p_r
    }

    /// One-sided Chamfer prefers F over the shifted E.
    pub fn pregt_prefers_f(&self) -> bool {
        self.pregt_e_f < self.pregt_e_eshift
    }

    pub fn score_prefers_r(&self) -> bool {
        self.score_p_r > self.score_p_f
    }

    pub fn score_prefers_eshift(&self) -> bool {
        self.score_e_eshift > self.score_e_f
    }

    /// Values expressed in squared lattice cells, for comparison with the
    /// closed-form fractions 25/72, 1/2, 5/11 and 1/2.
    pub fn lattice_values(&self) -> [f64; 4] {
        let s2 = LETTER_SPACING * LETTER_SPACING;
        [self.cd_p_f, self.cd_p_r, self.pregt_e_f, self.pregt_e_eshift].map(|v| v / s2)
    }

    pub fn matches_fractions(&self) -> [bool; 4] {
        let want = [25.0 / 72.0, 0.5, 5.0 / 11.0, 0.5];
        let got = self.lattice_values();
        [0, 1, 2, 3].map(|i| (got[i] - want[i]).abs() <= 1e-12)
    }
}

/// Each grid point becomes a zero-variance structure point.
fn as_structure(cloud: &PointCloud) -> StructureCloud {
    StructureCloud {
        points: cloud
            .points()
            .iter()
            .map(|&mu| StructurePoint { mu, var: [0.0; 3] })
            .collect(),
        source_id: cloud.id.clone(),
    }
}

fn letter_score(query: &PointCloud, target: &PointCloud, lambda: f64, gamma: f64) -> Result<f64> {
    let env = build_envelope(&as_structure(target), lambda, DEFAULT_VARIANCE_FLOOR)?;
    Ok(match_score(query.points(), &env, gamma)?.score)
}

/// Evaluates all four comparisons with the default threshold for
/// [`LETTER_LAMBDA`].
pub fn counterexample_report() -> Result<CounterexampleReport> {
    let g = letter_grids();
    let lambda = LETTER_LAMBDA;
    let gamma = default_gamma(lambda);
    Ok(CounterexampleReport {
        cd_p_f: chamfer(g.p.points(), g.f.points())?,
        cd_p_r: chamfer(g.p.points(), g.r.points())?,
        pregt_e_f: pre_gt(g.e.points(), g.f.points())?,
        pregt_e_eshift: pre_gt(g.e.points(), g.e_shift.points())?,
        score_p_r: letter_score(&g.p, &g.r, lambda, gamma)?,
        score_p_f: letter_score(&g.p, &g.f, lambda, gamma)?,
        score_e_eshift: letter_score(&g.e, &g.e_shift, lambda, gamma)?,
        score_e_f: letter_score(&g.e, &g.f, lambda, gamma)?,
        lambda,
        gamma,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn p_is_subset_of_r() {
        let g = letter_grids();
        assert!(g.p.points().iter().all(|p| g.r.points().contains(p)));
        assert_eq!((g.p.len(), g.f.len(), g.r.len(), g.e.len()), (8, 9, 10, 11));
    }

    #[test]
    fn shift_is_uniform() {
        let g = letter_grids();
        let d = Point3::new(0.5 * LETTER_SPACING, 0.5 * LETTER_SPACING, 0.0);
        for (a, b) in g.e.points().iter().zip(g.e_shift.points()) {
            assert_eq!(*a + d, *b);
        }
    }

    #[test]
    fn orderings_and_fractions() {
        let r = counterexample_report().unwrap();
        assert!(r.cd_prefers_f());
        assert!(r.pregt_prefers_f());
        assert!(r.score_prefers_r());
        assert!(r.score_prefers_eshift());
        assert_eq!(r.matches_fractions(), [true; 4]);
        // F misses part of P's bowl and E's bottom bar entirely
        assert_eq!(r.score_p_f, 0.0);
        assert_eq!(r.score_e_f, 0.0);
    }
}
