//! Radial profiles and spatial lattices of predictions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::posterior::PredictiveEstimate;
use crate::synthdata::{lrfd, lrfd_at, GammaClassSpec, OodGrid};

/// One radial bin. Statistics are NaN when the bin is empty.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProfileRow {
    pub r_lo: f64,
    pub r_hi: f64,
    pub r_center: f64,
    pub count: usize,
    pub mean_estimate: f64,
    pub min_estimate: f64,
    pub max_estimate: f64,
    pub mean_uncertainty: f64,
    /// Exact class-2 probability at the bin center.
    pub lrfd_center: f64,
}

/// Bins predictions by radius into `bins` equal bins on [0, r_max).
/// Points at or beyond `r_max` are ignored.
pub fn radial_profile(
    points: &[[f64; 2]],
    estimates: &[PredictiveEstimate],
    spec: &GammaClassSpec,
    bins: usize,
    r_max: f64,
) -> Result<Vec<ProfileRow>> {
    if points.len() != estimates.len() {
        return Err(Error::LengthMismatch {
            left: points.len(),
            right: estimates.len(),
        });
    }
    if bins == 0 || !(r_max > 0.0) {
        return Err(Error::param("profile needs at least one bin and a positive radius"));
    }
    let width = r_max / bins as f64;
    let mut members: Vec<Vec<PredictiveEstimate>> = vec![Vec::new(); bins];
    for (p, e) in points.iter().zip(estimates) {
        let r = p[0].hypot(p[1]);
        let b = (r / width).floor();
        if b < bins as f64 {
            members[b as usize].push(*e);
        }
    }
    members
        .iter()
        .enumerate()
        .map(|(b, m)| {
            let r_lo = b as f64 * width;
            let r_center = r_lo + 0.5 * width;
            summarize(r_lo, r_lo + width, r_center, m, lrfd(r_center, spec)?)
        })
        .collect()
}

/// One row per OOD radius; min and max run over the polar angles.
pub fn ood_profile(grid: &OodGrid, estimates: &[PredictiveEstimate], spec: &GammaClassSpec) -> Result<Vec<ProfileRow>> {
    if grid.len() != estimates.len() {
        return Err(Error::LengthMismatch {
            left: grid.len(),
            right: estimates.len(),
        });
    }
    let nr = grid.radii.len();
    grid.radii
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let m: Vec<PredictiveEstimate> = (0..grid.angles.len()).map(|a| estimates[a * nr + i]).collect();
            summarize(r, r, r, &m, lrfd(r, spec)?)
        })
        .collect()
}

fn summarize(r_lo: f64, r_hi: f64, r_center: f64, m: &[PredictiveEstimate], lrfd_center: f64) -> Result<ProfileRow> {
    let n = m.len();
    let (mean, min, max, unc) = if n == 0 {
        (f64::NAN, f64::NAN, f64::NAN, f64::NAN)
    } else {
        let means = m.iter().map(|e| e.mean);
        (
            means.clone().sum::<f64>() / n as f64,
            means.clone().fold(f64::INFINITY, f64::min),
            means.fold(f64::NEG_INFINITY, f64::max),
            m.iter().map(|e| e.uncertainty).sum::<f64>() / n as f64,
        )
    };
    Ok(ProfileRow {
        r_lo,
        r_hi,
        r_center,
        count: n,
        mean_estimate: mean,
        min_estimate: min,
        max_estimate: max,
        mean_uncertainty: unc,
        lrfd_center,
    })
}

/// Square lattice of `side`² points covering [-extent, extent]².
pub fn lattice(side: usize, extent: f64) -> Vec<[f64; 2]> {
    if side < 2 {
        return vec![[0.0, 0.0]; side];
    }
    let step = 2.0 * extent / (side - 1) as f64;
    (0..side)
        .flat_map(|i| (0..side).map(move |j| [-extent + i as f64 * step, -extent + j as f64 * step]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpatialRow {
    pub x1: f64,
    pub x2: f64,
    pub mean: f64,
    pub uncertainty: f64,
    pub lrfd: f64,
}

pub fn spatial_rows(points: &[[f64; 2]], estimates: &[PredictiveEstimate], spec: &GammaClassSpec) -> Result<Vec<SpatialRow>> {
    points
        .iter()
        .zip(estimates)
        .map(|(p, e)| {
            Ok(SpatialRow {
                x1: p[0],
                x2: p[1],
                mean: e.mean,
                uncertainty: e.uncertainty,
                lrfd: lrfd_at(*p, spec)?,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthdata::{make_ood_grid, DatasetId};

    fn est(mean: f64, u: f64) -> PredictiveEstimate {
        PredictiveEstimate::new(mean, u).unwrap()
    }

    #[test]
    fn bins_collect_their_points() {
        let spec = DatasetId::A.spec();
        let pts = [[1.0, 0.0], [0.0, 1.5], [3.0, 4.0], [100.0, 0.0]];
        let es = [est(0.2, 0.1), est(0.4, 0.3), est(0.9, 0.0), est(0.5, 0.5)];
        let rows = radial_profile(&pts, &es, &spec, 5, 10.0).unwrap();
        assert_eq!(rows.len(), 5);
        assert_eq!(rows[0].count, 2);
        assert!((rows[0].mean_estimate - 0.3).abs() < 1e-15);
        assert_eq!((rows[0].min_estimate, rows[0].max_estimate), (0.2, 0.4));
        assert!((rows[0].mean_uncertainty - 0.2).abs() < 1e-15);
        assert_eq!(rows[2].count, 1);
        assert!(rows[1].mean_estimate.is_nan());
        assert_eq!(rows.iter().map(|r| r.count).sum::<usize>(), 3);
        assert_eq!(rows[0].lrfd_center, lrfd(1.0, &spec).unwrap());
    }

    #[test]
    fn ood_rows_span_angles() {
        let spec = DatasetId::A.spec();
        let grid = make_ood_grid();
        let es: Vec<_> = grid.points.iter().map(|p| est(p.phi / 10.0, 0.0)).collect();
        let rows = ood_profile(&grid, &es, &spec).unwrap();
        assert_eq!(rows.len(), grid.radii.len());
        for r in rows {
            assert_eq!(r.count, grid.angles.len());
            assert_eq!(r.min_estimate, 0.0);
            assert!((r.max_estimate - grid.angles[4] / 10.0).abs() < 1e-15);
        }
    }

    #[test]
    fn lattice_corners() {
        let l = lattice(3, 60.0);
        assert_eq!(l.len(), 9);
        assert_eq!(l[0], [-60.0, -60.0]);
        assert_eq!(l[4], [0.0, 0.0]);
        assert_eq!(l[8], [60.0, 60.0]);
    }
}
