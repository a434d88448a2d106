//! Sign of det D²G_p at the half-periods, read off in the ℘(p)-plane.
//!
//!   det D²G_p(ω_k/2) = (1/4π²)(π²/Imτ² − |℘(p − ω_k/2) − (π/Imτ − η1)|²)
//!
//! With ℘(p − ω_k/2) = e_k + (3e_k² − g2/4)/(℘(p) − e_k) the condition
//! becomes membership of ℘(p) in a disk B_k (or its complement, or a
//! half-plane when |α_k| = β_k), where
//!
//!   α_k = (π/Imτ − (η1 + e_k)) / (3e_k² − g2/4),   β_k = π / (|3e_k² − g2/4| Imτ).

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

const HALF_PLANE_TOL: f64 = 1e-9;
pub const DEFAULT_BAND: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Region {
    Disk {
        #[serde(with = "crate::cx")]
        center: Complex64,
        radius: f64,
    },
    /// {Re(α(z − e)) > 1/2}
    HalfPlane {
        #[serde(with = "crate::cx")]
        alpha: Complex64,
        #[serde(with = "crate::cx")]
        e: Complex64,
    },
}

impl Region {
    /// Signed distance to the boundary, positive inside.
    pub fn membership_distance(&self, z: Complex64) -> f64 {
        match *self {
            Region::Disk { center, radius } => radius - (z - center).norm(),
            Region::HalfPlane { alpha, e } => ((alpha * (z - e)).re - 0.5) / alpha.norm(),
        }
    }

    fn scale(&self) -> f64 {
        match *self {
            Region::Disk { radius, .. } => radius.max(1.0),
            Region::HalfPlane { .. } => 1.0,
        }
    }

    pub fn contains(&self, z: Complex64) -> bool {
        self.membership_distance(z) > 0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaBeta {
    #[serde(with = "crate::cx")]
    pub alpha: Complex64,
    pub beta: f64,
}

pub fn alpha_beta(lat: &Lattice, k: usize) -> Result<AlphaBeta> {
    let ek = lat.e(k);
    let d = 3.0 * ek * ek - lat.g2 / 4.0;
    if d.norm() == 0.0 {
        return Err(Error::Degenerate(format!("3e_{k}² − g2/4 vanishes")));
    }
    let t = lat.im_tau;
    Ok(AlphaBeta {
        alpha: (PI / t - (lat.eta1 + ek)) / d,
        beta: PI / (d.norm() * t),
    })
}

/// B0 = {|z − (π/Imτ − η1)| < π/Imτ}.
pub fn disk_b0(lat: &Lattice) -> Region {
    Region::Disk {
        center: PI / lat.im_tau - lat.eta1,
        radius: PI / lat.im_tau,
    }
}

pub fn disk_bk(lat: &Lattice, k: usize) -> Result<Region> {
    if k == 0 {
        return Ok(disk_b0(lat));
    }
    let ab = alpha_beta(lat, k)?;
    let ek = lat.e(k);
    let a2 = ab.alpha.norm_sqr();
    let b2 = ab.beta * ab.beta;
    if (ab.alpha.norm() - ab.beta).abs() <= HALF_PLANE_TOL * ab.beta {
        return Ok(Region::HalfPlane { alpha: ab.alpha, e: ek });
    }
    Ok(Region::Disk {
        center: ek + ab.alpha.conj() / (a2 - b2),
        radius: ab.beta / (a2 - b2).abs(),
    })
}

/// Whether the sign at ω_k/2 is positive inside B_k (false: outside).
fn positive_inside(lat: &Lattice, k: usize) -> Result<bool> {
    if k == 0 {
        return Ok(true);
    }
    let ab = alpha_beta(lat, k)?;
    Ok(ab.alpha.norm() >= ab.beta * (1.0 - HALF_PLANE_TOL))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Zero,
    Positive,
}

impl Sign {
    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Negative => -1,
            Sign::Zero => 0,
            Sign::Positive => 1,
        }
    }
}

/// Sign of det D²G_p(ω_k/2), computed from ℘(p − ω_k/2) directly.
pub fn half_period_sign(p: Complex64, k: usize, lat: &Lattice) -> Result<Sign> {
    if lat.is_two_torsion(p, 1e-12) {
        return Err(Error::TwoTorsion(p));
    }
    let w = lat.wp(p - lat.half_period(k))?;
    let r = PI / lat.im_tau;
    let d = r * r - (w - (r - lat.eta1)).norm_sqr();
    Ok(if d.abs() <= DEFAULT_BAND * r * r {
        Sign::Zero
    } else if d > 0.0 {
        Sign::Positive
    } else {
        Sign::Negative
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct RegionClassification {
    pub signs: [Sign; 4],
    /// number of positive signs
    pub m: usize,
    /// membership distance to each B_k, positive inside
    pub distances: [f64; 4],
    /// counts allowed for a nondegenerate G_p with this m
    pub predicted_counts: Vec<usize>,
}

impl RegionClassification {
    pub fn on_boundary(&self) -> bool {
        self.signs.contains(&Sign::Zero)
    }
}

pub fn predicted_counts(m: usize) -> Vec<usize> {
    match m {
        0 => vec![6, 10],
        1 => vec![4, 8],
        2 => vec![6],
        _ => vec![],
    }
}

pub fn classify_region(wp_p: Complex64, lat: &Lattice) -> Result<RegionClassification> {
    classify_region_with_band(wp_p, lat, DEFAULT_BAND)
}

/// Like `classify_region`, with `band` the relative half-width of the
/// boundary strip that reports sign zero.
pub fn classify_region_with_band(wp_p: Complex64, lat: &Lattice, band: f64) -> Result<RegionClassification> {
    for k in 1..=3 {
        if (wp_p - lat.e(k)).norm() <= 1e-12 * (1.0 + lat.e(k).norm()) {
            return Err(Error::TwoTorsion(lat.half_period(k)));
        }
    }
    if !wp_p.re.is_finite() || !wp_p.im.is_finite() {
        return Err(Error::TwoTorsion(Complex64::new(0.0, 0.0)));
    }
    let mut signs = [Sign::Zero; 4];
    let mut distances = [0.0; 4];
    for k in 0..4 {
        let region = disk_bk(lat, k)?;
        let d = region.membership_distance(wp_p);
        distances[k] = d;
        signs[k] = if d.abs() <= band * region.scale() {
            Sign::Zero
        } else if (d > 0.0) == positive_inside(lat, k)? {
            Sign::Positive
        } else {
            Sign::Negative
        };
    }
    let m = signs.iter().filter(|&&s| s == Sign::Positive).count();
    Ok(RegionClassification {
        signs,
        m,
        distances,
        predicted_counts: predicted_counts(m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_b0_is_centred_disk() {
        let l = Lattice::new(Complex64::new(0.0, 1.0)).unwrap();
        match disk_b0(&l) {
            Region::Disk { center, radius } => {
                assert!(center.norm() < 1e-12);
                assert!((radius - PI).abs() < 1e-12);
            }
            _ => panic!("expected a disk"),
        }
    }

    #[test]
    fn signs_agree_with_direct_evaluation() {
        let l = Lattice::new(Complex64::new(0.15, 0.95)).unwrap();
        for p in [Complex64::new(0.1, 0.2), Complex64::new(0.33, 0.6), Complex64::new(0.02, 0.01)] {
            let cls = classify_region(l.wp(p).unwrap(), &l).unwrap();
            for k in 0..4 {
                assert_eq!(cls.signs[k], half_period_sign(p, k, &l).unwrap(), "p={p} k={k}");
            }
        }
    }

    #[test]
    fn predicted_menu() {
        assert_eq!(predicted_counts(2), vec![6]);
        assert!(predicted_counts(3).is_empty());
    }
}
