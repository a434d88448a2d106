//! The anti-meromorphic map g whose fixed points are the critical points of G_p.
//!
//!   g(z) = −(1/2b)(conj ζ(z+p) + conj ζ(z−p) + 2 conj(a) conj(z)),
//!   a = π/Imτ − η1,   b = −π/Imτ.
//!
//! g(z + ω) = g(z) + ω, so g acts on the torus. With φ = z − g,
//! J_φ = 1 − |∂̄g|² = 4 Imτ² det D²G_p.
//!
//! Without a pole the same construction gives ĝ(z) = −(1/b)(conj ζ(z) + conj(a) conj(z)),
//! whose fixed points are the critical points of G itself.

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::green;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy)]
pub struct PreModular<'a> {
    pub lat: &'a Lattice,
    /// None for the map ĝ attached to G
    pub p: Option<Complex64>,
    pub a: Complex64,
    pub b: f64,
}

impl<'a> PreModular<'a> {
    pub fn new(p: Complex64, lat: &'a Lattice) -> Result<Self> {
        if lat.is_two_torsion(p, 1e-9) {
            return Err(Error::TwoTorsion(p));
        }
        Ok(PreModular {
            lat,
            p: Some(p),
            a: PI / lat.im_tau - lat.eta1,
            b: -PI / lat.im_tau,
        })
    }

    pub fn for_green(lat: &'a Lattice) -> Self {
        PreModular {
            lat,
            p: None,
            a: PI / lat.im_tau - lat.eta1,
            b: -PI / lat.im_tau,
        }
    }

    pub fn poles(&self) -> Vec<Complex64> {
        match self.p {
            Some(p) => vec![p, -p],
            None => vec![Complex64::new(0.0, 0.0)],
        }
    }

    fn near_pole(&self, z: Complex64, radius: f64) -> bool {
        self.poles().into_iter().any(|q| self.lat.torus_distance(z, q) < radius)
    }

    pub fn g(&self, z: Complex64) -> Result<Complex64> {
        let l = self.lat;
        match self.p {
            Some(p) => {
                let s = l.zeta(z + p)?.conj() + l.zeta(z - p)?.conj() + 2.0 * self.a.conj() * z.conj();
                Ok(-s / (2.0 * self.b))
            }
            None => Ok(-(l.zeta(z)?.conj() + self.a.conj() * z.conj()) / self.b),
        }
    }

    /// ∂̄g; its conjugate is (℘(z+p) + ℘(z−p) − 2a)/2b, or (℘(z) − a)/b for ĝ.
    pub fn dbar_g(&self, z: Complex64) -> Result<Complex64> {
        let l = self.lat;
        let w = match self.p {
            Some(p) => (l.wp(z + p)? + l.wp(z - p)? - 2.0 * self.a) / 2.0,
            None => l.wp(z)? - self.a,
        };
        Ok((w / self.b).conj())
    }

    pub fn phi(&self, z: Complex64) -> Result<Complex64> {
        Ok(z - self.g(z)?)
    }

    pub fn j_phi(&self, z: Complex64) -> Result<f64> {
        Ok(1.0 - self.dbar_g(z)?.norm_sqr())
    }

    /// One Newton step for φ(z) = w: solve δ − B conj(δ) = w − φ(z), B = ∂̄g.
    fn newton_step(&self, z: Complex64, w: Complex64) -> Result<Complex64> {
        let rhs = w - self.phi(z)?;
        let bb = self.dbar_g(z)?;
        let den = 1.0 - bb.norm_sqr();
        if den == 0.0 {
            return Err(Error::Degenerate("J_φ vanishes".into()));
        }
        Ok((rhs + bb * rhs.conj()) / den)
    }

    /// Solve φ(z) = w from `seed`. The residual is taken modulo Λ.
    pub fn solve_phi(&self, w: Complex64, seed: Complex64, max_iter: usize) -> Option<Complex64> {
        let l = self.lat;
        let mut z = seed;
        let mut hits = 0;
        for _ in 0..max_iter {
            let mut step = self.newton_step(z, w).ok()?;
            if step.norm() > 0.25 {
                step *= 0.25 / step.norm();
            }
            z += step;
            if !z.re.is_finite() || !z.im.is_finite() {
                return None;
            }
            if step.norm() < 1e-13 * (1.0 + z.norm()) {
                hits += 1;
                if hits >= 2 {
                    break;
                }
            }
        }
        let res = (self.phi(z).ok()? - w).norm();
        (res < 1e-9 * (1.0 + w.norm())).then(|| l.nearest_image(z))
    }
}

/// The four solutions ±c1, ±c2 of ℘(z+p) + ℘(z−p) = 2a.
pub fn critical_points_of_g(pm: &PreModular) -> Result<Vec<Complex64>> {
    let l = pm.lat;
    let Some(p) = pm.p else {
        return Err(Error::Domain("critical points of g need a pole p".into()));
    };
    let target = 2.0 * pm.a;
    let mut found: Vec<Complex64> = Vec::new();
    let n = 12;
    for j in 0..n {
        for i in 0..n {
            let mut z = l.from_rs((i as f64 + 0.5) / n as f64, (j as f64 + 0.5) / n as f64);
            let mut ok = false;
            for _ in 0..60 {
                let (Ok(u), Ok(v)) = (l.eval(z + p), l.eval(z - p)) else { break };
                let f = u.wp + v.wp - target;
                let d = u.wp_prime + v.wp_prime;
                if d.norm() == 0.0 {
                    break;
                }
                let mut step = -f / d;
                if step.norm() > 0.25 {
                    step *= 0.25 / step.norm();
                }
                z += step;
                if step.norm() < 1e-14 * (1.0 + z.norm()) {
                    ok = (f.norm()) < 1e-9 * (1.0 + target.norm());
                    break;
                }
            }
            if !ok {
                continue;
            }
            for cand in [z, -z] {
                if found.iter().all(|&c| l.torus_distance(c, cand) > 1e-7) {
                    found.push(l.nearest_image(cand));
                }
            }
            if found.len() >= 4 {
                return Ok(found);
            }
        }
    }
    if found.is_empty() {
        Err(Error::NoConvergence("critical points of g"))
    } else {
        Ok(found)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct FixedPoint {
    #[serde(with = "crate::cx")]
    pub z: Complex64,
    /// |∂̄g(z)|
    pub multiplier: f64,
}

#[derive(Debug, Clone)]
pub struct DynamicsOptions {
    pub max_iter: usize,
    pub grid: usize,
    pub escape_radius: f64,
}

impl Default for DynamicsOptions {
    fn default() -> Self {
        DynamicsOptions {
            max_iter: 2000,
            grid: 8,
            escape_radius: 1e-3,
        }
    }
}

enum Orbit {
    Settled(Complex64),
    Escaped,
    Undecided(Complex64),
}

/// Iterates h = g∘g, reducing modulo Λ each time.
fn iterate_h(pm: &PreModular, z0: Complex64, opts: &DynamicsOptions) -> Orbit {
    let l = pm.lat;
    let mut z = z0;
    for _ in 0..opts.max_iter {
        if pm.near_pole(z, opts.escape_radius) {
            return Orbit::Escaped;
        }
        let next = match pm.g(z).and_then(|y| pm.g(y)) {
            Ok(w) => l.nearest_image(w),
            Err(_) => return Orbit::Escaped,
        };
        let moved = l.torus_distance(next, z);
        z = next;
        if moved < 1e-12 {
            return Orbit::Settled(z);
        }
    }
    Orbit::Undecided(z)
}

/// Attracting fixed points of g: orbits of h from the critical points of g,
/// their images and a coarse grid, polished by Newton on φ.
pub fn attracting_fixed_points(pm: &PreModular, opts: &DynamicsOptions) -> Result<Vec<FixedPoint>> {
    let l = pm.lat;
    let mut seeds = critical_points_of_g(pm).unwrap_or_default();
    let images: Vec<Complex64> = seeds.iter().filter_map(|&c| pm.g(c).ok()).collect();
    seeds.extend(images);
    for j in 0..opts.grid {
        for i in 0..opts.grid {
            let g = opts.grid as f64;
            seeds.push(l.from_rs((i as f64 + 0.5) / g, (j as f64 + 0.5) / g));
        }
    }
    let ends: Vec<Option<Complex64>> = seeds
        .par_iter()
        .map(|&s| match iterate_h(pm, s, opts) {
            Orbit::Settled(z) | Orbit::Undecided(z) => Some(z),
            Orbit::Escaped => None,
        })
        .collect();

    let mut out: Vec<FixedPoint> = Vec::new();
    for z in ends.into_iter().flatten() {
        let Some(z) = pm.solve_phi(Complex64::new(0.0, 0.0), z, 50) else { continue };
        let multiplier = pm.dbar_g(z)?.norm();
        if multiplier >= 1.0 - 1e-9 {
            continue;
        }
        if out.iter().all(|f| l.torus_distance(f.z, z) > 1e-6) {
            out.push(FixedPoint { z, multiplier });
        }
    }
    if out.len() > 4 {
        return Err(Error::Inconsistent(format!("{} attracting fixed points", out.len())));
    }
    Ok(out)
}

/// Index of the attracting fixed point whose basin contains z, or None.
pub fn basin_label(pm: &PreModular, z: Complex64, attractors: &[FixedPoint], opts: &DynamicsOptions) -> Option<usize> {
    let l = pm.lat;
    let mut w = z;
    for _ in 0..opts.max_iter {
        if let Some(k) = attractors.iter().position(|f| l.torus_distance(f.z, w) < 1e-8) {
            return Some(k);
        }
        if pm.near_pole(w, opts.escape_radius) {
            return None;
        }
        w = l.nearest_image(pm.g(w).and_then(|y| pm.g(y)).ok()?);
    }
    None
}

#[derive(Debug, Clone, Serialize)]
pub struct DegreeProbe {
    pub degree: i32,
    pub preimages: usize,
    pub positive: usize,
    pub negative: usize,
}

/// Brouwer degree of φ at the value w: Σ sign J_φ over preimages.
/// Expected −2 for G_p and −1 for G.
pub fn phi_degree_probe(pm: &PreModular, w: Complex64, grid: usize) -> Result<DegreeProbe> {
    let l = pm.lat;
    let mut seeds = Vec::new();
    for j in 0..grid {
        for i in 0..grid {
            let g = grid as f64;
            seeds.push(l.from_rs((i as f64 + 0.5) / g, (j as f64 + 0.5) / g));
        }
    }
    // large |w| has its preimages next to the poles
    let near = 1.0 / (2.0 * pm.b.abs() * (1.0 + w.norm()));
    for centre in pm.poles() {
        for radius in [near, 4.0 * near, 0.05] {
            for k in 0..8 {
                seeds.push(centre + Complex64::from_polar(radius, PI * k as f64 / 4.0 + 0.1));
            }
        }
    }
    let sols: Vec<Option<Complex64>> = seeds.par_iter().map(|&s| pm.solve_phi(w, s, 60)).collect();
    let mut pre: Vec<Complex64> = Vec::new();
    for z in sols.into_iter().flatten() {
        if pre.iter().all(|&q| l.torus_distance(q, z) > 1e-7) {
            pre.push(z);
        }
    }
    let (mut positive, mut negative) = (0, 0);
    for &z in &pre {
        let j = pm.j_phi(z)?;
        if j.abs() < 1e-9 {
            return Err(Error::Degenerate(format!("{w} is not a regular value")));
        }
        if j > 0.0 {
            positive += 1;
        } else {
            negative += 1;
        }
    }
    Ok(DegreeProbe {
        degree: positive as i32 - negative as i32,
        preimages: pre.len(),
        positive,
        negative,
    })
}

/// 4 Imτ² det D²G_p (or D²G), which should equal J_φ.
pub fn scaled_hessian_det(pm: &PreModular, z: Complex64) -> Result<f64> {
    let t = pm.lat.im_tau;
    let h = match pm.p {
        Some(p) => green::hessian_gp(z, p, pm.lat)?,
        None => green::hessian_g(z, pm.lat)?,
    };
    Ok(4.0 * t * t * h.det)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_commutes_with_translations() {
        let l = Lattice::new(Complex64::new(0.2, 1.1)).unwrap();
        let pm = PreModular::new(Complex64::new(0.17, 0.31), &l).unwrap();
        let z = Complex64::new(0.4, 0.5);
        for w in [Complex64::new(1.0, 0.0), l.tau] {
            assert!((pm.g(z + w).unwrap() - pm.g(z).unwrap() - w).norm() < 1e-11);
        }
    }

    #[test]
    fn jacobian_identity() {
        let l = Lattice::new(Complex64::new(-0.1, 0.8)).unwrap();
        let pm = PreModular::new(Complex64::new(0.3, 0.1), &l).unwrap();
        let z = Complex64::new(0.05, 0.6);
        let a = pm.j_phi(z).unwrap();
        let b = scaled_hessian_det(&pm, z).unwrap();
        assert!((a - b).abs() < 1e-12 * (1.0 + a.abs()));
    }

    #[test]
    fn green_map_has_degree_minus_one() {
        let l = Lattice::new(Complex64::new(0.0, 1.0)).unwrap();
        let pm = PreModular::for_green(&l);
        let z = Complex64::new(0.3, 0.1);
        assert!((pm.j_phi(z).unwrap() - scaled_hessian_det(&pm, z).unwrap()).abs() < 1e-12);
        for w in [Complex64::new(0.0, 0.0), Complex64::new(0.37, -0.21)] {
            assert_eq!(phi_degree_probe(&pm, w, 16).unwrap().degree, -1);
        }
    }

    #[test]
    fn critical_points_of_g_are_four() {
        let l = Lattice::new(Complex64::new(0.0, 1.0)).unwrap();
        let pm = PreModular::new(Complex64::new(0.3, 0.2), &l).unwrap();
        let cs = critical_points_of_g(&pm).unwrap();
        assert_eq!(cs.len(), 4);
        for c in cs {
            assert!(pm.dbar_g(c).unwrap().norm() < 1e-8);
        }
    }
}
