//! Critical points of G and G_p by multistart damped Newton.
//!
//! Newton runs on the real gradient (G_x, G_y) with the analytic Hessian.
//! Seeds are a uniform grid over the cell, the half-periods and a ring
//! around each pole. Converged points are closed under z ↦ −z, merged
//! modulo Λ and classified by the sign of det D²G.

use crate::elliptic::{Lattice, TorusPoint};
use crate::error::{Error, Result};
use crate::green::{self, Gradient, Hessian};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Trivial,
    Nontrivial,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Classification {
    Minimum,
    Saddle,
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalPoint {
    pub location: TorusPoint,
    pub kind: Kind,
    pub hessian: Hessian,
    pub classification: Classification,
    pub local_degree: i32,
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriticalSet {
    pub points: Vec<CriticalPoint>,
    pub count: usize,
    pub all_nondegenerate: bool,
    pub degree_sum: Option<i32>,
    pub expected_degree: i32,
}

impl CriticalSet {
    pub fn nontrivial(&self) -> impl Iterator<Item = &CriticalPoint> {
        self.points.iter().filter(|c| c.kind == Kind::Nontrivial)
    }

    pub fn count_of(&self, class: Classification) -> usize {
        self.points.iter().filter(|c| c.classification == class).count()
    }
}

#[derive(Debug, Clone)]
pub struct FinderOptions {
    pub seed_density: usize,
    pub newton_tol: f64,
    pub max_iter: usize,
    pub dedupe_radius: f64,
    /// Classification threshold on det; `None` means 1e-9 / Im τ².
    pub degeneracy_tol: Option<f64>,
    /// Extra passes with denser seeds when the degree sum comes out wrong.
    pub max_refinements: usize,
}

impl Default for FinderOptions {
    fn default() -> Self {
        FinderOptions {
            seed_density: 24,
            newton_tol: 1e-11,
            max_iter: 50,
            dedupe_radius: 1e-6,
            degeneracy_tol: None,
            max_refinements: 2,
        }
    }
}

impl FinderOptions {
    fn det_tol(&self, lat: &Lattice) -> f64 {
        self.degeneracy_tol.unwrap_or(1e-9 / (lat.im_tau * lat.im_tau))
    }
}

/// The function whose gradient is being zeroed.
#[derive(Debug, Clone, Copy)]
pub enum Field {
    G,
    Gp(Complex64),
}

impl Field {
    pub fn gradient(&self, z: Complex64, lat: &Lattice) -> Result<Gradient> {
        match *self {
            Field::G => green::grad_g(z, lat),
            Field::Gp(p) => green::grad_gp(z, p, lat),
        }
    }

    pub fn hessian(&self, z: Complex64, lat: &Lattice) -> Result<Hessian> {
        match *self {
            Field::G => green::hessian_g(z, lat),
            Field::Gp(p) => green::hessian_gp(z, p, lat),
        }
    }

    /// Half-periods that are always critical.
    fn trivial_points(&self, lat: &Lattice) -> Vec<Complex64> {
        let first = match self {
            Field::G => 1,
            Field::Gp(_) => 0,
        };
        (first..4).map(|k| lat.half_period(k)).collect()
    }

    fn poles(&self) -> Vec<Complex64> {
        match *self {
            Field::G => vec![Complex64::new(0.0, 0.0)],
            Field::Gp(p) => vec![p, -p],
        }
    }

    fn expected_degree(&self) -> i32 {
        match self {
            Field::G => -1,
            Field::Gp(_) => -2,
        }
    }
}

/// density² grid points, the four half-periods and, for G_p, eight seeds
/// on a ring around each of ±p.
pub fn seed_grid(lat: &Lattice, density: usize, p: Option<Complex64>) -> Vec<Complex64> {
    let d = density.max(1);
    let mut seeds = Vec::with_capacity(d * d + 20);
    for j in 0..d {
        for i in 0..d {
            seeds.push(lat.from_rs(i as f64 / d as f64, j as f64 / d as f64));
        }
    }
    seeds.extend((0..4).map(|k| lat.half_period(k)));
    if let Some(p) = p {
        let radius = 0.5 / d as f64;
        for centre in [p, -p] {
            seeds.extend(ring(centre, radius, 8));
        }
    }
    seeds
}

fn ring(centre: Complex64, radius: f64, n: usize) -> impl Iterator<Item = Complex64> {
    (0..n).map(move |k| centre + Complex64::from_polar(radius, 2.0 * PI * (k as f64 + 0.5) / n as f64))
}

fn solve_2x2(h: &Hessian, g: &Gradient) -> Option<Complex64> {
    if h.det == 0.0 || !h.det.is_finite() {
        return None;
    }
    let dx = -(h.gyy * g.gx - h.gxy * g.gy) / h.det;
    let dy = -(-h.gxy * g.gx + h.gxx * g.gy) / h.det;
    Some(Complex64::new(dx, dy))
}

fn cell_diameter(lat: &Lattice) -> f64 {
    (lat.tau + 1.0).norm().max((lat.tau - 1.0).norm())
}

/// Damped Newton from one seed. Returns the converged point and its
/// gradient norm.
pub fn newton_polish(
    field: Field,
    seed: Complex64,
    lat: &Lattice,
    opts: &FinderOptions,
) -> Option<(Complex64, f64)> {
    let cap = 0.25 * cell_diameter(lat);
    let mut z = seed;
    let mut g = field.gradient(z, lat).ok()?;
    for _ in 0..opts.max_iter {
        let res = g.norm();
        if res < opts.newton_tol {
            // one more step to settle at machine precision
            if let Some(step) = field.hessian(z, lat).ok().and_then(|h| solve_2x2(&h, &g)) {
                if let Ok(g2) = field.gradient(z + step, lat) {
                    if g2.norm() < res {
                        return Some((z + step, g2.norm()));
                    }
                }
            }
            return Some((z, res));
        }
        let h = field.hessian(z, lat).ok()?;
        let mut step = solve_2x2(&h, &g)?;
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        let mut accepted = None;
        let mut t = 1.0;
        for _ in 0..12 {
            let cand = z + step * t;
            if let Ok(gc) = field.gradient(cand, lat) {
                if gc.norm() < res {
                    accepted = Some((cand, gc));
                    break;
                }
            }
            t *= 0.5;
        }
        let (zn, gn) = accepted?;
        z = zn;
        g = gn;
    }
    (g.norm() < opts.newton_tol).then_some((z, g.norm()))
}

fn is_trivial(z: Complex64, lat: &Lattice, radius: f64) -> Option<usize> {
    (0..4).find(|&k| lat.torus_distance(z, lat.half_period(k)) <= radius)
}

fn rs_key(t: &TorusPoint) -> (f64, f64) {
    (t.r, t.s)
}

/// Merge candidates lying within `radius` of each other on the torus.
///
/// Exact half-periods come first in `cands`, so they win their cluster;
/// other clusters keep the lexicographically smallest (r, s).
fn dedupe(cands: &[Complex64], lat: &Lattice, radius: f64, n_exact: usize) -> Vec<TorusPoint> {
    let mut reps: Vec<(TorusPoint, bool)> = Vec::new();
    for (i, &z) in cands.iter().enumerate() {
        let tp = TorusPoint::new(z, lat);
        match reps.iter_mut().find(|(r, _)| lat.torus_distance(r.z, z) <= radius) {
            Some((rep, exact)) => {
                if !*exact && rs_key(&tp) < rs_key(rep) {
                    *rep = tp;
                }
            }
            None => reps.push((tp, i < n_exact)),
        }
    }
    reps.into_iter().map(|(t, _)| t).collect()
}

fn classify(det: f64, tol: f64) -> (Classification, i32) {
    if det > tol {
        (Classification::Minimum, 1)
    } else if det < -tol {
        (Classification::Saddle, -1)
    } else {
        (Classification::Degenerate, 0)
    }
}

fn build_set(
    field: Field,
    lat: &Lattice,
    opts: &FinderOptions,
    seeds: &[Complex64],
) -> Result<(CriticalSet, Vec<Complex64>)> {
    let found: Vec<Complex64> = seeds
        .par_iter()
        .map(|&s| newton_polish(field, s, lat, opts).map(|(z, _)| z))
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();

    let exact = field.trivial_points(lat);
    let mut cands = exact.clone();
    for z in &found {
        cands.push(*z);
        cands.push(-*z);
    }
    let reps = dedupe(&cands, lat, opts.dedupe_radius, exact.len());

    let tol = opts.det_tol(lat);
    let mut points = Vec::with_capacity(reps.len());
    for loc in reps {
        let residual = field.gradient(loc.z, lat)?.norm();
        let kind = match is_trivial(loc.z, lat, opts.dedupe_radius) {
            Some(_) => Kind::Trivial,
            None => Kind::Nontrivial,
        };
        if kind == Kind::Trivial && residual > 1e-8 {
            return Err(Error::Inconsistent(format!(
                "half-period {} has gradient {residual:.3e}",
                loc.z
            )));
        }
        let hessian = field.hessian(loc.z, lat)?;
        let (classification, local_degree) = classify(hessian.det, tol);
        points.push(CriticalPoint {
            location: loc,
            kind,
            hessian,
            classification,
            local_degree,
            residual,
        });
    }
    points.sort_by(|a, b| rs_key(&a.location).partial_cmp(&rs_key(&b.location)).unwrap());

    let all_nondegenerate = points.iter().all(|c| c.classification != Classification::Degenerate);
    let degree_sum = all_nondegenerate.then(|| points.iter().map(|c| c.local_degree).sum());
    let count = points.len();
    Ok((
        CriticalSet {
            points,
            count,
            all_nondegenerate,
            degree_sum,
            expected_degree: field.expected_degree(),
        },
        found,
    ))
}

fn find(field: Field, lat: &Lattice, opts: &FinderOptions) -> Result<CriticalSet> {
    let p = match field {
        Field::Gp(p) => Some(p),
        Field::G => None,
    };
    let poles = field.poles();
    let keep = |z: &Complex64| poles.iter().all(|&q| lat.torus_distance(*z, q) > 1e-12);
    let mut seeds: Vec<Complex64> = seed_grid(lat, opts.seed_density, p).into_iter().filter(keep).collect();
    let mut density = opts.seed_density;
    let mut refinements = 0;
    loop {
        let (set, _) = build_set(field, lat, opts, &seeds)?;
        let consistent = set.degree_sum.is_none_or(|d| d == set.expected_degree);
        if consistent || refinements >= opts.max_refinements {
            return Ok(set);
        }
        // Missing points come in close pairs near a fold, so look next to
        // what was found as well as on a finer grid.
        refinements += 1;
        density *= 2;
        seeds = seed_grid(lat, density, p).into_iter().filter(keep).collect();
        for c in set.nontrivial() {
            for radius in [1e-3, 1e-2, 5e-2] {
                seeds.extend(ring(c.location.z, radius, 8));
            }
        }
        seeds.retain(keep);
    }
}

pub fn critical_points_g(lat: &Lattice, opts: &FinderOptions) -> Result<CriticalSet> {
    find(Field::G, lat, opts)
}

pub fn critical_points_gp(p: Complex64, lat: &Lattice, opts: &FinderOptions) -> Result<CriticalSet> {
    if lat.is_two_torsion(p, 1e-9) {
        return Err(Error::TwoTorsion(p));
    }
    find(Field::Gp(p), lat, opts)
}

/// Checks the degree bookkeeping: Σ local degrees = −2 for G_p and −1 for G.
///
/// Errors with `Degenerate` when some point has det = 0 within tolerance.
pub fn verify_degree(set: &CriticalSet) -> Result<bool> {
    match set.degree_sum {
        Some(d) => Ok(d == set.expected_degree),
        None => Err(Error::Degenerate("critical set has a degenerate point".into())),
    }
}
