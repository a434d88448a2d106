//! Solutions of Δu + e^u = 8π(δ_p + δ_{−p}) built from a nontrivial
//! critical point q = r + sτ of G_p.
//!
//!   f(z) = exp(2(rη1 + sη2) z) σ(z − q)/σ(z + q)
//!   u_β  = log(8|βf'|² / (1 + |βf|²)²)
//!
//! f has multipliers e^{−4πis} along 1 and e^{4πir} along τ, so u_β is
//! doubly periodic. All evaluation happens in log form, which keeps the
//! zero of f at q and its pole at −q harmless.

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone)]
pub struct DevelopingMap<'a> {
    pub lat: &'a Lattice,
    pub q: Complex64,
    pub p: Complex64,
    pub r: f64,
    pub s: f64,
    /// f(z+1) = mult1 · f(z)
    pub mult1: Complex64,
    /// f(z+τ) = mult2 · f(z)
    pub mult2: Complex64,
    c: Complex64,
}

struct LogParts {
    ln_abs_f: f64,
    ln_abs_fprime: f64,
}

impl<'a> DevelopingMap<'a> {
    /// q must be a nontrivial critical point of G_p.
    pub fn new(q: Complex64, p: Complex64, lat: &'a Lattice) -> Result<Self> {
        if lat.is_two_torsion(q, 1e-9) {
            return Err(Error::TwoTorsion(q));
        }
        let (r, s) = lat.decompose_rs(q);
        let c = lat.eta_of(r, s);
        let lhs = lat.zeta(q + p)? + lat.zeta(q - p)?;
        if (lhs - 2.0 * c).norm() > 1e-8 * (1.0 + c.norm()) {
            return Err(Error::Inconsistent(format!("{q} is not a critical point of G_p")));
        }
        Ok(DevelopingMap {
            lat,
            q,
            p,
            r,
            s,
            mult1: (-4.0 * PI * I * s).exp(),
            mult2: (4.0 * PI * I * r).exp(),
            c,
        })
    }

    pub fn f(&self, z: Complex64) -> Result<Complex64> {
        let a = self.lat.sigma_parts(z - self.q);
        let b = self.lat.sigma_parts(z + self.q);
        if b.value.norm() == 0.0 {
            return Err(Error::Pole(z));
        }
        Ok((2.0 * self.c * z + a.log_scale - b.log_scale).exp() * a.value / b.value)
    }

    /// f'(z) = e^{2cz} [σ'(z−q)σ(z+q) − σ(z−q)σ'(z+q) + 2c σ(z−q)σ(z+q)] / σ(z+q)².
    pub fn f_prime(&self, z: Complex64) -> Result<Complex64> {
        let a = self.lat.sigma_parts(z - self.q);
        let b = self.lat.sigma_parts(z + self.q);
        if b.value.norm() == 0.0 {
            return Err(Error::Pole(z));
        }
        let num = a.deriv * b.value - a.value * b.deriv + 2.0 * self.c * a.value * b.value;
        Ok((2.0 * self.c * z + a.log_scale - b.log_scale).exp() * num / (b.value * b.value))
    }

    fn log_parts(&self, z: Complex64) -> Result<LogParts> {
        let a = self.lat.sigma_parts(z - self.q);
        let b = self.lat.sigma_parts(z + self.q);
        if b.value.norm() == 0.0 {
            return Err(Error::Pole(z));
        }
        let base = (2.0 * self.c * z + a.log_scale - b.log_scale).re;
        let num = a.deriv * b.value - a.value * b.deriv + 2.0 * self.c * a.value * b.value;
        Ok(LogParts {
            ln_abs_f: base + a.value.norm().ln() - b.value.norm().ln(),
            ln_abs_fprime: base + num.norm().ln() - 2.0 * b.value.norm().ln(),
        })
    }

    /// u_β(z); errors at the zeros ±p of f' where u = −∞.
    pub fn u(&self, z: Complex64, beta: f64) -> Result<f64> {
        let lp = self.log_parts(z)?;
        if lp.ln_abs_fprime == f64::NEG_INFINITY {
            return Err(Error::Pole(z));
        }
        let lb = beta.ln();
        let x = 2.0 * (lb + lp.ln_abs_f);
        Ok(8f64.ln() + 2.0 * (lb + lp.ln_abs_fprime) - 2.0 * softplus(x))
    }
}

/// ln(1 + e^x) without overflow.
fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// One developing map per ± pair of nontrivial critical points.
pub fn from_critical_set<'a>(
    set: &crate::critpoints::CriticalSet,
    p: Complex64,
    lat: &'a Lattice,
) -> Result<Vec<DevelopingMap<'a>>> {
    let mut maps: Vec<DevelopingMap> = Vec::new();
    for cp in set.nontrivial() {
        let z = cp.location.z;
        if maps.iter().any(|m| lat.torus_distance(m.q, -z) < 1e-6) {
            continue;
        }
        maps.push(DevelopingMap::new(z, p, lat)?);
    }
    Ok(maps)
}

#[derive(Debug, Clone, Serialize)]
pub struct ResidualStats {
    pub grid_n: usize,
    pub rho: f64,
    pub max: f64,
    pub mean: f64,
    pub evaluated: usize,
    pub skipped: usize,
    /// ∫_E e^u over the cell by the midpoint rule
    pub mass: f64,
    pub mass_rel_err: f64,
}

/// Max and mean of |Δu_β + e^{u_β}| with the 5-point Laplacian at step
/// h = 1/grid_n, sampled at cell midpoints. Stencils reaching within ρ of
/// ±p are skipped. Requires grid_n ≥ 64 and ρ ≥ 4·diam/grid_n, with diam the
/// longer diagonal of the cell.
///
/// The stencil is applied to u − 2 log|z − p| − 2 log|z + p| (nearest images),
/// which has the same Laplacian off the punctures but no log singularity.
pub fn pde_residual(map: &DevelopingMap, beta: f64, grid_n: usize, rho: f64) -> Result<ResidualStats> {
    residual_impl(map, beta, grid_n, rho, true)
}

/// As `pde_residual`, with the stencil applied to u itself.
pub fn pde_residual_raw(map: &DevelopingMap, beta: f64, grid_n: usize, rho: f64) -> Result<ResidualStats> {
    residual_impl(map, beta, grid_n, rho, false)
}

/// max, sum, evaluated, skipped, mass
type RowStats = (f64, f64, usize, usize, f64);

fn residual_impl(map: &DevelopingMap, beta: f64, grid_n: usize, rho: f64, subtract: bool) -> Result<ResidualStats> {
    let lat = map.lat;
    let diam = (1.0 + lat.tau).norm().max((1.0 - lat.tau).norm());
    if grid_n < 64 || rho.is_nan() || rho < 4.0 * diam / grid_n as f64 {
        return Err(Error::Domain(format!(
            "need grid_n ≥ 64 and rho ≥ 4·{diam:.3}/grid_n, got {grid_n} and {rho}"
        )));
    }
    let n = grid_n;
    let h = 1.0 / n as f64;
    let offsets = [
        Complex64::new(0.0, 0.0),
        Complex64::new(h, 0.0),
        Complex64::new(-h, 0.0),
        Complex64::new(0.0, h),
        Complex64::new(0.0, -h),
    ];
    let rows: Vec<Result<RowStats>> = (0..n)
        .into_par_iter()
        .map(|j| {
            let (mut max, mut sum, mut eval, mut skip, mut mass) = (0.0f64, 0.0, 0usize, 0usize, 0.0);
            for i in 0..n {
                let z = lat.from_rs((i as f64 + 0.5) * h, (j as f64 + 0.5) * h);
                let dp = lat.nearest_image(z - map.p);
                let dm = lat.nearest_image(z + map.p);
                if dp.norm() >= 1e-12 && dm.norm() >= 1e-12 {
                    mass += map.u(z, beta)?.exp();
                }
                if dp.norm() < rho + h || dm.norm() < rho + h {
                    skip += 1;
                    continue;
                }
                let mut v = [0.0; 5];
                for (k, off) in offsets.iter().enumerate() {
                    v[k] = map.u(z + off, beta)?;
                    if subtract {
                        v[k] -= 2.0 * ((dp + off).norm().ln() + (dm + off).norm().ln());
                    }
                }
                let lap = (v[1] + v[2] + v[3] + v[4] - 4.0 * v[0]) / (h * h);
                let u0 = map.u(z, beta)?;
                let res = (lap + u0.exp()).abs();
                max = max.max(res);
                sum += res;
                eval += 1;
            }
            Ok((max, sum, eval, skip, mass))
        })
        .collect();
    let (mut max, mut sum, mut evaluated, mut skipped, mut mass) = (0.0f64, 0.0, 0, 0, 0.0);
    for row in rows {
        let (m, s, e, k, ms) = row?;
        max = max.max(m);
        sum += s;
        evaluated += e;
        skipped += k;
        mass += ms;
    }
    mass *= lat.im_tau * h * h;
    Ok(ResidualStats {
        grid_n,
        rho,
        max,
        mean: if evaluated > 0 { sum / evaluated as f64 } else { 0.0 },
        evaluated,
        skipped,
        mass,
        mass_rel_err: (mass - 8.0 * PI).abs() / (8.0 * PI),
    })
}
