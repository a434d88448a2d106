//! Hitchin's map and the Painlevé VI residual.
//!
//! For q = r + sτ away from E[2],
//!
//!   f(r, s) = ℘(q) + ℘'(q) / (2(ζ(q) − rη1 − sη2)),
//!
//! and q is a critical point of G_p exactly when f(r, s) = ℘(p).

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::green;
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HitchinValue {
    #[serde(with = "crate::cx")]
    pub f: Complex64,
    /// false when f is infinite or lands on some e_k
    pub in_u: bool,
}

pub fn f_rs(r: f64, s: f64, lat: &Lattice) -> Result<HitchinValue> {
    if is_half_integer(r) && is_half_integer(s) {
        return Err(Error::TwoTorsion(lat.from_rs(r, s)));
    }
    let q = lat.from_rs(r, s);
    let v = lat.eval(q)?;
    let denom = 2.0 * (v.zeta - lat.eta_of(r, s));
    if denom.norm() == 0.0 {
        return Ok(HitchinValue {
            f: Complex64::new(f64::INFINITY, 0.0),
            in_u: false,
        });
    }
    let f = v.wp + v.wp_prime / denom;
    let finite = f.re.is_finite() && f.im.is_finite();
    let hits_e = (1..=3).any(|k| (f - lat.e(k)).norm() <= 1e-12 * (1.0 + f.norm()));
    Ok(HitchinValue {
        f,
        in_u: finite && !hits_e,
    })
}

fn is_half_integer(x: f64) -> bool {
    let y = 2.0 * x;
    (y - y.round()).abs() < 1e-12
}

/// Canonical member of {p, −p}: smallest (r, s) after reduction to [0,1)².
fn canonical_pair(z: Complex64, lat: &Lattice) -> (Complex64, Complex64) {
    let a = crate::TorusPoint::new(z, lat);
    let b = crate::TorusPoint::new(-z, lat);
    if (a.r, a.s) <= (b.r, b.s) {
        (a.z, b.z)
    } else {
        (b.z, a.z)
    }
}

fn newton_wp(c: Complex64, seed: Complex64, lat: &Lattice) -> Option<Complex64> {
    let scale = 1.0 + c.norm();
    let cap = 0.25;
    let mut z = seed;
    let mut converged = 0;
    for _ in 0..80 {
        let v = lat.eval(z).ok()?;
        let res = v.wp - c;
        if res.norm() <= 1e-13 * scale {
            converged += 1;
            if converged > 2 {
                return Some(z);
            }
        }
        if v.wp_prime.norm() == 0.0 {
            return (res.norm() <= 1e-10 * scale).then_some(z);
        }
        let mut step = -res / v.wp_prime;
        if step.norm() > cap {
            step *= cap / step.norm();
        }
        if step.norm() <= 1e-16 * (1.0 + z.norm()) {
            return (res.norm() <= 1e-10 * scale).then_some(z);
        }
        z += step;
    }
    let res = (lat.wp(z).ok()? - c).norm();
    (res <= 1e-10 * scale).then_some(z)
}

/// The two preimages ±p of c under ℘, canonical one first.
pub fn wp_inverse(c: Complex64, lat: &Lattice) -> Result<(Complex64, Complex64)> {
    if !c.re.is_finite() || !c.im.is_finite() {
        return Err(Error::Domain("℘-inverse of a non-finite value".into()));
    }
    for k in 1..=3 {
        if (c - lat.e(k)).norm() <= 1e-14 * (1.0 + c.norm()) {
            let h = lat.half_period(k);
            return Ok((h, h));
        }
    }
    // local expansions first, then a grid over half the cell
    let mut seeds = Vec::with_capacity(72);
    if c.norm() > 0.0 {
        seeds.push(1.0 / c.sqrt());
    }
    for k in 1..=3 {
        let ek = lat.e(k);
        let d2 = 6.0 * ek * ek - lat.g2 / 2.0;
        if d2.norm() > 0.0 {
            seeds.push(lat.half_period(k) + (2.0 * (c - ek) / d2).sqrt());
        }
    }
    for j in 0..8 {
        for i in 0..8 {
            seeds.push(lat.from_rs((i as f64 + 0.5) / 8.0, (j as f64 + 0.5) / 16.0));
        }
    }
    for seed in seeds {
        if let Some(z) = newton_wp(c, seed, lat) {
            return Ok(canonical_pair(z, lat));
        }
    }
    Err(Error::NoConvergence("℘-inverse"))
}

/// Real Jacobian ∂(Re f, Im f)/∂(r, s).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Jacobian {
    #[serde(with = "crate::cx")]
    pub f_r: Complex64,
    #[serde(with = "crate::cx")]
    pub f_s: Complex64,
    pub matrix: [[f64; 2]; 2],
    pub det: f64,
}

impl Jacobian {
    fn new(f_r: Complex64, f_s: Complex64) -> Self {
        let matrix = [[f_r.re, f_s.re], [f_r.im, f_s.im]];
        Jacobian {
            f_r,
            f_s,
            matrix,
            det: matrix[0][0] * matrix[1][1] - matrix[0][1] * matrix[1][0],
        }
    }
}

/// p with ℘(p) = f(r, s), or an error if (r, s) is outside U.
fn pole_for(r: f64, s: f64, lat: &Lattice) -> Result<Complex64> {
    let hv = f_rs(r, s, lat)?;
    if !hv.in_u {
        return Err(Error::Degenerate(format!("({r}, {s}) is outside U")));
    }
    Ok(wp_inverse(hv.f, lat)?.0)
}

/// f_r = ℘'(p)(℘(q+p)+℘(q−p)+2η1)/(℘(q−p)−℘(q+p)),
/// f_s/f_r = τ − 4πi/(℘(q+p)+℘(q−p)+2η1).
pub fn jacobian_f(r: f64, s: f64, lat: &Lattice) -> Result<Jacobian> {
    let p = pole_for(r, s, lat)?;
    let q = lat.from_rs(r, s);
    let wpp = lat.wp_prime(p)?;
    let plus = lat.wp(q + p)?;
    let minus = lat.wp(q - p)?;
    let w = plus + minus + 2.0 * lat.eta1;
    let f_r = wpp * w / (minus - plus);
    let f_s = f_r * (lat.tau - 4.0 * PI * I / w);
    Ok(Jacobian::new(f_r, f_s))
}

/// Same Jacobian by differentiating the defining formula of f directly.
pub fn jacobian_f_direct(r: f64, s: f64, lat: &Lattice) -> Result<Jacobian> {
    let q = lat.from_rs(r, s);
    let v = lat.eval(q)?;
    let wpp2 = 6.0 * v.wp * v.wp - lat.g2 / 2.0;
    let d = 2.0 * (v.zeta - lat.eta_of(r, s));
    let d_r = 2.0 * (-v.wp - lat.eta1);
    let d_s = 2.0 * (-lat.tau * v.wp - lat.eta2);
    let f_r = v.wp_prime + wpp2 / d - v.wp_prime * d_r / (d * d);
    let f_s = lat.tau * v.wp_prime + lat.tau * wpp2 / d - v.wp_prime * d_s / (d * d);
    Ok(Jacobian::new(f_r, f_s))
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct HessianCrossCheck {
    pub via_hitchin: f64,
    pub via_hessian: f64,
    pub rel_diff: f64,
}

/// det D²G_p(q) = −c/(16π² Imτ) · det Jac f,  c = |℘(q−p) − ℘(q+p)|²/|℘'(p)|².
pub fn hessian_via_hitchin(r: f64, s: f64, lat: &Lattice) -> Result<HessianCrossCheck> {
    let p = pole_for(r, s, lat)?;
    let q = lat.from_rs(r, s);
    let jac = jacobian_f(r, s, lat)?;
    let cpq = (lat.wp(q - p)? - lat.wp(q + p)?).norm_sqr() / lat.wp_prime(p)?.norm_sqr();
    let via_hitchin = -cpq / (16.0 * PI * PI * lat.im_tau) * jac.det;
    let via_hessian = green::hessian_gp(q, p, lat)?.det;
    let rel_diff = (via_hitchin - via_hessian).abs() / via_hessian.abs().max(1e-300);
    Ok(HessianCrossCheck {
        via_hitchin,
        via_hessian,
        rel_diff,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stencil {
    ThreePoint,
    FivePoint,
}

#[derive(Debug, Clone, Copy)]
pub struct PviOptions {
    /// direction of the τ-line; the step is dtau · direction
    pub direction: Complex64,
    pub stencil: Stencil,
    pub branch_threshold: f64,
}

impl Default for PviOptions {
    fn default() -> Self {
        PviOptions {
            direction: I,
            stencil: Stencil::ThreePoint,
            branch_threshold: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PviResult {
    #[serde(with = "crate::cx")]
    pub p: Complex64,
    #[serde(with = "crate::cx")]
    pub p_second: Complex64,
    #[serde(with = "crate::cx")]
    pub rhs: Complex64,
    pub residual: f64,
}

/// Representative of ±p0 modulo Λ_τ closest to `prev`.
fn track(pair: (Complex64, Complex64), prev: Complex64, lat: &Lattice, threshold: f64) -> Result<Complex64> {
    let mut best = pair.0;
    let mut dist = f64::INFINITY;
    for base in [pair.0, -pair.0] {
        let (b0, _, _) = lat.reduce_centered(base - prev);
        for m in -1..=1 {
            for n in -1..=1 {
                let cand = prev + b0 + m as f64 + lat.tau * n as f64;
                let d = (cand - prev).norm();
                if d < dist {
                    dist = d;
                    best = cand;
                }
            }
        }
    }
    if dist > threshold {
        return Err(Error::Branch(dist));
    }
    Ok(best)
}

/// |d²p/dτ² + (1/32π²) Σ_k ℘'(p + ω_k/2; τ)| for the p(τ) with
/// ℘(p(τ); τ) = f(r, s; τ), using central differences along a τ-line.
pub fn pvi_residual(r: f64, s: f64, tau: Complex64, dtau: f64, opts: &PviOptions) -> Result<PviResult> {
    let h = opts.direction * dtau;
    let lat0 = Lattice::new(tau)?;
    let p0 = pole_for(r, s, &lat0)?;
    let at = |t: Complex64, prev: Complex64| -> Result<Complex64> {
        let lat = Lattice::new(t)?;
        let c = f_rs(r, s, &lat)?;
        if !c.in_u {
            return Err(Error::Degenerate("τ-line leaves U".into()));
        }
        track(wp_inverse(c.f, &lat)?, prev, &lat, opts.branch_threshold)
    };
    let p_plus = at(tau + h, p0)?;
    let p_minus = at(tau - h, p0)?;
    let p_second = match opts.stencil {
        Stencil::ThreePoint => (p_plus - 2.0 * p0 + p_minus) / (h * h),
        Stencil::FivePoint => {
            let p_pp = at(tau + 2.0 * h, p_plus)?;
            let p_mm = at(tau - 2.0 * h, p_minus)?;
            (-p_pp + 16.0 * p_plus - 30.0 * p0 + 16.0 * p_minus - p_mm) / (12.0 * h * h)
        }
    };
    let mut sum = Complex64::new(0.0, 0.0);
    for k in 0..4 {
        sum += lat0.wp_prime(p0 + lat0.half_period(k))?;
    }
    let rhs = -sum / (32.0 * PI * PI);
    Ok(PviResult {
        p: p0,
        p_second,
        rhs,
        residual: (p_second - rhs).norm(),
    })
}
