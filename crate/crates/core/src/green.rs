//! The Green function of the flat torus and its two-pole average.
//!
//! With z = r + sτ,
//!
//!   −4π ∂G/∂z = ζ(z) − rη1 − sη2
//!   2π G_xx = Re(℘ + η1),  2π G_xy = −Im(℘ + η1),  2π G_yy = −Re(℘ + η1) + 2π/Im τ
//!
//! G_p(z) = ½(G(z+p) + G(z−p)) inherits both by averaging.

use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

/// ∂G/∂z together with the real gradient (G_x, G_y) = (2 Re ∂G, −2 Im ∂G).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct Gradient {
    #[serde(with = "crate::cx")]
    pub dgdz: Complex64,
    pub gx: f64,
    pub gy: f64,
}

impl Gradient {
    fn from_dgdz(dgdz: Complex64) -> Self {
        Gradient {
            dgdz,
            gx: 2.0 * dgdz.re,
            gy: -2.0 * dgdz.im,
        }
    }

    pub fn norm(&self) -> f64 {
        self.gx.hypot(self.gy)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct Hessian {
    pub gxx: f64,
    pub gxy: f64,
    pub gyy: f64,
    pub det: f64,
    pub trace: f64,
}

impl Hessian {
    /// Hessian of G at a point where ℘ takes the value `wp`.
    fn from_wp(wp: Complex64, lat: &Lattice) -> Self {
        let w = wp + lat.eta1;
        let k = 1.0 / (2.0 * PI);
        let gxx = k * w.re;
        let gxy = -k * w.im;
        let gyy = -k * w.re + 1.0 / lat.im_tau;
        Hessian {
            gxx,
            gxy,
            gyy,
            det: gxx * gyy - gxy * gxy,
            trace: gxx + gyy,
        }
    }
}

/// ζ(z) − rη1 − sη2, which is periodic.
pub fn zeta_periodic(z: Complex64, lat: &Lattice) -> Result<Complex64> {
    let (r, s) = lat.decompose_rs(z);
    Ok(lat.zeta(z)? - lat.eta_of(r, s))
}

pub fn grad_g(z: Complex64, lat: &Lattice) -> Result<Gradient> {
    Ok(Gradient::from_dgdz(-zeta_periodic(z, lat)? / (4.0 * PI)))
}

pub fn grad_gp(z: Complex64, p: Complex64, lat: &Lattice) -> Result<Gradient> {
    let (r, s) = lat.decompose_rs(z);
    let sum = lat.zeta(z + p)? + lat.zeta(z - p)? - 2.0 * lat.eta_of(r, s);
    Ok(Gradient::from_dgdz(-sum / (8.0 * PI)))
}

pub fn hessian_g(z: Complex64, lat: &Lattice) -> Result<Hessian> {
    Ok(Hessian::from_wp(lat.wp(z)?, lat))
}

pub fn hessian_gp(z: Complex64, p: Complex64, lat: &Lattice) -> Result<Hessian> {
    let w = (lat.wp(z + p)? + lat.wp(z - p)?) / 2.0;
    Ok(Hessian::from_wp(w, lat))
}

/// det D²G_p = (1/4Imτ²)(1 − |(℘(z+p)+℘(z−p)+2η1) Imτ/2π − 1|²).
pub fn gp_det_closed_form(z: Complex64, p: Complex64, lat: &Lattice) -> Result<f64> {
    let t = lat.im_tau;
    let w = lat.wp(z + p)? + lat.wp(z - p)? + 2.0 * lat.eta1;
    let x = w * t / (2.0 * PI) - 1.0;
    Ok((1.0 - x.norm_sqr()) / (4.0 * t * t))
}

/// G(z) up to an additive constant:
/// −(1/2π) log|θ1(πz)| + (Im z)²/(2 Im τ), evaluated on the centred cell.
pub fn green_value_rel(z: Complex64, lat: &Lattice) -> Result<f64> {
    let (z0, _, _) = lat.reduce_centered(z);
    let th = lat.theta1(PI * z0);
    if th.t0.norm() == 0.0 {
        return Err(Error::Pole(z));
    }
    Ok(-th.t0.norm().ln() / (2.0 * PI) + z0.im * z0.im / (2.0 * lat.im_tau))
}

pub fn green_p_value_rel(z: Complex64, p: Complex64, lat: &Lattice) -> Result<f64> {
    Ok(0.5 * (green_value_rel(z + p, lat)? + green_value_rel(z - p, lat)?))
}
