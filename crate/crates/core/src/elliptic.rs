//! Weierstrass functions for the lattice Λ = Z + Zτ.
//!
//! Everything is driven by the odd Jacobi theta function
//!
//!   θ1(u) = 2 Σ_{n≥0} (-1)^n q^{(n+1/2)²} sin((2n+1)u),   q = e^{iπτ},
//!
//! through
//!
//!   σ(z) = exp(η1 z²/2) θ1(πz) / (π θ1'(0))
//!   ζ(z) = η1 z + π θ1'(πz)/θ1(πz)
//!   ℘(z) = -ζ'(z)
//!
//! Arguments are first reduced to the centred cell |r|, |s| ≤ 1/2 so the
//! series only ever sees |Im u| ≤ π Im τ / 2. Half-period values come from
//! the theta constants.

use crate::error::{Error, Result};
use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::PI;

pub const MIN_IM_TAU: f64 = 0.05;
const MAX_TERMS: usize = 64;
const SERIES_REL_TOL: f64 = 1e-16;

const I: Complex64 = Complex64 { re: 0.0, im: 1.0 };

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

/// Lattice Z + Zτ together with its standard invariants.
#[derive(Debug, Clone, Serialize)]
pub struct Lattice {
    #[serde(with = "crate::cx")]
    pub tau: Complex64,
    /// 0, 1, τ, 1 + τ
    #[serde(with = "crate::cx::array4")]
    pub omega: [Complex64; 4],
    #[serde(with = "crate::cx")]
    pub nome: Complex64,
    #[serde(with = "crate::cx")]
    pub eta1: Complex64,
    #[serde(with = "crate::cx")]
    pub eta2: Complex64,
    #[serde(with = "crate::cx")]
    pub e1: Complex64,
    #[serde(with = "crate::cx")]
    pub e2: Complex64,
    #[serde(with = "crate::cx")]
    pub e3: Complex64,
    #[serde(with = "crate::cx")]
    pub g2: Complex64,
    #[serde(with = "crate::cx")]
    pub g3: Complex64,
    pub im_tau: f64,
    #[serde(skip)]
    coeffs: Vec<Complex64>,
    #[serde(skip)]
    theta1_prime0: Complex64,
}

/// θ1 and its first three u-derivatives.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Theta1 {
    pub t0: Complex64,
    pub t1: Complex64,
    pub t2: Complex64,
    pub t3: Complex64,
}

/// ℘, ℘' and ζ from a single theta evaluation.
#[derive(Debug, Clone, Copy)]
pub struct WeierstrassValues {
    pub wp: Complex64,
    pub wp_prime: Complex64,
    pub zeta: Complex64,
}

/// σ(z) = e^{log_scale} · value and σ'(z) = e^{log_scale} · deriv.
///
/// Keeping the exponential factor apart lets callers form ratios of σ far
/// from the origin without overflow.
#[derive(Debug, Clone, Copy)]
pub struct SigmaParts {
    pub log_scale: Complex64,
    pub value: Complex64,
    pub deriv: Complex64,
}

/// A point of the torus with its lattice coordinates.
///
/// `r`, `s` are the coordinates of the representative in [0,1)², and
/// `cell` is the lattice translate removed from `z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TorusPoint {
    #[serde(with = "crate::cx")]
    pub z: Complex64,
    pub r: f64,
    pub s: f64,
    pub cell: (i64, i64),
}

impl TorusPoint {
    pub fn new(z: Complex64, lat: &Lattice) -> Self {
        let (r, s) = lat.decompose_rs(z);
        let (r0, m) = wrap_unit(r);
        let (s0, n) = wrap_unit(s);
        TorusPoint {
            z: lat.from_rs(r0, s0),
            r: r0,
            s: s0,
            cell: (m, n),
        }
    }
}

/// Split x into x0 + m with x0 in [0,1); values within 1e-13 of 1 wrap to 0.
fn wrap_unit(x: f64) -> (f64, i64) {
    let m = x.floor();
    let mut x0 = x - m;
    let mut m = m as i64;
    if 1.0 - x0 < 1e-13 {
        x0 = 0.0;
        m += 1;
    }
    (x0, m)
}

impl Lattice {
    pub fn new(tau: Complex64) -> Result<Self> {
        if !tau.re.is_finite() || !tau.im.is_finite() || tau.im < MIN_IM_TAU {
            return Err(Error::Domain(format!(
                "Im tau must be at least {MIN_IM_TAU}, got tau = {tau}"
            )));
        }
        let nome = (I * PI * tau).exp();

        let mut coeffs = Vec::with_capacity(MAX_TERMS);
        for n in 0..MAX_TERMS {
            let h = n as f64 + 0.5;
            let sign = if n % 2 == 0 { 2.0 } else { -2.0 };
            let cn = sign * (I * PI * tau * h * h).exp();
            if cn.norm() < 1e-300 && n > 0 {
                break;
            }
            coeffs.push(cn);
        }

        let mut lat = Lattice {
            tau,
            omega: [c(0.0), c(1.0), tau, tau + 1.0],
            nome,
            eta1: c(0.0),
            eta2: c(0.0),
            e1: c(0.0),
            e2: c(0.0),
            e3: c(0.0),
            g2: c(0.0),
            g3: c(0.0),
            im_tau: tau.im,
            coeffs,
            theta1_prime0: c(0.0),
        };

        // derivatives of θ1 at 0: θ1' = Σ c_n (2n+1), θ1''' = -Σ c_n (2n+1)³
        let mut d1 = c(0.0);
        let mut d3 = c(0.0);
        for (n, &cn) in lat.coeffs.iter().enumerate() {
            let k = (2 * n + 1) as f64;
            d1 += cn * k;
            d3 -= cn * k * k * k;
        }
        lat.theta1_prime0 = d1;
        lat.eta1 = -PI * PI * d3 / (3.0 * d1);

        // η2 = 2ζ(τ/2), evaluated without cell reduction
        let th = lat.theta1(PI * tau / 2.0);
        lat.eta2 = lat.eta1 * tau + 2.0 * PI * th.t1 / th.t0;

        let (t2, t3, t4) = theta_constants(tau);
        let (t2_4, t3_4, t4_4) = (t2.powi(4), t3.powi(4), t4.powi(4));
        let k = PI * PI / 3.0;
        lat.e1 = k * (t3_4 + t4_4);
        lat.e2 = -k * (t2_4 + t3_4);
        lat.e3 = k * (t2_4 - t4_4);
        lat.g2 = 2.0 * (lat.e1 * lat.e1 + lat.e2 * lat.e2 + lat.e3 * lat.e3);
        lat.g3 = 4.0 * lat.e1 * lat.e2 * lat.e3;
        Ok(lat)
    }

    /// e_k = ℘(ω_k/2) for k = 1, 2, 3.
    pub fn e(&self, k: usize) -> Complex64 {
        match k {
            1 => self.e1,
            2 => self.e2,
            3 => self.e3,
            _ => panic!("half-period index {k} out of range 1..=3"),
        }
    }

    pub fn half_period(&self, k: usize) -> Complex64 {
        self.omega[k] / 2.0
    }

    /// η(m + nτ) = m η1 + n η2.
    pub fn eta_of(&self, m: f64, n: f64) -> Complex64 {
        self.eta1 * m + self.eta2 * n
    }

    pub fn decompose_rs(&self, z: Complex64) -> (f64, f64) {
        let s = z.im / self.im_tau;
        (z.re - s * self.tau.re, s)
    }

    pub fn from_rs(&self, r: f64, s: f64) -> Complex64 {
        c(r) + self.tau * s
    }

    /// z = z0 + m + nτ with z0 in the centred cell.
    pub fn reduce_centered(&self, z: Complex64) -> (Complex64, i64, i64) {
        let (r, s) = self.decompose_rs(z);
        let m = r.round();
        let n = s.round();
        (z - m - self.tau * n, m as i64, n as i64)
    }

    /// Shortest representative of z modulo Λ.
    pub fn nearest_image(&self, z: Complex64) -> Complex64 {
        let (z0, _, _) = self.reduce_centered(z);
        let mut best = z0;
        for m in -1..=1 {
            for n in -1..=1 {
                let w = z0 + m as f64 + self.tau * n as f64;
                if w.norm_sqr() < best.norm_sqr() {
                    best = w;
                }
            }
        }
        best
    }

    pub fn torus_distance(&self, a: Complex64, b: Complex64) -> f64 {
        self.nearest_image(a - b).norm()
    }

    /// True when 2z ∈ Λ up to `tol`.
    pub fn is_two_torsion(&self, z: Complex64, tol: f64) -> bool {
        (0..4).any(|k| self.torus_distance(z, self.half_period(k)) <= tol)
    }

    pub(crate) fn theta1(&self, u: Complex64) -> Theta1 {
        let (s1, c1) = (u.sin(), u.cos());
        let u2 = 2.0 * u;
        let (s2, c2) = (u2.sin(), u2.cos());
        let (mut sn, mut cn_) = (s1, c1);
        let mut acc = [c(0.0); 4];
        for (n, &cn) in self.coeffs.iter().enumerate() {
            let k = (2 * n + 1) as f64;
            let terms = [cn * sn, cn * cn_ * k, -cn * sn * k * k, -cn * cn_ * k * k * k];
            let mut done = n > 0;
            for j in 0..4 {
                acc[j] += terms[j];
                if terms[j].norm() > SERIES_REL_TOL * acc[j].norm() {
                    done = false;
                }
            }
            if done {
                break;
            }
            let next_s = sn * c2 + cn_ * s2;
            cn_ = cn_ * c2 - sn * s2;
            sn = next_s;
        }
        Theta1 {
            t0: acc[0],
            t1: acc[1],
            t2: acc[2],
            t3: acc[3],
        }
    }

    fn pole_check(&self, z: Complex64, z0: Complex64, th: &Theta1) -> Result<()> {
        if th.t0 == c(0.0) || z0.norm() <= 4.0 * f64::EPSILON * (1.0 + z.norm()) {
            Err(Error::Pole(z))
        } else {
            Ok(())
        }
    }

    /// ℘, ℘' and ζ at z; errors on lattice points.
    pub fn eval(&self, z: Complex64) -> Result<WeierstrassValues> {
        let (z0, m, n) = self.reduce_centered(z);
        let th = self.theta1(PI * z0);
        self.pole_check(z, z0, &th)?;
        let l = th.t1 / th.t0;
        let wp = -self.eta1 + PI * PI * (l * l - th.t2 / th.t0);
        let wp_prime = PI.powi(3) * (-th.t3 / th.t0 + 3.0 * th.t2 * l / th.t0 - 2.0 * l * l * l);
        let zeta = self.eta1 * z0 + PI * l + self.eta_of(m as f64, n as f64);
        Ok(WeierstrassValues { wp, wp_prime, zeta })
    }

    pub fn wp(&self, z: Complex64) -> Result<Complex64> {
        self.eval(z).map(|v| v.wp)
    }

    pub fn wp_prime(&self, z: Complex64) -> Result<Complex64> {
        self.eval(z).map(|v| v.wp_prime)
    }

    pub fn zeta(&self, z: Complex64) -> Result<Complex64> {
        self.eval(z).map(|v| v.zeta)
    }

    /// ℘'' = 6℘² − g2/2.
    pub fn wp_second(&self, z: Complex64) -> Result<Complex64> {
        let w = self.wp(z)?;
        Ok(6.0 * w * w - self.g2 / 2.0)
    }

    pub fn sigma_parts(&self, z: Complex64) -> SigmaParts {
        let (z0, m, n) = self.reduce_centered(z);
        let th = self.theta1(PI * z0);
        let (mf, nf) = (m as f64, n as f64);
        let omega = c(mf) + self.tau * nf;
        let eta_w = self.eta_of(mf, nf);
        let odd = (m + n + m * n).rem_euclid(2) == 1;
        let mut log_scale =
            self.eta1 * z0 * z0 / 2.0 + eta_w * (z0 + omega / 2.0) - (PI * self.theta1_prime0).ln();
        if odd {
            log_scale += I * PI;
        }
        SigmaParts {
            log_scale,
            value: th.t0,
            deriv: (self.eta1 * z0 + eta_w) * th.t0 + PI * th.t1,
        }
    }

    /// σ(z); exactly zero on the lattice.
    pub fn sigma(&self, z: Complex64) -> Complex64 {
        let sp = self.sigma_parts(z);
        if sp.value == c(0.0) {
            return c(0.0);
        }
        sp.log_scale.exp() * sp.value
    }

    /// A branch of log σ(z).
    pub fn ln_sigma(&self, z: Complex64) -> Result<Complex64> {
        let sp = self.sigma_parts(z);
        if sp.value == c(0.0) {
            return Err(Error::Pole(z));
        }
        Ok(sp.log_scale + sp.value.ln())
    }
}

/// θ2(0), θ3(0), θ4(0).
fn theta_constants(tau: Complex64) -> (Complex64, Complex64, Complex64) {
    let mut t2 = c(0.0);
    let mut t3 = c(1.0);
    let mut t4 = c(1.0);
    for n in 0..MAX_TERMS {
        let h = n as f64 + 0.5;
        let a = 2.0 * (I * PI * tau * h * h).exp();
        t2 += a;
        let mut small = a.norm() <= SERIES_REL_TOL * t2.norm();
        if n > 0 {
            let nf = n as f64;
            let b = 2.0 * (I * PI * tau * nf * nf).exp();
            t3 += b;
            t4 += if n % 2 == 0 { b } else { -b };
            small &= b.norm() <= SERIES_REL_TOL * t3.norm().min(t4.norm());
        }
        if n > 1 && small {
            break;
        }
    }
    (t2, t3, t4)
}

/// Residuals of the SL2(Z) transformation laws at one point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ModularResiduals {
    pub wp: f64,
    pub zeta: f64,
    pub g2: f64,
    pub eta: f64,
    pub e: f64,
}

impl ModularResiduals {
    pub fn max(&self) -> f64 {
        self.wp.max(self.zeta).max(self.g2).max(self.eta).max(self.e)
    }
}

/// Checks the weight-2 / weight-1 / weight-4 laws for τ' = (aτ+b)/(cτ+d).
///
/// Residuals are relative, g2 against Σ|e_k|². Requires ad − bc = 1 and Im τ' ≥ `MIN_IM_TAU`.
pub fn modular_transform_check(
    tau: Complex64,
    abcd: [i64; 4],
    z: Complex64,
) -> Result<ModularResiduals> {
    let [a, b, cc, d] = abcd;
    if a * d - b * cc != 1 {
        return Err(Error::Domain(format!("{abcd:?} is not in SL2(Z)")));
    }
    let (af, bf, cf, df) = (a as f64, b as f64, cc as f64, d as f64);
    let j = tau * cf + df;
    let tau2 = (tau * af + bf) / j;
    let l1 = Lattice::new(tau)?;
    let l2 = Lattice::new(tau2)?;
    let rel = |x: Complex64, y: Complex64| (x - y).norm() / y.norm().max(1e-300);

    let v1 = l1.eval(z)?;
    let v2 = l2.eval(z / j)?;
    let wp = rel(v2.wp, j * j * v1.wp);
    let zeta = rel(v2.zeta, j * v1.zeta);
    let g2_scale = l2.e1.norm_sqr() + l2.e2.norm_sqr() + l2.e3.norm_sqr();
    let g2 = (l2.g2 - j.powi(4) * l1.g2).norm() / g2_scale;

    let eta2p = j * (af * l1.eta2 + bf * l1.eta1);
    let eta1p = j * (cf * l1.eta2 + df * l1.eta1);
    let eta = rel(l2.eta1, eta1p).max(rel(l2.eta2, eta2p));

    // ω'/2 maps to (m + nτ)/2 (cτ+d)^{-1}; pick e by the parity of (m, n)
    let by_parity = |m: i64, n: i64| -> Complex64 {
        match (m.rem_euclid(2), n.rem_euclid(2)) {
            (1, 0) => l1.e1,
            (0, 1) => l1.e2,
            _ => l1.e3,
        }
    };
    let e = rel(l2.e1, j * j * by_parity(d, cc))
        .max(rel(l2.e2, j * j * by_parity(b, a)))
        .max(rel(l2.e3, j * j * by_parity(b + d, a + cc)));

    Ok(ModularResiduals {
        wp,
        zeta,
        g2,
        eta,
        e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lat(re: f64, im: f64) -> Lattice {
        Lattice::new(Complex64::new(re, im)).unwrap()
    }

    #[test]
    fn square_lattice_constants() {
        let l = lat(0.0, 1.0);
        assert!((l.eta1 - PI).norm() < 1e-13);
        assert!(l.e3.norm() < 1e-13);
        assert!((l.e1 + l.e2).norm() < 1e-12);
    }

    #[test]
    fn legendre_relation() {
        for &(re, im) in &[(0.0, 1.0), (0.3, 1.2), (-0.4, 0.6), (0.5, 0.8660254037844386)] {
            let l = lat(re, im);
            let lhs = l.tau * l.eta1 - l.eta2;
            assert!((lhs - 2.0 * PI * I).norm() < 1e-12, "{lhs}");
        }
    }

    #[test]
    fn half_period_values() {
        let l = lat(0.2, 0.9);
        for k in 1..=3 {
            let w = l.wp(l.half_period(k)).unwrap();
            assert!((w - l.e(k)).norm() < 1e-11 * l.e(k).norm(), "k={k}");
            assert!(l.wp_prime(l.half_period(k)).unwrap().norm() < 1e-9);
        }
    }

    #[test]
    fn poles_and_zeros() {
        let l = lat(0.1, 1.1);
        assert!(matches!(l.wp(c(0.0)), Err(Error::Pole(_))));
        assert!(matches!(l.zeta(l.tau + 1.0), Err(Error::Pole(_))));
        assert_eq!(l.sigma(c(0.0)), c(0.0));
    }

    #[test]
    fn rejects_small_im_tau() {
        assert!(matches!(Lattice::new(Complex64::new(0.0, 0.01)), Err(Error::Domain(_))));
    }

    #[test]
    fn torus_point_wraps() {
        let l = lat(0.3, 1.0);
        let p = TorusPoint::new(l.from_rs(2.25, -0.5), &l);
        assert!((p.r - 0.25).abs() < 1e-14 && (p.s - 0.5).abs() < 1e-14);
        assert_eq!(p.cell, (2, -1));
    }

    #[test]
    fn sigma_quasi_periodicity() {
        let l = lat(0.1, 0.9);
        let z = Complex64::new(0.23, 0.17);
        for k in 1..=2 {
            let w = l.omega[k];
            let eta = if k == 1 { l.eta1 } else { l.eta2 };
            let lhs = l.sigma(z + w);
            let rhs = -(eta * (z + w / 2.0)).exp() * l.sigma(z);
            assert!((lhs - rhs).norm() < 1e-11 * rhs.norm());
        }
    }
}
