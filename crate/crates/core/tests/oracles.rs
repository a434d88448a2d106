//! Independent oracles: q-expansions, lattice sums and finite differences
//! checked against the theta-function implementation.

use std::f64::consts::PI;
use torus_green::critpoints::{critical_points_gp, FinderOptions};
use torus_green::degeneracy::{classify_region, half_period_sign};
use torus_green::elliptic::modular_transform_check;
use torus_green::green::{self, gp_det_closed_form, green_p_value_rel, green_value_rel, hessian_g, hessian_gp};
use torus_green::hitchin;
use torus_green::{Complex64 as C, Lattice};

fn taus() -> [C; 5] {
    [
        C::new(0.0, 1.0),
        C::new(0.0, 2.0),
        C::new(0.5, 3f64.sqrt() / 2.0),
        C::new(0.3, 1.2),
        C::new(-0.45, 0.6),
    ]
}

fn divisor_sum(k: u64, power: u32) -> f64 {
    (1..=k).filter(|d| k.is_multiple_of(*d)).map(|d| (d as f64).powi(power as i32)).sum()
}

/// 1 + c Σ σ_{power}(k) x^k with x = e^{2πiτ}.
fn eisenstein(tau: C, c: f64, power: u32) -> C {
    let x = (C::new(0.0, 2.0 * PI) * tau).exp();
    let mut s = C::new(0.0, 0.0);
    let mut xk = C::new(1.0, 0.0);
    for k in 1..400u64 {
        xk *= x;
        let t = xk * divisor_sum(k, power);
        s += t;
        if t.norm() < 1e-20 {
            break;
        }
    }
    1.0 + c * s
}

/// 1/sin²w = −4x/(1 − x)² with x = e^{±2iw}, whichever is small.
fn csc2(w: C) -> C {
    let x = if w.im >= 0.0 { (C::new(0.0, 2.0) * w).exp() } else { (C::new(0.0, -2.0) * w).exp() };
    -4.0 * x / ((1.0 - x) * (1.0 - x))
}

/// ℘(z) = −(π²/3)E2 + π² Σ_n csc²(π(z + nτ)).
fn wp_csc_series(z: C, tau: C) -> C {
    let mut s = C::new(0.0, 0.0);
    for n in -60i32..=60 {
        s += csc2((z + tau * n as f64) * PI);
    }
    -(PI * PI / 3.0) * eisenstein(tau, -24.0, 1) + PI * PI * s
}

/// Symmetric box lattice sum; only good to a few digits.
fn wp_lattice_sum(z: C, tau: C, n: i32) -> C {
    let mut s = 1.0 / (z * z);
    for m in -n..=n {
        for k in -n..=n {
            if m == 0 && k == 0 {
                continue;
            }
            let w = C::new(m as f64, 0.0) + tau * k as f64;
            s += 1.0 / ((z - w) * (z - w)) - 1.0 / (w * w);
        }
    }
    s
}

fn rel(a: C, b: C) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

#[test]
fn wp_matches_cosecant_series() {
    for tau in taus() {
        let l = Lattice::new(tau).unwrap();
        for (r, s) in [(0.13, 0.27), (0.5, 0.1), (0.71, 0.66), (0.02, 0.9), (0.4, 0.5)] {
            let z = l.from_rs(r, s);
            let got = l.wp(z).unwrap();
            let want = wp_csc_series(z, tau);
            assert!(rel(got, want) < 1e-11, "tau={tau} z={z}: {got} vs {want}");
        }
    }
}

#[test]
fn wp_matches_direct_lattice_sum() {
    let tau = C::new(0.2, 1.1);
    let l = Lattice::new(tau).unwrap();
    for z in [C::new(0.3, 0.2), C::new(-0.1, 0.45)] {
        let got = l.wp(z).unwrap();
        let want = wp_lattice_sum(z, tau, 300);
        assert!(rel(got, want) < 1e-4, "{got} vs {want}");
    }
}

#[test]
fn invariants_match_eisenstein_series() {
    for tau in taus() {
        let l = Lattice::new(tau).unwrap();
        let g2 = 4.0 * PI.powi(4) / 3.0 * eisenstein(tau, 240.0, 3);
        let g3 = 8.0 * PI.powi(6) / 27.0 * eisenstein(tau, -504.0, 5);
        let eta1 = PI * PI / 3.0 * eisenstein(tau, -24.0, 1);
        assert!((l.g2 - g2).norm() < 1e-10 * g2.norm().max(1.0), "g2 {} vs {g2}", l.g2);
        assert!((l.g3 - g3).norm() < 1e-10 * g3.norm().max(1.0), "g3 {} vs {g3}", l.g3);
        assert!((l.eta1 - eta1).norm() < 1e-12 * eta1.norm().max(1.0));
        // e_k are the roots of 4x³ − g2 x − g3
        for k in 1..=3 {
            let e = l.e(k);
            assert!((4.0 * e * e * e - g2 * e - g3).norm() < 1e-9 * g2.norm().max(1.0));
        }
        assert!((l.e1 + l.e2 + l.e3).norm() < 1e-12 * l.e1.norm());
    }
}

#[test]
fn half_period_values_are_roots_at_half_periods() {
    for tau in taus() {
        let l = Lattice::new(tau).unwrap();
        for k in 1..=3 {
            let h = l.half_period(k);
            assert!(rel(l.wp(h).unwrap(), l.e(k)) < 1e-12);
            assert!(l.wp_prime(h).unwrap().norm() < 1e-9 * l.e(k).norm().powf(1.5).max(1.0));
        }
    }
}

#[test]
fn modular_transformations() {
    let mats = [[1, 1, 0, 1], [0, -1, 1, 0], [1, 0, 1, 1], [2, 1, 1, 1], [1, -1, 0, 1]];
    for tau in [C::new(0.1, 1.3), C::new(-0.2, 0.9), C::new(0.5, 3f64.sqrt() / 2.0)] {
        for m in mats {
            let r = modular_transform_check(tau, m, C::new(0.17, 0.11)).unwrap();
            assert!(r.max() < 1e-10, "tau={tau} {m:?}: {r:?}");
        }
    }
    assert!(modular_transform_check(C::new(0.0, 1.0), [1, 1, 1, 1], C::new(0.1, 0.1)).is_err());
}

#[test]
fn sigma_log_derivative_is_zeta() {
    let l = Lattice::new(C::new(0.3, 1.2)).unwrap();
    for z in [C::new(0.21, 0.33), C::new(1.4, -0.7), C::new(-0.05, 0.02)] {
        let h = 1e-6;
        let d = (l.sigma(z + h) - l.sigma(z - h)) / (2.0 * h) / l.sigma(z);
        assert!(rel(d, l.zeta(z).unwrap()) < 1e-7);
    }
    let z = C::new(1e-4, 2e-4);
    assert!((l.sigma(z) / z - 1.0).norm() < 1e-12);
}

/// Second differences of G against the closed-form Hessian.
#[test]
fn green_hessian_matches_finite_differences() {
    let h = 1e-4;
    for tau in taus() {
        let l = Lattice::new(tau).unwrap();
        let gv = |z: C| green_value_rel(z, &l).unwrap();
        for z in [l.from_rs(0.31, 0.22), l.from_rs(0.77, 0.41), l.from_rs(0.5, 0.5)] {
            let hs = hessian_g(z, &l).unwrap();
            let (dx, dy) = (C::new(h, 0.0), C::new(0.0, h));
            let gxx = (gv(z + dx) - 2.0 * gv(z) + gv(z - dx)) / (h * h);
            let gyy = (gv(z + dy) - 2.0 * gv(z) + gv(z - dy)) / (h * h);
            let gxy = (gv(z + dx + dy) - gv(z + dx - dy) - gv(z - dx + dy) + gv(z - dx - dy)) / (4.0 * h * h);
            let scale = hs.gxx.abs().max(hs.gyy.abs()).max(1.0);
            assert!((gxx - hs.gxx).abs() < 1e-4 * scale, "gxx {gxx} vs {}", hs.gxx);
            assert!((gyy - hs.gyy).abs() < 1e-4 * scale);
            assert!((gxy - hs.gxy).abs() < 1e-4 * scale);

            let gr = green::grad_g(z, &l).unwrap();
            let gx = (gv(z + dx) - gv(z - dx)) / (2.0 * h);
            let gy = (gv(z + dy) - gv(z - dy)) / (2.0 * h);
            assert!((gx - gr.gx).abs() < 1e-6 && (gy - gr.gy).abs() < 1e-6);
        }
    }
}

#[test]
fn green_is_doubly_periodic() {
    let l = Lattice::new(C::new(0.3, 1.2)).unwrap();
    let z = C::new(0.2, 0.4);
    let g0 = green_value_rel(z, &l).unwrap();
    for w in [C::new(1.0, 0.0), l.tau, l.tau - 2.0] {
        assert!((green_value_rel(z + w, &l).unwrap() - g0).abs() < 1e-12);
    }
    let p = C::new(0.11, 0.3);
    let gp = green_p_value_rel(z, p, &l).unwrap();
    assert!((green_p_value_rel(z + l.tau, p, &l).unwrap() - gp).abs() < 1e-12);
}

#[test]
fn gp_closed_form_determinant() {
    for tau in taus() {
        let l = Lattice::new(tau).unwrap();
        let p = l.from_rs(0.17, 0.29);
        for z in [l.from_rs(0.4, 0.1), l.from_rs(0.62, 0.83)] {
            let a = hessian_gp(z, p, &l).unwrap().det;
            let b = gp_det_closed_form(z, p, &l).unwrap();
            assert!((a - b).abs() < 1e-10 * a.abs().max(1.0), "{a} vs {b}");
        }
    }
}

/// Sign of the Hessian at a half-period, from the disks and from the Hessian itself.
#[test]
fn region_signs_match_half_period_hessians() {
    for tau in taus() {
        let l = Lattice::new(tau).unwrap();
        for (r, s) in [(0.1, 0.05), (0.23, 0.31), (0.4, 0.45), (0.05, 0.37), (0.33, 0.02), (0.26, 0.26)] {
            let p = l.from_rs(r, s);
            let class = classify_region(l.wp(p).unwrap(), &l).unwrap();
            for k in 0..4 {
                let det = hessian_gp(l.half_period(k), p, &l).unwrap().det;
                let sign = half_period_sign(p, k, &l).unwrap().as_i8();
                assert_eq!(sign, det.signum() as i8, "tau={tau} p={p} k={k} det={det}");
                assert_eq!(class.signs[k].as_i8(), sign);
            }
        }
    }
}

#[test]
fn hitchin_jacobians_agree() {
    let l = Lattice::new(C::new(0.1, 1.1)).unwrap();
    for (r, s) in [(0.3, 0.3), (0.12, 0.71), (0.45, 0.2)] {
        let a = hitchin::jacobian_f(r, s, &l).unwrap();
        let b = hitchin::jacobian_f_direct(r, s, &l).unwrap();
        let scale = a.f_r.norm().max(a.f_s.norm());
        assert!((a.f_r - b.f_r).norm() < 1e-9 * scale);
        assert!((a.f_s - b.f_s).norm() < 1e-9 * scale);
        assert!((a.det - b.det).abs() < 1e-8 * a.det.abs().max(1.0));
    }
}

#[test]
fn hitchin_image_is_wp_of_the_pole() {
    let l = Lattice::new(C::new(0.0, 1.0)).unwrap();
    let p = C::new(0.3, 0.2);
    let set = critical_points_gp(p, &l, &FinderOptions::default()).unwrap();
    let wp_p = l.wp(p).unwrap();
    for cp in set.nontrivial() {
        let hv = hitchin::f_rs(cp.location.r, cp.location.s, &l).unwrap();
        assert!(rel(hv.f, wp_p) < 1e-9, "{} vs {wp_p}", hv.f);
    }
}

#[test]
fn readme_library_example() {
    let lat = Lattice::new(C::new(0.0, 2.0)).unwrap();
    let set = critical_points_gp(C::new(0.55, 1.0), &lat, &FinderOptions::default()).unwrap();
    assert_eq!(set.count, 4);
    assert_eq!(set.degree_sum, Some(-2));
}
