//! Phase scans: the critical-point count of G_p over a grid of poles,
//! laid out either in the cell (p-space) or in the ℘(p)-plane.
//!
//! Samples are solved in parallel and emitted in row-major order, so the
//! output does not depend on the worker count.

use crate::critpoints::{critical_points_gp, Classification, FinderOptions, Kind};
use crate::degeneracy::{classify_region_with_band, Sign};
use crate::elliptic::Lattice;
use crate::error::{Error, Result};
use crate::hitchin::wp_inverse;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::io::Write;

pub const SCHEMA_VERSION: u32 = 1;
pub const BOUNDARY_BAND: f64 = 1e-6;
pub const CSV_HEADER: [&str; 7] = ["re_wp", "im_wp", "re_p", "im_p", "count", "m", "nondeg"];

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "space", rename_all = "snake_case")]
pub enum ScanMode {
    /// the whole cell, or a square window around a centre
    P { window: Option<(f64, f64, f64)> },
    /// rectangle [re_lo, re_hi] × [im_lo, im_hi] in the ℘(p)-plane
    Wp { rect: [f64; 4] },
}

impl ScanMode {
    pub fn default_wp() -> Self {
        let a = 6.0 * PI;
        ScanMode::Wp { rect: [-a, a, -a, a] }
    }
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    pub tau: Complex64,
    pub grid: usize,
    pub mode: ScanMode,
    pub finder: FinderOptions,
    /// None: rayon's default pool
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleStatus {
    Valid,
    ExcludedTwoTorsion,
    ExcludedBoundary,
    Failed,
}

#[derive(Debug, Clone, Serialize)]
pub struct PhaseSample {
    pub row: usize,
    pub col: usize,
    pub status: SampleStatus,
    #[serde(with = "crate::cx")]
    pub p: Complex64,
    #[serde(with = "crate::cx")]
    pub wp_p: Complex64,
    pub count: usize,
    pub m: usize,
    pub signs: [i8; 4],
    pub all_nondegenerate: bool,
    pub degree_sum: Option<i32>,
    pub nontrivial_saddles: usize,
    pub nontrivial_minima: usize,
    /// count lies in the menu predicted by m (only meaningful when valid and nondegenerate)
    pub menu_ok: bool,
    pub message: Option<String>,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct ScanSummary {
    pub schema: u32,
    pub total: usize,
    pub valid: usize,
    pub excluded_two_torsion: usize,
    pub excluded_boundary: usize,
    pub failed: usize,
    pub menu_violations: usize,
    pub degenerate: usize,
    /// m → (count → number of samples)
    pub histogram: BTreeMap<usize, BTreeMap<usize, usize>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanResult {
    pub summary: ScanSummary,
    pub samples: Vec<PhaseSample>,
}

fn grid_point(mode: &ScanMode, lat: &Lattice, n: usize, row: usize, col: usize) -> Complex64 {
    let t = |k: usize| (k as f64 + 0.5) / n as f64;
    match *mode {
        ScanMode::P { window: None } => lat.from_rs(t(col), t(row)),
        ScanMode::P {
            window: Some((cr, ci, rad)),
        } => Complex64::new(cr - rad + 2.0 * rad * t(col), ci - rad + 2.0 * rad * t(row)),
        ScanMode::Wp { rect } => {
            let lin = |lo: f64, hi: f64, k: usize| {
                if n == 1 {
                    (lo + hi) / 2.0
                } else {
                    lo + (hi - lo) * k as f64 / (n - 1) as f64
                }
            };
            Complex64::new(lin(rect[0], rect[1], col), lin(rect[2], rect[3], row))
        }
    }
}

fn blank(row: usize, col: usize, status: SampleStatus, p: Complex64, wp_p: Complex64) -> PhaseSample {
    PhaseSample {
        row,
        col,
        status,
        p,
        wp_p,
        count: 0,
        m: 0,
        signs: [0; 4],
        all_nondegenerate: false,
        degree_sum: None,
        nontrivial_saddles: 0,
        nontrivial_minima: 0,
        menu_ok: false,
        message: None,
    }
}

fn sample(cfg: &ScanConfig, lat: &Lattice, row: usize, col: usize) -> PhaseSample {
    let nan = Complex64::new(f64::NAN, f64::NAN);
    let x = grid_point(&cfg.mode, lat, cfg.grid, row, col);
    let (p, wp_p) = match cfg.mode {
        ScanMode::Wp { .. } => {
            if (1..=3).any(|k| (x - lat.e(k)).norm() <= 1e-9 * (1.0 + x.norm())) {
                return blank(row, col, SampleStatus::ExcludedTwoTorsion, nan, x);
            }
            match wp_inverse(x, lat) {
                Ok((p, _)) => (p, x),
                Err(e) => {
                    let mut s = blank(row, col, SampleStatus::Failed, nan, x);
                    s.message = Some(e.to_string());
                    return s;
                }
            }
        }
        ScanMode::P { .. } => {
            if lat.is_two_torsion(x, 1e-9) {
                return blank(row, col, SampleStatus::ExcludedTwoTorsion, x, nan);
            }
            match lat.wp(x) {
                Ok(w) => (x, w),
                Err(_) => return blank(row, col, SampleStatus::ExcludedTwoTorsion, x, nan),
            }
        }
    };
    let region = match classify_region_with_band(wp_p, lat, BOUNDARY_BAND) {
        Ok(r) => r,
        Err(Error::TwoTorsion(_)) => return blank(row, col, SampleStatus::ExcludedTwoTorsion, p, wp_p),
        Err(e) => {
            let mut s = blank(row, col, SampleStatus::Failed, p, wp_p);
            s.message = Some(e.to_string());
            return s;
        }
    };
    let mut out = blank(row, col, SampleStatus::Valid, p, wp_p);
    out.m = region.m;
    out.signs = region.signs.map(Sign::as_i8);
    if region.on_boundary() {
        out.status = SampleStatus::ExcludedBoundary;
        return out;
    }
    match critical_points_gp(p, lat, &cfg.finder) {
        Ok(set) => {
            out.count = set.count;
            out.all_nondegenerate = set.all_nondegenerate;
            out.degree_sum = set.degree_sum;
            out.nontrivial_saddles = set
                .nontrivial()
                .filter(|c| c.classification == Classification::Saddle)
                .count();
            out.nontrivial_minima = set
                .nontrivial()
                .filter(|c| c.classification == Classification::Minimum)
                .count();
            out.menu_ok = region.predicted_counts.contains(&set.count);
            if set.all_nondegenerate && set.degree_sum != Some(-2) {
                out.status = SampleStatus::Failed;
                out.message = Some(format!("degree sum {:?} with {} points", set.degree_sum, set.count));
            }
            // trivial signs from the finder must match the disk test
            for c in set.points.iter().filter(|c| c.kind == Kind::Trivial) {
                let k = (0..4)
                    .find(|&k| lat.torus_distance(c.location.z, lat.half_period(k)) < 1e-9)
                    .unwrap_or(0);
                if c.local_degree != i32::from(out.signs[k]) && c.local_degree != 0 {
                    out.status = SampleStatus::Failed;
                    out.message = Some(format!("sign mismatch at half-period {k}"));
                }
            }
        }
        Err(e) => {
            out.status = SampleStatus::Failed;
            out.message = Some(e.to_string());
        }
    }
    out
}

pub fn run_scan(cfg: &ScanConfig) -> Result<ScanResult> {
    let lat = Lattice::new(cfg.tau)?;
    let n = cfg.grid;
    let work = || -> Vec<PhaseSample> {
        (0..n * n)
            .into_par_iter()
            .map(|k| sample(cfg, &lat, k / n, k % n))
            .collect()
    };
    let samples = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::Domain(e.to_string()))?
            .install(work),
        None => work(),
    };

    let mut summary = ScanSummary {
        schema: SCHEMA_VERSION,
        total: samples.len(),
        ..Default::default()
    };
    for s in &samples {
        match s.status {
            SampleStatus::Valid => {
                summary.valid += 1;
                if s.all_nondegenerate {
                    *summary.histogram.entry(s.m).or_default().entry(s.count).or_default() += 1;
                    if !s.menu_ok {
                        summary.menu_violations += 1;
                    }
                } else {
                    summary.degenerate += 1;
                }
            }
            SampleStatus::ExcludedTwoTorsion => summary.excluded_two_torsion += 1,
            SampleStatus::ExcludedBoundary => summary.excluded_boundary += 1,
            SampleStatus::Failed => summary.failed += 1,
        }
    }
    Ok(ScanResult { summary, samples })
}

/// CSV with a `# schema=1` line ahead of the header; valid samples only.
pub fn write_csv<W: Write>(result: &ScanResult, out: W) -> std::io::Result<()> {
    let mut out = out;
    writeln!(out, "# schema={SCHEMA_VERSION}")?;
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for s in result.samples.iter().filter(|s| s.status == SampleStatus::Valid) {
        w.write_record([
            s.wp_p.re.to_string(),
            s.wp_p.im.to_string(),
            s.p.re.to_string(),
            s.p.im.to_string(),
            s.count.to_string(),
            s.m.to_string(),
            u8::from(s.all_nondegenerate).to_string(),
        ])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_scan_is_worker_independent() {
        let mk = |w| ScanConfig {
            tau: Complex64::new(0.0, 1.0),
            grid: 6,
            mode: ScanMode::default_wp(),
            finder: FinderOptions::default(),
            workers: Some(w),
        };
        let mut a = Vec::new();
        let mut b = Vec::new();
        write_csv(&run_scan(&mk(1)).unwrap(), &mut a).unwrap();
        write_csv(&run_scan(&mk(3)).unwrap(), &mut b).unwrap();
        assert_eq!(a, b);
        assert!(String::from_utf8(a).unwrap().starts_with("# schema=1\nre_wp,im_wp,re_p,im_p,count,m,nondeg\n"));
    }
}
