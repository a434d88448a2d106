//! Command-line front end. `run` returns the process exit code:
//! 0 on success, 2 on usage errors, 3 when a consistency check fails,
//! 1 for any other numerical failure.

use crate::critpoints::{critical_points_g, critical_points_gp, CriticalSet, FinderOptions};
use crate::cx::Cx;
use crate::degeneracy::{classify_region, disk_bk, Region};
use crate::dynamics::{attracting_fixed_points, basin_label, DynamicsOptions, PreModular};
use crate::elliptic::Lattice;
use crate::error::Error;
use crate::hitchin::{self, PviOptions, Stencil};
use crate::liouville::{self, DevelopingMap};
use crate::scan::{self, ScanConfig, ScanMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;
use serde_json::json;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use thiserror::Error as ThisError;

#[derive(Debug, Clone, PartialEq, ThisError)]
#[error("invalid complex literal {token:?}: {reason}")]
pub struct ParseComplexError {
    pub token: String,
    pub reason: &'static str,
}

/// Parses `[-]a[±bi]`, `bi`, `i`, `-i` with optional exponents; no whitespace.
pub fn parse_complex(s: &str) -> Result<Complex64, ParseComplexError> {
    let err = |reason| ParseComplexError {
        token: s.to_string(),
        reason,
    };
    if s.is_empty() {
        return Err(err("empty"));
    }
    if s.chars().any(char::is_whitespace) {
        return Err(err("whitespace is not allowed"));
    }
    let num = |t: &str| -> Result<f64, ParseComplexError> {
        if t.chars().any(|c| c.is_ascii_alphabetic() && c != 'e' && c != 'E') {
            return Err(err("unexpected character"));
        }
        let v: f64 = t.parse().map_err(|_| err("malformed number"))?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(err("non-finite number"))
        }
    };
    let coeff = |t: &str| -> Result<f64, ParseComplexError> {
        match t {
            "" | "+" => Ok(1.0),
            "-" => Ok(-1.0),
            _ => num(t),
        }
    };
    // the split is the last sign that is neither leading nor an exponent sign
    let bytes = s.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| (bytes[k] == b'+' || bytes[k] == b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    match s.strip_suffix('i') {
        Some(body) => match split {
            Some(k) => {
                let re = num(&body[..k])?;
                let im = coeff(&body[k..])?;
                Ok(Complex64::new(re, im))
            }
            _ => Ok(Complex64::new(0.0, coeff(body)?)),
        },
        None => {
            if split.is_some() {
                return Err(err("imaginary part must end in i"));
            }
            Ok(Complex64::new(num(s)?, 0.0))
        }
    }
}

fn complex_arg(s: &str) -> Result<Complex64, String> {
    parse_complex(s).map_err(|e| e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "torus-green", version, about = "Critical points of Green functions on flat tori")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// lattice parameter, e.g. 0.5+0.8660254i
    #[arg(long, value_parser = complex_arg, default_value = "i", allow_hyphen_values = true)]
    pub tau: Complex64,
    /// pole p of G_p
    #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
    pub p: Option<Complex64>,
    /// tolerance for the command's consistency check
    #[arg(long)]
    pub tol: Option<f64>,
    /// emit JSON instead of text
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Space {
    P,
    Wp,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Periods, quasi-periods and invariants of the lattice
    LatticeInfo {
        #[command(flatten)]
        common: Common,
    },
    /// Critical points of G (no --p) or G_p
    Critpoints {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 24)]
        density: usize,
    },
    /// The regions B_0..B_3 and, with --p, the classification of ℘(p)
    Disks {
        #[command(flatten)]
        common: Common,
    },
    /// Hitchin's map at (r, s) with its Hessian and PVI cross-checks
    HitchinCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = 1e-3)]
        dtau: f64,
    },
    /// Painlevé VI residual along a τ-line
    PviCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, allow_hyphen_values = true)]
        r: f64,
        #[arg(long, allow_hyphen_values = true)]
        s: f64,
        #[arg(long, default_value_t = 1e-3)]
        dtau: f64,
        #[arg(long)]
        five_point: bool,
    },
    /// Basins of the attracting fixed points of g as a CSV raster
    Basins {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, default_value_t = 2000)]
        max_iter: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Residual, mass and symmetry checks of the Liouville solutions
    LiouvilleCheck {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 1.0)]
        beta: f64,
        #[arg(long, default_value_t = 512)]
        grid: usize,
        #[arg(long, default_value_t = 0.05)]
        rho: f64,
    },
    /// Critical-point counts over a grid of poles
    Scan {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        #[arg(long, value_enum, default_value_t = Space::Wp)]
        mode: Space,
        #[arg(long, default_value_t = 24)]
        density: usize,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
        #[arg(long)]
        out: Option<PathBuf>,
        /// p-space window centre (with --window-radius)
        #[arg(long, value_parser = complex_arg, allow_hyphen_values = true)]
        window_center: Option<Complex64>,
        #[arg(long)]
        window_radius: Option<f64>,
        /// half-width of the ℘(p) square, in units of π
        #[arg(long, default_value_t = 6.0)]
        wp_half_width: f64,
    },
}

#[derive(Debug, ThisError)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("consistency check failed: {0}")]
    Consistency(String),
    #[error(transparent)]
    Numeric(#[from] Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Consistency(_) => 3,
            CliError::Numeric(Error::Domain(_)) | CliError::Numeric(Error::TwoTorsion(_)) => 2,
            CliError::Numeric(Error::Inconsistent(_)) => 3,
            _ => 1,
        }
    }
}

type CliResult = Result<(), CliError>;

fn cx(z: Complex64) -> Cx {
    z.into()
}

fn require_p(common: &Common) -> Result<Complex64, CliError> {
    common.p.ok_or_else(|| CliError::Usage("--p is required".into()))
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            if e.use_stderr() {
                let _ = write!(err, "{e}");
                return 2;
            }
            let _ = write!(out, "{e}");
            return 0;
        }
    };
    match execute(cli.command, out, err) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(cmd: Command, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    match cmd {
        Command::LatticeInfo { common } => lattice_info(&common, out),
        Command::Critpoints { common, density } => critpoints(&common, density, out),
        Command::Disks { common } => disks(&common, out),
        Command::HitchinCheck { common, r, s, dtau } => hitchin_check(&common, r, s, dtau, out),
        Command::PviCheck {
            common,
            r,
            s,
            dtau,
            five_point,
        } => pvi_check(&common, r, s, dtau, five_point, out),
        Command::Basins {
            common,
            grid,
            max_iter,
            out: path,
        } => basins(&common, grid, max_iter, path, out),
        Command::LiouvilleCheck { common, beta, grid, rho } => liouville_check(&common, beta, grid, rho, out),
        Command::Scan {
            common,
            grid,
            mode,
            density,
            workers,
            format,
            out: path,
            window_center,
            window_radius,
            wp_half_width,
        } => {
            let mode = match mode {
                Space::Wp => {
                    let a = wp_half_width * std::f64::consts::PI;
                    ScanMode::Wp { rect: [-a, a, -a, a] }
                }
                Space::P => match (window_center, window_radius) {
                    (Some(c), Some(r)) => ScanMode::P {
                        window: Some((c.re, c.im, r)),
                    },
                    (None, None) => ScanMode::P { window: None },
                    _ => return Err(CliError::Usage("--window-center and --window-radius go together".into())),
                },
            };
            if grid == 0 {
                return Err(CliError::Usage("--grid must be positive".into()));
            }
            let cfg = ScanConfig {
                tau: common.tau,
                grid,
                mode,
                finder: FinderOptions {
                    seed_density: density.max(16),
                    ..Default::default()
                },
                workers,
            };
            run_scan_cmd(&cfg, format, path, out, err)
        }
    }
}

fn lattice_info(common: &Common, out: &mut dyn Write) -> CliResult {
    let l = Lattice::new(common.tau)?;
    let legendre = (l.tau * l.eta1 - l.eta2 - Complex64::new(0.0, 2.0 * std::f64::consts::PI)).norm();
    let sum_e = (l.e1 + l.e2 + l.e3).norm();
    if common.json {
        let v = json!({
            "tau": cx(l.tau), "nome": cx(l.nome),
            "eta1": cx(l.eta1), "eta2": cx(l.eta2),
            "e1": cx(l.e1), "e2": cx(l.e2), "e3": cx(l.e3),
            "g2": cx(l.g2), "g3": cx(l.g3),
            "legendre_residual": legendre, "e_sum_residual": sum_e,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap())?;
    } else {
        writeln!(out, "tau   {}", l.tau)?;
        writeln!(out, "nome  {}", l.nome)?;
        writeln!(out, "eta1  {}", l.eta1)?;
        writeln!(out, "eta2  {}", l.eta2)?;
        writeln!(out, "e1    {}", l.e1)?;
        writeln!(out, "e2    {}", l.e2)?;
        writeln!(out, "e3    {}", l.e3)?;
        writeln!(out, "g2    {}", l.g2)?;
        writeln!(out, "g3    {}", l.g3)?;
        writeln!(out, "|tau eta1 - eta2 - 2 pi i| = {legendre:.3e}")?;
    }
    Ok(())
}

fn critical_set_json(tau: Complex64, p: Option<Complex64>, set: &CriticalSet) -> serde_json::Value {
    let points: Vec<_> = set
        .points
        .iter()
        .map(|c| {
            json!({
                "z": cx(c.location.z), "r": c.location.r, "s": c.location.s,
                "kind": c.kind, "det": c.hessian.det, "classification": c.classification,
                "local_degree": c.local_degree, "residual": c.residual,
            })
        })
        .collect();
    json!({
        "tau": cx(tau), "p": p.map(cx), "count": set.count, "degree_sum": set.degree_sum,
        "all_nondegenerate": set.all_nondegenerate, "points": points,
    })
}

fn critpoints(common: &Common, density: usize, out: &mut dyn Write) -> CliResult {
    let l = Lattice::new(common.tau)?;
    let opts = FinderOptions {
        seed_density: density.max(16),
        degeneracy_tol: common.tol,
        ..Default::default()
    };
    let set = match common.p {
        Some(p) => critical_points_gp(p, &l, &opts)?,
        None => critical_points_g(&l, &opts)?,
    };
    if common.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&critical_set_json(l.tau, common.p, &set)).unwrap())?;
    } else {
        let deg = set.degree_sum.map_or("n/a (degenerate)".to_string(), |d| d.to_string());
        writeln!(out, "count {}  degree_sum {deg}", set.count)?;
        for c in &set.points {
            writeln!(
                out,
                "{:>24}  r={:.12} s={:.12}  {:?} {:?}  det={:+.6e}  res={:.1e}",
                format!("{:.12}", c.location.z),
                c.location.r,
                c.location.s,
                c.kind,
                c.classification,
                c.hessian.det,
                c.residual
            )?;
        }
    }
    let menu: &[usize] = if common.p.is_some() { &[4, 6, 8, 10] } else { &[3, 5] };
    if !menu.contains(&set.count) {
        return Err(CliError::Consistency(format!("{} critical points", set.count)));
    }
    if set.degree_sum.is_some_and(|d| d != set.expected_degree) {
        return Err(CliError::Consistency(format!("degree sum {:?}", set.degree_sum)));
    }
    Ok(())
}

fn region_json(r: &Region) -> serde_json::Value {
    serde_json::to_value(r).unwrap()
}

fn disks(common: &Common, out: &mut dyn Write) -> CliResult {
    let l = Lattice::new(common.tau)?;
    let regions: Vec<Region> = (0..4).map(|k| disk_bk(&l, k)).collect::<Result<_, _>>()?;
    let class = match common.p {
        Some(p) => Some(classify_region(l.wp(p)?, &l)?),
        None => None,
    };
    if common.json {
        let v = json!({
            "tau": cx(l.tau),
            "regions": regions.iter().map(region_json).collect::<Vec<_>>(),
            "classification": class,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap())?;
    } else {
        for (k, r) in regions.iter().enumerate() {
            match r {
                Region::Disk { center, radius } => writeln!(out, "B{k}  disk  center {center:.10}  radius {radius:.10}")?,
                Region::HalfPlane { alpha, e } => writeln!(out, "B{k}  half-plane  Re({alpha:.10} (z - {e:.10})) > 1/2")?,
            }
        }
        if let Some(c) = class {
            writeln!(out, "signs {:?}  m={}  allowed counts {:?}", c.signs, c.m, c.predicted_counts)?;
        }
    }
    Ok(())
}

fn hitchin_check(common: &Common, r: f64, s: f64, dtau: f64, out: &mut dyn Write) -> CliResult {
    let l = Lattice::new(common.tau)?;
    let hv = hitchin::f_rs(r, s, &l)?;
    if !hv.in_u {
        return Err(CliError::Usage(format!("({r}, {s}) is outside U")));
    }
    let (p, _) = hitchin::wp_inverse(hv.f, &l)?;
    let jac = hitchin::jacobian_f(r, s, &l)?;
    let cross = hitchin::hessian_via_hitchin(r, s, &l)?;
    let pvi = hitchin::pvi_residual(r, s, l.tau, dtau, &PviOptions::default()).ok();
    let v = json!({
        "f": cx(hv.f), "p": cx(p), "det_jac": jac.det,
        "hessian_cross_check": cross,
        "pvi_residual": pvi.map(|x| x.residual),
    });
    if common.json {
        writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap())?;
    } else {
        writeln!(out, "f        {}", hv.f)?;
        writeln!(out, "p        {p}")?;
        writeln!(out, "det Jac  {:+.10e}", jac.det)?;
        writeln!(out, "det D2G  {:+.10e} (hessian) {:+.10e} (hitchin)  rel {:.2e}", cross.via_hessian, cross.via_hitchin, cross.rel_diff)?;
        match pvi {
            Some(x) => writeln!(out, "PVI      {:.3e}", x.residual)?,
            None => writeln!(out, "PVI      unavailable")?,
        }
    }
    let tol = common.tol.unwrap_or(1e-6);
    if cross.rel_diff > tol {
        return Err(CliError::Consistency(format!("Hessian cross-check {:.2e} > {tol:e}", cross.rel_diff)));
    }
    Ok(())
}

fn pvi_check(common: &Common, r: f64, s: f64, dtau: f64, five_point: bool, out: &mut dyn Write) -> CliResult {
    let opts = PviOptions {
        stencil: if five_point { Stencil::FivePoint } else { Stencil::ThreePoint },
        ..Default::default()
    };
    let a = hitchin::pvi_residual(r, s, common.tau, dtau, &opts)?;
    let b = hitchin::pvi_residual(r, s, common.tau, 2.0 * dtau, &opts)?;
    let ratio = b.residual / a.residual;
    if common.json {
        let v = json!({
            "p": cx(a.p), "p_second": cx(a.p_second), "rhs": cx(a.rhs),
            "residual": a.residual, "residual_2dtau": b.residual, "ratio": ratio,
        });
        writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap())?;
    } else {
        writeln!(out, "p          {}", a.p)?;
        writeln!(out, "residual   {:.4e} (dtau {dtau:e})", a.residual)?;
        writeln!(out, "residual   {:.4e} (dtau {:e})", b.residual, 2.0 * dtau)?;
        writeln!(out, "ratio      {ratio:.4}")?;
    }
    let tol = common.tol.unwrap_or(1e-4);
    if a.residual > tol {
        return Err(CliError::Consistency(format!("PVI residual {:.2e} > {tol:e}", a.residual)));
    }
    Ok(())
}

fn basins(common: &Common, grid: usize, max_iter: usize, path: Option<PathBuf>, out: &mut dyn Write) -> CliResult {
    let l = Lattice::new(common.tau)?;
    let p = require_p(common)?;
    let pm = PreModular::new(p, &l)?;
    let opts = DynamicsOptions {
        max_iter,
        ..Default::default()
    };
    let attractors = attracting_fixed_points(&pm, &opts)?;
    use rayon::prelude::*;
    let labels: Vec<(Complex64, Option<usize>)> = (0..grid * grid)
        .into_par_iter()
        .map(|k| {
            let z = l.from_rs(((k % grid) as f64 + 0.5) / grid as f64, ((k / grid) as f64 + 0.5) / grid as f64);
            (z, basin_label(&pm, z, &attractors, &opts))
        })
        .collect();
    let mut sink: Box<dyn Write> = match &path {
        Some(pth) => Box::new(BufWriter::new(File::create(pth)?)),
        None => Box::new(&mut *out),
    };
    writeln!(sink, "re,im,label")?;
    for (z, lab) in &labels {
        writeln!(sink, "{},{},{}", z.re, z.im, lab.map_or(-1, |k| k as i64))?;
    }
    sink.flush()?;
    drop(sink);
    if path.is_some() {
        for (k, a) in attractors.iter().enumerate() {
            writeln!(out, "attractor {k}: {}  |dbar g| = {:.6}", a.z, a.multiplier)?;
        }
    }
    Ok(())
}

fn liouville_check(common: &Common, beta: f64, grid: usize, rho: f64, out: &mut dyn Write) -> CliResult {
    let l = Lattice::new(common.tau)?;
    let p = require_p(common)?;
    if grid < 64 || beta.is_nan() || beta <= 0.0 {
        return Err(CliError::Usage("need --grid ≥ 64 and --beta > 0".into()));
    }
    let set = critical_points_gp(p, &l, &FinderOptions::default())?;
    let maps = liouville::from_critical_set(&set, p, &l)?;
    if maps.len() * 2 + 4 != set.count {
        return Err(CliError::Consistency("developing maps do not match the nontrivial critical points".into()));
    }
    let mut reports = Vec::new();
    let tol = common.tol.unwrap_or(5e-3);
    let mut failed = Vec::new();
    for m in &maps {
        let stats = liouville::pde_residual(m, beta, grid, rho)?;
        let (mult_err, even_err) = symmetry_errors(m, beta)?;
        if stats.max > tol || stats.mass_rel_err > 0.02 || mult_err > 1e-10 || even_err > 1e-10 {
            failed.push(m.q);
        }
        reports.push(json!({
            "q": cx(m.q), "r": m.r, "s": m.s,
            "mult1": cx(m.mult1), "mult2": cx(m.mult2),
            "residual_stats": stats, "multiplier_error": mult_err, "even_error": even_err,
        }));
    }
    if common.json {
        let v = json!({"tau": cx(l.tau), "p": cx(p), "beta": beta, "solutions": reports});
        writeln!(out, "{}", serde_json::to_string_pretty(&v).unwrap())?;
    } else if maps.is_empty() {
        writeln!(out, "G_p has no nontrivial critical points; nothing to check")?;
    } else {
        for r in &reports {
            writeln!(out, "{r}")?;
        }
    }
    if !failed.is_empty() {
        return Err(CliError::Consistency(format!("Liouville checks failed at {failed:?}")));
    }
    Ok(())
}

/// Worst multiplier and evenness errors of f and u over a few sample points.
pub fn symmetry_errors(m: &DevelopingMap, beta: f64) -> Result<(f64, f64), Error> {
    let l = m.lat;
    let mut mult = 0.0f64;
    let mut even = 0.0f64;
    for k in 0..16 {
        let z = l.from_rs(0.13 + 0.047 * k as f64, 0.71 - 0.039 * k as f64);
        let f = m.f(z)?;
        mult = mult
            .max((m.f(z + 1.0)? - m.mult1 * f).norm() / f.norm())
            .max((m.f(z + l.tau)? - m.mult2 * f).norm() / f.norm());
        let u = m.u(z, beta)?;
        even = even.max((m.u(-z, beta)? - u).abs() / (1.0 + u.abs()));
    }
    Ok((mult, even))
}

fn run_scan_cmd(cfg: &ScanConfig, format: Format, path: Option<PathBuf>, out: &mut dyn Write, err: &mut dyn Write) -> CliResult {
    let result = scan::run_scan(cfg)?;
    for s in result.samples.iter().filter(|s| s.message.is_some()) {
        writeln!(err, "sample ({}, {}): {}", s.row, s.col, s.message.as_deref().unwrap_or(""))?;
    }
    let mut sink: Box<dyn Write> = match &path {
        Some(pth) => Box::new(BufWriter::new(File::create(pth)?)),
        None => Box::new(&mut *out),
    };
    match format {
        Format::Csv => scan::write_csv(&result, &mut sink)?,
        Format::Json => writeln!(sink, "{}", serde_json::to_string(&result).unwrap())?,
    }
    sink.flush()?;
    drop(sink);
    writeln!(err, "{}", serde_json::to_string(&result.summary).unwrap())?;
    let bad = result
        .samples
        .iter()
        .filter(|s| s.status == scan::SampleStatus::Valid && s.all_nondegenerate && ![4, 6, 8, 10].contains(&s.count))
        .count();
    if bad > 0 || result.summary.menu_violations > 0 {
        return Err(CliError::Consistency(format!(
            "{bad} samples outside {{4,6,8,10}}, {} menu violations",
            result.summary.menu_violations
        )));
    }
    Ok(())
}
