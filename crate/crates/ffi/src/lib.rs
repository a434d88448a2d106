//! C ABI over `torus_green`.
//!
//! Every function returns a `TgStatus`. Results go through out-pointers.
//! A lattice is an opaque handle from `tg_lattice_new`, released with
//! `tg_lattice_free`. On failure `tg_last_error_message` describes the
//! most recent error on the calling thread.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use torus_green::critpoints::{critical_points_g, critical_points_gp, CriticalSet, FinderOptions, Kind};
use torus_green::degeneracy::classify_region;
use torus_green::hitchin;
use torus_green::{Complex64, Error, Lattice};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TgStatus {
    Ok = 0,
    NullPointer = 1,
    Domain = 2,
    Pole = 3,
    TwoTorsion = 4,
    NoConvergence = 5,
    Branch = 6,
    Degenerate = 7,
    Inconsistent = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct TgComplex {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for TgComplex {
    fn from(z: Complex64) -> Self {
        TgComplex { re: z.re, im: z.im }
    }
}

impl From<TgComplex> for Complex64 {
    fn from(z: TgComplex) -> Self {
        Complex64::new(z.re, z.im)
    }
}

/// Opaque lattice handle.
pub struct TgLattice {
    inner: Lattice,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TgConstants {
    pub tau: TgComplex,
    pub nome: TgComplex,
    pub eta1: TgComplex,
    pub eta2: TgComplex,
    pub e1: TgComplex,
    pub e2: TgComplex,
    pub e3: TgComplex,
    pub g2: TgComplex,
    pub g3: TgComplex,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct TgCriticalPoint {
    pub z: TgComplex,
    /// z = r + sτ with r, s in [0, 1)
    pub r: f64,
    pub s: f64,
    /// 1 for points off the half-periods
    pub nontrivial: i32,
    /// Hessian determinant
    pub det: f64,
    /// +1, −1, or 0 when degenerate
    pub local_degree: i32,
    pub residual: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(e: &Error) -> TgStatus {
    match e {
        Error::Domain(_) => TgStatus::Domain,
        Error::Pole(_) => TgStatus::Pole,
        Error::TwoTorsion(_) => TgStatus::TwoTorsion,
        Error::NoConvergence(_) => TgStatus::NoConvergence,
        Error::Branch(_) => TgStatus::Branch,
        Error::Degenerate(_) => TgStatus::Degenerate,
        Error::Inconsistent(_) => TgStatus::Inconsistent,
    }
}

/// Runs `f`, recording errors and turning panics into `TgStatus::Panic`.
fn guard(f: impl FnOnce() -> Result<(), TgStatus>) -> TgStatus {
    set_last_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TgStatus::Ok,
        Ok(Err(s)) => s,
        Err(_) => {
            set_last_error("internal panic");
            TgStatus::Panic
        }
    }
}

fn lift<T>(r: torus_green::Result<T>) -> Result<T, TgStatus> {
    r.map_err(|e| {
        set_last_error(&e.to_string());
        status_of(&e)
    })
}

unsafe fn lattice<'a>(lat: *const TgLattice) -> Result<&'a Lattice, TgStatus> {
    match lat.as_ref() {
        Some(l) => Ok(&l.inner),
        None => {
            set_last_error("null lattice handle");
            Err(TgStatus::NullPointer)
        }
    }
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), TgStatus> {
    if out.is_null() {
        set_last_error("null output pointer");
        return Err(TgStatus::NullPointer);
    }
    out.write(v);
    Ok(())
}

/// Static description of a status code. Never null.
#[no_mangle]
pub extern "C" fn tg_status_message(status: TgStatus) -> *const c_char {
    let s: &'static [u8] = match status {
        TgStatus::Ok => b"ok\0",
        TgStatus::NullPointer => b"null pointer argument\0",
        TgStatus::Domain => b"argument outside the supported domain\0",
        TgStatus::Pole => b"evaluation at a pole\0",
        TgStatus::TwoTorsion => b"point is a half-period\0",
        TgStatus::NoConvergence => b"iteration did not converge\0",
        TgStatus::Branch => b"branch could not be tracked\0",
        TgStatus::Degenerate => b"degenerate configuration\0",
        TgStatus::Inconsistent => b"internal consistency check failed\0",
        TgStatus::BufferTooSmall => b"output buffer too small\0",
        TgStatus::Panic => b"internal panic\0",
    };
    s.as_ptr().cast()
}

/// Details of the last failure on this thread; empty after a success.
/// Valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Builds the lattice Z + Zτ. Requires Im τ ≥ 0.05.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_lattice_new(tau: TgComplex, out: *mut *mut TgLattice) -> TgStatus {
    guard(|| {
        if out.is_null() {
            set_last_error("null output pointer");
            return Err(TgStatus::NullPointer);
        }
        let inner = lift(Lattice::new(tau.into()))?;
        out.write(Box::into_raw(Box::new(TgLattice { inner })));
        Ok(())
    })
}

/// # Safety
/// `lat` must come from `tg_lattice_new` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn tg_lattice_free(lat: *mut TgLattice) {
    if !lat.is_null() {
        drop(Box::from_raw(lat));
    }
}

/// # Safety
/// `lat` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_lattice_constants(lat: *const TgLattice, out: *mut TgConstants) -> TgStatus {
    guard(|| {
        let l = lattice(lat)?;
        write(
            out,
            TgConstants {
                tau: l.tau.into(),
                nome: l.nome.into(),
                eta1: l.eta1.into(),
                eta2: l.eta2.into(),
                e1: l.e1.into(),
                e2: l.e2.into(),
                e3: l.e3.into(),
                g2: l.g2.into(),
                g3: l.g3.into(),
            },
        )
    })
}

unsafe fn eval_with(
    lat: *const TgLattice,
    z: TgComplex,
    out: *mut TgComplex,
    f: impl FnOnce(&Lattice, Complex64) -> torus_green::Result<Complex64>,
) -> TgStatus {
    guard(|| {
        let l = lattice(lat)?;
        let v = lift(f(l, z.into()))?;
        write(out, v.into())
    })
}

/// ℘(z).
///
/// # Safety
/// `lat` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_wp(lat: *const TgLattice, z: TgComplex, out: *mut TgComplex) -> TgStatus {
    eval_with(lat, z, out, |l, z| l.wp(z))
}

/// ℘'(z).
///
/// # Safety
/// As `tg_wp`.
#[no_mangle]
pub unsafe extern "C" fn tg_wp_prime(lat: *const TgLattice, z: TgComplex, out: *mut TgComplex) -> TgStatus {
    eval_with(lat, z, out, |l, z| l.wp_prime(z))
}

/// ζ(z).
///
/// # Safety
/// As `tg_wp`.
#[no_mangle]
pub unsafe extern "C" fn tg_zeta(lat: *const TgLattice, z: TgComplex, out: *mut TgComplex) -> TgStatus {
    eval_with(lat, z, out, |l, z| l.zeta(z))
}

/// σ(z). May overflow to infinity far from the origin.
///
/// # Safety
/// As `tg_wp`.
#[no_mangle]
pub unsafe extern "C" fn tg_sigma(lat: *const TgLattice, z: TgComplex, out: *mut TgComplex) -> TgStatus {
    eval_with(lat, z, out, |l, z| Ok(l.sigma(z)))
}

unsafe fn export_set(set: &CriticalSet, buf: *mut TgCriticalPoint, cap: usize, count: *mut usize) -> Result<(), TgStatus> {
    write(count, set.count)?;
    if set.count > cap {
        set_last_error(&format!("{} critical points, buffer holds {cap}", set.count));
        return Err(TgStatus::BufferTooSmall);
    }
    if buf.is_null() && set.count > 0 {
        set_last_error("null buffer");
        return Err(TgStatus::NullPointer);
    }
    for (i, c) in set.points.iter().enumerate() {
        buf.add(i).write(TgCriticalPoint {
            z: c.location.z.into(),
            r: c.location.r,
            s: c.location.s,
            nontrivial: i32::from(c.kind == Kind::Nontrivial),
            det: c.hessian.det,
            local_degree: c.local_degree,
            residual: c.residual,
        });
    }
    Ok(())
}

/// Critical points of the Green function G.
///
/// `*count` receives the number of points. If it exceeds `cap`, nothing
/// is written to `buf` and `TG_STATUS_BUFFER_TOO_SMALL` is returned.
///
/// # Safety
/// `lat` must be a live handle; `buf` must hold `cap` elements; `count` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_critical_points_g(
    lat: *const TgLattice,
    buf: *mut TgCriticalPoint,
    cap: usize,
    count: *mut usize,
) -> TgStatus {
    guard(|| {
        let l = lattice(lat)?;
        let set = lift(critical_points_g(l, &FinderOptions::default()))?;
        export_set(&set, buf, cap, count)
    })
}

/// Critical points of G_p(z) = (G(z − p) + G(z + p))/2. At most 10.
///
/// # Safety
/// As `tg_critical_points_g`.
#[no_mangle]
pub unsafe extern "C" fn tg_critical_points_gp(
    lat: *const TgLattice,
    p: TgComplex,
    buf: *mut TgCriticalPoint,
    cap: usize,
    count: *mut usize,
) -> TgStatus {
    guard(|| {
        let l = lattice(lat)?;
        let set = lift(critical_points_gp(p.into(), l, &FinderOptions::default()))?;
        export_set(&set, buf, cap, count)
    })
}

/// Hitchin's map at q = r + sτ. `*in_u` is 0 when the value is infinite
/// or equals some e_k.
///
/// # Safety
/// `lat` must be a live handle; `out` and `in_u` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_hitchin_f(lat: *const TgLattice, r: f64, s: f64, out: *mut TgComplex, in_u: *mut i32) -> TgStatus {
    guard(|| {
        let l = lattice(lat)?;
        let v = lift(hitchin::f_rs(r, s, l))?;
        write(out, v.f.into())?;
        write(in_u, i32::from(v.in_u))
    })
}

/// One solution p of ℘(p) = c; the other is −p.
///
/// # Safety
/// `lat` must be a live handle; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_wp_inverse(lat: *const TgLattice, c: TgComplex, out: *mut TgComplex) -> TgStatus {
    guard(|| {
        let l = lattice(lat)?;
        let (p, _) = lift(hitchin::wp_inverse(c.into(), l))?;
        write(out, p.into())
    })
}

/// Hessian signs of G_p at the four half-periods, from ℘(p) alone, and the
/// number m of positive signs.
///
/// # Safety
/// `lat` must be a live handle; `signs` must hold 4 elements; `m` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn tg_classify_region(lat: *const TgLattice, wp_p: TgComplex, signs: *mut i8, m: *mut u32) -> TgStatus {
    guard(|| {
        let l = lattice(lat)?;
        let c = lift(classify_region(wp_p.into(), l))?;
        if signs.is_null() {
            set_last_error("null signs buffer");
            return Err(TgStatus::NullPointer);
        }
        for (k, s) in c.signs.iter().enumerate() {
            signs.add(k).write(s.as_i8());
        }
        write(m, c.m as u32)
    })
}
