//! Green functions on flat tori E_τ = C/(Z + Zτ), the critical points of
//! G_p(z) = ½(G(z+p) + G(z−p)), and the objects built around them: the
//! degeneracy disks in the ℘(p)-plane, Hitchin's map, the associated
//! anti-holomorphic dynamics and Liouville solutions.

pub mod cli;
pub mod critpoints;
pub mod cx;
pub mod degeneracy;
pub mod dynamics;
pub mod elliptic;
pub mod error;
pub mod green;
pub mod hitchin;
pub mod liouville;
pub mod scan;

pub use elliptic::{Lattice, TorusPoint};
pub use error::{Error, Result};
pub use num_complex::Complex64;
