//! Serde glue: complex numbers travel as `{"re": .., "im": ..}`.

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Cx {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for Cx {
    fn from(z: Complex64) -> Self {
        Cx { re: z.re, im: z.im }
    }
}

impl From<Cx> for Complex64 {
    fn from(c: Cx) -> Self {
        Complex64::new(c.re, c.im)
    }
}

pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    Cx::from(*z).serialize(s)
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
    Cx::deserialize(d).map(Into::into)
}

pub mod array4 {
    use super::Cx;
    use num_complex::Complex64;
    use serde::{Serialize, Serializer};

    pub fn serialize<S: Serializer>(z: &[Complex64; 4], s: S) -> Result<S::Ok, S::Error> {
        let v: Vec<Cx> = z.iter().map(|&w| w.into()).collect();
        v.serialize(s)
    }
}
