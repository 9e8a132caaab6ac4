//! Piecewise-linear grid functions on a uniform half-line grid with a
//! far-field extension policy.

use crate::error::{Error, Result};

/// How a grid function continues beyond its last node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Extension {
    /// Constant at the value of the last node (keeps the function continuous).
    ConstantAtEnd,
    /// Prescribed constant. Only admissible for mildly singular measures
    /// (c = 0): with a strong symmetric part the jump at `L` would make the
    /// operator divergent at the last node.
    Prescribed(f64),
}

#[derive(Clone, Debug)]
pub struct GridFunction {
    pub length: f64,
    pub values: Vec<f64>,
    pub extension: Extension,
}

impl GridFunction {
    pub fn new(length: f64, values: Vec<f64>, extension: Extension) -> Result<Self> {
        if !(length > 0.0) {
            return Err(Error::InvalidParameter { name: "length", reason: "must be positive".into() });
        }
        if values.len() < 2 {
            return Err(Error::InvalidParameter { name: "values", reason: "need at least two nodes".into() });
        }
        Ok(Self { length, values, extension })
    }

    pub fn from_fn(length: f64, n: usize, extension: Extension, f: impl Fn(f64) -> f64) -> Result<Self> {
        let h = length / (n - 1) as f64;
        let values = (0..n).map(|i| f(i as f64 * h)).collect();
        Self::new(length, values, extension)
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn h(&self) -> f64 {
        self.length / (self.n() - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.h()
    }

    pub fn extension_value(&self) -> f64 {
        match self.extension {
            Extension::ConstantAtEnd => *self.values.last().unwrap(),
            Extension::Prescribed(v) => v,
        }
    }

    /// Piecewise-linear evaluation for `0 <= x <= L`, extension value beyond.
    pub fn eval(&self, x: f64) -> f64 {
        if x >= self.length {
            return self.extension_value();
        }
        let x = x.max(0.0);
        let h = self.h();
        let j = ((x / h) as usize).min(self.n() - 2);
        let t = (x - self.node(j)) / h;
        self.values[j] * (1.0 - t) + self.values[j + 1] * t
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eval_interpolates_and_extends() {
        let u = GridFunction::new(2.0, vec![0.0, 1.0, 4.0], Extension::ConstantAtEnd).unwrap();
        assert_eq!(u.eval(0.5), 0.5);
        assert_eq!(u.eval(1.5), 2.5);
        assert_eq!(u.eval(3.0), 4.0);
        let p = GridFunction::new(2.0, vec![0.0, 1.0, 4.0], Extension::Prescribed(-1.0)).unwrap();
        assert_eq!(p.eval(2.0), -1.0);
        assert_eq!(p.eval(1.0), 1.0);
    }

    #[test]
    fn rejects_degenerate_grids() {
        assert!(GridFunction::new(0.0, vec![1.0, 2.0], Extension::ConstantAtEnd).is_err());
        assert!(GridFunction::new(1.0, vec![1.0], Extension::ConstantAtEnd).is_err());
    }
}
