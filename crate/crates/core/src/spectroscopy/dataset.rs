use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::scalar::Scalar;

/// Measurement noise applied to synthetic data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NoiseModel {
    /// `y·(1 + σ·N(0,1))`, reported uncertainty `σ·y_true`.
    Multiplicative(f64),
    /// `y + σ·N(0,1)`.
    Additive(f64),
}

/// `(x, y, sigma)` triples.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Dataset<T> {
    pub x: Vec<T>,
    pub y: Vec<T>,
    pub sigma: Vec<T>,
}

impl<T: Scalar> Dataset<T> {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Samples `model` at `xs` and perturbs it with `noise`, reproducibly for `seed`.
    pub fn synthetic(xs: &[T], model: impl Fn(T) -> T, noise: NoiseModel, seed: u64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Dataset::default();
        for &x in xs {
            let truth = model(x);
            let z: f64 = StandardNormal.sample(&mut rng);
            let (y, s) = match noise {
                NoiseModel::Multiplicative(s) => (truth * T::of(1.0 + s * z), truth.abs() * T::of(s)),
                NoiseModel::Additive(s) => (truth + T::of(s * z), T::of(s)),
            };
            if !(s > T::zero()) {
                return Err(invalid("sigma", format!("non-positive uncertainty at x={x}")));
            }
            out.x.push(x);
            out.y.push(y);
            out.sigma.push(s);
        }
        Ok(out)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,y,sigma\n");
        for i in 0..self.len() {
            let _ = writeln!(s, "{},{},{}", self.x[i], self.y[i], self.sigma[i]);
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut out = Dataset::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (i == 0 && line.starts_with('x')) {
                continue;
            }
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 3 {
                return Err(Error::Format(format!("line {}: expected x,y,sigma", i + 1)));
            }
            let parse = |c: &str| {
                c.trim()
                    .parse::<T>()
                    .map_err(|_| Error::Format(format!("line {}: bad number `{c}`", i + 1)))
            };
            out.x.push(parse(cols[0])?);
            out.y.push(parse(cols[1])?);
            out.sigma.push(parse(cols[2])?);
        }
        Ok(out)
    }
}
