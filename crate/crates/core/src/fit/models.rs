use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitModel {
    /// `a_a e^{-x/τ_a} + a_b e^{-x/τ_b}`
    DoubleExp,
    /// `A₀ exp(-2 (2x/T₂)^s)`
    StretchedEcho,
    /// `c₀ + c₁x + c₂x²`
    Quadratic,
    /// `a/x + b`
    Inverse,
    /// `a·x + b`
    Linear,
}

impl FitModel {
    pub const ALL: [FitModel; 5] = [
        FitModel::DoubleExp,
        FitModel::StretchedEcho,
        FitModel::Quadratic,
        FitModel::Inverse,
        FitModel::Linear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FitModel::DoubleExp => "double_exp",
            FitModel::StretchedEcho => "stretched_echo",
            FitModel::Quadratic => "quadratic",
            FitModel::Inverse => "inverse",
            FitModel::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == s)
    }

    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            FitModel::DoubleExp => &["amp_a", "tau_a", "amp_b", "tau_b"],
            FitModel::StretchedEcho => &["area_zero", "t2", "shape_x"],
            FitModel::Quadratic => &["c0", "c1", "c2"],
            FitModel::Inverse => &["a", "b"],
            FitModel::Linear => &["slope", "intercept"],
        }
    }

    pub fn n_params(self) -> usize {
        self.param_names().len()
    }

    pub fn eval<T: Scalar>(self, x: T, p: &[T]) -> T {
        match self {
            FitModel::DoubleExp => p[0] * (-x / p[1]).exp() + p[2] * (-x / p[3]).exp(),
            FitModel::StretchedEcho => {
                let u = T::of(2.0) * x / p[1];
                p[0] * (-T::of(2.0) * u.powf(p[2])).exp()
            }
            FitModel::Quadratic => p[0] + x * (p[1] + x * p[2]),
            FitModel::Inverse => p[0] / x + p[1],
            FitModel::Linear => p[0] * x + p[1],
        }
    }

    /// Analytic `∂f/∂p` at `x`.
    pub fn gradient<T: Scalar>(self, x: T, p: &[T], out: &mut [T]) {
        match self {
            FitModel::DoubleExp => {
                let ea = (-x / p[1]).exp();
                let eb = (-x / p[3]).exp();
                out[0] = ea;
                out[1] = p[0] * ea * x / (p[1] * p[1]);
                out[2] = eb;
                out[3] = p[2] * eb * x / (p[3] * p[3]);
            }
            FitModel::StretchedEcho => {
                let u = T::of(2.0) * x / p[1];
                let g = u.powf(p[2]);
                let e = (-T::of(2.0) * g).exp();
                let f = p[0] * e;
                out[0] = e;
                out[1] = f * T::of(2.0) * p[2] * g / p[1];
                out[2] = if u > T::zero() {
                    -f * T::of(2.0) * g * u.ln()
                } else {
                    T::zero()
                };
            }
            FitModel::Quadratic => {
                out[0] = T::one();
                out[1] = x;
                out[2] = x * x;
            }
            FitModel::Inverse => {
                out[0] = T::one() / x;
                out[1] = T::one();
            }
            FitModel::Linear => {
                out[0] = x;
                out[1] = T::one();
            }
        }
    }
}
