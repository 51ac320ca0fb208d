use crate::error::{invalid, Result};

/// Probability mass beyond the table, relative to `P(n ≥ 1)`.
pub const TAIL_CUTOFF: f64 = 1e-12;
const MAX_N: usize = 400;

/// Discrete distribution on `0..len` stored as a table, sampled by inverse CDF.
#[derive(Debug, Clone, PartialEq)]
pub struct CountTable {
    pmf: Vec<f64>,
    /// `above[k] = Σ_{j=1..=k} pmf[j]`, accumulated from 1 so small tails keep precision.
    above: Vec<f64>,
    /// `P(n ≥ 1)` computed directly.
    nonzero: f64,
}

impl CountTable {
    fn from_recurrence(p0: f64, nonzero: f64, next: impl Fn(usize, f64) -> f64) -> Self {
        let mut pmf = vec![p0];
        let mut above = vec![0.0];
        let mut p = p0;
        let mut acc = 0.0;
        for n in 0..MAX_N {
            if n > 0 && nonzero - acc <= TAIL_CUTOFF * nonzero {
                break;
            }
            p = next(n, p);
            acc += p;
            pmf.push(p);
            above.push(acc);
        }
        CountTable { pmf, above, nonzero }
    }

    /// Poisson with mean `mean`.
    pub fn poisson(mean: f64) -> Result<Self> {
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(invalid("mean", "Poisson mean must be finite and non-negative"));
        }
        Ok(Self::from_recurrence((-mean).exp(), -(-mean).exp_m1(), |n, p| {
            p * mean / (n + 1) as f64
        }))
    }

    /// Total photon number of `k` independent thermal modes with total mean
    /// `mean` (negative binomial); `k = ∞` gives Poisson.
    pub fn thermal(mean: f64, k: f64) -> Result<Self> {
        if !(k >= 1.0) {
            return Err(invalid("schmidt_modes", format!("K = {k} must be >= 1")));
        }
        if k.is_infinite() {
            return Self::poisson(mean);
        }
        if !(mean >= 0.0) || !mean.is_finite() {
            return Err(invalid("mean_pairs", "must be finite and non-negative"));
        }
        let ln_p0 = -k * (mean / k).ln_1p();
        let r = mean / (k + mean);
        Ok(Self::from_recurrence(ln_p0.exp(), -ln_p0.exp_m1(), |n, p| {
            p * (n as f64 + k) / (n + 1) as f64 * r
        }))
    }

    pub fn pmf(&self, n: usize) -> f64 {
        self.pmf.get(n).copied().unwrap_or(0.0)
    }

    pub fn p_zero(&self) -> f64 {
        self.pmf[0]
    }

    pub fn p_nonzero(&self) -> f64 {
        self.nonzero
    }

    /// Largest tabulated count.
    pub fn max_n(&self) -> usize {
        self.pmf.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.pmf.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
    }

    /// Probability generating function `Σ p(n) zⁿ` over the table.
    pub fn pgf(&self, z: f64) -> f64 {
        self.pmf.iter().rev().fold(0.0, |acc, &p| acc * z + p)
    }

    /// Count ≥ 1 given `u` uniform in [0, 1).
    pub fn sample_nonzero(&self, u: f64) -> usize {
        let target = u * self.above[self.above.len() - 1];
        let k = self.above[1..].partition_point(|&c| c <= target) + 1;
        k.min(self.max_n())
    }

    /// Unconditional draw given `u` uniform in [0, 1).
    pub fn sample(&self, u: f64) -> usize {
        if u < self.pmf[0] {
            0
        } else {
            self.sample_nonzero((u - self.pmf[0]) / (1.0 - self.pmf[0]))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thermal_k1_is_geometric() {
        let t = CountTable::thermal(0.2, 1.0).unwrap();
        for n in 0..10 {
            let expect = 0.2f64.powi(n as i32) / 1.2f64.powi(n as i32 + 1);
            assert!((t.pmf(n) - expect).abs() < 1e-15);
        }
        assert!((t.mean() - 0.2).abs() < 1e-11);
    }

    #[test]
    fn large_k_approaches_poisson() {
        let t = CountTable::thermal(0.5, 1e7).unwrap();
        let p = CountTable::poisson(0.5).unwrap();
        for n in 0..6 {
            assert!((t.pmf(n) - p.pmf(n)).abs() < 1e-7);
        }
    }

    #[test]
    fn tiny_means_keep_precision() {
        let t = CountTable::poisson(1e-12).unwrap();
        assert!((t.p_nonzero() - 1e-12).abs() < 1e-24);
        assert_eq!(t.sample_nonzero(0.5), 1);
    }

    #[test]
    fn tail_below_cutoff() {
        let t = CountTable::thermal(0.0371, 1.56).unwrap();
        let total: f64 = (0..=t.max_n()).map(|n| t.pmf(n)).sum();
        assert!((1.0 - total).abs() < 1e-12);
    }
}
