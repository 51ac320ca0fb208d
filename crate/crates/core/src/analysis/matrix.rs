use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::counting::{matrix_counts, MatrixCounts, ModeHit};
use super::{g2_cross, G2Result};
use crate::error::{Error, Result};
use crate::rng::{stream, Stage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BootstrapSpec {
    pub resamples: usize,
    pub seed: u64,
}

impl Default for BootstrapSpec {
    fn default() -> Self {
        BootstrapSpec {
            resamples: 1000,
            seed: 0,
        }
    }
}

/// Mean of cell g² values with its bootstrap error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MatrixSummary {
    pub mean: f64,
    pub bootstrap_error: f64,
    pub cells: usize,
    /// Cells left out because a singles count was zero.
    pub undefined_cells: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModeMatrix {
    pub counts: MatrixCounts,
    pub diagonal: MatrixSummary,
    /// Absent for a single mode.
    pub off_diagonal: Option<MatrixSummary>,
}

impl ModeMatrix {
    pub fn n_modes(&self) -> usize {
        self.counts.n_modes
    }

    /// g² between signal mode `m` (S_m) and idler mode `n` (I_n).
    pub fn cell(&self, m: usize, n: usize) -> Result<G2Result> {
        let c = &self.counts;
        g2_cross(c.coincidence(m, n), c.singles_s[m], c.singles_i[n], c.trials)
    }

    /// Cell values as CSV, one row per signal mode.
    pub fn to_csv(&self) -> String {
        let n = self.n_modes();
        let mut s = String::from("S\\I");
        for j in 0..n {
            s.push_str(&format!(",I{j}"));
        }
        s.push('\n');
        for i in 0..n {
            s.push_str(&format!("S{i}"));
            for j in 0..n {
                match self.cell(i, j) {
                    Ok(g) => s.push_str(&format!(",{:.6}", g.value)),
                    Err(_) => s.push(','),
                }
            }
            s.push('\n');
        }
        s
    }
}

fn summarize(values: &[f64], undefined: usize, spec: &BootstrapSpec, salt: u64) -> Result<MatrixSummary> {
    if values.is_empty() {
        return Err(Error::Undefined("no defined matrix cells".into()));
    }
    let n = values.len();
    let mean = values.iter().sum::<f64>() / n as f64;
    let means: Vec<f64> = (0..spec.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream(spec.seed ^ salt, Stage::Bootstrap, r as u64);
            (0..n).map(|_| values[rng.random_range(0..n)]).sum::<f64>() / n as f64
        })
        .collect();
    let bootstrap_error = if means.len() > 1 {
        let m = means.iter().sum::<f64>() / means.len() as f64;
        (means.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (means.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(MatrixSummary {
        mean,
        bootstrap_error,
        cells: n,
        undefined_cells: undefined,
    })
}

/// Mode-resolved cross-correlation matrix with diagonal and off-diagonal
/// averages. Hits must come from [`super::mode_hits`] on the same grid.
pub fn mode_matrix(
    s: &[ModeHit],
    i: &[ModeHit],
    n_modes: usize,
    trials: u64,
    bootstrap: &BootstrapSpec,
) -> Result<ModeMatrix> {
    let counts = matrix_counts(s, i, n_modes, trials)?;
    let mut diag = Vec::with_capacity(n_modes);
    let mut off = Vec::with_capacity(n_modes * n_modes.saturating_sub(1));
    let (mut diag_undef, mut off_undef) = (0, 0);
    for m in 0..n_modes {
        for n in 0..n_modes {
            let v = g2_cross(counts.coincidence(m, n), counts.singles_s[m], counts.singles_i[n], trials);
            match (v, m == n) {
                (Ok(g), true) => diag.push(g.value),
                (Ok(g), false) => off.push(g.value),
                (Err(_), true) => diag_undef += 1,
                (Err(_), false) => off_undef += 1,
            }
        }
    }
    let diagonal = summarize(&diag, diag_undef, bootstrap, 0)?;
    let off_diagonal = if n_modes > 1 {
        Some(summarize(&off, off_undef, bootstrap, 1)?)
    } else {
        None
    };
    Ok(ModeMatrix {
        counts,
        diagonal,
        off_diagonal,
    })
}
