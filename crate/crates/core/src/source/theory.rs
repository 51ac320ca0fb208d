//! Analytic rates and correlation functions for the pair source.
//!
//! [`ClickModel`] computes exact threshold-detector click probabilities per
//! trial from the pair-number generating function
//! `G(z) = (1 + µ(1 - z)/K)^{-K}`: for a set `S` of detectors,
//! `P(no click in S) = G(E_t[q_S(t)]) · e^{-noise_S - dark_S}`, where `q_S(t)`
//! is the probability that one pair emitted at offset `t` clicks none of `S`.
//! Joint click probabilities follow by inclusion–exclusion.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use super::sample::TRUNCATION_SIGMAS;
use super::SourceConfig;
use crate::error::{invalid, Result};

/// Low-efficiency closed form of the cross-correlation for total mean pair
/// number `mu`, `k` Schmidt modes and noise-to-pair ratios `f_s`, `f_i`:
///
/// `g² = (1/µ + 1 + 1/K + f_s + f_i + f_s f_i) / ((1 + f_s)(1 + f_i))`
///
/// From `⟨n_s n_i⟩ = ⟨n²⟩ + µ(ν_s + ν_i) + ν_s ν_i` with `⟨n²⟩ = µ + µ²(1 + 1/K)`.
/// Tends to `1 + 1/K` as `µ → ∞`; for Poissonian pairs (`K = ∞`) without
/// noise it is `1 + 1/µ`.
pub fn theoretical_g2(mu: f64, k: f64, f_s: f64, f_i: f64) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(invalid("mean_pairs", "must be positive"));
    }
    if !(k >= 1.0) {
        return Err(invalid("schmidt_modes", "must be >= 1"));
    }
    let num = 1.0 / mu + 1.0 + 1.0 / k + f_s + f_i + f_s * f_i;
    Ok(num / ((1.0 + f_s) * (1.0 + f_i)))
}

/// Mean detection rates in Hz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub singles_signal: f64,
    pub singles_idler: f64,
    /// True (same-pair) coincidences.
    pub coincidences: f64,
    /// Coincidences from uncorrelated photons and multi-pair terms.
    pub accidentals: f64,
}

/// Mean detected-photon rates, linear in the per-pulse means:
/// `singles = duty · f_clock · modes · η (µ + ν)`, `coincidences = duty · f_clock · modes · µ η_s η_i`.
pub fn predict_rates(cfg: &SourceConfig, eta_signal: f64, eta_idler: f64, duty: f64) -> Result<Rates> {
    for (name, v) in [("eta_signal", eta_signal), ("eta_idler", eta_idler), ("duty", duty)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(invalid(
                if name == "duty" { "duty" } else { "efficiency" },
                format!("{name} = {v} outside [0, 1]"),
            ));
        }
    }
    let pulses = duty * 1e6 / cfg.clock_period_us * cfg.n_modes as f64;
    let mu = cfg.mean_pairs;
    let n2_excess = mu * mu * (1.0 + 1.0 / cfg.schmidt_modes);
    let cross = n2_excess + mu * (cfg.noise_signal + cfg.noise_idler) + cfg.noise_signal * cfg.noise_idler;
    Ok(Rates {
        singles_signal: pulses * eta_signal * (mu + cfg.noise_signal),
        singles_idler: pulses * eta_idler * (mu + cfg.noise_idler),
        coincidences: pulses * eta_signal * eta_idler * mu,
        accidentals: pulses * eta_signal * eta_idler * cross,
    })
}

/// Pump-power scaling: pairs quadratic (cascaded SHG + SPDC), Raman noise linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PumpModel {
    pub reference_power_uw: f64,
    pub mean_pairs: f64,
    pub noise_signal: f64,
    pub noise_idler: f64,
}

impl PumpModel {
    pub fn at_power(&self, base: &SourceConfig, power_uw: f64) -> SourceConfig {
        let r = power_uw / self.reference_power_uw;
        SourceConfig {
            mean_pairs: self.mean_pairs * r * r,
            noise_signal: self.noise_signal * r,
            noise_idler: self.noise_idler * r,
            ..base.clone()
        }
    }

    /// Operating point with mean pair number `mu`.
    pub fn at_mean_pairs(&self, base: &SourceConfig, mu: f64) -> SourceConfig {
        self.at_power(base, self.reference_power_uw * (mu / self.mean_pairs).sqrt())
    }
}

/// Detector side of a [`ClickModel`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArmModel {
    pub efficiency: f64,
    pub jitter_sigma_ps: f64,
    /// Dark counts per coincidence window.
    pub dark_per_window: f64,
}

impl ArmModel {
    pub fn ideal(efficiency: f64) -> Self {
        ArmModel {
            efficiency,
            jitter_sigma_ps: 0.0,
            dark_per_window: 0.0,
        }
    }
}

/// Timing acceptance of the coincidence window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Acceptance {
    /// Every photon of the pulse lands in the window.
    Ideal,
    Window { width_ps: f64, emission_sigma_ps: f64 },
}

/// Exact per-trial click statistics for one mode.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClickModel {
    pub mean_pairs: f64,
    pub schmidt_modes: f64,
    pub noise_signal: f64,
    pub noise_idler: f64,
    pub signal: ArmModel,
    pub idler: ArmModel,
    pub acceptance: Acceptance,
}

const QUAD_INTERVALS: usize = 2000;

fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Click probabilities for a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClickProbabilities {
    pub p_s: f64,
    pub p_i: f64,
    pub p_si: f64,
}

impl ClickProbabilities {
    pub fn g2(&self) -> f64 {
        self.p_si / (self.p_s * self.p_i)
    }
}

/// Click probabilities with the signal split onto detectors 1 and 2.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitProbabilities {
    pub p_i: f64,
    pub p_s1: f64,
    pub p_s2: f64,
    pub p_is1: f64,
    pub p_is2: f64,
    pub p_s1s2: f64,
    pub p_is1s2: f64,
}

impl SplitProbabilities {
    pub fn heralded_g2(&self) -> f64 {
        self.p_is1s2 * self.p_i / (self.p_is1 * self.p_is2)
    }

    /// Same-trial coincidences over different-trial accidentals.
    pub fn unheralded_g2(&self) -> f64 {
        self.p_s1s2 / (self.p_s1 * self.p_s2)
    }
}

impl ClickModel {
    pub fn from_source(cfg: &SourceConfig, signal: ArmModel, idler: ArmModel, acceptance: Acceptance) -> Self {
        ClickModel {
            mean_pairs: cfg.mean_pairs,
            schmidt_modes: cfg.schmidt_modes,
            noise_signal: cfg.noise_signal,
            noise_idler: cfg.noise_idler,
            signal,
            idler,
            acceptance,
        }
    }

    /// `ln G(1 - y)`, taking `y = 1 - z` directly to avoid cancellation.
    fn ln_pgf_complement(&self, y: f64) -> f64 {
        let x = self.mean_pairs * y;
        if self.schmidt_modes.is_infinite() {
            -x
        } else {
            -self.schmidt_modes * (x / self.schmidt_modes).ln_1p()
        }
    }

    /// Window acceptance of a photon emitted at offset `t` from the mode center.
    fn accept(&self, arm: &ArmModel, t: f64) -> f64 {
        match self.acceptance {
            Acceptance::Ideal => 1.0,
            Acceptance::Window { width_ps, .. } => {
                let h = width_ps / 2.0;
                if arm.jitter_sigma_ps > 0.0 {
                    normal_cdf((h - t) / arm.jitter_sigma_ps) - normal_cdf((-h - t) / arm.jitter_sigma_ps)
                } else if t.abs() < h {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// `E_t[f(t)]` over the truncated-Gaussian pair emission time (Simpson).
    fn pair_average(&self, f: impl Fn(f64) -> f64) -> f64 {
        match self.acceptance {
            Acceptance::Ideal => f(0.0),
            Acceptance::Window { emission_sigma_ps, .. } => {
                let lim = TRUNCATION_SIGMAS * emission_sigma_ps;
                let h = 2.0 * lim / QUAD_INTERVALS as f64;
                let (mut acc, mut norm) = (0.0, 0.0);
                for j in 0..=QUAD_INTERVALS {
                    let t = -lim + j as f64 * h;
                    let w = if j == 0 || j == QUAD_INTERVALS {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    let g = w * (-0.5 * (t / emission_sigma_ps).powi(2)).exp();
                    acc += g * f(t);
                    norm += g;
                }
                acc / norm
            }
        }
    }

    /// Mean acceptance of a noise photon, uniform over the truncated pulse.
    fn noise_average(&self, arm: &ArmModel) -> f64 {
        match self.acceptance {
            Acceptance::Ideal => 1.0,
            Acceptance::Window { emission_sigma_ps, .. } => {
                let lim = TRUNCATION_SIGMAS * emission_sigma_ps;
                let h = 2.0 * lim / QUAD_INTERVALS as f64;
                let mut acc = 0.0;
                for j in 0..=QUAD_INTERVALS {
                    let w = if j == 0 || j == QUAD_INTERVALS {
                        1.0
                    } else if j % 2 == 1 {
                        4.0
                    } else {
                        2.0
                    };
                    acc += w * self.accept(arm, -lim + j as f64 * h);
                }
                acc * h / 3.0 / (2.0 * lim)
            }
        }
    }

    /// `P(no click on the selected detectors) - 1`: `sel` of the signal
    /// arm's `total` detectors (a 50:50 splitter when `total = 2`) plus
    /// optionally the idler. Kept as an offset from 1 so the
    /// inclusion–exclusion sums below do not cancel catastrophically.
    fn no_click(&self, sel: u8, total: u8, idler: bool) -> f64 {
        let es = self.signal.efficiency * sel as f64 / total as f64;
        let ei = if idler { self.idler.efficiency } else { 0.0 };
        let y = self.pair_average(|t| {
            let a = es * self.accept(&self.signal, t);
            let b = ei * self.accept(&self.idler, t);
            a + b - a * b
        });
        let mut ln = self.ln_pgf_complement(y) - self.noise_signal * es * self.noise_average(&self.signal);
        if idler {
            ln -= self.noise_idler * ei * self.noise_average(&self.idler) + self.idler.dark_per_window;
        }
        ln -= self.signal.dark_per_window * sel as f64;
        ln.exp_m1()
    }

    pub fn probabilities(&self) -> ClickProbabilities {
        let z_s = self.no_click(1, 1, false);
        let z_i = self.no_click(0, 1, true);
        let z_si = self.no_click(1, 1, true);
        ClickProbabilities {
            p_s: -z_s,
            p_i: -z_i,
            p_si: z_si - z_s - z_i,
        }
    }

    pub fn split_probabilities(&self) -> SplitProbabilities {
        let z = |sel: u8, idler: bool| self.no_click(sel, 2, idler);
        let (z0i, zh, zhi, zf, zfi) = (z(0, true), z(1, false), z(1, true), z(2, false), z(2, true));
        let p_i = -z0i;
        let p_s1 = -zh;
        let p_is1 = zhi - z0i - zh;
        let p_s1s2 = zf - 2.0 * zh;
        let p_is1s2 = 2.0 * zhi + zf - z0i - 2.0 * zh - zfi;
        SplitProbabilities {
            p_i,
            p_s1,
            p_s2: p_s1,
            p_is1,
            p_is2: p_is1,
            p_s1s2,
            p_is1s2,
        }
    }

    pub fn g2_cross(&self) -> f64 {
        self.probabilities().g2()
    }
}

/// Brute-force oracle: enumerates pair and noise photon numbers up to
/// `n_max` each and every detector outcome, with ideal acceptance.
/// Returns `(p_s, p_i, p_si)` and the split-arm probabilities.
pub fn enumerate_clicks(model: &ClickModel, n_max: usize) -> (ClickProbabilities, SplitProbabilities) {
    let pairs = super::CountTable::thermal(model.mean_pairs, model.schmidt_modes).expect("valid model");
    let pois = |mean: f64, n: usize| {
        let mut p = (-mean).exp();
        for k in 1..=n {
            p *= mean / k as f64;
        }
        p
    };
    let es = model.signal.efficiency;
    let ei = model.idler.efficiency;
    let (mut p_s, mut p_i, mut p_si) = (0.0, 0.0, 0.0);
    let mut sp = SplitProbabilities {
        p_i: 0.0,
        p_s1: 0.0,
        p_s2: 0.0,
        p_is1: 0.0,
        p_is2: 0.0,
        p_s1s2: 0.0,
        p_is1s2: 0.0,
    };
    for n in 0..=n_max {
        for ns in 0..=n_max {
            for ni in 0..=n_max {
                let w = pairs.pmf(n) * pois(model.noise_signal, ns) * pois(model.noise_idler, ni);
                if w == 0.0 {
                    continue;
                }
                let m_s = n + ns;
                let m_i = n + ni;
                // idler detector: clicks if any of its m_i photons is detected
                let pi = 1.0 - (1.0 - ei).powi(m_i as i32);
                // single signal detector
                let ps = 1.0 - (1.0 - es).powi(m_s as i32);
                p_s += w * ps;
                p_i += w * pi;
                p_si += w * ps * pi;
                // split arm: enumerate how many photons are detected at 1 and at 2
                let (mut q1, mut q12) = (0.0, 0.0);
                for d1 in 0..=m_s {
                    for d2 in 0..=(m_s - d1) {
                        let lost = m_s - d1 - d2;
                        let ways = multinomial(m_s, d1, d2);
                        let prob = ways * (es / 2.0).powi(d1 as i32) * (es / 2.0).powi(d2 as i32) * (1.0 - es).powi(lost as i32);
                        if d1 > 0 {
                            q1 += prob;
                        }
                        if d1 > 0 && d2 > 0 {
                            q12 += prob;
                        }
                    }
                }
                sp.p_i += w * pi;
                sp.p_s1 += w * q1;
                sp.p_is1 += w * q1 * pi;
                sp.p_s1s2 += w * q12;
                sp.p_is1s2 += w * q12 * pi;
            }
        }
    }
    sp.p_s2 = sp.p_s1;
    sp.p_is2 = sp.p_is1;
    (ClickProbabilities { p_s, p_i, p_si }, sp)
}

fn multinomial(n: usize, a: usize, b: usize) -> f64 {
    let f = |k: usize| (1..=k).map(|v| v as f64).product::<f64>();
    f(n) / (f(a) * f(b) * f(n - a - b))
}

/// Noise-to-pair ratio `f` (same in both arms) at which `model`'s windowed
/// cross-correlation equals `target`. Bisection; `model`'s noise means are replaced.
pub fn calibrate_noise_fraction(model: &ClickModel, target: f64) -> Result<f64> {
    let g = |f: f64| {
        let m = ClickModel {
            noise_signal: f * model.mean_pairs,
            noise_idler: f * model.mean_pairs,
            ..model.clone()
        };
        m.g2_cross()
    };
    let (mut lo, mut hi) = (0.0, 10.0);
    if !(g(lo) > target && g(hi) < target) {
        return Err(invalid("target", format!("g² = {target} not bracketed by noise fractions 0..10")));
    }
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Mean pair number at which the heralded autocorrelation equals `target`,
/// with noise following `pump`. Searched on `[1e-4, 0.9]` (monotone increasing).
pub fn fit_heralded_mean_pairs(model: &ClickModel, pump: &PumpModel, base: &SourceConfig, target: f64) -> Result<f64> {
    let g = |mu: f64| {
        let cfg = pump.at_mean_pairs(base, mu);
        ClickModel {
            mean_pairs: cfg.mean_pairs,
            noise_signal: cfg.noise_signal,
            noise_idler: cfg.noise_idler,
            ..model.clone()
        }
        .split_probabilities()
        .heralded_g2()
    };
    let (mut lo, mut hi) = (1e-4f64, 0.9f64);
    if !(g(lo) < target && g(hi) > target) {
        return Err(invalid("target", format!("heralded g² = {target} not reachable below µ = 0.9")));
    }
    for _ in 0..80 {
        let mid = (lo * hi).sqrt();
        if g(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo * hi).sqrt())
}
