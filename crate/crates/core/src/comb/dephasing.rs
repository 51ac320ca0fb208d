use super::profile::CombProfile;
use crate::scalar::Scalar;

/// Collective rephasing `|∫ n(δ) e^{i2πδt} dδ|²` of the absorbed excitation,
/// with `n` the optical-depth-weighted spectral density normalized to unit sum.
///
/// `t` in ns. The discrete sum is periodic in `t` with the grid's reciprocal
/// span (`1/resolution`), so values are meaningful on `[0, 1/resolution)`.
pub fn dephasing_factor<T: Scalar>(profile: &CombProfile<T>, t_ns: T) -> T {
    dephasing_factor_density(profile.detuning(), profile.od(), t_ns)
}

/// Same as [`dephasing_factor`] on raw samples; weights need not be normalized.
pub fn dephasing_factor_density<T: Scalar>(detuning: &[T], weight: &[T], t_ns: T) -> T {
    let total: T = weight.iter().copied().sum();
    if total <= T::zero() {
        // no absorbers: nothing to dephase
        return if t_ns == T::zero() { T::one() } else { T::zero() };
    }
    let w = T::of(2.0e-3) * T::PI() * t_ns;
    let (mut re, mut im) = (T::zero(), T::zero());
    for (&d, &n) in detuning.iter().zip(weight) {
        if n == T::zero() {
            continue;
        }
        let (s, c) = (w * d).sin_cos();
        re = re + n * c;
        im = im + n * s;
    }
    let amp2 = (re * re + im * im) / (total * total);
    amp2.min(T::one())
}

/// Location (ns) of the largest rephasing inside `[t_lo, t_hi]`: a coarse
/// scan followed by golden-section refinement around the best sample.
pub fn rephasing_peak<T: Scalar>(profile: &CombProfile<T>, t_lo: T, t_hi: T, tol_ns: T) -> T {
    let f = |t: T| dephasing_factor(profile, t);
    let steps = 400usize;
    let h = (t_hi - t_lo) / T::of_usize(steps);
    let mut best = (t_lo, f(t_lo));
    for i in 1..=steps {
        let t = t_lo + T::of_usize(i) * h;
        let v = f(t);
        if v > best.1 {
            best = (t, v);
        }
    }
    let (mut a, mut b) = ((best.0 - h).max(t_lo), (best.0 + h).min(t_hi));
    let g = T::of(0.5 * (5f64.sqrt() - 1.0));
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol_ns {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    (a + b) / T::of(2.0)
}
