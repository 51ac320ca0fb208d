use crate::scalar::Scalar;

/// Lower Cholesky factor of a row-major SPD matrix, `None` if not positive definite.
fn cholesky<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let scale = (0..n).map(|i| a[i * n + i].abs()).fold(T::zero(), T::max);
    let floor = scale * T::epsilon() * T::of_usize(n) * T::of(16.0);
    let mut l = vec![T::zero(); n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i * n + j];
            for k in 0..j {
                s = s - l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > floor) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    Some(l)
}

fn solve_factored<T: Scalar>(l: &[T], b: &[T], n: usize) -> Vec<T> {
    let mut y = b.to_vec();
    for i in 0..n {
        for k in 0..i {
            y[i] = y[i] - l[i * n + k] * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    for i in (0..n).rev() {
        for k in i + 1..n {
            y[i] = y[i] - l[k * n + i] * y[k];
        }
        y[i] = y[i] / l[i * n + i];
    }
    y
}

pub fn cholesky_solve<T: Scalar>(a: &[T], b: &[T], n: usize) -> Option<Vec<T>> {
    cholesky(a, n).map(|l| solve_factored(&l, b, n))
}

pub fn invert_spd<T: Scalar>(a: &[T], n: usize) -> Option<Vec<T>> {
    let l = cholesky(a, n)?;
    let mut inv = vec![T::zero(); n * n];
    let mut e = vec![T::zero(); n];
    for j in 0..n {
        e.iter_mut().for_each(|v| *v = T::zero());
        e[j] = T::one();
        let col = solve_factored(&l, &e, n);
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Some(inv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inverse_of_spd() {
        let a = [4.0, 1.0, 0.5, 1.0, 3.0, 0.2, 0.5, 0.2, 2.0];
        let inv = invert_spd(&a, 3).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let v: f64 = (0..3).map(|k| a[i * 3 + k] * inv[k * 3 + j]).sum();
                assert!((v - if i == j { 1.0 } else { 0.0 }).abs() < 1e-12);
            }
        }
        assert!(invert_spd(&[1.0, 1.0, 1.0, 1.0], 2).is_none());
    }
}
