/// Number of negative pivots in the LDL^T factorization of `T - shift`,
/// with `T` tridiagonal (`diag`, `off` the sub-diagonal).
///
/// Returns `None` on an exactly zero pivot.
pub fn negative_pivots(diag: &[f64], off: &[f64], shift: f64) -> Option<usize> {
    let mut count = 0;
    let mut q = 1.0;
    for (i, d) in diag.iter().enumerate() {
        q = if i == 0 {
            d - shift
        } else {
            let e = off[i - 1];
            (d - shift) - e * e / q
        };
        if q == 0.0 || q.is_nan() {
            return None;
        }
        if q < 0.0 {
            count += 1;
        }
    }
    Some(count)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_by_two() {
        // [[1, -1], [-1, 3]] has eigenvalues 2 -+ sqrt(2)
        let d = [1.0, 3.0];
        let e = [-1.0];
        assert_eq!(negative_pivots(&d, &e, 0.0), Some(0));
        assert_eq!(negative_pivots(&d, &e, 1.5), Some(1));
        assert_eq!(negative_pivots(&d, &e, 4.0), Some(2));
    }

    #[test]
    fn zero_pivot_is_reported() {
        assert_eq!(negative_pivots(&[1.0, 2.0], &[0.0], 1.0), None);
    }
}
