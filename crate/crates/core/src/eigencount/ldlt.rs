//! Inertia of `H - shift` by symmetric factorization.

use crate::matrix::SymBandMatrix;

/// Entry growth past this factor (relative to `||H - shift||_inf`) makes the
/// unpivoted band factorization untrustworthy.
const MAX_GROWTH: f64 = 1e8;

pub enum BandOutcome {
    Count(usize),
    ZeroPivot,
    Unstable,
}

/// Unpivoted banded LDL^T; counts negative pivots.
pub fn band_negative_pivots(h: &SymBandMatrix, shift: f64) -> BandOutcome {
    let n = h.dim();
    let bw = h.bandwidth();
    let w = bw + 1;
    // a[i * w + k] holds entry (i, i - k) of the trailing Schur complement
    let mut a = vec![0.0; n * w];
    for i in 0..n {
        for k in 0..=bw.min(i) {
            a[i * w + k] = h.get(i, i - k);
        }
        a[i * w] -= shift;
    }
    let scale = h.inf_norm() + shift.abs();
    let limit = MAX_GROWTH * scale.max(f64::MIN_POSITIVE);
    let mut count = 0;
    for k in 0..n {
        let d = a[k * w];
        if d == 0.0 || d.is_nan() {
            return BandOutcome::ZeroPivot;
        }
        if d < 0.0 {
            count += 1;
        }
        let last = (k + bw).min(n - 1);
        for i in k + 1..=last {
            let lik = a[i * w + (i - k)];
            if lik == 0.0 {
                continue;
            }
            let f = lik / d;
            for j in k + 1..=i {
                let ljk = a[j * w + (j - k)];
                let slot = i * w + (i - j);
                a[slot] -= f * ljk;
                if a[slot].abs() > limit {
                    return BandOutcome::Unstable;
                }
            }
        }
    }
    BandOutcome::Count(count)
}

/// Negative eigenvalue count of the dense symmetric `H - shift` by
/// Bunch-Kaufman diagonal pivoting with 1x1 and 2x2 blocks.
///
/// Returns `None` if the matrix is numerically singular.
pub fn dense_negative_eigenvalues(h: &SymBandMatrix, shift: f64) -> Option<usize> {
    let n = h.dim();
    let mut a = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            a[i * n + j] = h.get(i, j);
        }
        a[i * n + i] -= shift;
    }
    let alpha = (1.0 + 17f64.sqrt()) / 8.0;
    let idx = |i: usize, j: usize| i * n + j;
    let swap = |a: &mut [f64], p: usize, q: usize| {
        if p == q {
            return;
        }
        for c in 0..n {
            a.swap(idx(p, c), idx(q, c));
        }
        for r in 0..n {
            a.swap(idx(r, p), idx(r, q));
        }
    };

    let mut count = 0;
    let mut k = 0;
    while k < n {
        let absakk = a[idx(k, k)].abs();
        let (mut r, mut colmax) = (k, 0.0f64);
        for i in k + 1..n {
            let v = a[idx(i, k)].abs();
            if v > colmax {
                colmax = v;
                r = i;
            }
        }
        if absakk.max(colmax) == 0.0 {
            return None;
        }
        let two_by_two;
        if absakk >= alpha * colmax {
            two_by_two = false;
        } else {
            let rowmax = (k..n)
                .filter(|&j| j != r)
                .map(|j| a[idx(r, j)].abs())
                .fold(0.0, f64::max);
            if absakk * rowmax >= alpha * colmax * colmax {
                two_by_two = false;
            } else if a[idx(r, r)].abs() >= alpha * rowmax {
                swap(&mut a, k, r);
                two_by_two = false;
            } else {
                swap(&mut a, k + 1, r);
                two_by_two = true;
            }
        }

        if !two_by_two {
            let d = a[idx(k, k)];
            if d == 0.0 {
                return None;
            }
            if d < 0.0 {
                count += 1;
            }
            for i in k + 1..n {
                let f = a[idx(i, k)] / d;
                if f == 0.0 {
                    continue;
                }
                for j in k + 1..n {
                    a[idx(i, j)] -= f * a[idx(k, j)];
                }
            }
            k += 1;
        } else {
            let (p, b, q) = (a[idx(k, k)], a[idx(k + 1, k)], a[idx(k + 1, k + 1)]);
            let det = p * q - b * b;
            if det == 0.0 || det.is_nan() {
                return None;
            }
            if det < 0.0 {
                count += 1;
            } else if p + q < 0.0 {
                count += 2;
            }
            // trailing update A22 -= C D^{-1} C^T with C = A[k+2.., k..k+2]
            let (i00, i01, i11) = (q / det, -b / det, p / det);
            for i in k + 2..n {
                let (ci0, ci1) = (a[idx(i, k)], a[idx(i, k + 1)]);
                let w0 = ci0 * i00 + ci1 * i01;
                let w1 = ci0 * i01 + ci1 * i11;
                for j in k + 2..n {
                    a[idx(i, j)] -= w0 * a[idx(j, k)] + w1 * a[idx(j, k + 1)];
                }
            }
            k += 2;
        }
    }
    Some(count)
}
