//! Scalar reference path of the blocked update that tallies every floating
//! point operation. Multiplications by `Σ` entries equal to `±1` are sign
//! flips and are not counted.

use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SignedDiagonal, TriFactor};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct FlopCounter {
    pub fma: u64,
    pub mul: u64,
    pub add: u64,
    pub div: u64,
    pub sqrt: u64,
}

impl FlopCounter {
    /// Closed-form fused multiply-add count of the blocked update for
    /// `Σ = ±I`: `mn² + (r−1)/4·n² + (r−1)/2·mn − (r²−3r+2)/4·n`. Exact up to
    /// lower-order terms when `r` divides `n`; a short last block does less work.
    pub fn predicted_fma(n: usize, m: usize, r: usize) -> f64 {
        let (n, m, r) = (n as f64, m as f64, r as f64);
        m * n * n + (r - 1.0) / 4.0 * n * n + (r - 1.0) / 2.0 * m * n
            - (r * r - 3.0 * r + 2.0) / 4.0 * n
    }
}

struct Tally<'a> {
    c: &'a mut FlopCounter,
}

impl Tally<'_> {
    #[inline]
    fn fma(&mut self, a: f64, b: f64, c: f64) -> f64 {
        self.c.fma += 1;
        a.mul_add(b, c)
    }

    #[inline]
    fn mul(&mut self, a: f64, b: f64) -> f64 {
        self.c.mul += 1;
        a * b
    }

    #[inline]
    fn add(&mut self, a: f64, b: f64) -> f64 {
        self.c.add += 1;
        a + b
    }

    /// `σ·x`, free when `σ = ±1`.
    #[inline]
    fn scale(&mut self, sigma: f64, x: f64) -> f64 {
        if sigma == 1.0 {
            x
        } else if sigma == -1.0 {
            -x
        } else {
            self.mul(sigma, x)
        }
    }
}

/// Same result as [`super::hyh_update`], computed on the instrumented scalar
/// path. Counts are added to `counter`.
pub fn hyh_update_counted(
    l: &TriFactor,
    a: &DenseMatrix,
    sigma: &SignedDiagonal,
    r: usize,
    counter: &mut FlopCounter,
) -> Result<TriFactor> {
    if r == 0 {
        return Err(Error::dims("block size must be at least 1"));
    }
    let n = l.n();
    if a.rows() != n {
        return Err(Error::dims("update matrix row count differs from factor order"));
    }
    sigma.check_cols(a)?;
    let m = a.cols();
    let s = sigma.entries();
    let mut out = l.clone();
    let mut a = a.clone();
    let mut tally = Tally { c: counter };
    let lm = out.as_dense_mut();

    let mut c0 = 0;
    while c0 < n {
        let rb = r.min(n - c0);
        let mut t = vec![0.0; rb * rb];
        let mut tau_inv = vec![0.0; rb];
        let mut sb = vec![0.0; m];

        // Diagonal block: one reflector per column.
        for k in 0..rb {
            let row = c0 + k;
            let lambda = lm[(row, row)];
            let mut alpha2 = 0.0;
            for p in 0..m {
                let x = a[(row, p)];
                let sx = tally.scale(s[p], x);
                alpha2 = tally.fma(sx, x, alpha2);
            }
            let radicand = tally.fma(lambda, lambda, alpha2);
            if !(radicand > 0.0) {
                return Err(Error::IndefiniteUpdate { column: row });
            }
            tally.c.sqrt += 1;
            let magnitude = radicand.sqrt();
            let lambda_new = if lambda >= 0.0 { magnitude } else { -magnitude };
            let beta = tally.add(lambda, lambda_new);
            if beta == 0.0 {
                return Err(Error::DegeneratePivot { column: row });
            }
            let denom = tally.fma(beta, beta, alpha2);
            let two_beta2 = tally.mul(2.0 * beta, beta);
            tally.c.div += 2;
            let ti = two_beta2 / denom;
            let inv_beta = 1.0 / beta;
            lm[(row, row)] = lambda_new;
            tau_inv[k] = ti;
            for p in 0..m {
                let b = tally.mul(a[(row, p)], inv_beta);
                a[(row, p)] = b;
                sb[p] = tally.scale(s[p], b);
            }
            for i in 0..k {
                let mut acc = 0.0;
                for p in 0..m {
                    acc = tally.fma(a[(c0 + i, p)], sb[p], acc);
                }
                t[i + k * rb] = acc;
            }
            for i in (k + 1)..rb {
                let ri = c0 + i;
                let ell = lm[(ri, row)];
                let mut acc = ell;
                for p in 0..m {
                    acc = tally.fma(a[(ri, p)], sb[p], acc);
                }
                let w = tally.mul(ti, acc);
                lm[(ri, row)] = tally.add(w, -ell);
                for p in 0..m {
                    a[(ri, p)] = tally.fma(-w, a[(row, p)], a[(ri, p)]);
                }
            }
        }

        // Rows below the block: W = (L21 + A2 Σ Bᵀ) T⁻¹, Ã2 = A2 − W B,
        // L̃21 = W − L21.
        let tail = c0 + rb..n;
        let nr = tail.len();
        let mut w = vec![0.0; nr * rb];
        for c in 0..rb {
            for (ii, i) in tail.clone().enumerate() {
                let mut acc = lm[(i, c0 + c)];
                for p in 0..m {
                    let coef = tally.scale(s[p], a[(c0 + c, p)]);
                    acc = tally.fma(a[(i, p)], coef, acc);
                }
                for q in 0..c {
                    acc = tally.fma(-w[ii + q * nr], t[q + c * rb], acc);
                }
                let wv = tally.mul(acc, tau_inv[c]);
                w[ii + c * nr] = wv;
                lm[(i, c0 + c)] = tally.add(wv, -lm[(i, c0 + c)]);
            }
        }
        for p in 0..m {
            for (ii, i) in tail.clone().enumerate() {
                let mut acc = a[(i, p)];
                for c in 0..rb {
                    acc = tally.fma(-w[ii + c * nr], a[(c0 + c, p)], acc);
                }
                a[(i, p)] = acc;
            }
        }
        c0 += rb;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_values() {
        assert_eq!(FlopCounter::predicted_fma(8, 2, 1), 128.0);
        assert_eq!(FlopCounter::predicted_fma(16, 4, 4), 1288.0);
        assert_eq!(FlopCounter::predicted_fma(64, 8, 8), 41056.0);
    }

    #[test]
    fn identity_counts() {
        let l = TriFactor::identity(8);
        let a = DenseMatrix::from_fn(8, 2, |i, j| 0.1 * (i + j) as f64);
        let mut c = FlopCounter::default();
        hyh_update_counted(&l, &a, &SignedDiagonal::ones(2), 1, &mut c).unwrap();
        assert_eq!(c.sqrt, 8);
        assert_eq!(c.div, 16);
        assert!((c.fma as f64 - 128.0).abs() <= 32.0, "fma = {}", c.fma);
    }
}
