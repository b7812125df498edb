use crate::error::{Error, Result};
use crate::matrix::{DenseMatrix, SignedDiagonal};
use crate::oracle::solve_right_upper;

/// Compact WY form `(B, T)` of a product of `k` hyperbolic Householder
/// reflectors.
///
/// Row `i` of `B` is the normalized reflector tail `b_(i)ᵀ`; `T` is upper
/// triangular with `τ_(i)` on its diagonal. The represented transformation is
///
/// ```text
/// Q = [ T⁻¹ − I      −T⁻¹ B       ]
///     [ Σ Bᵀ T⁻¹     I − Σ Bᵀ T⁻¹ B ]
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct CompactWY {
    b: DenseMatrix,
    t: DenseMatrix,
    tau_inv: Vec<f64>,
}

impl CompactWY {
    /// Checks shapes and that `T` has a nonzero diagonal.
    pub fn new(b: DenseMatrix, t: DenseMatrix) -> Result<Self> {
        if !t.is_square() || t.rows() != b.rows() {
            return Err(Error::dims(format!(
                "B is {}x{} but T is {}x{}",
                b.rows(),
                b.cols(),
                t.rows(),
                t.cols()
            )));
        }
        let mut tau_inv = Vec::with_capacity(t.rows());
        for i in 0..t.rows() {
            let d = t[(i, i)];
            if d == 0.0 {
                return Err(Error::SingularTriangular { index: i });
            }
            tau_inv.push(1.0 / d);
        }
        Ok(CompactWY { b, t, tau_inv })
    }

    pub(crate) fn from_parts(b: DenseMatrix, t: DenseMatrix, tau_inv: Vec<f64>) -> Self {
        CompactWY { b, t, tau_inv }
    }

    /// Number of reflectors.
    pub fn k(&self) -> usize {
        self.t.rows()
    }

    pub fn b(&self) -> &DenseMatrix {
        &self.b
    }

    pub fn t(&self) -> &DenseMatrix {
        &self.t
    }

    pub(crate) fn tau_inv(&self) -> &[f64] {
        &self.tau_inv
    }
}

/// Dense `(k + m) × (k + m)` matrix represented by `w`.
pub fn reconstruct_q(w: &CompactWY, sigma: &SignedDiagonal) -> Result<DenseMatrix> {
    reconstruct_q_embedded(w, sigma, w.k())
}

/// Dense `(n + m) × (n + m)` matrix represented by `w` acting on the first
/// `k ≤ n` columns of `(L | A)`; the untouched columns `k..n` get identity
/// rows and columns.
pub fn reconstruct_q_embedded(w: &CompactWY, sigma: &SignedDiagonal, n: usize) -> Result<DenseMatrix> {
    let k = w.k();
    let m = w.b.cols();
    if sigma.len() != m {
        return Err(Error::dims(format!(
            "Σ has {} entries but B has {} columns",
            sigma.len(),
            m
        )));
    }
    if n < k {
        return Err(Error::dims(format!("cannot embed {} reflectors in {} columns", k, n)));
    }
    let tinv = solve_right_upper(&DenseMatrix::identity(k), &w.t)?;
    let tinv_b = tinv.matmul(&w.b)?;
    let sbt = DenseMatrix::from_fn(m, k, |i, j| sigma.entries()[i] * w.b[(j, i)]);
    let sbt_tinv = sbt.matmul(&tinv)?;
    let sbt_tinv_b = sbt_tinv.matmul(&w.b)?;

    let mut q = DenseMatrix::identity(n + m);
    for j in 0..k {
        for i in 0..k {
            q[(i, j)] = tinv[(i, j)] - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        for i in 0..k {
            q[(i, n + j)] = -tinv_b[(i, j)];
        }
    }
    for j in 0..k {
        for i in 0..m {
            q[(n + i, j)] = sbt_tinv[(i, j)];
        }
    }
    for j in 0..m {
        for i in 0..m {
            q[(n + i, n + j)] -= sbt_tinv_b[(i, j)];
        }
    }
    Ok(q)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_block() {
        let k = 3;
        let t = DenseMatrix::from_fn(k, k, |i, j| if i == j { 0.5 } else { 0.0 });
        let w = CompactWY::new(DenseMatrix::zeros(k, 2), t).unwrap();
        let q = reconstruct_q(&w, &SignedDiagonal::new(vec![1.0, -1.0])).unwrap();
        assert_eq!(q, DenseMatrix::identity(k + 2));
    }

    #[test]
    fn singular_t_rejected() {
        let t = DenseMatrix::from_rows(&[[1.0, 0.0], [0.0, 0.0]]).unwrap();
        assert_eq!(
            CompactWY::new(DenseMatrix::zeros(2, 1), t),
            Err(Error::SingularTriangular { index: 1 })
        );
    }

    #[test]
    fn embedding_keeps_untouched_columns() {
        let t = DenseMatrix::from_rows(&[[0.5]]).unwrap();
        let w = CompactWY::new(DenseMatrix::zeros(1, 1), t).unwrap();
        let q = reconstruct_q_embedded(&w, &SignedDiagonal::ones(1), 3).unwrap();
        assert_eq!(q, DenseMatrix::identity(4));
        assert!(reconstruct_q_embedded(&w, &SignedDiagonal::ones(1), 0).is_err());
    }
}
