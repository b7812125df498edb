use crate::error::{Error, Result};
use crate::matrix::SignedDiagonal;

/// Scalars defining one normalized hyperbolic Householder reflector.
///
/// The reflector maps the row `(λ, aᵀ)` to `(λ̃, 0)` under the
/// `diag(1, Σ)` inner product, with `b = a / β` as its normalized tail.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflectorScalars {
    pub lambda_new: f64,
    pub tau_inv: f64,
    pub b: Vec<f64>,
}

/// Scalars shared by every reflector construction site.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Pivot {
    pub lambda_new: f64,
    pub inv_beta: f64,
    pub tau_inv: f64,
    pub tau: f64,
}

/// `λ̃ = sign(λ)·√(λ² + α²)` with `sign(0) = 1`, `β = λ + λ̃`,
/// `τ⁻¹ = 2β² / (α² + β²)`.
#[inline]
pub(crate) fn pivot(lambda: f64, alpha2: f64, column: usize) -> Result<Pivot> {
    let radicand = lambda * lambda + alpha2;
    if !(radicand > 0.0) {
        return Err(Error::IndefiniteUpdate { column });
    }
    let magnitude = radicand.sqrt();
    let lambda_new = if lambda >= 0.0 { magnitude } else { -magnitude };
    let beta = lambda + lambda_new;
    if beta == 0.0 {
        return Err(Error::DegeneratePivot { column });
    }
    let beta2 = beta * beta;
    let denom = alpha2 + beta2;
    Ok(Pivot {
        lambda_new,
        inv_beta: 1.0 / beta,
        tau_inv: 2.0 * beta2 / denom,
        tau: denom / (2.0 * beta2),
    })
}

/// Construct the reflector that annihilates `a` against the pivot `lambda`.
pub fn make_reflector(lambda: f64, a: &[f64], sigma: &SignedDiagonal) -> Result<ReflectorScalars> {
    if a.len() != sigma.len() {
        return Err(Error::dims(format!(
            "reflector row has {} entries but Σ has {}",
            a.len(),
            sigma.len()
        )));
    }
    let alpha2: f64 = a
        .iter()
        .zip(sigma.entries())
        .map(|(&x, &s)| s * x * x)
        .sum();
    let p = pivot(lambda, alpha2, 0)?;
    Ok(ReflectorScalars {
        lambda_new: p.lambda_new,
        tau_inv: p.tau_inv,
        b: a.iter().map(|&x| x * p.inv_beta).collect(),
    })
}
