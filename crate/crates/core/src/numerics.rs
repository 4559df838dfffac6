//! Small dense linear algebra helpers and the fixed-step integrator.
//!
//! Matrices and vectors are plain `nalgebra` dynamic types; everything in
//! this crate works on arms with at most a handful of joints, so heap
//! allocation per call is not a concern.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

/// Dense real matrix.
pub type Mat = DMatrix<f64>;
/// Dense real column vector.
pub type Vector = DVector<f64>;

/// Default condition-number ceiling for Gram matrices in [`pseudo_inverse`].
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("matrix is rank deficient (Gram condition number {condition:e})")]
    RankDeficient { condition: f64 },
    #[error("state derivative is not finite")]
    NonFiniteDerivative,
    #[error("integration step must be positive, got {0}")]
    InvalidStep(f64),
}

/// Moore-Penrose inverse for a full-rank matrix.
///
/// Wide matrices get the right inverse `Jᵀ(JJᵀ)⁻¹`, tall ones the left
/// inverse `(JᵀJ)⁻¹Jᵀ`, square ones a plain inverse. The Gram matrix of the
/// smaller dimension is checked against [`DEFAULT_CONDITION_LIMIT`].
pub fn pseudo_inverse(j: &Mat) -> Result<Mat, NumericsError> {
    pseudo_inverse_with_limit(j, DEFAULT_CONDITION_LIMIT)
}

pub fn pseudo_inverse_with_limit(j: &Mat, condition_limit: f64) -> Result<Mat, NumericsError> {
    let (rows, cols) = j.shape();
    let jt = j.transpose();
    let gram = if rows <= cols { j * &jt } else { &jt * j };
    let condition = spd_condition(&gram);
    if !(condition <= condition_limit) {
        return Err(NumericsError::RankDeficient { condition });
    }
    if rows == cols {
        return j
            .clone()
            .try_inverse()
            .ok_or(NumericsError::RankDeficient { condition });
    }
    let gram_inv = gram
        .cholesky()
        .ok_or(NumericsError::RankDeficient { condition })?
        .inverse();
    Ok(if rows < cols {
        jt * gram_inv
    } else {
        gram_inv * jt
    })
}

/// Ratio of extreme eigenvalues of a symmetric positive semi-definite matrix.
/// Returns `f64::INFINITY` when the smallest eigenvalue is not positive.
pub fn spd_condition(sym: &Mat) -> f64 {
    let eig = sym.clone().symmetric_eigenvalues();
    let max = eig.max();
    let min = eig.min();
    if !(min > 0.0) || !max.is_finite() {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Solves `a x = b` for a symmetric positive definite `a`.
pub fn spd_solve(a: &Mat, b: &Vector) -> Option<Vector> {
    a.clone().cholesky().map(|c| c.solve(b))
}

/// One classical fourth-order Runge-Kutta step of `ẋ = f(x)`.
pub fn rk4_step<F>(state: &Vector, deriv: F, dt: f64) -> Result<Vector, NumericsError>
where
    F: Fn(&Vector) -> Vector,
{
    if !(dt > 0.0) {
        return Err(NumericsError::InvalidStep(dt));
    }
    let eval = |x: &Vector| {
        let d = deriv(x);
        if d.iter().all(|v| v.is_finite()) {
            Ok(d)
        } else {
            Err(NumericsError::NonFiniteDerivative)
        }
    };
    let k1 = eval(state)?;
    let k2 = eval(&(state + &k1 * (dt / 2.0)))?;
    let k3 = eval(&(state + &k2 * (dt / 2.0)))?;
    let k4 = eval(&(state + &k3 * dt))?;
    Ok(state + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0))
}

/// Wraps an angle to (−π, π].
pub fn wrap_angle(a: f64) -> f64 {
    use std::f64::consts::PI;
    let mut w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w -= 2.0 * PI;
    }
    w
}

/// Skew-symmetric cross-product matrix of a 3-vector.
pub(crate) fn skew(v: &nalgebra::Vector3<f64>) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}
