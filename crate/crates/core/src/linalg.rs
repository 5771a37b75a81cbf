use nalgebra::{Cholesky, DMatrix, SymmetricEigen};

/// Inverse of a symmetric positive-definite matrix via Cholesky, exactly symmetric.
pub(crate) fn spd_inverse(a: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let chol = Cholesky::new(a.clone())?;
    let mut inv = chol.inverse();
    inv.fill_lower_triangle_with_upper_triangle();
    Some(inv)
}

/// 2-norm condition number of a symmetric matrix; infinite when singular.
pub(crate) fn symmetric_condition_number(a: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(a.clone());
    let (lo, hi) = eig
        .eigenvalues
        .iter()
        .fold((f64::INFINITY, 0.0_f64), |(lo, hi), v| (lo.min(v.abs()), hi.max(v.abs())));
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Max-norm `max |aᵢⱼ|`.
pub(crate) fn max_abs(a: &DMatrix<f64>) -> f64 {
    a.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
}

/// Matrix ∞-norm: maximum absolute row sum.
pub(crate) fn inf_norm(a: &DMatrix<f64>) -> f64 {
    a.row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Cholesky factor of a symmetric positive-definite `A`. On failure, diagonal
/// jitter starting at `jitter · max|Aᵢᵢ|` is added and grown tenfold until the
/// factorization succeeds. Also returns the number of jitter escalations.
pub(crate) fn cholesky_with_jitter(a: &DMatrix<f64>, jitter: f64) -> Option<(Cholesky<f64, nalgebra::Dyn>, usize)> {
    if let Some(c) = Cholesky::new(a.clone()) {
        return Some((c, 0));
    }
    let scale = a.diagonal().iter().fold(0.0_f64, |m, v| m.max(v.abs())).max(1.0);
    let mut eps = jitter * scale;
    for attempt in 1..=40 {
        let mut b = a.clone();
        for i in 0..b.nrows() {
            b[(i, i)] += eps;
        }
        if let Some(c) = Cholesky::new(b) {
            return Some((c, attempt));
        }
        eps *= 10.0;
    }
    None
}

pub(crate) fn identity_residual_max(theta: &DMatrix<f64>, gram: &DMatrix<f64>) -> f64 {
    let mut prod = theta * gram;
    for i in 0..prod.nrows() {
        prod[(i, i)] -= 1.0;
    }
    max_abs(&prod)
}

pub(crate) fn soft_threshold(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kink_resolves_to_zero() {
        assert_eq!(soft_threshold(0.5, 0.5), 0.0);
        assert_eq!(soft_threshold(-0.5, 0.5), 0.0);
        assert_eq!(soft_threshold(0.75, 0.5), 0.25);
        assert_eq!(soft_threshold(-0.75, 0.5), -0.25);
    }

    #[test]
    fn norms() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, -3.0, 2.0, 0.5]);
        assert_eq!(max_abs(&a), 3.0);
        assert_eq!(inf_norm(&a), 4.0);
        assert!((symmetric_condition_number(&DMatrix::from_diagonal_element(3, 3, 2.0)) - 1.0).abs() < 1e-12);
    }
}
