use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::{nodewise_lasso, simplex, PrecisionEstimate, PrecisionMethod};
use crate::data::{gram_matrix, Dataset};
use crate::error::{Error, Result};
use crate::linalg;

#[derive(Debug, Clone)]
pub struct ClimeConfig {
    /// ℓ∞ radius κ of the constraint `‖Ω̂θ − eⱼ‖_∞ ≤ κ`.
    pub kappa: f64,
    /// Keep the entry of smaller magnitude between `(i, j)` and `(j, i)`.
    pub symmetrize: bool,
    /// Simplex pivot cap per row.
    pub max_pivots: usize,
}

impl Default for ClimeConfig {
    fn default() -> Self {
        Self {
            kappa: 0.1,
            symmetrize: false,
            max_pivots: 50_000,
        }
    }
}

/// CLIME with default options and radius `kappa`.
pub fn clime(d: &Dataset, kappa: f64) -> Result<PrecisionEstimate> {
    clime_with(d, &ClimeConfig { kappa, ..ClimeConfig::default() })
}

/// Solves the `p` row programs
///
/// ```text
/// min ‖θ‖₁  subject to  ‖Ω̂θ − eⱼ‖_∞ ≤ κ
/// ```
///
/// as linear programs in `(θ⁺, θ⁻) ≥ 0` and stacks the solutions as rows of `Θ̂`.
pub fn clime_with(d: &Dataset, cfg: &ClimeConfig) -> Result<PrecisionEstimate> {
    if !(cfg.kappa > 0.0) || !cfg.kappa.is_finite() {
        return Err(Error::invalid(format!("CLIME radius must be positive, got {}", cfg.kappa)));
    }
    let p = d.p();
    let gram = gram_matrix(d);
    let rows: Vec<DVector<f64>> = (0..p)
        .into_par_iter()
        .map(|j| clime_row(&gram, j, cfg.kappa, cfg.max_pivots))
        .collect::<Result<_>>()?;
    let mut theta = DMatrix::zeros(p, p);
    for (j, row) in rows.iter().enumerate() {
        theta.row_mut(j).copy_from(&row.transpose());
    }
    if cfg.symmetrize {
        theta = symmetrize_min_abs(&theta);
    }
    let constraint_norm = linalg::identity_residual_max(&theta, &gram);
    Ok(PrecisionEstimate {
        theta,
        method: PrecisionMethod::Clime,
        row_penalties: vec![cfg.kappa; p],
        residual_scales: Vec::new(),
        constraint_norm,
        converged: true,
    })
}

fn clime_row(gram: &DMatrix<f64>, j: usize, kappa: f64, max_pivots: usize) -> Result<DVector<f64>> {
    let p = gram.nrows();
    // [ Ω̂  −Ω̂ ] θ± ≤ κ + eⱼ
    // [ −Ω̂  Ω̂ ] θ± ≤ κ − eⱼ
    let a = DMatrix::from_fn(2 * p, 2 * p, |r, c| {
        let v = gram[(r % p, c % p)];
        if (r < p) == (c < p) {
            v
        } else {
            -v
        }
    });
    let b = DVector::from_fn(2 * p, |r, _| {
        let e = if r % p == j { 1.0 } else { 0.0 };
        if r < p {
            kappa + e
        } else {
            kappa - e
        }
    });
    let cost = DVector::from_element(2 * p, 1.0);
    let sol = simplex::solve(&a, &b, &cost, max_pivots).map_err(|f| match f {
        simplex::LpFailure::Infeasible => Error::numerical(format!(
            "CLIME row {j} is infeasible at kappa = {kappa}; increase kappa"
        )),
        other => Error::from(other),
    })?;
    Ok(DVector::from_fn(p, |k, _| sol.x[k] - sol.x[p + k]))
}

/// Symmetrizes by keeping, for each pair `(i, j)`, the entry of smaller
/// absolute value (ties keep `(i, j)` for `i ≤ j`).
pub fn symmetrize_min_abs(theta: &DMatrix<f64>) -> DMatrix<f64> {
    let p = theta.nrows();
    DMatrix::from_fn(p, p, |i, j| {
        let (a, b) = if i <= j {
            (theta[(i, j)], theta[(j, i)])
        } else {
            (theta[(j, i)], theta[(i, j)])
        };
        if a.abs() <= b.abs() {
            a
        } else {
            b
        }
    })
}

/// Default radius `scale · ‖Θ̂‖_∞ · sqrt(log p / n)`, with `‖Θ̂‖_∞` taken from a
/// preliminary nodewise fit at the default nodewise penalties.
pub fn default_clime_kappa(d: &Dataset, scale: f64) -> Result<f64> {
    if !(scale > 0.0) {
        return Err(Error::invalid("CLIME kappa scale must be positive"));
    }
    let pilot = nodewise_lasso(d, &super::default_nodewise_penalties(d.n(), d.p(), 1.0)?)?;
    let rate = ((d.p() as f64).ln() / d.n() as f64).sqrt();
    Ok(scale * linalg::inf_norm(&pilot.theta) * rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::Rng;
    use rand_distr::StandardNormal;

    /// Design with `XᵀX/n = I₃`.
    fn orthonormal() -> Dataset {
        let rows = vec![
            vec![1.0, 1.0, 1.0],
            vec![1.0, -1.0, 1.0],
            vec![1.0, 1.0, -1.0],
            vec![1.0, -1.0, -1.0],
        ];
        Dataset::from_rows(&rows, &[0.0; 4]).unwrap()
    }

    #[test]
    fn identity_gram_shrinks_to_boundary() {
        let d = orthonormal();
        let est = clime(&d, 0.1).unwrap();
        // exhaustive check over single-nonzero candidates: θ = t·eⱼ feasible iff
        // |t − 1| ≤ κ, the smallest such |t| is 1 − κ; any other nonzero only
        // adds ℓ₁ mass without relaxing a binding constraint.
        for j in 0..3 {
            for k in 0..3 {
                let want = if j == k { 0.9 } else { 0.0 };
                assert_abs_diff_eq!(est.theta[(j, k)], want, epsilon = 1e-12);
            }
        }
        assert!(est.constraint_norm <= 0.1 + 1e-8);
    }

    #[test]
    fn large_kappa_gives_zero() {
        let est = clime(&orthonormal(), 1.0).unwrap();
        assert!(est.theta.iter().all(|v| v.abs() < 1e-14));
        let est = clime(&orthonormal(), 1.5).unwrap();
        assert!(est.theta.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rows_are_feasible_and_locally_optimal() {
        let mut rng = crate::rng::stream(31, &[]);
        let x = DMatrix::from_fn(80, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let d = Dataset::new(x, DVector::zeros(80)).unwrap();
        let kappa = 0.2;
        let est = clime(&d, kappa).unwrap();
        let gram = gram_matrix(&d);
        let inverse = crate::linalg::spd_inverse(&gram).unwrap();
        assert!(est.constraint_norm <= kappa + 1e-8);
        let residual = |theta: &DVector<f64>, j: usize| {
            let mut r = &gram * theta;
            r[j] -= 1.0;
            r.amax()
        };
        for j in 0..6 {
            let row = est.theta.row(j).transpose();
            assert!(residual(&row, j) <= kappa + 1e-8);
            let l1 = row.lp_norm(1);
            // random feasible points: the exact inverse row plus noise kept
            // inside half the radius, mixed with the solution
            for _ in 0..1000 {
                let noise = DVector::from_fn(6, |_, _| rng.random_range(-1.0..1.0));
                let noise = &noise * (0.5 * kappa / (&gram * &noise).amax());
                let anchor = inverse.row(j).transpose() + noise;
                assert!(residual(&anchor, j) <= kappa);
                let t: f64 = 10f64.powf(rng.random_range(-6.0..0.0));
                let cand = &row * (1.0 - t) + anchor * t;
                assert!(residual(&cand, j) <= kappa + 1e-8);
                assert!(cand.lp_norm(1) >= l1 - 1e-10, "row {j} improved by a feasible point");
            }
        }
    }

    #[test]
    fn infeasible_kappa_is_an_error() {
        // Ω̂ = [[2, 2], [2, 2]]: row 0 needs |2a + 2b − 1| ≤ κ and |2a + 2b| ≤ κ
        let rows = vec![vec![1.0, 1.0], vec![2.0, 2.0], vec![-1.0, -1.0]];
        let d = Dataset::from_rows(&rows, &[0.0; 3]).unwrap();
        assert!(matches!(clime(&d, 0.01), Err(Error::Numerical(_))));
        assert!(clime(&d, -1.0).is_err());
    }

    #[test]
    fn symmetrization_keeps_smaller_entry() {
        let t = DMatrix::from_row_slice(2, 2, &[1.0, 0.3, -0.1, 2.0]);
        let s = symmetrize_min_abs(&t);
        assert_eq!(s, DMatrix::from_row_slice(2, 2, &[1.0, -0.1, -0.1, 2.0]));
    }
}
