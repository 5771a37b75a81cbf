//! Plug-in estimators of the precision matrix `Θ₀ = Ω₀⁻¹`.
//!
//! Three estimators are available: nodewise LASSO (the default), CLIME, and
//! the direct inverse of the Gram matrix for `p < n`. Each records the
//! constraint residual `‖Θ̂Ω̂ − I‖_max` as a diagnostic.

mod clime;
mod nodewise;
pub mod simplex;

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{gram_matrix, Dataset};
use crate::error::{Error, Result};
use crate::linalg;

pub use clime::{clime, clime_with, default_clime_kappa, symmetrize_min_abs, ClimeConfig};
pub use nodewise::nodewise_lasso;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionMethod {
    Nodewise,
    Clime,
    DirectInverse,
}

impl std::str::FromStr for PrecisionMethod {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nodewise" => Ok(Self::Nodewise),
            "clime" => Ok(Self::Clime),
            "direct" | "direct_inverse" => Ok(Self::DirectInverse),
            other => Err(Error::invalid(format!(
                "unknown precision method {other:?} (expected nodewise, clime or direct)"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct PrecisionEstimate {
    /// `p × p` estimate `Θ̂`.
    pub theta: DMatrix<f64>,
    pub method: PrecisionMethod,
    /// λⱼ for nodewise rows, κ replicated for CLIME, zero for the direct inverse.
    pub row_penalties: Vec<f64>,
    /// τ̂ⱼ² for nodewise rows; empty for the other methods.
    pub residual_scales: Vec<f64>,
    /// `‖Θ̂Ω̂ − I‖_max`.
    pub constraint_norm: f64,
    /// False when some row's inner solver hit its iteration cap.
    pub converged: bool,
}

impl PrecisionEstimate {
    pub fn p(&self) -> usize {
        self.theta.nrows()
    }

    /// `max_j λⱼ / τ̂ⱼ²`, the bound the nodewise KKT conditions place on
    /// `‖Θ̂Ω̂ − I‖_max`. `None` for the other methods.
    pub fn kkt_bound(&self) -> Option<f64> {
        if self.method != PrecisionMethod::Nodewise {
            return None;
        }
        Some(
            self.row_penalties
                .iter()
                .zip(&self.residual_scales)
                .map(|(l, t)| l / t)
                .fold(0.0, f64::max),
        )
    }

    /// Writes `Θ̂` as CSV with the dataset's column names as header.
    pub fn write_csv(&self, path: impl AsRef<Path>, names: &[String]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(names)?;
        for row in self.theta.row_iter() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Metadata without the matrix itself.
    pub fn summary(&self) -> PrecisionSummary {
        PrecisionSummary {
            method: self.method,
            p: self.p(),
            row_penalties: self.row_penalties.clone(),
            residual_scales: self.residual_scales.clone(),
            constraint_norm: self.constraint_norm,
            kkt_bound: self.kkt_bound(),
            converged: self.converged,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PrecisionSummary {
    pub method: PrecisionMethod,
    pub p: usize,
    pub row_penalties: Vec<f64>,
    pub residual_scales: Vec<f64>,
    pub constraint_norm: f64,
    pub kkt_bound: Option<f64>,
    pub converged: bool,
}

/// `Θ̂ = Ω̂⁻¹`; requires `p < n` and a condition number below `1e12`.
pub fn direct_inverse(d: &Dataset) -> Result<PrecisionEstimate> {
    if d.p() >= d.n() {
        return Err(Error::invalid(format!(
            "direct inverse needs p < n (p={}, n={})",
            d.p(),
            d.n()
        )));
    }
    let gram = gram_matrix(d);
    let cond = linalg::symmetric_condition_number(&gram);
    if !(cond < 1e12) {
        return Err(Error::numerical(format!("Gram matrix is ill-conditioned (condition number {cond:.3e})")));
    }
    let theta = linalg::spd_inverse(&gram).ok_or_else(|| Error::numerical("Gram matrix is not positive definite"))?;
    let constraint_norm = linalg::identity_residual_max(&theta, &gram);
    Ok(PrecisionEstimate {
        theta,
        method: PrecisionMethod::DirectInverse,
        row_penalties: vec![0.0; d.p()],
        residual_scales: Vec::new(),
        constraint_norm,
        converged: true,
    })
}

/// Constant nodewise penalties `scale · sqrt(log p / n)`.
pub fn default_nodewise_penalties(n: usize, p: usize, scale: f64) -> Result<Vec<f64>> {
    if p < 2 {
        return Err(Error::invalid("nodewise regression needs p >= 2"));
    }
    if !(scale > 0.0) {
        return Err(Error::invalid("nodewise penalty scale must be positive"));
    }
    let lambda = crate::lasso::default_penalty(n, p, scale)?;
    Ok(vec![lambda; p])
}

/// Estimates Θ̂ with the given method and tuning scale (nodewise λ scale or
/// CLIME κ scale; ignored by the direct inverse).
pub fn estimate(d: &Dataset, method: PrecisionMethod, scale: f64, symmetrize: bool) -> Result<PrecisionEstimate> {
    match method {
        PrecisionMethod::Nodewise => nodewise_lasso(d, &default_nodewise_penalties(d.n(), d.p(), scale)?),
        PrecisionMethod::Clime => {
            let kappa = default_clime_kappa(d, scale)?;
            clime_with(d, &ClimeConfig { kappa, symmetrize, ..ClimeConfig::default() })
        }
        PrecisionMethod::DirectInverse => direct_inverse(d),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use nalgebra::DVector;
    use rand::Rng;
    use rand_distr::StandardNormal;

    #[test]
    fn direct_inverse_of_diagonal_gram() {
        // rows chosen so that XᵀX/n = diag(0.5, 2)
        let d2 =Dataset::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 0.0], vec![0.0, 2.0]], &[0.0; 4]).unwrap();
        assert_eq!(gram_matrix(&d2), DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 2.0])));
        let est = direct_inverse(&d2).unwrap();
        assert_abs_diff_eq!(est.theta[(0, 0)], 2.0, epsilon = 1e-14);
        assert_abs_diff_eq!(est.theta[(1, 1)], 0.5, epsilon = 1e-14);
        assert_eq!(est.theta[(0, 1)], 0.0);
    }

    #[test]
    fn direct_inverse_identity_and_errors() {
        let mut rng = crate::rng::stream(17, &[]);
        let x = DMatrix::from_fn(30, 4, |_, _| rng.sample::<f64, _>(StandardNormal));
        let d = Dataset::new(x, DVector::zeros(30)).unwrap();
        let est = direct_inverse(&d).unwrap();
        let prod = &est.theta * gram_matrix(&d);
        assert!((prod - DMatrix::identity(4, 4)).amax() < 1e-10);
        assert!(est.constraint_norm <= 1e-8);

        let wide = Dataset::new(DMatrix::from_fn(3, 3, |i, j| (i + j) as f64), DVector::zeros(3)).unwrap();
        assert!(direct_inverse(&wide).is_err());
        let collinear = Dataset::new(DMatrix::from_fn(10, 2, |i, _| i as f64), DVector::zeros(10)).unwrap();
        assert!(matches!(direct_inverse(&collinear), Err(Error::Numerical(_))));
    }

    #[test]
    fn default_penalty_vectors() {
        let v = default_nodewise_penalties(100, 100, 1.0).unwrap();
        assert_eq!(v.len(), 100);
        assert!(v.iter().all(|l| (l - 0.214_596_6).abs() < 1e-7));
        let v = default_nodewise_penalties(400, 100, 1.0).unwrap();
        assert!(v.iter().all(|l| (l - 0.107_298_3).abs() < 1e-7));
        assert!(default_nodewise_penalties(100, 100, 0.0).is_err());
        assert!(default_nodewise_penalties(100, 1, 1.0).is_err());
    }

    #[test]
    fn method_names_parse() {
        assert_eq!("nodewise".parse::<PrecisionMethod>().unwrap(), PrecisionMethod::Nodewise);
        assert_eq!("direct".parse::<PrecisionMethod>().unwrap(), PrecisionMethod::DirectInverse);
        assert!("glasso".parse::<PrecisionMethod>().is_err());
    }
}
