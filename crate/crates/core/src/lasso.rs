//! LASSO by cyclic coordinate descent with covariance updates.
//!
//! Minimizes `(1/n)‖y − Xβ‖² + ρ‖β‖₁`. The solver only touches the
//! sufficient statistics `G = XᵀX/n`, `c = Xᵀy/n` and `yᵀy/n`, so the same
//! kernel serves the nodewise regressions of [`crate::precision`], where the
//! statistics are blocks of the Gram matrix.

use nalgebra::{DMatrix, DVector};

use crate::data::{gram_matrix, CoefficientVector, Dataset};
use crate::error::{Error, Result};
use crate::linalg::soft_threshold;

#[derive(Debug, Clone)]
pub struct LassoConfig {
    /// ρ in `(1/n)‖y − Xβ‖² + ρ‖β‖₁`.
    pub penalty: f64,
    pub max_iterations: usize,
    /// Convergence threshold on the largest coefficient change in a sweep.
    pub tolerance: f64,
    pub warm_start: Option<CoefficientVector>,
}

impl LassoConfig {
    pub fn new(penalty: f64) -> Self {
        Self {
            penalty,
            max_iterations: 10_000,
            tolerance: 1e-8,
            warm_start: None,
        }
    }

    pub fn with_max_iterations(mut self, max_iterations: usize) -> Self {
        self.max_iterations = max_iterations;
        self
    }

    pub fn with_tolerance(mut self, tolerance: f64) -> Self {
        self.tolerance = tolerance;
        self
    }

    pub fn with_warm_start(mut self, beta: CoefficientVector) -> Self {
        self.warm_start = Some(beta);
        self
    }

    fn validate(&self, p: usize) -> Result<()> {
        if !(self.penalty >= 0.0) || !self.penalty.is_finite() {
            return Err(Error::invalid(format!("lasso penalty must be >= 0, got {}", self.penalty)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::invalid("lasso tolerance must be > 0"));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("lasso max_iterations must be positive"));
        }
        if let Some(w) = &self.warm_start {
            if w.len() != p {
                return Err(Error::DimensionMismatch {
                    what: "lasso warm start",
                    expected: p,
                    got: w.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LassoFit {
    pub coefficients: CoefficientVector,
    /// Objective at `coefficients`.
    pub objective: f64,
    /// Number of full sweeps performed.
    pub iterations_used: usize,
    pub converged: bool,
    /// Objective after each sweep, starting with the initial point.
    pub objective_trace: Vec<f64>,
}

/// Sufficient statistics of a least-squares problem, all scaled by `1/n`.
#[derive(Debug, Clone)]
pub struct GramProblem {
    pub gram: DMatrix<f64>,
    pub xty: DVector<f64>,
    pub yty: f64,
}

impl GramProblem {
    pub fn from_dataset(d: &Dataset) -> Self {
        let n = d.n() as f64;
        Self {
            gram: gram_matrix(d),
            xty: d.design().tr_mul(d.response()) / n,
            yty: d.response().norm_squared() / n,
        }
    }

    pub fn p(&self) -> usize {
        self.xty.len()
    }

    pub fn objective(&self, beta: &DVector<f64>, penalty: f64) -> f64 {
        let quad = beta.dot(&(&self.gram * beta));
        self.yty - 2.0 * self.xty.dot(beta) + quad + penalty * beta.lp_norm(1)
    }
}

/// Fits the LASSO on a dataset. Non-convergence is reported through
/// `converged = false` rather than as an error.
pub fn fit_lasso(d: &Dataset, cfg: &LassoConfig) -> Result<LassoFit> {
    let problem = GramProblem::from_dataset(d);
    let mut fit = solve_gram(&problem, cfg)?;
    // report the objective from residuals rather than the expanded quadratic
    let r = d.residuals(&fit.coefficients.0);
    fit.objective = r.norm_squared() / d.n() as f64 + cfg.penalty * fit.coefficients.l1_norm();
    Ok(fit)
}

/// Coordinate descent on precomputed sufficient statistics.
pub fn solve_gram(problem: &GramProblem, cfg: &LassoConfig) -> Result<LassoFit> {
    let p = problem.p();
    cfg.validate(p)?;
    let g = &problem.gram;
    let half_penalty = cfg.penalty / 2.0;

    let mut beta = cfg
        .warm_start
        .as_ref()
        .map_or_else(|| DVector::zeros(p), |w| w.0.clone());
    // grad = c − Gβ
    let mut grad = &problem.xty - g * &beta;
    let mut trace = vec![problem.objective(&beta, cfg.penalty)];
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < cfg.max_iterations {
        sweeps += 1;
        let mut max_change = 0.0_f64;
        for j in 0..p {
            let gjj = g[(j, j)];
            let old = beta[j];
            let new = if gjj > 0.0 {
                soft_threshold(grad[j] + gjj * old, half_penalty) / gjj
            } else {
                0.0
            };
            let delta = new - old;
            if delta != 0.0 {
                beta[j] = new;
                grad.axpy(-delta, &g.column(j), 1.0);
                max_change = max_change.max(delta.abs());
            }
        }
        trace.push(problem.objective(&beta, cfg.penalty));
        if max_change < cfg.tolerance {
            converged = true;
            break;
        }
    }

    let objective = *trace.last().expect("trace starts non-empty");
    Ok(LassoFit {
        coefficients: CoefficientVector(beta),
        objective,
        iterations_used: sweeps,
        converged,
        objective_trace: trace,
    })
}

/// `scale · sqrt(log p / n)`.
///
/// For `p = 1` this is zero; callers that need a strictly positive penalty
/// must guard against it.
pub fn default_penalty(n: usize, p: usize, scale: f64) -> Result<f64> {
    if n < 2 || p < 1 {
        return Err(Error::invalid(format!("default_penalty needs n >= 2 and p >= 1 (n={n}, p={p})")));
    }
    if !(scale > 0.0) {
        return Err(Error::invalid("penalty scale must be > 0"));
    }
    Ok(scale * ((p as f64).ln() / n as f64).sqrt())
}

/// Result of K-fold cross-validation over a penalty grid.
#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub penalties: Vec<f64>,
    /// Mean held-out squared error for each grid point.
    pub errors: Vec<f64>,
    pub best_penalty: f64,
}

/// Selects ρ by K-fold cross-validation over a log-spaced grid running from
/// `ρ_max = 2‖Xᵀy/n‖_∞` (the smallest penalty giving the zero solution)
/// down to `ρ_max · 1e-3`. Fold `k` holds the observations with `i mod K = k`.
pub fn cross_validate_penalty(
    d: &Dataset,
    folds: usize,
    grid_size: usize,
    base: &LassoConfig,
) -> Result<CrossValidation> {
    if folds < 2 || folds > d.n() {
        return Err(Error::invalid(format!("need 2 <= folds <= n, got {folds}")));
    }
    if grid_size < 2 {
        return Err(Error::invalid("penalty grid needs at least 2 points"));
    }
    let full = GramProblem::from_dataset(d);
    let rho_max = 2.0 * full.xty.amax();
    if rho_max == 0.0 {
        return Ok(CrossValidation {
            penalties: vec![0.0],
            errors: vec![full.yty],
            best_penalty: 0.0,
        });
    }
    let ratio: f64 = 1e-3;
    let penalties: Vec<f64> = (0..grid_size)
        .map(|k| rho_max * ratio.powf(k as f64 / (grid_size - 1) as f64))
        .collect();

    let mut errors = vec![0.0; grid_size];
    for k in 0..folds {
        let train: Vec<usize> = (0..d.n()).filter(|i| i % folds != k).collect();
        let test: Vec<usize> = (0..d.n()).filter(|i| i % folds == k).collect();
        let x_train = d.design().select_rows(&train);
        let y_train = d.response().select_rows(&train);
        let nt = train.len() as f64;
        let mut gram = x_train.tr_mul(&x_train) / nt;
        gram.fill_lower_triangle_with_upper_triangle();
        let problem = GramProblem {
            gram,
            xty: x_train.tr_mul(&y_train) / nt,
            yty: y_train.norm_squared() / nt,
        };
        let x_test = d.design().select_rows(&test);
        let y_test = d.response().select_rows(&test);
        let mut warm: Option<CoefficientVector> = None;
        for (g, &rho) in penalties.iter().enumerate() {
            let mut cfg = base.clone();
            cfg.penalty = rho;
            cfg.warm_start = warm.take();
            let fit = solve_gram(&problem, &cfg)?;
            let err = (&y_test - &x_test * &fit.coefficients.0).norm_squared() / test.len() as f64;
            errors[g] += err / folds as f64;
            warm = Some(fit.coefficients);
        }
    }
    let best = errors
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    Ok(CrossValidation {
        best_penalty: penalties[best],
        penalties,
        errors,
    })
}
