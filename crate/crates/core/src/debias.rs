//! Bayesian-bootstrap debiasing of posterior draws.
//!
//! A draw `β` from any initial posterior is mapped to
//!
//! ```text
//! β̃ = β + Θ̂ Σᵢ Wᵢ Xᵢ (Yᵢ − Xᵢᵀβ)
//! ```
//!
//! where `W` is a fresh vector of normalized unit exponentials. With the
//! uniform weights `1/n` in place of `W` the correction becomes the one of the
//! debiased LASSO, and with `Θ̂ = Ω̂⁻¹` it returns the least-squares estimate
//! whatever `β` is. The random weights are what carry the sampling
//! variability into the debiased draws.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::data::{CoefficientVector, CredibleInterval, Dataset};
use crate::draws::{self, PosteriorDrawSet, PriorTag};
use crate::error::{Error, Result};
use crate::lasso::{fit_lasso, LassoConfig, LassoFit};
use crate::precision::{PrecisionEstimate, PrecisionMethod};
use crate::rng::{self, tag};

/// Draws processed together in [`run_algorithm1`]. The chunking is fixed so
/// results do not depend on the number of worker threads.
const CHUNK: usize = 256;

/// A point of the probability simplex.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(DVector<f64>);

impl WeightVector {
    pub fn new(weights: DVector<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::invalid("weight vector is empty"));
        }
        if weights.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        let total = weights.sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::invalid(format!("weights sum to {total}, not 1")));
        }
        Ok(Self(weights))
    }

    /// The uniform weights `1/n`.
    pub fn uniform(n: usize) -> Self {
        Self(DVector::from_element(n, 1.0 / n as f64))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        self.0.as_slice()
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.0
    }
}

fn fill_weights(out: &mut [f64], seed: u64, b: usize) {
    let mut rng = rng::stream(seed, &[tag::WEIGHTS, b as u64]);
    let mut total = 0.0;
    for w in out.iter_mut() {
        let mut e: f64 = rng.sample(Exp1);
        while e <= 0.0 {
            e = rng.sample(Exp1);
        }
        *w = e;
        total += e;
    }
    for w in out.iter_mut() {
        *w /= total;
    }
}

/// Weight vector number `b` of the stream keyed by `seed`.
pub fn draw_weight(n: usize, seed: u64, b: usize) -> WeightVector {
    let mut w = vec![0.0; n];
    fill_weights(&mut w, seed, b);
    WeightVector(DVector::from_vec(w))
}

/// `n_draws` independent weight vectors of length `n`.
pub fn draw_weights(n: usize, n_draws: usize, seed: u64) -> Result<Vec<WeightVector>> {
    if n == 0 || n_draws == 0 {
        return Err(Error::invalid("weights need n >= 1 and B >= 1"));
    }
    Ok((0..n_draws).into_par_iter().map(|b| draw_weight(n, seed, b)).collect())
}

fn check_dims(d: &Dataset, theta: &PrecisionEstimate, p: usize) -> Result<()> {
    if theta.p() != d.p() {
        return Err(Error::DimensionMismatch {
            what: "precision matrix",
            expected: d.p(),
            got: theta.p(),
        });
    }
    if p != d.p() {
        return Err(Error::DimensionMismatch {
            what: "coefficient vector",
            expected: d.p(),
            got: p,
        });
    }
    Ok(())
}

/// Debiases one draw with the given weights.
pub fn debias_draw(
    beta: &CoefficientVector,
    w: &WeightVector,
    theta: &PrecisionEstimate,
    d: &Dataset,
) -> Result<CoefficientVector> {
    check_dims(d, theta, beta.len())?;
    if w.len() != d.n() {
        return Err(Error::DimensionMismatch {
            what: "weight vector",
            expected: d.n(),
            got: w.len(),
        });
    }
    let weighted = d.residuals(&beta.0).component_mul(w.as_vector());
    let score = d.design().tr_mul(&weighted);
    Ok(CoefficientVector(&beta.0 + &theta.theta * score))
}

/// Debiased draws with their provenance.
#[derive(Debug, Clone)]
pub struct DebiasedDrawSet {
    pub draws: DMatrix<f64>,
    pub source_prior: PriorTag,
    pub precision_method: PrecisionMethod,
    /// Debiased LASSO estimate, when one was computed alongside.
    pub center_estimate: Option<CoefficientVector>,
    pub seed: u64,
}

impl DebiasedDrawSet {
    pub fn n_draws(&self) -> usize {
        self.draws.nrows()
    }

    pub fn p(&self) -> usize {
        self.draws.ncols()
    }

    /// Debiased posterior mean, the reported point estimate.
    pub fn column_means(&self) -> DVector<f64> {
        draws::column_means(&self.draws)
    }

    /// Sample standard deviation of every column.
    pub fn column_sds(&self) -> DVector<f64> {
        DVector::from_iterator(
            self.p(),
            self.draws.column_iter().map(|c| c.variance().sqrt() * (c.len() as f64 / (c.len() as f64 - 1.0)).sqrt()),
        )
    }

    /// Equal-tailed `1 − alpha` interval for coefficient `j`.
    pub fn credible_interval(&self, j: usize, alpha: f64) -> Result<CredibleInterval> {
        draws::equal_tailed_interval(&self.draws, j, alpha)
    }

    pub fn credible_intervals(&self, alpha: f64) -> Result<Vec<CredibleInterval>> {
        (0..self.p()).map(|j| self.credible_interval(j, alpha)).collect()
    }

    pub fn write_csv(&self, path: impl AsRef<Path>, names: &[String]) -> Result<()> {
        draws::write_draws_csv(&self.draws, path, names)
    }
}

/// Equal-tailed `1 − alpha` interval of column `j` of a debiased draw set.
pub fn credible_interval(draws: &DebiasedDrawSet, j: usize, alpha: f64) -> Result<CredibleInterval> {
    draws.credible_interval(j, alpha)
}

/// Debiases every row of `initial`, row `b` with weight vector `b` of the
/// stream keyed by `seed`.
///
/// Rows are processed in fixed blocks of 256: with `B_c` the block of draws
/// and `W_c` its weights, the block result is
/// `B_c + ((1yᵀ − B_c Xᵀ) ∘ W_c) X Θ̂ᵀ`.
pub fn run_algorithm1(
    d: &Dataset,
    initial: &PosteriorDrawSet,
    theta: &PrecisionEstimate,
    seed: u64,
) -> Result<DebiasedDrawSet> {
    if initial.debiased {
        return Err(Error::invalid("draws are already debiased"));
    }
    check_dims(d, theta, initial.p())?;
    let n = d.n();
    let b_total = initial.n_draws();
    let x = d.design();
    let y = d.response();
    let theta_t = theta.theta.transpose();

    let blocks: Vec<DMatrix<f64>> = (0..b_total.div_ceil(CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * CHUNK;
            let rows = CHUNK.min(b_total - start);
            let block = initial.draws.rows(start, rows).into_owned();
            let mut resid = -(&block * x.transpose());
            let mut w = vec![0.0; n];
            for r in 0..rows {
                fill_weights(&mut w, seed, start + r);
                for i in 0..n {
                    resid[(r, i)] = (resid[(r, i)] + y[i]) * w[i];
                }
            }
            block + (resid * x) * &theta_t
        })
        .collect();

    let mut out = DMatrix::zeros(b_total, d.p());
    for (c, block) in blocks.into_iter().enumerate() {
        out.rows_mut(c * CHUNK, block.nrows()).copy_from(&block);
    }
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical("debiased draws contain non-finite values"));
    }
    Ok(DebiasedDrawSet {
        draws: out,
        source_prior: initial.prior_tag,
        precision_method: theta.method,
        center_estimate: None,
        seed,
    })
}

/// Debiased LASSO `β̂ + Θ̂ (1/n) Σᵢ Xᵢ(Yᵢ − Xᵢᵀβ̂)` together with its pilot fit.
pub fn debiased_lasso_with_pilot(
    d: &Dataset,
    theta: &PrecisionEstimate,
    lasso_cfg: &LassoConfig,
) -> Result<(CoefficientVector, LassoFit)> {
    check_dims(d, theta, d.p())?;
    let pilot = fit_lasso(d, lasso_cfg)?;
    if !pilot.converged {
        log::warn!("LASSO pilot did not converge in {} sweeps", pilot.iterations_used);
    }
    let estimate = debias_draw(&pilot.coefficients, &WeightVector::uniform(d.n()), theta, d)?;
    Ok((estimate, pilot))
}

/// Debiased LASSO estimate.
pub fn debiased_lasso(d: &Dataset, theta: &PrecisionEstimate, lasso_cfg: &LassoConfig) -> Result<CoefficientVector> {
    Ok(debiased_lasso_with_pilot(d, theta, lasso_cfg)?.0)
}

/// Heteroskedasticity-robust variances
/// `σ̂ⱼ² = (1/n) Σᵢ (Θ̂Xᵢ)ⱼ² ε̂ᵢ²` with `ε̂ = y − X·residual_source`.
pub fn estimate_sandwich_variance(
    d: &Dataset,
    theta: &PrecisionEstimate,
    residual_source: &CoefficientVector,
) -> Result<DVector<f64>> {
    check_dims(d, theta, residual_source.len())?;
    let resid2 = d.residuals(&residual_source.0).map(|e| e * e);
    let projected = d.design() * theta.theta.transpose();
    let n = d.n() as f64;
    Ok(DVector::from_iterator(
        d.p(),
        projected.column_iter().map(|c| c.iter().zip(resid2.iter()).map(|(a, e)| a * a * e).sum::<f64>() / n),
    ))
}

/// `center ± z₁₋α/₂ · sqrt(variance / n)`.
pub fn normal_interval(center: f64, variance: f64, n: usize, j: usize, level: f64) -> Result<CredibleInterval> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("level must be in (0, 1), got {level}")));
    }
    let z = Normal::standard().inverse_cdf(0.5 + level / 2.0);
    let half = z * (variance.max(0.0) / n as f64).sqrt();
    Ok(CredibleInterval {
        lower: center - half,
        upper: center + half,
        level,
        coefficient_index: j,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::precision::{direct_inverse, nodewise_lasso};
    use crate::stats;
    use approx::assert_abs_diff_eq;
    use rand_distr::StandardNormal;

    fn random_data(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = rng::stream(seed, &[]);
        let x = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let y = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        Dataset::new(x, y).unwrap()
    }

    fn ols(d: &Dataset) -> DVector<f64> {
        let g = d.design().tr_mul(d.design());
        g.cholesky().unwrap().solve(&d.design().tr_mul(d.response()))
    }

    #[test]
    fn weights_live_on_the_simplex() {
        assert_eq!(draw_weight(1, 5, 0).as_slice(), &[1.0]);
        for w in draw_weights(37, 50, 3).unwrap() {
            assert!((w.as_vector().sum() - 1.0).abs() <= 1e-12);
            assert!(w.as_slice().iter().all(|v| *v > 0.0));
        }
        assert!(draw_weights(0, 5, 1).is_err());
        assert!(WeightVector::new(DVector::from_vec(vec![0.5, 0.6])).is_err());
        assert_eq!(draw_weights(5, 3, 9).unwrap(), draw_weights(5, 3, 9).unwrap());
    }

    #[test]
    fn zero_residuals_leave_draw_unchanged() {
        let d0 = random_data(20, 3, 61);
        let beta = DVector::from_vec(vec![1.0, -2.0, 0.5]);
        let d = Dataset::new(d0.design().clone(), d0.design() * &beta).unwrap();
        let theta = direct_inverse(&d).unwrap();
        let out = debias_draw(&CoefficientVector(beta.clone()), &draw_weight(20, 1, 0), &theta, &d).unwrap();
        assert!((out.0 - &beta).amax() < 1e-12);
    }

    #[test]
    fn uniform_weights_with_exact_inverse_give_least_squares() {
        let d = random_data(50, 5, 62);
        let theta = direct_inverse(&d).unwrap();
        let target = ols(&d);
        let mut rng = rng::stream(63, &[]);
        for _ in 0..20 {
            let beta = DVector::from_fn(5, |_, _| 5.0 * rng.sample::<f64, _>(StandardNormal));
            let out = debias_draw(&CoefficientVector(beta), &WeightVector::uniform(50), &theta, &d).unwrap();
            assert!((out.0 - &target).amax() <= 1e-10);
        }
    }

    #[test]
    fn residual_bootstrap_identity() {
        let d = random_data(40, 4, 64);
        let theta = direct_inverse(&d).unwrap();
        let beta = DVector::from_vec(vec![0.3, -1.0, 2.0, 0.0]);
        let w = draw_weight(40, 7, 3);
        let out = debias_draw(&CoefficientVector(beta.clone()), &w, &theta, &d).unwrap();
        let fitted = d.design() * &beta;
        let pseudo = &fitted + (d.response() - &fitted).component_mul(w.as_vector()) * 40.0;
        let refit = ols(&Dataset::new(d.design().clone(), pseudo).unwrap());
        assert!((out.0 - refit).amax() <= 1e-10);
    }

    #[test]
    fn batched_transform_matches_single_draws() {
        let d = random_data(30, 6, 65);
        let theta = nodewise_lasso(&d, &[0.1; 6]).unwrap();
        let mut rng = rng::stream(66, &[]);
        let raw = DMatrix::from_fn(600, 6, |_, _| rng.sample::<f64, _>(StandardNormal));
        let initial = PosteriorDrawSet::new(raw.clone(), PriorTag::SpikeSlabVb, 1).unwrap();
        let out = run_algorithm1(&d, &initial, &theta, 17).unwrap();
        for b in [0, 255, 256, 599] {
            let single = debias_draw(
                &CoefficientVector(raw.row(b).transpose()),
                &draw_weight(30, 17, b),
                &theta,
                &d,
            )
            .unwrap();
            assert!((out.draws.row(b).transpose() - single.0).amax() < 1e-10);
        }
        let again = run_algorithm1(&d, &initial, &theta, 17).unwrap();
        assert_eq!(out.draws, again.draws);
    }

    #[test]
    fn single_zero_residual_draw_passes_through() {
        let d0 = random_data(15, 2, 67);
        let beta = DVector::from_vec(vec![0.7, -0.2]);
        let d = Dataset::new(d0.design().clone(), d0.design() * &beta).unwrap();
        let theta = direct_inverse(&d).unwrap();
        let initial = PosteriorDrawSet::new(DMatrix::from_row_slice(1, 2, beta.as_slice()), PriorTag::SpikeSlabVb, 0).unwrap();
        let out = run_algorithm1(&d, &initial, &theta, 3).unwrap();
        assert!((out.draws.row(0).transpose() - beta).amax() < 1e-12);
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let d = random_data(20, 3, 68);
        let theta = direct_inverse(&d).unwrap();
        let wrong = PosteriorDrawSet::new(DMatrix::zeros(4, 2), PriorTag::SpikeSlabVb, 0).unwrap();
        assert!(run_algorithm1(&d, &wrong, &theta, 0).is_err());
        let mut done = PosteriorDrawSet::new(DMatrix::zeros(4, 3), PriorTag::SpikeSlabVb, 0).unwrap();
        done.debiased = true;
        assert!(run_algorithm1(&d, &done, &theta, 0).is_err());
        assert!(debias_draw(&CoefficientVector::zeros(3), &WeightVector::uniform(19), &theta, &d).is_err());
    }

    #[test]
    fn debiased_lasso_special_cases() {
        let d = random_data(40, 4, 69);
        let theta = direct_inverse(&d).unwrap();
        let est = debiased_lasso(&d, &theta, &LassoConfig::new(0.0)).unwrap();
        assert!((est.0 - ols(&d)).amax() <= 1e-10);

        // orthonormal design, exact response, small penalty: the pilot is not
        // exact, but the correction restores β₀ exactly
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| vec![if i % 2 == 0 { 1.0 } else { -1.0 }, if i < 2 { 1.0 } else { -1.0 }])
            .collect();
        let beta0 = DVector::from_vec(vec![1.0, -0.5]);
        let x = DMatrix::from_fn(4, 2, |i, j| rows[i][j]);
        let d = Dataset::new(x.clone(), &x * &beta0).unwrap();
        let theta = direct_inverse(&d).unwrap();
        let est = debiased_lasso(&d, &theta, &LassoConfig::new(0.2)).unwrap();
        assert!((est.0 - beta0).amax() < 1e-12);
    }

    #[test]
    fn sandwich_variance_cases() {
        let d = random_data(30, 3, 70);
        let theta = direct_inverse(&d).unwrap();
        // constant |residual| = σ
        let sigma = 1.7;
        let d_const = Dataset::new(
            d.design().clone(),
            DVector::from_fn(30, |i, _| if i % 2 == 0 { sigma } else { -sigma }),
        )
        .unwrap();
        let var = estimate_sandwich_variance(&d_const, &theta, &CoefficientVector::zeros(3)).unwrap();
        for j in 0..3 {
            assert_abs_diff_eq!(var[j], sigma * sigma * theta.theta[(j, j)], epsilon = 1e-10);
        }
        let exact = Dataset::new(d.design().clone(), DVector::zeros(30)).unwrap();
        let zero = estimate_sandwich_variance(&exact, &theta, &CoefficientVector::zeros(3)).unwrap();
        assert!(zero.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn quantile_intervals() {
        let set = |draws: DMatrix<f64>| DebiasedDrawSet {
            draws,
            source_prior: PriorTag::SpikeSlabVb,
            precision_method: PrecisionMethod::Nodewise,
            center_estimate: None,
            seed: 0,
        };
        let flat = set(DMatrix::from_element(10, 1, 2.5));
        let ci = credible_interval(&flat, 0, 0.05).unwrap();
        assert_eq!((ci.lower, ci.upper), (2.5, 2.5));

        let mut rng = rng::stream(71, &[]);
        let normal = set(DMatrix::from_fn(8_000, 1, |_, _| rng.sample::<f64, _>(StandardNormal)));
        let ci = normal.credible_interval(0, 0.05).unwrap();
        assert!((ci.lower + 1.96).abs() <= 0.08 && (ci.upper - 1.96).abs() <= 0.08);
        let col: Vec<f64> = normal.draws.column(0).iter().copied().collect();
        let ci = normal.credible_interval(0, 0.5).unwrap();
        assert_eq!(ci.lower, stats::quantile(&col, 0.25));
        assert_eq!(ci.upper, stats::quantile(&col, 0.75));
        assert!(ci.contains(stats::quantile(&col, 0.5)));

        assert!(set(DMatrix::zeros(1, 1)).credible_interval(0, 0.05).is_err());
    }

    #[test]
    fn normal_interval_width() {
        let ci = normal_interval(1.0, 4.0, 100, 0, 0.95).unwrap();
        assert_abs_diff_eq!(ci.upper - 1.0, 1.959_963_984_540_054 * 0.2, epsilon = 1e-12);
        assert!(normal_interval(0.0, 1.0, 10, 0, 1.0).is_err());
    }
}
