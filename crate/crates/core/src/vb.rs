//! Mean-field variational Bayes for the spike-and-slab prior.
//!
//! The prior on each coefficient is `(1 − r)·δ₀ + r·Laplace(λ)` and the
//! variational family is the product of `γⱼ·N(μⱼ, σⱼ²) + (1 − γⱼ)·δ₀`.
//! Coordinate ascent maximizes the evidence lower bound one coefficient at a
//! time. Writing `G = XᵀX`, `b = Xᵀy`, `v` for the noise variance and
//! `cⱼ = Σ_{k≠j} Gⱼₖ γₖ μₖ`, the part of the bound that depends on
//! `(μⱼ, σⱼ)` given inclusion is
//!
//! ```text
//! h(μ, s) = (bⱼ − cⱼ) μ / v − Gⱼⱼ (μ² + s²) / (2v) − λ E|N(μ, s²)| + log s
//! ```
//!
//! which is strictly concave, and the inclusion probability is the logistic
//! transform of
//!
//! ```text
//! Γⱼ = log(r / (1 − r)) + log(λ / 2) + ½ log(2πe) + max h.
//! ```
//!
//! The stationarity conditions of `h` are
//!
//! ```text
//! ∂μ:  (bⱼ − cⱼ)/v − Gⱼⱼ μ / v − λ erf(μ / (s√2))           = 0
//! ∂s:  σⱼ² = v / (Gⱼⱼ + 2λ v φ(μ/s) / s)      (φ the normal density)
//! ```
//!
//! each a monotone scalar equation, solved by safeguarded Newton inside a
//! bracket; the two are alternated until the pair stops moving. Each
//! coordinate step is therefore an exact block maximization and the bound is
//! non-decreasing from sweep to sweep.
//!
//! The mixing weight `r` carries a `Beta(1, pᵘ)` hyper-prior; it enters
//! through the fixed log-odds of its mean, `log(r / (1 − r)) = −u log p`.

use std::f64::consts::{E, PI};
use std::path::Path;

use nalgebra::{Cholesky, DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::erf::erf;

use crate::data::{gram_matrix, Dataset};
use crate::draws::{PosteriorDrawSet, PriorTag};
use crate::error::{Error, Result};
use crate::lasso::{default_penalty, fit_lasso, LassoConfig};
use crate::rng::{self, tag};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const ELBO_SLACK: f64 = 1e-8;

/// How the noise variance of the likelihood is set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseVariance {
    Fixed(f64),
    /// `RSS / (n − ŝ)` of a LASSO fit at `ρ = 2·sqrt(log p / n)`.
    LassoPlugIn,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpikeSlabPrior {
    /// Rate λ of the Laplace slab.
    pub slab_lambda: f64,
    /// Exponent of the `Beta(1, pᵘ)` hyper-prior on the mixing weight.
    pub u: f64,
    pub noise_variance: NoiseVariance,
}

impl Default for SpikeSlabPrior {
    fn default() -> Self {
        Self {
            slab_lambda: 1.0,
            u: 1.0,
            noise_variance: NoiseVariance::LassoPlugIn,
        }
    }
}

impl SpikeSlabPrior {
    fn validate(&self) -> Result<()> {
        if !(self.slab_lambda > 0.0) {
            return Err(Error::invalid("slab_lambda must be positive"));
        }
        if !(self.u > 0.0) {
            return Err(Error::invalid("hyper-prior exponent u must be positive"));
        }
        if let NoiseVariance::Fixed(v) = self.noise_variance {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::invalid("noise variance must be positive"));
            }
        }
        Ok(())
    }

    /// `log(r / (1 − r))` at the hyper-prior mean `r = 1 / (1 + pᵘ)`.
    pub fn prior_log_odds(&self, p: usize) -> f64 {
        -self.u * (p as f64).ln()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum VbInit {
    /// `μ = (XᵀX + I)⁻¹Xᵀy`, `σⱼ² = v / Gⱼⱼ`, `γⱼ = ½`.
    Ridge,
    Given {
        mu: Vec<f64>,
        sigma2: Vec<f64>,
        gamma: Vec<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct VbConfig {
    pub max_sweeps: usize,
    /// Stop when the largest change of any `μⱼ` or `γⱼ` in a sweep is below this.
    pub tolerance: f64,
    pub init: VbInit,
    /// Coordinate visiting order; defaults to `0..p`.
    pub update_order: Option<Vec<usize>>,
}

impl Default for VbConfig {
    fn default() -> Self {
        Self {
            max_sweeps: 500,
            tolerance: 1e-6,
            init: VbInit::Ridge,
            update_order: None,
        }
    }
}

/// Parameters of the fitted mean-field posterior.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VariationalState {
    pub mu: Vec<f64>,
    pub sigma2: Vec<f64>,
    /// Inclusion probabilities.
    pub gamma: Vec<f64>,
    /// Evidence lower bound at the initial point and after every sweep.
    pub elbo_trace: Vec<f64>,
    /// Noise variance the likelihood was fitted with.
    pub noise_variance: f64,
    pub sweeps: usize,
    pub converged: bool,
}

impl VariationalState {
    pub fn p(&self) -> usize {
        self.mu.len()
    }

    /// Posterior mean `γⱼ μⱼ`.
    pub fn posterior_mean(&self) -> DVector<f64> {
        DVector::from_iterator(self.p(), self.gamma.iter().zip(&self.mu).map(|(g, m)| g * m))
    }

    /// Posterior variance `γⱼ(σⱼ² + μⱼ²) − (γⱼμⱼ)²`.
    pub fn posterior_variance(&self) -> DVector<f64> {
        DVector::from_fn(self.p(), |j, _| {
            let m = self.gamma[j] * self.mu[j];
            self.gamma[j] * (self.sigma2[j] + self.mu[j].powi(2)) - m * m
        })
    }

    /// `B` independent draws; see [`sample_vb`].
    pub fn sample(&self, n_draws: usize, seed: u64) -> PosteriorDrawSet {
        sample_vb(self, n_draws, seed)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::data::write_json(path, self)
    }
}

/// Sufficient statistics shared by the coordinate updates and the bound.
struct Problem {
    gram: DMatrix<f64>,
    xty: DVector<f64>,
    yty: f64,
    n: usize,
    noise: f64,
    lambda: f64,
    log_odds: f64,
}

impl Problem {
    /// The constant part of `Γⱼ`.
    fn inclusion_offset(&self) -> f64 {
        self.log_odds + (self.lambda / 2.0).ln() + 0.5 * (2.0 * PI * E).ln()
    }
}

/// `E|Z|` for `Z ~ N(μ, s²)`.
fn folded_mean(mu: f64, s: f64) -> f64 {
    let z = mu / s;
    s * SQRT_2_OVER_PI * (-0.5 * z * z).exp() + mu * erf(z / std::f64::consts::SQRT_2)
}

/// Concave objective of one coordinate given inclusion.
fn coordinate_objective(lin: f64, quad: f64, lambda: f64, mu: f64, s: f64) -> f64 {
    lin * mu - 0.5 * quad * (mu * mu + s * s) - lambda * folded_mean(mu, s) + s.ln()
}

/// Root of a strictly decreasing function with derivative, by Newton steps
/// kept inside an expanding-then-shrinking bracket.
fn decreasing_root(f: impl Fn(f64) -> (f64, f64), guess: f64, lower_limit: f64) -> f64 {
    let mut lo = guess;
    let mut hi = guess;
    let mut step = guess.abs().max(1.0);
    // find lo with f(lo) ≥ 0 and hi with f(hi) ≤ 0
    while f(lo).0 < 0.0 {
        lo = (lo - step).max(lower_limit);
        step *= 2.0;
        if lo == lower_limit {
            if f(lo).0 < 0.0 {
                // only reachable for the scale equation at a degenerate limit
                return lower_limit;
            }
            break;
        }
    }
    step = guess.abs().max(1.0);
    while f(hi).0 > 0.0 {
        hi += step;
        step *= 2.0;
        if !hi.is_finite() {
            return hi;
        }
    }
    let mut x = guess.clamp(lo, hi);
    for _ in 0..200 {
        let (fx, dfx) = f(x);
        if fx == 0.0 {
            return x;
        }
        if fx > 0.0 {
            lo = x;
        } else {
            hi = x;
        }
        let newton = x - fx / dfx;
        let next = if newton > lo && newton < hi && dfx < 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) || hi - lo <= 1e-15 * (1.0 + x.abs()) {
            return next;
        }
        x = next;
    }
    x
}

/// Maximizes `h(μ, s)` by alternating the two stationarity equations.
fn maximize_coordinate(lin: f64, quad: f64, lambda: f64, mu0: f64, s0: f64) -> (f64, f64) {
    let mut mu = mu0;
    let mut s = s0;
    for _ in 0..500 {
        let mu_new = decreasing_root(
            |m| {
                let z = m / s;
                let g = lin - quad * m - lambda * erf(z / std::f64::consts::SQRT_2);
                let dg = -quad - lambda * SQRT_2_OVER_PI * (-0.5 * z * z).exp() / s;
                (g, dg)
            },
            mu,
            f64::NEG_INFINITY,
        );
        let s_new = decreasing_root(
            |t| {
                let z = mu_new / t;
                let k = SQRT_2_OVER_PI * (-0.5 * z * z).exp();
                let g = 1.0 / t - quad * t - lambda * k;
                let dg = -1.0 / (t * t) - quad - lambda * k * z * z / t;
                (g, dg)
            },
            s,
            f64::MIN_POSITIVE,
        );
        let done = (mu_new - mu).abs() <= 1e-13 * (1.0 + mu.abs()) && (s_new - s).abs() <= 1e-13 * s;
        mu = mu_new;
        s = s_new;
        if done {
            break;
        }
    }
    (mu, s)
}

fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn xlogx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Evidence lower bound of the current state.
fn elbo(pb: &Problem, mu: &[f64], s: &[f64], gamma: &[f64]) -> f64 {
    let p = mu.len();
    let m = DVector::from_fn(p, |j, _| gamma[j] * mu[j]);
    let gm = &pb.gram * &m;
    let mut expected_rss = pb.yty - 2.0 * pb.xty.dot(&m) + m.dot(&gm);
    let mut prior_and_entropy = 0.0;
    let log_r = -(1.0 + (-pb.log_odds).exp()).ln();
    let log_1mr = -(1.0 + pb.log_odds.exp()).ln();
    for j in 0..p {
        let gjj = pb.gram[(j, j)];
        expected_rss += gjj * (gamma[j] * (mu[j] * mu[j] + s[j] * s[j]) - m[j] * m[j]);
        let slab = log_r + (pb.lambda / 2.0).ln() - pb.lambda * folded_mean(mu[j], s[j])
            + 0.5 * (2.0 * PI * E * s[j] * s[j]).ln();
        prior_and_entropy += gamma[j] * slab + (1.0 - gamma[j]) * log_1mr - xlogx(gamma[j]) - xlogx(1.0 - gamma[j]);
    }
    -0.5 * pb.n as f64 * (2.0 * PI * pb.noise).ln() - expected_rss / (2.0 * pb.noise) + prior_and_entropy
}

/// Noise variance from the residuals of a LASSO pilot.
pub fn lasso_noise_variance(d: &Dataset) -> Result<f64> {
    let rho = default_penalty(d.n(), d.p(), 2.0)?;
    let fit = fit_lasso(d, &LassoConfig::new(rho))?;
    let rss = d.residuals(&fit.coefficients.0).norm_squared();
    let dof = d.n().saturating_sub(fit.coefficients.support_size()).max(1);
    let v = rss / dof as f64;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        log::warn!("LASSO residual variance is {v}; falling back to unit noise variance");
        Ok(1.0)
    }
}

/// Fits the mean-field variational posterior by coordinate ascent.
pub fn fit_vb(d: &Dataset, prior: &SpikeSlabPrior, cfg: &VbConfig) -> Result<VariationalState> {
    prior.validate()?;
    if cfg.max_sweeps == 0 || !(cfg.tolerance > 0.0) {
        return Err(Error::invalid("VB needs max_sweeps >= 1 and tolerance > 0"));
    }
    let p = d.p();
    let n = d.n();
    let order: Vec<usize> = match &cfg.update_order {
        Some(o) => {
            let mut seen = vec![false; p];
            if o.len() != p || o.iter().any(|&j| j >= p || std::mem::replace(&mut seen[j], true)) {
                return Err(Error::invalid("update_order must be a permutation of 0..p"));
            }
            o.clone()
        }
        None => (0..p).collect(),
    };
    let noise = match prior.noise_variance {
        NoiseVariance::Fixed(v) => v,
        NoiseVariance::LassoPlugIn => lasso_noise_variance(d)?,
    };
    let pb = Problem {
        gram: gram_matrix(d) * n as f64,
        xty: d.design().tr_mul(d.response()),
        yty: d.response().norm_squared(),
        n,
        noise,
        lambda: prior.slab_lambda,
        log_odds: prior.prior_log_odds(p),
    };

    let (mut mu, mut s, mut gamma) = initial_state(&pb, &cfg.init, p)?;
    let offset = pb.inclusion_offset();
    let mut gm = &pb.gram * DVector::from_fn(p, |j, _| gamma[j] * mu[j]);
    let mut trace = vec![elbo(&pb, &mu, &s, &gamma)];
    let mut converged = false;
    let mut sweeps = 0;

    while sweeps < cfg.max_sweeps {
        sweeps += 1;
        let mut max_change = 0.0_f64;
        for &j in &order {
            let gjj = pb.gram[(j, j)];
            let m_old = gamma[j] * mu[j];
            let c = gm[j] - gjj * m_old;
            let lin = (pb.xty[j] - c) / pb.noise;
            let quad = gjj / pb.noise;
            let (mu_j, s_j) = maximize_coordinate(lin, quad, pb.lambda, mu[j], s[j]);
            let gamma_j = logistic(offset + coordinate_objective(lin, quad, pb.lambda, mu_j, s_j));
            max_change = max_change.max((mu_j - mu[j]).abs()).max((gamma_j - gamma[j]).abs());
            mu[j] = mu_j;
            s[j] = s_j;
            gamma[j] = gamma_j;
            let delta = gamma_j * mu_j - m_old;
            if delta != 0.0 {
                gm.axpy(delta, &pb.gram.column(j), 1.0);
            }
        }
        let value = elbo(&pb, &mu, &s, &gamma);
        let prev = *trace.last().expect("trace starts non-empty");
        if value < prev - ELBO_SLACK * (1.0 + prev.abs() * 1e-4) {
            let msg = format!("ELBO decreased from {prev} to {value} in sweep {sweeps}");
            if cfg!(debug_assertions) {
                return Err(Error::numerical(msg));
            }
            log::warn!("{msg}");
        }
        trace.push(value);
        if max_change < cfg.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        log::warn!("variational Bayes did not converge in {sweeps} sweeps");
    }
    Ok(VariationalState {
        mu,
        sigma2: s.iter().map(|v| v * v).collect(),
        gamma,
        elbo_trace: trace,
        noise_variance: noise,
        sweeps,
        converged,
    })
}

fn initial_state(pb: &Problem, init: &VbInit, p: usize) -> Result<(Vec<f64>, Vec<f64>, Vec<f64>)> {
    let scale_from_gram = |j: usize| {
        let g = pb.gram[(j, j)];
        if g > 0.0 {
            (pb.noise / g).sqrt()
        } else {
            1.0 / pb.lambda
        }
    };
    match init {
        VbInit::Ridge => {
            let mut a = pb.gram.clone();
            for j in 0..p {
                a[(j, j)] += 1.0;
            }
            let chol = Cholesky::new(a).ok_or_else(|| Error::numerical("ridge initialization failed"))?;
            let mu = chol.solve(&pb.xty);
            Ok((mu.iter().copied().collect(), (0..p).map(scale_from_gram).collect(), vec![0.5; p]))
        }
        VbInit::Given { mu, sigma2, gamma } => {
            if mu.len() != p || sigma2.len() != p || gamma.len() != p {
                return Err(Error::DimensionMismatch {
                    what: "VB initial state",
                    expected: p,
                    got: mu.len().min(sigma2.len()).min(gamma.len()),
                });
            }
            if sigma2.iter().any(|v| !(*v > 0.0)) || gamma.iter().any(|g| !(0.0..=1.0).contains(g)) {
                return Err(Error::invalid("initial sigma2 must be positive and gamma in [0, 1]"));
            }
            Ok((mu.clone(), sigma2.iter().map(|v| v.sqrt()).collect(), gamma.clone()))
        }
    }
}

const SAMPLE_CHUNK: usize = 256;

/// Draws `n_draws` vectors from the variational posterior: coordinate `j` is
/// zero with probability `1 − γⱼ` and `N(μⱼ, σⱼ²)` otherwise. Draw `b` uses its
/// own random stream, so the result does not depend on the thread count.
pub fn sample_vb(state: &VariationalState, n_draws: usize, seed: u64) -> PosteriorDrawSet {
    let p = state.p();
    let sd: Vec<f64> = state.sigma2.iter().map(|v| v.sqrt()).collect();
    let chunks: Vec<Vec<f64>> = (0..n_draws.div_ceil(SAMPLE_CHUNK))
        .into_par_iter()
        .map(|c| {
            let start = c * SAMPLE_CHUNK;
            let end = (start + SAMPLE_CHUNK).min(n_draws);
            let mut out = Vec::with_capacity((end - start) * p);
            for b in start..end {
                let mut rng = rng::stream(seed, &[tag::VB_DRAWS, b as u64]);
                for j in 0..p {
                    let u: f64 = rng.random();
                    let z: f64 = rng.sample(StandardNormal);
                    out.push(if u < state.gamma[j] { state.mu[j] + sd[j] * z } else { 0.0 });
                }
            }
            out
        })
        .collect();
    let flat: Vec<f64> = chunks.concat();
    let draws = DMatrix::from_row_slice(n_draws, p, &flat);
    PosteriorDrawSet {
        draws,
        prior_tag: PriorTag::SpikeSlabVb,
        debiased: false,
        seed,
    }
}
