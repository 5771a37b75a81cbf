//! Gibbs sampler for the horseshoe posterior.
//!
//! The hierarchy is
//!
//! ```text
//! y | β, σ   ~ N(Xβ, σ² I)
//! βⱼ | λⱼ    ~ N(0, λⱼ²)
//! λⱼ | τ     ~ C⁺(0, τ)
//! τ  | σ     ~ C⁺(0, σ)
//! σ          ~ C⁺(0, sigma_scale)
//! ```
//!
//! Every half-Cauchy is written as a pair of inverse-gamma variables
//! (`a ~ C⁺(0, A)` iff `a² | ν ~ IG(½, 1/ν)`, `ν ~ IG(½, 1/A²)`), which makes
//! each full conditional standard:
//!
//! ```text
//! λⱼ² | ·  ~ IG(1, 1/νⱼ + βⱼ²/2)
//! νⱼ  | ·  ~ IG(1, 1/τ² + 1/λⱼ²)
//! τ²  | ·  ~ IG((p + 1)/2, 1/ξ + Σⱼ 1/νⱼ)
//! ξ   | ·  ~ IG(1, 1/σ² + 1/τ²)
//! σ²  | ·  ~ IG(n/2 + 1, ‖y − Xβ‖²/2 + 1/ξ + 1/ζ)
//! ζ   | ·  ~ IG(1, 1/sigma_scale² + 1/σ²)
//! β   | ·  ~ N(A⁻¹Xᵀy/σ², A⁻¹),  A = XᵀX/σ² + diag(λ)⁻²
//! ```
//!
//! The β block is drawn through the rescaled precision
//! `D^½ XᵀX D^½ / σ² + I` (`D = diag(λ²)`) when `p ≤ n` and with the
//! `n`-dimensional solve of Bhattacharya, Chakraborty and Mallick when `p > n`.

use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Cauchy, Distribution, Gamma, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::draws::{PosteriorDrawSet, PriorTag};
use crate::error::{Error, Result};
use crate::linalg;
use crate::rng::{self, tag};
use crate::stats;

const JITTER: f64 = 1e-10;
const SCALE_FLOOR: f64 = 1e-150;
const SCALE_CEIL: f64 = 1e150;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorseshoeConfig {
    /// Retained draws.
    pub n_draws: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Scale of the half-Cauchy prior on σ.
    pub sigma_scale: f64,
    /// Hold the noise standard deviation fixed instead of sampling it.
    pub fixed_sigma: Option<f64>,
}

impl Default for HorseshoeConfig {
    fn default() -> Self {
        Self {
            n_draws: 8_000,
            burn_in: 8_000,
            seed: 0,
            sigma_scale: 10.0,
            fixed_sigma: None,
        }
    }
}

impl HorseshoeConfig {
    fn validate(&self) -> Result<()> {
        if self.n_draws == 0 {
            return Err(Error::invalid("horseshoe sampler needs n_draws >= 1"));
        }
        if !(self.sigma_scale > 0.0) || !self.sigma_scale.is_finite() {
            return Err(Error::invalid("sigma_scale must be positive"));
        }
        if let Some(s) = self.fixed_sigma {
            if !(s > 0.0) || !s.is_finite() {
                return Err(Error::invalid("fixed sigma must be positive"));
            }
        }
        Ok(())
    }
}

/// One chain with its scale traces.
#[derive(Debug, Clone)]
pub struct HorseshoeChain {
    pub draws: PosteriorDrawSet,
    /// Global scale τ per retained iteration.
    pub tau: Vec<f64>,
    /// Noise standard deviation σ per retained iteration.
    pub sigma: Vec<f64>,
    /// Smallest local scale λⱼ seen over the retained iterations.
    pub min_local_scale: f64,
    /// Number of β updates that needed diagonal jitter.
    pub jitter_events: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HorseshoeDiagnostics {
    pub chains: usize,
    pub n_draws: usize,
    pub burn_in: usize,
    /// Split-chain potential scale reduction per coefficient.
    pub rhat: Vec<f64>,
    pub max_rhat: f64,
    pub jitter_events: usize,
    pub min_local_scale: f64,
    pub min_tau: f64,
    pub min_sigma: f64,
}

impl HorseshoeDiagnostics {
    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        crate::data::write_json(path, self)
    }
}

/// Draws from `IG(shape, rate)`.
fn inv_gamma(rng: &mut ChaCha8Rng, shape: f64, rate: f64) -> f64 {
    let g: f64 = Gamma::new(shape, 1.0).expect("positive shape").sample(rng);
    (rate / g).clamp(SCALE_FLOOR, SCALE_CEIL)
}

fn std_normal_vec(rng: &mut ChaCha8Rng, len: usize) -> DVector<f64> {
    DVector::from_fn(len, |_, _| rng.sample(StandardNormal))
}

struct Sufficient {
    x: DMatrix<f64>,
    y: DVector<f64>,
    gram: DMatrix<f64>,
    xty: DVector<f64>,
}

/// Joint draw of β given the scales. Returns whether jitter was needed.
fn draw_beta(
    s: &Sufficient,
    lambda2: &DVector<f64>,
    sigma2: f64,
    rng: &mut ChaCha8Rng,
) -> Result<(DVector<f64>, bool)> {
    let (n, p) = s.x.shape();
    let d_half = lambda2.map(f64::sqrt);
    if p <= n {
        let mut m = DMatrix::from_fn(p, p, |i, j| d_half[i] * s.gram[(i, j)] * d_half[j] / sigma2);
        for i in 0..p {
            m[(i, i)] += 1.0;
        }
        let (chol, escalations) =
            linalg::cholesky_with_jitter(&m, JITTER).ok_or_else(|| Error::numerical("β conditional precision is singular"))?;
        let rhs = d_half.component_mul(&s.xty) / sigma2;
        let mean = chol.solve(&rhs);
        let z = std_normal_vec(rng, p);
        let dev = chol.l().transpose().solve_upper_triangular(&z).expect("triangular factor is invertible");
        Ok(((mean + dev).component_mul(&d_half), escalations > 0))
    } else {
        let sigma = sigma2.sqrt();
        let u = std_normal_vec(rng, p).component_mul(&d_half);
        let delta = std_normal_vec(rng, n);
        let phi = &s.x / sigma;
        let v = &phi * &u + delta;
        let phi_d = DMatrix::from_fn(n, p, |i, j| phi[(i, j)] * lambda2[j]);
        let mut k = &phi_d * phi.transpose();
        for i in 0..n {
            k[(i, i)] += 1.0;
        }
        let (chol, escalations) =
            linalg::cholesky_with_jitter(&k, JITTER).ok_or_else(|| Error::numerical("β update system is singular"))?;
        let w = chol.solve(&(&s.y / sigma - v));
        Ok((u + phi_d.tr_mul(&w), escalations > 0))
    }
}

/// Runs one chain from its own random stream `(seed, c)`.
fn run_chain(d: &Dataset, cfg: &HorseshoeConfig, stream: &[u64]) -> Result<HorseshoeChain> {
    let mut rng = rng::stream(cfg.seed, stream);
    let (n, p) = (d.n(), d.p());
    let s = Sufficient {
        x: d.design().clone(),
        y: d.response().clone(),
        gram: d.design().tr_mul(d.design()),
        xty: d.design().tr_mul(d.response()),
    };
    let a2_inv = 1.0 / (cfg.sigma_scale * cfg.sigma_scale);

    let mut lambda2 = DVector::from_element(p, 1.0);
    let mut nu = DVector::from_element(p, 1.0);
    let mut tau2 = 1.0;
    let mut xi = 1.0;
    let mut sigma2 = match cfg.fixed_sigma {
        Some(sd) => sd * sd,
        None => {
            let v = stats::variance(d.response().as_slice());
            if v > 0.0 {
                v
            } else {
                1.0
            }
        }
    };
    let mut zeta = 1.0;

    let total = cfg.burn_in + cfg.n_draws;
    let mut out = DMatrix::zeros(cfg.n_draws, p);
    let mut tau_trace = Vec::with_capacity(cfg.n_draws);
    let mut sigma_trace = Vec::with_capacity(cfg.n_draws);
    let mut min_local = f64::INFINITY;
    let mut jitter_events = 0;

    for it in 0..total {
        let (beta, jittered) = draw_beta(&s, &lambda2, sigma2, &mut rng)?;
        if jittered {
            jitter_events += 1;
            log::debug!("jitter added to the β update at iteration {it}");
        }
        for j in 0..p {
            lambda2[j] = inv_gamma(&mut rng, 1.0, 1.0 / nu[j] + 0.5 * beta[j] * beta[j]);
            nu[j] = inv_gamma(&mut rng, 1.0, 1.0 / tau2 + 1.0 / lambda2[j]);
        }
        let inv_nu_sum: f64 = nu.iter().map(|v| 1.0 / v).sum();
        tau2 = inv_gamma(&mut rng, 0.5 * (p as f64 + 1.0), 1.0 / xi + inv_nu_sum);
        xi = inv_gamma(&mut rng, 1.0, 1.0 / sigma2 + 1.0 / tau2);
        if cfg.fixed_sigma.is_none() {
            let rss = (&s.y - &s.x * &beta).norm_squared();
            sigma2 = inv_gamma(&mut rng, 0.5 * n as f64 + 1.0, 0.5 * rss + 1.0 / xi + 1.0 / zeta);
            zeta = inv_gamma(&mut rng, 1.0, a2_inv + 1.0 / sigma2);
        }
        if beta.iter().any(|v| !v.is_finite()) || !tau2.is_finite() || !sigma2.is_finite() {
            return Err(Error::numerical(format!(
                "horseshoe chain produced a non-finite state at iteration {it} (tau2 = {tau2}, sigma2 = {sigma2})"
            )));
        }
        if it >= cfg.burn_in {
            let r = it - cfg.burn_in;
            out.row_mut(r).copy_from(&beta.transpose());
            tau_trace.push(tau2.sqrt());
            sigma_trace.push(sigma2.sqrt());
            min_local = lambda2.iter().fold(min_local, |m, v| m.min(v.sqrt()));
        }
    }
    if jitter_events > 0 {
        log::warn!("β updates needed jitter {jitter_events} times");
    }
    Ok(HorseshoeChain {
        draws: PosteriorDrawSet::new(out, PriorTag::HorseshoeMcmc, cfg.seed)?,
        tau: tau_trace,
        sigma: sigma_trace,
        min_local_scale: min_local,
        jitter_events,
    })
}

/// Runs a single chain and returns it with its scale traces.
pub fn sample_horseshoe_chain(d: &Dataset, cfg: &HorseshoeConfig) -> Result<HorseshoeChain> {
    cfg.validate()?;
    run_chain(d, cfg, &[tag::HORSESHOE])
}

/// `n_draws` retained draws from one Gibbs chain.
pub fn sample_horseshoe(d: &Dataset, cfg: &HorseshoeConfig) -> Result<PosteriorDrawSet> {
    Ok(sample_horseshoe_chain(d, cfg)?.draws)
}

/// Runs `chains` independent chains in parallel and computes split-chain
/// R-hat for every coefficient.
pub fn sample_horseshoe_chains(
    d: &Dataset,
    cfg: &HorseshoeConfig,
    chains: usize,
) -> Result<(Vec<HorseshoeChain>, HorseshoeDiagnostics)> {
    cfg.validate()?;
    if chains < 2 {
        return Err(Error::invalid("R-hat needs at least two chains"));
    }
    let runs: Vec<HorseshoeChain> = (0..chains)
        .into_par_iter()
        .map(|c| run_chain(d, cfg, &[tag::HORSESHOE, c as u64 + 1]))
        .collect::<Result<_>>()?;
    let rhat: Vec<f64> = (0..d.p())
        .map(|j| {
            let cols: Vec<Vec<f64>> = runs.iter().map(|r| r.draws.draws.column(j).iter().copied().collect()).collect();
            stats::split_rhat(&cols)
        })
        .collect();
    let diag = HorseshoeDiagnostics {
        chains,
        n_draws: cfg.n_draws,
        burn_in: cfg.burn_in,
        max_rhat: rhat.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        rhat,
        jitter_events: runs.iter().map(|r| r.jitter_events).sum(),
        min_local_scale: runs.iter().map(|r| r.min_local_scale).fold(f64::INFINITY, f64::min),
        min_tau: runs.iter().flat_map(|r| r.tau.iter().copied()).fold(f64::INFINITY, f64::min),
        min_sigma: runs.iter().flat_map(|r| r.sigma.iter().copied()).fold(f64::INFINITY, f64::min),
    };
    Ok((runs, diag))
}

/// Ancestral draws of a single coefficient from the prior alone.
pub fn sample_horseshoe_prior(n_draws: usize, sigma_scale: f64, seed: u64) -> Result<Vec<f64>> {
    if !(sigma_scale > 0.0) {
        return Err(Error::invalid("sigma_scale must be positive"));
    }
    let mut rng = rng::stream(seed, &[tag::HORSESHOE, u64::MAX]);
    let cauchy: Cauchy<f64> = Cauchy::new(0.0, 1.0).expect("unit Cauchy");
    let half = |rng: &mut ChaCha8Rng| -> f64 { cauchy.sample(rng).abs() };
    Ok((0..n_draws)
        .map(|_| {
            let sigma = sigma_scale * half(&mut rng);
            let tau = sigma * half(&mut rng);
            let lambda = tau * half(&mut rng);
            let z: f64 = rng.sample(StandardNormal);
            lambda * z
        })
        .collect())
}
