//! Monte Carlo study comparing standard Bayes, debiased Bayes and the
//! debiased LASSO.
//!
//! Covariates are drawn from `N(0, Θ₀⁻¹)` with either `Θ₀ = diag(1, …, p)`
//! (S1–S3) or the tridiagonal `Θ₀` with unit diagonal and `0.5` next to it
//! (S4–S6). The first five coefficients are `(0.25, 0.5, 0.75, 1, 2)` and the
//! rest are zero. Errors are standard normal (S1, S4), centred `χ²(3)`
//! (S2, S5), or `(1 + |X₁|)·N(0, 1)` (S3, S6).
//!
//! Results are reported per coefficient group: group 0 pools all zero
//! coefficients, groups 1–5 are the nonzero ones in increasing order.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{CoefficientVector, Dataset};
use crate::debias::{debiased_lasso_with_pilot, estimate_sandwich_variance, normal_interval, run_algorithm1};
use crate::draws::{PosteriorDrawSet, PriorTag};
use crate::error::{Error, Result};
use crate::horseshoe::{sample_horseshoe, HorseshoeConfig};
use crate::lasso::{default_penalty, LassoConfig};
use crate::precision::{default_nodewise_penalties, nodewise_lasso};
use crate::rng::{self, tag};
use crate::vb::{fit_vb, SpikeSlabPrior, VbConfig};

/// Nonzero coefficients shared by every scenario.
pub const SIGNAL: [f64; 5] = [0.25, 0.5, 0.75, 1.0, 2.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioId {
    S1,
    S2,
    S3,
    S4,
    S5,
    S6,
}

impl ScenarioId {
    pub const ALL: [ScenarioId; 6] = [Self::S1, Self::S2, Self::S3, Self::S4, Self::S5, Self::S6];

    pub fn precision_truth(self) -> PrecisionTruth {
        match self {
            Self::S1 | Self::S2 | Self::S3 => PrecisionTruth::Diagonal,
            _ => PrecisionTruth::BandedHalf,
        }
    }

    pub fn error_model(self) -> ErrorModel {
        match self {
            Self::S1 | Self::S4 => ErrorModel::GaussUnit,
            Self::S2 | Self::S5 => ErrorModel::Chi2Centered,
            Self::S3 | Self::S6 => ErrorModel::HeteroAbsX1,
        }
    }
}

impl std::fmt::Display for ScenarioId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

impl std::str::FromStr for ScenarioId {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|id| id.to_string().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::invalid(format!("unknown scenario {s:?} (valid: S1, S2, S3, S4, S5, S6)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PrecisionTruth {
    /// `Θ₀ = diag(1, 2, …, p)`.
    Diagonal,
    /// Tridiagonal `Θ₀` with unit diagonal and off-diagonal `0.5`.
    BandedHalf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorModel {
    GaussUnit,
    Chi2Centered,
    HeteroAbsX1,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SimulationScenario {
    pub id: ScenarioId,
    pub n: usize,
    pub p: usize,
    pub beta0: Vec<f64>,
    pub precision_truth: PrecisionTruth,
    pub error_model: ErrorModel,
}

impl SimulationScenario {
    pub fn new(id: ScenarioId, n: usize, p: usize) -> Self {
        let beta0 = (0..p).map(|j| SIGNAL.get(j).copied().unwrap_or(0.0)).collect();
        Self {
            id,
            n,
            p,
            beta0,
            precision_truth: id.precision_truth(),
            error_model: id.error_model(),
        }
    }

    pub fn beta0(&self) -> CoefficientVector {
        CoefficientVector::from_slice(&self.beta0)
    }

    /// The true precision matrix `Θ₀`.
    pub fn precision_matrix(&self) -> DMatrix<f64> {
        let p = self.p;
        match self.precision_truth {
            PrecisionTruth::Diagonal => DMatrix::from_fn(p, p, |i, j| if i == j { (i + 1) as f64 } else { 0.0 }),
            PrecisionTruth::BandedHalf => DMatrix::from_fn(p, p, |i, j| match i.abs_diff(j) {
                0 => 1.0,
                1 => 0.5,
                _ => 0.0,
            }),
        }
    }

    /// Coefficient group of every index: 0 for zeros, `k` for the `k`-th
    /// smallest nonzero.
    pub fn groups(&self) -> Vec<u8> {
        let mut nonzero: Vec<usize> = (0..self.p).filter(|&j| self.beta0[j] != 0.0).collect();
        nonzero.sort_by(|&a, &b| self.beta0[a].abs().total_cmp(&self.beta0[b].abs()));
        let mut g = vec![0u8; self.p];
        for (rank, j) in nonzero.into_iter().enumerate() {
            g[j] = rank as u8 + 1;
        }
        g
    }

    fn validate(&self) -> Result<()> {
        if self.n < 2 || self.p < 1 {
            return Err(Error::invalid("scenario needs n >= 2 and p >= 1"));
        }
        if self.beta0.len() != self.p {
            return Err(Error::DimensionMismatch {
                what: "beta0",
                expected: self.p,
                got: self.beta0.len(),
            });
        }
        Ok(())
    }

    /// One dataset from the scenario. `X = L⁻ᵀZ` row-wise with `Θ₀ = LLᵀ`.
    pub fn generate(&self, seed: u64) -> Result<Dataset> {
        self.validate()?;
        let (n, p) = (self.n, self.p);
        let mut rng = rng::stream(seed, &[tag::DATA]);
        let z = DMatrix::from_fn(n, p, |_, _| rng.sample::<f64, _>(StandardNormal));
        let x = match self.precision_truth {
            PrecisionTruth::Diagonal => DMatrix::from_fn(n, p, |i, j| z[(i, j)] / ((j + 1) as f64).sqrt()),
            PrecisionTruth::BandedHalf => {
                let chol = self
                    .precision_matrix()
                    .cholesky()
                    .ok_or_else(|| Error::numerical("banded precision matrix is not positive definite"))?;
                // rows xᵢ = L⁻ᵀzᵢ, i.e. Xᵀ = L⁻ᵀZᵀ
                let xt = chol.l().transpose().solve_upper_triangular(&z.transpose()).expect("invertible factor");
                xt.transpose()
            }
        };
        let beta0 = DVector::from_column_slice(&self.beta0);
        let chi2 = ChiSquared::new(3.0).expect("valid degrees of freedom");
        let eps = DVector::from_fn(n, |i, _| match self.error_model {
            ErrorModel::GaussUnit => rng.sample::<f64, _>(StandardNormal),
            ErrorModel::Chi2Centered => chi2.sample(&mut rng) - 3.0,
            ErrorModel::HeteroAbsX1 => (1.0 + x[(i, 0)].abs()) * rng.sample::<f64, _>(StandardNormal),
        });
        let y = &x * beta0 + eps;
        Dataset::new(x, y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Quantile intervals of the raw initial posterior.
    Bayes,
    /// Quantile intervals of the debiased posterior.
    DebiasedBayes,
    /// Debiased LASSO with sandwich standard errors.
    DebiasedLasso,
}

impl Method {
    pub const ALL: [Method; 3] = [Self::Bayes, Self::DebiasedBayes, Self::DebiasedLasso];

    pub fn name(self) -> &'static str {
        match self {
            Self::Bayes => "bayes",
            Self::DebiasedBayes => "debiased_bayes",
            Self::DebiasedLasso => "debiased_lasso",
        }
    }
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?} (valid: bayes, debiased_bayes, debiased_lasso)")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupMetrics {
    pub coverage: f64,
    pub bias: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsTable {
    pub method: Method,
    pub scenario: ScenarioId,
    pub n: usize,
    pub p: usize,
    pub per_group: BTreeMap<u8, GroupMetrics>,
    /// Replications that entered the averages.
    pub replications: usize,
    /// Replications dropped after a numerical failure.
    pub failed: usize,
    pub level: f64,
}

#[derive(Debug, Clone)]
pub struct StudyConfig {
    pub replications: usize,
    /// Posterior draws per replication.
    pub n_draws: usize,
    pub level: f64,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub prior: PriorTag,
    pub spike_slab: SpikeSlabPrior,
    pub vb: VbConfig,
    /// Burn-in and sigma scale for the horseshoe arm; `n_draws` and `seed`
    /// are taken from the study.
    pub horseshoe: HorseshoeConfig,
    /// Scale of the nodewise penalties.
    pub nodewise_scale: f64,
    /// Scale of the LASSO pilot penalty.
    pub lasso_scale: f64,
    /// Worker threads; `None` uses the global pool.
    pub parallelism: Option<usize>,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            replications: 200,
            n_draws: 8_000,
            level: 0.95,
            seed: 0,
            methods: Method::ALL.to_vec(),
            prior: PriorTag::SpikeSlabVb,
            spike_slab: SpikeSlabPrior::default(),
            vb: VbConfig::default(),
            horseshoe: HorseshoeConfig::default(),
            nodewise_scale: 1.0,
            lasso_scale: 2.0,
            parallelism: None,
        }
    }
}

impl StudyConfig {
    fn validate(&self) -> Result<()> {
        if self.replications == 0 {
            return Err(Error::invalid("replications must be >= 1"));
        }
        if self.n_draws < 2 {
            return Err(Error::invalid("need at least 2 posterior draws"));
        }
        if !(self.level > 0.0 && self.level < 1.0) {
            return Err(Error::invalid(format!("level must be in (0, 1), got {}", self.level)));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        if self.parallelism == Some(0) {
            return Err(Error::invalid("parallelism must be >= 1"));
        }
        Ok(())
    }
}

/// Stage words of the per-replication seeds.
mod stage {
    pub const DATA: u64 = 0;
    pub const VB_DRAWS: u64 = 1;
    pub const WEIGHTS: u64 = 2;
    pub const HORSESHOE: u64 = 3;
}

/// Per-coefficient outcome of one method in one replication.
/// Per-method outcomes of one replication.
type Replication = Vec<(Method, Vec<Outcome>)>;

#[derive(Debug, Clone, Copy)]
struct Outcome {
    covered: bool,
    error: f64,
}

fn initial_posterior(d: &Dataset, cfg: &StudyConfig, r: u64) -> Result<PosteriorDrawSet> {
    match cfg.prior {
        PriorTag::SpikeSlabVb => {
            let state = fit_vb(d, &cfg.spike_slab, &cfg.vb)?;
            Ok(state.sample(cfg.n_draws, rng::derive_seed(cfg.seed, &[tag::STUDY, r, stage::VB_DRAWS])))
        }
        PriorTag::HorseshoeMcmc => {
            let hs = HorseshoeConfig {
                n_draws: cfg.n_draws,
                seed: rng::derive_seed(cfg.seed, &[tag::STUDY, r, stage::HORSESHOE]),
                ..cfg.horseshoe.clone()
            };
            sample_horseshoe(d, &hs)
        }
    }
}

fn replicate(scn: &SimulationScenario, cfg: &StudyConfig, r: u64) -> Result<Replication> {
    let d = scn.generate(rng::derive_seed(cfg.seed, &[tag::STUDY, r, stage::DATA]))?;
    let alpha = 1.0 - cfg.level;
    let wants = |m: Method| cfg.methods.contains(&m);
    let initial = if wants(Method::Bayes) || wants(Method::DebiasedBayes) {
        Some(initial_posterior(&d, cfg, r)?)
    } else {
        None
    };
    let theta = if wants(Method::DebiasedBayes) || wants(Method::DebiasedLasso) {
        Some(nodewise_lasso(&d, &default_nodewise_penalties(d.n(), d.p(), cfg.nodewise_scale)?)?)
    } else {
        None
    };

    let mut out = Vec::new();
    for &m in Method::ALL.iter().filter(|m| wants(**m)) {
        let outcomes = match m {
            Method::Bayes => {
                let draws = initial.as_ref().expect("initial posterior computed");
                let means = draws.column_means();
                (0..d.p())
                    .map(|j| {
                        let ci = draws.credible_interval(j, alpha)?;
                        Ok(Outcome {
                            covered: ci.contains(scn.beta0[j]),
                            error: means[j] - scn.beta0[j],
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Method::DebiasedBayes => {
                let weights_seed = rng::derive_seed(cfg.seed, &[tag::STUDY, r, stage::WEIGHTS]);
                let debiased = run_algorithm1(
                    &d,
                    initial.as_ref().expect("initial posterior computed"),
                    theta.as_ref().expect("precision computed"),
                    weights_seed,
                )?;
                let means = debiased.column_means();
                (0..d.p())
                    .map(|j| {
                        let ci = debiased.credible_interval(j, alpha)?;
                        Ok(Outcome {
                            covered: ci.contains(scn.beta0[j]),
                            error: means[j] - scn.beta0[j],
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            Method::DebiasedLasso => {
                let theta = theta.as_ref().expect("precision computed");
                let rho = default_penalty(d.n(), d.p(), cfg.lasso_scale)?;
                let (est, pilot) = debiased_lasso_with_pilot(&d, theta, &LassoConfig::new(rho))?;
                let var = estimate_sandwich_variance(&d, theta, &pilot.coefficients)?;
                (0..d.p())
                    .map(|j| {
                        let ci = normal_interval(est[j], var[j], d.n(), j, cfg.level)?;
                        Ok(Outcome {
                            covered: ci.contains(scn.beta0[j]),
                            error: est[j] - scn.beta0[j],
                        })
                    })
                    .collect::<Result<Vec<_>>>()?
            }
        };
        out.push((m, outcomes));
    }
    Ok(out)
}

#[derive(Default, Clone, Copy)]
struct Accumulator {
    count: usize,
    hits: usize,
    error_sum: f64,
    square_sum: f64,
}

/// Runs the study and returns one table per selected method. Replications
/// that fail numerically are logged and dropped; more than 5% failures abort.
pub fn run_study(scn: &SimulationScenario, cfg: &StudyConfig) -> Result<Vec<MetricsTable>> {
    scn.validate()?;
    cfg.validate()?;
    let run = || -> Vec<Result<Replication>> {
        (0..cfg.replications as u64).into_par_iter().map(|r| replicate(scn, cfg, r)).collect()
    };
    let results = match cfg.parallelism {
        Some(k) => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::invalid(format!("cannot build worker pool: {e}")))?
            .install(run),
        None => run(),
    };

    let groups = scn.groups();
    let mut acc: BTreeMap<Method, BTreeMap<u8, Accumulator>> = BTreeMap::new();
    let mut failed = 0;
    let mut ok = 0;
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(per_method) => {
                ok += 1;
                for (m, outcomes) in per_method {
                    let table = acc.entry(m).or_default();
                    for (j, o) in outcomes.iter().enumerate() {
                        let a = table.entry(groups[j]).or_default();
                        a.count += 1;
                        a.hits += o.covered as usize;
                        a.error_sum += o.error;
                        a.square_sum += o.error * o.error;
                    }
                }
            }
            Err(e) => {
                failed += 1;
                log::warn!("replication {r} failed: {e}");
            }
        }
    }
    if failed as f64 > 0.05 * cfg.replications as f64 {
        return Err(Error::numerical(format!(
            "{failed} of {} replications failed; aborting",
            cfg.replications
        )));
    }
    Ok(acc
        .into_iter()
        .map(|(method, table)| MetricsTable {
            method,
            scenario: scn.id,
            n: scn.n,
            p: scn.p,
            per_group: table
                .into_iter()
                .map(|(g, a)| {
                    let c = a.count as f64;
                    let bias = a.error_sum / c;
                    // guard against round-off pushing rmse below |bias|
                    let rmse = (a.square_sum / c).sqrt().max(bias.abs());
                    (
                        g,
                        GroupMetrics {
                            coverage: a.hits as f64 / c,
                            bias,
                            rmse,
                        },
                    )
                })
                .collect(),
            replications: ok,
            failed,
            level: cfg.level,
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    Csv,
    Json,
    Plotdata,
}

impl std::str::FromStr for ReportFormat {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            "plotdata" => Ok(Self::Plotdata),
            other => Err(Error::invalid(format!("unknown report format {other:?} (valid: csv, json, plotdata)"))),
        }
    }
}

impl ReportFormat {
    pub fn extension(self) -> &'static str {
        match self {
            Self::Csv => "csv",
            Self::Json => "json",
            Self::Plotdata => "dat",
        }
    }
}

/// Writes the tables to `path`.
///
/// * `csv`: one row per method and group under the header
///   `method,group,coverage,bias,rmse,replications,level`;
/// * `json`: the tables as an array;
/// * `plotdata`: one whitespace-separated block per method, headed by a
///   `# method` comment, blocks separated by a blank line.
pub fn emit_report(tables: &[MetricsTable], format: ReportFormat, path: impl AsRef<Path>) -> Result<()> {
    if tables.is_empty() {
        return Err(Error::invalid("no metrics tables to report"));
    }
    match format {
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_path(path)?;
            w.write_record(["method", "group", "coverage", "bias", "rmse", "replications", "level"])?;
            for t in tables {
                for (g, m) in &t.per_group {
                    w.write_record([
                        t.method.name().to_string(),
                        g.to_string(),
                        m.coverage.to_string(),
                        m.bias.to_string(),
                        m.rmse.to_string(),
                        t.replications.to_string(),
                        t.level.to_string(),
                    ])?;
                }
            }
            w.flush()?;
        }
        ReportFormat::Json => crate::data::write_json(path, &tables)?,
        ReportFormat::Plotdata => {
            let mut s = String::new();
            for (k, t) in tables.iter().enumerate() {
                if k > 0 {
                    s.push('\n');
                }
                let _ = writeln!(s, "# {}", t.method.name());
                for (g, m) in &t.per_group {
                    let _ = writeln!(s, "{g} {} {} {}", m.coverage, m.bias, m.rmse);
                }
            }
            std::fs::File::create(path)?.write_all(s.as_bytes())?;
        }
    }
    Ok(())
}

/// Fixed-width coverage / bias / RMSE table for terminal output.
pub fn format_summary(tables: &[MetricsTable]) -> String {
    let mut s = String::new();
    for t in tables {
        let _ = writeln!(
            s,
            "{} {} n={} p={} replications={} level={}",
            t.method.name(),
            t.scenario,
            t.n,
            t.p,
            t.replications,
            t.level
        );
        let _ = writeln!(s, "  group  coverage      bias      rmse");
        for (g, m) in &t.per_group {
            let _ = writeln!(s, "  {g:>5}  {:>8.4}  {:>8.4}  {:>8.4}", m.coverage, m.bias, m.rmse);
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats;

    #[test]
    fn scenario_mapping() {
        assert_eq!(ScenarioId::S2.error_model(), ErrorModel::Chi2Centered);
        assert_eq!(ScenarioId::S6.error_model(), ErrorModel::HeteroAbsX1);
        assert_eq!(ScenarioId::S4.precision_truth(), PrecisionTruth::BandedHalf);
        assert_eq!(ScenarioId::S3.precision_truth(), PrecisionTruth::Diagonal);
        assert_eq!("s5".parse::<ScenarioId>().unwrap(), ScenarioId::S5);
        assert!("S7".parse::<ScenarioId>().is_err());
        let scn = SimulationScenario::new(ScenarioId::S1, 100, 50);
        assert_eq!(scn.beta0().support_size(), 5);
        assert_eq!(&scn.groups()[..6], &[1, 2, 3, 4, 5, 0]);
    }

    #[test]
    fn diagonal_design_covariance() {
        let d = SimulationScenario::new(ScenarioId::S1, 50_000, 5).generate(1).unwrap();
        let g = crate::data::gram_matrix(&d);
        for j in 0..5 {
            let want = 1.0 / (j + 1) as f64;
            assert!((g[(j, j)] / want - 1.0).abs() <= 0.02, "var {j}: {}", g[(j, j)]);
        }
    }

    #[test]
    fn centred_chi_square_errors() {
        let mut scn = SimulationScenario::new(ScenarioId::S2, 50_000, 1);
        scn.beta0 = vec![0.0];
        let d = scn.generate(2).unwrap();
        let e = d.response().as_slice();
        assert!(stats::mean(e).abs() <= 0.05);
        assert!((stats::variance(e) - 6.0).abs() <= 0.3);
    }

    #[test]
    fn banded_design_precision() {
        let d = SimulationScenario::new(ScenarioId::S4, 100_000, 5).generate(3).unwrap();
        let inv = crate::data::gram_matrix(&d).try_inverse().unwrap();
        assert!((inv[(0, 1)] - 0.5).abs() <= 0.05, "{}", inv[(0, 1)]);
    }

    fn quick(methods: Vec<Method>, reps: usize) -> StudyConfig {
        StudyConfig {
            replications: reps,
            n_draws: 200,
            methods,
            seed: 5,
            ..StudyConfig::default()
        }
    }

    #[test]
    fn single_replication_coverage_is_binary() {
        let scn = SimulationScenario::new(ScenarioId::S1, 60, 10);
        let tables = run_study(&scn, &quick(Method::ALL.to_vec(), 1)).unwrap();
        assert_eq!(tables.len(), 3);
        for t in &tables {
            for g in 1..=5u8 {
                let c = t.per_group[&g].coverage;
                assert!(c == 0.0 || c == 1.0);
            }
            for m in t.per_group.values() {
                assert!(m.rmse >= m.bias.abs());
            }
        }
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let scn = SimulationScenario::new(ScenarioId::S3, 50, 8);
        let one = run_study(&scn, &StudyConfig { parallelism: Some(1), ..quick(Method::ALL.to_vec(), 4) }).unwrap();
        let four = run_study(&scn, &StudyConfig { parallelism: Some(4), ..quick(Method::ALL.to_vec(), 4) }).unwrap();
        for (a, b) in one.iter().zip(&four) {
            assert_eq!(a.per_group, b.per_group);
        }
    }

    #[test]
    fn reports() {
        let scn = SimulationScenario::new(ScenarioId::S1, 40, 8);
        let tables = run_study(&scn, &quick(Method::ALL.to_vec(), 2)).unwrap();
        let dir = tempfile::tempdir().unwrap();

        let csv_path = dir.path().join("r.csv");
        emit_report(&tables[..1], ReportFormat::Csv, &csv_path).unwrap();
        let text = std::fs::read_to_string(&csv_path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "method,group,coverage,bias,rmse,replications,level");
        assert_eq!(lines.len(), 7);

        let plot = dir.path().join("r.dat");
        emit_report(&tables, ReportFormat::Plotdata, &plot).unwrap();
        let text = std::fs::read_to_string(&plot).unwrap();
        let blocks: Vec<&str> = text.split("\n\n").collect();
        assert_eq!(blocks.len(), 3);
        for b in blocks {
            assert_eq!(b.lines().filter(|l| !l.starts_with('#') && !l.is_empty()).count(), 6);
        }

        let json = dir.path().join("r.json");
        emit_report(&tables, ReportFormat::Json, &json).unwrap();
        let back: Vec<MetricsTable> = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
        assert_eq!(back.len(), 3);

        assert!(emit_report(&[], ReportFormat::Csv, dir.path().join("e.csv")).is_err());
        assert!(format_summary(&tables).contains("debiased_lasso"));
    }

    #[test]
    fn method_filter() {
        let scn = SimulationScenario::new(ScenarioId::S1, 40, 6);
        let tables = run_study(&scn, &quick(vec![Method::DebiasedBayes], 2)).unwrap();
        assert_eq!(tables.len(), 1);
        assert_eq!(tables[0].method, Method::DebiasedBayes);
        assert!(run_study(&scn, &quick(vec![], 2)).is_err());
    }
}
