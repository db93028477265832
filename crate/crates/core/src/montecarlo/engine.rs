//! Replicated inference over a grid of sample sizes or signal strengths.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::config::{ExperimentConfig, InitKind, ModelKind, SignalKind};
use super::loading::{benchmark_spike, build_loading};
use crate::error::{Error, Result};
use crate::manifold::{minimax_ci_length, variance_component, NoiseModel};
use crate::pca::{fit_pca, PcaObservation};
use crate::regression::{
    fit_no_split, fit_split, InitialEstimate, RegressionData, RegressionFit, Samples,
    SplitOptions,
};
use crate::rng::{stream, streams, SHARED};
use crate::stats::{ks_critical_01, ks_statistic, mean, z_alpha};
use crate::tensor::Tensor3;
use crate::tucker::{generate_signal, TuckerFactors};

/// Failure rates above this mark the experiment as failed.
pub const MAX_FAILURE_RATE: f64 = 0.01;

/// One successful replication for one loading.
#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationRecord {
    pub rep: usize,
    pub estimate: f64,
    pub truth: f64,
    /// `(estimate − truth)/std_error`, or 0 when the standard error vanishes.
    pub z: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub covered: bool,
    pub std_error: f64,
    pub s_a_hat: f64,
    /// `σ̂` (PCA) or `σ̂_ξ` (regression).
    pub noise_hat: f64,
}

impl ReplicationRecord {
    pub fn ci_length(&self) -> f64 {
        self.ci_hi - self.ci_lo
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReplicationFailure {
    pub rep: usize,
    pub message: String,
}

/// Results for one grid value and one loading.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationReport {
    pub model: ModelKind,
    pub grid_index: usize,
    /// `n` for regression, `λ̲` for PCA.
    pub grid_value: f64,
    pub loading: String,
    pub alpha: f64,
    pub z_alpha: f64,
    pub truth: f64,
    /// `s_A` at the true factors.
    pub s_a: f64,
    /// [`minimax_ci_length`] at the true `s_A` and noise levels.
    pub minimax_length: f64,
    pub records: Vec<ReplicationRecord>,
    pub failures: Vec<ReplicationFailure>,
    pub coverage: f64,
    pub mean_ci_length: f64,
    pub mean_std_error: f64,
    pub mean_s_a_hat: f64,
    pub mean_noise_hat: f64,
    pub ks_statistic: f64,
    pub ks_critical: f64,
    pub ks_pass: bool,
    /// `mean_ci_length / (2 z_{α/2} minimax_length)`.
    pub efficiency_ratio: f64,
    pub failure_rate: f64,
    pub failed: bool,
}

impl SimulationReport {
    pub fn z_values(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.z).collect()
    }
}

/// Signal, loadings and truths shared by all replications of one grid value.
struct Setup {
    tensor: Tensor3,
    factors: TuckerFactors,
    loadings: Vec<Tensor3>,
    truths: Vec<f64>,
}

fn setup(cfg: &ExperimentConfig, lambda: f64) -> Result<Setup> {
    let (tensor, factors) = match cfg.signal {
        SignalKind::Random => {
            let mut rng = stream(cfg.seed, SHARED, streams::SIGNAL);
            generate_signal(cfg.dims, cfg.ranks, lambda, cfg.kappa, cfg.coherent, &mut rng)?
        }
        SignalKind::BenchmarkSpike => benchmark_spike(cfg.dims, lambda)?,
    };
    let mut rng = stream(cfg.seed, SHARED, streams::LOADING);
    let loadings = cfg
        .loadings
        .iter()
        .map(|l| build_loading(l, cfg.dims, &mut rng))
        .collect::<Result<Vec<_>>>()?;
    let truths = loadings
        .iter()
        .map(|a| a.inner(&tensor))
        .collect::<Result<Vec<_>>>()?;
    Ok(Setup {
        tensor,
        factors,
        loadings,
        truths,
    })
}

fn replication_id(grid_index: usize, rep: usize) -> u64 {
    ((grid_index as u64) << 32) | rep as u64
}

fn normals<R: Rng + ?Sized>(rng: &mut R, len: usize, scale: f64) -> Vec<f64> {
    if scale == 0.0 {
        return vec![0.0; len];
    }
    rng.sample_iter::<f64, _>(StandardNormal)
        .take(len)
        .map(|v| v * scale)
        .collect()
}

/// `T + X̄/‖X̄‖_F·√(p̄r̄/n)` with `n` the number of samples given.
pub fn oracle_init(t: &Tensor3, ranks: [usize; 3], samples: Samples<'_>) -> Result<InitialEstimate> {
    let pbar = *t.dims().iter().max().expect("dims") as f64;
    let rbar = *ranks.iter().max().expect("ranks") as f64;
    let xbar = samples.mean_design();
    let norm = xbar.frob_norm();
    if norm == 0.0 {
        return Err(Error::InvalidInput("mean design is zero".into()));
    }
    let mut init = t.clone();
    init.axpy((pbar * rbar / samples.n() as f64).sqrt() / norm, &xbar)?;
    InitialEstimate::from_tensor(init, ranks)
}

fn regression_fit(cfg: &ExperimentConfig, s: &Setup, n: usize, id: u64) -> Result<RegressionFit> {
    let p = s.tensor.len();
    let x = normals(&mut stream(cfg.seed, id, streams::DESIGN), n * p, 1.0);
    let noise = normals(&mut stream(cfg.seed, id, streams::NOISE), n, cfg.noise_sd);
    let mut data = RegressionData::new(cfg.dims, noise, x)?;
    let signal = data.samples().predictions(&s.tensor)?;
    data = {
        let y: Vec<f64> = data.responses().iter().zip(&signal).map(|(e, f)| e + f).collect();
        let dims = data.dims();
        let (_, _, x) = data.into_parts();
        RegressionData::new(dims, y, x)?
    };
    let ranks = cfg.ranks;
    let init_for = |samples: Samples<'_>| -> Result<InitialEstimate> {
        match cfg.init {
            InitKind::Oracle => oracle_init(&s.tensor, ranks, samples),
            InitKind::Truth => Ok(s.factors.clone().into()),
        }
    };
    match cfg.model {
        ModelKind::RegressionNoSplit => {
            let init = init_for(data.samples())?;
            fit_no_split(&data, &init, None)
        }
        ModelKind::RegressionSplit => {
            fit_split(&data, SplitOptions::default(), |h, _| init_for(h))
        }
        ModelKind::Pca => unreachable!("regression_fit called for pca"),
    }
}

type RepOutcome = std::result::Result<Vec<std::result::Result<ReplicationRecord, String>>, String>;

fn record(rep: usize, truth: f64, r: crate::inference::InferenceResult) -> ReplicationRecord {
    let (ci_lo, ci_hi) = r.ci;
    let diff = r.estimate - truth;
    let (z, covered) = if r.std_error > 0.0 {
        (diff / r.std_error, ci_lo <= truth && truth <= ci_hi)
    } else {
        (0.0, diff.abs() <= 1e-10 * truth.abs().max(1.0))
    };
    ReplicationRecord {
        rep,
        estimate: r.estimate,
        truth,
        z,
        ci_lo,
        ci_hi,
        covered,
        std_error: r.std_error,
        s_a_hat: r.s_a_hat,
        noise_hat: r.sigma_xi_hat.unwrap_or(r.sigma_hat),
    }
}

fn run_rep(cfg: &ExperimentConfig, s: &Setup, gi: usize, g: f64, rep: usize) -> RepOutcome {
    let id = replication_id(gi, rep);
    let per_loading = |infer: &dyn Fn(&Tensor3) -> Result<crate::inference::InferenceResult>| {
        s.loadings
            .iter()
            .zip(&s.truths)
            .map(|(a, &truth)| {
                infer(a)
                    .map(|r| record(rep, truth, r))
                    .map_err(|e| e.to_string())
            })
            .collect()
    };
    if cfg.model.is_regression() {
        let fit = regression_fit(cfg, s, g as usize, id).map_err(|e| e.to_string())?;
        Ok(per_loading(&|a| fit.infer(a, cfg.alpha)))
    } else {
        let mut y = s.tensor.clone();
        let z = normals(&mut stream(cfg.seed, id, streams::NOISE), y.len(), cfg.noise_sd);
        for (v, e) in y.as_mut_slice().iter_mut().zip(z) {
            *v += e;
        }
        let obs = PcaObservation::new(y, cfg.ranks).map_err(|e| e.to_string())?;
        let fit = fit_pca(&obs, None).map_err(|e| e.to_string())?;
        Ok(per_loading(&|a| fit.infer(a, cfg.alpha)))
    }
}

fn mean_of(records: &[ReplicationRecord], f: impl Fn(&ReplicationRecord) -> f64) -> f64 {
    if records.is_empty() {
        return f64::NAN;
    }
    records.iter().map(f).sum::<f64>() / records.len() as f64
}

#[allow(clippy::too_many_arguments)]
fn summarize(
    cfg: &ExperimentConfig,
    gi: usize,
    g: f64,
    li: usize,
    s_a: f64,
    truth: f64,
    records: Vec<ReplicationRecord>,
    failures: Vec<ReplicationFailure>,
) -> SimulationReport {
    let za = z_alpha(cfg.alpha);
    let noise = if cfg.model.is_regression() {
        NoiseModel::Regression {
            sigma_xi: cfg.noise_sd,
            sigma: 1.0,
            n: g as usize,
        }
    } else {
        NoiseModel::Pca {
            sigma: cfg.noise_sd,
        }
    };
    let minimax_length = minimax_ci_length(s_a, noise);
    let lengths: Vec<f64> = records.iter().map(ReplicationRecord::ci_length).collect();
    let ses: Vec<f64> = records.iter().map(|r| r.std_error).collect();
    let zs: Vec<f64> = records.iter().map(|r| r.z).collect();
    let m = records.len();
    let coverage = if m == 0 {
        0.0
    } else {
        records.iter().filter(|r| r.covered).count() as f64 / m as f64
    };
    let mean_ci_length = if m == 0 { f64::NAN } else { mean(&lengths) };
    let ks = if m == 0 { 1.0 } else { ks_statistic(&zs) };
    let ks_critical = ks_critical_01(m.max(1));
    let failure_rate = failures.len() as f64 / cfg.reps as f64;
    SimulationReport {
        model: cfg.model,
        grid_index: gi,
        grid_value: g,
        loading: cfg.loadings[li].label(),
        alpha: cfg.alpha,
        z_alpha: za,
        truth,
        s_a,
        minimax_length,
        coverage,
        mean_ci_length,
        mean_std_error: if m == 0 { f64::NAN } else { mean(&ses) },
        mean_s_a_hat: mean_of(&records, |r| r.s_a_hat),
        mean_noise_hat: mean_of(&records, |r| r.noise_hat),
        ks_statistic: ks,
        ks_critical,
        ks_pass: m > 0 && ks < ks_critical,
        efficiency_ratio: mean_ci_length / (2.0 * za * minimax_length),
        failure_rate,
        failed: failure_rate > MAX_FAILURE_RATE,
        records,
        failures,
    }
}

fn run_grid_point(
    cfg: &ExperimentConfig,
    pool: &rayon::ThreadPool,
    gi: usize,
    g: f64,
) -> Result<Vec<SimulationReport>> {
    let lambda = if cfg.model.is_regression() { cfg.lambda_lo } else { g };
    let s = setup(cfg, lambda)?;
    let outcomes: Vec<RepOutcome> = pool.install(|| {
        (0..cfg.reps)
            .into_par_iter()
            .map(|rep| run_rep(cfg, &s, gi, g, rep))
            .collect()
    });
    let mut reports = Vec::with_capacity(s.loadings.len());
    for (li, a) in s.loadings.iter().enumerate() {
        let mut records = Vec::new();
        let mut failures = Vec::new();
        for (rep, out) in outcomes.iter().enumerate() {
            let r = match out {
                Ok(per) => per[li].clone(),
                Err(e) => Err(e.clone()),
            };
            match r {
                Ok(rec) => records.push(rec),
                Err(message) => failures.push(ReplicationFailure { rep, message }),
            }
        }
        let s_a = variance_component(a, &s.factors)?.sqrt();
        reports.push(summarize(cfg, gi, g, li, s_a, s.truths[li], records, failures));
    }
    Ok(reports)
}

/// Runs every grid value; one report per (grid value, loading), grid-major.
///
/// Results depend only on the configuration and seed, not on `workers`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SimulationReport>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let mut out = Vec::new();
    for (gi, &g) in cfg.grid.iter().enumerate() {
        out.extend(run_grid_point(cfg, &pool, gi, g)?);
    }
    Ok(out)
}

pub fn run_regression_experiment(cfg: &ExperimentConfig) -> Result<Vec<SimulationReport>> {
    if !cfg.model.is_regression() {
        return Err(Error::Config(format!("model {} is not a regression model", cfg.model.name())));
    }
    run_experiment(cfg)
}

pub fn run_pca_experiment(cfg: &ExperimentConfig) -> Result<Vec<SimulationReport>> {
    if cfg.model != ModelKind::Pca {
        return Err(Error::Config(format!("model {} is not pca", cfg.model.name())));
    }
    run_experiment(cfg)
}
