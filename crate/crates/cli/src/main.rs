use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use tucker_infer::format::{read_tnsr, read_treg};
use tucker_infer::inference::InferenceResult;
use tucker_infer::manifold::{
    alignment_check, incoherence_ratio, IncoherenceVariant, Regime,
};
use tucker_infer::montecarlo::{run_experiment, sha256_hex, write_outputs, ExperimentConfig};
use tucker_infer::pca::{infer_pca_with_sigma, PcaObservation};
use tucker_infer::regression::{
    infer_no_split, infer_split, naive_init, sigma_hat, InitialEstimate, Samples, SplitOptions,
};
use tucker_infer::tucker::{hosvd, spectral_summary};
use tucker_infer::{Error, Tensor3};

const SEED_ENV: &str = "TENSOR_INFER_SEED";

const EXIT_INPUT: u8 = 2;
const EXIT_FAILURE_RATE: u8 = 3;
const EXIT_ALIGNMENT: u8 = 4;

#[derive(Parser)]
#[command(name = "tucker-infer", version, about = "Inference for linear functionals of low Tucker-rank tensors")]
struct Cli {
    /// Print progress to stderr.
    #[arg(short, long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte Carlo experiment from a key=value config file.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Overrides `workers` in the config.
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Confidence interval for <A, T> from a data file.
    Infer {
        #[arg(long, value_enum)]
        model: Model,
        /// TREG samples (reg, reg-split) or TNSR observation (pca).
        #[arg(long)]
        data: PathBuf,
        /// TNSR loading tensor.
        #[arg(long)]
        loading: PathBuf,
        #[arg(long, value_parser = parse_ranks)]
        ranks: [usize; 3],
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
        /// Known design scale (regression) or noise scale (pca).
        #[arg(long)]
        sigma: Option<f64>,
        /// TNSR initial estimate (regression only).
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Incoherence ratios and alignment condition for a tensor and loading.
    Diagnose {
        #[arg(long)]
        tensor: PathBuf,
        #[arg(long, value_parser = parse_ranks)]
        ranks: [usize; 3],
        #[arg(long)]
        loading: PathBuf,
        #[arg(long, value_parser = parse_regime, default_value = "general")]
        regime: Regime,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Reg,
    RegSplit,
    Pca,
}

fn parse_ranks(s: &str) -> Result<[usize; 3], String> {
    let v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    match v.as_slice() {
        &[a, b, c] if a > 0 && b > 0 && c > 0 => Ok([a, b, c]),
        _ => Err("expected three positive integers r1,r2,r3".into()),
    }
}

fn parse_regime(s: &str) -> Result<Regime, String> {
    Regime::parse(s).ok_or_else(|| {
        let names: Vec<_> = Regime::ALL.iter().map(|r| r.name()).collect();
        format!("unknown regime {s:?}; expected one of {}", names.join(", "))
    })
}

fn fail(code: u8, err: &Error) -> ExitCode {
    eprintln!("error: {err}");
    ExitCode::from(code)
}

fn error_code(err: &Error) -> u8 {
    match err {
        Error::AlignmentDegenerate(_) => EXIT_ALIGNMENT,
        _ => EXIT_INPUT,
    }
}

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

fn simulate(config: PathBuf, out: PathBuf, workers: Option<usize>, verbose: bool) -> ExitCode {
    let text = match std::fs::read_to_string(&config) {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INPUT, &e.into()),
    };
    let mut cfg = match ExperimentConfig::parse(&text) {
        Ok(c) => c,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    if let Ok(v) = std::env::var(SEED_ENV) {
        match v.trim().parse() {
            Ok(seed) => cfg.seed = seed,
            Err(_) => {
                return fail(EXIT_INPUT, &Error::Config(format!("{SEED_ENV}={v:?} is not a seed")))
            }
        }
    }
    if let Some(w) = workers {
        if w == 0 {
            return fail(EXIT_INPUT, &Error::Config("--workers must be at least 1".into()));
        }
        cfg.workers = w;
    }
    if verbose {
        eprintln!(
            "running {} grid values x {} loadings x {} replications on {} workers",
            cfg.grid.len(),
            cfg.loadings.len(),
            cfg.reps,
            cfg.workers
        );
    }
    let reports = match run_experiment(&cfg) {
        Ok(r) => r,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    if let Err(e) = write_outputs(&out, &cfg, &reports) {
        return fail(EXIT_INPUT, &e);
    }
    let summary = std::fs::read_to_string(out.join("summary.txt")).unwrap_or_default();
    print!("{summary}");
    let breached: Vec<_> = reports.iter().filter(|r| r.failed).collect();
    for r in &breached {
        eprintln!(
            "error: {} of {} replications failed for {} at grid value {}",
            r.failures.len(),
            cfg.reps,
            r.loading,
            r.grid_value
        );
    }
    if breached.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_FAILURE_RATE)
    }
}

fn print_result(r: &InferenceResult) {
    println!("estimate={}", num(r.estimate));
    println!("ci_lo={}", num(r.ci.0));
    println!("ci_hi={}", num(r.ci.1));
    println!("ci_length={}", num(r.ci_length()));
    println!("std_error={}", num(r.std_error));
    println!("s_A_hat={}", num(r.s_a_hat));
    println!("sigma_hat={}", num(r.sigma_hat));
    if let Some(s) = r.sigma_xi_hat {
        println!("sigma_xi_hat={}", num(s));
    }
    println!("z={}", num(r.z));
    println!("z_alpha={}", num(r.z_alpha));
    println!("alpha={}", num(r.alpha));
    if let Some(n) = r.n {
        println!("n={n}");
    }
    let d = &r.diagnostics;
    if let Some(s) = d.spectral {
        println!("lambda_min={}", num(s.lambda_min));
        println!("kappa={}", num(s.kappa));
    }
    if let Some(v) = d.incoherence_core {
        println!("incoherence_core={},{},{}", num(v[0]), num(v[1]), num(v[2]));
    }
    if let Some(v) = d.incoherence_right {
        println!("incoherence_right={},{},{}", num(v[0]), num(v[1]), num(v[2]));
    }
    if let Some(a) = &d.alignment {
        println!("alignment_regime={}", a.regime.name());
        println!("alignment_ratio={}", num(a.ratio));
        println!("alignment={}", if a.pass { "pass" } else { "fail" });
    }
    if let Some(s) = &d.sample_size {
        println!("sample_size={}", if s.pass { "pass" } else { "fail" });
    }
    if let Some(s) = &d.snr {
        println!("snr={}", if s.pass { "pass" } else { "fail" });
    }
}

fn manifest(inputs: &[&PathBuf], args: &str) -> std::io::Result<String> {
    let mut bytes = args.as_bytes().to_vec();
    for p in inputs {
        bytes.extend_from_slice(sha256_hex(&std::fs::read(p)?).as_bytes());
    }
    Ok(format!(
        "manifest config_hash={} seed=none version={}",
        sha256_hex(&bytes),
        env!("CARGO_PKG_VERSION")
    ))
}

#[allow(clippy::too_many_arguments)]
fn infer(
    model: Model,
    data: PathBuf,
    loading: PathBuf,
    ranks: [usize; 3],
    alpha: f64,
    sigma: Option<f64>,
    init: Option<PathBuf>,
) -> ExitCode {
    let a = match read_tnsr(&loading) {
        Ok(a) => a,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let init_tensor = match init.as_ref().map(read_tnsr).transpose() {
        Ok(t) => t,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    let result = match model {
        Model::Pca => read_tnsr(&data)
            .and_then(|y| PcaObservation::new(y, ranks))
            .and_then(|obs| infer_pca_with_sigma(&obs, &a, alpha, sigma)),
        Model::Reg | Model::RegSplit => read_treg(&data).and_then(|d| {
            let sigma2 = sigma.map(|s| s * s);
            let make_init = |samples: Samples<'_>| -> tucker_infer::Result<InitialEstimate> {
                match &init_tensor {
                    Some(t) => InitialEstimate::from_tensor(t.clone(), ranks),
                    None => {
                        let s2 = sigma2.unwrap_or_else(|| sigma_hat(samples).powi(2));
                        naive_init(samples, ranks, s2).map(Into::into)
                    }
                }
            };
            if let Model::Reg = model {
                infer_no_split(&d, &make_init(d.samples())?, &a, alpha, sigma2)
            } else {
                let opts = SplitOptions {
                    sigma2,
                    ..SplitOptions::default()
                };
                infer_split(&d, opts, |h, _| make_init(h), &a, alpha)
            }
        }),
    };
    let r = match result {
        Ok(r) => r,
        Err(e) => return fail(error_code(&e), &e),
    };
    print_result(&r);
    let model_name = match model {
        Model::Reg => "reg",
        Model::RegSplit => "reg-split",
        Model::Pca => "pca",
    };
    let args = format!("infer model={model_name} ranks={ranks:?} alpha={alpha:?} sigma={sigma:?}");
    let mut inputs = vec![&data, &loading];
    if let Some(p) = &init {
        inputs.push(p);
    }
    match manifest(&inputs, &args) {
        Ok(m) => println!("{m}"),
        Err(e) => return fail(EXIT_INPUT, &e.into()),
    }
    ExitCode::SUCCESS
}

fn ratios(v: tucker_infer::Result<[f64; 3]>) -> String {
    match v {
        Ok(v) => format!("{},{},{}", num(v[0]), num(v[1]), num(v[2])),
        Err(_) => "undefined".into(),
    }
}

fn diagnose(tensor: PathBuf, ranks: [usize; 3], loading: PathBuf, regime: Regime) -> ExitCode {
    let (t, a): (Tensor3, Tensor3) = match read_tnsr(&tensor).and_then(|t| Ok((t, read_tnsr(&loading)?))) {
        Ok(v) => v,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    if t.dims() != a.dims() {
        return fail(
            EXIT_INPUT,
            &Error::Shape(format!("tensor dims {:?} vs loading dims {:?}", t.dims(), a.dims())),
        );
    }
    let f = match hosvd(&t, ranks) {
        Ok(f) => f,
        Err(e) => return fail(EXIT_INPUT, &e),
    };
    if let Ok(s) = spectral_summary(&f.core, ranks) {
        println!("lambda_min={}", num(s.lambda_min));
        println!("lambda_max={}", num(s.lambda_max));
        println!("kappa={}", num(s.kappa));
    }
    println!(
        "incoherence_core={}",
        ratios(incoherence_ratio(&a, &f, IncoherenceVariant::CoreProjected))
    );
    println!(
        "incoherence_right={}",
        ratios(incoherence_ratio(&a, &f, IncoherenceVariant::RightProjected))
    );
    match alignment_check(&a, &f, regime) {
        Ok(rep) => {
            println!("regime={}", rep.regime.name());
            println!("s_A={}", if rep.s_a == 0.0 { "0".into() } else { num(rep.s_a) });
            for term in &rep.terms {
                println!("term.{}={}", term.label, num(term.value));
            }
            println!("threshold={}", num(rep.threshold));
            println!("alignment_ratio={}", num(rep.ratio));
            println!("alignment={}", if rep.pass { "pass" } else { "fail" });
        }
        Err(e) => {
            println!("alignment=undefined");
            eprintln!("warning: {e}");
        }
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.cmd {
        Command::Simulate {
            config,
            out,
            workers,
        } => simulate(config, out, workers, cli.verbose),
        Command::Infer {
            model,
            data,
            loading,
            ranks,
            alpha,
            sigma,
            init,
        } => infer(model, data, loading, ranks, alpha, sigma, init),
        Command::Diagnose {
            tensor,
            ranks,
            loading,
            regime,
        } => diagnose(tensor, ranks, loading, regime),
    }
}
