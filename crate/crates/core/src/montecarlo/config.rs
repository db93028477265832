//! Flat `key = value` experiment configuration.
//!
//! One setting per line, `#` starts a comment. Unknown or repeated keys are
//! errors. Example:
//!
//! ```text
//! model = pca
//! dims = 100,100,100
//! ranks = 1,1,1
//! signal = benchmark-spike
//! loading = entrywise(1,1,1) | difference(1,1,1;2,2,2)
//! grid = benchmark
//! reps = 1000
//! seed = 7
//! ```

use std::fmt::Write as _;

use crate::error::{Error, Result};

fn cfg_err(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ModelKind {
    RegressionNoSplit,
    RegressionSplit,
    Pca,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::RegressionNoSplit => "regression-nosplit",
            ModelKind::RegressionSplit => "regression-split",
            ModelKind::Pca => "pca",
        }
    }

    pub fn is_regression(self) -> bool {
        !matches!(self, ModelKind::Pca)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SignalKind {
    /// Superdiagonal core with random (in)coherent factors.
    Random,
    /// `λ·u⊗u⊗u` with `u ∝ (2p^{1/4}, 1, …, 1)`.
    BenchmarkSpike,
}

/// Loading tensor constructions. Indices are 0-based here and 1-based in
/// config text.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum LoadingSpec {
    Entrywise([usize; 3]),
    Difference([usize; 3], [usize; 3]),
    LowRankAverage,
    FullRankGaussian,
    RowMean { k2: usize, k3: usize },
}

impl LoadingSpec {
    /// Config-text form, e.g. `entrywise(1,1,1)`.
    pub fn label(&self) -> String {
        let one = |k: &[usize; 3]| format!("{},{},{}", k[0] + 1, k[1] + 1, k[2] + 1);
        match self {
            LoadingSpec::Entrywise(k) => format!("entrywise({})", one(k)),
            LoadingSpec::Difference(a, b) => format!("difference({};{})", one(a), one(b)),
            LoadingSpec::LowRankAverage => "lowrank-average".into(),
            LoadingSpec::FullRankGaussian => "full-rank-gaussian".into(),
            LoadingSpec::RowMean { k2, k3 } => format!("rowmean({},{})", k2 + 1, k3 + 1),
        }
    }

    pub fn parse(s: &str) -> Result<LoadingSpec> {
        let s = s.trim();
        let (name, args) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(cfg_err(format!("unbalanced parentheses in loading {s:?}"))),
            None => (s, None),
        };
        let idx = |text: &str, count: usize| -> Result<Vec<usize>> {
            let v = text
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .ok()
                        .filter(|&k| k >= 1)
                        .map(|k| k - 1)
                        .ok_or_else(|| cfg_err(format!("bad 1-based index {t:?} in loading {s:?}")))
                })
                .collect::<Result<Vec<_>>>()?;
            if v.len() != count {
                return Err(cfg_err(format!("loading {s:?} needs {count} indices")));
            }
            Ok(v)
        };
        let triple = |text: &str| -> Result<[usize; 3]> {
            let v = idx(text, 3)?;
            Ok([v[0], v[1], v[2]])
        };
        match (name.trim(), args) {
            ("entrywise", Some(a)) => Ok(LoadingSpec::Entrywise(triple(a)?)),
            ("difference", Some(a)) => {
                let (l, r) = a
                    .split_once(';')
                    .ok_or_else(|| cfg_err(format!("difference needs two index triples: {s:?}")))?;
                Ok(LoadingSpec::Difference(triple(l)?, triple(r)?))
            }
            ("rowmean", Some(a)) => {
                let v = idx(a, 2)?;
                Ok(LoadingSpec::RowMean { k2: v[0], k3: v[1] })
            }
            ("lowrank-average", None) => Ok(LoadingSpec::LowRankAverage),
            ("full-rank-gaussian", None) => Ok(LoadingSpec::FullRankGaussian),
            _ => Err(cfg_err(format!("unknown loading {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InitKind {
    /// `T + X̄/‖X̄‖_F·√(p̄r̄/n)`, per half when splitting.
    Oracle,
    /// The true factors and tensor.
    Truth,
}

/// Parsed experiment settings.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    pub dims: [usize; 3],
    pub ranks: [usize; 3],
    pub signal: SignalKind,
    pub loadings: Vec<LoadingSpec>,
    /// Sample sizes (regression) or signal strengths (PCA).
    pub grid: Vec<f64>,
    pub kappa: f64,
    pub lambda_lo: f64,
    pub coherent: bool,
    pub reps: usize,
    pub alpha: f64,
    pub seed: u64,
    /// `σ_ξ` for regression, `σ` for PCA.
    pub noise_sd: f64,
    pub init: InitKind,
    pub workers: usize,
}

const KEYS: &[&str] = &[
    "model", "dims", "ranks", "signal", "loading", "grid", "kappa", "lambda_lo", "coherent",
    "reps", "alpha", "seed", "noise_sd", "init", "workers",
];

fn parse_triple(key: &str, v: &str) -> Result<[usize; 3]> {
    let parts: Vec<&str> = v.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(cfg_err(format!("{key} needs three comma-separated values, got {v:?}")));
    }
    let mut out = [0usize; 3];
    for (o, p) in out.iter_mut().zip(&parts) {
        *o = p
            .parse()
            .ok()
            .filter(|&x: &usize| x >= 1)
            .ok_or_else(|| cfg_err(format!("{key}: {p:?} is not a positive integer")))?;
    }
    Ok(out)
}

fn parse_f64(key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .ok()
        .filter(|x| x.is_finite())
        .ok_or_else(|| cfg_err(format!("{key}: {v:?} is not a finite number")))
}

fn parse_usize(key: &str, v: &str) -> Result<usize> {
    v.parse()
        .map_err(|_| cfg_err(format!("{key}: {v:?} is not a nonnegative integer")))
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(cfg_err(format!("{key}: {v:?} is not a boolean"))),
    }
}

/// Named grids, evaluated at `p̄ = max dims`, `r̄ = max ranks`.
///
/// Sample-size presets are rounded to the nearest integer.
pub fn preset_grid(name: &str, dims: [usize; 3], ranks: [usize; 3]) -> Option<Vec<f64>> {
    let p = *dims.iter().max()? as f64;
    let r = *ranks.iter().max()? as f64;
    let round = |v: Vec<f64>| v.into_iter().map(f64::round).collect::<Vec<_>>();
    Some(match name {
        "entrywise" => round(vec![
            2.0 * p.powf(0.75) * r * r,
            2.0 * p * r * r,
            2.0 * p.powf(1.25) * r * r,
        ]),
        "lowrank" => round(vec![
            2.0 * p.powf(1.25) * r,
            2.0 * p.powf(1.5) * r,
            2.0 * p.powf(1.75) * r,
        ]),
        "general" => round(vec![p.powf(1.75) * r, p * p * r, p.powf(2.25) * r]),
        "pca-general" => vec![p.sqrt() * r.sqrt(), p.powf(0.75) * r.sqrt(), p * r.sqrt()],
        "pca-lowrank" => vec![p * r.powf(0.75), p * r.sqrt(), p.powf(1.25) * r.sqrt()],
        "benchmark" => vec![p.sqrt(), p.powf(0.75), p],
        _ => return None,
    })
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<ExperimentConfig> {
        let mut seen: Vec<(&str, &str, usize)> = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| cfg_err(format!("line {}: expected key = value", lineno + 1)))?;
            let (k, v) = (k.trim(), v.trim());
            if !KEYS.contains(&k) {
                return Err(cfg_err(format!("line {}: unknown key `{k}`", lineno + 1)));
            }
            if seen.iter().any(|(s, _, _)| *s == k) {
                return Err(cfg_err(format!("line {}: key `{k}` given twice", lineno + 1)));
            }
            seen.push((k, v, lineno + 1));
        }
        let get = |k: &str| seen.iter().find(|(s, _, _)| *s == k).map(|(_, v, _)| *v);
        let need = |k: &str| get(k).ok_or_else(|| cfg_err(format!("missing required key `{k}`")));

        let model = match need("model")? {
            "regression-nosplit" => ModelKind::RegressionNoSplit,
            "regression-split" => ModelKind::RegressionSplit,
            "pca" => ModelKind::Pca,
            other => return Err(cfg_err(format!("model: unknown value {other:?}"))),
        };
        let dims = parse_triple("dims", need("dims")?)?;
        let ranks = parse_triple("ranks", need("ranks")?)?;
        if (0..3).any(|j| ranks[j] > dims[j]) {
            return Err(cfg_err(format!("ranks {ranks:?} exceed dims {dims:?}")));
        }
        let signal = match get("signal").unwrap_or("random") {
            "random" => SignalKind::Random,
            "benchmark-spike" => SignalKind::BenchmarkSpike,
            other => return Err(cfg_err(format!("signal: unknown value {other:?}"))),
        };
        if signal == SignalKind::BenchmarkSpike && ranks != [1, 1, 1] {
            return Err(cfg_err("signal benchmark-spike needs ranks = 1,1,1"));
        }
        let loadings = need("loading")?
            .split('|')
            .map(LoadingSpec::parse)
            .collect::<Result<Vec<_>>>()?;
        for l in &loadings {
            let check = |k: &[usize; 3]| (0..3).all(|j| k[j] < dims[j]);
            let ok = match l {
                LoadingSpec::Entrywise(k) => check(k),
                LoadingSpec::Difference(a, b) => check(a) && check(b) && a != b,
                LoadingSpec::RowMean { k2, k3 } => *k2 < dims[1] && *k3 < dims[2],
                _ => true,
            };
            if !ok {
                return Err(cfg_err(format!("loading {} does not fit dims {dims:?}", l.label())));
            }
        }
        let grid_text = need("grid")?;
        let grid = match preset_grid(grid_text, dims, ranks) {
            Some(g) => g,
            None => grid_text
                .split(',')
                .map(|t| parse_f64("grid", t.trim()))
                .collect::<Result<Vec<_>>>()?,
        };
        if grid.is_empty() {
            return Err(cfg_err("grid is empty"));
        }
        for &g in &grid {
            let ok = if model.is_regression() {
                g.fract() == 0.0 && g >= if model == ModelKind::RegressionSplit { 2.0 } else { 1.0 }
            } else {
                g > 0.0
            };
            if !ok {
                return Err(cfg_err(format!("grid value {g} is not valid for model {}", model.name())));
            }
        }
        let kappa = get("kappa").map_or(Ok(1.0), |v| parse_f64("kappa", v))?;
        if kappa < 1.0 {
            return Err(cfg_err("kappa must be at least 1"));
        }
        let lambda_lo = get("lambda_lo").map_or(Ok(1.0), |v| parse_f64("lambda_lo", v))?;
        if lambda_lo <= 0.0 {
            return Err(cfg_err("lambda_lo must be positive"));
        }
        let coherent = get("coherent").map_or(Ok(false), |v| parse_bool("coherent", v))?;
        let reps = get("reps").map_or(Ok(1000), |v| parse_usize("reps", v))?;
        if reps == 0 {
            return Err(cfg_err("reps must be at least 1"));
        }
        let alpha = get("alpha").map_or(Ok(0.05), |v| parse_f64("alpha", v))?;
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(cfg_err("alpha must lie in (0, 1)"));
        }
        let seed = get("seed").map_or(Ok(0), |v| {
            v.parse::<u64>()
                .map_err(|_| cfg_err(format!("seed: {v:?} is not an unsigned integer")))
        })?;
        let noise_sd = get("noise_sd").map_or(Ok(1.0), |v| parse_f64("noise_sd", v))?;
        if noise_sd < 0.0 {
            return Err(cfg_err("noise_sd must be nonnegative"));
        }
        let init = match get("init").unwrap_or("oracle") {
            "oracle" => InitKind::Oracle,
            "truth" => InitKind::Truth,
            other => return Err(cfg_err(format!("init: unknown value {other:?}"))),
        };
        let workers = get("workers").map_or(Ok(1), |v| parse_usize("workers", v))?;
        if workers == 0 {
            return Err(cfg_err("workers must be at least 1"));
        }
        Ok(ExperimentConfig {
            model,
            dims,
            ranks,
            signal,
            loadings,
            grid,
            kappa,
            lambda_lo,
            coherent,
            reps,
            alpha,
            seed,
            noise_sd,
            init,
            workers,
        })
    }

    /// Normalized text of every setting that affects results (not `workers`).
    pub fn canonical(&self) -> String {
        let mut s = String::new();
        let t = |v: [usize; 3]| format!("{},{},{}", v[0], v[1], v[2]);
        let _ = writeln!(s, "model = {}", self.model.name());
        let _ = writeln!(s, "dims = {}", t(self.dims));
        let _ = writeln!(s, "ranks = {}", t(self.ranks));
        let _ = writeln!(
            s,
            "signal = {}",
            match self.signal {
                SignalKind::Random => "random",
                SignalKind::BenchmarkSpike => "benchmark-spike",
            }
        );
        let loads: Vec<String> = self.loadings.iter().map(LoadingSpec::label).collect();
        let _ = writeln!(s, "loading = {}", loads.join(" | "));
        let grid: Vec<String> = self.grid.iter().map(|g| format!("{g:?}")).collect();
        let _ = writeln!(s, "grid = {}", grid.join(","));
        let _ = writeln!(s, "kappa = {:?}", self.kappa);
        let _ = writeln!(s, "lambda_lo = {:?}", self.lambda_lo);
        let _ = writeln!(s, "coherent = {}", self.coherent);
        let _ = writeln!(s, "reps = {}", self.reps);
        let _ = writeln!(s, "alpha = {:?}", self.alpha);
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "noise_sd = {:?}", self.noise_sd);
        let _ = writeln!(
            s,
            "init = {}",
            match self.init {
                InitKind::Oracle => "oracle",
                InitKind::Truth => "truth",
            }
        );
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = "model = pca\ndims = 4,4,4\nranks = 1,1,1\nloading = entrywise(1,1,1)\ngrid = 5\n";

    #[test]
    fn minimal_config_defaults() {
        let c = ExperimentConfig::parse(BASE).unwrap();
        assert_eq!(c.reps, 1000);
        assert_eq!(c.alpha, 0.05);
        assert_eq!(c.loadings, vec![LoadingSpec::Entrywise([0, 0, 0])]);
        assert_eq!(ExperimentConfig::parse(&c.canonical()).unwrap(), c);
    }

    #[test]
    fn unknown_key_is_named() {
        let err = ExperimentConfig::parse(&format!("{BASE}colour = red\n")).unwrap_err();
        assert!(err.to_string().contains("colour"));
    }

    #[test]
    fn duplicate_key_rejected() {
        assert!(ExperimentConfig::parse(&format!("{BASE}reps = 3\nreps = 4\n")).is_err());
    }

    #[test]
    fn loading_labels_round_trip() {
        for s in [
            "entrywise(1,2,3)",
            "difference(1,1,1;2,2,2)",
            "lowrank-average",
            "full-rank-gaussian",
            "rowmean(2,3)",
        ] {
            assert_eq!(LoadingSpec::parse(s).unwrap().label(), s);
        }
        assert!(LoadingSpec::parse("entrywise(0,1,1)").is_err());
        assert!(LoadingSpec::parse("entrywise(1,1)").is_err());
    }

    #[test]
    fn presets() {
        let g = preset_grid("entrywise", [40; 3], [3; 3]).unwrap();
        assert_eq!(g[1], 720.0);
        let g = preset_grid("lowrank", [40; 3], [3; 3]).unwrap();
        assert_eq!(g[1], 1518.0);
        let g = preset_grid("benchmark", [100; 3], [1; 3]).unwrap();
        assert!((g[1] - 31.622776601683793).abs() < 1e-12);
    }
}
