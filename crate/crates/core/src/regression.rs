//! Tensor regression `y_i = ⟨T, X_i⟩ + ξ_i`: debiasing, refinement, plug-in
//! variances and confidence intervals, with or without sample splitting.

use crate::error::{invalid, shape, Result};
use crate::inference::{
    check_alpha, require_aligned, s_a_hat, standardized, Diagnostics, InferenceResult,
};
use crate::manifold::Regime;
use crate::matrix::{gemm, MatMut, MatRef, Matrix};
use crate::stats::z_alpha;
use crate::tensor::Tensor3;
use crate::tucker::{hooi, hosvd, power_iteration_step, TuckerFactors, HOOI_MAX_ITERS, HOOI_TOL};

/// `n` responses with their design tensors, stored contiguously.
#[derive(Clone, Debug, PartialEq)]
pub struct RegressionData {
    dims: [usize; 3],
    y: Vec<f64>,
    /// Design `i` occupies `x[i*P..(i+1)*P]` in canonical order.
    x: Vec<f64>,
}

impl RegressionData {
    pub fn new(dims: [usize; 3], y: Vec<f64>, x: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(invalid(format!("dimensions must be positive, got {dims:?}")));
        }
        if y.is_empty() {
            return Err(invalid("regression data needs at least one sample"));
        }
        let p = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| invalid("dimension product overflows"))?;
        if p.checked_mul(y.len()) != Some(x.len()) {
            return Err(shape(format!(
                "{} design values for {} samples of size {p}",
                x.len(),
                y.len()
            )));
        }
        if y.iter().chain(&x).any(|v| !v.is_finite()) {
            return Err(invalid("regression data has a non-finite value"));
        }
        Ok(RegressionData { dims, y, x })
    }

    pub fn from_samples(samples: &[(f64, Tensor3)]) -> Result<Self> {
        let first = samples.first().ok_or_else(|| invalid("no samples"))?;
        let dims = first.1.dims();
        let mut y = Vec::with_capacity(samples.len());
        let mut x = Vec::with_capacity(samples.len() * first.1.len());
        for (yi, xi) in samples {
            if xi.dims() != dims {
                return Err(shape(format!("design dims {:?} vs {dims:?}", xi.dims())));
            }
            y.push(*yi);
            x.extend_from_slice(xi.as_slice());
        }
        RegressionData::new(dims, y, x)
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn responses(&self) -> &[f64] {
        &self.y
    }

    pub fn designs(&self) -> &[f64] {
        &self.x
    }

    pub fn into_parts(self) -> ([usize; 3], Vec<f64>, Vec<f64>) {
        (self.dims, self.y, self.x)
    }

    pub fn design(&self, i: usize) -> Tensor3 {
        self.samples().design(i)
    }

    pub fn samples(&self) -> Samples<'_> {
        Samples {
            dims: self.dims,
            y: &self.y,
            x: &self.x,
        }
    }

    /// Halves `[0, n1)` and `[n1, n)`.
    pub fn split_at(&self, n1: usize) -> Result<(Samples<'_>, Samples<'_>)> {
        if n1 == 0 || n1 >= self.n() {
            return Err(invalid(format!(
                "split point {n1} must leave both halves nonempty (n = {})",
                self.n()
            )));
        }
        let p = self.samples().p();
        Ok((
            Samples {
                dims: self.dims,
                y: &self.y[..n1],
                x: &self.x[..n1 * p],
            },
            Samples {
                dims: self.dims,
                y: &self.y[n1..],
                x: &self.x[n1 * p..],
            },
        ))
    }
}

/// Borrowed view of a contiguous range of samples.
#[derive(Clone, Copy, Debug)]
pub struct Samples<'a> {
    dims: [usize; 3],
    y: &'a [f64],
    x: &'a [f64],
}

impl<'a> Samples<'a> {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    fn p(&self) -> usize {
        self.dims[0] * self.dims[1] * self.dims[2]
    }

    pub fn responses(&self) -> &'a [f64] {
        self.y
    }

    pub fn design(&self, i: usize) -> Tensor3 {
        let p = self.p();
        Tensor3::from_vec(self.dims, self.x[i * p..(i + 1) * p].to_vec()).expect("sizes agree")
    }

    /// `⟨t, X_i⟩` for every sample.
    pub fn predictions(&self, t: &Tensor3) -> Result<Vec<f64>> {
        self.check(t)?;
        let (p, n) = (self.p(), self.n());
        let mut out = vec![0.0; n];
        gemm(
            1.0,
            MatRef::col_major(self.x, p, n).t(),
            MatRef::col_major(t.as_slice(), p, 1),
            0.0,
            MatMut::col_major(&mut out, n, 1),
        );
        Ok(out)
    }

    /// `Σ_i w_i X_i`.
    pub fn weighted_sum(&self, w: &[f64]) -> Result<Tensor3> {
        if w.len() != self.n() {
            return Err(shape(format!("{} weights for {} samples", w.len(), self.n())));
        }
        let (p, n) = (self.p(), self.n());
        let mut out = vec![0.0; p];
        gemm(
            1.0,
            MatRef::col_major(self.x, p, n),
            MatRef::col_major(w, n, 1),
            0.0,
            MatMut::col_major(&mut out, p, 1),
        );
        Tensor3::from_vec(self.dims, out)
    }

    /// `(1/n) Σ_i X_i`.
    pub fn mean_design(&self) -> Tensor3 {
        let w = vec![1.0 / self.n() as f64; self.n()];
        self.weighted_sum(&w).expect("weights sized to samples")
    }

    /// `Σ_i ‖X_i‖_F²`.
    pub fn design_energy(&self) -> f64 {
        crate::tensor::dot(self.x, self.x)
    }

    fn check(&self, t: &Tensor3) -> Result<()> {
        if t.dims() != self.dims {
            return Err(shape(format!("tensor dims {:?} vs design dims {:?}", t.dims(), self.dims)));
        }
        Ok(())
    }
}

/// Initial estimate handed to the pipelines: the tensor used in the debias
/// step and the factors the power iteration starts from.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialEstimate {
    pub tensor: Tensor3,
    pub factors: [Matrix; 3],
}

impl InitialEstimate {
    /// Truncates `tensor` to Tucker rank `ranks` by HOSVD; the truncation
    /// and its factors form the initial estimate.
    pub fn from_tensor(tensor: Tensor3, ranks: [usize; 3]) -> Result<Self> {
        let f = hosvd(&tensor, ranks)?;
        Ok(InitialEstimate {
            tensor: tensor.project(f.factor_refs())?,
            factors: f.factors,
        })
    }

    pub fn factor_refs(&self) -> [&Matrix; 3] {
        [&self.factors[0], &self.factors[1], &self.factors[2]]
    }

    pub fn ranks(&self) -> [usize; 3] {
        [self.factors[0].cols(), self.factors[1].cols(), self.factors[2].cols()]
    }
}

impl From<TuckerFactors> for InitialEstimate {
    fn from(f: TuckerFactors) -> Self {
        InitialEstimate {
            tensor: f.reconstruct(),
            factors: f.factors,
        }
    }
}

/// `σ̂ = ((1/(nP)) Σ_i ‖X_i‖_F²)^{1/2}`.
pub fn sigma_hat(data: Samples<'_>) -> f64 {
    (data.design_energy() / (data.n() * data.p()) as f64).sqrt()
}

/// Which residuals enter `σ̂_ξ`.
#[derive(Clone, Copy, Debug)]
pub enum ResidualMode<'a> {
    /// `(1/n) Σ_i (y_i − ⟨T_init, X_i⟩)²`.
    Pooled(&'a Tensor3),
    /// Samples `[0, n1)` use `second_init` and the rest use `first_init`.
    CrossFit {
        n1: usize,
        first_init: &'a Tensor3,
        second_init: &'a Tensor3,
    },
}

/// Residual-based estimate of the noise scale `σ_ξ`.
pub fn sigma_xi_hat(data: Samples<'_>, mode: ResidualMode<'_>) -> Result<f64> {
    let ss = match mode {
        ResidualMode::Pooled(t) => residuals(data, t)?.iter().map(|r| r * r).sum::<f64>(),
        ResidualMode::CrossFit {
            n1,
            first_init,
            second_init,
        } => {
            if n1 == 0 || n1 >= data.n() {
                return Err(invalid(format!("split point {n1} out of range")));
            }
            let (a, b) = split_samples(data, n1);
            let ra = residuals(a, second_init)?;
            let rb = residuals(b, first_init)?;
            ra.iter().chain(&rb).map(|r| r * r).sum::<f64>()
        }
    };
    Ok((ss / data.n() as f64).sqrt())
}

fn split_samples(data: Samples<'_>, n1: usize) -> (Samples<'_>, Samples<'_>) {
    let p = data.p();
    (
        Samples {
            dims: data.dims,
            y: &data.y[..n1],
            x: &data.x[..n1 * p],
        },
        Samples {
            dims: data.dims,
            y: &data.y[n1..],
            x: &data.x[n1 * p..],
        },
    )
}

fn residuals(data: Samples<'_>, t: &Tensor3) -> Result<Vec<f64>> {
    let mut r = data.predictions(t)?;
    for (ri, yi) in r.iter_mut().zip(data.y) {
        *ri = yi - *ri;
    }
    Ok(r)
}

fn debias_with_residuals(t_init: &Tensor3, data: Samples<'_>, sigma2: f64) -> Result<(Tensor3, Vec<f64>)> {
    if !(sigma2 > 0.0) || !sigma2.is_finite() {
        return Err(invalid(format!("design variance must be positive, got {sigma2}")));
    }
    let r = residuals(data, t_init)?;
    let mut out = t_init.clone();
    out.axpy(1.0 / (data.n() as f64 * sigma2), &data.weighted_sum(&r)?)?;
    Ok((out, r))
}

/// `T_init + (1/(nσ²)) Σ_i (y_i − ⟨T_init, X_i⟩) X_i`.
pub fn debias(t_init: &Tensor3, data: Samples<'_>, sigma2: f64) -> Result<Tensor3> {
    Ok(debias_with_residuals(t_init, data, sigma2)?.0)
}

/// Convenience initializer: HOOI applied to `(1/(nσ²)) Σ_i y_i X_i`.
///
/// Not a minimax-optimal estimator.
pub fn naive_init(data: Samples<'_>, ranks: [usize; 3], sigma2: f64) -> Result<TuckerFactors> {
    let zero = Tensor3::zeros(data.dims());
    let t = debias(&zero, data, sigma2)?;
    Ok(hooi(&t, ranks, HOOI_MAX_ITERS, HOOI_TOL)?.factors)
}

/// Sample-size requirement `n ≥ max{κ²p̄/λ̲², p̄r̄}` with unit constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SampleSizeReport {
    pub n: usize,
    /// `κ²p̄/λ̲²`.
    pub snr_term: f64,
    /// `p̄r̄`.
    pub dimension_term: f64,
    pub pass: bool,
}

pub fn sample_size_check(
    dims: [usize; 3],
    ranks: [usize; 3],
    n: usize,
    kappa: f64,
    lambda_min: f64,
) -> SampleSizeReport {
    let pbar = *dims.iter().max().expect("dims") as f64;
    let rbar = *ranks.iter().max().expect("ranks") as f64;
    let snr_term = kappa * kappa * pbar / (lambda_min * lambda_min);
    let dimension_term = pbar * rbar;
    SampleSizeReport {
        n,
        snr_term,
        dimension_term,
        pass: n as f64 >= snr_term.max(dimension_term),
    }
}

fn check_init(data: &RegressionData, init_dims: [usize; 3]) -> Result<()> {
    if init_dims != data.dims() {
        return Err(shape(format!(
            "initial estimate dims {init_dims:?} vs data dims {:?}",
            data.dims()
        )));
    }
    Ok(())
}

/// Fitted regression estimate, reusable across loadings.
#[derive(Clone, Debug)]
pub struct RegressionFit {
    pub t_hat: Tensor3,
    /// One factor triple per half (a single triple without splitting).
    pub factors: Vec<[Matrix; 3]>,
    /// Index into `factors` used for `ŝ_A`.
    pub variance_factors: usize,
    pub sigma_xi_hat: f64,
    pub sigma_hat: f64,
    pub n: usize,
    pub regime: Regime,
}

impl RegressionFit {
    /// Point estimate, standard error and interval for `⟨T, A⟩`.
    pub fn infer(&self, a: &Tensor3, alpha: f64) -> Result<InferenceResult> {
        check_alpha(alpha)?;
        let t_hat = &self.t_hat;
        if a.dims() != t_hat.dims() {
            return Err(shape(format!(
                "loading dims {:?} vs data dims {:?}",
                a.dims(),
                t_hat.dims()
            )));
        }
        let estimate = a.inner(t_hat)?;
        let vf = &self.factors[self.variance_factors];
        let us = [&vf[0], &vf[1], &vf[2]];
        let s_a = s_a_hat(a, us, t_hat)?;
        require_aligned(s_a, a)?;
        let std_error = self.sigma_xi_hat / self.sigma_hat * s_a / (self.n as f64).sqrt();
        let za = z_alpha(alpha);
        let fitted = TuckerFactors {
            core: t_hat.multilinear_t(us)?,
            factors: vf.clone(),
        };
        let mut diagnostics = Diagnostics::evaluate(a, &fitted, self.regime);
        diagnostics.sample_size = diagnostics.spectral.map(|s| {
            sample_size_check(t_hat.dims(), fitted.ranks(), self.n, s.kappa, s.lambda_min)
        });
        Ok(InferenceResult {
            estimate,
            sigma_xi_hat: Some(self.sigma_xi_hat),
            sigma_hat: self.sigma_hat,
            s_a_hat: s_a,
            std_error,
            z: standardized(estimate, std_error),
            z_alpha: za,
            ci: (estimate - za * std_error, estimate + za * std_error),
            alpha,
            n: Some(self.n),
            t_hat: t_hat.clone(),
            factor_estimates: self.factors.clone(),
            diagnostics,
        })
    }
}

fn design_variance(data: Samples<'_>, sigma2: Option<f64>) -> Result<f64> {
    match sigma2 {
        Some(s) if s > 0.0 && s.is_finite() => Ok(s),
        Some(s) => Err(invalid(format!("design variance must be positive, got {s}"))),
        None => {
            let s = sigma_hat(data);
            if s > 0.0 {
                Ok(s * s)
            } else {
                Err(invalid("all design tensors are zero"))
            }
        }
    }
}

/// Estimation without sample splitting.
///
/// Debias with `init.tensor`, run two power iterations from `init.factors`
/// and project. When `sigma2` is `None` the design variance is estimated
/// from the data.
pub fn fit_no_split(
    data: &RegressionData,
    init: &InitialEstimate,
    sigma2: Option<f64>,
) -> Result<RegressionFit> {
    check_init(data, init.tensor.dims())?;
    let samples = data.samples();
    let s2 = design_variance(samples, sigma2)?;
    let ranks = init.ranks();
    let (unbs, resid) = debias_with_residuals(&init.tensor, samples, s2)?;
    let sigma_xi = (resid.iter().map(|r| r * r).sum::<f64>() / data.n() as f64).sqrt();
    let u1 = power_iteration_step(&unbs, init.factor_refs(), ranks)?;
    let u2 = power_iteration_step(&unbs, [&u1[0], &u1[1], &u1[2]], ranks)?;
    let t_hat = unbs.project([&u2[0], &u2[1], &u2[2]])?;
    Ok(RegressionFit {
        t_hat,
        factors: vec![u2],
        variance_factors: 0,
        sigma_xi_hat: sigma_xi,
        sigma_hat: s2.sqrt(),
        n: data.n(),
        regime: Regime::General,
    })
}

/// Full pipeline without sample splitting; see [`fit_no_split`].
pub fn infer_no_split(
    data: &RegressionData,
    init: &InitialEstimate,
    a: &Tensor3,
    alpha: f64,
    sigma2: Option<f64>,
) -> Result<InferenceResult> {
    check_alpha(alpha)?;
    if a.dims() != data.dims() {
        return Err(shape(format!("loading dims {:?} vs data dims {:?}", a.dims(), data.dims())));
    }
    fit_no_split(data, init, sigma2)?.infer(a, alpha)
}

/// One of the two halves in the split pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    First,
    Second,
}

/// Settings for [`infer_split`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitOptions {
    /// Size of the first half; defaults to `⌊n/2⌋`.
    pub n1: Option<usize>,
    /// Known design variance; estimated from all samples when `None`.
    pub sigma2: Option<f64>,
    /// Which half's factors enter `ŝ_A`.
    pub variance_half: Half,
}

impl Default for SplitOptions {
    fn default() -> Self {
        SplitOptions {
            n1: None,
            sigma2: None,
            variance_half: Half::First,
        }
    }
}

/// Estimation with sample splitting.
///
/// `init_fn` is called once per half with that half's samples. Half I is
/// debiased with half II's initial tensor and refined from half II's factors,
/// and vice versa; the projected halves are averaged with weights `n_h/n`.
pub fn fit_split<F>(data: &RegressionData, opts: SplitOptions, init_fn: F) -> Result<RegressionFit>
where
    F: Fn(Samples<'_>, Half) -> Result<InitialEstimate>,
{
    let n = data.n();
    let n1 = opts.n1.unwrap_or(n / 2);
    let (first, second) = data.split_at(n1)?;
    let init_first = init_fn(first, Half::First)?;
    let init_second = init_fn(second, Half::Second)?;
    check_init(data, init_first.tensor.dims())?;
    check_init(data, init_second.tensor.dims())?;
    let ranks = init_first.ranks();
    if init_second.ranks() != ranks {
        return Err(shape(format!(
            "initial ranks differ between halves: {ranks:?} vs {:?}",
            init_second.ranks()
        )));
    }
    let s2 = design_variance(data.samples(), opts.sigma2)?;

    let (unbs_first, r_first) = debias_with_residuals(&init_second.tensor, first, s2)?;
    let (unbs_second, r_second) = debias_with_residuals(&init_first.tensor, second, s2)?;
    let u_first = power_iteration_step(&unbs_first, init_second.factor_refs(), ranks)?;
    let u_second = power_iteration_step(&unbs_second, init_first.factor_refs(), ranks)?;

    let w1 = first.n() as f64 / n as f64;
    let w2 = second.n() as f64 / n as f64;
    let mut t_hat = unbs_first
        .project([&u_first[0], &u_first[1], &u_first[2]])?
        .scale(w1);
    t_hat.axpy(w2, &unbs_second.project([&u_second[0], &u_second[1], &u_second[2]])?)?;

    let ss: f64 = r_first.iter().chain(&r_second).map(|r| r * r).sum();
    Ok(RegressionFit {
        t_hat,
        factors: vec![u_first, u_second],
        variance_factors: match opts.variance_half {
            Half::First => 0,
            Half::Second => 1,
        },
        sigma_xi_hat: (ss / n as f64).sqrt(),
        sigma_hat: s2.sqrt(),
        n,
        regime: Regime::LowRankSplitStat,
    })
}

/// Full pipeline with sample splitting; see [`fit_split`].
pub fn infer_split<F>(
    data: &RegressionData,
    opts: SplitOptions,
    init_fn: F,
    a: &Tensor3,
    alpha: f64,
) -> Result<InferenceResult>
where
    F: Fn(Samples<'_>, Half) -> Result<InitialEstimate>,
{
    check_alpha(alpha)?;
    if a.dims() != data.dims() {
        return Err(shape(format!("loading dims {:?} vs data dims {:?}", a.dims(), data.dims())));
    }
    fit_split(data, opts, init_fn)?.infer(a, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sample_size_grid_arithmetic() {
        let r = sample_size_check([40, 40, 40], [3, 3, 3], 1518, 1.0, 1.0);
        assert_eq!((r.snr_term, r.dimension_term), (40.0, 120.0));
        assert!(r.pass);
        assert!(!sample_size_check([40, 40, 40], [3, 3, 3], 1, 1.0, 1.0).pass);
        let doubled = sample_size_check([40, 40, 40], [3, 3, 3], 1, 2.0, 1.0);
        assert_eq!(doubled.snr_term, 4.0 * r.snr_term);
    }

    #[test]
    fn split_bounds() {
        let d = RegressionData::new([1, 1, 2], vec![1.0, 2.0], vec![0.0; 4]).unwrap();
        assert!(d.split_at(0).is_err());
        assert!(d.split_at(2).is_err());
        assert!(d.split_at(1).is_ok());
    }

    #[test]
    fn rejects_mismatched_designs() {
        assert!(RegressionData::new([2, 2, 2], vec![1.0], vec![0.0; 7]).is_err());
        assert!(RegressionData::new([2, 2, 2], vec![], vec![]).is_err());
    }
}
