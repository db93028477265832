//! Tensor PCA `Y = T + Z`: HOSVD start, two power iterations, projection,
//! residual noise estimate and confidence interval.

use crate::error::{invalid, shape, Result};
use crate::inference::{
    check_alpha, require_aligned, s_a_hat, standardized, Diagnostics, InferenceResult,
};
use crate::manifold::Regime;
use crate::matrix::Matrix;
use crate::stats::z_alpha;
use crate::tensor::Tensor3;
use crate::tucker::{hosvd, power_iteration_step, SpectralSummary, TuckerFactors};

/// Observed tensor and target Tucker ranks.
#[derive(Clone, Debug)]
pub struct PcaObservation {
    pub y: Tensor3,
    pub ranks: [usize; 3],
}

impl PcaObservation {
    pub fn new(y: Tensor3, ranks: [usize; 3]) -> Result<Self> {
        let dims = y.dims();
        if (0..3).any(|j| ranks[j] == 0 || ranks[j] > dims[j]) {
            return Err(invalid(format!("ranks {ranks:?} do not fit dims {dims:?}")));
        }
        if y.as_slice().iter().any(|v| !v.is_finite()) {
            return Err(invalid("observation has a non-finite entry"));
        }
        Ok(PcaObservation { y, ranks })
    }
}

/// `σ̂ = (‖Y − Y ×₁P_{U₁} ×₂P_{U₂} ×₃P_{U₃}‖_F² / (p₁p₂p₃))^{1/2}`.
pub fn pca_sigma_hat(y: &Tensor3, factors: [&Matrix; 3]) -> Result<f64> {
    let resid = y.sub(&y.project(factors)?)?;
    Ok((resid.frob_norm_sq() / y.len() as f64).sqrt())
}

/// Which SNR requirement to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SnrRegime {
    /// `λ̲ ≥ max{κ p̄^{1/2}, p̄^{3/4} r̄^{1/2} log p̄}`.
    LowRank,
    /// `λ̲ ≥ max{κ p̄^{1/2}, p̄ r̄^{1/2}}`.
    General,
}

/// SNR requirement with unit constant.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrReport {
    pub regime: SnrRegime,
    pub lambda_min: f64,
    /// `κ p̄^{1/2}`.
    pub condition_term: f64,
    /// `p̄^{3/4} r̄^{1/2} log p̄` or `p̄ r̄^{1/2}`.
    pub dimension_term: f64,
    pub pass: bool,
}

pub fn snr_check(
    summary: &SpectralSummary,
    dims: [usize; 3],
    ranks: [usize; 3],
    regime: SnrRegime,
) -> SnrReport {
    let pbar = *dims.iter().max().expect("dims") as f64;
    let rbar = *ranks.iter().max().expect("ranks") as f64;
    let condition_term = summary.kappa * pbar.sqrt();
    let dimension_term = match regime {
        SnrRegime::LowRank => pbar.powf(0.75) * rbar.sqrt() * pbar.ln(),
        SnrRegime::General => pbar * rbar.sqrt(),
    };
    SnrReport {
        regime,
        lambda_min: summary.lambda_min,
        condition_term,
        dimension_term,
        pass: summary.lambda_min >= condition_term.max(dimension_term),
    }
}

/// Fitted low-rank estimate, reusable across loadings.
#[derive(Clone, Debug)]
pub struct PcaFit {
    pub t_hat: Tensor3,
    pub factors: [Matrix; 3],
    pub sigma_hat: f64,
    pub ranks: [usize; 3],
}

/// HOSVD start, two power iterations and projection. A known noise scale
/// replaces `σ̂`.
pub fn fit_pca(obs: &PcaObservation, sigma: Option<f64>) -> Result<PcaFit> {
    let y = &obs.y;
    let ranks = obs.ranks;
    if let Some(s) = sigma {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(invalid(format!("noise scale must be nonnegative, got {s}")));
        }
    }
    let init = hosvd(y, ranks)?;
    let u1 = power_iteration_step(y, init.factor_refs(), ranks)?;
    let factors = power_iteration_step(y, [&u1[0], &u1[1], &u1[2]], ranks)?;
    let t_hat = y.project([&factors[0], &factors[1], &factors[2]])?;
    let sigma_hat = match sigma {
        Some(s) => s,
        None => (y.sub(&t_hat)?.frob_norm_sq() / y.len() as f64).sqrt(),
    };
    Ok(PcaFit {
        t_hat,
        factors,
        sigma_hat,
        ranks,
    })
}

impl PcaFit {
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
        let us = [&self.factors[0], &self.factors[1], &self.factors[2]];
        let estimate = a.inner(t_hat)?;
        let s_a = s_a_hat(a, us, t_hat)?;
        require_aligned(s_a, a)?;
        let std_error = self.sigma_hat * s_a;
        let za = z_alpha(alpha);
        let fitted = TuckerFactors {
            core: t_hat.multilinear_t(us)?,
            factors: self.factors.clone(),
        };
        let mut diagnostics = Diagnostics::evaluate(a, &fitted, Regime::PcaGeneral);
        diagnostics.snr = diagnostics
            .spectral
            .map(|s| snr_check(&s, t_hat.dims(), self.ranks, SnrRegime::General));
        Ok(InferenceResult {
            estimate,
            sigma_xi_hat: None,
            sigma_hat: self.sigma_hat,
            s_a_hat: s_a,
            std_error,
            z: standardized(estimate, std_error),
            z_alpha: za,
            ci: (estimate - za * std_error, estimate + za * std_error),
            alpha,
            n: None,
            t_hat: t_hat.clone(),
            factor_estimates: vec![self.factors.clone()],
            diagnostics,
        })
    }
}

/// Inference for `⟨T, A⟩` from one PCA observation, with `σ` estimated.
pub fn infer_pca(obs: &PcaObservation, a: &Tensor3, alpha: f64) -> Result<InferenceResult> {
    infer_pca_with_sigma(obs, a, alpha, None)
}

/// As [`infer_pca`]; a known noise scale replaces `σ̂` in the interval.
pub fn infer_pca_with_sigma(
    obs: &PcaObservation,
    a: &Tensor3,
    alpha: f64,
    sigma: Option<f64>,
) -> Result<InferenceResult> {
    check_alpha(alpha)?;
    if a.dims() != obs.y.dims() {
        return Err(shape(format!(
            "loading dims {:?} vs data dims {:?}",
            a.dims(),
            obs.y.dims()
        )));
    }
    fit_pca(obs, sigma)?.infer(a, alpha)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn summary(lambda: f64, kappa: f64) -> SpectralSummary {
        SpectralSummary {
            lambda_min: lambda,
            lambda_max: lambda * kappa,
            kappa,
        }
    }

    #[test]
    fn general_regime_terms() {
        let r = snr_check(&summary(100.0, 1.0), [100; 3], [1; 3], SnrRegime::General);
        assert!((r.condition_term - 10.0).abs() < 1e-12);
        assert!((r.dimension_term - 100.0).abs() < 1e-12);
        assert!(r.pass);
        assert!(!snr_check(&summary(1.0, 1.0), [100; 3], [1; 3], SnrRegime::General).pass);
    }

    #[test]
    fn thresholds_grow_with_dimension() {
        for regime in [SnrRegime::General, SnrRegime::LowRank] {
            let small = snr_check(&summary(1.0, 2.0), [20; 3], [2; 3], regime);
            let big = snr_check(&summary(1.0, 2.0), [40; 3], [2; 3], regime);
            assert!(big.condition_term > small.condition_term);
            assert!(big.dimension_term > small.dimension_term);
        }
    }
}
