//! Result types shared by the regression and PCA pipelines.

use crate::error::{invalid, Error, Result};
use crate::manifold::{
    alignment_check, incoherence_ratio, variance_component, AlignmentReport, IncoherenceVariant,
    Regime,
};
use crate::matrix::Matrix;
use crate::pca::SnrReport;
use crate::regression::SampleSizeReport;
use crate::tensor::Tensor3;
use crate::tucker::{spectral_summary, SpectralSummary, TuckerFactors};

/// Advisory diagnostics evaluated at the fitted factors. Never fatal.
#[derive(Clone, Debug, Default)]
pub struct Diagnostics {
    pub spectral: Option<SpectralSummary>,
    /// `None` when a ratio is undefined (loading inside the factor span).
    pub incoherence_core: Option<[f64; 3]>,
    pub incoherence_right: Option<[f64; 3]>,
    pub alignment: Option<AlignmentReport>,
    pub sample_size: Option<SampleSizeReport>,
    pub snr: Option<SnrReport>,
}

impl Diagnostics {
    pub(crate) fn evaluate(a: &Tensor3, fitted: &TuckerFactors, regime: Regime) -> Diagnostics {
        Diagnostics {
            spectral: spectral_summary(&fitted.core, fitted.ranks()).ok(),
            incoherence_core: incoherence_ratio(a, fitted, IncoherenceVariant::CoreProjected).ok(),
            incoherence_right: incoherence_ratio(a, fitted, IncoherenceVariant::RightProjected).ok(),
            alignment: alignment_check(a, fitted, regime).ok(),
            sample_size: None,
            snr: None,
        }
    }
}

/// Point estimate, plug-in variances and confidence interval for `⟨T, A⟩`.
#[derive(Clone, Debug)]
pub struct InferenceResult {
    /// `⟨A, T̂⟩`.
    pub estimate: f64,
    /// Noise scale estimate; regression only.
    pub sigma_xi_hat: Option<f64>,
    /// Design scale (regression) or noise scale (PCA) used in the interval.
    pub sigma_hat: f64,
    pub s_a_hat: f64,
    pub std_error: f64,
    /// `estimate / std_error`.
    pub z: f64,
    /// Critical value `z_{α/2}`.
    pub z_alpha: f64,
    pub ci: (f64, f64),
    pub alpha: f64,
    /// Sample size; regression only.
    pub n: Option<usize>,
    pub t_hat: Tensor3,
    /// Fitted factors; two sets for the split pipeline (half I, half II).
    pub factor_estimates: Vec<[Matrix; 3]>,
    pub diagnostics: Diagnostics,
}

impl InferenceResult {
    pub fn ci_length(&self) -> f64 {
        self.ci.1 - self.ci.0
    }
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha < 1.0 {
        Ok(())
    } else {
        Err(invalid(format!("alpha must lie in (0, 1), got {alpha}")))
    }
}

/// Relative size of `ŝ_A` below which the loading counts as normal to the
/// tangent space.
const S_A_ZERO_TOL: f64 = 1e-13;

/// `ŝ_A` from fitted factors and the fitted tensor (core `T̂ ×₁Û₁ᵀ ×₂Û₂ᵀ ×₃Û₃ᵀ`).
pub fn s_a_hat(a: &Tensor3, factors: [&Matrix; 3], t_hat: &Tensor3) -> Result<f64> {
    let core = t_hat.multilinear_t(factors)?;
    let fitted = TuckerFactors {
        core,
        factors: [factors[0].clone(), factors[1].clone(), factors[2].clone()],
    };
    Ok(variance_component(a, &fitted)?.sqrt())
}

pub(crate) fn require_aligned(s_a: f64, a: &Tensor3) -> Result<()> {
    if !(s_a > S_A_ZERO_TOL * a.frob_norm()) {
        return Err(Error::AlignmentDegenerate(format!(
            "estimated variance component is {s_a:.3e}; the loading has no component in the tangent space"
        )));
    }
    Ok(())
}

pub(crate) fn standardized(estimate: f64, se: f64) -> f64 {
    if se > 0.0 {
        estimate / se
    } else if estimate == 0.0 {
        0.0
    } else {
        estimate.signum() * f64::INFINITY
    }
}
