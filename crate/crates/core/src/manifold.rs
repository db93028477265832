//! Tangent space of the fixed-Tucker-rank manifold.
//!
//! The projector onto the tangent space at `T = G ×₁U₁ ×₂U₂ ×₃U₃` is
//!
//! ```text
//! P(A) = A ×₁P_{U₁} ×₂P_{U₂} ×₃P_{U₃}
//!      + Σ_j Mat_j⁻¹( P_{U_j⊥} A_j (U_{j+2}⊗U_{j+1}) W_j W_jᵀ (U_{j+2}⊗U_{j+1})ᵀ )
//! ```
//!
//! with `W_j` an orthonormal basis of the row space of `Mat_j(G)`. Kronecker
//! factors are never formed; they are applied as mode products.

use crate::error::{Error, Result};
use crate::linalg::qr_orthonormal;
use crate::matrix::Matrix;
use crate::tensor::{Mode, Tensor3};
use crate::tucker::{contract_others, spectral_summary, TuckerFactors};

/// `P(A)` split into its four mutually orthogonal parts.
#[derive(Clone, Debug)]
pub struct TangentDecomposition {
    pub core_part: Tensor3,
    pub mode_parts: [Tensor3; 3],
}

impl TangentDecomposition {
    pub fn total(&self) -> Tensor3 {
        let mut t = self.core_part.clone();
        for part in &self.mode_parts {
            t.axpy(1.0, part).expect("parts share dims");
        }
        t
    }
}

fn check_dims(a: &Tensor3, f: &TuckerFactors) -> Result<()> {
    if a.dims() != f.dims() {
        return Err(Error::Shape(format!(
            "loading dims {:?} do not match factor dims {:?}",
            a.dims(),
            f.dims()
        )));
    }
    Ok(())
}

/// Row-space bases `W_j = QR(Mat_j(G)ᵀ)` of the core unfoldings.
pub fn core_row_spaces(core: &Tensor3) -> Result<[Matrix; 3]> {
    let mut w = Vec::with_capacity(3);
    for mode in Mode::ALL {
        w.push(qr_orthonormal(&core.matricize(mode).transpose())?);
    }
    Ok(w.try_into().expect("three modes"))
}

/// Per-mode pieces shared by the projector, the variance and the diagnostics.
struct ModePieces {
    /// `A_j (U_{j+2}⊗U_{j+1})`, `p_j × r_{j+1}r_{j+2}`.
    b: Matrix,
    /// `U_jᵀ C` with `C = B W Wᵀ`.
    utc: Matrix,
    /// `C − U_j U_jᵀ C`.
    d: Matrix,
}

fn mode_pieces(a: &Tensor3, f: &TuckerFactors, w: &[Matrix; 3], mode: Mode) -> Result<ModePieces> {
    let j = mode.index();
    let u = &f.factors[j];
    let b = contract_others(a, f.factor_refs(), mode)?;
    let c = b.matmul(&w[j])?.matmul_tr(&w[j])?;
    let utc = u.tr_matmul(&c)?;
    let d = c.sub(&u.matmul(&utc)?)?;
    Ok(ModePieces { b, utc, d })
}

/// Orthogonal projection of `a` onto the tangent space at `f`.
pub fn project_tangent(a: &Tensor3, f: &TuckerFactors) -> Result<TangentDecomposition> {
    check_dims(a, f)?;
    let w = core_row_spaces(&f.core)?;
    let us = f.factor_refs();
    let core_part = a.project(us)?;
    let ranks = f.ranks();
    let dims = f.dims();
    let mut parts = Vec::with_capacity(3);
    for mode in Mode::ALL {
        let j = mode.index();
        let pieces = mode_pieces(a, f, &w, mode)?;
        let mut small = ranks;
        small[j] = dims[j];
        let t = Tensor3::unmatricize(&pieces.d, mode, small)?;
        let (n1, n2) = (mode.next(), mode.after_next());
        let t = t
            .mode_product(us[n1.index()], n1)?
            .mode_product(us[n2.index()], n2)?;
        parts.push(t);
    }
    Ok(TangentDecomposition {
        core_part,
        mode_parts: parts.try_into().expect("three modes"),
    })
}

/// `s_A² = Σ_j ‖P_{U_j⊥} A_j P_{(U_{j+2}⊗U_{j+1})G_jᵀ}‖_F² + ‖A ×₁U₁ᵀ ×₂U₂ᵀ ×₃U₃ᵀ‖_F²`.
pub fn variance_component(a: &Tensor3, f: &TuckerFactors) -> Result<f64> {
    check_dims(a, f)?;
    let w = core_row_spaces(&f.core)?;
    let mut total = a.multilinear_t(f.factor_refs())?.frob_norm_sq();
    for mode in Mode::ALL {
        total += mode_pieces(a, f, &w, mode)?.d.frob_norm_sq();
    }
    Ok(total)
}

/// Right projector used in the incoherence ratios.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IncoherenceVariant {
    /// `P_{U_{j+2}} ⊗ P_{U_{j+1}}`.
    CoreProjected,
    /// `P_{(U_{j+2}⊗U_{j+1})G_jᵀ}`.
    RightProjected,
}

/// Relative size below which a denominator counts as zero.
const DEGENERATE_TOL: f64 = 1e-12;

/// Per-mode `‖P_{U_j} A_j P_R‖_F / ‖P_{U_j⊥} A_j P_R‖_F`.
pub fn incoherence_ratio(
    a: &Tensor3,
    f: &TuckerFactors,
    variant: IncoherenceVariant,
) -> Result<[f64; 3]> {
    check_dims(a, f)?;
    let w = core_row_spaces(&f.core)?;
    let mut out = [0.0; 3];
    for mode in Mode::ALL {
        let j = mode.index();
        let u = &f.factors[j];
        let pieces = mode_pieces(a, f, &w, mode)?;
        let (num, den) = match variant {
            IncoherenceVariant::RightProjected => (pieces.utc.frob_norm(), pieces.d.frob_norm()),
            IncoherenceVariant::CoreProjected => {
                let utb = u.tr_matmul(&pieces.b)?;
                let perp = pieces.b.sub(&u.matmul(&utb)?)?;
                (utb.frob_norm(), perp.frob_norm())
            }
        };
        out[j] = if num == 0.0 {
            0.0
        } else if den <= DEGENERATE_TOL * (num + den) {
            return Err(Error::AlignmentDegenerate(format!(
                "mode-{} component of the loading lies entirely in the span of U_{}",
                j + 1,
                j + 1
            )));
        } else {
            num / den
        };
    }
    Ok(out)
}

/// Which alignment condition to evaluate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Regime {
    /// Regression without splitting, general functionals.
    General,
    /// Regression with splitting, statistically optimal sample size.
    LowRankSplitStat,
    /// Regression with splitting, computationally optimal sample size.
    LowRankSplitComp,
    /// Tensor PCA, low-rank functionals.
    PcaLowRank,
    /// Tensor PCA, general functionals.
    PcaGeneral,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::General,
        Regime::LowRankSplitStat,
        Regime::LowRankSplitComp,
        Regime::PcaLowRank,
        Regime::PcaGeneral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Regime::General => "general",
            Regime::LowRankSplitStat => "low-rank-split-stat",
            Regime::LowRankSplitComp => "low-rank-split-comp",
            Regime::PcaLowRank => "pca-low-rank",
            Regime::PcaGeneral => "pca-general",
        }
    }

    pub fn parse(s: &str) -> Option<Regime> {
        Regime::ALL.into_iter().find(|r| r.name() == s)
    }
}

/// One right-hand-side term of an alignment condition.
#[derive(Clone, Debug, PartialEq)]
pub struct ThresholdTerm {
    pub label: String,
    pub value: f64,
}

/// Alignment condition evaluated with unit constants.
#[derive(Clone, Debug, PartialEq)]
pub struct AlignmentReport {
    pub regime: Regime,
    pub s_a: f64,
    pub terms: Vec<ThresholdTerm>,
    pub threshold: f64,
    /// `s_A / threshold`.
    pub ratio: f64,
    pub pass: bool,
}

/// Evaluates the alignment condition of `regime` for loading `a` at `f`.
///
/// `p̄ = max p_j`, `r̄ = max r_j`, and `λ̲` is the smallest positive singular
/// value of the core unfoldings.
pub fn alignment_check(a: &Tensor3, f: &TuckerFactors, regime: Regime) -> Result<AlignmentReport> {
    check_dims(a, f)?;
    let s_a = variance_component(a, f)?.sqrt();
    let pbar = *f.dims().iter().max().expect("dims") as f64;
    let rbar = *f.ranks().iter().max().expect("ranks") as f64;
    let lam = spectral_summary(&f.core, f.ranks())?.lambda_min;
    let a_norm = a.frob_norm();
    let mut one = [0.0; 3];
    let mut two = [0.0; 3];
    for mode in Mode::ALL {
        let j = mode.index();
        one[j] = a.mode_product_t(&f.factors[j], mode)?.frob_norm();
        two[j] = contract_others(a, f.factor_refs(), mode)?.frob_norm();
    }
    let mut terms = Vec::new();
    let mut per_mode = |name: &str, coef: f64, vals: &[f64; 3]| {
        for (j, v) in vals.iter().enumerate() {
            terms.push(ThresholdTerm {
                label: format!("{name}_{}", j + 1),
                value: coef * v,
            });
        }
    };
    let sq = f64::sqrt;
    match regime {
        Regime::General => {
            per_mode("rbar*pbar^-1/2*lam^-1*|AxU|", rbar / sq(pbar) / lam, &one);
        }
        Regime::LowRankSplitStat => {
            per_mode("lam^-2*|AxUxU|", 1.0 / (lam * lam), &two);
            per_mode("rbar^1/2*pbar^-1/2*lam^-1*|AxU|", sq(rbar) / sq(pbar) / lam, &one);
        }
        Regime::LowRankSplitComp => {
            per_mode("pbar^-1/2*lam^-1*|AxUxU|", 1.0 / sq(pbar) / lam, &two);
            per_mode("rbar*pbar^-3/4*lam^-1*|AxU|", rbar * pbar.powf(-0.75) / lam, &one);
        }
        Regime::PcaLowRank => {
            per_mode("pbar^-1/2*|AxUxU|", 1.0 / sq(pbar), &two);
            per_mode("rbar*pbar^-3/4*|AxU|", rbar * pbar.powf(-0.75), &one);
        }
        Regime::PcaGeneral => {
            per_mode("rbar*pbar^-1/2*|AxU|", rbar / sq(pbar), &one);
        }
    }
    let last = match regime {
        Regime::General => ("rbar*pbar^-1*lam^-2*|A|", rbar / pbar / (lam * lam)),
        Regime::LowRankSplitStat => ("pbar^-1*lam^-2*|A|", 1.0 / pbar / (lam * lam)),
        Regime::LowRankSplitComp => ("rbar*pbar^-3/2*lam^-2*|A|", rbar * pbar.powf(-1.5) / (lam * lam)),
        Regime::PcaLowRank => ("rbar*pbar^-3/2*|A|", rbar * pbar.powf(-1.5)),
        Regime::PcaGeneral => ("rbar*pbar^-1*|A|", rbar / pbar),
    };
    terms.push(ThresholdTerm {
        label: last.0.to_string(),
        value: last.1 * a_norm,
    });
    let threshold = terms.iter().map(|t| t.value).fold(0.0, f64::max);
    let ratio = if s_a == 0.0 {
        0.0
    } else if threshold == 0.0 {
        f64::INFINITY
    } else {
        s_a / threshold
    };
    Ok(AlignmentReport {
        regime,
        s_a,
        terms,
        threshold,
        ratio,
        pass: s_a > 0.0 && ratio >= 1.0,
    })
}

/// Noise description for [`minimax_ci_length`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum NoiseModel {
    Regression { sigma_xi: f64, sigma: f64, n: usize },
    Pca { sigma: f64 },
}

/// Structural factor of the minimax lower bound on CI length, with unit
/// constant: `(σ_ξ/(σ√n))·s_A` for regression and `σ·s_A` for PCA.
pub fn minimax_ci_length(s_a: f64, noise: NoiseModel) -> f64 {
    match noise {
        NoiseModel::Regression { sigma_xi, sigma, n } => sigma_xi / (sigma * (n as f64).sqrt()) * s_a,
        NoiseModel::Pca { sigma } => sigma * s_a,
    }
}
