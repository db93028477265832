//! Tucker factorizations: HOSVD, power iteration, HOOI and random signals.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};

use crate::error::{invalid, shape, Error, Result};
use crate::linalg::{self, orthonormality_defect, projector_distance, top_left_singular};
use crate::matrix::Matrix;
use crate::tensor::{Mode, Tensor3};

/// Core tensor and orthonormal factor matrices of `G ×₁U₁ ×₂U₂ ×₃U₃`.
#[derive(Clone, Debug, PartialEq)]
pub struct TuckerFactors {
    pub core: Tensor3,
    pub factors: [Matrix; 3],
}

/// Tolerance on `‖UᵀU − I‖_F` accepted by [`TuckerFactors::new`].
pub const ORTHONORMAL_TOL: f64 = 1e-8;

impl TuckerFactors {
    pub fn new(core: Tensor3, factors: [Matrix; 3]) -> Result<Self> {
        let r = core.dims();
        for (j, u) in factors.iter().enumerate() {
            if u.cols() != r[j] {
                return Err(shape(format!(
                    "factor {} has {} columns, core has rank {}",
                    j + 1,
                    u.cols(),
                    r[j]
                )));
            }
            if u.rows() < u.cols() {
                return Err(shape(format!("factor {} is wider than tall", j + 1)));
            }
            let defect = orthonormality_defect(u);
            if !(defect < ORTHONORMAL_TOL) {
                return Err(invalid(format!(
                    "factor {} is not orthonormal (defect {defect:.3e})",
                    j + 1
                )));
            }
        }
        Ok(TuckerFactors { core, factors })
    }

    pub fn ranks(&self) -> [usize; 3] {
        self.core.dims()
    }

    pub fn dims(&self) -> [usize; 3] {
        [self.factors[0].rows(), self.factors[1].rows(), self.factors[2].rows()]
    }

    pub fn factor_refs(&self) -> [&Matrix; 3] {
        [&self.factors[0], &self.factors[1], &self.factors[2]]
    }

    /// `G ×₁U₁ ×₂U₂ ×₃U₃`.
    pub fn reconstruct(&self) -> Tensor3 {
        self.core.multilinear(self.factor_refs()).expect("shapes checked at construction")
    }
}

/// Extremal singular values across the three unfoldings.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralSummary {
    pub lambda_min: f64,
    pub lambda_max: f64,
    pub kappa: f64,
}

fn check_ranks(dims: [usize; 3], ranks: [usize; 3]) -> Result<()> {
    for j in 0..3 {
        if ranks[j] == 0 || ranks[j] > dims[j] {
            return Err(invalid(format!(
                "rank {} in mode {} must be in 1..={}",
                ranks[j],
                j + 1,
                dims[j]
            )));
        }
    }
    Ok(())
}

/// Leading `r` left singular vectors of `Mat_j(t)`.
pub fn leading_subspace(t: &Tensor3, mode: Mode, r: usize) -> Result<Matrix> {
    let p = t.dims()[mode.index()];
    let cols = t.len() / p;
    if p < cols && t.len() >= 250_000 {
        let gram = t.mode_gram(mode);
        linalg::top_left_singular_from_gram(&gram, cols, r, || t.matricize(mode))
    } else {
        top_left_singular(&t.matricize(mode), r)
    }
}

/// Higher-order SVD truncated at `ranks`.
pub fn hosvd(y: &Tensor3, ranks: [usize; 3]) -> Result<TuckerFactors> {
    check_ranks(y.dims(), ranks)?;
    let mut us = Vec::with_capacity(3);
    for mode in Mode::ALL {
        us.push(leading_subspace(y, mode, ranks[mode.index()])?);
    }
    let factors: [Matrix; 3] = us.try_into().expect("three modes");
    let core = y.multilinear_t([&factors[0], &factors[1], &factors[2]])?;
    Ok(TuckerFactors { core, factors })
}

/// `Mat_j(y ×_{j+1} U_{j+1}ᵀ ×_{j+2} U_{j+2}ᵀ) = Mat_j(y)(U_{j+2} ⊗ U_{j+1})`.
pub fn contract_others(y: &Tensor3, factors: [&Matrix; 3], mode: Mode) -> Result<Matrix> {
    let a = mode.next();
    let b = mode.after_next();
    let c = y
        .mode_product_t(factors[a.index()], a)?
        .mode_product_t(factors[b.index()], b)?;
    Ok(c.matricize(mode))
}

/// One Jacobi-style power iteration: every mode is updated from the input
/// factors of the other two modes.
pub fn power_iteration_step(
    y: &Tensor3,
    factors_in: [&Matrix; 3],
    ranks: [usize; 3],
) -> Result<[Matrix; 3]> {
    check_ranks(y.dims(), ranks)?;
    for (j, u) in factors_in.iter().enumerate() {
        if u.rows() != y.dims()[j] {
            return Err(shape(format!(
                "factor {} has {} rows, tensor dimension is {}",
                j + 1,
                u.rows(),
                y.dims()[j]
            )));
        }
    }
    let mut out = Vec::with_capacity(3);
    for mode in Mode::ALL {
        let m = contract_others(y, factors_in, mode)?;
        out.push(top_left_singular(&m, ranks[mode.index()])?);
    }
    Ok(out.try_into().expect("three modes"))
}

/// Result of [`hooi`].
#[derive(Clone, Debug)]
pub struct HooiOutcome {
    pub factors: TuckerFactors,
    /// Number of power iterations performed after the HOSVD start.
    pub iterations: usize,
    pub converged: bool,
    /// Largest projector change `‖P_new − P_old‖_F` in the last iteration.
    pub last_change: f64,
}

pub const HOOI_MAX_ITERS: usize = 50;
pub const HOOI_TOL: f64 = 1e-10;

/// Higher-order orthogonal iteration from the HOSVD start.
///
/// Stops once the largest projector change drops below `tol`. An infinite
/// `tol` returns the HOSVD factors untouched.
pub fn hooi(y: &Tensor3, ranks: [usize; 3], max_iters: usize, tol: f64) -> Result<HooiOutcome> {
    let mut current = hosvd(y, ranks)?;
    if tol == f64::INFINITY {
        return Ok(HooiOutcome {
            factors: current,
            iterations: 0,
            converged: true,
            last_change: 0.0,
        });
    }
    let mut last_change = f64::INFINITY;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < max_iters {
        let next = power_iteration_step(y, current.factor_refs(), ranks)?;
        let mut change: f64 = 0.0;
        for (u, v) in next.iter().zip(&current.factors) {
            change = change.max(projector_distance(u, v)?);
        }
        iterations += 1;
        last_change = change;
        let core = y.multilinear_t([&next[0], &next[1], &next[2]])?;
        current = TuckerFactors { core, factors: next };
        if change < tol {
            converged = true;
            break;
        }
    }
    Ok(HooiOutcome {
        factors: current,
        iterations,
        converged,
        last_change,
    })
}

/// `λ̲ = min_j σ_{r_j}(Mat_j t)`, `λ̄ = max_j σ_1(Mat_j t)`, `κ = λ̄/λ̲`.
pub fn spectral_summary(t: &Tensor3, ranks: [usize; 3]) -> Result<SpectralSummary> {
    check_ranks(t.dims(), ranks)?;
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    for mode in Mode::ALL {
        let r = ranks[mode.index()];
        let s = mode_singular_values(t, mode);
        let s1 = s[0];
        let sr = s[r - 1];
        if !(s1 > 0.0) || sr < linalg::RANK_TOL * s1 {
            return Err(Error::DegenerateRank(format!(
                "mode-{} unfolding has sigma_{r} = {sr:.3e}",
                mode.index() + 1
            )));
        }
        lo = lo.min(sr);
        hi = hi.max(s1);
    }
    Ok(SpectralSummary {
        lambda_min: lo,
        lambda_max: hi,
        kappa: hi / lo,
    })
}

fn mode_singular_values(t: &Tensor3, mode: Mode) -> Vec<f64> {
    let m = t.matricize(mode);
    if m.rows() > m.cols() {
        linalg::singular_values(&m.transpose())
    } else {
        linalg::singular_values(&m)
    }
}

fn random_factor<R: Rng + ?Sized>(p: usize, r: usize, spike: Option<f64>, rng: &mut R) -> Result<Matrix> {
    let mut m = Matrix::from_fn(p, r, |_, _| StandardNormal.sample(rng));
    if let Some(v) = spike {
        m.set(0, 0, v);
    }
    top_left_singular(&m, r)
}

/// Random signal with superdiagonal core.
///
/// Diagonal core entries are uniform on `[lambda_lo, kappa·lambda_lo]`. Factors
/// are the left singular vectors of standard-normal `p_j × r` matrices; with
/// `coherent` set, the `(1,1)` entry of each such matrix is replaced by `√p̄`.
pub fn generate_signal<R: Rng + ?Sized>(
    dims: [usize; 3],
    ranks: [usize; 3],
    lambda_lo: f64,
    kappa: f64,
    coherent: bool,
    rng: &mut R,
) -> Result<(Tensor3, TuckerFactors)> {
    if dims.contains(&0) {
        return Err(invalid(format!("dimensions must be positive, got {dims:?}")));
    }
    check_ranks(dims, ranks)?;
    if ranks[0] != ranks[1] || ranks[1] != ranks[2] {
        return Err(invalid(format!(
            "a superdiagonal core needs equal ranks, got {ranks:?}"
        )));
    }
    if !(lambda_lo > 0.0) || !lambda_lo.is_finite() {
        return Err(invalid(format!("lambda_lo must be positive, got {lambda_lo}")));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(invalid(format!("kappa must be at least 1, got {kappa}")));
    }
    let r = ranks[0];
    let hi = kappa * lambda_lo;
    let diag: Vec<f64> = if kappa == 1.0 {
        vec![lambda_lo; r]
    } else {
        let dist = Uniform::new_inclusive(lambda_lo, hi).map_err(|e| invalid(e.to_string()))?;
        (0..r).map(|_| dist.sample(rng)).collect()
    };
    let pbar = *dims.iter().max().expect("three dims") as f64;
    let spike = coherent.then(|| pbar.sqrt());
    let u1 = random_factor(dims[0], r, spike, rng)?;
    let u2 = random_factor(dims[1], r, spike, rng)?;
    let u3 = random_factor(dims[2], r, spike, rng)?;
    let mut core = Tensor3::zeros(ranks);
    for (i, &d) in diag.iter().enumerate() {
        core.set(i, i, i, d);
    }
    let f = TuckerFactors::new(core, [u1, u2, u3])?;
    Ok((f.reconstruct(), f))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn kappa_one_gives_flat_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (t, f) = generate_signal([6, 7, 8], [2, 2, 2], 2.5, 1.0, false, &mut rng).unwrap();
        let s = spectral_summary(&t, f.ranks()).unwrap();
        assert!((s.lambda_min - 2.5).abs() < 1e-12);
        assert!((s.lambda_max - 2.5).abs() < 1e-12);
    }

    #[test]
    fn unequal_ranks_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert!(generate_signal([6, 7, 8], [2, 3, 2], 1.0, 1.0, false, &mut rng).is_err());
    }

    #[test]
    fn infinite_tol_is_plain_hosvd() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let y = Tensor3::from_fn([5, 4, 3], |_, _, _| StandardNormal.sample(&mut rng));
        let out = hooi(&y, [2, 2, 2], 50, f64::INFINITY).unwrap();
        assert_eq!(out.iterations, 0);
        assert_eq!(out.factors, hosvd(&y, [2, 2, 2]).unwrap());
    }
}
