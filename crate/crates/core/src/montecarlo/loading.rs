//! Loading tensors and the rank-one benchmark signal.

use rand::Rng;
use rand_distr::StandardNormal;

use super::config::LoadingSpec;
use crate::error::{invalid, Result};
use crate::matrix::Matrix;
use crate::tensor::Tensor3;
use crate::tucker::TuckerFactors;

/// Number of leading indices averaged along a mode of length `p`: `⌊2p^{1/4}⌋`.
pub fn lowrank_support(p: usize) -> usize {
    // sqrt(sqrt) is exact on perfect fourth powers, unlike powf(0.25)
    let m = (2.0 * (p as f64).sqrt().sqrt()).floor() as usize;
    m.clamp(1, p)
}

/// Builds the loading tensor. `rng` is only read by `full-rank-gaussian`.
pub fn build_loading<R: Rng + ?Sized>(
    spec: &LoadingSpec,
    dims: [usize; 3],
    rng: &mut R,
) -> Result<Tensor3> {
    let in_range = |k: &[usize; 3]| (0..3).all(|j| k[j] < dims[j]);
    match spec {
        LoadingSpec::Entrywise(k) => Tensor3::unit(dims, *k),
        LoadingSpec::Difference(a, b) => {
            if a == b {
                return Err(invalid("difference of an entry with itself"));
            }
            Tensor3::unit(dims, *a)?.sub(&Tensor3::unit(dims, *b)?)
        }
        LoadingSpec::LowRankAverage => {
            let m = dims.map(lowrank_support);
            let c = 1.0 / ((m[0] * m[1] * m[2]) as f64).sqrt();
            Ok(Tensor3::from_fn(dims, |i, j, k| {
                if i < m[0] && j < m[1] && k < m[2] {
                    c
                } else {
                    0.0
                }
            }))
        }
        LoadingSpec::FullRankGaussian => {
            let len = dims[0] * dims[1] * dims[2];
            let v: Vec<f64> = rng.sample_iter(StandardNormal).take(len).collect();
            let t = Tensor3::from_vec(dims, v)?;
            let norm = t.frob_norm();
            Ok(t.scale(1.0 / norm))
        }
        LoadingSpec::RowMean { k2, k3 } => {
            if !in_range(&[0, *k2, *k3]) {
                return Err(invalid(format!("rowmean({},{}) outside {dims:?}", k2 + 1, k3 + 1)));
            }
            let c = 1.0 / dims[0] as f64;
            Ok(Tensor3::from_fn(dims, |_, j, k| if j == *k2 && k == *k3 { c } else { 0.0 }))
        }
    }
}

/// Unit vector `(2p^{1/4}, 1, …, 1)/√(4√p + p − 1)`.
pub fn spike_vector(p: usize) -> Vec<f64> {
    let pf = p as f64;
    let norm = (4.0 * pf.sqrt() + pf - 1.0).sqrt();
    let mut u = vec![1.0 / norm; p];
    u[0] = 2.0 * pf.sqrt().sqrt() / norm;
    u
}

/// `λ·u₁⊗u₂⊗u₃` with spike vectors per mode, and its Tucker form.
pub fn benchmark_spike(dims: [usize; 3], lambda: f64) -> Result<(Tensor3, TuckerFactors)> {
    let us = dims.map(spike_vector);
    let factors = [
        Matrix::from_col_major(dims[0], 1, us[0].clone())?,
        Matrix::from_col_major(dims[1], 1, us[1].clone())?,
        Matrix::from_col_major(dims[2], 1, us[2].clone())?,
    ];
    let core = Tensor3::from_vec([1, 1, 1], vec![lambda])?;
    let f = TuckerFactors::new(core, factors)?;
    Ok((Tensor3::outer(&us[0], &us[1], &us[2]).scale(lambda), f))
}
