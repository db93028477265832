mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use tucker_infer::manifold::{
    alignment_check, incoherence_ratio, minimax_ci_length, project_tangent, variance_component,
    IncoherenceVariant, NoiseModel, Regime,
};
use tucker_infer::montecarlo::benchmark_spike;
use tucker_infer::{Error, Matrix, Tensor3, TuckerFactors};

fn random_instance(seed: u64) -> (Tensor3, TuckerFactors) {
    let mut g = rng(seed);
    loop {
        let dims = [g.random_range(2..=12), g.random_range(2..=12), g.random_range(2..=12)];
        let ranks = [
            g.random_range(1..=dims[0].min(4)),
            g.random_range(1..=dims[1].min(4)),
            g.random_range(1..=dims[2].min(4)),
        ];
        if (0..3).any(|j| ranks[j] > ranks[(j + 1) % 3] * ranks[(j + 2) % 3]) {
            continue;
        }
        let f = random_tucker(dims, ranks, &mut g);
        let a = gaussian_tensor(dims, &mut g);
        return (a, f);
    }
}

fn perp(u: &Matrix) -> Matrix {
    let d = Dense::from_matrix(u);
    Dense::identity(d.rows).sub(&d.mul(&d.t())).to_matrix()
}

#[test]
fn projection_norm_matches_variance_component() {
    for seed in 0..200 {
        let (a, f) = random_instance(seed);
        let pa = project_tangent(&a, &f).unwrap().total();
        let s2 = variance_component(&a, &f).unwrap();
        assert!(rel_err(pa.frob_norm_sq(), s2) < 1e-10, "seed {seed}");
        assert!(rel_err(dense_variance_component(&a, &f), s2) < 1e-10, "seed {seed}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn projection_is_idempotent_and_self_adjoint(seed in any::<u64>()) {
        let (a, f) = random_instance(seed);
        let b = gaussian_tensor(a.dims(), &mut rng(seed ^ 0x5a5a));
        let pa = project_tangent(&a, &f).unwrap().total();
        let ppa = project_tangent(&pa, &f).unwrap().total();
        let scale = pa.frob_norm().max(1e-300);
        prop_assert!(ppa.sub(&pa).unwrap().frob_norm() <= 1e-10 * scale);
        let pb = project_tangent(&b, &f).unwrap().total();
        let lhs = inner(&pa, &b);
        let rhs = inner(&a, &pb);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * (a.frob_norm() * b.frob_norm()));
    }

    #[test]
    fn parts_are_mutually_orthogonal(seed in any::<u64>()) {
        let (a, f) = random_instance(seed);
        let d = project_tangent(&a, &f).unwrap();
        let mut parts = vec![d.core_part.clone()];
        parts.extend(d.mode_parts.iter().cloned());
        let tol = 1e-10 * a.frob_norm_sq();
        for i in 0..parts.len() {
            for j in i + 1..parts.len() {
                prop_assert!(inner(&parts[i], &parts[j]).abs() <= tol);
            }
        }
    }

    #[test]
    fn signal_lies_in_its_own_tangent_space(seed in any::<u64>()) {
        let (_, f) = random_instance(seed);
        let t = reconstruct(&f);
        let pt = project_tangent(&t, &f).unwrap().total();
        prop_assert!(pt.sub(&t).unwrap().frob_norm() <= 1e-10 * t.frob_norm());
    }
}

#[test]
fn rank_one_entrywise_closed_form() {
    let mut g = rng(4);
    let dims = [6, 5, 7];
    let u: Vec<Matrix> = dims.iter().map(|&p| random_orthonormal(p, 1, &mut g)).collect();
    let core = Tensor3::from_vec([1, 1, 1], vec![2.5]).unwrap();
    let f = TuckerFactors::new(core, [u[0].clone(), u[1].clone(), u[2].clone()]).unwrap();
    let idx = [1, 3, 2];
    let a = Tensor3::unit(dims, idx).unwrap();
    let (x, y, z) = (u[0].get(idx[0], 0), u[1].get(idx[1], 0), u[2].get(idx[2], 0));
    let expected = (x * y * z).powi(2)
        + (1.0 - x * x) * (y * z).powi(2)
        + (1.0 - y * y) * (x * z).powi(2)
        + (1.0 - z * z) * (x * y).powi(2);
    assert!(rel_err(variance_component(&a, &f).unwrap(), expected) < 1e-12);
}

#[test]
fn benchmark_spike_closed_form() {
    for p in [10usize, 40, 100] {
        let (_, f) = benchmark_spike([p, p, p], 5.0).unwrap();
        let a = Tensor3::unit([p, p, p], [0, 0, 0]).unwrap();
        let rp = (p as f64).sqrt();
        let q = 4.0 * rp / (4.0 * rp + p as f64 - 1.0);
        let expected = 3.0 * (1.0 - q) * q * q + q.powi(3);
        assert!((variance_component(&a, &f).unwrap() - expected).abs() < 1e-12, "p = {p}");
    }
}

#[test]
fn loading_in_normal_space_fails_alignment() {
    let (x, f) = random_instance(17);
    let mut a = x.clone();
    for j in 0..3 {
        a = mode_product(&a, &perp(&f.factors[j]), j);
    }
    assert!(variance_component(&a, &f).unwrap() <= 1e-20 * inner(&x, &x));
    let report = alignment_check(&a, &f, Regime::General).unwrap();
    assert!(!report.pass);
}

#[test]
fn two_perpendicular_modes_are_normal() {
    let (x, f) = random_instance(23);
    let a = mode_product(&mode_product(&x, &perp(&f.factors[0]), 0), &perp(&f.factors[1]), 1);
    assert!(variance_component(&a, &f).unwrap() <= 1e-20 * inner(&x, &x));
}

#[test]
fn tangent_loading_at_strong_signal_passes() {
    let mut g = rng(31);
    let dims = [12, 12, 12];
    let mut f = random_tucker(dims, [2, 2, 2], &mut g);
    let mut core = Tensor3::zeros([2, 2, 2]);
    core.set(0, 0, 0, 12.0);
    core.set(1, 1, 1, 12.0);
    f.core = core;
    let a = project_tangent(&gaussian_tensor(dims, &mut g), &f).unwrap().total();
    for regime in Regime::ALL {
        let r = alignment_check(&a, &f, regime).unwrap();
        assert!(r.pass, "{}: ratio {}", regime.name(), r.ratio);
        assert!((r.s_a - a.frob_norm()).abs() < 1e-10 * a.frob_norm());
        let max = r.terms.iter().map(|t| t.value).fold(0.0, f64::max);
        assert_eq!(max, r.threshold);
    }
}

#[test]
fn incoherence_ratio_matches_dense() {
    let mut g = rng(41);
    let f = random_tucker([7, 9, 8], [2, 3, 2], &mut g);
    let a = gaussian_tensor([7, 9, 8], &mut g);
    let ratios = incoherence_ratio(&a, &f, IncoherenceVariant::CoreProjected).unwrap();
    for (j, &ratio) in ratios.iter().enumerate() {
        let (b, c) = ((j + 1) % 3, (j + 2) % 3);
        let kr = Dense::kron(&Dense::from_matrix(&f.factors[c]), &Dense::from_matrix(&f.factors[b]));
        let pr = kr.mul(&kr.t());
        let u = Dense::from_matrix(&f.factors[j]);
        let pu = u.mul(&u.t());
        let aj = unfold(&a, j);
        let num = pu.mul(&aj).mul(&pr).frob_sq().sqrt();
        let den = Dense::identity(u.rows).sub(&pu).mul(&aj).mul(&pr).frob_sq().sqrt();
        assert!(rel_err(ratio, num / den) < 1e-10);
    }
}

#[test]
fn loading_in_factor_span_is_degenerate() {
    let (x, f) = random_instance(5);
    let a = x.project(f.factor_refs()).unwrap();
    let err = incoherence_ratio(&a, &f, IncoherenceVariant::RightProjected).unwrap_err();
    assert!(matches!(err, Error::AlignmentDegenerate(_)));
}

#[test]
fn dims_mismatch_is_rejected() {
    let (_, f) = random_instance(2);
    let d = f.dims();
    let a = Tensor3::zeros([d[0] + 1, d[1], d[2]]);
    assert!(variance_component(&a, &f).is_err());
    assert!(project_tangent(&a, &f).is_err());
}

#[test]
fn minimax_scaling() {
    let base = minimax_ci_length(0.7, NoiseModel::Regression { sigma_xi: 2.0, sigma: 0.5, n: 400 });
    assert!((base - 2.0 / (0.5 * 20.0) * 0.7).abs() < 1e-15);
    let pca = minimax_ci_length(0.7, NoiseModel::Pca { sigma: 3.0 });
    assert!((pca - 2.1).abs() < 1e-15);
}
