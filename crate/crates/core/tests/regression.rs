mod common;

use common::*;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;
use tucker_infer::format::{decode_treg, encode_treg};
use tucker_infer::regression::{
    debias, fit_no_split, fit_split, infer_no_split, infer_split, sample_size_check, sigma_hat,
    sigma_xi_hat, Half, InitialEstimate, RegressionData, ResidualMode, SplitOptions,
};
use tucker_infer::{Error, Tensor3, TuckerFactors};

fn noisy_data(f: &TuckerFactors, n: usize, noise: f64, seed: u64) -> (Tensor3, RegressionData) {
    let t = reconstruct(f);
    let mut g = rng(seed);
    let mut samples = Vec::with_capacity(n);
    for _ in 0..n {
        let x = gaussian_tensor(t.dims(), &mut g);
        let e: f64 = g.sample(StandardNormal);
        samples.push((inner(&t, &x) + noise * e, x));
    }
    (t, RegressionData::from_samples(&samples).unwrap())
}

fn max_rel(a: &Tensor3, b: &Tensor3) -> f64 {
    a.sub(b).unwrap().frob_norm() / b.frob_norm()
}

#[test]
fn debias_matches_loop() {
    let mut g = rng(1);
    let f = random_tucker([4, 3, 5], [2, 2, 2], &mut g);
    let (_, data) = noisy_data(&f, 30, 0.5, 2);
    let init = gaussian_tensor([4, 3, 5], &mut g);
    let out = debias(&init, data.samples(), 1.7).unwrap();
    let mut expected = init.clone();
    for i in 0..data.n() {
        let x = data.design(i);
        let r = data.responses()[i] - inner(&init, &x);
        for (e, xv) in expected.as_mut_slice().iter_mut().zip(x.as_slice()) {
            *e += r * xv / (30.0 * 1.7);
        }
    }
    assert!(max_rel(&out, &expected) < 1e-13);
}

#[test]
fn sigma_estimates_match_loops() {
    let mut g = rng(3);
    let f = random_tucker([3, 4, 2], [1, 1, 1], &mut g);
    let (_, data) = noisy_data(&f, 25, 0.3, 4);
    let mut energy = 0.0;
    for i in 0..data.n() {
        let x = data.design(i);
        energy += inner(&x, &x);
    }
    let expected = (energy / (25.0 * 24.0)).sqrt();
    assert!(rel_err(sigma_hat(data.samples()), expected) < 1e-14);

    let a = gaussian_tensor([3, 4, 2], &mut g);
    let b = gaussian_tensor([3, 4, 2], &mut g);
    let resid = |i: usize, t: &Tensor3| data.responses()[i] - inner(t, &data.design(i));
    let pooled: f64 = (0..25).map(|i| resid(i, &a).powi(2)).sum::<f64>() / 25.0;
    let got = sigma_xi_hat(data.samples(), ResidualMode::Pooled(&a)).unwrap();
    assert!(rel_err(got, pooled.sqrt()) < 1e-14);
    let cross: f64 = (0..25)
        .map(|i| if i < 10 { resid(i, &b) } else { resid(i, &a) }.powi(2))
        .sum::<f64>()
        / 25.0;
    let got = sigma_xi_hat(
        data.samples(),
        ResidualMode::CrossFit { n1: 10, first_init: &a, second_init: &b },
    )
    .unwrap();
    assert!(rel_err(got, cross.sqrt()) < 1e-14);
}

#[test]
fn noiseless_debias_returns_truth() {
    let mut g = rng(5);
    let f = random_tucker([5, 4, 6], [2, 2, 2], &mut g);
    let (t, data) = noisy_data(&f, 40, 0.0, 6);
    let out = debias(&t, data.samples(), 1.0).unwrap();
    assert!(max_rel(&out, &t) < 1e-12);
}

#[test]
fn noiseless_no_split_is_exact() {
    let mut g = rng(7);
    let f = random_tucker([6, 5, 7], [2, 3, 2], &mut g);
    let (t, data) = noisy_data(&f, 50, 0.0, 8);
    let a = Tensor3::unit([6, 5, 7], [1, 2, 3]).unwrap();
    let res = infer_no_split(&data, &InitialEstimate::from(f.clone()), &a, 0.05, Some(1.0)).unwrap();
    let truth = inner(&t, &a);
    assert!(rel_err(res.estimate, truth) < 1e-8);
    assert!(max_rel(&res.t_hat, &t) < 1e-8);
    assert!(res.sigma_xi_hat.unwrap() < 1e-10);
    assert!((res.ci.1 - res.ci.0).abs() < 1e-8 * truth.abs().max(1.0));
}

#[test]
fn noiseless_split_is_exact() {
    let mut g = rng(9);
    let f = random_tucker([5, 6, 4], [2, 2, 2], &mut g);
    let (t, data) = noisy_data(&f, 60, 0.0, 10);
    let a = gaussian_tensor([5, 6, 4], &mut g);
    let init = InitialEstimate::from(f.clone());
    let res = infer_split(&data, SplitOptions::default(), |_, _| Ok(init.clone()), &a, 0.1).unwrap();
    assert!(rel_err(res.estimate, inner(&t, &a)) < 1e-8);
    assert!(max_rel(&res.t_hat, &t) < 1e-8);
    assert_eq!(res.factor_estimates.len(), 2);
}

#[test]
fn split_hands_each_half_its_own_samples() {
    let mut g = rng(11);
    let f = random_tucker([3, 3, 3], [1, 1, 1], &mut g);
    let (_, data) = noisy_data(&f, 21, 0.1, 12);
    let opts = SplitOptions { n1: Some(8), ..SplitOptions::default() };
    let fit = fit_split(&data, opts, |s, half| {
        let expected = match half {
            Half::First => 8,
            Half::Second => 13,
        };
        assert_eq!(s.n(), expected);
        Ok(InitialEstimate::from(f.clone()))
    })
    .unwrap();
    assert_eq!(fit.n, 21);
}

#[test]
fn ci_arithmetic() {
    let mut g = rng(13);
    let f = random_tucker([6, 6, 6], [2, 2, 2], &mut g);
    let (_, data) = noisy_data(&f, 200, 0.4, 14);
    let a = Tensor3::unit([6, 6, 6], [0, 0, 0]).unwrap();
    let fit = fit_no_split(&data, &InitialEstimate::from(f), None).unwrap();
    let res = fit.infer(&a, 0.05).unwrap();
    let se = res.sigma_xi_hat.unwrap() / res.sigma_hat * res.s_a_hat / (200f64).sqrt();
    assert!(rel_err(res.std_error, se) < 1e-14);
    assert!((res.ci_length() - 2.0 * 1.959963984540054 * se).abs() < 1e-12);
    assert!(rel_err(res.sigma_hat, sigma_hat(data.samples())) < 1e-14);
}

#[test]
fn normal_loading_is_rejected() {
    let mut g = rng(15);
    let f = random_tucker([4, 4, 4], [1, 1, 1], &mut g);
    let (_, data) = noisy_data(&f, 30, 0.0, 16);
    let a = Tensor3::zeros([4, 4, 4]);
    let err = infer_no_split(&data, &InitialEstimate::from(f), &a, 0.05, Some(1.0)).unwrap_err();
    assert!(matches!(err, Error::AlignmentDegenerate(_)));
}

#[test]
fn bad_inputs_are_rejected() {
    let mut g = rng(17);
    let f = random_tucker([3, 3, 3], [1, 1, 1], &mut g);
    let (_, data) = noisy_data(&f, 10, 0.1, 18);
    let init = InitialEstimate::from(f);
    let a = Tensor3::zeros([3, 3, 4]);
    assert!(infer_no_split(&data, &init, &a, 0.05, None).is_err());
    let a = Tensor3::unit([3, 3, 3], [0, 0, 0]).unwrap();
    assert!(infer_no_split(&data, &init, &a, 1.5, None).is_err());
    assert!(infer_no_split(&data, &init, &a, 0.05, Some(-1.0)).is_err());
    assert!(RegressionData::new([2, 2, 2], vec![1.0], vec![0.0; 7]).is_err());
}

#[test]
fn sample_size_thresholds() {
    let r = sample_size_check([40, 30, 20], [3, 2, 1], 120, 2.0, 4.0);
    assert_eq!(r.dimension_term, 120.0);
    assert_eq!(r.snr_term, 4.0 * 40.0 / 16.0);
    assert!(r.pass);
    assert!(!sample_size_check([40, 30, 20], [3, 2, 1], 119, 2.0, 4.0).pass);
}

#[test]
fn truncated_initial_estimate_has_target_rank() {
    let mut g = rng(19);
    let noise = gaussian_tensor([6, 5, 4], &mut g);
    let init = InitialEstimate::from_tensor(noise, [2, 2, 1]).unwrap();
    assert_eq!(init.ranks(), [2, 2, 1]);
    let back = init.tensor.project(init.factor_refs()).unwrap();
    assert!(max_rel(&back, &init.tensor) < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn treg_round_trip(p1 in 1usize..4, p2 in 1usize..4, p3 in 1usize..4, n in 1usize..6, seed in any::<u64>()) {
        let mut g = rng(seed);
        let x = gaussian_tensor([p1, p2, p3 * n], &mut g).into_vec();
        let y: Vec<f64> = (0..n).map(|_| g.sample(StandardNormal)).collect();
        let data = RegressionData::new([p1, p2, p3], y, x).unwrap();
        let bytes = encode_treg(&data);
        prop_assert_eq!(bytes.len(), 40 + n * (p1 * p2 * p3 + 1) * 8);
        let back = decode_treg(&bytes).unwrap();
        prop_assert_eq!(back.dims(), data.dims());
        prop_assert_eq!(back.responses(), data.responses());
        prop_assert_eq!(back.designs(), data.designs());
    }

    #[test]
    fn treg_rejects_truncation(cut in 1usize..40) {
        let data = RegressionData::new([1, 1, 2], vec![1.0, 2.0], vec![0.5; 4]).unwrap();
        let bytes = encode_treg(&data);
        let cut = cut.min(bytes.len());
        prop_assert!(decode_treg(&bytes[..bytes.len() - cut]).is_err());
    }
}
