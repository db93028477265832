//! Independent reference implementations used as test oracles. Everything
//! here is plain loops over `Vec<f64>`; nothing calls into the crate's
//! numerical routines except constructors and accessors.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use tucker_infer::{Matrix, Tensor3, TuckerFactors};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_tensor<R: Rng>(dims: [usize; 3], rng: &mut R) -> Tensor3 {
    Tensor3::from_fn(dims, |_, _, _| rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    Matrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Dense row-major matrix.
#[derive(Clone, Debug)]
pub struct Dense {
    pub rows: usize,
    pub cols: usize,
    pub a: Vec<f64>,
}

impl Dense {
    pub fn zeros(rows: usize, cols: usize) -> Dense {
        Dense { rows, cols, a: vec![0.0; rows * cols] }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.a[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.a[i * self.cols + j] = v;
    }

    pub fn from_matrix(m: &Matrix) -> Dense {
        let mut d = Dense::zeros(m.rows(), m.cols());
        for i in 0..m.rows() {
            for j in 0..m.cols() {
                d.set(i, j, m.get(i, j));
            }
        }
        d
    }

    pub fn to_matrix(&self) -> Matrix {
        Matrix::from_fn(self.rows, self.cols, |i, j| self.at(i, j))
    }

    pub fn t(&self) -> Dense {
        let mut d = Dense::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                d.set(j, i, self.at(i, j));
            }
        }
        d
    }

    pub fn mul(&self, o: &Dense) -> Dense {
        assert_eq!(self.cols, o.rows);
        let mut d = Dense::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let v = self.at(i, k);
                for j in 0..o.cols {
                    d.a[i * o.cols + j] += v * o.at(k, j);
                }
            }
        }
        d
    }

    pub fn sub(&self, o: &Dense) -> Dense {
        Dense {
            rows: self.rows,
            cols: self.cols,
            a: self.a.iter().zip(&o.a).map(|(x, y)| x - y).collect(),
        }
    }

    pub fn frob_sq(&self) -> f64 {
        self.a.iter().map(|v| v * v).sum()
    }

    pub fn identity(n: usize) -> Dense {
        let mut d = Dense::zeros(n, n);
        for i in 0..n {
            d.set(i, i, 1.0);
        }
        d
    }

    pub fn kron(a: &Dense, b: &Dense) -> Dense {
        let mut d = Dense::zeros(a.rows * b.rows, a.cols * b.cols);
        for i in 0..a.rows {
            for j in 0..a.cols {
                for k in 0..b.rows {
                    for l in 0..b.cols {
                        d.set(i * b.rows + k, j * b.cols + l, a.at(i, j) * b.at(k, l));
                    }
                }
            }
        }
        d
    }

    /// Gauss–Jordan with partial pivoting.
    pub fn inverse(&self) -> Dense {
        let n = self.rows;
        assert_eq!(n, self.cols);
        let mut m = self.clone();
        let mut inv = Dense::identity(n);
        for c in 0..n {
            let p = (c..n)
                .max_by(|&x, &y| m.at(x, c).abs().partial_cmp(&m.at(y, c).abs()).unwrap())
                .unwrap();
            for j in 0..n {
                m.a.swap(c * n + j, p * n + j);
                inv.a.swap(c * n + j, p * n + j);
            }
            let d = m.at(c, c);
            assert!(d.abs() > 1e-300, "singular matrix");
            for j in 0..n {
                m.a[c * n + j] /= d;
                inv.a[c * n + j] /= d;
            }
            for i in 0..n {
                if i != c {
                    let f = m.at(i, c);
                    for j in 0..n {
                        m.a[i * n + j] -= f * m.at(c, j);
                        inv.a[i * n + j] -= f * inv.at(c, j);
                    }
                }
            }
        }
        inv
    }
}

/// Mode-`j` unfolding (0-based mode) by the index formula
/// column = k_{j+1} + p_{j+1} k_{j+2}.
pub fn unfold(t: &Tensor3, mode: usize) -> Dense {
    let p = t.dims();
    let (a, b) = ((mode + 1) % 3, (mode + 2) % 3);
    let mut d = Dense::zeros(p[mode], p[a] * p[b]);
    for k1 in 0..p[0] {
        for k2 in 0..p[1] {
            for k3 in 0..p[2] {
                let k = [k1, k2, k3];
                d.set(k[mode], k[a] + p[a] * k[b], t.get(k1, k2, k3));
            }
        }
    }
    d
}

/// `t ×_mode m` by explicit summation.
pub fn mode_product(t: &Tensor3, m: &Matrix, mode: usize) -> Tensor3 {
    let mut dims = t.dims();
    let p = dims[mode];
    assert_eq!(m.cols(), p);
    dims[mode] = m.rows();
    Tensor3::from_fn(dims, |i1, i2, i3| {
        let mut s = 0.0;
        for k in 0..p {
            let mut idx = [i1, i2, i3];
            let row = idx[mode];
            idx[mode] = k;
            s += m.get(row, k) * t.get(idx[0], idx[1], idx[2]);
        }
        s
    })
}

pub fn inner(a: &Tensor3, b: &Tensor3) -> f64 {
    a.as_slice().iter().zip(b.as_slice()).map(|(x, y)| x * y).sum()
}

/// Modified Gram–Schmidt, returning orthonormal columns.
pub fn gram_schmidt(m: &Matrix) -> Matrix {
    let (rows, cols) = m.shape();
    let mut q: Vec<Vec<f64>> = Vec::with_capacity(cols);
    for j in 0..cols {
        let mut v: Vec<f64> = (0..rows).map(|i| m.get(i, j)).collect();
        for _ in 0..2 {
            for u in &q {
                let d: f64 = u.iter().zip(&v).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(u) {
                    *x -= d * y;
                }
            }
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        q.push(v.into_iter().map(|x| x / n).collect());
    }
    Matrix::from_fn(rows, cols, |i, j| q[j][i])
}

/// One-sided Jacobi SVD of a tall matrix `a` (rows ≥ cols): returns singular
/// values (descending) and right singular vectors as columns of `v`.
pub fn jacobi_svd(a: &Dense) -> (Vec<f64>, Dense) {
    let (m, n) = (a.rows, a.cols);
    let mut u = a.clone();
    let mut v = Dense::identity(n);
    for _sweep in 0..100 {
        let mut off = 0.0f64;
        for p in 0..n {
            for q in p + 1..n {
                let (mut alpha, mut beta, mut gamma) = (0.0, 0.0, 0.0);
                for i in 0..m {
                    let (x, y) = (u.at(i, p), u.at(i, q));
                    alpha += x * x;
                    beta += y * y;
                    gamma += x * y;
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || gamma == 0.0 {
                    continue;
                }
                off = off.max(gamma.abs() / (alpha * beta).sqrt());
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let t = if zeta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..m {
                    let (x, y) = (u.at(i, p), u.at(i, q));
                    u.set(i, p, c * x - s * y);
                    u.set(i, q, s * x + c * y);
                }
                for i in 0..n {
                    let (x, y) = (v.at(i, p), v.at(i, q));
                    v.set(i, p, c * x - s * y);
                    v.set(i, q, s * x + c * y);
                }
            }
        }
        if off < 1e-15 {
            break;
        }
    }
    let mut sv: Vec<(f64, usize)> = (0..n)
        .map(|j| ((0..m).map(|i| u.at(i, j).powi(2)).sum::<f64>().sqrt(), j))
        .collect();
    sv.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
    let mut vs = Dense::zeros(n, n);
    for (new, &(_, old)) in sv.iter().enumerate() {
        for i in 0..n {
            vs.set(i, new, v.at(i, old));
        }
    }
    (sv.into_iter().map(|s| s.0).collect(), vs)
}

/// Top-`r` left singular vectors of `a` (any shape) via Jacobi on `aᵀ`.
pub fn jacobi_left(a: &Dense, r: usize) -> (Vec<f64>, Matrix) {
    let (s, v) = jacobi_svd(&a.t());
    let u = Matrix::from_fn(a.rows, r, |i, j| v.at(i, j));
    (s, u)
}

/// `‖P_U − P_V‖_F` with dense projectors.
pub fn projector_gap(u: &Matrix, v: &Matrix) -> f64 {
    let du = Dense::from_matrix(u);
    let dv = Dense::from_matrix(v);
    du.mul(&du.t()).sub(&dv.mul(&dv.t())).frob_sq().sqrt()
}

/// Random orthonormal `p × r`.
pub fn random_orthonormal<R: Rng>(p: usize, r: usize, rng: &mut R) -> Matrix {
    gram_schmidt(&gaussian_matrix(p, r, rng))
}

/// Random Tucker factors with a well-conditioned Gaussian core.
pub fn random_tucker<R: Rng>(dims: [usize; 3], ranks: [usize; 3], rng: &mut R) -> TuckerFactors {
    let core = gaussian_tensor(ranks, rng);
    let us = [
        random_orthonormal(dims[0], ranks[0], rng),
        random_orthonormal(dims[1], ranks[1], rng),
        random_orthonormal(dims[2], ranks[2], rng),
    ];
    TuckerFactors::new(core, us).expect("orthonormal factors")
}

/// Reconstruction `G ×₁U₁ ×₂U₂ ×₃U₃` via explicit sums.
pub fn reconstruct(f: &TuckerFactors) -> Tensor3 {
    let mut t = f.core.clone();
    for j in 0..3 {
        t = mode_product(&t, &f.factors[j], j);
    }
    t
}

/// `s_A²` from dense projectors:
/// `‖A ×Uᵀ‖² + Σ_j ‖(I − U_jU_jᵀ) A_j P_R‖²` with
/// `P_R = Mᵀ(MMᵀ)⁻¹M`, `M = G_j (U_{j+2} ⊗ U_{j+1})ᵀ`.
pub fn dense_variance_component(a: &Tensor3, f: &TuckerFactors) -> f64 {
    let mut core_part = a.clone();
    for j in 0..3 {
        core_part = mode_product(&core_part, &f.factors[j].transpose(), j);
    }
    let mut total = core_part.as_slice().iter().map(|v| v * v).sum::<f64>();
    for j in 0..3 {
        let (b, c) = ((j + 1) % 3, (j + 2) % 3);
        let gj = unfold(&f.core, j);
        let kr = Dense::kron(&Dense::from_matrix(&f.factors[c]), &Dense::from_matrix(&f.factors[b]));
        let m = gj.mul(&kr.t());
        let pr = m.t().mul(&m.mul(&m.t()).inverse()).mul(&m);
        let u = Dense::from_matrix(&f.factors[j]);
        let perp = Dense::identity(u.rows).sub(&u.mul(&u.t()));
        total += perp.mul(&unfold(a, j)).mul(&pr).frob_sq();
    }
    total
}

/// erf by its Maclaurin series; accurate to ~1e-12 for |x| ≤ 4.
pub fn erf_series(x: f64) -> f64 {
    let mut term = x;
    let mut sum = x;
    let x2 = x * x;
    for n in 1..200 {
        term *= -x2 / n as f64;
        let add = term / (2 * n + 1) as f64;
        sum += add;
        if add.abs() < 1e-18 {
            break;
        }
    }
    2.0 / std::f64::consts::PI.sqrt() * sum
}

pub fn phi_series(x: f64) -> f64 {
    if x > 5.5 {
        return 1.0;
    }
    if x < -5.5 {
        return 0.0;
    }
    0.5 * (1.0 + erf_series(x / std::f64::consts::SQRT_2))
}

/// KS distance by direct evaluation at every jump.
pub fn ks_oracle(zs: &[f64]) -> f64 {
    let mut v = zs.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len() as f64;
    let mut d = 0.0f64;
    for (i, &z) in v.iter().enumerate() {
        let f = phi_series(z);
        d = d.max((i as f64 + 1.0) / n - f).max(f - i as f64 / n);
    }
    d
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}
