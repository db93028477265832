//! Dense order-3 tensors.
//!
//! Storage is canonical: entry `(k1, k2, k3)` (0-based) lives at
//! `k1 + p1*k2 + p1*p2*k3`. The mode-`j` matricization places entry
//! `(k1, k2, k3)` at row `k_j`, column `k_{j+1} + p_{j+1}*k_{j+2}`, with mode
//! indices wrapping modulo 3.

use crate::error::{invalid, shape, Result};
use crate::matrix::{gemm, MatMut, MatRef, Matrix};

/// One of the three tensor modes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    One,
    Two,
    Three,
}

impl Mode {
    pub const ALL: [Mode; 3] = [Mode::One, Mode::Two, Mode::Three];

    /// Zero-based axis index.
    pub fn index(self) -> usize {
        match self {
            Mode::One => 0,
            Mode::Two => 1,
            Mode::Three => 2,
        }
    }

    pub fn from_index(i: usize) -> Result<Mode> {
        match i {
            0 => Ok(Mode::One),
            1 => Ok(Mode::Two),
            2 => Ok(Mode::Three),
            _ => Err(invalid(format!("axis index {i} is not in 0..3"))),
        }
    }

    /// Mode from the 1-based label used in formulas (`1`, `2`, `3`).
    pub fn from_one_based(j: usize) -> Result<Mode> {
        match j {
            1..=3 => Mode::from_index(j - 1),
            _ => Err(invalid(format!("mode {j} is not in {{1,2,3}}"))),
        }
    }

    /// `j + 1` modulo 3.
    pub fn next(self) -> Mode {
        Mode::ALL[(self.index() + 1) % 3]
    }

    /// `j + 2` modulo 3.
    pub fn after_next(self) -> Mode {
        Mode::ALL[(self.index() + 2) % 3]
    }
}

/// Dense real tensor of order three.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor3 {
    dims: [usize; 3],
    data: Vec<f64>,
}

impl Tensor3 {
    pub fn zeros(dims: [usize; 3]) -> Self {
        Tensor3 {
            dims,
            data: vec![0.0; dims[0] * dims[1] * dims[2]],
        }
    }

    /// Wraps values given in canonical order.
    pub fn from_vec(dims: [usize; 3], data: Vec<f64>) -> Result<Self> {
        if dims.contains(&0) {
            return Err(invalid(format!("dimensions must be positive, got {dims:?}")));
        }
        let len = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]));
        if len != Some(data.len()) {
            return Err(shape(format!(
                "{} values for dims {dims:?}",
                data.len()
            )));
        }
        Ok(Tensor3 { dims, data })
    }

    /// Fills entries from a function of 0-based indices.
    pub fn from_fn(dims: [usize; 3], mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(dims[0] * dims[1] * dims[2]);
        for k3 in 0..dims[2] {
            for k2 in 0..dims[1] {
                for k1 in 0..dims[0] {
                    data.push(f(k1, k2, k3));
                }
            }
        }
        Tensor3 { dims, data }
    }

    /// `e_{k1} ⊗ e_{k2} ⊗ e_{k3}` (0-based indices).
    pub fn unit(dims: [usize; 3], idx: [usize; 3]) -> Result<Self> {
        if (0..3).any(|j| idx[j] >= dims[j]) {
            return Err(invalid(format!("index {idx:?} outside dims {dims:?}")));
        }
        let mut t = Tensor3::zeros(dims);
        t.set(idx[0], idx[1], idx[2], 1.0);
        Ok(t)
    }

    /// Outer product `a ⊗ b ⊗ c`.
    pub fn outer(a: &[f64], b: &[f64], c: &[f64]) -> Self {
        Tensor3::from_fn([a.len(), b.len(), c.len()], |i, j, k| a[i] * b[j] * c[k])
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn offset(&self, k1: usize, k2: usize, k3: usize) -> usize {
        k1 + self.dims[0] * (k2 + self.dims[1] * k3)
    }

    #[inline]
    pub fn get(&self, k1: usize, k2: usize, k3: usize) -> f64 {
        self.data[self.offset(k1, k2, k3)]
    }

    #[inline]
    pub fn set(&mut self, k1: usize, k2: usize, k3: usize, v: f64) {
        let o = self.offset(k1, k2, k3);
        self.data[o] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// `Vec(T)` in canonical order.
    pub fn vectorize(&self) -> Vec<f64> {
        self.data.clone()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn inner(&self, other: &Tensor3) -> Result<f64> {
        if self.dims != other.dims {
            return Err(shape(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(dot(&self.data, &other.data))
    }

    pub fn frob_norm_sq(&self) -> f64 {
        dot(&self.data, &self.data)
    }

    pub fn frob_norm(&self) -> f64 {
        self.frob_norm_sq().sqrt()
    }

    pub fn scale(&self, c: f64) -> Tensor3 {
        Tensor3 {
            dims: self.dims,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn add(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Tensor3) -> Result<Tensor3> {
        self.zip(other, |a, b| a - b)
    }

    /// `self += c · other`.
    pub fn axpy(&mut self, c: f64, other: &Tensor3) -> Result<()> {
        if self.dims != other.dims {
            return Err(shape(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += c * b;
        }
        Ok(())
    }

    fn zip(&self, other: &Tensor3, f: impl Fn(f64, f64) -> f64) -> Result<Tensor3> {
        if self.dims != other.dims {
            return Err(shape(format!("{:?} vs {:?}", self.dims, other.dims)));
        }
        Ok(Tensor3 {
            dims: self.dims,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        })
    }

    /// Mode-`j` unfolding `Mat_j(T)`, a `p_j × p_{j+1}p_{j+2}` matrix.
    pub fn matricize(&self, mode: Mode) -> Matrix {
        let j = mode.index();
        let a = mode.next().index();
        let b = mode.after_next().index();
        let (pj, pa) = (self.dims[j], self.dims[a]);
        let cols = self.len() / pj;
        let mut out = vec![0.0; self.len()];
        let mut k = [0usize; 3];
        for k3 in 0..self.dims[2] {
            k[2] = k3;
            for k2 in 0..self.dims[1] {
                k[1] = k2;
                for k1 in 0..self.dims[0] {
                    k[0] = k1;
                    let col = k[a] + pa * k[b];
                    out[k[j] + pj * col] = self.data[self.offset(k1, k2, k3)];
                }
            }
        }
        Matrix::from_col_major(pj, cols, out).expect("sizes agree")
    }

    /// Inverse of [`Tensor3::matricize`].
    pub fn unmatricize(m: &Matrix, mode: Mode, dims: [usize; 3]) -> Result<Tensor3> {
        let j = mode.index();
        let a = mode.next().index();
        let b = mode.after_next().index();
        if dims.contains(&0) {
            return Err(invalid(format!("dimensions must be positive, got {dims:?}")));
        }
        if m.rows() != dims[j] || m.cols() != dims[a] * dims[b] {
            return Err(shape(format!(
                "{}x{} matrix does not unfold dims {dims:?} along mode {}",
                m.rows(),
                m.cols(),
                j + 1
            )));
        }
        let (pj, pa) = (dims[j], dims[a]);
        let src = m.as_slice();
        let mut k = [0usize; 3];
        let mut data = Vec::with_capacity(src.len());
        for k3 in 0..dims[2] {
            k[2] = k3;
            for k2 in 0..dims[1] {
                k[1] = k2;
                for k1 in 0..dims[0] {
                    k[0] = k1;
                    data.push(src[k[j] + pj * (k[a] + pa * k[b])]);
                }
            }
        }
        Ok(Tensor3 { dims, data })
    }

    /// Mode-`j` product `T ×_j M`, where `M` has `p_j` columns.
    pub fn mode_product(&self, m: &Matrix, mode: Mode) -> Result<Tensor3> {
        self.mode_product_impl(m, mode, false)
    }

    /// `T ×_j Mᵀ`, where `M` has `p_j` rows.
    pub fn mode_product_t(&self, m: &Matrix, mode: Mode) -> Result<Tensor3> {
        self.mode_product_impl(m, mode, true)
    }

    fn mode_product_impl(&self, m: &Matrix, mode: Mode, transpose: bool) -> Result<Tensor3> {
        let j = mode.index();
        let mv = MatRef::col_major(m.as_slice(), m.rows(), m.cols());
        let mv = if transpose { mv.t() } else { mv };
        if mv.cols != self.dims[j] {
            return Err(shape(format!(
                "mode-{} product needs {} columns, matrix has {}",
                j + 1,
                self.dims[j],
                mv.cols
            )));
        }
        let q = mv.rows;
        let [p1, p2, p3] = self.dims;
        let mut dims = self.dims;
        dims[j] = q;
        let mut out = vec![0.0; dims[0] * dims[1] * dims[2]];
        if out.is_empty() {
            return Ok(Tensor3 { dims, data: out });
        }
        match j {
            0 => gemm(
                1.0,
                mv,
                MatRef::col_major(&self.data, p1, p2 * p3),
                0.0,
                MatMut::col_major(&mut out, q, p2 * p3),
            ),
            1 => {
                for k3 in 0..p3 {
                    let src = &self.data[k3 * p1 * p2..(k3 + 1) * p1 * p2];
                    let dst = &mut out[k3 * p1 * q..(k3 + 1) * p1 * q];
                    gemm(
                        1.0,
                        MatRef::col_major(src, p1, p2),
                        mv.t(),
                        0.0,
                        MatMut::col_major(dst, p1, q),
                    );
                }
            }
            _ => gemm(
                1.0,
                MatRef::col_major(&self.data, p1 * p2, p3),
                mv.t(),
                0.0,
                MatMut::col_major(&mut out, p1 * p2, q),
            ),
        }
        Ok(Tensor3 { dims, data: out })
    }

    /// `T ×₁ M₁ ×₂ M₂ ×₃ M₃`.
    pub fn multilinear(&self, ms: [&Matrix; 3]) -> Result<Tensor3> {
        self.mode_product(ms[0], Mode::One)?
            .mode_product(ms[1], Mode::Two)?
            .mode_product(ms[2], Mode::Three)
    }

    /// `T ×₁ M₁ᵀ ×₂ M₂ᵀ ×₃ M₃ᵀ`.
    pub fn multilinear_t(&self, ms: [&Matrix; 3]) -> Result<Tensor3> {
        self.mode_product_t(ms[0], Mode::One)?
            .mode_product_t(ms[1], Mode::Two)?
            .mode_product_t(ms[2], Mode::Three)
    }

    /// `T ×₁ P_{U₁} ×₂ P_{U₂} ×₃ P_{U₃}` for orthonormal `U_j`.
    pub fn project(&self, us: [&Matrix; 3]) -> Result<Tensor3> {
        self.multilinear_t(us)?.multilinear(us)
    }

    /// `Mat_j(T) Mat_j(T)ᵀ` without forming the unfolding.
    pub fn mode_gram(&self, mode: Mode) -> Matrix {
        let [p1, p2, p3] = self.dims;
        let pj = self.dims[mode.index()];
        let mut g = vec![0.0; pj * pj];
        match mode {
            Mode::One => {
                let a = MatRef::col_major(&self.data, p1, p2 * p3);
                gemm(1.0, a, a.t(), 0.0, MatMut::col_major(&mut g, p1, p1));
            }
            Mode::Two => {
                for k3 in 0..p3 {
                    let s = MatRef::col_major(&self.data[k3 * p1 * p2..(k3 + 1) * p1 * p2], p1, p2);
                    gemm(1.0, s.t(), s, 1.0, MatMut::col_major(&mut g, p2, p2));
                }
            }
            Mode::Three => {
                let a = MatRef::col_major(&self.data, p1 * p2, p3);
                gemm(1.0, a.t(), a, 0.0, MatMut::col_major(&mut g, p3, p3));
            }
        }
        // Symmetrize to remove rounding asymmetry.
        for i in 0..pj {
            for k in (i + 1)..pj {
                let v = 0.5 * (g[i + pj * k] + g[k + pj * i]);
                g[i + pj * k] = v;
                g[k + pj * i] = v;
            }
        }
        Matrix::from_col_major(pj, pj, g).expect("sizes agree")
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    // Four accumulators keep the sum order fixed and independent of callers.
    let mut acc = [0.0f64; 4];
    let chunks = a.len() / 4;
    for c in 0..chunks {
        let i = 4 * c;
        acc[0] += a[i] * b[i];
        acc[1] += a[i + 1] * b[i + 1];
        acc[2] += a[i + 2] * b[i + 2];
        acc[3] += a[i + 3] * b[i + 3];
    }
    let mut tail = 0.0;
    for i in 4 * chunks..a.len() {
        tail += a[i] * b[i];
    }
    (acc[0] + acc[1]) + (acc[2] + acc[3]) + tail
}
