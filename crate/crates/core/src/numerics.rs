//! Dense numerics shared by every other module.
//!
//! Vectors are plain `Vec<f64>`/`&[f64]`; matrices are row-major [`Mat64`].
//! All arithmetic is 64-bit.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Seeded, platform-independent random stream.
pub type Rng = ChaCha8Rng;

/// Gradients with an L2 norm at or below this are treated as zero.
pub const ZERO_NORM: f64 = 1e-12;

/// Default central-difference step.
pub const FD_STEP: f64 = 1e-5;

pub fn seeded_rng(seed: u64) -> Rng {
    Rng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed for an independent sub-stream of `master` identified by `stream`.
pub fn derive_seed(master: u64, stream: u64) -> u64 {
    splitmix64(master ^ splitmix64(stream.wrapping_add(0x5eed)))
}

pub fn standard_normal_vec(rng: &mut Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn uniform_vec(rng: &mut Rng, len: usize, half_width: f64) -> Vec<f64> {
    (0..len)
        .map(|_| rng.random_range(-half_width..=half_width))
        .collect()
}

/// Logistic function. Saturates to `f64::MIN_POSITIVE` rather than zero for
/// very negative inputs so the result stays strictly positive.
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        (e / (1.0 + e)).max(f64::MIN_POSITIVE)
    }
}

/// `ln(1 + exp(x))` without overflow.
pub fn softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p()
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `y += alpha * x`
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

pub fn scaled(alpha: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| alpha * v).collect()
}

pub fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn check_len(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}

pub fn all_finite(a: &[f64]) -> bool {
    a.iter().all(|v| v.is_finite())
}

/// `epsilon * g / ||g||_2`, or the zero vector when `||g||_2 <= ZERO_NORM`.
pub fn l2_normalize(g: &[f64], epsilon: f64) -> Vec<f64> {
    let n = norm2(g);
    if n <= ZERO_NORM {
        return vec![0.0; g.len()];
    }
    g.iter().map(|v| epsilon * v / n).collect()
}

/// `epsilon * sign(g)` elementwise with `sign(0) = 0`.
pub fn sign_scale(g: &[f64], epsilon: f64) -> Vec<f64> {
    g.iter()
        .map(|&v| {
            if v > 0.0 {
                epsilon
            } else if v < 0.0 {
                -epsilon
            } else {
                0.0
            }
        })
        .collect()
}

/// Max-shifted softmax of `scores / tau`.
pub fn softmax_with_temperature(scores: &[f64], tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::Config(format!("temperature must be > 0, got {tau}")));
    }
    if scores.is_empty() {
        return Err(Error::Config("softmax over an empty score list".into()));
    }
    if !all_finite(scores) {
        return Err(Error::NonFinite("softmax input".into()));
    }
    let m = scores
        .iter()
        .map(|s| s / tau)
        .fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = scores.iter().map(|s| (s / tau - m).exp()).collect();
    let z: f64 = out.iter().sum();
    for v in &mut out {
        *v /= z;
    }
    Ok(out)
}

/// Central-difference gradient of `f` at `x` with step `h`.
pub fn finite_diff_grad<F>(f: F, x: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!("finite-difference step must be > 0, got {h}")));
    }
    let mut probe = x.to_vec();
    let mut grad = Vec::with_capacity(x.len());
    for i in 0..x.len() {
        let orig = probe[i];
        probe[i] = orig + h;
        let up = f(&probe);
        probe[i] = orig - h;
        let down = f(&probe);
        probe[i] = orig;
        if !up.is_finite() || !down.is_finite() {
            return Err(Error::NonFinite(format!(
                "function value at probe of coordinate {i}"
            )));
        }
        grad.push((up - down) / (2.0 * h));
    }
    Ok(grad)
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mat64 {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat64 {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        check_len(rows * cols, data.len())?;
        Ok(Self { rows, cols, data })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows.len() * cols);
        for r in rows {
            check_len(cols, r.len())?;
            data.extend_from_slice(r);
        }
        Ok(Self {
            rows: rows.len(),
            cols,
            data,
        })
    }

    /// Entries uniform in `[-half_width, half_width]`, drawn row by row.
    pub fn uniform(rows: usize, cols: usize, half_width: f64, rng: &mut Rng) -> Self {
        Self {
            rows,
            cols,
            data: uniform_vec(rng, rows * cols, half_width),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// `M x`
    pub fn matvec(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.cols, x.len())?;
        Ok((0..self.rows).map(|i| dot(self.row(i), x)).collect())
    }

    /// `M^T y`
    pub fn t_matvec(&self, y: &[f64]) -> Result<Vec<f64>> {
        check_len(self.rows, y.len())?;
        let mut out = vec![0.0; self.cols];
        for (i, &yi) in y.iter().enumerate() {
            if yi != 0.0 {
                axpy(yi, self.row(i), &mut out);
            }
        }
        Ok(out)
    }
}
