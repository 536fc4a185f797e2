//! Reference implementations shared by the integration tests. Nothing here
//! calls into the library's linear algebra.

#![allow(dead_code)]

use num_complex::Complex64;
use rand::Rng;
use smi_core::linalg::ComplexMatrix;

pub type Dense = Vec<Complex64>;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

pub fn to_dense(m: &ComplexMatrix) -> Dense {
    m.as_slice().to_vec()
}

pub fn identity(n: usize) -> Dense {
    let mut m = vec![c(0.0, 0.0); n * n];
    for i in 0..n {
        m[i * n + i] = c(1.0, 0.0);
    }
    m
}

pub fn mul(a: &[Complex64], b: &[Complex64], n: usize) -> Dense {
    let mut out = vec![c(0.0, 0.0); n * n];
    for i in 0..n {
        for k in 0..n {
            let aik = a[i * n + k];
            for j in 0..n {
                out[i * n + j] += aik * b[k * n + j];
            }
        }
    }
    out
}

pub fn adjoint(a: &[Complex64], n: usize) -> Dense {
    let mut out = vec![c(0.0, 0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            out[j * n + i] = a[i * n + j].conj();
        }
    }
    out
}

pub fn trace(a: &[Complex64], n: usize) -> Complex64 {
    (0..n).map(|i| a[i * n + i]).sum()
}

pub fn max_abs_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// `e^{i s H}` by Taylor series with scaling and squaring.
pub fn expm_i(h: &[Complex64], s: f64, n: usize) -> Dense {
    let x: Dense = h.iter().map(|v| v * c(0.0, s)).collect();
    let norm: f64 = x.iter().map(|v| v.norm()).sum::<f64>().max(1e-300);
    let mut squarings = 0u32;
    let mut scale = 1.0;
    while norm * scale > 0.25 {
        scale *= 0.5;
        squarings += 1;
    }
    let x: Dense = x.iter().map(|v| v * scale).collect();
    let mut term = identity(n);
    let mut sum = identity(n);
    for k in 1..=24 {
        term = mul(&term, &x, n).into_iter().map(|v| v / k as f64).collect();
        for (s, t) in sum.iter_mut().zip(&term) {
            *s += t;
        }
    }
    for _ in 0..squarings {
        sum = mul(&sum, &sum, n);
    }
    sum
}

/// Hermitian matrix with independent Gaussian-ish entries from `rng`.
pub fn random_hermitian<R: Rng>(n: usize, rng: &mut R) -> Dense {
    let mut m = vec![c(0.0, 0.0); n * n];
    for i in 0..n {
        m[i * n + i] = c(rng.random_range(-1.0..1.0), 0.0);
        for j in i + 1..n {
            let v = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            m[i * n + j] = v;
            m[j * n + i] = v.conj();
        }
    }
    m
}

/// `G G† / tr(G G†)` for a random complex `G`.
pub fn random_density<R: Rng>(n: usize, rng: &mut R) -> Dense {
    let g: Dense = (0..n * n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let p = mul(&g, &adjoint(&g, n), n);
    let t = trace(&p, n).re;
    p.into_iter().map(|v| v / t).collect()
}

pub fn random_unit_vector<R: Rng>(n: usize, rng: &mut R) -> Dense {
    let v: Dense = (0..n).map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / norm).collect()
}

pub fn matrix(data: &[Complex64], n: usize) -> ComplexMatrix {
    ComplexMatrix::from_row_major(n, n, data.to_vec()).unwrap()
}
