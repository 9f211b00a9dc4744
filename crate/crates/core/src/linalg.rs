//! Small dense complex matrices and compensated accumulation.
//!
//! The fiber space is always finite-dimensional, `E = C^d`, so operator
//! values live in `C^{d×d}` with the spectral norm (largest singular value)
//! as the operator norm. `d` is small (1 or 2 in practice); everything here
//! is written for exactness and determinism rather than BLAS-scale speed.

use num_complex::Complex64;

/// Dense `d × d` complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMat {
    d: usize,
    data: Vec<Complex64>,
}

impl CMat {
    pub fn zeros(d: usize) -> Self {
        CMat {
            d,
            data: vec![Complex64::ZERO; d * d],
        }
    }

    pub fn identity(d: usize) -> Self {
        let mut m = CMat::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = Complex64::ONE;
        }
        m
    }

    pub fn from_rows(d: usize, data: Vec<Complex64>) -> Self {
        assert_eq!(data.len(), d * d, "row data must have d*d entries");
        CMat { d, data }
    }

    /// Scalar multiple of the identity.
    pub fn scalar(d: usize, z: Complex64) -> Self {
        let mut m = CMat::zeros(d);
        for i in 0..d {
            m.data[i * d + i] = z;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.d + j]
    }

    pub fn set(&mut self, i: usize, j: usize, z: Complex64) {
        self.data[i * self.d + j] = z;
    }

    pub fn entries(&self) -> &[Complex64] {
        &self.data
    }

    pub fn add(&self, other: &CMat) -> CMat {
        assert_eq!(self.d, other.d);
        CMat {
            d: self.d,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &CMat) -> CMat {
        assert_eq!(self.d, other.d);
        CMat {
            d: self.d,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn scale(&self, c: Complex64) -> CMat {
        CMat {
            d: self.d,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn matmul(&self, other: &CMat) -> CMat {
        assert_eq!(self.d, other.d);
        let d = self.d;
        let mut out = CMat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                let mut acc = Complex64::ZERO;
                for l in 0..d {
                    acc += self.data[i * d + l] * other.data[l * d + j];
                }
                out.data[i * d + j] = acc;
            }
        }
        out
    }

    /// Matrix-vector product; `v` has length d.
    pub fn matvec(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.d);
        let d = self.d;
        (0..d)
            .map(|i| {
                let mut acc = Complex64::ZERO;
                for (j, vj) in v.iter().enumerate() {
                    acc += self.data[i * d + j] * vj;
                }
                acc
            })
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> CMat {
        let d = self.d;
        let mut out = CMat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.data[j * d + i] = self.data[i * d + j].conj();
            }
        }
        out
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Operator norm on C^d: the largest singular value.
    ///
    /// d = 1 and d = 2 use closed forms; larger d falls back to a cyclic
    /// Jacobi sweep on the Hermitian matrix A*A.
    pub fn op_norm(&self) -> f64 {
        match self.d {
            0 => 0.0,
            1 => self.data[0].norm(),
            2 => {
                // σ² are the eigenvalues of A*A:
                //   σ±² = (‖A‖_F² ± sqrt(‖A‖_F⁴ − 4 |det A|²)) / 2
                let fro2: f64 = self.data.iter().map(|z| z.norm_sqr()).sum();
                let det = self.data[0] * self.data[3] - self.data[1] * self.data[2];
                let disc = (fro2 * fro2 - 4.0 * det.norm_sqr()).max(0.0);
                ((fro2 + disc.sqrt()) / 2.0).sqrt()
            }
            _ => self.largest_gram_eigenvalue().max(0.0).sqrt(),
        }
    }

    fn largest_gram_eigenvalue(&self) -> f64 {
        let d = self.d;
        let gram = self.adjoint().matmul(self);
        let mut a: Vec<Complex64> = gram.data;
        // Cyclic Jacobi on the Hermitian matrix; deterministic sweep order.
        for _sweep in 0..60 {
            let mut off = 0.0f64;
            for p in 0..d {
                for q in (p + 1)..d {
                    off += a[p * d + q].norm_sqr();
                }
            }
            if off <= 1e-30 {
                break;
            }
            for p in 0..d {
                for q in (p + 1)..d {
                    let apq = a[p * d + q];
                    if apq.norm_sqr() <= 1e-32 {
                        continue;
                    }
                    let app = a[p * d + p].re;
                    let aqq = a[q * d + q].re;
                    let phase = apq / apq.norm();
                    let tau = (aqq - app) / (2.0 * apq.norm());
                    let t = tau.signum() / (tau.abs() + (1.0 + tau * tau).sqrt());
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    // Complex Jacobi rotation in the (p, q) plane.
                    for i in 0..d {
                        let aip = a[i * d + p];
                        let aiq = a[i * d + q];
                        a[i * d + p] = aip * c - aiq * phase.conj() * s;
                        a[i * d + q] = aiq * c + aip * phase * s;
                    }
                    for i in 0..d {
                        let api = a[p * d + i];
                        let aqi = a[q * d + i];
                        a[p * d + i] = api * c - aqi * phase * s;
                        a[q * d + i] = aqi * c + api * phase.conj() * s;
                    }
                }
            }
        }
        (0..d).map(|i| a[i * d + i].re).fold(f64::MIN, f64::max)
    }
}

/// Neumaier-compensated complex accumulator.
///
/// Summation order across the crate is fixed (lattice-lexicographic) and
/// compensated so reductions are deterministic and rounding-tight.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum_re: f64,
    sum_im: f64,
    c_re: f64,
    c_im: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, z: Complex64) {
        self.sum_re = neumaier(self.sum_re, z.re, &mut self.c_re);
        self.sum_im = neumaier(self.sum_im, z.im, &mut self.c_im);
    }

    #[inline]
    pub fn value(&self) -> Complex64 {
        Complex64::new(self.sum_re + self.c_re, self.sum_im + self.c_im)
    }
}

/// Real-valued Neumaier accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedReal {
    sum: f64,
    c: f64,
}

impl CompensatedReal {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        self.sum = neumaier(self.sum, x, &mut self.c);
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.c
    }
}

#[inline]
fn neumaier(sum: f64, x: f64, comp: &mut f64) -> f64 {
    let t = sum + x;
    if sum.abs() >= x.abs() {
        *comp += (sum - t) + x;
    } else {
        *comp += (x - t) + sum;
    }
    t
}
