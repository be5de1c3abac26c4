//! Real symmetric band matrices acting on complex vectors, and their
//! Cholesky factorisation.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Symmetric matrix with half-bandwidth `p`, lower triangle stored row by row.
#[derive(Debug, Clone, PartialEq)]
pub struct SymBand {
    n: usize,
    p: usize,
    // row i holds columns i−p ..= i at offsets 0 ..= p
    data: Vec<f64>,
}

impl SymBand {
    pub fn zeros(n: usize, p: usize) -> Self {
        SymBand {
            n,
            p,
            data: vec![0.0; n * (p + 1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn bandwidth(&self) -> usize {
        self.p
    }

    fn slot(&self, i: usize, j: usize) -> Option<usize> {
        let (i, j) = if i >= j { (i, j) } else { (j, i) };
        (i - j <= self.p && i < self.n).then(|| i * (self.p + 1) + self.p - (i - j))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.slot(i, j).map_or(0.0, |s| self.data[s])
    }

    /// Adds `v` to entry `(i, j)` (and so to `(j, i)`). Panics outside the band.
    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        let s = self
            .slot(i, j)
            .unwrap_or_else(|| panic!("entry ({i}, {j}) outside band {}", self.p));
        self.data[s] += v;
    }

    /// Decouples unknown `i`: clears its row and column and sets the diagonal to `diag`.
    pub fn pin(&mut self, i: usize, diag: f64) {
        let lo = i.saturating_sub(self.p);
        let hi = (i + self.p).min(self.n - 1);
        for j in lo..=hi {
            let s = self.slot(i, j).expect("inside band");
            self.data[s] = 0.0;
        }
        let s = self.slot(i, i).expect("diagonal");
        self.data[s] = diag;
    }

    /// `self + a · other`, for matrices of equal shape.
    pub fn plus_scaled(&self, a: f64, other: &SymBand) -> SymBand {
        assert_eq!((self.n, self.p), (other.n, other.p));
        SymBand {
            n: self.n,
            p: self.p,
            data: self.data.iter().zip(&other.data).map(|(x, y)| x + a * y).collect(),
        }
    }

    /// `y = A x`.
    pub fn mul_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        assert!(x.len() == self.n && y.len() == self.n);
        let w = self.p + 1;
        for yi in y.iter_mut() {
            *yi = Complex64::new(0.0, 0.0);
        }
        for i in 0..self.n {
            let row = &self.data[i * w..(i + 1) * w];
            let j0 = i.saturating_sub(self.p);
            let mut acc = row[self.p] * x[i];
            for j in j0..i {
                let a = row[self.p - (i - j)];
                acc += a * x[j];
                y[j] += a * x[i];
            }
            y[i] += acc;
        }
    }

    pub fn mul(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        self.mul_into(x, &mut y);
        y
    }

    /// `xᴴ A y`.
    pub fn form(&self, x: &[Complex64], y: &[Complex64]) -> Complex64 {
        self.mul(y).iter().zip(x).map(|(ay, xi)| xi.conj() * ay).sum()
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// `A = L Lᵀ` for a symmetric positive definite band matrix.
#[derive(Debug, Clone)]
pub struct BandCholesky {
    n: usize,
    p: usize,
    l: Vec<f64>,
}

impl BandCholesky {
    pub fn factor(a: &SymBand) -> Result<Self> {
        let (n, p) = (a.n, a.p);
        let w = p + 1;
        let mut l = a.data.clone();
        for i in 0..n {
            let j0 = i.saturating_sub(p);
            for j in j0..=i {
                // L[i][j] = (A[i][j] − Σ_k L[i][k] L[j][k]) / L[j][j]
                let k0 = j0.max(j.saturating_sub(p));
                let mut s = l[i * w + p - (i - j)];
                for k in k0..j {
                    s -= l[i * w + p - (i - k)] * l[j * w + p - (j - k)];
                }
                if i == j {
                    if !(s > 0.0) || !s.is_finite() {
                        return Err(Error::Singular(format!(
                            "band matrix is not positive definite (pivot {s:e} at row {i})"
                        )));
                    }
                    l[i * w + p] = s.sqrt();
                } else {
                    l[i * w + p - (i - j)] = s / l[j * w + p];
                }
            }
        }
        Ok(BandCholesky { n, p, l })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Overwrites `x` with `A⁻¹ x`.
    pub fn solve_in_place(&self, x: &mut [Complex64]) {
        assert_eq!(x.len(), self.n);
        let (n, p, w) = (self.n, self.p, self.p + 1);
        for i in 0..n {
            let row = &self.l[i * w..(i + 1) * w];
            let mut s = x[i];
            for j in i.saturating_sub(p)..i {
                s -= row[p - (i - j)] * x[j];
            }
            x[i] = s / row[p];
        }
        for i in (0..n).rev() {
            let s = x[i] / self.l[i * w + p];
            x[i] = s;
            for j in i.saturating_sub(p)..i {
                x[j] -= self.l[i * w + p - (i - j)] * s;
            }
        }
    }
}
