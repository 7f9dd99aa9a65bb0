//! Compressed sparse rows for Hermitian lattice operators, a banded Cholesky
//! factorization for shift-invert, and Matrix Market export.

use std::io::{self, Write};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<Complex64>,
}

impl CsrMatrix {
    /// Rows given as `(column, value)` lists; columns are sorted here.
    pub fn from_rows(rows: Vec<Vec<(usize, Complex64)>>) -> Self {
        let n = rows.len();
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        for mut row in rows {
            row.sort_by_key(|e| e.0);
            for (c, v) in row {
                debug_assert!(c < n);
                cols.push(c);
                vals.push(v);
            }
            row_ptr.push(cols.len());
        }
        CsrMatrix { n, row_ptr, cols, vals }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, Complex64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.vals[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&j) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => Complex64::new(0.0, 0.0),
        }
    }

    pub fn diagonal(&self) -> Vec<Complex64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut y = vec![Complex64::new(0.0, 0.0); self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[Complex64], y: &mut [Complex64]) {
        y.par_iter_mut().enumerate().with_min_len(1024).for_each(|(i, yi)| {
            *yi = self.row(i).map(|(j, v)| v * x[j]).sum();
        });
    }

    /// `x^H A x`.
    pub fn form(&self, x: &[Complex64]) -> Complex64 {
        self.mul_vec(x).iter().zip(x).map(|(ax, xi)| xi.conj() * ax).sum()
    }

    /// Largest `|A_ij - conj(A_ji)|`.
    pub fn hermitian_defect(&self) -> f64 {
        (0..self.n)
            .into_par_iter()
            .map(|i| self.row(i).map(|(j, v)| (v - self.get(j, i).conj()).norm()).fold(0.0, f64::max))
            .reduce(|| 0.0, f64::max)
    }

    /// Largest `|i - j|` over stored entries.
    pub fn bandwidth(&self) -> usize {
        (0..self.n)
            .map(|i| self.row(i).map(|(j, _)| i.abs_diff(j)).max().unwrap_or(0))
            .max()
            .unwrap_or(0)
    }

    /// `A + diag(d)`.
    pub fn add_diagonal(&self, d: &[f64]) -> CsrMatrix {
        assert_eq!(d.len(), self.n);
        let rows = (0..self.n)
            .map(|i| {
                let mut row: Vec<_> = self.row(i).collect();
                match row.iter_mut().find(|e| e.0 == i) {
                    Some(e) => e.1 += d[i],
                    None => row.push((i, Complex64::new(d[i], 0.0))),
                }
                row
            })
            .collect();
        CsrMatrix::from_rows(rows)
    }

    /// Gershgorin lower bound on the spectrum of a Hermitian matrix.
    pub fn gershgorin_lower(&self) -> f64 {
        (0..self.n)
            .map(|i| {
                let (mut diag, mut off) = (0.0, 0.0);
                for (j, v) in self.row(i) {
                    if j == i {
                        diag = v.re;
                    } else {
                        off += v.norm();
                    }
                }
                diag - off
            })
            .fold(f64::INFINITY, f64::min)
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<Complex64> {
        let mut m = nalgebra::DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// Matrix Market coordinate format, complex Hermitian, lower triangle.
    pub fn write_matrix_market<W: Write>(&self, mut w: W) -> io::Result<()> {
        let lower: usize = (0..self.n).map(|i| self.row(i).filter(|(j, _)| *j <= i).count()).sum();
        writeln!(w, "%%MatrixMarket matrix coordinate complex hermitian")?;
        writeln!(w, "{} {} {}", self.n, self.n, lower)?;
        for i in 0..self.n {
            for (j, v) in self.row(i).filter(|(j, _)| *j <= i) {
                writeln!(w, "{} {} {:e} {:e}", i + 1, j + 1, v.re, v.im)?;
            }
        }
        Ok(())
    }
}

/// `A - σ I = L L^H` for a Hermitian band matrix, lower band stored by rows.
pub struct BandCholesky {
    n: usize,
    bw: usize,
    /// Row `i` holds `L[i][i-bw..=i]`.
    band: Vec<Complex64>,
}

impl BandCholesky {
    /// Returns `None` when `A - σ I` is not positive definite.
    pub fn factor(a: &CsrMatrix, sigma: f64) -> Option<Self> {
        let n = a.n();
        let bw = a.bandwidth();
        let w = bw + 1;
        let mut band = vec![Complex64::new(0.0, 0.0); n * w];
        for i in 0..n {
            for (j, v) in a.row(i) {
                if j <= i {
                    band[i * w + (bw - (i - j))] = if i == j { v - sigma } else { v };
                }
            }
        }
        // L[i][j] lives at band[i*w + bw - (i - j)]
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            for j in lo..=i {
                let jlo = j.saturating_sub(bw).max(lo);
                let mut s = band[i * w + bw - (i - j)];
                let (ri, rj) = (i * w + bw - i, j * w + bw - j);
                for k in jlo..j {
                    s -= band[ri + k] * band[rj + k].conj();
                }
                if i == j {
                    if !(s.re > 0.0) || !s.re.is_finite() {
                        return None;
                    }
                    band[i * w + bw] = Complex64::new(s.re.sqrt(), 0.0);
                } else {
                    band[i * w + bw - (i - j)] = s / band[j * w + bw].re;
                }
            }
        }
        Some(BandCholesky { n, bw, band })
    }

    /// Solves `(A - σ I) x = b`.
    pub fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let (n, bw, w) = (self.n, self.bw, self.bw + 1);
        let mut y = b.to_vec();
        for i in 0..n {
            let lo = i.saturating_sub(bw);
            let mut s = y[i];
            for k in lo..i {
                s -= self.band[i * w + bw - (i - k)] * y[k];
            }
            y[i] = s / self.band[i * w + bw].re;
        }
        for i in (0..n).rev() {
            y[i] /= self.band[i * w + bw].re;
            let yi = y[i];
            let lo = i.saturating_sub(bw);
            for k in lo..i {
                y[k] -= self.band[i * w + bw - (i - k)].conj() * yi;
            }
        }
        y
    }
}
