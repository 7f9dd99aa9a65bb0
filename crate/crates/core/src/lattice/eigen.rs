//! Lowest eigenpairs of sparse Hermitian matrices.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::sparse::{BandCholesky, CsrMatrix};
use crate::error::{validation, Error, Result};

type C = Complex64;

/// Dense Hermitian eigensolve at or below this size.
pub const DENSE_LIMIT: usize = 600;
/// Shift-invert is used when the banded factorization costs at most this many
/// multiply-adds (`n · bw²`).
pub const BAND_BUDGET: f64 = 4e9;
pub const RESIDUAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EigenMethod {
    Dense,
    ShiftInvert,
    Lanczos,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    #[serde(skip)]
    pub vectors: Vec<Vec<C>>,
    /// `‖H v - λ v‖` for unit `v`.
    pub residuals: Vec<f64>,
    pub method: EigenMethod,
    pub shift: Option<f64>,
}

fn dot(a: &[C], b: &[C]) -> C {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(a: &[C]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn residual(h: &CsrMatrix, v: &[C], lambda: f64) -> f64 {
    let hv = h.mul_vec(v);
    hv.iter().zip(v).map(|(a, b)| (a - b * lambda).norm_sqr()).sum::<f64>().sqrt() / norm(v)
}

fn dense(h: &CsrMatrix, k: usize) -> Result<EigenPairs> {
    let eig = nalgebra::SymmetricEigen::new(h.to_dense());
    let mut order: Vec<usize> = (0..h.n()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut out = EigenPairs { values: vec![], vectors: vec![], residuals: vec![], method: EigenMethod::Dense, shift: None };
    for &i in order.iter().take(k) {
        let v: Vec<C> = eig.eigenvectors.column(i).iter().copied().collect();
        let lam = eig.eigenvalues[i];
        out.residuals.push(residual(h, &v, lam));
        out.values.push(lam);
        out.vectors.push(v);
    }
    Ok(out)
}

/// Largest eigenpairs of a Hermitian operator by thick-restart Krylov
/// iteration with full reorthogonalization. `accept` maps a Ritz pair to its
/// residual in the caller's terms.
fn krylov_largest(
    n: usize,
    nev: usize,
    apply: &dyn Fn(&[C]) -> Vec<C>,
    accept: &dyn Fn(f64, &[C]) -> f64,
    max_restarts: usize,
    seed: u64,
) -> std::result::Result<Vec<(f64, Vec<C>, f64)>, f64> {
    let ncv = (2 * nev + 20).max(40).min(n);
    let keep = (nev + (ncv - nev) / 2).min(ncv - 1).max(nev);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let random = |rng: &mut ChaCha8Rng| -> Vec<C> {
        (0..n).map(|_| C::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    };
    let mut v: Vec<Vec<C>> = Vec::with_capacity(ncv);
    let mut w: Vec<Vec<C>> = Vec::with_capacity(ncv);
    let mut worst = f64::INFINITY;
    for _ in 0..max_restarts {
        while v.len() < ncv {
            let mut cand = match w.last() {
                Some(last) => last.clone(),
                None => random(&mut rng),
            };
            let scale = norm(&cand).max(1e-300);
            for _ in 0..2 {
                for b in &v {
                    let c = dot(b, &cand);
                    cand.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                }
            }
            let mut nc = norm(&cand);
            if nc <= 1e-10 * scale {
                // invariant subspace: continue with a fresh direction
                cand = random(&mut rng);
                for _ in 0..2 {
                    for b in &v {
                        let c = dot(b, &cand);
                        cand.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
                    }
                }
                nc = norm(&cand);
            }
            cand.iter_mut().for_each(|x| *x /= nc);
            w.push(apply(&cand));
            v.push(cand);
        }
        let m = v.len();
        let mut t = DMatrix::<C>::zeros(m, m);
        for i in 0..m {
            for j in i..m {
                let a = 0.5 * (dot(&v[i], &w[j]) + dot(&w[i], &v[j]));
                t[(i, j)] = a;
                t[(j, i)] = a.conj();
            }
        }
        let eig = nalgebra::SymmetricEigen::new(t);
        let mut order: Vec<usize> = (0..m).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
        let combine = |basis: &[Vec<C>], col: usize| -> Vec<C> {
            let mut x = vec![C::new(0.0, 0.0); n];
            for (r, b) in basis.iter().enumerate() {
                let c = eig.eigenvectors[(r, col)];
                x.iter_mut().zip(b).for_each(|(xi, bi)| *xi += c * bi);
            }
            x
        };
        let mut pairs = Vec::with_capacity(nev);
        worst = 0.0;
        for &col in order.iter().take(nev) {
            let x = combine(&v, col);
            let res = accept(eig.eigenvalues[col], &x);
            worst = f64::max(worst, res);
            pairs.push((eig.eigenvalues[col], x, res));
        }
        if worst <= RESIDUAL_TOL {
            return Ok(pairs);
        }
        let nv: Vec<Vec<C>> = order.iter().take(keep).map(|&c| combine(&v, c)).collect();
        let nw: Vec<Vec<C>> = order.iter().take(keep).map(|&c| combine(&w, c)).collect();
        v = nv;
        w = nw;
    }
    Err(worst)
}

/// The `k` smallest eigenvalues of a Hermitian matrix with unit eigenvectors
/// and residuals `‖H v - λ v‖ ≤ 1e-8`.
pub fn lowest_eigenpairs(h: &CsrMatrix, k: usize) -> Result<EigenPairs> {
    let n = h.n();
    if k == 0 || k > n {
        return Err(validation(format!("requested {k} eigenvalues of a {n}×{n} matrix")));
    }
    if n <= DENSE_LIMIT {
        return dense(h, k);
    }
    let bw = h.bandwidth() as f64;
    if (n as f64) * bw * bw <= BAND_BUDGET {
        shift_invert(h, k)
    } else {
        lanczos(h, k)
    }
}

pub fn lowest_eigenvalues(h: &CsrMatrix, k: usize) -> Result<Vec<f64>> {
    Ok(lowest_eigenpairs(h, k)?.values)
}

fn finish(h: &CsrMatrix, mut pairs: Vec<(f64, Vec<C>, f64)>, method: EigenMethod, shift: Option<f64>) -> EigenPairs {
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut out = EigenPairs { values: vec![], vectors: vec![], residuals: vec![], method, shift };
    for (lam, mut v, _) in pairs {
        let nv = norm(&v);
        v.iter_mut().for_each(|x| *x /= nv);
        // Rayleigh quotient of the normalized Ritz vector
        let rq = h.form(&v).re;
        out.residuals.push(residual(h, &v, rq));
        out.values.push(if (rq - lam).abs() < 1e-6 * (1.0 + lam.abs()) { rq } else { lam });
        out.vectors.push(v);
    }
    out
}

fn lanczos(h: &CsrMatrix, k: usize) -> Result<EigenPairs> {
    let apply = |x: &[C]| -> Vec<C> { h.mul_vec(x).into_iter().map(|y| -y).collect() };
    let accept = |theta: f64, x: &[C]| residual(h, x, -theta);
    match krylov_largest(h.n(), k, &apply, &accept, 400, h.n() as u64) {
        Ok(p) => Ok(finish(h, p.into_iter().map(|(t, x, r)| (-t, x, r)).collect(), EigenMethod::Lanczos, None)),
        Err(r) => Err(Error::Solver { residual: r }),
    }
}

fn shift_invert(h: &CsrMatrix, k: usize) -> Result<EigenPairs> {
    let scale = h.diagonal().iter().map(|d| d.re.abs()).fold(1.0, f64::max);
    let mut sigma = h.gershgorin_lower() - 1e-3 * scale;
    let mut fact = loop {
        match BandCholesky::factor(h, sigma) {
            Some(f) => break f,
            None => sigma -= scale,
        }
    };
    // move the shift up to just below the lowest eigenvalue
    for _ in 0..3 {
        let apply = |x: &[C]| fact.solve(x);
        let accept = |_: f64, _: &[C]| 0.0;
        let Ok(p) = krylov_largest(h.n(), 1, &apply, &accept, 1, 7) else { break };
        let est = sigma + 1.0 / p[0].0;
        let mut trial = est - 0.02 * (est - sigma) - 1e-9 * scale;
        let mut moved = false;
        for _ in 0..30 {
            if trial <= sigma {
                break;
            }
            if let Some(f) = BandCholesky::factor(h, trial) {
                sigma = trial;
                fact = f;
                moved = true;
                break;
            }
            trial = 0.5 * (trial + sigma);
        }
        if !moved {
            break;
        }
    }
    let apply = |x: &[C]| fact.solve(x);
    let accept = |theta: f64, x: &[C]| residual(h, x, sigma + 1.0 / theta);
    match krylov_largest(h.n(), k, &apply, &accept, 200, h.n() as u64) {
        Ok(p) => Ok(finish(
            h,
            p.into_iter().map(|(t, x, r)| (sigma + 1.0 / t, x, r)).collect(),
            EigenMethod::ShiftInvert,
            Some(sigma),
        )),
        Err(r) => Err(Error::Solver { residual: r }),
    }
}
