//! Gauge-covariant lattice discretization of `H_A = -Σ (∂_j - i a_j)²` with
//! Dirichlet truncation at depth `δ` from the boundary.

mod eigen;
mod probes;
mod sparse;

pub use eigen::{lowest_eigenpairs, lowest_eigenvalues, EigenMethod, EigenPairs, DENSE_LIMIT, RESIDUAL_TOL};
pub use probes::{
    commutator_bound_test, commutator_convergence, hur_hypothesis_probe, landau_check, CommutatorReport,
    CommutatorRow, CommutatorStudy, FormTestConfig, HurRow, HurTable, LandauReport, LandauRow,
};
pub use sparse::{BandCholesky, CsrMatrix};

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::domains::Domain;
use crate::error::{validation, Error, Result};
use crate::fields::FieldSpec;

/// Smallest fraction of a step allowed between a point and the truncation
/// surface.
pub const MIN_BOUNDARY_FRACTION: f64 = 1e-3;
/// Largest grid accepted by [`LatticeGrid::new`].
pub const MAX_POINTS: usize = 2_000_000;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Quadrature {
    #[default]
    Midpoint,
    Gauss3,
}

/// Points `h · idx` of the integer lattice with `D ≥ δ` (or `D > 0` when
/// `δ = 0`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeGrid {
    pub h: f64,
    pub delta: f64,
    pub domain: Domain,
    /// Multi-index of the lowest corner of the scanned box.
    pub lower: Vec<i64>,
    pub shape: Vec<usize>,
    pub points: Vec<Vec<i64>>,
    #[serde(skip)]
    lookup: Vec<u32>,
}

const ABSENT: u32 = u32::MAX;

impl LatticeGrid {
    pub fn new(dom: &Domain, h: f64, delta: f64) -> Result<Self> {
        dom.validate()?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(validation("grid spacing must be positive"));
        }
        if !(delta >= 0.0) {
            return Err(validation("truncation depth must be nonnegative"));
        }
        if delta > 0.0 && h >= delta / 2.0 {
            return Err(validation(format!("grid spacing {h} must be below δ/2 = {}", delta / 2.0)));
        }
        let (lo, hi) = dom
            .bounding_box()
            .ok_or_else(|| validation("the lattice needs a bounded domain"))?;
        let lower: Vec<i64> = lo.iter().map(|v| (v / h).floor() as i64).collect();
        let upper: Vec<i64> = hi.iter().map(|v| (v / h).ceil() as i64).collect();
        let shape: Vec<usize> = lower.iter().zip(&upper).map(|(a, b)| (b - a + 1) as usize).collect();
        let total = shape.iter().try_fold(1usize, |acc, s| acc.checked_mul(*s));
        if total.is_none_or(|t| t > 50 * MAX_POINTS) {
            return Err(validation("grid is too large"));
        }
        let total = total.unwrap();
        let keep: Vec<Option<Vec<i64>>> = (0..total)
            .into_par_iter()
            .map(|flat| {
                let idx = unflatten(flat, &lower, &shape);
                let x: Vec<f64> = idx.iter().map(|i| *i as f64 * h).collect();
                let sd = dom.signed_distance(&x);
                let inside = if delta > 0.0 { sd >= delta } else { sd > 0.0 };
                inside.then_some(idx)
            })
            .collect();
        let mut lookup = vec![ABSENT; total];
        let mut points = Vec::new();
        for (flat, idx) in keep.into_iter().enumerate() {
            if let Some(idx) = idx {
                lookup[flat] = points.len() as u32;
                points.push(idx);
            }
        }
        if points.is_empty() {
            return Err(validation("no grid point lies at depth ≥ δ"));
        }
        if points.len() > MAX_POINTS {
            return Err(validation(format!("{} grid points exceed the limit {MAX_POINTS}", points.len())));
        }
        Ok(LatticeGrid { h, delta, domain: dom.clone(), lower, shape, points, lookup })
    }

    pub fn dim(&self) -> usize {
        self.shape.len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn coords(&self, i: usize) -> Vec<f64> {
        self.points[i].iter().map(|v| *v as f64 * self.h).collect()
    }

    pub fn index_of(&self, idx: &[i64]) -> Option<usize> {
        let mut flat = 0usize;
        for ((v, lo), s) in idx.iter().zip(&self.lower).zip(&self.shape) {
            let off = v - lo;
            if off < 0 || off as usize >= *s {
                return None;
            }
            flat = flat * s + off as usize;
        }
        match self.lookup[flat] {
            ABSENT => None,
            i => Some(i as usize),
        }
    }

    fn neighbor(&self, i: usize, axis: usize, step: i64) -> Option<usize> {
        let mut idx = self.points[i].clone();
        idx[axis] += step;
        self.index_of(&idx)
    }

    /// Fraction `θ ∈ (0, 1]` of a step from point `i` along `±e_axis` to the
    /// truncation surface.
    fn boundary_fraction(&self, i: usize, axis: usize, sign: f64) -> f64 {
        let x = self.coords(i);
        let level = self.delta;
        let g = |t: f64| {
            let mut y = x.clone();
            y[axis] += sign * t;
            self.domain.signed_distance(&y) - level
        };
        let (mut a, mut b) = (0.0, self.h);
        if g(b) >= 0.0 {
            return 1.0;
        }
        for _ in 0..60 {
            let m = 0.5 * (a + b);
            if g(m) >= 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        (0.5 * (a + b) / self.h).clamp(MIN_BOUNDARY_FRACTION, 1.0)
    }
}

fn unflatten(mut flat: usize, lower: &[i64], shape: &[usize]) -> Vec<i64> {
    let mut idx = vec![0; shape.len()];
    for k in (0..shape.len()).rev() {
        idx[k] = lower[k] + (flat % shape[k]) as i64;
        flat /= shape[k];
    }
    idx
}

/// A lattice link from `from` to `from + h e_axis` with `angle = ∫ A`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub axis: usize,
    pub angle: f64,
}

/// `∫ A` along the segment from `x` to `x + h e_axis`.
pub fn link_angle(f: &FieldSpec, x: &[f64], axis: usize, h: f64, quad: Quadrature) -> Result<f64> {
    let at = |s: f64| -> Result<f64> {
        let mut y = x.to_vec();
        y[axis] += s * h;
        Ok(f.evaluate_potential(&y)?.0[axis])
    };
    Ok(match quad {
        Quadrature::Midpoint => h * at(0.5)?,
        Quadrature::Gauss3 => {
            let r = 0.5 * 0.6f64.sqrt();
            h * (5.0 * at(0.5 - r)? + 8.0 * at(0.5)? + 5.0 * at(0.5 + r)?) / 18.0
        }
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatticeOperator {
    pub grid: LatticeGrid,
    pub matrix: CsrMatrix,
    pub quadrature: Quadrature,
    /// Sorted by `(from, to)`.
    pub edges: Vec<Edge>,
    /// Dirichlet contribution `Σ 1/(θ h²)` to the diagonal, per point.
    pub boundary: Vec<f64>,
}

/// Peierls discretization: `H[x][y] = -exp(-i ∫_x^y A)/h²`; the diagonal is
/// `2d/h²` away from the truncation surface, with a ghost-point correction
/// `1/(θ h²)` for links cut at fraction `θ`.
pub fn assemble(f: &FieldSpec, dom: &Domain, h: f64, delta: f64, quad: Quadrature) -> Result<LatticeOperator> {
    f.validate()?;
    if f.dim() != dom.dim() {
        return Err(Error::Dimension { expected: dom.dim(), got: f.dim() });
    }
    let grid = LatticeGrid::new(dom, h, delta)?;
    assemble_on(f, grid, quad)
}

pub fn assemble_on(f: &FieldSpec, grid: LatticeGrid, quad: Quadrature) -> Result<LatticeOperator> {
    let (n, d, h) = (grid.len(), grid.dim(), grid.h);
    let per_point: Vec<(Vec<Edge>, f64)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut edges = Vec::new();
            let mut boundary = 0.0;
            let x = grid.coords(i);
            for axis in 0..d {
                match grid.neighbor(i, axis, 1) {
                    Some(j) => {
                        let angle = link_angle(f, &x, axis, h, quad).map_err(|e| {
                            let mut to = x.clone();
                            to[axis] += h;
                            Error::Assembly { from: x.clone(), to, reason: e.to_string() }
                        })?;
                        if !angle.is_finite() {
                            let mut to = x.clone();
                            to[axis] += h;
                            return Err(Error::Assembly { from: x.clone(), to, reason: "non-finite line integral".into() });
                        }
                        edges.push(Edge { from: i, to: j, axis, angle });
                    }
                    None => boundary += 1.0 / (grid.boundary_fraction(i, axis, 1.0) * h * h),
                }
                if grid.neighbor(i, axis, -1).is_none() {
                    boundary += 1.0 / (grid.boundary_fraction(i, axis, -1.0) * h * h);
                }
            }
            Ok((edges, boundary))
        })
        .collect::<Result<_>>()?;
    let inv_h2 = 1.0 / (h * h);
    let mut rows: Vec<Vec<(usize, Complex64)>> = vec![Vec::with_capacity(2 * d + 1); n];
    let mut edges = Vec::new();
    let mut boundary = Vec::with_capacity(n);
    for (es, b) in per_point {
        boundary.push(b);
        for e in es {
            let u = Complex64::from_polar(inv_h2, -e.angle);
            rows[e.from].push((e.to, -u));
            rows[e.to].push((e.from, -u.conj()));
            edges.push(e);
        }
    }
    for (i, row) in rows.iter_mut().enumerate() {
        let links = row.len() as f64;
        row.push((i, Complex64::new(links * inv_h2 + boundary[i], 0.0)));
    }
    edges.sort_by_key(|e| (e.from, e.to));
    Ok(LatticeOperator { matrix: CsrMatrix::from_rows(rows), grid, quadrature: quad, edges, boundary })
}

impl LatticeOperator {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    fn volume(&self) -> f64 {
        self.grid.h.powi(self.grid.dim() as i32)
    }

    pub fn edge_angle(&self, from: usize, to: usize) -> Option<f64> {
        self.edges.binary_search_by_key(&(from, to), |e| (e.from, e.to)).ok().map(|k| self.edges[k].angle)
    }

    /// `Σ ∫A` around the cell with corner at point `i` spanned by `e_j, e_k`,
    /// or `None` if a corner is missing.
    pub fn plaquette_angle(&self, i: usize, j: usize, k: usize) -> Option<f64> {
        let g = &self.grid;
        let a = g.neighbor(i, j, 1)?;
        let b = g.neighbor(i, k, 1)?;
        let c = g.neighbor(a, k, 1)?;
        Some(self.edge_angle(i, a)? + self.edge_angle(a, c)? - self.edge_angle(b, c)? - self.edge_angle(i, b)?)
    }

    /// `h_A(u) ≈ ⟨H u, u⟩ h^d`.
    pub fn quadratic_form(&self, u: &[Complex64]) -> Result<f64> {
        if u.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: u.len() });
        }
        if u.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(validation("grid vector has non-finite entries"));
        }
        Ok(self.matrix.form(u).re * self.volume())
    }

    /// The same form as a sum of squared covariant differences over links plus
    /// the Dirichlet terms.
    pub fn edge_form(&self, u: &[Complex64]) -> Result<f64> {
        if u.len() != self.len() {
            return Err(Error::Dimension { expected: self.len(), got: u.len() });
        }
        let h2 = self.grid.h * self.grid.h;
        let links: f64 = self
            .edges
            .iter()
            .map(|e| (u[e.from] - Complex64::from_polar(1.0, -e.angle) * u[e.to]).norm_sqr() / h2)
            .sum();
        let walls: f64 = self.boundary.iter().zip(u).map(|(b, z)| b * z.norm_sqr()).sum();
        Ok((links + walls) * self.volume())
    }

    /// `‖u‖² = Σ |u|² h^d`.
    pub fn norm_sqr(&self, u: &[Complex64]) -> f64 {
        u.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.volume()
    }

    pub fn lowest_eigenvalues(&self, k: usize) -> Result<Vec<f64>> {
        lowest_eigenvalues(&self.matrix, k)
    }

    pub fn lowest_eigenpairs(&self, k: usize) -> Result<EigenPairs> {
        lowest_eigenpairs(&self.matrix, k)
    }

    /// `H - diag(w)`.
    pub fn shifted(&self, w: &[f64]) -> CsrMatrix {
        let neg: Vec<f64> = w.iter().map(|v| -v).collect();
        self.matrix.add_diagonal(&neg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Polytope;
    use crate::exterior::TwoForm;
    use crate::fields::Polynomial;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const J01_SQ: f64 = 5.783185962946784;

    fn free(d: usize) -> FieldSpec {
        FieldSpec::Constant { b0: TwoForm::zeros(d) }
    }

    fn random_vector(n: usize, seed: u64) -> Vec<Complex64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect()
    }

    #[test]
    fn free_disk_converges_to_the_bessel_zero() {
        let mut errs = Vec::new();
        for h in [0.1, 0.05, 0.025] {
            let op = assemble(&free(2), &Domain::disk(1.0), h, 0.0, Quadrature::Midpoint).unwrap();
            let l = op.lowest_eigenvalues(1).unwrap()[0];
            errs.push((l - J01_SQ).abs());
        }
        assert!(errs[0] / J01_SQ < 0.02, "{errs:?}");
        for w in errs.windows(2) {
            assert!((w[0] / w[1]).log2() >= 1.8, "{errs:?}");
        }
    }

    #[test]
    fn free_operator_is_a_real_laplacian() {
        let op = assemble(&free(2), &Domain::square(0.5).unwrap(), 0.1, 0.0, Quadrature::Midpoint).unwrap();
        assert!(op.matrix.hermitian_defect() <= 1e-13);
        for i in 0..op.len() {
            assert!(op.matrix.row(i).all(|(_, v)| v.im == 0.0));
        }
        // a square with grid-aligned walls has θ = 1 everywhere
        let e = op.lowest_eigenvalues(1).unwrap()[0];
        let exact = 2.0 * (2.0 - 2.0 * (std::f64::consts::PI / 10.0).cos()) / 0.01;
        assert!((e - exact).abs() < 1e-9, "{e} vs {exact}");
    }

    #[test]
    fn spike_form_is_twice_the_dimension() {
        let op = assemble(&free(2), &Domain::disk(1.0), 0.1, 0.0, Quadrature::Midpoint).unwrap();
        let centre = op.grid.index_of(&[0, 0]).unwrap();
        let mut u = vec![Complex64::new(0.0, 0.0); op.len()];
        u[centre] = Complex64::new(1.0, 0.0);
        assert!((op.quadratic_form(&u).unwrap() - 4.0).abs() < 1e-12);
        let zero = vec![Complex64::new(0.0, 0.0); op.len()];
        assert_eq!(op.quadratic_form(&zero).unwrap(), 0.0);
        assert!(op.quadratic_form(&zero[1..]).is_err());
    }

    #[test]
    fn edge_sum_identity() {
        let f = FieldSpec::DiskCounterexample { alpha: 0.5 };
        let op = assemble(&f, &Domain::disk(1.0), 0.05, 0.2, Quadrature::Gauss3).unwrap();
        assert!(op.matrix.hermitian_defect() <= 1e-13);
        let u = random_vector(op.len(), 3);
        let a = op.quadratic_form(&u).unwrap();
        let b = op.edge_form(&u).unwrap();
        assert!((a - b).abs() <= 1e-10 * a.abs(), "{a} {b}");
        assert!(a > 0.0);
    }

    #[test]
    fn constant_field_plaquettes_carry_the_flux() {
        let b = TwoForm::from_upper(2, |_, _| 1.0);
        let op = assemble(&FieldSpec::Constant { b0: b }, &Domain::square(10.0).unwrap(), 0.25, 0.6, Quadrature::Midpoint).unwrap();
        let mut checked = 0;
        for i in (0..op.len()).step_by(97) {
            if let Some(a) = op.plaquette_angle(i, 0, 1) {
                assert!((a - 0.0625).abs() < 1e-6);
                checked += 1;
            }
        }
        assert!(checked > 20);
    }

    #[test]
    fn smooth_field_plaquettes_match_the_field() {
        let f = FieldSpec::DiskCounterexample { alpha: 0.8 };
        let h = 0.02;
        let op = assemble(&f, &Domain::disk(1.0), h, 0.3, Quadrature::Midpoint).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut checked = 0;
        while checked < 100 {
            let i = rng.random_range(0..op.len());
            let Some(a) = op.plaquette_angle(i, 0, 1) else { continue };
            let mut c = op.grid.coords(i);
            c[0] += h / 2.0;
            c[1] += h / 2.0;
            let b = f.evaluate_field(&c).unwrap().get(0, 1);
            assert!((a - h * h * b).abs() <= 2.0 * h.powi(4) * (1.0 + b.abs()), "{a} vs {}", h * h * b);
            checked += 1;
        }
    }

    #[test]
    fn gauge_shift_conjugates_the_operator() {
        let base = FieldSpec::DiskCounterexample { alpha: 0.4 };
        let poly = Polynomial::new(vec![(1.0, vec![2, 0]), (-3.0, vec![1, 1])]);
        let shifted = FieldSpec::GaugeShift { base: Box::new(base.clone()), f: poly.clone() };
        let dom = Domain::disk(1.0);
        let a = assemble(&base, &dom, 0.05, 0.15, Quadrature::Midpoint).unwrap();
        let b = assemble(&shifted, &dom, 0.05, 0.15, Quadrature::Midpoint).unwrap();
        let phase: Vec<Complex64> =
            (0..a.len()).map(|i| Complex64::from_polar(1.0, poly.value(&a.grid.coords(i)))).collect();
        for i in 0..a.len() {
            for (j, v) in b.matrix.row(i) {
                let want = phase[i] * a.matrix.get(i, j) * phase[j].conj();
                assert!((v - want).norm() < 1e-9, "{v} vs {want}");
            }
        }
        let u = random_vector(a.len(), 5);
        let gu: Vec<Complex64> = u.iter().zip(&phase).map(|(x, p)| x * p).collect();
        let (fa, fb) = (a.quadratic_form(&u).unwrap(), b.quadratic_form(&gu).unwrap());
        assert!((fa - fb).abs() <= 1e-8 * fa);
    }

    #[test]
    fn four_dimensional_constant_field() {
        // b12 = 3, b34 = 1: lowest Landau level |B|_sp = 4
        let b = TwoForm::from_upper(4, |j, k| match (j, k) {
            (0, 1) => 3.0,
            (2, 3) => 1.0,
            _ => 0.0,
        });
        let dom = Domain::Polytope(Polytope::axis_box(&[-2.5; 4], &[2.5; 4]).unwrap());
        let op = assemble(&FieldSpec::Constant { b0: b }, &dom, 0.25, 0.0, Quadrature::Midpoint).unwrap();
        let l = op.lowest_eigenvalues(1).unwrap()[0];
        assert!((l - 4.0).abs() <= 0.15 * 4.0, "{l}");
    }

    #[test]
    fn singular_links_name_the_edge() {
        // links beyond r = 1 leave the domain of the potential
        let f = FieldSpec::DiskCounterexample { alpha: 0.5 };
        let err = assemble(&f, &Domain::disk(1.2), 0.1, 0.0, Quadrature::Midpoint);
        assert!(matches!(err, Err(Error::Assembly { .. })), "{err:?}");
    }

    #[test]
    fn grid_rules() {
        assert!(LatticeGrid::new(&Domain::disk(1.0), 0.1, 0.15).is_err());
        assert!(LatticeGrid::new(&Domain::PuncturedSpace { dim: 3 }, 0.1, 0.3).is_err());
        assert_eq!(LatticeGrid::new(&Domain::disk(1.0), 0.1, 0.99).unwrap().len(), 1);
        let g = LatticeGrid::new(&Domain::disk(1.0), 0.1, 0.25).unwrap();
        for i in 0..g.len() {
            assert!(Domain::disk(1.0).distance(&g.coords(i)).unwrap() >= 0.25);
        }
    }
}
