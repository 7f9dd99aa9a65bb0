//! Pointwise exterior calculus on Euclidean space.
//!
//! A 1-form `Σ a_j dx_j` is a [`CoVector`]; a 2-form `Σ_{j<k} b_jk dx_j∧dx_k`
//! is stored as the full skew matrix `b_jk = -b_kj` in a [`TwoForm`].

use nalgebra::{DMatrix, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// Asymmetry above this is rejected when building a 2-form from a matrix.
pub const ANTISYMMETRY_TOL: f64 = 1e-12;
/// Relative tolerance used to pair the eigenvalues of `BᵀB`.
pub const PAIRING_TOL: f64 = 1e-9;
/// Below this spectral norm the direction `B/|B|_sp` is left undefined.
pub const DIRECTION_FLOOR: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CoVector(pub Vec<f64>);

impl CoVector {
    pub fn zeros(dim: usize) -> Self {
        CoVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn components(&self) -> &[f64] {
        &self.0
    }

    /// Euclidean norm `(Σ a_j²)^½`.
    pub fn norm(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum::<f64>().sqrt()
    }

    pub fn add(&self, other: &CoVector) -> CoVector {
        CoVector(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn scale(&self, c: f64) -> CoVector {
        CoVector(self.0.iter().map(|a| c * a).collect())
    }

    /// Pairing with a tangent vector.
    pub fn apply(&self, v: &[f64]) -> f64 {
        self.0.iter().zip(v).map(|(a, b)| a * b).sum()
    }
}

/// A constant-coefficient 2-form on `R^d`, kept as an exactly skew matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoForm {
    dim: usize,
    entries: Vec<f64>,
}

impl TwoForm {
    pub fn zeros(dim: usize) -> Self {
        TwoForm { dim, entries: vec![0.0; dim * dim] }
    }

    /// Builds the form from its upper-triangle coefficients `f(j, k)`, `j < k`.
    pub fn from_upper(dim: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut b = TwoForm::zeros(dim);
        for j in 0..dim {
            for k in (j + 1)..dim {
                b.set(j, k, f(j, k));
            }
        }
        b
    }

    /// Validating constructor from a square matrix.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let dim = rows.len();
        if dim < 2 {
            return Err(validation("2-forms need dimension at least 2"));
        }
        if rows.iter().any(|r| r.len() != dim) {
            return Err(validation("2-form matrix is not square"));
        }
        let mut b = TwoForm::zeros(dim);
        for j in 0..dim {
            if rows[j][j].abs() > ANTISYMMETRY_TOL {
                return Err(validation(format!("diagonal entry ({j},{j}) is nonzero")));
            }
            for k in (j + 1)..dim {
                let asym = (rows[j][k] + rows[k][j]).abs();
                if asym > ANTISYMMETRY_TOL {
                    return Err(validation(format!(
                        "entries ({j},{k}) and ({k},{j}) differ from antisymmetry by {asym:e}"
                    )));
                }
                b.set(j, k, 0.5 * (rows[j][k] - rows[k][j]));
            }
        }
        Ok(b)
    }

    pub fn from_matrix(m: &DMatrix<f64>) -> Result<Self> {
        let rows: Vec<Vec<f64>> = m.row_iter().map(|r| r.iter().copied().collect()).collect();
        TwoForm::from_rows(&rows)
    }

    /// The 3-d form `v1 dy∧dz + v2 dz∧dx + v3 dx∧dy` attached to a vector field.
    pub fn from_axial(v: [f64; 3]) -> Self {
        let mut b = TwoForm::zeros(3);
        b.set(1, 2, v[0]);
        b.set(2, 0, v[1]);
        b.set(0, 1, v[2]);
        b
    }

    /// Inverse of [`TwoForm::from_axial`]; `None` unless `d = 3`.
    pub fn axial(&self) -> Option<[f64; 3]> {
        (self.dim == 3).then(|| [self.get(1, 2), self.get(2, 0), self.get(0, 1)])
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.entries[j * self.dim + k]
    }

    /// Sets `b_jk` and `b_kj = -b_jk` together.
    pub fn set(&mut self, j: usize, k: usize, value: f64) {
        assert!(j != k || value == 0.0, "diagonal of a 2-form must vanish");
        self.entries[j * self.dim + k] = value;
        self.entries[k * self.dim + j] = -value;
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.dim).map(<[f64]>::to_vec).collect()
    }

    pub fn to_matrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }

    pub fn scale(&self, c: f64) -> TwoForm {
        TwoForm { dim: self.dim, entries: self.entries.iter().map(|b| c * b).collect() }
    }

    pub fn add(&self, other: &TwoForm) -> TwoForm {
        assert_eq!(self.dim, other.dim);
        TwoForm {
            dim: self.dim,
            entries: self.entries.iter().zip(&other.entries).map(|(a, b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &TwoForm) -> TwoForm {
        self.add(&other.scale(-1.0))
    }

    /// `(Σ_{j<k} b_jk²)^½`, the norm used to compare field directions.
    pub fn euclidean_norm(&self) -> f64 {
        let mut s = 0.0;
        for j in 0..self.dim {
            for k in (j + 1)..self.dim {
                s += self.get(j, k).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn euclidean_distance(&self, other: &TwoForm) -> f64 {
        self.sub(other).euclidean_norm()
    }

    /// Largest entry of `|b_jk|`.
    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, b| m.max(b.abs()))
    }

    /// Change of orthonormal frame: `Rᵀ B R`.
    pub fn conjugate(&self, r: &DMatrix<f64>) -> TwoForm {
        let m = r.transpose() * self.to_matrix() * r;
        TwoForm::from_upper(self.dim, |j, k| 0.5 * (m[(j, k)] - m[(k, j)]))
    }

    /// `B(u, v) = Σ b_jk u_j v_k`.
    pub fn evaluate(&self, u: &[f64], v: &[f64]) -> f64 {
        let mut s = 0.0;
        for j in 0..self.dim {
            for k in 0..self.dim {
                s += self.get(j, k) * u[j] * v[k];
            }
        }
        s
    }

    pub fn spectral_norm(&self) -> f64 {
        spectral_norm(self).map(|s| s.norm_sp).unwrap_or(f64::NAN)
    }
}

impl Serialize for TwoForm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for TwoForm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        TwoForm::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralDecomposition {
    /// `b_12 ≥ b_34 ≥ … ≥ 0`, one entry per 2-plane.
    pub singular_pairs: Vec<f64>,
    pub norm_sp: f64,
    /// `B/|B|_sp`, absent when the norm is below [`DIRECTION_FLOOR`].
    pub direction: Option<TwoForm>,
}

/// Spectral norm `|B|_sp = Σ b_{2j-1,2j}`, half the trace norm of the skew
/// endomorphism.
///
/// The singular values come from a symmetric eigensolve of `BᵀB`; each
/// cluster of nearly equal eigenvalues spans a `B`-invariant subspace `V`,
/// and the singular values on it are recomputed from `VᵀBV`, which stays
/// accurate for small pairs.
pub fn spectral_norm(b: &TwoForm) -> Result<SpectralDecomposition> {
    let d = b.dim();
    let m = b.to_matrix();
    let gram = m.transpose() * &m;
    let eig = SymmetricEigen::new(gram);
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mu: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i].max(0.0)).collect();
    let scale = mu[0].max(1.0);
    let tol = PAIRING_TOL * scale;

    let mut singular = Vec::with_capacity(d);
    let mut start = 0;
    while start < d {
        let mut end = start + 1;
        while end < d && mu[end - 1] - mu[end] <= tol {
            end += 1;
        }
        let cols: Vec<_> = order[start..end].iter().map(|&i| eig.eigenvectors.column(i)).collect();
        let basis = DMatrix::from_columns(&cols);
        let restricted = basis.transpose() * &m * &basis;
        let mut values: Vec<f64> = restricted.svd(false, false).singular_values.iter().copied().collect();
        values.sort_by(|a, b| b.total_cmp(a));
        singular.extend(values);
        start = end;
    }

    let half = d / 2;
    let mut pairs = Vec::with_capacity(half);
    for j in 0..half {
        let (a, c) = (mu[2 * j], mu[2 * j + 1]);
        if (a - c).abs() > tol {
            return Err(validation(format!(
                "singular values of a skew matrix must pair up; got squares {a:e} and {c:e}"
            )));
        }
        pairs.push(0.5 * (singular[2 * j] + singular[2 * j + 1]));
    }
    if d % 2 == 1 && mu[d - 1] > tol {
        return Err(validation(format!(
            "odd dimension leaves an unpaired singular value with square {:e}",
            mu[d - 1]
        )));
    }
    let norm_sp: f64 = pairs.iter().sum();
    let direction = (norm_sp >= DIRECTION_FLOOR).then(|| b.scale(1.0 / norm_sp));
    Ok(SpectralDecomposition { singular_pairs: pairs, norm_sp, direction })
}

/// A magnetic potential: a smooth 1-form on an open set of `R^d`.
pub trait PotentialField: Sync {
    fn dim(&self) -> usize;

    fn potential(&self, x: &[f64]) -> Result<CoVector>;

    /// Closed-form `dA`, when the field knows one.
    fn closed_form_field(&self, _x: &[f64]) -> Option<Result<TwoForm>> {
        None
    }

    /// Distance from `x` to the edge of the region where the potential is
    /// smooth; an error when `x` lies outside it.
    fn clearance(&self, _x: &[f64]) -> Result<f64> {
        Ok(f64::INFINITY)
    }
}

/// Wraps a closure as a potential defined on all of `R^d`.
pub struct FnPotential<F> {
    dim: usize,
    f: F,
}

impl<F> FnPotential<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnPotential { dim, f }
    }
}

impl<F> PotentialField for FnPotential<F>
where
    F: Fn(&[f64]) -> Vec<f64> + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn potential(&self, x: &[f64]) -> Result<CoVector> {
        Ok(CoVector((self.f)(x)))
    }
}

pub fn default_step(x: &[f64]) -> f64 {
    1e-5 * (1.0 + x.iter().map(|v| v * v).sum::<f64>().sqrt())
}

/// `dA` at `x`: the closed form when available, central differences otherwise.
pub fn exterior_derivative(
    a: &dyn PotentialField,
    x: &[f64],
    h: Option<f64>,
) -> Result<TwoForm> {
    let h = h.unwrap_or_else(|| default_step(x));
    check_step(a, x, h)?;
    if let Some(b) = a.closed_form_field(x) {
        return b;
    }
    central_difference_field(a, x, h)
}

fn check_step(a: &dyn PotentialField, x: &[f64], h: f64) -> Result<()> {
    if x.len() != a.dim() {
        return Err(Error::Dimension { expected: a.dim(), got: x.len() });
    }
    if !(h > 0.0) {
        return Err(validation("finite-difference step must be positive"));
    }
    if a.clearance(x)? <= h {
        return Err(Error::OutsideDomain { point: x.to_vec() });
    }
    Ok(())
}

/// `b_jk = ∂_j a_k - ∂_k a_j` by central differences, ignoring any closed form.
pub fn central_difference_field(a: &dyn PotentialField, x: &[f64], h: f64) -> Result<TwoForm> {
    check_step(a, x, h)?;
    let d = a.dim();
    // jac[j][k] = ∂_j a_k
    let mut jac = vec![vec![0.0; d]; d];
    let mut probe = x.to_vec();
    for j in 0..d {
        probe[j] = x[j] + h;
        let plus = a.potential(&probe)?;
        probe[j] = x[j] - h;
        let minus = a.potential(&probe)?;
        probe[j] = x[j];
        for k in 0..d {
            jac[j][k] = (plus.0[k] - minus.0[k]) / (2.0 * h);
        }
    }
    Ok(TwoForm::from_upper(d, |j, k| jac[j][k] - jac[k][j]))
}

/// A parameterized hypersurface `u ↦ x(u)` in `R^d`.
pub trait SurfaceChart {
    fn ambient_dim(&self) -> usize;

    fn param_dim(&self) -> usize {
        self.ambient_dim() - 1
    }

    fn point(&self, u: &[f64]) -> Vec<f64>;

    /// `∂x/∂u` as an `ambient × param` matrix.
    fn jacobian(&self, u: &[f64]) -> DMatrix<f64>;
}

/// `(θ, φ) ↦ r (sinθ cosφ, sinθ sinφ, cosθ)`; degenerate at the poles.
#[derive(Clone, Copy, Debug)]
pub struct SphericalChart {
    pub radius: f64,
}

impl SurfaceChart for SphericalChart {
    fn ambient_dim(&self) -> usize {
        3
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        let (t, p) = (u[0], u[1]);
        let r = self.radius;
        vec![r * t.sin() * p.cos(), r * t.sin() * p.sin(), r * t.cos()]
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let (t, p) = (u[0], u[1]);
        let r = self.radius;
        DMatrix::from_row_slice(
            3,
            2,
            &[
                r * t.cos() * p.cos(),
                -r * t.sin() * p.sin(),
                r * t.cos() * p.sin(),
                r * t.sin() * p.cos(),
                -r * t.sin(),
                0.0,
            ],
        )
    }
}

/// Graph chart of the hemisphere around `frame·e_3`:
/// `(s, t) ↦ frame · (s, t, √(r² - s² - t²))`. Isometric at the origin.
#[derive(Clone, Debug)]
pub struct HemisphereChart {
    pub radius: f64,
    /// Orthonormal frame; the third column is the chart center direction.
    pub frame: nalgebra::Matrix3<f64>,
}

impl HemisphereChart {
    /// Chart centered at the unit direction `pole`.
    pub fn centered_at(radius: f64, pole: [f64; 3]) -> Self {
        let n = nalgebra::Vector3::from(pole).normalize();
        let helper = if n.x.abs() < 0.9 { nalgebra::Vector3::x() } else { nalgebra::Vector3::y() };
        let e1 = helper.cross(&n).normalize();
        let e2 = n.cross(&e1);
        HemisphereChart { radius, frame: nalgebra::Matrix3::from_columns(&[e1, e2, n]) }
    }
}

impl SurfaceChart for HemisphereChart {
    fn ambient_dim(&self) -> usize {
        3
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        let h = (self.radius.powi(2) - u[0] * u[0] - u[1] * u[1]).max(0.0).sqrt();
        let p = self.frame * nalgebra::Vector3::new(u[0], u[1], h);
        vec![p.x, p.y, p.z]
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let h = (self.radius.powi(2) - u[0] * u[0] - u[1] * u[1]).max(0.0).sqrt();
        let local = nalgebra::Matrix3x2::new(1.0, 0.0, 0.0, 1.0, -u[0] / h, -u[1] / h);
        let j = self.frame * local;
        DMatrix::from_iterator(3, 2, j.iter().copied())
    }
}

/// `(φ, ψ) ↦ ((R + a cosψ) cosφ, (R + a cosψ) sinφ, a sinψ)`.
#[derive(Clone, Copy, Debug)]
pub struct TorusChart {
    pub major: f64,
    pub minor: f64,
}

impl SurfaceChart for TorusChart {
    fn ambient_dim(&self) -> usize {
        3
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        let (p, s) = (u[0], u[1]);
        let rho = self.major + self.minor * s.cos();
        vec![rho * p.cos(), rho * p.sin(), self.minor * s.sin()]
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        let (p, s) = (u[0], u[1]);
        let rho = self.major + self.minor * s.cos();
        let a = self.minor;
        DMatrix::from_row_slice(
            3,
            2,
            &[
                -rho * p.sin(),
                -a * s.sin() * p.cos(),
                rho * p.cos(),
                -a * s.sin() * p.sin(),
                0.0,
                a * s.cos(),
            ],
        )
    }
}

/// `(φ) ↦ r (cosφ, sinφ)`, the circle as a curve in the plane.
#[derive(Clone, Copy, Debug)]
pub struct CircleChart {
    pub radius: f64,
}

impl SurfaceChart for CircleChart {
    fn ambient_dim(&self) -> usize {
        2
    }

    fn point(&self, u: &[f64]) -> Vec<f64> {
        vec![self.radius * u[0].cos(), self.radius * u[0].sin()]
    }

    fn jacobian(&self, u: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 1, &[-self.radius * u[0].sin(), self.radius * u[0].cos()])
    }
}

/// Numerical rank of a chart Jacobian.
pub(crate) fn chart_rank(j: &DMatrix<f64>) -> usize {
    let sv = j.clone().svd(false, false).singular_values;
    let top = sv.iter().fold(0.0_f64, |m, s| m.max(*s));
    let cutoff = 1e-10 * top.max(1e-300);
    sv.iter().filter(|s| **s > cutoff).count()
}

/// Components of `j*A0` in the chart basis `du_i`: `ω_i = Σ_j a_j ∂x_j/∂u_i`.
pub fn pullback_to_surface(
    a0: &dyn PotentialField,
    chart: &dyn SurfaceChart,
    u: &[f64],
) -> Result<CoVector> {
    if chart.ambient_dim() != a0.dim() {
        return Err(Error::Dimension { expected: a0.dim(), got: chart.ambient_dim() });
    }
    let jac = chart.jacobian(u);
    let rank = chart_rank(&jac);
    if rank < chart.param_dim() {
        return Err(Error::Rank { param: u.to_vec(), rank, expected: chart.param_dim() });
    }
    let a = a0.potential(&chart.point(u))?;
    let omega = (0..chart.param_dim())
        .map(|i| (0..a0.dim()).map(|j| a.0[j] * jac[(j, i)]).sum())
        .collect();
    Ok(CoVector(omega))
}
