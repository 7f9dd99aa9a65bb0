//! Catalog of magnetic potentials and their fields.

use serde::{Deserialize, Serialize};

use crate::domains::{directions, norm, Domain};
use crate::error::{validation, Error, Result};
use crate::exterior::{
    pullback_to_surface, CoVector, HemisphereChart, PotentialField, SurfaceChart, TorusChart,
    TwoForm,
};

/// Smooth background 1-forms `A0` used by the toroidal and non-toroidal fields.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OneForm {
    /// `(-y dx + x dy) / (x² + y²)`; closed away from the axis.
    Azimuthal,
    /// `c (x dy - y dx)`, with `dA0 = 2c dx∧dy`.
    Rotation { scale: f64 },
    /// `a_j = Σ_k M_jk x_k + o_j`.
    Affine { matrix: Vec<Vec<f64>>, offset: Vec<f64> },
}

impl OneForm {
    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            OneForm::Azimuthal => Ok(()),
            OneForm::Rotation { scale } => {
                if scale.is_finite() {
                    Ok(())
                } else {
                    Err(validation("rotation scale must be finite"))
                }
            }
            OneForm::Affine { matrix, offset } => {
                if matrix.len() != dim || offset.len() != dim || matrix.iter().any(|r| r.len() != dim)
                {
                    return Err(validation(format!("affine one-form must be {dim}x{dim}")));
                }
                if matrix.iter().flatten().chain(offset).any(|v| !v.is_finite()) {
                    return Err(validation("affine one-form entries must be finite"));
                }
                Ok(())
            }
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<CoVector> {
        let mut a = vec![0.0; x.len()];
        match self {
            OneForm::Azimuthal => {
                let rho2 = x[0] * x[0] + x[1] * x[1];
                if rho2 == 0.0 {
                    return Err(Error::Singular { point: x.to_vec(), what: "x² + y² = 0".into() });
                }
                a[0] = -x[1] / rho2;
                a[1] = x[0] / rho2;
            }
            OneForm::Rotation { scale } => {
                a[0] = -scale * x[1];
                a[1] = scale * x[0];
            }
            OneForm::Affine { matrix, offset } => {
                for (j, row) in matrix.iter().enumerate() {
                    a[j] = row.iter().zip(x).map(|(m, v)| m * v).sum::<f64>() + offset[j];
                }
            }
        }
        Ok(CoVector(a))
    }

    /// `dA0` in closed form.
    pub fn exterior(&self, x: &[f64]) -> Result<TwoForm> {
        let d = x.len();
        Ok(match self {
            OneForm::Azimuthal => {
                if x[0] == 0.0 && x[1] == 0.0 {
                    return Err(Error::Singular { point: x.to_vec(), what: "x² + y² = 0".into() });
                }
                TwoForm::zeros(d)
            }
            OneForm::Rotation { scale } => {
                TwoForm::from_upper(d, |j, k| if (j, k) == (0, 1) { 2.0 * scale } else { 0.0 })
            }
            OneForm::Affine { matrix, .. } => {
                TwoForm::from_upper(d, |j, k| matrix[k][j] - matrix[j][k])
            }
        })
    }

    /// The form as a potential on `R^dim`.
    pub fn on(&self, dim: usize) -> OneFormField<'_> {
        OneFormField { form: self, dim }
    }
}

pub struct OneFormField<'a> {
    form: &'a OneForm,
    dim: usize,
}

impl PotentialField for OneFormField<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn potential(&self, x: &[f64]) -> Result<CoVector> {
        self.form.evaluate(x)
    }

    fn closed_form_field(&self, x: &[f64]) -> Option<Result<TwoForm>> {
        Some(self.form.exterior(x))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Monomial {
    pub coeff: f64,
    pub powers: Vec<u32>,
}

/// Real polynomial `F(x) = Σ c · x^p`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Polynomial {
    pub terms: Vec<Monomial>,
}

impl Polynomial {
    pub fn new(terms: Vec<(f64, Vec<u32>)>) -> Self {
        Polynomial { terms: terms.into_iter().map(|(coeff, powers)| Monomial { coeff, powers }).collect() }
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|t| t.powers.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|t| t.coeff * t.powers.iter().zip(x).map(|(&p, v)| v.powi(p as i32)).product::<f64>())
            .sum()
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; x.len()];
        for t in &self.terms {
            for (j, gj) in g.iter_mut().enumerate() {
                let pj = t.powers[j];
                if pj == 0 {
                    continue;
                }
                let mut term = t.coeff * pj as f64;
                for (k, (&p, v)) in t.powers.iter().zip(x).enumerate() {
                    let e = if k == j { p - 1 } else { p };
                    term *= v.powi(e as i32);
                }
                *gj += term;
            }
        }
        g
    }
}

/// Every field of the catalog.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum FieldSpec {
    /// Constant field in the symmetric gauge `a_k = ½ Σ_j b_jk x_j`.
    Constant { b0: TwoForm },
    /// `A = Σ_i 1/(n_i1 L_i) dx_2`, using `-1/(n_i2 L_i) dx_1` for facets with `n_i1 = 0`.
    PolytopeField { domain: Domain },
    /// `A = A0 / D^α`.
    Toroidal { a0: OneForm, alpha: f64, domain: Domain },
    /// `A = A0 / D²`.
    Nontoroidal { a0: OneForm, domain: Domain },
    /// `A = α (x dy - y dx) / (r - 1)` on the unit disk.
    DiskCounterexample { alpha: f64 },
    Monopole { m: i64 },
    Dipole { v: [f64; 3] },
    /// Derivatives of the degree-2 monopole in its center along each direction.
    Multipole {
        directions: Vec<[f64; 3]>,
        #[serde(default = "default_multipole_step")]
        step: f64,
    },
    /// `A + dF`; the field is that of `base`.
    GaugeShift { base: Box<FieldSpec>, f: Polynomial },
    /// `c · A`.
    Scaled { factor: f64, base: Box<FieldSpec> },
}

fn default_multipole_step() -> f64 {
    1e-3
}

/// Which Wu–Yang cap a monopole potential is expressed in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MonopolePatch {
    /// `(m/2)(1 - cosθ) dφ`, smooth off the negative z-axis.
    North,
    /// `-(m/2)(1 + cosθ) dφ`, smooth off the positive z-axis.
    South,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PatchPotential {
    pub patch: MonopolePatch,
    pub potential: CoVector,
}

/// Monopole potential in the patch covering `x` (north for `z ≥ 0`).
pub fn monopole_potential(m: i64, x: &[f64]) -> Result<PatchPotential> {
    let patch = if x[2] >= 0.0 { MonopolePatch::North } else { MonopolePatch::South };
    monopole_potential_in(m, x, patch)
}

pub fn monopole_potential_in(m: i64, x: &[f64], patch: MonopolePatch) -> Result<PatchPotential> {
    let r = norm(x);
    // (1 ∓ cosθ)/ρ² = 1/(r(r ± z)), stable up to the axis.
    let denom = match patch {
        MonopolePatch::North => r * (r + x[2]),
        MonopolePatch::South => -r * (r - x[2]),
    };
    if denom == 0.0 {
        return Err(Error::Singular { point: x.to_vec(), what: "monopole patch string".into() });
    }
    let c = 0.5 * m as f64 / denom;
    Ok(PatchPotential { patch, potential: CoVector(vec![-c * x[1], c * x[0], 0.0]) })
}

/// `B_m = (m/2) (x dy∧dz + y dz∧dx + z dx∧dy) / r³`.
pub fn monopole_field(m: i64, x: &[f64]) -> Result<TwoForm> {
    let r = nonzero_radius(x)?;
    let c = 0.5 * m as f64 / (r * r * r);
    Ok(TwoForm::from_axial([c * x[0], c * x[1], c * x[2]]))
}

/// `B_V = (3 (V·x) x - r² V) / r⁵` in axial form.
pub fn dipole_field(v: &[f64; 3], x: &[f64]) -> Result<TwoForm> {
    let r = nonzero_radius(x)?;
    let r2 = r * r;
    let r5 = r2 * r2 * r;
    let vx: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
    Ok(TwoForm::from_axial([
        (3.0 * vx * x[0] - r2 * v[0]) / r5,
        (3.0 * vx * x[1] - r2 * v[1]) / r5,
        (3.0 * vx * x[2] - r2 * v[2]) / r5,
    ]))
}

/// `A_V = (V × x) / r³`, so that `dA_V = B_V`.
pub fn dipole_potential(v: &[f64; 3], x: &[f64]) -> Result<CoVector> {
    let r = nonzero_radius(x)?;
    let r3 = r * r * r;
    Ok(CoVector(vec![
        (v[1] * x[2] - v[2] * x[1]) / r3,
        (v[2] * x[0] - v[0] * x[2]) / r3,
        (v[0] * x[1] - v[1] * x[0]) / r3,
    ]))
}

/// Multipole field by nested central differences in the monopole center,
/// with step `h·|x|` and one Richardson extrapolation.
pub fn multipole_field(directions: &[[f64; 3]], x: &[f64], h: f64) -> Result<TwoForm> {
    nonzero_radius(x)?;
    if directions.is_empty() {
        return monopole_field(2, x);
    }
    let v = center_derivative(directions, x, h, |y| Ok(monopole_field(2, y)?.rows().concat()))?;
    Ok(TwoForm::from_upper(3, |j, k| v[3 * j + k]))
}

/// Potential of [`multipole_field`]: center derivatives of the dipole
/// potential along all directions but the last.
pub fn multipole_potential(directions: &[[f64; 3]], x: &[f64], h: f64) -> Result<CoVector> {
    nonzero_radius(x)?;
    let Some((last, rest)) = directions.split_last() else {
        return Ok(monopole_potential(2, x)?.potential);
    };
    if rest.is_empty() {
        return dipole_potential(last, x);
    }
    Ok(CoVector(center_derivative(rest, x, h, |y| Ok(dipole_potential(last, y)?.0))?))
}

/// `∏_i ∂/∂c along P_i` of `c ↦ g(x - c)` at `c = 0`.
fn center_derivative(
    dirs: &[[f64; 3]],
    x: &[f64],
    h: f64,
    g: impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let s = h * norm(x);
    let coarse = nested_difference(dirs, x, s, &g)?;
    let fine = nested_difference(dirs, x, 0.5 * s, &g)?;
    Ok(fine.iter().zip(&coarse).map(|(f, c)| (4.0 * f - c) / 3.0).collect())
}

fn nested_difference(
    dirs: &[[f64; 3]],
    x: &[f64],
    s: f64,
    g: &impl Fn(&[f64]) -> Result<Vec<f64>>,
) -> Result<Vec<f64>> {
    let n = dirs.len();
    let mut acc: Option<Vec<f64>> = None;
    for pattern in 0..(1u64 << n) {
        let mut y = x.to_vec();
        let mut sign = 1.0;
        for (i, p) in dirs.iter().enumerate() {
            let sigma = if pattern >> i & 1 == 0 { 1.0 } else { -1.0 };
            sign *= sigma;
            for k in 0..3 {
                y[k] -= sigma * s * p[k];
            }
        }
        let val = g(&y)?;
        let acc = acc.get_or_insert_with(|| vec![0.0; val.len()]);
        for (a, v) in acc.iter_mut().zip(&val) {
            *a += sign * v;
        }
    }
    let scale = (2.0 * s).powi(n as i32);
    Ok(acc.unwrap_or_default().into_iter().map(|v| v / scale).collect())
}

fn nonzero_radius(x: &[f64]) -> Result<f64> {
    if x.len() != 3 {
        return Err(Error::Dimension { expected: 3, got: x.len() });
    }
    let r = norm(x);
    if r == 0.0 {
        return Err(Error::Singular { point: x.to_vec(), what: "origin".into() });
    }
    Ok(r)
}

fn is_unit(v: &[f64; 3]) -> bool {
    (norm(v) - 1.0).abs() <= 1e-9
}

/// `(u ∧ v)_jk = u_j v_k - u_k v_j`.
fn wedge(u: &[f64], v: &[f64]) -> TwoForm {
    TwoForm::from_upper(u.len(), |j, k| u[j] * v[k] - u[k] * v[j])
}

impl FieldSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            FieldSpec::Constant { .. } => "constant",
            FieldSpec::PolytopeField { .. } => "polytope_field",
            FieldSpec::Toroidal { .. } => "toroidal",
            FieldSpec::Nontoroidal { .. } => "nontoroidal",
            FieldSpec::DiskCounterexample { .. } => "disk_counterexample",
            FieldSpec::Monopole { .. } => "monopole",
            FieldSpec::Dipole { .. } => "dipole",
            FieldSpec::Multipole { .. } => "multipole",
            FieldSpec::GaugeShift { .. } => "gauge_shift",
            FieldSpec::Scaled { .. } => "scaled",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            FieldSpec::Constant { b0 } => b0.dim(),
            FieldSpec::PolytopeField { domain }
            | FieldSpec::Toroidal { domain, .. }
            | FieldSpec::Nontoroidal { domain, .. } => domain.dim(),
            FieldSpec::DiskCounterexample { .. } => 2,
            FieldSpec::Monopole { .. } | FieldSpec::Dipole { .. } | FieldSpec::Multipole { .. } => 3,
            FieldSpec::GaugeShift { base, .. } | FieldSpec::Scaled { base, .. } => base.dim(),
        }
    }

    /// The domain the field is built on, when it has one.
    pub fn natural_domain(&self) -> Option<Domain> {
        match self {
            FieldSpec::Constant { .. } => None,
            FieldSpec::PolytopeField { domain }
            | FieldSpec::Toroidal { domain, .. }
            | FieldSpec::Nontoroidal { domain, .. } => Some(domain.clone()),
            FieldSpec::DiskCounterexample { .. } => Some(Domain::disk(1.0)),
            FieldSpec::Monopole { .. } | FieldSpec::Dipole { .. } | FieldSpec::Multipole { .. } => {
                Some(Domain::PuncturedSpace { dim: 3 })
            }
            FieldSpec::GaugeShift { base, .. } | FieldSpec::Scaled { base, .. } => {
                base.natural_domain()
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            FieldSpec::Constant { b0 } => {
                if b0.dim() < 2 || b0.rows().iter().flatten().any(|v| !v.is_finite()) {
                    return Err(validation("constant field needs a finite form with d ≥ 2"));
                }
            }
            FieldSpec::PolytopeField { domain } => {
                let Domain::Polytope(p) = domain else {
                    return Err(validation("polytope_field needs a polytope domain"));
                };
                for (i, f) in p.facets().iter().enumerate() {
                    if f.normal[0].abs() < 1e-12 && f.normal[1].abs() < 1e-12 {
                        return Err(validation(format!(
                            "facet {i} has n_i1 = n_i2 = 0; rotate the polytope"
                        )));
                    }
                }
            }
            FieldSpec::Toroidal { a0, alpha, domain } => {
                if !(alpha.is_finite() && *alpha >= 1.0) {
                    return Err(validation("toroidal field needs alpha ≥ 1"));
                }
                if !matches!(
                    domain,
                    Domain::Disk2d { .. } | Domain::Annulus2d { .. } | Domain::SolidTorus3d { .. }
                ) {
                    return Err(validation(
                        "toroidal field needs a domain whose boundary has zero Euler characteristic",
                    ));
                }
                a0.validate(domain.dim())?;
            }
            FieldSpec::Nontoroidal { a0, domain } => {
                if matches!(domain, Domain::Polytope(_) | Domain::PuncturedSpace { .. }) {
                    return Err(validation("nontoroidal field needs a smooth bounded domain"));
                }
                a0.validate(domain.dim())?;
            }
            FieldSpec::DiskCounterexample { alpha } => {
                if !(*alpha > 0.0 && *alpha < 0.75f64.sqrt()) {
                    return Err(validation("disk_counterexample needs 0 < alpha < √3/2"));
                }
            }
            FieldSpec::Monopole { m } => {
                if *m == 0 {
                    return Err(validation("monopole degree must be nonzero"));
                }
            }
            FieldSpec::Dipole { v } => {
                if !is_unit(v) {
                    return Err(validation("dipole direction must be a unit vector"));
                }
            }
            FieldSpec::Multipole { directions, step } => {
                if directions.iter().any(|v| !is_unit(v)) {
                    return Err(validation("multipole directions must be unit vectors"));
                }
                if directions.len() > 16 {
                    return Err(validation("multipole degree above 16 is not supported"));
                }
                if !(*step > 0.0 && *step < 0.1) {
                    return Err(validation("multipole step must lie in (0, 0.1)"));
                }
            }
            FieldSpec::GaugeShift { base, f } => {
                base.validate()?;
                let d = base.dim();
                if f.terms.iter().any(|t| t.powers.len() != d || !t.coeff.is_finite()) {
                    return Err(validation(format!("gauge polynomial must have {d} powers per term")));
                }
            }
            FieldSpec::Scaled { factor, base } => {
                if !(factor.is_finite() && *factor > 0.0) {
                    return Err(validation("scale factor must be positive"));
                }
                base.validate()?;
            }
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() == self.dim() {
            Ok(())
        } else {
            Err(Error::Dimension { expected: self.dim(), got: x.len() })
        }
    }

    /// `D(x)` for domain-based fields, with singular and outside points
    /// reported as errors.
    fn domain_distance(domain: &Domain, x: &[f64]) -> Result<f64> {
        let s = domain.signed_distance(x);
        if s > 0.0 {
            Ok(s)
        } else if s == 0.0 {
            Err(Error::Singular { point: x.to_vec(), what: "boundary".into() })
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }

    fn disk_radius(x: &[f64]) -> Result<f64> {
        let r = norm(x);
        if r < 1.0 {
            Ok(r)
        } else if r == 1.0 {
            Err(Error::Singular { point: x.to_vec(), what: "r = 1".into() })
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }

    pub fn evaluate_potential(&self, x: &[f64]) -> Result<CoVector> {
        self.check_dim(x)?;
        match self {
            FieldSpec::Constant { b0 } => {
                let d = b0.dim();
                Ok(CoVector(
                    (0..d).map(|k| 0.5 * (0..d).map(|j| b0.get(j, k) * x[j]).sum::<f64>()).collect(),
                ))
            }
            FieldSpec::PolytopeField { domain } => {
                Self::domain_distance(domain, x)?;
                let Domain::Polytope(p) = domain else { unreachable!("validated") };
                let mut a = vec![0.0; x.len()];
                for f in p.facets() {
                    let l = f.value(x);
                    if f.normal[0].abs() >= f.normal[1].abs() {
                        a[1] += 1.0 / (f.normal[0] * l);
                    } else {
                        a[0] -= 1.0 / (f.normal[1] * l);
                    }
                }
                Ok(CoVector(a))
            }
            FieldSpec::Toroidal { a0, alpha, domain } => {
                let dist = Self::domain_distance(domain, x)?;
                Ok(a0.evaluate(x)?.scale(dist.powf(-alpha)))
            }
            FieldSpec::Nontoroidal { a0, domain } => {
                let dist = Self::domain_distance(domain, x)?;
                Ok(a0.evaluate(x)?.scale(1.0 / (dist * dist)))
            }
            FieldSpec::DiskCounterexample { alpha } => {
                let r = Self::disk_radius(x)?;
                let c = alpha / (r - 1.0);
                Ok(CoVector(vec![-c * x[1], c * x[0]]))
            }
            FieldSpec::Monopole { m } => {
                nonzero_radius(x)?;
                Ok(monopole_potential(*m, x)?.potential)
            }
            FieldSpec::Dipole { v } => dipole_potential(v, x),
            FieldSpec::Multipole { directions, step } => multipole_potential(directions, x, *step),
            FieldSpec::GaugeShift { base, f } => {
                let a = base.evaluate_potential(x)?;
                Ok(a.add(&CoVector(f.gradient(x))))
            }
            FieldSpec::Scaled { factor, base } => Ok(base.evaluate_potential(x)?.scale(*factor)),
        }
    }

    pub fn evaluate_field(&self, x: &[f64]) -> Result<TwoForm> {
        self.check_dim(x)?;
        match self {
            FieldSpec::Constant { b0 } => Ok(b0.clone()),
            FieldSpec::PolytopeField { domain } => {
                Self::domain_distance(domain, x)?;
                let Domain::Polytope(p) = domain else { unreachable!("validated") };
                let d = x.len();
                let mut b = TwoForm::zeros(d);
                for f in p.facets() {
                    let l2 = f.value(x).powi(2);
                    // dx_2 term: b_k2 = -n_ik / (n_i1 L²); dx_1 term: b_k1 = n_ik / (n_i2 L²).
                    let (col, coef) = if f.normal[0].abs() >= f.normal[1].abs() {
                        (1, -1.0 / (f.normal[0] * l2))
                    } else {
                        (0, 1.0 / (f.normal[1] * l2))
                    };
                    for k in (0..d).filter(|&k| k != col) {
                        b.set(k, col, b.get(k, col) + coef * f.normal[k]);
                    }
                }
                Ok(b)
            }
            FieldSpec::Toroidal { a0, alpha, domain } => Self::power_field(a0, *alpha, domain, x),
            FieldSpec::Nontoroidal { a0, domain } => Self::power_field(a0, 2.0, domain, x),
            FieldSpec::DiskCounterexample { alpha } => {
                let r = Self::disk_radius(x)?;
                let b = alpha * (r - 2.0) / ((r - 1.0) * (r - 1.0));
                Ok(TwoForm::from_upper(2, |_, _| b))
            }
            FieldSpec::Monopole { m } => monopole_field(*m, x),
            FieldSpec::Dipole { v } => dipole_field(v, x),
            FieldSpec::Multipole { directions, step } => multipole_field(directions, x, *step),
            FieldSpec::GaugeShift { base, .. } => base.evaluate_field(x),
            FieldSpec::Scaled { factor, base } => Ok(base.evaluate_field(x)?.scale(*factor)),
        }
    }

    /// `d(A0 / D^α) = D^{-α} dA0 - α D^{-α-1} ∇D ∧ A0`.
    fn power_field(a0: &OneForm, alpha: f64, domain: &Domain, x: &[f64]) -> Result<TwoForm> {
        let dist = Self::domain_distance(domain, x)?;
        let grad = domain.distance_gradient(x).ok_or_else(|| Error::Singular {
            point: x.to_vec(),
            what: "distance is not differentiable".into(),
        })?;
        let a = a0.evaluate(x)?;
        let da = a0.exterior(x)?;
        Ok(da.scale(dist.powf(-alpha)).sub(&wedge(&grad, &a.0).scale(alpha * dist.powf(-alpha - 1.0))))
    }

    /// Distance from `x` to the singular locus of the potential.
    pub fn singular_clearance(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        match self {
            FieldSpec::Constant { .. } => Ok(f64::INFINITY),
            FieldSpec::PolytopeField { domain }
            | FieldSpec::Toroidal { domain, .. }
            | FieldSpec::Nontoroidal { domain, .. } => Self::domain_distance(domain, x),
            FieldSpec::DiskCounterexample { .. } => Ok(1.0 - Self::disk_radius(x)?),
            FieldSpec::Monopole { .. } | FieldSpec::Dipole { .. } | FieldSpec::Multipole { .. } => {
                nonzero_radius(x)
            }
            FieldSpec::GaugeShift { base, .. } | FieldSpec::Scaled { base, .. } => {
                base.singular_clearance(x)
            }
        }
    }
}

impl PotentialField for FieldSpec {
    fn dim(&self) -> usize {
        FieldSpec::dim(self)
    }

    fn potential(&self, x: &[f64]) -> Result<CoVector> {
        self.evaluate_potential(x)
    }

    fn closed_form_field(&self, x: &[f64]) -> Option<Result<TwoForm>> {
        Some(self.evaluate_field(x))
    }

    fn clearance(&self, x: &[f64]) -> Result<f64> {
        self.singular_clearance(x)
    }
}

/// A zero of the boundary 1-form `ω = j*A0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OneFormZero {
    pub location: Vec<f64>,
    pub norm_domega: f64,
    pub satisfies_assumption: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryOneFormReport {
    pub surface: String,
    pub zeros: Vec<OneFormZero>,
    /// Smallest tangential `|ω|` seen on the sampling grid.
    pub grid_min_norm: f64,
    /// `|dω|_sp > 1` at every zero.
    pub flag: bool,
}

/// Locates the zeros of `ω = j*A0` on the boundary surface (sphere or torus)
/// and evaluates `|dω|_sp` there.
pub fn boundary_one_form_analysis(f: &FieldSpec, resolution: usize) -> Result<BoundaryOneFormReport> {
    let (a0, domain) = match f {
        FieldSpec::Toroidal { a0, domain, .. } | FieldSpec::Nontoroidal { a0, domain } => (a0, domain),
        _ => return Err(validation("boundary analysis needs a toroidal or nontoroidal field")),
    };
    f.validate()?;
    let resolution = resolution.max(64);
    let pot = a0.on(3);
    match *domain {
        Domain::Ball3d { radius } => sphere_zeros(a0, &pot, radius, resolution),
        Domain::SolidTorus3d { r0, a } => torus_zeros(a0, &pot, r0, a, resolution),
        _ => Err(validation("boundary analysis supports ball3d and solid_torus3d")),
    }
}

/// Tangential part of `A0` at `p` for the unit normal `nu`.
fn tangential_norm(pot: &dyn PotentialField, p: &[f64], nu: &[f64]) -> f64 {
    match pot.potential(p) {
        Ok(a) => {
            let an: f64 = a.0.iter().zip(nu).map(|(x, y)| x * y).sum();
            norm(&a.0.iter().zip(nu).map(|(x, y)| x - an * y).collect::<Vec<_>>())
        }
        Err(_) => f64::NAN,
    }
}

/// Newton iteration on `ω(u) = 0` in a 2-parameter chart.
fn newton_zero(pot: &dyn PotentialField, chart: &dyn SurfaceChart, u0: [f64; 2], h: f64, tol: f64) -> Option<[f64; 2]> {
    let omega = |u: &[f64; 2]| pullback_to_surface(pot, chart, u).ok().map(|w| [w.0[0], w.0[1]]);
    let mut u = u0;
    let mut w = omega(&u)?;
    for _ in 0..80 {
        let res = w[0].hypot(w[1]);
        if res <= tol {
            return Some(u);
        }
        let mut jac = [[0.0; 2]; 2];
        for k in 0..2 {
            let mut up = u;
            let mut um = u;
            up[k] += h;
            um[k] -= h;
            let (wp, wm) = (omega(&up)?, omega(&um)?);
            for i in 0..2 {
                jac[i][k] = (wp[i] - wm[i]) / (2.0 * h);
            }
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            return None;
        }
        let step = [
            (jac[1][1] * w[0] - jac[0][1] * w[1]) / det,
            (-jac[1][0] * w[0] + jac[0][0] * w[1]) / det,
        ];
        let mut t = 1.0;
        loop {
            let cand = [u[0] - t * step[0], u[1] - t * step[1]];
            if let Some(wc) = omega(&cand) {
                if wc[0].hypot(wc[1]) < res {
                    u = cand;
                    w = wc;
                    break;
                }
            }
            t *= 0.5;
            if t < 1e-6 {
                return (res <= 1e3 * tol).then_some(u);
            }
        }
    }
    (w[0].hypot(w[1]) <= tol).then_some(u)
}

/// `|dA0(e1, e2)|` on an orthonormal basis of the tangent plane spanned by
/// the chart Jacobian columns.
fn restricted_norm(a0: &OneForm, p: &[f64], jac: &nalgebra::DMatrix<f64>) -> Result<f64> {
    let c1 = jac.column(0).into_owned();
    let e1 = c1.normalize();
    let c2 = jac.column(1).into_owned();
    let e2 = (&c2 - &e1 * e1.dot(&c2)).normalize();
    let b = a0.exterior(p)?;
    Ok(b.evaluate(e1.as_slice(), e2.as_slice()).abs())
}

fn push_zero(zeros: &mut Vec<OneFormZero>, location: Vec<f64>, norm_domega: f64, scale: f64) {
    let dup = zeros.iter().any(|z| {
        norm(&z.location.iter().zip(&location).map(|(a, b)| a - b).collect::<Vec<_>>()) < 1e-6 * scale
    });
    if !dup {
        zeros.push(OneFormZero { location, norm_domega, satisfies_assumption: norm_domega > 1.0 });
    }
}

fn finish(surface: &str, mut zeros: Vec<OneFormZero>, grid_min: f64) -> BoundaryOneFormReport {
    // highest point first
    zeros.sort_by(|a, b| {
        let key = |z: &OneFormZero| z.location.iter().rev().copied().collect::<Vec<f64>>();
        key(b).partial_cmp(&key(a)).unwrap_or(std::cmp::Ordering::Equal)
    });
    let flag = zeros.iter().all(|z| z.satisfies_assumption);
    BoundaryOneFormReport { surface: surface.into(), zeros, grid_min_norm: grid_min, flag }
}

fn sphere_zeros(a0: &OneForm, pot: &dyn PotentialField, radius: f64, n: usize) -> Result<BoundaryOneFormReport> {
    let dirs = directions(3, n);
    let g: Vec<f64> = dirs
        .iter()
        .map(|u| tangential_norm(pot, &u.iter().map(|c| radius * c).collect::<Vec<_>>(), u))
        .collect();
    let gmax = g.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let gmin = g.iter().copied().filter(|v| v.is_finite()).fold(f64::INFINITY, f64::min);
    let spacing = (4.0 * std::f64::consts::PI / n as f64).sqrt();
    let reach = (2.5 * spacing).cos();
    let tol = 1e-11 * (1.0 + gmax);
    let mut zeros = Vec::new();
    for i in 0..n {
        if !g[i].is_finite() {
            continue;
        }
        let is_min = (0..n).all(|j| {
            j == i
                || dirs[i].iter().zip(&dirs[j]).map(|(a, b)| a * b).sum::<f64>() < reach
                || !g[j].is_finite()
                || g[i] < g[j]
                || (g[i] == g[j] && i < j)
        });
        if !is_min {
            continue;
        }
        let mut found = None;
        for attempt in 0..4 {
            let tilt = 0.3 * spacing * attempt as f64;
            let pole = [dirs[i][0] + tilt, dirs[i][1] - 0.5 * tilt, dirs[i][2] + 0.25 * tilt];
            let chart = HemisphereChart::centered_at(radius, pole);
            if let Some(u) = newton_zero(pot, &chart, [0.0, 0.0], 1e-6 * radius, tol) {
                if u[0].hypot(u[1]) < 0.7 * radius {
                    found = Some((chart.point(&u), chart.jacobian(&u)));
                    break;
                }
            }
        }
        match found {
            Some((p, jac)) => {
                let nd = restricted_norm(a0, &p, &jac)?;
                push_zero(&mut zeros, p, nd, radius);
            }
            None if g[i] <= 1e-3 * gmax => {
                return Err(Error::Chart(format!(
                    "zero candidate near {:?} did not converge in any chart",
                    dirs[i]
                )));
            }
            None => {}
        }
    }
    Ok(finish("sphere", zeros, gmin))
}

fn torus_zeros(a0: &OneForm, pot: &dyn PotentialField, r0: f64, a: f64, resolution: usize) -> Result<BoundaryOneFormReport> {
    let n = ((resolution as f64).sqrt().ceil() as usize).max(8);
    let chart = TorusChart { major: r0, minor: a };
    let tau = std::f64::consts::TAU;
    let param = |i: usize, j: usize| [tau * i as f64 / n as f64, tau * (j as f64 + 0.5) / n as f64];
    let mut g = vec![vec![0.0; n]; n];
    for (i, row) in g.iter_mut().enumerate() {
        for (j, gij) in row.iter_mut().enumerate() {
            let u = param(i, j);
            let p = chart.point(&u);
            let nu = [u[1].cos() * u[0].cos(), u[1].cos() * u[0].sin(), u[1].sin()];
            *gij = tangential_norm(pot, &p, &nu);
        }
    }
    let flat = g.iter().flatten().copied().filter(|v| v.is_finite());
    let gmax = flat.clone().fold(0.0, f64::max);
    let gmin = flat.fold(f64::INFINITY, f64::min);
    let tol = 1e-11 * (1.0 + gmax);
    let mut zeros = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let v = g[i][j];
            if !v.is_finite() {
                continue;
            }
            let mut is_min = true;
            for di in [n - 1, 0, 1] {
                for dj in [n - 1, 0, 1] {
                    let (ii, jj) = ((i + di) % n, (j + dj) % n);
                    if (ii, jj) != (i, j) && g[ii][jj].is_finite() && g[ii][jj] < v {
                        is_min = false;
                    }
                }
            }
            if !is_min || v > 0.5 * gmax {
                continue;
            }
            match newton_zero(pot, &chart, param(i, j), 1e-7, tol) {
                Some(u) => {
                    let nd = restricted_norm(a0, &chart.point(&u), &chart.jacobian(&u))?;
                    push_zero(&mut zeros, chart.point(&u), nd, r0);
                }
                None if v <= 1e-3 * gmax => {
                    return Err(Error::Chart(format!("zero candidate near {:?} did not converge", param(i, j))));
                }
                None => {}
            }
        }
    }
    Ok(finish("torus", zeros, gmin))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domains::Polytope;
    use crate::exterior::{central_difference_field, spectral_norm};
    use approx::assert_abs_diff_eq;
    use rand::{RngExt, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Vec<f64> {
        loop {
            let x: Vec<f64> = (0..3).map(|_| rng.random_range(-hi..hi)).collect();
            let r = norm(&x);
            if r > lo && r < hi {
                return x;
            }
        }
    }

    /// `(dB)_ijk = ∂_i b_jk + ∂_j b_ki + ∂_k b_ij` by Richardson-extrapolated
    /// central differences.
    fn max_db(f: &FieldSpec, x: &[f64], h: f64) -> f64 {
        let d = x.len();
        let central = |i: usize, h: f64| {
            let mut p = x.to_vec();
            p[i] += h;
            let bp = f.evaluate_field(&p).unwrap();
            p[i] -= 2.0 * h;
            let bm = f.evaluate_field(&p).unwrap();
            bp.sub(&bm).scale(0.5 / h)
        };
        let partial = |i: usize| central(i, 0.5 * h).scale(4.0 / 3.0).sub(&central(i, h).scale(1.0 / 3.0));
        let grads: Vec<TwoForm> = (0..d).map(partial).collect();
        let mut worst: f64 = 0.0;
        for i in 0..d {
            for j in i + 1..d {
                for k in j + 1..d {
                    let v = grads[i].get(j, k) + grads[j].get(k, i) + grads[k].get(i, j);
                    worst = worst.max(v.abs());
                }
            }
        }
        worst
    }

    #[test]
    fn disk_counterexample_potential_at_half_radius() {
        let f = FieldSpec::DiskCounterexample { alpha: 0.5 };
        let a = f.evaluate_potential(&[0.5, 0.0]).unwrap();
        assert_abs_diff_eq!(a.0[0], 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a.0[1], -0.5, epsilon = 1e-15);
    }

    #[test]
    fn disk_counterexample_field_matches_differences() {
        let alpha = 0.7;
        let f = FieldSpec::DiskCounterexample { alpha };
        for x in [[0.5, 0.0], [0.1, -0.3], [0.6, 0.6]] {
            let r = norm(&x);
            let exact = alpha * (r - 2.0) / (r - 1.0).powi(2);
            assert_abs_diff_eq!(f.evaluate_field(&x).unwrap().get(0, 1), exact, epsilon = 1e-14);
            let fd = central_difference_field(&f, &x, 1e-5).unwrap();
            assert_abs_diff_eq!(fd.get(0, 1), exact, epsilon = 1e-7);
        }
        assert_abs_diff_eq!(f.evaluate_field(&[0.5, 0.0]).unwrap().get(0, 1), -6.0 * alpha, epsilon = 1e-14);
        assert!(matches!(f.evaluate_field(&[1.0, 0.0]), Err(Error::Singular { .. })));
    }

    #[test]
    fn polytope_potential_has_the_facet_terms() {
        let dom = Domain::square(1.0).unwrap();
        let f = FieldSpec::PolytopeField { domain: dom.clone() };
        f.validate().unwrap();
        let x = [0.3, -0.2];
        let a = f.evaluate_potential(&x).unwrap();
        // facets: x - 1, -x - 1 (dx_2 terms), y - 1, -y - 1 (dx_1 terms)
        let a2 = 1.0 / (x[0] - 1.0) + 1.0 / (-1.0 * (-x[0] - 1.0));
        let a1 = -(1.0 / (x[1] - 1.0)) - 1.0 / (-1.0 * (-x[1] - 1.0));
        assert_abs_diff_eq!(a.0[1], a2, epsilon = 1e-14);
        assert_abs_diff_eq!(a.0[0], a1, epsilon = 1e-14);
    }

    #[test]
    fn polytope_field_matches_differences_in_three_dimensions() {
        let p = Polytope::new(vec![
            crate::AffineFunctional { normal: vec![1.0, 0.2, 0.1], offset: -1.0 },
            crate::AffineFunctional { normal: vec![-1.0, 0.1, 0.0], offset: -1.0 },
            crate::AffineFunctional { normal: vec![0.0, 1.0, 0.3], offset: -1.0 },
            crate::AffineFunctional { normal: vec![0.1, -1.0, 0.0], offset: -1.0 },
            crate::AffineFunctional { normal: vec![0.2, 0.0, 1.0], offset: -1.0 },
            crate::AffineFunctional { normal: vec![0.3, 0.1, -1.0], offset: -1.0 },
        ])
        .unwrap();
        let f = FieldSpec::PolytopeField { domain: Domain::Polytope(p) };
        f.validate().unwrap();
        for x in [[0.1, 0.2, -0.1], [0.4, -0.3, 0.2]] {
            let exact = f.evaluate_field(&x).unwrap();
            let fd = central_difference_field(&f, &x, 1e-5).unwrap();
            assert!(exact.euclidean_distance(&fd) < 1e-6, "{exact:?} vs {fd:?}");
            assert!(max_db(&f, &x, 2e-3) < 1e-6);
        }
    }

    #[test]
    fn polytope_field_dominates_inverse_square_distance() {
        let dom = Domain::Polytope(Polytope::polygon(&[[0.0, 0.0], [2.0, 0.3], [0.4, 1.7]]).unwrap());
        let f = FieldSpec::PolytopeField { domain: dom.clone() };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for x in dom.sample_interior(&mut rng, 2000) {
            let d = dom.distance(&x).unwrap();
            let b = f.evaluate_field(&x).unwrap().get(0, 1).abs();
            assert!(b * d * d >= 1.0 - 1e-12);
        }
    }

    #[test]
    fn constant_field_in_symmetric_gauge() {
        let b0 = TwoForm::from_upper(4, |j, k| match (j, k) {
            (0, 1) => 3.0,
            (2, 3) => 1.0,
            (0, 2) => 0.5,
            _ => 0.0,
        });
        let f = FieldSpec::Constant { b0: b0.clone() };
        let fd = central_difference_field(&f, &[0.3, -1.0, 2.0, 0.5], 1e-3).unwrap();
        assert!(fd.euclidean_distance(&b0) < 1e-12);
    }

    #[test]
    fn monopole_field_on_the_axis() {
        let b = monopole_field(2, &[0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(b.get(0, 1), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(b.get(1, 2), 0.0, epsilon = 1e-15);
        assert!(matches!(monopole_field(2, &[0.0; 3]), Err(Error::Singular { .. })));
    }

    #[test]
    fn monopole_patches_differentiate_to_the_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for m in [1, -2, 3] {
            for _ in 0..50 {
                let x = random_point(&mut rng, 0.3, 2.0);
                for patch in [MonopolePatch::North, MonopolePatch::South] {
                    let pot = crate::exterior::FnPotential::new(3, |y: &[f64]| {
                        monopole_potential_in(m, y, patch).unwrap().potential.0
                    });
                    let axis = x[0].hypot(x[1]);
                    let near_string = match patch {
                        MonopolePatch::North => x[2] < 0.0 && axis < 0.3,
                        MonopolePatch::South => x[2] > 0.0 && axis < 0.3,
                    };
                    if near_string {
                        continue;
                    }
                    let fd = central_difference_field(&pot, &x, 1e-5).unwrap();
                    let exact = monopole_field(m, &x).unwrap();
                    assert!(fd.euclidean_distance(&exact) < 1e-6 * (1.0 + exact.max_abs()));
                }
            }
        }
        assert_eq!(monopole_potential(1, &[0.0, 0.0, -1.0]).unwrap().patch, MonopolePatch::South);
    }

    #[test]
    fn monopole_norm_is_half_degree_over_r_squared() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for m in [1, 2, 4, -3] {
            for _ in 0..1000 {
                let x = random_point(&mut rng, 1e-2, 10.0);
                let r2: f64 = x.iter().map(|v| v * v).sum();
                let n = spectral_norm(&monopole_field(m, &x).unwrap()).unwrap().norm_sp;
                assert!((n * r2 - m.abs() as f64 / 2.0).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn dipole_printed_form_at_the_pole() {
        let b = dipole_field(&[0.0, 0.0, 1.0], &[0.0, 0.0, 1.0]).unwrap();
        assert_abs_diff_eq!(b.get(0, 1), 2.0, epsilon = 1e-15);
        let x = [0.3, -0.4, 0.7];
        let (r2, r5) = (0.74f64, 0.74f64.powf(2.5));
        let axial = dipole_field(&[0.0, 0.0, 1.0], &x).unwrap().axial().unwrap();
        assert_abs_diff_eq!(axial[0], 3.0 * x[0] * x[2] / r5, epsilon = 1e-14);
        assert_abs_diff_eq!(axial[1], 3.0 * x[1] * x[2] / r5, epsilon = 1e-14);
        assert_abs_diff_eq!(axial[2], (2.0 * x[2] * x[2] - x[0] * x[0] - x[1] * x[1]) / r5, epsilon = 1e-14);
        assert!((r2 - norm(&x).powi(2)).abs() < 1e-15);
    }

    #[test]
    fn dipole_potential_differentiates_to_the_field() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let v = [0.48, 0.6, 0.64];
        let f = FieldSpec::Dipole { v };
        f.validate().unwrap();
        for _ in 0..100 {
            let x = random_point(&mut rng, 0.5, 3.0);
            let fd = central_difference_field(&f, &x, 1e-5).unwrap();
            let exact = f.evaluate_field(&x).unwrap();
            assert!(fd.euclidean_distance(&exact) < 1e-6 * (1.0 + exact.max_abs()));
        }
    }

    #[test]
    fn dipole_never_vanishes_and_is_homogeneous() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let v = [0.0, 0.6, 0.8];
        for _ in 0..10_000 {
            let x = random_point(&mut rng, 1e-3, 10.0);
            let b = dipole_field(&v, &x).unwrap();
            assert!(spectral_norm(&b).unwrap().norm_sp > 0.0);
            let t = rng.random_range(0.1..10.0);
            let bt = dipole_field(&v, &x.iter().map(|c| t * c).collect::<Vec<_>>()).unwrap();
            assert!(bt.sub(&b.scale(t.powi(-3))).max_abs() <= 1e-10 * b.max_abs());
        }
    }

    #[test]
    fn multipole_reduces_to_monopole_and_dipole() {
        let x = [0.0, 0.0, 1.0];
        assert_eq!(multipole_field(&[], &x, 1e-3).unwrap(), monopole_field(2, &x).unwrap());
        let b = multipole_field(&[[0.0, 0.0, 1.0]], &x, 1e-3).unwrap();
        assert!((b.get(0, 1) - 2.0).abs() < 1e-5);
        let y = [0.3, -0.7, 0.4];
        let v = [0.6, 0.0, 0.8];
        let num = multipole_field(&[v], &y, 1e-3).unwrap();
        assert!(num.euclidean_distance(&dipole_field(&v, &y).unwrap()) < 1e-8);
    }

    #[test]
    fn quadrupole_is_homogeneous_of_degree_minus_four() {
        let dirs = [[0.0, 0.0, 1.0], [0.0, 0.0, 1.0]];
        for x in [[0.0, 0.0, 1.0], [0.3, -0.5, 0.2]] {
            let b1 = multipole_field(&dirs, &x, 1e-3).unwrap();
            let b2 = multipole_field(&dirs, &[2.0 * x[0], 2.0 * x[1], 2.0 * x[2]], 1e-3).unwrap();
            let (n1, n2) = (spectral_norm(&b1).unwrap().norm_sp, spectral_norm(&b2).unwrap().norm_sp);
            assert!((n2 - n1 / 16.0).abs() <= 1e-10 * n1);
        }
    }

    #[test]
    fn quadrupole_potential_differentiates_to_the_field() {
        let f = FieldSpec::Multipole { directions: vec![[1.0, 0.0, 0.0], [0.0, 0.6, 0.8]], step: 1e-3 };
        f.validate().unwrap();
        for x in [[0.4, 0.9, -0.3], [-1.0, 0.2, 0.5]] {
            let fd = central_difference_field(&f, &x, 1e-4).unwrap();
            let b = f.evaluate_field(&x).unwrap();
            assert!(fd.euclidean_distance(&b) < 1e-5 * (1.0 + b.max_abs()));
        }
    }

    #[test]
    fn catalog_fields_are_closed() {
        let torus = Domain::SolidTorus3d { r0: 3.0, a: 1.0 };
        let fields = vec![
            (FieldSpec::Monopole { m: 3 }, vec![0.4, -0.3, 0.8]),
            (FieldSpec::Dipole { v: [0.0, 0.0, 1.0] }, vec![0.4, -0.3, 0.8]),
            (FieldSpec::Multipole { directions: vec![[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]], step: 1e-3 }, vec![0.4, -0.3, 0.8]),
            (
                FieldSpec::Toroidal { a0: OneForm::Azimuthal, alpha: 2.0, domain: torus.clone() },
                vec![3.5, 0.2, 0.1],
            ),
            (
                FieldSpec::Nontoroidal {
                    a0: OneForm::Rotation { scale: 1.0 },
                    domain: Domain::Ball3d { radius: 1.0 },
                },
                vec![0.2, 0.3, -0.4],
            ),
            (
                FieldSpec::Constant { b0: TwoForm::from_axial([1.0, -2.0, 0.5]) },
                vec![1.0, 2.0, 3.0],
            ),
        ];
        for (f, x) in fields {
            f.validate().unwrap();
            let db = max_db(&f, &x, 2e-3);
            assert!(db < 1e-6, "{}: {db:e}", f.kind());
        }
    }

    #[test]
    fn power_fields_match_differences() {
        let cases = vec![
            (
                FieldSpec::Toroidal {
                    a0: OneForm::Azimuthal,
                    alpha: 2.0,
                    domain: Domain::SolidTorus3d { r0: 3.0, a: 1.0 },
                },
                vec![3.5, 0.2, 0.1],
            ),
            (
                FieldSpec::Toroidal {
                    a0: OneForm::Rotation { scale: 0.7 },
                    alpha: 1.5,
                    domain: Domain::Annulus2d { r_in: 0.5, r_out: 1.5 },
                },
                vec![1.2, 0.1],
            ),
            (
                FieldSpec::Nontoroidal {
                    a0: OneForm::Affine {
                        matrix: vec![vec![0.0, 1.0, 0.2], vec![-0.3, 0.0, 0.0], vec![0.5, 0.1, 0.0]],
                        offset: vec![0.1, 0.0, -0.2],
                    },
                    domain: Domain::Ball3d { radius: 1.0 },
                },
                vec![0.2, 0.3, -0.4],
            ),
        ];
        for (f, x) in cases {
            let fd = central_difference_field(&f, &x, 1e-6).unwrap();
            let b = f.evaluate_field(&x).unwrap();
            assert!(fd.euclidean_distance(&b) < 1e-6 * (1.0 + b.max_abs()), "{}", f.kind());
        }
    }

    #[test]
    fn gauge_shift_adds_gradient_and_keeps_the_field() {
        let base = FieldSpec::Constant { b0: TwoForm::from_upper(2, |_, _| 1.0) };
        let f = Polynomial::new(vec![(1.0, vec![2, 0]), (-3.0, vec![1, 1])]);
        let g = FieldSpec::GaugeShift { base: Box::new(base.clone()), f: f.clone() };
        g.validate().unwrap();
        let x = [0.4, -1.1];
        let a = g.evaluate_potential(&x).unwrap();
        let a0 = base.evaluate_potential(&x).unwrap();
        assert_abs_diff_eq!(a.0[0], a0.0[0] + 2.0 * x[0] - 3.0 * x[1], epsilon = 1e-15);
        assert_abs_diff_eq!(a.0[1], a0.0[1] - 3.0 * x[0], epsilon = 1e-15);
        assert_eq!(g.evaluate_field(&x).unwrap(), base.evaluate_field(&x).unwrap());
    }

    #[test]
    fn invalid_specs_are_rejected() {
        let bad = [
            FieldSpec::DiskCounterexample { alpha: 0.9 },
            FieldSpec::DiskCounterexample { alpha: -1.0 },
            FieldSpec::Monopole { m: 0 },
            FieldSpec::Dipole { v: [0.0, 0.0, 2.0] },
            FieldSpec::Toroidal { a0: OneForm::Azimuthal, alpha: 0.5, domain: Domain::disk(1.0) },
            FieldSpec::Toroidal { a0: OneForm::Azimuthal, alpha: 2.0, domain: Domain::Ball3d { radius: 1.0 } },
            FieldSpec::PolytopeField { domain: Domain::disk(1.0) },
        ];
        for f in bad {
            assert!(f.validate().is_err(), "{f:?}");
        }
    }

    #[test]
    fn spec_round_trips_through_json() {
        let f = FieldSpec::GaugeShift {
            base: Box::new(FieldSpec::Toroidal {
                a0: OneForm::Azimuthal,
                alpha: 2.0,
                domain: Domain::SolidTorus3d { r0: 3.0, a: 1.0 },
            }),
            f: Polynomial::new(vec![(1.0, vec![1, 0, 0])]),
        };
        let s = serde_json::to_string(&f).unwrap();
        assert_eq!(serde_json::from_str::<FieldSpec>(&s).unwrap(), f);
        let m: FieldSpec = serde_json::from_str(r#"{"kind":"monopole","m":-2}"#).unwrap();
        assert_eq!(m, FieldSpec::Monopole { m: -2 });
        assert!(serde_json::from_str::<FieldSpec>(r#"{"kind":"monopole","m":2,"x":1}"#).is_err());
    }

    fn ball_field(scale: f64) -> FieldSpec {
        FieldSpec::Nontoroidal {
            a0: OneForm::Rotation { scale },
            domain: Domain::Ball3d { radius: 1.0 },
        }
    }

    #[test]
    fn rotation_form_has_zeros_at_the_poles() {
        let rep = boundary_one_form_analysis(&ball_field(1.0), 2000).unwrap();
        assert_eq!(rep.zeros.len(), 2);
        for (z, pole) in rep.zeros.iter().zip([1.0, -1.0]) {
            assert!(z.location[0].abs() < 1e-8 && z.location[1].abs() < 1e-8);
            assert_abs_diff_eq!(z.location[2], pole, epsilon = 1e-8);
            assert_abs_diff_eq!(z.norm_domega, 2.0, epsilon = 1e-9);
        }
        assert!(rep.flag);
    }

    #[test]
    fn scaled_rotation_form_fails_the_assumption() {
        let rep = boundary_one_form_analysis(&ball_field(0.4), 2000).unwrap();
        assert_eq!(rep.zeros.len(), 2);
        assert!(rep.zeros.iter().all(|z| (z.norm_domega - 0.8).abs() < 1e-9));
        assert!(!rep.flag);
    }

    #[test]
    fn azimuthal_form_on_the_torus_has_no_zeros() {
        let f = FieldSpec::Toroidal {
            a0: OneForm::Azimuthal,
            alpha: 2.0,
            domain: Domain::SolidTorus3d { r0: 3.0, a: 1.0 },
        };
        let rep = boundary_one_form_analysis(&f, 1024).unwrap();
        assert!(rep.zeros.is_empty());
        assert!(rep.grid_min_norm > 0.2);
    }

    #[test]
    fn affine_form_zero_off_the_poles() {
        // A0 = (y - 0.6) dx ... tangential zeros of a generic affine form
        let f = FieldSpec::Nontoroidal {
            a0: OneForm::Affine {
                matrix: vec![vec![0.0, 1.5, 0.0], vec![-1.5, 0.0, 0.0], vec![0.0, 0.0, 0.0]],
                offset: vec![0.3, 0.0, 0.0],
            },
            domain: Domain::Ball3d { radius: 1.0 },
        };
        let rep = boundary_one_form_analysis(&f, 3000).unwrap();
        assert!(!rep.zeros.is_empty());
        let pot = crate::fields::OneForm::Affine {
            matrix: vec![vec![0.0, 1.5, 0.0], vec![-1.5, 0.0, 0.0], vec![0.0, 0.0, 0.0]],
            offset: vec![0.3, 0.0, 0.0],
        };
        for z in &rep.zeros {
            let nu: Vec<f64> = z.location.clone();
            assert!(tangential_norm(&pot.on(3), &z.location, &nu) < 1e-9);
        }
    }
}
