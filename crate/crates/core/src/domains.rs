//! Domains with a closed-form distance to the boundary.

use nalgebra::{DMatrix, DVector};
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};

/// `L(x) = n·x + offset`; the domain side is `L < 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineFunctional {
    pub normal: Vec<f64>,
    pub offset: f64,
}

impl AffineFunctional {
    pub fn value(&self, x: &[f64]) -> f64 {
        self.normal.iter().zip(x).map(|(n, v)| n * v).sum::<f64>() + self.offset
    }

    /// Rescales so that `|normal| = 1`.
    pub fn normalized(&self) -> Result<Self> {
        let len = self.normal.iter().map(|n| n * n).sum::<f64>().sqrt();
        if !(len > 0.0) || !len.is_finite() {
            return Err(validation("facet normal must be a nonzero finite vector"));
        }
        Ok(AffineFunctional {
            normal: self.normal.iter().map(|n| n / len).collect(),
            offset: self.offset / len,
        })
    }
}

/// Convex compact polytope `∩ {L_i < 0}` with unit normals.
#[derive(Clone, Debug, PartialEq)]
pub struct Polytope {
    facets: Vec<AffineFunctional>,
    center: Vec<f64>,
    inradius: f64,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Polytope {
    pub fn new(facets: Vec<AffineFunctional>) -> Result<Self> {
        let d = facets.first().map(|f| f.normal.len()).unwrap_or(0);
        if d < 2 {
            return Err(validation("polytope needs dimension at least 2"));
        }
        if facets.iter().any(|f| f.normal.len() != d) {
            return Err(validation("facet normals have inconsistent dimensions"));
        }
        if facets.len() < d + 1 {
            return Err(validation("a compact polytope needs at least d+1 facets"));
        }
        let facets: Vec<_> = facets.iter().map(AffineFunctional::normalized).collect::<Result<_>>()?;
        let (center, inradius) = chebyshev_center(&facets)
            .ok_or_else(|| validation("polytope facets admit no interior point"))?;
        if inradius <= 1e-12 {
            return Err(validation("polytope has empty interior"));
        }
        let vertices = vertices(&facets);
        if vertices.is_empty() {
            return Err(validation("polytope has no vertices"));
        }
        let mut lower = vec![f64::INFINITY; d];
        let mut upper = vec![f64::NEG_INFINITY; d];
        for v in &vertices {
            for k in 0..d {
                lower[k] = lower[k].min(v[k]);
                upper[k] = upper[k].max(v[k]);
            }
        }
        let poly = Polytope { facets, center, inradius, lower, upper };
        poly.check_bounded()?;
        Ok(poly)
    }

    /// Polygon from counter-clockwise vertices.
    pub fn polygon(vertices: &[[f64; 2]]) -> Result<Self> {
        let n = vertices.len();
        if n < 3 {
            return Err(validation("polygon needs three vertices"));
        }
        let facets = (0..n)
            .map(|i| {
                let (p, q) = (vertices[i], vertices[(i + 1) % n]);
                let normal = vec![q[1] - p[1], p[0] - q[0]];
                let offset = -(normal[0] * p[0] + normal[1] * p[1]);
                AffineFunctional { normal, offset }
            })
            .collect();
        Polytope::new(facets)
    }

    /// Axis-aligned box `∏ [lo_k, hi_k]`.
    pub fn axis_box(lo: &[f64], hi: &[f64]) -> Result<Self> {
        let d = lo.len();
        let mut facets = Vec::with_capacity(2 * d);
        for k in 0..d {
            let mut n = vec![0.0; d];
            n[k] = 1.0;
            facets.push(AffineFunctional { normal: n.clone(), offset: -hi[k] });
            n[k] = -1.0;
            facets.push(AffineFunctional { normal: n, offset: lo[k] });
        }
        Polytope::new(facets)
    }

    pub fn facets(&self) -> &[AffineFunctional] {
        &self.facets
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// Center of the largest inscribed ball.
    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn inradius(&self) -> f64 {
        self.inradius
    }

    pub fn bounds(&self) -> (&[f64], &[f64]) {
        (&self.lower, &self.upper)
    }

    /// Index of the facet realizing `D(x)` (lowest index on ties).
    pub fn nearest_facet(&self, x: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, f) in self.facets.iter().enumerate() {
            let v = f.value(x).abs();
            if v < best.0 {
                best = (v, i);
            }
        }
        best.1
    }

    /// Largest facet value `max_i L_i(x)`; negative inside.
    fn max_value(&self, x: &[f64]) -> f64 {
        self.facets.iter().map(|f| f.value(x)).fold(f64::NEG_INFINITY, f64::max)
    }

    fn check_bounded(&self) -> Result<()> {
        let d = self.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
        for i in 0..(2 * d + 256) {
            let dir: Vec<f64> = if i < 2 * d {
                let mut v = vec![0.0; d];
                v[i / 2] = if i % 2 == 0 { 1.0 } else { -1.0 };
                v
            } else {
                random_unit(&mut rng, d)
            };
            if self.ray_exit(&self.center, &dir).is_none() {
                return Err(validation("polytope is unbounded"));
            }
        }
        Ok(())
    }

    /// First facet hit by the ray `x + t·dir`, `t > 0`: `(t, facet index)`.
    fn ray_exit(&self, x: &[f64], dir: &[f64]) -> Option<(f64, usize)> {
        let mut best: Option<(f64, usize)> = None;
        for (i, f) in self.facets.iter().enumerate() {
            let rate: f64 = f.normal.iter().zip(dir).map(|(n, v)| n * v).sum();
            if rate > 1e-14 {
                let t = -f.value(x) / rate;
                if best.is_none_or(|(bt, _)| t < bt) {
                    best = Some((t, i));
                }
            }
        }
        best
    }
}

/// Maximizes `t` subject to `L_i(x) + t ≤ 0` by enumerating active sets of
/// size `d+1`; exact for the small facet counts used here.
fn chebyshev_center(facets: &[AffineFunctional]) -> Option<(Vec<f64>, f64)> {
    let d = facets[0].normal.len();
    let mut best: Option<(Vec<f64>, f64)> = None;
    for subset in combinations(facets.len(), d + 1) {
        let mut m = DMatrix::zeros(d + 1, d + 1);
        let mut rhs = DVector::zeros(d + 1);
        for (row, &i) in subset.iter().enumerate() {
            for k in 0..d {
                m[(row, k)] = facets[i].normal[k];
            }
            m[(row, d)] = 1.0;
            rhs[row] = -facets[i].offset;
        }
        let Some(sol) = m.lu().solve(&rhs) else { continue };
        let x: Vec<f64> = sol.iter().take(d).copied().collect();
        let t = sol[d];
        if !t.is_finite() || facets.iter().any(|f| f.value(&x) + t > 1e-10 * (1.0 + t.abs())) {
            continue;
        }
        if best.as_ref().is_none_or(|(_, bt)| t > *bt) {
            best = Some((x, t));
        }
    }
    best
}

fn vertices(facets: &[AffineFunctional]) -> Vec<Vec<f64>> {
    let d = facets[0].normal.len();
    let mut out = Vec::new();
    for subset in combinations(facets.len(), d) {
        let m = DMatrix::from_fn(d, d, |r, k| facets[subset[r]].normal[k]);
        let rhs = DVector::from_fn(d, |r, _| -facets[subset[r]].offset);
        let Some(x) = m.lu().solve(&rhs) else { continue };
        let x: Vec<f64> = x.iter().copied().collect();
        if x.iter().all(|v| v.is_finite()) && facets.iter().all(|f| f.value(&x) <= 1e-9) {
            out.push(x);
        }
    }
    out
}

fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::with_capacity(k), &mut out);
    out
}

/// The open set Ω.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DomainSpec", into = "DomainSpec")]
pub enum Domain {
    Disk2d { radius: f64 },
    Annulus2d { r_in: f64, r_out: f64 },
    Ball3d { radius: f64 },
    SolidTorus3d { r0: f64, a: f64 },
    Polytope(Polytope),
    PuncturedSpace { dim: usize },
}

/// Wire form of [`Domain`].
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum DomainSpec {
    #[serde(rename = "disk2d")]
    Disk2d { radius: f64 },
    #[serde(rename = "annulus2d")]
    Annulus2d { r_in: f64, r_out: f64 },
    #[serde(rename = "ball3d")]
    Ball3d { radius: f64 },
    #[serde(rename = "solid_torus3d")]
    SolidTorus3d { r0: f64, a: f64 },
    #[serde(rename = "polytope")]
    Polytope { facets: Vec<AffineFunctional> },
    #[serde(rename = "punctured_space")]
    PuncturedSpace { dim: usize },
}

impl TryFrom<DomainSpec> for Domain {
    type Error = Error;

    fn try_from(spec: DomainSpec) -> Result<Self> {
        let dom = match spec {
            DomainSpec::Disk2d { radius } => Domain::Disk2d { radius },
            DomainSpec::Annulus2d { r_in, r_out } => Domain::Annulus2d { r_in, r_out },
            DomainSpec::Ball3d { radius } => Domain::Ball3d { radius },
            DomainSpec::SolidTorus3d { r0, a } => Domain::SolidTorus3d { r0, a },
            DomainSpec::Polytope { facets } => Domain::Polytope(Polytope::new(facets)?),
            DomainSpec::PuncturedSpace { dim } => Domain::PuncturedSpace { dim },
        };
        dom.validate()?;
        Ok(dom)
    }
}

impl From<Domain> for DomainSpec {
    fn from(d: Domain) -> Self {
        match d {
            Domain::Disk2d { radius } => DomainSpec::Disk2d { radius },
            Domain::Annulus2d { r_in, r_out } => DomainSpec::Annulus2d { r_in, r_out },
            Domain::Ball3d { radius } => DomainSpec::Ball3d { radius },
            Domain::SolidTorus3d { r0, a } => DomainSpec::SolidTorus3d { r0, a },
            Domain::Polytope(p) => DomainSpec::Polytope { facets: p.facets },
            Domain::PuncturedSpace { dim } => DomainSpec::PuncturedSpace { dim },
        }
    }
}

/// A boundary point with the inward unit normal (for the punctured space:
/// a unit direction, samples approach the origin along it).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub point: Vec<f64>,
    pub inward: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub depth: f64,
    pub point: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub anchor: Anchor,
    pub samples: Vec<RaySample>,
}

impl Domain {
    pub fn disk(radius: f64) -> Self {
        Domain::Disk2d { radius }
    }

    pub fn polytope(facets: Vec<AffineFunctional>) -> Result<Self> {
        Ok(Domain::Polytope(Polytope::new(facets)?))
    }

    /// The square `[-s, s]²`.
    pub fn square(half_side: f64) -> Result<Self> {
        Ok(Domain::Polytope(Polytope::axis_box(&[-half_side; 2], &[half_side; 2])?))
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64, what: &str| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(validation(format!("{what} must be positive and finite")))
            }
        };
        match *self {
            Domain::Disk2d { radius } | Domain::Ball3d { radius } => positive(radius, "radius"),
            Domain::Annulus2d { r_in, r_out } => {
                positive(r_in, "inner radius")?;
                if r_out > r_in && r_out.is_finite() {
                    Ok(())
                } else {
                    Err(validation("annulus needs 0 < r_in < r_out"))
                }
            }
            Domain::SolidTorus3d { r0, a } => {
                positive(a, "tube radius")?;
                if r0 > a && r0.is_finite() {
                    Ok(())
                } else {
                    Err(validation("solid torus needs 0 < a < R0"))
                }
            }
            Domain::Polytope(_) => Ok(()),
            Domain::PuncturedSpace { dim } => {
                if dim >= 2 {
                    Ok(())
                } else {
                    Err(validation("punctured space needs dimension at least 2"))
                }
            }
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Domain::Disk2d { .. } | Domain::Annulus2d { .. } => 2,
            Domain::Ball3d { .. } | Domain::SolidTorus3d { .. } => 3,
            Domain::Polytope(p) => p.dim(),
            Domain::PuncturedSpace { dim } => *dim,
        }
    }

    /// Signed distance: positive inside, `≤ 0` outside.
    pub fn signed_distance(&self, x: &[f64]) -> f64 {
        let r = norm(x);
        match *self {
            Domain::Disk2d { radius } | Domain::Ball3d { radius } => radius - r,
            Domain::Annulus2d { r_in, r_out } => (r - r_in).min(r_out - r),
            Domain::SolidTorus3d { r0, a } => a - torus_core_distance(r0, x),
            Domain::Polytope(ref p) => {
                let m = p.max_value(x);
                if m < 0.0 {
                    p.facets.iter().map(|f| f.value(x).abs()).fold(f64::INFINITY, f64::min)
                } else {
                    -m
                }
            }
            Domain::PuncturedSpace { .. } => r,
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.signed_distance(x) > 0.0
    }

    /// Distance `D(x)` to the boundary; `|x|` for the punctured space.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::Dimension { expected: self.dim(), got: x.len() });
        }
        let d = self.signed_distance(x);
        if d > 0.0 {
            Ok(d)
        } else {
            Err(Error::OutsideDomain { point: x.to_vec() })
        }
    }

    /// `∇D`; on ridges where `D` is not differentiable, the gradient of the
    /// branch with the lowest index (inner circle first for the annulus).
    pub fn distance_gradient(&self, x: &[f64]) -> Option<Vec<f64>> {
        let r = norm(x);
        match *self {
            Domain::Disk2d { .. } | Domain::Ball3d { .. } => {
                (r > 0.0).then(|| x.iter().map(|v| -v / r).collect())
            }
            Domain::Annulus2d { r_in, r_out } => {
                let inner = r - r_in;
                let outer = r_out - r;
                let s = if inner <= outer { 1.0 } else { -1.0 };
                (r > 0.0).then(|| x.iter().map(|v| s * v / r).collect())
            }
            Domain::SolidTorus3d { r0, .. } => {
                let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
                if rho == 0.0 {
                    return None;
                }
                let core = [r0 * x[0] / rho, r0 * x[1] / rho, 0.0];
                let off: Vec<f64> = (0..3).map(|k| x[k] - core[k]).collect();
                let len = norm(&off);
                (len > 0.0).then(|| off.iter().map(|v| -v / len).collect())
            }
            Domain::Polytope(ref p) => {
                let nearest = p.nearest_facet(x);
                Some(p.facets[nearest].normal.iter().map(|n| -n).collect())
            }
            Domain::PuncturedSpace { .. } => (r > 0.0).then(|| x.iter().map(|v| v / r).collect()),
        }
    }

    /// Supremum of `D` over Ω (infinite for the punctured space).
    pub fn inradius(&self) -> f64 {
        match *self {
            Domain::Disk2d { radius } | Domain::Ball3d { radius } => radius,
            Domain::Annulus2d { r_in, r_out } => 0.5 * (r_out - r_in),
            Domain::SolidTorus3d { a, .. } => a,
            Domain::Polytope(ref p) => p.inradius,
            Domain::PuncturedSpace { .. } => f64::INFINITY,
        }
    }

    /// Axis-aligned bounding box of Ω; `None` when Ω is unbounded.
    pub fn bounding_box(&self) -> Option<(Vec<f64>, Vec<f64>)> {
        match *self {
            Domain::Disk2d { radius } => Some((vec![-radius; 2], vec![radius; 2])),
            Domain::Annulus2d { r_out, .. } => Some((vec![-r_out; 2], vec![r_out; 2])),
            Domain::Ball3d { radius } => Some((vec![-radius; 3], vec![radius; 3])),
            Domain::SolidTorus3d { r0, a } => {
                Some((vec![-(r0 + a), -(r0 + a), -a], vec![r0 + a, r0 + a, a]))
            }
            Domain::Polytope(ref p) => Some((p.lower.clone(), p.upper.clone())),
            Domain::PuncturedSpace { .. } => None,
        }
    }

    /// Deterministic boundary anchors, roughly evenly spread.
    pub fn boundary_anchors(&self, n: usize) -> Vec<Anchor> {
        let d = self.dim();
        match *self {
            Domain::Disk2d { radius } => circle_anchors(radius, n, -1.0),
            Domain::Annulus2d { r_in, r_out } => {
                let outer = n.div_ceil(2);
                let mut v = circle_anchors(r_out, outer, -1.0);
                v.extend(circle_anchors(r_in, n - outer, 1.0));
                v
            }
            Domain::Ball3d { radius } => fibonacci_sphere(n)
                .into_iter()
                .map(|u| Anchor { point: u.iter().map(|c| radius * c).collect(), inward: neg(&u) })
                .collect(),
            Domain::SolidTorus3d { r0, a } => {
                let golden = 0.5 * (5f64.sqrt() - 1.0);
                (0..n)
                    .map(|i| {
                        let phi = std::f64::consts::TAU * i as f64 / n as f64;
                        let psi = std::f64::consts::TAU * (i as f64 * golden).fract();
                        let normal = [psi.cos() * phi.cos(), psi.cos() * phi.sin(), psi.sin()];
                        let rho = r0 + a * psi.cos();
                        Anchor {
                            point: vec![rho * phi.cos(), rho * phi.sin(), a * psi.sin()],
                            inward: neg(&normal),
                        }
                    })
                    .collect()
            }
            Domain::Polytope(ref p) => directions(d, n)
                .into_iter()
                .filter_map(|dir| polytope_anchor(p, &dir))
                .collect(),
            Domain::PuncturedSpace { dim } => directions(dim, n)
                .into_iter()
                .map(|u| Anchor { point: vec![0.0; dim], inward: u })
                .collect(),
        }
    }

    /// Boundary points only.
    pub fn sample_boundary(&self, n: usize) -> Vec<Vec<f64>> {
        self.boundary_anchors(n).into_iter().map(|a| a.point).collect()
    }

    /// Points at distance `depth` from each anchor, moving inward (or, for the
    /// punctured space, points `depth · u` approaching the origin).
    pub fn near_boundary_rays(&self, n_points: usize, depths: &[f64]) -> Result<Vec<Ray>> {
        self.check_depths(depths)?;
        let anchors = match self {
            Domain::Polytope(p) => {
                let deepest = depths.iter().copied().fold(0.0, f64::max);
                let mut found = Vec::new();
                let mut tried = 0;
                while found.len() < n_points && tried < 16 {
                    let batch = n_points * (1 << tried.min(4));
                    found = directions(p.dim(), batch)
                        .into_iter()
                        .filter_map(|dir| polytope_anchor(p, &dir))
                        .filter(|a| polytope_clearance(p, a) >= 2.0 * deepest)
                        .take(n_points)
                        .collect();
                    tried += 1;
                }
                if found.is_empty() {
                    return Err(Error::Range(
                        "no boundary anchor keeps the requested depths inside one facet".into(),
                    ));
                }
                found
            }
            _ => self.boundary_anchors(n_points),
        };
        Ok(anchors.into_iter().map(|a| rays_from_anchor(a, depths)).collect())
    }

    /// Rays from caller-chosen anchors.
    pub fn rays_from_anchors(&self, anchors: Vec<Anchor>, depths: &[f64]) -> Result<Vec<Ray>> {
        self.check_depths(depths)?;
        Ok(anchors.into_iter().map(|a| rays_from_anchor(a, depths)).collect())
    }

    fn check_depths(&self, depths: &[f64]) -> Result<()> {
        let inr = self.inradius();
        for &t in depths {
            if !(t > 0.0) {
                return Err(Error::Range(format!("depth {t} must be positive")));
            }
            if t >= inr {
                return Err(Error::Range(format!("depth {t} is not below the inradius {inr}")));
            }
        }
        Ok(())
    }

    /// Uniform interior samples (inside the ball of radius 2 for the
    /// punctured space).
    pub fn sample_interior(&self, rng: &mut ChaCha8Rng, n: usize) -> Vec<Vec<f64>> {
        let (lo, hi) = self
            .bounding_box()
            .unwrap_or_else(|| (vec![-2.0; self.dim()], vec![2.0; self.dim()]));
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let x: Vec<f64> = lo.iter().zip(&hi).map(|(a, b)| rng.random_range(*a..*b)).collect();
            if self.contains(&x) {
                out.push(x);
            }
        }
        out
    }

    /// Largest sampled ratio `|D(x) - D(y)| / |x - y|` over `n_pairs` pairs at
    /// log-uniform separations.
    pub fn lipschitz_check(&self, n_pairs: usize, seed: u64) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scale = self
            .bounding_box()
            .map(|(lo, hi)| lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt())
            .unwrap_or(4.0);
        let mut worst: f64 = 0.0;
        let mut done = 0;
        while done < n_pairs {
            let x = self.sample_interior(&mut rng, 1).pop().unwrap();
            let sep = scale * 10f64.powf(rng.random_range(-6.0..0.0));
            let u = random_unit(&mut rng, self.dim());
            let y: Vec<f64> = x.iter().zip(&u).map(|(a, b)| a + sep * b).collect();
            let (Ok(dx), Ok(dy)) = (self.distance(&x), self.distance(&y)) else { continue };
            let gap = norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>());
            worst = worst.max((dx - dy).abs() / gap);
            done += 1;
        }
        worst
    }
}

fn rays_from_anchor(anchor: Anchor, depths: &[f64]) -> Ray {
    let samples = depths
        .iter()
        .map(|&t| RaySample {
            depth: t,
            point: anchor.point.iter().zip(&anchor.inward).map(|(p, n)| p + t * n).collect(),
        })
        .collect();
    Ray { anchor, samples }
}

fn polytope_anchor(p: &Polytope, dir: &[f64]) -> Option<Anchor> {
    let (t, i) = p.ray_exit(&p.center, dir)?;
    let point = p.center.iter().zip(dir).map(|(c, v)| c + t * v).collect();
    Some(Anchor { point, inward: neg(&p.facets[i].normal) })
}

/// Distance from the anchor to the other facets' hyperplanes.
fn polytope_clearance(p: &Polytope, a: &Anchor) -> f64 {
    p.facets
        .iter()
        .filter(|f| f.normal.iter().zip(&a.inward).map(|(n, m)| n * m).sum::<f64>() > -1.0 + 1e-12)
        .map(|f| f.value(&a.point).abs())
        .fold(f64::INFINITY, f64::min)
}

fn circle_anchors(radius: f64, n: usize, inward_sign: f64) -> Vec<Anchor> {
    (0..n)
        .map(|i| {
            let phi = std::f64::consts::TAU * i as f64 / n as f64;
            let (c, s) = (phi.cos(), phi.sin());
            Anchor { point: vec![radius * c, radius * s], inward: vec![inward_sign * c, inward_sign * s] }
        })
        .collect()
}

fn fibonacci_sphere(n: usize) -> Vec<Vec<f64>> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let z = 1.0 - (2.0 * i as f64 + 1.0) / n as f64;
            let r = (1.0 - z * z).max(0.0).sqrt();
            let phi = golden * i as f64;
            vec![r * phi.cos(), r * phi.sin(), z]
        })
        .collect()
}

/// `n` unit directions: evenly spaced angles in 2-d, a Fibonacci lattice in
/// 3-d, seeded Gaussian directions beyond.
pub(crate) fn directions(d: usize, n: usize) -> Vec<Vec<f64>> {
    match d {
        2 => (0..n)
            .map(|i| {
                let phi = std::f64::consts::TAU * i as f64 / n as f64;
                vec![phi.cos(), phi.sin()]
            })
            .collect(),
        3 => fibonacci_sphere(n),
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0xd1ec7);
            (0..n).map(|_| random_unit(&mut rng, d)).collect()
        }
    }
}

pub(crate) fn random_unit(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        let len = norm(&v);
        if len > 1e-8 {
            return v.into_iter().map(|c| c / len).collect();
        }
    }
}

fn torus_core_distance(r0: f64, x: &[f64]) -> f64 {
    let rho = (x[0] * x[0] + x[1] * x[1]).sqrt();
    ((rho - r0).powi(2) + x[2] * x[2]).sqrt()
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn neg(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| -v).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn unit_square() -> Domain {
        Domain::square(1.0).unwrap()
    }

    #[test]
    fn disk_distance_is_one_minus_radius() {
        let d = Domain::disk(1.0);
        assert_abs_diff_eq!(d.distance(&[0.3, 0.4]).unwrap(), 0.5, epsilon = 1e-15);
        assert!(matches!(d.distance(&[1.0, 0.5]), Err(Error::OutsideDomain { .. })));
    }

    #[test]
    fn polytope_distance_is_min_facet_value() {
        let d = unit_square();
        assert_abs_diff_eq!(d.distance(&[0.5, -0.2]).unwrap(), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(d.distance(&[0.1, 0.95]).unwrap(), 0.05, epsilon = 1e-15);
        let Domain::Polytope(p) = &d else { unreachable!() };
        assert_abs_diff_eq!(p.inradius(), 1.0, epsilon = 1e-12);
        assert!(p.center().iter().all(|c| c.abs() < 1e-12));
    }

    #[test]
    fn torus_center_circle_is_at_depth_a() {
        let d = Domain::SolidTorus3d { r0: 3.0, a: 1.0 };
        for phi in [0.0, 1.0, 2.5] {
            let x = [3.0 * f64::cos(phi), 3.0 * f64::sin(phi), 0.0];
            assert_abs_diff_eq!(d.distance(&x).unwrap(), 1.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn invalid_parameters_are_rejected() {
        let bad = [
            r#"{"kind":"disk2d","radius":-1}"#,
            r#"{"kind":"annulus2d","r_in":2,"r_out":1}"#,
            r#"{"kind":"solid_torus3d","r0":1,"a":2}"#,
            r#"{"kind":"disk2d","radius":1,"extra":0}"#,
            r#"{"kind":"polytope","facets":[{"normal":[1,0],"offset":-1},{"normal":[-1,0],"offset":-1}]}"#,
        ];
        for s in bad {
            assert!(serde_json::from_str::<Domain>(s).is_err(), "{s}");
        }
    }

    #[test]
    fn polytope_normals_are_normalized_on_load() {
        let d: Domain = serde_json::from_str(
            r#"{"kind":"polytope","facets":[
                {"normal":[2,0],"offset":-2},{"normal":[-2,0],"offset":-2},
                {"normal":[0,3],"offset":-3},{"normal":[0,-3],"offset":-3}]}"#,
        )
        .unwrap();
        assert_eq!(d, unit_square());
    }

    #[test]
    fn lipschitz_ratios_stay_below_one() {
        assert!(Domain::disk(1.0).lipschitz_check(1000, 1) <= 1.0 + 1e-9);
        assert!(unit_square().lipschitz_check(10_000, 2) <= 1.0 + 1e-9);
        assert!(Domain::PuncturedSpace { dim: 3 }.lipschitz_check(1000, 3) <= 1.0 + 1e-9);
        assert!(Domain::SolidTorus3d { r0: 3.0, a: 1.0 }.lipschitz_check(1000, 4) <= 1.0 + 1e-9);
        assert!(Domain::Annulus2d { r_in: 0.5, r_out: 1.0 }.lipschitz_check(1000, 5) <= 1.0 + 1e-9);
    }

    #[test]
    fn brute_force_polytope_distance() {
        let d = Domain::Polytope(
            Polytope::polygon(&[[0.0, 0.0], [2.0, 0.2], [0.7, 1.5], [-0.4, 0.9]]).unwrap(),
        );
        let Domain::Polytope(p) = &d else { unreachable!() };
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for x in d.sample_interior(&mut rng, 10_000) {
            let brute = p.facets().iter().map(|f| f.value(&x).abs()).fold(f64::INFINITY, f64::min);
            assert_eq!(d.distance(&x).unwrap(), brute);
        }
    }

    #[test]
    fn disk_rays_move_radially_inward() {
        let rays = Domain::disk(1.0).near_boundary_rays(4, &[0.1, 0.01]).unwrap();
        assert_eq!(rays[0].anchor.point, vec![1.0, 0.0]);
        assert_abs_diff_eq!(rays[0].samples[0].point[0], 0.9, epsilon = 1e-15);
        assert_abs_diff_eq!(rays[0].samples[1].point[0], 0.99, epsilon = 1e-15);
        assert_abs_diff_eq!(rays[0].samples[1].point[1], 0.0, epsilon = 1e-15);
    }

    #[test]
    fn square_mid_edge_ray() {
        let d = unit_square();
        let rays = d.near_boundary_rays(4, &[0.1]).unwrap();
        assert_eq!(rays.len(), 4);
        let mid = &rays[0];
        assert_abs_diff_eq!(mid.anchor.point[0], 1.0, epsilon = 1e-14);
        assert_abs_diff_eq!(mid.anchor.point[1], 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(d.distance(&mid.samples[0].point).unwrap(), 0.1, epsilon = 1e-14);
    }

    #[test]
    fn punctured_ray_approaches_origin() {
        let d = Domain::PuncturedSpace { dim: 3 };
        let anchor = Anchor { point: vec![0.0; 3], inward: vec![0.0, 0.0, 1.0] };
        let rays = d.rays_from_anchors(vec![anchor], &[0.1]).unwrap();
        assert_eq!(rays[0].samples[0].point, vec![0.0, 0.0, 0.1]);
    }

    #[test]
    fn depth_beyond_inradius_is_a_range_error() {
        assert!(matches!(Domain::disk(1.0).near_boundary_rays(3, &[1.5]), Err(Error::Range(_))));
        assert!(matches!(Domain::disk(1.0).near_boundary_rays(3, &[0.0]), Err(Error::Range(_))));
    }

    #[test]
    fn sampled_depths_are_exact_and_vanish_toward_the_boundary() {
        let depths = [0.3, 0.1, 0.03, 0.01, 0.001];
        let domains = [
            Domain::disk(1.0),
            Domain::Annulus2d { r_in: 0.5, r_out: 1.5 },
            Domain::Ball3d { radius: 2.0 },
            Domain::SolidTorus3d { r0: 3.0, a: 1.0 },
            unit_square(),
            Domain::Polytope(Polytope::polygon(&[[0.0, 0.0], [3.0, 0.0], [0.5, 2.0]]).unwrap()),
            Domain::PuncturedSpace { dim: 3 },
        ];
        for dom in &domains {
            for ray in dom.near_boundary_rays(16, &depths).unwrap() {
                for s in &ray.samples {
                    let got = dom.distance(&s.point).unwrap();
                    assert!((got - s.depth).abs() < 1e-12, "{dom:?}: {got} vs {}", s.depth);
                }
            }
        }
    }

    #[test]
    fn distance_never_exceeds_distance_to_sampled_boundary() {
        let domains = [
            Domain::disk(1.0),
            Domain::Annulus2d { r_in: 0.5, r_out: 1.5 },
            Domain::Ball3d { radius: 2.0 },
            Domain::SolidTorus3d { r0: 3.0, a: 1.0 },
            unit_square(),
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for dom in &domains {
            let boundary = dom.sample_boundary(200);
            for x in dom.sample_interior(&mut rng, 200) {
                let dx = dom.distance(&x).unwrap();
                for y in &boundary {
                    let e = norm(&x.iter().zip(y).map(|(a, b)| a - b).collect::<Vec<_>>());
                    assert!(dx <= e + 1e-12);
                }
            }
        }
    }

    #[test]
    fn four_dimensional_box() {
        let p = Polytope::axis_box(&[-1.0, -2.0, -3.0, -1.0], &[1.0, 2.0, 3.0, 1.0]).unwrap();
        assert_abs_diff_eq!(p.inradius(), 1.0, epsilon = 1e-12);
        assert_eq!(p.bounds().0, &[-1.0, -2.0, -3.0, -1.0]);
    }
}
