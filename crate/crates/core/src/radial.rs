//! Radial reductions and Weyl limit-point / limit-circle classification of
//! `-u'' + q u` at singular endpoints.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use ode_solvers::{Dopri5, System, Vector4};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{validation, Error, Result};
use crate::spherical;

/// Where a radial problem came from.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Provenance {
    /// Angular mode `e^{imθ}` of the disk field `α (x dy - y dx)/(r - 1)`.
    DiskMode { alpha: f64, m: i64 },
    /// Ground angular level of the monopole of degree `m`.
    MonopoleMode { m: i64 },
    /// `q = c / r²` on `(0, 1)`.
    InverseSquare { c: f64 },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Left,
    Right,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Endpoint {
    Finite(f64),
    Infinity,
}

/// `-u'' + q(r) u` on `L²((r_min, r_max), dr)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialProblem {
    pub r_min: f64,
    pub r_max: Endpoint,
    pub provenance: Provenance,
    /// The unitary map from the original weighted space.
    pub transform: String,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Indicial,
    DeficiencySolve,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Weyl {
    LimitPoint,
    LimitCircle,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EndpointClassification {
    pub side: Side,
    pub endpoint: Endpoint,
    pub method: Method,
    pub verdict: Weyl,
    /// Coefficient of the leading `c/t²` singularity.
    pub c: Option<f64>,
    /// Real parts of `s∓ = (1 ∓ √(1+4c))/2`.
    pub exponents: Option<[f64; 2]>,
    /// Square integrability of the two solutions near the endpoint.
    pub l2: Option<[bool; 2]>,
    /// Fitted growth exponents (power in `t` at finite endpoints, exponential
    /// rate at infinity).
    pub fitted: Option<[f64; 2]>,
    pub diagnostics: Vec<String>,
}

/// Exponent tolerance for the solving path.
pub const FIT_TOLERANCE: f64 = 0.02;
/// Dyadic windows `2^{-k} d0`, `k = FIRST_WINDOW..=LAST_WINDOW`.
pub const FIRST_WINDOW: i32 = 4;
pub const LAST_WINDOW: i32 = 14;

pub fn reduce_disk_mode(alpha: f64, m: i64) -> Result<RadialProblem> {
    if !(alpha.is_finite() && alpha >= 0.0) {
        return Err(validation("disk mode needs alpha ≥ 0"));
    }
    Ok(RadialProblem {
        r_min: 0.0,
        r_max: Endpoint::Finite(1.0),
        provenance: Provenance::DiskMode { alpha, m },
        transform: "u ↦ r^{1/2} u from L²((0,1), r dr)".into(),
    })
}

pub fn reduce_monopole(m: i64) -> Result<RadialProblem> {
    if m == 0 {
        return Err(validation("monopole degree must be nonzero"));
    }
    Ok(RadialProblem {
        r_min: 0.0,
        r_max: Endpoint::Infinity,
        provenance: Provenance::MonopoleMode { m },
        transform: "v = r u from L²((0,∞), r² dr)".into(),
    })
}

pub fn inverse_square(c: f64) -> Result<RadialProblem> {
    if !c.is_finite() {
        return Err(validation("inverse-square coefficient must be finite"));
    }
    Ok(RadialProblem {
        r_min: 0.0,
        r_max: Endpoint::Finite(1.0),
        provenance: Provenance::InverseSquare { c },
        transform: "identity".into(),
    })
}

/// Lowest eigenvalue of the angular operator, `|m|/2`.
pub fn monopole_ground(m: i64) -> Result<f64> {
    Ok(spherical::spectrum(m, m.unsigned_abs() as u32)?.ground().lambda_f64())
}

impl RadialProblem {
    pub fn q(&self, r: f64) -> f64 {
        match self.provenance {
            // |(m - α r²/(r-1))|² / r² - 1/(4r²)
            Provenance::DiskMode { alpha, m } => {
                let m = m as f64;
                (m * m - 0.25) / (r * r) - 2.0 * m * alpha / (r - 1.0)
                    + alpha * alpha * r * r / ((r - 1.0) * (r - 1.0))
            }
            Provenance::MonopoleMode { m } => 0.5 * m.unsigned_abs() as f64 / (r * r),
            Provenance::InverseSquare { c } => c / (r * r),
        }
    }

    pub fn endpoint(&self, side: Side) -> Endpoint {
        match side {
            Side::Left => Endpoint::Finite(self.r_min),
            Side::Right => self.r_max,
        }
    }

    /// `d0 = 0.1 · min(interval length, 1)`.
    pub fn window_base(&self) -> f64 {
        match self.r_max {
            Endpoint::Finite(b) => 0.1 * (b - self.r_min).min(1.0),
            Endpoint::Infinity => 0.1,
        }
    }

    /// Point at distance `t` from a finite endpoint.
    fn at(&self, side: Side, t: f64) -> f64 {
        match (side, self.endpoint(side)) {
            (Side::Left, Endpoint::Finite(a)) => a + t,
            (Side::Right, Endpoint::Finite(b)) => b - t,
            _ => unreachable!("finite endpoint expected"),
        }
    }
}

fn exponents(c: f64) -> [f64; 2] {
    let disc = 1.0 + 4.0 * c;
    if disc >= 0.0 {
        let s = disc.sqrt();
        [0.5 * (1.0 - s), 0.5 * (1.0 + s)]
    } else {
        [0.5, 0.5]
    }
}

/// Least-squares polynomial fit; returns coefficients and the RMS residual.
fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> (Vec<f64>, f64) {
    let scale = xs.iter().fold(0.0_f64, |m, x| m.max(x.abs())).max(1e-300);
    let a = DMatrix::from_fn(xs.len(), degree + 1, |i, j| (xs[i] / scale).powi(j as i32));
    let b = DVector::from_column_slice(ys);
    let svd = a.clone().svd(true, true);
    let coef = svd.solve(&b, 1e-14).expect("SVD has both factors");
    let resid = (&a * &coef - &b).norm() / (xs.len() as f64).sqrt();
    let coef = coef.iter().enumerate().map(|(j, c)| c / scale.powi(j as i32)).collect();
    (coef, resid)
}

/// Classification from the leading `c/t²` coefficient: limit circle iff
/// `c < 3/4`.
pub fn classify_indicial(p: &RadialProblem, side: Side) -> Result<EndpointClassification> {
    let endpoint = p.endpoint(side);
    let mut out = EndpointClassification {
        side,
        endpoint,
        method: Method::Indicial,
        verdict: Weyl::Inconclusive,
        c: None,
        exponents: None,
        l2: None,
        fitted: None,
        diagnostics: Vec::new(),
    };
    if endpoint == Endpoint::Infinity {
        // q ≥ -K r² near infinity suffices for the limit-point case.
        let worst = (0..=16)
            .map(|j| {
                let r = 10f64.powf(0.5 * j as f64).max(p.r_min + 1.0);
                p.q(r) / (1.0 + r * r)
            })
            .fold(f64::INFINITY, f64::min);
        if worst.is_finite() {
            out.verdict = Weyl::LimitPoint;
            out.diagnostics.push(format!("q(r) ≥ {worst:.3e}·(1 + r²) on samples up to 1e8"));
        } else {
            out.diagnostics.push("q is not finite near infinity".into());
        }
        return Ok(out);
    }
    let ts: Vec<f64> = (0..=10).map(|k| 1e-3 * 0.5f64.powi(k)).collect();
    let vs: Vec<f64> = ts.iter().map(|&t| t * t * p.q(p.at(side, t))).collect();
    if vs.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnsupportedSingularity("q is not finite near the endpoint".into()));
    }
    let (coef, resid) = polyfit(&ts, &vs, 2);
    let c = coef[0];
    let grows = vs.last().unwrap().abs() > 100.0 * vs[0].abs().max(1.0);
    if grows {
        return Err(Error::UnsupportedSingularity(format!(
            "t²q grows from {:.3e} to {:.3e}; singularity is stronger than c/t²",
            vs[0],
            vs.last().unwrap()
        )));
    }
    out.c = Some(c);
    let s = exponents(c);
    out.exponents = Some(s);
    let l2 = [s[0] > -0.5, s[1] > -0.5];
    out.l2 = Some(l2);
    if resid > 1e-6 * (1.0 + c.abs()) {
        out.diagnostics.push(format!("leading-order fit residual {resid:.3e}"));
        return Ok(out);
    }
    out.verdict = if l2[0] && l2[1] { Weyl::LimitCircle } else { Weyl::LimitPoint };
    Ok(out)
}

fn breakdown(msg: String) -> Error {
    Error::UnsupportedSingularity(format!("integration breakdown: {msg}"))
}

/// `(u, w = t u')` against `τ = -ln t`, for `u'' = (q - λ) u`.
struct LogSystem<'a> {
    p: &'a RadialProblem,
    side: Side,
    lambda: Complex64,
    /// `t = t_ref e^{-sign·x}`.
    t_ref: f64,
    sign: f64,
}

impl System<f64, Vector4<f64>> for LogSystem<'_> {
    fn system(&self, x: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let t = self.t_ref * (-self.sign * x).exp();
        let (k, l) = (self.p.q(self.p.at(self.side, t)) - self.lambda.re, self.lambda.im);
        let t2 = t * t;
        dy[0] = -y[2];
        dy[1] = -y[3];
        dy[2] = -y[2] - t2 * (k * y[0] + l * y[1]);
        dy[3] = -y[3] - t2 * (k * y[1] - l * y[0]);
        *dy *= self.sign;
    }
}

/// `(u, u')` against `r`, for the endpoint at infinity.
struct OutwardSystem<'a> {
    p: &'a RadialProblem,
    lambda: Complex64,
}

impl System<f64, Vector4<f64>> for OutwardSystem<'_> {
    fn system(&self, r: f64, y: &Vector4<f64>, dy: &mut Vector4<f64>) {
        let (k, l) = (self.p.q(r) - self.lambda.re, self.lambda.im);
        dy[0] = y[2];
        dy[1] = y[3];
        dy[2] = k * y[0] + l * y[1];
        dy[3] = k * y[1] - l * y[0];
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthFit {
    /// Slope of `ln ‖(u, t u')‖` against `ln t`.
    pub exponent: f64,
    pub residual: f64,
    pub windows: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sweep {
    /// From `d0` toward the endpoint; exposes the dominant exponent.
    Inward,
    /// From the innermost window back out to `d0`; data are given there.
    Outward,
}

/// Fits the power-law exponent of a solution over the dyadic windows
/// `t_k = 2^{-k} d0`, starting from `(u, t u') = init` at the first point of
/// the sweep.
pub fn growth_exponent(
    p: &RadialProblem,
    side: Side,
    lambda: Complex64,
    init: [Complex64; 2],
    sweep: Sweep,
) -> Result<GrowthFit> {
    if p.endpoint(side) == Endpoint::Infinity {
        return Err(validation("growth exponents are defined at finite endpoints"));
    }
    let d0 = p.window_base();
    let ln2 = std::f64::consts::LN_2;
    let tau0 = -d0.ln();
    let tau_last = tau0 + LAST_WINDOW as f64 * ln2;
    // the dense output of ode_solvers needs a forward, nonnegative variable
    let (sign, tau_ref) = match sweep {
        Sweep::Inward => (1.0, tau0),
        Sweep::Outward => (-1.0, tau_last),
    };
    let system = LogSystem { p, side, lambda, t_ref: (-tau_ref).exp(), sign };
    let y0 = Vector4::new(init[0].re, init[0].im, init[1].re, init[1].im);
    let mut solver = Dopri5::new(system, 0.0, tau_last - tau0, ln2, y0, 1e-11, 1e-14);
    solver.integrate().map_err(|e| breakdown(format!("{e}")))?;
    let (xs, ys) = (solver.x_out(), solver.y_out());
    let mut lt = Vec::new();
    let mut ln = Vec::new();
    for (x, y) in xs.iter().zip(ys) {
        let tau = tau_ref + sign * x;
        let k = ((tau - tau0) / ln2).round() as i32;
        if ((tau - tau0) / ln2 - k as f64).abs() > 1e-6 || k < FIRST_WINDOW {
            continue;
        }
        let n = y.norm();
        if !(n.is_finite() && n > 0.0) {
            break;
        }
        lt.push(-tau);
        ln.push(n.ln());
    }
    let expected = (LAST_WINDOW - FIRST_WINDOW + 1) as usize;
    if lt.len() < expected {
        return Err(breakdown(format!("reached {} of {expected} windows", lt.len())));
    }
    let (coef, residual) = polyfit(&lt, &ln, 1);
    Ok(GrowthFit { exponent: coef[1], residual, windows: lt.len() })
}

/// Deficiency-solution classification: integrates two independent solutions
/// of `-u'' + q u = λ u` toward the endpoint and tests their square
/// integrability from the fitted growth.
pub fn classify_by_solving(
    p: &RadialProblem,
    side: Side,
    lambda: Complex64,
) -> Result<EndpointClassification> {
    if lambda.im == 0.0 {
        return Err(validation("spectral parameter must be non-real"));
    }
    let endpoint = p.endpoint(side);
    let mut out = EndpointClassification {
        side,
        endpoint,
        method: Method::DeficiencySolve,
        verdict: Weyl::Inconclusive,
        c: None,
        exponents: None,
        l2: None,
        fitted: None,
        diagnostics: Vec::new(),
    };
    let one = Complex64::new(1.0, 0.0);
    let zero = Complex64::new(0.0, 0.0);
    if endpoint == Endpoint::Infinity {
        let mut rates = [0.0; 2];
        for (i, init) in [[one, zero], [zero, one]].into_iter().enumerate() {
            match outward_rate(p, lambda, init) {
                Ok(r) => rates[i] = r,
                Err(e) => {
                    out.diagnostics.push(e.to_string());
                    return Ok(out);
                }
            }
        }
        out.fitted = Some(rates);
        let l2 = [rates[0] < -0.05, rates[1] < -0.05];
        out.l2 = Some(l2);
        out.verdict = if rates.iter().any(|r| *r > 0.05) {
            Weyl::LimitPoint
        } else if l2[0] && l2[1] {
            Weyl::LimitCircle
        } else {
            out.diagnostics.push(format!("growth rates {rates:?} are too close to zero"));
            Weyl::Inconclusive
        };
        return Ok(out);
    }
    let mut fitted = [0.0; 2];
    for (i, init) in [[one, zero], [zero, one]].into_iter().enumerate() {
        match growth_exponent(p, side, lambda, init, Sweep::Inward) {
            Ok(fit) => fitted[i] = fit.exponent,
            Err(e) => {
                out.diagnostics.push(e.to_string());
                return Ok(out);
            }
        }
    }
    out.fitted = Some(fitted);
    let l2 = [fitted[0] > -0.5, fitted[1] > -0.5];
    out.l2 = Some(l2);
    if fitted.iter().any(|s| (s + 0.5).abs() < FIT_TOLERANCE) {
        out.diagnostics.push(format!("fitted exponents {fitted:?} within {FIT_TOLERANCE} of -1/2"));
        return Ok(out);
    }
    out.verdict = if l2[0] && l2[1] { Weyl::LimitCircle } else { Weyl::LimitPoint };
    Ok(out)
}

/// Exponential growth rate of `‖(u, u')‖` over `r ∈ [r_s + 20, r_s + 40]`.
fn outward_rate(p: &RadialProblem, lambda: Complex64, init: [Complex64; 2]) -> Result<f64> {
    let r0 = p.r_min + 1.0;
    let y0 = Vector4::new(init[0].re, init[0].im, init[1].re, init[1].im);
    let mut solver = Dopri5::new(OutwardSystem { p, lambda }, r0, r0 + 40.0, 1.0, y0, 1e-10, 1e-14);
    solver
        .integrate()
        .map_err(|e| breakdown(format!("{e}")))?;
    let (rs, ln): (Vec<f64>, Vec<f64>) = solver
        .x_out()
        .iter()
        .zip(solver.y_out())
        .filter(|(r, _)| **r >= r0 + 20.0 - 1e-9)
        .map(|(r, y)| (*r, y.norm().ln()))
        .unzip();
    if rs.len() < 10 || ln.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnsupportedSingularity("outward integration broke down".into()));
    }
    Ok(polyfit(&rs, &ln, 1).0[1])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub alpha: f64,
    pub c: f64,
    pub s_minus: f64,
    pub s_plus: f64,
    pub indicial: Weyl,
    pub solved: Weyl,
    pub fitted: Option<[f64; 2]>,
}

/// Classifies the `m = 0` disk mode at `r = 1` for each `α`, in input order.
pub fn sweep_alpha(alphas: &[f64]) -> Result<Vec<SweepRow>> {
    alphas
        .par_iter()
        .map(|&alpha| {
            let p = reduce_disk_mode(alpha, 0)?;
            let ind = classify_indicial(&p, Side::Right)?;
            let sol = classify_by_solving(&p, Side::Right, Complex64::i())?;
            let [s_minus, s_plus] = ind.exponents.unwrap_or([f64::NAN; 2]);
            Ok(SweepRow {
                alpha,
                c: ind.c.unwrap_or(f64::NAN),
                s_minus,
                s_plus,
                indicial: ind.verdict,
                solved: sol.verdict,
                fitted: sol.fitted,
            })
        })
        .collect()
}

/// Evenly spaced grid `lo, lo + step, …` up to `hi` (inclusive within
/// rounding).
pub fn alpha_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && hi >= lo && lo >= 0.0 && hi.is_finite()) {
        return Err(validation("alpha range needs 0 ≤ lo ≤ hi and step > 0"));
    }
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    if n > 100_000 {
        return Err(validation("alpha grid has too many points"));
    }
    Ok((0..=n).map(|i| lo + i as f64 * step).collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    pub alpha: f64,
    pub bracket: [f64; 2],
    pub iterations: usize,
}

/// Bisection on `α` for the limit-circle/limit-point flip of the `m = 0`
/// mode at `r = 1`, driven by the sign of the fitted dominant exponent + 1/2.
pub fn bisect_threshold(lo: f64, hi: f64, tol: f64) -> Result<ThresholdEstimate> {
    let side = |alpha: f64| -> Result<f64> {
        let p = reduce_disk_mode(alpha, 0)?;
        let fits = [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)];
        let a = growth_exponent(&p, Side::Right, Complex64::i(), fits, Sweep::Inward)?;
        let b = growth_exponent(&p, Side::Right, Complex64::i(), [fits[1], fits[0]], Sweep::Inward)?;
        Ok(a.exponent.min(b.exponent) + 0.5)
    };
    if !(tol > 0.0 && lo < hi) {
        return Err(validation("bisection needs lo < hi and tol > 0"));
    }
    let (mut a, mut b) = (lo, hi);
    if side(a)? <= 0.0 || side(b)? >= 0.0 {
        return Err(validation("bisection bracket must go from limit circle to limit point"));
    }
    let mut iterations = 0;
    while b - a > tol && iterations < 100 {
        let mid = 0.5 * (a + b);
        if side(mid)? > 0.0 {
            a = mid;
        } else {
            b = mid;
        }
        iterations += 1;
    }
    Ok(ThresholdEstimate { alpha: 0.5 * (a + b), bracket: [a, b], iterations })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EsaVerdict {
    EssentiallySelfAdjoint,
    NotEssentiallySelfAdjoint,
    /// Not settled by the radial reduction.
    Open,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeReport {
    /// Angular label: `m` for disk modes, level `k` for the monopole.
    pub mode: i64,
    pub decisive: bool,
    pub classifications: Vec<EndpointClassification>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EsaReport {
    pub provenance: Provenance,
    pub verdict: EsaVerdict,
    pub basis: String,
    pub modes: Vec<ModeReport>,
}

/// Both classification paths at one endpoint; `None` unless they agree on a
/// definite verdict.
fn agreed(p: &RadialProblem, side: Side, out: &mut Vec<EndpointClassification>) -> Result<Option<Weyl>> {
    let ind = classify_indicial(p, side)?;
    let sol = classify_by_solving(p, side, Complex64::i())?;
    let v = (ind.verdict == sol.verdict && ind.verdict != Weyl::Inconclusive).then_some(ind.verdict);
    out.push(ind);
    out.push(sol);
    Ok(v)
}

/// Overall essential self-adjointness from the radial reductions.
///
/// Disk: decided by the `m = 0` mode at `r = 1` (the origin is a regular
/// point of the planar operator); other listed modes are reported only.
/// Monopole: essentially self-adjoint iff limit point at both `0` and `∞`.
pub fn esa_verdict_radial(provenance: &Provenance, extra_modes: &[i64]) -> Result<EsaReport> {
    match *provenance {
        Provenance::DiskMode { alpha, .. } => {
            let mut modes = Vec::new();
            let p0 = reduce_disk_mode(alpha, 0)?;
            let mut cls = Vec::new();
            let decisive = agreed(&p0, Side::Right, &mut cls)?;
            modes.push(ModeReport { mode: 0, decisive: true, classifications: cls });
            let extra: Vec<ModeReport> = extra_modes
                .par_iter()
                .filter(|&&m| m != 0)
                .map(|&m| {
                    let p = reduce_disk_mode(alpha, m)?;
                    let mut cls = Vec::new();
                    agreed(&p, Side::Left, &mut cls)?;
                    agreed(&p, Side::Right, &mut cls)?;
                    Ok(ModeReport { mode: m, decisive: false, classifications: cls })
                })
                .collect::<Result<_>>()?;
            modes.extend(extra);
            let (verdict, basis) = match decisive {
                None => (EsaVerdict::Inconclusive, "m = 0 mode: classification paths disagree or are inconclusive".to_string()),
                Some(Weyl::LimitCircle) => (
                    EsaVerdict::NotEssentiallySelfAdjoint,
                    "m = 0 mode is limit circle at r = 1".to_string(),
                ),
                Some(_) if alpha > 1.0 => (
                    EsaVerdict::EssentiallySelfAdjoint,
                    "m = 0 mode is limit point at r = 1 and the boundary margin α exceeds 1".to_string(),
                ),
                Some(_) => (
                    EsaVerdict::Open,
                    "m = 0 mode is limit point at r = 1 but the margin α ≤ 1 leaves the planar operator undecided".to_string(),
                ),
            };
            Ok(EsaReport { provenance: *provenance, verdict, basis, modes })
        }
        Provenance::MonopoleMode { m } => {
            let p = reduce_monopole(m)?;
            let mut cls = Vec::new();
            let origin = agreed(&p, Side::Left, &mut cls)?;
            let infinity = agreed(&p, Side::Right, &mut cls)?;
            let ground = m.unsigned_abs() as i64;
            let mut modes = vec![ModeReport { mode: ground, decisive: true, classifications: cls }];
            for &k in extra_modes.iter().filter(|&&k| k > ground && (k - ground) % 2 == 0) {
                let lam = spherical::spectrum(m, k as u32)?.levels.last().expect("nonempty").lambda_f64();
                let pk = inverse_square(lam)?;
                let mut c = Vec::new();
                agreed(&pk, Side::Left, &mut c)?;
                modes.push(ModeReport { mode: k, decisive: false, classifications: c });
            }
            let (verdict, basis) = match (origin, infinity) {
                (Some(Weyl::LimitPoint), Some(Weyl::LimitPoint)) => (
                    EsaVerdict::EssentiallySelfAdjoint,
                    format!("ground level {} ≥ 3/4: limit point at 0 and at ∞", monopole_ground(m)?),
                ),
                (Some(Weyl::LimitCircle), _) => (
                    EsaVerdict::NotEssentiallySelfAdjoint,
                    format!("ground level {} < 3/4: limit circle at 0", monopole_ground(m)?),
                ),
                _ => (EsaVerdict::Inconclusive, "classification paths disagree or are inconclusive".into()),
            };
            Ok(EsaReport { provenance: *provenance, verdict, basis, modes })
        }
        Provenance::InverseSquare { .. } => {
            Err(validation("overall verdicts are defined for disk and monopole reductions"))
        }
    }
}
