//! Discrete tests of the magnetic lower bounds: the commutator estimate, the
//! Hardy/Landau-type form bounds near the boundary and the constant-field
//! ground level.

use num_complex::Complex64;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{assemble, eigen::lowest_eigenpairs, LatticeOperator, Quadrature};
use crate::domains::Domain;
use crate::error::{validation, Result};
use crate::exterior::{spectral_norm, TwoForm};
use crate::fields::FieldSpec;

/// Field used to calibrate the discretization budget: `b12 = 4` on a square
/// of side 6 (magnetic length 1/2, walls far from the bulk states).
pub const CALIBRATION_FIELD: f64 = 4.0;
pub const CALIBRATION_HALF_SIDE: f64 = 3.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub h: f64,
    pub n: usize,
    pub probes: usize,
    /// Budget constant `K` in `h_A(u) + K h ‖u‖_w² ≥ Σ_j |⟨b_{2j-1,2j} u, u⟩|`.
    pub budget: f64,
    /// Minimum over probes of the slack divided by `‖u‖²`.
    pub worst_slack: f64,
    /// Maximum over probes of `(Σ_j |⟨b u, u⟩| - h_A(u)) / ‖u‖_w²`, floored at 0.
    pub deficit: f64,
}

fn field_at_points(op: &LatticeOperator, f: &FieldSpec) -> Result<Vec<TwoForm>> {
    (0..op.len()).map(|i| f.evaluate_field(&op.grid.coords(i))).collect()
}

fn block_pairs(d: usize) -> Vec<(usize, usize)> {
    (0..d / 2).map(|j| (2 * j, 2 * j + 1)).collect()
}

fn probe_vectors(n: usize, trials: usize, seed: u64) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..trials)
        .map(|t| {
            (0..n)
                .map(|_| {
                    let re = rng.random::<f64>() - 0.5;
                    let im = if t % 2 == 0 { 0.0 } else { rng.random::<f64>() - 0.5 };
                    Complex64::new(re, im)
                })
                .collect()
        })
        .collect()
}

/// Checks `h_A(u) + K h ‖u‖_w² ≥ Σ_j |⟨b_{2j-1,2j} u, u⟩|` with weight
/// `w = |B|_sp²` on `trials` seeded random vectors (alternately real and
/// complex) and on the minimizers of `h_A(u) ∓ ⟨b u, u⟩`.
pub fn commutator_bound_test(
    op: &LatticeOperator,
    f: &FieldSpec,
    trials: usize,
    budget: f64,
    seed: u64,
) -> Result<CommutatorReport> {
    if trials == 0 {
        return Err(validation("at least one trial is required"));
    }
    let b = field_at_points(op, f)?;
    let weight: Vec<f64> = b.iter().map(|bx| Ok(spectral_norm(bx)?.norm_sp.powi(2))).collect::<Result<_>>()?;
    let pairs = block_pairs(op.grid.dim());
    let mut probes = probe_vectors(op.len(), trials, seed);
    // adversarial probes: lowest eigenvectors of H - Σ s_j diag(b_j)
    for signs in 0..(1usize << pairs.len()) {
        let diag: Vec<f64> = b
            .iter()
            .map(|bx| {
                pairs
                    .iter()
                    .enumerate()
                    .map(|(j, &(p, q))| if signs >> j & 1 == 1 { -bx.get(p, q) } else { bx.get(p, q) })
                    .sum()
            })
            .collect();
        let e = lowest_eigenpairs(&op.shifted(&diag), 1)?;
        probes.extend(e.vectors);
    }
    let vol = op.grid.h.powi(op.grid.dim() as i32);
    let mut worst_slack = f64::INFINITY;
    let mut deficit: f64 = 0.0;
    for u in &probes {
        let ha = op.quadratic_form(u)?;
        let rhs: f64 = pairs
            .iter()
            .map(|&(p, q)| (b.iter().zip(u).map(|(bx, z)| bx.get(p, q) * z.norm_sqr()).sum::<f64>() * vol).abs())
            .sum();
        let nw: f64 = weight.iter().zip(u).map(|(w, z)| w * z.norm_sqr()).sum::<f64>() * vol;
        let n2 = op.norm_sqr(u);
        worst_slack = worst_slack.min((ha + budget * op.grid.h * nw - rhs) / n2);
        if nw > 0.0 {
            deficit = deficit.max((rhs - ha) / nw);
        }
    }
    Ok(CommutatorReport { h: op.grid.h, n: op.len(), probes: probes.len(), budget, worst_slack, deficit })
}

fn calibration_operator(h: f64) -> Result<(FieldSpec, LatticeOperator)> {
    let f = FieldSpec::Constant { b0: TwoForm::from_upper(2, |_, _| CALIBRATION_FIELD) };
    let op = assemble(&f, &Domain::square(CALIBRATION_HALF_SIDE)?, h, 0.0, Quadrature::Midpoint)?;
    Ok((f, op))
}

/// `K = 2 · deficit / h` for the calibration field at spacing `h`.
pub fn calibrate_budget(h: f64) -> Result<f64> {
    let (f, op) = calibration_operator(h)?;
    let r = commutator_bound_test(&op, &f, 1, 0.0, 0)?;
    Ok(2.0 * r.deficit / h)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorRow {
    pub h: f64,
    pub n: usize,
    pub deficit: f64,
    pub worst_slack: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CommutatorStudy {
    pub field_kind: String,
    pub delta: f64,
    pub budget: f64,
    pub calibration_h: f64,
    pub rows: Vec<CommutatorRow>,
    /// `log2(deficit(h) / deficit(h/2))`; `None` when the finer deficit is 0.
    pub orders: Vec<Option<f64>>,
    pub slack_ok: bool,
    pub order_ok: bool,
}

/// Runs [`commutator_bound_test`] over the spacings `hs` (each half the
/// previous), with `K` calibrated at the first spacing of `calibration_hs`.
pub fn commutator_convergence(
    f: &FieldSpec,
    dom: &Domain,
    delta: f64,
    hs: &[f64],
    trials: usize,
    seed: u64,
    calibration_h: f64,
) -> Result<CommutatorStudy> {
    if hs.is_empty() || hs.windows(2).any(|w| w[1] >= w[0]) {
        return Err(validation("spacings must be decreasing"));
    }
    let budget = calibrate_budget(calibration_h)?;
    let mut rows = Vec::new();
    for &h in hs {
        let op = assemble(f, dom, h, delta, Quadrature::Midpoint)?;
        let r = commutator_bound_test(&op, f, trials, budget, seed)?;
        rows.push(CommutatorRow { h, n: r.n, deficit: r.deficit, worst_slack: r.worst_slack });
    }
    let orders: Vec<Option<f64>> = rows
        .windows(2)
        .map(|w| (w[1].deficit > 0.0).then(|| (w[0].deficit / w[1].deficit).ln() / (w[0].h / w[1].h).ln()))
        .collect();
    let slack_ok = rows.iter().all(|r| r.worst_slack >= 0.0);
    let order_ok = rows
        .windows(2)
        .zip(&orders)
        .all(|(w, o)| w[0].deficit == 0.0 || o.is_none_or(|o| o >= 1.0));
    Ok(CommutatorStudy {
        field_kind: f.kind().into(),
        delta,
        budget,
        calibration_h,
        rows,
        orders,
        slack_ok,
        order_ok,
    })
}

/// Parameters of a form lower bound `h_A(u) ≥ (1-ε)∫|B||u|² - C ‖u‖²` on
/// functions supported at depth `≥ δ` inside the ball of radius `R`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FormTestConfig {
    pub epsilon: f64,
    pub radius: f64,
    /// Empirical `C_{ε,R}`: minus the lowest eigenvalue, floored at 0.
    pub constant: Option<f64>,
    pub delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HurRow {
    pub delta: f64,
    pub h: f64,
    pub n: usize,
    /// Lowest eigenvalue of `H_A - (1-ε) diag(|B|_sp)`.
    pub landau_min: f64,
    /// Lowest eigenvalue of `H_A - diag(D⁻²)`.
    pub hardy_min: f64,
    pub config: FormTestConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HurTable {
    pub field_kind: String,
    pub epsilon: f64,
    pub h_ratio: f64,
    pub rows: Vec<HurRow>,
    /// Relative tolerance on the last two depths.
    pub tolerance: f64,
    pub landau_bounded: bool,
    pub hardy_bounded: bool,
}

fn bounded(values: &[f64], tol: f64) -> bool {
    match values {
        [.., a, b] => (b - a).abs() <= tol * a.abs().max(1.0) || b >= a,
        _ => true,
    }
}

/// Lowest eigenvalues of `H_A - (1-ε)|B|_sp` and `H_A - D⁻²` on grids of
/// spacing `δ / h_ratio` truncated at each depth `δ`.
pub fn hur_hypothesis_probe(
    f: &FieldSpec,
    dom: &Domain,
    epsilon: f64,
    deltas: &[f64],
    h_ratio: f64,
) -> Result<HurTable> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(validation("ε must lie in (0, 1)"));
    }
    if !(h_ratio > 2.0) {
        return Err(validation("h_ratio must exceed 2 so that h < δ/2"));
    }
    if deltas.is_empty() || deltas.windows(2).any(|w| w[1] >= w[0]) || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(validation("δ sequence must be positive and decreasing"));
    }
    let radius = dom
        .bounding_box()
        .map(|(lo, hi)| lo.iter().chain(&hi).fold(0.0, |m: f64, v| m.max(v.abs())) * (dom.dim() as f64).sqrt())
        .unwrap_or(f64::INFINITY);
    let mut rows = Vec::new();
    for &delta in deltas {
        let h = delta / h_ratio;
        let op = assemble(f, dom, h, delta, Quadrature::Gauss3)?;
        let b = field_at_points(&op, f)?;
        let landau: Vec<f64> =
            b.iter().map(|bx| Ok((1.0 - epsilon) * spectral_norm(bx)?.norm_sp)).collect::<Result<_>>()?;
        let hardy: Vec<f64> = (0..op.len())
            .map(|i| Ok(dom.distance(&op.grid.coords(i))?.powi(-2)))
            .collect::<Result<_>>()?;
        let landau_min = lowest_eigenpairs(&op.shifted(&landau), 1)?.values[0];
        let hardy_min = lowest_eigenpairs(&op.shifted(&hardy), 1)?.values[0];
        rows.push(HurRow {
            delta,
            h,
            n: op.len(),
            landau_min,
            hardy_min,
            config: FormTestConfig { epsilon, radius, constant: Some((-landau_min).max(0.0)), delta },
        });
    }
    let tolerance = 0.1;
    let landau: Vec<f64> = rows.iter().map(|r| r.landau_min).collect();
    let hardy: Vec<f64> = rows.iter().map(|r| r.hardy_min).collect();
    Ok(HurTable {
        field_kind: f.kind().into(),
        epsilon,
        h_ratio,
        landau_bounded: bounded(&landau, tolerance),
        hardy_bounded: bounded(&hardy, tolerance),
        rows,
        tolerance,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandauRow {
    pub side: f64,
    pub n: usize,
    pub lambda: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LandauReport {
    pub field: f64,
    pub h: f64,
    pub rows: Vec<LandauRow>,
    /// Lowest eigenvalues are nonincreasing as the box grows.
    pub monotone: bool,
}

/// Lowest eigenvalue for the constant planar field `b12 = field` on squares
/// of the given sides (Dirichlet walls on the lattice).
pub fn landau_check(field: f64, h: f64, sides: &[f64]) -> Result<LandauReport> {
    if sides.is_empty() || sides.windows(2).any(|w| w[1] <= w[0]) {
        return Err(validation("box sides must be increasing"));
    }
    let f = FieldSpec::Constant { b0: TwoForm::from_upper(2, |_, _| field) };
    let mut rows = Vec::new();
    for &side in sides {
        let op = assemble(&f, &Domain::square(0.5 * side)?, h, 0.0, Quadrature::Midpoint)?;
        let lambda = op.lowest_eigenvalues(1)?[0];
        rows.push(LandauRow { side, n: op.len(), lambda });
    }
    let monotone = rows.windows(2).all(|w| w[1].lambda <= w[0].lambda + 1e-9);
    Ok(LandauReport { field, h, rows, monotone })
}
