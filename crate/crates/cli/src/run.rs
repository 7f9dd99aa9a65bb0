//! Task execution and report writing.

use std::fs;
use std::io::Write;
use std::path::Path;
use std::time::Instant;

use confinement_core::criterion::{
    default_depths, direction_regularity, scan_margin, singular_point_criterion, CriterionReport, DirectionTable,
    ScanOptions, SingularPointReport, DEFAULT_ANCHORS, DEFAULT_OSCILLATION_THRESHOLD,
};
use confinement_core::fields::{boundary_one_form_analysis, BoundaryOneFormReport};
use confinement_core::lattice::{
    assemble, commutator_convergence, hur_hypothesis_probe, landau_check, CommutatorStudy, EigenPairs, HurTable,
    LandauReport, LatticeOperator,
};
use confinement_core::radial::{
    alpha_grid, bisect_threshold, classify_by_solving, classify_indicial, esa_verdict_radial, Endpoint,
    EndpointClassification, EsaReport, Provenance, RadialProblem, SweepRow, ThresholdEstimate,
};
use confinement_core::spherical::{spectrum, SphericalSpectrum};
use confinement_core::{radial, Error, Result};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spec::{ExperimentSpec, Task};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigTable {
    pub n: usize,
    pub h: f64,
    pub delta: f64,
    pub hermitian_defect: f64,
    pub eigen: EigenPairs,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadialTable {
    pub problem: RadialProblem,
    pub classifications: Vec<EndpointClassification>,
    pub verdict: Option<EsaReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub threshold: Option<ThresholdEstimate>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScanPayload {
    pub criterion: CriterionReport,
    pub singular_point: Option<SingularPointReport>,
}

/// Task payload; the schema is fixed per task.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "task", content = "data", rename_all = "kebab-case")]
pub enum Payload {
    ScanCriterion(ScanPayload),
    DirectionScan(DirectionTable),
    Eig(EigTable),
    HurProbe(HurTable),
    ClassifyRadial(RadialTable),
    SweepAlpha(SweepTable),
    MonopoleVerdict(Vec<EsaReport>),
    SphericalTable(SphericalSpectrum),
    LandauCheck(LandauReport),
    LemmaSlack(CommutatorStudy),
    OneFormZeros(BoundaryOneFormReport),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub spec: ExperimentSpec,
    pub version: String,
    pub wall_time_s: f64,
    pub payload: Payload,
    pub warnings: Vec<String>,
}

pub struct Outcome {
    pub report: RunReport,
    pub operator: Option<LatticeOperator>,
}

fn scan_options(anchors: Option<usize>, depths: &Option<Vec<f64>>, eta: Option<f64>, osc: Option<f64>) -> ScanOptions {
    let d = ScanOptions::default();
    ScanOptions {
        anchors: anchors.unwrap_or(DEFAULT_ANCHORS),
        depths: depths.clone(),
        eta: eta.unwrap_or(d.eta),
        oscillation_threshold: osc.unwrap_or(DEFAULT_OSCILLATION_THRESHOLD),
    }
}

/// Runs a validated spec.
pub fn execute(spec: &ExperimentSpec) -> Result<Outcome> {
    spec.validate()?;
    let start = Instant::now();
    let field = spec.field.as_ref();
    let domain = spec.resolved_domain();
    let need = || -> Result<_> {
        Ok((field.expect("validated"), domain.clone().ok_or_else(|| Error::Validation("no domain".into()))?))
    };
    let mut warnings = Vec::new();
    let mut operator = None;
    let payload = match &spec.task {
        Task::ScanCriterion { anchors, depths, eta, oscillation_threshold, rays } => {
            let (f, dom) = need()?;
            let opts = scan_options(*anchors, depths, *eta, *oscillation_threshold);
            let criterion = scan_margin(f, &dom, &opts)?;
            let singular_point = match rays {
                Some(r) => {
                    let d = depths.clone().unwrap_or_else(|| default_depths(&dom));
                    Some(singular_point_criterion(f, *r, &d, &opts)?)
                }
                None => None,
            };
            warnings.extend(criterion.warnings.iter().cloned());
            Payload::ScanCriterion(ScanPayload { criterion, singular_point })
        }
        Task::DirectionScan { anchors, depths, threshold } => {
            let (f, dom) = need()?;
            let d = depths.clone().unwrap_or_else(|| default_depths(&dom));
            Payload::DirectionScan(direction_regularity(
                f,
                &dom,
                anchors.unwrap_or(DEFAULT_ANCHORS),
                &d,
                threshold.unwrap_or(DEFAULT_OSCILLATION_THRESHOLD),
            )?)
        }
        Task::Eig { h, delta, k, quadrature } => {
            let (f, dom) = need()?;
            let op = assemble(f, &dom, *h, *delta, *quadrature)?;
            if *k > op.len() {
                return Err(Error::Validation(format!("k = {k} exceeds the grid size {}", op.len())));
            }
            let eigen = op.lowest_eigenpairs(*k)?;
            let table = EigTable { n: op.len(), h: *h, delta: *delta, hermitian_defect: op.matrix.hermitian_defect(), eigen };
            operator = Some(op);
            Payload::Eig(table)
        }
        Task::HurProbe { epsilon, deltas, h_ratio } => {
            let (f, dom) = need()?;
            Payload::HurProbe(hur_hypothesis_probe(f, &dom, *epsilon, deltas, *h_ratio)?)
        }
        Task::ClassifyRadial { provenance, sides } => {
            let problem = match *provenance {
                Provenance::DiskMode { alpha, m } => radial::reduce_disk_mode(alpha, m)?,
                Provenance::MonopoleMode { m } => radial::reduce_monopole(m)?,
                Provenance::InverseSquare { c } => radial::inverse_square(c)?,
            };
            let mut classifications = Vec::new();
            for &side in sides {
                classifications.push(classify_indicial(&problem, side)?);
                classifications.push(classify_by_solving(&problem, side, Complex64::i())?);
            }
            let verdict = match provenance {
                Provenance::InverseSquare { .. } => None,
                p => Some(esa_verdict_radial(p, &[])?),
            };
            Payload::ClassifyRadial(RadialTable { problem, classifications, verdict })
        }
        Task::SweepAlpha { range, step, bisect } => {
            let rows = radial::sweep_alpha(&alpha_grid(range[0], range[1], *step)?)?;
            let threshold = match bisect {
                Some(tol) => Some(bisect_threshold(range[0], range[1], *tol)?),
                None => None,
            };
            Payload::SweepAlpha(SweepTable { rows, threshold })
        }
        Task::MonopoleVerdict { m, extra_levels } => Payload::MonopoleVerdict(
            m.iter()
                .map(|&m| esa_verdict_radial(&Provenance::MonopoleMode { m }, extra_levels))
                .collect::<Result<_>>()?,
        ),
        Task::SphericalTable { m, k_max } => Payload::SphericalTable(spectrum(*m, *k_max)?),
        Task::LandauCheck { field, h, sides } => Payload::LandauCheck(landau_check(*field, *h, sides)?),
        Task::LemmaSlack { hs, delta, trials, calibration_h } => {
            let (f, dom) = need()?;
            let study = commutator_convergence(f, &dom, *delta, hs, *trials, spec.seed, calibration_h.unwrap_or(hs[0]))?;
            if !study.slack_ok {
                warnings.push("negative slack under the calibrated budget".into());
            }
            Payload::LemmaSlack(study)
        }
        Task::OneFormZeros { resolution } => {
            let f = field.expect("validated");
            Payload::OneFormZeros(boundary_one_form_analysis(f, *resolution)?)
        }
    };
    Ok(Outcome {
        report: RunReport {
            spec: spec.clone(),
            version: env!("CARGO_PKG_VERSION").into(),
            wall_time_s: start.elapsed().as_secs_f64(),
            payload,
            warnings,
        },
        operator,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn label<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v).ok().and_then(|j| j.as_str().map(String::from)).unwrap_or_default()
}

fn endpoint(e: Endpoint) -> String {
    match e {
        Endpoint::Finite(x) => x.to_string(),
        Endpoint::Infinity => "inf".into(),
    }
}

/// The tabular part of a payload. Floats use the shortest round-trip
/// representation, so identical results give identical bytes.
pub fn csv_table(payload: &Payload) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut put = |row: Vec<String>| w.write_record(&row).map_err(|e| Error::Validation(e.to_string()));
    let s = |x: f64| x.to_string();
    match payload {
        Payload::ScanCriterion(p) => {
            put(vec!["anchor".into(), "depth".into(), "margin".into(), "oscillation".into()])?;
            for r in p.criterion.csv_rows() {
                put(vec![r.anchor.to_string(), s(r.depth), s(r.margin), opt(r.oscillation)])?;
            }
        }
        Payload::DirectionScan(t) => {
            put(vec!["anchor".into(), "oscillation".into(), "regular".into(), "skipped".into()])?;
            for a in &t.anchors {
                put(vec![a.anchor.to_string(), opt(a.oscillation), a.regular.to_string(), a.skipped.clone().unwrap_or_default()])?;
            }
        }
        Payload::Eig(t) => {
            put(vec!["index".into(), "eigenvalue".into(), "residual".into()])?;
            for (i, (v, r)) in t.eigen.values.iter().zip(&t.eigen.residuals).enumerate() {
                put(vec![(i + 1).to_string(), s(*v), s(*r)])?;
            }
        }
        Payload::HurProbe(t) => {
            put(vec!["delta".into(), "h".into(), "n".into(), "landau_min".into(), "hardy_min".into()])?;
            for r in &t.rows {
                put(vec![s(r.delta), s(r.h), r.n.to_string(), s(r.landau_min), s(r.hardy_min)])?;
            }
        }
        Payload::ClassifyRadial(t) => {
            put(vec![
                "side".into(),
                "endpoint".into(),
                "method".into(),
                "verdict".into(),
                "c".into(),
                "s_minus".into(),
                "s_plus".into(),
                "fit_1".into(),
                "fit_2".into(),
            ])?;
            for c in &t.classifications {
                let [sm, sp] = c.exponents.map(|e| e.map(Some)).unwrap_or([None; 2]);
                let [f1, f2] = c.fitted.map(|e| e.map(Some)).unwrap_or([None; 2]);
                put(vec![
                    label(&c.side),
                    endpoint(c.endpoint),
                    label(&c.method),
                    label(&c.verdict),
                    opt(c.c),
                    opt(sm),
                    opt(sp),
                    opt(f1),
                    opt(f2),
                ])?;
            }
        }
        Payload::SweepAlpha(t) => {
            put(vec!["alpha".into(), "c".into(), "s_minus".into(), "s_plus".into(), "indicial".into(), "solved".into()])?;
            for r in &t.rows {
                put(vec![s(r.alpha), s(r.c), s(r.s_minus), s(r.s_plus), label(&r.indicial), label(&r.solved)])?;
            }
        }
        Payload::MonopoleVerdict(reports) => {
            put(vec!["m".into(), "ground".into(), "verdict".into()])?;
            for r in reports {
                let Provenance::MonopoleMode { m } = r.provenance else { continue };
                put(vec![m.to_string(), s(radial::monopole_ground(m)?), label(&r.verdict)])?;
            }
        }
        Payload::SphericalTable(t) => {
            put(vec!["k".into(), "lambda".into(), "multiplicity".into()])?;
            for l in &t.levels {
                put(vec![l.k.to_string(), s(l.lambda_f64()), l.multiplicity.to_string()])?;
            }
        }
        Payload::LandauCheck(t) => {
            put(vec!["side".into(), "n".into(), "lambda".into()])?;
            for r in &t.rows {
                put(vec![s(r.side), r.n.to_string(), s(r.lambda)])?;
            }
        }
        Payload::LemmaSlack(t) => {
            put(vec!["h".into(), "n".into(), "deficit".into(), "worst_slack".into()])?;
            for r in &t.rows {
                put(vec![s(r.h), r.n.to_string(), s(r.deficit), s(r.worst_slack)])?;
            }
        }
        Payload::OneFormZeros(t) => {
            put(vec!["x".into(), "y".into(), "z".into(), "norm_domega".into(), "satisfies_assumption".into()])?;
            for z in &t.zeros {
                let mut row: Vec<String> = z.location.iter().map(|v| s(*v)).collect();
                row.push(s(z.norm_domega));
                row.push(z.satisfies_assumption.to_string());
                put(row)?;
            }
        }
    }
    w.into_inner().map_err(|e| Error::Validation(e.to_string()))
}

/// Writes the report and CSV (and the matrix when asked) into `dir`.
pub fn write_outputs(outcome: &Outcome, dir: &Path, dump_matrix: bool) -> std::io::Result<Vec<std::path::PathBuf>> {
    let csv = csv_table(&outcome.report.payload).map_err(std::io::Error::other)?;
    fs::create_dir_all(dir)?;
    let out = &outcome.report.spec.output;
    let report_path = dir.join(&out.report);
    let csv_path = dir.join(&out.csv);
    let mut json = serde_json::to_string_pretty(&outcome.report).map_err(std::io::Error::other)?;
    json.push('\n');
    fs::write(&report_path, json)?;
    fs::write(&csv_path, csv)?;
    let mut written = vec![report_path, csv_path];
    if dump_matrix {
        if let Some(op) = &outcome.operator {
            let path = dir.join("matrix.mtx");
            let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
            op.matrix.write_matrix_market(&mut w)?;
            w.flush()?;
            written.push(path);
        }
    }
    Ok(written)
}
