//! JSON experiment files.

use std::path::Path;

use confinement_core::criterion::Verdict;
use confinement_core::lattice::Quadrature;
use confinement_core::radial::{EsaVerdict, Provenance, Side};
use confinement_core::{Domain, Error, FieldSpec, Result};
use serde::{Deserialize, Serialize};

pub const SCHEMA: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub schema: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub field: Option<FieldSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<Domain>,
    pub task: Task,
    #[serde(default)]
    pub output: OutputSpec,
    /// Checked by `reproduce`; ignored by `run`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expect: Option<Expect>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default = "default_report")]
    pub report: String,
    #[serde(default = "default_csv")]
    pub csv: String,
}

fn default_report() -> String {
    "report.json".into()
}

fn default_csv() -> String {
    "table.csv".into()
}

impl Default for OutputSpec {
    fn default() -> Self {
        OutputSpec { report: default_report(), csv: default_csv() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Task {
    ScanCriterion {
        #[serde(default)]
        anchors: Option<usize>,
        #[serde(default)]
        depths: Option<Vec<f64>>,
        #[serde(default)]
        eta: Option<f64>,
        #[serde(default)]
        oscillation_threshold: Option<f64>,
        /// Rays for the singular-point rule (punctured space only).
        #[serde(default)]
        rays: Option<usize>,
    },
    DirectionScan {
        #[serde(default)]
        anchors: Option<usize>,
        #[serde(default)]
        depths: Option<Vec<f64>>,
        #[serde(default)]
        threshold: Option<f64>,
    },
    Eig {
        h: f64,
        #[serde(default)]
        delta: f64,
        k: usize,
        #[serde(default)]
        quadrature: Quadrature,
    },
    HurProbe {
        epsilon: f64,
        deltas: Vec<f64>,
        #[serde(default = "default_h_ratio")]
        h_ratio: f64,
    },
    ClassifyRadial {
        provenance: Provenance,
        #[serde(default = "both_sides")]
        sides: Vec<Side>,
    },
    SweepAlpha {
        range: [f64; 2],
        step: f64,
        /// Bisection tolerance; no bisection when absent.
        #[serde(default)]
        bisect: Option<f64>,
    },
    MonopoleVerdict {
        m: Vec<i64>,
        #[serde(default)]
        extra_levels: Vec<i64>,
    },
    SphericalTable {
        m: i64,
        k_max: u32,
    },
    LandauCheck {
        #[serde(default = "unit")]
        field: f64,
        h: f64,
        sides: Vec<f64>,
    },
    LemmaSlack {
        hs: Vec<f64>,
        #[serde(default)]
        delta: f64,
        trials: usize,
        #[serde(default)]
        calibration_h: Option<f64>,
    },
    OneFormZeros {
        #[serde(default = "default_resolution")]
        resolution: usize,
    },
}

fn default_h_ratio() -> f64 {
    3.0
}

fn both_sides() -> Vec<Side> {
    vec![Side::Left, Side::Right]
}

fn unit() -> f64 {
    1.0
}

fn default_resolution() -> usize {
    2000
}

/// Expected outcome of a bundled example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Expect {
    Verdict {
        #[serde(default)]
        verdict: Option<Verdict>,
        #[serde(default)]
        liminf: Option<[f64; 2]>,
        #[serde(default)]
        margin: Option<[f64; 2]>,
    },
    /// Indicial and solved verdicts flip from limit circle to limit point
    /// between these two α.
    Flip { between: [f64; 2] },
    Esa { cases: Vec<(i64, EsaVerdict)> },
    Ground { k: u32, lambda: f64, multiplicity: u64 },
    Flag { value: bool },
    /// Lowest eigenvalue on the largest box.
    Lambda { range: [f64; 2] },
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::ScanCriterion { .. } => "scan-criterion",
            Task::DirectionScan { .. } => "direction-scan",
            Task::Eig { .. } => "eig",
            Task::HurProbe { .. } => "hur-probe",
            Task::ClassifyRadial { .. } => "classify-radial",
            Task::SweepAlpha { .. } => "sweep-alpha",
            Task::MonopoleVerdict { .. } => "monopole-verdict",
            Task::SphericalTable { .. } => "spherical-table",
            Task::LandauCheck { .. } => "landau-check",
            Task::LemmaSlack { .. } => "lemma-slack",
            Task::OneFormZeros { .. } => "one-form-zeros",
        }
    }

    fn needs_field(&self) -> bool {
        matches!(
            self,
            Task::ScanCriterion { .. }
                | Task::DirectionScan { .. }
                | Task::Eig { .. }
                | Task::HurProbe { .. }
                | Task::LemmaSlack { .. }
                | Task::OneFormZeros { .. }
        )
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {v}")))
    }
}

fn decreasing(name: &str, v: &[f64]) -> Result<()> {
    if v.is_empty() {
        return Err(invalid(format!("{name} must not be empty")));
    }
    for x in v {
        positive(name, *x)?;
    }
    if v.windows(2).any(|w| w[1] >= w[0]) {
        return Err(invalid(format!("{name} must be strictly decreasing")));
    }
    Ok(())
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        let spec: ExperimentSpec = serde_json::from_str(text).map_err(|e| invalid(format!("spec: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    /// The field's own domain unless the spec names one.
    pub fn resolved_domain(&self) -> Option<Domain> {
        self.domain.clone().or_else(|| self.field.as_ref().and_then(FieldSpec::natural_domain))
    }

    /// Checks everything the task will consume, before any computation.
    pub fn validate(&self) -> Result<()> {
        if self.schema != SCHEMA {
            return Err(invalid(format!("unsupported schema {} (expected {SCHEMA})", self.schema)));
        }
        for (what, name) in [("report", &self.output.report), ("csv", &self.output.csv)] {
            let p = Path::new(name);
            if name.is_empty() || p.components().count() != 1 || p.is_absolute() {
                return Err(invalid(format!("{what} output must be a plain file name, got {name:?}")));
            }
        }
        if self.task.needs_field() {
            let f = self.field.as_ref().ok_or_else(|| invalid(format!("task {} needs a field", self.task.name())))?;
            f.validate()?;
            if !matches!(self.task, Task::OneFormZeros { .. }) {
                let dom = self.resolved_domain().ok_or_else(|| invalid("the field has no natural domain; give one"))?;
                dom.validate()?;
                if dom.dim() != f.dim() {
                    return Err(Error::Dimension { expected: dom.dim(), got: f.dim() });
                }
            }
        } else if self.field.is_some() || self.domain.is_some() {
            return Err(invalid(format!("task {} takes no field or domain", self.task.name())));
        }
        match &self.task {
            Task::ScanCriterion { anchors, depths, eta, oscillation_threshold, rays } => {
                if anchors == &Some(0) || rays == &Some(0) {
                    return Err(invalid("anchors and rays must be positive"));
                }
                if let Some(d) = depths {
                    decreasing("depths", d)?;
                }
                if let Some(e) = eta {
                    positive("eta", *e)?;
                }
                if let Some(t) = oscillation_threshold {
                    positive("oscillation_threshold", *t)?;
                }
                if rays.is_some() && !matches!(self.resolved_domain(), Some(Domain::PuncturedSpace { .. })) {
                    return Err(invalid("rays apply only to the punctured space"));
                }
            }
            Task::DirectionScan { anchors, depths, threshold } => {
                if anchors == &Some(0) {
                    return Err(invalid("anchors must be positive"));
                }
                if let Some(d) = depths {
                    decreasing("depths", d)?;
                }
                if let Some(t) = threshold {
                    positive("threshold", *t)?;
                }
            }
            Task::Eig { h, delta, k, .. } => {
                positive("h", *h)?;
                if !(*delta >= 0.0 && delta.is_finite()) {
                    return Err(invalid("delta must be nonnegative"));
                }
                if *delta > 0.0 && *h >= delta / 2.0 {
                    return Err(invalid(format!("h = {h} must be below delta/2")));
                }
                if *k == 0 {
                    return Err(invalid("k must be positive"));
                }
            }
            Task::HurProbe { epsilon, deltas, h_ratio } => {
                if !(*epsilon > 0.0 && *epsilon < 1.0) {
                    return Err(invalid("epsilon must lie in (0, 1)"));
                }
                decreasing("deltas", deltas)?;
                if !(*h_ratio > 2.0 && h_ratio.is_finite()) {
                    return Err(invalid("h_ratio must exceed 2"));
                }
            }
            Task::ClassifyRadial { provenance, sides } => {
                match *provenance {
                    Provenance::DiskMode { alpha, .. } => positive("alpha", alpha)?,
                    Provenance::MonopoleMode { m } if m == 0 => return Err(invalid("m must be nonzero")),
                    Provenance::InverseSquare { c } if !c.is_finite() => return Err(invalid("c must be finite")),
                    _ => {}
                }
                if sides.is_empty() {
                    return Err(invalid("sides must not be empty"));
                }
            }
            Task::SweepAlpha { range, step, bisect } => {
                let [lo, hi] = *range;
                positive("alpha", lo)?;
                positive("alpha", hi)?;
                positive("step", *step)?;
                if hi < lo {
                    return Err(invalid("alpha range must be increasing"));
                }
                if (hi - lo) / step > 10_000.0 {
                    return Err(invalid("alpha grid has too many points"));
                }
                if let Some(t) = bisect {
                    positive("bisect", *t)?;
                }
            }
            Task::MonopoleVerdict { m, extra_levels } => {
                if m.is_empty() || m.contains(&0) {
                    return Err(invalid("m must list nonzero charges"));
                }
                if extra_levels.iter().any(|k| *k < 0 || *k > 1000) {
                    return Err(invalid("extra levels must lie in 0..=1000"));
                }
            }
            Task::SphericalTable { m, k_max } => {
                let am = m.unsigned_abs();
                if (*k_max as u64) < am || (*k_max as u64 - am) % 2 != 0 {
                    return Err(invalid(format!("k_max = {k_max} must be ≥ |m| with the parity of m = {m}")));
                }
                if *k_max > confinement_core::spherical::K_MAX_LIMIT {
                    return Err(invalid("k_max is too large"));
                }
            }
            Task::LandauCheck { field, h, sides } => {
                positive("field", *field)?;
                positive("h", *h)?;
                if sides.is_empty() || sides.windows(2).any(|w| w[1] <= w[0]) {
                    return Err(invalid("sides must be increasing"));
                }
                for s in sides {
                    positive("side", *s)?;
                }
            }
            Task::LemmaSlack { hs, delta, trials, calibration_h } => {
                decreasing("hs", hs)?;
                if !(*delta >= 0.0 && delta.is_finite()) {
                    return Err(invalid("delta must be nonnegative"));
                }
                if *delta > 0.0 && hs[0] >= delta / 2.0 {
                    return Err(invalid("every h must be below delta/2"));
                }
                if *trials == 0 {
                    return Err(invalid("trials must be positive"));
                }
                if let Some(c) = calibration_h {
                    positive("calibration_h", *c)?;
                }
            }
            Task::OneFormZeros { resolution } => {
                if *resolution == 0 {
                    return Err(invalid("resolution must be positive"));
                }
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_a_minimal_spec() {
        let s = ExperimentSpec::from_json(r#"{"schema":1,"task":{"kind":"spherical-table","m":1,"k_max":5}}"#).unwrap();
        assert_eq!(s.task, Task::SphericalTable { m: 1, k_max: 5 });
        assert_eq!(s.output.csv, "table.csv");
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for text in [
            r#"{"schema":1,"task":{"kind":"spherical-table","m":1,"k_max":5},"extra":0}"#,
            r#"{"schema":1,"task":{"kind":"spherical-table","m":1,"k_max":5,"n":2}}"#,
            r#"{"schema":2,"task":{"kind":"spherical-table","m":1,"k_max":5}}"#,
        ] {
            assert!(matches!(ExperimentSpec::from_json(text), Err(Error::Validation(_))), "{text}");
        }
    }

    #[test]
    fn parameters_are_validated() {
        for text in [
            r#"{"schema":1,"task":{"kind":"spherical-table","m":1,"k_max":4}}"#,
            r#"{"schema":1,"task":{"kind":"sweep-alpha","range":[-1,1.2],"step":0.1}}"#,
            r#"{"schema":1,"field":{"kind":"disk_counterexample","alpha":-1},"task":{"kind":"scan-criterion"}}"#,
            r#"{"schema":1,"field":{"kind":"disk_counterexample","alpha":0.5},"task":{"kind":"eig","h":0.1,"delta":0.1,"k":3}}"#,
            r#"{"schema":1,"task":{"kind":"eig","h":0.1,"k":3}}"#,
            r#"{"schema":1,"task":{"kind":"spherical-table","m":1,"k_max":5},"output":{"csv":"../x.csv"}}"#,
        ] {
            assert!(ExperimentSpec::from_json(text).is_err(), "{text}");
        }
    }

    #[test]
    fn field_domain_defaults_to_the_natural_one() {
        let s = ExperimentSpec::from_json(
            r#"{"schema":1,"field":{"kind":"monopole","m":2},"task":{"kind":"scan-criterion","rays":8}}"#,
        )
        .unwrap();
        assert_eq!(s.resolved_domain(), Some(Domain::PuncturedSpace { dim: 3 }));
    }
}
