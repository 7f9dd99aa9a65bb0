//! Bundled examples with their expected outcomes.

use std::time::Instant;

use confinement_core::radial::Weyl;
use confinement_core::Result;

use crate::run::{execute, Payload};
use crate::spec::{ExperimentSpec, Expect};

pub const BUNDLED: &[(&str, &str)] = &[
    ("polytope-square", include_str!("../specs/polytope-square.json")),
    ("toroidal-torus", include_str!("../specs/toroidal-torus.json")),
    ("nontoroidal-ball", include_str!("../specs/nontoroidal-ball.json")),
    ("nontoroidal-ball-scaled", include_str!("../specs/nontoroidal-ball-scaled.json")),
    ("disk-margin", include_str!("../specs/disk-margin.json")),
    ("disk-sweep", include_str!("../specs/disk-sweep.json")),
    ("monopole-verdicts", include_str!("../specs/monopole-verdicts.json")),
    ("monopole-one", include_str!("../specs/monopole-one.json")),
    ("monopole-margin", include_str!("../specs/monopole-margin.json")),
    ("dipole", include_str!("../specs/dipole.json")),
    ("spherical-landau", include_str!("../specs/spherical-landau.json")),
    ("landau-square", include_str!("../specs/landau-square.json")),
];

#[derive(Clone, Debug, PartialEq)]
pub struct Line {
    pub name: String,
    pub passed: bool,
    pub seconds: f64,
    pub detail: String,
}

fn within(v: f64, [lo, hi]: [f64; 2]) -> bool {
    (lo..=hi).contains(&v)
}

fn fail(msg: String) -> std::result::Result<String, String> {
    Err(msg)
}

/// Compares a payload with its expectation.
pub fn check(expect: &Expect, payload: &Payload) -> std::result::Result<String, String> {
    match (expect, payload) {
        (Expect::Verdict { verdict, liminf, margin }, Payload::ScanCriterion(p)) => {
            let got = p.singular_point.as_ref().map_or(p.criterion.verdict, |s| s.verdict);
            if let Some(v) = verdict {
                if *v != got {
                    return fail(format!("verdict {got:?}, expected {v:?}"));
                }
            }
            let l = p.criterion.liminf_estimate;
            if let Some(r) = liminf {
                if !within(l, *r) {
                    return fail(format!("liminf {l} outside {r:?}"));
                }
            }
            if let Some(r) = margin {
                let m = p.singular_point.as_ref().map_or(l, |s| s.min_margin);
                if !within(m, *r) {
                    return fail(format!("margin {m} outside {r:?}"));
                }
            }
            Ok(format!("{got:?}, liminf {l:.4}"))
        }
        (Expect::Flip { between }, Payload::SweepAlpha(t)) => {
            for r in &t.rows {
                let want = if r.alpha <= between[0] {
                    Weyl::LimitCircle
                } else if r.alpha >= between[1] {
                    Weyl::LimitPoint
                } else {
                    continue;
                };
                if r.indicial != want || r.solved != want {
                    return fail(format!("α = {}: indicial {:?}, solved {:?}", r.alpha, r.indicial, r.solved));
                }
            }
            match &t.threshold {
                Some(e) if within(e.alpha, *between) => Ok(format!("flip in {between:?}, bisection α = {:.4}", e.alpha)),
                Some(e) => fail(format!("bisection α = {} outside {between:?}", e.alpha)),
                None => Ok(format!("flip in {between:?}")),
            }
        }
        (Expect::Esa { cases }, Payload::MonopoleVerdict(reports)) => {
            for (m, want) in cases {
                let Some(r) = reports.iter().find(|r| r.provenance == confinement_core::radial::Provenance::MonopoleMode { m: *m })
                else {
                    return fail(format!("no report for m = {m}"));
                };
                if r.verdict != *want {
                    return fail(format!("m = {m}: {:?}, expected {want:?}", r.verdict));
                }
            }
            Ok(format!("charges checked: {}", cases.len()))
        }
        (Expect::Ground { k, lambda, multiplicity }, Payload::SphericalTable(s)) => {
            let g = s.ground();
            if g.k == *k && g.lambda_f64() == *lambda && g.multiplicity == *multiplicity {
                Ok(format!("ground ({}, {}, {})", g.k, g.lambda_f64(), g.multiplicity))
            } else {
                fail(format!("ground ({}, {}, {})", g.k, g.lambda_f64(), g.multiplicity))
            }
        }
        (Expect::Flag { value }, Payload::OneFormZeros(r)) => {
            let norms: Vec<String> = r.zeros.iter().map(|z| format!("{:.4}", z.norm_domega)).collect();
            if r.flag == *value {
                Ok(format!("flag {}, |dω| at zeros [{}]", r.flag, norms.join(", ")))
            } else {
                fail(format!("flag {}, expected {value}", r.flag))
            }
        }
        (Expect::Lambda { range }, Payload::LandauCheck(r)) => {
            let last = r.rows.last().map_or(f64::NAN, |x| x.lambda);
            if within(last, *range) && r.monotone {
                Ok(format!("λ₁ = {last:.5}, decreasing with the box"))
            } else {
                fail(format!("λ₁ = {last}, monotone {}", r.monotone))
            }
        }
        _ => fail("expectation does not match the task".into()),
    }
}

/// Runs every bundled example. With `corrupt` the disk threshold window is
/// moved by -0.2, which the harness must report as a failure.
pub fn reproduce(corrupt: bool) -> Result<Vec<Line>> {
    let mut lines = Vec::new();
    for (name, text) in BUNDLED {
        let mut spec = ExperimentSpec::from_json(text)?;
        if corrupt {
            if let Some(Expect::Flip { between }) = &mut spec.expect {
                between.iter_mut().for_each(|b| *b -= 0.2);
            }
        }
        let start = Instant::now();
        let result = execute(&spec).map_err(|e| e.to_string()).and_then(|o| match &spec.expect {
            Some(e) => check(e, &o.report.payload),
            None => Ok("no expectation".into()),
        });
        let seconds = start.elapsed().as_secs_f64();
        let (passed, detail) = match result {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        lines.push(Line { name: name.to_string(), passed, seconds, detail });
    }
    Ok(lines)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundled_specs_parse() {
        for (name, text) in BUNDLED {
            let spec = ExperimentSpec::from_json(text).unwrap_or_else(|e| panic!("{name}: {e}"));
            assert!(spec.expect.is_some(), "{name}");
        }
    }

    #[test]
    fn mismatched_expectation_fails() {
        let spec = ExperimentSpec::from_json(BUNDLED.iter().find(|b| b.0 == "spherical-landau").unwrap().1).unwrap();
        let out = execute(&spec).unwrap();
        assert!(check(&spec.expect.clone().unwrap(), &out.report.payload).is_ok());
        let wrong = Expect::Ground { k: 1, lambda: 1.5, multiplicity: 2 };
        assert!(check(&wrong, &out.report.payload).is_err());
        assert!(check(&Expect::Flag { value: true }, &out.report.payload).is_err());
    }
}
