//! End-to-end reproduction of the bundled example: reconstruction, no-
//! signaling, witness value, almost-quantum bound, membership, de-noising,
//! locality and the qutrit round trip.

use std::f64::consts::PI;

use postq_core::assemblage::ROUNDING_TOL;
use postq_core::locality::{locality_for_all_projective_eps, LOCALITY_EPS};
use postq_core::{
    aq_bound, denoise, evaluate_functional, filter_back, fixtures, lift_qutrit,
    membership_sdp, reconstruct_from_minimal, validate_tripartite_ns, Assemblage, MembershipVerdict, MinimalAssemblage,
    SteeringFunctional,
};
use serde::Serialize;
use serde_json::Value;

use crate::error::CliError;
use postq_core::io::functional_from_value;

pub const BETA_TOL: f64 = 5e-3;
pub const BETA_AQ_TOL: f64 = 1e-3;
pub const ROUND_TRIP_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Stage {
    pub stage: String,
    pub pass: bool,
    pub detail: String,
    pub value: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub stages: Vec<Stage>,
    pub passed: bool,
}

/// Inputs of the pipeline; the bundled fixtures by default.
pub struct Inputs {
    pub minimal: MinimalAssemblage,
    pub witness: SteeringFunctional,
    pub beta: f64,
    pub beta_aq: f64,
    pub mu: f64,
    /// No-signaling tolerance.
    pub tol: f64,
}

impl Default for Inputs {
    fn default() -> Self {
        Inputs {
            minimal: fixtures::example_minimal(),
            witness: fixtures::witness_functional(),
            beta: fixtures::EXAMPLE_BETA,
            beta_aq: fixtures::EXAMPLE_BETA_AQ,
            mu: (PI / 8.0).cos(),
            tol: ROUNDING_TOL,
        }
    }
}

impl Inputs {
    /// Replaces the assemblage by a fixture-shaped file (`minimal` key or
    /// bare minimal data).
    pub fn with_assemblage(mut self, v: Value) -> Result<Self, CliError> {
        let v = v.get("minimal").cloned().unwrap_or(v);
        if let Some(mu) = v.get("noise").and_then(Value::as_f64) {
            self.mu = mu;
        }
        self.minimal = serde_json::from_value(v).map_err(|e| CliError::Input(format!("not a minimal assemblage: {e}")))?;
        Ok(self)
    }

    /// Replaces the witness; `beta` and `beta_almost_quantum` fields, when
    /// present, replace the reference values.
    pub fn with_witness(mut self, v: Value) -> Result<Self, CliError> {
        if let Some(b) = v.get("beta").and_then(Value::as_f64) {
            self.beta = b;
        }
        if let Some(b) = v.get("beta_almost_quantum").and_then(Value::as_f64) {
            self.beta_aq = b;
        }
        self.witness = functional_from_value(v)?;
        Ok(self)
    }
}

struct Runner {
    stages: Vec<Stage>,
}

impl Runner {
    fn record(&mut self, stage: &str, outcome: Result<(bool, String, Option<f64>), String>) -> bool {
        let (pass, detail, value) = outcome.unwrap_or_else(|e| (false, format!("error: {e}"), None));
        self.stages.push(Stage { stage: stage.into(), pass, detail, value });
        pass
    }

    fn skip(&mut self, stage: &str, why: &str) {
        self.stages.push(Stage { stage: stage.into(), pass: false, detail: format!("not run: {why}"), value: None });
    }
}

fn err(e: postq_core::Error) -> String {
    e.to_string()
}

/// Runs every stage; a failing stage never stops the ones that do not need
/// its output.
pub fn run(inputs: &Inputs) -> Report {
    let mut r = Runner { stages: Vec::new() };

    let asm: Option<Assemblage> = match reconstruct_from_minimal(&inputs.minimal, ROUNDING_TOL) {
        Ok(a) => {
            r.record("reconstruct", Ok((true, format!("{} blocks from minimal data", a.blocks().len()), None)));
            Some(a)
        }
        Err(e) => {
            r.record("reconstruct", Err(err(e)));
            None
        }
    };

    match &asm {
        Some(a) => {
            let rep = validate_tripartite_ns(a, inputs.tol);
            let worst = rep.checks.iter().map(|c| c.max_violation).fold(0.0, f64::max);
            let failed: Vec<String> = rep.checks.iter().filter(|c| !c.passed).map(|c| format!("{:?}", c.family)).collect();
            let detail = if failed.is_empty() {
                format!("max violation {worst:.3e} ≤ {:.0e}", inputs.tol)
            } else {
                format!("max violation {worst:.3e} > {:.0e} in {}", inputs.tol, failed.join(", "))
            };
            r.record("validate no-signaling", Ok((rep.passed, detail, Some(worst))));
        }
        None => r.skip("validate no-signaling", "no assemblage"),
    }

    match &asm {
        Some(a) => r.record(
            "evaluate witness",
            evaluate_functional(&inputs.witness, a).map_err(err).map(|beta| {
                let d = (beta - inputs.beta).abs();
                (d <= BETA_TOL, format!("β = {beta:.6}, reference {} (|Δ| = {d:.2e} ≤ {BETA_TOL:.0e})", inputs.beta), Some(beta))
            }),
        ),
        None => {
            r.skip("evaluate witness", "no assemblage");
            false
        }
    };

    r.record(
        "almost-quantum bound",
        aq_bound(&inputs.witness).map_err(err).map(|b| {
            let d = (b.value - inputs.beta_aq).abs();
            (
                d <= BETA_AQ_TOL,
                format!("β_Q̃ = {:.6}, reference {} (|Δ| = {d:.2e} ≤ {BETA_AQ_TOL:.0e})", b.value, inputs.beta_aq),
                Some(b.value),
            )
        }),
    );

    match &asm {
        Some(a) => r.record(
            "membership",
            membership_sdp(a).map_err(err).map(|m| {
                let sep = m.certificate.as_ref().map(|c| c.separation);
                let verdict = match m.verdict {
                    MembershipVerdict::In => "IN",
                    MembershipVerdict::NotIn => "NOT_IN",
                };
                let detail = match sep {
                    Some(s) => format!("{verdict}, distance {:.5}, separation {s:.5}", m.distance),
                    None => format!("{verdict}, distance {:.5}", m.distance),
                };
                (m.verdict == MembershipVerdict::NotIn, detail, Some(m.distance))
            }),
        ),
        None => {
            r.skip("membership", "no assemblage");
            false
        }
    };

    let clean = match &asm {
        Some(a) => match denoise(a, inputs.mu) {
            Ok(d) => {
                let min_eig = d.blocks().iter().map(|m| m.min_eigenvalue()).fold(f64::INFINITY, f64::min);
                r.record("denoise", Ok((true, format!("μ = {:.6}, min block eigenvalue {min_eig:.3e}", inputs.mu), Some(min_eig))));
                Some(d)
            }
            Err(e) => {
                r.record("denoise", Err(err(e)));
                None
            }
        },
        None => {
            r.skip("denoise", "no assemblage");
            None
        }
    };

    match &clean {
        Some(d) => r.record(
            "locality",
            locality_for_all_projective_eps(d, inputs.mu, LOCALITY_EPS).map_err(err).map(|v| {
                let dist = v.certificate.as_ref().map(|c| c.distance);
                (v.pass, v.reason.clone(), dist)
            }),
        ),
        None => {
            r.skip("locality", "no de-noised assemblage");
            false
        }
    };

    match &asm {
        Some(a) => r.record(
            "qutrit round trip",
            lift_qutrit(a).and_then(|l| filter_back(&l)).map_err(err).map(|back| {
                let d = back.max_abs_diff(a);
                (d <= ROUND_TRIP_TOL, format!("max deviation {d:.2e} ≤ {ROUND_TRIP_TOL:.0e}"), Some(d))
            }),
        ),
        None => {
            r.skip("qutrit round trip", "no assemblage");
            false
        }
    };

    let passed = r.stages.iter().all(|s| s.pass);
    Report { stages: r.stages, passed }
}

pub fn render(report: &Report) -> String {
    let mut out = String::new();
    for s in &report.stages {
        out.push_str(&format!("{} {}: {}\n", if s.pass { "PASS" } else { "FAIL" }, s.stage, s.detail));
    }
    let n = report.stages.iter().filter(|s| s.pass).count();
    out.push_str(&format!("{n} of {} stages passed\n", report.stages.len()));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corrupted_minimal_data_fail_first_at_no_signaling() {
        let mut v = serde_json::to_value(fixtures::example_minimal()).unwrap();
        // σ_00|00 diagonal entry 0.1360 → −0.1360
        let entry = &mut v["sigma_00"]["0,0"][0][0][0];
        *entry = serde_json::json!(-entry.as_f64().unwrap());
        let inputs = Inputs::default().with_assemblage(v).unwrap();
        let report = run(&inputs);
        let first = report.stages.iter().find(|s| !s.pass).unwrap();
        assert_eq!(first.stage, "validate no-signaling");
        assert!(report.stages[0].pass);
        assert!(!report.passed);
    }
}
