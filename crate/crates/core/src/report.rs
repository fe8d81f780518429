//! Analysis reports: every result travels with its method, a fingerprint of
//! its inputs, and the caveats that limit what it means.
//!
//! The text and machine renderings are built from the same list of named
//! numbers, so they always agree.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bayes::{OddsState, PriorConvention, INDEPENDENCE_ASSUMPTION};
use crate::case::{CaseFile, Variant, WardRoster};
use crate::frequentist::{Method, TestResult, CONDITIONING, NOT_A_P_VALUE};
use crate::poisson::{IntensityEstimate, LikelihoodRatio};
use crate::relative_risk::{DerivedConfig, SimulationReport};

pub const CAUSATION_CAVEAT: &str = "correlation does not imply causation: an association between \
     shifts and incidents is not evidence of who caused the incidents until alternative \
     explanations are ruled out";

pub const AUXILIARY_CAVEAT: &str = "the model assumes every shift carries the same incident \
     probability (no day/night, seasonal or case-mix differences), that shifts are independent, \
     and that nurses are interchangeable; a small probability may point at a failed assumption \
     rather than at the suspect";

pub const POISSON_CAVEAT: &str = "the ratio depends on how mu and mu_L are chosen; both were \
     suggested by the same data, and a different defensible choice of mu changes the ratio \
     substantially";

pub const SIMULATION_CAVEAT: &str = "simulated wards give every nurse the suspect's number of \
     shifts; unequal shift counts would spread relative risks further";

pub const BONFERRONI_CAVEAT: &str = "a legitimate p-value only if the comparison across nurses \
     was planned before the data singled anyone out";

pub const BAYES_CAVEAT: &str = "prior odds and likelihood ratios are subjective inputs; other \
     defensible inputs give very different posteriors";

/// The payload of one report entry.
#[derive(Debug, Clone, PartialEq)]
pub enum MethodResult {
    Test(TestResult),
    LikelihoodRatio {
        lr: LikelihoodRatio,
        intensity: IntensityEstimate,
        mu_l: f64,
    },
    Odds {
        convention: PriorConvention,
        prior_probability: f64,
        state: OddsState,
    },
    Simulation {
        derived: Box<DerivedConfig>,
        report: SimulationReport,
    },
}

impl MethodResult {
    pub fn method_id(&self) -> &'static str {
        match self {
            MethodResult::Test(t) => t.method().as_str(),
            MethodResult::LikelihoodRatio { .. } => "poisson_lr",
            MethodResult::Odds { .. } => "bayes_chain",
            MethodResult::Simulation { .. } => "relative_risk_simulation",
        }
    }

    /// The headline number.
    pub fn value(&self) -> f64 {
        match self {
            MethodResult::Test(t) => t.value(),
            MethodResult::LikelihoodRatio { lr, .. } => lr.value,
            MethodResult::Odds { state, .. } => state.posterior_odds(),
            MethodResult::Simulation { report, .. } => report.p_value,
        }
    }

    pub fn is_p_value(&self) -> bool {
        match self {
            MethodResult::Test(t) => t.is_p_value(),
            MethodResult::Simulation { .. } => true,
            _ => false,
        }
    }

    /// Secondary numbers, by name.
    pub fn numbers(&self) -> BTreeMap<String, f64> {
        let mut m = BTreeMap::new();
        match self {
            MethodResult::Test(t) => {
                if let Some(s) = t.statistic() {
                    m.insert("statistic".into(), s);
                }
                for c in t.components() {
                    m.insert(format!("component.{}.p", c.ward), c.p_value);
                    m.insert(format!("component.{}.multiplier", c.ward), c.multiplier as f64);
                }
            }
            MethodResult::LikelihoodRatio { lr, intensity, mu_l } => {
                m.insert("ln_lr".into(), lr.ln_value);
                m.insert("mu".into(), intensity.mu());
                m.insert("mu_l".into(), *mu_l);
            }
            MethodResult::Odds {
                prior_probability,
                state,
                ..
            } => {
                m.insert("prior_probability".into(), *prior_probability);
                m.insert("prior_odds".into(), state.prior_odds());
                m.insert("posterior_probability".into(), state.posterior_probability());
            }
            MethodResult::Simulation { derived, report } => {
                m.insert("threshold".into(), report.threshold);
                m.insert("exceed_count".into(), report.exceed_count as f64);
                m.insert("replicates".into(), report.config.replicates as f64);
                m.insert("std_error".into(), report.std_error);
                m.insert("degenerate_count".into(), report.degenerate_count as f64);
                m.insert("nurse_count".into(), report.config.nurse_count as f64);
                m.insert("nurse_count_exact".into(), derived.exact_nurse_count);
                m.insert("nurse_count_floor".into(), derived.floor_nurse_count as f64);
                m.insert("shifts_per_nurse".into(), report.config.shifts_per_nurse as f64);
                m.insert("mu".into(), report.config.mu);
            }
        }
        m
    }

    pub fn description(&self) -> String {
        match self {
            MethodResult::Test(t) => t.notes().to_owned(),
            MethodResult::LikelihoodRatio { lr, intensity, mu_l } => format!(
                "Poisson likelihood ratio with {intensity}, mu_L = {mu_l}: {}",
                lr.verbal.text
            ),
            MethodResult::Odds {
                convention, state, ..
            } => format!(
                "posterior odds after {} evidence items ({}); {INDEPENDENCE_ASSUMPTION}",
                state.applied().len(),
                convention.describe()
            ),
            MethodResult::Simulation { derived, report } => format!(
                "P(max relative risk >= {}) over {} simulated wards of {} nurses x {} shifts, {}, seed {}",
                report.threshold,
                report.config.replicates,
                report.config.nurse_count,
                report.config.shifts_per_nurse,
                derived.intensity,
                report.config.seed
            ),
        }
    }

    /// Caveats that must accompany this result.
    pub fn caveats(&self) -> Vec<&'static str> {
        let mut c = Vec::new();
        match self {
            MethodResult::Test(t) => {
                if t.method() == Method::ElffersPipeline {
                    c.push(NOT_A_P_VALUE);
                    c.push("the level at which the post-hoc multiplier is applied (ward, hospital, country) is a subjective choice");
                }
                if t.method() == Method::Bonferroni {
                    c.push(BONFERRONI_CAVEAT);
                }
                c.push(AUXILIARY_CAVEAT);
            }
            MethodResult::LikelihoodRatio { .. } => {
                c.push(POISSON_CAVEAT);
                c.push(AUXILIARY_CAVEAT);
            }
            MethodResult::Odds { .. } => {
                c.push(BAYES_CAVEAT);
                c.push(INDEPENDENCE_ASSUMPTION);
            }
            MethodResult::Simulation { .. } => {
                c.push(SIMULATION_CAVEAT);
                c.push(AUXILIARY_CAVEAT);
            }
        }
        c.push(CAUSATION_CAVEAT);
        c
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultEntry {
    pub label: String,
    /// Canonical description of the inputs; hashed into the fingerprint.
    pub inputs: String,
    pub result: MethodResult,
}

impl ResultEntry {
    pub fn new(label: impl Into<String>, inputs: impl Into<String>, result: MethodResult) -> Self {
        Self {
            label: label.into(),
            inputs: inputs.into(),
            result,
        }
    }

    pub fn fingerprint(&self) -> String {
        fingerprint(&format!("{}|{}", self.result.method_id(), self.inputs))
    }
}

/// First 16 hex digits of the SHA-256 of `text`.
pub fn fingerprint(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .take(8)
        .fold(String::with_capacity(16), |mut s, b| {
            let _ = write!(s, "{b:02x}");
            s
        })
}

/// Canonical one-line description of ward counts.
pub fn describe_wards(wards: &[&WardRoster]) -> String {
    wards
        .iter()
        .map(|w| {
            format!(
                "{}:n={},r={},k={},x={}",
                w.name, w.total_shifts, w.suspect_shifts, w.total_incidents, w.suspect_incidents
            )
        })
        .collect::<Vec<_>>()
        .join(";")
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisReport {
    pub case_name: String,
    pub suspect: String,
    pub variant: Variant,
    pub wards: Vec<WardRoster>,
    pub entries: Vec<ResultEntry>,
}

impl AnalysisReport {
    pub fn for_case(case: &CaseFile) -> Self {
        Self {
            case_name: case.case_name.clone(),
            suspect: case.suspect.clone(),
            variant: case.variant,
            wards: case.wards.clone(),
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, entry: ResultEntry) {
        self.entries.push(entry);
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "Case: {}  (suspect {}; data variant: {})", self.case_name, self.suspect, self.variant);
        let _ = writeln!(out, "Scope: {CONDITIONING} unless stated otherwise.");
        let _ = writeln!(out);
        let _ = writeln!(out, "{:<16} {:>8} {:>8} {:>8} {:>8} {:>8}", "ward", "n", "r", "k", "x", "nurses");
        for w in &self.wards {
            let nurses = w.nurse_count.map_or("-".to_owned(), |n| n.to_string());
            let _ = writeln!(
                out,
                "{:<16} {:>8} {:>8} {:>8} {:>8} {:>8}",
                w.name, w.total_shifts, w.suspect_shifts, w.total_incidents, w.suspect_incidents, nurses
            );
        }
        for e in &self.entries {
            let _ = writeln!(out);
            let _ = writeln!(out, "== {} [{}] (data variant: {})", e.label, e.result.method_id(), self.variant);
            let kind = if e.result.is_p_value() { "p-value" } else { "value (not a p-value)" };
            let _ = writeln!(out, "  {kind} = {}", e.result.value());
            for (name, v) in e.result.numbers() {
                let _ = writeln!(out, "  {name} = {v}");
            }
            let _ = writeln!(out, "  inputs: {}", e.inputs);
            let _ = writeln!(out, "  fingerprint: {}", e.fingerprint());
            let _ = writeln!(out, "  {}", e.result.description());
            for c in e.result.caveats() {
                let _ = writeln!(out, "  caveat: {c}");
            }
        }
        out
    }

    pub fn to_machine(&self) -> MachineReport {
        MachineReport {
            case_name: self.case_name.clone(),
            suspect: self.suspect.clone(),
            variant: self.variant,
            conditioning: CONDITIONING.to_owned(),
            wards: self.wards.clone(),
            results: self
                .entries
                .iter()
                .map(|e| MachineResult {
                    label: e.label.clone(),
                    method: e.result.method_id().to_owned(),
                    value: e.result.value(),
                    is_p_value: e.result.is_p_value(),
                    inputs: e.inputs.clone(),
                    fingerprint: e.fingerprint(),
                    description: e.result.description(),
                    caveats: e.result.caveats().into_iter().map(str::to_owned).collect(),
                    numbers: e.result.numbers(),
                })
                .collect(),
        }
    }

    /// The machine-readable report in the case-file syntax (TOML).
    pub fn render_machine(&self) -> String {
        toml::to_string(&self.to_machine()).expect("reports always serialize")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineReport {
    pub case_name: String,
    pub suspect: String,
    pub variant: Variant,
    pub conditioning: String,
    pub wards: Vec<WardRoster>,
    pub results: Vec<MachineResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MachineResult {
    pub label: String,
    pub method: String,
    pub value: f64,
    pub is_p_value: bool,
    pub inputs: String,
    pub fingerprint: String,
    pub description: String,
    pub caveats: Vec<String>,
    pub numbers: BTreeMap<String, f64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::builtin_case;
    use crate::frequentist::{elffers_pipeline, ward_tail_p};

    fn report() -> AnalysisReport {
        let case = builtin_case(Variant::Original);
        let mut r = AnalysisReport::for_case(&case);
        let e = elffers_pipeline(&case, "JKZ", 27).unwrap();
        r.push(ResultEntry::new("product", describe_wards(&case.wards.iter().collect::<Vec<_>>()), MethodResult::Test(e)));
        let t = ward_tail_p(&case.wards[1]).unwrap();
        r.push(ResultEntry::new("tail", describe_wards(&[&case.wards[1]]), MethodResult::Test(t)));
        r
    }

    #[test]
    fn elffers_caveat_always_present() {
        let r = report();
        assert!(r.entries[0].result.caveats().contains(&NOT_A_P_VALUE));
        let text = r.render_text();
        assert!(text.contains("value (not a p-value)"));
        assert!(text.contains("NOT a p-value"));
        assert!(text.contains("data variant: original"));
        assert!(text.contains(CONDITIONING));
    }

    #[test]
    fn machine_and_text_agree() {
        let r = report();
        let text = r.render_text();
        let parsed: MachineReport = toml::from_str(&r.render_machine()).unwrap();
        assert_eq!(parsed, r.to_machine());
        for res in &parsed.results {
            assert!(text.contains(&format!("= {}", res.value)));
            for v in res.numbers.values() {
                assert!(text.contains(&format!("= {v}")));
            }
            assert!(text.contains(&res.fingerprint));
            assert!(!res.caveats.is_empty());
        }
    }

    #[test]
    fn fingerprints_track_inputs() {
        assert_eq!(fingerprint("a").len(), 16);
        assert_ne!(fingerprint("a"), fingerprint("b"));
        let r = report();
        assert_ne!(r.entries[0].fingerprint(), r.entries[1].fingerprint());
    }
}
