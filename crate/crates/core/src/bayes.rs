//! Odds-form Bayesian updating with independent likelihood ratios.
//!
//! ```
//! use coincidence::bayes::{EvidenceItem, OddsState};
//!
//! let state = OddsState::new(1e-5)
//!     .unwrap()
//!     .update(EvidenceItem::new("E", 4.0, "illustration").unwrap());
//! assert!((state.posterior_odds() - 4e-5).abs() < 1e-18);
//! ```
//!
//! Every item is assumed independent of the others given either hypothesis;
//! the posterior is the prior times the product of the ratios.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};

/// Relative tolerance of the `posterior = prior * prod(lr)` invariant.
pub const CHAIN_TOLERANCE: f64 = 1e-12;

pub const INDEPENDENCE_ASSUMPTION: &str =
    "evidence items are assumed independent given each hypothesis; no dependence is modelled";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvidenceItem {
    pub label: String,
    pub lr: f64,
    /// Who asserted this ratio, and on what grounds.
    pub provenance: String,
}

impl EvidenceItem {
    pub fn new(label: impl Into<String>, lr: f64, provenance: impl Into<String>) -> Result<Self> {
        let item = Self {
            label: label.into(),
            lr,
            provenance: provenance.into(),
        };
        item.validate()?;
        Ok(item)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lr.is_finite() && self.lr > 0.0 {
            Ok(())
        } else {
            Err(Error::Domain(format!(
                "evidence `{}`: likelihood ratio {} must be finite and > 0",
                self.label, self.lr
            )))
        }
    }
}

/// The four items of the reference Bayesian analysis, with the ratios that
/// analysis assigned to them.
pub fn reference_evidence() -> Vec<EvidenceItem> {
    const SOURCE: &str = "subjective ratio assigned in the reference Bayesian analysis";
    [
        ("suspect never confessed", 0.5),
        ("toxic substances found in two patients", 50.0),
        ("14 incidents during the suspect's shifts", 7000.0),
        ("diary entry about giving in to a compulsion", 5.0),
    ]
    .into_iter()
    .map(|(label, lr)| EvidenceItem::new(label, lr, SOURCE).expect("positive ratios"))
    .collect()
}

pub fn odds_from_probability(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return domain(format!("probability {p} must lie strictly between 0 and 1"));
    }
    Ok(p / (1.0 - p))
}

pub fn probability_from_odds(odds: f64) -> f64 {
    if odds.is_infinite() {
        1.0
    } else {
        odds / (1.0 + odds)
    }
}

/// Prior odds plus the evidence applied so far.
#[derive(Debug, Clone, PartialEq)]
pub struct OddsState {
    prior_odds: f64,
    applied: Vec<EvidenceItem>,
    posterior_odds: f64,
}

impl OddsState {
    pub fn new(prior_odds: f64) -> Result<Self> {
        if !(prior_odds.is_finite() && prior_odds > 0.0) {
            return domain(format!("prior odds {prior_odds} must be finite and > 0"));
        }
        Ok(Self {
            prior_odds,
            applied: Vec::new(),
            posterior_odds: prior_odds,
        })
    }

    pub fn prior_odds(&self) -> f64 {
        self.prior_odds
    }

    pub fn posterior_odds(&self) -> f64 {
        self.posterior_odds
    }

    pub fn applied(&self) -> &[EvidenceItem] {
        &self.applied
    }

    pub fn posterior_probability(&self) -> f64 {
        probability_from_odds(self.posterior_odds)
    }

    /// Multiplies the posterior odds by `e.lr` and records the item.
    #[must_use]
    pub fn update(&self, e: EvidenceItem) -> Self {
        let mut next = self.clone();
        next.posterior_odds *= e.lr;
        next.applied.push(e);
        next
    }

    pub fn update_all(&self, items: impl IntoIterator<Item = EvidenceItem>) -> Self {
        items.into_iter().fold(self.clone(), |s, e| s.update(e))
    }
}

pub fn posterior_probability(state: &OddsState) -> f64 {
    state.posterior_probability()
}

/// How a prior probability is turned into prior odds.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PriorConvention {
    /// `p / (1 - p)`.
    StrictOdds,
    /// Uses `p` itself as the odds; a good approximation only for small `p`.
    ProbabilityAsOdds,
}

impl PriorConvention {
    pub fn prior_odds(self, prior_probability: f64) -> Result<f64> {
        match self {
            PriorConvention::StrictOdds => odds_from_probability(prior_probability),
            PriorConvention::ProbabilityAsOdds => {
                odds_from_probability(prior_probability)?;
                Ok(prior_probability)
            }
        }
    }

    pub fn describe(self) -> &'static str {
        match self {
            PriorConvention::StrictOdds => "prior odds = p / (1 - p)",
            PriorConvention::ProbabilityAsOdds => "prior probability used directly as prior odds",
        }
    }
}

/// Runs the chain from a prior probability under both conventions, so the
/// choice is visible instead of silent.
pub fn chain_both_conventions(
    prior_probability: f64,
    items: &[EvidenceItem],
) -> Result<[(PriorConvention, OddsState); 2]> {
    let run = |c: PriorConvention| -> Result<(PriorConvention, OddsState)> {
        Ok((c, OddsState::new(c.prior_odds(prior_probability)?)?.update_all(items.iter().cloned())))
    };
    Ok([
        run(PriorConvention::ProbabilityAsOdds)?,
        run(PriorConvention::StrictOdds)?,
    ])
}

/// Outcome of asking for `P(H0 | E)` given `P(E | H0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FallacyReport {
    pub statement: String,
    /// `P(H0 | E)` when both the prior and `P(E)` were supplied.
    pub posterior: Option<f64>,
}

impl FallacyReport {
    pub fn computable(&self) -> bool {
        self.posterior.is_some()
    }
}

/// `P(H0 | E) = P(E | H0) P(H0) / P(E)`, or an explanation of why it cannot be
/// had from `P(E | H0)` alone.
pub fn fallacy_report(
    p_e_given_h0: f64,
    prior_h0: Option<f64>,
    p_e: Option<f64>,
) -> Result<FallacyReport> {
    if !(0.0..=1.0).contains(&p_e_given_h0) {
        return domain(format!("P(E | H0) = {p_e_given_h0} is not a probability"));
    }
    match (prior_h0, p_e) {
        (Some(prior), Some(p_e)) => {
            if !(0.0..=1.0).contains(&prior) {
                return domain(format!("P(H0) = {prior} is not a probability"));
            }
            if p_e == 0.0 {
                return domain("P(E) = 0: the posterior is undefined");
            }
            if !(0.0..=1.0).contains(&p_e) {
                return domain(format!("P(E) = {p_e} is not a probability"));
            }
            let posterior = p_e_given_h0 * prior / p_e;
            if posterior > 1.0 + crate::distributions::CLAMP_SLACK {
                return domain(format!(
                    "inputs are inconsistent: P(E | H0) P(H0) exceeds P(E) (posterior {posterior})"
                ));
            }
            let posterior = posterior.min(1.0);
            Ok(FallacyReport {
                statement: format!(
                    "P(H0 | E) = P(E | H0) P(H0) / P(E) = {p_e_given_h0} * {prior} / {p_e} = {posterior}"
                ),
                posterior: Some(posterior),
            })
        }
        _ => Ok(FallacyReport {
            statement: format!(
                "P(E | H0) = {p_e_given_h0} is the probability of the evidence under chance; \
                 P(H0 | E) is not computable from it without P(H0) and P(E). \
                 Reading one as the other is the prosecutor's fallacy."
            ),
            posterior: None,
        }),
    }
}
