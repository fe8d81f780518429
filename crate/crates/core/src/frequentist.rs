//! Conditional (hypergeometric) tests on ward rosters and ways of combining
//! them across wards.
//!
//! All tests here condition on the total number of shifts and incidents in
//! each ward, which removes the unknown per-shift incident probability.
//! [`elffers_pipeline`] multiplies per-ward tails; its result is kept for
//! reproduction but is not a p-value, and [`TestResult::p_value`] refuses to
//! hand it out as one.

use std::fmt;

use serde::Serialize;

use crate::case::{pool_wards, CaseFile, WardRoster};
use crate::distributions::{
    chi2_survival_even, clamp_probability, convolve_tail, hypergeom_tail, DiscreteDist,
};
use crate::error::{domain, Error, Result};

pub const CONDITIONING: &str =
    "conditional on the total number of incidents and the total number of shifts in each ward";

pub const NOT_A_P_VALUE: &str = "the product of per-ward tail probabilities is NOT a p-value: \
     multiplying p-values from several tests makes the result arbitrarily small even when \
     every null hypothesis holds";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    ElffersPipeline,
    PerWardTail,
    Bonferroni,
    PooledTail,
    ConvolvedSum,
    FisherCombined,
    ConditionalBinomial,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::ElffersPipeline => "elffers_pipeline",
            Method::PerWardTail => "per_ward_tail",
            Method::Bonferroni => "bonferroni",
            Method::PooledTail => "pooled_tail",
            Method::ConvolvedSum => "convolved_sum",
            Method::FisherCombined => "fisher_combined",
            Method::ConditionalBinomial => "conditional_binomial",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One ward's contribution to a result.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Component {
    pub ward: String,
    pub p_value: f64,
    pub multiplier: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestResult {
    method: Method,
    value: f64,
    statistic: Option<f64>,
    components: Vec<Component>,
    notes: String,
}

impl TestResult {
    pub(crate) fn new(
        method: Method,
        value: f64,
        statistic: Option<f64>,
        components: Vec<Component>,
        notes: String,
    ) -> Self {
        Self {
            method,
            value,
            statistic,
            components,
            notes,
        }
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// The p-value, or `None` for results that are not p-values.
    pub fn p_value(&self) -> Option<f64> {
        self.is_p_value().then_some(self.value)
    }

    pub fn is_p_value(&self) -> bool {
        self.method != Method::ElffersPipeline
    }

    /// The reported number, whatever its status.
    pub fn value(&self) -> f64 {
        self.value
    }

    pub fn statistic(&self) -> Option<f64> {
        self.statistic
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn notes(&self) -> &str {
        &self.notes
    }
}

/// `P(X >= x)` for the suspect's incident count in one ward.
pub fn ward_tail_p(w: &WardRoster) -> Result<TestResult> {
    w.validate()?;
    let p = hypergeom_tail(
        w.total_shifts,
        w.suspect_shifts,
        w.total_incidents,
        w.suspect_incidents,
    )?;
    Ok(TestResult::new(
        Method::PerWardTail,
        p,
        Some(w.suspect_incidents as f64),
        vec![Component {
            ward: w.name.clone(),
            p_value: p,
            multiplier: 1,
        }],
        format!(
            "P(suspect incidents >= {}) in ward {} with n={}, r={}, k={}; {CONDITIONING}",
            w.suspect_incidents, w.name, w.total_shifts, w.suspect_shifts, w.total_incidents
        ),
    ))
}

/// Multiplies a per-ward tail by the number of candidates it was selected
/// from, clamped at 1.
pub fn posthoc_multiply(t: &TestResult, multiplier: u64) -> Result<TestResult> {
    if t.method != Method::PerWardTail {
        return domain(format!(
            "post-hoc multiplication applies to per-ward tails, not {}",
            t.method
        ));
    }
    if multiplier < 1 {
        return domain("post-hoc multiplier must be at least 1");
    }
    let mut out = t.clone();
    out.value = (t.value * multiplier as f64).min(1.0);
    for c in &mut out.components {
        c.multiplier = multiplier;
    }
    out.notes = format!("{} multiplied by {multiplier} (post-hoc correction)", t.notes);
    Ok(out)
}

/// Product of the per-ward tails over every ward of the case, with only
/// `corrected_ward` multiplied by `multiplier`.
///
/// The level at which the post-hoc correction is applied is a subjective
/// choice, so the multiplier has no default.
pub fn elffers_pipeline(case: &CaseFile, corrected_ward: &str, multiplier: u64) -> Result<TestResult> {
    case.ward(corrected_ward)?;
    let mut components = Vec::with_capacity(case.wards.len());
    let mut product = 1.0;
    for w in &case.wards {
        let mut t = ward_tail_p(w)?;
        if w.name == corrected_ward {
            t = posthoc_multiply(&t, multiplier)?;
        }
        product *= t.value;
        components.extend(t.components);
    }
    Ok(TestResult::new(
        Method::ElffersPipeline,
        clamp_probability(product)?,
        None,
        components,
        format!(
            "product of per-ward tails ({} variant), ward {corrected_ward} multiplied by {multiplier}; {NOT_A_P_VALUE}; {CONDITIONING}",
            case.variant
        ),
    ))
}

/// `min(1, nurse_count * min(p))`; nurses without a listed p-value count as 1.
pub fn bonferroni_min(p_values: &[f64], nurse_count: u64) -> Result<TestResult> {
    if p_values.is_empty() {
        return domain("bonferroni_min needs at least one p-value");
    }
    if let Some(bad) = p_values.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return domain(format!("{bad} is not a probability"));
    }
    if (nurse_count as usize) < p_values.len() {
        return domain(format!(
            "{} p-values but only {nurse_count} nurses",
            p_values.len()
        ));
    }
    let min = p_values.iter().copied().fold(1.0, f64::min);
    Ok(TestResult::new(
        Method::Bonferroni,
        (min * nurse_count as f64).min(1.0),
        Some(min),
        Vec::new(),
        format!(
            "smallest of {} per-nurse p-values multiplied by {nurse_count} nurses; valid only when the comparison is planned before seeing the data",
            p_values.len()
        ),
    ))
}

/// Per-ward tail of the named wards added together.
pub fn pooled_test<S: AsRef<str>>(case: &CaseFile, names: &[S]) -> Result<TestResult> {
    let pooled = pool_wards(case, names)?;
    let t = ward_tail_p(&pooled)?;
    let notes = format!("wards pooled into one roster: {}", t.notes);
    Ok(TestResult {
        method: Method::PooledTail,
        notes,
        ..t
    })
}

/// `P(sum X_i >= sum x_i)` with each ward's count hypergeometric and the wards
/// independent.
pub fn convolved_sum_test<S: AsRef<str>>(case: &CaseFile, names: &[S]) -> Result<TestResult> {
    if names.is_empty() {
        return domain("convolved_sum_test needs at least one ward");
    }
    let wards = names
        .iter()
        .map(|n| case.ward(n.as_ref()))
        .collect::<Result<Vec<_>>>()?;
    let s_min: u64 = wards.iter().map(|w| w.suspect_incidents).sum();
    let mut dists = wards
        .iter()
        .map(|w| DiscreteDist::hypergeometric(w.total_shifts, w.suspect_shifts, w.total_incidents))
        .collect::<Result<Vec<_>>>()?;
    let last = dists.pop().expect("nonempty");
    let p = match dists.into_iter().reduce(|a, b| a.convolve(&b).expect("normalized inputs")) {
        Some(rest) => convolve_tail(&rest, &last, s_min as i64)?,
        None => ward_tail_p(wards[0])?.value,
    };
    let components = wards
        .iter()
        .map(|w| {
            ward_tail_p(w).map(|t| Component {
                ward: w.name.clone(),
                p_value: t.value,
                multiplier: 1,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(TestResult::new(
        Method::ConvolvedSum,
        p,
        Some(s_min as f64),
        components,
        format!(
            "P(sum of independent per-ward hypergeometric counts >= {s_min}) over {}; {CONDITIONING}",
            wards.iter().map(|w| w.name.as_str()).collect::<Vec<_>>().join(", ")
        ),
    ))
}

/// Fisher's combination: `T = -2 sum ln p_i` against chi-squared with `2n`
/// degrees of freedom.
pub fn fisher_combine(p_values: &[f64]) -> Result<TestResult> {
    if p_values.is_empty() {
        return domain("fisher_combine needs at least one p-value");
    }
    for &p in p_values {
        if p == 0.0 {
            return Err(Error::DegeneratePValue(p));
        }
        if !(0.0..=1.0).contains(&p) {
            return domain(format!("{p} is not a probability"));
        }
    }
    let statistic = -2.0 * p_values.iter().map(|p| p.ln()).sum::<f64>();
    // -0.0 when every p is 1
    let statistic = statistic.max(0.0);
    let p = chi2_survival_even(statistic, 2 * p_values.len() as u64)?;
    Ok(TestResult::new(
        Method::FisherCombined,
        p,
        Some(statistic),
        Vec::new(),
        format!(
            "-2 sum ln p = {statistic} compared with chi-squared on {} degrees of freedom; assumes independent component tests",
            2 * p_values.len()
        ),
    ))
}

/// Fisher's combination of the per-ward tails of the named wards.
pub fn fisher_combine_wards<S: AsRef<str>>(case: &CaseFile, names: &[S]) -> Result<TestResult> {
    let tails = names
        .iter()
        .map(|n| ward_tail_p(case.ward(n.as_ref())?))
        .collect::<Result<Vec<_>>>()?;
    let ps: Vec<f64> = tails.iter().map(|t| t.value).collect();
    let mut t = fisher_combine(&ps)?;
    t.components = tails.into_iter().flat_map(|t| t.components).collect();
    t.notes = format!("{}; {CONDITIONING}", t.notes);
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case::{builtin_case, Variant};
    use approx::assert_relative_eq;

    #[test]
    fn zero_incidents_tail_is_one() {
        let w = WardRoster::new("W", 50, 10, 4, 0).unwrap();
        assert_eq!(ward_tail_p(&w).unwrap().value(), 1.0);
    }

    #[test]
    fn posthoc() {
        let w = WardRoster::new("W", 50, 10, 4, 2).unwrap();
        let t = ward_tail_p(&w).unwrap();
        assert_eq!(posthoc_multiply(&t, 1).unwrap().value(), t.value());
        assert!(posthoc_multiply(&t, 0).is_err());
        let fake = TestResult::new(Method::PerWardTail, 0.1, None, vec![], String::new());
        assert_eq!(posthoc_multiply(&fake, 20).unwrap().value(), 1.0);
        let pooled = TestResult { method: Method::PooledTail, ..fake };
        assert!(posthoc_multiply(&pooled, 2).is_err());
    }

    #[test]
    fn elffers_is_branded() {
        let case = builtin_case(Variant::Original);
        let t = elffers_pipeline(&case, "JKZ", 27).unwrap();
        assert_eq!(t.p_value(), None);
        assert!(t.notes().contains("NOT a p-value"));
        assert_eq!(t.components().len(), 3);
        assert_eq!(t.components()[0].multiplier, 27);
        assert!(elffers_pipeline(&case, "ICU", 27).is_err());
    }

    #[test]
    fn elffers_single_ward_matches_tail() {
        let mut case = builtin_case(Variant::Corrected);
        case.wards.truncate(1);
        let e = elffers_pipeline(&case, "JKZ", 1).unwrap();
        let t = ward_tail_p(&case.wards[0]).unwrap();
        assert_eq!(e.value(), t.value());
    }

    #[test]
    fn bonferroni_cases() {
        assert_relative_eq!(bonferroni_min(&[0.001], 27).unwrap().value(), 0.027, max_relative = 1e-15);
        assert_eq!(bonferroni_min(&[1.0, 1.0], 2).unwrap().value(), 1.0);
        assert!(bonferroni_min(&[], 2).is_err());
        assert!(bonferroni_min(&[0.1, 0.2, 0.3], 2).is_err());
        assert!(bonferroni_min(&[1.1], 2).is_err());
        assert!(bonferroni_min(&[0.2], 1).unwrap().is_p_value());
    }

    #[test]
    fn fisher_edge_values() {
        let t = fisher_combine(&[1.0, 1.0, 1.0]).unwrap();
        assert_eq!(t.statistic(), Some(0.0));
        assert_eq!(t.value(), 1.0);
        assert_relative_eq!(fisher_combine(&[0.5]).unwrap().value(), 0.5, max_relative = 1e-15);
        assert!(matches!(fisher_combine(&[0.0, 0.5]), Err(Error::DegeneratePValue(_))));
        assert!(fisher_combine(&[1.5]).is_err());
        assert!(fisher_combine(&[]).is_err());
    }

    #[test]
    fn single_ward_pools_and_convolutions_match_tail() {
        let case = builtin_case(Variant::Corrected);
        let w = ward_tail_p(case.ward("RKZ-42").unwrap()).unwrap();
        assert_eq!(pooled_test(&case, &["RKZ-42"]).unwrap().value(), w.value());
        assert_eq!(convolved_sum_test(&case, &["RKZ-42"]).unwrap().value(), w.value());
    }
}
