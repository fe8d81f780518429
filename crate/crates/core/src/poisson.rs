//! Poisson incident model: intensity estimates, the likelihood ratio of a
//! raised suspect intensity against a common one, a verbal scale for that
//! ratio, and the exact conditional binomial test.
//!
//! Each nurse `i` witnesses `Poisson(mu * r_i)` incidents. Under the
//! prosecution hypothesis the suspect's intensity is `mu_L` instead; the
//! other nurses' factors cancel and
//!
//! ```text
//! LR = exp(mu r_j - mu_L r_j) * (mu_L / mu)^k_j
//! ```

use std::fmt;

use serde::Serialize;

use crate::case::{NormalRateData, WardRoster};
use crate::distributions::binomial_tail;
use crate::error::{domain, Error, Result};
use crate::frequentist::{Method, TestResult};

/// How the common intensity `mu` was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum IntensityBasis {
    /// Incidents and shifts of everyone except the suspect.
    ExcludeSuspect,
    /// All incidents over all shifts.
    IncludeSuspect,
    /// Supplied by the caller.
    Fixed(f64),
    /// Everyone except the suspect, plus extra normal-operation data.
    Augmented,
}

impl fmt::Display for IntensityBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            IntensityBasis::ExcludeSuspect => f.write_str("exclude-suspect"),
            IntensityBasis::IncludeSuspect => f.write_str("include-suspect"),
            IntensityBasis::Fixed(v) => write!(f, "fixed={v}"),
            IntensityBasis::Augmented => f.write_str("augmented"),
        }
    }
}

/// Incidents per shift, kept as the exact ratio it was estimated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct IntensityEstimate {
    pub basis: IntensityBasis,
    pub numerator: u64,
    pub denominator: u64,
}

impl IntensityEstimate {
    pub fn fixed(mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu > 0.0) {
            return domain(format!("fixed intensity {mu} must be finite and > 0"));
        }
        Ok(Self {
            basis: IntensityBasis::Fixed(mu),
            numerator: 0,
            denominator: 0,
        })
    }

    pub fn mu(&self) -> f64 {
        match self.basis {
            IntensityBasis::Fixed(v) => v,
            _ => self.numerator as f64 / self.denominator as f64,
        }
    }
}

impl fmt::Display for IntensityEstimate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.basis {
            IntensityBasis::Fixed(v) => write!(f, "mu = {v} (fixed)"),
            b => write!(f, "mu = {}/{} ({b})", self.numerator, self.denominator),
        }
    }
}

/// Estimates `mu` from a (possibly pooled) roster. `Augmented` needs `extra`.
pub fn estimate_mu(
    ward: &WardRoster,
    basis: IntensityBasis,
    extra: Option<&NormalRateData>,
) -> Result<IntensityEstimate> {
    let (numerator, denominator) = match basis {
        IntensityBasis::Fixed(v) => return IntensityEstimate::fixed(v),
        IntensityBasis::ExcludeSuspect => (ward.other_incidents(), ward.other_shifts()),
        IntensityBasis::IncludeSuspect => (ward.total_incidents, ward.total_shifts),
        IntensityBasis::Augmented => {
            let extra = extra.ok_or_else(|| {
                Error::Domain("augmented intensity needs extra normal-rate data".into())
            })?;
            (
                ward.other_incidents() + extra.extra_incidents,
                ward.other_shifts() + extra.extra_shifts,
            )
        }
    };
    if denominator == 0 {
        return domain(format!("no shifts to estimate mu from ({basis})"));
    }
    if numerator == 0 {
        return Err(Error::ZeroIntensity(format!(
            "no incidents to estimate mu from ({basis}); the likelihood ratio is undefined"
        )));
    }
    Ok(IntensityEstimate {
        basis,
        numerator,
        denominator,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SuspectRule {
    /// `mu_L = k_j / r_j`: the expected count equals the observed count.
    ObservedRate { incidents: u64, shifts: u64 },
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SuspectIntensity {
    pub rule: SuspectRule,
}

impl SuspectIntensity {
    pub fn observed_rate(incidents: u64, shifts: u64) -> Result<Self> {
        if shifts == 0 {
            return domain("suspect has no shifts");
        }
        Ok(Self {
            rule: SuspectRule::ObservedRate { incidents, shifts },
        })
    }

    pub fn fixed(mu_l: f64) -> Result<Self> {
        if !(mu_l.is_finite() && mu_l >= 0.0) {
            return domain(format!("suspect intensity {mu_l} must be finite and >= 0"));
        }
        Ok(Self {
            rule: SuspectRule::Fixed(mu_l),
        })
    }

    pub fn mu_l(&self) -> f64 {
        match self.rule {
            SuspectRule::ObservedRate { incidents, shifts } => incidents as f64 / shifts as f64,
            SuspectRule::Fixed(v) => v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    FavorsProsecution,
    FavorsDefence,
    Neutral,
}

/// Bands of the verbal likelihood-ratio scale, for ratios at or above 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum VerbalBand {
    /// `LR = 1`.
    EquallyLikely,
    /// `1 < LR < 100`.
    SlightlyMoreLikely,
    /// `100 <= LR < 1000`.
    MoreLikely,
    /// `1000 <= LR < 10000`.
    MuchMoreLikely,
    /// `LR >= 10000`.
    VeryMuchMoreLikely,
}

impl VerbalBand {
    pub fn for_ratio_at_least_one(lr: f64) -> Self {
        if lr == 1.0 {
            VerbalBand::EquallyLikely
        } else if lr < 100.0 {
            VerbalBand::SlightlyMoreLikely
        } else if lr < 1_000.0 {
            VerbalBand::MoreLikely
        } else if lr < 10_000.0 {
            VerbalBand::MuchMoreLikely
        } else {
            VerbalBand::VeryMuchMoreLikely
        }
    }

    fn phrase(self) -> &'static str {
        match self {
            VerbalBand::EquallyLikely => "equally likely",
            VerbalBand::SlightlyMoreLikely => "slightly more likely",
            VerbalBand::MoreLikely => "more likely",
            VerbalBand::MuchMoreLikely => "much more likely",
            VerbalBand::VeryMuchMoreLikely => "very much more likely",
        }
    }
}

/// Verbal description of a likelihood ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerbalScale {
    pub band: VerbalBand,
    pub direction: Direction,
    pub text: String,
}

pub fn verbal_scale(lr: f64) -> Result<VerbalScale> {
    if lr.is_nan() || lr <= 0.0 {
        return domain(format!("likelihood ratio {lr} must be > 0"));
    }
    let (ratio, direction) = if lr == 1.0 {
        (1.0, Direction::Neutral)
    } else if lr > 1.0 {
        (lr, Direction::FavorsProsecution)
    } else {
        (1.0 / lr, Direction::FavorsDefence)
    };
    let band = VerbalBand::for_ratio_at_least_one(ratio);
    let text = match direction {
        Direction::Neutral => "evidence is equally likely under H_p as under H_d".to_owned(),
        Direction::FavorsProsecution => {
            format!("evidence is {} under H_p than under H_d", band.phrase())
        }
        Direction::FavorsDefence => format!(
            "evidence is {} under H_d than under H_p (reciprocal ratio {ratio})",
            band.phrase()
        ),
    };
    Ok(VerbalScale {
        band,
        direction,
        text,
    })
}

/// Ratios beyond the f64 range sit far inside the outermost band.
fn extreme_verbal_scale(ln_lr: f64) -> VerbalScale {
    let band = VerbalBand::VeryMuchMoreLikely;
    let (direction, text) = if ln_lr > 0.0 {
        (Direction::FavorsProsecution, format!("evidence is {} under H_p than under H_d (ln LR = {ln_lr})", band.phrase()))
    } else {
        (Direction::FavorsDefence, format!("evidence is {} under H_d than under H_p (ln LR = {ln_lr})", band.phrase()))
    };
    VerbalScale { band, direction, text }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LikelihoodRatio {
    /// May underflow to 0 or overflow to infinity; `ln_value` does not.
    pub value: f64,
    pub ln_value: f64,
    pub verbal: VerbalScale,
    pub direction: Direction,
}

/// `exp((mu - mu_L) r_j) * (mu_L / mu)^k_j`, evaluated in log space.
pub fn lr_poisson(
    mu: &IntensityEstimate,
    mu_l: &SuspectIntensity,
    r_j: u64,
    k_j: u64,
) -> Result<LikelihoodRatio> {
    if r_j == 0 {
        return domain("the suspect needs at least one shift");
    }
    let mu_v = mu.mu();
    let mu_l_v = mu_l.mu_l();
    if mu_v.is_nan() || mu_v <= 0.0 {
        return domain(format!("intensity {mu_v} must be > 0"));
    }
    if mu_l_v == 0.0 && k_j > 0 {
        return domain("suspect intensity 0 cannot produce incidents");
    }
    let r = r_j as f64;
    // Both rates exact ratios: form mu_L / mu with a single rounding.
    let rate_ratio = match (mu_l.rule, mu.basis) {
        (SuspectRule::ObservedRate { incidents, shifts }, basis)
            if !matches!(basis, IntensityBasis::Fixed(_)) =>
        {
            (incidents as f64 * mu.denominator as f64) / (shifts as f64 * mu.numerator as f64)
        }
        _ => mu_l_v / mu_v,
    };
    let ln_lr = if k_j == 0 {
        (mu_v - mu_l_v) * r
    } else {
        (mu_v - mu_l_v) * r + k_j as f64 * rate_ratio.ln()
    };
    let value = ln_lr.exp();
    let verbal = if value > 0.0 && value.is_finite() {
        verbal_scale(value)?
    } else {
        extreme_verbal_scale(ln_lr)
    };
    Ok(LikelihoodRatio {
        value,
        ln_value: ln_lr,
        direction: verbal.direction,
        verbal,
    })
}

/// Exact test of `mu_L = mu` conditional on the grand total of incidents `N`:
/// the suspect's count is `Binomial(N, p)` with
/// `p = mu_L r_L / (mu_L r_L + mu r)`.
///
/// With `intensities = None` the rates are taken equal and `p = r_L / n`.
pub fn conditional_binomial_test(
    ward: &WardRoster,
    intensities: Option<(&IntensityEstimate, &SuspectIntensity)>,
) -> Result<TestResult> {
    ward.validate()?;
    let r_l = ward.suspect_shifts as f64;
    let r = ward.other_shifts() as f64;
    let (p, how) = match intensities {
        None => (r_l / (r_l + r), "equal intensities, p = r_L / (r_L + r)".to_owned()),
        Some((mu, mu_l)) => {
            let num = mu_l.mu_l() * r_l;
            let den = num + mu.mu() * r;
            if den == 0.0 {
                return domain("both expected counts are zero");
            }
            (num / den, format!("p = mu_L r_L / (mu_L r_L + mu r) with {mu}"))
        }
    };
    let tail = binomial_tail(ward.total_incidents, p, ward.suspect_incidents)?;
    Ok(TestResult::new(
        Method::ConditionalBinomial,
        tail,
        Some(ward.suspect_incidents as f64),
        Vec::new(),
        format!(
            "P(Binomial({}, {p}) >= {}) for ward {}; {how}; conditional on the total number of incidents",
            ward.total_incidents, ward.suspect_incidents, ward.name
        ),
    ))
}
