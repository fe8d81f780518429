//! Roster data: wards, case files, and the two revisions of the reference case.
//!
//! Case files are TOML:
//!
//! ```toml
//! case_name = "example"
//! suspect = "N"
//! variant = "corrected"
//!
//! [[wards]]
//! name = "A"
//! total_shifts = 336
//! suspect_shifts = 3
//! total_incidents = 5
//! suspect_incidents = 1
//! nurse_count = 12        # optional
//! ```
//!
//! An optional `[[evidence]]` array carries `label`, `lr` and `provenance`
//! for Bayesian chaining. Unknown keys are rejected.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::bayes::EvidenceItem;
use crate::error::{Error, Result};

/// Which revision of the data a case carries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    /// The counts as first reported.
    Original,
    /// The counts after correcting the RKZ-41 shift count from 1 to 3.
    Corrected,
}

impl Variant {
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Original => "original",
            Variant::Corrected => "corrected",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "original" => Ok(Variant::Original),
            "corrected" => Ok(Variant::Corrected),
            other => Err(Error::Domain(format!(
                "unknown variant `{other}` (expected `original` or `corrected`)"
            ))),
        }
    }
}

/// Counts for one ward over the period under study.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WardRoster {
    pub name: String,
    /// All shifts in the ward (`n`).
    pub total_shifts: u64,
    /// Shifts worked by the suspect (`r`).
    pub suspect_shifts: u64,
    /// All incidents in the ward (`k`).
    pub total_incidents: u64,
    /// Incidents during the suspect's shifts (`x`).
    pub suspect_incidents: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nurse_count: Option<u64>,
}

impl WardRoster {
    pub fn new(
        name: impl Into<String>,
        total_shifts: u64,
        suspect_shifts: u64,
        total_incidents: u64,
        suspect_incidents: u64,
    ) -> Result<Self> {
        let w = Self {
            name: name.into(),
            total_shifts,
            suspect_shifts,
            total_incidents,
            suspect_incidents,
            nurse_count: None,
        };
        w.validate()?;
        Ok(w)
    }

    pub fn with_nurse_count(mut self, nurses: u64) -> Result<Self> {
        self.nurse_count = Some(nurses);
        self.validate()?;
        Ok(self)
    }

    pub fn other_shifts(&self) -> u64 {
        self.total_shifts - self.suspect_shifts
    }

    pub fn other_incidents(&self) -> u64 {
        self.total_incidents - self.suspect_incidents
    }

    /// The nurse count, or an error naming the ward when it was not supplied.
    pub fn require_nurse_count(&self) -> Result<u64> {
        self.nurse_count.ok_or_else(|| self.invalid("nurse_count", "required but not given"))
    }

    fn invalid(&self, field: &str, message: &str) -> Error {
        Error::Validation {
            ward: self.name.clone(),
            field: field.to_owned(),
            message: message.to_owned(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(self.invalid("name", "ward name must not be empty"));
        }
        if self.total_shifts == 0 {
            return Err(self.invalid("total_shifts", "total_shifts must be positive"));
        }
        if self.suspect_shifts > self.total_shifts {
            return Err(self.invalid("suspect_shifts", "suspect_shifts exceeds total_shifts"));
        }
        if self.total_incidents > self.total_shifts {
            return Err(self.invalid("total_incidents", "total_incidents exceeds total_shifts"));
        }
        if self.suspect_incidents > self.total_incidents {
            return Err(self.invalid(
                "suspect_incidents",
                "suspect_incidents exceeds total_incidents",
            ));
        }
        if self.suspect_incidents > self.suspect_shifts {
            return Err(self.invalid(
                "suspect_incidents",
                "suspect_incidents exceeds suspect_shifts",
            ));
        }
        if self.other_incidents() > self.other_shifts() {
            return Err(self.invalid(
                "total_incidents",
                "incidents outside the suspect's shifts exceed the remaining shifts",
            ));
        }
        if self.nurse_count == Some(0) {
            return Err(self.invalid("nurse_count", "nurse_count must be positive"));
        }
        Ok(())
    }
}

/// A named collection of ward rosters for one suspect.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CaseFile {
    pub case_name: String,
    pub suspect: String,
    pub variant: Variant,
    pub wards: Vec<WardRoster>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub evidence: Vec<EvidenceItem>,
}

impl CaseFile {
    pub fn validate(&self) -> Result<()> {
        if self.wards.is_empty() {
            return Err(Error::InvalidCase("a case needs at least one ward".into()));
        }
        let mut seen = HashSet::new();
        for w in &self.wards {
            w.validate()?;
            if !seen.insert(w.name.as_str()) {
                return Err(Error::InvalidCase(format!("duplicate ward name `{}`", w.name)));
            }
        }
        for e in &self.evidence {
            e.validate()?;
        }
        Ok(())
    }

    pub fn ward(&self, name: &str) -> Result<&WardRoster> {
        self.wards
            .iter()
            .find(|w| w.name == name)
            .ok_or_else(|| Error::UnknownWard(name.to_owned()))
    }

    pub fn ward_names(&self) -> Vec<&str> {
        self.wards.iter().map(|w| w.name.as_str()).collect()
    }

    /// Serializes to the case-file format; `parse_case` reads it back unchanged.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("case files always serialize")
    }
}

fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.len(), |nl| before.len() - nl - 1) + 1;
    (line, column)
}

/// Parses and fully validates a case file.
pub fn parse_case(text: &str) -> Result<CaseFile> {
    let case: CaseFile = toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        Error::Parse {
            line,
            column,
            message: e.message().to_owned(),
        }
    })?;
    case.validate()?;
    Ok(case)
}

/// Extra "normal operation" data for the same ward, e.g. adjacent periods.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NormalRateData {
    pub extra_shifts: u64,
    pub extra_incidents: u64,
    pub description: String,
}

impl NormalRateData {
    pub fn new(extra_shifts: u64, extra_incidents: u64, description: impl Into<String>) -> Result<Self> {
        if extra_incidents > extra_shifts.saturating_mul(10) {
            return Err(Error::Domain(format!(
                "{extra_incidents} extra incidents over {extra_shifts} extra shifts is implausible"
            )));
        }
        Ok(Self {
            extra_shifts,
            extra_incidents,
            description: description.into(),
        })
    }
}

fn reference_ward(name: &str, n: u64, r: u64, k: u64, x: u64) -> WardRoster {
    WardRoster::new(name, n, r, k, x).expect("reference counts are valid")
}

/// The reference roster: one children's hospital ward (JKZ) and two wards of
/// a second hospital (RKZ-41, RKZ-42). The revisions differ only in the
/// suspect's RKZ-41 shift count (1 originally, 3 after correction).
pub fn builtin_case(variant: Variant) -> CaseFile {
    let rkz41_shifts = match variant {
        Variant::Original => 1,
        Variant::Corrected => 3,
    };
    CaseFile {
        case_name: "reference roster".into(),
        suspect: "L".into(),
        variant,
        wards: vec![
            reference_ward("JKZ", 1029, 142, 8, 8)
                .with_nurse_count(27)
                .expect("valid"),
            reference_ward("RKZ-41", 336, rkz41_shifts, 5, 1),
            reference_ward("RKZ-42", 339, 58, 14, 5),
        ],
        evidence: crate::bayes::reference_evidence(),
    }
}

/// Component-wise sum of the named wards. The nurse count is dropped since it
/// is not defined for a pool.
pub fn pool_wards<S: AsRef<str>>(case: &CaseFile, names: &[S]) -> Result<WardRoster> {
    if names.is_empty() {
        return Err(Error::Domain("pool_wards needs at least one ward name".into()));
    }
    let mut seen = HashSet::new();
    let mut pooled = WardRoster {
        name: String::new(),
        total_shifts: 0,
        suspect_shifts: 0,
        total_incidents: 0,
        suspect_incidents: 0,
        nurse_count: None,
    };
    let mut labels = Vec::with_capacity(names.len());
    for name in names {
        let name = name.as_ref();
        if !seen.insert(name) {
            return Err(Error::Domain(format!("ward `{name}` listed twice")));
        }
        let w = case.ward(name)?;
        pooled.total_shifts += w.total_shifts;
        pooled.suspect_shifts += w.suspect_shifts;
        pooled.total_incidents += w.total_incidents;
        pooled.suspect_incidents += w.suspect_incidents;
        labels.push(name);
    }
    if names.len() == 1 {
        return Ok(case.ward(names[0].as_ref())?.clone());
    }
    pooled.name = labels.join("+");
    Ok(pooled)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reference_variants() {
        let c = builtin_case(Variant::Corrected);
        let o = builtin_case(Variant::Original);
        assert_eq!(c.ward("RKZ-41").unwrap().suspect_shifts, 3);
        assert_eq!(o.ward("RKZ-41").unwrap().suspect_shifts, 1);
        assert_eq!(c.ward("JKZ").unwrap(), o.ward("JKZ").unwrap());
        assert_eq!(c.ward("RKZ-42").unwrap(), o.ward("RKZ-42").unwrap());
        assert_eq!(c.ward("JKZ").unwrap().nurse_count, Some(27));
        c.validate().unwrap();
        o.validate().unwrap();
    }

    #[test]
    fn pooled_rkz_counts() {
        let p = pool_wards(&builtin_case(Variant::Corrected), &["RKZ-41", "RKZ-42"]).unwrap();
        assert_eq!(
            (p.total_shifts, p.suspect_shifts, p.total_incidents, p.suspect_incidents),
            (675, 61, 19, 6)
        );
        assert_eq!(p.nurse_count, None);
        assert_eq!(p.name, "RKZ-41+RKZ-42");
    }

    #[test]
    fn pool_errors() {
        let c = builtin_case(Variant::Corrected);
        assert!(pool_wards::<&str>(&c, &[]).is_err());
        assert!(matches!(pool_wards(&c, &["ICU"]), Err(Error::UnknownWard(_))));
        assert!(pool_wards(&c, &["JKZ", "JKZ"]).is_err());
        assert_eq!(&pool_wards(&c, &["JKZ"]).unwrap(), c.ward("JKZ").unwrap());
    }

    #[test]
    fn validation_names_field() {
        let err = WardRoster::new("W", 10, 12, 1, 0).unwrap_err();
        assert_eq!(
            err,
            Error::Validation {
                ward: "W".into(),
                field: "suspect_shifts".into(),
                message: "suspect_shifts exceeds total_shifts".into(),
            }
        );
        assert!(WardRoster::new("W", 10, 2, 3, 3).is_err());
        assert!(WardRoster::new("W", 10, 2, 11, 0).is_err());
        assert!(WardRoster::new("W", 10, 8, 5, 0).is_err());
        assert!(WardRoster::new("W", 0, 0, 0, 0).is_err());
        assert!(WardRoster::new("W", 10, 2, 1, 0).unwrap().with_nurse_count(0).is_err());
    }

    #[test]
    fn parse_reports_line() {
        let text = "case_name = \"x\"\nsuspect = \"s\"\nvariant = \"corrected\"\n[[wards]]\nname = \"A\"\ntotal_shifts = ten\n";
        match parse_case(text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 6),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn parse_rejects_unknown_keys_and_empty_cases() {
        let base = "case_name = \"x\"\nsuspect = \"s\"\nvariant = \"corrected\"\n";
        let extra = format!("{base}colour = \"red\"\n[[wards]]\nname = \"A\"\ntotal_shifts = 4\nsuspect_shifts = 1\ntotal_incidents = 1\nsuspect_incidents = 0\n");
        assert!(matches!(parse_case(&extra), Err(Error::Parse { .. })));
        let ward_extra = format!("{base}[[wards]]\nname = \"A\"\ntotal_shifts = 4\nsuspect_shifts = 1\ntotal_incidents = 1\nsuspect_incidents = 0\nshift_kind = 2\n");
        assert!(matches!(parse_case(&ward_extra), Err(Error::Parse { .. })));
        let empty = format!("{base}wards = []\n");
        assert!(matches!(parse_case(&empty), Err(Error::InvalidCase(_))));
        let dup = format!("{base}[[wards]]\nname = \"A\"\ntotal_shifts = 4\nsuspect_shifts = 1\ntotal_incidents = 1\nsuspect_incidents = 0\n[[wards]]\nname = \"A\"\ntotal_shifts = 4\nsuspect_shifts = 1\ntotal_incidents = 1\nsuspect_incidents = 0\n");
        assert!(matches!(parse_case(&dup), Err(Error::InvalidCase(_))));
    }

    #[test]
    fn normal_rate_sanity_bound() {
        assert!(NormalRateData::new(10, 100, "ok").is_ok());
        assert!(NormalRateData::new(10, 101, "too many").is_err());
    }
}
