//! Recomputes every published figure for the reference roster and checks it
//! against the published value at a fixed tolerance.

use std::fmt::Write as _;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::bayes::{chain_both_conventions, reference_evidence};
use crate::case::{builtin_case, pool_wards, Variant};
use crate::distributions::{binomial_pmf, hypergeom_pmf, hypergeom_tail, CompensatedSum};
use crate::error::Result;
use crate::frequentist::{convolved_sum_test, elffers_pipeline, fisher_combine, pooled_test};
use crate::poisson::{
    conditional_binomial_test, estimate_mu, lr_poisson, IntensityBasis, SuspectIntensity,
    VerbalBand,
};
use crate::relative_risk::{
    derive_sim_config, exact_max_rr_tail, relative_risk, simulate_max_rr, simulate_max_rr_with_workers,
    SimulationConfig, DEFAULT_REPLICATES,
};

/// One published figure and its recomputation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReproRow {
    pub label: String,
    pub published: String,
    pub computed: f64,
    pub tolerance: String,
    pub pass: bool,
}

impl ReproRow {
    fn new(label: &str, published: &str, computed: f64, tolerance: &str, pass: bool) -> Self {
        Self {
            label: label.to_owned(),
            published: published.to_owned(),
            computed,
            tolerance: tolerance.to_owned(),
            pass,
        }
    }
}

/// True when `value` and `target` agree to `digits` significant figures.
pub fn rounds_to(value: f64, target: f64, digits: usize) -> bool {
    let d = digits.saturating_sub(1);
    format!("{value:.d$e}") == format!("{target:.d$e}")
}

/// The six cells of the simulated relative-risk table: (ward label, wards
/// pooled, intensity basis, published p-value).
pub const SIMULATION_TABLE: [(&str, &[&str], IntensityBasis, f64); 6] = [
    ("whole RKZ", &["RKZ-41", "RKZ-42"], IntensityBasis::ExcludeSuspect, 0.121),
    ("whole RKZ", &["RKZ-41", "RKZ-42"], IntensityBasis::IncludeSuspect, 0.042),
    ("RKZ-41", &["RKZ-41"], IntensityBasis::ExcludeSuspect, 0.787),
    ("RKZ-41", &["RKZ-41"], IntensityBasis::IncludeSuspect, 0.681),
    ("RKZ-42", &["RKZ-42"], IntensityBasis::ExcludeSuspect, 0.383),
    ("RKZ-42", &["RKZ-42"], IntensityBasis::IncludeSuspect, 0.286),
];

pub const SIMULATION_TOLERANCE: f64 = 0.05;

/// Simulated p-value for one table cell at the given replicate count.
pub fn simulation_cell(names: &[&str], basis: IntensityBasis, replicates: u64, seed: u64) -> Result<f64> {
    let case = builtin_case(Variant::Corrected);
    let ward = pool_wards(&case, names)?;
    let derived = derive_sim_config(&ward, basis, replicates, seed)?;
    Ok(simulate_max_rr(&derived.config, derived.observed_rr.value)?.p_value)
}

/// Kolmogorov-Smirnov distance between Fisher-combined p-values of `triples`
/// independent uniform triples and the uniform distribution.
pub fn fisher_uniformity_ks(triples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ps = (0..triples)
        .map(|_| {
            // (0, 1]: avoid an exact zero component
            let u: [f64; 3] = std::array::from_fn(|_| 1.0 - rng.random::<f64>());
            fisher_combine(&u).map(|t| t.value())
        })
        .collect::<Result<Vec<_>>>()?;
    ps.sort_by(f64::total_cmp);
    let n = ps.len() as f64;
    Ok(ps
        .iter()
        .enumerate()
        .map(|(i, &p)| ((i as f64 + 1.0) / n - p).max(p - i as f64 / n))
        .fold(0.0, f64::max))
}

/// Largest `|sum_x pmf - 1|` over every valid `(n, r, k)` with `n <= max_n`.
pub fn hypergeom_normalization_error(max_n: u64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        for r in 0..=n {
            for k in 0..=n {
                let s: CompensatedSum = (0..=r.min(k))
                    .map(|x| hypergeom_pmf(n, r, k, x))
                    .collect::<Result<Vec<_>>>()?
                    .into_iter()
                    .collect();
                worst = worst.max((s.value() - 1.0).abs());
            }
        }
    }
    Ok(worst)
}

/// Largest relative gap between the unconditional binomial expression
/// `B(r,p)(x) B(n-r,p)(k-x) / B(n,p)(k)` and the hypergeometric pmf.
pub fn p_cancellation_error(max_n: u64, p: f64) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        for r in 0..=n {
            for k in 0..=n {
                let lo = k.saturating_sub(n - r);
                for x in lo..=r.min(k) {
                    let direct = binomial_pmf(r, p, x)? * binomial_pmf(n - r, p, k - x)?
                        / binomial_pmf(n, p, k)?;
                    let h = hypergeom_pmf(n, r, k, x)?;
                    worst = worst.max((direct - h).abs() / h);
                }
            }
        }
    }
    Ok(worst)
}

/// Runs every check. Monte Carlo rows use `seed`.
pub fn reproduce_paper(seed: u64) -> Result<Vec<ReproRow>> {
    let corrected = builtin_case(Variant::Corrected);
    let original = builtin_case(Variant::Original);
    let rkz = ["RKZ-41", "RKZ-42"];
    let mut rows = Vec::new();

    let jkz = 27.0 * hypergeom_tail(1029, 142, 8, 8)?;
    rows.push(ReproRow::new("JKZ tail x 27 nurses", "< 1/300,000", jkz, "strict <", jkz < 1.0 / 300_000.0));

    let pooled = pooled_test(&corrected, &rkz)?.value();
    rows.push(ReproRow::new("pooled RKZ tail (corrected data)", "0.0038", pooled, "2 significant figures", rounds_to(pooled, 0.0038, 2)));
    let pooled_orig = pooled_test(&original, &rkz)?.value();
    rows.push(ReproRow::new("pooled RKZ tail (original data)", "0.0038", pooled_orig, "2 significant figures", rounds_to(pooled_orig, 0.0038, 2)));

    let conv = convolved_sum_test(&corrected, &rkz)?.value();
    rows.push(ReproRow::new("convolved RKZ sum tail", "0.022", conv, "2 significant figures", rounds_to(conv, 0.022, 2)));

    let pool = pool_wards(&corrected, &rkz)?;
    let mu_l = SuspectIntensity::observed_rate(pool.suspect_incidents, pool.suspect_shifts)?;
    let lr1 = lr_poisson(&estimate_mu(&pool, IntensityBasis::ExcludeSuspect, None)?, &mu_l, pool.suspect_shifts, pool.suspect_incidents)?;
    let lr2 = lr_poisson(&estimate_mu(&pool, IntensityBasis::IncludeSuspect, None)?, &mu_l, pool.suspect_shifts, pool.suspect_incidents)?;
    rows.push(ReproRow::new("Poisson LR, mu = 13/614", "90.7", lr1.value, "+/- 0.05", (lr1.value - 90.7).abs() <= 0.05));
    rows.push(ReproRow::new("Poisson LR, mu = 19/675", "about 25", lr2.value, "[24.5, 25.5]", (24.5..=25.5).contains(&lr2.value)));
    let both_slight = [lr1.verbal.band, lr2.verbal.band].iter().all(|b| *b == VerbalBand::SlightlyMoreLikely);
    rows.push(ReproRow::new("verbal band of both LRs", "slightly more likely", f64::from(u8::from(both_slight)), "exact band", both_slight));

    let [(_, shortcut), (_, strict)] = chain_both_conventions(1e-5, &reference_evidence())?;
    let odds = shortcut.posterior_odds();
    rows.push(ReproRow::new("posterior odds (prior probability used as odds)", "8.75", odds, "1e-12 relative", ((odds - 8.75) / 8.75).abs() <= 1e-12));
    let prob = shortcut.posterior_probability();
    rows.push(ReproRow::new("posterior probability of guilt", "close to 90%", prob, "[0.897, 0.898]", (0.897..=0.898).contains(&prob)));
    let strict_odds = strict.posterior_odds();
    rows.push(ReproRow::new("posterior odds (strict p/(1-p) prior odds)", "roughly 8.75", strict_odds, "[8.74, 8.76]", (8.74..=8.76).contains(&strict_odds)));

    let rr = relative_risk(6, 61, 13, 614)?.value;
    rows.push(ReproRow::new("relative risk, whole RKZ", "4.65", rr, "[4.64, 4.66]", (4.64..=4.66).contains(&rr)));

    let mut whole = [0.0; 2];
    for (i, (label, names, basis, published)) in SIMULATION_TABLE.iter().enumerate() {
        let p = simulation_cell(names, *basis, DEFAULT_REPLICATES, seed)?;
        if i < 2 {
            whole[i] = p;
        }
        rows.push(ReproRow::new(
            &format!("simulated p-value, {label}, mu {basis}"),
            &published.to_string(),
            p,
            "+/- 0.05",
            (p - published).abs() <= SIMULATION_TOLERANCE,
        ));
    }
    rows.push(ReproRow::new("p(mu=19/675) < p(mu=13/614), whole RKZ", "0.042 < 0.121", whole[1] - whole[0], "difference < 0", whole[1] < whole[0]));

    let elf = elffers_pipeline(&original, "JKZ", 27)?.value();
    rows.push(ReproRow::new("product of tails (original data, x27)", "< 1 in 342 million", elf, "[1e-10, 1e-7]", (1e-10..=1e-7).contains(&elf)));
    let elf_c = elffers_pipeline(&corrected, "JKZ", 27)?.value();
    rows.push(ReproRow::new("product of tails (corrected data, x27)", "not published", elf_c, "reported only", true));

    let binom = conditional_binomial_test(&pool, None)?.value();
    let ratio = binom / pooled;
    rows.push(ReproRow::new("conditional binomial / pooled hypergeometric", "almost the same", ratio, "within a factor of 1.5", (1.0 / 1.5..=1.5).contains(&ratio)));

    let norm = hypergeom_normalization_error(30)?;
    rows.push(ReproRow::new("hypergeometric pmf sums to 1, n <= 30", "1", norm, "max error 1e-12", norm <= 1e-12));
    for p in [0.1, 0.5, 0.9] {
        let e = p_cancellation_error(30, p)?;
        rows.push(ReproRow::new(&format!("p cancels from the conditional law, p = {p}"), "identity", e, "max relative error 1e-10", e <= 1e-10));
    }
    let ks = fisher_uniformity_ks(10_000, seed)?;
    rows.push(ReproRow::new("Fisher combination of uniform triples is uniform", "KS distance", ks, "< 0.02", ks < 0.02));
    let single = fisher_combine(&[0.37])?.value();
    rows.push(ReproRow::new("Fisher combination of one p-value", "0.37", single, "1e-12", (single - 0.37).abs() <= 1e-12));

    for (nurses, mean, threshold) in [(2u64, 1.0, 2.0), (3, 1.0, 2.5), (3, 2.0, 3.0)] {
        let cfg = SimulationConfig { nurse_count: nurses, shifts_per_nurse: 1, mu: mean, replicates: DEFAULT_REPLICATES, seed };
        let sim = simulate_max_rr(&cfg, threshold)?;
        let exact = exact_max_rr_tail(nurses, 1, mean, threshold, 40)?;
        let se = (exact * (1.0 - exact) / cfg.replicates as f64).sqrt();
        let ok = (sim.p_value - exact).abs() <= 4.0 * se;
        rows.push(ReproRow::new(&format!("simulation vs exact, I={nurses}, mu r={mean}, threshold {threshold}"), &format!("{exact:.6}"), sim.p_value, "4 standard errors", ok));
    }

    let cfg = derive_sim_config(&pool, IntensityBasis::ExcludeSuspect, 20_000, seed)?;
    let runs = [1, 2, 8]
        .into_iter()
        .map(|w| simulate_max_rr_with_workers(&cfg.config, cfg.observed_rr.value, w))
        .collect::<Result<Vec<_>>>()?;
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    rows.push(ReproRow::new("simulation identical on 1, 2 and 8 workers", "identical", runs[0].p_value, "bit-identical", identical));

    Ok(rows)
}

pub fn render_rows(rows: &[ReproRow], seed: u64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "Reference roster reproduction (Monte Carlo seed {seed})");
    let _ = writeln!(out, "{:<58} {:>22} {:>24} {:>26}  result", "check", "published", "computed", "tolerance");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<58} {:>22} {:>24} {:>26}  {}",
            r.label,
            r.published,
            format!("{:.6e}", r.computed),
            r.tolerance,
            if r.pass { "PASS" } else { "FAIL" }
        );
    }
    let failed = rows.iter().filter(|r| !r.pass).count();
    let _ = writeln!(out, "{} of {} checks passed", rows.len() - failed, rows.len());
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rounding_helper() {
        assert!(rounds_to(0.0038215, 0.0038, 2));
        assert!(!rounds_to(0.004546, 0.0038, 2));
        assert!(rounds_to(0.021553, 0.022, 2));
        assert!(rounds_to(0.02249, 0.022, 2));
        assert!(!rounds_to(0.02251, 0.022, 2));
    }
}
