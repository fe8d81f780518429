//! Acceptance criteria for the reference roster. Prints one PASS/FAIL line
//! per criterion and exits nonzero if any fails.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive};

use coincidence::bayes::{chain_both_conventions, reference_evidence, PriorConvention};
use coincidence::case::{builtin_case, pool_wards, Variant};
use coincidence::distributions::{hypergeom_tail, DiscreteDist, convolve_tail};
use coincidence::frequentist::{elffers_pipeline, fisher_combine};
use coincidence::poisson::{
    conditional_binomial_test, lr_poisson, Direction, IntensityEstimate, SuspectIntensity,
    VerbalBand,
};
use coincidence::relative_risk::{
    derive_sim_config, exact_max_rr_tail, relative_risk, simulate_max_rr,
    simulate_max_rr_with_workers, SimulationConfig,
};
use coincidence::reproduce::{
    fisher_uniformity_ks, hypergeom_normalization_error, p_cancellation_error, rounds_to,
    simulation_cell, SIMULATION_TABLE, SIMULATION_TOLERANCE,
};

const SEED: u64 = 20_040_618;
const REPLICATES: u64 = 100_000;

fn choose(n: u64, k: u64) -> BigInt {
    (0..k).fold(BigInt::one(), |acc, i| acc * BigInt::from(n - i) / BigInt::from(i + 1))
}

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let tail = hypergeom_tail(1029, 142, 8, 8).unwrap();
    let exact = BigRational::new(choose(142, 8) * 27, choose(1029, 8));
    let bound = BigRational::new(1.into(), 300_000.into());
    let f_ok = 27.0 * tail < 1.0 / 300_000.0;
    let exact_ok = exact < bound;
    let agree = (27.0 * tail / exact.to_f64().unwrap() - 1.0).abs() < 1e-12;
    outcome(
        f_ok && exact_ok && agree,
        format!("27 x P(X >= 8 | 1029, 142, 8) = {:.6e} < 1/300000 = {:.6e} (exact rational agrees: {agree})", 27.0 * tail, 1.0 / 300_000.0),
    )
}

fn criterion_2() -> Outcome {
    let p = hypergeom_tail(675, 61, 19, 6).unwrap();
    outcome(rounds_to(p, 0.0038, 2), format!("P(X >= 6 | 675, 61, 19) = {p:.6e}; expected 0.0038 at 2 significant figures"))
}

fn criterion_3() -> Outcome {
    let d1 = DiscreteDist::hypergeometric(336, 3, 5).unwrap();
    let d2 = DiscreteDist::hypergeometric(339, 58, 14).unwrap();
    let p = convolve_tail(&d1, &d2, 6).unwrap();
    outcome(rounds_to(p, 0.022, 2), format!("P(X1 + X2 >= 6) = {p:.6e}; expected 0.022 at 2 significant figures"))
}

fn criterion_4() -> Outcome {
    let mu_l = SuspectIntensity::observed_rate(6, 61).unwrap();
    let case1 = lr_poisson(&IntensityEstimate::fixed(13.0 / 614.0).unwrap(), &mu_l, 61, 6).unwrap();
    let case2 = lr_poisson(&IntensityEstimate::fixed(19.0 / 675.0).unwrap(), &mu_l, 61, 6).unwrap();
    let slight = |lr: &coincidence::poisson::LikelihoodRatio| {
        lr.verbal.band == VerbalBand::SlightlyMoreLikely
            && lr.direction == Direction::FavorsProsecution
            && lr.verbal.text.contains("slightly more likely under H_p")
    };
    let pass = (case1.value - 90.7).abs() <= 0.05
        && (24.5..=25.5).contains(&case2.value)
        && slight(&case1)
        && slight(&case2);
    outcome(
        pass,
        format!(
            "LR(mu = 13/614) = {:.4} (90.7 +/- 0.05), LR(mu = 19/675) = {:.4} (in [24.5, 25.5]); bands: \"{}\" / \"{}\"",
            case1.value, case2.value, case1.verbal.text, case2.verbal.text
        ),
    )
}

fn criterion_5() -> Outcome {
    let states = chain_both_conventions(1e-5, &reference_evidence()).unwrap();
    let (conv, shortcut) = &states[0];
    assert_eq!(*conv, PriorConvention::ProbabilityAsOdds);
    let odds = shortcut.posterior_odds();
    let prob = shortcut.posterior_probability();
    let strict = states[1].1.posterior_odds();
    let pass = ((odds - 8.75) / 8.75).abs() <= 1e-12 && (0.897..=0.898).contains(&prob);
    outcome(
        pass,
        format!("posterior odds = {odds} (8.75), posterior probability = {prob:.6} (in [0.897, 0.898]); strict prior odds give {strict:.6}"),
    )
}

fn criterion_6() -> Outcome {
    let rr = relative_risk(6, 61, 13, 614).unwrap().value;
    outcome((4.64..=4.66).contains(&rr), format!("relative_risk(6, 61, 13, 614) = {rr:.6} (in [4.64, 4.66])"))
}

fn criterion_7() -> Outcome {
    let mut cells = Vec::new();
    let mut pass = true;
    for (label, names, basis, published) in SIMULATION_TABLE {
        let p = simulation_cell(names, basis, REPLICATES, SEED).unwrap();
        pass &= (p - published).abs() <= SIMULATION_TOLERANCE;
        cells.push(format!("{label} {basis}: {p:.4} vs {published}"));
    }
    let whole_exclude = simulation_cell(SIMULATION_TABLE[0].1, SIMULATION_TABLE[0].2, REPLICATES, SEED).unwrap();
    let whole_include = simulation_cell(SIMULATION_TABLE[1].1, SIMULATION_TABLE[1].2, REPLICATES, SEED).unwrap();
    let ordered = whole_include < whole_exclude;
    outcome(
        pass && ordered,
        format!("{} (each within +/- {SIMULATION_TOLERANCE}); p(19/675) < p(13/614): {ordered}", cells.join("; ")),
    )
}

fn criterion_8() -> Outcome {
    let t = elffers_pipeline(&builtin_case(Variant::Original), "JKZ", 27).unwrap();
    let v = t.value();
    outcome(
        v < 1e-7 && (1e-10..=1e-7).contains(&v) && t.p_value().is_none(),
        format!("product of tails (original data, JKZ x 27) = {v:.4e}, in [1e-10, 1e-7]; published: less than 1 in 342 million ({:.3e})", 1.0 / 342e6),
    )
}

fn criterion_9() -> Outcome {
    let mut parts = Vec::new();
    let norm = hypergeom_normalization_error(30).unwrap();
    let mut pass = norm <= 1e-12;
    parts.push(format!("normalization error {norm:.1e}"));
    for p in [0.1, 0.5, 0.9] {
        let e = p_cancellation_error(30, p).unwrap();
        pass &= e <= 1e-10;
        parts.push(format!("p-cancellation (p = {p}) {e:.1e}"));
    }
    let ks = fisher_uniformity_ks(10_000, SEED).unwrap();
    pass &= ks < 0.02;
    parts.push(format!("KS {ks:.4}"));
    let single = [0.37, 1e-6, 1.0]
        .iter()
        .all(|&p| (fisher_combine(&[p]).unwrap().value() - p).abs() <= 1e-12);
    pass &= single;
    parts.push(format!("fisher([p]) = p: {single}"));
    for (nurses, mean, threshold) in [(2u64, 1.0, 2.0), (3, 1.0, 2.5), (3, 2.0, 3.0)] {
        let cfg = SimulationConfig { nurse_count: nurses, shifts_per_nurse: 1, mu: mean, replicates: REPLICATES, seed: SEED };
        let sim = simulate_max_rr(&cfg, threshold).unwrap().p_value;
        let exact = exact_max_rr_tail(nurses, 1, mean, threshold, 40).unwrap();
        let se = (exact * (1.0 - exact) / REPLICATES as f64).sqrt();
        let ok = (sim - exact).abs() <= 4.0 * se;
        pass &= ok;
        parts.push(format!("I={nurses}, mu r={mean}: sim {sim:.4} vs exact {exact:.4} ({:.1} SE)", (sim - exact).abs() / se));
    }
    let ward = pool_wards(&builtin_case(Variant::Corrected), &["RKZ-41", "RKZ-42"]).unwrap();
    let d = derive_sim_config(&ward, coincidence::poisson::IntensityBasis::ExcludeSuspect, REPLICATES, SEED).unwrap();
    let runs: Vec<_> = [1, 2, 8]
        .into_iter()
        .map(|w| simulate_max_rr_with_workers(&d.config, d.observed_rr.value, w).unwrap())
        .collect();
    let identical = runs.windows(2).all(|w| w[0] == w[1]);
    pass &= identical;
    parts.push(format!("identical on 1/2/8 workers: {identical}"));
    outcome(pass, parts.join("; "))
}

fn criterion_10() -> Outcome {
    let ward = pool_wards(&builtin_case(Variant::Corrected), &["RKZ-41", "RKZ-42"]).unwrap();
    let binom = conditional_binomial_test(&ward, None).unwrap().value();
    let hyper = hypergeom_tail(675, 61, 19, 6).unwrap();
    let ratio = binom / hyper;
    outcome(
        (1.0 / 1.5..=1.5).contains(&ratio),
        format!("conditional binomial {binom:.6e} vs pooled hypergeometric {hyper:.6e}: ratio {ratio:.4} (within a factor of 1.5)"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("JKZ post-hoc bound", criterion_1),
        ("pooled RKZ test", criterion_2),
        ("convolved-sum test", criterion_3),
        ("Poisson likelihood ratios", criterion_4),
        ("Bayes chain", criterion_5),
        ("relative risk", criterion_6),
        ("simulation table", criterion_7),
        ("product-of-tails pipeline", criterion_8),
        ("property suites", criterion_9),
        ("conditional binomial", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("{} criterion {:>2} ({name}): {}", if o.pass { "PASS" } else { "FAIL" }, i + 1, o.detail);
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
