//! Relative risk of a nurse and the Monte Carlo null distribution of the
//! largest relative risk in a ward of nurses with equal shift counts.
//!
//! Each replicate draws `I` independent `Poisson(mu * r)` counts. With equal
//! shifts the nurse with the most incidents has the largest relative risk,
//! `R = k_max (I - 1) / (sum k - k_max)`. The p-value is the fraction of
//! replicates whose largest relative risk reaches the observed one.
//!
//! Replicate `i` draws from a ChaCha8 stream keyed by the master seed and
//! positioned at stream `i`, so results do not depend on how replicates are
//! spread over threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use rayon::prelude::*;
use serde::Serialize;

use crate::case::WardRoster;
use crate::distributions::{poisson_ln_pmf, CompensatedSum};
use crate::error::{domain, Error, Result};
use crate::poisson::{estimate_mu, IntensityBasis, IntensityEstimate};

pub const DEFAULT_REPLICATES: u64 = 100_000;
pub const DEFAULT_SEED: u64 = 20_040_618;

/// Largest truncated Poisson mass tolerated by [`exact_max_rr_tail`].
pub const TRUNCATION_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RelativeRisk {
    /// `f64::INFINITY` when only the nurse in question had incidents.
    pub value: f64,
    pub suspect_rate: f64,
    pub others_rate: f64,
}

/// `(k_j / r_j) / (k_others / r_others)`; 1 when nobody had incidents.
pub fn relative_risk(k_j: u64, r_j: u64, k_others: u64, r_others: u64) -> Result<RelativeRisk> {
    if r_j == 0 || r_others == 0 {
        return domain("relative risk needs at least one shift on each side");
    }
    let suspect_rate = k_j as f64 / r_j as f64;
    let others_rate = k_others as f64 / r_others as f64;
    let value = match (k_j, k_others) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        _ => (k_j as f64 * r_others as f64) / (r_j as f64 * k_others as f64),
    };
    Ok(RelativeRisk {
        value,
        suspect_rate,
        others_rate,
    })
}

/// Relative risk of nurse `j` when all nurses worked the same number of shifts.
pub fn equal_shift_rr(counts: &[u64], j: usize) -> Result<f64> {
    if counts.len() < 2 {
        return domain("equal-shift relative risk needs at least two nurses");
    }
    let k_j = *counts
        .get(j)
        .ok_or_else(|| Error::Domain(format!("nurse index {j} out of range")))?;
    let total: u64 = counts.iter().sum();
    Ok(max_rr_from_totals(k_j, total, counts.len() as u64))
}

fn max_rr_from_totals(k_j: u64, total: u64, nurses: u64) -> f64 {
    let others = total - k_j;
    match (k_j, others) {
        (0, 0) => 1.0,
        (_, 0) => f64::INFINITY,
        _ => k_j as f64 / others as f64 * (nurses - 1) as f64,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SimulationConfig {
    pub nurse_count: u64,
    pub shifts_per_nurse: u64,
    pub mu: f64,
    pub replicates: u64,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.nurse_count < 2 {
            return domain("simulation needs at least two nurses");
        }
        if self.shifts_per_nurse == 0 {
            return domain("shifts_per_nurse must be positive");
        }
        if !(self.mu.is_finite() && self.mu > 0.0) {
            return domain(format!("intensity {} must be finite and > 0", self.mu));
        }
        if self.replicates == 0 {
            return domain("replicates must be positive");
        }
        Ok(())
    }

    pub fn expected_per_nurse(&self) -> f64 {
        self.mu * self.shifts_per_nurse as f64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationReport {
    pub config: SimulationConfig,
    pub threshold: f64,
    pub exceed_count: u64,
    pub p_value: f64,
    pub std_error: f64,
    /// Replicates with no incidents at all; every relative risk is then 1.
    pub degenerate_count: u64,
}

#[derive(Default, Clone, Copy)]
struct Tally {
    exceed: u64,
    degenerate: u64,
}

impl std::ops::Add for Tally {
    type Output = Tally;
    fn add(self, o: Tally) -> Tally {
        Tally {
            exceed: self.exceed + o.exceed,
            degenerate: self.degenerate + o.degenerate,
        }
    }
}

fn replicate_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn run_replicate(cfg: &SimulationConfig, poisson: &Poisson<f64>, threshold: f64, index: u64) -> Tally {
    let mut rng = replicate_rng(cfg.seed, index);
    let mut total = 0u64;
    let mut max = 0u64;
    for _ in 0..cfg.nurse_count {
        let k = poisson.sample(&mut rng) as u64;
        total += k;
        max = max.max(k);
    }
    Tally {
        exceed: u64::from(max_rr_from_totals(max, total, cfg.nurse_count) >= threshold),
        degenerate: u64::from(total == 0),
    }
}

/// Simulates on the global rayon pool.
pub fn simulate_max_rr(cfg: &SimulationConfig, threshold: f64) -> Result<SimulationReport> {
    simulate(cfg, threshold, None)
}

/// Simulates on a dedicated pool of `workers` threads.
pub fn simulate_max_rr_with_workers(
    cfg: &SimulationConfig,
    threshold: f64,
    workers: usize,
) -> Result<SimulationReport> {
    if workers == 0 {
        return domain("at least one worker is needed");
    }
    simulate(cfg, threshold, Some(workers))
}

fn simulate(cfg: &SimulationConfig, threshold: f64, workers: Option<usize>) -> Result<SimulationReport> {
    cfg.validate()?;
    if threshold.is_nan() || threshold < 0.0 {
        return domain(format!("threshold {threshold} must be >= 0"));
    }
    let poisson = Poisson::new(cfg.expected_per_nurse())
        .map_err(|e| Error::Domain(format!("Poisson({}): {e}", cfg.expected_per_nurse())))?;
    let work = || {
        (0..cfg.replicates)
            .into_par_iter()
            .map(|i| run_replicate(cfg, &poisson, threshold, i))
            .reduce(Tally::default, |a, b| a + b)
    };
    let tally = match workers {
        None => work(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::Internal(format!("thread pool: {e}")))?
            .install(work),
    };
    let p = tally.exceed as f64 / cfg.replicates as f64;
    Ok(SimulationReport {
        config: *cfg,
        threshold,
        exceed_count: tally.exceed,
        p_value: p,
        std_error: (p * (1.0 - p) / cfg.replicates as f64).sqrt(),
        degenerate_count: tally.degenerate,
    })
}

/// Exact `P(max RR >= threshold)` by enumerating every count vector in
/// `[0, cap]^I`, for small `I`. Fails if the Poisson mass beyond `cap` is not
/// negligible.
pub fn exact_max_rr_tail(
    nurse_count: u64,
    shifts_per_nurse: u64,
    mu: f64,
    threshold: f64,
    count_cap: u64,
) -> Result<f64> {
    if !(2..=4).contains(&nurse_count) {
        return domain("exact enumeration supports 2 to 4 nurses");
    }
    if threshold.is_nan() || threshold < 0.0 {
        return domain(format!("threshold {threshold} must be >= 0"));
    }
    let mean = mu * shifts_per_nurse as f64;
    let pmf: Vec<f64> = (0..=count_cap)
        .map(|k| poisson_ln_pmf(mean, k).map(f64::exp))
        .collect::<Result<_>>()?;
    let kept: CompensatedSum = pmf.iter().copied().collect();
    let dropped = (1.0 - kept.value()).max(0.0) * nurse_count as f64;
    if dropped >= TRUNCATION_TOLERANCE {
        return domain(format!(
            "count cap {count_cap} drops {dropped:e} of the mass; raise the cap"
        ));
    }
    let width = count_cap + 1;
    let cells = width.pow(nurse_count as u32);
    let mut sum = CompensatedSum::new();
    let mut counts = vec![0u64; nurse_count as usize];
    for cell in 0..cells {
        let mut rest = cell;
        for c in counts.iter_mut() {
            *c = rest % width;
            rest /= width;
        }
        let total: u64 = counts.iter().sum();
        let max = *counts.iter().max().expect("nonempty");
        if max_rr_from_totals(max, total, nurse_count) >= threshold {
            sum.add(counts.iter().map(|&k| pmf[k as usize]).product());
        }
    }
    crate::distributions::clamp_probability(sum.value())
}

/// How the simulated ward was sized from a roster.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DerivedConfig {
    pub config: SimulationConfig,
    pub intensity: IntensityEstimate,
    /// `n / r` before rounding.
    pub exact_nurse_count: f64,
    pub floor_nurse_count: u64,
    /// Relative risk of the suspect in the actual roster.
    pub observed_rr: RelativeRisk,
}

/// Sizes a simulation after a roster: every nurse works the suspect's `r`
/// shifts and `I = round(n / r)`.
pub fn derive_sim_config(
    ward: &WardRoster,
    basis: IntensityBasis,
    replicates: u64,
    seed: u64,
) -> Result<DerivedConfig> {
    if ward.suspect_shifts == 0 {
        return domain(format!("ward {}: the suspect has no shifts", ward.name));
    }
    let exact = ward.total_shifts as f64 / ward.suspect_shifts as f64;
    let floor = ward.total_shifts / ward.suspect_shifts;
    let remainder = ward.total_shifts % ward.suspect_shifts;
    // round half up, in integers
    let nurses = if 2 * remainder >= ward.suspect_shifts { floor + 1 } else { floor };
    let intensity = estimate_mu(ward, basis, None)?;
    let config = SimulationConfig {
        nurse_count: nurses,
        shifts_per_nurse: ward.suspect_shifts,
        mu: intensity.mu(),
        replicates,
        seed,
    };
    config.validate()?;
    let observed_rr = relative_risk(
        ward.suspect_incidents,
        ward.suspect_shifts,
        ward.other_incidents(),
        ward.other_shifts(),
    )?;
    Ok(DerivedConfig {
        config,
        intensity,
        exact_nurse_count: exact,
        floor_nurse_count: floor,
        observed_rr,
    })
}
