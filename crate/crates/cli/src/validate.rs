//! Oracle suites that cross-check the closed forms against brute force.

use std::fmt;
use std::time::{Duration, Instant};

use mh154_model::csma_chain::{build_chain_oracle, closed_form, total_mass, ChainInputs};
use mh154_model::model_config::{derive_timing, ProtocolParams, TrafficParams};
use mh154_model::neighborhood::{some_sending, some_sending_powerset_oracle, union, CollisionBreakdown, LinkActivity};
use mh154_model::reliability::{
    build_retrans_chain, link_reliability, link_reliability_by_paths, RepeatedCollision,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::CliError;

pub const DEFAULT_SEED: u64 = 802_154;

pub const CHAIN_TOL: f64 = 1e-9;
pub const NORMALIZATION_TOL: f64 = 1e-9;
pub const POWERSET_TOL: f64 = 1e-12;
pub const RETRANS_TOL: f64 = 1e-12;

pub const ALPHAS: [f64; 10] = [0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9];
pub const P_NOACKS: [f64; 4] = [0.0, 0.25, 0.5, 0.9];
pub const P_SENDS: [f64; 3] = [0.01, 0.5, 0.99];
pub const BACKOFF_EXPONENTS: [(u32, u32); 3] = [(3, 5), (0, 0), (2, 7)];
pub const MAX_BACKOFFS: [u32; 2] = [0, 4];
pub const MAX_RETRIES: [u32; 2] = [0, 3];

pub const POWERSET_DRAWS: usize = 1000;
pub const POWERSET_MAX_SET: usize = 10;
pub const RETRANS_DRAWS: usize = 100;
pub const RETRANS_MAX_RETRIES: u32 = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Chain,
    Powerset,
    Retrans,
    All,
}

/// Largest deviation seen by one oracle comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteReport {
    pub name: &'static str,
    pub cases: usize,
    pub max_error: f64,
    pub tolerance: f64,
    /// Description of the case with the largest error.
    pub worst_case: String,
    pub elapsed: Duration,
}

impl SuiteReport {
    fn new(name: &'static str, tolerance: f64) -> Self {
        SuiteReport { name, cases: 0, max_error: 0.0, tolerance, worst_case: String::new(), elapsed: Duration::ZERO }
    }

    fn record(&mut self, error: f64, case: impl FnOnce() -> String) {
        self.cases += 1;
        if error.is_nan() || error > self.max_error || self.worst_case.is_empty() {
            self.max_error = if error.is_nan() { f64::INFINITY } else { error.max(self.max_error) };
            self.worst_case = case();
        }
    }

    pub fn passed(&self) -> bool {
        self.max_error <= self.tolerance
    }
}

impl fmt::Display for SuiteReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{:<14} {} cases={} max_error={:.3e} tol={:.0e} time={:.2}s worst=[{}]",
            self.name,
            if self.passed() { "ok  " } else { "FAIL" },
            self.cases,
            self.max_error,
            self.tolerance,
            self.elapsed.as_secs_f64(),
            self.worst_case
        )
    }
}

/// Closed-form chain against the explicit stationary solve, plus the
/// normalization of the closed form, over the full parameter grid.
pub fn chain_suite() -> Result<Vec<SuiteReport>, CliError> {
    let start = Instant::now();
    let mut equiv = SuiteReport::new("chain", CHAIN_TOL);
    let mut norm = SuiteReport::new("normalization", NORMALIZATION_TOL);
    let traffic = TrafficParams::new(1.0, 1.0);
    for (min_be, max_be) in BACKOFF_EXPONENTS {
        for m in MAX_BACKOFFS {
            for n in MAX_RETRIES {
                let params = ProtocolParams {
                    mac_min_be: min_be,
                    mac_max_be: max_be,
                    mac_max_csma_backoffs: m,
                    mac_max_frame_retries: n,
                    ..Default::default()
                };
                let timing = derive_timing(&params, &traffic, 2)?;
                for alpha in ALPHAS {
                    for p_noack in P_NOACKS {
                        for p_send in P_SENDS {
                            let exact = ChainInputs::new(alpha, p_noack, p_send, &params, &timing);
                            let inputs = exact.with_integer_durations();
                            let case = || {
                                format!(
                                    "alpha={alpha} p_noack={p_noack} p_send={p_send} be=({min_be},{max_be}) m={m} n={n}"
                                )
                            };
                            let closed = closed_form(&inputs)?;
                            let oracle = build_chain_oracle(&inputs)?;
                            let err = (closed.tau - oracle.tau())
                                .abs()
                                .max((closed.b000 - oracle.b000()).abs())
                                .max((closed.idle - oracle.idle()).abs());
                            equiv.record(err, case);
                            let mass = (total_mass(&inputs)? - 1.0).abs().max((total_mass(&exact)? - 1.0).abs());
                            norm.record(mass, case);
                        }
                    }
                }
            }
        }
    }
    equiv.elapsed = start.elapsed();
    norm.elapsed = equiv.elapsed;
    Ok(vec![equiv, norm])
}

/// Product form of "some link starts sending" against the subset sum.
pub fn powerset_suite(seed: u64) -> Result<SuiteReport, CliError> {
    let start = Instant::now();
    let mut report = SuiteReport::new("powerset", POWERSET_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for draw in 0..POWERSET_DRAWS {
        let size = rng.gen_range(0..=POWERSET_MAX_SET);
        let state: Vec<LinkActivity> =
            (0..size).map(|_| LinkActivity { tau: rng.gen(), alpha: rng.gen() }).collect();
        let ids: Vec<usize> = (0..size).collect();
        let err = (some_sending(&ids, &state)? - some_sending_powerset_oracle(&ids, &state)?).abs();
        report.record(err, || format!("draw={draw} seed={seed} size={size}"));
    }
    report.elapsed = start.elapsed();
    Ok(report)
}

/// Matrix power against path enumeration on random retransmission chains,
/// plus the row sums of every chain.
pub fn retrans_suite(seed: u64) -> Result<Vec<SuiteReport>, CliError> {
    let start = Instant::now();
    let mut equiv = SuiteReport::new("retrans", RETRANS_TOL);
    let mut rows = SuiteReport::new("retrans-rows", RETRANS_TOL);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for draw in 0..RETRANS_DRAWS {
        let mutual_hidden = rng.gen_range(0.0..0.5);
        let mutual_visible = rng.gen_range(0.0..0.5);
        let mutual = union(&[mutual_hidden, mutual_visible]);
        let breakdown = CollisionBreakdown {
            p_lost_packet: mutual + (1.0 - mutual) * rng.gen::<f64>(),
            mutual_hidden,
            mutual_visible,
            alpha: rng.gen(),
            ..Default::default()
        };
        let repeat = RepeatedCollision { p_bc1: rng.gen(), p_bsc1: rng.gen(), omega: 0.0 };
        let params = ProtocolParams { mac_max_csma_backoffs: rng.gen_range(0..=5), ..Default::default() };
        let n = rng.gen_range(0..=RETRANS_MAX_RETRIES);
        let case = || format!("draw={draw} seed={seed} n={n}");

        let chain = build_retrans_chain(&breakdown, &repeat, &params)?;
        let row_defect = chain.transitions.iter().map(|r| (r.iter().sum::<f64>() - 1.0).abs()).fold(0.0, f64::max);
        rows.record(row_defect, case);
        equiv.record((link_reliability(&chain, n) - link_reliability_by_paths(&chain, n)).abs(), case);
    }
    equiv.elapsed = start.elapsed();
    rows.elapsed = equiv.elapsed;
    Ok(vec![equiv, rows])
}

pub fn run(suite: Suite, seed: u64) -> Result<Vec<SuiteReport>, CliError> {
    let mut reports = Vec::new();
    if matches!(suite, Suite::Chain | Suite::All) {
        reports.extend(chain_suite()?);
    }
    if matches!(suite, Suite::Powerset | Suite::All) {
        reports.push(powerset_suite(seed)?);
    }
    if matches!(suite, Suite::Retrans | Suite::All) {
        reports.extend(retrans_suite(seed)?);
    }
    Ok(reports)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn record_keeps_worst_case() {
        let mut r = SuiteReport::new("t", 1e-3);
        r.record(1e-5, || "a".into());
        r.record(1e-4, || "b".into());
        r.record(1e-6, || "c".into());
        assert_eq!((r.cases, r.max_error, r.worst_case.as_str()), (3, 1e-4, "b"));
        assert!(r.passed());
        r.record(f64::NAN, || "nan".into());
        assert!(!r.passed());
        assert_eq!(r.worst_case, "nan");
    }

    #[test]
    fn small_suites_pass() {
        assert!(powerset_suite(DEFAULT_SEED).unwrap().passed());
        assert!(retrans_suite(1).unwrap().iter().all(SuiteReport::passed));
    }
}
