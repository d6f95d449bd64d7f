//! Validation suites; each check reports `name,measured,bound,pass`.

use std::fmt;

use anyhow::Result;
use grantfree_aoi::asymptotics::{aoi_ratio_asymptotic, optimal_ptx, solve_eta};
use grantfree_aoi::markov::{analyze, transitions};
use grantfree_aoi::oracle::{enumerate_noma_slot, enumerate_oma_slot};
use grantfree_aoi::sim::{empirical_aoi, simulate};
use grantfree_aoi::{feasibility_probability, Config, Power, Scheme};
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Suite {
    Oracle,
    RowSums,
    SimVsAnalytical,
    Constants,
    All,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    /// Human-readable acceptance bound, e.g. `<= 1e-9`.
    pub bound: String,
    pub pass: bool,
}

impl Check {
    fn at_most(name: &str, measured: f64, bound: f64) -> Self {
        Check { name: name.into(), measured, bound: format!("<= {bound:e}"), pass: measured <= bound }
    }

    fn near(name: &str, measured: f64, target: f64, tol: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            bound: format!("{target} +- {tol:e}"),
            pass: (measured - target).abs() <= tol,
        }
    }

    fn above(name: &str, measured: f64, floor: f64) -> Self {
        Check { name: name.into(), measured, bound: format!("> {floor}"), pass: measured > floor }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "pass" } else { "fail" };
        if self.measured != 0.0 && self.measured.abs() < 1e-4 {
            write!(f, "{},{:e},{},{verdict}", self.name, self.measured, self.bound)
        } else {
            write!(f, "{},{},{},{verdict}", self.name, self.measured, self.bound)
        }
    }
}

/// Monte Carlo settings for the simulation suite.
#[derive(Debug, Clone, Copy)]
pub struct SimSettings {
    pub frames: u64,
    pub seed: u64,
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings { frames: 1_000_000, seed: 1 }
    }
}

/// One compared entry of the closed-form-vs-enumeration grid.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleRow {
    pub remaining: usize,
    pub levels: usize,
    pub ptx: f64,
    /// Users advanced, or `absorb`.
    pub entry: String,
    pub closed_form: f64,
    pub enumerated: f64,
    pub abs_diff: f64,
}

/// Closed-form NOMA rows against exhaustive enumeration over
/// `M - j ∈ 1..=6`, `K ∈ 2..=4`, `ptx ∈ {0.3, 0.7, 1}`.
pub fn oracle_table() -> Result<Vec<OracleRow>> {
    let mut rows = Vec::new();
    for k in 2..=4 {
        for ptx in [0.3, 0.7, 1.0] {
            for remaining in 1..=6 {
                let model = transitions(&Config::noma(remaining, 1, k).with_fixed_ptx(ptx))?;
                let dist = enumerate_noma_slot(remaining, k, ptx, &vec![1.0; k])?;
                let mut push = |entry: String, closed_form: f64, enumerated: f64| {
                    rows.push(OracleRow {
                        remaining,
                        levels: k,
                        ptx,
                        entry,
                        closed_form,
                        enumerated,
                        abs_diff: (closed_form - enumerated).abs(),
                    })
                };
                for i in 0..=k.min(remaining - 1) {
                    push(i.to_string(), model.entry(0, i), dist.advance(i));
                }
                push("absorb".into(), model.absorb(0), dist.absorb());
            }
        }
    }
    Ok(rows)
}

/// Largest deviation of the exact OMA rows from the OMA oracle over
/// `P ∈ {1, 100, ∞}`, `M ∈ 2..=8`, `ptx ∈ {0.1, 0.5, 1}`.
pub fn oma_oracle_deviation() -> Result<f64> {
    let mut worst = 0.0_f64;
    for power in [Power::Finite(1.0), Power::Finite(100.0), Power::Infinite] {
        for m in 2..=8 {
            for ptx in [0.1, 0.5, 1.0] {
                let cfg = Config::oma(m, 1).with_fixed_ptx(ptx).with_power(power);
                let model = transitions(&cfg)?;
                let success = feasibility_probability(cfg.epsilon(), power);
                for j in 0..m {
                    let dist = enumerate_oma_slot(m - j, ptx, success)?;
                    worst = worst.max((model.entry(j, j) - dist.advance(0)).abs());
                    if j + 1 < m {
                        worst = worst.max((model.entry(j, j + 1) - dist.advance(1)).abs());
                    }
                    worst = worst.max((model.absorb(j) - dist.absorb()).abs());
                }
            }
        }
    }
    Ok(worst)
}

fn oracle_suite() -> Result<Vec<Check>> {
    let noma = oracle_table()?.iter().map(|r| r.abs_diff).fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("noma_closed_form_vs_enumeration", noma, 1e-9),
        Check::at_most("oma_rows_vs_enumeration", oma_oracle_deviation()?, 1e-12),
    ])
}

/// Largest `|P 1 + p - 1|` per scheme for `M` up to 200.
pub fn row_sum_deviation(scheme: Scheme) -> Result<f64> {
    let mut worst = 0.0_f64;
    for m in [2, 5, 10, 50, 100, 200] {
        match scheme {
            Scheme::Noma => {
                for k in 2..=4 {
                    for policy in [Some(0.01), Some(0.3), Some(1.0), None] {
                        let cfg = Config::noma(m, 1, k);
                        let cfg = match policy {
                            Some(p) => cfg.with_fixed_ptx(p),
                            None => cfg,
                        };
                        worst = worst.max(transitions(&cfg)?.max_row_deviation());
                    }
                }
            }
            Scheme::Oma => {
                for power in [Power::Finite(1.0), Power::Infinite] {
                    for policy in [Some(0.01), Some(0.5), None] {
                        let cfg = Config::oma(m, 1).with_power(power);
                        let cfg = match policy {
                            Some(p) => cfg.with_fixed_ptx(p),
                            None => cfg,
                        };
                        worst = worst.max(transitions(&cfg)?.max_row_deviation());
                    }
                }
            }
        }
    }
    Ok(worst)
}

fn row_sum_suite() -> Result<Vec<Check>> {
    Ok(vec![
        Check::at_most("noma_row_sum_deviation", row_sum_deviation(Scheme::Noma)?, 1e-9),
        Check::at_most("oma_row_sum_deviation", row_sum_deviation(Scheme::Oma)?, 1e-12),
    ])
}

/// Two levels, one slot, `M = 8`, optimal fixed probability.
pub fn special_case_config(scheme: Scheme, power: Power) -> Config {
    let m = 8;
    let cfg = match scheme {
        Scheme::Noma => Config::noma(m, 1, 2),
        Scheme::Oma => Config::oma(m, 1),
    };
    cfg.with_power(power).with_fixed_ptx(optimal_ptx(scheme, m))
}

/// Simulated and analytical AoI of one configuration; NOMA is analysed at high SNR.
pub fn sim_and_chain(cfg: &Config, sim: SimSettings) -> Result<(f64, f64)> {
    let est = empirical_aoi(&simulate(cfg, sim.frames, sim.seed)?)?;
    let chain_cfg = match cfg.scheme {
        Scheme::Noma => cfg.clone().with_power(Power::Infinite),
        Scheme::Oma => cfg.clone(),
    };
    Ok((est.mean, analyze(&chain_cfg)?.for_model(cfg.generation)))
}

fn sim_suite(sim: SimSettings) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    let mut rise = [0.0; 2];
    for (i, scheme) in [Scheme::Noma, Scheme::Oma].into_iter().enumerate() {
        let (high, chain) = sim_and_chain(&special_case_config(scheme, Power::Finite(100.0)), sim)?;
        checks.push(Check::at_most(&format!("{scheme}_sim_vs_analytical_rel_err"), (high - chain).abs() / chain, 0.03));
        let (low, _) = sim_and_chain(&special_case_config(scheme, Power::Finite(1.0)), sim)?;
        rise[i] = low - high;
    }
    checks.push(Check::above("oma_minus_noma_low_snr_aoi_increase_s", rise[1] - rise[0], 0.0));
    Ok(checks)
}

fn constants_suite() -> Vec<Check> {
    let eta = solve_eta::<f64>();
    let ratio: f64 = aoi_ratio_asymptotic();
    vec![
        Check::near("eta", eta.eta, 1.6646, 5e-4),
        Check::at_most("eta_residual", eta.residual.abs(), 1e-10),
        Check::near("asymptotic_ratio", ratio, 0.5653, 1e-3),
        Check { name: "asymptotic_ratio_below".into(), measured: ratio, bound: "< 0.6".into(), pass: ratio < 0.6 },
    ]
}

/// Runs a suite; only setup failures are errors, failed checks are reported.
pub fn validate(suite: Suite, sim: SimSettings) -> Result<Vec<Check>> {
    Ok(match suite {
        Suite::Oracle => oracle_suite()?,
        Suite::RowSums => row_sum_suite()?,
        Suite::SimVsAnalytical => sim_suite(sim)?,
        Suite::Constants => constants_suite(),
        Suite::All => {
            let mut all = constants_suite();
            all.extend(oracle_suite()?);
            all.extend(row_sum_suite()?);
            all.extend(sim_suite(sim)?);
            all
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fast_suites_pass() {
        for suite in [Suite::Constants, Suite::Oracle, Suite::RowSums] {
            let checks = validate(suite, SimSettings::default()).unwrap();
            assert!(checks.iter().all(|c| c.pass), "{checks:?}");
        }
    }

    #[test]
    fn oracle_table_covers_grid() {
        let rows = oracle_table().unwrap();
        // a lone tagged user delivers whenever it transmits
        let lone = rows.iter().find(|r| r.remaining == 1 && r.ptx == 0.7 && r.entry == "absorb").unwrap();
        assert!((lone.enumerated - 0.7).abs() < 1e-15);
        assert_eq!(rows.iter().filter(|r| r.entry == "absorb").count(), 3 * 3 * 6);
    }

    #[test]
    fn report_line_format() {
        let c = Check::at_most("x", 0.5, 1.0);
        assert_eq!(c.to_string(), "x,0.5,<= 1e0,pass");
        assert!(!Check::above("y", 0.0, 0.0).pass);
        assert_eq!(Check::at_most("z", 2.5e-13, 1e-9).to_string(), "z,2.5e-13,<= 1e-9,pass");
    }
}
