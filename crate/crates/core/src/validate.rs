//! Cross-checks between the simulator, the closed forms and the oracles.

use std::fmt;

use serde::Serialize;

use crate::analysis::mcs::{joint_masses, Link};
use crate::analysis::model::{all_geometry_stats, throughput_point};
use crate::config::Config;
use crate::error::Result;
use crate::montecarlo::{run_campaign, MetricsReport};
use crate::oracle::sampled_joint_masses;
use crate::rng::{rng_for, Stream};
use crate::scenario::{generate_geometry, Point};
use crate::slicing::SchemeKind;

pub const THROUGHPUT_TOLERANCE: f64 = 0.05;
pub const MCS_TOLERANCE: f64 = 1e-2;
pub const MCS_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub limit: f64,
    pub detail: String,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: measured {:.6} limit {:.6}{}{}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.measured,
            self.limit,
            if self.detail.is_empty() { "" } else { " | " },
            self.detail
        )
    }
}

/// Simulated vs closed-form throughput, one entry per load point:
/// (load, simulated, analytic, relative gap).
pub type Gaps = Vec<(f64, f64, f64, f64)>;

/// PRR-100% campaigns with and without RENEV next to their bounds.
pub fn throughput_gaps(config: &Config) -> Result<(Gaps, Gaps, Vec<MetricsReport>)> {
    let base = Config {
        scheme: SchemeKind::Prr { shared_fraction: 1.0 },
        ..config.clone()
    };
    let stats = all_geometry_stats(&base)?;
    let mut out = Vec::new();
    let mut reports = Vec::new();
    for renev in [true, false] {
        let c = Config { renev, ..base.clone() };
        let report = run_campaign(&c)?.report;
        let gaps = report
            .points
            .iter()
            .map(|p| {
                let a = throughput_point(&c, &stats, p.load_bps);
                let ana = if renev { a.T_R } else { a.T_NR };
                let sim = p.throughput_bps.mean;
                (p.load_bps, sim, ana, (sim - ana).abs() / ana.max(f64::MIN_POSITIVE))
            })
            .collect();
        out.push(gaps);
        reports.push(report);
    }
    let nr = out.pop().unwrap();
    let r = out.pop().unwrap();
    Ok((r, nr, reports))
}

/// Largest per-MCS gap between the integrated and the sampled masses, over
/// a handful of points of the first layout and every serving BS.
pub fn mcs_gap(config: &Config, samples: usize) -> Result<f64> {
    let table = config.mcs()?;
    let mut geo = rng_for(config.seed, Stream::Geometry, &[0]);
    let (_, stations) = generate_geometry(&config.scenario, &mut geo)?;
    let sc = &stations[1];
    let probes = [
        sc.position,
        Point::new(sc.position.x + 0.8 * sc.coverage_radius_m, sc.position.y),
        Point::new(sc.position.x * 0.5, sc.position.y * 0.5),
        Point::new(0.0, 0.9 * stations[0].coverage_radius_m),
    ];
    let mut worst: f64 = 0.0;
    for (pi, p) in probes.iter().enumerate() {
        let links: Vec<Link> = stations.iter().map(|b| Link::new(&config.channel, b, p)).collect();
        for s in 0..links.len() {
            let others: Vec<Link> = links
                .iter()
                .enumerate()
                .filter(|(k, _)| *k != s)
                .map(|(_, l)| *l)
                .collect();
            let exact = joint_masses(&links[s], &others, &table, config.analysis.mcs.tolerance);
            if exact.iter().sum::<f64>() < 1e-4 {
                continue;
            }
            let seed = config.seed ^ ((pi as u64) << 32 | s as u64);
            let mc = sampled_joint_masses(&links[s], &others, &table, samples, seed);
            for (a, b) in exact.iter().zip(&mc) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    Ok(worst)
}

fn gap_detail(gaps: &Gaps) -> String {
    gaps.iter()
        .map(|(l, s, a, g)| format!("{:.0}:{:.2}/{:.2}={:.1}%", l / 1e6, s / 1e6, a / 1e6, g * 100.0))
        .collect::<Vec<_>>()
        .join(" ")
}

/// Every check the `validate` command runs.
pub fn run_checks(config: &Config) -> Result<Vec<Check>> {
    config.validate()?;
    let mut checks = Vec::new();
    let (r, nr, reports) = throughput_gaps(config)?;
    for (name, gaps) in [("throughput_renev_prr100", &r), ("throughput_prr100", &nr)] {
        let worst = gaps.iter().map(|g| g.3).fold(0.0, f64::max);
        checks.push(Check {
            name: name.into(),
            passed: worst <= THROUGHPUT_TOLERANCE,
            measured: worst,
            limit: THROUGHPUT_TOLERANCE,
            detail: gap_detail(gaps),
        });
    }
    let mismatches: usize = reports
        .iter()
        .flat_map(|r| r.points.iter())
        .map(|p| p.formula_mismatches)
        .sum();
    checks.push(Check {
        name: "message_formula".into(),
        passed: mismatches == 0,
        measured: mismatches as f64,
        limit: 0.0,
        detail: "iterations whose logged count differs from the formula".into(),
    });
    let gap = mcs_gap(config, MCS_SAMPLES)?;
    checks.push(Check {
        name: "mcs_probability_vs_sampling".into(),
        passed: gap <= MCS_TOLERANCE,
        measured: gap,
        limit: MCS_TOLERANCE,
        detail: format!("{MCS_SAMPLES} samples per serving BS"),
    });
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mcs_probe_agrees_with_sampling() {
        let gap = mcs_gap(&Config::default(), 200_000).unwrap();
        assert!(gap < 1e-2, "{gap}");
    }

    #[test]
    fn check_line_format() {
        let c = Check {
            name: "x".into(),
            passed: false,
            measured: 0.5,
            limit: 0.1,
            detail: String::new(),
        };
        assert_eq!(c.to_string(), "FAIL x: measured 0.500000 limit 0.100000");
    }
}
