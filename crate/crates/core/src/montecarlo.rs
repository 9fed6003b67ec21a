//! Simulation campaigns: one snapshot per iteration, load sweeps, and
//! aggregation with normal-approximation confidence intervals.
//!
//! Seeds: iteration `it` at load index `li` draws its layout from
//! `(seed, Geometry, [it])`, and users, shadowing and arrivals from
//! `(seed, stream, [it, li])`. Runs that differ only in scheme or RENEV
//! therefore see identical radio conditions and arrival orders.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::states::{EmpiricalKernel, SystemState};
use crate::config::{AdmissionMode, Config};
use crate::error::{Error, Result};
use crate::radio::{rb_demand, ChannelModel, McsTable};
use crate::renev::{RenevEngine, RenevFailure};
use crate::rng::{rng_for, Stream};
use crate::scenario::{generate_deployment_with, BaseStation, BsId, Deployment, MACRO_ID};
use crate::signaling::{message_formula, MessageLog};
use crate::slicing::{Decision, Pool};

/// One user's radio situation after shadowing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Attachment {
    /// Best-SNR BS; `None` when that SNR is below every threshold.
    pub best: Option<BsId>,
    /// RBs needed at the best BS.
    pub demand: u32,
    /// RBs needed if the eNB serves the user instead (`None`: eNB outage).
    pub enb_demand: Option<u32>,
    pub slice: usize,
}

/// Shadowing, association and slice draws for one iteration.
pub fn attach_users(
    dep: &Deployment,
    channel: &ChannelModel,
    table: &McsTable,
    slice_count: usize,
    seed: u64,
    iteration: usize,
    load_idx: usize,
) -> Result<Vec<Attachment>> {
    let tags = [iteration as u64, load_idx as u64];
    let mut shadow_rng = rng_for(seed, Stream::Shadowing, &tags);
    let mut slice_rng = rng_for(seed, Stream::Arrivals, &tags);
    let d = dep.config.per_user_demand_bps;
    let normals: Vec<Normal<f64>> = dep
        .base_stations
        .iter()
        .map(|b| Normal::new(channel.shadow_mean_db, channel.shadow_sigma_db(b.tier)))
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::config("channel", e.to_string()))?;
    let mut out = Vec::with_capacity(dep.users.len());
    for u in &dep.users {
        let mut best: Option<(f64, BsId)> = None;
        let mut enb_snr = f64::NEG_INFINITY;
        for (b, n) in dep.base_stations.iter().zip(&normals) {
            let snr = channel.compute_snr(b, &u.position, n.sample(&mut shadow_rng));
            if b.id == MACRO_ID {
                enb_snr = snr;
            }
            if best.is_none_or(|(s, _)| snr > s) {
                best = Some((snr, b.id));
            }
        }
        let (snr, bs) = best.expect("at least the eNB");
        let slice = slice_rng.gen_range(0..slice_count);
        let (best, demand) = match table.select(snr) {
            Some(k) => (Some(bs), rb_demand(d, table.get(k))),
            None => (None, 0),
        };
        let enb_demand = table.select(enb_snr).map(|k| rb_demand(d, table.get(k)));
        out.push(Attachment {
            best,
            demand,
            enb_demand,
            slice,
        });
    }
    Ok(out)
}

fn quantize(r: i64, bucket: u32, lo: i32, hi: i32) -> i32 {
    let b = bucket as i64;
    let q = if r >= 0 { r / b } else { -((-r + b - 1) / b) };
    (q as i32).clamp(lo, hi)
}

/// Per-SC available RBs before any admission control, from the demand of
/// the users each BS attracts; index 0 is the eNB.
pub fn demand_levels(stations: &[BaseStation], att: &[Attachment]) -> Vec<i64> {
    let mut r: Vec<i64> = stations.iter().map(|b| b.initial_rb_count as i64).collect();
    for a in att {
        if let Some(b) = a.best {
            r[b] -= a.demand as i64;
        }
    }
    r
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StateQuantizer {
    pub bucket_rbs: u32,
    pub r_min: i32,
    pub r_max: i32,
}

impl StateQuantizer {
    pub fn from_config(c: &Config) -> Self {
        StateQuantizer {
            bucket_rbs: c.analysis.bucket_rbs,
            r_min: c.analysis.r_min,
            r_max: c.analysis.r_max,
        }
    }

    pub fn level(&self, r: i64) -> i32 {
        quantize(r, self.bucket_rbs, self.r_min, self.r_max)
    }

    /// SC-tier state from per-BS levels (entry 0, the eNB, is skipped).
    pub fn state(&self, r: &[i64]) -> SystemState {
        SystemState::from_levels(r[1..].iter().map(|&x| self.level(x)))
    }

    /// eNB spare level; negative spare counts as none.
    pub fn enb_level(&self, r0: i64) -> i32 {
        self.level(r0.max(0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IterationResult {
    pub iteration: usize,
    pub load_bps: f64,
    pub offered_users: usize,
    pub served_sc: usize,
    /// eNB users, own layer plus fallback.
    pub served_enb: usize,
    pub fallback: usize,
    pub outage: usize,
    pub blocked: usize,
    pub throughput_bps: f64,
    pub sc_lent_rbs: u32,
    pub enb_lent_rbs: u32,
    pub sc_tier_rbs: u32,
    pub enb_rbs: u32,
    pub requests: u64,
    pub enb_polls: u64,
    pub successes: u64,
    pub messages: u64,
    pub formula_messages: u64,
    pub rbs_transferred: u64,
    /// Demand-level SC state and eNB spare level (quantized).
    pub state: SystemState,
    pub enb_level: i32,
    /// State after the small-cell-tier transfers only.
    pub state_after_sc: SystemState,
    #[serde(skip)]
    pub log: Option<MessageLog>,
}

impl IterationResult {
    pub fn served(&self) -> usize {
        self.served_sc + self.served_enb
    }

    pub fn sc_transferred_pct(&self) -> f64 {
        pct(self.sc_lent_rbs as f64, self.sc_tier_rbs as f64)
    }

    pub fn enb_transferred_pct(&self) -> f64 {
        pct(self.enb_lent_rbs as f64, self.enb_rbs as f64)
    }

    pub fn messages_per_sc(&self, n_sc: usize) -> f64 {
        self.messages as f64 / n_sc.max(1) as f64
    }
}

fn pct(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        100.0 * a / b
    } else {
        0.0
    }
}

struct Outcome {
    served_sc: usize,
    served_enb: usize,
    fallback: usize,
    blocked: usize,
}

fn serve_at_enb(engine: &mut RenevEngine, a: &Attachment, out: &mut Outcome, fallback: bool) -> Result<()> {
    match a.enb_demand {
        Some(dem) => match engine.admit(MACRO_ID, a.slice, dem)? {
            Decision::Admitted(_) => {
                out.served_enb += 1;
                if fallback {
                    out.fallback += 1;
                }
            }
            Decision::Rejected(_) => out.blocked += 1,
        },
        None => out.blocked += 1,
    }
    Ok(())
}

fn run_per_admission(engine: &mut RenevEngine, att: &[Attachment], order: &[usize], renev: bool) -> Result<Outcome> {
    let mut out = Outcome {
        served_sc: 0,
        served_enb: 0,
        fallback: 0,
        blocked: 0,
    };
    for &u in order {
        let a = &att[u];
        let Some(bs) = a.best else { continue };
        engine.unhold(bs, a.demand);
        if bs == MACRO_ID {
            serve_at_enb(engine, a, &mut out, false)?;
            continue;
        }
        match engine.admit(bs, a.slice, a.demand)? {
            Decision::Admitted(_) => out.served_sc += 1,
            Decision::Rejected(rej) => {
                let mut admitted = false;
                if renev {
                    if let Ok(_rec) = engine.trigger(bs, rej.deficit(), a.slice) {
                        admitted = matches!(engine.admit(bs, a.slice, a.demand)?, Decision::Admitted(_));
                    }
                }
                if admitted {
                    out.served_sc += 1;
                } else {
                    serve_at_enb(engine, a, &mut out, true)?;
                }
            }
        }
    }
    Ok(out)
}

fn run_per_epoch(
    engine: &mut RenevEngine,
    att: &[Attachment],
    order: &[usize],
    renev: bool,
    slices: usize,
) -> Result<Outcome> {
    let mut out = Outcome {
        served_sc: 0,
        served_enb: 0,
        fallback: 0,
        blocked: 0,
    };
    // Pending users per small cell, in arrival order; cells in order of
    // their first rejection.
    let mut pending: Vec<(BsId, Vec<usize>)> = Vec::new();
    for &u in order {
        let a = &att[u];
        let Some(bs) = a.best else { continue };
        if bs == MACRO_ID {
            engine.unhold(bs, a.demand);
            serve_at_enb(engine, a, &mut out, false)?;
            continue;
        }
        match engine.admit(bs, a.slice, a.demand)? {
            Decision::Admitted(_) => {
                engine.unhold(bs, a.demand);
                out.served_sc += 1;
            }
            Decision::Rejected(_) => match pending.iter_mut().find(|(b, _)| *b == bs) {
                Some((_, v)) => v.push(u),
                None => pending.push((bs, vec![u])),
            },
        }
    }
    // Under PRR borrowed RBs land in the shared pool, so one request covers
    // every slice. Under NVS they land in one slice, so slices are settled
    // one at a time.
    let mut leftovers = Vec::new();
    for (bs, users) in pending {
        let groups: Vec<Vec<usize>> = match engine.ledger(bs).slices().borrow_pool(0) {
            Pool::Shared => vec![users],
            Pool::Slice(_) => (0..slices)
                .map(|s| users.iter().copied().filter(|&u| att[u].slice == s).collect())
                .filter(|g: &Vec<usize>| !g.is_empty())
                .collect(),
        };
        for group in groups {
            if renev {
                let mut need = vec![0u32; slices];
                for &u in &group {
                    need[att[u].slice] += att[u].demand;
                }
                let deficit = engine.ledger(bs).slices().shortfall(&need);
                if deficit > 0 {
                    let _: std::result::Result<_, RenevFailure> = engine.trigger(bs, deficit, att[group[0]].slice);
                }
            }
            for u in group {
                let a = &att[u];
                engine.unhold(bs, a.demand);
                match engine.admit(bs, a.slice, a.demand)? {
                    Decision::Admitted(_) => out.served_sc += 1,
                    Decision::Rejected(_) => leftovers.push(u),
                }
            }
        }
    }
    for u in leftovers {
        serve_at_enb(engine, &att[u], &mut out, true)?;
    }
    Ok(out)
}

/// One snapshot: deploy, shadow, associate, admit in random order.
pub fn run_iteration(config: &Config, load_idx: usize, iteration: usize) -> Result<IterationResult> {
    run_iteration_inner(config, load_idx, iteration).map_err(|e| Error::Iteration {
        iteration,
        source: Box::new(e),
    })
}

fn run_iteration_inner(config: &Config, load_idx: usize, iteration: usize) -> Result<IterationResult> {
    let load = config.loads_bps[load_idx];
    let scenario = config.scenario_at(load);
    let table = config.mcs()?;
    let seed = config.seed;
    let tags = [iteration as u64, load_idx as u64];
    let mut geo = rng_for(seed, Stream::Geometry, &[iteration as u64]);
    let mut usr = rng_for(seed, Stream::Users, &tags);
    let dep = generate_deployment_with(&scenario, &mut geo, &mut usr)?;
    let att = attach_users(
        &dep,
        &config.channel,
        &table,
        config.slice_count,
        seed,
        iteration,
        load_idx,
    )?;

    let mut order: Vec<usize> = (0..att.len()).collect();
    let mut arrivals = rng_for(seed, Stream::Arrivals, &[iteration as u64, load_idx as u64, 1]);
    order.shuffle(&mut arrivals);

    let n_bs = dep.base_stations.len();
    let log = if iteration < config.message_log_iterations {
        MessageLog::new(n_bs)
    } else {
        MessageLog::counting(n_bs)
    };
    let scheme = config.slice_scheme();
    let mut engine = RenevEngine::with_log(&dep.base_stations, &scheme, config.renev_config(), log);
    // A BS only offers RBs its own attached users will not need.
    for a in &att {
        if let Some(b) = a.best {
            engine.hold(b, a.demand);
        }
    }
    let outcome = match config.mode {
        AdmissionMode::PerAdmission => run_per_admission(&mut engine, &att, &order, config.renev)?,
        AdmissionMode::PerEpoch => run_per_epoch(&mut engine, &att, &order, config.renev, config.slice_count)?,
    };
    debug_assert_eq!(engine.check_invariants(), Ok(()));

    let q = StateQuantizer::from_config(config);
    let levels = demand_levels(&dep.base_stations, &att);
    let mut after = levels.clone();
    for t in engine.transfers() {
        if t.donor != MACRO_ID {
            after[t.donor] -= t.rbs.len() as i64;
            after[t.recipient] += t.rbs.len() as i64;
        }
    }

    let stats = engine.stats();
    let (sc_lent, enb_lent) = engine.lent_per_tier();
    let n_sc = dep.n_small_cells();
    let outage = att.iter().filter(|a| a.best.is_none()).count();
    let served = outcome.served_sc + outcome.served_enb;
    let log = engine.into_log();
    Ok(IterationResult {
        iteration,
        load_bps: load,
        offered_users: att.len(),
        served_sc: outcome.served_sc,
        served_enb: outcome.served_enb,
        fallback: outcome.fallback,
        outage,
        blocked: outcome.blocked,
        throughput_bps: served as f64 * scenario.per_user_demand_bps,
        sc_lent_rbs: sc_lent,
        enb_lent_rbs: enb_lent,
        sc_tier_rbs: dep.small_cells().iter().map(|b| b.initial_rb_count).sum(),
        enb_rbs: dep.base_stations[MACRO_ID].initial_rb_count,
        requests: stats.requests,
        enb_polls: stats.enb_polls,
        successes: stats.successes,
        messages: log.total(),
        formula_messages: message_formula(n_sc, stats.requests, stats.enb_polls, stats.successes),
        rbs_transferred: stats.rbs_transferred,
        state: q.state(&levels),
        enb_level: q.enb_level(levels[MACRO_ID]),
        state_after_sc: q.state(&after),
        log: (iteration < config.message_log_iterations).then_some(log),
    })
}

/// Mean with a 95% normal-approximation half-width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Stat {
    pub mean: f64,
    pub ci95: f64,
    pub n: usize,
}

impl Stat {
    pub fn of(xs: impl IntoIterator<Item = f64>) -> Self {
        let v: Vec<f64> = xs.into_iter().collect();
        let n = v.len();
        if n == 0 {
            return Stat::default();
        }
        let mean = v.iter().sum::<f64>() / n as f64;
        let ci95 = if n > 1 {
            let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            1.96 * (var / n as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, ci95, n }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LoadPoint {
    pub load_bps: f64,
    pub users: usize,
    pub throughput_bps: Stat,
    pub sc_throughput_bps: Stat,
    pub enb_throughput_bps: Stat,
    pub sc_transferred_pct: Stat,
    pub enb_transferred_pct: Stat,
    /// Pooled `n_s_total / n_R`, in percent.
    pub success_pct: f64,
    pub success_pct_iter: Stat,
    pub messages_per_sc: Stat,
    pub requests: Stat,
    pub enb_polls: Stat,
    pub successes: Stat,
    pub blocked_pct: Stat,
    pub outage_pct: Stat,
    pub fallback_users: Stat,
    /// Iterations where the logged message count differs from the formula.
    pub formula_mismatches: usize,
    /// User-rate CDF: (rate in bit/s, fraction of users at or below it).
    pub cdf: Vec<(f64, f64)>,
}

fn summarize(config: &Config, load_bps: f64, results: &[IterationResult]) -> LoadPoint {
    let d = config.scenario.per_user_demand_bps;
    let n_sc = config.scenario.n_small_cells;
    let req: u64 = results.iter().map(|r| r.requests).sum();
    let suc: u64 = results.iter().map(|r| r.successes).sum();
    let offered: usize = results.iter().map(|r| r.offered_users).sum();
    let served: usize = results.iter().map(|r| r.served()).sum();
    let cdf = if offered == 0 {
        Vec::new()
    } else {
        let zero = (offered - served) as f64 / offered as f64;
        let mut v = Vec::new();
        if served < offered {
            v.push((0.0, zero));
        }
        if served > 0 {
            v.push((d, 1.0));
        }
        v
    };
    let share = |x: usize, of: usize| pct(x as f64, of as f64);
    LoadPoint {
        load_bps,
        users: config.users_at(load_bps),
        throughput_bps: Stat::of(results.iter().map(|r| r.throughput_bps)),
        sc_throughput_bps: Stat::of(results.iter().map(|r| r.served_sc as f64 * d)),
        enb_throughput_bps: Stat::of(results.iter().map(|r| r.served_enb as f64 * d)),
        sc_transferred_pct: Stat::of(results.iter().map(|r| r.sc_transferred_pct())),
        enb_transferred_pct: Stat::of(results.iter().map(|r| r.enb_transferred_pct())),
        success_pct: pct(suc as f64, req as f64),
        success_pct_iter: Stat::of(
            results
                .iter()
                .filter(|r| r.requests > 0)
                .map(|r| pct(r.successes as f64, r.requests as f64)),
        ),
        messages_per_sc: Stat::of(results.iter().map(|r| r.messages_per_sc(n_sc))),
        requests: Stat::of(results.iter().map(|r| r.requests as f64)),
        enb_polls: Stat::of(results.iter().map(|r| r.enb_polls as f64)),
        successes: Stat::of(results.iter().map(|r| r.successes as f64)),
        blocked_pct: Stat::of(results.iter().map(|r| share(r.blocked, r.offered_users))),
        outage_pct: Stat::of(results.iter().map(|r| share(r.outage, r.offered_users))),
        fallback_users: Stat::of(results.iter().map(|r| r.fallback as f64)),
        formula_mismatches: results.iter().filter(|r| r.messages != r.formula_messages).count(),
        cdf,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsReport {
    pub scheme: String,
    pub renev: bool,
    pub iterations: usize,
    pub seed: u64,
    pub points: Vec<LoadPoint>,
}

/// Campaign output: the report plus what later stages consume.
#[derive(Debug, Clone)]
pub struct Campaign {
    pub report: MetricsReport,
    /// Kept message logs as (load index, iteration, log).
    pub logs: Vec<(usize, usize, MessageLog)>,
    /// Per load point: sampled SC states and eNB levels.
    pub states: Vec<Vec<(SystemState, i32)>>,
    pub kernels: Vec<EmpiricalKernel>,
}

/// All iterations of one load point, in iteration order.
pub fn run_point(config: &Config, load_idx: usize) -> Result<Vec<IterationResult>> {
    (0..config.iterations)
        .into_par_iter()
        .map(|it| run_iteration(config, load_idx, it))
        .collect()
}

pub fn run_campaign(config: &Config) -> Result<Campaign> {
    config.validate()?;
    let mut points = Vec::with_capacity(config.loads_bps.len());
    let mut logs = Vec::new();
    let mut states = Vec::new();
    let mut kernels = Vec::new();
    for (li, &load) in config.loads_bps.iter().enumerate() {
        let mut results = run_point(config, li)?;
        points.push(summarize(config, load, &results));
        let mut kernel = EmpiricalKernel::default();
        let mut st = Vec::with_capacity(results.len());
        for r in results.iter_mut() {
            if r.state.requesters() > 0 {
                kernel.record(r.state.clone(), r.state_after_sc.clone());
            }
            st.push((r.state.clone(), r.enb_level));
            if let Some(log) = r.log.take() {
                logs.push((li, r.iteration, log));
            }
        }
        states.push(st);
        kernels.push(kernel);
        log::info!("load {:.1} Mbps done", load / 1e6);
    }
    Ok(Campaign {
        report: MetricsReport {
            scheme: config.scheme.to_string(),
            renev: config.renev,
            iterations: config.iterations,
            seed: config.seed,
            points,
        },
        logs,
        states,
        kernels,
    })
}

/// Sample only the demand-level states (no admission control) for the
/// signaling analysis.
pub fn sample_states(config: &Config, load_idx: usize, samples: usize) -> Result<Vec<(SystemState, i32)>> {
    let table = config.mcs()?;
    let q = StateQuantizer::from_config(config);
    let scenario = config.scenario_at(config.loads_bps[load_idx]);
    (0..samples)
        .into_par_iter()
        .map(|it| {
            let mut geo = rng_for(config.seed, Stream::Geometry, &[it as u64]);
            let mut usr = rng_for(config.seed, Stream::Users, &[it as u64, load_idx as u64]);
            let dep = generate_deployment_with(&scenario, &mut geo, &mut usr)?;
            let att = attach_users(
                &dep,
                &config.channel,
                &table,
                config.slice_count,
                config.seed,
                it,
                load_idx,
            )?;
            let r = demand_levels(&dep.base_stations, &att);
            Ok((q.state(&r), q.enb_level(r[MACRO_ID])))
        })
        .collect()
}

fn f(x: f64) -> String {
    format!("{x:.6}")
}

pub const METRICS_HEADER: &str = "scheme,renev,load_mbps,users,throughput_mbps,throughput_ci95,sc_throughput_mbps,enb_throughput_mbps,sc_transferred_pct,sc_transferred_ci95,enb_transferred_pct,enb_transferred_ci95,success_pct,messages_per_sc,messages_per_sc_ci95,requests,enb_polls,successes,blocked_pct,outage_pct,fallback_users,formula_mismatches";

impl MetricsReport {
    pub fn write_csv<W: Write>(&self, w: &mut W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "{METRICS_HEADER}")?;
        }
        for p in &self.points {
            let row = [
                self.scheme.clone(),
                self.renev.to_string(),
                f(p.load_bps / 1e6),
                p.users.to_string(),
                f(p.throughput_bps.mean / 1e6),
                f(p.throughput_bps.ci95 / 1e6),
                f(p.sc_throughput_bps.mean / 1e6),
                f(p.enb_throughput_bps.mean / 1e6),
                f(p.sc_transferred_pct.mean),
                f(p.sc_transferred_pct.ci95),
                f(p.enb_transferred_pct.mean),
                f(p.enb_transferred_pct.ci95),
                f(p.success_pct),
                f(p.messages_per_sc.mean),
                f(p.messages_per_sc.ci95),
                f(p.requests.mean),
                f(p.enb_polls.mean),
                f(p.successes.mean),
                f(p.blocked_pct.mean),
                f(p.outage_pct.mean),
                f(p.fallback_users.mean),
                p.formula_mismatches.to_string(),
            ];
            writeln!(w, "{}", row.join(","))?;
        }
        Ok(())
    }

    pub fn write_cdf_csv<W: Write>(&self, w: &mut W, header: bool) -> std::io::Result<()> {
        if header {
            writeln!(w, "scheme,renev,load_mbps,rate_kbps,cdf")?;
        }
        for p in &self.points {
            for &(rate, c) in &p.cdf {
                writeln!(
                    w,
                    "{},{},{},{},{}",
                    self.scheme,
                    self.renev,
                    f(p.load_bps / 1e6),
                    f(rate / 1e3),
                    f(c)
                )?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> Config {
        Config {
            iterations: 4,
            loads_bps: vec![18e6, 78e6],
            ..Config::default()
        }
    }

    #[test]
    fn quantizer_rounds_deficits_up() {
        assert_eq!(quantize(5, 2, -10, 10), 2);
        assert_eq!(quantize(-5, 2, -10, 10), -3);
        assert_eq!(quantize(-4, 2, -10, 10), -2);
        assert_eq!(quantize(-100, 2, -10, 10), -10);
        assert_eq!(quantize(0, 3, -10, 10), 0);
    }

    #[test]
    fn iterations_are_reproducible() {
        let c = small_config();
        let a = run_iteration(&c, 1, 2).unwrap();
        let b = run_iteration(&c, 1, 2).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, run_iteration(&c, 1, 3).unwrap());
    }

    #[test]
    fn accounting_adds_up() {
        let c = small_config();
        for li in 0..2 {
            for it in 0..4 {
                let r = run_iteration(&c, li, it).unwrap();
                assert_eq!(r.served() + r.blocked + r.outage, r.offered_users);
                assert_eq!(r.messages, r.formula_messages);
                assert!(r.throughput_bps <= c.loads_bps[li] + 1.0);
            }
        }
    }

    #[test]
    fn renev_never_hurts_a_matched_iteration_much() {
        let on = small_config();
        let off = Config {
            renev: false,
            ..small_config()
        };
        let a: f64 = (0..4).map(|it| run_iteration(&on, 1, it).unwrap().throughput_bps).sum();
        let b: f64 = (0..4)
            .map(|it| run_iteration(&off, 1, it).unwrap().throughput_bps)
            .sum();
        assert!(a >= b, "{a} < {b}");
    }

    #[test]
    fn without_renev_no_messages() {
        let c = Config {
            renev: false,
            ..small_config()
        };
        let r = run_iteration(&c, 1, 0).unwrap();
        assert_eq!((r.messages, r.requests, r.sc_lent_rbs, r.enb_lent_rbs), (0, 0, 0, 0));
    }

    #[test]
    fn per_epoch_requests_at_most_once_per_cell_and_slice() {
        let c = Config {
            mode: AdmissionMode::PerEpoch,
            ..small_config()
        };
        for it in 0..4 {
            let r = run_iteration(&c, 1, it).unwrap();
            assert!(r.requests as usize <= c.scenario.n_small_cells * c.slice_count);
            assert_eq!(r.messages, r.formula_messages);
        }
    }

    #[test]
    fn campaign_is_deterministic_and_ordered() {
        let c = small_config();
        let a = run_campaign(&c).unwrap();
        let b = run_campaign(&c).unwrap();
        assert_eq!(a.report, b.report);
        let mut x = Vec::new();
        a.report.write_csv(&mut x, true).unwrap();
        let mut y = Vec::new();
        b.report.write_csv(&mut y, true).unwrap();
        assert_eq!(x, y);
        let p = &a.report.points[0];
        assert!(p.cdf.windows(2).all(|w| w[0].0 <= w[1].0));
        assert!((0.0..=100.0).contains(&p.sc_transferred_pct.mean));
        assert_eq!(a.logs.len(), 2 * c.message_log_iterations.min(c.iterations));
    }

    #[test]
    fn stat_half_width() {
        let s = Stat::of([1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        let sd = (5.0f64 / 3.0).sqrt();
        assert!((s.ci95 - 1.96 * sd / 2.0).abs() < 1e-12);
        assert_eq!(Stat::of([]).n, 0);
    }
}
