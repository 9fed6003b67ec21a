//! Shared drivers for the integration suites and the acceptance target.
#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use renev_core::analysis::mcs::{joint_masses, Link};
use renev_core::analysis::model::analyze;
use renev_core::analysis::states::{feasible_states, p_q_groups, LevelRange, DEFAULT_STATE_CAP};
use renev_core::analysis::throughput::{enb_share_equal, enb_share_equal_direct};
use renev_core::config::{AdmissionMode, Config};
use renev_core::montecarlo::run_campaign;
use renev_core::oracle::{
    all_count_vectors, feasible_exhaustive, sampled_groups, sampled_joint_masses, to_state, total_variation,
};
use renev_core::radio::McsTable;
use renev_core::renev::{RenevConfig, RenevEngine, RenevFailure};
use renev_core::scenario::{BaseStation, BsId, Point, Tier};
use renev_core::slicing::{Decision, Grant, SchemeKind, SliceScheme};

pub fn station(id: BsId, x: f64, y: f64, rbs: u32, first: u32) -> BaseStation {
    BaseStation {
        id,
        tier: if id == 0 { Tier::Macro } else { Tier::Small },
        position: Point::new(x, y),
        tx_power_per_rb_dbm: if id == 0 { 26.0 } else { -3.0 },
        coverage_radius_m: if id == 0 { 250.0 } else { 25.0 },
        first_rb: first,
        initial_rb_count: rbs,
    }
}

/// eNB plus `n` small cells dropped in a 150 m cluster.
pub fn random_layout(rng: &mut ChaCha8Rng, n: usize, sc_rbs: u32) -> Vec<BaseStation> {
    let mut v = vec![station(0, 0.0, 0.0, 100, 0)];
    for k in 0..n {
        let p = Point::new(40.0, 30.0).sample_in_disc(150.0, rng);
        v.push(station(k + 1, p.x, p.y, sc_rbs, sc_rbs * k as u32));
    }
    v
}

fn isolation(e: &RenevEngine, n_bs: usize) -> Result<(), String> {
    for b in 0..n_bs {
        let s = e.ledger(b).slices();
        for k in 0..s.slice_count() {
            if s.slice_usage(k) > s.reserved_budget(k) {
                return Err(format!(
                    "BS {b} slice {k} uses {} of {}",
                    s.slice_usage(k),
                    s.reserved_budget(k)
                ));
            }
        }
        if s.shared_usage() > s.shared_budget() {
            return Err(format!("BS {b} shared pool overdrawn"));
        }
    }
    Ok(())
}

/// Random admit / release / trigger / revert sequences; every step is
/// followed by the cross-ledger invariant check. Returns the number of
/// sequences run.
pub fn renev_sequences(count: usize, seed: u64) -> Result<usize, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for case in 0..count {
        let n = rng.gen_range(2..=6);
        let sc_rbs = rng.gen_range(4..=12);
        let st = random_layout(&mut rng, n, sc_rbs);
        let scheme = match rng.gen_range(0..3) {
            0 => SliceScheme::nvs(2),
            1 => SliceScheme::prr(1.0, 2),
            _ => SliceScheme::prr(0.5, 2),
        };
        let floor = rng.gen_range(0..=2);
        let mut e = RenevEngine::new(&st, &scheme, RenevConfig { donor_floor: floor });
        let mut grants: Vec<(BsId, Grant)> = Vec::new();
        let steps = rng.gen_range(5..40);
        for step in 0..steps {
            let op = rng.gen_range(0..10);
            let b = rng.gen_range(0..=n);
            match op {
                0..=4 => {
                    let slice = rng.gen_range(0..2);
                    if let Decision::Admitted(g) = e.admit(b, slice, rng.gen_range(1..=4)).map_err(|x| x.to_string())? {
                        grants.push((b, g));
                    }
                }
                5 | 6 if !grants.is_empty() => {
                    let k = rng.gen_range(0..grants.len());
                    let (bs, g) = grants.swap_remove(k);
                    e.release(bs, &g);
                }
                7 | 8 if b != 0 => {
                    let before: u32 = (0..=n).map(|x| e.ledger(x).capacity()).sum();
                    let r = e.trigger(b, rng.gen_range(1..=6), rng.gen_range(0..2));
                    if let Err(RenevFailure::NoDonor) = r {
                        let after: u32 = (0..=n).map(|x| e.ledger(x).capacity()).sum();
                        if before != after {
                            return Err(format!("case {case}: failed request moved RBs"));
                        }
                    }
                }
                9 if b != 0 => {
                    e.revert(b);
                }
                _ => {
                    e.end_epoch();
                }
            }
            e.check_invariants()
                .map_err(|m| format!("case {case} step {step}: {m}"))?;
            isolation(&e, n + 1).map_err(|m| format!("case {case} step {step}: {m}"))?;
        }
        // Releasing everything and reverting restores every ledger.
        grants.shuffle(&mut rng);
        for (bs, g) in grants.drain(..) {
            e.release(bs, &g);
        }
        e.end_epoch();
        for b in 0..=n {
            let l = e.ledger(b);
            if l.lent_count() != 0 || l.borrowed_count() != 0 || l.capacity() != st[b].initial_rb_count {
                return Err(format!(
                    "case {case}: BS {b} not restored: lent {} borrowed {} capacity {} used {}",
                    l.lent_count(),
                    l.borrowed_count(),
                    l.capacity(),
                    l.used()
                ));
            }
        }
    }
    Ok(count)
}

/// Brute-force donor choice on random N=4 layouts. Returns mismatches.
pub fn donor_oracle(cases: usize, seed: u64) -> usize {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut bad = 0;
    for _ in 0..cases {
        let st = random_layout(&mut rng, 4, 10);
        let floor = rng.gen_range(0..=2);
        let mut e = RenevEngine::new(&st, &SliceScheme::prr(1.0, 2), RenevConfig { donor_floor: floor });
        for b in 0..=4 {
            let cap = st[b].initial_rb_count;
            let fill = rng.gen_range(0..=cap);
            if fill > 0 {
                let _ = e.admit(b, 0, fill).unwrap();
            }
        }
        let req = rng.gen_range(1..=4);
        let deficit = rng.gen_range(1..=8);
        let spare = |b: BsId| st[b].initial_rb_count - e.ledger(b).used();
        let ok = |s: u32| s >= deficit && s - deficit >= floor;
        let dist = |b: BsId| st[b].position.distance(&st[req].position);
        let mut best: Option<BsId> = None;
        for b in (1..=4).filter(|&b| b != req) {
            if !ok(spare(b)) {
                continue;
            }
            best = match best {
                None => Some(b),
                Some(c) => {
                    let better = spare(b) > spare(c)
                        || (spare(b) == spare(c) && (dist(b) < dist(c) || (dist(b) == dist(c) && b < c)));
                    if better {
                        Some(b)
                    } else {
                        Some(c)
                    }
                }
            };
        }
        if best.is_none() && ok(spare(0)) {
            best = Some(0);
        }
        let got = e.trigger(req, deficit, 0).ok().map(|r| r.donor);
        if got != best {
            bad += 1;
        }
    }
    bad
}

/// Exhaustive feasibility check over every state of up to `max_n` BSs in
/// `range`: returns (states compared, mismatches).
pub fn feasibility_vs_exhaustive(max_n: u32, range: &LevelRange) -> (usize, usize) {
    let mut compared = 0;
    let mut bad = 0;
    for n in 1..=max_n {
        for sn in all_count_vectors(n, range) {
            let oracle = feasible_exhaustive(&sn, range);
            let mut got = feasible_states(&to_state(&sn, range.r_min), range, DEFAULT_STATE_CAP).unwrap();
            let mut want = oracle.clone();
            got.sort();
            want.sort();
            compared += 1;
            if got != want {
                bad += 1;
            }
        }
    }
    (compared, bad)
}

/// Largest per-MCS gap between integrated and sampled masses over a grid of
/// mean-SNR configurations.
pub fn mcs_vs_sampling(samples: usize) -> f64 {
    let table = McsTable::default();
    let cases: [(f64, &[(f64, f64)]); 4] = [
        (12.0, &[(8.0, 8.0)]),
        (5.0, &[(3.0, 10.0), (-2.0, 10.0)]),
        (20.0, &[(18.0, 8.0), (15.0, 10.0), (10.0, 10.0)]),
        (-3.0, &[(-5.0, 8.0)]),
    ];
    let mut worst: f64 = 0.0;
    for (k, (mu, others)) in cases.iter().enumerate() {
        let serving = Link {
            mean_snr_db: *mu,
            sigma_db: 10.0,
        };
        let o: Vec<Link> = others
            .iter()
            .map(|&(m, s)| Link {
                mean_snr_db: m,
                sigma_db: s,
            })
            .collect();
        let exact = joint_masses(&serving, &o, &table, 1e-8);
        let mc = sampled_joint_masses(&serving, &o, &table, samples, 100 + k as u64);
        for (a, b) in exact.iter().zip(&mc) {
            worst = worst.max((a - b).abs());
        }
    }
    worst
}

/// Worst total variation between the group recursion and the geometric
/// oracle over N ≤ `max_n`, every M, for overlap `p_o`. Returns
/// (worst tv, (n, m) where it happens).
pub fn q_vs_geometry(max_n: usize, p_o: f64, samples: usize) -> (f64, (usize, usize)) {
    let mut worst = (0.0, (0, 0));
    for n in 1..=max_n {
        for m in 1..=n {
            let tv = total_variation(&p_q_groups(n, m, p_o), &sampled_groups(n, m, p_o, samples, 7));
            if tv > worst.0 {
                worst = (tv, (n, m));
            }
        }
    }
    worst
}

/// Largest |closed form − direct sum| of the equal eNB share for N ≤ `max_n`.
pub fn share_gap(max_n: usize) -> f64 {
    let mut worst: f64 = 0.0;
    for n in 1..=max_n {
        for k in 0..=40 {
            let p = k as f64 / 40.0;
            worst = worst.max((enb_share_equal(n, p, 50.0) - enb_share_equal_direct(n, p, 50.0)).abs());
        }
    }
    worst
}

pub fn scheme_prr100() -> SchemeKind {
    SchemeKind::Prr { shared_fraction: 1.0 }
}

/// One randomized configuration for the dominance sweeps.
pub fn random_config(rng: &mut ChaCha8Rng, iterations: usize) -> Config {
    let mut c = Config::default();
    c.seed = rng.gen();
    c.scenario.n_small_cells = rng.gen_range(2..=10);
    c.scenario.sc_tier_user_fraction = rng.gen_range(0.3..0.9);
    c.scenario.per_user_demand_bps = rng.gen_range(150e3..600e3);
    c.scenario.cluster_radius_m = rng.gen_range(80.0..180.0);
    c.scheme = match rng.gen_range(0..3) {
        0 => SchemeKind::Nvs,
        1 => SchemeKind::Prr { shared_fraction: 1.0 },
        _ => SchemeKind::Prr {
            shared_fraction: rng.gen_range(0.0..1.0),
        },
    };
    c.donor_floor = rng.gen_range(0..=2);
    c.mode = if rng.gen_bool(0.5) {
        AdmissionMode::PerAdmission
    } else {
        AdmissionMode::PerEpoch
    };
    let mut loads: Vec<f64> = (0..4).map(|_| (rng.gen_range(18..=100) as f64) * 1e6).collect();
    loads.sort_by(f64::total_cmp);
    loads.dedup();
    c.loads_bps = loads;
    c.iterations = iterations;
    c.message_log_iterations = 0;
    c.analysis.geometries = 2;
    c.analysis.mcs.spatial_points = 16;
    c
}

/// Dominance over `configs` random configurations: closed form with RENEV
/// against without, and the matched-seed simulated means. Returns one line
/// per violation.
pub fn dominance_violations(configs: usize, iterations: usize, seed: u64) -> Vec<String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for k in 0..configs {
        let c = random_config(&mut rng, iterations);
        let ana = analyze(&c, false, &[]).unwrap();
        for p in &ana.points {
            // Equal bounds may differ in the last bit from summation order.
            if p.T_R < p.T_NR * (1.0 - 1e-9) {
                out.push(format!(
                    "config {k} load {}: T_R {} < T_NR {}",
                    p.load_bps, p.T_R, p.T_NR
                ));
            }
        }
        let with = run_campaign(&Config {
            renev: true,
            ..c.clone()
        })
        .unwrap()
        .report;
        let without = run_campaign(&Config { renev: false, ..c }).unwrap().report;
        for (a, b) in with.points.iter().zip(&without.points) {
            if a.throughput_bps.mean < b.throughput_bps.mean {
                out.push(format!(
                    "config {k} load {}: sim {} < {}",
                    a.load_bps, a.throughput_bps.mean, b.throughput_bps.mean
                ));
            }
        }
    }
    out
}
