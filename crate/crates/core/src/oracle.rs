//! Brute-force references for the analytic model: sampled MCS masses,
//! sampled overlap groups and exhaustive feasibility.

use petgraph::algo::connected_components;
use petgraph::graph::UnGraph;
use rand_distr::{Distribution, Normal};

use crate::analysis::mcs::Link;
use crate::analysis::states::{LevelRange, SystemState};
use crate::analysis::throughput::overlap_probability_geometric;
use crate::radio::McsTable;
use crate::rng::{rng_for, Stream};
use crate::scenario::Point;

/// Sampled `P(best = serving, MCS = k)` for each k.
pub fn sampled_joint_masses(serving: &Link, others: &[Link], table: &McsTable, samples: usize, seed: u64) -> Vec<f64> {
    let mut rng = rng_for(seed, Stream::Oracle, &[samples as u64]);
    let draw = |l: &Link, rng: &mut crate::rng::SimRng| {
        if l.sigma_db == 0.0 {
            l.mean_snr_db
        } else {
            l.mean_snr_db - Normal::new(0.0, l.sigma_db).unwrap().sample(rng)
        }
    };
    let mut counts = vec![0u64; table.len()];
    for _ in 0..samples {
        let snr = draw(serving, &mut rng);
        let mut best = true;
        for o in others {
            if draw(o, &mut rng) > snr {
                best = false;
            }
        }
        if best {
            if let Some(k) = table.select(snr) {
                counts[k] += 1;
            }
        }
    }
    counts.iter().map(|&c| c as f64 / samples as f64).collect()
}

/// SC radius (cluster radius 1) whose pairwise overlap probability is `p_o`.
pub fn radius_for_overlap(p_o: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if overlap_probability_geometric(mid, mid, 1.0) < p_o {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Sampled `P(Q = q)`, q = 1..=m: drop `n` discs uniformly in the cluster,
/// take `m` of them as requesters and count the connected components of
/// their overlap graph.
pub fn sampled_groups(n: usize, m: usize, p_o: f64, samples: usize, seed: u64) -> Vec<f64> {
    assert!(m >= 1 && m <= n);
    let r = radius_for_overlap(p_o);
    let mut rng = rng_for(seed, Stream::Oracle, &[n as u64, m as u64]);
    let mut hist = vec![0u64; m];
    for _ in 0..samples {
        // Discs are exchangeable, so the requesters are the first m drawn.
        let pts: Vec<Point> = (0..m).map(|_| Point::ORIGIN.sample_in_disc(1.0, &mut rng)).collect();
        let mut g = UnGraph::<(), ()>::new_undirected();
        let nodes: Vec<_> = pts.iter().map(|_| g.add_node(())).collect();
        for a in 0..m {
            for b in a + 1..m {
                if pts[a].distance(&pts[b]) < 2.0 * r {
                    g.add_edge(nodes[a], nodes[b], ());
                }
            }
        }
        hist[connected_components(&g) - 1] += 1;
    }
    hist.iter().map(|&c| c as f64 / samples as f64).collect()
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(b.len());
    0.5 * (0..n)
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
}

/// Every state of `n` BSs over `range`, as count vectors indexed by
/// `level - r_min`.
pub fn all_count_vectors(n: u32, range: &LevelRange) -> Vec<Vec<u32>> {
    fn rec(slot: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if slot + 1 == cur.len() {
            cur[slot] = left;
            out.push(cur.clone());
            return;
        }
        for c in 0..=left {
            cur[slot] = c;
            rec(slot + 1, left - c, cur, out);
        }
    }
    let mut out = Vec::new();
    let mut cur = vec![0; range.len()];
    rec(0, n, &mut cur, &mut out);
    out
}

/// The seven transition conditions written directly on count vectors.
pub fn feasible_by_counts(sn: &[u32], sj: &[u32], r_min: i32) -> bool {
    let lv = |k: usize| r_min + k as i32;
    let total = |s: &[u32]| s.iter().enumerate().map(|(k, &c)| c as i64 * lv(k) as i64).sum::<i64>();
    let neg = |s: &[u32]| {
        s.iter()
            .enumerate()
            .filter(|(k, _)| lv(*k) < 0)
            .map(|(_, &c)| c)
            .sum::<u32>()
    };
    let asked = |s: &[u32]| {
        s.iter()
            .enumerate()
            .filter(|(k, _)| lv(*k) < 0)
            .map(|(k, &c)| c as i64 * -lv(k) as i64)
            .sum::<i64>()
    };
    if total(sn) != total(sj) || neg(sj) >= neg(sn) || asked(sj) >= asked(sn) {
        return false;
    }
    for k in 0..sn.len() {
        if lv(k) < 0 && sj[k] > sn[k] {
            return false;
        }
    }
    let mut given = 0i64;
    let mut received = 0i64;
    for k in 0..sn.len() {
        let delta = sn[k] as i64 - sj[k] as i64;
        if lv(k) > 0 {
            given += delta * lv(k) as i64;
        } else if lv(k) < 0 {
            received += delta * -lv(k) as i64;
        }
    }
    if given != received {
        return false;
    }
    let top = (0..sn.len())
        .filter(|&k| sn[k] > 0 && lv(k) > 0)
        .map(lv)
        .max()
        .unwrap_or(0);
    for k in 0..sn.len() {
        if lv(k) < 0 && sn[k] > 0 && -lv(k) > top && sj[k] == 0 {
            return false;
        }
    }
    for k in 0..sj.len() {
        if lv(k) < 0 && sj[k] > 0 && (0..sj.len()).any(|m| sj[m] > 0 && lv(m) >= -lv(k)) {
            return false;
        }
    }
    true
}

pub fn to_state(counts: &[u32], r_min: i32) -> SystemState {
    SystemState::from_counts(
        counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(k, &c)| (r_min + k as i32, c)),
    )
}

/// Exhaustive feasible set of `sn`, in enumeration order.
pub fn feasible_exhaustive(sn: &[u32], range: &LevelRange) -> Vec<SystemState> {
    let n = sn.iter().sum();
    all_count_vectors(n, range)
        .into_iter()
        .filter(|sj| feasible_by_counts(sn, sj, range.r_min))
        .map(|sj| to_state(&sj, range.r_min))
        .collect()
}
