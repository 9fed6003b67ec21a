//! Signaling-overhead state model.
//!
//! A state counts how many BSs sit at each available-resource level `r`.
//! Negative levels are Requesting BSs. RENEV moves the system from a state to
//! one of its feasible future states; the kernel is uniform over that set
//! unless an empirical kernel is supplied.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::throughput::binomial;
use crate::error::{Error, Result};

pub const DEFAULT_STATE_CAP: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LevelRange {
    pub r_min: i32,
    pub r_max: i32,
}

impl LevelRange {
    pub fn new(r_min: i32, r_max: i32) -> Self {
        assert!(r_min <= r_max);
        LevelRange { r_min, r_max }
    }

    pub fn levels(&self) -> impl DoubleEndedIterator<Item = i32> + Clone {
        self.r_min..=self.r_max
    }

    pub fn len(&self) -> usize {
        (self.r_max - self.r_min + 1) as usize
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn widen(&self, level: i32) -> Self {
        LevelRange {
            r_min: self.r_min.min(level),
            r_max: self.r_max.max(level),
        }
    }
}

/// Sparse count vector: level -> number of BSs at that level (non-zero only).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SystemState(BTreeMap<i32, u32>);

impl SystemState {
    pub fn from_levels(levels: impl IntoIterator<Item = i32>) -> Self {
        let mut m = BTreeMap::new();
        for r in levels {
            *m.entry(r).or_insert(0) += 1;
        }
        SystemState(m)
    }

    pub fn from_counts(counts: impl IntoIterator<Item = (i32, u32)>) -> Self {
        SystemState(counts.into_iter().filter(|&(_, c)| c > 0).collect())
    }

    pub fn count(&self, level: i32) -> u32 {
        self.0.get(&level).copied().unwrap_or(0)
    }

    pub fn counts(&self) -> impl Iterator<Item = (i32, u32)> + '_ {
        self.0.iter().map(|(&r, &c)| (r, c))
    }

    pub fn bs_count(&self) -> u32 {
        self.0.values().sum()
    }

    /// `n_R`.
    pub fn requesters(&self) -> u32 {
        self.0.range(..0).map(|(_, &c)| c).sum()
    }

    /// RBs requested, as a positive number.
    pub fn requested(&self) -> i64 {
        self.0.range(..0).map(|(&r, &c)| -(r as i64) * c as i64).sum()
    }

    pub fn resources(&self) -> i64 {
        self.0.iter().map(|(&r, &c)| r as i64 * c as i64).sum()
    }

    pub fn max_level(&self) -> Option<i32> {
        self.0.keys().next_back().copied()
    }

    pub fn min_level(&self) -> Option<i32> {
        self.0.keys().next().copied()
    }

    /// Add `q` BSs at `level` (eNB replicas).
    pub fn with_extra(&self, level: i32, q: u32) -> Self {
        let mut m = self.0.clone();
        if q > 0 {
            *m.entry(level).or_insert(0) += q;
        }
        SystemState(m)
    }

    pub fn range(&self) -> Option<LevelRange> {
        Some(LevelRange::new(self.min_level()?, self.max_level()?))
    }
}

/// Outcome of the seven feasibility conditions, in order.
pub fn conditions(sn: &SystemState, sj: &SystemState) -> [bool; 7] {
    // 1. resources are conserved
    let c1 = sj.resources() == sn.resources();
    // 2. fewer requesters
    let c2 = sj.requesters() < sn.requesters();
    // 3. fewer requested RBs
    let c3 = sj.requested() < sn.requested();
    // 4. no new requesters, and none more per negative level
    let c4 = sj.0.range(..0).all(|(&r, &c)| c <= sn.count(r));
    // 5. RBs given by donors equal RBs received by requesters
    let given: i64 =
        sn.0.keys()
            .chain(sj.0.keys())
            .filter(|&&r| r > 0)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|&r| (sn.count(r) as i64 - sj.count(r) as i64) * r as i64)
            .sum();
    let received: i64 =
        sn.0.keys()
            .chain(sj.0.keys())
            .filter(|&&r| r < 0)
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .map(|&r| (sn.count(r) as i64 - sj.count(r) as i64) * -(r as i64))
            .sum();
    let c5 = given == received;
    // 6. requesters whose deficit exceeds every available level stay put
    let best = sn.0.range(1..).map(|(&r, _)| r).next_back().unwrap_or(0);
    let c6 =
        sn.0.range(..0)
            .filter(|(&r, _)| -r > best)
            .all(|(&r, _)| sj.count(r) != 0);
    // 7. no remaining requester could still be covered by a single BS
    let c7 = sj.0.range(..0).all(|(&r, _)| sj.0.range(-r..).next().is_none());
    [c1, c2, c3, c4, c5, c6, c7]
}

pub fn is_feasible(sn: &SystemState, sj: &SystemState) -> bool {
    conditions(sn, sj).iter().all(|&c| c)
}

fn choose_u64(n: u64, k: u64) -> u64 {
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
        if acc > u64::MAX as u128 {
            return u64::MAX;
        }
    }
    acc as u64
}

/// Upper bound on the candidates the pruned generator visits.
pub fn candidate_bound(sn: &SystemState, range: &LevelRange) -> u64 {
    let neg: u64 =
        sn.0.range(..0)
            .map(|(_, &c)| c as u64 + 1)
            .fold(1u64, |a, b| a.saturating_mul(b));
    let nonneg_levels = (range.r_max.max(-1) + 1) as u64;
    let n = sn.bs_count() as u64;
    let multisets = if nonneg_levels == 0 {
        1
    } else {
        choose_u64(n + nonneg_levels - 1, n)
    };
    neg.saturating_mul(multisets)
}

/// All states of `range` reachable from `sn` under the seven conditions.
///
/// Candidates are generated with conditions 1 and 4 built in (negative part
/// a sub-multiset of the requesters, non-negative part with the conserved
/// sum); each one is then checked against every condition.
pub fn feasible_states(sn: &SystemState, range: &LevelRange, cap: u64) -> Result<Vec<SystemState>> {
    let bound = candidate_bound(sn, range);
    if bound > cap {
        return Err(Error::StateSpaceTooLarge { count: bound, cap });
    }
    if sn.requesters() == 0 {
        return Ok(Vec::new());
    }
    let n = sn.bs_count();
    let total = sn.resources();
    let neg: Vec<(i32, u32)> = sn.0.range(..0).map(|(&r, &c)| (r, c)).collect();
    let pos_levels: Vec<i32> = range.levels().filter(|&r| r >= 0).rev().collect();
    let mut out = Vec::new();
    let mut neg_pick = vec![0u32; neg.len()];
    loop {
        let used: u32 = neg_pick.iter().sum();
        let neg_sum: i64 = neg.iter().zip(&neg_pick).map(|(&(r, _), &c)| r as i64 * c as i64).sum();
        if used <= n {
            let rest = total - neg_sum;
            let mut partial: Vec<(i32, u32)> = neg.iter().zip(&neg_pick).map(|(&(r, _), &c)| (r, c)).collect();
            fill_nonneg(&pos_levels, 0, n - used, rest, &mut partial, &mut |counts| {
                let cand = SystemState::from_counts(counts.iter().copied());
                if is_feasible(sn, &cand) {
                    out.push(cand);
                }
            });
        }
        // odometer over the negative part
        let mut k = 0;
        loop {
            if k == neg.len() {
                out.sort();
                out.dedup();
                return Ok(out);
            }
            if neg_pick[k] < neg[k].1 {
                neg_pick[k] += 1;
                break;
            }
            neg_pick[k] = 0;
            k += 1;
        }
    }
}

/// Distribute `count` BSs over `levels[idx..]` (descending, non-negative)
/// so that their levels add up to `sum`.
fn fill_nonneg(
    levels: &[i32],
    idx: usize,
    count: u32,
    sum: i64,
    acc: &mut Vec<(i32, u32)>,
    emit: &mut impl FnMut(&[(i32, u32)]),
) {
    if sum < 0 {
        return;
    }
    if idx == levels.len() {
        if count == 0 && sum == 0 {
            emit(acc);
        }
        return;
    }
    let r = levels[idx] as i64;
    let next_max = levels.get(idx + 1).map_or(-1, |&l| l as i64);
    for x in 0..=count {
        let left = sum - x as i64 * r;
        if left < 0 {
            break;
        }
        let rem = (count - x) as i64;
        if next_max < 0 {
            if rem != 0 || left != 0 {
                continue;
            }
        } else if left > rem * next_max {
            continue;
        }
        acc.push((levels[idx], x));
        fill_nonneg(levels, idx + 1, count - x, left, acc, emit);
        acc.pop();
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct StateDistribution {
    pub states: Vec<SystemState>,
    pub probs: Vec<f64>,
    /// Mass on requester-free states that are not tracked one by one. Such
    /// states never move and add nothing to any expectation.
    pub settled: f64,
}

impl StateDistribution {
    /// Histogram of observed states.
    pub fn from_samples<'a>(samples: impl IntoIterator<Item = &'a SystemState>) -> Self {
        let mut m: BTreeMap<SystemState, u64> = BTreeMap::new();
        let mut n = 0u64;
        for s in samples {
            *m.entry(s.clone()).or_insert(0) += 1;
            n += 1;
        }
        Self::from_weights(m.into_iter().map(|(s, c)| (s, c as f64 / n.max(1) as f64)))
    }

    /// Merge duplicate states; keeps a deterministic (sorted) order.
    pub fn from_weights(items: impl IntoIterator<Item = (SystemState, f64)>) -> Self {
        let mut m: BTreeMap<SystemState, f64> = BTreeMap::new();
        for (s, p) in items {
            if p > 0.0 {
                *m.entry(s).or_insert(0.0) += p;
            }
        }
        let (states, probs) = m.into_iter().unzip();
        StateDistribution {
            states,
            probs,
            settled: 0.0,
        }
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum::<f64>() + self.settled
    }

    pub fn expected_requesters(&self) -> f64 {
        self.states
            .iter()
            .zip(&self.probs)
            .map(|(s, p)| s.requesters() as f64 * p)
            .sum()
    }

    pub fn range(&self) -> Option<LevelRange> {
        let lo = self.states.iter().filter_map(|s| s.min_level()).min()?;
        let hi = self.states.iter().filter_map(|s| s.max_level()).max()?;
        Some(LevelRange::new(lo, hi))
    }
}

/// Number of multisets of `count` levels from `0..=max` adding up to `sum`.
fn multisets(count: u32, sum: i64, max: i32, memo: &mut HashMap<(u32, i64, i32), f64>) -> f64 {
    if sum < 0 || max < 0 {
        return if count == 0 && sum == 0 { 1.0 } else { 0.0 };
    }
    if count == 0 || max == 0 {
        return if sum == 0 { 1.0 } else { 0.0 };
    }
    if sum > count as i64 * max as i64 {
        return 0.0;
    }
    if let Some(&v) = memo.get(&(count, sum, max)) {
        return v;
    }
    let v = multisets(count, sum, max - 1, memo) + multisets(count - 1, sum - max as i64, max, memo);
    memo.insert((count, sum, max), v);
    v
}

/// What a uniform transition out of one state looks like.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Successors {
    /// `|F(S_n)|`.
    pub count: f64,
    /// Sum of `n_R` over `F(S_n)`.
    pub requester_sum: f64,
    /// Members of `F(S_n)` that still hold requesters, when materialised.
    pub pending: Vec<SystemState>,
}

/// Count `F(S_n)` without listing it.
///
/// Once the negative part of a candidate is fixed, the conditions only
/// restrict its non-negative part through the resource total and the
/// highest level left standing next to the remaining requesters, so each
/// negative part contributes a partition count. Only members that keep a
/// requester are listed (with `materialize`); the cap applies to them.
pub fn successors(sn: &SystemState, range: &LevelRange, materialize: bool, cap: u64) -> Result<Successors> {
    let mut out = Successors::default();
    let nr = sn.requesters();
    if nr == 0 {
        return Ok(out);
    }
    let n = sn.bs_count();
    let total = sn.resources();
    let requested = sn.requested();
    let best = sn.0.range(1..).map(|(&r, _)| r).next_back().unwrap_or(0);
    let neg: Vec<(i32, u32)> = sn.0.range(..0).map(|(&r, &c)| (r, c)).collect();
    let mut memo = HashMap::new();
    let mut listed = 0u64;
    let mut pick = vec![0u32; neg.len()];
    loop {
        let used: u32 = pick.iter().sum();
        let asked: i64 = neg.iter().zip(&pick).map(|(&(r, _), &c)| -(r as i64) * c as i64).sum();
        let stuck_ok = neg.iter().zip(&pick).all(|(&(r, _), &c)| -r <= best || c > 0);
        if used < nr && asked < requested && stuck_ok {
            let top = neg
                .iter()
                .zip(&pick)
                .filter(|(_, &c)| c > 0)
                .map(|(&(r, _), _)| -r - 1)
                .min()
                .unwrap_or(range.r_max)
                .min(range.r_max);
            let rest = total + asked;
            let cnt = multisets(n - used, rest, top, &mut memo);
            out.count += cnt;
            out.requester_sum += cnt * used as f64;
            if materialize && used > 0 && cnt > 0.0 {
                listed += cnt as u64;
                if listed > cap {
                    return Err(Error::StateSpaceTooLarge { count: listed, cap });
                }
                let levels: Vec<i32> = (0..=top).rev().collect();
                let mut partial: Vec<(i32, u32)> = neg.iter().zip(&pick).map(|(&(r, _), &c)| (r, c)).collect();
                fill_nonneg(&levels, 0, n - used, rest, &mut partial, &mut |counts| {
                    out.pending.push(SystemState::from_counts(counts.iter().copied()));
                });
            }
        }
        let mut k = 0;
        loop {
            if k == neg.len() {
                return Ok(out);
            }
            if pick[k] < neg[k].1 {
                pick[k] += 1;
                break;
            }
            pick[k] = 0;
            k += 1;
        }
    }
}

/// Transition counts observed in the simulator.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalKernel {
    counts: BTreeMap<SystemState, BTreeMap<SystemState, u64>>,
}

impl EmpiricalKernel {
    pub fn record(&mut self, from: SystemState, to: SystemState) {
        *self.counts.entry(from).or_default().entry(to).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &EmpiricalKernel) {
        for (from, row) in &other.counts {
            let dst = self.counts.entry(from.clone()).or_default();
            for (to, c) in row {
                *dst.entry(to.clone()).or_insert(0) += c;
            }
        }
    }

    pub fn row(&self, from: &SystemState) -> Option<Vec<(SystemState, f64)>> {
        let row = self.counts.get(from)?;
        let n: u64 = row.values().sum();
        Some(row.iter().map(|(s, &c)| (s.clone(), c as f64 / n as f64)).collect())
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, Copy)]
pub enum Kernel<'a> {
    Uniform,
    /// Observed transitions; states never observed fall back to uniform.
    Empirical(&'a EmpiricalKernel),
}

/// One row of the transition operator, with requester-free targets lumped.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Row {
    pub pending: Vec<(SystemState, f64)>,
    pub settled: f64,
    pub expected_requesters: f64,
}

pub fn transition_row(sn: &SystemState, range: &LevelRange, kernel: Kernel<'_>, cap: u64) -> Result<Row> {
    row_with(sn, range, kernel, cap, true)
}

fn row_with(sn: &SystemState, range: &LevelRange, kernel: Kernel<'_>, cap: u64, materialize: bool) -> Result<Row> {
    if let Kernel::Empirical(k) = kernel {
        if let Some(row) = k.row(sn) {
            let mut out = Row::default();
            for (s, p) in row {
                out.expected_requesters += p * s.requesters() as f64;
                if s.requesters() == 0 {
                    out.settled += p;
                } else {
                    out.pending.push((s, p));
                }
            }
            return Ok(out);
        }
    }
    let s = successors(sn, range, materialize, cap)?;
    if s.count == 0.0 {
        return Ok(Row {
            pending: vec![(sn.clone(), 1.0)],
            settled: 0.0,
            expected_requesters: sn.requesters() as f64,
        });
    }
    let p = 1.0 / s.count;
    Ok(Row {
        settled: 1.0 - s.pending.len() as f64 * p,
        expected_requesters: s.requester_sum * p,
        pending: s.pending.into_iter().map(|x| (x, p)).collect(),
    })
}

/// `pi' = pi P`.
pub fn step(dist: &StateDistribution, range: &LevelRange, kernel: Kernel<'_>, cap: u64) -> Result<StateDistribution> {
    let rows: Vec<Row> = dist
        .states
        .par_iter()
        .map(|s| transition_row(s, range, kernel, cap))
        .collect::<Result<_>>()?;
    let settled = dist.settled + rows.iter().zip(&dist.probs).map(|(r, p)| r.settled * p).sum::<f64>();
    let mut next = StateDistribution::from_weights(
        rows.into_iter()
            .zip(&dist.probs)
            .flat_map(|(row, &p)| row.pending.into_iter().map(move |(s, q)| (s, q * p))),
    );
    next.settled = settled;
    Ok(next)
}

/// `E[n_R]` one step after `dist`, without listing the next distribution.
pub fn expected_requesters_after(
    dist: &StateDistribution,
    range: &LevelRange,
    kernel: Kernel<'_>,
    cap: u64,
) -> Result<f64> {
    let rows: Vec<f64> = dist
        .states
        .par_iter()
        .map(|s| row_with(s, range, kernel, cap, false).map(|r| r.expected_requesters))
        .collect::<Result<_>>()?;
    Ok(rows.iter().zip(&dist.probs).map(|(e, p)| e * p).sum())
}

/// `P(Q = q | N, M)` for q = 1..=M, as a vector indexed by `q - 1`.
pub fn p_q_groups(n: usize, m: usize, p_o: f64) -> Vec<f64> {
    let mut memo = HashMap::new();
    p_q_memo(n, m, p_o, &mut memo)
}

fn p_rb(mm: usize, n: usize, m: usize, p_o: f64) -> f64 {
    if n < 1 {
        return 0.0;
    }
    let p_nm = if n > 1 {
        (m as f64 - 1.0) / (n as f64 - 1.0)
    } else {
        0.0
    };
    (mm..n).map(|k| binomial(n - 1, k, p_o) * binomial(k, mm, p_nm)).sum()
}

fn p_q_memo(n: usize, m: usize, p_o: f64, memo: &mut HashMap<(usize, usize), Vec<f64>>) -> Vec<f64> {
    if m == 0 {
        return Vec::new();
    }
    if m == 1 {
        return vec![1.0];
    }
    if let Some(v) = memo.get(&(n, m)) {
        return v.clone();
    }
    let mut v = vec![0.0; m];
    v[0] = p_rb(m - 1, n, m, p_o);
    v[1] = (0..=m - 2)
        .map(|k| p_rb(k, n, m, p_o) * p_rb(m - 2 - k, n, m, p_o))
        .sum();
    for q in 3..=m {
        let mut s = 0.0;
        for k in 0..=m - q {
            let inner = p_q_memo(n - 1 - k, m - 1 - k, p_o, memo);
            if let Some(&pq) = inner.get(q - 2) {
                s += p_rb(k, n, m, p_o) * pq;
            }
        }
        v[q - 1] = s;
    }
    let total: f64 = v.iter().sum();
    if total > 0.0 {
        for x in v.iter_mut() {
            *x /= total;
        }
    } else {
        v[m - 1] = 1.0;
    }
    memo.insert((n, m), v.clone());
    v
}

/// Inputs of the two-stage signaling expectation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SignalingInputs {
    /// Initial distribution over SC-tier states.
    pub pi: StateDistribution,
    /// `P_eNB(r_0)` as (level, probability).
    pub enb_spare: Vec<(i32, f64)>,
    pub small_cells: usize,
    pub overlap_probability: f64,
    pub range: LevelRange,
    pub cap: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct SignalingExpectations {
    pub E_nR: f64,
    pub E_ns: f64,
    pub E_nR_prime: f64,
    pub E_ns_prime: f64,
    pub E_ns_total: f64,
    pub success_probability: f64,
    pub E_I: f64,
    pub states_initial: usize,
    pub states_enb_stage: usize,
}

pub fn signaling_expectations(inp: &SignalingInputs, kernel: Kernel<'_>) -> Result<SignalingExpectations> {
    let e_nr = inp.pi.expected_requesters();
    let pi1 = step(&inp.pi, &inp.range, kernel, inp.cap)?;
    let e_ns = e_nr - pi1.expected_requesters();

    let mut stage2 = Vec::new();
    let mut range2 = inp.range;
    for (s, &p) in pi1.states.iter().zip(&pi1.probs) {
        let m = s.requesters() as usize;
        if m == 0 {
            stage2.push((s.clone(), p));
            continue;
        }
        let pq = p_q_groups(inp.small_cells, m, inp.overlap_probability);
        for &(r0, pe) in &inp.enb_spare {
            range2 = range2.widen(r0);
            for (q, &w) in pq.iter().enumerate() {
                stage2.push((s.with_extra(r0, q as u32 + 1), p * w * pe));
            }
        }
    }
    let mut pi2 = StateDistribution::from_weights(stage2);
    pi2.settled = pi1.settled;
    let e_nr2 = pi2.expected_requesters();
    let e_ns2 = e_nr2 - expected_requesters_after(&pi2, &range2, Kernel::Uniform, inp.cap)?;
    let e_total = e_ns + e_ns2;
    Ok(SignalingExpectations {
        E_nR: e_nr,
        E_ns: e_ns,
        E_nR_prime: e_nr2,
        E_ns_prime: e_ns2,
        E_ns_total: e_total,
        success_probability: if e_nr > 0.0 { e_total / e_nr } else { 0.0 },
        E_I: crate::signaling::expected_messages(inp.small_cells, e_nr, e_nr2, e_total),
        states_initial: inp.pi.states.len(),
        states_enb_stage: pi2.states.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn st(levels: &[i32]) -> SystemState {
        SystemState::from_levels(levels.iter().copied())
    }

    #[test]
    fn no_requester_has_no_future() {
        let r = LevelRange::new(-1, 2);
        assert!(feasible_states(&st(&[0, 2]), &r, DEFAULT_STATE_CAP).unwrap().is_empty());
        let row = transition_row(&st(&[0, 2]), &r, Kernel::Uniform, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(row.pending, vec![(st(&[0, 2]), 1.0)]);
        assert_eq!(row.expected_requesters, 0.0);
    }

    #[test]
    fn one_rb_transfer() {
        let r = LevelRange::new(-1, 2);
        let f = feasible_states(&st(&[-1, 2]), &r, DEFAULT_STATE_CAP).unwrap();
        assert_eq!(f, vec![st(&[0, 1])]);
    }

    #[test]
    fn members_conserve_resources_and_pass_every_condition() {
        let r = LevelRange::new(-3, 4);
        let sn = st(&[-3, -1, -1, 2, 4]);
        let f = feasible_states(&sn, &r, DEFAULT_STATE_CAP).unwrap();
        assert!(!f.is_empty());
        for sj in &f {
            assert_eq!(sj.resources(), sn.resources());
            assert!(conditions(&sn, sj).iter().all(|&c| c));
        }
    }

    #[test]
    fn uncoverable_requester_stays() {
        let r = LevelRange::new(-2, 1);
        assert!(feasible_states(&st(&[-2, 1, 1]), &r, DEFAULT_STATE_CAP)
            .unwrap()
            .is_empty());
    }

    #[test]
    fn cap_is_enforced() {
        let r = LevelRange::new(-20, 40);
        let sn = SystemState::from_levels((0..30).map(|k| k - 15));
        match feasible_states(&sn, &r, 1000) {
            Err(Error::StateSpaceTooLarge { count, cap }) => {
                assert!(count > cap);
                assert_eq!(cap, 1000);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn chain_examples() {
        let r = LevelRange::new(-1, 2);
        let inp = SignalingInputs {
            pi: StateDistribution::from_weights([(st(&[0, 2]), 1.0)]),
            enb_spare: vec![(0, 1.0)],
            small_cells: 2,
            overlap_probability: 0.1,
            range: r,
            cap: DEFAULT_STATE_CAP,
        };
        let e = signaling_expectations(&inp, Kernel::Uniform).unwrap();
        assert_eq!((e.E_nR, e.E_I), (0.0, 0.0));

        let inp = SignalingInputs {
            pi: StateDistribution::from_weights([(st(&[-1, 2]), 1.0)]),
            ..inp
        };
        let e = signaling_expectations(&inp, Kernel::Uniform).unwrap();
        assert_eq!(e.E_ns, 1.0);
        assert_eq!(e.success_probability, 1.0);
        assert_eq!(e.E_I, 5.0);
    }

    #[test]
    fn enb_stage_covers_what_the_sc_tier_cannot() {
        let r = LevelRange::new(-2, 1);
        let inp = SignalingInputs {
            pi: StateDistribution::from_weights([(st(&[-2, 1]), 1.0)]),
            enb_spare: vec![(3, 1.0)],
            small_cells: 2,
            overlap_probability: 0.0,
            range: r,
            cap: DEFAULT_STATE_CAP,
        };
        let e = signaling_expectations(&inp, Kernel::Uniform).unwrap();
        assert_eq!(e.E_ns, 0.0);
        assert_eq!(e.E_nR_prime, 1.0);
        assert_eq!(e.E_ns_prime, 1.0);
        assert_eq!(e.E_I, 3.0 + 3.0 + 2.0);
    }

    #[test]
    fn rows_sum_to_one() {
        let r = LevelRange::new(-2, 3);
        for sn in [st(&[-2, -1, 3]), st(&[-1, -1, 1, 2]), st(&[3, 3]), st(&[-2, -2, 1])] {
            let row = transition_row(&sn, &r, Kernel::Uniform, DEFAULT_STATE_CAP).unwrap();
            let s: f64 = row.pending.iter().map(|x| x.1).sum::<f64>() + row.settled;
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn empirical_kernel_overrides_uniform() {
        let r = LevelRange::new(-1, 3);
        let sn = st(&[-1, 3]);
        let mut k = EmpiricalKernel::default();
        k.record(sn.clone(), st(&[0, 2]));
        let row = transition_row(&sn, &r, Kernel::Empirical(&k), DEFAULT_STATE_CAP).unwrap();
        assert_eq!((row.settled, row.expected_requesters), (1.0, 0.0));
        assert!(row.pending.is_empty());
        let uni = successors(&sn, &r, false, DEFAULT_STATE_CAP).unwrap();
        assert!(uni.count > 1.0);
    }

    #[test]
    fn counting_matches_listing() {
        let r = LevelRange::new(-3, 4);
        let cases = [
            st(&[-3, -1, -1, 2, 4]),
            st(&[-2, -2, 1, 3, 4]),
            st(&[-1, -1, -1, 0, 1]),
            st(&[-3, -3, 2, 2]),
            st(&[-2, 0, 0, 4]),
        ];
        for sn in &cases {
            let all = feasible_states(sn, &r, DEFAULT_STATE_CAP).unwrap();
            let s = successors(sn, &r, true, DEFAULT_STATE_CAP).unwrap();
            assert_eq!(s.count, all.len() as f64, "{sn:?}");
            let req: f64 = all.iter().map(|x| x.requesters() as f64).sum();
            assert_eq!(s.requester_sum, req);
            let mut listed = s.pending.clone();
            listed.sort();
            let want: Vec<_> = all.into_iter().filter(|x| x.requesters() > 0).collect();
            assert_eq!(listed, want);
        }
    }

    #[test]
    fn q_groups_edge_cases() {
        assert!(p_q_groups(4, 0, 0.2).is_empty());
        assert_eq!(p_q_groups(4, 1, 0.2), vec![1.0]);
        let v = p_q_groups(6, 4, 0.0);
        assert_eq!(v, vec![0.0, 0.0, 0.0, 1.0]);
        for n in 1..=8 {
            for m in 1..=n {
                let v = p_q_groups(n, m, 0.15);
                assert!((v.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                assert!(v.iter().all(|&x| x >= 0.0));
            }
        }
    }
}
