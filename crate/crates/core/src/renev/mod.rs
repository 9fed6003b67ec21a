//! RENEV: inter-BS RB transfer.
//!
//! A small cell that cannot admit a user becomes the Requesting BS. It polls
//! every other small cell, nearest first, and only if none of them can cover
//! the deficit it polls the macro eNB. The donor is the qualifying BS with the
//! most spare RBs (ties: nearest, then lowest id). Exactly the deficit is
//! transferred. RBs lent by the eNB may be held by several small cells at
//! once as long as those cells do not overlap.

mod ledger;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ledger::{BsLedger, LentRb, Loan};

use crate::error::Result;
use crate::scenario::{overlaps, BaseStation, BsId, Tier, MACRO_ID};
use crate::signaling::{MessageLog, Payload, X2MessageKind};
use crate::slicing::{Decision, Grant, SliceScheme};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
#[derive(Default)]
pub struct RenevConfig {
    /// Spare RBs a donor must keep after donating.
    pub donor_floor: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Role {
    Idle,
    Requesting,
    Requested,
    Donor,
    Recipient,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct RoleChange {
    pub event: u64,
    pub bs: BsId,
    pub role: Role,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransferRecord {
    pub seq: usize,
    /// Iteration-local event index.
    pub event: u64,
    pub epoch: u32,
    pub donor: BsId,
    pub recipient: BsId,
    pub rbs: Vec<u32>,
    /// How many of `rbs` were already lent to other, non-overlapping cells.
    pub reused: u32,
    pub returned: u32,
    pub reverted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RenevFailure {
    NoDonor,
}

impl fmt::Display for RenevFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("no donor")
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct RenevStats {
    /// `n_R`: RENEV invocations.
    pub requests: u64,
    /// `n'_R`: invocations that had to poll the eNB.
    pub enb_polls: u64,
    /// `n_s_total`: successful transfers.
    pub successes: u64,
    pub sc_donations: u64,
    pub enb_donations: u64,
    pub rbs_transferred: u64,
    pub rbs_reused: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Candidate {
    bs: BsId,
    spare: u32,
    distance: f64,
}

/// One iteration's RENEV state: ledgers, roles, transfer records and the X2
/// log. Single-threaded; events are applied in call order.
#[derive(Debug, Clone)]
pub struct RenevEngine {
    stations: Vec<BaseStation>,
    ledgers: Vec<BsLedger>,
    roles: Vec<Role>,
    history: Vec<RoleChange>,
    transfers: Vec<TransferRecord>,
    log: MessageLog,
    stats: RenevStats,
    config: RenevConfig,
    event: u64,
    epoch: u32,
    /// RBs each BS keeps back for attached users it has not admitted yet.
    held: Vec<u32>,
}

impl RenevEngine {
    pub fn new(stations: &[BaseStation], scheme: &SliceScheme, config: RenevConfig) -> Self {
        Self::with_log(stations, scheme, config, MessageLog::new(stations.len()))
    }

    pub fn with_log(stations: &[BaseStation], scheme: &SliceScheme, config: RenevConfig, log: MessageLog) -> Self {
        debug_assert!(stations.iter().enumerate().all(|(k, b)| b.id == k));
        RenevEngine {
            stations: stations.to_vec(),
            ledgers: stations.iter().map(|b| BsLedger::new(b, scheme)).collect(),
            roles: vec![Role::Idle; stations.len()],
            history: Vec::new(),
            transfers: Vec::new(),
            log,
            stats: RenevStats::default(),
            config,
            event: 0,
            epoch: 0,
            held: vec![0; stations.len()],
        }
    }

    pub fn ledger(&self, bs: BsId) -> &BsLedger {
        &self.ledgers[bs]
    }

    pub fn ledgers(&self) -> &[BsLedger] {
        &self.ledgers
    }

    pub fn role(&self, bs: BsId) -> Role {
        self.roles[bs]
    }

    pub fn role_history(&self) -> &[RoleChange] {
        &self.history
    }

    pub fn transfers(&self) -> &[TransferRecord] {
        &self.transfers
    }

    pub fn log(&self) -> &MessageLog {
        &self.log
    }

    pub fn into_log(self) -> MessageLog {
        self.log
    }

    pub fn stats(&self) -> RenevStats {
        self.stats
    }

    pub fn epoch(&self) -> u32 {
        self.epoch
    }

    pub fn admit(&mut self, bs: BsId, slice: usize, demand: u32) -> Result<Decision> {
        self.event += 1;
        self.ledgers[bs].admit(slice, demand)
    }

    pub fn release(&mut self, bs: BsId, grant: &Grant) {
        self.event += 1;
        self.ledgers[bs].release(grant);
    }

    /// Keep `rbs` out of what `bs` reports as spare.
    pub fn hold(&mut self, bs: BsId, rbs: u32) {
        self.held[bs] += rbs;
    }

    pub fn unhold(&mut self, bs: BsId, rbs: u32) {
        self.held[bs] = self.held[bs].saturating_sub(rbs);
    }

    pub fn held(&self, bs: BsId) -> u32 {
        self.held[bs]
    }

    fn set_role(&mut self, bs: BsId, role: Role) {
        debug_assert!(
            bs != MACRO_ID || !matches!(role, Role::Requesting | Role::Recipient),
            "eNB cannot request or receive"
        );
        if self.roles[bs] != role {
            self.roles[bs] = role;
            self.history.push(RoleChange {
                event: self.event,
                bs,
                role,
            });
        }
    }

    fn settle(&mut self, bs: BsId) {
        let l = &self.ledgers[bs];
        let role = if l.borrowed_count() > 0 {
            Role::Recipient
        } else if l.lent_count() > 0 {
            Role::Donor
        } else {
            Role::Idle
        };
        self.set_role(bs, role);
    }

    /// Ids the eNB has lent that `requester` could also use.
    fn reusable_enb_ids(&self, requester: BsId) -> Vec<u32> {
        let req = &self.stations[requester];
        self.ledgers[MACRO_ID]
            .lent()
            .iter()
            .filter(|(_, l)| {
                l.recipients
                    .iter()
                    .all(|&r| r != requester && !overlaps(req, &self.stations[r]))
            })
            .map(|(&id, _)| id)
            .collect()
    }

    /// Spare RBs `bs` would report to `requester`.
    pub fn spare_for(&self, bs: BsId, requester: BsId) -> u32 {
        let fresh = self.ledgers[bs].lendable().saturating_sub(self.held[bs]);
        if bs == MACRO_ID {
            fresh + self.reusable_enb_ids(requester).len() as u32
        } else {
            fresh
        }
    }

    fn poll(&mut self, requester: BsId, target: BsId, deficit: u32) -> u32 {
        self.set_role(target, Role::Requested);
        let spare = self.spare_for(target, requester);
        let usage = self.ledgers[target].usage_pct();
        let power = self.stations[target].tx_power_per_rb_dbm;
        self.log.push(
            X2MessageKind::ResourceStatusRequest,
            requester,
            target,
            Payload::StatusRequest { requested_rbs: deficit },
        );
        self.log.push(
            X2MessageKind::ResourceStatusResponse,
            target,
            requester,
            Payload::StatusResponse {
                rb_usage_pct: usage,
                spare_rbs: spare,
            },
        );
        self.log.push(
            X2MessageKind::LoadInformation,
            target,
            requester,
            Payload::LoadInformation {
                tx_power_per_rb_dbm: power,
            },
        );
        spare
    }

    fn qualifies(&self, spare: u32, deficit: u32) -> bool {
        spare >= deficit && spare - deficit >= self.config.donor_floor
    }

    /// Detection phase. Polls the small cells in ascending distance, then the
    /// eNB only if no small cell qualifies.
    pub fn detect_donor(&mut self, requester: BsId, deficit: u32) -> std::result::Result<BsId, RenevFailure> {
        assert!(self.stations[requester].is_small(), "only small cells request");
        assert!(deficit >= 1, "deficit must be positive");
        let origin = self.stations[requester].position;
        let mut order: Vec<(f64, BsId)> = self
            .stations
            .iter()
            .filter(|b| b.is_small() && b.id != requester)
            .map(|b| (b.position.distance(&origin), b.id))
            .collect();
        order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

        let mut polled = Vec::with_capacity(order.len() + 1);
        let mut best: Option<Candidate> = None;
        for (distance, bs) in order {
            let spare = self.poll(requester, bs, deficit);
            polled.push(bs);
            if self.qualifies(spare, deficit) {
                let c = Candidate { bs, spare, distance };
                if best.is_none_or(|b| better(&c, &b)) {
                    best = Some(c);
                }
            }
        }
        if best.is_none() {
            self.stats.enb_polls += 1;
            let spare = self.poll(requester, MACRO_ID, deficit);
            polled.push(MACRO_ID);
            if self.qualifies(spare, deficit) {
                best = Some(Candidate {
                    bs: MACRO_ID,
                    spare,
                    distance: self.stations[MACRO_ID].position.distance(&origin),
                });
            }
        }
        for bs in polled {
            if Some(bs) != best.map(|b| b.bs) {
                self.settle(bs);
            }
        }
        best.map(|b| b.bs).ok_or(RenevFailure::NoDonor)
    }

    /// Transfer phase: move `count` RBs from `donor` to `recipient` on behalf
    /// of a user of `slice`.
    pub fn transfer(&mut self, donor: BsId, recipient: BsId, count: u32, slice: usize) -> TransferRecord {
        assert_ne!(donor, recipient);
        assert!(self.stations[recipient].is_small());
        let spare = self.spare_for(donor, recipient);
        assert!(spare >= count, "donor {donor} has {spare} spare, {count} requested");
        self.log.push(
            X2MessageKind::MetasignallingInformationRequest,
            recipient,
            donor,
            Payload::MetaRequest { requested_rbs: count },
        );

        let mut rbs = Vec::with_capacity(count as usize);
        let mut reused = 0;
        if donor == MACRO_ID {
            for id in self.reusable_enb_ids(recipient).into_iter().take(count as usize) {
                self.ledgers[MACRO_ID].lend_reused(id, recipient);
                rbs.push(id);
                reused += 1;
            }
        }
        let fresh = count - reused;
        rbs.extend(self.ledgers[donor].lend_fresh(recipient, fresh));

        let seq = self.transfers.len();
        self.ledgers[recipient].receive(seq, donor, rbs.clone(), slice);
        self.log.push(
            X2MessageKind::MetasignallingInformationAcknowledge,
            donor,
            recipient,
            Payload::MetaAck {
                admitted_rbs: rbs.clone(),
                rejected_rbs: 0,
            },
        );

        self.stats.successes += 1;
        self.stats.rbs_transferred += count as u64;
        self.stats.rbs_reused += reused as u64;
        if donor == MACRO_ID {
            self.stats.enb_donations += 1;
        } else {
            self.stats.sc_donations += 1;
        }
        let record = TransferRecord {
            seq,
            event: self.event,
            epoch: self.epoch,
            donor,
            recipient,
            rbs,
            reused,
            returned: 0,
            reverted: false,
        };
        self.transfers.push(record.clone());
        self.settle(donor);
        self.settle(recipient);
        record
    }

    /// Full RENEV invocation for a small cell short of `deficit` RBs in
    /// `slice`. Ledgers are untouched on failure.
    pub fn trigger(
        &mut self,
        requester: BsId,
        deficit: u32,
        slice: usize,
    ) -> std::result::Result<TransferRecord, RenevFailure> {
        self.event += 1;
        self.stats.requests += 1;
        self.set_role(requester, Role::Requesting);
        match self.detect_donor(requester, deficit) {
            Ok(donor) => Ok(self.transfer(donor, requester, deficit, slice)),
            Err(e) => {
                self.settle(requester);
                Err(e)
            }
        }
    }

    /// Return idle borrowed RBs of `recipient`, most recent transfer first.
    /// Returns the number of RBs handed back.
    pub fn revert(&mut self, recipient: BsId) -> u32 {
        self.event += 1;
        let returned = self.ledgers[recipient].give_back(u32::MAX);
        let mut total = 0;
        for (seq, donor, ids) in returned {
            for &id in &ids {
                self.ledgers[donor].take_back(id, recipient);
            }
            let rec = &mut self.transfers[seq];
            rec.returned += ids.len() as u32;
            rec.reverted = rec.returned as usize == rec.rbs.len();
            total += ids.len() as u32;
            self.settle(donor);
        }
        if total > 0 {
            self.settle(recipient);
        }
        total
    }

    /// End of an evaluation epoch: every recipient returns what it no longer
    /// needs.
    pub fn end_epoch(&mut self) -> u32 {
        let mut n = 0;
        // A recipient that lent its own RBs meanwhile can only return its
        // loan after its own borrowers did, so sweep until nothing moves.
        loop {
            let recipients: Vec<BsId> = (0..self.ledgers.len())
                .filter(|&b| self.ledgers[b].borrowed_count() > 0)
                .collect();
            let moved: u32 = recipients.into_iter().map(|b| self.revert(b)).sum();
            n += moved;
            if moved == 0 {
                break;
            }
        }
        self.epoch += 1;
        n
    }

    /// Distinct RB ids lent by the small-cell tier and by the eNB.
    pub fn lent_per_tier(&self) -> (u32, u32) {
        let sc = self
            .ledgers
            .iter()
            .filter(|l| l.tier == Tier::Small)
            .map(|l| l.lent_count())
            .sum();
        (sc, self.ledgers[MACRO_ID].lent_count())
    }

    pub fn trace_json(&self) -> serde_json::Result<String> {
        serde_json::to_string_pretty(&self.transfers)
    }

    /// Cross-ledger invariants: conservation, isolation, reuse only between
    /// non-overlapping cells, role consistency.
    pub fn check_invariants(&self) -> std::result::Result<(), String> {
        for l in &self.ledgers {
            l.check()?;
        }
        for donor in &self.ledgers {
            for (id, lent) in donor.lent() {
                if donor.tier == Tier::Small && lent.recipients.len() != 1 {
                    return Err(format!("SC {} id {id} held by {:?}", donor.id, lent.recipients));
                }
                for (k, &a) in lent.recipients.iter().enumerate() {
                    if a == MACRO_ID || a == donor.id {
                        return Err(format!("id {id} of {} held by {a}", donor.id));
                    }
                    for &b in &lent.recipients[k + 1..] {
                        if a == b || overlaps(&self.stations[a], &self.stations[b]) {
                            return Err(format!("eNB id {id} shared by overlapping {a} and {b}"));
                        }
                    }
                    let held = self.ledgers[a]
                        .loans()
                        .iter()
                        .any(|loan| loan.donor == donor.id && loan.rbs.contains(id));
                    if !held {
                        return Err(format!("id {id} lent by {} missing at {a}", donor.id));
                    }
                }
            }
        }
        for r in &self.ledgers {
            for loan in r.loans() {
                for id in &loan.rbs {
                    let ok = self.ledgers[loan.donor]
                        .lent()
                        .get(id)
                        .is_some_and(|l| l.recipients.contains(&r.id));
                    if !ok {
                        return Err(format!("BS {} holds id {id} not lent by {}", r.id, loan.donor));
                    }
                }
            }
        }
        let small: Vec<&BsLedger> = self.ledgers.iter().filter(|l| l.tier == Tier::Small).collect();
        let tier_total: u32 = small.iter().map(|l| l.initial_rbs()).sum();
        let tier_now: u32 = small
            .iter()
            .map(|l| {
                let from_sc: u32 = l
                    .loans()
                    .iter()
                    .filter(|x| x.donor != MACRO_ID)
                    .map(|x| x.rbs.len() as u32)
                    .sum();
                l.initial_rbs() - l.lent_count() + from_sc
            })
            .sum();
        if tier_now != tier_total {
            return Err(format!("SC tier holds {tier_now} RBs, expected {tier_total}"));
        }
        for (bs, &role) in self.roles.iter().enumerate() {
            let l = &self.ledgers[bs];
            if role == Role::Recipient && l.borrowed_count() == 0 {
                return Err(format!("BS {bs} is Recipient without borrowed RBs"));
            }
            if role == Role::Donor && l.lent_count() == 0 {
                return Err(format!("BS {bs} is Donor without lent RBs"));
            }
        }
        if self
            .history
            .iter()
            .any(|h| h.bs == MACRO_ID && matches!(h.role, Role::Requesting | Role::Recipient))
        {
            return Err("eNB took a requesting role".into());
        }
        Ok(())
    }
}

fn better(a: &Candidate, b: &Candidate) -> bool {
    a.spare
        .cmp(&b.spare)
        .then(b.distance.total_cmp(&a.distance))
        .then(b.bs.cmp(&a.bs))
        .is_gt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::Point;
    use crate::signaling::{count_messages, message_formula};

    fn bs(id: BsId, x: f64, y: f64, rbs: u32, first: u32) -> BaseStation {
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

    /// eNB with 100 RBs and small cells at the given positions, 10 RBs each.
    fn layout(points: &[(f64, f64)]) -> Vec<BaseStation> {
        let mut v = vec![bs(0, 0.0, 0.0, 100, 0)];
        for (k, &(x, y)) in points.iter().enumerate() {
            v.push(bs(k + 1, x, y, 10, 10 * k as u32));
        }
        v
    }

    fn prr() -> SliceScheme {
        SliceScheme::prr(1.0, 2)
    }

    fn fill(e: &mut RenevEngine, b: BsId, n: u32) {
        assert!(matches!(e.admit(b, 0, n).unwrap(), Decision::Admitted(_)));
    }

    #[test]
    fn enb_donates_when_small_cells_are_full() {
        let st = layout(&[(0.0, 0.0), (100.0, 0.0), (0.0, 100.0)]);
        let mut e = RenevEngine::new(&st, &prr(), RenevConfig::default());
        for b in 1..=3 {
            fill(&mut e, b, 10);
        }
        fill(&mut e, 0, 90);
        let rec = e.trigger(1, 3, 0).unwrap();
        assert_eq!(rec.donor, 0);
        assert_eq!(rec.rbs, vec![99, 98, 97]);
        assert_eq!(e.ledger(1).borrowed_count(), 3);
        assert_eq!(e.ledger(0).available(), 7);
        assert_eq!(e.log().total(), 3 * 2 + 3 + 2);
        e.check_invariants().unwrap();
    }

    #[test]
    fn nearer_donor_wins_ties() {
        let st = layout(&[(0.0, 0.0), (80.0, 0.0), (30.0, 0.0)]);
        let mut e = RenevEngine::new(&st, &prr(), RenevConfig::default());
        fill(&mut e, 1, 10);
        fill(&mut e, 2, 5);
        fill(&mut e, 3, 5);
        assert_eq!(e.trigger(1, 2, 0).unwrap().donor, 3);
    }

    #[test]
    fn most_spare_beats_proximity() {
        let st = layout(&[(0.0, 0.0), (80.0, 0.0), (30.0, 0.0)]);
        let mut e = RenevEngine::new(&st, &prr(), RenevConfig::default());
        fill(&mut e, 1, 10);
        fill(&mut e, 2, 4);
        fill(&mut e, 3, 5);
        assert_eq!(e.trigger(1, 2, 0).unwrap().donor, 2);
    }

    #[test]
    fn donor_floor_boundary() {
        let st = layout(&[(0.0, 0.0), (60.0, 0.0)]);
        let cfg = RenevConfig { donor_floor: 2 };
        let mut e = RenevEngine::new(&st, &prr(), cfg);
        fill(&mut e, 1, 10);
        fill(&mut e, 2, 5);
        // spare 5 = deficit 3 + floor 2
        assert_eq!(e.trigger(1, 3, 0).unwrap().donor, 2);

        let mut e = RenevEngine::new(&st, &prr(), cfg);
        fill(&mut e, 1, 10);
        fill(&mut e, 2, 7);
        // spare 3 = deficit, floor 2 -> eNB
        assert_eq!(e.trigger(1, 3, 0).unwrap().donor, 0);
        assert_eq!(e.stats().enb_polls, 1);
    }

    #[test]
    fn failure_leaves_ledgers_untouched() {
        let st = layout(&[(0.0, 0.0), (60.0, 0.0)]);
        let mut e = RenevEngine::new(&st, &prr(), RenevConfig::default());
        fill(&mut e, 1, 10);
        fill(&mut e, 2, 10);
        fill(&mut e, 0, 99);
        let before = e.ledgers().to_vec();
        assert_eq!(e.trigger(1, 2, 0), Err(RenevFailure::NoDonor));
        assert_eq!(e.ledgers(), &before[..]);
        assert_eq!(e.role(1), Role::Idle);
        assert_eq!(e.log().total(), message_formula(2, 1, 1, 0));
    }

    #[test]
    fn message_counts_for_one_requester() {
        let pts: Vec<(f64, f64)> = (0..6).map(|k| (60.0 * k as f64, 0.0)).collect();
        let st = layout(&pts);
        let mut e = RenevEngine::new(&st, &prr(), RenevConfig::default());
        fill(&mut e, 1, 10);
        e.trigger(1, 1, 0).unwrap();
        assert_eq!(count_messages(e.log(), 6).total, 17);

        let mut e = RenevEngine::new(&st, &prr(), RenevConfig::default());
        for b in 1..=6 {
            fill(&mut e, b, 10);
        }
        e.trigger(1, 1, 0).unwrap();
        assert_eq!(count_messages(e.log(), 6).total, 20);
    }

    #[test]
    fn enb_ids_reused_by_non_overlapping_cells() {
        // 1 and 2 far apart, 3 overlaps 1.
        let st = layout(&[(0.0, 0.0), (100.0, 0.0), (20.0, 0.0)]);
        let mut e = RenevEngine::new(&st, &prr(), RenevConfig::default());
        for b in 1..=3 {
            fill(&mut e, b, 10);
        }
        fill(&mut e, 0, 96);
        let a = e.trigger(1, 2, 0).unwrap();
        assert_eq!(a.rbs, vec![99, 98]);
        assert_eq!(e.ledger(0).lent_count(), 2);
        fill(&mut e, 1, 2);

        let b = e.trigger(2, 2, 0).unwrap();
        assert_eq!(b.donor, 0);
        assert_eq!(b.reused, 2);
        assert_eq!(b.rbs, vec![98, 99]);
        assert_eq!(e.ledger(0).lent_count(), 2);
        assert_eq!(e.ledger(0).available(), 2);
        fill(&mut e, 2, 2);

        let c = e.trigger(3, 2, 0).unwrap();
        assert_eq!(c.reused, 0);
        assert_eq!(c.rbs, vec![97, 96]);
        e.check_invariants().unwrap();
    }

    #[test]
    fn revert_full_and_partial() {
        let st = layout(&[(0.0, 0.0), (60.0, 0.0)]);
        let mut e = RenevEngine::new(&st, &prr(), RenevConfig::default());
        let g = match e.admit(1, 0, 10).unwrap() {
            Decision::Admitted(g) => g,
            _ => unreachable!(),
        };
        e.trigger(1, 2, 0).unwrap();
        e.trigger(1, 3, 0).unwrap();
        let grant_a = match e.admit(1, 0, 2).unwrap() {
            Decision::Admitted(g) => g,
            _ => unreachable!(),
        };
        let _grant_b = match e.admit(1, 0, 3).unwrap() {
            Decision::Admitted(g) => g,
            _ => unreachable!(),
        };
        assert_eq!(e.revert(1), 0);

        // Partial drop of 2 RBs: two ids of the latest transfer go back.
        e.release(1, &grant_a);
        assert_eq!(e.revert(1), 2);
        let t = e.transfers();
        assert_eq!((t[1].returned, t[1].reverted), (2, false));
        assert_eq!(t[0].returned, 0);
        assert_eq!(e.ledger(2).available(), 7);
        e.check_invariants().unwrap();

        e.release(1, &g);
        e.end_epoch();
        assert_eq!(e.ledger(1).borrowed_count(), 0);
        assert_eq!(e.ledger(2).lent_count(), 0);
        assert_eq!(e.ledger(2).available(), 10);
        assert!(e.transfers().iter().all(|t| t.reverted));
        assert_eq!(e.role(1), Role::Idle);
        assert_eq!(e.role(2), Role::Idle);
        assert_eq!(e.revert(1), 0);
        e.check_invariants().unwrap();
    }

    #[test]
    fn roles_follow_ledgers() {
        let st = layout(&[(0.0, 0.0), (60.0, 0.0)]);
        let mut e = RenevEngine::new(&st, &prr(), RenevConfig::default());
        fill(&mut e, 1, 10);
        e.trigger(1, 4, 0).unwrap();
        assert_eq!(e.role(1), Role::Recipient);
        assert_eq!(e.role(2), Role::Donor);
        let roles: Vec<Role> = e.role_history().iter().filter(|h| h.bs == 1).map(|h| h.role).collect();
        assert_eq!(roles, vec![Role::Requesting, Role::Recipient]);
        let json = e.trace_json().unwrap();
        assert!(json.contains("\"donor\": 2"));
    }

    #[test]
    fn nvs_borrowed_rbs_land_in_requesting_slice() {
        let st = layout(&[(0.0, 0.0), (60.0, 0.0)]);
        let mut e = RenevEngine::new(&st, &SliceScheme::nvs(2), RenevConfig::default());
        fill(&mut e, 1, 5);
        assert!(matches!(e.admit(1, 0, 1).unwrap(), Decision::Rejected(_)));
        e.trigger(1, 1, 0).unwrap();
        assert!(matches!(e.admit(1, 0, 1).unwrap(), Decision::Admitted(_)));
        assert!(matches!(e.admit(1, 1, 5).unwrap(), Decision::Admitted(_)));
        assert_eq!(
            e.ledger(2).slices().reserved_budget(0) + e.ledger(2).slices().reserved_budget(1),
            9
        );
        e.check_invariants().unwrap();
    }
}
