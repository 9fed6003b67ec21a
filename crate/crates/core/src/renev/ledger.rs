use std::collections::BTreeMap;

use serde::Serialize;

use crate::error::Result;
use crate::scenario::{BaseStation, BsId, Tier};
use crate::slicing::{Decision, Grant, Pool, SliceBudget, SliceScheme};

/// An RB id of the donor's band that is currently lent out.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LentRb {
    /// Every BS currently holding this id. Only the macro BS may have more
    /// than one, and then they are pairwise non-overlapping.
    pub recipients: Vec<BsId>,
    /// Budget pool the id left when it was first lent.
    pub pool: Pool,
}

/// RBs received in one transfer and still held.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Loan {
    pub transfer: usize,
    pub donor: BsId,
    pub rbs: Vec<u32>,
    pub pool: Pool,
}

/// Per-BS accounting of owned, used, lent and borrowed RBs.
///
/// `r = RB - used - lent + borrowed` is always derived. Used RBs are charged
/// to borrowed RBs first, so an SC can lend back only its own idle ids.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BsLedger {
    pub id: BsId,
    pub tier: Tier,
    owned: Vec<u32>,
    lent: BTreeMap<u32, LentRb>,
    borrowed: Vec<Loan>,
    used: u32,
    slices: SliceBudget,
}

impl BsLedger {
    pub fn new(bs: &BaseStation, scheme: &SliceScheme) -> Self {
        BsLedger {
            id: bs.id,
            tier: bs.tier,
            owned: (bs.first_rb..bs.first_rb + bs.initial_rb_count).collect(),
            lent: BTreeMap::new(),
            borrowed: Vec::new(),
            used: 0,
            slices: SliceBudget::new(scheme, bs.initial_rb_count),
        }
    }

    pub fn initial_rbs(&self) -> u32 {
        self.owned.len() as u32
    }

    pub fn owned_ids(&self) -> &[u32] {
        &self.owned
    }

    pub fn used(&self) -> u32 {
        self.used
    }

    pub fn lent_count(&self) -> u32 {
        self.lent.len() as u32
    }

    pub fn lent(&self) -> &BTreeMap<u32, LentRb> {
        &self.lent
    }

    pub fn borrowed_count(&self) -> u32 {
        self.borrowed.iter().map(|l| l.rbs.len() as u32).sum()
    }

    pub fn loans(&self) -> &[Loan] {
        &self.borrowed
    }

    pub fn slices(&self) -> &SliceBudget {
        &self.slices
    }

    pub fn capacity(&self) -> u32 {
        self.initial_rbs() - self.lent_count() + self.borrowed_count()
    }

    /// `r`, the RBs neither used nor lent.
    pub fn available(&self) -> u32 {
        self.capacity() - self.used
    }

    pub fn usage_pct(&self) -> f64 {
        let cap = self.capacity();
        if cap == 0 {
            100.0
        } else {
            100.0 * self.used as f64 / cap as f64
        }
    }

    pub fn admit(&mut self, slice: usize, demand: u32) -> Result<Decision> {
        let d = self.slices.admit(slice, demand)?;
        if let Decision::Admitted(g) = &d {
            self.used += g.total();
        }
        Ok(d)
    }

    pub fn release(&mut self, grant: &Grant) {
        self.slices.release(grant);
        self.used -= grant.total();
    }

    /// Own ids that are idle and not lent.
    fn own_free(&self) -> u32 {
        let own_used = self.used.saturating_sub(self.borrowed_count());
        self.initial_rbs() - self.lent_count() - own_used
    }

    /// Fresh own RBs this BS could lend now.
    pub fn lendable(&self) -> u32 {
        self.own_free().min(self.slices.lendable())
    }

    /// Own ids not currently lent, highest first.
    pub fn unlent_ids(&self) -> impl Iterator<Item = u32> + '_ {
        self.owned
            .iter()
            .rev()
            .copied()
            .filter(|id| !self.lent.contains_key(id))
    }

    /// Lend `count` fresh ids to `recipient`. Caller checked `lendable`.
    pub(crate) fn lend_fresh(&mut self, recipient: BsId, count: u32) -> Vec<u32> {
        debug_assert!(count <= self.lendable());
        let ids: Vec<u32> = self.unlent_ids().take(count as usize).collect();
        for &id in &ids {
            let pool = self.slices.take_for_lending().expect("lendable checked by caller");
            self.lent.insert(
                id,
                LentRb {
                    recipients: vec![recipient],
                    pool,
                },
            );
        }
        ids
    }

    /// Add `recipient` as a further holder of an already lent id.
    pub(crate) fn lend_reused(&mut self, id: u32, recipient: BsId) {
        let entry = self.lent.get_mut(&id).expect("reused id must be lent");
        debug_assert!(!entry.recipients.contains(&recipient));
        entry.recipients.push(recipient);
    }

    /// `recipient` gives `id` back. The id returns to the budget when no
    /// holder is left.
    pub(crate) fn take_back(&mut self, id: u32, recipient: BsId) {
        let entry = self.lent.get_mut(&id).expect("returned id must be lent");
        entry.recipients.retain(|&r| r != recipient);
        if entry.recipients.is_empty() {
            let pool = entry.pool;
            self.lent.remove(&id);
            self.slices.add(pool, 1);
        }
    }

    pub(crate) fn receive(&mut self, transfer: usize, donor: BsId, rbs: Vec<u32>, slice: usize) {
        let pool = self.slices.borrow_pool(slice);
        self.slices.add(pool, rbs.len() as u32);
        self.borrowed.push(Loan {
            transfer,
            donor,
            rbs,
            pool,
        });
    }

    /// Detach up to `max` idle borrowed RBs, most recent loan first.
    /// Returns `(transfer, donor, ids)` per touched loan.
    pub(crate) fn give_back(&mut self, max: u32) -> Vec<(usize, BsId, Vec<u32>)> {
        let mut left = max.min(self.available());
        let mut out = Vec::new();
        for loan in self.borrowed.iter_mut().rev() {
            if left == 0 {
                break;
            }
            let m = left.min(loan.rbs.len() as u32).min(self.slices.free_in(loan.pool));
            if m == 0 {
                continue;
            }
            self.slices.remove(loan.pool, m);
            let ids = loan.rbs.split_off(loan.rbs.len() - m as usize);
            left -= m;
            out.push((loan.transfer, loan.donor, ids));
        }
        self.borrowed.retain(|l| !l.rbs.is_empty());
        out
    }

    /// Internal consistency of this ledger alone.
    pub fn check(&self) -> std::result::Result<(), String> {
        if self.slices.capacity() != self.capacity() {
            return Err(format!(
                "BS {}: slice capacity {} != ledger capacity {}",
                self.id,
                self.slices.capacity(),
                self.capacity()
            ));
        }
        if self.slices.used() != self.used {
            return Err(format!("BS {}: slice usage disagrees with ledger", self.id));
        }
        if self.used > self.capacity() {
            return Err(format!("BS {}: used exceeds capacity", self.id));
        }
        for (id, l) in &self.lent {
            if self.owned.binary_search(id).is_err() {
                return Err(format!("BS {}: lent id {id} not owned", self.id));
            }
            if l.recipients.is_empty() {
                return Err(format!("BS {}: lent id {id} has no holder", self.id));
            }
        }
        Ok(())
    }
}
