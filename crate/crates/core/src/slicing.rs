//! Per-BS virtualization baselines.
//!
//! * NVS: the BS capacity is split into isolated, equal slices. A user is
//!   admitted only from its own slice.
//! * PRR(p): a fraction `1 - p` of the capacity is reserved and split
//!   equally among slices; the remaining fraction `p` is a shared pool
//!   served first-come first-served. `PRR 100%` (p = 1) is a single pool.
//!
//! Admission is all-or-nothing: a user either receives its full RB demand
//! or is rejected.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scenario::largest_remainder;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SchemeKind {
    Nvs,
    /// `shared_fraction` is the share of RBs in the common pool.
    Prr {
        shared_fraction: f64,
    },
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SchemeKind::Nvs => f.write_str("nvs"),
            SchemeKind::Prr { shared_fraction } => write!(f, "prr:{shared_fraction}"),
        }
    }
}

impl FromStr for SchemeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        if s == "nvs" {
            return Ok(SchemeKind::Nvs);
        }
        if let Some(rest) = s.strip_prefix("prr:") {
            let p: f64 = rest
                .trim_end_matches('%')
                .parse()
                .map_err(|_| Error::config("scheme", format!("bad shared fraction in `{s}`")))?;
            let p = if rest.ends_with('%') { p / 100.0 } else { p };
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::config("scheme", "PRR shared fraction must lie in [0, 1]"));
            }
            return Ok(SchemeKind::Prr { shared_fraction: p });
        }
        Err(Error::config(
            "scheme",
            format!("unknown scheme `{s}` (expected `nvs` or `prr:<shared-fraction>`)"),
        ))
    }
}

impl Serialize for SchemeKind {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for SchemeKind {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SliceScheme {
    pub kind: SchemeKind,
    pub slice_count: usize,
}

impl SliceScheme {
    pub fn nvs(slice_count: usize) -> Self {
        SliceScheme {
            kind: SchemeKind::Nvs,
            slice_count,
        }
    }

    pub fn prr(shared_fraction: f64, slice_count: usize) -> Self {
        SliceScheme {
            kind: SchemeKind::Prr { shared_fraction },
            slice_count,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.slice_count == 0 {
            return Err(Error::config("slice_count", "must be at least 1"));
        }
        Ok(())
    }
}

/// Where a block of RBs sits inside a BS's slice budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Pool {
    Slice(usize),
    Shared,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Grant {
    pub slice: usize,
    pub from_reserved: u32,
    pub from_shared: u32,
}

impl Grant {
    pub fn total(&self) -> u32 {
        self.from_reserved + self.from_shared
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RejectCause {
    /// The slice (plus shared pool, under PRR) cannot cover the demand.
    InsufficientSliceBudget,
    /// The demand exceeds the whole BS capacity.
    ExceedsTotalBudget,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Rejection {
    pub slice: usize,
    pub demand: u32,
    /// RBs the slice could have drawn at the time of the request.
    pub free_for_slice: u32,
    pub cause: RejectCause,
}

impl Rejection {
    pub fn deficit(&self) -> u32 {
        self.demand - self.free_for_slice
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Admitted(Grant),
    Rejected(Rejection),
}

/// Slice budgets of one BS. The sum of all pools always equals the BS's
/// current capacity (initial RBs minus lent plus borrowed).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SliceBudget {
    #[serde(skip)]
    kind: SchemeKind,
    /// NVS: slice budgets. PRR: reserved part per slice.
    reserved: Vec<u32>,
    shared: u32,
    used_reserved: Vec<u32>,
    used_shared: u32,
}

impl SliceBudget {
    pub fn new(scheme: &SliceScheme, capacity: u32) -> Self {
        let n = scheme.slice_count.max(1);
        let (reserved, shared) = match scheme.kind {
            SchemeKind::Nvs => (
                largest_remainder(capacity as u64, &vec![1.0; n])
                    .into_iter()
                    .map(|v| v as u32)
                    .collect(),
                0,
            ),
            SchemeKind::Prr { shared_fraction } => {
                let reserved_total = ((1.0 - shared_fraction) * capacity as f64).round() as u32;
                let reserved_total = reserved_total.min(capacity);
                (
                    largest_remainder(reserved_total as u64, &vec![1.0; n])
                        .into_iter()
                        .map(|v| v as u32)
                        .collect(),
                    capacity - reserved_total,
                )
            }
        };
        SliceBudget {
            kind: scheme.kind,
            reserved,
            shared,
            used_reserved: vec![0; n],
            used_shared: 0,
        }
    }

    pub fn slice_count(&self) -> usize {
        self.reserved.len()
    }

    pub fn capacity(&self) -> u32 {
        self.reserved.iter().sum::<u32>() + self.shared
    }

    pub fn used(&self) -> u32 {
        self.used_reserved.iter().sum::<u32>() + self.used_shared
    }

    pub fn free(&self) -> u32 {
        self.capacity() - self.used()
    }

    pub fn reserved_budget(&self, slice: usize) -> u32 {
        self.reserved[slice]
    }

    pub fn slice_usage(&self, slice: usize) -> u32 {
        self.used_reserved[slice]
    }

    pub fn shared_budget(&self) -> u32 {
        self.shared
    }

    pub fn shared_usage(&self) -> u32 {
        self.used_shared
    }

    fn check_slice(&self, slice: usize) -> Result<()> {
        if slice >= self.reserved.len() {
            return Err(Error::UnknownSlice {
                slice,
                slice_count: self.reserved.len(),
            });
        }
        Ok(())
    }

    fn reserved_free(&self, slice: usize) -> u32 {
        self.reserved[slice] - self.used_reserved[slice]
    }

    fn shared_free(&self) -> u32 {
        self.shared - self.used_shared
    }

    /// RBs a user of `slice` could draw right now.
    pub fn free_for(&self, slice: usize) -> Result<u32> {
        self.check_slice(slice)?;
        Ok(self.reserved_free(slice) + self.shared_free())
    }

    /// All-or-nothing admission of `demand` RBs for a user of `slice`.
    pub fn admit(&mut self, slice: usize, demand: u32) -> Result<Decision> {
        let free = self.free_for(slice)?;
        if demand > free {
            let cause = if demand > self.capacity() {
                RejectCause::ExceedsTotalBudget
            } else {
                RejectCause::InsufficientSliceBudget
            };
            return Ok(Decision::Rejected(Rejection {
                slice,
                demand,
                free_for_slice: free,
                cause,
            }));
        }
        let from_reserved = demand.min(self.reserved_free(slice));
        let from_shared = demand - from_reserved;
        self.used_reserved[slice] += from_reserved;
        self.used_shared += from_shared;
        Ok(Decision::Admitted(Grant {
            slice,
            from_reserved,
            from_shared,
        }))
    }

    pub fn release(&mut self, grant: &Grant) {
        self.used_reserved[grant.slice] -= grant.from_reserved;
        self.used_shared -= grant.from_shared;
    }

    /// RBs this BS may lend without touching another slice's guarantee.
    /// Under NVS every free slice RB is lendable; under PRR only the free
    /// part of the shared pool is.
    pub fn lendable(&self) -> u32 {
        match self.kind {
            SchemeKind::Nvs => self.free(),
            SchemeKind::Prr { .. } => self.shared_free(),
        }
    }

    /// Remove one free RB from the budget for lending and report its pool.
    pub fn take_for_lending(&mut self) -> Option<Pool> {
        match self.kind {
            SchemeKind::Nvs => {
                let (s, free) = (0..self.reserved.len())
                    .map(|s| (s, self.reserved_free(s)))
                    .max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0)))?;
                if free == 0 {
                    return None;
                }
                self.reserved[s] -= 1;
                Some(Pool::Slice(s))
            }
            SchemeKind::Prr { .. } => {
                if self.shared_free() == 0 {
                    return None;
                }
                self.shared -= 1;
                Some(Pool::Shared)
            }
        }
    }

    /// Put RBs back into `pool` (lent RBs coming home, or borrowed RBs
    /// arriving).
    pub fn add(&mut self, pool: Pool, count: u32) {
        match pool {
            Pool::Slice(s) => self.reserved[s] += count,
            Pool::Shared => self.shared += count,
        }
    }

    /// Free RBs currently sitting in `pool`.
    pub fn free_in(&self, pool: Pool) -> u32 {
        match pool {
            Pool::Slice(s) => self.reserved_free(s),
            Pool::Shared => self.shared_free(),
        }
    }

    /// Remove `count` free RBs from `pool`. Caller checks `free_in` first.
    pub fn remove(&mut self, pool: Pool, count: u32) {
        debug_assert!(self.free_in(pool) >= count);
        match pool {
            Pool::Slice(s) => self.reserved[s] -= count,
            Pool::Shared => self.shared -= count,
        }
    }

    /// Pool that receives RBs borrowed on behalf of a user of `slice`.
    pub fn borrow_pool(&self, slice: usize) -> Pool {
        match self.kind {
            SchemeKind::Nvs => Pool::Slice(slice),
            SchemeKind::Prr { .. } => Pool::Shared,
        }
    }

    /// Extra RBs needed on top of the free ones so that `pending` (per-slice
    /// demand not yet admitted) fits.
    pub fn shortfall(&self, pending: &[u32]) -> u32 {
        let over: u32 = pending
            .iter()
            .enumerate()
            .map(|(s, &d)| d.saturating_sub(self.reserved_free(s)))
            .sum();
        match self.kind {
            SchemeKind::Nvs => over,
            SchemeKind::Prr { .. } => over.saturating_sub(self.shared_free()),
        }
    }

    /// Extra RBs needed so that per-slice demands `demands` all fit.
    pub fn deficit_for(&self, demands: &[u32]) -> u32 {
        match self.kind {
            SchemeKind::Nvs => demands
                .iter()
                .zip(&self.reserved)
                .map(|(&d, &b)| d.saturating_sub(b))
                .sum(),
            SchemeKind::Prr { .. } => {
                let overflow: u32 = demands
                    .iter()
                    .zip(&self.reserved)
                    .map(|(&d, &b)| d.saturating_sub(b))
                    .sum();
                overflow.saturating_sub(self.shared)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn admitted(d: Decision) -> Grant {
        match d {
            Decision::Admitted(g) => g,
            Decision::Rejected(r) => panic!("unexpected rejection {r:?}"),
        }
    }

    #[test]
    fn parse_schemes() {
        assert_eq!("nvs".parse::<SchemeKind>().unwrap(), SchemeKind::Nvs);
        assert_eq!(
            "prr:0.5".parse::<SchemeKind>().unwrap(),
            SchemeKind::Prr { shared_fraction: 0.5 }
        );
        assert_eq!(
            "prr:100%".parse::<SchemeKind>().unwrap(),
            SchemeKind::Prr { shared_fraction: 1.0 }
        );
        assert!("prr:1.5".parse::<SchemeKind>().is_err());
        assert!("wfq".parse::<SchemeKind>().is_err());
    }

    #[test]
    fn nvs_isolation() {
        let mut b = SliceBudget::new(&SliceScheme::nvs(2), 100);
        for _ in 0..50 {
            admitted(b.admit(0, 1).unwrap());
        }
        match b.admit(0, 1).unwrap() {
            Decision::Rejected(r) => {
                assert_eq!(r.cause, RejectCause::InsufficientSliceBudget);
                assert_eq!(r.deficit(), 1);
            }
            d => panic!("{d:?}"),
        }
        assert_eq!(b.free_for(1).unwrap(), 50);
    }

    #[test]
    fn prr_full_shared_first_come() {
        let mut b = SliceBudget::new(&SliceScheme::prr(1.0, 2), 100);
        for k in 0..100 {
            admitted(b.admit(k % 2, 1).unwrap());
        }
        assert!(matches!(b.admit(0, 1).unwrap(), Decision::Rejected(_)));
    }

    #[test]
    fn prr_half_reserved_then_shared() {
        let mut b = SliceBudget::new(&SliceScheme::prr(0.5, 2), 100);
        assert_eq!(b.reserved_budget(0), 25);
        assert_eq!(b.reserved_budget(1), 25);
        assert_eq!(b.shared_budget(), 50);
        // Step-through: interleave 60 slice-0 and 10 slice-1 single-RB users.
        let mut order = Vec::new();
        for k in 0..60 {
            order.push(0);
            if k % 6 == 0 {
                order.push(1);
            }
        }
        let mut granted = [0u32; 2];
        for s in order {
            if let Decision::Admitted(g) = b.admit(s, 1).unwrap() {
                granted[s] += g.total();
            }
        }
        assert_eq!(granted, [60, 10]);
        assert_eq!(b.slice_usage(0), 25);
        assert_eq!(b.shared_usage(), 35);
        assert_eq!(b.slice_usage(1), 10);
    }

    #[test]
    fn prr_reserved_survives_shared_exhaustion() {
        let mut b = SliceBudget::new(&SliceScheme::prr(0.5, 2), 100);
        while let Decision::Admitted(_) = b.admit(0, 1).unwrap() {}
        // slice 0 took its 25 reserved plus the whole shared pool.
        for _ in 0..25 {
            admitted(b.admit(1, 1).unwrap());
        }
    }

    #[test]
    fn exceeding_total_budget() {
        let mut b = SliceBudget::new(&SliceScheme::prr(1.0, 2), 10);
        match b.admit(0, 11).unwrap() {
            Decision::Rejected(r) => assert_eq!(r.cause, RejectCause::ExceedsTotalBudget),
            d => panic!("{d:?}"),
        }
    }

    #[test]
    fn unknown_slice() {
        let mut b = SliceBudget::new(&SliceScheme::nvs(2), 10);
        assert!(matches!(b.admit(2, 1), Err(Error::UnknownSlice { .. })));
    }

    #[test]
    fn lending_respects_reservations() {
        let mut b = SliceBudget::new(&SliceScheme::prr(0.5, 2), 10);
        assert_eq!(b.lendable(), 5);
        for _ in 0..5 {
            assert_eq!(b.take_for_lending(), Some(Pool::Shared));
        }
        assert_eq!(b.take_for_lending(), None);
        assert_eq!(b.capacity(), 5);

        let mut n = SliceBudget::new(&SliceScheme::nvs(2), 10);
        admitted(n.admit(0, 4).unwrap());
        assert_eq!(n.lendable(), 6);
        assert_eq!(n.take_for_lending(), Some(Pool::Slice(1)));
    }

    #[test]
    fn deficits() {
        let n = SliceBudget::new(&SliceScheme::nvs(2), 10);
        assert_eq!(n.deficit_for(&[7, 2]), 2);
        let p = SliceBudget::new(&SliceScheme::prr(0.5, 2), 10);
        // reserved 3/2 (largest remainder of 5), shared 5
        assert_eq!(p.deficit_for(&[9, 2]), 1);
        assert_eq!(p.deficit_for(&[4, 4]), 0);
    }
}
