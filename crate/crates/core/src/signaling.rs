//! X2-AP message accounting for RENEV.
//!
//! Only the messages RENEV adds on top of ordinary attachment are modelled:
//! three per poll (status request, status response, load information) and two
//! per transfer (metasignalling request and acknowledge). Nothing is encoded.

use std::fmt;
use std::io::Write;

use serde::Serialize;

use crate::scenario::BsId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum X2MessageKind {
    ResourceStatusRequest,
    ResourceStatusResponse,
    LoadInformation,
    MetasignallingInformationRequest,
    MetasignallingInformationAcknowledge,
}

impl X2MessageKind {
    pub const ALL: [X2MessageKind; 5] = [
        X2MessageKind::ResourceStatusRequest,
        X2MessageKind::ResourceStatusResponse,
        X2MessageKind::LoadInformation,
        X2MessageKind::MetasignallingInformationRequest,
        X2MessageKind::MetasignallingInformationAcknowledge,
    ];

    fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            X2MessageKind::ResourceStatusRequest => "RESOURCE_STATUS_REQUEST",
            X2MessageKind::ResourceStatusResponse => "RESOURCE_STATUS_RESPONSE",
            X2MessageKind::LoadInformation => "LOAD_INFORMATION",
            X2MessageKind::MetasignallingInformationRequest => "METASIGNALLING_INFORMATION_REQUEST",
            X2MessageKind::MetasignallingInformationAcknowledge => "METASIGNALLING_INFORMATION_ACKNOWLEDGE",
        }
    }

    /// True for kinds sent by the BS looking for resources.
    pub fn from_requester(self) -> bool {
        matches!(
            self,
            X2MessageKind::ResourceStatusRequest | X2MessageKind::MetasignallingInformationRequest
        )
    }
}

impl fmt::Display for X2MessageKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Informational IEs. None of these influence the algorithm; they make the
/// trace readable.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Payload {
    StatusRequest { requested_rbs: u32 },
    StatusResponse { rb_usage_pct: f64, spare_rbs: u32 },
    LoadInformation { tx_power_per_rb_dbm: f64 },
    MetaRequest { requested_rbs: u32 },
    MetaAck { admitted_rbs: Vec<u32>, rejected_rbs: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct X2Message {
    pub seq: u64,
    pub kind: X2MessageKind,
    pub src: BsId,
    pub dst: BsId,
    pub payload: Payload,
}

/// Append-only log for one iteration with running counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MessageLog {
    messages: Vec<X2Message>,
    keep_messages: bool,
    per_kind: [u64; 5],
    sent: Vec<u64>,
    received: Vec<u64>,
    total: u64,
}

impl MessageLog {
    /// A log that keeps every message.
    pub fn new(bs_count: usize) -> Self {
        MessageLog {
            keep_messages: true,
            sent: vec![0; bs_count],
            received: vec![0; bs_count],
            ..Default::default()
        }
    }

    /// A log that only keeps counters; campaigns use this for untraced
    /// iterations.
    pub fn counting(bs_count: usize) -> Self {
        MessageLog {
            keep_messages: false,
            ..Self::new(bs_count)
        }
    }

    pub fn push(&mut self, kind: X2MessageKind, src: BsId, dst: BsId, payload: Payload) {
        let seq = self.total;
        self.total += 1;
        self.per_kind[kind.index()] += 1;
        self.sent[src] += 1;
        self.received[dst] += 1;
        if self.keep_messages {
            self.messages.push(X2Message {
                seq,
                kind,
                src,
                dst,
                payload,
            });
        }
    }

    pub fn messages(&self) -> &[X2Message] {
        &self.messages
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn count(&self, kind: X2MessageKind) -> u64 {
        self.per_kind[kind.index()]
    }

    /// Write `iteration,seq,kind,src,dst` rows (no header).
    pub fn write_csv_rows<W: Write>(&self, prefix: &str, w: &mut W) -> std::io::Result<()> {
        for m in &self.messages {
            writeln!(w, "{prefix}{},{},{},{}", m.seq, m.kind, m.src, m.dst)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MessageCounts {
    pub total: u64,
    pub per_kind: Vec<(X2MessageKind, u64)>,
    /// Messages sent plus received, per BS.
    pub per_bs: Vec<u64>,
    /// `total / N` with N the number of small cells.
    pub per_sc_average: f64,
}

pub fn count_messages(log: &MessageLog, small_cells: usize) -> MessageCounts {
    MessageCounts {
        total: log.total,
        per_kind: X2MessageKind::ALL.iter().map(|&k| (k, log.count(k))).collect(),
        per_bs: log.sent.iter().zip(&log.received).map(|(s, r)| s + r).collect(),
        per_sc_average: if small_cells == 0 {
            0.0
        } else {
            log.total as f64 / small_cells as f64
        },
    }
}

/// `I = 3(N-1) n_R + 3 n'_R + 2 n_s_total`.
pub fn message_formula(small_cells: usize, requests: u64, enb_polls: u64, successes: u64) -> u64 {
    3 * (small_cells as u64).saturating_sub(1) * requests + 3 * enb_polls + 2 * successes
}

/// Same formula over expectations.
pub fn expected_messages(small_cells: usize, e_requests: f64, e_enb_polls: f64, e_successes: f64) -> f64 {
    3.0 * (small_cells.saturating_sub(1)) as f64 * e_requests + 3.0 * e_enb_polls + 2.0 * e_successes
}

/// Check that every acknowledge answers an earlier request on the reversed
/// link and that requests come from the polling side. Returns the first
/// offending sequence number.
pub fn check_ordering(log: &MessageLog) -> Result<(), u64> {
    let mut open: Vec<(BsId, BsId)> = Vec::new();
    for m in &log.messages {
        match m.kind {
            X2MessageKind::MetasignallingInformationRequest => open.push((m.src, m.dst)),
            X2MessageKind::MetasignallingInformationAcknowledge => {
                match open.iter().rposition(|&(s, d)| s == m.dst && d == m.src) {
                    Some(i) => {
                        open.remove(i);
                    }
                    None => return Err(m.seq),
                }
            }
            _ => {}
        }
    }
    Ok(())
}
