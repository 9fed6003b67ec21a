//! Channel model, SNR, adaptive MCS selection and per-RB rates.
//!
//! SNR only: the two tiers use disjoint bands and small cells use disjoint
//! RB blocks, so inter-cell interference is not modeled.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::scenario::{BaseStation, Point, Tier};

/// Resource elements carried by one RB in one 1 ms subframe
/// (12 subcarriers x 14 OFDM symbols).
pub const RE_PER_RB_SUBFRAME: f64 = 168.0;
pub const SUBFRAME_S: f64 = 1e-3;

/// Distances below this are clamped before evaluating path loss.
pub const MIN_DISTANCE_M: f64 = 1.0;

/// Thermal noise over one 180 kHz RB plus a 9 dB noise figure.
pub fn default_noise_dbm_per_rb() -> f64 {
    -174.0 + 10.0 * 180e3f64.log10() + 9.0
}

/// Log-distance law `a + b log10(R[km])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossLaw {
    pub intercept_db: f64,
    pub slope_db: f64,
}

impl PathLossLaw {
    pub fn loss_db(&self, distance_m: f64) -> f64 {
        self.intercept_db + self.slope_db * (distance_m / 1000.0).log10()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ChannelModel {
    pub macro_path_loss: PathLossLaw,
    pub sc_path_loss: PathLossLaw,
    pub macro_shadow_sigma_db: f64,
    pub sc_shadow_sigma_db: f64,
    pub shadow_mean_db: f64,
    pub noise_dbm_per_rb: f64,
}

impl Default for ChannelModel {
    fn default() -> Self {
        ChannelModel {
            macro_path_loss: PathLossLaw {
                intercept_db: 140.7,
                slope_db: 36.7,
            },
            sc_path_loss: PathLossLaw {
                intercept_db: 128.1,
                slope_db: 37.6,
            },
            macro_shadow_sigma_db: 8.0,
            sc_shadow_sigma_db: 10.0,
            shadow_mean_db: 0.0,
            noise_dbm_per_rb: default_noise_dbm_per_rb(),
        }
    }
}

impl ChannelModel {
    pub fn validate(&self) -> Result<()> {
        for (name, s) in [
            ("macro_shadow_sigma_db", self.macro_shadow_sigma_db),
            ("sc_shadow_sigma_db", self.sc_shadow_sigma_db),
        ] {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::config(name, "must be finite and non-negative"));
            }
        }
        for (name, law) in [
            ("macro_path_loss", self.macro_path_loss),
            ("sc_path_loss", self.sc_path_loss),
        ] {
            if !(law.slope_db > 0.0) {
                return Err(Error::config(name, "slope must be positive"));
            }
        }
        Ok(())
    }

    pub fn law(&self, tier: Tier) -> &PathLossLaw {
        match tier {
            Tier::Macro => &self.macro_path_loss,
            Tier::Small => &self.sc_path_loss,
        }
    }

    pub fn shadow_sigma_db(&self, tier: Tier) -> f64 {
        match tier {
            Tier::Macro => self.macro_shadow_sigma_db,
            Tier::Small => self.sc_shadow_sigma_db,
        }
    }

    pub fn path_loss_db(&self, tier: Tier, distance_m: f64) -> f64 {
        let d = if distance_m < MIN_DISTANCE_M {
            log::debug!("distance {distance_m} m clamped to {MIN_DISTANCE_M} m");
            MIN_DISTANCE_M
        } else {
            distance_m
        };
        self.law(tier).loss_db(d)
    }

    /// Mean SNR (no shadowing) in dB at `position`.
    pub fn mean_snr_db(&self, bs: &BaseStation, position: &Point) -> f64 {
        bs.tx_power_per_rb_dbm - self.path_loss_db(bs.tier, bs.position.distance(position)) - self.noise_dbm_per_rb
    }

    /// SNR in dB for a given shadowing sample.
    pub fn compute_snr(&self, bs: &BaseStation, position: &Point, shadow_db: f64) -> f64 {
        self.mean_snr_db(bs, position) - shadow_db
    }
}

/// Code rate as an exact fraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CodeRate {
    pub num: u32,
    pub den: u32,
}

impl CodeRate {
    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }
}

impl fmt::Display for CodeRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for CodeRate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, d) = s
            .split_once('/')
            .ok_or_else(|| Error::McsTable(format!("code rate `{s}` is not `num/den`")))?;
        let num: u32 = n
            .trim()
            .parse()
            .map_err(|_| Error::McsTable(format!("bad code rate numerator in `{s}`")))?;
        let den: u32 = d
            .trim()
            .parse()
            .map_err(|_| Error::McsTable(format!("bad code rate denominator in `{s}`")))?;
        if num == 0 || den == 0 || num > den {
            return Err(Error::McsTable(format!("code rate `{s}` outside (0, 1]")));
        }
        Ok(CodeRate { num, den })
    }
}

impl Serialize for CodeRate {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for CodeRate {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One row of an MCS table as stored on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McsSpec {
    pub name: String,
    pub bits_per_symbol: u32,
    pub code_rate: CodeRate,
    pub snr_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsEntry {
    pub name: String,
    pub bits_per_symbol: u32,
    pub code_rate: CodeRate,
    pub snr_min_db: f64,
    /// Upper (exclusive) threshold; `+inf` for the top entry.
    pub snr_max_db: f64,
    pub rate_per_rb_bps: f64,
}

/// Ordered MCS table. Thresholds partition `[snr_min(0), +inf)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsTable {
    entries: Vec<McsEntry>,
}

impl McsTable {
    pub fn from_specs(specs: &[McsSpec]) -> Result<Self> {
        if specs.is_empty() {
            return Err(Error::McsTable("table is empty".into()));
        }
        let mut entries: Vec<McsEntry> = Vec::with_capacity(specs.len());
        for (k, s) in specs.iter().enumerate() {
            if ![2, 4, 6].contains(&s.bits_per_symbol) {
                return Err(Error::McsTable(format!(
                    "entry {k} ({}): bits_per_symbol must be 2, 4 or 6",
                    s.name
                )));
            }
            if !s.snr_min.is_finite() {
                return Err(Error::McsTable(format!("entry {k} ({}): snr_min not finite", s.name)));
            }
            let rate = s.bits_per_symbol as f64 * RE_PER_RB_SUBFRAME * s.code_rate.num as f64
                / s.code_rate.den as f64
                / SUBFRAME_S;
            if let Some(prev) = entries.last() {
                if s.snr_min <= prev.snr_min_db {
                    return Err(Error::McsTable(format!(
                        "entry {k} ({}): thresholds not strictly increasing ({} after {})",
                        s.name, s.snr_min, prev.snr_min_db
                    )));
                }
                if rate <= prev.rate_per_rb_bps {
                    return Err(Error::McsTable(format!(
                        "entry {k} ({}): rate not strictly increasing",
                        s.name
                    )));
                }
            }
            entries.push(McsEntry {
                name: s.name.clone(),
                bits_per_symbol: s.bits_per_symbol,
                code_rate: s.code_rate,
                snr_min_db: s.snr_min,
                snr_max_db: f64::INFINITY,
                rate_per_rb_bps: rate,
            });
        }
        for k in 0..entries.len() - 1 {
            entries[k].snr_max_db = entries[k + 1].snr_min_db;
        }
        Ok(McsTable { entries })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let specs: Vec<McsSpec> = serde_json::from_str(text)?;
        Self::from_specs(&specs)
    }

    pub fn specs(&self) -> Vec<McsSpec> {
        self.entries
            .iter()
            .map(|e| McsSpec {
                name: e.name.clone(),
                bits_per_symbol: e.bits_per_symbol,
                code_rate: e.code_rate,
                snr_min: e.snr_min_db,
            })
            .collect()
    }

    /// The 13 LTE-A downlink MCSs with thresholds spaced evenly between
    /// -6.7 dB (QPSK 1/8) and 17.5 dB (64QAM 4/5).
    pub fn default_specs() -> Vec<McsSpec> {
        let rows: [(&str, u32, u32, u32); 13] = [
            ("QPSK-1/8", 2, 1, 8),
            ("QPSK-1/5", 2, 1, 5),
            ("QPSK-1/4", 2, 1, 4),
            ("QPSK-1/3", 2, 1, 3),
            ("QPSK-1/2", 2, 1, 2),
            ("QPSK-2/3", 2, 2, 3),
            ("QPSK-3/4", 2, 3, 4),
            ("16QAM-1/2", 4, 1, 2),
            ("16QAM-2/3", 4, 2, 3),
            ("16QAM-3/4", 4, 3, 4),
            ("64QAM-2/3", 6, 2, 3),
            ("64QAM-3/4", 6, 3, 4),
            ("64QAM-4/5", 6, 4, 5),
        ];
        let (lo, hi) = (-6.7, 17.5);
        let step = (hi - lo) / (rows.len() - 1) as f64;
        rows.iter()
            .enumerate()
            .map(|(k, &(name, bits, num, den))| McsSpec {
                name: name.to_string(),
                bits_per_symbol: bits,
                code_rate: CodeRate { num, den },
                snr_min: if k == rows.len() - 1 { hi } else { lo + step * k as f64 },
            })
            .collect()
    }

    pub fn entries(&self) -> &[McsEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, k: usize) -> &McsEntry {
        &self.entries[k]
    }

    pub fn lowest_threshold_db(&self) -> f64 {
        self.entries[0].snr_min_db
    }

    /// Index of the entry whose `[snr_min, snr_max)` contains `snr_db`;
    /// `None` is outage.
    pub fn select(&self, snr_db: f64) -> Option<usize> {
        let above = self.entries.partition_point(|e| e.snr_min_db <= snr_db);
        above.checked_sub(1)
    }

    /// Per-RB rates used by the throughput model.
    pub fn rates(&self, view: RateView, demand_bps: f64) -> Vec<f64> {
        self.entries
            .iter()
            .map(|e| match view {
                RateView::Nominal => e.rate_per_rb_bps,
                RateView::Granular => match rb_demand(demand_bps, e) {
                    0 => e.rate_per_rb_bps,
                    n => demand_bps / n as f64,
                },
            })
            .collect()
    }
}

impl Default for McsTable {
    fn default() -> Self {
        McsTable::from_specs(&McsTable::default_specs()).expect("default table is valid")
    }
}

/// Which per-RB rate the closed-form throughput model uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum RateView {
    /// Raw MCS rate per RB.
    Nominal,
    /// Throughput one granted RB actually delivers when users are granted
    /// whole RBs: `d / ceil(d / R)`.
    #[default]
    Granular,
}

/// RBs needed to carry `demand_bps` at `entry`'s rate.
pub fn rb_demand(demand_bps: f64, entry: &McsEntry) -> u32 {
    if demand_bps <= 0.0 {
        return 0;
    }
    (demand_bps / entry.rate_per_rb_bps).ceil() as u32
}
