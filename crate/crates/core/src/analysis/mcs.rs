//! MCS selection probabilities under log-normal shadowing.
//!
//! A user picks the BS with the best SNR. With `m_j` the mean SNR from BS j
//! and `S_j ~ N(0, s_j^2)` its shadowing, `SNR_j = m_j - S_j`. For a serving
//! BS `i` and MCS `k` with thresholds `[lo, hi)`:
//!
//! ```text
//! P(best = i, MCS = k) = int_{m_i - hi}^{m_i - lo} f_i(s) prod_{l != i} (1 - F_l(s + m_l - m_i)) ds
//! ```
//!
//! The `AsWritten` form instead treats each competitor separately and divides
//! by the product of the pairwise terms `F_i(s_i mu / (s_l sqrt 2))`. It is
//! kept for comparison only; it disagrees with sampling.

use std::f64::consts::{PI, SQRT_2};

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::radio::{ChannelModel, McsTable};
use crate::scenario::{BaseStation, Point};

/// Standard normal CDF.
pub(crate) fn phi(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

fn normal_pdf(x: f64, sigma: f64) -> f64 {
    (-0.5 * (x / sigma).powi(2)).exp() / (sigma * (2.0 * PI).sqrt())
}

fn normal_cdf(x: f64, sigma: f64) -> f64 {
    if sigma == 0.0 {
        if x >= 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        phi(x / sigma)
    }
}

/// Shadowing beyond this many sigmas is treated as impossible.
const TAIL_SIGMAS: f64 = 9.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DenominatorForm {
    Exact,
    AsWritten,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McsOptions {
    /// Low-discrepancy points per coverage disc.
    pub spatial_points: usize,
    pub tolerance: f64,
    pub form: DenominatorForm,
}

impl Default for McsOptions {
    fn default() -> Self {
        McsOptions {
            spatial_points: 1024,
            tolerance: 1e-6,
            form: DenominatorForm::Exact,
        }
    }
}

/// Mean SNR and shadowing spread of one BS seen from a fixed point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub mean_snr_db: f64,
    pub sigma_db: f64,
}

impl Link {
    pub fn new(channel: &ChannelModel, bs: &BaseStation, at: &Point) -> Self {
        Link {
            mean_snr_db: channel.mean_snr_db(bs, at),
            sigma_db: channel.shadow_sigma_db(bs.tier),
        }
    }
}

fn integrate(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    quadrature::double_exponential::integrate(f, a, b, tol).integral
}

/// Shadowing interval `(S0, S1]` of the serving BS that maps to MCS `k`.
fn shadow_interval(serving: &Link, table: &McsTable, k: usize) -> (f64, f64) {
    let e = &table.entries()[k];
    (serving.mean_snr_db - e.snr_max_db, serving.mean_snr_db - e.snr_min_db)
}

/// Split competitors into a cap on the serving shadow (deterministic ones)
/// and `(mu, sigma)` pairs for random ones. Competitors that can never win
/// are dropped; `None` when one of them always wins.
fn competitors(serving: &Link, others: &[Link]) -> Option<(f64, Vec<(f64, f64)>)> {
    let sigma = serving.sigma_db;
    let mut cap = f64::INFINITY;
    let mut random = Vec::with_capacity(others.len());
    for l in others {
        let mu = l.mean_snr_db - serving.mean_snr_db;
        let spread = (sigma * sigma + l.sigma_db * l.sigma_db).sqrt();
        if l.sigma_db == 0.0 {
            cap = cap.min(-mu);
        } else if mu > TAIL_SIGMAS * spread {
            return None;
        } else if mu > -TAIL_SIGMAS * spread {
            random.push((mu, l.sigma_db));
        }
    }
    Some((cap, random))
}

/// `P(best = serving, MCS = k)` for each k at one point. Competitors with
/// zero spread act as step functions; a serving link with zero spread has
/// no integral at all.
pub fn joint_masses(serving: &Link, others: &[Link], table: &McsTable, tol: f64) -> Vec<f64> {
    let k_count = table.len();
    let sigma = serving.sigma_db;
    if sigma == 0.0 {
        let mut out = vec![0.0; k_count];
        if let Some(k) = table.select(serving.mean_snr_db) {
            out[k] = others
                .iter()
                .map(|l| 1.0 - normal_cdf(l.mean_snr_db - serving.mean_snr_db, l.sigma_db))
                .product();
        }
        return out;
    }
    let Some((cap, random)) = competitors(serving, others) else {
        return vec![0.0; k_count];
    };
    let lo_tail = -TAIL_SIGMAS * sigma;
    let hi_tail = (TAIL_SIGMAS * sigma).min(cap);
    (0..k_count)
        .map(|k| {
            let (s0, s1) = shadow_interval(serving, table, k);
            let a = s0.max(lo_tail);
            let b = s1.min(hi_tail);
            if b <= a {
                return 0.0;
            }
            if random.is_empty() {
                return normal_cdf(b, sigma) - normal_cdf(a, sigma);
            }
            integrate(
                |s| {
                    let mut v = normal_pdf(s, sigma);
                    for &(mu, sl) in &random {
                        v *= 1.0 - phi((s + mu) / sl);
                    }
                    v
                },
                a,
                b,
                tol,
            )
            .max(0.0)
        })
        .collect()
}

/// The pairwise form: numerator per MCS and the common denominator.
pub fn as_written_terms(serving: &Link, others: &[Link], table: &McsTable, tol: f64) -> (Vec<f64>, f64) {
    let sigma = serving.sigma_db;
    let nums = (0..table.len())
        .map(|k| {
            let (s0, s1) = shadow_interval(serving, table, k);
            let band = normal_cdf(s1, sigma) - normal_cdf(s0, sigma);
            if others.is_empty() {
                return band;
            }
            others
                .iter()
                .map(|l| {
                    let mu = l.mean_snr_db - serving.mean_snr_db;
                    let a = s0.max(-TAIL_SIGMAS * sigma.max(1e-9));
                    let b = s1.min(TAIL_SIGMAS * sigma.max(1e-9));
                    let overlap = if sigma == 0.0 {
                        if s0 < 0.0 && 0.0 <= s1 {
                            normal_cdf(mu, l.sigma_db)
                        } else {
                            0.0
                        }
                    } else {
                        integrate(|s| normal_cdf(s + mu, l.sigma_db) * normal_pdf(s, sigma), a, b, tol)
                    };
                    (band - overlap).max(0.0)
                })
                .product()
        })
        .collect();
    let den = others
        .iter()
        .map(|l| {
            let mu = l.mean_snr_db - serving.mean_snr_db;
            if l.sigma_db == 0.0 {
                normal_cdf(mu, sigma)
            } else {
                normal_cdf(sigma * mu / (l.sigma_db * SQRT_2), sigma)
            }
        })
        .product();
    (nums, den)
}

/// Disc over which a traffic layer is spread.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region {
    pub center: Point,
    pub radius_m: f64,
}

fn radical_inverse(mut n: u64, base: u64) -> f64 {
    let mut inv = 1.0 / base as f64;
    let mut out = 0.0;
    while n > 0 {
        out += (n % base) as f64 * inv;
        n /= base;
        inv /= base as f64;
    }
    out
}

impl Region {
    /// Halton (2, 3) points mapped to the disc with equal-area radii.
    pub fn halton_points(&self, count: usize) -> Vec<Point> {
        (1..=count as u64)
            .map(|n| {
                let r = self.radius_m * radical_inverse(n, 2).sqrt();
                let t = 2.0 * PI * radical_inverse(n, 3);
                Point::new(self.center.x + r * t.cos(), self.center.y + r * t.sin())
            })
            .collect()
    }
}

/// MCS statistics of users spread over one region and served by one BS.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McsDistribution {
    pub server: usize,
    /// `P(MCS = k | served by server, not in outage)`.
    pub probs: Vec<f64>,
    /// Probability that `server` is the best BS (1 when unconditional).
    pub server_probability: f64,
    /// Share of the server's users whose SNR is below every threshold.
    pub outage: f64,
}

impl McsDistribution {
    pub fn expected_rate(&self, rates: &[f64]) -> f64 {
        self.probs.iter().zip(rates).map(|(p, r)| p * r).sum()
    }
}

fn normalise(masses: &[f64]) -> Vec<f64> {
    let total: f64 = masses.iter().sum();
    if total > 0.0 {
        masses.iter().map(|m| m / total).collect()
    } else {
        vec![0.0; masses.len()]
    }
}

/// MCS distribution of users uniform in `region` served by `stations[server]`,
/// conditioned on that BS being the best of `stations` (pass a single BS for
/// the unconditional distribution).
pub fn mcs_probability(
    region: &Region,
    server: usize,
    stations: &[BaseStation],
    channel: &ChannelModel,
    table: &McsTable,
    opts: &McsOptions,
) -> McsDistribution {
    let points = region.halton_points(opts.spatial_points.max(1));
    let k_count = table.len();
    let mut acc = vec![0.0; k_count];
    let mut best_mass = 0.0;
    let mut outage_mass = 0.0;
    let serving_idx = stations
        .iter()
        .position(|b| b.id == server)
        .expect("server must be among the stations");
    for p in &points {
        let serving = Link::new(channel, &stations[serving_idx], p);
        let others: Vec<Link> = stations
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != serving_idx)
            .map(|(_, b)| Link::new(channel, b, p))
            .collect();
        match opts.form {
            DenominatorForm::Exact => {
                let m = joint_masses(&serving, &others, table, opts.tolerance);
                let p_best = best_probability(&serving, &others, opts.tolerance);
                let served: f64 = m.iter().sum();
                for (a, v) in acc.iter_mut().zip(&m) {
                    *a += v;
                }
                best_mass += p_best;
                outage_mass += (p_best - served).max(0.0);
            }
            DenominatorForm::AsWritten => {
                let (nums, den) = as_written_terms(&serving, &others, table, opts.tolerance);
                if den > 0.0 {
                    for (a, v) in acc.iter_mut().zip(&nums) {
                        *a += v / den;
                    }
                }
                best_mass += den;
            }
        }
    }
    let n = points.len() as f64;
    McsDistribution {
        server,
        probs: normalise(&acc),
        server_probability: best_mass / n,
        outage: if best_mass > 0.0 { outage_mass / best_mass } else { 0.0 },
    }
}

/// `P(best = serving)` at one point, outage included.
pub fn best_probability(serving: &Link, others: &[Link], tol: f64) -> f64 {
    let sigma = serving.sigma_db;
    if others.is_empty() {
        return 1.0;
    }
    if sigma == 0.0 {
        return others
            .iter()
            .map(|l| 1.0 - normal_cdf(l.mean_snr_db - serving.mean_snr_db, l.sigma_db))
            .product();
    }
    let Some((cap, random)) = competitors(serving, others) else {
        return 0.0;
    };
    let a = -TAIL_SIGMAS * sigma;
    let b = (TAIL_SIGMAS * sigma).min(cap);
    if random.is_empty() {
        return normal_cdf(b, sigma) - normal_cdf(a, sigma);
    }
    integrate(
        |s| {
            let mut v = normal_pdf(s, sigma);
            for &(mu, sl) in &random {
                v *= 1.0 - phi((s + mu) / sl);
            }
            v
        },
        a,
        b,
        tol,
    )
}
