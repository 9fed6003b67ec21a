//! Aggregate throughput bounds under PRR 100%, with and without RENEV.

use std::f64::consts::PI;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::rng::{rng_for, Stream};

/// How the pairwise overlap probability of two small cells is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OverlapModel {
    /// `((R_i + R_j) / R_c)^2`, ignoring the cluster edge.
    AreaRatio,
    /// Exact probability that two points uniform in the cluster disc are
    /// closer than `R_i + R_j`.
    Geometric,
}

pub fn overlap_probability_area(r_i: f64, r_j: f64, r_c: f64) -> f64 {
    ((r_i + r_j) / r_c).powi(2).min(1.0)
}

/// CDF of the distance between two independent uniform points in a disc of
/// radius `r_c`, evaluated at `d`.
pub fn overlap_probability_geometric(r_i: f64, r_j: f64, r_c: f64) -> f64 {
    let d = r_i + r_j;
    if d >= 2.0 * r_c {
        return 1.0;
    }
    let density = |r: f64| {
        let u = r / (2.0 * r_c);
        4.0 * r / (PI * r_c * r_c) * (u.acos() - u * (1.0 - u * u).sqrt())
    };
    quadrature::double_exponential::integrate(density, 0.0, d, 1e-12)
        .integral
        .clamp(0.0, 1.0)
}

pub fn overlap_probability(model: OverlapModel, r_i: f64, r_j: f64, r_c: f64) -> f64 {
    match model {
        OverlapModel::AreaRatio => overlap_probability_area(r_i, r_j, r_c),
        OverlapModel::Geometric => overlap_probability_geometric(r_i, r_j, r_c),
    }
}

fn binomial_pmf(n: usize, k: usize, p: f64) -> f64 {
    if k > n {
        return 0.0;
    }
    let ln_c = ln_choose(n, k);
    if p == 0.0 {
        return if k == 0 { 1.0 } else { 0.0 };
    }
    if p == 1.0 {
        return if k == n { 1.0 } else { 0.0 };
    }
    (ln_c + k as f64 * p.ln() + (n - k) as f64 * (1.0 - p).ln()).exp()
}

pub(crate) fn ln_choose(n: usize, k: usize) -> f64 {
    use statrs::function::factorial::ln_factorial;
    ln_factorial(n as u64) - ln_factorial(k as u64) - ln_factorial((n - k) as u64)
}

pub(crate) fn binomial(n: usize, k: usize, p: f64) -> f64 {
    binomial_pmf(n, k, p)
}

/// `E[RB_s / (n_i + 1)]` with `n_i ~ Bin(N - 1, P_o)`, closed form.
pub fn enb_share_equal(n: usize, p_o: f64, rb_s: f64) -> f64 {
    assert!(n >= 1);
    if p_o == 0.0 {
        return rb_s;
    }
    rb_s / (n as f64 * p_o) * -(n as f64 * (-p_o).ln_1p()).exp_m1()
}

/// Same expectation by direct summation over `n_i`.
pub fn enb_share_equal_direct(n: usize, p_o: f64, rb_s: f64) -> f64 {
    (0..n)
        .map(|k| rb_s / (k as f64 + 1.0) * binomial_pmf(n - 1, k, p_o))
        .sum()
}

/// Exact enumeration of overlap subsets up to this many small cells.
pub const SHARE_ENUMERATION_LIMIT: usize = 12;
pub const SHARE_SAMPLES: usize = 100_000;

fn share_fraction(a_i: f64, others: f64, members: usize) -> f64 {
    if a_i + others > 0.0 {
        a_i / (a_i + others)
    } else {
        1.0 / (members as f64 + 1.0)
    }
}

/// `E[RB_i^s]` for every small cell: each other cell overlaps `i`
/// independently with probability `p_o`, and the cells in an overlap set
/// split `RB_s` in proportion to their load `a`.
pub fn enb_share_weighted(p_o: f64, rb_s: f64, a: &[f64], seed: u64) -> Vec<f64> {
    let n = a.len();
    (0..n)
        .map(|i| {
            let others: Vec<f64> = (0..n).filter(|&k| k != i).map(|k| a[k]).collect();
            let m = others.len();
            let frac = if n <= SHARE_ENUMERATION_LIMIT {
                (0u32..1 << m)
                    .map(|mask| {
                        let size = mask.count_ones() as usize;
                        let load: f64 = (0..m).filter(|b| mask >> b & 1 == 1).map(|b| others[b]).sum();
                        let w = p_o.powi(size as i32) * (1.0 - p_o).powi((m - size) as i32);
                        w * share_fraction(a[i], load, size)
                    })
                    .sum::<f64>()
            } else {
                let mut rng = rng_for(seed, Stream::Oracle, &[n as u64, i as u64]);
                let mut acc = 0.0;
                for _ in 0..SHARE_SAMPLES {
                    let mut load = 0.0;
                    let mut size = 0;
                    for &o in &others {
                        if rng.gen::<f64>() < p_o {
                            load += o;
                            size += 1;
                        }
                    }
                    acc += share_fraction(a[i], load, size);
                }
                acc / SHARE_SAMPLES as f64
            };
            rb_s * frac
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ShareRule {
    Equal,
    Weighted,
}

/// Per-BS inputs; index 0 is the eNB.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThroughputInputs {
    pub demand_bps: f64,
    /// Expected users per BS coverage area, `X_i = a_i X`.
    pub users: Vec<f64>,
    /// `E[R_i]` per RB.
    pub rate: Vec<f64>,
    /// `E[R_i^0]`: eNB rate per RB for users of layer i. Entry 0 unused.
    pub enb_rate: Vec<f64>,
    pub rbs: Vec<f64>,
    pub overlap_probability: f64,
    pub share: ShareRule,
    pub seed: u64,
}

impl ThroughputInputs {
    fn sc_users(&self) -> f64 {
        self.users[1..].iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct WithRenev {
    pub T_R0: f64,
    pub T_Ri_sum: f64,
    pub T_R: f64,
    /// eNB RBs left after its own layer.
    pub RB_s: f64,
    pub RB_T: f64,
    pub E_R_TOT: f64,
    /// Users still unserved once the SC pool is used up.
    pub cal_E: f64,
    pub cal_E_i: Vec<f64>,
    pub E_RB_s_i: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct WithoutRenev {
    pub T_NR00: f64,
    pub T_NR_SCs0: f64,
    pub T_NR_i: Vec<f64>,
    pub T_NR: f64,
    pub E_X_ii: Vec<f64>,
    pub E_X_i0: Vec<f64>,
    /// Overflow-weighted `E[R_i^0]`.
    pub E_R_overflow: f64,
}

fn safe_div(a: f64, b: f64) -> f64 {
    if b > 0.0 {
        a / b
    } else {
        0.0
    }
}

pub fn throughput_with_renev(inp: &ThroughputInputs) -> WithRenev {
    let d = inp.demand_bps;
    let t_r0 = (inp.users[0] * d).min(inp.rate[0] * inp.rbs[0]);
    let rb_s = (inp.rbs[0] - safe_div(t_r0, inp.rate[0])).max(0.0);
    let sc_users = inp.sc_users();
    let rb_t: f64 = inp.rbs[1..].iter().sum();
    let e_r_tot = safe_div(
        inp.users[1..].iter().zip(&inp.rate[1..]).map(|(x, r)| x * r).sum(),
        sc_users,
    );
    let loads: Vec<f64> = inp.users[1..].iter().map(|x| safe_div(*x, sc_users)).collect();
    let shares = match inp.share {
        ShareRule::Equal => vec![enb_share_equal(loads.len().max(1), inp.overlap_probability, rb_s); loads.len()],
        ShareRule::Weighted => enb_share_weighted(inp.overlap_probability, rb_s, &loads, inp.seed),
    };
    let cal_e = (sc_users - rb_t * e_r_tot / d).max(0.0);
    let sc_capacity = rb_t * e_r_tot + shares.iter().zip(&inp.rate[1..]).map(|(s, r)| s * r).sum::<f64>();
    let t_sc = (sc_users * d).min(sc_capacity);
    WithRenev {
        T_R0: t_r0,
        T_Ri_sum: t_sc,
        T_R: t_r0 + t_sc,
        RB_s: rb_s,
        RB_T: rb_t,
        E_R_TOT: e_r_tot,
        cal_E: cal_e,
        cal_E_i: loads.iter().map(|a| a * cal_e).collect(),
        E_RB_s_i: shares,
    }
}

pub fn throughput_without_renev(inp: &ThroughputInputs) -> WithoutRenev {
    let d = inp.demand_bps;
    let n = inp.users.len();
    let e_x_ii: Vec<f64> = (1..n).map(|i| inp.users[i].min(inp.rbs[i] * inp.rate[i] / d)).collect();
    let e_x_i0: Vec<f64> = (1..n).map(|i| inp.users[i] - e_x_ii[i - 1]).collect();
    let t_nr_i: Vec<f64> = (1..n)
        .map(|i| (inp.users[i] * d).min(inp.rate[i] * inp.rbs[i]))
        .collect();
    let t_nr00 = (inp.users[0] * d).min(inp.rate[0] * inp.rbs[0]);
    let overflow: f64 = e_x_i0.iter().sum();
    let r_over = safe_div(
        e_x_i0.iter().zip(&inp.enb_rate[1..]).map(|(x, r)| x * r).sum(),
        overflow,
    );
    let leftover = (inp.rbs[0] - safe_div(t_nr00, inp.rate[0])).max(0.0);
    let t_sc0 = (overflow * d).min(r_over * leftover);
    WithoutRenev {
        T_NR00: t_nr00,
        T_NR_SCs0: t_sc0,
        T_NR: t_nr00 + t_sc0 + t_nr_i.iter().sum::<f64>(),
        T_NR_i: t_nr_i,
        E_X_ii: e_x_ii,
        E_X_i0: e_x_i0,
        E_R_overflow: r_over,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(x: f64) -> ThroughputInputs {
        let n = 6;
        let mut users = vec![x / 3.0];
        users.extend(std::iter::repeat(2.0 * x / 3.0 / n as f64).take(n));
        let mut rbs = vec![100.0];
        rbs.extend([17.0, 17.0, 17.0, 17.0, 16.0, 16.0]);
        ThroughputInputs {
            demand_bps: 300e3,
            users,
            rate: vec![290e3; n + 1],
            enb_rate: vec![280e3; n + 1],
            rbs,
            overlap_probability: 0.1,
            share: ShareRule::Weighted,
            seed: 1,
        }
    }

    #[test]
    fn area_ratio_example() {
        assert!((overlap_probability_area(25.0, 25.0, 100.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn geometric_overlap_is_a_cdf() {
        assert!((overlap_probability_geometric(100.0, 100.0, 100.0) - 1.0).abs() < 1e-12);
        let p = overlap_probability_geometric(25.0, 25.0, 150.0);
        // Edge effects pull it below the area ratio.
        assert!(p < overlap_probability_area(25.0, 25.0, 150.0));
        assert!((p - 0.0955).abs() < 0.002, "{p}");
        let q = overlap_probability_geometric(25.0, 25.0, 100.0);
        assert!((q - 0.197).abs() < 0.002, "{q}");
    }

    #[test]
    fn equal_share_closed_form() {
        for n in 1..=20 {
            for &p in &[0.0, 1e-6, 0.05, 0.25, 0.5, 0.9, 1.0] {
                let a = enb_share_equal(n, p, 37.0);
                let b = enb_share_equal_direct(n, p, 37.0);
                assert!((a - b).abs() <= 1e-9, "n={n} p={p}: {a} vs {b}");
            }
        }
        assert_eq!(enb_share_equal(6, 0.0, 10.0), 10.0);
        assert!((enb_share_equal(6, 1.0, 12.0) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn weighted_share_reduces_to_equal_share() {
        let a = vec![1.0 / 6.0; 6];
        let w = enb_share_weighted(0.2, 30.0, &a, 1);
        let e = enb_share_equal(6, 0.2, 30.0);
        for v in w {
            assert!((v - e).abs() < 1e-9);
        }
        let w = enb_share_weighted(1.0, 30.0, &[0.5, 0.25, 0.25], 1);
        assert!((w[0] - 15.0).abs() < 1e-12);
        assert!((w[1] - 7.5).abs() < 1e-12);
    }

    #[test]
    fn weighted_share_sampling_beyond_cutoff() {
        let a = vec![1.0; 14];
        let w = enb_share_weighted(0.3, 10.0, &a, 3);
        let e = enb_share_equal(14, 0.3, 10.0);
        assert!((w[0] - e).abs() < 0.05, "{} vs {e}", w[0]);
    }

    #[test]
    fn zero_load() {
        let r = throughput_with_renev(&inputs(0.0));
        assert_eq!(r.T_R, 0.0);
        let n = throughput_without_renev(&inputs(0.0));
        assert_eq!(n.T_NR, 0.0);
    }

    #[test]
    fn demand_limited_branch() {
        let mut inp = inputs(60.0);
        for r in inp.rbs.iter_mut().skip(1) {
            *r = 1e6;
        }
        let r = throughput_with_renev(&inp);
        assert!((r.T_Ri_sum - 40.0 * 300e3).abs() < 1e-6);
    }

    #[test]
    fn unloaded_cells_give_equal_bounds() {
        let inp = inputs(60.0);
        let r = throughput_with_renev(&inp);
        let n = throughput_without_renev(&inp);
        assert_eq!(n.T_NR_SCs0, 0.0);
        assert!((r.T_R - n.T_NR).abs() < 1e-6);
    }

    #[test]
    fn exhausted_enb_serves_no_overflow() {
        let mut inp = inputs(400.0);
        inp.users[0] = 1000.0;
        let n = throughput_without_renev(&inp);
        assert_eq!(n.T_NR_SCs0, 0.0);
    }

    #[test]
    fn dominance_and_caps_over_loads() {
        for x in (0..400).step_by(7) {
            let inp = inputs(x as f64);
            let r = throughput_with_renev(&inp);
            let n = throughput_without_renev(&inp);
            let offered = x as f64 * 300e3;
            assert!(r.T_R + 1e-6 >= n.T_NR, "x={x}");
            assert!(r.T_R <= offered + 1e-6 && n.T_NR <= offered + 1e-6);
        }
    }
}
