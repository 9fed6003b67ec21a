//! Closed-form evaluation of a whole configuration: per-BS inputs are
//! integrated over sampled cluster layouts, then fed to the throughput
//! bounds and the signaling chain.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::mcs::{mcs_probability, Region};
use crate::analysis::states::{
    signaling_expectations, EmpiricalKernel, Kernel, LevelRange, SignalingExpectations, SignalingInputs,
    StateDistribution,
};
use crate::analysis::throughput::{
    overlap_probability, throughput_with_renev, throughput_without_renev, ThroughputInputs, WithRenev, WithoutRenev,
};
use crate::config::{Config, KernelChoice};
use crate::error::Result;
use crate::montecarlo::sample_states;
use crate::rng::{rng_for, Stream};
use crate::scenario::{generate_geometry, MACRO_ID};

/// Load-independent inputs of one layout. Index 0 is the eNB.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GeometryStats {
    /// Expected fraction of all offered users served by each BS (outage
    /// excluded).
    pub attach: Vec<f64>,
    pub rate: Vec<f64>,
    pub enb_rate: Vec<f64>,
    pub rbs: Vec<f64>,
}

impl GeometryStats {
    pub fn inputs(&self, config: &Config, users: f64, p_o: f64, seed: u64) -> ThroughputInputs {
        ThroughputInputs {
            demand_bps: config.scenario.per_user_demand_bps,
            users: self.attach.iter().map(|a| a * users).collect(),
            rate: self.rate.clone(),
            enb_rate: self.enb_rate.clone(),
            rbs: self.rbs.clone(),
            overlap_probability: p_o,
            share: config.analysis.share_rule,
            seed,
        }
    }
}

/// Layout of iteration `iteration` (the simulator draws the same one).
pub fn geometry_stats(config: &Config, iteration: usize) -> Result<GeometryStats> {
    let table = config.mcs()?;
    let rates = table.rates(config.rate_view, config.scenario.per_user_demand_bps);
    let mut geo = rng_for(config.seed, Stream::Geometry, &[iteration as u64]);
    let (_, stations) = generate_geometry(&config.scenario, &mut geo)?;
    let n = stations.len();
    let f = config.scenario.sc_tier_user_fraction;
    let layer_share: Vec<f64> = (0..n)
        .map(|l| if l == MACRO_ID { 1.0 - f } else { f / (n - 1) as f64 })
        .collect();
    let regions: Vec<Region> = stations
        .iter()
        .map(|b| Region {
            center: b.position,
            radius_m: b.coverage_radius_m,
        })
        .collect();
    let opts = &config.analysis.mcs;

    let mut attach = vec![0.0; n];
    let mut rate_mass = vec![0.0; n];
    for (l, region) in regions.iter().enumerate() {
        for j in 0..n {
            let d = mcs_probability(region, stations[j].id, &stations, &config.channel, &table, opts);
            let w = layer_share[l] * d.server_probability * (1.0 - d.outage);
            attach[j] += w;
            rate_mass[j] += w * d.expected_rate(&rates);
        }
    }
    let rate = rate_mass
        .iter()
        .zip(&attach)
        .map(|(m, a)| if *a > 0.0 { m / a } else { 0.0 })
        .collect();
    let macro_only = &stations[..1];
    let enb_rate = regions
        .iter()
        .enumerate()
        .map(|(l, region)| {
            if l == MACRO_ID {
                return 0.0;
            }
            mcs_probability(region, MACRO_ID, macro_only, &config.channel, &table, opts).expected_rate(&rates)
        })
        .collect();
    Ok(GeometryStats {
        attach,
        rate,
        enb_rate,
        rbs: stations.iter().map(|b| b.initial_rb_count as f64).collect(),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[allow(non_snake_case)]
pub struct AnalysisPoint {
    pub load_bps: f64,
    pub users: usize,
    pub T_R: f64,
    pub T_NR: f64,
    pub T_R0: f64,
    pub T_R_sc: f64,
    pub T_NR00: f64,
    pub T_NR_sc: f64,
    pub T_NR_overflow: f64,
    /// Bounds of the first layout, kept for inspection.
    pub with_renev: WithRenev,
    pub without_renev: WithoutRenev,
    pub signaling: Option<SignalingExpectations>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisReport {
    pub overlap_probability: f64,
    pub geometries: usize,
    pub points: Vec<AnalysisPoint>,
}

impl AnalysisReport {
    pub fn point(&self, load_bps: f64) -> Option<&AnalysisPoint> {
        self.points.iter().find(|p| (p.load_bps - load_bps).abs() < 1.0)
    }
}

pub fn layout_overlap(config: &Config) -> f64 {
    let r = config.scenario.sc_radius_m;
    overlap_probability(config.analysis.overlap_model, r, r, config.scenario.cluster_radius_m)
}

pub fn all_geometry_stats(config: &Config) -> Result<Vec<GeometryStats>> {
    (0..config.analysis.geometries)
        .into_par_iter()
        .map(|g| geometry_stats(config, g))
        .collect()
}

/// Throughput bounds averaged over `stats` at one load.
pub fn throughput_point(config: &Config, stats: &[GeometryStats], load_bps: f64) -> AnalysisPoint {
    let users = config.users_at(load_bps);
    let p_o = layout_overlap(config);
    let mut acc = [0.0; 7];
    let mut first = None;
    for (g, s) in stats.iter().enumerate() {
        let inp = s.inputs(config, users as f64, p_o, config.seed.wrapping_add(g as u64));
        let r = throughput_with_renev(&inp);
        let nr = throughput_without_renev(&inp);
        let t_nr_sc: f64 = nr.T_NR_i.iter().sum();
        for (a, v) in acc
            .iter_mut()
            .zip([r.T_R, nr.T_NR, r.T_R0, r.T_Ri_sum, nr.T_NR00, t_nr_sc, nr.T_NR_SCs0])
        {
            *a += v;
        }
        if first.is_none() {
            first = Some((r, nr));
        }
    }
    let k = stats.len().max(1) as f64;
    let (with_renev, without_renev) = first.expect("at least one layout");
    AnalysisPoint {
        load_bps,
        users,
        T_R: acc[0] / k,
        T_NR: acc[1] / k,
        T_R0: acc[2] / k,
        T_R_sc: acc[3] / k,
        T_NR00: acc[4] / k,
        T_NR_sc: acc[5] / k,
        T_NR_overflow: acc[6] / k,
        with_renev,
        without_renev,
        signaling: None,
    }
}

/// Signaling expectations at load index `load_idx`, with the initial
/// state and eNB spare distributions estimated from sampled iterations.
pub fn signaling_point(
    config: &Config,
    load_idx: usize,
    kernel: Option<&EmpiricalKernel>,
) -> Result<SignalingExpectations> {
    let a = &config.analysis;
    let samples = sample_states(config, load_idx, a.state_samples)?;
    let pi = StateDistribution::from_samples(samples.iter().map(|(s, _)| s));
    let mut spare: BTreeMap<i32, f64> = BTreeMap::new();
    for (_, r0) in &samples {
        *spare.entry(*r0).or_default() += 1.0 / samples.len() as f64;
    }
    let inputs = SignalingInputs {
        pi,
        enb_spare: spare.into_iter().collect(),
        small_cells: config.scenario.n_small_cells,
        overlap_probability: layout_overlap(config),
        range: LevelRange::new(a.r_min, a.r_max),
        cap: a.state_cap,
    };
    let k = match (a.kernel, kernel) {
        (KernelChoice::Empirical, Some(k)) if !k.is_empty() => Kernel::Empirical(k),
        _ => Kernel::Uniform,
    };
    signaling_expectations(&inputs, k)
}

/// Full closed-form sweep. `kernels[i]` is used for load `i` when the
/// empirical kernel is selected.
pub fn analyze(config: &Config, signaling: bool, kernels: &[EmpiricalKernel]) -> Result<AnalysisReport> {
    config.validate()?;
    let stats = all_geometry_stats(config)?;
    let mut points = Vec::with_capacity(config.loads_bps.len());
    for (li, &load) in config.loads_bps.iter().enumerate() {
        let mut p = throughput_point(config, &stats, load);
        if signaling {
            p.signaling = Some(signaling_point(config, li, kernels.get(li))?);
        }
        points.push(p);
    }
    Ok(AnalysisReport {
        overlap_probability: layout_overlap(config),
        geometries: stats.len(),
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Config {
        let mut c = Config::default();
        c.analysis.mcs.spatial_points = 32;
        c.analysis.geometries = 2;
        c.analysis.state_samples = 40;
        c.loads_bps = vec![18e6, 78e6];
        c
    }

    #[test]
    fn attachment_shares_are_a_distribution() {
        let s = geometry_stats(&quick(), 0).unwrap();
        let total: f64 = s.attach.iter().sum();
        assert!(total > 0.9 && total <= 1.0 + 1e-9, "{total}");
        assert_eq!(s.rbs.iter().sum::<f64>(), 200.0);
        for (a, r) in s.attach.iter().zip(&s.rate) {
            assert!(*a == 0.0 || *r > 0.0);
            assert!(*r <= 300e3 + 1e-6);
        }
    }

    #[test]
    fn sweep_is_bounded_and_ordered() {
        let c = quick();
        let rep = analyze(&c, true, &[]).unwrap();
        for p in &rep.points {
            assert!(p.T_R + 1e-6 >= p.T_NR);
            assert!(p.T_R <= p.load_bps + 1e-6);
            let s = p.signaling.as_ref().unwrap();
            assert!(s.E_I >= 0.0);
        }
        assert!(rep.points[1].T_R > rep.points[0].T_R);
    }
}
