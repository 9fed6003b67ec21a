//! Deployment generation: one macro eNB at the origin, a cluster of small
//! cells inside its coverage, and users dropped per traffic layer.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{rng_for, SimRng, Stream};

/// Index of a base station within a deployment. `0` is always the macro eNB.
pub type BsId = usize;

pub const MACRO_ID: BsId = 0;

/// Maximum redraws for a single small-cell position before giving up.
pub const MAX_PLACEMENT_ATTEMPTS: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const ORIGIN: Point = Point { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    /// Uniform point in the disc of `radius` around `self`.
    pub fn sample_in_disc<R: Rng + ?Sized>(&self, radius: f64, rng: &mut R) -> Point {
        let r = radius * rng.gen::<f64>().sqrt();
        let theta = std::f64::consts::TAU * rng.gen::<f64>();
        Point::new(self.x + r * theta.cos(), self.y + r * theta.sin())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Tier {
    Macro,
    Small,
}

/// How small-cell-tier users are spread over the cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum SmallCellDrop {
    /// Each user picks a cell uniformly, then a uniform point in its disc.
    #[default]
    PerCell,
    /// Uniform over the union of the cell discs (rejection sampling).
    Union,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub macro_isd_m: f64,
    pub sc_radius_m: f64,
    pub n_small_cells: usize,
    pub cluster_radius_m: f64,
    pub macro_tx_power_per_rb_dbm: f64,
    pub sc_tx_power_per_rb_dbm: f64,
    pub rb_count_per_tier: u32,
    pub user_count: usize,
    pub sc_tier_user_fraction: f64,
    pub per_user_demand_bps: f64,
    pub rng_seed: u64,
    pub sc_user_drop: SmallCellDrop,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            macro_isd_m: 500.0,
            sc_radius_m: 25.0,
            n_small_cells: 6,
            cluster_radius_m: 150.0,
            // 46 dBm and 17 dBm spread evenly over 100 RBs.
            macro_tx_power_per_rb_dbm: 26.0,
            sc_tx_power_per_rb_dbm: -3.0,
            rb_count_per_tier: 100,
            user_count: 0,
            sc_tier_user_fraction: 2.0 / 3.0,
            per_user_demand_bps: 300_000.0,
            rng_seed: 1,
            sc_user_drop: SmallCellDrop::PerCell,
        }
    }
}

impl ScenarioConfig {
    pub fn macro_radius_m(&self) -> f64 {
        self.macro_isd_m / 2.0
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_small_cells == 0 {
            return Err(Error::config("n_small_cells", "must be at least 1"));
        }
        for (name, v) in [
            ("macro_isd_m", self.macro_isd_m),
            ("sc_radius_m", self.sc_radius_m),
            ("cluster_radius_m", self.cluster_radius_m),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::config(name, format!("must be > 0, got {v}")));
            }
        }
        if !(0.0..=1.0).contains(&self.sc_tier_user_fraction) {
            return Err(Error::config(
                "sc_tier_user_fraction",
                format!("must lie in [0, 1], got {}", self.sc_tier_user_fraction),
            ));
        }
        if !(self.per_user_demand_bps.is_finite() && self.per_user_demand_bps > 0.0) {
            return Err(Error::config("per_user_demand_bps", "must be > 0"));
        }
        if (self.rb_count_per_tier as usize) < self.n_small_cells {
            return Err(Error::config(
                "rb_count_per_tier",
                "must give every small cell at least one RB",
            ));
        }
        if self.cluster_radius_m + self.sc_radius_m > self.macro_radius_m() {
            return Err(Error::config(
                "cluster_radius_m",
                format!(
                    "cluster ({} m) plus cell radius ({} m) does not fit in macro coverage ({} m)",
                    self.cluster_radius_m,
                    self.sc_radius_m,
                    self.macro_radius_m()
                ),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BaseStation {
    pub id: BsId,
    pub tier: Tier,
    pub position: Point,
    pub tx_power_per_rb_dbm: f64,
    pub coverage_radius_m: f64,
    /// First RB id of this station's initial block within its tier band.
    pub first_rb: u32,
    pub initial_rb_count: u32,
}

impl BaseStation {
    pub fn is_small(&self) -> bool {
        self.tier == Tier::Small
    }
}

/// Whether two small cells' coverage discs overlap (strict inequality on
/// the center distance).
///
/// Only defined for small cells; passing the macro eNB is a contract
/// violation.
pub fn overlaps(a: &BaseStation, b: &BaseStation) -> bool {
    debug_assert!(
        a.is_small() && b.is_small(),
        "overlap relation is defined on small cells only"
    );
    a.id != b.id && a.position.distance(&b.position) < a.coverage_radius_m + b.coverage_radius_m
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserEquipment {
    pub id: usize,
    pub position: Point,
    /// Traffic layer the user was dropped in (0 = macro layer).
    pub home_layer: BsId,
    pub demand_bps: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Deployment {
    pub config: ScenarioConfig,
    pub base_stations: Vec<BaseStation>,
    pub users: Vec<UserEquipment>,
    /// Users per layer, indexed by BS id.
    pub layer_counts: Vec<usize>,
    pub cluster_center: Point,
}

impl Deployment {
    pub fn n_small_cells(&self) -> usize {
        self.base_stations.len() - 1
    }

    pub fn small_cells(&self) -> &[BaseStation] {
        &self.base_stations[1..]
    }

    /// Layer shares `a_i`; all zero when there are no users.
    pub fn layer_shares(&self) -> Vec<f64> {
        let total = self.users.len();
        if total == 0 {
            return vec![0.0; self.layer_counts.len()];
        }
        self.layer_counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    /// Pairwise overlap matrix over all BS ids; row/column 0 (macro) is false.
    pub fn overlap_matrix(&self) -> Vec<Vec<bool>> {
        let n = self.base_stations.len();
        let mut m = vec![vec![false; n]; n];
        for i in 1..n {
            for j in 1..n {
                m[i][j] = overlaps(&self.base_stations[i], &self.base_stations[j]);
            }
        }
        m
    }
}

/// Split `total` into `parts` integers proportional to `weights` using the
/// largest-remainder rule (ties go to the lower index).
pub fn largest_remainder(total: u64, weights: &[f64]) -> Vec<u64> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() {
        return Vec::new();
    }
    if sum <= 0.0 {
        let mut out = vec![0; weights.len()];
        out[0] = total;
        return out;
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut out: Vec<u64> = quotas.iter().map(|q| q.floor() as u64).collect();
    let assigned: u64 = out.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.partial_cmp(&ra).unwrap().then(a.cmp(&b))
    });
    for &i in order.iter().take((total - assigned) as usize) {
        out[i] += 1;
    }
    out
}

/// Place the eNB and the small-cell cluster.
pub fn generate_geometry(config: &ScenarioConfig, rng: &mut SimRng) -> Result<(Point, Vec<BaseStation>)> {
    config.validate()?;
    let macro_r = config.macro_radius_m();
    let center_r = macro_r - config.cluster_radius_m - config.sc_radius_m;
    let cluster_center = Point::ORIGIN.sample_in_disc(center_r.max(0.0), rng);

    let n = config.n_small_cells;
    let blocks = largest_remainder(config.rb_count_per_tier as u64, &vec![1.0; n]);

    let mut stations = Vec::with_capacity(n + 1);
    stations.push(BaseStation {
        id: MACRO_ID,
        tier: Tier::Macro,
        position: Point::ORIGIN,
        tx_power_per_rb_dbm: config.macro_tx_power_per_rb_dbm,
        coverage_radius_m: macro_r,
        first_rb: 0,
        initial_rb_count: config.rb_count_per_tier,
    });
    let mut first_rb = 0u32;
    for (k, &count) in blocks.iter().enumerate() {
        let mut attempts = 0;
        let position = loop {
            attempts += 1;
            let p = cluster_center.sample_in_disc(config.cluster_radius_m, rng);
            if p.distance(&Point::ORIGIN) + config.sc_radius_m <= macro_r {
                break p;
            }
            if attempts >= MAX_PLACEMENT_ATTEMPTS {
                return Err(Error::Placement {
                    constraint: format!("small cell {} disc must lie inside macro coverage", k + 1),
                    attempts,
                });
            }
        };
        stations.push(BaseStation {
            id: k + 1,
            tier: Tier::Small,
            position,
            tx_power_per_rb_dbm: config.sc_tx_power_per_rb_dbm,
            coverage_radius_m: config.sc_radius_m,
            first_rb,
            initial_rb_count: count as u32,
        });
        first_rb += count as u32;
    }
    Ok((cluster_center, stations))
}

/// Drop users into the macro layer and the small-cell layers.
pub fn drop_users(
    config: &ScenarioConfig,
    stations: &[BaseStation],
    rng: &mut SimRng,
) -> Result<(Vec<UserEquipment>, Vec<usize>)> {
    let n_bs = stations.len();
    let split = largest_remainder(
        config.user_count as u64,
        &[1.0 - config.sc_tier_user_fraction, config.sc_tier_user_fraction],
    );
    let (n_macro, n_sc) = (split[0] as usize, split[1] as usize);
    let mut users = Vec::with_capacity(config.user_count);
    let mut counts = vec![0usize; n_bs];
    let macro_bs = &stations[MACRO_ID];
    let cells = &stations[1..];

    for _ in 0..n_sc {
        let (layer, position) = match config.sc_user_drop {
            SmallCellDrop::PerCell => {
                let k = rng.gen_range(0..cells.len());
                let c = &cells[k];
                (c.id, c.position.sample_in_disc(c.coverage_radius_m, rng))
            }
            SmallCellDrop::Union => sample_union(cells, rng)?,
        };
        counts[layer] += 1;
        users.push(UserEquipment {
            id: users.len(),
            position,
            home_layer: layer,
            demand_bps: config.per_user_demand_bps,
        });
    }
    for _ in 0..n_macro {
        counts[MACRO_ID] += 1;
        users.push(UserEquipment {
            id: users.len(),
            position: macro_bs.position.sample_in_disc(macro_bs.coverage_radius_m, rng),
            home_layer: MACRO_ID,
            demand_bps: config.per_user_demand_bps,
        });
    }
    Ok((users, counts))
}

fn sample_union(cells: &[BaseStation], rng: &mut SimRng) -> Result<(BsId, Point)> {
    // Draw a cell proportionally to area (all equal here), a point in it, and
    // accept with probability 1/(number of discs covering the point).
    for _ in 0..MAX_PLACEMENT_ATTEMPTS {
        let c = &cells[rng.gen_range(0..cells.len())];
        let p = c.position.sample_in_disc(c.coverage_radius_m, rng);
        let covering: Vec<&BaseStation> = cells
            .iter()
            .filter(|o| o.position.distance(&p) <= o.coverage_radius_m)
            .collect();
        if rng.gen::<f64>() * covering.len() as f64 <= 1.0 {
            let home = covering
                .iter()
                .min_by(|a, b| {
                    a.position
                        .distance(&p)
                        .partial_cmp(&b.position.distance(&p))
                        .unwrap()
                        .then(a.id.cmp(&b.id))
                })
                .map(|b| b.id)
                .unwrap_or(c.id);
            return Ok((home, p));
        }
    }
    Err(Error::Placement {
        constraint: "user drop over the union of small-cell discs".into(),
        attempts: MAX_PLACEMENT_ATTEMPTS,
    })
}

/// Generate a full deployment from `config.rng_seed`.
pub fn generate_deployment(config: &ScenarioConfig) -> Result<Deployment> {
    let mut geo = rng_for(config.rng_seed, Stream::Geometry, &[]);
    let mut usr = rng_for(config.rng_seed, Stream::Users, &[]);
    generate_deployment_with(config, &mut geo, &mut usr)
}

/// Generate a deployment with separate geometry and user streams.
pub fn generate_deployment_with(
    config: &ScenarioConfig,
    geometry_rng: &mut SimRng,
    user_rng: &mut SimRng,
) -> Result<Deployment> {
    let (cluster_center, base_stations) = generate_geometry(config, geometry_rng)?;
    let (users, layer_counts) = drop_users(config, &base_stations, user_rng)?;
    Ok(Deployment {
        config: config.clone(),
        base_stations,
        users,
        layer_counts,
        cluster_center,
    })
}
