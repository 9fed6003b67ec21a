//! Run configuration: one JSON document plus `key=value` overrides.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::analysis::mcs::McsOptions;
use crate::analysis::states::DEFAULT_STATE_CAP;
use crate::analysis::throughput::{OverlapModel, ShareRule};
use crate::error::{Error, Result};
use crate::radio::{ChannelModel, McsSpec, McsTable, RateView};
use crate::renev::RenevConfig;
use crate::scenario::ScenarioConfig;
use crate::slicing::{SchemeKind, SliceScheme};

/// How admissions and RENEV requests are sequenced inside one iteration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AdmissionMode {
    /// Every rejected small-cell admission triggers its own request.
    #[default]
    PerAdmission,
    /// All users arrive first; each overloaded small cell then issues one
    /// request for its whole deficit.
    PerEpoch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum KernelChoice {
    #[default]
    Uniform,
    Empirical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisOptions {
    pub mcs: McsOptions,
    /// Geometries (the first iterations' layouts) averaged by the closed form.
    pub geometries: usize,
    pub overlap_model: OverlapModel,
    pub share_rule: ShareRule,
    /// RBs per state level.
    pub bucket_rbs: u32,
    /// Levels are clamped to `[r_min, r_max]` (in buckets).
    pub r_min: i32,
    pub r_max: i32,
    /// Iterations sampled to estimate the initial state distribution.
    pub state_samples: usize,
    pub kernel: KernelChoice,
    pub state_cap: u64,
}

impl Default for AnalysisOptions {
    fn default() -> Self {
        AnalysisOptions {
            mcs: McsOptions {
                spatial_points: 64,
                ..McsOptions::default()
            },
            geometries: 64,
            overlap_model: OverlapModel::Geometric,
            share_rule: ShareRule::Weighted,
            bucket_rbs: 2,
            r_min: -12,
            r_max: 9,
            state_samples: 400,
            kernel: KernelChoice::Uniform,
            state_cap: DEFAULT_STATE_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub scenario: ScenarioConfig,
    pub channel: ChannelModel,
    pub mcs_table: Vec<McsSpec>,
    pub rate_view: RateView,
    pub scheme: SchemeKind,
    pub slice_count: usize,
    pub renev: bool,
    pub donor_floor: u32,
    pub mode: AdmissionMode,
    /// Offered loads in bit/s; users per point = load / demand.
    pub loads_bps: Vec<f64>,
    pub iterations: usize,
    pub seed: u64,
    /// Iterations per load point whose full X2 log is kept.
    pub message_log_iterations: usize,
    pub analysis: AnalysisOptions,
}

pub fn default_loads_bps() -> Vec<f64> {
    let mut v: Vec<f64> = (0..14).map(|k| (18 + 6 * k) as f64 * 1e6).collect();
    v.push(100e6);
    v
}

impl Default for Config {
    fn default() -> Self {
        Config {
            scenario: ScenarioConfig::default(),
            channel: ChannelModel::default(),
            mcs_table: McsTable::default_specs(),
            rate_view: RateView::Granular,
            scheme: SchemeKind::Prr { shared_fraction: 1.0 },
            slice_count: 2,
            renev: true,
            donor_floor: 0,
            mode: AdmissionMode::PerAdmission,
            loads_bps: default_loads_bps(),
            iterations: 1000,
            seed: 1,
            message_log_iterations: 3,
            analysis: AnalysisOptions::default(),
        }
    }
}

impl Config {
    pub fn from_json(text: &str) -> Result<Self> {
        let c: Config = serde_json::from_str(text)?;
        c.validate()?;
        Ok(c)
    }

    /// Read `path` (or start from defaults when `None`), apply overrides,
    /// then validate.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut value = match path {
            Some(p) => serde_json::from_str::<Value>(&std::fs::read_to_string(p)?)?,
            None => serde_json::to_value(Config::default())?,
        };
        // Parse once so schema errors in the file surface before overrides.
        let parsed: Config = serde_json::from_value(value.clone())?;
        if !overrides.is_empty() {
            let full = serde_json::to_value(&parsed)?;
            value = full;
            for (k, v) in overrides {
                apply_override(&mut value, k, v)?;
            }
        }
        let c: Config = serde_json::from_value(value)?;
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        self.channel.validate()?;
        self.mcs()?;
        self.slice_scheme().validate()?;
        if self.iterations == 0 {
            return Err(Error::config("iterations", "must be at least 1"));
        }
        if self.loads_bps.is_empty() {
            return Err(Error::config("loads_bps", "sweep is empty"));
        }
        if let Some(l) = self.loads_bps.iter().find(|l| !l.is_finite() || **l < 0.0) {
            return Err(Error::config("loads_bps", format!("invalid load {l}")));
        }
        if self.scenario.per_user_demand_bps <= 0.0 {
            return Err(Error::config("scenario.per_user_demand_bps", "must be positive"));
        }
        let a = &self.analysis;
        if a.bucket_rbs == 0 {
            return Err(Error::config("analysis.bucket_rbs", "must be at least 1"));
        }
        if a.r_min >= 0 || a.r_max <= 0 {
            return Err(Error::config("analysis.r_min/r_max", "need r_min < 0 < r_max"));
        }
        if a.mcs.spatial_points == 0 || a.geometries == 0 || a.state_samples == 0 {
            return Err(Error::config("analysis", "sample counts must be positive"));
        }
        Ok(())
    }

    pub fn mcs(&self) -> Result<McsTable> {
        McsTable::from_specs(&self.mcs_table)
    }

    pub fn slice_scheme(&self) -> SliceScheme {
        SliceScheme {
            kind: self.scheme,
            slice_count: self.slice_count,
        }
    }

    pub fn renev_config(&self) -> RenevConfig {
        RenevConfig {
            donor_floor: self.donor_floor,
        }
    }

    /// Users offered at `load_bps`.
    pub fn users_at(&self, load_bps: f64) -> usize {
        (load_bps / self.scenario.per_user_demand_bps).round() as usize
    }

    /// Scenario for one load point.
    pub fn scenario_at(&self, load_bps: f64) -> ScenarioConfig {
        ScenarioConfig {
            user_count: self.users_at(load_bps),
            ..self.scenario.clone()
        }
    }
}

/// Parse `key=value`.
pub fn parse_override(s: &str) -> Result<(String, String)> {
    let (k, v) = s
        .split_once('=')
        .ok_or_else(|| Error::config("--set", format!("`{s}` is not key=value")))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

/// Set a dotted `key` in `root`. The key must already exist; the value is
/// read as JSON when it parses, as a string otherwise.
pub fn apply_override(root: &mut Value, key: &str, raw: &str) -> Result<()> {
    let mut node = root;
    for part in key.split('.') {
        node = match node {
            Value::Object(m) => m.get_mut(part).ok_or_else(|| Error::UnknownOverride(key.to_string()))?,
            _ => return Err(Error::UnknownOverride(key.to_string())),
        };
    }
    *node = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(pairs: &[(&str, &str)]) -> Vec<(String, String)> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn defaults_round_trip() {
        let c = Config::default();
        c.validate().unwrap();
        let text = serde_json::to_string(&c).unwrap();
        assert_eq!(Config::from_json(&text).unwrap(), c);
        assert_eq!(c.loads_bps.len(), 15);
        assert_eq!(c.users_at(78e6), 260);
    }

    #[test]
    fn overrides_apply() {
        let c = Config::load(
            None,
            &ov(&[
                ("renev", "false"),
                ("iterations", "3"),
                ("scheme", "nvs"),
                ("scenario.n_small_cells", "10"),
                ("loads_bps", "[42e6]"),
            ]),
        )
        .unwrap();
        assert!(!c.renev);
        assert_eq!(c.iterations, 3);
        assert_eq!(c.scheme, SchemeKind::Nvs);
        assert_eq!(c.scenario.n_small_cells, 10);
        assert_eq!(c.loads_bps, vec![42e6]);
    }

    #[test]
    fn unknown_key_is_rejected() {
        match Config::load(None, &ov(&[("renevv", "true")])) {
            Err(Error::UnknownOverride(k)) => assert_eq!(k, "renevv"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            Config::load(None, &ov(&[("scenario.foo.bar", "1")])),
            Err(Error::UnknownOverride(_))
        ));
    }

    #[test]
    fn bad_values_fail_validation() {
        assert!(Config::load(None, &ov(&[("iterations", "0")])).is_err());
        assert!(Config::load(None, &ov(&[("scheme", "prr:1.5")])).is_err());
        assert!(Config::from_json(r#"{"bogus": 1}"#).is_err());
        let mut c = Config::default();
        c.mcs_table.swap(2, 3);
        assert!(matches!(c.validate(), Err(Error::McsTable(_))));
    }

    #[test]
    fn partial_file_takes_defaults() {
        let c = Config::from_json(r#"{"renev": false, "scheme": "prr:50%"}"#).unwrap();
        assert_eq!(c.scheme, SchemeKind::Prr { shared_fraction: 0.5 });
        assert_eq!(c.scenario, ScenarioConfig::default());
    }

    #[test]
    fn parse_override_splits_once() {
        assert_eq!(parse_override("a.b=x=y").unwrap(), ("a.b".into(), "x=y".into()));
        assert!(parse_override("novalue").is_err());
    }
}
