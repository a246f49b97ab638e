// SPDX-License-Identifier: MIT OR Apache-2.0

//! Declarative experiment configuration.
//!
//! One TOML file drives every subcommand. Scalar fields may be overridden
//! from the command line via repeatable `--set section.key=value` flags
//! (values are parsed as TOML, so lists work too). The sweepable fields —
//! `model.hotspot_rate`, `prior.a`, `prior.decay`, `policy.kind` — accept
//! either a scalar or a list; `simulate` expands their Cartesian product
//! and tags each output row.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use ara_cusum::{AllocatorPolicy, ModelParams, PriorConfig, SimulationConfig};

use crate::error::{CliError, CliResult};

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

/// A scalar-or-list field.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Sweep<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> Sweep<T> {
    fn values(&self) -> Vec<T> {
        match self {
            Sweep::One(v) => vec![v.clone()],
            Sweep::Many(vs) => vs.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum RawChangeTime {
    Day(u64),
    Keyword(String),
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    model: Option<RawModel>,
    prior: Option<RawPrior>,
    policy: Option<RawPolicy>,
    run: Option<RawRun>,
    calibrate: Option<RawCalibrate>,
    simulate: Option<RawSimulate>,
    behavior: Option<RawBehavior>,
    replay: Option<RawReplay>,
    output: Option<RawOutput>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    regions: Option<usize>,
    in_control_rate: Option<f64>,
    out_of_control_rate: Option<f64>,
    hotspot_rate: Option<Sweep<f64>>,
    budget: Option<u32>,
    threshold: Option<f64>,
    hotspots: Option<Vec<usize>>,
    change_time: Option<RawChangeTime>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPrior {
    a: Option<Sweep<f64>>,
    b: Option<f64>,
    decay: Option<Sweep<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPolicy {
    kind: Option<Sweep<String>>,
    top_r: Option<u32>,
    batches: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    replications: Option<u32>,
    base_seed: Option<u64>,
    max_steps: Option<u64>,
    threads: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalibrate {
    target_arl0: Option<f64>,
    tolerance: Option<f64>,
    bracket: Option<[f64; 2]>,
    max_steps: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSimulate {
    auto_calibrate: Option<bool>,
    thresholds: Option<BTreeMap<String, f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBehavior {
    in_control_days: Option<u64>,
    out_of_control_days: Option<u64>,
    quantiles: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawReplay {
    data: Option<String>,
    mode: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<String>,
    formats: Option<Vec<String>>,
}

/// One point of the sweep grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Combo {
    pub policy: AllocatorPolicy,
    pub hotspot_rate: f64,
    pub prior_a: f64,
    pub decay: f64,
}

#[derive(Debug, Clone)]
pub struct Config {
    pub regions: usize,
    pub in_control_rate: f64,
    pub design_rate: f64,
    pub hotspot_rates: Vec<f64>,
    pub budget: u32,
    pub threshold: Option<f64>,
    /// 0-based internally (1-based in the file).
    pub hotspots: Vec<usize>,
    pub change_time: Option<u64>,

    pub prior_a_values: Vec<f64>,
    pub prior_b: Option<f64>,
    pub decays: Vec<f64>,

    pub policies: Vec<AllocatorPolicy>,

    pub replications: u32,
    pub base_seed: u64,
    pub max_steps: u64,
    pub threads: usize,

    pub target_arl0: f64,
    pub arl_tolerance: f64,
    pub bracket: (f64, f64),
    pub calibration_max_steps: u64,

    pub auto_calibrate: bool,
    pub policy_thresholds: BTreeMap<String, f64>,

    pub ic_days: u64,
    pub oc_days: u64,
    pub quantiles: Vec<f64>,

    pub replay_data: Option<PathBuf>,
    pub replay_deterministic: bool,

    pub output_dir: PathBuf,
    pub write_csv: bool,
    pub write_json: bool,
}

/// Parses the file, applies `--set` overrides, and validates every field.
pub fn load(path: &Path, overrides: &[String]) -> CliResult<Config> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| config_err(format!("cannot read {}: {e}", path.display())))?;
    let mut value: toml::Value = text
        .parse()
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    for spec in overrides {
        apply_override(&mut value, spec)?;
    }
    let raw: RawConfig = value
        .try_into()
        .map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    validate(raw)
}

/// Sets `section.key=value`; the value is parsed as TOML (falling back to a
/// bare string), so `--set prior.decay=0.6` and
/// `--set model.hotspot_rate=[0.025,0.05]` both work.
fn apply_override(root: &mut toml::Value, spec: &str) -> CliResult<()> {
    let (path, raw_value) = spec
        .split_once('=')
        .ok_or_else(|| config_err(format!("--set expects key=value, got `{spec}`")))?;
    let parsed: toml::Value = match format!("v = {raw_value}").parse::<toml::Table>() {
        Ok(mut t) => t.remove("v").expect("key v was just parsed"),
        Err(_) => toml::Value::String(raw_value.to_string()),
    };
    let keys: Vec<&str> = path.split('.').collect();
    if keys.iter().any(|k| k.is_empty()) {
        return Err(config_err(format!("--set path `{path}` has empty segments")));
    }
    let mut node = root;
    for key in &keys[..keys.len() - 1] {
        node = node
            .as_table_mut()
            .ok_or_else(|| config_err(format!("--set path `{path}` crosses a non-table value")))?
            .entry(*key)
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
    }
    node.as_table_mut()
        .ok_or_else(|| config_err(format!("--set path `{path}` crosses a non-table value")))?
        .insert(keys[keys.len() - 1].to_string(), parsed);
    Ok(())
}

fn require<T>(value: Option<T>, field: &str) -> CliResult<T> {
    value.ok_or_else(|| config_err(format!("{field} is required")))
}

fn validate(raw: RawConfig) -> CliResult<Config> {
    let model = raw.model.unwrap_or_default();
    let prior = raw.prior.unwrap_or_default();
    let policy = raw.policy.unwrap_or_default();
    let run = raw.run.unwrap_or_default();
    let cal = raw.calibrate.unwrap_or_default();
    let simulate = raw.simulate.unwrap_or_default();
    let behavior = raw.behavior.unwrap_or_default();
    let replay = raw.replay.unwrap_or_default();
    let output = raw.output.unwrap_or_default();

    let regions = require(model.regions, "model.regions")?;
    let in_control_rate = require(model.in_control_rate, "model.in_control_rate")?;
    let design_rate = require(model.out_of_control_rate, "model.out_of_control_rate")?;
    let budget = require(model.budget, "model.budget")?;

    // Domain checks ride on the library constructor.
    ModelParams::new(regions, in_control_rate, design_rate, budget)
        .map_err(|e| config_err(format!("model: {e}")))?;

    let hotspot_rates = model
        .hotspot_rate
        .map(|s| s.values())
        .unwrap_or_else(|| vec![design_rate]);
    if hotspot_rates.is_empty() {
        return Err(config_err("model.hotspot_rate list must not be empty"));
    }
    for &r in &hotspot_rates {
        if !(r.is_finite() && in_control_rate < r && r < 1.0) {
            return Err(config_err(format!(
                "model.hotspot_rate: {r} is not in (model.in_control_rate, 1)"
            )));
        }
    }

    if let Some(h) = model.threshold {
        if h.is_nan() {
            return Err(config_err("model.threshold must not be NaN"));
        }
    }

    let hotspots_1based = model.hotspots.unwrap_or_default();
    let mut hotspots = Vec::with_capacity(hotspots_1based.len());
    for &k in &hotspots_1based {
        if k == 0 || k > regions {
            return Err(config_err(format!(
                "model.hotspots: region {k} out of range 1..={regions} (indices are 1-based)"
            )));
        }
        hotspots.push(k - 1);
    }
    hotspots.sort_unstable();
    hotspots.dedup();

    // Default: the change activates right after the initialization day.
    let change_time = match model.change_time {
        None => Some(1),
        Some(RawChangeTime::Day(d)) => Some(d),
        Some(RawChangeTime::Keyword(ref s)) if s == "never" => None,
        Some(RawChangeTime::Keyword(s)) => {
            return Err(config_err(format!(
                "model.change_time must be a day number or \"never\", got `{s}`"
            )))
        }
    };

    let prior_a_values = require(prior.a, "prior.a")?.values();
    if prior_a_values.is_empty() {
        return Err(config_err("prior.a list must not be empty"));
    }
    let decays = require(prior.decay, "prior.decay")?.values();
    if decays.is_empty() {
        return Err(config_err("prior.decay list must not be empty"));
    }
    // Per-value domain checks (the b default needs a valid p).
    for &a in &prior_a_values {
        let b = prior.b.unwrap_or(a * (1.0 - in_control_rate) / in_control_rate);
        PriorConfig::new(a, b, decays[0]).map_err(|e| config_err(format!("prior: {e}")))?;
    }
    for &w in &decays {
        PriorConfig::new(prior_a_values[0], 1.0, w)
            .map_err(|e| config_err(format!("prior: {e}")))?;
    }

    let kinds = require(policy.kind, "policy.kind")?.values();
    if kinds.is_empty() {
        return Err(config_err("policy.kind list must not be empty"));
    }
    let mut policies = Vec::with_capacity(kinds.len());
    for kind in &kinds {
        policies.push(parse_policy(kind, &policy)?);
    }

    let replications = require(run.replications, "run.replications")?;
    if replications == 0 {
        return Err(config_err("run.replications must be at least 1"));
    }
    let base_seed = require(run.base_seed, "run.base_seed")?;

    let target_arl0 = cal.target_arl0.unwrap_or(200.0);
    if !(target_arl0.is_finite() && target_arl0 > 1.0) {
        return Err(config_err(format!(
            "calibrate.target_arl0 must exceed 1, got {target_arl0}"
        )));
    }
    let arl_tolerance = cal.tolerance.unwrap_or(10.0);
    if !(arl_tolerance.is_finite() && arl_tolerance > 0.0) {
        return Err(config_err(format!(
            "calibrate.tolerance must be positive, got {arl_tolerance}"
        )));
    }
    let [lo, hi] = cal.bracket.unwrap_or([0.0, 64.0]);
    if !(lo.is_finite() && hi.is_finite() && lo < hi) {
        return Err(config_err(format!(
            "calibrate.bracket must be [lo, hi] with lo < hi, got [{lo}, {hi}]"
        )));
    }
    let calibration_max_steps = cal
        .max_steps
        .unwrap_or((10.0 * target_arl0).ceil() as u64);
    if (calibration_max_steps as f64) < 10.0 * target_arl0 {
        return Err(config_err(format!(
            "calibrate.max_steps must be at least 10 * target_arl0 (= {})",
            (10.0 * target_arl0).ceil() as u64
        )));
    }
    let max_steps = run
        .max_steps
        .unwrap_or((20.0 * target_arl0).ceil() as u64);
    if max_steps == 0 {
        return Err(config_err("run.max_steps must be at least 1"));
    }

    let quantiles = behavior
        .quantiles
        .unwrap_or_else(|| vec![0.05, 0.25, 0.75, 0.95]);
    for &q in &quantiles {
        if !(q.is_finite() && (0.0..=1.0).contains(&q)) {
            return Err(config_err(format!(
                "behavior.quantiles entries must lie in [0, 1], got {q}"
            )));
        }
    }

    let replay_deterministic = match replay.mode.as_deref() {
        None | Some("sampled") => false,
        Some("deterministic") => true,
        Some(other) => {
            return Err(config_err(format!(
                "replay.mode must be \"sampled\" or \"deterministic\", got `{other}`"
            )))
        }
    };

    let formats = output
        .formats
        .unwrap_or_else(|| vec!["csv".into(), "json".into()]);
    let mut write_csv = false;
    let mut write_json = false;
    for f in &formats {
        match f.as_str() {
            "csv" => write_csv = true,
            "json" => write_json = true,
            other => {
                return Err(config_err(format!(
                    "output.formats entries must be \"csv\" or \"json\", got `{other}`"
                )))
            }
        }
    }
    if !(write_csv || write_json) {
        return Err(config_err("output.formats must not be empty"));
    }

    let mut policy_thresholds = BTreeMap::new();
    for (name, h) in simulate.thresholds.unwrap_or_default() {
        let canonical = parse_policy(&name, &policy)?.name().to_string();
        if h.is_nan() {
            return Err(config_err(format!(
                "simulate.thresholds.{name} must not be NaN"
            )));
        }
        policy_thresholds.insert(canonical, h);
    }

    Ok(Config {
        regions,
        in_control_rate,
        design_rate,
        hotspot_rates,
        budget,
        threshold: model.threshold,
        hotspots,
        change_time,
        prior_a_values,
        prior_b: prior.b,
        decays,
        policies,
        replications,
        base_seed,
        max_steps,
        threads: run.threads.unwrap_or(0),
        target_arl0,
        arl_tolerance,
        bracket: (lo, hi),
        calibration_max_steps,
        auto_calibrate: simulate.auto_calibrate.unwrap_or(false),
        policy_thresholds,
        ic_days: behavior.in_control_days.unwrap_or(500),
        oc_days: behavior.out_of_control_days.unwrap_or(500),
        quantiles,
        replay_data: replay.data.map(PathBuf::from),
        replay_deterministic,
        output_dir: PathBuf::from(output.dir.unwrap_or_else(|| "out".into())),
        write_csv,
        write_json,
    })
}

fn parse_policy(kind: &str, params: &RawPolicy) -> CliResult<AllocatorPolicy> {
    match kind {
        "ara" | "proposed" => Ok(AllocatorPolicy::Ara),
        "even" => Ok(AllocatorPolicy::Even),
        "top_r" | "topr" => {
            let num_batches = params.batches.unwrap_or(20);
            let top_r = params.top_r.unwrap_or(20);
            if num_batches == 0 {
                return Err(config_err("policy.batches must be at least 1"));
            }
            if top_r == 0 {
                return Err(config_err("policy.top_r must be at least 1"));
            }
            Ok(AllocatorPolicy::TopR { num_batches, top_r })
        }
        other => Err(config_err(format!(
            "policy.kind must be one of ara|even|top_r, got `{other}`"
        ))),
    }
}

impl Config {
    /// Cartesian product of the sweepable fields, in deterministic order
    /// (policy, then hotspot rate, then decay, then prior strength).
    pub fn combos(&self) -> Vec<Combo> {
        let mut out = Vec::new();
        for policy in &self.policies {
            for &hotspot_rate in &self.hotspot_rates {
                for &decay in &self.decays {
                    for &prior_a in &self.prior_a_values {
                        out.push(Combo {
                            policy: *policy,
                            hotspot_rate,
                            prior_a,
                            decay,
                        });
                    }
                }
            }
        }
        out
    }

    /// The single grid point, or an error naming the swept field.
    pub fn single_combo(&self, command: &str) -> CliResult<Combo> {
        for (len, field) in [
            (self.policies.len(), "policy.kind"),
            (self.hotspot_rates.len(), "model.hotspot_rate"),
            (self.decays.len(), "prior.decay"),
            (self.prior_a_values.len(), "prior.a"),
        ] {
            if len != 1 {
                return Err(config_err(format!(
                    "{command} needs scalar parameters but {field} is a sweep"
                )));
            }
        }
        Ok(self.combos().remove(0))
    }

    pub fn prior_for(&self, combo: &Combo) -> CliResult<PriorConfig> {
        let b = self
            .prior_b
            .unwrap_or(combo.prior_a * (1.0 - self.in_control_rate) / self.in_control_rate);
        PriorConfig::new(combo.prior_a, b, combo.decay)
            .map_err(|e| config_err(format!("prior: {e}")))
    }

    fn model_for(
        &self,
        combo: &Combo,
        threshold: Option<f64>,
        in_control: bool,
    ) -> CliResult<ModelParams> {
        let mut model = ModelParams::new(
            self.regions,
            self.in_control_rate,
            self.design_rate,
            self.budget,
        )
        .map_err(|e| config_err(format!("model: {e}")))?
        .with_hotspot_rate(combo.hotspot_rate)
        .map_err(|e| config_err(format!("model: {e}")))?
        .with_change_time(self.change_time);
        if !in_control {
            model = model
                .with_hotspots(self.hotspots.iter().copied())
                .map_err(|e| config_err(format!("model: {e}")))?;
        }
        if let Some(h) = threshold {
            model = model
                .with_threshold(h)
                .map_err(|e| config_err(format!("model: {e}")))?;
        }
        Ok(model)
    }

    /// Simulation config for a measurement run at the given threshold.
    pub fn sim_config(&self, combo: &Combo, threshold: f64) -> CliResult<SimulationConfig> {
        let cfg = SimulationConfig {
            model: self.model_for(combo, Some(threshold), false)?,
            policy: combo.policy,
            prior: self.prior_for(combo)?,
            replications: self.replications,
            base_seed: self.base_seed,
            max_steps: self.max_steps,
            target_arl0: self.target_arl0,
            arl_tolerance: self.arl_tolerance,
        };
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }

    /// Simulation config for an in-control calibration pass.
    pub fn calibration_config(&self, combo: &Combo) -> CliResult<SimulationConfig> {
        let cfg = SimulationConfig {
            model: self.model_for(combo, None, true)?,
            policy: combo.policy,
            prior: self.prior_for(combo)?,
            replications: self.replications,
            base_seed: self.base_seed,
            max_steps: self.calibration_max_steps,
            target_arl0: self.target_arl0,
            arl_tolerance: self.arl_tolerance,
        };
        cfg.validate().map_err(|e| config_err(e.to_string()))?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[model]
regions = 3
in_control_rate = 0.01
out_of_control_rate = 0.05
budget = 300

[prior]
a = 1.5
decay = 0.3

[policy]
kind = "ara"

[run]
replications = 10
base_seed = 7
"#;

    fn parse(text: &str, overrides: &[&str]) -> CliResult<Config> {
        let dir = std::env::temp_dir().join(format!("ara-cfg-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("cfg-{:p}.toml", text.as_ptr()));
        std::fs::write(&path, text).unwrap();
        let owned: Vec<String> = overrides.iter().map(|s| s.to_string()).collect();
        load(&path, &owned)
    }

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = parse(MINIMAL, &[]).unwrap();
        assert_eq!(cfg.regions, 3);
        assert_eq!(cfg.change_time, Some(1));
        assert_eq!(cfg.max_steps, 4000);
        assert_eq!(cfg.calibration_max_steps, 2000);
        assert!(cfg.write_csv && cfg.write_json);
        assert_eq!(cfg.combos().len(), 1);
        // default b keeps the prior mean at p
        let prior = cfg.prior_for(&cfg.combos()[0]).unwrap();
        assert!((prior.mean() - 0.01).abs() < 1e-12);
    }

    #[test]
    fn missing_policy_kind_is_named() {
        let text = MINIMAL.replace("kind = \"ara\"", "");
        let err = parse(&text, &[]).unwrap_err();
        assert!(err.to_string().contains("policy.kind"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn sweeps_expand_cartesian_product() {
        let cfg = parse(
            MINIMAL,
            &[
                "model.hotspot_rate=[0.025,0.05]",
                "policy.kind=[\"ara\",\"even\"]",
                "prior.decay=[0.1,0.3,0.6]",
            ],
        )
        .unwrap();
        assert_eq!(cfg.combos().len(), 2 * 2 * 3);
        assert!(cfg.single_combo("calibrate").is_err());
    }

    #[test]
    fn overrides_touch_nested_scalars() {
        let cfg = parse(MINIMAL, &["run.base_seed=99", "output.dir=\"elsewhere\""]).unwrap();
        assert_eq!(cfg.base_seed, 99);
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let err = parse(MINIMAL, &["model.rate_typo=0.5"]).unwrap_err();
        assert!(err.to_string().contains("rate_typo"), "{err}");
    }

    #[test]
    fn degenerate_target_is_rejected() {
        let err = parse(MINIMAL, &["calibrate.target_arl0=1"]).unwrap_err();
        assert!(err.to_string().contains("target_arl0"), "{err}");
    }

    #[test]
    fn hotspots_are_one_based() {
        let cfg = parse(MINIMAL, &["model.hotspots=[1,3]"]).unwrap();
        assert_eq!(cfg.hotspots, vec![0, 2]);
        let err = parse(MINIMAL, &["model.hotspots=[0]"]).unwrap_err();
        assert!(err.to_string().contains("1-based"), "{err}");
    }

    #[test]
    fn policy_aliases_resolve() {
        let cfg = parse(MINIMAL, &["policy.kind=\"proposed\""]).unwrap();
        assert_eq!(cfg.policies[0], AllocatorPolicy::Ara);
        let cfg = parse(MINIMAL, &["policy.kind=\"topr\""]).unwrap();
        assert!(matches!(cfg.policies[0], AllocatorPolicy::TopR { .. }));
    }

    #[test]
    fn change_time_never() {
        let cfg = parse(MINIMAL, &["model.change_time=\"never\""]).unwrap();
        assert_eq!(cfg.change_time, None);
    }
}
