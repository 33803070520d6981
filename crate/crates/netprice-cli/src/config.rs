//! Run configuration: TOML with sections, addressed by flat dotted keys.
//!
//! Precedence, lowest first: built-in defaults, the `--config` file,
//! `--set key=value` overrides, then the dedicated `--seed` / `--out` flags.

use std::collections::BTreeSet;
use std::path::PathBuf;

use netprice::ensemble::EnsembleSpec;
use netprice::monetary::UpdateForm;
use netprice::netgen::NetworkParams;
use netprice::pipeline::{BaselineSpec, RunSpec, StartState};
use netprice::pricing::{HazardDriver, HazardSpec};
use netprice::stats::NumeraireRule;
use serde::{Deserialize, Serialize};
use toml::{Table, Value};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub network: NetworkParams,
    pub monetary: MonetaryConfig,
    pub hazard: HazardConfig,
    pub stats: StatsConfig,
    pub ensemble: EnsembleConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonetaryConfig {
    pub pi: f64,
    pub theta: f64,
    pub horizon: usize,
    pub form: UpdateForm,
    pub start: StartState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HazardConfig {
    /// Also run the sticky regime.
    pub enabled: bool,
    pub g_scale: f64,
    pub epsilon_cap: f64,
    pub c0: f64,
    pub c1: f64,
    pub kappa_f: f64,
    pub driver: HazardDriver,
    pub price_seed: u64,
    /// Reset probability for the Calvo baseline.
    pub calvo_eta: f64,
    pub menu_eta0: f64,
    pub menu_beta: f64,
    pub menu_kappa: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsConfig {
    pub zeta: f64,
    pub numeraire: NumeraireRule,
    pub window_start: usize,
    pub window_end: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub replications: usize,
    pub base_seed: u64,
    /// Horizons summarized in ensemble reports.
    pub horizons: Vec<usize>,
    /// Network sizes for the concentration experiment.
    pub sizes: Vec<usize>,
    /// Horizon at which concentration statistics are taken.
    pub concentration_horizon: usize,
    /// Bootstrap resamples for λ2 binning.
    pub resamples: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Any of "csv", "json".
    pub formats: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let h = HazardSpec::default();
        let base = BaselineSpec::default();
        RunConfig {
            network: NetworkParams::default(),
            monetary: MonetaryConfig {
                pi: 0.02,
                theta: 0.5,
                horizon: 60,
                form: UpdateForm::Propagated,
                start: StartState::Stationary,
            },
            hazard: HazardConfig {
                enabled: false,
                g_scale: h.g_scale,
                epsilon_cap: h.epsilon_cap,
                c0: h.c0,
                c1: h.c1,
                kappa_f: h.kappa_f,
                driver: h.driver,
                price_seed: 0,
                calvo_eta: base.calvo_eta,
                menu_eta0: base.menu.0,
                menu_beta: base.menu.1,
                menu_kappa: base.menu.2,
            },
            stats: StatsConfig { zeta: 0.25, numeraire: NumeraireRule::DegreeClass, window_start: 40, window_end: 60 },
            ensemble: EnsembleConfig {
                replications: 50,
                base_seed: 0,
                horizons: vec![1, 5, 10, 60],
                sizes: vec![500, 1000, 2000, 4000],
                concentration_horizon: 5,
                resamples: 2000,
            },
            output: OutputConfig { dir: PathBuf::from("out"), formats: vec!["csv".into(), "json".into()] },
        }
    }
}

/// Keys that may be absent from the serialized defaults.
const OPTIONAL_KEYS: &[&str] = &["network.tilt"];

fn flatten(prefix: &str, table: &Table, out: &mut Vec<(String, Value)>) {
    for (k, v) in table {
        let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(t) => flatten(&key, t, out),
            _ => out.push((key, v.clone())),
        }
    }
}

fn insert(table: &mut Table, key: &str, value: Value) {
    match key.split_once('.') {
        Some((head, rest)) => {
            let sub = table.entry(head).or_insert_with(|| Value::Table(Table::new()));
            if let Value::Table(t) = sub {
                insert(t, rest, value);
            }
        }
        None => {
            table.insert(key.to_string(), value);
        }
    }
}

/// Parses `value` as a TOML literal, falling back to a bare string.
pub fn parse_value(value: &str) -> Value {
    format!("v = {value}")
        .parse::<Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(value.to_string()))
}

impl RunConfig {
    fn known_keys() -> BTreeSet<String> {
        let mut flat = Vec::new();
        flatten("", &Table::try_from(RunConfig::default()).expect("defaults serialize"), &mut flat);
        flat.into_iter().map(|(k, _)| k).chain(OPTIONAL_KEYS.iter().map(|k| k.to_string())).collect()
    }

    /// Applies dotted-key overrides on top of `self`. Errors name the key.
    pub fn with_overrides(&self, overrides: &[(String, Value)]) -> Result<RunConfig, String> {
        let known = Self::known_keys();
        let mut table = Table::try_from(self).map_err(|e| e.to_string())?;
        for (k, v) in overrides {
            if !known.contains(k) {
                return Err(format!("unknown config key `{k}`"));
            }
            insert(&mut table, k, v.clone());
        }
        let cfg: RunConfig = table.try_into().map_err(|e: toml::de::Error| {
            let key = overrides.iter().map(|(k, _)| k.as_str()).find(|k| e.message().contains(k.rsplit('.').next().unwrap()));
            match key {
                Some(k) => format!("invalid value for `{k}`: {}", e.message()),
                None => format!("invalid config: {}", e.message()),
            }
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and applies it over the defaults.
    pub fn from_toml(text: &str) -> Result<RunConfig, String> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| format!("malformed config: {}", e.message()))?;
        let mut flat = Vec::new();
        flatten("", &table, &mut flat);
        RunConfig::default().with_overrides(&flat)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), String> {
        for f in &self.output.formats {
            if f != "csv" && f != "json" {
                return Err(format!("invalid value for `output.formats`: unknown format {f:?}"));
            }
        }
        if let Some(h) = self.ensemble.horizons.iter().find(|&&h| h < 1 || h > self.monetary.horizon) {
            return Err(format!(
                "invalid value for `ensemble.horizons`: {h} outside 1..=monetary.horizon ({})",
                self.monetary.horizon
            ));
        }
        if self.stats.window_start < 1
            || self.stats.window_start > self.stats.window_end
            || self.stats.window_end > self.monetary.horizon
        {
            return Err(format!(
                "invalid value for `stats.window_start`/`stats.window_end`: need 1 <= start <= end <= monetary.horizon ({})",
                self.monetary.horizon
            ));
        }
        Ok(())
    }

    pub fn hazard_spec(&self) -> HazardSpec {
        let h = &self.hazard;
        HazardSpec {
            g_scale: h.g_scale,
            epsilon_cap: h.epsilon_cap,
            c0: h.c0,
            c1: h.c1,
            kappa_f: h.kappa_f,
            driver: h.driver,
        }
    }

    pub fn run_spec(&self) -> RunSpec {
        RunSpec {
            network: self.network.clone(),
            pi: self.monetary.pi,
            theta: self.monetary.theta,
            horizon: self.monetary.horizon,
            zeta: self.stats.zeta,
            form: self.monetary.form,
            start: self.monetary.start,
            hazard: self.hazard.enabled.then(|| self.hazard_spec()),
            price_seed: self.hazard.price_seed,
            window: (self.stats.window_start, self.stats.window_end),
            numeraire: self.stats.numeraire,
        }
    }

    pub fn ensemble_spec(&self) -> EnsembleSpec {
        EnsembleSpec {
            replications: self.ensemble.replications,
            base_seed: self.ensemble.base_seed,
            run: self.run_spec(),
            horizons: self.ensemble.horizons.clone(),
        }
    }

    pub fn baselines(&self) -> BaselineSpec {
        BaselineSpec {
            calvo_eta: self.hazard.calvo_eta,
            menu: (self.hazard.menu_eta0, self.hazard.menu_beta, self.hazard.menu_kappa),
        }
    }

    pub fn csv(&self) -> bool {
        self.output.formats.iter().any(|f| f == "csv")
    }

    pub fn json(&self) -> bool {
        self.output.formats.iter().any(|f| f == "json")
    }
}
