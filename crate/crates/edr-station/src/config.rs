//! Scenario files: a flat `key = value` format with `#` comments.
//!
//! Time-series paths are resolved relative to the config file. Prices
//! are quoted in $/MWh, as tariffs usually are, and converted to the
//! model's $/kWh at this boundary and nowhere else.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use edr_core::{
    price_per_kwh, BesSpec, ClockTime, DomainError, EdrSignal, LoadForecast, PriceSeries,
    Scenario, StationConfig, TimeGrid,
};
use thiserror::Error;

use crate::timeseries::{load_window_csv, render_series_csv, TimeseriesError};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `key = value`, found `{found}`")]
    Syntax {
        path: PathBuf,
        line: usize,
        found: String,
    },
    #[error("{path}:{line}: duplicate key `{key}`")]
    DuplicateKey {
        path: PathBuf,
        line: usize,
        key: String,
    },
    #[error("missing required key `{key}`")]
    MissingKey { key: &'static str },
    #[error("unknown key `{key}`")]
    UnknownKey { key: String },
    #[error("key `{key}`: `{value}` {detail}")]
    BadValue {
        key: String,
        value: String,
        detail: String,
    },
    #[error("key `{key}` conflicts with `{other}`; give exactly one")]
    ConflictingKeys { key: &'static str, other: &'static str },
    #[error(transparent)]
    Domain(#[from] DomainError),
    #[error(transparent)]
    Timeseries(#[from] TimeseriesError),
}

const KNOWN_KEYS: &[&str] = &[
    "time.step_min",
    "edr.notification",
    "edr.decision_window_h",
    "edr.event_start",
    "edr.event_end",
    "edr.incentive_price_mwh",
    "edr.incentive_csv",
    "edr.min_reduction_kw",
    "edr.min_reduction_csv",
    "forecast.csv",
    "price.csv",
    "bes.rated_capacity_kwh",
    "bes.max_discharge_kw",
    "bes.max_charge_kw",
    "bes.discharge_eff",
    "bes.charge_eff",
    "bes.soc_min",
    "bes.soc_max",
    "bes.initial_soc",
    "bes.terminal_soc_min",
    "station.ev_price_multiplier",
];

struct KeyValues {
    path: PathBuf,
    map: BTreeMap<String, String>,
}

impl KeyValues {
    fn parse(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut map = BTreeMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(ConfigError::Syntax {
                    path: path.to_path_buf(),
                    line,
                    found: content.to_string(),
                });
            };
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            if !KNOWN_KEYS.contains(&key.as_str()) {
                return Err(ConfigError::UnknownKey { key });
            }
            if map.insert(key.clone(), value).is_some() {
                return Err(ConfigError::DuplicateKey {
                    path: path.to_path_buf(),
                    line,
                    key,
                });
            }
        }
        Ok(KeyValues {
            path: path.to_path_buf(),
            map,
        })
    }

    fn get(&self, key: &'static str) -> Result<&str, ConfigError> {
        self.map
            .get(key)
            .map(String::as_str)
            .ok_or(ConfigError::MissingKey { key })
    }

    fn opt(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    fn f64(&self, key: &'static str) -> Result<f64, ConfigError> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| ConfigError::BadValue {
            key: key.to_string(),
            value: raw.to_string(),
            detail: "is not a number".to_string(),
        })
    }

    fn u32(&self, key: &'static str) -> Result<u32, ConfigError> {
        let raw = self.get(key)?;
        raw.parse().map_err(|_| ConfigError::BadValue {
            key: key.to_string(),
            value: raw.to_string(),
            detail: "is not a non-negative integer".to_string(),
        })
    }

    fn clock(&self, key: &'static str) -> Result<ClockTime, ConfigError> {
        let raw = self.get(key)?;
        raw.parse().map_err(|e| ConfigError::BadValue {
            key: key.to_string(),
            value: raw.to_string(),
            detail: format!("({e})"),
        })
    }

    fn resolve(&self, relative: &str) -> PathBuf {
        let p = Path::new(relative);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(p)
        }
    }
}

/// Read, resolve, and fully validate a scenario.
pub fn load_scenario(config_path: &Path) -> Result<Scenario, ConfigError> {
    let kv = KeyValues::parse(config_path)?;

    let step_min = kv.u32("time.step_min")?;
    let event_start = kv.clock("edr.event_start")?;
    let end_raw = kv.get("edr.event_end")?;
    // The end label is exclusive, so 24:00 is a valid close of day.
    let end_min = if end_raw.trim() == "24:00" {
        24 * 60
    } else {
        kv.clock("edr.event_end")?.minutes()
    };
    let start_min = event_start.minutes();
    if end_min <= start_min {
        return Err(ConfigError::BadValue {
            key: "edr.event_end".to_string(),
            value: end_raw.to_string(),
            detail: format!("must come after edr.event_start ({event_start})"),
        });
    }
    let grid = TimeGrid::new(event_start, end_min - start_min, step_min)?;

    let notification = kv.clock("edr.notification")?;
    let window_h = kv.f64("edr.decision_window_h")?;
    let window_min_f = window_h * 60.0;
    if !(window_min_f.is_finite() && window_min_f >= 0.0)
        || (window_min_f - window_min_f.round()).abs() > 1e-9
    {
        return Err(ConfigError::BadValue {
            key: "edr.decision_window_h".to_string(),
            value: kv.get("edr.decision_window_h")?.to_string(),
            detail: "must be a non-negative whole number of minutes".to_string(),
        });
    }
    let decision_window_min = window_min_f.round() as u32;

    let forecast_kw = load_window_csv(&kv.resolve(kv.get("forecast.csv")?), &grid)?;
    let price_mwh = load_window_csv(&kv.resolve(kv.get("price.csv")?), &grid)?;
    let price_kwh = convert_prices("price.csv", &price_mwh)?;

    let incentive_kwh = match (kv.opt("edr.incentive_price_mwh"), kv.opt("edr.incentive_csv")) {
        (Some(_), Some(_)) => {
            return Err(ConfigError::ConflictingKeys {
                key: "edr.incentive_price_mwh",
                other: "edr.incentive_csv",
            })
        }
        (Some(_), None) => {
            let per_mwh = kv.f64("edr.incentive_price_mwh")?;
            vec![map_price("edr.incentive_price_mwh", per_mwh)?; grid.steps()]
        }
        (None, Some(rel)) => {
            let per_mwh = load_window_csv(&kv.resolve(rel), &grid)?;
            convert_prices("edr.incentive_csv", &per_mwh)?
        }
        (None, None) => {
            return Err(ConfigError::MissingKey {
                key: "edr.incentive_price_mwh",
            })
        }
    };

    let min_reduction_kw = match (kv.opt("edr.min_reduction_kw"), kv.opt("edr.min_reduction_csv"))
    {
        (Some(_), Some(_)) => {
            return Err(ConfigError::ConflictingKeys {
                key: "edr.min_reduction_kw",
                other: "edr.min_reduction_csv",
            })
        }
        (Some(_), None) => vec![kv.f64("edr.min_reduction_kw")?; grid.steps()],
        (None, Some(rel)) => load_window_csv(&kv.resolve(rel), &grid)?,
        (None, None) => {
            return Err(ConfigError::MissingKey {
                key: "edr.min_reduction_kw",
            })
        }
    };

    let edr = EdrSignal::new(
        &grid,
        incentive_kwh,
        min_reduction_kw,
        notification,
        decision_window_min,
    )?;

    let mut bes = BesSpec::new(
        kv.f64("bes.rated_capacity_kwh")?,
        kv.f64("bes.max_discharge_kw")?,
        kv.f64("bes.max_charge_kw")?,
        kv.f64("bes.discharge_eff")?,
        kv.f64("bes.charge_eff")?,
        kv.f64("bes.soc_min")?,
        kv.f64("bes.soc_max")?,
        kv.f64("bes.initial_soc")?,
    )?;
    if kv.opt("bes.terminal_soc_min").is_some() {
        bes = bes.with_terminal_soc_min(kv.f64("bes.terminal_soc_min")?)?;
    }

    let station = StationConfig::new(kv.f64("station.ev_price_multiplier")?)?;

    Ok(Scenario::new(
        grid,
        PriceSeries::new(&grid, price_kwh)?,
        LoadForecast::new(&grid, forecast_kw)?,
        edr,
        bes,
        station,
    )?)
}

fn map_price(key: &str, per_mwh: f64) -> Result<f64, ConfigError> {
    price_per_kwh(per_mwh).map_err(|e| ConfigError::BadValue {
        key: key.to_string(),
        value: per_mwh.to_string(),
        detail: format!("({e})"),
    })
}

fn convert_prices(key: &str, per_mwh: &[f64]) -> Result<Vec<f64>, ConfigError> {
    per_mwh.iter().map(|&p| map_price(key, p)).collect()
}

/// Serialize a scenario into `dir` as `scenario.conf` plus its CSV
/// series; the written files load back to an identical scenario.
///
/// The incentive and minimum-reduction series collapse to inline
/// scalars when constant, matching hand-written configs.
pub fn save_scenario(scenario: &Scenario, dir: &Path) -> Result<PathBuf, std::io::Error> {
    use std::fmt::Write as _;

    fs::create_dir_all(dir)?;
    let grid = &scenario.grid;
    fs::write(
        dir.join("forecast.csv"),
        render_series_csv(grid, scenario.forecast.kw()),
    )?;
    let price_mwh: Vec<f64> = scenario.prices.per_kwh().iter().map(|p| p * 1000.0).collect();
    fs::write(dir.join("price.csv"), render_series_csv(grid, &price_mwh))?;

    let mut conf = String::new();
    let _ = writeln!(conf, "time.step_min = {}", grid.step_minutes());
    let _ = writeln!(conf, "edr.notification = {}", scenario.edr.notification());
    let _ = writeln!(
        conf,
        "edr.decision_window_h = {}",
        f64::from(scenario.edr.decision_window_min()) / 60.0
    );
    let _ = writeln!(conf, "edr.event_start = {}", grid.start());
    let end = grid.end_minutes();
    let _ = writeln!(conf, "edr.event_end = {:02}:{:02}", end / 60, end % 60);

    let incentive = scenario.edr.incentive_per_kwh();
    if incentive.iter().all(|v| v == &incentive[0]) {
        let _ = writeln!(conf, "edr.incentive_price_mwh = {}", incentive[0] * 1000.0);
    } else {
        let per_mwh: Vec<f64> = incentive.iter().map(|p| p * 1000.0).collect();
        fs::write(dir.join("incentive.csv"), render_series_csv(grid, &per_mwh))?;
        let _ = writeln!(conf, "edr.incentive_csv = incentive.csv");
    }
    let min_red = scenario.edr.min_reduction_kw();
    if min_red.iter().all(|v| v == &min_red[0]) {
        let _ = writeln!(conf, "edr.min_reduction_kw = {}", min_red[0]);
    } else {
        fs::write(
            dir.join("min_reduction.csv"),
            render_series_csv(grid, min_red),
        )?;
        let _ = writeln!(conf, "edr.min_reduction_csv = min_reduction.csv");
    }

    let _ = writeln!(conf, "forecast.csv = forecast.csv");
    let _ = writeln!(conf, "price.csv = price.csv");
    let bes = &scenario.bes;
    let _ = writeln!(conf, "bes.rated_capacity_kwh = {}", bes.rated_capacity_kwh);
    let _ = writeln!(conf, "bes.max_discharge_kw = {}", bes.max_discharge_kw);
    let _ = writeln!(conf, "bes.max_charge_kw = {}", bes.max_charge_kw);
    let _ = writeln!(conf, "bes.discharge_eff = {}", bes.discharge_eff);
    let _ = writeln!(conf, "bes.charge_eff = {}", bes.charge_eff);
    let _ = writeln!(conf, "bes.soc_min = {}", bes.soc_min);
    let _ = writeln!(conf, "bes.soc_max = {}", bes.soc_max);
    let _ = writeln!(conf, "bes.initial_soc = {}", bes.initial_soc);
    if let Some(t) = bes.terminal_soc_min {
        let _ = writeln!(conf, "bes.terminal_soc_min = {t}");
    }
    let _ = writeln!(
        conf,
        "station.ev_price_multiplier = {}",
        scenario.station.ev_price_multiplier
    );

    let conf_path = dir.join("scenario.conf");
    fs::write(&conf_path, conf)?;
    Ok(conf_path)
}
