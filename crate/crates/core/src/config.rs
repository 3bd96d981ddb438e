//! Scenario configuration: flat `key = value` text with dotted prefixes.
//!
//! ```text
//! # comment
//! duration_s = 86400
//! router = epsw
//! workload.interval_s = 100
//! ```
//!
//! Unknown keys and malformed values are errors naming the key.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use thiserror::Error;

use crate::mobility::{Area, MapGraph, MobilityModel, Range};
use crate::routing::RouterKind;
use crate::workload::Popularity;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("unknown config key {0:?}")]
    UnknownKey(String),
    #[error("{key}: {msg}")]
    Value { key: String, msg: String },
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

fn value_err(key: &str, msg: impl Into<String>) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MobilityKind {
    Spmb,
    Rwp,
    Stationary,
}

impl MobilityKind {
    pub fn name(self) -> &'static str {
        match self {
            MobilityKind::Spmb => "spmb",
            MobilityKind::Rwp => "rwp",
            MobilityKind::Stationary => "stationary",
        }
    }
}

/// Where the map for map-based movement comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum MapSource {
    /// The bundled 4.5 km grid.
    Builtin,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub duration_s: f64,
    pub tick_s: f64,
    pub seed: u64,
    pub requesters: usize,
    pub intermediates: usize,
    pub producers: usize,
    pub requesters_cidor: bool,
    pub intermediates_cidor: bool,
    pub producers_cidor: bool,
    pub buffer_mb: f64,
    pub opp_cache_mb: f64,
    pub ttl_s: f64,
    pub processed_capacity: usize,
    pub interest_bytes: u64,
    pub content_min_bytes: u64,
    pub content_max_bytes: u64,
    pub range_m: f64,
    pub rate_bps: f64,
    pub router: String,
    pub snw_copies: u32,
    pub epsw_copies: u32,
    pub mobility: MobilityKind,
    pub speed_min: f64,
    pub speed_max: f64,
    pub pause_min: f64,
    pub pause_max: f64,
    pub area_m: f64,
    pub map: MapSource,
    pub poi_prob: f64,
    pub home_prob: f64,
    pub catalog_size: usize,
    pub dist: String,
    pub zipf_s: f64,
    pub zipf_c: f64,
    pub renormalize: bool,
    pub range_max: u32,
    pub interval_s: f64,
    pub items_per_producer: usize,
    pub jitter_sd: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            duration_s: 86_400.0,
            tick_s: 1.0,
            seed: 1,
            requesters: 5,
            intermediates: 35,
            producers: 10,
            requesters_cidor: true,
            intermediates_cidor: true,
            producers_cidor: true,
            buffer_mb: 64.0,
            opp_cache_mb: 16.0,
            ttl_s: 500.0,
            processed_capacity: crate::node::DEFAULT_PROCESSED_CAPACITY,
            interest_bytes: crate::bundle::DEFAULT_INTEREST_SIZE,
            content_min_bytes: 500_000,
            content_max_bytes: 1_000_000,
            range_m: 100.0,
            rate_bps: 2_500_000.0,
            router: "epsw".into(),
            snw_copies: crate::routing::DEFAULT_COPIES,
            epsw_copies: crate::routing::DEFAULT_COPIES,
            mobility: MobilityKind::Spmb,
            speed_min: 0.5,
            speed_max: 1.5,
            pause_min: 0.0,
            pause_max: 120.0,
            area_m: 4500.0,
            map: MapSource::Builtin,
            poi_prob: 1.0,
            home_prob: 0.7,
            catalog_size: 100,
            dist: "zipf".into(),
            zipf_s: 1.0,
            zipf_c: 0.2,
            renormalize: true,
            range_max: 1000,
            interval_s: 100.0,
            items_per_producer: 100,
            jitter_sd: 0.1,
        }
    }
}

/// Every accepted key, in echo order.
pub const KEYS: &[&str] = &[
    "duration_s",
    "tick_s",
    "seed",
    "nodes.requesters",
    "nodes.intermediates",
    "workload.producers",
    "nodes.requesters.cidor",
    "nodes.intermediates.cidor",
    "nodes.producers.cidor",
    "buffer_mb",
    "opp_cache_mb",
    "ttl_s",
    "processed.capacity",
    "bundle.interest_bytes",
    "workload.content_min_bytes",
    "workload.content_max_bytes",
    "link.range_m",
    "link.rate_bps",
    "router",
    "snw.copies",
    "epsw.copies",
    "mobility",
    "mobility.speed_min",
    "mobility.speed_max",
    "mobility.pause_min",
    "mobility.pause_max",
    "mobility.area_m",
    "mobility.map",
    "mobility.poi_prob",
    "mobility.home_prob",
    "workload.catalog_size",
    "workload.dist",
    "workload.zipf_s",
    "workload.zipf_c",
    "workload.renormalize",
    "workload.range_max",
    "workload.interval_s",
    "workload.items_per_producer",
    "workload.jitter_sd",
];

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
    v.parse()
        .map_err(|_| value_err(key, format!("cannot parse {v:?}")))
}

fn parse_f64(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = parse_num(key, v)?;
    if !x.is_finite() {
        return Err(value_err(key, format!("{v:?} is not finite")));
    }
    Ok(x)
}

fn parse_bool(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "1" | "yes" | "on" => Ok(true),
        "false" | "0" | "no" | "off" => Ok(false),
        _ => Err(value_err(key, format!("expected true or false, got {v:?}"))),
    }
}

impl ScenarioConfig {
    /// Parses config text on top of the defaults. Relative map paths are
    /// resolved against `base_dir`.
    pub fn parse(text: &str, base_dir: Option<&Path>) -> Result<ScenarioConfig, ConfigError> {
        let mut cfg = ScenarioConfig::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(ConfigError::Syntax {
                    line: i + 1,
                    text: raw.to_string(),
                });
            };
            cfg.set(k.trim(), v.trim())?;
        }
        if let (MapSource::File(p), Some(base)) = (&cfg.map, base_dir) {
            if p.is_relative() {
                cfg.map = MapSource::File(base.join(p));
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<ScenarioConfig, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        ScenarioConfig::parse(&text, path.parent())
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), ConfigError> {
        match key {
            "duration_s" => self.duration_s = parse_f64(key, v)?,
            "tick_s" => self.tick_s = parse_f64(key, v)?,
            "seed" => self.seed = parse_num(key, v)?,
            "nodes.requesters" => self.requesters = parse_num(key, v)?,
            "nodes.intermediates" => self.intermediates = parse_num(key, v)?,
            "workload.producers" => self.producers = parse_num(key, v)?,
            "nodes.requesters.cidor" => self.requesters_cidor = parse_bool(key, v)?,
            "nodes.intermediates.cidor" => self.intermediates_cidor = parse_bool(key, v)?,
            "nodes.producers.cidor" => self.producers_cidor = parse_bool(key, v)?,
            "buffer_mb" => self.buffer_mb = parse_f64(key, v)?,
            "opp_cache_mb" => self.opp_cache_mb = parse_f64(key, v)?,
            "ttl_s" => self.ttl_s = parse_f64(key, v)?,
            "processed.capacity" => self.processed_capacity = parse_num(key, v)?,
            "bundle.interest_bytes" => self.interest_bytes = parse_num(key, v)?,
            "workload.content_min_bytes" => self.content_min_bytes = parse_num(key, v)?,
            "workload.content_max_bytes" => self.content_max_bytes = parse_num(key, v)?,
            "link.range_m" => self.range_m = parse_f64(key, v)?,
            "link.rate_bps" => self.rate_bps = parse_f64(key, v)?,
            "router" => {
                if RouterKind::parse(v, 1).is_none() {
                    return Err(value_err(
                        key,
                        format!("unknown router {v:?} (epidemic, snw, firstcontact, epsw)"),
                    ));
                }
                self.router = v.to_string();
            }
            "snw.copies" => self.snw_copies = parse_num(key, v)?,
            "epsw.copies" => self.epsw_copies = parse_num(key, v)?,
            "mobility" => {
                self.mobility = match v {
                    "spmb" => MobilityKind::Spmb,
                    "rwp" => MobilityKind::Rwp,
                    "stationary" => MobilityKind::Stationary,
                    _ => {
                        return Err(value_err(
                            key,
                            format!("unknown mobility {v:?} (spmb, rwp, stationary)"),
                        ))
                    }
                }
            }
            "mobility.speed_min" => self.speed_min = parse_f64(key, v)?,
            "mobility.speed_max" => self.speed_max = parse_f64(key, v)?,
            "mobility.pause_min" => self.pause_min = parse_f64(key, v)?,
            "mobility.pause_max" => self.pause_max = parse_f64(key, v)?,
            "mobility.area_m" => self.area_m = parse_f64(key, v)?,
            "mobility.map" => {
                self.map = match v {
                    "" => return Err(value_err(key, "empty path")),
                    "builtin" => MapSource::Builtin,
                    p => MapSource::File(PathBuf::from(p)),
                }
            }
            "mobility.poi_prob" => self.poi_prob = parse_f64(key, v)?,
            "mobility.home_prob" => self.home_prob = parse_f64(key, v)?,
            "workload.catalog_size" => self.catalog_size = parse_num(key, v)?,
            "workload.dist" => {
                if v != "zipf" && v != "uniform" {
                    return Err(value_err(
                        key,
                        format!("expected zipf or uniform, got {v:?}"),
                    ));
                }
                self.dist = v.to_string();
            }
            "workload.zipf_s" => self.zipf_s = parse_f64(key, v)?,
            "workload.zipf_c" => self.zipf_c = parse_f64(key, v)?,
            "workload.renormalize" => self.renormalize = parse_bool(key, v)?,
            "workload.range_max" => self.range_max = parse_num(key, v)?,
            "workload.interval_s" => self.interval_s = parse_f64(key, v)?,
            "workload.items_per_producer" => self.items_per_producer = parse_num(key, v)?,
            "workload.jitter_sd" => self.jitter_sd = parse_f64(key, v)?,
            _ => return Err(ConfigError::UnknownKey(key.to_string())),
        }
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let b = |x: bool| x.to_string();
        Some(match key {
            "duration_s" => self.duration_s.to_string(),
            "tick_s" => self.tick_s.to_string(),
            "seed" => self.seed.to_string(),
            "nodes.requesters" => self.requesters.to_string(),
            "nodes.intermediates" => self.intermediates.to_string(),
            "workload.producers" => self.producers.to_string(),
            "nodes.requesters.cidor" => b(self.requesters_cidor),
            "nodes.intermediates.cidor" => b(self.intermediates_cidor),
            "nodes.producers.cidor" => b(self.producers_cidor),
            "buffer_mb" => self.buffer_mb.to_string(),
            "opp_cache_mb" => self.opp_cache_mb.to_string(),
            "ttl_s" => self.ttl_s.to_string(),
            "processed.capacity" => self.processed_capacity.to_string(),
            "bundle.interest_bytes" => self.interest_bytes.to_string(),
            "workload.content_min_bytes" => self.content_min_bytes.to_string(),
            "workload.content_max_bytes" => self.content_max_bytes.to_string(),
            "link.range_m" => self.range_m.to_string(),
            "link.rate_bps" => self.rate_bps.to_string(),
            "router" => self.router.clone(),
            "snw.copies" => self.snw_copies.to_string(),
            "epsw.copies" => self.epsw_copies.to_string(),
            "mobility" => self.mobility.name().to_string(),
            "mobility.speed_min" => self.speed_min.to_string(),
            "mobility.speed_max" => self.speed_max.to_string(),
            "mobility.pause_min" => self.pause_min.to_string(),
            "mobility.pause_max" => self.pause_max.to_string(),
            "mobility.area_m" => self.area_m.to_string(),
            "mobility.map" => match &self.map {
                MapSource::Builtin => "builtin".to_string(),
                MapSource::File(p) => p.display().to_string(),
            },
            "mobility.poi_prob" => self.poi_prob.to_string(),
            "mobility.home_prob" => self.home_prob.to_string(),
            "workload.catalog_size" => self.catalog_size.to_string(),
            "workload.dist" => self.dist.clone(),
            "workload.zipf_s" => self.zipf_s.to_string(),
            "workload.zipf_c" => self.zipf_c.to_string(),
            "workload.renormalize" => b(self.renormalize),
            "workload.range_max" => self.range_max.to_string(),
            "workload.interval_s" => self.interval_s.to_string(),
            "workload.items_per_producer" => self.items_per_producer.to_string(),
            "workload.jitter_sd" => self.jitter_sd.to_string(),
            _ => return None,
        })
    }

    /// The full effective configuration, one `key = value` per line.
    pub fn echo(&self) -> String {
        let mut out = String::new();
        for k in KEYS {
            let _ = writeln!(out, "{k} = {}", self.get(k).expect("listed keys resolve"));
        }
        out
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = |key: &str, x: f64| {
            if x > 0.0 {
                Ok(())
            } else {
                Err(value_err(key, format!("must be positive, got {x}")))
            }
        };
        let non_negative = |key: &str, x: f64| {
            if x >= 0.0 {
                Ok(())
            } else {
                Err(value_err(key, format!("must not be negative, got {x}")))
            }
        };
        non_negative("duration_s", self.duration_s)?;
        positive("tick_s", self.tick_s)?;
        positive("buffer_mb", self.buffer_mb)?;
        non_negative("opp_cache_mb", self.opp_cache_mb)?;
        positive("ttl_s", self.ttl_s)?;
        positive("link.range_m", self.range_m)?;
        positive("link.rate_bps", self.rate_bps)?;
        positive("workload.interval_s", self.interval_s)?;
        non_negative("mobility.speed_min", self.speed_min)?;
        non_negative("mobility.pause_min", self.pause_min)?;
        non_negative("mobility.area_m", self.area_m)?;
        non_negative("workload.jitter_sd", self.jitter_sd)?;
        if self.speed_max < self.speed_min {
            return Err(value_err("mobility.speed_max", "below mobility.speed_min"));
        }
        if self.pause_max < self.pause_min {
            return Err(value_err("mobility.pause_max", "below mobility.pause_min"));
        }
        if !(0.0..=1.0).contains(&self.poi_prob) {
            return Err(value_err("mobility.poi_prob", "must be within [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.home_prob) {
            return Err(value_err("mobility.home_prob", "must be within [0, 1]"));
        }
        if self.interest_bytes == 0 {
            return Err(value_err("bundle.interest_bytes", "must be positive"));
        }
        if self.content_min_bytes == 0 || self.content_min_bytes > self.content_max_bytes {
            return Err(value_err(
                "workload.content_min_bytes",
                "must be positive and at most workload.content_max_bytes",
            ));
        }
        if self.catalog_size == 0 {
            return Err(value_err("workload.catalog_size", "must be at least 1"));
        }
        if self.catalog_size > self.range_max as usize {
            return Err(value_err(
                "workload.catalog_size",
                "exceeds workload.range_max",
            ));
        }
        if self.items_per_producer > self.catalog_size {
            return Err(value_err(
                "workload.items_per_producer",
                "exceeds workload.catalog_size",
            ));
        }
        if self.dist == "zipf" && self.zipf_c <= 0.0 {
            return Err(value_err("workload.zipf_c", "must be positive"));
        }
        if self.node_count() < 2 {
            return Err(value_err(
                "nodes.intermediates",
                "a scenario needs at least two nodes",
            ));
        }
        if self.requesters > 0 && self.intermediates + self.producers == 0 {
            return Err(value_err(
                "nodes.intermediates",
                "requesters need at least one non-requester node to address",
            ));
        }
        if let MapSource::File(p) = &self.map {
            if self.mobility == MobilityKind::Spmb && !p.is_file() {
                return Err(value_err(
                    "mobility.map",
                    format!("no such file {}", p.display()),
                ));
            }
        }
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.requesters + self.intermediates + self.producers
    }

    pub fn router_kind(&self) -> RouterKind {
        let copies = match self.router.as_str() {
            "epsw" => self.epsw_copies,
            _ => self.snw_copies,
        };
        RouterKind::parse(&self.router, copies).expect("validated on set")
    }

    pub fn popularity(&self) -> Popularity {
        match self.dist.as_str() {
            "uniform" => Popularity::Uniform,
            _ => Popularity::Zipf {
                s: self.zipf_s,
                c: self.zipf_c,
            },
        }
    }

    pub fn buffer_bytes(&self) -> u64 {
        (self.buffer_mb * 1e6).round() as u64
    }

    pub fn opp_cache_bytes(&self) -> u64 {
        (self.opp_cache_mb * 1e6).round() as u64
    }

    /// Builds the movement model, loading the map file if one is named.
    pub fn mobility_model(&self) -> Result<MobilityModel, ConfigError> {
        let speed = Range::new(self.speed_min, self.speed_max);
        let pause = Range::new(self.pause_min, self.pause_max);
        let area = Area {
            width: self.area_m,
            height: self.area_m,
        };
        Ok(match self.mobility {
            MobilityKind::Stationary => MobilityModel::Stationary { area },
            MobilityKind::Rwp => MobilityModel::RandomWaypoint { area, speed, pause },
            MobilityKind::Spmb => {
                let map = match &self.map {
                    MapSource::Builtin => MapGraph::default_grid(),
                    MapSource::File(p) => {
                        MapGraph::load(p).map_err(|e| value_err("mobility.map", e.to_string()))?
                    }
                };
                MobilityModel::ShortestPathMap {
                    map: Arc::new(map),
                    poi_prob: self.poi_prob,
                    home_prob: self.home_prob,
                    speed,
                    pause,
                }
            }
        })
    }
}
