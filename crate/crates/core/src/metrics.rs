//! Per-run counters, the four headline metrics and multi-seed aggregation.

use std::collections::{BTreeMap, HashSet};
use std::io;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bundle::{BundleId, BundleKind, Seconds};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("no runs to aggregate")]
    NoRuns,
    #[error("runs differ in configuration: {0}")]
    MixedConfig(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Parameters identifying a run in CSV output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunEcho {
    pub seed: u64,
    pub router: String,
    pub dist: String,
    pub buffer_mb: f64,
    pub ttl_s: f64,
    pub producers: usize,
    pub items_per_producer: usize,
    /// Sweep point label, `-` outside sweeps.
    pub point: String,
}

impl RunEcho {
    fn same_config(&self, other: &RunEcho) -> bool {
        RunEcho {
            seed: other.seed,
            ..self.clone()
        } == *other
    }
}

/// Counters accumulated while a run executes.
#[derive(Debug, Clone, Default)]
pub struct MetricsSink {
    pub issued: u64,
    pub satisfied: u64,
    pub latencies: Vec<Seconds>,
    created: HashSet<BundleId>,
    delivered: HashSet<BundleId>,
    pub transmissions: u64,
    pub data_transmissions: u64,
    pub aborted: u64,
}

impl MetricsSink {
    pub fn issued(&mut self) {
        self.issued += 1;
    }

    pub fn satisfied(&mut self, latency: Seconds) {
        self.satisfied += 1;
        self.latencies.push(latency);
    }

    pub fn created(&mut self, id: &BundleId) {
        self.created.insert(id.clone());
    }

    pub fn delivered(&mut self, id: &BundleId) {
        self.delivered.insert(id.clone());
    }

    pub fn transmitted(&mut self, kind: BundleKind) {
        self.transmissions += 1;
        if kind == BundleKind::Response {
            self.data_transmissions += 1;
        }
    }

    pub fn created_count(&self) -> u64 {
        self.created.len() as u64
    }

    pub fn delivered_count(&self) -> u64 {
        self.delivered.len() as u64
    }

    pub fn summary(&self, echo: RunEcho) -> RunSummary {
        RunSummary {
            echo,
            issued: self.issued,
            satisfied: self.satisfied,
            latency_sum: self.latencies.iter().sum(),
            latency_samples: self.latencies.len() as u64,
            created: self.created_count(),
            delivered: self.delivered_count(),
            transmissions: self.transmissions,
            data_transmissions: self.data_transmissions,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub echo: RunEcho,
    pub issued: u64,
    pub satisfied: u64,
    pub latency_sum: Seconds,
    pub latency_samples: u64,
    pub created: u64,
    pub delivered: u64,
    pub transmissions: u64,
    pub data_transmissions: u64,
}

fn ratio(num: f64, den: f64) -> f64 {
    if den == 0.0 {
        f64::NAN
    } else {
        num / den
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metrics {
    pub response_ratio: f64,
    pub avg_latency: f64,
    pub delivery_ratio: f64,
    pub avg_cost: f64,
    pub avg_cost_data_only: f64,
}

impl RunSummary {
    /// Undefined ratios come out as NaN.
    pub fn finalize(&self) -> Metrics {
        Metrics {
            response_ratio: ratio(self.satisfied as f64, self.issued as f64),
            avg_latency: ratio(self.latency_sum, self.latency_samples as f64),
            delivery_ratio: ratio(self.delivered as f64, self.created as f64),
            avg_cost: ratio(self.transmissions as f64, self.satisfied as f64),
            avg_cost_data_only: ratio(self.data_transmissions as f64, self.satisfied as f64),
        }
    }

    pub fn row(&self) -> RunRow {
        let m = self.finalize();
        RunRow {
            seed: self.echo.seed,
            router: self.echo.router.clone(),
            dist: self.echo.dist.clone(),
            buffer_mb: self.echo.buffer_mb,
            ttl_s: self.echo.ttl_s,
            producers: self.echo.producers,
            items_per_producer: self.echo.items_per_producer,
            issued: self.issued,
            satisfied: self.satisfied,
            response_ratio: m.response_ratio,
            avg_latency_s: m.avg_latency,
            delivery_ratio: m.delivery_ratio,
            avg_cost: m.avg_cost,
            transmissions: self.transmissions,
            avg_cost_data_only: m.avg_cost_data_only,
            point: self.echo.point.clone(),
        }
    }
}

/// One line of `run.csv`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub seed: u64,
    pub router: String,
    pub dist: String,
    pub buffer_mb: f64,
    pub ttl_s: f64,
    pub producers: usize,
    pub items_per_producer: usize,
    pub issued: u64,
    pub satisfied: u64,
    pub response_ratio: f64,
    pub avg_latency_s: f64,
    pub delivery_ratio: f64,
    pub avg_cost: f64,
    pub transmissions: u64,
    pub avg_cost_data_only: f64,
    pub point: String,
}

impl RunRow {
    pub fn echo(&self) -> RunEcho {
        RunEcho {
            seed: self.seed,
            router: self.router.clone(),
            dist: self.dist.clone(),
            buffer_mb: self.buffer_mb,
            ttl_s: self.ttl_s,
            producers: self.producers,
            items_per_producer: self.items_per_producer,
            point: self.point.clone(),
        }
    }
}

pub const AGGREGATED: [&str; 8] = [
    "issued",
    "satisfied",
    "response_ratio",
    "avg_latency_s",
    "delivery_ratio",
    "avg_cost",
    "avg_cost_data_only",
    "transmissions",
];

fn metric_value(row: &RunRow, name: &str) -> f64 {
    match name {
        "issued" => row.issued as f64,
        "satisfied" => row.satisfied as f64,
        "response_ratio" => row.response_ratio,
        "avg_latency_s" => row.avg_latency_s,
        "delivery_ratio" => row.delivery_ratio,
        "avg_cost" => row.avg_cost,
        "avg_cost_data_only" => row.avg_cost_data_only,
        "transmissions" => row.transmissions as f64,
        other => panic!("unknown metric {other}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Stat {
    pub mean: f64,
    /// Sample standard deviation; zero for a single value.
    pub sd: f64,
    /// Runs left out because the metric was undefined.
    pub excluded: usize,
}

impl Stat {
    pub fn of(values: &[f64]) -> Stat {
        let kept: Vec<f64> = values.iter().copied().filter(|v| !v.is_nan()).collect();
        let excluded = values.len() - kept.len();
        let n = kept.len();
        if n == 0 {
            return Stat {
                mean: f64::NAN,
                sd: f64::NAN,
                excluded,
            };
        }
        if kept.iter().all(|v| *v == kept[0]) {
            return Stat {
                mean: kept[0],
                sd: 0.0,
                excluded,
            };
        }
        let mean = kept.iter().sum::<f64>() / n as f64;
        let sd = if n > 1 {
            (kept.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Stat { mean, sd, excluded }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Aggregate {
    /// Configuration shared by the runs; `seed` is the first run's.
    pub echo: RunEcho,
    pub runs: usize,
    pub stats: BTreeMap<&'static str, Stat>,
}

impl Aggregate {
    pub fn stat(&self, metric: &str) -> Stat {
        self.stats[metric]
    }
}

/// Mean and sample sd of every metric over runs of one configuration.
pub fn aggregate(rows: &[RunRow]) -> Result<Aggregate, MetricsError> {
    let first = rows.first().ok_or(MetricsError::NoRuns)?;
    let echo = first.echo();
    if let Some(odd) = rows.iter().find(|r| !echo.same_config(&r.echo())) {
        return Err(MetricsError::MixedConfig(format!(
            "seed {} ({:?}) vs seed {} ({:?})",
            first.seed,
            echo,
            odd.seed,
            odd.echo()
        )));
    }
    let stats = AGGREGATED
        .iter()
        .map(|&m| {
            let values: Vec<f64> = rows.iter().map(|r| metric_value(r, m)).collect();
            (m, Stat::of(&values))
        })
        .collect();
    Ok(Aggregate {
        echo,
        runs: rows.len(),
        stats,
    })
}

/// Splits rows into configurations, in order of first appearance, and
/// aggregates each.
pub fn aggregate_groups(rows: &[RunRow]) -> Result<Vec<Aggregate>, MetricsError> {
    let mut groups: Vec<Vec<RunRow>> = Vec::new();
    for r in rows {
        match groups
            .iter_mut()
            .find(|g| g[0].echo().same_config(&r.echo()))
        {
            Some(g) => g.push(r.clone()),
            None => groups.push(vec![r.clone()]),
        }
    }
    groups.iter().map(|g| aggregate(g)).collect()
}

pub fn write_runs<W: io::Write>(out: W, rows: &[RunRow]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    if rows.is_empty() {
        w.write_record(RUN_HEADER)?;
    }
    w.flush()?;
    Ok(())
}

pub const RUN_HEADER: [&str; 16] = [
    "seed",
    "router",
    "dist",
    "buffer_mb",
    "ttl_s",
    "producers",
    "items_per_producer",
    "issued",
    "satisfied",
    "response_ratio",
    "avg_latency_s",
    "delivery_ratio",
    "avg_cost",
    "transmissions",
    "avg_cost_data_only",
    "point",
];

pub fn read_runs<R: io::Read>(input: R) -> Result<Vec<RunRow>, MetricsError> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize()
        .collect::<Result<Vec<RunRow>, _>>()
        .map_err(Into::into)
}

pub fn write_aggregates<W: io::Write>(out: W, aggs: &[Aggregate]) -> Result<(), MetricsError> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = [
        "router",
        "dist",
        "buffer_mb",
        "ttl_s",
        "producers",
        "items_per_producer",
        "point",
        "runs",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for m in AGGREGATED {
        header.extend([
            format!("{m}_mean"),
            format!("{m}_sd"),
            format!("{m}_excluded"),
        ]);
    }
    w.write_record(&header)?;
    for a in aggs {
        let e = &a.echo;
        let mut rec = vec![
            e.router.clone(),
            e.dist.clone(),
            e.buffer_mb.to_string(),
            e.ttl_s.to_string(),
            e.producers.to_string(),
            e.items_per_producer.to_string(),
            e.point.clone(),
            a.runs.to_string(),
        ];
        for m in AGGREGATED {
            let s = a.stat(m);
            rec.extend([s.mean.to_string(), s.sd.to_string(), s.excluded.to_string()]);
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}
