//! Parameter sweeps: the cartesian product of varied config keys, each point
//! run over consecutive seeds.

use rayon::prelude::*;

use crate::config::{ConfigError, ScenarioConfig};
use crate::metrics::RunRow;
use crate::sim::{SimError, World};

/// One varied key and the values it takes.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    pub key: String,
    pub values: Vec<String>,
}

impl Axis {
    /// Parses `KEY=V1,V2,...`.
    pub fn parse(arg: &str) -> Result<Axis, ConfigError> {
        let (key, values) = arg.split_once('=').ok_or_else(|| ConfigError::Syntax {
            line: 0,
            text: arg.to_string(),
        })?;
        let key = key.trim().to_string();
        let values: Vec<String> = values
            .split(',')
            .map(|v| v.trim().to_string())
            .filter(|v| !v.is_empty())
            .collect();
        if values.is_empty() {
            return Err(ConfigError::Value {
                key,
                msg: "no values to sweep".into(),
            });
        }
        Ok(Axis { key, values })
    }
}

/// A sweep point: the config with the point's overrides applied.
#[derive(Debug, Clone)]
pub struct Point {
    pub label: String,
    pub config: ScenarioConfig,
}

/// Expands `axes` over `base`, first axis varying slowest. Every override is
/// validated, so unknown keys and bad values fail before anything runs.
pub fn points(base: &ScenarioConfig, axes: &[Axis]) -> Result<Vec<Point>, ConfigError> {
    let mut out = vec![Point {
        label: "-".into(),
        config: base.clone(),
    }];
    for axis in axes {
        let mut next = Vec::with_capacity(out.len() * axis.values.len());
        for p in &out {
            for v in &axis.values {
                let mut config = p.config.clone();
                config.set(&axis.key, v)?;
                config.validate()?;
                let part = format!("{}={}", axis.key, v);
                let label = if p.label == "-" {
                    part
                } else {
                    format!("{};{part}", p.label)
                };
                next.push(Point { label, config });
            }
        }
        out = next;
    }
    Ok(out)
}

/// Worker count: `CIDOR_SIM_THREADS` if set, else the available cores.
pub fn thread_count() -> usize {
    let cores = std::thread::available_parallelism().map_or(1, |n| n.get());
    std::env::var("CIDOR_SIM_THREADS")
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or(cores)
}

/// Runs every point with seeds `base_seed..base_seed + seeds`. Rows come
/// back grouped by point, seeds ascending.
pub fn run_points(points: &[Point], base_seed: u64, seeds: u64) -> Result<Vec<RunRow>, SimError> {
    let jobs: Vec<(usize, u64)> = (0..points.len())
        .flat_map(|p| (0..seeds).map(move |i| (p, base_seed + i)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(thread_count())
        .build()
        .expect("thread pool");
    pool.install(|| {
        jobs.par_iter()
            .map(|&(p, seed)| {
                let mut world = World::from_config(&points[p].config, seed)?;
                world.set_point(&points[p].label);
                Ok(world.run()?.row())
            })
            .collect()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn axis_parsing() {
        let a = Axis::parse("buffer_mb=1,2, 4").unwrap();
        assert_eq!(a.key, "buffer_mb");
        assert_eq!(a.values, ["1", "2", "4"]);
        assert!(Axis::parse("buffer_mb").is_err());
        assert!(Axis::parse("buffer_mb=").is_err());
    }

    #[test]
    fn cartesian_product_in_order() {
        let axes = [
            Axis::parse("router=epidemic,snw").unwrap(),
            Axis::parse("ttl_s=50,100,500").unwrap(),
        ];
        let pts = points(&ScenarioConfig::default(), &axes).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0].label, "router=epidemic;ttl_s=50");
        assert_eq!(pts[5].label, "router=snw;ttl_s=500");
        assert_eq!(pts[4].config.ttl_s, 100.0);
    }

    #[test]
    fn empty_sweep_is_single_point() {
        let pts = points(&ScenarioConfig::default(), &[]).unwrap();
        assert_eq!(pts.len(), 1);
        assert_eq!(pts[0].label, "-");
    }

    #[test]
    fn unknown_key_rejected() {
        let axes = [Axis::parse("warp.factor=9").unwrap()];
        assert!(matches!(
            points(&ScenarioConfig::default(), &axes),
            Err(ConfigError::UnknownKey(_))
        ));
    }
}
