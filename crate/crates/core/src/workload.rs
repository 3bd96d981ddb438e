//! Content catalog, popularity ladders, resource placement and the interest
//! schedule.
//!
//! A ladder is a list of cumulative integer thresholds over `(0, range_max]`.
//! A query draws `v` uniformly from `1..=range_max` and takes the first item
//! whose threshold reaches `v`.

use std::collections::BTreeMap;

use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use crate::bundle::{ContentName, Eid, Seconds};

#[derive(Debug, Error, PartialEq)]
pub enum WorkloadError {
    #[error("catalog must hold at least one item")]
    EmptyCatalog,
    #[error("catalog size {n} exceeds ladder range {range_max}")]
    RangeTooSmall { n: usize, range_max: u32 },
    #[error("{per_producer} items per producer exceeds catalog size {n}")]
    TooManyItems { per_producer: usize, n: usize },
    #[error("invalid popularity parameter: {0}")]
    BadParameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Popularity {
    Uniform,
    /// Raw mass of item `j` (1-based) is `c / j^s`.
    Zipf {
        s: f64,
        c: f64,
    },
}

impl Popularity {
    /// Unnormalized per-item probabilities.
    pub fn raw_probabilities(&self, n: usize) -> Vec<f64> {
        match *self {
            Popularity::Uniform => vec![1.0 / n as f64; n],
            Popularity::Zipf { s, c } => (1..=n).map(|j| c / (j as f64).powf(s)).collect(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Popularity::Uniform => "uniform",
            Popularity::Zipf { .. } => "zipf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentLadder {
    pub cumulative: Vec<u32>,
    pub range_max: u32,
}

impl ContentLadder {
    /// Ladder from per-item masses. With `renormalize` the masses are scaled
    /// to sum to one so the ladder closes at `range_max`; otherwise they are
    /// used as given.
    pub fn from_probabilities(
        probs: &[f64],
        range_max: u32,
        renormalize: bool,
    ) -> Result<ContentLadder, WorkloadError> {
        if probs.is_empty() {
            return Err(WorkloadError::EmptyCatalog);
        }
        if probs.len() > range_max as usize {
            return Err(WorkloadError::RangeTooSmall {
                n: probs.len(),
                range_max,
            });
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(WorkloadError::BadParameter(
                "probabilities must be finite and non-negative".into(),
            ));
        }
        let total: f64 = if renormalize { probs.iter().sum() } else { 1.0 };
        if total <= 0.0 {
            return Err(WorkloadError::BadParameter("total mass is zero".into()));
        }
        let mut acc = 0.0;
        let cumulative = probs
            .iter()
            .map(|p| {
                acc += p;
                (range_max as f64 * acc / total).round() as u32
            })
            .collect();
        Ok(ContentLadder {
            cumulative,
            range_max,
        })
    }

    pub fn build(
        dist: Popularity,
        n: usize,
        range_max: u32,
        renormalize: bool,
    ) -> Result<ContentLadder, WorkloadError> {
        if n == 0 {
            return Err(WorkloadError::EmptyCatalog);
        }
        if let Popularity::Zipf { s, c } = dist {
            if !(s.is_finite() && c.is_finite() && c > 0.0) {
                return Err(WorkloadError::BadParameter(format!("zipf s={s} c={c}")));
            }
        }
        if let Popularity::Uniform = dist {
            if n > range_max as usize {
                return Err(WorkloadError::RangeTooSmall { n, range_max });
            }
            let cumulative = (1..=n)
                .map(|j| (j as f64 * range_max as f64 / n as f64).round() as u32)
                .collect();
            return Ok(ContentLadder {
                cumulative,
                range_max,
            });
        }
        ContentLadder::from_probabilities(&dist.raw_probabilities(n), range_max, renormalize)
    }

    pub fn len(&self) -> usize {
        self.cumulative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cumulative.is_empty()
    }

    /// Item index for draw `v`. Values above the last threshold, possible on
    /// an unnormalized ladder, map to the last item.
    pub fn index_for(&self, v: u32) -> usize {
        let i = self.cumulative.partition_point(|&c| c < v);
        i.min(self.cumulative.len() - 1)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.index_for(rng.random_range(1..=self.range_max))
    }
}

/// Per-requester masses: each base mass `p` is replaced by a draw from
/// Normal(p, sd_factor·p), clamped at zero, and the result renormalized to
/// the base total.
pub fn jitter_probabilities<R: Rng + ?Sized>(
    base: &[f64],
    sd_factor: f64,
    rng: &mut R,
) -> Vec<f64> {
    if sd_factor <= 0.0 {
        return base.to_vec();
    }
    let mut q: Vec<f64> = base
        .iter()
        .map(|&p| {
            let sd = sd_factor * p;
            if sd > 0.0 {
                Normal::new(p, sd).expect("finite sd").sample(rng).max(0.0)
            } else {
                p
            }
        })
        .collect();
    let (base_total, total): (f64, f64) = (base.iter().sum(), q.iter().sum());
    if total > 0.0 {
        q.iter_mut().for_each(|x| *x *= base_total / total);
    } else {
        q = base.to_vec();
    }
    q
}

#[derive(Debug, Clone, PartialEq)]
pub struct Catalog {
    pub names: Vec<ContentName>,
    pub sizes: Vec<u64>,
}

impl Catalog {
    /// `n` items named `/cidor/item/<i>`, sizes uniform in `[min, max]` bytes.
    pub fn generate<R: Rng + ?Sized>(
        n: usize,
        min_size: u64,
        max_size: u64,
        rng: &mut R,
    ) -> Result<Catalog, WorkloadError> {
        if n == 0 {
            return Err(WorkloadError::EmptyCatalog);
        }
        if min_size == 0 || min_size > max_size {
            return Err(WorkloadError::BadParameter(format!(
                "content size range {min_size}..={max_size}"
            )));
        }
        let names = (0..n)
            .map(|i| {
                format!("/cidor/item/{i:03}")
                    .parse()
                    .expect("generated names are valid")
            })
            .collect();
        let sizes = (0..n)
            .map(|_| rng.random_range(min_size..=max_size))
            .collect();
        Ok(Catalog { names, sizes })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }
}

/// Producer → catalog indices it holds.
pub type PlacementPlan = BTreeMap<Eid, Vec<usize>>;

/// Gives each producer `per_producer` distinct items, drawn independently
/// per producer.
pub fn place_resources<R: Rng + ?Sized>(
    catalog_size: usize,
    producers: &[Eid],
    per_producer: usize,
    rng: &mut R,
) -> Result<PlacementPlan, WorkloadError> {
    if per_producer > catalog_size {
        return Err(WorkloadError::TooManyItems {
            per_producer,
            n: catalog_size,
        });
    }
    Ok(producers
        .iter()
        .map(|p| {
            let mut items = index::sample(rng, catalog_size, per_producer).into_vec();
            items.sort_unstable();
            (p.clone(), items)
        })
        .collect())
}

/// Interest generation instants: every `interval` seconds starting at
/// `interval`, up to and including `duration`.
pub fn interest_times(interval: Seconds, duration: Seconds) -> Vec<Seconds> {
    if interval <= 0.0 || duration < interval {
        return Vec::new();
    }
    let count = (duration / interval + 1e-9).floor() as u64;
    (1..=count).map(|k| k as f64 * interval).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::tests::eid;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    const PAPER_ZIPF: Popularity = Popularity::Zipf { s: 1.0, c: 0.2 };

    #[test]
    fn four_item_unnormalized_ladder() {
        let l = ContentLadder::build(PAPER_ZIPF, 4, 1000, false).unwrap();
        assert_eq!(l.cumulative, [200, 300, 367, 417]);
        assert_eq!(l.index_for(333), 2);
        assert_eq!(l.index_for(1), 0);
        assert_eq!(l.index_for(200), 0);
        assert_eq!(l.index_for(201), 1);
        // Residual mass above the last threshold.
        assert_eq!(l.index_for(418), 3);
        assert_eq!(l.index_for(1000), 3);
    }

    #[test]
    fn single_uniform_item() {
        let l = ContentLadder::build(Popularity::Uniform, 1, 1000, true).unwrap();
        assert_eq!(l.cumulative, [1000]);
    }

    #[test]
    fn renormalized_zipf_closes_at_range() {
        let l = ContentLadder::build(PAPER_ZIPF, 100, 1000, true).unwrap();
        let h100: f64 = (1..=100).map(|k| 1.0 / k as f64).sum();
        assert_eq!(*l.cumulative.last().unwrap(), 1000);
        assert_eq!(
            l.cumulative[0],
            (1000.0 * 0.2 / (0.2 * h100)).round() as u32
        );
        assert!(l.cumulative.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn oversized_catalog_rejected() {
        assert_eq!(
            ContentLadder::build(Popularity::Uniform, 11, 10, true),
            Err(WorkloadError::RangeTooSmall {
                n: 11,
                range_max: 10
            })
        );
    }

    #[test]
    fn sample_frequencies_match_bucket_widths() {
        let l = ContentLadder::build(PAPER_ZIPF, 10, 1000, true).unwrap();
        let mut r = ChaCha8Rng::seed_from_u64(9);
        let draws = 1_000_000;
        let mut counts = vec![0u64; l.len()];
        for _ in 0..draws {
            counts[l.sample(&mut r)] += 1;
        }
        let mut prev = 0;
        let mut chi2 = 0.0;
        for (i, &c) in l.cumulative.iter().enumerate() {
            let expected = draws as f64 * (c - prev) as f64 / 1000.0;
            let got = counts[i] as f64;
            assert!((got - expected).abs() / draws as f64 <= 0.01);
            chi2 += (got - expected).powi(2) / expected;
            prev = c;
        }
        // 9 degrees of freedom, p = 0.001 critical value.
        assert!(chi2 < 27.88, "chi2 {chi2}");
    }

    #[test]
    fn zero_jitter_keeps_base_ladder() {
        let base = PAPER_ZIPF.raw_probabilities(100);
        let mut r = ChaCha8Rng::seed_from_u64(1);
        let q = jitter_probabilities(&base, 0.0, &mut r);
        assert_eq!(
            ContentLadder::from_probabilities(&q, 1000, true).unwrap(),
            ContentLadder::build(PAPER_ZIPF, 100, 1000, true).unwrap()
        );
    }

    #[test]
    fn jitter_stays_close_and_non_negative() {
        let base = PAPER_ZIPF.raw_probabilities(100);
        let mut r = ChaCha8Rng::seed_from_u64(2);
        let q = jitter_probabilities(&base, 0.1, &mut r);
        assert!(q.iter().all(|x| *x >= 0.0));
        let total: f64 = q.iter().sum();
        assert!((total - base.iter().sum::<f64>()).abs() < 1e-9);
        assert_ne!(q, base);
    }

    #[test]
    fn full_catalog_placement() {
        let producers: Vec<_> = (0..10).map(|i| eid(&format!("p{i}"))).collect();
        let mut r = ChaCha8Rng::seed_from_u64(3);
        let plan = place_resources(100, &producers, 100, &mut r).unwrap();
        assert!(plan.values().all(|v| *v == (0..100).collect::<Vec<_>>()));
        let empty = place_resources(100, &producers, 0, &mut r).unwrap();
        assert!(empty.values().all(Vec::is_empty));
        assert!(place_resources(100, &producers, 101, &mut r).is_err());
    }

    #[test]
    fn coverage_matches_inclusion_exclusion() {
        let producers: Vec<_> = (0..10).map(|i| eid(&format!("p{i}"))).collect();
        let mut r = ChaCha8Rng::seed_from_u64(4);
        let trials = 2000;
        let mut covered = 0usize;
        for _ in 0..trials {
            let plan = place_resources(100, &producers, 10, &mut r).unwrap();
            let union: BTreeSet<_> = plan.values().flatten().collect();
            covered += union.len();
        }
        let frac = covered as f64 / (trials * 100) as f64;
        let oracle = 1.0 - 0.9f64.powi(10);
        assert!((frac - oracle).abs() < 0.005, "{frac} vs {oracle}");
    }

    #[test]
    fn schedule_counts() {
        assert_eq!(interest_times(100.0, 86_400.0).len(), 864);
        assert_eq!(interest_times(100.0, 99.0).len(), 0);
        assert_eq!(interest_times(100.0, 300.0), [100.0, 200.0, 300.0]);
    }

    #[test]
    fn catalog_sizes_in_range() {
        let mut r = ChaCha8Rng::seed_from_u64(5);
        let c = Catalog::generate(100, 500_000, 1_000_000, &mut r).unwrap();
        assert_eq!(c.len(), 100);
        assert!(c.sizes.iter().all(|s| (500_000..=1_000_000).contains(s)));
        assert_eq!(c.names[7].as_str(), "/cidor/item/007");
    }
}
