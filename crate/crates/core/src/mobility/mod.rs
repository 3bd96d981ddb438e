//! Node movement: random waypoint in a rectangle and shortest-path movement
//! over a map graph.
//!
//! Each leg starts with a pause at the leg's first point, then follows the
//! path at constant speed. Positions are analytic in time, so the simulation
//! can sample them at any instant.

pub mod map;

use std::sync::Arc;

use rand::Rng;

use crate::bundle::Seconds;

pub use map::{MapError, MapGraph, PoiGroup};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn lerp(self, other: Point, f: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * f,
            self.y + (other.y - self.y) * f,
        )
    }

    pub fn distance_to_segment(self, a: Point, b: Point) -> f64 {
        let (dx, dy) = (b.x - a.x, b.y - a.y);
        let len2 = dx * dx + dy * dy;
        if len2 == 0.0 {
            return self.distance(a);
        }
        let f = (((self.x - a.x) * dx + (self.y - a.y) * dy) / len2).clamp(0.0, 1.0);
        self.distance(a.lerp(b, f))
    }
}

/// Inclusive uniform range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Range {
    pub min: f64,
    pub max: f64,
}

impl Range {
    pub const fn new(min: f64, max: f64) -> Self {
        Range { min, max }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.max > self.min {
            rng.random_range(self.min..=self.max)
        } else {
            self.min
        }
    }
}

/// One movement leg: pause at `path[0]` until `depart_at`, then walk the
/// path at `speed`.
#[derive(Debug, Clone, PartialEq)]
pub struct MobilityState {
    path: Vec<Point>,
    cumulative: Vec<f64>,
    pub speed: f64,
    pub depart_at: Seconds,
    /// Map vertex the leg ends at, for map-based movement.
    pub vertex: Option<usize>,
}

impl MobilityState {
    pub fn new(path: Vec<Point>, speed: f64, depart_at: Seconds, vertex: Option<usize>) -> Self {
        assert!(!path.is_empty(), "a leg has at least one point");
        let mut cumulative = Vec::with_capacity(path.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in path.windows(2) {
            acc += w[0].distance(w[1]);
            cumulative.push(acc);
        }
        MobilityState {
            path,
            cumulative,
            speed,
            depart_at,
            vertex,
        }
    }

    /// A node that never moves.
    pub fn stationary(at: Point) -> Self {
        MobilityState::new(vec![at], 0.0, f64::INFINITY, None)
    }

    pub fn path(&self) -> &[Point] {
        &self.path
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().expect("non-empty")
    }

    pub fn destination(&self) -> Point {
        *self.path.last().expect("non-empty")
    }

    /// Time the leg ends; infinite for a node that never moves.
    pub fn arrival(&self) -> Seconds {
        if !self.depart_at.is_finite() {
            return f64::INFINITY;
        }
        if self.length() == 0.0 {
            return self.depart_at;
        }
        if self.speed <= 0.0 {
            return f64::INFINITY;
        }
        self.depart_at + self.length() / self.speed
    }

    pub fn position_at(&self, t: Seconds) -> Point {
        if t <= self.depart_at || self.speed <= 0.0 {
            return self.path[0];
        }
        let d = (t - self.depart_at) * self.speed;
        if d >= self.length() {
            return self.destination();
        }
        // First segment whose end lies beyond d.
        let i = self.cumulative.partition_point(|&c| c <= d);
        let (a, b) = (self.path[i - 1], self.path[i]);
        let seg = self.cumulative[i] - self.cumulative[i - 1];
        a.lerp(b, (d - self.cumulative[i - 1]) / seg)
    }
}

/// Rectangle `[0, width] × [0, height]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Area {
    pub width: f64,
    pub height: f64,
}

pub fn random_point<R: Rng + ?Sized>(area: Area, rng: &mut R) -> Point {
    Point::new(
        Range::new(0.0, area.width).sample(rng),
        Range::new(0.0, area.height).sample(rng),
    )
}

/// Next random-waypoint leg, starting where `state` ends at its arrival.
pub fn next_waypoint_rwp<R: Rng + ?Sized>(
    state: &MobilityState,
    rng: &mut R,
    area: Area,
    speed: Range,
    pause: Range,
) -> MobilityState {
    let from = state.destination();
    let start = state.arrival();
    if area.width <= 0.0 && area.height <= 0.0 {
        return MobilityState::stationary(from);
    }
    let to = random_point(area, rng);
    let v = speed.sample(rng);
    let p = pause.sample(rng);
    MobilityState::new(vec![from, to], v, start + p, None)
}

/// Next shortest-path leg over `map`. With probability `poi_prob` the
/// destination is a point of interest from a group drawn by
/// `group_weights` (one weight per POI group of the map), otherwise it is
/// any vertex. Draws that land on the current vertex are repeated.
pub fn next_waypoint_spmb<R: Rng + ?Sized>(
    state: &MobilityState,
    rng: &mut R,
    map: &MapGraph,
    group_weights: &[f64],
    poi_prob: f64,
    speed: Range,
    pause: Range,
) -> MobilityState {
    let current = state.vertex.expect("map-based legs end on a vertex");
    let start = state.arrival();
    let groups = map.poi_groups();
    let total: f64 = group_weights.iter().take(groups.len()).sum();
    let has_poi = total > 0.0
        && groups
            .iter()
            .zip(group_weights)
            .any(|(g, &w)| w > 0.0 && g.members.iter().any(|&(v, _)| v != current));
    let uniform_ok = map.len() > 1;
    if !has_poi && !uniform_ok {
        return MobilityState::stationary(map.position(current));
    }
    let dest = loop {
        let use_poi = has_poi && (!uniform_ok || rng.random_bool(poi_prob.clamp(0.0, 1.0)));
        let candidate = if use_poi {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = groups.len() - 1;
            for (k, &w) in group_weights.iter().take(groups.len()).enumerate() {
                if u < w {
                    chosen = k;
                    break;
                }
                u -= w;
            }
            groups[chosen].pick(rng.random())
        } else {
            rng.random_range(0..map.len())
        };
        if candidate != current {
            break candidate;
        }
    };
    let (vertices, _) = map
        .shortest_path(current, dest)
        .expect("maps are connected");
    let path = vertices.iter().map(|&v| map.position(v)).collect();
    let v = speed.sample(rng);
    let p = pause.sample(rng);
    MobilityState::new(path, v, start + p, Some(dest))
}

#[derive(Debug, Clone)]
pub enum MobilityModel {
    Stationary {
        area: Area,
    },
    RandomWaypoint {
        area: Area,
        speed: Range,
        pause: Range,
    },
    ShortestPathMap {
        map: Arc<MapGraph>,
        poi_prob: f64,
        /// Probability that a POI visit goes to the node's own group rather
        /// than one of the others.
        home_prob: f64,
        speed: Range,
        pause: Range,
    },
}

/// A node's movement: the current leg plus what it needs to draw the next.
#[derive(Debug, Clone)]
pub struct Mover {
    pub state: MobilityState,
    /// POI group index for map-based movement.
    pub group: Option<usize>,
    group_weights: Vec<f64>,
}

impl Mover {
    /// Initial placement at time 0. Nodes are spread over POI groups
    /// round-robin by `index`.
    pub fn spawn<R: Rng + ?Sized>(model: &MobilityModel, index: usize, rng: &mut R) -> Mover {
        match model {
            MobilityModel::Stationary { area } => Mover {
                state: MobilityState::stationary(random_point(*area, rng)),
                group: None,
                group_weights: Vec::new(),
            },
            MobilityModel::RandomWaypoint { area, .. } => {
                let at = random_point(*area, rng);
                let seed = MobilityState::new(vec![at], 0.0, 0.0, None);
                let mut m = Mover {
                    state: seed,
                    group: None,
                    group_weights: Vec::new(),
                };
                m.state = m.next_leg(model, rng);
                m
            }
            MobilityModel::ShortestPathMap { map, home_prob, .. } => {
                let groups = map.poi_groups().len();
                let group = (groups > 0).then(|| index % groups);
                let group_weights = (0..groups)
                    .map(|k| match (groups, Some(k) == group) {
                        (1, _) => 1.0,
                        (_, true) => *home_prob,
                        (_, false) => (1.0 - home_prob) / (groups - 1) as f64,
                    })
                    .collect();
                let v = rng.random_range(0..map.len());
                let seed = MobilityState::new(vec![map.position(v)], 0.0, 0.0, Some(v));
                let mut m = Mover {
                    state: seed,
                    group,
                    group_weights,
                };
                m.state = m.next_leg(model, rng);
                m
            }
        }
    }

    fn next_leg<R: Rng + ?Sized>(&self, model: &MobilityModel, rng: &mut R) -> MobilityState {
        match model {
            MobilityModel::Stationary { .. } => self.state.clone(),
            MobilityModel::RandomWaypoint { area, speed, pause } => {
                next_waypoint_rwp(&self.state, rng, *area, *speed, *pause)
            }
            MobilityModel::ShortestPathMap {
                map,
                poi_prob,
                speed,
                pause,
                ..
            } => next_waypoint_spmb(
                &self.state,
                rng,
                map,
                &self.group_weights,
                *poi_prob,
                *speed,
                *pause,
            ),
        }
    }

    /// Draws new legs until the current one is still under way at `t`.
    pub fn advance<R: Rng + ?Sized>(&mut self, model: &MobilityModel, t: Seconds, rng: &mut R) {
        while self.state.arrival() < t {
            let next = self.next_leg(model, rng);
            // A leg that neither pauses nor moves would never advance time.
            if next.arrival() <= self.state.arrival() && next.length() == 0.0 {
                self.state = MobilityState::stationary(next.destination());
                return;
            }
            self.state = next;
        }
    }

    pub fn position_at(&self, t: Seconds) -> Point {
        self.state.position_at(t)
    }
}
