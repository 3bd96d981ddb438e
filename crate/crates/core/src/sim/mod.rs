//! Discrete-event simulation of a set of nodes meeting opportunistically.
//!
//! Time advances through an [`EventQueue`]. A periodic tick moves nodes,
//! turns proximity into contact up/down events and sweeps expired state.
//! Each contact carries at most one transfer at a time, and each node's
//! radio takes part in at most one transfer at a time. A transfer takes
//! `8 · size / rate` seconds; if the contact breaks first it is discarded
//! and the bundle is offered again at a later contact.

pub mod event;

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::bundle::{Bundle, BundleId, ContentName, Eid, Nonce, Seconds};
use crate::config::{ConfigError, ScenarioConfig};
use crate::metrics::{MetricsSink, RunEcho, RunSummary};
use crate::mobility::{MobilityModel, Mover, Point};
use crate::node::{NodeConfig, NodeState, Origination, Reception};
use crate::routing::{next_transfer, on_transfer_complete, RouterKind, TransferMode};
use crate::workload::{self, Catalog, ContentLadder, WorkloadError};

pub use event::{Event, EventKind, EventQueue};

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Workload(#[from] WorkloadError),
    #[error("invariant violated at t={time}: {msg}")]
    Invariant { time: Seconds, msg: String },
    #[error("writing trace: {0}")]
    Trace(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkModel {
    pub range_m: f64,
    pub rate_bps: f64,
}

impl LinkModel {
    pub fn transfer_time(&self, size: u64) -> Seconds {
        8.0 * size as f64 / self.rate_bps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Requester,
    Intermediate,
    Producer,
}

/// A fixed contact window for scripted scenarios.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedContact {
    pub a: usize,
    pub b: usize,
    pub up: Seconds,
    pub down: Seconds,
}

/// A request issued at a fixed time in a scripted scenario.
#[derive(Debug, Clone, PartialEq)]
pub struct ScriptedRequest {
    pub time: Seconds,
    pub node: usize,
    pub name: ContentName,
    pub target: Eid,
    pub nonce: Nonce,
}

/// A hand-built scenario: explicit nodes, contents, contacts and requests,
/// no mobility.
#[derive(Debug, Clone)]
pub struct Script {
    pub nodes: Vec<(Eid, NodeConfig)>,
    /// `(node, name, size)` placed in content stores.
    pub contents: Vec<(usize, ContentName, u64)>,
    pub contacts: Vec<ScriptedContact>,
    pub requests: Vec<ScriptedRequest>,
    /// Nodes an interest may be retargeted to.
    pub hosts: Vec<Eid>,
    pub router: RouterKind,
    pub link: LinkModel,
    pub ttl: Seconds,
    pub duration: Seconds,
    pub tick: Seconds,
}

enum Workload {
    Generated {
        requests_for: BTreeMap<usize, ContentLadder>,
        catalog: Catalog,
        targets: Vec<usize>,
    },
    Scripted(Vec<ScriptedRequest>),
}

enum Contacts {
    Mobility {
        model: MobilityModel,
        movers: Vec<Mover>,
    },
    Scripted,
}

/// Read-only view of a transfer in progress.
#[derive(Debug, Clone, Copy)]
pub struct TransferView<'a> {
    pub sender: usize,
    pub receiver: usize,
    pub token: u64,
    pub bundle: &'a Bundle,
}

#[derive(Debug, Clone)]
struct InFlight {
    sender: usize,
    receiver: usize,
    bundle: Bundle,
    mode: TransferMode,
    budget: Option<u32>,
    token: u64,
}

pub struct World {
    clock: Seconds,
    duration: Seconds,
    tick: Seconds,
    ticks_done: u64,
    nodes: Vec<NodeState>,
    roles: Vec<Role>,
    hosts: Vec<Eid>,
    router: RouterKind,
    link: LinkModel,
    ttl: Seconds,
    contacts: BTreeSet<(usize, usize)>,
    in_flight: BTreeMap<(usize, usize), InFlight>,
    radio_busy: Vec<bool>,
    dirty: BTreeSet<usize>,
    next_token: u64,
    queue: EventQueue,
    rng: ChaCha8Rng,
    metrics: MetricsSink,
    echo: RunEcho,
    workload: Workload,
    source: Contacts,
    trace: Option<Box<dyn Write + Send>>,
}

fn pair(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

impl World {
    /// Sets up nodes, content placement, requester ladders, initial
    /// positions and the interest schedule for a configured scenario.
    pub fn from_config(cfg: &ScenarioConfig, seed: u64) -> Result<World, SimError> {
        cfg.validate()?;
        let model = cfg.mobility_model()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);

        let mut eids = Vec::new();
        let mut roles = Vec::new();
        let mut cidor = Vec::new();
        for (prefix, count, role, enabled) in [
            ("r", cfg.requesters, Role::Requester, cfg.requesters_cidor),
            (
                "i",
                cfg.intermediates,
                Role::Intermediate,
                cfg.intermediates_cidor,
            ),
            ("p", cfg.producers, Role::Producer, cfg.producers_cidor),
        ] {
            for k in 0..count {
                eids.push(Eid::new(format!("{prefix}{k:02}")).expect("generated eids are valid"));
                roles.push(role);
                cidor.push(enabled);
            }
        }
        let nodes: Vec<NodeState> = eids
            .iter()
            .zip(&cidor)
            .map(|(e, &enabled)| {
                NodeState::new(
                    e.clone(),
                    &NodeConfig {
                        cidor_enabled: enabled,
                        buffer_bytes: cfg.buffer_bytes(),
                        opp_cache_bytes: cfg.opp_cache_bytes(),
                        processed_retention: cfg.ttl_s,
                        processed_capacity: cfg.processed_capacity,
                    },
                )
            })
            .collect();

        let catalog = Catalog::generate(
            cfg.catalog_size,
            cfg.content_min_bytes,
            cfg.content_max_bytes,
            &mut rng,
        )?;
        let producer_ids: Vec<usize> = (0..eids.len())
            .filter(|&i| roles[i] == Role::Producer)
            .collect();
        let producer_eids: Vec<Eid> = producer_ids.iter().map(|&i| eids[i].clone()).collect();
        let plan = workload::place_resources(
            catalog.len(),
            &producer_eids,
            cfg.items_per_producer,
            &mut rng,
        )?;

        let base = cfg.popularity().raw_probabilities(catalog.len());
        let mut requests_for = BTreeMap::new();
        for i in (0..eids.len()).filter(|&i| roles[i] == Role::Requester) {
            let probs = workload::jitter_probabilities(&base, cfg.jitter_sd, &mut rng);
            let ladder = match cfg.popularity() {
                workload::Popularity::Uniform if cfg.jitter_sd == 0.0 => {
                    ContentLadder::build(cfg.popularity(), catalog.len(), cfg.range_max, true)?
                }
                _ => ContentLadder::from_probabilities(&probs, cfg.range_max, cfg.renormalize)?,
            };
            requests_for.insert(i, ladder);
        }
        let targets: Vec<usize> = (0..eids.len())
            .filter(|&i| roles[i] != Role::Requester)
            .collect();
        let hosts = targets.iter().map(|&i| eids[i].clone()).collect();

        let movers = (0..eids.len())
            .map(|i| Mover::spawn(&model, i, &mut rng))
            .collect();

        let mut world = World {
            clock: 0.0,
            duration: cfg.duration_s,
            tick: cfg.tick_s,
            ticks_done: 0,
            radio_busy: vec![false; nodes.len()],
            nodes,
            roles,
            hosts,
            router: cfg.router_kind(),
            link: LinkModel {
                range_m: cfg.range_m,
                rate_bps: cfg.rate_bps,
            },
            ttl: cfg.ttl_s,
            contacts: BTreeSet::new(),
            in_flight: BTreeMap::new(),
            dirty: BTreeSet::new(),
            next_token: 0,
            queue: EventQueue::default(),
            rng,
            metrics: MetricsSink::default(),
            echo: RunEcho {
                seed,
                router: cfg.router.clone(),
                dist: cfg.dist.clone(),
                buffer_mb: cfg.buffer_mb,
                ttl_s: cfg.ttl_s,
                producers: cfg.producers,
                items_per_producer: cfg.items_per_producer,
                point: "-".into(),
            },
            workload: Workload::Generated {
                requests_for,
                catalog: catalog.clone(),
                targets,
            },
            source: Contacts::Mobility { model, movers },
            trace: None,
        };
        for (producer, items) in &plan {
            let idx = world.index_of(producer).expect("placed on known producers");
            for &item in items {
                world.nodes[idx]
                    .cs
                    .insert(catalog.names[item].clone(), catalog.sizes[item]);
            }
        }
        let requesters: Vec<usize> = (0..world.nodes.len())
            .filter(|&i| world.roles[i] == Role::Requester)
            .collect();
        for t in workload::interest_times(cfg.interval_s, cfg.duration_s) {
            for &r in &requesters {
                world.queue.push(t, EventKind::InterestGen(r));
            }
        }
        world.queue.push(0.0, EventKind::Tick);
        Ok(world)
    }

    /// A scenario with scripted contacts and requests.
    pub fn from_script(script: Script, seed: u64) -> World {
        let nodes: Vec<NodeState> = script
            .nodes
            .iter()
            .map(|(e, c)| NodeState::new(e.clone(), c))
            .collect();
        let n = nodes.len();
        let mut world = World {
            clock: 0.0,
            duration: script.duration,
            tick: script.tick,
            ticks_done: 0,
            nodes,
            roles: vec![Role::Intermediate; n],
            hosts: script.hosts.clone(),
            router: script.router,
            link: script.link,
            ttl: script.ttl,
            contacts: BTreeSet::new(),
            in_flight: BTreeMap::new(),
            radio_busy: vec![false; n],
            dirty: BTreeSet::new(),
            next_token: 0,
            queue: EventQueue::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            metrics: MetricsSink::default(),
            echo: RunEcho {
                seed,
                router: script.router.name().into(),
                dist: "scripted".into(),
                buffer_mb: 0.0,
                ttl_s: script.ttl,
                producers: 0,
                items_per_producer: 0,
                point: "-".into(),
            },
            workload: Workload::Scripted(script.requests.clone()),
            source: Contacts::Scripted,
            trace: None,
        };
        for (node, name, size) in &script.contents {
            world.nodes[*node].cs.insert(name.clone(), *size);
        }
        for (k, r) in script.requests.iter().enumerate() {
            world.queue.push(r.time, EventKind::InterestGen(k));
        }
        for c in &script.contacts {
            world.queue.push(c.up, EventKind::ContactUp(c.a, c.b));
            world.queue.push(c.down, EventKind::ContactDown(c.a, c.b));
        }
        world.queue.push(0.0, EventKind::Tick);
        world
    }

    /// Writes one line per processed event (ticks excepted) to `out`.
    pub fn set_trace(&mut self, out: Box<dyn Write + Send>) {
        self.trace = Some(out);
    }

    pub fn set_point(&mut self, label: &str) {
        self.echo.point = label.to_string();
    }

    pub fn clock(&self) -> Seconds {
        self.clock
    }

    pub fn nodes(&self) -> &[NodeState] {
        &self.nodes
    }

    pub fn node(&self, eid: &str) -> &NodeState {
        &self.nodes[self.index_of_str(eid).expect("known node")]
    }

    pub fn roles(&self) -> &[Role] {
        &self.roles
    }

    pub fn metrics(&self) -> &MetricsSink {
        &self.metrics
    }

    pub fn contacts(&self) -> &BTreeSet<(usize, usize)> {
        &self.contacts
    }

    pub fn position(&self, i: usize) -> Option<Point> {
        match &self.source {
            Contacts::Mobility { movers, .. } => Some(movers[i].position_at(self.clock)),
            Contacts::Scripted => None,
        }
    }

    fn index_of(&self, eid: &Eid) -> Option<usize> {
        self.nodes.iter().position(|n| &n.eid == eid)
    }

    fn index_of_str(&self, eid: &str) -> Option<usize> {
        self.nodes.iter().position(|n| n.eid.as_str() == eid)
    }

    fn trace(&mut self, line: std::fmt::Arguments<'_>) -> Result<(), SimError> {
        if let Some(out) = self.trace.as_mut() {
            writeln!(out, "{:.6} {}", self.clock, line)?;
        }
        Ok(())
    }

    pub fn summary(&self) -> RunSummary {
        self.metrics.summary(self.echo.clone())
    }

    /// Runs every event up to the configured duration.
    pub fn run(mut self) -> Result<RunSummary, SimError> {
        self.run_until(self.duration)?;
        if let Some(out) = self.trace.as_mut() {
            out.flush()?;
        }
        Ok(self.summary())
    }

    /// Processes events with time at most `until`, leaving later ones queued.
    pub fn run_until(&mut self, until: Seconds) -> Result<(), SimError> {
        let until = until.min(self.duration);
        while self.step_until(until)?.is_some() {}
        Ok(())
    }

    /// Processes the next event if it falls within the run, returning it.
    pub fn step(&mut self) -> Result<Option<Event>, SimError> {
        self.step_until(self.duration)
    }

    fn step_until(&mut self, until: Seconds) -> Result<Option<Event>, SimError> {
        let Some(ev) = self.queue.pop() else {
            return Ok(None);
        };
        if ev.time > until {
            self.queue.push(ev.time, ev.kind);
            return Ok(None);
        }
        self.clock = ev.time;
        self.dispatch(ev.kind.clone())?;
        self.start_transfers()?;
        if cfg!(debug_assertions) {
            self.check_invariants()?;
        }
        Ok(Some(ev))
    }

    /// Transfers currently on the air.
    pub fn in_flight(&self) -> impl Iterator<Item = TransferView<'_>> {
        self.in_flight.values().map(|f| TransferView {
            sender: f.sender,
            receiver: f.receiver,
            token: f.token,
            bundle: &f.bundle,
        })
    }

    fn dispatch(&mut self, kind: EventKind) -> Result<(), SimError> {
        match kind {
            EventKind::Tick => self.on_tick(),
            EventKind::ContactUp(a, b) => self.on_contact_up(a, b),
            EventKind::ContactDown(a, b) => self.on_contact_down(a, b),
            EventKind::TransferDone { link, token } => self.on_transfer_done(link, token),
            EventKind::InterestGen(k) => self.on_interest_gen(k),
        }
    }

    fn on_tick(&mut self) -> Result<(), SimError> {
        let now = self.clock;
        if let Contacts::Mobility { model, movers } = &mut self.source {
            for m in movers.iter_mut() {
                m.advance(model, now, &mut self.rng);
            }
            let positions: Vec<Point> = movers.iter().map(|m| m.position_at(now)).collect();
            let (ups, downs) = detect_contacts(&positions, &self.contacts, self.link.range_m);
            for (a, b) in downs {
                self.queue.push(now, EventKind::ContactDown(a, b));
            }
            for (a, b) in ups {
                self.queue.push(now, EventKind::ContactUp(a, b));
            }
        }
        for node in &mut self.nodes {
            node.expire_state(now);
        }
        self.ticks_done += 1;
        let next = self.ticks_done as f64 * self.tick;
        if next <= self.duration {
            self.queue.push(next, EventKind::Tick);
        }
        Ok(())
    }

    fn on_contact_up(&mut self, a: usize, b: usize) -> Result<(), SimError> {
        if self.contacts.insert(pair(a, b)) {
            self.dirty.extend([a, b]);
            let (ea, eb) = (self.nodes[a].eid.clone(), self.nodes[b].eid.clone());
            self.trace(format_args!("up {ea} {eb}"))?;
        }
        Ok(())
    }

    fn on_contact_down(&mut self, a: usize, b: usize) -> Result<(), SimError> {
        let link = pair(a, b);
        if !self.contacts.remove(&link) {
            return Ok(());
        }
        let (ea, eb) = (self.nodes[a].eid.clone(), self.nodes[b].eid.clone());
        self.trace(format_args!("down {ea} {eb}"))?;
        if let Some(f) = self.in_flight.remove(&link) {
            self.nodes[f.sender].buffer.unlock(&f.bundle.id);
            self.radio_busy[f.sender] = false;
            self.radio_busy[f.receiver] = false;
            self.metrics.aborted += 1;
            let (s, r) = (
                self.nodes[f.sender].eid.clone(),
                self.nodes[f.receiver].eid.clone(),
            );
            self.trace(format_args!("abort {s} {r} {}", f.bundle.id))?;
        }
        self.dirty.extend([a, b]);
        Ok(())
    }

    fn on_transfer_done(&mut self, link: (usize, usize), token: u64) -> Result<(), SimError> {
        match self.in_flight.get(&link) {
            Some(f) if f.token == token => {}
            _ => return Ok(()),
        }
        let f = self.in_flight.remove(&link).expect("checked");
        self.radio_busy[f.sender] = false;
        self.radio_busy[f.receiver] = false;
        self.dirty.extend([f.sender, f.receiver]);
        let now = self.clock;
        let (s_eid, r_eid) = (
            self.nodes[f.sender].eid.clone(),
            self.nodes[f.receiver].eid.clone(),
        );
        if f.bundle.is_expired(now) {
            self.nodes[f.sender].buffer.unlock(&f.bundle.id);
            self.metrics.aborted += 1;
            return self.trace(format_args!("expired {s_eid} {r_eid} {}", f.bundle.id));
        }
        let (sender, receiver) = two_mut(&mut self.nodes, f.sender, f.receiver);
        let rx: Reception = on_transfer_complete(
            self.router,
            sender,
            receiver,
            &f.bundle,
            f.mode,
            f.budget,
            now,
            &self.hosts,
            &mut self.rng,
        );
        if rx.accepted {
            self.metrics.transmitted(f.bundle.kind);
            if f.bundle.destination == r_eid {
                self.metrics.delivered(&f.bundle.id);
            }
            for id in &rx.created {
                self.metrics.created(id);
            }
            for s in &rx.satisfied {
                self.metrics.satisfied(s.latency);
            }
        }
        let reason = rx.drop_reason.map_or("-", |r| r.as_str());
        let stored = rx
            .stored
            .as_ref()
            .map_or_else(|| "-".to_string(), BundleId::to_string);
        self.trace(format_args!(
            "recv {s_eid} {r_eid} {} {} {reason} stored={stored} satisfied={} {}",
            f.mode.as_str(),
            rx.verdict,
            rx.satisfied.len(),
            f.bundle.encode_inline()
        ))
    }

    fn on_interest_gen(&mut self, k: usize) -> Result<(), SimError> {
        let now = self.clock;
        let (node, name, target, nonce) = match &self.workload {
            Workload::Generated {
                requests_for,
                catalog,
                targets,
            } => {
                let ladder = &requests_for[&k];
                let item = ladder.sample(&mut self.rng);
                let t = targets[self.rng.random_range(0..targets.len())];
                let nonce = Nonce(self.rng.random());
                (
                    k,
                    catalog.names[item].clone(),
                    self.nodes[t].eid.clone(),
                    nonce,
                )
            }
            Workload::Scripted(reqs) => {
                let r = &reqs[k];
                (r.node, r.name.clone(), r.target.clone(), r.nonce)
            }
        };
        self.metrics.issued();
        let origin = self.nodes[node].originate_interest(
            name.clone(),
            target.clone(),
            now,
            self.ttl,
            nonce,
            self.router,
        );
        let eid = self.nodes[node].eid.clone();
        let outcome = match origin {
            Ok(Origination::LocalHit(s)) => {
                self.metrics.satisfied(s.latency);
                "hit".to_string()
            }
            Ok(Origination::Aggregated) => "aggregated".to_string(),
            Ok(Origination::Issued { bundle, admitted }) => {
                self.metrics.created(&bundle.id);
                self.dirty.insert(node);
                if admitted {
                    format!("issued {}", bundle.id)
                } else {
                    format!("refused {}", bundle.id)
                }
            }
            Err(e) => format!("error {}", e.to_string().replace(' ', "_")),
        };
        self.trace(format_args!("gen {eid} {name} {target} {nonce} {outcome}"))
    }

    /// Starts a transfer on every idle contact that touches a node whose
    /// state changed and has something to send.
    fn start_transfers(&mut self) -> Result<(), SimError> {
        if self.dirty.is_empty() {
            return Ok(());
        }
        let dirty = std::mem::take(&mut self.dirty);
        let links: Vec<(usize, usize)> = self
            .contacts
            .iter()
            .copied()
            .filter(|(a, b)| dirty.contains(a) || dirty.contains(b))
            .collect();
        for (a, b) in links {
            if self.radio_busy[a] || self.radio_busy[b] || self.in_flight.contains_key(&(a, b)) {
                continue;
            }
            let now = self.clock;
            let pick = |s: usize, r: usize, nodes: &[NodeState]| {
                next_transfer(self.router, &nodes[s], &nodes[r], now).map(|t| {
                    let b = nodes[s].buffer.get(&t.id).expect("selected from buffer");
                    ((b.creation_time, t.id.clone()), s, r, t)
                })
            };
            let best = match (pick(a, b, &self.nodes), pick(b, a, &self.nodes)) {
                (Some(x), Some(y)) => {
                    if y.0
                         .0
                        .total_cmp(&x.0 .0)
                        .then_with(|| y.0 .1.cmp(&x.0 .1))
                        .is_lt()
                    {
                        Some(y)
                    } else {
                        Some(x)
                    }
                }
                (x, y) => x.or(y),
            };
            let Some((_, s, r, t)) = best else {
                continue;
            };
            let bundle = self.nodes[s].buffer.get(&t.id).expect("present").clone();
            debug_assert!(!bundle.is_expired(now));
            self.nodes[s].buffer.lock(&t.id);
            self.radio_busy[s] = true;
            self.radio_busy[r] = true;
            let token = self.next_token;
            self.next_token += 1;
            let done = now + self.link.transfer_time(bundle.size);
            let (se, re) = (self.nodes[s].eid.clone(), self.nodes[r].eid.clone());
            let budget = t.budget.map_or_else(|| "-".to_string(), |b| b.to_string());
            self.trace(format_args!(
                "start {se} {re} {} {} {budget} {done:.6}",
                bundle.id,
                t.mode.as_str()
            ))?;
            self.in_flight.insert(
                (a, b),
                InFlight {
                    sender: s,
                    receiver: r,
                    bundle,
                    mode: t.mode,
                    budget: t.budget,
                    token,
                },
            );
            self.queue.push(
                done,
                EventKind::TransferDone {
                    link: (a, b),
                    token,
                },
            );
        }
        Ok(())
    }

    fn check_invariants(&self) -> Result<(), SimError> {
        let fail = |msg: String| {
            Err(SimError::Invariant {
                time: self.clock,
                msg,
            })
        };
        for n in &self.nodes {
            if n.buffer.used() > n.buffer.capacity() {
                return fail(format!("{} buffer over capacity", n.eid));
            }
            if n.opp.used() > n.opp.capacity() {
                return fail(format!("{} cache over capacity", n.eid));
            }
        }
        let mut busy = vec![false; self.nodes.len()];
        for (link, f) in &self.in_flight {
            if !self.contacts.contains(link) {
                return fail(format!("transfer on closed link {link:?}"));
            }
            for x in [f.sender, f.receiver] {
                if busy[x] {
                    return fail(format!("{} in two transfers", self.nodes[x].eid));
                }
                busy[x] = true;
            }
        }
        Ok(())
    }
}

fn two_mut<T>(v: &mut [T], i: usize, j: usize) -> (&mut T, &mut T) {
    assert_ne!(i, j);
    if i < j {
        let (lo, hi) = v.split_at_mut(j);
        (&mut lo[i], &mut hi[0])
    } else {
        let (lo, hi) = v.split_at_mut(i);
        (&mut hi[0], &mut lo[j])
    }
}

type Pairs = Vec<(usize, usize)>;

/// Pairs that came into range and pairs that left it, given the current
/// positions and the set of open contacts. In range means distance at most
/// `range`.
pub fn detect_contacts(
    positions: &[Point],
    open: &BTreeSet<(usize, usize)>,
    range: f64,
) -> (Pairs, Pairs) {
    let mut ups = Vec::new();
    let mut downs = Vec::new();
    let r2 = range * range;
    for a in 0..positions.len() {
        for b in a + 1..positions.len() {
            let (dx, dy) = (
                positions[a].x - positions[b].x,
                positions[a].y - positions[b].y,
            );
            let close = dx * dx + dy * dy <= r2;
            match (close, open.contains(&(a, b))) {
                (true, false) => ups.push((a, b)),
                (false, true) => downs.push((a, b)),
                _ => {}
            }
        }
    }
    (ups, downs)
}

/// Runs a configured scenario to completion.
pub fn run(cfg: &ScenarioConfig, seed: u64) -> Result<RunSummary, SimError> {
    World::from_config(cfg, seed)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contact_threshold_is_inclusive() {
        let none = BTreeSet::new();
        let p = |x| vec![Point::new(0.0, 0.0), Point::new(x, 0.0)];
        assert_eq!(detect_contacts(&p(99.0), &none, 100.0).0, [(0, 1)]);
        assert_eq!(detect_contacts(&p(100.0), &none, 100.0).0, [(0, 1)]);
        assert!(detect_contacts(&p(101.0), &none, 100.0).0.is_empty());
        let open: BTreeSet<_> = [(0, 1)].into();
        assert_eq!(detect_contacts(&p(101.0), &open, 100.0).1, [(0, 1)]);
    }

    #[test]
    fn three_close_nodes_make_three_contacts() {
        let pts = vec![
            Point::new(0.0, 0.0),
            Point::new(10.0, 0.0),
            Point::new(0.0, 10.0),
        ];
        let (ups, _) = detect_contacts(&pts, &BTreeSet::new(), 100.0);
        assert_eq!(ups, [(0, 1), (0, 2), (1, 2)]);
    }

    #[test]
    fn transfer_times() {
        let l = LinkModel {
            range_m: 100.0,
            rate_bps: 2_500_000.0,
        };
        assert_eq!(l.transfer_time(1_000_000), 3.2);
        assert!((l.transfer_time(1_000) - 0.0032).abs() < 1e-15);
    }

    #[test]
    fn zero_duration_run_is_empty() {
        let cfg = ScenarioConfig {
            duration_s: 0.0,
            ..ScenarioConfig::default()
        };
        let s = run(&cfg, 1).unwrap();
        assert_eq!(s.issued, 0);
        assert!(s.finalize().response_ratio.is_nan());
    }
}
