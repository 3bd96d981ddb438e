//! Per-node content-centric engine.
//!
//! A [`NodeState`] owns the node's content store, opportunistic cache,
//! pending requester table, processed-message list and bundle buffer. The
//! interest and response handlers decide what happens to a bundle received
//! from a peer; the caller (the simulation loop) applies the buffer side
//! effects through [`NodeState::receive`].

pub mod buffer;
pub mod cache;
pub mod prit;
pub mod processed;

use std::collections::{BTreeMap, HashSet};

use rand::Rng;

use crate::bundle::{
    make_interest, make_response, Bundle, BundleError, BundleId, BundleKind, ContentName, Eid,
    Nonce, Seconds,
};
use crate::routing::{RouterKind, RouterState};

pub use buffer::{Admission, BundleBuffer};
pub use cache::{ContentStore, OppCache};
pub use prit::{PritEntry, PritTable};
pub use processed::{ProcessedList, DEFAULT_PROCESSED_CAPACITY};

#[derive(Debug, Clone, PartialEq)]
pub struct NodeConfig {
    pub cidor_enabled: bool,
    pub buffer_bytes: u64,
    pub opp_cache_bytes: u64,
    /// How long processed keys are remembered; the largest configured TTL.
    pub processed_retention: Seconds,
    pub processed_capacity: usize,
}

impl Default for NodeConfig {
    fn default() -> Self {
        NodeConfig {
            cidor_enabled: true,
            buffer_bytes: 64_000_000,
            opp_cache_bytes: 16_000_000,
            processed_retention: 500.0,
            processed_capacity: DEFAULT_PROCESSED_CAPACITY,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DropReason {
    Expired,
    DuplicateNonce,
    Aggregated,
    BufferFull,
}

impl DropReason {
    pub fn as_str(self) -> &'static str {
        match self {
            DropReason::Expired => "expired",
            DropReason::DuplicateNonce => "duplicate-nonce",
            DropReason::Aggregated => "aggregated",
            DropReason::BufferFull => "buffer-full",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum InterestAction {
    /// Content found locally; send this response back to the requester.
    Reply(Bundle),
    /// Keep the (possibly rewritten) interest for routing.
    Buffer(Bundle),
    Drop(DropReason),
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResponseAction {
    DeliverAndDrop,
    DeliverAndForward(Bundle),
    Forward(Bundle),
    Drop(DropReason),
}

/// A request issued by this node's application that has been answered.
#[derive(Debug, Clone, PartialEq)]
pub struct SatisfiedRequest {
    pub requester: Eid,
    pub name: ContentName,
    pub nonce: Nonce,
    pub issued_at: Seconds,
    pub latency: Seconds,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResponseOutcome {
    pub action: ResponseAction,
    /// Whether this delivery was the first application notification for the
    /// response's (name, nonce).
    pub notified: bool,
    pub satisfied: Vec<SatisfiedRequest>,
}

#[derive(Debug, Clone, PartialEq)]
struct PendingRequest {
    nonce: Nonce,
    issued_at: Seconds,
    valid_until: Seconds,
}

/// Result of the application issuing a request for a content name.
#[derive(Debug, Clone, PartialEq)]
pub enum Origination {
    /// Content was already held locally.
    LocalHit(SatisfiedRequest),
    /// An interest for the same name from this node is still in flight; the
    /// request waits for its response.
    Aggregated,
    /// A new interest was created. `admitted` is false when the buffer
    /// refused it.
    Issued { bundle: Bundle, admitted: bool },
}

/// What happened to a bundle handed to [`NodeState::receive`].
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Reception {
    /// False when the buffer could not make room; no state changed.
    pub accepted: bool,
    /// Handler decision, for traces.
    pub verdict: &'static str,
    pub drop_reason: Option<DropReason>,
    /// Bundles newly created by this node (responses, reissued interests).
    pub created: Vec<BundleId>,
    /// Id of the bundle now stored in the buffer, if any.
    pub stored: Option<BundleId>,
    pub evicted: Vec<Bundle>,
    pub notified: bool,
    pub satisfied: Vec<SatisfiedRequest>,
}

#[derive(Debug, Clone)]
pub struct NodeState {
    pub eid: Eid,
    pub cidor_enabled: bool,
    pub prit: PritTable,
    pub cs: ContentStore,
    pub opp: OppCache,
    pub processed: ProcessedList,
    pub buffer: BundleBuffer,
    pub router: RouterState,
    next_seq: u64,
    notified: HashSet<(ContentName, Nonce)>,
    requests: BTreeMap<ContentName, Vec<PendingRequest>>,
}

impl NodeState {
    pub fn new(eid: Eid, config: &NodeConfig) -> Self {
        NodeState {
            eid,
            cidor_enabled: config.cidor_enabled,
            prit: PritTable::new(),
            cs: ContentStore::new(),
            opp: OppCache::new(config.opp_cache_bytes),
            processed: ProcessedList::new(config.processed_retention, config.processed_capacity),
            buffer: BundleBuffer::new(config.buffer_bytes),
            router: RouterState::default(),
            next_seq: 0,
            notified: HashSet::new(),
            requests: BTreeMap::new(),
        }
    }

    /// Allocates the next bundle id originating at this node.
    pub fn next_id(&mut self) -> BundleId {
        let id = BundleId::new(self.eid.clone(), self.next_seq);
        self.next_seq += 1;
        id
    }

    /// Content size if `name` is held in the opportunistic cache or the
    /// content store. A cache hit refreshes recency.
    pub fn lookup_content(&mut self, name: &ContentName) -> Option<u64> {
        if !self.cidor_enabled {
            return self.cs.get(name);
        }
        self.opp.get(name).or_else(|| self.cs.get(name))
    }

    pub fn pending_requests(&self) -> usize {
        self.requests.values().map(Vec::len).sum()
    }

    /// The node's application asks for `name`. The interest, if one is
    /// created, is addressed to `target` and stored in the buffer.
    pub fn originate_interest(
        &mut self,
        name: ContentName,
        target: Eid,
        now: Seconds,
        ttl: Seconds,
        nonce: Nonce,
        router: RouterKind,
    ) -> Result<Origination, BundleError> {
        if let Some(_size) = self.lookup_content(&name) {
            return Ok(Origination::LocalHit(SatisfiedRequest {
                requester: self.eid.clone(),
                name,
                nonce,
                issued_at: now,
                latency: 0.0,
            }));
        }
        let request = PendingRequest {
            nonce,
            issued_at: now,
            // A response may be created as late as the interest's expiry and
            // then lives for another TTL.
            valid_until: now + 2.0 * ttl,
        };
        if self.cidor_enabled && self.prit.has_live_forward(&name, now) {
            self.requests.entry(name).or_default().push(request);
            return Ok(Origination::Aggregated);
        }
        let id = BundleId::new(self.eid.clone(), self.next_seq);
        let mut bundle = make_interest(id, name.clone(), target, now, ttl, nonce)?;
        bundle.copy_budget = router.initial_budget();
        self.next_seq += 1;
        self.requests.entry(name.clone()).or_default().push(request);
        if self.cidor_enabled {
            self.prit
                .add_requester(&name, &self.eid.clone(), bundle.expires_at());
            self.processed.insert(bundle.dedup_key(), now);
        }
        self.router.mark_seen(&bundle.id);
        let admitted = self.buffer.admit(bundle.clone()).is_accepted();
        if admitted && self.cidor_enabled {
            self.prit.mark_forwarded(&name, bundle.expires_at());
        }
        Ok(Origination::Issued { bundle, admitted })
    }

    /// Interest handling: answer from local content, suppress duplicates,
    /// aggregate requests already being forwarded, otherwise record the
    /// requester and keep the interest for routing.
    pub fn handle_interest<R: Rng + ?Sized>(
        &mut self,
        mut b: Bundle,
        now: Seconds,
        hosts: &[Eid],
        rng: &mut R,
    ) -> InterestAction {
        debug_assert_eq!(b.kind, BundleKind::Interest);
        if b.is_expired(now) {
            return InterestAction::Drop(DropReason::Expired);
        }
        if !self.cidor_enabled {
            return InterestAction::Buffer(b);
        }
        if let Some(size) = self.lookup_content(&b.name) {
            let id = self.next_id();
            let response = make_response(&b, id, size, now).expect("interest checked unexpired");
            return InterestAction::Reply(response);
        }
        let key = b.dedup_key();
        if !self.processed.insert(key, now) {
            return InterestAction::Drop(DropReason::DuplicateNonce);
        }
        let fresh_forward = !self.prit.has_live_forward(&b.name, now);
        self.prit.add_requester(&b.name, &b.source, b.expires_at());
        if !fresh_forward {
            return InterestAction::Drop(DropReason::Aggregated);
        }
        if b.destination == self.eid {
            if let Some(next) = self.pick_new_host(&b, hosts, rng) {
                b.visited.push(std::mem::replace(&mut b.destination, next));
                b.id = self.next_id();
            }
        }
        InterestAction::Buffer(b)
    }

    /// Uniform choice among hosts other than this node, the requester and
    /// destinations the interest already visited. Falls back to ignoring the
    /// visited list once every host has been tried.
    fn pick_new_host<R: Rng + ?Sized>(
        &self,
        b: &Bundle,
        hosts: &[Eid],
        rng: &mut R,
    ) -> Option<Eid> {
        let eligible = |e: &&Eid, skip_visited: bool| {
            **e != self.eid && **e != b.source && !(skip_visited && b.visited.contains(e))
        };
        let mut candidates: Vec<&Eid> = hosts.iter().filter(|e| eligible(e, true)).collect();
        if candidates.is_empty() {
            candidates = hosts.iter().filter(|e| eligible(e, false)).collect();
        }
        if candidates.is_empty() {
            return None;
        }
        Some(candidates[rng.random_range(0..candidates.len())].clone())
    }

    /// Response handling: deliver to the application when this node is a
    /// target, merge pending requesters into the response, cache the
    /// content and forward.
    pub fn handle_response(&mut self, mut b: Bundle, now: Seconds) -> ResponseOutcome {
        debug_assert_eq!(b.kind, BundleKind::Response);
        let outcome = |action, notified, satisfied| ResponseOutcome {
            action,
            notified,
            satisfied,
        };
        if b.is_expired(now) {
            return outcome(ResponseAction::Drop(DropReason::Expired), false, Vec::new());
        }
        let is_dest = b.destination == self.eid;
        if !self.cidor_enabled {
            if is_dest {
                let (notified, satisfied) = self.notify(&b, now);
                return outcome(ResponseAction::DeliverAndDrop, notified, satisfied);
            }
            return outcome(ResponseAction::Forward(b), false, Vec::new());
        }

        let in_block = b.prit_block.contains(&self.eid);
        let key = b.dedup_key();
        let seen_before = !self.processed.insert(key, now);
        if seen_before && !is_dest && !in_block {
            return outcome(
                ResponseAction::Drop(DropReason::DuplicateNonce),
                false,
                Vec::new(),
            );
        }

        let mut pending = self.prit.take(&b.name, now);
        let self_pending = pending.remove(&self.eid);
        let (notified, satisfied) = if is_dest || in_block || self_pending {
            self.notify(&b, now)
        } else {
            (false, Vec::new())
        };
        let delivered = is_dest || in_block || self_pending;
        for r in pending {
            if r != b.destination && r != b.source {
                b.prit_block.insert(r);
            }
        }
        b.prit_block.remove(&self.eid);

        if is_dest {
            let Some(next) = b.prit_block.pop_first() else {
                return outcome(ResponseAction::DeliverAndDrop, notified, satisfied);
            };
            b.destination = next;
            b.id = self.next_id();
        }
        self.opp.insert(b.name.clone(), b.size);
        let action = if delivered {
            ResponseAction::DeliverAndForward(b)
        } else {
            ResponseAction::Forward(b)
        };
        outcome(action, notified, satisfied)
    }

    /// Hands content to the application. Returns whether this was the first
    /// notification for the (name, nonce) pair and the requests it answers.
    fn notify(&mut self, b: &Bundle, now: Seconds) -> (bool, Vec<SatisfiedRequest>) {
        let first = self.notified.insert((b.name.clone(), b.nonce));
        let satisfied = self
            .requests
            .remove(&b.name)
            .unwrap_or_default()
            .into_iter()
            .filter(|r| r.valid_until >= now)
            .map(|r| SatisfiedRequest {
                requester: self.eid.clone(),
                name: b.name.clone(),
                nonce: r.nonce,
                issued_at: r.issued_at,
                latency: now - r.issued_at,
            })
            .collect();
        (first, satisfied)
    }

    /// Runs the handler for a bundle received from a peer and stores
    /// whatever it decides to keep. Nothing changes when the buffer cannot
    /// make room for the incoming bundle.
    pub fn receive<R: Rng + ?Sized>(
        &mut self,
        b: Bundle,
        now: Seconds,
        hosts: &[Eid],
        router: RouterKind,
        rng: &mut R,
    ) -> Reception {
        if !b.is_expired(now) && !self.buffer.can_admit(b.size) {
            return Reception {
                accepted: false,
                verdict: "refused",
                drop_reason: Some(DropReason::BufferFull),
                ..Reception::default()
            };
        }
        self.router.mark_seen(&b.id);
        let incoming_id = b.id.clone();
        let mut rx = Reception {
            accepted: true,
            ..Reception::default()
        };
        let keep = match b.kind {
            BundleKind::Interest => match self.handle_interest(b, now, hosts, rng) {
                InterestAction::Reply(mut resp) => {
                    resp.copy_budget = router.initial_budget();
                    rx.verdict = "reply";
                    rx.created.push(resp.id.clone());
                    Some(resp)
                }
                InterestAction::Buffer(b) => {
                    rx.verdict = "buffer";
                    if b.id != incoming_id {
                        rx.created.push(b.id.clone());
                    }
                    Some(b)
                }
                InterestAction::Drop(reason) => {
                    rx.verdict = "drop";
                    rx.drop_reason = Some(reason);
                    None
                }
            },
            BundleKind::Response => {
                let out = self.handle_response(b, now);
                rx.notified = out.notified;
                rx.satisfied = out.satisfied;
                match out.action {
                    ResponseAction::DeliverAndDrop => {
                        rx.verdict = "deliver";
                        None
                    }
                    ResponseAction::DeliverAndForward(b) => {
                        rx.verdict = "deliver-forward";
                        if b.id != incoming_id {
                            rx.created.push(b.id.clone());
                        }
                        Some(b)
                    }
                    ResponseAction::Forward(b) => {
                        rx.verdict = "forward";
                        Some(b)
                    }
                    ResponseAction::Drop(reason) => {
                        rx.verdict = "drop";
                        rx.drop_reason = Some(reason);
                        None
                    }
                }
            }
        };
        if let Some(b) = keep {
            self.router.mark_seen(&b.id);
            let is_interest = b.kind == BundleKind::Interest;
            let (name, expiry, id) = (b.name.clone(), b.expires_at(), b.id.clone());
            match self.buffer.admit(b) {
                Admission::Accepted { evicted } => {
                    if is_interest && self.cidor_enabled {
                        self.prit.mark_forwarded(&name, expiry);
                    }
                    rx.stored = Some(id);
                    rx.evicted = evicted;
                }
                Admission::Rejected => {
                    rx.drop_reason = Some(DropReason::BufferFull);
                }
            }
        }
        rx
    }

    /// Removes expired bundles, PRIT requesters, processed keys and stale
    /// application requests. Returns the number of entries removed.
    pub fn expire_state(&mut self, now: Seconds) -> usize {
        let mut removed = self.buffer.expire(now).len();
        removed += self.prit.expire(now);
        removed += self.processed.expire(now);
        self.requests.retain(|_, reqs| {
            let before = reqs.len();
            reqs.retain(|r| r.valid_until >= now);
            removed += before - reqs.len();
            !reqs.is_empty()
        });
        removed
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::tests::{eid, name};
    use crate::bundle::{dedup_key, make_interest};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn node(e: &str) -> NodeState {
        NodeState::new(eid(e), &NodeConfig::default())
    }

    fn interest(requester: &str, seq: u64, n: &str, target: &str, nonce: u64, now: f64) -> Bundle {
        make_interest(
            BundleId::new(eid(requester), seq),
            name(n),
            eid(target),
            now,
            500.0,
            Nonce(nonce),
        )
        .unwrap()
    }

    fn hosts(names: &[&str]) -> Vec<Eid> {
        names.iter().map(|s| eid(s)).collect()
    }

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(7)
    }

    #[test]
    fn provider_replies_to_interest_source() {
        let mut p = node("P");
        p.cs.insert(name("/x"), 700_000);
        let i = interest("R", 0, "/x", "Z", 1, 0.0);
        match p.handle_interest(i, 10.0, &hosts(&["P", "R", "Z"]), &mut rng()) {
            InterestAction::Reply(resp) => {
                assert_eq!(resp.destination, eid("R"));
                assert_eq!(resp.source, eid("P"));
                assert_eq!(resp.size, 700_000);
                assert_eq!(resp.kind, BundleKind::Response);
            }
            other => panic!("expected reply, got {other:?}"),
        }
        assert!(p.prit.is_empty());
    }

    #[test]
    fn cached_content_answers_interest() {
        let mut a = node("A");
        a.opp.insert(name("/x"), 5);
        let i = interest("R", 0, "/x", "Z", 1, 0.0);
        assert!(matches!(
            a.handle_interest(i, 1.0, &hosts(&["A", "R", "Z"]), &mut rng()),
            InterestAction::Reply(_)
        ));
    }

    #[test]
    fn similar_interests_from_other_requesters_are_aggregated() {
        let mut d = node("D");
        let h = hosts(&["D", "R1", "R2", "R3", "Z"]);
        let mut r = rng();
        let first = d.receive(
            interest("R1", 0, "/x", "Z", 1, 0.0),
            1.0,
            &h,
            RouterKind::Epidemic,
            &mut r,
        );
        assert_eq!(first.verdict, "buffer");
        for (req, nonce) in [("R2", 2), ("R3", 3)] {
            let rx = d.receive(
                interest(req, 0, "/x", "Z", nonce, 0.0),
                2.0,
                &h,
                RouterKind::Epidemic,
                &mut r,
            );
            assert_eq!(rx.drop_reason, Some(DropReason::Aggregated));
        }
        let entry = d.prit.get(&name("/x")).unwrap();
        assert_eq!(
            entry.requesters().cloned().collect::<Vec<_>>(),
            hosts(&["R1", "R2", "R3"])
        );
        assert_eq!(d.buffer.interests_for(&name("/x")), 1);
    }

    #[test]
    fn same_nonce_via_other_relay_is_dropped() {
        let mut d = node("D");
        let h = hosts(&["D", "R", "Z"]);
        let mut r = rng();
        let a_copy = interest("R", 0, "/x", "Z", 9, 0.0);
        let mut c_copy = a_copy.clone();
        c_copy.id = BundleId::new(eid("C"), 4);
        assert_eq!(
            d.receive(a_copy, 1.0, &h, RouterKind::Epidemic, &mut r)
                .verdict,
            "buffer"
        );
        let rx = d.receive(c_copy, 2.0, &h, RouterKind::Epidemic, &mut r);
        assert_eq!(rx.drop_reason, Some(DropReason::DuplicateNonce));
        assert_eq!(d.buffer.len(), 1);
    }

    #[test]
    fn interest_at_its_destination_is_retargeted() {
        let mut z = node("Z");
        let h = hosts(&["A", "B", "R", "Z"]);
        let i = interest("R", 0, "/x", "Z", 1, 0.0);
        let InterestAction::Buffer(b) = z.handle_interest(i.clone(), 5.0, &h, &mut rng()) else {
            panic!("expected buffer");
        };
        assert!(b.destination == eid("A") || b.destination == eid("B"));
        assert_eq!(b.visited, hosts(&["Z"]));
        assert_eq!(b.id.origin, eid("Z"));
        assert_eq!(b.source, eid("R"));
        assert_eq!(b.nonce, i.nonce);

        let mut counts = BTreeMap::new();
        let mut r = ChaCha8Rng::seed_from_u64(1);
        for k in 0..2000 {
            let mut z = node("Z");
            let i = interest("R", k, "/x", "Z", k, 0.0);
            if let InterestAction::Buffer(b) = z.handle_interest(i, 1.0, &h, &mut r) {
                *counts.entry(b.destination).or_insert(0) += 1;
            }
        }
        assert_eq!(counts.len(), 2);
        for c in counts.values() {
            assert!((900..1100).contains(c), "{counts:?}");
        }
    }

    #[test]
    fn expired_interest_is_dropped() {
        let mut d = node("D");
        let i = interest("R", 0, "/x", "Z", 1, 0.0);
        assert_eq!(
            d.handle_interest(i, 501.0, &hosts(&["D"]), &mut rng()),
            InterestAction::Drop(DropReason::Expired)
        );
    }

    #[test]
    fn vanilla_node_relays_untouched() {
        let cfg = NodeConfig {
            cidor_enabled: false,
            ..NodeConfig::default()
        };
        let mut v = NodeState::new(eid("V"), &cfg);
        v.opp.insert(name("/x"), 10);
        let i = interest("R", 0, "/x", "V", 1, 0.0);
        assert_eq!(
            v.handle_interest(i.clone(), 1.0, &hosts(&["V", "R", "Q"]), &mut rng()),
            InterestAction::Buffer(i.clone())
        );
        let mut p = node("P");
        p.cs.insert(name("/x"), 10);
        let InterestAction::Reply(mut resp) = p.handle_interest(i, 1.0, &hosts(&["P"]), &mut rng())
        else {
            panic!()
        };
        resp.prit_block.insert(eid("Q"));
        let out = v.handle_response(resp.clone(), 2.0);
        assert_eq!(out.action, ResponseAction::Forward(resp));
        assert!(v.prit.is_empty() && v.processed.is_empty() && v.opp.len() == 1);
    }

    fn response_for(requester: &str, n: &str, nonce: u64) -> Bundle {
        let i = interest(requester, 0, n, "Z", nonce, 0.0);
        make_response(&i, BundleId::new(eid("P"), 0), 1000, 10.0).unwrap()
    }

    #[test]
    fn relay_appends_pending_requesters() {
        let mut a = node("A");
        let h = hosts(&["A", "R", "S", "Z"]);
        a.receive(
            interest("R", 0, "/x", "Z", 5, 0.0),
            1.0,
            &h,
            RouterKind::Epidemic,
            &mut rng(),
        );
        let out = a.handle_response(response_for("S", "/x", 9), 20.0);
        let ResponseAction::Forward(b) = out.action else {
            panic!("expected forward, got {:?}", out.action)
        };
        assert_eq!(
            b.prit_block.iter().cloned().collect::<Vec<_>>(),
            hosts(&["R"])
        );
        assert_eq!(b.destination, eid("S"));
        assert!(a.prit.get(&name("/x")).is_none());
        assert!(a.opp.contains(&name("/x")));
    }

    #[test]
    fn plain_relay_caches_and_forwards_unchanged() {
        let mut a = node("A");
        let resp = response_for("S", "/x", 9);
        let out = a.handle_response(resp.clone(), 20.0);
        assert_eq!(out.action, ResponseAction::Forward(resp));
        assert!(a.opp.contains(&name("/x")));
        // A second copy of the same response is suppressed.
        let out = a.handle_response(response_for("S", "/x", 9), 21.0);
        assert_eq!(out.action, ResponseAction::Drop(DropReason::DuplicateNonce));
    }

    #[test]
    fn destination_with_empty_block_delivers_once() {
        let mut s = node("S");
        let h = hosts(&["S", "Z"]);
        let Origination::Issued { bundle, admitted } = s
            .originate_interest(
                name("/x"),
                eid("Z"),
                0.0,
                500.0,
                Nonce(9),
                RouterKind::Epidemic,
            )
            .unwrap()
        else {
            panic!()
        };
        assert!(admitted);
        let mut resp = response_for("S", "/x", 9);
        resp.nonce = bundle.nonce;
        let rx = s.receive(resp.clone(), 20.0, &h, RouterKind::Epidemic, &mut rng());
        assert_eq!(rx.verdict, "deliver");
        assert!(rx.notified);
        assert_eq!(rx.satisfied.len(), 1);
        assert_eq!(rx.satisfied[0].latency, 20.0);
        assert!(rx.stored.is_none());
        let out = s.handle_response(resp, 25.0);
        assert!(!out.notified);
        assert!(out.satisfied.is_empty());
    }

    #[test]
    fn destination_promotes_block_member() {
        let mut s = node("S");
        let mut resp = response_for("S", "/x", 9);
        resp.prit_block.insert(eid("Q"));
        resp.prit_block.insert(eid("R"));
        let out = s.handle_response(resp, 20.0);
        let ResponseAction::DeliverAndForward(b) = out.action else {
            panic!()
        };
        assert_eq!(b.destination, eid("Q"));
        assert_eq!(
            b.prit_block.iter().cloned().collect::<Vec<_>>(),
            hosts(&["R"])
        );
        assert_eq!(b.id.origin, eid("S"));
    }

    #[test]
    fn block_member_removes_itself_and_forwards() {
        let mut r = node("R");
        let mut resp = response_for("S", "/x", 9);
        resp.prit_block.insert(eid("R"));
        resp.prit_block.insert(eid("Q"));
        let out = r.handle_response(resp.clone(), 20.0);
        assert!(out.notified);
        let ResponseAction::DeliverAndForward(b) = out.action else {
            panic!()
        };
        assert_eq!(b.id, resp.id);
        assert_eq!(
            b.prit_block.iter().cloned().collect::<Vec<_>>(),
            hosts(&["Q"])
        );
    }

    #[test]
    fn requester_aggregates_its_own_repeat_requests() {
        let mut s = node("S");
        let first = s
            .originate_interest(
                name("/x"),
                eid("Z"),
                0.0,
                500.0,
                Nonce(1),
                RouterKind::Epidemic,
            )
            .unwrap();
        assert!(matches!(first, Origination::Issued { .. }));
        let second = s
            .originate_interest(
                name("/x"),
                eid("Z"),
                100.0,
                500.0,
                Nonce(2),
                RouterKind::Epidemic,
            )
            .unwrap();
        assert_eq!(second, Origination::Aggregated);
        assert_eq!(s.pending_requests(), 2);
        let mut resp = response_for("S", "/x", 1);
        resp.destination = eid("S");
        let out = s.handle_response(resp, 150.0);
        assert_eq!(out.satisfied.len(), 2);
        assert_eq!(out.satisfied[1].latency, 50.0);
    }

    #[test]
    fn requester_on_path_is_served_by_transiting_response() {
        let mut r = node("R");
        r.originate_interest(
            name("/x"),
            eid("Z"),
            0.0,
            500.0,
            Nonce(1),
            RouterKind::Epidemic,
        )
        .unwrap();
        let out = r.handle_response(response_for("S", "/x", 77), 30.0);
        assert!(out.notified);
        assert_eq!(out.satisfied.len(), 1);
        let ResponseAction::DeliverAndForward(b) = out.action else {
            panic!()
        };
        assert!(b.prit_block.is_empty());
        assert_eq!(b.destination, eid("S"));
    }

    #[test]
    fn local_hit_satisfies_immediately() {
        let mut r = node("R");
        r.opp.insert(name("/x"), 10);
        let o = r
            .originate_interest(
                name("/x"),
                eid("Z"),
                5.0,
                500.0,
                Nonce(1),
                RouterKind::Epidemic,
            )
            .unwrap();
        assert!(matches!(o, Origination::LocalHit(s) if s.latency == 0.0));
        assert!(r.buffer.is_empty());
    }

    #[test]
    fn expire_state_counts_removed_entries() {
        let mut d = node("D");
        assert_eq!(d.expire_state(0.0), 0);
        let h = hosts(&["D", "R", "Z"]);
        d.receive(
            interest("R", 0, "/x", "Z", 1, 0.0),
            1.0,
            &h,
            RouterKind::Epidemic,
            &mut rng(),
        );
        assert_eq!(d.expire_state(500.0), 0);
        // bundle + PRIT requester; processed keys live for the retention window
        assert_eq!(d.expire_state(501.0), 2);
        assert_eq!(d.expire_state(502.0), 1);
        assert!(d.buffer.is_empty() && d.prit.is_empty() && d.processed.is_empty());
    }

    #[test]
    fn full_buffer_refuses_without_side_effects() {
        let cfg = NodeConfig {
            buffer_bytes: 500,
            ..NodeConfig::default()
        };
        let mut d = NodeState::new(eid("D"), &cfg);
        let i = interest("R", 0, "/x", "Z", 1, 0.0);
        let rx = d.receive(
            i.clone(),
            1.0,
            &hosts(&["D", "R", "Z"]),
            RouterKind::Epidemic,
            &mut rng(),
        );
        assert!(!rx.accepted);
        assert!(d.prit.is_empty());
        assert!(!d.processed.contains(&dedup_key(&i), 1.0));
        assert!(!d.router.has_seen(&i.id));
    }
}
