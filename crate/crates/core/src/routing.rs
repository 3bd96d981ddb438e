//! DTN routing strategies.
//!
//! A strategy only decides which buffered bundles go to a peer during a
//! contact and whether the sender keeps a copy. What the receiver does with
//! a bundle is the node engine's business, whatever the strategy.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use rand::Rng;

use crate::bundle::{Bundle, BundleId, BundleKind, Eid, Seconds};
use crate::node::{NodeState, Reception};

pub const DEFAULT_COPIES: u32 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RouterKind {
    Epidemic,
    SprayAndWait {
        copies: u32,
    },
    FirstContact,
    /// Copy-limited epidemic spreading of interests, spray-and-wait return of
    /// responses.
    EpPsw {
        copies: u32,
    },
}

impl RouterKind {
    pub fn name(&self) -> &'static str {
        match self {
            RouterKind::Epidemic => "epidemic",
            RouterKind::SprayAndWait { .. } => "snw",
            RouterKind::FirstContact => "firstcontact",
            RouterKind::EpPsw { .. } => "epsw",
        }
    }

    /// Copy budget stamped on bundles created under this strategy.
    pub fn initial_budget(&self) -> Option<u32> {
        match *self {
            RouterKind::Epidemic | RouterKind::FirstContact => None,
            RouterKind::SprayAndWait { copies } | RouterKind::EpPsw { copies } => {
                Some(copies.max(1))
            }
        }
    }

    /// Parses a config value, using `copies` for budgeted strategies.
    pub fn parse(name: &str, copies: u32) -> Option<RouterKind> {
        match name {
            "epidemic" => Some(RouterKind::Epidemic),
            "snw" => Some(RouterKind::SprayAndWait { copies }),
            "firstcontact" => Some(RouterKind::FirstContact),
            "epsw" => Some(RouterKind::EpPsw { copies }),
            _ => None,
        }
    }
}

impl fmt::Display for RouterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RouterKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        RouterKind::parse(s, DEFAULT_COPIES).ok_or_else(|| format!("unknown router {s:?}"))
    }
}

/// Per-node routing state: every bundle id the node has held. This is the
/// summary vector peers consult before offering a bundle.
#[derive(Debug, Clone, Default)]
pub struct RouterState {
    seen: HashSet<BundleId>,
}

impl RouterState {
    pub fn mark_seen(&mut self, id: &BundleId) {
        if !self.seen.contains(id) {
            self.seen.insert(id.clone());
        }
    }

    pub fn has_seen(&self, id: &BundleId) -> bool {
        self.seen.contains(id)
    }

    pub fn summary_len(&self) -> usize {
        self.seen.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TransferMode {
    /// Sender keeps its copy.
    Copy,
    /// Sender drops its copy once the peer has it.
    Move,
}

impl TransferMode {
    pub fn as_str(self) -> &'static str {
        match self {
            TransferMode::Copy => "copy",
            TransferMode::Move => "move",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Transfer {
    pub id: BundleId,
    pub mode: TransferMode,
    /// Copy budget handed to the receiver; `None` for unlimited.
    pub budget: Option<u32>,
}

fn spray_or_wait(b: &Bundle, peer: &Eid, default: u32, keep_moving: bool) -> Option<Transfer> {
    let budget = b.copy_budget.unwrap_or(default).max(1);
    if budget > 1 {
        return Some(Transfer {
            id: b.id.clone(),
            mode: TransferMode::Copy,
            budget: Some(budget / 2),
        });
    }
    (keep_moving || b.is_target(peer)).then(|| Transfer {
        id: b.id.clone(),
        mode: TransferMode::Move,
        budget: Some(1),
    })
}

fn decide(kind: RouterKind, b: &Bundle, peer: &Eid) -> Option<Transfer> {
    match kind {
        RouterKind::Epidemic => Some(Transfer {
            id: b.id.clone(),
            mode: TransferMode::Copy,
            budget: None,
        }),
        RouterKind::FirstContact => Some(Transfer {
            id: b.id.clone(),
            mode: TransferMode::Move,
            budget: b.copy_budget,
        }),
        RouterKind::SprayAndWait { copies } => spray_or_wait(b, peer, copies, false),
        RouterKind::EpPsw { copies } => {
            spray_or_wait(b, peer, copies, b.kind == BundleKind::Interest)
        }
    }
}

/// Bundles `a` should offer `b` during their contact, oldest first.
pub fn select_transfers(
    kind: RouterKind,
    a: &NodeState,
    b: &NodeState,
    now: Seconds,
) -> Vec<Transfer> {
    let mut eligible: Vec<&Bundle> = a
        .buffer
        .iter()
        .filter(|x| !x.is_expired(now) && !a.buffer.is_locked(&x.id) && !b.router.has_seen(&x.id))
        .collect();
    eligible.sort_by(|x, y| {
        x.creation_time
            .total_cmp(&y.creation_time)
            .then_with(|| x.id.cmp(&y.id))
    });
    eligible
        .into_iter()
        .filter_map(|x| decide(kind, x, &b.eid))
        .collect()
}

/// First transfer `a` would make to `b`, if any. Same order as
/// [`select_transfers`] without building the whole list.
pub fn next_transfer(
    kind: RouterKind,
    a: &NodeState,
    b: &NodeState,
    now: Seconds,
) -> Option<Transfer> {
    a.buffer
        .iter()
        .filter(|x| !x.is_expired(now) && !a.buffer.is_locked(&x.id) && !b.router.has_seen(&x.id))
        .filter_map(|x| decide(kind, x, &b.eid).map(|t| (x, t)))
        .min_by(|(x, _), (y, _)| {
            x.creation_time
                .total_cmp(&y.creation_time)
                .then_with(|| x.id.cmp(&y.id))
        })
        .map(|(_, t)| t)
}

/// Applies a finished transfer: the receiver handles the bundle, then the
/// sender gives up its copy (move) or the budget it handed over (copy). If
/// the receiver cannot buffer the bundle the sender is left unchanged.
#[allow(clippy::too_many_arguments)]
pub fn on_transfer_complete<R: Rng + ?Sized>(
    kind: RouterKind,
    sender: &mut NodeState,
    receiver: &mut NodeState,
    bundle: &Bundle,
    mode: TransferMode,
    budget: Option<u32>,
    now: Seconds,
    hosts: &[Eid],
    rng: &mut R,
) -> Reception {
    sender.buffer.unlock(&bundle.id);
    let mut copy = bundle.clone();
    copy.copy_budget = budget;
    let rx = receiver.receive(copy, now, hosts, kind, rng);
    if !rx.accepted {
        return rx;
    }
    match mode {
        TransferMode::Move => {
            sender.buffer.remove(&bundle.id);
        }
        TransferMode::Copy => {
            if let (Some(given), Some(held)) = (
                budget,
                sender
                    .buffer
                    .get_mut(&bundle.id)
                    .and_then(|b| b.copy_budget.as_mut()),
            ) {
                *held = held.saturating_sub(given).max(1);
            }
        }
    }
    rx
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bundle::tests::{eid, name};
    use crate::bundle::{make_interest, Nonce};
    use crate::node::NodeConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn node(e: &str) -> NodeState {
        NodeState::new(eid(e), &NodeConfig::default())
    }

    fn interest(seq: u64, dest: &str, t: f64, budget: Option<u32>) -> Bundle {
        let mut b = make_interest(
            BundleId::new(eid("r"), seq),
            name(&format!("/c/{seq}")),
            eid(dest),
            t,
            500.0,
            Nonce(seq),
        )
        .unwrap();
        b.copy_budget = budget;
        b
    }

    const SNW: RouterKind = RouterKind::SprayAndWait { copies: 10 };

    #[test]
    fn spray_splits_even_budget() {
        let mut a = node("a");
        a.buffer.admit(interest(0, "z", 0.0, Some(10)));
        let b = node("b");
        let t = select_transfers(SNW, &a, &b, 1.0);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].mode, TransferMode::Copy);
        assert_eq!(t[0].budget, Some(5));
    }

    #[test]
    fn wait_phase_only_moves_to_target() {
        let mut a = node("a");
        a.buffer.admit(interest(0, "z", 0.0, Some(1)));
        assert!(select_transfers(SNW, &a, &node("b"), 1.0).is_empty());
        let t = select_transfers(SNW, &a, &node("z"), 1.0);
        assert_eq!(t[0].mode, TransferMode::Move);
    }

    #[test]
    fn epidemic_skips_bundles_peer_has_seen() {
        let mut a = node("a");
        let mut b = node("b");
        for i in 0..3 {
            let x = interest(i, "z", i as f64, None);
            b.router.mark_seen(&x.id);
            a.buffer.admit(x);
        }
        assert!(select_transfers(RouterKind::Epidemic, &a, &b, 5.0).is_empty());
        a.buffer.admit(interest(7, "z", 4.0, None));
        let t = select_transfers(RouterKind::Epidemic, &a, &b, 5.0);
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].budget, None);
    }

    #[test]
    fn oldest_creation_first_and_expired_skipped() {
        let mut a = node("a");
        a.buffer.admit(interest(0, "z", 30.0, None));
        a.buffer.admit(interest(1, "z", 10.0, None));
        a.buffer.admit(interest(2, "z", 20.0, None));
        let order: Vec<_> = select_transfers(RouterKind::Epidemic, &a, &node("b"), 100.0)
            .into_iter()
            .map(|t| t.id.seq)
            .collect();
        assert_eq!(order, [1, 2, 0]);
        assert_eq!(
            next_transfer(RouterKind::Epidemic, &a, &node("b"), 100.0).map(|t| t.id.seq),
            Some(1)
        );
        assert_eq!(
            select_transfers(RouterKind::Epidemic, &a, &node("b"), 525.0).len(),
            1
        );
    }

    #[test]
    fn epsw_interests_keep_moving_at_budget_one() {
        let kind = RouterKind::EpPsw { copies: 10 };
        let mut a = node("a");
        a.buffer.admit(interest(0, "z", 0.0, Some(1)));
        let t = select_transfers(kind, &a, &node("b"), 1.0);
        assert_eq!(t[0].mode, TransferMode::Move);
    }

    fn complete(
        kind: RouterKind,
        a: &mut NodeState,
        b: &mut NodeState,
        t: &Transfer,
        now: f64,
    ) -> Reception {
        let bundle = a.buffer.get(&t.id).unwrap().clone();
        let hosts = vec![a.eid.clone(), b.eid.clone(), eid("z"), eid("r")];
        on_transfer_complete(
            kind,
            a,
            b,
            &bundle,
            t.mode,
            t.budget,
            now,
            &hosts,
            &mut ChaCha8Rng::seed_from_u64(0),
        )
    }

    #[test]
    fn copy_split_updates_both_budgets() {
        let mut a = node("a");
        let mut b = node("b");
        a.buffer.admit(interest(0, "z", 0.0, Some(10)));
        let t = select_transfers(SNW, &a, &b, 1.0).remove(0);
        let rx = complete(SNW, &mut a, &mut b, &t, 2.0);
        assert!(rx.accepted);
        assert_eq!(a.buffer.get(&t.id).unwrap().copy_budget, Some(5));
        assert_eq!(b.buffer.get(&t.id).unwrap().copy_budget, Some(5));
    }

    #[test]
    fn odd_budget_split_keeps_ceiling() {
        let mut a = node("a");
        let mut b = node("b");
        a.buffer.admit(interest(0, "z", 0.0, Some(5)));
        let t = select_transfers(SNW, &a, &b, 1.0).remove(0);
        complete(SNW, &mut a, &mut b, &t, 2.0);
        assert_eq!(a.buffer.get(&t.id).unwrap().copy_budget, Some(3));
        assert_eq!(b.buffer.get(&t.id).unwrap().copy_budget, Some(2));
    }

    #[test]
    fn first_contact_moves_single_copy() {
        let kind = RouterKind::FirstContact;
        let mut a = node("a");
        let mut b = node("b");
        let x = interest(0, "z", 0.0, None);
        a.router.mark_seen(&x.id);
        a.buffer.admit(x);
        let t = select_transfers(kind, &a, &b, 1.0).remove(0);
        complete(kind, &mut a, &mut b, &t, 2.0);
        assert!(a.buffer.is_empty());
        assert_eq!(b.buffer.len(), 1);
        assert!(select_transfers(kind, &b, &a, 3.0).is_empty());
    }

    #[test]
    fn refused_transfer_leaves_sender_unchanged() {
        let mut a = node("a");
        let mut b = NodeState::new(
            eid("b"),
            &NodeConfig {
                buffer_bytes: 10,
                ..NodeConfig::default()
            },
        );
        a.buffer.admit(interest(0, "z", 0.0, Some(10)));
        let before = a.buffer.get(&BundleId::new(eid("r"), 0)).cloned();
        let t = select_transfers(SNW, &a, &b, 1.0).remove(0);
        let rx = complete(SNW, &mut a, &mut b, &t, 2.0);
        assert!(!rx.accepted);
        assert_eq!(a.buffer.get(&t.id).cloned(), before);
        assert!(b.buffer.is_empty());
    }

    #[test]
    fn router_names_round_trip() {
        for k in [
            RouterKind::Epidemic,
            RouterKind::SprayAndWait { copies: 10 },
            RouterKind::FirstContact,
            RouterKind::EpPsw { copies: 10 },
        ] {
            assert_eq!(k.to_string().parse::<RouterKind>().unwrap(), k);
        }
        assert!("prophet".parse::<RouterKind>().is_err());
    }
}
