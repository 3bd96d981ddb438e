//! Logical bundle model.
//!
//! A [`Bundle`] carries the primary-block fields a DTN bundle agent needs
//! (identity, endpoints, creation time, lifetime, size) plus the
//! content-centric extension blocks: the bundle kind, the content name, the
//! request nonce and the pending-requester list.
//!
//! Bundles have a canonical text form, one `key=value` field per line in a
//! fixed order. It is used for traces and golden tests only.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Simulation time in seconds.
pub type Seconds = f64;

/// Payload size of an interest bundle in bytes.
pub const DEFAULT_INTEREST_SIZE: u64 = 1_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BundleError {
    #[error("invalid endpoint identifier {0:?}")]
    InvalidEid(String),
    #[error("invalid content name {0:?}")]
    InvalidName(String),
    #[error("bundle lifetime must be positive, got {0}")]
    NonPositiveTtl(Seconds),
    #[error("interest target equals requester {0}")]
    SelfTarget(Eid),
    #[error("bundle size must be positive")]
    ZeroSize,
    #[error("expected an interest bundle")]
    NotAnInterest,
    #[error("interest expired at {expired_at}, now {now}")]
    InterestExpired { expired_at: Seconds, now: Seconds },
    #[error("decode: {0}")]
    Decode(String),
}

fn valid_token(s: &str) -> bool {
    !s.is_empty() && !s.chars().any(|c| c.is_whitespace() || c == ',')
}

/// Endpoint identifier of a node.
///
/// Ordering is lexicographic and is the tie-break order used everywhere a
/// set of nodes is iterated.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Eid(String);

impl Eid {
    pub fn new(value: impl Into<String>) -> Result<Self, BundleError> {
        let value = value.into();
        if valid_token(&value) {
            Ok(Eid(value))
        } else {
            Err(BundleError::InvalidEid(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for Eid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for Eid {
    type Err = BundleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Eid::new(s)
    }
}

/// Hierarchical content name (`/a/b/c`). Matching is exact; there is no
/// prefix matching.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentName(String);

impl ContentName {
    pub fn new(value: impl Into<String>) -> Result<Self, BundleError> {
        let value = value.into();
        if valid_token(&value) {
            Ok(ContentName(value))
        } else {
            Err(BundleError::InvalidName(value))
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn segments(&self) -> impl Iterator<Item = &str> {
        self.0.split('/').filter(|s| !s.is_empty())
    }
}

impl fmt::Display for ContentName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl FromStr for ContentName {
    type Err = BundleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ContentName::new(s)
    }
}

/// Random request nonce, drawn once when an interest is created and copied
/// unmodified by every relay.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Nonce(pub u64);

impl fmt::Display for Nonce {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum BundleKind {
    Interest,
    Response,
}

impl BundleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            BundleKind::Interest => "interest",
            BundleKind::Response => "response",
        }
    }
}

impl fmt::Display for BundleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BundleKind {
    type Err = BundleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interest" => Ok(BundleKind::Interest),
            "response" => Ok(BundleKind::Response),
            other => Err(BundleError::Decode(format!("unknown kind {other:?}"))),
        }
    }
}

/// Globally unique bundle identifier: the node that created the bundle and
/// that node's monotone sequence number.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BundleId {
    pub origin: Eid,
    pub seq: u64,
}

impl BundleId {
    pub fn new(origin: Eid, seq: u64) -> Self {
        BundleId { origin, seq }
    }
}

impl fmt::Display for BundleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.origin, self.seq)
    }
}

impl FromStr for BundleId {
    type Err = BundleError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (origin, seq) = s
            .rsplit_once(':')
            .ok_or_else(|| BundleError::Decode(format!("bad bundle id {s:?}")))?;
        let seq = seq
            .parse()
            .map_err(|_| BundleError::Decode(format!("bad bundle id {s:?}")))?;
        Ok(BundleId::new(Eid::new(origin)?, seq))
    }
}

/// Content-level identity of a bundle, used for duplicate suppression.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DedupKey {
    pub name: ContentName,
    pub nonce: Nonce,
    pub kind: BundleKind,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Bundle {
    pub id: BundleId,
    pub source: Eid,
    pub destination: Eid,
    pub creation_time: Seconds,
    pub lifetime: Seconds,
    pub size: u64,
    pub kind: BundleKind,
    pub name: ContentName,
    pub nonce: Nonce,
    /// Pending requesters the response should also reach. Always empty for
    /// interests.
    pub prit_block: BTreeSet<Eid>,
    /// Routing copy budget; `None` means unlimited.
    pub copy_budget: Option<u32>,
    /// Destinations this request has already been retargeted away from.
    pub visited: Vec<Eid>,
}

impl Bundle {
    pub fn expires_at(&self) -> Seconds {
        self.creation_time + self.lifetime
    }

    /// Expiry is strict: a bundle is still alive at exactly its expiry time.
    pub fn is_expired(&self, now: Seconds) -> bool {
        now > self.expires_at()
    }

    pub fn dedup_key(&self) -> DedupKey {
        dedup_key(self)
    }

    /// Whether `eid` is one of the endpoints this bundle is heading for.
    pub fn is_target(&self, eid: &Eid) -> bool {
        &self.destination == eid || self.prit_block.contains(eid)
    }

    /// Canonical multi-line encoding.
    pub fn encode(&self) -> String {
        let mut out = String::new();
        for (k, v) in self.fields() {
            out.push_str(k);
            out.push('=');
            out.push_str(&v);
            out.push('\n');
        }
        out
    }

    /// Canonical encoding on one line, fields separated by single spaces.
    pub fn encode_inline(&self) -> String {
        self.fields()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    fn fields(&self) -> [(&'static str, String); 12] {
        let join =
            |it: &mut dyn Iterator<Item = &Eid>| it.map(Eid::as_str).collect::<Vec<_>>().join(",");
        [
            ("id", self.id.to_string()),
            ("source", self.source.to_string()),
            ("destination", self.destination.to_string()),
            ("creation_time", self.creation_time.to_string()),
            ("lifetime", self.lifetime.to_string()),
            ("size", self.size.to_string()),
            ("kind", self.kind.to_string()),
            ("name", self.name.to_string()),
            ("nonce", self.nonce.to_string()),
            ("prit", join(&mut self.prit_block.iter())),
            (
                "budget",
                self.copy_budget
                    .map_or_else(|| "-".to_string(), |b| b.to_string()),
            ),
            ("visited", join(&mut self.visited.iter())),
        ]
    }

    /// Decodes either canonical form. Fields must appear in canonical order.
    pub fn decode(text: &str) -> Result<Bundle, BundleError> {
        const KEYS: [&str; 12] = [
            "id",
            "source",
            "destination",
            "creation_time",
            "lifetime",
            "size",
            "kind",
            "name",
            "nonce",
            "prit",
            "budget",
            "visited",
        ];
        let mut values = Vec::with_capacity(KEYS.len());
        let mut tokens = text.split_whitespace();
        for key in KEYS {
            let tok = tokens
                .next()
                .ok_or_else(|| BundleError::Decode(format!("missing field {key}")))?;
            let (k, v) = tok
                .split_once('=')
                .ok_or_else(|| BundleError::Decode(format!("malformed field {tok:?}")))?;
            if k != key {
                return Err(BundleError::Decode(format!("expected {key}, found {k}")));
            }
            values.push(v);
        }
        if let Some(extra) = tokens.next() {
            return Err(BundleError::Decode(format!("trailing field {extra:?}")));
        }

        let num = |key: &str, v: &str| -> Result<f64, BundleError> {
            v.parse()
                .map_err(|_| BundleError::Decode(format!("bad {key} {v:?}")))
        };
        let int = |key: &str, v: &str| -> Result<u64, BundleError> {
            v.parse()
                .map_err(|_| BundleError::Decode(format!("bad {key} {v:?}")))
        };
        let list = |v: &str| -> Result<Vec<Eid>, BundleError> {
            if v.is_empty() {
                Ok(Vec::new())
            } else {
                v.split(',').map(Eid::new).collect()
            }
        };

        Ok(Bundle {
            id: values[0].parse()?,
            source: Eid::new(values[1])?,
            destination: Eid::new(values[2])?,
            creation_time: num("creation_time", values[3])?,
            lifetime: num("lifetime", values[4])?,
            size: int("size", values[5])?,
            kind: values[6].parse()?,
            name: ContentName::new(values[7])?,
            nonce: Nonce(int("nonce", values[8])?),
            prit_block: list(values[9])?.into_iter().collect(),
            copy_budget: match values[10] {
                "-" => None,
                v => Some(
                    v.parse()
                        .map_err(|_| BundleError::Decode(format!("bad budget {v:?}")))?,
                ),
            },
            visited: list(values[11])?,
        })
    }
}

/// Builds an interest issued by `id.origin` for `name`, addressed to `target`.
pub fn make_interest(
    id: BundleId,
    name: ContentName,
    target: Eid,
    now: Seconds,
    ttl: Seconds,
    nonce: Nonce,
) -> Result<Bundle, BundleError> {
    if ttl.is_nan() || ttl <= 0.0 {
        return Err(BundleError::NonPositiveTtl(ttl));
    }
    if target == id.origin {
        return Err(BundleError::SelfTarget(target));
    }
    Ok(Bundle {
        source: id.origin.clone(),
        id,
        destination: target,
        creation_time: now,
        lifetime: ttl,
        size: DEFAULT_INTEREST_SIZE,
        kind: BundleKind::Interest,
        name,
        nonce,
        prit_block: BTreeSet::new(),
        copy_budget: None,
        visited: Vec::new(),
    })
}

/// Builds the response a provider (`id.origin`) returns for `interest`.
///
/// The response takes the interest's lifetime, counted from `now`.
pub fn make_response(
    interest: &Bundle,
    id: BundleId,
    content_size: u64,
    now: Seconds,
) -> Result<Bundle, BundleError> {
    if interest.kind != BundleKind::Interest {
        return Err(BundleError::NotAnInterest);
    }
    if interest.is_expired(now) {
        return Err(BundleError::InterestExpired {
            expired_at: interest.expires_at(),
            now,
        });
    }
    if content_size == 0 {
        return Err(BundleError::ZeroSize);
    }
    Ok(Bundle {
        source: id.origin.clone(),
        id,
        destination: interest.source.clone(),
        creation_time: now,
        lifetime: interest.lifetime,
        size: content_size,
        kind: BundleKind::Response,
        name: interest.name.clone(),
        nonce: interest.nonce,
        prit_block: BTreeSet::new(),
        copy_budget: None,
        visited: Vec::new(),
    })
}

pub fn dedup_key(b: &Bundle) -> DedupKey {
    DedupKey {
        name: b.name.clone(),
        nonce: b.nonce,
        kind: b.kind,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use proptest::prelude::*;

    pub fn eid(s: &str) -> Eid {
        Eid::new(s).unwrap()
    }

    pub fn name(s: &str) -> ContentName {
        ContentName::new(s).unwrap()
    }

    fn interest(origin: &str, seq: u64, n: &str, target: &str, nonce: u64) -> Bundle {
        make_interest(
            BundleId::new(eid(origin), seq),
            name(n),
            eid(target),
            100.0,
            500.0,
            Nonce(nonce),
        )
        .unwrap()
    }

    #[test]
    fn interest_expires_after_ttl() {
        let b = interest("R1", 0, "/news/a", "P3", 42);
        assert_eq!(b.kind, BundleKind::Interest);
        assert_eq!(b.expires_at(), 600.0);
        assert_eq!(b.size, DEFAULT_INTEREST_SIZE);
        assert!(b.prit_block.is_empty());
        assert_eq!(b.destination, eid("P3"));
        assert!(!b.is_expired(600.0));
        assert!(b.is_expired(600.5));
    }

    #[test]
    fn interest_rejects_bad_ttl_and_self_target() {
        let id = BundleId::new(eid("R1"), 0);
        let r = make_interest(id.clone(), name("/x"), eid("P"), 0.0, 0.0, Nonce(1));
        assert_eq!(r, Err(BundleError::NonPositiveTtl(0.0)));
        let r = make_interest(id.clone(), name("/x"), eid("P"), 0.0, -3.0, Nonce(1));
        assert!(r.is_err());
        let r = make_interest(id, name("/x"), eid("R1"), 0.0, 10.0, Nonce(1));
        assert_eq!(r, Err(BundleError::SelfTarget(eid("R1"))));
    }

    #[test]
    fn response_returns_to_requester_with_fresh_lifetime() {
        let i = interest("R1", 0, "/x", "Q", 7);
        let r = make_response(&i, BundleId::new(eid("P"), 3), 800_000, 450.0).unwrap();
        assert_eq!(r.kind, BundleKind::Response);
        assert_eq!(r.destination, eid("R1"));
        assert_eq!(r.source, eid("P"));
        assert_eq!(r.name, i.name);
        assert_eq!(r.nonce, i.nonce);
        assert_eq!(r.lifetime, 500.0);
        assert_eq!(r.expires_at(), 950.0);
        assert!(r.prit_block.is_empty());
    }

    #[test]
    fn response_to_expired_interest_fails() {
        let i = interest("R1", 0, "/x", "Q", 7);
        let r = make_response(&i, BundleId::new(eid("P"), 0), 10, 601.0);
        assert!(matches!(r, Err(BundleError::InterestExpired { .. })));
        let not_interest = make_response(&i, BundleId::new(eid("P"), 0), 10, 200.0).unwrap();
        assert_eq!(
            make_response(&not_interest, BundleId::new(eid("P"), 1), 10, 200.0),
            Err(BundleError::NotAnInterest)
        );
    }

    #[test]
    fn dedup_key_ignores_routing_fields() {
        let a = interest("A", 5, "/x", "D", 9);
        let mut c = interest("C", 1, "/x", "E", 9);
        c.source = eid("R");
        assert_eq!(a.dedup_key(), c.dedup_key());

        let other_nonce = interest("A", 6, "/x", "D", 10);
        assert_ne!(a.dedup_key(), other_nonce.dedup_key());

        let resp = make_response(&a, BundleId::new(eid("P"), 0), 1, 100.0).unwrap();
        assert_ne!(a.dedup_key(), resp.dedup_key());
        assert_eq!(resp.dedup_key(), resp.dedup_key());
    }

    #[test]
    fn encoding_is_line_oriented_in_fixed_order() {
        let mut b = interest("R1", 0, "/news/a", "P3", 42);
        b.copy_budget = Some(10);
        let text = b.encode();
        let keys: Vec<_> = text.lines().map(|l| l.split('=').next().unwrap()).collect();
        assert_eq!(
            keys,
            [
                "id",
                "source",
                "destination",
                "creation_time",
                "lifetime",
                "size",
                "kind",
                "name",
                "nonce",
                "prit",
                "budget",
                "visited"
            ]
        );
        assert!(text.starts_with("id=R1:0\nsource=R1\ndestination=P3\ncreation_time=100\n"));
        assert_eq!(Bundle::decode(&text).unwrap(), b);
        assert_eq!(Bundle::decode(&b.encode_inline()).unwrap(), b);
    }

    #[test]
    fn decode_rejects_out_of_order_fields() {
        let b = interest("R1", 0, "/x", "P3", 42);
        let mut lines: Vec<_> = b.encode().lines().map(str::to_string).collect();
        lines.swap(1, 2);
        assert!(Bundle::decode(&lines.join("\n")).is_err());
        assert!(Bundle::decode("").is_err());
    }

    #[test]
    fn tokens_reject_whitespace_and_commas() {
        assert!(Eid::new("").is_err());
        assert!(Eid::new("a b").is_err());
        assert!(Eid::new("a,b").is_err());
        assert!(ContentName::new("/a/b").is_ok());
        assert_eq!(name("/a//b/").segments().collect::<Vec<_>>(), ["a", "b"]);
    }

    fn arb_token() -> impl Strategy<Value = String> {
        "[a-zA-Z0-9/_.:-]{1,12}"
    }

    prop_compose! {
        fn arb_bundle()(
            origin in arb_token(),
            seq in any::<u64>(),
            source in arb_token(),
            destination in arb_token(),
            creation_time in 0.0f64..1e6,
            lifetime in 1e-3f64..1e4,
            size in 1u64..u64::MAX,
            response in any::<bool>(),
            n in arb_token(),
            nonce in any::<u64>(),
            prit in proptest::collection::btree_set(arb_token(), 0..4),
            budget in proptest::option::of(1u32..64),
            visited in proptest::collection::vec(arb_token(), 0..3),
        ) -> Bundle {
            Bundle {
                id: BundleId::new(eid(&origin), seq),
                source: eid(&source),
                destination: eid(&destination),
                creation_time,
                lifetime,
                size,
                kind: if response { BundleKind::Response } else { BundleKind::Interest },
                name: name(&n),
                nonce: Nonce(nonce),
                prit_block: prit.iter().map(|s| eid(s)).collect(),
                copy_budget: budget,
                visited: visited.iter().map(|s| eid(s)).collect(),
            }
        }
    }

    proptest! {
        #[test]
        fn canonical_encoding_round_trips(b in arb_bundle()) {
            prop_assert_eq!(Bundle::decode(&b.encode()).unwrap(), b.clone());
            prop_assert_eq!(Bundle::decode(&b.encode_inline()).unwrap(), b);
        }
    }
}
