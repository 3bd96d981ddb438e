//! Pending requester information table.

use std::collections::{BTreeMap, BTreeSet};

use crate::bundle::{ContentName, Eid, Seconds};

#[derive(Debug, Clone, PartialEq)]
pub struct PritEntry {
    /// Requester and the expiry of the interest that registered it.
    requesters: BTreeMap<Eid, Seconds>,
    /// Expiry of the interest this node forwarded on behalf of the entry.
    /// Later interests for the name are aggregated while it is alive.
    forwarded_until: Seconds,
}

impl PritEntry {
    pub fn requesters(&self) -> impl Iterator<Item = &Eid> {
        self.requesters.keys()
    }

    pub fn expiry(&self) -> Seconds {
        self.requesters
            .values()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn forwarded_until(&self) -> Seconds {
        self.forwarded_until
    }
}

/// Content name to the set of endpoints still waiting for it.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PritTable {
    entries: BTreeMap<ContentName, PritEntry>,
}

impl PritTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, name: &ContentName) -> Option<&PritEntry> {
        self.entries.get(name)
    }

    /// True when an interest for `name` has been forwarded from this node and
    /// has not yet expired.
    pub fn has_live_forward(&self, name: &ContentName, now: Seconds) -> bool {
        self.entries
            .get(name)
            .is_some_and(|e| e.forwarded_until >= now)
    }

    /// Adds `requester` to the entry for `name`, creating it if needed.
    /// Returns true if the requester was not yet listed.
    pub fn add_requester(&mut self, name: &ContentName, requester: &Eid, expiry: Seconds) -> bool {
        let entry = self
            .entries
            .entry(name.clone())
            .or_insert_with(|| PritEntry {
                requesters: BTreeMap::new(),
                forwarded_until: f64::NEG_INFINITY,
            });
        match entry.requesters.get_mut(requester) {
            Some(e) => {
                *e = e.max(expiry);
                false
            }
            None => {
                entry.requesters.insert(requester.clone(), expiry);
                true
            }
        }
    }

    /// Records that an interest for `name` expiring at `expiry` has been
    /// forwarded on behalf of this entry.
    pub fn mark_forwarded(&mut self, name: &ContentName, expiry: Seconds) {
        if let Some(e) = self.entries.get_mut(name) {
            e.forwarded_until = e.forwarded_until.max(expiry);
        }
    }

    /// Removes the entry for `name` and returns the requesters still alive
    /// at `now`.
    pub fn take(&mut self, name: &ContentName, now: Seconds) -> BTreeSet<Eid> {
        self.entries
            .remove(name)
            .map(|e| {
                e.requesters
                    .into_iter()
                    .filter(|(_, exp)| *exp >= now)
                    .map(|(eid, _)| eid)
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Drops requesters whose interest expired before `now` and entries left
    /// without requesters. Returns the number of requester records removed.
    pub fn expire(&mut self, now: Seconds) -> usize {
        let mut removed = 0;
        self.entries.retain(|_, e| {
            let before = e.requesters.len();
            e.requesters.retain(|_, exp| *exp >= now);
            removed += before - e.requesters.len();
            !e.requesters.is_empty()
        });
        removed
    }

    pub fn iter(&self) -> impl Iterator<Item = (&ContentName, &PritEntry)> {
        self.entries.iter()
    }
}
