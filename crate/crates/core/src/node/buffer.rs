//! Bounded bundle store with oldest-first eviction.

use std::collections::HashSet;

use indexmap::IndexMap;

use crate::bundle::{Bundle, BundleId, BundleKind, ContentName, Seconds};

#[derive(Debug, Clone, PartialEq)]
pub enum Admission {
    Accepted { evicted: Vec<Bundle> },
    Rejected,
}

impl Admission {
    pub fn is_accepted(&self) -> bool {
        matches!(self, Admission::Accepted { .. })
    }
}

/// Bundles in arrival order. Bundles locked for an ongoing transfer are never
/// evicted.
#[derive(Debug, Clone)]
pub struct BundleBuffer {
    capacity: u64,
    used: u64,
    items: IndexMap<BundleId, Bundle>,
    locked: HashSet<BundleId>,
}

impl BundleBuffer {
    pub fn new(capacity: u64) -> Self {
        BundleBuffer {
            capacity,
            used: 0,
            items: IndexMap::new(),
            locked: HashSet::new(),
        }
    }

    pub fn capacity(&self) -> u64 {
        self.capacity
    }

    pub fn used(&self) -> u64 {
        self.used
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn contains(&self, id: &BundleId) -> bool {
        self.items.contains_key(id)
    }

    pub fn get(&self, id: &BundleId) -> Option<&Bundle> {
        self.items.get(id)
    }

    pub fn get_mut(&mut self, id: &BundleId) -> Option<&mut Bundle> {
        self.items.get_mut(id)
    }

    /// Bundles in arrival order, oldest first.
    pub fn iter(&self) -> impl Iterator<Item = &Bundle> {
        self.items.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &BundleId> {
        self.items.keys()
    }

    pub fn lock(&mut self, id: &BundleId) {
        if self.items.contains_key(id) {
            self.locked.insert(id.clone());
        }
    }

    pub fn unlock(&mut self, id: &BundleId) {
        self.locked.remove(id);
    }

    pub fn is_locked(&self, id: &BundleId) -> bool {
        self.locked.contains(id)
    }

    /// Whether a bundle of `size` bytes could be admitted, possibly after
    /// evicting unlocked bundles.
    pub fn can_admit(&self, size: u64) -> bool {
        if size > self.capacity {
            return false;
        }
        let evictable: u64 = self
            .items
            .iter()
            .filter(|(id, _)| !self.locked.contains(*id))
            .map(|(_, b)| b.size)
            .sum();
        self.used - evictable + size <= self.capacity
    }

    /// Stores `b`, evicting the oldest unlocked bundles until it fits. A
    /// bundle already present is replaced in place.
    pub fn admit(&mut self, b: Bundle) -> Admission {
        if let Some(existing) = self.items.get_mut(&b.id) {
            if b.size <= existing.size || self.used - existing.size + b.size <= self.capacity {
                self.used = self.used - existing.size + b.size;
                *existing = b;
                return Admission::Accepted {
                    evicted: Vec::new(),
                };
            }
            return Admission::Rejected;
        }
        if !self.can_admit(b.size) {
            return Admission::Rejected;
        }
        let mut evicted = Vec::new();
        while self.used + b.size > self.capacity {
            let victim = self
                .items
                .keys()
                .find(|id| !self.locked.contains(*id))
                .cloned()
                .expect("can_admit guarantees an evictable bundle");
            evicted.extend(self.remove(&victim));
        }
        self.used += b.size;
        self.items.insert(b.id.clone(), b);
        Admission::Accepted { evicted }
    }

    pub fn remove(&mut self, id: &BundleId) -> Option<Bundle> {
        let b = self.items.shift_remove(id)?;
        self.locked.remove(id);
        self.used -= b.size;
        Some(b)
    }

    /// Removes bundles expired at `now`.
    pub fn expire(&mut self, now: Seconds) -> Vec<Bundle> {
        let dead: Vec<BundleId> = self
            .items
            .values()
            .filter(|b| b.is_expired(now))
            .map(|b| b.id.clone())
            .collect();
        dead.iter().filter_map(|id| self.remove(id)).collect()
    }

    /// Number of buffered interests for `name`.
    pub fn interests_for(&self, name: &ContentName) -> usize {
        self.items
            .values()
            .filter(|b| b.kind == BundleKind::Interest && &b.name == name)
            .count()
    }
}
