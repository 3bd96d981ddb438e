//! Content holdings of a node: the producer's permanent content store and
//! the byte-bounded LRU cache of content seen in transit.

use std::collections::{BTreeMap, HashMap};

use crate::bundle::ContentName;

/// Producer-owned content, populated at scenario start and never evicted.
#[derive(Debug, Clone, Default)]
pub struct ContentStore {
    items: BTreeMap<ContentName, u64>,
}

impl ContentStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: ContentName, size: u64) {
        self.items.insert(name, size);
    }

    pub fn get(&self, name: &ContentName) -> Option<u64> {
        self.items.get(name).copied()
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn names(&self) -> impl Iterator<Item = &ContentName> {
        self.items.keys()
    }
}

/// Opportunistic content cache with byte capacity and strict LRU eviction.
#[derive(Debug, Clone)]
pub struct OppCache {
    capacity: u64,
    used: u64,
    clock: u64,
    items: HashMap<ContentName, (u64, u64)>,
    recency: BTreeMap<u64, ContentName>,
}

impl OppCache {
    pub fn new(capacity: u64) -> Self {
        OppCache {
            capacity,
            used: 0,
            clock: 0,
            items: HashMap::new(),
            recency: BTreeMap::new(),
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

    pub fn contains(&self, name: &ContentName) -> bool {
        self.items.contains_key(name)
    }

    /// Looks up `name` and marks it most recently used.
    pub fn get(&mut self, name: &ContentName) -> Option<u64> {
        let (size, stamp) = self.items.get_mut(name)?;
        self.recency.remove(stamp);
        self.clock += 1;
        *stamp = self.clock;
        self.recency.insert(self.clock, name.clone());
        Some(*size)
    }

    /// Inserts or refreshes `name`, evicting least recently used items until
    /// it fits. Items larger than the whole cache are not stored. Returns the
    /// evicted names, oldest first.
    pub fn insert(&mut self, name: ContentName, size: u64) -> Vec<ContentName> {
        if let Some((old, stamp)) = self.items.remove(&name) {
            self.recency.remove(&stamp);
            self.used -= old;
        }
        if size > self.capacity {
            return Vec::new();
        }
        let mut evicted = Vec::new();
        while self.used + size > self.capacity {
            let Some((_, victim)) = self.recency.pop_first() else {
                break;
            };
            let (vsize, _) = self.items.remove(&victim).expect("recency index in sync");
            self.used -= vsize;
            evicted.push(victim);
        }
        self.clock += 1;
        self.items.insert(name.clone(), (size, self.clock));
        self.recency.insert(self.clock, name);
        self.used += size;
        evicted
    }

    /// Names from least to most recently used.
    pub fn names_by_recency(&self) -> impl Iterator<Item = &ContentName> {
        self.recency.values()
    }
}
