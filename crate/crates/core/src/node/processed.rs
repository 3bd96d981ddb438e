use std::collections::{HashMap, VecDeque};

use crate::bundle::{DedupKey, Seconds};

pub const DEFAULT_PROCESSED_CAPACITY: usize = 10_000;

/// Recently processed content-level keys, kept for a retention window so
/// that looping or duplicated copies of the same request can be dropped.
#[derive(Debug, Clone)]
pub struct ProcessedList {
    retention: Seconds,
    capacity: usize,
    order: VecDeque<(DedupKey, Seconds)>,
    live: HashMap<DedupKey, Seconds>,
}

impl ProcessedList {
    pub fn new(retention: Seconds, capacity: usize) -> Self {
        ProcessedList {
            retention,
            capacity,
            order: VecDeque::new(),
            live: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.live.len()
    }

    pub fn is_empty(&self) -> bool {
        self.live.is_empty()
    }

    pub fn contains(&self, key: &DedupKey, now: Seconds) -> bool {
        self.live.get(key).is_some_and(|exp| *exp >= now)
    }

    /// Records `key` at `now`. Returns false if it was already present and
    /// unexpired.
    pub fn insert(&mut self, key: DedupKey, now: Seconds) -> bool {
        if self.contains(&key, now) {
            return false;
        }
        if self.capacity == 0 {
            return true;
        }
        while self.live.len() >= self.capacity {
            self.pop_oldest();
        }
        let expiry = now + self.retention;
        self.live.insert(key.clone(), expiry);
        self.order.push_back((key, expiry));
        true
    }

    fn pop_oldest(&mut self) {
        while let Some((key, exp)) = self.order.pop_front() {
            // Skip queue records superseded by a later insert of the same key.
            if self.live.get(&key) == Some(&exp) {
                self.live.remove(&key);
                return;
            }
        }
    }

    /// Removes keys whose retention window ended before `now`.
    pub fn expire(&mut self, now: Seconds) -> usize {
        let mut removed = 0;
        while let Some((key, exp)) = self.order.front() {
            if *exp >= now {
                break;
            }
            if self.live.get(key) == Some(exp) {
                self.live.remove(key);
                removed += 1;
            }
            self.order.pop_front();
        }
        removed
    }
}
