use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::bundle::Seconds;

#[derive(Debug, Clone, PartialEq)]
pub enum EventKind {
    /// Movement step, contact scan and expiry sweep.
    Tick,
    ContactUp(usize, usize),
    ContactDown(usize, usize),
    /// Transfer on link `(a, b)` finished; stale if `token` no longer
    /// matches the link's in-flight transfer.
    TransferDone {
        link: (usize, usize),
        token: u64,
    },
    InterestGen(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: Seconds,
    pub seq: u64,
    pub kind: EventKind,
}

impl Eq for Event {}

impl Ord for Event {
    /// Reversed so that `BinaryHeap` pops the earliest `(time, seq)`.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Debug, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Event>,
    next_seq: u64,
}

impl EventQueue {
    pub fn push(&mut self, time: Seconds, kind: EventKind) {
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Event { time, seq, kind });
    }

    pub fn pop(&mut self) -> Option<Event> {
        self.heap.pop()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_by_time_then_insertion() {
        let mut q = EventQueue::default();
        q.push(5.0, EventKind::Tick);
        q.push(1.0, EventKind::InterestGen(2));
        q.push(5.0, EventKind::InterestGen(1));
        q.push(1.0, EventKind::InterestGen(3));
        let order: Vec<_> = std::iter::from_fn(|| q.pop())
            .map(|e| (e.time, e.seq))
            .collect();
        assert_eq!(order, [(1.0, 1), (1.0, 3), (5.0, 0), (5.0, 2)]);
    }
}
