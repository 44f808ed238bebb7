//! Min-priority queue of pending thread events on the virtual clock.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

/// A thread's next update instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Event {
    pub time: f64,
    pub thread: usize,
}

impl Eq for Event {}

impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.thread.cmp(&other.thread))
    }
}

impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Pops events in increasing time; exact ties go to the lower thread id.
#[derive(Debug, Clone, Default)]
pub struct EventQueue {
    heap: BinaryHeap<Reverse<Event>>,
}

impl EventQueue {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, time: f64, thread: usize) {
        self.heap.push(Reverse(Event { time, thread }));
    }

    pub fn peek(&self) -> Option<Event> {
        self.heap.peek().map(|r| r.0)
    }

    /// Removes and returns the earliest event.
    pub fn next_event(&mut self) -> Option<Event> {
        self.heap.pop().map(|r| r.0)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    /// Pending events in pop order.
    pub fn pending(&self) -> Vec<Event> {
        let mut events: Vec<Event> = self.heap.iter().map(|r| r.0).collect();
        events.sort();
        events
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pops_earliest() {
        let mut q = EventQueue::new();
        q.push(1.5, 2);
        q.push(0.7, 5);
        assert_eq!(
            q.next_event(),
            Some(Event {
                time: 0.7,
                thread: 5
            })
        );
        assert_eq!(q.len(), 1);
    }

    #[test]
    fn ties_go_to_lower_thread() {
        let mut q = EventQueue::new();
        q.push(0.7, 5);
        q.push(0.7, 1);
        q.push(0.9, 0);
        assert_eq!(q.next_event().unwrap().thread, 1);
        assert_eq!(q.next_event().unwrap().thread, 5);
    }

    #[test]
    fn size_drops_until_reschedule() {
        let mut q = EventQueue::new();
        for i in 0..4 {
            q.push(i as f64, i);
        }
        let e = q.next_event().unwrap();
        assert_eq!(q.len(), 3);
        q.push(e.time + 10.0, e.thread);
        assert_eq!(q.len(), 4);
    }
}
