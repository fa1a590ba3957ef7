use std::collections::VecDeque;

use rand::Rng;

/// The most recent `capacity` episodes of one agent, oldest evicted first.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplayPool<T> {
    capacity: usize,
    episodes: VecDeque<T>,
}

impl<T> ReplayPool<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "pool capacity must be positive");
        Self {
            capacity,
            episodes: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, episode: T) {
        if self.episodes.len() == self.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(episode);
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &T> {
        self.episodes.iter()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Option<&T> {
        if self.episodes.is_empty() {
            None
        } else {
            self.episodes.get(rng.random_range(0..self.episodes.len()))
        }
    }
}
