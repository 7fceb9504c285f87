//! Fixed-capacity window of epoch-tagged parameter snapshots.

use std::collections::VecDeque;

use crate::error::{Result, RnaError};
use crate::extrapolation::IterateSequence;

#[derive(Debug, Clone)]
pub struct SlidingBuffer {
    capacity: usize,
    entries: VecDeque<(i64, Vec<f64>)>,
}

impl SlidingBuffer {
    /// `capacity` is `K + 1` for a window of `K` residuals.
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 {
            return Err(RnaError::InvalidConfig("buffer capacity must be >= 1".into()));
        }
        Ok(Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn clear(&mut self) {
        self.entries.clear();
    }

    /// Appends a snapshot, evicting the oldest entry when full.
    pub fn push(&mut self, epoch: i64, theta: Vec<f64>) -> Result<()> {
        if let Some((last, prev)) = self.entries.back() {
            if theta.len() != prev.len() {
                return Err(RnaError::DimensionMismatch {
                    expected: prev.len(),
                    got: theta.len(),
                });
            }
            if epoch <= *last {
                return Err(RnaError::OrderingViolation { last: *last, epoch });
            }
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back((epoch, theta));
        Ok(())
    }

    pub fn epochs(&self) -> Vec<i64> {
        self.entries.iter().map(|(e, _)| *e).collect()
    }

    pub fn latest(&self) -> Option<(i64, &[f64])> {
        self.entries.back().map(|(e, t)| (*e, t.as_slice()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (i64, &[f64])> {
        self.entries.iter().map(|(e, t)| (*e, t.as_slice()))
    }

    /// Copies the window out as an iterate sequence, oldest first.
    pub fn snapshot(&self) -> Result<IterateSequence> {
        IterateSequence::new(self.entries.iter().map(|(_, t)| t.clone()).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn evicts_oldest() {
        let mut b = SlidingBuffer::new(3).unwrap();
        for e in 1..=5 {
            b.push(e, vec![e as f64]).unwrap();
        }
        assert_eq!(b.epochs(), vec![3, 4, 5]);
    }

    #[test]
    fn first_push() {
        let mut b = SlidingBuffer::new(4).unwrap();
        assert!(b.is_empty());
        b.push(0, vec![1.0, 2.0]).unwrap();
        assert_eq!(b.len(), 1);
        assert_eq!(b.latest(), Some((0, &[1.0, 2.0][..])));
    }

    #[test]
    fn steady_state_window() {
        let mut b = SlidingBuffer::new(11).unwrap();
        for e in 1..=200 {
            b.push(e, vec![e as f64]).unwrap();
            assert_eq!(b.len(), (e as usize).min(11));
            if e >= 11 {
                assert_eq!(b.epochs(), ((e - 10)..=e).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn rejects_bad_pushes() {
        let mut b = SlidingBuffer::new(2).unwrap();
        b.push(3, vec![0.0]).unwrap();
        assert!(matches!(b.push(3, vec![0.0]), Err(RnaError::OrderingViolation { .. })));
        assert!(matches!(b.push(2, vec![0.0]), Err(RnaError::OrderingViolation { .. })));
        assert!(matches!(b.push(4, vec![0.0, 1.0]), Err(RnaError::DimensionMismatch { .. })));
        assert!(SlidingBuffer::new(0).is_err());
    }

    #[test]
    fn window_matches_last_inputs_exhaustively() {
        for cap in 1..=5 {
            for n in 0..=12i64 {
                let mut b = SlidingBuffer::new(cap).unwrap();
                for e in 0..n {
                    b.push(e, vec![e as f64 * 0.5]).unwrap();
                }
                let keep = (n as usize).min(cap);
                let expect: Vec<i64> = (n - keep as i64..n).collect();
                assert_eq!(b.epochs(), expect);
                let values: Vec<f64> = b.iter().map(|(_, t)| t[0]).collect();
                assert_eq!(values, expect.iter().map(|e| *e as f64 * 0.5).collect::<Vec<_>>());
            }
        }
    }
}
