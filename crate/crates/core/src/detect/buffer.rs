use std::collections::VecDeque;

use crate::error::{Error, Result};

/// The most recent per-frame frequency vectors, addressed by absolute frame index.
#[derive(Debug, Clone)]
pub struct StreamBuffer {
    frames: VecDeque<Vec<f64>>,
    capacity: usize,
    dim: usize,
    /// Absolute index of the next frame to be pushed.
    next: usize,
}

impl StreamBuffer {
    pub fn new(dim: usize, capacity: usize) -> Self {
        Self { frames: VecDeque::with_capacity(capacity), capacity: capacity.max(1), dim, next: 0 }
    }

    pub fn push(&mut self, f: Vec<f64>) -> Result<()> {
        if f.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: f.len() });
        }
        if f.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid("frequency vectors must be finite and nonnegative"));
        }
        if self.frames.len() == self.capacity {
            self.frames.pop_front();
        }
        self.frames.push_back(f);
        self.next += 1;
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Absolute index of the newest frame.
    pub fn latest(&self) -> Option<usize> {
        self.next.checked_sub(1)
    }

    /// Absolute index of the oldest retained frame.
    pub fn oldest(&self) -> usize {
        self.next - self.frames.len()
    }

    pub fn get(&self, t: usize) -> Option<&[f64]> {
        let i = t.checked_sub(self.oldest())?;
        self.frames.get(i).map(Vec::as_slice)
    }

    /// Prefix sums `P[j] = sum of frames oldest .. oldest + j - 1`, one row of
    /// length `dim` per `j`, laid out flat.
    pub(crate) fn prefix_sums(&self, out: &mut Vec<f64>) {
        let l = self.dim;
        out.clear();
        out.resize((self.frames.len() + 1) * l, 0.0);
        for (j, f) in self.frames.iter().enumerate() {
            for c in 0..l {
                out[(j + 1) * l + c] = out[j * l + c] + f[c];
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keeps_most_recent_frames() {
        let mut b = StreamBuffer::new(1, 3);
        for i in 0..5 {
            b.push(vec![i as f64]).unwrap();
        }
        assert_eq!(b.len(), 3);
        assert_eq!(b.oldest(), 2);
        assert_eq!(b.latest(), Some(4));
        assert_eq!(b.get(1), None);
        assert_eq!(b.get(3), Some(&[3.0][..]));
        assert!(b.push(vec![1.0, 2.0]).is_err());
        assert!(b.push(vec![-1.0]).is_err());
    }
}
