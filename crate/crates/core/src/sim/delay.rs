use crate::Scalar;

/// Fixed transport delay of whole samples on a ring buffer.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLine<T> {
    buf: Vec<T>,
    idx: usize,
}

impl<T: Scalar> DelayLine<T> {
    /// Delay of `len` samples, pre-filled with `initial`.
    pub fn new(len: usize, initial: T) -> Self {
        Self {
            buf: vec![initial; len],
            idx: 0,
        }
    }

    /// `round(delay / dt)` samples.
    pub fn for_delay(delay: T, dt: T, initial: T) -> Self {
        Self::new((delay / dt).round().to_usize().unwrap_or(0), initial)
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }

    /// Writes `x` and returns the value written `len` pushes earlier.
    pub fn push(&mut self, x: T) -> T {
        if self.buf.is_empty() {
            return x;
        }
        let out = std::mem::replace(&mut self.buf[self.idx], x);
        self.idx = (self.idx + 1) % self.buf.len();
        out
    }
}
