//! Compensated summation with a partition-independent combine step.

use std::iter::Sum;
use std::ops::AddAssign;

use rayon::prelude::*;

use crate::scalar::Scalar;

/// Fixed chunk length for parallel reductions. Results depend on this
/// constant but never on the number of worker threads.
pub const CHUNK: usize = 4096;

/// Neumaier (improved Kahan–Babuška) running sum.
///
/// The rounding error is bounded independently of the number of summands
/// up to second order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Neumaier<T> {
    sum: T,
    comp: T,
}

impl<T: Scalar> Neumaier<T> {
    pub fn new() -> Self {
        Self {
            sum: T::zero(),
            comp: T::zero(),
        }
    }

    #[inline]
    pub fn add(&mut self, x: T) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp = self.comp + ((self.sum - t) + x);
        } else {
            self.comp = self.comp + ((x - t) + self.sum);
        }
        self.sum = t;
    }

    /// Folds another partial sum in, keeping both of its components.
    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }

    #[inline]
    pub fn value(&self) -> T {
        self.sum + self.comp
    }
}

impl<T: Scalar> AddAssign<T> for Neumaier<T> {
    fn add_assign(&mut self, x: T) {
        self.add(x);
    }
}

impl<T: Scalar> Sum<T> for Neumaier<T> {
    fn sum<I: Iterator<Item = T>>(iter: I) -> Self {
        let mut acc = Neumaier::new();
        for x in iter {
            acc.add(x);
        }
        acc
    }
}

/// Compensated sum of `f(item)` over `items`.
pub fn sum_by<T: Scalar, I, F>(items: &[I], f: F) -> T
where
    F: Fn(&I) -> T,
{
    items.iter().map(f).sum::<Neumaier<T>>().value()
}

/// Parallel compensated sum: each fixed-size chunk is summed on its own,
/// then the partials are merged in chunk order.
pub fn par_sum_by<T, I, F>(items: &[I], f: F) -> T
where
    T: Scalar,
    I: Sync,
    F: Fn(&I) -> T + Sync,
{
    let partials: Vec<Neumaier<T>> = items
        .par_chunks(CHUNK)
        .map(|chunk| chunk.iter().map(&f).sum::<Neumaier<T>>())
        .collect();
    let mut total = Neumaier::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}
