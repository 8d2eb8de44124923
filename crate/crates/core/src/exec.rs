//! Execution policy for the data-parallel inner loops.
//!
//! Every batch routine in the crate goes through [`Exec`]. With the
//! `parallel` feature (on by default) `Exec::Parallel` fans work out over
//! rayon; without it the parallel variant silently runs sequentially.
//! Reductions are chunked with a fixed chunk size and summed in chunk order
//! so both policies return bit-identical floating point results.

use crate::numerics::sum::NeumaierSum;

/// Chunk length for deterministic reductions.
pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Exec {
    Sequential,
    Parallel,
}

impl Default for Exec {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Exec::Parallel
        } else {
            Exec::Sequential
        }
    }
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }

    /// Ordered map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return items.par_iter().map(f).collect();
        }
        items.iter().map(f).collect()
    }

    /// Ordered map over `0..n`.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            return (0..n).into_par_iter().map(f).collect();
        }
        (0..n).map(f).collect()
    }

    /// Deterministic sum of `f(i)` for `i in 0..n`, short-circuiting on the
    /// first error in index order.
    pub fn try_sum<E, F>(self, n: usize, f: F) -> Result<f64, E>
    where
        E: Send,
        F: Fn(usize) -> Result<f64, E> + Sync + Send,
    {
        let chunks = n.div_ceil(CHUNK);
        let partial: Vec<Result<f64, E>> = self.map_range(chunks, |c| {
            let mut acc = NeumaierSum::default();
            for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
                acc.add(f(i)?);
            }
            Ok(acc.total())
        });
        let mut acc = NeumaierSum::default();
        for p in partial {
            acc.add(p?);
        }
        Ok(acc.total())
    }

    pub fn sum<F>(self, n: usize, f: F) -> f64
    where
        F: Fn(usize) -> f64 + Sync + Send,
    {
        self.try_sum::<std::convert::Infallible, _>(n, |i| Ok(f(i)))
            .unwrap_or_else(|e| match e {})
    }

    /// Sort in place; the comparator must be a total order for the result to
    /// be policy independent.
    pub fn sort_by<T, F>(self, items: &mut [T], cmp: F)
    where
        T: Send,
        F: Fn(&T, &T) -> std::cmp::Ordering + Sync,
    {
        #[cfg(feature = "parallel")]
        if self.is_parallel() {
            use rayon::prelude::*;
            items.par_sort_by(cmp);
            return;
        }
        items.sort_by(cmp);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn policies_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let n = 3 * CHUNK + 17;
        let a = Exec::Sequential.sum(n, f);
        let b = Exec::Parallel.sum(n, f);
        assert_eq!(a.to_bits(), b.to_bits());
        let m1 = Exec::Sequential.map_range(100, |i| i * i);
        let m2 = Exec::Parallel.map_range(100, |i| i * i);
        assert_eq!(m1, m2);
    }

    #[test]
    fn try_sum_reports_first_error() {
        let r: Result<f64, usize> =
            Exec::Parallel.try_sum(10_000, |i| if i >= 5000 { Err(i) } else { Ok(1.0) });
        assert_eq!(r, Err(5000));
    }
}
