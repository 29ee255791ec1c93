//! Execution strategy for the embarrassingly parallel loops (direction
//! sweeps, randomized trials, per-step tube folds).
//!
//! With the `parallel` feature the default strategy runs on the rayon
//! global pool; without it every strategy degrades to a plain loop.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Strategy {
    Sequential,
    Parallel,
}

impl Default for Strategy {
    fn default() -> Self {
        if cfg!(feature = "parallel") {
            Strategy::Parallel
        } else {
            Strategy::Sequential
        }
    }
}

impl Strategy {
    /// Order-preserving map over a slice.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Strategy::Parallel => items.par_iter().map(f).collect(),
            _ => items.iter().map(f).collect(),
        }
    }

    /// Order-preserving map over `0..n`.
    pub fn map_range<R, F>(self, n: usize, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(usize) -> R + Sync + Send,
    {
        match self {
            #[cfg(feature = "parallel")]
            Strategy::Parallel => (0..n).into_par_iter().map(f).collect(),
            _ => (0..n).map(f).collect(),
        }
    }

    /// Index and value of the minimum of `f` over `items`; ties keep the
    /// lowest index so parallel and sequential runs agree exactly.
    pub fn argmin<T, F>(self, items: &[T], f: F) -> Option<(usize, f64)>
    where
        T: Sync,
        F: Fn(&T) -> f64 + Sync + Send,
    {
        let pick = |a: (usize, f64), b: (usize, f64)| {
            if b.1 < a.1 || (b.1 == a.1 && b.0 < a.0) || a.1.is_nan() {
                b
            } else {
                a
            }
        };
        match self {
            #[cfg(feature = "parallel")]
            Strategy::Parallel => items
                .par_iter()
                .enumerate()
                .map(|(i, x)| (i, f(x)))
                .reduce_with(pick),
            _ => items.iter().enumerate().map(|(i, x)| (i, f(x))).reduce(pick),
        }
    }

    /// Index and value of the maximum of `f` over `items`.
    pub fn argmax<T, F>(self, items: &[T], f: F) -> Option<(usize, f64)>
    where
        T: Sync,
        F: Fn(&T) -> f64 + Sync + Send,
    {
        self.argmin(items, |x| -f(x)).map(|(i, v)| (i, -v))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strategies_agree() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 7919) % 1000) as f64).collect();
        for s in [Strategy::Sequential, Strategy::Parallel] {
            assert_eq!(s.argmax(&xs, |x| *x), Some((xs.iter().position(|&v| v == 999.0).unwrap(), 999.0)));
            assert_eq!(s.argmin(&xs, |x| *x).unwrap().1, 0.0);
            assert_eq!(s.map(&xs, |x| x * 2.0)[3], xs[3] * 2.0);
            assert_eq!(s.map_range(5, |i| i * i), vec![0, 1, 4, 9, 16]);
        }
    }

    #[test]
    fn ties_resolve_to_lowest_index() {
        let xs = vec![1.0; 64];
        assert_eq!(Strategy::Parallel.argmin(&xs, |x| *x), Some((0, 1.0)));
        assert_eq!(Strategy::Sequential.argmax(&xs, |x| *x), Some((0, 1.0)));
    }
}
