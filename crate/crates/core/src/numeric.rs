//! Small numerical building blocks shared by the other modules.

use rand::Rng;
use rayon::prelude::*;

/// Pairs per reduction chunk. Chunk boundaries depend only on the input
/// length, so results are identical for every thread count.
pub const REDUCTION_CHUNK: usize = 4096;

/// Neumaier-compensated accumulator.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, value: f64) {
        let t = self.sum + value;
        if self.sum.abs() >= value.abs() {
            self.comp += (self.sum - t) + value;
        } else {
            self.comp += (value - t) + self.sum;
        }
        self.sum = t;
    }

    /// Merge another partial sum, keeping both its running value and its
    /// carried compensation.
    pub fn merge(&mut self, other: &CompensatedSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = CompensatedSum::new();
        for v in iter {
            acc.add(v);
        }
        acc
    }
}

/// Deterministic parallel compensated reduction over `items`.
pub fn par_sum<T, F>(items: &[T], f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &T) -> f64 + Sync,
{
    let partials: Vec<CompensatedSum> = items
        .par_chunks(REDUCTION_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let base = c * REDUCTION_CHUNK;
            let mut acc = CompensatedSum::new();
            for (k, item) in chunk.iter().enumerate() {
                acc.add(f(base + k, item));
            }
            acc
        })
        .collect();
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

/// Like [`par_sum`] but tracks two sums at once.
pub fn par_sum2<T, F>(items: &[T], f: F) -> (f64, f64)
where
    T: Sync,
    F: Fn(usize, &T) -> (f64, f64) + Sync,
{
    let partials: Vec<(CompensatedSum, CompensatedSum)> = items
        .par_chunks(REDUCTION_CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let base = c * REDUCTION_CHUNK;
            let mut a = CompensatedSum::new();
            let mut b = CompensatedSum::new();
            for (k, item) in chunk.iter().enumerate() {
                let (x, y) = f(base + k, item);
                a.add(x);
                b.add(y);
            }
            (a, b)
        })
        .collect();
    let mut ta = CompensatedSum::new();
    let mut tb = CompensatedSum::new();
    for (a, b) in &partials {
        ta.merge(a);
        tb.merge(b);
    }
    (ta.value(), tb.value())
}

/// 8-point Gauss–Legendre nodes and weights on [-1, 1].
pub const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (-0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362_0),
    (0.525_532_409_916_329_0, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_48),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Integrate `f` over `[a, b]` with a single 8-point Gauss–Legendre panel.
pub fn gauss_legendre<F: Fn(f64) -> f64>(f: F, a: f64, b: f64) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    let mut acc = 0.0;
    for &(x, w) in GL8.iter() {
        acc += w * f(mid + half * x);
    }
    acc * half
}

/// Draw a sample log-uniformly from `[lo, hi]`.
pub fn log_uniform<R: Rng + ?Sized>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    let (a, b) = (lo.ln(), hi.ln());
    (a + (b - a) * rng.random::<f64>()).exp()
}

/// Logarithmic grid over `[lo, hi]` with `per_decade` points per decade,
/// both endpoints included.
pub fn log_grid(lo: f64, hi: f64, per_decade: usize) -> Vec<f64> {
    let decades = (hi / lo).log10();
    let n = ((decades * per_decade as f64).round() as usize).max(1);
    let (a, b) = (lo.ln(), hi.ln());
    (0..=n).map(|k| (a + (b - a) * k as f64 / n as f64).exp()).collect()
}

/// Find `x` in `[lo, hi]` with `f(x) = target` for a nondecreasing `f`,
/// by bisection to relative width `rel_tol`.
pub fn invert_increasing<F: Fn(f64) -> f64>(f: F, target: f64, mut lo: f64, mut hi: f64, rel_tol: f64) -> f64 {
    for _ in 0..400 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi || hi - lo <= rel_tol * hi {
            break;
        }
        if f(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Relative margin `(lhs - rhs) / max(|lhs|, |rhs|, floor)`; positive means
/// `lhs <= rhs` is violated.
pub fn relative_violation(lhs: f64, rhs: f64, floor: f64) -> f64 {
    let scale = lhs.abs().max(rhs.abs()).max(floor);
    (lhs - rhs) / scale
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensated_sum_recovers_small_terms() {
        let mut acc = CompensatedSum::new();
        acc.add(1.0);
        for _ in 0..10_000 {
            acc.add(1e-16);
        }
        acc.add(-1.0);
        assert!((acc.value() - 1e-12).abs() < 1e-24);
    }

    #[test]
    fn par_sum_matches_sequential_order_independent_of_chunks() {
        let xs: Vec<f64> = (0..20_000).map(|k| ((k as f64) * 0.37).sin()).collect();
        let seq: CompensatedSum = xs.iter().copied().collect();
        let par = par_sum(&xs, |_, x| *x);
        assert!((seq.value() - par).abs() < 1e-12);
    }

    #[test]
    fn gauss_legendre_integrates_degree_15_exactly() {
        let v = gauss_legendre(|x| x.powi(15) + x.powi(14), 0.0, 1.0);
        assert!((v - (1.0 / 16.0 + 1.0 / 15.0)).abs() < 1e-14);
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-6, 1e6, 64);
        assert_eq!(g.len(), 12 * 64 + 1);
        assert!((g[0] - 1e-6).abs() < 1e-18);
        assert!((g[g.len() - 1] - 1e6).abs() < 1e-6);
    }

    #[test]
    fn invert_increasing_finds_square_root() {
        let x = invert_increasing(|x| x * x, 2.0, 0.0, 2.0, 1e-15);
        assert!((x - 2f64.sqrt()).abs() < 1e-14);
    }
}
