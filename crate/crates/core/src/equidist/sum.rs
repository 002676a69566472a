use num_complex::Complex;
use num_traits::Float;

/// Neumaier's compensated summation of complex numbers.
#[derive(Debug, Clone, Copy)]
pub struct CompensatedSum<T> {
    sum: Complex<T>,
    comp: Complex<T>,
}

impl<T: Float> Default for CompensatedSum<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: Float> CompensatedSum<T> {
    pub fn new() -> Self {
        Self {
            sum: Complex::new(T::zero(), T::zero()),
            comp: Complex::new(T::zero(), T::zero()),
        }
    }

    #[inline]
    pub fn add(&mut self, x: Complex<T>) {
        let (re, cre) = step(self.sum.re, self.comp.re, x.re);
        let (im, cim) = step(self.sum.im, self.comp.im, x.im);
        self.sum = Complex::new(re, im);
        self.comp = Complex::new(cre, cim);
    }

    /// Folds in another partial sum, keeping both compensation terms.
    pub fn merge(&mut self, other: &Self) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> Complex<T> {
        self.sum + self.comp
    }
}

#[inline]
fn step<T: Float>(sum: T, comp: T, x: T) -> (T, T) {
    let t = sum + x;
    let c = if sum.abs() >= x.abs() {
        (sum - t) + x
    } else {
        (x - t) + sum
    };
    (t, comp + c)
}

/// Sums `f(i)` for `i` in `0..len`, split into `threads` contiguous chunks
/// that are summed independently and merged in index order, so the result is
/// bit-stable for a fixed thread count.
pub fn partitioned_sum<T, F>(len: u128, threads: usize, f: F) -> Complex<T>
where
    T: Float + Send,
    F: Fn(u128, u128, &mut CompensatedSum<T>) + Sync,
{
    let threads = threads.max(1) as u128;
    let chunk = len.div_ceil(threads).max(1);
    let bounds: Vec<(u128, u128)> = (0..threads)
        .map(|k| ((k * chunk).min(len), ((k + 1) * chunk).min(len)))
        .filter(|(a, b)| a < b)
        .collect();
    let partials: Vec<CompensatedSum<T>> = if bounds.len() <= 1 {
        bounds
            .iter()
            .map(|&(a, b)| {
                let mut acc = CompensatedSum::new();
                f(a, b, &mut acc);
                acc
            })
            .collect()
    } else {
        std::thread::scope(|s| {
            let handles: Vec<_> = bounds
                .iter()
                .map(|&(a, b)| {
                    let f = &f;
                    s.spawn(move || {
                        let mut acc = CompensatedSum::new();
                        f(a, b, &mut acc);
                        acc
                    })
                })
                .collect();
            handles.into_iter().map(|h| h.join().expect("summation thread")).collect()
        })
    };
    let mut total = CompensatedSum::new();
    for p in &partials {
        total.merge(p);
    }
    total.value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compensation_recovers_small_terms() {
        let mut acc = CompensatedSum::<f64>::new();
        acc.add(Complex::new(1e16, 0.0));
        for _ in 0..1000 {
            acc.add(Complex::new(1.0, 1.0));
        }
        acc.add(Complex::new(-1e16, 0.0));
        assert_eq!(acc.value(), Complex::new(1000.0, 1000.0));
    }

    #[test]
    fn partitions_agree() {
        let f = |a: u128, b: u128, acc: &mut CompensatedSum<f64>| {
            for i in a..b {
                acc.add(Complex::new((i as f64).sin(), (i as f64 * 0.5).cos()));
            }
        };
        let one = partitioned_sum(100_000, 1, f);
        for t in [2, 3, 7, 16] {
            let many = partitioned_sum(100_000, t, f);
            assert!((many - one).norm() < 1e-12);
            assert_eq!(many, partitioned_sum(100_000, t, f));
        }
    }
}
