//! Exactly rounded floating-point accumulation.
//!
//! Sums of squared moduli back every norm in the crate. An ordinary left-fold
//! depends on summation order, so a tensor reshape (a pure permutation of the
//! entries) would perturb the norm in the last ulp. The accumulator here keeps
//! a list of non-overlapping partials (Shewchuk's algorithm, as used by
//! Python's `math.fsum`) and rounds the exact sum once at the end, which makes
//! the result independent of the order the terms arrive in.

/// Streaming exact sum of `f64` terms.
#[derive(Debug, Clone, Default)]
pub struct ExactSum {
    partials: Vec<f64>,
}

impl ExactSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, value: f64) {
        let mut x = value;
        let mut i = 0;
        for j in 0..self.partials.len() {
            let mut y = self.partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                self.partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        self.partials.truncate(i);
        self.partials.push(x);
    }

    /// Round the exact sum to the nearest `f64`.
    pub fn value(&self) -> f64 {
        // The partials are non-overlapping and ordered by increasing
        // magnitude; adding them smallest-first loses nothing except in the
        // final rounding, where the half-way case needs the standard
        // fsum correction against the second-largest partial.
        let n = self.partials.len();
        if n == 0 {
            return 0.0;
        }
        let mut total = self.partials[n - 1];
        let mut k = n - 1;
        while k > 0 {
            k -= 1;
            let x = total;
            let y = self.partials[k];
            total = x + y;
            let err = y - (total - x);
            if err != 0.0 {
                // `err` has the sign of the discarded tail. Round-half-even
                // can land on the wrong side when the tail is exactly half an
                // ulp and the next partial tips it; nudge by one ulp then.
                if k > 0 && (err < 0.0) == (self.partials[k - 1] < 0.0) {
                    let corrected = total + 2.0 * err;
                    if (corrected - total) == 2.0 * err {
                        total = corrected;
                    }
                }
                break;
            }
        }
        total
    }
}

/// Exact sum of an iterator of terms.
pub fn exact_sum<I: IntoIterator<Item = f64>>(terms: I) -> f64 {
    let mut acc = ExactSum::new();
    for t in terms {
        acc.add(t);
    }
    acc.value()
}

/// Median of a slice (even length averages the middle pair). NaNs are not
/// expected; empty input returns NaN.
pub fn median(values: &[f64]) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cancellation() {
        assert_eq!(exact_sum([1e100, 1.0, -1e100, 1.0]), 2.0);
        assert_eq!(exact_sum([1e-16, 1.0, 1e-16, -1.0]), 2e-16);
    }

    #[test]
    fn permutation_invariant() {
        let vals: Vec<f64> = (0..200)
            .map(|i| ((i * 2654435761u64 % 1000) as f64 - 500.0) * (1.5f64).powi(i as i32 % 60 - 30))
            .collect();
        let forward = exact_sum(vals.iter().copied());
        let backward = exact_sum(vals.iter().rev().copied());
        let mut shuffled = vals.clone();
        shuffled.sort_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap());
        let sorted = exact_sum(shuffled.iter().copied());
        assert_eq!(forward.to_bits(), backward.to_bits());
        assert_eq!(forward.to_bits(), sorted.to_bits());
    }

    #[test]
    fn plain_values() {
        assert_eq!(exact_sum([] as [f64; 0]), 0.0);
        assert_eq!(exact_sum([3.5]), 3.5);
        assert_eq!(exact_sum([0.1, 0.2]), 0.1 + 0.2);
    }

    #[test]
    fn median_basics() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
        assert!(median(&[]).is_nan());
    }
}
