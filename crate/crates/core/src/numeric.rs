//! Correctly rounded summation.
//!
//! Every average in the pipeline is reduced with [`exact_sum`], whose result
//! is the exact sum of its inputs rounded once to the nearest `f64`. The value
//! therefore does not depend on summation order or on how work was split
//! across threads.

/// Shewchuk's non-overlapping partials with the final half-way correction
/// (the algorithm behind CPython's `math.fsum`). Inputs must be finite.
pub fn exact_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for value in values {
        let mut x = value;
        let mut kept = 0;
        for j in 0..partials.len() {
            let mut y = partials[j];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[kept] = lo;
                kept += 1;
            }
            x = hi;
        }
        partials.truncate(kept);
        partials.push(x);
    }

    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        let yr = hi - x;
        lo = y - yr;
        if lo != 0.0 {
            break;
        }
    }
    // round-half-even fix when the remaining partials push past a tie
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        let yr = x - hi;
        if y == yr {
            hi = x;
        }
    }
    hi
}

/// `exact_sum(values) / count`, or `None` for an empty input.
pub fn exact_mean<I: IntoIterator<Item = f64>>(values: I) -> Option<f64> {
    let mut count = 0usize;
    let sum = exact_sum(values.into_iter().inspect(|_| count += 1));
    (count > 0).then(|| sum / count as f64)
}
