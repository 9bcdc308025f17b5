//! Small numerical helpers shared by the samplers and policies.

use rand::Rng;

/// Normalizes log weights into probabilities in place, returning the
/// log normalizer.
pub fn normalize_log_weights(weights: &mut [f64]) -> f64 {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        let p = 1.0 / weights.len() as f64;
        weights.iter_mut().for_each(|w| *w = p);
        return max;
    }
    let mut total = 0.0;
    for w in weights.iter_mut() {
        *w = (*w - max).exp();
        total += *w;
    }
    for w in weights.iter_mut() {
        *w /= total;
    }
    max + total.ln()
}

/// Draws an index proportionally to `exp(log_weights)`. The slice is used as
/// scratch space and holds the normalized probabilities afterwards.
pub fn sample_log_weights<R: Rng + ?Sized>(log_weights: &mut [f64], rng: &mut R) -> usize {
    debug_assert!(!log_weights.is_empty());
    normalize_log_weights(log_weights);
    let u: f64 = rng.random();
    let mut acc = 0.0;
    for (i, p) in log_weights.iter().enumerate() {
        acc += p;
        if u < acc {
            return i;
        }
    }
    // rounding left the cumulative sum a hair below one
    log_weights
        .iter()
        .rposition(|p| *p > 0.0)
        .unwrap_or(log_weights.len() - 1)
}

/// Index of the maximum, ties broken uniformly at random.
pub fn argmax_random_ties<R: Rng + ?Sized>(values: &[f64], rng: &mut R) -> usize {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let ties = values.iter().filter(|v| **v == max).count();
    if ties <= 1 {
        return values.iter().position(|v| *v == max).unwrap_or(0);
    }
    let pick = rng.random_range(0..ties);
    values
        .iter()
        .enumerate()
        .filter(|(_, v)| **v == max)
        .nth(pick)
        .map(|(i, _)| i)
        .expect("pick < ties")
}
