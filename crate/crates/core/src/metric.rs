//! Levenshtein distance and its length-normalized variant.

use crate::lexicon::WordForm;

/// Minimum number of single-element insertions, deletions and substitutions
/// turning `a` into `b`. Two rolling rows, `O(min(|a|, |b|))` memory.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut cur = vec![0; short.len() + 1];
    for (i, x) in long.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let substitution = prev[j] + usize::from(x != y);
            let deletion = prev[j + 1] + 1;
            let insertion = cur[j] + 1;
            cur[j + 1] = substitution.min(deletion).min(insertion);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[short.len()]
}

/// Levenshtein distance divided by the length of the longer sequence, in
/// `[0, 1]`. Two empty sequences are at distance 0.
pub fn normalized_levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 0.0;
    }
    levenshtein(a, b) as f64 / longest as f64
}

/// Normalized distance between two word forms, counted in Unicode scalar
/// values.
pub fn normalized_distance(a: &WordForm, b: &WordForm) -> f64 {
    normalized_levenshtein(a.chars(), b.chars())
}
