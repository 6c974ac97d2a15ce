//! Family-level metrics: per-meaning stability, language-pair lexical
//! distance, the full distance matrix and the separation-time transform.
//!
//! All averages are taken over defined pairs only and reduced with
//! [`exact_sum`](crate::numeric::exact_sum), so results are bit-identical
//! regardless of how the loops are split across rayon workers.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::lexicon::{FamilyDataset, WordForm};
use crate::metric::normalized_distance;
use crate::numeric::exact_mean;

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MetricsError {
    #[error("{what} index {index} out of bounds (size {len})")]
    IndexOutOfBounds {
        what: &'static str,
        index: usize,
        len: usize,
    },
    #[error("a language cannot be compared with itself (index {0})")]
    SameLanguage(usize),
    #[error("languages {first:?} and {second:?} share no defined meaning")]
    NoSharedMeanings { first: String, second: String },
    #[error("distance {0} is saturated; separation time is infinite")]
    SaturatedDistance(f64),
    #[error("rate must be positive and finite, got {0}")]
    NonPositiveRate(f64),
    #[error("distance {0} is outside [0, 1]")]
    InvalidDistance(f64),
}

/// How to compare two cells that hold several synonyms.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash)]
pub enum SynonymPolicy {
    /// Compare the first listed form of each cell.
    #[default]
    First,
    /// Minimum distance over all form pairs.
    Min,
}

impl FromStr for SynonymPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "first" => Ok(SynonymPolicy::First),
            "min" => Ok(SynonymPolicy::Min),
            other => Err(format!("unknown synonym policy {other:?} (expected first or min)")),
        }
    }
}

impl fmt::Display for SynonymPolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SynonymPolicy::First => "first",
            SynonymPolicy::Min => "min",
        })
    }
}

fn check_index(what: &'static str, index: usize, len: usize) -> Result<(), MetricsError> {
    if index >= len {
        return Err(MetricsError::IndexOutOfBounds { what, index, len });
    }
    Ok(())
}

fn cell_distance(a: &[WordForm], b: &[WordForm], policy: SynonymPolicy) -> f64 {
    match policy {
        SynonymPolicy::First => normalized_distance(&a[0], &b[0]),
        SynonymPolicy::Min => a
            .iter()
            .flat_map(|x| b.iter().map(move |y| normalized_distance(x, y)))
            .fold(f64::INFINITY, f64::min),
    }
}

/// Distance between the words of two languages for one meaning; `None` when
/// either entry is missing.
pub fn item_pair_distance(
    dataset: &FamilyDataset,
    first: usize,
    second: usize,
    meaning: usize,
    policy: SynonymPolicy,
) -> Result<Option<f64>, MetricsError> {
    check_index("language", first, dataset.n_languages())?;
    check_index("language", second, dataset.n_languages())?;
    check_index("meaning", meaning, dataset.n_meanings())?;
    if first == second {
        return Err(MetricsError::SameLanguage(first));
    }
    Ok(match (dataset.entry(first, meaning), dataset.entry(second, meaning)) {
        (Some(a), Some(b)) => Some(cell_distance(a, b, policy)),
        _ => None,
    })
}

/// Stability of one meaning: one minus the mean distance over all unordered
/// language pairs where both words are defined. Returns the value (absent when
/// no pair is defined) and the number of pairs used.
pub fn stability(
    dataset: &FamilyDataset,
    meaning: usize,
    policy: SynonymPolicy,
) -> Result<(Option<f64>, usize), MetricsError> {
    check_index("meaning", meaning, dataset.n_meanings())?;
    let n = dataset.n_languages();
    let mut distances = Vec::with_capacity(n * (n - 1) / 2);
    for first in 0..n {
        let Some(a) = dataset.entry(first, meaning) else {
            continue;
        };
        for second in first + 1..n {
            if let Some(b) = dataset.entry(second, meaning) {
                distances.push(cell_distance(a, b, policy));
            }
        }
    }
    let coverage = distances.len();
    Ok((exact_mean(distances).map(|mean| 1.0 - mean), coverage))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StabilityConfig {
    pub policy: SynonymPolicy,
    /// Meanings with fewer defined language pairs get no stability value.
    pub min_pairs: usize,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            policy: SynonymPolicy::First,
            min_pairs: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeaningStability {
    pub index: usize,
    pub label: String,
    pub stability: Option<f64>,
    pub pair_coverage: usize,
}

/// Per-meaning stabilities of one family, in dataset meaning order.
#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    pub family: String,
    /// Unknown when the report was read back from a stability table.
    pub n_languages: Option<usize>,
    pub meanings: Vec<MeaningStability>,
}

impl StabilityReport {
    pub fn n_meanings(&self) -> usize {
        self.meanings.len()
    }

    /// Meanings that carry a stability value, as `(entry, S)`.
    pub fn defined(&self) -> impl Iterator<Item = (&MeaningStability, f64)> {
        self.meanings
            .iter()
            .filter_map(|m| m.stability.map(|s| (m, s)))
    }

    pub fn values(&self) -> Vec<Option<f64>> {
        self.meanings.iter().map(|m| m.stability).collect()
    }
}

/// [`stability`] for every meaning. Meanings are evaluated in parallel; the
/// report is in meaning order.
pub fn stability_all(
    dataset: &FamilyDataset,
    config: &StabilityConfig,
) -> Result<StabilityReport, MetricsError> {
    let meanings = (0..dataset.n_meanings())
        .into_par_iter()
        .map(|i| {
            let (s, coverage) = stability(dataset, i, config.policy)?;
            let min_pairs = config.min_pairs.max(1);
            Ok(MeaningStability {
                index: i,
                label: dataset.meanings()[i].clone(),
                stability: s.filter(|_| coverage >= min_pairs),
                pair_coverage: coverage,
            })
        })
        .collect::<Result<Vec<_>, MetricsError>>()?;
    Ok(StabilityReport {
        family: dataset.family().to_owned(),
        n_languages: Some(dataset.n_languages()),
        meanings,
    })
}

/// Lexical distance between two languages: mean word distance over the
/// meanings defined in both. Returns the distance and that meaning count.
pub fn language_distance(
    dataset: &FamilyDataset,
    first: usize,
    second: usize,
    policy: SynonymPolicy,
) -> Result<(f64, usize), MetricsError> {
    check_index("language", first, dataset.n_languages())?;
    check_index("language", second, dataset.n_languages())?;
    if first == second {
        return Err(MetricsError::SameLanguage(first));
    }
    let distances: Vec<f64> = (0..dataset.n_meanings())
        .filter_map(
            |i| match (dataset.entry(first, i), dataset.entry(second, i)) {
                (Some(a), Some(b)) => Some(cell_distance(a, b, policy)),
                _ => None,
            },
        )
        .collect();
    let coverage = distances.len();
    match exact_mean(distances) {
        Some(d) => Ok((d, coverage)),
        None => Err(MetricsError::NoSharedMeanings {
            first: dataset.languages()[first].clone(),
            second: dataset.languages()[second].clone(),
        }),
    }
}

#[derive(Error, Debug, Clone, PartialEq)]
pub enum MatrixError {
    #[error("matrix needs at least 2 labels, got {0}")]
    TooSmall(usize),
    #[error("{labels} labels but {values} values")]
    Shape { labels: usize, values: usize },
}

/// Square matrix of language distances, row-major, with row/column labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LanguageDistanceMatrix {
    names: Vec<String>,
    values: Vec<f64>,
}

impl LanguageDistanceMatrix {
    /// Wraps row-major values. Structural checks (symmetry, diagonal) are left
    /// to consumers such as [`upgma`](crate::phylo::upgma).
    pub fn new(names: Vec<String>, values: Vec<f64>) -> Result<Self, MatrixError> {
        if names.len() < 2 {
            return Err(MatrixError::TooSmall(names.len()));
        }
        if values.len() != names.len() * names.len() {
            return Err(MatrixError::Shape {
                labels: names.len(),
                values: values.len(),
            });
        }
        Ok(LanguageDistanceMatrix { names, values })
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.names.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let n = self.names.len();
        &self.values[row * n..(row + 1) * n]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Element-wise transform, keeping labels.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        LanguageDistanceMatrix {
            names: self.names.clone(),
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Row/column `k` of the result is row/column `order[k]` of `self`.
    pub fn permuted(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.len());
        let names = order.iter().map(|&i| self.names[i].clone()).collect();
        let values = order
            .iter()
            .flat_map(|&i| order.iter().map(move |&j| (i, j)))
            .map(|(i, j)| self.get(i, j))
            .collect();
        LanguageDistanceMatrix { names, values }
    }
}

/// All pairwise [`language_distance`] values. Pairs are computed in
/// parallel; on failure the error for the first offending pair (in row-major
/// order) is returned.
pub fn distance_matrix(
    dataset: &FamilyDataset,
    policy: SynonymPolicy,
) -> Result<LanguageDistanceMatrix, MetricsError> {
    let n = dataset.n_languages();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
        .collect();
    let distances = pairs
        .par_iter()
        .map(|&(i, j)| language_distance(dataset, i, j, policy).map(|(d, _)| d))
        .collect::<Result<Vec<f64>, MetricsError>>()?;
    let mut values = vec![0.0; n * n];
    for (&(i, j), d) in pairs.iter().zip(distances) {
        values[i * n + j] = d;
        values[j * n + i] = d;
    }
    Ok(LanguageDistanceMatrix {
        names: dataset.languages().to_vec(),
        values,
    })
}

/// Separation time `T = -ln(1 - d) / (2 r)` for lexical distance `d` and
/// per-lineage replacement rate `r`.
pub fn separation_time(distance: f64, rate: f64) -> Result<f64, MetricsError> {
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(MetricsError::NonPositiveRate(rate));
    }
    if !(0.0..=1.0).contains(&distance) {
        return Err(MetricsError::InvalidDistance(distance));
    }
    if distance >= 1.0 {
        return Err(MetricsError::SaturatedDistance(distance));
    }
    Ok(-(-distance).ln_1p() / (2.0 * rate))
}
