//! Distribution and ranking of stabilities, and comparison of two families.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::family::StabilityReport;

pub const DEFAULT_BIN_WIDTH: f64 = 0.02;
pub const DEFAULT_FIT_RANGE: (usize, usize) = (51, 180);
pub const TIE_RULE: &str = "ascending-meaning-index";

#[derive(Error, Debug, Clone, PartialEq)]
pub enum RankError {
    #[error("bin width must lie in (0, 1], got {0}")]
    InvalidBinWidth(f64),
    #[error("report has no defined stability values")]
    EmptyReport,
    #[error("fit range {lo}..={hi} is outside ranks 1..={len}")]
    RangeOutOfBounds { lo: usize, hi: usize, len: usize },
    #[error("fit range {lo}..={hi} holds fewer than 2 points")]
    DegenerateRange { lo: usize, hi: usize },
    #[error("only {0} shared meanings with defined stability, need at least 2")]
    InsufficientOverlap(usize),
    #[error("stability values are constant on one side")]
    ZeroVariance,
    #[error("n = {n} must lie in 1..={shared}")]
    InvalidN { n: usize, shared: usize },
}

/// Uniform histogram over `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bin_width: f64,
    /// `counts.len() + 1` edges; the first is 0 and the last is 1.
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

/// Bins the defined stabilities. Bins are half-open `[lo, hi)` except the
/// last, which also holds 1.
pub fn stability_histogram(report: &StabilityReport, bin_width: f64) -> Result<Histogram, RankError> {
    if !(bin_width > 0.0 && bin_width <= 1.0) {
        return Err(RankError::InvalidBinWidth(bin_width));
    }
    // tolerate widths like 0.02 whose reciprocal is not exactly an integer
    let bins = ((1.0 / bin_width) - 1e-9).ceil().max(1.0) as usize;
    let mut edges: Vec<f64> = (0..bins).map(|k| k as f64 * bin_width).collect();
    edges.push(1.0);
    let mut counts = vec![0; bins];
    for (_, s) in report.defined() {
        let mut k = ((s / bin_width).floor().max(0.0) as usize).min(bins - 1);
        while k + 1 < bins && edges[k + 1] <= s {
            k += 1;
        }
        while k > 0 && edges[k] > s {
            k -= 1;
        }
        counts[k] += 1;
    }
    Ok(Histogram {
        bin_width,
        edges,
        counts,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankEntry {
    /// 1-based.
    pub rank: usize,
    pub meaning: usize,
    pub label: String,
    pub stability: f64,
}

/// Stabilities in decreasing order.
#[derive(Debug, Clone, PartialEq)]
pub struct RankCurve {
    pub entries: Vec<RankEntry>,
    /// Labels of meanings without a stability value, in meaning order.
    pub undefined: Vec<String>,
    pub tie_rule: &'static str,
}

impl RankCurve {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.stability).collect()
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.label.as_str())
    }
}

/// Sorts the defined stabilities descending; ties keep meaning order.
pub fn rank_curve(report: &StabilityReport) -> Result<RankCurve, RankError> {
    let mut defined: Vec<(usize, &str, f64)> = report
        .defined()
        .map(|(m, s)| (m.index, m.label.as_str(), s))
        .collect();
    if defined.is_empty() {
        return Err(RankError::EmptyReport);
    }
    defined.sort_by(|a, b| b.2.total_cmp(&a.2).then(a.0.cmp(&b.0)));
    let entries = defined
        .into_iter()
        .enumerate()
        .map(|(k, (meaning, label, stability))| RankEntry {
            rank: k + 1,
            meaning,
            label: label.to_owned(),
            stability,
        })
        .collect();
    let undefined = report
        .meanings
        .iter()
        .filter(|m| m.stability.is_none())
        .map(|m| m.label.clone())
        .collect();
    Ok(RankCurve {
        entries,
        undefined,
        tie_rule: TIE_RULE,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    /// Inclusive rank range used for the fit.
    pub lo: usize,
    pub hi: usize,
    /// `S - (intercept + slope * rank)` for every rank of the curve.
    pub residuals: Vec<f64>,
}

impl LinearFit {
    pub fn predict(&self, rank: usize) -> f64 {
        self.intercept + self.slope * rank as f64
    }
}

/// Ordinary least squares of stability against rank over ranks `lo..=hi`.
pub fn linear_fit(curve: &RankCurve, lo: usize, hi: usize) -> Result<LinearFit, RankError> {
    if lo >= hi {
        return Err(RankError::DegenerateRange { lo, hi });
    }
    if lo < 1 || hi > curve.len() {
        return Err(RankError::RangeOutOfBounds {
            lo,
            hi,
            len: curve.len(),
        });
    }
    let points = &curve.entries[lo - 1..hi];
    let count = points.len() as f64;
    let mean_x = points.iter().map(|e| e.rank as f64).sum::<f64>() / count;
    let mean_y = points.iter().map(|e| e.stability).sum::<f64>() / count;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for e in points {
        let dx = e.rank as f64 - mean_x;
        sxy += dx * (e.stability - mean_y);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residuals = curve
        .entries
        .iter()
        .map(|e| e.stability - (intercept + slope * e.rank as f64))
        .collect();
    Ok(LinearFit {
        slope,
        intercept,
        lo,
        hi,
        residuals,
    })
}

/// Stabilities of two reports matched by meaning label.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchedPairs {
    /// Shared labels in the first report's meaning order.
    pub labels: Vec<String>,
    pub first: Vec<f64>,
    pub second: Vec<f64>,
    /// Labels defined in one report but not the other.
    pub only_first: Vec<String>,
    pub only_second: Vec<String>,
}

/// Pairs up meanings defined in both reports.
pub fn match_reports(a: &StabilityReport, b: &StabilityReport) -> MatchedPairs {
    let b_values: HashMap<&str, f64> = b.defined().map(|(m, s)| (m.label.as_str(), s)).collect();
    let mut matched = MatchedPairs {
        labels: Vec::new(),
        first: Vec::new(),
        second: Vec::new(),
        only_first: Vec::new(),
        only_second: Vec::new(),
    };
    let mut used = HashSet::new();
    for (m, s) in a.defined() {
        match b_values.get(m.label.as_str()) {
            Some(&t) => {
                used.insert(m.label.as_str());
                matched.labels.push(m.label.clone());
                matched.first.push(s);
                matched.second.push(t);
            }
            None => matched.only_first.push(m.label.clone()),
        }
    }
    matched.only_second = b
        .defined()
        .filter(|(m, _)| !used.contains(m.label.as_str()))
        .map(|(m, _)| m.label.clone())
        .collect();
    matched
}

/// Pearson correlation of two equally long samples.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64, RankError> {
    assert_eq!(x.len(), y.len());
    if x.len() < 2 {
        return Err(RankError::InsufficientOverlap(x.len()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(RankError::ZeroVariance);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Pearson correlation of stabilities over label-matched meanings.
pub fn pearson_correlation(a: &StabilityReport, b: &StabilityReport) -> Result<f64, RankError> {
    let matched = match_reports(a, b);
    pearson(&matched.first, &matched.second)
}

fn shared_rankings(a: &StabilityReport, b: &StabilityReport) -> (Vec<String>, Vec<String>) {
    let matched = match_reports(a, b);
    let shared: HashSet<&str> = matched.labels.iter().map(String::as_str).collect();
    let ranked = |report: &StabilityReport| -> Vec<String> {
        let mut defined: Vec<(usize, &str, f64)> = report
            .defined()
            .filter(|(m, _)| shared.contains(m.label.as_str()))
            .map(|(m, s)| (m.index, m.label.as_str(), s))
            .collect();
        defined.sort_by(|x, y| y.2.total_cmp(&x.2).then(x.0.cmp(&y.0)));
        defined.into_iter().map(|(_, l, _)| l.to_owned()).collect()
    };
    (ranked(a), ranked(b))
}

/// `m(n)` for every `n` in `1..=len`: labels common to both top-`n` prefixes.
pub fn prefix_overlaps<T: Eq + std::hash::Hash>(first: &[T], second: &[T]) -> Vec<usize> {
    assert_eq!(first.len(), second.len());
    let mut seen_first = HashSet::new();
    let mut seen_second = HashSet::new();
    let mut common = 0;
    let mut out = Vec::with_capacity(first.len());
    for (x, y) in first.iter().zip(second) {
        if x == y {
            common += 1;
        } else {
            common += usize::from(seen_second.contains(x)) + usize::from(seen_first.contains(y));
        }
        seen_first.insert(x);
        seen_second.insert(y);
        out.push(common);
    }
    out
}

/// Number of shared labels among the top-`n` meanings of both families.
/// Rankings are taken over the meanings defined in both reports.
pub fn top_n_overlap(a: &StabilityReport, b: &StabilityReport, n: usize) -> Result<usize, RankError> {
    let (ra, rb) = shared_rankings(a, b);
    if n < 1 || n > ra.len() {
        return Err(RankError::InvalidN { n, shared: ra.len() });
    }
    let top: HashSet<&String> = ra[..n].iter().collect();
    Ok(rb[..n].iter().filter(|l| top.contains(l)).count())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapPoint {
    pub n: usize,
    pub m: usize,
    /// `m / (n² / M)`.
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OverlapCurve {
    /// Number of shared meanings, `M`.
    pub shared: usize,
    pub points: Vec<OverlapPoint>,
}

/// Top-`n` overlap normalized by the random-coincidence expectation `n²/M`,
/// for every `n` in `1..=M`.
pub fn overlap_ratio(a: &StabilityReport, b: &StabilityReport) -> Result<OverlapCurve, RankError> {
    let (ra, rb) = shared_rankings(a, b);
    if ra.is_empty() {
        return Err(RankError::InvalidN { n: 1, shared: 0 });
    }
    Ok(overlap_curve_from_rankings(&ra, &rb))
}

pub fn overlap_curve_from_rankings<T: Eq + std::hash::Hash>(first: &[T], second: &[T]) -> OverlapCurve {
    let total = first.len();
    let points = prefix_overlaps(first, second)
        .into_iter()
        .enumerate()
        .map(|(k, m)| {
            let n = k + 1;
            OverlapPoint {
                n,
                m,
                p: m as f64 * total as f64 / (n * n) as f64,
            }
        })
        .collect();
    OverlapCurve {
        shared: total,
        points,
    }
}

/// Empirical `m(n)` under independent uniform rankings of `items` labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ShuffleBaseline {
    pub n: usize,
    pub mean: f64,
    pub std_error: f64,
    /// Hypergeometric mean `n²/M`.
    pub expected: f64,
}

/// Shuffles two rankings `trials` times (ChaCha20 seeded with `seed`) and
/// summarises `m(n)` for each requested `n`.
pub fn shuffle_baseline(items: usize, ns: &[usize], trials: usize, seed: u64) -> Vec<ShuffleBaseline> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut first: Vec<usize> = (0..items).collect();
    let mut second = first.clone();
    let mut samples = vec![Vec::with_capacity(trials); ns.len()];
    for _ in 0..trials {
        first.shuffle(&mut rng);
        second.shuffle(&mut rng);
        let overlaps = prefix_overlaps(&first, &second);
        for (slot, &n) in ns.iter().enumerate() {
            samples[slot].push(overlaps[n - 1] as f64);
        }
    }
    ns.iter()
        .zip(samples)
        .map(|(&n, xs)| {
            let count = xs.len() as f64;
            let mean = xs.iter().sum::<f64>() / count;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (count - 1.0);
            ShuffleBaseline {
                n,
                mean,
                std_error: (var / count).sqrt(),
                expected: (n * n) as f64 / items as f64,
            }
        })
        .collect()
}
