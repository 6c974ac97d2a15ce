//! Synthetic lexical evolution with known per-meaning replacement rates.
//!
//! A root lexicon of random words is propagated down a random tree. Along a
//! branch of length `t`, the word of meaning `i` is wholly replaced with
//! probability `1 - exp(-rate_i * t)`; otherwise each character is
//! independently substituted with probability `1 - exp(-mutation_rate * t)`.
//! The leaves become a [`FamilyDataset`] whose stabilities should order the
//! meanings inversely to their rates.
//!
//! Randomness comes from ChaCha20 ([`RNG_ALGORITHM`]). The tree uses stream 0
//! of the seed; meaning `i` uses stream `i + 1`, so meanings can evolve in
//! parallel without changing the result.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::family::StabilityReport;
use crate::lexicon::{normalize_word, FamilyDataset, Normalization};
use crate::phylo::{Node, PhyloTree};

pub const RNG_ALGORITHM: &str = "ChaCha20";
const ALPHABET: &[u8; 26] = b"abcdefghijklmnopqrstuvwxyz";

#[derive(Error, Debug, Clone, PartialEq)]
pub enum SimError {
    #[error("need at least 2 leaves, got {0}")]
    InvalidLeafCount(usize),
    #[error("invalid simulation config: {0}")]
    InvalidConfig(String),
    #[error("{truth} rates but {report} meanings in the report")]
    LengthMismatch { truth: usize, report: usize },
    #[error("only {0} meanings with a stability value, need at least 2")]
    InsufficientData(usize),
    #[error("rates or stabilities are constant")]
    ZeroVariance,
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Yule tree: the root splits into two lineages, then a uniformly chosen
/// lineage splits after each exponential waiting time (rate = lineage count)
/// until `n_leaves` exist, followed by one more waiting time. Heights
/// are rescaled so the root sits at 1. Leaves are named `L00`, `L01`, … in
/// left-to-right order.
pub fn random_tree(n_leaves: usize, seed: u64) -> Result<PhyloTree, SimError> {
    if n_leaves < 2 {
        return Err(SimError::InvalidLeafCount(n_leaves));
    }
    let mut rng = stream_rng(seed, 0);
    // times grow from the root (0) towards the present
    let mut times = vec![0.0f64];
    let mut children: Vec<Vec<usize>> = vec![Vec::new()];
    let mut lineages = vec![0usize];
    let mut now = 0.0;
    loop {
        let pick = rng.random_range(0..lineages.len());
        let parent = lineages[pick];
        times[parent] = now;
        let kids = [times.len(), times.len() + 1];
        for _ in kids {
            times.push(now);
            children.push(Vec::new());
        }
        children[parent] = kids.to_vec();
        lineages.splice(pick..=pick, kids);
        if lineages.len() >= n_leaves {
            break;
        }
        now += -(1.0 - rng.random::<f64>()).ln() / lineages.len() as f64;
    }
    let present = now - (1.0 - rng.random::<f64>()).ln() / lineages.len() as f64;

    // renumber in pre-order so leaf names follow the drawing order
    let mut order = Vec::with_capacity(times.len());
    let mut stack = vec![0usize];
    while let Some(id) = stack.pop() {
        order.push(id);
        stack.extend(children[id].iter().rev());
    }
    let mut new_id = vec![0; times.len()];
    for (k, &old) in order.iter().enumerate() {
        new_id[old] = k;
    }
    let width = (n_leaves - 1).to_string().len().max(2);
    let mut leaf_count = 0;
    let nodes = order
        .iter()
        .map(|&old| {
            if children[old].is_empty() {
                let name = format!("L{leaf_count:0width$}");
                leaf_count += 1;
                Node::leaf(name)
            } else {
                Node {
                    name: None,
                    height: (present - times[old]) / present,
                    parent: None,
                    children: children[old].iter().map(|&c| new_id[c]).collect(),
                }
            }
        })
        .collect();
    PhyloTree::from_nodes(nodes, 0).map_err(|e| SimError::InvalidConfig(e.to_string()))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub n_languages: usize,
    /// Per-meaning replacement rates; the meaning count is `rates.len()`.
    pub rates: Vec<f64>,
    /// Per-character substitution rate.
    pub mutation_rate: f64,
    /// Inclusive word length range.
    pub word_len: (usize, usize),
    /// Uses the first `alphabet_size` letters `a..z`.
    pub alphabet_size: usize,
    pub seed: u64,
}

impl SimConfig {
    /// Rates drawn log-uniformly from `[lo, hi]` on stream `u64::MAX` of
    /// `seed`; word lengths 3..=9 over 26 letters.
    pub fn log_uniform(
        n_languages: usize,
        n_meanings: usize,
        (lo, hi): (f64, f64),
        mutation_rate: f64,
        seed: u64,
    ) -> Self {
        SimConfig {
            n_languages,
            rates: log_uniform_rates(n_meanings, lo, hi, seed),
            mutation_rate,
            word_len: (3, 9),
            alphabet_size: 26,
            seed,
        }
    }

    pub fn n_meanings(&self) -> usize {
        self.rates.len()
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |msg: String| Err(SimError::InvalidConfig(msg));
        if self.n_languages < 2 {
            return Err(SimError::InvalidLeafCount(self.n_languages));
        }
        if self.rates.is_empty() {
            return bad("need at least one meaning".into());
        }
        if let Some(r) = self.rates.iter().find(|r| !(r.is_finite() && **r >= 0.0)) {
            return bad(format!("replacement rate {r} is not finite and non-negative"));
        }
        if !(self.mutation_rate.is_finite() && self.mutation_rate >= 0.0) {
            return bad(format!("mutation rate {} is not finite and non-negative", self.mutation_rate));
        }
        let (lo, hi) = self.word_len;
        if lo < 1 || lo > hi {
            return bad(format!("word length range {lo}..={hi} is empty"));
        }
        if !(2..=26).contains(&self.alphabet_size) {
            return bad(format!("alphabet size {} outside 2..=26", self.alphabet_size));
        }
        Ok(())
    }

    /// `key=value` lines describing the run, including the generator name.
    pub fn describe(&self) -> String {
        format!(
            "rng={RNG_ALGORITHM}\nseed={}\nlanguages={}\nmeanings={}\nmutation_rate={}\nword_len={}..={}\nalphabet_size={}\n",
            self.seed,
            self.n_languages,
            self.n_meanings(),
            self.mutation_rate,
            self.word_len.0,
            self.word_len.1,
            self.alphabet_size
        )
    }
}

pub fn log_uniform_rates(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, u64::MAX);
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|_| (a + (b - a) * rng.random::<f64>()).exp()).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimResult {
    pub dataset: FamilyDataset,
    /// Replacement rate of each meaning.
    pub rates: Vec<f64>,
    pub tree: PhyloTree,
}

impl SimResult {
    /// `label,rate` table, one row per meaning.
    pub fn truth_csv(&self) -> String {
        let mut out = String::from("label,rate\n");
        for (label, rate) in self.dataset.meanings().iter().zip(&self.rates) {
            out.push_str(&format!("{label},{rate}\n"));
        }
        out
    }
}

fn random_word(rng: &mut ChaCha20Rng, config: &SimConfig) -> Vec<u8> {
    let len = rng.random_range(config.word_len.0..=config.word_len.1);
    (0..len)
        .map(|_| ALPHABET[rng.random_range(0..config.alphabet_size)])
        .collect()
}

fn evolve_meaning(config: &SimConfig, tree: &PhyloTree, meaning: usize) -> Vec<Vec<u8>> {
    let mut rng = stream_rng(config.seed, meaning as u64 + 1);
    let rate = config.rates[meaning];
    let mut words: Vec<Vec<u8>> = vec![Vec::new(); tree.nodes().len()];
    words[tree.root()] = random_word(&mut rng, config);
    for id in tree.preorder() {
        let Some(parent) = tree.node(id).parent else {
            continue;
        };
        let t = tree.branch_length(id);
        let p_replace = -(-rate * t).exp_m1();
        let p_mutate = -(-config.mutation_rate * t).exp_m1();
        words[id] = if rng.random::<f64>() < p_replace {
            random_word(&mut rng, config)
        } else {
            let mut word = words[parent].clone();
            for c in word.iter_mut() {
                if rng.random::<f64>() < p_mutate {
                    // a different letter, uniformly
                    let current = (*c - b'a') as usize;
                    let mut k = rng.random_range(0..config.alphabet_size - 1);
                    if k >= current {
                        k += 1;
                    }
                    *c = ALPHABET[k];
                }
            }
            word
        };
    }
    tree.leaves().into_iter().map(|leaf| std::mem::take(&mut words[leaf])).collect()
}

/// Runs the evolution process. Identical configs give identical results.
pub fn evolve(config: &SimConfig) -> Result<SimResult, SimError> {
    config.validate()?;
    let tree = random_tree(config.n_languages, config.seed)?;
    let m = config.n_meanings();
    let per_meaning: Vec<Vec<Vec<u8>>> = (0..m)
        .into_par_iter()
        .map(|i| evolve_meaning(config, &tree, i))
        .collect();

    let languages: Vec<String> = tree.leaf_names().iter().map(|s| s.to_string()).collect();
    let width = m.to_string().len().max(3);
    let meanings: Vec<String> = (1..=m).map(|i| format!("M{i:0width$}")).collect();
    let pipeline = Normalization::default();
    let mut entries = Vec::with_capacity(languages.len() * m);
    for language in 0..languages.len() {
        for words in &per_meaning {
            let text = std::str::from_utf8(&words[language]).expect("ascii word");
            entries.push(Some(vec![normalize_word(text, &pipeline).expect("non-empty word")]));
        }
    }
    let dataset = FamilyDataset::new("simulated", languages, meanings, entries)
        .map_err(|e| SimError::InvalidConfig(e.to_string()))?;
    Ok(SimResult {
        dataset,
        rates: config.rates.clone(),
        tree,
    })
}

/// Monte Carlo mean normalized distance between two independent words from
/// the config's word generator.
pub fn independent_word_distance(config: &SimConfig, samples: usize, seed: u64) -> f64 {
    let mut rng = stream_rng(seed, u64::MAX - 1);
    let total: f64 = (0..samples)
        .map(|_| {
            let a = random_word(&mut rng, config);
            let b = random_word(&mut rng, config);
            crate::metric::normalized_levenshtein(&a, &b)
        })
        .sum();
    total / samples as f64
}

/// 1-based ranks with ties given their average rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mid = (start + end + 1) as f64 / 2.0;
        for &k in &order[start..end] {
            ranks[k] = mid;
        }
        start = end;
    }
    ranks
}

/// Spearman correlation (Pearson on midranks).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<f64, SimError> {
    if x.len() < 2 {
        return Err(SimError::InsufficientData(x.len()));
    }
    crate::rank::pearson(&midranks(x), &midranks(y)).map_err(|_| SimError::ZeroVariance)
}

/// Spearman correlation between the true replacement rates and the recovered
/// stabilities, over meanings with a stability value. A faithful estimator
/// gives a strongly negative score.
pub fn recovery_score(truth: &[f64], report: &StabilityReport) -> Result<f64, SimError> {
    if truth.len() != report.n_meanings() {
        return Err(SimError::LengthMismatch {
            truth: truth.len(),
            report: report.n_meanings(),
        });
    }
    let (rates, values): (Vec<f64>, Vec<f64>) = truth
        .iter()
        .zip(&report.meanings)
        .filter_map(|(&r, m)| m.stability.map(|s| (r, s)))
        .unzip();
    spearman(&rates, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::family::{stability_all, MeaningStability, StabilityConfig};

    fn report_of(values: &[Option<f64>]) -> StabilityReport {
        StabilityReport {
            family: "t".into(),
            n_languages: None,
            meanings: values
                .iter()
                .enumerate()
                .map(|(i, &s)| MeaningStability {
                    index: i,
                    label: format!("M{i}"),
                    stability: s,
                    pair_coverage: 1,
                })
                .collect(),
        }
    }

    #[test]
    fn tree_shapes() {
        let two = random_tree(2, 1).unwrap();
        assert_eq!(two.n_leaves(), 2);
        assert_eq!(two.n_internal(), 1);
        assert_eq!(two.height(), 1.0);
        for n in [3, 7, 32, 50] {
            let tree = random_tree(n, n as u64).unwrap();
            assert_eq!(tree.n_leaves(), n);
            assert_eq!(tree.n_internal(), n - 1);
            assert!((tree.height() - 1.0).abs() < 1e-12);
        }
        assert_eq!(random_tree(1, 0), Err(SimError::InvalidLeafCount(1)));
    }

    #[test]
    fn tree_is_deterministic() {
        assert_eq!(random_tree(20, 9).unwrap(), random_tree(20, 9).unwrap());
        assert_ne!(random_tree(20, 9).unwrap(), random_tree(20, 10).unwrap());
    }

    #[test]
    fn zero_rates_conserve_root_word() {
        let config = SimConfig {
            n_languages: 6,
            rates: vec![0.0; 5],
            mutation_rate: 0.0,
            word_len: (3, 9),
            alphabet_size: 26,
            seed: 3,
        };
        let result = evolve(&config).unwrap();
        let report = stability_all(&result.dataset, &StabilityConfig::default()).unwrap();
        assert!(report.meanings.iter().all(|m| m.stability == Some(1.0)));
    }

    #[test]
    fn evolve_is_deterministic() {
        let config = SimConfig::log_uniform(8, 12, (0.05, 5.0), 0.1, 42);
        assert_eq!(evolve(&config).unwrap(), evolve(&config).unwrap());
    }

    #[test]
    fn config_validation() {
        let mut config = SimConfig::log_uniform(4, 3, (0.05, 5.0), 0.1, 1);
        config.rates[1] = f64::INFINITY;
        assert!(matches!(evolve(&config), Err(SimError::InvalidConfig(_))));
        let mut config = SimConfig::log_uniform(4, 3, (0.05, 5.0), 0.1, 1);
        config.alphabet_size = 1;
        assert!(evolve(&config).is_err());
        let config = SimConfig::log_uniform(1, 3, (0.05, 5.0), 0.1, 1);
        assert_eq!(evolve(&config), Err(SimError::InvalidLeafCount(1)));
    }

    #[test]
    fn log_uniform_rates_stay_in_range() {
        let rates = log_uniform_rates(1000, 0.05, 5.0, 7);
        assert!(rates.iter().all(|&r| (0.05..=5.0).contains(&r)));
        let below_half = rates.iter().filter(|&&r| r < 0.5).count();
        // log-uniform puts half the mass below the geometric midpoint 0.5
        assert!((400..600).contains(&below_half));
    }

    #[test]
    fn midranks_average_ties() {
        assert_eq!(midranks(&[3.0, 1.0, 3.0, 2.0]), [3.5, 1.0, 3.5, 2.0]);
    }

    #[test]
    fn recovery_extremes() {
        let truth = [0.1, 0.5, 1.0, 2.0, 4.0];
        let perfect = report_of(&[Some(0.9), Some(0.7), Some(0.5), Some(0.3), Some(0.1)]);
        assert!((recovery_score(&truth, &perfect).unwrap() + 1.0).abs() < 1e-12);
        let short = report_of(&[Some(0.9)]);
        assert!(matches!(
            recovery_score(&truth, &short),
            Err(SimError::LengthMismatch { .. })
        ));
        let sparse = report_of(&[Some(0.9), None, None, None, None]);
        assert_eq!(recovery_score(&truth, &sparse), Err(SimError::InsufficientData(1)));
        let flat = report_of(&[Some(0.5); 5]);
        assert_eq!(recovery_score(&truth, &flat), Err(SimError::ZeroVariance));
    }

    #[test]
    fn recovery_null_case() {
        let m = 2000;
        let truth = log_uniform_rates(m, 0.05, 5.0, 1);
        let noise = log_uniform_rates(m, 0.05, 5.0, 2);
        let report = report_of(&noise.iter().map(|&v| Some(v)).collect::<Vec<_>>());
        let rho = recovery_score(&truth, &report).unwrap();
        assert!(rho.abs() < 3.0 / (m as f64).sqrt(), "rho = {rho}");
    }

    #[test]
    fn saturated_replacement_matches_random_baseline() {
        let config = SimConfig {
            n_languages: 30,
            rates: vec![1e6; 60],
            mutation_rate: 0.0,
            word_len: (3, 9),
            alphabet_size: 26,
            seed: 11,
        };
        let result = evolve(&config).unwrap();
        let report = stability_all(&result.dataset, &StabilityConfig::default()).unwrap();
        let mean_s = report.defined().map(|(_, s)| s).sum::<f64>() / 60.0;
        let baseline = 1.0 - independent_word_distance(&config, 20_000, 5);
        assert!((mean_s - baseline).abs() < 0.01, "{mean_s} vs {baseline}");
    }
}
