//! Automated lexicostatistics over Swadesh-style word lists.
//!
//! The pipeline compares words with the same meaning across the languages of
//! a family using the Levenshtein distance divided by the length of the longer
//! word. From those word distances it derives:
//!
//! * a stability index per meaning (one minus the family-wide mean distance),
//! * a lexical distance per language pair (mean over shared meanings),
//! * rank, histogram and cross-family overlap statistics of the stabilities,
//! * an average-linkage (UPGMA) tree of the languages, written as Newick.
//!
//! [`sim`] provides a synthetic lexical-evolution process with known
//! per-meaning replacement rates, used to check that stability recovers the
//! rate ordering end to end.
//!
//! ```
//! use lexistab::lexicon::{parse_dataset, Normalization};
//! use lexistab::family::{stability_all, StabilityConfig};
//!
//! let tsv = "meaning\tItalian\tFrench\nHAND\tmano\tmain\n";
//! let dataset = parse_dataset(tsv, &Normalization::default()).unwrap();
//! let report = stability_all(&dataset, &StabilityConfig::default()).unwrap();
//! assert_eq!(report.meanings[0].stability, Some(0.5));
//! ```

pub mod family;
pub mod lexicon;
pub mod metric;
pub mod numeric;
pub mod phylo;
pub mod rank;
pub mod sim;

pub use family::{
    distance_matrix, language_distance, separation_time, stability, stability_all,
    LanguageDistanceMatrix, MeaningStability, StabilityConfig, StabilityReport, SynonymPolicy,
};
pub use lexicon::{
    normalize_word, parse_dataset, validate, write_dataset, FamilyDataset, Normalization, WordForm,
};
pub use metric::{levenshtein, normalized_distance};
pub use phylo::{upgma, PhyloTree};
pub use rank::{linear_fit, overlap_ratio, pearson_correlation, rank_curve, stability_histogram};
pub use sim::{evolve, random_tree, recovery_score, SimConfig, SimResult};
