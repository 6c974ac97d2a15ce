//! Python bindings for the `lexistab` library.
//!
//! Exposes datasets, stability reports, distance matrices and the simulator
//! as a native `lexistab` module. Library errors surface as `ValueError`.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

use lexistab::family::{self as fam, StabilityConfig, SynonymPolicy};
use lexistab::lexicon::{self, Normalization};
use lexistab::{metric, phylo, rank, sim};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn policy(name: &str) -> PyResult<SynonymPolicy> {
    name.parse().map_err(PyValueError::new_err)
}

fn word(raw: &str) -> PyResult<lexicon::WordForm> {
    lexicon::normalize_word(raw, &Normalization::default())
        .ok_or_else(|| PyValueError::new_err(format!("{raw:?} is empty after normalization")))
}

/// Normalize a raw word; returns None for blank input.
#[pyfunction]
#[pyo3(signature = (raw, fold_diacritics = true))]
fn normalize_word(raw: &str, fold_diacritics: bool) -> Option<String> {
    lexicon::normalize_word(raw, &Normalization { fold_diacritics }).map(|w| w.as_str().to_owned())
}

/// Levenshtein edit count between two strings, counted in code points.
#[pyfunction]
fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    metric::levenshtein(&a, &b)
}

/// Levenshtein distance divided by the longer word's length (after
/// normalization).
#[pyfunction]
fn normalized_distance(a: &str, b: &str) -> PyResult<f64> {
    Ok(metric::normalized_distance(&word(a)?, &word(b)?))
}

#[pyfunction]
fn separation_time(distance: f64, rate: f64) -> PyResult<f64> {
    fam::separation_time(distance, rate).map_err(value_error)
}

#[pyclass(frozen)]
struct Dataset {
    inner: lexicon::FamilyDataset,
}

#[pymethods]
impl Dataset {
    /// Parse the lexicon TSV format.
    #[staticmethod]
    #[pyo3(signature = (text, family = "", fold_diacritics = true))]
    fn from_tsv(text: &str, family: &str, fold_diacritics: bool) -> PyResult<Self> {
        let inner = lexicon::parse_dataset(text, &Normalization { fold_diacritics })
            .map_err(value_error)?
            .with_family(family);
        Ok(Dataset { inner })
    }

    fn to_tsv(&self) -> PyResult<String> {
        lexicon::write_dataset(&self.inner).map_err(value_error)
    }

    #[getter]
    fn family(&self) -> String {
        self.inner.family().to_owned()
    }

    #[getter]
    fn languages(&self) -> Vec<String> {
        self.inner.languages().to_vec()
    }

    #[getter]
    fn meanings(&self) -> Vec<String> {
        self.inner.meanings().to_vec()
    }

    fn entry(&self, language: usize, meaning: usize) -> Option<Vec<String>> {
        self.inner
            .entry(language, meaning)
            .map(|forms| forms.iter().map(|w| w.as_str().to_owned()).collect())
    }

    /// Missing-data summary as `(missing_cells, low_coverage_meanings)`.
    #[pyo3(signature = (min_pairs = 1))]
    fn validate(&self, min_pairs: usize) -> (Vec<(usize, usize)>, Vec<usize>) {
        let report = lexicon::validate(&self.inner, min_pairs);
        (report.missing_cells, report.low_coverage)
    }

    #[pyo3(signature = (synonyms = "first", min_pairs = 1))]
    fn stability(&self, synonyms: &str, min_pairs: usize) -> PyResult<StabilityReport> {
        let config = StabilityConfig {
            policy: policy(synonyms)?,
            min_pairs,
        };
        let inner = fam::stability_all(&self.inner, &config).map_err(value_error)?;
        Ok(StabilityReport { inner })
    }

    #[pyo3(signature = (synonyms = "first"))]
    fn distance_matrix(&self, synonyms: &str) -> PyResult<DistanceMatrix> {
        let inner = fam::distance_matrix(&self.inner, policy(synonyms)?).map_err(value_error)?;
        Ok(DistanceMatrix { inner })
    }

    fn __repr__(&self) -> String {
        format!(
            "Dataset(family={:?}, languages={}, meanings={})",
            self.inner.family(),
            self.inner.n_languages(),
            self.inner.n_meanings()
        )
    }
}

#[pyclass(frozen)]
struct StabilityReport {
    inner: fam::StabilityReport,
}

#[pymethods]
impl StabilityReport {
    #[getter]
    fn labels(&self) -> Vec<String> {
        self.inner.meanings.iter().map(|m| m.label.clone()).collect()
    }

    #[getter]
    fn values(&self) -> Vec<Option<f64>> {
        self.inner.values()
    }

    #[getter]
    fn coverage(&self) -> Vec<usize> {
        self.inner.meanings.iter().map(|m| m.pair_coverage).collect()
    }

    /// `(rank, label, S)` in decreasing stability.
    fn rank_curve(&self) -> PyResult<Vec<(usize, String, f64)>> {
        let curve = rank::rank_curve(&self.inner).map_err(value_error)?;
        Ok(curve
            .entries
            .into_iter()
            .map(|e| (e.rank, e.label, e.stability))
            .collect())
    }

    /// `(slope, intercept, residuals)` of the least-squares line over ranks
    /// `lo..=hi`.
    #[pyo3(signature = (lo = 51, hi = 180))]
    fn linear_fit(&self, lo: usize, hi: usize) -> PyResult<(f64, f64, Vec<f64>)> {
        let curve = rank::rank_curve(&self.inner).map_err(value_error)?;
        let fit = rank::linear_fit(&curve, lo, hi).map_err(value_error)?;
        Ok((fit.slope, fit.intercept, fit.residuals))
    }

    /// `(edges, counts)`.
    #[pyo3(signature = (bin_width = rank::DEFAULT_BIN_WIDTH))]
    fn histogram(&self, bin_width: f64) -> PyResult<(Vec<f64>, Vec<usize>)> {
        let h = rank::stability_histogram(&self.inner, bin_width).map_err(value_error)?;
        Ok((h.edges, h.counts))
    }

    fn pearson(&self, other: PyRef<'_, StabilityReport>) -> PyResult<f64> {
        rank::pearson_correlation(&self.inner, &other.inner).map_err(value_error)
    }

    /// `(n, m(n), p(n))` for every n up to the shared label count.
    fn overlap(&self, other: PyRef<'_, StabilityReport>) -> PyResult<Vec<(usize, usize, f64)>> {
        let curve = rank::overlap_ratio(&self.inner, &other.inner).map_err(value_error)?;
        Ok(curve.points.into_iter().map(|p| (p.n, p.m, p.p)).collect())
    }

    /// Spearman correlation between `rates` and these stabilities.
    fn recovery_score(&self, rates: Vec<f64>) -> PyResult<f64> {
        sim::recovery_score(&rates, &self.inner).map_err(value_error)
    }

    fn __len__(&self) -> usize {
        self.inner.n_meanings()
    }
}

#[pyclass(frozen)]
struct DistanceMatrix {
    inner: fam::LanguageDistanceMatrix,
}

#[pymethods]
impl DistanceMatrix {
    #[new]
    fn new(names: Vec<String>, rows: Vec<Vec<f64>>) -> PyResult<Self> {
        let values = rows.into_iter().flatten().collect();
        let inner = fam::LanguageDistanceMatrix::new(names, values).map_err(value_error)?;
        Ok(DistanceMatrix { inner })
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.inner.len()).map(|i| self.inner.row(i).to_vec()).collect()
    }

    /// UPGMA tree as Newick text.
    fn upgma_newick(&self) -> PyResult<String> {
        Ok(phylo::upgma(&self.inner).map_err(value_error)?.to_newick())
    }
}

/// Simulate a family; returns `(dataset, rates, newick)`.
#[pyfunction]
#[pyo3(signature = (n = 50, m = 200, seed = 7, mu = 0.1, rate_min = 0.05, rate_max = 5.0))]
fn simulate(
    n: usize,
    m: usize,
    seed: u64,
    mu: f64,
    rate_min: f64,
    rate_max: f64,
) -> PyResult<(Dataset, Vec<f64>, String)> {
    let config = sim::SimConfig::log_uniform(n, m, (rate_min, rate_max), mu, seed);
    let result = sim::evolve(&config).map_err(value_error)?;
    let newick = result.tree.to_newick();
    Ok((Dataset { inner: result.dataset }, result.rates, newick))
}

#[pymodule]
#[pyo3(name = "lexistab")]
fn lexistab_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(normalize_word, m)?)?;
    m.add_function(wrap_pyfunction!(levenshtein, m)?)?;
    m.add_function(wrap_pyfunction!(normalized_distance, m)?)?;
    m.add_function(wrap_pyfunction!(separation_time, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_class::<Dataset>()?;
    m.add_class::<StabilityReport>()?;
    m.add_class::<DistanceMatrix>()?;
    Ok(())
}
