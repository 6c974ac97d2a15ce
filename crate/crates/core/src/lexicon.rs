//! Word-list ingestion: normalization of word forms and the dataset TSV format.
//!
//! The TSV layout is one header row (`meaning` followed by one language name
//! per column) and one row per meaning (label followed by one cell per
//! language). A cell holds a comma- or semicolon-separated list of synonyms;
//! an empty cell is missing data.

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// First cell of the header row written by [`write_dataset`].
pub const HEADER_KEY: &str = "meaning";

#[derive(Error, Debug, Clone, PartialEq, Eq)]
pub enum IngestError {
    #[error("duplicate language name {name:?} (columns {first} and {second})")]
    DuplicateLanguage {
        name: String,
        first: usize,
        second: usize,
    },
    #[error("duplicate meaning label {label:?} (line {line})")]
    DuplicateMeaning { label: String, line: usize },
    #[error("line {line} has {found} cells, header has {expected}")]
    RaggedRow {
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("dataset needs at least 2 languages and 1 meaning (got {languages} and {meanings})")]
    EmptyDataset { languages: usize, meanings: usize },
    #[error("blank {what} at line {line}")]
    BlankName { what: &'static str, line: usize },
    #[error("entry table has {found} cells, expected {expected}")]
    ShapeMismatch { found: usize, expected: usize },
    #[error("entry for language {language}, meaning {meaning} is an empty form list")]
    EmptyEntry { language: usize, meaning: usize },
    #[error("{what} {text:?} cannot be written as TSV")]
    Unrepresentable { what: &'static str, text: String },
}

/// Normalization pipeline applied to every raw word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Normalization {
    /// Strip combining marks after canonical decomposition ("šunō" → "suno").
    pub fold_diacritics: bool,
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization {
            fold_diacritics: true,
        }
    }
}

/// A normalized, non-empty word. Its length is the number of Unicode scalar
/// values.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordForm {
    text: String,
    chars: Box<[char]>,
}

impl WordForm {
    pub fn as_str(&self) -> &str {
        &self.text
    }

    pub fn chars(&self) -> &[char] {
        &self.chars
    }

    pub fn len(&self) -> usize {
        self.chars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chars.is_empty()
    }
}

impl fmt::Display for WordForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Canonical composition, lowercasing, optional diacritic folding, trimming.
/// Returns `None` when nothing is left.
pub fn normalize_word(raw: &str, pipeline: &Normalization) -> Option<WordForm> {
    let composed: String = raw.nfc().collect();
    let lowered = composed.to_lowercase();
    let folded: String = if pipeline.fold_diacritics {
        lowered.nfd().filter(|c| !is_combining_mark(*c)).nfc().collect()
    } else {
        lowered.nfc().collect()
    };
    let trimmed = folded.trim();
    if trimmed.is_empty() {
        return None;
    }
    Some(WordForm {
        text: trimmed.to_owned(),
        chars: trimmed.chars().collect(),
    })
}

/// Uppercased, trimmed meaning label used for matching across families.
pub fn canonical_label(raw: &str) -> String {
    raw.trim().to_uppercase()
}

/// Languages × meanings table of optional synonym lists.
///
/// Immutable once built; every present entry holds at least one form.
#[derive(Debug, Clone, PartialEq)]
pub struct FamilyDataset {
    family: String,
    languages: Vec<String>,
    meanings: Vec<String>,
    // language-major: entries[language * meanings.len() + meaning]
    entries: Vec<Option<Vec<WordForm>>>,
}

impl FamilyDataset {
    /// Builds a dataset from a language-major entry table.
    ///
    /// Meaning labels are canonicalized to uppercase before the uniqueness
    /// check.
    pub fn new(
        family: impl Into<String>,
        languages: Vec<String>,
        meanings: Vec<String>,
        entries: Vec<Option<Vec<WordForm>>>,
    ) -> Result<Self, IngestError> {
        let meanings: Vec<String> = meanings.iter().map(|m| canonical_label(m)).collect();
        let languages: Vec<String> = languages.iter().map(|l| l.trim().to_owned()).collect();
        if languages.len() < 2 || meanings.is_empty() {
            return Err(IngestError::EmptyDataset {
                languages: languages.len(),
                meanings: meanings.len(),
            });
        }
        for (i, name) in languages.iter().enumerate() {
            if name.is_empty() {
                return Err(IngestError::BlankName {
                    what: "language name",
                    line: 1,
                });
            }
            if let Some(j) = languages[..i].iter().position(|other| other == name) {
                return Err(IngestError::DuplicateLanguage {
                    name: name.clone(),
                    first: j,
                    second: i,
                });
            }
        }
        let mut seen = HashSet::new();
        for (i, label) in meanings.iter().enumerate() {
            if label.is_empty() {
                return Err(IngestError::BlankName {
                    what: "meaning label",
                    line: i + 2,
                });
            }
            if !seen.insert(label.as_str()) {
                return Err(IngestError::DuplicateMeaning {
                    label: label.clone(),
                    line: i + 2,
                });
            }
        }
        let expected = languages.len() * meanings.len();
        if entries.len() != expected {
            return Err(IngestError::ShapeMismatch {
                found: entries.len(),
                expected,
            });
        }
        for (k, entry) in entries.iter().enumerate() {
            if matches!(entry, Some(forms) if forms.is_empty()) {
                return Err(IngestError::EmptyEntry {
                    language: k / meanings.len(),
                    meaning: k % meanings.len(),
                });
            }
        }
        Ok(FamilyDataset {
            family: family.into(),
            languages,
            meanings,
            entries,
        })
    }

    pub fn family(&self) -> &str {
        &self.family
    }

    pub fn with_family(mut self, family: impl Into<String>) -> Self {
        self.family = family.into();
        self
    }

    pub fn languages(&self) -> &[String] {
        &self.languages
    }

    pub fn meanings(&self) -> &[String] {
        &self.meanings
    }

    pub fn n_languages(&self) -> usize {
        self.languages.len()
    }

    pub fn n_meanings(&self) -> usize {
        self.meanings.len()
    }

    /// Synonym list for `(language, meaning)`; `None` when missing or out of
    /// bounds.
    pub fn entry(&self, language: usize, meaning: usize) -> Option<&[WordForm]> {
        if language >= self.languages.len() || meaning >= self.meanings.len() {
            return None;
        }
        self.entries[language * self.meanings.len() + meaning].as_deref()
    }

    pub fn meaning_index(&self, label: &str) -> Option<usize> {
        let label = canonical_label(label);
        self.meanings.iter().position(|m| *m == label)
    }

    /// Same data with languages reordered: language `k` of the result is
    /// language `order[k]` of `self`.
    pub fn permute_languages(&self, order: &[usize]) -> Self {
        assert_eq!(order.len(), self.languages.len());
        let m = self.meanings.len();
        let mut entries = Vec::with_capacity(self.entries.len());
        for &l in order {
            entries.extend_from_slice(&self.entries[l * m..(l + 1) * m]);
        }
        FamilyDataset {
            family: self.family.clone(),
            languages: order.iter().map(|&l| self.languages[l].clone()).collect(),
            meanings: self.meanings.clone(),
            entries,
        }
    }
}

fn split_cell(cell: &str, pipeline: &Normalization) -> Option<Vec<WordForm>> {
    let forms: Vec<WordForm> = cell
        .split([',', ';'])
        .filter_map(|raw| normalize_word(raw, pipeline))
        .collect();
    (!forms.is_empty()).then_some(forms)
}

/// Parses the dataset TSV. The family identifier is left empty; set it with
/// [`FamilyDataset::with_family`].
pub fn parse_dataset(source: &str, pipeline: &Normalization) -> Result<FamilyDataset, IngestError> {
    let source = source.strip_prefix('\u{feff}').unwrap_or(source);
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(i, line)| (i + 1, line.strip_suffix('\r').unwrap_or(line)))
        .filter(|(_, line)| !line.trim().is_empty());

    let Some((_, header)) = lines.next() else {
        return Err(IngestError::EmptyDataset {
            languages: 0,
            meanings: 0,
        });
    };
    let columns: Vec<&str> = header.split('\t').collect();
    let languages: Vec<String> = columns[1..].iter().map(|s| s.trim().to_owned()).collect();
    for (i, name) in languages.iter().enumerate() {
        if name.is_empty() {
            return Err(IngestError::BlankName {
                what: "language name",
                line: 1,
            });
        }
        if let Some(j) = languages[..i].iter().position(|other| other == name) {
            return Err(IngestError::DuplicateLanguage {
                name: name.clone(),
                first: j,
                second: i,
            });
        }
    }

    let mut meanings = Vec::new();
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (line_no, line) in lines {
        let cells: Vec<&str> = line.split('\t').collect();
        if cells.len() != columns.len() {
            return Err(IngestError::RaggedRow {
                line: line_no,
                found: cells.len(),
                expected: columns.len(),
            });
        }
        let label = canonical_label(cells[0]);
        if label.is_empty() {
            return Err(IngestError::BlankName {
                what: "meaning label",
                line: line_no,
            });
        }
        if !seen.insert(label.clone()) {
            return Err(IngestError::DuplicateMeaning {
                label,
                line: line_no,
            });
        }
        meanings.push(label);
        rows.push(
            cells[1..]
                .iter()
                .map(|cell| split_cell(cell, pipeline))
                .collect::<Vec<_>>(),
        );
    }
    if languages.len() < 2 || meanings.is_empty() {
        return Err(IngestError::EmptyDataset {
            languages: languages.len(),
            meanings: meanings.len(),
        });
    }

    // rows are meaning-major; the dataset stores language-major
    let m = meanings.len();
    let mut entries = vec![None; languages.len() * m];
    for (meaning, row) in rows.into_iter().enumerate() {
        for (language, entry) in row.into_iter().enumerate() {
            entries[language * m + meaning] = entry;
        }
    }
    FamilyDataset::new("", languages, meanings, entries)
}

fn check_writable(what: &'static str, text: &str, extra: &[char]) -> Result<(), IngestError> {
    if text.contains(['\t', '\n', '\r']) || text.contains(extra) || text.trim() != text {
        return Err(IngestError::Unrepresentable {
            what,
            text: text.to_owned(),
        });
    }
    Ok(())
}

/// Writes the dataset TSV; synonyms are joined with `", "`.
///
/// Fails when a name or form contains a character the format reserves.
pub fn write_dataset(dataset: &FamilyDataset) -> Result<String, IngestError> {
    let mut out = String::from(HEADER_KEY);
    for name in dataset.languages() {
        check_writable("language name", name, &[])?;
        out.push('\t');
        out.push_str(name);
    }
    out.push('\n');
    for (meaning, label) in dataset.meanings().iter().enumerate() {
        check_writable("meaning label", label, &[])?;
        out.push_str(label);
        for language in 0..dataset.n_languages() {
            out.push('\t');
            if let Some(forms) = dataset.entry(language, meaning) {
                for (k, form) in forms.iter().enumerate() {
                    check_writable("word form", form.as_str(), &[',', ';'])?;
                    if k > 0 {
                        out.push_str(", ");
                    }
                    out.push_str(form.as_str());
                }
            }
        }
        out.push('\n');
    }
    Ok(out)
}

/// Coverage summary produced by [`validate`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ValidationReport {
    pub n_languages: usize,
    pub n_meanings: usize,
    pub missing_total: usize,
    pub missing_per_language: Vec<usize>,
    pub missing_per_meaning: Vec<usize>,
    /// Every missing `(language, meaning)` cell, language-major.
    pub missing_cells: Vec<(usize, usize)>,
    /// Defined unordered language pairs per meaning.
    pub pair_coverage: Vec<usize>,
    /// Meanings whose pair coverage is below the threshold.
    pub low_coverage: Vec<usize>,
}

/// Reports dimensions and missing data; meanings with fewer than `min_pairs`
/// defined language pairs are flagged.
pub fn validate(dataset: &FamilyDataset, min_pairs: usize) -> ValidationReport {
    let n = dataset.n_languages();
    let m = dataset.n_meanings();
    let mut missing_per_language = vec![0; n];
    let mut missing_per_meaning = vec![0; m];
    let mut missing_cells = Vec::new();
    for language in 0..n {
        for meaning in 0..m {
            if dataset.entry(language, meaning).is_none() {
                missing_per_language[language] += 1;
                missing_per_meaning[meaning] += 1;
                missing_cells.push((language, meaning));
            }
        }
    }
    let pair_coverage: Vec<usize> = missing_per_meaning
        .iter()
        .map(|&missing| {
            let k = n - missing;
            k * k.saturating_sub(1) / 2
        })
        .collect();
    let low_coverage = pair_coverage
        .iter()
        .enumerate()
        .filter(|(_, &pairs)| pairs < min_pairs)
        .map(|(i, _)| i)
        .collect();
    ValidationReport {
        n_languages: n,
        n_meanings: m,
        missing_total: missing_cells.len(),
        missing_per_language,
        missing_per_meaning,
        missing_cells,
        pair_coverage,
        low_coverage,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn norm(raw: &str) -> Option<String> {
        normalize_word(raw, &Normalization::default()).map(|w| w.as_str().to_owned())
    }

    #[test]
    fn normalize_examples() {
        assert_eq!(norm("Hand "), Some("hand".into()));
        assert_eq!(norm("šunō"), Some("suno".into()));
        assert_eq!(norm("   "), None);
        assert_eq!(norm(""), None);
        let keep = Normalization {
            fold_diacritics: false,
        };
        assert_eq!(normalize_word("ŠUNŌ", &keep).unwrap().as_str(), "šunō");
    }

    #[test]
    fn composition_fixes_length() {
        // "é" as e + U+0301 composes to a single scalar value
        let keep = Normalization {
            fold_diacritics: false,
        };
        let w = normalize_word("e\u{301}te", &keep).unwrap();
        assert_eq!(w.len(), 3);
        assert_eq!(w.as_str(), "\u{e9}te");
    }

    #[test]
    fn internal_spaces_and_hyphens_are_kept() {
        let w = normalize_word(" Tok-Pisin word ", &Normalization::default()).unwrap();
        assert_eq!(w.as_str(), "tok-pisin word");
        assert_eq!(w.len(), 14);
    }

    #[test]
    fn parse_minimal() {
        let ds = parse_dataset("meaning\tItalian\tFrench\nHAND\tmano\tmain\n", &Normalization::default())
            .unwrap();
        assert_eq!(ds.n_languages(), 2);
        assert_eq!(ds.n_meanings(), 1);
        assert_eq!(ds.entry(0, 0).unwrap()[0].as_str(), "mano");
        assert_eq!(ds.entry(1, 0).unwrap()[0].as_str(), "main");
    }

    #[test]
    fn parse_synonyms_and_missing() {
        let src = "meaning\tA\tB\tC\nSTONE\tstone, rock\t\tpierre;caillou\n";
        let ds = parse_dataset(src, &Normalization::default()).unwrap();
        let forms: Vec<&str> = ds.entry(0, 0).unwrap().iter().map(|w| w.as_str()).collect();
        assert_eq!(forms, ["stone", "rock"]);
        assert!(ds.entry(1, 0).is_none());
        assert_eq!(ds.entry(2, 0).unwrap().len(), 2);
    }

    #[test]
    fn separator_only_cell_is_missing() {
        let ds = parse_dataset("meaning\tA\tB\nX\t , ;\tx\n", &Normalization::default()).unwrap();
        assert!(ds.entry(0, 0).is_none());
    }

    #[test]
    fn parse_errors() {
        let n = Normalization::default();
        assert_eq!(
            parse_dataset("meaning\tA\tB\nHAND\tmano\n", &n),
            Err(IngestError::RaggedRow {
                line: 2,
                found: 2,
                expected: 3
            })
        );
        assert!(matches!(
            parse_dataset("meaning\tA\tA\nHAND\tx\ty\n", &n),
            Err(IngestError::DuplicateLanguage { .. })
        ));
        assert!(matches!(
            parse_dataset("meaning\tA\tB\nhand\tx\ty\nHAND\tx\ty\n", &n),
            Err(IngestError::DuplicateMeaning { line: 3, .. })
        ));
        assert!(matches!(
            parse_dataset("meaning\tA\nHAND\tx\n", &n),
            Err(IngestError::EmptyDataset { languages: 1, .. })
        ));
        assert!(matches!(
            parse_dataset("meaning\tA\tB\n", &n),
            Err(IngestError::EmptyDataset { meanings: 0, .. })
        ));
        assert!(matches!(parse_dataset("", &n), Err(IngestError::EmptyDataset { .. })));
    }

    #[test]
    fn crlf_and_bom() {
        let ds = parse_dataset("\u{feff}meaning\tA\tB\r\nSUN\tsol\tsole\r\n", &Normalization::default())
            .unwrap();
        assert_eq!(ds.languages(), ["A", "B"]);
        assert_eq!(ds.entry(1, 0).unwrap()[0].as_str(), "sole");
    }

    #[test]
    fn constructor_rejects_empty_form_list() {
        let err = FamilyDataset::new(
            "f",
            vec!["A".into(), "B".into()],
            vec!["X".into()],
            vec![Some(vec![]), None],
        );
        assert_eq!(
            err,
            Err(IngestError::EmptyEntry {
                language: 0,
                meaning: 0
            })
        );
    }

    #[test]
    fn validate_complete() {
        let ds = parse_dataset("meaning\tA\tB\nX\ta\tb\n", &Normalization::default()).unwrap();
        let report = validate(&ds, 1);
        assert_eq!((report.n_languages, report.n_meanings), (2, 1));
        assert_eq!(report.missing_total, 0);
        assert!(report.low_coverage.is_empty());
    }

    #[test]
    fn validate_lists_missing_cell() {
        let ds = parse_dataset("meaning\tA\tB\nX\ta\tb\nY\t\tc\n", &Normalization::default()).unwrap();
        let report = validate(&ds, 1);
        assert_eq!(report.missing_cells, [(0, 1)]);
        assert_eq!(report.missing_per_language, [1, 0]);
        assert_eq!(report.missing_per_meaning, [0, 1]);
    }

    #[test]
    fn validate_flags_single_language_meaning() {
        let ds = parse_dataset(
            "meaning\tA\tB\tC\tD\tE\nX\ta\tb\tc\td\te\nY\ty\t\t\t\t\n",
            &Normalization::default(),
        )
        .unwrap();
        let report = validate(&ds, 1);
        assert_eq!(report.pair_coverage, [10, 0]);
        assert_eq!(report.low_coverage, [1]);
    }

    #[test]
    fn writer_rejects_reserved_characters() {
        let form = normalize_word("a,b", &Normalization::default()).unwrap();
        let ds = FamilyDataset::new(
            "",
            vec!["A".into(), "B".into()],
            vec!["X".into()],
            vec![Some(vec![form]), None],
        )
        .unwrap();
        assert!(matches!(write_dataset(&ds), Err(IngestError::Unrepresentable { .. })));
    }

    fn cell_strategy() -> impl Strategy<Value = String> {
        prop_oneof![
            Just(String::new()),
            proptest::collection::vec("[A-Za-zàéšō \\-]{1,8}", 1..3).prop_map(|v| v.join(", ")),
        ]
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent(raw in "\\PC{0,12}", fold in any::<bool>()) {
            let pipeline = Normalization { fold_diacritics: fold };
            if let Some(once) = normalize_word(&raw, &pipeline) {
                let twice = normalize_word(once.as_str(), &pipeline).unwrap();
                prop_assert_eq!(once, twice);
            }
        }

        #[test]
        fn tsv_round_trip(
            n in 2usize..5,
            m in 1usize..5,
            cells in proptest::collection::vec(cell_strategy(), 16..=16),
        ) {
            let mut src = String::from("meaning");
            for l in 0..n {
                src.push_str(&format!("\tLang {l}"));
            }
            src.push('\n');
            for i in 0..m {
                src.push_str(&format!("M{i}"));
                for l in 0..n {
                    src.push('\t');
                    src.push_str(&cells[(i * n + l) % cells.len()]);
                }
                src.push('\n');
            }
            let pipeline = Normalization::default();
            let parsed = parse_dataset(&src, &pipeline).unwrap();
            for l in 0..n {
                for i in 0..m {
                    if let Some(forms) = parsed.entry(l, i) {
                        prop_assert!(!forms.is_empty());
                    }
                }
            }
            let written = write_dataset(&parsed).unwrap();
            let reparsed = parse_dataset(&written, &pipeline).unwrap();
            prop_assert_eq!(parsed, reparsed);
        }
    }
}
