//! Corpus ingestion: JSONL loading, vocabulary construction with document
//! frequency filters, and bag-of-words encoding.
//!
//! Ingestion accepts pre-tokenized token lists; tokenization and any
//! language-specific morphology are upstream concerns. Documents sharing a
//! timestamp are pooled into one bag, matching the model's per-timestamp
//! document definition.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{CftmError, Result};
use crate::fbm::TimeGrid;

/// One pre-tokenized document with a resolved numeric timestamp.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RawDocument {
    pub doc_id: String,
    pub timestamp: f64,
    pub tokens: Vec<String>,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum TimestampField {
    Number(f64),
    Date(String),
}

#[derive(Debug, Deserialize)]
struct RawRecord {
    doc_id: Option<String>,
    timestamp: Option<TimestampField>,
    tokens: Option<Vec<String>>,
}

/// Load a JSONL corpus: one record per line with fields `doc_id`,
/// `timestamp` (real number or ISO date), and `tokens`.
///
/// ISO dates are converted to real day offsets from the earliest date in the
/// file. Mixing dates and numbers is rejected.
pub fn load_corpus(path: impl AsRef<Path>) -> Result<Vec<RawDocument>> {
    let file = std::fs::File::open(path.as_ref())?;
    load_corpus_from_reader(file)
}

pub fn load_corpus_from_reader<R: Read>(reader: R) -> Result<Vec<RawDocument>> {
    let reader = BufReader::new(reader);
    let mut numeric: Vec<(String, f64, Vec<String>)> = Vec::new();
    let mut dated: Vec<(String, chrono::NaiveDate, Vec<String>)> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RawRecord = serde_json::from_str(&line)
            .map_err(|e| CftmError::parse(Some(line_no), format!("malformed record: {e}")))?;
        let doc_id = record.doc_id.ok_or_else(|| {
            CftmError::parse(Some(line_no), "record missing doc_id field".to_string())
        })?;
        let tokens = record.tokens.ok_or_else(|| {
            CftmError::parse(
                Some(line_no),
                format!("record missing tokens field (doc_id `{doc_id}`)"),
            )
        })?;
        let timestamp = record.timestamp.ok_or_else(|| {
            CftmError::parse(
                Some(line_no),
                format!("record missing timestamp field (doc_id `{doc_id}`)"),
            )
        })?;
        match timestamp {
            TimestampField::Number(v) if v.is_finite() => numeric.push((doc_id, v, tokens)),
            TimestampField::Number(v) => {
                return Err(CftmError::parse(
                    Some(line_no),
                    format!("non-finite timestamp {v} (doc_id `{doc_id}`)"),
                ))
            }
            TimestampField::Date(s) => {
                let date = chrono::NaiveDate::parse_from_str(&s, "%Y-%m-%d").map_err(|e| {
                    CftmError::parse(
                        Some(line_no),
                        format!("bad ISO date `{s}` (doc_id `{doc_id}`): {e}"),
                    )
                })?;
                dated.push((doc_id, date, tokens));
            }
        }
    }

    match (numeric.is_empty(), dated.is_empty()) {
        (true, true) => Err(CftmError::domain("corpus file contains no records")),
        (false, false) => Err(CftmError::domain(
            "corpus mixes numeric and ISO-date timestamps; use one convention",
        )),
        (false, true) => Ok(numeric
            .into_iter()
            .map(|(doc_id, timestamp, tokens)| RawDocument { doc_id, timestamp, tokens })
            .collect()),
        (true, false) => {
            let earliest = dated.iter().map(|(_, d, _)| *d).min().expect("nonempty");
            Ok(dated
                .into_iter()
                .map(|(doc_id, date, tokens)| RawDocument {
                    doc_id,
                    timestamp: (date - earliest).num_days() as f64,
                    tokens,
                })
                .collect())
        }
    }
}

/// Keep `target` documents at equal index intervals, preserving input order.
/// One plausible reading of equal-interval subsampling; selection by time
/// would be the other.
pub fn subsample_equal_interval(docs: &[RawDocument], target: usize) -> Vec<RawDocument> {
    if target == 0 || docs.is_empty() || target >= docs.len() {
        return docs.to_vec();
    }
    if target == 1 {
        return vec![docs[0].clone()];
    }
    let n = docs.len();
    let mut picked = Vec::with_capacity(target);
    let mut last = usize::MAX;
    for i in 0..target {
        let idx = ((i as f64) * ((n - 1) as f64) / ((target - 1) as f64)).round() as usize;
        if idx != last {
            picked.push(docs[idx].clone());
            last = idx;
        }
    }
    picked
}

/// Token-id maps with document frequencies. Ids are contiguous from 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    id_to_word: Vec<String>,
    doc_frequency: Vec<u32>,
    #[serde(skip)]
    word_to_id: HashMap<String, u32>,
}

impl Vocabulary {
    /// Sorted construction from (token, doc frequency) pairs: descending
    /// frequency, ties by lexicographic token order.
    fn from_counts(mut counts: Vec<(String, u32)>) -> Self {
        counts.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        let mut id_to_word = Vec::with_capacity(counts.len());
        let mut doc_frequency = Vec::with_capacity(counts.len());
        let mut word_to_id = HashMap::with_capacity(counts.len());
        for (i, (token, df)) in counts.into_iter().enumerate() {
            word_to_id.insert(token.clone(), (i + 1) as u32);
            id_to_word.push(token);
            doc_frequency.push(df);
        }
        Vocabulary { id_to_word, doc_frequency, word_to_id }
    }

    /// Placeholder vocabulary `w001..` for synthetic corpora; document
    /// frequencies start at zero and can be recounted from a corpus.
    pub fn synthetic(size: usize) -> Self {
        let id_to_word: Vec<String> = (1..=size).map(|i| format!("w{i:03}")).collect();
        let word_to_id =
            id_to_word.iter().enumerate().map(|(i, w)| (w.clone(), (i + 1) as u32)).collect();
        Vocabulary { id_to_word, doc_frequency: vec![0; size], word_to_id }
    }

    pub fn size(&self) -> usize {
        self.id_to_word.len()
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.word_to_id.get(token).copied()
    }

    pub fn word(&self, id: u32) -> Option<&str> {
        self.id_to_word.get((id as usize).wrapping_sub(1)).map(|s| s.as_str())
    }

    pub fn doc_frequency(&self, id: u32) -> Option<u32> {
        self.doc_frequency.get((id as usize).wrapping_sub(1)).copied()
    }

    /// Rebuild the token -> id map after deserialization.
    pub fn rebuild_index(&mut self) {
        self.word_to_id = self
            .id_to_word
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), (i + 1) as u32))
            .collect();
    }

    /// Three-column CSV: id, token, doc_frequency.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["id", "token", "doc_frequency"]).map_err(crate::fbm::io_from_csv)?;
        for (i, token) in self.id_to_word.iter().enumerate() {
            w.write_record([
                (i + 1).to_string(),
                token.clone(),
                self.doc_frequency[i].to_string(),
            ])
            .map_err(crate::fbm::io_from_csv)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Build a vocabulary with the frequency filters: tokens in fewer than
/// `min_doc_count` documents or in more than `max_doc_fraction` of all
/// documents are excluded. Both bounds are strict exclusions, so a token in
/// exactly `min_doc_count` documents or exactly the fraction is retained.
pub fn build_vocabulary(
    docs: &[RawDocument],
    min_doc_count: u32,
    max_doc_fraction: f64,
) -> Result<Vocabulary> {
    if docs.is_empty() {
        return Err(CftmError::domain("cannot build a vocabulary from zero documents"));
    }
    if !(0.0..=1.0).contains(&max_doc_fraction) {
        return Err(CftmError::domain(format!(
            "max_doc_fraction must lie in [0, 1], got {max_doc_fraction}"
        )));
    }
    let mut df: HashMap<&str, u32> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.tokens.iter().map(|t| t.as_str()).collect();
        seen.sort_unstable();
        seen.dedup();
        for token in seen {
            *df.entry(token).or_insert(0) += 1;
        }
    }
    let max_docs = (max_doc_fraction * docs.len() as f64).floor() as u32;
    let kept: Vec<(String, u32)> = df
        .into_iter()
        .filter(|&(_, count)| count >= min_doc_count && count <= max_docs)
        .map(|(token, count)| (token.to_string(), count))
        .collect();
    if kept.is_empty() {
        return Err(CftmError::domain(format!(
            "vocabulary is empty after frequency filtering \
             (min_doc_count={min_doc_count}, max_doc_fraction={max_doc_fraction}); \
             relax the thresholds"
        )));
    }
    Ok(Vocabulary::from_counts(kept))
}

/// Timestamped bags of token ids. Documents sharing a timestamp are pooled;
/// `doc_counts` records how many were pooled at each grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub grid: TimeGrid,
    /// One multiset of 1-based token ids per grid point.
    pub bags: Vec<Vec<u32>>,
    pub doc_counts: Vec<usize>,
}

impl Corpus {
    pub fn total_tokens(&self) -> usize {
        self.bags.iter().map(|b| b.len()).sum()
    }

    /// Largest token id present, 0 when every bag is empty.
    pub fn max_token_id(&self) -> u32 {
        self.bags.iter().flat_map(|b| b.iter().copied()).max().unwrap_or(0)
    }

    /// Recover token strings per timestamp via the vocabulary.
    pub fn decode(&self, vocab: &Vocabulary) -> Vec<Vec<String>> {
        self.bags
            .iter()
            .map(|bag| {
                bag.iter()
                    .map(|&id| vocab.word(id).unwrap_or("<unknown>").to_string())
                    .collect()
            })
            .collect()
    }

    /// JSONL with one pooled record per timestamp.
    pub fn write_jsonl<W: std::io::Write>(&self, mut out: W, vocab: &Vocabulary) -> Result<()> {
        for (i, bag) in self.bags.iter().enumerate() {
            let record = RawDocument {
                doc_id: format!("t{i:04}"),
                timestamp: self.grid.points()[i],
                tokens: bag
                    .iter()
                    .map(|&id| vocab.word(id).unwrap_or("<unknown>").to_string())
                    .collect(),
            };
            serde_json::to_writer(&mut out, &record)
                .map_err(|e| CftmError::numerical(format!("jsonl write failed: {e}")))?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// Encode documents against a vocabulary: out-of-vocabulary tokens are
/// dropped, documents sharing a timestamp are pooled, and the grid is
/// shifted so it starts at 0.
pub fn encode_corpus(docs: &[RawDocument], vocab: &Vocabulary) -> Result<Corpus> {
    if docs.is_empty() {
        return Err(CftmError::domain("cannot encode an empty document list"));
    }
    let mut stamps: Vec<f64> = docs.iter().map(|d| d.timestamp).collect();
    stamps.sort_by(|a, b| a.partial_cmp(b).expect("finite timestamps"));
    stamps.dedup();
    let offset = stamps[0];
    let grid = TimeGrid::new(stamps.iter().map(|s| s - offset).collect())?;

    let index: HashMap<u64, usize> =
        stamps.iter().enumerate().map(|(i, s)| (s.to_bits(), i)).collect();
    let mut bags: Vec<Vec<u32>> = vec![Vec::new(); stamps.len()];
    let mut doc_counts = vec![0usize; stamps.len()];
    for doc in docs {
        let slot = index[&doc.timestamp.to_bits()];
        doc_counts[slot] += 1;
        for token in &doc.tokens {
            if let Some(id) = vocab.id(token) {
                bags[slot].push(id);
            }
        }
    }
    for (i, bag) in bags.iter().enumerate() {
        if bag.is_empty() {
            log::warn!(
                "timestamp {} has no in-vocabulary tokens; bag retained empty",
                grid.points()[i]
            );
        }
    }
    Ok(Corpus { grid, bags, doc_counts })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(id: &str, ts: f64, tokens: &[&str]) -> RawDocument {
        RawDocument {
            doc_id: id.to_string(),
            timestamp: ts,
            tokens: tokens.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn load_numeric_timestamps() {
        let data = r#"{"doc_id":"a","timestamp":0,"tokens":["x"]}
{"doc_id":"b","timestamp":1,"tokens":["y"]}
{"doc_id":"c","timestamp":2,"tokens":["z"]}"#;
        let docs = load_corpus_from_reader(data.as_bytes()).unwrap();
        let stamps: Vec<f64> = docs.iter().map(|d| d.timestamp).collect();
        assert_eq!(stamps, vec![0.0, 1.0, 2.0]);
    }

    #[test]
    fn load_iso_dates_as_day_offsets() {
        let data = r#"{"doc_id":"a","timestamp":"2011-03-08","tokens":["x"]}
{"doc_id":"b","timestamp":"2011-03-09","tokens":["x"]}
{"doc_id":"c","timestamp":"2011-03-10","tokens":["x"]}
{"doc_id":"d","timestamp":"2011-03-11","tokens":["x"]}
{"doc_id":"e","timestamp":"2011-03-12","tokens":["x"]}"#;
        let docs = load_corpus_from_reader(data.as_bytes()).unwrap();
        let stamps: Vec<f64> = docs.iter().map(|d| d.timestamp).collect();
        assert_eq!(stamps, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn missing_tokens_names_doc_id() {
        let data = r#"{"doc_id":"bad-doc","timestamp":0}"#;
        let err = load_corpus_from_reader(data.as_bytes()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bad-doc"), "error should name the doc_id: {msg}");
        assert!(msg.contains("line 1"), "error should carry the line: {msg}");
    }

    #[test]
    fn empty_file_is_domain_error() {
        assert!(load_corpus_from_reader("".as_bytes()).is_err());
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let data = "{\"doc_id\":\"a\",\"timestamp\":0,\"tokens\":[\"x\"]}\nnot json";
        let err = load_corpus_from_reader(data.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    fn ten_docs_with_token_in(n: usize) -> Vec<RawDocument> {
        // Ten documents; "probe" appears in the first n of them. A filler
        // token in exactly 5 docs keeps the vocabulary nonempty.
        (0..10)
            .map(|i| {
                let mut tokens = vec![format!("filler{}", i % 2)];
                if i < n {
                    tokens.push("probe".to_string());
                }
                RawDocument { doc_id: format!("d{i}"), timestamp: i as f64, tokens }
            })
            .collect()
    }

    #[test]
    fn vocabulary_excludes_below_min_count() {
        // "fewer than 5" excludes a token in 4 documents.
        let vocab = build_vocabulary(&ten_docs_with_token_in(4), 5, 0.5).unwrap();
        assert!(vocab.id("probe").is_none());
    }

    #[test]
    fn vocabulary_excludes_above_max_fraction() {
        // "more than 50%" excludes a token in 6 of 10 documents.
        let vocab = build_vocabulary(&ten_docs_with_token_in(6), 5, 0.5).unwrap();
        assert!(vocab.id("probe").is_none());
    }

    #[test]
    fn vocabulary_keeps_both_boundaries() {
        // Exactly 5 of 10 documents satisfies both inclusive-retain bounds.
        let vocab = build_vocabulary(&ten_docs_with_token_in(5), 5, 0.5).unwrap();
        assert!(vocab.id("probe").is_some());
    }

    #[test]
    fn vocabulary_ids_ordered_by_frequency_then_token() {
        let docs = vec![
            doc("a", 0.0, &["common", "beta", "alpha"]),
            doc("b", 1.0, &["common", "beta", "alpha"]),
            doc("c", 2.0, &["common", "beta"]),
        ];
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        assert_eq!(vocab.id("beta"), Some(1)); // df 3, tie with common -> lexicographic
        assert_eq!(vocab.id("common"), Some(2));
        assert_eq!(vocab.id("alpha"), Some(3)); // df 2
        assert_eq!(vocab.doc_frequency(1), Some(3));
    }

    #[test]
    fn empty_vocabulary_advises_thresholds() {
        let docs = vec![doc("a", 0.0, &["only"])];
        let err = build_vocabulary(&docs, 5, 0.5).unwrap_err();
        assert!(err.to_string().contains("relax"), "{err}");
    }

    #[test]
    fn encode_pools_documents_per_timestamp() {
        let docs = vec![
            doc("a", 1.0, &["a", "a"]),
            doc("b", 1.0, &["b"]),
            doc("c", 0.0, &["a"]),
        ];
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        let corpus = encode_corpus(&docs, &vocab).unwrap();
        assert_eq!(corpus.grid.points(), &[0.0, 1.0]);
        assert_eq!(corpus.doc_counts, vec![1, 2]);
        let a = vocab.id("a").unwrap();
        let b = vocab.id("b").unwrap();
        let mut pooled = corpus.bags[1].clone();
        pooled.sort_unstable();
        let mut expected = vec![a, a, b];
        expected.sort_unstable();
        assert_eq!(pooled, expected);
    }

    #[test]
    fn encode_drops_out_of_vocabulary_tokens() {
        let docs = vec![doc("a", 0.0, &["kept", "kept"]), doc("b", 1.0, &["dropped"])];
        let keep_only = build_vocabulary(&[doc("x", 0.0, &["kept"])], 1, 1.0).unwrap();
        let corpus = encode_corpus(&docs, &keep_only).unwrap();
        assert_eq!(corpus.bags[0].len(), 2);
        assert!(corpus.bags[1].is_empty());
        assert_eq!(corpus.doc_counts[1], 1);
    }

    #[test]
    fn encode_normalizes_grid_offset() {
        let docs = vec![doc("a", 5.0, &["x"]), doc("b", 7.5, &["x"])];
        let vocab = build_vocabulary(&docs, 1, 1.0).unwrap();
        let corpus = encode_corpus(&docs, &vocab).unwrap();
        assert_eq!(corpus.grid.points(), &[0.0, 2.5]);
    }

    #[test]
    fn round_trip_reproduces_filtered_multisets() {
        let docs = vec![
            doc("a", 0.0, &["keep1", "keep2", "rare"]),
            doc("b", 1.0, &["keep1", "keep1"]),
            doc("c", 2.0, &["keep2", "keep1"]),
        ];
        // min count 2 filters out "rare".
        let vocab = build_vocabulary(&docs, 2, 1.0).unwrap();
        let corpus = encode_corpus(&docs, &vocab).unwrap();
        let decoded = corpus.decode(&vocab);
        let filter = |tokens: &[&str]| {
            let mut v: Vec<String> = tokens
                .iter()
                .filter(|t| vocab.id(t).is_some())
                .map(|t| t.to_string())
                .collect();
            v.sort();
            v
        };
        for (i, expected) in
            [filter(&["keep1", "keep2", "rare"]), filter(&["keep1", "keep1"]), filter(&["keep2", "keep1"])]
                .iter()
                .enumerate()
        {
            let mut got = decoded[i].clone();
            got.sort();
            assert_eq!(&got, expected);
        }
    }

    #[test]
    fn token_order_does_not_affect_encoding() {
        let fwd = vec![doc("a", 0.0, &["x", "y", "z"])];
        let rev = vec![doc("a", 0.0, &["z", "y", "x"])];
        let vocab = build_vocabulary(&fwd, 1, 1.0).unwrap();
        let mut c1 = encode_corpus(&fwd, &vocab).unwrap().bags[0].clone();
        let mut c2 = encode_corpus(&rev, &vocab).unwrap().bags[0].clone();
        c1.sort_unstable();
        c2.sort_unstable();
        assert_eq!(c1, c2);
    }

    #[test]
    fn subsample_is_index_based_and_ordered() {
        let docs: Vec<RawDocument> =
            (0..10).map(|i| doc(&format!("d{i}"), i as f64, &["x"])).collect();
        let picked = subsample_equal_interval(&docs, 3);
        let ids: Vec<&str> = picked.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(ids, vec!["d0", "d5", "d9"]);
        assert_eq!(subsample_equal_interval(&docs, 20).len(), 10);
    }
}
