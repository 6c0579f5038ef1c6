//! Corpus construction: ingestion, tokenization, phrase merging, vocabulary
//! indexing and slice/bucket assembly.
//!
//! The input interchange format is line-delimited JSON, one document per
//! line, with fields `id`, `institution`, `date` (ISO-8601), `title`, `text`.

pub mod phrases;
pub mod tokenize;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;
use std::path::Path;

use chrono::{Datelike, NaiveDate};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::calendar::{Bucket, BucketCalendar, SliceCalendar};
use crate::error::{Error, Result};

pub use phrases::{detect_phrases, merge_phrases, Phrase};
pub use tokenize::{tokenize, TokenizerConfig, DEFAULT_STOPWORDS};

/// One document as ingested, before any processing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub institution: String,
    pub date: NaiveDate,
    #[serde(default)]
    pub title: String,
    pub text: String,
}

/// Token inventory with dense ids, ordered by descending corpus frequency
/// then lexicographically.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Vocabulary {
    pub entries: Vec<String>,
    /// Number of documents each token appears in, aligned with `entries`.
    pub document_frequencies: Vec<u32>,
    #[serde(skip)]
    index: HashMap<String, u32>,
}

impl Vocabulary {
    pub(crate) fn new(entries: Vec<String>, document_frequencies: Vec<u32>) -> Self {
        let index = entries
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Vocabulary {
            entries,
            document_frequencies,
            index,
        }
    }

    /// Rebuilds the token→id index after deserialization.
    pub fn rebuild_index(&mut self) {
        self.index = self
            .entries
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id_of(&self, token: &str) -> Option<u32> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: u32) -> &str {
        &self.entries[id as usize]
    }

    /// Stable content hash, recorded by model archives.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for e in &self.entries {
            h.update(e.as_bytes());
            h.update([0u8]);
        }
        hex(&h.finalize())
    }
}

/// A tokenized document mapped onto the vocabulary, with its training slice
/// and default aggregation bucket.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProcessedDocument {
    pub id: String,
    pub institution: String,
    pub date: NaiveDate,
    /// Training slice index, `0..T`.
    pub slice: usize,
    /// Default aggregation bucket (from the assemble-time calendar).
    pub bucket: Bucket,
    /// Sparse token counts, sorted by token id, every count >= 1.
    pub counts: Vec<(u32, u32)>,
    /// Total token count; equals the sum of `counts`.
    pub n_tokens: u32,
}

/// Summary of one training slice.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceInfo {
    pub index: usize,
    pub year: i32,
    pub document_count: usize,
}

/// Options controlling tokenization, phrase detection, vocabulary filtering
/// and calendar assembly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CorpusConfig {
    pub tokenizer: TokenizerConfig,
    /// Minimum bigram count for phrase detection.
    pub phrase_min_count: u64,
    /// NPMI threshold for phrase detection.
    pub phrase_threshold: f64,
    /// Phrase detection on/off.
    pub detect_phrases: bool,
    /// Minimum document frequency (absolute count).
    pub min_df: u32,
    /// Maximum document frequency as a fraction of the corpus.
    pub max_df_fraction: f64,
    /// Default aggregation bucket calendar.
    pub bucket_calendar: BucketCalendar,
}

impl Default for CorpusConfig {
    fn default() -> Self {
        CorpusConfig {
            tokenizer: TokenizerConfig::default(),
            phrase_min_count: 20,
            phrase_threshold: 0.5,
            detect_phrases: true,
            min_df: 1,
            max_df_fraction: 1.0,
            bucket_calendar: BucketCalendar::Quarter,
        }
    }
}

/// The assembled training corpus.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    pub documents: Vec<ProcessedDocument>,
    pub vocabulary: Vocabulary,
    pub slices: Vec<SliceInfo>,
    pub slice_calendar: SliceCalendar,
    pub config: CorpusConfig,
    /// Documents dropped because no token survived filtering.
    pub empty_document_ids: Vec<String>,
}

impl Corpus {
    pub fn num_documents(&self) -> usize {
        self.documents.len()
    }

    pub fn num_slices(&self) -> usize {
        self.slices.len()
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    /// Distinct institutions, sorted.
    pub fn institutions(&self) -> Vec<String> {
        let set: BTreeSet<&str> = self
            .documents
            .iter()
            .map(|d| d.institution.as_str())
            .collect();
        set.into_iter().map(str::to_string).collect()
    }

    /// Hash of the configuration that produced this corpus.
    pub fn config_fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(&self.config).expect("config serializes");
        let mut h = Sha256::new();
        h.update(&bytes);
        hex(&h.finalize())
    }

    /// Restricts the corpus to the given institutions, rebuilding the
    /// vocabulary and slice grid from the surviving documents.
    pub fn filter_institutions(&self, keep: &[String]) -> Result<Corpus> {
        let keep_set: BTreeSet<&str> = keep.iter().map(String::as_str).collect();
        let known: BTreeSet<&str> = self
            .documents
            .iter()
            .map(|d| d.institution.as_str())
            .collect();
        for k in &keep_set {
            if !known.contains(k) {
                return Err(Error::UnknownInstitution((*k).to_string()));
            }
        }
        let streams: Vec<(RawMeta, Vec<String>)> = self
            .documents
            .iter()
            .filter(|d| keep_set.contains(d.institution.as_str()))
            .map(|d| {
                let mut toks = Vec::with_capacity(d.n_tokens as usize);
                for &(id, c) in &d.counts {
                    for _ in 0..c {
                        toks.push(self.vocabulary.token(id).to_string());
                    }
                }
                (
                    RawMeta {
                        id: d.id.clone(),
                        institution: d.institution.clone(),
                        date: d.date,
                    },
                    toks,
                )
            })
            .collect();
        assemble_streams(streams, &self.config, false)
    }
}

/// Reads line-delimited JSON records from a file, or every `*.jsonl` file in
/// a directory. Duplicate ids are a hard error; malformed lines name the
/// offending line.
pub fn ingest(path: &Path) -> Result<Vec<RawDocument>> {
    let mut files = Vec::new();
    if path.is_dir() {
        let mut entries: Vec<_> = std::fs::read_dir(path)
            .map_err(|e| Error::io(path.display().to_string(), e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl" || x == "ndjson"))
            .collect();
        entries.sort();
        files.extend(entries);
    } else {
        files.push(path.to_path_buf());
    }
    if files.is_empty() {
        return Err(Error::MalformedRecord {
            line: 0,
            reason: format!("no .jsonl files under {}", path.display()),
        });
    }

    #[derive(Deserialize)]
    struct Record {
        id: Option<String>,
        institution: Option<String>,
        date: Option<String>,
        #[serde(default)]
        title: String,
        text: Option<String>,
    }

    let mut docs = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for file in files {
        let f = std::fs::File::open(&file).map_err(|e| Error::io(file.display().to_string(), e))?;
        for (lineno, line) in std::io::BufReader::new(f).lines().enumerate() {
            let line = line.map_err(|e| Error::io(file.display().to_string(), e))?;
            let lineno = lineno + 1;
            if line.trim().is_empty() {
                continue;
            }
            let rec: Record =
                serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
                    line: lineno,
                    reason: e.to_string(),
                })?;
            let missing = |field: &str| Error::MalformedRecord {
                line: lineno,
                reason: format!("missing field `{field}`"),
            };
            let id = rec.id.ok_or_else(|| missing("id"))?;
            let institution = rec.institution.ok_or_else(|| missing("institution"))?;
            let date_str = rec.date.ok_or_else(|| missing("date"))?;
            let text = rec.text.ok_or_else(|| missing("text"))?;
            let date = NaiveDate::parse_from_str(&date_str, "%Y-%m-%d").map_err(|e| {
                Error::MalformedRecord {
                    line: lineno,
                    reason: format!("bad date `{date_str}`: {e}"),
                }
            })?;
            if let Some(&first) = seen.get(&id) {
                return Err(Error::DuplicateId {
                    id,
                    first,
                    second: lineno,
                });
            }
            seen.insert(id.clone(), lineno);
            docs.push(RawDocument {
                id,
                institution,
                date,
                title: rec.title,
                text,
            });
        }
    }
    Ok(docs)
}

/// Builds a vocabulary from token streams under document-frequency bounds.
/// Ordering is deterministic: descending corpus frequency, ties broken
/// lexicographically.
pub fn build_vocabulary(
    streams: &[Vec<String>],
    min_df: u32,
    max_df_fraction: f64,
) -> Result<Vocabulary> {
    if streams.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    let n_docs = streams.len() as f64;
    let mut df: BTreeMap<&str, u32> = BTreeMap::new();
    let mut tf: BTreeMap<&str, u64> = BTreeMap::new();
    for stream in streams {
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for tok in stream {
            *tf.entry(tok.as_str()).or_insert(0) += 1;
            seen.insert(tok.as_str());
        }
        for tok in seen {
            *df.entry(tok).or_insert(0) += 1;
        }
    }

    let mut kept: Vec<(&str, u64, u32)> = df
        .iter()
        .filter(|&(_, &d)| d >= min_df && (d as f64) / n_docs <= max_df_fraction)
        .map(|(&t, &d)| (t, tf[t], d))
        .collect();
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));

    let entries: Vec<String> = kept.iter().map(|(t, _, _)| t.to_string()).collect();
    let dfs: Vec<u32> = kept.iter().map(|&(_, _, d)| d).collect();
    Ok(Vocabulary::new(entries, dfs))
}

struct RawMeta {
    id: String,
    institution: String,
    date: NaiveDate,
}

/// Runs the full processing pipeline: tokenize, detect and merge phrases,
/// build the vocabulary, and assign slices and buckets.
pub fn assemble(raw: &[RawDocument], config: &CorpusConfig) -> Result<Corpus> {
    let streams: Vec<(RawMeta, Vec<String>)> = raw
        .par_iter()
        .map(|doc| {
            (
                RawMeta {
                    id: doc.id.clone(),
                    institution: doc.institution.clone(),
                    date: doc.date,
                },
                tokenize(&doc.text, &config.tokenizer),
            )
        })
        .collect();
    assemble_streams(streams, config, config.detect_phrases)
}

fn assemble_streams(
    streams: Vec<(RawMeta, Vec<String>)>,
    config: &CorpusConfig,
    run_phrase_detection: bool,
) -> Result<Corpus> {
    let mut empty_document_ids: Vec<String> = Vec::new();
    let mut kept: Vec<(RawMeta, Vec<String>)> = Vec::new();
    for (meta, toks) in streams {
        if toks.is_empty() {
            empty_document_ids.push(meta.id);
        } else {
            kept.push((meta, toks));
        }
    }
    if kept.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    if run_phrase_detection {
        let tok_only: Vec<Vec<String>> = kept.iter().map(|(_, t)| t.clone()).collect();
        let phrases = detect_phrases(&tok_only, config.phrase_min_count, config.phrase_threshold);
        if !phrases.is_empty() {
            for (_, toks) in kept.iter_mut() {
                *toks = merge_phrases(toks, &phrases);
            }
        }
    }

    let tok_refs: Vec<Vec<String>> = kept.iter().map(|(_, t)| t.clone()).collect();
    let vocabulary = build_vocabulary(&tok_refs, config.min_df, config.max_df_fraction)?;

    let first_year = kept.iter().map(|(m, _)| m.date.year()).min().unwrap();
    let last_year = kept.iter().map(|(m, _)| m.date.year()).max().unwrap();
    let slice_calendar = SliceCalendar::new(first_year, last_year)?;

    let mut documents = Vec::with_capacity(kept.len());
    for (meta, toks) in kept {
        let mut counts: BTreeMap<u32, u32> = BTreeMap::new();
        for tok in &toks {
            if let Some(id) = vocabulary.id_of(tok) {
                *counts.entry(id).or_insert(0) += 1;
            }
        }
        if counts.is_empty() {
            empty_document_ids.push(meta.id);
            continue;
        }
        let n_tokens = counts.values().sum();
        let slice = slice_calendar
            .slice_of(meta.date)
            .expect("date within derived calendar");
        documents.push(ProcessedDocument {
            id: meta.id,
            institution: meta.institution,
            date: meta.date,
            slice,
            bucket: Bucket::of(meta.date, config.bucket_calendar),
            counts: counts.into_iter().collect(),
            n_tokens,
        });
    }
    if documents.is_empty() {
        return Err(Error::EmptyVocabulary);
    }

    let mut per_slice = vec![0usize; slice_calendar.len()];
    for d in &documents {
        per_slice[d.slice] += 1;
    }
    if let Some(empty) = per_slice.iter().position(|&c| c == 0) {
        return Err(Error::EmptySlice {
            label: slice_calendar.year_of_slice(empty).to_string(),
        });
    }

    documents.sort_by(|a, b| (a.date, a.id.as_str()).cmp(&(b.date, b.id.as_str())));
    let slices = per_slice
        .into_iter()
        .enumerate()
        .map(|(index, document_count)| SliceInfo {
            index,
            year: slice_calendar.year_of_slice(index),
            document_count,
        })
        .collect();

    Ok(Corpus {
        documents,
        vocabulary,
        slices,
        slice_calendar,
        config: config.clone(),
        empty_document_ids,
    })
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}
