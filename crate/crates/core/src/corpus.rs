//! Document ingestion, tokenization and user profiles.
//!
//! Text is normalized by dropping every non-alphanumeric character and
//! lowercasing what remains. No stemming and no stopword removal are applied.
//! Documents shorter than a minimum character count, and users with too few
//! surviving documents, are filtered at load time.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default minimum document length, in characters.
pub const DEFAULT_MIN_CHARS: usize = 500;
/// Default minimum number of documents per user profile.
pub const DEFAULT_MIN_DOCS: usize = 50;

fn is_token_char(c: char) -> bool {
    c.is_alphabetic() || c.is_ascii_digit()
}

/// Splits text into maximal runs of alphanumeric characters, lowercased.
///
/// Alphabetic means Unicode alphabetic; only ASCII digits count as digits.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for c in text.chars() {
        if is_token_char(c) {
            // Some lowercase mappings expand into combining marks; those are
            // not token characters and are dropped so tokens re-tokenize to
            // themselves.
            current.extend(c.to_lowercase().filter(|&l| is_token_char(l)));
        } else if !current.is_empty() {
            tokens.push(std::mem::take(&mut current));
        }
    }
    if !current.is_empty() {
        tokens.push(current);
    }
    tokens
}

#[derive(Clone, Debug, PartialEq)]
pub struct Document {
    pub id: String,
    pub raw_text: String,
    pub tokens: Vec<String>,
}

impl Document {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>) -> Self {
        let raw_text = raw_text.into();
        let tokens = tokenize(&raw_text);
        Document {
            id: id.into(),
            raw_text,
            tokens,
        }
    }
}

/// An immutable, tokenized document collection with its vocabulary.
///
/// Vocabulary indices are assigned in order of first appearance.
#[derive(Clone, Debug)]
pub struct Corpus {
    documents: Vec<Document>,
    terms: Vec<String>,
    vocabulary: HashMap<String, usize>,
    doc_freq: Vec<usize>,
    term_count: Vec<usize>,
    id_index: HashMap<String, usize>,
}

impl Corpus {
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        let mut id_index = HashMap::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if id_index.insert(doc.id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate document id {:?}", doc.id)));
            }
        }
        let mut terms = Vec::new();
        let mut vocabulary = HashMap::new();
        let mut doc_freq = Vec::new();
        let mut term_count = Vec::new();
        let mut seen = HashSet::new();
        for doc in &documents {
            seen.clear();
            for tok in &doc.tokens {
                let idx = match vocabulary.get(tok) {
                    Some(&idx) => idx,
                    None => {
                        let idx = terms.len();
                        terms.push(tok.clone());
                        vocabulary.insert(tok.clone(), idx);
                        doc_freq.push(0);
                        term_count.push(0);
                        idx
                    }
                };
                term_count[idx] += 1;
                if seen.insert(idx) {
                    doc_freq[idx] += 1;
                }
            }
        }
        Ok(Corpus {
            documents,
            terms,
            vocabulary,
            doc_freq,
            term_count,
            id_index,
        })
    }

    /// Tokenizes `(id, text)` pairs into a corpus without any length filter.
    pub fn from_texts<I, S, T>(texts: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, T)>,
        S: Into<String>,
        T: Into<String>,
    {
        Corpus::new(texts.into_iter().map(|(id, text)| Document::new(id, text)).collect())
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn document(&self, id: &str) -> Option<&Document> {
        self.id_index.get(id).map(|&i| &self.documents[i])
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.id_index.get(id).copied()
    }

    pub fn contains(&self, id: &str) -> bool {
        self.id_index.contains_key(id)
    }

    pub fn doc_ids(&self) -> Vec<String> {
        self.documents.iter().map(|d| d.id.clone()).collect()
    }

    pub fn vocab_size(&self) -> usize {
        self.terms.len()
    }

    /// Terms in vocabulary-index order.
    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.vocabulary.get(term).copied()
    }

    /// Number of documents containing `term` (0 for unknown terms).
    pub fn doc_freq(&self, term: &str) -> usize {
        self.term_index(term).map_or(0, |i| self.doc_freq[i])
    }

    pub fn doc_freq_by_index(&self, idx: usize) -> usize {
        self.doc_freq[idx]
    }

    /// Total occurrences of the term at `idx` across the corpus.
    pub fn term_count_by_index(&self, idx: usize) -> usize {
        self.term_count[idx]
    }

    /// Token sequence of document `doc` as vocabulary indices.
    pub fn token_ids(&self, doc: usize) -> Vec<usize> {
        self.documents[doc]
            .tokens
            .iter()
            .map(|t| self.vocabulary[t])
            .collect()
    }

    /// Writes the corpus back out as JSONL records.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> Result<()> {
        for doc in &self.documents {
            let rec = DocumentRecord {
                id: doc.id.clone(),
                text: doc.raw_text.clone(),
            };
            serde_json::to_writer(&mut out, &rec)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }
}

/// One line of the corpus JSONL file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DocumentRecord {
    pub id: String,
    pub text: String,
}

/// One line of the profiles JSONL file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileRecord {
    pub user_id: String,
    pub doc_ids: Vec<String>,
}

/// The set of documents a user has marked as preferred.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UserProfile {
    pub user_id: String,
    pub doc_ids: BTreeSet<String>,
}

impl UserProfile {
    pub fn new<I, S>(user_id: impl Into<String>, doc_ids: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        UserProfile {
            user_id: user_id.into(),
            doc_ids: doc_ids.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.doc_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.doc_ids.is_empty()
    }
}

/// Non-fatal conditions encountered while loading profiles.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProfileWarning {
    UnknownDocument { user_id: String, doc_id: String },
    TooFewDocuments { user_id: String, count: usize },
}

impl std::fmt::Display for ProfileWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ProfileWarning::UnknownDocument { user_id, doc_id } => {
                write!(f, "user {user_id}: unknown document {doc_id} dropped")
            }
            ProfileWarning::TooFewDocuments { user_id, count } => {
                write!(f, "user {user_id}: discarded with {count} documents")
            }
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct LoadedProfiles {
    pub profiles: Vec<UserProfile>,
    pub warnings: Vec<ProfileWarning>,
}

fn read_jsonl<T, F>(path: &Path, mut each: F) -> Result<()>
where
    T: for<'de> Deserialize<'de>,
    F: FnMut(usize, T) -> Result<()>,
{
    let file = File::open(path).map_err(|e| Error::file(path, e))?;
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::file(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_owned(),
            line: i + 1,
            message: e.to_string(),
        })?;
        each(i + 1, record)?;
    }
    Ok(())
}

/// Loads a JSONL corpus, discarding documents with fewer than `min_chars`
/// characters (Unicode scalar values of the raw text).
pub fn load_corpus(path: impl AsRef<Path>, min_chars: usize) -> Result<Corpus> {
    let path = path.as_ref();
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    read_jsonl(path, |line, rec: DocumentRecord| {
        if !seen.insert(rec.id.clone()) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("duplicate document id {:?}", rec.id),
            });
        }
        if rec.text.chars().count() >= min_chars {
            docs.push(Document::new(rec.id, rec.text));
        }
        Ok(())
    })?;
    Corpus::new(docs)
}

/// Intersects each profile with the corpus and keeps users left with at
/// least `min_docs` documents (and at least one).
pub fn filter_profiles<I>(records: I, corpus: &Corpus, min_docs: usize) -> LoadedProfiles
where
    I: IntoIterator<Item = ProfileRecord>,
{
    filter_profiles_with(records, |id| corpus.contains(id), min_docs)
}

/// Like [`filter_profiles`] with an arbitrary membership test, e.g. the ids
/// of an embedding file.
pub fn filter_profiles_with<I, F>(records: I, known: F, min_docs: usize) -> LoadedProfiles
where
    I: IntoIterator<Item = ProfileRecord>,
    F: Fn(&str) -> bool,
{
    let mut out = LoadedProfiles::default();
    for rec in records {
        let mut kept = BTreeSet::new();
        for id in rec.doc_ids {
            if known(&id) {
                kept.insert(id);
            } else {
                out.warnings.push(ProfileWarning::UnknownDocument {
                    user_id: rec.user_id.clone(),
                    doc_id: id,
                });
            }
        }
        if kept.len() < min_docs.max(1) {
            out.warnings.push(ProfileWarning::TooFewDocuments {
                user_id: rec.user_id,
                count: kept.len(),
            });
        } else {
            out.profiles.push(UserProfile {
                user_id: rec.user_id,
                doc_ids: kept,
            });
        }
    }
    out
}

/// Reads raw profile records; duplicate user ids are a parse error.
pub fn read_profile_records(path: impl AsRef<Path>) -> Result<Vec<ProfileRecord>> {
    let path = path.as_ref();
    let mut records = Vec::new();
    let mut users = HashSet::new();
    read_jsonl(path, |line, rec: ProfileRecord| {
        if !users.insert(rec.user_id.clone()) {
            return Err(Error::Parse {
                path: path.to_owned(),
                line,
                message: format!("duplicate user id {:?}", rec.user_id),
            });
        }
        records.push(rec);
        Ok(())
    })?;
    Ok(records)
}

/// Loads JSONL profiles against an already-loaded corpus.
///
/// Unknown document ids are dropped with a warning rather than failing.
pub fn load_profiles(path: impl AsRef<Path>, corpus: &Corpus, min_docs: usize) -> Result<LoadedProfiles> {
    Ok(filter_profiles(read_profile_records(path)?, corpus, min_docs))
}

pub fn write_profiles_jsonl<W: Write>(profiles: &[UserProfile], mut out: W) -> Result<()> {
    for p in profiles {
        let rec = ProfileRecord {
            user_id: p.user_id.clone(),
            doc_ids: p.doc_ids.iter().cloned().collect(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        tokenize(s)
    }

    #[test]
    fn tokenize_examples() {
        assert_eq!(toks("Hello, World!"), ["hello", "world"]);
        assert!(toks("").is_empty());
        assert_eq!(
            toks("state-of-the-art NLP2024"),
            ["state", "of", "the", "art", "nlp2024"]
        );
    }

    #[test]
    fn tokenize_keeps_stopwords_and_endings() {
        assert_eq!(toks("The runners were running"), ["the", "runners", "were", "running"]);
    }

    #[test]
    fn tokenize_unicode() {
        assert_eq!(toks("Über straße—ÉTÉ"), ["über", "straße", "été"]);
        // Non-ASCII digits are special characters.
        assert_eq!(toks("a٣b"), ["a", "b"]);
        // 'İ' lowercases to 'i' plus a combining dot, which is dropped.
        assert_eq!(toks("İstanbul"), ["istanbul"]);
    }

    fn write_lines(lines: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn doc_line(id: &str, text: &str) -> String {
        serde_json::to_string(&DocumentRecord {
            id: id.into(),
            text: text.into(),
        })
        .unwrap()
    }

    #[test]
    fn min_chars_filter() {
        let f = write_lines(&[
            doc_line("a", &"x".repeat(400)),
            doc_line("b", &"y".repeat(600)),
            doc_line("c", &"z ".repeat(350)),
        ]);
        let corpus = load_corpus(f.path(), 500).unwrap();
        assert_eq!(corpus.len(), 2);
        assert!(!corpus.contains("a"));
        assert_eq!(load_corpus(f.path(), 0).unwrap().len(), 3);
    }

    #[test]
    fn min_chars_counts_scalar_values() {
        // 3 chars, 6 bytes.
        let f = write_lines(&[doc_line("a", "äöü")]);
        assert_eq!(load_corpus(f.path(), 3).unwrap().len(), 1);
        assert_eq!(load_corpus(f.path(), 4).unwrap().len(), 0);
    }

    #[test]
    fn vocabulary_and_doc_freq() {
        let corpus = Corpus::from_texts([("d1", "a b"), ("d2", "b c")]).unwrap();
        assert_eq!(corpus.terms(), ["a", "b", "c"]);
        assert_eq!(corpus.doc_freq("a"), 1);
        assert_eq!(corpus.doc_freq("b"), 2);
        assert_eq!(corpus.doc_freq("c"), 1);
        assert_eq!(corpus.doc_freq("zzz"), 0);
        assert_eq!(corpus.token_ids(1), vec![1, 2]);
    }

    #[test]
    fn doc_freq_counts_documents_not_occurrences() {
        let corpus = Corpus::from_texts([("d1", "a a a"), ("d2", "a")]).unwrap();
        assert_eq!(corpus.doc_freq("a"), 2);
        assert_eq!(corpus.term_count_by_index(0), 4);
    }

    #[test]
    fn malformed_line_names_line_number() {
        let f = write_lines(&[doc_line("a", "hello"), "{not json".into()]);
        match load_corpus(f.path(), 0) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_corpus("/nonexistent/corpus.jsonl", 0),
            Err(Error::File { .. })
        ));
    }

    #[test]
    fn duplicate_ids_rejected() {
        let f = write_lines(&[doc_line("a", "x"), doc_line("a", "y")]);
        assert!(load_corpus(f.path(), 0).is_err());
    }

    fn numbered_corpus(n: usize) -> Corpus {
        Corpus::from_texts((0..n).map(|i| (format!("d{i}"), format!("text {i}")))).unwrap()
    }

    fn profile_record(user: &str, ids: impl IntoIterator<Item = String>) -> ProfileRecord {
        ProfileRecord {
            user_id: user.into(),
            doc_ids: ids.into_iter().collect(),
        }
    }

    #[test]
    fn min_docs_boundary() {
        let corpus = numbered_corpus(100);
        let recs = vec![
            profile_record("u49", (0..49).map(|i| format!("d{i}"))),
            profile_record("u50", (0..50).map(|i| format!("d{i}"))),
        ];
        let loaded = filter_profiles(recs, &corpus, 50);
        assert_eq!(loaded.profiles.len(), 1);
        assert_eq!(loaded.profiles[0].user_id, "u50");
        assert!(loaded.warnings.contains(&ProfileWarning::TooFewDocuments {
            user_id: "u49".into(),
            count: 49
        }));
    }

    #[test]
    fn unknown_docs_dropped_with_warning() {
        let corpus = numbered_corpus(50);
        let ids = (0..50).map(|i| format!("d{i}")).chain((0..10).map(|i| format!("gone{i}")));
        let loaded = filter_profiles(vec![profile_record("u", ids)], &corpus, 50);
        assert_eq!(loaded.profiles.len(), 1);
        assert_eq!(loaded.profiles[0].len(), 50);
        let unknown = loaded
            .warnings
            .iter()
            .filter(|w| matches!(w, ProfileWarning::UnknownDocument { .. }))
            .count();
        assert_eq!(unknown, 10);
    }

    #[test]
    fn empty_profiles_never_kept() {
        let corpus = numbered_corpus(3);
        let loaded = filter_profiles(vec![profile_record("u", [])], &corpus, 0);
        assert!(loaded.profiles.is_empty());
    }

    #[test]
    fn load_profiles_from_file() {
        let corpus = numbered_corpus(5);
        let line = serde_json::to_string(&profile_record("u", ["d1".into(), "d2".into()])).unwrap();
        let f = write_lines(&[line.clone()]);
        let loaded = load_profiles(f.path(), &corpus, 2).unwrap();
        assert_eq!(loaded.profiles[0].doc_ids.len(), 2);

        let dup = write_lines(&[line.clone(), line]);
        assert!(matches!(load_profiles(dup.path(), &corpus, 1), Err(Error::Parse { line: 2, .. })));

        let bad = write_lines(&[r#"{"user_id": 3}"#.into()]);
        assert!(matches!(load_profiles(bad.path(), &corpus, 1), Err(Error::Parse { line: 1, .. })));
    }
}
