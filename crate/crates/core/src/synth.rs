//! Seeded synthetic benchmark: topic documents plus users who like a few
//! topics.
//!
//! Every topic owns a disjoint vocabulary and all topics share a common one.
//! A document belongs to exactly one topic and mixes a fixed share of topic
//! and shared tokens. Each user is assigned between 1 and `topics_per_user`
//! topics and samples documents from their union without replacement.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corpus::{Corpus, Document, DocumentRecord, ProfileRecord, UserProfile};
use crate::error::{Error, Result};
use crate::seed;

pub const TOPIC_VOCAB: usize = 200;
pub const SHARED_VOCAB: usize = 100;
pub const DOC_TOKENS: usize = 120;
/// 80% of each document's tokens come from its topic vocabulary.
pub const TOPIC_TOKENS: usize = 96;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct SynthConfig {
    pub topics: usize,
    pub docs_per_topic: usize,
    pub users: usize,
    pub docs_per_user: usize,
    pub topics_per_user: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            topics: 6,
            docs_per_topic: 100,
            users: 20,
            docs_per_user: 60,
            topics_per_user: 2,
            seed: 0x5EED,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let counts = [
            ("topics", self.topics),
            ("docs_per_topic", self.docs_per_topic),
            ("users", self.users),
            ("docs_per_user", self.docs_per_user),
            ("topics_per_user", self.topics_per_user),
        ];
        if let Some((name, _)) = counts.iter().find(|(_, v)| *v == 0) {
            return Err(Error::invalid(format!("synth: {name} must be >= 1")));
        }
        if self.topics_per_user > self.topics {
            return Err(Error::invalid("synth: topics_per_user exceeds topics"));
        }
        // A single-topic user must still find enough documents.
        if self.docs_per_user > self.docs_per_topic {
            return Err(Error::invalid("synth: docs_per_user exceeds docs_per_topic"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SynthCorpus {
    pub documents: Vec<DocumentRecord>,
    /// Topic of each document, parallel to `documents`.
    pub doc_topics: Vec<usize>,
    pub profiles: Vec<ProfileRecord>,
    /// Topics assigned to each user, parallel to `profiles`.
    pub user_topics: Vec<Vec<usize>>,
}

pub fn topic_word(topic: usize, j: usize) -> String {
    format!("t{topic}w{j:03}")
}

pub fn shared_word(j: usize) -> String {
    format!("s{j:03}")
}

pub fn doc_id(i: usize) -> String {
    format!("doc{:05}", i + 1)
}

pub fn user_id(u: usize) -> String {
    format!("user{:03}", u + 1)
}

pub fn generate(config: &SynthConfig) -> Result<SynthCorpus> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, 0));
    let n_docs = config.topics * config.docs_per_topic;
    let mut documents = Vec::with_capacity(n_docs);
    let mut doc_topics = Vec::with_capacity(n_docs);
    for topic in 0..config.topics {
        for _ in 0..config.docs_per_topic {
            let mut words: Vec<String> = (0..DOC_TOKENS)
                .map(|i| {
                    if i < TOPIC_TOKENS {
                        topic_word(topic, rng.random_range(0..TOPIC_VOCAB))
                    } else {
                        shared_word(rng.random_range(0..SHARED_VOCAB))
                    }
                })
                .collect();
            words.shuffle(&mut rng);
            documents.push(DocumentRecord {
                id: doc_id(documents.len()),
                text: words.join(" "),
            });
            doc_topics.push(topic);
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed::derive(config.seed, 1));
    let mut profiles = Vec::with_capacity(config.users);
    let mut user_topics = Vec::with_capacity(config.users);
    for u in 0..config.users {
        let count = rng.random_range(1..=config.topics_per_user);
        let mut topics = index::sample(&mut rng, config.topics, count).into_vec();
        topics.sort_unstable();
        let pool: Vec<usize> = topics
            .iter()
            .flat_map(|&t| t * config.docs_per_topic..(t + 1) * config.docs_per_topic)
            .collect();
        let mut picked: Vec<usize> = index::sample(&mut rng, pool.len(), config.docs_per_user)
            .into_iter()
            .map(|i| pool[i])
            .collect();
        picked.sort_unstable();
        profiles.push(ProfileRecord {
            user_id: user_id(u),
            doc_ids: picked.into_iter().map(doc_id).collect(),
        });
        user_topics.push(topics);
    }
    Ok(SynthCorpus {
        documents,
        doc_topics,
        profiles,
        user_topics,
    })
}

impl SynthCorpus {
    pub fn corpus(&self) -> Result<Corpus> {
        Corpus::new(self.documents.iter().map(|d| Document::new(d.id.clone(), d.text.clone())).collect())
    }

    pub fn user_profiles(&self) -> Vec<UserProfile> {
        self.profiles
            .iter()
            .map(|p| UserProfile::new(p.user_id.clone(), p.doc_ids.iter().cloned()))
            .collect()
    }

    pub fn write_corpus<W: Write>(&self, mut out: W) -> Result<()> {
        for d in &self.documents {
            serde_json::to_writer(&mut out, d)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn write_profiles<W: Write>(&self, mut out: W) -> Result<()> {
        for p in &self.profiles {
            serde_json::to_writer(&mut out, p)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Writes `corpus.jsonl` and `profiles.jsonl` into `dir`.
    pub fn write_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::file(dir, e))?;
        for (name, is_corpus) in [("corpus.jsonl", true), ("profiles.jsonl", false)] {
            let path = dir.join(name);
            let mut out = BufWriter::new(File::create(&path).map_err(|e| Error::file(&path, e))?);
            if is_corpus {
                self.write_corpus(&mut out)?;
            } else {
                self.write_profiles(&mut out)?;
            }
            out.flush().map_err(|e| Error::file(&path, e))?;
        }
        Ok(())
    }
}
