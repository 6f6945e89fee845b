//! Load a corpus and profiles, apply the length and profile-size filters,
//! and print what survives.
//!
//! ```text
//! cargo run --example ingest -- corpus.jsonl profiles.jsonl
//! ```
//!
//! Without arguments a small synthetic corpus is generated first.

use densrec::corpus::{self, DEFAULT_MIN_CHARS, DEFAULT_MIN_DOCS};
use densrec::synth::{self, SynthConfig};

fn main() -> densrec::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let tmp;
    let (corpus_path, profiles_path) = match args.as_slice() {
        [c, p] => (c.into(), p.into()),
        _ => {
            tmp = std::env::temp_dir().join("densrec-ingest-example");
            synth::generate(&SynthConfig::default())?.write_dir(&tmp)?;
            (tmp.join("corpus.jsonl"), tmp.join("profiles.jsonl"))
        }
    };

    let corpus = corpus::load_corpus(&corpus_path, DEFAULT_MIN_CHARS)?;
    println!("{} documents, {} distinct terms", corpus.len(), corpus.vocab_size());
    for term in corpus.terms().iter().take(5) {
        println!("  {term:>8}  in {} documents", corpus.doc_freq(term));
    }

    let loaded = corpus::load_profiles(&profiles_path, &corpus, DEFAULT_MIN_DOCS)?;
    println!("{} users kept, {} warnings", loaded.profiles.len(), loaded.warnings.len());
    for w in loaded.warnings.iter().take(5) {
        println!("  {w}");
    }
    if let Some(p) = loaded.profiles.first() {
        println!("{} likes {} documents", p.user_id, p.len());
    }
    Ok(())
}
