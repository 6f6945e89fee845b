//! The hit-rate protocol on the synthetic benchmark for both
//! representations.
//!
//! ```text
//! cargo run --release --example evaluate_synthetic -- [--exclude-train] [--epochs N]
//! ```

use densrec::corpus::filter_profiles;
use densrec::eval::{self, EvalConfig, Representation};
use densrec::pipeline::{self, LearnedConfig};
use densrec::pvec::PvConfig;
use densrec::synth::{self, SynthConfig};

fn main() -> densrec::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let exclude_train = args.iter().any(|a| a == "--exclude-train");
    let epochs = args
        .iter()
        .position(|a| a == "--epochs")
        .and_then(|i| args.get(i + 1))
        .and_then(|v| v.parse().ok())
        .unwrap_or(20);

    let s = synth::generate(&SynthConfig::default())?;
    let corpus = s.corpus()?;
    let profiles = filter_profiles(s.profiles.clone(), &corpus, 50).profiles;

    let lsa = pipeline::embed_lsa(&corpus, (0.3, 10.0), 10)?;
    let learned = pipeline::embed_learned(
        &corpus,
        &LearnedConfig {
            pv: PvConfig {
                epochs,
                ..PvConfig::default()
            },
            ..LearnedConfig::default()
        },
        None,
    )?;

    let mut reports = Vec::new();
    for (rep, emb) in [(Representation::Lsa, &lsa), (Representation::Learned, &learned.embeddings)] {
        let config = EvalConfig {
            exclude_train,
            ..EvalConfig::new(rep)
        };
        reports.push(eval::evaluate_all(&profiles, emb, &config)?);
    }
    print!("{}", eval::render_table(&reports));
    println!("random baseline {:.2} %", 100.0 * reports[0].random_baseline);
    Ok(())
}
