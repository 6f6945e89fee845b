//! Recommend documents for one user by sampling their interest model and
//! snapping each sample to the nearest unseen document.

use std::collections::{HashMap, HashSet};

use densrec::corpus::filter_profiles;
use densrec::gmm::{self, GmmConfig};
use densrec::pipeline;
use densrec::recommend;
use densrec::synth::{self, SynthConfig};

fn main() -> densrec::Result<()> {
    let s = synth::generate(&SynthConfig::default())?;
    let corpus = s.corpus()?;
    let embedded = pipeline::embed_lsa(&corpus, (0.3, 10.0), 10)?;
    let user = filter_profiles(s.profiles.clone(), &corpus, 50).profiles.remove(0);

    let points = embedded.select(user.doc_ids.iter().map(String::as_str))?;
    let model = gmm::fit(&points, &GmmConfig::default())?;
    let seen: HashSet<String> = user.doc_ids.iter().cloned().collect();
    let recs = recommend::recommend(&model, &embedded, 20, &seen, 42)?;

    let topic_of: HashMap<&str, usize> = s
        .documents
        .iter()
        .zip(&s.doc_topics)
        .map(|(d, &t)| (d.id.as_str(), t))
        .collect();
    println!("{} likes topics {:?}", user.user_id, s.user_topics[0]);
    recommend::write_csv(&recs[..5], std::io::stdout())?;
    let on_topic = recs.iter().filter(|r| s.user_topics[0].contains(&topic_of[r.doc_id.as_str()])).count();
    println!("{on_topic}/{} recommendations are from the user's topics", recs.len());
    Ok(())
}
