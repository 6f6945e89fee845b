//! Fit a Gaussian mixture to one user's documents in LSA space, pick the
//! number of components by BIC and serialize the model.

use densrec::corpus::filter_profiles;
use densrec::gmm::{self, GmmConfig, GmmModel};
use densrec::pipeline;
use densrec::synth::{self, SynthConfig};

fn main() -> densrec::Result<()> {
    let s = synth::generate(&SynthConfig::default())?;
    let corpus = s.corpus()?;
    let embedded = pipeline::embed_lsa(&corpus, (0.3, 10.0), 10)?;
    let profiles = filter_profiles(s.profiles.clone(), &corpus, 50).profiles;

    let user = &profiles[0];
    let points = embedded.select(user.doc_ids.iter().map(String::as_str))?;
    println!("{}: {} documents, topics {:?}", user.user_id, user.len(), s.user_topics[0]);

    let config = GmmConfig::default();
    let k = gmm::select_k(&points, &[1, 2, 3, 4], &config)?;
    let model = gmm::fit(&points, &GmmConfig { k, ..config })?;
    println!("BIC picks k = {k}; weights {:?}", model.weights);
    println!("mean training log-likelihood {:.3}", model.train_loglik);

    let json = model.to_json()?;
    assert_eq!(GmmModel::from_json(&json)?, model);
    println!("{} bytes of JSON", json.len());
    Ok(())
}
