//! Train paragraph vectors on a two-topic corpus and compare cosine
//! similarity within and across topics.

use densrec::linalg::dot;
use densrec::pvec::{self, PvConfig};
use densrec::synth::{self, SynthConfig};

fn main() -> densrec::Result<()> {
    let s = synth::generate(&SynthConfig {
        topics: 2,
        docs_per_topic: 40,
        users: 1,
        docs_per_user: 10,
        topics_per_user: 1,
        seed: 7,
    })?;
    let corpus = s.corpus()?;
    let config = PvConfig {
        dim: 64,
        epochs: 30,
        negatives: 15,
        ..PvConfig::default()
    };
    let mut model = pvec::init_model(&corpus, &config)?;
    let mut log = std::io::stdout();
    println!("epoch,step,mean_loss");
    model.train(Some(&mut log))?;

    let vectors = model.export_vectors()?;
    let mean: Vec<f64> = (0..config.dim)
        .map(|j| (0..vectors.len()).map(|i| vectors.row(i)[j]).sum::<f64>() / vectors.len() as f64)
        .collect();
    let centered: Vec<Vec<f64>> = (0..vectors.len())
        .map(|i| vectors.row(i).iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();
    let cos = |a: &[f64], b: &[f64]| dot(a, b) / (dot(a, a) * dot(b, b)).sqrt();
    let (mut same, mut ns, mut diff, mut nd) = (0.0, 0, 0.0, 0);
    for i in 0..centered.len() {
        for j in i + 1..centered.len() {
            let c = cos(&centered[i], &centered[j]);
            if s.doc_topics[i] == s.doc_topics[j] {
                same += c;
                ns += 1;
            } else {
                diff += c;
                nd += 1;
            }
        }
    }
    println!("mean centered cosine: same topic {:.3}, different topics {:.3}", same / ns as f64, diff / nd as f64);
    Ok(())
}
