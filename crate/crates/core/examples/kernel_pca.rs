//! RBF kernel PCA of paragraph vectors, with the median-heuristic bandwidth.

use densrec::dimred;
use densrec::pvec::{self, PvConfig};
use densrec::synth::{self, SynthConfig};

fn main() -> densrec::Result<()> {
    let corpus = synth::generate(&SynthConfig {
        docs_per_topic: 30,
        docs_per_user: 20,
        ..SynthConfig::default()
    })?
    .corpus()?;
    let mut model = pvec::init_model(
        &corpus,
        &PvConfig {
            dim: 50,
            epochs: 20,
            ..PvConfig::default()
        },
    )?;
    model.train(None)?;
    let vectors = model.export_vectors()?;

    let kpca = dimred::fit_kpca(vectors.vectors(), 20, None, 1)?;
    println!("gamma (median heuristic) = {:.4e}", kpca.gamma());
    println!("kept {} of {} requested components", kpca.components(), kpca.requested());
    let total: f64 = kpca.eigenvalues().iter().sum();
    for (i, l) in kpca.eigenvalues().iter().take(8).enumerate() {
        println!("  {i:2}  {l:.5}  ({:.1}%)", 100.0 * l / total);
    }

    // Training points re-project onto their stored coordinates.
    let again = kpca.project_point(vectors.row(3))?;
    let err = again
        .iter()
        .zip(kpca.coordinates().row(3))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    println!("re-projection error for row 3: {err:.2e}");
    Ok(())
}
