//! tf-idf weighting and a rank-10 truncated SVD of the synthetic corpus.

use densrec::lsa::{self, Lsa};
use densrec::synth::{self, SynthConfig};

fn main() -> densrec::Result<()> {
    let corpus = synth::generate(&SynthConfig::default())?.corpus()?;
    let (model, embedded) = Lsa::fit(&corpus, lsa::DEFAULT_SCORE_RANGE, lsa::DEFAULT_RANK)?;

    println!(
        "kept {} of {} terms with max tf-idf in {:?}",
        model.tfidf.n_terms(),
        corpus.vocab_size(),
        model.tfidf.score_range()
    );
    println!("singular values:");
    for (i, s) in model.svd.singular_values().iter().enumerate() {
        println!("  {i:2}  {s:10.4}");
    }
    // Six topics: the spectrum drops after the sixth value.
    println!("{} x {} embedding", embedded.len(), embedded.dim());
    let first = embedded.row(0);
    println!("{}: {:?}", embedded.doc_ids()[0], &first[..4]);

    // New text lands in the same space.
    let tokens = densrec::tokenize("t0w001 t0w002 t0w003 s001");
    let x = model.tfidf.vectorize(&tokens);
    println!("projected query: {:?}", &model.svd.project_row(&x)[..4]);
    Ok(())
}
