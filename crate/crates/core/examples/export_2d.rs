//! Project LSA embeddings onto two principal axes and write `id,x,y` CSV to
//! stdout, ready for any scatter-plot tool.

use densrec::dimred;
use densrec::pipeline;
use densrec::synth::{self, SynthConfig};

fn main() -> densrec::Result<()> {
    let corpus = synth::generate(&SynthConfig::default())?.corpus()?;
    let embedded = pipeline::embed_lsa(&corpus, (0.3, 10.0), 10)?;
    let flat = dimred::project_2d(&embedded)?;
    dimred::write_2d_csv(&flat, std::io::stdout().lock())
}
