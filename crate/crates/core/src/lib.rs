//! Content-based document recommendation from generative models of user
//! interest.
//!
//! A corpus is embedded into a vector space, either with LSA (tf-idf weighting
//! followed by a truncated SVD) or with paragraph vectors trained by negative
//! sampling and reduced with RBF kernel PCA. Each user's preferred documents
//! are treated as draws from an interest density, estimated as a Gaussian
//! mixture with EM. Recommendations are produced by sampling that density and
//! snapping each sample to its nearest corpus document.
//!
//! The [`eval`] module runs the per-user k-fold hit-rate protocol over both
//! representations. Runnable walkthroughs of each stage live in the crate's
//! `examples/` directory (`cargo run --release --example <name>`), and the
//! `densrec` binary exposes the same pipeline as subcommands.

pub mod cli;
pub mod corpus;
pub mod dimred;
pub mod embedding;
pub mod error;
pub mod eval;
pub mod gmm;
pub mod linalg;
pub mod lsa;
pub mod pipeline;
pub mod pvec;
pub mod recommend;
pub mod seed;
pub mod synth;

pub use corpus::{load_corpus, load_profiles, tokenize, Corpus, Document, UserProfile};
pub use embedding::EmbeddingMatrix;
pub use error::{Error, Result};
pub use gmm::{CovarianceType, GmmConfig, GmmModel};
pub use linalg::Matrix;
