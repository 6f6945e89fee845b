//! The `densrec` command line.
//!
//! Every subcommand writes its outputs into the `--out` directory together
//! with a `manifest.json` recording the parsed configuration, the seed and
//! SHA-256 digests of every input and output file. Manifests carry no
//! timestamps, so repeated runs with the same flags and inputs produce
//! byte-identical directories.

use std::collections::{BTreeMap, HashSet};
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::corpus::{self, Corpus, DEFAULT_MIN_CHARS, DEFAULT_MIN_DOCS};
use crate::dimred;
use crate::embedding::EmbeddingMatrix;
use crate::error::{Error, Result};
use crate::eval::{self, EvalConfig, EvalReport, Representation};
use crate::gmm::{self, CovarianceType, GmmConfig, GmmModel};
use crate::lsa;
use crate::pipeline::{self, LearnedConfig};
use crate::pvec::{self, PvConfig};
use crate::recommend;
use crate::seed;
use crate::synth::{self, SynthConfig};

pub const DEFAULT_SEED: u64 = 0x5EED;

#[derive(Debug, Parser)]
#[command(name = "densrec", version, about = "Recommend documents by sampling per-user interest densities")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and filter a corpus (and optionally profiles), writing the kept records.
    Ingest(IngestArgs),
    /// tf-idf weighting followed by a truncated SVD.
    EmbedLsa(EmbedLsaArgs),
    /// Train paragraph vectors.
    EmbedPv(EmbedPvArgs),
    /// Reduce an embedding file with RBF kernel PCA.
    Reduce(ReduceArgs),
    /// Fit one Gaussian mixture per user.
    FitUser(FitUserArgs),
    /// Sample a user's interest model and snap samples to documents.
    Recommend(RecommendArgs),
    /// Per-user k-fold hit-rate evaluation for one or both representations.
    Evaluate(EvaluateArgs),
    /// Project an embedding file onto two principal axes.
    #[command(name = "export-2d")]
    Export2d(Export2dArgs),
    /// Generate the seeded synthetic topic benchmark.
    Synth(SynthArgs),
}

#[derive(Debug, Args, Serialize)]
struct Common {
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Worker threads for data-parallel stages.
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Do not echo results to stdout.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Args, Serialize)]
struct CorpusArgs {
    /// Corpus JSONL, one `{"id", "text"}` object per line.
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_CHARS)]
    min_chars: usize,
}

#[derive(Debug, Args, Serialize)]
struct LsaArgs {
    #[arg(long, default_value_t = lsa::DEFAULT_RANK)]
    rank: usize,
    /// Lower bound of the kept max tf-idf score range.
    #[arg(long, default_value_t = lsa::DEFAULT_SCORE_RANGE.0)]
    score_min: f64,
    #[arg(long, default_value_t = lsa::DEFAULT_SCORE_RANGE.1)]
    score_max: f64,
}

#[derive(Debug, Args, Serialize)]
struct PvArgs {
    #[arg(long, default_value_t = 300)]
    dim: usize,
    #[arg(long, default_value_t = 10)]
    epochs: usize,
    #[arg(long, default_value_t = 30)]
    negatives: usize,
    #[arg(long, default_value_t = 5)]
    window: usize,
}

#[derive(Debug, Args, Serialize)]
struct KpcaArgs {
    #[arg(long, default_value_t = dimred::DEFAULT_COMPONENTS)]
    kpca_components: usize,
    /// RBF bandwidth; defaults to the median heuristic.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
struct GmmArgs {
    #[arg(long, default_value_t = 2)]
    gmm_k: usize,
    /// diagonal | spherical
    #[arg(long, default_value = "diagonal")]
    gmm_cov: CovarianceType,
    /// Variance floor.
    #[arg(long, default_value_t = 1e-6)]
    gmm_reg: f64,
    #[arg(long, default_value_t = 4)]
    gmm_restarts: usize,
}

#[derive(Debug, Args, Serialize)]
struct IngestArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_MIN_DOCS)]
    min_docs: usize,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct EmbedLsaArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    lsa: LsaArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct EmbedPvArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[command(flatten)]
    pv: PvArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct ReduceArgs {
    /// Embedding file (`.csv` or binary).
    #[arg(long)]
    embeddings: PathBuf,
    #[command(flatten)]
    kpca: KpcaArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct FitUserArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    profiles: PathBuf,
    /// Fit only this user.
    #[arg(long)]
    user: Option<String>,
    #[arg(long, default_value_t = DEFAULT_MIN_DOCS)]
    min_docs: usize,
    #[command(flatten)]
    gmm: GmmArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct RecommendArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    user: String,
    /// `models.jsonl` written by `fit-user`.
    #[arg(long, required_unless_present = "profiles")]
    model: Option<PathBuf>,
    /// Profiles to fit the user's model from (and to exclude with --exclude-train).
    #[arg(long)]
    profiles: Option<PathBuf>,
    #[arg(short = 'n', long, default_value_t = 10)]
    count: usize,
    /// Never recommend documents already in the user's profile.
    #[arg(long, requires = "profiles")]
    exclude_train: bool,
    #[arg(long, default_value_t = DEFAULT_MIN_DOCS)]
    min_docs: usize,
    #[command(flatten)]
    gmm: GmmArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct EvaluateArgs {
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long)]
    profiles: PathBuf,
    #[arg(long, default_value_t = DEFAULT_MIN_DOCS)]
    min_docs: usize,
    /// Representation(s) to evaluate; both when omitted.
    #[arg(long, value_parser = ["lsa", "pvec"])]
    rep: Vec<String>,
    #[arg(long, default_value_t = eval::DEFAULT_FOLDS)]
    folds: usize,
    /// Remove each fold's training documents from the snapping candidates.
    #[arg(long)]
    exclude_train: bool,
    #[command(flatten)]
    lsa: LsaArgs,
    #[command(flatten)]
    pv: PvArgs,
    #[command(flatten)]
    kpca: KpcaArgs,
    #[command(flatten)]
    gmm: GmmArgs,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct Export2dArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args, Serialize)]
struct SynthArgs {
    #[arg(long, default_value_t = 6)]
    topics: usize,
    #[arg(long, default_value_t = 100)]
    docs_per_topic: usize,
    #[arg(long, default_value_t = 20)]
    users: usize,
    #[arg(long, default_value_t = 60)]
    docs_per_user: usize,
    #[arg(long, default_value_t = 2)]
    topics_per_user: usize,
    #[command(flatten)]
    common: Common,
}

/// Collects output files and writes them plus the manifest.
struct Run<'a> {
    command: &'static str,
    common: &'a Common,
    config: serde_json::Value,
    inputs: BTreeMap<String, String>,
    outputs: BTreeMap<String, String>,
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    seed: u64,
    threads: usize,
    config: &'a serde_json::Value,
    inputs: &'a BTreeMap<String, String>,
    outputs: &'a BTreeMap<String, String>,
}

fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl<'a> Run<'a> {
    fn new<A: Serialize>(command: &'static str, args: &A, common: &'a Common, inputs: &[&Path]) -> Result<Self> {
        let mut digests = BTreeMap::new();
        for path in inputs {
            if !path.is_file() {
                return Err(Error::invalid(format!("input {} is not a readable file", path.display())));
            }
            let bytes = fs::read(path).map_err(|e| Error::file(*path, e))?;
            digests.insert(path.display().to_string(), sha256_hex(&bytes));
        }
        if common.threads == 0 {
            return Err(Error::invalid("--threads must be >= 1"));
        }
        fs::create_dir_all(&common.out).map_err(|e| Error::file(&common.out, e))?;
        Ok(Run {
            command,
            common,
            config: serde_json::to_value(args)?,
            inputs: digests,
            outputs: BTreeMap::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<PathBuf> {
        let path = self.common.out.join(name);
        fs::write(&path, bytes).map_err(|e| Error::file(&path, e))?;
        self.outputs.insert(name.to_string(), sha256_hex(bytes));
        Ok(path)
    }

    fn echo(&self, text: &str) {
        if !self.common.quiet {
            print!("{text}");
        }
    }

    fn finish(self) -> Result<()> {
        let manifest = Manifest {
            tool: "densrec",
            version: env!("CARGO_PKG_VERSION"),
            command: self.command,
            seed: self.common.seed,
            threads: self.common.threads,
            config: &self.config,
            inputs: &self.inputs,
            outputs: &self.outputs,
        };
        let mut json = serde_json::to_vec_pretty(&manifest)?;
        json.push(b'\n');
        let path = self.common.out.join("manifest.json");
        fs::write(&path, json).map_err(|e| Error::file(&path, e))
    }
}

fn embeddings_csv(m: &EmbeddingMatrix) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    m.write_csv(&mut buf)?;
    Ok(buf)
}

fn gmm_config(args: &GmmArgs, seed: u64) -> GmmConfig {
    GmmConfig {
        k: args.gmm_k,
        covariance: args.gmm_cov,
        reg: args.gmm_reg,
        n_init: args.gmm_restarts,
        seed,
        ..GmmConfig::default()
    }
}

fn pv_config(args: &PvArgs, seed: u64) -> PvConfig {
    PvConfig {
        dim: args.dim,
        epochs: args.epochs,
        negatives: args.negatives,
        window: args.window,
        seed,
        ..PvConfig::default()
    }
}

fn warn_profiles(loaded: &corpus::LoadedProfiles) {
    for w in &loaded.warnings {
        eprintln!("warning: {w}");
    }
}

/// Profiles restricted to ids present in `embeddings`.
fn profiles_for(path: &Path, embeddings: &EmbeddingMatrix, min_docs: usize) -> Result<Vec<corpus::UserProfile>> {
    let index = embeddings.index();
    let loaded = corpus::filter_profiles_with(
        corpus::read_profile_records(path)?,
        |id| index.contains_key(id),
        min_docs,
    );
    warn_profiles(&loaded);
    Ok(loaded.profiles)
}

fn fit_user_model(profile: &corpus::UserProfile, embeddings: &EmbeddingMatrix, args: &GmmArgs, seed: u64) -> Result<GmmModel> {
    let points = embeddings.select(profile.doc_ids.iter().map(String::as_str))?;
    gmm::fit(&points, &gmm_config(args, seed::for_name(seed, &profile.user_id)))
}

#[derive(Serialize, serde::Deserialize)]
struct UserModel {
    user_id: String,
    model: GmmModel,
}

fn ingest(args: &IngestArgs) -> Result<()> {
    let mut inputs = vec![args.corpus.corpus.as_path()];
    inputs.extend(args.profiles.as_deref());
    let mut run = Run::new("ingest", args, &args.common, &inputs)?;
    let corpus = corpus::load_corpus(&args.corpus.corpus, args.corpus.min_chars)?;
    let mut buf = Vec::new();
    corpus.write_jsonl(&mut buf)?;
    run.write("corpus.jsonl", &buf)?;
    let mut summary = BTreeMap::new();
    summary.insert("documents", corpus.len());
    summary.insert("vocabulary", corpus.vocab_size());
    if let Some(path) = &args.profiles {
        let loaded = corpus::load_profiles(path, &corpus, args.min_docs)?;
        warn_profiles(&loaded);
        let mut buf = Vec::new();
        corpus::write_profiles_jsonl(&loaded.profiles, &mut buf)?;
        run.write("profiles.jsonl", &buf)?;
        summary.insert("users", loaded.profiles.len());
        summary.insert("warnings", loaded.warnings.len());
    }
    let mut json = serde_json::to_vec_pretty(&summary)?;
    json.push(b'\n');
    run.write("summary.json", &json)?;
    run.echo(&String::from_utf8_lossy(&json));
    run.finish()
}

fn embed_lsa(args: &EmbedLsaArgs) -> Result<()> {
    let mut run = Run::new("embed-lsa", args, &args.common, &[&args.corpus.corpus])?;
    let corpus = corpus::load_corpus(&args.corpus.corpus, args.corpus.min_chars)?;
    let emb = pipeline::embed_lsa(&corpus, (args.lsa.score_min, args.lsa.score_max), args.lsa.rank)?;
    run.write("embeddings.csv", &embeddings_csv(&emb)?)?;
    run.finish()
}

fn embed_pv(args: &EmbedPvArgs) -> Result<()> {
    let mut run = Run::new("embed-pv", args, &args.common, &[&args.corpus.corpus])?;
    let corpus = corpus::load_corpus(&args.corpus.corpus, args.corpus.min_chars)?;
    let mut model = pvec::init_model(&corpus, &pv_config(&args.pv, args.common.seed))?;
    let mut log = b"epoch,step,mean_loss\n".to_vec();
    model.train(Some(&mut log))?;
    run.write("paragraph_vectors.csv", &embeddings_csv(&model.export_vectors()?)?)?;
    run.write("loss.csv", &log)?;
    run.finish()
}

fn reduce(args: &ReduceArgs) -> Result<()> {
    let mut run = Run::new("reduce", args, &args.common, &[&args.embeddings])?;
    let input = EmbeddingMatrix::load(&args.embeddings)?;
    let components = args.kpca.kpca_components.min(input.len().saturating_sub(1));
    let model = dimred::fit_kpca(input.vectors(), components, args.kpca.gamma, args.common.seed)?;
    let reduced = EmbeddingMatrix::new(input.doc_ids().to_vec(), model.coordinates().clone())?;
    run.write("embeddings.csv", &embeddings_csv(&reduced)?)?;
    let info = serde_json::json!({
        "gamma": model.gamma(),
        "requested": model.requested(),
        "components": model.components(),
        "eigenvalues": model.eigenvalues(),
    });
    let mut json = serde_json::to_vec_pretty(&info)?;
    json.push(b'\n');
    run.write("kpca.json", &json)?;
    run.finish()
}

fn fit_user(args: &FitUserArgs) -> Result<()> {
    let mut run = Run::new("fit-user", args, &args.common, &[&args.embeddings, &args.profiles])?;
    let embeddings = EmbeddingMatrix::load(&args.embeddings)?;
    let mut profiles = profiles_for(&args.profiles, &embeddings, args.min_docs)?;
    if let Some(user) = &args.user {
        profiles.retain(|p| &p.user_id == user);
        if profiles.is_empty() {
            return Err(Error::invalid(format!("user {user:?} not found among usable profiles")));
        }
    }
    let mut buf = Vec::new();
    for p in &profiles {
        let model = fit_user_model(p, &embeddings, &args.gmm, args.common.seed)?;
        serde_json::to_writer(
            &mut buf,
            &UserModel {
                user_id: p.user_id.clone(),
                model,
            },
        )?;
        buf.push(b'\n');
    }
    run.write("models.jsonl", &buf)?;
    run.finish()
}

fn recommend(args: &RecommendArgs) -> Result<()> {
    let mut inputs = vec![args.embeddings.as_path()];
    inputs.extend(args.model.as_deref());
    inputs.extend(args.profiles.as_deref());
    let mut run = Run::new("recommend", args, &args.common, &inputs)?;
    let embeddings = EmbeddingMatrix::load(&args.embeddings)?;
    let profile = match &args.profiles {
        Some(path) => {
            let found = profiles_for(path, &embeddings, args.min_docs)?
                .into_iter()
                .find(|p| p.user_id == args.user);
            Some(found.ok_or_else(|| Error::invalid(format!("user {:?} not found among usable profiles", args.user)))?)
        }
        None => None,
    };
    let model = match (&args.model, &profile) {
        (Some(path), _) => {
            let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
            let mut found = None;
            for line in text.lines().filter(|l| !l.trim().is_empty()) {
                let m: UserModel = serde_json::from_str(line)?;
                if m.user_id == args.user {
                    found = Some(GmmModel::from_json(&serde_json::to_string(&m.model)?)?);
                    break;
                }
            }
            found.ok_or_else(|| Error::invalid(format!("no model for user {:?} in {}", args.user, path.display())))?
        }
        (None, Some(p)) => fit_user_model(p, &embeddings, &args.gmm, args.common.seed)?,
        (None, None) => return Err(Error::invalid("either --model or --profiles is required")),
    };
    let excluded: HashSet<String> = match (&profile, args.exclude_train) {
        (Some(p), true) => p.doc_ids.iter().cloned().collect(),
        _ => HashSet::new(),
    };
    let sample_seed = seed::derive(seed::for_name(args.common.seed, &args.user), 1);
    let recs = recommend::recommend(&model, &embeddings, args.count, &excluded, sample_seed)?;
    let mut buf = Vec::new();
    recommend::write_csv(&recs, &mut buf)?;
    run.write("recommendations.csv", &buf)?;
    run.echo(&String::from_utf8_lossy(&buf));
    run.finish()
}

fn evaluate(args: &EvaluateArgs) -> Result<()> {
    let mut run = Run::new("evaluate", args, &args.common, &[&args.corpus.corpus, &args.profiles])?;
    let corpus = corpus::load_corpus(&args.corpus.corpus, args.corpus.min_chars)?;
    let loaded = corpus::load_profiles(&args.profiles, &corpus, args.min_docs)?;
    warn_profiles(&loaded);
    let reps: Vec<Representation> = if args.rep.is_empty() {
        vec![Representation::Lsa, Representation::Learned]
    } else {
        let mut reps = Vec::new();
        for r in &args.rep {
            let rep = if r == "lsa" { Representation::Lsa } else { Representation::Learned };
            if !reps.contains(&rep) {
                reps.push(rep);
            }
        }
        reps
    };
    let seed = args.common.seed;
    let mut reports = Vec::new();
    for rep in reps {
        let embeddings = embed(&corpus, rep, args)?;
        let config = EvalConfig {
            folds: args.folds,
            gmm: gmm_config(&args.gmm, seed),
            seed,
            exclude_train: args.exclude_train,
            representation: rep,
        };
        let report = eval::evaluate_all(&loaded.profiles, &embeddings, &config)?;
        for s in &report.skipped {
            eprintln!("warning: user {} skipped: {}", s.user_id, s.reason);
        }
        reports.push(report);
    }
    let text = report_text(&reports);
    run.echo(&text);
    run.write("report.txt", text.as_bytes())?;
    let mut json = serde_json::to_vec_pretty(&reports)?;
    json.push(b'\n');
    run.write("report.json", &json)?;
    run.finish()
}

fn embed(corpus: &Corpus, rep: Representation, args: &EvaluateArgs) -> Result<EmbeddingMatrix> {
    match rep {
        Representation::Lsa => pipeline::embed_lsa(corpus, (args.lsa.score_min, args.lsa.score_max), args.lsa.rank),
        Representation::Learned => {
            let config = LearnedConfig {
                pv: pv_config(&args.pv, args.common.seed),
                components: args.kpca.kpca_components,
                gamma: args.kpca.gamma,
                seed: args.common.seed,
            };
            Ok(pipeline::embed_learned(corpus, &config, None)?.embeddings)
        }
    }
}

/// Results table followed by the random baseline and, when both
/// representations ran, which one scored higher.
fn report_text(reports: &[EvalReport]) -> String {
    let mut text = eval::render_table(reports);
    if let Some(r) = reports.first() {
        text.push_str(&format!("\nRandom baseline: {:.2} %\n", 100.0 * r.random_baseline));
    }
    let rate = |rep| reports.iter().find(|r| r.representation == rep).map(|r| r.hit_rate);
    if let (Some(lsa), Some(learned)) = (rate(Representation::Lsa), rate(Representation::Learned)) {
        let verdict = if learned > lsa { "higher" } else { "not higher" };
        text.push_str(&format!(
            "Learned vs LSA: {verdict} ({:+.2} points)\n",
            100.0 * (learned - lsa)
        ));
    }
    text
}

fn export_2d(args: &Export2dArgs) -> Result<()> {
    let mut run = Run::new("export-2d", args, &args.common, &[&args.embeddings])?;
    let input = EmbeddingMatrix::load(&args.embeddings)?;
    let flat = dimred::project_2d(&input)?;
    let mut buf = Vec::new();
    dimred::write_2d_csv(&flat, &mut buf)?;
    run.write("coords_2d.csv", &buf)?;
    run.finish()
}

fn synth(args: &SynthArgs) -> Result<()> {
    let mut run = Run::new("synth", args, &args.common, &[])?;
    let generated = synth::generate(&SynthConfig {
        topics: args.topics,
        docs_per_topic: args.docs_per_topic,
        users: args.users,
        docs_per_user: args.docs_per_user,
        topics_per_user: args.topics_per_user,
        seed: args.common.seed,
    })?;
    let mut buf = Vec::new();
    generated.write_corpus(&mut buf)?;
    run.write("corpus.jsonl", &buf)?;
    buf.clear();
    generated.write_profiles(&mut buf)?;
    run.write("profiles.jsonl", &buf)?;
    run.finish()
}

fn dispatch(command: &Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::EmbedLsa(a) => embed_lsa(a),
        Command::EmbedPv(a) => embed_pv(a),
        Command::Reduce(a) => reduce(a),
        Command::FitUser(a) => fit_user(a),
        Command::Recommend(a) => recommend(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Export2d(a) => export_2d(a),
        Command::Synth(a) => synth(a),
    }
}

fn threads(command: &Command) -> usize {
    match command {
        Command::Ingest(a) => a.common.threads,
        Command::EmbedLsa(a) => a.common.threads,
        Command::EmbedPv(a) => a.common.threads,
        Command::Reduce(a) => a.common.threads,
        Command::FitUser(a) => a.common.threads,
        Command::Recommend(a) => a.common.threads,
        Command::Evaluate(a) => a.common.threads,
        Command::Export2d(a) => a.common.threads,
        Command::Synth(a) => a.common.threads,
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
/// Returns the process exit code: 0 on success, 2 for usage errors and 1
/// for failures.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let n = threads(&cli.command).max(1);
    let result = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::invalid(e.to_string()))
        .and_then(|pool| pool.install(|| dispatch(&cli.command)));
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("densrec: error: {e}");
            1
        }
    }
}
