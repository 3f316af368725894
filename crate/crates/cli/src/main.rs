//! dsaw: train discrete (and baseline continuous) word embeddings, run the
//! evaluation protocols, inspect effect vectors, and compile+solve
//! paraphrasing and grammar tasks with the embedded planner.

mod commands;
mod config;
mod error;
mod store;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use error::CliError;
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "dsaw", version, about = "Discrete STRIPS-compatible word embeddings toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model and write model.bin/vocab.tsv/metrics.csv/config.txt.
    Train(TrainArgs),
    /// Evaluate a trained model on similarity, analogy or classification.
    Eval(EvalArgs),
    /// Export the extracted effect table and per-word effect densities.
    Effects(EffectsArgs),
    /// Project words or phrases to 2-D with PCA.
    Pca(PcaArgs),
    /// Compile a paraphrase query into a planning task and solve it.
    Paraphrase(ParaphraseArgs),
    /// Convert between right-regular grammars and planning tasks.
    Grammar(GrammarArgs),
    /// Regenerate the bundled fixture files.
    Fixture(FixtureArgs),
}

#[derive(Args)]
pub struct TrainArgs {
    /// Corpus file: UTF-8 plain text, one sentence per line.
    pub corpus: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Preload settings from a config.txt written by an earlier run;
    /// explicit flags override it.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Model variant: dsaw, cbow, sg or sgbtl.
    #[arg(long)]
    pub model: Option<String>,
    /// Embedding width E.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Context radius c.
    #[arg(long)]
    pub window: Option<usize>,
    /// Negative samples K.
    #[arg(long)]
    pub negatives: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    /// KL scale (discrete variants only).
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Epoch at which temperature annealing starts (discrete variants only).
    #[arg(long)]
    pub anneal_start: Option<f64>,
    /// BatchNorm affine transform: on or off (discrete variants only).
    #[arg(long)]
    pub affine: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Drop words seen fewer than this many times.
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Subsampling threshold t; 0 disables subsampling.
    #[arg(long)]
    pub subsample: Option<f64>,
    /// Subsampling formula: implementation or paper.
    #[arg(long)]
    pub subsample_variant: Option<String>,
    /// Exponent on the unigram distribution for negative sampling.
    #[arg(long)]
    pub noise_power: Option<f64>,
    /// Keep the corpus case instead of downcasing.
    #[arg(long)]
    pub no_downcase: bool,
}

#[derive(Args)]
pub struct EvalArgs {
    /// Model directory written by `dsaw train`.
    #[arg(long)]
    pub model: PathBuf,
    /// sim, analogy or classify.
    #[arg(long)]
    pub task: String,
    /// Dataset file(s); repeat the flag for several.
    #[arg(long, required = true)]
    pub dataset: Vec<PathBuf>,
    /// Analogy method: 3cosadd, seqadd, ignore-a or only-b.
    #[arg(long)]
    pub method: Option<String>,
    /// seqadd ordering such as "-a+a*+b" (any permutation of the three).
    #[arg(long)]
    pub ordering: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub topk: usize,
    /// Classification split seed.
    #[arg(long, default_value_t = 0)]
    pub split_seed: u64,
    #[arg(long, default_value_t = 0.48)]
    pub train_frac: f64,
    #[arg(long, default_value_t = 0.12)]
    pub valid_frac: f64,
    /// Treat classification labels as sentiment values (<=0.4 -> 0,
    /// >0.6 -> 1, neutral dropped).
    #[arg(long)]
    pub sentiment: bool,
    /// Report CSV path.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct EffectsArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory for effects.tsv and density.csv.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct PcaArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Comma-separated words; a multi-word item (use quotes) is aggregated
    /// as a phrase.
    #[arg(long)]
    pub words: Option<String>,
    /// File with one word or phrase per line.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct ParaphraseArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Target word to paraphrase.
    #[arg(long)]
    pub target: String,
    /// Build actions from the N most frequent words (excluding the target).
    #[arg(long, default_value_t = 4000)]
    pub vocab_top: usize,
    /// Soft goals via the net-benefit compilation (default).
    #[arg(long, conflicts_with = "hard")]
    pub soft: bool,
    /// Hard goals: require the exact effect, may be unsolvable (exit 3).
    #[arg(long)]
    pub hard: bool,
    /// Per-goal utility U for the soft compilation.
    #[arg(long, default_value_t = 100)]
    pub utility: u64,
    /// Time budget in seconds.
    #[arg(long)]
    pub budget: Option<f64>,
    /// Output directory for the PDDL pair, plans.csv and config.txt.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct GrammarArgs {
    /// to-task or to-grammar.
    #[arg(long)]
    pub direction: String,
    /// Grammar file (to-task): lines "X -> a Y", "X -> a", "X ->".
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Domain/problem PDDL pair (to-grammar).
    #[arg(long)]
    pub domain: Option<PathBuf>,
    #[arg(long)]
    pub problem: Option<PathBuf>,
    /// Reachable-state cap for to-grammar.
    #[arg(long, default_value_t = 4096)]
    pub state_bound: usize,
    /// Also solve the compiled task and print the final plan (to-task).
    #[arg(long)]
    pub solve: bool,
    /// Output path; to-task writes <out>.domain.pddl and <out>.problem.pddl,
    /// to-grammar writes the grammar text to <out>.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args)]
pub struct FixtureArgs {
    #[arg(long)]
    pub out: PathBuf,
    /// Corpus seed for the planted-synonym fixture.
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Lines in the planted-synonym corpus.
    #[arg(long, default_value_t = 6000)]
    pub lines: usize,
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version are not errors; argument problems are usage
            // errors under this tool's exit-code contract.
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    std::process::exit(0);
                }
                _ => {
                    eprint!("{e}");
                    std::process::exit(1);
                }
            }
        }
    };
    let result = match cli.command {
        Command::Train(args) => commands::train::run(args),
        Command::Eval(args) => commands::eval::run(args),
        Command::Effects(args) => commands::effects::run(args),
        Command::Pca(args) => commands::pca::run(args),
        Command::Paraphrase(args) => commands::paraphrase::run(args),
        Command::Grammar(args) => commands::grammar::run(args),
        Command::Fixture(args) => commands::fixture::run(args),
    };
    if let Err(e) = result {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
