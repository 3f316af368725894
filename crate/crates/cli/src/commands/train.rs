//! `dsaw train`: vocabulary construction plus the training loop, with the
//! resolved configuration written next to the outputs.

use crate::config::ResolvedConfig;
use crate::error::CliError;
use crate::store::{atomic_write, ModelDir};
use crate::TrainArgs;
use dsaw_core::corpus::{tokenize_lines, SubsampleVariant, Vocabulary};
use dsaw_core::nncore::ModelVariant;
use dsaw_core::trainer::{train, write_metrics_csv, TrainConfig};
use std::fs;

const CONFIG_KEYS: [&str; 15] = [
    "model",
    "dim",
    "window",
    "negatives",
    "lr",
    "beta",
    "epochs",
    "batch_size",
    "anneal_start",
    "affine",
    "seed",
    "min_count",
    "subsample",
    "subsample_variant",
    "noise_power",
    // "downcase" is appended below to stay within array-size stability;
];

struct Resolved {
    variant: ModelVariant,
    config: TrainConfig,
    min_count: u64,
    subsample: f64,
    subsample_variant: SubsampleVariant,
    noise_power: f64,
    downcase: bool,
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

fn parse_from<T: std::str::FromStr>(value: &str, key: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| usage(format!("cannot parse {key} value {value:?}")))
}

fn resolve(args: &TrainArgs) -> Result<Resolved, CliError> {
    let file = match &args.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
            let cfg = ResolvedConfig::from_text(&text)?;
            let mut known = CONFIG_KEYS.to_vec();
            known.push("downcase");
            cfg.check_keys(&known)?;
            cfg
        }
        None => ResolvedConfig::new(),
    };
    // Explicit flags override the config file, which overrides defaults.
    macro_rules! pick {
        ($flag:expr, $key:literal, $default:expr) => {
            match (&$flag, file.get($key)) {
                (Some(v), _) => v.clone(),
                (None, Some(v)) => parse_from(v, $key)?,
                (None, None) => $default,
            }
        };
    }

    let model_name = pick!(args.model, "model", "dsaw".to_string());
    let variant = ModelVariant::parse(&model_name)
        .ok_or_else(|| usage(format!("unknown model variant {model_name:?}")))?;
    if !variant.is_discrete() {
        for (flag, name) in [
            (args.beta.is_some(), "--beta"),
            (args.anneal_start.is_some(), "--anneal-start"),
            (args.affine.is_some(), "--affine"),
        ] {
            if flag {
                return Err(usage(format!(
                    "{name} only applies to the discrete variants (dsaw, sgbtl), not {model_name}"
                )));
            }
        }
    }
    let affine_str = pick!(args.affine, "affine", "on".to_string());
    let affine = match affine_str.as_str() {
        "on" => true,
        "off" => false,
        other => return Err(usage(format!("--affine must be on or off, got {other:?}"))),
    };
    let subsample_variant_str =
        pick!(args.subsample_variant, "subsample_variant", "implementation".to_string());
    let subsample_variant = match subsample_variant_str.as_str() {
        "implementation" => SubsampleVariant::Implementation,
        "paper" => SubsampleVariant::Paper,
        other => {
            return Err(usage(format!(
                "--subsample-variant must be implementation or paper, got {other:?}"
            )))
        }
    };

    let defaults = TrainConfig::default();
    let config = TrainConfig {
        variant,
        dim: pick!(args.dim, "dim", defaults.dim),
        window: pick!(args.window, "window", defaults.window),
        negatives: pick!(args.negatives, "negatives", defaults.negatives),
        lr: pick!(args.lr, "lr", defaults.lr),
        beta: if variant.is_discrete() { pick!(args.beta, "beta", defaults.beta) } else { 0.0 },
        epochs: pick!(args.epochs, "epochs", defaults.epochs),
        batch_size: pick!(args.batch_size, "batch_size", defaults.batch_size),
        anneal_start: pick!(args.anneal_start, "anneal_start", defaults.anneal_start),
        affine,
        seed: pick!(args.seed, "seed", 0),
    };
    if config.window < 1 {
        return Err(usage("--window must be at least 1"));
    }
    if config.negatives < 1 {
        return Err(usage("--negatives must be at least 1"));
    }
    let downcase = if args.no_downcase {
        false
    } else {
        match file.get("downcase") {
            Some(v) => parse_from(v, "downcase")?,
            None => true,
        }
    };
    Ok(Resolved {
        variant,
        config,
        min_count: pick!(args.min_count, "min_count", 1),
        subsample: pick!(args.subsample, "subsample", 1e-4),
        subsample_variant,
        noise_power: pick!(args.noise_power, "noise_power", 0.75),
        downcase,
    })
}

fn resolved_config(r: &Resolved) -> ResolvedConfig {
    let mut c = ResolvedConfig::new();
    c.set("model", r.variant.name());
    c.set("dim", r.config.dim);
    c.set("window", r.config.window);
    c.set("negatives", r.config.negatives);
    c.set("lr", r.config.lr);
    c.set("beta", r.config.beta);
    c.set("epochs", r.config.epochs);
    c.set("batch_size", r.config.batch_size);
    c.set("anneal_start", r.config.anneal_start);
    c.set("affine", if r.config.affine { "on" } else { "off" });
    c.set("seed", r.config.seed);
    c.set("min_count", r.min_count);
    c.set("subsample", r.subsample);
    c.set(
        "subsample_variant",
        match r.subsample_variant {
            SubsampleVariant::Implementation => "implementation",
            SubsampleVariant::Paper => "paper",
        },
    );
    c.set("noise_power", r.noise_power);
    c.set("downcase", r.downcase);
    c
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let resolved = resolve(&args)?;
    let text = fs::read_to_string(&args.corpus)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", args.corpus.display())))?;
    let lines = tokenize_lines(&text, resolved.downcase);
    let flat = lines.iter().flatten();
    let mut vocab = Vocabulary::build(flat, resolved.min_count)?;
    vocab.subsample_threshold = resolved.subsample;
    vocab.subsample_variant = resolved.subsample_variant;
    vocab.set_noise_power(resolved.noise_power);

    eprintln!(
        "training {} (V={}, E={}, {} epochs, seed {})",
        resolved.variant,
        vocab.len(),
        resolved.config.dim,
        resolved.config.epochs,
        resolved.config.seed
    );
    let outcome = train(&lines, &vocab, &resolved.config)?;

    let dir = ModelDir::new(&args.out);
    dir.save(&outcome.model, &vocab)?;
    let mut metrics = Vec::new();
    write_metrics_csv(&outcome.metrics, &mut metrics)?;
    atomic_write(&args.out.join("metrics.csv"), &metrics)?;
    atomic_write(
        &args.out.join("config.txt"),
        resolved_config(&resolved).to_text().as_bytes(),
    )?;
    eprintln!("model written to {}", args.out.display());
    Ok(())
}
