//! Evaluation protocols over trained models: word similarity (Spearman),
//! word analogy (continuous and discrete methods), document classification
//! with logistic regression, effect-density statistics and PCA export.

pub mod logistic;
mod stats;

pub use stats::{pca2, spearman, Pca2};

use crate::algebra::{
    combine, cosine, nearest, tertiary, AlgebraError, BinaryEffect, EffectOp, EffectTable,
};
use crate::bits::BitVec;
use crate::corpus::Vocabulary;
use crate::nncore::ModelParameters;
use crate::planner::PlannerError;
use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::io::Write;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("need at least 2 usable pairs, got {used}")]
    TooFewPairs { used: usize },
    #[error("correlation is undefined for a constant score vector")]
    ConstantInput,
    #[error("method {method} requires a {requires} model")]
    MethodMismatch { method: &'static str, requires: &'static str },
    #[error("training split contains a single class")]
    SingleClassTraining,
    #[error("{0}")]
    NotEnoughData(String),
    #[error("malformed dataset line {line}: {msg}")]
    MalformedDataset { line: usize, msg: String },
    #[error("bad analogy ordering {0:?}: expected a permutation of signed a, a*, b")]
    BadOrdering(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Planner(#[from] PlannerError),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

// ---------------------------------------------------------------------------
// Datasets

/// Word pairs with human similarity scores ("word1<TAB>word2<TAB>score").
#[derive(Debug, Clone)]
pub struct SimilarityDataset {
    pub pairs: Vec<(String, String, f64)>,
}

impl SimilarityDataset {
    pub fn parse(text: &str) -> Result<SimilarityDataset, EvalError> {
        let mut pairs = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let err = |msg: &str| EvalError::MalformedDataset { line: i + 1, msg: msg.into() };
            if fields.len() != 3 {
                return Err(err("expected word<TAB>word<TAB>score"));
            }
            let score: f64 =
                fields[2].trim().parse().map_err(|_| err("score is not a number"))?;
            if !score.is_finite() {
                return Err(err("score is not finite"));
            }
            pairs.push((fields[0].to_string(), fields[1].to_string(), score));
        }
        Ok(SimilarityDataset { pairs })
    }
}

/// "a is to a* as b is to b*", with its dataset category.
#[derive(Debug, Clone)]
pub struct AnalogyQuestion {
    pub a: String,
    pub a_star: String,
    pub b: String,
    pub b_star: String,
    pub category: String,
}

/// Google-analogy layout: ": category" headers, four words per line.
pub fn parse_analogy(text: &str) -> Result<Vec<AnalogyQuestion>, EvalError> {
    let mut out = Vec::new();
    let mut category = "default".to_string();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix(':') {
            category = rest.trim().to_string();
            continue;
        }
        let words: Vec<&str> = line.split_whitespace().collect();
        if words.len() != 4 {
            return Err(EvalError::MalformedDataset {
                line: i + 1,
                msg: "expected four words".into(),
            });
        }
        out.push(AnalogyQuestion {
            a: words[0].to_string(),
            a_star: words[1].to_string(),
            b: words[2].to_string(),
            b_star: words[3].to_string(),
            category: category.clone(),
        });
    }
    Ok(out)
}

/// Labeled documents, one per line: "label<TAB>text". In sentiment mode the
/// label is a real sentiment value thresholded at <= 0.4 -> 0, > 0.6 -> 1,
/// with the neutral band dropped.
pub fn parse_classify(text: &str, sentiment: bool) -> Result<Vec<(u8, Vec<String>)>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: &str| EvalError::MalformedDataset { line: i + 1, msg: msg.into() };
        let (label, body) = line.split_once('\t').ok_or_else(|| err("expected label<TAB>text"))?;
        let label = if sentiment {
            let v: f64 = label.trim().parse().map_err(|_| err("sentiment is not a number"))?;
            if v <= 0.4 {
                0
            } else if v > 0.6 {
                1
            } else {
                continue; // neutral band
            }
        } else {
            match label.trim() {
                "0" => 0,
                "1" => 1,
                other => return Err(err(&format!("label must be 0 or 1, got {other:?}"))),
            }
        };
        let words = body.split_whitespace().map(|w| w.to_string()).collect();
        out.push((label, words));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Embedding access

/// Uniform view over the two model families: continuous rows for CBOW/SG,
/// extracted effects plus their tertiary vectors for the discrete models.
pub enum EmbeddingSpace {
    Continuous { rows: Vec<Vec<f64>> },
    Discrete { effects: EffectTable, tertiary: Vec<Vec<f64>> },
}

impl EmbeddingSpace {
    pub fn from_model(
        model: &ModelParameters,
        vocab: &Vocabulary,
    ) -> Result<EmbeddingSpace, EvalError> {
        if model.variant.is_discrete() {
            let effects = EffectTable::extract(model, vocab)?;
            let tertiary =
                (0..vocab.len() as u32).map(|id| effects.tertiary(id).to_f64()).collect();
            Ok(EmbeddingSpace::Discrete { effects, tertiary })
        } else {
            let rows =
                (0..vocab.len() as u32).map(|id| model.effect_row(id).to_vec()).collect();
            Ok(EmbeddingSpace::Continuous { rows })
        }
    }

    pub fn from_effects(effects: EffectTable) -> EmbeddingSpace {
        let tertiary =
            (0..effects.len() as u32).map(|id| effects.tertiary(id).to_f64()).collect();
        EmbeddingSpace::Discrete { effects, tertiary }
    }

    pub fn is_discrete(&self) -> bool {
        matches!(self, EmbeddingSpace::Discrete { .. })
    }

    pub fn len(&self) -> usize {
        match self {
            EmbeddingSpace::Continuous { rows } => rows.len(),
            EmbeddingSpace::Discrete { tertiary, .. } => tertiary.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The vector used for cosine comparisons.
    pub fn vector(&self, id: u32) -> &[f64] {
        match self {
            EmbeddingSpace::Continuous { rows } => &rows[id as usize],
            EmbeddingSpace::Discrete { tertiary, .. } => &tertiary[id as usize],
        }
    }

    pub fn effects(&self) -> Option<&EffectTable> {
        match self {
            EmbeddingSpace::Discrete { effects, .. } => Some(effects),
            EmbeddingSpace::Continuous { .. } => None,
        }
    }
}

// ---------------------------------------------------------------------------
// Word similarity

#[derive(Debug, Clone)]
pub struct SimilarityReport {
    pub pairs_total: usize,
    pub pairs_used: usize,
    pub pairs_skipped: usize,
    pub rho: f64,
}

fn pair_scores(
    space: &EmbeddingSpace,
    vocab: &Vocabulary,
    dataset: &SimilarityDataset,
) -> (Vec<(f64, f64)>, usize) {
    let mut used = Vec::new();
    let mut skipped = 0;
    for (w1, w2, human) in &dataset.pairs {
        let (Some(a), Some(b)) = (vocab.id(w1), vocab.id(w2)) else {
            skipped += 1;
            continue;
        };
        match cosine(space.vector(a), space.vector(b)) {
            Ok(model_score) => used.push((model_score, *human)),
            Err(_) => skipped += 1, // zero vector: no direction to compare
        }
    }
    (used, skipped)
}

/// Spearman correlation between the space's cosine similarities and the
/// human scores. Out-of-vocabulary (and zero-vector) pairs are counted and
/// excluded.
pub fn similarity_eval(
    space: &EmbeddingSpace,
    vocab: &Vocabulary,
    dataset: &SimilarityDataset,
) -> Result<SimilarityReport, EvalError> {
    let (used, skipped) = pair_scores(space, vocab, dataset);
    if used.len() < 2 {
        return Err(EvalError::TooFewPairs { used: used.len() });
    }
    let xs: Vec<f64> = used.iter().map(|(m, _)| *m).collect();
    let ys: Vec<f64> = used.iter().map(|(_, h)| *h).collect();
    Ok(SimilarityReport {
        pairs_total: dataset.pairs.len(),
        pairs_used: used.len(),
        pairs_skipped: skipped,
        rho: spearman(&xs, &ys)?,
    })
}

/// Per-dataset reports plus the pooled correlation over all pairs.
pub fn similarity_eval_many(
    space: &EmbeddingSpace,
    vocab: &Vocabulary,
    datasets: &[(String, SimilarityDataset)],
) -> Result<(Vec<(String, SimilarityReport)>, SimilarityReport), EvalError> {
    let mut reports = Vec::new();
    let mut pooled = Vec::new();
    let mut total = 0;
    let mut skipped_all = 0;
    for (name, ds) in datasets {
        reports.push((name.clone(), similarity_eval(space, vocab, ds)?));
        let (used, skipped) = pair_scores(space, vocab, ds);
        total += ds.pairs.len();
        skipped_all += skipped;
        pooled.extend(used);
    }
    let xs: Vec<f64> = pooled.iter().map(|(m, _)| *m).collect();
    let ys: Vec<f64> = pooled.iter().map(|(_, h)| *h).collect();
    let pooled_report = SimilarityReport {
        pairs_total: total,
        pairs_used: pooled.len(),
        pairs_skipped: skipped_all,
        rho: spearman(&xs, &ys)?,
    };
    Ok((reports, pooled_report))
}

// ---------------------------------------------------------------------------
// Analogy

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnalogyTerm {
    A,
    AStar,
    B,
}

/// An ordering of the signed terms applied left to right, e.g. -a +a* +b.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeqOrdering {
    pub terms: Vec<(EffectOp, AnalogyTerm)>,
}

impl SeqOrdering {
    /// The reported-best ordering -a +a* +b.
    pub fn default_best() -> SeqOrdering {
        SeqOrdering {
            terms: vec![
                (EffectOp::Minus, AnalogyTerm::A),
                (EffectOp::Plus, AnalogyTerm::AStar),
                (EffectOp::Plus, AnalogyTerm::B),
            ],
        }
    }

    /// All six permutations of the three signed terms.
    pub fn all_six() -> Vec<SeqOrdering> {
        let items = [
            (EffectOp::Minus, AnalogyTerm::A),
            (EffectOp::Plus, AnalogyTerm::AStar),
            (EffectOp::Plus, AnalogyTerm::B),
        ];
        let mut out = Vec::new();
        for i in 0..3 {
            for j in 0..3 {
                if j == i {
                    continue;
                }
                let k = 3 - i - j;
                out.push(SeqOrdering { terms: vec![items[i], items[j], items[k]] });
            }
        }
        out
    }

    /// Parses strings like "-a+a*+b" or "b-a+a*" (a leading bare term is
    /// positive). Each of a, a*, b must appear exactly once.
    pub fn parse(s: &str) -> Result<SeqOrdering, EvalError> {
        let bad = || EvalError::BadOrdering(s.to_string());
        let mut terms = Vec::new();
        let mut rest = s.trim();
        while !rest.is_empty() {
            let op = if let Some(r) = rest.strip_prefix('+') {
                rest = r;
                EffectOp::Plus
            } else if let Some(r) = rest.strip_prefix('-') {
                rest = r;
                EffectOp::Minus
            } else if terms.is_empty() {
                EffectOp::Plus
            } else {
                return Err(bad());
            };
            let (term, r) = if let Some(r) = rest.strip_prefix("a*") {
                (AnalogyTerm::AStar, r)
            } else if let Some(r) = rest.strip_prefix('a') {
                (AnalogyTerm::A, r)
            } else if let Some(r) = rest.strip_prefix('b') {
                (AnalogyTerm::B, r)
            } else {
                return Err(bad());
            };
            rest = r;
            terms.push((op, term));
        }
        let mut seen = [false; 3];
        for (_, t) in &terms {
            let i = *t as usize;
            if seen[i] {
                return Err(bad());
            }
            seen[i] = true;
        }
        if terms.len() != 3 {
            return Err(bad());
        }
        Ok(SeqOrdering { terms })
    }
}

impl std::fmt::Display for SeqOrdering {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (op, term) in &self.terms {
            let sign = match op {
                EffectOp::Plus => '+',
                EffectOp::Minus => '-',
            };
            let name = match term {
                AnalogyTerm::A => "a",
                AnalogyTerm::AStar => "a*",
                AnalogyTerm::B => "b",
            };
            write!(f, "{sign}{name}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub enum AnalogyMethod {
    /// Continuous: rank by cosine to a* - a + b.
    ThreeCosAdd,
    /// Discrete: combined effect in the given order, compared as a tertiary
    /// vector.
    SeqAdd(SeqOrdering),
    /// a* + b (continuous sum or discrete composition).
    IgnoreA,
    /// b unmodified.
    OnlyB,
}

#[derive(Debug, Clone, Default)]
pub struct AnalogyStats {
    pub questions: usize,
    pub used: usize,
    pub skipped_oov: usize,
    pub correct: usize,
}

impl AnalogyStats {
    pub fn accuracy(&self) -> f64 {
        if self.used == 0 {
            0.0
        } else {
            self.correct as f64 / self.used as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct AnalogyReport {
    pub per_category: Vec<(String, AnalogyStats)>,
    pub total: AnalogyStats,
}

fn add_vecs(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn sub_vecs(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

fn analogy_query(
    space: &EmbeddingSpace,
    method: &AnalogyMethod,
    a: u32,
    a_star: u32,
    b: u32,
) -> Result<Vec<f64>, EvalError> {
    match (space, method) {
        (EmbeddingSpace::Continuous { .. }, AnalogyMethod::ThreeCosAdd) => {
            Ok(add_vecs(&sub_vecs(space.vector(a_star), space.vector(a)), space.vector(b)))
        }
        (EmbeddingSpace::Continuous { .. }, AnalogyMethod::IgnoreA) => {
            Ok(add_vecs(space.vector(a_star), space.vector(b)))
        }
        (_, AnalogyMethod::OnlyB) => Ok(space.vector(b).to_vec()),
        (EmbeddingSpace::Discrete { effects, .. }, AnalogyMethod::SeqAdd(ordering)) => {
            let pick = |t: AnalogyTerm| match t {
                AnalogyTerm::A => effects.get(a),
                AnalogyTerm::AStar => effects.get(a_star),
                AnalogyTerm::B => effects.get(b),
            };
            let seq: Vec<(EffectOp, &BinaryEffect)> =
                ordering.terms.iter().map(|(op, t)| (*op, pick(*t))).collect();
            Ok(tertiary(&combine(effects.width(), &seq)).to_f64())
        }
        (EmbeddingSpace::Discrete { effects, .. }, AnalogyMethod::IgnoreA) => {
            let seq: Vec<(EffectOp, &BinaryEffect)> =
                vec![(EffectOp::Plus, effects.get(a_star)), (EffectOp::Plus, effects.get(b))];
            Ok(tertiary(&combine(effects.width(), &seq)).to_f64())
        }
        (EmbeddingSpace::Continuous { .. }, AnalogyMethod::SeqAdd(_)) => {
            Err(EvalError::MethodMismatch { method: "seqAdd", requires: "discrete" })
        }
        (EmbeddingSpace::Discrete { .. }, AnalogyMethod::ThreeCosAdd) => {
            Err(EvalError::MethodMismatch { method: "3cosadd", requires: "continuous" })
        }
    }
}

/// Accuracy of predicting b* in the top-k neighbors of the method's query
/// vector, with a, a* and b excluded from the candidates. Out-of-vocabulary
/// questions are skipped and counted.
pub fn analogy_eval(
    space: &EmbeddingSpace,
    vocab: &Vocabulary,
    questions: &[AnalogyQuestion],
    method: &AnalogyMethod,
    topk: usize,
) -> Result<AnalogyReport, EvalError> {
    let mut per_category: Vec<(String, AnalogyStats)> = Vec::new();
    let mut total = AnalogyStats::default();
    for q in questions {
        let stats = match per_category.iter_mut().find(|(c, _)| *c == q.category) {
            Some((_, s)) => s,
            None => {
                per_category.push((q.category.clone(), AnalogyStats::default()));
                &mut per_category.last_mut().unwrap().1
            }
        };
        stats.questions += 1;
        total.questions += 1;
        let ids = (vocab.id(&q.a), vocab.id(&q.a_star), vocab.id(&q.b), vocab.id(&q.b_star));
        let (Some(a), Some(a_star), Some(b), Some(b_star)) = ids else {
            stats.skipped_oov += 1;
            total.skipped_oov += 1;
            continue;
        };
        stats.used += 1;
        total.used += 1;
        let query = analogy_query(space, method, a, a_star, b)?;
        let exclude = [a, a_star, b];
        let candidates = (0..vocab.len() as u32).map(|id| (id, space.vector(id).to_vec()));
        let hit = match nearest(&query, candidates, topk, &exclude) {
            Ok(ranked) => ranked.iter().any(|(id, _)| *id == b_star),
            Err(AlgebraError::ZeroVector) => false, // no direction to rank by
            Err(e) => return Err(e.into()),
        };
        if hit {
            stats.correct += 1;
            total.correct += 1;
        }
    }
    Ok(AnalogyReport { per_category, total })
}

// ---------------------------------------------------------------------------
// Document aggregation and classification

/// Document embedding: the discrete models progress the all-zero state
/// through each word's effect left to right and report the final state
/// shifted by -0.5; the continuous ones sum rows. Out-of-vocabulary words
/// are skipped.
pub fn aggregate_document(
    words: &[String],
    space: &EmbeddingSpace,
    vocab: &Vocabulary,
) -> Vec<f64> {
    match space {
        EmbeddingSpace::Discrete { effects, .. } => {
            let mut state = BitVec::zeros(effects.width());
            for w in words {
                if let Some(id) = vocab.id(w) {
                    state = crate::algebra::progress(&state, effects.get(id));
                }
            }
            (0..effects.width())
                .map(|j| if state.get(j) { 0.5 } else { -0.5 })
                .collect()
        }
        EmbeddingSpace::Continuous { rows } => {
            let dim = rows.first().map_or(0, Vec::len);
            let mut acc = vec![0.0; dim];
            for w in words {
                if let Some(id) = vocab.id(w) {
                    for (a, v) in acc.iter_mut().zip(&rows[id as usize]) {
                        *a += v;
                    }
                }
            }
            acc
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SplitSpec {
    pub train: f64,
    pub valid: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> SplitSpec {
        // The newsgroup-style proportions; test takes the remaining 0.40.
        SplitSpec { train: 0.48, valid: 0.12, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct ClassifyReport {
    pub train_n: usize,
    pub valid_n: usize,
    pub test_n: usize,
    pub chosen_l2: f64,
    pub valid_accuracy: f64,
    pub test_accuracy: f64,
}

const L2_GRID: [f64; 4] = [0.01, 0.1, 1.0, 10.0];

/// Aggregates documents, splits deterministically by the seed, sweeps the
/// L2 strength on the validation split and reports test accuracy.
pub fn classify_eval(
    space: &EmbeddingSpace,
    vocab: &Vocabulary,
    docs: &[(u8, Vec<String>)],
    split: SplitSpec,
) -> Result<ClassifyReport, EvalError> {
    if docs.len() < 5 {
        return Err(EvalError::NotEnoughData(format!(
            "need at least 5 documents to split, got {}",
            docs.len()
        )));
    }
    let features: Vec<Vec<f64>> =
        docs.iter().map(|(_, words)| aggregate_document(words, space, vocab)).collect();
    let labels: Vec<u8> = docs.iter().map(|(l, _)| *l).collect();

    let mut order: Vec<usize> = (0..docs.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(split.seed));
    let n_train = ((docs.len() as f64) * split.train).round() as usize;
    let n_valid = ((docs.len() as f64) * split.valid).round() as usize;
    let take = |idxs: &[usize]| -> (Vec<Vec<f64>>, Vec<u8>) {
        (
            idxs.iter().map(|&i| features[i].clone()).collect(),
            idxs.iter().map(|&i| labels[i]).collect(),
        )
    };
    let (train_x, train_y) = take(&order[..n_train]);
    let (valid_x, valid_y) = take(&order[n_train..n_train + n_valid]);
    let (test_x, test_y) = take(&order[n_train + n_valid..]);
    if train_y.iter().all(|&y| y == 0) || train_y.iter().all(|&y| y == 1) {
        return Err(EvalError::SingleClassTraining);
    }

    let mut best: Option<(f64, f64, logistic::LogisticModel)> = None;
    for l2 in L2_GRID {
        let model = logistic::fit(&train_x, &train_y, l2);
        let acc = if valid_y.is_empty() {
            model.accuracy(&train_x, &train_y)
        } else {
            model.accuracy(&valid_x, &valid_y)
        };
        let better = match &best {
            None => true,
            Some((best_acc, _, _)) => acc > *best_acc,
        };
        if better {
            best = Some((acc, l2, model));
        }
    }
    let (valid_accuracy, chosen_l2, model) = best.expect("non-empty grid");
    Ok(ClassifyReport {
        train_n: train_x.len(),
        valid_n: valid_x.len(),
        test_n: test_x.len(),
        chosen_l2,
        valid_accuracy,
        test_accuracy: model.accuracy(&test_x, &test_y),
    })
}

// ---------------------------------------------------------------------------
// Effect statistics

/// Per-word (add density, del density): popcount / E, in frequency-rank
/// (= id) order.
pub fn effect_density(effects: &EffectTable) -> Vec<(f64, f64)> {
    let e = effects.width() as f64;
    (0..effects.len() as u32)
        .map(|id| {
            let eff = effects.get(id);
            (eff.add().count_ones() as f64 / e, eff.del().count_ones() as f64 / e)
        })
        .collect()
}

pub fn write_density_csv<W: Write>(
    vocab: &Vocabulary,
    densities: &[(f64, f64)],
    mut w: W,
) -> Result<(), EvalError> {
    writeln!(w, "rank,word,add_density,del_density")?;
    for (rank, (add, del)) in densities.iter().enumerate() {
        writeln!(w, "{},{},{},{}", rank, vocab.word(rank as u32), add, del)?;
    }
    Ok(())
}
