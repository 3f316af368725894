//! Corpus ingestion: vocabulary construction, frequency subsampling and
//! streaming of (context, center) training samples with negative draws.
//!
//! Input corpora are UTF-8 plain text, one sentence per line. Context windows
//! never cross line boundaries.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("vocabulary is empty after pruning (min_count = {min_count})")]
    EmptyVocabulary { min_count: u64 },
    #[error("vocabulary file is not sorted by descending count at line {line}")]
    NotSorted { line: usize },
    #[error("malformed vocabulary line {line}: {text:?}")]
    MalformedLine { line: usize, text: String },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Which down-sampling formula to use. The reference implementation of the
/// word2vec toolkit ships a different formula from the one in its paper;
/// both are supported and `Implementation` is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubsampleVariant {
    /// p = 1 - sqrt(t / f)
    Paper,
    /// p = 1 - (sqrt(f / t) + 1) * t / f
    Implementation,
}

/// Probability of dropping a word with corpus frequency `f` at threshold `t`,
/// clamped to [0, 1].
pub fn subsample_prob(f: f64, t: f64, variant: SubsampleVariant) -> f64 {
    let raw = match variant {
        SubsampleVariant::Paper => 1.0 - (t / f).sqrt(),
        SubsampleVariant::Implementation => 1.0 - ((f / t).sqrt() + 1.0) * t / f,
    };
    raw.clamp(0.0, 1.0)
}

/// Frequency-ranked word table. Ids are dense in `0..len()`, assigned in
/// descending count order with ties broken by first occurrence in the stream.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    words: Vec<(String, u64)>,
    word_to_id: HashMap<String, u32>,
    total_tokens: u64,
    min_count: u64,
    /// Subsampling threshold t; a non-positive value disables subsampling.
    pub subsample_threshold: f64,
    pub subsample_variant: SubsampleVariant,
    noise_power: f64,
    noise_cdf: Vec<f64>,
}

impl Vocabulary {
    /// Counts `tokens`, prunes words with fewer than `min_count` occurrences
    /// and assigns dense ids. Subsampling and noise parameters start at the
    /// word2vec defaults (t = 1e-4, implementation formula, power 0.75).
    pub fn build<I, S>(tokens: I, min_count: u64) -> Result<Vocabulary, CorpusError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut counts: HashMap<String, (u64, usize)> = HashMap::new();
        let mut order = 0usize;
        for tok in tokens {
            let tok = tok.as_ref();
            match counts.get_mut(tok) {
                Some((c, _)) => *c += 1,
                None => {
                    counts.insert(tok.to_string(), (1, order));
                    order += 1;
                }
            }
        }
        let mut words: Vec<(String, u64, usize)> = counts
            .into_iter()
            .filter(|(_, (c, _))| *c >= min_count)
            .map(|(w, (c, o))| (w, c, o))
            .collect();
        if words.is_empty() {
            return Err(CorpusError::EmptyVocabulary { min_count });
        }
        words.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        let words: Vec<(String, u64)> = words.into_iter().map(|(w, c, _)| (w, c)).collect();
        Ok(Vocabulary::from_sorted(words, min_count))
    }

    fn from_sorted(words: Vec<(String, u64)>, min_count: u64) -> Vocabulary {
        let word_to_id = words
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i as u32))
            .collect();
        let total_tokens = words.iter().map(|(_, c)| c).sum();
        let mut vocab = Vocabulary {
            words,
            word_to_id,
            total_tokens,
            min_count,
            subsample_threshold: 1e-4,
            subsample_variant: SubsampleVariant::Implementation,
            noise_power: 0.75,
            noise_cdf: Vec::new(),
        };
        vocab.rebuild_noise_cdf();
        vocab
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> Option<u32> {
        self.word_to_id.get(word).copied()
    }

    pub fn word(&self, id: u32) -> &str {
        &self.words[id as usize].0
    }

    pub fn count(&self, id: u32) -> u64 {
        self.words[id as usize].1
    }

    pub fn total_tokens(&self) -> u64 {
        self.total_tokens
    }

    pub fn min_count(&self) -> u64 {
        self.min_count
    }

    /// Corpus frequency of a word, in (0, 1].
    pub fn frequency(&self, id: u32) -> f64 {
        self.count(id) as f64 / self.total_tokens as f64
    }

    pub fn noise_power(&self) -> f64 {
        self.noise_power
    }

    pub fn set_noise_power(&mut self, power: f64) {
        self.noise_power = power;
        self.rebuild_noise_cdf();
    }

    fn rebuild_noise_cdf(&mut self) {
        let weights: Vec<f64> = self
            .words
            .iter()
            .map(|(_, c)| (*c as f64).powf(self.noise_power))
            .collect();
        let total: f64 = weights.iter().sum();
        let mut acc = 0.0;
        self.noise_cdf = weights
            .iter()
            .map(|w| {
                acc += w / total;
                acc
            })
            .collect();
        if let Some(last) = self.noise_cdf.last_mut() {
            *last = 1.0;
        }
    }

    /// Maps a tokenized line to ids, dropping out-of-vocabulary tokens.
    pub fn line_to_ids(&self, line: &[String]) -> Vec<u32> {
        line.iter().filter_map(|t| self.id(t)).collect()
    }

    /// Writes "word<TAB>count" lines in id order.
    pub fn save<W: Write>(&self, mut w: W) -> Result<(), CorpusError> {
        for (word, count) in &self.words {
            writeln!(w, "{word}\t{count}")?;
        }
        Ok(())
    }

    /// Reads a vocabulary written by [`Vocabulary::save`]. Ids are line
    /// indices; the file must be sorted by descending count.
    pub fn load<R: BufRead>(r: R, min_count: u64) -> Result<Vocabulary, CorpusError> {
        let mut words = Vec::new();
        let mut prev = u64::MAX;
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (word, count) = line
                .split_once('\t')
                .ok_or_else(|| CorpusError::MalformedLine { line: i + 1, text: line.clone() })?;
            let count: u64 = count
                .parse()
                .map_err(|_| CorpusError::MalformedLine { line: i + 1, text: line.clone() })?;
            if count > prev {
                return Err(CorpusError::NotSorted { line: i + 1 });
            }
            prev = count;
            words.push((word.to_string(), count));
        }
        if words.is_empty() {
            return Err(CorpusError::EmptyVocabulary { min_count });
        }
        Ok(Vocabulary::from_sorted(words, min_count))
    }

    /// FNV-1a hash of the serialized table, stored in model files so a model
    /// cannot silently be paired with the wrong vocabulary.
    pub fn integrity_hash(&self) -> u64 {
        let mut bytes = Vec::new();
        self.save(&mut bytes).expect("vec write");
        let mut h = 0xcbf29ce484222325u64;
        for b in bytes {
            h ^= b as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
        h
    }
}

/// One training sample: a center word and its ordered 2c context
/// (positions i-c..i-1 then i+1..i+c).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContextSample {
    pub center: u32,
    pub context: Vec<u32>,
}

/// Splits text into whitespace tokens per line, optionally downcased.
pub fn tokenize_lines(text: &str, downcase: bool) -> Vec<Vec<String>> {
    text.lines()
        .map(|line| {
            line.split_whitespace()
                .map(|t| if downcase { t.to_lowercase() } else { t.to_string() })
                .collect()
        })
        .collect()
}

/// Deterministic stream of [`ContextSample`]s. Out-of-vocabulary tokens are
/// dropped first, then each surviving token is discarded with its subsampling
/// probability; full windows are slid over what remains of each line.
pub struct SampleStream {
    lines: Vec<Vec<u32>>,
    drop_probs: Vec<f64>,
    radius: usize,
    rng: ChaCha8Rng,
    line_idx: usize,
    current: Vec<u32>,
    window_pos: usize,
}

impl SampleStream {
    pub fn new(lines: &[Vec<String>], vocab: &Vocabulary, radius: usize, seed: u64) -> SampleStream {
        let id_lines = lines.iter().map(|l| vocab.line_to_ids(l)).collect();
        SampleStream::from_ids(id_lines, vocab, radius, seed)
    }

    /// Variant over pre-mapped id lines (OOV already removed).
    pub fn from_ids(
        lines: Vec<Vec<u32>>,
        vocab: &Vocabulary,
        radius: usize,
        seed: u64,
    ) -> SampleStream {
        assert!(radius >= 1, "context radius must be at least 1");
        let t = vocab.subsample_threshold;
        let drop_probs = (0..vocab.len() as u32)
            .map(|id| {
                if t > 0.0 {
                    subsample_prob(vocab.frequency(id), t, vocab.subsample_variant)
                } else {
                    0.0
                }
            })
            .collect();
        SampleStream {
            lines,
            drop_probs,
            radius,
            rng: ChaCha8Rng::seed_from_u64(seed),
            line_idx: 0,
            current: Vec::new(),
            window_pos: 0,
        }
    }

    fn advance_line(&mut self) -> bool {
        while self.line_idx < self.lines.len() {
            let line = &self.lines[self.line_idx];
            self.line_idx += 1;
            let survivors: Vec<u32> = line
                .iter()
                .filter(|&&id| {
                    let p = self.drop_probs[id as usize];
                    p <= 0.0 || self.rng.gen::<f64>() >= p
                })
                .copied()
                .collect();
            if survivors.len() >= 2 * self.radius + 1 {
                self.current = survivors;
                self.window_pos = self.radius;
                return true;
            }
        }
        false
    }
}

impl Iterator for SampleStream {
    type Item = ContextSample;

    fn next(&mut self) -> Option<ContextSample> {
        loop {
            if !self.current.is_empty() && self.window_pos + self.radius < self.current.len() {
                let i = self.window_pos;
                self.window_pos += 1;
                let mut context = Vec::with_capacity(2 * self.radius);
                context.extend_from_slice(&self.current[i - self.radius..i]);
                context.extend_from_slice(&self.current[i + 1..=i + self.radius]);
                return Some(ContextSample { center: self.current[i], context });
            }
            self.current.clear();
            if !self.advance_line() {
                return None;
            }
        }
    }
}

fn draw_one<R: Rng>(vocab: &Vocabulary, rng: &mut R) -> u32 {
    let u: f64 = rng.gen();
    vocab.noise_cdf.partition_point(|&c| c < u) as u32
}

/// Draws `k` word ids i.i.d. from the unigram distribution raised to the
/// vocabulary's noise power.
pub fn draw_negatives<R: Rng>(vocab: &Vocabulary, k: usize, rng: &mut R) -> Vec<u32> {
    (0..k).map(|_| draw_one(vocab, rng)).collect()
}

/// Like [`draw_negatives`] but re-draws any sample that collides with the
/// positive word being scored, as the reference word2vec implementation
/// skips such draws. A single-word vocabulary cannot exclude anything and
/// returns the only id.
pub fn draw_negatives_excluding<R: Rng>(
    vocab: &Vocabulary,
    k: usize,
    exclude: u32,
    rng: &mut R,
) -> Vec<u32> {
    (0..k)
        .map(|_| loop {
            let id = draw_one(vocab, rng);
            if id != exclude || vocab.len() == 1 {
                break id;
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &str) -> Vec<String> {
        s.split_whitespace().map(|t| t.to_string()).collect()
    }

    #[test]
    fn build_vocab_counts_and_ids() {
        let v = Vocabulary::build(toks("a a b"), 1).unwrap();
        assert_eq!(v.len(), 2);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("b"), Some(1));
        assert!((v.frequency(0) - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn build_vocab_prunes_below_min_count() {
        let v = Vocabulary::build(toks("a a b"), 2).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("b"), None);
    }

    #[test]
    fn build_vocab_empty_after_pruning_errors() {
        assert!(matches!(
            Vocabulary::build(toks("a b c"), 5),
            Err(CorpusError::EmptyVocabulary { min_count: 5 })
        ));
    }

    #[test]
    fn ids_match_independent_sort_oracle() {
        // Known counts with ties: w_i appears 5 + (i % 4) * 3 times, so words
        // share counts across residue classes and first occurrence decides.
        let counts: Vec<u64> = (0..20).map(|i| 5 + (i % 4) * 3).collect();
        let mut tokens = Vec::new();
        for i in 0..20 {
            tokens.push(format!("w{i}")); // pins first-occurrence order
        }
        for round in 1..14 {
            for i in 0..20 {
                if (round as u64) < counts[i] {
                    tokens.push(format!("w{i}"));
                }
            }
        }
        let v = Vocabulary::build(tokens.iter(), 1).unwrap();

        // Oracle: sort the (count, first-occurrence) table independently.
        let mut table: Vec<(u64, usize, String)> =
            (0..20).map(|i| (counts[i], i, format!("w{i}"))).collect();
        table.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        for (rank, (count, _, word)) in table.iter().enumerate() {
            assert_eq!(v.id(word), Some(rank as u32), "{word}");
            assert_eq!(v.count(rank as u32), *count);
        }
    }

    #[test]
    fn subsample_prob_spot_values() {
        let p = subsample_prob(0.05, 1e-4, SubsampleVariant::Implementation);
        assert!((p - 0.9532786).abs() < 1e-6, "got {p}");
        let p = subsample_prob(0.05, 1e-5, SubsampleVariant::Paper);
        assert!((p - 0.9858579).abs() < 1e-6, "got {p}");
    }

    #[test]
    fn subsample_prob_clamps_to_zero_below_threshold() {
        for variant in [SubsampleVariant::Paper, SubsampleVariant::Implementation] {
            assert_eq!(subsample_prob(1e-5, 1e-4, variant), 0.0);
            assert_eq!(subsample_prob(1e-4, 1e-4, variant), 0.0);
        }
    }

    #[test]
    fn subsample_prob_monotone_in_frequency() {
        for variant in [SubsampleVariant::Paper, SubsampleVariant::Implementation] {
            let mut prev = -1.0;
            for i in 1..=1000 {
                let f = i as f64 / 1000.0;
                let p = subsample_prob(f, 1e-4, variant);
                assert!(p >= prev, "variant {variant:?} not monotone at f={f}");
                prev = p;
            }
        }
    }

    fn no_subsample(v: &mut Vocabulary) {
        v.subsample_threshold = 0.0;
    }

    #[test]
    fn stream_single_full_window() {
        let lines = tokenize_lines("a b c d e", false);
        let mut v = Vocabulary::build(toks("a b c d e"), 1).unwrap();
        no_subsample(&mut v);
        let samples: Vec<_> = SampleStream::new(&lines, &v, 2, 0).collect();
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].center, v.id("c").unwrap());
        let ctx: Vec<u32> =
            ["a", "b", "d", "e"].iter().map(|w| v.id(w).unwrap()).collect();
        assert_eq!(samples[0].context, ctx);
    }

    #[test]
    fn stream_short_line_yields_nothing() {
        let lines = tokenize_lines("a b", false);
        let mut v = Vocabulary::build(toks("a b"), 1).unwrap();
        no_subsample(&mut v);
        assert_eq!(SampleStream::new(&lines, &v, 2, 0).count(), 0);
    }

    #[test]
    fn stream_is_deterministic_per_seed() {
        // 10k-token corpus with subsampling active so the rng matters.
        let mut text = String::new();
        for i in 0..1000 {
            for j in 0..10 {
                text.push_str(&format!("w{} ", (i * 7 + j * 13) % 23));
            }
            text.push('\n');
        }
        let lines = tokenize_lines(&text, false);
        let flat: Vec<String> = lines.iter().flatten().cloned().collect();
        let mut v = Vocabulary::build(flat.iter(), 1).unwrap();
        v.subsample_threshold = 0.005;
        let a: Vec<_> = SampleStream::new(&lines, &v, 2, 7).collect();
        let b: Vec<_> = SampleStream::new(&lines, &v, 2, 7).collect();
        let c: Vec<_> = SampleStream::new(&lines, &v, 2, 8).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
        // Emitted samples are always full windows of in-vocabulary ids.
        for s in &a {
            assert_eq!(s.context.len(), 4);
            assert!((s.center as usize) < v.len());
            assert!(s.context.iter().all(|&id| (id as usize) < v.len()));
        }
    }

    #[test]
    fn windows_do_not_cross_lines() {
        let lines = tokenize_lines("a b c\nd e f g h", false);
        let mut v = Vocabulary::build(toks("a b c d e f g h"), 1).unwrap();
        no_subsample(&mut v);
        let samples: Vec<_> = SampleStream::new(&lines, &v, 2, 0).collect();
        // First line is too short; second yields exactly one window.
        assert_eq!(samples.len(), 1);
        assert_eq!(samples[0].center, v.id("f").unwrap());
    }

    #[test]
    fn negatives_degenerate_single_word() {
        let v = Vocabulary::build(toks("a a a"), 1).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(draw_negatives(&v, 50, &mut rng).iter().all(|&id| id == 0));
    }

    #[test]
    fn negatives_uniform_at_power_zero() {
        let mut tokens = Vec::new();
        for _ in 0..900 {
            tokens.push("a");
        }
        for _ in 0..90 {
            tokens.push("b");
        }
        for _ in 0..10 {
            tokens.push("c");
        }
        let mut v = Vocabulary::build(tokens, 1).unwrap();
        v.set_noise_power(0.0);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let n = 100_000usize;
        let mut hits = [0usize; 3];
        for id in draw_negatives(&v, n, &mut rng) {
            hits[id as usize] += 1;
        }
        let p = 1.0 / 3.0;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for h in hits {
            assert!(
                (h as f64 - n as f64 * p).abs() < 3.0 * sigma,
                "count {h} outside 3 sigma of {}",
                n as f64 * p
            );
        }
    }

    #[test]
    fn negatives_match_powered_unigram() {
        let mut tokens = Vec::new();
        for _ in 0..900 {
            tokens.push("a");
        }
        for _ in 0..90 {
            tokens.push("b");
        }
        for _ in 0..10 {
            tokens.push("c");
        }
        let v = Vocabulary::build(tokens, 1).unwrap();
        assert_eq!(v.noise_power(), 0.75);
        let z = 900f64.powf(0.75) + 90f64.powf(0.75) + 10f64.powf(0.75);
        let expect = [900f64.powf(0.75) / z, 90f64.powf(0.75) / z, 10f64.powf(0.75) / z];
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 100_000usize;
        let mut hits = [0usize; 3];
        for id in draw_negatives(&v, n, &mut rng) {
            hits[id as usize] += 1;
        }
        for (h, p) in hits.iter().zip(expect) {
            let sigma = (n as f64 * p * (1.0 - p)).sqrt();
            assert!(
                (*h as f64 - n as f64 * p).abs() < 3.0 * sigma,
                "count {h} vs expected {}",
                n as f64 * p
            );
        }
    }

    #[test]
    fn vocab_save_load_roundtrip() {
        let v = Vocabulary::build(toks("b a a c a b"), 1).unwrap();
        let mut buf = Vec::new();
        v.save(&mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf), "a\t3\nb\t2\nc\t1\n");
        let loaded = Vocabulary::load(buf.as_slice(), 1).unwrap();
        assert_eq!(loaded.id("a"), Some(0));
        assert_eq!(loaded.id("c"), Some(2));
        assert_eq!(loaded.total_tokens(), 6);
        assert_eq!(loaded.integrity_hash(), v.integrity_hash());
    }
}
