//! The discrete effect algebra: extraction of per-word (add, del) bit
//! vectors from a trained discrete model, STRIPS progression/regression as
//! vector addition/subtraction, combined effects, tertiary vectors and
//! cosine neighbors.

use crate::bits::BitVec;
use crate::corpus::Vocabulary;
use crate::nncore::{btl_apply_hard, ModelParameters};
use std::io::{BufRead, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AlgebraError {
    #[error("effect extraction needs a discrete model variant, got {0}")]
    NotDiscrete(String),
    #[error("transition for word {word:?} violates the add/del/nop structure at dimension {dim}")]
    TheoremViolation { word: String, dim: usize },
    #[error("cosine is undefined for an all-zero vector")]
    ZeroVector,
    #[error("width mismatch: {0} vs {1}")]
    WidthMismatch(usize, usize),
    #[error("malformed effect line {line}")]
    MalformedLine { line: usize },
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// A word's effect: disjoint add and delete bit vectors of width E.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryEffect {
    add: BitVec,
    del: BitVec,
}

impl BinaryEffect {
    pub fn new(add: BitVec, del: BitVec) -> BinaryEffect {
        assert_eq!(add.len(), del.len(), "add/del width mismatch");
        assert!(add.is_disjoint(&del), "add and del must be disjoint");
        BinaryEffect { add, del }
    }

    pub fn empty(width: usize) -> BinaryEffect {
        BinaryEffect { add: BitVec::zeros(width), del: BitVec::zeros(width) }
    }

    pub fn add(&self) -> &BitVec {
        &self.add
    }

    pub fn del(&self) -> &BitVec {
        &self.del
    }

    pub fn width(&self) -> usize {
        self.add.len()
    }

    pub fn is_noop(&self) -> bool {
        self.add.is_zero() && self.del.is_zero()
    }
}

/// STRIPS progression: (s \ del) ∪ add.
pub fn progress(state: &BitVec, e: &BinaryEffect) -> BitVec {
    state.and_not(&e.del).or(&e.add)
}

/// STRIPS regression: (s \ add) ∪ del. Inverts `progress` whenever the
/// effect actually changed every bit it touches.
pub fn regress(state: &BitVec, e: &BinaryEffect) -> BitVec {
    state.and_not(&e.add).or(&e.del)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EffectOp {
    Plus,
    Minus,
}

/// One step of the combined-effect recursion. For `Plus`:
/// add' = (add \ del_x) ∪ add_x, del' = (del \ add_x) ∪ del_x;
/// `Minus` applies the same recursion with x's add and del swapped.
/// Left-to-right application order matters; the operation is neither
/// associative nor commutative.
pub fn compose(e: &BinaryEffect, op: EffectOp, x: &BinaryEffect) -> BinaryEffect {
    let (x_add, x_del) = match op {
        EffectOp::Plus => (&x.add, &x.del),
        EffectOp::Minus => (&x.del, &x.add),
    };
    BinaryEffect::new(e.add.and_not(x_del).or(x_add), e.del.and_not(x_add).or(x_del))
}

/// Folds a signed word sequence into one combined effect, starting empty.
pub fn combine(width: usize, seq: &[(EffectOp, &BinaryEffect)]) -> BinaryEffect {
    seq.iter().fold(BinaryEffect::empty(width), |e, (op, x)| compose(&e, *op, x))
}

/// add - del as a {-1, 0, +1} integer vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TertiaryVector {
    pub values: Vec<i8>,
}

pub fn tertiary(e: &BinaryEffect) -> TertiaryVector {
    let values = (0..e.width())
        .map(|j| e.add.get(j) as i8 - e.del.get(j) as i8)
        .collect();
    TertiaryVector { values }
}

impl TertiaryVector {
    pub fn to_f64(&self) -> Vec<f64> {
        self.values.iter().map(|&v| v as f64).collect()
    }
}

/// Cosine similarity (the normalized dot product; rankings order by this
/// descending).
pub fn cosine(u: &[f64], v: &[f64]) -> Result<f64, AlgebraError> {
    if u.len() != v.len() {
        return Err(AlgebraError::WidthMismatch(u.len(), v.len()));
    }
    let nu: f64 = u.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nv: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if nu == 0.0 || nv == 0.0 {
        return Err(AlgebraError::ZeroVector);
    }
    let dot: f64 = u.iter().zip(v).map(|(a, b)| a * b).sum();
    Ok(dot / (nu * nv))
}

/// Top-k candidates by descending cosine similarity to `query`. Excluded ids
/// and all-zero candidate vectors are skipped; ties break by ascending id.
pub fn nearest(
    query: &[f64],
    candidates: impl Iterator<Item = (u32, Vec<f64>)>,
    k: usize,
    exclude: &[u32],
) -> Result<Vec<(u32, f64)>, AlgebraError> {
    if query.iter().all(|&x| x == 0.0) {
        return Err(AlgebraError::ZeroVector);
    }
    let mut scored: Vec<(u32, f64)> = Vec::new();
    for (id, vec) in candidates {
        if exclude.contains(&id) {
            continue;
        }
        match cosine(query, &vec) {
            Ok(sim) => scored.push((id, sim)),
            Err(AlgebraError::ZeroVector) => continue,
            Err(e) => return Err(e),
        }
    }
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

/// Extracted effects for every word of a model, indexed by word id.
#[derive(Debug, Clone)]
pub struct EffectTable {
    width: usize,
    effects: Vec<BinaryEffect>,
}

/// Runs one deterministic BTL step from the all-zeros and all-ones states:
/// add_j = apply(x, 0)_j, del_j = 1 - apply(x, 1)_j. A bit that turns on
/// from 0 but off from 1 would contradict the monotone transition structure
/// and is reported as an integrity error.
pub fn extract_effect(model: &ModelParameters, word: u32) -> Result<BinaryEffect, AlgebraError> {
    extract_effect_named(model, word, &word.to_string())
}

fn extract_effect_named(
    model: &ModelParameters,
    word: u32,
    name: &str,
) -> Result<BinaryEffect, AlgebraError> {
    if !model.variant.is_discrete() {
        return Err(AlgebraError::NotDiscrete(model.variant.to_string()));
    }
    let bn = model.bn.as_ref().expect("discrete model carries bn state");
    let row = model.effect_row(word);
    let from_zero = btl_apply_hard(&BitVec::zeros(model.dim), row, bn);
    let from_one = btl_apply_hard(&BitVec::ones(model.dim), row, bn);
    let mut add = BitVec::zeros(model.dim);
    let mut del = BitVec::zeros(model.dim);
    for j in 0..model.dim {
        let up = from_zero.get(j);
        let down = !from_one.get(j);
        if up && down {
            return Err(AlgebraError::TheoremViolation { word: name.to_string(), dim: j });
        }
        add.set(j, up);
        del.set(j, down);
    }
    Ok(BinaryEffect::new(add, del))
}

impl EffectTable {
    pub fn extract(model: &ModelParameters, vocab: &Vocabulary) -> Result<EffectTable, AlgebraError> {
        let effects = (0..vocab.len() as u32)
            .map(|id| extract_effect_named(model, id, vocab.word(id)))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(EffectTable { width: model.dim, effects })
    }

    pub fn from_effects(effects: Vec<BinaryEffect>) -> EffectTable {
        let width = effects.first().map_or(0, BinaryEffect::width);
        assert!(effects.iter().all(|e| e.width() == width));
        EffectTable { width, effects }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.effects.len()
    }

    pub fn is_empty(&self) -> bool {
        self.effects.is_empty()
    }

    pub fn get(&self, id: u32) -> &BinaryEffect {
        &self.effects[id as usize]
    }

    pub fn tertiary(&self, id: u32) -> TertiaryVector {
        tertiary(self.get(id))
    }

    /// One word per line: "word<TAB>add-bits<TAB>del-bits", 0/1 strings.
    pub fn export<W: Write>(&self, vocab: &Vocabulary, mut w: W) -> Result<(), AlgebraError> {
        for id in 0..self.effects.len() as u32 {
            let e = self.get(id);
            writeln!(
                w,
                "{}\t{}\t{}",
                vocab.word(id),
                e.add.to_bit_string(),
                e.del.to_bit_string()
            )?;
        }
        Ok(())
    }

    /// Reads the export format back; returns words in file order.
    pub fn import<R: BufRead>(r: R) -> Result<(Vec<String>, EffectTable), AlgebraError> {
        let mut words = Vec::new();
        let mut effects = Vec::new();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let mut parts = line.split('\t');
            let (word, add, del) = (parts.next(), parts.next(), parts.next());
            let (word, add, del) = match (word, add, del, parts.next()) {
                (Some(w), Some(a), Some(d), None) => (w, a, d),
                _ => return Err(AlgebraError::MalformedLine { line: i + 1 }),
            };
            let add = BitVec::from_bit_string(add)
                .ok_or(AlgebraError::MalformedLine { line: i + 1 })?;
            let del = BitVec::from_bit_string(del)
                .ok_or(AlgebraError::MalformedLine { line: i + 1 })?;
            if !add.is_disjoint(&del) || add.len() != del.len() {
                return Err(AlgebraError::MalformedLine { line: i + 1 });
            }
            words.push(word.to_string());
            effects.push(BinaryEffect::new(add, del));
        }
        Ok((words, EffectTable::from_effects(effects)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::nncore::{BatchNormState, ModelVariant};
    use rand::Rng;
    use rand_chacha::rand_core::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::collections::BTreeSet;

    fn bv(s: &str) -> BitVec {
        BitVec::from_bit_string(s).unwrap()
    }

    fn effect(add: &str, del: &str) -> BinaryEffect {
        BinaryEffect::new(bv(add), bv(del))
    }

    fn tiny_model(rows: Vec<Vec<f64>>) -> ModelParameters {
        let dim = rows[0].len();
        ModelParameters {
            variant: ModelVariant::Dsaw,
            vocab_size: rows.len(),
            dim,
            effect: rows.into_iter().flatten().collect(),
            context: None,
            bn: Some(BatchNormState::new(dim, true)),
            vocab_hash: 0,
        }
    }

    #[test]
    fn extract_definition_unrolled() {
        // Logits [1, -2] against the fresh bn state give
        // apply(x, 0) = [1, 0] and apply(x, 1) = [1, 0].
        let model = tiny_model(vec![vec![1.0, -2.0]]);
        let e = extract_effect(&model, 0).unwrap();
        assert_eq!(e.add(), &bv("10"));
        assert_eq!(e.del(), &bv("01"));
    }

    #[test]
    fn extract_noop_word() {
        // A logit inside (-scale, 0) neither adds nor deletes.
        let model = tiny_model(vec![vec![-0.5, -0.5]]);
        let e = extract_effect(&model, 0).unwrap();
        assert!(e.is_noop());
    }

    #[test]
    fn extract_rejects_continuous_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = ModelParameters::init(ModelVariant::Cbow, 3, 2, false, &mut rng);
        assert!(matches!(extract_effect(&m, 0), Err(AlgebraError::NotDiscrete(_))));
    }

    #[test]
    fn extracted_effects_replay_the_transition() {
        // For random parameters, one BTL step from any binary state must
        // equal (s & !del) | add for the extracted effect.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let dim = 9;
        let rows: Vec<Vec<f64>> =
            (0..8).map(|_| (0..dim).map(|_| rng.gen_range(-3.0..3.0)).collect()).collect();
        let mut model = tiny_model(rows);
        {
            let bn = model.bn.as_mut().unwrap();
            for j in 0..dim {
                bn.gamma[j] = rng.gen_range(1e-3..2.0);
                bn.beta[j] = rng.gen_range(-1.0..1.0);
                bn.running_mean[j] = rng.gen_range(-1.0..1.0);
                bn.running_var[j] = rng.gen_range(0.0..2.0);
            }
        }
        for word in 0..8u32 {
            let e = extract_effect(&model, word).unwrap();
            assert!(e.add().is_disjoint(e.del()));
            for _ in 0..1000 {
                let s = {
                    let mut v = BitVec::zeros(dim);
                    for j in 0..dim {
                        v.set(j, rng.gen());
                    }
                    v
                };
                let direct =
                    btl_apply_hard(&s, model.effect_row(word), model.bn.as_ref().unwrap());
                assert_eq!(direct, progress(&s, &e));
            }
        }
    }

    #[test]
    fn progress_table1_example() {
        let t = fixtures::table1_effects();
        // Applying "king" to the state {female} yields {status}.
        assert_eq!(progress(&bv("10"), &t.king), bv("01"));
    }

    #[test]
    fn progress_empty_effect_is_identity() {
        let e = BinaryEffect::empty(6);
        let s = bv("010110");
        assert_eq!(progress(&s, &e), s);
        assert_eq!(regress(&s, &e), s);
    }

    #[test]
    fn progress_matches_set_semantics() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..500 {
            let dim = 12;
            let mut s = BitVec::zeros(dim);
            let mut add = BitVec::zeros(dim);
            let mut del = BitVec::zeros(dim);
            for j in 0..dim {
                s.set(j, rng.gen());
                match rng.gen_range(0..3) {
                    0 => add.set(j, true),
                    1 => del.set(j, true),
                    _ => {}
                }
            }
            let e = BinaryEffect::new(add.clone(), del.clone());
            // Set-theoretic oracle over index sets.
            let s_set: BTreeSet<usize> = s.iter_ones().collect();
            let add_set: BTreeSet<usize> = add.iter_ones().collect();
            let del_set: BTreeSet<usize> = del.iter_ones().collect();
            let expect: BTreeSet<usize> =
                s_set.difference(&del_set).copied().collect::<BTreeSet<_>>()
                    .union(&add_set).copied().collect();
            assert_eq!(progress(&s, &e).iter_ones().collect::<BTreeSet<_>>(), expect);
        }
    }

    #[test]
    fn regress_table1_inverse() {
        let t = fixtures::table1_effects();
        assert_eq!(regress(&bv("01"), &t.king), bv("10"));
    }

    #[test]
    fn regress_inverts_progress_under_change_invoking_effects() {
        // Exhaustive at a reduced width; the acceptance suite runs E = 10.
        let dim = 6;
        for s_bits in 0..(1u32 << dim) {
            let mut s = BitVec::zeros(dim);
            for j in 0..dim {
                s.set(j, s_bits & (1 << j) != 0);
            }
            let zeros: Vec<usize> = (0..dim).filter(|&j| !s.get(j)).collect();
            let ones: Vec<usize> = (0..dim).filter(|&j| s.get(j)).collect();
            for add_mask in 0..(1u32 << zeros.len()) {
                for del_mask in 0..(1u32 << ones.len()) {
                    let mut add = BitVec::zeros(dim);
                    for (bit, &j) in zeros.iter().enumerate() {
                        add.set(j, add_mask & (1 << bit) != 0);
                    }
                    let mut del = BitVec::zeros(dim);
                    for (bit, &j) in ones.iter().enumerate() {
                        del.set(j, del_mask & (1 << bit) != 0);
                    }
                    let e = BinaryEffect::new(add, del);
                    assert_eq!(regress(&progress(&s, &e), &e), s);
                }
            }
        }
    }

    #[test]
    fn compose_queen_from_king_minus_man_plus_woman() {
        let t = fixtures::table1_effects();
        let e = combine(
            2,
            &[(EffectOp::Plus, &t.king), (EffectOp::Minus, &t.man), (EffectOp::Plus, &t.woman)],
        );
        assert_eq!(e, t.queen);
        assert_eq!(e.add(), &bv("11"));
        assert!(e.del().is_zero());
    }

    #[test]
    fn compose_absorbs_redundancy() {
        let t = fixtures::table1_effects();
        let e = combine(2, &[(EffectOp::Plus, &t.king), (EffectOp::Plus, &t.man)]);
        assert_eq!(e, t.king);
    }

    #[test]
    fn compose_on_empty_is_identity_or_swap() {
        let x = effect("1010", "0101");
        let plus = combine(4, &[(EffectOp::Plus, &x)]);
        assert_eq!(plus, x);
        let minus = combine(4, &[(EffectOp::Minus, &x)]);
        assert_eq!(minus.add(), x.del());
        assert_eq!(minus.del(), x.add());
    }

    #[test]
    fn combined_effect_equals_sequential_application() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dim = 10;
        for _ in 0..200 {
            let seq: Vec<(EffectOp, BinaryEffect)> = (0..rng.gen_range(1..=5))
                .map(|_| {
                    let mut add = BitVec::zeros(dim);
                    let mut del = BitVec::zeros(dim);
                    for j in 0..dim {
                        match rng.gen_range(0..3) {
                            0 => add.set(j, true),
                            1 => del.set(j, true),
                            _ => {}
                        }
                    }
                    let op = if rng.gen() { EffectOp::Plus } else { EffectOp::Minus };
                    (op, BinaryEffect::new(add, del))
                })
                .collect();
            let refs: Vec<(EffectOp, &BinaryEffect)> =
                seq.iter().map(|(op, e)| (*op, e)).collect();
            let composed = combine(dim, &refs);
            assert!(composed.add().is_disjoint(composed.del()));
            // All 1024 states: sequential R-application must agree.
            for s_bits in 0..(1u32 << dim) {
                let mut s = BitVec::zeros(dim);
                for j in 0..dim {
                    s.set(j, s_bits & (1 << j) != 0);
                }
                let mut seq_state = s.clone();
                for (op, e) in &seq {
                    seq_state = match op {
                        EffectOp::Plus => progress(&seq_state, e),
                        EffectOp::Minus => regress(&seq_state, e),
                    };
                }
                assert_eq!(progress(&s, &composed), seq_state);
            }
        }
    }

    #[test]
    fn progress_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        for _ in 0..500 {
            let dim = 12;
            let mut s = BitVec::zeros(dim);
            let mut add = BitVec::zeros(dim);
            let mut del = BitVec::zeros(dim);
            for j in 0..dim {
                s.set(j, rng.gen());
                match rng.gen_range(0..3) {
                    0 => add.set(j, true),
                    1 => del.set(j, true),
                    _ => {}
                }
            }
            let e = BinaryEffect::new(add, del);
            let once = progress(&s, &e);
            assert_eq!(progress(&once, &e), once);
        }
    }

    #[test]
    fn tertiary_of_queen() {
        let t = fixtures::table1_effects();
        assert_eq!(tertiary(&t.queen).values, vec![1, 1]);
        assert_eq!(tertiary(&t.king).values, vec![-1, 1]);
    }

    #[test]
    fn cosine_self_is_one_and_zero_errors() {
        let v = vec![0.5, -1.0, 2.0];
        assert!((cosine(&v, &v).unwrap() - 1.0).abs() < 1e-12);
        assert!(matches!(cosine(&[0.0, 0.0], &[1.0, 0.0]), Err(AlgebraError::ZeroVector)));
    }

    #[test]
    fn nearest_matches_brute_force() {
        let rows: Vec<Vec<f64>> = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.9, 0.1, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![-1.0, 0.0, 0.3],
            vec![0.5, 0.5, 0.5],
        ];
        let query = vec![1.0, 0.05, 0.0];
        let got = nearest(
            &query,
            rows.iter().cloned().enumerate().map(|(i, v)| (i as u32, v)),
            2,
            &[0],
        )
        .unwrap();
        // Exhaustive argmax oracle over the remaining candidates.
        let mut sims: Vec<(u32, f64)> = rows
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != 0)
            .map(|(i, v)| (i as u32, cosine(&query, v).unwrap()))
            .collect();
        sims.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].0, sims[0].0);
        assert_eq!(got[1].0, sims[1].0);
    }

    #[test]
    fn export_import_roundtrip() {
        let v = Vocabulary::build(["b", "a", "b"].iter(), 1).unwrap();
        let table = EffectTable::from_effects(vec![effect("10", "01"), effect("00", "11")]);
        let mut buf = Vec::new();
        table.export(&v, &mut buf).unwrap();
        assert_eq!(String::from_utf8_lossy(&buf), "b\t10\t01\na\t00\t11\n");
        let (words, back) = EffectTable::import(buf.as_slice()).unwrap();
        assert_eq!(words, vec!["b", "a"]);
        assert_eq!(back.get(0), table.get(0));
        assert_eq!(back.get(1), table.get(1));
    }
}
