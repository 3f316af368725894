//! Tiny deterministic fixtures shared by the test suites and the CLI
//! `fixture` command: the four-word hand-built embedding, a planted-synonym
//! training corpus, and toy evaluation datasets in the standard file layouts.

use crate::algebra::BinaryEffect;
use crate::bits::BitVec;
use crate::corpus::Vocabulary;
use crate::nncore::{BatchNormState, ModelParameters, ModelVariant};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The classic king/man/woman/queen effects over [female, status].
pub struct Table1Effects {
    pub king: BinaryEffect,
    pub man: BinaryEffect,
    pub woman: BinaryEffect,
    pub queen: BinaryEffect,
}

fn bits(s: &str) -> BitVec {
    BitVec::from_bit_string(s).expect("fixture bit string")
}

pub fn table1_effects() -> Table1Effects {
    Table1Effects {
        king: BinaryEffect::new(bits("01"), bits("10")),
        man: BinaryEffect::new(bits("00"), bits("10")),
        woman: BinaryEffect::new(bits("10"), bits("00")),
        queen: BinaryEffect::new(bits("11"), bits("00")),
    }
}

/// Word order (= ids) is king, man, woman, queen.
pub fn table1_vocab() -> Vocabulary {
    let mut tokens = Vec::new();
    for (word, count) in [("king", 40), ("man", 30), ("woman", 20), ("queen", 10)] {
        tokens.extend(std::iter::repeat(word).take(count));
    }
    let mut v = Vocabulary::build(tokens, 1).expect("fixture vocab");
    v.subsample_threshold = 0.0;
    v
}

/// A hand-built discrete model whose extracted effects are exactly the
/// Table-1 effects. With a fresh BatchNorm state the eval map is
/// y = x / sqrt(1 + eps), so a logit of +-3 forces an add/del and -0.5
/// lands in the no-op band.
pub fn table1_model() -> (Vocabulary, ModelParameters) {
    let vocab = table1_vocab();
    let rows = [
        vec![-3.0, 3.0],  // king: del female, add status
        vec![-3.0, -0.5], // man: del female
        vec![3.0, -0.5],  // woman: add female
        vec![3.0, 3.0],   // queen: add female, add status
    ];
    let model = ModelParameters {
        variant: ModelVariant::Dsaw,
        vocab_size: 4,
        dim: 2,
        effect: rows.into_iter().flatten().collect(),
        context: None,
        bn: Some(BatchNormState::new(2, true)),
        vocab_hash: vocab.integrity_hash(),
    };
    (vocab, model)
}

/// Two groups of interchangeable words. Members of a group are sampled
/// uniformly into the same context frames, so a sound trainer must embed
/// them close together and far from the other group.
pub fn synonym_groups() -> (Vec<&'static str>, Vec<&'static str>) {
    (
        vec!["lake", "pond", "river", "sea", "bay"],
        vec!["run", "jump", "dance", "flee", "wave"],
    )
}

const FRAMES_A: [[&str; 5]; 4] = [
    ["cold", "deep", "shore", "water", "waves"],
    ["wide", "blue", "boat", "fish", "sail"],
    ["calm", "clear", "coast", "swim", "sand"],
    ["vast", "still", "tide", "wind", "salt"],
];

const FRAMES_B: [[&str; 5]; 4] = [
    ["they", "will", "today", "street", "shoes"],
    ["kids", "can", "loud", "music", "home"],
    ["we", "must", "often", "field", "track"],
    ["crowds", "may", "free", "night", "stage"],
];

/// One sentence per line, seven tokens each: "f1 f2 X f3 Y f4 f5" with a
/// group-specific frame and two independent group members X, Y. With a
/// radius-2 window each line yields three samples in which the group
/// members appear both as centers and as context words, so every model
/// family receives gradient for them.
pub fn synonym_corpus(seed: u64, lines: usize) -> String {
    let (group_a, group_b) = synonym_groups();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..lines {
        let (group, frames) = if i % 2 == 0 {
            (&group_a, &FRAMES_A)
        } else {
            (&group_b, &FRAMES_B)
        };
        let f = frames[rng.gen_range(0..frames.len())];
        let x = group[rng.gen_range(0..group.len())];
        let y = group[rng.gen_range(0..group.len())];
        out.push_str(&format!("{} {} {x} {} {y} {} {}\n", f[0], f[1], f[2], f[3], f[4]));
    }
    out
}

/// Three word pairs over the Table-1 vocabulary whose human scores follow
/// the model's tertiary-cosine order exactly (no ties).
pub fn table1_similarity_tsv() -> String {
    "woman\tqueen\t9\nking\tqueen\t5\nman\twoman\t1\n".to_string()
}

/// One analogy question in the Google file layout.
pub fn table1_analogy_txt() -> String {
    ": family\nman king woman queen\n".to_string()
}

/// Binary classification docs over the Table-1 vocabulary:
/// label 0 documents use {king, man}, label 1 documents use {woman, queen}.
/// Separable for the discrete aggregation (the female bit tracks the class).
pub fn table1_classify_tsv(seed: u64, docs: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::new();
    for i in 0..docs {
        let label = i % 2;
        let words: [&str; 2] = if label == 0 { ["king", "man"] } else { ["woman", "queen"] };
        let len = rng.gen_range(1..=6);
        let doc: Vec<&str> = (0..len).map(|_| words[rng.gen_range(0..2)]).collect();
        out.push_str(&format!("{}\t{}\n", label, doc.join(" ")));
    }
    out
}
