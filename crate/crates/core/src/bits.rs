//! Fixed-width bit vectors used for binary states, effect vectors and
//! planner propositions. Unused tail bits are kept zero so that `Eq` and
//! `Hash` can operate on the raw blocks.

const BLOCK_BITS: usize = 64;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BitVec {
    blocks: Vec<u64>,
    len: usize,
}

impl BitVec {
    /// All-zeros vector of `len` bits.
    pub fn zeros(len: usize) -> Self {
        BitVec {
            blocks: vec![0; len.div_ceil(BLOCK_BITS)],
            len,
        }
    }

    /// All-ones vector of `len` bits.
    pub fn ones(len: usize) -> Self {
        let mut v = BitVec {
            blocks: vec![u64::MAX; len.div_ceil(BLOCK_BITS)],
            len,
        };
        v.mask_tail();
        v
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut v = BitVec::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b {
                v.set(i, true);
            }
        }
        v
    }

    pub fn from_indices(len: usize, indices: &[usize]) -> Self {
        let mut v = BitVec::zeros(len);
        for &i in indices {
            v.set(i, true);
        }
        v
    }

    /// Parses a string of '0'/'1' characters, most significant position first.
    pub fn from_bit_string(s: &str) -> Option<Self> {
        let mut v = BitVec::zeros(s.len());
        for (i, ch) in s.chars().enumerate() {
            match ch {
                '0' => {}
                '1' => v.set(i, true),
                _ => return None,
            }
        }
        Some(v)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, idx: usize) -> bool {
        assert!(idx < self.len, "bit index {idx} out of range {}", self.len);
        self.blocks[idx / BLOCK_BITS] & (1u64 << (idx % BLOCK_BITS)) != 0
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        assert!(idx < self.len, "bit index {idx} out of range {}", self.len);
        let mask = 1u64 << (idx % BLOCK_BITS);
        if value {
            self.blocks[idx / BLOCK_BITS] |= mask;
        } else {
            self.blocks[idx / BLOCK_BITS] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.blocks.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.iter().all(|&b| b == 0)
    }

    fn zip(&self, other: &Self, f: impl Fn(u64, u64) -> u64) -> Self {
        assert_eq!(self.len, other.len, "bit vector width mismatch");
        BitVec {
            blocks: self
                .blocks
                .iter()
                .zip(&other.blocks)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            len: self.len,
        }
    }

    pub fn and(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a | b)
    }

    /// Set difference: bits of `self` not in `other`.
    pub fn and_not(&self, other: &Self) -> Self {
        self.zip(other, |a, b| a & !b)
    }

    pub fn is_disjoint(&self, other: &Self) -> bool {
        self.blocks.iter().zip(&other.blocks).all(|(&a, &b)| a & b == 0)
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.blocks.iter().zip(&other.blocks).all(|(&a, &b)| a & !b == 0)
    }

    pub fn iter_ones(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len).filter(move |&i| self.get(i))
    }

    pub fn to_bit_string(&self) -> String {
        (0..self.len).map(|i| if self.get(i) { '1' } else { '0' }).collect()
    }

    fn mask_tail(&mut self) {
        let rem = self.len % BLOCK_BITS;
        if rem != 0 {
            if let Some(last) = self.blocks.last_mut() {
                *last &= (1u64 << rem) - 1;
            }
        }
    }
}

impl std::fmt::Debug for BitVec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "BitVec({})", self.to_bit_string())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn set_get_roundtrip() {
        let mut v = BitVec::zeros(130);
        v.set(0, true);
        v.set(64, true);
        v.set(129, true);
        assert!(v.get(0) && v.get(64) && v.get(129));
        assert!(!v.get(1) && !v.get(128));
        assert_eq!(v.count_ones(), 3);
    }

    #[test]
    fn ones_tail_is_masked() {
        let v = BitVec::ones(70);
        assert_eq!(v.count_ones(), 70);
        // Eq/Hash rely on zeroed tails: ones(70) built bitwise must match.
        let mut w = BitVec::zeros(70);
        for i in 0..70 {
            w.set(i, true);
        }
        assert_eq!(v, w);
    }

    #[test]
    fn set_ops_match_index_sets() {
        let a = BitVec::from_indices(12, &[0, 3, 5, 11]);
        let b = BitVec::from_indices(12, &[3, 4, 11]);
        assert_eq!(a.and(&b), BitVec::from_indices(12, &[3, 11]));
        assert_eq!(a.or(&b), BitVec::from_indices(12, &[0, 3, 4, 5, 11]));
        assert_eq!(a.and_not(&b), BitVec::from_indices(12, &[0, 5]));
        assert!(!a.is_disjoint(&b));
        assert!(BitVec::from_indices(12, &[3]).is_subset(&a));
        assert!(!a.is_subset(&b));
    }

    #[test]
    fn bit_string_roundtrip() {
        let s = "0110010011";
        let v = BitVec::from_bit_string(s).unwrap();
        assert_eq!(v.to_bit_string(), s);
        assert_eq!(v.iter_ones().collect::<Vec<_>>(), vec![1, 2, 5, 8, 9]);
        assert!(BitVec::from_bit_string("01x").is_none());
    }
}
