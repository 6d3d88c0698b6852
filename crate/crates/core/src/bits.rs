//! Fixed-length bit vectors indexed by input pattern.
//!
//! Bit `p` of a vector holds a signal's value on input pattern `p`, where bit
//! `i` of the pattern integer is the value of input `x_i`. All operations keep
//! the unused tail of the last word zeroed so that equality, hashing and
//! popcounts stay exact.

/// Periodic word masks for inputs 0..6; input `i >= 6` selects whole words.
const INPUT_WORDS: [u64; 6] = [
    0xAAAA_AAAA_AAAA_AAAA,
    0xCCCC_CCCC_CCCC_CCCC,
    0xF0F0_F0F0_F0F0_F0F0,
    0xFF00_FF00_FF00_FF00,
    0xFFFF_0000_FFFF_0000,
    0xFFFF_FFFF_0000_0000,
];

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bits {
    len: usize,
    words: Vec<u64>,
}

impl Bits {
    pub fn zeros(len: usize) -> Self {
        Bits {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut b = Bits {
            len,
            words: vec![u64::MAX; len.div_ceil(64)],
        };
        b.mask_tail();
        b
    }

    pub fn from_fn(len: usize, mut f: impl FnMut(usize) -> bool) -> Self {
        let mut b = Bits::zeros(len);
        for p in 0..len {
            if f(p) {
                b.set(p, true);
            }
        }
        b
    }

    /// Value of input `x_index` over all `2^num_inputs` patterns.
    pub fn input_pattern(num_inputs: usize, index: usize) -> Self {
        assert!(index < num_inputs);
        let len = 1usize << num_inputs;
        let mut b = Bits::zeros(len);
        for (w, word) in b.words.iter_mut().enumerate() {
            *word = if index < 6 {
                INPUT_WORDS[index]
            } else if (w >> (index - 6)) & 1 == 1 {
                u64::MAX
            } else {
                0
            };
        }
        b.mask_tail();
        b
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, p: usize) -> bool {
        debug_assert!(p < self.len);
        (self.words[p / 64] >> (p % 64)) & 1 == 1
    }

    pub fn set(&mut self, p: usize, v: bool) {
        debug_assert!(p < self.len);
        let mask = 1u64 << (p % 64);
        if v {
            self.words[p / 64] |= mask;
        } else {
            self.words[p / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> u64 {
        self.words.iter().map(|w| w.count_ones() as u64).sum()
    }

    pub fn is_zero(&self) -> bool {
        self.words.iter().all(|&w| w == 0)
    }

    pub fn and(&self, other: &Bits) -> Bits {
        self.zip(other, |a, b| a & b)
    }

    pub fn or(&self, other: &Bits) -> Bits {
        self.zip(other, |a, b| a | b)
    }

    pub fn xor(&self, other: &Bits) -> Bits {
        self.zip(other, |a, b| a ^ b)
    }

    pub fn not(&self) -> Bits {
        let mut out = Bits {
            len: self.len,
            words: self.words.iter().map(|w| !w).collect(),
        };
        out.mask_tail();
        out
    }

    /// `!(a & b)` with the tail kept clean.
    pub fn nand(&self, other: &Bits) -> Bits {
        let mut out = self.zip(other, |a, b| !(a & b));
        out.mask_tail();
        out
    }

    pub fn or_assign(&mut self, other: &Bits) {
        debug_assert_eq!(self.len, other.len);
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a |= b;
        }
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    /// Hex string, one digit per 4 patterns, lowest patterns first.
    pub fn to_hex(&self) -> String {
        let nibbles = self.len.div_ceil(4);
        let mut s = String::with_capacity(nibbles);
        for n in 0..nibbles {
            let word = self.words[n / 16];
            let nib = (word >> ((n % 16) * 4)) & 0xF;
            s.push(char::from_digit(nib as u32, 16).unwrap());
        }
        s
    }

    pub fn from_hex(len: usize, s: &str) -> Option<Bits> {
        if s.len() != len.div_ceil(4) {
            return None;
        }
        let mut b = Bits::zeros(len);
        for (n, c) in s.chars().enumerate() {
            let nib = c.to_digit(16)? as u64;
            b.words[n / 16] |= nib << ((n % 16) * 4);
        }
        if b.words.last().copied().unwrap_or(0) & !Self::tail_mask(len) != 0 {
            return None;
        }
        Some(b)
    }

    fn zip(&self, other: &Bits, f: impl Fn(u64, u64) -> u64) -> Bits {
        debug_assert_eq!(self.len, other.len);
        Bits {
            len: self.len,
            words: self
                .words
                .iter()
                .zip(&other.words)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    fn tail_mask(len: usize) -> u64 {
        let rem = len % 64;
        if rem == 0 {
            u64::MAX
        } else {
            (1u64 << rem) - 1
        }
    }

    fn mask_tail(&mut self) {
        if let Some(last) = self.words.last_mut() {
            *last &= Self::tail_mask(self.len);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_patterns_small() {
        let x0 = Bits::input_pattern(2, 0);
        let x1 = Bits::input_pattern(2, 1);
        assert_eq!(
            (0..4).map(|p| x0.get(p)).collect::<Vec<_>>(),
            vec![false, true, false, true]
        );
        assert_eq!(
            (0..4).map(|p| x1.get(p)).collect::<Vec<_>>(),
            vec![false, false, true, true]
        );
    }

    #[test]
    fn input_patterns_wide() {
        // 8 inputs: 256 patterns, 4 words; check against the definition.
        for i in 0..8 {
            let b = Bits::input_pattern(8, i);
            for p in 0..256 {
                assert_eq!(b.get(p), (p >> i) & 1 == 1, "input {i} pattern {p}");
            }
        }
    }

    #[test]
    fn tail_stays_clean() {
        let a = Bits::ones(4);
        assert_eq!(a.count_ones(), 4);
        let b = a.not();
        assert!(b.is_zero());
        let c = Bits::zeros(4).nand(&Bits::zeros(4));
        assert_eq!(c.count_ones(), 4);
    }

    #[test]
    fn hex_round_trip() {
        let b = Bits::from_fn(12, |p| p % 3 == 0);
        let h = b.to_hex();
        assert_eq!(Bits::from_hex(12, &h).unwrap(), b);
        // AND of two inputs over 4 patterns: only pattern 3 set -> 0x8.
        let and = Bits::input_pattern(2, 0).and(&Bits::input_pattern(2, 1));
        assert_eq!(and.to_hex(), "8");
    }
}
