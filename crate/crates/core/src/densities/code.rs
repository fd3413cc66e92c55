//! Binary codes with large minimum Hamming distance.
//!
//! Words of length m are kept greedily: a candidate is accepted when its
//! distance to every kept word is at least ⌈m/8⌉. For m ≤ 63 candidates are
//! enumerated lexicographically; if that budget runs out, or m is larger,
//! seeded random candidates are used with restarts.

use crate::error::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Lexicographic candidates tried before falling back to random words.
const LEX_BUDGET: u64 = 1 << 20;
const RANDOM_BUDGET_PER_WORD: usize = 4096;
const RESTARTS: usize = 16;

/// Largest code `vg_code` will materialise in full.
pub const MATERIALIZE_LIMIT: usize = 1 << 16;

/// A binary word stored as packed bits.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Word {
    len: usize,
    bits: Vec<u64>,
}

impl Word {
    pub fn zeros(len: usize) -> Self {
        Word {
            len,
            bits: vec![0; len.div_ceil(64)],
        }
    }

    pub fn ones(len: usize) -> Self {
        let mut w = Word::zeros(len);
        for i in 0..len {
            w.set(i, true);
        }
        w
    }

    pub fn from_bools(bits: &[bool]) -> Self {
        let mut w = Word::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            w.set(i, b);
        }
        w
    }

    fn from_u64(len: usize, value: u64) -> Self {
        debug_assert!(len <= 64);
        Word { len, bits: vec![value] }
    }

    fn random(len: usize, rng: &mut ChaCha8Rng) -> Self {
        let mut bits: Vec<u64> = (0..len.div_ceil(64)).map(|_| rng.random()).collect();
        if len % 64 != 0 {
            if let Some(last) = bits.last_mut() {
                *last &= (1u64 << (len % 64)) - 1;
            }
        }
        Word { len, bits }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.len, "bit {i} out of range for word of length {}", self.len);
        self.bits[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.len, "bit {i} out of range for word of length {}", self.len);
        let mask = 1u64 << (i % 64);
        if value {
            self.bits[i / 64] |= mask;
        } else {
            self.bits[i / 64] &= !mask;
        }
    }

    /// Number of ones.
    pub fn weight(&self) -> usize {
        self.bits.iter().map(|b| b.count_ones() as usize).sum()
    }

    /// Hamming distance; panics on length mismatch.
    pub fn hamming(&self, other: &Word) -> usize {
        assert_eq!(self.len, other.len, "hamming distance of words with different lengths");
        self.bits
            .iter()
            .zip(&other.bits)
            .map(|(a, b)| (a ^ b).count_ones() as usize)
            .sum()
    }

    pub fn to_bools(&self) -> Vec<bool> {
        (0..self.len).map(|i| self.get(i)).collect()
    }
}

/// A set of words of common length with its guaranteed distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Code {
    pub length: usize,
    pub min_distance_required: usize,
    /// ⌈2^{m/8}⌉, the size the construction aims for.
    pub target_size: f64,
    pub words: Vec<Word>,
}

impl Code {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    /// Smallest pairwise Hamming distance, `None` for fewer than two words.
    pub fn min_distance(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, a) in self.words.iter().enumerate() {
            for b in &self.words[i + 1..] {
                let d = a.hamming(b);
                best = Some(best.map_or(d, |x| x.min(d)));
            }
        }
        best
    }
}

/// ⌈m/8⌉.
pub fn required_distance(m: usize) -> usize {
    m.div_ceil(8)
}

/// ⌈2^{m/8}⌉ as a float (may be astronomically large).
pub fn target_size(m: usize) -> f64 {
    (m as f64 / 8.0).exp2().ceil()
}

/// A code of length m with at least 2^{m/8} words at pairwise distance ≥ ⌈m/8⌉.
pub fn vg_code(m: usize) -> Result<Code> {
    let target = target_size(m);
    if m >= 8 && target > MATERIALIZE_LIMIT as f64 {
        return Err(Error::Parameter(format!(
            "a full code of length {m} has {target:.3e} words; use vg_code_capped"
        )));
    }
    vg_code_capped(m, MATERIALIZE_LIMIT, 0)
}

/// Like [`vg_code`] but stops after `cap` words. The random fallback is
/// seeded by `seed`.
pub fn vg_code_capped(m: usize, cap: usize, seed: u64) -> Result<Code> {
    if m < 8 {
        return Err(Error::Parameter(format!("code length must be at least 8, got {m}")));
    }
    if cap == 0 {
        return Err(Error::Parameter("code cap must be positive".into()));
    }
    let d = required_distance(m);
    let target_f = target_size(m);
    let want = if target_f >= cap as f64 { cap } else { target_f as usize };
    let far = |kept: &[Word], w: &Word| kept.iter().all(|k| k.hamming(w) >= d);

    let mut kept: Vec<Word> = Vec::with_capacity(want);
    if m <= 63 {
        let limit = (1u64 << m).min(LEX_BUDGET);
        for v in 0..limit {
            let w = Word::from_u64(m, v);
            if far(&kept, &w) {
                kept.push(w);
                if kept.len() == want {
                    break;
                }
            }
        }
    }
    let mut restart = 0;
    while kept.len() < want {
        if restart == RESTARTS {
            return Err(Error::Construction(format!(
                "could not find {want} words of length {m} at distance {d}"
            )));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(restart as u64));
        let mut attempts = 0usize;
        while kept.len() < want && attempts < RANDOM_BUDGET_PER_WORD * want {
            attempts += 1;
            let w = Word::random(m, &mut rng);
            if far(&kept, &w) {
                kept.push(w);
            }
        }
        if kept.len() < want {
            kept.clear();
            restart += 1;
        }
    }
    Ok(Code {
        length: m,
        min_distance_required: d,
        target_size: target_f,
        words: kept,
    })
}
