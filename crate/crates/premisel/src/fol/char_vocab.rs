//! Character vocabulary for the one-hot character-level models.
//!
//! Entries come from corpus byte frequencies, capped at 80 including the
//! reserved PAD and UNK slots, ordered by descending frequency then byte
//! value. The paper fixes only the dimension (80); the construction here is
//! the declared stand-in for its unlisted alphabet.

use serde::{Deserialize, Serialize};

pub const PAD: usize = 0;
pub const UNK: usize = 1;
pub const MAX_VOCAB: usize = 80;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CharVocab {
    /// Bytes by index, starting at index 2 (0 = PAD, 1 = UNK).
    bytes: Vec<u8>,
}

impl CharVocab {
    /// Builds from byte frequencies over the given character sequences.
    pub fn build<'a>(seqs: impl Iterator<Item = &'a [u8]>) -> CharVocab {
        let mut counts = [0u64; 256];
        for seq in seqs {
            for &b in seq {
                counts[b as usize] += 1;
            }
        }
        let mut present: Vec<(u64, u8)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(b, &c)| (c, b as u8))
            .collect();
        // Descending frequency, then ascending byte value.
        present.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        present.truncate(MAX_VOCAB - 2);
        CharVocab {
            bytes: present.into_iter().map(|(_, b)| b).collect(),
        }
    }

    /// Test/fixture constructor from an explicit byte list (index 2 onward).
    pub fn from_bytes(bytes: Vec<u8>) -> CharVocab {
        assert!(bytes.len() <= MAX_VOCAB - 2);
        CharVocab { bytes }
    }

    /// Total index count including PAD and UNK; never exceeds 80.
    pub fn size(&self) -> usize {
        self.bytes.len() + 2
    }

    pub fn index_of(&self, byte: u8) -> usize {
        self.bytes.iter().position(|&b| b == byte).map_or(UNK, |i| i + 2)
    }

    pub fn byte_list(&self) -> &[u8] {
        &self.bytes
    }

    /// Encodes a byte sequence: out-of-vocab bytes map to UNK, output is
    /// truncated to `max_len`. Total under those rules; deterministic and
    /// length-monotone for a fixed vocab.
    pub fn encode(&self, seq: &[u8], max_len: usize) -> Vec<usize> {
        seq.iter()
            .take(max_len)
            .map(|&b| self.index_of(b))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixture_lookup_matches_example() {
        // Vocab fixture placing p -> 7, ( -> 2, X -> 30, ) -> 3 by padding
        // the byte list with filler entries.
        let mut bytes = vec![0u8; 29];
        bytes[0] = b'(';
        bytes[1] = b')';
        bytes[5] = b'p';
        bytes[28] = b'X';
        for (i, slot) in bytes.iter_mut().enumerate() {
            if *slot == 0 {
                *slot = 128 + i as u8; // unused filler bytes
            }
        }
        let vocab = CharVocab::from_bytes(bytes);
        assert_eq!(vocab.encode(b"p(X)", 2048), vec![7, 2, 30, 3]);
    }

    #[test]
    fn truncates_to_max_len() {
        let vocab = CharVocab::from_bytes(vec![b'a']);
        let long = vec![b'a'; 5000];
        assert_eq!(vocab.encode(&long, 2048).len(), 2048);
    }

    #[test]
    fn out_of_vocab_maps_to_unk() {
        let vocab = CharVocab::from_bytes(vec![b'a']);
        assert_eq!(vocab.encode(&[0xFF], 10), vec![UNK]);
    }

    #[test]
    fn build_orders_by_frequency_then_byte() {
        let seqs: Vec<&[u8]> = vec![b"aabbbc", b"bc"];
        // counts: a=2, b=4, c=2 -> order b, a, c
        let vocab = CharVocab::build(seqs.into_iter());
        assert_eq!(vocab.byte_list(), &[b'b', b'a', b'c']);
        assert_eq!(vocab.size(), 5);
        assert_eq!(vocab.index_of(b'b'), 2);
        assert_eq!(vocab.index_of(b'a'), 3);
        assert_eq!(vocab.index_of(b'c'), 4);
    }

    #[test]
    fn cap_is_eighty_including_reserved() {
        let all: Vec<u8> = (0..=255u8).collect();
        let vocab = CharVocab::build(std::iter::once(all.as_slice()));
        assert_eq!(vocab.size(), MAX_VOCAB);
    }

    #[test]
    fn encode_is_length_monotone() {
        let vocab = CharVocab::from_bytes(vec![b'a', b'b']);
        let short = vocab.encode(b"ab", 100);
        let long = vocab.encode(b"abab", 100);
        assert!(long.len() >= short.len());
    }
}
