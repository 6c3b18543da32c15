use serde::{Deserialize, Serialize};

use crate::registry::BackboneName;
use crate::{BackboneError, Result};

/// Padding token id (all families except gpt2, which repurposes its
/// end-of-text token because it has no native padding token).
pub const PAD_ID: usize = 0;
/// Classification / beginning-of-sequence token id.
pub const CLS_ID: usize = 1;
/// End-of-sequence / separator token id.
pub const EOS_ID: usize = 2;
/// First id available for hashed word tokens.
pub const FIRST_WORD_ID: usize = 3;

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

/// A hashing tokenizer: words map into a fixed id space through salted
/// FNV-1a, so no vocabulary file is needed and every family gets its own
/// token geometry via its salt. Special-token placement follows the family's
/// sequence-classification convention.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerSpec {
    pub family: BackboneName,
    pub vocab_size: usize,
    pub salt: u64,
}

/// One encoded text: token ids (unpadded) and whether the raw text produced
/// zero word tokens, in which case the ids are the family's empty-sequence
/// convention.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenizedPost {
    pub ids: Vec<usize>,
    pub was_empty: bool,
}

impl TokenizerSpec {
    pub fn new(family: BackboneName, vocab_size: usize, salt: u64) -> Result<Self> {
        if vocab_size <= FIRST_WORD_ID {
            return Err(BackboneError::Argument(format!(
                "vocab_size must exceed {FIRST_WORD_ID} (the reserved special tokens), got {vocab_size}"
            )));
        }
        Ok(Self {
            family,
            vocab_size,
            salt,
        })
    }

    /// The id used for padding positions; gpt2 reuses its end-of-text token.
    pub fn pad_id(&self) -> usize {
        match self.family {
            BackboneName::Gpt2 => EOS_ID,
            _ => PAD_ID,
        }
    }

    fn wraps_specials(&self) -> bool {
        // gpt2 classification uses bare word tokens (last-token pooling);
        // everything else wraps the text in classification/end markers.
        self.family != BackboneName::Gpt2
    }

    fn hash_word(&self, word: &str) -> usize {
        let mut h = FNV_OFFSET;
        for b in self.salt.to_le_bytes() {
            h ^= u64::from(b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        for b in word.as_bytes() {
            h ^= u64::from(*b);
            h = h.wrapping_mul(FNV_PRIME);
        }
        FIRST_WORD_ID + (h as usize) % (self.vocab_size - FIRST_WORD_ID)
    }

    /// Encodes one text: lowercased whitespace words hashed into the id
    /// space, wrapped in the family's special tokens, truncated to
    /// `max_seq_len`. A text with zero word tokens becomes the family's
    /// empty-sequence convention (specials only, or a lone end-of-text token
    /// for gpt2) with `was_empty` set.
    pub fn encode(&self, text: &str, max_seq_len: usize) -> Result<TokenizedPost> {
        let reserved = if self.wraps_specials() { 2 } else { 0 };
        if max_seq_len <= reserved {
            return Err(BackboneError::Argument(format!(
                "max_seq_len {max_seq_len} leaves no room for tokens ({} family needs > {reserved})",
                self.family
            )));
        }
        let words: Vec<usize> = text
            .split_whitespace()
            .map(|w| self.hash_word(&w.to_lowercase()))
            .collect();
        let was_empty = words.is_empty();
        let budget = max_seq_len - reserved;
        let kept = &words[..words.len().min(budget)];
        let ids = if self.wraps_specials() {
            let mut ids = Vec::with_capacity(kept.len() + 2);
            ids.push(CLS_ID);
            ids.extend_from_slice(kept);
            ids.push(EOS_ID);
            ids
        } else if was_empty {
            vec![EOS_ID]
        } else {
            kept.to_vec()
        };
        Ok(TokenizedPost { ids, was_empty })
    }
}

/// Pads a batch of tokenized posts to a common length (the longest sequence
/// in the batch), returning per-post (ids, mask) rows. Padding positions are
/// masked out of attention and pooling, so batch composition never changes a
/// post's encoding.
pub fn pad_batch(spec: &TokenizerSpec, posts: &[TokenizedPost]) -> Vec<(Vec<usize>, Vec<bool>)> {
    let width = posts.iter().map(|p| p.ids.len()).max().unwrap_or(0);
    posts
        .iter()
        .map(|p| {
            let mut ids = p.ids.clone();
            let mut mask = vec![true; ids.len()];
            while ids.len() < width {
                ids.push(spec.pad_id());
                mask.push(false);
            }
            (ids, mask)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(family: BackboneName) -> TokenizerSpec {
        TokenizerSpec::new(family, 512, 0xABCD).unwrap()
    }

    #[test]
    fn encoding_is_deterministic_and_wrapped_in_specials() {
        let s = spec(BackboneName::Bert);
        let a = s.encode("Fake news spreads fast", 32).unwrap();
        let b = s.encode("Fake news spreads fast", 32).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.ids[0], CLS_ID);
        assert_eq!(*a.ids.last().unwrap(), EOS_ID);
        assert_eq!(a.ids.len(), 6);
        assert!(!a.was_empty);
        assert!(a.ids[1..5].iter().all(|&id| id >= FIRST_WORD_ID && id < 512));
    }

    #[test]
    fn case_is_folded_before_hashing() {
        let s = spec(BackboneName::Roberta);
        assert_eq!(
            s.encode("COVID covid CoViD", 32).unwrap().ids[1..4]
                .iter()
                .collect::<std::collections::HashSet<_>>()
                .len(),
            1
        );
    }

    #[test]
    fn salts_separate_families() {
        let a = TokenizerSpec::new(BackboneName::Bert, 4096, 1).unwrap();
        let b = TokenizerSpec::new(BackboneName::Roberta, 4096, 2).unwrap();
        let words = ["virus", "vaccine", "mask", "cure", "hoax"];
        // At least one word must land on a different id under a different salt.
        assert!(words.iter().any(|w| a.hash_word(w) != b.hash_word(w)));
    }

    #[test]
    fn empty_text_uses_the_family_convention_and_is_flagged() {
        let bert = spec(BackboneName::Bert).encode("   ", 32).unwrap();
        assert!(bert.was_empty);
        assert_eq!(bert.ids, vec![CLS_ID, EOS_ID]);

        let gpt2 = spec(BackboneName::Gpt2).encode("", 32).unwrap();
        assert!(gpt2.was_empty);
        assert_eq!(gpt2.ids, vec![EOS_ID]);
    }

    #[test]
    fn gpt2_pads_with_its_end_of_text_token() {
        let s = spec(BackboneName::Gpt2);
        assert_eq!(s.pad_id(), EOS_ID);
        assert_eq!(spec(BackboneName::Bart).pad_id(), PAD_ID);
        let rows = pad_batch(&s, &[
            s.encode("one two three", 32).unwrap(),
            s.encode("one", 32).unwrap(),
        ]);
        assert_eq!(rows[1].0.len(), 3);
        assert_eq!(rows[1].0[1], EOS_ID);
        assert_eq!(rows[1].1, vec![true, false, false]);
    }

    #[test]
    fn truncation_respects_the_special_token_budget() {
        let s = spec(BackboneName::Albert);
        let long = vec!["word"; 500].join(" ");
        let t = s.encode(&long, 16).unwrap();
        assert_eq!(t.ids.len(), 16);
        assert_eq!(t.ids[0], CLS_ID);
        assert_eq!(*t.ids.last().unwrap(), EOS_ID);

        let g = spec(BackboneName::Gpt2).encode(&long, 16).unwrap();
        assert_eq!(g.ids.len(), 16);
        assert!(g.ids.iter().all(|&id| id >= FIRST_WORD_ID));
    }
}
