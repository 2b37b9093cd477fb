use std::collections::BTreeMap;
use std::hash::Hasher;

use siphasher::sip::SipHasher13;

use super::{EmbeddingVector, ReputationRecord};
use crate::types::{FlagEvent, MessageRecord, UserRef, Verdict};
use crate::{Error, Result};

pub const TOXIC_LOG_COUNT: usize = 0;
pub const ACCEPTABLE_LOG_COUNT: usize = 1;
pub const TOXIC_RELIABILITY: usize = 2;
pub const ACCEPTABLE_RELIABILITY: usize = 3;
const SOCIAL_DIM: usize = 4;

// Fixed, public keys: token hashing only needs to be stable, not secret.
const TOKEN_HASH_KEYS: (u64, u64) = (0x6d6f_6468_7562_746b, 0x6275_636b_6574_7331);

/// Positions of the blocks inside a [`FeatureVector`]:
/// four social features, then the mean toxic-flagger embedding, then the
/// signed hashed token counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub embedding_dim: usize,
    pub hash_buckets: usize,
}

impl FeatureLayout {
    pub fn new(embedding_dim: usize, hash_buckets: usize) -> Self {
        Self {
            embedding_dim,
            hash_buckets,
        }
    }

    pub fn dim(&self) -> usize {
        SOCIAL_DIM + self.embedding_dim + self.hash_buckets
    }

    pub fn embedding_range(&self) -> std::ops::Range<usize> {
        SOCIAL_DIM..SOCIAL_DIM + self.embedding_dim
    }

    pub fn content_range(&self) -> std::ops::Range<usize> {
        let start = SOCIAL_DIM + self.embedding_dim;
        start..start + self.hash_buckets
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector(pub Vec<f64>);

impl FeatureVector {
    pub fn zeros(layout: &FeatureLayout) -> Self {
        Self(vec![0.0; layout.dim()])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Lowercase, then split on anything that is not alphanumeric.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

/// Bucket index and sign for one token.
fn hash_token(token: &str, buckets: usize) -> (usize, f64) {
    let mut h = SipHasher13::new_with_keys(TOKEN_HASH_KEYS.0, TOKEN_HASH_KEYS.1);
    h.write(token.as_bytes());
    let v = h.finish();
    let bucket = (v % buckets as u64) as usize;
    let sign = if v >> 63 == 0 { 1.0 } else { -1.0 };
    (bucket, sign)
}

/// Build the feature vector for `message` from its effective flag set.
///
/// Flaggers without a reputation record count at the 0.5 prior, and flaggers
/// without an embedding contribute the zero vector.
pub fn extract_features(
    message: &MessageRecord,
    flags: &[FlagEvent],
    reputations: &BTreeMap<UserRef, ReputationRecord>,
    embeddings: &BTreeMap<UserRef, EmbeddingVector>,
    layout: &FeatureLayout,
) -> Result<FeatureVector> {
    let mut x = FeatureVector::zeros(layout);
    let v = &mut x.0;

    let mut toxic = 0usize;
    let mut acceptable = 0usize;
    let emb = layout.embedding_range();
    for flag in flags {
        if flag.message_id != message.message_id {
            return Err(Error::ContractViolation(format!(
                "flag for message {} passed while extracting message {}",
                flag.message_id, message.message_id
            )));
        }
        let centered = reputations
            .get(&flag.flagger)
            .map_or(0.5, ReputationRecord::reliability)
            - 0.5;
        match flag.verdict {
            Verdict::Toxic => {
                toxic += 1;
                v[TOXIC_RELIABILITY] += centered;
                if let Some(e) = embeddings.get(&flag.flagger) {
                    check_embedding(e, layout)?;
                    for (slot, val) in v[emb.clone()].iter_mut().zip(&e.0) {
                        *slot += val;
                    }
                }
            }
            Verdict::Acceptable => {
                acceptable += 1;
                v[ACCEPTABLE_RELIABILITY] += centered;
            }
        }
    }
    v[TOXIC_LOG_COUNT] = (toxic as f64).ln_1p();
    v[ACCEPTABLE_LOG_COUNT] = (acceptable as f64).ln_1p();
    if toxic > 0 {
        let n = toxic as f64;
        v[emb].iter_mut().for_each(|slot| *slot /= n);
    }

    let content = layout.content_range();
    for token in tokenize(&message.text) {
        let (bucket, sign) = hash_token(&token, layout.hash_buckets);
        v[content.start + bucket] += sign;
    }
    Ok(x)
}

fn check_embedding(e: &EmbeddingVector, layout: &FeatureLayout) -> Result<()> {
    if e.0.len() != layout.embedding_dim {
        return Err(Error::ContractViolation(format!(
            "embedding of length {} does not match dimension {}",
            e.0.len(),
            layout.embedding_dim
        )));
    }
    Ok(())
}
