use std::fmt;
use std::hash::Hasher;

use siphasher::sip::SipHasher24;

use crate::types::UserRef;
use crate::{Error, Result};

/// 16-byte secret for the keyed identity hash.
#[derive(Clone, PartialEq, Eq)]
pub struct AnonKey([u8; 16]);

impl AnonKey {
    pub fn new(bytes: [u8; 16]) -> Self {
        Self(bytes)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let raw = hex::decode(s.trim()).map_err(|e| Error::Config(format!("anon_key_hex: {e}")))?;
        let bytes: [u8; 16] = raw
            .try_into()
            .map_err(|_| Error::Config("anon_key_hex must encode exactly 16 bytes".into()))?;
        Ok(Self(bytes))
    }
}

// Never print key material.
impl fmt::Debug for AnonKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("AnonKey(..)")
    }
}

/// Map a raw platform identity to an opaque 64-bit reference with SipHash-2-4.
pub fn anonymize_user(raw_id: &str, key: &AnonKey) -> Result<UserRef> {
    if raw_id.is_empty() {
        return Err(Error::InvalidIdentity);
    }
    let mut h = SipHasher24::new_with_key(&key.0);
    h.write(raw_id.as_bytes());
    Ok(UserRef(h.finish()))
}
