//! Shared domain records.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Event sequence number, gapless from 1.
pub type Seq = u64;

pub type MessageId = u64;

/// Binary moderation label: toxic (1) or acceptable (0).
///
/// There is no "unknown" member; an absent label is `Option::None`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Verdict {
    Acceptable,
    Toxic,
}

impl Verdict {
    pub fn as_u8(self) -> u8 {
        match self {
            Verdict::Acceptable => 0,
            Verdict::Toxic => 1,
        }
    }

    pub fn from_u8(v: u8) -> Option<Self> {
        match v {
            0 => Some(Verdict::Acceptable),
            1 => Some(Verdict::Toxic),
            _ => None,
        }
    }

    /// Regression target: 1.0 for toxic, 0.0 for acceptable.
    pub fn target(self) -> f64 {
        f64::from(self.as_u8())
    }

    pub fn flipped(self) -> Self {
        match self {
            Verdict::Acceptable => Verdict::Toxic,
            Verdict::Toxic => Verdict::Acceptable,
        }
    }
}

impl Serialize for Verdict {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(self.as_u8())
    }
}

impl<'de> Deserialize<'de> for Verdict {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = u8::deserialize(d)?;
        Verdict::from_u8(v)
            .ok_or_else(|| serde::de::Error::custom(format!("verdict must be 0 or 1, got {v}")))
    }
}

/// Anonymized user identity. Serialized as 16 lowercase hex digits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct UserRef(pub u64);

impl fmt::Display for UserRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:016x}", self.0)
    }
}

impl FromStr for UserRef {
    type Err = std::num::ParseIntError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        u64::from_str_radix(s, 16).map(UserRef)
    }
}

impl Serialize for UserRef {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for UserRef {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        if s.len() != 16 {
            return Err(serde::de::Error::custom("user ref must be 16 hex digits"));
        }
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MessageStatus {
    Active,
    UnderReview,
    Removed,
    Cleared,
}

impl MessageStatus {
    pub fn is_terminal(self) -> bool {
        matches!(self, MessageStatus::Removed | MessageStatus::Cleared)
    }

    /// Position along Active -> UnderReview -> {Removed, Cleared}.
    fn stage(self) -> u8 {
        match self {
            MessageStatus::Active => 0,
            MessageStatus::UnderReview => 1,
            MessageStatus::Removed | MessageStatus::Cleared => 2,
        }
    }

    /// Whether `self -> next` moves forward along the lifecycle. Skipping
    /// UnderReview is allowed; moving backwards or between the two terminal
    /// states is not (the editorial override of a model removal is handled
    /// separately by the service).
    pub fn can_advance_to(self, next: MessageStatus) -> bool {
        !self.is_terminal() && next.stage() > self.stage()
    }

    pub fn as_str(self) -> &'static str {
        match self {
            MessageStatus::Active => "active",
            MessageStatus::UnderReview => "under_review",
            MessageStatus::Removed => "removed",
            MessageStatus::Cleared => "cleared",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MessageRecord {
    pub message_id: MessageId,
    pub author: UserRef,
    pub text: String,
    pub created_at: Seq,
    pub status: MessageStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlagEvent {
    pub message_id: MessageId,
    pub flagger: UserRef,
    pub verdict: Verdict,
    pub seq: Seq,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EditorialLabel {
    pub message_id: MessageId,
    pub moderator: UserRef,
    pub verdict: Verdict,
    pub seq: Seq,
}
