use serde::{Deserialize, Serialize};

use crate::types::{MessageId, Seq, UserRef, Verdict};

/// One entry of the append-only log. Serializes as
/// `{"seq":n,"kind":"...","payload":{...}}` with fields in that order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub seq: Seq,
    #[serde(flatten)]
    pub body: EventBody,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload")]
pub enum EventBody {
    MessagePosted {
        message_id: MessageId,
        author: UserRef,
        text: String,
    },
    FlagSubmitted {
        message_id: MessageId,
        flagger: UserRef,
        verdict: Verdict,
    },
    EditorialLabeled {
        message_id: MessageId,
        moderator: UserRef,
        verdict: Verdict,
    },
}

impl EventBody {
    pub fn message_id(&self) -> MessageId {
        match self {
            EventBody::MessagePosted { message_id, .. }
            | EventBody::FlagSubmitted { message_id, .. }
            | EventBody::EditorialLabeled { message_id, .. } => *message_id,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            EventBody::MessagePosted { .. } => "MessagePosted",
            EventBody::FlagSubmitted { .. } => "FlagSubmitted",
            EventBody::EditorialLabeled { .. } => "EditorialLabeled",
        }
    }
}

impl Event {
    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("event serialization is infallible")
    }

    pub fn from_line(line: &str) -> serde_json::Result<Self> {
        serde_json::from_str(line)
    }
}
