use super::{extract_features, predict_toxicity, FeatureVector, ModerationView};
use crate::types::{EditorialLabel, FlagEvent, MessageId, Seq, UserRef, Verdict};
use crate::{Error, Result};

/// Gold-labelled example, frozen at the moment the editorial label arrived.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub message_id: MessageId,
    pub features: FeatureVector,
    pub toxic_flaggers: Vec<UserRef>,
    pub acceptable_flaggers: Vec<UserRef>,
    pub gold: Verdict,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub message_id: MessageId,
    pub probability: f64,
    pub model_version: u64,
    pub seq: Seq,
}

fn features_for<V: ModerationView + ?Sized>(
    view: &V,
    id: MessageId,
    flags: &[FlagEvent],
) -> Result<FeatureVector> {
    let message = view.message(id).ok_or(Error::UnknownMessage(id))?;
    let params = view.params();
    extract_features(
        message,
        flags,
        view.reputations(),
        &params.embeddings,
        &params.layout,
    )
}

pub fn make_training_example<V: ModerationView + ?Sized>(
    view: &V,
    label: &EditorialLabel,
) -> Result<TrainingExample> {
    let id = label.message_id;
    if view.message(id).is_none() {
        return Err(Error::UnknownMessage(id));
    }
    if view.has_editorial(id) {
        return Err(Error::DuplicateEditorialLabel(id));
    }
    let flags = view.effective_flags(id);
    let features = features_for(view, id, &flags)?;
    let (toxic, acceptable): (Vec<&FlagEvent>, Vec<&FlagEvent>) =
        flags.iter().partition(|f| f.verdict == Verdict::Toxic);
    Ok(TrainingExample {
        message_id: id,
        features,
        toxic_flaggers: toxic.iter().map(|f| f.flagger).collect(),
        acceptable_flaggers: acceptable.iter().map(|f| f.flagger).collect(),
        gold: label.verdict,
    })
}

/// Score a message after `flag` is applied to the view's flag set.
///
/// Only toxic flags create a prediction (unless `rescore_on_acceptable` is
/// set). Flags on terminal messages never do.
pub fn make_prediction_example<V: ModerationView + ?Sized>(
    view: &V,
    flag: &FlagEvent,
) -> Result<Option<Prediction>> {
    let id = flag.message_id;
    let message = view.message(id).ok_or(Error::UnknownMessage(id))?;
    if message.status.is_terminal() {
        return Ok(None);
    }
    if flag.verdict == Verdict::Acceptable && !view.model_config().rescore_on_acceptable {
        return Ok(None);
    }
    let mut flags = view.effective_flags(id);
    match flags.binary_search_by_key(&flag.flagger, |f| f.flagger) {
        Ok(i) => flags[i] = *flag,
        Err(i) => flags.insert(i, *flag),
    }
    let features = features_for(view, id, &flags)?;
    let params = view.params();
    Ok(Some(Prediction {
        message_id: id,
        probability: predict_toxicity(params, &features)?,
        model_version: params.version,
        seq: flag.seq,
    }))
}
