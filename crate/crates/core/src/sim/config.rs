use serde::{Deserialize, Serialize};

use crate::model::ModelConfig;
use crate::policy::PolicyConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub fraction: f64,
    /// Probability that a flag carries the correct verdict.
    pub flag_accuracy: f64,
    /// Probability that an exposed user flags at all.
    pub flag_propensity: f64,
}

/// Parameters of the synthetic message text. Toxic messages draw "marker"
/// tokens more often than acceptable ones, so content features carry a weak,
/// noisy signal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TextSpec {
    pub tokens_per_message: usize,
    pub vocabulary: usize,
    pub markers: usize,
    pub marker_rate_toxic: f64,
    pub marker_rate_acceptable: f64,
}

impl Default for TextSpec {
    fn default() -> Self {
        Self {
            tokens_per_message: 8,
            vocabulary: 2000,
            markers: 40,
            marker_rate_toxic: 0.15,
            marker_rate_acceptable: 0.05,
        }
    }
}

/// Which messages are shown to users in a round.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExposureMode {
    /// Every message posted so far, whatever its status, so flags keep accumulating.
    #[default]
    EveryRound,
    /// Only the messages posted in the current round.
    PostingRound,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    #[serde(default)]
    pub seed: u64,
    pub n_users: usize,
    pub cohorts: Vec<CohortSpec>,
    pub n_messages: usize,
    pub toxic_rate: f64,
    /// Mean of the Poisson number of users a message is shown to per exposure round.
    pub exposures_per_message: f64,
    #[serde(default)]
    pub exposure: ExposureMode,
    /// Maximum number of editorial labels over the whole run.
    pub editorial_budget: usize,
    #[serde(default)]
    pub policy: PolicyConfig,
    pub rounds: usize,
    #[serde(default)]
    pub model: ModelConfig,
    #[serde(default)]
    pub text: TextSpec,
    /// Probability that the editorial agent labels correctly; 1.0 is a perfect hub.
    #[serde(default = "one")]
    pub hub_accuracy: f64,
}

fn one() -> f64 {
    1.0
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl SimConfig {
    /// The reference desk-scale scenario: a reliable majority, an adversarial
    /// minority that flags mostly wrong, and a 5% editorial budget.
    pub fn canonical(seed: u64) -> Self {
        Self {
            seed,
            n_users: 500,
            cohorts: vec![
                CohortSpec {
                    fraction: 0.8,
                    flag_accuracy: 0.9,
                    flag_propensity: 0.3,
                },
                CohortSpec {
                    fraction: 0.2,
                    flag_accuracy: 0.2,
                    flag_propensity: 0.5,
                },
            ],
            n_messages: 10_000,
            toxic_rate: 0.05,
            exposures_per_message: 20.0,
            exposure: ExposureMode::EveryRound,
            editorial_budget: 500,
            policy: PolicyConfig {
                threshold: 0.95,
                ..PolicyConfig::learned()
            },
            rounds: 20,
            model: ModelConfig::default(),
            text: TextSpec::default(),
            hub_accuracy: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.cohorts.is_empty() {
            return Err(Error::Config("at least one cohort is required".into()));
        }
        let total: f64 = self.cohorts.iter().map(|c| c.fraction).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!(
                "cohort fractions sum to {total}, expected 1"
            )));
        }
        for (i, c) in self.cohorts.iter().enumerate() {
            unit(&format!("cohorts[{i}].fraction"), c.fraction)?;
            unit(&format!("cohorts[{i}].flag_accuracy"), c.flag_accuracy)?;
            unit(&format!("cohorts[{i}].flag_propensity"), c.flag_propensity)?;
        }
        unit("toxic_rate", self.toxic_rate)?;
        unit("hub_accuracy", self.hub_accuracy)?;
        unit("text.marker_rate_toxic", self.text.marker_rate_toxic)?;
        unit(
            "text.marker_rate_acceptable",
            self.text.marker_rate_acceptable,
        )?;
        if self.n_users == 0 {
            return Err(Error::Config("n_users must be positive".into()));
        }
        if self.rounds == 0 {
            return Err(Error::Config("rounds must be positive".into()));
        }
        if !(self.exposures_per_message.is_finite() && self.exposures_per_message >= 0.0) {
            return Err(Error::Config(
                "exposures_per_message must be a finite nonnegative mean".into(),
            ));
        }
        if self.text.vocabulary == 0 || self.text.markers == 0 {
            return Err(Error::Config(
                "text vocabulary and marker set must be nonempty".into(),
            ));
        }
        self.policy.validate()?;
        self.model.validate()
    }
}
