use super::SimConfig;
use crate::model::{anonymize_user, AnonKey};
use crate::types::UserRef;
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticUser {
    pub user: UserRef,
    pub raw_id: String,
    pub cohort: usize,
    pub flag_accuracy: f64,
    pub flag_propensity: f64,
}

/// Identity key for a simulated platform.
pub(crate) fn sim_key(seed: u64) -> AnonKey {
    let mut bytes = [0u8; 16];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    bytes[8..].copy_from_slice(&(!seed).rotate_left(17).to_le_bytes());
    AnonKey::new(bytes)
}

/// Split `n` by `fractions` with the largest-remainder method; leftover
/// units go to the largest fractional parts, lower index first on ties.
pub fn cohort_sizes(fractions: &[f64], n: usize) -> Vec<usize> {
    let quotas: Vec<f64> = fractions.iter().map(|f| f * n as f64).collect();
    let mut sizes: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = sizes.iter().sum();
    let mut order: Vec<usize> = (0..fractions.len()).collect();
    order.sort_by(|&a, &b| {
        let ra = quotas[a] - quotas[a].floor();
        let rb = quotas[b] - quotas[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle().take(n.saturating_sub(assigned)) {
        sizes[i] += 1;
    }
    sizes
}

/// Users in contiguous cohort blocks; identities are anonymized with a key
/// derived from the seed.
pub fn generate_population(cfg: &SimConfig) -> Result<Vec<SyntheticUser>> {
    cfg.validate()?;
    let key = sim_key(cfg.seed);
    let fractions: Vec<f64> = cfg.cohorts.iter().map(|c| c.fraction).collect();
    let sizes = cohort_sizes(&fractions, cfg.n_users);
    let mut users = Vec::with_capacity(cfg.n_users);
    for (cohort, (spec, size)) in cfg.cohorts.iter().zip(sizes).enumerate() {
        for _ in 0..size {
            let raw_id = format!("sim-user-{}", users.len());
            users.push(SyntheticUser {
                user: anonymize_user(&raw_id, &key)?,
                raw_id,
                cohort,
                flag_accuracy: spec.flag_accuracy,
                flag_propensity: spec.flag_propensity,
            });
        }
    }
    Ok(users)
}
