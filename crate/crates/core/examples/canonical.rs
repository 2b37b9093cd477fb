//! Run the canonical scenario under the flag-count baseline and the learned
//! policy and print the headline numbers.
//!
//! Run: `cargo run --release -p modhub-core --example canonical [seed]`

use modhub_core::sim::{compare_policies, SimConfig};
use modhub_core::PolicyConfig;

fn main() -> modhub_core::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(42);
    let cfg = SimConfig::canonical(seed);
    let start = std::time::Instant::now();
    let rows = compare_policies(&cfg, &[PolicyConfig::primitive(), PolicyConfig::learned()])?;
    for (name, m) in ["primitive", "learned"].iter().zip(&rows) {
        println!(
            "{name:>9}: precision_auto={:?} recall_all={:?} removed={} toxic={} labels={} labels/true_takedown={:?} review_fraction={:?} reliability={:?}",
            m.precision_auto,
            m.recall_all,
            m.removed,
            m.toxic_messages,
            m.editorial_labels_used,
            m.editorial_labels_per_true_takedown,
            m.review_fraction,
            m.cohort_mean_reliability,
        );
    }
    println!("elapsed: {:.1?}", start.elapsed());
    Ok(())
}
