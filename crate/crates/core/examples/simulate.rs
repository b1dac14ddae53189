//! Monte-Carlo run of one policy with signal-level detection, and its per-frame records.
//!
//!     cargo run --release --example simulate [policy] [trials]

use beamalign::cli::{render_stats, simulate_stats, ExperimentConfig};
use beamalign::policies::Policy;
use beamalign::simulator::write_trials_csv;

fn main() -> beamalign::Result<()> {
    let mut args = std::env::args().skip(1);
    let policy: Policy = args.next().as_deref().unwrap_or("dfs").parse()?;
    let trials = args.next().and_then(|a| a.parse().ok()).unwrap_or(5000);
    let mut cfg = ExperimentConfig::default();
    cfg.trials = trials;
    let (stats, outcomes) = simulate_stats(&cfg, cfg.params.clone(), policy)?;
    print!("{}", render_stats(policy, &stats));
    println!("\nfirst frames:");
    write_trials_csv(std::io::stdout().lock(), policy, &outcomes[..5.min(outcomes.len())])
}
