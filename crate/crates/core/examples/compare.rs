//! Simulated power of every policy across spectral efficiencies.
//!
//!     cargo run --release --example compare [trials]

use std::io;

use beamalign::cli::{compare, write_compare_csv, ExperimentConfig};

fn main() -> beamalign::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let mut cfg = ExperimentConfig::parse(
        "l_max = 10\n\
         sweep_min = 3\n\
         sweep_max = 15\n\
         sweep_points = 4\n",
    )?;
    cfg.trials = trials;
    write_compare_csv(io::stdout().lock(), &compare(&cfg)?)
}
