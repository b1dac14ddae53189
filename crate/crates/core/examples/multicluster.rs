//! Power at fixed spectral efficiency when a weak second cluster carries ϱ of the energy.
//!
//!     cargo run --release --example multicluster [trials]

use std::io;

use beamalign::cli::{multicluster, write_multicluster_csv, ExperimentConfig};

fn main() -> beamalign::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(2000);
    let mut cfg = ExperimentConfig::parse("l_max = 10\n")?;
    cfg.trials = trials;
    write_multicluster_csv(io::stdout().lock(), &multicluster(&cfg)?)
}
