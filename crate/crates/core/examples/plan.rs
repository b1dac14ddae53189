//! Optimal alignment schedule for the reference link and a slower variant.
//!
//!     cargo run --example plan

use beamalign::cli::{plan, ExperimentConfig};

fn main() -> beamalign::Result<()> {
    let reference = plan(&ExperimentConfig::default())?;
    println!("== reference link, 15 bit/s/Hz ==");
    print!("{}", reference.render());

    let slow = ExperimentConfig::parse(
        "spectral_efficiency = 2   # bit/s/Hz\n\
         phi_s_dbm = formula       # beacon energy from the detector design\n",
    )?;
    println!("\n== 2 bit/s/Hz, detector-derived beacon energy ==");
    print!("{}", plan(&slow)?.render());
    Ok(())
}
