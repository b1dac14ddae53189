//! Analytic throughput and power under detection errors against simulation.
//!
//!     cargo run --release --example error_analysis [trials]

use beamalign::phy::SystemParams;
use beamalign::planner::error_recursions;
use beamalign::policies::{Design, ProtocolConfig};
use beamalign::simulator::analytic_vs_empirical;
use beamalign::units::watts_to_dbm;

fn main() -> beamalign::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(20_000);
    let design = Design::new(SystemParams::paper_defaults(), ProtocolConfig::default())?;
    println!("error-free: {:.3} dBm, L* = {}", watts_to_dbm(design.schedule.power_w), design.schedule.l_star);
    for p in [1e-3, 1e-2, 5e-2] {
        let a = error_recursions(&design.schedule, p, p)?;
        let c = analytic_vs_empirical(&design, p, p, trials, 11)?;
        println!(
            "p = {p:e}: power {:.3} dBm (sim {:.3}, z {:+.2}), throughput {:.4e} (sim {:.4e}, z {:+.2}){}",
            watts_to_dbm(a.power_w),
            watts_to_dbm(c.empirical_power_w),
            c.power_z,
            a.throughput_bps,
            c.empirical_throughput_bps,
            c.throughput_z,
            if c.flagged { "  FLAGGED" } else { "" }
        );
    }
    Ok(())
}
