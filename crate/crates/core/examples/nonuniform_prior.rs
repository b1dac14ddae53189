//! Mass-greedy fractional search under a non-uniform angle prior.
//!
//!     cargo run --release --example nonuniform_prior [trials]

use std::f64::consts::FRAC_PI_2;

use beamalign::angleset::{Interval, PiecewisePrior};
use beamalign::phy::SystemParams;
use beamalign::policies::{Design, Policy, ProtocolConfig};
use beamalign::simulator::{run_monte_carlo, ErrorMode, SimConfig};
use beamalign::units::watts_to_dbm;

fn main() -> beamalign::Result<()> {
    let trials = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(5000);
    let mut params = SystemParams::paper_defaults();
    params.rate_min_bps = 2.0 * params.bandwidth_hz;
    params.phi_s_override = None;
    let design = Design::new(params, ProtocolConfig::default())?;
    let peaked = |w: f64| {
        PiecewisePrior::from_weights(vec![
            (Interval::new(-FRAC_PI_2, -0.5), 1.0),
            (Interval::new(-0.5, 0.5), w),
            (Interval::new(0.5, FRAC_PI_2), 1.0),
        ])
    };
    println!("uniform-prior bound P_u = {:.3} dBm", watts_to_dbm(design.schedule.power_w));
    for w in [1.0, 3.0, 10.0, 100.0] {
        let mut cfg = SimConfig::new(design.clone(), Policy::DfsNonuniform, ErrorMode::None)?;
        cfg.prior_t = peaked(w)?;
        cfg.prior_r = peaked(w)?;
        let s = run_monte_carlo(&cfg, trials, 3)?;
        println!(
            "centre weight {w:>5}: {:.3} dBm (+/- {:.3e} W), aligned {:.4}",
            watts_to_dbm(s.mean_power_w),
            s.power_ci_w,
            s.alignment_success_rate
        );
    }
    Ok(())
}
