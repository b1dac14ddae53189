//! Energy detector design and its empirical false-alarm and misdetection rates.
//!
//!     cargo run --release --example detector_calibration [beacons]

use beamalign::angleset::AngleSet;
use beamalign::detection::{marcum_q1, DetectionDesign};
use beamalign::phy::{draw_channel, SystemParams};
use beamalign::angleset::PiecewisePrior;
use beamalign::simulator::{trial_rng, SignalLink};

fn main() -> beamalign::Result<()> {
    let n: u64 = std::env::args().nth(1).and_then(|a| a.parse().ok()).unwrap_or(200_000);
    let mut params = SystemParams::paper_defaults();
    params.p_e = 1e-3;
    let det = DetectionDesign::new(&params)?;
    println!("threshold tau_th      = {:.6}", det.tau_th);
    println!("false alarm exp(-tau) = {:e}", det.p_fa());
    println!("required SNR nu*      = {:e}", det.nu_star);
    println!("misdetection at nu*   = {:e}", det.p_md(det.nu_star));
    println!("Q1(3, 2)              = {:.12}", marcum_q1(3.0, 2.0));

    let prior = PiecewisePrior::uniform(&params.support_t)?;
    let beam = params.support_t.clone();
    let empty = AngleSet::interval(2.0, 3.0)?;
    let energy = det.phi_s * beam.measure() * beam.measure();
    let (mut fa, mut md) = (0u64, 0u64);
    for i in 0..n {
        let mut rng = trial_rng(7, i);
        let ch = draw_channel(&params, &prior, &prior, &mut rng);
        let mut link = SignalLink { channel: &ch, detection: &det, rng: &mut rng };
        use beamalign::policies::Link;
        if link.detect(&empty, &empty, energy) {
            fa += 1;
        }
        if !link.detect(&beam, &beam, energy) {
            md += 1;
        }
    }
    let sd = (params.p_e * (1.0 - params.p_e) / n as f64).sqrt();
    println!("\n{n} beacons, target {:e} +/- {:e} (3 sigma)", params.p_e, 3.0 * sd);
    println!("empirical false alarm  = {:e}", fa as f64 / n as f64);
    println!("empirical misdetection = {:e}", md as f64 / n as f64);
    Ok(())
}
