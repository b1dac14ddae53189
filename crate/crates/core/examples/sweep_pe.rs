//! Analytic power against detection error probability at fixed throughput.
//!
//!     cargo run --release --example sweep_pe > pe.csv

use std::io;

use beamalign::cli::{sweep_pe, write_sweep_pe_csv, ExperimentConfig};
use beamalign::units::watts_to_dbm;

fn main() -> beamalign::Result<()> {
    let cfg = ExperimentConfig::default();
    let rows = sweep_pe(&cfg)?;
    write_sweep_pe_csv(io::stdout().lock(), &rows)?;
    let per_se = rows.len() / cfg.se_values.len();
    for (se, chunk) in cfg.se_values.iter().zip(rows.chunks(per_se)) {
        let best = chunk
            .iter()
            .min_by(|a, b| a.power_w.total_cmp(&b.power_w))
            .expect("non-empty sweep");
        eprintln!(
            "{se:>4} bit/s/Hz: least power {:.3} dBm at p_e = {:e}",
            watts_to_dbm(best.power_w),
            best.pe
        );
    }
    Ok(())
}
