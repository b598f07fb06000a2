//! Simulates the Brownian bridge, stops at the computed boundary, and checks
//! that shifting the boundary up or down does not improve the payoff.
//!
//! ```sh
//! cargo run --release --example monte_carlo_validation -- 200000 7
//! ```

use gmb_osp::montecarlo::{optimality_check, McConfig};
use gmb_osp::solver::{solve, value_at};
use gmb_osp::{BridgeSpec, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let paths: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(200_000);
    let seed: u64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(7);

    let (tables, boundary, _) = solve(&BridgeSpec::brownian(1.0, 1.0, 0.0, 0.0), &SolverConfig::default())?;
    let value = value_at(&tables, &boundary, 0.0, 0.0)?;
    let deltas = [-0.2, -0.05, 0.05, 0.2];
    let report = optimality_check(&tables, &boundary, 0.0, 0.0, &deltas, &McConfig::new(paths, seed)?)?;

    let base = &report.base;
    println!("V(0, 0) = {value:.5}");
    println!(
        "MC payoff = {:.5} ± {:.5} ({:+.2} se)",
        base.mean,
        base.std_error,
        (base.mean - value) / base.std_error
    );
    for s in &report.shifts {
        println!(
            "  delta {:+.2}: payoff {:.5}, difference {:+.5} ± {:.5}",
            s.delta, s.mean, s.difference, s.difference_std_error
        );
    }
    let stopped_early: u64 = base.stop_time_histogram[..base.stop_time_histogram.len() - 1].iter().sum();
    println!("{stopped_early} of {paths} paths stopped before the horizon");
    Ok(())
}
