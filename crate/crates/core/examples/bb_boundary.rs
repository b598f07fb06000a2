//! Solves the Brownian-bridge stopping problem and compares the numerical
//! boundary with `z + 0.8399·σ·√(T − t)`.
//!
//! ```sh
//! cargo run --release --example bb_boundary -- 500 1.0
//! ```

use gmb_osp::reference::{bb_boundary, bb_relative_l2, BBSpec};
use gmb_osp::solver::{solve, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map(|a| a.parse()).transpose()?.unwrap_or(500);
    let sigma: f64 = args.next().map(|a| a.parse()).transpose()?.unwrap_or(1.0);

    let bb = BBSpec::new(1.0, 0.0, sigma)?;
    let started = std::time::Instant::now();
    let (_, boundary, log) = solve(&bb.bridge(0.0), &SolverConfig::with_n(n))?;
    println!(
        "N = {n}, sigma = {sigma}: {} iterations, converged = {}, {:.2?}",
        log.iterations,
        log.converged,
        started.elapsed()
    );
    for (k, d) in log.d.iter().enumerate() {
        println!("  d_{} = {d:.3e}", k + 1);
    }

    let t = boundary.times();
    println!("b(0) = {:.5} (closed form {:.5})", boundary.values()[0], bb_boundary(&bb, 0.0));
    println!("relative L2 error = {:.3e}", bb_relative_l2(&bb, &boundary));
    for i in (0..=n).step_by((n / 10).max(1)) {
        println!("  t = {:.4}  b = {:.5}  exact = {:.5}", t[i], boundary.values()[i], bb_boundary(&bb, t[i]));
    }
    Ok(())
}
