//! Recovers the factors `R(s, t) = r₁(s)·r₂(t)` of a Gauss–Markov covariance
//! from the covariance alone and compares them with the bridge tables.
//!
//! ```sh
//! cargo run --release --example covariance_factorization
//! ```

use gmb_osp::gmb::factorize_covariance;
use gmb_osp::reference::OUBSpec;
use gmb_osp::BridgeTables;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let tables = BridgeTables::build(OUBSpec::new(0.5, 1.0, 1.0, 0.0, 0.0)?.bridge(), 5000)?;
    let cov = |s: f64, t: f64| {
        let (lo, hi) = (s.min(t), s.max(t));
        let (a, _) = tables.bridge_factorization(lo);
        let (_, b) = tables.bridge_factorization(hi);
        a * b
    };
    let grid: Vec<f64> = (0..=20).map(|k| k as f64 / 20.0).collect();
    let (r1, r2) = factorize_covariance(cov, 0.5, &grid)?;

    // (r₁, r₂) → (c·r₁, r₂/c) leaves R unchanged, so compare r₁/r₂
    // normalized at the reference time
    let mid = 10;
    let (a_ref, b_ref) = tables.bridge_factorization(grid[mid]);
    println!("{:>6} {:>12} {:>12} {:>12}", "t", "r1/r2", "tables", "rel err");
    for (k, &t) in grid.iter().enumerate().skip(1).take(grid.len() - 2) {
        let (a, b) = tables.bridge_factorization(t);
        let got = (r1[k] / r2[k]) / (r1[mid] / r2[mid]);
        let want = (a / b) / (a_ref / b_ref);
        println!("{t:>6.2} {got:>12.8} {want:>12.8} {:>12.2e}", (got - want).abs() / want);
    }
    Ok(())
}
