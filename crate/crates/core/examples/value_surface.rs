//! Evaluates the value function of the Brownian-bridge problem on a small
//! grid and marks the stopping region.
//!
//! ```sh
//! cargo run --release --example value_surface
//! ```

use gmb_osp::solver::{solve, ValueSurface};
use gmb_osp::{BridgeSpec, SolverConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (tables, boundary, _) = solve(&BridgeSpec::brownian(1.0, 1.0, 0.0, 0.0), &SolverConfig::default())?;
    let surface = ValueSurface::new(&tables, &boundary)?;
    let xs: Vec<f64> = (0..=8).map(|j| -0.5 + 0.25 * j as f64).collect();

    print!("{:>6} {:>8}", "t", "b(t)");
    for x in &xs {
        print!(" {x:>9.2}");
    }
    println!();
    for t in [0.0, 0.2, 0.4, 0.6, 0.8, 0.95] {
        let b = boundary.at(t);
        print!("{t:>6.2} {b:>8.4}");
        for &x in &xs {
            let v = surface.value(t, x)?;
            let mark = if x >= b { '*' } else { ' ' };
            print!(" {v:>8.4}{mark}");
        }
        println!();
    }
    println!("* = stopping region, where V(t, x) = x");
    Ok(())
}
