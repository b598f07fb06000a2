//! Solves the stopping problem for four bridges with time-dependent
//! coefficients and prints their boundaries side by side.
//!
//! ```sh
//! cargo run --release --example time_varying_coefficients
//! ```

use std::f64::consts::PI;

use gmb_osp::solver::solve;
use gmb_osp::{BridgeSpec, CoefficientFn, ParentSpec, SolverConfig};

fn bridge(theta: CoefficientFn, kappa: CoefficientFn, nu: CoefficientFn) -> BridgeSpec {
    BridgeSpec::new(ParentSpec { theta, kappa, nu, horizon: 1.0, x0: 0.0 }, 0.0)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let one = CoefficientFn::constant(1.0);
    let sets = [
        ("sin kappa", bridge(CoefficientFn::constant(3.0), CoefficientFn::sinusoid(0.0, 1.0, 2.0 * PI, 0.0), one.clone())),
        ("ramp kappa", bridge(CoefficientFn::constant(3.0), CoefficientFn::normal_cdf_ramp(-1.0, 1.0, 50.0, 0.5), one.clone())),
        ("bump nu", bridge(one.clone(), one.clone(), CoefficientFn::normal_pdf_bump(1.0, 1.0, 100.0, 0.25))),
        ("sin theta", bridge(CoefficientFn::sinusoid(1.0, 0.5, 2.0 * PI, 0.0), CoefficientFn::constant(-1.0), one)),
    ];

    let mut solved = Vec::new();
    for (name, spec) in &sets {
        let (_, b, log) = solve(spec, &SolverConfig::default())?;
        println!("{name}: {} iterations, final d = {:.2e}", log.iterations, log.d.last().unwrap());
        solved.push(b);
    }

    print!("{:>6}", "t");
    for (name, _) in &sets {
        print!(" {name:>11}");
    }
    println!();
    for k in 0..=20 {
        let t = k as f64 / 20.0;
        print!("{t:>6.2}");
        for b in &solved {
            print!(" {:>11.5}", b.at(t));
        }
        println!();
    }
    Ok(())
}
