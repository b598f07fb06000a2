//! Builds an Ornstein–Uhlenbeck bridge and compares the tabulated marginal
//! law and drift with their hyperbolic closed forms.
//!
//! ```sh
//! cargo run --release --example ou_bridge_transition
//! ```

use gmb_osp::reference::{oub_closed_forms, oub_theta, OUBSpec};
use gmb_osp::BridgeTables;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let oub = OUBSpec::new(-1.0, 1.0, 1.0, 0.5, 0.0)?;
    let tables = BridgeTables::build(oub.bridge(), 5000)?;

    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "mean", "exact", "theta", "exact");
    for t in [0.1, 0.3, 0.5, 0.7, 0.9, 0.99] {
        let law = tables.bridge_transition(0.0, oub.x, t)?;
        let exact = oub_closed_forms(&oub, t)?;
        println!(
            "{t:>6.2} {:>12.8} {:>12.8} {:>12.6} {:>12.6}",
            law.mean,
            exact.mean,
            tables.theta_of(t)?,
            oub_theta(&oub, t)?
        );
    }

    let law = tables.bridge_transition(0.25, 1.0, 0.75)?;
    println!("X(0.75) | X(0.25) = 1 ~ N({:.6}, {:.6})", law.mean, law.var);
    Ok(())
}
