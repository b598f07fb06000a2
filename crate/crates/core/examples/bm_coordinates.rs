//! Maps a solved boundary into Brownian coordinates and checks it against
//! the lower bound there.
//!
//! ```sh
//! cargo run --release --example bm_coordinates
//! ```

use gmb_osp::reference::OUBSpec;
use gmb_osp::solver::solve;
use gmb_osp::transform::{gain, to_bm_coords, transform_boundary, GainParams};
use gmb_osp::SolverConfig;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let spec = OUBSpec::new(1.0, 1.0, 1.0, 0.0, 0.0)?.bridge();
    let (tables, boundary, _) = solve(&spec, &SolverConfig::default())?;
    let nodes = transform_boundary(&tables, &boundary)?;

    println!("{:>8} {:>10} {:>10} {:>10} {:>10}", "t", "s", "b(t)", "b_W(s)", "bound");
    for node in nodes.iter().step_by(50) {
        println!(
            "{:>8.4} {:>10.5} {:>10.5} {:>10.5} {:>10.5}",
            node.t,
            node.s,
            boundary.at(node.t),
            node.boundary,
            node.lower_bound + 0.0
        );
    }
    // the last node before the horizon is pinned to z, where the two meet
    let worst = nodes[..nodes.len() - 1].iter().map(|n| n.boundary - n.lower_bound).fold(f64::INFINITY, f64::min);
    println!("min (b_W - bound) over unpinned nodes = {worst:.3e}");

    let gp = GainParams::new(&tables);
    let c = to_bm_coords(&tables, 0.5, 0.3)?;
    println!("(0.5, 0.3) -> (s, y) = ({:.6}, {:.6}) -> x = {:.12}", c.s, c.y, gain(&gp, c.s, c.y)?);
    Ok(())
}
