//! Minimal energy E_min(q) for the contact interaction, next to the
//! closed-form branch. Run with `cargo run --release --example energy_curve`.

use nlgp::closed_form::{gp_soliton_invariants, gp_speed_for_momentum};
use nlgp::curve::sweep_solutions;
use nlgp::minimizer::MinimizerConfig;
use nlgp::{Grid, InteractionKernel};

fn main() -> nlgp::Result<()> {
    let grid = Grid::new(8192, 128.0)?;
    let qs: Vec<f64> = (1..=12).map(|i| 0.1 * i as f64).collect();
    let sols = sweep_solutions(&InteractionKernel::dirac(), &qs, &grid, &MinimizerConfig::default(), None)?;
    println!("{:>6} {:>16} {:>16} {:>10}", "q", "E_min", "E_exact", "c");
    for s in &sols {
        let c = gp_speed_for_momentum(s.q, 1e-4)?;
        let (e, _) = gp_soliton_invariants(c)?;
        println!("{:>6.2} {:>16.12} {:>16.12} {:>10.6}", s.q, s.energy, e, s.c_est);
    }
    Ok(())
}
