//! Work saved by steady-state detection at different accuracy targets.
//!
//! The same 24-hour scenario is solved once with detection disabled and then
//! with progressively looser global budgets. A looser budget lets detection
//! fire earlier in each settled step, so the multiplication count drops while
//! the solutions stay within the requested distance of the exact ones. The
//! narrow load band gives detection more to work with than the wide band:
//! loads hug 1.0, steps change little, and iterates settle fast.
//!
//! Run with: cargo run --release --example detection_savings

use transq::cli::{builtin_size, generate_paper_scenario, LoadBand, PaperOptions};
use transq::horizon::solve_horizon;
use transq::stationary::ProbabilityVector;

fn main() -> transq::Result<()> {
    let size = builtin_size("150")?;

    for band in [LoadBand::Wide, LoadBand::Narrow] {
        let baseline_config = generate_paper_scenario(
            size,
            band,
            &PaperOptions { detection: false, ..PaperOptions::default() },
        )?;
        let p0 = ProbabilityVector::point_mass(baseline_config.num_states(), 0);
        let baseline = solve_horizon(&baseline_config, &p0)?;
        println!("{band:?} band: {} multiplications without detection", baseline.total_mvms());

        println!("  ε_total   multiplications  saved   detections  max |·|_inf deviation");
        for epsilon_total in [5e-3, 1.5e-2, 3e-2, 5e-2] {
            let config = generate_paper_scenario(
                size,
                band,
                &PaperOptions { epsilon_total, ..PaperOptions::default() },
            )?;
            let result = solve_horizon(&config, &p0)?;
            let deviation = result
                .distributions()
                .zip(baseline.distributions())
                .map(|(a, b)| a.inf_distance(b))
                .fold(0.0_f64, f64::max);
            println!(
                "  {epsilon_total:>7.1e}  {:>15}  {:>5.1}%  {:>10}  {deviation:.3e}",
                result.total_mvms(),
                100.0 * (1.0 - result.total_mvms() as f64 / baseline.total_mvms() as f64),
                result.detections()
            );
        }
        println!();
    }

    Ok(())
}
