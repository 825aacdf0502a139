//! Sizing the waiting room: blocking probability versus queue capacity.
//!
//! With 1000 servers, sticky callers (3 in 1000 balk) and 12-minute mean
//! patience, how much queue room keeps the probability of turning a caller
//! away negligible over the whole day? The peak of p_n(t) across the horizon
//! answers that. The runs below use reference accuracy (tight per-step
//! tolerance, no detection) because the smaller peaks sit far below any
//! ordinary error budget.
//!
//! Run with: cargo run --release --example tail_probabilities

use transq::cli::{builtin_size, generate_paper_scenario, LoadBand, PaperOptions};
use transq::horizon::solve_horizon;
use transq::measures::max_tail_probability;
use transq::stationary::ProbabilityVector;

fn main() -> transq::Result<()> {
    let options = PaperOptions {
        gamma: 0.997,
        patience_mean_minutes: 12.0,
        epsilon_step: 1e-13,
        detection: false,
        ..PaperOptions::default()
    };

    println!("1000 servers, wide load band (0.65–1.05), γ = 0.997, patience 12 min");
    println!("\nqueue capacity   max_t P(system full)");
    let mut last = f64::INFINITY;
    for queue in [250usize, 300, 400] {
        let size = builtin_size(&format!("1000+{queue}"))?;
        let config = generate_paper_scenario(size, LoadBand::Wide, &options)?;
        let p0 = ProbabilityVector::point_mass(config.num_states(), 0);
        let result = solve_horizon(&config, &p0)?;
        let peak = max_tail_probability(result.distributions());
        println!("{queue:>14}   {peak:.3e}");
        assert!(peak <= last, "tail peak must not grow with capacity");
        last = peak;
    }

    println!("\nAbove 400 the peak sits below the 1e-11 truncation noise floor");
    println!("of these runs, so additional room buys nothing measurable.");

    Ok(())
}
