//! A full 24-hour call-center run with hourly operational measures.
//!
//! 150 servers handle a sinusoidal arrival pattern that sweeps the offered
//! load between 0.65 and 1.05 over one and a half daily cycles, in 288
//! five-minute staffing steps. The run starts from an empty system, so the
//! early distributions are genuinely transient; where the load plateaus the
//! solver detects stationarity and skips ahead.
//!
//! Run with: cargo run --release --example full_horizon

use transq::cli::{builtin_size, generate_paper_scenario, LoadBand, PaperOptions};
use transq::horizon::solve_horizon;
use transq::measures::MeasureSeries;
use transq::stationary::ProbabilityVector;

fn main() -> transq::Result<()> {
    let size = builtin_size("150")?;
    let config = generate_paper_scenario(size, LoadBand::Wide, &PaperOptions::default())?;
    println!(
        "{} servers, queue capacity {}, {} steps of {} min",
        size.servers,
        size.queue,
        config.steps.len(),
        config.step_length
    );

    let p0 = ProbabilityVector::point_mass(config.num_states(), 0);
    let result = solve_horizon(&config, &p0)?;
    let series = MeasureSeries::from_horizon(&config, &result)?;

    println!("\n hour   load   E[X]     P(immediate)  P(full)    detected");
    for (j, t) in series.times.iter().enumerate() {
        if (j + 1) % 12 != 0 {
            continue;
        }
        println!(
            "{:>5.0}  {:>5.3}  {:>7.2}  {:>12.4}  {:>9.2e}  {}",
            t / 60.0,
            series.load[j],
            series.expected_state[j],
            series.p_immediate[j],
            series.p_tail[j],
            if series.steady_flags[j] { "yes" } else { "" }
        );
    }

    println!(
        "\ntotal multiplications {}, detections {}/{}, error consumed {:.3e} of {:.0e}",
        result.total_mvms(),
        result.detections(),
        result.len(),
        result.ledger.consumed(),
        config.epsilon_total
    );

    Ok(())
}
