//! How the global error budget turns into per-step detection thresholds.
//!
//! A horizon of J steps gets a single tolerance ε_total. Every step charges
//! at least its truncation tolerance ε_step; steady-state detection may
//! charge more (its measured bound) in exchange for stopping early. The
//! ledger offers each step whatever slack remains after reserving ε_step for
//! every future step, so early detections spend freely and later ones get
//! squeezed — the budget can never be overdrawn.
//!
//! Run with: cargo run --release --example error_budget

use transq::cli::{builtin_size, generate_paper_scenario, LoadBand, PaperOptions};
use transq::horizon::{solve_horizon, ErrorLedger};
use transq::stationary::ProbabilityVector;

fn main() -> transq::Result<()> {
    // Standalone ledger arithmetic: 10 steps, budget 3e-2, per-step 1e-3.
    let mut ledger = ErrorLedger::new(3e-2, 1e-3, 10);
    println!("step  threshold offered  charge     consumed");
    for step in 1..=10 {
        let offered = ledger.detection_threshold();
        // Pretend detection fires on the first three steps with a bound
        // one tenth of the offer, then never again.
        let charge = if step <= 3 { offered / 10.0 + 1e-3 } else { 1e-3 };
        ledger.charge(charge);
        println!("{step:>4}  {offered:>17.6e}  {charge:.3e}  {:.6e}", ledger.consumed());
    }
    println!("final consumption {:.6e} <= budget {:.0e}\n", ledger.consumed(), ledger.epsilon_total());

    // The same mechanics on a real 24-hour scenario.
    let config = generate_paper_scenario(
        builtin_size("150")?,
        LoadBand::Wide,
        &PaperOptions { epsilon_step: 1e-7, epsilon_total: 3e-2, ..PaperOptions::default() },
    )?;
    let p0 = ProbabilityVector::point_mass(config.num_states(), 0);
    let result = solve_horizon(&config, &p0)?;

    let mut consumed = 0.0;
    let mut detections = Vec::new();
    for (j, step) in result.step_results.iter().enumerate() {
        consumed += step.error_charged;
        if step.steady_detected {
            detections.push((j + 1, step.error_charged, consumed));
        }
    }
    println!("24-hour run, {} steps, budget {:.0e}:", result.len(), config.epsilon_total);
    for (i, (step, charge, total)) in detections.iter().enumerate() {
        if i == 5 && detections.len() > 8 {
            println!("  ... {} more detections ...", detections.len() - 8);
        }
        if (5..detections.len().saturating_sub(3)).contains(&i) {
            continue;
        }
        println!("  step {step:>3}: detection charged {charge:.3e}, cumulative {total:.3e}");
    }
    println!(
        "  {} detections, consumed {:.3e} of {:.0e}",
        result.detections(),
        result.ledger.consumed(),
        config.epsilon_total
    );

    // A budget below J·ε_step leaves no slack to offer: detection stays off
    // and the solver emits per-step guarantees only.
    let mut starved = config.clone();
    starved.epsilon_total = 1e-9;
    println!("\nfeasible with ε_total = 1e-9? {}", starved.budget_is_feasible());
    let result = solve_horizon(&starved, &p0)?;
    println!("detections under the starved budget: {}", result.detections());

    Ok(())
}
