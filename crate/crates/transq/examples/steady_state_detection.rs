//! Watching steady-state detection fire inside a single long step.
//!
//! When a step is long relative to the chain's mixing time, the DTMC
//! iterates Π(i) stop moving long before the Poisson window is exhausted.
//! Detection tracks the distance dᵢ = ∥Π(i) − Π(∞)∥_∞ and the rigorous
//! mixture bound Bᵢ built from it; once Bᵢ drops below the offered
//! threshold, the step returns the stationary vector and charges Bᵢ plus the
//! step tolerance instead of iterating to the end of the window.
//!
//! Run with: cargo run --example steady_state_detection

use transq::model::{build_generator, build_rates, StepProfile};
use transq::stationary::{stationary_distribution, ProbabilityVector};
use transq::uniformizer::{poisson_window, solve_step};

fn main() -> transq::Result<()> {
    let profile = StepProfile { lambda: 18.0, mu: 0.5, servers: 40 };
    let model = build_rates(&profile, 0.95, 0.25, 70)?;
    let gen = build_generator(&model);
    let pi = stationary_distribution(&model)?;
    let p0 = ProbabilityVector::point_mass(gen.num_states(), 0);

    let delta = 120.0;
    let epsilon = 1e-9;
    let full_window = poisson_window(gen.alpha() * delta, epsilon);
    println!("αΔ = {:.0}, full window needs {} multiplications", gen.alpha() * delta, full_window.right());

    for threshold in [0.0, 1e-10, 1e-6, 1e-3] {
        let step = solve_step(&p0, &gen, delta, epsilon, threshold, &pi)?;
        let fired = if step.steady_detected { "fired" } else { "  off" };
        print!(
            "threshold {threshold:>7.0e}  {fired} after {:>6} multiplications, charged {:.3e}",
            step.mvm_count, step.error_charged
        );
        if let Some(rho) = step.rate_estimate {
            print!(", contraction ≈ {rho:.4}");
        }
        println!();
    }

    // The charge is a real bound: compare the detected answer against the
    // non-detected one.
    let detected = solve_step(&p0, &gen, delta, epsilon, 1e-6, &pi)?;
    let plain = solve_step(&p0, &gen, delta, epsilon, 0.0, &pi)?;
    println!(
        "\n|detected − plain|_inf = {:.3e}  (charge was {:.3e})",
        detected.p_out.inf_distance(&plain.p_out),
        detected.error_charged
    );

    Ok(())
}
