//! Rate construction and generator assembly for one staffing step.
//!
//! Builds the birth–death rates of a small call center (3 servers, queue
//! room for 4 more callers, balking and abandonment active in the queue),
//! then assembles the uniformized generator and shows where its
//! uniformization rate comes from.
//!
//! Run with: cargo run --example build_model

use transq::model::{build_generator, build_rates, StepProfile};

fn main() -> transq::Result<()> {
    let profile = StepProfile { lambda: 2.4, mu: 1.0, servers: 3 };
    let gamma = 0.8; // fraction of arrivals that still join when all servers are busy
    let eta = 0.5; // abandonment rate per waiting caller
    let n = 7; // states 0..=7: 3 in service plus up to 4 waiting

    println!("offered load λ/(sμ) = {:.3}", profile.load());

    let model = build_rates(&profile, gamma, eta, n)?;
    println!("\nstate  birth      death      (death listed for the transition k+1 -> k)");
    for k in 0..n {
        println!(
            "{k:>5}  {:>9.4}  {:>9.4}",
            model.birth_rates()[k],
            model.death_rates()[k]
        );
    }

    let gen = build_generator(&model);
    println!("\nuniformization rate α = {:.4} (largest total exit rate over states)", gen.alpha());
    for k in 0..=n {
        let exit = -gen.diagonal()[k];
        let marker = if exit == gen.alpha() { "  <- α" } else { "" };
        println!("state {k}: exit rate {exit:.4}{marker}");
    }

    // An inflated rate is accepted as long as it dominates every exit rate;
    // the chain it describes is the same, just with more self-loops.
    let inflated = build_generator(&model).with_alpha(2.0 * gen.alpha())?;
    println!("\ninflated α = {:.4} describes the same CTMC", inflated.alpha());

    Ok(())
}
