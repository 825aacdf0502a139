//! Product-form stationary distributions, checked against dense linear algebra.
//!
//! The stationary distribution of a birth–death chain follows from detailed
//! balance, so it can be accumulated state by state without ever forming a
//! matrix. This example computes it for a mid-size call center, spot-checks
//! the result against a dense Gaussian-elimination solve of πQ = 0, and then
//! pushes to a system large enough that the unnormalized products would
//! overflow without intermediate renormalization.
//!
//! Run with: cargo run --release --example stationary

use transq::model::{build_generator, build_rates, StepProfile};
use transq::oracle::{dense_stationary, DenseMatrix};
use transq::stationary::stationary_distribution;

fn main() -> transq::Result<()> {
    let profile = StepProfile { lambda: 38.0, mu: 1.0, servers: 40 };
    let model = build_rates(&profile, 0.9, 0.2, 60)?;
    let pi = stationary_distribution(&model)?;

    let mean: f64 = pi.entries().iter().enumerate().map(|(k, p)| k as f64 * p).sum();
    let busy: f64 = pi.entries().iter().take(profile.servers).sum();
    let mode = pi
        .entries()
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .map(|(k, _)| k)
        .unwrap();
    println!("40 servers, queue capacity 20, load {:.2}", profile.load());
    println!("  mean number in system   {mean:.4}");
    println!("  mode                    {mode}");
    println!("  P(server free)          {busy:.4}");
    println!("  P(system full)          {:.3e}", pi.get(pi.len() - 1));

    let q = DenseMatrix::from_generator(&build_generator(&model))?;
    let dense = dense_stationary(&q)?;
    println!("  distance to dense solve {:.3e}", pi.inf_distance(&dense));

    // 3300 servers with a 1000-caller queue: the running product spans
    // hundreds of orders of magnitude, far outside f64 range.
    let big = StepProfile { lambda: 680.0, mu: 0.2, servers: 3300 };
    let model = build_rates(&big, 0.97, 0.25, 4300)?;
    let pi = stationary_distribution(&model)?;
    println!("\n4301 states, load {:.3}", big.load());
    println!("  total mass              {:.16}", pi.total_mass());
    println!("  largest entry           {:.6e}", pi.max_norm());
    println!("  P(system full)          {:.3e}", pi.get(pi.len() - 1));

    Ok(())
}
