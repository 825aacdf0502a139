//! The JSON scenario format: parsing, validation, and exact round trips.
//!
//! Scenarios live in small JSON files so experiments can be kept in version
//! control and rerun bit for bit. This example parses one from a string,
//! expands it to the solver's per-step form, writes it back out, and checks
//! that a generated builtin scenario survives the full
//! config → JSON → config loop unchanged, floats included.
//!
//! Run with: cargo run --example scenario_files

use transq::cli::{builtin_size, generate_paper_scenario, LoadBand, PaperOptions, ScenarioFile};

fn main() -> transq::Result<()> {
    let text = r#"{
        "horizon_minutes": 480.0,
        "step_minutes": 15.0,
        "servers": [20, 20, 20, 20, 25, 25, 25, 25, 30, 30, 30, 30,
                    30, 30, 30, 30, 25, 25, 25, 25, 20, 20, 20, 20,
                    15, 15, 15, 15, 10, 10, 10, 10],
        "mu_per_min": 0.25,
        "gamma": 0.9,
        "patience_mean_minutes": 6.0,
        "queue_capacity": 15,
        "epsilon_step": 1e-8,
        "epsilon_total": 1e-2,
        "detection": "on",
        "arrival": { "sinusoidal": { "base": 0.8, "amplitude": 0.15, "cycles": 1.0 } }
    }"#;

    let file = ScenarioFile::from_json(text)?;
    let config = file.to_config()?;
    println!("8-hour shift plan with a staffing ramp:");
    println!("  steps            {}", config.steps.len());
    println!("  states tracked   {}", config.num_states());
    println!("  budget feasible  {}", config.budget_is_feasible());
    let peak = config
        .steps
        .iter()
        .max_by(|a, b| a.load().total_cmp(&b.load()))
        .unwrap();
    println!("  peak load        {:.3} (λ = {:.2}/min on {} servers)", peak.load(), peak.lambda, peak.servers);

    // Missing patience means no abandonment; a typo'd key is rejected rather
    // than silently ignored.
    let bad = text.replace("patience_mean_minutes", "patience_minutes");
    match ScenarioFile::from_json(&bad) {
        Err(err) => println!("\nmisspelled key rejected: {err}"),
        Ok(_) => unreachable!("unknown keys must not parse"),
    }

    // Generated scenarios round-trip exactly: shortest-representation float
    // printing parses back to the identical bits.
    let config = generate_paper_scenario(
        builtin_size("390")?,
        LoadBand::Narrow,
        &PaperOptions::default(),
    )?;
    let json = ScenarioFile::from_config(&config).to_json();
    let reparsed = ScenarioFile::from_json(&json)?.to_config()?;
    assert_eq!(config, reparsed);
    println!("\nbuiltin size-390 scenario survives the JSON round trip exactly");
    println!("({} bytes; per-step λ list, scalar everything else)", json.len());

    let dir = std::env::temp_dir().join("transq_scenario_example");
    std::fs::create_dir_all(&dir)?;
    let path = dir.join("shift.json");
    std::fs::write(&path, ScenarioFile::from_config(&config).to_json())?;
    let from_disk = ScenarioFile::from_path(&path)?.to_config()?;
    assert_eq!(config, from_disk);
    println!("wrote and reread {}", path.display());

    Ok(())
}
