//! End-to-end acceptance gate: one test per shipped guarantee, each printing
//! a single PASS/FAIL line with the measured quantity against its pinned
//! bound. Tolerances live in the constants below; the random suites use
//! fixed seeds so every run measures the same inputs.

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use transq::cli::{builtin_size, generate_paper_scenario, LoadBand, PaperOptions};
use transq::horizon::solve_horizon;
use transq::measures::max_tail_probability;
use transq::model::{build_generator, build_rates, BirthDeathModel, ScenarioConfig, StepProfile};
use transq::oracle::{dense_stationary, expm_step, poisson_cdf_reference, DenseMatrix};
use transq::stationary::{stationary_distribution, ProbabilityVector};
use transq::uniformizer::{poisson_window, solve_step};

/// Step-vs-exponential agreement required of the solver on small chains.
const STEP_ORACLE_TOL: f64 = 1e-10;
/// Product-form vs dense-elimination agreement for stationary vectors.
const STATIONARY_TOL: f64 = 1e-12;
/// Accepted multiplicative slack around the published peak tail values.
const TAIL_FACTOR: f64 = 3.0;
/// Published peak tail probabilities being reproduced.
const TAIL_Q250_G997: f64 = 1.8e-4;
const TAIL_Q300_G99: f64 = 9.3e-10;
/// Noise floor granted to tails that the published table puts at or below
/// 1e-16 (unresolvable atop 288 accumulated truncations).
const TAIL_FLOOR: f64 = 1e-12;
/// Budgets exercised by the global-error and work-saving checks.
const BUDGETS: [f64; 4] = [5e-3, 1.5e-2, 3e-2, 5e-2];
/// Required work reduction: detection at budget 3e-2 must at most halve the
/// detection-off multiplication count on the size-150 wide-band scenario.
const SAVINGS_RATIO: f64 = 0.5;

fn reference_options(gamma: f64, patience: f64) -> PaperOptions {
    PaperOptions {
        gamma,
        patience_mean_minutes: patience,
        epsilon_step: 1e-13,
        detection: false,
        ..PaperOptions::default()
    }
}

fn solve_from_empty(config: &ScenarioConfig) -> transq::HorizonResult {
    let p0 = ProbabilityVector::point_mass(config.num_states(), 0);
    solve_horizon(config, &p0).expect("horizon solve")
}

fn random_model(rng: &mut ChaCha8Rng, max_size: usize) -> BirthDeathModel {
    let n = rng.gen_range(2..=max_size);
    let birth: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..8.0)).collect();
    let death: Vec<f64> = (0..n).map(|_| rng.gen_range(0.05..8.0)).collect();
    BirthDeathModel::new(birth, death).expect("random model")
}

fn random_distribution(rng: &mut ChaCha8Rng, len: usize) -> ProbabilityVector {
    let raw: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..1.0)).collect();
    let total: f64 = raw.iter().sum();
    ProbabilityVector::new(raw.into_iter().map(|v| v / total).collect()).expect("distribution")
}

fn sci(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.2e}")).collect();
    format!("[{}]", parts.join(", "))
}

#[test]
fn oracle_step_equivalence() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0_f64;
    for _ in 0..50 {
        let model = random_model(&mut rng, 50);
        let gen = build_generator(&model);
        let delta = rng.gen_range(0.1..10.0);
        let p0 = random_distribution(&mut rng, gen.num_states());
        let placeholder = ProbabilityVector::point_mass(gen.num_states(), 0);
        let step = solve_step(&p0, &gen, delta, 1e-12, 0.0, &placeholder).expect("step");
        let q = DenseMatrix::from_generator(&gen).expect("dense generator");
        let exact = expm_step(&p0, &q, delta).expect("matrix exponential");
        worst = worst.max(step.p_out.inf_distance(&exact));
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= STEP_ORACLE_TOL && elapsed < 10.0;
    println!(
        "{} oracle step equivalence: max |step - expm|_inf = {worst:.3e} over 50 random \
         models (bound {STEP_ORACLE_TOL:.0e}), {elapsed:.1}s",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(worst <= STEP_ORACLE_TOL, "worst step error {worst:.3e}");
    assert!(elapsed < 10.0, "took {elapsed:.1}s, bound 10s");
}

#[test]
fn stationary_cross_check() {
    let start = Instant::now();
    let mut worst = 0.0_f64;
    let mut checked = 0usize;
    for label in ["54", "150", "390"] {
        let size = builtin_size(label).unwrap();
        // The dense elimination is cubic, so the widest system is sampled
        // every fourth step instead of at all 288.
        let stride = if size.servers >= 300 { 4 } else { 1 };
        for band in [LoadBand::Wide, LoadBand::Narrow] {
            let config = generate_paper_scenario(size, band, &PaperOptions::default()).unwrap();
            for profile in config.steps.iter().step_by(stride) {
                let model = build_rates(profile, config.gamma, config.eta, config.size_n()).unwrap();
                let pi = stationary_distribution(&model).unwrap();
                let q = DenseMatrix::from_generator(&build_generator(&model)).unwrap();
                let dense = dense_stationary(&q).unwrap();
                worst = worst.max(pi.inf_distance(&dense));
                checked += 1;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..100 {
        let model = random_model(&mut rng, 49);
        let pi = stationary_distribution(&model).unwrap();
        let q = DenseMatrix::from_generator(&build_generator(&model)).unwrap();
        let dense = dense_stationary(&q).unwrap();
        worst = worst.max(pi.inf_distance(&dense));
        checked += 1;
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst <= STATIONARY_TOL && elapsed < 30.0;
    println!(
        "{} stationary cross-check: max |product-form - dense|_inf = {worst:.3e} over \
         {checked} models (bound {STATIONARY_TOL:.0e}), {elapsed:.1}s",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(worst <= STATIONARY_TOL, "worst stationary distance {worst:.3e}");
    assert!(elapsed < 30.0, "took {elapsed:.1}s, bound 30s");
}

#[test]
fn tail_probability_reproduction() {
    let peak = |queue: usize, gamma: f64, patience: f64| {
        let size = builtin_size(&format!("1000+{queue}")).unwrap();
        let config =
            generate_paper_scenario(size, LoadBand::Wide, &reference_options(gamma, patience))
                .unwrap();
        max_tail_probability(solve_from_empty(&config).distributions())
    };

    let q250 = peak(250, 0.997, 12.0);
    let q300 = peak(300, 0.99, 8.0);
    let in_band = |value: f64, published: f64| {
        value >= published / TAIL_FACTOR && value <= published * TAIL_FACTOR
    };

    let q400_g97 = peak(400, 0.97, 8.0);
    let q400_g99 = peak(400, 0.99, 8.0);

    // Fixed-parameter capacity sweep: more waiting room never raises the peak.
    let sweep = [q250, peak(300, 0.997, 12.0), peak(400, 0.997, 12.0)];
    let monotone = sweep.windows(2).all(|w| w[1] <= w[0]);

    let pass = in_band(q250, TAIL_Q250_G997)
        && in_band(q300, TAIL_Q300_G99)
        && q400_g97 <= TAIL_FLOOR
        && q400_g99 <= TAIL_FLOOR
        && monotone;
    println!(
        "{} tail reproduction: q=250 peak {q250:.3e} (published {TAIL_Q250_G997:.1e}), \
         q=300 peak {q300:.3e} (published {TAIL_Q300_G99:.1e}), q=400 peaks {q400_g97:.1e}/\
         {q400_g99:.1e} <= {TAIL_FLOOR:.0e}, capacity sweep {} monotone: {monotone}",
        if pass { "PASS" } else { "FAIL" },
        sci(&sweep)
    );
    assert!(in_band(q250, TAIL_Q250_G997), "q=250 peak {q250:.3e}");
    assert!(in_band(q300, TAIL_Q300_G99), "q=300 peak {q300:.3e}");
    assert!(q400_g97 <= TAIL_FLOOR, "q=400 gamma=0.97 peak {q400_g97:.3e}");
    assert!(q400_g99 <= TAIL_FLOOR, "q=400 gamma=0.99 peak {q400_g99:.3e}");
    assert!(monotone, "sweep {sweep:?} not monotone");
}

#[test]
fn global_error_bound() {
    let start = Instant::now();
    let mut worst_ratio = 0.0_f64;
    let mut summary = String::new();
    for label in ["150", "390"] {
        let size = builtin_size(label).unwrap();
        let reference = {
            let config =
                generate_paper_scenario(size, LoadBand::Wide, &reference_options(0.97, 4.0))
                    .unwrap();
            solve_from_empty(&config)
        };
        for budget in BUDGETS {
            let config = generate_paper_scenario(
                size,
                LoadBand::Wide,
                &PaperOptions { epsilon_total: budget, ..PaperOptions::default() },
            )
            .unwrap();
            let result = solve_from_empty(&config);
            let deviation = result
                .distributions()
                .zip(reference.distributions())
                .map(|(a, b)| a.inf_distance(b))
                .fold(0.0_f64, f64::max);
            assert!(
                deviation <= budget,
                "size {label} budget {budget:.1e}: deviation {deviation:.3e}"
            );
            worst_ratio = worst_ratio.max(deviation / budget);
            summary = format!("size {label} budget {budget:.1e}: deviation {deviation:.3e}");
        }
    }
    let elapsed = start.elapsed().as_secs_f64();
    let pass = worst_ratio <= 1.0 && elapsed < 120.0;
    println!(
        "{} global error bound: worst deviation/budget = {worst_ratio:.3} across sizes \
         150/390 x budgets {} (last: {summary}), {elapsed:.1}s",
        if pass { "PASS" } else { "FAIL" },
        sci(&BUDGETS)
    );
    assert!(elapsed < 120.0, "took {elapsed:.1}s, bound 120s");
}

#[test]
fn detection_savings() {
    let size = builtin_size("150").unwrap();
    let baseline = {
        let config = generate_paper_scenario(
            size,
            LoadBand::Wide,
            &PaperOptions { detection: false, ..PaperOptions::default() },
        )
        .unwrap();
        solve_from_empty(&config).total_mvms()
    };
    let counts: Vec<usize> = BUDGETS
        .iter()
        .map(|&budget| {
            let config = generate_paper_scenario(
                size,
                LoadBand::Wide,
                &PaperOptions { epsilon_total: budget, ..PaperOptions::default() },
            )
            .unwrap();
            solve_from_empty(&config).total_mvms()
        })
        .collect();
    let monotone = counts.windows(2).all(|w| w[1] <= w[0]);
    let at_3e2 = counts[2];
    let ratio = at_3e2 as f64 / baseline as f64;
    let pass = monotone && ratio <= SAVINGS_RATIO;
    println!(
        "{} detection savings: size-150 wide-band multiplications {counts:?} for budgets \
         {} vs {baseline} without detection; monotone: {monotone}; at 3e-2 the \
         ratio is {ratio:.2} (required <= {SAVINGS_RATIO})",
        if pass { "PASS" } else { "FAIL" },
        sci(&BUDGETS)
    );
    assert!(monotone, "multiplication counts {counts:?} not monotone in budget");
    assert!(
        ratio <= SAVINGS_RATIO,
        "detection at budget 3e-2 spent {at_3e2} of {baseline} multiplications \
         (ratio {ratio:.2}, required <= {SAVINGS_RATIO})"
    );
}

#[test]
fn narrow_band_speedup() {
    let size = builtin_size("1250").unwrap();
    let options = PaperOptions { gamma: 0.997, patience_mean_minutes: 12.0, ..PaperOptions::default() };
    let mvms = |band| {
        let config = generate_paper_scenario(size, band, &options).unwrap();
        solve_from_empty(&config).total_mvms()
    };
    let wide = mvms(LoadBand::Wide);
    let narrow = mvms(LoadBand::Narrow);
    let pass = narrow < wide;
    println!(
        "{} narrow-band speedup: 1000+250 at gamma 0.997 needs {narrow} multiplications \
         (narrow band) vs {wide} (wide band)",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(narrow < wide, "narrow {narrow} not below wide {wide}");
}

#[test]
fn poisson_window_correctness() {
    let start = Instant::now();
    let mut worst_prefix = 0.0_f64;
    let mut worst_tail = 0.0_f64;
    for alpha_t in [1.0, 1e3, 1e6] {
        for epsilon in [1e-5, 1e-7] {
            let w = poisson_window(alpha_t, epsilon);
            let prefix = if w.left() == 0 {
                0.0
            } else {
                poisson_cdf_reference(alpha_t, w.left() - 1)
            };
            let tail = 1.0 - poisson_cdf_reference(alpha_t, w.right());
            assert!(
                prefix <= epsilon / 2.0,
                "alpha_t {alpha_t:.0e} eps {epsilon:.0e}: prefix {prefix:.3e}"
            );
            assert!(
                tail <= epsilon / 2.0,
                "alpha_t {alpha_t:.0e} eps {epsilon:.0e}: tail {tail:.3e}"
            );
            worst_prefix = worst_prefix.max(prefix / (epsilon / 2.0));
            worst_tail = worst_tail.max(tail / (epsilon / 2.0));
        }
    }
    // Width scales as the square root of alpha_t: ~8.8e3 terms at 1e-5 and
    // the frozen 10654 at 1e-7, both around 10-11 standard deviations.
    let width_loose = poisson_window(1e6, 1e-5).width();
    let width_tight = poisson_window(1e6, 1e-7).width();
    let elapsed = start.elapsed().as_secs_f64();
    let pass = width_loose < 10_000 && width_tight == 10_654 && elapsed < 5.0;
    println!(
        "{} poisson window: prefix/tail masses within eps/2 (worst fractions {worst_prefix:.2}/\
         {worst_tail:.2}), widths at 1e6 = {width_loose} (eps 1e-5, bound 1e4) and {width_tight} \
         (eps 1e-7, frozen), {elapsed:.1}s",
        if pass { "PASS" } else { "FAIL" }
    );
    assert!(width_loose < 10_000, "width {width_loose} at eps 1e-5");
    assert_eq!(width_tight, 10_654, "width at eps 1e-7");
    assert!(elapsed < 5.0, "took {elapsed:.1}s, bound 5s");
}

#[test]
fn property_suite() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);

    // Mass accounting: retained mass plus tracked defect stays at 1.
    let mut worst_mass = 0.0_f64;
    for _ in 0..25 {
        let model = random_model(&mut rng, 60);
        let gen = build_generator(&model);
        let p0 = random_distribution(&mut rng, gen.num_states());
        let placeholder = ProbabilityVector::point_mass(gen.num_states(), 0);
        let step = solve_step(&p0, &gen, rng.gen_range(0.5..20.0), 1e-9, 0.0, &placeholder).unwrap();
        worst_mass = worst_mass.max((step.p_out.total_mass() + step.p_out.defect() - 1.0).abs());
    }
    assert!(worst_mass <= 1e-12, "mass accounting off by {worst_mass:.3e}");

    // Truncation produces an entrywise lower bound on the exact distribution.
    let mut lower_bound_ok = true;
    for _ in 0..20 {
        let model = random_model(&mut rng, 40);
        let gen = build_generator(&model);
        let p0 = random_distribution(&mut rng, gen.num_states());
        let placeholder = ProbabilityVector::point_mass(gen.num_states(), 0);
        let delta = rng.gen_range(0.5..10.0);
        let step = solve_step(&p0, &gen, delta, 1e-8, 0.0, &placeholder).unwrap();
        let q = DenseMatrix::from_generator(&gen).unwrap();
        let exact = expm_step(&p0, &q, delta).unwrap();
        lower_bound_ok &= step
            .p_out
            .entries()
            .iter()
            .zip(exact.entries())
            .all(|(a, e)| *a <= e + 1e-13);
    }
    assert!(lower_bound_ok, "truncated step exceeded the exact distribution somewhere");

    // Detection soundness: whenever detection fires on a service-system
    // step with at most 200 states, the charged error dominates the true
    // error against the dense exponential.
    let mut fires = 0usize;
    let mut worst_margin = f64::NEG_INFINITY;
    for _ in 0..40 {
        let servers = rng.gen_range(5..=60);
        let queue = rng.gen_range(10..=139.min(199 - servers));
        let n = servers + queue;
        let mu = rng.gen_range(0.2..1.0);
        let profile = StepProfile {
            lambda: servers as f64 * mu * rng.gen_range(0.7..1.1),
            mu,
            servers,
        };
        let model = build_rates(&profile, rng.gen_range(0.9..1.0), rng.gen_range(0.1..0.5), n)
            .unwrap();
        let gen = build_generator(&model);
        let pi = stationary_distribution(&model).unwrap();
        let p0 = random_distribution(&mut rng, gen.num_states());
        let delta = rng.gen_range(2.0..30.0);
        let threshold = 10f64.powf(rng.gen_range(-5.0..-2.0));
        let step = solve_step(&p0, &gen, delta, 1e-9, threshold, &pi).unwrap();
        let q = DenseMatrix::from_generator(&gen).unwrap();
        let exact = expm_step(&p0, &q, delta).unwrap();
        let true_err = step.p_out.inf_distance(&exact);
        assert!(
            true_err <= step.error_charged,
            "true error {true_err:.3e} above charge {:.3e} (fired: {})",
            step.error_charged,
            step.steady_detected
        );
        if step.steady_detected {
            fires += 1;
            worst_margin = worst_margin.max(true_err / step.error_charged);
        }
    }
    assert!(fires >= 10, "only {fires} detections fired; seed no longer exercises the bound");

    // Bit determinism: repeated horizon solves agree to the last bit.
    let config = generate_paper_scenario(
        builtin_size("150").unwrap(),
        LoadBand::Wide,
        &PaperOptions::default(),
    )
    .unwrap();
    let a = solve_from_empty(&config);
    let b = solve_from_empty(&config);
    let mut identical = a.ledger.consumed().to_bits() == b.ledger.consumed().to_bits();
    for (x, y) in a.step_results.iter().zip(&b.step_results) {
        identical &= x.mvm_count == y.mvm_count;
        identical &= x.error_charged.to_bits() == y.error_charged.to_bits();
        identical &= x
            .p_out
            .entries()
            .iter()
            .zip(y.p_out.entries())
            .all(|(u, v)| u.to_bits() == v.to_bits());
    }
    assert!(identical, "repeated horizon runs diverged");

    println!(
        "PASS property suite: mass accounting within {worst_mass:.1e}, entrywise lower bound \
         holds, {fires} detections all sound (worst true/charged = {worst_margin:.3}), \
         repeated runs bit-identical"
    );
}
