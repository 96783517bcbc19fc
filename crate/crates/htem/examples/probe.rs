use htem::data::{generate_scenario, standardize, ScenarioId, ScenarioSpec};
use htem::rng::RandomStream;
use htem::sampler::{run_chain, ChainConfig, ErrorMode, Hyperparameters};

fn main() {
    let spec = ScenarioSpec::new(ScenarioId::I, 100, 100).unwrap();
    let mut s = RandomStream::new(1);
    let (raw, _) = generate_scenario(&spec, &mut s).unwrap();
    let std = standardize(&raw).unwrap();
    let hyper = Hyperparameters::defaults(100, ErrorMode::Htem);
    let config = ChainConfig { iterations: 20_000, burn_in: 2_000, thin: 1, seed: 1 };
    let t0 = std::time::Instant::now();
    let trace = run_chain(&std.data, &hyper, &config, &mut s).unwrap();
    println!("chain: {:.2?} accept {:.3}", t0.elapsed(), trace.accept_rate());
    let t1 = std::time::Instant::now();
    let thin = trace.thin(20);
    let mut ps = RandomStream::new(2);
    for i in 0..100 {
        let x: Vec<f64> = (0..100).map(|j| ((i + j) as f64 * 0.01).sin()).collect();
        let _ = htem::inference::predictive_draws(&thin, &x, &mut ps).unwrap();
    }
    println!("100 test-point predictive sets: {:.2?}", t1.elapsed());
}
