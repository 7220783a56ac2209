//! Runs DE on the sphere function for several seeds and reports how far
//! the best fitness dropped.
//!
//! ```text
//! cargo run --release --example synthetic_convergence -- [seeds] [generations]
//! ```

use evomelody::engine::DeConfig;
use evomelody::fitness::SyntheticOracle;
use evomelody::genome::SearchBounds;
use evomelody::synthetic::{run, SyntheticRun};

fn main() {
    let mut args = std::env::args().skip(1).map(|a| a.parse::<u64>().expect("numeric argument"));
    let seeds = args.next().unwrap_or(10);
    let generations = args.next().unwrap_or(300);

    println!("seed\tinitial_best\tfinal_best\tfactor");
    let mut factors = Vec::new();
    for seed in 0..seeds {
        let cfg = SyntheticRun {
            oracle: SyntheticOracle::Sphere,
            de: DeConfig { population_size: 30, dimensions: 12, scale_factor: 0.5, crossover_rate: 0.9, seed },
            bounds: SearchBounds::uniform(12, -5.12, 5.12).unwrap(),
            generations,
        };
        let report = run(&cfg).unwrap();
        let factor = report.improvement_factor();
        println!("{seed}\t{:.3e}\t{:.3e}\t{factor:.3e}", report.stats[0].best, report.best_fitness);
        factors.push(factor);
    }
    factors.sort_by(f64::total_cmp);
    println!("min factor {:.3e}, median {:.3e}", factors[0], factors[factors.len() / 2]);
}
