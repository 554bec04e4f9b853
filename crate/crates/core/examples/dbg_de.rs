use ptempo::optimizer::*;

fn main() {
    let bounds = vec![(-3.0, 3.0); 3];
    let config = DeConfig {
        population_per_dim: 5,
        max_generations: 40,
        seed: 77,
        ..DeConfig::default()
    };
    let f = |x: &[f64]| -> Result<f64, OptimizerError> {
        Ok(x.iter().map(|v| (v - 0.3).powi(2)).sum())
    };
    let full = differential_evolution(&bounds, &config, f).unwrap();

    let mut state = de_init(&bounds, &config, f).unwrap();
    for _ in 0..15 {
        de_step(&mut state, &bounds, &config, f).unwrap();
    }
    let blob = bincode::serialize(&state).unwrap();
    let resumed: DeState = bincode::deserialize(&blob).unwrap();
    // compare state vs resumed
    for (i, (a, b)) in state.population.iter().zip(resumed.population.iter()).enumerate() {
        for (j, (x, y)) in a.iter().zip(b.iter()).enumerate() {
            if x.to_bits() != y.to_bits() {
                println!("population[{i}][{j}] differs after serde: {x:?} vs {y:?}");
            }
        }
    }
    for (i, (x, y)) in state.fitness.iter().zip(resumed.fitness.iter()).enumerate() {
        if x.to_bits() != y.to_bits() {
            println!("fitness[{i}] differs after serde: {x:?} vs {y:?}");
        }
    }
    let rng_a = serde_json::to_string(&state.rng).unwrap();
    let rng_b = serde_json::to_string(&resumed.rng).unwrap();
    if rng_a != rng_b {
        println!("rng state differs");
    }
    let rest = differential_evolution_from(resumed, &bounds, &config, f, |_| {}).unwrap();
    for (g, (x, y)) in full.history.iter().zip(rest.history.iter()).enumerate() {
        if x.best_value.to_bits() != y.best_value.to_bits() {
            println!(
                "first divergence at history[{g}] (gen {}): {:.17e} vs {:.17e}",
                x.generation, x.best_value, y.best_value
            );
            println!("points: {:?} vs {:?}", x.best_point, y.best_point);
            break;
        }
    }
}
