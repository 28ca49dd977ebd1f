//! Runs the desk-scale attack grid on synthetic 8x8 digits and prints the
//! per-method mean MSE for each repeat.

use std::time::Instant;

use drleak::attack::{run_experiment, ExperimentSpec};
use drleak::datasets::synth_digits;
use drleak::reducers::Method;

fn main() -> drleak::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let hidden: Vec<usize> = args
        .get(1)
        .map_or(vec![64, 128], |s| s.split(',').map(|v| v.parse().unwrap()).collect());
    let lr: f64 = args.get(2).map_or(1e-3, |s| s.parse().unwrap());
    let epochs: usize = args.get(3).map_or(200, |s| s.parse().unwrap());
    let repeats: usize = args.get(4).map_or(5, |s| s.parse().unwrap());
    let data = synth_digits(400, 2024)?.data;
    let mut spec = ExperimentSpec::new(Method::ALL.to_vec(), vec![9], repeats, 300, 7);
    spec.net.mlp_hidden = hidden;
    spec.net.lr = lr;
    spec.net.max_epochs = epochs;
    let start = Instant::now();
    let report = run_experiment(&data, &spec)?;
    for c in &report.cells {
        println!(
            "{:>7} rep {} mse {:.5} ± {:.5} epochs {} best {}",
            c.method.name(),
            c.repeat,
            c.mse_mean,
            c.mse_std,
            c.epochs,
            c.best_epoch
        );
    }
    println!("elapsed {:.1}s", start.elapsed().as_secs_f64());
    Ok(())
}
