//! Trains clean attack models on synthetic digits and prints the divergence
//! between clean and noisy reconstructions over the pixel noise schedule.

use drleak::attack::{train_cell, ExperimentSpec, Partition};
use drleak::datasets::synth_digits;
use drleak::defense::{defense_eval, unit_sigma_schedule, DefenseSetup};
use drleak::reducers::Method;

fn main() -> drleak::Result<()> {
    let data = synth_digits(400, 2024)?.data;
    let mut sigmas = vec![0.0];
    sigmas.extend(unit_sigma_schedule());
    for method in [Method::Pca, Method::Isomap, Method::Srp, Method::Tsne] {
        let mut spec = ExperimentSpec::new(vec![method], vec![9], 3, 300, 11);
        spec.net.lr = 1e-3;
        let partition = Partition::new(data.rows(), &spec);
        for repeat in 0..3 {
            let cell = train_cell(&data, &spec, &partition, spec.cell(repeat))?;
            let setup = DefenseSetup::from_cell(&cell, &spec.reducer, 77 + repeat as u64);
            let curve = defense_eval(Some(&cell.model), &setup, &sigmas)?;
            let vals: Vec<String> = curve
                .points
                .iter()
                .map(|p| format!("{:.4}", p.divergence_eq12))
                .collect();
            println!("{:>7} rep {repeat}: {}", method.name(), vals.join(" "));
        }
    }
    Ok(())
}
