use super::model::AttackModel;
use super::mse::evaluate_mse;
use super::report::{AttackReport, CellResult};
use crate::numerics::{child_seed, Matrix, SeededRng};
use crate::par::map_indexed;
use crate::reconnet::NetConfig;
use crate::reducers::{Method, ReducerConfig};
use crate::shadow::build_shadow_set;
use crate::{Error, Result};

/// Grid of attack runs over methods, known-member counts and repeats.
#[derive(Clone, Debug)]
pub struct ExperimentSpec {
    pub methods: Vec<Method>,
    pub known_sizes: Vec<usize>,
    pub repeats: usize,
    /// Number of public records, split into shadow train/val/test corpora.
    pub public_size: usize,
    pub train_fraction: f64,
    pub val_fraction: f64,
    /// Reducer settings shared by all methods; `method` and `seed` are
    /// overwritten per cell.
    pub reducer: ReducerConfig,
    /// Network settings; widths and seed are overwritten per cell.
    pub net: NetConfig,
    pub seed: u64,
    pub keep_reconstructions: bool,
}

impl ExperimentSpec {
    pub fn new(methods: Vec<Method>, known_sizes: Vec<usize>, repeats: usize, public_size: usize, seed: u64) -> Self {
        ExperimentSpec {
            methods,
            known_sizes,
            repeats,
            public_size,
            train_fraction: 0.8,
            val_fraction: 0.1,
            reducer: ReducerConfig::new(Method::Pca, 0),
            net: NetConfig::new(2, 1),
            seed,
            keep_reconstructions: false,
        }
    }

    /// Sizes of the shadow train/val/test corpora.
    pub fn partition_sizes(&self) -> (usize, usize, usize) {
        let m = self.public_size;
        let train = (m as f64 * self.train_fraction).round() as usize;
        let val = (m as f64 * self.val_fraction).round() as usize;
        (train, val, m.saturating_sub(train + val))
    }

    pub fn validate(&self, available_rows: usize) -> Result<()> {
        if self.methods.is_empty() || self.known_sizes.is_empty() || self.repeats == 0 {
            return Err(Error::validation("methods, known sizes and repeats must be nonempty"));
        }
        if self.known_sizes.contains(&0) {
            return Err(Error::validation("known sizes must be positive"));
        }
        let (train, val, test) = self.partition_sizes();
        if train == 0 || val == 0 || test == 0 {
            return Err(Error::validation(format!(
                "public pool of {} gives a {train}/{val}/{test} split; every part needs at least one record",
                self.public_size
            )));
        }
        let largest = *self.known_sizes.iter().max().expect("nonempty");
        let required = self.public_size + largest;
        if available_rows < required {
            return Err(Error::validation(format!(
                "dataset has {available_rows} rows but {required} are required \
                 ({} public + {largest} known members)",
                self.public_size
            )));
        }
        Ok(())
    }

    /// Number of cells in the grid.
    pub fn cell_count(&self) -> usize {
        self.methods.len() * self.known_sizes.len() * self.repeats
    }

    /// Plan for cell `index`, enumerated method-major, then size, then repeat.
    pub fn cell(&self, index: usize) -> CellPlan {
        let per_method = self.known_sizes.len() * self.repeats;
        let method = self.methods[index / per_method];
        let known_size = self.known_sizes[(index % per_method) / self.repeats];
        let repeat = index % self.repeats;
        CellPlan::new(self.seed, method, known_size, repeat)
    }
}

/// Seeds of one experiment cell. Everything except the shadow seed is shared
/// by all methods for a given (known size, repeat), so methods face the same
/// known members and the same network initialization.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellPlan {
    pub method: Method,
    pub known_size: usize,
    pub repeat: usize,
    pub repeat_seed: u64,
    pub known_seed: u64,
    pub shadow_seed: u64,
    pub net_seed: u64,
}

impl CellPlan {
    pub fn new(seed: u64, method: Method, known_size: usize, repeat: usize) -> Self {
        let repeat_seed = child_seed(child_seed(seed, 1), repeat as u64);
        CellPlan {
            method,
            known_size,
            repeat,
            repeat_seed,
            known_seed: child_seed(repeat_seed, known_size as u64),
            shadow_seed: child_seed(child_seed(repeat_seed, 100 + method.id() as u64), known_size as u64),
            net_seed: child_seed(repeat_seed, 2),
        }
    }

    /// Shadow seeds of the train, validation and test corpora.
    pub fn corpus_seeds(&self) -> [u64; 3] {
        [0, 1, 2].map(|i| child_seed(self.shadow_seed, i))
    }
}

/// Row indices of the public train/val/test partitions and of the held-out
/// pool from which known members are drawn.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
    pub pool: Vec<usize>,
}

impl Partition {
    pub fn new(rows: usize, spec: &ExperimentSpec) -> Self {
        let mut order: Vec<usize> = (0..rows).collect();
        SeededRng::new(child_seed(spec.seed, 0)).shuffle(&mut order);
        let (train, val, _) = spec.partition_sizes();
        let m = spec.public_size;
        Partition {
            train: order[..train].to_vec(),
            val: order[train..train + val].to_vec(),
            test: order[train + val..m].to_vec(),
            pool: order[m..].to_vec(),
        }
    }

    pub fn known_members(&self, plan: &CellPlan) -> Vec<usize> {
        let picks = SeededRng::new(plan.known_seed).sample_indices(self.pool.len(), plan.known_size);
        picks.into_iter().map(|i| self.pool[i]).collect()
    }
}

/// Trained model and test material of one cell.
#[derive(Debug)]
pub struct CellArtifacts {
    pub plan: CellPlan,
    pub model: AttackModel,
    pub known: Matrix,
    pub test_public: Matrix,
    pub test_reconstructions: Matrix,
}

/// Builds the three shadow corpora of a cell, trains on them and
/// reconstructs every test record.
pub fn train_cell(
    data: &Matrix,
    spec: &ExperimentSpec,
    partition: &Partition,
    plan: CellPlan,
) -> Result<CellArtifacts> {
    let known = data.select_rows(&partition.known_members(&plan));
    let reducer = {
        let mut r = spec.reducer.clone();
        r.method = plan.method;
        r
    };
    let [s_train, s_val, s_test] = plan.corpus_seeds();
    let train_set = build_shadow_set(&known, &data.select_rows(&partition.train), &reducer, s_train)?;
    let val_set = build_shadow_set(&known, &data.select_rows(&partition.val), &reducer, s_val)?;
    let test_public = data.select_rows(&partition.test);
    let test_set = build_shadow_set(&known, &test_public, &reducer, s_test)?;
    let mut net = spec.net.clone();
    net.seed = plan.net_seed;
    let model = AttackModel::train(&train_set, &val_set, &net)?;
    let test_reconstructions = model.reconstruct_set(&test_set)?;
    Ok(CellArtifacts {
        plan,
        model,
        known,
        test_public,
        test_reconstructions,
    })
}

/// Runs every cell of the grid. Cells are independent and may run
/// concurrently; the report lists them in grid order.
pub fn run_experiment(data: &Matrix, spec: &ExperimentSpec) -> Result<AttackReport> {
    spec.validate(data.rows())?;
    let partition = Partition::new(data.rows(), spec);
    let results = map_indexed(spec.cell_count(), |i| -> Result<CellResult> {
        let plan = spec.cell(i);
        let context = format!(
            "{} with {} known members, repeat {}",
            plan.method, plan.known_size, plan.repeat
        );
        let cell = train_cell(data, spec, &partition, plan).map_err(|e| e.context(&context))?;
        let mse = evaluate_mse(&cell.test_public, &cell.test_reconstructions)?;
        let report = cell.model.report.as_ref();
        Ok(CellResult {
            method: plan.method,
            known_size: plan.known_size,
            repeat: plan.repeat,
            mse_mean: mse.mean,
            mse_std: mse.std,
            n_test: cell.test_public.rows(),
            seed: plan.repeat_seed,
            epochs: report.map_or(0, |r| r.epochs_run()),
            best_epoch: report.map_or(0, |r| r.best_epoch),
            reconstructions: spec.keep_reconstructions.then_some(cell.test_reconstructions),
        })
    });
    let cells = results.into_iter().collect::<Result<Vec<_>>>()?;
    Ok(AttackReport { cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::synth_digits;

    fn tiny_spec(methods: Vec<Method>, sizes: Vec<usize>, repeats: usize) -> ExperimentSpec {
        let mut spec = ExperimentSpec::new(methods, sizes, repeats, 20, 3);
        spec.net.mlp_hidden = vec![16];
        spec.net.target_hidden = 4;
        spec.net.context_hidden = 8;
        spec.net.lr = 1e-3;
        spec.net.max_epochs = 3;
        spec.net.batch_size = 8;
        spec
    }

    #[test]
    fn grid_has_one_cell_per_combination_and_reruns_bitwise() {
        let data = synth_digits(40, 1).unwrap().data;
        let spec = tiny_spec(vec![Method::Pca, Method::Srp], vec![4, 6], 2);
        let a = run_experiment(&data, &spec).unwrap();
        assert_eq!(a.cells.len(), 8);
        let b = run_experiment(&data, &spec).unwrap();
        assert_eq!(a, b);
        assert!(a.cells.iter().all(|c| c.mse_mean >= 0.0 && c.n_test == 2));
    }

    #[test]
    fn partitions_are_disjoint_and_sized() {
        let spec = ExperimentSpec::new(vec![Method::Pca], vec![9], 1, 300, 0);
        assert_eq!(spec.partition_sizes(), (240, 30, 30));
        let p = Partition::new(400, &spec);
        let mut all: Vec<usize> = [&p.train, &p.val, &p.test, &p.pool]
            .iter()
            .flat_map(|v| v.iter().copied())
            .collect();
        all.sort_unstable();
        assert_eq!(all, (0..400).collect::<Vec<_>>());
        let known = p.known_members(&CellPlan::new(0, Method::Pca, 9, 0));
        assert!(known.iter().all(|k| p.pool.contains(k)));
    }

    #[test]
    fn known_members_shared_across_methods() {
        let a = CellPlan::new(5, Method::Pca, 9, 1);
        let b = CellPlan::new(5, Method::Umap, 9, 1);
        assert_eq!(a.known_seed, b.known_seed);
        assert_eq!(a.net_seed, b.net_seed);
        assert_ne!(a.shadow_seed, b.shadow_seed);
    }

    #[test]
    fn insufficient_data_states_required_counts() {
        let data = synth_digits(25, 1).unwrap().data;
        let spec = tiny_spec(vec![Method::Pca], vec![9], 1);
        let err = run_experiment(&data, &spec).unwrap_err();
        assert!(err.to_string().contains("29 are required"), "{err}");
    }
}
