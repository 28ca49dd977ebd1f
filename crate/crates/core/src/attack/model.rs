use crate::numerics::{child_seed, Matrix, SeededRng};
use crate::reconnet::{train, NetConfig, ReconNet, TrainReport};
use crate::reducers::{Method, ReducerConfig};
use crate::shadow::{build_shadow_set, flatten_target_first, ShadowSet, Standardization};
use crate::{Error, Result};

/// A reconstruction network trained on a shadow corpus together with the
/// input standardization it was trained under.
#[derive(Debug)]
pub struct AttackModel {
    pub net: ReconNet,
    pub stats: Standardization,
    pub method: Method,
    pub report: Option<TrainReport>,
}

impl AttackModel {
    /// Trains on `train_set`, early-stopping on `val_set`. `net_config`'s
    /// input and output widths are taken from the corpus.
    pub fn train(train_set: &ShadowSet, val_set: &ShadowSet, net_config: &NetConfig) -> Result<Self> {
        if (val_set.n_points, val_set.dim) != (train_set.n_points, train_set.dim) {
            return Err(Error::validation(format!(
                "validation corpus has n={}, d={}; training corpus has n={}, d={}",
                val_set.n_points, val_set.dim, train_set.n_points, train_set.dim
            )));
        }
        let mut cfg = net_config.clone();
        cfg.n_points = train_set.n_points;
        cfg.out_dim = train_set.dim;
        let mut net = ReconNet::new(cfg)?;
        let stats = train_set.stats.clone();
        let report = train(&mut net, &train_set.samples(&stats)?, &val_set.samples(&stats)?)?;
        Ok(AttackModel {
            net,
            stats,
            method: train_set.method,
            report: Some(report),
        })
    }

    pub fn from_parts(net: ReconNet, stats: Standardization, method: Method) -> Result<Self> {
        if stats.width() != net.config().input_width() {
            return Err(Error::validation(format!(
                "standardization covers {} coordinates, network takes {}",
                stats.width(),
                net.config().input_width()
            )));
        }
        Ok(AttackModel {
            net,
            stats,
            method,
            report: None,
        })
    }

    pub fn n_points(&self) -> usize {
        self.net.config().n_points
    }

    /// Reconstructs from flattened target-first embeddings, one per row,
    /// before standardization.
    pub fn reconstruct_flat(&self, flat: &Matrix) -> Result<Matrix> {
        let mut rows = Vec::with_capacity(flat.rows() * flat.cols());
        for r in flat.row_iter() {
            rows.extend(self.stats.apply(r)?);
        }
        self.net.predict(&Matrix::from_vec(flat.rows(), flat.cols(), rows)?)
    }

    /// Reconstructs the target from an `n x 2` embedding whose last row is
    /// the target.
    pub fn reconstruct(&self, theta: &Matrix) -> Result<Vec<f64>> {
        if theta.rows() != self.n_points() || theta.cols() != 2 {
            return Err(Error::validation(format!(
                "embedding is {}x{}, model expects {}x2",
                theta.rows(),
                theta.cols(),
                self.n_points()
            )));
        }
        let flat = flatten_target_first(theta);
        let width = flat.len();
        Ok(self.reconstruct_flat(&Matrix::from_vec(1, width, flat)?)?.into_vec())
    }

    /// Reconstructions for every record of a corpus.
    pub fn reconstruct_set(&self, set: &ShadowSet) -> Result<Matrix> {
        let samples = set.samples(&self.stats)?;
        self.net.predict(&samples.inputs)
    }
}

/// Everything the adversary chooses when mounting the attack.
#[derive(Clone, Debug)]
pub struct AttackSetup {
    pub reducer: ReducerConfig,
    pub net: NetConfig,
    /// Fraction of the public pool used for training; the rest validates.
    pub train_fraction: f64,
    pub seed: u64,
}

impl AttackSetup {
    pub fn new(reducer: ReducerConfig, net: NetConfig, seed: u64) -> Self {
        AttackSetup {
            reducer,
            net,
            train_fraction: 8.0 / 9.0,
            seed,
        }
    }
}

#[derive(Debug)]
pub struct AttackOutcome {
    pub reconstruction: Vec<f64>,
    pub model: AttackModel,
}

/// Trains a reconstruction network from `known` and `public`, then applies
/// it to the victim embedding `theta` (`n x 2`, target last).
pub fn run_attack(theta: &Matrix, known: &Matrix, public: &Matrix, setup: &AttackSetup) -> Result<AttackOutcome> {
    if theta.rows() != known.rows() + 1 {
        return Err(Error::validation(format!(
            "victim embedding has {} rows, expected {} (known members + target)",
            theta.rows(),
            known.rows() + 1
        )));
    }
    if public.rows() < 2 {
        return Err(Error::validation(format!(
            "public pool needs at least 2 records for a train/validation split, got {}",
            public.rows()
        )));
    }
    let mut order: Vec<usize> = (0..public.rows()).collect();
    SeededRng::new(child_seed(setup.seed, 1)).shuffle(&mut order);
    let n_train = ((public.rows() as f64 * setup.train_fraction).round() as usize).clamp(1, public.rows() - 1);
    let shadow_seed = child_seed(setup.seed, 0);
    let train_set = build_shadow_set(
        known,
        &public.select_rows(&order[..n_train]),
        &setup.reducer,
        child_seed(shadow_seed, 0),
    )?;
    let val_set = build_shadow_set(
        known,
        &public.select_rows(&order[n_train..]),
        &setup.reducer,
        child_seed(shadow_seed, 1),
    )?;
    let mut net = setup.net.clone();
    net.seed = child_seed(setup.seed, 2);
    let model = AttackModel::train(&train_set, &val_set, &net)?;
    let reconstruction = model.reconstruct(theta)?;
    Ok(AttackOutcome { reconstruction, model })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::datasets::synth_digits;
    use crate::reducers::fit;
    use crate::shadow::with_target_last;

    fn small_net() -> NetConfig {
        let mut net = NetConfig::new(2, 1);
        net.mlp_hidden = vec![32];
        net.lr = 1e-3;
        net.max_epochs = 5;
        net
    }

    #[test]
    fn pipeline_smoke() {
        let data = synth_digits(111, 2).unwrap().data;
        let known = data.select_rows(&(0..9).collect::<Vec<_>>());
        let victim = data.row(9).to_vec();
        let public = data.select_rows(&(11..111).collect::<Vec<_>>());
        let reducer = ReducerConfig::new(Method::Pca, 0);
        let theta = fit(&with_target_last(&known, &victim).unwrap(), &reducer)
            .unwrap()
            .coords;
        let out = run_attack(&theta, &known, &public, &AttackSetup::new(reducer, small_net(), 4)).unwrap();
        assert_eq!(out.reconstruction.len(), 64);
        assert!(out.reconstruction.iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn inference_is_pure() {
        let data = synth_digits(40, 6).unwrap().data;
        let known = data.select_rows(&(0..5).collect::<Vec<_>>());
        let reducer = ReducerConfig::new(Method::Srp, 0);
        let train_set = build_shadow_set(&known, &data.select_rows(&(5..30).collect::<Vec<_>>()), &reducer, 1).unwrap();
        let val_set = build_shadow_set(&known, &data.select_rows(&(30..40).collect::<Vec<_>>()), &reducer, 2).unwrap();
        let model = AttackModel::train(&train_set, &val_set, &small_net()).unwrap();
        let all = model.reconstruct_set(&train_set).unwrap();
        for j in [0, 7, 24] {
            let flat: Vec<f64> = train_set.embedding(j).iter().map(|&v| v as f64).collect();
            let one = model
                .reconstruct_flat(&Matrix::from_vec(1, flat.len(), flat).unwrap())
                .unwrap();
            assert_eq!(one.row(0), all.row(j));
        }
    }

    #[test]
    fn victim_shape_is_checked() {
        let data = synth_digits(20, 0).unwrap().data;
        let known = data.select_rows(&[0, 1, 2]);
        let public = data.select_rows(&(3..20).collect::<Vec<_>>());
        let setup = AttackSetup::new(ReducerConfig::new(Method::Pca, 0), small_net(), 0);
        let err = run_attack(&Matrix::zeros(3, 2), &known, &public, &setup).unwrap_err();
        assert!(matches!(err, Error::Validation(_)));
    }
}
