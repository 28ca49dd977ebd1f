use std::io::Write;

use super::net::ReconNet;
use crate::numerics::{child_seed, Matrix, SeededRng};
use crate::{Error, Result};

/// Network inputs paired with reconstruction targets, one sample per row.
#[derive(Clone, Debug, PartialEq)]
pub struct Samples {
    pub inputs: Matrix,
    pub targets: Matrix,
}

impl Samples {
    pub fn new(inputs: Matrix, targets: Matrix) -> Result<Self> {
        if inputs.rows() != targets.rows() {
            return Err(Error::validation(format!(
                "{} inputs but {} targets",
                inputs.rows(),
                targets.rows()
            )));
        }
        Ok(Samples { inputs, targets })
    }

    pub fn len(&self) -> usize {
        self.inputs.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Patience-based early stopping with zero minimum improvement.
#[derive(Clone, Debug)]
pub struct EarlyStopping {
    patience: usize,
    best: f64,
    best_epoch: usize,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> Self {
        EarlyStopping {
            patience,
            best: f64::INFINITY,
            best_epoch: 0,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        if val_loss < self.best {
            self.best = val_loss;
            self.best_epoch = epoch;
            self.stale = 0;
            return StopDecision::Improved;
        }
        self.stale += 1;
        if self.stale >= self.patience {
            StopDecision::Stop
        } else {
            StopDecision::Continue
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_loss(&self) -> f64 {
        self.best
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainReport {
    /// Training-set loss of the initial weights.
    pub initial_train_loss: f64,
    pub history: Vec<EpochRecord>,
    pub best_epoch: usize,
    pub best_val_loss: f64,
    pub stopped_early: bool,
}

impl TrainReport {
    pub fn epochs_run(&self) -> usize {
        self.history.len()
    }

    pub fn write_history_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,train_loss,val_loss")?;
        for r in &self.history {
            writeln!(out, "{},{},{}", r.epoch, r.train_loss, r.val_loss)?;
        }
        Ok(())
    }
}

/// Trains with shuffled minibatches and Adam, evaluating on `val` after each
/// epoch. On return the network holds the weights of the best validation
/// epoch.
pub fn train(net: &mut ReconNet, train_set: &Samples, val_set: &Samples) -> Result<TrainReport> {
    if train_set.is_empty() {
        return Err(Error::validation("training set is empty"));
    }
    if val_set.is_empty() {
        return Err(Error::validation("validation set is empty"));
    }
    let cfg = net.config().clone();
    for (name, s) in [("training", train_set), ("validation", val_set)] {
        if s.inputs.cols() != cfg.input_width() || s.targets.cols() != cfg.out_dim {
            return Err(Error::validation(format!(
                "{name} set has widths ({}, {}), network expects ({}, {})",
                s.inputs.cols(),
                s.targets.cols(),
                cfg.input_width(),
                cfg.out_dim
            )));
        }
    }
    let initial_train_loss = net.evaluate(&train_set.inputs, &train_set.targets)?.total;
    let mut rng = SeededRng::new(child_seed(cfg.seed, 1));
    let mut stopper = EarlyStopping::new(cfg.patience.max(1));
    let mut best_state = net.state();
    let mut history = Vec::new();
    let mut stopped_early = false;
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    for epoch in 1..=cfg.max_epochs {
        rng.shuffle(&mut order);
        let mut weighted = 0.0;
        for chunk in order.chunks(cfg.batch_size) {
            let x = train_set.inputs.select_rows(chunk);
            let y = train_set.targets.select_rows(chunk);
            weighted += net.train_step(&x, &y)?.total * chunk.len() as f64;
        }
        let train_loss = weighted / train_set.len() as f64;
        let val_loss = net.evaluate(&val_set.inputs, &val_set.targets)?.total;
        if !val_loss.is_finite() {
            return Err(Error::Numerical(format!(
                "validation loss is {val_loss} at epoch {epoch}"
            )));
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });
        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best_state = net.state(),
            StopDecision::Continue => {}
            StopDecision::Stop => {
                stopped_early = true;
                break;
            }
        }
    }
    net.load_state(&best_state)?;
    Ok(TrainReport {
        initial_train_loss,
        history,
        best_epoch: stopper.best_epoch(),
        best_val_loss: stopper.best_loss(),
        stopped_early,
    })
}

#[cfg(test)]
mod tests {
    use super::super::net::NetConfig;
    use super::*;

    fn small_config(seed: u64) -> NetConfig {
        let mut cfg = NetConfig::new(4, 6);
        cfg.mlp_hidden = vec![16];
        cfg.target_hidden = 4;
        cfg.context_hidden = 8;
        cfg.lr = 1e-3;
        cfg.batch_size = 4;
        cfg.seed = seed;
        cfg
    }

    fn samples(rows: usize, seed: u64, target: Option<f64>) -> Samples {
        let mut rng = SeededRng::new(seed);
        let x = Matrix::from_vec(rows, 8, rng.normals(rows * 8, 1.0)).unwrap();
        let y = match target {
            Some(v) => Matrix::filled(rows, 6, v),
            None => Matrix::from_vec(rows, 6, (0..rows * 6).map(|_| rng.uniform()).collect()).unwrap(),
        };
        Samples::new(x, y).unwrap()
    }

    #[test]
    fn overfits_a_single_sample() {
        let mut cfg = small_config(3);
        cfg.max_epochs = 200;
        cfg.patience = 1000;
        let data = samples(1, 9, None);
        let mut net = ReconNet::new(cfg).unwrap();
        let report = train(&mut net, &data, &data).unwrap();
        let last = report.history.last().unwrap().train_loss;
        assert!(
            last < 0.1 * report.initial_train_loss,
            "{last} vs {}",
            report.initial_train_loss
        );
    }

    #[test]
    fn early_stopping_returns_first_epoch_weights() {
        // training pulls outputs towards 10 while validation wants 0, so the
        // validation loss rises every epoch
        let mut cfg = small_config(5);
        cfg.patience = 3;
        cfg.max_epochs = 50;
        let train_set = samples(8, 1, Some(10.0));
        let val_set = Samples::new(train_set.inputs.clone(), Matrix::zeros(8, 6)).unwrap();
        let mut net = ReconNet::new(cfg.clone()).unwrap();
        let report = train(&mut net, &train_set, &val_set).unwrap();
        let vals: Vec<f64> = report.history.iter().map(|r| r.val_loss).collect();
        assert!(vals.windows(2).all(|w| w[1] > w[0]), "{vals:?}");
        assert_eq!(report.epochs_run(), 4);
        assert!(report.stopped_early);
        assert_eq!(report.best_epoch, 1);

        cfg.max_epochs = 1;
        let mut reference = ReconNet::new(cfg).unwrap();
        train(&mut reference, &train_set, &val_set).unwrap();
        assert_eq!(net.flat_state(), reference.flat_state());
    }

    #[test]
    fn returned_weights_are_never_worse_than_recorded_epochs() {
        let mut cfg = small_config(8);
        cfg.max_epochs = 30;
        cfg.patience = 5;
        let train_set = samples(20, 2, None);
        let val_set = samples(6, 3, None);
        let mut net = ReconNet::new(cfg).unwrap();
        let report = train(&mut net, &train_set, &val_set).unwrap();
        let final_val = net.evaluate(&val_set.inputs, &val_set.targets).unwrap().total;
        assert_eq!(final_val, report.best_val_loss);
        assert!(report.history.iter().all(|r| final_val <= r.val_loss));
    }

    #[test]
    fn training_is_deterministic() {
        let mut cfg = small_config(11);
        cfg.max_epochs = 10;
        let train_set = samples(12, 4, None);
        let val_set = samples(4, 5, None);
        let run = || {
            let mut net = ReconNet::new(cfg.clone()).unwrap();
            let r = train(&mut net, &train_set, &val_set).unwrap();
            (net.flat_state(), r)
        };
        let (a, ra) = run();
        let (b, rb) = run();
        assert_eq!(a, b);
        assert_eq!(ra, rb);
    }

    #[test]
    fn empty_training_set_is_rejected() {
        let mut net = ReconNet::new(small_config(0)).unwrap();
        let empty = Samples::new(Matrix::zeros(0, 8), Matrix::zeros(0, 6)).unwrap();
        let val = samples(2, 0, None);
        assert!(matches!(train(&mut net, &empty, &val), Err(Error::Validation(_))));
    }

    #[test]
    fn history_csv_header() {
        let report = TrainReport {
            initial_train_loss: 1.0,
            history: vec![EpochRecord {
                epoch: 1,
                train_loss: 0.5,
                val_loss: 0.25,
            }],
            best_epoch: 1,
            best_val_loss: 0.25,
            stopped_early: false,
        };
        let mut buf = Vec::new();
        report.write_history_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,train_loss,val_loss\n1,0.5,0.25\n"
        );
    }
}
