use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{
    adam_step, adjusted_r2, fit_ols, mse, r2, split, AdamMoments, EpochLoss, Estimator, Lstm, Mlp, ModelKind, Network,
    Standardizer, TrainConfig, TrainedModel, TrainingReport, MODEL_FORMAT, MODEL_VERSION,
};
use crate::windowing::SupervisedDataset;
use crate::{Error, Result};

// Distinct streams for weight initialization and minibatch shuffling.
const INIT_STREAM: u64 = 1;
const SHUFFLE_STREAM: u64 = 2;

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Minibatch Adam on mean squared error. `progress` is called after every
/// epoch with `(epoch, total)`.
pub fn fit_network<N: Network>(
    net: &mut N,
    x: ArrayView2<f64>,
    y: ArrayView1<f64>,
    x_test: ArrayView2<f64>,
    y_test: ArrayView1<f64>,
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(usize, usize),
) -> Result<Vec<EpochLoss>> {
    cfg.validate()?;
    let n = x.nrows();
    if cfg.batch_size > n {
        return Err(Error::Config(format!(
            "batch size {} exceeds {n} training samples",
            cfg.batch_size
        )));
    }
    let mut rng = rng_for(cfg.seed, SHUFFLE_STREAM);
    let mut moments = AdamMoments::zeros(net.n_params());
    let mut grad = vec![0.0; net.n_params()];
    let mut order: Vec<usize> = (0..n).collect();
    let y_test = y_test.to_vec();
    let mut step = 0u64;
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let xb = x.select(Axis(0), batch);
            let yb: Vec<f64> = batch.iter().map(|&i| y[i]).collect();
            let (loss, stats) = net.forward_backward(xb.view(), &yb, &mut grad);
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Diverged { epoch });
            }
            step += 1;
            adam_step(net.params_mut(), &grad, &mut moments, step, &cfg.adam);
            net.update_running(&stats);
            total += loss * batch.len() as f64;
        }
        let test_loss = if y_test.is_empty() {
            0.0
        } else {
            mse(&y_test, &net.predict(x_test))
        };
        if !test_loss.is_finite() {
            return Err(Error::Diverged { epoch });
        }
        history.push(EpochLoss {
            epoch,
            train_loss: total / n as f64,
            test_loss,
        });
        progress(epoch, cfg.epochs);
    }
    Ok(history)
}

/// Splits, standardizes and fits one model, then scores it on the held-out
/// samples in original target units. The report's forecast is left empty.
pub fn train(
    kind: ModelKind,
    data: &SupervisedDataset,
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(usize, usize),
) -> Result<(TrainedModel, TrainingReport)> {
    cfg.validate()?;
    let window = &data.provenance.config;
    if data.x.ncols() != window.width() {
        return Err(Error::Shape(format!(
            "dataset has {} columns but the window implies {}",
            data.x.ncols(),
            window.width()
        )));
    }
    let parts = split(&data.x, &data.y, &cfg.split)?;
    let x_scaler = Standardizer::fit(parts.x_train.view());
    let y_scaler = Standardizer::fit_vector(parts.y_train.view());
    let x_train = x_scaler.apply(parts.x_train.view());
    let y_train = y_scaler.apply_vector(parts.y_train.view());
    let x_test: Array2<f64> = x_scaler.apply(parts.x_test.view());
    let y_test = y_scaler.apply_vector(parts.y_test.view());

    let mut epochs = Vec::new();
    let estimator = match kind {
        ModelKind::Lr => {
            progress(1, 1);
            Estimator::Lr(fit_ols(x_train.view(), y_train.view()))
        }
        ModelKind::Nn => {
            let mut net = Mlp::new(window.width(), &cfg.mlp, &mut rng_for(cfg.seed, INIT_STREAM));
            epochs = fit_network(&mut net, x_train.view(), y_train.view(), x_test.view(), y_test.view(), cfg, progress)?;
            Estimator::Nn(net)
        }
        ModelKind::Lstm => {
            let p = window.features.len();
            let mut net = Lstm::new(window.lag, p, &cfg.lstm, &mut rng_for(cfg.seed, INIT_STREAM));
            epochs = fit_network(&mut net, x_train.view(), y_train.view(), x_test.view(), y_test.view(), cfg, progress)?;
            Estimator::Lstm(net)
        }
    };

    let predictions: Vec<f64> = estimator
        .predict(x_test.view())
        .into_iter()
        .map(|v| y_scaler.inverse_scalar(v))
        .collect();
    let actuals = parts.y_test.to_vec();
    let score_r2 = r2(&actuals, &predictions)?;
    let predictors = window.width();
    let adjusted = adjusted_r2(score_r2, actuals.len(), predictors).ok();
    let score = match kind {
        ModelKind::Lr => adjusted.unwrap_or(score_r2),
        _ => score_r2,
    };
    let (trainable, non_trainable) = estimator.parameter_counts();
    let rank_deficient = matches!(&estimator, Estimator::Lr(m) if m.rank_deficient());
    let report = TrainingReport {
        model: kind,
        session_id: data.provenance.session_id.clone(),
        r2: score_r2,
        adjusted_r2: adjusted,
        score,
        test_mse: mse(&actuals, &predictions),
        n_train: parts.y_train.len(),
        n_test: actuals.len(),
        predictors,
        trainable_params: trainable,
        non_trainable_params: non_trainable,
        rank_deficient,
        window: window.clone(),
        train: cfg.clone(),
        epochs,
        predictions,
        actuals,
        forecast: None,
    };
    let model = TrainedModel {
        format: MODEL_FORMAT.to_string(),
        version: MODEL_VERSION,
        window: window.clone(),
        train: cfg.clone(),
        x_scaler,
        y_scaler,
        estimator,
    };
    Ok((model, report))
}
