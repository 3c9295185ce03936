//! Loss, hand-derived reverse-mode gradients, finite-difference verification,
//! Adam, early stopping, and fold-level training.
//!
//! The gradients here are written out analytically layer by layer rather than
//! taped; `grad_check` compares every one of them against central finite
//! differences and is the module's correctness anchor.

use std::io::Write;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::dataio::{stratified_holdout, Corpus, DataError};
use crate::eval::{compute_metrics, EvalError, MetricsReport};
use crate::features::{build_vocabulary, featurize_event, FeatureError, Vocabulary};
use crate::graph::{
    build_adjacency, drop_edge, ClassLabel, GraphError, LabelArity, PropagationEvent,
};
use crate::model::{
    forward, init_params, EventGraphs, ForwardCache, Mode, ModelConfig, ModelError, ModelParams,
};
use crate::numerics::{matmul, spmm, DenseMatrix, NumericsError};

/// Gradients are shaped exactly like the parameters they belong to.
pub type Gradients = ModelParams;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("label {0:?} is outside the configured label space")]
    LabelOutsideArity(ClassLabel),
    #[error("{0} set must not be empty")]
    EmptySet(&'static str),
    #[error("classifier is configured for {num_classes} classes; only 2 or 4 are supported")]
    UnsupportedClassCount { num_classes: usize },
    #[error("classifier is configured for {config} classes but the corpus has {corpus}")]
    ArityMismatch { config: usize, corpus: usize },
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("corpus has {events} events, fewer than {folds} folds")]
    CorpusSmallerThanFolds { events: usize, folds: usize },
    #[error("invalid loss configuration: {0}")]
    BadLossConfig(String),
}

/// Optimizer and schedule hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct LossConfig {
    pub l2_lambda: f64,
    pub learning_rate: f64,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    /// Events accumulated per optimizer step; 1 means per-event updates.
    pub accumulate: usize,
}

impl Default for LossConfig {
    fn default() -> Self {
        LossConfig {
            l2_lambda: 1e-4,
            learning_rate: 5e-4,
            adam_beta1: 0.9,
            adam_beta2: 0.999,
            adam_epsilon: 1e-8,
            max_epochs: 200,
            patience: 10,
            accumulate: 1,
        }
    }
}

impl LossConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.l2_lambda < 0.0 {
            return Err(TrainError::BadLossConfig(
                "l2 weight must be nonnegative".into(),
            ));
        }
        if self.learning_rate <= 0.0 {
            return Err(TrainError::BadLossConfig(
                "learning rate must be positive".into(),
            ));
        }
        if !(0.0..1.0).contains(&self.adam_beta1) || !(0.0..1.0).contains(&self.adam_beta2) {
            return Err(TrainError::BadLossConfig(
                "Adam betas must be in [0, 1)".into(),
            ));
        }
        if self.adam_epsilon <= 0.0 {
            return Err(TrainError::BadLossConfig(
                "Adam epsilon must be positive".into(),
            ));
        }
        if self.max_epochs == 0 || self.patience == 0 {
            return Err(TrainError::BadLossConfig(
                "epochs and patience must be at least 1".into(),
            ));
        }
        if self.accumulate == 0 {
            return Err(TrainError::BadLossConfig(
                "accumulation count must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Label space for a class count; only the 2- and 4-class tasks exist.
pub fn arity_for(num_classes: usize) -> Result<LabelArity, TrainError> {
    match num_classes {
        2 => Ok(LabelArity::Two),
        4 => Ok(LabelArity::Four),
        _ => Err(TrainError::UnsupportedClassCount { num_classes }),
    }
}

/// Cross-entropy against the true label plus `l2` times the sum of squared
/// parameter entries, biases included. A zero probability at the label is
/// clamped to 1e-12 before the log.
pub fn loss(
    probs: &DenseMatrix,
    label: ClassLabel,
    arity: LabelArity,
    params: &ModelParams,
    l2: f64,
) -> Result<f64, TrainError> {
    let idx = arity
        .index_of(label)
        .ok_or(TrainError::LabelOutsideArity(label))?;
    let p = probs.get(0, idx).max(1e-12);
    Ok(-p.ln() + l2 * params.sum_of_squares())
}

fn relu_gate(grad: &DenseMatrix, pre_activation: &DenseMatrix) -> DenseMatrix {
    let mut out = grad.clone();
    for (g, z) in out.data_mut().iter_mut().zip(pre_activation.data()) {
        if *z <= 0.0 {
            *g = 0.0;
        }
    }
    out
}

/// Exact gradients of [`loss`] with respect to every parameter matrix, using
/// the intermediates cached by a matching `forward` call.
pub fn backward(
    cache: &ForwardCache,
    label: ClassLabel,
    params: &ModelParams,
    l2: f64,
) -> Result<Gradients, TrainError> {
    let config = &cache.config;
    let arity = arity_for(config.num_classes)?;
    let idx = arity
        .index_of(label)
        .ok_or(TrainError::LabelOutsideArity(label))?;
    if cache.s.cols() != params.fc_weight.rows() || cache.probs.cols() != params.fc_weight.cols() {
        return Err(TrainError::Model(ModelError::Config(
            "cache does not match these parameters".into(),
        )));
    }

    let mut grads = params.zeros_like();

    // Softmax + cross-entropy collapse to probs - onehot at the logits.
    let mut d_logits = cache.probs.clone();
    d_logits.set(0, idx, d_logits.get(0, idx) - 1.0);

    grads.fc_weight = matmul(&cache.s.transpose(), &d_logits)?;
    grads.fc_bias = d_logits.clone();
    let d_s = matmul(&d_logits, &params.fc_weight.transpose())?;

    let width = config.pooled_width();
    for (b, branch) in cache.branches.iter().enumerate() {
        let n = branch.z1.rows();
        let d_s_branch = d_s.col_slice(b * width, (b + 1) * width);

        // Mean pooling spreads the pooled gradient evenly over the rows.
        let scale = 1.0 / n as f64;
        let mut d_h2_tilde = DenseMatrix::zeros(n, width);
        for r in 0..n {
            for c in 0..width {
                d_h2_tilde.set(r, c, d_s_branch.get(0, c) * scale);
            }
        }

        // Split the concat gradient: H2 block, then the tiled root block,
        // whose gradient sums over all rows into row 0 of H1.
        let (d_h2, root_grad_into_h1) = if config.root_enhancement {
            let d_h2 = d_h2_tilde.col_slice(0, config.v2);
            let d_tile = d_h2_tilde.col_slice(config.v2, width);
            let mut summed = vec![0.0; config.v1];
            for r in 0..n {
                for (c, s) in summed.iter_mut().enumerate() {
                    *s += d_tile.get(r, c);
                }
            }
            (d_h2, Some(summed))
        } else {
            (d_h2_tilde, None)
        };

        let d_h2 = match &branch.mask2 {
            Some(mask) => d_h2.hadamard(mask)?,
            None => d_h2,
        };
        let d_z2 = relu_gate(&d_h2, &branch.z2);

        let (w1, is_td_slot) = match branch.direction {
            crate::graph::Direction::BottomUp => (&params.w1_bu, false),
            _ => (&params.w1_td, true),
        };
        let d_w1 = matmul(&branch.p2.transpose(), &d_z2)?;
        let d_h1_tilde = spmm(&branch.a_hat.transpose(), &matmul(&d_z2, &w1.transpose())?)?;

        let mut d_h1 = if config.root_enhancement {
            d_h1_tilde.col_slice(0, config.v1)
        } else {
            d_h1_tilde
        };
        if let Some(summed) = root_grad_into_h1 {
            for (c, s) in summed.iter().enumerate() {
                d_h1.set(0, c, d_h1.get(0, c) + s);
            }
        }

        let d_h1 = match &branch.mask1 {
            Some(mask) => d_h1.hadamard(mask)?,
            None => d_h1,
        };
        let d_z1 = relu_gate(&d_h1, &branch.z1);
        let d_w0 = matmul(&branch.p1.transpose(), &d_z1)?;

        if is_td_slot {
            grads.w0_td.add_assign(&d_w0)?;
            grads.w1_td.add_assign(&d_w1)?;
        } else {
            grads.w0_bu.add_assign(&d_w0)?;
            grads.w1_bu.add_assign(&d_w1)?;
        }
    }

    // d/dw of l2 * sum(w^2) = 2 * l2 * w, applied to every matrix.
    if l2 != 0.0 {
        for ((_, g), (_, p)) in grads.matrices_mut().into_iter().zip(params.matrices()) {
            for (gv, pv) in g.data_mut().iter_mut().zip(p.data()) {
                *gv += 2.0 * l2 * pv;
            }
        }
    }

    Ok(grads)
}

// ---------------------------------------------------------------------------
// Finite-difference verification
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct GradCheckSettings {
    pub epsilon: f64,
    pub feature_dim: usize,
    pub l2: f64,
    pub seed: u64,
    /// Cap on entries checked per run (seeded sample); 0 checks everything.
    pub max_entries: usize,
    /// Sanity switch: keep dropout on and resample it per evaluation, which
    /// must break the oracle.
    pub force_dropout: bool,
}

impl Default for GradCheckSettings {
    fn default() -> Self {
        GradCheckSettings {
            epsilon: 1e-5,
            feature_dim: 12,
            l2: 1e-4,
            seed: 0,
            max_entries: 0,
            force_dropout: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MatrixCheck {
    pub name: &'static str,
    pub entries_checked: usize,
    pub max_rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    pub per_matrix: Vec<MatrixCheck>,
    pub entries_checked: usize,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn passes(&self, threshold: f64) -> bool {
        self.max_rel_error < threshold
    }
}

/// Compare analytic gradients against central finite differences on a small
/// instance built from `event`, with stochastic layers forced off (unless
/// `force_dropout` deliberately re-enables them). Relative error uses
/// `max(|analytic|, |numeric|, 1e-8)` as the denominator.
pub fn grad_check(
    event: &PropagationEvent,
    config: &ModelConfig,
    settings: &GradCheckSettings,
) -> Result<GradCheckReport, TrainError> {
    let mut config = config.clone();
    if settings.force_dropout {
        if config.dropout_rate == 0.0 {
            config.dropout_rate = 0.5;
        }
    } else {
        config.dropout_rate = 0.0;
    }
    let arity = arity_for(config.num_classes)?;
    if arity.index_of(event.label).is_none() {
        return Err(TrainError::LabelOutsideArity(event.label));
    }

    let n = event.num_posts();
    let d = settings.feature_dim.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let x = DenseMatrix::new(n, d, (0..n * d).map(|_| rng.random::<f64>()).collect())
        .expect("dimensions are consistent");

    let adjacency = build_adjacency(event)?;
    let graphs = EventGraphs::prepare(&adjacency, config.variant)?;
    let mut params = init_params(&config, d, settings.seed.wrapping_add(1))?;

    // Stochasticity knob: a fresh mask per forward emulates the "dropout left
    // on by accident" failure the harness must be able to detect.
    let mut eval_counter = 0u64;
    let eval_loss = |params: &ModelParams, counter: &mut u64| -> Result<f64, TrainError> {
        let seed = if settings.force_dropout {
            *counter += 1;
            settings.seed.wrapping_add(1000 + *counter)
        } else {
            settings.seed
        };
        let (probs, _) = forward(&graphs, &x, params, &config, Mode::Train, seed)?;
        loss(&probs, event.label, arity, params, settings.l2)
    };

    let (_, cache) = forward(&graphs, &x, &params, &config, Mode::Train, settings.seed)?;
    let analytic = backward(&cache, event.label, &params, settings.l2)?;

    // Choose which flat entry indices to probe.
    let total_entries = params.num_entries();
    let probe: Vec<usize> = if settings.max_entries == 0 || settings.max_entries >= total_entries {
        (0..total_entries).collect()
    } else {
        let count = settings.max_entries.max(200.min(total_entries));
        rand::seq::index::sample(&mut rng, total_entries, count.min(total_entries)).into_vec()
    };

    let mut offsets = Vec::with_capacity(6);
    let mut acc = 0;
    for (_, m) in params.matrices() {
        offsets.push(acc);
        acc += m.rows() * m.cols();
    }

    let mut per_matrix: Vec<MatrixCheck> = params
        .matrices()
        .iter()
        .map(|(name, _)| MatrixCheck {
            name,
            entries_checked: 0,
            max_rel_error: 0.0,
        })
        .collect();

    let eps = settings.epsilon;
    for flat in probe {
        let matrix_idx = match offsets.binary_search(&flat) {
            Ok(i) => i,
            Err(i) => i - 1,
        };
        let inner = flat - offsets[matrix_idx];

        let original = {
            let mats = params.matrices();
            mats[matrix_idx].1.data()[inner]
        };
        params.matrices_mut()[matrix_idx].1.data_mut()[inner] = original + eps;
        let plus = eval_loss(&params, &mut eval_counter)?;
        params.matrices_mut()[matrix_idx].1.data_mut()[inner] = original - eps;
        let minus = eval_loss(&params, &mut eval_counter)?;
        params.matrices_mut()[matrix_idx].1.data_mut()[inner] = original;

        let numeric = (plus - minus) / (2.0 * eps);
        let analytic_v = analytic.matrices()[matrix_idx].1.data()[inner];
        let denom = analytic_v.abs().max(numeric.abs()).max(1e-8);
        let rel = (analytic_v - numeric).abs() / denom;

        let entry = &mut per_matrix[matrix_idx];
        entry.entries_checked += 1;
        if rel > entry.max_rel_error {
            entry.max_rel_error = rel;
        }
    }

    let entries_checked = per_matrix.iter().map(|m| m.entries_checked).sum();
    let max_rel_error = per_matrix
        .iter()
        .map(|m| m.max_rel_error)
        .fold(0.0, f64::max);
    Ok(GradCheckReport {
        per_matrix,
        entries_checked,
        max_rel_error,
    })
}

// ---------------------------------------------------------------------------
// Adam
// ---------------------------------------------------------------------------

/// First/second moment accumulators shaped like the parameters.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub first_moment: ModelParams,
    pub second_moment: ModelParams,
    pub step: u64,
}

impl AdamState {
    pub fn new(params: &ModelParams) -> AdamState {
        AdamState {
            first_moment: params.zeros_like(),
            second_moment: params.zeros_like(),
            step: 0,
        }
    }
}

/// Standard bias-corrected Adam update, applied entrywise in place.
pub fn adam_step(
    params: &mut ModelParams,
    grads: &Gradients,
    state: &mut AdamState,
    cfg: &LossConfig,
) -> Result<(), TrainError> {
    state.step += 1;
    let t = state.step as i32;
    let correction1 = 1.0 - cfg.adam_beta1.powi(t);
    let correction2 = 1.0 - cfg.adam_beta2.powi(t);

    for ((((_, p), (name, g)), (_, m)), (_, v)) in params
        .matrices_mut()
        .into_iter()
        .zip(grads.matrices())
        .zip(state.first_moment.matrices_mut())
        .zip(state.second_moment.matrices_mut())
    {
        if p.rows() != g.rows() || p.cols() != g.cols() {
            return Err(TrainError::Model(ModelError::ParamShape {
                name,
                got_rows: g.rows(),
                got_cols: g.cols(),
                want_rows: p.rows(),
                want_cols: p.cols(),
            }));
        }
        for (((pv, &gv), mv), vv) in p
            .data_mut()
            .iter_mut()
            .zip(g.data())
            .zip(m.data_mut().iter_mut())
            .zip(v.data_mut().iter_mut())
        {
            *mv = cfg.adam_beta1 * *mv + (1.0 - cfg.adam_beta1) * gv;
            *vv = cfg.adam_beta2 * *vv + (1.0 - cfg.adam_beta2) * gv * gv;
            let m_hat = *mv / correction1;
            let v_hat = *vv / correction2;
            *pv -= cfg.learning_rate * m_hat / (v_hat.sqrt() + cfg.adam_epsilon);
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Early stopping
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopDecision {
    Improved,
    Continue,
    Stop,
}

/// Tracks the best validation loss; stops after `patience` consecutive epochs
/// without a strict improvement.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    patience: usize,
    best: Option<(usize, f64)>,
    stale: usize,
}

impl EarlyStopping {
    pub fn new(patience: usize) -> EarlyStopping {
        EarlyStopping {
            patience,
            best: None,
            stale: 0,
        }
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64) -> StopDecision {
        match self.best {
            Some((_, best)) if val_loss >= best => {
                self.stale += 1;
                if self.stale >= self.patience {
                    StopDecision::Stop
                } else {
                    StopDecision::Continue
                }
            }
            _ => {
                self.best = Some((epoch, val_loss));
                self.stale = 0;
                StopDecision::Improved
            }
        }
    }

    pub fn best(&self) -> Option<(usize, f64)> {
        self.best
    }
}

// ---------------------------------------------------------------------------
// Fold training
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_acc: f64,
}

/// Write history as `epoch,train_loss,val_loss,val_acc` with 6 decimals.
pub fn write_history_csv(history: &[EpochStats], mut w: impl Write) -> std::io::Result<()> {
    writeln!(w, "epoch,train_loss,val_loss,val_acc")?;
    for row in history {
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6}",
            row.epoch, row.train_loss, row.val_loss, row.val_acc
        )?;
    }
    Ok(())
}

/// Deterministically derive an independent stream seed (splitmix64).
pub fn derive_seed(base: u64, stream: u64) -> u64 {
    let mut z = base ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

struct PreparedEvent {
    x: DenseMatrix,
    adjacency: crate::numerics::SparseMatrix,
    eval_graphs: EventGraphs,
    label: ClassLabel,
}

fn prepare_events(
    events: &[PropagationEvent],
    vocab: &Vocabulary,
    config: &ModelConfig,
) -> Result<Vec<PreparedEvent>, TrainError> {
    events
        .iter()
        .map(|event| {
            let adjacency = build_adjacency(event)?;
            let eval_graphs = EventGraphs::prepare(&adjacency, config.variant)?;
            Ok(PreparedEvent {
                x: featurize_event(event, vocab),
                adjacency,
                eval_graphs,
                label: event.label,
            })
        })
        .collect()
}

fn validation_pass(
    prepared: &[PreparedEvent],
    params: &ModelParams,
    config: &ModelConfig,
    arity: LabelArity,
) -> Result<(f64, f64), TrainError> {
    let mut total_loss = 0.0;
    let mut correct = 0usize;
    for ev in prepared {
        let (probs, _) = forward(&ev.eval_graphs, &ev.x, params, config, Mode::Eval, 0)?;
        total_loss += loss(&probs, ev.label, arity, params, 0.0)?;
        let mut best = 0;
        for c in 1..probs.cols() {
            if probs.get(0, c) > probs.get(0, best) {
                best = c;
            }
        }
        if Some(best) == arity.index_of(ev.label) {
            correct += 1;
        }
    }
    let n = prepared.len() as f64;
    Ok((total_loss / n, correct as f64 / n))
}

/// Train on `train_events`, early-stop on `val_events`, and return the
/// parameters from the best-validation epoch plus the per-epoch history.
///
/// Per epoch: seeded shuffle, then per event one DropEdge sample, a train-mode
/// forward, backprop, and an Adam step; DropEdge and dropout are off for the
/// validation pass.
pub fn train_fold(
    train_events: &[PropagationEvent],
    val_events: &[PropagationEvent],
    vocab: &Vocabulary,
    config: &ModelConfig,
    loss_cfg: &LossConfig,
    seed: u64,
) -> Result<(ModelParams, Vec<EpochStats>), TrainError> {
    if train_events.is_empty() {
        return Err(TrainError::EmptySet("train"));
    }
    if val_events.is_empty() {
        return Err(TrainError::EmptySet("validation"));
    }
    config.validate()?;
    loss_cfg.validate()?;
    let arity = arity_for(config.num_classes)?;

    let train = prepare_events(train_events, vocab, config)?;
    let val = prepare_events(val_events, vocab, config)?;

    let mut params = init_params(config, vocab.size().max(1), derive_seed(seed, 0))?;
    let mut adam = AdamState::new(&params);
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, 1));
    let mut stopper = EarlyStopping::new(loss_cfg.patience);

    let mut best_params = params.clone();
    let mut history = Vec::new();
    let mut order: Vec<usize> = (0..train.len()).collect();

    for epoch in 1..=loss_cfg.max_epochs {
        order.shuffle(&mut rng);
        let mut epoch_loss = 0.0;
        let mut pending: Option<Gradients> = None;
        let mut pending_count = 0usize;
        for &idx in &order {
            let ev = &train[idx];
            let dropedge_seed = rng.random::<u64>();
            let dropout_seed = rng.random::<u64>();
            let graphs = if config.dropedge_rate > 0.0 {
                let dropped = drop_edge(&ev.adjacency, config.dropedge_rate, dropedge_seed);
                EventGraphs::prepare(&dropped, config.variant)?
            } else {
                ev.eval_graphs.clone()
            };
            let (probs, cache) =
                forward(&graphs, &ev.x, &params, config, Mode::Train, dropout_seed)?;
            epoch_loss += loss(&probs, ev.label, arity, &params, loss_cfg.l2_lambda)?;
            let grads = backward(&cache, ev.label, &params, loss_cfg.l2_lambda)?;

            match pending.as_mut() {
                None => pending = Some(grads),
                Some(acc) => {
                    for ((_, a), (_, g)) in acc.matrices_mut().into_iter().zip(grads.matrices()) {
                        a.add_assign(g)?;
                    }
                }
            }
            pending_count += 1;
            if pending_count == loss_cfg.accumulate {
                let mut acc = pending.take().expect("accumulated gradients present");
                if pending_count > 1 {
                    let inv = 1.0 / pending_count as f64;
                    for (_, g) in acc.matrices_mut() {
                        for v in g.data_mut() {
                            *v *= inv;
                        }
                    }
                }
                adam_step(&mut params, &acc, &mut adam, loss_cfg)?;
                pending_count = 0;
            }
        }
        if let Some(mut acc) = pending.take() {
            let inv = 1.0 / pending_count as f64;
            for (_, g) in acc.matrices_mut() {
                for v in g.data_mut() {
                    *v *= inv;
                }
            }
            adam_step(&mut params, &acc, &mut adam, loss_cfg)?;
        }

        let (val_loss, val_acc) = validation_pass(&val, &params, config, arity)?;
        history.push(EpochStats {
            epoch,
            train_loss: epoch_loss / train.len() as f64,
            val_loss,
            val_acc,
        });

        match stopper.observe(epoch, val_loss) {
            StopDecision::Improved => best_params = params.clone(),
            StopDecision::Continue => {}
            StopDecision::Stop => break,
        }
    }

    Ok((best_params, history))
}

// ---------------------------------------------------------------------------
// Cross-validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct CvSettings {
    pub folds: usize,
    pub seed: u64,
    /// Vocabulary cap (the classic choice is 5000).
    pub vocab_k: usize,
    /// Fit the vocabulary on the whole corpus instead of per fold.
    pub vocab_full_corpus: bool,
    /// Fraction of each fold's training portion held out for early stopping.
    pub val_fraction: f64,
}

impl Default for CvSettings {
    fn default() -> Self {
        CvSettings {
            folds: 5,
            seed: 0,
            vocab_k: 5000,
            vocab_full_corpus: false,
            val_fraction: 0.1,
        }
    }
}

#[derive(Debug)]
pub struct FoldOutcome {
    pub fold: usize,
    pub params: ModelParams,
    pub vocab: Vocabulary,
    pub history: Vec<EpochStats>,
    pub best_val_loss: f64,
    pub metrics: MetricsReport,
}

#[derive(Debug)]
pub struct CvResult {
    pub folds: Vec<FoldOutcome>,
    pub mean_accuracy: f64,
    pub stratified: bool,
}

/// Seeded, stratified k-fold cross-validation: each part serves once as the
/// evaluation set while a held-out slice of the remainder drives early
/// stopping. Metrics come from the best-validation parameters of each fold.
pub fn cross_validate(
    corpus: &Corpus,
    config: &ModelConfig,
    loss_cfg: &LossConfig,
    settings: &CvSettings,
) -> Result<CvResult, TrainError> {
    if settings.folds < 2 {
        return Err(TrainError::TooFewFolds(settings.folds));
    }
    if corpus.events.len() < settings.folds {
        return Err(TrainError::CorpusSmallerThanFolds {
            events: corpus.events.len(),
            folds: settings.folds,
        });
    }
    let arity = corpus.label_arity;
    if config.num_classes != arity.num_classes() {
        return Err(TrainError::ArityMismatch {
            config: config.num_classes,
            corpus: arity.num_classes(),
        });
    }

    let assignment =
        crate::dataio::split_folds(corpus, settings.folds, derive_seed(settings.seed, 100))?;
    let full_vocab = if settings.vocab_full_corpus {
        Some(build_vocabulary(&corpus.events, settings.vocab_k)?)
    } else {
        None
    };

    let mut folds = Vec::with_capacity(settings.folds);
    let mut accuracy_sum = 0.0;
    for (fold, test_idx) in assignment.folds.iter().enumerate() {
        let test_set: Vec<PropagationEvent> =
            test_idx.iter().map(|&i| corpus.events[i].clone()).collect();
        let mut remain_idx: Vec<usize> = (0..corpus.events.len())
            .filter(|i| !test_idx.contains(i))
            .collect();
        remain_idx.sort_unstable();

        let labels: Vec<ClassLabel> = remain_idx.iter().map(|&i| corpus.events[i].label).collect();
        let (train_pos, val_pos) = stratified_holdout(
            &labels,
            settings.val_fraction,
            derive_seed(settings.seed, 200 + fold as u64),
        );
        let train_set: Vec<PropagationEvent> = train_pos
            .iter()
            .map(|&p| corpus.events[remain_idx[p]].clone())
            .collect();
        let val_set: Vec<PropagationEvent> = val_pos
            .iter()
            .map(|&p| corpus.events[remain_idx[p]].clone())
            .collect();

        let vocab = match &full_vocab {
            Some(v) => v.clone(),
            None => {
                let fit_on: Vec<PropagationEvent> = remain_idx
                    .iter()
                    .map(|&i| corpus.events[i].clone())
                    .collect();
                build_vocabulary(&fit_on, settings.vocab_k)?
            }
        };

        let fold_seed = derive_seed(settings.seed, 300 + fold as u64);
        let (params, history) =
            train_fold(&train_set, &val_set, &vocab, config, loss_cfg, fold_seed)?;
        let best_val_loss = history
            .iter()
            .map(|h| h.val_loss)
            .fold(f64::INFINITY, f64::min);

        let mut predictions = Vec::with_capacity(test_set.len());
        let mut truths = Vec::with_capacity(test_set.len());
        for event in &test_set {
            let adjacency = build_adjacency(event)?;
            let graphs = EventGraphs::prepare(&adjacency, config.variant)?;
            let x = featurize_event(event, &vocab);
            let class = crate::model::predict(&graphs, &x, &params, config)?;
            predictions.push(arity.classes()[class]);
            truths.push(event.label);
        }
        let metrics = compute_metrics(&predictions, &truths, arity.classes())?;
        accuracy_sum += metrics.accuracy;

        folds.push(FoldOutcome {
            fold,
            params,
            vocab,
            history,
            best_val_loss,
            metrics,
        });
    }

    Ok(CvResult {
        mean_accuracy: accuracy_sum / settings.folds as f64,
        folds,
        stratified: assignment.stratified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Post;
    use crate::model::ModelVariant;

    fn tiny_event(n: usize, label: ClassLabel) -> PropagationEvent {
        let posts = (0..n)
            .map(|i| Post {
                index: i,
                delay_minutes: i as f64,
                tokens: vec![format!("w{}", i % 3)],
            })
            .collect();
        let edges = (1..n).map(|c| ((c - 1) / 2, c)).collect();
        PropagationEvent {
            id: format!("tiny{n}"),
            posts,
            edges,
            label,
        }
    }

    fn check_config(variant: ModelVariant, root: bool) -> ModelConfig {
        ModelConfig {
            variant,
            root_enhancement: root,
            v1: 4,
            v2: 4,
            num_classes: 4,
            dropout_rate: 0.5,
            dropedge_rate: 0.2,
        }
    }

    #[test]
    fn loss_perfect_prediction_is_zero() {
        let config = check_config(ModelVariant::Td, false);
        let params = init_params(&config, 3, 0).unwrap();
        let probs = DenseMatrix::from_rows(&[&[0.0, 1.0, 0.0, 0.0]]);
        let l = loss(
            &probs,
            ClassLabel::FalseRumor,
            LabelArity::Four,
            &params,
            0.0,
        )
        .unwrap();
        assert_eq!(l, 0.0);
    }

    #[test]
    fn loss_uniform_is_ln4() {
        let config = check_config(ModelVariant::Td, false);
        let params = init_params(&config, 3, 0).unwrap();
        let probs = DenseMatrix::from_rows(&[&[0.25; 4]]);
        let l = loss(
            &probs,
            ClassLabel::TrueRumor,
            LabelArity::Four,
            &params,
            0.0,
        )
        .unwrap();
        assert!((l - 4.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn loss_l2_penalty_hand_value() {
        let config = check_config(ModelVariant::Td, false);
        let mut params = init_params(&config, 3, 0).unwrap();
        for (_, m) in params.matrices_mut() {
            for v in m.data_mut() {
                *v = 0.0;
            }
        }
        params.w0_td.set(0, 0, 2.0);
        let probs = DenseMatrix::from_rows(&[&[0.0, 0.0, 1.0, 0.0]]);
        let l = loss(
            &probs,
            ClassLabel::TrueRumor,
            LabelArity::Four,
            &params,
            0.1,
        )
        .unwrap();
        assert!((l - 0.4).abs() < 1e-12);
    }

    #[test]
    fn loss_clamps_zero_probability() {
        let config = check_config(ModelVariant::Td, false);
        let params = init_params(&config, 3, 0).unwrap();
        let probs = DenseMatrix::from_rows(&[&[1.0, 0.0, 0.0, 0.0]]);
        let l = loss(
            &probs,
            ClassLabel::TrueRumor,
            LabelArity::Four,
            &params,
            0.0,
        )
        .unwrap();
        assert!(l.is_finite());
        assert!((l - (-(1e-12f64).ln())).abs() < 1e-6);
    }

    #[test]
    fn fc_bias_gradient_is_probs_minus_onehot() {
        let mut config = check_config(ModelVariant::BiGcn, true);
        config.dropout_rate = 0.0;
        let event = tiny_event(5, ClassLabel::FalseRumor);
        let adjacency = build_adjacency(&event).unwrap();
        let graphs = EventGraphs::prepare(&adjacency, config.variant).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = 6;
        let x = DenseMatrix::new(5, d, (0..5 * d).map(|_| rng.random::<f64>()).collect()).unwrap();
        let params = init_params(&config, d, 2).unwrap();
        let (probs, cache) = forward(&graphs, &x, &params, &config, Mode::Eval, 0).unwrap();
        let grads = backward(&cache, event.label, &params, 0.0).unwrap();
        let label_idx = LabelArity::Four.index_of(event.label).unwrap();
        for c in 0..4 {
            let want = probs.get(0, c) - if c == label_idx { 1.0 } else { 0.0 };
            assert!((grads.fc_bias.get(0, c) - want).abs() < 1e-12);
        }
    }

    #[test]
    fn gradients_vanish_on_a_confident_correct_prediction() {
        // Force the softmax to saturate on the true label through the bias.
        let mut config = check_config(ModelVariant::Td, true);
        config.dropout_rate = 0.0;
        let event = tiny_event(3, ClassLabel::NonRumor);
        let adjacency = build_adjacency(&event).unwrap();
        let graphs = EventGraphs::prepare(&adjacency, config.variant).unwrap();
        let d = 4;
        let x = DenseMatrix::zeros(3, d);
        let mut params = init_params(&config, d, 3).unwrap();
        params.fc_bias.set(0, 0, 60.0);
        let (probs, cache) = forward(&graphs, &x, &params, &config, Mode::Eval, 0).unwrap();
        assert!(probs.get(0, 0) > 1.0 - 1e-12);
        let grads = backward(&cache, event.label, &params, 0.0).unwrap();
        for (_, g) in grads.matrices() {
            assert!(g.data().iter().all(|v| v.abs() < 1e-9));
        }
    }

    #[test]
    fn grad_check_all_variant_combinations() {
        let event = tiny_event(6, ClassLabel::TrueRumor);
        let settings = GradCheckSettings::default();
        for variant in [
            ModelVariant::BiGcn,
            ModelVariant::Ud,
            ModelVariant::Td,
            ModelVariant::Bu,
        ] {
            for root in [true, false] {
                let config = check_config(variant, root);
                let report = grad_check(&event, &config, &settings).unwrap();
                assert!(
                    report.passes(1e-4),
                    "{variant:?} root={root}: max rel err {}",
                    report.max_rel_error
                );
            }
        }
    }

    #[test]
    fn grad_check_detects_forced_dropout() {
        let event = tiny_event(6, ClassLabel::TrueRumor);
        let settings = GradCheckSettings {
            force_dropout: true,
            ..GradCheckSettings::default()
        };
        let config = check_config(ModelVariant::BiGcn, true);
        let report = grad_check(&event, &config, &settings).unwrap();
        assert!(
            !report.passes(1e-4),
            "stochastic forward must break the oracle"
        );
    }

    #[test]
    fn adam_zero_gradient_from_fresh_state_keeps_params() {
        let config = check_config(ModelVariant::Td, false);
        let mut params = init_params(&config, 3, 4).unwrap();
        let before = params.clone();
        let grads = params.zeros_like();
        let mut state = AdamState::new(&params);
        adam_step(&mut params, &grads, &mut state, &LossConfig::default()).unwrap();
        assert_eq!(params, before);
        assert_eq!(state.step, 1);
    }

    #[test]
    fn adam_first_step_has_learning_rate_magnitude() {
        let cfg = LossConfig {
            learning_rate: 0.01,
            ..LossConfig::default()
        };
        let config = check_config(ModelVariant::Td, false);
        let mut params = init_params(&config, 3, 5).unwrap();
        let before = params.clone();
        let mut grads = params.zeros_like();
        grads.w0_td.set(0, 0, 0.7);
        grads.w0_td.set(1, 1, -2.5);
        let mut state = AdamState::new(&params);
        adam_step(&mut params, &grads, &mut state, &cfg).unwrap();
        let d00 = params.w0_td.get(0, 0) - before.w0_td.get(0, 0);
        let d11 = params.w0_td.get(1, 1) - before.w0_td.get(1, 1);
        assert!((d00 + cfg.learning_rate).abs() < 1e-6);
        assert!((d11 - cfg.learning_rate).abs() < 1e-6);
        // Untouched entries stay put.
        assert_eq!(params.w0_td.get(0, 1), before.w0_td.get(0, 1));
    }

    #[test]
    fn early_stopping_trace_from_contract() {
        let losses = [
            5.0, 4.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0, 3.0,
        ];
        let mut stopper = EarlyStopping::new(10);
        let mut stopped_at = None;
        for (i, &l) in losses.iter().enumerate() {
            let epoch = i + 1;
            if stopper.observe(epoch, l) == StopDecision::Stop {
                stopped_at = Some(epoch);
                break;
            }
        }
        assert_eq!(stopped_at, Some(13));
        assert_eq!(stopper.best(), Some((3, 3.0)));
    }

    #[test]
    fn early_stopping_resets_on_improvement() {
        let mut stopper = EarlyStopping::new(3);
        assert_eq!(stopper.observe(1, 5.0), StopDecision::Improved);
        assert_eq!(stopper.observe(2, 6.0), StopDecision::Continue);
        assert_eq!(stopper.observe(3, 6.0), StopDecision::Continue);
        assert_eq!(stopper.observe(4, 4.0), StopDecision::Improved);
        assert_eq!(stopper.observe(5, 4.5), StopDecision::Continue);
        assert_eq!(stopper.observe(6, 4.5), StopDecision::Continue);
        assert_eq!(stopper.observe(7, 4.5), StopDecision::Stop);
    }

    #[test]
    fn history_csv_format() {
        let history = vec![EpochStats {
            epoch: 1,
            train_loss: 1.23456789,
            val_loss: 0.5,
            val_acc: 0.75,
        }];
        let mut buf = Vec::new();
        write_history_csv(&history, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "epoch,train_loss,val_loss,val_acc\n1,1.234568,0.500000,0.750000\n"
        );
    }

    #[test]
    fn train_fold_is_deterministic_and_loss_decreases() {
        let mut config = check_config(ModelVariant::BiGcn, true);
        config.num_classes = 2;
        config.v1 = 8;
        config.v2 = 8;
        let loss_cfg = LossConfig {
            max_epochs: 20,
            patience: 20,
            ..LossConfig::default()
        };
        // Two clearly separable classes.
        let mut events = Vec::new();
        for i in 0..8 {
            let mut ev = tiny_event(4, ClassLabel::FalseRumor);
            ev.id = format!("f{i}");
            for post in &mut ev.posts {
                post.tokens = vec!["falsehood".into(), format!("noise{i}")];
            }
            events.push(ev);
            let mut ev = tiny_event(4, ClassLabel::TrueRumor);
            ev.id = format!("t{i}");
            for post in &mut ev.posts {
                post.tokens = vec!["confirmed".into(), format!("noise{i}")];
            }
            events.push(ev);
        }
        let vocab = build_vocabulary(&events, 50).unwrap();
        let (train, val) = events.split_at(12);

        let (params_a, history_a) = train_fold(train, val, &vocab, &config, &loss_cfg, 9).unwrap();
        let (params_b, history_b) = train_fold(train, val, &vocab, &config, &loss_cfg, 9).unwrap();
        assert_eq!(params_a, params_b);
        assert_eq!(history_a, history_b);

        assert!(history_a.last().unwrap().train_loss < history_a[0].train_loss);

        // The returned parameters reproduce the best recorded validation loss.
        let best = history_a
            .iter()
            .map(|h| h.val_loss)
            .fold(f64::INFINITY, f64::min);
        let arity = LabelArity::Two;
        let prepared = prepare_events(val, &vocab, &config).unwrap();
        let (val_loss, _) = validation_pass(&prepared, &params_a, &config, arity).unwrap();
        assert!((val_loss - best).abs() < 1e-9);
    }

    #[test]
    fn single_event_loss_decreases_over_twenty_epochs() {
        let mut config = check_config(ModelVariant::BiGcn, true);
        config.num_classes = 2;
        let loss_cfg = LossConfig {
            max_epochs: 20,
            patience: 20,
            ..LossConfig::default()
        };
        let event = tiny_event(5, ClassLabel::FalseRumor);
        let vocab = build_vocabulary(std::slice::from_ref(&event), 10).unwrap();
        let train = [event.clone()];
        let val = [event];
        let (_, history) = train_fold(&train, &val, &vocab, &config, &loss_cfg, 15).unwrap();
        assert_eq!(history.len(), 20);
        assert!(history[19].train_loss < history[0].train_loss);
    }

    #[test]
    fn train_fold_rejects_empty_sets() {
        let config = check_config(ModelVariant::Td, false);
        let vocab = build_vocabulary(&[tiny_event(2, ClassLabel::TrueRumor)], 5).unwrap();
        let err = train_fold(
            &[],
            &[tiny_event(2, ClassLabel::TrueRumor)],
            &vocab,
            &config,
            &LossConfig::default(),
            0,
        );
        assert!(matches!(err, Err(TrainError::EmptySet("train"))));
    }
}
