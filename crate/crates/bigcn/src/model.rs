//! The bi-directional GCN forward computation and its ablation variants.
//!
//! Each branch runs two graph convolutional layers over its own orientation
//! of the event graph, optionally concatenating the previous layer's root row
//! onto every node (root feature enhancement), mean-pools, and the pooled
//! branch vectors feed one affine layer plus softmax.

use std::io::{self, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::Direction;
use crate::numerics::{
    concat_cols, matmul, mean_rows, relu, softmax_row, spmm, DenseMatrix, NumericsError,
    SparseMatrix,
};

pub const PARAMS_MAGIC: [u8; 4] = *b"BGCN";
pub const PARAMS_VERSION: u8 = 1;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("parameter shapes do not match configuration: {name} is {got_rows}x{got_cols}, expected {want_rows}x{want_cols}")]
    ParamShape {
        name: &'static str,
        got_rows: usize,
        got_cols: usize,
        want_rows: usize,
        want_cols: usize,
    },
    #[error("params file: bad magic bytes {found:?}, expected {expected:?}", expected = PARAMS_MAGIC)]
    BadMagic { found: [u8; 4] },
    #[error("params file: unsupported version {0}")]
    UnsupportedVersion(u8),
    #[error("params file: truncated input")]
    Truncated,
    #[error("params file: declared matrix of {rows}x{cols} entries is implausibly large")]
    SizeOverflow { rows: u64, cols: u64 },
    #[error("params file: {0} trailing bytes after the last matrix")]
    TrailingBytes(usize),
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// Which branches the model runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ModelVariant {
    /// Top-down and bottom-up branches together.
    BiGcn,
    /// Single branch over the symmetrized graph.
    Ud,
    /// Single branch over the top-down graph.
    Td,
    /// Single branch over the bottom-up graph.
    Bu,
}

impl ModelVariant {
    /// Branch orientations in evaluation order.
    pub fn directions(self) -> &'static [Direction] {
        match self {
            ModelVariant::BiGcn => &[Direction::TopDown, Direction::BottomUp],
            ModelVariant::Ud => &[Direction::Undirected],
            ModelVariant::Td => &[Direction::TopDown],
            ModelVariant::Bu => &[Direction::BottomUp],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ModelVariant::BiGcn => "bigcn",
            ModelVariant::Ud => "ud",
            ModelVariant::Td => "td",
            ModelVariant::Bu => "bu",
        }
    }

    pub fn from_name(name: &str) -> Option<ModelVariant> {
        match name {
            "bigcn" => Some(ModelVariant::BiGcn),
            "ud" => Some(ModelVariant::Ud),
            "td" => Some(ModelVariant::Td),
            "bu" => Some(ModelVariant::Bu),
            _ => None,
        }
    }

    fn uses_td_slot(self) -> bool {
        !matches!(self, ModelVariant::Bu)
    }

    fn uses_bu_slot(self) -> bool {
        matches!(self, ModelVariant::BiGcn | ModelVariant::Bu)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub variant: ModelVariant,
    pub root_enhancement: bool,
    pub v1: usize,
    pub v2: usize,
    pub num_classes: usize,
    pub dropout_rate: f64,
    pub dropedge_rate: f64,
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), ModelError> {
        if self.v1 == 0 || self.v2 == 0 {
            return Err(ModelError::Config("hidden sizes must be at least 1".into()));
        }
        if self.num_classes < 2 {
            return Err(ModelError::Config("need at least 2 classes".into()));
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(ModelError::Config(format!(
                "dropout rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        if !(0.0..=1.0).contains(&self.dropedge_rate) {
            return Err(ModelError::Config(format!(
                "DropEdge rate must be in [0, 1], got {}",
                self.dropedge_rate
            )));
        }
        Ok(())
    }

    /// Width of the pooled vector of one branch.
    pub fn pooled_width(&self) -> usize {
        self.v2 + if self.root_enhancement { self.v1 } else { 0 }
    }

    /// Width of the classifier input.
    pub fn fc_input_width(&self) -> usize {
        self.pooled_width() * self.variant.directions().len()
    }
}

/// All trainable weights. Matrix slots unused by the active variant are 0x0.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub w0_td: DenseMatrix,
    pub w1_td: DenseMatrix,
    pub w0_bu: DenseMatrix,
    pub w1_bu: DenseMatrix,
    pub fc_weight: DenseMatrix,
    pub fc_bias: DenseMatrix,
}

pub const PARAM_NAMES: [&str; 6] = ["w0_td", "w1_td", "w0_bu", "w1_bu", "fc_weight", "fc_bias"];

impl ModelParams {
    pub fn matrices(&self) -> [(&'static str, &DenseMatrix); 6] {
        [
            ("w0_td", &self.w0_td),
            ("w1_td", &self.w1_td),
            ("w0_bu", &self.w0_bu),
            ("w1_bu", &self.w1_bu),
            ("fc_weight", &self.fc_weight),
            ("fc_bias", &self.fc_bias),
        ]
    }

    pub fn matrices_mut(&mut self) -> [(&'static str, &mut DenseMatrix); 6] {
        [
            ("w0_td", &mut self.w0_td),
            ("w1_td", &mut self.w1_td),
            ("w0_bu", &mut self.w0_bu),
            ("w1_bu", &mut self.w1_bu),
            ("fc_weight", &mut self.fc_weight),
            ("fc_bias", &mut self.fc_bias),
        ]
    }

    pub fn zeros_like(&self) -> ModelParams {
        ModelParams {
            w0_td: DenseMatrix::zeros(self.w0_td.rows(), self.w0_td.cols()),
            w1_td: DenseMatrix::zeros(self.w1_td.rows(), self.w1_td.cols()),
            w0_bu: DenseMatrix::zeros(self.w0_bu.rows(), self.w0_bu.cols()),
            w1_bu: DenseMatrix::zeros(self.w1_bu.rows(), self.w1_bu.cols()),
            fc_weight: DenseMatrix::zeros(self.fc_weight.rows(), self.fc_weight.cols()),
            fc_bias: DenseMatrix::zeros(self.fc_bias.rows(), self.fc_bias.cols()),
        }
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.matrices()
            .iter()
            .map(|(_, m)| m.sum_of_squares())
            .sum()
    }

    pub fn num_entries(&self) -> usize {
        self.matrices()
            .iter()
            .map(|(_, m)| m.rows() * m.cols())
            .sum()
    }
}

/// Shapes each parameter matrix must have for `config` on `d`-dimensional
/// features, in the order of [`PARAM_NAMES`].
pub fn expected_shapes(config: &ModelConfig, d: usize) -> [(usize, usize); 6] {
    let w1_in = config.v1 + if config.root_enhancement { d } else { 0 };
    let td = config.variant.uses_td_slot();
    let bu = config.variant.uses_bu_slot();
    let shape = |used: bool, rows: usize, cols: usize| if used { (rows, cols) } else { (0, 0) };
    [
        shape(td, d, config.v1),
        shape(td, w1_in, config.v2),
        shape(bu, d, config.v1),
        shape(bu, w1_in, config.v2),
        (config.fc_input_width(), config.num_classes),
        (1, config.num_classes),
    ]
}

/// Initialize weights uniformly in `[-1/sqrt(fan_in), +1/sqrt(fan_in)]` per
/// matrix; biases start at zero. Deterministic under the seed.
pub fn init_params(config: &ModelConfig, d: usize, seed: u64) -> Result<ModelParams, ModelError> {
    config.validate()?;
    if d == 0 {
        return Err(ModelError::Config(
            "feature dimension must be at least 1".into(),
        ));
    }
    let shapes = expected_shapes(config, d);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut init = |idx: usize, is_bias: bool| {
        let (rows, cols) = shapes[idx];
        if rows == 0 || cols == 0 || is_bias {
            return DenseMatrix::zeros(rows, cols);
        }
        let bound = 1.0 / (rows as f64).sqrt();
        let data = (0..rows * cols)
            .map(|_| rng.random_range(-bound..bound))
            .collect();
        DenseMatrix::new(rows, cols, data).expect("shape matches data length")
    };
    Ok(ModelParams {
        w0_td: init(0, false),
        w1_td: init(1, false),
        w0_bu: init(2, false),
        w1_bu: init(3, false),
        fc_weight: init(4, false),
        fc_bias: init(5, true),
    })
}

fn check_shapes(params: &ModelParams, config: &ModelConfig, d: usize) -> Result<(), ModelError> {
    let want = expected_shapes(config, d);
    for ((name, m), (rows, cols)) in params.matrices().into_iter().zip(want) {
        if m.rows() != rows || m.cols() != cols {
            return Err(ModelError::ParamShape {
                name,
                got_rows: m.rows(),
                got_cols: m.cols(),
                want_rows: rows,
                want_cols: cols,
            });
        }
    }
    Ok(())
}

/// One graph convolutional layer: `sigma(A_hat * h * w)` with ReLU when
/// `activate` is set, identity otherwise.
pub fn gcl_forward(
    a_hat: &SparseMatrix,
    h: &DenseMatrix,
    w: &DenseMatrix,
    activate: bool,
) -> Result<DenseMatrix, NumericsError> {
    let z = matmul(&spmm(a_hat, h)?, w)?;
    Ok(if activate { relu(&z) } else { z })
}

/// Concatenate `prev`'s root row (row 0), tiled over all rows, after `h`.
pub fn root_enhance(h: &DenseMatrix, prev: &DenseMatrix) -> Result<DenseMatrix, NumericsError> {
    if prev.rows() == 0 {
        return Err(NumericsError::EmptyInput { op: "root_enhance" });
    }
    let tile = tile_row(prev.row(0), h.rows());
    concat_cols(h, &tile)
}

fn tile_row(row: &[f64], rows: usize) -> DenseMatrix {
    let mut data = Vec::with_capacity(rows * row.len());
    for _ in 0..rows {
        data.extend_from_slice(row);
    }
    DenseMatrix::new(rows, row.len(), data).expect("tile dimensions are consistent")
}

/// Normalized per-branch adjacencies of one event, ready for [`forward`].
#[derive(Debug, Clone)]
pub struct EventGraphs {
    pub a_td: SparseMatrix,
    pub a_bu: SparseMatrix,
}

impl EventGraphs {
    /// Orient and normalize an already edge-dropped top-down adjacency for
    /// every branch the variant runs. Unused slots stay empty.
    pub fn prepare(
        a_td_dropped: &SparseMatrix,
        variant: ModelVariant,
    ) -> Result<EventGraphs, crate::graph::GraphError> {
        use crate::graph::{make_directional, normalize_adjacency};
        let mut td = SparseMatrix::empty(0, 0);
        let mut bu = SparseMatrix::empty(0, 0);
        for &dir in variant.directions() {
            let normalized = normalize_adjacency(&make_directional(a_td_dropped, dir))?;
            match dir {
                Direction::TopDown | Direction::Undirected => td = normalized,
                Direction::BottomUp => bu = normalized,
            }
        }
        Ok(EventGraphs { a_td: td, a_bu: bu })
    }

    fn for_direction(&self, dir: Direction) -> &SparseMatrix {
        match dir {
            Direction::TopDown | Direction::Undirected => &self.a_td,
            Direction::BottomUp => &self.a_bu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Everything the backward pass needs from one branch.
#[derive(Debug, Clone)]
pub(crate) struct BranchCache {
    pub direction: Direction,
    pub a_hat: SparseMatrix,
    /// `A_hat * X`
    pub p1: DenseMatrix,
    pub z1: DenseMatrix,
    /// Inverted-dropout mask (entries 0 or 1/keep), absent in eval mode.
    pub mask1: Option<DenseMatrix>,
    /// `A_hat * H~1`
    pub p2: DenseMatrix,
    pub z2: DenseMatrix,
    pub mask2: Option<DenseMatrix>,
}

/// Intermediates of one forward call, retained for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub(crate) branches: Vec<BranchCache>,
    pub(crate) s: DenseMatrix,
    pub(crate) probs: DenseMatrix,
    pub(crate) config: ModelConfig,
}

impl ForwardCache {
    pub fn probs(&self) -> &DenseMatrix {
        &self.probs
    }
}

fn branch_weights(params: &ModelParams, dir: Direction) -> (&DenseMatrix, &DenseMatrix) {
    match dir {
        Direction::TopDown | Direction::Undirected => (&params.w0_td, &params.w1_td),
        Direction::BottomUp => (&params.w0_bu, &params.w1_bu),
    }
}

fn sample_mask(rows: usize, cols: usize, rate: f64, rng: &mut ChaCha8Rng) -> DenseMatrix {
    let keep = 1.0 - rate;
    let scale = 1.0 / keep;
    let data = (0..rows * cols)
        .map(|_| {
            if rng.random::<f64>() < keep {
                scale
            } else {
                0.0
            }
        })
        .collect();
    DenseMatrix::new(rows, cols, data).expect("mask dimensions are consistent")
}

/// Run the model on one event. `graphs` must already be normalized. In train
/// mode, seeded inverted-dropout masks are applied to both activated hidden
/// layers; eval mode is fully deterministic.
///
/// Returns the class probability row and the cache for backprop.
pub fn forward(
    graphs: &EventGraphs,
    x: &DenseMatrix,
    params: &ModelParams,
    config: &ModelConfig,
    mode: Mode,
    seed: u64,
) -> Result<(DenseMatrix, ForwardCache), ModelError> {
    config.validate()?;
    check_shapes(params, config, x.cols())?;
    let n = x.rows();
    if n == 0 {
        return Err(ModelError::Config("event has no posts".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dropout = config.dropout_rate > 0.0 && mode == Mode::Train;

    let mut branches = Vec::with_capacity(config.variant.directions().len());
    let mut pooled: Option<DenseMatrix> = None;
    for &dir in config.variant.directions() {
        let a_hat = graphs.for_direction(dir);
        if a_hat.rows() != n || a_hat.cols() != n {
            return Err(ModelError::Config(format!(
                "adjacency for {dir:?} is {}x{}, expected {n}x{n}",
                a_hat.rows(),
                a_hat.cols()
            )));
        }
        let (w0, w1) = branch_weights(params, dir);

        let p1 = spmm(a_hat, x)?;
        let z1 = matmul(&p1, w0)?;
        let a1 = relu(&z1);
        let (mask1, h1) = if dropout {
            let m = sample_mask(a1.rows(), a1.cols(), config.dropout_rate, &mut rng);
            let h = a1.hadamard(&m)?;
            (Some(m), h)
        } else {
            (None, a1)
        };

        let h1_tilde = if config.root_enhancement {
            root_enhance(&h1, x)?
        } else {
            h1.clone()
        };

        let p2 = spmm(a_hat, &h1_tilde)?;
        let z2 = matmul(&p2, w1)?;
        let a2 = relu(&z2);
        let (mask2, h2) = if dropout {
            let m = sample_mask(a2.rows(), a2.cols(), config.dropout_rate, &mut rng);
            let h = a2.hadamard(&m)?;
            (Some(m), h)
        } else {
            (None, a2)
        };

        let h2_tilde = if config.root_enhancement {
            root_enhance(&h2, &h1)?
        } else {
            h2.clone()
        };

        let s_branch = mean_rows(&h2_tilde)?;
        pooled = Some(match pooled {
            None => s_branch,
            Some(prev) => concat_cols(&prev, &s_branch)?,
        });

        branches.push(BranchCache {
            direction: dir,
            a_hat: a_hat.clone(),
            p1,
            z1,
            mask1,
            p2,
            z2,
            mask2,
        });
    }

    let s = pooled.expect("at least one branch");
    let logits = matmul(&s, &params.fc_weight)?.add(&params.fc_bias)?;
    let probs = softmax_row(&logits)?;

    let cache = ForwardCache {
        branches,
        s,
        probs: probs.clone(),
        config: config.clone(),
    };
    Ok((probs, cache))
}

/// Argmax class index under eval-mode forward.
pub fn predict(
    graphs: &EventGraphs,
    x: &DenseMatrix,
    params: &ModelParams,
    config: &ModelConfig,
) -> Result<usize, ModelError> {
    let (probs, _) = forward(graphs, x, params, config, Mode::Eval, 0)?;
    let mut best = 0;
    for c in 1..probs.cols() {
        if probs.get(0, c) > probs.get(0, best) {
            best = c;
        }
    }
    Ok(best)
}

/// Write the binary params format: magic `BGCN`, a version byte, then for
/// each matrix in declared order a `u32` little-endian rows/cols header
/// followed by its entries as little-endian `f64`.
pub fn write_params(params: &ModelParams, mut w: impl Write) -> Result<(), ModelError> {
    w.write_all(&PARAMS_MAGIC)?;
    w.write_all(&[PARAMS_VERSION])?;
    for (_, m) in params.matrices() {
        w.write_all(&(m.rows() as u32).to_le_bytes())?;
        w.write_all(&(m.cols() as u32).to_le_bytes())?;
        for v in m.data() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    Ok(())
}

/// Decode the binary params format, validating magic, version, and sizes
/// before allocating anything.
pub fn read_params(bytes: &[u8]) -> Result<ModelParams, ModelError> {
    let mut cursor = bytes;

    let mut magic = [0u8; 4];
    read_exact(&mut cursor, &mut magic)?;
    if magic != PARAMS_MAGIC {
        return Err(ModelError::BadMagic { found: magic });
    }
    let mut version = [0u8; 1];
    read_exact(&mut cursor, &mut version)?;
    if version[0] != PARAMS_VERSION {
        return Err(ModelError::UnsupportedVersion(version[0]));
    }

    let mut matrices = Vec::with_capacity(6);
    for _ in 0..6 {
        let mut header = [0u8; 8];
        read_exact(&mut cursor, &mut header)?;
        let rows = u32::from_le_bytes(header[0..4].try_into().unwrap()) as u64;
        let cols = u32::from_le_bytes(header[4..8].try_into().unwrap()) as u64;
        let entries = rows
            .checked_mul(cols)
            .ok_or(ModelError::SizeOverflow { rows, cols })?;
        let byte_len = entries
            .checked_mul(8)
            .ok_or(ModelError::SizeOverflow { rows, cols })?;
        if byte_len > cursor.len() as u64 {
            return Err(ModelError::Truncated);
        }
        let mut data = Vec::with_capacity(entries as usize);
        for chunk in cursor[..byte_len as usize].chunks_exact(8) {
            data.push(f64::from_le_bytes(chunk.try_into().unwrap()));
        }
        cursor = &cursor[byte_len as usize..];
        matrices.push(
            DenseMatrix::new(rows as usize, cols as usize, data)
                .expect("entry count was computed from the header"),
        );
    }
    if !cursor.is_empty() {
        return Err(ModelError::TrailingBytes(cursor.len()));
    }

    let mut it = matrices.into_iter();
    Ok(ModelParams {
        w0_td: it.next().unwrap(),
        w1_td: it.next().unwrap(),
        w0_bu: it.next().unwrap(),
        w1_bu: it.next().unwrap(),
        fc_weight: it.next().unwrap(),
        fc_bias: it.next().unwrap(),
    })
}

/// Convenience wrapper over [`read_params`] for streams.
pub fn read_params_from(mut r: impl Read) -> Result<ModelParams, ModelError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    read_params(&bytes)
}

fn read_exact(cursor: &mut &[u8], buf: &mut [u8]) -> Result<(), ModelError> {
    if cursor.len() < buf.len() {
        return Err(ModelError::Truncated);
    }
    buf.copy_from_slice(&cursor[..buf.len()]);
    *cursor = &cursor[buf.len()..];
    Ok(())
}
