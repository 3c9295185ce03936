//! Bi-directional graph convolutional networks (Bi-GCN) for classifying
//! rumor propagation trees.
//!
//! An event is a source post plus the tree of responses to it. The model runs
//! two-layer graph convolutions over the top-down propagation graph and its
//! bottom-up reverse, enhances every layer with the source post's features,
//! mean-pools both branches, and classifies the concatenation. Training uses
//! hand-derived reverse-mode gradients (verified against finite differences),
//! Adam, DropEdge, dropout, early stopping, and stratified cross-validation.
//!
//! The crate is organized as:
//!
//! - [`numerics`]: dense/sparse matrices and the exact kernels.
//! - [`graph`]: propagation events, adjacency building, normalization,
//!   DropEdge, directional variants.
//! - [`features`]: TF-IDF vocabulary and featurization.
//! - [`model`]: the forward computation, parameter init, params file format.
//! - [`training`]: loss, backprop, gradient checking, Adam, early stopping,
//!   fold training and cross-validation.
//! - [`dataio`]: dataset directory format, synthetic corpora, deadline
//!   slicing, fold assignment.
//! - [`eval`]: metrics and the early-detection curve.

pub mod dataio;
pub mod eval;
pub mod features;
pub mod graph;
pub mod model;
pub mod numerics;
pub mod training;

pub use dataio::{
    generate_synthetic, parse_corpus, slice_by_deadline, split_folds, Corpus, SyntheticSpec,
};
pub use eval::{compute_metrics, early_detection_curve, MetricsReport};
pub use features::{build_vocabulary, featurize_event, Vocabulary};
pub use graph::{
    build_adjacency, drop_edge, make_directional, normalize_adjacency, ClassLabel, Direction,
    LabelArity, Post, PropagationEvent,
};
pub use model::{
    forward, init_params, read_params, write_params, EventGraphs, ForwardCache, Mode, ModelConfig,
    ModelParams, ModelVariant,
};
pub use numerics::{DenseMatrix, SparseMatrix};
pub use training::{
    adam_step, backward, cross_validate, grad_check, loss, train_fold, AdamState, CvSettings,
    EarlyStopping, GradCheckSettings, LossConfig,
};
