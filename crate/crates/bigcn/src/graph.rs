//! Propagation-tree events and the adjacency machinery built on them:
//! directed adjacency construction, symmetric degree normalization, DropEdge,
//! and the top-down / bottom-up / undirected variants.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numerics::SparseMatrix;

#[derive(Debug, Error, PartialEq)]
pub enum GraphError {
    #[error("event has no posts")]
    EmptyEvent,
    #[error("post {index} is stored at position {position}")]
    MisplacedPost { index: usize, position: usize },
    #[error("edge ({parent}, {child}) references a node outside 0..{n}")]
    EdgeOutOfRange {
        parent: usize,
        child: usize,
        n: usize,
    },
    #[error("edge ({parent}, {child}) would give the root a parent; index 0 must be the root")]
    RootHasParent { parent: usize, child: usize },
    #[error("edge ({parent}, {child}) gives node {child} a second parent")]
    DuplicateParent { parent: usize, child: usize },
    #[error("edge ({parent}, {child}) is a self-loop")]
    SelfLoop { parent: usize, child: usize },
    #[error("node {index} is not connected to the root (orphan or cycle)")]
    Disconnected { index: usize },
    #[error("root post must have delay 0, found {delay}")]
    RootDelayNonzero { delay: f64 },
    #[error("post {index} has invalid delay {delay} (must be finite and nonnegative)")]
    InvalidDelay { index: usize, delay: f64 },
    #[error("adjacency must be square, got {rows}x{cols}")]
    NonSquare { rows: usize, cols: usize },
    #[error("relabeling must keep the root at index 0 and be a permutation of 0..{n}")]
    BadPermutation { n: usize },
}

/// Event class label. Two-class corpora use only `FalseRumor`/`TrueRumor`;
/// four-class corpora use all four.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassLabel {
    NonRumor,
    FalseRumor,
    TrueRumor,
    Unverified,
}

impl ClassLabel {
    pub fn code(self) -> char {
        match self {
            ClassLabel::NonRumor => 'N',
            ClassLabel::FalseRumor => 'F',
            ClassLabel::TrueRumor => 'T',
            ClassLabel::Unverified => 'U',
        }
    }

    pub fn from_code(c: char) -> Option<ClassLabel> {
        match c {
            'N' => Some(ClassLabel::NonRumor),
            'F' => Some(ClassLabel::FalseRumor),
            'T' => Some(ClassLabel::TrueRumor),
            'U' => Some(ClassLabel::Unverified),
            _ => None,
        }
    }
}

/// Number of classes in a corpus: 2 (`{F, T}`) or 4 (`{N, F, T, U}`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LabelArity {
    Two,
    Four,
}

impl LabelArity {
    pub fn classes(self) -> &'static [ClassLabel] {
        match self {
            LabelArity::Two => &[ClassLabel::FalseRumor, ClassLabel::TrueRumor],
            LabelArity::Four => &[
                ClassLabel::NonRumor,
                ClassLabel::FalseRumor,
                ClassLabel::TrueRumor,
                ClassLabel::Unverified,
            ],
        }
    }

    pub fn num_classes(self) -> usize {
        self.classes().len()
    }

    pub fn contains(self, label: ClassLabel) -> bool {
        self.classes().contains(&label)
    }

    /// Column index of a label in this label space.
    pub fn index_of(self, label: ClassLabel) -> Option<usize> {
        self.classes().iter().position(|&c| c == label)
    }
}

/// One post in a propagation tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Post {
    pub index: usize,
    /// Minutes elapsed since the source post.
    pub delay_minutes: f64,
    pub tokens: Vec<String>,
}

/// One rumor event: the source post, its responsive posts, and the directed
/// response edges forming a tree rooted at post 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PropagationEvent {
    pub id: String,
    pub posts: Vec<Post>,
    /// `(parent, child)` pairs; information flows parent -> child.
    pub edges: Vec<(usize, usize)>,
    pub label: ClassLabel,
}

impl PropagationEvent {
    pub fn num_posts(&self) -> usize {
        self.posts.len()
    }

    /// Check every structural invariant: tree rooted at index 0, in-range
    /// indices, one parent per non-root node, no cycles, valid delays.
    pub fn validate(&self) -> Result<(), GraphError> {
        let n = self.posts.len();
        if n == 0 {
            return Err(GraphError::EmptyEvent);
        }
        for (position, post) in self.posts.iter().enumerate() {
            if post.index != position {
                return Err(GraphError::MisplacedPost {
                    index: post.index,
                    position,
                });
            }
            if post.delay_minutes < 0.0 || !post.delay_minutes.is_finite() {
                return Err(GraphError::InvalidDelay {
                    index: post.index,
                    delay: post.delay_minutes,
                });
            }
        }
        if self.posts[0].delay_minutes != 0.0 {
            return Err(GraphError::RootDelayNonzero {
                delay: self.posts[0].delay_minutes,
            });
        }

        let mut parent = vec![usize::MAX; n];
        for &(p, c) in &self.edges {
            if p >= n || c >= n {
                return Err(GraphError::EdgeOutOfRange {
                    parent: p,
                    child: c,
                    n,
                });
            }
            if p == c {
                return Err(GraphError::SelfLoop {
                    parent: p,
                    child: c,
                });
            }
            if c == 0 {
                return Err(GraphError::RootHasParent {
                    parent: p,
                    child: c,
                });
            }
            if parent[c] != usize::MAX {
                return Err(GraphError::DuplicateParent {
                    parent: p,
                    child: c,
                });
            }
            parent[c] = p;
        }
        // With one parent per non-root node, reaching the root within n steps
        // rules out both orphans and cycles.
        for start in 1..n {
            if parent[start] == usize::MAX {
                return Err(GraphError::Disconnected { index: start });
            }
            let mut cur = start;
            let mut steps = 0;
            while cur != 0 {
                cur = parent[cur];
                steps += 1;
                if cur == usize::MAX || steps > n {
                    return Err(GraphError::Disconnected { index: start });
                }
            }
        }
        Ok(())
    }

    /// Relabel non-root posts with a permutation of `0..n` that fixes 0.
    /// Posts, edges and token rows all move together, so the event stays valid.
    pub fn relabel(&self, perm: &[usize]) -> Result<PropagationEvent, GraphError> {
        let n = self.posts.len();
        let mut seen = vec![false; n];
        let valid = perm.len() == n
            && perm.first() == Some(&0)
            && perm.iter().all(|&p| {
                if p >= n || seen[p] {
                    false
                } else {
                    seen[p] = true;
                    true
                }
            });
        if !valid {
            return Err(GraphError::BadPermutation { n });
        }
        let mut posts: Vec<Post> = self.posts.clone();
        for (old, post) in self.posts.iter().enumerate() {
            posts[perm[old]] = Post {
                index: perm[old],
                delay_minutes: post.delay_minutes,
                tokens: post.tokens.clone(),
            };
        }
        let edges = self
            .edges
            .iter()
            .map(|&(p, c)| (perm[p], perm[c]))
            .collect();
        Ok(PropagationEvent {
            id: self.id.clone(),
            posts,
            edges,
            label: self.label,
        })
    }
}

/// Graph orientation for a single GCN branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    /// Edges point from a post to its responses.
    TopDown,
    /// Edges reversed: responses point back at what they answered.
    BottomUp,
    /// Symmetrized; orientation discarded.
    Undirected,
}

/// Build the top-down adjacency of an event: entry `(child, parent) = 1` for
/// every response edge `parent -> child`, no self-loops. The event is
/// validated first; malformed trees are rejected.
pub fn build_adjacency(event: &PropagationEvent) -> Result<SparseMatrix, GraphError> {
    event.validate()?;
    let n = event.posts.len();
    let entries = event.edges.iter().map(|&(p, c)| (c, p, 1.0)).collect();
    Ok(SparseMatrix::from_entries(n, n, entries)
        .expect("validated tree edges are unique and in range"))
}

/// Remove exactly `floor(nnz * p)` entries chosen uniformly without
/// replacement under the given seed. Remaining entries are untouched, so
/// `p = 0` returns the input bit for bit.
pub fn drop_edge(a: &SparseMatrix, p: f64, seed: u64) -> SparseMatrix {
    assert!((0.0..=1.0).contains(&p), "drop rate must be in [0, 1]");
    let nnz = a.nnz();
    let k = ((nnz as f64) * p).floor() as usize;
    if k == 0 {
        return a.clone();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let dropped = rand::seq::index::sample(&mut rng, nnz, k.min(nnz));
    let mut drop_mask = vec![false; nnz];
    for i in dropped {
        drop_mask[i] = true;
    }
    a.filter_entries(|i, _| !drop_mask[i])
}

/// Symmetric degree normalization with self-loops: add the identity, take
/// row sums as degrees, and scale each entry by the inverse square roots of
/// its row and column degrees. Every row sum is >= 1 after the self-loop, so
/// the scaling is always defined.
pub fn normalize_adjacency(a: &SparseMatrix) -> Result<SparseMatrix, GraphError> {
    let n = a.rows();
    if n != a.cols() {
        return Err(GraphError::NonSquare {
            rows: a.rows(),
            cols: a.cols(),
        });
    }
    let mut with_loops: Vec<(usize, usize, f64)> = Vec::with_capacity(a.nnz() + n);
    let mut diag_seen = vec![false; n];
    for &(r, c, v) in a.entries() {
        if r == c {
            diag_seen[r] = true;
            with_loops.push((r, c, v + 1.0));
        } else {
            with_loops.push((r, c, v));
        }
    }
    for (i, seen) in diag_seen.iter().enumerate() {
        if !seen {
            with_loops.push((i, i, 1.0));
        }
    }
    let mut degree = vec![0.0; n];
    for &(r, _, v) in &with_loops {
        degree[r] += v;
    }
    let inv_sqrt: Vec<f64> = degree.iter().map(|d| 1.0 / d.sqrt()).collect();
    let entries = with_loops
        .into_iter()
        .map(|(r, c, v)| (r, c, v * inv_sqrt[r] * inv_sqrt[c]))
        .collect();
    Ok(SparseMatrix::from_entries(n, n, entries)
        .expect("normalization preserves coordinate uniqueness"))
}

/// Derive the adjacency for a branch direction from the (possibly
/// edge-dropped) top-down adjacency: top-down is the identity, bottom-up the
/// transpose, undirected the elementwise max of the two.
pub fn make_directional(a_td: &SparseMatrix, direction: Direction) -> SparseMatrix {
    match direction {
        Direction::TopDown => a_td.clone(),
        Direction::BottomUp => a_td.transpose(),
        Direction::Undirected => {
            let mut merged = std::collections::BTreeMap::new();
            for &(r, c, v) in a_td.entries() {
                merged
                    .entry((r, c))
                    .and_modify(|m: &mut f64| *m = m.max(v))
                    .or_insert(v);
                merged
                    .entry((c, r))
                    .and_modify(|m: &mut f64| *m = m.max(v))
                    .or_insert(v);
            }
            let entries = merged.into_iter().map(|((r, c), v)| (r, c, v)).collect();
            SparseMatrix::from_entries(a_td.rows(), a_td.cols(), entries)
                .expect("symmetrization keeps indices in range")
        }
    }
}
