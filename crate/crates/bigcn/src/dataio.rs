//! On-disk dataset format, synthetic corpus generation, deadline slicing,
//! and stratified fold assignment.
//!
//! Dataset directory layout:
//!
//! ```text
//! labels.tsv            one `event_id<TAB>label` line per event
//! trees/<event_id>.tsv  header `n=<count>`, then per post in index order:
//!                       `index<TAB>parent_index<TAB>delay_minutes<TAB>tokens`
//! ```
//!
//! `parent_index` is -1 for the root, tokens are space-joined, delays are
//! decimals with up to two fraction digits, files are UTF-8 with LF endings.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::graph::{ClassLabel, GraphError, LabelArity, Post, PropagationEvent};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{file}:{line}: {message}")]
    Parse {
        file: String,
        line: usize,
        message: String,
    },
    #[error("{file}: {source}")]
    InvalidTree {
        file: String,
        #[source]
        source: GraphError,
    },
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("corpus is empty")]
    EmptyCorpus,
    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),
    #[error("need at least 2 folds, got {0}")]
    TooFewFolds(usize),
    #[error("corpus has {events} events, fewer than {folds} folds")]
    TooFewEvents { events: usize, folds: usize },
    #[error("event {event}: {what} {value:?} cannot be written in the dataset format")]
    Unencodable {
        event: String,
        what: &'static str,
        value: String,
    },
}

fn safe_event_id(id: &str) -> bool {
    !id.is_empty()
        && !id.contains(['/', '\\', '\t', '\n'])
        && !id.contains("..")
        && !id.starts_with('.')
}

/// A labeled set of events sharing one label arity.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub name: String,
    pub events: Vec<PropagationEvent>,
    pub label_arity: LabelArity,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn parse_err(file: &str, line: usize, message: impl Into<String>) -> DataError {
    DataError::Parse {
        file: file.to_string(),
        line,
        message: message.into(),
    }
}

/// Parse `labels.tsv` content into `(event_id, label)` pairs in file order.
pub fn parse_labels(content: &str, file: &str) -> Result<Vec<(String, ClassLabel)>, DataError> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in content.lines().enumerate() {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let (id, label) = line
            .split_once('\t')
            .ok_or_else(|| parse_err(file, lineno, "missing label: expected event_id<TAB>label"))?;
        if !safe_event_id(id) {
            return Err(parse_err(
                file,
                lineno,
                format!("event id {id:?} is not a safe file name"),
            ));
        }
        let label = match label.chars().collect::<Vec<_>>()[..] {
            [c] => ClassLabel::from_code(c),
            _ => None,
        }
        .ok_or_else(|| {
            parse_err(
                file,
                lineno,
                format!("unknown label token {label:?}, expected one of N, F, T, U"),
            )
        })?;
        if !seen.insert(id.to_string()) {
            return Err(parse_err(
                file,
                lineno,
                format!("duplicate event id {id:?}"),
            ));
        }
        out.push((id.to_string(), label));
    }
    if out.is_empty() {
        return Err(DataError::EmptyCorpus);
    }
    Ok(out)
}

/// Posts and `(parent, child)` edges of one parsed tree file.
pub type ParsedTree = (Vec<Post>, Vec<(usize, usize)>);

/// Parse one tree file into an event; the label is attached by the caller.
pub fn parse_tree(content: &str, file: &str) -> Result<ParsedTree, DataError> {
    let mut lines = content.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| parse_err(file, 1, "missing n=<count> header"))?;
    let n: usize = header
        .strip_prefix("n=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| parse_err(file, 1, format!("expected n=<count>, got {header:?}")))?;
    if n == 0 {
        return Err(parse_err(file, 1, "event must have at least one post"));
    }

    // The header is untrusted; cap the allocation hint.
    let mut posts = Vec::with_capacity(n.min(4096));
    let mut edges = Vec::with_capacity(n.min(4096));
    for (i, line) in lines {
        let lineno = i + 1;
        if line.is_empty() {
            continue;
        }
        let mut parts = line.splitn(4, '\t');
        let (index, parent, delay, tokens) =
            match (parts.next(), parts.next(), parts.next(), parts.next()) {
                (Some(a), Some(b), Some(c), Some(d)) => (a, b, c, d),
                _ => {
                    return Err(parse_err(
                        file,
                        lineno,
                        "expected index<TAB>parent_index<TAB>delay_minutes<TAB>tokens",
                    ))
                }
            };
        let index: usize = index
            .parse()
            .map_err(|_| parse_err(file, lineno, format!("bad post index {index:?}")))?;
        if index != posts.len() {
            return Err(parse_err(
                file,
                lineno,
                format!(
                    "duplicate or out-of-order post index {index}, expected {}",
                    posts.len()
                ),
            ));
        }
        let parent: i64 = parent
            .parse()
            .map_err(|_| parse_err(file, lineno, format!("bad parent index {parent:?}")))?;
        if !delay.chars().all(|c| c.is_ascii_digit() || c == '.')
            || delay.is_empty()
            || delay.matches('.').count() > 1
            || delay.split('.').nth(1).is_some_and(|frac| frac.len() > 2)
        {
            return Err(parse_err(
                file,
                lineno,
                format!(
                    "delay {delay:?} must be a nonnegative decimal with at most 2 fraction digits"
                ),
            ));
        }
        let delay: f64 = delay
            .parse()
            .map_err(|_| parse_err(file, lineno, format!("bad delay {delay:?}")))?;
        match (index, parent) {
            (0, -1) => {}
            (0, p) => {
                return Err(parse_err(
                    file,
                    lineno,
                    format!("root must have parent -1, got {p}"),
                ))
            }
            (_, p) if p < 0 => {
                return Err(parse_err(
                    file,
                    lineno,
                    format!("non-root post has parent {p}"),
                ))
            }
            (child, p) => edges.push((p as usize, child)),
        }
        posts.push(Post {
            index,
            delay_minutes: delay,
            tokens: tokens
                .split(' ')
                .filter(|t| !t.is_empty())
                .map(str::to_string)
                .collect(),
        });
    }
    if posts.len() != n {
        return Err(parse_err(
            file,
            posts.len() + 1,
            format!("header says {n} posts, found {}", posts.len()),
        ));
    }
    Ok((posts, edges))
}

/// Load and fully validate a dataset directory.
///
/// Label arity is inferred: the corpus is four-class when any `N` or `U`
/// label appears and two-class otherwise.
pub fn parse_corpus(root: &Path) -> Result<Corpus, DataError> {
    let labels_path = root.join("labels.tsv");
    let labels_content = fs::read_to_string(&labels_path).map_err(io_err(&labels_path))?;
    let labels = parse_labels(&labels_content, &labels_path.to_string_lossy())?;

    let four_class = labels
        .iter()
        .any(|(_, l)| matches!(l, ClassLabel::NonRumor | ClassLabel::Unverified));
    let label_arity = if four_class {
        LabelArity::Four
    } else {
        LabelArity::Two
    };

    let mut events = Vec::with_capacity(labels.len());
    for (id, label) in labels {
        let tree_path = root.join("trees").join(format!("{id}.tsv"));
        let content = fs::read_to_string(&tree_path).map_err(io_err(&tree_path))?;
        let file = tree_path.to_string_lossy().to_string();
        let (posts, edges) = parse_tree(&content, &file)?;
        let event = PropagationEvent {
            id,
            posts,
            edges,
            label,
        };
        event.validate().map_err(|source| DataError::InvalidTree {
            file: file.clone(),
            source,
        })?;
        events.push(event);
    }

    Ok(Corpus {
        name: root
            .file_name()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "corpus".to_string()),
        events,
        label_arity,
    })
}

fn format_delay(delay: f64) -> String {
    let mut s = format!("{delay:.2}");
    while s.ends_with('0') {
        s.pop();
    }
    if s.ends_with('.') {
        s.pop();
    }
    s
}

/// Render one event as its tree file content.
pub fn render_tree(event: &PropagationEvent) -> String {
    let mut parent = vec![-1i64; event.posts.len()];
    for &(p, c) in &event.edges {
        parent[c] = p as i64;
    }
    let mut out = String::new();
    let _ = writeln!(out, "n={}", event.posts.len());
    for post in &event.posts {
        let _ = writeln!(
            out,
            "{}\t{}\t{}\t{}",
            post.index,
            parent[post.index],
            format_delay(post.delay_minutes),
            post.tokens.join(" ")
        );
    }
    out
}

/// Write the dataset directory format; the inverse of [`parse_corpus`].
///
/// Ids and tokens that cannot survive the tab/space-delimited format are
/// rejected rather than written corrupted.
pub fn write_corpus(corpus: &Corpus, root: &Path) -> Result<(), DataError> {
    for event in &corpus.events {
        if !safe_event_id(&event.id) {
            return Err(DataError::Unencodable {
                event: event.id.clone(),
                what: "event id",
                value: event.id.clone(),
            });
        }
        for post in &event.posts {
            if let Some(token) = post
                .tokens
                .iter()
                .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
            {
                return Err(DataError::Unencodable {
                    event: event.id.clone(),
                    what: "token",
                    value: token.clone(),
                });
            }
        }
    }
    let trees = root.join("trees");
    fs::create_dir_all(&trees).map_err(io_err(&trees))?;
    let mut labels = String::new();
    for event in &corpus.events {
        let _ = writeln!(labels, "{}\t{}", event.id, event.label.code());
        let path = trees.join(format!("{}.tsv", event.id));
        fs::write(&path, render_tree(event)).map_err(io_err(&path))?;
    }
    let labels_path = root.join("labels.tsv");
    fs::write(&labels_path, labels).map_err(io_err(&labels_path))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic corpora
// ---------------------------------------------------------------------------

/// A weighted pool of tokens to sample post text from.
#[derive(Debug, Clone)]
pub struct TokenPool {
    pub tokens: Vec<String>,
    pub weights: Vec<f64>,
}

impl TokenPool {
    pub fn uniform(tokens: Vec<String>) -> TokenPool {
        let weights = vec![1.0; tokens.len()];
        TokenPool { tokens, weights }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> &str {
        let total: f64 = self.weights.iter().sum();
        let mut target = rng.random::<f64>() * total;
        for (token, &w) in self.tokens.iter().zip(&self.weights) {
            target -= w;
            if target <= 0.0 {
                return token;
            }
        }
        self.tokens.last().expect("pool is nonempty")
    }
}

/// Recipe for a desk-scale labeled corpus: class-conditional token pools over
/// trees grown by a branching process with exponential inter-arrival times.
#[derive(Debug, Clone)]
pub struct SyntheticSpec {
    pub num_events: usize,
    pub classes: Vec<ClassLabel>,
    /// One pool per class, parallel to `classes`.
    pub class_pools: Vec<TokenPool>,
    /// Class-neutral tokens mixed into every class.
    pub shared_pool: TokenPool,
    /// Probability a non-root token is drawn from the class pool.
    pub class_token_rate: f64,
    /// Same probability for the source post.
    pub root_class_token_rate: f64,
    /// Mean children per node of the branching process.
    pub branching: f64,
    pub depth_limit: usize,
    pub mean_posts: f64,
    pub tokens_per_post: usize,
    /// Mean of the exponential parent-to-child delay, in minutes.
    pub inter_arrival_mean_minutes: f64,
    pub seed: u64,
}

impl SyntheticSpec {
    fn pool_for(prefix: &str, size: usize) -> TokenPool {
        TokenPool::uniform((0..size).map(|i| format!("{prefix}{i:02}")).collect())
    }

    fn base(classes: Vec<ClassLabel>, num_events: usize, seed: u64) -> SyntheticSpec {
        let class_pools = classes
            .iter()
            .map(|c| Self::pool_for(&format!("c{}t", c.code().to_ascii_lowercase()), 20))
            .collect();
        SyntheticSpec {
            num_events,
            classes,
            class_pools,
            shared_pool: Self::pool_for("shr", 40),
            class_token_rate: 1.0,
            root_class_token_rate: 1.0,
            branching: 2.0,
            depth_limit: 5,
            mean_posts: 10.0,
            tokens_per_post: 6,
            inter_arrival_mean_minutes: 30.0,
            seed,
        }
    }

    /// Disjoint per-class pools in every post; a centroid classifier gets
    /// this corpus exactly right.
    pub fn separable(classes: Vec<ClassLabel>, num_events: usize, seed: u64) -> SyntheticSpec {
        Self::base(classes, num_events, seed)
    }

    /// Class signal concentrated in the source post; replies are mostly
    /// class-neutral chatter.
    pub fn root_heavy(classes: Vec<ClassLabel>, num_events: usize, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            class_token_rate: 0.03,
            root_class_token_rate: 1.0,
            mean_posts: 12.0,
            ..Self::base(classes, num_events, seed)
        }
    }

    /// Diluted class signal everywhere; not perfectly separable.
    pub fn noisy(classes: Vec<ClassLabel>, num_events: usize, seed: u64) -> SyntheticSpec {
        SyntheticSpec {
            class_token_rate: 0.25,
            root_class_token_rate: 0.25,
            ..Self::base(classes, num_events, seed)
        }
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.num_events == 0 {
            return Err(DataError::BadSpec("num_events must be positive".into()));
        }
        if self.classes.is_empty() || self.classes.len() != self.class_pools.len() {
            return Err(DataError::BadSpec(
                "need one token pool per class and at least one class".into(),
            ));
        }
        for pool in self.class_pools.iter().chain(Some(&self.shared_pool)) {
            if pool.tokens.is_empty()
                || pool.tokens.len() != pool.weights.len()
                || pool.weights.iter().any(|&w| w <= 0.0 || !w.is_finite())
            {
                return Err(DataError::BadSpec(
                    "token pools need positive weights".into(),
                ));
            }
        }
        if !(0.0..=1.0).contains(&self.class_token_rate)
            || !(0.0..=1.0).contains(&self.root_class_token_rate)
        {
            return Err(DataError::BadSpec("token rates must be in [0, 1]".into()));
        }
        if self.branching <= 0.0 || self.mean_posts < 1.0 {
            return Err(DataError::BadSpec(
                "branching and mean_posts must be positive".into(),
            ));
        }
        if self.tokens_per_post == 0 {
            return Err(DataError::BadSpec(
                "tokens_per_post must be positive".into(),
            ));
        }
        if self.inter_arrival_mean_minutes <= 0.0 {
            return Err(DataError::BadSpec(
                "inter-arrival mean must be positive".into(),
            ));
        }
        Ok(())
    }
}

fn sample_poisson(mean: f64, rng: &mut ChaCha8Rng) -> usize {
    // Knuth's method; fine for the small means used here.
    let l = (-mean).exp();
    let mut k = 0usize;
    let mut p = 1.0;
    loop {
        p *= rng.random::<f64>();
        if p <= l {
            return k;
        }
        k += 1;
        if k > 10_000 {
            return k;
        }
    }
}

fn sample_exponential(mean: f64, rng: &mut ChaCha8Rng) -> f64 {
    let u: f64 = rng.random();
    -mean * (1.0 - u).ln()
}

/// Generate a seeded, class-balanced corpus. Event counts per class differ by
/// at most one and the output is identical for identical specs.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Corpus, DataError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let four_class = spec
        .classes
        .iter()
        .any(|l| matches!(l, ClassLabel::NonRumor | ClassLabel::Unverified));
    let label_arity = if four_class {
        LabelArity::Four
    } else {
        LabelArity::Two
    };

    let mut events = Vec::with_capacity(spec.num_events);
    for i in 0..spec.num_events {
        let class_idx = i % spec.classes.len();
        let label = spec.classes[class_idx];
        let pool = &spec.class_pools[class_idx];

        let n = (1 + sample_poisson(spec.mean_posts - 1.0, &mut rng)).max(1);

        // Grow the tree level by level until the post budget is spent.
        let mut parent_of = vec![usize::MAX; n];
        let mut depth = vec![0usize; n];
        let mut frontier = vec![0usize];
        let mut next = 1usize;
        while next < n {
            let mut new_frontier = Vec::new();
            for &node in &frontier {
                if next >= n {
                    break;
                }
                if depth[node] + 1 > spec.depth_limit {
                    continue;
                }
                let children = sample_poisson(spec.branching, &mut rng).min(n - next);
                for _ in 0..children {
                    parent_of[next] = node;
                    depth[next] = depth[node] + 1;
                    new_frontier.push(next);
                    next += 1;
                }
            }
            if new_frontier.is_empty() {
                // Budget left but nothing spawned; attach to a random
                // depth-eligible node so the tree always reaches n posts.
                let eligible: Vec<usize> =
                    (0..next).filter(|&j| depth[j] < spec.depth_limit).collect();
                let pick = if eligible.is_empty() {
                    0
                } else {
                    eligible[rng.random_range(0..eligible.len())]
                };
                parent_of[next] = pick;
                depth[next] = (depth[pick] + 1).min(spec.depth_limit);
                new_frontier.push(next);
                next += 1;
            }
            frontier = new_frontier;
        }

        let mut posts = Vec::with_capacity(n);
        let mut delay = vec![0.0f64; n];
        for j in 0..n {
            if j > 0 {
                let gap = sample_exponential(spec.inter_arrival_mean_minutes, &mut rng);
                delay[j] = delay[parent_of[j]] + gap;
                // Stored with two fraction digits, matching the file format.
                delay[j] = (delay[j] * 100.0).round() / 100.0;
            }
            let rate = if j == 0 {
                spec.root_class_token_rate
            } else {
                spec.class_token_rate
            };
            let tokens = (0..spec.tokens_per_post)
                .map(|_| {
                    if rng.random::<f64>() < rate {
                        pool.sample(&mut rng).to_string()
                    } else {
                        spec.shared_pool.sample(&mut rng).to_string()
                    }
                })
                .collect();
            posts.push(Post {
                index: j,
                delay_minutes: delay[j],
                tokens,
            });
        }
        let edges = (1..n).map(|j| (parent_of[j], j)).collect();
        let event = PropagationEvent {
            id: format!("ev{i:05}"),
            posts,
            edges,
            label,
        };
        debug_assert!(event.validate().is_ok());
        events.push(event);
    }

    Ok(Corpus {
        name: "synthetic".into(),
        events,
        label_arity,
    })
}

// ---------------------------------------------------------------------------
// Deadline slicing
// ---------------------------------------------------------------------------

/// Keep only posts released by `deadline_minutes` whose ancestors all made
/// the deadline too, so the tree stays connected. The root always survives;
/// indices are compacted preserving relative order.
pub fn slice_by_deadline(event: &PropagationEvent, deadline_minutes: f64) -> PropagationEvent {
    let n = event.posts.len();
    let mut parent_of = vec![usize::MAX; n];
    for &(p, c) in &event.edges {
        parent_of[c] = p;
    }
    let mut keep = vec![false; n];
    keep[0] = true;
    // Index order implies no ordering on the tree, so walk ancestor chains.
    for j in 1..n {
        if event.posts[j].delay_minutes > deadline_minutes {
            continue;
        }
        let mut chain = vec![j];
        let mut cur = j;
        let mut ok = true;
        while cur != 0 {
            cur = parent_of[cur];
            if keep[cur] {
                break;
            }
            if event.posts[cur].delay_minutes > deadline_minutes {
                ok = false;
                break;
            }
            chain.push(cur);
        }
        if ok {
            for c in chain {
                keep[c] = true;
            }
        }
    }

    let mut remap = vec![usize::MAX; n];
    let mut next = 0usize;
    for (j, &k) in keep.iter().enumerate() {
        if k {
            remap[j] = next;
            next += 1;
        }
    }
    let posts = event
        .posts
        .iter()
        .filter(|p| keep[p.index])
        .map(|p| Post {
            index: remap[p.index],
            delay_minutes: p.delay_minutes,
            tokens: p.tokens.clone(),
        })
        .collect();
    let edges = event
        .edges
        .iter()
        .filter(|&&(p, c)| keep[p] && keep[c])
        .map(|&(p, c)| (remap[p], remap[c]))
        .collect();
    PropagationEvent {
        id: event.id.clone(),
        posts,
        edges,
        label: event.label,
    }
}

// ---------------------------------------------------------------------------
// Fold assignment
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FoldAssignment {
    /// Event indices per fold; disjoint and covering.
    pub folds: Vec<Vec<usize>>,
    /// False when some class had fewer events than folds and assignment fell
    /// back to an unstratified split.
    pub stratified: bool,
}

/// Seeded stratified partition of a corpus into `folds` disjoint parts.
pub fn split_folds(corpus: &Corpus, folds: usize, seed: u64) -> Result<FoldAssignment, DataError> {
    if folds < 2 {
        return Err(DataError::TooFewFolds(folds));
    }
    if corpus.events.len() < folds {
        return Err(DataError::TooFewEvents {
            events: corpus.events.len(),
            folds,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let classes = corpus.label_arity.classes();
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); classes.len()];
    for (i, event) in corpus.events.iter().enumerate() {
        let k = corpus
            .label_arity
            .index_of(event.label)
            .expect("corpus labels match its arity");
        by_class[k].push(i);
    }

    let stratified = by_class.iter().all(|g| g.is_empty() || g.len() >= folds);

    let mut assignment = vec![Vec::new(); folds];
    if stratified {
        let mut start = 0usize;
        for group in by_class.iter_mut() {
            use rand::seq::SliceRandom;
            group.shuffle(&mut rng);
            for (offset, &event_idx) in group.iter().enumerate() {
                assignment[(start + offset) % folds].push(event_idx);
            }
            start = (start + group.len()) % folds;
        }
    } else {
        use rand::seq::SliceRandom;
        let mut all: Vec<usize> = (0..corpus.events.len()).collect();
        all.shuffle(&mut rng);
        for (offset, &event_idx) in all.iter().enumerate() {
            assignment[offset % folds].push(event_idx);
        }
    }
    for fold in &mut assignment {
        fold.sort_unstable();
    }
    Ok(FoldAssignment {
        folds: assignment,
        stratified,
    })
}

/// Seeded stratified holdout over positions `0..labels.len()`: roughly
/// `fraction` of each class lands in the second (validation) part, at least
/// one event per class with two or more members. Returns (rest, holdout).
pub fn stratified_holdout(
    labels: &[ClassLabel],
    fraction: f64,
    seed: u64,
) -> (Vec<usize>, Vec<usize>) {
    use rand::seq::SliceRandom;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut groups: std::collections::BTreeMap<char, Vec<usize>> = Default::default();
    for (i, label) in labels.iter().enumerate() {
        groups.entry(label.code()).or_default().push(i);
    }
    let mut rest = Vec::new();
    let mut holdout = Vec::new();
    for group in groups.values_mut() {
        group.shuffle(&mut rng);
        let take = if group.len() < 2 {
            0
        } else {
            ((group.len() as f64 * fraction).round() as usize).clamp(1, group.len() - 1)
        };
        holdout.extend_from_slice(&group[..take]);
        rest.extend_from_slice(&group[take..]);
    }
    if holdout.is_empty() && rest.len() > 1 {
        holdout.push(rest.pop().expect("nonempty"));
    }
    rest.sort_unstable();
    holdout.sort_unstable();
    (rest, holdout)
}
