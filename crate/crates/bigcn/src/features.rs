//! TF-IDF featurization of post texts.
//!
//! A "document" is a single post. Vocabulary selection ranks tokens by
//! corpus-level term frequency times idf, where `idf(t) = ln(n_posts /
//! df(t))`, keeps the top `k` and breaks score ties lexicographically.
//! Feature entries are raw in-post counts times idf.

use std::collections::HashMap;
use std::io::{self, Write};

use thiserror::Error;

use crate::graph::PropagationEvent;
use crate::numerics::DenseMatrix;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("cannot build a vocabulary from an empty corpus")]
    EmptyCorpus,
    #[error("vocabulary size must be at least 1")]
    ZeroSize,
    #[error("vocabulary file line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("io error: {0}")]
    Io(#[from] io::Error),
}

/// Token -> (column index, idf weight) mapping, capped at `k` terms.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary {
    terms: Vec<(String, f64)>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn size(&self) -> usize {
        self.terms.len()
    }

    /// Terms in column order with their idf weights.
    pub fn terms(&self) -> &[(String, f64)] {
        &self.terms
    }

    pub fn column_of(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    fn from_terms(terms: Vec<(String, f64)>) -> Vocabulary {
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, (t, _))| (t.clone(), i))
            .collect();
        Vocabulary { terms, index }
    }
}

/// Lowercase, strip punctuation, split on whitespace. The one place raw text
/// becomes tokens; swap this out for CJK-style corpora before building the
/// dataset files.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| !c.is_ascii_punctuation())
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Build the top-`k` vocabulary over every post of every event.
///
/// Caps at `k`, never pads: a corpus with fewer distinct tokens yields a
/// smaller vocabulary.
pub fn build_vocabulary(corpus: &[PropagationEvent], k: usize) -> Result<Vocabulary, FeatureError> {
    if corpus.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    if k == 0 {
        return Err(FeatureError::ZeroSize);
    }
    let mut total_tf: HashMap<&str, u64> = HashMap::new();
    let mut doc_freq: HashMap<&str, u64> = HashMap::new();
    let mut n_docs = 0u64;
    for event in corpus {
        for post in &event.posts {
            n_docs += 1;
            let mut seen_in_post: HashMap<&str, ()> = HashMap::new();
            for token in &post.tokens {
                *total_tf.entry(token.as_str()).or_insert(0) += 1;
                seen_in_post.entry(token.as_str()).or_insert(());
            }
            for token in seen_in_post.keys() {
                *doc_freq.entry(token).or_insert(0) += 1;
            }
        }
    }

    let mut scored: Vec<(&str, f64, f64)> = total_tf
        .iter()
        .map(|(&token, &tf)| {
            let idf = ((n_docs as f64) / (doc_freq[token] as f64)).ln();
            (token, (tf as f64) * idf, idf)
        })
        .collect();
    // Highest score first; ties go to the lexicographically smaller token.
    scored.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("scores are finite")
            .then_with(|| a.0.cmp(b.0))
    });
    scored.truncate(k);
    let terms = scored
        .into_iter()
        .map(|(token, _, idf)| (token.to_string(), idf))
        .collect();
    Ok(Vocabulary::from_terms(terms))
}

/// Feature matrix of one event: row `j` holds post `j`'s tf-idf vector over
/// the vocabulary columns. Out-of-vocabulary tokens are ignored.
pub fn featurize_event(event: &PropagationEvent, vocab: &Vocabulary) -> DenseMatrix {
    let mut x = DenseMatrix::zeros(event.posts.len(), vocab.size());
    for (row, post) in event.posts.iter().enumerate() {
        for token in &post.tokens {
            if let Some(col) = vocab.column_of(token) {
                let idf = vocab.terms[col].1;
                x.set(row, col, x.get(row, col) + idf);
            }
        }
    }
    x
}

/// Serialize as the text format: a `k=<count>` header, then one
/// `token<TAB>index<TAB>idf` line per term with 10 significant digits.
pub fn write_vocabulary(vocab: &Vocabulary, mut w: impl Write) -> Result<(), FeatureError> {
    writeln!(w, "k={}", vocab.size())?;
    for (i, (token, idf)) in vocab.terms.iter().enumerate() {
        writeln!(w, "{token}\t{i}\t{idf:.9e}")?;
    }
    Ok(())
}

/// Parse the text format produced by [`write_vocabulary`].
pub fn read_vocabulary(input: &str) -> Result<Vocabulary, FeatureError> {
    let mut lines = input.lines().enumerate();
    let (_, header) = lines.next().ok_or(FeatureError::Format {
        line: 1,
        message: "missing k=<count> header".into(),
    })?;
    let count: usize = header
        .strip_prefix("k=")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| FeatureError::Format {
            line: 1,
            message: format!("expected k=<count>, got {header:?}"),
        })?;

    let mut terms = Vec::with_capacity(count);
    for (lineno, line) in lines {
        let line_display = lineno + 1;
        let mut parts = line.split('\t');
        let (token, index, idf) = match (parts.next(), parts.next(), parts.next(), parts.next()) {
            (Some(t), Some(i), Some(d), None) => (t, i, d),
            _ => {
                return Err(FeatureError::Format {
                    line: line_display,
                    message: "expected token<TAB>index<TAB>idf".into(),
                })
            }
        };
        if token.is_empty() {
            return Err(FeatureError::Format {
                line: line_display,
                message: "empty token".into(),
            });
        }
        let index: usize = index.parse().map_err(|_| FeatureError::Format {
            line: line_display,
            message: format!("bad column index {index:?}"),
        })?;
        if index != terms.len() {
            return Err(FeatureError::Format {
                line: line_display,
                message: format!("expected column index {}, got {index}", terms.len()),
            });
        }
        let idf: f64 = idf.parse().map_err(|_| FeatureError::Format {
            line: line_display,
            message: format!("bad idf value {idf:?}"),
        })?;
        if !idf.is_finite() || idf < 0.0 {
            return Err(FeatureError::Format {
                line: line_display,
                message: format!("idf must be finite and nonnegative, got {idf}"),
            });
        }
        terms.push((token.to_string(), idf));
    }
    if terms.len() != count {
        return Err(FeatureError::Format {
            line: terms.len() + 1,
            message: format!("header says {count} terms, found {}", terms.len()),
        });
    }
    let vocab = Vocabulary::from_terms(terms);
    if vocab.index.len() != vocab.terms.len() {
        return Err(FeatureError::Format {
            line: 1,
            message: "duplicate token".into(),
        });
    }
    Ok(vocab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{ClassLabel, Post, PropagationEvent};

    fn event_with_texts(id: &str, texts: &[&str]) -> PropagationEvent {
        let posts = texts
            .iter()
            .enumerate()
            .map(|(i, text)| Post {
                index: i,
                delay_minutes: if i == 0 { 0.0 } else { i as f64 },
                tokens: tokenize(text),
            })
            .collect();
        let edges = (1..texts.len()).map(|c| (0, c)).collect();
        PropagationEvent {
            id: id.into(),
            posts,
            edges,
            label: ClassLabel::FalseRumor,
        }
    }

    #[test]
    fn tokenizer_lowercases_and_strips_punctuation() {
        assert_eq!(
            tokenize("Hello, World! it's FINE."),
            vec!["hello", "world", "its", "fine"]
        );
        assert_eq!(tokenize("  ...  "), Vec::<String>::new());
    }

    #[test]
    fn vocabulary_caps_never_pads() {
        let corpus = vec![event_with_texts("a", &["one two three"])];
        let vocab = build_vocabulary(&corpus, 5).unwrap();
        assert_eq!(vocab.size(), 3);
    }

    #[test]
    fn ubiquitous_token_scores_zero_and_ranks_last() {
        // "common" appears in every post -> idf = ln(1) = 0.
        let corpus = vec![
            event_with_texts("a", &["common alpha", "common beta"]),
            event_with_texts("b", &["common alpha"]),
        ];
        let vocab = build_vocabulary(&corpus, 10).unwrap();
        let common_col = vocab.column_of("common").unwrap();
        assert_eq!(vocab.terms()[common_col].1, 0.0);
        assert_eq!(common_col, vocab.size() - 1);
    }

    #[test]
    fn ties_break_lexicographically() {
        // "bb" and "aa" both occur once in one of two posts: same score.
        let corpus = vec![event_with_texts("a", &["bb aa", "cc"])];
        let vocab = build_vocabulary(&corpus, 2).unwrap();
        assert!(vocab.column_of("aa").unwrap() < vocab.column_of("bb").unwrap());
    }

    #[test]
    fn featurize_counts_times_idf() {
        let corpus = vec![event_with_texts("a", &["dog dog dog", "cat"])];
        let vocab = build_vocabulary(&corpus, 10).unwrap();
        let ev = &corpus[0];
        let x = featurize_event(ev, &vocab);
        assert_eq!((x.rows(), x.cols()), (2, vocab.size()));
        let dog = vocab.column_of("dog").unwrap();
        let idf_dog = vocab.terms()[dog].1;
        assert!((x.get(0, dog) - 3.0 * idf_dog).abs() < 1e-12);
        assert_eq!(x.get(1, dog), 0.0);
    }

    #[test]
    fn out_of_vocabulary_posts_are_zero_rows() {
        let corpus = vec![event_with_texts("a", &["alpha beta", "gamma"])];
        let vocab = build_vocabulary(&corpus, 10).unwrap();
        let other = event_with_texts("b", &["delta epsilon", "zeta"]);
        let x = featurize_event(&other, &vocab);
        assert!(x.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn empty_corpus_rejected() {
        assert!(matches!(
            build_vocabulary(&[], 5),
            Err(FeatureError::EmptyCorpus)
        ));
    }

    #[test]
    fn vocabulary_round_trips_through_text() {
        let corpus = vec![
            event_with_texts("a", &["alpha beta gamma", "alpha delta"]),
            event_with_texts("b", &["beta beta zeta"]),
        ];
        let vocab = build_vocabulary(&corpus, 4).unwrap();
        let mut buf = Vec::new();
        write_vocabulary(&vocab, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(&format!("k={}\n", vocab.size())));
        let parsed = read_vocabulary(&text).unwrap();
        assert_eq!(parsed.size(), vocab.size());
        for (a, b) in parsed.terms().iter().zip(vocab.terms()) {
            assert_eq!(a.0, b.0);
            assert!((a.1 - b.1).abs() < 1e-9);
        }
    }

    #[test]
    fn vocabulary_parser_rejects_garbage() {
        assert!(read_vocabulary("").is_err());
        assert!(read_vocabulary("k=two\n").is_err());
        assert!(read_vocabulary("k=1\nword\t0\n").is_err());
        assert!(read_vocabulary("k=1\nword\t5\t0.5\n").is_err());
        assert!(read_vocabulary("k=2\nword\t0\t0.5\n").is_err());
        assert!(read_vocabulary("k=1\nword\t0\t-1.0\n").is_err());
    }
}
