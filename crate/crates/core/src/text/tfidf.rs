//! Sparse TF-IDF vectors with smoothed IDF and L2 normalization.

use std::collections::{BTreeMap, BTreeSet};

use crate::scalar::Scalar;

use super::TextError;

/// Lowercase, then split on runs of non-alphanumeric characters.
pub fn tokenize(text: &str) -> Vec<String> {
    text.to_lowercase()
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_string)
        .collect()
}

/// L2-normalized sparse vector, entries sorted by term id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct TfidfVector<T> {
    entries: Vec<(usize, T)>,
}

impl<T: Scalar> TfidfVector<T> {
    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(usize, T)] {
        &self.entries
    }

    pub fn norm(&self) -> T {
        self.entries
            .iter()
            .fold(T::zero(), |acc, &(_, w)| acc + w * w)
            .sqrt()
    }
}

/// Cosine similarity of two vectors from the same vectorizer, in `[0, 1]`.
///
/// Both inputs are unit length (or zero), so this is a sparse dot product.
pub fn cosine_similarity<T: Scalar>(a: &TfidfVector<T>, b: &TfidfVector<T>) -> T {
    let (mut i, mut j) = (0, 0);
    let mut dot = T::zero();
    while i < a.entries.len() && j < b.entries.len() {
        let (ta, wa) = a.entries[i];
        let (tb, wb) = b.entries[j];
        match ta.cmp(&tb) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                dot = dot + wa * wb;
                i += 1;
                j += 1;
            }
        }
    }
    dot.max(T::zero()).min(T::one())
}

/// Vocabulary and IDF weights fitted on a sentence corpus. Immutable after
/// fitting.
#[derive(Debug, Clone)]
pub struct Vectorizer<T> {
    vocabulary: BTreeMap<String, usize>,
    idf: Vec<T>,
    corpus_size: usize,
}

impl<T: Scalar> Vectorizer<T> {
    /// Fit on `corpus`, one entry per sentence.
    ///
    /// `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, where `df` counts the
    /// sentences containing `t`.
    pub fn fit<S: AsRef<str>>(corpus: &[S]) -> Result<Self, TextError> {
        if corpus.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for doc in corpus {
            let uniq: BTreeSet<String> = tokenize(doc.as_ref()).into_iter().collect();
            for t in uniq {
                *df.entry(t).or_insert(0) += 1;
            }
        }
        let n = T::from_count(corpus.len());
        let mut vocabulary = BTreeMap::new();
        let mut idf = Vec::with_capacity(df.len());
        for (id, (term, count)) in df.into_iter().enumerate() {
            let w = ((T::one() + n) / (T::one() + T::from_count(count))).ln() + T::one();
            vocabulary.insert(term, id);
            idf.push(w);
        }
        Ok(Self {
            vocabulary,
            idf,
            corpus_size: corpus.len(),
        })
    }

    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn vocabulary_len(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn idf(&self, term: &str) -> Option<T> {
        self.vocabulary.get(term).map(|&i| self.idf[i])
    }

    /// Raw-count TF times IDF, L2-normalized. Out-of-vocabulary tokens are
    /// ignored; a sentence with no known tokens maps to the zero vector.
    pub fn transform(&self, text: &str) -> TfidfVector<T> {
        let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
        for tok in tokenize(text) {
            if let Some(&id) = self.vocabulary.get(&tok) {
                *tf.entry(id).or_insert(0) += 1;
            }
        }
        let mut entries: Vec<(usize, T)> = tf
            .into_iter()
            .map(|(id, c)| (id, T::from_count(c) * self.idf[id]))
            .collect();
        let norm = entries
            .iter()
            .fold(T::zero(), |acc, &(_, w)| acc + w * w)
            .sqrt();
        if norm > T::zero() {
            for e in &mut entries {
                e.1 = e.1 / norm;
            }
        } else {
            entries.clear();
        }
        TfidfVector { entries }
    }

    pub fn similarity(&self, a: &str, b: &str) -> T {
        cosine_similarity(&self.transform(a), &self.transform(b))
    }

    /// Whether some candidate reaches `threshold` against `query` under this
    /// fitted vectorizer.
    pub fn has_match_in<S: AsRef<str>>(&self, query: &str, candidates: &[S], threshold: T) -> bool {
        let q = self.transform(query);
        candidates
            .iter()
            .any(|c| cosine_similarity(&q, &self.transform(c.as_ref())) >= threshold)
    }
}
