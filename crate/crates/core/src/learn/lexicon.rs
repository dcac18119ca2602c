//! Feature-name dictionary and sparse feature vectors.

use std::collections::{BTreeMap, HashMap};

/// Name of the always-present bias feature at index 0.
pub const BIAS: &str = "<bias>";

/// Maps feature names to dense indices. Grows during training; once frozen
/// unknown names have no index.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    names: Vec<String>,
    index: HashMap<String, usize>,
    frozen: bool,
}

impl Default for Lexicon {
    fn default() -> Self {
        Self::new()
    }
}

impl Lexicon {
    pub fn new() -> Self {
        Self { names: vec![BIAS.to_string()], index: HashMap::from([(BIAS.to_string(), 0)]), frozen: false }
    }

    pub fn lookup(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// Index of `name`, adding it unless the lexicon is frozen.
    pub fn intern(&mut self, name: &str) -> Option<usize> {
        if let Some(i) = self.lookup(name) {
            return Some(i);
        }
        if self.frozen {
            return None;
        }
        let i = self.names.len();
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), i);
        Some(i)
    }

    pub fn freeze(&mut self) {
        self.frozen = true;
    }

    pub fn is_frozen(&self) -> bool {
        self.frozen
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }
}

/// Sparse vector of (index, value) pairs, sorted by index.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FeatureVector {
    entries: Vec<(usize, f64)>,
}

impl FeatureVector {
    /// Builds a vector, summing values that share an index.
    pub fn from_pairs(pairs: impl IntoIterator<Item = (usize, f64)>) -> Self {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            *acc.entry(i).or_insert(0.0) += v;
        }
        Self { entries: acc.into_iter().collect() }
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, index: usize) -> Option<f64> {
        self.entries.binary_search_by_key(&index, |e| e.0).ok().map(|p| self.entries[p].1)
    }

    /// Dot product with dense weights; indices past the end count as zero.
    pub fn dot(&self, weights: &[f64]) -> f64 {
        self.entries.iter().filter_map(|&(i, v)| weights.get(i).map(|w| w * v)).sum()
    }

    pub fn max_index(&self) -> Option<usize> {
        self.entries.last().map(|e| e.0)
    }
}
