use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Bidirectional map between item ids and dense node indices.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    ids: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocab {
    pub fn new(ids: Vec<String>) -> Result<Self> {
        let mut index = HashMap::with_capacity(ids.len());
        for (i, id) in ids.iter().enumerate() {
            if id.is_empty() {
                return Err(Error::invalid(format!("empty item id at index {i}")));
            }
            if index.insert(id.clone(), i).is_some() {
                return Err(Error::invalid(format!("duplicate item id {id:?}")));
            }
        }
        Ok(Vocab { ids, index })
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.ids[i]
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    /// Sub-vocabulary for ascending original indices `keep`.
    pub fn subset(&self, keep: &[usize]) -> Vocab {
        Vocab::from(keep.iter().map(|&i| self.ids[i].clone()).collect::<Vec<_>>())
    }
}

impl From<Vec<String>> for Vocab {
    fn from(ids: Vec<String>) -> Self {
        let index = ids.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Vocab { ids, index }
    }
}

impl From<Vocab> for Vec<String> {
    fn from(v: Vocab) -> Self {
        v.ids
    }
}
