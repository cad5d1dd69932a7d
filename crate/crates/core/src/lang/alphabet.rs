use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::LangError;

/// The 33 stroke primitives of the modern Chinese base DSL: six basic strokes
/// followed by 27 turning strokes.
pub const STANDARD_STROKES: [&str; 33] = [
    "T", "N", "H", "S", "P", "D", "SP", "HZ", "HG", "HP", "HZT", "HZG", "HZW", "HZZ", "HZWG",
    "HZZZ", "HZZZG", "HPWG", "HXWG", "SZ", "ST", "SG", "SW", "SWG", "SWZ", "SZZ", "SZWG", "PD",
    "PZ", "TN", "WG", "XG", "HZZP",
];

/// Keyword for the list constructor; never a valid primitive name.
pub const LIST_KEYWORD: &str = "list";

/// An ordered set of primitive symbol names. Ids are positions in the list.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct PrimitiveAlphabet {
    names: Vec<String>,
    index: HashMap<String, u32>,
}

impl PrimitiveAlphabet {
    pub fn new<I, S>(names: I) -> Result<Self, LangError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if !is_valid_symbol(name) || name == LIST_KEYWORD {
                return Err(LangError::InvalidName(name.clone()));
            }
            if index.insert(name.clone(), i as u32).is_some() {
                return Err(LangError::DuplicateName(name.clone()));
            }
        }
        Ok(Self { names, index })
    }

    pub fn standard() -> Self {
        Self::new(STANDARD_STROKES).expect("standard stroke names are valid")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, id: u32) -> &str {
        &self.names[id as usize]
    }

    pub fn id(&self, name: &str) -> Option<u32> {
        self.index.get(name).copied()
    }

    pub fn contains(&self, name: &str) -> bool {
        self.index.contains_key(name)
    }
}

impl PartialEq for PrimitiveAlphabet {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
    }
}

impl Eq for PrimitiveAlphabet {}

impl TryFrom<Vec<String>> for PrimitiveAlphabet {
    type Error = LangError;

    fn try_from(names: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(names)
    }
}

impl From<PrimitiveAlphabet> for Vec<String> {
    fn from(alphabet: PrimitiveAlphabet) -> Self {
        alphabet.names
    }
}

/// Atoms may not contain whitespace, parentheses, `;`, or start with `#`.
pub(crate) fn is_valid_symbol(name: &str) -> bool {
    !name.is_empty()
        && !name.starts_with('#')
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '(' | ')' | ';' | ','))
}
