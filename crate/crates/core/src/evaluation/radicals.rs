use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::Library;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Radical {
    pub id: String,
    pub strokes: Vec<String>,
}

/// Expert radicals with their stroke sequences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Radical>", into = "Vec<Radical>")]
pub struct RadicalInventory {
    radicals: Vec<Radical>,
}

impl RadicalInventory {
    pub fn new(radicals: Vec<Radical>) -> Result<Self> {
        let mut seen = HashSet::new();
        for r in &radicals {
            if r.strokes.is_empty() {
                return Err(Error::Invalid(format!("radical `{}` has no strokes", r.id)));
            }
            if !seen.insert(r.id.as_str()) {
                return Err(Error::Invalid(format!("duplicate radical `{}`", r.id)));
            }
        }
        Ok(Self { radicals })
    }

    pub fn radicals(&self) -> &[Radical] {
        &self.radicals
    }

    pub fn len(&self) -> usize {
        self.radicals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radicals.is_empty()
    }
}

impl TryFrom<Vec<Radical>> for RadicalInventory {
    type Error = Error;

    fn try_from(radicals: Vec<Radical>) -> Result<Self> {
        Self::new(radicals)
    }
}

impl From<RadicalInventory> for Vec<Radical> {
    fn from(inv: RadicalInventory) -> Self {
        inv.radicals
    }
}

/// The learned function whose own strokes come closest to an undiscovered
/// radical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NearMiss {
    pub radical: String,
    pub nearest: Option<String>,
    /// Edit distance in strokes; the radical length when nothing is learned.
    pub distance: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadicalAlignment {
    /// `(radical id, function name)` in inventory order.
    pub matched: Vec<(String, String)>,
    pub unmatched: Vec<NearMiss>,
    pub discovered_fraction: f64,
}

/// A radical is discovered when some learned function's body, with every
/// parameter left empty, writes exactly its strokes. The earliest such
/// function is reported.
pub fn align_radicals(library: &Library, inventory: &RadicalInventory) -> Result<RadicalAlignment> {
    if inventory.is_empty() {
        return Err(Error::Invalid("radical inventory is empty".into()));
    }
    let base = library.base();
    let own: Vec<Vec<&str>> = library
        .templates()
        .iter()
        .map(|t| t.fixed_strokes().into_iter().map(|s| base.name(s)).collect())
        .collect();
    let mut first: HashMap<&[&str], usize> = HashMap::new();
    for (i, strokes) in own.iter().enumerate() {
        first.entry(strokes.as_slice()).or_insert(i);
    }

    let mut matched = Vec::new();
    let mut unmatched = Vec::new();
    for r in inventory.radicals() {
        let key: Vec<&str> = r.strokes.iter().map(String::as_str).collect();
        if let Some(&i) = first.get(key.as_slice()) {
            matched.push((r.id.clone(), library.function(i).name.clone()));
            continue;
        }
        let nearest = own
            .iter()
            .enumerate()
            .map(|(i, strokes)| (strsim::generic_levenshtein(&key, strokes), i))
            .min();
        unmatched.push(NearMiss {
            radical: r.id.clone(),
            nearest: nearest.map(|(_, i)| library.function(i).name.clone()),
            distance: nearest.map_or(key.len(), |(d, _)| d),
        });
    }
    Ok(RadicalAlignment {
        discovered_fraction: matched.len() as f64 / inventory.len() as f64,
        matched,
        unmatched,
    })
}
