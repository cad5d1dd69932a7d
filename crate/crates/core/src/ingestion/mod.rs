//! Corpora from raw stroke trajectories: each stroke is fitted with a cubic
//! Bézier curve, the curves are clustered into a primitive alphabet, and each
//! glyph becomes the list of its strokes' cluster names.

mod bezier;
mod kmeans;

pub use bezier::*;
pub use kmeans::*;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lang::{Corpus, Expr, Library, PrimitiveAlphabet};

/// Pen trajectories of one glyph, one polyline per stroke in writing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawTrajectory")]
pub struct Trajectory {
    pub id: String,
    pub strokes: Vec<Vec<Point>>,
}

#[derive(Deserialize)]
struct RawTrajectory {
    id: String,
    strokes: Vec<Vec<Point>>,
}

impl TryFrom<RawTrajectory> for Trajectory {
    type Error = Error;

    fn try_from(raw: RawTrajectory) -> Result<Self> {
        Trajectory::new(raw.id, raw.strokes)
    }
}

impl Trajectory {
    pub fn new(id: impl Into<String>, strokes: Vec<Vec<Point>>) -> Result<Self> {
        let id = id.into();
        if strokes.is_empty() {
            return Err(Error::Invalid(format!("glyph `{id}` has no strokes")));
        }
        for (i, s) in strokes.iter().enumerate() {
            if s.len() < 2 {
                return Err(Error::Invalid(format!("glyph `{id}` stroke {i}: fewer than 2 points")));
            }
            if s.iter().flatten().any(|v| !v.is_finite()) {
                return Err(Error::Invalid(format!("glyph `{id}` stroke {i}: non-finite coordinate")));
            }
        }
        Ok(Self { id, strokes })
    }
}

/// A primitive alphabet learned by clustering stroke features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAlphabet")]
pub struct DerivedAlphabet {
    pub k: usize,
    pub centroids: Vec<Feature>,
    pub names: Vec<String>,
    /// Cluster of each clustered stroke, in input order. Not serialized.
    #[serde(skip)]
    pub assignment: Vec<usize>,
}

#[derive(Deserialize)]
struct RawAlphabet {
    k: usize,
    centroids: Vec<Feature>,
    names: Vec<String>,
}

impl TryFrom<RawAlphabet> for DerivedAlphabet {
    type Error = Error;

    fn try_from(raw: RawAlphabet) -> Result<Self> {
        if raw.k == 0 || raw.centroids.len() != raw.k || raw.names.len() != raw.k {
            return Err(Error::Invalid(format!(
                "alphabet declares k = {} but has {} centroids and {} names",
                raw.k,
                raw.centroids.len(),
                raw.names.len()
            )));
        }
        if raw.centroids.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::Invalid("alphabet centroid has a non-finite coordinate".into()));
        }
        PrimitiveAlphabet::new(raw.names.iter().cloned())?;
        Ok(Self {
            k: raw.k,
            centroids: raw.centroids,
            names: raw.names,
            assignment: Vec::new(),
        })
    }
}

impl DerivedAlphabet {
    pub fn primitives(&self) -> PrimitiveAlphabet {
        PrimitiveAlphabet::new(self.names.iter().cloned()).expect("names validated on construction")
    }

    /// Nearest cluster of a stroke and its Euclidean feature distance.
    pub fn classify(&self, stroke: &BezierStroke) -> (usize, f64) {
        let (c, d) = nearest(&self.centroids, &stroke.features());
        (c, d.sqrt())
    }
}

/// Primitive names `c00, c01, ...`, zero-padded to the width of `k - 1`.
pub fn cluster_names(k: usize) -> Vec<String> {
    let width = k.saturating_sub(1).to_string().len().max(2);
    (0..k).map(|i| format!("c{i:0width$}")).collect()
}

/// Fits every stroke of every glyph, in parallel, keeping input order.
pub fn fit_strokes(trajectories: &[Trajectory], options: &FitOptions) -> Result<Vec<Vec<BezierStroke>>> {
    trajectories
        .par_iter()
        .map(|t| {
            t.strokes
                .par_iter()
                .map(|s| fit_bezier(s, *options))
                .collect::<Result<Vec<_>>>()
        })
        .collect()
}

/// K-means over the translation-normalized control points of `strokes`.
pub fn cluster_strokes(strokes: &[BezierStroke], k: usize, seed: u64, config: &KMeansConfig) -> Result<DerivedAlphabet> {
    let features: Vec<Feature> = strokes.iter().map(BezierStroke::features).collect();
    let c = kmeans(&features, k, seed, config)?;
    Ok(DerivedAlphabet {
        k,
        centroids: c.centroids,
        names: cluster_names(k),
        assignment: c.assignment,
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EncodeOptions {
    /// Largest feature distance at which a stroke still counts as an
    /// instance of its nearest primitive. `None` accepts every stroke.
    pub max_distance: Option<f64>,
}

/// A glyph left out of an encoded corpus.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub glyph: String,
    pub stroke: usize,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Encoded {
    pub corpus: Corpus,
    pub excluded: Vec<Exclusion>,
}

/// Encodes glyphs as `(list c.. c..)` programs, one primitive per stroke in
/// stroke order. Glyphs with a stroke farther than the threshold from every
/// centroid are excluded and reported.
pub fn encode_corpus(trajectories: &[Trajectory], alphabet: &DerivedAlphabet, fit: &FitOptions, options: &EncodeOptions) -> Result<Encoded> {
    let fitted = fit_strokes(trajectories, fit)?;
    encode_fitted(trajectories, &fitted, alphabet, options)
}

/// [`encode_corpus`] over strokes that are already fitted.
pub fn encode_fitted(
    trajectories: &[Trajectory],
    fitted: &[Vec<BezierStroke>],
    alphabet: &DerivedAlphabet,
    options: &EncodeOptions,
) -> Result<Encoded> {
    let primitives = alphabet.primitives();
    let library = Library::new(primitives.clone());
    let mut corpus = Corpus::new(primitives);
    let mut excluded = Vec::new();
    for (t, strokes) in trajectories.iter().zip(fitted) {
        let classes: Vec<(usize, f64)> = strokes.iter().map(|s| alphabet.classify(s)).collect();
        let far = options
            .max_distance
            .and_then(|max| classes.iter().position(|&(_, d)| d > max));
        if let Some(stroke) = far {
            log::warn!(
                "glyph `{}` excluded: stroke {stroke} is {:.4} from the nearest primitive",
                t.id,
                classes[stroke].1
            );
            excluded.push(Exclusion {
                glyph: t.id.clone(),
                stroke,
                distance: classes[stroke].1,
            });
            continue;
        }
        let program = Expr::list(classes.iter().map(|&(c, _)| alphabet.names[c].as_str()));
        corpus.insert(t.id.clone(), program, &library)?;
    }
    Ok(Encoded { corpus, excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    pub k: usize,
    pub seed: u64,
    pub fit: FitOptions,
    pub kmeans: KMeansConfig,
    pub encode: EncodeOptions,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            k: 33,
            seed: 0,
            fit: FitOptions::default(),
            kmeans: KMeansConfig::default(),
            encode: EncodeOptions::default(),
        }
    }
}

/// Fits, clusters and encodes one script: the alphabet is derived from its
/// own strokes.
pub fn ingest(trajectories: &[Trajectory], config: &IngestConfig) -> Result<(DerivedAlphabet, Encoded)> {
    let fitted = fit_strokes(trajectories, &config.fit)?;
    let flat: Vec<BezierStroke> = fitted.iter().flatten().cloned().collect();
    let alphabet = cluster_strokes(&flat, config.k, config.seed, &config.kmeans)?;
    let encoded = encode_fitted(trajectories, &fitted, &alphabet, &config.encode)?;
    Ok((alphabet, encoded))
}

/// Clusters the strokes of several scripts together and encodes each one
/// with the shared alphabet.
pub fn ingest_joint(scripts: &[Vec<Trajectory>], config: &IngestConfig) -> Result<(DerivedAlphabet, Vec<Encoded>)> {
    let fitted: Vec<Vec<Vec<BezierStroke>>> = scripts
        .iter()
        .map(|s| fit_strokes(s, &config.fit))
        .collect::<Result<_>>()?;
    let flat: Vec<BezierStroke> = fitted.iter().flatten().flatten().cloned().collect();
    let alphabet = cluster_strokes(&flat, config.k, config.seed, &config.kmeans)?;
    let encoded = scripts
        .iter()
        .zip(&fitted)
        .map(|(s, f)| encode_fitted(s, f, &alphabet, &config.encode))
        .collect::<Result<_>>()?;
    Ok((alphabet, encoded))
}
