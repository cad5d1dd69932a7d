use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Feature = [f64; 8];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iterations: usize,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iterations: 300,
        }
    }
}

/// Result of the best restart.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub centroids: Vec<Feature>,
    pub assignment: Vec<usize>,
    /// Within-cluster sum of squared distances.
    pub inertia: f64,
    /// Inertia after each assignment step of the winning restart.
    pub history: Vec<f64>,
}

/// Lloyd's k-means with k-means++ seeding, keeping the restart with the
/// lowest inertia (the earliest on ties). All restarts draw from a single
/// ChaCha8 stream seeded with `seed`.
pub fn kmeans(points: &[Feature], k: usize, seed: u64, config: &KMeansConfig) -> Result<Clustering> {
    if k == 0 {
        return Err(Error::Invalid("k must be positive".into()));
    }
    if points.len() < k {
        return Err(Error::Invalid(format!(
            "cannot form {k} clusters from {} strokes",
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Clustering> = None;
    for _ in 0..config.restarts.max(1) {
        let init = plus_plus(points, k, &mut rng);
        let run = lloyd(points, init, config.max_iterations);
        if best.as_ref().is_none_or(|b| run.inertia < b.inertia) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// Index of the nearest centroid, the lowest index on ties.
pub fn nearest(centroids: &[Feature], x: &Feature) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.iter().enumerate() {
        let d = sq_dist(c, x);
        if d < best.1 {
            best = (i, d);
        }
    }
    best
}

pub(crate) fn sq_dist(a: &Feature, b: &Feature) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++: the first centre uniformly, each next one with probability
/// proportional to squared distance from the nearest chosen centre.
fn plus_plus(points: &[Feature], k: usize, rng: &mut ChaCha8Rng) -> Vec<Feature> {
    let mut centres = vec![points[rng.random_range(0..points.len())]];
    let mut d: Vec<f64> = points.iter().map(|p| sq_dist(p, &centres[0])).collect();
    while centres.len() < k {
        let next = match WeightedIndex::new(&d) {
            Ok(w) => w.sample(rng),
            // Every point coincides with a centre already.
            Err(_) => rng.random_range(0..points.len()),
        };
        centres.push(points[next]);
        for (di, p) in d.iter_mut().zip(points) {
            *di = di.min(sq_dist(p, &points[next]));
        }
    }
    centres
}

fn lloyd(points: &[Feature], mut centroids: Vec<Feature>, max_iterations: usize) -> Clustering {
    let k = centroids.len();
    let mut assignment: Vec<usize> = Vec::new();
    let mut history = Vec::new();
    let rounds = max_iterations.max(1);
    for round in 0..rounds {
        let scored: Vec<(usize, f64)> = points.par_iter().map(|p| nearest(&centroids, p)).collect();
        let next: Vec<usize> = scored.iter().map(|s| s.0).collect();
        history.push(scored.iter().map(|s| s.1).sum());
        if next == assignment {
            break;
        }
        assignment = next;
        if round + 1 == rounds {
            break;
        }
        centroids = update(points, &mut assignment, &scored, k, &centroids);
    }
    let inertia = points
        .iter()
        .zip(&assignment)
        .map(|(p, &a)| sq_dist(p, &centroids[a]))
        .sum();
    Clustering {
        centroids,
        assignment,
        inertia,
        history,
    }
}

/// Cluster means; an empty cluster takes over the point farthest from its
/// own centroid among clusters that can spare one.
fn update(points: &[Feature], assignment: &mut [usize], scored: &[(usize, f64)], k: usize, old: &[Feature]) -> Vec<Feature> {
    let mut counts = vec![0usize; k];
    for &a in assignment.iter() {
        counts[a] += 1;
    }
    let mut taken = vec![false; points.len()];
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let far = (0..points.len())
            .filter(|&i| !taken[i] && counts[assignment[i]] > 1 && scored[i].1 > 0.0)
            .max_by(|&a, &b| scored[a].1.total_cmp(&scored[b].1).then(b.cmp(&a)));
        if let Some(i) = far {
            counts[assignment[i]] -= 1;
            assignment[i] = c;
            counts[c] = 1;
            taken[i] = true;
        }
    }
    let mut sums = vec![[0.0; 8]; k];
    for (p, &a) in points.iter().zip(assignment.iter()) {
        for (s, x) in sums[a].iter_mut().zip(p) {
            *s += x;
        }
    }
    sums.iter()
        .zip(&counts)
        .zip(old)
        .map(|((s, &n), o)| if n == 0 { *o } else { s.map(|v| v / n as f64) })
        .collect()
}

/// Adjusted Rand index between two labelings of the same items.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let ka = a.iter().max().map_or(0, |m| m + 1);
    let kb = b.iter().max().map_or(0, |m| m + 1);
    let mut table = vec![vec![0u64; kb]; ka];
    for (&x, &y) in a.iter().zip(b) {
        table[x][y] += 1;
    }
    let pairs = |v: u64| (v * v.saturating_sub(1)) as f64 / 2.0;
    let index: f64 = table.iter().flatten().map(|&v| pairs(v)).sum();
    let rows: f64 = table.iter().map(|r| pairs(r.iter().sum())).sum();
    let cols: f64 = (0..kb).map(|j| pairs(table.iter().map(|r| r[j]).sum())).sum();
    let total = pairs(n as u64);
    let expected = rows * cols / total;
    let max = (rows + cols) / 2.0;
    if max == expected {
        return 1.0;
    }
    (index - expected) / (max - expected)
}

#[cfg(test)]
mod tests {
    use proptest::prelude::*;
    use rand::Rng;
    use rand_distr::Normal;

    use super::*;

    fn blobs(seed: u64, k: usize, per: usize, sigma: f64) -> (Vec<Feature>, Vec<usize>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, sigma).unwrap();
        let centres: Vec<Feature> = (0..k).map(|_| std::array::from_fn(|_| rng.random::<f64>() * 4.0)).collect();
        let mut pts = Vec::new();
        let mut labels = Vec::new();
        for i in 0..k * per {
            let c = i % k;
            pts.push(std::array::from_fn(|d| centres[c][d] + noise.sample(&mut rng)));
            labels.push(c);
        }
        (pts, labels)
    }

    #[test]
    fn ari_reference_values() {
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[1, 1, 0, 0]), 1.0);
        // Contingency [[1,1],[0,2]]: index 1, row pairs 2, column pairs 3,
        // 6 pairs in all, so expected 1 and max 2.5.
        assert_eq!(adjusted_rand_index(&[0, 0, 1, 1], &[0, 1, 1, 1]), 0.0);
        // [[2,1],[0,3]]: index 4, rows 6, columns 1 + 6 = 7, 15 pairs.
        let expected = 6.0 * 7.0 / 15.0;
        let ari = adjusted_rand_index(&[0, 0, 0, 1, 1, 1], &[0, 0, 1, 1, 1, 1]);
        assert!((ari - (4.0 - expected) / (6.5 - expected)).abs() < 1e-12);
        assert_eq!(adjusted_rand_index(&[0, 0, 0], &[0, 0, 0]), 1.0);
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let (pts, labels) = blobs(1, 5, 30, 0.01);
        let c = kmeans(&pts, 5, 42, &KMeansConfig::default()).unwrap();
        assert_eq!(adjusted_rand_index(&c.assignment, &labels), 1.0);
    }

    #[test]
    fn one_cluster_per_point() {
        let (pts, _) = blobs(2, 7, 1, 0.5);
        let c = kmeans(&pts, 7, 0, &KMeansConfig::default()).unwrap();
        assert_eq!(c.inertia, 0.0);
        let mut a = c.assignment.clone();
        a.sort();
        assert_eq!(a, (0..7).collect::<Vec<_>>());
    }

    #[test]
    fn too_few_points_or_zero_k() {
        let (pts, _) = blobs(3, 2, 1, 0.1);
        assert!(kmeans(&pts, 3, 0, &KMeansConfig::default()).is_err());
        assert!(kmeans(&pts, 0, 0, &KMeansConfig::default()).is_err());
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let pts = vec![[1.0; 8]; 6];
        let c = kmeans(&pts, 3, 0, &KMeansConfig::default()).unwrap();
        assert_eq!(c.inertia, 0.0);
        assert!(c.assignment.iter().all(|&a| a < 3));
    }

    #[test]
    fn empty_cluster_takes_the_farthest_point() {
        let pts = vec![[0.0; 8], [0.1; 8], [5.0; 8]];
        let mut assignment = vec![0, 0, 0];
        let scored: Vec<(usize, f64)> = pts.iter().map(|p| (0, sq_dist(p, &[0.0; 8]))).collect();
        let c = update(&pts, &mut assignment, &scored, 2, &[[0.0; 8], [9.0; 8]]);
        assert_eq!(assignment, vec![0, 0, 1]);
        assert_eq!(c[1], [5.0; 8]);
        assert!((c[0][0] - 0.05).abs() < 1e-12);
    }

    #[test]
    fn same_seed_same_result_across_pool_sizes() {
        let (pts, _) = blobs(4, 6, 40, 0.3);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| kmeans(&pts, 6, 9, &KMeansConfig::default()).unwrap())
        };
        assert_eq!(run(1), run(4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn inertia_never_increases(seed: u64, k in 1usize..6, per in 2usize..20) {
            let (pts, _) = blobs(seed, k + 1, per, 0.5);
            let config = KMeansConfig { restarts: 1, max_iterations: 50 };
            let c = kmeans(&pts, k, seed, &config).unwrap();
            prop_assert!(c.history.len() <= 50);
            for w in c.history.windows(2) {
                prop_assert!(w[1] <= w[0] * (1.0 + 1e-12) + 1e-12, "{:?}", c.history);
            }
            prop_assert!((c.inertia - c.history[c.history.len() - 1]).abs() <= 1e-9 * c.inertia.max(1.0));
            for (p, &a) in pts.iter().zip(&c.assignment) {
                prop_assert_eq!(nearest(&c.centroids, p).0, a);
            }
        }
    }
}
