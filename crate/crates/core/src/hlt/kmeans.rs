//! Balanced spherical k-means over sparse vectors.
//!
//! Clusters are kept within one point of each other in size: with n points
//! and k clusters, exactly n mod k clusters receive ⌈n/k⌉ points and the
//! rest ⌊n/k⌋. Distances are cosine, computed on internally L2-normalized
//! copies of the input; zero vectors keep similarity 0 to everything.
//!
//! Each assignment pass scores every point against every centroid, orders
//! points by decreasing assignment margin (best similarity minus second
//! best), and gives each point the most similar centroid that still has
//! capacity. An iteration is only accepted if the objective (sum of cosine
//! distances to the assigned centroid) does not increase, so the recorded
//! objective trace is non-increasing.

use crate::error::{Error, Result};
use crate::rng::seeded_rng;
use crate::sparse::{SparseAccumulator, SparseVector};
use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rayon::prelude::*;

/// Outcome of a balanced clustering run.
#[derive(Debug, Clone)]
pub struct BalancedKmeans {
    /// Cluster index per point.
    pub assignment: Vec<u32>,
    /// Objective after the initial assignment and after each accepted
    /// iteration; non-increasing.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

impl BalancedKmeans {
    pub fn cluster_sizes(&self, k: usize) -> Vec<usize> {
        let mut sizes = vec![0usize; k];
        for &c in &self.assignment {
            sizes[c as usize] += 1;
        }
        sizes
    }
}

/// Runs balanced k-means; deterministic for a fixed seed.
pub fn balanced_kmeans(
    points: &[SparseVector],
    k: usize,
    seed: u64,
    max_iters: usize,
) -> Result<BalancedKmeans> {
    let n = points.len();
    if k == 0 || n == 0 || k > n {
        return Err(Error::TooManyClusters { k, n });
    }
    let normalized: Vec<SparseVector> = points.par_iter().map(SparseVector::l2_normalized).collect();
    let dim = normalized
        .iter()
        .filter_map(SparseVector::max_index)
        .max()
        .map_or(1, |m| m as usize + 1);

    let mut centroids = kmeans_plus_plus(&normalized, k, seed);
    let (mut assignment, mut objective) = assign_balanced(&normalized, &centroids, dim);
    let mut trace = vec![objective];
    let mut iterations = 0;
    let mut converged = false;

    for _ in 0..max_iters {
        iterations += 1;
        centroids = centroids_of(&normalized, &assignment, k);
        let (next, next_objective) = assign_balanced(&normalized, &centroids, dim);
        if next_objective > objective {
            // A capacity-constrained pass can regress; keep the better state.
            iterations -= 1;
            converged = true;
            break;
        }
        let unchanged = next == assignment;
        assignment = next;
        objective = next_objective;
        trace.push(objective);
        if unchanged {
            converged = true;
            break;
        }
    }

    Ok(BalancedKmeans {
        assignment,
        objective_trace: trace,
        iterations,
        converged,
    })
}

/// Spherical k-means++ seeding: the first centroid is uniform, later ones
/// are drawn with probability proportional to the squared cosine distance
/// to the nearest chosen centroid.
fn kmeans_plus_plus(points: &[SparseVector], k: usize, seed: u64) -> Vec<SparseVector> {
    let n = points.len();
    let mut rng = seeded_rng(seed);
    let mut centroids: Vec<SparseVector> = Vec::with_capacity(k);
    let mut chosen = vec![false; n];
    let mut best_sim = vec![0.0f32; n];

    let first = rng.gen_range(0..n);
    centroids.push(points[first].clone());
    chosen[first] = true;

    while centroids.len() < k {
        let latest = centroids.last().unwrap();
        best_sim
            .par_iter_mut()
            .zip(points)
            .for_each(|(s, p)| *s = s.max(p.dot(latest).min(1.0)));
        let weights: Vec<f64> = best_sim
            .iter()
            .zip(&chosen)
            .map(|(&s, &c)| {
                if c {
                    0.0
                } else {
                    let d = f64::from((1.0 - s).max(0.0));
                    d * d
                }
            })
            .collect();
        let pick = match WeightedIndex::new(&weights) {
            Ok(dist) => dist.sample(&mut rng),
            // All remaining points coincide with a centroid; take the
            // smallest unchosen index.
            Err(_) => chosen.iter().position(|&c| !c).expect("k <= n"),
        };
        chosen[pick] = true;
        centroids.push(points[pick].clone());
    }
    centroids
}

/// Normalized per-cluster means; members are summed in ascending point order.
fn centroids_of(points: &[SparseVector], assignment: &[u32], k: usize) -> Vec<SparseVector> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); k];
    for (i, &c) in assignment.iter().enumerate() {
        members[c as usize].push(i);
    }
    members
        .par_iter()
        .map(|idxs| {
            let mut acc = SparseAccumulator::new();
            for &i in idxs {
                acc.add_scaled(&points[i], 1.0);
            }
            acc.into_vector().l2_normalized()
        })
        .collect()
}

/// Capacity-constrained assignment pass. Returns the assignment and the
/// objective sum of cosine distances.
fn assign_balanced(
    points: &[SparseVector],
    centroids: &[SparseVector],
    dim: usize,
) -> (Vec<u32>, f64) {
    let n = points.len();
    let k = centroids.len();

    // Inverted index over centroid entries so each point's similarity row
    // costs the centroid mass on its own features only.
    let mut postings: Vec<Vec<(u32, f32)>> = vec![Vec::new(); dim];
    for (c, centroid) in centroids.iter().enumerate() {
        for (i, v) in centroid.iter() {
            postings[i as usize].push((c as u32, v));
        }
    }

    let sim_row = |point: &SparseVector, buf: &mut Vec<f32>| {
        buf.clear();
        buf.resize(k, 0.0);
        for (i, v) in point.iter() {
            for &(c, w) in &postings[i as usize] {
                buf[c as usize] += v * w;
            }
        }
    };

    // Best and second-best centroid per point.
    let top2: Vec<(u32, f32, f32)> = points
        .par_iter()
        .map_init(
            || Vec::with_capacity(k),
            |buf, point| {
                sim_row(point, buf);
                let (mut b, mut bs, mut ss) = (0u32, f32::NEG_INFINITY, f32::NEG_INFINITY);
                for (c, &s) in buf.iter().enumerate() {
                    if s > bs {
                        ss = bs;
                        bs = s;
                        b = c as u32;
                    } else if s > ss {
                        ss = s;
                    }
                }
                if k == 1 {
                    ss = bs;
                }
                (b, bs, ss)
            },
        )
        .collect();

    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        let ma = top2[a as usize].1 - top2[a as usize].2;
        let mb = top2[b as usize].1 - top2[b as usize].2;
        mb.total_cmp(&ma).then(a.cmp(&b))
    });

    let floor = n / k;
    let extras_quota = n % k;
    let mut counts = vec![0usize; k];
    let mut extras_used = 0usize;
    let mut assignment = vec![0u32; n];
    let mut objective = 0.0f64;
    let mut buf = Vec::with_capacity(k);

    let available = |c: u32, counts: &[usize], extras_used: usize| {
        counts[c as usize] < floor || (counts[c as usize] == floor && extras_used < extras_quota)
    };

    for &p in &order {
        let (best, best_sim, _) = top2[p as usize];
        let (c, sim) = if available(best, &counts, extras_used) {
            (best, best_sim)
        } else {
            // Re-score against the centroids that still have room.
            sim_row(&points[p as usize], &mut buf);
            let mut pick: Option<(u32, f32)> = None;
            for (c, &s) in buf.iter().enumerate() {
                let c = c as u32;
                if !available(c, &counts, extras_used) {
                    continue;
                }
                if pick.map_or(true, |(_, ps)| s > ps) {
                    pick = Some((c, s));
                }
            }
            pick.expect("capacity accounting guarantees an open cluster")
        };
        assignment[p as usize] = c;
        counts[c as usize] += 1;
        if counts[c as usize] > floor {
            extras_used += 1;
        }
        objective += f64::from((1.0 - sim).max(0.0));
    }
    (assignment, objective)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(idx: u32) -> SparseVector {
        SparseVector::from_pairs(vec![(idx, 1.0)]).unwrap()
    }

    #[test]
    fn k_one_puts_everything_together() {
        let points = vec![unit(0), unit(1), unit(2)];
        let r = balanced_kmeans(&points, 1, 0, 50).unwrap();
        assert_eq!(r.assignment, vec![0, 0, 0]);
    }

    #[test]
    fn k_equals_n_gives_singletons() {
        let points = vec![unit(0), unit(1), unit(2), unit(3)];
        let r = balanced_kmeans(&points, 4, 5, 50).unwrap();
        let mut sizes = r.cluster_sizes(4);
        sizes.sort_unstable();
        assert_eq!(sizes, vec![1, 1, 1, 1]);
    }

    #[test]
    fn rejects_k_above_n() {
        let points = vec![unit(0)];
        assert!(matches!(
            balanced_kmeans(&points, 2, 0, 50),
            Err(Error::TooManyClusters { k: 2, n: 1 })
        ));
    }

    /// Brute-force oracle: enumerate every balanced 2-partition of the four
    /// points and pick the one minimizing the within-cluster cosine distance.
    fn best_balanced_pairing(points: &[SparseVector]) -> Vec<Vec<usize>> {
        let norm: Vec<SparseVector> = points.iter().map(SparseVector::l2_normalized).collect();
        let objective = |group: &[usize]| {
            let mut acc = SparseAccumulator::new();
            for &i in group {
                acc.add_scaled(&norm[i], 1.0);
            }
            let c = acc.into_vector().l2_normalized();
            group.iter().map(|&i| f64::from(1.0 - norm[i].dot(&c))).sum::<f64>()
        };
        let mut best: Option<(f64, Vec<Vec<usize>>)> = None;
        for other in [1usize, 2, 3] {
            let a = vec![0, other];
            let b: Vec<usize> = (1..4).filter(|&i| i != other).collect();
            let obj = objective(&a) + objective(&b);
            if best.as_ref().map_or(true, |(o, _)| obj < *o) {
                best = Some((obj, vec![a, b]));
            }
        }
        best.unwrap().1
    }

    #[test]
    fn separates_two_unit_directions() {
        // two copies of e1 and two of e2; the optimum is the obvious pairing
        let points = vec![unit(1), unit(1), unit(2), unit(2)];
        let oracle = best_balanced_pairing(&points);
        assert_eq!(oracle, vec![vec![0, 1], vec![2, 3]]);

        for seed in 0..10u64 {
            let r = balanced_kmeans(&points, 2, seed, 50).unwrap();
            assert_eq!(r.assignment[0], r.assignment[1], "seed {seed}");
            assert_eq!(r.assignment[2], r.assignment[3], "seed {seed}");
            assert_ne!(r.assignment[0], r.assignment[2], "seed {seed}");
            let mut sizes = r.cluster_sizes(2);
            sizes.sort_unstable();
            assert_eq!(sizes, vec![2, 2]);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let points: Vec<SparseVector> = (0..37)
            .map(|i| {
                SparseVector::from_pairs(vec![(i % 7, 1.0 + (i % 3) as f32), ((i + 3) % 7, 0.5)])
                    .unwrap()
            })
            .collect();
        let a = balanced_kmeans(&points, 5, 99, 50).unwrap();
        let b = balanced_kmeans(&points, 5, 99, 50).unwrap();
        assert_eq!(a.assignment, b.assignment);
        assert_eq!(a.objective_trace, b.objective_trace);
    }

    #[test]
    fn objective_trace_never_increases() {
        let points: Vec<SparseVector> = (0..64u32)
            .map(|i| {
                let a = i % 11;
                let b = (a + 1 + i % 9) % 11; // offset in 1..=9, never collides with a
                SparseVector::from_pairs(vec![(a, 1.0), (b, (i % 4) as f32 + 0.5)]).unwrap()
            })
            .collect();
        for seed in 0..5u64 {
            let r = balanced_kmeans(&points, 7, seed, 50).unwrap();
            for w in r.objective_trace.windows(2) {
                assert!(w[1] <= w[0], "trace increased: {:?}", r.objective_trace);
            }
        }
    }

    #[test]
    fn sizes_stay_within_one() {
        for (n, k) in [(10usize, 3usize), (11, 4), (29, 5), (8, 8), (9, 2)] {
            let points: Vec<SparseVector> = (0..n)
                .map(|i| SparseVector::from_pairs(vec![((i % 6) as u32, 1.0 + i as f32)]).unwrap())
                .collect();
            let r = balanced_kmeans(&points, k, 1, 50).unwrap();
            let sizes = r.cluster_sizes(k);
            let floor = n / k;
            let ceil = n.div_ceil(k);
            assert!(sizes.iter().all(|&s| s == floor || s == ceil), "{sizes:?}");
            assert_eq!(sizes.iter().filter(|&&s| s == ceil).count(), if n % k == 0 { k } else { n % k });
        }
    }

    #[test]
    fn handles_zero_vectors() {
        let points = vec![unit(0), SparseVector::new(), unit(1), SparseVector::new()];
        let r = balanced_kmeans(&points, 2, 3, 50).unwrap();
        let mut sizes = r.cluster_sizes(2);
        sizes.sort_unstable();
        assert_eq!(sizes, vec![2, 2]);
    }
}
