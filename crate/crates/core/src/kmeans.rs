//! Small dense k-means with k-means++ seeding.

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
}

impl Clustering {
    /// Member indices per cluster; empty clusters yield empty lists.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.centroids.len()];
        for (i, &c) in self.assignments.iter().enumerate() {
            out[c].push(i);
        }
        out
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = sq_dist(point, c);
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn seed_plus_plus<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let mut centroids = vec![points[rng.random_range(0..points.len())].clone()];
    let mut dist: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = dist.iter().sum();
        let next = if total > 0.0 {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &d) in dist.iter().enumerate() {
                if u < d {
                    chosen = i;
                    break;
                }
                u -= d;
            }
            chosen
        } else {
            rng.random_range(0..points.len())
        };
        centroids.push(points[next].clone());
        let c = centroids.last().unwrap();
        for (d, p) in dist.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }
    centroids
}

/// Lloyd iterations from k-means++ seeds. Empty clusters keep their previous
/// centroid; distance ties go to the lowest cluster index.
pub fn kmeans<R: Rng + ?Sized>(
    points: &[Vec<f64>],
    k: usize,
    iterations: usize,
    rng: &mut R,
) -> Clustering {
    assert!(!points.is_empty(), "k-means needs at least one point");
    let k = k.clamp(1, points.len());
    let dims = points[0].len();
    let mut centroids = seed_plus_plus(points, k, rng);
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();

    for _ in 0..iterations {
        let mut sums = vec![vec![0.0; dims]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j].iter().map(|s| s / counts[j] as f64).collect();
            }
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids).0).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Clustering {
        assignments,
        centroids,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStream;

    fn blobs() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for (cx, cy) in [(0.1, 0.1), (0.9, 0.1), (0.5, 0.9)] {
            for i in 0..5 {
                pts.push(vec![cx + 0.01 * i as f64, cy - 0.005 * i as f64]);
            }
        }
        pts
    }

    #[test]
    fn separates_three_blobs() {
        for seed in 0..20 {
            let c = kmeans(&blobs(), 3, 20, &mut RngStream::new(seed, 0));
            let members = c.members();
            assert!(members.iter().all(|m| m.len() == 5), "seed {seed}: {members:?}");
        }
    }

    #[test]
    fn identical_points() {
        let pts = vec![vec![0.3, 0.3]; 6];
        let c = kmeans(&pts, 4, 20, &mut RngStream::new(1, 0));
        assert_eq!(c.centroids.len(), 4);
        assert!(c.assignments.iter().all(|&a| a == 0));
    }

    #[test]
    fn k_clamped_to_population() {
        let c = kmeans(&blobs()[..2], 10, 20, &mut RngStream::new(1, 0));
        assert_eq!(c.centroids.len(), 2);
    }
}
