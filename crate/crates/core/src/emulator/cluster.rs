//! PCA projection and seeded k-means used by the diversity query method.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;

const MAX_LLOYD_ITERS: usize = 100;
const CENTROID_TOL: f64 = 1e-8;

/// Projects row-major `rows` (n x d) onto the top `k` principal components.
///
/// Components are ordered by descending eigenvalue of the covariance of the
/// mean-centred data; each is signed so that its largest-magnitude loading
/// is positive.
pub fn pca_project(rows: &[Vec<f64>], k: usize) -> Vec<Vec<f64>> {
    let n = rows.len();
    if n == 0 {
        return Vec::new();
    }
    let d = rows[0].len();
    let k = k.min(d);
    let mut mean = vec![0.0; d];
    for r in rows {
        for (m, v) in mean.iter_mut().zip(r) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n as f64);
    let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
    let cov = centered.transpose() * &centered / (n.max(2) - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let components: Vec<Vec<f64>> = order[..k]
        .iter()
        .map(|&c| {
            let mut v: Vec<f64> = eig.eigenvectors.column(c).iter().copied().collect();
            let pivot = v
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if pivot < 0.0 {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect();

    (0..n)
        .map(|i| {
            components
                .iter()
                .map(|comp| (0..d).map(|j| centered[(i, j)] * comp[j]).sum())
                .collect()
        })
        .collect()
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding followed by Lloyd iterations. Returns the centroids.
pub fn kmeans<R: Rng + ?Sized>(points: &[Vec<f64>], k: usize, rng: &mut R) -> Vec<Vec<f64>> {
    let n = points.len();
    if k == 0 || n == 0 {
        return Vec::new();
    }
    let k = k.min(n);

    let mut chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen[first] = true;
    let mut centroids = vec![points[first].clone()];
    let mut d2: Vec<f64> = points.iter().map(|p| sq_dist(p, &points[first])).collect();
    while centroids.len() < k {
        let total: f64 = (0..n).filter(|&i| !chosen[i]).map(|i| d2[i]).sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for i in (0..n).filter(|&i| !chosen[i] && d2[i] > 0.0) {
                pick = Some(i);
                target -= d2[i];
                if target <= 0.0 {
                    break;
                }
            }
            pick.expect("positive total mass")
        } else {
            let free: Vec<usize> = (0..n).filter(|&i| !chosen[i]).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen[next] = true;
        for (i, p) in points.iter().enumerate() {
            d2[i] = d2[i].min(sq_dist(p, &points[next]));
        }
        centroids.push(points[next].clone());
    }

    let dim = points[0].len();
    let mut assignment = vec![0usize; n];
    for _ in 0..MAX_LLOYD_ITERS {
        for (i, p) in points.iter().enumerate() {
            assignment[i] = nearest(p, &centroids);
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignment) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(sq_dist(&updated, &centroids[c]).sqrt());
            centroids[c] = updated;
        }
        if shift <= CENTROID_TOL {
            break;
        }
    }
    centroids
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (c, centroid) in centroids.iter().enumerate() {
        let d = sq_dist(p, centroid);
        if d < best.1 {
            best = (c, d);
        }
    }
    best.0
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn pca_keeps_dimension_and_variance() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| {
                let t = i as f64;
                vec![t, 0.5 * t + (t * 1.3).sin()]
            })
            .collect();
        let proj = pca_project(&rows, 5);
        assert_eq!(proj[0].len(), 2);
        // a rotation preserves pairwise distances
        for (i, j) in [(0, 5), (3, 17), (8, 9)] {
            let a = sq_dist(&rows[i], &rows[j]);
            let b = sq_dist(&proj[i], &proj[j]);
            assert!((a - b).abs() < 1e-9);
        }
        // first component carries the larger variance
        let var = |c: usize| proj.iter().map(|r| r[c] * r[c]).sum::<f64>();
        assert!(var(0) >= var(1));
    }

    #[test]
    fn kmeans_splits_two_blobs() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![10.0, 10.0],
            vec![10.0, 10.1],
        ];
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = kmeans(&pts, 2, &mut rng);
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert!((c[0][0] - 0.05).abs() < 1e-12);
        assert!((c[1][1] - 10.05).abs() < 1e-12);
    }

    #[test]
    fn kmeans_with_k_equal_n_uses_every_point() {
        let pts: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64, (i * i) as f64]).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut c = kmeans(&pts, 6, &mut rng);
        c.sort_by(|a, b| a[0].total_cmp(&b[0]));
        assert_eq!(c, pts);
    }
}
