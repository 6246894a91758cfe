//! Spherical k-means: k-means under cosine distance with deterministic
//! seeding and lowest-index tie breaking.

use crate::num::Real;

pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// Cosine similarity; zero when either vector is zero.
pub fn cosine<T: Real>(a: &[T], b: &[T]) -> T {
    let (na, nb) = (norm(a), norm(b));
    if na == T::zero() || nb == T::zero() {
        T::zero()
    } else {
        dot(a, b) / (na * nb)
    }
}

/// Scales to unit length; zero vectors stay zero.
pub fn normalized<T: Real>(v: &[T]) -> Vec<T> {
    let n = norm(v);
    if n == T::zero() {
        v.to_vec()
    } else {
        v.iter().map(|x| *x / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering<T> {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Vec<T>>,
    pub iterations: usize,
}

fn nearest<T: Real>(point: &[T], centroids: &[Vec<T>]) -> usize {
    let mut best = 0;
    let mut best_sim = T::neg_infinity();
    for (j, c) in centroids.iter().enumerate() {
        let sim = cosine(point, c);
        if sim > best_sim {
            best_sim = sim;
            best = j;
        }
    }
    best
}

/// Runs k-means under cosine distance. `seeds` are point indices used as
/// the initial centroids (k = `seeds.len()`). A centroid is the mean of its
/// members; an emptied cluster keeps its previous centroid. Stops when
/// assignments are stable or after `max_iter` rounds.
pub fn spherical_kmeans<T: Real>(points: &[Vec<T>], seeds: &[usize], max_iter: usize) -> Clustering<T> {
    let mut centroids: Vec<Vec<T>> = seeds.iter().map(|&i| points[i].clone()).collect();
    let mut assignments: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
    let dim = points.first().map_or(0, Vec::len);
    let mut iterations = 0;
    while iterations < max_iter {
        iterations += 1;
        for (j, centroid) in centroids.iter_mut().enumerate() {
            let members: Vec<&Vec<T>> = points
                .iter()
                .zip(&assignments)
                .filter(|(_, &a)| a == j)
                .map(|(p, _)| p)
                .collect();
            if members.is_empty() {
                continue;
            }
            let count = <T as Real>::from_usize(members.len());
            *centroid = (0..dim)
                .map(|d| members.iter().map(|m| m[d]).sum::<T>() / count)
                .collect();
        }
        let next: Vec<usize> = points.iter().map(|p| nearest(p, &centroids)).collect();
        if next == assignments {
            break;
        }
        assignments = next;
    }
    Clustering {
        assignments,
        centroids,
        iterations,
    }
}

/// One distinct representative point per cluster: the member most similar
/// to the centroid (lowest index on ties). A cluster with no unclaimed
/// member draws from all unclaimed points instead, so the result always has
/// `min(k, n)` distinct indices.
pub fn representatives<T: Real>(points: &[Vec<T>], clustering: &Clustering<T>) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for (j, centroid) in clustering.centroids.iter().enumerate() {
        if chosen.len() == points.len() {
            break;
        }
        let pick = |only_members: bool| {
            let mut best: Option<(usize, T)> = None;
            for (i, p) in points.iter().enumerate() {
                if chosen.contains(&i) || (only_members && clustering.assignments[i] != j) {
                    continue;
                }
                let sim = cosine(p, centroid);
                if best.map_or(true, |(_, s)| sim > s) {
                    best = Some((i, sim));
                }
            }
            best.map(|(i, _)| i)
        };
        if let Some(i) = pick(true).or_else(|| pick(false)) {
            chosen.push(i);
        }
    }
    chosen
}
