//! Elbow-method k-means on 2-D mask centroids.

use crate::InstanceCandidate;

const MAX_ITERATIONS: usize = 100;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans {
    pub assignments: Vec<usize>,
    pub centers: Vec<[f64; 2]>,
    /// Sum of squared distances from each point to its assigned center.
    pub inertia: f64,
}

fn sq_dist(a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (a[0] - b[0], a[1] - b[1]);
    dx * dx + dy * dy
}

fn nearest(points: &[[f64; 2]], centers: &[[f64; 2]]) -> Vec<usize> {
    points
        .iter()
        .map(|&p| {
            let mut best = 0;
            for (c, &center) in centers.iter().enumerate().skip(1) {
                if sq_dist(p, center) < sq_dist(p, centers[best]) {
                    best = c;
                }
            }
            best
        })
        .collect()
}

fn means(points: &[[f64; 2]], assign: &[usize], previous: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut sums = vec![[0.0f64; 3]; previous.len()];
    for (p, &a) in points.iter().zip(assign) {
        sums[a][0] += p[0];
        sums[a][1] += p[1];
        sums[a][2] += 1.0;
    }
    sums.iter()
        .zip(previous)
        .map(|(s, &prev)| {
            if s[2] == 0.0 {
                prev
            } else {
                [s[0] / s[2], s[1] / s[2]]
            }
        })
        .collect()
}

/// Farthest-point seeding starting from point 0 (ties go to the lowest
/// index), then Lloyd iterations until the assignment stops changing or
/// 100 iterations pass. `points` must be nonempty and `k >= 1`.
pub fn kmeans(points: &[[f64; 2]], k: usize) -> KMeans {
    assert!(
        !points.is_empty() && k >= 1,
        "kmeans needs points and k >= 1"
    );
    let k = k.min(points.len());
    let mut centers = vec![points[0]];
    let mut min_d: Vec<f64> = points.iter().map(|&p| sq_dist(p, points[0])).collect();
    while centers.len() < k {
        let mut far = 0;
        for i in 1..points.len() {
            if min_d[i] > min_d[far] {
                far = i;
            }
        }
        let c = points[far];
        centers.push(c);
        for (d, &p) in min_d.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, c));
        }
    }

    let mut assign = nearest(points, &centers);
    for _ in 0..MAX_ITERATIONS {
        centers = means(points, &assign, &centers);
        let next = nearest(points, &centers);
        if next == assign {
            break;
        }
        assign = next;
    }
    centers = means(points, &assign, &centers);
    let inertia = points
        .iter()
        .zip(&assign)
        .map(|(&p, &a)| sq_dist(p, centers[a]))
        .sum();
    KMeans {
        assignments: assign,
        centers,
        inertia,
    }
}

/// Result of the elbow search: chosen k, its inertia and the nonempty
/// groups as indices into the input, ordered by first member.
#[derive(Debug, Clone, PartialEq)]
pub struct ElbowSplit {
    pub k: usize,
    pub inertia: f64,
    pub groups: Vec<Vec<usize>>,
}

/// Smallest k in `1..=min(max_k, n)` whose inertia is within `compactness`;
/// falls back to the largest k tried.
pub fn elbow_split(points: &[[f64; 2]], compactness: f64, max_k: usize) -> ElbowSplit {
    if points.is_empty() {
        return ElbowSplit {
            k: 0,
            inertia: 0.0,
            groups: Vec::new(),
        };
    }
    let k_max = max_k.clamp(1, points.len());
    let mut chosen = None;
    for k in 1..=k_max {
        let km = kmeans(points, k);
        let done = km.inertia <= compactness;
        chosen = Some((k, km));
        if done {
            break;
        }
    }
    let (k, km) = chosen.expect("at least one k tried");
    let mut slot = vec![usize::MAX; km.centers.len()];
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (i, &a) in km.assignments.iter().enumerate() {
        if slot[a] == usize::MAX {
            slot[a] = groups.len();
            groups.push(Vec::new());
        }
        groups[slot[a]].push(i);
    }
    ElbowSplit {
        k,
        inertia: km.inertia,
        groups,
    }
}

/// Splits same-frame cluster members whose mask centroids are too spread
/// out. Members are expected to come from one frame.
pub fn split_cluster_spatially(
    members: &[InstanceCandidate],
    compactness: f64,
    max_k: usize,
) -> Vec<Vec<InstanceCandidate>> {
    let centroids: Vec<[f64; 2]> = members
        .iter()
        .map(|c| {
            let (x, y) = c
                .mask()
                .centroid()
                .expect("candidate masks are nonempty by construction");
            [x, y]
        })
        .collect();
    elbow_split(&centroids, compactness, max_k)
        .groups
        .into_iter()
        .map(|g| g.into_iter().map(|i| members[i].clone()).collect())
        .collect()
}
