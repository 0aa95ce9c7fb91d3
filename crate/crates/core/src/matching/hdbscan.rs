//! HDBSCAN* over candidate feature vectors.
//!
//! Core distance is the distance to the k-th nearest neighbour counting the
//! point itself, with k = `min_cluster_size`. The mutual-reachability minimum
//! spanning tree is built with Prim's algorithm on the dense distance matrix,
//! which is fine for the few hundred candidates a frame pair produces.
//! Flat clusters are selected by excess of mass.

use std::collections::VecDeque;

use crate::{Error, Result, FEATURE_DIM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ClusterLabel {
    Cluster(usize),
    Noise,
}

impl ClusterLabel {
    pub fn cluster(self) -> Option<usize> {
        match self {
            ClusterLabel::Cluster(c) => Some(c),
            ClusterLabel::Noise => None,
        }
    }
}

// Stands in for 1/0 so stabilities stay finite for coincident points.
const LAMBDA_MAX: f64 = 1e300;

fn lambda(distance: f64) -> f64 {
    if distance > 0.0 {
        (1.0 / distance).min(LAMBDA_MAX)
    } else {
        LAMBDA_MAX
    }
}

/// Clusters 256-D candidate features.
pub fn hdbscan_cluster<F: AsRef<[f64]>>(
    features: &[F],
    min_cluster_size: usize,
) -> Result<Vec<ClusterLabel>> {
    if let Some(f) = features.iter().find(|f| f.as_ref().len() != FEATURE_DIM) {
        return Err(Error::FeatureLength(f.as_ref().len()));
    }
    hdbscan_points(features, min_cluster_size)
}

/// Same as [`hdbscan_cluster`] for points of any (consistent) dimension.
///
/// Labels are numbered in order of first appearance by point index.
pub fn hdbscan_points<F: AsRef<[f64]>>(
    points: &[F],
    min_cluster_size: usize,
) -> Result<Vec<ClusterLabel>> {
    if points.is_empty() {
        return Err(Error::EmptyInput("hdbscan points"));
    }
    if min_cluster_size < 2 {
        return Err(Error::InvalidValue(
            "min_cluster_size must be at least 2".into(),
        ));
    }
    let dim = points[0].as_ref().len();
    if points.iter().any(|p| p.as_ref().len() != dim) {
        return Err(Error::DimensionMismatch(
            "points differ in dimension".into(),
        ));
    }
    let n = points.len();
    if n < min_cluster_size {
        return Ok(vec![ClusterLabel::Noise; n]);
    }

    let dist = distance_matrix(points);
    let core = core_distances(&dist, n, min_cluster_size);
    let mst = mutual_reachability_mst(&dist, &core, n);
    let dendrogram = single_linkage(&mst, n);
    let condensed = condense(&dendrogram, n, min_cluster_size);
    let selected = select_clusters(&condensed, n);
    Ok(label_points(&condensed, &selected, n))
}

fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn distance_matrix<F: AsRef<[f64]>>(points: &[F]) -> Vec<f64> {
    let n = points.len();
    let mut d = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let v = euclidean(points[i].as_ref(), points[j].as_ref());
            d[i * n + j] = v;
            d[j * n + i] = v;
        }
    }
    d
}

fn core_distances(dist: &[f64], n: usize, k: usize) -> Vec<f64> {
    let k = k.min(n);
    (0..n)
        .map(|i| {
            let mut row = dist[i * n..(i + 1) * n].to_vec();
            row.sort_by(f64::total_cmp);
            row[k - 1]
        })
        .collect()
}

#[derive(Debug, Clone, Copy)]
struct Edge {
    a: usize,
    b: usize,
    weight: f64,
}

fn mutual_reachability_mst(dist: &[f64], core: &[f64], n: usize) -> Vec<Edge> {
    let mrd = |i: usize, j: usize| dist[i * n + j].max(core[i]).max(core[j]);
    let mut in_tree = vec![false; n];
    let mut best = vec![f64::INFINITY; n];
    let mut from = vec![0usize; n];
    let mut edges = Vec::with_capacity(n - 1);
    let mut current = 0;
    in_tree[0] = true;
    for _ in 1..n {
        let mut next = usize::MAX;
        for j in 0..n {
            if in_tree[j] {
                continue;
            }
            let w = mrd(current, j);
            if w < best[j] {
                best[j] = w;
                from[j] = current;
            }
            if next == usize::MAX || best[j] < best[next] {
                next = j;
            }
        }
        in_tree[next] = true;
        edges.push(Edge {
            a: from[next],
            b: next,
            weight: best[next],
        });
        current = next;
    }
    edges.sort_by(|x, y| {
        x.weight
            .total_cmp(&y.weight)
            .then(x.a.min(x.b).cmp(&y.a.min(y.b)))
            .then(x.a.max(x.b).cmp(&y.a.max(y.b)))
    });
    edges
}

#[derive(Debug, Clone, Copy)]
struct Merge {
    left: usize,
    right: usize,
    distance: f64,
    size: usize,
}

struct UnionFind {
    parent: Vec<usize>,
    node: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            node: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }
}

/// Dendrogram in scipy layout: leaves are `0..n`, merge `i` is node `n + i`.
fn single_linkage(mst: &[Edge], n: usize) -> Vec<Merge> {
    let mut uf = UnionFind::new(n);
    let mut size = vec![1usize; 2 * n - 1];
    let mut merges = Vec::with_capacity(n - 1);
    for (i, e) in mst.iter().enumerate() {
        let (ra, rb) = (uf.find(e.a), uf.find(e.b));
        let (left, right) = (uf.node[ra], uf.node[rb]);
        let node = n + i;
        size[node] = size[left] + size[right];
        merges.push(Merge {
            left,
            right,
            distance: e.weight,
            size: size[node],
        });
        uf.parent[rb] = ra;
        uf.node[ra] = node;
    }
    merges
}

#[derive(Debug, Clone, Copy)]
struct CondensedEdge {
    parent: usize,
    child: usize,
    lambda: f64,
    size: usize,
}

/// Condensed tree; cluster ids start at `n` (the root) and points keep
/// their indices.
struct CondensedTree {
    edges: Vec<CondensedEdge>,
    n_clusters: usize,
}

fn condense(merges: &[Merge], n: usize, min_size: usize) -> CondensedTree {
    let root = 2 * n - 2;
    let node_size = |id: usize| if id < n { 1 } else { merges[id - n].size };
    let leaves_of = |id: usize| -> Vec<usize> {
        let mut out = Vec::new();
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            if x < n {
                out.push(x);
            } else {
                let m = merges[x - n];
                queue.push_back(m.left);
                queue.push_back(m.right);
            }
        }
        out
    };

    let mut label = vec![usize::MAX; 2 * n - 1];
    label[root] = n;
    let mut next_label = n + 1;
    let mut edges = Vec::new();
    // Top-down walk over the merges that still carry a cluster label.
    let mut stack = vec![root];
    while let Some(node) = stack.pop() {
        if node < n {
            continue;
        }
        let m = merges[node - n];
        let parent = label[node];
        let lam = lambda(m.distance);
        let (ls, rs) = (node_size(m.left), node_size(m.right));
        let fall_out = |edges: &mut Vec<CondensedEdge>, id: usize| {
            for leaf in leaves_of(id) {
                edges.push(CondensedEdge {
                    parent,
                    child: leaf,
                    lambda: lam,
                    size: 1,
                });
            }
        };
        if m.distance <= 0.0 {
            // Coincident points cannot be told apart; they leave together.
            fall_out(&mut edges, node);
        } else if ls >= min_size && rs >= min_size {
            for (child, size) in [(m.left, ls), (m.right, rs)] {
                label[child] = next_label;
                edges.push(CondensedEdge {
                    parent,
                    child: next_label,
                    lambda: lam,
                    size,
                });
                next_label += 1;
                stack.push(child);
            }
        } else if ls < min_size && rs < min_size {
            fall_out(&mut edges, m.left);
            fall_out(&mut edges, m.right);
        } else {
            let (big, small) = if ls >= min_size {
                (m.left, m.right)
            } else {
                (m.right, m.left)
            };
            label[big] = parent;
            fall_out(&mut edges, small);
            stack.push(big);
        }
    }
    CondensedTree {
        edges,
        n_clusters: next_label - n,
    }
}

/// Excess-of-mass selection. The root is eligible only when the tree never
/// splits; see [`label_points`] for which points it then keeps.
fn select_clusters(tree: &CondensedTree, n: usize) -> Vec<bool> {
    let k = tree.n_clusters;
    let mut birth = vec![0.0f64; k];
    let mut stability = vec![0.0f64; k];
    let mut children: Vec<Vec<usize>> = vec![Vec::new(); k];
    for e in &tree.edges {
        if e.child >= n {
            birth[e.child - n] = e.lambda;
            children[e.parent - n].push(e.child - n);
        }
    }
    for e in &tree.edges {
        let p = e.parent - n;
        stability[p] += (e.lambda - birth[p]) * e.size as f64;
    }

    let mut selected = vec![false; k];
    if k == 1 {
        selected[0] = true;
        return selected;
    }
    let mut subtree = vec![0.0f64; k];
    // Children always carry larger ids than their parent.
    for c in (1..k).rev() {
        let child_sum: f64 = children[c].iter().map(|&ch| subtree[ch]).sum();
        if children[c].is_empty() || stability[c] >= child_sum {
            selected[c] = true;
            subtree[c] = stability[c];
            let mut queue: VecDeque<usize> = children[c].iter().copied().collect();
            while let Some(d) = queue.pop_front() {
                selected[d] = false;
                queue.extend(children[d].iter().copied());
            }
        } else {
            subtree[c] = child_sum;
        }
    }
    selected
}

/// When the root is the only cluster, a point belongs to it only if it is
/// among the last to leave (largest lambda); everything else is noise.
fn label_points(tree: &CondensedTree, selected: &[bool], n: usize) -> Vec<ClusterLabel> {
    let mut parent_of = vec![usize::MAX; n + tree.n_clusters];
    let mut point_lambda = vec![0.0f64; n];
    for e in &tree.edges {
        parent_of[e.child] = e.parent;
        if e.child < n {
            point_lambda[e.child] = e.lambda;
        }
    }
    let single = tree.n_clusters == 1;
    let last_lambda = point_lambda.iter().copied().fold(0.0, f64::max);
    let mut relabel = vec![usize::MAX; tree.n_clusters];
    let mut next = 0;
    (0..n)
        .map(|p| {
            let mut c = parent_of[p];
            while c != usize::MAX && !selected[c - n] {
                c = parent_of[c];
            }
            if c == usize::MAX || (single && point_lambda[p] < last_lambda) {
                return ClusterLabel::Noise;
            }
            let slot = &mut relabel[c - n];
            if *slot == usize::MAX {
                *slot = next;
                next += 1;
            }
            ClusterLabel::Cluster(*slot)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels_to_partition(labels: &[ClusterLabel]) -> Vec<Vec<usize>> {
        let mut groups: std::collections::BTreeMap<ClusterLabel, Vec<usize>> = Default::default();
        for (i, l) in labels.iter().enumerate() {
            groups.entry(*l).or_default().push(i);
        }
        groups.into_values().collect()
    }

    #[test]
    fn single_point_is_noise() {
        let labels = hdbscan_points(&[vec![1.0, 2.0]], 2).unwrap();
        assert_eq!(labels, vec![ClusterLabel::Noise]);
    }

    #[test]
    fn identical_points_form_one_cluster() {
        let pts = vec![vec![0.5; FEATURE_DIM]; 6];
        let labels = hdbscan_cluster(&pts, 2).unwrap();
        assert!(labels.iter().all(|&l| l == ClusterLabel::Cluster(0)));
    }

    #[test]
    fn two_clusters_and_outlier_in_2d() {
        let pts = vec![
            vec![0.0, 0.0],
            vec![0.1, 0.0],
            vec![0.0, 0.1],
            vec![0.1, 0.1],
            vec![5.0, 5.0],
            vec![5.1, 5.0],
            vec![5.0, 5.1],
            vec![5.1, 5.1],
            vec![40.0, -30.0],
        ];
        let labels = hdbscan_points(&pts, 3).unwrap();
        assert_eq!(
            labels_to_partition(&labels),
            vec![vec![0, 1, 2, 3], vec![4, 5, 6, 7], vec![8]]
        );
        assert_eq!(labels[8], ClusterLabel::Noise);
        assert_eq!(labels[0], ClusterLabel::Cluster(0));
        assert_eq!(labels[4], ClusterLabel::Cluster(1));
    }

    #[test]
    fn rejects_wrong_feature_length() {
        assert!(matches!(
            hdbscan_cluster(&[vec![0.0; 3]], 2),
            Err(Error::FeatureLength(3))
        ));
        assert!(hdbscan_points::<Vec<f64>>(&[], 2).is_err());
        assert!(hdbscan_points(&[vec![0.0], vec![1.0]], 1).is_err());
    }

    #[test]
    fn fewer_points_than_min_size_is_all_noise() {
        let labels = hdbscan_points(&[vec![0.0], vec![1.0]], 3).unwrap();
        assert_eq!(labels, vec![ClusterLabel::Noise; 2]);
    }
}
