//! DBSCAN over event pixel coordinates, dominant-cluster centroiding and the
//! two-camera press exclusion rule.
//!
//! Neighbour counts include the query point itself, so a point is a core
//! point when at least `min_samples` points (itself included) lie within
//! `eps`. This is the convention of most DBSCAN implementations and it moves
//! the core-point boundary by one compared to counting only other points.
//!
//! Event coordinates are integer pixels and a press stacks many events on the
//! same pixel. Coincident points have identical neighbourhoods, so the
//! clustering runs on the distinct locations weighted by multiplicity and the
//! labels are copied back. Distinct locations are visited in order of their
//! first occurrence, which reproduces the labels of the plain point-by-point
//! scan exactly.

use alloc::vec::Vec;

use crate::events::{CameraId, Event};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Label {
    Noise,
    Cluster(u32),
}

impl Label {
    pub fn cluster(self) -> Option<u32> {
        match self {
            Label::Cluster(c) => Some(c),
            Label::Noise => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(default))]
pub struct DbscanParams {
    /// Neighbourhood radius in pixels.
    pub eps: f64,
    pub min_samples: usize,
    /// Smallest dominant cluster accepted as a detected press.
    pub min_cluster_points: usize,
}

impl Default for DbscanParams {
    fn default() -> Self {
        DbscanParams { eps: 10.0, min_samples: 10, min_cluster_points: 10 }
    }
}

/// Distinct locations with the original indices stacked on each.
struct Sites {
    xy: Vec<(f64, f64)>,
    weight: Vec<usize>,
    /// members[offsets[s]..offsets[s + 1]] are the point indices at site s
    offsets: Vec<usize>,
    members: Vec<usize>,
}

fn collect_sites(points: &[(f64, f64)]) -> Sites {
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.sort_unstable_by_key(|&i| (points[i].0.to_bits(), points[i].1.to_bits(), i));
    let mut groups: Vec<(usize, usize, usize)> = Vec::new(); // (first index, start, end) in `order`
    let mut start = 0;
    while start < order.len() {
        let key = |i: usize| (points[i].0.to_bits(), points[i].1.to_bits());
        let k = key(order[start]);
        let mut end = start + 1;
        while end < order.len() && key(order[end]) == k {
            end += 1;
        }
        groups.push((order[start], start, end));
        start = end;
    }
    groups.sort_unstable_by_key(|g| g.0);

    let mut sites = Sites {
        xy: Vec::with_capacity(groups.len()),
        weight: Vec::with_capacity(groups.len()),
        offsets: Vec::with_capacity(groups.len() + 1),
        members: Vec::with_capacity(points.len()),
    };
    sites.offsets.push(0);
    for (first, s, e) in groups {
        sites.xy.push(points[first]);
        sites.weight.push(e - s);
        sites.members.extend_from_slice(&order[s..e]);
        sites.offsets.push(sites.members.len());
    }
    sites
}

/// Uniform grid with cells slightly wider than `eps`, so that any two points
/// within `eps` fall in the same or adjacent cells despite rounding.
struct Grid {
    inv_cell: f64,
    /// (cell key, site) sorted by key
    entries: Vec<((i64, i64), usize)>,
}

impl Grid {
    fn new(xy: &[(f64, f64)], eps: f64) -> Self {
        let inv_cell = 1.0 / (eps * (1.0 + 1e-9));
        let mut entries: Vec<((i64, i64), usize)> =
            xy.iter().enumerate().map(|(i, &(x, y))| (Self::key(inv_cell, x, y), i)).collect();
        entries.sort_unstable();
        Grid { inv_cell, entries }
    }

    fn key(inv_cell: f64, x: f64, y: f64) -> (i64, i64) {
        (libm::floor(x * inv_cell) as i64, libm::floor(y * inv_cell) as i64)
    }

    fn neighbours(&self, xy: &[(f64, f64)], site: usize, eps2: f64, out: &mut Vec<usize>) {
        out.clear();
        let (x, y) = xy[site];
        let (cx, cy) = Self::key(self.inv_cell, x, y);
        for gx in cx - 1..=cx + 1 {
            let lo = self.entries.partition_point(|e| e.0 < (gx, cy - 1));
            let hi = self.entries.partition_point(|e| e.0 <= (gx, cy + 1));
            for &(_, j) in &self.entries[lo..hi] {
                let (dx, dy) = (xy[j].0 - x, xy[j].1 - y);
                if dx * dx + dy * dy <= eps2 {
                    out.push(j);
                }
            }
        }
    }
}

/// DBSCAN with Euclidean distance. Cluster ids are assigned in the order in
/// which each cluster's first core point is met while scanning the input.
pub fn dbscan(points: &[(f64, f64)], params: &DbscanParams) -> Vec<Label> {
    let mut labels = alloc::vec![Label::Noise; points.len()];
    if points.is_empty() || !(params.eps > 0.0) || params.min_samples == 0 {
        return labels;
    }
    let sites = collect_sites(points);
    let n = sites.xy.len();
    let grid = Grid::new(&sites.xy, params.eps);
    let eps2 = params.eps * params.eps;

    let mut site_label: Vec<Option<u32>> = alloc::vec![None; n];
    let mut queued = alloc::vec![false; n];
    let mut nbrs = Vec::new();
    let mut frontier = Vec::new();
    let mut next_id = 0u32;

    for s in 0..n {
        if site_label[s].is_some() {
            continue;
        }
        grid.neighbours(&sites.xy, s, eps2, &mut nbrs);
        if nbrs.iter().map(|&j| sites.weight[j]).sum::<usize>() < params.min_samples {
            continue;
        }
        let id = next_id;
        next_id += 1;
        site_label[s] = Some(id);
        queued[s] = true;
        frontier.clear();
        for &j in &nbrs {
            if !queued[j] && site_label[j].is_none() {
                queued[j] = true;
                frontier.push(j);
            }
        }
        while let Some(q) = frontier.pop() {
            if site_label[q].is_some() {
                continue;
            }
            site_label[q] = Some(id);
            grid.neighbours(&sites.xy, q, eps2, &mut nbrs);
            if nbrs.iter().map(|&j| sites.weight[j]).sum::<usize>() >= params.min_samples {
                for &j in &nbrs {
                    if !queued[j] && site_label[j].is_none() {
                        queued[j] = true;
                        frontier.push(j);
                    }
                }
            }
        }
    }

    for (s, label) in site_label.iter().enumerate() {
        if let Some(id) = label {
            for &i in &sites.members[sites.offsets[s]..sites.offsets[s + 1]] {
                labels[i] = Label::Cluster(*id);
            }
        }
    }
    labels
}

/// Dominant-cluster summary for one camera's slice of a press.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterResult {
    pub labels: Vec<Label>,
    pub n_clusters: usize,
    pub largest_cluster_size: usize,
    /// Mean (u, v) of the dominant cluster; present only when `valid`.
    pub centroid: Option<(f64, f64)>,
    pub valid: bool,
}

impl ClusterResult {
    pub fn centroid_u(&self) -> Option<f64> {
        self.centroid.map(|c| c.0)
    }

    pub fn centroid_v(&self) -> Option<f64> {
        self.centroid.map(|c| c.1)
    }
}

/// Runs DBSCAN on the event pixels and summarises the largest cluster.
/// Equal-size clusters are resolved towards the lower mean `u`.
pub fn extract_centroid(events: &[Event], params: &DbscanParams) -> ClusterResult {
    let points: Vec<(f64, f64)> = events.iter().map(|e| (f64::from(e.u), f64::from(e.v))).collect();
    centroid_of_points(&points, params)
}

pub fn centroid_of_points(points: &[(f64, f64)], params: &DbscanParams) -> ClusterResult {
    let labels = dbscan(points, params);
    let n_clusters = labels.iter().filter_map(|l| l.cluster()).max().map_or(0, |m| m as usize + 1);
    let mut count = alloc::vec![0usize; n_clusters];
    let mut sum = alloc::vec![(0.0f64, 0.0f64); n_clusters];
    for (p, l) in points.iter().zip(&labels) {
        if let Some(c) = l.cluster() {
            count[c as usize] += 1;
            sum[c as usize].0 += p.0;
            sum[c as usize].1 += p.1;
        }
    }
    let best = (0..n_clusters).reduce(|a, b| {
        let (ma, mb) = (sum[a].0 / count[a] as f64, sum[b].0 / count[b] as f64);
        if count[b] > count[a] || (count[b] == count[a] && mb < ma) {
            b
        } else {
            a
        }
    });
    let largest_cluster_size = best.map_or(0, |b| count[b]);
    let valid = best.is_some() && largest_cluster_size >= params.min_cluster_points;
    let centroid = best.filter(|_| valid).map(|b| (sum[b].0 / count[b] as f64, sum[b].1 / count[b] as f64));
    ClusterResult { labels, n_clusters, largest_cluster_size, centroid, valid }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum PressStatus {
    Pass,
    /// Cameras whose dominant cluster was missing or too small.
    Fail {
        cam1: bool,
        cam2: bool,
    },
}

impl PressStatus {
    pub fn passed(self) -> bool {
        matches!(self, PressStatus::Pass)
    }

    pub fn failing_cameras(self) -> Vec<CameraId> {
        match self {
            PressStatus::Pass => Vec::new(),
            PressStatus::Fail { cam1, cam2 } => {
                CameraId::BOTH.into_iter().zip([cam1, cam2]).filter(|(_, f)| *f).map(|(c, _)| c).collect()
            }
        }
    }
}

/// A press survives only when both cameras found a prominent cluster.
pub fn exclude_press(r1: &ClusterResult, r2: &ClusterResult) -> PressStatus {
    if r1.valid && r2.valid {
        PressStatus::Pass
    } else {
        PressStatus::Fail { cam1: !r1.valid, cam2: !r2.valid }
    }
}
