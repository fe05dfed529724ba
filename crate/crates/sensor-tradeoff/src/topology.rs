//! Sensor layouts, conflict graphs, and activity-pattern enumeration.
//!
//! Nodes are indexed `0..n` throughout the API; display labels and the CSV
//! layout format use 1-based ids. An activity pattern is a set of
//! simultaneously transmitting nodes; carrier sensing admits exactly the
//! independent sets of the conflict graph, enumerated here in ascending
//! bit-mask order with node 0 as the least significant bit, so the empty
//! pattern always sits at index 0.

use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::{Error, Result};

/// Default ceiling on exhaustive pattern enumeration (2^24 patterns).
pub const DEFAULT_ENUM_CAP: usize = 24;

// ============================================================================
// Sensor layout
// ============================================================================

/// Planar sensor positions.
///
/// Positions must be finite and pairwise distinct; coincident sensors would
/// make the nearest-neighbor relation ill-defined.
#[derive(Debug, Clone, PartialEq)]
pub struct SensorLayout {
    points: Vec<[f64; 2]>,
}

impl SensorLayout {
    /// Validates and wraps a list of positions.
    pub fn new(points: Vec<[f64; 2]>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidLayout("layout has no sensors".into()));
        }
        for (i, p) in points.iter().enumerate() {
            if !p[0].is_finite() || !p[1].is_finite() {
                return Err(Error::InvalidLayout(format!(
                    "sensor {} has non-finite coordinates ({}, {})",
                    i + 1,
                    p[0],
                    p[1]
                )));
            }
        }
        for i in 0..points.len() {
            for j in (i + 1)..points.len() {
                if points[i] == points[j] {
                    return Err(Error::InvalidLayout(format!(
                        "sensors {} and {} share the position ({}, {})",
                        i + 1,
                        j + 1,
                        points[i][0],
                        points[i][1]
                    )));
                }
            }
        }
        Ok(SensorLayout { points })
    }

    /// `n` sensors evenly spaced on the x-axis with unit spacing.
    pub fn line(n: usize) -> Result<Self> {
        SensorLayout::new((0..n).map(|i| [i as f64, 0.0]).collect())
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> [f64; 2] {
        self.points[i]
    }

    pub fn points(&self) -> &[[f64; 2]] {
        &self.points
    }

    /// Euclidean distance between sensors `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let [xi, yi] = self.points[i];
        let [xj, yj] = self.points[j];
        ((xi - xj).powi(2) + (yi - yj).powi(2)).sqrt()
    }

    /// Reads a layout from CSV rows `id,x,y` with ids `1..n` contiguous.
    ///
    /// An optional `id,x,y` header row is accepted; blank lines are skipped.
    /// Rows may appear in any order, but every id in `1..n` must appear
    /// exactly once.
    pub fn from_csv_reader<R: BufRead>(reader: R) -> Result<Self> {
        let mut parsed: Vec<(usize, [f64; 2])> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line.map_err(Error::Io)?;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if lineno == 0 && trimmed.eq_ignore_ascii_case("id,x,y") {
                continue;
            }
            let fields: Vec<&str> = trimmed.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::InvalidLayout(format!(
                    "line {}: expected 3 fields `id,x,y`, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            let id: usize = fields[0].parse().map_err(|_| {
                Error::InvalidLayout(format!("line {}: bad id `{}`", lineno + 1, fields[0]))
            })?;
            let x: f64 = fields[1].parse().map_err(|_| {
                Error::InvalidLayout(format!("line {}: bad x `{}`", lineno + 1, fields[1]))
            })?;
            let y: f64 = fields[2].parse().map_err(|_| {
                Error::InvalidLayout(format!("line {}: bad y `{}`", lineno + 1, fields[2]))
            })?;
            parsed.push((id, [x, y]));
        }
        let n = parsed.len();
        if n == 0 {
            return Err(Error::InvalidLayout("layout file has no data rows".into()));
        }
        let mut points = vec![None; n];
        for (id, p) in parsed {
            if id == 0 || id > n {
                return Err(Error::InvalidLayout(format!(
                    "id {id} outside the contiguous range 1..{n}"
                )));
            }
            if points[id - 1].replace(p).is_some() {
                return Err(Error::InvalidLayout(format!("duplicate id {id}")));
            }
        }
        SensorLayout::new(points.into_iter().map(Option::unwrap).collect())
    }

    /// Reads a layout from a CSV file; see [`SensorLayout::from_csv_reader`].
    pub fn from_csv_path<P: AsRef<Path>>(path: P) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(Error::Io)?;
        SensorLayout::from_csv_reader(BufReader::new(file))
    }
}

// ============================================================================
// Graphs
// ============================================================================

/// Undirected simple graph on nodes `0..node_count`.
///
/// Edges are stored as `(i, j)` with `i < j`, sorted and deduplicated, so two
/// graphs with the same edge set compare equal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    node_count: usize,
    edges: Vec<(usize, usize)>,
}

impl Graph {
    /// Builds a graph, normalizing edge orientation and rejecting self-loops
    /// and out-of-range endpoints.
    pub fn new(node_count: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut normalized = Vec::with_capacity(edges.len());
        for &(a, b) in edges {
            if a == b {
                return Err(Error::Contract(format!("self-loop at node {a}")));
            }
            if a >= node_count || b >= node_count {
                return Err(Error::Contract(format!(
                    "edge ({a}, {b}) outside 0..{node_count}"
                )));
            }
            normalized.push((a.min(b), a.max(b)));
        }
        normalized.sort_unstable();
        normalized.dedup();
        Ok(Graph {
            node_count,
            edges: normalized,
        })
    }

    /// Graph with no edges (every pattern is admissible).
    pub fn edgeless(node_count: usize) -> Self {
        Graph {
            node_count,
            edges: Vec::new(),
        }
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn degree(&self, node: usize) -> usize {
        self.edges
            .iter()
            .filter(|&&(a, b)| a == node || b == node)
            .count()
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        let key = (a.min(b), a.max(b));
        self.edges.binary_search(&key).is_ok()
    }

    /// True when the graph is acyclic.
    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.node_count).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for &(a, b) in &self.edges {
            let ra = find(&mut parent, a);
            let rb = find(&mut parent, b);
            if ra == rb {
                return false;
            }
            parent[ra] = rb;
        }
        true
    }

    /// Per-node neighbor bit masks; requires `node_count <= 32`.
    pub(crate) fn adjacency_masks(&self) -> Result<Vec<u32>> {
        if self.node_count > 32 {
            return Err(Error::Capacity {
                nodes: self.node_count,
                cap: 32,
            });
        }
        let mut masks = vec![0u32; self.node_count];
        for &(a, b) in &self.edges {
            masks[a] |= 1 << b;
            masks[b] |= 1 << a;
        }
        Ok(masks)
    }
}

/// Builds the nearest-neighbor graph: each sensor contributes an edge to its
/// closest peer, ties resolved toward the lowest index.
///
/// The result is always a forest in which every node has degree at least one;
/// the edge count therefore lies in `[ceil(n/2), n-1]`. Needs at least two
/// sensors.
pub fn build_nn_graph(layout: &SensorLayout) -> Result<Graph> {
    let n = layout.len();
    if n < 2 {
        return Err(Error::InvalidLayout(
            "nearest-neighbor graph needs at least two sensors".into(),
        ));
    }
    let mut edges = Vec::with_capacity(n);
    for i in 0..n {
        let mut best: Option<(f64, usize)> = None;
        for j in 0..n {
            if j == i {
                continue;
            }
            let d = layout.distance(i, j);
            // Strict `<` keeps the earliest (lowest-index) candidate on ties.
            let closer = match best {
                None => true,
                Some((bd, _)) => d < bd,
            };
            if closer {
                best = Some((d, j));
            }
        }
        let (_, j) = best.expect("n >= 2 guarantees a neighbor");
        edges.push((i, j));
    }
    Graph::new(n, &edges)
}

// ============================================================================
// Activity patterns
// ============================================================================

/// A set of simultaneously transmitting nodes, stored as a bit mask with node
/// 0 in the least significant bit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ActivityState {
    mask: u32,
    len: u8,
}

impl ActivityState {
    /// Wraps a raw bit mask over `len` nodes.
    pub fn from_mask(mask: u32, len: usize) -> Result<Self> {
        if len > 32 {
            return Err(Error::Capacity {
                nodes: len,
                cap: 32,
            });
        }
        if len < 32 && mask >> len != 0 {
            return Err(Error::Contract(format!(
                "mask {mask:#b} has bits beyond {len} nodes"
            )));
        }
        Ok(ActivityState {
            mask,
            len: len as u8,
        })
    }

    /// The empty pattern (no node transmitting).
    pub fn empty(len: usize) -> Result<Self> {
        ActivityState::from_mask(0, len)
    }

    /// Pattern with exactly the given nodes active.
    pub fn from_active(active: &[usize], len: usize) -> Result<Self> {
        let mut mask = 0u32;
        for &i in active {
            if i >= len {
                return Err(Error::Contract(format!("node {i} outside 0..{len}")));
            }
            mask |= 1 << i;
        }
        ActivityState::from_mask(mask, len)
    }

    pub fn mask(&self) -> u32 {
        self.mask
    }

    /// Number of nodes the pattern is defined over.
    pub fn len(&self) -> usize {
        self.len as usize
    }

    pub fn is_empty(&self) -> bool {
        self.mask == 0
    }

    pub fn is_active(&self, node: usize) -> bool {
        node < self.len as usize && self.mask >> node & 1 == 1
    }

    pub fn active_count(&self) -> usize {
        self.mask.count_ones() as usize
    }

    pub fn active_nodes(&self) -> Vec<usize> {
        (0..self.len as usize).filter(|&i| self.is_active(i)).collect()
    }

    /// Copy with `node` switched on.
    pub fn activate(&self, node: usize) -> Result<Self> {
        if node >= self.len as usize {
            return Err(Error::Contract(format!("node {node} outside 0..{}", self.len)));
        }
        Ok(ActivityState {
            mask: self.mask | 1 << node,
            len: self.len,
        })
    }

    /// Copy with `node` switched off.
    pub fn deactivate(&self, node: usize) -> Result<Self> {
        if node >= self.len as usize {
            return Err(Error::Contract(format!("node {node} outside 0..{}", self.len)));
        }
        Ok(ActivityState {
            mask: self.mask & !(1 << node),
            len: self.len,
        })
    }

    /// Human-readable label with 1-based node ids: `empty`, `n2`, `n1+n3`, ...
    pub fn label(&self) -> String {
        if self.mask == 0 {
            return "empty".into();
        }
        self.active_nodes()
            .iter()
            .map(|i| format!("n{}", i + 1))
            .collect::<Vec<_>>()
            .join("+")
    }

    /// Bit string with node 1 leftmost: `010` is node 2 of 3 active.
    pub fn bit_string(&self) -> String {
        (0..self.len as usize)
            .map(|i| if self.is_active(i) { '1' } else { '0' })
            .collect()
    }
}

impl fmt::Display for ActivityState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// True when no two active nodes of `state` are adjacent in `conflict`.
pub fn is_independent(conflict: &Graph, state: &ActivityState) -> Result<bool> {
    if state.len() != conflict.node_count() {
        return Err(Error::Contract(format!(
            "state over {} nodes checked against a graph on {}",
            state.len(),
            conflict.node_count()
        )));
    }
    Ok(conflict
        .edges()
        .iter()
        .all(|&(a, b)| !(state.is_active(a) && state.is_active(b))))
}

/// Enumerates every admissible activity pattern of `conflict` in ascending
/// mask order (empty pattern first) with the default cap of
/// [`DEFAULT_ENUM_CAP`] nodes.
pub fn enumerate_states(conflict: &Graph) -> Result<Vec<ActivityState>> {
    enumerate_states_with_cap(conflict, DEFAULT_ENUM_CAP)
}

/// [`enumerate_states`] with an explicit node cap.
pub fn enumerate_states_with_cap(conflict: &Graph, cap: usize) -> Result<Vec<ActivityState>> {
    let n = conflict.node_count();
    if n > cap || n > 32 {
        return Err(Error::Capacity {
            nodes: n,
            cap: cap.min(32),
        });
    }
    let masks = conflict.adjacency_masks()?;
    let mut states = Vec::new();
    let top: u64 = 1u64 << n;
    'outer: for mask in 0..top {
        let mask = mask as u32;
        let mut rest = mask;
        while rest != 0 {
            let i = rest.trailing_zeros() as usize;
            if masks[i] & mask != 0 {
                continue 'outer;
            }
            rest &= rest - 1;
        }
        states.push(ActivityState {
            mask,
            len: n as u8,
        });
    }
    Ok(states)
}

// ============================================================================
// Tests
// ============================================================================
