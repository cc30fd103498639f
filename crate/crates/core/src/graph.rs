//! Finite undirected labeled graphs and their Cartesian product.
//!
//! A [`Graph`] is immutable once built. Structural facts that routing depends
//! on (diameter, acyclicity, completeness) are computed once at construction.

use std::cmp::Ordering;
use std::collections::{HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GraphError;

/// Label of a graph vertex.
///
/// Product vertices carry a pair whose first component comes from the left
/// (acyclic) operand. Pairs nest at most one level.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum VertexLabel {
    Atom(String),
    Pair(String, String),
}

impl VertexLabel {
    pub fn atom(name: impl Into<String>) -> Self {
        VertexLabel::Atom(name.into())
    }

    pub fn is_pair(&self) -> bool {
        matches!(self, VertexLabel::Pair(..))
    }

    /// The atomic name, if this is not a product label.
    pub fn as_atom(&self) -> Option<&str> {
        match self {
            VertexLabel::Atom(s) => Some(s),
            VertexLabel::Pair(..) => None,
        }
    }
}

impl fmt::Display for VertexLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            VertexLabel::Atom(s) => f.write_str(s),
            VertexLabel::Pair(a, b) => write!(f, "({a},{b})"),
        }
    }
}

/// Orders names so that integer-valued names compare numerically and sort
/// before non-numeric ones ("2" < "10" < "a").
pub(crate) fn natural_cmp(a: &str, b: &str) -> Ordering {
    match (a.parse::<u64>(), b.parse::<u64>()) {
        (Ok(x), Ok(y)) => x.cmp(&y).then_with(|| a.cmp(b)),
        (Ok(_), Err(_)) => Ordering::Less,
        (Err(_), Ok(_)) => Ordering::Greater,
        (Err(_), Err(_)) => a.cmp(b),
    }
}

impl Ord for VertexLabel {
    fn cmp(&self, other: &Self) -> Ordering {
        use VertexLabel::*;
        match (self, other) {
            (Atom(a), Atom(b)) => natural_cmp(a, b),
            (Atom(_), Pair(..)) => Ordering::Less,
            (Pair(..), Atom(_)) => Ordering::Greater,
            (Pair(a1, b1), Pair(a2, b2)) => natural_cmp(a1, a2).then_with(|| natural_cmp(b1, b2)),
        }
    }
}

impl PartialOrd for VertexLabel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// A finite simple undirected graph.
///
/// Vertices keep their insertion order, which is the order every iteration
/// over the graph follows.
#[derive(Debug, Clone)]
pub struct Graph {
    labels: Vec<VertexLabel>,
    index: HashMap<VertexLabel, usize>,
    adjacency: Vec<Vec<usize>>,
    // normalized (lo, hi), sorted
    edges: Vec<(usize, usize)>,
    diameter: Result<u32, (usize, usize)>,
    acyclic: bool,
    complete: bool,
}

impl Graph {
    /// Builds a graph from vertex labels and edges between them.
    pub fn new(
        vertices: impl IntoIterator<Item = VertexLabel>,
        edges: impl IntoIterator<Item = (VertexLabel, VertexLabel)>,
    ) -> Result<Self, GraphError> {
        let labels: Vec<VertexLabel> = vertices.into_iter().collect();
        let mut index = HashMap::with_capacity(labels.len());
        for (i, l) in labels.iter().enumerate() {
            if index.insert(l.clone(), i).is_some() {
                return Err(GraphError::DuplicateVertex(l.to_string()));
            }
        }
        let mut idx_edges = Vec::new();
        for (a, b) in edges {
            let ia = *index
                .get(&a)
                .ok_or_else(|| GraphError::UnknownEndpoint(a.to_string()))?;
            let ib = *index
                .get(&b)
                .ok_or_else(|| GraphError::UnknownEndpoint(b.to_string()))?;
            idx_edges.push((ia, ib));
        }
        Self::from_indexed(labels, index, idx_edges)
    }

    fn from_indexed(
        labels: Vec<VertexLabel>,
        index: HashMap<VertexLabel, usize>,
        raw_edges: Vec<(usize, usize)>,
    ) -> Result<Self, GraphError> {
        let n = labels.len();
        let mut adjacency = vec![Vec::new(); n];
        let mut edges = Vec::with_capacity(raw_edges.len());
        for (a, b) in raw_edges {
            if a == b {
                return Err(GraphError::SelfLoop(labels[a].to_string()));
            }
            let e = (a.min(b), a.max(b));
            edges.push(e);
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
        edges.sort_unstable();
        if let Some(w) = edges.windows(2).find(|w| w[0] == w[1]) {
            let (a, b) = w[0];
            return Err(GraphError::ParallelEdge(labels[a].to_string(), labels[b].to_string()));
        }
        for adj in &mut adjacency {
            adj.sort_unstable();
        }

        let components = count_components(&adjacency);
        let acyclic = edges.len() + components == n;
        let complete = edges.len() == n * n.saturating_sub(1) / 2;
        let diameter = compute_diameter(&adjacency);

        Ok(Graph {
            labels,
            index,
            adjacency,
            edges,
            diameter,
            acyclic,
            complete,
        })
    }

    /// Number of vertices, |G|.
    pub fn order(&self) -> usize {
        self.labels.len()
    }

    /// Number of edges, ‖G‖.
    pub fn size(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[VertexLabel] {
        &self.labels
    }

    pub fn label(&self, v: usize) -> &VertexLabel {
        &self.labels[v]
    }

    pub fn index_of(&self, label: &VertexLabel) -> Option<usize> {
        self.index.get(label).copied()
    }

    /// Sorted neighbour indexes of `v`.
    pub fn neighbours(&self, v: usize) -> &[usize] {
        &self.adjacency[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adjacency[v].len()
    }

    pub fn adjacent(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].binary_search(&b).is_ok()
    }

    /// Edges as index pairs `(lo, hi)` in sorted order.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Longest shortest-path hop count over all vertex pairs.
    pub fn diameter(&self) -> Result<u32, GraphError> {
        if self.is_empty() {
            return Err(GraphError::Empty);
        }
        self.diameter.map_err(|(a, b)| GraphError::Disconnected {
            from: self.labels[a].to_string(),
            to: self.labels[b].to_string(),
        })
    }

    pub fn is_connected(&self) -> bool {
        !self.is_empty() && self.diameter.is_ok()
    }

    /// True iff the graph is a forest.
    pub fn is_acyclic(&self) -> bool {
        self.acyclic
    }

    /// True iff every pair of distinct vertices is adjacent.
    pub fn is_complete(&self) -> bool {
        self.complete
    }

    /// Hop distances from `src` to every vertex (`None` when unreachable).
    pub fn bfs_distances(&self, src: usize) -> Vec<Option<u32>> {
        bfs(&self.adjacency, src)
    }

    /// The Cartesian product `self □ other`.
    ///
    /// Vertex `(g, h)` is adjacent to `(g', h')` iff `g = g'` and `hh'` is an
    /// edge of `other`, or `gg'` is an edge of `self` and `h = h'`. Vertices
    /// are ordered by `self` index first.
    pub fn cartesian_product(&self, other: &Graph) -> Result<Graph, GraphError> {
        if self.is_empty() || other.is_empty() {
            return Err(GraphError::EmptyOperand);
        }
        let (Some(left), Some(right)) = (atoms(self), atoms(other)) else {
            return Err(GraphError::NestedProduct);
        };
        let m = other.order();
        let labels: Vec<VertexLabel> = left
            .iter()
            .flat_map(|g| {
                right
                    .iter()
                    .map(move |h| VertexLabel::Pair(g.to_string(), h.to_string()))
            })
            .collect();
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        let id = |g: usize, h: usize| g * m + h;
        let mut edges = Vec::with_capacity(self.size() * m + self.order() * other.size());
        for g in 0..self.order() {
            for &(h1, h2) in other.edges() {
                edges.push((id(g, h1), id(g, h2)));
            }
        }
        for &(g1, g2) in self.edges() {
            for h in 0..m {
                edges.push((id(g1, h), id(g2, h)));
            }
        }
        Graph::from_indexed(labels, index, edges)
    }
}

fn atoms(g: &Graph) -> Option<Vec<&str>> {
    g.labels.iter().map(VertexLabel::as_atom).collect()
}

fn bfs(adjacency: &[Vec<usize>], src: usize) -> Vec<Option<u32>> {
    let mut dist = vec![None; adjacency.len()];
    let mut queue = VecDeque::new();
    dist[src] = Some(0);
    queue.push_back(src);
    while let Some(v) = queue.pop_front() {
        let d = dist[v].unwrap_or(0);
        for &w in &adjacency[v] {
            if dist[w].is_none() {
                dist[w] = Some(d + 1);
                queue.push_back(w);
            }
        }
    }
    dist
}

fn count_components(adjacency: &[Vec<usize>]) -> usize {
    let mut seen = vec![false; adjacency.len()];
    let mut count = 0;
    for s in 0..adjacency.len() {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &w in &adjacency[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

fn compute_diameter(adjacency: &[Vec<usize>]) -> Result<u32, (usize, usize)> {
    let mut best = 0;
    for s in 0..adjacency.len() {
        for (t, d) in bfs(adjacency, s).into_iter().enumerate() {
            match d {
                Some(d) => best = best.max(d),
                None => return Err((s, t)),
            }
        }
    }
    Ok(best)
}

fn numbered(n: usize) -> Vec<VertexLabel> {
    (0..n).map(|i| VertexLabel::Atom(i.to_string())).collect()
}

fn require_positive(n: usize) -> Result<(), GraphError> {
    if n == 0 {
        Err(GraphError::Malformed("generator size must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// Path `0 - 1 - ... - (n-1)`.
pub fn make_path(n: usize) -> Result<Graph, GraphError> {
    require_positive(n)?;
    let labels = numbered(n);
    let edges = (1..n).map(|i| (i - 1, i)).collect();
    Graph::from_indexed_labels(labels, edges)
}

/// Star with centre `0` and leaves `1..n`.
pub fn make_star(n: usize) -> Result<Graph, GraphError> {
    require_positive(n)?;
    let labels = numbered(n);
    let edges = (1..n).map(|i| (0, i)).collect();
    Graph::from_indexed_labels(labels, edges)
}

/// Complete graph K_n on `0..n`.
pub fn make_complete(n: usize) -> Result<Graph, GraphError> {
    require_positive(n)?;
    let labels = numbered(n);
    let edges = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    Graph::from_indexed_labels(labels, edges)
}

/// A tree from its edge list. Vertices are taken in first-mention order.
pub fn make_tree<S: AsRef<str>>(edges: &[(S, S)]) -> Result<Graph, GraphError> {
    if edges.is_empty() {
        return Err(GraphError::Malformed(
            "tree edge list is empty; use make_path(1) for a single vertex".into(),
        ));
    }
    let mut labels = Vec::new();
    let mut seen = HashMap::new();
    let mut idx = |name: &str, labels: &mut Vec<VertexLabel>| {
        *seen.entry(name.to_string()).or_insert_with(|| {
            labels.push(VertexLabel::atom(name));
            labels.len() - 1
        })
    };
    let pairs: Vec<(usize, usize)> = edges
        .iter()
        .map(|(a, b)| {
            let ia = idx(a.as_ref(), &mut labels);
            let ib = idx(b.as_ref(), &mut labels);
            (ia, ib)
        })
        .collect();
    let g = Graph::from_indexed_labels(labels, pairs)?;
    if !g.is_acyclic() {
        return Err(GraphError::Malformed("tree edge list contains a cycle".into()));
    }
    if !g.is_connected() {
        return Err(GraphError::Malformed("tree edge list is disconnected".into()));
    }
    Ok(g)
}

impl Graph {
    fn from_indexed_labels(labels: Vec<VertexLabel>, edges: Vec<(usize, usize)>) -> Result<Self, GraphError> {
        let index = labels.iter().enumerate().map(|(i, l)| (l.clone(), i)).collect();
        Graph::from_indexed(labels, index, edges)
    }
}

/// Serializable description of a factor graph, used in graph files and
/// experiment configs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum GraphSpec {
    Path(usize),
    Star(usize),
    Complete(usize),
    Tree(Vec<(String, String)>),
    Explicit {
        vertices: Vec<String>,
        #[serde(default)]
        edges: Vec<(String, String)>,
    },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph, GraphError> {
        match self {
            GraphSpec::Path(n) => make_path(*n),
            GraphSpec::Star(n) => make_star(*n),
            GraphSpec::Complete(n) => make_complete(*n),
            GraphSpec::Tree(edges) => make_tree(edges),
            GraphSpec::Explicit { vertices, edges } => Graph::new(
                vertices.iter().map(VertexLabel::atom),
                edges.iter().map(|(a, b)| (VertexLabel::atom(a), VertexLabel::atom(b))),
            ),
        }
    }
}
