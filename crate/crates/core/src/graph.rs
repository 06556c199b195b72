//! Discrete location spaces: paths, trees, cycles, hypergrids and arbitrary
//! connected graphs, with an all-pairs hop-distance matrix.
//!
//! Vertices are dense ids `0..n`. Cycle vertex `v_i` has id `i - 1`;
//! hypergrid coordinates are laid out row-major (last coordinate fastest).

use std::collections::VecDeque;
use std::fmt;
use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest vertex count any graph may have; occupied sets are one `u64`.
pub const MAX_VERTICES: usize = 64;

/// JSON-facing description of a graph, e.g. `{"kind":"cycle","k":6}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum GraphSpec {
    Path {
        m: usize,
    },
    Star {
        n: usize,
    },
    Tree {
        edges: Vec<(usize, usize)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
    Cycle {
        k: usize,
    },
    Hypergrid {
        dims: Vec<usize>,
    },
    Custom {
        edges: Vec<(usize, usize)>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n: Option<usize>,
    },
}

impl GraphSpec {
    pub fn build(&self) -> Result<Graph> {
        Graph::build(self)
    }

    /// Short human-readable name, e.g. `C6` or `2x3`.
    pub fn name(&self) -> String {
        match self {
            GraphSpec::Path { m } => format!("path({m})"),
            GraphSpec::Star { n } => format!("star({n})"),
            GraphSpec::Tree { edges, n } => {
                format!("tree(n={})", n.unwrap_or_else(|| infer_n(edges)))
            }
            GraphSpec::Cycle { k } => format!("C{k}"),
            GraphSpec::Hypergrid { dims } => dims
                .iter()
                .map(|d| d.to_string())
                .collect::<Vec<_>>()
                .join("x"),
            GraphSpec::Custom { edges, n } => {
                format!("custom(n={})", n.unwrap_or_else(|| infer_n(edges)))
            }
        }
    }
}

fn infer_n(edges: &[(usize, usize)]) -> usize {
    edges.iter().map(|&(a, b)| a.max(b) + 1).max().unwrap_or(1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Path,
    Star,
    Tree,
    Cycle(usize),
    Hypergrid(Vec<usize>),
    Custom,
}

/// Finite undirected connected graph with precomputed hop distances.
#[derive(Clone, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    adj: Vec<u64>,
    dist: Vec<u32>,
    labels: Vec<String>,
    family: Family,
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Graph")
            .field("n", &self.n)
            .field("family", &self.family)
            .field("edges", &self.edges)
            .finish()
    }
}

impl Graph {
    pub fn build(spec: &GraphSpec) -> Result<Graph> {
        match spec {
            GraphSpec::Path { m } => Graph::path(*m),
            GraphSpec::Star { n } => Graph::star(*n),
            GraphSpec::Tree { edges, n } => Graph::tree(edges, *n),
            GraphSpec::Cycle { k } => Graph::cycle(*k),
            GraphSpec::Hypergrid { dims } => Graph::hypergrid(dims),
            GraphSpec::Custom { edges, n } => Graph::custom(edges, *n),
        }
    }

    pub fn path(m: usize) -> Result<Graph> {
        if m == 0 {
            return Err(Error::InvalidSpec("path needs at least one vertex".into()));
        }
        let edges: Vec<_> = (1..m).map(|i| (i - 1, i)).collect();
        Graph::from_parts(m, edges, id_labels(m), Family::Path)
    }

    /// Star on `n` vertices: center 0, leaves `1..n`.
    pub fn star(n: usize) -> Result<Graph> {
        if n == 0 {
            return Err(Error::InvalidSpec("star needs at least one vertex".into()));
        }
        let edges: Vec<_> = (1..n).map(|i| (0, i)).collect();
        Graph::from_parts(n, edges, id_labels(n), Family::Star)
    }

    pub fn tree(edges: &[(usize, usize)], n: Option<usize>) -> Result<Graph> {
        let n = n.unwrap_or_else(|| infer_n(edges));
        check_edges(n, edges)?;
        let mut uf = UnionFind::new(n);
        for &(a, b) in edges {
            if !uf.union(a, b) {
                return Err(Error::CyclicTreeInput);
            }
        }
        Graph::from_parts(n, edges.to_vec(), id_labels(n), Family::Tree)
    }

    pub fn cycle(k: usize) -> Result<Graph> {
        if k < 3 {
            return Err(Error::CycleTooShort(k));
        }
        let edges: Vec<_> = (0..k).map(|i| (i, (i + 1) % k)).collect();
        let labels = (1..=k).map(|i| format!("v{i}")).collect();
        Graph::from_parts(k, edges, labels, Family::Cycle(k))
    }

    pub fn hypergrid(dims: &[usize]) -> Result<Graph> {
        if dims.len() < 2 || dims.iter().any(|&d| d < 2) {
            return Err(Error::BadDimension(dims.to_vec()));
        }
        let n = dims.iter().fold(1usize, |acc, &d| acc.saturating_mul(d));
        if n > MAX_VERTICES {
            return Err(Error::GraphTooLarge {
                n,
                cap: MAX_VERTICES,
            });
        }
        let mut strides = vec![1; dims.len()];
        for i in (0..dims.len() - 1).rev() {
            strides[i] = strides[i + 1] * dims[i + 1];
        }
        let mut edges = Vec::new();
        let mut labels = Vec::with_capacity(n);
        for id in 0..n {
            let coords: Vec<usize> = (0..dims.len()).map(|i| id / strides[i] % dims[i]).collect();
            for i in 0..dims.len() {
                if coords[i] + 1 < dims[i] {
                    edges.push((id, id + strides[i]));
                }
            }
            let parts: Vec<String> = coords.iter().map(|c| (c + 1).to_string()).collect();
            labels.push(format!("({})", parts.join(",")));
        }
        Graph::from_parts(n, edges, labels, Family::Hypergrid(dims.to_vec()))
    }

    pub fn custom(edges: &[(usize, usize)], n: Option<usize>) -> Result<Graph> {
        let n = n.unwrap_or_else(|| infer_n(edges));
        check_edges(n, edges)?;
        Graph::from_parts(n, edges.to_vec(), id_labels(n), Family::Custom)
    }

    fn from_parts(
        n: usize,
        edges: Vec<(usize, usize)>,
        labels: Vec<String>,
        family: Family,
    ) -> Result<Graph> {
        if n > MAX_VERTICES {
            return Err(Error::GraphTooLarge {
                n,
                cap: MAX_VERTICES,
            });
        }
        check_edges(n, &edges)?;
        let mut adj = vec![0u64; n];
        for &(a, b) in &edges {
            adj[a] |= 1 << b;
            adj[b] |= 1 << a;
        }
        let mut dist = vec![u32::MAX; n * n];
        let mut queue = VecDeque::with_capacity(n);
        for s in 0..n {
            let row = &mut dist[s * n..(s + 1) * n];
            row[s] = 0;
            queue.push_back(s);
            while let Some(u) = queue.pop_front() {
                let du = row[u];
                let mut nb = adj[u];
                while nb != 0 {
                    let w = nb.trailing_zeros() as usize;
                    nb &= nb - 1;
                    if row[w] == u32::MAX {
                        row[w] = du + 1;
                        queue.push_back(w);
                    }
                }
            }
            if row.contains(&u32::MAX) {
                return Err(Error::DisconnectedInput);
            }
        }
        Ok(Graph {
            n,
            edges,
            adj,
            dist,
            labels,
            family,
        })
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn dist(&self, v: usize, w: usize) -> u32 {
        self.dist[v * self.n + w]
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// Neighbours of `v` as a bitmask.
    #[inline]
    pub fn adjacency(&self, v: usize) -> u64 {
        self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].count_ones() as usize
    }

    pub fn is_edge(&self, v: usize, w: usize) -> bool {
        self.adj[v] >> w & 1 == 1
    }

    pub fn diameter(&self) -> u32 {
        self.dist.iter().copied().max().unwrap_or(0)
    }

    /// Connected with `n - 1` edges.
    pub fn is_tree(&self) -> bool {
        self.edges.len() + 1 == self.n
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Resolve a user-facing vertex token. Cycles accept `v3` or `3`
    /// (1-based), hypergrids accept `(1,2)` or `1,2`, everything else the
    /// numeric id.
    pub fn vertex_by_label(&self, token: &str) -> Option<usize> {
        let token = token.trim();
        if let Some(v) = self.labels.iter().position(|l| l == token) {
            return Some(v);
        }
        match &self.family {
            Family::Cycle(k) => token
                .parse::<usize>()
                .ok()
                .filter(|&i| (1..=*k).contains(&i))
                .map(|i| i - 1),
            Family::Hypergrid(_) => {
                let bare = token.trim_start_matches('(').trim_end_matches(')');
                let canon = bare
                    .split(',')
                    .map(|p| p.trim())
                    .collect::<Vec<_>>()
                    .join(",");
                self.labels.iter().position(|l| *l == format!("({canon})"))
            }
            _ => None,
        }
    }

    /// Bitmask with every vertex set.
    #[inline]
    pub fn full_mask(&self) -> u64 {
        if self.n == 64 {
            u64::MAX
        } else {
            (1u64 << self.n) - 1
        }
    }
}

fn id_labels(n: usize) -> Vec<String> {
    (0..n).map(|i| i.to_string()).collect()
}

fn check_edges(n: usize, edges: &[(usize, usize)]) -> Result<()> {
    if n > MAX_VERTICES {
        return Err(Error::GraphTooLarge {
            n,
            cap: MAX_VERTICES,
        });
    }
    let mut seen = vec![0u64; n];
    for &(a, b) in edges {
        if a >= n || b >= n || a == b || seen[a] >> b & 1 == 1 {
            return Err(Error::InvalidEdge(a, b));
        }
        seen[a] |= 1 << b;
        seen[b] |= 1 << a;
    }
    Ok(())
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra.max(rb)] = ra.min(rb);
        true
    }
}

/// Injective, distance-preserving map from a pattern graph into a host.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    pub map: Vec<usize>,
}

impl Embedding {
    /// Checks injectivity and exact distance preservation.
    pub fn is_valid(&self, pattern: &Graph, host: &Graph) -> bool {
        if self.map.len() != pattern.n() || self.map.iter().any(|&h| h >= host.n()) {
            return false;
        }
        let mut used = 0u64;
        for &h in &self.map {
            if used >> h & 1 == 1 {
                return false;
            }
            used |= 1 << h;
        }
        (0..pattern.n()).all(|u| {
            (0..pattern.n()).all(|w| host.dist(self.map[u], self.map[w]) == pattern.dist(u, w))
        })
    }

    /// Host vertex set covered by the image.
    pub fn image_mask(&self) -> u64 {
        self.map.iter().fold(0, |m, &h| m | 1 << h)
    }
}

/// Exhaustive backtracking search for a distance-preserving embedding of
/// `pattern` into `host`; `None` means no such embedding exists.
/// Candidates are tried lowest host id first.
pub fn find_dp_embedding(pattern: &Graph, host: &Graph) -> Option<Embedding> {
    let mut found = None;
    for_each_dp_embedding(pattern, host, |map| {
        found = Some(Embedding { map: map.to_vec() });
        ControlFlow::Break(())
    });
    found
}

/// Visits every distance-preserving embedding until `visit` breaks, in
/// lexicographic order of the images listed in BFS order of the pattern.
pub fn for_each_dp_embedding<F>(pattern: &Graph, host: &Graph, mut visit: F)
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    let p = pattern.n();
    if p > host.n() {
        return;
    }
    // Pattern vertices in BFS order from 0 so each new vertex is adjacent to
    // an already-placed one, which keeps candidate sets small.
    let order = bfs_order(pattern);
    let mut map = vec![usize::MAX; p];
    let mut used = 0u64;
    let _ = extend(pattern, host, &order, 0, &mut map, &mut used, &mut visit);
}

fn bfs_order(g: &Graph) -> Vec<usize> {
    let mut order = Vec::with_capacity(g.n());
    if g.n() == 0 {
        return order;
    }
    let mut seen = 1u64;
    order.push(0);
    let mut i = 0;
    while i < order.len() {
        let u = order[i];
        i += 1;
        let mut nb = g.adjacency(u) & !seen;
        while nb != 0 {
            let w = nb.trailing_zeros() as usize;
            nb &= nb - 1;
            seen |= 1 << w;
            order.push(w);
        }
    }
    order
}

fn extend<F>(
    pattern: &Graph,
    host: &Graph,
    order: &[usize],
    depth: usize,
    map: &mut [usize],
    used: &mut u64,
    visit: &mut F,
) -> ControlFlow<()>
where
    F: FnMut(&[usize]) -> ControlFlow<()>,
{
    if depth == order.len() {
        return visit(map);
    }
    let u = order[depth];
    'cand: for h in 0..host.n() {
        if *used >> h & 1 == 1 {
            continue;
        }
        for &placed in &order[..depth] {
            if host.dist(map[placed], h) != pattern.dist(placed, u) {
                continue 'cand;
            }
        }
        map[u] = h;
        *used |= 1 << h;
        let flow = extend(pattern, host, order, depth + 1, map, used, visit);
        *used &= !(1 << h);
        map[u] = usize::MAX;
        flow?;
    }
    ControlFlow::Continue(())
}

/// All automorphisms (distance-preserving self-bijections) of `g`.
pub fn automorphisms(g: &Graph) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    for_each_dp_embedding(g, g, |map| {
        out.push(map.to_vec());
        ControlFlow::Continue(())
    });
    out
}

/// Vertex orbits under the automorphism group, each sorted, ordered by
/// smallest member.
pub fn vertex_orbits(g: &Graph) -> Vec<Vec<usize>> {
    let mut uf = UnionFind::new(g.n());
    for perm in automorphisms(g) {
        for (v, &w) in perm.iter().enumerate() {
            uf.union(v, w);
        }
    }
    let mut orbits: Vec<Vec<usize>> = Vec::new();
    let mut root_index = vec![usize::MAX; g.n()];
    for v in 0..g.n() {
        let r = uf.find(v);
        if root_index[r] == usize::MAX {
            root_index[r] = orbits.len();
            orbits.push(Vec::new());
        }
        orbits[root_index[r]].push(v);
    }
    orbits
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cycle_four_distances() {
        let g = Graph::cycle(4).unwrap();
        assert_eq!(g.dist(0, 2), 2);
        assert_eq!(g.dist(0, 1), 1);
        assert_eq!(g.label(0), "v1");
    }

    #[test]
    fn cycle_degree_and_diameter() {
        for k in 3..=12 {
            let g = Graph::cycle(k).unwrap();
            assert!((0..k).all(|v| g.degree(v) == 2));
            assert_eq!(g.diameter() as usize, k / 2);
        }
    }

    #[test]
    fn binary_cube() {
        let g = Graph::hypergrid(&[2, 2, 2]).unwrap();
        assert_eq!(g.n(), 8);
        assert!((0..8).all(|v| g.degree(v) == 3));
        assert_eq!(g.diameter(), 3);
    }

    #[test]
    fn square_grid_is_c4() {
        let grid = Graph::hypergrid(&[2, 2]).unwrap();
        let c4 = Graph::cycle(4).unwrap();
        // A bijective isometry between graphs of equal order is an isomorphism.
        let e = find_dp_embedding(&c4, &grid).unwrap();
        assert!(e.is_valid(&c4, &grid));
        assert_eq!(e.image_mask(), grid.full_mask());
        assert_eq!(grid.edges().len(), c4.edges().len());
    }

    #[test]
    fn hypergrid_layout_is_row_major() {
        let g = Graph::hypergrid(&[2, 3]).unwrap();
        assert_eq!(g.label(0), "(1,1)");
        assert_eq!(g.label(2), "(1,3)");
        assert_eq!(g.label(3), "(2,1)");
        assert_eq!(g.vertex_by_label("2,3"), Some(5));
        assert_eq!(g.vertex_by_label("(1, 2)"), Some(1));
        for v in 0..6usize {
            for w in 0..6 {
                let l1 = (v / 3).abs_diff(w / 3) + (v % 3).abs_diff(w % 3);
                assert_eq!(g.dist(v, w) as usize, l1);
            }
        }
    }

    #[test]
    fn construction_errors() {
        assert_eq!(Graph::cycle(2).unwrap_err(), Error::CycleTooShort(2));
        assert!(matches!(
            Graph::hypergrid(&[3]),
            Err(Error::BadDimension(_))
        ));
        assert!(matches!(
            Graph::hypergrid(&[3, 1]),
            Err(Error::BadDimension(_))
        ));
        assert_eq!(
            Graph::tree(&[(0, 1), (1, 2), (2, 0)], None).unwrap_err(),
            Error::CyclicTreeInput
        );
        assert_eq!(
            Graph::tree(&[(0, 1), (2, 3)], None).unwrap_err(),
            Error::DisconnectedInput
        );
        assert_eq!(
            Graph::custom(&[(0, 1), (2, 3)], None).unwrap_err(),
            Error::DisconnectedInput
        );
        assert!(matches!(
            Graph::hypergrid(&[2; 7]),
            Err(Error::GraphTooLarge { .. })
        ));
        assert!(matches!(
            Graph::path(65),
            Err(Error::GraphTooLarge { n: 65, .. })
        ));
        assert!(matches!(
            Graph::custom(&[(0, 0)], None),
            Err(Error::InvalidEdge(0, 0))
        ));
    }

    #[test]
    fn cycle_labels_resolve() {
        let g = Graph::cycle(5).unwrap();
        assert_eq!(g.vertex_by_label("v5"), Some(4));
        assert_eq!(g.vertex_by_label("3"), Some(2));
        assert_eq!(g.vertex_by_label("6"), None);
    }

    #[test]
    fn spec_json_round_trip() {
        let spec: GraphSpec = serde_json::from_str(r#"{"kind":"hypergrid","dims":[3,3]}"#).unwrap();
        assert_eq!(spec, GraphSpec::Hypergrid { dims: vec![3, 3] });
        let spec: GraphSpec =
            serde_json::from_str(r#"{"kind":"tree","edges":[[0,1],[1,2]]}"#).unwrap();
        assert_eq!(spec.build().unwrap().n(), 3);
        assert_eq!(spec.name(), "tree(n=3)");
    }

    #[test]
    fn odd_cycle_not_in_bipartite_grid() {
        let c3 = Graph::cycle(3).unwrap();
        assert!(find_dp_embedding(&c3, &Graph::hypergrid(&[3, 3]).unwrap()).is_none());
    }

    #[test]
    fn c6_in_binary_cube() {
        let c6 = Graph::cycle(6).unwrap();
        let cube = Graph::hypergrid(&[2, 2, 2]).unwrap();
        let e = find_dp_embedding(&c6, &cube).expect("C6 embeds in the cube");
        assert!(e.is_valid(&c6, &cube));
    }

    #[test]
    fn three_by_three_in_four_by_five() {
        let p = Graph::hypergrid(&[3, 3]).unwrap();
        let h = Graph::hypergrid(&[4, 5]).unwrap();
        let e = find_dp_embedding(&p, &h).unwrap();
        assert!(e.is_valid(&p, &h));
        // lowest host ids first: the top-left corner translation
        assert_eq!(e.map, vec![0, 1, 2, 5, 6, 7, 10, 11, 12]);
    }

    #[test]
    fn automorphism_group_orders() {
        assert_eq!(automorphisms(&Graph::cycle(6).unwrap()).len(), 12);
        assert_eq!(
            automorphisms(&Graph::hypergrid(&[2, 2, 2]).unwrap()).len(),
            48
        );
        assert_eq!(automorphisms(&Graph::hypergrid(&[3, 3]).unwrap()).len(), 8);
        assert_eq!(automorphisms(&Graph::hypergrid(&[2, 3]).unwrap()).len(), 4);
        let orbits = vertex_orbits(&Graph::hypergrid(&[2, 3]).unwrap());
        assert_eq!(orbits, vec![vec![0, 2, 3, 5], vec![1, 4]]);
    }
}
