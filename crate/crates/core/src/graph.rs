//! Communication topologies and the combinatorial structure the policies
//! need: hop distances, graph powers, clique covers, weighted independent
//! sets, leader/follower assignment and the consensus matrix spectrum.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::seq::SliceRandom;
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("self-loop on vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {vertex} out of range for graph with {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },
    #[error("graph is not connected")]
    Disconnected,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("edge list line {line}: {reason}")]
    Parse { line: usize, reason: String },
    #[error("requested {requested} vertices but the reachable component has only {available}")]
    SubgraphTooLarge { requested: usize, available: usize },
    #[error("no connected Erdos-Renyi sample after {0} attempts")]
    ResampleLimit(usize),
}

/// Undirected simple graph on vertices `0..n`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
}

impl Graph {
    /// Edgeless graph on `n` vertices.
    pub fn empty(n: usize) -> Self {
        Self {
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a graph from an edge list. Duplicate edges collapse into one.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self, GraphError>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut g = Self::empty(n);
        for (a, b) in edges {
            g.add_edge(a, b)?;
        }
        Ok(g)
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Self::empty(n);
        for a in 0..n {
            for b in a + 1..n {
                g.insert_unchecked(a, b);
            }
        }
        g
    }

    pub fn path(n: usize) -> Self {
        let mut g = Self::empty(n);
        for a in 1..n {
            g.insert_unchecked(a - 1, a);
        }
        g
    }

    pub fn cycle(n: usize) -> Self {
        let mut g = Self::path(n);
        if n > 2 {
            g.insert_unchecked(0, n - 1);
        }
        g
    }

    /// Star with center 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        let mut g = Self::empty(leaves + 1);
        for leaf in 1..=leaves {
            g.insert_unchecked(0, leaf);
        }
        g
    }

    pub fn add_edge(&mut self, a: usize, b: usize) -> Result<bool, GraphError> {
        let n = self.num_vertices();
        for v in [a, b] {
            if v >= n {
                return Err(GraphError::VertexOutOfRange { vertex: v, n });
            }
        }
        if a == b {
            return Err(GraphError::SelfLoop(a));
        }
        if self.has_edge(a, b) {
            return Ok(false);
        }
        self.insert_unchecked(a, b);
        Ok(true)
    }

    fn insert_unchecked(&mut self, a: usize, b: usize) {
        let pos = self.adj[a].binary_search(&b).unwrap_err();
        self.adj[a].insert(pos, b);
        let pos = self.adj[b].binary_search(&a).unwrap_err();
        self.adj[b].insert(pos, a);
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.adj.iter().map(Vec::len).sum::<usize>() / 2
    }

    /// Neighbors in ascending order.
    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adj
            .get(a)
            .is_some_and(|nbrs| nbrs.binary_search(&b).is_ok())
    }

    /// Edges `(a, b)` with `a < b`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(a, nbrs)| nbrs.iter().filter(move |&&b| b > a).map(move |&b| (a, b)))
    }

    pub fn is_connected(&self) -> bool {
        let n = self.num_vertices();
        if n == 0 {
            return false;
        }
        bfs_from(self, 0).iter().all(|&d| d != UNREACHABLE)
    }

    pub fn ensure_connected(&self) -> Result<(), GraphError> {
        if self.num_vertices() == 0 {
            return Err(GraphError::Empty);
        }
        if !self.is_connected() {
            return Err(GraphError::Disconnected);
        }
        Ok(())
    }

    /// Whether `vertices` are pairwise adjacent.
    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(i, &a)| vertices[i + 1..].iter().all(|&b| self.has_edge(a, b)))
    }

    pub fn is_independent(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(i, &a)| vertices[i + 1..].iter().all(|&b| !self.has_edge(a, b)))
    }
}

pub const UNREACHABLE: u32 = u32::MAX;

fn bfs_from(g: &Graph, source: usize) -> Vec<u32> {
    let mut dist = vec![UNREACHABLE; g.num_vertices()];
    let mut queue = VecDeque::new();
    dist[source] = 0;
    queue.push_back(source);
    while let Some(v) = queue.pop_front() {
        let next = dist[v] + 1;
        for &w in g.neighbors(v) {
            if dist[w] == UNREACHABLE {
                dist[w] = next;
                queue.push_back(w);
            }
        }
    }
    dist
}

/// All-pairs hop counts. Unreachable pairs hold [`UNREACHABLE`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DistanceMatrix {
    n: usize,
    d: Vec<u32>,
}

impl DistanceMatrix {
    pub fn num_vertices(&self) -> usize {
        self.n
    }

    /// Raw entry, possibly [`UNREACHABLE`].
    pub fn raw(&self, a: usize, b: usize) -> u32 {
        self.d[a * self.n + b]
    }

    pub fn get(&self, a: usize, b: usize) -> Option<usize> {
        match self.raw(a, b) {
            UNREACHABLE => None,
            d => Some(d as usize),
        }
    }

    /// Hop distance; panics on unreachable pairs, which connected graphs never have.
    pub fn hops(&self, a: usize, b: usize) -> usize {
        self.get(a, b).expect("pair is unreachable")
    }

    /// Largest finite distance, or `None` when some pair is unreachable.
    pub fn diameter(&self) -> Option<usize> {
        if self.d.contains(&UNREACHABLE) {
            return None;
        }
        Some(self.d.iter().copied().max().unwrap_or(0) as usize)
    }

    /// Vertices within `radius` hops of `v`, excluding `v`.
    pub fn ball(&self, v: usize, radius: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&w| w != v && self.get(v, w).is_some_and(|d| d <= radius))
            .collect()
    }
}

pub fn bfs_distances(g: &Graph) -> DistanceMatrix {
    let n = g.num_vertices();
    let mut d = Vec::with_capacity(n * n);
    for s in 0..n {
        d.extend(bfs_from(g, s));
    }
    DistanceMatrix { n, d }
}

pub fn diameter(g: &Graph) -> Option<usize> {
    bfs_distances(g).diameter()
}

/// Graph with an edge between every pair at hop distance `1..=gamma`.
pub fn power_graph(g: &Graph, gamma: usize) -> Graph {
    power_graph_from_distances(&bfs_distances(g), gamma)
}

pub fn power_graph_from_distances(dist: &DistanceMatrix, gamma: usize) -> Graph {
    let n = dist.num_vertices();
    let mut adj = vec![Vec::new(); n];
    for (a, nbrs) in adj.iter_mut().enumerate() {
        for b in 0..n {
            if a != b && dist.get(a, b).is_some_and(|d| d <= gamma) {
                nbrs.push(b);
            }
        }
    }
    Graph { adj }
}

/// Partition of the vertices into cliques.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueCover {
    pub blocks: Vec<Vec<usize>>,
    pub clique_of: Vec<usize>,
}

impl CliqueCover {
    pub fn num_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn same_clique(&self, a: usize, b: usize) -> bool {
        self.clique_of[a] == self.clique_of[b]
    }

    pub fn block_of(&self, v: usize) -> &[usize] {
        &self.blocks[self.clique_of[v]]
    }
}

/// Scans vertices in ascending id. Each unassigned vertex seeds a block that
/// then absorbs, lowest id first, every unassigned vertex adjacent to all
/// current members.
pub fn greedy_clique_cover(g: &Graph) -> CliqueCover {
    let n = g.num_vertices();
    let mut clique_of = vec![usize::MAX; n];
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    for seed in 0..n {
        if clique_of[seed] != usize::MAX {
            continue;
        }
        let id = blocks.len();
        let mut block = vec![seed];
        clique_of[seed] = id;
        for cand in seed + 1..n {
            if clique_of[cand] == usize::MAX && block.iter().all(|&m| g.has_edge(m, cand)) {
                block.push(cand);
                clique_of[cand] = id;
            }
        }
        blocks.push(block);
    }
    CliqueCover { blocks, clique_of }
}

/// Greedy maximal weighted independent set: repeatedly take the heaviest
/// remaining vertex (ties to the lowest id) and drop it and its neighbors.
/// Returned ascending.
pub fn greedy_mwis(g: &Graph, weights: &[f64]) -> Vec<usize> {
    assert_eq!(weights.len(), g.num_vertices(), "one weight per vertex");
    let mut alive = vec![true; g.num_vertices()];
    let mut order: Vec<usize> = (0..g.num_vertices()).collect();
    // stable sort keeps lowest id first among equal weights
    order.sort_by(|&a, &b| weights[b].total_cmp(&weights[a]));
    let mut chosen = Vec::new();
    for v in order {
        if !alive[v] {
            continue;
        }
        chosen.push(v);
        alive[v] = false;
        for &w in g.neighbors(v) {
            alive[w] = false;
        }
    }
    chosen.sort_unstable();
    chosen
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LeaderAssignment {
    pub leaders: Vec<usize>,
    pub leader_of: Vec<usize>,
    pub followers_of: BTreeMap<usize, Vec<usize>>,
    /// Hop distance in the base graph from each agent to its leader.
    pub distance_to_leader: Vec<usize>,
}

impl LeaderAssignment {
    pub fn is_leader(&self, v: usize) -> bool {
        self.leader_of[v] == v
    }
}

/// Leaders form a greedy MWIS of `g_gamma` weighted by `g_gamma` degree; every
/// follower attaches to its adjacent leader of highest `g_gamma` degree, ties
/// to the lowest leader id. `dist` holds base-graph hop counts.
pub fn assign_leaders(g_gamma: &Graph, dist: &DistanceMatrix) -> LeaderAssignment {
    let n = g_gamma.num_vertices();
    let weights: Vec<f64> = (0..n).map(|v| g_gamma.degree(v) as f64).collect();
    let leaders = greedy_mwis(g_gamma, &weights);
    let mut is_leader = vec![false; n];
    for &l in &leaders {
        is_leader[l] = true;
    }
    let mut leader_of = vec![usize::MAX; n];
    let mut followers_of: BTreeMap<usize, Vec<usize>> =
        leaders.iter().map(|&l| (l, Vec::new())).collect();
    for v in 0..n {
        if is_leader[v] {
            leader_of[v] = v;
            continue;
        }
        let best = g_gamma
            .neighbors(v)
            .iter()
            .copied()
            .filter(|&w| is_leader[w])
            // neighbors are ascending, so max_by_key keeping the first max needs reversed ids
            .min_by(|&a, &b| g_gamma.degree(b).cmp(&g_gamma.degree(a)).then(a.cmp(&b)))
            .expect("maximal independent set dominates every vertex");
        leader_of[v] = best;
        followers_of.get_mut(&best).expect("leader present").push(v);
    }
    let distance_to_leader = (0..n).map(|v| dist.hops(v, leader_of[v])).collect();
    LeaderAssignment {
        leaders,
        leader_of,
        followers_of,
        distance_to_leader,
    }
}

/// Consensus matrix `P = I - (kappa / d_max) L` with its eigendecomposition
/// and the deviation constants used by the consensus baseline.
#[derive(Debug, Clone)]
pub struct ConsensusSpectrum {
    pub p: DMatrix<f64>,
    pub kappa: f64,
    pub d_max: usize,
    /// Descending.
    pub eigenvalues: Vec<f64>,
    /// Column `i` pairs with `eigenvalues[i]`.
    pub eigenvectors: DMatrix<f64>,
    pub epsilon: f64,
    /// One constant per agent index.
    pub epsilon_k: Vec<f64>,
}

impl ConsensusSpectrum {
    pub fn num_agents(&self) -> usize {
        self.eigenvalues.len()
    }

    /// Frobenius norm of `P - U diag(lambda) U^T`.
    pub fn reconstruction_error(&self) -> f64 {
        let lambda =
            DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(&self.eigenvalues));
        let rebuilt = &self.eigenvectors * lambda * self.eigenvectors.transpose();
        (&self.p - rebuilt).norm()
    }
}

pub fn consensus_spectrum(g: &Graph, kappa: f64) -> Result<ConsensusSpectrum, GraphError> {
    if !(kappa > 0.0 && kappa < 1.0) {
        return Err(GraphError::InvalidParameter(format!(
            "kappa must lie in (0, 1), got {kappa}"
        )));
    }
    g.ensure_connected()?;
    let m = g.num_vertices();
    let d_max = g.max_degree();
    let mut p = DMatrix::<f64>::identity(m, m);
    if d_max > 0 {
        let step = kappa / d_max as f64;
        for v in 0..m {
            p[(v, v)] -= step * g.degree(v) as f64;
            for &w in g.neighbors(v) {
                p[(v, w)] += step;
            }
        }
    }

    let eig = SymmetricEigen::new(p.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut eigenvectors = DMatrix::<f64>::zeros(m, m);
    for (col, &i) in order.iter().enumerate() {
        eigenvectors.set_column(col, &eig.eigenvectors.column(i));
    }

    let epsilon = (m as f64).sqrt()
        * eigenvalues
            .iter()
            .skip(1)
            .map(|l| l.abs() / (1.0 - l.abs()))
            .sum::<f64>();
    let epsilon_k = agent_epsilons(&eigenvalues, &eigenvectors);

    Ok(ConsensusSpectrum {
        p,
        kappa,
        d_max,
        eigenvalues,
        eigenvectors,
        epsilon,
        epsilon_k,
    })
}

// eps^k = M * sum_{p>=1} sum_{j>=2} |l_p l_j| / (1 - |l_p l_j|) * a_pj(k), where
// a_pj(k) weighs the diagonal entry (u_p u_j^T)_kk by the signed or absolute
// overlap of the two eigenvectors.
fn agent_epsilons(eigenvalues: &[f64], u: &DMatrix<f64>) -> Vec<f64> {
    let m = eigenvalues.len();
    let mut eps = vec![0.0; m];
    for p in 0..m {
        for j in 1..m {
            let prod = eigenvalues[p] * eigenvalues[j];
            let mag = prod.abs();
            if mag == 0.0 {
                continue;
            }
            let weight = mag / (1.0 - mag);
            let (mut omega_plus, mut omega_minus, mut omega_abs) = (0.0, 0.0, 0.0);
            for d in 0..m {
                let x = u[(d, p)] * u[(d, j)];
                if x >= 0.0 {
                    omega_plus += x;
                }
                if x <= 0.0 {
                    omega_minus += x;
                }
                omega_abs += x.abs();
            }
            for (k, e) in eps.iter_mut().enumerate() {
                let diag = u[(k, p)] * u[(k, j)];
                let a = if prod >= 0.0 {
                    if diag >= 0.0 {
                        omega_plus * diag
                    } else {
                        omega_minus * diag
                    }
                } else {
                    omega_abs * diag.abs()
                };
                *e += weight * a;
            }
        }
    }
    for e in &mut eps {
        *e *= m as f64;
    }
    eps
}

/// Erdos-Renyi G(m, p), resampled until connected.
pub fn generate_er<R: Rng + ?Sized>(m: usize, p: f64, rng: &mut R) -> Result<Graph, GraphError> {
    const MAX_ATTEMPTS: usize = 1000;
    if m < 2 {
        return Err(GraphError::InvalidParameter(format!(
            "need m >= 2, got {m}"
        )));
    }
    if !(p > 0.0 && p <= 1.0) {
        return Err(GraphError::InvalidParameter(format!(
            "need 0 < p <= 1, got {p}"
        )));
    }
    for _ in 0..MAX_ATTEMPTS {
        let mut g = Graph::empty(m);
        for a in 0..m {
            for b in a + 1..m {
                if rng.gen_bool(p) {
                    g.insert_unchecked(a, b);
                }
            }
        }
        if g.is_connected() {
            return Ok(g);
        }
    }
    Err(GraphError::ResampleLimit(MAX_ATTEMPTS))
}

/// Barabasi-Albert preferential attachment seeded with a clique on
/// `attach + 1` vertices.
pub fn generate_ba<R: Rng + ?Sized>(
    m: usize,
    attach: usize,
    rng: &mut R,
) -> Result<Graph, GraphError> {
    if m < 2 || attach < 1 || attach >= m {
        return Err(GraphError::InvalidParameter(format!(
            "need m >= 2 and 1 <= attach < m, got m={m}, attach={attach}"
        )));
    }
    let mut g = Graph::empty(m);
    // every edge endpoint once, so uniform picks are degree-proportional
    let mut endpoints = Vec::new();
    for a in 0..=attach {
        for b in a + 1..=attach {
            g.insert_unchecked(a, b);
            endpoints.extend([a, b]);
        }
    }
    for v in attach + 1..m {
        let mut targets = BTreeSet::new();
        while targets.len() < attach {
            targets.insert(endpoints[rng.gen_range(0..endpoints.len())]);
        }
        for t in targets {
            g.insert_unchecked(v, t);
            endpoints.extend([v, t]);
        }
    }
    Ok(g)
}

/// Parses a whitespace-separated `u v` edge list. Lines starting with `#`
/// and blank lines are skipped, self-loops are dropped, duplicate edges
/// collapse, and vertex ids are re-indexed densely in ascending order.
pub fn load_edge_list(text: &str) -> Result<Graph, GraphError> {
    let mut raw_edges = Vec::new();
    let mut ids = BTreeSet::new();
    for (idx, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let mut fields = trimmed.split_whitespace();
        let parse = |tok: Option<&str>| -> Result<u64, GraphError> {
            let tok = tok.ok_or_else(|| GraphError::Parse {
                line: idx + 1,
                reason: "expected two vertex ids".into(),
            })?;
            tok.parse::<u64>().map_err(|e| GraphError::Parse {
                line: idx + 1,
                reason: format!("bad vertex id {tok:?}: {e}"),
            })
        };
        let a = parse(fields.next())?;
        let b = parse(fields.next())?;
        if fields.next().is_some() {
            return Err(GraphError::Parse {
                line: idx + 1,
                reason: "trailing fields".into(),
            });
        }
        ids.insert(a);
        ids.insert(b);
        raw_edges.push((a, b));
    }
    if ids.is_empty() {
        return Err(GraphError::Empty);
    }
    let index: BTreeMap<u64, usize> = ids.into_iter().enumerate().map(|(i, id)| (id, i)).collect();
    let mut g = Graph::empty(index.len());
    for (a, b) in raw_edges {
        if a != b {
            g.add_edge(index[&a], index[&b])?;
        }
    }
    Ok(g)
}

/// BFS from a uniformly random seed vertex until `n` vertices are collected;
/// the induced subgraph is returned with vertices re-indexed in visit order.
pub fn sample_connected_subgraph<R: Rng + ?Sized>(
    g: &Graph,
    n: usize,
    rng: &mut R,
) -> Result<Graph, GraphError> {
    if n == 0 {
        return Err(GraphError::InvalidParameter(
            "subgraph size must be positive".into(),
        ));
    }
    if n > g.num_vertices() {
        return Err(GraphError::SubgraphTooLarge {
            requested: n,
            available: g.num_vertices(),
        });
    }
    let vertices: Vec<usize> = (0..g.num_vertices()).collect();
    let seed = *vertices.choose(rng).ok_or(GraphError::Empty)?;
    let mut visited = vec![false; g.num_vertices()];
    let mut order = Vec::with_capacity(n);
    let mut queue = VecDeque::from([seed]);
    visited[seed] = true;
    while let Some(v) = queue.pop_front() {
        order.push(v);
        if order.len() == n {
            break;
        }
        for &w in g.neighbors(v) {
            if !visited[w] {
                visited[w] = true;
                queue.push_back(w);
            }
        }
    }
    if order.len() < n {
        return Err(GraphError::SubgraphTooLarge {
            requested: n,
            available: order.len(),
        });
    }
    let mut new_id = vec![usize::MAX; g.num_vertices()];
    for (i, &v) in order.iter().enumerate() {
        new_id[v] = i;
    }
    let mut sub = Graph::empty(n);
    for (i, &v) in order.iter().enumerate() {
        for &w in g.neighbors(v) {
            let j = new_id[w];
            if j != usize::MAX && i < j {
                sub.insert_unchecked(i, j);
            }
        }
    }
    Ok(sub)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn floyd_warshall(g: &Graph) -> Vec<Vec<u64>> {
        let n = g.num_vertices();
        let inf = u64::MAX / 4;
        let mut d = vec![vec![inf; n]; n];
        for (v, row) in d.iter_mut().enumerate() {
            row[v] = 0;
        }
        for (a, b) in g.edges() {
            d[a][b] = 1;
            d[b][a] = 1;
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    if d[i][k] + d[k][j] < d[i][j] {
                        d[i][j] = d[i][k] + d[k][j];
                    }
                }
            }
        }
        d
    }

    #[test]
    fn rejects_self_loops_and_dedups() {
        let mut g = Graph::empty(3);
        assert_eq!(g.add_edge(1, 1), Err(GraphError::SelfLoop(1)));
        assert_eq!(g.add_edge(0, 1), Ok(true));
        assert_eq!(g.add_edge(1, 0), Ok(false));
        assert_eq!(g.num_edges(), 1);
        assert!(g.has_edge(1, 0));
        assert!(matches!(
            g.add_edge(0, 7),
            Err(GraphError::VertexOutOfRange { .. })
        ));
    }

    #[test]
    fn distances_on_small_graphs() {
        let k3 = Graph::complete(3);
        let d = bfs_distances(&k3);
        for a in 0..3 {
            for b in 0..3 {
                assert_eq!(d.hops(a, b), usize::from(a != b));
            }
        }
        let p3 = Graph::path(3);
        assert_eq!(bfs_distances(&p3).hops(0, 2), 2);
    }

    #[test]
    fn distances_match_floyd_warshall_on_er() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let g = generate_er(50, 0.7, &mut rng).unwrap();
        let d = bfs_distances(&g);
        let fw = floyd_warshall(&g);
        for a in 0..50 {
            for b in 0..50 {
                assert_eq!(d.hops(a, b) as u64, fw[a][b]);
            }
        }
    }

    #[test]
    fn unreachable_pairs_use_sentinel() {
        let g = Graph::from_edges(4, [(0, 1), (2, 3)]).unwrap();
        let d = bfs_distances(&g);
        assert_eq!(d.get(0, 2), None);
        assert_eq!(d.raw(0, 3), UNREACHABLE);
        assert_eq!(d.diameter(), None);
        assert_eq!(g.ensure_connected(), Err(GraphError::Disconnected));
    }

    #[test]
    fn power_graph_cases() {
        assert_eq!(power_graph(&Graph::path(3), 2), Graph::complete(3));
        let g = Graph::cycle(6);
        assert_eq!(power_graph(&g, 0).num_edges(), 0);
        let p4 = power_graph(&Graph::path(4), 2);
        let edges: Vec<_> = p4.edges().collect();
        assert_eq!(edges, vec![(0, 1), (0, 2), (1, 2), (1, 3), (2, 3)]);
    }

    #[test]
    fn clique_cover_cases() {
        assert_eq!(greedy_clique_cover(&Graph::complete(5)).num_blocks(), 1);
        assert_eq!(greedy_clique_cover(&Graph::empty(4)).num_blocks(), 4);
        let cover = greedy_clique_cover(&Graph::path(4));
        assert_eq!(cover.blocks, vec![vec![0, 1], vec![2, 3]]);
        assert_eq!(cover.clique_of, vec![0, 0, 1, 1]);
        assert!(cover.same_clique(2, 3));
    }

    #[test]
    fn mwis_cases() {
        assert_eq!(
            greedy_mwis(&Graph::empty(4), &[1.0, 5.0, 2.0, 0.0]),
            vec![0, 1, 2, 3]
        );
        assert_eq!(greedy_mwis(&Graph::path(3), &[3.0, 1.0, 3.0]), vec![0, 2]);
        let star = Graph::star(4);
        assert_eq!(greedy_mwis(&star, &[4.0, 1.0, 1.0, 1.0, 1.0]), vec![0]);
        // unit weights: ties go to the lowest id, which is the center
        assert_eq!(greedy_mwis(&star, &[1.0; 5]), vec![0]);
    }

    #[test]
    fn leaders_on_complete_path_and_star() {
        let k5 = Graph::complete(5);
        let la = assign_leaders(&k5, &bfs_distances(&k5));
        assert_eq!(la.leaders, vec![0]);
        assert_eq!(la.followers_of[&0], vec![1, 2, 3, 4]);

        let p3 = Graph::path(3);
        let la = assign_leaders(&p3, &bfs_distances(&p3));
        assert_eq!(la.leaders, vec![1]);
        assert_eq!(la.leader_of, vec![1, 1, 1]);
        assert_eq!(la.distance_to_leader, vec![1, 0, 1]);

        let star = Graph::star(6);
        let la = assign_leaders(&star, &bfs_distances(&star));
        assert_eq!(la.leaders, vec![0]);
        assert!(la.leader_of.iter().all(|&l| l == 0));
    }

    #[test]
    fn follower_picks_highest_degree_leader() {
        // 2 and 4 are leaders of unequal degree, both adjacent to 3
        let g = Graph::from_edges(
            8,
            [
                (0, 2),
                (1, 2),
                (2, 3),
                (3, 4),
                (4, 5),
                (5, 6),
                (4, 6),
                (4, 7),
            ],
        )
        .unwrap();
        let la = assign_leaders(&g, &bfs_distances(&g));
        for &l in &la.leaders {
            for &m in &la.leaders {
                assert!(!g.has_edge(l, m));
            }
        }
        for v in 0..8 {
            let l = la.leader_of[v];
            assert!(l == v || g.has_edge(v, l));
        }
        assert_eq!(la.leaders, vec![2, 4]);
        assert_eq!(la.leader_of[3], 4);
    }

    #[test]
    fn spectrum_k2() {
        let g = Graph::complete(2);
        let s = consensus_spectrum(&g, 0.5).unwrap();
        for v in s.p.iter() {
            assert!((v - 0.5).abs() < 1e-12);
        }
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-12);
        assert!(s.eigenvalues[1].abs() < 1e-12);
        assert!(s.epsilon.abs() < 1e-12);

        let s = consensus_spectrum(&g, 0.25).unwrap();
        assert!((s.eigenvalues[1] - 0.5).abs() < 1e-12);
        assert!((s.epsilon - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn spectrum_rejects_bad_kappa_and_disconnected() {
        let g = Graph::complete(3);
        assert!(consensus_spectrum(&g, 0.0).is_err());
        assert!(consensus_spectrum(&g, 1.0).is_err());
        let split = Graph::empty(2);
        assert_eq!(
            consensus_spectrum(&split, 0.5).unwrap_err(),
            GraphError::Disconnected
        );
    }

    #[test]
    fn spectrum_invariants_on_random_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..10 {
            let g = generate_ba(25, 2, &mut rng).unwrap();
            let s = consensus_spectrum(&g, 0.5).unwrap();
            for r in 0..25 {
                assert!((s.p.row(r).sum() - 1.0).abs() < 1e-9);
            }
            assert!((s.eigenvalues[0] - 1.0).abs() < 1e-9);
            assert!(*s.eigenvalues.last().unwrap() > -1.0);
            assert!(s.reconstruction_error() < 1e-8);
            assert!(s.epsilon >= 0.0);
            assert!(s.epsilon_k.iter().all(|&e| e >= 0.0));
        }
    }

    #[test]
    fn generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(generate_er(5, 1.0, &mut rng).unwrap(), Graph::complete(5));
        let ba = generate_ba(10, 3, &mut rng).unwrap();
        for v in 4..10 {
            assert!(ba.degree(v) >= 3);
        }
        assert!(ba.is_connected());
        assert!(generate_er(1, 0.5, &mut rng).is_err());
        assert!(generate_ba(5, 5, &mut rng).is_err());
        assert_eq!(
            generate_er(30, 1e-6, &mut rng),
            Err(GraphError::ResampleLimit(1000))
        );
    }

    #[test]
    fn er_edge_count_concentrates() {
        let expected = 0.7 * (200.0 * 199.0 / 2.0);
        for seed in 0..20 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = generate_er(200, 0.7, &mut rng).unwrap();
            assert!(g.is_connected());
            let e = g.num_edges() as f64;
            assert!((e - expected).abs() <= 0.05 * expected, "seed {seed}: {e}");
        }
    }

    #[test]
    fn edge_list_parsing() {
        let g = load_edge_list("0 1\n1 2").unwrap();
        assert_eq!(g, Graph::path(3));
        let g = load_edge_list("# header\n# more\n10\t20\n20 30\n\n30 10\n20 10\n5 5\n").unwrap();
        assert_eq!(g.num_vertices(), 4);
        assert_eq!(g.num_edges(), 3);
        assert!(matches!(
            load_edge_list("0 1\n2\n"),
            Err(GraphError::Parse { line: 2, .. })
        ));
        assert!(matches!(
            load_edge_list("0 x"),
            Err(GraphError::Parse { line: 1, .. })
        ));
        assert_eq!(load_edge_list("# nothing\n"), Err(GraphError::Empty));
    }

    #[test]
    fn subgraph_sampling() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let g = generate_ba(120, 2, &mut rng).unwrap();
        for n in [1, 5, 40, 120] {
            let sub = sample_connected_subgraph(&g, n, &mut rng).unwrap();
            assert_eq!(sub.num_vertices(), n);
            assert!(sub.is_connected());
        }
        let split = Graph::from_edges(6, [(0, 1), (1, 2), (3, 4), (4, 5)]).unwrap();
        assert!(matches!(
            sample_connected_subgraph(&split, 4, &mut rng),
            Err(GraphError::SubgraphTooLarge { available: 3, .. })
        ));
        assert!(sample_connected_subgraph(&split, 7, &mut rng).is_err());
    }
}
