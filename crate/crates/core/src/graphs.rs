//! Graph construction, generation, edge-list ingestion, and the
//! propagation matrices with their spectral properties.

use crate::error::{Error, Result};
use crate::matrixkit::{sym_eig, EigDecomposition, Matrix};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeSet;
use std::fmt;
use std::path::Path;

/// Simple undirected graph: node count, deduplicated edge set, degrees.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    n: usize,
    edges: Vec<(usize, usize)>,
    degrees: Vec<usize>,
}

impl Graph {
    /// Builds a graph from `n` nodes and an edge list. Self-loops are
    /// rejected, duplicates (in either orientation) collapse to one edge.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Validation("graph must have at least one node".into()));
        }
        let mut set = BTreeSet::new();
        for &(i, j) in edges {
            if i == j {
                return Err(Error::Validation(format!("self-loop at node {i}")));
            }
            if i >= n || j >= n {
                return Err(Error::Validation(format!(
                    "edge ({i},{j}) references a node id >= n = {n}"
                )));
            }
            set.insert((i.min(j), i.max(j)));
        }
        let edges: Vec<(usize, usize)> = set.into_iter().collect();
        let mut degrees = vec![0usize; n];
        for &(i, j) in &edges {
            degrees[i] += 1;
            degrees[j] += 1;
        }
        Ok(Self { n, edges, degrees })
    }

    pub fn node_count(&self) -> usize {
        self.n
    }

    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn max_degree(&self) -> usize {
        self.degrees.iter().copied().max().unwrap_or(0)
    }

    pub fn min_degree(&self) -> usize {
        self.degrees.iter().copied().min().unwrap_or(0)
    }

    /// Dense 0/1 adjacency matrix.
    pub fn adjacency(&self) -> Result<Matrix> {
        let mut a = Matrix::zeros(self.n, self.n)?;
        for &(i, j) in &self.edges {
            a.set(i, j, 1.0);
            a.set(j, i, 1.0);
        }
        Ok(a)
    }

    /// Serializes to the edge-list text format with an `n=` header.
    pub fn to_edge_list_string(&self) -> String {
        let mut out = format!("n={}\n", self.n);
        for &(i, j) in &self.edges {
            out.push_str(&format!("{i} {j}\n"));
        }
        out
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list_string())?;
        Ok(())
    }
}

/// Parses the edge-list text format: `#` comments, an optional first
/// non-comment line `n=<count>`, then `i j` pairs. Without the header,
/// `n` is one plus the largest node id.
pub fn parse_edge_list(text: &str) -> Result<Graph> {
    let mut declared_n: Option<usize> = None;
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut saw_edge = false;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(rest) = line.strip_prefix("n=") {
            if saw_edge || declared_n.is_some() {
                return Err(Error::Parse {
                    line: line_no,
                    message: "n= header must appear once, before any edge".into(),
                });
            }
            declared_n = Some(rest.trim().parse().map_err(|_| Error::Parse {
                line: line_no,
                message: format!("invalid node count {rest:?}"),
            })?);
            continue;
        }
        let mut parts = line.split_whitespace();
        let parse_id = |tok: Option<&str>| -> Result<usize> {
            tok.ok_or(Error::Parse { line: line_no, message: "expected two node ids".into() })?
                .parse()
                .map_err(|_| Error::Parse {
                    line: line_no,
                    message: format!("invalid node id in {line:?}"),
                })
        };
        let i = parse_id(parts.next())?;
        let j = parse_id(parts.next())?;
        if parts.next().is_some() {
            return Err(Error::Parse {
                line: line_no,
                message: format!("trailing tokens in {line:?}"),
            });
        }
        if i == j {
            return Err(Error::Parse { line: line_no, message: format!("self-loop at node {i}") });
        }
        if let Some(n) = declared_n {
            if i >= n || j >= n {
                return Err(Error::Parse {
                    line: line_no,
                    message: format!("node id {} >= declared n = {n}", i.max(j)),
                });
            }
        }
        saw_edge = true;
        edges.push((i, j));
    }
    let n = match declared_n {
        Some(n) => n,
        None => {
            let max_id = edges.iter().map(|&(i, j)| i.max(j)).max().ok_or_else(|| {
                Error::Validation("edge list is empty and has no n= header".into())
            })?;
            max_id + 1
        }
    };
    Graph::new(n, &edges)
}

/// Loads a graph from an edge-list file.
pub fn load_edge_list(path: &Path) -> Result<Graph> {
    let text = std::fs::read_to_string(path)?;
    parse_edge_list(&text)
}

/// Generator specifications for the built-in graph families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum GraphSpec {
    Complete { n: usize },
    Path { n: usize },
    Cycle { n: usize },
    Star { n: usize },
    Regular { n: usize, k: usize },
    ErdosRenyi { n: usize, p: f64 },
    Sbm { sizes: Vec<usize>, p_in: f64, p_out: f64 },
}

impl GraphSpec {
    pub fn node_count(&self) -> usize {
        match self {
            GraphSpec::Complete { n }
            | GraphSpec::Path { n }
            | GraphSpec::Cycle { n }
            | GraphSpec::Star { n }
            | GraphSpec::Regular { n, .. }
            | GraphSpec::ErdosRenyi { n, .. } => *n,
            GraphSpec::Sbm { sizes, .. } => sizes.iter().sum(),
        }
    }
}

fn check_probability(p: f64, what: &str) -> Result<()> {
    if !(0.0..=1.0).contains(&p) || !p.is_finite() {
        return Err(Error::Validation(format!("{what} = {p} outside [0,1]")));
    }
    Ok(())
}

/// Generates a graph deterministically from a spec and a seed.
pub fn generate(spec: &GraphSpec, seed: u64) -> Result<Graph> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    match spec {
        GraphSpec::Complete { n } => {
            let mut edges = Vec::new();
            for i in 0..*n {
                for j in (i + 1)..*n {
                    edges.push((i, j));
                }
            }
            Graph::new(*n, &edges)
        }
        GraphSpec::Path { n } => {
            let edges: Vec<_> = (0..n.saturating_sub(1)).map(|i| (i, i + 1)).collect();
            Graph::new(*n, &edges)
        }
        GraphSpec::Cycle { n } => {
            if *n < 3 {
                return Err(Error::Validation(format!("cycle needs n >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..*n).map(|i| (i, (i + 1) % n)).collect();
            Graph::new(*n, &edges)
        }
        GraphSpec::Star { n } => {
            if *n < 2 {
                return Err(Error::Validation(format!("star needs n >= 2, got {n}")));
            }
            let edges: Vec<_> = (1..*n).map(|i| (0, i)).collect();
            Graph::new(*n, &edges)
        }
        GraphSpec::Regular { n, k } => {
            // Circulant construction: neighbors at offsets 1..k/2 on the
            // ring, plus the antipode when k is odd (then n is even).
            if *k >= *n {
                return Err(Error::Validation(format!("regular degree k = {k} must be < n = {n}")));
            }
            if (*k * *n) % 2 != 0 {
                return Err(Error::Validation(format!(
                    "no {k}-regular graph on {n} nodes: k*n is odd"
                )));
            }
            let mut edges = Vec::new();
            for offset in 1..=(*k / 2) {
                for i in 0..*n {
                    edges.push((i, (i + offset) % n));
                }
            }
            if *k % 2 == 1 {
                for i in 0..(*n / 2) {
                    edges.push((i, i + n / 2));
                }
            }
            Graph::new(*n, &edges)
        }
        GraphSpec::ErdosRenyi { n, p } => {
            check_probability(*p, "edge probability p")?;
            let mut edges = Vec::new();
            for i in 0..*n {
                for j in (i + 1)..*n {
                    if rng.gen::<f64>() < *p {
                        edges.push((i, j));
                    }
                }
            }
            Graph::new(*n, &edges)
        }
        GraphSpec::Sbm { sizes, p_in, p_out } => {
            check_probability(*p_in, "p_in")?;
            check_probability(*p_out, "p_out")?;
            if sizes.is_empty() || sizes.iter().any(|&s| s == 0) {
                return Err(Error::Validation("sbm block sizes must be positive".into()));
            }
            let n: usize = sizes.iter().sum();
            let mut block = Vec::with_capacity(n);
            for (b, &s) in sizes.iter().enumerate() {
                block.extend(std::iter::repeat(b).take(s));
            }
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    let p = if block[i] == block[j] { *p_in } else { *p_out };
                    if rng.gen::<f64>() < p {
                        edges.push((i, j));
                    }
                }
            }
            Graph::new(n, &edges)
        }
    }
}

/// The three diffusion operators used before each layer's linear map.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PropagationKind {
    /// `D̃^{-1/2} (I + A) D̃^{-1/2}` with `D̃ = I + D`; symmetric,
    /// spectral radius and spectral norm exactly 1.
    NormalizedAdjacency,
    /// `D̃^{-1} (I + A)`; row-stochastic, shares the normalized
    /// adjacency's eigenvalues by diagonal similarity.
    LazyRandomWalk,
    /// `D^{-1} A` without self-loops; row-stochastic, eigenvalues in
    /// [-1, 1], requires every degree >= 1.
    RandomWalk,
}

impl fmt::Display for PropagationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            PropagationKind::NormalizedAdjacency => "normalized-adjacency",
            PropagationKind::LazyRandomWalk => "lazy-random-walk",
            PropagationKind::RandomWalk => "random-walk",
        };
        write!(f, "{s}")
    }
}

/// A diffusion matrix with its cached spectral decomposition. For the
/// row-stochastic kinds the decomposition is of the diagonally similar
/// symmetric matrix, which shares the eigenvalues of `L`.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub kind: PropagationKind,
    pub matrix: Matrix,
    pub eig: EigDecomposition,
    pub spectral_radius: f64,
    degrees: Vec<usize>,
}

impl Propagation {
    pub fn node_count(&self) -> usize {
        self.matrix.rows()
    }

    /// True when `L` itself is symmetric (so `L = V Λ Vᵀ` holds with the
    /// cached decomposition).
    pub fn is_symmetric(&self) -> bool {
        matches!(self.kind, PropagationKind::NormalizedAdjacency)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eig.eigenvalues
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    /// `L^power · 1` by repeated matrix-vector products.
    pub fn propagate_ones(&self, power: usize) -> Vec<f64> {
        let n = self.node_count();
        let mut v = vec![1.0; n];
        for _ in 0..power {
            v = self.matrix.matvec(&v).expect("square matvec");
        }
        v
    }

    /// `‖1ᵀ L^power‖₂`, by repeated left multiplications.
    pub fn left_ones_norm(&self, power: usize) -> f64 {
        let n = self.node_count();
        let mut v = vec![1.0; n];
        for _ in 0..power {
            v = self.matrix.tr_matvec(&v).expect("square tr_matvec");
        }
        v.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Spectral norm of `L` (exact for the symmetric kind, computed for
    /// the row-stochastic ones).
    pub fn operator_norm(&self) -> Result<f64> {
        if self.is_symmetric() {
            Ok(self.eig.spectral_radius())
        } else {
            self.matrix.spectral_norm()
        }
    }
}

/// Builds the propagation operator of the requested kind, with spectra
/// obtained from the symmetric similarity form.
pub fn build_propagation(graph: &Graph, kind: PropagationKind) -> Result<Propagation> {
    let n = graph.node_count();
    let a = graph.adjacency()?;
    let degrees: Vec<f64> = graph.degrees().iter().map(|&d| d as f64).collect();

    let (matrix, sym_form) = match kind {
        PropagationKind::NormalizedAdjacency | PropagationKind::LazyRandomWalk => {
            // Normalized adjacency D̃^{-1/2}(I+A)D̃^{-1/2}; the lazy walk is
            // D̃^{-1/2} · (that matrix) · D̃^{1/2}, so both use its spectrum.
            let sym = Matrix::from_fn(n, n, |i, j| {
                let self_loop = if i == j { 1.0 } else { 0.0 };
                (self_loop + a.get(i, j)) / ((1.0 + degrees[i]) * (1.0 + degrees[j])).sqrt()
            })?;
            match kind {
                PropagationKind::NormalizedAdjacency => (sym.clone(), sym),
                _ => {
                    let lazy = Matrix::from_fn(n, n, |i, j| {
                        let self_loop = if i == j { 1.0 } else { 0.0 };
                        (self_loop + a.get(i, j)) / (1.0 + degrees[i])
                    })?;
                    (lazy, sym)
                }
            }
        }
        PropagationKind::RandomWalk => {
            if graph.min_degree() == 0 {
                return Err(Error::Validation(
                    "random-walk propagation requires every node to have degree >= 1".into(),
                ));
            }
            let rw = Matrix::from_fn(n, n, |i, j| a.get(i, j) / degrees[i])?;
            let sym = Matrix::from_fn(n, n, |i, j| a.get(i, j) / (degrees[i] * degrees[j]).sqrt())?;
            (rw, sym)
        }
    };

    let eig = sym_eig(&sym_form)?;
    let spectral_radius = eig.spectral_radius();
    Ok(Propagation { kind, matrix, eig, spectral_radius, degrees: graph.degrees().to_vec() })
}

/// `(‖L^{d-1}·1‖₂², lower bound)` for depth `d >= 1`. The lower bound is
/// `α₁² = (Σᵢ √(1+Dᵢ))² / Σᵢ(1+Dᵢ)` for the normalized adjacency and `n`
/// for the row-stochastic kinds (where `L^{d-1}1 = 1` exactly).
pub fn propagated_ones(prop: &Propagation, depth: usize) -> Result<(f64, f64)> {
    if depth < 1 {
        return Err(Error::Validation("propagated_ones requires depth >= 1".into()));
    }
    let v = prop.propagate_ones(depth - 1);
    let norm_sq = v.iter().map(|x| x * x).sum::<f64>();
    let lower_bound = match prop.kind {
        PropagationKind::NormalizedAdjacency => {
            let sum_sqrt: f64 = prop.degrees.iter().map(|&d| (1.0 + d as f64).sqrt()).sum();
            let sum: f64 = prop.degrees.iter().map(|&d| 1.0 + d as f64).sum();
            sum_sqrt * sum_sqrt / sum
        }
        PropagationKind::LazyRandomWalk | PropagationKind::RandomWalk => prop.node_count() as f64,
    };
    Ok((norm_sq, lower_bound))
}
