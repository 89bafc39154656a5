//! Weighted undirected graphs, named generators, permutations, and text I/O.
//!
//! Graphs are stored as dense symmetric adjacency matrices with zero diagonal.
//! Vertices are 0-based in the API; all file formats and display output use
//! 1-based labels. The generator collection covers the reference graphs used
//! by the solver test suite (Petersen, Frucht, Paley, Biggs-Smith, weighted
//! squares) plus a few standard families.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use rand::Rng;
use thiserror::Error;

/// Absolute entrywise tolerance when verifying certificates on graphs with
/// non-integer weights. Integer-weighted graphs are compared exactly.
pub const TOL_VERIFY: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("graph must have at least one vertex")]
    Empty,
    #[error("adjacency matrix is not square")]
    NotSquare,
    #[error("adjacency matrix is not symmetric at ({i}, {j})")]
    NotSymmetric { i: usize, j: usize },
    #[error("self-loop at vertex {0}")]
    SelfLoop(usize),
    #[error("vertex {index} out of range 1..={n}")]
    VertexOutOfRange { index: usize, n: usize },
    #[error("edge ({i}, {j}) listed twice with conflicting weights")]
    ConflictingEdge { i: usize, j: usize },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("unknown graph name {0:?}")]
    UnknownName(String),
    #[error("paley modulus {0} must be a prime congruent to 1 mod 4")]
    BadPaleyModulus(u64),
    #[error("invalid generator parameter: {0}")]
    BadParam(String),
    #[error("size mismatch: {0} vs {1}")]
    SizeMismatch(usize, usize),
    #[error("permutation of length {0} is not a bijection")]
    NotBijection(usize),
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

/// A weighted undirected graph without self-loops.
///
/// Invariants enforced at construction: `adj` is exactly symmetric, has zero
/// diagonal, and `n >= 1`. `is_integer` records whether every weight is an
/// integer, which decides whether certificates are checked exactly or within
/// [`TOL_VERIFY`].
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    n: usize,
    adj: DMatrix<f64>,
    is_integer: bool,
}

impl WeightedGraph {
    /// Builds a graph from a full adjacency matrix, validating all invariants.
    pub fn from_adjacency(adj: DMatrix<f64>) -> Result<Self, GraphError> {
        if adj.nrows() != adj.ncols() {
            return Err(GraphError::NotSquare);
        }
        let n = adj.nrows();
        if n == 0 {
            return Err(GraphError::Empty);
        }
        for i in 0..n {
            if adj[(i, i)] != 0.0 {
                return Err(GraphError::SelfLoop(i + 1));
            }
            for j in (i + 1)..n {
                if adj[(i, j)] != adj[(j, i)] {
                    return Err(GraphError::NotSymmetric { i: i + 1, j: j + 1 });
                }
            }
        }
        let is_integer = adj.iter().all(|w| w.fract() == 0.0);
        Ok(Self { n, adj, is_integer })
    }

    /// Builds a graph on `n` vertices from 0-based weighted edges.
    pub fn from_weighted_edges(
        n: usize,
        edges: &[(usize, usize, f64)],
    ) -> Result<Self, GraphError> {
        if n == 0 {
            return Err(GraphError::Empty);
        }
        let mut adj = DMatrix::zeros(n, n);
        for &(i, j, w) in edges {
            if i >= n || j >= n {
                return Err(GraphError::VertexOutOfRange {
                    index: i.max(j) + 1,
                    n,
                });
            }
            if i == j {
                return Err(GraphError::SelfLoop(i + 1));
            }
            if adj[(i, j)] != 0.0 && adj[(i, j)] != w {
                return Err(GraphError::ConflictingEdge { i: i + 1, j: j + 1 });
            }
            adj[(i, j)] = w;
            adj[(j, i)] = w;
        }
        Self::from_adjacency(adj)
    }

    /// Builds an unweighted graph (all edge weights 1) from 0-based edges.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        let weighted: Vec<_> = edges.iter().map(|&(i, j)| (i, j, 1.0)).collect();
        Self::from_weighted_edges(n, &weighted)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adj
    }

    pub fn is_integer(&self) -> bool {
        self.is_integer
    }

    pub fn weight(&self, i: usize, j: usize) -> f64 {
        self.adj[(i, j)]
    }

    pub fn edge_count(&self) -> usize {
        let mut m = 0;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                if self.adj[(i, j)] != 0.0 {
                    m += 1;
                }
            }
        }
        m
    }

    pub fn degree(&self, i: usize) -> f64 {
        self.adj.row(i).sum()
    }

    /// True when every vertex has the same weighted degree.
    pub fn is_regular(&self) -> bool {
        let d0 = self.degree(0);
        (1..self.n).all(|i| (self.degree(i) - d0).abs() <= 1e-12 * d0.abs().max(1.0))
    }

    /// Returns the graph with adjacency `P A P^T`, i.e. the image of this
    /// graph under `p`: vertex `i` of the input becomes vertex `p(i)`.
    pub fn apply_permutation(&self, p: &Permutation) -> Result<Self, GraphError> {
        if p.len() != self.n {
            return Err(GraphError::SizeMismatch(self.n, p.len()));
        }
        let mut adj = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for j in 0..self.n {
                adj[(p.image(i), p.image(j))] = self.adj[(i, j)];
            }
        }
        Ok(Self {
            n: self.n,
            adj,
            is_integer: self.is_integer,
        })
    }
}

/// A permutation of `{0, .., n-1}`, stored as the image map `i -> map[i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Permutation {
    map: Vec<usize>,
}

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self {
            map: (0..n).collect(),
        }
    }

    /// Builds a permutation from 0-based images, rejecting non-bijections.
    pub fn from_images(map: Vec<usize>) -> Result<Self, GraphError> {
        let n = map.len();
        let mut seen = vec![false; n];
        for &v in &map {
            if v >= n || seen[v] {
                return Err(GraphError::NotBijection(n));
            }
            seen[v] = true;
        }
        Ok(Self { map })
    }

    /// Builds a permutation from 1-based images as used in files and output.
    pub fn from_one_based(images: &[usize]) -> Result<Self, GraphError> {
        let map: Vec<usize> = images
            .iter()
            .map(|&v| v.checked_sub(1).ok_or(GraphError::NotBijection(images.len())))
            .collect::<Result<_, _>>()?;
        Self::from_images(map)
    }

    /// Uniform random permutation by Fisher-Yates.
    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let mut map: Vec<usize> = (0..n).collect();
        for i in (1..n).rev() {
            let j = rng.random_range(0..=i);
            map.swap(i, j);
        }
        Self { map }
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Image of vertex `i`.
    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn images(&self) -> &[usize] {
        &self.map
    }

    pub fn inverse(&self) -> Self {
        let mut inv = vec![0; self.map.len()];
        for (i, &v) in self.map.iter().enumerate() {
            inv[v] = i;
        }
        Self { map: inv }
    }

    /// The matrix `P` with `P[p(j), j] = 1`, so `P A P^T` permutes vertices.
    pub fn matrix(&self) -> DMatrix<f64> {
        let n = self.map.len();
        let mut p = DMatrix::zeros(n, n);
        for (j, &i) in self.map.iter().enumerate() {
            p[(i, j)] = 1.0;
        }
        p
    }

    /// 1-based images for display, e.g. `[ 5 10 8 3 7 9 4 6 2 1 ]`.
    pub fn one_based(&self) -> Vec<usize> {
        self.map.iter().map(|&v| v + 1).collect()
    }
}

impl std::fmt::Display for Permutation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[")?;
        for v in &self.map {
            write!(f, " {}", v + 1)?;
        }
        write!(f, " ]")
    }
}

/// Checks `P A = B P` for the permutation matrix induced by `p`.
///
/// Exact comparison when both graphs have integer weights (the products only
/// rearrange entries, so equality is exact in floating point), otherwise
/// entrywise within [`TOL_VERIFY`]. A size mismatch simply returns false.
pub fn verify_isomorphism(a: &WeightedGraph, b: &WeightedGraph, p: &Permutation) -> bool {
    if a.n() != b.n() || p.len() != a.n() {
        return false;
    }
    let n = a.n();
    // P A = B P elementwise: A[p^-1(i), j] = B[i, p(j)], i.e. for all i, j:
    // B[p(i), p(j)] = A[i, j].
    let exact = a.is_integer() && b.is_integer();
    for i in 0..n {
        for j in 0..n {
            let lhs = b.weight(p.image(i), p.image(j));
            let rhs = a.weight(i, j);
            let ok = if exact {
                lhs == rhs
            } else {
                (lhs - rhs).abs() <= TOL_VERIFY
            };
            if !ok {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Named generators
// ---------------------------------------------------------------------------

/// Weighted-square variants: a 4-cycle on vertices 1..4 with weights assigned
/// to edges (1,2), (2,3), (3,4), (4,1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SquareVariant {
    /// Weights (1,2,3,4): no symmetries, all eigenvectors friendly.
    A,
    /// Weights (1,2,2,2): one reflection symmetry, two friendly eigenvectors.
    B,
    /// Weights (1,2,1,2): two reflections, one friendly eigenvector.
    C,
    /// Weights (1,1,1,1): full dihedral symmetry, repeated eigenvalue 0.
    D,
}

/// Names of the generated graphs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GraphName {
    /// The 3-regular Petersen graph on 10 vertices.
    Petersen,
    /// A strongly regular graph on 10 vertices, isomorphic to Petersen.
    Fig1b,
    /// The Frucht graph: 3-regular, 12 vertices, trivial automorphism group.
    Frucht,
    /// Paley graph on a prime `q = 1 (mod 4)`: quadratic-residue adjacency.
    Paley(u64),
    /// The Biggs-Smith graph: cubic distance-regular graph on 102 vertices.
    BiggsSmith,
    Square(SquareVariant),
    Cycle(usize),
    Complete(usize),
    Star(usize),
}

const PETERSEN_EDGES: [(usize, usize); 15] = [
    (1, 2), (2, 3), (3, 4), (4, 5), (5, 1),
    (1, 6), (2, 7), (3, 8), (4, 9), (5, 10),
    (6, 8), (6, 9), (7, 9), (7, 10), (8, 10),
];

// The strongly regular comparison graph on 10 vertices, transcribed from its
// drawn edge list (vertex labels as displayed).
const FIG1B_EDGES: [(usize, usize); 15] = [
    (3, 7), (7, 1), (1, 4), (4, 2), (2, 3),
    (3, 8), (7, 5), (1, 6), (4, 10), (2, 9),
    (8, 6), (8, 10), (5, 10), (5, 9), (6, 9),
];

const FRUCHT_EDGES: [(usize, usize); 18] = [
    (1, 2), (2, 3), (3, 1), (4, 5), (5, 6), (6, 4),
    (8, 9), (9, 7), (7, 8), (9, 11), (6, 10), (3, 10),
    (12, 11), (10, 11), (4, 8), (7, 12), (12, 2), (1, 5),
];

// Biggs-Smith graph: 17 H-shaped 6-vertex fragments a-b-c / d-e-f with
// crossbar b-e, closed by 17-cycles of steps 1, 4, 2, 8 on the a, c, d, f
// families. Checked against the known spectrum (multiplicities
// [1, 9, 18, 16, 17, 16, 9, 16]), girth 9, and diameter 7.
const BIGGS_SMITH_EDGES: [(usize, usize); 153] = [
    (1, 2), (1, 17), (1, 18), (2, 3), (2, 19), (3, 4), (3, 20), (4, 5), (4, 21),
    (5, 6), (5, 22), (6, 7), (6, 23), (7, 8), (7, 24), (8, 9), (8, 25), (9, 10),
    (9, 26), (10, 11), (10, 27), (11, 12), (11, 28), (12, 13), (12, 29), (13, 14), (13, 30),
    (14, 15), (14, 31), (15, 16), (15, 32), (16, 17), (16, 33), (17, 34), (18, 35), (18, 69),
    (19, 36), (19, 70), (20, 37), (20, 71), (21, 38), (21, 72), (22, 39), (22, 73), (23, 40),
    (23, 74), (24, 41), (24, 75), (25, 42), (25, 76), (26, 43), (26, 77), (27, 44), (27, 78),
    (28, 45), (28, 79), (29, 46), (29, 80), (30, 47), (30, 81), (31, 48), (31, 82), (32, 49),
    (32, 83), (33, 50), (33, 84), (34, 51), (34, 85), (35, 39), (35, 48), (36, 40), (36, 49),
    (37, 41), (37, 50), (38, 42), (38, 51), (39, 43), (40, 44), (41, 45), (42, 46), (43, 47),
    (44, 48), (45, 49), (46, 50), (47, 51), (52, 54), (52, 67), (52, 69), (53, 55), (53, 68),
    (53, 70), (54, 56), (54, 71), (55, 57), (55, 72), (56, 58), (56, 73), (57, 59), (57, 74),
    (58, 60), (58, 75), (59, 61), (59, 76), (60, 62), (60, 77), (61, 63), (61, 78), (62, 64),
    (62, 79), (63, 65), (63, 80), (64, 66), (64, 81), (65, 67), (65, 82), (66, 68), (66, 83),
    (67, 84), (68, 85), (69, 86), (70, 87), (71, 88), (72, 89), (73, 90), (74, 91), (75, 92),
    (76, 93), (77, 94), (78, 95), (79, 96), (80, 97), (81, 98), (82, 99), (83, 100), (84, 101),
    (85, 102), (86, 94), (86, 95), (87, 95), (87, 96), (88, 96), (88, 97), (89, 97), (89, 98),
    (90, 98), (90, 99), (91, 99), (91, 100), (92, 100), (92, 101), (93, 101), (93, 102), (94, 102),
];

fn from_one_based_edges(n: usize, edges: &[(usize, usize)]) -> WeightedGraph {
    let shifted: Vec<_> = edges.iter().map(|&(i, j)| (i - 1, j - 1)).collect();
    WeightedGraph::from_edges(n, &shifted).expect("embedded edge list is valid")
}

fn is_prime(q: u64) -> bool {
    if q < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= q {
        if q % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Generates a named graph.
pub fn generate(name: &GraphName) -> Result<WeightedGraph, GraphError> {
    match name {
        GraphName::Petersen => Ok(from_one_based_edges(10, &PETERSEN_EDGES)),
        GraphName::Fig1b => Ok(from_one_based_edges(10, &FIG1B_EDGES)),
        GraphName::Frucht => Ok(from_one_based_edges(12, &FRUCHT_EDGES)),
        GraphName::BiggsSmith => Ok(from_one_based_edges(102, &BIGGS_SMITH_EDGES)),
        GraphName::Paley(q) => {
            let q = *q;
            if !is_prime(q) || q % 4 != 1 {
                return Err(GraphError::BadPaleyModulus(q));
            }
            let n = q as usize;
            let mut residue = vec![false; n];
            for i in 1..q {
                residue[((i * i) % q) as usize] = true;
            }
            let mut edges = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    if residue[(j - i) % n] {
                        edges.push((i, j));
                    }
                }
            }
            WeightedGraph::from_edges(n, &edges)
        }
        GraphName::Square(variant) => {
            let w = match variant {
                SquareVariant::A => [1.0, 2.0, 3.0, 4.0],
                SquareVariant::B => [1.0, 2.0, 2.0, 2.0],
                SquareVariant::C => [1.0, 2.0, 1.0, 2.0],
                SquareVariant::D => [1.0, 1.0, 1.0, 1.0],
            };
            WeightedGraph::from_weighted_edges(
                4,
                &[(0, 1, w[0]), (1, 2, w[1]), (2, 3, w[2]), (3, 0, w[3])],
            )
        }
        GraphName::Cycle(n) => {
            if *n < 3 {
                return Err(GraphError::BadParam(format!("cycle needs n >= 3, got {n}")));
            }
            let edges: Vec<_> = (0..*n).map(|i| (i, (i + 1) % n)).collect();
            WeightedGraph::from_edges(*n, &edges)
        }
        GraphName::Complete(n) => {
            if *n < 1 {
                return Err(GraphError::BadParam("complete needs n >= 1".into()));
            }
            let mut edges = Vec::new();
            for i in 0..*n {
                for j in (i + 1)..*n {
                    edges.push((i, j));
                }
            }
            WeightedGraph::from_edges(*n, &edges)
        }
        GraphName::Star(n) => {
            if *n < 2 {
                return Err(GraphError::BadParam(format!("star needs n >= 2, got {n}")));
            }
            let edges: Vec<_> = (1..*n).map(|i| (0, i)).collect();
            WeightedGraph::from_edges(*n, &edges)
        }
    }
}

// ---------------------------------------------------------------------------
// Text format
// ---------------------------------------------------------------------------

/// Parses the text graph format.
///
/// First non-comment line is `n m`; each of the following `m` lines is
/// `i j w` with 1-based vertex labels, or `i j` for weight 1. Blank lines and
/// lines starting with `#` are ignored.
pub fn parse_graph(source: &str) -> Result<WeightedGraph, GraphError> {
    let mut lines = source
        .lines()
        .enumerate()
        .map(|(k, l)| (k + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let (line_no, header) = lines.next().ok_or(GraphError::Parse {
        line: 0,
        msg: "empty file".into(),
    })?;
    let mut it = header.split_whitespace();
    let n: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| GraphError::Parse {
            line: line_no,
            msg: "expected header \"n m\"".into(),
        })?;
    let m: usize = it
        .next()
        .and_then(|t| t.parse().ok())
        .ok_or_else(|| GraphError::Parse {
            line: line_no,
            msg: "expected header \"n m\"".into(),
        })?;
    if it.next().is_some() {
        return Err(GraphError::Parse {
            line: line_no,
            msg: "trailing tokens after header".into(),
        });
    }
    if n == 0 {
        return Err(GraphError::Parse {
            line: line_no,
            msg: "graph must have at least one vertex".into(),
        });
    }

    let mut edges = Vec::with_capacity(m);
    for _ in 0..m {
        let (line_no, line) = lines.next().ok_or_else(|| GraphError::Parse {
            line: 0,
            msg: format!("expected {m} edge lines, file ended early"),
        })?;
        let toks: Vec<&str> = line.split_whitespace().collect();
        if toks.len() != 2 && toks.len() != 3 {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("expected \"i j [w]\", got {line:?}"),
            });
        }
        let parse_idx = |t: &str| -> Result<usize, GraphError> {
            let v: usize = t.parse().map_err(|_| GraphError::Parse {
                line: line_no,
                msg: format!("bad vertex label {t:?}"),
            })?;
            if v < 1 || v > n {
                return Err(GraphError::Parse {
                    line: line_no,
                    msg: format!("vertex {v} out of range 1..={n}"),
                });
            }
            Ok(v)
        };
        let i = parse_idx(toks[0])?;
        let j = parse_idx(toks[1])?;
        if i == j {
            return Err(GraphError::Parse {
                line: line_no,
                msg: format!("self-loop at vertex {i}"),
            });
        }
        let w: f64 = if toks.len() == 3 {
            toks[2].parse().map_err(|_| GraphError::Parse {
                line: line_no,
                msg: format!("bad weight {:?}", toks[2]),
            })?
        } else {
            1.0
        };
        if !w.is_finite() {
            return Err(GraphError::Parse {
                line: line_no,
                msg: "weight must be finite".into(),
            });
        }
        edges.push((i - 1, j - 1, w));
    }
    if let Some((line_no, _)) = lines.next() {
        return Err(GraphError::Parse {
            line: line_no,
            msg: "unexpected content after edge list".into(),
        });
    }
    WeightedGraph::from_weighted_edges(n, &edges)
}

/// Formats a graph in the text format with edges sorted by (i, j).
pub fn format_graph(g: &WeightedGraph) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", g.n(), g.edge_count());
    for i in 0..g.n() {
        for j in (i + 1)..g.n() {
            let w = g.weight(i, j);
            if w != 0.0 {
                if w.fract() == 0.0 && w.abs() < 1e15 {
                    let _ = writeln!(out, "{} {} {}", i + 1, j + 1, w as i64);
                } else {
                    let _ = writeln!(out, "{} {} {}", i + 1, j + 1, w);
                }
            }
        }
    }
    out
}

pub fn read_graph<P: AsRef<Path>>(path: P) -> Result<WeightedGraph, GraphError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_graph(&text)
}

pub fn write_graph<P: AsRef<Path>>(g: &WeightedGraph, path: P) -> Result<(), GraphError> {
    let path = path.as_ref();
    fs::write(path, format_graph(g)).map_err(|source| GraphError::Io {
        path: path.display().to_string(),
        source,
    })
}
