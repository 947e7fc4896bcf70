//! Beam conflict graph and greedy training-resource coloring.
//!
//! Two beams conflict when some user has both in its dominant set; they must
//! then be trained on different resources. Vertices are beams, colors are
//! orthogonal training slots. Beams that no user detects are not vertices and
//! consume no slot.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::spectrum::DominantSupport;

/// Symmetric 0/1 beam-beam matrix with zero diagonal.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssociationMatrix {
    m: usize,
    a: Vec<bool>,
}

impl AssociationMatrix {
    pub fn zeros(m: usize) -> Self {
        Self {
            m,
            a: vec![false; m * m],
        }
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.a[i * self.m + j]
    }

    fn connect(&mut self, i: usize, j: usize) {
        if i != j {
            self.a[i * self.m + j] = true;
            self.a[j * self.m + i] = true;
        }
    }

    /// Undirected edges `(i, j)` with `i < j`, lexicographic.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.m {
            for j in i + 1..self.m {
                if self.get(i, j) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// Rows of space-separated 0/1 entries.
    pub fn to_grid_text(&self) -> String {
        let mut s = String::with_capacity(self.m * self.m * 2);
        for i in 0..self.m {
            for j in 0..self.m {
                if j > 0 {
                    s.push(' ');
                }
                s.push(if self.get(i, j) { '1' } else { '0' });
            }
            s.push('\n');
        }
        s
    }
}

pub fn association_matrix(supports: &[DominantSupport], m: usize) -> Result<AssociationMatrix> {
    let mut a = AssociationMatrix::zeros(m);
    for s in supports {
        if s.m() != m {
            return Err(Error::Dimension {
                expected: m,
                actual: s.m(),
            });
        }
        for (x, &i) in s.beams.iter().enumerate() {
            for &j in &s.beams[x + 1..] {
                a.connect(i, j);
            }
        }
    }
    Ok(a)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConflictGraph {
    m: usize,
    is_vertex: Vec<bool>,
    vertices: Vec<usize>,
    neighbors: Vec<Vec<usize>>,
}

impl ConflictGraph {
    /// Graph over `vertices` with edges taken from `a`.
    pub fn new(a: &AssociationMatrix, vertices: &[usize]) -> Result<Self> {
        let m = a.m();
        let mut is_vertex = vec![false; m];
        for &v in vertices {
            if v >= m {
                return Err(Error::arg(format!("vertex {v} out of range for M = {m}")));
            }
            is_vertex[v] = true;
        }
        let neighbors: Vec<Vec<usize>> = (0..m)
            .map(|i| {
                if is_vertex[i] {
                    (0..m).filter(|&j| a.get(i, j)).collect()
                } else {
                    Vec::new()
                }
            })
            .collect();
        for (i, nb) in neighbors.iter().enumerate() {
            if let Some(&j) = nb.iter().find(|&&j| !is_vertex[j]) {
                return Err(Error::arg(format!("edge ({i}, {j}) leaves the vertex set")));
            }
        }
        let vertices = (0..m).filter(|&i| is_vertex[i]).collect();
        Ok(Self {
            m,
            is_vertex,
            vertices,
            neighbors,
        })
    }

    /// Vertices are the beams detected by at least one user.
    pub fn from_supports(supports: &[DominantSupport], m: usize) -> Result<Self> {
        let a = association_matrix(supports, m)?;
        let mut used = vec![false; m];
        for s in supports {
            for &b in &s.beams {
                used[b] = true;
            }
        }
        let vertices: Vec<usize> = (0..m).filter(|&i| used[i]).collect();
        Self::new(&a, &vertices)
    }

    /// Plain graph on vertices `0..n`.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut a = AssociationMatrix::zeros(n);
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::arg(format!("edge ({i}, {j}) out of range")));
            }
            a.connect(i, j);
        }
        Self::new(&a, &(0..n).collect::<Vec<_>>())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn is_vertex(&self, i: usize) -> bool {
        self.is_vertex.get(i).copied().unwrap_or(false)
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// `s_i`, the number of beams in conflict with `i`.
    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len()
    }

    pub fn max_degree(&self) -> usize {
        self.vertices.iter().map(|&v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for &i in &self.vertices {
            out.extend(self.neighbors[i].iter().filter(|&&j| j > i).map(|&j| (i, j)));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    /// Color id (1-based) per beam; `None` for beams that are not vertices.
    colors: Vec<Option<usize>>,
    /// `usage[c - 1]` = number of vertices holding color `c`.
    usage: Vec<usize>,
}

impl Coloring {
    /// Builds a coloring from explicit per-beam colors (1-based ids).
    pub fn from_colors(colors: Vec<Option<usize>>) -> Result<Self> {
        let m_tr = colors.iter().flatten().copied().max().unwrap_or(0);
        let mut usage = vec![0; m_tr];
        for &c in colors.iter().flatten() {
            if c == 0 {
                return Err(Error::arg("color ids start at 1"));
            }
            usage[c - 1] += 1;
        }
        Ok(Self { colors, usage })
    }

    pub fn color(&self, beam: usize) -> Option<usize> {
        self.colors.get(beam).copied().flatten()
    }

    pub fn colors(&self) -> &[Option<usize>] {
        &self.colors
    }

    /// `M_tr`, the number of distinct training resources.
    pub fn m_tr(&self) -> usize {
        self.usage.iter().filter(|&&u| u > 0).count()
    }

    pub fn usage(&self) -> &[usize] {
        &self.usage
    }

    /// Beams that share `beam`'s color, excluding `beam` itself.
    pub fn same_color(&self, beam: usize) -> Vec<usize> {
        match self.color(beam) {
            None => Vec::new(),
            Some(c) => self
                .colors
                .iter()
                .enumerate()
                .filter(|&(b, &cb)| b != beam && cb == Some(c))
                .map(|(b, _)| b)
                .collect(),
        }
    }

    /// `beam_index,color_id` rows for every colored beam.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "beam_index,color_id")?;
        for (b, c) in self.colors.iter().enumerate() {
            if let Some(c) = c {
                writeln!(w, "{b},{c}")?;
            }
        }
        Ok(())
    }
}

/// Greedy coloring.
///
/// Vertices are visited by non-increasing degree, ties by ascending beam
/// index. A vertex opens a new color only when every color in use already
/// appears among its colored neighbours; otherwise it takes the least-used
/// admissible color, ties by smallest id.
pub fn greedy_color(g: &ConflictGraph) -> Coloring {
    let mut order = g.vertices().to_vec();
    order.sort_by(|&a, &b| g.degree(b).cmp(&g.degree(a)).then(a.cmp(&b)));

    let mut colors: Vec<Option<usize>> = vec![None; g.m()];
    let mut usage: Vec<usize> = Vec::new();
    let mut blocked: Vec<bool> = Vec::new();
    for v in order {
        blocked.clear();
        blocked.resize(usage.len(), false);
        for &n in g.neighbors(v) {
            if let Some(c) = colors[n] {
                blocked[c - 1] = true;
            }
        }
        let pick = (0..usage.len())
            .filter(|&c| !blocked[c])
            .min_by_key(|&c| (usage[c], c));
        let c = match pick {
            Some(c) => c,
            None => {
                usage.push(0);
                usage.len() - 1
            }
        };
        usage[c] += 1;
        colors[v] = Some(c + 1);
    }
    Coloring { colors, usage }
}

/// `M_tr / M`.
pub fn overhead_reduction(coloring: &Coloring, m: usize) -> f64 {
    assert!(m >= 1);
    coloring.m_tr() as f64 / m as f64
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColoringCheck {
    pub violations: Vec<(usize, usize)>,
}

impl ColoringCheck {
    pub fn is_proper(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Lists every edge whose endpoints share a color.
pub fn validate_coloring(g: &ConflictGraph, c: &Coloring) -> Result<ColoringCheck> {
    if c.colors().len() != g.m() {
        return Err(Error::Dimension {
            expected: g.m(),
            actual: c.colors().len(),
        });
    }
    for (b, col) in c.colors().iter().enumerate() {
        if g.is_vertex(b) != col.is_some() {
            return Err(Error::arg(format!(
                "vertex set mismatch at beam {b}: vertex={}, colored={}",
                g.is_vertex(b),
                col.is_some()
            )));
        }
    }
    let violations = g
        .edges()
        .into_iter()
        .filter(|&(i, j)| c.color(i) == c.color(j))
        .collect();
    Ok(ColoringCheck { violations })
}
