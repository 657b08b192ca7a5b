//! Undirected, unweighted, loop-free graphs on a fixed vertex set.

use crate::error::{Error, Result};

/// Symmetric hollow 0/1 adjacency matrix, stored as the strictly upper
/// triangle in row-major order (`i < j`).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct AdjMatrix {
    n: usize,
    bits: Vec<u8>,
}

#[inline]
pub(crate) fn pair_count(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

#[inline]
fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

impl AdjMatrix {
    pub fn empty(n: usize) -> Self {
        AdjMatrix {
            n,
            bits: vec![0; pair_count(n)],
        }
    }

    pub fn complete(n: usize) -> Self {
        AdjMatrix {
            n,
            bits: vec![1; pair_count(n)],
        }
    }

    /// Builds a graph from its strictly-upper-triangular entries (row-major).
    pub fn from_upper(n: usize, bits: Vec<u8>) -> Result<Self> {
        if bits.len() != pair_count(n) {
            return Err(Error::Input(format!(
                "expected {} upper-triangular entries for n = {}, got {}",
                pair_count(n),
                n,
                bits.len()
            )));
        }
        if let Some(pos) = bits.iter().position(|&b| b > 1) {
            return Err(Error::Input(format!("entry {pos} is not 0/1")));
        }
        Ok(AdjMatrix { n, bits })
    }

    pub fn from_edges(n: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        let mut g = Self::empty(n);
        for (i, j) in edges {
            g.add_edge(i, j)?;
        }
        Ok(g)
    }

    pub fn add_edge(&mut self, i: usize, j: usize) -> Result<()> {
        if i == j {
            return Err(Error::Input(format!("self-loop at vertex {i}")));
        }
        if i >= self.n || j >= self.n {
            return Err(Error::Input(format!(
                "edge ({i}, {j}) out of range for n = {}",
                self.n
            )));
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.bits[pair_index(self.n, a, b)] = 1;
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.bits[pair_index(self.n, a, b)] == 1
    }

    /// Strictly upper-triangular entries, row-major.
    pub fn upper(&self) -> &[u8] {
        &self.bits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let n = self.n;
        (0..n)
            .flat_map(move |i| ((i + 1)..n).map(move |j| (i, j)))
            .zip(self.bits.iter())
            .filter(|(_, &b)| b == 1)
            .map(|(e, _)| e)
    }

    pub fn edge_count(&self) -> usize {
        self.bits.iter().map(|&b| b as usize).sum()
    }

    pub fn density(&self) -> f64 {
        let m = pair_count(self.n);
        if m == 0 {
            0.0
        } else {
            self.edge_count() as f64 / m as f64
        }
    }

    /// Graph with every off-diagonal entry flipped.
    pub fn complement(&self) -> Self {
        AdjMatrix {
            n: self.n,
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }
}
