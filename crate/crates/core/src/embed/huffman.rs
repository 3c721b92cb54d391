use std::cmp::Reverse;
use std::collections::BinaryHeap;

use super::EmbedError;

/// One step on a leaf's root-to-leaf path.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PathStep {
    pub node: usize,
    /// 0 or 1; the branch taken below `node`.
    pub bit: u8,
}

/// Huffman tree over vocabulary indices. Internal nodes are numbered
/// `0..n-1` in creation order, so the root is `n - 2`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HuffmanTree {
    codes: Vec<Vec<PathStep>>,
}

impl HuffmanTree {
    /// Builds the tree from leaf weights given in canonical-key order.
    ///
    /// Ties are broken deterministically: leaves before internal nodes,
    /// leaves in ascending key order, internal nodes in creation order. The
    /// first node popped in a merge gets bit 0.
    pub fn build(counts: &[u64]) -> Result<Self, EmbedError> {
        let n = counts.len();
        if n < 2 {
            return Err(EmbedError::VocabularyTooSmall(n));
        }
        if counts.contains(&0) {
            return Err(EmbedError::ZeroFrequency);
        }
        // Heap entries: (weight, tiebreak, node). Leaves are 0..n, internal
        // nodes n..2n-1 in the combined numbering.
        let mut heap: BinaryHeap<Reverse<(u64, usize)>> = counts
            .iter()
            .enumerate()
            .map(|(i, &c)| Reverse((c, i)))
            .collect();
        let mut parent = vec![(usize::MAX, 0u8); 2 * n - 1];
        for next in n..2 * n - 1 {
            let Reverse((w0, a)) = heap.pop().expect("heap holds at least two nodes");
            let Reverse((w1, b)) = heap.pop().expect("heap holds at least two nodes");
            parent[a] = (next, 0);
            parent[b] = (next, 1);
            heap.push(Reverse((w0 + w1, next)));
        }
        let codes = (0..n)
            .map(|leaf| {
                let mut path = Vec::new();
                let mut cur = leaf;
                while parent[cur].0 != usize::MAX {
                    let (p, bit) = parent[cur];
                    path.push(PathStep { node: p - n, bit });
                    cur = p;
                }
                path.reverse();
                path
            })
            .collect();
        Ok(HuffmanTree { codes })
    }

    /// Root-to-leaf path for vocabulary index `leaf`.
    pub fn path(&self, leaf: usize) -> &[PathStep] {
        &self.codes[leaf]
    }

    pub fn leaves(&self) -> usize {
        self.codes.len()
    }

    pub fn internal_nodes(&self) -> usize {
        self.codes.len() - 1
    }

    pub fn max_depth(&self) -> usize {
        self.codes.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Σ weight × path length.
    pub fn weighted_path_length(&self, counts: &[u64]) -> u64 {
        self.codes
            .iter()
            .zip(counts)
            .map(|(c, &w)| c.len() as u64 * w)
            .sum()
    }
}
