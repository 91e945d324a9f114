//! Coarse/fine block decompositions of the ambient coordinate space.
//!
//! A [`BlockStructure`] fixes a dimension `d`, a partition of the axes into
//! ordered *coarse* blocks (one dilation scale and one ball per coarse block)
//! and a refining partition into *fine* blocks (orthogonal parts are block
//! structured with respect to these).

use crate::error::Error;
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockStructure {
    dim: usize,
    coarse: Vec<Vec<usize>>,
    fine: Vec<Vec<usize>>,
    /// fine block index -> coarse block index containing it
    fine_to_coarse: Vec<usize>,
    /// axis -> fine block index
    axis_to_fine: Vec<usize>,
    /// axis -> coarse block index
    axis_to_coarse: Vec<usize>,
}

impl BlockStructure {
    /// Build and validate a structure from 0-based axis lists.
    pub fn new(dim: usize, coarse: Vec<Vec<usize>>, fine: Vec<Vec<usize>>) -> Result<Arc<Self>, Error> {
        if dim == 0 {
            return Err(Error::Structure("dimension must be positive".into()));
        }
        let axis_to_coarse = partition_index(dim, &coarse, "coarse")?;
        let axis_to_fine = partition_index(dim, &fine, "fine")?;
        let mut fine_to_coarse = Vec::with_capacity(fine.len());
        for (fi, block) in fine.iter().enumerate() {
            let c = axis_to_coarse[block[0]];
            if block.iter().any(|&a| axis_to_coarse[a] != c) {
                return Err(Error::Structure(format!(
                    "fine block {} does not refine the coarse partition",
                    fi
                )));
            }
            fine_to_coarse.push(c);
        }
        Ok(Arc::new(BlockStructure {
            dim,
            coarse,
            fine,
            fine_to_coarse,
            axis_to_fine,
            axis_to_coarse,
        }))
    }

    /// The trivial structure on `dim` axes: one coarse block, one fine block.
    pub fn spherical(dim: usize) -> Arc<Self> {
        let axes: Vec<usize> = (0..dim).collect();
        BlockStructure::new(dim, vec![axes.clone()], vec![axes]).expect("valid")
    }

    /// One coarse block covering everything, one fine block per axis.
    /// Useful for exact-mode structures where the orthogonal parts are signed
    /// permutations of individual axes.
    pub fn spherical_split(dim: usize) -> Arc<Self> {
        let axes: Vec<usize> = (0..dim).collect();
        let fine = axes.iter().map(|&a| vec![a]).collect();
        BlockStructure::new(dim, vec![axes], fine).expect("valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn coarse_blocks(&self) -> &[Vec<usize>] {
        &self.coarse
    }

    pub fn fine_blocks(&self) -> &[Vec<usize>] {
        &self.fine
    }

    pub fn coarse_count(&self) -> usize {
        self.coarse.len()
    }

    pub fn fine_count(&self) -> usize {
        self.fine.len()
    }

    pub fn coarse_of_axis(&self, axis: usize) -> usize {
        self.axis_to_coarse[axis]
    }

    pub fn fine_of_axis(&self, axis: usize) -> usize {
        self.axis_to_fine[axis]
    }

    pub fn coarse_of_fine(&self, fine: usize) -> usize {
        self.fine_to_coarse[fine]
    }

    /// Concatenation of two structures on orthogonal factors; axes of `right`
    /// are shifted past `left`. Coarse and fine blocks are listed left first.
    pub fn product(left: &Arc<Self>, right: &Arc<Self>) -> Arc<Self> {
        let dim = left.dim + right.dim;
        let shift = |blocks: &[Vec<usize>], off: usize| -> Vec<Vec<usize>> {
            blocks
                .iter()
                .map(|b| b.iter().map(|a| a + off).collect())
                .collect()
        };
        let mut coarse = left.coarse.clone();
        coarse.extend(shift(&right.coarse, left.dim));
        let mut fine = left.fine.clone();
        fine.extend(shift(&right.fine, left.dim));
        BlockStructure::new(dim, coarse, fine).expect("product of valid structures is valid")
    }

    /// Restriction to a contiguous coarse-block range, renumbering axes to
    /// 0..k in the order they appear in the kept blocks. Returns the new
    /// structure and the kept axes in their new order.
    pub fn restrict_coarse(&self, blocks: std::ops::Range<usize>) -> (Arc<Self>, Vec<usize>) {
        let kept_axes: Vec<usize> = blocks
            .clone()
            .flat_map(|c| self.coarse[c].iter().copied())
            .collect();
        let renum: std::collections::HashMap<usize, usize> = kept_axes
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let coarse = blocks
            .clone()
            .map(|c| self.coarse[c].iter().map(|a| renum[a]).collect())
            .collect();
        let fine = self
            .fine
            .iter()
            .enumerate()
            .filter(|(fi, _)| blocks.contains(&self.fine_to_coarse[*fi]))
            .map(|(_, b)| b.iter().map(|a| renum[a]).collect())
            .collect();
        let s = BlockStructure::new(kept_axes.len(), coarse, fine)
            .expect("restriction of valid structure is valid");
        (s, kept_axes)
    }
}

fn partition_index(dim: usize, blocks: &[Vec<usize>], what: &str) -> Result<Vec<usize>, Error> {
    let mut index = vec![usize::MAX; dim];
    for (bi, block) in blocks.iter().enumerate() {
        if block.is_empty() {
            return Err(Error::Structure(format!("{} block {} is empty", what, bi)));
        }
        for &a in block {
            if a >= dim {
                return Err(Error::Structure(format!(
                    "{} block {} references axis {} out of range (dim {})",
                    what, bi, a, dim
                )));
            }
            if index[a] != usize::MAX {
                return Err(Error::Structure(format!(
                    "axis {} appears in two {} blocks",
                    a, what
                )));
            }
            index[a] = bi;
        }
    }
    if let Some(a) = index.iter().position(|&b| b == usize::MAX) {
        return Err(Error::Structure(format!(
            "axis {} is missing from the {} partition",
            a, what
        )));
    }
    Ok(index)
}
