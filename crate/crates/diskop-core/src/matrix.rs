//! Block-structured orthogonal matrices.
//!
//! The orthogonal part of a dilation map and the matrices of a finite group
//! representation are square matrices that map each fine block onto a fine
//! block (entries across unmatched blocks are zero). The induced permutation
//! of fine blocks must descend to a permutation of coarse blocks.

use crate::blocks::BlockStructure;
use crate::error::Error;
use crate::scalar::{NumericMode, Scalar};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct OrthoMatrix {
    dim: usize,
    /// Row-major entries.
    data: Vec<Scalar>,
}

impl OrthoMatrix {
    pub fn new(dim: usize, data: Vec<Scalar>) -> Result<Self, Error> {
        if data.len() != dim * dim {
            return Err(Error::Matrix(format!(
                "expected {} entries for a {dim}x{dim} matrix, got {}",
                dim * dim,
                data.len()
            )));
        }
        Ok(OrthoMatrix { dim, data })
    }

    pub fn identity(dim: usize, mode: NumericMode) -> Self {
        let mut data = vec![Scalar::zero(mode); dim * dim];
        for i in 0..dim {
            data[i * dim + i] = Scalar::one(mode);
        }
        OrthoMatrix { dim, data }
    }

    /// Signed permutation: axis `j` maps to axis `perm[j]` with sign `signs[j]`.
    pub fn signed_permutation(perm: &[usize], signs: &[i8], mode: NumericMode) -> Self {
        let dim = perm.len();
        assert_eq!(signs.len(), dim);
        let mut data = vec![Scalar::zero(mode); dim * dim];
        for (j, (&i, &s)) in perm.iter().zip(signs).enumerate() {
            data[i * dim + j] = Scalar::from_int(s as i64, mode);
        }
        OrthoMatrix { dim, data }
    }

    /// Plane rotation by the rational point (c, s) on the unit circle,
    /// acting on `axes` inside a matrix of size `dim`.
    pub fn plane_rotation(dim: usize, axes: (usize, usize), c: Scalar, s: Scalar) -> Self {
        let mode = c.mode();
        let mut m = OrthoMatrix::identity(dim, mode);
        let (a, b) = axes;
        *m.at_mut(a, a) = c.clone();
        *m.at_mut(a, b) = s.neg();
        *m.at_mut(b, a) = s;
        *m.at_mut(b, b) = c;
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn at(&self, row: usize, col: usize) -> &Scalar {
        &self.data[row * self.dim + col]
    }

    fn at_mut(&mut self, row: usize, col: usize) -> &mut Scalar {
        &mut self.data[row * self.dim + col]
    }

    pub fn mode(&self) -> NumericMode {
        self.data
            .first()
            .map(Scalar::mode)
            .unwrap_or(NumericMode::Exact)
    }

    pub fn entries(&self) -> &[Scalar] {
        &self.data
    }

    pub fn mul(&self, rhs: &OrthoMatrix) -> OrthoMatrix {
        assert_eq!(self.dim, rhs.dim, "matrix dimension mismatch");
        let mode = self.mode();
        let mut data = vec![Scalar::zero(mode); self.dim * self.dim];
        for i in 0..self.dim {
            for k in 0..self.dim {
                let aik = self.at(i, k);
                if aik.is_zero() {
                    continue;
                }
                for j in 0..self.dim {
                    let b = rhs.at(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    data[i * self.dim + j] = data[i * self.dim + j].add(&aik.mul(b));
                }
            }
        }
        OrthoMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn transpose(&self) -> OrthoMatrix {
        let mut data = Vec::with_capacity(self.dim * self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                data.push(self.at(j, i).clone());
            }
        }
        OrthoMatrix {
            dim: self.dim,
            data,
        }
    }

    pub fn apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        assert_eq!(v.len(), self.dim, "vector dimension mismatch");
        let mode = self.mode();
        (0..self.dim)
            .map(|i| {
                let mut acc = Scalar::zero(mode);
                for j in 0..self.dim {
                    let a = self.at(i, j);
                    if !a.is_zero() {
                        acc = acc.add(&a.mul(&v[j]));
                    }
                }
                acc
            })
            .collect()
    }

    /// Check `Mᵀ·M = I` within `tol` (exactly in exact mode).
    pub fn is_orthogonal(&self, tol: f64) -> bool {
        let mode = self.mode();
        let one = Scalar::one(mode);
        let zero = Scalar::zero(mode);
        for i in 0..self.dim {
            for j in i..self.dim {
                let mut acc = Scalar::zero(mode);
                for k in 0..self.dim {
                    acc = acc.add(&self.at(k, i).mul(self.at(k, j)));
                }
                let want = if i == j { &one } else { &zero };
                if !acc.eq_tol(want, tol) {
                    return false;
                }
            }
        }
        true
    }

    /// Derive the fine-block permutation: fine block `b` maps onto
    /// `perm[b]`. Fails if any column mixes fine blocks, if the image blocks
    /// do not form a permutation, or if the permutation does not descend to
    /// the coarse level.
    pub fn block_permutations(
        &self,
        structure: &Arc<BlockStructure>,
        tol: f64,
    ) -> Result<BlockPerms, Error> {
        if structure.dim() != self.dim {
            return Err(Error::Matrix(format!(
                "matrix of size {} does not match structure dimension {}",
                self.dim,
                structure.dim()
            )));
        }
        let nf = structure.fine_count();
        let mut fine_perm = vec![usize::MAX; nf];
        for (src, block) in structure.fine_blocks().iter().enumerate() {
            let mut target = usize::MAX;
            for &col in block {
                for row in 0..self.dim {
                    let entry = self.at(row, col);
                    let nonzero = match entry {
                        Scalar::Exact(_) => !entry.is_zero(),
                        Scalar::Float(x) => x.abs() > tol,
                    };
                    if nonzero {
                        let t = structure.fine_of_axis(row);
                        if target == usize::MAX {
                            target = t;
                        } else if target != t {
                            return Err(Error::Matrix(format!(
                                "fine block {} maps into two fine blocks ({} and {})",
                                src, target, t
                            )));
                        }
                    }
                }
            }
            if target == usize::MAX {
                return Err(Error::Matrix(format!("fine block {} maps to zero", src)));
            }
            if structure.fine_blocks()[target].len() != block.len() {
                return Err(Error::Matrix(format!(
                    "fine block {} maps onto block {} of different size",
                    src, target
                )));
            }
            fine_perm[src] = target;
        }
        let mut seen = vec![false; nf];
        for &t in &fine_perm {
            if seen[t] {
                return Err(Error::Matrix(
                    "two fine blocks map onto the same block".into(),
                ));
            }
            seen[t] = true;
        }
        // Descend to coarse blocks.
        let nc = structure.coarse_count();
        let mut coarse_perm = vec![usize::MAX; nc];
        for (src, &dst) in fine_perm.iter().enumerate() {
            let cs = structure.coarse_of_fine(src);
            let cd = structure.coarse_of_fine(dst);
            if coarse_perm[cs] == usize::MAX {
                coarse_perm[cs] = cd;
            } else if coarse_perm[cs] != cd {
                return Err(Error::Matrix(format!(
                    "coarse block {} is split across coarse blocks {} and {}",
                    cs, coarse_perm[cs], cd
                )));
            }
        }
        let mut seen = vec![false; nc];
        for &t in &coarse_perm {
            if t == usize::MAX || seen[t] {
                return Err(Error::Matrix("invalid coarse block permutation".into()));
            }
            seen[t] = true;
        }
        Ok(BlockPerms {
            fine: fine_perm,
            coarse: coarse_perm,
        })
    }

    /// Block-diagonal combination on a product structure: `self` on the
    /// leading axes, `rhs` on the trailing axes.
    pub fn direct_sum(&self, rhs: &OrthoMatrix) -> OrthoMatrix {
        let dim = self.dim + rhs.dim;
        let mode = self.mode();
        let mut data = vec![Scalar::zero(mode); dim * dim];
        for i in 0..self.dim {
            for j in 0..self.dim {
                data[i * dim + j] = self.at(i, j).clone();
            }
        }
        for i in 0..rhs.dim {
            for j in 0..rhs.dim {
                data[(self.dim + i) * dim + (self.dim + j)] = rhs.at(i, j).clone();
            }
        }
        OrthoMatrix { dim, data }
    }

    /// Extract the square submatrix on the given axes (in order).
    pub fn submatrix(&self, axes: &[usize]) -> OrthoMatrix {
        let data = axes
            .iter()
            .flat_map(|&i| axes.iter().map(move |&j| self.at(i, j).clone()))
            .collect();
        OrthoMatrix {
            dim: axes.len(),
            data,
        }
    }

    pub fn eq_tol(&self, rhs: &OrthoMatrix, tol: f64) -> bool {
        self.dim == rhs.dim
            && self
                .data
                .iter()
                .zip(&rhs.data)
                .all(|(a, b)| a.eq_tol(b, tol))
    }

    pub fn convert(&self, mode: NumericMode) -> OrthoMatrix {
        OrthoMatrix {
            dim: self.dim,
            data: self.data.iter().map(|s| s.convert(mode)).collect(),
        }
    }
}

/// The fine- and coarse-block permutations induced by a block-structured
/// matrix. `fine[b]` / `coarse[c]` is the image block of `b` / `c`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockPerms {
    pub fine: Vec<usize>,
    pub coarse: Vec<usize>,
}

impl BlockPerms {
    pub fn identity(structure: &BlockStructure) -> Self {
        BlockPerms {
            fine: (0..structure.fine_count()).collect(),
            coarse: (0..structure.coarse_count()).collect(),
        }
    }

    pub fn coarse_inverse(&self) -> Vec<usize> {
        let mut inv = vec![0; self.coarse.len()];
        for (i, &t) in self.coarse.iter().enumerate() {
            inv[t] = i;
        }
        inv
    }
}
