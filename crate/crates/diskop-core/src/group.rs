//! Finite groups acting orthogonally and block-compatibly on the ambient
//! space, with conjugation of dilation maps, subgroups and right cosets.

use crate::blocks::BlockStructure;
use crate::dilation::DilationMap;
use crate::error::Error;
use crate::matrix::OrthoMatrix;
use crate::scalar::{NumericMode, Scalar};
use std::sync::Arc;

#[derive(Debug, Clone, PartialEq)]
pub struct GroupRep {
    structure: Arc<BlockStructure>,
    elements: Vec<String>,
    /// `table[g][h]` = index of `g·h`.
    table: Vec<Vec<usize>>,
    matrices: Vec<OrthoMatrix>,
    identity: usize,
    inverses: Vec<usize>,
}

impl GroupRep {
    pub fn new(
        structure: Arc<BlockStructure>,
        elements: Vec<String>,
        table: Vec<Vec<usize>>,
        matrices: Vec<OrthoMatrix>,
        identity: usize,
        tol: f64,
    ) -> Result<Arc<Self>, Error> {
        let n = elements.len();
        if n == 0 {
            return Err(Error::Group("a group needs at least one element".into()));
        }
        if table.len() != n || table.iter().any(|row| row.len() != n) {
            return Err(Error::Group("multiplication table is not n×n".into()));
        }
        if matrices.len() != n {
            return Err(Error::Group("one matrix per element required".into()));
        }
        if identity >= n {
            return Err(Error::Group("identity index out of range".into()));
        }
        {
            let mut sorted = elements.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != n {
                return Err(Error::Group("element labels must be distinct".into()));
            }
        }
        for row in &table {
            for &v in row {
                if v >= n {
                    return Err(Error::Group("table entry out of range".into()));
                }
            }
        }
        // Identity behaviour.
        for g in 0..n {
            if table[identity][g] != g || table[g][identity] != g {
                return Err(Error::Group(format!(
                    "element {} does not compose trivially with the identity",
                    elements[g]
                )));
            }
        }
        // Latin square (cancellation) and inverses.
        let mut inverses = vec![usize::MAX; n];
        for g in 0..n {
            let mut seen = vec![false; n];
            for h in 0..n {
                let gh = table[g][h];
                if seen[gh] {
                    return Err(Error::Group(format!(
                        "row of {} repeats an entry",
                        elements[g]
                    )));
                }
                seen[gh] = true;
                if gh == identity {
                    inverses[g] = h;
                }
            }
        }
        if inverses.contains(&usize::MAX) {
            return Err(Error::Group("an element has no inverse".into()));
        }
        // Associativity, checked exhaustively (groups here are small).
        for a in 0..n {
            for b in 0..n {
                for c in 0..n {
                    if table[table[a][b]][c] != table[a][table[b][c]] {
                        return Err(Error::Group(format!(
                            "associativity fails at ({}, {}, {})",
                            elements[a], elements[b], elements[c]
                        )));
                    }
                }
            }
        }
        // Matrices: orthogonal, block compatible, and a homomorphism.
        for (g, m) in matrices.iter().enumerate() {
            if !m.is_orthogonal(tol) {
                return Err(Error::Group(format!(
                    "matrix of {} fails the orthogonality check",
                    elements[g]
                )));
            }
            m.block_permutations(&structure, tol).map_err(|e| {
                Error::Group(format!("matrix of {}: {}", elements[g], e))
            })?;
        }
        if !matrices[identity].eq_tol(
            &OrthoMatrix::identity(structure.dim(), matrices[identity].mode()),
            tol,
        ) {
            return Err(Error::Group("identity matrix is not the identity".into()));
        }
        for g in 0..n {
            for h in 0..n {
                let prod = matrices[g].mul(&matrices[h]);
                if !prod.eq_tol(&matrices[table[g][h]], tol.max(1e-12) * 10.0) {
                    return Err(Error::Group(format!(
                        "matrices are not a homomorphism at ({}, {})",
                        elements[g], elements[h]
                    )));
                }
            }
        }
        Ok(Arc::new(GroupRep {
            structure,
            elements,
            table,
            matrices,
            identity,
            inverses,
        }))
    }

    /// The trivial group on a structure.
    pub fn trivial(structure: Arc<BlockStructure>, mode: NumericMode) -> Arc<Self> {
        let dim = structure.dim();
        GroupRep::new(
            structure,
            vec!["e".into()],
            vec![vec![0]],
            vec![OrthoMatrix::identity(dim, mode)],
            0,
            0.0,
        )
        .expect("trivial group is valid")
    }

    pub fn structure(&self) -> &Arc<BlockStructure> {
        &self.structure
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[String] {
        &self.elements
    }

    pub fn element_index(&self, label: &str) -> Option<usize> {
        self.elements.iter().position(|e| e == label)
    }

    pub fn identity(&self) -> usize {
        self.identity
    }

    pub fn matrix(&self, g: usize) -> &OrthoMatrix {
        &self.matrices[g]
    }

    pub fn table(&self) -> &[Vec<usize>] {
        &self.table
    }

    pub fn multiply(&self, g: usize, h: usize) -> usize {
        self.table[g][h]
    }

    pub fn inverse(&self, g: usize) -> usize {
        self.inverses[g]
    }

    /// The matrix of `g` as a dilation map (unit scales, zero translation).
    pub fn as_map(&self, g: usize, mode: NumericMode) -> DilationMap {
        DilationMap::new(
            self.structure.clone(),
            self.matrices[g].convert(mode),
            vec![Scalar::one(mode); self.structure.coarse_count()],
            vec![Scalar::zero(mode); self.structure.dim()],
            // A validated group matrix stays orthogonal after conversion well
            // within any sensible tolerance.
            1e-9,
        )
        .expect("group matrix is a valid dilation map")
    }

    /// Conjugation `g · f = M(g) ∘ f ∘ M(g)⁻¹`.
    pub fn conjugate(&self, g: usize, f: &DilationMap) -> DilationMap {
        if g == self.identity {
            return f.clone();
        }
        let m = self.as_map(g, f.mode());
        m.compose(f).compose(&m.invert())
    }

    /// Validate a subset as a subgroup, returning it sorted.
    pub fn subgroup(&self, members: &[usize]) -> Result<Vec<usize>, Error> {
        let mut sorted: Vec<usize> = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.iter().any(|&g| g >= self.order()) {
            return Err(Error::Group("subgroup member out of range".into()));
        }
        if !sorted.contains(&self.identity) {
            return Err(Error::Group("subgroup must contain the identity".into()));
        }
        for &a in &sorted {
            if !sorted.contains(&self.inverses[a]) {
                return Err(Error::Group(format!(
                    "subgroup misses the inverse of {}",
                    self.elements[a]
                )));
            }
            for &b in &sorted {
                if !sorted.contains(&self.table[a][b]) {
                    return Err(Error::Group(format!(
                        "subgroup is not closed under {}·{}",
                        self.elements[a], self.elements[b]
                    )));
                }
            }
        }
        Ok(sorted)
    }

    /// Representatives of the right cosets `Hg`, one per coset, each the
    /// least element index in its coset.
    pub fn right_coset_representatives(&self, subgroup: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.order()];
        let mut reps = Vec::new();
        for g in 0..self.order() {
            if seen[g] {
                continue;
            }
            reps.push(g);
            for &h in subgroup {
                seen[self.table[h][g]] = true;
            }
        }
        reps
    }

    /// Diagonal product action on a product structure: same abstract group,
    /// matrices the direct sums.
    pub fn product(left: &Arc<GroupRep>, right: &Arc<GroupRep>) -> Result<Arc<GroupRep>, Error> {
        if left.elements != right.elements || left.table != right.table {
            return Err(Error::Group(
                "product requires the same abstract group on both factors".into(),
            ));
        }
        let structure = BlockStructure::product(&left.structure, &right.structure);
        let matrices = left
            .matrices
            .iter()
            .zip(&right.matrices)
            .map(|(a, b)| a.direct_sum(b))
            .collect();
        GroupRep::new(
            structure,
            left.elements.clone(),
            left.table.clone(),
            matrices,
            left.identity,
            1e-9,
        )
    }

    /// Restrict the representation to a contiguous coarse-block factor.
    /// Requires every matrix to preserve the split.
    pub fn restrict_coarse(
        self: &Arc<Self>,
        blocks: std::ops::Range<usize>,
        tol: f64,
    ) -> Result<Arc<GroupRep>, Error> {
        let (structure, axes) = self.structure.restrict_coarse(blocks.clone());
        let mut matrices = Vec::with_capacity(self.order());
        for (g, m) in self.matrices.iter().enumerate() {
            let perms = m.block_permutations(&self.structure, tol)?;
            for c in blocks.clone() {
                if !blocks.contains(&perms.coarse[c]) {
                    return Err(Error::Group(format!(
                        "matrix of {} crosses the factor split",
                        self.elements[g]
                    )));
                }
            }
            matrices.push(m.submatrix(&axes));
        }
        GroupRep::new(
            structure,
            self.elements.clone(),
            self.table.clone(),
            matrices,
            self.identity,
            tol,
        )
    }
}

/// The cyclic group of order 4 acting on the plane by quarter turns
/// (signed-permutation matrices, exact in both modes).
pub fn cyclic4(structure: Arc<BlockStructure>, mode: NumericMode) -> Arc<GroupRep> {
    assert_eq!(structure.dim(), 2);
    let e = OrthoMatrix::identity(2, mode);
    let r = OrthoMatrix::signed_permutation(&[1, 0], &[1, -1], mode);
    let r2 = r.mul(&r);
    let r3 = r2.mul(&r);
    let table = vec![
        vec![0, 1, 2, 3],
        vec![1, 2, 3, 0],
        vec![2, 3, 0, 1],
        vec![3, 0, 1, 2],
    ];
    GroupRep::new(
        structure,
        vec!["e".into(), "r".into(), "r2".into(), "r3".into()],
        table,
        vec![e, r, r2, r3],
        0,
        0.0,
    )
    .expect("C4 is valid")
}

/// The order-2 group generated by the swap of two 1-dimensional coarse
/// blocks.
pub fn swap2(structure: Arc<BlockStructure>, mode: NumericMode) -> Arc<GroupRep> {
    assert_eq!(structure.dim(), 2);
    let e = OrthoMatrix::identity(2, mode);
    let s = OrthoMatrix::signed_permutation(&[1, 0], &[1, 1], mode);
    GroupRep::new(
        structure,
        vec!["e".into(), "s".into()],
        vec![vec![0, 1], vec![1, 0]],
        vec![e, s],
        0,
        0.0,
    )
    .expect("swap group is valid")
}
