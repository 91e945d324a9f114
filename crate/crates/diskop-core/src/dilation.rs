//! Affine dilation maps: orthogonal part, per-coarse-block positive scales,
//! translation.
//!
//! A map acts as `v ↦ Λ·(A·v) + u` where `A` is a block-structured orthogonal
//! matrix, `Λ` multiplies every axis of coarse block `j` by `scales[j]`, and
//! `u` is the translation. This factorization is unique, so maps compare
//! componentwise.

use crate::ball::ProductBall;
use crate::blocks::BlockStructure;
use crate::error::Error;
use crate::matrix::{BlockPerms, OrthoMatrix};
use crate::scalar::{vec_add, NumericMode, Scalar};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct DilationMap {
    structure: Arc<BlockStructure>,
    ortho: OrthoMatrix,
    scales: Vec<Scalar>,
    translation: Vec<Scalar>,
    perms: BlockPerms,
}

impl DilationMap {
    /// Build and validate: orthogonality of the matrix, block structure
    /// compatibility, strictly positive scales.
    pub fn new(
        structure: Arc<BlockStructure>,
        ortho: OrthoMatrix,
        scales: Vec<Scalar>,
        translation: Vec<Scalar>,
        tol: f64,
    ) -> Result<Self, Error> {
        if scales.len() != structure.coarse_count() {
            return Err(Error::Structure(format!(
                "expected {} scales, got {}",
                structure.coarse_count(),
                scales.len()
            )));
        }
        if translation.len() != structure.dim() {
            return Err(Error::Structure(format!(
                "expected translation of length {}, got {}",
                structure.dim(),
                translation.len()
            )));
        }
        if !ortho.is_orthogonal(tol) {
            return Err(Error::Matrix(
                "orthogonal part fails the orthogonality check".into(),
            ));
        }
        if scales.iter().any(|s| !s.is_positive()) {
            return Err(Error::Invalid("scales must be strictly positive".into()));
        }
        let perms = ortho.block_permutations(&structure, tol)?;
        Ok(DilationMap {
            structure,
            ortho,
            scales,
            translation,
            perms,
        })
    }

    pub fn identity(structure: Arc<BlockStructure>, mode: NumericMode) -> Self {
        let dim = structure.dim();
        let nc = structure.coarse_count();
        DilationMap {
            ortho: OrthoMatrix::identity(dim, mode),
            scales: vec![Scalar::one(mode); nc],
            translation: vec![Scalar::zero(mode); dim],
            perms: BlockPerms::identity(&structure),
            structure,
        }
    }

    /// Pure per-block scaling about the origin (no rotation, no translation).
    pub fn scaling(structure: Arc<BlockStructure>, scales: Vec<Scalar>) -> Result<Self, Error> {
        let mode = scales
            .first()
            .map(Scalar::mode)
            .unwrap_or(NumericMode::Exact);
        let dim = structure.dim();
        DilationMap::new(
            structure.clone(),
            OrthoMatrix::identity(dim, mode),
            scales,
            vec![Scalar::zero(mode); dim],
            0.0,
        )
    }

    /// Uniform scaling by `s` on every coarse block.
    pub fn uniform_scaling(structure: Arc<BlockStructure>, s: Scalar) -> Self {
        let nc = structure.coarse_count();
        DilationMap::scaling(structure, vec![s; nc]).expect("positive scale")
    }

    /// Scale-and-translate with identity rotation.
    pub fn scale_translate(
        structure: Arc<BlockStructure>,
        scales: Vec<Scalar>,
        translation: Vec<Scalar>,
    ) -> Result<Self, Error> {
        let mode = scales
            .first()
            .map(Scalar::mode)
            .unwrap_or(NumericMode::Exact);
        let dim = structure.dim();
        DilationMap::new(
            structure,
            OrthoMatrix::identity(dim, mode),
            scales,
            translation,
            0.0,
        )
    }

    pub fn structure(&self) -> &Arc<BlockStructure> {
        &self.structure
    }

    pub fn ortho(&self) -> &OrthoMatrix {
        &self.ortho
    }

    pub fn scales(&self) -> &[Scalar] {
        &self.scales
    }

    pub fn translation(&self) -> &[Scalar] {
        &self.translation
    }

    pub fn coarse_perm(&self) -> &[usize] {
        &self.perms.coarse
    }

    pub fn mode(&self) -> NumericMode {
        self.scales[0].mode()
    }

    fn scale_of_axis(&self, axis: usize) -> &Scalar {
        &self.scales[self.structure.coarse_of_axis(axis)]
    }

    /// Apply the linear part `Λ·A`.
    pub fn linear_apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        let rotated = self.ortho.apply(v);
        rotated
            .iter()
            .enumerate()
            .map(|(axis, x)| self.scale_of_axis(axis).mul(x))
            .collect()
    }

    /// Apply the affine map.
    pub fn apply(&self, v: &[Scalar]) -> Vec<Scalar> {
        vec_add(&self.linear_apply(v), &self.translation)
    }

    /// Composition `self ∘ rhs`. Scales multiply per coarse block after the
    /// block permutation of `self`'s orthogonal part; the translation is
    /// `self(rhs(0))`.
    pub fn compose(&self, rhs: &DilationMap) -> DilationMap {
        assert_eq!(
            *self.structure, *rhs.structure,
            "composing dilation maps over different block structures"
        );
        let ortho = self.ortho.mul(&rhs.ortho);
        let inv = self.perms.coarse_inverse();
        let scales: Vec<Scalar> = (0..self.scales.len())
            .map(|j| self.scales[j].mul(&rhs.scales[inv[j]]))
            .collect();
        let translation = self.apply(&rhs.translation);
        // Permutations compose directly; no need to rederive them from the
        // product matrix.
        let fine = rhs
            .perms
            .fine
            .iter()
            .map(|&mid| self.perms.fine[mid])
            .collect();
        let coarse = rhs
            .perms
            .coarse
            .iter()
            .map(|&mid| self.perms.coarse[mid])
            .collect();
        DilationMap {
            structure: self.structure.clone(),
            ortho,
            scales,
            translation,
            perms: BlockPerms { fine, coarse },
        }
    }

    /// The inverse map; exact in exact mode.
    pub fn invert(&self) -> DilationMap {
        let ortho = self.ortho.transpose();
        let scales: Vec<Scalar> = (0..self.scales.len())
            .map(|j| self.scales[self.perms.coarse[j]].recip())
            .collect();
        let fine = invert_perm(&self.perms.fine);
        let coarse = invert_perm(&self.perms.coarse);
        let mut out = DilationMap {
            structure: self.structure.clone(),
            ortho,
            scales,
            translation: vec![Scalar::zero(self.mode()); self.structure.dim()],
            perms: BlockPerms { fine, coarse },
        };
        let neg: Vec<Scalar> = self.translation.iter().map(Scalar::neg).collect();
        out.translation = out.linear_apply(&neg);
        out
    }

    /// Image of a product ball: per block, center moves to `f(center)` and the
    /// radius is multiplied by the block's scale (after block permutation).
    pub fn image(&self, ball: &ProductBall) -> ProductBall {
        assert_eq!(
            *self.structure,
            **ball.structure(),
            "taking an image across block structures"
        );
        let center = self.apply(&ball.center_vector());
        let inv = self.perms.coarse_inverse();
        let radii: Vec<Scalar> = (0..self.scales.len())
            .map(|j| self.scales[j].mul(&ball.radii()[inv[j]]))
            .collect();
        ProductBall::from_center_vector(self.structure.clone(), &center, radii)
            .expect("image of a valid ball is valid")
    }

    /// Right-compose with the uniform scaling `s · id` (scales multiply by
    /// `s`, rotation and translation unchanged).
    pub fn scaled_right(&self, s: &Scalar) -> DilationMap {
        DilationMap {
            structure: self.structure.clone(),
            ortho: self.ortho.clone(),
            scales: self.scales.iter().map(|x| x.mul(s)).collect(),
            translation: self.translation.clone(),
            perms: self.perms.clone(),
        }
    }

    /// Left-compose with the uniform scaling `s · id` (scales and translation
    /// multiply by `s`).
    pub fn scaled_left(&self, s: &Scalar) -> DilationMap {
        DilationMap {
            structure: self.structure.clone(),
            ortho: self.ortho.clone(),
            scales: self.scales.iter().map(|x| x.mul(s)).collect(),
            translation: self.translation.iter().map(|x| x.mul(s)).collect(),
            perms: self.perms.clone(),
        }
    }

    /// Right-compose with a per-coarse-block scaling.
    pub fn scaled_right_per_block(&self, factors: &[Scalar]) -> DilationMap {
        assert_eq!(factors.len(), self.scales.len());
        let inv = self.perms.coarse_inverse();
        let scales = (0..self.scales.len())
            .map(|j| self.scales[j].mul(&factors[inv[j]]))
            .collect();
        DilationMap {
            structure: self.structure.clone(),
            ortho: self.ortho.clone(),
            scales,
            translation: self.translation.clone(),
            perms: self.perms.clone(),
        }
    }

    /// Block-diagonal product of two maps on the product structure.
    pub fn product(left: &DilationMap, right: &DilationMap) -> DilationMap {
        let structure = BlockStructure::product(&left.structure, &right.structure);
        let ortho = left.ortho.direct_sum(&right.ortho);
        let mut scales = left.scales.clone();
        scales.extend(right.scales.iter().cloned());
        let mut translation = left.translation.clone();
        translation.extend(right.translation.iter().cloned());
        let nfl = left.perms.fine.len();
        let ncl = left.perms.coarse.len();
        let mut fine = left.perms.fine.clone();
        fine.extend(right.perms.fine.iter().map(|&f| f + nfl));
        let mut coarse = left.perms.coarse.clone();
        coarse.extend(right.perms.coarse.iter().map(|&c| c + ncl));
        DilationMap {
            structure,
            ortho,
            scales,
            translation,
            perms: BlockPerms { fine, coarse },
        }
    }

    /// Projection onto a contiguous coarse-block factor. Requires the map not
    /// to permute blocks across the cut.
    pub fn restrict_coarse(&self, blocks: std::ops::Range<usize>) -> Result<DilationMap, Error> {
        for c in blocks.clone() {
            if !blocks.contains(&self.perms.coarse[c]) {
                return Err(Error::BlockMismatch(
                    "map permutes coarse blocks across the factor split".into(),
                ));
            }
        }
        let (structure, axes) = self.structure.restrict_coarse(blocks.clone());
        let ortho = self.ortho.submatrix(&axes);
        let scales = self.scales[blocks.clone()].to_vec();
        let translation = axes.iter().map(|&a| self.translation[a].clone()).collect();
        let fine_kept: Vec<usize> = (0..self.perms.fine.len())
            .filter(|&f| blocks.contains(&self.structure.coarse_of_fine(f)))
            .collect();
        let fine_renum: std::collections::HashMap<usize, usize> = fine_kept
            .iter()
            .enumerate()
            .map(|(new, &old)| (old, new))
            .collect();
        let fine = fine_kept
            .iter()
            .map(|&f| fine_renum[&self.perms.fine[f]])
            .collect();
        let coarse = blocks
            .clone()
            .map(|c| self.perms.coarse[c] - blocks.start)
            .collect();
        Ok(DilationMap {
            structure,
            ortho,
            scales,
            translation,
            perms: BlockPerms { fine, coarse },
        })
    }

    /// Componentwise equality up to tolerance (exact equality in exact mode).
    pub fn eq_tol(&self, rhs: &DilationMap, tol: f64) -> bool {
        *self.structure == *rhs.structure
            && self.ortho.eq_tol(&rhs.ortho, tol)
            && self
                .scales
                .iter()
                .zip(&rhs.scales)
                .all(|(a, b)| a.eq_tol(b, tol))
            && self
                .translation
                .iter()
                .zip(&rhs.translation)
                .all(|(a, b)| a.eq_tol(b, tol))
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.eq_tol(&DilationMap::identity(self.structure.clone(), self.mode()), tol)
    }

    pub fn convert(&self, mode: NumericMode) -> DilationMap {
        DilationMap {
            structure: self.structure.clone(),
            ortho: self.ortho.convert(mode),
            scales: self.scales.iter().map(|s| s.convert(mode)).collect(),
            translation: self.translation.iter().map(|s| s.convert(mode)).collect(),
            perms: self.perms.clone(),
        }
    }
}

fn invert_perm(p: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; p.len()];
    for (i, &t) in p.iter().enumerate() {
        inv[t] = i;
    }
    inv
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ball::{ball_relations, contains};

    fn exact(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q, NumericMode::Exact)
    }

    fn plane() -> Arc<BlockStructure> {
        BlockStructure::spherical(2)
    }

    fn st(scale: (i64, i64), tx: (i64, i64), ty: (i64, i64)) -> DilationMap {
        DilationMap::scale_translate(
            plane(),
            vec![exact(scale.0, scale.1)],
            vec![exact(tx.0, tx.1), exact(ty.0, ty.1)],
        )
        .unwrap()
    }

    #[test]
    fn compose_identity_is_identity() {
        let f = st((1, 2), (2, 5), (0, 1));
        let id = DilationMap::identity(plane(), NumericMode::Exact);
        assert!(f.compose(&id).eq_tol(&f, 0.0));
        assert!(id.compose(&f).eq_tol(&f, 0.0));
    }

    #[test]
    fn compose_matches_hand_affine_algebra() {
        // f = scale 0.5 translate (0.4, 0); g = scale 0.2 translate 0.
        let f = st((1, 2), (2, 5), (0, 1));
        let g = st((1, 5), (0, 1), (0, 1));
        let fg = f.compose(&g);
        let want = st((1, 10), (2, 5), (0, 1));
        assert!(fg.eq_tol(&want, 0.0));
    }

    #[test]
    fn inverse_cancels_exactly() {
        let f = st((1, 2), (2, 5), (0, 1));
        let inv = f.invert();
        let want = st((2, 1), (-4, 5), (0, 1));
        assert!(inv.eq_tol(&want, 0.0));
        assert!(f.compose(&inv).is_identity(0.0));
        assert!(inv.compose(&f).is_identity(0.0));
        assert!(inv.invert().eq_tol(&f, 0.0));
        let g = st((1, 5), (3, 7), (1, 9));
        assert!(f.compose(&g).compose(&g.invert()).eq_tol(&f, 0.0));
    }

    #[test]
    fn inverse_with_rotation_and_blocks() {
        let s = BlockStructure::new(2, vec![vec![0], vec![1]], vec![vec![0], vec![1]]).unwrap();
        let swap = OrthoMatrix::signed_permutation(&[1, 0], &[1, -1], NumericMode::Exact);
        let f = DilationMap::new(
            s,
            swap,
            vec![exact(2, 1), exact(3, 1)],
            vec![exact(1, 1), exact(-1, 2)],
            0.0,
        )
        .unwrap();
        assert!(f.compose(&f.invert()).is_identity(0.0));
        assert!(f.invert().compose(&f).is_identity(0.0));
    }

    #[test]
    fn image_of_unit_ball() {
        let f = st((1, 2), (2, 5), (0, 1));
        let b = ProductBall::origin(plane(), exact(1, 1));
        let img = f.image(&b);
        assert_eq!(img.radii()[0], exact(1, 2));
        assert_eq!(img.centers()[0][0], exact(2, 5));
        assert_eq!(img.centers()[0][1], exact(0, 1));
        assert!(contains(&img, &b, 0.0));
    }

    #[test]
    fn rotation_fixes_origin_ball() {
        let rot = OrthoMatrix::plane_rotation(2, (0, 1), exact(3, 5), exact(4, 5));
        let f = DilationMap::new(
            plane(),
            rot,
            vec![exact(1, 1)],
            vec![exact(0, 1), exact(0, 1)],
            0.0,
        )
        .unwrap();
        let b = ProductBall::origin(plane(), exact(1, 1));
        let img = f.image(&b);
        let rel = ball_relations(&img, &b, 0.0);
        assert!(rel.contains);
        assert!(img.eq_tol(&b, 0.0));
    }

    #[test]
    fn block_permuting_image_moves_radii() {
        let s = BlockStructure::new(2, vec![vec![0], vec![1]], vec![vec![0], vec![1]]).unwrap();
        let swap = OrthoMatrix::signed_permutation(&[1, 0], &[1, 1], NumericMode::Exact);
        let f = DilationMap::new(
            s.clone(),
            swap,
            vec![exact(2, 1), exact(1, 3)],
            vec![exact(0, 1), exact(0, 1)],
            0.0,
        )
        .unwrap();
        let b = ProductBall::new(
            s,
            vec![vec![exact(0, 1)], vec![exact(0, 1)]],
            vec![exact(1, 1), exact(5, 1)],
        )
        .unwrap();
        let img = f.image(&b);
        // Block 0 of the image comes from source block 1 (radius 5) scaled by 2.
        assert_eq!(img.radii()[0], exact(10, 1));
        assert_eq!(img.radii()[1], exact(1, 3));
        // Round trip through the inverse restores the ball.
        let back = f.invert().image(&img);
        assert!(back.eq_tol(&b, 0.0));
    }

    #[test]
    fn composition_is_associative() {
        let f = st((1, 2), (2, 5), (0, 1));
        let g = st((1, 5), (3, 7), (1, 9));
        let h = st((3, 4), (-1, 3), (2, 3));
        let lhs = f.compose(&g).compose(&h);
        let rhs = f.compose(&g.compose(&h));
        assert!(lhs.eq_tol(&rhs, 0.0));
    }

    #[test]
    fn product_and_projection_round_trip() {
        let f = st((1, 2), (2, 5), (0, 1));
        let g = DilationMap::scale_translate(
            BlockStructure::spherical(1),
            vec![exact(1, 3)],
            vec![exact(1, 4)],
        )
        .unwrap();
        let p = DilationMap::product(&f, &g);
        assert_eq!(p.scales().len(), 2);
        let back_f = p.restrict_coarse(0..1).unwrap();
        let back_g = p.restrict_coarse(1..2).unwrap();
        assert!(back_f.eq_tol(&f, 0.0));
        assert!(back_g.eq_tol(&g, 0.0));
    }
}
