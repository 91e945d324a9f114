//! Products of open balls and their containment/disjointness predicates.
//!
//! All comparisons are on squared quantities, so exact mode never leaves the
//! rationals. Open-ball semantics: tangency counts as disjoint, a tangent
//! inner ball counts as contained.

use crate::blocks::BlockStructure;
use crate::error::Error;
use crate::scalar::{norm2, vec_sub, NumericMode, Scalar};
use std::sync::Arc;

/// One open ball per coarse block.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductBall {
    structure: Arc<BlockStructure>,
    /// Per coarse block: the center restricted to that block's axes.
    centers: Vec<Vec<Scalar>>,
    /// Per coarse block: the (strictly positive) radius.
    radii: Vec<Scalar>,
}

/// Result of comparing two product balls.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallRelations {
    pub contains: bool,
    pub disjoint: bool,
    pub intersects: bool,
}

impl ProductBall {
    pub fn new(
        structure: Arc<BlockStructure>,
        centers: Vec<Vec<Scalar>>,
        radii: Vec<Scalar>,
    ) -> Result<Self, Error> {
        let nc = structure.coarse_count();
        if centers.len() != nc || radii.len() != nc {
            return Err(Error::Structure(format!(
                "expected {} centers and radii, got {} and {}",
                nc,
                centers.len(),
                radii.len()
            )));
        }
        for (c, block) in centers.iter().zip(structure.coarse_blocks()) {
            if c.len() != block.len() {
                return Err(Error::Structure(
                    "center length does not match block size".into(),
                ));
            }
        }
        for r in &radii {
            if !r.is_positive() {
                return Err(Error::Invalid("ball radius must be strictly positive".into()));
            }
        }
        Ok(ProductBall {
            structure,
            centers,
            radii,
        })
    }

    /// The ball of radius `r` centered at the origin of every block.
    pub fn origin(structure: Arc<BlockStructure>, r: Scalar) -> Self {
        let mode = r.mode();
        let centers = structure
            .coarse_blocks()
            .iter()
            .map(|b| vec![Scalar::zero(mode); b.len()])
            .collect();
        let radii = vec![r; structure.coarse_count()];
        ProductBall {
            structure,
            centers,
            radii,
        }
    }

    pub fn structure(&self) -> &Arc<BlockStructure> {
        &self.structure
    }

    pub fn centers(&self) -> &[Vec<Scalar>] {
        &self.centers
    }

    pub fn radii(&self) -> &[Scalar] {
        &self.radii
    }

    pub fn mode(&self) -> NumericMode {
        self.radii[0].mode()
    }

    /// The full-dimension center vector.
    pub fn center_vector(&self) -> Vec<Scalar> {
        let mode = self.mode();
        let mut v = vec![Scalar::zero(mode); self.structure.dim()];
        for (block, center) in self.structure.coarse_blocks().iter().zip(&self.centers) {
            for (&axis, value) in block.iter().zip(center) {
                v[axis] = value.clone();
            }
        }
        v
    }

    /// Rebuild per-block centers from a full-dimension vector.
    pub fn from_center_vector(
        structure: Arc<BlockStructure>,
        v: &[Scalar],
        radii: Vec<Scalar>,
    ) -> Result<Self, Error> {
        let centers = structure
            .coarse_blocks()
            .iter()
            .map(|b| b.iter().map(|&a| v[a].clone()).collect())
            .collect();
        ProductBall::new(structure, centers, radii)
    }

    /// Same structure and equal data up to tolerance.
    pub fn eq_tol(&self, rhs: &ProductBall, tol: f64) -> bool {
        *self.structure == *rhs.structure
            && self
                .radii
                .iter()
                .zip(&rhs.radii)
                .all(|(a, b)| a.eq_tol(b, tol))
            && self
                .centers
                .iter()
                .zip(&rhs.centers)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.eq_tol(y, tol)))
    }

    /// Multiply every radius by `factor`, keeping centers.
    pub fn scaled(&self, factor: &Scalar) -> ProductBall {
        ProductBall {
            structure: self.structure.clone(),
            centers: self.centers.clone(),
            radii: self.radii.iter().map(|r| r.mul(factor)).collect(),
        }
    }

    /// Concatenate two product balls on the product structure.
    pub fn product(left: &ProductBall, right: &ProductBall) -> ProductBall {
        let structure = BlockStructure::product(&left.structure, &right.structure);
        let mut centers = left.centers.clone();
        centers.extend(right.centers.iter().cloned());
        let mut radii = left.radii.clone();
        radii.extend(right.radii.iter().cloned());
        ProductBall {
            structure,
            centers,
            radii,
        }
    }

    /// Restriction to a contiguous coarse-block range.
    pub fn restrict_coarse(&self, blocks: std::ops::Range<usize>) -> ProductBall {
        let (structure, _) = self.structure.restrict_coarse(blocks.clone());
        ProductBall {
            structure,
            centers: self.centers[blocks.clone()].to_vec(),
            radii: self.radii[blocks].to_vec(),
        }
    }

    pub fn convert(&self, mode: NumericMode) -> ProductBall {
        ProductBall {
            structure: self.structure.clone(),
            centers: self
                .centers
                .iter()
                .map(|c| c.iter().map(|s| s.convert(mode)).collect())
                .collect(),
            radii: self.radii.iter().map(|s| s.convert(mode)).collect(),
        }
    }
}

/// Containment, disjointness and intersection of two product balls on the
/// same block structure.
///
/// `contains` is `a ⊆ b`: per block, `|c_a − c_b| + r_a ≤ r_b`, evaluated as
/// `|c_a − c_b|² ≤ (r_b − r_a)²` together with `r_a ≤ r_b`.
/// `disjoint` holds when in some block `|c_a − c_b|² ≥ (r_a + r_b)²`.
pub fn ball_relations(a: &ProductBall, b: &ProductBall, tol: f64) -> BallRelations {
    assert_eq!(
        *a.structure, *b.structure,
        "ball relations across different block structures"
    );
    let mut contains = true;
    let mut disjoint = false;
    for (block, ((ca, cb), (ra, rb))) in a
        .centers
        .iter()
        .zip(&b.centers)
        .zip(a.radii.iter().zip(&b.radii))
        .enumerate()
    {
        let _ = block;
        let d2 = norm2(&vec_sub(ca, cb));
        let sum = ra.add(rb);
        if d2.ge(&sum.square(), tol) {
            disjoint = true;
        }
        let gap = rb.sub(ra);
        if !(ra.le(rb, tol) && d2.le(&gap.square(), tol)) {
            contains = false;
        }
    }
    BallRelations {
        contains,
        disjoint,
        intersects: !disjoint,
    }
}

/// Convenience wrappers.
pub fn contains(inner: &ProductBall, outer: &ProductBall, tol: f64) -> bool {
    ball_relations(inner, outer, tol).contains
}

pub fn disjoint(a: &ProductBall, b: &ProductBall, tol: f64) -> bool {
    ball_relations(a, b, tol).disjoint
}

pub fn intersects(a: &ProductBall, b: &ProductBall, tol: f64) -> bool {
    ball_relations(a, b, tol).intersects
}
