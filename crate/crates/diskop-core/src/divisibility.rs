//! Divisibility of star configurations.
//!
//! `x` left-divides `y` when `y = x ∘_α (q^j)`. For star configurations the
//! existence of a division is a purely geometric containment condition on the
//! component images, and the quotients, when they exist, are unique
//! (left cancellation).

use crate::ball::{contains, intersects, ProductBall};
use crate::config::{
    is_valid, membership_level, operad_compose, Config, MembershipLevel, StructureMap,
};
use crate::error::Error;
use crate::params::Params;
use std::collections::BTreeSet;

/// The intersection correspondence of two configurations plus the
/// intersection-relation partition of the first one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IntersectionData {
    /// `relation[i][j]` ⇔ `x_i(S) ∩ y_j(S) ≠ ∅`.
    pub relation: Vec<Vec<bool>>,
    /// Connected components of the intersection graph of `x` with itself,
    /// each block sorted, blocks ordered by least element.
    pub self_partition: Vec<Vec<usize>>,
}

impl IntersectionData {
    /// `c_{x,y}(I)`: all `j` intersecting some `i ∈ I`.
    pub fn image_of(&self, indices: &[usize]) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        for &i in indices {
            for (j, &hit) in self.relation[i].iter().enumerate() {
                if hit {
                    out.insert(j);
                }
            }
        }
        out
    }

    /// `c_{x,y}(i)` for a single index.
    pub fn image_of_one(&self, i: usize) -> Vec<usize> {
        self.relation[i]
            .iter()
            .enumerate()
            .filter_map(|(j, &hit)| hit.then_some(j))
            .collect()
    }
}

/// A witnessed division `y = x ∘_α (q^j)`.
#[derive(Debug, Clone)]
pub struct Division {
    pub alpha: StructureMap,
    /// Indexed by `ar(x)`; arity 0 outside the image of `alpha`.
    pub quotients: Vec<Config>,
}

/// The intersection correspondence matrix of `x` against `y`, plus the
/// self-intersection partition of `x`.
pub fn intersection_data(x: &Config, y: &Config, params: &Params) -> Result<IntersectionData, Error> {
    if !x.shares_context(y, params.tol) {
        return Err(Error::DomainMismatch(
            "intersection data needs a shared domain and group".into(),
        ));
    }
    let xs = x.images();
    let ys = y.images();
    let relation = xs
        .iter()
        .map(|a| ys.iter().map(|b| intersects(a, b, params.tol)).collect())
        .collect();
    Ok(IntersectionData {
        relation,
        self_partition: self_partition(&xs, params.tol),
    })
}

/// Connected components of the pairwise intersection graph of a ball family.
pub fn self_partition(images: &[ProductBall], tol: f64) -> Vec<Vec<usize>> {
    let n = images.len();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut Vec<usize>, i: usize) -> usize {
        if parent[i] != i {
            let root = find(parent, parent[i]);
            parent[i] = root;
        }
        parent[i]
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if intersects(&images[i], &images[j], tol) {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[a] = b;
                }
            }
        }
    }
    let mut blocks: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let root = find(&mut parent, i);
        blocks.entry(root).or_default().push(i);
    }
    let mut out: Vec<Vec<usize>> = blocks.into_values().collect();
    out.sort_by_key(|b| b[0]);
    out
}

/// Geometric divisor test. Without a subgroup the domain is taken to be
/// invariant and the test is plain image containment: for every `i ∈ ar(y)`
/// there must be `j ∈ ar(x)` with `y_i(S) ⊆ x_j(S)` (least such `j` wins).
/// With a subgroup `H`, the domain must be `H`-invariant and the containment
/// must hold for every right-coset representative `g_k` of `H` in `G`,
/// applied by conjugation.
///
/// Returned quotients are validated at the ambient level, and at the star
/// level when `y` is star-valid.
pub fn divides(
    x: &Config,
    y: &Config,
    subgroup: Option<&[usize]>,
    params: &Params,
) -> Result<Option<Division>, Error> {
    if !x.shares_context(y, params.tol) {
        return Err(Error::DomainMismatch(
            "division needs a shared domain and group".into(),
        ));
    }
    let group = x.group().clone();
    let reps: Vec<usize> = match subgroup {
        None => vec![group.identity()],
        Some(members) => {
            let h = group.subgroup(members)?;
            // The domain must be H-invariant.
            for &e in &h {
                let image = group.as_map(e, x.mode()).image(x.domain());
                if !image.eq_tol(x.domain(), params.tol) {
                    return Err(Error::DomainNotInvariant {
                        element: group.elements()[e].clone(),
                    });
                }
            }
            group.right_coset_representatives(&h)
        }
    };

    // Conjugated images of every component of x and y per representative.
    let image_of = |m: &crate::dilation::DilationMap, g: usize| -> ProductBall {
        group.conjugate(g, m).image(x.domain())
    };
    let mut alpha_values = Vec::with_capacity(y.arity());
    for i in 0..y.arity() {
        let mut chosen = None;
        'candidates: for j in 0..x.arity() {
            for &g in &reps {
                if !contains(&image_of(y.map(i), g), &image_of(x.map(j), g), params.tol) {
                    continue 'candidates;
                }
            }
            chosen = Some(j);
            break;
        }
        match chosen {
            Some(j) => alpha_values.push(j),
            None => return Ok(None),
        }
    }
    let alpha = StructureMap::new(x.arity(), alpha_values)?;
    let division = build_division(x, y, &alpha)?;

    // Soundness plus membership of the quotients.
    let recomposed = operad_compose(x, &division.alpha, &division.quotients)?;
    if !recomposed.eq_tol(y, params.tol) {
        return Ok(None);
    }
    let want_star = is_valid(y, MembershipLevel::Star, params);
    for q in &division.quotients {
        if !is_valid(q, MembershipLevel::Ambient, params) {
            return Ok(None);
        }
        if want_star && !is_valid(q, MembershipLevel::Star, params) {
            return Ok(None);
        }
    }
    Ok(Some(division))
}

/// The forced candidate quotients along `alpha`: component `i` of the fiber
/// over `j` is `x_j⁻¹ ∘ y_i`; arity 0 outside the image of `alpha`.
fn build_division(x: &Config, y: &Config, alpha: &StructureMap) -> Result<Division, Error> {
    if alpha.source() != y.arity() || alpha.target() != x.arity() {
        return Err(Error::Arity(format!(
            "structure map {}→{} against arities {}→{}",
            alpha.source(),
            alpha.target(),
            y.arity(),
            x.arity()
        )));
    }
    let fibers = alpha.fibers();
    let quotients = fibers
        .iter()
        .enumerate()
        .map(|(j, fiber)| {
            let maps = fiber
                .iter()
                .map(|&i| x.map(j).invert().compose(y.map(i)))
                .collect();
            Config::new(maps, x.domain().clone(), x.group().clone())
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Division {
        alpha: alpha.clone(),
        quotients,
    })
}

/// Left cancellation: the unique candidate quotients along a fixed `alpha`.
/// Errors when recomposition does not reproduce `y`, or when a quotient
/// fails `y`'s membership level.
pub fn left_cancel(
    x: &Config,
    y: &Config,
    alpha: &StructureMap,
    params: &Params,
) -> Result<Vec<Config>, Error> {
    let division = build_division(x, y, alpha)?;
    let recomposed = operad_compose(x, alpha, &division.quotients)?;
    for k in 0..y.arity() {
        if !recomposed.map(k).eq_tol(y.map(k), params.tol) {
            return Err(Error::Recomposition { component: k });
        }
    }
    if membership_level(y, params).is_some() {
        let level = membership_level(y, params)
            .map(|l| l.min(MembershipLevel::Star))
            .unwrap_or(MembershipLevel::Ambient);
        for (slot, q) in division.quotients.iter().enumerate() {
            if !is_valid(q, level, params) {
                return Err(Error::QuotientValidation { slot, level });
            }
        }
    }
    Ok(division.quotients)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::BlockStructure;
    use crate::dilation::DilationMap;
    use crate::group::GroupRep;
    use crate::scalar::{NumericMode, Scalar};

    fn exact(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q, NumericMode::Exact)
    }

    fn disk_config(domain_r: (i64, i64), disks: &[((i64, i64), (i64, i64), (i64, i64))]) -> Config {
        // disks: (scale, tx, ty) as rationals.
        let s = BlockStructure::spherical(2);
        let domain = ProductBall::origin(s.clone(), exact(domain_r.0, domain_r.1));
        let group = GroupRep::trivial(s.clone(), NumericMode::Exact);
        let maps = disks
            .iter()
            .map(|&(sc, tx, ty)| {
                DilationMap::scale_translate(
                    s.clone(),
                    vec![exact(sc.0, sc.1)],
                    vec![exact(tx.0, tx.1), exact(ty.0, ty.1)],
                )
                .unwrap()
            })
            .collect();
        Config::new(maps, domain, group).unwrap()
    }

    fn five_disk_figure() -> (Config, Config) {
        crate::gen::five_disk_figure(NumericMode::Exact)
    }

    #[test]
    fn five_disk_intersection_pairs() {
        let (x, y) = five_disk_figure();
        let data = intersection_data(&x, &y, &Params::default()).unwrap();
        let mut pairs = Vec::new();
        for i in 0..3 {
            for j in 0..2 {
                if data.relation[i][j] {
                    pairs.push((i + 1, j + 1));
                }
            }
        }
        assert_eq!(pairs, vec![(1, 1), (2, 1), (3, 2)]);
    }

    #[test]
    fn self_relation_is_reflexive_diagonal() {
        let (x, _) = five_disk_figure();
        let data = intersection_data(&x, &x, &Params::default()).unwrap();
        for i in 0..3 {
            assert!(data.relation[i][i]);
            for j in 0..3 {
                assert_eq!(data.relation[i][j], data.relation[j][i]);
                if i != j {
                    assert!(!data.relation[i][j], "x is star-valid, no overlaps");
                }
            }
        }
        assert_eq!(data.self_partition, vec![vec![0], vec![1], vec![2]]);
    }

    #[test]
    fn disjoint_families_have_empty_relation() {
        let x = disk_config((1, 1), &[((1, 10), (-1, 2), (0, 1))]);
        let y = disk_config((1, 1), &[((1, 10), (1, 2), (0, 1))]);
        let data = intersection_data(&x, &y, &Params::default()).unwrap();
        assert!(!data.relation[0][0]);
    }

    #[test]
    fn self_division_is_identity() {
        let x = disk_config((1, 1), &[((3, 10), (-1, 2), (0, 1)), ((3, 10), (1, 2), (0, 1))]);
        let div = divides(&x, &x, None, &Params::default()).unwrap().unwrap();
        assert_eq!(div.alpha.values(), &[0, 1]);
        for q in &div.quotients {
            assert_eq!(q.arity(), 1);
            assert!(q.map(0).is_identity(0.0));
        }
    }

    #[test]
    fn worked_division_example() {
        let x = disk_config((1, 1), &[((3, 10), (-1, 2), (0, 1)), ((3, 10), (1, 2), (0, 1))]);
        let y = disk_config((1, 1), &[((1, 10), (-1, 2), (0, 1))]);
        let params = Params::default();
        let div = divides(&x, &y, None, &params).unwrap().unwrap();
        assert_eq!(div.alpha.values(), &[0]);
        assert_eq!(div.quotients[0].arity(), 1);
        assert_eq!(div.quotients[0].map(0).scales()[0], exact(1, 3));
        assert!(div.quotients[0].map(0).translation().iter().all(Scalar::is_zero));
        assert_eq!(div.quotients[1].arity(), 0);
        let recomposed = operad_compose(&x, &div.alpha, &div.quotients).unwrap();
        assert!(recomposed.eq_tol(&y, 0.0));
    }

    #[test]
    fn straddling_component_has_no_divisor() {
        let x = disk_config((1, 1), &[((3, 10), (-1, 2), (0, 1)), ((3, 10), (1, 2), (0, 1))]);
        // A disk centered at the origin overlapping both x-disks, contained
        // in neither.
        let y = disk_config((1, 1), &[((1, 4), (0, 1), (0, 1))]);
        assert!(divides(&x, &y, None, &Params::default()).unwrap().is_none());
    }

    #[test]
    fn left_cancel_round_trip() {
        let x = disk_config((1, 1), &[((3, 10), (-1, 2), (0, 1)), ((3, 10), (1, 2), (0, 1))]);
        let params = Params::default();
        let q1 = disk_config((1, 1), &[((1, 4), (-1, 3), (0, 1)), ((1, 4), (1, 3), (0, 1))]);
        let q2 = disk_config((1, 1), &[((1, 2), (1, 4), (0, 1))]);
        let alpha = StructureMap::new(2, vec![0, 0, 1]).unwrap();
        let y = operad_compose(&x, &alpha, &[q1.clone(), q2.clone()]).unwrap();
        let quotients = left_cancel(&x, &y, &alpha, &params).unwrap();
        assert!(quotients[0].eq_tol(&q1, 0.0));
        assert!(quotients[1].eq_tol(&q2, 0.0));
    }

    #[test]
    fn left_cancel_identity_divisor() {
        let x = disk_config((1, 1), &[((1, 1), (0, 1), (0, 1))]);
        let y = disk_config((1, 1), &[((1, 10), (-1, 2), (0, 1)), ((1, 10), (1, 2), (0, 1))]);
        let alpha = StructureMap::new(1, vec![0, 0]).unwrap();
        let q = left_cancel(&x, &y, &alpha, &Params::default()).unwrap();
        assert_eq!(q.len(), 1);
        assert!(q[0].eq_tol(&y, 0.0));
    }

    #[test]
    fn left_cancel_rejects_bad_alpha() {
        let x = disk_config((1, 1), &[((3, 10), (-1, 2), (0, 1)), ((3, 10), (1, 2), (0, 1))]);
        let y = disk_config((1, 1), &[((1, 10), (-1, 2), (0, 1))]);
        // Map y's single component into slot 2, whose ball does not contain it.
        let alpha = StructureMap::new(2, vec![1]).unwrap();
        let err = left_cancel(&x, &y, &alpha, &Params::default());
        assert!(matches!(err, Err(Error::QuotientValidation { .. })));
    }

    #[test]
    fn division_transitivity() {
        let params = Params::default();
        let x = disk_config((1, 1), &[((2, 5), (-1, 2), (0, 1)), ((2, 5), (1, 2), (0, 1))]);
        let y = disk_config(
            (1, 1),
            &[((1, 5), (-1, 2), (0, 1)), ((1, 5), (1, 2), (0, 1))],
        );
        let z = disk_config((1, 1), &[((1, 10), (-1, 2), (0, 1))]);
        let d1 = divides(&x, &y, None, &params).unwrap();
        let d2 = divides(&y, &z, None, &params).unwrap();
        assert!(d1.is_some() && d2.is_some());
        let d3 = divides(&x, &z, None, &params).unwrap().unwrap();
        let recomposed = operad_compose(&x, &d3.alpha, &d3.quotients).unwrap();
        assert!(recomposed.eq_tol(&z, 0.0));
    }
}
