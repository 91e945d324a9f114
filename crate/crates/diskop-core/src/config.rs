//! Operad elements: ordered tuples of dilation maps over a shared domain,
//! composition along maps of finite ordinals, symmetric/group actions, and
//! membership validation (ambient / star / separated).

use crate::ball::{ball_relations, ProductBall};
use crate::dilation::DilationMap;
use crate::error::Error;
use crate::group::GroupRep;
use crate::params::Params;
use crate::scalar::{NumericMode, Scalar};
use std::sync::Arc;

/// An element of the operad: `arity` many dilation maps acting on `domain`.
#[derive(Debug, Clone)]
pub struct Config {
    maps: Vec<DilationMap>,
    domain: ProductBall,
    group: Arc<GroupRep>,
}

/// A map of finite ordinals `{1..source} → {1..target}` (stored 0-based).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StructureMap {
    target: usize,
    map: Vec<usize>,
}

/// Nested membership levels of the framed little-disk hierarchy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MembershipLevel {
    Ambient,
    Star,
    Separated,
}

/// One failed membership check: which group element, which component(s),
/// which predicate.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct Violation {
    pub group_element: String,
    pub i: usize,
    pub j: Option<usize>,
    pub predicate: PredicateKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredicateKind {
    /// `(g·x_i)(S) ⊆ S` fails.
    ImageContained,
    /// `(g·x_i)(S) ∩ (g·x_j)(S) = ∅` fails.
    ImagesDisjoint,
    /// Same checks after the separation enlargement.
    EnlargedImageContained,
    EnlargedImagesDisjoint,
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub violations: Vec<Violation>,
}

fn same_group(a: &Arc<GroupRep>, b: &Arc<GroupRep>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

/// A permutation of `{1..n}` (stored 0-based as the image list).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Perm(Vec<usize>);

impl Perm {
    pub fn new(image: Vec<usize>) -> Result<Self, Error> {
        let n = image.len();
        let mut seen = vec![false; n];
        for &v in &image {
            if v >= n || seen[v] {
                return Err(Error::NotBijective);
            }
            seen[v] = true;
        }
        Ok(Perm(image))
    }

    pub fn identity(n: usize) -> Self {
        Perm((0..n).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn apply(&self, i: usize) -> usize {
        self.0[i]
    }

    pub fn inverse(&self) -> Perm {
        let mut inv = vec![0; self.0.len()];
        for (i, &t) in self.0.iter().enumerate() {
            inv[t] = i;
        }
        Perm(inv)
    }

    /// `self ∘ rhs` (apply `rhs` first).
    pub fn compose(&self, rhs: &Perm) -> Perm {
        Perm(rhs.0.iter().map(|&i| self.0[i]).collect())
    }

    pub fn image(&self) -> &[usize] {
        &self.0
    }
}

impl StructureMap {
    pub fn new(target: usize, map: Vec<usize>) -> Result<Self, Error> {
        if let Some(&bad) = map.iter().find(|&&j| j >= target) {
            return Err(Error::IndexRange(format!(
                "structure map value {} out of target range {}",
                bad, target
            )));
        }
        Ok(StructureMap { target, map })
    }

    pub fn identity(n: usize) -> Self {
        StructureMap {
            target: n,
            map: (0..n).collect(),
        }
    }

    pub fn source(&self) -> usize {
        self.map.len()
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn apply(&self, k: usize) -> usize {
        self.map[k]
    }

    pub fn values(&self) -> &[usize] {
        &self.map
    }

    /// Fibers `α⁻¹(j)` in induced order, indexed by `j`.
    pub fn fibers(&self) -> Vec<Vec<usize>> {
        let mut fibers = vec![Vec::new(); self.target];
        for (k, &j) in self.map.iter().enumerate() {
            fibers[j].push(k);
        }
        fibers
    }

    pub fn image_contains(&self, j: usize) -> bool {
        self.map.contains(&j)
    }
}

impl Config {
    pub fn new(
        maps: Vec<DilationMap>,
        domain: ProductBall,
        group: Arc<GroupRep>,
    ) -> Result<Self, Error> {
        for (i, m) in maps.iter().enumerate() {
            if **m.structure() != **domain.structure() {
                return Err(Error::BlockMismatch(format!(
                    "component {} does not share the domain's block structure",
                    i
                )));
            }
        }
        if **group.structure() != **domain.structure() {
            return Err(Error::BlockMismatch(
                "group does not share the domain's block structure".into(),
            ));
        }
        Ok(Config {
            maps,
            domain,
            group,
        })
    }

    /// The arity-0 configuration (the point of the reduced operad).
    pub fn nullary(domain: ProductBall, group: Arc<GroupRep>) -> Self {
        Config {
            maps: Vec::new(),
            domain,
            group,
        }
    }

    /// The arity-1 identity configuration.
    pub fn identity(domain: ProductBall, group: Arc<GroupRep>) -> Self {
        let id = DilationMap::identity(domain.structure().clone(), domain.mode());
        Config {
            maps: vec![id],
            domain,
            group,
        }
    }

    pub fn arity(&self) -> usize {
        self.maps.len()
    }

    pub fn maps(&self) -> &[DilationMap] {
        &self.maps
    }

    pub fn map(&self, i: usize) -> &DilationMap {
        &self.maps[i]
    }

    pub fn domain(&self) -> &ProductBall {
        &self.domain
    }

    pub fn group(&self) -> &Arc<GroupRep> {
        &self.group
    }

    pub fn mode(&self) -> NumericMode {
        self.domain.mode()
    }

    /// The component `x_i` as an arity-1 config.
    pub fn component(&self, i: usize) -> Config {
        Config {
            maps: vec![self.maps[i].clone()],
            domain: self.domain.clone(),
            group: self.group.clone(),
        }
    }

    /// `x_A` for a subset of the arity (0-based, strictly increasing).
    pub fn subconfig(&self, indices: &[usize]) -> Result<Config, Error> {
        let mut maps = Vec::with_capacity(indices.len());
        let mut last: Option<usize> = None;
        for &i in indices {
            if i >= self.arity() {
                return Err(Error::IndexRange(format!(
                    "subconfig index {} out of arity {}",
                    i,
                    self.arity()
                )));
            }
            if let Some(prev) = last {
                if i <= prev {
                    return Err(Error::IndexRange(
                        "subconfig indices must be strictly increasing".into(),
                    ));
                }
            }
            last = Some(i);
            maps.push(self.maps[i].clone());
        }
        Ok(Config {
            maps,
            domain: self.domain.clone(),
            group: self.group.clone(),
        })
    }

    /// Same domain (up to tolerance), same group (pointer fast path, then
    /// structural equality).
    pub fn shares_context(&self, other: &Config, tol: f64) -> bool {
        self.domain.eq_tol(&other.domain, tol) && same_group(&self.group, &other.group)
    }

    /// Componentwise equality after an arity check. No quotient by symmetry.
    pub fn eq_tol(&self, other: &Config, tol: f64) -> bool {
        self.arity() == other.arity()
            && self.domain.eq_tol(&other.domain, tol)
            && self
                .maps
                .iter()
                .zip(&other.maps)
                .all(|(a, b)| a.eq_tol(b, tol))
    }

    /// `(σ, g) · x`: component `i` is `g · x_{σ⁻¹(i)}`.
    pub fn act(&self, sigma: &Perm, g: usize, params: &Params) -> Result<Config, Error> {
        let _ = params;
        if sigma.len() != self.arity() {
            return Err(Error::Arity(format!(
                "permutation of length {} against arity {}",
                sigma.len(),
                self.arity()
            )));
        }
        let inv = sigma.inverse();
        let maps = (0..self.arity())
            .map(|i| self.group.conjugate(g, &self.maps[inv.apply(i)]))
            .collect();
        Ok(Config {
            maps,
            domain: self.domain.clone(),
            group: self.group.clone(),
        })
    }

    /// Right-compose every component with `s·id` (the enlargement used by the
    /// separated condition and the shrink flows).
    pub fn scaled_right(&self, s: &Scalar) -> Config {
        Config {
            maps: self.maps.iter().map(|m| m.scaled_right(s)).collect(),
            domain: self.domain.clone(),
            group: self.group.clone(),
        }
    }

    /// Left-compose every component with `s·id`.
    pub fn scaled_left(&self, s: &Scalar) -> Config {
        Config {
            maps: self.maps.iter().map(|m| m.scaled_left(s)).collect(),
            domain: self.domain.clone(),
            group: self.group.clone(),
        }
    }

    /// Images `x_i(S)` of the domain under each component.
    pub fn images(&self) -> Vec<ProductBall> {
        self.maps.iter().map(|m| m.image(&self.domain)).collect()
    }

    pub fn convert(&self, mode: NumericMode) -> Result<Config, Error> {
        let maps = self.maps.iter().map(|m| m.convert(mode)).collect();
        let domain = self.domain.convert(mode);
        Ok(Config {
            maps,
            domain,
            group: self.group.clone(),
        })
    }
}

/// Membership validation. Ambient: every conjugated component maps the domain
/// into itself. Star: ambient plus pairwise disjoint conjugated images.
/// Separated: star, and for arity > 1 the star check also passes after
/// enlarging every component by the separation constant.
pub fn validate(x: &Config, level: MembershipLevel, params: &Params) -> ValidationReport {
    let mut violations = Vec::new();
    collect_star_violations(x, level >= MembershipLevel::Star, params, false, &mut violations);
    if level == MembershipLevel::Separated && x.arity() > 1 {
        let enlarged = x.scaled_right(&params.separation_scalar(x.mode()));
        collect_star_violations(&enlarged, true, params, true, &mut violations);
    }
    ValidationReport {
        valid: violations.is_empty(),
        violations,
    }
}

pub fn is_valid(x: &Config, level: MembershipLevel, params: &Params) -> bool {
    validate(x, level, params).valid
}

/// The highest level `x` passes, if any.
pub fn membership_level(x: &Config, params: &Params) -> Option<MembershipLevel> {
    for level in [
        MembershipLevel::Separated,
        MembershipLevel::Star,
        MembershipLevel::Ambient,
    ] {
        if is_valid(x, level, params) {
            return Some(level);
        }
    }
    None
}

fn collect_star_violations(
    x: &Config,
    check_disjoint: bool,
    params: &Params,
    enlarged: bool,
    out: &mut Vec<Violation>,
) {
    let tol = params.tol;
    let group = x.group().clone();
    for g in 0..group.order() {
        let images: Vec<ProductBall> = x
            .maps()
            .iter()
            .map(|m| group.conjugate(g, m).image(x.domain()))
            .collect();
        for (i, img) in images.iter().enumerate() {
            if !ball_relations(img, x.domain(), tol).contains {
                out.push(Violation {
                    group_element: group.elements()[g].clone(),
                    i,
                    j: None,
                    predicate: if enlarged {
                        PredicateKind::EnlargedImageContained
                    } else {
                        PredicateKind::ImageContained
                    },
                });
            }
        }
        if check_disjoint {
            for i in 0..images.len() {
                for j in (i + 1)..images.len() {
                    if !ball_relations(&images[i], &images[j], tol).disjoint {
                        out.push(Violation {
                            group_element: group.elements()[g].clone(),
                            i,
                            j: Some(j),
                            predicate: if enlarged {
                                PredicateKind::EnlargedImagesDisjoint
                            } else {
                                PredicateKind::ImagesDisjoint
                            },
                        });
                    }
                }
            }
        }
    }
}

/// Operadic composition `x ∘_α (q^j)`: the result has arity `α.source()`, and
/// component `k` is `x_{α(k)} ∘ q^{α(k)}_t` where `t` is the position of `k`
/// in its fiber.
pub fn operad_compose(
    x: &Config,
    alpha: &StructureMap,
    quotients: &[Config],
) -> Result<Config, Error> {
    if alpha.target() != x.arity() {
        return Err(Error::Arity(format!(
            "structure map targets {} but x has arity {}",
            alpha.target(),
            x.arity()
        )));
    }
    if quotients.len() != x.arity() {
        return Err(Error::Arity(format!(
            "expected {} quotients, got {}",
            x.arity(),
            quotients.len()
        )));
    }
    let fibers = alpha.fibers();
    for (j, fiber) in fibers.iter().enumerate() {
        if quotients[j].arity() != fiber.len() {
            return Err(Error::Arity(format!(
                "quotient {} has arity {} but its fiber has {} elements",
                j,
                quotients[j].arity(),
                fiber.len()
            )));
        }
        if !quotients[j].domain().eq_tol(x.domain(), f64::EPSILON)
            || !same_group(quotients[j].group(), x.group())
        {
            return Err(Error::DomainMismatch(format!(
                "quotient {} lives on a different domain or group",
                j
            )));
        }
    }
    let mut position_in_fiber = vec![0usize; alpha.source()];
    for fiber in &fibers {
        for (t, &k) in fiber.iter().enumerate() {
            position_in_fiber[k] = t;
        }
    }
    let maps = (0..alpha.source())
        .map(|k| {
            let j = alpha.apply(k);
            x.map(j).compose(quotients[j].map(position_in_fiber[k]))
        })
        .collect();
    Ok(Config {
        maps,
        domain: x.domain().clone(),
        group: x.group().clone(),
    })
}

/// Standard composition with the order-preserving structure map: slot `j`
/// receives `args[j]`, fibers are concatenated in slot order.
pub fn compose_standard(x: &Config, args: &[Config]) -> Result<Config, Error> {
    if args.len() != x.arity() {
        return Err(Error::Arity(format!(
            "expected {} arguments, got {}",
            x.arity(),
            args.len()
        )));
    }
    let mut map = Vec::new();
    for (j, a) in args.iter().enumerate() {
        map.extend(std::iter::repeat(j).take(a.arity()));
    }
    let alpha = StructureMap::new(x.arity(), map)?;
    operad_compose(x, &alpha, args)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocks::BlockStructure;
    use crate::group::cyclic4;

    fn exact(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q, NumericMode::Exact)
    }

    fn unit_disk_ctx() -> (ProductBall, Arc<GroupRep>) {
        let s = BlockStructure::spherical(2);
        let domain = ProductBall::origin(s.clone(), exact(1, 1));
        let group = GroupRep::trivial(s, NumericMode::Exact);
        (domain, group)
    }

    fn two_disk_config(scale: (i64, i64)) -> Config {
        let (domain, group) = unit_disk_ctx();
        let s = domain.structure().clone();
        let mk = |tx: (i64, i64)| {
            DilationMap::scale_translate(
                s.clone(),
                vec![exact(scale.0, scale.1)],
                vec![exact(tx.0, tx.1), exact(0, 1)],
            )
            .unwrap()
        };
        Config::new(vec![mk((-1, 2)), mk((1, 2))], domain, group).unwrap()
    }

    #[test]
    fn nullary_is_valid_at_all_levels() {
        let (domain, group) = unit_disk_ctx();
        let x = Config::nullary(domain, group);
        for level in [
            MembershipLevel::Ambient,
            MembershipLevel::Star,
            MembershipLevel::Separated,
        ] {
            assert!(is_valid(&x, level, &Params::default()));
        }
    }

    #[test]
    fn star_but_not_separated_at_radius_03() {
        let params = Params::default();
        let x = two_disk_config((3, 10));
        assert!(is_valid(&x, MembershipLevel::Star, &params));
        let report = validate(&x, MembershipLevel::Separated, &params);
        assert!(!report.valid);
        assert!(report
            .violations
            .iter()
            .any(|v| v.predicate == PredicateKind::EnlargedImageContained));
    }

    #[test]
    fn separated_at_radius_002() {
        let x = two_disk_config((1, 50));
        assert!(is_valid(&x, MembershipLevel::Separated, &Params::default()));
    }

    #[test]
    fn validation_is_monotone() {
        for scale in [(1i64, 50i64), (3, 10), (2, 3)] {
            let x = two_disk_config(scale);
            let p = Params::default();
            let sep = is_valid(&x, MembershipLevel::Separated, &p);
            let star = is_valid(&x, MembershipLevel::Star, &p);
            let amb = is_valid(&x, MembershipLevel::Ambient, &p);
            assert!(!sep || star);
            assert!(!star || amb);
        }
    }

    #[test]
    fn compose_unit_laws() {
        let x = two_disk_config((3, 10));
        let id_args = vec![
            Config::identity(x.domain().clone(), x.group().clone()),
            Config::identity(x.domain().clone(), x.group().clone()),
        ];
        let composed = compose_standard(&x, &id_args).unwrap();
        assert!(composed.eq_tol(&x, 0.0));

        let id = Config::identity(x.domain().clone(), x.group().clone());
        let wrapped = compose_standard(&id, std::slice::from_ref(&x)).unwrap();
        assert!(wrapped.eq_tol(&x, 0.0));
    }

    #[test]
    fn worked_composition_example() {
        // x = (scale .3 @ (−.5,0), scale .3 @ (.5,0)), α: {1}→{1},
        // q¹ = scale 1/3 @ 0, q² = nullary ⇒ single map scale .1 @ (−.5,0).
        let x = two_disk_config((3, 10));
        let (domain, _) = unit_disk_ctx();
        let q1 = Config::new(
            vec![DilationMap::scale_translate(
                domain.structure().clone(),
                vec![exact(1, 3)],
                vec![exact(0, 1), exact(0, 1)],
            )
            .unwrap()],
            x.domain().clone(),
            x.group().clone(),
        )
        .unwrap();
        let q2 = Config::nullary(x.domain().clone(), x.group().clone());
        let alpha = StructureMap::new(2, vec![0]).unwrap();
        let y = operad_compose(&x, &alpha, &[q1, q2]).unwrap();
        assert_eq!(y.arity(), 1);
        assert_eq!(y.map(0).scales()[0], exact(1, 10));
        assert_eq!(y.map(0).translation()[0], exact(-1, 2));
    }

    #[test]
    fn subconfig_selects_components() {
        let (domain, group) = unit_disk_ctx();
        let s = domain.structure().clone();
        let mk = |tx: (i64, i64)| {
            DilationMap::scale_translate(
                s.clone(),
                vec![exact(1, 10)],
                vec![exact(tx.0, tx.1), exact(0, 1)],
            )
            .unwrap()
        };
        let x = Config::new(
            vec![mk((-1, 2)), mk((0, 1)), mk((1, 2))],
            domain,
            group,
        )
        .unwrap();
        let sub = x.subconfig(&[0, 2]).unwrap();
        assert_eq!(sub.arity(), 2);
        assert!(sub.map(0).eq_tol(x.map(0), 0.0));
        assert!(sub.map(1).eq_tol(x.map(2), 0.0));
        assert!(x.subconfig(&[]).unwrap().arity() == 0);
        assert!(x.subconfig(&(0..3).collect::<Vec<_>>()).unwrap().eq_tol(&x, 0.0));
        assert!(x.subconfig(&[3]).is_err());
        assert!(x.subconfig(&[1, 1]).is_err());
    }

    #[test]
    fn act_swaps_components() {
        let x = two_disk_config((3, 10));
        let swap = Perm::new(vec![1, 0]).unwrap();
        let y = x.act(&swap, x.group().identity(), &Params::default()).unwrap();
        assert!(y.map(0).eq_tol(x.map(1), 0.0));
        assert!(y.map(1).eq_tol(x.map(0), 0.0));
        let back = y.act(&swap.inverse(), x.group().identity(), &Params::default()).unwrap();
        assert!(back.eq_tol(&x, 0.0));
    }

    #[test]
    fn invariant_domain_reduces_group_check_to_identity() {
        // Origin-centered disk, C4 rotations: the full-group check equals the
        // identity-only check.
        let s = BlockStructure::spherical_split(2);
        let domain = ProductBall::origin(s.clone(), exact(1, 1));
        let group = cyclic4(s.clone(), NumericMode::Exact);
        let trivial = GroupRep::trivial(s.clone(), NumericMode::Exact);
        let mk = |tx: (i64, i64), ty: (i64, i64)| {
            DilationMap::scale_translate(
                s.clone(),
                vec![exact(1, 5)],
                vec![exact(tx.0, tx.1), exact(ty.0, ty.1)],
            )
            .unwrap()
        };
        let maps = vec![mk((-1, 2), (0, 1)), mk((1, 2), (0, 1))];
        let with_group = Config::new(maps.clone(), domain.clone(), group).unwrap();
        let with_trivial = Config::new(maps, domain, trivial).unwrap();
        let p = Params::default();
        for level in [MembershipLevel::Ambient, MembershipLevel::Star, MembershipLevel::Separated] {
            assert_eq!(
                is_valid(&with_group, level, &p),
                is_valid(&with_trivial, level, &p)
            );
        }
    }
}
