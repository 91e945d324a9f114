//! Shrink flows and their closed-form minimal entry times.
//!
//! The left flow `H(x,t) = (1−t)·x` shrinks image balls toward the origin;
//! the right flow `H(x,t) = x∘(1−t)` shrinks them in place. Entering a target
//! pair `(B, B′)` with `B ⊆ B′` reduces to per-constraint bounds linear in
//! `1−t`, so the minimal time is a maximum of closed-form values rather than
//! the limit of a topological argument. A bisection oracle for cross-checking
//! lives in the verification harness, not here.

use crate::ball::{ball_relations, ProductBall};
use crate::config::{is_valid, Config, MembershipLevel};
use crate::coreform::{criticality, CriticalWitness};
use crate::error::Error;
use crate::params::Params;
use crate::scalar::{norm2, Scalar};
use crate::trees::SuperTree;
use std::cmp::Ordering;

/// The three shrink flows. At `t = 0` each is the identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    /// `H(x,t) = s(1−t) ∘ x`: centers and radii scale by `1−t`.
    ShrinkLeft,
    /// `H(x,t) = x ∘ s(1−t)`: radii scale by `1−t`, centers stay.
    ShrinkRight,
    /// The right shrink applied per tensor factor, `x∘((1−t)id ⊗ (1−t)id)`;
    /// the same action on images, kept separate for product-domain use.
    ShrinkRightProduct,
}

/// The constraint that pins the entry time.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct BindingConstraint {
    pub kind: FlowKind,
    pub group_element: String,
    pub i: usize,
    pub j: Option<usize>,
    pub block: usize,
}

#[derive(Debug, Clone)]
pub struct EntryTimeReport {
    pub t: Scalar,
    /// Absent when the configuration is already in the target at `t = 0`.
    pub binding: Option<BindingConstraint>,
    pub target: String,
}

/// Apply a shrink flow at time `t ∈ [0, 1)`.
pub fn flow_apply(x: &Config, kind: FlowKind, t: &Scalar) -> Result<Config, Error> {
    let tf = t.to_f64();
    if !(0.0..1.0).contains(&tf) {
        return Err(Error::FlowRange(tf));
    }
    let factor = Scalar::one(t.mode()).sub(t);
    Ok(match kind {
        FlowKind::ShrinkLeft => x.scaled_left(&factor),
        FlowKind::ShrinkRight | FlowKind::ShrinkRightProduct => x.scaled_right(&factor),
    })
}

/// Does the flowed configuration sit in the target pair? For the left flow:
/// every conjugated image of `inner` is inside `inner` (disjointness over
/// `outer` is inherited). For the right flows: pairwise disjointness of the
/// conjugated images of `outer` (containment in `outer` is inherited).
pub fn in_target(
    x: &Config,
    kind: FlowKind,
    inner: &ProductBall,
    outer: &ProductBall,
    params: &Params,
) -> bool {
    let tol = params.tol;
    let group = x.group().clone();
    match kind {
        FlowKind::ShrinkLeft => (0..group.order()).all(|g| {
            x.maps().iter().all(|m| {
                let img = group.conjugate(g, m).image(inner);
                ball_relations(&img, inner, tol).contains
            })
        }),
        FlowKind::ShrinkRight | FlowKind::ShrinkRightProduct => (0..group.order()).all(|g| {
            let images: Vec<ProductBall> = x
                .maps()
                .iter()
                .map(|m| group.conjugate(g, m).image(outer))
                .collect();
            (0..images.len()).all(|i| {
                (i + 1..images.len())
                    .all(|j| ball_relations(&images[i], &images[j], tol).disjoint)
            })
        }),
    }
}

fn require_origin_centered(ball: &ProductBall, what: &str) -> Result<(), Error> {
    let centered = ball
        .centers()
        .iter()
        .all(|c| c.iter().all(Scalar::is_zero));
    if centered {
        Ok(())
    } else {
        Err(Error::FlowPrecondition(format!(
            "{} ball must be centered at the origin",
            what
        )))
    }
}

/// Closed-form minimal entry time into the pair `(inner, outer)`.
///
/// Left flow: per group element, component and block, `t ≥ 1 − ε/(‖c‖ + r)`
/// where `(c, r)` is the image of `inner` and `ε` its radius. Right flow:
/// per group element, component pair and block, `t ≥ 1 − ‖Δc‖/(r_i + r_j)`
/// over images of `outer`, where the best (most separated) block counts.
/// In exact mode the norms must be perfect rational squares; otherwise the
/// exact entry time is irrational and an error is returned.
pub fn entry_time(
    x: &Config,
    kind: FlowKind,
    inner: &ProductBall,
    outer: &ProductBall,
    params: &Params,
) -> Result<EntryTimeReport, Error> {
    let tol = params.tol;
    if !ball_relations(inner, outer, tol).contains {
        return Err(Error::FlowPrecondition(
            "target needs inner ⊆ outer".into(),
        ));
    }
    require_origin_centered(inner, "inner")?;
    require_origin_centered(outer, "outer")?;
    let base = match kind {
        FlowKind::ShrinkLeft => outer,
        _ => inner,
    };
    if !x.domain().eq_tol(base, tol) {
        return Err(Error::FlowPrecondition(format!(
            "configuration domain must be the {} ball",
            match kind {
                FlowKind::ShrinkLeft => "outer",
                _ => "inner",
            }
        )));
    }
    if !is_valid(x, MembershipLevel::Star, params) {
        return Err(Error::FlowPrecondition("configuration is not star-valid".into()));
    }

    let mode = x.mode();
    let group = x.group().clone();
    let zero = Scalar::zero(mode);
    let one = Scalar::one(mode);
    let mut best_t = zero.clone();
    let mut binding: Option<BindingConstraint> = None;

    match kind {
        FlowKind::ShrinkLeft => {
            for g in 0..group.order() {
                for (i, m) in x.maps().iter().enumerate() {
                    let img = group.conjugate(g, m).image(inner);
                    for (block, (c, r)) in
                        img.centers().iter().zip(img.radii()).enumerate()
                    {
                        let reach = norm2(c).sqrt()?.add(r);
                        let eps = &inner.radii()[block];
                        // Constraint satisfied at t=0 already?
                        let bound = one.sub(&eps.div(&reach));
                        if bound.cmp_strict(&best_t) == Ordering::Greater {
                            best_t = bound;
                            binding = Some(BindingConstraint {
                                kind,
                                group_element: group.elements()[g].clone(),
                                i,
                                j: None,
                                block,
                            });
                        }
                    }
                }
            }
        }
        FlowKind::ShrinkRight | FlowKind::ShrinkRightProduct => {
            for g in 0..group.order() {
                let images: Vec<ProductBall> = x
                    .maps()
                    .iter()
                    .map(|m| group.conjugate(g, m).image(outer))
                    .collect();
                for i in 0..images.len() {
                    for j in (i + 1)..images.len() {
                        // The pair separates at the best block.
                        let mut pair_bound: Option<(Scalar, usize)> = None;
                        for block in 0..outer.structure().coarse_count() {
                            let ci = &images[i].centers()[block];
                            let cj = &images[j].centers()[block];
                            let delta = crate::scalar::vec_sub(ci, cj);
                            let dist = norm2(&delta).sqrt()?;
                            let rsum = images[i].radii()[block].add(&images[j].radii()[block]);
                            let bound = one.sub(&dist.div(&rsum));
                            let better = match &pair_bound {
                                None => true,
                                Some((old, _)) => bound.cmp_strict(old) == Ordering::Less,
                            };
                            if better {
                                pair_bound = Some((bound, block));
                            }
                        }
                        let (bound, block) =
                            pair_bound.expect("at least one coarse block");
                        if bound.cmp_strict(&best_t) == Ordering::Greater {
                            best_t = bound;
                            binding = Some(BindingConstraint {
                                kind,
                                group_element: group.elements()[g].clone(),
                                i,
                                j: Some(j),
                                block,
                            });
                        }
                    }
                }
            }
        }
    }
    // Clamp at zero: already inside the target.
    if best_t.cmp_strict(&zero) != Ordering::Greater {
        best_t = zero;
        binding = None;
    }
    let report = EntryTimeReport {
        t: best_t.clone(),
        binding,
        target: format!(
            "pair (B inner r={:?}, B' outer r={:?})",
            inner.radii()[0],
            outer.radii()[0]
        ),
    };
    // The flow at t is in the target, and stays there for larger times
    // (checked at the midpoint toward 1).
    let flowed = flow_apply(x, kind, &report.t)?;
    if !in_target(&flowed, kind, inner, outer, params) {
        return Err(Error::Invalid(
            "entry time failed its own feasibility check".into(),
        ));
    }
    let later = report.t.add(&one).div(&Scalar::from_int(2, mode));
    let flowed_later = flow_apply(x, kind, &later)?;
    if !in_target(&flowed_later, kind, inner, outer, params) {
        return Err(Error::Invalid(
            "entry time failed the monotonicity check".into(),
        ));
    }
    Ok(report)
}

/// Per-component spherical retraction: right-composing with
/// `λ_b = (min_b′ scale_b′)/scale_b` lands every component in the
/// equal-scale (spherical) subgroup.
pub fn spherical_rescale(x: &Config) -> (Vec<Vec<Scalar>>, Config) {
    let mut lambdas = Vec::with_capacity(x.arity());
    let mut maps = Vec::with_capacity(x.arity());
    for m in x.maps() {
        let min = m
            .scales()
            .iter()
            .min_by(|a, b| a.cmp_strict(b))
            .expect("at least one coarse block")
            .clone();
        let lambda: Vec<Scalar> = m.scales().iter().map(|s| min.div(s)).collect();
        // Right composition feeds the factor of source block b into target
        // block π(b), so pre-permute λ (indexed by target blocks) through π.
        let perm = m.coarse_perm();
        let factors: Vec<Scalar> = (0..lambda.len()).map(|b| lambda[perm[b]].clone()).collect();
        maps.push(m.scaled_right_per_block(&factors));
        lambdas.push(lambda);
    }
    let retracted = Config::new(maps, x.domain().clone(), x.group().clone())
        .expect("rescaled maps share the structure");
    (lambdas, retracted)
}

/// Does `w` factor through the shrink by `factor`? Star validity of the
/// configuration enlarged by `1/factor`.
pub fn shrunk_membership(w: &Config, factor: &Scalar, params: &Params) -> bool {
    if !factor.is_positive() || !factor.le(&Scalar::one(factor.mode()), 0.0) {
        return false;
    }
    let enlarged = w.scaled_right(&factor.recip());
    is_valid(&enlarged, MembershipLevel::Star, params)
}

/// Search the window `(1 − shrink, 1)` for the first geometric grid point
/// where the flowed evaluation is both in the shrunk class and critical.
/// Steps halve `1 − t`; the step cap bounds the search.
pub fn core_entry_time(
    tree: &SuperTree,
    params: &Params,
) -> Result<(Scalar, CriticalWitness), Error> {
    let w = crate::trees::tree_evaluate(tree, params)?;
    if !is_valid(&w, MembershipLevel::Star, params) {
        return Err(Error::NotStarValid);
    }
    let v_blocks = tree.domain_v().structure().coarse_count();
    let mode = w.mode();
    let one = Scalar::one(mode);
    let two = Scalar::from_int(2, mode);
    let shrink = params.shrink_scalar(mode);
    let mut gap = shrink.clone(); // 1 − t
    let mut last_t = 0.0;
    for _ in 0..params.step_cap {
        let t = one.sub(&gap);
        last_t = t.to_f64();
        let flowed = flow_apply(&w, FlowKind::ShrinkRightProduct, &t)?;
        let in_class = shrunk_membership(&flowed, &shrink, params);
        if in_class {
            match criticality(&flowed, v_blocks, params) {
                Ok(witness) => return Ok((t, witness)),
                Err(Error::ExactCertificateUnsupported(msg)) => {
                    return Err(Error::ExactCertificateUnsupported(msg))
                }
                Err(_) => {}
            }
        }
        gap = gap.div(&two);
    }
    Err(Error::StepCapExhausted { last_t })
}

/// Numeric mode helper mirrored here for harness use.
pub fn one_minus(t: &Scalar) -> Scalar {
    Scalar::one(t.mode()).sub(t)
}
