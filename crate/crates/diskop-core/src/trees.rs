//! Trees in superposition: representatives of tensor elements.
//!
//! Each vertex carries white and black incoming-edge labels, a bijection ξ
//! from label pairs to incoming edge slots, and a decoration pair: a
//! configuration over the first factor domain with arity `white`, and one
//! over the second factor domain with arity `black`. Evaluation sends a tree
//! to a configuration over the product domain; the simple tensor `p ⊗ q` at a
//! vertex evaluates to the tuple of block products `p_i × q_j` in the
//! lexicographic pair order.

use crate::ball::ProductBall;
use crate::config::{Config, Perm};
use crate::dilation::DilationMap;
use crate::error::Error;
use crate::group::GroupRep;
use crate::params::Params;
use std::sync::Arc;

/// Where an incoming edge slot leads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeTarget {
    /// A tree input carrying its global input index.
    Input(usize),
    /// An internal vertex (index into the vertex list).
    Child(usize),
}

#[derive(Debug, Clone)]
pub struct TreeVertex {
    pub white: usize,
    pub black: usize,
    /// Lexicographic pair index `(i, j) ↦ i·black + j` to incoming edge slot.
    pub xi: Vec<usize>,
    /// Incoming edge slots.
    pub edges: Vec<EdgeTarget>,
    /// Decoration over the first factor, arity `white`.
    pub p: Config,
    /// Decoration over the second factor, arity `black`.
    pub q: Config,
}

#[derive(Debug, Clone)]
pub struct SuperTree {
    pub vertices: Vec<TreeVertex>,
    pub root: usize,
    pub inputs: usize,
}

/// Validation flags for a tree in superposition.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct TreeFlags {
    pub well_formed: bool,
    pub reduced: bool,
    pub proper: bool,
    pub core: bool,
    pub issues: Vec<String>,
}

impl SuperTree {
    /// The corolla: a single vertex whose edges are all tree inputs in
    /// lexicographic order.
    pub fn corolla(p: Config, q: Config) -> SuperTree {
        let w = p.arity();
        let b = q.arity();
        let edges = (0..w * b).map(EdgeTarget::Input).collect();
        SuperTree {
            vertices: vec![TreeVertex {
                white: w,
                black: b,
                xi: (0..w * b).collect(),
                edges,
                p,
                q,
            }],
            root: 0,
            inputs: w * b,
        }
    }

    pub fn root_vertex(&self) -> &TreeVertex {
        &self.vertices[self.root]
    }

    pub fn domain_v(&self) -> &ProductBall {
        self.root_vertex().p.domain()
    }

    pub fn domain_w(&self) -> &ProductBall {
        self.root_vertex().q.domain()
    }

    /// Height in vertices along the longest root-to-leaf path.
    pub fn height(&self) -> usize {
        fn depth(tree: &SuperTree, v: usize) -> usize {
            1 + tree.vertices[v]
                .edges
                .iter()
                .map(|e| match e {
                    EdgeTarget::Input(_) => 0,
                    EdgeTarget::Child(c) => depth(tree, *c),
                })
                .max()
                .unwrap_or(0)
        }
        depth(self, self.root)
    }
}

/// Structural validation and the reduced/proper/core predicates.
pub fn tree_validate(tree: &SuperTree, params: &Params) -> TreeFlags {
    let mut issues = Vec::new();
    let n = tree.vertices.len();
    if tree.root >= n {
        issues.push("root index out of range".into());
        return TreeFlags {
            well_formed: false,
            reduced: false,
            proper: false,
            core: false,
            issues,
        };
    }
    // Every vertex except the root must be referenced exactly once.
    let mut referenced = vec![0usize; n];
    let mut seen_inputs = vec![false; tree.inputs];
    for (vi, v) in tree.vertices.iter().enumerate() {
        if v.edges.len() != v.white * v.black {
            issues.push(format!(
                "vertex {}: {} edge slots for {}×{} labels",
                vi,
                v.edges.len(),
                v.white,
                v.black
            ));
        }
        if v.p.arity() != v.white || v.q.arity() != v.black {
            issues.push(format!(
                "vertex {}: decoration arities ({}, {}) do not match labels ({}, {})",
                vi,
                v.p.arity(),
                v.q.arity(),
                v.white,
                v.black
            ));
        }
        // ξ must be a bijection onto the edge slots.
        let mut hit = vec![false; v.edges.len()];
        if v.xi.len() != v.edges.len() {
            issues.push(format!("vertex {}: ξ has wrong length", vi));
        } else {
            for &slot in &v.xi {
                if slot >= hit.len() || hit[slot] {
                    issues.push(format!("vertex {}: ξ is not a bijection", vi));
                    break;
                }
                hit[slot] = true;
            }
        }
        if !v.p.domain().eq_tol(tree.domain_v(), params.tol)
            || !v.q.domain().eq_tol(tree.domain_w(), params.tol)
        {
            issues.push(format!("vertex {}: decoration domain mismatch", vi));
        }
        for e in &v.edges {
            match e {
                EdgeTarget::Input(k) => {
                    if *k >= tree.inputs {
                        issues.push(format!("vertex {}: input {} out of range", vi, k));
                    } else if seen_inputs[*k] {
                        issues.push(format!("input {} appears twice", k));
                    } else {
                        seen_inputs[*k] = true;
                    }
                }
                EdgeTarget::Child(c) => {
                    if *c >= n {
                        issues.push(format!("vertex {}: child {} out of range", vi, c));
                    } else {
                        referenced[*c] += 1;
                    }
                }
            }
        }
    }
    if referenced[tree.root] != 0 {
        issues.push("root has an incoming edge".into());
    }
    for (vi, &r) in referenced.iter().enumerate() {
        if vi != tree.root && r != 1 {
            issues.push(format!("vertex {} referenced {} times", vi, r));
        }
    }
    if let Some(k) = seen_inputs.iter().position(|&s| !s) {
        issues.push(format!("input {} never used", k));
    }
    // Reachability from the root (cycles or orphans already show up above,
    // but check anyway).
    let mut reach = vec![false; n];
    let mut stack = vec![tree.root];
    while let Some(v) = stack.pop() {
        if reach[v] {
            continue;
        }
        reach[v] = true;
        for e in &tree.vertices[v].edges {
            if let EdgeTarget::Child(c) = e {
                if *c < n {
                    stack.push(*c);
                }
            }
        }
    }
    if reach.iter().any(|&r| !r) {
        issues.push("unreachable vertex".into());
    }

    let well_formed = issues.is_empty();
    if !well_formed {
        return TreeFlags {
            well_formed,
            reduced: false,
            proper: false,
            core: false,
            issues,
        };
    }

    let is_stump = |v: &TreeVertex| v.white * v.black == 0;
    // Reduced: at every non-stump vertex, every white label has a black
    // partner whose edge is a tree input or leads to a non-stump vertex;
    // symmetrically for black labels.
    let mut reduced = true;
    'outer: for v in &tree.vertices {
        if is_stump(v) {
            continue;
        }
        let alive = |i: usize, j: usize| -> bool {
            match v.edges[v.xi[i * v.black + j]] {
                EdgeTarget::Input(_) => true,
                EdgeTarget::Child(c) => !is_stump(&tree.vertices[c]),
            }
        };
        for i in 0..v.white {
            if !(0..v.black).any(|j| alive(i, j)) {
                reduced = false;
                break 'outer;
            }
        }
        for j in 0..v.black {
            if !(0..v.white).any(|i| alive(i, j)) {
                reduced = false;
                break 'outer;
            }
        }
    }
    // Proper: reduced, and a vertex with exactly one incoming edge only has
    // it as a tree input.
    let proper = reduced
        && tree.vertices.iter().all(|v| {
            v.edges.len() != 1 || matches!(v.edges[0], EdgeTarget::Input(_))
        });
    let core = proper && tree.height() <= 2;
    TreeFlags {
        well_formed,
        reduced,
        proper,
        core,
        issues,
    }
}

/// The product group of the decorations' groups, diagonal on the product
/// structure.
fn product_group(tree: &SuperTree) -> Result<Arc<GroupRep>, Error> {
    let gv = tree.root_vertex().p.group();
    let gw = tree.root_vertex().q.group();
    GroupRep::product(gv, gw)
}

/// Evaluate a tree into a configuration over the product domain. The
/// component at input `k` is the composite of the block products `p_i × q_j`
/// along the path from the root to input `k`.
pub fn tree_evaluate(tree: &SuperTree, params: &Params) -> Result<Config, Error> {
    let flags = tree_validate(tree, params);
    if !flags.well_formed {
        return Err(Error::Tree(flags.issues.join("; ")));
    }
    let domain = ProductBall::product(tree.domain_v(), tree.domain_w());
    let group = product_group(tree)?;
    let mut slots: Vec<Option<DilationMap>> = vec![None; tree.inputs];
    collect_components(tree, tree.root, None, &mut slots)?;
    let maps = slots
        .into_iter()
        .enumerate()
        .map(|(k, m)| m.ok_or_else(|| Error::Tree(format!("input {} unassigned", k))))
        .collect::<Result<Vec<_>, _>>()?;
    Config::new(maps, domain, group)
}

fn collect_components(
    tree: &SuperTree,
    vertex: usize,
    prefix: Option<&DilationMap>,
    slots: &mut Vec<Option<DilationMap>>,
) -> Result<(), Error> {
    let v = &tree.vertices[vertex];
    for i in 0..v.white {
        for j in 0..v.black {
            let base = DilationMap::product(v.p.map(i), v.q.map(j));
            let composed = match prefix {
                Some(pre) => pre.compose(&base),
                None => base,
            };
            match v.edges[v.xi[i * v.black + j]] {
                EdgeTarget::Input(k) => {
                    slots[k] = Some(composed);
                }
                EdgeTarget::Child(c) => {
                    collect_components(tree, c, Some(&composed), slots)?;
                }
            }
        }
    }
    Ok(())
}

/// Image equality of two trees: equal arities and componentwise equal
/// evaluations. Equality in the tensor itself is certified only through the
/// additive-core normal form.
pub fn interchange_equal(t1: &SuperTree, t2: &SuperTree, params: &Params) -> Result<bool, Error> {
    if t1.inputs != t2.inputs {
        return Err(Error::Arity(format!(
            "trees with {} and {} inputs",
            t1.inputs, t2.inputs
        )));
    }
    let a = tree_evaluate(t1, params)?;
    let b = tree_evaluate(t2, params)?;
    Ok(a.eq_tol(&b, params.tol))
}

/// The unary isomorphism: a pair of unary configurations becomes the corolla
/// whose evaluation is their block product.
pub fn unary_iso(p_bar: &Config, q_bar: &Config) -> Result<SuperTree, Error> {
    if p_bar.arity() != 1 || q_bar.arity() != 1 {
        return Err(Error::Arity(
            "unary isomorphism needs arity-1 configurations".into(),
        ));
    }
    Ok(SuperTree::corolla(p_bar.clone(), q_bar.clone()))
}

/// Inverse direction: evaluate a unary tree and split the single component
/// back into its factors.
pub fn unary_iso_inverse(tree: &SuperTree, params: &Params) -> Result<(Config, Config), Error> {
    if tree.inputs != 1 {
        return Err(Error::Arity("unary isomorphism needs a unary tree".into()));
    }
    let evaluated = tree_evaluate(tree, params)?;
    let v_blocks = tree.domain_v().structure().coarse_count();
    let total = evaluated.domain().structure().coarse_count();
    let m = evaluated.map(0);
    let p = m.restrict_coarse(0..v_blocks)?;
    let q = m.restrict_coarse(v_blocks..total)?;
    let gv = tree.root_vertex().p.group().clone();
    let gw = tree.root_vertex().q.group().clone();
    Ok((
        Config::new(vec![p], tree.domain_v().clone(), gv)?,
        Config::new(vec![q], tree.domain_w().clone(), gw)?,
    ))
}

/// The two expansions of a vertex's simple tensor through the interchange
/// relation. `White` splits `p ⊗ q` into `(p ⊗ id) ∘ (id ⊗ q)_i`; `Black`
/// into `(id ⊗ q) ∘ (p ⊗ id)_j`. Both leave the evaluation unchanged.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExpansionSide {
    White,
    Black,
}

pub fn interchange_expand(
    tree: &SuperTree,
    vertex: usize,
    side: ExpansionSide,
) -> Result<SuperTree, Error> {
    if vertex >= tree.vertices.len() {
        return Err(Error::IndexRange(format!("vertex {} out of range", vertex)));
    }
    let mut out = tree.clone();
    let v = tree.vertices[vertex].clone();
    let id_p = Config::identity(v.p.domain().clone(), v.p.group().clone());
    let id_q = Config::identity(v.q.domain().clone(), v.q.group().clone());
    match side {
        ExpansionSide::White => {
            // Root becomes (white, 1) decorated (p, id); child i is (1, black)
            // decorated (id, q) and receives the original (i, ·) edges.
            let mut child_indices = Vec::with_capacity(v.white);
            for i in 0..v.white {
                let edges = (0..v.black)
                    .map(|j| v.edges[v.xi[i * v.black + j]])
                    .collect();
                out.vertices.push(TreeVertex {
                    white: 1,
                    black: v.black,
                    xi: (0..v.black).collect(),
                    edges,
                    p: id_p.clone(),
                    q: v.q.clone(),
                });
                child_indices.push(out.vertices.len() - 1);
            }
            out.vertices[vertex] = TreeVertex {
                white: v.white,
                black: 1,
                xi: (0..v.white).collect(),
                edges: child_indices.into_iter().map(EdgeTarget::Child).collect(),
                p: v.p.clone(),
                q: id_q,
            };
        }
        ExpansionSide::Black => {
            let mut child_indices = Vec::with_capacity(v.black);
            for j in 0..v.black {
                let edges = (0..v.white)
                    .map(|i| v.edges[v.xi[i * v.black + j]])
                    .collect();
                out.vertices.push(TreeVertex {
                    white: v.white,
                    black: 1,
                    xi: (0..v.white).collect(),
                    edges,
                    p: v.p.clone(),
                    q: id_q.clone(),
                });
                child_indices.push(out.vertices.len() - 1);
            }
            out.vertices[vertex] = TreeVertex {
                white: 1,
                black: v.black,
                xi: (0..v.black).collect(),
                edges: child_indices.into_iter().map(EdgeTarget::Child).collect(),
                p: id_p,
                q: v.q.clone(),
            };
        }
    }
    Ok(out)
}

/// Relabel a tree by fresh white/black label orders and a ξ shuffle at one
/// vertex (an isomorphism of trees in superposition). The decorations are
/// permuted accordingly, so the evaluation changes only by the induced input
/// permutation — with global input indices it does not change at all.
pub fn relabel_vertex(
    tree: &SuperTree,
    vertex: usize,
    white_perm: &Perm,
    black_perm: &Perm,
    params: &Params,
) -> Result<SuperTree, Error> {
    let mut out = tree.clone();
    let v = &tree.vertices[vertex];
    if white_perm.len() != v.white || black_perm.len() != v.black {
        return Err(Error::Arity("relabeling permutation length mismatch".into()));
    }
    // New decorations: position i' holds the old component at
    // white_perm⁻¹(i').
    let p = v.p.act(white_perm, v.p.group().identity(), params)?;
    let q = v.q.act(black_perm, v.q.group().identity(), params)?;
    // Edge for the new pair (i', j') is the old edge of (i, j).
    let mut xi = vec![0usize; v.white * v.black];
    for i in 0..v.white {
        for j in 0..v.black {
            let ni = white_perm.apply(i);
            let nj = black_perm.apply(j);
            xi[ni * v.black + nj] = v.xi[i * v.black + j];
        }
    }
    out.vertices[vertex] = TreeVertex {
        white: v.white,
        black: v.black,
        xi,
        edges: v.edges.clone(),
        p,
        q,
    };
    Ok(out)
}

/// Random well-formed tree of bounded height over the two factor contexts,
/// with star-valid decorations and a random assignment of global input
/// indices.
pub fn random_tree(
    rng: &mut rand_chacha::ChaCha8Rng,
    ctx_v: &crate::gen::GenContext,
    ctx_w: &crate::gen::GenContext,
    max_height: usize,
    params: &Params,
) -> Result<SuperTree, crate::gen::Starvation> {
    let mut vertices = Vec::new();
    let mut leaf_slots: Vec<(usize, usize)> = Vec::new();
    build_random_vertex(rng, ctx_v, ctx_w, max_height, params, &mut vertices, &mut leaf_slots)?;
    // Assign global input indices by a random permutation of the leaves.
    let perm = crate::gen::random_perm(rng, leaf_slots.len());
    for (pos, &(v, slot)) in leaf_slots.iter().enumerate() {
        vertices[v].edges[slot] = EdgeTarget::Input(perm.apply(pos));
    }
    Ok(SuperTree {
        root: 0,
        inputs: leaf_slots.len(),
        vertices,
    })
}

fn build_random_vertex(
    rng: &mut rand_chacha::ChaCha8Rng,
    ctx_v: &crate::gen::GenContext,
    ctx_w: &crate::gen::GenContext,
    height_left: usize,
    params: &Params,
    vertices: &mut Vec<TreeVertex>,
    leaf_slots: &mut Vec<(usize, usize)>,
) -> Result<usize, crate::gen::Starvation> {
    use crate::config::MembershipLevel;
    use rand::Rng;
    let white = rng.gen_range(1..=2usize);
    let black = rng.gen_range(1..=2usize);
    let p = crate::gen::random_config(rng, ctx_v, white, MembershipLevel::Star, params)?;
    let q = crate::gen::random_config(rng, ctx_w, black, MembershipLevel::Star, params)?;
    let index = vertices.len();
    vertices.push(TreeVertex {
        white,
        black,
        xi: (0..white * black).collect(),
        edges: vec![EdgeTarget::Input(usize::MAX); white * black],
        p,
        q,
    });
    // Shuffle ξ.
    let xi_perm = crate::gen::random_perm(rng, white * black);
    vertices[index].xi = (0..white * black).map(|t| xi_perm.apply(t)).collect();
    for slot in 0..white * black {
        let descend = height_left > 1 && rng.gen_bool(0.4);
        if descend {
            let child = build_random_vertex(
                rng,
                ctx_v,
                ctx_w,
                height_left - 1,
                params,
                vertices,
                leaf_slots,
            )?;
            vertices[index].edges[slot] = EdgeTarget::Child(child);
        } else {
            leaf_slots.push((index, slot));
        }
    }
    Ok(index)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::is_valid;
    use crate::config::MembershipLevel;
    use crate::gen::{trial_rng, GenContext};
    use crate::scalar::{NumericMode, Scalar};

    fn exact(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q, NumericMode::Exact)
    }

    fn ctxs() -> (GenContext, GenContext) {
        (
            GenContext::plane(NumericMode::Exact),
            GenContext::line(NumericMode::Exact),
        )
    }

    fn two_disk_p(ctx: &GenContext) -> Config {
        let s = ctx.domain.structure().clone();
        let mk = |tx: (i64, i64)| {
            DilationMap::scale_translate(
                s.clone(),
                vec![exact(3, 10)],
                vec![exact(tx.0, tx.1), exact(0, 1)],
            )
            .unwrap()
        };
        Config::new(vec![mk((-1, 2)), mk((1, 2))], ctx.domain.clone(), ctx.group.clone()).unwrap()
    }

    fn one_disk_q(ctx: &GenContext) -> Config {
        let s = ctx.domain.structure().clone();
        let m = DilationMap::scale_translate(s, vec![exact(1, 2)], vec![exact(0, 1)]).unwrap();
        Config::new(vec![m], ctx.domain.clone(), ctx.group.clone()).unwrap()
    }

    #[test]
    fn corolla_is_core() {
        let (cv, cw) = ctxs();
        let t = SuperTree::corolla(two_disk_p(&cv), one_disk_q(&cw));
        let flags = tree_validate(&t, &Params::default());
        assert!(flags.well_formed && flags.reduced && flags.proper && flags.core);
    }

    #[test]
    fn corolla_evaluates_to_block_products() {
        let (cv, cw) = ctxs();
        let p = two_disk_p(&cv);
        let q = one_disk_q(&cw);
        let t = SuperTree::corolla(p.clone(), q.clone());
        let evaluated = tree_evaluate(&t, &Params::default()).unwrap();
        assert_eq!(evaluated.arity(), 2);
        for (k, m) in evaluated.maps().iter().enumerate() {
            assert_eq!(m.scales()[0], exact(3, 10));
            assert_eq!(m.scales()[1], exact(1, 2));
            assert_eq!(m.translation()[0], p.map(k).translation()[0]);
            assert_eq!(m.translation()[2], q.map(0).translation()[0]);
        }
        assert!(is_valid(&evaluated, MembershipLevel::Star, &Params::default()));
    }

    #[test]
    fn identity_decorations_evaluate_to_identity_factors() {
        let (cv, cw) = ctxs();
        let p = two_disk_p(&cv);
        let id_q = Config::identity(cw.domain.clone(), cw.group.clone());
        let t = SuperTree::corolla(p.clone(), id_q);
        let evaluated = tree_evaluate(&t, &Params::default()).unwrap();
        for (k, m) in evaluated.maps().iter().enumerate() {
            assert_eq!(m.scales()[0], exact(3, 10));
            assert_eq!(m.scales()[1], exact(1, 1));
            assert_eq!(m.translation()[0], p.map(k).translation()[0]);
            assert!(m.translation()[2].is_zero());
        }
    }

    #[test]
    fn stump_children_drop_slots() {
        let (cv, cw) = ctxs();
        let p = two_disk_p(&cv);
        let q = one_disk_q(&cw);
        let mut t = SuperTree::corolla(p, q);
        // Replace input 1 with a stump: (0,0) vertex, decorations nullary.
        let stump = TreeVertex {
            white: 0,
            black: 0,
            xi: vec![],
            edges: vec![],
            p: Config::nullary(cv.domain.clone(), cv.group.clone()),
            q: Config::nullary(cw.domain.clone(), cw.group.clone()),
        };
        t.vertices.push(stump);
        t.vertices[0].edges[1] = EdgeTarget::Child(1);
        t.inputs = 1;
        // Input index 1 is gone; renumber remaining input 0.
        let flags = tree_validate(&t, &Params::default());
        assert!(flags.well_formed, "{:?}", flags.issues);
        assert!(!flags.reduced, "white label 1 has only a stump partner");
        let evaluated = tree_evaluate(&t, &Params::default()).unwrap();
        assert_eq!(evaluated.arity(), 1);
    }

    #[test]
    fn height_three_tree_is_not_core() {
        let (cv, cw) = ctxs();
        let params = Params::default();
        let mut rng = trial_rng(7, "trees-height", 0);
        loop {
            let t = random_tree(&mut rng, &cv, &cw, 3, &params).unwrap();
            if t.height() == 3 {
                let flags = tree_validate(&t, &params);
                assert!(flags.well_formed);
                assert!(!flags.core);
                break;
            }
        }
    }

    #[test]
    fn interchange_expansions_preserve_evaluation() {
        let (cv, cw) = ctxs();
        let params = Params::default();
        for trial in 0..20 {
            let mut rng = trial_rng(11, "trees-interchange", trial);
            let t = random_tree(&mut rng, &cv, &cw, 3, &params).unwrap();
            let base = tree_evaluate(&t, &params).unwrap();
            for v in 0..t.vertices.len() {
                for side in [ExpansionSide::White, ExpansionSide::Black] {
                    let expanded = interchange_expand(&t, v, side).unwrap();
                    let flags = tree_validate(&expanded, &params);
                    assert!(flags.well_formed, "{:?}", flags.issues);
                    let value = tree_evaluate(&expanded, &params).unwrap();
                    assert!(value.eq_tol(&base, 0.0), "expansion changed the value");
                }
            }
        }
    }

    #[test]
    fn interchange_equal_on_swapped_corollas() {
        // τ-permuted corolla pair: p ⊗ q against q ⊗ p with the transposing
        // input indexing.
        let (cv, cw) = ctxs();
        let params = Params::default();
        let p = two_disk_p(&cv);
        let q = {
            let s = cw.domain.structure().clone();
            let mk = |tx: (i64, i64)| {
                DilationMap::scale_translate(s.clone(), vec![exact(1, 5)], vec![exact(tx.0, tx.1)])
                    .unwrap()
            };
            Config::new(vec![mk((-1, 2)), mk((1, 2))], cw.domain.clone(), cw.group.clone()).unwrap()
        };
        let t1 = SuperTree::corolla(p.clone(), q.clone());
        // The swapped tree: evaluate q ⊗ p on the W×V product... the factors
        // must stay in the same order for a comparable evaluation, so encode
        // the swap as the same corolla with transposed ξ and inputs.
        let mut t2 = SuperTree::corolla(p.clone(), q.clone());
        // Transpose input indexing: pair (i, j) gets input j*2 + i.
        for i in 0..2 {
            for j in 0..2 {
                t2.vertices[0].edges[i * 2 + j] = EdgeTarget::Input(j * 2 + i);
            }
        }
        // The evaluations differ by exactly the transposition permutation of
        // components, which is what τ tracks; as configs they are not equal
        // unless compared after acting.
        let e1 = tree_evaluate(&t1, &params).unwrap();
        let e2 = tree_evaluate(&t2, &params).unwrap();
        let tau = Perm::new(vec![0, 2, 1, 3]).unwrap();
        let e2_tau = e2.act(&tau, e2.group().identity(), &params).unwrap();
        assert!(e1.eq_tol(&e2_tau, 0.0));
        assert!(interchange_equal(&t1, &t1, &params).unwrap());
        assert!(!interchange_equal(&t1, &t2, &params).unwrap());
    }

    #[test]
    fn unary_iso_round_trip() {
        let (cv, cw) = ctxs();
        let params = Params::default();
        let p = {
            let s = cv.domain.structure().clone();
            Config::new(
                vec![DilationMap::scale_translate(
                    s,
                    vec![exact(1, 2)],
                    vec![exact(1, 5), exact(0, 1)],
                )
                .unwrap()],
                cv.domain.clone(),
                cv.group.clone(),
            )
            .unwrap()
        };
        let q = one_disk_q(&cw);
        let t = unary_iso(&p, &q).unwrap();
        let evaluated = tree_evaluate(&t, &params).unwrap();
        assert_eq!(evaluated.arity(), 1);
        assert_eq!(evaluated.map(0).scales(), &[exact(1, 2), exact(1, 2)][..]);
        let (p2, q2) = unary_iso_inverse(&t, &params).unwrap();
        assert!(p2.eq_tol(&p, 0.0));
        assert!(q2.eq_tol(&q, 0.0));
        // Identity pair gives the unit tree.
        let id_p = Config::identity(cv.domain.clone(), cv.group.clone());
        let id_q = Config::identity(cw.domain.clone(), cw.group.clone());
        let unit = unary_iso(&id_p, &id_q).unwrap();
        let ev = tree_evaluate(&unit, &params).unwrap();
        assert!(ev.map(0).is_identity(0.0));
    }

    #[test]
    fn vertex_reindexing_preserves_evaluation() {
        // Tree isomorphisms that merely renumber the vertex list (with child
        // references rebuilt) evaluate identically.
        let (cv, cw) = ctxs();
        let params = Params::default();
        for trial in 0..10 {
            let mut rng = trial_rng(17, "trees-reindex", trial);
            let t = random_tree(&mut rng, &cv, &cw, 3, &params).unwrap();
            let n = t.vertices.len();
            let perm = crate::gen::random_perm(&mut rng, n);
            let mut vertices: Vec<Option<TreeVertex>> = vec![None; n];
            for (old, v) in t.vertices.iter().enumerate() {
                let mut v = v.clone();
                for e in v.edges.iter_mut() {
                    if let EdgeTarget::Child(c) = e {
                        *c = perm.apply(*c);
                    }
                }
                vertices[perm.apply(old)] = Some(v);
            }
            let reindexed = SuperTree {
                vertices: vertices.into_iter().map(Option::unwrap).collect(),
                root: perm.apply(t.root),
                inputs: t.inputs,
            };
            let flags = tree_validate(&reindexed, &params);
            assert!(flags.well_formed, "{:?}", flags.issues);
            let a = tree_evaluate(&t, &params).unwrap();
            let b = tree_evaluate(&reindexed, &params).unwrap();
            assert!(a.eq_tol(&b, 0.0));
        }
    }

    #[test]
    fn relabeling_preserves_evaluation() {
        let (cv, cw) = ctxs();
        let params = Params::default();
        for trial in 0..10 {
            let mut rng = trial_rng(13, "trees-relabel", trial);
            let t = random_tree(&mut rng, &cv, &cw, 2, &params).unwrap();
            let base = tree_evaluate(&t, &params).unwrap();
            for v in 0..t.vertices.len() {
                let wp = crate::gen::random_perm(&mut rng, t.vertices[v].white);
                let bp = crate::gen::random_perm(&mut rng, t.vertices[v].black);
                let relabeled = relabel_vertex(&t, v, &wp, &bp, &params).unwrap();
                let value = tree_evaluate(&relabeled, &params).unwrap();
                assert!(value.eq_tol(&base, 0.0));
            }
        }
    }
}
