//! The randomized verification harness: one suite per lemma-level property,
//! deterministic under a seed, with serialized counterexamples.
//!
//! The oracles here are deliberately independent of the implementation paths
//! they check: divisibility is cross-checked by exhaustive search over
//! structure maps, entry times by bisection on the membership predicate, and
//! images by boundary sampling.

use crate::ball::{ball_relations, contains, disjoint, intersects, ProductBall};
use crate::blocks::BlockStructure;
use crate::config::{
    compose_standard, is_valid, operad_compose, Config, MembershipLevel, Perm, StructureMap,
};
use crate::coreform::{core_normal_form, criticality, random_core_form};
use crate::dilation::DilationMap;
use crate::divisibility::{divides, intersection_data, left_cancel};
use crate::error::Error;
use crate::flows::{
    entry_time, flow_apply, in_target, shrunk_membership, spherical_rescale, FlowKind,
};
use crate::gen::{
    self, corresponding_separated_pair, five_disk_figure, random_config, random_perm, trial_rng,
    GenContext,
};
use crate::params::Params;
use crate::scalar::{NumericMode, Scalar};
use crate::scene::{Factor, NamedDomain, Scene};
use crate::separated::{disk_bounds, triangle_decomposition};
use crate::trees::{random_tree, tree_evaluate, unary_iso, unary_iso_inverse, ExpansionSide};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::cmp::Ordering;
use std::collections::BTreeMap;

/// Everything the report needs about one suite run.
#[derive(Debug, Clone, Serialize)]
pub struct SuiteReport {
    pub name: String,
    pub trials: u64,
    pub failures: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub first_counterexample: Option<CounterExample>,
    /// Milliseconds; omitted by default so reports stay byte-identical.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub elapsed_ms: Option<u128>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CounterExample {
    pub trial: u64,
    pub message: String,
    /// A scene document reproducing the inputs, when they fit the format.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scene: Option<serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub mode: String,
    pub trials: u64,
    pub suites: Vec<SuiteReport>,
}

impl VerifyReport {
    pub fn total_failures(&self) -> u64 {
        self.suites.iter().map(|s| s.failures).sum()
    }
}

/// A failed trial: message plus optional reproducing scene.
struct TrialFailure {
    message: String,
    scene: Option<Scene>,
}

impl TrialFailure {
    fn new(message: impl Into<String>) -> Self {
        TrialFailure {
            message: message.into(),
            scene: None,
        }
    }

    fn with_scene(message: impl Into<String>, scene: Scene) -> Self {
        TrialFailure {
            message: message.into(),
            scene: Some(scene),
        }
    }
}

/// Wrap shared-domain configurations into a reproducing scene fragment.
fn scene_fragment(configs: &[(&str, &Config)], params: &Params) -> Option<Scene> {
    let first = configs.first()?.1;
    let domain = first.domain().clone();
    for (_, c) in configs {
        if !c.domain().eq_tol(&domain, 0.0) {
            return None;
        }
    }
    let mut map = BTreeMap::new();
    map.insert(
        "S".to_string(),
        NamedDomain {
            factor: Factor::Full,
            ball: domain.clone(),
        },
    );
    let mut cfgs = BTreeMap::new();
    for (name, c) in configs {
        cfgs.insert(name.to_string(), (*c).clone());
    }
    Some(Scene {
        mode: first.mode(),
        structure: domain.structure().clone(),
        factor_split: None,
        group: first.group().clone(),
        domains: map,
        configs: cfgs,
        trees: BTreeMap::new(),
        params: params.clone(),
    })
}

type TrialFn = dyn Fn(&mut ChaCha8Rng, NumericMode, &Params) -> Result<(), TrialFailure> + Sync;

pub const SUITES: &[&str] = &[
    "operad-laws",
    "geometry",
    "divisibility",
    "left-cancel",
    "disk-bounds",
    "critical-pairs",
    "bubble-transfer",
    "core-roundtrip",
    "core-entry",
    "interchange",
    "unary-iso",
    "flows",
    "refinement",
    "shrunk-class",
];

fn suite_fn(name: &str) -> Option<&'static TrialFn> {
    Some(match name {
        "operad-laws" => &trial_operad_laws,
        "geometry" => &trial_geometry,
        "divisibility" => &trial_divisibility,
        "left-cancel" => &trial_left_cancel,
        "disk-bounds" => &trial_disk_bounds,
        "critical-pairs" => &trial_critical_pairs,
        "bubble-transfer" => &trial_bubble_transfer,
        "core-roundtrip" => &trial_core_roundtrip,
        "core-entry" => &trial_core_entry,
        "interchange" => &trial_interchange,
        "unary-iso" => &trial_unary_iso,
        "flows" => &trial_flows,
        "refinement" => &trial_refinement,
        "shrunk-class" => &trial_shrunk_class,
        _ => return None,
    })
}

/// Run one suite for `trials` trials.
pub fn run_suite(
    name: &str,
    seed: u64,
    trials: u64,
    mode: NumericMode,
    params: &Params,
    timings: bool,
) -> Result<SuiteReport, Error> {
    let f = suite_fn(name).ok_or_else(|| Error::Invalid(format!("unknown suite {:?}", name)))?;
    let start = std::time::Instant::now();
    let mut failures = 0;
    let mut first = None;
    for trial in 0..trials {
        let mut rng = trial_rng(seed, name, trial);
        if let Err(failure) = f(&mut rng, mode, params) {
            failures += 1;
            if first.is_none() {
                let scene_json = failure.scene.as_ref().map(|s| {
                    serde_json::from_slice(&crate::scene::serialize_scene(s))
                        .expect("scene serializes to valid JSON")
                });
                first = Some(CounterExample {
                    trial,
                    message: failure.message,
                    scene: scene_json,
                });
            }
        }
    }
    Ok(SuiteReport {
        name: name.to_string(),
        trials,
        failures,
        first_counterexample: first,
        elapsed_ms: timings.then(|| start.elapsed().as_millis()),
    })
}

/// Run a selection of suites (empty or "all" selects everything).
pub fn verify(
    selection: &[String],
    seed: u64,
    trials: u64,
    mode: NumericMode,
    params: &Params,
    timings: bool,
) -> Result<VerifyReport, Error> {
    if trials == 0 {
        return Err(Error::Invalid("trials must be at least 1".into()));
    }
    let names: Vec<&str> = if selection.is_empty() || selection.iter().any(|s| s == "all") {
        SUITES.to_vec()
    } else {
        selection.iter().map(|s| s.as_str()).collect()
    };
    let mut suites = Vec::new();
    for name in names {
        suites.push(run_suite(name, seed, trials, mode, params, timings)?);
    }
    Ok(VerifyReport {
        seed,
        mode: match mode {
            NumericMode::Exact => "exact".into(),
            NumericMode::Float => "float".into(),
        },
        trials,
        suites,
    })
}

// ---------------------------------------------------------------------------
// Oracles.

/// Exhaustive divisibility oracle: try every structure map, build the forced
/// quotients componentwise, and accept when they recompose and are ambient
/// (star when `y` is star). Never calls `divides`.
pub fn brute_force_divides(x: &Config, y: &Config, params: &Params) -> bool {
    let n = x.arity();
    let m = y.arity();
    if n == 0 {
        return m == 0;
    }
    let want_star = is_valid(y, MembershipLevel::Star, params);
    let mut assignment = vec![0usize; m];
    loop {
        let alpha = StructureMap::new(n, assignment.clone()).expect("values in range");
        let fibers = alpha.fibers();
        let quotients: Vec<Config> = fibers
            .iter()
            .enumerate()
            .map(|(j, fiber)| {
                let maps = fiber
                    .iter()
                    .map(|&i| x.map(j).invert().compose(y.map(i)))
                    .collect();
                Config::new(maps, x.domain().clone(), x.group().clone()).expect("shared structure")
            })
            .collect();
        let ok = quotients.iter().all(|q| {
            is_valid(q, MembershipLevel::Ambient, params)
                && (!want_star || is_valid(q, MembershipLevel::Star, params))
        });
        if ok {
            if let Ok(recomposed) = operad_compose(x, &alpha, &quotients) {
                if recomposed.eq_tol(y, params.tol) {
                    return true;
                }
            }
        }
        // Next assignment in base n.
        let mut k = 0;
        loop {
            if k == m {
                return false;
            }
            assignment[k] += 1;
            if assignment[k] < n {
                break;
            }
            assignment[k] = 0;
            k += 1;
        }
    }
}

/// Bisection oracle for entry times: a bracket `(lo, hi]` around the least
/// feasible time, refined by `iters` halvings; `lo` is infeasible (or zero
/// when the configuration starts inside).
pub fn bisect_entry_time(
    x: &Config,
    kind: FlowKind,
    inner: &ProductBall,
    outer: &ProductBall,
    params: &Params,
    iters: usize,
) -> Result<(Scalar, Scalar), Error> {
    let mode = x.mode();
    let zero = Scalar::zero(mode);
    let one = Scalar::one(mode);
    let two = Scalar::from_int(2, mode);
    // Bisect the strict predicate: the closed form solves the exact
    // constraint boundary, so the oracle must not blur it by the comparison
    // tolerance.
    let strict = Params {
        tol: 0.0,
        ..params.clone()
    };
    let feasible = |t: &Scalar| -> Result<bool, Error> {
        let flowed = flow_apply(x, kind, t)?;
        Ok(in_target(&flowed, kind, inner, outer, &strict))
    };
    if feasible(&zero)? {
        return Ok((zero.clone(), zero));
    }
    // Find a feasible point approaching 1.
    let mut hi = Scalar::ratio(1, 2, mode);
    let mut guard = 0;
    while !feasible(&hi)? {
        hi = one.sub(&one.sub(&hi).div(&two));
        guard += 1;
        if guard > 200 {
            return Err(Error::Invalid("bisection found no feasible time".into()));
        }
    }
    let mut lo = zero;
    for _ in 0..iters {
        let mid = lo.add(&hi).div(&two);
        if feasible(&mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}

/// Boundary-sampling oracle for images (float mode): points on the boundary
/// of a ball must land on the boundary of the image ball.
pub fn image_boundary_check(
    map: &DilationMap,
    ball: &ProductBall,
    samples: usize,
    rng: &mut ChaCha8Rng,
    tol: f64,
) -> bool {
    let image = map.image(ball);
    let structure = ball.structure().clone();
    let center = ball.center_vector();
    for s in 0..samples {
        let block = s % structure.coarse_count();
        let axes = &structure.coarse_blocks()[block];
        let mut dir: Vec<f64> = (0..axes.len())
            .map(|_| rng.gen_range(-1.0f64..1.0))
            .collect();
        let norm: f64 = dir.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm < 1e-6 {
            continue;
        }
        for d in dir.iter_mut() {
            *d /= norm;
        }
        let mut point = center.clone();
        let r = ball.radii()[block].to_f64();
        for (&axis, d) in axes.iter().zip(&dir) {
            point[axis] = Scalar::Float(center[axis].to_f64() + r * d);
        }
        let mapped = map.apply(&point);
        // The permuted block of the image must see the point on its sphere.
        let target_block = map.coarse_perm()[block];
        let img_center = image.center_vector();
        let mut dist2 = 0.0;
        for &axis in &structure.coarse_blocks()[target_block] {
            let delta = mapped[axis].to_f64() - img_center[axis].to_f64();
            dist2 += delta * delta;
        }
        let expected = image.radii()[target_block].to_f64();
        if (dist2.sqrt() - expected).abs() > tol.max(1e-9) * (1.0 + expected) * 100.0 {
            return false;
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Suites.

/// Every permutation of {0..n} (n stays tiny here).
fn all_permutations(n: usize) -> Vec<Perm> {
    fn go(prefix: &mut Vec<usize>, used: &mut Vec<bool>, out: &mut Vec<Perm>) {
        let n = used.len();
        if prefix.len() == n {
            out.push(Perm::new(prefix.clone()).expect("bijection"));
            return;
        }
        for v in 0..n {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                go(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

fn ctx_for(mode: NumericMode, rng: &mut ChaCha8Rng) -> GenContext {
    match rng.gen_range(0..4) {
        0 => GenContext::plane(mode),
        1 => GenContext::line(mode),
        2 => GenContext::ball(3, mode),
        _ => GenContext::plane_c4(mode),
    }
}

fn fail_configs(message: &str, configs: &[(&str, &Config)], params: &Params) -> TrialFailure {
    match scene_fragment(configs, params) {
        Some(scene) => TrialFailure::with_scene(message, scene),
        None => TrialFailure::new(message),
    }
}

fn trial_operad_laws(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx = match rng.gen_range(0..5) {
        0 => GenContext::plane(mode),
        1 => GenContext::line(mode),
        2 => GenContext::ball(3, mode),
        3 => GenContext::ball(4, mode),
        _ => GenContext::plane_c4(mode),
    };
    let n = rng.gen_range(1..=4usize);
    let x = random_config(rng, &ctx, n, MembershipLevel::Ambient, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let ys: Vec<Config> = (0..n)
        .map(|_| {
            let m = rng.gen_range(0..=2usize);
            random_config(rng, &ctx, m, MembershipLevel::Ambient, params)
                .map_err(|e| TrialFailure::new(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let tol = params.tol;

    // Unit laws.
    let ids: Vec<Config> = (0..n)
        .map(|_| Config::identity(ctx.domain.clone(), ctx.group.clone()))
        .collect();
    let unit_right = compose_standard(&x, &ids).map_err(|e| TrialFailure::new(e.to_string()))?;
    if !unit_right.eq_tol(&x, tol) {
        return Err(fail_configs("right unit law failed", &[("x", &x)], params));
    }
    let id = Config::identity(ctx.domain.clone(), ctx.group.clone());
    let unit_left = compose_standard(&id, std::slice::from_ref(&x))
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    if !unit_left.eq_tol(&x, tol) {
        return Err(fail_configs("left unit law failed", &[("x", &x)], params));
    }

    // Associativity.
    let composed = compose_standard(&x, &ys).map_err(|e| TrialFailure::new(e.to_string()))?;
    let zs: Vec<Config> = (0..composed.arity())
        .map(|_| {
            let m = rng.gen_range(0..=2usize);
            random_config(rng, &ctx, m, MembershipLevel::Ambient, params)
                .map_err(|e| TrialFailure::new(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let left = compose_standard(&composed, &zs).map_err(|e| TrialFailure::new(e.to_string()))?;
    let mut inner = Vec::new();
    let mut offset = 0;
    for y in &ys {
        let slice = &zs[offset..offset + y.arity()];
        inner.push(compose_standard(y, slice).map_err(|e| TrialFailure::new(e.to_string()))?);
        offset += y.arity();
    }
    let right = compose_standard(&x, &inner).map_err(|e| TrialFailure::new(e.to_string()))?;
    if !left.eq_tol(&right, tol) {
        return Err(fail_configs("associativity failed", &[("x", &x)], params));
    }

    // Equivariance identity 1: (σx)∘(y^j) = σ{ar(y^j)}·(x∘(y^{σj})),
    // enumerated exhaustively over all permutations of the (small) arity.
    let sizes: Vec<usize> = ys.iter().map(Config::arity).collect();
    let mut off = vec![0usize; n];
    for j in 1..n {
        off[j] = off[j - 1] + sizes[j - 1];
    }
    for sigma in all_permutations(n) {
        let sigma_x = x
            .act(&sigma, ctx.group.identity(), params)
            .map_err(|e| TrialFailure::new(e.to_string()))?;
        let lhs = compose_standard(&sigma_x, &ys).map_err(|e| TrialFailure::new(e.to_string()))?;
        let ys_perm: Vec<Config> = (0..n).map(|j| ys[sigma.apply(j)].clone()).collect();
        let inner1 =
            compose_standard(&x, &ys_perm).map_err(|e| TrialFailure::new(e.to_string()))?;
        let sizes_perm: Vec<usize> = (0..n).map(|j| sizes[sigma.apply(j)]).collect();
        let mut off_perm = vec![0usize; n];
        for j in 1..n {
            off_perm[j] = off_perm[j - 1] + sizes_perm[j - 1];
        }
        let mut image = vec![0usize; inner1.arity()];
        for j in 0..n {
            for t in 0..sizes_perm[j] {
                image[off_perm[j] + t] = off[sigma.apply(j)] + t;
            }
        }
        let induced = Perm::new(image).map_err(|e| TrialFailure::new(e.to_string()))?;
        let rhs = inner1
            .act(&induced, ctx.group.identity(), params)
            .map_err(|e| TrialFailure::new(e.to_string()))?;
        if !lhs.eq_tol(&rhs, tol) {
            return Err(fail_configs(
                "first equivariance identity failed",
                &[("x", &x)],
                params,
            ));
        }
    }

    // Equivariance identity 2: x∘(τ_j y^j) = (⊕τ_j)·(x∘(y^j)).
    let taus: Vec<Perm> = ys.iter().map(|y| random_perm(rng, y.arity())).collect();
    let ys_tau: Vec<Config> = ys
        .iter()
        .zip(&taus)
        .map(|(y, tau)| y.act(tau, ctx.group.identity(), params))
        .collect::<Result<_, _>>()
        .map_err(|e: Error| TrialFailure::new(e.to_string()))?;
    let lhs2 = compose_standard(&x, &ys_tau).map_err(|e| TrialFailure::new(e.to_string()))?;
    let mut image2 = Vec::new();
    for (j, tau) in taus.iter().enumerate() {
        for t in 0..sizes[j] {
            image2.push(off[j] + tau.apply(t));
        }
    }
    let block_sum = Perm::new(image2).map_err(|e| TrialFailure::new(e.to_string()))?;
    let rhs2 = composed
        .act(&block_sum, ctx.group.identity(), params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    if !lhs2.eq_tol(&rhs2, tol) {
        return Err(fail_configs(
            "second equivariance identity failed",
            &[("x", &x)],
            params,
        ));
    }

    // G-action commutes with composition: g·(x∘y) = (g·x)∘(g·y).
    let g = rng.gen_range(0..ctx.group.order());
    let gx = x
        .act(&Perm::identity(n), g, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let gys: Vec<Config> = ys
        .iter()
        .map(|y| y.act(&Perm::identity(y.arity()), g, params))
        .collect::<Result<_, _>>()
        .map_err(|e: Error| TrialFailure::new(e.to_string()))?;
    let lhs3 = composed
        .act(&Perm::identity(composed.arity()), g, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let rhs3 = compose_standard(&gx, &gys).map_err(|e| TrialFailure::new(e.to_string()))?;
    if !lhs3.eq_tol(&rhs3, tol) {
        return Err(fail_configs(
            "group action does not commute with composition",
            &[("x", &x)],
            params,
        ));
    }
    Ok(())
}

fn trial_geometry(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx = ctx_for(mode, rng);
    let outer = ctx.domain.clone();
    let mid_map = gen::random_scale_translate(rng, &ctx, 0.3, 0.5);
    let mid = mid_map.image(&outer);
    let inner_map = gen::random_scale_translate(rng, &ctx, 0.2, 0.45);
    let inner = inner_map.compose(&mid_map).image(&outer);
    let tol = params.tol;
    if contains(&inner, &mid, tol) && contains(&mid, &outer, tol) && !contains(&inner, &outer, tol)
    {
        return Err(TrialFailure::new("containment is not transitive"));
    }
    let a = gen::random_scale_translate(rng, &ctx, 0.05, 0.3).image(&outer);
    let b = gen::random_scale_translate(rng, &ctx, 0.05, 0.3).image(&outer);
    if disjoint(&a, &b, tol) != disjoint(&b, &a, tol) {
        return Err(TrialFailure::new("disjointness is not symmetric"));
    }
    if contains(&a, &b, tol) && !intersects(&a, &b, tol) {
        return Err(TrialFailure::new("containment without intersection"));
    }
    match mode {
        NumericMode::Float => {
            let m = gen::random_scale_translate(rng, &ctx, 0.1, 0.4);
            if !image_boundary_check(&m, &outer, 100, rng, tol) {
                return Err(TrialFailure::new(
                    "boundary sample escaped the image boundary",
                ));
            }
        }
        NumericMode::Exact => {
            let fa = a.convert(NumericMode::Float);
            let fb = b.convert(NumericMode::Float);
            let exact_rel = ball_relations(&a, &b, 0.0);
            let float_rel = ball_relations(&fa, &fb, tol);
            if margin_exceeds(&a, &b, 10.0 * tol) && exact_rel != float_rel {
                return Err(TrialFailure::new(
                    "exact and float predicates disagree beyond the margin",
                ));
            }
        }
    }
    Ok(())
}

/// All squared-comparison margins of the two balls exceed `margin`.
fn margin_exceeds(a: &ProductBall, b: &ProductBall, margin: f64) -> bool {
    for ((ca, cb), (ra, rb)) in a
        .centers()
        .iter()
        .zip(b.centers())
        .zip(a.radii().iter().zip(b.radii()))
    {
        let d2 = crate::scalar::norm2(&crate::scalar::vec_sub(ca, cb)).to_f64();
        let sum = (ra.to_f64() + rb.to_f64()).powi(2);
        let gap = (rb.to_f64() - ra.to_f64()).powi(2);
        if (d2 - sum).abs() < margin || (d2 - gap).abs() < margin {
            return false;
        }
    }
    true
}

fn trial_divisibility(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx = GenContext::plane(mode);
    let nx = rng.gen_range(1..=3usize);
    let ny = rng.gen_range(1..=3usize);
    // Half the trials construct a genuine division so the positive branch is
    // exercised; the other half are independent samples.
    let (x, y) = if rng.gen_bool(0.5) {
        let x = random_config(rng, &ctx, nx, MembershipLevel::Star, params)
            .map_err(|e| TrialFailure::new(e.to_string()))?;
        let quotients: Vec<Config> = (0..nx)
            .map(|_| {
                let m = rng.gen_range(0..=2usize);
                random_config(rng, &ctx, m, MembershipLevel::Star, params)
                    .map_err(|e| TrialFailure::new(e.to_string()))
            })
            .collect::<Result<_, _>>()?;
        let y = compose_standard(&x, &quotients).map_err(|e| TrialFailure::new(e.to_string()))?;
        (x, y)
    } else {
        let x = random_config(rng, &ctx, nx, MembershipLevel::Star, params)
            .map_err(|e| TrialFailure::new(e.to_string()))?;
        let y = random_config(rng, &ctx, ny, MembershipLevel::Star, params)
            .map_err(|e| TrialFailure::new(e.to_string()))?;
        (x, y)
    };
    let fast = divides(&x, &y, None, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    let slow = brute_force_divides(&x, &y, params);
    if fast.is_some() != slow {
        return Err(fail_configs(
            &format!(
                "divides disagrees with brute force (fast: {}, brute: {})",
                fast.is_some(),
                slow
            ),
            &[("x", &x), ("y", &y)],
            params,
        ));
    }
    if let Some(division) = fast {
        let recomposed = operad_compose(&x, &division.alpha, &division.quotients)
            .map_err(|e| TrialFailure::new(e.to_string()))?;
        if !recomposed.eq_tol(&y, params.tol) {
            return Err(fail_configs(
                "division recomposition mismatch",
                &[("x", &x), ("y", &y)],
                params,
            ));
        }
        if is_valid(&y, MembershipLevel::Star, params) {
            for q in &division.quotients {
                if !is_valid(q, MembershipLevel::Star, params) {
                    return Err(fail_configs(
                        "quotient fails star inheritance",
                        &[("x", &x), ("y", &y)],
                        params,
                    ));
                }
            }
        }
    }
    // Coset coherence on an invariant domain: full-group division equals the
    // plain containment path.
    let c4 = GenContext::plane_c4(mode);
    let xr = random_config(rng, &c4, 2, MembershipLevel::Star, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let qs: Vec<Config> = (0..2)
        .map(|_| {
            let m = rng.gen_range(0..=1usize);
            random_config(rng, &c4, m, MembershipLevel::Star, params)
                .map_err(|e| TrialFailure::new(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let yr = compose_standard(&xr, &qs).map_err(|e| TrialFailure::new(e.to_string()))?;
    let full: Vec<usize> = (0..c4.group.order()).collect();
    let with_group =
        divides(&xr, &yr, Some(&full), params).map_err(|e| TrialFailure::new(e.to_string()))?;
    let without = divides(&xr, &yr, None, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    if with_group.is_some() != without.is_some() {
        return Err(fail_configs(
            "subgroup and plain division disagree on an invariant domain",
            &[("x", &xr), ("y", &yr)],
            params,
        ));
    }

    // Divisor transitivity: build z below y below x, then construct the
    // composite division of x into z explicitly and verify it recomposes.
    let xt = random_config(rng, &ctx, 2, MembershipLevel::Star, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let qs: Vec<Config> = (0..2)
        .map(|_| {
            let m = rng.gen_range(1..=2usize);
            random_config(rng, &ctx, m, MembershipLevel::Star, params)
                .map_err(|e| TrialFailure::new(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let yt = compose_standard(&xt, &qs).map_err(|e| TrialFailure::new(e.to_string()))?;
    let rs: Vec<Config> = (0..yt.arity())
        .map(|_| {
            let m = rng.gen_range(0..=2usize);
            random_config(rng, &ctx, m, MembershipLevel::Star, params)
                .map_err(|e| TrialFailure::new(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let zt = compose_standard(&yt, &rs).map_err(|e| TrialFailure::new(e.to_string()))?;
    let d1 = divides(&xt, &yt, None, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    let d2 = divides(&yt, &zt, None, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    if let (Some(d1), Some(d2)) = (d1, d2) {
        // α = α₁ ∘ α₂; s^j = q^j composed with the r's over its fiber along
        // the induced (not necessarily monotone) structure map.
        let alpha_comp: Vec<usize> = (0..zt.arity())
            .map(|k| d1.alpha.apply(d2.alpha.apply(k)))
            .collect();
        let alpha_comp =
            StructureMap::new(xt.arity(), alpha_comp).map_err(|e| TrialFailure::new(e.to_string()))?;
        let fibers_xy = d1.alpha.fibers();
        let mut composite_quotients = Vec::with_capacity(xt.arity());
        for (j, fiber) in fibers_xy.iter().enumerate() {
            // Positions of y-indices inside q^j.
            let args: Vec<Config> = fiber.iter().map(|&i| d2.quotients[i].clone()).collect();
            let mut beta_values = Vec::new();
            for &k in &alpha_comp.fibers()[j] {
                let i = d2.alpha.apply(k);
                let pos = fiber.iter().position(|&f| f == i).expect("fiber member");
                beta_values.push(pos);
            }
            let beta = StructureMap::new(fiber.len(), beta_values)
                .map_err(|e| TrialFailure::new(e.to_string()))?;
            composite_quotients.push(
                operad_compose(&d1.quotients[j], &beta, &args)
                    .map_err(|e| TrialFailure::new(e.to_string()))?,
            );
        }
        let recomposed = operad_compose(&xt, &alpha_comp, &composite_quotients)
            .map_err(|e| TrialFailure::new(e.to_string()))?;
        if !recomposed.eq_tol(&zt, params.tol) {
            return Err(fail_configs(
                "composite division does not recompose",
                &[("x", &xt), ("z", &zt)],
                params,
            ));
        }
    }
    Ok(())
}

fn trial_left_cancel(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx = ctx_for(mode, rng);
    let n = rng.gen_range(1..=3usize);
    let x = random_config(rng, &ctx, n, MembershipLevel::Star, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let quotients: Vec<Config> = (0..n)
        .map(|_| {
            let m = rng.gen_range(0..=2usize);
            random_config(rng, &ctx, m, MembershipLevel::Star, params)
                .map_err(|e| TrialFailure::new(e.to_string()))
        })
        .collect::<Result<_, _>>()?;
    let mut alpha_values = Vec::new();
    for (j, q) in quotients.iter().enumerate() {
        alpha_values.extend(std::iter::repeat(j).take(q.arity()));
    }
    let alpha = StructureMap::new(n, alpha_values).map_err(|e| TrialFailure::new(e.to_string()))?;
    let y = operad_compose(&x, &alpha, &quotients).map_err(|e| TrialFailure::new(e.to_string()))?;
    let recovered =
        left_cancel(&x, &y, &alpha, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    for (q, r) in quotients.iter().zip(&recovered) {
        if !q.eq_tol(r, params.tol) {
            return Err(fail_configs(
                "left cancellation returned different quotients",
                &[("x", &x), ("y", &y)],
                params,
            ));
        }
    }
    Ok(())
}

fn trial_disk_bounds(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    // Randomized critical-disk instances: y1, y2 with λ-enlargements
    // disjoint, x touching both. All data rational by construction: the
    // bridge center sits on the segment between the two target centers.
    let ctx = GenContext::plane(mode);
    let structure = ctx.domain.structure().clone();
    let lambda = gen::rational_in(rng, 1.1, 8.0, mode);
    let r1 = gen::log_uniform(rng, 0.02, 0.3, mode);
    let r2 = gen::log_uniform(rng, 0.02, 0.3, mode);
    let (ux, uy) = gen::rational_direction(rng, mode);
    let margin = gen::rational_in(rng, 0.001, 0.8, mode);
    let d = lambda
        .mul(&r1.add(&r2))
        .mul(&Scalar::one(mode).add(&margin));
    let c1 = vec![
        gen::rational_in(rng, -0.2, 0.2, mode),
        gen::rational_in(rng, -0.2, 0.2, mode),
    ];
    let c2 = vec![c1[0].add(&d.mul(&ux)), c1[1].add(&d.mul(&uy))];
    let s = gen::rational_in(rng, 0.2, 0.8, mode);
    let cx = vec![
        c1[0].add(&s.mul(&c2[0].sub(&c1[0]))),
        c1[1].add(&s.mul(&c2[1].sub(&c1[1]))),
    ];
    let d1 = s.mul(&d);
    let d2 = Scalar::one(mode).sub(&s).mul(&d);
    let slack = gen::rational_in(rng, 0.01, 0.5, mode);
    let needed_1 = d1.sub(&r1);
    let needed_2 = d2.sub(&r2);
    let mut rx = if needed_1.cmp_strict(&needed_2) == Ordering::Greater {
        needed_1
    } else {
        needed_2
    };
    if !rx.is_positive() {
        rx = Scalar::ratio(1, 100, mode);
    }
    rx = rx.add(&slack.mul(&rx.abs())).add(&Scalar::ratio(1, 1000, mode));
    let mk = |center: &[Scalar], radius: &Scalar| {
        DilationMap::scale_translate(structure.clone(), vec![radius.clone()], center.to_vec())
            .expect("positive scale")
    };
    let x = mk(&cx, &rx);
    let y1 = mk(&c1, &r1);
    let y2 = mk(&c2, &r2);
    let domain = ctx.domain.clone();
    let tol = params.tol;
    // Hypotheses (checked, not assumed).
    if !intersects(&x.image(&domain), &y1.image(&domain), tol)
        || !intersects(&x.image(&domain), &y2.image(&domain), tol)
    {
        return Err(TrialFailure::new(
            "generator broke the intersection hypothesis",
        ));
    }
    let y1l = y1.scaled_right(&lambda).image(&domain);
    let y2l = y2.scaled_right(&lambda).image(&domain);
    if !disjoint(&y1l, &y2l, tol) {
        return Err(TrialFailure::new(
            "generator broke the disjointness hypothesis",
        ));
    }
    // Conclusion 1: rad(x) > (λ−1)/2 (r1 + r2).
    let bounds = disk_bounds(&lambda, &r1, &r2).map_err(|e| TrialFailure::new(e.to_string()))?;
    let x_image = x.image(&domain);
    let rad_x = &x_image.radii()[0];
    if rad_x.cmp_strict(&bounds.lower_bound) != Ordering::Greater {
        return Err(TrialFailure::new(format!(
            "radius bound violated: rad {:?} vs bound {:?}",
            rad_x, bounds.lower_bound
        )));
    }
    // Conclusion 2: containment at μ = threshold.
    let x_mu = x.scaled_right(&bounds.mu_threshold).image(&domain);
    if !contains(&y1l, &x_mu, tol) || !contains(&y2l, &x_mu, tol) {
        return Err(TrialFailure::new("covering threshold violated"));
    }
    Ok(())
}

fn trial_critical_pairs(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx = GenContext::plane(mode);
    let groups = rng.gen_range(1..=2usize);
    let (x, y) = corresponding_separated_pair(rng, &ctx, groups, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let data = intersection_data(&x, &y, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    let partition = crate::separated::separation_partition(&x, &y, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let sep = params.separation_scalar(mode);
    let xs_large: Vec<ProductBall> = x
        .maps()
        .iter()
        .map(|m| m.scaled_right(&sep).image(x.domain()))
        .collect();
    let ys_large: Vec<ProductBall> = y
        .maps()
        .iter()
        .map(|m| m.scaled_right(&sep).image(y.domain()))
        .collect();
    for i in 0..x.arity() {
        let partners = data.image_of_one(i);
        if partners.len() > 1 {
            if !partition.r1.contains(&i) {
                return Err(fail_configs(
                    "multi-partner index escaped R1",
                    &[("x", &x), ("y", &y)],
                    params,
                ));
            }
            for &j in &partners {
                if !partition.l2.contains(&j) {
                    return Err(fail_configs(
                        "partner of a multi-partner index escaped L2",
                        &[("x", &x), ("y", &y)],
                        params,
                    ));
                }
                if !contains(&ys_large[j], &xs_large[i], params.tol) {
                    return Err(fail_configs(
                        "enlarged containment failed",
                        &[("x", &x), ("y", &y)],
                        params,
                    ));
                }
            }
        }
    }
    // c(L1) = R2 and c(R1) = L2.
    let c_l1 = data.image_of(&partition.l1);
    let c_r1 = data.image_of(&partition.r1);
    let r2: std::collections::BTreeSet<usize> = partition.r2.iter().copied().collect();
    let l2: std::collections::BTreeSet<usize> = partition.l2.iter().copied().collect();
    if c_l1 != r2 || c_r1 != l2 {
        return Err(fail_configs(
            "index partition images mismatch",
            &[("x", &x), ("y", &y)],
            params,
        ));
    }
    Ok(())
}

fn trial_bubble_transfer(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx = GenContext::plane(mode);
    let groups = rng.gen_range(1..=3usize);
    let (x, y) = corresponding_separated_pair(rng, &ctx, groups, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    // The construction verifies all five statements before returning.
    let t = triangle_decomposition(&x, &y, params).map_err(|e| {
        fail_configs(
            &format!("triangle failed: {}", e),
            &[("x", &x), ("y", &y)],
            params,
        )
    })?;
    if !t.verify_zigzag(&x, &y, params) {
        return Err(fail_configs(
            "inclusion zigzag failed",
            &[("x", &x), ("y", &y)],
            params,
        ));
    }
    Ok(())
}

fn trial_core_roundtrip(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx_v = GenContext::plane(mode);
    let ctx_w = GenContext::line(mode);
    let form = random_core_form(rng, &ctx_v, &ctx_w, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let w = tree_evaluate(&form.to_tree(), params).map_err(|e| TrialFailure::new(e.to_string()))?;
    let witness =
        criticality(&w, 1, params).map_err(|e| TrialFailure::new(format!("criticality: {}", e)))?;
    let recovered = core_normal_form(&w, &witness, params)
        .map_err(|e| TrialFailure::new(format!("normal form: {}", e)))?;
    if !recovered.eq_tol(&form, params.tol) {
        return Err(TrialFailure::new(
            "normal form is not a fixed point of evaluate-then-normalize",
        ));
    }
    let back =
        tree_evaluate(&recovered.to_tree(), params).map_err(|e| TrialFailure::new(e.to_string()))?;
    if !back.eq_tol(&w, params.tol) {
        return Err(TrialFailure::new("normal form changed the image"));
    }
    Ok(())
}

fn trial_core_entry(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx_v = GenContext::plane(mode);
    let ctx_w = GenContext::line(mode);
    let tree =
        random_tree(rng, &ctx_v, &ctx_w, 2, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    let w = tree_evaluate(&tree, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    if !is_valid(&w, MembershipLevel::Star, params) {
        return Ok(());
    }
    let (t, witness) = crate::flows::core_entry_time(&tree, params)
        .map_err(|e| TrialFailure::new(format!("entry search: {}", e)))?;
    // The window (1 − shrink, 1).
    let tf = t.to_f64();
    let shrink = params.shrink_scalar(mode).to_f64();
    if !(tf >= 1.0 - shrink - 1e-12 && tf < 1.0) {
        return Err(TrialFailure::new(format!("entry time {} outside the window", tf)));
    }
    // The flowed element normalizes through the witness.
    let flowed = flow_apply(&w, FlowKind::ShrinkRightProduct, &t)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    crate::coreform::core_normal_form(&flowed, &witness, params)
        .map_err(|e| TrialFailure::new(format!("normal form after entry: {}", e)))?;
    Ok(())
}


fn trial_interchange(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx_v = GenContext::plane(mode);
    let ctx_w = GenContext::line(mode);
    let tree =
        random_tree(rng, &ctx_v, &ctx_w, 3, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    let base = tree_evaluate(&tree, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    let vertex = rng.gen_range(0..tree.vertices.len());
    for side in [ExpansionSide::White, ExpansionSide::Black] {
        let expanded = crate::trees::interchange_expand(&tree, vertex, side)
            .map_err(|e| TrialFailure::new(e.to_string()))?;
        let value =
            tree_evaluate(&expanded, params).map_err(|e| TrialFailure::new(e.to_string()))?;
        if !value.eq_tol(&base, params.tol) {
            return Err(TrialFailure::new(format!(
                "interchange expansion at vertex {} changed the evaluation",
                vertex
            )));
        }
    }
    // Relabeling invariance.
    let wp = random_perm(rng, tree.vertices[vertex].white);
    let bp = random_perm(rng, tree.vertices[vertex].black);
    let relabeled = crate::trees::relabel_vertex(&tree, vertex, &wp, &bp, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let value = tree_evaluate(&relabeled, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    if !value.eq_tol(&base, params.tol) {
        return Err(TrialFailure::new("relabeling changed the evaluation"));
    }
    Ok(())
}

fn trial_unary_iso(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx_v = GenContext::plane(mode);
    let ctx_w = GenContext::line(mode);
    let p = random_config(rng, &ctx_v, 1, MembershipLevel::Star, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let q = random_config(rng, &ctx_w, 1, MembershipLevel::Star, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let tree = unary_iso(&p, &q).map_err(|e| TrialFailure::new(e.to_string()))?;
    let evaluated = tree_evaluate(&tree, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    let expected = DilationMap::product(p.map(0), q.map(0));
    if !evaluated.map(0).eq_tol(&expected, params.tol) {
        return Err(TrialFailure::new(
            "unary evaluation is not the block product",
        ));
    }
    let (p2, q2) =
        unary_iso_inverse(&tree, params).map_err(|e| TrialFailure::new(e.to_string()))?;
    if !p2.eq_tol(&p, params.tol) || !q2.eq_tol(&q, params.tol) {
        return Err(TrialFailure::new("unary isomorphism failed to round-trip"));
    }
    Ok(())
}

fn trial_flows(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let structure = BlockStructure::spherical(2);
    let group = crate::group::GroupRep::trivial(structure.clone(), mode);
    let outer = ProductBall::origin(structure.clone(), Scalar::one(mode));
    let inner = ProductBall::origin(structure.clone(), gen::rational_in(rng, 0.3, 0.7, mode));

    // Left flow: radial rational-norm centers, any arity.
    let arity = rng.gen_range(1..=3usize);
    let mut maps = Vec::new();
    for _ in 0..arity {
        let (ux, uy) = gen::rational_direction(rng, mode);
        let rho = gen::rational_in(rng, 0.05, 0.75, mode);
        let scale = gen::log_uniform(rng, 0.02, 0.2, mode);
        maps.push(
            DilationMap::scale_translate(
                structure.clone(),
                vec![scale],
                vec![ux.mul(&rho), uy.mul(&rho)],
            )
            .expect("positive scale"),
        );
    }
    let x = Config::new(maps, outer.clone(), group.clone()).expect("shared structure");
    if is_valid(&x, MembershipLevel::Star, params) {
        let report = entry_time(&x, FlowKind::ShrinkLeft, &inner, &outer, params)
            .map_err(|e| TrialFailure::new(format!("left entry time: {}", e)))?;
        check_entry_against_bisection(&x, FlowKind::ShrinkLeft, &inner, &outer, &report.t, params)?;
    }

    // Right flow: two components with a rational-distance offset.
    let (ux, uy) = gen::rational_direction(rng, mode);
    let d = gen::rational_in(rng, 0.2, 0.8, mode);
    let c1 = vec![
        gen::rational_in(rng, -0.1, 0.1, mode),
        gen::rational_in(rng, -0.1, 0.1, mode),
    ];
    let c2 = vec![c1[0].add(&d.mul(&ux)), c1[1].add(&d.mul(&uy))];
    let s1 = gen::log_uniform(rng, 0.02, 0.08, mode);
    let s2 = gen::log_uniform(rng, 0.02, 0.08, mode);
    let mk = |c: &Vec<Scalar>, s: &Scalar| {
        DilationMap::scale_translate(structure.clone(), vec![s.clone()], c.clone())
            .expect("positive scale")
    };
    let x2 = Config::new(vec![mk(&c1, &s1), mk(&c2, &s2)], outer.clone(), group.clone())
        .expect("shared structure");
    if is_valid(&x2, MembershipLevel::Star, params) {
        // The right flow treats the configuration's domain as the inner
        // ball; here inner = outer = unit disk keeps the preconditions
        // simple while outer-ball images drive the disjointness constraint.
        let report = entry_time(&x2, FlowKind::ShrinkRight, &outer, &outer, params)
            .map_err(|e| TrialFailure::new(format!("right entry time: {}", e)))?;
        check_entry_against_bisection(&x2, FlowKind::ShrinkRight, &outer, &outer, &report.t, params)?;
        // Later times stay inside (5 grid points).
        for k in 1..=5 {
            let later = report.t.add(
                &Scalar::one(mode)
                    .sub(&report.t)
                    .mul(&Scalar::ratio(k, 6, mode)),
            );
            let flowed = flow_apply(&x2, FlowKind::ShrinkRight, &later)
                .map_err(|e| TrialFailure::new(e.to_string()))?;
            if !in_target(&flowed, FlowKind::ShrinkRight, &outer, &outer, params) {
                return Err(TrialFailure::new("monotonicity grid check failed"));
            }
        }
    }

    // Semigroup law.
    let s = gen::rational_in(rng, 0.05, 0.6, mode);
    let u = gen::rational_in(rng, 0.05, 0.6, mode);
    let combined =
        Scalar::one(mode).sub(&Scalar::one(mode).sub(&s).mul(&Scalar::one(mode).sub(&u)));
    for kind in [FlowKind::ShrinkLeft, FlowKind::ShrinkRight] {
        let two_step = flow_apply(
            &flow_apply(&x, kind, &s).map_err(|e| TrialFailure::new(e.to_string()))?,
            kind,
            &u,
        )
        .map_err(|e| TrialFailure::new(e.to_string()))?;
        let one_step =
            flow_apply(&x, kind, &combined).map_err(|e| TrialFailure::new(e.to_string()))?;
        if !two_step.eq_tol(&one_step, params.tol) {
            return Err(TrialFailure::new("semigroup law failed"));
        }
    }

    // Spherical rescale lands in the equal-scale subgroup.
    let multi = BlockStructure::new(2, vec![vec![0], vec![1]], vec![vec![0], vec![1]])
        .expect("valid structure");
    let mgroup = crate::group::GroupRep::trivial(multi.clone(), mode);
    let mdomain = ProductBall::origin(multi.clone(), Scalar::one(mode));
    let mmap = DilationMap::scale_translate(
        multi.clone(),
        vec![
            gen::log_uniform(rng, 0.1, 3.0, mode),
            gen::log_uniform(rng, 0.1, 3.0, mode),
        ],
        vec![Scalar::zero(mode), Scalar::zero(mode)],
    )
    .expect("positive scales");
    let mx = Config::new(vec![mmap], mdomain, mgroup).expect("shared structure");
    let (_, retracted) = spherical_rescale(&mx);
    let scales = retracted.map(0).scales();
    if !scales.iter().all(|sc| sc.eq_tol(&scales[0], params.tol)) {
        return Err(TrialFailure::new("spherical rescale left unequal scales"));
    }
    Ok(())
}

fn check_entry_against_bisection(
    x: &Config,
    kind: FlowKind,
    inner: &ProductBall,
    outer: &ProductBall,
    t: &Scalar,
    params: &Params,
) -> Result<(), TrialFailure> {
    let iters = match x.mode() {
        NumericMode::Exact => 80,
        NumericMode::Float => 60,
    };
    let (lo, hi) = bisect_entry_time(x, kind, inner, outer, params, iters)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    match x.mode() {
        NumericMode::Exact => {
            // t must sit in the bracket (lo, hi]; lo is infeasible.
            if t.cmp_strict(&hi) == Ordering::Greater
                || (!lo.is_zero() && t.cmp_strict(&lo) != Ordering::Greater)
            {
                return Err(TrialFailure::new(format!(
                    "closed-form {:?} outside bisection bracket ({:?}, {:?}]",
                    t, lo, hi
                )));
            }
            // Strict minimality just below t.
            if t.is_positive() {
                let delta = Scalar::ratio(1, 1_000_000, NumericMode::Exact);
                let before = t.sub(&t.mul(&delta));
                let flowed =
                    flow_apply(x, kind, &before).map_err(|e| TrialFailure::new(e.to_string()))?;
                if in_target(&flowed, kind, inner, outer, params) {
                    return Err(TrialFailure::new("flow enters the target before t"));
                }
            }
        }
        NumericMode::Float => {
            if (t.to_f64() - hi.to_f64()).abs() > 1e-12 {
                return Err(TrialFailure::new(format!(
                    "closed-form {} differs from bisected {} by more than 1e-12",
                    t.to_f64(),
                    hi.to_f64()
                )));
            }
        }
    }
    Ok(())
}

fn trial_refinement(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx = GenContext::plane(mode);
    // Anchors far apart; every config picks a few anchors and drops a tiny
    // disk near each; classes = anchors by construction.
    let anchors: Vec<Vec<Scalar>> = vec![
        vec![Scalar::ratio(-1, 2, mode), Scalar::ratio(-1, 4, mode)],
        vec![Scalar::ratio(1, 2, mode), Scalar::ratio(-1, 4, mode)],
        vec![Scalar::ratio(0, 1, mode), Scalar::ratio(1, 2, mode)],
    ];
    let n_configs = rng.gen_range(1..=3usize);
    let mut configs = Vec::new();
    for _ in 0..n_configs {
        let mut maps = Vec::new();
        for anchor in &anchors {
            if rng.gen_bool(0.7) {
                let r = gen::log_uniform(rng, 0.001, 0.004, mode);
                let off = gen::rational_in(rng, -0.0005, 0.0005, mode);
                let center = vec![anchor[0].add(&off), anchor[1].clone()];
                maps.push(
                    DilationMap::scale_translate(ctx.domain.structure().clone(), vec![r], center)
                        .expect("positive scale"),
                );
            }
        }
        if maps.is_empty() {
            continue;
        }
        configs
            .push(Config::new(maps, ctx.domain.clone(), ctx.group.clone()).expect("shared structure"));
    }
    if configs.is_empty() {
        return Ok(());
    }
    let refinement = crate::coreform::common_refinement(&configs, params)
        .map_err(|e| TrialFailure::new(format!("refinement: {}", e)))?;
    // Recomposition is verified inside; check the arity bookkeeping too.
    for (cfg, rf) in configs.iter().zip(&refinement.per_config) {
        let unary = rf.factors.iter().filter(|f| f.arity() == 1).count();
        if unary != cfg.arity() {
            return Err(TrialFailure::new("factor arity bookkeeping failed"));
        }
    }
    Ok(())
}

fn trial_shrunk_class(
    rng: &mut ChaCha8Rng,
    mode: NumericMode,
    params: &Params,
) -> Result<(), TrialFailure> {
    let ctx = GenContext::plane(mode);
    let factor = params.shrink_scalar(mode);
    let n = rng.gen_range(1..=3usize);
    let x = random_config(rng, &ctx, n, MembershipLevel::Star, params)
        .map_err(|e| TrialFailure::new(e.to_string()))?;
    let member = x.scaled_right(&factor);
    if !shrunk_membership(&member, &factor, params) {
        return Err(fail_configs(
            "constructed member rejected from the shrunk class",
            &[("x", &x)],
            params,
        ));
    }
    // Enlarging the member back and retesting matches membership of x
    // itself: only doubly-shrunk configurations survive.
    let enlarged = member.scaled_right(&factor.recip());
    if shrunk_membership(&enlarged, &factor, params) != shrunk_membership(&x, &factor, params) {
        return Err(fail_configs(
            "shrunk-class double-membership inconsistency",
            &[("x", &x)],
            params,
        ));
    }
    Ok(())
}

// ---------------------------------------------------------------------------

/// The five-disk figure regression: intersection pairs and index partitions
/// must match the documented values exactly.
pub fn five_disk_regression(mode: NumericMode, params: &Params) -> Result<(), Error> {
    let (x, y) = five_disk_figure(mode);
    let p = crate::separated::separation_partition(&x, &y, params)?;
    let expect = |got: &[usize], want: &[usize], name: &str| -> Result<(), Error> {
        if got != want {
            return Err(Error::Invalid(format!(
                "five-disk regression: {} = {:?}, expected {:?}",
                name, got, want
            )));
        }
        Ok(())
    };
    expect(&p.l1, &[0, 1], "L1")?;
    expect(&p.l2, &[1], "L2")?;
    expect(&p.r1, &[2], "R1")?;
    expect(&p.r2, &[0], "R2")?;
    let data = intersection_data(&x, &y, params)?;
    let mut pairs = Vec::new();
    for i in 0..x.arity() {
        for j in 0..y.arity() {
            if data.relation[i][j] {
                pairs.push((i + 1, j + 1));
            }
        }
    }
    if pairs != vec![(1, 1), (2, 1), (3, 2)] {
        return Err(Error::Invalid(format!(
            "five-disk regression: pairs {:?}",
            pairs
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn all_suites_pass_briefly_exact() {
        let params = Params::default();
        let report = verify(&[], 42, 5, NumericMode::Exact, &params, false).unwrap();
        for suite in &report.suites {
            assert_eq!(
                suite.failures, 0,
                "suite {} failed: {:?}",
                suite.name, suite.first_counterexample
            );
        }
    }

    #[test]
    fn all_suites_pass_briefly_float() {
        let params = Params::default();
        let report = verify(&[], 43, 5, NumericMode::Float, &params, false).unwrap();
        for suite in &report.suites {
            assert_eq!(
                suite.failures, 0,
                "suite {} failed: {:?}",
                suite.name, suite.first_counterexample
            );
        }
    }

    #[test]
    fn reports_are_deterministic() {
        let params = Params::default();
        let a = verify(&[], 7, 3, NumericMode::Exact, &params, false).unwrap();
        let b = verify(&[], 7, 3, NumericMode::Exact, &params, false).unwrap();
        let ja = serde_json::to_string(&a).unwrap();
        let jb = serde_json::to_string(&b).unwrap();
        assert_eq!(ja, jb);
    }

    #[test]
    fn unknown_suite_is_an_error() {
        let params = Params::default();
        assert!(run_suite("nope", 1, 1, NumericMode::Exact, &params, false).is_err());
        assert!(verify(&[], 1, 0, NumericMode::Exact, &params, false).is_err());
    }

    #[test]
    fn five_disk_regression_passes() {
        five_disk_regression(NumericMode::Exact, &Params::default()).unwrap();
    }

    #[test]
    fn counterexample_scenes_reproduce_their_inputs() {
        let params = Params::default();
        let ctx = GenContext::plane(NumericMode::Exact);
        let mut rng = trial_rng(11, "counterexample-demo", 0);
        let x = random_config(&mut rng, &ctx, 2, MembershipLevel::Star, &params).unwrap();
        let scene = scene_fragment(&[("x", &x)], &params).unwrap();
        let bytes = crate::scene::serialize_scene(&scene);
        let reparsed = crate::scene::parse_scene(&bytes).unwrap();
        let x2 = reparsed.config("x").unwrap();
        assert!(x2.eq_tol(&x, 0.0));
        assert_eq!(
            is_valid(&x, MembershipLevel::Star, &params),
            is_valid(x2, MembershipLevel::Star, &params)
        );
    }
}
