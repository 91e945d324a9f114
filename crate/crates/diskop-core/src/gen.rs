//! Seeded random generators and named fixture configurations.
//!
//! Distributions: centers uniform in 0.8·domain, radii log-uniform, with
//! rejection until the requested membership holds. In exact mode everything
//! is sampled on a rational grid so predicates are decided exactly. Rational
//! unit vectors come from the Pythagorean parametrization, which keeps
//! off-axis placements exact.

use crate::ball::ProductBall;
use crate::blocks::BlockStructure;
use crate::config::{is_valid, Config, MembershipLevel, Perm};
use crate::dilation::DilationMap;
use crate::error::Error;
use crate::group::GroupRep;
use crate::matrix::OrthoMatrix;
use crate::params::Params;
use crate::scalar::{NumericMode, Scalar};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// Number of rejection-sampling attempts before a generator reports
/// starvation.
pub const STARVATION_LIMIT: usize = 100_000;

/// Deterministic per-trial RNG: the stream depends only on (seed, suite
/// label, trial index), so trial order and threading don't matter.
pub fn trial_rng(seed: u64, suite: &str, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&trial.to_le_bytes());
    for (slot, byte) in key[16..].iter_mut().zip(suite.bytes()) {
        *slot = byte;
    }
    ChaCha8Rng::from_seed(key)
}

#[derive(Debug, Clone, thiserror::Error)]
#[error("generator starved after {limit} rejections in {what}")]
pub struct Starvation {
    pub what: String,
    pub limit: usize,
}

/// A rational sampled uniformly from `[lo, hi]` on a fine grid (denominator
/// 2^20), in the requested mode.
pub fn rational_in(rng: &mut ChaCha8Rng, lo: f64, hi: f64, mode: NumericMode) -> Scalar {
    const DEN: i64 = 1 << 20;
    let lo_n = (lo * DEN as f64).ceil() as i64;
    let hi_n = (hi * DEN as f64).floor() as i64;
    let n = rng.gen_range(lo_n..=hi_n.max(lo_n));
    Scalar::ratio(n, DEN, mode)
}

/// Log-uniform radius in `[lo, hi]`.
pub fn log_uniform(rng: &mut ChaCha8Rng, lo: f64, hi: f64, mode: NumericMode) -> Scalar {
    let t = rng.gen_range(lo.ln()..hi.ln()).exp();
    rational_in(rng, t * 0.999, t * 1.001, mode)
}

/// Rational points on the unit circle: (1−t²)/(1+t²), 2t/(1+t²).
pub fn rational_direction(rng: &mut ChaCha8Rng, mode: NumericMode) -> (Scalar, Scalar) {
    let t_num = rng.gen_range(-1000i64..=1000);
    let t = Scalar::ratio(t_num, 1000, mode);
    let one = Scalar::one(mode);
    let t2 = t.square();
    let denom = one.add(&t2);
    let c = one.sub(&t2).div(&denom);
    let s = Scalar::from_int(2, mode).mul(&t).div(&denom);
    if rng.gen_bool(0.5) {
        (c.neg(), s)
    } else {
        (c, s)
    }
}

/// A random point with norm at most `radius_cap`, per coarse block.
fn random_center(
    rng: &mut ChaCha8Rng,
    block_len: usize,
    radius_cap: f64,
    mode: NumericMode,
) -> Vec<Scalar> {
    loop {
        let coords: Vec<Scalar> = (0..block_len)
            .map(|_| rational_in(rng, -radius_cap, radius_cap, mode))
            .collect();
        let n2: f64 = coords.iter().map(|c| c.to_f64() * c.to_f64()).sum();
        if n2 <= radius_cap * radius_cap {
            return coords;
        }
    }
}

/// Context shared by generated configurations.
#[derive(Debug, Clone)]
pub struct GenContext {
    pub domain: ProductBall,
    pub group: Arc<GroupRep>,
    pub mode: NumericMode,
}

impl GenContext {
    /// The unit disk of the plane with the trivial group.
    pub fn plane(mode: NumericMode) -> Self {
        let s = BlockStructure::spherical(2);
        GenContext {
            domain: ProductBall::origin(s.clone(), Scalar::one(mode)),
            group: GroupRep::trivial(s, mode),
            mode,
        }
    }

    /// The unit disk of the plane with the quarter-turn group C4.
    pub fn plane_c4(mode: NumericMode) -> Self {
        let s = BlockStructure::spherical_split(2);
        GenContext {
            domain: ProductBall::origin(s.clone(), Scalar::one(mode)),
            group: crate::group::cyclic4(s, mode),
            mode,
        }
    }

    /// The unit interval domain in one dimension with the trivial group.
    pub fn line(mode: NumericMode) -> Self {
        let s = BlockStructure::spherical(1);
        GenContext {
            domain: ProductBall::origin(s.clone(), Scalar::one(mode)),
            group: GroupRep::trivial(s, mode),
            mode,
        }
    }

    /// A `dim`-dimensional unit ball with the trivial group.
    pub fn ball(dim: usize, mode: NumericMode) -> Self {
        let s = BlockStructure::spherical(dim);
        GenContext {
            domain: ProductBall::origin(s.clone(), Scalar::one(mode)),
            group: GroupRep::trivial(s, mode),
            mode,
        }
    }
}

/// A random dilation map with identity rotation: scale in `[rad_lo, rad_hi]`
/// (relative to the domain radius) and center within 0.8 of the domain.
pub fn random_scale_translate(
    rng: &mut ChaCha8Rng,
    ctx: &GenContext,
    rad_lo: f64,
    rad_hi: f64,
) -> DilationMap {
    let structure = ctx.domain.structure().clone();
    let nc = structure.coarse_count();
    let scales: Vec<Scalar> = (0..nc)
        .map(|_| log_uniform(rng, rad_lo, rad_hi, ctx.mode))
        .collect();
    let mut translation = Vec::new();
    for (block, radius) in structure.coarse_blocks().iter().zip(ctx.domain.radii()) {
        let cap = 0.8 * radius.to_f64();
        translation.extend(random_center(rng, block.len(), cap, ctx.mode));
    }
    DilationMap::scale_translate(structure, scales, translation).expect("positive scales")
}

/// Rejection-sample a configuration of the given arity at the given level.
pub fn random_config(
    rng: &mut ChaCha8Rng,
    ctx: &GenContext,
    arity: usize,
    level: MembershipLevel,
    params: &Params,
) -> Result<Config, Starvation> {
    // Radius window that leaves room for `arity` disks at the level.
    let (lo, hi) = match level {
        MembershipLevel::Ambient => (0.02, 0.35),
        MembershipLevel::Star => (0.02, 0.5 / arity.max(1) as f64),
        MembershipLevel::Separated => (0.005, 0.11 / arity.max(1) as f64),
    };
    for _ in 0..STARVATION_LIMIT {
        let maps = (0..arity)
            .map(|_| random_scale_translate(rng, ctx, lo, hi))
            .collect::<Vec<_>>();
        let cfg = Config::new(maps, ctx.domain.clone(), ctx.group.clone())
            .expect("generated maps share the context structure");
        if is_valid(&cfg, level, params) {
            return Ok(cfg);
        }
    }
    Err(Starvation {
        what: format!("random_config(arity={}, level={:?})", arity, level),
        limit: STARVATION_LIMIT,
    })
}

/// A random permutation of `{0..n}`.
pub fn random_perm(rng: &mut ChaCha8Rng, n: usize) -> Perm {
    let mut image: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        image.swap(i, j);
    }
    Perm::new(image).expect("shuffle is a bijection")
}

/// A random signed-permutation orthogonal map (valid in both modes).
pub fn random_signed_permutation(
    rng: &mut ChaCha8Rng,
    structure: &Arc<BlockStructure>,
    mode: NumericMode,
) -> OrthoMatrix {
    // Permute axes only within fine blocks so the result is always
    // block-compatible; flip signs freely.
    let dim = structure.dim();
    let mut perm: Vec<usize> = (0..dim).collect();
    for block in structure.fine_blocks() {
        let mut shuffled = block.clone();
        for i in (1..shuffled.len()).rev() {
            let j = rng.gen_range(0..=i);
            shuffled.swap(i, j);
        }
        for (&src, &dst) in block.iter().zip(&shuffled) {
            perm[src] = dst;
        }
    }
    let signs: Vec<i8> = (0..dim).map(|_| if rng.gen_bool(0.5) { 1 } else { -1 }).collect();
    OrthoMatrix::signed_permutation(&perm, &signs, mode)
}

/// The five-disk figure: three x-disks and two y-disks in the radius-3 plane
/// domain with intersection pairs {(1,1),(2,1),(3,2)} and partitions
/// L1={1,2}, L2={2}, R1={3}, R2={1} (1-based).
pub fn five_disk_figure(mode: NumericMode) -> (Config, Config) {
    let s = BlockStructure::spherical(2);
    let domain = ProductBall::origin(s.clone(), Scalar::from_int(3, mode));
    let group = GroupRep::trivial(s.clone(), mode);
    let mk = |sc: (i64, i64), tx: (i64, i64), ty: (i64, i64)| {
        DilationMap::scale_translate(
            s.clone(),
            vec![Scalar::ratio(sc.0, sc.1, mode)],
            vec![Scalar::ratio(tx.0, tx.1, mode), Scalar::ratio(ty.0, ty.1, mode)],
        )
        .unwrap()
    };
    let x = Config::new(
        vec![
            mk((1, 3), (-3, 2), (0, 1)),
            mk((1, 3), (1, 1), (1, 1)),
            mk((7, 30), (4, 5), (-9, 5)),
        ],
        domain.clone(),
        group.clone(),
    )
    .unwrap();
    let y = Config::new(
        vec![mk((1, 3), (-1, 2), (1, 1)), mk((1, 6), (3, 2), (-1, 1))],
        domain,
        group,
    )
    .unwrap();
    (x, y)
}

/// Build a separated pair with full correspondence: `groups` nesting groups,
/// each one large disk covering 1–3 small disks of the other configuration.
/// Returns `(x, y)`.
pub fn corresponding_separated_pair(
    rng: &mut ChaCha8Rng,
    ctx: &GenContext,
    groups: usize,
    params: &Params,
) -> Result<(Config, Config), Starvation> {
    assert!(
        ctx.domain.structure().coarse_count() == 1,
        "nesting generator works on a single spherical block"
    );
    let dim = ctx.domain.structure().dim();
    let domain_r = ctx.domain.radii()[0].to_f64();
    // Fixed, well-spread anchor directions (exact points on the unit
    // circle, at least 60 degrees apart).
    const DIRS: [(i64, i64, i64); 6] = [
        (1, 0, 1),
        (-3, 4, 5),
        (-3, -4, 5),
        (0, 1, 1),
        (-1, 0, 1),
        (4, -3, 5),
    ];
    'outer: for _ in 0..STARVATION_LIMIT {
        // Anchors spread apart; big disks small enough that enlarging them
        // by the separation constant keeps everything inside and disjoint
        // even for singleton groups (the regime where the separated
        // condition alone is vacuous).
        let mut x_maps = Vec::new();
        let mut y_maps = Vec::new();
        let big = 0.2 * domain_r / (5.0 * groups as f64);
        for gi in 0..groups {
            let anchor: Vec<Scalar> = if dim == 1 {
                let t = (-0.55 + 1.1 * (gi as f64 + 0.5) / groups as f64) * domain_r;
                vec![rational_in(rng, t - 0.01, t + 0.01, ctx.mode)]
            } else {
                let (dx, dy, dd) = DIRS[gi % DIRS.len()];
                let r_anchor = rational_in(
                    rng,
                    0.45 * domain_r,
                    0.6 * domain_r,
                    ctx.mode,
                );
                let mut v = vec![Scalar::zero(ctx.mode); dim];
                v[0] = Scalar::ratio(dx, dd, ctx.mode).mul(&r_anchor);
                v[1] = Scalar::ratio(dy, dd, ctx.mode).mul(&r_anchor);
                v
            };
            let big_r = log_uniform(rng, big * 0.5, big, ctx.mode);
            let minors = rng.gen_range(1..=3usize);
            let x_is_big = rng.gen_bool(0.5);
            let big_map = DilationMap::scale_translate(
                ctx.domain.structure().clone(),
                vec![big_r.div(&ctx.domain.radii()[0])],
                anchor.clone(),
            )
            .unwrap();
            // Minor disks sit at distance big_r/2 from the anchor, radius at
            // most big_r/26 so their 5x enlargements stay inside and apart.
            let mut minor_maps = Vec::new();
            for m in 0..minors {
                let dir = unit_at(m, minors, dim, ctx.mode, rng);
                let offset: Vec<Scalar> = dir
                    .iter()
                    .map(|d| d.mul(&big_r).div(&Scalar::from_int(2, ctx.mode)))
                    .collect();
                let center: Vec<Scalar> = anchor
                    .iter()
                    .zip(&offset)
                    .map(|(a, o)| a.add(o))
                    .collect();
                let r = log_uniform(rng, big_r.to_f64() / 60.0, big_r.to_f64() / 26.0, ctx.mode);
                minor_maps.push(
                    DilationMap::scale_translate(
                        ctx.domain.structure().clone(),
                        vec![r.div(&ctx.domain.radii()[0])],
                        center,
                    )
                    .unwrap(),
                );
            }
            if x_is_big {
                x_maps.push(big_map);
                y_maps.extend(minor_maps);
            } else {
                y_maps.push(big_map);
                x_maps.extend(minor_maps);
            }
        }
        let x = Config::new(x_maps, ctx.domain.clone(), ctx.group.clone()).unwrap();
        let y = Config::new(y_maps, ctx.domain.clone(), ctx.group.clone()).unwrap();
        if !is_valid(&x, MembershipLevel::Separated, params)
            || !is_valid(&y, MembershipLevel::Separated, params)
        {
            continue;
        }
        // The enlarged configurations must be star-valid outright; for
        // arities above 1 this is the separated condition, for singletons it
        // is an extra hypothesis the triangle construction needs.
        let sep = params.separation_scalar(ctx.mode);
        if !is_valid(&x.scaled_right(&sep), MembershipLevel::Star, params)
            || !is_valid(&y.scaled_right(&sep), MembershipLevel::Star, params)
        {
            continue;
        }
        // Full correspondence: every index must intersect something opposite.
        let data = match crate::divisibility::intersection_data(&x, &y, params) {
            Ok(d) => d,
            Err(_) => continue,
        };
        for i in 0..x.arity() {
            if data.relation[i].iter().all(|&h| !h) {
                continue 'outer;
            }
        }
        for j in 0..y.arity() {
            if (0..x.arity()).all(|i| !data.relation[i][j]) {
                continue 'outer;
            }
        }
        return Ok((x, y));
    }
    Err(Starvation {
        what: "corresponding_separated_pair".into(),
        limit: STARVATION_LIMIT,
    })
}

/// A rational unit-ish direction for minor disk `m` of `count`, spread far
/// apart. Uses a small table of exact directions in 2D and ±1 in 1D.
fn unit_at(
    m: usize,
    count: usize,
    dim: usize,
    mode: NumericMode,
    rng: &mut ChaCha8Rng,
) -> Vec<Scalar> {
    if dim == 1 {
        return vec![Scalar::from_int(if m % 2 == 0 { 1 } else { -1 }, mode)];
    }
    // Exact points on the unit circle roughly 120° apart.
    const TABLE: [(i64, i64, i64); 6] = [
        (1, 0, 1),     // (1, 0)
        (-3, 4, 5),    // (-3/5, 4/5)
        (-3, -4, 5),   // (-3/5, -4/5)
        (0, 1, 1),     // (0, 1)
        (-5, -12, 13), // (-5/13, -12/13)
        (12, -5, 13),  // (12/13, -5/13)
    ];
    let start = if count <= 3 { rng.gen_range(0..2) * 3 } else { 0 };
    let (a, b, d) = TABLE[(start + m) % TABLE.len()];
    let mut v = vec![Scalar::zero(mode); dim];
    v[0] = Scalar::ratio(a, d, mode);
    v[1] = Scalar::ratio(b, d, mode);
    v
}

/// Validate-and-wrap helper used by scene fixtures.
pub fn config_from_rationals(
    structure: &Arc<BlockStructure>,
    domain: &ProductBall,
    group: &Arc<GroupRep>,
    disks: &[(Vec<(i64, i64)>, (i64, i64))],
    mode: NumericMode,
) -> Result<Config, Error> {
    let maps = disks
        .iter()
        .map(|(center, scale)| {
            let translation = center
                .iter()
                .map(|&(p, q)| Scalar::ratio(p, q, mode))
                .collect();
            DilationMap::scale_translate(
                structure.clone(),
                vec![Scalar::ratio(scale.0, scale.1, mode); structure.coarse_count()],
                translation,
            )
        })
        .collect::<Result<Vec<_>, _>>()?;
    Config::new(maps, domain.clone(), group.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trial_rng_is_deterministic() {
        let mut a = trial_rng(42, "suite", 7);
        let mut b = trial_rng(42, "suite", 7);
        let va: u64 = a.gen();
        let vb: u64 = b.gen();
        assert_eq!(va, vb);
        let mut c = trial_rng(42, "suite", 8);
        let vc: u64 = c.gen();
        assert_ne!(va, vc);
    }

    #[test]
    fn random_configs_meet_their_level() {
        let params = Params::default();
        let ctx = GenContext::plane(NumericMode::Exact);
        for trial in 0..20 {
            let mut rng = trial_rng(1, "gen-test", trial);
            for level in [
                MembershipLevel::Ambient,
                MembershipLevel::Star,
                MembershipLevel::Separated,
            ] {
                let arity = (trial as usize % 3) + 1;
                let cfg = random_config(&mut rng, &ctx, arity, level, &params).unwrap();
                assert!(is_valid(&cfg, level, &params));
            }
        }
    }

    #[test]
    fn corresponding_pairs_satisfy_hypothesis() {
        let params = Params::default();
        let ctx = GenContext::plane(NumericMode::Exact);
        for trial in 0..10 {
            let mut rng = trial_rng(2, "gen-pair", trial);
            let (x, y) =
                corresponding_separated_pair(&mut rng, &ctx, 1 + (trial as usize % 2), &params)
                    .unwrap();
            assert!(crate::separated::is_separated(&x, &params));
            assert!(crate::separated::is_separated(&y, &params));
            let t = crate::separated::triangle_decomposition(&x, &y, &params);
            assert!(t.is_ok(), "triangle failed: {:?}", t.err());
        }
    }

    #[test]
    fn five_disk_figure_is_star_valid() {
        let params = Params::default();
        let (x, y) = five_disk_figure(NumericMode::Exact);
        assert!(is_valid(&x, MembershipLevel::Star, &params));
        assert!(is_valid(&y, MembershipLevel::Star, &params));
    }
}
