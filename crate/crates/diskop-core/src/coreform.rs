//! Critical elements of the product operad and additive-core normal forms.
//!
//! A star configuration over a product domain projects to each factor; the
//! overlap graphs of the two projections partition its arity. The element is
//! *critical* when every partition block has a nonempty common intersection
//! and a separated enclosing configuration (the separator pair). Critical
//! elements admit a unique core representation: a separated pair composed
//! with a grid of unary-or-nullary factor pairs. This module finds witnesses,
//! normalizes to the core form, and builds the common refinement of shrunk
//! configurations.

use crate::ball::{contains, intersects, ProductBall};
use crate::config::{is_valid, Config, MembershipLevel, Perm};
use crate::dilation::DilationMap;
use crate::divisibility::self_partition;
use crate::error::Error;
use crate::group::GroupRep;
use crate::params::Params;
use crate::scalar::{dot, norm2, vec_sub, NumericMode, Scalar};
use crate::separated::is_separated;
use crate::trees::{EdgeTarget, SuperTree, TreeVertex};
use std::cmp::Ordering;
use std::sync::Arc;

/// A criticality witness: the two projection partitions and the separated
/// pair enclosing them. Partition blocks are parallel to the separator slots.
#[derive(Debug, Clone)]
pub struct CriticalWitness {
    pub partition_v: Vec<Vec<usize>>,
    pub partition_w: Vec<Vec<usize>>,
    pub separator_a: Config,
    pub separator_b: Config,
}

/// An additive-core normal form: a separated pair, a grid of unary/nullary
/// factor pairs (`None` is the nullary pair), and the permutation relating
/// the row-major cell order to the original component order.
#[derive(Debug, Clone)]
pub struct CoreForm {
    pub sigma: Perm,
    pub a: Config,
    pub b: Config,
    pub factors: Vec<Vec<Option<(Config, Config)>>>,
}

/// Projection of a product-domain configuration onto a contiguous coarse
/// block range.
pub fn project_config(
    w: &Config,
    blocks: std::ops::Range<usize>,
    params: &Params,
) -> Result<Config, Error> {
    let maps = w
        .maps()
        .iter()
        .map(|m| m.restrict_coarse(blocks.clone()))
        .collect::<Result<Vec<_>, _>>()?;
    let domain = w.domain().restrict_coarse(blocks.clone());
    let group = w.group().restrict_coarse(blocks, params.tol)?;
    Config::new(maps, domain, group)
}

/// Decide whether a family of balls has a common point, coarse block by
/// coarse block. Exact mode decides dimension ≤ 2 blocks completely via
/// interval arithmetic and the planar Helly property; float mode runs a
/// subgradient descent on `max_k(|p−c_k| − r_k)`.
pub fn common_point_certificate(balls: &[ProductBall], params: &Params) -> Result<bool, Error> {
    if balls.len() <= 1 {
        return Ok(true);
    }
    let structure = balls[0].structure().clone();
    for c in 0..structure.coarse_count() {
        let members: Vec<(&[Scalar], &Scalar)> = balls
            .iter()
            .map(|b| (b.centers()[c].as_slice(), &b.radii()[c]))
            .collect();
        if !block_common_point(&members, params)? {
            return Ok(false);
        }
    }
    Ok(true)
}

fn block_common_point(members: &[(&[Scalar], &Scalar)], params: &Params) -> Result<bool, Error> {
    let mode = members[0].1.mode();
    // Pairwise strict intersection is necessary in every case.
    for i in 0..members.len() {
        for j in (i + 1)..members.len() {
            if !pair_strictly_intersect(members[i], members[j], params) {
                return Ok(false);
            }
        }
    }
    if members.len() <= 2 {
        return Ok(true);
    }
    match mode {
        NumericMode::Float => Ok(subgradient_feasible(members, params)),
        NumericMode::Exact => {
            let dim = members[0].0.len();
            match dim {
                1 => Ok(interval_common_point(members)),
                2 => {
                    // Helly in the plane: every triple must have a common
                    // point.
                    for i in 0..members.len() {
                        for j in (i + 1)..members.len() {
                            for k in (j + 1)..members.len() {
                                if !triple_common_point(members[i], members[j], members[k])? {
                                    return Ok(false);
                                }
                            }
                        }
                    }
                    Ok(true)
                }
                d => Err(Error::ExactCertificateUnsupported(format!(
                    "{} balls in dimension {}",
                    members.len(),
                    d
                ))),
            }
        }
    }
}

fn pair_strictly_intersect(
    a: (&[Scalar], &Scalar),
    b: (&[Scalar], &Scalar),
    params: &Params,
) -> bool {
    let d2 = norm2(&vec_sub(a.0, b.0));
    let sum = a.1.add(b.1);
    // Open balls: tangency does not intersect.
    !d2.ge(&sum.square(), params.tol)
}

fn interval_common_point(members: &[(&[Scalar], &Scalar)]) -> bool {
    let mut lo: Option<Scalar> = None;
    let mut hi: Option<Scalar> = None;
    for (c, r) in members {
        let l = c[0].sub(r);
        let h = c[0].add(r);
        lo = Some(match lo {
            None => l,
            Some(old) => {
                if old.cmp_strict(&l) == Ordering::Less {
                    l
                } else {
                    old
                }
            }
        });
        hi = Some(match hi {
            None => h,
            Some(old) => {
                if old.cmp_strict(&h) == Ordering::Greater {
                    h
                } else {
                    old
                }
            }
        });
    }
    lo.unwrap().cmp_strict(&hi.unwrap()) == Ordering::Less
}

/// Sign of `p − q·√n` for exact scalars, `n ≥ 0`.
fn sign_minus_surd(p: &Scalar, q: &Scalar, n: &Scalar) -> Ordering {
    let zero = Scalar::zero(p.mode());
    if q.is_zero() || n.is_zero() {
        return p.cmp_strict(&zero);
    }
    let p_sign = p.cmp_strict(&zero);
    let q_sign = q.cmp_strict(&zero);
    match (p_sign, q_sign) {
        (Ordering::Less | Ordering::Equal, Ordering::Greater) => Ordering::Less,
        (Ordering::Greater | Ordering::Equal, Ordering::Less) => Ordering::Greater,
        _ => {
            // p and q share a strict sign; compare squares.
            let lhs = p.square();
            let rhs = q.square().mul(n);
            let cmp = lhs.cmp_strict(&rhs);
            if p_sign == Ordering::Greater {
                cmp
            } else {
                cmp.reverse()
            }
        }
    }
}

/// Exact common-point decision for three pairwise-intersecting open disks in
/// the plane: the closed lens of the first two must come closer than `r₃` to
/// `c₃`.
fn triple_common_point(
    d1: (&[Scalar], &Scalar),
    d2: (&[Scalar], &Scalar),
    d3: (&[Scalar], &Scalar),
) -> Result<bool, Error> {
    let (c1, r1) = d1;
    let (c2, r2) = d2;
    let (c3, r3) = d3;
    let inside = |c: &[Scalar], r: &Scalar| {
        // c3 within the closed disk (c, r).
        norm2(&vec_sub(c3, c)).cmp_strict(&r.square()) != Ordering::Greater
    };
    if inside(c1, r1) && inside(c2, r2) {
        return Ok(true);
    }
    // Candidate: radial projection onto circle k, valid inside the other
    // closed disk; distance to c3 is |√N − r| with N = |c3−c_k|².
    let radial = |ck: &[Scalar], rk: &Scalar, other_c: &[Scalar], other_r: &Scalar| -> bool {
        let delta = vec_sub(c3, ck);
        let n = norm2(&delta);
        if n.is_zero() {
            return false;
        }
        // x = ck + rk·δ/√N ∈ other closed disk:
        // |ck−oc|² + rk² + 2rk(ck−oc)·δ/√N ≤ or²
        // ⟺ (|ck−oc|² + rk² − or²) + (2rk(ck−oc)·δ/N)·√N ≤ 0.
        let co = vec_sub(ck, other_c);
        let base = norm2(&co).add(&rk.square()).sub(&other_r.square());
        let lin = Scalar::from_int(2, n.mode())
            .mul(rk)
            .mul(&dot(&co, &delta))
            .div(&n);
        // base + lin·√N ≤ 0 ⟺ sign of (−base) − lin·√N ≥ 0.
        if sign_minus_surd(&base.neg(), &lin, &n) == Ordering::Less {
            return false;
        }
        // Distance test: |√N − rk| < r3 ⟺ N + rk² − r3² < 2rk√N.
        let p = n.add(&rk.square()).sub(&r3.square());
        let q = Scalar::from_int(2, n.mode()).mul(rk);
        sign_minus_surd(&p, &q, &n) == Ordering::Less
    };
    if radial(c1, r1, c2, r2) || radial(c2, r2, c1, r1) {
        return Ok(true);
    }
    // Candidate: the lens vertices v± = m ± τ·w with m the radical foot,
    // w ⟂ (c2−c1) and τ² = (r1² − a²D)/D.
    let delta = vec_sub(c2, c1);
    let dd = norm2(&delta);
    if dd.is_zero() {
        return Ok(false);
    }
    let two = Scalar::from_int(2, dd.mode());
    let a = dd.add(&r1.square()).sub(&r2.square()).div(&two.mul(&dd));
    let tau2 = r1.square().sub(&a.square().mul(&dd)).div(&dd);
    if !tau2.is_positive() {
        return Ok(false);
    }
    let m = [c1[0].add(&a.mul(&delta[0])), c1[1].add(&a.mul(&delta[1]))];
    let w = [delta[1].neg(), delta[0].clone()];
    let cm = vec_sub(c3, &m);
    let base = norm2(&cm).add(&tau2.mul(&dd)).sub(&r3.square());
    let b_coef = two.mul(&dot(&cm, &w));
    // |c3 − v±|² − r3² = base ∓ b_coef·τ where τ = √τ².
    for sign in [1i64, -1] {
        let q = if sign > 0 { b_coef.clone() } else { b_coef.neg() };
        if sign_minus_surd(&base, &q, &tau2) == Ordering::Less {
            return Ok(true);
        }
    }
    Ok(false)
}

/// 200-step subgradient descent on `f(p) = max_k(|p−c_k| − r_k)` from the
/// centroid; feasible when the best value drops below the tolerance.
fn subgradient_feasible(members: &[(&[Scalar], &Scalar)], params: &Params) -> bool {
    let dim = members[0].0.len();
    let n = members.len() as f64;
    let centers: Vec<Vec<f64>> = members
        .iter()
        .map(|(c, _)| c.iter().map(Scalar::to_f64).collect())
        .collect();
    let radii: Vec<f64> = members.iter().map(|(_, r)| r.to_f64()).collect();
    let mut p: Vec<f64> = (0..dim)
        .map(|ax| centers.iter().map(|c| c[ax]).sum::<f64>() / n)
        .collect();
    let eval = |p: &[f64]| -> (f64, usize) {
        let mut worst = f64::NEG_INFINITY;
        let mut arg = 0;
        for (k, (c, r)) in centers.iter().zip(&radii).enumerate() {
            let d = p
                .iter()
                .zip(c)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            let v = d - r;
            if v > worst {
                worst = v;
                arg = k;
            }
        }
        (worst, arg)
    };
    let scale = centers
        .iter()
        .flat_map(|c| c.iter().zip(&p).map(|(a, b)| (a - b).abs()))
        .fold(0.1_f64, f64::max);
    let (mut best, _) = eval(&p);
    for t in 0..200 {
        let (value, arg) = eval(&p);
        if value < best {
            best = value;
        }
        if best < -params.tol {
            return true;
        }
        let c = &centers[arg];
        let d = p
            .iter()
            .zip(c)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if d == 0.0 {
            continue;
        }
        let eta = scale / (t as f64 + 2.0);
        for (pi, ci) in p.iter_mut().zip(c) {
            *pi -= eta * (*pi - ci) / d;
        }
    }
    best < params.tol
}

/// Smallest (float, Welzl-style) or small-enough (exact, midpoint bound)
/// enclosing ball of a family of balls in one coarse block. Returns
/// `(center, radius)` with every member contained.
pub fn enclosing_ball(
    centers: &[Vec<Scalar>],
    radii: &[Scalar],
    mode: NumericMode,
) -> (Vec<Scalar>, Scalar) {
    assert!(!centers.is_empty());
    if centers.len() == 1 {
        return (centers[0].clone(), radii[0].clone());
    }
    match mode {
        NumericMode::Float => welzl_balls(centers, radii),
        NumericMode::Exact => {
            // Midpoint of the (approximately) furthest pair, grown by exact
            // square-root upper bounds until everything fits.
            let mut best = (0usize, 1usize);
            let mut best_val = f64::NEG_INFINITY;
            for i in 0..centers.len() {
                for j in (i + 1)..centers.len() {
                    let d = norm2(&vec_sub(&centers[i], &centers[j])).to_f64().sqrt();
                    let v = d + radii[i].to_f64() + radii[j].to_f64();
                    if v > best_val {
                        best_val = v;
                        best = (i, j);
                    }
                }
            }
            let two = Scalar::from_int(2, mode);
            let center: Vec<Scalar> = centers[best.0]
                .iter()
                .zip(&centers[best.1])
                .map(|(a, b)| a.add(b).div(&two))
                .collect();
            let mut radius = Scalar::zero(mode);
            for (c, r) in centers.iter().zip(radii) {
                let reach = norm2(&vec_sub(c, &center)).sqrt_upper().add(r);
                if reach.cmp_strict(&radius) == Ordering::Greater {
                    radius = reach;
                }
            }
            (center, radius)
        }
    }
}

/// Welzl-style incremental smallest enclosing ball of balls (float mode),
/// with a verification/inflation pass.
fn welzl_balls(centers: &[Vec<Scalar>], radii: &[Scalar]) -> (Vec<Scalar>, Scalar) {
    let dim = centers[0].len();
    let pts: Vec<Vec<f64>> = centers
        .iter()
        .map(|c| c.iter().map(Scalar::to_f64).collect())
        .collect();
    let rs: Vec<f64> = radii.iter().map(Scalar::to_f64).collect();
    // Deterministic processing order (index shuffle from a fixed LCG).
    let mut order: Vec<usize> = (0..pts.len()).collect();
    let mut state = 0x9e3779b97f4a7c15u64;
    for i in (1..order.len()).rev() {
        state = state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        let j = (state >> 33) as usize % (i + 1);
        order.swap(i, j);
    }
    let mut ball: Option<(Vec<f64>, f64)> = None;
    for (idx, &i) in order.iter().enumerate() {
        if enclosed(&pts[i], rs[i], &ball) {
            continue;
        }
        ball = welzl_with(&pts, &rs, &order[..idx], &mut vec![i], dim);
    }
    let (mut center, mut radius) = ball.unwrap_or((pts[0].clone(), rs[0]));
    // Inflate to certainty.
    for (p, r) in pts.iter().zip(&rs) {
        let d = dist(&center, p) + r;
        if d > radius {
            radius = d;
        }
    }
    radius *= 1.0 + 1e-12;
    (
        center.drain(..).map(Scalar::Float).collect(),
        Scalar::Float(radius),
    )
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn enclosed(p: &[f64], r: f64, ball: &Option<(Vec<f64>, f64)>) -> bool {
    match ball {
        None => false,
        Some((c, rad)) => dist(p, c) + r <= rad + 1e-12,
    }
}

fn welzl_with(
    pts: &[Vec<f64>],
    rs: &[f64],
    candidates: &[usize],
    support: &mut Vec<usize>,
    dim: usize,
) -> Option<(Vec<f64>, f64)> {
    let mut ball = solve_support(pts, rs, support);
    if support.len() == dim + 1 {
        return ball;
    }
    for (idx, &i) in candidates.iter().enumerate() {
        if enclosed(&pts[i], rs[i], &ball) {
            continue;
        }
        support.push(i);
        ball = welzl_with(pts, rs, &candidates[..idx], support, dim);
        support.pop();
    }
    ball
}

/// Ball internally tangent to every support ball: eliminate the quadratic
/// terms pairwise, solve the remaining linear system for the center as an
/// affine function of the radius, and close with one quadratic.
fn solve_support(pts: &[Vec<f64>], rs: &[f64], support: &[usize]) -> Option<(Vec<f64>, f64)> {
    match support.len() {
        0 => None,
        1 => Some((pts[support[0]].clone(), rs[support[0]])),
        _ => {
            let m = support.len() - 1;
            let c0 = &pts[support[0]];
            let r0 = rs[support[0]];
            let d: Vec<Vec<f64>> = support[1..]
                .iter()
                .map(|&i| pts[i].iter().zip(c0).map(|(a, b)| a - b).collect())
                .collect();
            let rho: Vec<f64> = support[1..].iter().map(|&i| rs[i] - r0).collect();
            let gamma: Vec<f64> = support[1..]
                .iter()
                .zip(&d)
                .map(|(&i, di)| {
                    let dd: f64 = di.iter().map(|x| x * x).sum();
                    dd + r0 * r0 - rs[i] * rs[i]
                })
                .collect();
            let mut g = vec![vec![0.0; m]; m];
            for i in 0..m {
                for j in 0..m {
                    g[i][j] = d[i].iter().zip(&d[j]).map(|(a, b)| a * b).sum();
                }
            }
            // λ = λa + R·λb with 2Gλa = γ and Gλb = ρ.
            let half_gamma: Vec<f64> = gamma.iter().map(|x| x / 2.0).collect();
            let lambda_a = solve_linear(&g, &half_gamma)?;
            let lambda_b = solve_linear(&g, &rho)?;
            let mut qa2 = 0.0;
            let mut qb2 = 0.0;
            let mut qc2 = 0.0;
            for i in 0..m {
                for j in 0..m {
                    qa2 += lambda_a[i] * g[i][j] * lambda_a[j];
                    qb2 += 2.0 * lambda_a[i] * g[i][j] * lambda_b[j];
                    qc2 += lambda_b[i] * g[i][j] * lambda_b[j];
                }
            }
            // qa2 + qb2·R + qc2·R² = (R − r0)².
            let qa = qc2 - 1.0;
            let qb = qb2 + 2.0 * r0;
            let qc = qa2 - r0 * r0;
            let min_r = support.iter().map(|&i| rs[i]).fold(0.0, f64::max);
            let mut roots = Vec::new();
            if qa.abs() < 1e-14 {
                if qb.abs() > 1e-14 {
                    roots.push(-qc / qb);
                }
            } else {
                let disc = qb * qb - 4.0 * qa * qc;
                if disc < 0.0 {
                    return None;
                }
                let s = disc.sqrt();
                roots.push((-qb + s) / (2.0 * qa));
                roots.push((-qb - s) / (2.0 * qa));
            }
            let radius = roots
                .into_iter()
                .filter(|r| *r >= min_r - 1e-12 && r.is_finite())
                .fold(f64::INFINITY, f64::min);
            if !radius.is_finite() {
                return None;
            }
            let mut center = c0.clone();
            for i in 0..m {
                let li = lambda_a[i] + radius * lambda_b[i];
                for (ax, di) in center.iter_mut().zip(&d[i]) {
                    *ax += li * di;
                }
            }
            Some((center, radius))
        }
    }
}

fn solve_linear(g: &[Vec<f64>], rhs: &[f64]) -> Option<Vec<f64>> {
    let n = rhs.len();
    let mut a: Vec<Vec<f64>> = g.to_vec();
    let mut b = rhs.to_vec();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| {
            a[i][col]
                .abs()
                .partial_cmp(&a[j][col].abs())
                .unwrap_or(Ordering::Equal)
        })?;
        if a[pivot][col].abs() < 1e-13 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    Some((0..n).map(|i| b[i] / a[i][i]).collect())
}

/// Build the separator configuration of one factor from partition blocks of
/// member images.
fn build_separator(
    factor_domain: &ProductBall,
    factor_group: &Arc<GroupRep>,
    images: &[ProductBall],
    blocks: &[Vec<usize>],
    mode: NumericMode,
    factor: &'static str,
    params: &Params,
) -> Result<Config, Error> {
    let structure = factor_domain.structure().clone();
    let mut maps = Vec::with_capacity(blocks.len());
    for block in blocks {
        let mut scales = Vec::new();
        let mut translation = Vec::new();
        for c in 0..structure.coarse_count() {
            let centers: Vec<Vec<Scalar>> = block
                .iter()
                .map(|&k| images[k].centers()[c].clone())
                .collect();
            let radii: Vec<Scalar> = block
                .iter()
                .map(|&k| images[k].radii()[c].clone())
                .collect();
            let (center, radius) = enclosing_ball(&centers, &radii, mode);
            scales.push(radius.div(&factor_domain.radii()[c]));
            translation.extend(center);
        }
        maps.push(DilationMap::scale_translate(
            structure.clone(),
            scales,
            translation,
        )?);
    }
    let separator = Config::new(maps, factor_domain.clone(), factor_group.clone())?;
    // Every member ball must land inside its block's separator ball.
    let sep_images = separator.images();
    for (bi, block) in blocks.iter().enumerate() {
        for &k in block {
            if !contains(&images[k], &sep_images[bi], params.tol) {
                return Err(Error::NoSeparatedEnclosure { factor });
            }
        }
    }
    if !is_separated(&separator, params) {
        return Err(Error::NoSeparatedEnclosure { factor });
    }
    Ok(separator)
}

/// Criticality test. `v_blocks` is the number of leading coarse blocks that
/// form the first factor. Returns a witness or the reason none was found.
pub fn criticality(w: &Config, v_blocks: usize, params: &Params) -> Result<CriticalWitness, Error> {
    let total = w.domain().structure().coarse_count();
    if v_blocks == 0 || v_blocks >= total {
        return Err(Error::BlockMismatch(format!(
            "factor split {} out of range for {} coarse blocks",
            v_blocks, total
        )));
    }
    if !is_valid(w, MembershipLevel::Star, params) {
        return Err(Error::NotStarValid);
    }
    let pr_v = project_config(w, 0..v_blocks, params)?;
    let pr_w = project_config(w, v_blocks..total, params)?;
    let images_v = pr_v.images();
    let images_w = pr_w.images();
    let partition_v = self_partition(&images_v, params.tol);
    let partition_w = self_partition(&images_w, params.tol);
    for (bi, block) in partition_v.iter().enumerate() {
        let balls: Vec<ProductBall> = block.iter().map(|&k| images_v[k].clone()).collect();
        if !common_point_certificate(&balls, params)? {
            return Err(Error::EmptyCommonIntersection {
                factor: "V",
                block: bi,
            });
        }
    }
    for (bi, block) in partition_w.iter().enumerate() {
        let balls: Vec<ProductBall> = block.iter().map(|&k| images_w[k].clone()).collect();
        if !common_point_certificate(&balls, params)? {
            return Err(Error::EmptyCommonIntersection {
                factor: "W",
                block: bi,
            });
        }
    }
    let separator_a = build_separator(
        pr_v.domain(),
        pr_v.group(),
        &images_v,
        &partition_v,
        w.mode(),
        "V",
        params,
    )?;
    let separator_b = build_separator(
        pr_w.domain(),
        pr_w.group(),
        &images_w,
        &partition_w,
        w.mode(),
        "W",
        params,
    )?;
    Ok(CriticalWitness {
        partition_v,
        partition_w,
        separator_a,
        separator_b,
    })
}

impl CoreForm {
    pub fn rows(&self) -> usize {
        self.a.arity()
    }

    pub fn cols(&self) -> usize {
        self.b.arity()
    }

    /// Row-major list of the nonempty cells.
    pub fn occupied_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                if self.factors[i][j].is_some() {
                    out.push((i, j));
                }
            }
        }
        out
    }

    pub fn arity(&self) -> usize {
        self.occupied_cells().len()
    }

    /// The core tree: a root corolla decorated by the separated pair, with a
    /// unary corolla (or a stump) hanging off every grid cell. Input indices
    /// realize σ.
    pub fn to_tree(&self) -> SuperTree {
        let rows = self.rows();
        let cols = self.cols();
        let mut vertices = vec![TreeVertex {
            white: rows,
            black: cols,
            xi: (0..rows * cols).collect(),
            edges: vec![EdgeTarget::Input(0); rows * cols],
            p: self.a.clone(),
            q: self.b.clone(),
        }];
        let mut rank = 0usize;
        for i in 0..rows {
            for j in 0..cols {
                let slot = i * cols + j;
                match &self.factors[i][j] {
                    Some((c, d)) => {
                        vertices.push(TreeVertex {
                            white: 1,
                            black: 1,
                            xi: vec![0],
                            edges: vec![EdgeTarget::Input(self.sigma.apply(rank))],
                            p: c.clone(),
                            q: d.clone(),
                        });
                        rank += 1;
                    }
                    None => {
                        vertices.push(TreeVertex {
                            white: 0,
                            black: 0,
                            xi: vec![],
                            edges: vec![],
                            p: Config::nullary(self.a.domain().clone(), self.a.group().clone()),
                            q: Config::nullary(self.b.domain().clone(), self.b.group().clone()),
                        });
                    }
                }
                let child = vertices.len() - 1;
                vertices[0].edges[slot] = EdgeTarget::Child(child);
            }
        }
        SuperTree {
            vertices,
            root: 0,
            inputs: rank,
        }
    }

    pub fn eq_tol(&self, other: &CoreForm, tol: f64) -> bool {
        if self.sigma != other.sigma
            || !self.a.eq_tol(&other.a, tol)
            || !self.b.eq_tol(&other.b, tol)
            || self.rows() != other.rows()
            || self.cols() != other.cols()
        {
            return false;
        }
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                match (&self.factors[i][j], &other.factors[i][j]) {
                    (None, None) => {}
                    (Some((c1, d1)), Some((c2, d2))) => {
                        if !c1.eq_tol(c2, tol) || !d1.eq_tol(d2, tol) {
                            return false;
                        }
                    }
                    _ => return false,
                }
            }
        }
        true
    }
}

/// Normalize a critical element to its core form along a witness: each
/// component lands in the unique grid cell given by its two partition
/// blocks; unary factors are solved by cancellation against the separator;
/// the result is re-evaluated and compared against `w`.
pub fn core_normal_form(
    w: &Config,
    witness: &CriticalWitness,
    params: &Params,
) -> Result<CoreForm, Error> {
    let rows = witness.separator_a.arity();
    let cols = witness.separator_b.arity();
    if witness.partition_v.len() != rows || witness.partition_w.len() != cols {
        return Err(Error::Invalid(
            "witness partitions do not match separator arities".into(),
        ));
    }
    let v_blocks = witness.separator_a.domain().structure().coarse_count();
    let total = w.domain().structure().coarse_count();
    let pr_v = project_config(w, 0..v_blocks, params)?;
    let pr_w = project_config(w, v_blocks..total, params)?;

    let mut row_of = vec![usize::MAX; w.arity()];
    for (bi, block) in witness.partition_v.iter().enumerate() {
        for &k in block {
            row_of[k] = bi;
        }
    }
    let mut col_of = vec![usize::MAX; w.arity()];
    for (bj, block) in witness.partition_w.iter().enumerate() {
        for &k in block {
            col_of[k] = bj;
        }
    }
    if row_of.contains(&usize::MAX) || col_of.contains(&usize::MAX) {
        return Err(Error::Invalid(
            "witness partitions do not cover the arity".into(),
        ));
    }

    let mut cell_component: Vec<Vec<Option<usize>>> = vec![vec![None; cols]; rows];
    for k in 0..w.arity() {
        let (i, j) = (row_of[k], col_of[k]);
        if let Some(first) = cell_component[i][j] {
            return Err(Error::StraddledCell {
                first,
                second: k,
                row: i,
                col: j,
            });
        }
        cell_component[i][j] = Some(k);
    }
    // Row/column nonemptiness.
    for i in 0..rows {
        if (0..cols).all(|j| cell_component[i][j].is_none()) {
            return Err(Error::EmptyLine {
                which: "row",
                index: i,
            });
        }
    }
    for j in 0..cols {
        if (0..rows).all(|i| cell_component[i][j].is_none()) {
            return Err(Error::EmptyLine {
                which: "column",
                index: j,
            });
        }
    }

    let mut factors: Vec<Vec<Option<(Config, Config)>>> = vec![vec![None; cols]; rows];
    let mut sigma_image_by_rank = Vec::new();
    for i in 0..rows {
        for j in 0..cols {
            if let Some(k) = cell_component[i][j] {
                let c_map = witness.separator_a.map(i).invert().compose(pr_v.map(k));
                let d_map = witness.separator_b.map(j).invert().compose(pr_w.map(k));
                let c = Config::new(
                    vec![c_map],
                    witness.separator_a.domain().clone(),
                    witness.separator_a.group().clone(),
                )?;
                let d = Config::new(
                    vec![d_map],
                    witness.separator_b.domain().clone(),
                    witness.separator_b.group().clone(),
                )?;
                for (slot, cfg) in [(0usize, &c), (1, &d)] {
                    if !is_valid(cfg, MembershipLevel::Ambient, params) {
                        return Err(Error::QuotientValidation {
                            slot,
                            level: MembershipLevel::Ambient,
                        });
                    }
                }
                factors[i][j] = Some((c, d));
                sigma_image_by_rank.push(k);
            }
        }
    }
    let sigma = Perm::new(sigma_image_by_rank)?;
    let form = CoreForm {
        sigma,
        a: witness.separator_a.clone(),
        b: witness.separator_b.clone(),
        factors,
    };
    let recomposed = crate::trees::tree_evaluate(&form.to_tree(), params)?;
    if !recomposed.eq_tol(w, params.tol) {
        return Err(Error::Recomposition { component: 0 });
    }
    Ok(form)
}

/// The witness a core form induces on its own evaluation: partitions from
/// the grid rows/columns through σ, separator the pair itself.
pub fn witness_of_core_form(form: &CoreForm) -> CriticalWitness {
    let cells = form.occupied_cells();
    let mut partition_v = vec![Vec::new(); form.rows()];
    let mut partition_w = vec![Vec::new(); form.cols()];
    for (rank, (i, j)) in cells.iter().enumerate() {
        let k = form.sigma.apply(rank);
        partition_v[*i].push(k);
        partition_w[*j].push(k);
    }
    for block in partition_v.iter_mut().chain(partition_w.iter_mut()) {
        block.sort_unstable();
    }
    CriticalWitness {
        partition_v,
        partition_w,
        separator_a: form.a.clone(),
        separator_b: form.b.clone(),
    }
}

/// The common refinement of a family of shrunk star configurations over one
/// spherical factor: one separated configuration `e` dividing every member,
/// with the dividing permutations and unary/nullary factors.
#[derive(Debug, Clone)]
pub struct CommonRefinement {
    pub refined: Config,
    pub per_config: Vec<RefinementFactors>,
}

#[derive(Debug, Clone)]
pub struct RefinementFactors {
    pub sigma: Perm,
    pub factors: Vec<Config>,
}

pub fn common_refinement(configs: &[Config], params: &Params) -> Result<CommonRefinement, Error> {
    if configs.is_empty() {
        return Err(Error::Invalid("common refinement of an empty family".into()));
    }
    let domain = configs[0].domain().clone();
    let group = configs[0].group().clone();
    if domain.structure().coarse_count() != 1 {
        return Err(Error::Invalid(
            "common refinement needs a single spherical block".into(),
        ));
    }
    let shrink = params.shrink_scalar(configs[0].mode());
    for (i, cfg) in configs.iter().enumerate() {
        if !cfg.domain().eq_tol(&domain, params.tol) {
            return Err(Error::DomainMismatch(format!("config {}", i)));
        }
        if !crate::flows::shrunk_membership(cfg, &shrink, params) {
            return Err(Error::NotShrunk(i));
        }
    }
    // Flatten all disks.
    let mut owners: Vec<(usize, usize)> = Vec::new();
    let mut images: Vec<ProductBall> = Vec::new();
    for (ci, cfg) in configs.iter().enumerate() {
        for (k, img) in cfg.images().into_iter().enumerate() {
            owners.push((ci, k));
            images.push(img);
        }
    }
    // Transitive intersections across the family.
    let n = images.len();
    for a in 0..n {
        for b in 0..n {
            for c in 0..n {
                if a != b
                    && b != c
                    && a != c
                    && intersects(&images[a], &images[b], params.tol)
                    && intersects(&images[b], &images[c], params.tol)
                    && !intersects(&images[a], &images[c], params.tol)
                {
                    return Err(Error::NonTransitive(format!(
                        "disks {:?}, {:?}, {:?}",
                        owners[a], owners[b], owners[c]
                    )));
                }
            }
        }
    }
    let classes = self_partition(&images, params.tol);
    // Largest-diameter representative per class (least index breaks ties).
    let sep = params.separation_scalar(configs[0].mode());
    let mut class_reps = Vec::with_capacity(classes.len());
    for class in &classes {
        let rep = class
            .iter()
            .copied()
            .max_by(|&i, &j| {
                images[i].radii()[0]
                    .cmp_strict(&images[j].radii()[0])
                    .then(j.cmp(&i))
            })
            .expect("classes are nonempty");
        class_reps.push(rep);
    }
    let refined_maps: Vec<DilationMap> = class_reps
        .iter()
        .map(|&rep| {
            let (ci, k) = owners[rep];
            configs[ci].map(k).scaled_right(&sep)
        })
        .collect();
    let refined = Config::new(refined_maps, domain.clone(), group.clone())?;
    if !is_separated(&refined, params) {
        return Err(Error::Invalid(
            "refined configuration is not separated (inputs outside the shrunk class?)".into(),
        ));
    }

    // Class index per flattened disk.
    let mut class_of = vec![usize::MAX; n];
    for (l, class) in classes.iter().enumerate() {
        for &d in class {
            class_of[d] = l;
        }
    }
    let refined_images = refined.images();
    let mut per_config = Vec::with_capacity(configs.len());
    for (ci, cfg) in configs.iter().enumerate() {
        // Classes of this config's disks, in component order (distinct by
        // transitivity + star validity).
        let mut disk_classes = Vec::with_capacity(cfg.arity());
        for k in 0..cfg.arity() {
            let flat = owners
                .iter()
                .position(|&(c, kk)| c == ci && kk == k)
                .expect("every disk was flattened");
            disk_classes.push(class_of[flat]);
        }
        {
            let mut sorted = disk_classes.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted.len() != disk_classes.len() {
                return Err(Error::Invalid(format!(
                    "config {} has two disks in one intersection class",
                    ci
                )));
            }
        }
        // σ puts class l_t at slot t (t < arity), remaining classes after in
        // increasing order.
        let mut image = vec![usize::MAX; refined.arity()];
        for (t, &l) in disk_classes.iter().enumerate() {
            image[l] = t;
        }
        let mut next = cfg.arity();
        for slot in image.iter_mut() {
            if *slot == usize::MAX {
                *slot = next;
                next += 1;
            }
        }
        let sigma = Perm::new(image)?;
        let mut factors = Vec::with_capacity(refined.arity());
        for t in 0..refined.arity() {
            if t < cfg.arity() {
                let l = disk_classes[t];
                let map = refined.map(l).invert().compose(cfg.map(t));
                let f = Config::new(vec![map], domain.clone(), group.clone())?;
                if !is_valid(&f, MembershipLevel::Ambient, params) {
                    return Err(Error::QuotientValidation {
                        slot: t,
                        level: MembershipLevel::Ambient,
                    });
                }
                factors.push(f);
            } else {
                factors.push(Config::nullary(domain.clone(), group.clone()));
            }
        }
        // e^i = (σ_i · e) ∘ (factors).
        let acted = refined.act(&sigma, group.identity(), params)?;
        let recomposed = crate::config::compose_standard(&acted, &factors)?;
        if !recomposed.eq_tol(cfg, params.tol) {
            return Err(Error::Recomposition { component: ci });
        }
        // Every disk sits inside its class representative ball.
        for (t, &l) in disk_classes.iter().enumerate() {
            let img = cfg.map(t).image(&domain);
            if !contains(&img, &refined_images[l], params.tol) {
                return Err(Error::Invalid(format!(
                    "disk {} of config {} escapes its class ball",
                    t, ci
                )));
            }
        }
        per_config.push(RefinementFactors { sigma, factors });
    }
    Ok(CommonRefinement {
        refined,
        per_config,
    })
}

/// Random canonical core form: a concentric-anchored grid over a separated
/// pair, pushed through criticality and normalization so that the result is
/// a fixed point of the normal-form map.
pub fn random_core_form(
    rng: &mut rand_chacha::ChaCha8Rng,
    ctx_v: &crate::gen::GenContext,
    ctx_w: &crate::gen::GenContext,
    params: &Params,
) -> Result<CoreForm, crate::gen::Starvation> {
    use rand::Rng;
    for _ in 0..crate::gen::STARVATION_LIMIT {
        let rows = rng.gen_range(1..=2usize);
        let cols = rng.gen_range(1..=2usize);
        let a = crate::gen::random_config(rng, ctx_v, rows, MembershipLevel::Separated, params)?;
        let b = crate::gen::random_config(rng, ctx_w, cols, MembershipLevel::Separated, params)?;
        // Cell occupancy with full rows and columns.
        let mut occupied = vec![vec![false; cols]; rows];
        for row in occupied.iter_mut() {
            row[rng.gen_range(0..cols)] = true;
        }
        for j in 0..cols {
            if !(0..rows).any(|i| occupied[i][j]) {
                occupied[rng.gen_range(0..rows)][j] = true;
            }
        }
        // Per-row anchors in the V factor, per-column anchors in W; all cell
        // factors are concentric at their anchors so the projections of one
        // row/column overlap with a common point.
        let anchor_v: Vec<Vec<Scalar>> = (0..rows)
            .map(|_| {
                (0..ctx_v.domain.structure().dim())
                    .map(|_| crate::gen::rational_in(rng, -0.3, 0.3, ctx_v.mode))
                    .collect()
            })
            .collect();
        let anchor_w: Vec<Vec<Scalar>> = (0..cols)
            .map(|_| {
                (0..ctx_w.domain.structure().dim())
                    .map(|_| crate::gen::rational_in(rng, -0.3, 0.3, ctx_w.mode))
                    .collect()
            })
            .collect();
        let mut factors: Vec<Vec<Option<(Config, Config)>>> = vec![vec![None; cols]; rows];
        for (i, anchor) in anchor_v.iter().enumerate() {
            for (j, anchor_col) in anchor_w.iter().enumerate() {
                if !occupied[i][j] {
                    continue;
                }
                let sc = crate::gen::log_uniform(rng, 0.05, 0.3, ctx_v.mode);
                let sd = crate::gen::log_uniform(rng, 0.05, 0.3, ctx_w.mode);
                let c = Config::new(
                    vec![DilationMap::scale_translate(
                        ctx_v.domain.structure().clone(),
                        vec![sc; ctx_v.domain.structure().coarse_count()],
                        anchor.clone(),
                    )
                    .expect("positive scale")],
                    ctx_v.domain.clone(),
                    ctx_v.group.clone(),
                )
                .expect("context config");
                let d = Config::new(
                    vec![DilationMap::scale_translate(
                        ctx_w.domain.structure().clone(),
                        vec![sd; ctx_w.domain.structure().coarse_count()],
                        anchor_col.clone(),
                    )
                    .expect("positive scale")],
                    ctx_w.domain.clone(),
                    ctx_w.group.clone(),
                )
                .expect("context config");
                factors[i][j] = Some((c, d));
            }
        }
        let arity: usize = factors.iter().flatten().filter(|cell| cell.is_some()).count();
        let sigma = crate::gen::random_perm(rng, arity);
        let candidate = CoreForm {
            sigma,
            a,
            b,
            factors,
        };
        let w = match crate::trees::tree_evaluate(&candidate.to_tree(), params) {
            Ok(w) => w,
            Err(_) => continue,
        };
        if !is_valid(&w, MembershipLevel::Star, params) {
            continue;
        }
        let v_blocks = ctx_v.domain.structure().coarse_count();
        let witness = match criticality(&w, v_blocks, params) {
            Ok(witness) => witness,
            Err(_) => continue,
        };
        match core_normal_form(&w, &witness, params) {
            Ok(canonical) => return Ok(canonical),
            Err(_) => continue,
        }
    }
    Err(crate::gen::Starvation {
        what: "random_core_form".into(),
        limit: crate::gen::STARVATION_LIMIT,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::{trial_rng, GenContext};
    use crate::trees::tree_evaluate;

    fn exact(p: i64, q: i64) -> Scalar {
        Scalar::ratio(p, q, NumericMode::Exact)
    }

    fn ctxs() -> (GenContext, GenContext) {
        (
            GenContext::plane(NumericMode::Exact),
            GenContext::line(NumericMode::Exact),
        )
    }

    fn plane_disk(ctx: &GenContext, sc: (i64, i64), tx: (i64, i64), ty: (i64, i64)) -> DilationMap {
        DilationMap::scale_translate(
            ctx.domain.structure().clone(),
            vec![exact(sc.0, sc.1)],
            vec![exact(tx.0, tx.1), exact(ty.0, ty.1)],
        )
        .unwrap()
    }

    #[test]
    fn triple_common_point_cases() {
        let mk = |x: (i64, i64), y: (i64, i64), r: (i64, i64)| {
            (vec![exact(x.0, x.1), exact(y.0, y.1)], exact(r.0, r.1))
        };
        // Three disks through the origin.
        let d1 = mk((1, 4), (0, 1), (1, 2));
        let d2 = mk((-1, 4), (0, 1), (1, 2));
        let d3 = mk((0, 1), (1, 4), (1, 2));
        assert!(
            triple_common_point((&d1.0, &d1.1), (&d2.0, &d2.1), (&d3.0, &d3.1)).unwrap()
        );
        // A ring with an empty middle: pairwise intersecting, no common
        // point.
        let e1 = mk((0, 1), (0, 1), (53, 100));
        let e2 = mk((1, 1), (0, 1), (53, 100));
        let e3 = mk((1, 2), (7, 8), (53, 100));
        let pw = |a: &(Vec<Scalar>, Scalar), b: &(Vec<Scalar>, Scalar)| {
            pair_strictly_intersect((&a.0, &a.1), (&b.0, &b.1), &Params::default())
        };
        assert!(pw(&e1, &e2) && pw(&e2, &e3) && pw(&e1, &e3));
        assert!(
            !triple_common_point((&e1.0, &e1.1), (&e2.0, &e2.1), (&e3.0, &e3.1)).unwrap()
        );
        // Tiny disk deep inside a huge one, plus a third overlapping both.
        let f1 = mk((0, 1), (0, 1), (10, 1));
        let f2 = mk((1, 1), (0, 1), (1, 10));
        let f3 = mk((11, 10), (0, 1), (1, 10));
        assert!(
            triple_common_point((&f1.0, &f1.1), (&f2.0, &f2.1), (&f3.0, &f3.1)).unwrap()
        );
    }

    #[test]
    fn float_subgradient_matches_exact_on_plane_triples() {
        let params = Params::default();
        for trial in 0..40 {
            let mut rng = trial_rng(5, "subgrad", trial);
            let ctx = GenContext::plane(NumericMode::Exact);
            let mut centers = Vec::new();
            let mut radii = Vec::new();
            for _ in 0..3 {
                centers.push(vec![
                    crate::gen::rational_in(&mut rng, -0.4, 0.4, ctx.mode),
                    crate::gen::rational_in(&mut rng, -0.4, 0.4, ctx.mode),
                ]);
                radii.push(crate::gen::log_uniform(&mut rng, 0.2, 0.5, ctx.mode));
            }
            let exact_members: Vec<(&[Scalar], &Scalar)> = centers
                .iter()
                .map(|c| c.as_slice())
                .zip(radii.iter())
                .collect();
            let exact_result = match block_common_point(&exact_members, &params) {
                Ok(v) => v,
                Err(_) => continue,
            };
            let fcenters: Vec<Vec<Scalar>> = centers
                .iter()
                .map(|c| c.iter().map(|s| s.convert(NumericMode::Float)).collect())
                .collect();
            let fradii: Vec<Scalar> = radii
                .iter()
                .map(|r| r.convert(NumericMode::Float))
                .collect();
            let fmembers: Vec<(&[Scalar], &Scalar)> = fcenters
                .iter()
                .map(|c| c.as_slice())
                .zip(fradii.iter())
                .collect();
            let float_result = block_common_point(&fmembers, &params).unwrap();
            // Allow disagreement only on razor-thin margins.
            if exact_result != float_result {
                let members_f64: Vec<(Vec<f64>, f64)> = fcenters
                    .iter()
                    .map(|c| c.iter().map(Scalar::to_f64).collect::<Vec<_>>())
                    .zip(fradii.iter().map(Scalar::to_f64))
                    .collect();
                let margin = probe_margin(&members_f64);
                assert!(
                    margin.abs() < 1e-3,
                    "certificates disagree with clear margin {}",
                    margin
                );
            }
        }
    }

    /// Coarse grid probe of min max_k(|p−c_k|−r_k), for diagnostics only.
    fn probe_margin(members: &[(Vec<f64>, f64)]) -> f64 {
        let mut best = f64::INFINITY;
        for i in -20..=20 {
            for j in -20..=20 {
                let p = [i as f64 / 20.0, j as f64 / 20.0];
                let v = members
                    .iter()
                    .map(|(c, r)| ((p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2)).sqrt() - r)
                    .fold(f64::NEG_INFINITY, f64::max);
                best = best.min(v);
            }
        }
        best
    }

    #[test]
    fn welzl_encloses_and_is_reasonably_tight() {
        for trial in 0..30 {
            let mut rng = trial_rng(6, "welzl", trial);
            let ctx = GenContext::plane(NumericMode::Float);
            let n = 1 + (trial as usize % 5);
            let centers: Vec<Vec<Scalar>> = (0..n)
                .map(|_| {
                    vec![
                        crate::gen::rational_in(&mut rng, -0.5, 0.5, ctx.mode),
                        crate::gen::rational_in(&mut rng, -0.5, 0.5, ctx.mode),
                    ]
                })
                .collect();
            let radii: Vec<Scalar> = (0..n)
                .map(|_| crate::gen::log_uniform(&mut rng, 0.01, 0.2, ctx.mode))
                .collect();
            let (center, radius) = enclosing_ball(&centers, &radii, NumericMode::Float);
            let mut needed = 0.0f64;
            for (c, r) in centers.iter().zip(&radii) {
                let d: f64 = c
                    .iter()
                    .zip(&center)
                    .map(|(a, b)| (a.to_f64() - b.to_f64()).powi(2))
                    .sum::<f64>()
                    .sqrt();
                assert!(
                    d + r.to_f64() <= radius.to_f64() + 1e-9,
                    "member escapes the enclosing ball"
                );
                needed = needed.max(d + r.to_f64());
            }
            // Tightness within 10% against the max-reach at the returned
            // center (the optimum for this center).
            assert!(radius.to_f64() <= needed * 1.1 + 1e-9);
        }
    }

    #[test]
    fn exact_enclosure_contains_members() {
        for trial in 0..20 {
            let mut rng = trial_rng(8, "enclose-exact", trial);
            let mode = NumericMode::Exact;
            let n = 1 + (trial as usize % 4);
            let centers: Vec<Vec<Scalar>> = (0..n)
                .map(|_| {
                    vec![
                        crate::gen::rational_in(&mut rng, -0.5, 0.5, mode),
                        crate::gen::rational_in(&mut rng, -0.5, 0.5, mode),
                    ]
                })
                .collect();
            let radii: Vec<Scalar> = (0..n)
                .map(|_| crate::gen::log_uniform(&mut rng, 0.01, 0.2, mode))
                .collect();
            let (center, radius) = enclosing_ball(&centers, &radii, mode);
            for (c, r) in centers.iter().zip(&radii) {
                let d2 = norm2(&vec_sub(c, &center));
                let gap = radius.sub(r);
                assert!(r.le(&radius, 0.0));
                assert!(d2.le(&gap.square(), 0.0), "exact enclosure fails");
            }
        }
    }

    #[test]
    fn criticality_on_disjoint_projections() {
        let (cv, cw) = ctxs();
        let params = Params::default();
        // Two components with disjoint projections in both factors.
        let p = Config::new(
            vec![
                plane_disk(&cv, (1, 50), (-1, 2), (0, 1)),
                plane_disk(&cv, (1, 50), (1, 2), (0, 1)),
            ],
            cv.domain.clone(),
            cv.group.clone(),
        )
        .unwrap();
        let q = Config::new(
            vec![
                DilationMap::scale_translate(
                    cw.domain.structure().clone(),
                    vec![exact(1, 50)],
                    vec![exact(-1, 2)],
                )
                .unwrap(),
                DilationMap::scale_translate(
                    cw.domain.structure().clone(),
                    vec![exact(1, 50)],
                    vec![exact(1, 2)],
                )
                .unwrap(),
            ],
            cw.domain.clone(),
            cw.group.clone(),
        )
        .unwrap();
        let w = Config::new(
            vec![
                DilationMap::product(p.map(0), q.map(0)),
                DilationMap::product(p.map(1), q.map(1)),
            ],
            ProductBall::product(&cv.domain, &cw.domain),
            GroupRep::product(&cv.group, &cw.group).unwrap(),
        )
        .unwrap();
        let witness = criticality(&w, 1, &params).unwrap();
        assert_eq!(witness.partition_v, vec![vec![0], vec![1]]);
        assert_eq!(witness.partition_w, vec![vec![0], vec![1]]);
        let form = core_normal_form(&w, &witness, &params).unwrap();
        assert_eq!(form.arity(), 2);
        let back = tree_evaluate(&form.to_tree(), &params).unwrap();
        assert!(back.eq_tol(&w, 0.0));
    }

    #[test]
    fn helly_violation_is_reported() {
        let (cv, cw) = ctxs();
        let params = Params::default();
        // Three V-projections pairwise intersecting with no common point,
        // paired with pairwise-disjoint W projections so the product stays
        // star-valid.
        let v_disks = [
            plane_disk(&cv, (53, 500), (-1, 10), (0, 1)),
            plane_disk(&cv, (53, 500), (1, 10), (0, 1)),
            plane_disk(&cv, (53, 500), (0, 1), (7, 40)),
        ];
        let w_disks = [
            DilationMap::scale_translate(
                cw.domain.structure().clone(),
                vec![exact(1, 100)],
                vec![exact(-1, 2)],
            )
            .unwrap(),
            DilationMap::scale_translate(
                cw.domain.structure().clone(),
                vec![exact(1, 100)],
                vec![exact(0, 1)],
            )
            .unwrap(),
            DilationMap::scale_translate(
                cw.domain.structure().clone(),
                vec![exact(1, 100)],
                vec![exact(1, 2)],
            )
            .unwrap(),
        ];
        let w = Config::new(
            (0..3)
                .map(|k| DilationMap::product(&v_disks[k], &w_disks[k]))
                .collect(),
            ProductBall::product(&cv.domain, &cw.domain),
            GroupRep::product(&cv.group, &cw.group).unwrap(),
        )
        .unwrap();
        let result = criticality(&w, 1, &params);
        match result {
            Err(Error::EmptyCommonIntersection { factor: "V", .. }) => {}
            other => panic!("expected empty common intersection, got {:?}", other),
        }
    }

    #[test]
    fn core_round_trip_from_generator() {
        let (cv, cw) = ctxs();
        let params = Params::default();
        for trial in 0..15 {
            let mut rng = trial_rng(9, "core-roundtrip", trial);
            let form = random_core_form(&mut rng, &cv, &cw, &params).unwrap();
            let w = tree_evaluate(&form.to_tree(), &params).unwrap();
            let witness = criticality(&w, 1, &params).unwrap();
            let recovered = core_normal_form(&w, &witness, &params).unwrap();
            assert!(
                recovered.eq_tol(&form, 0.0),
                "canonical form is not a fixed point (trial {})",
                trial
            );
        }
    }

    #[test]
    fn witness_survives_per_slot_shrinking() {
        // Shrinking every component in place keeps the anchored overlap
        // structure, so criticality still finds a witness.
        let (cv, cw) = ctxs();
        let params = Params::default();
        let mut rng = trial_rng(14, "core-shrunk", 1);
        let form = random_core_form(&mut rng, &cv, &cw, &params).unwrap();
        let w = tree_evaluate(&form.to_tree(), &params).unwrap();
        let shrunk = w.scaled_right(&params.shrink_scalar(NumericMode::Exact));
        let witness = criticality(&shrunk, 1, &params).unwrap();
        let recovered = core_normal_form(&shrunk, &witness, &params).unwrap();
        let back = tree_evaluate(&recovered.to_tree(), &params).unwrap();
        assert!(back.eq_tol(&shrunk, 0.0));
    }

    #[test]
    fn normal_form_against_own_witness_returns_same_data() {
        let (cv, cw) = ctxs();
        let params = Params::default();
        let mut rng = trial_rng(10, "core-own-witness", 3);
        let form = random_core_form(&mut rng, &cv, &cw, &params).unwrap();
        let w = tree_evaluate(&form.to_tree(), &params).unwrap();
        let witness = witness_of_core_form(&form);
        let recovered = core_normal_form(&w, &witness, &params).unwrap();
        assert!(recovered.eq_tol(&form, 0.0));
    }

    #[test]
    fn unary_core_form_is_forced() {
        let (cv, cw) = ctxs();
        let params = Params::default();
        let c = Config::new(
            vec![plane_disk(&cv, (1, 4), (1, 10), (0, 1))],
            cv.domain.clone(),
            cv.group.clone(),
        )
        .unwrap();
        let d = Config::new(
            vec![DilationMap::scale_translate(
                cw.domain.structure().clone(),
                vec![exact(1, 3)],
                vec![exact(1, 5)],
            )
            .unwrap()],
            cw.domain.clone(),
            cw.group.clone(),
        )
        .unwrap();
        let w = Config::new(
            vec![DilationMap::product(c.map(0), d.map(0))],
            ProductBall::product(&cv.domain, &cw.domain),
            GroupRep::product(&cv.group, &cw.group).unwrap(),
        )
        .unwrap();
        let witness = criticality(&w, 1, &params).unwrap();
        let form = core_normal_form(&w, &witness, &params).unwrap();
        assert_eq!(form.rows(), 1);
        assert_eq!(form.cols(), 1);
        assert_eq!(form.arity(), 1);
        let back = tree_evaluate(&form.to_tree(), &params).unwrap();
        assert!(back.eq_tol(&w, 0.0));
    }

    #[test]
    fn merged_witness_cells_are_rejected() {
        // Two components forced into one grid cell by a hand-built witness.
        let (cv, cw) = ctxs();
        let params = Params::default();
        let p = Config::new(
            vec![
                plane_disk(&cv, (1, 50), (-1, 2), (0, 1)),
                plane_disk(&cv, (1, 50), (1, 2), (0, 1)),
            ],
            cv.domain.clone(),
            cv.group.clone(),
        )
        .unwrap();
        let q0 = DilationMap::scale_translate(
            cw.domain.structure().clone(),
            vec![exact(1, 50)],
            vec![exact(-1, 2)],
        )
        .unwrap();
        let q1 = DilationMap::scale_translate(
            cw.domain.structure().clone(),
            vec![exact(1, 50)],
            vec![exact(1, 2)],
        )
        .unwrap();
        let w = Config::new(
            vec![
                DilationMap::product(p.map(0), &q0),
                DilationMap::product(p.map(1), &q1),
            ],
            ProductBall::product(&cv.domain, &cw.domain),
            GroupRep::product(&cv.group, &cw.group).unwrap(),
        )
        .unwrap();
        let good = criticality(&w, 1, &params).unwrap();
        // Merge both V-blocks and both W-blocks into one: components 0 and 1
        // now share cell (0, 0).
        let merged = CriticalWitness {
            partition_v: vec![vec![0, 1]],
            partition_w: vec![vec![0, 1]],
            separator_a: Config::new(
                vec![DilationMap::scale_translate(
                    cv.domain.structure().clone(),
                    vec![exact(9, 10)],
                    vec![exact(0, 1), exact(0, 1)],
                )
                .unwrap()],
                cv.domain.clone(),
                cv.group.clone(),
            )
            .unwrap(),
            separator_b: Config::new(
                vec![DilationMap::scale_translate(
                    cw.domain.structure().clone(),
                    vec![exact(9, 10)],
                    vec![exact(0, 1)],
                )
                .unwrap()],
                cw.domain.clone(),
                cw.group.clone(),
            )
            .unwrap(),
        };
        let err = core_normal_form(&w, &merged, &params);
        assert!(matches!(err, Err(Error::StraddledCell { .. })), "{:?}", err);
        // A witness with an extra, never-used separator slot hits the
        // empty-line check.
        let padded = CriticalWitness {
            partition_v: vec![good.partition_v[0].clone(), good.partition_v[1].clone(), vec![]],
            partition_w: good.partition_w.clone(),
            separator_a: Config::new(
                vec![
                    good.separator_a.map(0).clone(),
                    good.separator_a.map(1).clone(),
                    DilationMap::scale_translate(
                        cv.domain.structure().clone(),
                        vec![exact(1, 100)],
                        vec![exact(0, 1), exact(4, 5)],
                    )
                    .unwrap(),
                ],
                cv.domain.clone(),
                cv.group.clone(),
            )
            .unwrap(),
            separator_b: good.separator_b.clone(),
        };
        let err = core_normal_form(&w, &padded, &params);
        assert!(
            matches!(err, Err(Error::EmptyLine { which: "row", .. })),
            "{:?}",
            err
        );
    }

    #[test]
    fn refinement_of_single_config_enlarges_five_times() {
        let (cv, _) = ctxs();
        let params = Params::default();
        // Config in the 1/50-shrunk class: 50x enlargement must stay star.
        let cfg = Config::new(
            vec![
                plane_disk(&cv, (1, 500), (-1, 2), (0, 1)),
                plane_disk(&cv, (1, 500), (1, 2), (0, 1)),
            ],
            cv.domain.clone(),
            cv.group.clone(),
        )
        .unwrap();
        let refinement = common_refinement(std::slice::from_ref(&cfg), &params).unwrap();
        assert_eq!(refinement.refined.arity(), 2);
        for (t, m) in refinement.refined.maps().iter().enumerate() {
            assert_eq!(m.scales()[0], exact(1, 100), "slot {}", t);
        }
        for f in &refinement.per_config[0].factors {
            assert_eq!(f.arity(), 1);
            assert_eq!(f.map(0).scales()[0], exact(1, 5));
            assert!(f.map(0).translation().iter().all(Scalar::is_zero));
        }
    }

    #[test]
    fn refinement_merges_intersecting_singletons() {
        // Domain of radius 10 so disks of radii 0.1 / 0.05 are in the
        // 1/50-shrunk class (50x enlargement still fits).
        let s10 = crate::blocks::BlockStructure::spherical(2);
        let domain = ProductBall::origin(s10.clone(), exact(10, 1));
        let group = GroupRep::trivial(s10.clone(), NumericMode::Exact);
        let params = Params::default();
        let disk = |sc: (i64, i64), tx: (i64, i64)| {
            Config::new(
                vec![DilationMap::scale_translate(
                    s10.clone(),
                    vec![exact(sc.0, sc.1)],
                    vec![exact(tx.0, tx.1), exact(0, 1)],
                )
                .unwrap()],
                domain.clone(),
                group.clone(),
            )
            .unwrap()
        };
        // Two singleton configs with intersecting disks radii 0.1 > 0.05:
        // one class, representative radius 0.1, e radius 0.5 at its center.
        let big = disk((1, 100), (0, 1));
        let small = disk((1, 200), (1, 10));
        let refinement = common_refinement(&[big.clone(), small.clone()], &params).unwrap();
        assert_eq!(refinement.refined.arity(), 1);
        // e radius = 5 x 0.1 = 0.5, i.e. scale 1/20 of the radius-10 domain.
        assert_eq!(refinement.refined.map(0).scales()[0], exact(1, 20));
        assert_eq!(refinement.refined.map(0).translation()[0], exact(0, 1));
        // Disjoint singletons give two classes and nullary off-slots.
        let far = disk((1, 100), (5, 1));
        let refinement2 = common_refinement(&[big, far], &params).unwrap();
        assert_eq!(refinement2.refined.arity(), 2);
        for rf in &refinement2.per_config {
            let unary: usize = rf.factors.iter().filter(|f| f.arity() == 1).count();
            let nullary: usize = rf.factors.iter().filter(|f| f.arity() == 0).count();
            assert_eq!(unary, 1);
            assert_eq!(nullary, 1);
        }
    }

    #[test]
    fn non_transitive_family_is_rejected() {
        let (cv, _) = ctxs();
        let params = Params::default();
        // Chain: a–b intersect, b–c intersect, a–c disjoint.
        let a = Config::new(
            vec![plane_disk(&cv, (1, 100), (-1, 64), (0, 1))],
            cv.domain.clone(),
            cv.group.clone(),
        )
        .unwrap();
        let b = Config::new(
            vec![plane_disk(&cv, (1, 100), (0, 1), (0, 1))],
            cv.domain.clone(),
            cv.group.clone(),
        )
        .unwrap();
        let c = Config::new(
            vec![plane_disk(&cv, (1, 100), (1, 64), (0, 1))],
            cv.domain.clone(),
            cv.group.clone(),
        )
        .unwrap();
        let err = common_refinement(&[a, b, c], &params);
        assert!(matches!(err, Err(Error::NonTransitive(_))));
    }
}
