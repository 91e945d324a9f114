//! Separated configurations and the triangle construction.
//!
//! A star configuration is *separated* when enlarging every disk by the
//! separation constant (default 5) keeps it star-valid. For a separated pair
//! x, y whose components fully correspond under the intersection relation,
//! the enlarged elements x▷y, x◁y and the small-disk selection x▽y satisfy
//! the bubble-transfer equations, which this module constructs and verifies.

use crate::ball::ProductBall;
use crate::config::{compose_standard, is_valid, Config, MembershipLevel, Perm};
use crate::dilation::DilationMap;
use crate::divisibility::{intersection_data, IntersectionData};
use crate::error::Error;
use crate::params::Params;
use crate::scalar::Scalar;

/// Lower bound on a bridging disk's radius and the covering threshold from
/// the critical-disk inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct DiskBounds {
    pub lower_bound: Scalar,
    pub mu_threshold: Scalar,
}

/// `lowerBound = (λ−1)/2 · (r₁+r₂)`, `muThreshold = 4/(λ−1) + 3`.
pub fn disk_bounds(lambda: &Scalar, rad_y1: &Scalar, rad_y2: &Scalar) -> Result<DiskBounds, Error> {
    let one = Scalar::one(lambda.mode());
    let lm1 = lambda.sub(&one);
    if !lm1.is_positive() {
        return Err(Error::Invalid("disk bounds need λ > 1".into()));
    }
    let two = Scalar::from_int(2, lambda.mode());
    let four = Scalar::from_int(4, lambda.mode());
    let three = Scalar::from_int(3, lambda.mode());
    Ok(DiskBounds {
        lower_bound: lm1.div(&two).mul(&rad_y1.add(rad_y2)),
        mu_threshold: four.div(&lm1).add(&three),
    })
}

/// The L/R index partitions of a configuration pair. `l1` holds the x-indices
/// whose disk is at most as large as every y-disk it intersects; `l2` holds
/// the y-indices strictly smaller than every intersecting x-disk. Indices
/// intersecting nothing land in `l1`/`l2` vacuously.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SeparationPartition {
    pub l1: Vec<usize>,
    pub r1: Vec<usize>,
    pub l2: Vec<usize>,
    pub r2: Vec<usize>,
}

fn radii_le(a: &ProductBall, b: &ProductBall, tol: f64) -> bool {
    a.radii().iter().zip(b.radii()).all(|(ra, rb)| ra.le(rb, tol))
}

/// Separation test: arity ≤ 1, or star-validity after enlarging every
/// component by the separation constant. Returns false when `x` is not even
/// star-valid.
pub fn is_separated(x: &Config, params: &Params) -> bool {
    is_valid(x, MembershipLevel::Separated, params)
}

pub fn separation_partition(
    x: &Config,
    y: &Config,
    params: &Params,
) -> Result<SeparationPartition, Error> {
    let data = intersection_data(x, y, params)?;
    Ok(partition_from_data(x, y, &data, params))
}

fn partition_from_data(
    x: &Config,
    y: &Config,
    data: &IntersectionData,
    params: &Params,
) -> SeparationPartition {
    let xs = x.images();
    let ys = y.images();
    let tol = params.tol;
    let mut l1 = Vec::new();
    let mut r1 = Vec::new();
    for i in 0..x.arity() {
        let small = (0..y.arity())
            .filter(|&j| data.relation[i][j])
            .all(|j| radii_le(&xs[i], &ys[j], tol));
        if small {
            l1.push(i);
        } else {
            r1.push(i);
        }
    }
    let mut l2 = Vec::new();
    let mut r2 = Vec::new();
    for j in 0..y.arity() {
        let strictly_larger_partners = (0..x.arity())
            .filter(|&i| data.relation[i][j])
            .all(|i| !radii_le(&xs[i], &ys[j], tol));
        if strictly_larger_partners {
            l2.push(j);
        } else {
            r2.push(j);
        }
    }
    SeparationPartition { l1, r1, l2, r2 }
}

/// Which original component a slot of x▽y refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum DownLabel {
    X(usize),
    Y(usize),
}

/// The triangle construction for a corresponding separated pair, with every
/// piece of the bubble-transfer statement verified before returning.
#[derive(Debug, Clone)]
pub struct TriangleDecomposition {
    /// x▷y: x with its large disks enlarged.
    pub right: Config,
    /// x◁y: y with its large disks enlarged.
    pub left: Config,
    /// x▽y: the small disks of both, the L1 slice first in x-order then L2 in
    /// y-order.
    pub down: Config,
    pub partition: SeparationPartition,
    /// μ^i, indexed by ar(x): identity on L1, the pulled-back small disks on R1.
    pub mu: Vec<Config>,
    /// μ̄^i: identity on L1, (1/separation)·id on R1.
    pub mu_bar: Vec<Config>,
    /// ν^j, indexed by ar(y).
    pub nu: Vec<Config>,
    /// ν̄^j.
    pub nu_bar: Vec<Config>,
    pub sigma_x: Perm,
    pub sigma_y: Perm,
}

pub fn triangle_decomposition(
    x: &Config,
    y: &Config,
    params: &Params,
) -> Result<TriangleDecomposition, Error> {
    if !is_separated(x, params) || !is_separated(y, params) {
        return Err(Error::NotSeparated);
    }
    let data = intersection_data(x, y, params)?;
    for i in 0..x.arity() {
        if data.relation[i].iter().all(|&hit| !hit) {
            return Err(Error::NoCorrespondent { side: "x", index: i });
        }
    }
    for j in 0..y.arity() {
        if (0..x.arity()).all(|i| !data.relation[i][j]) {
            return Err(Error::NoCorrespondent { side: "y", index: j });
        }
    }
    let partition = partition_from_data(x, y, &data, params);
    let sep = params.separation_scalar(x.mode());
    let sep_inv = sep.recip();
    let domain = x.domain().clone();
    let group = x.group().clone();
    let in_l1 = membership_mask(x.arity(), &partition.l1);
    let in_l2 = membership_mask(y.arity(), &partition.l2);

    let right = Config::new(
        x.maps()
            .iter()
            .enumerate()
            .map(|(i, m)| if in_l1[i] { m.clone() } else { m.scaled_right(&sep) })
            .collect(),
        domain.clone(),
        group.clone(),
    )?;
    let left = Config::new(
        y.maps()
            .iter()
            .enumerate()
            .map(|(j, m)| if in_l2[j] { m.clone() } else { m.scaled_right(&sep) })
            .collect(),
        domain.clone(),
        group.clone(),
    )?;

    let mut down_maps = Vec::new();
    let mut down_labels = Vec::new();
    for &i in &partition.l1 {
        down_maps.push(x.map(i).clone());
        down_labels.push(DownLabel::X(i));
    }
    for &j in &partition.l2 {
        down_maps.push(y.map(j).clone());
        down_labels.push(DownLabel::Y(j));
    }
    let down = Config::new(down_maps, domain.clone(), group.clone())?;

    let unary = |m: DilationMap| Config::new(vec![m], domain.clone(), group.clone());
    let identity_cfg = Config::identity(domain.clone(), group.clone());
    let shrink_cfg = unary(
        DilationMap::identity(domain.structure().clone(), x.mode()).scaled_right(&sep_inv),
    )?;

    let mut mu = Vec::with_capacity(x.arity());
    let mut mu_bar = Vec::with_capacity(x.arity());
    for i in 0..x.arity() {
        if in_l1[i] {
            mu.push(identity_cfg.clone());
            mu_bar.push(identity_cfg.clone());
        } else {
            let enlarged_inv = x.map(i).scaled_right(&sep).invert();
            let maps = data
                .image_of_one(i)
                .into_iter()
                .map(|j| enlarged_inv.compose(y.map(j)))
                .collect();
            mu.push(Config::new(maps, domain.clone(), group.clone())?);
            mu_bar.push(shrink_cfg.clone());
        }
    }
    let data_yx = intersection_data(y, x, params)?;
    let mut nu = Vec::with_capacity(y.arity());
    let mut nu_bar = Vec::with_capacity(y.arity());
    for j in 0..y.arity() {
        if in_l2[j] {
            nu.push(identity_cfg.clone());
            nu_bar.push(identity_cfg.clone());
        } else {
            let enlarged_inv = y.map(j).scaled_right(&sep).invert();
            let maps = data_yx
                .image_of_one(j)
                .into_iter()
                .map(|i| enlarged_inv.compose(x.map(i)))
                .collect();
            nu.push(Config::new(maps, domain.clone(), group.clone())?);
            nu_bar.push(shrink_cfg.clone());
        }
    }

    // Slot labels of the compositions (x▷y)∘(μ) and (x◁y)∘(ν).
    let mut u_labels = Vec::new();
    for i in 0..x.arity() {
        if in_l1[i] {
            u_labels.push(DownLabel::X(i));
        } else {
            for j in data.image_of_one(i) {
                u_labels.push(DownLabel::Y(j));
            }
        }
    }
    let mut v_labels = Vec::new();
    for j in 0..y.arity() {
        if in_l2[j] {
            v_labels.push(DownLabel::Y(j));
        } else {
            for i in data_yx.image_of_one(j) {
                v_labels.push(DownLabel::X(i));
            }
        }
    }
    let sigma_x = relabeling_perm(&u_labels, &down_labels)?;
    let sigma_y = relabeling_perm(&v_labels, &down_labels)?;

    let decomposition = TriangleDecomposition {
        right,
        left,
        down,
        partition,
        mu,
        mu_bar,
        nu,
        nu_bar,
        sigma_x,
        sigma_y,
    };
    decomposition.verify(x, y, params)?;
    Ok(decomposition)
}

fn membership_mask(n: usize, members: &[usize]) -> Vec<bool> {
    let mut mask = vec![false; n];
    for &i in members {
        mask[i] = true;
    }
    mask
}

/// The permutation σ with `target = σ · source` for configs whose slots carry
/// the given labels, i.e. `target_k = source_{σ⁻¹(k)}`.
fn relabeling_perm(source: &[DownLabel], target: &[DownLabel]) -> Result<Perm, Error> {
    if source.len() != target.len() {
        return Err(Error::Arity(format!(
            "label lists of lengths {} and {}",
            source.len(),
            target.len()
        )));
    }
    let mut image = vec![0usize; source.len()];
    for (pos, label) in source.iter().enumerate() {
        let t = target
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::Invalid(format!("label {:?} missing from target", label)))?;
        image[pos] = t;
    }
    Perm::new(image)
}

impl TriangleDecomposition {
    /// Assert the five bubble-transfer statements:
    /// (1) x = (x▷y)∘(μ̄), (2) y = (x◁y)∘(ν̄),
    /// (3) x▽y = σ_x·((x▷y)∘(μ)), (4) x▽y = σ_y·((x◁y)∘(ν)),
    /// (5) the memberships: x▷y, x◁y, x▽y star-valid and all μ/μ̄/ν/ν̄
    /// separated.
    pub fn verify(&self, x: &Config, y: &Config, params: &Params) -> Result<(), Error> {
        let tol = params.tol;
        let eq = |lhs: &Config, rhs: &Config, which: usize| {
            if lhs.eq_tol(rhs, tol) {
                Ok(())
            } else {
                Err(Error::Invalid(format!(
                    "bubble-transfer equation {} failed",
                    which
                )))
            }
        };
        let x_back = compose_standard(&self.right, &self.mu_bar)?;
        eq(&x_back, x, 1)?;
        let y_back = compose_standard(&self.left, &self.nu_bar)?;
        eq(&y_back, y, 2)?;
        let u = compose_standard(&self.right, &self.mu)?;
        let down_x = u.act(&self.sigma_x, x.group().identity(), params)?;
        eq(&down_x, &self.down, 3)?;
        let v = compose_standard(&self.left, &self.nu)?;
        let down_y = v.act(&self.sigma_y, y.group().identity(), params)?;
        eq(&down_y, &self.down, 4)?;
        for cfg in [&self.right, &self.left, &self.down] {
            if !is_valid(cfg, MembershipLevel::Star, params) {
                return Err(Error::Invalid(
                    "bubble-transfer membership failed: constructed element not star-valid".into(),
                ));
            }
        }
        for family in [&self.mu, &self.mu_bar, &self.nu, &self.nu_bar] {
            for q in family.iter() {
                if !is_valid(q, MembershipLevel::Separated, params) {
                    return Err(Error::Invalid(
                        "bubble-transfer membership failed: factor not separated".into(),
                    ));
                }
            }
        }
        Ok(())
    }

    /// The inclusion zigzag: every disk of x and x▽y sits inside a disk of
    /// x▷y; every disk of y and x▽y inside a disk of x◁y.
    pub fn verify_zigzag(&self, x: &Config, y: &Config, params: &Params) -> bool {
        let tol = params.tol;
        let covered = |small: &Config, big: &Config| {
            let bigs = big.images();
            small
                .images()
                .iter()
                .all(|s| bigs.iter().any(|b| crate::ball::contains(s, b, tol)))
        };
        covered(x, &self.right)
            && covered(&self.down, &self.right)
            && covered(y, &self.left)
            && covered(&self.down, &self.left)
    }
}
