//! The scene file: one JSON document holding a block structure, a group, and
//! named domains, configurations and trees, plus the shared settings.
//!
//! Exact scalars travel as `"p/q"` strings so round trips are lossless;
//! float scalars are plain JSON numbers. Serialization is canonical: maps are
//! sorted, rationals reduced, field order fixed. `parse(serialize(s)) = s`.

use crate::ball::ProductBall;
use crate::blocks::BlockStructure;
use crate::config::Config;
use crate::dilation::DilationMap;
use crate::error::Error;
use crate::group::GroupRep;
use crate::matrix::OrthoMatrix;
use crate::params::Params;
use crate::scalar::{format_rational, parse_rational, NumericMode, Scalar};
use crate::trees::{EdgeTarget, SuperTree, TreeVertex};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::sync::Arc;

/// A fully resolved and validated scene.
#[derive(Debug, Clone)]
pub struct Scene {
    pub mode: NumericMode,
    pub structure: Arc<BlockStructure>,
    /// Number of leading coarse blocks forming the first tensor factor, when
    /// the scene carries product data.
    pub factor_split: Option<usize>,
    pub group: Arc<GroupRep>,
    pub domains: BTreeMap<String, NamedDomain>,
    pub configs: BTreeMap<String, Config>,
    pub trees: BTreeMap<String, SuperTree>,
    pub params: Params,
}

/// Which factor a domain lives on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Factor {
    Full,
    V,
    W,
}

#[derive(Debug, Clone)]
pub struct NamedDomain {
    pub factor: Factor,
    pub ball: ProductBall,
}

// ---------------------------------------------------------------------------
// Wire format.

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
enum ScalarRepr {
    Num(f64),
    Str(String),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct StructureDoc {
    dimension: usize,
    /// 1-based axis lists.
    coarse: Vec<Vec<usize>>,
    fine: Vec<Vec<usize>>,
    #[serde(rename = "factorSplit", skip_serializing_if = "Option::is_none")]
    factor_split: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct GroupDoc {
    elements: Vec<String>,
    table: Vec<Vec<usize>>,
    identity: usize,
    /// Row-major matrices, one per element.
    matrices: Vec<Vec<Vec<ScalarRepr>>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct BallDoc {
    center: Vec<ScalarRepr>,
    radius: ScalarRepr,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct DomainDoc {
    #[serde(default = "default_factor")]
    factor: Factor,
    blocks: Vec<BallDoc>,
}

fn default_factor() -> Factor {
    Factor::Full
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct MapDoc {
    ortho: Vec<Vec<ScalarRepr>>,
    scales: Vec<ScalarRepr>,
    translation: Vec<ScalarRepr>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ConfigDoc {
    domain: String,
    maps: Vec<MapDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
enum EdgeDoc {
    Input(usize),
    Child(usize),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct VertexDoc {
    white: usize,
    black: usize,
    xi: Vec<usize>,
    edges: Vec<EdgeDoc>,
    p: Vec<MapDoc>,
    q: Vec<MapDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct TreeDoc {
    domain_v: String,
    domain_w: String,
    root: usize,
    inputs: usize,
    vertices: Vec<VertexDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SettingsDoc {
    #[serde(skip_serializing_if = "Option::is_none")]
    separation: Option<ScalarRepr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    shrink: Option<ScalarRepr>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tolerance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    step_cap: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SceneDoc {
    block_structure: StructureDoc,
    numeric_mode: String,
    group: GroupDoc,
    #[serde(default)]
    domains: BTreeMap<String, DomainDoc>,
    #[serde(default)]
    configs: BTreeMap<String, ConfigDoc>,
    #[serde(default)]
    trees: BTreeMap<String, TreeDoc>,
    #[serde(skip_serializing_if = "Option::is_none")]
    settings: Option<SettingsDoc>,
}

// ---------------------------------------------------------------------------
// Parsing.

fn err(path: &str, message: impl std::fmt::Display) -> Error {
    Error::Scene {
        path: path.to_string(),
        message: message.to_string(),
    }
}

fn parse_scalar(repr: &ScalarRepr, mode: NumericMode, path: &str) -> Result<Scalar, Error> {
    match (repr, mode) {
        (ScalarRepr::Str(s), _) => {
            let q = parse_rational(s).map_err(|m| err(path, m))?;
            Ok(Scalar::from_rational(q, mode))
        }
        (ScalarRepr::Num(x), NumericMode::Float) => Ok(Scalar::Float(*x)),
        (ScalarRepr::Num(x), NumericMode::Exact) => {
            if x.fract() == 0.0 && x.abs() < 2f64.powi(53) {
                Ok(Scalar::from_int(*x as i64, NumericMode::Exact))
            } else {
                Err(err(
                    path,
                    "exact scenes need rational strings (\"p/q\") for non-integer scalars",
                ))
            }
        }
    }
}

fn scalar_repr(s: &Scalar) -> ScalarRepr {
    match s {
        Scalar::Exact(q) => ScalarRepr::Str(format_rational(q)),
        Scalar::Float(x) => ScalarRepr::Num(*x),
    }
}

fn parse_vec(reprs: &[ScalarRepr], mode: NumericMode, path: &str) -> Result<Vec<Scalar>, Error> {
    reprs
        .iter()
        .enumerate()
        .map(|(i, r)| parse_scalar(r, mode, &format!("{}[{}]", path, i)))
        .collect()
}

fn parse_matrix(
    rows: &[Vec<ScalarRepr>],
    dim: usize,
    mode: NumericMode,
    path: &str,
) -> Result<OrthoMatrix, Error> {
    if rows.len() != dim || rows.iter().any(|r| r.len() != dim) {
        return Err(err(path, format!("expected a {dim}x{dim} matrix")));
    }
    let mut data = Vec::with_capacity(dim * dim);
    for (i, row) in rows.iter().enumerate() {
        data.extend(parse_vec(row, mode, &format!("{}[{}]", path, i))?);
    }
    OrthoMatrix::new(dim, data).map_err(|e| err(path, e))
}

fn one_based_to_zero(blocks: &[Vec<usize>], path: &str) -> Result<Vec<Vec<usize>>, Error> {
    blocks
        .iter()
        .map(|b| {
            b.iter()
                .map(|&a| {
                    a.checked_sub(1)
                        .ok_or_else(|| err(path, "axes are 1-based; found 0"))
                })
                .collect()
        })
        .collect()
}

fn parse_map(
    doc: &MapDoc,
    structure: &Arc<BlockStructure>,
    mode: NumericMode,
    tol: f64,
    path: &str,
) -> Result<DilationMap, Error> {
    let ortho = parse_matrix(&doc.ortho, structure.dim(), mode, &format!("{}.ortho", path))?;
    let scales = parse_vec(&doc.scales, mode, &format!("{}.scales", path))?;
    let translation = parse_vec(&doc.translation, mode, &format!("{}.translation", path))?;
    DilationMap::new(structure.clone(), ortho, scales, translation, tol)
        .map_err(|e| err(path, e))
}

/// Parse and fully validate a scene document.
pub fn parse_scene(bytes: &[u8]) -> Result<Scene, Error> {
    let doc: SceneDoc = serde_json::from_slice(bytes)
        .map_err(|e| err("$", format!("invalid JSON: {}", e)))?;
    resolve_scene(&doc)
}

fn resolve_scene(doc: &SceneDoc) -> Result<Scene, Error> {
    let mode = match doc.numeric_mode.as_str() {
        "exact" => NumericMode::Exact,
        "float" => NumericMode::Float,
        other => {
            return Err(err(
                "numericMode",
                format!("expected \"exact\" or \"float\", found {:?}", other),
            ))
        }
    };
    let mut params = Params::default();
    if let Some(settings) = &doc.settings {
        if let Some(sep) = &settings.separation {
            params.separation = parse_scalar(sep, NumericMode::Exact, "settings.separation")?
                .to_rational();
        }
        if let Some(shrink) = &settings.shrink {
            params.shrink =
                parse_scalar(shrink, NumericMode::Exact, "settings.shrink")?.to_rational();
        }
        if let Some(tol) = settings.tolerance {
            params.tol = tol;
        }
        if let Some(cap) = settings.step_cap {
            params.step_cap = cap;
        }
    }
    let coarse = one_based_to_zero(&doc.block_structure.coarse, "blockStructure.coarse")?;
    let fine = one_based_to_zero(&doc.block_structure.fine, "blockStructure.fine")?;
    let structure = BlockStructure::new(doc.block_structure.dimension, coarse, fine)
        .map_err(|e| err("blockStructure", e))?;
    if let Some(split) = doc.block_structure.factor_split {
        if split == 0 || split >= structure.coarse_count() {
            return Err(err(
                "blockStructure.factorSplit",
                "split must cut between coarse blocks",
            ));
        }
    }

    let matrices = doc
        .group
        .matrices
        .iter()
        .enumerate()
        .map(|(g, rows)| {
            parse_matrix(rows, structure.dim(), mode, &format!("group.matrices[{}]", g))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let group = GroupRep::new(
        structure.clone(),
        doc.group.elements.clone(),
        doc.group.table.clone(),
        matrices,
        doc.group.identity,
        params.tol,
    )
    .map_err(|e| err("group", e))?;

    let split = doc.block_structure.factor_split;
    let factor_range = |factor: Factor| -> Result<std::ops::Range<usize>, Error> {
        match factor {
            Factor::Full => Ok(0..structure.coarse_count()),
            Factor::V => {
                let s = split.ok_or_else(|| {
                    err("domains", "a v/w-factor domain needs blockStructure.factorSplit")
                })?;
                Ok(0..s)
            }
            Factor::W => {
                let s = split.ok_or_else(|| {
                    err("domains", "a v/w-factor domain needs blockStructure.factorSplit")
                })?;
                Ok(s..structure.coarse_count())
            }
        }
    };

    let mut domains = BTreeMap::new();
    for (name, d) in &doc.domains {
        let path = format!("domains.{}", name);
        let range = factor_range(d.factor)?;
        let (sub_structure, _) = structure.restrict_coarse(range);
        if d.blocks.len() != sub_structure.coarse_count() {
            return Err(err(
                &path,
                format!(
                    "expected {} blocks, found {}",
                    sub_structure.coarse_count(),
                    d.blocks.len()
                ),
            ));
        }
        let mut centers = Vec::new();
        let mut radii = Vec::new();
        for (bi, ball) in d.blocks.iter().enumerate() {
            centers.push(parse_vec(
                &ball.center,
                mode,
                &format!("{}.blocks[{}].center", path, bi),
            )?);
            radii.push(parse_scalar(
                &ball.radius,
                mode,
                &format!("{}.blocks[{}].radius", path, bi),
            )?);
        }
        let ball = ProductBall::new(sub_structure, centers, radii).map_err(|e| err(&path, e))?;
        domains.insert(
            name.clone(),
            NamedDomain {
                factor: d.factor,
                ball,
            },
        );
    }

    let group_for_factor = |factor: Factor| -> Result<Arc<GroupRep>, Error> {
        match factor {
            Factor::Full => Ok(group.clone()),
            other => {
                let range = factor_range(other)?;
                group
                    .restrict_coarse(range, params.tol)
                    .map_err(|e| err("group", e))
            }
        }
    };

    let mut configs = BTreeMap::new();
    for (name, c) in &doc.configs {
        let path = format!("configs.{}", name);
        let domain = domains
            .get(&c.domain)
            .ok_or_else(|| err(&path, format!("unknown domain {:?}", c.domain)))?;
        let sub_structure = domain.ball.structure().clone();
        let maps = c
            .maps
            .iter()
            .enumerate()
            .map(|(i, m)| {
                parse_map(
                    m,
                    &sub_structure,
                    mode,
                    params.tol,
                    &format!("{}.maps[{}]", path, i),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cfg = Config::new(maps, domain.ball.clone(), group_for_factor(domain.factor)?)
            .map_err(|e| err(&path, e))?;
        configs.insert(name.clone(), cfg);
    }

    let mut trees = BTreeMap::new();
    for (name, t) in &doc.trees {
        let path = format!("trees.{}", name);
        let dv = domains
            .get(&t.domain_v)
            .ok_or_else(|| err(&path, format!("unknown domain {:?}", t.domain_v)))?;
        let dw = domains
            .get(&t.domain_w)
            .ok_or_else(|| err(&path, format!("unknown domain {:?}", t.domain_w)))?;
        if dv.factor != Factor::V || dw.factor != Factor::W {
            return Err(err(
                &path,
                "tree domains must be a v-factor and a w-factor domain",
            ));
        }
        let gv = group_for_factor(Factor::V)?;
        let gw = group_for_factor(Factor::W)?;
        let mut vertices = Vec::new();
        for (vi, v) in t.vertices.iter().enumerate() {
            let vertex_path = format!("{}.vertices[{}]", path, vi);
            let parse_side = |maps: &[MapDoc],
                              domain: &NamedDomain,
                              grp: &Arc<GroupRep>,
                              side: &str|
             -> Result<Config, Error> {
                let ms = maps
                    .iter()
                    .enumerate()
                    .map(|(i, m)| {
                        parse_map(
                            m,
                            &domain.ball.structure().clone(),
                            mode,
                            params.tol,
                            &format!("{}.{}[{}]", vertex_path, side, i),
                        )
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                Config::new(ms, domain.ball.clone(), grp.clone())
                    .map_err(|e| err(&vertex_path, e))
            };
            let p = parse_side(&v.p, dv, &gv, "p")?;
            let q = parse_side(&v.q, dw, &gw, "q")?;
            let edges = v
                .edges
                .iter()
                .map(|e| match e {
                    EdgeDoc::Input(k) => EdgeTarget::Input(*k),
                    EdgeDoc::Child(c) => EdgeTarget::Child(*c),
                })
                .collect();
            vertices.push(TreeVertex {
                white: v.white,
                black: v.black,
                xi: v.xi.clone(),
                edges,
                p,
                q,
            });
        }
        let tree = SuperTree {
            vertices,
            root: t.root,
            inputs: t.inputs,
        };
        let flags = crate::trees::tree_validate(&tree, &params);
        if !flags.well_formed {
            return Err(err(&path, flags.issues.join("; ")));
        }
        trees.insert(name.clone(), tree);
    }

    Ok(Scene {
        mode,
        structure,
        factor_split: doc.block_structure.factor_split,
        group,
        domains,
        configs,
        trees,
        params,
    })
}

// ---------------------------------------------------------------------------
// Serialization.

fn map_doc(m: &DilationMap) -> MapDoc {
    let dim = m.structure().dim();
    let ortho = (0..dim)
        .map(|i| (0..dim).map(|j| scalar_repr(m.ortho().at(i, j))).collect())
        .collect();
    MapDoc {
        ortho,
        scales: m.scales().iter().map(scalar_repr).collect(),
        translation: m.translation().iter().map(scalar_repr).collect(),
    }
}

fn scene_doc(scene: &Scene) -> SceneDoc {
    let to_one_based = |blocks: &[Vec<usize>]| -> Vec<Vec<usize>> {
        blocks
            .iter()
            .map(|b| b.iter().map(|a| a + 1).collect())
            .collect()
    };
    let dim = scene.structure.dim();
    let group = GroupDoc {
        elements: scene.group.elements().to_vec(),
        table: scene.group.table().to_vec(),
        identity: scene.group.identity(),
        matrices: (0..scene.group.order())
            .map(|g| {
                let m = scene.group.matrix(g);
                (0..dim)
                    .map(|i| (0..dim).map(|j| scalar_repr(m.at(i, j))).collect())
                    .collect()
            })
            .collect(),
    };
    let domains = scene
        .domains
        .iter()
        .map(|(name, d)| {
            let blocks = d
                .ball
                .centers()
                .iter()
                .zip(d.ball.radii())
                .map(|(c, r)| BallDoc {
                    center: c.iter().map(scalar_repr).collect(),
                    radius: scalar_repr(r),
                })
                .collect();
            (
                name.clone(),
                DomainDoc {
                    factor: d.factor,
                    blocks,
                },
            )
        })
        .collect();
    let configs = scene
        .configs
        .iter()
        .map(|(name, c)| {
            let domain = scene
                .domains
                .iter()
                .find(|(_, d)| d.ball.eq_tol(c.domain(), 0.0))
                .map(|(n, _)| n.clone())
                .unwrap_or_default();
            (
                name.clone(),
                ConfigDoc {
                    domain,
                    maps: c.maps().iter().map(map_doc).collect(),
                },
            )
        })
        .collect();
    let trees = scene
        .trees
        .iter()
        .map(|(name, t)| {
            let find_domain = |ball: &ProductBall, factor: Factor| {
                scene
                    .domains
                    .iter()
                    .find(|(_, d)| d.factor == factor && d.ball.eq_tol(ball, 0.0))
                    .map(|(n, _)| n.clone())
                    .unwrap_or_default()
            };
            let vertices = t
                .vertices
                .iter()
                .map(|v| VertexDoc {
                    white: v.white,
                    black: v.black,
                    xi: v.xi.clone(),
                    edges: v
                        .edges
                        .iter()
                        .map(|e| match e {
                            EdgeTarget::Input(k) => EdgeDoc::Input(*k),
                            EdgeTarget::Child(c) => EdgeDoc::Child(*c),
                        })
                        .collect(),
                    p: v.p.maps().iter().map(map_doc).collect(),
                    q: v.q.maps().iter().map(map_doc).collect(),
                })
                .collect();
            (
                name.clone(),
                TreeDoc {
                    domain_v: find_domain(t.domain_v(), Factor::V),
                    domain_w: find_domain(t.domain_w(), Factor::W),
                    root: t.root,
                    inputs: t.inputs,
                    vertices,
                },
            )
        })
        .collect();
    SceneDoc {
        block_structure: StructureDoc {
            dimension: dim,
            coarse: to_one_based(scene.structure.coarse_blocks()),
            fine: to_one_based(scene.structure.fine_blocks()),
            factor_split: scene.factor_split,
        },
        numeric_mode: match scene.mode {
            NumericMode::Exact => "exact".into(),
            NumericMode::Float => "float".into(),
        },
        group,
        domains,
        configs,
        trees,
        settings: Some(SettingsDoc {
            separation: Some(ScalarRepr::Str(format_rational(&scene.params.separation))),
            shrink: Some(ScalarRepr::Str(format_rational(&scene.params.shrink))),
            tolerance: Some(scene.params.tol),
            step_cap: Some(scene.params.step_cap),
        }),
    }
}

/// Canonical serialization: sorted maps, reduced rationals, fixed field
/// order, trailing newline.
pub fn serialize_scene(scene: &Scene) -> Vec<u8> {
    let doc = scene_doc(scene);
    let mut out = serde_json::to_vec_pretty(&doc).expect("scene serializes");
    out.push(b'\n');
    out
}

/// A configuration's maps as a JSON value in the scene wire format.
pub fn config_json(config: &Config) -> serde_json::Value {
    let docs: Vec<MapDoc> = config.maps().iter().map(map_doc).collect();
    serde_json::to_value(docs).expect("maps serialize")
}

impl Scene {
    /// Re-express every scalar of the scene in another numeric mode.
    /// Float → exact is lossless; exact → float rounds.
    pub fn convert(&self, mode: NumericMode) -> Result<Scene, Error> {
        if mode == self.mode {
            return Ok(self.clone());
        }
        let domains: BTreeMap<String, NamedDomain> = self
            .domains
            .iter()
            .map(|(name, d)| {
                (
                    name.clone(),
                    NamedDomain {
                        factor: d.factor,
                        ball: d.ball.convert(mode),
                    },
                )
            })
            .collect();
        let mut configs = BTreeMap::new();
        for (name, c) in &self.configs {
            configs.insert(name.clone(), c.convert(mode)?);
        }
        let mut trees = BTreeMap::new();
        for (name, t) in &self.trees {
            let vertices = t
                .vertices
                .iter()
                .map(|v| {
                    Ok(TreeVertex {
                        white: v.white,
                        black: v.black,
                        xi: v.xi.clone(),
                        edges: v.edges.clone(),
                        p: v.p.convert(mode)?,
                        q: v.q.convert(mode)?,
                    })
                })
                .collect::<Result<Vec<_>, Error>>()?;
            trees.insert(
                name.clone(),
                SuperTree {
                    vertices,
                    root: t.root,
                    inputs: t.inputs,
                },
            );
        }
        Ok(Scene {
            mode,
            structure: self.structure.clone(),
            factor_split: self.factor_split,
            group: self.group.clone(),
            domains,
            configs,
            trees,
            params: self.params.clone(),
        })
    }

    pub fn config(&self, name: &str) -> Result<&Config, Error> {
        self.configs
            .get(name)
            .ok_or_else(|| err("configs", format!("unknown config {:?}", name)))
    }

    pub fn domain(&self, name: &str) -> Result<&NamedDomain, Error> {
        self.domains
            .get(name)
            .ok_or_else(|| err("domains", format!("unknown domain {:?}", name)))
    }

    pub fn tree(&self, name: &str) -> Result<&SuperTree, Error> {
        self.trees
            .get(name)
            .ok_or_else(|| err("trees", format!("unknown tree {:?}", name)))
    }

    /// Structural equality up to float tolerance 0 (used by round-trip
    /// tests).
    pub fn structurally_equal(&self, other: &Scene) -> bool {
        if self.mode != other.mode
            || *self.structure != *other.structure
            || self.factor_split != other.factor_split
            || *self.group != *other.group
            || self.params != other.params
        {
            return false;
        }
        if self.domains.len() != other.domains.len()
            || self.configs.len() != other.configs.len()
            || self.trees.len() != other.trees.len()
        {
            return false;
        }
        for (name, d) in &self.domains {
            match other.domains.get(name) {
                Some(o) if o.factor == d.factor && o.ball.eq_tol(&d.ball, 0.0) => {}
                _ => return false,
            }
        }
        for (name, c) in &self.configs {
            match other.configs.get(name) {
                Some(o) if o.eq_tol(c, 0.0) => {}
                _ => return false,
            }
        }
        for (name, t) in &self.trees {
            match other.trees.get(name) {
                Some(o) => {
                    if o.root != t.root || o.inputs != t.inputs || o.vertices.len() != t.vertices.len()
                    {
                        return false;
                    }
                    for (a, b) in t.vertices.iter().zip(&o.vertices) {
                        if a.white != b.white
                            || a.black != b.black
                            || a.xi != b.xi
                            || a.edges != b.edges
                            || !a.p.eq_tol(&b.p, 0.0)
                            || !a.q.eq_tol(&b.q, 0.0)
                        {
                            return false;
                        }
                    }
                }
                None => return false,
            }
        }
        true
    }
}
