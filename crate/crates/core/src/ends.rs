//! Topology of the infinite-type covers: reduced genus of pieces, the
//! bipartite gluing graph, exhaustion trees and end counts.
//!
//! The base sphere minus the limit set is cut into a compact region `D` (the
//! points `inf, 0, 1` and the first `l` branch points accumulating at each
//! limit point) and one small disk `U_j` around each limit point `q_j`. For a
//! Galois cover with abelian group `G`, the components over a region `V` are
//! the cosets of the subgroup generated by the loops inside `V`. Components
//! over `D` are called black, those over the disks white; a black and a white
//! component share boundary exactly when their cosets meet.
//!
//! When the black components form an infinite family, removing finitely many
//! of them leaves the white components over the same coset of the full
//! monodromy image connected, provided each white class meets infinitely many
//! blacks. Otherwise the compact core is the whole preimage of `D` and every
//! white component is its own unbounded piece.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize, Serializer};
use thiserror::Error;

use crate::abelian::{AbelianError, GroupElement, Subgroup};
use crate::curve::{genus_formula, CoverSpec, CurveError};
use crate::monodromy::{default_basepoint, euler_genus_oracle, MonodromyError, MonodromyRep};
use crate::point::ExtendedComplex;
use crate::tower::{LimitConfiguration, TowerError};

/// Extra points materialized per limit point beyond the exhaustion depth.
const AMBIENT_MARGIN: usize = 3;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EndsError {
    #[error(transparent)]
    Abelian(#[from] AbelianError),
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Monodromy(#[from] MonodromyError),
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error("not a compact subsurface: chi = {chi}, q = {q}")]
    InvalidSubsurface { chi: i128, q: i128 },
    #[error("region is empty")]
    EmptyRegion,
    #[error("unsupported region: {0}")]
    UnsupportedRegion(String),
    #[error("exhaustion depth {0} is below the minimum of 3")]
    InsufficientDepth(usize),
    #[error("{what} count {count} exceeds the cap {cap}")]
    TooLarge {
        what: &'static str,
        count: u128,
        cap: usize,
    },
    #[error("invalid family: {0}")]
    InvalidFamily(String),
}

/// `1 - (chi + q) / 2` for a compact subsurface with `q` boundary curves.
pub fn reduced_genus(chi: i128, q: i128) -> Result<i128, EndsError> {
    if q < 0 || chi + q > 2 || (chi + q).rem_euclid(2) != 0 {
        return Err(EndsError::InvalidSubsurface { chi, q });
    }
    Ok(1 - (chi + q) / 2)
}

/// Number of components over a disk containing the listed branch points.
pub fn region_component_count(
    rep: &MonodromyRep,
    region: &BTreeSet<usize>,
) -> Result<u128, EndsError> {
    if region.is_empty() {
        return Err(EndsError::EmptyRegion);
    }
    if let Some(&bad) = region.iter().find(|&&i| i >= rep.len()) {
        return Err(AbelianError::GeneratorOutOfRange {
            index: bad,
            max: rep.len(),
        }
        .into());
    }
    let gens: Vec<usize> = region.iter().copied().collect();
    Ok(rep.image_of(&gens)?.index()?)
}

/// Topological data of one component over a base region.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PieceData {
    /// Degree of the component over the region.
    pub degree: u128,
    pub euler_characteristic: i128,
    /// Boundary curves plus punctures.
    pub boundary_loops: u128,
    pub reduced_genus: i128,
}

fn sum(k: u32, level: usize, elems: &[&GroupElement]) -> GroupElement {
    elems
        .iter()
        .fold(GroupElement::identity(k, level), |acc, g| {
            acc.compose(g).expect("same group")
        })
}

/// Component data over a region of Euler characteristic `base_chi` (before
/// removing points), containing the branch points `points`, the punctures
/// `punctures`, and bounded by curves with monodromy `boundaries`.
fn piece(
    rep: &MonodromyRep,
    stabilizer: &Subgroup,
    base_chi: i128,
    points: &[usize],
    punctures: &[usize],
    boundaries: &[GroupElement],
) -> Result<PieceData, EndsError> {
    let d = stabilizer.order()?;
    let di = d as i128;
    let mut chi = di * (base_chi - points.len() as i128 - punctures.len() as i128);
    for &i in points {
        chi += di / rep.elements[i].order() as i128;
    }
    let mut q: u128 = 0;
    for c in boundaries {
        q += d / c.order() as u128;
    }
    for &i in punctures {
        q += d / rep.elements[i].order() as u128;
    }
    let reduced_genus = reduced_genus(chi, q as i128)?;
    Ok(PieceData {
        degree: d,
        euler_characteristic: chi,
        boundary_loops: q,
        reduced_genus,
    })
}

/// Where a point of an ambient model sits relative to the limit set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PointRole {
    /// One of `inf, 0, 1`.
    Anchor,
    /// The `rank`-th branch point (1-based) accumulating at limit point `limit`.
    Branch { limit: usize, rank: usize },
    /// The limit point itself, removed from the surface.
    Puncture { limit: usize },
}

/// A finite monodromy model of an infinite-type cover, with every point
/// tagged by its role.
#[derive(Debug, Clone, PartialEq)]
pub struct AmbientModel {
    pub rep: MonodromyRep,
    pub roles: Vec<PointRole>,
    pub limit_count: usize,
}

impl AmbientModel {
    fn core_indices(&self, depth: usize) -> Vec<usize> {
        (0..self.roles.len())
            .filter(|&i| match self.roles[i] {
                PointRole::Anchor => true,
                PointRole::Branch { rank, .. } => rank <= depth,
                PointRole::Puncture { .. } => false,
            })
            .collect()
    }

    fn disk_indices(&self, j: usize, depth: usize) -> (Vec<usize>, Vec<usize>) {
        let mut branch = Vec::new();
        let mut punct = Vec::new();
        for (i, r) in self.roles.iter().enumerate() {
            match *r {
                PointRole::Branch { limit, rank } if limit == j && rank > depth => branch.push(i),
                PointRole::Puncture { limit } if limit == j => punct.push(i),
                _ => {}
            }
        }
        (branch, punct)
    }
}

/// A family of surfaces whose exhaustions can be built at any depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum SurfaceFamily {
    /// A compact generalized Fermat curve with the given `l_j`.
    FiniteType {
        k: u32,
        #[serde(with = "crate::point::complex_vec")]
        lambdas: Vec<Complex64>,
    },
    /// The `Z_k`-tower over a branch set accumulating at finitely many limit
    /// points, with the listed limit points deleted.
    Fermat {
        k: u32,
        config: LimitConfiguration,
        deleted: Vec<usize>,
    },
    /// The double cover branched over the same kind of branch set; `bits[j]`
    /// is the monodromy around limit point `j` for `j < N`.
    Hyperelliptic {
        config: LimitConfiguration,
        bits: Vec<u8>,
    },
}

impl SurfaceFamily {
    pub fn is_infinite_type(&self) -> bool {
        !matches!(self, Self::FiniteType { .. })
    }

    /// Finite model with `depth` points materialized per limit point.
    pub fn ambient(&self, depth: usize) -> Result<AmbientModel, EndsError> {
        match self {
            Self::FiniteType { k, lambdas } => {
                let spec = CoverSpec::finite_type(*k, lambdas)?;
                let rep = MonodromyRep::standard(&spec, default_basepoint(&spec));
                let roles = vec![PointRole::Anchor; rep.len()];
                Ok(AmbientModel {
                    rep,
                    roles,
                    limit_count: 0,
                })
            }
            Self::Fermat { k, config, deleted } => {
                if config.limit_points.is_empty() {
                    return Err(EndsError::InvalidFamily(
                        "a Fermat tower needs a limit point".into(),
                    ));
                }
                let cfg = LimitConfiguration {
                    depth,
                    ..config.clone()
                };
                let b = cfg.materialize_branch_set()?;
                let level = b.points.len() - 1;
                let spec = cfg.cover_spec(*k, deleted, level)?;
                let mut rep = MonodromyRep::standard(&spec, default_basepoint(&spec));
                let mut roles = vec![PointRole::Anchor; 3];
                roles.extend(deleted.iter().map(|&j| PointRole::Puncture { limit: j }));
                for (i, src) in b.source.iter().enumerate().skip(3) {
                    let j = src.expect("generated point");
                    let rank = b.part(j).iter().position(|&x| x == i).expect("in part") + 1;
                    roles.push(PointRole::Branch { limit: j, rank });
                }
                for (j, q) in config.limit_points.iter().enumerate() {
                    if !deleted.contains(&j) {
                        rep.points.push(ExtendedComplex::Finite(*q));
                        rep.elements.push(GroupElement::identity(*k, rep.level));
                        roles.push(PointRole::Puncture { limit: j });
                    }
                }
                Ok(AmbientModel {
                    rep,
                    roles,
                    limit_count: config.limit_points.len(),
                })
            }
            Self::Hyperelliptic { config, bits } => {
                let q = &config.limit_points;
                if q.is_empty() || bits.len() + 1 != q.len() || bits.iter().any(|&b| b > 1) {
                    return Err(EndsError::InvalidFamily(format!(
                        "{} limit points need {} bits in {{0, 1}}",
                        q.len(),
                        q.len().saturating_sub(1)
                    )));
                }
                let cfg = LimitConfiguration {
                    depth,
                    ..config.clone()
                };
                let b = cfg.materialize_branch_set()?;
                let one = GroupElement::generator(2, 1, 1)?;
                let zero = GroupElement::identity(2, 1);
                let mut points = b.points.clone();
                let mut elements = vec![one.clone(); points.len()];
                let mut roles = vec![PointRole::Anchor; 3];
                for (i, src) in b.source.iter().enumerate().skip(3) {
                    let j = src.expect("generated point");
                    let rank = b.part(j).iter().position(|&x| x == i).expect("in part") + 1;
                    roles.push(PointRole::Branch { limit: j, rank });
                }
                let mut parity = points.len() as u32 % 2;
                for (j, &z) in q.iter().enumerate() {
                    let bit = if j < bits.len() {
                        bits[j] as u32
                    } else {
                        parity
                    };
                    parity = (parity + bit) % 2;
                    points.push(ExtendedComplex::Finite(z));
                    elements.push(if bit == 1 { one.clone() } else { zero.clone() });
                    roles.push(PointRole::Puncture { limit: j });
                }
                debug_assert_eq!(parity, 0);
                let rep = MonodromyRep {
                    basepoint: Complex64::new(0.0, 0.0),
                    k: 2,
                    level: 1,
                    points,
                    elements,
                    orientation_power: None,
                };
                Ok(AmbientModel {
                    rep,
                    roles,
                    limit_count: q.len(),
                })
            }
        }
    }

    /// Genus when the surface is compact.
    pub fn finite_genus(&self) -> Option<i128> {
        match self {
            Self::FiniteType { k, lambdas } => genus_formula(*k, lambdas.len() as u32 + 2).ok(),
            _ => None,
        }
    }
}

/// Subgroups attached to the exhaustion at one depth.
struct LevelRegions {
    core: Subgroup,
    disks: Vec<Subgroup>,
    core_piece: PieceData,
    disk_pieces: Vec<PieceData>,
}

fn level_regions(model: &AmbientModel, depth: usize) -> Result<LevelRegions, EndsError> {
    let rep = &model.rep;
    let core_pts = model.core_indices(depth);
    let mut boundaries = Vec::new();
    let mut disks = Vec::new();
    let mut disk_pieces = Vec::new();
    for j in 0..model.limit_count {
        let (branch, punct) = model.disk_indices(j, depth);
        let all: Vec<usize> = branch.iter().chain(&punct).copied().collect();
        let refs: Vec<&GroupElement> = all.iter().map(|&i| &rep.elements[i]).collect();
        let c = sum(rep.k, rep.level, &refs);
        let g = rep.image_of(&all)?;
        disk_pieces.push(piece(
            rep,
            &g,
            1,
            &branch,
            &punct,
            std::slice::from_ref(&c),
        )?);
        boundaries.push(c);
        disks.push(g);
    }
    let mut gens: Vec<GroupElement> = core_pts.iter().map(|&i| rep.elements[i].clone()).collect();
    gens.extend(boundaries.iter().cloned());
    let core = Subgroup::span(rep.k, rep.level, &gens)?;
    let core_piece = piece(
        rep,
        &core,
        2 - model.limit_count as i128,
        &core_pts,
        &[],
        &boundaries,
    )?;
    Ok(LevelRegions {
        core,
        disks,
        core_piece,
        disk_pieces,
    })
}

/// Caps on the enumerations behind an exhaustion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndsCaps {
    /// Black components kept in the compact core when they form an infinite family.
    pub core_blacks: usize,
    /// Maximum number of nodes per level.
    pub nodes: usize,
    /// Levels with constant counts required before an end count is accepted.
    pub window: usize,
}

impl Default for EndsCaps {
    fn default() -> Self {
        Self {
            core_blacks: 16,
            nodes: 4096,
            window: 3,
        }
    }
}

/// An unbounded complementary component of the compact core at some depth.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub level: usize,
    pub parent: Option<usize>,
    pub children: Vec<usize>,
    /// Limit points whose disks contribute white components to this node.
    pub limit_points: Vec<usize>,
    /// Number of white components in the node.
    pub whites: u128,
    /// Reduced genus of one white piece in the finite model.
    pub white_genus: i128,
    /// Whether the genus of the node grows without bound as the model is refined.
    pub infinite_genus: bool,
    #[serde(skip)]
    anchor: Option<(usize, GroupElement)>,
}

/// Nested unbounded components, one level per exhaustion depth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustionTree {
    pub depth: usize,
    /// Node indices per level, level 0 being the root.
    pub levels: Vec<Vec<usize>>,
    pub nodes: Vec<TreeNode>,
    /// Whether the black components at each level form an infinite family.
    pub infinite_core: Vec<bool>,
    /// Reduced genus of one black component at each level.
    pub core_genus: Vec<i128>,
}

/// Builds the exhaustion tree of `family` down to `depth`.
pub fn exhaustion_tree(
    family: &SurfaceFamily,
    depth: usize,
    caps: EndsCaps,
) -> Result<ExhaustionTree, EndsError> {
    if depth < 3 {
        return Err(EndsError::InsufficientDepth(depth));
    }
    let model = family.ambient(depth + AMBIENT_MARGIN)?;
    let larger = family.ambient(depth + AMBIENT_MARGIN + 1)?;
    let image = model.rep.image()?;
    let infinite_type = family.is_infinite_type();
    let mut nodes = vec![TreeNode {
        level: 0,
        parent: None,
        children: Vec::new(),
        limit_points: (0..model.limit_count).collect(),
        whites: 0,
        white_genus: 0,
        infinite_genus: infinite_type,
        anchor: None,
    }];
    let mut levels = vec![vec![0]];
    let mut infinite_core = Vec::new();
    let mut core_genus = Vec::new();
    // Lookup of the previous level: maps a white component to its node.
    let mut previous: Option<(
        LevelRegions,
        bool,
        BTreeMap<Vec<u32>, usize>,
        BTreeMap<(usize, Vec<u32>), usize>,
    )> = None;
    for level in 1..=depth {
        let regions = level_regions(&model, level)?;
        let bigger = level_regions(&larger, level)?;
        let grows =
            |a: &Subgroup, b: &Subgroup| -> Result<bool, EndsError> { Ok(b.index()? > a.index()?) };
        let blacks_infinite = grows(&regions.core, &bigger.core)?;
        infinite_core.push(blacks_infinite);
        core_genus.push(regions.core_piece.reduced_genus);
        let mut merged = BTreeMap::new();
        let mut singles = BTreeMap::new();
        let mut ids = Vec::new();
        let parent_of = |j: usize, y: &GroupElement| -> Result<usize, EndsError> {
            match &previous {
                None => Ok(0),
                Some((prev, prev_infinite, prev_merged, prev_singles)) => {
                    let found = if *prev_infinite {
                        prev_merged
                            .get(image_reduce(&image, y)?.exponents())
                            .copied()
                    } else {
                        prev_singles
                            .get(&(j, prev.disks[j].reduce(y)?.exponents().to_vec()))
                            .copied()
                    };
                    found.ok_or_else(|| {
                        EndsError::UnsupportedRegion("nested components do not match".into())
                    })
                }
            }
        };
        if blacks_infinite {
            for (j, d) in regions.disks.iter().enumerate() {
                let wj = regions.core.join(d)?;
                let bj = larger_join(&bigger, j)?;
                if bj.order()? * regions.core.order()? <= wj.order()? * bigger.core.order()? {
                    return Err(EndsError::UnsupportedRegion(format!(
                        "disk {j} meets only finitely many core components"
                    )));
                }
            }
            let count = image.index()?;
            if count > caps.nodes as u128 {
                return Err(EndsError::TooLarge {
                    what: "node",
                    count,
                    cap: caps.nodes,
                });
            }
            for y in image.coset_representatives(caps.nodes) {
                let whites: u128 = regions
                    .disks
                    .iter()
                    .map(|d| Ok::<u128, AbelianError>(d.index()? / image.index()?))
                    .sum::<Result<u128, _>>()?;
                let parent = if model.limit_count == 0 {
                    0
                } else {
                    parent_of(0, &y)?
                };
                let id = nodes.len();
                nodes.push(TreeNode {
                    level,
                    parent: Some(parent),
                    children: Vec::new(),
                    limit_points: (0..model.limit_count).collect(),
                    whites,
                    white_genus: regions
                        .disk_pieces
                        .iter()
                        .map(|p| p.reduced_genus)
                        .min()
                        .unwrap_or(0),
                    infinite_genus: infinite_type
                        && regions.disk_pieces.iter().any(|p| p.reduced_genus >= 1),
                    anchor: Some((0, y.clone())),
                });
                nodes[parent].children.push(id);
                merged.insert(y.exponents().to_vec(), id);
                ids.push(id);
            }
        } else {
            let total: u128 = regions
                .disks
                .iter()
                .map(|d| d.index())
                .sum::<Result<u128, _>>()?;
            if total > caps.nodes as u128 {
                return Err(EndsError::TooLarge {
                    what: "node",
                    count: total,
                    cap: caps.nodes,
                });
            }
            for (j, d) in regions.disks.iter().enumerate() {
                for y in d.coset_representatives(caps.nodes) {
                    let parent = parent_of(j, &y)?;
                    let id = nodes.len();
                    let p = &regions.disk_pieces[j];
                    nodes.push(TreeNode {
                        level,
                        parent: Some(parent),
                        children: Vec::new(),
                        limit_points: vec![j],
                        whites: 1,
                        white_genus: p.reduced_genus,
                        infinite_genus: infinite_type && p.reduced_genus >= 1,
                        anchor: Some((j, y.clone())),
                    });
                    nodes[parent].children.push(id);
                    singles.insert((j, y.exponents().to_vec()), id);
                    ids.push(id);
                }
            }
        }
        levels.push(ids);
        previous = Some((regions, blacks_infinite, merged, singles));
    }
    Ok(ExhaustionTree {
        depth,
        levels,
        nodes,
        infinite_core,
        core_genus,
    })
}

fn image_reduce(image: &Subgroup, y: &GroupElement) -> Result<GroupElement, EndsError> {
    Ok(image.reduce(y)?)
}

fn larger_join(regions: &LevelRegions, j: usize) -> Result<Subgroup, EndsError> {
    Ok(regions.core.join(&regions.disks[j])?)
}

/// End count read off an exhaustion tree.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndsReport {
    pub ends: usize,
    pub infinite_genus_ends: usize,
    pub stabilized: bool,
    /// First level from which the node count stays constant with no further splitting.
    pub stabilized_at: Option<usize>,
    pub counts: Vec<usize>,
}

/// Counts ends as the leaves of the tree, requiring the last `window` levels
/// to agree with every node having exactly one child.
pub fn count_ends(tree: &ExhaustionTree, window: usize) -> Result<EndsReport, EndsError> {
    if tree.depth < 3 {
        return Err(EndsError::InsufficientDepth(tree.depth));
    }
    let counts: Vec<usize> = tree.levels.iter().skip(1).map(|l| l.len()).collect();
    let d = tree.depth;
    let simple = |level: usize| {
        tree.levels[level]
            .iter()
            .all(|&i| tree.nodes[i].children.len() == 1)
    };
    let mut start = d;
    while start > 1 && counts[start - 2] == counts[d - 1] && simple(start - 1) {
        start -= 1;
    }
    let stabilized = d - start + 1 >= window.max(1);
    let leaves = &tree.levels[d];
    let infinite_genus_ends = leaves
        .iter()
        .filter(|&&i| tree.nodes[i].infinite_genus)
        .count();
    Ok(EndsReport {
        ends: leaves.len(),
        infinite_genus_ends,
        stabilized,
        stabilized_at: stabilized.then_some(start),
        counts,
    })
}

/// A genus value that may be infinite; serialized as an integer or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Genus {
    Finite(i128),
    #[serde(deserialize_with = "deserialize_inf")]
    Infinite,
}

fn deserialize_inf<'de, D: serde::Deserializer<'de>>(d: D) -> Result<(), D::Error> {
    let s = String::deserialize(d)?;
    if s == "inf" {
        Ok(())
    } else {
        Err(serde::de::Error::custom("expected \"inf\""))
    }
}

impl Serialize for Genus {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Finite(g) => s.serialize_i64(*g as i64),
            Self::Infinite => s.serialize_str("inf"),
        }
    }
}

/// Genus, number of ends and number of ends of infinite genus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassificationTriple {
    pub genus: Genus,
    pub ends: usize,
    pub infinite_genus_ends: usize,
    pub stabilized_at: Option<usize>,
}

impl ClassificationTriple {
    /// Infinite genus with exactly one end.
    pub fn is_loch_ness_monster(&self) -> bool {
        self.genus == Genus::Infinite && self.ends == 1 && self.infinite_genus_ends == 1
    }
}

/// Classifies a family from its exhaustion tree.
pub fn classify(
    family: &SurfaceFamily,
    depth: usize,
    caps: EndsCaps,
) -> Result<(ClassificationTriple, EndsReport), EndsError> {
    let tree = exhaustion_tree(family, depth, caps)?;
    let report = count_ends(&tree, caps.window)?;
    let genus = match family.finite_genus() {
        Some(g) => Genus::Finite(g),
        None if report.infinite_genus_ends > 0 => Genus::Infinite,
        None => Genus::Finite(*tree.core_genus.last().unwrap_or(&0)),
    };
    let triple = ClassificationTriple {
        genus,
        ends: report.ends,
        infinite_genus_ends: report.infinite_genus_ends,
        stabilized_at: report.stabilized_at,
    };
    Ok((triple, report))
}

/// A vertex of the gluing graph.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GluingVertex {
    pub name: String,
    pub representative: Vec<u32>,
    pub stabilizer: Vec<Vec<u32>>,
    #[serde(flatten)]
    pub piece: PieceData,
}

/// Bipartite graph of black (core) and white (disk) components.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GluingGraph {
    pub k: u32,
    pub level: usize,
    pub core_points: usize,
    /// Total number of black components at this truncation.
    pub black_total: u128,
    pub blacks: Vec<GluingVertex>,
    pub whites: Vec<GluingVertex>,
    /// `(black, white, shared boundary loops)`.
    pub edges: Vec<(usize, usize, u128)>,
    pub truncated: bool,
}

/// Caps for the gluing graph.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GluingCaps {
    pub blacks: usize,
    pub whites: usize,
}

impl Default for GluingCaps {
    fn default() -> Self {
        Self {
            blacks: 6,
            whites: 4096,
        }
    }
}

/// The gluing graph for a single limit point, with the compact region
/// containing the first `n` special points `inf, 0, 1, l_1, ..., l_{n-3}`.
pub fn build_gluing_graph(
    spec: &CoverSpec,
    rep: &MonodromyRep,
    n: usize,
    caps: GluingCaps,
) -> Result<GluingGraph, EndsError> {
    if spec.limit_points().len() != 1 || spec.deleted_count() != 0 {
        return Err(EndsError::UnsupportedRegion(
            "the gluing graph needs exactly one limit point and no deleted points".into(),
        ));
    }
    let len = rep.len();
    if n < 3 || n >= len {
        return Err(EndsError::UnsupportedRegion(format!(
            "core size {n} must lie in 3..{len}"
        )));
    }
    let core_pts: Vec<usize> = (0..n).collect();
    let disk_pts: Vec<usize> = (n..len).collect();
    let refs: Vec<&GroupElement> = disk_pts.iter().map(|&i| &rep.elements[i]).collect();
    let c = sum(rep.k, rep.level, &refs);
    let disk = rep.image_of(&disk_pts)?;
    let mut core_gens: Vec<GroupElement> =
        core_pts.iter().map(|&i| rep.elements[i].clone()).collect();
    core_gens.push(c.clone());
    let core = Subgroup::span(rep.k, rep.level, &core_gens)?;
    let black_piece = piece(rep, &core, 1, &core_pts, &[], std::slice::from_ref(&c))?;
    let white_piece = piece(rep, &disk, 1, &disk_pts, &[], std::slice::from_ref(&c))?;
    let black_total = core.index()?;
    let white_total = disk.index()?;
    if white_total > caps.whites as u128 {
        return Err(EndsError::TooLarge {
            what: "white",
            count: white_total,
            cap: caps.whites,
        });
    }
    let both = core.join(&disk)?;
    let meet = core.order()? * disk.order()? / both.order()?;
    let shared = meet / c.order() as u128;
    let vertex =
        |prefix: &str, i: usize, g: &GroupElement, s: &Subgroup, p: &PieceData| GluingVertex {
            name: format!("{prefix}{i}"),
            representative: g.exponents().to_vec(),
            stabilizer: s.canonical_form().to_vec(),
            piece: p.clone(),
        };
    let black_reps = core.coset_representatives(caps.blacks);
    let white_reps = disk.coset_representatives(caps.whites);
    let blacks: Vec<GluingVertex> = black_reps
        .iter()
        .enumerate()
        .map(|(i, g)| vertex("B", i, g, &core, &black_piece))
        .collect();
    let whites: Vec<GluingVertex> = white_reps
        .iter()
        .enumerate()
        .map(|(i, g)| vertex("W", i, g, &disk, &white_piece))
        .collect();
    let mut edges = Vec::new();
    for (b, x) in black_reps.iter().enumerate() {
        for (w, y) in white_reps.iter().enumerate() {
            if both.contains(&x.compose(&y.inverse())?)? {
                edges.push((b, w, shared));
            }
        }
    }
    Ok(GluingGraph {
        k: rep.k,
        level: rep.level,
        core_points: n,
        black_total,
        blacks,
        whites,
        edges,
        truncated: black_total > caps.blacks as u128,
    })
}

impl GluingGraph {
    pub fn is_bipartite(&self) -> bool {
        self.edges
            .iter()
            .all(|&(b, w, _)| b < self.blacks.len() && w < self.whites.len())
    }

    pub fn is_connected(&self) -> bool {
        let nb = self.blacks.len();
        let total = nb + self.whites.len();
        if total == 0 {
            return true;
        }
        let mut parent: Vec<usize> = (0..total).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let next = p[y];
                p[y] = r;
                y = next;
            }
            r
        }
        for &(b, w, _) in &self.edges {
            let (rb, rw) = (find(&mut parent, b), find(&mut parent, nb + w));
            parent[rb] = rw;
        }
        let root = find(&mut parent, 0);
        (0..total).all(|i| find(&mut parent, i) == root)
    }

    pub fn black_degree(&self, b: usize) -> usize {
        self.edges.iter().filter(|e| e.0 == b).count()
    }

    /// Sum of Euler characteristics over all pieces, and the value expected
    /// from Riemann–Hurwitz for the compact truncation.
    pub fn euler_check(&self, rep: &MonodromyRep) -> Result<(i128, i128), EndsError> {
        let white_chi = self
            .whites
            .first()
            .map(|w| w.piece.euler_characteristic)
            .unwrap_or(0);
        let black_chi = self
            .blacks
            .first()
            .map(|b| b.piece.euler_characteristic)
            .unwrap_or(0);
        let total = self.black_total as i128 * black_chi + self.whites.len() as i128 * white_chi;
        let expected = 2 - 2 * euler_genus_oracle(rep)?;
        Ok((total, expected))
    }

    /// Graphviz description with vertices `B0, B1, ...` and `W0, W1, ...`.
    pub fn to_dot(&self) -> String {
        let mut out = String::from("graph gluing {\n");
        for b in &self.blacks {
            let _ = writeln!(
                out,
                "  {} [style=filled, fillcolor=black, fontcolor=white];",
                b.name
            );
        }
        for w in &self.whites {
            let _ = writeln!(out, "  {} [shape=circle];", w.name);
        }
        for &(b, w, m) in &self.edges {
            let label = if m == 1 {
                String::new()
            } else {
                format!(" [label={m}]")
            };
            let _ = writeln!(
                out,
                "  {} -- {}{};",
                self.blacks[b].name, self.whites[w].name, label
            );
        }
        out.push_str("}\n");
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn reduced_genus_examples() {
        assert_eq!(reduced_genus(2, 0).unwrap(), 0);
        assert_eq!(reduced_genus(-1, 1).unwrap(), 1);
        assert_eq!(reduced_genus(-5, 3).unwrap(), 2);
        assert!(reduced_genus(-2, 1).is_err());
        assert!(reduced_genus(2, 2).is_err());
    }

    fn lnm(k: u32) -> SurfaceFamily {
        SurfaceFamily::Fermat {
            k,
            config: LimitConfiguration::new(vec![c(2.0, 1.0)], 8),
            deleted: vec![],
        }
    }

    #[test]
    fn singleton_tower_has_one_end() {
        let (triple, report) = classify(&lnm(2), 6, EndsCaps::default()).unwrap();
        assert!(report.stabilized);
        assert_eq!(report.stabilized_at, Some(1));
        assert!(triple.is_loch_ness_monster());
    }

    #[test]
    fn hyperelliptic_ends_match_limit_points() {
        let config = LimitConfiguration::new(vec![c(2.0, 1.0), c(-2.0, -1.5), c(0.5, 3.0)], 8);
        let family = SurfaceFamily::Hyperelliptic {
            config,
            bits: vec![1, 0],
        };
        let (triple, report) = classify(&family, 5, EndsCaps::default()).unwrap();
        assert!(report.stabilized);
        assert_eq!(triple.ends, 3);
        assert_eq!(triple.infinite_genus_ends, 3);
        assert_eq!(triple.genus, Genus::Infinite);
    }

    #[test]
    fn compact_surface_has_no_ends() {
        let family = SurfaceFamily::FiniteType {
            k: 3,
            lambdas: vec![c(-1.0, 0.5)],
        };
        let (triple, _) = classify(&family, 4, EndsCaps::default()).unwrap();
        assert_eq!(triple.ends, 0);
        assert_eq!(triple.genus, Genus::Finite(10));
    }

    #[test]
    fn gluing_graph_k2_n3() {
        let config = LimitConfiguration::new(vec![c(2.0, 1.0)], 4);
        let spec = config.cover_spec(2, &[], 6).unwrap();
        let rep = MonodromyRep::standard(&spec, c(0.0, -3.0));
        let g = build_gluing_graph(&spec, &rep, 3, GluingCaps::default()).unwrap();
        assert_eq!(g.blacks.len(), 6);
        assert_eq!(g.whites.len(), 4);
        assert_eq!(g.edges.len(), 24);
        assert!(g.is_bipartite() && g.is_connected());
        for b in &g.blacks {
            assert_eq!(b.piece.boundary_loops, 4);
            assert_eq!(b.piece.reduced_genus, genus_formula(2, 3).unwrap());
        }
        assert!(g.edges.iter().all(|e| e.2 == 1));
        let (total, expected) = g.euler_check(&rep).unwrap();
        assert_eq!(total, expected);
        assert!(g.to_dot().contains("B0 -- W0;"));
    }

    #[test]
    fn gluing_graph_rejects_two_limit_points() {
        let config = LimitConfiguration::new(vec![c(2.0, 1.0), c(-2.0, 1.0)], 4);
        let spec = config.cover_spec(2, &[0], 6).unwrap();
        let rep = MonodromyRep::standard(&spec, c(0.0, -3.0));
        assert!(matches!(
            build_gluing_graph(&spec, &rep, 3, GluingCaps::default()),
            Err(EndsError::UnsupportedRegion(_))
        ));
    }
}
