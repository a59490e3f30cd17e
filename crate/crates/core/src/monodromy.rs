//! Fibers, analytic continuation of lifts and the monodromy representation.
//!
//! Lifts are tracked in the affine chart `x1 = 1`, where every coordinate is a
//! `k`-th root of a linear radicand in the base variable `u`. Continuation
//! along a segment picks, for each coordinate, the root nearest to the
//! previous value and bisects whenever that choice is not clearly separated
//! from its siblings.
//!
//! Loops are counterclockwise. The loop around special point `s` is a circle
//! joined to the basepoint by a corridor; because the deck group is abelian the
//! corridor does not affect the resulting element. The monodromy at infinity
//! is obtained from the relation `m_inf = (m_0 m_1 ... )^{-1}` and checked
//! against a large circle enclosing every finite special point.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::{AbelianError, GroupElement, Subgroup};
use crate::curve::{
    apply_element, kth_roots, project_unchecked, residual, CoverSpec, CurveError,
    DEFAULT_RESIDUAL_TOL, MAX_ENUMERATION,
};
use crate::point::{complex_pair, ExtendedComplex, ProjectivePoint};

/// Acceptance margin for the nearest-root choice.
const ROOT_MARGIN: f64 = 0.4;
/// Loop radius as a fraction of the distance to the nearest other obstacle.
const LOOP_RADIUS_FACTOR: f64 = 0.4;
/// Smallest admissible step, relative to the segment length.
const MIN_STEP: f64 = 1e-12;
/// Vertices of the polygon used for circular loops.
const LOOP_VERTICES: usize = 64;
/// Tolerance when rounding coordinate ratios to roots of unity.
const ROOT_OF_UNITY_TOL: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MonodromyError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Abelian(#[from] AbelianError),
    #[error("base value {0} is a branch or limit point; use fixed_points for branched fibers")]
    BranchedFiber(String),
    #[error("continuation failed near u = {at}: step fell below the minimum")]
    ContinuationFailure { at: String },
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("start point projects to {found}, but the path starts at {expected}")]
    StartMismatch { expected: String, found: String },
    #[error("no corridor to {0} avoids the other special points")]
    PathPlanning(String),
    #[error("points are not in the same fiber: {0}")]
    NotSameFiber(String),
    #[error("coordinate ratio is ambiguous (distance {0:e} to nearest root of unity)")]
    Precision(f64),
    #[error("branch index {index} has monodromy of order {order}, expected {k}")]
    RamificationMismatch { index: usize, order: u32, k: u32 },
    #[error(
        "monodromy relation fails: product of loops is {product}, boundary loop gives {boundary}"
    )]
    RelationMismatch { product: String, boundary: String },
    #[error("monodromy representation is empty")]
    EmptyRepresentation,
}

/// A polyline in the finite plane avoiding the special and limit points.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathSpec {
    #[serde(with = "crate::point::complex_vec")]
    vertices: Vec<Complex64>,
    clearance: f64,
}

fn segment_distance(a: Complex64, b: Complex64, p: Complex64) -> f64 {
    let d = b - a;
    let len2 = d.norm_sqr();
    if len2 == 0.0 {
        return (p - a).norm();
    }
    let t = (((p - a) * d.conj()).re / len2).clamp(0.0, 1.0);
    (a + d * t - p).norm()
}

fn finite_obstacles(spec: &CoverSpec) -> Vec<Complex64> {
    spec.excluded_points()
        .iter()
        .filter_map(|p| p.as_finite())
        .collect()
}

fn path_clearance(vertices: &[Complex64], obstacles: &[Complex64]) -> f64 {
    let mut best = f64::INFINITY;
    for w in vertices.windows(2) {
        for &o in obstacles {
            best = best.min(segment_distance(w[0], w[1], o));
        }
    }
    if vertices.len() == 1 {
        for &o in obstacles {
            best = best.min((vertices[0] - o).norm());
        }
    }
    best
}

impl PathSpec {
    /// Validates a polyline against the obstacles of `spec`.
    pub fn new(spec: &CoverSpec, vertices: Vec<Complex64>) -> Result<Self, MonodromyError> {
        if vertices.is_empty() {
            return Err(MonodromyError::InvalidPath("no vertices".into()));
        }
        if vertices
            .iter()
            .any(|z| !z.re.is_finite() || !z.im.is_finite())
        {
            return Err(MonodromyError::InvalidPath("non-finite vertex".into()));
        }
        if vertices.windows(2).any(|w| w[0] == w[1]) {
            return Err(MonodromyError::InvalidPath(
                "consecutive vertices coincide".into(),
            ));
        }
        let clearance = path_clearance(&vertices, &finite_obstacles(spec));
        if clearance <= 0.0 || !clearance.is_finite() && !finite_obstacles(spec).is_empty() {
            return Err(MonodromyError::InvalidPath(
                "path meets a special point".into(),
            ));
        }
        Ok(Self {
            vertices,
            clearance,
        })
    }

    pub fn vertices(&self) -> &[Complex64] {
        &self.vertices
    }

    /// Minimum distance from the path to the special and limit points.
    pub fn clearance(&self) -> f64 {
        self.clearance
    }

    pub fn start(&self) -> Complex64 {
        self.vertices[0]
    }

    pub fn end(&self) -> Complex64 {
        self.vertices[self.vertices.len() - 1]
    }

    /// The same path traversed backwards.
    pub fn reversed(&self) -> Self {
        let mut vertices = self.vertices.clone();
        vertices.reverse();
        Self {
            vertices,
            clearance: self.clearance,
        }
    }
}

/// A recorded continuation: base values and the lifted points at accepted steps.
#[derive(Debug, Clone, PartialEq)]
pub struct Lift {
    pub base: Vec<Complex64>,
    pub points: Vec<ProjectivePoint>,
}

impl Lift {
    pub fn end(&self) -> &ProjectivePoint {
        self.points
            .last()
            .expect("a lift has at least its start point")
    }
}

fn fmt_c(z: Complex64) -> String {
    format!("{z}")
}

fn check_generic(spec: &CoverSpec, u: Complex64) -> Result<(), MonodromyError> {
    let scale = 1.0 + u.norm();
    if finite_obstacles(spec)
        .iter()
        .any(|o| (u - o).norm() <= 1e-12 * scale)
    {
        return Err(MonodromyError::BranchedFiber(fmt_c(u)));
    }
    Ok(())
}

/// All `k^L` points over a generic value `u`.
pub fn fiber(spec: &CoverSpec, u: Complex64) -> Result<Vec<ProjectivePoint>, MonodromyError> {
    check_generic(spec, u)?;
    let radicands: Vec<Option<Complex64>> = spec.radicands(u).into_iter().map(Some).collect();
    let rows =
        crate::curve::enumerate_root_products(&[Complex64::new(1.0, 0.0)], &radicands, spec.k())?;
    Ok(rows
        .into_iter()
        .map(|v| ProjectivePoint::new(v).expect("x1 = 1"))
        .collect())
}

fn chart_coordinates(p: &ProjectivePoint) -> Option<Vec<Complex64>> {
    let x = p.coords();
    if x[0].norm() < 1e-14 {
        return None;
    }
    Some(x.iter().map(|z| z / x[0]).collect())
}

fn track_segment(
    spec: &CoverSpec,
    special: &[ExtendedComplex],
    y: &mut [Complex64],
    a: Complex64,
    b: Complex64,
    trace: &mut Option<&mut Lift>,
) -> Result<(), MonodromyError> {
    let k = spec.k();
    let mut t: f64 = 0.0;
    let mut h: f64 = 0.125;
    let mut next = vec![Complex64::new(0.0, 0.0); y.len()];
    while t < 1.0 {
        let step = h.min(1.0 - t);
        let u = a + (b - a) * (t + step);
        let mut ok = true;
        for c in 1..y.len() {
            let roots = kth_roots(spec.radicand(special, c, u), k);
            let mut dists: Vec<(f64, usize)> = roots
                .iter()
                .enumerate()
                .map(|(i, r)| ((r - y[c]).norm(), i))
                .collect();
            dists.sort_by(|p, q| p.0.total_cmp(&q.0));
            if dists.len() > 1 && dists[0].0 >= ROOT_MARGIN * dists[1].0 {
                ok = false;
                break;
            }
            next[c] = roots[dists[0].1];
        }
        if ok {
            y[1..].copy_from_slice(&next[1..]);
            t += step;
            h = (2.0 * step).min(0.25);
            if let Some(lift) = trace.as_deref_mut() {
                lift.base.push(u);
                lift.points
                    .push(ProjectivePoint::new(y.to_vec()).expect("x1 = 1"));
            }
        } else {
            h = step / 2.0;
            if h < MIN_STEP {
                return Err(MonodromyError::ContinuationFailure { at: fmt_c(u) });
            }
        }
    }
    Ok(())
}

fn continue_impl(
    spec: &CoverSpec,
    path: &PathSpec,
    start: &ProjectivePoint,
    mut trace: Option<&mut Lift>,
) -> Result<ProjectivePoint, MonodromyError> {
    let r = residual(spec, start)?;
    if r.value > DEFAULT_RESIDUAL_TOL {
        return Err(CurveError::OffCurve {
            residual: r.value,
            tol: DEFAULT_RESIDUAL_TOL,
        }
        .into());
    }
    let u0 = ExtendedComplex::Finite(path.start());
    let found = project_unchecked(spec, start);
    if !found.approx_eq(&u0, 1e-9) {
        return Err(MonodromyError::StartMismatch {
            expected: u0.to_string(),
            found: found.to_string(),
        });
    }
    let mut y = chart_coordinates(start).expect("finite projection");
    let special = spec.special_points();
    for w in path.vertices().windows(2) {
        track_segment(spec, &special, &mut y, w[0], w[1], &mut trace)?;
    }
    let end = ProjectivePoint::new(y).expect("x1 = 1");
    let r = residual(spec, &end)?;
    if r.value > DEFAULT_RESIDUAL_TOL {
        return Err(CurveError::OffCurve {
            residual: r.value,
            tol: DEFAULT_RESIDUAL_TOL,
        }
        .into());
    }
    Ok(end)
}

/// Endpoint of the continuation of `start` along `path`.
pub fn continue_lift(
    spec: &CoverSpec,
    path: &PathSpec,
    start: &ProjectivePoint,
) -> Result<ProjectivePoint, MonodromyError> {
    continue_impl(spec, path, start, None)
}

/// Continuation recording every accepted step.
pub fn continue_lift_traced(
    spec: &CoverSpec,
    path: &PathSpec,
    start: &ProjectivePoint,
) -> Result<Lift, MonodromyError> {
    let mut lift = Lift {
        base: vec![path.start()],
        points: vec![start.clone()],
    };
    continue_impl(spec, path, start, Some(&mut lift))?;
    Ok(lift)
}

/// The unique deck element `h` with `h p = q`.
pub fn identify_deck_element(
    spec: &CoverSpec,
    p: &ProjectivePoint,
    q: &ProjectivePoint,
) -> Result<GroupElement, MonodromyError> {
    let k = spec.k();
    let level = spec.group_level();
    for x in [p, q] {
        let r = residual(spec, x)?;
        if r.value > DEFAULT_RESIDUAL_TOL {
            return Err(CurveError::OffCurve {
                residual: r.value,
                tol: DEFAULT_RESIDUAL_TOL,
            }
            .into());
        }
    }
    let (pu, qu) = (project_unchecked(spec, p), project_unchecked(spec, q));
    if !pu.approx_eq(&qu, 1e-8) {
        return Err(MonodromyError::NotSameFiber(format!(
            "projections {pu} and {qu} differ"
        )));
    }
    let (xp, xq) = (p.coords(), q.coords());
    const ZERO: f64 = 1e-9;
    for c in 0..xp.len() {
        if (xp[c].norm() < ZERO) != (xq[c].norm() < ZERO) {
            return Err(MonodromyError::NotSameFiber(format!(
                "coordinate {} vanishes on one point only",
                c + 1
            )));
        }
    }
    // The last coordinate is never scaled by a_1..a_L; fall back to another
    // reference coordinate when it vanishes (then a_{L+1} fixes both points).
    let reference = std::iter::once(level)
        .chain(0..level)
        .find(|&c| xp[c].norm() >= ZERO)
        .expect("nonzero point");
    let mut exps = vec![0u32; level];
    for (c, e) in exps.iter_mut().enumerate() {
        if c == reference || xp[c].norm() < ZERO {
            continue;
        }
        let ratio = (xq[c] / xq[reference]) / (xp[c] / xp[reference]);
        let t = (ratio.arg() * k as f64 / (2.0 * PI)).round() as i64;
        let err = (ratio - crate::curve::root_of_unity(k, t)).norm();
        if err >= ROOT_OF_UNITY_TOL {
            if err > 1e-3 {
                return Err(MonodromyError::NotSameFiber(format!(
                    "coordinate ratio {ratio} is not a root of unity"
                )));
            }
            return Err(MonodromyError::Precision(err));
        }
        *e = t.rem_euclid(k as i64) as u32;
    }
    let h = GroupElement::new(k, exps)?;
    let image = apply_element(spec, &h, p)?;
    if image.distance(q) >= 1e-9 {
        return Err(MonodromyError::NotSameFiber(format!(
            "best candidate misses by {:e}",
            image.distance(q)
        )));
    }
    Ok(h)
}

/// Default basepoint: the grid point of `|u| <= 2 max|b|` farthest from every obstacle.
pub fn default_basepoint(spec: &CoverSpec) -> Complex64 {
    let obstacles = finite_obstacles(spec);
    let radius = 2.0 * obstacles.iter().map(|z| z.norm()).fold(1.0, f64::max);
    const GRID: i32 = 40;
    let mut best = (f64::NEG_INFINITY, Complex64::new(0.0, 0.0));
    for i in -GRID..=GRID {
        for j in -GRID..=GRID {
            let u = Complex64::new(i as f64, j as f64) * (radius / GRID as f64);
            if u.norm() > radius {
                continue;
            }
            let d = obstacles
                .iter()
                .map(|o| (u - o).norm())
                .fold(f64::INFINITY, f64::min);
            if d > best.0 + 1e-12 {
                best = (d, u);
            }
        }
    }
    best.1
}

fn loop_radius(obstacles: &[Complex64], center: Complex64) -> f64 {
    let nearest = obstacles
        .iter()
        .filter(|&&o| o != center)
        .map(|o| (o - center).norm())
        .fold(f64::INFINITY, f64::min);
    if nearest.is_finite() {
        LOOP_RADIUS_FACTOR * nearest
    } else {
        LOOP_RADIUS_FACTOR * (1.0 + center.norm())
    }
}

fn circle(center: Complex64, start: Complex64) -> Vec<Complex64> {
    let offset = start - center;
    (0..=LOOP_VERTICES)
        .map(|i| {
            center + offset * Complex64::from_polar(1.0, 2.0 * PI * i as f64 / LOOP_VERTICES as f64)
        })
        .collect()
}

/// Corridor vertices from `u0` to a point `w` with `|w - center| > radius`; the
/// loop then starts on the circle where the ray from `center` to `w` meets it.
fn corridor(
    obstacles: &[Complex64],
    u0: Complex64,
    center: Complex64,
    radius: f64,
) -> Option<Vec<Complex64>> {
    let others: Vec<Complex64> = obstacles.iter().copied().filter(|&o| o != center).collect();
    let min_gap = obstacles
        .iter()
        .enumerate()
        .flat_map(|(i, a)| obstacles[i + 1..].iter().map(move |b| (a - b).norm()))
        .fold(f64::INFINITY, f64::min);
    let delta = if min_gap.is_finite() {
        0.25 * min_gap
    } else {
        0.25
    };
    let attach = |w: Complex64| center + (w - center) * (radius / (w - center).norm());
    let clear = |vs: &[Complex64]| path_clearance(vs, &others) >= delta;
    if (u0 - center).norm() > 2.0 * radius {
        let straight = vec![u0, attach(u0)];
        if clear(&straight) {
            return Some(straight);
        }
    }
    let scale = 2.0
        * obstacles
            .iter()
            .chain(std::iter::once(&u0))
            .map(|z| z.norm())
            .fold(1.0, f64::max);
    const GRID: i32 = 24;
    let mut candidates = Vec::new();
    for i in -GRID..=GRID {
        for j in -GRID..=GRID {
            let w = Complex64::new(i as f64, j as f64) * (scale / GRID as f64);
            if (w - center).norm() <= 2.0 * radius || w == u0 {
                continue;
            }
            candidates.push(((u0 - w).norm() + (w - center).norm(), w));
        }
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates
        .into_iter()
        .map(|(_, w)| vec![u0, w, attach(w)])
        .find(|vs| clear(vs))
}

/// Closed counterclockwise loop based at `u0` around the finite point `center`.
pub fn loop_path(
    spec: &CoverSpec,
    u0: Complex64,
    center: Complex64,
) -> Result<PathSpec, MonodromyError> {
    let obstacles = finite_obstacles(spec);
    let radius = loop_radius(&obstacles, center).min(0.5 * (u0 - center).norm());
    let mut vertices = corridor(&obstacles, u0, center, radius)
        .ok_or_else(|| MonodromyError::PathPlanning(fmt_c(center)))?;
    let back: Vec<Complex64> = vertices[..vertices.len() - 1]
        .iter()
        .rev()
        .copied()
        .collect();
    let start = *vertices.last().expect("corridor is nonempty");
    vertices.extend(circle(center, start).into_iter().skip(1));
    vertices.extend(back);
    PathSpec::new(spec, vertices)
}

/// Monodromy of the counterclockwise loop around the finite special point with index `s`.
pub fn loop_monodromy(
    spec: &CoverSpec,
    u0: Complex64,
    s: usize,
) -> Result<GroupElement, MonodromyError> {
    let special = spec.special_points();
    let center = match special.get(s) {
        Some(ExtendedComplex::Finite(z)) => *z,
        Some(ExtendedComplex::Infinity) => {
            let rep = monodromy_representation_at(spec, u0)?;
            return Ok(rep.elements[s].clone());
        }
        None => {
            return Err(AbelianError::GeneratorOutOfRange {
                index: s + 1,
                max: special.len(),
            }
            .into());
        }
    };
    loop_monodromy_around(spec, u0, center)
}

/// Monodromy of the counterclockwise loop around an arbitrary finite obstacle.
pub fn loop_monodromy_around(
    spec: &CoverSpec,
    u0: Complex64,
    center: Complex64,
) -> Result<GroupElement, MonodromyError> {
    check_generic(spec, u0)?;
    let path = loop_path(spec, u0, center)?;
    let start = spec.principal_lift(u0)?;
    let end = continue_lift(spec, &path, &start)?;
    identify_deck_element(spec, &start, &end)
}

/// Monodromy of a large counterclockwise circle enclosing every finite obstacle.
pub fn boundary_monodromy(spec: &CoverSpec, u0: Complex64) -> Result<GroupElement, MonodromyError> {
    check_generic(spec, u0)?;
    let obstacles = finite_obstacles(spec);
    let radius = 1.5
        * obstacles
            .iter()
            .chain(std::iter::once(&u0))
            .map(|z| z.norm())
            .fold(1.0, f64::max);
    let dir = if u0.norm() > 0.0 {
        u0 / u0.norm()
    } else {
        Complex64::new(1.0, 0.0)
    };
    let start = dir * radius;
    let mut vertices = vec![u0];
    vertices.extend(circle(Complex64::new(0.0, 0.0), start));
    vertices.push(u0);
    let path = PathSpec::new(spec, vertices)?;
    let lift0 = spec.principal_lift(u0)?;
    let end = continue_lift(spec, &path, &lift0)?;
    identify_deck_element(spec, &lift0, &end)
}

/// Loop monodromies around each special point `[inf, 0, 1, p_1.., l_1..]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonodromyRep {
    #[serde(with = "complex_pair")]
    pub basepoint: Complex64,
    pub k: u32,
    pub level: usize,
    pub points: Vec<ExtendedComplex>,
    pub elements: Vec<GroupElement>,
    /// Power `t` such that the counterclockwise loop around special point `s` gives `a_{s+1}^t`.
    pub orientation_power: Option<u32>,
}

impl MonodromyRep {
    /// The representation `s -> a_{s+1}` of the curve in its standard form.
    pub fn standard(spec: &CoverSpec, basepoint: Complex64) -> Self {
        let level = spec.group_level();
        let elements = (1..=level + 1)
            .map(|j| GroupElement::generator(spec.k(), level, j).expect("index in range"))
            .collect();
        Self {
            basepoint,
            k: spec.k(),
            level,
            points: spec.special_points(),
            elements,
            orientation_power: Some(1),
        }
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    /// Composition of all loop elements.
    pub fn product(&self) -> GroupElement {
        self.elements
            .iter()
            .fold(GroupElement::identity(self.k, self.level), |acc, g| {
                acc.compose(g).expect("same group")
            })
    }

    /// Subgroup generated by the loop elements.
    pub fn image(&self) -> Result<Subgroup, MonodromyError> {
        Ok(Subgroup::span(self.k, self.level, &self.elements)?)
    }

    /// Subgroup generated by the loops around the listed indices.
    pub fn image_of(&self, indices: &[usize]) -> Result<Subgroup, MonodromyError> {
        let gens: Vec<GroupElement> = indices
            .iter()
            .filter_map(|&i| self.elements.get(i).cloned())
            .collect();
        Ok(Subgroup::span(self.k, self.level, &gens)?)
    }
}

/// Computes the representation at the default basepoint.
pub fn monodromy_representation(spec: &CoverSpec) -> Result<MonodromyRep, MonodromyError> {
    monodromy_representation_at(spec, default_basepoint(spec))
}

/// Computes the representation at a given basepoint, checking the relation
/// against the boundary circle.
pub fn monodromy_representation_at(
    spec: &CoverSpec,
    u0: Complex64,
) -> Result<MonodromyRep, MonodromyError> {
    check_generic(spec, u0)?;
    let k = spec.k();
    let level = spec.group_level();
    let points = spec.special_points();
    let mut elements = vec![GroupElement::identity(k, level); points.len()];
    let mut finite_product = GroupElement::identity(k, level);
    let mut infinity = None;
    for (s, p) in points.iter().enumerate() {
        match p {
            ExtendedComplex::Finite(z) => {
                let m = loop_monodromy_around(spec, u0, *z)?;
                finite_product = finite_product.compose(&m)?;
                elements[s] = m;
            }
            ExtendedComplex::Infinity => infinity = Some(s),
        }
    }
    let boundary = boundary_monodromy(spec, u0)?;
    if boundary != finite_product {
        return Err(MonodromyError::RelationMismatch {
            product: finite_product.to_string(),
            boundary: boundary.to_string(),
        });
    }
    if let Some(s) = infinity {
        elements[s] = finite_product.inverse();
    }
    let orientation_power = (1..k).find(|&t| {
        elements.iter().enumerate().all(|(s, m)| {
            *m == GroupElement::generator(k, level, s + 1)
                .expect("in range")
                .pow(t as i64)
        })
    });
    Ok(MonodromyRep {
        basepoint: u0,
        k,
        level,
        points,
        elements,
        orientation_power,
    })
}

/// Genus of the compact cover from Riemann–Hurwitz with monodromy read from `rep`.
///
/// The degree is the order of the monodromy image; a branch point whose loop
/// has order `o` contributes `d / o` ramification points.
pub fn euler_genus_oracle(rep: &MonodromyRep) -> Result<i128, MonodromyError> {
    if rep.is_empty() {
        return Err(MonodromyError::EmptyRepresentation);
    }
    let d = rep.image()?.order()? as i128;
    let mut chi = d * (2 - rep.len() as i128);
    for (index, m) in rep.elements.iter().enumerate() {
        let order = m.order();
        if order != rep.k {
            return Err(MonodromyError::RamificationMismatch {
                index,
                order,
                k: rep.k,
            });
        }
        chi += d / order as i128;
    }
    Ok(1 - chi / 2)
}

/// Number of deck images needed to enumerate a fiber, guarded against overflow.
pub fn fiber_size(spec: &CoverSpec) -> Result<usize, MonodromyError> {
    let total = (spec.k() as u128)
        .checked_pow(spec.group_level() as u32)
        .unwrap_or(u128::MAX);
    if total > MAX_ENUMERATION as u128 {
        return Err(CurveError::TooLarge(total).into());
    }
    Ok(total as usize)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{apply_generator, genus_formula};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn spec_k2n3() -> CoverSpec {
        CoverSpec::finite_type(2, &[c(-1.0, 0.5)]).unwrap()
    }

    #[test]
    fn fiber_has_expected_size_and_is_on_curve() {
        let spec = spec_k2n3();
        let f = fiber(&spec, c(0.3, 0.2)).unwrap();
        assert_eq!(f.len(), 8);
        for (i, p) in f.iter().enumerate() {
            assert!(residual(&spec, p).unwrap().value < 1e-12);
            for q in &f[..i] {
                assert!(p.distance(q) > 1e-3);
            }
        }
        assert!(matches!(
            fiber(&spec, c(-1.0, 0.5)),
            Err(MonodromyError::BranchedFiber(_))
        ));
    }

    #[test]
    fn constant_and_reversed_paths() {
        let spec = spec_k2n3();
        let u = c(0.3, 0.2);
        let p = spec.principal_lift(u).unwrap();
        let constant = PathSpec::new(&spec, vec![u]).unwrap();
        assert!(continue_lift(&spec, &constant, &p).unwrap().distance(&p) < 1e-15);
        let path = PathSpec::new(&spec, vec![u, c(2.0, 1.0), c(0.5, -2.0)]).unwrap();
        let q = continue_lift(&spec, &path, &p).unwrap();
        let back = continue_lift(&spec, &path.reversed(), &q).unwrap();
        assert!(back.distance(&p) < 1e-9);
    }

    #[test]
    fn path_through_branch_point_rejected() {
        let spec = spec_k2n3();
        assert!(PathSpec::new(&spec, vec![c(-1.0, 0.0), c(1.0, 0.0)]).is_err());
        assert!(PathSpec::new(&spec, vec![c(0.5, 0.5), c(0.5, 0.5)]).is_err());
    }

    #[test]
    fn identify_constructed_elements() {
        let spec = spec_k2n3();
        let p = spec.principal_lift(c(0.3, 0.2)).unwrap();
        assert!(identify_deck_element(&spec, &p, &p).unwrap().is_identity());
        let q = apply_generator(&spec, 1, &p).unwrap();
        assert_eq!(
            identify_deck_element(&spec, &p, &q).unwrap(),
            GroupElement::generator(2, 3, 1).unwrap()
        );
        let r = apply_generator(&spec, 4, &p).unwrap();
        assert_eq!(
            identify_deck_element(&spec, &p, &r).unwrap(),
            GroupElement::generator(2, 3, 4).unwrap()
        );
        let other = spec.principal_lift(c(0.5, 0.2)).unwrap();
        assert!(matches!(
            identify_deck_element(&spec, &p, &other),
            Err(MonodromyError::NotSameFiber(_))
        ));
    }

    #[test]
    fn loops_give_standard_generators() {
        let spec = CoverSpec::finite_type(3, &[c(-1.0, 0.5), c(2.0, -1.0)]).unwrap();
        let rep = monodromy_representation(&spec).unwrap();
        assert_eq!(rep.orientation_power, Some(1));
        assert!(rep.product().is_identity());
        assert_eq!(
            euler_genus_oracle(&rep).unwrap(),
            genus_formula(3, 4).unwrap()
        );
    }

    #[test]
    fn classical_fermat_quartic() {
        let spec = CoverSpec::classical_fermat(4).unwrap();
        let rep = monodromy_representation(&spec).unwrap();
        assert_eq!(euler_genus_oracle(&rep).unwrap(), 3);
    }

    #[test]
    fn ramification_mismatch_detected() {
        let spec = CoverSpec::finite_type(4, &[c(-1.0, 0.5)]).unwrap();
        let mut rep = MonodromyRep::standard(&spec, c(0.0, 2.0));
        rep.elements[1] = rep.elements[1].pow(2);
        assert!(matches!(
            euler_genus_oracle(&rep),
            Err(MonodromyError::RamificationMismatch {
                index: 1,
                order: 2,
                ..
            })
        ));
    }
}
