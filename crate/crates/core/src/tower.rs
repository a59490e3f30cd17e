//! Truncations of the inverse-limit tower and branch sets accumulating at
//! finitely many limit points.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::{AbelianError, GroupElement, Subgroup};
use crate::curve::{make_cover, residual, CoverSpec, CurveError, DEFAULT_RESIDUAL_TOL};
use crate::monodromy::{MonodromyError, MonodromyRep};
use crate::point::{complex_vec, ExtendedComplex, ProjectivePoint};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TowerError {
    #[error(transparent)]
    Curve(#[from] CurveError),
    #[error(transparent)]
    Abelian(#[from] AbelianError),
    #[error(transparent)]
    Monodromy(#[from] MonodromyError),
    #[error("cannot truncate level {from} to level {to}")]
    LevelMismatch { from: usize, to: usize },
    #[error("invalid limit configuration: {0}")]
    Configuration(String),
    #[error("generated branch points collide: {0} and {1}")]
    Collision(String, String),
    #[error("the deleted set is empty, so the quotient map is the identity")]
    NothingToQuotient,
    #[error("monodromy representations are over different branch sets")]
    MismatchedBranchSets,
    #[error("degenerate cross-ratio: {0}")]
    DegenerateCrossRatio(String),
}

/// A point of the truncation at `level`, in the coordinates of that level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TowerPoint {
    pub level: usize,
    pub point: ProjectivePoint,
}

impl TowerPoint {
    /// Wraps a point of `spec`, checking that it lies on the curve.
    pub fn new(spec: &CoverSpec, point: ProjectivePoint) -> Result<Self, TowerError> {
        let r = residual(spec, &point)?;
        if r.value > DEFAULT_RESIDUAL_TOL {
            return Err(CurveError::OffCurve {
                residual: r.value,
                tol: DEFAULT_RESIDUAL_TOL,
            }
            .into());
        }
        Ok(Self {
            level: spec.level(),
            point,
        })
    }
}

/// The forgetful map `f_{mn}`: keep the first `n + N + 1` coordinates.
pub fn truncate(spec: &CoverSpec, p: &TowerPoint, n: usize) -> Result<TowerPoint, TowerError> {
    if n > p.level || n < 2 || p.point.len() != p.level + spec.deleted_count() + 1 {
        return Err(TowerError::LevelMismatch {
            from: p.level,
            to: n,
        });
    }
    let len = n + spec.deleted_count() + 1;
    let point = ProjectivePoint::new(p.point.coords()[..len].to_vec()).map_err(CurveError::from)?;
    Ok(TowerPoint { level: n, point })
}

/// The homomorphism of deck groups induced by `f_{mn}`, for `N` deleted points.
pub fn deck_truncation(
    h: &GroupElement,
    deleted: usize,
    n: usize,
) -> Result<GroupElement, TowerError> {
    let target = n + deleted;
    if target > h.level() {
        return Err(TowerError::LevelMismatch {
            from: h.level().saturating_sub(deleted),
            to: n,
        });
    }
    Ok(h.restrict_to_prefix(target)?)
}

/// `<a_{n+N+2}, ..., a_{m+N+1}>` inside the level-`m` group.
pub fn deck_truncation_kernel(
    k: u32,
    deleted: usize,
    m: usize,
    n: usize,
) -> Result<Subgroup, TowerError> {
    if n > m {
        return Err(TowerError::LevelMismatch { from: m, to: n });
    }
    let level = m + deleted;
    let gens: Vec<GroupElement> = (n + deleted + 2..=level + 1)
        .map(|j| GroupElement::generator(k, level, j))
        .collect::<Result<_, _>>()?;
    Ok(Subgroup::span(k, level, &gens)?)
}

/// Branch points accumulating at each of finitely many limit points.
///
/// The `i`-th point attached to `q_j` is `q_j + r0 2^{-i} e^{i theta_j}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LimitConfiguration {
    #[serde(with = "complex_vec")]
    pub limit_points: Vec<Complex64>,
    #[serde(default = "default_depth")]
    pub depth: usize,
    #[serde(default)]
    pub r0: Option<f64>,
    #[serde(default)]
    pub angles: Option<Vec<f64>>,
}

fn default_depth() -> usize {
    8
}

/// An ordered branch list together with the limit point each entry accumulates to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaterializedBranchSet {
    pub points: Vec<ExtendedComplex>,
    /// `None` for `inf, 0, 1`; otherwise the index of the source limit point.
    pub source: Vec<Option<usize>>,
    pub r0: f64,
    pub angles: Vec<f64>,
}

impl MaterializedBranchSet {
    /// Indices (into `points`) of the entries attached to limit point `j`, in order.
    pub fn part(&self, j: usize) -> Vec<usize> {
        (0..self.points.len())
            .filter(|&i| self.source[i] == Some(j))
            .collect()
    }
}

impl LimitConfiguration {
    pub fn new(limit_points: Vec<Complex64>, depth: usize) -> Self {
        Self {
            limit_points,
            depth,
            r0: None,
            angles: None,
        }
    }

    /// `min` distance among the limit points and `{0, 1}`.
    fn separation(&self) -> f64 {
        let mut pts = self.limit_points.clone();
        pts.push(Complex64::new(0.0, 0.0));
        pts.push(Complex64::new(1.0, 0.0));
        let mut best = f64::INFINITY;
        for i in 0..pts.len() {
            for j in i + 1..pts.len() {
                best = best.min((pts[i] - pts[j]).norm());
            }
        }
        best
    }

    pub fn validate(&self) -> Result<(), TowerError> {
        if self
            .limit_points
            .iter()
            .any(|q| !q.re.is_finite() || !q.im.is_finite())
        {
            return Err(TowerError::Configuration(
                "limit points must be finite".into(),
            ));
        }
        let sep = self.separation();
        if sep <= 1e-12 {
            return Err(TowerError::Configuration(
                "limit points must be distinct and different from 0 and 1".into(),
            ));
        }
        if let Some(r0) = self.r0 {
            if !(r0 > 0.0 && r0 < sep / 3.0) {
                return Err(TowerError::Configuration(format!(
                    "r0 must lie in (0, {})",
                    sep / 3.0
                )));
            }
        }
        if let Some(a) = &self.angles {
            if a.len() != self.limit_points.len() || a.iter().any(|t| !t.is_finite()) {
                return Err(TowerError::Configuration(
                    "one finite angle per limit point required".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn r0(&self) -> f64 {
        self.r0.unwrap_or(0.3 * self.separation())
    }

    pub fn angles(&self) -> Vec<f64> {
        self.angles.clone().unwrap_or_else(|| {
            let m = self.limit_points.len().max(1) as f64;
            (0..self.limit_points.len())
                .map(|j| PI / 4.0 + 2.0 * PI * j as f64 / m)
                .collect()
        })
    }

    /// The `i`-th generated point (`i >= 1`) of the sequence accumulating at `q_j`.
    pub fn generated_point(&self, j: usize, i: usize) -> Complex64 {
        let r = self.r0() * 0.5f64.powi(i as i32);
        self.limit_points[j] + Complex64::from_polar(r, self.angles()[j])
    }

    /// `inf, 0, 1` followed by a round-robin enumeration of the generated sequences.
    pub fn materialize_branch_set(&self) -> Result<MaterializedBranchSet, TowerError> {
        self.validate()?;
        let mut points = vec![
            ExtendedComplex::Infinity,
            ExtendedComplex::real(0.0),
            ExtendedComplex::real(1.0),
        ];
        let mut source = vec![None, None, None];
        for i in 1..=self.depth {
            for j in 0..self.limit_points.len() {
                let z = ExtendedComplex::Finite(self.generated_point(j, i));
                if let Some(prev) = points.iter().find(|p| p.approx_eq(&z, 1e-14)) {
                    return Err(TowerError::Collision(prev.to_string(), z.to_string()));
                }
                points.push(z);
                source.push(Some(j));
            }
        }
        Ok(MaterializedBranchSet {
            points,
            source,
            r0: self.r0(),
            angles: self.angles(),
        })
    }

    /// The truncation at `level` of the curve with deleted set `{q_j : j in deleted}`.
    pub fn cover_spec(
        &self,
        k: u32,
        deleted: &[usize],
        level: usize,
    ) -> Result<CoverSpec, TowerError> {
        let b = self.materialize_branch_set()?;
        let q: Vec<ExtendedComplex> = self.limit_points.iter().map(|&z| z.into()).collect();
        let mut m = Vec::with_capacity(deleted.len());
        for &j in deleted {
            let p = q.get(j).ok_or_else(|| {
                TowerError::Configuration(format!("no limit point with index {j}"))
            })?;
            m.push(*p);
        }
        Ok(make_cover(k, q, m, b.points, level)?)
    }
}

/// Index of the nearest limit point, or `None` when there are none.
pub fn nearest_limit_point(limit_points: &[Complex64], z: Complex64) -> Option<usize> {
    limit_points
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - z).norm().total_cmp(&(b.1 - z).norm()))
        .map(|(j, _)| j)
}

/// The quotient by `<a_4, ..., a_{N+3}>`: drop the coordinates attached to the deleted set.
pub fn unbranched_quotient(
    spec: &CoverSpec,
    p: &ProjectivePoint,
) -> Result<(CoverSpec, ProjectivePoint), TowerError> {
    let n = spec.deleted_count();
    if n == 0 {
        return Err(TowerError::NothingToQuotient);
    }
    let r = residual(spec, p)?;
    if r.value > DEFAULT_RESIDUAL_TOL {
        return Err(CurveError::OffCurve {
            residual: r.value,
            tol: DEFAULT_RESIDUAL_TOL,
        }
        .into());
    }
    let coords: Vec<Complex64> = p
        .coords()
        .iter()
        .enumerate()
        .filter(|(i, _)| !(3..3 + n).contains(i))
        .map(|(_, z)| *z)
        .collect();
    let target = spec.without_deleted();
    let q = ProjectivePoint::new(coords).map_err(CurveError::from)?;
    Ok((target, q))
}

/// Component data of the fiber product of two Galois covers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FiberProductReport {
    pub components: u128,
    /// Degree of each component over the base.
    pub component_degree: u128,
    /// `G1 x G2` acts on components through the quotient by the joint image,
    /// so the action is always transitive.
    pub transitive: bool,
    /// The joint representation into `G1 x G2`, with exponents concatenated.
    pub joint: MonodromyRep,
}

/// Combines two representations over the same branch set into one into `G1 x G2`.
pub fn joint_representation(
    rep1: &MonodromyRep,
    rep2: &MonodromyRep,
) -> Result<MonodromyRep, TowerError> {
    if rep1.k != rep2.k
        || rep1.points.len() != rep2.points.len()
        || !rep1
            .points
            .iter()
            .zip(&rep2.points)
            .all(|(a, b)| a.approx_eq(b, 1e-12))
    {
        return Err(TowerError::MismatchedBranchSets);
    }
    let level = rep1.level + rep2.level;
    let elements = rep1
        .elements
        .iter()
        .zip(&rep2.elements)
        .map(|(a, b)| {
            let mut e = a.exponents().to_vec();
            e.extend_from_slice(b.exponents());
            GroupElement::new(rep1.k, e)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MonodromyRep {
        basepoint: rep1.basepoint,
        k: rep1.k,
        level,
        points: rep1.points.clone(),
        elements,
        orientation_power: None,
    })
}

/// Number of connected components of the fiber product: the index of the
/// joint monodromy image in `G1 x G2`.
pub fn fiber_product_component_count(
    rep1: &MonodromyRep,
    rep2: &MonodromyRep,
) -> Result<FiberProductReport, TowerError> {
    let joint = joint_representation(rep1, rep2)?;
    let image = joint.image()?;
    Ok(FiberProductReport {
        components: image.index()?,
        component_degree: image.order()?,
        transitive: true,
        joint,
    })
}

/// Euler characteristic of one component of the cover with monodromy `rep`,
/// with the fibers over the listed point indices removed.
pub fn punctured_euler_characteristic(
    rep: &MonodromyRep,
    punctures: &[usize],
) -> Result<i128, TowerError> {
    let d = rep.image()?.order()? as i128;
    let mut chi = d * (2 - rep.points.len() as i128);
    for (j, m) in rep.elements.iter().enumerate() {
        if !punctures.contains(&j) {
            chi += d / m.order() as i128;
        }
    }
    Ok(chi)
}

/// Representations over `[special points of the unbranched truncation] ++ Q`
/// for the fiber product of the level-`n` truncation (branched over `B`) with
/// the generalized Fermat curve of type `(k, N)` branched over `Q`.
pub fn fiber_product_factors(spec: &CoverSpec) -> Result<(MonodromyRep, MonodromyRep), TowerError> {
    let base = spec.without_deleted();
    let k = spec.k();
    let q = spec.limit_points();
    if q.is_empty() {
        return Err(TowerError::Configuration(
            "the fiber product needs at least one limit point".into(),
        ));
    }
    let mut points = base.special_points();
    points.extend_from_slice(q);
    let basepoint = crate::monodromy::default_basepoint(spec);
    let std = MonodromyRep::standard(&base, basepoint);
    let l1 = std.level;
    let mut e1 = std.elements.clone();
    e1.extend(q.iter().map(|_| GroupElement::identity(k, l1)));
    let l2 = q.len() - 1;
    let mut e2: Vec<GroupElement> = std
        .elements
        .iter()
        .map(|_| GroupElement::identity(k, l2))
        .collect();
    for j in 1..=q.len() {
        e2.push(GroupElement::generator(k, l2, j)?);
    }
    let rep1 = MonodromyRep {
        basepoint,
        k,
        level: l1,
        points: points.clone(),
        elements: e1,
        orientation_power: None,
    };
    let rep2 = MonodromyRep {
        basepoint,
        k,
        level: l2,
        points,
        elements: e2,
        orientation_power: None,
    };
    Ok((rep1, rep2))
}

/// `mu_j = (p3 - p1)(p_{3+j} - p2) / ((p3 - p2)(p_{3+j} - p1))`, `j = 1..N-2`,
/// where factors involving a point at infinity are replaced by 1.
pub fn mu_from_limit_points(points: &[ExtendedComplex]) -> Result<Vec<Complex64>, TowerError> {
    if points.len() < 3 {
        return Err(TowerError::DegenerateCrossRatio(
            "at least three points are needed".into(),
        ));
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if points[i].approx_eq(&points[j], 1e-14) {
                return Err(TowerError::DegenerateCrossRatio(format!(
                    "{} repeated",
                    points[i]
                )));
            }
        }
    }
    let diff = |a: &ExtendedComplex, b: &ExtendedComplex| match (a, b) {
        (ExtendedComplex::Finite(x), ExtendedComplex::Finite(y)) => x - y,
        _ => Complex64::new(1.0, 0.0),
    };
    let (p1, p2, p3) = (&points[0], &points[1], &points[2]);
    points[3..]
        .iter()
        .map(|p| {
            let mu = diff(p3, p1) * diff(p, p2) / (diff(p3, p2) * diff(p, p1));
            if !mu.re.is_finite()
                || !mu.im.is_finite()
                || mu.norm() < 1e-14
                || (mu - 1.0).norm() < 1e-14
            {
                return Err(TowerError::DegenerateCrossRatio(format!("{mu}")));
            }
            Ok(mu)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::curve::{apply_generator, project};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn materialized_set_for_one_limit_point() {
        let cfg = LimitConfiguration {
            limit_points: vec![c(2.0, 0.0)],
            depth: 5,
            r0: Some(0.3),
            angles: Some(vec![0.0]),
        };
        let b = cfg.materialize_branch_set().unwrap();
        assert_eq!(b.points.len(), 8);
        assert_eq!(b.points[3], ExtendedComplex::real(2.15));
        assert_eq!(b.part(0), vec![3, 4, 5, 6, 7]);
        let empty = LimitConfiguration::new(vec![c(2.0, 0.0)], 0)
            .materialize_branch_set()
            .unwrap();
        assert_eq!(empty.points.len(), 3);
    }

    #[test]
    fn configuration_errors() {
        assert!(LimitConfiguration::new(vec![c(1.0, 0.0)], 3)
            .materialize_branch_set()
            .is_err());
        assert!(LimitConfiguration::new(vec![c(2.0, 0.0), c(2.0, 0.0)], 3)
            .validate()
            .is_err());
        let cfg = LimitConfiguration {
            limit_points: vec![c(2.0, 0.0)],
            depth: 3,
            r0: Some(0.5),
            angles: None,
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn deck_truncation_kernel_size() {
        let kernel = deck_truncation_kernel(2, 0, 5, 3).unwrap();
        assert_eq!(kernel.order().unwrap(), 4);
        for g in kernel.elements() {
            assert!(deck_truncation(&g, 0, 3).unwrap().is_identity());
        }
        let a1 = GroupElement::generator(3, 7, 1).unwrap();
        assert_eq!(
            deck_truncation(&a1, 1, 4).unwrap(),
            GroupElement::generator(3, 5, 1).unwrap()
        );
    }

    #[test]
    fn truncation_commutes_with_projection_and_deck_action() {
        let cfg = LimitConfiguration::new(vec![c(2.0, 1.0), c(-1.5, -1.0)], 4);
        let spec = cfg.cover_spec(3, &[0], 8).unwrap();
        let p = spec.principal_lift(c(0.4, -0.7)).unwrap();
        let p = apply_generator(&spec, 2, &apply_generator(&spec, 6, &p).unwrap()).unwrap();
        let tp = TowerPoint::new(&spec, p).unwrap();
        for n in 3..=8 {
            let small = spec.at_level(n).unwrap();
            let t = truncate(&spec, &tp, n).unwrap();
            assert!(residual(&small, &t.point).unwrap().value < 1e-9);
            let u = project(&small, &t.point, 1e-9).unwrap();
            assert!(u.approx_eq(&project(&spec, &tp.point, 1e-9).unwrap(), 1e-9));
        }
        assert!(truncate(&spec, &tp, 9).is_err());
    }

    #[test]
    fn quotient_drops_deleted_coordinates() {
        let cfg = LimitConfiguration::new(vec![c(2.0, 1.0), c(-1.5, -1.0)], 3);
        let spec = cfg.cover_spec(2, &[0], 5).unwrap();
        let p = spec.principal_lift(c(0.4, -0.7)).unwrap();
        let (target, q) = unbranched_quotient(&spec, &p).unwrap();
        assert_eq!(q.len(), spec.dimension() - 1);
        assert!(residual(&target, &q).unwrap().value < 1e-9);
        let moved = apply_generator(&spec, 4, &p).unwrap();
        assert!(unbranched_quotient(&spec, &moved).unwrap().1.distance(&q) < 1e-12);
        assert!(matches!(
            unbranched_quotient(&target, &q),
            Err(TowerError::NothingToQuotient)
        ));
    }

    #[test]
    fn cross_ratio_with_infinity() {
        let t = c(0.3, 2.0);
        let pts = [
            ExtendedComplex::Infinity,
            ExtendedComplex::real(0.0),
            ExtendedComplex::real(1.0),
            t.into(),
        ];
        let mu = mu_from_limit_points(&pts).unwrap();
        assert!((mu[0] - t).norm() < 1e-15);
        assert!(mu_from_limit_points(&pts[..3]).unwrap().is_empty());
        assert!(mu_from_limit_points(&[pts[1], pts[1], pts[2]]).is_err());
    }

    #[test]
    fn identical_factors_give_diagonal_image() {
        let spec = CoverSpec::finite_type(2, &[c(-1.0, 0.5)]).unwrap();
        let rep = MonodromyRep::standard(&spec, c(0.0, 2.0));
        let report = fiber_product_component_count(&rep, &rep).unwrap();
        assert_eq!(report.components, 8);
        assert_eq!(report.component_degree, 8);
    }
}
