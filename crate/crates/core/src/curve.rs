//! Finite-level generalized Fermat curves.
//!
//! A [`CoverSpec`] at truncation level `n` with deleted set `M = {p_1, ..., p_N}`
//! describes the curve in `P^{n+N}` cut out by
//!
//! ```text
//!   x1^k + x2^k + x3^k          = 0
//!   p_i x1^k + x2^k + x_{3+i}^k = 0      (i = 1..N)
//!   l_j x1^k + x2^k + x_{3+N+j}^k = 0    (j = 1..n-2)
//! ```
//!
//! together with the projection `[x] -> -(x2/x1)^k`. The deck group is
//! `Z_k^L` with `L = n + N`, generated by the diagonal maps `a_j` that
//! multiply `x_j` by `e^{2 pi i/k}`.
//!
//! Coordinates are indexed by *special points*: the ordered list
//! `[inf, 0, 1, p_1, ..., p_N, l_1, ..., l_{n-2}]`. Special point `s`
//! (0-based) is the projection of the fixed points of `a_{s+1}`, and in the
//! affine chart `x1 = 1` every coordinate `x_c` with `c >= 2` is a `k`-th root
//! of a linear radicand: `x2^k = -u` and `x_c^k = u - S[c-1]` for `c >= 3`.

use std::collections::BTreeSet;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::GroupElement;
use crate::point::{ExtendedComplex, PointError, ProjectivePoint};

/// Residual threshold for curve membership.
pub const DEFAULT_RESIDUAL_TOL: f64 = 1e-9;

/// Hard cap on enumerated fibers and fixed-point sets.
pub const MAX_ENUMERATION: usize = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CurveError {
    #[error("degree k must be at least 2, got {0}")]
    DegreeTooSmall(u32),
    #[error("truncation level must be at least 3, got {0}")]
    LevelTooSmall(usize),
    #[error("branch list must begin with inf, 0, 1")]
    BadNormalization,
    #[error("branch list has {have} points but level {level} needs {need}")]
    TooFewBranchPoints {
        have: usize,
        need: usize,
        level: usize,
    },
    #[error("duplicate branch point {0}")]
    DuplicateBranchPoint(String),
    #[error("branch value {0} must differ from 0 and 1")]
    DegenerateLambda(String),
    #[error("limit points must be finite and pairwise distinct: {0}")]
    BadLimitPoints(String),
    #[error("branch point {0} lies in the limit set")]
    BranchMeetsLimitSet(String),
    #[error("deleted point {0} is not a limit point")]
    DeletedNotInLimitSet(String),
    #[error("coordinate vector has length {got}, expected {expected}")]
    WrongDimension { got: usize, expected: usize },
    #[error("generator index {index} out of range 1..={max}")]
    GeneratorOutOfRange { index: usize, max: usize },
    #[error("point is not on the curve: residual {residual:e} exceeds {tol:e}")]
    OffCurve { residual: f64, tol: f64 },
    #[error("enumeration of {0} points exceeds the supported size")]
    TooLarge(u128),
    #[error("genus formula needs k >= 2 and n >= 2")]
    InvalidGenusInput,
    #[error(transparent)]
    Point(#[from] PointError),
}

/// Validated data of one truncation `C_n(M)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverSpec {
    k: u32,
    limit_points: Vec<ExtendedComplex>,
    deleted: Vec<Complex64>,
    branch_points: Vec<ExtendedComplex>,
    level: usize,
}

fn same_point(a: &ExtendedComplex, b: &ExtendedComplex) -> bool {
    match (a, b) {
        (ExtendedComplex::Infinity, ExtendedComplex::Infinity) => true,
        (ExtendedComplex::Finite(x), ExtendedComplex::Finite(y)) => {
            (x - y).norm() <= 1e-14 * (1.0 + x.norm())
        }
        _ => false,
    }
}

/// Validates raw inputs into a [`CoverSpec`].
pub fn make_cover(
    k: u32,
    limit_points: Vec<ExtendedComplex>,
    deleted: Vec<ExtendedComplex>,
    branch_points: Vec<ExtendedComplex>,
    level: usize,
) -> Result<CoverSpec, CurveError> {
    if level < 3 {
        return Err(CurveError::LevelTooSmall(level));
    }
    CoverSpec::validated(k, limit_points, deleted, branch_points, level)
}

impl CoverSpec {
    fn validated(
        k: u32,
        limit_points: Vec<ExtendedComplex>,
        deleted: Vec<ExtendedComplex>,
        branch_points: Vec<ExtendedComplex>,
        level: usize,
    ) -> Result<Self, CurveError> {
        if k < 2 {
            return Err(CurveError::DegreeTooSmall(k));
        }
        let norm = [
            ExtendedComplex::Infinity,
            ExtendedComplex::real(0.0),
            ExtendedComplex::real(1.0),
        ];
        if branch_points.len() < 3 || !branch_points.iter().zip(&norm).all(|(a, b)| a == b) {
            return Err(CurveError::BadNormalization);
        }
        if branch_points.len() < level + 1 {
            return Err(CurveError::TooFewBranchPoints {
                have: branch_points.len(),
                need: level + 1,
                level,
            });
        }
        for (i, b) in branch_points.iter().enumerate() {
            if i >= 3 {
                if let ExtendedComplex::Finite(z) = b {
                    if z.norm() < 1e-14 || (z - 1.0).norm() < 1e-14 {
                        return Err(CurveError::DegenerateLambda(b.to_string()));
                    }
                }
            }
            if branch_points[..i].iter().any(|c| same_point(b, c)) {
                return Err(CurveError::DuplicateBranchPoint(b.to_string()));
            }
        }
        for (i, q) in limit_points.iter().enumerate() {
            if q.is_infinite() {
                return Err(CurveError::BadLimitPoints(
                    "inf is always a branch point".into(),
                ));
            }
            if limit_points[..i].iter().any(|c| same_point(q, c)) {
                return Err(CurveError::BadLimitPoints(format!("{q} repeated")));
            }
        }
        for b in &branch_points {
            if limit_points.iter().any(|q| same_point(b, q)) {
                return Err(CurveError::BranchMeetsLimitSet(b.to_string()));
            }
        }
        let mut deleted_finite = Vec::with_capacity(deleted.len());
        for (i, p) in deleted.iter().enumerate() {
            if !limit_points.iter().any(|q| same_point(p, q))
                || deleted[..i].iter().any(|c| same_point(p, c))
            {
                return Err(CurveError::DeletedNotInLimitSet(p.to_string()));
            }
            deleted_finite.push(p.as_finite().expect("limit points are finite"));
        }
        Ok(Self {
            k,
            limit_points,
            deleted: deleted_finite,
            branch_points,
            level,
        })
    }

    /// The classical Fermat curve `x1^k + x2^k + x3^k = 0` (level 2).
    pub fn classical_fermat(k: u32) -> Result<Self, CurveError> {
        let b = vec![
            ExtendedComplex::Infinity,
            ExtendedComplex::real(0.0),
            ExtendedComplex::real(1.0),
        ];
        Self::validated(k, Vec::new(), Vec::new(), b, 2)
    }

    /// Finite-type curve `C^k(l_1, ..., l_{n-2})` with no limit points.
    pub fn finite_type(k: u32, lambdas: &[Complex64]) -> Result<Self, CurveError> {
        let mut b = vec![
            ExtendedComplex::Infinity,
            ExtendedComplex::real(0.0),
            ExtendedComplex::real(1.0),
        ];
        b.extend(lambdas.iter().map(|&z| ExtendedComplex::Finite(z)));
        let level = lambdas.len() + 2;
        if level < 3 {
            return Self::classical_fermat(k);
        }
        make_cover(k, Vec::new(), Vec::new(), b, level)
    }

    /// Finite-type curve with `n - 2` random values `l_j` in the disk `|z| <= 3`,
    /// kept at distance at least `0.3` from each other and from `0` and `1`.
    pub fn random_finite_type<R: Rng + ?Sized>(
        k: u32,
        n: usize,
        rng: &mut R,
    ) -> Result<Self, CurveError> {
        let mut taken = vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)];
        let mut lambdas = Vec::new();
        while lambdas.len() + 2 < n {
            let z =
                Complex64::from_polar(3.0 * rng.gen::<f64>().sqrt(), rng.gen_range(0.0..2.0 * PI));
            if taken.iter().all(|w| (z - w).norm() >= 0.3) {
                taken.push(z);
                lambdas.push(z);
            }
        }
        Self::finite_type(k, &lambdas)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    /// Truncation level `n` (number of branch points used is `n + 1`).
    pub fn level(&self) -> usize {
        self.level
    }

    /// Size `N` of the deleted set.
    pub fn deleted_count(&self) -> usize {
        self.deleted.len()
    }

    /// Rank `L = n + N` of the deck group.
    pub fn group_level(&self) -> usize {
        self.level + self.deleted.len()
    }

    /// Number of projective coordinates, `L + 1`.
    pub fn dimension(&self) -> usize {
        self.group_level() + 1
    }

    pub fn limit_points(&self) -> &[ExtendedComplex] {
        &self.limit_points
    }

    pub fn deleted(&self) -> &[Complex64] {
        &self.deleted
    }

    pub fn branch_points(&self) -> &[ExtendedComplex] {
        &self.branch_points
    }

    /// The `n - 2` values `l_j` used at this level.
    pub fn lambdas(&self) -> Vec<Complex64> {
        self.branch_points[3..self.level + 1]
            .iter()
            .map(|b| b.as_finite().expect("lambdas are finite"))
            .collect()
    }

    /// `[inf, 0, 1, p_1..p_N, l_1..l_{n-2}]`; entry `s` carries generator `a_{s+1}`.
    pub fn special_points(&self) -> Vec<ExtendedComplex> {
        let mut out: Vec<ExtendedComplex> = self.branch_points[..3].to_vec();
        out.extend(self.deleted.iter().map(|&p| ExtendedComplex::Finite(p)));
        out.extend(self.branch_points[3..self.level + 1].iter().copied());
        out
    }

    /// Whether special point `s` (0-based) is a deleted limit point.
    pub fn is_deleted_index(&self, s: usize) -> bool {
        (3..3 + self.deleted.len()).contains(&s)
    }

    /// 1-based generator indices whose fixed points survive on the surface:
    /// `{1, 2, 3} ∪ {N+4, ..., L+1}`.
    pub fn fixed_bearing_indices(&self) -> BTreeSet<usize> {
        let n = self.deleted.len();
        (1..=self.dimension())
            .filter(|&j| j <= 3 || j >= n + 4)
            .collect()
    }

    /// Points that the surface must avoid: the branch points in use and all limit points.
    pub fn excluded_points(&self) -> Vec<ExtendedComplex> {
        let mut out = self.special_points();
        for q in &self.limit_points {
            if !out.iter().any(|p| same_point(p, q)) {
                out.push(*q);
            }
        }
        out
    }

    pub fn at_level(&self, level: usize) -> Result<Self, CurveError> {
        if level < 2 || (level == 2 && self.branch_points.len() < 3) {
            return Err(CurveError::LevelTooSmall(level));
        }
        let deleted = self
            .deleted
            .iter()
            .map(|&p| ExtendedComplex::Finite(p))
            .collect();
        Self::validated(
            self.k,
            self.limit_points.clone(),
            deleted,
            self.branch_points.clone(),
            level,
        )
    }

    /// The same truncation with `M` emptied.
    pub fn without_deleted(&self) -> Self {
        Self {
            deleted: Vec::new(),
            ..self.clone()
        }
    }

    /// Coefficient `c` of the radicand `x_c^k = sign * (u - S[c-1])`, for a 0-based coordinate `c >= 1`.
    pub(crate) fn radicand(
        &self,
        special: &[ExtendedComplex],
        coord: usize,
        u: Complex64,
    ) -> Complex64 {
        if coord == 1 {
            -u
        } else {
            u - special[coord].as_finite().expect("finite special point")
        }
    }

    /// Radicands of coordinates `x2, ..., x_{L+1}` at base value `u`.
    pub fn radicands(&self, u: Complex64) -> Vec<Complex64> {
        let special = self.special_points();
        (1..self.dimension())
            .map(|c| self.radicand(&special, c, u))
            .collect()
    }

    /// The principal lift over `u` in the chart `x1 = 1`.
    pub fn principal_lift(&self, u: Complex64) -> Result<ProjectivePoint, CurveError> {
        let mut coords = vec![Complex64::new(1.0, 0.0)];
        coords.extend(
            self.radicands(u)
                .into_iter()
                .map(|r| principal_root(r, self.k)),
        );
        Ok(ProjectivePoint::new(coords)?)
    }

    fn check_dimension(&self, p: &ProjectivePoint) -> Result<(), CurveError> {
        if p.len() != self.dimension() {
            return Err(CurveError::WrongDimension {
                got: p.len(),
                expected: self.dimension(),
            });
        }
        Ok(())
    }
}

/// Per-equation residuals of a point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveResidual {
    pub value: f64,
    pub rows: Vec<f64>,
}

/// `max_rows |row(x)|` at the normalized coordinates.
pub fn residual(spec: &CoverSpec, p: &ProjectivePoint) -> Result<CurveResidual, CurveError> {
    spec.check_dimension(p)?;
    let special = spec.special_points();
    let k = spec.k as i32;
    let x = p.coords();
    let x1k = x[0].powi(k);
    let x2k = x[1].powi(k);
    let rows: Vec<f64> = (2..spec.dimension())
        .map(|c| {
            let coef = special[c].as_finite().expect("finite special point");
            (coef * x1k + x2k + x[c].powi(k)).norm()
        })
        .collect();
    let value = rows.iter().copied().fold(0.0, f64::max);
    Ok(CurveResidual { value, rows })
}

/// `e^{2 pi i t / k}`.
pub fn root_of_unity(k: u32, t: i64) -> Complex64 {
    let t = t.rem_euclid(k as i64) as f64;
    Complex64::from_polar(1.0, 2.0 * PI * t / k as f64)
}

/// The principal `k`-th root (argument in `(-pi/k, pi/k]`).
pub fn principal_root(z: Complex64, k: u32) -> Complex64 {
    if z == Complex64::new(0.0, 0.0) {
        return z;
    }
    Complex64::from_polar(z.norm().powf(1.0 / k as f64), z.arg() / k as f64)
}

/// All `k` roots of `z`, principal first.
pub fn kth_roots(z: Complex64, k: u32) -> Vec<Complex64> {
    let r = principal_root(z, k);
    (0..k as i64).map(|t| r * root_of_unity(k, t)).collect()
}

/// Action of `a_j` (`1 <= j <= L + 1`).
pub fn apply_generator(
    spec: &CoverSpec,
    j: usize,
    p: &ProjectivePoint,
) -> Result<ProjectivePoint, CurveError> {
    spec.check_dimension(p)?;
    if j == 0 || j > spec.dimension() {
        return Err(CurveError::GeneratorOutOfRange {
            index: j,
            max: spec.dimension(),
        });
    }
    Ok(p.scale_coordinate(j - 1, root_of_unity(spec.k, 1))?)
}

/// Action of a general deck element given by its exponents over `a_1..a_L`.
pub fn apply_element(
    spec: &CoverSpec,
    g: &GroupElement,
    p: &ProjectivePoint,
) -> Result<ProjectivePoint, CurveError> {
    spec.check_dimension(p)?;
    if g.level() != spec.group_level() || g.k() != spec.k {
        return Err(CurveError::WrongDimension {
            got: g.level() + 1,
            expected: spec.dimension(),
        });
    }
    let mut coords = p.coords().to_vec();
    for (x, &e) in coords.iter_mut().zip(g.exponents()) {
        *x *= root_of_unity(spec.k, e as i64);
    }
    Ok(ProjectivePoint::new(coords)?)
}

/// Coordinates below this modulus (after normalization) count as zero.
const ZERO_COORD: f64 = 1e-14;

/// `-(x2/x1)^k`, or infinity when `x1 = 0`. Rejects points off the curve.
pub fn project(
    spec: &CoverSpec,
    p: &ProjectivePoint,
    tol: f64,
) -> Result<ExtendedComplex, CurveError> {
    let r = residual(spec, p)?;
    if r.value > tol {
        return Err(CurveError::OffCurve {
            residual: r.value,
            tol,
        });
    }
    Ok(project_unchecked(spec, p))
}

pub(crate) fn project_unchecked(spec: &CoverSpec, p: &ProjectivePoint) -> ExtendedComplex {
    let x = p.coords();
    if x[0].norm() < ZERO_COORD {
        return ExtendedComplex::Infinity;
    }
    ExtendedComplex::Finite(-(x[1] / x[0]).powi(spec.k as i32))
}

/// Enumerates every combination of `k`-th roots for the given radicands
/// (one coordinate per radicand), placing them after `prefix`.
pub(crate) fn enumerate_root_products(
    prefix: &[Complex64],
    radicands: &[Option<Complex64>],
    k: u32,
) -> Result<Vec<Vec<Complex64>>, CurveError> {
    let free = radicands.iter().filter(|r| r.is_some()).count();
    let total = (k as u128).checked_pow(free as u32).unwrap_or(u128::MAX);
    if total > MAX_ENUMERATION as u128 {
        return Err(CurveError::TooLarge(total));
    }
    let mut out = vec![prefix.to_vec()];
    for r in radicands {
        match r {
            None => out
                .iter_mut()
                .for_each(|v| v.push(Complex64::new(0.0, 0.0))),
            Some(z) => {
                let roots = kth_roots(*z, k);
                out = out
                    .into_iter()
                    .flat_map(|v| {
                        roots.iter().map(move |&w| {
                            let mut v = v.clone();
                            v.push(w);
                            v
                        })
                    })
                    .collect();
            }
        }
    }
    Ok(out)
}

/// Closed-form fixed points of `a_j` on the truncation.
///
/// For `j` attached to a deleted limit point the set is empty, since the
/// fibers over `M` are removed from the surface.
pub fn fixed_points(spec: &CoverSpec, j: usize) -> Result<Vec<ProjectivePoint>, CurveError> {
    if j == 0 || j > spec.dimension() {
        return Err(CurveError::GeneratorOutOfRange {
            index: j,
            max: spec.dimension(),
        });
    }
    let s = j - 1;
    if spec.is_deleted_index(s) {
        return Ok(Vec::new());
    }
    let special = spec.special_points();
    let dim = spec.dimension();
    let rows = match special[s] {
        ExtendedComplex::Infinity => {
            // x1 = 0, x2 = 1, every other x_c^k = -1
            let radicands: Vec<Option<Complex64>> =
                (2..dim).map(|_| Some(Complex64::new(-1.0, 0.0))).collect();
            enumerate_root_products(
                &[Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
                &radicands,
                spec.k,
            )?
        }
        ExtendedComplex::Finite(u) => {
            let radicands: Vec<Option<Complex64>> = (1..dim)
                .map(|c| {
                    if c == s {
                        None
                    } else {
                        Some(spec.radicand(&special, c, u))
                    }
                })
                .collect();
            enumerate_root_products(&[Complex64::new(1.0, 0.0)], &radicands, spec.k)?
        }
    };
    rows.into_iter()
        .map(|v| Ok(ProjectivePoint::new(v)?))
        .collect()
}

/// `1 + k^{n-1} ((k-1)(n-1) - 2) / 2`.
pub fn genus_formula(k: u32, n: u32) -> Result<i128, CurveError> {
    if k < 2 || n < 2 {
        return Err(CurveError::InvalidGenusInput);
    }
    let k = k as i128;
    let n = n as i128;
    let numerator = k.pow((n - 1) as u32) * ((k - 1) * (n - 1) - 2);
    debug_assert_eq!(numerator % 2, 0);
    Ok(1 + numerator / 2)
}

/// `(k-1)(n-1) > 2`.
pub fn is_hyperbolic(k: u32, n: u32) -> bool {
    (k as u64 - 1) * (n as u64 - 1) > 2
}
