//! Hyperelliptic models of infinite type: a Möbius normalization of the
//! limit points, the nearest-limit-point partition of the branch set, and
//! Weierstrass canonical products with a certified truncation bound.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::abelian::{AbelianError, GroupElement, Subgroup, TwoGroupCharacter};
use crate::point::{complex_pair, complex_vec, ExtendedComplex};
use crate::tower::{LimitConfiguration, TowerError};

/// Zero lists shorter than this cannot support a growth estimate.
pub const MIN_PREFIX: usize = 8;
/// Largest convergence exponent tried before declaring divergence.
pub const MAX_EXPONENT: u32 = 8;
/// Relative tolerance for the zero-fidelity check.
pub const ZERO_FIDELITY_TOL: f64 = 1e-6;
/// Required gap between the off-zero grid minimum and the on-zero residuals.
pub const SEPARATION_RATIO: f64 = 1e6;

const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HyperellipticError {
    #[error(transparent)]
    Tower(#[from] TowerError),
    #[error(transparent)]
    Abelian(#[from] AbelianError),
    #[error("limit points {0} and {1} coincide")]
    CoincidentLimitPoints(usize, usize),
    #[error("degenerate Möbius map")]
    DegenerateMobius,
    #[error("no limit points given")]
    NoLimitPoints,
    #[error("branch point {index} is equidistant from two limit points")]
    AmbiguousPartition { index: usize },
    #[error("branch point {index} coincides with a limit point")]
    BranchAtLimitPoint { index: usize },
    #[error("no materialized branch point accumulates at limit point {0}")]
    EmptyPart(usize),
    #[error("need at least {MIN_PREFIX} nonzero zeros to estimate growth, found {0}")]
    TooFewZeros(usize),
    #[error("zero list has a repeated zero at the origin")]
    RepeatedOrigin,
    #[error("zero sequence does not grow fast enough for any exponent up to {MAX_EXPONENT} (growth {growth:.4}); supply the exponent explicitly")]
    Divergence { growth: f64 },
    #[error("|z| = {modulus} lies outside the evaluation disk of radius {radius}")]
    OutsideDisk { modulus: f64, radius: f64 },
    #[error("argument is singular at z = {0}")]
    Singular(Complex64),
    #[error("expected {expected} bits, got {found}")]
    BitsLength { expected: usize, found: usize },
    #[error("bits must be 0 or 1")]
    BitValue,
    #[error("index {0} appears in two parts")]
    OverlappingParts(usize),
    #[error("index {0} is in no part")]
    UncoveredIndex(usize),
    #[error("index {index} out of range for {len} zeros")]
    IndexOutOfRange { index: usize, len: usize },
}

/// `z -> (a z + b) / (c z + d)` on the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mobius {
    #[serde(with = "complex_pair")]
    pub a: Complex64,
    #[serde(with = "complex_pair")]
    pub b: Complex64,
    #[serde(with = "complex_pair")]
    pub c: Complex64,
    #[serde(with = "complex_pair")]
    pub d: Complex64,
}

impl Mobius {
    pub fn new(
        a: Complex64,
        b: Complex64,
        c: Complex64,
        d: Complex64,
    ) -> Result<Self, HyperellipticError> {
        let det = a * d - b * c;
        let scale = (a.norm() + b.norm()) * (c.norm() + d.norm());
        if det.norm() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
            return Err(HyperellipticError::DegenerateMobius);
        }
        Ok(Self { a, b, c, d })
    }

    pub fn apply(&self, z: ExtendedComplex) -> ExtendedComplex {
        match z {
            ExtendedComplex::Finite(z) => {
                let den = self.c * z + self.d;
                if den == Complex64::new(0.0, 0.0) {
                    ExtendedComplex::Infinity
                } else {
                    ExtendedComplex::Finite((self.a * z + self.b) / den)
                }
            }
            ExtendedComplex::Infinity => {
                if self.c == Complex64::new(0.0, 0.0) {
                    ExtendedComplex::Infinity
                } else {
                    ExtendedComplex::Finite(self.a / self.c)
                }
            }
        }
    }
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// The normalizing map sending `q_1` to infinity: a cross-ratio onto
/// `inf, 0, 1` for three or more points, `(z - q2)/(z - q1)` for two and
/// `q1/(q1 - z)` for one.
pub fn mobius_normalizer(q: &[ExtendedComplex]) -> Result<Mobius, HyperellipticError> {
    use ExtendedComplex::{Finite, Infinity};
    for i in 0..q.len() {
        for j in i + 1..q.len() {
            if q[i].chordal_distance(&q[j]) <= TIE_TOL {
                return Err(HyperellipticError::CoincidentLimitPoints(i, j));
            }
        }
    }
    match q.len() {
        0 => Err(HyperellipticError::NoLimitPoints),
        1 => match q[0] {
            Finite(q1) => Mobius::new(zero(), q1, -one(), q1),
            Infinity => Err(HyperellipticError::DegenerateMobius),
        },
        2 => match (q[0], q[1]) {
            (Finite(q1), Finite(q2)) => Mobius::new(one(), -q2, one(), -q1),
            (Infinity, Finite(q2)) => Mobius::new(one(), -q2, zero(), one()),
            (Finite(q1), Infinity) => Mobius::new(zero(), one(), one(), -q1),
            (Infinity, Infinity) => unreachable!("distinctness checked"),
        },
        _ => match (q[0], q[1], q[2]) {
            (Finite(q1), Finite(q2), Finite(q3)) => {
                let s = q3 - q1;
                let t = q3 - q2;
                Mobius::new(s, -s * q2, t, -t * q1)
            }
            (Infinity, Finite(q2), Finite(q3)) => Mobius::new(one(), -q2, zero(), q3 - q2),
            (Finite(q1), Infinity, Finite(q3)) => Mobius::new(zero(), q3 - q1, one(), -q1),
            (Finite(q1), Finite(q2), Infinity) => Mobius::new(one(), -q2, one(), -q1),
            _ => unreachable!("distinctness checked"),
        },
    }
}

/// Groups the branch points by their nearest limit point in the chordal metric.
pub fn partition_by_limit_point(
    b: &[ExtendedComplex],
    q: &[ExtendedComplex],
) -> Result<Vec<Vec<usize>>, HyperellipticError> {
    if q.is_empty() {
        return Err(HyperellipticError::NoLimitPoints);
    }
    let mut parts = vec![Vec::new(); q.len()];
    for (i, p) in b.iter().enumerate() {
        let mut d: Vec<(f64, usize)> = q
            .iter()
            .enumerate()
            .map(|(j, qj)| (p.chordal_distance(qj), j))
            .collect();
        d.sort_by(|x, y| x.0.total_cmp(&y.0));
        if d[0].0 <= TIE_TOL {
            return Err(HyperellipticError::BranchAtLimitPoint { index: i });
        }
        if d.len() > 1 && d[1].0 - d[0].0 <= TIE_TOL * d[1].0 {
            return Err(HyperellipticError::AmbiguousPartition { index: i });
        }
        parts[d[0].1].push(i);
    }
    if let Some(j) = parts.iter().position(|p| p.is_empty()) {
        return Err(HyperellipticError::EmptyPart(j));
    }
    Ok(parts)
}

/// Polynomial growth exponent `b` with `|mu_k| ~ k^b`, estimated on the last
/// half of the prefix. Local exponents are regressed against `1/log k` and
/// the intercept (the limiting exponent) is taken, capped by the smallest
/// local value so that accelerating sequences stay conservative.
pub fn growth_exponent(moduli: &[f64]) -> Result<f64, HyperellipticError> {
    let mut m: Vec<f64> = moduli.iter().copied().filter(|x| *x > 0.0).collect();
    if m.len() < MIN_PREFIX {
        return Err(HyperellipticError::TooFewZeros(m.len()));
    }
    m.sort_by(f64::total_cmp);
    let n = m.len();
    let mut xs = Vec::new();
    let mut bs = Vec::new();
    for i in n / 2 - 1..n - 1 {
        let k = (i + 1) as f64;
        let b = (m[i + 1].ln() - m[i].ln()) / ((k + 1.0).ln() - k.ln());
        xs.push(1.0 / (k + 0.5).ln());
        bs.push(b);
    }
    let len = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / len;
    let mb = bs.iter().sum::<f64>() / len;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxb: f64 = xs.iter().zip(&bs).map(|(x, b)| (x - mx) * (b - mb)).sum();
    let intercept = mb - sxb / sxx * mx;
    let min = bs.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(intercept.min(min))
}

/// Smallest `M <= 8` with `sum 1/|mu_k|^{M+1}` convergent under the estimated
/// growth, with a margin: `(M + 1) b >= 1.5`.
pub fn choose_convergence_exponent(moduli: &[f64]) -> Result<u32, HyperellipticError> {
    exponent_for_growth(growth_exponent(moduli)?)
}

fn exponent_for_growth(growth: f64) -> Result<u32, HyperellipticError> {
    if growth > 0.0 {
        for m in 0..=MAX_EXPONENT {
            if (m + 1) as f64 * growth >= 1.5 - 1e-3 {
                return Ok(m);
            }
        }
    }
    Err(HyperellipticError::Divergence { growth })
}

/// How a product is built: an explicit exponent overrides the automatic
/// choice, and `bare` drops the exponential convergence factors.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ProductOptions {
    pub exponent: Option<u32>,
    pub bare: bool,
}

/// The elementary factor `(1 - u) exp(u + u^2/2 + ... + u^M/M)`.
pub fn elementary_factor(u: Complex64, m: u32) -> Complex64 {
    let mut s = zero();
    let mut p = one();
    for j in 1..=m {
        p *= u;
        s += p / j as f64;
    }
    (one() - u) * s.exp()
}

/// A truncated canonical product `z^e prod_{k<=K} E_M(z/mu_k)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeierstrassModel {
    /// Nonzero zeros sorted by modulus.
    #[serde(with = "complex_vec")]
    pub zeros: Vec<Complex64>,
    pub origin_zero: bool,
    pub exponent: u32,
    pub truncation: usize,
    pub growth: Option<f64>,
    pub disk_radius: f64,
    /// Bound on `|log f - log f_K|` over the evaluation disk; infinite when uncertified.
    pub tail_bound: f64,
    pub bare: bool,
}

impl WeierstrassModel {
    pub fn new(zeros: &[Complex64], opts: ProductOptions) -> Result<Self, HyperellipticError> {
        let moduli: Vec<f64> = zeros.iter().map(|z| z.norm()).collect();
        let growth = match growth_exponent(&moduli) {
            Ok(g) => Some(g),
            Err(HyperellipticError::TooFewZeros(_)) if opts.exponent.is_some() || opts.bare => None,
            Err(e) => return Err(e),
        };
        let exponent = match (opts.bare, opts.exponent) {
            (true, _) => 0,
            (false, Some(m)) => m,
            (false, None) => exponent_for_growth(growth.expect("growth available"))?,
        };
        Self::build(zeros, exponent, growth, opts.bare)
    }

    /// A product with a fixed exponent and a growth exponent supplied by the caller.
    pub fn with_exponent(
        zeros: &[Complex64],
        exponent: u32,
        growth: Option<f64>,
        bare: bool,
    ) -> Result<Self, HyperellipticError> {
        Self::build(zeros, if bare { 0 } else { exponent }, growth, bare)
    }

    fn build(
        zeros: &[Complex64],
        exponent: u32,
        growth: Option<f64>,
        bare: bool,
    ) -> Result<Self, HyperellipticError> {
        let origin = zeros.iter().filter(|z| z.norm() == 0.0).count();
        if origin > 1 {
            return Err(HyperellipticError::RepeatedOrigin);
        }
        let mut nonzero: Vec<Complex64> =
            zeros.iter().copied().filter(|z| z.norm() > 0.0).collect();
        nonzero.sort_by(|a, b| a.norm().total_cmp(&b.norm()));
        let k = nonzero.len();
        let last = nonzero.last().map(|z| z.norm()).unwrap_or(1.0);
        let disk_radius = 2.0 * last.sqrt();
        let s = (exponent + 1) as f64;
        let rho = disk_radius / last;
        // Tail zeros are extrapolated as |mu_j| >= |mu_K| (j/K)^b; with
        // |log E_M(u)| <= |u|^{M+1}/(1-|u|) this sums to the bound below.
        let tail_bound = match growth {
            Some(b) if b * s > 1.0 && rho < 1.0 && k > 0 => {
                let tail_sum = last.powf(-s) * k as f64 / (b * s - 1.0);
                disk_radius.powf(s) * tail_sum / (1.0 - rho)
            }
            _ => f64::INFINITY,
        };
        Ok(Self {
            zeros: nonzero,
            origin_zero: origin == 1,
            exponent,
            truncation: k,
            growth,
            disk_radius,
            tail_bound,
            bare,
        })
    }

    /// Every zero including the origin, if present.
    pub fn all_zeros(&self) -> Vec<Complex64> {
        let mut v = Vec::with_capacity(self.zeros.len() + 1);
        if self.origin_zero {
            v.push(zero());
        }
        v.extend_from_slice(&self.zeros);
        v
    }

    /// The truncated product at any `z`, without a bound.
    pub fn evaluate_product(&self, z: Complex64) -> Complex64 {
        let mut v = if self.origin_zero { z } else { one() };
        for mu in &self.zeros[..self.truncation] {
            v *= elementary_factor(z / mu, self.exponent);
        }
        v
    }

    /// The truncated product together with the certified bound on
    /// `|log f(z) - log f_K(z)|`, valid on the evaluation disk.
    pub fn weierstrass_eval(&self, z: Complex64) -> Result<(Complex64, f64), HyperellipticError> {
        if z.norm() > self.disk_radius {
            return Err(HyperellipticError::OutsideDisk {
                modulus: z.norm(),
                radius: self.disk_radius,
            });
        }
        Ok((self.evaluate_product(z), self.tail_bound))
    }

    /// Product of the moduli of the factors that do not vanish at `z`.
    pub fn local_scale(&self, z: Complex64) -> f64 {
        let mut s = 1.0;
        if self.origin_zero && z.norm() > 0.0 {
            s *= z.norm();
        }
        for mu in &self.zeros[..self.truncation] {
            let f = elementary_factor(z / mu, self.exponent).norm();
            if f > 0.0 {
                s *= f;
            }
        }
        s
    }

    /// `|f(z)|` divided by the largest each factor could be at this
    /// modulus, a number in `[0, 1]` that is small only near zeros.
    pub fn normalized_modulus(&self, z: Complex64) -> f64 {
        let mut r = if self.origin_zero {
            z.norm() / (1.0 + z.norm())
        } else {
            1.0
        };
        for mu in &self.zeros[..self.truncation] {
            let u = z / mu;
            r *= (one() - u).norm() / (1.0 + u.norm());
        }
        r
    }
}

/// The composed argument under which a factor enters the equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Argument {
    Identity,
    Inverse,
    InverseShift {
        #[serde(with = "complex_pair")]
        center: Complex64,
    },
}

impl Argument {
    pub fn apply(&self, z: Complex64) -> Option<Complex64> {
        let w = match self {
            Self::Identity => return Some(z),
            Self::Inverse => z,
            Self::InverseShift { center } => z - center,
        };
        if w == zero() {
            None
        } else {
            Some(one() / w)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartFactor {
    pub part: usize,
    pub argument: Argument,
    pub model: WeierstrassModel,
}

/// `w^2 = f_1(z) f_2(1/z) f_3(1/(z-1)) prod_j f_j(1/(z - T(q_j)))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperellipticModel {
    pub config: LimitConfiguration,
    pub options: ProductOptions,
    pub normalizer: Mobius,
    pub branch_points: Vec<ExtendedComplex>,
    /// `T(b)` for every branch point, in the same order.
    #[serde(with = "complex_vec")]
    pub images: Vec<Complex64>,
    pub parts: Vec<Vec<usize>>,
    pub factors: Vec<PartFactor>,
    pub bits: Vec<u8>,
    pub kernel_id: u64,
    pub kernel_level: usize,
    pub kernel: Vec<Vec<u32>>,
}

impl HyperellipticModel {
    /// Right-hand side of the equation at `z`.
    pub fn rhs(&self, z: Complex64) -> Result<Complex64, HyperellipticError> {
        let mut v = one();
        for f in &self.factors {
            let x = f.argument.apply(z).ok_or(HyperellipticError::Singular(z))?;
            v *= f.model.evaluate_product(x);
        }
        Ok(v)
    }

    /// Right-hand side with the summed certified log-error bound; fails when
    /// some factor's argument leaves its evaluation disk.
    pub fn rhs_certified(&self, z: Complex64) -> Result<(Complex64, f64), HyperellipticError> {
        let mut v = one();
        let mut bound = 0.0;
        for f in &self.factors {
            let x = f.argument.apply(z).ok_or(HyperellipticError::Singular(z))?;
            let (y, t) = f.model.weierstrass_eval(x)?;
            v *= y;
            bound += t;
        }
        Ok((v, bound))
    }

    pub fn residual(&self, z: Complex64, w: Complex64) -> Result<Complex64, HyperellipticError> {
        Ok(w * w - self.rhs(z)?)
    }

    /// The hyperelliptic involution `(z, w) -> (z, -w)`.
    pub fn involution(z: Complex64, w: Complex64) -> (Complex64, Complex64) {
        (z, -w)
    }

    /// Points `w` over `z`: two unless `z` is a branch image.
    pub fn fiber(&self, z: Complex64) -> Result<Vec<Complex64>, HyperellipticError> {
        Ok(distinct_roots(&[self.rhs(z)?.sqrt()]))
    }

    fn local_scale(&self, z: Complex64) -> Result<f64, HyperellipticError> {
        let mut s = 1.0;
        for f in &self.factors {
            let x = f.argument.apply(z).ok_or(HyperellipticError::Singular(z))?;
            s *= f.model.local_scale(x);
        }
        Ok(s)
    }

    fn normalized_modulus(&self, z: Complex64) -> Option<f64> {
        let mut r = 1.0;
        for f in &self.factors {
            r *= f.model.normalized_modulus(f.argument.apply(z)?);
        }
        Some(r)
    }

    /// `(lower-left, upper-right)` of a box containing all branch images.
    pub fn grid_box(&self) -> (Complex64, Complex64) {
        let (mut lo, mut hi) = (
            Complex64::new(f64::INFINITY, f64::INFINITY),
            -Complex64::new(f64::INFINITY, f64::INFINITY),
        );
        for z in &self.images {
            lo = Complex64::new(lo.re.min(z.re), lo.im.min(z.im));
            hi = Complex64::new(hi.re.max(z.re), hi.im.max(z.im));
        }
        let pad = 0.1 * (hi - lo).norm() + 0.5;
        (lo - Complex64::new(pad, pad), hi + Complex64::new(pad, pad))
    }

    fn grid(&self, n: usize) -> Vec<Complex64> {
        let (lo, hi) = self.grid_box();
        let mut pts = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let x = lo.re + (hi.re - lo.re) * (i as f64 + 0.5) / n as f64;
                let y = lo.im + (hi.im - lo.im) * (j as f64 + 0.5) / n as f64;
                pts.push(Complex64::new(x, y));
            }
        }
        pts
    }

    /// CSV rows `re,im,abs_rhs,normalized` over an `n x n` grid of the image box.
    pub fn grid_csv(&self, n: usize) -> String {
        let mut out = String::from("re,im,abs_rhs,normalized\n");
        for z in self.grid(n) {
            let v = self.rhs(z).map(|v| v.norm()).unwrap_or(f64::NAN);
            let r = self.normalized_modulus(z).unwrap_or(f64::NAN);
            let _ = writeln!(out, "{},{},{:e},{:e}", z.re, z.im, v, r);
        }
        out
    }

    /// Runs the zero-fidelity, separation, tail, two-sheet and involution checks.
    pub fn validate(&self, seed: u64) -> Result<ModelValidation, HyperellipticError> {
        let mut zero_fidelity = 0.0f64;
        for &z in &self.images {
            let ratio = self.rhs(z)?.norm() / self.local_scale(z)?;
            zero_fidelity = zero_fidelity.max(ratio);
        }
        let mut grid_min = f64::INFINITY;
        for z in self.grid(20) {
            if self
                .images
                .iter()
                .any(|b| (z - b).norm() <= 1e-9 * (1.0 + b.norm()))
            {
                continue;
            }
            if let Some(r) = self.normalized_modulus(z) {
                grid_min = grid_min.min(r);
            }
        }
        let separation_ok = grid_min > 0.0 && grid_min > SEPARATION_RATIO * zero_fidelity;

        let (doubling_change, doubling_bound) = self.doubling_check(seed)?;

        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (lo, hi) = self.grid_box();
        let mut sheets_ok = true;
        let mut involution_exact = true;
        let mut samples = 0;
        while samples < 100 {
            let z = Complex64::new(rng.gen_range(lo.re..hi.re), rng.gen_range(lo.im..hi.im));
            if self.images.iter().any(|b| (z - b).norm() < 1e-6) {
                continue;
            }
            let Ok(fiber) = self.fiber(z) else { continue };
            samples += 1;
            sheets_ok &= fiber.len() == 2;
            let w = fiber[0];
            let (z2, w2) = Self::involution(z, w);
            involution_exact &= self.residual(z, w)? == self.residual(z2, w2)?;
        }
        Ok(ModelValidation {
            zero_fidelity,
            zero_fidelity_ok: zero_fidelity < ZERO_FIDELITY_TOL,
            grid_min_modulus: grid_min,
            separation_ok,
            doubling_change,
            doubling_bound,
            doubling_ok: doubling_change <= doubling_bound,
            sheet_samples: samples,
            two_sheets_ok: sheets_ok,
            involution_exact,
        })
    }

    /// Rebuilds every factor from twice the depth with the same exponent and
    /// compares log values at points of each evaluation disk.
    fn doubling_check(&self, seed: u64) -> Result<(f64, f64), HyperellipticError> {
        let cfg = LimitConfiguration {
            depth: 2 * self.config.depth,
            ..self.config.clone()
        };
        let forced: Vec<u32> = self.factors.iter().map(|f| f.model.exponent).collect();
        let doubled = synth_with(&cfg, &self.bits, self.options, Some(&forced))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        let mut worst_ratio = 0.0f64;
        let mut change = 0.0f64;
        let mut bound = 0.0f64;
        for (f, g) in self.factors.iter().zip(&doubled.factors) {
            let tau = f.model.tail_bound;
            for _ in 0..32 {
                let z = Complex64::from_polar(
                    f.model.disk_radius * rng.gen_range(0.0f64..1.0).sqrt(),
                    rng.gen_range(0.0..std::f64::consts::TAU),
                );
                let a = f.model.evaluate_product(z);
                let b = g.model.evaluate_product(z);
                if a.norm() == 0.0 || b.norm() == 0.0 {
                    continue;
                }
                let d = (b / a).ln().norm();
                let ratio = if tau > 0.0 { d / tau } else { f64::INFINITY };
                if ratio > worst_ratio || (change == 0.0 && bound == 0.0) {
                    worst_ratio = ratio;
                    change = d;
                    bound = tau;
                }
            }
        }
        Ok((change, bound))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelValidation {
    pub zero_fidelity: f64,
    pub zero_fidelity_ok: bool,
    pub grid_min_modulus: f64,
    pub separation_ok: bool,
    /// Worst observed `|log f_{2K} - log f_K|` relative to its bound.
    pub doubling_change: f64,
    pub doubling_bound: f64,
    pub doubling_ok: bool,
    pub sheet_samples: usize,
    pub two_sheets_ok: bool,
    pub involution_exact: bool,
}

impl ModelValidation {
    pub fn passed(&self) -> bool {
        self.zero_fidelity_ok
            && self.separation_ok
            && self.doubling_ok
            && self.two_sheets_ok
            && self.involution_exact
    }
}

fn distinct_roots(roots: &[Complex64]) -> Vec<Complex64> {
    let mut out: Vec<Complex64> = Vec::new();
    for r in roots {
        for s in [*r, -*r] {
            if !out
                .iter()
                .any(|x| (x - s).norm() <= 1e-12 * (1.0 + s.norm()))
            {
                out.push(s);
            }
        }
    }
    out
}

/// Synthesizes the model attached to the limit configuration and the
/// character with the given bits for `q_1, ..., q_N`.
pub fn synth_hyperelliptic(
    cfg: &LimitConfiguration,
    bits: &[u8],
    opts: ProductOptions,
) -> Result<HyperellipticModel, HyperellipticError> {
    synth_with(cfg, bits, opts, None)
}

fn synth_with(
    cfg: &LimitConfiguration,
    bits: &[u8],
    opts: ProductOptions,
    forced: Option<&[u32]>,
) -> Result<HyperellipticModel, HyperellipticError> {
    let n = cfg.limit_points.len().saturating_sub(1);
    if cfg.limit_points.is_empty() {
        return Err(HyperellipticError::NoLimitPoints);
    }
    if bits.len() != n {
        return Err(HyperellipticError::BitsLength {
            expected: n,
            found: bits.len(),
        });
    }
    if bits.iter().any(|&b| b > 1) {
        return Err(HyperellipticError::BitValue);
    }
    let set = cfg.materialize_branch_set()?;
    let q: Vec<ExtendedComplex> = cfg.limit_points.iter().map(|&z| z.into()).collect();
    let t = mobius_normalizer(&q)?;
    let parts = partition_by_limit_point(&set.points, &q)?;
    let images: Vec<Complex64> = set
        .points
        .iter()
        .map(|&b| t.apply(b).as_finite().expect("only q_1 maps to infinity"))
        .collect();
    let mut factors = Vec::with_capacity(parts.len());
    for (j, part) in parts.iter().enumerate() {
        let argument = match j {
            0 => Argument::Identity,
            1 => Argument::Inverse,
            2 => Argument::InverseShift { center: one() },
            _ => Argument::InverseShift {
                center: t
                    .apply(q[j])
                    .as_finite()
                    .expect("only q_1 maps to infinity"),
            },
        };
        let zeros: Vec<Complex64> = part
            .iter()
            .map(|&i| {
                argument
                    .apply(images[i])
                    .expect("branch images avoid the centers")
            })
            .collect();
        let model = match forced {
            Some(ms) => {
                let growth =
                    growth_exponent(&zeros.iter().map(|z| z.norm()).collect::<Vec<_>>()).ok();
                WeierstrassModel::with_exponent(&zeros, ms[j], growth, opts.bare)?
            }
            None => WeierstrassModel::new(&zeros, opts)?,
        };
        factors.push(PartFactor {
            part: j,
            argument,
            model,
        });
    }
    let kernel_level = set.points.len() - 1 + n;
    let kernel = TwoGroupCharacter::hyperelliptic(bits, kernel_level)?.kernel()?;
    Ok(HyperellipticModel {
        config: cfg.clone(),
        options: opts,
        normalizer: t,
        branch_points: set.points,
        images,
        parts,
        factors,
        bits: bits.to_vec(),
        kernel_id: bits_id(bits),
        kernel_level,
        kernel: kernel.canonical_form().to_vec(),
    })
}

fn bits_id(bits: &[u8]) -> u64 {
    bits.iter().fold(0, |acc, &b| (acc << 1) | b as u64)
}

/// The index-two kernels of the `2^N` hyperelliptic characters at level `L`,
/// keyed by their bits (most significant bit first).
pub fn enumerate_hyperelliptic_kernels(
    n: usize,
    level: usize,
) -> Result<Vec<(Vec<u8>, Subgroup)>, HyperellipticError> {
    let mut out = Vec::with_capacity(1 << n);
    for id in 0..(1u64 << n) {
        let bits: Vec<u8> = (0..n).rev().map(|i| ((id >> i) & 1) as u8).collect();
        let kernel = TwoGroupCharacter::hyperelliptic(&bits, level)?.kernel()?;
        out.push((bits, kernel));
    }
    Ok(out)
}

/// Indices of the free generators `a_1, ..., a_L` that carry fixed points
/// when `q_1, ..., q_N` are deleted: all but `a_4, ..., a_{N+3}`.
pub fn fixed_bearing_generators(n: usize, level: usize) -> BTreeSet<usize> {
    (1..=level).filter(|j| !(4..=n + 3).contains(j)).collect()
}

/// Whether no fixed-bearing free generator lies in the kernel.
pub fn excludes_fixed_bearing(kernel: &Subgroup, n: usize) -> Result<bool, HyperellipticError> {
    let level = kernel.level();
    for j in fixed_bearing_generators(n, level) {
        if kernel.contains(&GroupElement::generator(2, level, j)?)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// `w^2 = f_{A1} f_{A3}`, `u^2 = f_{A2} f_{A3}`, with `a` negating `w` and `b` negating `u`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Z2SquaredModel {
    pub parts: [Vec<usize>; 3],
    #[serde(with = "complex_vec")]
    pub zeros: Vec<Complex64>,
    pub factors: [WeierstrassModel; 3],
}

impl Z2SquaredModel {
    /// `(f_{A1}, f_{A2}, f_{A3})` at `z`.
    pub fn factor_values(&self, z: Complex64) -> [Complex64; 3] {
        [0, 1, 2].map(|i| self.factors[i].evaluate_product(z))
    }

    /// `(w^2 - f_{A1} f_{A3}, u^2 - f_{A2} f_{A3})`.
    pub fn residuals(&self, z: Complex64, u: Complex64, w: Complex64) -> (Complex64, Complex64) {
        let [f1, f2, f3] = self.factor_values(z);
        (w * w - f1 * f3, u * u - f2 * f3)
    }

    pub fn a(z: Complex64, u: Complex64, w: Complex64) -> (Complex64, Complex64, Complex64) {
        (z, u, -w)
    }

    pub fn b(z: Complex64, u: Complex64, w: Complex64) -> (Complex64, Complex64, Complex64) {
        (z, -u, w)
    }

    /// Solutions `(u, w)` over `z`.
    pub fn fiber(&self, z: Complex64) -> Vec<(Complex64, Complex64)> {
        let [f1, f2, f3] = self.factor_values(z);
        let us = distinct_roots(&[(f2 * f3).sqrt()]);
        let ws = distinct_roots(&[(f1 * f3).sqrt()]);
        us.iter()
            .flat_map(|&u| ws.iter().map(move |&w| (u, w)))
            .collect()
    }

    /// Whether `(w, u)` vanish over the `i`-th zero, up to the local scale.
    pub fn vanishing(&self, i: usize) -> (bool, bool) {
        let z = self.zeros[i];
        let small = |m: &WeierstrassModel| {
            m.evaluate_product(z).norm() < ZERO_FIDELITY_TOL * m.local_scale(z)
        };
        let v = [0, 1, 2].map(|j| small(&self.factors[j]));
        (v[0] || v[2], v[1] || v[2])
    }
}

/// Splits a zero list into three parts and builds the two-equation model.
/// All three products share the exponent chosen for the full list.
pub fn synth_z2m_curve(
    zeros: &[Complex64],
    parts: [&[usize]; 3],
    opts: ProductOptions,
) -> Result<Z2SquaredModel, HyperellipticError> {
    let mut seen = vec![false; zeros.len()];
    for part in parts {
        for &i in part {
            if i >= zeros.len() {
                return Err(HyperellipticError::IndexOutOfRange {
                    index: i,
                    len: zeros.len(),
                });
            }
            if seen[i] {
                return Err(HyperellipticError::OverlappingParts(i));
            }
            seen[i] = true;
        }
    }
    if let Some(i) = seen.iter().position(|s| !s) {
        return Err(HyperellipticError::UncoveredIndex(i));
    }
    let whole = WeierstrassModel::new(zeros, opts)?;
    let factors = parts.map(|part| {
        let z: Vec<Complex64> = part.iter().map(|&i| zeros[i]).collect();
        WeierstrassModel::with_exponent(&z, whole.exponent, whole.growth, opts.bare)
    });
    let [f1, f2, f3] = factors;
    Ok(Z2SquaredModel {
        parts: parts.map(|p| p.to_vec()),
        zeros: zeros.to_vec(),
        factors: [f1?, f2?, f3?],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ext(re: f64, im: f64) -> ExtendedComplex {
        ExtendedComplex::finite(re, im)
    }

    #[test]
    fn single_limit_point_normalizer() {
        let t = mobius_normalizer(&[ext(2.0, 0.0)]).unwrap();
        assert_eq!(t.apply(ext(2.0, 0.0)), ExtendedComplex::Infinity);
        assert_eq!(
            t.apply(ExtendedComplex::Infinity),
            ExtendedComplex::real(0.0)
        );
        assert!(t
            .apply(ext(1.0, 0.0))
            .approx_eq(&ExtendedComplex::real(2.0), 1e-15));
        assert!(t
            .apply(ext(0.0, 0.0))
            .approx_eq(&ExtendedComplex::real(1.0), 1e-15));
    }

    #[test]
    fn normalizer_sends_first_three_to_inf_zero_one() {
        let q = [ext(2.0, 1.0), ext(-1.0, 3.0), ext(0.5, -2.0), ext(4.0, 4.0)];
        let t = mobius_normalizer(&q).unwrap();
        assert_eq!(t.apply(q[0]), ExtendedComplex::Infinity);
        assert!(t.apply(q[1]).approx_eq(&ExtendedComplex::real(0.0), 1e-14));
        assert!(t.apply(q[2]).approx_eq(&ExtendedComplex::real(1.0), 1e-14));
        let t2 = mobius_normalizer(&q[..2]).unwrap();
        assert_eq!(t2.apply(q[0]), ExtendedComplex::Infinity);
        assert!(t2.apply(q[1]).approx_eq(&ExtendedComplex::real(0.0), 1e-14));
    }

    #[test]
    fn coincident_limit_points_rejected() {
        assert_eq!(
            mobius_normalizer(&[ext(2.0, 0.0), ext(2.0, 0.0)]),
            Err(HyperellipticError::CoincidentLimitPoints(0, 1))
        );
    }

    #[test]
    fn equidistant_point_is_ambiguous() {
        let q = [ext(1.0, 0.0), ext(-1.0, 0.0)];
        let b = [ext(0.0, 2.0), ext(1.1, 0.0), ext(-1.1, 0.0)];
        assert_eq!(
            partition_by_limit_point(&b, &q),
            Err(HyperellipticError::AmbiguousPartition { index: 0 })
        );
        assert_eq!(
            partition_by_limit_point(&b[1..], &q).unwrap(),
            vec![vec![0], vec![1]]
        );
    }

    #[test]
    fn exponent_examples() {
        let pref = |f: &dyn Fn(f64) -> f64| (1..=32).map(|k| f(k as f64)).collect::<Vec<_>>();
        assert_eq!(choose_convergence_exponent(&pref(&|k| 2f64.powf(k))), Ok(0));
        assert_eq!(choose_convergence_exponent(&pref(&|k| k)), Ok(1));
        assert_eq!(choose_convergence_exponent(&pref(&|k| k.sqrt())), Ok(2));
        assert_eq!(choose_convergence_exponent(&pref(&|k| k * k)), Ok(0));
        assert!(matches!(
            choose_convergence_exponent(&pref(&|k| (k + 2.0).ln())),
            Err(HyperellipticError::Divergence { .. })
        ));
        assert_eq!(
            choose_convergence_exponent(&[1.0; 4]),
            Err(HyperellipticError::TooFewZeros(4))
        );
    }

    #[test]
    fn product_vanishes_at_zeros_and_is_one_at_origin() {
        let zeros: Vec<Complex64> = (1..=10).map(|k| c(2f64.powi(k), 0.5 * k as f64)).collect();
        let f = WeierstrassModel::new(&zeros, ProductOptions::default()).unwrap();
        assert_eq!(f.evaluate_product(c(0.0, 0.0)), c(1.0, 0.0));
        let z = zeros[2];
        assert!(f.evaluate_product(z).norm() < 1e-6 * f.local_scale(z));
        assert!(f.weierstrass_eval(c(1e4, 0.0)).is_err());
        let mut with_origin = zeros.clone();
        with_origin.push(c(0.0, 0.0));
        let g = WeierstrassModel::new(&with_origin, ProductOptions::default()).unwrap();
        assert_eq!(g.evaluate_product(c(0.0, 0.0)), c(0.0, 0.0));
    }

    #[test]
    fn single_point_model_starts_with_anchor_images() {
        let cfg = LimitConfiguration::new(vec![c(2.0, 0.0)], 8);
        let m = synth_hyperelliptic(&cfg, &[], ProductOptions::default()).unwrap();
        assert!((m.images[0] - c(0.0, 0.0)).norm() < 1e-15);
        assert!((m.images[1] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((m.images[2] - c(2.0, 0.0)).norm() < 1e-14);
        assert!(m.factors[0].model.origin_zero);
        assert_eq!(m.rhs(c(0.0, 0.0)).unwrap(), c(0.0, 0.0));
        let v = m.validate(7).unwrap();
        assert!(v.passed(), "{v:?}");
    }

    #[test]
    fn kernels_are_distinct_and_avoid_fixed_bearing_generators() {
        let ks = enumerate_hyperelliptic_kernels(3, 12).unwrap();
        assert_eq!(ks.len(), 8);
        for (i, (_, k)) in ks.iter().enumerate() {
            assert_eq!(k.index().unwrap(), 2);
            assert!(excludes_fixed_bearing(k, 3).unwrap());
            for (_, other) in &ks[i + 1..] {
                assert_ne!(k.canonical_form(), other.canonical_form());
            }
        }
        assert_eq!(enumerate_hyperelliptic_kernels(0, 5).unwrap().len(), 1);
    }

    #[test]
    fn z2_squared_fixed_loci() {
        let zeros: Vec<Complex64> = (1..=12).map(|k| c(1.7f64.powi(k), 0.3)).collect();
        let a1: Vec<usize> = (0..12).step_by(3).collect();
        let a2: Vec<usize> = (1..12).step_by(3).collect();
        let a3: Vec<usize> = (2..12).step_by(3).collect();
        let m = synth_z2m_curve(&zeros, [&a1, &a2, &a3], ProductOptions::default()).unwrap();
        assert_eq!(m.vanishing(0), (true, false));
        assert_eq!(m.vanishing(1), (false, true));
        assert_eq!(m.vanishing(2), (true, true));
        assert_eq!(m.fiber(c(0.3, 0.9)).len(), 4);
        assert!(synth_z2m_curve(&zeros, [&a1, &a1, &a3], ProductOptions::default()).is_err());
    }

    #[test]
    fn several_limit_points_validate() {
        let cfg = LimitConfiguration::new(
            vec![c(3.0, 0.5), c(-1.5, 1.0), c(0.4, -2.2), c(-2.6, -2.7)],
            8,
        );
        let m = synth_hyperelliptic(&cfg, &[1, 0, 1], ProductOptions::default()).unwrap();
        assert_eq!(m.kernel_id, 5);
        let set = cfg.materialize_branch_set().unwrap();
        for (j, part) in m.parts.iter().enumerate() {
            for i in set.part(j) {
                assert!(part.contains(&i));
            }
        }
        let v = m.validate(11).unwrap();
        assert!(v.passed(), "{v:?}");
    }
}
