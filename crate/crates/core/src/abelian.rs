//! Exact arithmetic in the deck groups `Z_k^L`.
//!
//! An element is stored as its exponent vector over the `L` free generators
//! `a_1, ..., a_L`. The extra generator `a_{L+1}` is never stored; it is the
//! inverse of the product of the others, i.e. the constant vector `(k-1, ..., k-1)`.
//!
//! Subgroups are kept in Howell form, which is a canonical row-reduced basis
//! over `Z/k` that works for composite `k`. Two subgroups are equal exactly
//! when their Howell forms are equal.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AbelianError {
    #[error("modulus must be at least 2, got {0}")]
    ModulusTooSmall(u32),
    #[error("dimension mismatch: (k={k1}, L={l1}) vs (k={k2}, L={l2})")]
    DimensionMismatch {
        k1: u32,
        l1: usize,
        k2: u32,
        l2: usize,
    },
    #[error("exponent {value} at position {position} is not a residue mod {k}")]
    ExponentOutOfRange { position: usize, value: u32, k: u32 },
    #[error("generator index {index} out of range 1..={max}")]
    GeneratorOutOfRange { index: usize, max: usize },
    #[error("freeness is undefined for the identity element")]
    IdentityFreeness,
    #[error("character is not surjective onto Z_2^{rank}")]
    NotSurjective { rank: usize },
    #[error("invalid character: {0}")]
    InvalidCharacter(String),
    #[error("group order k^L does not fit in 128 bits (k={k}, L={level})")]
    Overflow { k: u32, level: usize },
}

/// An element `a_1^{e_1} ... a_L^{e_L}` of `Z_k^L`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GroupElement {
    k: u32,
    exponents: Vec<u32>,
}

impl GroupElement {
    pub fn new(k: u32, exponents: Vec<u32>) -> Result<Self, AbelianError> {
        if k < 2 {
            return Err(AbelianError::ModulusTooSmall(k));
        }
        if let Some((position, &value)) = exponents.iter().enumerate().find(|(_, &e)| e >= k) {
            return Err(AbelianError::ExponentOutOfRange { position, value, k });
        }
        Ok(Self { k, exponents })
    }

    /// Builds an element from arbitrary integers, reducing them mod `k`.
    pub fn from_residues(k: u32, values: &[i64]) -> Result<Self, AbelianError> {
        if k < 2 {
            return Err(AbelianError::ModulusTooSmall(k));
        }
        let exponents = values
            .iter()
            .map(|&v| v.rem_euclid(k as i64) as u32)
            .collect();
        Ok(Self { k, exponents })
    }

    pub fn identity(k: u32, level: usize) -> Self {
        Self {
            k,
            exponents: vec![0; level],
        }
    }

    /// The generator `a_j` for `1 <= j <= L + 1`; `a_{L+1}` is the derived one.
    pub fn generator(k: u32, level: usize, j: usize) -> Result<Self, AbelianError> {
        if k < 2 {
            return Err(AbelianError::ModulusTooSmall(k));
        }
        if j == 0 || j > level + 1 {
            return Err(AbelianError::GeneratorOutOfRange {
                index: j,
                max: level + 1,
            });
        }
        let mut exponents = vec![0; level];
        if j <= level {
            exponents[j - 1] = 1;
        } else {
            exponents.iter_mut().for_each(|e| *e = k - 1);
        }
        Ok(Self { k, exponents })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn level(&self) -> usize {
        self.exponents.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn is_identity(&self) -> bool {
        self.exponents.iter().all(|&e| e == 0)
    }

    fn check_compatible(&self, other: &Self) -> Result<(), AbelianError> {
        if self.k != other.k || self.level() != other.level() {
            return Err(AbelianError::DimensionMismatch {
                k1: self.k,
                l1: self.level(),
                k2: other.k,
                l2: other.level(),
            });
        }
        Ok(())
    }

    pub fn compose(&self, other: &Self) -> Result<Self, AbelianError> {
        self.check_compatible(other)?;
        let exponents = self
            .exponents
            .iter()
            .zip(&other.exponents)
            .map(|(a, b)| (a + b) % self.k)
            .collect();
        Ok(Self {
            k: self.k,
            exponents,
        })
    }

    pub fn inverse(&self) -> Self {
        let exponents = self
            .exponents
            .iter()
            .map(|&e| (self.k - e) % self.k)
            .collect();
        Self {
            k: self.k,
            exponents,
        }
    }

    pub fn pow(&self, t: i64) -> Self {
        let k = self.k as i64;
        let t = t.rem_euclid(k);
        let exponents = self
            .exponents
            .iter()
            .map(|&e| ((e as i64 * t) % k) as u32)
            .collect();
        Self {
            k: self.k,
            exponents,
        }
    }

    /// Least `t >= 1` with `g^t = 1`.
    pub fn order(&self) -> u32 {
        self.exponents
            .iter()
            .map(|&e| self.k / gcd(e as u64, self.k as u64) as u32)
            .fold(1, |acc, o| lcm(acc as u64, o as u64) as u32)
    }

    /// Indices `j` (1-based, up to `L + 1`) such that this element is a
    /// nontrivial power of `a_j`.
    pub fn generator_supports(&self) -> Vec<usize> {
        let mut out = Vec::new();
        if self.is_identity() {
            return out;
        }
        let nonzero: Vec<usize> = (0..self.level())
            .filter(|&i| self.exponents[i] != 0)
            .collect();
        if nonzero.len() == 1 {
            out.push(nonzero[0] + 1);
        }
        let first = self.exponents[0];
        if self.exponents.iter().all(|&e| e == first) {
            out.push(self.level() + 1);
        }
        out
    }

    /// The image of this element in `Z_k^n` under the forgetful map that keeps
    /// the first `n + 1` coordinates of a point. Generators `a_j` with
    /// `j > n + 1` map to the identity.
    pub fn restrict_to_prefix(&self, n: usize) -> Result<Self, AbelianError> {
        let level = self.level();
        if n > level {
            return Err(AbelianError::DimensionMismatch {
                k1: self.k,
                l1: level,
                k2: self.k,
                l2: n,
            });
        }
        if n == level {
            return Ok(self.clone());
        }
        let pivot = self.exponents[n];
        let exponents = self.exponents[..n]
            .iter()
            .map(|&e| (e + self.k - pivot) % self.k)
            .collect();
        Ok(Self {
            k: self.k,
            exponents,
        })
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_identity() {
            return write!(f, "1");
        }
        let mut first = true;
        for (i, &e) in self.exponents.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                write!(f, "·")?;
            }
            first = false;
            if e == 1 {
                write!(f, "a{}", i + 1)?;
            } else {
                write!(f, "a{}^{}", i + 1, e)?;
            }
        }
        Ok(())
    }
}

pub fn compose(g: &GroupElement, h: &GroupElement) -> Result<GroupElement, AbelianError> {
    g.compose(h)
}

pub fn element_order(g: &GroupElement) -> u32 {
    g.order()
}

/// A subgroup of `Z_k^L`, carried with its Howell form.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Subgroup {
    k: u32,
    level: usize,
    generators: Vec<Vec<u32>>,
    canonical: Vec<Vec<u32>>,
}

impl PartialEq for Subgroup {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && self.level == other.level && self.canonical == other.canonical
    }
}

impl Eq for Subgroup {}

impl Subgroup {
    pub fn trivial(k: u32, level: usize) -> Self {
        Self {
            k,
            level,
            generators: Vec::new(),
            canonical: Vec::new(),
        }
    }

    pub fn full(k: u32, level: usize) -> Self {
        let gens: Vec<Vec<u32>> = (0..level)
            .map(|i| {
                let mut v = vec![0; level];
                v[i] = 1;
                v
            })
            .collect();
        Self::from_rows(k, level, gens)
    }

    fn from_rows(k: u32, level: usize, generators: Vec<Vec<u32>>) -> Self {
        let canonical = howell_form(&generators, level, k);
        Self {
            k,
            level,
            generators,
            canonical,
        }
    }

    pub fn span(k: u32, level: usize, gens: &[GroupElement]) -> Result<Self, AbelianError> {
        if k < 2 {
            return Err(AbelianError::ModulusTooSmall(k));
        }
        let probe = GroupElement::identity(k, level);
        for g in gens {
            probe.check_compatible(g)?;
        }
        let rows = gens.iter().map(|g| g.exponents.clone()).collect();
        Ok(Self::from_rows(k, level, rows))
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn generators(&self) -> Vec<GroupElement> {
        self.generators
            .iter()
            .map(|row| GroupElement {
                k: self.k,
                exponents: row.clone(),
            })
            .collect()
    }

    /// Rows of the Howell form; unique per subgroup.
    pub fn canonical_form(&self) -> &[Vec<u32>] {
        &self.canonical
    }

    fn pivots(&self) -> impl Iterator<Item = (usize, u32, &Vec<u32>)> {
        self.canonical.iter().map(|row| {
            let c = row
                .iter()
                .position(|&x| x != 0)
                .expect("Howell rows are nonzero");
            (c, row[c], row)
        })
    }

    /// Canonical representative of the coset `g + S`.
    pub fn reduce(&self, g: &GroupElement) -> Result<GroupElement, AbelianError> {
        GroupElement::identity(self.k, self.level).check_compatible(g)?;
        let k = self.k as u64;
        let mut v: Vec<u64> = g.exponents.iter().map(|&e| e as u64).collect();
        for (c, d, row) in self.pivots() {
            let q = v[c] / d as u64;
            if q != 0 {
                for (x, &r) in v.iter_mut().zip(row) {
                    *x = (*x + (k - (q * r as u64) % k)) % k;
                }
            }
        }
        Ok(GroupElement {
            k: self.k,
            exponents: v.into_iter().map(|x| x as u32).collect(),
        })
    }

    pub fn contains(&self, g: &GroupElement) -> Result<bool, AbelianError> {
        Ok(self.reduce(g)?.is_identity())
    }

    pub fn order(&self) -> Result<u128, AbelianError> {
        let mut acc: u128 = 1;
        for (_, d, _) in self.pivots() {
            acc = acc
                .checked_mul((self.k / d) as u128)
                .ok_or(AbelianError::Overflow {
                    k: self.k,
                    level: self.level,
                })?;
        }
        Ok(acc)
    }

    /// `k^L / |S|`, read off the pivot annihilators.
    pub fn index(&self) -> Result<u128, AbelianError> {
        let mut acc: u128 = 1;
        let mut pivot_of_col = vec![None; self.level];
        for (c, d, _) in self.pivots() {
            pivot_of_col[c] = Some(d);
        }
        for p in pivot_of_col {
            let factor = p.unwrap_or(self.k);
            acc = acc
                .checked_mul(factor as u128)
                .ok_or(AbelianError::Overflow {
                    k: self.k,
                    level: self.level,
                })?;
        }
        Ok(acc)
    }

    pub fn join(&self, other: &Self) -> Result<Self, AbelianError> {
        if self.k != other.k || self.level != other.level {
            return Err(AbelianError::DimensionMismatch {
                k1: self.k,
                l1: self.level,
                k2: other.k,
                l2: other.level,
            });
        }
        let mut rows = self.generators.clone();
        rows.extend(other.generators.iter().cloned());
        Ok(Self::from_rows(self.k, self.level, rows))
    }

    pub fn is_subgroup_of(&self, other: &Self) -> Result<bool, AbelianError> {
        for g in self.generators() {
            if !other.contains(&g)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Enumerates every element. Intended for small groups only.
    pub fn elements(&self) -> Vec<GroupElement> {
        let mut out = vec![GroupElement::identity(self.k, self.level)];
        for (_, d, row) in self.pivots() {
            let steps = self.k / d;
            let base = GroupElement {
                k: self.k,
                exponents: row.clone(),
            };
            let mut next = Vec::with_capacity(out.len() * steps as usize);
            for g in &out {
                for t in 0..steps {
                    next.push(g.compose(&base.pow(t as i64)).expect("same group"));
                }
            }
            out = next;
        }
        out.sort();
        out.dedup();
        out
    }

    /// Enumerates up to `cap` coset representatives of this subgroup, in a
    /// deterministic breadth-first order starting from the identity coset.
    pub fn coset_representatives(&self, cap: usize) -> Vec<GroupElement> {
        let mut seen = BTreeSet::new();
        let mut order = Vec::new();
        let id = GroupElement::identity(self.k, self.level);
        seen.insert(id.clone());
        order.push(id);
        let mut head = 0;
        while head < order.len() && order.len() < cap {
            let current = order[head].clone();
            head += 1;
            for j in 1..=self.level {
                let step = GroupElement::generator(self.k, self.level, j).expect("in range");
                let next = self
                    .reduce(&current.compose(&step).expect("same group"))
                    .expect("same group");
                if seen.insert(next.clone()) {
                    order.push(next);
                    if order.len() >= cap {
                        break;
                    }
                }
            }
        }
        order
    }
}

pub fn subgroup_span(
    k: u32,
    level: usize,
    gens: &[GroupElement],
) -> Result<Subgroup, AbelianError> {
    Subgroup::span(k, level, gens)
}

pub fn subgroup_index(s: &Subgroup) -> Result<u128, AbelianError> {
    s.index()
}

/// Kernel of the homomorphism `Z_k^L -> Z_k^m` sending `a_i` to `images[i]`.
pub fn kernel_of_homomorphism(
    k: u32,
    level: usize,
    images: &[Vec<u32>],
    rank: usize,
) -> Result<Subgroup, AbelianError> {
    if images.len() != level {
        return Err(AbelianError::InvalidCharacter(format!(
            "expected {level} generator images, got {}",
            images.len()
        )));
    }
    let width = rank + level;
    let rows: Vec<Vec<u32>> = images
        .iter()
        .enumerate()
        .map(|(i, img)| {
            let mut row = vec![0u32; width];
            for (c, &x) in img.iter().enumerate() {
                row[c] = x % k;
            }
            row[rank + i] = 1;
            row
        })
        .collect();
    let h = howell_form(&rows, width, k);
    let kernel_rows: Vec<Vec<u32>> = h
        .into_iter()
        .filter(|row| row[..rank].iter().all(|&x| x == 0))
        .map(|row| row[rank..].to_vec())
        .collect();
    Ok(Subgroup::from_rows(k, level, kernel_rows))
}

/// A homomorphism from `Z_2^L` onto `Z_2^m` (`m` = 1 or 2 in practice),
/// given by the image of each free generator.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TwoGroupCharacter {
    rank: usize,
    images: Vec<Vec<u32>>,
}

impl TwoGroupCharacter {
    pub fn new(rank: usize, images: Vec<Vec<u32>>) -> Result<Self, AbelianError> {
        if images
            .iter()
            .any(|img| img.len() != rank || img.iter().any(|&x| x > 1))
        {
            return Err(AbelianError::InvalidCharacter(
                "images must be vectors in Z_2^m".into(),
            ));
        }
        Ok(Self { rank, images })
    }

    /// The hyperelliptic character at level `L`: generators attached to
    /// branch points map to `x`, while the `N` deleted-set generators
    /// `a_4, ..., a_{N+3}` map to `x^{bits[i]}`.
    pub fn hyperelliptic(bits: &[u8], level: usize) -> Result<Self, AbelianError> {
        let n = bits.len();
        if level < n + 3 {
            return Err(AbelianError::InvalidCharacter(format!(
                "level {level} too small for {n} deleted-set generators"
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(AbelianError::InvalidCharacter("bits must be 0 or 1".into()));
        }
        let images = (1..=level)
            .map(|j| {
                if (4..=n + 3).contains(&j) {
                    vec![bits[j - 4] as u32]
                } else {
                    vec![1]
                }
            })
            .collect();
        Self::new(1, images)
    }

    /// The `Z_2^2` character with `a_j -> a, b, ab` for `j` in parts 1, 2, 3.
    /// Parts hold 1-based generator indices and must partition `1..=L`.
    pub fn from_partition(parts: [&[usize]; 3], level: usize) -> Result<Self, AbelianError> {
        let targets = [vec![1, 0], vec![0, 1], vec![1, 1]];
        let mut images: Vec<Option<Vec<u32>>> = vec![None; level];
        for (part, target) in parts.iter().zip(&targets) {
            for &j in part.iter() {
                if j == 0 || j > level {
                    return Err(AbelianError::GeneratorOutOfRange {
                        index: j,
                        max: level,
                    });
                }
                if images[j - 1].is_some() {
                    return Err(AbelianError::InvalidCharacter(format!(
                        "index {j} in two parts"
                    )));
                }
                images[j - 1] = Some(target.clone());
            }
        }
        let images = images
            .into_iter()
            .enumerate()
            .map(|(i, img)| {
                img.ok_or_else(|| {
                    AbelianError::InvalidCharacter(format!("index {} not covered", i + 1))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Self::new(2, images)
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn level(&self) -> usize {
        self.images.len()
    }

    pub fn images(&self) -> &[Vec<u32>] {
        &self.images
    }

    pub fn apply(&self, g: &GroupElement) -> Result<Vec<u32>, AbelianError> {
        if g.k() != 2 || g.level() != self.level() {
            return Err(AbelianError::DimensionMismatch {
                k1: 2,
                l1: self.level(),
                k2: g.k(),
                l2: g.level(),
            });
        }
        let mut out = vec![0; self.rank];
        for (e, img) in g.exponents().iter().zip(&self.images) {
            if *e == 1 {
                for (o, x) in out.iter_mut().zip(img) {
                    *o ^= x;
                }
            }
        }
        Ok(out)
    }

    pub fn is_surjective(&self) -> bool {
        let image_gens: Vec<GroupElement> = self
            .images
            .iter()
            .map(|img| GroupElement {
                k: 2,
                exponents: img.clone(),
            })
            .collect();
        let image = Subgroup::span(2, self.rank, &image_gens).expect("consistent dims");
        image.index().map(|i| i == 1).unwrap_or(false)
    }

    pub fn kernel(&self) -> Result<Subgroup, AbelianError> {
        if !self.is_surjective() {
            return Err(AbelianError::NotSurjective { rank: self.rank });
        }
        kernel_of_homomorphism(2, self.level(), &self.images, self.rank)
    }
}

pub fn kernel_of_character(theta: &TwoGroupCharacter) -> Result<Subgroup, AbelianError> {
    theta.kernel()
}

/// Whether `g` acts without fixed points, given the indices of the generators
/// that do have fixed points. A nontrivial element has fixed points exactly
/// when it is a power of one such generator.
pub fn acts_freely(
    g: &GroupElement,
    fixed_bearing: &BTreeSet<usize>,
) -> Result<bool, AbelianError> {
    if g.is_identity() {
        return Err(AbelianError::IdentityFreeness);
    }
    Ok(!g
        .generator_supports()
        .iter()
        .any(|j| fixed_bearing.contains(j)))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// `(g, s, t)` with `s*a + t*b = g = gcd(a, b)`.
fn ext_gcd(a: i64, b: i64) -> (i64, i64, i64) {
    if b == 0 {
        return (a, 1, 0);
    }
    let (g, x, y) = ext_gcd(b, a % b);
    (g, y, x - (a / b) * y)
}

/// A unit `u` mod `n` with `u * a = gcd(a, n) (mod n)`.
fn unit_normalizer(a: u64, n: u64) -> u64 {
    let g = gcd(a, n);
    let a1 = (a / g) as i64;
    let n1 = (n / g) as i64;
    let u0 = if n1 == 1 {
        0
    } else {
        let (_, s, _) = ext_gcd(a1.rem_euclid(n1), n1);
        s.rem_euclid(n1)
    } as u64;
    (0..g)
        .map(|t| u0 + t * n1 as u64)
        .find(|&u| gcd(u, n) == 1)
        .expect("a unit always exists in the residue class")
}

fn howell_form(rows: &[Vec<u32>], ncols: usize, k: u32) -> Vec<Vec<u32>> {
    let n = k as i64;
    let mut a: Vec<Vec<i64>> = rows
        .iter()
        .map(|r| r.iter().map(|&x| (x as i64).rem_euclid(n)).collect())
        .filter(|r: &Vec<i64>| r.iter().any(|&x| x != 0))
        .collect();
    let modn = |x: i64| x.rem_euclid(n);
    let mut r = 0;
    for c in 0..ncols {
        if r >= a.len() {
            break;
        }
        for i in (r + 1)..a.len() {
            if a[i][c] == 0 {
                continue;
            }
            if a[r][c] == 0 {
                a.swap(r, i);
                continue;
            }
            let (g, s, t) = ext_gcd(a[r][c], a[i][c]);
            let u = -a[i][c] / g;
            let v = a[r][c] / g;
            let (row_r, row_i) = (a[r].clone(), a[i].clone());
            for col in 0..ncols {
                a[r][col] = modn(s * row_r[col] + t * row_i[col]);
                a[i][col] = modn(u * row_r[col] + v * row_i[col]);
            }
        }
        if a[r][c] == 0 {
            continue;
        }
        let unit = unit_normalizer(a[r][c] as u64, k as u64) as i64;
        for col in 0..ncols {
            a[r][col] = modn(a[r][col] * unit);
        }
        let d = a[r][c];
        for i in 0..r {
            let q = a[i][c] / d;
            if q != 0 {
                for col in 0..ncols {
                    a[i][col] = modn(a[i][col] - q * a[r][col]);
                }
            }
        }
        let ann = n / d;
        if ann != n {
            let extra: Vec<i64> = a[r].iter().map(|&x| modn(x * ann)).collect();
            if extra.iter().any(|&x| x != 0) {
                a.push(extra);
            }
        }
        r += 1;
    }
    a.truncate(r);
    a.into_iter()
        .filter(|row| row.iter().any(|&x| x != 0))
        .map(|row| row.into_iter().map(|x| x as u32).collect())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn el(k: u32, v: &[u32]) -> GroupElement {
        GroupElement::new(k, v.to_vec()).unwrap()
    }

    #[test]
    fn compose_adds_componentwise() {
        assert_eq!(
            compose(&el(3, &[1, 0]), &el(3, &[0, 1])).unwrap(),
            el(3, &[1, 1])
        );
        let g = el(5, &[3, 4, 1]);
        assert_eq!(g.compose(&GroupElement::identity(5, 3)).unwrap(), g);
    }

    #[test]
    fn product_of_all_generators_is_identity() {
        for k in 2..6 {
            for level in 1..6 {
                let mut acc = GroupElement::identity(k, level);
                for j in 1..=level + 1 {
                    acc = acc
                        .compose(&GroupElement::generator(k, level, j).unwrap())
                        .unwrap();
                }
                assert!(acc.is_identity());
            }
        }
    }

    #[test]
    fn mismatched_dimensions_are_rejected() {
        assert!(el(3, &[1, 0]).compose(&el(3, &[1])).is_err());
        assert!(el(3, &[1, 0]).compose(&el(2, &[1, 0])).is_err());
        assert!(GroupElement::new(3, vec![3]).is_err());
        assert!(GroupElement::new(1, vec![0]).is_err());
    }

    #[test]
    fn orders() {
        assert_eq!(element_order(&GroupElement::identity(4, 3)), 1);
        assert_eq!(element_order(&GroupElement::generator(4, 3, 1).unwrap()), 4);
        assert_eq!(element_order(&el(4, &[2, 0])), 2);
        assert_eq!(element_order(&el(6, &[2, 3])), 6);
    }

    #[test]
    fn span_indices() {
        assert_eq!(Subgroup::span(3, 4, &[]).unwrap().index().unwrap(), 81);
        let gens: Vec<_> = (1..=2)
            .map(|j| GroupElement::generator(2, 4, j).unwrap())
            .collect();
        assert_eq!(Subgroup::span(2, 4, &gens).unwrap().index().unwrap(), 4);
        assert_eq!(Subgroup::full(5, 3).index().unwrap(), 1);
    }

    #[test]
    fn tail_generators_span_has_index_k_pow_n_minus_one() {
        // span{a_{n+1}, ..., a_{L+1}} at level L
        for k in 2..5u32 {
            let level = 4;
            for n in 1..=level {
                let gens: Vec<_> = (n + 1..=level + 1)
                    .map(|j| GroupElement::generator(k, level, j).unwrap())
                    .collect();
                let s = Subgroup::span(k, level, &gens).unwrap();
                assert_eq!(
                    s.index().unwrap(),
                    (k as u128).pow(n as u32 - 1),
                    "k={k} n={n}"
                );
            }
        }
    }

    #[test]
    fn composite_modulus_canonical_form() {
        // <2> in Z_4 and <6> in Z_4 agree; <(2,2),(0,2)> = <(2,0),(0,2)>
        let a = Subgroup::span(4, 1, &[el(4, &[2])]).unwrap();
        let b = Subgroup::span(4, 1, &[el(4, &[2]), el(4, &[2])]).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.index().unwrap(), 2);
        let c = Subgroup::span(4, 2, &[el(4, &[2, 2]), el(4, &[0, 2])]).unwrap();
        let d = Subgroup::span(4, 2, &[el(4, &[2, 0]), el(4, &[0, 2])]).unwrap();
        assert_eq!(c, d);
        assert_eq!(c.order().unwrap(), 4);
        // (1,2) in Z_4^2 generates order 4; its Howell form needs the annihilator row
        let e = Subgroup::span(4, 2, &[el(4, &[1, 2])]).unwrap();
        assert_eq!(e.order().unwrap(), 4);
        assert!(e.contains(&el(4, &[2, 0])).unwrap());
        assert!(!e.contains(&el(4, &[0, 2])).unwrap());
    }

    #[test]
    fn coset_reduction_is_canonical() {
        let s = Subgroup::span(6, 3, &[el(6, &[2, 3, 0]), el(6, &[0, 2, 4])]).unwrap();
        for g in s.elements() {
            let x = el(6, &[1, 5, 2]);
            assert_eq!(
                s.reduce(&x).unwrap(),
                s.reduce(&x.compose(&g).unwrap()).unwrap()
            );
        }
    }

    #[test]
    fn hyperelliptic_kernel_at_n0() {
        let level = 5;
        let theta = TwoGroupCharacter::hyperelliptic(&[], level).unwrap();
        let f = kernel_of_character(&theta).unwrap();
        assert_eq!(f.index().unwrap(), 2);
        let a1 = GroupElement::generator(2, level, 1).unwrap();
        let pairs: Vec<_> = (2..=level + 1)
            .map(|j| {
                GroupElement::generator(2, level, j)
                    .unwrap()
                    .compose(&a1)
                    .unwrap()
            })
            .collect();
        assert_eq!(f, Subgroup::span(2, level, &pairs).unwrap());
        for j in 1..=level + 1 {
            assert!(!f
                .contains(&GroupElement::generator(2, level, j).unwrap())
                .unwrap());
        }
    }

    #[test]
    fn non_surjective_character_is_rejected() {
        let theta = TwoGroupCharacter::new(1, vec![vec![0], vec![0]]).unwrap();
        assert!(matches!(
            theta.kernel(),
            Err(AbelianError::NotSurjective { .. })
        ));
    }

    #[test]
    fn freeness_examples() {
        let fixed: BTreeSet<usize> = [1, 2, 3, 5, 6].into_iter().collect();
        let level = 5;
        let a = |j| GroupElement::generator(3, level, j).unwrap();
        assert!(!acts_freely(&a(1), &fixed).unwrap());
        assert!(acts_freely(&a(4), &fixed).unwrap());
        assert!(acts_freely(&a(1).compose(&a(2)).unwrap(), &fixed).unwrap());
        assert!(!acts_freely(&a(6).pow(2), &fixed).unwrap());
        assert_eq!(
            acts_freely(&GroupElement::identity(3, level), &fixed),
            Err(AbelianError::IdentityFreeness)
        );
    }

    #[test]
    fn prefix_restriction() {
        let level = 5;
        let a = |j| GroupElement::generator(2, level, j).unwrap();
        assert_eq!(
            a(1).restrict_to_prefix(3).unwrap(),
            GroupElement::generator(2, 3, 1).unwrap()
        );
        assert!(a(6).restrict_to_prefix(3).unwrap().is_identity());
        assert!(a(5).restrict_to_prefix(3).unwrap().is_identity());
        assert_eq!(
            a(4).restrict_to_prefix(3).unwrap(),
            GroupElement::generator(2, 3, 4).unwrap()
        );
    }
}
