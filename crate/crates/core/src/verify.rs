//! Seeded invariant suite run by the `verify` command.

use std::collections::BTreeSet;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::abelian::{acts_freely, GroupElement, Subgroup};
use crate::curve::{apply_element, fixed_points, genus_formula, kth_roots, project, CoverSpec};
use crate::ends::{classify, region_component_count, EndsCaps, SurfaceFamily};
use crate::hyperelliptic::{
    enumerate_hyperelliptic_kernels, excludes_fixed_bearing, synth_hyperelliptic, synth_z2m_curve,
    ProductOptions,
};
use crate::monodromy::{
    default_basepoint, euler_genus_oracle, fiber, identify_deck_element, monodromy_representation,
    MonodromyRep,
};
use crate::point::{ExtendedComplex, ProjectivePoint};
use crate::tower::{fiber_product_component_count, truncate, LimitConfiguration, TowerPoint};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifySettings {
    pub seed: u64,
    /// Tolerance for deck identification and point matching.
    pub identification_tol: f64,
    /// Curve residual tolerance for projections.
    pub residual_tol: f64,
    /// Number of constant levels required to call an end count stable.
    pub stabilization_window: usize,
    pub bare_product: bool,
}

impl Default for VerifySettings {
    fn default() -> Self {
        Self {
            seed: 1,
            identification_tol: 1e-6,
            residual_tol: 1e-9,
            stabilization_window: 3,
            bare_product: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InvariantResult {
    pub id: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub passed: bool,
    pub failed: Vec<String>,
    pub results: Vec<InvariantResult>,
}

type Check = fn(&VerifySettings, &mut ChaCha8Rng) -> Result<String, String>;

const CHECKS: &[(&str, Check)] = &[
    ("genus.identity", genus_identity),
    ("monodromy.soundness", monodromy_soundness),
    ("monodromy.identification", identification_precision),
    ("curve.fixed_points", fixed_point_completeness),
    ("curve.fiber_cardinality", fiber_cardinality),
    ("tower.coherence", tower_coherence),
    ("tower.fiber_product", fiber_product_counts),
    ("ends.components", component_counts),
    ("ends.singleton", singleton_ends),
    ("ends.hyperelliptic", hyperelliptic_ends),
    ("hyperelliptic.synthesis", hyperelliptic_synthesis),
    ("hyperelliptic.z2_squared", z2_squared_pattern),
    ("hyperelliptic.kernels", kernel_enumeration),
    ("abelian.freeness", freeness_criterion),
];

/// Identifiers of every invariant in run order.
pub fn invariant_ids() -> Vec<&'static str> {
    CHECKS.iter().map(|(id, _)| *id).collect()
}

/// Runs every invariant, each with its own generator derived from the seed.
pub fn run_verify(settings: &VerifySettings) -> VerifyReport {
    let mut results = Vec::with_capacity(CHECKS.len());
    for (i, (id, check)) in CHECKS.iter().enumerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(
            settings
                .seed
                .wrapping_mul(0x9e37_79b9)
                .wrapping_add(i as u64),
        );
        let (passed, detail) = match check(settings, &mut rng) {
            Ok(d) => (true, d),
            Err(d) => (false, d),
        };
        results.push(InvariantResult {
            id: id.to_string(),
            passed,
            detail,
        });
    }
    let failed: Vec<String> = results
        .iter()
        .filter(|r| !r.passed)
        .map(|r| r.id.clone())
        .collect();
    VerifyReport {
        seed: settings.seed,
        passed: failed.is_empty(),
        failed,
        results,
    }
}

fn fail<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn test_curve(k: u32, n: usize, rng: &mut ChaCha8Rng) -> Result<CoverSpec, String> {
    if n == 2 {
        CoverSpec::classical_fermat(k).map_err(fail)
    } else {
        CoverSpec::random_finite_type(k, n, rng).map_err(fail)
    }
}

fn generic_point(spec: &CoverSpec, rng: &mut ChaCha8Rng) -> Complex64 {
    let special = spec.special_points();
    loop {
        let u = Complex64::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
        if special
            .iter()
            .all(|p| p.as_finite().is_none_or(|z| (z - u).norm() > 0.05))
        {
            return u;
        }
    }
}

fn genus_identity(_: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut cases = 0;
    for k in 2..=5u32 {
        for n in 2..=6usize {
            let spec = test_curve(k, n, rng)?;
            let rep = monodromy_representation(&spec).map_err(fail)?;
            let oracle = euler_genus_oracle(&rep).map_err(fail)?;
            let formula = genus_formula(k, n as u32).map_err(fail)?;
            ensure(oracle == formula, || {
                format!("k={k} n={n}: formula {formula}, oracle {oracle}")
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} (k, n) pairs agree"))
}

fn monodromy_soundness(_: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for trial in 0..20 {
        let k = rng.gen_range(2..=3u32);
        let n = rng.gen_range(3..=5usize);
        let spec = CoverSpec::random_finite_type(k, n, rng).map_err(fail)?;
        let rep = monodromy_representation(&spec).map_err(fail)?;
        for (s, m) in rep.elements.iter().enumerate() {
            let gen = GroupElement::generator(k, rep.level, s + 1).map_err(fail)?;
            let cyclic = Subgroup::span(k, rep.level, &[gen]).map_err(fail)?;
            ensure(cyclic.contains(m).map_err(fail)?, || {
                format!("trial {trial}: loop {s} gives {m}, outside <a_{}>", s + 1)
            })?;
            ensure(m.order() == k, || {
                format!("trial {trial}: loop {s} has order {}", m.order())
            })?;
        }
        ensure(rep.product().is_identity(), || {
            format!("trial {trial}: product of loops is {}", rep.product())
        })?;
    }
    Ok("20 configurations: cyclic membership, order k, trivial product".into())
}

fn identification_precision(
    settings: &VerifySettings,
    rng: &mut ChaCha8Rng,
) -> Result<String, String> {
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let k = rng.gen_range(2..=4u32);
        let spec = CoverSpec::random_finite_type(k, 4, rng).map_err(fail)?;
        let u = generic_point(&spec, rng);
        let p = spec.principal_lift(u).map_err(fail)?;
        let exps: Vec<u32> = (0..spec.group_level())
            .map(|_| rng.gen_range(0..k))
            .collect();
        let g = GroupElement::new(k, exps).map_err(fail)?;
        let q = apply_element(&spec, &g, &p).map_err(fail)?;
        let h = identify_deck_element(&spec, &p, &q).map_err(fail)?;
        ensure(h == g, || format!("identified {h}, expected {g}"))?;
        worst = worst.max(apply_element(&spec, &h, &p).map_err(fail)?.distance(&q));
    }
    ensure(worst <= settings.identification_tol, || {
        format!(
            "identification error {worst:.3e} exceeds {:.1e}",
            settings.identification_tol
        )
    })?;
    Ok(format!(
        "20 random deck elements recovered within {:.1e}",
        settings.identification_tol
    ))
}

/// Every point over a branch value by direct enumeration of the roots in the
/// coordinates of the equations, deduplicated projectively.
fn brute_force_branch_fiber(spec: &CoverSpec, s: usize) -> Result<Vec<ProjectivePoint>, String> {
    let k = spec.k();
    let special = spec.special_points();
    let dim = spec.dimension();
    let mut rows: Vec<Vec<Complex64>> = Vec::new();
    let (prefix, radicands): (Vec<Complex64>, Vec<Complex64>) = match special[s] {
        ExtendedComplex::Infinity => (
            vec![Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
            (2..dim).map(|_| Complex64::new(-1.0, 0.0)).collect(),
        ),
        ExtendedComplex::Finite(u) => {
            let mut r = vec![-u];
            for p in &special[2..] {
                r.push(u - p.as_finite().expect("finite"));
            }
            (vec![Complex64::new(1.0, 0.0)], r)
        }
    };
    rows.push(prefix);
    for r in radicands {
        let roots = if r.norm() < 1e-14 {
            vec![Complex64::new(0.0, 0.0)]
        } else {
            kth_roots(r, k)
        };
        rows = rows
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
    let mut out: Vec<ProjectivePoint> = Vec::new();
    for v in rows {
        let p = ProjectivePoint::new(v).map_err(fail)?;
        if !out.iter().any(|q| q.distance(&p) < 1e-9) {
            out.push(p);
        }
    }
    Ok(out)
}

fn same_set(a: &[ProjectivePoint], b: &[ProjectivePoint], tol: f64) -> bool {
    a.len() == b.len() && a.iter().all(|p| b.iter().any(|q| p.distance(q) < tol))
}

fn fixed_point_completeness(_: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let spec = CoverSpec::random_finite_type(2, 3, rng).map_err(fail)?;
    for j in 1..=spec.dimension() {
        let closed = fixed_points(&spec, j).map_err(fail)?;
        let brute = brute_force_branch_fiber(&spec, j - 1)?;
        ensure(same_set(&closed, &brute, 1e-9), || {
            format!(
                "a_{j}: {} closed-form points, {} by enumeration",
                closed.len(),
                brute.len()
            )
        })?;
    }
    Ok(format!("{} generators at k=2, n=3", spec.dimension()))
}

fn fiber_cardinality(_: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let spec = CoverSpec::random_finite_type(2, 3, rng).map_err(fail)?;
    let expected = 2usize.pow(3);
    for _ in 0..50 {
        let u = generic_point(&spec, rng);
        let pts = fiber(&spec, u).map_err(fail)?;
        let mut distinct: Vec<&ProjectivePoint> = Vec::new();
        for p in &pts {
            if !distinct.iter().any(|q| q.distance(p) < 1e-9) {
                distinct.push(p);
            }
        }
        ensure(distinct.len() == expected, || {
            format!("fiber over {u} has {} points", distinct.len())
        })?;
    }
    Ok(format!("50 generic fibers of size {expected}"))
}

fn tower_coherence(settings: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let top = CoverSpec::random_finite_type(3, 8, rng).map_err(fail)?;
    for _ in 0..50 {
        let u = generic_point(&top, rng);
        let m = rng.gen_range(3..=8usize);
        let spec_m = top.at_level(m).map_err(fail)?;
        let p = TowerPoint::new(&spec_m, spec_m.principal_lift(u).map_err(fail)?).map_err(fail)?;
        let n = rng.gen_range(2..=m);
        let l = rng.gen_range(2..=n);
        let spec_n = top.at_level(n).map_err(fail)?;
        let spec_l = top.at_level(l).map_err(fail)?;
        let pn = truncate(&spec_m, &p, n).map_err(fail)?;
        let direct = truncate(&spec_m, &p, l).map_err(fail)?;
        let composed = truncate(&spec_n, &pn, l).map_err(fail)?;
        ensure(direct.point.distance(&composed.point) < 1e-9, || {
            format!("triangle {m} -> {n} -> {l} fails")
        })?;
        let um = project(&spec_m, &p.point, settings.residual_tol).map_err(fail)?;
        let un = project(&spec_n, &pn.point, settings.residual_tol).map_err(fail)?;
        let ul = project(&spec_l, &composed.point, settings.residual_tol).map_err(fail)?;
        ensure(um.approx_eq(&un, 1e-9) && um.approx_eq(&ul, 1e-9), || {
            format!("projections differ: {um}, {un}, {ul}")
        })?;
    }
    Ok("50 tower points at levels up to 8".into())
}

/// Orbits of the subgroup generated by `gens` acting on `Z_k^L` by translation.
fn orbit_count(k: u32, level: usize, gens: &[GroupElement]) -> usize {
    let size = (k as usize).pow(level as u32);
    let encode = |e: &[u32]| {
        e.iter()
            .rev()
            .fold(0usize, |acc, &x| acc * k as usize + x as usize)
    };
    let mut parent: Vec<usize> = (0..size).collect();
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
    for code in 0..size {
        let mut e = Vec::with_capacity(level);
        let mut c = code;
        for _ in 0..level {
            e.push((c % k as usize) as u32);
            c /= k as usize;
        }
        for g in gens {
            let moved: Vec<u32> = e
                .iter()
                .zip(g.exponents())
                .map(|(a, b)| (a + b) % k)
                .collect();
            let (ra, rb) = (find(&mut parent, code), find(&mut parent, encode(&moved)));
            parent[ra] = rb;
        }
    }
    (0..size).filter(|&x| find(&mut parent, x) == x).count()
}

fn component_counts(_: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let spec = CoverSpec::random_finite_type(2, 4, rng).map_err(fail)?;
    let rep = MonodromyRep::standard(&spec, default_basepoint(&spec));
    let mut regions = 0;
    for mask in 1u32..(1 << rep.len()) {
        let region: BTreeSet<usize> = (0..rep.len()).filter(|i| mask >> i & 1 == 1).collect();
        let gens: Vec<GroupElement> = region.iter().map(|&i| rep.elements[i].clone()).collect();
        let count = region_component_count(&rep, &region).map_err(fail)?;
        let oracle = orbit_count(2, rep.level, &gens);
        ensure(count as usize == oracle, || {
            format!("region {region:?}: {count} vs orbit count {oracle}")
        })?;
        if region.len() == 1 {
            ensure(count == 2u128.pow(rep.level as u32 - 1), || {
                format!("single branch point gives {count}")
            })?;
        }
        regions += 1;
    }
    Ok(format!("{regions} regions at k=2, level 4"))
}

fn fiber_product_counts(_: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut cases = 0;
    for level in 3..=4usize {
        for _ in 0..3 {
            let spec = CoverSpec::random_finite_type(2, level, rng).map_err(fail)?;
            let rep1 = MonodromyRep::standard(&spec, default_basepoint(&spec));
            let mut rep2 = rep1.clone();
            rep2.level = 2;
            rep2.elements = (0..rep1.len())
                .map(|_| GroupElement::new(2, vec![rng.gen_range(0..2), rng.gen_range(0..2)]))
                .collect::<Result<_, _>>()
                .map_err(fail)?;
            let last = rep2.product();
            let n = rep2.elements.len();
            rep2.elements[n - 1] = rep2.elements[n - 1]
                .compose(&last.inverse())
                .map_err(fail)?;
            let report = fiber_product_component_count(&rep1, &rep2).map_err(fail)?;
            let oracle = orbit_count(2, report.joint.level, &report.joint.elements);
            ensure(report.components as usize == oracle, || {
                format!(
                    "level {level}: {} components vs orbit count {oracle}",
                    report.components
                )
            })?;
            cases += 1;
        }
    }
    Ok(format!("{cases} fiber products at k=2"))
}

fn caps(settings: &VerifySettings) -> EndsCaps {
    EndsCaps {
        window: settings.stabilization_window,
        ..EndsCaps::default()
    }
}

fn singleton_ends(settings: &VerifySettings, _: &mut ChaCha8Rng) -> Result<String, String> {
    let family = SurfaceFamily::Fermat {
        k: 2,
        config: LimitConfiguration::new(vec![Complex64::new(2.0, 1.0)], 8),
        deleted: vec![],
    };
    for depth in 4..=8 {
        let (triple, report) = classify(&family, depth, caps(settings)).map_err(fail)?;
        ensure(
            report.stabilized && triple.ends == 1 && triple.is_loch_ness_monster(),
            || format!("depth {depth}: {triple:?}"),
        )?;
    }
    Ok("one end of infinite genus at depths 4 to 8".into())
}

fn spread_limit_points(count: usize) -> Vec<Complex64> {
    (0..count)
        .map(|j| Complex64::from_polar(2.0 + 0.7 * j as f64, 0.4 + 1.9 * j as f64))
        .collect()
}

fn hyperelliptic_ends(settings: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<String, String> {
    for count in 1..=4usize {
        let bits: Vec<u8> = (1..count).map(|_| rng.gen_range(0..2)).collect();
        let family = SurfaceFamily::Hyperelliptic {
            config: LimitConfiguration::new(spread_limit_points(count), 8),
            bits,
        };
        let (triple, report) = classify(&family, 5, caps(settings)).map_err(fail)?;
        ensure(report.stabilized && triple.ends == count, || {
            format!("{count} limit points: {triple:?}")
        })?;
    }
    Ok("1 to 4 limit points give as many ends".into())
}

fn hyperelliptic_synthesis(
    settings: &VerifySettings,
    _: &mut ChaCha8Rng,
) -> Result<String, String> {
    let cfg = LimitConfiguration::new(vec![Complex64::new(2.0, 0.0)], 8);
    let opts = ProductOptions {
        exponent: None,
        bare: settings.bare_product,
    };
    let model = synth_hyperelliptic(&cfg, &[], opts).map_err(fail)?;
    let v = model.validate(settings.seed).map_err(fail)?;
    ensure(v.passed(), || format!("{v:?}"))?;
    Ok(format!(
        "zero fidelity {:.1e}, grid minimum {:.1e}, doubling {:.1e} <= {:.1e}",
        v.zero_fidelity, v.grid_min_modulus, v.doubling_change, v.doubling_bound
    ))
}

fn z2_squared_pattern(settings: &VerifySettings, _: &mut ChaCha8Rng) -> Result<String, String> {
    let cfg = LimitConfiguration::new(vec![Complex64::new(2.0, 0.0)], 9);
    let model = synth_hyperelliptic(&cfg, &[], ProductOptions::default()).map_err(fail)?;
    let zeros = model.images.clone();
    let parts: [Vec<usize>; 3] = [0, 1, 2].map(|r| (r..zeros.len()).step_by(3).collect());
    let z2 = synth_z2m_curve(
        &zeros,
        [&parts[0], &parts[1], &parts[2]],
        ProductOptions {
            exponent: None,
            bare: settings.bare_product,
        },
    )
    .map_err(fail)?;
    let expected = [(true, false), (false, true), (true, true)];
    for (r, part) in parts.iter().enumerate() {
        for &i in part {
            ensure(z2.vanishing(i) == expected[r], || {
                format!("zero {i} in part {}: {:?}", r + 1, z2.vanishing(i))
            })?;
        }
    }
    Ok(format!(
        "{} zeros follow the fixed-locus pattern",
        zeros.len()
    ))
}

fn kernel_enumeration(_: &VerifySettings, _: &mut ChaCha8Rng) -> Result<String, String> {
    for n in 0..=4usize {
        let level = n + 6;
        let kernels = enumerate_hyperelliptic_kernels(n, level).map_err(fail)?;
        ensure(kernels.len() == 1 << n, || {
            format!("N={n}: {} kernels", kernels.len())
        })?;
        let forms: BTreeSet<Vec<Vec<u32>>> = kernels
            .iter()
            .map(|(_, k)| k.canonical_form().to_vec())
            .collect();
        ensure(forms.len() == kernels.len(), || {
            format!("N={n}: repeated kernels")
        })?;
        for (bits, k) in &kernels {
            ensure(k.index().map_err(fail)? == 2, || {
                format!("bits {bits:?}: index is not 2")
            })?;
            ensure(excludes_fixed_bearing(k, n).map_err(fail)?, || {
                format!("bits {bits:?}: contains a torsion generator")
            })?;
        }
    }
    Ok("2^N distinct index-2 kernels for N <= 4".into())
}

fn freeness_criterion(_: &VerifySettings, rng: &mut ChaCha8Rng) -> Result<String, String> {
    let mut checked = 0;
    for k in [2u32, 3] {
        let spec = CoverSpec::random_finite_type(k, 4, rng).map_err(fail)?;
        let rep = monodromy_representation(&spec).map_err(fail)?;
        let stabilizers: Vec<Subgroup> = rep
            .elements
            .iter()
            .map(|m| Subgroup::span(k, rep.level, std::slice::from_ref(m)))
            .collect::<Result<_, _>>()
            .map_err(fail)?;
        let fixed = spec.fixed_bearing_indices();
        let elements: Vec<GroupElement> = if k == 2 {
            Subgroup::full(k, rep.level).elements()
        } else {
            (0..200)
                .map(|_| {
                    GroupElement::new(k, (0..rep.level).map(|_| rng.gen_range(0..k)).collect())
                })
                .collect::<Result<_, _>>()
                .map_err(fail)?
        };
        for g in elements.iter().filter(|g| !g.is_identity()) {
            let mut has_fixed = false;
            for s in &stabilizers {
                has_fixed |= s.contains(g).map_err(fail)?;
            }
            let free = acts_freely(g, &fixed).map_err(fail)?;
            ensure(free != has_fixed, || {
                format!("{g}: criterion says free={free}, stabilizers disagree")
            })?;
            checked += 1;
        }
    }
    Ok(format!("{checked} elements of Z_2^4 and Z_3^4"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn orbit_count_of_full_and_trivial() {
        let a = GroupElement::generator(2, 3, 1).unwrap();
        assert_eq!(orbit_count(2, 3, &[]), 8);
        assert_eq!(orbit_count(2, 3, &[a]), 4);
    }

    #[test]
    fn ids_are_unique() {
        let ids = invariant_ids();
        let set: BTreeSet<_> = ids.iter().collect();
        assert_eq!(set.len(), ids.len());
    }

    #[test]
    fn default_suite_passes() {
        let report = run_verify(&VerifySettings::default());
        for r in &report.results {
            assert!(r.passed, "{}: {}", r.id, r.detail);
        }
    }
}
