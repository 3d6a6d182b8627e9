//! The verification driver: every invariant suite, run over a parameter range,
//! each check reported with pass/fail, a witness on failure, and its wall time.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::atlas::{build_atlas, in_closure, strata_keys, AtlasOptions};
use crate::error::{rejected, Result};
use crate::field::{Element, FieldCtx};
use crate::group::{
    act, enumerate_pgl, fixpoint_witness, normal_p_core, prepare, stabilizer_bruteforce, stabilizer_predicted,
    unipotent_elements, unipotent_radical_k, GroupElement, PreparedElement,
};
use crate::linalg::{complement, enumerate_subspaces, flag_leq, gaussian_binomial, Subspace, Vector};
use crate::points::{
    b_check, b_classify, b_enumerate, b_from_omega, classify, enumerate, omega_p_points, p_classify, p_enumerate,
    pi_map, q_check, q_classify, q_enumerate, q_from_omega, rho_map, stratum_flag, twist_span_dim,
    Point, QPoint, StratumKey, Variety,
};
use crate::space::Space;

pub const SUITES: &[&str] = &[
    "field",
    "linalg",
    "partition",
    "q-bruteforce",
    "incidence",
    "maps",
    "twist",
    "actions",
    "closure",
    "stabilizer",
    "corollary",
    "corollary-op",
    "spot",
];

#[derive(Clone, Debug)]
pub struct VerifyConfig {
    pub p: u32,
    pub e: u32,
    pub n_plus_1: Vec<usize>,
    pub ms: Vec<u32>,
    /// `None` runs every suite
    pub suites: Option<Vec<String>>,
    pub seed: u64,
    pub perturbations: usize,
    pub jobs: Option<usize>,
    /// a B-point JSON file checked by the `fixture` suite
    pub fixture: Option<PathBuf>,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        VerifyConfig {
            p: 2,
            e: 1,
            n_plus_1: vec![2, 3],
            ms: vec![1, 2],
            suites: None,
            seed: 0,
            perturbations: 1000,
            jobs: None,
            fixture: None,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckResult {
    pub suite: String,
    pub name: String,
    pub passed: bool,
    pub witness: Option<String>,
    pub seconds: f64,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Report {
    pub checks: Vec<CheckResult>,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &CheckResult> {
        self.checks.iter().filter(|c| !c.passed)
    }

    pub fn render_text(&self) -> String {
        let mut out = String::new();
        for c in &self.checks {
            let status = if c.passed { "PASS" } else { "FAIL" };
            out.push_str(&format!("{status}  {:<13} {:<64} {:>8.3}s\n", c.suite, c.name, c.seconds));
            if let Some(w) = &c.witness {
                out.push_str(&format!("      witness: {w}\n"));
            }
        }
        let failed = self.failures().count();
        out.push_str(&format!("{} checks, {} passed, {} failed\n", self.checks.len(), self.checks.len() - failed, failed));
        out
    }
}

/// Outcome of one check: `Ok(())` or a witness.
pub type Outcome = std::result::Result<(), String>;

fn ensure(cond: bool, witness: impl FnOnce() -> String) -> Outcome {
    if cond {
        Ok(())
    } else {
        Err(witness())
    }
}

// ---------------------------------------------------------------------------
// closed formulas

/// `|Ω_d(F_(q^m))| = prod_(i<d) (q^m - q^i) / (q^m - 1)`.
pub fn omega_count(q: u64, d: u32, m: u32) -> u128 {
    if d == 0 {
        return 0;
    }
    let qm = (q as u128).pow(m);
    let prod: u128 = (0..d).map(|i| qm.saturating_sub((q as u128).pow(i))).product();
    prod / (qm - 1)
}

/// `|P^n(F_(q^m))|`.
pub fn p_total(q: u64, n_plus_1: u32, m: u32) -> u128 {
    let qm = (q as u128).pow(m);
    (qm.pow(n_plus_1) - 1) / (qm - 1)
}

/// `sum_(V' != 0) |Ω_(V')(k_m)|`, grouped by dimension with Gaussian binomials.
pub fn q_total(q: u64, n_plus_1: u32, m: u32) -> u128 {
    (1..=n_plus_1).map(|d| gaussian_binomial(n_plus_1, d, q) * omega_count(q, d, m)).sum()
}

/// `sum_F prod_i |Ω_(V_(i-1)/V_i)(k_m)|` over the flags of the space.
pub fn b_total(space: &Space, m: u32) -> u128 {
    space.flags().iter().map(|f| b_stratum_count(space.q(), &f.chain(), m)).sum()
}

pub fn b_stratum_count(q: u64, chain: &[Subspace], m: u32) -> u128 {
    chain.windows(2).map(|w| omega_count(q, (w[0].dim() - w[1].dim()) as u32, m)).product()
}

// ---------------------------------------------------------------------------
// shared per-configuration data

struct Ctx {
    space: Space,
    m: u32,
}

impl Ctx {
    fn name(&self) -> String {
        format!("q={} n+1={} m={}", self.space.q(), self.space.dim(), self.m)
    }
}

struct Runner<'a> {
    cfg: &'a VerifyConfig,
    report: Report,
    groups: HashMap<usize, (Vec<GroupElement>, Vec<PreparedElement>)>,
    /// stabilizers computed by the `stabilizer` suite, reused by the corollary
    stabs: HashMap<(usize, u32, Variety), Vec<(Point, Vec<GroupElement>)>>,
}

impl<'a> Runner<'a> {
    fn check(&mut self, suite: &str, name: String, f: impl FnOnce() -> Outcome) {
        let t = Instant::now();
        let out = f();
        self.report.checks.push(CheckResult {
            suite: suite.to_string(),
            name,
            passed: out.is_ok(),
            witness: out.err(),
            seconds: t.elapsed().as_secs_f64(),
        });
    }

    fn contexts(&self) -> Result<Vec<Ctx>> {
        let mut out = Vec::new();
        for &n in &self.cfg.n_plus_1 {
            for &m in &self.cfg.ms {
                out.push(Ctx { space: Space::new(self.cfg.p, self.cfg.e, n, &[m])?, m });
            }
        }
        Ok(out)
    }
}

fn group_for<'r>(
    groups: &'r mut HashMap<usize, (Vec<GroupElement>, Vec<PreparedElement>)>,
    space: &Space,
) -> &'r (Vec<GroupElement>, Vec<PreparedElement>) {
    // the group depends only on k and n+1, but prepared tables need this space's
    // field, so they are rebuilt whenever the ambient field changes
    let key = space.dim() * 1000 + space.field().degree();
    groups.entry(key).or_insert_with(|| {
        let g = enumerate_pgl(space).expect("checked in config validation");
        let pg = prepare(space, &g);
        (g, pg)
    })
}

/// Runs the selected suites. Configuration problems are returned as errors;
/// failed checks are report content.
pub fn verify_all(cfg: &VerifyConfig) -> Result<Report> {
    let selected: Vec<String> = match &cfg.suites {
        Some(s) => s.clone(),
        None => {
            let mut all: Vec<String> = SUITES.iter().map(|s| s.to_string()).collect();
            if cfg.fixture.is_some() {
                all.push("fixture".into());
            }
            all
        }
    };
    for s in &selected {
        if !SUITES.contains(&s.as_str()) && s != "fixture" {
            return rejected(format!("unknown suite {s:?}"));
        }
    }
    if selected.iter().any(|s| s == "fixture") && cfg.fixture.is_none() {
        return rejected("the fixture suite needs --fixture");
    }
    if (cfg.n_plus_1.is_empty() || cfg.ms.is_empty())
        && !selected.is_empty() {
            return rejected("empty parameter range");
        }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs.unwrap_or(0))
        .build()
        .map_err(|err| crate::Error::Rejected(format!("thread pool: {err}")))?;
    pool.install(|| {
        let mut r = Runner { cfg, report: Report::default(), groups: HashMap::new(), stabs: HashMap::new() };
        let ctxs = if selected.is_empty() { Vec::new() } else { r.contexts()? };
        let needs_group = selected.iter().any(|s| matches!(s.as_str(), "actions" | "stabilizer" | "corollary" | "corollary-op"));
        if needs_group {
            for c in &ctxs {
                enumerate_pgl(&c.space)?;
            }
        }
        for s in &selected {
            match s.as_str() {
                "field" => suite_field(&mut r, &ctxs),
                "linalg" => suite_linalg(&mut r, &ctxs),
                "partition" => suite_partition(&mut r, &ctxs),
                "q-bruteforce" => suite_q_bruteforce(&mut r, &ctxs),
                "incidence" => suite_incidence(&mut r, &ctxs),
                "maps" => suite_maps(&mut r, &ctxs),
                "twist" => suite_twist(&mut r, &ctxs),
                "actions" => suite_actions(&mut r, &ctxs),
                "closure" => suite_closure(&mut r, &ctxs),
                "stabilizer" => suite_stabilizer(&mut r, &ctxs),
                "corollary" => suite_corollary(&mut r, &ctxs, false),
                "corollary-op" => suite_corollary(&mut r, &ctxs, true),
                "spot" => suite_spot(&mut r),
                "fixture" => suite_fixture(&mut r),
                _ => unreachable!(),
            }
        }
        Ok(r.report)
    })
}

// ---------------------------------------------------------------------------
// suites

fn suite_field(r: &mut Runner, ctxs: &[Ctx]) {
    for c in ctxs {
        let f = c.space.field();
        if f.order().is_none_or(|o| o > 1 << 12) {
            continue;
        }
        r.check("field", format!("ring axioms and Frobenius {}", c.name()), || field_axioms(f));
        r.check("field", format!("subfield sizes {}", c.name()), || {
            for d in (1..=f.relative_degree()).filter(|d| f.relative_degree() % d == 0) {
                let count = f.all_elements().into_iter().filter(|&a| f.in_subfield(a, d)).count() as u64;
                ensure(count == c.space.q().pow(d), || format!("|k_{d}| = {count}"))?;
            }
            Ok(())
        });
    }
}

/// Exhaustive ring axioms on pairs, Frobenius additivity and multiplicativity.
pub fn field_axioms(f: &FieldCtx) -> Outcome {
    let all = f.all_elements();
    for &a in &all {
        if !a.is_zero() {
            let inv = f.inv(a).ok_or_else(|| format!("{a} has no inverse"))?;
            ensure(f.mul(a, inv).is_one(), || format!("{a} * {inv} != 1"))?;
        }
        for &b in &all {
            ensure(f.add(a, b) == f.add(b, a) && f.mul(a, b) == f.mul(b, a), || format!("commutativity at {a}, {b}"))?;
            ensure(f.frobenius(f.add(a, b)) == f.add(f.frobenius(a), f.frobenius(b)), || format!("F(a+b) at {a}, {b}"))?;
            ensure(f.frobenius(f.mul(a, b)) == f.mul(f.frobenius(a), f.frobenius(b)), || format!("F(ab) at {a}, {b}"))?;
        }
    }
    Ok(())
}

fn suite_linalg(r: &mut Runner, ctxs: &[Ctx]) {
    let mut seen = BTreeSet::new();
    for c in ctxs {
        if !seen.insert(c.space.dim()) {
            continue;
        }
        let s = &c.space;
        r.check("linalg", format!("Gaussian binomial counts q={} n+1={}", s.q(), s.dim()), || {
            for d in 0..=s.dim() {
                let got = enumerate_subspaces(s.field(), s.k_elements(), s.dim(), d).map_err(|e| e.to_string())?.len() as u128;
                let want = gaussian_binomial(s.dim() as u32, d as u32, s.q());
                ensure(got == want, || format!("d={d}: {got} != {want}"))?;
            }
            Ok(())
        });
        r.check("linalg", format!("complements q={} n+1={}", s.q(), s.dim()), || complements_ok(s));
        let seed = r.cfg.seed;
        r.check("linalg", format!("canonical form uniqueness q={} n+1={}", s.q(), s.dim()), || canonical_uniqueness(s, seed, 1000));
        r.check("linalg", format!("rational kernels q={} n+1={}", s.q(), s.dim()), || {
            let f = s.field();
            for x in p_enumerate(s, c.m).map_err(|e| e.to_string())? {
                let k = p_classify(s, &x);
                for v in s.nonzero_vectors() {
                    let zero = x.functional().eval(f, v).is_zero();
                    ensure(zero == k.contains(f, v), || format!("l={:?} v={v:?}", x.coords()))?;
                }
            }
            Ok(())
        });
    }
}

pub fn complements_ok(s: &Space) -> Outcome {
    let f = s.field();
    let all = s.all_subspaces();
    for w in &all {
        for v in all.iter().filter(|v| v.is_subspace_of(f, w)) {
            let c = complement(f, v, w).map_err(|e| e.to_string())?;
            let mut rows: Vec<Vector> = v.rows().to_vec();
            rows.extend(c.rows().iter().cloned());
            let sum = Subspace::span(f, s.dim(), &rows).map_err(|e| e.to_string())?;
            ensure(&sum == w && v.dim() + c.dim() == w.dim(), || format!("V'={} W={} C={}", v.key(), w.key(), c.key()))?;
        }
    }
    Ok(())
}

/// Random spanning sets of random subspaces must reduce to the same rows.
pub fn canonical_uniqueness(s: &Space, seed: u64, trials: usize) -> Outcome {
    let f = s.field();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subs = s.all_subspaces();
    let k = s.k_elements();
    for _ in 0..trials {
        let w = &subs[rng.gen_range(0..subs.len())];
        let extra = rng.gen_range(0..3);
        let gens: Vec<Vector> = (0..w.dim() + extra)
            .map(|_| {
                let c: Vector = (0..w.dim()).map(|_| k[rng.gen_range(0..k.len())]).collect();
                w.combine(f, &c)
            })
            .collect();
        let span = Subspace::span(f, s.dim(), &gens).map_err(|e| e.to_string())?;
        if span.dim() == w.dim() {
            ensure(&span == w, || format!("{} re-reduced to {}", w.key(), span.key()))?;
        } else {
            ensure(span.is_subspace_of(f, w), || format!("span escaped {}", w.key()))?;
        }
    }
    Ok(())
}

fn suite_partition(r: &mut Runner, ctxs: &[Ctx]) {
    for c in ctxs {
        for v in [Variety::P, Variety::Q, Variety::B] {
            r.check("partition", format!("{v} totals {}", c.name()), || partition_check(&c.space, v, c.m));
        }
    }
}

/// Classifies every point and compares stratum and total counts with the
/// closed formulas.
pub fn partition_check(space: &Space, variety: Variety, m: u32) -> Outcome {
    let q = space.q();
    let n = space.dim() as u32;
    let pts = enumerate(space, variety, m).map_err(|e| e.to_string())?;
    let distinct: HashSet<&Point> = pts.iter().collect();
    ensure(distinct.len() == pts.len(), || "enumeration produced duplicates".into())?;
    let keys: Vec<StratumKey> = pts.par_iter().map(|x| classify(space, x)).collect::<Result<_>>().map_err(|e| e.to_string())?;
    let mut counts: HashMap<StratumKey, u128> = HashMap::new();
    for k in keys {
        *counts.entry(k).or_default() += 1;
    }
    let total = pts.len() as u128;
    let want_total = match variety {
        Variety::P => p_total(q, n, m),
        Variety::Q => q_total(q, n, m),
        Variety::B => b_total(space, m),
    };
    ensure(total == want_total, || format!("total {total} != {want_total}"))?;
    for key in strata_keys(space, variety) {
        let got = counts.remove(&key).unwrap_or(0);
        let want = match &key {
            StratumKey::Subspace(s) if variety == Variety::P => omega_count(q, n - s.dim() as u32, m),
            StratumKey::Subspace(s) => omega_count(q, s.dim() as u32, m),
            StratumKey::Flag(f) => b_stratum_count(q, &f.chain(), m),
        };
        ensure(got == want, || format!("stratum {}: {got} != {want}", key.key()))?;
    }
    ensure(counts.is_empty(), || format!("points in unknown strata: {:?}", counts.keys().map(|k| k.key()).collect::<Vec<_>>()))
}

fn suite_q_bruteforce(r: &mut Runner, ctxs: &[Ctx]) {
    for c in ctxs.iter().filter(|c| c.space.dim() == 2) {
        r.check("q-bruteforce", format!("all reciprocal tables {}", c.name()), || {
            let brute = q_bruteforce(&c.space, c.m).map_err(|e| e.to_string())?;
            let built: BTreeSet<QPoint> = q_enumerate(&c.space, c.m).map_err(|e| e.to_string())?.into_iter().collect();
            ensure(brute == built, || format!("brute force {} points, construction {}", brute.len(), built.len()))?;
            for x in &brute {
                q_classify(&c.space, x).map_err(|e| e.to_string())?;
            }
            Ok(())
        });
    }
}

/// Every table `V \ {0} -> k_m` passing both axioms, normalized. Tables are
/// enumerated outright when that is small; otherwise only tables already
/// satisfying axiom (i) are generated, from free values on the normalized
/// vectors.
pub fn q_bruteforce(space: &Space, m: u32) -> Result<BTreeSet<QPoint>> {
    let f = space.field();
    let km = space.extension_elements(m)?;
    let vs = space.nonzero_vectors();
    let full = (km.len() as f64).powi(vs.len() as i32) <= 2e6;
    // positions carrying a free value, and for the rest (position, free slot, λ)
    let mut free: Vec<usize> = Vec::new();
    let mut derived: Vec<(usize, usize, Element)> = Vec::new();
    for (i, v) in vs.iter().enumerate() {
        let lead = *v.iter().find(|x| !x.is_zero()).unwrap();
        if full || lead.is_one() {
            free.push(i);
        } else {
            let inv = f.inv(lead).unwrap();
            let rep: Vector = v.iter().map(|&x| f.mul(x, inv)).collect();
            let j = space.vector_index(&rep).unwrap() - 1;
            derived.push((i, j, lead));
        }
    }
    let slot: HashMap<usize, usize> = free.iter().enumerate().map(|(s, &i)| (i, s)).collect();
    let mut digits = vec![0u32; free.len()];
    let mut out = BTreeSet::new();
    let mut table = vec![Element::ZERO; vs.len()];
    loop {
        for (s, &i) in free.iter().enumerate() {
            table[i] = km[digits[s] as usize];
        }
        for &(i, j, lead) in &derived {
            // r(λ v) = λ^-1 r(v)
            table[i] = f.mul(f.inv(lead).unwrap(), table[free[slot[&j]]]);
        }
        if q_check(space, &table).is_ok() {
            out.insert(QPoint::new(space, table.clone())?);
        }
        if !crate::field::odometer(&mut digits, km.len() as u32) {
            break;
        }
    }
    Ok(out)
}

fn suite_incidence(r: &mut Runner, ctxs: &[Ctx]) {
    let (seed, count) = (r.cfg.seed, r.cfg.perturbations);
    for c in ctxs {
        let s = &c.space;
        r.check("incidence", format!("minor test = proportionality test {}", c.name()), || incidence_agreement(s, c.m, seed, count));
        r.check("incidence", format!("flag data roundtrip {}", c.name()), || {
            let pts = b_enumerate(s, c.m).map_err(|e| e.to_string())?;
            let distinct: HashSet<_> = pts.iter().collect();
            ensure(distinct.len() == pts.len(), || "flag data map is not injective".into())?;
            Ok(())
        });
    }
}

/// Runs both incidence tests on every constructed point and on `count` seeded
/// random perturbations; returns the number of perturbations that broke the
/// relations on success.
pub fn incidence_agreement(s: &Space, m: u32, seed: u64, count: usize) -> Outcome {
    incidence_agreement_stats(s, m, seed, count).map(|_| ())
}

pub fn incidence_agreement_stats(s: &Space, m: u32, seed: u64, count: usize) -> std::result::Result<usize, String> {
    let f = s.field();
    let pts = b_enumerate(s, m).map_err(|e| e.to_string())?;
    let agree = |fam: &[Vector]| -> std::result::Result<bool, String> {
        let c = b_check(s, fam).map_err(|e| e.to_string())?;
        ensure(c.minors.is_some() == c.proportional.is_some(), || format!("tests disagree: {c:?}"))?;
        Ok(c.minors.is_none())
    };
    for x in &pts {
        ensure(agree(&x.raw_family())?, || format!("constructed point fails: {x:?}"))?;
    }
    if pts.is_empty() {
        return Ok(0);
    }
    let km = s.extension_elements(m).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((s.dim() as u64) << 32) ^ m as u64);
    let mut broken = 0;
    for _ in 0..count {
        let mut fam = pts[rng.gen_range(0..pts.len())].raw_family();
        let edits = rng.gen_range(1..=2);
        for _ in 0..edits {
            let i = rng.gen_range(0..fam.len());
            if rng.gen_bool(0.25) {
                // rescaling keeps the relations
                let c = km[rng.gen_range(1..km.len())];
                fam[i] = fam[i].iter().map(|&x| f.mul(c, x)).collect();
            } else {
                loop {
                    let v: Vector = (0..fam[i].len()).map(|_| km[rng.gen_range(0..km.len())]).collect();
                    if v.iter().any(|x| !x.is_zero()) {
                        fam[i] = v;
                        break;
                    }
                }
            }
        }
        if !agree(&fam)? {
            broken += 1;
        }
    }
    Ok(broken)
}

fn suite_maps(r: &mut Runner, ctxs: &[Ctx]) {
    for c in ctxs {
        r.check("maps", format!("pi and rho on Ω {}", c.name()), || maps_on_omega(&c.space, c.m));
        r.check("maps", format!("pi and rho land in the stated strata {}", c.name()), || maps_strata(&c.space, c.m));
    }
}

pub fn maps_on_omega(s: &Space, m: u32) -> Outcome {
    for l in omega_p_points(s, m).map_err(|e| e.to_string())? {
        let b = b_from_omega(s, &l).map_err(|e| e.to_string())?;
        ensure(pi_map(s, &b) == l, || format!("pi(embed(l)) != l for {:?}", l.coords()))?;
        let via_b = rho_map(s, &b).map_err(|e| e.to_string())?;
        let direct = q_from_omega(s, &l).map_err(|e| e.to_string())?;
        ensure(via_b == direct, || format!("rho(embed(l)) != 1/l for {:?}", l.coords()))?;
        ensure(b_classify(s, &b).map_err(|e| e.to_string())?.is_trivial(), || "Ω-embedding off the open stratum".into())?;
    }
    Ok(())
}

pub fn maps_strata(s: &Space, m: u32) -> Outcome {
    for b in b_enumerate(s, m).map_err(|e| e.to_string())? {
        let flag = b_classify(s, &b).map_err(|e| e.to_string())?;
        let v0 = flag.largest();
        ensure(p_classify(s, &pi_map(s, &b)) == v0, || format!("pi lands outside P_(V/V_0) for {}", flag.key()))?;
        let rho = rho_map(s, &b).map_err(|e| e.to_string())?;
        ensure(q_classify(s, &rho).map_err(|e| e.to_string())? == flag.smallest(), || {
            format!("rho lands outside Q_(V_r) for {}", flag.key())
        })?;
    }
    Ok(())
}

fn suite_twist(r: &mut Runner, ctxs: &[Ctx]) {
    for c in ctxs {
        r.check("twist", format!("span of twists {}", c.name()), || twist_check(&c.space, c.m));
    }
}

pub fn twist_check(s: &Space, m: u32) -> Outcome {
    for x in p_enumerate(s, m).map_err(|e| e.to_string())? {
        let got = twist_span_dim(s.field(), &x);
        let want = s.dim() - p_classify(s, &x).dim();
        ensure(got == want, || format!("l={:?}: twist span {got}, expected {want}", x.coords()))?;
    }
    Ok(())
}

fn suite_actions(r: &mut Runner, ctxs: &[Ctx]) {
    for c in ctxs {
        let (group, prepared) = group_for(&mut r.groups, &c.space).clone();
        let s = &c.space;
        if s.dim() == 2 {
            r.check("actions", format!("right action laws {}", c.name()), || action_laws(s, c.m, &group, &prepared));
        }
        r.check("actions", format!("strata move by g^-1 {}", c.name()), || strata_equivariance(s, c.m, &prepared));
        r.check("actions", format!("l -> 1/l is equivariant {}", c.name()), || q_equivariance(s, c.m, &prepared));
    }
}

pub fn action_laws(s: &Space, m: u32, group: &[GroupElement], prepared: &[PreparedElement]) -> Outcome {
    let f = s.field();
    let id = GroupElement::identity(s.dim());
    for v in [Variety::P, Variety::Q, Variety::B] {
        for x in enumerate(s, v, m).map_err(|e| e.to_string())? {
            ensure(act(s, &x, &id) == x, || format!("x·1 != x for {x:?}"))?;
            for (g, pg) in group.iter().zip(prepared) {
                let xg = pg.act(s, &x);
                for (h, ph) in group.iter().zip(prepared) {
                    let lhs = ph.act(s, &xg);
                    let rhs = act(s, &x, &g.mul(f, h));
                    ensure(lhs == rhs, || format!("(x·g)·h != x·(gh) for x={x:?} g={g:?} h={h:?}"))?;
                }
            }
        }
    }
    Ok(())
}

pub fn strata_equivariance(s: &Space, m: u32, prepared: &[PreparedElement]) -> Outcome {
    let f = s.field();
    for v in [Variety::P, Variety::Q, Variety::B] {
        let pts = enumerate(s, v, m).map_err(|e| e.to_string())?;
        let res: Outcome = pts.par_iter().try_for_each(|x| {
            let fx = stratum_flag(s, x).map_err(|e| e.to_string())?;
            for pg in prepared {
                let ginv = pg.g.inverse(f);
                let moved: Vec<Subspace> = fx.members().iter().map(|w| ginv.image(f, w)).collect();
                let fxg = stratum_flag(s, &pg.act(s, x)).map_err(|e| e.to_string())?;
                let mut got = fxg.members().to_vec();
                let mut want = moved;
                got.sort();
                want.sort();
                ensure(got == want, || format!("stratum of x·g is not g^-1(stratum of x) for x={x:?} g={:?}", pg.g))?;
            }
            Ok(())
        });
        res?;
    }
    Ok(())
}

pub fn q_equivariance(s: &Space, m: u32, prepared: &[PreparedElement]) -> Outcome {
    for l in omega_p_points(s, m).map_err(|e| e.to_string())? {
        let r = Point::Q(q_from_omega(s, &l).map_err(|e| e.to_string())?);
        for pg in prepared {
            let lhs = pg.act(s, &r);
            let Point::P(lg) = pg.act(s, &Point::P(l.clone())) else { unreachable!() };
            let rhs = Point::Q(q_from_omega(s, &lg).map_err(|e| e.to_string())?);
            ensure(lhs == rhs, || format!("(1/l)·g != 1/(l·g) for l={:?} g={:?}", l.coords(), pg.g))?;
        }
    }
    Ok(())
}

fn suite_closure(r: &mut Runner, ctxs: &[Ctx]) {
    let mut seen = BTreeSet::new();
    for c in ctxs {
        if !seen.insert(c.space.dim()) {
            continue;
        }
        let (p, e, n) = (r.cfg.p, r.cfg.e, c.space.dim());
        r.check("closure", format!("closure orders are partial orders q={} n+1={n}", c.space.q()), || {
            for v in [Variety::P, Variety::Q, Variety::B] {
                let keys = strata_keys(&c.space, v);
                partial_order(&keys, |a, b| in_closure(&c.space, v, a, b)).map_err(|w| format!("{v}: {w}"))?;
            }
            Ok(())
        });
        r.check("closure", format!("P/Q/B duality q={} n+1={n}", c.space.q()), || duality(&c.space));
        r.check("closure", format!("atlas edges and counts q={} n+1={n}", c.space.q()), || {
            let ms = r.cfg.ms.clone();
            for v in [Variety::P, Variety::Q, Variety::B] {
                let atlas = build_atlas(v, p, e, n, &ms, &AtlasOptions::default()).map_err(|e| e.to_string())?;
                let space = Space::new(p, e, n, &ms).map_err(|e| e.to_string())?;
                for &m in &ms {
                    let want = match v {
                        Variety::P => p_total(space.q(), n as u32, m),
                        Variety::Q => q_total(space.q(), n as u32, m),
                        Variety::B => b_total(&space, m),
                    };
                    ensure(atlas.total(m) as u128 == want, || format!("{v} atlas total over m={m}"))?;
                }
                for (i, a) in atlas.strata.iter().enumerate() {
                    for (j, b) in atlas.strata.iter().enumerate() {
                        let edge = atlas.closure.contains(&(i, j));
                        let want = i != j && closure_by_definition(v, &a.key, &b.key, &space);
                        ensure(edge == want, || format!("{v} edge {} -> {}", a.key.key(), b.key.key()))?;
                    }
                }
            }
            Ok(())
        });
    }
}

/// Independent statement of the closure rule, on key members.
fn closure_by_definition(v: Variety, a: &StratumKey, b: &StratumKey, s: &Space) -> bool {
    let f = s.field();
    match (v, a, b) {
        (Variety::P, StratumKey::Subspace(a), StratumKey::Subspace(b)) => a.rows().iter().all(|r| b.contains(f, r)),
        (Variety::Q, StratumKey::Subspace(a), StratumKey::Subspace(b)) => b.rows().iter().all(|r| a.contains(f, r)),
        (Variety::B, StratumKey::Flag(a), StratumKey::Flag(b)) => {
            let bm: BTreeSet<String> = b.members().iter().map(|m| m.key()).collect();
            a.members().iter().all(|m| bm.contains(&m.key()))
        }
        _ => false,
    }
}

pub fn partial_order<T: std::fmt::Debug>(items: &[T], leq: impl Fn(&T, &T) -> bool) -> Outcome {
    for a in items {
        ensure(leq(a, a), || format!("not reflexive at {a:?}"))?;
        for b in items {
            if leq(a, b) && leq(b, a) {
                ensure(std::ptr::eq(a, b), || format!("not antisymmetric at {a:?}, {b:?}"))?;
            }
            if !leq(a, b) {
                continue;
            }
            for c in items {
                if leq(b, c) {
                    ensure(leq(a, c), || format!("not transitive at {a:?} <= {b:?} <= {c:?}"))?;
                }
            }
        }
    }
    Ok(())
}

/// On nonzero proper subspaces, the P order is inclusion, the Q order is its
/// reverse, and in B two one-member flags have a common refinement exactly when
/// their members are comparable.
pub fn duality(s: &Space) -> Outcome {
    let f = s.field();
    let proper: Vec<&Subspace> = s.subspaces().iter().filter(|w| !w.is_full()).collect();
    let flags = s.flags();
    let one = |w: &Subspace| crate::linalg::Flag::new(f, s.dim(), vec![w.clone()]).unwrap();
    for a in &proper {
        for b in &proper {
            let (ka, kb) = (StratumKey::Subspace((*a).clone()), StratumKey::Subspace((*b).clone()));
            let p_ab = in_closure(s, Variety::P, &ka, &kb);
            let q_ba = in_closure(s, Variety::Q, &kb, &ka);
            ensure(p_ab == q_ba, || format!("P and Q orders not reversed at {}, {}", a.key(), b.key()))?;
            let (fa, fb) = (one(a), one(b));
            let common = flags.iter().any(|g| flag_leq(&fa, g) && flag_leq(&fb, g));
            let comparable = p_ab || in_closure(s, Variety::P, &kb, &ka);
            ensure(common == comparable, || format!("B refinement disagrees with inclusion at {}, {}", a.key(), b.key()))?;
        }
    }
    let trivial = crate::linalg::Flag::trivial(s.dim());
    ensure(flags.iter().all(|g| flag_leq(&trivial, g)), || "trivial flag is not the minimum".into())
}

fn stabilizers_for(r: &mut Runner, c: &Ctx, v: Variety) -> Result<Vec<(Point, Vec<GroupElement>)>> {
    let key = (c.space.dim(), c.m, v);
    if let Some(x) = r.stabs.get(&key) {
        return Ok(x.clone());
    }
    let (_, prepared) = group_for(&mut r.groups, &c.space).clone();
    let pts = enumerate(&c.space, v, c.m)?;
    let stabs: Vec<(Point, Vec<GroupElement>)> = pts
        .into_par_iter()
        .map(|x| stabilizer_bruteforce(&c.space, &prepared, &x).map(|st| (x, st)))
        .collect::<Result<_>>()?;
    r.stabs.insert(key, stabs.clone());
    Ok(stabs)
}

fn suite_stabilizer(r: &mut Runner, ctxs: &[Ctx]) {
    for c in ctxs {
        let (group, _) = group_for(&mut r.groups, &c.space).clone();
        for v in [Variety::P, Variety::Q, Variety::B] {
            let stabs = stabilizers_for(r, c, v);
            r.check("stabilizer", format!("brute force = predicted, {v} {}", c.name()), || {
                let stabs = stabs.map_err(|e| e.to_string())?;
                stabs.par_iter().try_for_each(|(x, st)| {
                    let pred = stabilizer_predicted(&c.space, &group, x).map_err(|e| e.to_string())?;
                    ensure(&pred == st, || format!("x={x:?}: brute force {} elements, predicted {}", st.len(), pred.len()))
                })
            });
        }
        let stabs = stabilizers_for(r, c, Variety::P);
        r.check("stabilizer", format!("Ω stabilizers have order prime to p {}", c.name()), || {
            let f = c.space.field();
            for (x, st) in stabs.map_err(|e| e.to_string())? {
                let Point::P(l) = &x else { unreachable!() };
                if !p_classify(&c.space, l).is_zero() {
                    continue;
                }
                for g in &st {
                    ensure(g.order(f) % f.p() as u64 != 0, || format!("{g:?} in Stab({:?}) has order divisible by p", l.coords()))?;
                }
            }
            Ok(())
        });
    }
}

/// The restated corollary (`op = false`: unipotent elements of `Stab(x)`;
/// `op = true`: the largest normal `p`-subgroup `O_p(Stab(x))`) against the
/// unipotent radical of the stratum flag, plus separation of strata.
fn suite_corollary(r: &mut Runner, ctxs: &[Ctx], op: bool) {
    let suite = if op { "corollary-op" } else { "corollary" };
    let what = if op { "O_p(Stab(x))" } else { "unipotent elements of Stab(x)" };
    for c in ctxs {
        let (group, _) = group_for(&mut r.groups, &c.space).clone();
        for v in [Variety::P, Variety::Q, Variety::B] {
            let computed = stabilizers_for(r, c, v).map_err(|e| e.to_string()).and_then(|st| {
                st.par_iter()
                    .map(|(x, s)| {
                        let u = if op { Ok(normal_p_core(&c.space, s)) } else { unipotent_elements(&c.space, s) };
                        u.map(|u| (x.clone(), u)).map_err(|e| e.to_string())
                    })
                    .collect::<std::result::Result<Vec<_>, String>>()
            });
            let computed = &computed;
            r.check(suite, format!("{what} = R_u P_F(x), {v} {}", c.name()), || {
                let mut failures = 0usize;
                let mut first = None;
                for (x, u) in computed.as_ref().map_err(|e| e.clone())? {
                    let flag = stratum_flag(&c.space, x).map_err(|e| e.to_string())?;
                    let ru = unipotent_radical_k(&c.space, &group, &flag);
                    if *u != ru {
                        failures += 1;
                        if first.is_none() {
                            let extra: Vec<_> = u.iter().filter(|g| !ru.contains(g)).take(1).collect();
                            first = Some(format!(
                                "x={x:?} flag={}: |set|={} |R_u|={} extra element {:?}",
                                flag.key(),
                                u.len(),
                                ru.len(),
                                extra
                            ));
                        }
                    }
                }
                ensure(failures == 0, || format!("{failures} points differ; first: {}", first.unwrap_or_default()))
            });
            r.check(suite, format!("{what} separates strata, {v} {}", c.name()), || {
                let mut by_set: BTreeMap<Vec<GroupElement>, BTreeSet<String>> = BTreeMap::new();
                let mut by_stratum: BTreeMap<String, BTreeSet<Vec<GroupElement>>> = BTreeMap::new();
                for (x, u) in computed.as_ref().map_err(|e| e.clone())? {
                    let key = classify(&c.space, x).map_err(|e| e.to_string())?.key();
                    by_set.entry(u.clone()).or_default().insert(key.clone());
                    by_stratum.entry(key).or_default().insert(u.clone());
                }
                if let Some((_, keys)) = by_set.iter().find(|(_, k)| k.len() > 1) {
                    return Err(format!("one set shared by strata {keys:?}"));
                }
                if let Some((k, sets)) = by_stratum.iter().find(|(_, s)| s.len() > 1) {
                    return Err(format!("stratum {k} carries {} different sets", sets.len()));
                }
                Ok(())
            });
        }
    }
}

fn suite_spot(r: &mut Runner) {
    r.check("spot", "Ω(F_4) point over F_2: |Stab| = 3, branch d = 2".into(), spot_check);
}

/// `x ∈ Ω(F_4)` for `q = 2`, `n + 1 = 2`: the stabilizer has order 3 and its
/// non-identity elements fix `x` through the `d = 2` branch.
pub fn spot_check() -> Outcome {
    let s = Space::new(2, 1, 2, &[2]).map_err(|e| e.to_string())?;
    let group = enumerate_pgl(&s).map_err(|e| e.to_string())?;
    let prepared = prepare(&s, &group);
    let l = omega_p_points(&s, 2).map_err(|e| e.to_string())?.remove(0);
    let st = stabilizer_bruteforce(&s, &prepared, &Point::P(l.clone())).map_err(|e| e.to_string())?;
    ensure(st.len() == 3, || format!("|Stab| = {}", st.len()))?;
    for g in st.iter().filter(|g| !g.is_identity()) {
        let w = fixpoint_witness(s.field(), l.coords(), g.matrix()).map_err(|e| e.to_string())?;
        ensure(w.map(|w| w.d) == Some(2), || format!("{g:?}: witness {w:?}"))?;
    }
    Ok(())
}

fn suite_fixture(r: &mut Runner) {
    let path = r.cfg.fixture.clone().expect("checked");
    r.check("fixture", format!("axioms of {}", path.display()), || {
        let text = std::fs::read_to_string(&path).map_err(|e| e.to_string())?;
        let (space, raw) = crate::io::point_from_str(&text).map_err(|e| e.to_string())?;
        match raw {
            crate::io::RawPoint::B(fam) => {
                let c = b_check(&space, &fam).map_err(|e| e.to_string())?;
                match (c.minors, c.proportional) {
                    (None, None) => Ok(()),
                    (Some(w), _) => Err(w.detail),
                    (None, Some(w)) => Err(format!("tests disagree; {}", w.detail)),
                }
            }
            other => match other.validate(&space) {
                Ok(_) => Ok(()),
                Err(e) => Err(e.to_string()),
            },
        }
    });
}
