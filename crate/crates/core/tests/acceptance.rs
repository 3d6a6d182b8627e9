//! Acceptance run: one line per criterion. Expected values come from oracles
//! written here (closed formulas, brute-force searches, direct evaluation),
//! not from the library paths under test.

use std::collections::{BTreeSet, HashMap};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use drinfeld_core::group::{
    act_p, act_q, enumerate_pgl, fixpoint_witness, normal_p_core, prepare, stabilizer_bruteforce, stabilizer_predicted,
    unipotent_elements, unipotent_radical_k, GroupElement,
};
use drinfeld_core::linalg::{dot, Subspace, Vector};
use drinfeld_core::points::{
    b_check, b_enumerate, b_from_omega, classify, enumerate, omega_p_points, p_classify, p_enumerate, pi_map,
    q_enumerate, q_from_omega, rho_map, stratum_flag, twist_span_dim, Point, StratumKey, Variety,
};
use drinfeld_core::{Element, Space};

type Outcome = Result<String, String>;

const KINDS: [Variety; 3] = [Variety::P, Variety::Q, Variety::B];

// ---------------------------------------------------------------------------
// oracles

fn pow(b: u64, e: u32) -> u128 {
    (b as u128).pow(e)
}

/// `prod_(i<d) (Q - q^i) / (Q - 1)` with `Q = q^m`.
fn omega_formula(q: u64, d: usize, m: u32) -> u128 {
    let big = pow(q, m);
    let mut num: u128 = 1;
    for i in 0..d as u32 {
        let t = pow(q, i);
        if t >= big {
            return 0;
        }
        num *= big - t;
    }
    num / (big - 1)
}

/// Brute-force `|Ω_d(k_m)|`: normalized `l ∈ k_m^d` with `l(c) != 0` for every
/// nonzero rational `c`.
fn omega_brute(s: &Space, km: &[Element], d: usize) -> u128 {
    let f = s.field();
    let mut count = 0;
    let mut digits = vec![0usize; d];
    loop {
        let l: Vec<Element> = digits.iter().map(|&i| km[i]).collect();
        let lead = l.iter().find(|x| !x.is_zero());
        if lead.is_some_and(|x| x.is_one()) {
            let ok = s.coord_vectors(d).iter().all(|c| {
                let v = l.iter().zip(c).fold(Element::ZERO, |acc, (&a, &b)| f.add(acc, f.mul(a, b)));
                !v.is_zero()
            });
            if ok {
                count += 1;
            }
        }
        let mut pos = 0;
        while pos < d {
            digits[pos] += 1;
            if digits[pos] < km.len() {
                break;
            }
            digits[pos] = 0;
            pos += 1;
        }
        if pos == d {
            break;
        }
    }
    count
}

fn chain_dims(key: &StratumKey, n: usize) -> Vec<usize> {
    match key {
        StratumKey::Flag(f) => f.chain().windows(2).map(|w| w[0].dim() - w[1].dim()).collect(),
        StratumKey::Subspace(s) => vec![s.dim(), n - s.dim()],
    }
}

/// `g` fixes `x` iff the transformed data is proportional to the original.
fn fixes(s: &Space, x: &Point, g: &GroupElement) -> bool {
    let f = s.field();
    let m = g.matrix();
    let n = s.dim();
    let proportional = |a: &[Element], b: &[Element]| -> bool {
        let Some(j) = b.iter().position(|x| !x.is_zero()) else { return false };
        let c = f.div(a[j], b[j]).unwrap();
        !c.is_zero() && a.iter().zip(b).all(|(&x, &y)| x == f.mul(c, y))
    };
    match x {
        Point::P(p) => {
            let l = p.coords();
            let lm: Vec<Element> = (0..n)
                .map(|j| (0..n).fold(Element::ZERO, |acc, i| f.add(acc, f.mul(l[i], m.get(i, j)))))
                .collect();
            proportional(&lm, l)
        }
        Point::Q(q) => {
            let vs = s.nonzero_vectors();
            let moved: Vec<Element> = vs.iter().map(|v| q.value_at(s, &m.apply(f, v)).unwrap()).collect();
            proportional(&moved, q.values())
        }
        Point::B(b) => s.subspaces().iter().enumerate().all(|(i, w)| {
            let imgs: Vec<Vector> = w.rows().iter().map(|r| m.apply(f, r)).collect();
            let gw = Subspace::span(f, n, &imgs).unwrap();
            let lg = b.functional_on(s, &gw).unwrap();
            let vals: Vec<Element> = imgs.iter().map(|v| dot(f, lg.coords(), &gw.coords(f, v).unwrap())).collect();
            proportional(&vals, b.family()[i].coords())
        }),
    }
}

fn normalize(s: &Space, mut v: Vec<Element>) -> Vec<Element> {
    let f = s.field();
    if let Some(&lead) = v.iter().find(|x| !x.is_zero()) {
        let inv = f.inv(lead).unwrap();
        for x in v.iter_mut() {
            *x = f.mul(*x, inv);
        }
    }
    v
}

/// Both reciprocal-map axioms and non-vanishing, by direct substitution.
fn reciprocal(s: &Space, r: &[Element]) -> bool {
    let f = s.field();
    if r.iter().all(|x| x.is_zero()) {
        return false;
    }
    let vs = s.nonzero_vectors();
    let idx = |v: &[Element]| s.vector_index(v).unwrap() - 1;
    for (i, v) in vs.iter().enumerate() {
        for &lam in &s.k_elements()[1..] {
            let lv: Vec<Element> = v.iter().map(|&x| f.mul(lam, x)).collect();
            if f.mul(lam, r[idx(&lv)]) != r[i] {
                return false;
            }
        }
        for (j, w) in vs.iter().enumerate() {
            let sum: Vec<Element> = v.iter().zip(w).map(|(&a, &b)| f.add(a, b)).collect();
            if sum.iter().all(|x| x.is_zero()) {
                continue;
            }
            if f.mul(r[i], r[j]) != f.mul(r[idx(&sum)], f.add(r[i], r[j])) {
                return false;
            }
        }
    }
    true
}

/// `l_W` restricted to `W'` equals `c · l_W'` for some `c ∈ k_m` (searched).
fn family_compatible(s: &Space, km: &[Element], fam: &[Vector]) -> bool {
    let f = s.field();
    let subs = s.subspaces();
    for (i, small) in subs.iter().enumerate() {
        for (j, big) in subs.iter().enumerate() {
            if small.dim() >= big.dim() || !small.rows().iter().all(|r| big.contains(f, r)) {
                continue;
            }
            let a: Vec<Element> = small.rows().iter().map(|r| dot(f, &fam[j], &big.coords(f, r).unwrap())).collect();
            let b = &fam[i];
            if !km.iter().any(|&c| a.iter().zip(b).all(|(&x, &y)| x == f.mul(c, y))) {
                return false;
            }
        }
    }
    true
}

fn stab_ranges() -> Vec<(usize, u32)> {
    vec![(2, 1), (2, 2), (2, 3), (3, 1), (3, 2)]
}

// ---------------------------------------------------------------------------
// criteria

fn criterion_1() -> Outcome {
    let mut configs = 0;
    for q in [2u32, 3] {
        for n in [2usize, 3] {
            for m in 1..=3u32 {
                if q == 3 && n == 3 && m == 3 {
                    continue;
                }
                configs += 1;
                let s = Space::new(q, 1, n, &[m]).map_err(|e| e.to_string())?;
                let km = s.extension_elements(m).unwrap();
                let omega: Vec<u128> = (0..=n).map(|d| if d == 0 { 0 } else { omega_brute(&s, &km, d) }).collect();
                for d in 1..=n {
                    if omega[d] != omega_formula(q as u64, d, m) {
                        return Err(format!("Ω count mismatch q={q} d={d} m={m}"));
                    }
                }
                for v in KINDS {
                    let pts = enumerate(&s, v, m).map_err(|e| e.to_string())?;
                    let distinct: BTreeSet<&Point> = pts.iter().collect();
                    if distinct.len() != pts.len() {
                        return Err(format!("{v} q={q} n+1={n} m={m}: duplicate points"));
                    }
                    let mut counts: HashMap<StratumKey, u128> = HashMap::new();
                    for x in &pts {
                        *counts.entry(classify(&s, x).map_err(|e| e.to_string())?).or_default() += 1;
                    }
                    for (key, &c) in &counts {
                        let want: u128 = match (v, key) {
                            (Variety::P, StratumKey::Subspace(sub)) => omega[n - sub.dim()],
                            (Variety::Q, StratumKey::Subspace(sub)) => omega[sub.dim()],
                            _ => chain_dims(key, n).iter().map(|&d| omega[d]).product(),
                        };
                        if c != want {
                            return Err(format!("{v} q={q} n+1={n} m={m}: stratum {} has {c}, oracle {want}", key.key()));
                        }
                    }
                    let total = pts.len() as u128;
                    let want = match v {
                        Variety::P => (pow(q as u64, m * n as u32) - 1) / (pow(q as u64, m) - 1),
                        Variety::Q => s.subspaces().iter().map(|w| omega_formula(q as u64, w.dim(), m)).sum(),
                        Variety::B => s
                            .flags()
                            .iter()
                            .map(|fl| chain_dims(&StratumKey::Flag(fl.clone()), n).iter().map(|&d| omega_formula(q as u64, d, m)).product::<u128>())
                            .sum(),
                    };
                    if total != want {
                        return Err(format!("{v} q={q} n+1={n} m={m}: total {total}, formula {want}"));
                    }
                }
            }
        }
    }
    Ok(format!("{configs} configurations x 3 varieties, per-stratum and total counts exact"))
}

fn criterion_2() -> Outcome {
    let mut counts = Vec::new();
    for m in [1u32, 2] {
        let s = Space::new(2, 1, 2, &[m]).unwrap();
        let km = s.extension_elements(m).unwrap();
        let nv = s.nonzero_vectors().len();
        let mut brute: BTreeSet<Vec<Element>> = BTreeSet::new();
        let mut digits = vec![0usize; nv];
        loop {
            let table: Vec<Element> = digits.iter().map(|&i| km[i]).collect();
            if reciprocal(&s, &table) {
                brute.insert(normalize(&s, table));
            }
            let mut pos = 0;
            while pos < nv {
                digits[pos] += 1;
                if digits[pos] < km.len() {
                    break;
                }
                digits[pos] = 0;
                pos += 1;
            }
            if pos == nv {
                break;
            }
        }
        let built: BTreeSet<Vec<Element>> =
            q_enumerate(&s, m).map_err(|e| e.to_string())?.iter().map(|x| x.values().to_vec()).collect();
        if brute != built {
            return Err(format!("m={m}: brute force {} tables, construction {}", brute.len(), built.len()));
        }
        // three rational lines plus |Ω_2(k_m)|
        let expected = 3 + omega_formula(2, 2, m);
        if brute.len() as u128 != expected {
            return Err(format!("m={m}: {} tables, oracle {expected}", brute.len()));
        }
        counts.push(brute.len());
    }
    Ok(format!(
        "set equality holds; counts {} (m=1) and {} (m=2); the stated 2 and 4 omit one of the three rational lines",
        counts[0], counts[1]
    ))
}

fn criterion_3() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(20240601);
    let mut summary = Vec::new();
    for n in [2usize, 3] {
        for m in [1u32, 2] {
            let s = Space::new(2, 1, n, &[m]).unwrap();
            let km = s.extension_elements(m).unwrap();
            let f = s.field();
            let pts = b_enumerate(&s, m).map_err(|e| e.to_string())?;
            let mut families: Vec<Vec<Vector>> = pts.iter().map(|x| x.raw_family()).collect();
            let constructed = families.len();
            let base = families.clone();
            let mut perturbed = 0;
            while perturbed < 1000 {
                let mut fam = base[rng.gen_range(0..base.len())].clone();
                let i = rng.gen_range(0..fam.len());
                if rng.gen_bool(0.2) {
                    let c = km[rng.gen_range(1..km.len())];
                    fam[i] = fam[i].iter().map(|&x| f.mul(c, x)).collect();
                } else {
                    let v: Vector = (0..fam[i].len()).map(|_| km[rng.gen_range(0..km.len())]).collect();
                    if v.iter().all(|x| x.is_zero()) {
                        continue;
                    }
                    fam[i] = v;
                }
                families.push(fam);
                perturbed += 1;
            }
            let mut invalid = 0;
            for fam in &families {
                let c = b_check(&s, fam).map_err(|e| e.to_string())?;
                let (a, b) = (c.minors.is_none(), c.proportional.is_none());
                if a != b {
                    return Err(format!("n+1={n} m={m}: minor test {a}, proportionality test {b}"));
                }
                if a != family_compatible(&s, &km, fam) {
                    return Err(format!("n+1={n} m={m}: both tests say {a}, scalar search disagrees"));
                }
                if !a {
                    invalid += 1;
                }
            }
            summary.push(format!("n+1={n} m={m}: {constructed}+{perturbed} families, {invalid} invalid"));
        }
    }
    Ok(summary.join("; "))
}

fn criterion_4() -> Outcome {
    let mut points = 0;
    for (n, m) in stab_ranges() {
        let s = Space::new(2, 1, n, &[m]).unwrap();
        let group = enumerate_pgl(&s).map_err(|e| e.to_string())?;
        let prepared = prepare(&s, &group);
        for v in KINDS {
            for x in enumerate(&s, v, m).map_err(|e| e.to_string())? {
                let oracle: Vec<GroupElement> = group.iter().filter(|g| fixes(&s, &x, g)).cloned().collect();
                let brute = stabilizer_bruteforce(&s, &prepared, &x).map_err(|e| e.to_string())?;
                let pred = stabilizer_predicted(&s, &group, &x).map_err(|e| e.to_string())?;
                if brute != oracle {
                    return Err(format!("n+1={n} m={m} {x:?}: brute force disagrees with direct check"));
                }
                if pred != brute {
                    return Err(format!("n+1={n} m={m} {x:?}: predicted {} vs brute force {}", pred.len(), brute.len()));
                }
                points += 1;
            }
        }
    }
    Ok(format!("{points} points, stabilizers equal as sets"))
}

/// `|R_u P_F(k)| = q^(sum_(i<j) d_i d_j)` over the block sizes of the flag.
fn radical_order(dims: &[usize]) -> u128 {
    let mut e = 0;
    for i in 0..dims.len() {
        for j in i + 1..dims.len() {
            e += dims[i] * dims[j];
        }
    }
    pow(2, e as u32)
}

fn corollary(op: bool) -> Outcome {
    let mut points = 0;
    let mut mismatches = 0;
    let mut witness = None;
    let mut separation_failures = Vec::new();
    for (n, m) in stab_ranges() {
        let s = Space::new(2, 1, n, &[m]).unwrap();
        let group = enumerate_pgl(&s).map_err(|e| e.to_string())?;
        let prepared = prepare(&s, &group);
        for v in KINDS {
            let mut by_stratum: HashMap<String, BTreeSet<Vec<GroupElement>>> = HashMap::new();
            let mut by_set: HashMap<Vec<GroupElement>, BTreeSet<String>> = HashMap::new();
            for x in enumerate(&s, v, m).map_err(|e| e.to_string())? {
                let st = stabilizer_bruteforce(&s, &prepared, &x).map_err(|e| e.to_string())?;
                let set = if op { normal_p_core(&s, &st) } else { unipotent_elements(&s, &st).map_err(|e| e.to_string())? };
                let flag = stratum_flag(&s, &x).map_err(|e| e.to_string())?;
                let ru = unipotent_radical_k(&s, &group, &flag);
                let dims: Vec<usize> = flag.chain().windows(2).map(|w| w[0].dim() - w[1].dim()).collect();
                if ru.len() as u128 != radical_order(&dims) {
                    return Err(format!("|R_u| for {} is {}, oracle {}", flag.key(), ru.len(), radical_order(&dims)));
                }
                if set != ru {
                    mismatches += 1;
                    if witness.is_none() {
                        let extra = set.iter().find(|g| !ru.contains(g));
                        witness = Some(format!(
                            "n+1={n} m={m} x={x:?}: {} elements vs |R_u P_F|={}, e.g. {extra:?}",
                            set.len(),
                            ru.len()
                        ));
                    }
                }
                points += 1;
                let key = classify(&s, &x).map_err(|e| e.to_string())?.key();
                by_stratum.entry(key.clone()).or_default().insert(set.clone());
                by_set.entry(set).or_default().insert(key);
            }
            if by_stratum.values().any(|s| s.len() > 1) || by_set.values().any(|k| k.len() > 1) {
                separation_failures.push(format!("{v} n+1={n} m={m}"));
            }
        }
    }
    let sep = if separation_failures.is_empty() { "strata separated".to_string() } else { format!("separation fails for {separation_failures:?}") };
    if mismatches == 0 && separation_failures.is_empty() {
        Ok(format!("all {points} points agree with R_u P_F(x); {sep}"))
    } else {
        Err(format!("{mismatches} of {points} points differ from R_u P_F(x); {sep}; first: {}", witness.unwrap_or_default()))
    }
}

fn criterion_6() -> Outcome {
    let mut points = 0;
    for (n, m) in stab_ranges() {
        let s = Space::new(2, 1, n, &[m]).unwrap();
        let f = s.field();
        for x in p_enumerate(&s, m).map_err(|e| e.to_string())? {
            let zeros = s.vectors().iter().filter(|v| dot(f, x.coords(), v).is_zero()).count();
            let kernel_dim = zeros.trailing_zeros() as usize;
            let got = twist_span_dim(f, &x);
            if got != n - kernel_dim {
                return Err(format!("n+1={n} m={m} l={:?}: twist span {got}, n+1 - dim V' = {}", x.coords(), n - kernel_dim));
            }
            if p_classify(&s, &x).dim() != kernel_dim {
                return Err(format!("rational kernel dimension disagrees for {:?}", x.coords()));
            }
            points += 1;
        }
    }
    Ok(format!("{points} points of P"))
}

fn criterion_7() -> Outcome {
    let s = Space::new(2, 1, 2, &[2]).unwrap();
    let group = enumerate_pgl(&s).map_err(|e| e.to_string())?;
    if group.len() != 6 {
        return Err(format!("|PGL(2,2)| = {}", group.len()));
    }
    let omega = omega_p_points(&s, 2).map_err(|e| e.to_string())?;
    let x = Point::P(omega[0].clone());
    let oracle: Vec<&GroupElement> = group.iter().filter(|g| fixes(&s, &x, g)).collect();
    let brute = stabilizer_bruteforce(&s, &prepare(&s, &group), &x).map_err(|e| e.to_string())?;
    if oracle.len() != 3 || brute.len() != 3 {
        return Err(format!("|Stab(x)|: direct {}, brute force {}", oracle.len(), brute.len()));
    }
    for g in brute.iter().filter(|g| !g.is_identity()) {
        match fixpoint_witness(s.field(), omega[0].coords(), g.matrix()).map_err(|e| e.to_string())? {
            Some(w) if w.d == 2 => {}
            other => return Err(format!("{g:?}: witness {other:?}")),
        }
    }
    Ok("|Stab(x)| = 3 and both non-identity elements fire the d = 2 branch".into())
}

fn criterion_8() -> Outcome {
    let mut checked = 0;
    for (n, m) in stab_ranges() {
        let s = Space::new(2, 1, n, &[m]).unwrap();
        let f = s.field();
        let group = enumerate_pgl(&s).map_err(|e| e.to_string())?;
        for l in omega_p_points(&s, m).map_err(|e| e.to_string())? {
            let b = b_from_omega(&s, &l).map_err(|e| e.to_string())?;
            if pi_map(&s, &b) != l {
                return Err(format!("pi(embed(l)) != l for {:?}", l.coords()));
            }
            let direct: Vec<Element> =
                normalize(&s, s.nonzero_vectors().iter().map(|v| f.inv(dot(f, l.coords(), v)).unwrap()).collect());
            let via_b = rho_map(&s, &b).map_err(|e| e.to_string())?;
            let via_q = q_from_omega(&s, &l).map_err(|e| e.to_string())?;
            if via_b.values() != direct.as_slice() || via_q.values() != direct.as_slice() {
                return Err(format!("rho(embed(l)) or 1/l differs from the direct table for {:?}", l.coords()));
            }
            for g in &group {
                if act_q(&s, &via_q, g) != q_from_omega(&s, &act_p(&s, &l, g)).map_err(|e| e.to_string())? {
                    return Err(format!("equivariance fails for l={:?} g={g:?}", l.coords()));
                }
            }
            checked += 1;
        }
    }
    Ok(format!("{checked} Ω-points, all group elements"))
}

fn criterion_9() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_drinfeld");
    let run = |args: &[&str]| -> Result<Vec<u8>, String> {
        let out = Command::new(bin).args(args).output().map_err(|e| e.to_string())?;
        if !out.status.success() {
            return Err(format!("{args:?} exited with {}: {}", out.status, String::from_utf8_lossy(&out.stderr)));
        }
        Ok(out.stdout)
    };
    let mut compared = 0;
    for v in ["P", "Q", "B"] {
        for n in ["1", "2"] {
            for fmt in ["dot", "json"] {
                let base = ["strata", "--variety", v, "--n", n, "--m", "1,2", "--format", fmt, "--no-cache"];
                let a = run(&[&base[..], &["--jobs", "1"]].concat())?;
                let b = run(&[&base[..], &["--jobs", "4"]].concat())?;
                if a != b || a.is_empty() {
                    return Err(format!("{v} n={n} {fmt}: outputs differ between --jobs 1 and --jobs 4"));
                }
                compared += 1;
            }
        }
    }
    Ok(format!("{compared} output pairs byte-identical"))
}

fn main() {
    let criteria: Vec<(u32, &str, fn() -> Outcome)> = vec![
        (1, "stratification partitions", criterion_1),
        (2, "reciprocal-map brute force", criterion_2),
        (3, "incidence equivalence", criterion_3),
        (4, "stabilizer theorem", criterion_4),
        (5, "unipotent-radical corollary (restated)", || corollary(false)),
        (6, "Frobenius-twist lemma", criterion_6),
        (7, "spot check |Stab| = 3", criterion_7),
        (8, "map compatibilities", criterion_8),
        (9, "determinism across --jobs", criterion_9),
    ];
    // Criterion 5 as restated does not hold: see README, "Known failing criterion".
    let known_unattainable = [5u32];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        let t = Instant::now();
        let out = f();
        let secs = t.elapsed().as_secs_f64();
        match &out {
            Ok(msg) => println!("criterion {id} [PRIMARY] {name}: PASS ({secs:.2}s) {msg}"),
            Err(msg) => println!("criterion {id} [PRIMARY] {name}: FAIL ({secs:.2}s) {msg}"),
        }
        if out.is_err() != known_unattainable.contains(&id) {
            unexpected.push(id);
        }
    }
    let t = Instant::now();
    match corollary(true) {
        Ok(msg) => println!("criterion 5 supplementary, O_p(Stab(x)) = R_u P_F(x): PASS ({:.2}s) {msg}", t.elapsed().as_secs_f64()),
        Err(msg) => {
            println!("criterion 5 supplementary, O_p(Stab(x)) = R_u P_F(x): FAIL {msg}");
            unexpected.push(50);
        }
    }
    if !unexpected.is_empty() {
        println!("unexpected outcome for criteria {unexpected:?}");
        std::process::exit(1);
    }
}
