//! `k_m`-valued points of the three compactifications `P_V`, `Q_V` and `B_V`,
//! their defining axioms, stratum classification, and the maps between them.
//!
//! * a point of `P_V` is a nonzero linear form `l` on `V`, up to scalars;
//! * a point of `Q_V` is a reciprocal map `r : V \ {0} -> k_m`, up to scalars;
//! * a point of `B_V` is a family `(l_W)` of nonzero forms, one for each nonzero
//!   subspace `W`, such that `l_W` restricted to `W'` is proportional to `l_W'`
//!   whenever `W' ⊂ W`.

use std::fmt;

use crate::error::{invariant, rejected, Result};
use crate::field::{Element, FieldCtx};
use crate::linalg::{
    dot, normalize, rank, rational_kernel, Flag, Functional, Quotient, Subspace, Vector,
};
use crate::space::{normalized_vectors, Space};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Variety {
    P,
    Q,
    B,
}

impl Variety {
    pub fn name(self) -> &'static str {
        match self {
            Variety::P => "P",
            Variety::Q => "Q",
            Variety::B => "B",
        }
    }
}

impl std::str::FromStr for Variety {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "P" => Ok(Variety::P),
            "Q" => Ok(Variety::Q),
            "B" => Ok(Variety::B),
            other => rejected(format!("unknown variety {other:?}")),
        }
    }
}

impl fmt::Display for Variety {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Index of a stratum: a subspace for `P_V` and `Q_V`, a flag for `B_V`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StratumKey {
    Subspace(Subspace),
    Flag(Flag),
}

impl StratumKey {
    pub fn key(&self) -> String {
        match self {
            StratumKey::Subspace(s) => s.key(),
            StratumKey::Flag(f) => f.key(),
        }
    }
}

// ---------------------------------------------------------------------------
// P

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PPoint {
    l: Functional,
}

impl PPoint {
    pub fn new(space: &Space, coords: Vector) -> Result<Self> {
        if coords.len() != space.dim() {
            return rejected(format!("expected {} coordinates, got {}", space.dim(), coords.len()));
        }
        Ok(PPoint { l: Functional::new(space.field(), coords)? })
    }

    pub fn functional(&self) -> &Functional {
        &self.l
    }

    pub fn coords(&self) -> &[Element] {
        self.l.coords()
    }
}

/// The subspace `V' = Ker(l) ∩ V`; the point lies in the stratum `P_{V/V'}`.
pub fn p_classify(space: &Space, x: &PPoint) -> Subspace {
    rational_kernel(space.field(), x.coords())
}

/// Whether a form has no nonzero `k`-rational vector in its kernel.
pub fn is_omega(field: &FieldCtx, l: &[Element]) -> bool {
    rational_kernel(field, l).is_zero()
}

/// All of `P_V(k_m)`.
pub fn p_enumerate(space: &Space, m: u32) -> Result<Vec<PPoint>> {
    let km = space.extension_elements(m)?;
    Ok(normalized_vectors(&km, space.dim())
        .into_iter()
        .map(|v| PPoint { l: Functional::new(space.field(), v).expect("nonzero") })
        .collect())
}

/// `Ω(k_m)` of a `d`-dimensional space, as normalized forms on `k^d`.
pub fn omega_functionals(field: &FieldCtx, km: &[Element], d: usize) -> Vec<Functional> {
    normalized_vectors(km, d)
        .into_iter()
        .filter(|v| is_omega(field, v))
        .map(|v| Functional::new(field, v).expect("nonzero"))
        .collect()
}

pub fn omega_p_points(space: &Space, m: u32) -> Result<Vec<PPoint>> {
    let km = space.extension_elements(m)?;
    Ok(omega_functionals(space.field(), &km, space.dim())
        .into_iter()
        .map(|l| PPoint { l })
        .collect())
}

/// The twist `l^(F^i)`, i.e. `F^(-i)` applied to every coordinate.
pub fn frobenius_twist(field: &FieldCtx, x: &PPoint, i: i64) -> PPoint {
    let coords = x.coords().iter().map(|&c| field.frobenius_pow(c, -i)).collect();
    PPoint { l: Functional::new(field, coords).expect("Frobenius is injective") }
}

/// `dim Span(l, l^F, l^(F^2), ...)` over the ambient field.
pub fn twist_span_dim(field: &FieldCtx, x: &PPoint) -> usize {
    let rows: Vec<Vector> = (0..field.relative_degree() as i64)
        .map(|i| x.coords().iter().map(|&c| field.frobenius_pow(c, -i)).collect())
        .collect();
    rank(field, &rows)
}

// ---------------------------------------------------------------------------
// Q

/// Reason a table fails to be a reciprocal map with generating values.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum QViolation {
    WrongLength { expected: usize, got: usize },
    NotGenerating,
    /// `r(λ v) != λ^-1 r(v)`
    Homogeneity { v: Vector, lambda: Element },
    /// `r(v) r(w) != r(v + w) (r(v) + r(w))`
    Reciprocity { v: Vector, w: Vector },
}

impl fmt::Display for QViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use crate::linalg::vector_key as vk;
        match self {
            QViolation::WrongLength { expected, got } => write!(f, "table has {got} entries, expected {expected}"),
            QViolation::NotGenerating => write!(f, "table is identically zero"),
            QViolation::Homogeneity { v, lambda } => write!(f, "axiom (i) fails at v={} lambda={lambda}", vk(v)),
            QViolation::Reciprocity { v, w } => write!(f, "axiom (ii) fails at v={} v'={}", vk(v), vk(w)),
        }
    }
}

fn add_vec(field: &FieldCtx, a: &[Element], b: &[Element]) -> Vector {
    a.iter().zip(b).map(|(&x, &y)| field.add(x, y)).collect()
}

fn scale_vec(field: &FieldCtx, c: Element, a: &[Element]) -> Vector {
    a.iter().map(|&x| field.mul(c, x)).collect()
}

/// Checks both reciprocal-map axioms on a table indexed like
/// [`Space::nonzero_vectors`].
pub fn q_check(space: &Space, table: &[Element]) -> std::result::Result<(), QViolation> {
    let f = space.field();
    let vs = space.nonzero_vectors();
    if table.len() != vs.len() {
        return Err(QViolation::WrongLength { expected: vs.len(), got: table.len() });
    }
    if table.iter().all(|x| x.is_zero()) {
        return Err(QViolation::NotGenerating);
    }
    let at = |v: &[Element]| table[space.vector_index(v).expect("rational vector") - 1];
    for (v, &rv) in vs.iter().zip(table) {
        for &lambda in space.k_units() {
            let expected = f.mul(f.inv(lambda).unwrap(), rv);
            if at(&scale_vec(f, lambda, v)) != expected {
                return Err(QViolation::Homogeneity { v: v.clone(), lambda });
            }
        }
    }
    for (i, v) in vs.iter().enumerate() {
        for (j, w) in vs.iter().enumerate() {
            let s = add_vec(f, v, w);
            if s.iter().all(|x| x.is_zero()) {
                continue;
            }
            let (rv, rw) = (table[i], table[j]);
            if f.mul(rv, rw) != f.mul(at(&s), f.add(rv, rw)) {
                return Err(QViolation::Reciprocity { v: v.clone(), w: w.clone() });
            }
        }
    }
    Ok(())
}

pub fn q_validate(space: &Space, table: &[Element]) -> bool {
    q_check(space, table).is_ok()
}

/// A reciprocal map, scaled so the value at the first vector (in canonical
/// order) with nonzero value is 1.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QPoint {
    values: Vec<Element>,
}

impl QPoint {
    pub fn new(space: &Space, table: Vec<Element>) -> Result<Self> {
        if let Err(v) = q_check(space, &table) {
            return rejected(format!("not a reciprocal map: {v}"));
        }
        Ok(QPoint { values: normalize(space.field(), table).expect("checked nonzero") })
    }

    /// Values on [`Space::nonzero_vectors`].
    pub fn values(&self) -> &[Element] {
        &self.values
    }

    pub fn value_at(&self, space: &Space, v: &[Element]) -> Option<Element> {
        match space.vector_index(v)? {
            0 => None,
            i => Some(self.values[i - 1]),
        }
    }
}

/// `V' = supp(r) ∪ {0}`; the point lies in the stratum `Q_{V'}`.
pub fn q_classify(space: &Space, x: &QPoint) -> Result<Subspace> {
    let f = space.field();
    let support: Vec<Vector> = space
        .nonzero_vectors()
        .iter()
        .zip(x.values())
        .filter(|(_, r)| !r.is_zero())
        .map(|(v, _)| v.clone())
        .collect();
    let span = Subspace::span(f, space.dim(), &support)?;
    let span_size = (space.q() as usize).pow(span.dim() as u32) - 1;
    if span_size != support.len() {
        return invariant(format!("support of the reciprocal map is not a subspace minus zero (span {})", span.key()));
    }
    Ok(span)
}

/// Extends `v -> 1 / l(v)` on a subspace by zero; `l` is given in the echelon
/// coordinates of `sub` and must not vanish on its nonzero rational vectors.
pub fn q_extend_by_zero(space: &Space, sub: &Subspace, l: &[Element]) -> Result<QPoint> {
    let f = space.field();
    if l.len() != sub.dim() {
        return rejected("functional length differs from the subspace dimension");
    }
    let mut values = Vec::with_capacity(space.nonzero_vectors().len());
    for v in space.nonzero_vectors() {
        let r = match sub.coords(f, v) {
            Some(c) => match f.inv(dot(f, l, &c)) {
                Some(r) => r,
                None => return rejected("functional vanishes on a rational vector of the subspace"),
            },
            None => Element::ZERO,
        };
        values.push(r);
    }
    Ok(QPoint { values: normalize(f, values).expect("nonzero on sub") })
}

/// The bijection `Ω ⊂ P_V -> Ω ⊂ Q_V`, `l -> 1/l`.
pub fn q_from_omega(space: &Space, x: &PPoint) -> Result<QPoint> {
    q_extend_by_zero(space, &Subspace::full(space.dim()), x.coords())
}

/// All of `Q_V(k_m)`, stratum by stratum: for each nonzero `V'` and each
/// `l ∈ Ω_{V'}(k_m)`, the extension by zero of `1/l`.
pub fn q_enumerate(space: &Space, m: u32) -> Result<Vec<QPoint>> {
    let km = space.extension_elements(m)?;
    let mut out = Vec::new();
    for sub in space.subspaces() {
        for l in omega_functionals(space.field(), &km, sub.dim()) {
            out.push(q_extend_by_zero(space, sub, l.coords())?);
        }
    }
    out.sort();
    Ok(out)
}

// ---------------------------------------------------------------------------
// B

/// Where an incidence check failed: `sub ⊊ sup` (indices into
/// [`Space::subspaces`]) and a human-readable witness.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BWitness {
    pub sub: usize,
    pub sup: usize,
    pub detail: String,
}

/// Outcome of the two incidence tests; `None` means the test passed.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BCheck {
    pub minors: Option<BWitness>,
    pub proportional: Option<BWitness>,
}

fn check_family_shape(space: &Space, family: &[Vector]) -> Result<()> {
    let subs = space.subspaces();
    if family.len() != subs.len() {
        return rejected(format!("family has {} members, expected one per nonzero subspace ({})", family.len(), subs.len()));
    }
    for (s, l) in subs.iter().zip(family) {
        if l.len() != s.dim() {
            return rejected(format!("functional on {} has {} coordinates", s.key(), l.len()));
        }
        if l.iter().all(|x| x.is_zero()) {
            return rejected(format!("functional on {} is zero", s.key()));
        }
    }
    Ok(())
}

/// Runs the 2x2-minor test and the proportionality test independently.
pub fn b_check(space: &Space, family: &[Vector]) -> Result<BCheck> {
    check_family_shape(space, family)?;
    let f = space.field();
    let subs = space.subspaces();
    let mut minors = None;
    let mut proportional = None;
    for inc in space.inclusions() {
        let l_sup = &family[inc.sup];
        let l_sub = &family[inc.sub];
        // values of l_sup on the basis of the smaller space
        let restricted: Vector = inc.basis_in_sup.iter().map(|b| dot(f, l_sup, b)).collect();

        if minors.is_none() {
            'pairs: for v in space.coord_vectors(l_sub.len()) {
                let (a_v, b_v) = (dot(f, &restricted, v), dot(f, l_sub, v));
                for w in space.coord_vectors(l_sub.len()) {
                    let (a_w, b_w) = (dot(f, &restricted, w), dot(f, l_sub, w));
                    if f.mul(a_v, b_w) != f.mul(a_w, b_v) {
                        let sub = &subs[inc.sub];
                        minors = Some(BWitness {
                            sub: inc.sub,
                            sup: inc.sup,
                            detail: format!(
                                "minor l_W(v) l_W'(v') != l_W(v') l_W'(v) for W'={} W={} v={} v'={}",
                                sub.key(),
                                subs[inc.sup].key(),
                                crate::linalg::vector_key(&sub.combine(f, v)),
                                crate::linalg::vector_key(&sub.combine(f, w)),
                            ),
                        });
                        break 'pairs;
                    }
                }
            }
        }

        if proportional.is_none() {
            let j0 = l_sub.iter().position(|x| !x.is_zero()).expect("shape checked");
            let c = f.div(restricted[j0], l_sub[j0]).unwrap();
            if let Some(j) = (0..l_sub.len()).find(|&j| restricted[j] != f.mul(c, l_sub[j])) {
                proportional = Some(BWitness {
                    sub: inc.sub,
                    sup: inc.sup,
                    detail: format!(
                        "l_W restricted to W'={} is not proportional to l_W' (W={}, scale {c}, basis index {j})",
                        subs[inc.sub].key(),
                        subs[inc.sup].key()
                    ),
                });
            }
        }

        if minors.is_some() && proportional.is_some() {
            break;
        }
    }
    Ok(BCheck { minors, proportional })
}

/// True iff the family satisfies the incidence relations. The two tests are
/// equivalent; disagreement is reported as an invariant violation.
pub fn b_validate(space: &Space, family: &[Vector]) -> Result<bool> {
    let c = b_check(space, family)?;
    match (&c.minors, &c.proportional) {
        (None, None) => Ok(true),
        (Some(_), Some(_)) => Ok(false),
        _ => invariant(format!("minor and proportionality tests disagree: {c:?}")),
    }
}

/// A point of `B_V`: one normalized form per nonzero subspace, aligned with
/// [`Space::subspaces`].
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BPoint {
    family: Vec<Functional>,
}

impl BPoint {
    pub fn new(space: &Space, family: Vec<Vector>) -> Result<Self> {
        let check = b_check(space, &family)?;
        if let Some(w) = check.minors.or(check.proportional) {
            return rejected(format!("family violates the incidence relations: {}", w.detail));
        }
        let f = space.field();
        let family = family.into_iter().map(|l| Functional::new(f, l)).collect::<Result<_>>()?;
        Ok(BPoint { family })
    }

    pub fn family(&self) -> &[Functional] {
        &self.family
    }

    pub fn raw_family(&self) -> Vec<Vector> {
        self.family.iter().map(|l| l.coords().to_vec()).collect()
    }

    pub fn functional_on(&self, space: &Space, w: &Subspace) -> Option<&Functional> {
        space.subspace_index(w).map(|i| &self.family[i])
    }
}

fn kernel_in(space: &Space, w: &Subspace, l: &Functional) -> Subspace {
    let inner = rational_kernel(space.field(), l.coords());
    w.from_coords(space.field(), &inner)
}

/// The proper nonzero `V'` such that `V' ⊆ Ker(l_W) ∩ W` for every `W ⊋ V'`.
pub fn b_divisors(space: &Space, x: &BPoint) -> Vec<Subspace> {
    let f = space.field();
    let full = space.full_index();
    space
        .subspaces()
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != full)
        .filter(|&(i, _)| {
            space
                .inclusions()
                .iter()
                .filter(|inc| inc.sub == i)
                .all(|inc| inc.basis_in_sup.iter().all(|b| dot(f, x.family[inc.sup].coords(), b).is_zero()))
        })
        .map(|(_, s)| s.clone())
        .collect()
}

/// The flag `F` with `x ∈ B_F`, from the chain `V_0 = Ker(l_V) ∩ V`,
/// `V_(i+1) = Ker(l_(V_i)) ∩ V_i`; cross-checked against the set of boundary
/// divisors containing `x`.
pub fn b_classify(space: &Space, x: &BPoint) -> Result<Flag> {
    let f = space.field();
    let mut members = Vec::new();
    let mut cur = Subspace::full(space.dim());
    loop {
        let idx = space.subspace_index(&cur).expect("nonzero subspace");
        let next = kernel_in(space, &cur, &x.family[idx]);
        if next.is_zero() {
            break;
        }
        if next.dim() >= cur.dim() {
            return invariant("kernel chain does not decrease");
        }
        members.push(next.clone());
        cur = next;
    }
    let flag = Flag::new(f, space.dim(), members)?;
    let mut divisors = b_divisors(space, x);
    let mut expected = flag.members().to_vec();
    divisors.sort();
    expected.sort();
    if divisors != expected {
        return invariant(format!(
            "boundary divisors {:?} differ from the kernel chain {}",
            divisors,
            flag.key()
        ));
    }
    Ok(flag)
}

/// Builds the point of `B_F` whose induced forms on the successive quotients
/// `V_(i-1)/V_i` are `parts[i]` (in the complement coordinates of
/// [`Quotient`]); `parts[0]` lives on `V/V_0` and the last on `V_r`.
pub fn b_from_flag_data(space: &Space, flag: &Flag, parts: &[Functional]) -> Result<BPoint> {
    let f = space.field();
    let chain = flag.chain();
    if parts.len() != chain.len() - 1 {
        return rejected(format!("flag {} needs {} parts, got {}", flag.key(), chain.len() - 1, parts.len()));
    }
    // l on each V_(i-1), in its echelon coordinates
    let mut chain_forms: Vec<Vector> = Vec::with_capacity(parts.len());
    for (i, part) in parts.iter().enumerate() {
        let (w, s) = (&chain[i], &chain[i + 1]);
        let quot = Quotient::new(f, s, w)?;
        if part.dim() != quot.dim() {
            return rejected(format!("part {i} has dimension {}, quotient has {}", part.dim(), quot.dim()));
        }
        if !is_omega(f, part.coords()) {
            return rejected(format!("part {i} is not a point of Ω of its quotient"));
        }
        let form = (0..w.dim())
            .map(|j| {
                let mut e = vec![Element::ZERO; w.dim()];
                e[j] = Element::ONE;
                part.eval(f, &quot.project_coords(f, &e))
            })
            .collect();
        chain_forms.push(form);
    }
    let mut family = Vec::with_capacity(space.subspaces().len());
    for sub in space.subspaces() {
        // deepest chain member containing sub
        let i = (0..parts.len())
            .rev()
            .find(|&i| sub.is_subspace_of(f, &chain[i]))
            .expect("V contains everything");
        let outer = &chain[i];
        let vals = sub
            .rows()
            .iter()
            .map(|r| dot(f, &chain_forms[i], &outer.coords(f, r).expect("contained")))
            .collect();
        family.push(Functional::new(f, vals)?);
    }
    Ok(BPoint { family })
}

/// The open embedding `Ω -> B_V`.
pub fn b_from_omega(space: &Space, x: &PPoint) -> Result<BPoint> {
    b_from_flag_data(space, &Flag::trivial(space.dim()), std::slice::from_ref(&x.l))
}

/// All of `B_V(k_m)`, flag by flag, through [`b_from_flag_data`].
pub fn b_enumerate(space: &Space, m: u32) -> Result<Vec<BPoint>> {
    let f = space.field();
    let km = space.extension_elements(m)?;
    let mut out = Vec::new();
    for flag in space.flags() {
        let chain = flag.chain();
        let choices: Vec<Vec<Functional>> = chain
            .windows(2)
            .map(|w| omega_functionals(f, &km, w[0].dim() - w[1].dim()))
            .collect();
        if choices.iter().any(|c| c.is_empty()) {
            continue;
        }
        let mut idx = vec![0usize; choices.len()];
        loop {
            let parts: Vec<Functional> = idx.iter().zip(&choices).map(|(&i, c)| c[i].clone()).collect();
            out.push(b_from_flag_data(space, &flag, &parts)?);
            let mut pos = 0;
            loop {
                if pos == idx.len() {
                    break;
                }
                idx[pos] += 1;
                if idx[pos] < choices[pos].len() {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos == idx.len() {
                break;
            }
        }
    }
    Ok(out)
}

/// `π : B_V -> P_V`, `(l_W) -> l_V`.
pub fn pi_map(space: &Space, x: &BPoint) -> PPoint {
    PPoint { l: x.family[space.full_index()].clone() }
}

/// `ρ : B_V -> Q_V`: with `V_r` the smallest member of the flag of `x` (`V` for
/// the trivial flag), `r = 1 / l_(V_r)` on `V_r \ {0}` and zero elsewhere.
pub fn rho_map(space: &Space, x: &BPoint) -> Result<QPoint> {
    let flag = b_classify(space, x)?;
    let smallest = flag.smallest();
    let idx = space.subspace_index(&smallest).expect("nonzero");
    q_extend_by_zero(space, &smallest, x.family[idx].coords())
}

// ---------------------------------------------------------------------------

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Point {
    P(PPoint),
    Q(QPoint),
    B(BPoint),
}

impl Point {
    pub fn variety(&self) -> Variety {
        match self {
            Point::P(_) => Variety::P,
            Point::Q(_) => Variety::Q,
            Point::B(_) => Variety::B,
        }
    }
}

pub fn classify(space: &Space, x: &Point) -> Result<StratumKey> {
    Ok(match x {
        Point::P(p) => StratumKey::Subspace(p_classify(space, p)),
        Point::Q(q) => StratumKey::Subspace(q_classify(space, q)?),
        Point::B(b) => StratumKey::Flag(b_classify(space, b)?),
    })
}

/// The flag whose parabolic governs the stabilizer of `x`: `(V')` for a point
/// of `P_{V/V'}` or `Q_{V'}` (trivial for the open stratum), the stratum flag
/// for `B_V`.
pub fn stratum_flag(space: &Space, x: &Point) -> Result<Flag> {
    let f = space.field();
    let n = space.dim();
    let one = |s: Subspace| -> Result<Flag> {
        if s.is_zero() || s.is_full() {
            Ok(Flag::trivial(n))
        } else {
            Flag::new(f, n, vec![s])
        }
    };
    match x {
        Point::P(p) => one(p_classify(space, p)),
        Point::Q(q) => one(q_classify(space, q)?),
        Point::B(b) => b_classify(space, b),
    }
}

/// Every point of the variety over `k_m`.
pub fn enumerate(space: &Space, variety: Variety, m: u32) -> Result<Vec<Point>> {
    Ok(match variety {
        Variety::P => p_enumerate(space, m)?.into_iter().map(Point::P).collect(),
        Variety::Q => q_enumerate(space, m)?.into_iter().map(Point::Q).collect(),
        Variety::B => b_enumerate(space, m)?.into_iter().map(Point::B).collect(),
    })
}
