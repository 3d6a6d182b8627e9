//! `PGL(V)(k)` as an explicit list of normalized matrices, its right actions on
//! the three point types, brute-force and predicted stabilizers, and the
//! unipotent subgroups attached to flags.

use std::collections::HashSet;

use crate::error::{invariant, rejected, Result};
use crate::field::{Element, FieldCtx};
use crate::linalg::{dot, normalize, quotient_functional, rational_kernel, Flag, Functional, Matrix, Quotient, Subspace, Vector};
use crate::points::{b_classify, p_classify, q_classify, BPoint, PPoint, Point, QPoint};
use crate::space::{normalized_vectors, Space};

/// Largest group the brute-force routines will enumerate.
pub const MAX_GROUP_ORDER: u128 = 100_000;

/// An element of `PGL(V)(k)`: an invertible matrix over `k` scaled so its first
/// nonzero entry (row-major) is 1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupElement {
    m: Matrix,
}

impl std::fmt::Debug for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:?}", self.m)
    }
}

impl GroupElement {
    pub fn new(field: &FieldCtx, m: Matrix) -> Result<Self> {
        if m.rank(field) != m.dim() {
            return rejected("matrix is singular");
        }
        if m.entries().iter().any(|&x| !field.in_subfield(x, 1)) {
            return rejected("matrix entries must lie in k");
        }
        let n = m.dim();
        let entries = normalize(field, m.entries().to_vec()).expect("invertible");
        Ok(GroupElement { m: Matrix::from_entries(n, entries) })
    }

    pub fn identity(n: usize) -> Self {
        GroupElement { m: Matrix::identity(n) }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.m
    }

    pub fn dim(&self) -> usize {
        self.m.dim()
    }

    pub fn is_identity(&self) -> bool {
        self.m == Matrix::identity(self.m.dim())
    }

    pub fn mul(&self, field: &FieldCtx, other: &GroupElement) -> GroupElement {
        let prod = self.m.mul(field, &other.m);
        let n = prod.dim();
        GroupElement { m: Matrix::from_entries(n, normalize(field, prod.entries().to_vec()).expect("invertible")) }
    }

    pub fn inverse(&self, field: &FieldCtx) -> GroupElement {
        let inv = self.m.inverse(field).expect("invertible");
        let n = inv.dim();
        GroupElement { m: Matrix::from_entries(n, normalize(field, inv.entries().to_vec()).expect("invertible")) }
    }

    /// Order in `PGL`: the least `k >= 1` with `M^k` scalar.
    pub fn order(&self, field: &FieldCtx) -> u64 {
        let mut acc = self.m.clone();
        let mut k = 1;
        while !acc.is_scalar() {
            acc = acc.mul(field, &self.m);
            k += 1;
        }
        k
    }

    /// `g(W)`.
    pub fn image(&self, field: &FieldCtx, w: &Subspace) -> Subspace {
        w.image(field, &self.m)
    }

    pub fn preserves(&self, field: &FieldCtx, w: &Subspace) -> bool {
        &self.image(field, w) == w
    }

    /// Matrix of `g|_W : W -> W` in the echelon coordinates of `W` (`g` must
    /// preserve `W`).
    pub fn restrict(&self, field: &FieldCtx, w: &Subspace) -> Result<Matrix> {
        let d = w.dim();
        let mut entries = vec![Element::ZERO; d * d];
        for (j, b) in w.rows().iter().enumerate() {
            let c = match w.coords(field, &self.m.apply(field, b)) {
                Some(c) => c,
                None => return rejected("element does not preserve the subspace"),
            };
            for i in 0..d {
                entries[i * d + j] = c[i];
            }
        }
        Ok(Matrix::from_entries(d, entries))
    }
}

/// `|PGL_n(F_q)|`.
pub fn pgl_order(n: u32, q: u64) -> u128 {
    let qn = (q as u128).pow(n);
    (0..n).map(|i| qn - (q as u128).pow(i)).product::<u128>() / (q as u128 - 1)
}

/// All of `PGL(V)(k)`, sorted.
pub fn enumerate_pgl(space: &Space) -> Result<Vec<GroupElement>> {
    let n = space.dim();
    let order = pgl_order(n as u32, space.q());
    if order > MAX_GROUP_ORDER {
        return rejected(format!("|PGL({n}, {})| = {order} exceeds the enumeration bound {MAX_GROUP_ORDER}", space.q()));
    }
    let f = space.field();
    let first_rows = normalized_vectors(space.k_elements(), n);
    let mut out = Vec::with_capacity(order as usize);
    let mut rows: Vec<Vector> = Vec::with_capacity(n);
    fn extend(
        f: &FieldCtx,
        space: &Space,
        rows: &mut Vec<Vector>,
        out: &mut Vec<GroupElement>,
    ) {
        let n = space.dim();
        if rows.len() == n {
            let entries = rows.iter().flatten().copied().collect();
            out.push(GroupElement { m: Matrix::from_entries(n, entries) });
            return;
        }
        let span = Subspace::span(f, n, rows).expect("dimensions agree");
        for v in space.nonzero_vectors() {
            if !span.contains(f, v) {
                rows.push(v.clone());
                extend(f, space, rows, out);
                rows.pop();
            }
        }
    }
    for r in first_rows {
        rows.push(r);
        extend(f, space, &mut rows, &mut out);
        rows.pop();
    }
    out.sort();
    if out.len() as u128 != order {
        return invariant(format!("enumerated {} elements, expected {order}", out.len()));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// actions

/// `l · g = l ∘ g`.
pub fn act_p(space: &Space, x: &PPoint, g: &GroupElement) -> PPoint {
    let f = space.field();
    PPoint::new(space, g.m.pullback(f, x.coords())).expect("g invertible")
}

/// `(r · g)(v) = r(g v)`.
pub fn act_q(space: &Space, x: &QPoint, g: &GroupElement) -> QPoint {
    let f = space.field();
    let values = space
        .nonzero_vectors()
        .iter()
        .map(|v| x.value_at(space, &g.m.apply(f, v)).expect("g maps nonzero rational vectors to such"))
        .collect();
    QPoint::new(space, values).expect("action preserves the axioms")
}

/// `(x · g)_W = l_{g(W)} ∘ g|_W`.
pub fn act_b(space: &Space, x: &BPoint, g: &GroupElement) -> BPoint {
    let f = space.field();
    let family = space
        .subspaces()
        .iter()
        .map(|w| {
            let gw = g.image(f, w);
            let l = x.functional_on(space, &gw).expect("image is a nonzero subspace");
            w.rows()
                .iter()
                .map(|b| dot(f, l.coords(), &gw.coords(f, &g.m.apply(f, b)).expect("in image")))
                .collect()
        })
        .collect();
    BPoint::new(space, family).expect("action preserves the incidence relations")
}

pub fn act(space: &Space, x: &Point, g: &GroupElement) -> Point {
    match x {
        Point::P(p) => Point::P(act_p(space, p, g)),
        Point::Q(q) => Point::Q(act_q(space, q, g)),
        Point::B(b) => Point::B(act_b(space, b, g)),
    }
}

/// A group element with its permutation of rational vectors and of nonzero
/// subspaces precomputed, for repeated actions.
#[derive(Clone, Debug)]
pub struct PreparedElement {
    pub g: GroupElement,
    vec_perm: Vec<usize>,
    sub_perm: Vec<usize>,
    /// for each subspace `W`, the basis of `W` pushed through `g`, in the
    /// coordinates of `g(W)`
    sub_maps: Vec<Vec<Vector>>,
}

impl PreparedElement {
    pub fn new(space: &Space, g: GroupElement) -> Self {
        let f = space.field();
        let vec_perm = space
            .vectors()
            .iter()
            .map(|v| space.vector_index(&g.m.apply(f, v)).expect("rational"))
            .collect();
        let mut sub_perm = Vec::with_capacity(space.subspaces().len());
        let mut sub_maps = Vec::with_capacity(space.subspaces().len());
        for w in space.subspaces() {
            let gw = g.image(f, w);
            sub_perm.push(space.subspace_index(&gw).expect("nonzero"));
            sub_maps.push(w.rows().iter().map(|b| gw.coords(f, &g.m.apply(f, b)).expect("in image")).collect());
        }
        PreparedElement { g, vec_perm, sub_perm, sub_maps }
    }

    pub fn act(&self, space: &Space, x: &Point) -> Point {
        let f = space.field();
        match x {
            Point::P(p) => Point::P(act_p(space, p, &self.g)),
            Point::Q(q) => {
                let vals = q.values();
                let table = self.vec_perm[1..].iter().map(|&j| vals[j - 1]).collect();
                Point::Q(QPoint::new(space, table).expect("action preserves the axioms"))
            }
            Point::B(b) => {
                let fam = b.family();
                let family = self
                    .sub_maps
                    .iter()
                    .zip(&self.sub_perm)
                    .map(|(basis, &j)| basis.iter().map(|c| dot(f, fam[j].coords(), c)).collect())
                    .collect();
                Point::B(BPoint::new(space, family).expect("action preserves the incidence relations"))
            }
        }
    }

    /// Whether `x · g = x`, without renormalizing.
    pub fn fixes(&self, space: &Space, x: &Point) -> bool {
        self.act(space, x) == *x
    }
}

pub fn prepare(space: &Space, group: &[GroupElement]) -> Vec<PreparedElement> {
    group.iter().map(|g| PreparedElement::new(space, g.clone())).collect()
}

// ---------------------------------------------------------------------------
// stabilizers

/// Fails with an invariant violation unless `set` is closed under products and
/// inverses.
pub fn check_subgroup(field: &FieldCtx, set: &[GroupElement]) -> Result<()> {
    let members: HashSet<&GroupElement> = set.iter().collect();
    for a in set {
        if !members.contains(&a.inverse(field)) {
            return invariant(format!("{a:?} has no inverse in the set"));
        }
        for b in set {
            if !members.contains(&a.mul(field, b)) {
                return invariant(format!("{a:?} * {b:?} leaves the set"));
            }
        }
    }
    Ok(())
}

/// `{g : x · g = x}`, sorted, checked to be a subgroup.
pub fn stabilizer_bruteforce(space: &Space, group: &[PreparedElement], x: &Point) -> Result<Vec<GroupElement>> {
    let stab: Vec<GroupElement> = group.iter().filter(|pg| pg.fixes(space, x)).map(|pg| pg.g.clone()).collect();
    check_subgroup(space.field(), &stab)?;
    Ok(stab)
}

/// Which branch of the fixpoint criterion fired.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FixWitness {
    pub d: usize,
    pub lambda: Element,
}

fn twist(field: &FieldCtx, l: &[Element], j: i64) -> Vector {
    l.iter().map(|&c| field.frobenius_pow(c, -j)).collect()
}

/// Criterion for `g` (a matrix over `k` acting on `k^N`) to fix the Ω-point
/// `l`: some `d | N` and `λ ∈ k_d^×` such that, with `U` spanned by the twists
/// `l^(F^(ds))`, (i) `l^(F^N) ∈ U` and (ii) every twist `l^(F^(ds+i))` is an
/// eigenvector of `g^T` with eigenvalue `F^(-i)(λ)`. Returns the smallest such
/// `d`.
pub fn fixpoint_witness(field: &FieldCtx, l: &[Element], g: &Matrix) -> Result<Option<FixWitness>> {
    let n = l.len();
    if g.dim() != n {
        return rejected("matrix and functional dimensions differ");
    }
    if n == 0 || l.iter().all(|x| x.is_zero()) || !rational_kernel(field, l).is_zero() {
        return rejected("not a point of Ω");
    }
    let j0 = l.iter().position(|x| !x.is_zero()).unwrap();
    let lg = g.pullback(field, l);
    let lambda = field.div(lg[j0], l[j0]).unwrap();
    if lambda.is_zero() {
        return Ok(None);
    }
    let twists: Vec<Vector> = (0..=n as i64).map(|j| twist(field, l, j)).collect();
    for d in (1..=n).filter(|d| n.is_multiple_of(*d)) {
        if !field.in_subfield(lambda, d as u32) {
            continue;
        }
        let u: Vec<Vector> = (0..n / d).map(|s| twists[d * s].clone()).collect();
        let mut with_last = u.clone();
        with_last.push(twists[n].clone());
        if crate::linalg::rank(field, &with_last) != crate::linalg::rank(field, &u) {
            continue;
        }
        let eigen = (0..n).all(|j| {
            let mu = field.frobenius_pow(lambda, -((j % d) as i64));
            let lhs = g.pullback(field, &twists[j]);
            lhs.iter().zip(&twists[j]).all(|(&a, &b)| a == field.mul(mu, b))
        });
        if eigen {
            return Ok(Some(FixWitness { d, lambda }));
        }
    }
    Ok(None)
}

pub fn fixpoint_check_omega(field: &FieldCtx, l: &[Element], g: &Matrix) -> Result<bool> {
    Ok(fixpoint_witness(field, l, g)?.is_some())
}

/// For each consecutive pair `(W, S)` of the chain `V ⊋ V_0 ⊋ ... ⊋ {0}`, the
/// quotient `W/S` and the induced Ω-point on it.
fn chain_blocks(space: &Space, x: &Point) -> Result<Vec<(Quotient, Functional)>> {
    let f = space.field();
    let n = space.dim();
    let full = Subspace::full(n);
    let zero = Subspace::zero(n);
    match x {
        Point::P(p) => {
            let sub = p_classify(space, p);
            let lbar = quotient_functional(f, p.coords(), &sub, &full)?;
            Ok(vec![(Quotient::new(f, &sub, &full)?, lbar)])
        }
        Point::Q(q) => {
            let sub = q_classify(space, q)?;
            let l: Vector = sub
                .rows()
                .iter()
                .map(|w| f.inv(q.value_at(space, w).expect("rational")).ok_or_else(|| {
                    crate::Error::Invariant("reciprocal map vanishes on its support".into())
                }))
                .collect::<Result<_>>()?;
            Ok(vec![(Quotient::new(f, &zero, &sub)?, Functional::new(f, l)?)])
        }
        Point::B(b) => {
            let flag = b_classify(space, b)?;
            let chain = flag.chain();
            chain
                .windows(2)
                .map(|w| {
                    let l = b.functional_on(space, &w[0]).expect("nonzero");
                    Ok((Quotient::new(f, &w[1], &w[0])?, quotient_functional(f, l.coords(), &w[1], &w[0])?))
                })
                .collect()
        }
    }
}

/// The subspaces a stabilizing element must preserve.
fn preserved_subspaces(space: &Space, x: &Point) -> Result<Vec<Subspace>> {
    Ok(match x {
        Point::P(p) => vec![p_classify(space, p)],
        Point::Q(q) => vec![q_classify(space, q)?],
        Point::B(b) => b_classify(space, b)?.members().to_vec(),
    })
}

/// Membership in the stabilizer as predicted by the block structure: `g`
/// preserves the stratum subspaces and each induced block fixes the induced
/// Ω-point.
pub fn predicted_member(space: &Space, blocks: &[(Quotient, Functional)], preserved: &[Subspace], g: &GroupElement) -> Result<bool> {
    let f = space.field();
    if !preserved.iter().all(|s| g.preserves(f, s)) {
        return Ok(false);
    }
    for (quot, l) in blocks {
        let gbar = quot.induced_map(f, g.matrix())?;
        if !fixpoint_check_omega(f, l.coords(), &gbar)? {
            return Ok(false);
        }
    }
    Ok(true)
}

pub fn stabilizer_predicted(space: &Space, group: &[GroupElement], x: &Point) -> Result<Vec<GroupElement>> {
    let blocks = chain_blocks(space, x)?;
    let preserved = preserved_subspaces(space, x)?;
    let mut out = Vec::new();
    for g in group {
        if predicted_member(space, &blocks, &preserved, g)? {
            out.push(g.clone());
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// unipotent subgroups

/// `{g : (g - 1) V_(i-1) ⊆ V_i}` along the chain of `flag`, allowing any scalar
/// representative of `g`.
pub fn unipotent_radical_k(space: &Space, group: &[GroupElement], flag: &Flag) -> Vec<GroupElement> {
    let f = space.field();
    let chain = flag.chain();
    let id = Matrix::identity(space.dim());
    group
        .iter()
        .filter(|g| {
            space.k_units().iter().any(|&c| {
                let h = g.matrix().scale(f, c).sub(f, &id);
                chain.windows(2).all(|w| w[0].rows().iter().all(|v| w[1].contains(f, &h.apply(f, v))))
            })
        })
        .cloned()
        .collect()
}

fn is_p_power(mut k: u64, p: u64) -> bool {
    while k.is_multiple_of(p) {
        k /= p;
    }
    k == 1
}

/// Whether some scalar multiple `cM` satisfies `(cM - 1)^n = 0`.
pub fn is_unipotent_matrix(field: &FieldCtx, k_units: &[Element], g: &GroupElement) -> bool {
    let n = g.dim();
    let id = Matrix::identity(n);
    k_units.iter().any(|&c| {
        let h = g.matrix().scale(field, c).sub(field, &id);
        let mut acc = id.clone();
        for _ in 0..n {
            acc = acc.mul(field, &h);
        }
        acc.is_zero()
    })
}

/// Elements of `p`-power order, cross-checked against nilpotence of `cM - 1`.
pub fn unipotent_elements(space: &Space, set: &[GroupElement]) -> Result<Vec<GroupElement>> {
    let f = space.field();
    let mut out = Vec::new();
    for g in set {
        let by_order = is_p_power(g.order(f), f.p() as u64);
        let by_matrix = is_unipotent_matrix(f, space.k_units(), g);
        if by_order != by_matrix {
            return invariant(format!("unipotence criteria disagree on {g:?}"));
        }
        if by_order {
            out.push(g.clone());
        }
    }
    Ok(out)
}

/// The subgroup generated by `gens`.
pub fn generate(field: &FieldCtx, n: usize, gens: &[GroupElement]) -> Vec<GroupElement> {
    let mut seen: HashSet<GroupElement> = HashSet::new();
    let id = GroupElement::identity(n);
    seen.insert(id.clone());
    let mut frontier = vec![id];
    while let Some(a) = frontier.pop() {
        for g in gens {
            let b = a.mul(field, g);
            if seen.insert(b.clone()) {
                frontier.push(b);
            }
        }
    }
    let mut out: Vec<_> = seen.into_iter().collect();
    out.sort();
    out
}

/// `O_p(S)`, the largest normal `p`-subgroup: the elements whose normal closure
/// in `S` is a `p`-group.
pub fn normal_p_core(space: &Space, set: &[GroupElement]) -> Vec<GroupElement> {
    let f = space.field();
    let p = f.p() as u64;
    let n = space.dim();
    let inverses: Vec<GroupElement> = set.iter().map(|h| h.inverse(f)).collect();
    let mut good: HashSet<GroupElement> = HashSet::new();
    let mut bad: HashSet<GroupElement> = HashSet::new();
    for g in set {
        if good.contains(g) || bad.contains(g) {
            continue;
        }
        if !is_p_power(g.order(f), p) {
            bad.insert(g.clone());
            continue;
        }
        let mut conj: Vec<GroupElement> = set.iter().zip(&inverses).map(|(h, hi)| h.mul(f, g).mul(f, hi)).collect();
        conj.sort();
        conj.dedup();
        let closure = generate(f, n, &conj);
        let is_p_group = closure.iter().all(|c| is_p_power(c.order(f), p));
        if is_p_group {
            good.extend(closure);
        } else {
            bad.insert(g.clone());
        }
    }
    let mut out: Vec<_> = set.iter().filter(|g| good.contains(g)).cloned().collect();
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::points::{b_from_omega, omega_p_points, q_from_omega};

    #[test]
    fn group_orders() {
        assert_eq!(enumerate_pgl(&Space::new(2, 1, 2, &[1]).unwrap()).unwrap().len(), 6);
        assert_eq!(enumerate_pgl(&Space::new(2, 1, 3, &[1]).unwrap()).unwrap().len(), 168);
        assert_eq!(enumerate_pgl(&Space::new(3, 1, 2, &[1]).unwrap()).unwrap().len(), 24);
        assert_eq!(pgl_order(2, 4), 60);
    }

    #[test]
    fn omega_stabilizer_over_f4() {
        let s = Space::new(2, 1, 2, &[2]).unwrap();
        let group = enumerate_pgl(&s).unwrap();
        let prepared = prepare(&s, &group);
        for l in omega_p_points(&s, 2).unwrap() {
            let x = Point::P(l.clone());
            let stab = stabilizer_bruteforce(&s, &prepared, &x).unwrap();
            assert_eq!(stab.len(), 3);
            assert_eq!(stabilizer_predicted(&s, &group, &x).unwrap(), stab);
            for g in &group {
                let w = fixpoint_witness(s.field(), l.coords(), g.matrix()).unwrap();
                match g.order(s.field()) {
                    1 => assert_eq!(w.map(|w| w.d), Some(1)),
                    2 => assert!(w.is_none()),
                    3 => assert_eq!(w.map(|w| w.d), Some(2)),
                    o => panic!("unexpected order {o}"),
                }
            }
            assert_eq!(unipotent_elements(&s, &stab).unwrap().len(), 1);
        }
        assert_eq!(unipotent_elements(&s, &group).unwrap().len(), 4);
    }

    #[test]
    fn unipotent_radicals() {
        let s = Space::new(2, 1, 2, &[1]).unwrap();
        let group = enumerate_pgl(&s).unwrap();
        assert_eq!(unipotent_radical_k(&s, &group, &Flag::trivial(2)).len(), 1);
        let line = Subspace::span(s.field(), 2, &[vec![Element::ZERO, Element::ONE]]).unwrap();
        let flag = Flag::new(s.field(), 2, vec![line]).unwrap();
        assert_eq!(unipotent_radical_k(&s, &group, &flag).len(), 2);
        let s3 = Space::new(2, 1, 3, &[1]).unwrap();
        let g3 = enumerate_pgl(&s3).unwrap();
        let complete = s3.flags().into_iter().find(|f| f.len() == 2).unwrap();
        assert_eq!(unipotent_radical_k(&s3, &g3, &complete).len(), 8);
        assert_eq!(normal_p_core(&s3, &g3).len(), 1);
    }

    #[test]
    fn actions_agree_with_prepared() {
        let s = Space::new(2, 1, 2, &[2]).unwrap();
        let group = enumerate_pgl(&s).unwrap();
        let prepared = prepare(&s, &group);
        for l in omega_p_points(&s, 2).unwrap() {
            let q = q_from_omega(&s, &l).unwrap();
            let b = b_from_omega(&s, &l).unwrap();
            for pg in &prepared {
                assert_eq!(pg.act(&s, &Point::Q(q.clone())), Point::Q(act_q(&s, &q, &pg.g)));
                assert_eq!(pg.act(&s, &Point::B(b.clone())), Point::B(act_b(&s, &b, &pg.g)));
            }
        }
    }

    #[test]
    fn rejects_rational_functional() {
        let s = Space::new(2, 1, 2, &[1]).unwrap();
        let r = fixpoint_witness(s.field(), &[Element::ONE, Element::ZERO], &Matrix::identity(2));
        assert!(r.is_err());
    }
}
