//! Exact linear algebra over `k` and its extensions inside the ambient field:
//! echelon forms, canonical subspaces, flags, complements and quotients.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{invariant, rejected, Result};
use crate::field::{nullspace_mod_p, Element, FieldCtx};

pub type Vector = Vec<Element>;

/// Reduced row-echelon form of `rows`. Zero rows are dropped from the
/// returned matrix, so its length is the rank.
pub fn rref(ctx: &FieldCtx, rows: &[Vector]) -> Result<(Vec<Vector>, usize)> {
    let cols = rows.first().map_or(0, |r| r.len());
    if rows.iter().any(|r| r.len() != cols) {
        return rejected("ragged rows");
    }
    let mut m: Vec<Vector> = rows.to_vec();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..m.len()).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, pr);
        let s = ctx.inv(m[r][c]).unwrap();
        for x in m[r].iter_mut() {
            *x = ctx.mul(*x, s);
        }
        for i in 0..m.len() {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c];
                for j in c..cols {
                    let t = ctx.mul(f, m[r][j]);
                    m[i][j] = ctx.sub(m[i][j], t);
                }
            }
        }
        r += 1;
        if r == m.len() {
            break;
        }
    }
    m.truncate(r);
    Ok((m, r))
}

pub fn rank(ctx: &FieldCtx, rows: &[Vector]) -> usize {
    rref(ctx, rows).map_or(0, |(_, r)| r)
}

pub fn dot(ctx: &FieldCtx, a: &[Element], b: &[Element]) -> Element {
    a.iter()
        .zip(b)
        .fold(Element::ZERO, |acc, (&x, &y)| ctx.add(acc, ctx.mul(x, y)))
}

fn pivot_of(row: &[Element]) -> usize {
    row.iter().position(|x| !x.is_zero()).expect("echelon rows are nonzero")
}

/// A subspace of `k^n`, held as its reduced row-echelon basis. Two subspaces
/// are equal exactly when their echelon bases are equal.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Subspace {
    ambient: usize,
    rows: Vec<Vector>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace { ambient, rows: Vec::new() }
    }

    pub fn full(ambient: usize) -> Self {
        let rows = (0..ambient)
            .map(|i| (0..ambient).map(|j| if i == j { Element::ONE } else { Element::ZERO }).collect())
            .collect();
        Subspace { ambient, rows }
    }

    pub fn span(ctx: &FieldCtx, ambient: usize, vectors: &[Vector]) -> Result<Self> {
        if vectors.iter().any(|v| v.len() != ambient) {
            return rejected("vector length differs from the ambient dimension");
        }
        let (rows, _) = rref(ctx, vectors)?;
        Ok(Subspace { ambient, rows })
    }

    /// Wraps rows that are already in reduced echelon form.
    pub(crate) fn from_echelon(ambient: usize, rows: Vec<Vector>) -> Self {
        Subspace { ambient, rows }
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.rows.len() == self.ambient
    }

    pub fn rows(&self) -> &[Vector] {
        &self.rows
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.iter().map(|r| pivot_of(r)).collect()
    }

    /// Coordinates of `v` in the echelon basis, or `None` if `v` is not in the span.
    pub fn coords(&self, ctx: &FieldCtx, v: &[Element]) -> Option<Vector> {
        let c: Vector = self.pivots().iter().map(|&p| v[p]).collect();
        (self.combine(ctx, &c) == v).then_some(c)
    }

    /// `sum_i c_i * row_i`.
    pub fn combine(&self, ctx: &FieldCtx, c: &[Element]) -> Vector {
        let mut out = vec![Element::ZERO; self.ambient];
        for (ci, row) in c.iter().zip(&self.rows) {
            if ci.is_zero() {
                continue;
            }
            for (o, &x) in out.iter_mut().zip(row) {
                *o = ctx.add(*o, ctx.mul(*ci, x));
            }
        }
        out
    }

    pub fn contains(&self, ctx: &FieldCtx, v: &[Element]) -> bool {
        self.coords(ctx, v).is_some()
    }

    pub fn is_subspace_of(&self, ctx: &FieldCtx, other: &Subspace) -> bool {
        self.rows.iter().all(|r| other.contains(ctx, r))
    }

    /// Image under the linear map `v -> g v`.
    pub fn image(&self, ctx: &FieldCtx, g: &Matrix) -> Subspace {
        let imgs: Vec<Vector> = self.rows.iter().map(|r| g.apply(ctx, r)).collect();
        Subspace::span(ctx, self.ambient, &imgs).expect("dimensions agree")
    }

    /// Rewrites a subspace given in coordinates of `self` as a subspace of the ambient space.
    pub fn from_coords(&self, ctx: &FieldCtx, inner: &Subspace) -> Subspace {
        let vs: Vec<Vector> = inner.rows.iter().map(|c| self.combine(ctx, c)).collect();
        Subspace::span(ctx, self.ambient, &vs).expect("dimensions agree")
    }

    /// This subspace in the echelon coordinates of `outer` (which must contain it).
    pub fn in_coords_of(&self, ctx: &FieldCtx, outer: &Subspace) -> Result<Subspace> {
        let cs = self
            .rows
            .iter()
            .map(|r| outer.coords(ctx, r))
            .collect::<Option<Vec<_>>>();
        match cs {
            Some(cs) => Subspace::span(ctx, outer.dim(), &cs),
            None => rejected("subspace is not contained in the given space"),
        }
    }

    /// All vectors of the subspace whose coordinates lie in `scalars`.
    pub fn vectors(&self, ctx: &FieldCtx, scalars: &[Element]) -> Vec<Vector> {
        let d = self.dim();
        let mut digits = vec![0u32; d];
        let mut out = Vec::new();
        loop {
            let c: Vector = digits.iter().map(|&i| scalars[i as usize]).collect();
            out.push(self.combine(ctx, &c));
            if !crate::field::odometer(&mut digits, scalars.len() as u32) {
                break;
            }
        }
        out
    }

    /// `[(r0),(r1),...]` with element tokens; `[]` for the zero subspace.
    pub fn key(&self) -> String {
        let rows: Vec<String> = self.rows.iter().map(|r| vector_key(r)).collect();
        format!("[{}]", rows.join(","))
    }

    pub fn parse_key(ctx: &FieldCtx, ambient: usize, key: &str) -> Result<Self> {
        let inner = key
            .trim()
            .strip_prefix('[')
            .and_then(|s| s.strip_suffix(']'))
            .ok_or_else(|| crate::Error::Rejected(format!("bad subspace key {key:?}")))?;
        let mut vs = Vec::new();
        for part in inner.split(')').map(str::trim).filter(|s| !s.is_empty()) {
            let part = part.trim_start_matches(',').trim();
            vs.push(parse_vector_key(ctx, &format!("{part})"))?);
        }
        let s = Subspace::span(ctx, ambient, &vs)?;
        if s.dim() != vs.len() {
            return rejected(format!("subspace key {key:?} has dependent rows"));
        }
        Ok(s)
    }
}

impl Ord for Subspace {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.ambient, self.rows.len())
            .cmp(&(other.ambient, other.rows.len()))
            .then_with(|| self.rows.iter().flatten().cmp(other.rows.iter().flatten()))
    }
}

impl PartialOrd for Subspace {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Subspace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

pub fn vector_key(v: &[Element]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.token()).collect();
    format!("({})", parts.join(","))
}

pub fn parse_vector_key(ctx: &FieldCtx, key: &str) -> Result<Vector> {
    let inner = key
        .trim()
        .strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .ok_or_else(|| crate::Error::Rejected(format!("bad vector key {key:?}")))?;
    inner.split(',').map(|t| ctx.parse_token(t)).collect()
}

/// A strictly increasing chain of proper nonzero subspaces. Members are kept
/// largest first: `members[0] = V_0 ⊋ V_1 ⊋ ... ⊋ V_r`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Flag {
    ambient: usize,
    members: Vec<Subspace>,
}

impl Flag {
    pub fn trivial(ambient: usize) -> Self {
        Flag { ambient, members: Vec::new() }
    }

    /// Accepts members in any order; rejects anything that is not a strict chain
    /// of proper nonzero subspaces.
    pub fn new(ctx: &FieldCtx, ambient: usize, mut members: Vec<Subspace>) -> Result<Self> {
        members.sort_by(|a, b| b.dim().cmp(&a.dim()));
        for m in &members {
            if m.ambient_dim() != ambient || m.is_zero() || m.is_full() {
                return rejected("flag members must be proper nonzero subspaces of V");
            }
        }
        for w in members.windows(2) {
            if w[0].dim() == w[1].dim() || !w[1].is_subspace_of(ctx, &w[0]) {
                return rejected("flag members do not form a strict chain");
            }
        }
        Ok(Flag { ambient, members })
    }

    pub fn ambient_dim(&self) -> usize {
        self.ambient
    }

    pub fn members(&self) -> &[Subspace] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_trivial(&self) -> bool {
        self.members.is_empty()
    }

    /// `[V, V_0, ..., V_r, {0}]`.
    pub fn chain(&self) -> Vec<Subspace> {
        let mut out = vec![Subspace::full(self.ambient)];
        out.extend(self.members.iter().cloned());
        out.push(Subspace::zero(self.ambient));
        out
    }

    /// Smallest member, or `V` for the trivial flag.
    pub fn smallest(&self) -> Subspace {
        self.members.last().cloned().unwrap_or_else(|| Subspace::full(self.ambient))
    }

    /// Largest member, or `{0}` for the trivial flag.
    pub fn largest(&self) -> Subspace {
        self.members.first().cloned().unwrap_or_else(|| Subspace::zero(self.ambient))
    }

    pub fn key(&self) -> String {
        let parts: Vec<String> = self.members.iter().rev().map(|m| m.key()).collect();
        format!("{{{}}}", parts.join(" < "))
    }
}

/// Refinement order: every member of `a` is a member of `b`.
pub fn flag_leq(a: &Flag, b: &Flag) -> bool {
    a.members.iter().all(|m| b.members.contains(m))
}

impl Ord for Flag {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.ambient, self.members.len())
            .cmp(&(other.ambient, other.members.len()))
            .then_with(|| self.members.iter().rev().cmp(other.members.iter().rev()))
    }
}

impl PartialOrd for Flag {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Flag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.key())
    }
}

/// A nonzero linear form on `K^n` given by its values on the standard basis,
/// scaled so that the first nonzero value is 1.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Functional {
    coords: Vector,
}

impl Functional {
    pub fn new(ctx: &FieldCtx, coords: Vector) -> Result<Self> {
        match normalize(ctx, coords) {
            Some(coords) => Ok(Functional { coords }),
            None => rejected("functional is zero"),
        }
    }

    pub fn coords(&self) -> &[Element] {
        &self.coords
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn eval(&self, ctx: &FieldCtx, v: &[Element]) -> Element {
        dot(ctx, &self.coords, v)
    }

    pub fn into_coords(self) -> Vector {
        self.coords
    }
}

impl fmt::Debug for Functional {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", vector_key(&self.coords))
    }
}

/// Scales `v` so its first nonzero entry is 1; `None` if `v` is zero.
pub fn normalize(ctx: &FieldCtx, mut v: Vector) -> Option<Vector> {
    let lead = *v.iter().find(|x| !x.is_zero())?;
    let s = ctx.inv(lead)?;
    for x in v.iter_mut() {
        *x = ctx.mul(*x, s);
    }
    Some(v)
}

/// `{v in k^n : sum_i l_i v_i = 0}` for a form with coefficients in the ambient
/// field. Each unknown `v_i` is expanded over an `F_p`-basis of `k`, and the
/// resulting `F_p`-linear system (one equation per ambient coordinate) is
/// solved exactly.
pub fn rational_kernel(ctx: &FieldCtx, l: &[Element]) -> Subspace {
    let n = l.len();
    let k_basis = ctx.subfield_basis(1).expect("k is always a subfield");
    let e = k_basis.len();
    let d = ctx.degree();
    let mut rows = vec![vec![0u32; n * e]; d];
    for (i, &li) in l.iter().enumerate() {
        for (j, &b) in k_basis.iter().enumerate() {
            let c = ctx.coeff_vec(ctx.mul(b, li));
            for (r, &cr) in c.iter().enumerate() {
                rows[r][i * e + j] = cr;
            }
        }
    }
    let null = nullspace_mod_p(&rows, n * e, ctx.p());
    let vs: Vec<Vector> = null
        .iter()
        .map(|a| {
            (0..n)
                .map(|i| {
                    (0..e).fold(Element::ZERO, |acc, j| {
                        let s = ctx.from_int(a[i * e + j] as i64);
                        ctx.add(acc, ctx.mul(s, k_basis[j]))
                    })
                })
                .collect()
        })
        .collect();
    Subspace::span(ctx, n, &vs).expect("dimensions agree")
}

/// All `d`-dimensional subspaces of `k^n`, produced directly as echelon forms
/// and sorted.
pub fn enumerate_subspaces(ctx: &FieldCtx, k_elems: &[Element], n: usize, d: usize) -> Result<Vec<Subspace>> {
    if d > n {
        return rejected(format!("dimension {d} exceeds ambient dimension {n}"));
    }
    let mut out = Vec::new();
    for pivots in combinations(n, d) {
        // free slots: (row i, column c) with c > pivot_i and c not a pivot
        let free: Vec<(usize, usize)> = pivots
            .iter()
            .enumerate()
            .flat_map(|(i, &pc)| ((pc + 1)..n).filter(|c| !pivots.contains(c)).map(move |c| (i, c)))
            .collect();
        let mut digits = vec![0u32; free.len()];
        loop {
            let mut rows = vec![vec![Element::ZERO; n]; d];
            for (i, &pc) in pivots.iter().enumerate() {
                rows[i][pc] = Element::ONE;
            }
            for (&(i, c), &dg) in free.iter().zip(&digits) {
                rows[i][c] = k_elems[dg as usize];
            }
            out.push(Subspace::from_echelon(n, rows));
            if !crate::field::odometer(&mut digits, k_elems.len() as u32) {
                break;
            }
        }
    }
    let _ = ctx;
    out.sort();
    Ok(out)
}

fn combinations(n: usize, d: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, d: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == d {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, d, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, d, &mut Vec::new(), &mut out);
    out
}

/// Every flag of `k^n` (including the trivial one), sorted.
pub fn enumerate_flags(ctx: &FieldCtx, k_elems: &[Element], n: usize) -> Result<Vec<Flag>> {
    let mut proper = Vec::new();
    for d in 1..n {
        proper.extend(enumerate_subspaces(ctx, k_elems, n, d)?);
    }
    // chains built largest first; each extension is a proper subspace of the last member
    let mut out = vec![Flag::trivial(n)];
    let mut frontier: Vec<Vec<usize>> = (0..proper.len()).map(|i| vec![i]).collect();
    while !frontier.is_empty() {
        let mut next = Vec::new();
        for chain in frontier {
            let last = &proper[*chain.last().unwrap()];
            for (j, s) in proper.iter().enumerate() {
                if s.dim() < last.dim() && s.is_subspace_of(ctx, last) {
                    let mut c = chain.clone();
                    c.push(j);
                    next.push(c);
                }
            }
            let members = chain.iter().map(|&i| proper[i].clone()).collect();
            out.push(Flag { ambient: n, members });
        }
        frontier = next;
    }
    out.sort();
    Ok(out)
}

/// Number of `d`-dimensional subspaces of an `n`-dimensional space over `F_q`.
pub fn gaussian_binomial(n: u32, d: u32, q: u64) -> u128 {
    if d > n {
        return 0;
    }
    let q = q as u128;
    let mut num = 1u128;
    let mut den = 1u128;
    for i in 0..d {
        num *= q.pow(n - i) - 1;
        den *= q.pow(i + 1) - 1;
    }
    num / den
}

/// Quotient `W / V'` presented through the complement of `V'` in `W` spanned
/// by the echelon rows of `W` at the non-pivot positions of `V'` (in `W`
/// coordinates).
#[derive(Clone, Debug)]
pub struct Quotient {
    whole: Subspace,
    sub_in_whole: Subspace,
    free: Vec<usize>,
}

impl Quotient {
    pub fn new(ctx: &FieldCtx, sub: &Subspace, whole: &Subspace) -> Result<Self> {
        let sub_in_whole = sub.in_coords_of(ctx, whole)?;
        let piv = sub_in_whole.pivots();
        let free = (0..whole.dim()).filter(|c| !piv.contains(c)).collect();
        Ok(Quotient { whole: whole.clone(), sub_in_whole, free })
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    /// Positions (in `W` coordinates) of the complement basis.
    pub fn free_positions(&self) -> &[usize] {
        &self.free
    }

    pub fn complement(&self) -> Subspace {
        let rows = self.free.iter().map(|&i| self.whole.rows()[i].clone()).collect();
        Subspace::from_echelon(self.whole.ambient_dim(), rows)
    }

    /// Coordinates of `v mod V'` in the complement basis, from `W` coordinates.
    pub fn project_coords(&self, ctx: &FieldCtx, c: &[Element]) -> Vector {
        let mut c = c.to_vec();
        for row in self.sub_in_whole.rows() {
            let pc = pivot_of(row);
            let f = c[pc];
            if f.is_zero() {
                continue;
            }
            for (x, &r) in c.iter_mut().zip(row) {
                *x = ctx.sub(*x, ctx.mul(f, r));
            }
        }
        self.free.iter().map(|&i| c[i]).collect()
    }

    /// Coordinates of `v mod V'` for a vector `v` of `W`.
    pub fn project(&self, ctx: &FieldCtx, v: &[Element]) -> Result<Vector> {
        match self.whole.coords(ctx, v) {
            Some(c) => Ok(self.project_coords(ctx, &c)),
            None => rejected("vector is not in the quotiented space"),
        }
    }

    /// Matrix of the map induced by `g` (which must preserve `V'` and `W`).
    pub fn induced_map(&self, ctx: &FieldCtx, g: &Matrix) -> Result<Matrix> {
        let comp = self.complement();
        let n = self.dim();
        let mut entries = vec![Element::ZERO; n * n];
        for (j, b) in comp.rows().iter().enumerate() {
            let img = self.project(ctx, &g.apply(ctx, b))?;
            for i in 0..n {
                entries[i * n + j] = img[i];
            }
        }
        Ok(Matrix::from_entries(n, entries))
    }
}

/// Deterministic complement of `sub` in `whole`.
pub fn complement(ctx: &FieldCtx, sub: &Subspace, whole: &Subspace) -> Result<Subspace> {
    Ok(Quotient::new(ctx, sub, whole)?.complement())
}

/// The form induced on `W / V'` by a form `l` on `W` (given in `W` coordinates)
/// that vanishes on `V'`, expressed in the complement coordinates.
pub fn quotient_functional(ctx: &FieldCtx, l: &[Element], sub: &Subspace, whole: &Subspace) -> Result<Functional> {
    if l.len() != whole.dim() {
        return rejected("functional length differs from the subspace dimension");
    }
    let q = Quotient::new(ctx, sub, whole)?;
    if q.sub_in_whole.rows().iter().any(|r| !dot(ctx, l, r).is_zero()) {
        return rejected("functional does not vanish on the subspace");
    }
    let induced: Vector = q.free.iter().map(|&i| l[i]).collect();
    match Functional::new(ctx, induced) {
        Ok(f) => Ok(f),
        Err(_) => invariant("induced functional vanished"),
    }
}

/// Square matrix over the ambient field, row-major. Acts on column vectors.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Matrix {
    n: usize,
    entries: Vec<Element>,
}

impl Matrix {
    pub fn from_entries(n: usize, entries: Vec<Element>) -> Self {
        assert_eq!(entries.len(), n * n);
        Matrix { n, entries }
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![Element::ZERO; n * n];
        for i in 0..n {
            entries[i * n + i] = Element::ONE;
        }
        Matrix { n, entries }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn entries(&self) -> &[Element] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Element {
        self.entries[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vector> {
        self.entries.chunks(self.n).map(|c| c.to_vec()).collect()
    }

    pub fn mul(&self, ctx: &FieldCtx, other: &Matrix) -> Matrix {
        let n = self.n;
        let mut entries = vec![Element::ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..n {
                    let t = ctx.mul(a, other.get(k, j));
                    entries[i * n + j] = ctx.add(entries[i * n + j], t);
                }
            }
        }
        Matrix { n, entries }
    }

    /// `g v`.
    pub fn apply(&self, ctx: &FieldCtx, v: &[Element]) -> Vector {
        self.entries.chunks(self.n).map(|row| dot(ctx, row, v)).collect()
    }

    /// The row vector `l g`, i.e. the form `l ∘ g`.
    pub fn pullback(&self, ctx: &FieldCtx, l: &[Element]) -> Vector {
        (0..self.n)
            .map(|j| (0..self.n).fold(Element::ZERO, |acc, i| ctx.add(acc, ctx.mul(l[i], self.get(i, j)))))
            .collect()
    }

    pub fn scale(&self, ctx: &FieldCtx, c: Element) -> Matrix {
        Matrix { n: self.n, entries: self.entries.iter().map(|&x| ctx.mul(c, x)).collect() }
    }

    pub fn sub(&self, ctx: &FieldCtx, other: &Matrix) -> Matrix {
        let entries = self.entries.iter().zip(&other.entries).map(|(&a, &b)| ctx.sub(a, b)).collect();
        Matrix { n: self.n, entries }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|x| x.is_zero())
    }

    pub fn rank(&self, ctx: &FieldCtx) -> usize {
        rank(ctx, &self.rows())
    }

    /// Whether `self = c * id` for some nonzero `c`.
    pub fn is_scalar(&self) -> bool {
        let c = self.get(0, 0);
        !c.is_zero()
            && (0..self.n).all(|i| (0..self.n).all(|j| self.get(i, j) == if i == j { c } else { Element::ZERO }))
    }

    pub fn inverse(&self, ctx: &FieldCtx) -> Option<Matrix> {
        let n = self.n;
        let aug: Vec<Vector> = (0..n)
            .map(|i| {
                let mut r: Vector = (0..n).map(|j| self.get(i, j)).collect();
                r.extend((0..n).map(|j| if i == j { Element::ONE } else { Element::ZERO }));
                r
            })
            .collect();
        let (red, _) = rref(ctx, &aug).ok()?;
        if red.len() < n || (0..n).any(|i| red[i][i] != Element::ONE) {
            return None;
        }
        let entries = red.iter().flat_map(|r| r[n..].to_vec()).collect();
        Some(Matrix { n, entries })
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<String> = self.entries.chunks(self.n).map(vector_key).collect();
        write!(f, "[{}]", rows.join(","))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2() -> FieldCtx {
        FieldCtx::new(2, 1, 1).unwrap()
    }

    fn v(ctx: &FieldCtx, xs: &[i64]) -> Vector {
        xs.iter().map(|&x| ctx.from_int(x)).collect()
    }

    #[test]
    fn rref_examples() {
        let f = f2();
        let id = vec![v(&f, &[1, 0, 0]), v(&f, &[0, 1, 0]), v(&f, &[0, 0, 1])];
        assert_eq!(rref(&f, &id).unwrap(), (id.clone(), 3));
        let z = vec![v(&f, &[0, 0]), v(&f, &[0, 0])];
        assert_eq!(rref(&f, &z).unwrap().1, 0);
        let m = vec![v(&f, &[1, 1, 0]), v(&f, &[0, 1, 1]), v(&f, &[1, 0, 1])];
        assert_eq!(rref(&f, &m).unwrap().1, 2);
        assert!(rref(&f, &[v(&f, &[1]), v(&f, &[1, 0])]).is_err());
    }

    #[test]
    fn rational_kernel_examples() {
        let f = f2();
        assert_eq!(rational_kernel(&f, &v(&f, &[1, 0])), Subspace::span(&f, 2, &[v(&f, &[0, 1])]).unwrap());
        assert_eq!(rational_kernel(&f, &v(&f, &[1, 1])), Subspace::span(&f, 2, &[v(&f, &[1, 1])]).unwrap());
        let f4 = FieldCtx::new(2, 1, 2).unwrap();
        let w = f4.generator();
        assert!(rational_kernel(&f4, &[Element::ONE, w]).is_zero());
    }

    #[test]
    fn rational_kernel_matches_brute_force_over_nonprime_base() {
        // k = F_4, ambient F_16
        let f = FieldCtx::new(2, 2, 2).unwrap();
        let k = f.subfield_elements(1).unwrap();
        let km = f.subfield_elements(2).unwrap();
        for &a in &km {
            for &b in km.iter().step_by(3) {
                let l = vec![Element::ONE, a, b];
                let brute: Vec<Vector> = Subspace::full(3)
                    .vectors(&f, &k)
                    .into_iter()
                    .filter(|x| dot(&f, &l, x).is_zero())
                    .collect();
                let ker = rational_kernel(&f, &l);
                assert_eq!(ker.vectors(&f, &k).len(), brute.len());
                assert!(brute.iter().all(|x| ker.contains(&f, x)));
            }
        }
    }

    #[test]
    fn subspace_counts() {
        let f = f2();
        let k = f.subfield_elements(1).unwrap();
        assert_eq!(enumerate_subspaces(&f, &k, 3, 0).unwrap(), vec![Subspace::zero(3)]);
        assert_eq!(enumerate_subspaces(&f, &k, 3, 1).unwrap().len(), 7);
        assert!(enumerate_subspaces(&f, &k, 3, 4).is_err());
        let f3 = FieldCtx::new(3, 1, 1).unwrap();
        let k3 = f3.subfield_elements(1).unwrap();
        assert_eq!(enumerate_subspaces(&f3, &k3, 2, 1).unwrap().len(), 4);
    }

    #[test]
    fn subspace_counts_match_gaussian_binomials() {
        for p in [2u32, 3] {
            let f = FieldCtx::new(p, 1, 1).unwrap();
            let k = f.subfield_elements(1).unwrap();
            for n in 1..=4usize {
                for d in 0..=n {
                    let subs = enumerate_subspaces(&f, &k, n, d).unwrap();
                    assert_eq!(subs.len() as u128, gaussian_binomial(n as u32, d as u32, p as u64));
                    // canonical and distinct
                    for w in subs.windows(2) {
                        assert!(w[0] < w[1]);
                    }
                    for s in &subs {
                        assert_eq!(&Subspace::span(&f, n, s.rows()).unwrap(), s);
                    }
                }
            }
        }
    }

    #[test]
    fn flag_counts() {
        let f = f2();
        let k = f.subfield_elements(1).unwrap();
        assert_eq!(enumerate_flags(&f, &k, 2).unwrap().len(), 4);
        assert_eq!(enumerate_flags(&f, &k, 3).unwrap().len(), 36);
        let f3 = FieldCtx::new(3, 1, 1).unwrap();
        let k3 = f3.subfield_elements(1).unwrap();
        assert_eq!(enumerate_flags(&f3, &k3, 2).unwrap().len(), 5);
    }

    #[test]
    fn flag_order() {
        let f = f2();
        let k = f.subfield_elements(1).unwrap();
        let flags = enumerate_flags(&f, &k, 3).unwrap();
        let triv = Flag::trivial(3);
        for a in &flags {
            assert!(flag_leq(&triv, a));
            assert!(flag_leq(a, a));
            for b in &flags {
                if flag_leq(a, b) && flag_leq(b, a) {
                    assert_eq!(a, b);
                }
                for c in &flags {
                    if flag_leq(a, b) && flag_leq(b, c) {
                        assert!(flag_leq(a, c));
                    }
                }
            }
        }
        let line = Subspace::span(&f, 3, &[v(&f, &[1, 0, 0])]).unwrap();
        let plane = Subspace::span(&f, 3, &[v(&f, &[1, 0, 0]), v(&f, &[0, 1, 0])]).unwrap();
        let other = Subspace::span(&f, 3, &[v(&f, &[0, 1, 0])]).unwrap();
        let a = Flag::new(&f, 3, vec![line.clone()]).unwrap();
        let b = Flag::new(&f, 3, vec![line.clone(), plane]).unwrap();
        let c = Flag::new(&f, 3, vec![other]).unwrap();
        assert!(flag_leq(&a, &b));
        assert!(!flag_leq(&b, &a));
        assert!(!flag_leq(&a, &c) && !flag_leq(&c, &a));
    }

    #[test]
    fn complement_examples() {
        let f = f2();
        let full = Subspace::full(2);
        let zero = Subspace::zero(2);
        assert_eq!(complement(&f, &zero, &full).unwrap(), full);
        assert_eq!(complement(&f, &full, &full).unwrap(), zero);
        let diag = Subspace::span(&f, 2, &[v(&f, &[1, 1])]).unwrap();
        assert_eq!(
            complement(&f, &diag, &full).unwrap(),
            Subspace::span(&f, 2, &[v(&f, &[0, 1])]).unwrap()
        );
        let e1 = Subspace::span(&f, 2, &[v(&f, &[1, 0])]).unwrap();
        assert!(complement(&f, &full, &e1).is_err());
    }

    #[test]
    fn complements_are_direct_sums() {
        let f = f2();
        let k = f.subfield_elements(1).unwrap();
        for n in 1..=3usize {
            let all: Vec<Subspace> = (0..=n).flat_map(|d| enumerate_subspaces(&f, &k, n, d).unwrap()).collect();
            for w in &all {
                for s in all.iter().filter(|s| s.is_subspace_of(&f, w)) {
                    let c = complement(&f, s, w).unwrap();
                    let mut rows = s.rows().to_vec();
                    rows.extend(c.rows().iter().cloned());
                    assert_eq!(Subspace::span(&f, n, &rows).unwrap(), *w);
                    assert_eq!(s.dim() + c.dim(), w.dim());
                }
            }
        }
    }

    #[test]
    fn quotient_functional_examples() {
        let f = f2();
        let full = Subspace::full(3);
        let l = v(&f, &[1, 1, 0]);
        assert_eq!(
            quotient_functional(&f, &l, &Subspace::zero(3), &full).unwrap().coords(),
            &l[..]
        );
        let sub = Subspace::span(&f, 3, &[v(&f, &[1, 1, 0])]).unwrap();
        let q = Quotient::new(&f, &sub, &full).unwrap();
        let lbar = quotient_functional(&f, &l, &sub, &full).unwrap();
        let k = f.subfield_elements(1).unwrap();
        for x in full.vectors(&f, &k) {
            assert_eq!(dot(&f, &l, &x), lbar.eval(&f, &q.project(&f, &x).unwrap()));
        }
        let f2d = Subspace::full(2);
        let e2 = Subspace::span(&f, 2, &[v(&f, &[0, 1])]).unwrap();
        assert_eq!(
            quotient_functional(&f, &v(&f, &[1, 0]), &e2, &f2d).unwrap().coords(),
            &[Element::ONE][..]
        );
        assert!(quotient_functional(&f, &v(&f, &[0, 1]), &e2, &f2d).is_err());
    }

    #[test]
    fn keys_roundtrip() {
        let f = FieldCtx::new(3, 1, 1).unwrap();
        let k = f.subfield_elements(1).unwrap();
        for d in 0..=3 {
            for s in enumerate_subspaces(&f, &k, 3, d).unwrap() {
                assert_eq!(Subspace::parse_key(&f, 3, &s.key()).unwrap(), s);
            }
        }
    }

    #[test]
    fn matrix_inverse() {
        let f = FieldCtx::new(3, 1, 1).unwrap();
        let m = Matrix::from_entries(2, v(&f, &[1, 2, 0, 1]));
        let inv = m.inverse(&f).unwrap();
        assert_eq!(m.mul(&f, &inv), Matrix::identity(2));
        assert!(Matrix::from_entries(2, v(&f, &[1, 2, 2, 1])).inverse(&f).is_none());
    }
}
