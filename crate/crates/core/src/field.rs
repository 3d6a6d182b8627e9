//! Arithmetic in one ambient field GF(p^D) that contains the base field
//! `k = F_q` (`q = p^e`) and every working extension `k_m` with `e*m | D`.
//!
//! Subfields are never materialized as separate towers: `a` lies in `k_d`
//! exactly when the relative Frobenius `a -> a^q`, applied `d` times, fixes it.

use std::fmt;

use crate::error::{rejected, Result};

/// Largest supported value of `D`.
pub const MAX_DEGREE: usize = 32;

/// An element of the ambient field, stored as its coordinates in the power
/// basis `1, x, ..., x^(D-1)`. Coordinates at positions `>= D` are always zero.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Element {
    coeffs: [u8; MAX_DEGREE],
}

impl Element {
    pub const ZERO: Element = Element { coeffs: [0; MAX_DEGREE] };
    pub const ONE: Element = {
        let mut coeffs = [0; MAX_DEGREE];
        coeffs[0] = 1;
        Element { coeffs }
    };

    pub fn is_zero(&self) -> bool {
        self.coeffs.iter().all(|&c| c == 0)
    }

    pub fn is_one(&self) -> bool {
        *self == Self::ONE
    }

    /// Coordinates in the power basis, trimmed to the field degree by the caller.
    pub fn coeffs(&self) -> &[u8; MAX_DEGREE] {
        &self.coeffs
    }

    fn trimmed(&self) -> &[u8] {
        let len = self.coeffs.iter().rposition(|&c| c != 0).map_or(0, |i| i + 1);
        &self.coeffs[..len]
    }

    /// Compact textual form: trimmed coordinates joined by `:` (`"0"` for zero).
    pub fn token(&self) -> String {
        let t = self.trimmed();
        if t.is_empty() {
            return "0".into();
        }
        t.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(":")
    }
}

impl fmt::Debug for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.token())
    }
}

/// The field context: `p`, `e` (so `q = p^e`), the degree `D` over `F_p` and the
/// monic irreducible modulus (low-degree coefficient first, length `D + 1`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FieldCtx {
    p: u32,
    e: u32,
    degree: usize,
    modulus: Vec<u32>,
    /// Matrix of `a -> a^q` on the power basis; column `j` is `(x^j)^q`.
    frob: Vec<Vec<u32>>,
}

pub fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u32;
    while (d as u64) * (d as u64) <= n as u64 {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl FieldCtx {
    /// Builds `GF(p^D)` with `D = e * lcm_degrees`, using the lexicographically
    /// smallest monic irreducible polynomial of degree `D` (coefficients compared
    /// constant term first).
    pub fn new(p: u32, e: u32, lcm_degrees: u32) -> Result<Self> {
        check_params(p, e, lcm_degrees)?;
        let degree = (e * lcm_degrees) as usize;
        let modulus = smallest_irreducible(p, degree);
        Self::build(p, e, modulus)
    }

    /// Uses a caller supplied modulus (checked monic and irreducible).
    pub fn with_modulus(p: u32, e: u32, modulus: Vec<u32>) -> Result<Self> {
        if modulus.len() < 2 {
            return rejected("modulus must have degree >= 1");
        }
        let degree = modulus.len() - 1;
        if e == 0 || !degree.is_multiple_of(e as usize) {
            return rejected(format!("degree {degree} is not a multiple of e = {e}"));
        }
        check_params(p, e, (degree / e as usize) as u32)?;
        if modulus.iter().any(|&c| c >= p) || modulus[degree] != 1 {
            return rejected("modulus must be monic with coefficients in [0, p)");
        }
        if !is_irreducible(&modulus, p) {
            return rejected("modulus is reducible over F_p");
        }
        Self::build(p, e, modulus)
    }

    fn build(p: u32, e: u32, modulus: Vec<u32>) -> Result<Self> {
        let degree = modulus.len() - 1;
        let mut ctx = FieldCtx { p, e, degree, modulus, frob: Vec::new() };
        let q = ctx.q();
        let mut frob = vec![vec![0u32; degree]; degree];
        for j in 0..degree {
            let mut basis = [0u32; MAX_DEGREE];
            basis[j] = 1;
            let img = ctx.pow(ctx.element_from(&basis[..degree]), q);
            for (i, row) in frob.iter_mut().enumerate() {
                row[j] = img.coeffs[i] as u32;
            }
        }
        ctx.frob = frob;
        Ok(ctx)
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn e(&self) -> u32 {
        self.e
    }

    /// Size of the base field `k`.
    pub fn q(&self) -> u64 {
        (self.p as u64).pow(self.e)
    }

    /// `D`, the degree of the ambient field over `F_p`.
    pub fn degree(&self) -> usize {
        self.degree
    }

    /// Degree of the ambient field over `k`.
    pub fn relative_degree(&self) -> u32 {
        (self.degree as u32) / self.e
    }

    pub fn modulus(&self) -> &[u32] {
        &self.modulus
    }

    /// Number of elements of the ambient field, if it fits in a `u64`.
    pub fn order(&self) -> Option<u64> {
        (self.p as u64).checked_pow(self.degree as u32)
    }

    /// Whether `k_m` is a subfield of the ambient field.
    pub fn contains_extension(&self, m: u32) -> bool {
        m >= 1 && self.relative_degree().is_multiple_of(m)
    }

    fn element_from(&self, coeffs: &[u32]) -> Element {
        let mut out = Element::ZERO;
        for (slot, &c) in out.coeffs.iter_mut().zip(coeffs) {
            *slot = (c % self.p) as u8;
        }
        out
    }

    /// Element with the given power-basis coordinates (reduced mod `p`).
    pub fn from_coeffs(&self, coeffs: &[u32]) -> Result<Element> {
        if coeffs.len() > self.degree && coeffs[self.degree..].iter().any(|&c| c % self.p != 0) {
            return rejected(format!("more than D = {} coordinates", self.degree));
        }
        Ok(self.element_from(&coeffs[..coeffs.len().min(self.degree)]))
    }

    /// The image of an integer under `Z -> F_p`.
    pub fn from_int(&self, n: i64) -> Element {
        let r = n.rem_euclid(self.p as i64) as u32;
        self.element_from(&[r])
    }

    /// The class of `x`, the generator of the power basis.
    pub fn generator(&self) -> Element {
        let mut c = [0u32; 2];
        c[1.min(self.degree)] = 1;
        if self.degree == 1 {
            // x = -modulus[0] in degree one
            return self.from_int(-(self.modulus[0] as i64));
        }
        self.element_from(&c)
    }

    /// Coordinates of `a` as a vector of length `D`.
    pub fn coeff_vec(&self, a: Element) -> Vec<u32> {
        a.coeffs[..self.degree].iter().map(|&c| c as u32).collect()
    }

    pub fn parse_token(&self, token: &str) -> Result<Element> {
        let coeffs = token
            .trim()
            .split(':')
            .map(|t| t.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|_| crate::Error::Rejected(format!("bad element token {token:?}")))?;
        self.from_coeffs(&coeffs)
    }

    pub fn add(&self, a: Element, b: Element) -> Element {
        let mut out = Element::ZERO;
        for i in 0..self.degree {
            out.coeffs[i] = ((a.coeffs[i] as u32 + b.coeffs[i] as u32) % self.p) as u8;
        }
        out
    }

    pub fn neg(&self, a: Element) -> Element {
        let mut out = Element::ZERO;
        for i in 0..self.degree {
            out.coeffs[i] = ((self.p - a.coeffs[i] as u32) % self.p) as u8;
        }
        out
    }

    pub fn sub(&self, a: Element, b: Element) -> Element {
        self.add(a, self.neg(b))
    }

    pub fn mul(&self, a: Element, b: Element) -> Element {
        let d = self.degree;
        let p = self.p;
        let mut prod = [0u32; 2 * MAX_DEGREE];
        for i in 0..d {
            let ai = a.coeffs[i] as u32;
            if ai == 0 {
                continue;
            }
            for j in 0..d {
                prod[i + j] = (prod[i + j] + ai * b.coeffs[j] as u32) % p;
            }
        }
        // reduce by the monic modulus from the top
        for top in (d..2 * d.max(1) - 1).rev() {
            let c = prod[top];
            if c == 0 {
                continue;
            }
            prod[top] = 0;
            for k in 0..d {
                let sub = c * self.modulus[k] % p;
                let slot = &mut prod[top - d + k];
                *slot = (*slot + p - sub) % p;
            }
        }
        self.element_from(&prod[..d])
    }

    pub fn pow(&self, a: Element, mut exp: u64) -> Element {
        let mut base = a;
        let mut acc = Element::ONE;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse; `None` for zero.
    pub fn inv(&self, a: Element) -> Option<Element> {
        if a.is_zero() {
            return None;
        }
        let order = self.order().expect("field order fits in u64");
        Some(self.pow(a, order - 2))
    }

    pub fn div(&self, a: Element, b: Element) -> Option<Element> {
        self.inv(b).map(|ib| self.mul(a, ib))
    }

    /// The relative Frobenius `a -> a^q`.
    pub fn frobenius(&self, a: Element) -> Element {
        let d = self.degree;
        let mut out = [0u32; MAX_DEGREE];
        for (i, row) in self.frob.iter().enumerate() {
            let mut acc = 0u32;
            for j in 0..d {
                acc = (acc + row[j] * a.coeffs[j] as u32) % self.p;
            }
            out[i] = acc;
        }
        self.element_from(&out[..d])
    }

    /// `F^i(a)` for any integer `i`; negative powers use that `F` has order
    /// `D / e` on the ambient field.
    pub fn frobenius_pow(&self, a: Element, i: i64) -> Element {
        let period = self.relative_degree() as i64;
        let steps = i.rem_euclid(period);
        (0..steps).fold(a, |acc, _| self.frobenius(acc))
    }

    /// Whether `a` lies in `k_d`, i.e. `F^d(a) = a`.
    pub fn in_subfield(&self, a: Element, d: u32) -> bool {
        self.frobenius_pow(a, d as i64) == a
    }

    /// Minimal `d | m` with `a^(q^d) = a`; rejects `a` outside `k_m`.
    pub fn subfield_degree(&self, a: Element, m: u32) -> Result<u32> {
        if m == 0 || !self.in_subfield(a, m) {
            return rejected(format!("{a} is not in k_{m}"));
        }
        Ok((1..=m).find(|d| m.is_multiple_of(*d) && self.in_subfield(a, *d)).unwrap_or(m))
    }

    /// An `F_p`-basis of `k_m`: the kernel of the `F_p`-linear map `F^m - id`.
    pub fn subfield_basis(&self, m: u32) -> Result<Vec<Element>> {
        if !self.contains_extension(m) {
            return rejected(format!(
                "k_{m} is not contained in GF({}^{})",
                self.p, self.degree
            ));
        }
        let d = self.degree;
        let mut rows = vec![vec![0u32; d]; d];
        for j in 0..d {
            let mut basis = [0u32; MAX_DEGREE];
            basis[j] = 1;
            let x = self.element_from(&basis[..d]);
            let img = self.sub(self.frobenius_pow(x, m as i64), x);
            for (i, row) in rows.iter_mut().enumerate() {
                row[j] = img.coeffs[i] as u32;
            }
        }
        Ok(nullspace_mod_p(&rows, d, self.p).iter().map(|b| self.element_from(b)).collect())
    }

    /// All elements of `k_m`, sorted.
    pub fn subfield_elements(&self, m: u32) -> Result<Vec<Element>> {
        let basis = self.subfield_basis(m)?;
        let mut out = Vec::with_capacity(self.p.pow(basis.len() as u32) as usize);
        let mut digits = vec![0u32; basis.len()];
        loop {
            let mut acc = Element::ZERO;
            for (&digit, &b) in digits.iter().zip(&basis) {
                acc = self.add(acc, self.mul(self.from_int(digit as i64), b));
            }
            out.push(acc);
            if !odometer(&mut digits, self.p) {
                break;
            }
        }
        out.sort();
        Ok(out)
    }

    /// Every element of the ambient field (only sensible for small fields).
    pub fn all_elements(&self) -> Vec<Element> {
        let mut digits = vec![0u32; self.degree];
        let mut out = Vec::new();
        loop {
            out.push(self.element_from(&digits));
            if !odometer(&mut digits, self.p) {
                break;
            }
        }
        out.sort();
        out
    }

    pub fn random_element<R: rand::Rng + ?Sized>(&self, rng: &mut R) -> Element {
        let coeffs: Vec<u32> = (0..self.degree).map(|_| rng.gen_range(0..self.p)).collect();
        self.element_from(&coeffs)
    }
}

fn check_params(p: u32, e: u32, lcm_degrees: u32) -> Result<()> {
    if !is_prime(p) || p > 251 {
        return rejected(format!("p = {p} is not a supported prime (must be prime and <= 251)"));
    }
    if e == 0 || lcm_degrees == 0 {
        return rejected("e and the extension degree must be positive");
    }
    let degree = e as u64 * lcm_degrees as u64;
    if degree > MAX_DEGREE as u64 {
        return rejected(format!("D = {degree} exceeds the supported maximum {MAX_DEGREE}"));
    }
    if (p as u64).checked_pow(degree as u32).is_none_or(|o| o > u32::MAX as u64) {
        return rejected(format!("GF({p}^{degree}) is too large"));
    }
    Ok(())
}

/// Advances a little-endian digit vector; returns false after wrapping to zero.
pub(crate) fn odometer(digits: &mut [u32], base: u32) -> bool {
    for d in digits.iter_mut() {
        *d += 1;
        if *d < base {
            return true;
        }
        *d = 0;
    }
    false
}

/// Remainder of `a` modulo the monic polynomial `b` over `F_p` (low-degree first).
fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    let db = b.len() - 1;
    while r.len() > db {
        let lead = *r.last().unwrap();
        let shift = r.len() - 1 - db;
        if lead != 0 {
            for (i, &bi) in b.iter().enumerate() {
                r[shift + i] = (r[shift + i] + p - lead * bi % p) % p;
            }
        }
        r.pop();
    }
    r
}

/// Trial division by every monic polynomial of degree `1..=deg/2`.
pub fn is_irreducible(poly: &[u32], p: u32) -> bool {
    let deg = poly.len() - 1;
    for d in 1..=deg / 2 {
        let mut low = vec![0u32; d];
        loop {
            let mut divisor = low.clone();
            divisor.push(1);
            if poly_rem(poly, &divisor, p).iter().all(|&c| c == 0) {
                return false;
            }
            if !odometer(&mut low, p) {
                break;
            }
        }
    }
    true
}

/// Lexicographically smallest monic irreducible of degree `deg`, comparing the
/// constant coefficient first.
fn smallest_irreducible(p: u32, deg: usize) -> Vec<u32> {
    // odometer over (c_{deg-1}, ..., c_0) so that c_0 is the most significant digit
    let mut rev = vec![0u32; deg];
    loop {
        let mut poly: Vec<u32> = rev.iter().rev().copied().collect();
        poly.push(1);
        if is_irreducible(&poly, p) {
            return poly;
        }
        if !odometer(&mut rev, p) {
            unreachable!("irreducible polynomials exist in every degree");
        }
    }
}

/// Basis of `{x in F_p^cols : rows * x = 0}`.
pub(crate) fn nullspace_mod_p(rows: &[Vec<u32>], cols: usize, p: u32) -> Vec<Vec<u32>> {
    let inv = |a: u32| -> u32 {
        let mut acc = 1u64;
        let mut base = a as u64;
        let mut exp = p - 2;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = acc * base % p as u64;
            }
            base = base * base % p as u64;
            exp >>= 1;
        }
        acc as u32
    };
    let mut m: Vec<Vec<u32>> = rows.iter().map(|r| r.iter().map(|&c| c % p).collect()).collect();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(pr) = (r..m.len()).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(r, pr);
        let s = inv(m[r][c]);
        for x in m[r].iter_mut() {
            *x = *x * s % p;
        }
        for i in 0..m.len() {
            if i != r && m[i][c] != 0 {
                let f = m[i][c];
                for j in 0..cols {
                    m[i][j] = (m[i][j] + p - f * m[r][j] % p) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == m.len() {
            break;
        }
    }
    let free: Vec<usize> = (0..cols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![0u32; cols];
            v[f] = 1;
            for (i, &pc) in pivots.iter().enumerate() {
                v[pc] = (p - m[i][f]) % p;
            }
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn prime_field_has_modulus_x() {
        let f = FieldCtx::new(2, 1, 1).unwrap();
        assert_eq!(f.modulus(), &[0, 1]);
        assert_eq!(f.all_elements().len(), 2);
    }

    #[test]
    fn gf4_modulus() {
        let f = FieldCtx::new(2, 1, 2).unwrap();
        assert_eq!(f.modulus(), &[1, 1, 1]);
    }

    #[test]
    fn gf9_modulus_is_smallest_irreducible_quadratic() {
        // enumerate monic quadratics over F_3 in constant-first lex order and keep
        // the first without a root
        let mut expected = None;
        'outer: for c0 in 0..3u32 {
            for c1 in 0..3u32 {
                if (0..3u32).all(|x| (x * x + c1 * x + c0) % 3 != 0) {
                    expected = Some(vec![c0, c1, 1]);
                    break 'outer;
                }
            }
        }
        let f = FieldCtx::new(3, 1, 2).unwrap();
        assert_eq!(Some(f.modulus().to_vec()), expected);
        assert_eq!(f.modulus(), &[1, 0, 1]);
    }

    #[test]
    fn rejects_non_prime() {
        assert!(FieldCtx::new(4, 1, 1).is_err());
        assert!(FieldCtx::new(1, 1, 1).is_err());
        assert!(FieldCtx::new(2, 1, 0).is_err());
    }

    #[test]
    fn frobenius_on_gf4() {
        let f = FieldCtx::new(2, 1, 2).unwrap();
        let w = f.generator();
        assert_eq!(f.frobenius(w), f.add(w, Element::ONE));
        assert_eq!(f.frobenius_pow(w, -1), f.add(w, Element::ONE));
        assert_eq!(f.frobenius_pow(w, 2), w);
    }

    #[test]
    fn subfield_degrees() {
        let f = FieldCtx::new(2, 1, 2).unwrap();
        let w = f.generator();
        assert_eq!(f.subfield_degree(Element::ONE, 2).unwrap(), 1);
        assert_eq!(f.subfield_degree(Element::ZERO, 2).unwrap(), 1);
        assert_eq!(f.subfield_degree(w, 2).unwrap(), 2);
        assert!(f.subfield_degree(w, 1).is_err());
    }

    #[test]
    fn inverses_exist() {
        let f = FieldCtx::new(3, 1, 3).unwrap();
        for a in f.all_elements() {
            match f.inv(a) {
                None => assert!(a.is_zero()),
                Some(b) => assert!(f.mul(a, b).is_one()),
            }
        }
    }

    #[test]
    fn frobenius_is_an_automorphism_exhaustively() {
        for (p, e, l) in [(2, 1, 6), (3, 1, 2), (2, 2, 3), (5, 1, 2), (3, 2, 1)] {
            let f = FieldCtx::new(p, e, l).unwrap();
            let all = f.all_elements();
            for &a in &all {
                assert_eq!(f.frobenius(a), f.pow(a, f.q()));
                for &b in &all {
                    assert_eq!(f.frobenius(f.add(a, b)), f.add(f.frobenius(a), f.frobenius(b)));
                    assert_eq!(f.frobenius(f.mul(a, b)), f.mul(f.frobenius(a), f.frobenius(b)));
                }
            }
        }
    }

    #[test]
    fn ring_axioms_exhaustively_small() {
        let f = FieldCtx::new(2, 1, 3).unwrap();
        let all = f.all_elements();
        for &a in &all {
            for &b in &all {
                assert_eq!(f.mul(a, b), f.mul(b, a));
                assert_eq!(f.add(a, b), f.add(b, a));
                for &c in &all {
                    assert_eq!(f.mul(a, f.add(b, c)), f.add(f.mul(a, b), f.mul(a, c)));
                    assert_eq!(f.mul(a, f.mul(b, c)), f.mul(f.mul(a, b), c));
                }
            }
        }
    }

    #[test]
    fn subfield_counts_match_brute_force() {
        for (p, e, l) in [(2, 1, 6), (3, 1, 6), (2, 2, 3), (2, 3, 2)] {
            let f = FieldCtx::new(p, e, l).unwrap();
            let all = f.all_elements();
            for d in (1..=l).filter(|d| l % d == 0) {
                let brute: Vec<_> = all.iter().copied().filter(|&a| f.in_subfield(a, d)).collect();
                assert_eq!(brute.len() as u64, f.q().pow(d));
                assert_eq!(f.subfield_elements(d).unwrap(), brute);
            }
        }
    }

    #[test]
    fn token_roundtrip() {
        let f = FieldCtx::new(3, 1, 4).unwrap();
        for a in f.all_elements() {
            assert_eq!(f.parse_token(&a.token()).unwrap(), a);
        }
    }
}
