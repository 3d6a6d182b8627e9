//! The ambient vector space `V = k^(n+1)` together with the finite data every
//! other module indexes into: its `k`-rational vectors and its nonzero subspaces.

use std::collections::HashMap;

use crate::error::{rejected, Result};
use crate::field::{Element, FieldCtx};
use crate::linalg::{enumerate_flags, enumerate_subspaces, Flag, Subspace, Vector};

/// Upper bound on `|V(k)| = q^(n+1)` for the explicit tables below.
pub const MAX_RATIONAL_VECTORS: u64 = 1 << 14;

/// A strict inclusion `sub ⊊ sup` between nonzero subspaces, with the basis of
/// `sub` written in the echelon coordinates of `sup`.
#[derive(Clone, Debug)]
pub struct Inclusion {
    pub sub: usize,
    pub sup: usize,
    pub basis_in_sup: Vec<Vector>,
}

#[derive(Debug)]
pub struct Space {
    field: FieldCtx,
    dim: usize,
    k: Vec<Element>,
    k_index: HashMap<Element, usize>,
    vectors: Vec<Vector>,
    subspaces: Vec<Subspace>,
    subspace_index: HashMap<Subspace, usize>,
    inclusions: Vec<Inclusion>,
    /// nonzero vectors of `k^d` for each `d <= dim`
    coord_vectors: Vec<Vec<Vector>>,
}

fn gcd(a: u32, b: u32) -> u32 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn lcm(a: u32, b: u32) -> u32 {
    a / gcd(a, b) * b
}

impl Space {
    /// `V = k^(n+1)` over `k = F_(p^e)`, inside an ambient field that contains
    /// `k_m` for every requested `m` and `k_d` for every `d | n+1`.
    pub fn new(p: u32, e: u32, n_plus_1: usize, degrees: &[u32]) -> Result<Self> {
        if n_plus_1 == 0 {
            return rejected("dim V must be at least 1");
        }
        if degrees.contains(&0) {
            return rejected("extension degrees must be positive");
        }
        let l = degrees.iter().fold(n_plus_1 as u32, |acc, &m| lcm(acc, m));
        let field = FieldCtx::new(p, e, l)?;
        Self::with_field(field, n_plus_1)
    }

    pub fn with_field(field: FieldCtx, dim: usize) -> Result<Self> {
        let q = field.q();
        if q.checked_pow(dim as u32).is_none_or(|c| c > MAX_RATIONAL_VECTORS) {
            return rejected(format!("q^(n+1) = {q}^{dim} exceeds the supported size"));
        }
        let k = field.subfield_elements(1)?;
        let k_index = k.iter().enumerate().map(|(i, &x)| (x, i)).collect();
        let vectors = all_vectors(&k, dim);
        let mut subspaces = Vec::new();
        for d in 1..=dim {
            subspaces.extend(enumerate_subspaces(&field, &k, dim, d)?);
        }
        let subspace_index: HashMap<Subspace, usize> =
            subspaces.iter().enumerate().map(|(i, s)| (s.clone(), i)).collect();
        let mut inclusions = Vec::new();
        for (sup_i, sup) in subspaces.iter().enumerate() {
            for (sub_i, sub) in subspaces.iter().enumerate() {
                if sub.dim() < sup.dim() && sub.is_subspace_of(&field, sup) {
                    let basis_in_sup =
                        sub.rows().iter().map(|r| sup.coords(&field, r).expect("contained")).collect();
                    inclusions.push(Inclusion { sub: sub_i, sup: sup_i, basis_in_sup });
                }
            }
        }
        let coord_vectors = (0..=dim).map(|d| all_vectors(&k, d).split_off(1)).collect();
        Ok(Space { field, dim, k, k_index, vectors, subspaces, subspace_index, inclusions, coord_vectors })
    }

    pub fn field(&self) -> &FieldCtx {
        &self.field
    }

    /// `n + 1`.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn q(&self) -> u64 {
        self.field.q()
    }

    /// Elements of `k`, sorted, zero first.
    pub fn k_elements(&self) -> &[Element] {
        &self.k
    }

    pub fn k_units(&self) -> &[Element] {
        &self.k[1..]
    }

    /// All of `V(k)` in canonical order (index 0 is the zero vector).
    pub fn vectors(&self) -> &[Vector] {
        &self.vectors
    }

    /// `V(k) \ {0}` in canonical order; Q-tables are indexed by position here.
    pub fn nonzero_vectors(&self) -> &[Vector] {
        &self.vectors[1..]
    }

    /// Position of a rational vector in [`Space::vectors`].
    pub fn vector_index(&self, v: &[Element]) -> Option<usize> {
        let q = self.k.len();
        v.iter().try_fold(0usize, |acc, x| self.k_index.get(x).map(|&i| acc * q + i))
    }

    /// Nonzero subspaces of `V` in canonical order (`V` itself is last).
    pub fn subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn subspace_index(&self, s: &Subspace) -> Option<usize> {
        self.subspace_index.get(s).copied()
    }

    pub fn full_index(&self) -> usize {
        self.subspaces.len() - 1
    }

    /// All strict inclusions between nonzero subspaces.
    pub fn inclusions(&self) -> &[Inclusion] {
        &self.inclusions
    }

    /// Nonzero vectors of `k^d`.
    pub fn coord_vectors(&self, d: usize) -> &[Vector] {
        &self.coord_vectors[d]
    }

    /// Every subspace including `{0}`, sorted.
    pub fn all_subspaces(&self) -> Vec<Subspace> {
        let mut out = vec![Subspace::zero(self.dim)];
        out.extend(self.subspaces.iter().cloned());
        out
    }

    pub fn flags(&self) -> Vec<Flag> {
        enumerate_flags(&self.field, &self.k, self.dim).expect("dimension in range")
    }

    /// Elements of `k_m`, sorted.
    pub fn extension_elements(&self, m: u32) -> Result<Vec<Element>> {
        self.field.subfield_elements(m)
    }
}

/// All vectors of `scalars^d` with the first coordinate most significant.
fn all_vectors(scalars: &[Element], d: usize) -> Vec<Vector> {
    let mut out = vec![Vec::new()];
    for _ in 0..d {
        out = out
            .into_iter()
            .flat_map(|prefix: Vector| {
                scalars.iter().map(move |&x| {
                    let mut v = prefix.clone();
                    v.push(x);
                    v
                })
            })
            .collect();
    }
    out
}

/// Every nonzero vector of `scalars^d` whose first nonzero entry is 1.
pub fn normalized_vectors(scalars: &[Element], d: usize) -> Vec<Vector> {
    all_vectors(scalars, d)
        .into_iter()
        .filter(|v| v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_one()))
        .collect()
}
