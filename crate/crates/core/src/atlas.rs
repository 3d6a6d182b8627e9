//! The stratification poset of one variety with per-stratum point counts, its
//! JSON / DOT / text renderings, and the flat-file count cache.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{rejected, Result};
use crate::linalg::flag_leq;
use crate::points::{classify, enumerate, StratumKey, Variety};
use crate::space::Space;

pub const CACHE_SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stratum {
    pub key: StratumKey,
    /// `dim V'` for `P` and `Q`, number of flag members for `B`
    pub dim_index: usize,
    pub counts: BTreeMap<u32, u64>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StrataAtlas {
    pub variety: Variety,
    pub p: u32,
    pub e: u32,
    pub n_plus_1: usize,
    pub strata: Vec<Stratum>,
    /// strict closure relation `(a, b)`: stratum `b` lies in the closure of `a`
    pub closure: Vec<(usize, usize)>,
}

impl StrataAtlas {
    pub fn q(&self) -> u64 {
        (self.p as u64).pow(self.e)
    }

    pub fn total(&self, m: u32) -> u64 {
        self.strata.iter().map(|s| s.counts.get(&m).copied().unwrap_or(0)).sum()
    }

    pub fn index_of(&self, key: &str) -> Option<usize> {
        self.strata.iter().position(|s| s.key.key() == key)
    }
}

/// Strata keys in canonical order.
pub fn strata_keys(space: &Space, variety: Variety) -> Vec<StratumKey> {
    match variety {
        Variety::P => space
            .all_subspaces()
            .into_iter()
            .filter(|s| !s.is_full())
            .map(StratumKey::Subspace)
            .collect(),
        Variety::Q => space.subspaces().iter().cloned().map(StratumKey::Subspace).collect(),
        Variety::B => space.flags().into_iter().map(StratumKey::Flag).collect(),
    }
}

/// Whether stratum `b` lies in the closure of stratum `a` (reflexive).
pub fn in_closure(space: &Space, variety: Variety, a: &StratumKey, b: &StratumKey) -> bool {
    let f = space.field();
    match (variety, a, b) {
        (Variety::P, StratumKey::Subspace(a), StratumKey::Subspace(b)) => a.is_subspace_of(f, b),
        (Variety::Q, StratumKey::Subspace(a), StratumKey::Subspace(b)) => b.is_subspace_of(f, a),
        (Variety::B, StratumKey::Flag(a), StratumKey::Flag(b)) => flag_leq(a, b),
        _ => false,
    }
}

fn dim_index(key: &StratumKey) -> usize {
    match key {
        StratumKey::Subspace(s) => s.dim(),
        StratumKey::Flag(f) => f.len(),
    }
}

/// Number of points over `k_m` in each stratum, by enumeration and
/// classification.
pub fn count_points(space: &Space, variety: Variety, m: u32) -> Result<HashMap<StratumKey, u64>> {
    let points = enumerate(space, variety, m)?;
    let keys = points.par_iter().map(|x| classify(space, x)).collect::<Result<Vec<_>>>()?;
    let mut out: HashMap<StratumKey, u64> = HashMap::new();
    for k in keys {
        *out.entry(k).or_default() += 1;
    }
    Ok(out)
}

#[derive(Clone, Debug, Default)]
pub struct AtlasOptions {
    pub jobs: Option<usize>,
    pub cache_dir: Option<PathBuf>,
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    schema_version: u32,
    variety: String,
    p: u32,
    e: u32,
    n_plus_1: usize,
    m: u32,
    counts: BTreeMap<String, u64>,
}

pub fn cache_path(dir: &Path, variety: Variety, p: u32, e: u32, n_plus_1: usize, m: u32) -> PathBuf {
    dir.join(format!("{}_p{p}_e{e}_n{n_plus_1}_m{m}.json", variety.name()))
}

fn read_cache(path: &Path, variety: Variety, p: u32, e: u32, n_plus_1: usize, m: u32) -> Option<BTreeMap<String, u64>> {
    let text = std::fs::read_to_string(path).ok()?;
    let c: CacheFile = serde_json::from_str(&text).ok()?;
    let matches = c.schema_version == CACHE_SCHEMA_VERSION
        && c.variety == variety.name()
        && (c.p, c.e, c.n_plus_1, c.m) == (p, e, n_plus_1, m);
    matches.then_some(c.counts)
}

/// Builds the atlas of `variety` for `V = k^(n+1)` with counts over each `k_m`.
pub fn build_atlas(variety: Variety, p: u32, e: u32, n_plus_1: usize, ms: &[u32], opts: &AtlasOptions) -> Result<StrataAtlas> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs.unwrap_or(0))
        .build()
        .map_err(|err| crate::Error::Rejected(format!("thread pool: {err}")))?;
    pool.install(|| build_atlas_inner(variety, p, e, n_plus_1, ms, opts))
}

fn build_atlas_inner(variety: Variety, p: u32, e: u32, n_plus_1: usize, ms: &[u32], opts: &AtlasOptions) -> Result<StrataAtlas> {
    let mut ms: Vec<u32> = ms.to_vec();
    ms.sort_unstable();
    ms.dedup();
    let space = Space::new(p, e, n_plus_1, &ms)?;
    let keys = strata_keys(&space, variety);
    let key_strings: Vec<String> = keys.iter().map(|k| k.key()).collect();
    let mut strata: Vec<Stratum> = keys
        .iter()
        .map(|k| Stratum { key: k.clone(), dim_index: dim_index(k), counts: BTreeMap::new() })
        .collect();

    for &m in &ms {
        let path = opts.cache_dir.as_deref().map(|d| cache_path(d, variety, p, e, n_plus_1, m));
        let cached = path
            .as_deref()
            .and_then(|p_| read_cache(p_, variety, p, e, n_plus_1, m))
            .filter(|c| c.len() == key_strings.len() && key_strings.iter().all(|k| c.contains_key(k)));
        let counts: BTreeMap<String, u64> = match cached {
            Some(c) => c,
            None => {
                let raw = count_points(&space, variety, m)?;
                if let Some(k) = raw.keys().find(|k| !keys.contains(k)) {
                    return crate::error::invariant(format!("point classified into unknown stratum {}", k.key()));
                }
                let counts: BTreeMap<String, u64> = keys
                    .iter()
                    .zip(&key_strings)
                    .map(|(k, s)| (s.clone(), raw.get(k).copied().unwrap_or(0)))
                    .collect();
                if let (Some(dir), Some(path)) = (&opts.cache_dir, &path) {
                    std::fs::create_dir_all(dir)?;
                    let file = CacheFile {
                        schema_version: CACHE_SCHEMA_VERSION,
                        variety: variety.name().to_string(),
                        p,
                        e,
                        n_plus_1,
                        m,
                        counts: counts.clone(),
                    };
                    std::fs::write(path, serde_json::to_string_pretty(&file)? + "\n")?;
                }
                counts
            }
        };
        for (s, ks) in strata.iter_mut().zip(&key_strings) {
            s.counts.insert(m, counts[ks]);
        }
    }

    let mut closure = Vec::new();
    for (i, a) in keys.iter().enumerate() {
        for (j, b) in keys.iter().enumerate() {
            if i != j && in_closure(&space, variety, a, b) {
                closure.push((i, j));
            }
        }
    }
    Ok(StrataAtlas { variety, p, e, n_plus_1, strata, closure })
}

// ---------------------------------------------------------------------------
// export

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Json,
    Dot,
    Text,
}

impl std::str::FromStr for Format {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Format::Json),
            "dot" => Ok(Format::Dot),
            "text" => Ok(Format::Text),
            other => rejected(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Serialize)]
struct StratumJson<'a> {
    key: String,
    dim_ambient_index: usize,
    counts: &'a BTreeMap<u32, u64>,
}

#[derive(Serialize)]
struct AtlasJson<'a> {
    variety: &'static str,
    q: u64,
    n: usize,
    strata: Vec<StratumJson<'a>>,
    closure: Vec<[String; 2]>,
}

/// The covering relations of the closure order.
pub fn hasse_edges(atlas: &StrataAtlas) -> Vec<(usize, usize)> {
    let n = atlas.strata.len();
    let mut rel = vec![vec![false; n]; n];
    for &(a, b) in &atlas.closure {
        rel[a][b] = true;
    }
    atlas
        .closure
        .iter()
        .copied()
        .filter(|&(a, b)| !(0..n).any(|c| rel[a][c] && rel[c][b]))
        .collect()
}

pub fn export(atlas: &StrataAtlas, format: Format) -> Result<String> {
    Ok(match format {
        Format::Json => {
            let doc = AtlasJson {
                variety: atlas.variety.name(),
                q: atlas.q(),
                n: atlas.n_plus_1 - 1,
                strata: atlas
                    .strata
                    .iter()
                    .map(|s| StratumJson { key: s.key.key(), dim_ambient_index: s.dim_index, counts: &s.counts })
                    .collect(),
                closure: atlas
                    .closure
                    .iter()
                    .map(|&(a, b)| [atlas.strata[a].key.key(), atlas.strata[b].key.key()])
                    .collect(),
            };
            serde_json::to_string_pretty(&doc)? + "\n"
        }
        Format::Dot => {
            let mut out = String::new();
            writeln!(out, "digraph strata_{} {{", atlas.variety.name()).unwrap();
            writeln!(out, "  rankdir=BT;").unwrap();
            for (i, s) in atlas.strata.iter().enumerate() {
                let counts: Vec<String> = s.counts.iter().map(|(m, c)| format!("m={m}: {c}")).collect();
                let label = if counts.is_empty() { s.key.key() } else { format!("{}\\n{}", s.key.key(), counts.join(", ")) };
                writeln!(out, "  s{i} [label=\"{label}\"];").unwrap();
            }
            for (a, b) in hasse_edges(atlas) {
                writeln!(out, "  s{a} -> s{b};").unwrap();
            }
            out.push_str("}\n");
            out
        }
        Format::Text => {
            let mut out = String::new();
            let ms: Vec<u32> = atlas.strata.first().map(|s| s.counts.keys().copied().collect()).unwrap_or_default();
            writeln!(out, "variety {}  q={}  n+1={}", atlas.variety, atlas.q(), atlas.n_plus_1).unwrap();
            for s in &atlas.strata {
                let counts: Vec<String> = s.counts.iter().map(|(m, c)| format!("m={m}:{c}")).collect();
                writeln!(out, "{:>3}  {:<40} {}", s.dim_index, s.key.key(), counts.join(" ")).unwrap();
            }
            for m in ms {
                writeln!(out, "total m={m}: {}", atlas.total(m)).unwrap();
            }
            writeln!(out, "closure relations: {}", atlas.closure.len()).unwrap();
            out
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_p_atlas() {
        let a = build_atlas(Variety::P, 2, 1, 2, &[1, 2], &AtlasOptions::default()).unwrap();
        assert_eq!(a.strata.len(), 4);
        assert_eq!(a.total(1), 3);
        assert_eq!(a.total(2), 5);
        assert_eq!(a.strata[0].counts[&2], 2);
        // {0} is in the closure of nothing but lies below every line
        assert_eq!(hasse_edges(&a), vec![(0, 1), (0, 2), (0, 3)]);
    }

    #[test]
    fn small_b_atlas() {
        let a = build_atlas(Variety::B, 2, 1, 2, &[1], &AtlasOptions::default()).unwrap();
        assert_eq!(a.total(1), 3);
        assert_eq!(a.strata[0].counts[&1], 0);
    }

    #[test]
    fn empty_counts_export() {
        let a = build_atlas(Variety::Q, 2, 1, 2, &[], &AtlasOptions::default()).unwrap();
        let js: serde_json::Value = serde_json::from_str(&export(&a, Format::Json).unwrap()).unwrap();
        assert_eq!(js["strata"][0]["counts"], serde_json::json!({}));
        assert_eq!(export(&a, Format::Dot).unwrap(), export(&a, Format::Dot).unwrap());
    }
}
