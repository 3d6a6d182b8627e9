use std::io::Read;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use drinfeld_core::atlas::{build_atlas, export, AtlasOptions, Format};
use drinfeld_core::group::{enumerate_pgl, prepare, stabilizer_bruteforce, stabilizer_predicted, unipotent_elements};
use drinfeld_core::io::point_from_str;
use drinfeld_core::points::{classify, stratum_flag, Variety};
use drinfeld_core::verify::{verify_all, VerifyConfig};
use drinfeld_core::Error;

#[derive(Parser)]
#[command(name = "drinfeld", version, about = "Strata and stabilizers of compactified Drinfeld half spaces over finite fields")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// characteristic
    #[arg(long, global = true, default_value_t = 2)]
    p: u32,
    /// q = p^e
    #[arg(long, global = true, default_value_t = 1)]
    e: u32,
    /// dim V = n + 1 (comma separated list for verify)
    #[arg(long, global = true, value_delimiter = ',')]
    n: Vec<usize>,
    /// extension degrees m of k_m (comma separated)
    #[arg(long, global = true, value_delimiter = ',')]
    m: Vec<u32>,
    #[arg(long, global = true, value_enum, default_value_t = OutFormat::Text)]
    format: OutFormat,
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    #[arg(long, global = true)]
    no_cache: bool,
    /// worker threads (default: all cores)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// seed for the randomized perturbation checks
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum OutFormat {
    Json,
    Dot,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum VarietyArg {
    P,
    Q,
    B,
}

impl From<VarietyArg> for Variety {
    fn from(v: VarietyArg) -> Self {
        match v {
            VarietyArg::P => Variety::P,
            VarietyArg::Q => Variety::Q,
            VarietyArg::B => Variety::B,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Validate a point (JSON file or stdin) and print its stratum.
    Classify { input: Option<PathBuf> },
    /// Stabilizer of a point: members, unipotent part, and agreement with the prediction.
    Stabilizer { input: Option<PathBuf> },
    /// Stratification poset with per-stratum counts.
    Strata {
        #[arg(long, value_enum, ignore_case = true)]
        variety: VarietyArg,
    },
    /// Point counts over k_m, per stratum and in total.
    Count {
        #[arg(long, value_enum, ignore_case = true)]
        variety: VarietyArg,
    },
    /// Run the invariant suites. Exit 0 if all pass, 1 on any failure, 2 on a configuration error.
    Verify {
        /// comma separated suite names (default: all); an empty string runs nothing
        #[arg(long)]
        suites: Option<String>,
        /// a point JSON file to check (e.g. a corrupted B point)
        #[arg(long)]
        fixture: Option<PathBuf>,
        #[arg(long, default_value_t = 1000)]
        perturbations: usize,
    },
}

fn read_input(path: &Option<PathBuf>) -> anyhow::Result<String> {
    match path {
        Some(p) if p.as_os_str() != "-" => std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display())),
        _ => {
            let mut s = String::new();
            std::io::stdin().read_to_string(&mut s)?;
            Ok(s)
        }
    }
}

fn single_n(c: &Common) -> anyhow::Result<usize> {
    match c.n.as_slice() {
        [n] => Ok(n + 1),
        [] => bail!("--n is required"),
        _ => bail!("--n takes a single value here"),
    }
}

fn atlas_opts(c: &Common) -> AtlasOptions {
    AtlasOptions { jobs: c.jobs, cache_dir: if c.no_cache { None } else { c.cache_dir.clone() } }
}

fn no_dot(c: &Common) -> anyhow::Result<()> {
    if c.format == OutFormat::Dot {
        bail!("--format dot is only available for strata");
    }
    Ok(())
}

/// Exit code 1 for an invalid point (or failed verification), 2 for usage errors.
fn run(cli: Cli) -> anyhow::Result<u8> {
    let c = &cli.common;
    match &cli.cmd {
        Cmd::Classify { input } => {
            no_dot(c)?;
            let (space, raw) = point_from_str(&read_input(input)?)?;
            let variety = raw.variety();
            let (valid, reason, key) = match raw.validate(&space) {
                Ok(x) => (true, None, Some(classify(&space, &x)?.key())),
                Err(Error::Rejected(r)) => (false, Some(r), None),
                Err(e) => return Err(e.into()),
            };
            if c.format == OutFormat::Json {
                let doc = json!({"variety": variety.name(), "valid": valid, "reason": reason, "stratum": key});
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                println!("variety: {variety}");
                println!("valid: {valid}");
                if let Some(r) = reason {
                    println!("reason: {r}");
                }
                if let Some(k) = key {
                    println!("stratum: {k}");
                }
            }
            Ok(if valid { 0 } else { 1 })
        }
        Cmd::Stabilizer { input } => {
            no_dot(c)?;
            let (space, raw) = point_from_str(&read_input(input)?)?;
            let x = raw.validate(&space)?;
            let pool = rayon::ThreadPoolBuilder::new().num_threads(c.jobs.unwrap_or(0)).build()?;
            let (stab, pred, unip, flag) = pool.install(|| -> anyhow::Result<_> {
                let group = enumerate_pgl(&space)?;
                let prepared = prepare(&space, &group);
                let stab = stabilizer_bruteforce(&space, &prepared, &x)?;
                let pred = stabilizer_predicted(&space, &group, &x)?;
                let unip = unipotent_elements(&space, &stab)?;
                Ok((stab, pred, unip, stratum_flag(&space, &x)?))
            })?;
            let show = |g: &drinfeld_core::GroupElement| format!("{:?}", g.matrix());
            if c.format == OutFormat::Json {
                let doc = json!({
                    "variety": x.variety().name(),
                    "stratum_flag": flag.key(),
                    "order": stab.len(),
                    "members": stab.iter().map(show).collect::<Vec<_>>(),
                    "unipotent": unip.iter().map(show).collect::<Vec<_>>(),
                    "matches_prediction": stab == pred,
                });
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                println!("variety: {}", x.variety());
                println!("stratum flag: {}", flag.key());
                println!("|Stab(x)| = {}", stab.len());
                for g in &stab {
                    println!("  {}", show(g));
                }
                println!("unipotent elements: {}", unip.len());
                for g in &unip {
                    println!("  {}", show(g));
                }
                println!("brute force = predicted: {}", stab == pred);
            }
            Ok(if stab == pred { 0 } else { 1 })
        }
        Cmd::Strata { variety } => {
            let atlas = build_atlas((*variety).into(), c.p, c.e, single_n(c)?, &c.m, &atlas_opts(c))?;
            let fmt = match c.format {
                OutFormat::Json => Format::Json,
                OutFormat::Dot => Format::Dot,
                OutFormat::Text => Format::Text,
            };
            print!("{}", export(&atlas, fmt)?);
            Ok(0)
        }
        Cmd::Count { variety } => {
            no_dot(c)?;
            if c.m.is_empty() {
                bail!("--m is required");
            }
            let atlas = build_atlas((*variety).into(), c.p, c.e, single_n(c)?, &c.m, &atlas_opts(c))?;
            if c.format == OutFormat::Json {
                let totals: serde_json::Map<String, serde_json::Value> =
                    c.m.iter().map(|&m| (m.to_string(), json!(atlas.total(m)))).collect();
                let strata: serde_json::Map<String, serde_json::Value> =
                    atlas.strata.iter().map(|s| (s.key.key(), json!(s.counts))).collect();
                let doc = json!({"variety": atlas.variety.name(), "q": atlas.q(), "n": atlas.n_plus_1 - 1, "totals": totals, "strata": strata});
                println!("{}", serde_json::to_string_pretty(&doc)?);
            } else {
                for m in atlas.strata.first().map(|s| s.counts.keys().copied().collect::<Vec<_>>()).unwrap_or_default() {
                    println!("|{}(k_{m})| = {}", atlas.variety, atlas.total(m));
                    for s in atlas.strata.iter().filter(|s| s.counts[&m] > 0) {
                        println!("  {:<40} {}", s.key.key(), s.counts[&m]);
                    }
                }
            }
            Ok(0)
        }
        Cmd::Verify { suites, fixture, perturbations } => {
            no_dot(c)?;
            let defaults = VerifyConfig::default();
            let cfg = VerifyConfig {
                p: c.p,
                e: c.e,
                n_plus_1: if c.n.is_empty() { defaults.n_plus_1 } else { c.n.iter().map(|n| n + 1).collect() },
                ms: if c.m.is_empty() { defaults.ms } else { c.m.clone() },
                suites: suites
                    .as_ref()
                    .map(|s| s.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect()),
                seed: c.seed,
                perturbations: *perturbations,
                jobs: c.jobs,
                fixture: fixture.clone(),
            };
            let report = verify_all(&cfg)?;
            if c.format == OutFormat::Json {
                println!("{}", serde_json::to_string_pretty(&json!({"passed": report.passed(), "checks": report.checks}))?);
            } else {
                print!("{}", report.render_text());
            }
            Ok(if report.passed() { 0 } else { 1 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", anyhow!(e));
            ExitCode::from(2)
        }
    }
}
