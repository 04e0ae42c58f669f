//! `hida`: command-line front end for the `hida-siegel` library.
//!
//! Every verb prints a run report — the command, a SHA-256 digest of its
//! canonical inputs, the outputs, and a list of checks — as text or, with
//! `--json`, as JSON. Exit status: 0 when all checks pass, 1 on a failed check
//! or runtime error, 2 on a usage error.

use std::fmt;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use hida_siegel::cosets::{verify_index_formula, CosetSpec, PartitionParabolic, DEFAULT_BUDGET};
use hida_siegel::eisenstein::{
    brute_force_provider, check_congruence, coeff_c, restricted_coeff, EisensteinSpec,
};
use hida_siegel::euler::{
    a_p, a_p_expansion, a_p_product, classify_trivial_zero, e_imp, e_p, random_ordinary, simple_data, SatakeData,
};
use hida_siegel::family::{
    derivative_identity, l_invariant, padic_from_value, random_int_series, PadicNumber, PadicSeries,
};
use hida_siegel::intlin::is_prime;
use hida_siegel::lseries::{gauss_sum, l_nonpositive, partial_l, CycRational, DirichletCharacter};
use hida_siegel::qexp::{
    dependency_cone, flatness_witness, is_flat, ordinary_project, random_in_stratum, required_bound, up_ni,
    vanishes_rank_le, QExpansion, StratumParams,
};
use hida_siegel::symmat::HalfIntMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Parser)]
#[command(name = "hida", version, about = "Exact computations for Hida theory of Siegel modular forms")]
struct Cli {
    /// Print the run report as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Seed for generated fixtures.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Upper bound on enumerated group sizes.
    #[arg(long, global = true, default_value_t = DEFAULT_BUDGET)]
    budget: u64,
    /// Omit the wall time so that identical inputs give byte-identical reports.
    #[arg(long, global = true)]
    no_time: bool,
    #[command(subcommand)]
    group: Group,
}

#[derive(Subcommand)]
enum Group {
    /// Boundary double cosets of the Igusa tower.
    Cosets {
        #[command(subcommand)]
        verb: CosetsVerb,
    },
    /// Truncated q-expansions and the U_p operators.
    Qexp {
        #[command(subcommand)]
        verb: QexpVerb,
    },
    /// Modified Euler factors at p.
    Euler {
        #[command(subcommand)]
        verb: EulerVerb,
    },
    /// Dirichlet L-values and Gauss sums.
    Lseries {
        #[command(subcommand)]
        verb: LseriesVerb,
    },
    /// Fourier coefficients of Siegel Eisenstein series.
    Eis {
        #[command(subcommand)]
        verb: EisVerb,
    },
    /// p-adic families: ℓ-invariants and the derivative identity.
    Family {
        #[command(subcommand)]
        verb: FamilyVerb,
    },
}

#[derive(Subcommand)]
enum CosetsVerb {
    /// Count flat double cosets and compare with the index formula.
    Verify {
        #[arg(long)]
        n: usize,
        /// Partition of n, e.g. `2,1`.
        #[arg(long)]
        parts: String,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        p: u64,
        #[arg(long, default_value_t = 1)]
        l: u32,
    },
}

#[derive(Args)]
struct QexpSource {
    /// A q-expansion as inline JSON or a path to a JSON file; a seeded
    /// fixture in the stratum V^{SP,r} is generated when absent.
    #[arg(long)]
    input: Option<String>,
    #[arg(long, default_value = "1,1")]
    parts: String,
    #[arg(long = "level", default_value_t = 1)]
    level: u64,
    #[arg(long, default_value_t = 3)]
    p: u64,
    #[arg(long, default_value_t = 1)]
    m: u32,
    #[arg(long, default_value_t = 1)]
    l: u32,
    #[arg(long, default_value_t = 20)]
    trace_bound: u64,
    /// Stratum of the fixture (defaults to n, i.e. no vanishing condition).
    #[arg(long)]
    r: Option<usize>,
}

#[derive(Subcommand)]
enum QexpVerb {
    /// Apply U_{p,N_i} for each listed block index i (1-based), in order.
    Up {
        #[command(flatten)]
        source: QexpSource,
        #[arg(long, default_value = "1")]
        blocks: String,
        /// Generate the fixture on the dependency cone of this final trace bound.
        #[arg(long)]
        final_bound: Option<u64>,
        /// Check that the result is flat for this r.
        #[arg(long)]
        check_flat: Option<usize>,
        /// Check that the result vanishes at every index of rank ≤ k.
        #[arg(long)]
        check_rank: Option<i64>,
    },
    /// Evaluate the stratum predicates.
    CheckStratum {
        #[command(flatten)]
        source: QexpSource,
        /// Vanishing at every index of rank ≤ k.
        #[arg(long)]
        rank: Option<i64>,
        /// Flatness for this r.
        #[arg(long)]
        flat: Option<usize>,
    },
    /// Apply the ordinary projector and check that re-projection is a fixed point.
    Project {
        #[command(flatten)]
        source: QexpSource,
        #[arg(long, default_value_t = 6)]
        max_steps: usize,
    },
}

#[derive(Args)]
struct SatakeSource {
    /// Satake data as inline JSON or a path to a JSON file.
    #[arg(long)]
    input: Option<String>,
    /// `semistable`, `crystalline`, or `random` (seeded, ordinary).
    #[arg(long, default_value = "random")]
    fixture: String,
    #[arg(long, default_value_t = 5)]
    p: u64,
    #[arg(long, default_value = "1,1")]
    parts: String,
    /// Largest p-exponent of the conductors of random ε_i.
    #[arg(long, default_value_t = 1)]
    max_c: u32,
}

#[derive(Subcommand)]
enum EulerVerb {
    /// The modified Euler factor E_p(s, π × χ).
    Ep {
        #[command(flatten)]
        source: SatakeSource,
        /// Defaults to n+1−t_d.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<i64>,
        /// Character spec; defaults to ε_d.
        #[arg(long)]
        chi: Option<String>,
    },
    /// The improved factor E_imp(s).
    Imp {
        #[command(flatten)]
        source: SatakeSource,
        #[arg(long, allow_hyphen_values = true)]
        s: Option<i64>,
    },
    /// The factor A_P in both of its forms.
    Ap {
        #[command(flatten)]
        source: SatakeSource,
    },
    /// Classify the trivial zero.
    Classify {
        #[command(flatten)]
        source: SatakeSource,
        /// Expected class: None, Crystalline or SemiStable.
        #[arg(long)]
        expect: Option<String>,
    },
}

#[derive(Subcommand)]
enum LseriesVerb {
    /// L(1−k, χ), optionally with Euler factors removed.
    Lvalue {
        /// Character spec: `trivial[:N]`, `legendre:P`, `quad:D`, `gen:M:ORDER:K`, or JSON.
        #[arg(long)]
        chi: String,
        #[arg(long)]
        k: u64,
        /// Primes whose Euler factors are removed, e.g. `2,3`.
        #[arg(long, default_value = "")]
        removed: String,
    },
    /// The Gauss sum of a primitive character, with the check |G|² = f.
    Gauss {
        #[arg(long)]
        chi: String,
    },
}

#[derive(Subcommand)]
enum EisVerb {
    /// The coefficient at one index of size 2n.
    Coeff {
        /// Series data as inline JSON or a path.
        #[arg(long)]
        spec: String,
        /// Entries of S = 2Nβ, row-major, e.g. `50,1,1,2`.
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
    },
    /// The pullback coefficient at a pair of size-n indices.
    Restrict {
        #[arg(long)]
        spec: String,
        #[arg(long, allow_hyphen_values = true)]
        b1: String,
        #[arg(long, allow_hyphen_values = true)]
        b2: String,
    },
    /// Compare coefficients at weights congruent modulo (p−1)p^a.
    CheckCongruence {
        #[arg(long)]
        spec: String,
        #[arg(long)]
        spec2: String,
        #[arg(long, allow_hyphen_values = true)]
        beta: String,
        #[arg(long, default_value_t = 1)]
        a: u32,
    },
}

#[derive(Args)]
struct SeriesFixture {
    #[arg(long, default_value_t = 5)]
    p: u64,
    #[arg(long = "precision", default_value_t = 6)]
    precision: u32,
    #[arg(long, default_value_t = 5)]
    degree: u32,
}

#[derive(Subcommand)]
enum FamilyVerb {
    /// ℓ = −d/dT log_p(a_n/a_{n−1}) at a center.
    LInvariant {
        /// `{"a_n": series, "a_nm1": series, "var": i, "center": [...]}`; without
        /// it the fixture a_n = 1 + cT, a_{n−1} = 1 at 0 is used.
        #[arg(long)]
        input: Option<String>,
        #[arg(long, default_value_t = 1, allow_hyphen_values = true)]
        c: i64,
        #[command(flatten)]
        fixture: SeriesFixture,
    },
    /// Both sides of d/dT[(1−u)G] = −(d log_p u/dT)·G at a center where u = 1.
    DerivativeCheck {
        /// `{"u": series, "g": series, "var": i, "center": [...]}`; without it a
        /// seeded random pair is used.
        #[arg(long)]
        input: Option<String>,
        #[command(flatten)]
        fixture: SeriesFixture,
    },
}

enum CliError {
    Usage(String),
    Runtime(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
        }
    }
}

fn usage(flag: &str, msg: impl fmt::Display) -> CliError {
    CliError::Usage(format!("{flag}: {msg}"))
}

fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Serialize)]
struct Check {
    name: String,
    expected: String,
    actual: String,
    pass: bool,
}

fn check(name: &str, expected: impl fmt::Display, actual: impl fmt::Display) -> Check {
    let (expected, actual) = (expected.to_string(), actual.to_string());
    Check { name: name.into(), pass: expected == actual, expected, actual }
}

struct Run {
    inputs: Value,
    outputs: Value,
    checks: Vec<Check>,
}

#[derive(Serialize)]
struct RunReport {
    command: String,
    inputs_digest: String,
    inputs: Value,
    outputs: Value,
    checks: Vec<Check>,
    pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time: Option<String>,
}

fn to_value<T: Serialize>(x: &T) -> Value {
    serde_json::to_value(x).expect("serializable")
}

fn parse_list<T: std::str::FromStr>(flag: &str, s: &str) -> Result<Vec<T>, CliError> {
    s.split(',')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(|x| x.parse::<T>().map_err(|_| usage(flag, format!("cannot parse `{x}`"))))
        .collect()
}

/// Inline JSON (starting with `{` or `[`) or a path to a JSON file.
fn read_json(flag: &str, arg: &str) -> Result<Value, CliError> {
    let t = arg.trim_start();
    let text = if t.starts_with('{') || t.starts_with('[') {
        arg.to_string()
    } else {
        std::fs::read_to_string(arg).map_err(|e| usage(flag, format!("cannot read {arg}: {e}")))?
    };
    serde_json::from_str(&text).map_err(|e| usage(flag, format!("invalid JSON: {e}")))
}

fn from_json<T: serde::de::DeserializeOwned>(flag: &str, v: &Value) -> Result<T, CliError> {
    serde_json::from_value(v.clone()).map_err(|e| usage(flag, e))
}

fn parse_character(flag: &str, s: &str) -> Result<DirichletCharacter, CliError> {
    let t = s.trim();
    if t.starts_with('{') {
        return from_json(flag, &read_json(flag, t)?);
    }
    let parts: Vec<&str> = t.split(':').collect();
    let num = |i: usize| -> Result<i128, CliError> {
        parts.get(i).and_then(|x| x.parse().ok()).ok_or_else(|| usage(flag, format!("bad character spec `{t}`")))
    };
    let u = |x: i128| u64::try_from(x).map_err(|_| usage(flag, format!("negative modulus in `{t}`")));
    match parts[0] {
        "trivial" if parts.len() == 1 => Ok(DirichletCharacter::trivial(1)),
        "trivial" => Ok(DirichletCharacter::trivial(u(num(1)?)?)),
        "legendre" => DirichletCharacter::legendre(u(num(1)?)?).map_err(|e| usage(flag, e)),
        "quad" => Ok(DirichletCharacter::quadratic_of(num(1)?)),
        "gen" => {
            let k = u32::try_from(num(3)?).map_err(|_| usage(flag, "exponent out of range"))?;
            DirichletCharacter::from_generator(u(num(1)?)?, u(num(2)?)?, k).map_err(|e| usage(flag, e))
        }
        _ => Err(usage(flag, format!("unknown character spec `{t}`"))),
    }
}

/// Replace character spec strings at the character-valued fields of a spec or
/// Satake-data object by their full JSON form.
fn resolve_characters(flag: &str, v: &mut Value) -> Result<(), CliError> {
    fn fix(flag: &str, slot: Option<&mut Value>) -> Result<(), CliError> {
        if let Some(slot) = slot {
            if let Value::String(s) = slot {
                *slot = to_value(&parse_character(flag, s)?);
            }
        }
        Ok(())
    }
    fix(flag, v.get_mut("phi"))?;
    if let Some(phi) = v.get_mut("phi").filter(|x| x.get("phi_p_at_p").is_some()) {
        fix(flag, phi.get_mut("character"))?;
    }
    let weight = if v.get("weight").is_some() { v.get_mut("weight") } else { Some(v) };
    if let Some(w) = weight {
        fix(flag, w.get_mut("chi"))?;
        if let Some(Value::Array(eps)) = w.get_mut("eps") {
            for e in eps {
                fix(flag, Some(e))?;
            }
        }
    }
    Ok(())
}

fn parse_matrix(flag: &str, s: &str, level: u64) -> Result<HalfIntMatrix, CliError> {
    let entries: Vec<i64> = parse_list(flag, s)?;
    let n = (entries.len() as f64).sqrt().round() as usize;
    if n * n != entries.len() || n == 0 {
        return Err(usage(flag, format!("{} entries do not form a square matrix", entries.len())));
    }
    let rows = entries.chunks(n).map(<[i64]>::to_vec).collect();
    HalfIntMatrix::new(level, rows).map_err(|e| usage(flag, e))
}

fn cosets_verify(cli: &Cli, n: usize, parts: &str, r: usize, p: u64, l: u32) -> Result<Run, CliError> {
    let parts: Vec<usize> = parse_list("--parts", parts)?;
    if parts.iter().sum::<usize>() != n {
        return Err(usage("--parts", format!("{parts:?} is not a partition of --n {n}")));
    }
    let spec = CosetSpec::new(parts.clone(), r, p, l).map_err(|e| usage("--r/--p/--l", e))?;
    let rep = verify_index_formula(&spec, cli.budget).map_err(runtime)?;
    Ok(Run {
        inputs: json!({"n": n, "parts": parts, "r": r, "p": p, "l": l, "budget": cli.budget}),
        outputs: json!({"total": rep.total_cosets, "flat": rep.flat_count, "predicted": rep.predicted_flat}),
        checks: vec![check("flat coset count", rep.predicted_flat, rep.flat_count)],
    })
}

/// Load or generate a q-expansion; `cone_blocks` restricts a generated fixture
/// to the dependency cone of the given applications down to `final_bound`.
fn qexp_source(cli: &Cli, src: &QexpSource, cone: Option<(&[usize], u64)>) -> Result<(QExpansion, Value), CliError> {
    if let Some(arg) = &src.input {
        let v = read_json("--input", arg)?;
        let f: QExpansion = from_json("--input", &v)?;
        return Ok((f, json!({"input": v})));
    }
    let parts: Vec<usize> = parse_list("--parts", &src.parts)?;
    let parabolic = PartitionParabolic::new(parts.clone()).map_err(|e| usage("--parts", e))?;
    if !is_prime(src.p) {
        return Err(usage("--p", format!("{} is not prime", src.p)));
    }
    if src.level == 0 || src.level % src.p == 0 {
        return Err(usage("--level", "the level must be positive and prime to p"));
    }
    let n = parabolic.n;
    let r = src.r.unwrap_or(n);
    if r > n {
        return Err(usage("--r", format!("r must be at most n = {n}")));
    }
    let mut params = StratumParams {
        parabolic,
        level: src.level,
        p: src.p,
        m: src.m,
        l: src.l,
        trace_bound: src.trace_bound,
    };
    let mut inputs = json!({
        "fixture": {"parts": parts, "N": src.level, "p": src.p, "m": src.m, "l": src.l, "r": r, "seed": cli.seed}
    });
    let f = match cone {
        Some((blocks, final_bound)) => {
            params.trace_bound = required_bound(&params.parabolic, src.level, src.p, blocks, final_bound);
            let support = dependency_cone(&params.parabolic, src.level, src.p, blocks, final_bound);
            inputs["fixture"]["final_bound"] = json!(final_bound);
            random_in_stratum(&params, r, cli.seed, Some(&support))
        }
        None => {
            inputs["fixture"]["trace_bound"] = json!(src.trace_bound);
            random_in_stratum(&params, r, cli.seed, None)
        }
    };
    Ok((f, inputs))
}

fn expansion_summary(f: &QExpansion) -> Value {
    json!({"trace_bound": f.trace_bound, "support": f.support_size(), "expansion": to_value(f)})
}

fn qexp(cli: &Cli, verb: &QexpVerb) -> Result<Run, CliError> {
    match verb {
        QexpVerb::Up { source, blocks, final_bound, check_flat, check_rank } => {
            let blocks: Vec<usize> = parse_list("--blocks", blocks)?;
            let cone = final_bound.map(|b| (blocks.as_slice(), b));
            let (f, mut inputs) = qexp_source(cli, source, cone)?;
            if blocks.iter().any(|&i| i == 0 || i > f.parabolic.d()) {
                return Err(usage("--blocks", format!("block indices must lie in 1..={}", f.parabolic.d())));
            }
            inputs["blocks"] = json!(blocks);
            let mut g = f;
            for &i in &blocks {
                g = up_ni(&g, i).map_err(runtime)?;
            }
            let mut checks = Vec::new();
            if let Some(r) = check_flat {
                checks.push(check(&format!("flat for r = {r}"), true, is_flat(&g, *r)));
                inputs["check_flat"] = json!(r);
            }
            if let Some(k) = check_rank {
                checks.push(check(&format!("vanishes at rank ≤ {k}"), true, vanishes_rank_le(&g, *k)));
                inputs["check_rank"] = json!(k);
            }
            Ok(Run { inputs, outputs: expansion_summary(&g), checks })
        }
        QexpVerb::CheckStratum { source, rank, flat } => {
            let (f, mut inputs) = qexp_source(cli, source, None)?;
            let mut outputs = json!({"trace_bound": f.trace_bound, "support": f.support_size()});
            let mut checks = Vec::new();
            if let Some(k) = rank {
                inputs["rank"] = json!(k);
                checks.push(check(&format!("vanishes at rank ≤ {k}"), true, vanishes_rank_le(&f, *k)));
            }
            if let Some(r) = flat {
                inputs["flat"] = json!(r);
                let witness = flatness_witness(&f, *r);
                outputs["flat_witness"] = witness.as_ref().map_or(Value::Null, to_value);
                checks.push(check(&format!("flat for r = {r}"), true, witness.is_none()));
            }
            if checks.is_empty() {
                return Err(usage("--rank/--flat", "give at least one predicate to evaluate"));
            }
            Ok(Run { inputs, outputs, checks })
        }
        QexpVerb::Project { source, max_steps } => {
            let (f, mut inputs) = qexp_source(cli, source, None)?;
            inputs["max_steps"] = json!(max_steps);
            let proj = ordinary_project(&f, *max_steps).map_err(runtime)?;
            let again = ordinary_project(&proj.expansion, *max_steps).map_err(runtime)?;
            let mut outputs = expansion_summary(&proj.expansion);
            outputs["steps"] = json!(proj.steps);
            Ok(Run {
                inputs,
                outputs,
                checks: vec![check("re-projection is a fixed point", true, again.expansion.agrees_on_common(&proj.expansion))],
            })
        }
    }
}

fn satake_source(cli: &Cli, src: &SatakeSource) -> Result<(SatakeData, Value), CliError> {
    if let Some(arg) = &src.input {
        let mut v = read_json("--input", arg)?;
        resolve_characters("--input", &mut v)?;
        let d: SatakeData = from_json("--input", &v)?;
        d.weight.validate().map_err(|e| usage("--input", e))?;
        return Ok((d, json!({"input": v})));
    }
    let d = match src.fixture.as_str() {
        // φ_p(p) = 1, α_n = p^{−1}, t_d = n+1, with and without monodromy.
        "semistable" | "crystalline" => {
            let mut d = simple_data(3, &[1, 1], &[5, 3], &[(-4, 1, 1), (-1, 1, 1)]);
            d.monodromy = src.fixture == "semistable";
            d
        }
        "random" => {
            let parts: Vec<usize> = parse_list("--parts", &src.parts)?;
            PartitionParabolic::new(parts.clone()).map_err(|e| usage("--parts", e))?;
            if src.p == 2 || !is_prime(src.p) {
                return Err(usage("--p", "random fixtures need an odd prime"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            random_ordinary(&mut rng, src.p, &parts, src.max_c)
        }
        other => return Err(usage("--fixture", format!("unknown fixture `{other}`"))),
    };
    Ok((d.clone(), json!({"data": to_value(&d)})))
}

fn euler(cli: &Cli, verb: &EulerVerb) -> Result<Run, CliError> {
    let near_central = |d: &SatakeData| d.n() as i64 + 1 - d.weight.t.last().copied().unwrap_or(0);
    match verb {
        EulerVerb::Ep { source, s, chi } => {
            let (d, mut inputs) = satake_source(cli, source)?;
            let eps_d = d.weight.eps.last().cloned().expect("nonempty");
            let chi = match chi {
                Some(c) => parse_character("--chi", c)?,
                None => eps_d.clone(),
            };
            let s = s.unwrap_or_else(|| near_central(&d));
            inputs["s"] = json!(s);
            inputs["chi"] = to_value(&chi);
            let value = e_p(s, &d, &chi).map_err(runtime)?;
            let mut checks = Vec::new();
            if s == near_central(&d) && chi == eps_d {
                let rhs = &a_p(&d).map_err(runtime)? * &e_imp(s, &d).map_err(runtime)?;
                checks.push(check("E_p = A_P · E_imp", &rhs, &value));
            }
            Ok(Run { inputs, outputs: json!({"e_p": to_value(&value), "display": value.to_string()}), checks })
        }
        EulerVerb::Imp { source, s } => {
            let (d, mut inputs) = satake_source(cli, source)?;
            let s = s.unwrap_or_else(|| near_central(&d));
            inputs["s"] = json!(s);
            let value = e_imp(s, &d).map_err(runtime)?;
            Ok(Run { inputs, outputs: json!({"e_imp": to_value(&value), "display": value.to_string()}), checks: vec![] })
        }
        EulerVerb::Ap { source } => {
            let (d, inputs) = satake_source(cli, source)?;
            let product = a_p_product(&d).map_err(runtime)?;
            let expansion = a_p_expansion(&d).map_err(runtime)?;
            Ok(Run {
                inputs,
                outputs: json!({"a_p": to_value(&product), "display": product.to_string()}),
                checks: vec![check("product and expanded forms agree", &product, &expansion)],
            })
        }
        EulerVerb::Classify { source, expect } => {
            let (d, mut inputs) = satake_source(cli, source)?;
            let class = format!("{:?}", classify_trivial_zero(&d));
            let mut checks = Vec::new();
            if let Some(e) = expect {
                inputs["expect"] = json!(e);
                checks.push(check("trivial-zero class", e, &class));
            }
            Ok(Run { inputs, outputs: json!({"class": class}), checks })
        }
    }
}

fn lseries(verb: &LseriesVerb) -> Result<Run, CliError> {
    match verb {
        LseriesVerb::Lvalue { chi, k, removed } => {
            let ch = parse_character("--chi", chi)?;
            if *k == 0 {
                return Err(usage("--k", "k must be positive"));
            }
            let removed: Vec<u64> = parse_list("--removed", removed)?;
            let value = if removed.is_empty() {
                l_nonpositive(&ch, *k).map_err(runtime)?.value
            } else {
                partial_l(&ch, *k, &removed).map_err(runtime)?
            };
            Ok(Run {
                inputs: json!({"chi": to_value(&ch), "k": k, "removed": removed}),
                outputs: json!({"value": to_value(&value), "display": value.to_string()}),
                checks: vec![],
            })
        }
        LseriesVerb::Gauss { chi } => {
            let ch = parse_character("--chi", chi)?;
            let g = gauss_sum(&ch).map_err(|e| usage("--chi", e))?;
            let norm = &g * &g.conj();
            Ok(Run {
                inputs: json!({"chi": to_value(&ch)}),
                outputs: json!({"gauss_sum": to_value(&g), "display": g.to_string()}),
                checks: vec![check("G · conj(G) = conductor", CycRational::from_int(ch.conductor() as i64), norm)],
            })
        }
    }
}

fn eis_spec(flag: &str, arg: &str) -> Result<(EisensteinSpec, Value), CliError> {
    let mut v = read_json(flag, arg)?;
    resolve_characters(flag, &mut v)?;
    let spec: EisensteinSpec = from_json(flag, &v)?;
    spec.validate().map_err(|e| usage(flag, e))?;
    Ok((spec, v))
}

fn eis(verb: &EisVerb) -> Result<Run, CliError> {
    match verb {
        EisVerb::Coeff { spec, beta } => {
            let (spec, sv) = eis_spec("--spec", spec)?;
            let b = parse_matrix("--beta", beta, spec.level)?;
            let provider = brute_force_provider(2 * spec.n, None);
            let c = coeff_c(&spec, &b, &provider).map_err(runtime)?;
            Ok(Run {
                inputs: json!({"spec": sv, "beta": to_value(&b)}),
                outputs: json!({"cyc": to_value(&c.cyc), "arch": to_value(&c.arch), "display": c.cyc.to_string()}),
                checks: vec![],
            })
        }
        EisVerb::Restrict { spec, b1, b2 } => {
            let (spec, sv) = eis_spec("--spec", spec)?;
            let m1 = parse_matrix("--b1", b1, spec.level)?;
            let m2 = parse_matrix("--b2", b2, spec.level)?;
            let provider = brute_force_provider(2 * spec.n, None);
            let r = restricted_coeff(&spec, &m1, &m2, &provider).map_err(runtime)?;
            Ok(Run {
                inputs: json!({"spec": sv, "b1": to_value(&m1), "b2": to_value(&m2)}),
                outputs: json!({
                    "cyc": to_value(&r.value.cyc),
                    "arch": to_value(&r.value.arch),
                    "completions": r.terms.len(),
                    "terms": to_value(&r.terms),
                    "display": r.value.cyc.to_string(),
                }),
                checks: vec![],
            })
        }
        EisVerb::CheckCongruence { spec, spec2, beta, a } => {
            let (s1, v1) = eis_spec("--spec", spec)?;
            let (s2, v2) = eis_spec("--spec2", spec2)?;
            let b = parse_matrix("--beta", beta, s1.level)?;
            let provider = brute_force_provider(2 * s1.n, None);
            let rep = check_congruence(&s1, &s2, &b, *a, &provider).map_err(runtime)?;
            Ok(Run {
                inputs: json!({"spec": v1, "spec2": v2, "beta": to_value(&b), "a": a}),
                outputs: to_value(&rep),
                checks: vec![check(&format!("congruent mod p^{}", a + 1), true, rep.congruent)],
            })
        }
    }
}

fn padic_list(flag: &str, p: u64, m: u32, v: &Value) -> Result<Vec<PadicNumber>, CliError> {
    let arr = v.as_array().ok_or_else(|| usage(flag, "center must be a list"))?;
    arr.iter()
        .map(|x| match x.as_i64() {
            Some(i) => Ok(PadicNumber::from_int(p, i, m)),
            None => padic_from_value(p, m, x).map_err(|e| usage(flag, e)),
        })
        .collect()
}

struct FamilyInput {
    first: PadicSeries,
    second: PadicSeries,
    var: usize,
    center: Vec<PadicNumber>,
}

fn family_input(arg: &str, keys: (&str, &str)) -> Result<(FamilyInput, Value), CliError> {
    let v = read_json("--input", arg)?;
    let field = |k: &str| v.get(k).ok_or_else(|| usage("--input", format!("missing field `{k}`")));
    let first: PadicSeries = from_json("--input", field(keys.0)?)?;
    let second: PadicSeries = from_json("--input", field(keys.1)?)?;
    let var = v.get("var").and_then(Value::as_u64).unwrap_or(0) as usize;
    if var >= first.vars.len() {
        return Err(usage("--input", format!("var {var} out of range")));
    }
    let center = match v.get("center") {
        Some(c) => padic_list("--input", first.p, first.m, c)?,
        None => vec![PadicNumber::from_int(first.p, 0, first.m); first.vars.len()],
    };
    Ok((FamilyInput { first, second, var, center }, v))
}

fn family(cli: &Cli, verb: &FamilyVerb) -> Result<Run, CliError> {
    let series = |fx: &SeriesFixture, terms: &[(Vec<u32>, i64)]| {
        PadicSeries::from_int_terms(fx.p, fx.precision, &["T"], fx.degree, terms).map_err(|e| usage("--p/--precision", e))
    };
    match verb {
        FamilyVerb::LInvariant { input, c, fixture } => {
            let (inp, inputs, expected) = match input {
                Some(arg) => {
                    let (inp, v) = family_input(arg, ("a_n", "a_nm1"))?;
                    (inp, json!({"input": v}), None)
                }
                None => {
                    let a = series(fixture, &[(vec![0], 1), (vec![1], *c)])?;
                    let one = series(fixture, &[(vec![0], 1)])?;
                    let zero = PadicNumber::from_int(fixture.p, 0, fixture.precision);
                    let inp = FamilyInput { first: a, second: one, var: 0, center: vec![zero] };
                    let inputs = json!({"fixture": {"c": c, "p": fixture.p, "M": fixture.precision, "D": fixture.degree}});
                    (inp, inputs, Some(PadicNumber::from_int(fixture.p, -c, fixture.precision)))
                }
            };
            let l = l_invariant(&inp.first, &inp.second, inp.var, &inp.center).map_err(runtime)?;
            let checks = expected.map(|e| vec![check("ℓ(1 + cT) = −c", e, l)]).unwrap_or_default();
            Ok(Run { inputs, outputs: json!({"l_invariant": to_value(&l), "display": l.to_string()}), checks })
        }
        FamilyVerb::DerivativeCheck { input, fixture } => {
            let (inp, inputs) = match input {
                Some(arg) => {
                    let (inp, v) = family_input(arg, ("u", "g"))?;
                    (inp, json!({"input": v}))
                }
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                    let (p, m, d) = (fixture.p, fixture.precision, fixture.degree);
                    let err = |e| usage("--p/--precision", e);
                    let mut u = random_int_series(&mut rng, p, m, &["T"], d, true).map_err(err)?;
                    u.set(vec![0], PadicNumber::from_int(p, 1, m));
                    let g = random_int_series(&mut rng, p, m, &["T"], d, false).map_err(err)?;
                    let center = vec![PadicNumber::from_int(p, 0, m)];
                    let inputs = json!({"fixture": {"seed": cli.seed, "p": p, "M": m, "D": d}});
                    (FamilyInput { first: u, second: g, var: 0, center }, inputs)
                }
            };
            let r = derivative_identity(&inp.first, &inp.second, inp.var, &inp.center).map_err(runtime)?;
            Ok(Run {
                inputs,
                outputs: json!({"lhs": to_value(&r.lhs), "rhs": to_value(&r.rhs)}),
                checks: vec![check("derivative identity", true, r.equal)],
            })
        }
    }
}

fn command_name(group: &Group) -> &'static str {
    match group {
        Group::Cosets { verb: CosetsVerb::Verify { .. } } => "cosets verify",
        Group::Qexp { verb } => match verb {
            QexpVerb::Up { .. } => "qexp up",
            QexpVerb::CheckStratum { .. } => "qexp check-stratum",
            QexpVerb::Project { .. } => "qexp project",
        },
        Group::Euler { verb } => match verb {
            EulerVerb::Ep { .. } => "euler ep",
            EulerVerb::Imp { .. } => "euler imp",
            EulerVerb::Ap { .. } => "euler ap",
            EulerVerb::Classify { .. } => "euler classify",
        },
        Group::Lseries { verb } => match verb {
            LseriesVerb::Lvalue { .. } => "lseries lvalue",
            LseriesVerb::Gauss { .. } => "lseries gauss",
        },
        Group::Eis { verb } => match verb {
            EisVerb::Coeff { .. } => "eis coeff",
            EisVerb::Restrict { .. } => "eis restrict",
            EisVerb::CheckCongruence { .. } => "eis check-congruence",
        },
        Group::Family { verb } => match verb {
            FamilyVerb::LInvariant { .. } => "family l-invariant",
            FamilyVerb::DerivativeCheck { .. } => "family derivative-check",
        },
    }
}

fn dispatch(cli: &Cli) -> Result<Run, CliError> {
    match &cli.group {
        Group::Cosets { verb: CosetsVerb::Verify { n, parts, r, p, l } } => cosets_verify(cli, *n, parts, *r, *p, *l),
        Group::Qexp { verb } => qexp(cli, verb),
        Group::Euler { verb } => euler(cli, verb),
        Group::Lseries { verb } => lseries(verb),
        Group::Eis { verb } => eis(verb),
        Group::Family { verb } => family(cli, verb),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn print_text(report: &RunReport) {
    println!("command: {}", report.command);
    println!("inputs: sha256:{}", report.inputs_digest);
    if let Value::Object(map) = &report.outputs {
        for (k, v) in map {
            // Large structured values are only shown in the JSON report.
            if matches!(v, Value::Object(_) | Value::Array(_)) {
                continue;
            }
            println!("{k}={}", scalar(v));
        }
    }
    for c in &report.checks {
        println!(
            "check {}: {} (expected {}, actual {})",
            c.name,
            if c.pass { "pass" } else { "FAIL" },
            c.expected,
            c.actual
        );
    }
    println!("result: {}", if report.pass { "pass" } else { "FAIL" });
    if let Some(t) = &report.wall_time {
        println!("wall_time: {t}");
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let start = Instant::now();
    let run = match dispatch(&cli) {
        Ok(run) => run,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(match e {
                CliError::Usage(_) => 2,
                CliError::Runtime(_) => 1,
            });
        }
    };
    let canonical = serde_json::to_string(&run.inputs).expect("serializable");
    let pass = run.checks.iter().all(|c| c.pass);
    let report = RunReport {
        command: command_name(&cli.group).to_string(),
        inputs_digest: hex::encode(Sha256::digest(canonical.as_bytes())),
        inputs: run.inputs,
        outputs: run.outputs,
        checks: run.checks,
        pass,
        wall_time: (!cli.no_time).then(|| format!("{:.6}s", start.elapsed().as_secs_f64())),
    };
    if cli.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
    } else {
        print_text(&report);
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
