//! Command-line front end. Three subcommands share one artifact discipline:
//! `construct` writes alist matrices with JSON sidecars, `analyze` emits a
//! JSON report (with `--expect` assertions for CI), `simulate` emits a
//! Monte-Carlo CSV. Every file written lands atomically and gets a manifest
//! recording the full parameter set and SHA-256 digests, so a run can be
//! reproduced and checked byte for byte.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use latin_ldpc::analysis::{
    census, column_distance, density_check, free_distance, girth, girth_stabilized, AnalysisReport,
    DFreeBounds, StartRegion, DEFAULT_CYCLE_BUDGET, MAX_CYCLE_LEN,
};
use latin_ldpc::blockcodes::{build_base, lift_step, BlockCode, BlockSidecar, Stage};
use latin_ldpc::convcodes::{
    materialize, ConstructionSpec, ConvFamily, Family, Sidecar, SlidingWindow,
};
use latin_ldpc::gf2sparse::{read_alist_path, write_alist, SparseBinaryMatrix};
use latin_ldpc::simulate::{monte_carlo, write_csv, MonteCarloConfig, Source};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Exit code for a violated `--expect` assertion (1 is reserved for errors).
const EXPECT_FAILED: u8 = 2;

#[derive(Parser)]
#[command(
    name = "latin-ldpc",
    version,
    about = "Construct, analyze, and simulate LDPC code matrices"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Build a matrix and write it as alist plus a JSON sidecar.
    Construct(ConstructArgs),
    /// Compute girth, cycle counts, densities, and distances; JSON out.
    Analyze(AnalyzeArgs),
    /// Monte-Carlo sweep over a binary symmetric channel; CSV out.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct ConstructArgs {
    /// Family: tv, tv-tilde, ti-prime, ti-hat, or block.
    #[arg(long)]
    family: String,
    /// Prime modulus (convolutional families).
    #[arg(long)]
    p: Option<usize>,
    /// Memory (convolutional families).
    #[arg(long)]
    mu: Option<usize>,
    /// Lifting level (convolutional), or the size parameter m (block).
    #[arg(long)]
    m: Option<usize>,
    /// Window size: block columns 0..=s (convolutional families).
    #[arg(long)]
    s: Option<usize>,
    /// Block-code stage: base, step1..step4, or final.
    #[arg(long)]
    stage: Option<String>,
    /// Output alist path; the sidecar and manifest are written next to it.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Inline spec, e.g. "tv:p=5,mu=3,m=1" or "block:m=2,stage=final".
    #[arg(long, conflicts_with = "input")]
    spec: Option<String>,
    /// Read the matrix from an alist file instead of building it.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Window size for convolutional specs. Without it, girth is computed on
    /// stabilized growing windows; censuses and densities require it.
    #[arg(long)]
    s: Option<usize>,
    /// Report the girth.
    #[arg(long)]
    girth: bool,
    /// Count cycles of one exact even length.
    #[arg(long)]
    count_cycles: Option<usize>,
    /// Census of every even cycle length from 4 up to this bound.
    #[arg(long)]
    census: Option<usize>,
    /// Column distances d_0..d_jmax (convolutional specs only).
    #[arg(long)]
    distances: bool,
    /// Largest column-distance index.
    #[arg(long, default_value_t = 5)]
    jmax: usize,
    /// Give up on a column distance above this weight.
    #[arg(long, default_value_t = 8)]
    d_cap: usize,
    /// Bracket the free distance (convolutional specs only).
    #[arg(long)]
    dfree: bool,
    /// Check the window density against the family's closed form.
    #[arg(long)]
    density: bool,
    /// Assertion such as "girth>=8", "census6==0", "d3>=4", "dfree_lo==5",
    /// or "density_match"; repeatable; any violation exits with code 2.
    #[arg(long)]
    expect: Vec<String>,
    /// Also write the JSON report to this path (with a manifest).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Inline spec for the window to simulate, e.g. "tv:p=5,mu=3,m=0".
    #[arg(long, conflicts_with = "input")]
    spec: Option<String>,
    /// Read the parity-check matrix from an alist file instead.
    #[arg(long = "in")]
    input: Option<PathBuf>,
    /// Window size (required with --spec).
    #[arg(long)]
    s: Option<usize>,
    /// Comma-separated crossover probabilities, each in [0, 0.5).
    #[arg(long, value_delimiter = ',', required = true)]
    crossovers: Vec<f64>,
    /// Frames per channel point (must be positive).
    #[arg(long)]
    frames: u64,
    /// Seed for the reproducible noise and data streams.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Decoder iteration limit.
    #[arg(long, default_value_t = 50)]
    max_iters: usize,
    /// Transmitted words: "all-zero" or "random" (random needs --spec).
    #[arg(long, default_value = "all-zero")]
    source: String,
    /// Output CSV path (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Usage mistakes exit 1 like any other error; code 2 is reserved for
    // violated --expect assertions so CI can tell the two apart.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            return ExitCode::FAILURE;
        }
        Err(help_or_version) => {
            let _ = help_or_version.print();
            return ExitCode::SUCCESS;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Construct(a) => cmd_construct(a),
        Cmd::Analyze(a) => cmd_analyze(a),
        Cmd::Simulate(a) => cmd_simulate(a),
    }
}

// ---------------------------------------------------------------- construct

fn cmd_construct(a: ConstructArgs) -> Result<ExitCode> {
    let mut params = BTreeMap::new();
    params.insert("family".into(), a.family.clone());
    let (matrix, sidecar_json) = if a.family == "block" {
        if a.p.is_some() || a.mu.is_some() || a.s.is_some() {
            bail!("block codes take --m and --stage only");
        }
        let m = a.m.context("block codes need --m")?;
        let stage = Stage::from_str(a.stage.as_deref().unwrap_or("final"))?;
        params.insert("m".into(), m.to_string());
        params.insert("stage".into(), stage.to_string());
        let code = build_block(m, stage)?;
        let sidecar = serde_json::to_vec_pretty(&BlockSidecar::of(&code))?;
        (code.matrix, sidecar)
    } else {
        if a.stage.is_some() {
            bail!("--stage applies to block codes only");
        }
        let spec = conv_spec(&a.family, a.p, a.mu, a.m)?;
        let s =
            a.s.context("convolutional families need --s for the window")?;
        params.insert("p".into(), spec.p.to_string());
        params.insert("mu".into(), spec.mu.to_string());
        params.insert("m".into(), spec.m.to_string());
        params.insert("s".into(), s.to_string());
        let w = materialize(&spec.build()?, s)?;
        let sidecar = serde_json::to_vec_pretty(
            &Sidecar::from_window(&w).context("window carries no construction origin")?,
        )?;
        (w.matrix, sidecar)
    };

    let mut alist = Vec::new();
    write_alist(&matrix, &mut alist)?;
    let sidecar_path = a.out.with_extension("json");
    write_atomic(&a.out, &alist)?;
    write_atomic(&sidecar_path, &sidecar_json)?;

    let mut manifest = RunManifest::new("construct", params);
    manifest.record_output(&a.out, &alist);
    manifest.record_output(&sidecar_path, &sidecar_json);
    let manifest_path = manifest.write_next_to(&a.out)?;

    println!(
        "wrote {}x{} matrix ({} nonzeros) to {} (sidecar {}, manifest {})",
        matrix.n_rows(),
        matrix.n_cols(),
        matrix.nnz(),
        a.out.display(),
        sidecar_path.display(),
        manifest_path.display()
    );
    Ok(ExitCode::SUCCESS)
}

/// Grow a block code from its base through the requested number of steps.
fn build_block(m: usize, stage: Stage) -> Result<BlockCode> {
    let steps = match stage {
        Stage::Base => 0,
        Stage::Step1 => 1,
        Stage::Step2 => 2,
        Stage::Step3 => 3,
        Stage::Step4 => 4,
    };
    let mut code = build_base(m)?;
    for step in 1..=steps {
        code = lift_step(&code, step)?;
    }
    Ok(code)
}

fn conv_spec(
    family: &str,
    p: Option<usize>,
    mu: Option<usize>,
    m: Option<usize>,
) -> Result<ConstructionSpec> {
    let family = parse_family(family)?;
    let p = p.context("convolutional families need --p")?;
    let mu = mu.context("convolutional families need --mu")?;
    Ok(ConstructionSpec::new(family, p, mu, m.unwrap_or(0))?)
}

fn parse_family(s: &str) -> Result<Family> {
    Ok(match s {
        "tv" => Family::Tv,
        "tv-tilde" => Family::TvTilde,
        "ti-prime" => Family::TiPrime,
        "ti-hat" => Family::TiHat,
        other => bail!("unknown family '{other}' (tv, tv-tilde, ti-prime, ti-hat, block)"),
    })
}

// ------------------------------------------------------------------ analyze

/// What an `--expect` assertion talks about.
enum Quantity {
    Girth,
    Census(usize),
    ColumnDistance(usize),
    DfreeLo,
    DfreeHi,
    DensityMatch,
}

enum Op {
    Eq,
    Ne,
    Ge,
    Le,
    Gt,
    Lt,
}

impl Op {
    fn eval(&self, lhs: u64, rhs: u64) -> bool {
        match self {
            Op::Eq => lhs == rhs,
            Op::Ne => lhs != rhs,
            Op::Ge => lhs >= rhs,
            Op::Le => lhs <= rhs,
            Op::Gt => lhs > rhs,
            Op::Lt => lhs < rhs,
        }
    }
}

struct Expectation {
    text: String,
    quantity: Quantity,
    op: Op,
    value: u64,
}

fn parse_expect(text: &str) -> Result<Expectation> {
    let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    if compact == "density_match" {
        return Ok(Expectation {
            text: text.to_string(),
            quantity: Quantity::DensityMatch,
            op: Op::Eq,
            value: 1,
        });
    }
    // Two-character operators first so ">=" is not read as ">" then "=".
    let (op_at, op_len, op) = ["==", "!=", ">=", "<=", ">", "<"]
        .iter()
        .filter_map(|o| compact.find(o).map(|i| (i, o.len(), o)))
        .min_by_key(|&(i, len, _)| (i, std::cmp::Reverse(len)))
        .ok_or_else(|| anyhow!("no comparison in expectation '{text}'"))?;
    let op = match *op {
        "==" => Op::Eq,
        "!=" => Op::Ne,
        ">=" => Op::Ge,
        "<=" => Op::Le,
        ">" => Op::Gt,
        _ => Op::Lt,
    };
    let key = &compact[..op_at];
    let value: u64 = compact[op_at + op_len..]
        .parse()
        .with_context(|| format!("bad value in expectation '{text}'"))?;
    let quantity = if key == "girth" {
        Quantity::Girth
    } else if key == "dfree_lo" {
        Quantity::DfreeLo
    } else if key == "dfree_hi" {
        Quantity::DfreeHi
    } else if let Some(len) = key.strip_prefix("census") {
        Quantity::Census(
            len.parse()
                .with_context(|| format!("bad census length in '{text}'"))?,
        )
    } else if let Some(j) = key.strip_prefix('d') {
        Quantity::ColumnDistance(
            j.parse()
                .with_context(|| format!("bad distance index in '{text}'"))?,
        )
    } else {
        bail!("unknown quantity '{key}' in expectation '{text}' (girth, census<L>, d<j>, dfree_lo, dfree_hi, density_match)");
    };
    Ok(Expectation {
        text: text.to_string(),
        quantity,
        op,
        value,
    })
}

/// The matrix under analysis, with whatever family context it came with.
struct Target {
    matrix: SparseBinaryMatrix,
    /// Present when built from an inline convolutional spec.
    family: Option<(ConstructionSpec, ConvFamily)>,
    window: Option<SlidingWindow>,
    input_digest: Option<(PathBuf, String)>,
}

fn cmd_analyze(a: AnalyzeArgs) -> Result<ExitCode> {
    let expectations: Vec<Expectation> = a
        .expect
        .iter()
        .map(|t| parse_expect(t))
        .collect::<Result<_>>()?;

    // Fold assertion needs into the requested sections.
    let mut want_girth = a.girth;
    let mut census_to = a.census;
    let count_len = a.count_cycles;
    let mut want_distances = a.distances;
    let mut jmax = a.jmax;
    let mut want_dfree = a.dfree;
    let mut want_density = a.density;
    for e in &expectations {
        match e.quantity {
            Quantity::Girth => want_girth = true,
            Quantity::Census(len) => {
                if census_to.is_none_or(|c| c < len) && count_len != Some(len) {
                    census_to = Some(census_to.map_or(len, |c| c.max(len)));
                }
            }
            Quantity::ColumnDistance(j) => {
                want_distances = true;
                jmax = jmax.max(j);
            }
            Quantity::DfreeLo | Quantity::DfreeHi => want_dfree = true,
            Quantity::DensityMatch => want_density = true,
        }
    }
    let nothing_to_do = !want_girth
        && census_to.is_none()
        && count_len.is_none()
        && !want_distances
        && !want_dfree
        && !want_density;
    if nothing_to_do {
        bail!("nothing to analyze: pass --girth, --census, --count-cycles, --distances, --dfree, or --density");
    }

    // Reject infeasible enumeration lengths before building anything.
    for len in census_to.iter().chain(count_len.iter()) {
        if *len < 4 || len % 2 != 0 || *len > MAX_CYCLE_LEN {
            bail!("cycle length {len} is out of range (even, 4..={MAX_CYCLE_LEN})");
        }
    }

    let target = resolve_target(a.spec.as_deref(), a.input.as_deref(), a.s)?;
    if (census_to.is_some() || count_len.is_some())
        && target.family.is_some()
        && target.window.is_none()
    {
        bail!("cycle counts on an inline convolutional spec need --s for the window");
    }
    let mut report = AnalysisReport {
        spec: target.family.as_ref().map(|(spec, _)| *spec),
        window_s: target.window.as_ref().map(|w| w.s),
        ..AnalysisReport::default()
    };

    if want_girth {
        match (&target.window, &target.family) {
            // No explicit window: let the window grow until the value settles.
            (None, Some((spec, _))) => {
                let rep = girth_stabilized(*spec)?;
                report.girth = rep.girth;
                report.window_s = rep.window_s;
                report.stabilized = Some(rep.stabilized);
                report.witness = rep.witness;
            }
            _ => {
                let rep = girth(&target.matrix, &StartRegion::All);
                report.girth = rep.girth;
                report.witness = rep.witness;
            }
        }
    }

    if census_to.is_some() || count_len.is_some() {
        let max_len = census_to
            .into_iter()
            .chain(count_len)
            .max()
            .expect("checked nonempty");
        let c = census(
            &target.matrix,
            max_len,
            &StartRegion::All,
            DEFAULT_CYCLE_BUDGET,
        )?;
        let mut counts = c.counts;
        if let (Some(exact), None) = (count_len, census_to) {
            counts.retain(|len, _| *len == exact);
        }
        report.census = Some(counts);
    }

    if want_distances || want_dfree {
        let (_, fam) = target
            .family
            .as_ref()
            .context("distances need an inline convolutional spec (--spec)")?;
        if want_distances {
            let mut map = BTreeMap::new();
            for j in 0..=jmax {
                if let Some(d) = column_distance(fam, j, Some(a.d_cap))? {
                    map.insert(j, d);
                }
            }
            report.distances = Some(map);
        }
        if want_dfree {
            let b = free_distance(fam, jmax, 3, 4)?;
            report.d_free = Some(DFreeBounds {
                lo: b.lo,
                hi: Some(b.hi),
            });
        }
    }

    if want_density {
        let w = target
            .window
            .as_ref()
            .context("density needs an inline convolutional spec with --s")?;
        report.density = Some(density_check(w)?);
    }

    let json = serde_json::to_vec_pretty(&report)?;
    let mut stdout = std::io::stdout().lock();
    stdout.write_all(&json)?;
    stdout.write_all(b"\n")?;

    if let Some(out) = &a.out {
        write_atomic(out, &json)?;
        let mut params = analyze_params(&a, jmax);
        if let Some((path, digest)) = &target.input_digest {
            params.insert("in".into(), path.display().to_string());
            let mut manifest = RunManifest::new("analyze", params);
            manifest.inputs.insert(file_name(path), digest.clone());
            manifest.record_output(out, &json);
            manifest.write_next_to(out)?;
        } else {
            let mut manifest = RunManifest::new("analyze", params);
            manifest.record_output(out, &json);
            manifest.write_next_to(out)?;
        }
    }

    let mut failures = Vec::new();
    for e in &expectations {
        if let Err(why) = check_expectation(e, &report) {
            failures.push(format!("expect '{}' failed: {why}", e.text));
        } else {
            eprintln!("expect '{}': ok", e.text);
        }
    }
    if failures.is_empty() {
        Ok(ExitCode::SUCCESS)
    } else {
        for f in &failures {
            eprintln!("{f}");
        }
        Ok(ExitCode::from(EXPECT_FAILED))
    }
}

fn analyze_params(a: &AnalyzeArgs, jmax: usize) -> BTreeMap<String, String> {
    let mut p = BTreeMap::new();
    if let Some(s) = &a.spec {
        p.insert("spec".into(), s.clone());
    }
    if let Some(s) = a.s {
        p.insert("s".into(), s.to_string());
    }
    p.insert("jmax".into(), jmax.to_string());
    p.insert("d_cap".into(), a.d_cap.to_string());
    for (flag, on) in [
        ("girth", a.girth),
        ("distances", a.distances),
        ("dfree", a.dfree),
        ("density", a.density),
    ] {
        if on {
            p.insert(flag.into(), "true".into());
        }
    }
    if let Some(len) = a.census {
        p.insert("census".into(), len.to_string());
    }
    if let Some(len) = a.count_cycles {
        p.insert("count_cycles".into(), len.to_string());
    }
    for (i, e) in a.expect.iter().enumerate() {
        p.insert(format!("expect.{i}"), e.clone());
    }
    p
}

fn check_expectation(e: &Expectation, report: &AnalysisReport) -> Result<(), String> {
    let actual: u64 = match e.quantity {
        Quantity::Girth => match report.girth {
            Some(g) => g as u64,
            // Acyclic: girth is unbounded, so it clears any lower bound and
            // misses any exact or upper comparison.
            None => {
                let holds = matches!(e.op, Op::Ge | Op::Gt | Op::Ne);
                return if holds {
                    Ok(())
                } else {
                    Err("no cycle found (girth unbounded)".into())
                };
            }
        },
        Quantity::Census(len) => *report
            .census
            .as_ref()
            .and_then(|c| c.get(&len))
            .ok_or_else(|| format!("length-{len} count was not computed"))?,
        Quantity::ColumnDistance(j) => *report
            .distances
            .as_ref()
            .and_then(|d| d.get(&j))
            .ok_or_else(|| format!("d_{j} not available (above the cap or not computed)"))?
            as u64,
        Quantity::DfreeLo => report.d_free.ok_or("free distance not computed")?.lo as u64,
        Quantity::DfreeHi => report
            .d_free
            .ok_or("free distance not computed")?
            .hi
            .ok_or("no certified upper bound")? as u64,
        Quantity::DensityMatch => {
            let dc = report.density.as_ref().ok_or("density not computed")?;
            return if dc.matches {
                Ok(())
            } else {
                Err(format!(
                    "measured {}/{} differs from formula {}/{}",
                    dc.measured.numerator(),
                    dc.measured.denominator(),
                    dc.formula.numerator(),
                    dc.formula.denominator()
                ))
            };
        }
    };
    if e.op.eval(actual, e.value) {
        Ok(())
    } else {
        Err(format!("actual value {actual}"))
    }
}

/// Build or load the matrix a subcommand operates on.
fn resolve_target(spec: Option<&str>, input: Option<&Path>, s: Option<usize>) -> Result<Target> {
    match (spec, input) {
        (Some(text), None) => match parse_spec(text)? {
            ParsedSpec::Conv { spec, s: spec_s } => {
                let fam = spec.build()?;
                let window = match s.or(spec_s) {
                    Some(s) => Some(materialize(&fam, s)?),
                    None => None,
                };
                let matrix = window
                    .as_ref()
                    .map(|w| w.matrix.clone())
                    .unwrap_or_else(|| SparseBinaryMatrix::zero(0, 0));
                Ok(Target {
                    matrix,
                    family: Some((spec, fam)),
                    window,
                    input_digest: None,
                })
            }
            ParsedSpec::Block { m, stage } => {
                if s.is_some() {
                    bail!("--s applies to convolutional specs only");
                }
                let code = build_block(m, stage)?;
                Ok(Target {
                    matrix: code.matrix,
                    family: None,
                    window: None,
                    input_digest: None,
                })
            }
        },
        (None, Some(path)) => {
            if s.is_some() {
                bail!("--s applies to inline specs only");
            }
            let matrix =
                read_alist_path(path).with_context(|| format!("reading {}", path.display()))?;
            let bytes = std::fs::read(path)?;
            Ok(Target {
                matrix,
                family: None,
                window: None,
                input_digest: Some((path.to_path_buf(), sha256_hex(&bytes))),
            })
        }
        _ => bail!("pass exactly one of --spec or --in"),
    }
}

enum ParsedSpec {
    Conv {
        spec: ConstructionSpec,
        s: Option<usize>,
    },
    Block {
        m: usize,
        stage: Stage,
    },
}

/// "tv:p=5,mu=3,m=1" / "tv:p=5,mu=3,m=1,s=12" / "block:m=2,stage=final".
fn parse_spec(text: &str) -> Result<ParsedSpec> {
    let (family, rest) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("spec '{text}' needs the form family:key=value,..."))?;
    let mut fields = BTreeMap::new();
    for item in rest.split(',').filter(|i| !i.is_empty()) {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| anyhow!("bad spec item '{item}' in '{text}'"))?;
        if fields.insert(k.trim(), v.trim()).is_some() {
            bail!("duplicate key '{}' in spec '{text}'", k.trim());
        }
    }
    let mut take_usize = |key: &str| -> Result<Option<usize>> {
        fields
            .remove(key)
            .map(|v| {
                v.parse::<usize>()
                    .with_context(|| format!("bad {key} in spec '{text}'"))
            })
            .transpose()
    };
    let parsed = if family == "block" {
        let m = take_usize("m")?.context("block spec needs m")?;
        let stage = match fields.remove("stage") {
            Some(v) => Stage::from_str(v)?,
            None => Stage::Step4,
        };
        ParsedSpec::Block { m, stage }
    } else {
        let fam = parse_family(family)?;
        let p = take_usize("p")?.context("convolutional spec needs p")?;
        let mu = take_usize("mu")?.context("convolutional spec needs mu")?;
        let m = take_usize("m")?.unwrap_or(0);
        let s = take_usize("s")?;
        ParsedSpec::Conv {
            spec: ConstructionSpec::new(fam, p, mu, m)?,
            s,
        }
    };
    if let Some(stray) = fields.keys().next() {
        bail!("unknown key '{stray}' in spec '{text}'");
    }
    Ok(parsed)
}

// ----------------------------------------------------------------- simulate

fn cmd_simulate(a: SimulateArgs) -> Result<ExitCode> {
    if a.frames == 0 {
        bail!("--frames must be positive");
    }
    let target = resolve_target(a.spec.as_deref(), a.input.as_deref(), a.s)?;
    if target.family.is_some() && target.window.is_none() {
        bail!("simulation of an inline spec needs --s for the window");
    }
    let source = match a.source.as_str() {
        "all-zero" => Source::AllZero,
        "random" => {
            let (_, fam) = target
                .family
                .as_ref()
                .context("--source random needs an inline spec to encode with")?;
            Source::RandomCodeword { family: fam }
        }
        other => bail!("unknown source '{other}' (all-zero, random)"),
    };
    let cfg = MonteCarloConfig {
        h: &target.matrix,
        source,
        crossovers: &a.crossovers,
        frames: a.frames,
        seed: a.seed,
        max_iters: a.max_iters,
    };
    let points = monte_carlo(&cfg)?;
    let mut csv = Vec::new();
    write_csv(&points, &mut csv)?;

    match &a.out {
        None => {
            std::io::stdout().lock().write_all(&csv)?;
        }
        Some(out) => {
            write_atomic(out, &csv)?;
            let mut params = BTreeMap::new();
            if let Some(spec) = &a.spec {
                params.insert("spec".into(), spec.clone());
            }
            if let Some(s) = a.s {
                params.insert("s".into(), s.to_string());
            }
            let mut grid = String::new();
            for (i, c) in a.crossovers.iter().enumerate() {
                if i > 0 {
                    grid.push(',');
                }
                let _ = write!(grid, "{c}");
            }
            params.insert("crossovers".into(), grid);
            params.insert("frames".into(), a.frames.to_string());
            params.insert("seed".into(), a.seed.to_string());
            params.insert("max_iters".into(), a.max_iters.to_string());
            params.insert("source".into(), a.source.clone());
            let mut manifest = RunManifest::new("simulate", params);
            if let Some((path, digest)) = &target.input_digest {
                manifest.inputs.insert(file_name(path), digest.clone());
            }
            manifest.record_output(out, &csv);
            let manifest_path = manifest.write_next_to(out)?;
            println!(
                "wrote {} channel points to {} (manifest {})",
                points.len(),
                out.display(),
                manifest_path.display()
            );
        }
    }
    Ok(ExitCode::SUCCESS)
}

// ----------------------------------------------------------------- plumbing

/// Everything needed to reproduce a run and check its artifacts.
#[derive(Serialize)]
struct RunManifest {
    subcommand: String,
    parameters: BTreeMap<String, String>,
    version: String,
    /// File name -> SHA-256 of the bytes read.
    inputs: BTreeMap<String, String>,
    /// File name -> SHA-256 of the bytes written.
    outputs: BTreeMap<String, String>,
}

impl RunManifest {
    fn new(subcommand: &str, parameters: BTreeMap<String, String>) -> Self {
        RunManifest {
            subcommand: subcommand.to_string(),
            parameters,
            version: env!("CARGO_PKG_VERSION").to_string(),
            inputs: BTreeMap::new(),
            outputs: BTreeMap::new(),
        }
    }

    fn record_output(&mut self, path: &Path, bytes: &[u8]) {
        self.outputs.insert(file_name(path), sha256_hex(bytes));
    }

    /// Write `<stem>.manifest.json` next to the primary output.
    fn write_next_to(&self, primary: &Path) -> Result<PathBuf> {
        let path = primary.with_extension("manifest.json");
        let mut bytes = serde_json::to_vec_pretty(self)?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    format!("{:x}", h.finalize())
}

/// All-or-nothing file write: temp file in the same directory, then rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating a temp file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.persist(path)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}
