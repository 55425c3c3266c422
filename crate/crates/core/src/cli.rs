//! Command-line front end.
//!
//! Exit codes: 0 when every check passes, 1 on a check failure, 2 on a
//! configuration, parse or I/O error, 3 on numerical divergence. Every
//! artifact is a pure function of the arguments and input files and embeds
//! the resolved configuration.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::constants::{dg_constants_from_pde, full_chain, ChainOptions, DgParams, PdeParams};
use crate::corpus::{run_corpus, CorpusConfig};
use crate::error::{Error, Result};
use crate::fields::{build_field, io, FieldKind, GridField, GridSpec, Sign};
use crate::iterate::{simulate_recurrence, RecurrenceSpec, RecurrenceVerdict};
use crate::par::{set_thread_cap, Execution};
use crate::solver::{solve_detailed, SolveRequest};
use crate::verify::{
    check_close_times, check_dg_membership, check_dg_samples, check_first_lemma_iteration,
    check_ivl_h1, check_ivl_parabolic, estimate_holder, fmt_f64, run_lowering_max, time_lattice,
    CheckReport, DgCheckOptions, DgSample, IvlOrientation, Verdict, DEFAULT_FIRST_LEMMA_STEPS,
    DEFAULT_TOLERANCE_CONSTANT,
};

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "DEGIORGI_OUT";

#[derive(Debug, Parser)]
#[command(name = "degiorgi", version, about = "Quantitative De Giorgi chain: constants, solver and checks")]
pub struct Cli {
    /// Seed of every random choice.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV, default_value = ".")]
    pub out: PathBuf,
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Constant `c` of the sampled tolerance `c (dx + dt) scale`.
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Override of the Sobolev embedding constant.
    #[arg(long, global = true)]
    pub sobolev_constant: Option<f64>,
    /// Run single-threaded.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compute the constant chain and its ledger.
    Constants(ConstantsArgs),
    /// Run the solver on a JSON request and write the field.
    Solve(SolveArgs),
    /// Simulate the nonlinear recurrence `V_k = C^k V_{k-1}^alpha`.
    Iterate(IterateArgs),
    /// Run one check on a field file.
    Verify(VerifyArgs),
    /// Run the jump-field suite.
    Counterexample(CounterexampleArgs),
    /// Generate seeded solver fields and run the full battery.
    Corpus(CorpusArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct ConstantsArgs {
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long)]
    pub gamma1: Option<f64>,
    #[arg(long)]
    pub gamma2: Option<f64>,
    #[arg(long)]
    pub gamma3: Option<f64>,
    #[arg(long)]
    pub p: Option<f64>,
    /// Ellipticity lower bound; with `--Lambda`, `--q`, `--g-norm` derives
    /// the class parameters from the equation.
    #[arg(long, conflicts_with_all = ["gamma1", "gamma2", "gamma3", "p"])]
    pub lambda: Option<f64>,
    #[arg(long = "Lambda")]
    #[serde(rename = "Lambda")]
    pub big_lambda: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    #[arg(long)]
    pub g_norm: Option<f64>,
    /// Sobolev exponent in dimension two.
    #[arg(long)]
    pub q2: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub c_ivl_factor: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct SolveArgs {
    /// JSON solve request.
    #[arg(long)]
    pub config: PathBuf,
    /// Name of the field file written to the output directory.
    #[arg(long, default_value = "field.dgf")]
    pub name: String,
}

#[derive(Debug, Args, Serialize)]
pub struct IterateArgs {
    #[arg(long = "C")]
    #[serde(rename = "C")]
    pub c: f64,
    #[arg(long)]
    pub alpha: f64,
    #[arg(long = "V0")]
    #[serde(rename = "V0")]
    pub v0: f64,
    #[arg(long, default_value_t = 20)]
    pub kmax: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CheckName {
    Dg,
    Ivl,
    IvlH1,
    CloseTimes,
    FirstLemma,
    LoweringMax,
    Holder,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OrientationArg {
    Canonical,
    AsPrinted,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SignArg {
    Plus,
    Minus,
    Both,
}

#[derive(Debug, Args, Serialize)]
pub struct DgArgs {
    #[arg(long, default_value_t = 0.5)]
    pub gamma1: f64,
    #[arg(long, default_value_t = 20.0)]
    pub gamma2: f64,
    #[arg(long, default_value_t = 0.0)]
    pub gamma3: f64,
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
}

impl DgArgs {
    fn params(&self) -> DgParams {
        DgParams::new(self.gamma1, self.gamma2, self.gamma3, self.p)
    }
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub check: CheckName,
    /// Field file as written by `solve`.
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long, value_enum, default_value_t = OrientationArg::Canonical)]
    pub orientation: OrientationArg,
    #[arg(long, default_value_t = 0.0)]
    pub k: f64,
    #[arg(long, default_value_t = 0.5)]
    pub l: f64,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = SignArg::Plus)]
    pub sign: SignArg,
    /// Time of the slice used by `ivl-h1`.
    #[arg(long, default_value_t = 0.0)]
    pub time: f64,
    /// Ball radius used by `ivl-h1`.
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    /// Points per axis of the close-times lattice.
    #[arg(long, default_value_t = 10)]
    pub lattice: usize,
    #[arg(long, default_value_t = 4)]
    pub scales: usize,
    #[command(flatten)]
    pub dg: DgArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct CounterexampleArgs {
    /// Spatial cells across the width-4 domain, one run per value.
    #[arg(long, value_delimiter = ',', default_values_t = [128usize, 256, 512])]
    pub nx: Vec<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct CorpusArgs {
    #[arg(long, default_value_t = 10)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub d: usize,
    #[arg(long, default_value_t = 512)]
    pub nt: usize,
    #[arg(long, default_value_t = 128)]
    pub nx: usize,
    #[arg(long, default_value_t = 200)]
    pub samples: usize,
}

/// Global options as they enter artifacts.
#[derive(Debug, Serialize)]
struct Globals {
    seed: u64,
    tolerance: f64,
    sobolev_constant: Option<f64>,
}

#[derive(Serialize)]
struct Artifact<'a, C: Serialize, R: Serialize> {
    command: &'a str,
    globals: &'a Globals,
    config: C,
    result: R,
}

struct Context {
    out: PathBuf,
    globals: Globals,
    exec: Execution,
}

impl Context {
    fn write(&self, name: &str, contents: &str) -> Result<PathBuf> {
        fs::create_dir_all(&self.out)?;
        let path = self.out.join(name);
        fs::write(&path, contents)?;
        Ok(path)
    }

    fn write_json<C: Serialize, R: Serialize>(
        &self,
        name: &str,
        command: &str,
        config: C,
        result: R,
    ) -> Result<PathBuf> {
        let art = Artifact {
            command,
            globals: &self.globals,
            config,
            result,
        };
        let mut text = serde_json::to_string_pretty(&art)?;
        text.push('\n');
        self.write(name, &text)
    }

    fn chain_options(&self) -> ChainOptions {
        ChainOptions {
            sobolev_constant: self.globals.sobolev_constant,
            ..Default::default()
        }
    }
}

/// Parses `argv` (program name first), runs the command and returns the
/// exit code.
pub fn execute<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    if let Some(t) = cli.threads {
        set_thread_cap(t);
    }
    let tolerance = cli.tolerance.unwrap_or(DEFAULT_TOLERANCE_CONSTANT);
    if !(tolerance >= 0.0 && tolerance.is_finite()) {
        return Err(Error::Configuration("tolerance constant must be finite and nonnegative".into()));
    }
    let ctx = Context {
        out: cli.out,
        globals: Globals {
            seed: cli.seed,
            tolerance,
            sobolev_constant: cli.sobolev_constant,
        },
        exec: if cli.sequential {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
    };
    match &cli.command {
        Command::Constants(a) => constants(&ctx, a),
        Command::Solve(a) => solve_cmd(&ctx, a),
        Command::Iterate(a) => iterate(&ctx, a),
        Command::Verify(a) => verify(&ctx, a),
        Command::Counterexample(a) => counterexample(&ctx, a),
        Command::Corpus(a) => corpus(&ctx, a),
    }
}

fn constants(ctx: &Context, a: &ConstantsArgs) -> Result<i32> {
    let (dg, pde) = match (a.gamma1, a.gamma2, a.gamma3, a.p, a.lambda, a.big_lambda, a.q, a.g_norm) {
        (Some(g1), Some(g2), Some(g3), Some(p), None, None, None, None) => (DgParams::new(g1, g2, g3, p), None),
        (None, None, None, None, Some(lambda), Some(big_lambda), Some(q), Some(g_norm)) => {
            let pde = PdeParams {
                lambda,
                big_lambda,
                q,
                g_norm,
                d: a.d,
            };
            (dg_constants_from_pde(&pde)?, Some(pde))
        }
        _ => {
            return Err(Error::Configuration(
                "give either --gamma1 --gamma2 --gamma3 --p or --lambda --Lambda --q --g-norm".into(),
            ))
        }
    };
    let opts = ChainOptions {
        q2: a.q2,
        c_ivl_factor: a.c_ivl_factor,
        ..ctx.chain_options()
    };
    let chain = full_chain(a.d, &dg, &opts)?;
    #[derive(Serialize)]
    struct Config<'a> {
        args: &'a ConstantsArgs,
        pde: Option<PdeParams>,
        dg: DgParams,
        options: ChainOptions,
    }
    let path = ctx.write_json(
        "constants.json",
        "constants",
        Config {
            args: a,
            pde,
            dg,
            options: opts,
        },
        &chain,
    )?;
    println!(
        "theta = {}, log2 alpha_holder = {}; wrote {}",
        fmt_f64(chain.theta()),
        fmt_f64(chain.alpha_holder.log2),
        path.display()
    );
    Ok(0)
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| Error::Configuration(format!("cannot read {}: {e}", path.display())))
}

fn solve_cmd(ctx: &Context, a: &SolveArgs) -> Result<i32> {
    let text = read_text(&a.config)?;
    let req: SolveRequest = serde_json::from_str(&text)
        .map_err(|e| Error::Configuration(format!("{}: {e}", a.config.display())))?;
    let base = a.config.parent().unwrap_or(Path::new("."));
    let (u, stats) = solve_detailed(&req.resolve(base)?)?;
    let field = ctx.write(&a.name, &io::field_to_string(&u)?)?;
    ctx.write_json("solve.json", "solve", &req, stats)?;
    println!("{} steps; wrote {}", stats.steps, field.display());
    Ok(0)
}

fn iterate(ctx: &Context, a: &IterateArgs) -> Result<i32> {
    let spec = RecurrenceSpec {
        c: a.c,
        alpha: a.alpha,
        v0: a.v0,
        kmax: a.kmax,
    };
    let rep = simulate_recurrence(&spec)?;
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["k", "V_k", "envelope_k"])?;
    for r in &rep.rows {
        w.write_record([r.k.to_string(), fmt_f64(r.v), fmt_f64(r.envelope)])?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Io(e.into_error()))?;
    ctx.write("iterate.csv", &String::from_utf8(bytes).expect("csv output is utf-8"))?;
    ctx.write_json("iterate.json", "iterate", a, &rep)?;
    let ok = rep.s_k_bound_holds && (rep.verdict != RecurrenceVerdict::Converges || rep.within_envelope);
    println!(
        "threshold = {}, verdict {:?}, within envelope: {}",
        fmt_f64(rep.threshold),
        rep.verdict,
        rep.within_envelope
    );
    Ok(if ok { 0 } else { 1 })
}

fn load_field(path: &Path) -> Result<GridField> {
    io::field_from_str(&read_text(path)?)
}

fn verdict_code(v: Verdict) -> i32 {
    if v == Verdict::Fail {
        1
    } else {
        0
    }
}

fn verify(ctx: &Context, a: &VerifyArgs) -> Result<i32> {
    let u = load_field(&a.field)?;
    let d = u.spec().d;
    let dg = a.dg.params();
    dg.validate(d)?;
    let chain = || full_chain(d, &dg, &ctx.chain_options());
    let orientation = match a.orientation {
        OrientationArg::Canonical => IvlOrientation::canonical(d),
        OrientationArg::AsPrinted => IvlOrientation::as_printed(d),
    };
    let report = match a.check {
        CheckName::Dg => {
            let signs = match a.sign {
                SignArg::Plus => vec![Sign::Plus],
                SignArg::Minus => vec![Sign::Minus],
                SignArg::Both => vec![Sign::Plus, Sign::Minus],
            };
            check_dg_membership(
                &u,
                &dg,
                &DgCheckOptions {
                    n_samples: a.samples,
                    seed: ctx.globals.seed,
                    signs,
                    tolerance_constant: ctx.globals.tolerance,
                    exec: ctx.exec,
                },
            )?
        }
        CheckName::Ivl => check_ivl_parabolic(&u, &dg, a.k, a.l, &orientation, true)?,
        CheckName::IvlH1 => {
            let slice = u.time_slice(u.spec().time_index(a.time));
            check_ivl_h1(&slice, a.k, a.l, a.radius)?
        }
        CheckName::CloseTimes => check_close_times(&u, &dg, a.k, a.l, &time_lattice(a.lattice))?,
        CheckName::FirstLemma => check_first_lemma_iteration(&u, &chain()?, DEFAULT_FIRST_LEMMA_STEPS)?,
        CheckName::LoweringMax => {
            let out = run_lowering_max(&u, &chain()?)?;
            out.report
        }
        CheckName::Holder => {
            let h = estimate_holder(&u, 0.0, &vec![0.0; d], a.scales, &chain()?)?;
            h.report
        }
    };
    let stem = serde_json::to_value(a.check)?
        .as_str()
        .unwrap_or("check")
        .to_string();
    ctx.write(&format!("{stem}.csv"), &report.to_csv_string()?)?;
    ctx.write_json(&format!("{stem}.json"), "verify", a, &report)?;
    println!("{}: {:?}", report.name, report.verdict);
    Ok(verdict_code(report.verdict))
}

/// One expectation of the jump-field suite and the report it was judged on.
#[derive(Clone, Debug, Serialize)]
pub struct JumpExpectation {
    pub name: &'static str,
    pub expected: &'static str,
    pub met: bool,
    pub report: CheckReport,
}

impl JumpExpectation {
    fn new(name: &'static str, expected: &'static str, met: bool, report: CheckReport) -> Self {
        Self {
            name,
            expected,
            met,
            report,
        }
    }
}

#[derive(Debug, Serialize)]
struct Outcome {
    nx: usize,
    name: &'static str,
    expected: &'static str,
    met: bool,
    lhs: Option<f64>,
    rhs: Option<f64>,
    verdict: Verdict,
}

/// The jump field `1` before `t = -1`, `0` after: a downward jump in time
/// that belongs to DG+ but violates the intermediate value inequality with
/// the cylinders as printed.
pub fn jump_suite(nx: usize, tolerance: f64) -> Result<Vec<JumpExpectation>> {
    let spec = GridSpec::q2(1, 4 * nx, nx)?;
    let f = build_field(&spec, &FieldKind::JumpCounterexample)?;
    let dg = DgParams::new(0.5, 20.0, 0.0, 1.0);
    let mut out = Vec::new();

    let canon = check_ivl_parabolic(&f, &dg, 0.0, 1.0, &IvlOrientation::canonical(1), true)?;
    let s = &canon.samples[0];
    let ok = canon.passed() && s.lhs == 0.0;
    out.push(JumpExpectation::new("ivl_canonical", "pass with lhs 0", ok, canon));

    let swapped = check_ivl_parabolic(&f, &dg, 0.0, 1.0, &IvlOrientation::as_printed(1), true)?;
    let s = &swapped.samples[0];
    let ok = swapped.verdict == Verdict::Fail && s.lhs == 4.0 && s.rhs == 0.0;
    out.push(JumpExpectation::new("ivl_as_printed", "violation with lhs 4, rhs 0", ok, swapped));

    let after = DgSample {
        sign: Sign::Plus,
        k: 0.5,
        s: -1.5,
        t: -0.5,
        r: 0.5,
        big_r: 1.0,
        x0: vec![0.0],
    };
    let down = check_dg_samples(&f, &dg, &[after], tolerance, Execution::Sequential)?;
    let ok = down.passed() && down.samples[0].lhs == 0.0;
    out.push(JumpExpectation::new("dg_downward_jump", "pass", ok, down));

    let neg = f.affine(-1.0, 0.0)?;
    let across = DgSample {
        sign: Sign::Plus,
        k: -0.5,
        s: -1.5,
        t: -1.0 + 0.5 * spec.dt(),
        r: 0.5,
        big_r: 1.5,
        x0: vec![0.0],
    };
    let up = check_dg_samples(&neg, &dg, &[across], tolerance, Execution::Sequential)?;
    let ok = up.verdict == Verdict::Fail;
    out.push(JumpExpectation::new("dg_upward_jump", "fail", ok, up));

    let close = check_close_times(&f, &dg, 0.0, 1.0, &time_lattice(10))?;
    let ok = close.passed();
    out.push(JumpExpectation::new("close_times_lattice", "pass", ok, close));
    Ok(out)
}

fn counterexample(ctx: &Context, a: &CounterexampleArgs) -> Result<i32> {
    let mut expectations = Vec::new();
    for &nx in &a.nx {
        for e in jump_suite(nx, ctx.globals.tolerance)? {
            let worst = e.report.worst.as_ref();
            expectations.push(Outcome {
                nx,
                name: e.name,
                expected: e.expected,
                met: e.met,
                lhs: worst.map(|w| w.lhs),
                rhs: worst.map(|w| w.rhs),
                verdict: e.report.verdict,
            });
        }
    }
    let all = expectations.iter().all(|e| e.met);
    ctx.write_json("counterexample.json", "counterexample", a, &expectations)?;
    for e in &expectations {
        println!(
            "nx={:<4} {:<20} {:<4} ({})",
            e.nx,
            e.name,
            if e.met { "ok" } else { "MISS" },
            e.expected
        );
    }
    Ok(if all { 0 } else { 1 })
}

fn corpus(ctx: &Context, a: &CorpusArgs) -> Result<i32> {
    let cfg = CorpusConfig {
        n: a.n,
        seed: ctx.globals.seed,
        d: a.d,
        nt: a.nt,
        nx: a.nx,
        dg_samples: a.samples,
        tolerance_constant: ctx.globals.tolerance,
        chain: ctx.chain_options(),
        ..Default::default()
    };
    let (report, _) = run_corpus(&cfg, ctx.exec)?;
    ctx.write("corpus.csv", &report.to_csv_string()?)?;
    ctx.write_json("corpus.json", "corpus", a, &report)?;
    for (name, c) in &report.totals {
        println!(
            "{name:<14} pass {:>4}  fail {:>4}  skipped {:>4}  inconclusive {:>4}",
            c.pass, c.fail, c.skipped, c.inconclusive
        );
    }
    Ok(if report.passed { 0 } else { 1 })
}

