mod config;

use std::fs;
use std::path::Path;
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};

use config::{FileConfig, RunConfig};
use fatou_core::formal::{
    cross_check_generator, formal_fatou, normal_form_generator, FatouExpansion, SolverOptions,
};
use fatou_core::numeric::{with_digits, FatouEvaluator, GermEvaluator, Mp, NumericOptions, Real};
use fatou_core::parse::{parse_expr, parse_germ_file, DulacGermSpec, Expr, SeriesCtx};
use fatou_core::series::{Coeff, XExp};

#[derive(Parser)]
#[command(name = "fatou", version, about = "Abel equation solutions for tangent-to-identity Dulac maps, exact and numeric")]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the Abel equation formally and write the expansion.
    Formal(Common),
    /// Check Psi(f(x)) - Psi(x) = 1 numerically on a grid.
    Verify(Common),
    /// Print Psi(x) on a grid or at given points.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Evaluation point (repeatable); overrides the grid.
        #[arg(short = 'x', long = "at")]
        at: Vec<f64>,
    },
    /// Time-one map of a generator and its Fatou coordinate, cross-checked
    /// against the Abel solver.
    Flow {
        #[command(flatten)]
        common: Common,
        /// Generator xi as an expression.
        #[arg(long, conflicts_with = "normal_form")]
        xi: Option<String>,
        /// Normal-form generator a,alpha,m,b.
        #[arg(long, value_name = "A,ALPHA,M,B")]
        normal_form: Option<String>,
    },
}

#[derive(Args, Clone, Default)]
struct Common {
    /// Input `.germ` file.
    #[arg(short = 'i', long = "input")]
    input: Option<String>,
    /// Keep Fatou blocks through x^N (integer or p/q).
    #[arg(short = 'N')]
    n: Option<String>,
    /// l-terms per block.
    #[arg(short = 'M')]
    m: Option<u32>,
    #[arg(long)]
    tol: Option<f64>,
    /// Significant decimal digits of the numeric layer.
    #[arg(long)]
    digits: Option<usize>,
    /// start:stop:count[:geom|lin] inside (0, 1/e).
    #[arg(long)]
    grid: Option<String>,
    /// Lower integration end for divergent blocks.
    #[arg(long)]
    d: Option<f64>,
    /// Output file.
    #[arg(short = 'o', long = "output")]
    output: Option<String>,
    /// Summary JSON (verify).
    #[arg(long)]
    summary: Option<String>,
    /// Expansion format: json, machine or text (formal, flow).
    #[arg(long)]
    format: Option<String>,
    /// TOML file with defaults for the options above.
    #[arg(long)]
    config: Option<String>,
}

/// Failure classes and their exit codes.
enum Failure {
    Input(anyhow::Error),
    Solver(anyhow::Error),
    Verify(anyhow::Error),
    Io(anyhow::Error),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Input(_) => 2,
            Failure::Solver(_) => 3,
            Failure::Verify(_) => 4,
        }
    }

    fn error(&self) -> &anyhow::Error {
        match self {
            Failure::Input(e) | Failure::Solver(e) | Failure::Verify(e) | Failure::Io(e) => e,
        }
    }
}

type Run = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match cli.cmd {
        Command::Formal(c) => config(&c).and_then(|cfg| cmd_formal(&cfg)),
        Command::Verify(c) => config(&c).and_then(|cfg| cmd_verify(&cfg)),
        Command::Eval { common, at } => config(&common).and_then(|cfg| cmd_eval(&cfg, &at)),
        Command::Flow { common, xi, normal_form } => {
            config(&common).and_then(|cfg| cmd_flow(&cfg, xi.as_deref(), normal_form.as_deref()))
        }
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {:#}", f.error());
            ExitCode::from(f.code())
        }
    }
}

fn config(c: &Common) -> Result<RunConfig, Failure> {
    let file = match &c.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("reading {p}")).map_err(Failure::Input)?;
            toml::from_str::<FileConfig>(&text).with_context(|| format!("parsing {p}")).map_err(Failure::Input)?
        }
        None => FileConfig::default(),
    };
    let flags = FileConfig {
        input: c.input.clone(),
        n: c.n.clone(),
        m: c.m,
        tol: c.tol,
        digits: c.digits,
        grid: c.grid.clone(),
        d: c.d,
        output: c.output.clone(),
        summary: c.summary.clone(),
        format: c.format.clone(),
        max_orbit: None,
    };
    RunConfig::resolve(file.overridden_by(flags)).map_err(Failure::Input)
}

fn load_germ(cfg: &RunConfig) -> Result<DulacGermSpec, Failure> {
    let path = cfg.input.as_ref().ok_or_else(|| Failure::Input(anyhow!("no input file (-i)")))?;
    let text = fs::read_to_string(path).with_context(|| format!("reading {path}")).map_err(Failure::Input)?;
    parse_germ_file(&text).map_err(|e| Failure::Input(anyhow!("{path}: {e}")))
}

fn solve(cfg: &RunConfig, g: &DulacGermSpec) -> Result<FatouExpansion, Failure> {
    if let Some((a, _)) = g.parabolic_order() {
        if cfg.n < a {
            return Err(Failure::Input(anyhow!("N = {} is below the parabolic order {a}", cfg.n)));
        }
    }
    let opts = SolverOptions { n: cfg.n, ..SolverOptions::new(0, cfg.m) };
    formal_fatou(g, &opts).map_err(|e| Failure::Solver(e.into()))
}

fn write_out(path: &Option<String>, text: &str) -> Run {
    if let Some(p) = path {
        if let Some(dir) = Path::new(p).parent().filter(|d| !d.as_os_str().is_empty()) {
            fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display())).map_err(Failure::Io)?;
        }
        fs::write(p, text).with_context(|| format!("writing {p}")).map_err(Failure::Io)?;
    }
    Ok(())
}

fn render(cfg: &RunConfig, f: &FatouExpansion) -> String {
    match cfg.format.as_str() {
        "machine" => f.to_machine(),
        "text" => format!("{}\n", f.series()),
        _ => format!("{}\n", f.to_json()),
    }
}

fn describe(f: &FatouExpansion) {
    let gens: Vec<String> = f.lattice.generators.iter().map(|g| g.to_string()).collect();
    println!("parabolic order: {}", f.parabolic_order);
    println!("blocks: {}", f.blocks.len());
    println!("r0: {}", f.critical_index);
    println!("rho: {}", f.rho);
    println!("lattice generators: {}", gens.join(" "));
    match &f.residual_order {
        Some(e) => println!("residual order: x^{} l^{} l2^{}", e.g0, e.g1, e.g2),
        None => println!("residual order: none (exact through the probe order)"),
    }
    for p in &f.generator_poles {
        println!("generator pole: block {} at u = {:.12e} (x = {:.6e})", p.block, p.u, p.x);
    }
    println!("psi: {}", f.series());
}

fn cmd_formal(cfg: &RunConfig) -> Run {
    let g = load_germ(cfg)?;
    let f = solve(cfg, &g)?;
    describe(&f);
    write_out(&cfg.output, &render(cfg, &f))
}

fn numeric_options(cfg: &RunConfig) -> NumericOptions {
    NumericOptions { tol: cfg.tol, digits: cfg.digits, d: cfg.d, max_orbit: cfg.max_orbit, ..Default::default() }
}

fn evaluator(cfg: &RunConfig, g: &DulacGermSpec, f: &FatouExpansion) -> Result<FatouEvaluator<Mp>, Failure> {
    let opts = numeric_options(cfg);
    let top = cfg.grid.points().first().copied().unwrap_or(0.1);
    let germ = GermEvaluator::<Mp>::from_spec(g, f.n, cfg.m, Mp::from_f64(top), Mp::from_f64(opts.ode_tol()));
    germ.check_domain(16).map_err(|e| Failure::Verify(e.into()))?;
    FatouEvaluator::new(f.clone(), germ, opts).map_err(|e| Failure::Verify(e.into()))
}

fn cmd_verify(cfg: &RunConfig) -> Run {
    let g = load_germ(cfg)?;
    let f = solve(cfg, &g)?;
    with_digits(cfg.digits, || {
        let ev = evaluator(cfg, &g, &f)?;
        let report = ev.verify(&cfg.grid.points()).map_err(|e| Failure::Verify(e.into()))?;
        write_out(&cfg.output, &report.to_csv())?;
        write_out(&cfg.summary, &format!("{}\n", report.summary_json()))?;
        if cfg.output.is_none() {
            print!("{}", report.to_csv());
        }
        println!("max residual: {:e}", report.max_residual);
        match &report.slope {
            Some(s) => println!("delta slope: {:.4} (needs > {})", s.slope, report.min_slope),
            None => println!("delta slope: n/a (truncation residual below noise)"),
        }
        println!("monotone: {}", report.monotone);
        if report.passed {
            println!("PASS");
            Ok(())
        } else {
            println!("FAIL");
            Err(Failure::Verify(anyhow!(
                "max residual {:e} vs tol {:e}, slope ok: {}, monotone: {}",
                report.max_residual,
                report.tol,
                report.slope_ok,
                report.monotone
            )))
        }
    })
}

fn cmd_eval(cfg: &RunConfig, at: &[f64]) -> Run {
    let g = load_germ(cfg)?;
    let f = solve(cfg, &g)?;
    let points = if at.is_empty() { cfg.grid.points() } else { at.to_vec() };
    with_digits(cfg.digits, || {
        let ev = evaluator(cfg, &g, &f)?;
        let mut out = String::from("x,psi_x\n");
        for x in points {
            let v = ev.value(&Mp::from_f64(x)).map_err(|e| Failure::Verify(e.into()))?;
            out.push_str(&format!("{},{}\n", Mp::from_f64(x).to_sci(cfg.digits), v.psi.to_sci(cfg.digits)));
        }
        print!("{out}");
        write_out(&cfg.output, &out)
    })
}

fn parse_normal_form(s: &str) -> anyhow::Result<Expr> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let [a, alpha, m, b] = parts.as_slice() else {
        return Err(anyhow!("normal form needs a,alpha,m,b"));
    };
    let q = |t: &str| -> anyhow::Result<Coeff> { t.parse().map_err(|_| anyhow!("bad rational '{t}'")) };
    let alpha: XExp = alpha.parse().map_err(|_| anyhow!("bad alpha '{alpha}'"))?;
    let m: i64 = m.parse().map_err(|_| anyhow!("bad m '{m}'"))?;
    Ok(normal_form_generator(q(a)?, alpha, m, q(b)?))
}

fn cmd_flow(cfg: &RunConfig, xi: Option<&str>, normal_form: Option<&str>) -> Run {
    let xi = match (xi, normal_form) {
        (Some(s), _) => parse_expr(s).map_err(|e| Failure::Input(anyhow!("xi: {e}")))?,
        (None, Some(nf)) => parse_normal_form(nf).map_err(Failure::Input)?,
        (None, None) => {
            let g = load_germ(cfg)?;
            match g.source.as_ref().and_then(|e| e.flow_generator()) {
                Some(x) => x.clone(),
                None => return Err(Failure::Input(anyhow!("input is not of the form flow(xi)"))),
            }
        }
    };
    let n = if cfg.n.is_integer() {
        *cfg.n.numer()
    } else {
        return Err(Failure::Input(anyhow!("flow needs an integer N")));
    };
    let cc = cross_check_generator(&xi, n, cfg.m).map_err(|e| Failure::Solver(e.into()))?;
    match xi.to_series(SeriesCtx::truncated(cfg.n + 2, cfg.m)) {
        Ok(t) => println!("xi: {t}"),
        Err(_) => println!("xi: {xi}"),
    }
    println!("time-one map: {}", cc.germ);
    println!("generator psi: {}", cc.generator.series());
    println!("solver psi: {}", cc.solver.series());
    println!("rho: {}", cc.generator.rho);
    match &cc.constant {
        Some(c) => println!("agree up to constant: {c}"),
        None => println!("agree up to constant: no"),
    }
    write_out(&cfg.output, &render(cfg, &cc.generator))?;
    if cc.agrees {
        Ok(())
    } else {
        Err(Failure::Verify(anyhow!("solver and generator expansions differ")))
    }
}
