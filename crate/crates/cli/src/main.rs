//! Command line driver: scenario verification with cached reports, direct
//! L-value evaluation, class group computation, and synthetic tower module
//! cohomology.

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cyclounits::{
    bn_model_cohomology, b0_model, lp_at_one_interpolate, lp_at_one_log, quadratic_character,
    run_suite, CacheMode, ClassGroup, IwasawaPoly, LpValue, RunOptions, Scenario, Valuation,
};

#[derive(Parser)]
#[command(
    name = "cyclounits",
    version,
    about = "p-adic verification toolkit for circular unit towers over real quadratic fields"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run scenario files and report each check as pass, fail,
    /// indeterminate or info; exits nonzero unless every gating check
    /// passes.
    Verify(VerifyArgs),
    /// Evaluate the p-adic L-value at 1 attached to a real quadratic field.
    Lp(LpArgs),
    /// Narrow and wide class group invariants with the fundamental unit.
    Classgroup(ClassgroupArgs),
    /// Cohomology of a synthetic tower module for a given relation
    /// polynomial.
    LambdaOrder(LambdaOrderArgs),
}

#[derive(Args)]
struct VerifyArgs {
    /// Scenario file in the key-value format; repeatable.
    #[arg(long = "scenario", value_name = "FILE", required = true)]
    scenario: Vec<PathBuf>,
    /// Worker threads for scenario parallelism.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
    /// Recompute everything, bypassing the result cache.
    #[arg(long)]
    no_cache: bool,
    /// Write the JSON report to this path.
    #[arg(long, value_name = "PATH")]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct LpArgs {
    /// Fundamental discriminant of a real quadratic field.
    #[arg(long)]
    disc: i64,
    /// Odd prime splitting in the field.
    #[arg(long)]
    p: u64,
    /// Working precision K; results are certified modulo p powers up to p^K.
    #[arg(long, default_value_t = 12)]
    prec: u32,
    #[arg(long, value_enum, default_value_t = MethodArg::Both)]
    method: MethodArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Log,
    Interp,
    Both,
}

#[derive(Args)]
struct ClassgroupArgs {
    /// Fundamental discriminant of a real quadratic field.
    #[arg(long)]
    disc: i64,
}

#[derive(Args)]
struct LambdaOrderArgs {
    /// Comma-separated coefficients c0,c1,... of f(T) = c0 + c1 T + ...
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    f: Vec<i64>,
    /// Upper tower level.
    #[arg(long)]
    n: u32,
    /// Lower tower level.
    #[arg(long)]
    m: u32,
    /// Cohomology degree.
    #[arg(long, allow_hyphen_values = true)]
    q: i64,
    /// Odd prime.
    #[arg(long, default_value_t = 3)]
    p: u64,
    /// Working precision K.
    #[arg(long, default_value_t = 12)]
    prec: u32,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let run = match cli.cmd {
        Cmd::Verify(a) => cmd_verify(a),
        Cmd::Lp(a) => cmd_lp(a),
        Cmd::Classgroup(a) => cmd_classgroup(a),
        Cmd::LambdaOrder(a) => cmd_lambda_order(a),
    };
    match run {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn cmd_verify(a: VerifyArgs) -> Result<ExitCode> {
    let mut scenarios = Vec::with_capacity(a.scenario.len());
    for path in &a.scenario {
        let s = Scenario::from_file(path)
            .with_context(|| format!("loading scenario {}", path.display()))?;
        scenarios.push(s);
    }
    let opts = RunOptions {
        jobs: a.jobs,
        cache: if a.no_cache {
            CacheMode::Disabled
        } else {
            CacheMode::FromEnv
        },
    };
    let suite = run_suite(&scenarios, &opts);
    let mut counts = [0u32; 4];
    for report in &suite.body.reports {
        for check in &report.checks {
            let idx = match check.status {
                cyclounits::CheckStatus::Pass => 0,
                cyclounits::CheckStatus::Fail => 1,
                cyclounits::CheckStatus::Indeterminate => 2,
                cyclounits::CheckStatus::Info => 3,
            };
            counts[idx] += 1;
            match &check.note {
                Some(note) => println!(
                    "{}/{}: {} ({note})",
                    report.scenario, check.check, check.status
                ),
                None => println!("{}/{}: {}", report.scenario, check.check, check.status),
            }
        }
    }
    println!(
        "verified {} scenario(s): {} pass, {} fail, {} indeterminate, {} info",
        suite.body.reports.len(),
        counts[0],
        counts[1],
        counts[2],
        counts[3]
    );
    if let Some(path) = &a.report {
        fs::write(path, suite.to_json_pretty())
            .with_context(|| format!("writing report {}", path.display()))?;
    }
    Ok(if suite.all_passed() {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    })
}

fn print_lp(label: &str, value: &LpValue) -> Result<()> {
    let residue = value.value().residue()?;
    let val = match value.valuation() {
        Valuation::Exact(v) => v.to_string(),
        Valuation::AtLeast(v) => format!(">= {v}"),
    };
    println!(
        "{label}: residue {residue} mod {}^{}, valuation {val}{}",
        value.value().p(),
        value.precision(),
        if value.is_degraded() { ", degraded" } else { "" }
    );
    Ok(())
}

fn cmd_lp(a: LpArgs) -> Result<ExitCode> {
    let chi = quadratic_character(a.disc)?;
    let log = if a.method != MethodArg::Interp {
        let v = lp_at_one_log(&chi, a.p, a.prec)?;
        print_lp("log", &v)?;
        Some(v)
    } else {
        None
    };
    let interp = if a.method != MethodArg::Log {
        let (v, _) = lp_at_one_interpolate(&chi, a.p, a.prec, 8)?;
        print_lp("interp", &v)?;
        Some(v)
    } else {
        None
    };
    if let (Some(l), Some(i)) = (&log, &interp) {
        let shared = l.precision().min(i.precision());
        let agree = l.agrees_with(i)?;
        println!(
            "agreement: {} to {shared} certified digits",
            if agree { "yes" } else { "NO" }
        );
        if !agree {
            return Ok(ExitCode::from(1));
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_classgroup(a: ClassgroupArgs) -> Result<ExitCode> {
    let g = ClassGroup::compute(a.disc)?;
    let u = g.unit();
    println!("disc = {}", g.disc());
    println!(
        "narrow class number = {}, invariants = {:?}",
        g.narrow_order(),
        g.narrow_invariants()
    );
    println!(
        "wide class number = {}, invariants = {:?}",
        g.wide_order(),
        g.wide_invariants()
    );
    println!(
        "fundamental unit = ({} + {} sqrt({})) / 2, norm {}, period {}",
        u.a(),
        u.b(),
        a.disc,
        u.norm(),
        u.period()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_lambda_order(a: LambdaOrderArgs) -> Result<ExitCode> {
    let f = IwasawaPoly::from_i64(a.p, a.prec, 1 << 12, &a.f)?;
    println!("constant term valuation = {}", f.constant_term_valuation());
    let h = bn_model_cohomology(&f, a.n, a.m, a.q)?;
    println!(
        "tower cohomology order = {}, invariant factors = {:?}",
        h.order(),
        h.divisors().iter().map(|d| d.to_string()).collect::<Vec<_>>()
    );
    if a.m == 0 {
        let b = b0_model(&f)?;
        println!("bottom layer closed form order = {}", b.order());
    }
    Ok(ExitCode::SUCCESS)
}
