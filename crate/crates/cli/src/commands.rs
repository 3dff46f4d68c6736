use std::io::Write;

use anyhow::{anyhow, bail, Context, Result};
use lottery_core::analysis::bounds;
use lottery_core::evaluation::{
    evaluate, fmt_float, write_csv, EvalConfig, MethodChoice, OutcomeReport,
};
use lottery_core::instance::InstanceFile;
use lottery_core::suites::{self, SuiteReport};
use lottery_core::{generate_named, ActionProfile, Instance, MechanismKind};
use serde::Serialize;

use crate::args::{
    named_construction, BoundsArgs, Cli, EvalArgs, EvalOptions, Format, GenArgs, MethodArg, Suite,
    SweepArgs, VerifyArgs,
};

fn sink(cli: &Cli) -> Result<Box<dyn Write>> {
    Ok(match &cli.out {
        Some(path) => Box::new(std::io::BufWriter::new(
            std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(std::io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(cli: &Cli, value: &T) -> Result<()> {
    let mut out = sink(cli)?;
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    out.flush()?;
    Ok(())
}

pub fn gen(cli: &Cli, args: &GenArgs) -> Result<i32> {
    let (inst, id) = args.source.resolve(cli.seed)?;
    let file = InstanceFile::from(inst.clone());
    write_json(cli, &file)?;
    let stats = serde_json::to_string(&inst.stats())?;
    if cli.out.is_some() {
        println!("{id} {stats}");
    } else {
        eprintln!("{id} {stats}");
    }
    Ok(0)
}

fn mechanisms(list: &[String]) -> Result<Vec<MechanismKind>> {
    list.iter()
        .map(|m| m.parse::<MechanismKind>().map_err(|e| anyhow!("{e}")))
        .collect()
}

fn eval_config(cli: &Cli, opts: &EvalOptions, id: String) -> EvalConfig {
    EvalConfig {
        instance_id: id,
        method: match opts.method {
            MethodArg::Auto => MethodChoice::Auto,
            MethodArg::Exact => MethodChoice::Exact,
            MethodArg::Mc => MethodChoice::MonteCarlo,
        },
        replicas: opts.replicas,
        seed: cli.seed,
        workers: cli.workers,
        envy: opts.envy,
    }
}

fn emit_reports(cli: &Cli, reports: &[OutcomeReport]) -> Result<()> {
    match cli.format {
        Format::Json => write_json(cli, &reports),
        Format::Csv => {
            let mut out = sink(cli)?;
            write_csv(&mut out, reports)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn run_all(
    inst: &Instance,
    kinds: &[MechanismKind],
    profile: Option<&ActionProfile>,
    cfg: &EvalConfig,
) -> Result<Vec<OutcomeReport>> {
    kinds
        .iter()
        .map(|&kind| {
            let default;
            let p = match profile {
                Some(p) => p,
                None => {
                    default = ActionProfile::group_request(kind, inst);
                    &default
                }
            };
            evaluate(kind, inst, p, cfg).with_context(|| format!("evaluating {kind}"))
        })
        .collect()
}

pub fn eval(cli: &Cli, args: &EvalArgs) -> Result<i32> {
    let kinds = mechanisms(&args.options.mechanisms)?;
    let (inst, id) = args.source.resolve(cli.seed)?;
    let profile = match &args.profile {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            Some(
                serde_json::from_str::<ActionProfile>(&text)
                    .with_context(|| format!("parsing {}", path.display()))?,
            )
        }
        None => None,
    };
    let cfg = eval_config(cli, &args.options, args.id.clone().unwrap_or(id));
    let reports = run_all(&inst, &kinds, profile.as_ref(), &cfg)?;
    emit_reports(cli, &reports)?;
    Ok(0)
}

fn default_mechanisms(family: &str) -> &'static str {
    match family {
        "il_bad" => "il,gl",
        "spl_tight" | "spl_example" | "big_sur_like" => "iw",
        "il_limit_bad" => "il_limit",
        _ => "gl",
    }
}

pub fn sweep(cli: &Cli, args: &SweepArgs) -> Result<i32> {
    let family = args.family.to_ascii_lowercase();
    let points = args.params.grid()?;
    let explicit = args.options.mechanisms != ["gl", "il", "iw"];
    let mut reports = Vec::new();
    for p in &points {
        let spec = named_construction(&family, p)?;
        let inst = generate_named(&spec)?;
        let names: Vec<String> = if explicit {
            args.options.mechanisms.clone()
        } else {
            default_mechanisms(&family)
                .split(',')
                .map(|m| match (m, p.ell) {
                    ("il_limit", Some(l)) => format!("il_limit:{l}"),
                    _ => m.to_string(),
                })
                .collect()
        };
        let kinds = mechanisms(&names)?;
        let cfg = eval_config(cli, &args.options, spec.label());
        reports.extend(run_all(&inst, &kinds, None, &cfg)?);
    }
    emit_reports(cli, &reports)?;
    Ok(0)
}

pub fn verify(cli: &Cli, args: &VerifyArgs) -> Result<i32> {
    let seed = || {
        cli.seed
            .ok_or_else(|| anyhow!("verify {:?} requires --seed", args.suite))
    };
    let report: SuiteReport = match args.suite {
        Suite::Dominance => suites::dominance(
            args.instances.unwrap_or(20),
            args.samples.unwrap_or(10_000),
            seed()?,
        ),
        Suite::Hitting => suites::hitting(args.cases.unwrap_or(1000), seed()?)?,
        Suite::Br => suites::br()?,
        Suite::Conjecture => suites::conjecture(
            args.max_s.unwrap_or(5),
            args.replicas.unwrap_or(100_000),
            seed()?,
        )?,
        Suite::Distribution => suites::distribution(args.samples.unwrap_or(100_000), seed()?)?,
    };
    match cli.format {
        Format::Json => write_json(cli, &report)?,
        Format::Csv => {
            let mut out = sink(cli)?;
            writeln!(out, "suite,seed,checks,failures,passed")?;
            writeln!(
                out,
                "{},{},{},{},{}",
                report.suite,
                report.seed.map_or("NA".into(), |s| s.to_string()),
                report.checks,
                report.failures.len(),
                if report.passed { "PASS" } else { "FAIL" }
            )?;
            out.flush()?;
        }
    }
    for f in &report.failures {
        eprintln!("failure: {f}");
    }
    Ok(if report.passed { 0 } else { 1 })
}

pub fn bounds_cmd(cli: &Cli, args: &BoundsArgs) -> Result<i32> {
    let (inst, id) = args.source.resolve(cli.seed)?;
    if args.limit == Some(0) {
        bail!("--limit must be positive");
    }
    let b = bounds(&inst, args.limit);
    match cli.format {
        Format::Json => {
            #[derive(Serialize)]
            struct Out<'a> {
                instance_id: &'a str,
                stats: lottery_core::InstanceStats,
                bounds: lottery_core::BoundRecord,
            }
            write_json(
                cli,
                &Out {
                    instance_id: &id,
                    stats: inst.stats(),
                    bounds: b,
                },
            )?;
        }
        Format::Csv => {
            let mut out = sink(cli)?;
            let mut w = csv::Writer::from_writer(&mut out);
            w.write_record([
                "instance_id",
                "n",
                "k",
                "m",
                "kappa",
                "alpha",
                "g_alpha",
                "gl_eff",
                "gl_fair",
                "iw_eff",
                "iw_fair",
                "glr_eff",
                "il_limit",
                "benchmark_eff",
                "benchmark_fair",
                "u_star",
            ])?;
            let c = &b.clamped;
            let stats = inst.stats();
            w.write_record([
                id,
                stats.n.to_string(),
                stats.k.to_string(),
                stats.m.to_string(),
                fmt_float(b.kappa),
                fmt_float(b.alpha),
                fmt_float(b.g_alpha),
                fmt_float(c.gl_eff),
                fmt_float(c.gl_fair),
                fmt_float(c.iw_eff),
                fmt_float(c.iw_fair),
                fmt_float(c.glr_eff),
                c.il_limit.map_or("NA".into(), fmt_float),
                fmt_float(c.benchmark_eff),
                fmt_float(c.benchmark_fair),
                fmt_float(c.u_star),
            ])?;
            w.flush()?;
            drop(w);
            out.flush()?;
        }
    }
    Ok(0)
}
