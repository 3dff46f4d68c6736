use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lottery_core::{
    generate_named, generate_random, Fraction, Instance, KRule, NamedConstruction, SizeLaw,
};

#[derive(Debug, Parser)]
#[command(
    name = "lottery",
    version,
    about = "Evaluate lottery mechanisms for group ticket allocation"
)]
pub struct Cli {
    /// Master seed; required by every command that samples.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Worker threads for Monte Carlo. Never changes results.
    #[arg(long, global = true, default_value_t = 1)]
    pub workers: usize,

    /// Output file (stdout when omitted).
    #[arg(short = 'o', long, global = true)]
    pub out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write an instance file from a named construction or a random law.
    Gen(GenArgs),
    /// Evaluate mechanisms on one instance.
    Eval(EvalArgs),
    /// Run a validation suite; exit status 1 on any failure.
    Verify(VerifyArgs),
    /// Evaluate a named construction over a parameter grid.
    Sweep(SweepArgs),
    /// Print the worst-case guarantees at an instance's parameters.
    Bounds(BoundsArgs),
}

/// Parameters of the named constructions. Lists are accepted only by `sweep`.
#[derive(Debug, Args, Default, Clone)]
pub struct NamedParams {
    #[arg(long, value_delimiter = ',')]
    pub r: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub m: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub s: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub k: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub ell: Vec<usize>,
    /// Real or `p/q`.
    #[arg(long, value_delimiter = ',')]
    pub alpha: Vec<String>,
    #[arg(long, value_delimiter = ',')]
    pub couples: Vec<usize>,
    #[arg(long = "s-max", value_delimiter = ',')]
    pub s_max: Vec<usize>,
}

#[derive(Debug, Args, Default, Clone)]
pub struct InstanceSource {
    /// Instance file `{ "k": .., "group_sizes": [..] }`.
    #[arg(short = 'i', long, conflicts_with_all = ["named", "random"])]
    pub instance: Option<PathBuf>,

    /// gl_tight, il_bad, il_limit_bad, spl_example, spl_tight, hamilton_like or big_sur_like.
    #[arg(long, conflicts_with = "random")]
    pub named: Option<String>,

    #[command(flatten)]
    pub params: NamedParams,

    /// Draw group sizes at random (needs --seed).
    #[arg(long)]
    pub random: bool,
    #[arg(long, requires = "random")]
    pub groups: Option<usize>,
    /// Size range `min:max`.
    #[arg(long, requires = "random")]
    pub sizes: Option<String>,
    /// Relative weights of each size in the range.
    #[arg(long, requires = "random", value_delimiter = ',')]
    pub weights: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub source: InstanceSource,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Auto,
    Exact,
    Mc,
}

#[derive(Debug, Args, Clone)]
pub struct EvalOptions {
    /// Comma-separated: gl, il, il_limit:<l>, iw, glr, fair_gl.
    #[arg(long = "mech", value_delimiter = ',', default_value = "gl,il,iw")]
    pub mechanisms: Vec<String>,

    #[arg(long, default_value_t = 100_000)]
    pub replicas: u64,

    #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
    pub method: MethodArg,

    /// Also estimate the envy matrix by sampling.
    #[arg(long)]
    pub envy: bool,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub source: InstanceSource,

    #[command(flatten)]
    pub options: EvalOptions,

    /// Action profile file; the group request is used when omitted.
    #[arg(long)]
    pub profile: Option<PathBuf>,

    /// Identifier written in the instance_id column.
    #[arg(long)]
    pub id: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Suite {
    Dominance,
    Hitting,
    Br,
    Conjecture,
    Distribution,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(value_enum)]
    pub suite: Suite,
    /// Samples per instance (dominance) or in total (distribution).
    #[arg(long)]
    pub samples: Option<u64>,
    /// Random size vectors (hitting).
    #[arg(long)]
    pub cases: Option<usize>,
    /// Random instances (dominance).
    #[arg(long)]
    pub instances: Option<usize>,
    /// Replicas per probe (conjecture).
    #[arg(long)]
    pub replicas: Option<u64>,
    /// Largest group size probed (conjecture).
    #[arg(long = "max-s")]
    pub max_s: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Construction to sweep.
    #[arg(long)]
    pub family: String,

    #[command(flatten)]
    pub params: NamedParams,

    #[command(flatten)]
    pub options: EvalOptions,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    pub source: InstanceSource,
    /// Request limit for the limited Individual Lottery.
    #[arg(long = "limit")]
    pub limit: Option<usize>,
}

/// Largest number of points `sweep` will evaluate.
pub const SWEEP_CAP: usize = 64;

fn single<T: Clone>(name: &str, v: &[T]) -> Result<Option<T>> {
    match v {
        [] => Ok(None),
        [x] => Ok(Some(x.clone())),
        _ => bail!("--{name} takes a single value here"),
    }
}

fn need<T>(name: &str, v: Option<T>, tag: &str) -> Result<T> {
    v.ok_or_else(|| anyhow!("--named {tag} needs --{name}"))
}

/// One point of [`NamedParams`], every list of length at most one.
#[derive(Debug, Default, Clone)]
pub struct Point {
    pub r: Option<usize>,
    pub m: Option<usize>,
    pub s: Option<usize>,
    pub n: Option<usize>,
    pub k: Option<usize>,
    pub ell: Option<usize>,
    pub alpha: Option<String>,
    pub couples: Option<usize>,
    pub s_max: Option<usize>,
}

impl NamedParams {
    pub fn point(&self) -> Result<Point> {
        Ok(Point {
            r: single("r", &self.r)?,
            m: single("m", &self.m)?,
            s: single("s", &self.s)?,
            n: single("n", &self.n)?,
            k: single("k", &self.k)?,
            ell: single("ell", &self.ell)?,
            alpha: single("alpha", &self.alpha)?,
            couples: single("couples", &self.couples)?,
            s_max: single("s-max", &self.s_max)?,
        })
    }

    /// Cartesian product of all lists, in a fixed nesting order.
    pub fn grid(&self) -> Result<Vec<Point>> {
        fn opts<T: Clone>(v: &[T]) -> Vec<Option<T>> {
            if v.is_empty() {
                vec![None]
            } else {
                v.iter().cloned().map(Some).collect()
            }
        }
        let size = [
            self.r.len(),
            self.m.len(),
            self.s.len(),
            self.n.len(),
            self.k.len(),
            self.ell.len(),
            self.alpha.len(),
            self.couples.len(),
            self.s_max.len(),
        ]
        .iter()
        .map(|&l| l.max(1))
        .product::<usize>();
        if size > SWEEP_CAP {
            bail!("grid has {size} points; the cap is {SWEEP_CAP}");
        }
        let mut out = Vec::with_capacity(size);
        for r in opts(&self.r) {
            for m in opts(&self.m) {
                for s in opts(&self.s) {
                    for n in opts(&self.n) {
                        for k in opts(&self.k) {
                            for ell in opts(&self.ell) {
                                for alpha in opts(&self.alpha) {
                                    for couples in opts(&self.couples) {
                                        for s_max in opts(&self.s_max) {
                                            out.push(Point {
                                                r,
                                                m,
                                                s,
                                                n,
                                                k,
                                                ell,
                                                alpha: alpha.clone(),
                                                couples,
                                                s_max,
                                            });
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
            }
        }
        Ok(out)
    }
}

pub fn named_construction(tag: &str, p: &Point) -> Result<NamedConstruction> {
    let tag_lc = tag.to_ascii_lowercase();
    let alpha = || -> Result<Fraction> {
        let a = need("alpha", p.alpha.clone(), &tag_lc)?;
        a.parse::<Fraction>()
            .map_err(|e| anyhow!("--alpha {a}: {e}"))
    };
    Ok(match tag_lc.as_str() {
        "gl_tight" => NamedConstruction::GlTight {
            r: need("r", p.r, &tag_lc)?,
            m: need("m", p.m, &tag_lc)?,
        },
        "il_bad" => {
            let r = need("r", p.r, &tag_lc)?;
            NamedConstruction::IlBad {
                r,
                s: p.s.unwrap_or(r * r),
                alpha: p
                    .alpha
                    .as_ref()
                    .map_or(Ok(0.25), |_| alpha().map(|a| a.value()))?,
            }
        }
        "il_limit_bad" => NamedConstruction::IlLimitBad {
            ell: need("ell", p.ell, &tag_lc)?,
            m: need("m", p.m, &tag_lc)?,
            k: need("k", p.k, &tag_lc)?,
        },
        "spl_example" => NamedConstruction::SplExample {
            n: need("n", p.n, &tag_lc)?,
        },
        "spl_tight" => {
            let m = need("m", p.m, &tag_lc)?;
            NamedConstruction::SplTight {
                m,
                s: p.s.unwrap_or(m / 2),
                alpha: alpha()?,
            }
        }
        "hamilton_like" => NamedConstruction::HamiltonLike {
            n: need("n", p.n, &tag_lc)?,
            k: need("k", p.k, &tag_lc)?,
            couples: need("couples", p.couples, &tag_lc)?,
        },
        "big_sur_like" => NamedConstruction::BigSurLike {
            n: need("n", p.n, &tag_lc)?,
            k: need("k", p.k, &tag_lc)?,
            s_max: need("s-max", p.s_max, &tag_lc)?,
        },
        _ => bail!("unknown construction '{tag}'"),
    })
}

fn parse_range(text: &str) -> Result<(usize, usize)> {
    let (a, b) = text
        .split_once(':')
        .ok_or_else(|| anyhow!("--sizes expects min:max, got '{text}'"))?;
    Ok((
        a.trim().parse().context("--sizes min")?,
        b.trim().parse().context("--sizes max")?,
    ))
}

impl InstanceSource {
    /// Resolves the instance and a label for report rows.
    pub fn resolve(&self, seed: Option<u64>) -> Result<(Instance, String)> {
        if let Some(path) = &self.instance {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading {}", path.display()))?;
            let inst: Instance = serde_json::from_str(&text)
                .with_context(|| format!("parsing {}", path.display()))?;
            let id = path
                .file_stem()
                .map_or_else(|| "instance".into(), |s| s.to_string_lossy().into_owned());
            return Ok((inst, id));
        }
        if let Some(tag) = &self.named {
            let spec = named_construction(tag, &self.params.point()?)?;
            return Ok((generate_named(&spec)?, spec.label()));
        }
        if self.random {
            let seed = seed.ok_or_else(|| anyhow!("--random requires --seed"))?;
            let groups = self
                .groups
                .ok_or_else(|| anyhow!("--random requires --groups"))?;
            let (lo, hi) = parse_range(self.sizes.as_deref().unwrap_or("1:1"))?;
            let law = if self.weights.is_empty() {
                SizeLaw::uniform(lo, hi)
            } else {
                SizeLaw {
                    min: lo,
                    max: hi,
                    weights: self.weights.clone(),
                }
            };
            let p = self.params.point()?;
            let rule = match (p.k, p.alpha) {
                (Some(k), None) => KRule::Fixed(k),
                (None, Some(a)) => KRule::Alpha(a.parse().with_context(|| format!("--alpha {a}"))?),
                _ => bail!("--random needs exactly one of --k or --alpha"),
            };
            let inst = generate_random(groups, &law, rule, seed)?;
            return Ok((
                inst,
                format!("random(groups={groups},sizes={lo}:{hi},seed={seed})"),
            ));
        }
        bail!("no instance given: use -i <file>, --named <tag> or --random")
    }
}
