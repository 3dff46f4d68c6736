//! Instances, the `(kappa, alpha)` family and the adversarial constructions.
//!
//! An instance is a ticket count `k` together with the multiset of group
//! sizes. Agents are canonical: agent ids run group-major, so group `g`
//! owns ids `offset(g) .. offset(g) + size(g)`.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "InstanceFile", into = "InstanceFile")]
pub struct Instance {
    k: usize,
    group_sizes: Vec<usize>,
    offsets: Vec<usize>,
    n: usize,
}

/// On-disk form: `{ "k": int, "group_sizes": [int, ...] }`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceFile {
    pub k: i64,
    pub group_sizes: Vec<i64>,
}

impl TryFrom<InstanceFile> for Instance {
    type Error = Error;

    fn try_from(file: InstanceFile) -> Result<Self> {
        if file.k <= 0 {
            return Err(Error::Nonpositive("k"));
        }
        let mut sizes = Vec::with_capacity(file.group_sizes.len());
        for s in file.group_sizes {
            if s <= 0 {
                return Err(Error::Nonpositive("group size"));
            }
            sizes.push(s as usize);
        }
        Instance::new(file.k as usize, sizes)
    }
}

impl From<Instance> for InstanceFile {
    fn from(inst: Instance) -> Self {
        InstanceFile {
            k: inst.k as i64,
            group_sizes: inst.group_sizes.iter().map(|&s| s as i64).collect(),
        }
    }
}

impl Instance {
    /// Builds an instance; rejects empty group lists, zero sizes and `n <= k`.
    pub fn new(k: usize, group_sizes: Vec<usize>) -> Result<Self> {
        if group_sizes.is_empty() {
            return Err(Error::EmptyGroups);
        }
        if k == 0 {
            return Err(Error::Nonpositive("k"));
        }
        if group_sizes.contains(&0) {
            return Err(Error::Nonpositive("group size"));
        }
        let mut offsets = Vec::with_capacity(group_sizes.len());
        let mut n = 0usize;
        for &s in &group_sizes {
            offsets.push(n);
            n += s;
        }
        if n <= k {
            return Err(Error::DemandNotExceedingSupply { n, k });
        }
        Ok(Instance {
            k,
            group_sizes,
            offsets,
            n,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of groups.
    pub fn m(&self) -> usize {
        self.group_sizes.len()
    }

    pub fn group_sizes(&self) -> &[usize] {
        &self.group_sizes
    }

    pub fn group_size(&self, group: usize) -> usize {
        self.group_sizes[group]
    }

    pub fn s_max(&self) -> usize {
        self.group_sizes.iter().copied().max().unwrap_or(0)
    }

    /// Global id of `(group, member)`.
    pub fn agent(&self, group: usize, member: usize) -> usize {
        debug_assert!(member < self.group_sizes[group]);
        self.offsets[group] + member
    }

    pub fn members(&self, group: usize) -> std::ops::Range<usize> {
        self.offsets[group]..self.offsets[group] + self.group_sizes[group]
    }

    /// Group index of every agent, in agent order.
    pub fn group_of_agents(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.n);
        for (g, &s) in self.group_sizes.iter().enumerate() {
            out.extend(std::iter::repeat_n(g, s));
        }
        out
    }

    pub fn group_of(&self, agent: usize) -> usize {
        match self.offsets.binary_search(&agent) {
            Ok(g) => g,
            Err(g) => g - 1,
        }
    }

    /// Distinct group sizes (ascending) with their multiplicities.
    pub fn size_classes(&self) -> Vec<(usize, usize)> {
        let mut counts = BTreeMap::new();
        for &s in &self.group_sizes {
            *counts.entry(s).or_insert(0usize) += 1;
        }
        counts.into_iter().collect()
    }

    pub fn stats(&self) -> InstanceStats {
        instance_stats(self)
    }
}

/// Membership parameters of the family `I(kappa, alpha)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub kappa: f64,
    pub alpha: f64,
}

impl FamilyParams {
    pub fn new(kappa: f64, alpha: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa < 1.0) || !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Domain(format!(
                "family parameters must lie in (0,1), got kappa={kappa}, alpha={alpha}"
            )));
        }
        Ok(FamilyParams { kappa, alpha })
    }

    /// `(s_max - 1)/k <= kappa` and `k/n <= alpha`, evaluated in exact
    /// integer-vs-float form to avoid rounding at the boundary.
    pub fn contains(&self, inst: &Instance) -> bool {
        let knap = (inst.s_max() - 1) as f64;
        let k = inst.k() as f64;
        knap <= self.kappa * k * (1.0 + 1e-15) && k <= self.alpha * inst.n() as f64 * (1.0 + 1e-15)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InstanceStats {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    pub s_max: usize,
    pub kappa_hat: f64,
    pub alpha_hat: f64,
    /// `(k - s_max + 1)/n`: the common success probability of the fair
    /// benchmark lottery. Non-positive values mean the benchmark is vacuous.
    pub benchmark_u_star: f64,
}

impl InstanceStats {
    pub fn in_family(&self, params: FamilyParams) -> bool {
        let knap = (self.s_max - 1) as f64;
        knap <= params.kappa * self.k as f64 * (1.0 + 1e-15)
            && self.k as f64 <= params.alpha * self.n as f64 * (1.0 + 1e-15)
    }
}

pub fn instance_stats(inst: &Instance) -> InstanceStats {
    let s_max = inst.s_max();
    let k = inst.k();
    let n = inst.n();
    InstanceStats {
        n,
        k,
        m: inst.m(),
        s_max,
        kappa_hat: (s_max - 1) as f64 / k as f64,
        alpha_hat: k as f64 / n as f64,
        benchmark_u_star: (k as f64 - s_max as f64 + 1.0) / n as f64,
    }
}

/// A rational in `(0, 1)` written `p/q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Fraction {
    pub num: u64,
    pub den: u64,
}

impl Fraction {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 {
            return Err(Error::ParamViolation("fraction denominator is zero".into()));
        }
        let g = gcd(num, den);
        Ok(Fraction {
            num: num / g,
            den: den / g,
        })
    }

    /// Recovers `p/q` from a float when some `q <= 10^6` reproduces it.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() || x < 0.0 {
            return Err(Error::ParamViolation(format!(
                "{x} is not a nonnegative rational"
            )));
        }
        for q in 1..=1_000_000u64 {
            let p = (x * q as f64).round();
            if (p / q as f64 - x).abs() <= 1e-12 * x.max(1.0) {
                return Fraction::new(p as u64, q);
            }
        }
        Err(Error::ParamViolation(format!(
            "{x} has no small rational form"
        )))
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `self * m` when it is an integer.
    pub fn times_integral(&self, m: u64) -> Option<u64> {
        let prod = self.num as u128 * m as u128;
        prod.is_multiple_of(self.den as u128)
            .then(|| (prod / self.den as u128) as u64)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

impl fmt::Display for Fraction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

impl FromStr for Fraction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('/') {
            Some((p, q)) => {
                let p = p
                    .trim()
                    .parse()
                    .map_err(|_| Error::ParamViolation(format!("bad fraction {s}")))?;
                let q = q
                    .trim()
                    .parse()
                    .map_err(|_| Error::ParamViolation(format!("bad fraction {s}")))?;
                Fraction::new(p, q)
            }
            None => {
                let x: f64 = s
                    .trim()
                    .parse()
                    .map_err(|_| Error::ParamViolation(format!("bad fraction {s}")))?;
                Fraction::from_f64(x)
            }
        }
    }
}

impl Serialize for Fraction {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Fraction {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Text(String),
            Number(f64),
        }
        let parsed = match Raw::deserialize(deserializer)? {
            Raw::Text(s) => s.parse(),
            Raw::Number(x) => Fraction::from_f64(x),
        };
        parsed.map_err(serde::de::Error::custom)
    }
}

/// The instances built in the worst-case and tightness arguments, plus the
/// two field-data shapes (Hamilton, Big Sur).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "tag",
    content = "params",
    rename_all = "SCREAMING_SNAKE_CASE",
    deny_unknown_fields
)]
pub enum NamedConstruction {
    /// `k = 2r - 1`, one single and `m - 1` couples.
    GlTight { r: usize, m: usize },
    /// `n = r*s`, `k = floor(alpha*r)*s`, one group of size `s` and
    /// `s*(r-1)` singles.
    IlBad { r: usize, s: usize, alpha: f64 },
    /// One single and `m - 1` groups of size `ell + 1`.
    IlLimitBad { ell: usize, m: usize, k: usize },
    /// `k = n - 1`, one group of four and `n - 4` singles.
    SplExample { n: usize },
    /// `m` groups of size `s`, `k = alpha*m*s` with `alpha*m` integral.
    SplTight { m: usize, s: usize, alpha: Fraction },
    /// `couples` groups of two, the remaining agents single.
    HamiltonLike { n: usize, k: usize, couples: usize },
    /// One group of `s_max`, the rest couples, one single if parity demands.
    BigSurLike { n: usize, k: usize, s_max: usize },
}

impl NamedConstruction {
    pub fn tag(&self) -> &'static str {
        match self {
            NamedConstruction::GlTight { .. } => "GL_TIGHT",
            NamedConstruction::IlBad { .. } => "IL_BAD",
            NamedConstruction::IlLimitBad { .. } => "IL_LIMIT_BAD",
            NamedConstruction::SplExample { .. } => "SPL_EXAMPLE",
            NamedConstruction::SplTight { .. } => "SPL_TIGHT",
            NamedConstruction::HamiltonLike { .. } => "HAMILTON_LIKE",
            NamedConstruction::BigSurLike { .. } => "BIG_SUR_LIKE",
        }
    }

    /// Short identifier used in report rows, e.g. `gl_tight(r=2,m=3)`.
    pub fn label(&self) -> String {
        match self {
            NamedConstruction::GlTight { r, m } => format!("gl_tight(r={r},m={m})"),
            NamedConstruction::IlBad { r, s, alpha } => {
                format!("il_bad(r={r},s={s},alpha={alpha})")
            }
            NamedConstruction::IlLimitBad { ell, m, k } => {
                format!("il_limit_bad(ell={ell},m={m},k={k})")
            }
            NamedConstruction::SplExample { n } => format!("spl_example(n={n})"),
            NamedConstruction::SplTight { m, s, alpha } => {
                format!("spl_tight(m={m},s={s},alpha={alpha})")
            }
            NamedConstruction::HamiltonLike { n, k, couples } => {
                format!("hamilton_like(n={n},k={k},couples={couples})")
            }
            NamedConstruction::BigSurLike { n, k, s_max } => {
                format!("big_sur_like(n={n},k={k},s_max={s_max})")
            }
        }
    }
}

fn violation(msg: impl Into<String>) -> Error {
    Error::ParamViolation(msg.into())
}

pub fn generate_named(spec: &NamedConstruction) -> Result<Instance> {
    match *spec {
        NamedConstruction::GlTight { r, m } => {
            if r < 1 {
                return Err(violation("GL_TIGHT needs r >= 1"));
            }
            if m <= r {
                return Err(violation(
                    "GL_TIGHT needs m > r so that n = 2m - 1 > k = 2r - 1",
                ));
            }
            let mut sizes = vec![1];
            sizes.extend(std::iter::repeat_n(2, m - 1));
            Instance::new(2 * r - 1, sizes)
        }
        NamedConstruction::IlBad { r, s, alpha } => {
            if !(alpha > 0.0 && alpha < 1.0) {
                return Err(violation("IL_BAD needs alpha in (0,1)"));
            }
            if r < 2 || s < 1 {
                return Err(violation("IL_BAD needs r >= 2 and s >= 1"));
            }
            let tickets_per = (alpha * r as f64).floor() as usize;
            if tickets_per == 0 {
                return Err(violation("IL_BAD needs floor(alpha*r) >= 1"));
            }
            let mut sizes = vec![s];
            sizes.extend(std::iter::repeat_n(1, s * (r - 1)));
            Instance::new(tickets_per * s, sizes)
        }
        NamedConstruction::IlLimitBad { ell, m, k } => {
            if ell < 1 || m < 2 || k < 1 {
                return Err(violation("IL_LIMIT_BAD needs ell >= 1, m >= 2, k >= 1"));
            }
            let mut sizes = vec![1];
            sizes.extend(std::iter::repeat_n(ell + 1, m - 1));
            Instance::new(k, sizes)
        }
        NamedConstruction::SplExample { n } => {
            if n < 5 {
                return Err(violation("SPL_EXAMPLE needs n >= 5"));
            }
            let mut sizes = vec![4];
            sizes.extend(std::iter::repeat_n(1, n - 4));
            Instance::new(n - 1, sizes)
        }
        NamedConstruction::SplTight { m, s, alpha } => {
            if alpha.num == 0 || alpha.num >= alpha.den {
                return Err(violation("SPL_TIGHT needs alpha in (0,1)"));
            }
            if m < 1 || s < 1 {
                return Err(violation("SPL_TIGHT needs m, s >= 1"));
            }
            let draws = alpha.times_integral(m as u64).ok_or_else(|| {
                violation(format!("alpha*m must be integral (alpha={alpha}, m={m})"))
            })?;
            Instance::new(draws as usize * s, vec![s; m])
        }
        NamedConstruction::HamiltonLike { n, k, couples } => {
            if 2 * couples > n {
                return Err(violation("HAMILTON_LIKE needs 2*couples <= n"));
            }
            let mut sizes = vec![2; couples];
            sizes.extend(std::iter::repeat_n(1, n - 2 * couples));
            Instance::new(k, sizes)
        }
        NamedConstruction::BigSurLike { n, k, s_max } => {
            if s_max < 1 || s_max > n {
                return Err(violation("BIG_SUR_LIKE needs 1 <= s_max <= n"));
            }
            let rest = n - s_max;
            let mut sizes = vec![s_max];
            let pair = 2.min(s_max);
            sizes.extend(std::iter::repeat_n(pair, rest / pair));
            sizes.extend(std::iter::repeat_n(1, rest % pair));
            Instance::new(k, sizes)
        }
    }
}

/// Categorical law over group sizes `min..=max` (one weight per size).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SizeLaw {
    pub min: usize,
    pub max: usize,
    pub weights: Vec<f64>,
}

impl SizeLaw {
    pub fn uniform(min: usize, max: usize) -> Self {
        SizeLaw {
            min,
            max,
            weights: vec![1.0; max.saturating_sub(min) + 1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KRule {
    Fixed(usize),
    /// `k = floor(alpha * n)`.
    Alpha(f64),
}

/// Draws `n_groups` i.i.d. sizes from `law` and picks `k` by `k_rule`.
/// A pure function of its arguments.
pub fn generate_random(
    n_groups: usize,
    law: &SizeLaw,
    k_rule: KRule,
    seed: u64,
) -> Result<Instance> {
    if n_groups == 0 {
        return Err(Error::EmptyGroups);
    }
    if law.min == 0 {
        return Err(Error::Nonpositive("minimum group size"));
    }
    if law.max < law.min || law.weights.len() != law.max - law.min + 1 {
        return Err(Error::Invalid(format!(
            "size law needs {} weights for sizes {}..={}",
            law.max.saturating_sub(law.min) + 1,
            law.min,
            law.max
        )));
    }
    let dist = WeightedIndex::new(&law.weights)
        .map_err(|e| Error::Invalid(format!("size weights: {e}")))?;
    let mut rng = rng::stream(seed);
    let sizes: Vec<usize> = (0..n_groups)
        .map(|_| law.min + dist.sample(&mut rng))
        .collect();
    let n: usize = sizes.iter().sum();
    let k = match k_rule {
        KRule::Fixed(k) => k,
        KRule::Alpha(alpha) => {
            if alpha.is_nan() || alpha <= 0.0 {
                return Err(Error::Nonpositive("alpha"));
            }
            (alpha * n as f64).floor() as usize
        }
    };
    if k == 0 {
        return Err(Error::Nonpositive("k"));
    }
    Instance::new(k, sizes)
}
