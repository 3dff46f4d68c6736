use serde::Serialize;

use super::exact::{
    exact_enumerate, exact_gl_dp, exact_glr_dp, exact_individual_dp, UtilityVector,
};
use super::metrics::{class_means, fairness_ratio, utilization, EnvyMatrix};
use super::monte_carlo::{monte_carlo, ClassStat, McConfig};
use crate::analysis::bounds::{bounds, BoundRecord};
use crate::error::{Error, Result};
use crate::instance::{Instance, InstanceStats};
use crate::mechanisms::{ActionProfile, MechanismKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodChoice {
    /// Exact where it fits, otherwise Monte Carlo.
    Auto,
    Exact,
    MonteCarlo,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub instance_id: String,
    pub method: MethodChoice,
    pub replicas: u64,
    /// Required whenever sampling happens.
    pub seed: Option<u64>,
    pub workers: usize,
    /// Estimate the envy matrix by sampling (needs a seed).
    pub envy: bool,
}

impl EvalConfig {
    pub fn new(instance_id: impl Into<String>) -> Self {
        EvalConfig {
            instance_id: instance_id.into(),
            method: MethodChoice::Auto,
            replicas: 100_000,
            seed: None,
            workers: 1,
            envy: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundCheck {
    pub bound: f64,
    /// The value compared against the bound: exact, or mean minus three
    /// standard errors.
    pub value: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutcomeReport {
    pub instance_id: String,
    pub mechanism: String,
    pub stats: InstanceStats,
    pub utility: UtilityVector,
    pub classes: Vec<ClassStat>,
    pub utilization: f64,
    pub utilization_se: f64,
    /// Computed from class means, which is where Monte Carlo noise averages out.
    pub fairness_ratio: f64,
    /// Conservative fairness: lowest class mean minus three standard errors
    /// over highest plus three.
    pub fairness_lower: f64,
    pub envy: Option<EnvyMatrix>,
    pub bounds: BoundRecord,
    pub efficiency_check: Option<BoundCheck>,
    pub fairness_check: Option<BoundCheck>,
}

impl OutcomeReport {
    pub fn passed(&self) -> bool {
        self.efficiency_check.as_ref().is_none_or(|c| c.pass)
            && self.fairness_check.as_ref().is_none_or(|c| c.pass)
    }
}

fn is_capacity_error(e: &Error) -> bool {
    matches!(e, Error::TooLarge { .. } | Error::StateSpaceTooLarge { .. })
}

/// Best exact evaluation available for this mechanism and profile.
pub fn exact_auto(
    kind: MechanismKind,
    inst: &Instance,
    profile: &ActionProfile,
) -> Result<UtilityVector> {
    let enumerated = exact_enumerate(kind, inst, profile);
    match enumerated {
        Err(ref e) if is_capacity_error(e) => {}
        other => return other,
    }
    let truthful = *profile == ActionProfile::group_request(kind, inst);
    match kind {
        MechanismKind::Gl if truthful => exact_gl_dp(inst),
        MechanismKind::Glr if truthful => exact_glr_dp(inst),
        MechanismKind::Il | MechanismKind::IlLimit(_) | MechanismKind::Iw => {
            exact_individual_dp(kind, inst, profile)
        }
        _ => enumerated,
    }
}

/// Guarantee that applies to `kind` under the group request, as
/// `(efficiency, fairness)`.
pub fn guarantees(kind: MechanismKind, b: &BoundRecord) -> (Option<f64>, Option<f64>) {
    let c = &b.clamped;
    match kind {
        MechanismKind::Gl => (Some(c.gl_eff), Some(c.gl_fair)),
        MechanismKind::Iw => (Some(c.iw_eff), Some(c.iw_fair)),
        MechanismKind::Glr => (Some(c.glr_eff), None),
        MechanismKind::IlLimit(_) => (c.il_limit, c.il_limit),
        MechanismKind::FairGl => (Some(c.benchmark_eff), Some(c.benchmark_fair)),
        MechanismKind::Il => (None, None),
    }
}

const EXACT_SLACK: f64 = 1e-12;

pub fn evaluate(
    kind: MechanismKind,
    inst: &Instance,
    profile: &ActionProfile,
    cfg: &EvalConfig,
) -> Result<OutcomeReport> {
    profile.validate(kind, inst)?;
    let need_seed = || {
        cfg.seed
            .ok_or_else(|| Error::Invalid("a seed is required for Monte Carlo evaluation".into()))
    };
    let mc_cfg = |seed: u64, envy: bool| McConfig {
        replicas: cfg.replicas,
        seed,
        workers: cfg.workers,
        envy,
    };
    let exact = match cfg.method {
        MethodChoice::MonteCarlo => None,
        MethodChoice::Exact => Some(exact_auto(kind, inst, profile)?),
        MethodChoice::Auto => match exact_auto(kind, inst, profile) {
            Ok(u) => Some(u),
            Err(e) if is_capacity_error(&e) => None,
            Err(e) => return Err(e),
        },
    };

    let b = bounds(
        inst,
        match kind {
            MechanismKind::IlLimit(l) => Some(l),
            _ => None,
        },
    );
    let (eff_bound, fair_bound) = if *profile == ActionProfile::group_request(kind, inst) {
        guarantees(kind, &b)
    } else {
        (None, None)
    };

    let (utility, classes, util, util_se, envy) = match exact {
        Some(u) => {
            let classes = class_means(&u.u, inst)
                .into_iter()
                .map(|(size, count, mean)| ClassStat {
                    size,
                    count,
                    mean,
                    se: 0.0,
                })
                .collect();
            let util = utilization(&u.u, inst);
            let envy = if cfg.envy {
                monte_carlo(kind, inst, profile, &mc_cfg(need_seed()?, true))?.envy
            } else {
                None
            };
            (u, classes, util, 0.0, envy)
        }
        None => {
            let r = monte_carlo(kind, inst, profile, &mc_cfg(need_seed()?, cfg.envy))?;
            (
                r.utility,
                r.classes,
                r.utilization.mean,
                r.utilization.se,
                r.envy,
            )
        }
    };

    let means: Vec<f64> = classes.iter().map(|c| c.mean).collect();
    let fairness = if utility.method.is_exact() {
        fairness_ratio(&utility.u)
    } else {
        fairness_ratio(&means)
    };
    let fairness_lower = {
        let lo = classes
            .iter()
            .map(|c| c.mean - 3.0 * c.se)
            .fold(f64::INFINITY, f64::min)
            .max(0.0);
        let hi = classes
            .iter()
            .map(|c| c.mean + 3.0 * c.se)
            .fold(f64::NEG_INFINITY, f64::max);
        if utility.method.is_exact() {
            fairness
        } else if hi <= 0.0 {
            1.0
        } else {
            (lo / hi).min(1.0)
        }
    };
    let check = |bound: f64, value: f64| BoundCheck {
        bound,
        value,
        pass: value >= bound - EXACT_SLACK,
    };
    let efficiency_check = eff_bound.map(|bd| check(bd, util - 3.0 * util_se));
    let fairness_check = fair_bound.map(|bd| check(bd, fairness_lower));

    Ok(OutcomeReport {
        instance_id: cfg.instance_id.clone(),
        mechanism: kind.to_string(),
        stats: inst.stats(),
        utility,
        classes,
        utilization: util,
        utilization_se: util_se,
        fairness_ratio: fairness,
        fairness_lower,
        envy,
        bounds: b,
        efficiency_check,
        fairness_check,
    })
}

/// Formats with ten significant digits, in fixed notation unless the value
/// is very large or very small.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        return "NaN".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{x:.9e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-5..=15).contains(&exp) {
        return format!("{mantissa}e{exp}");
    }
    let rounded: f64 = sci.parse().expect("round trip");
    let decimals = (9 - exp).max(0) as usize;
    format!("{rounded:.decimals$}")
}

pub const CSV_HEADER: [&str; 18] = [
    "instance_id",
    "mechanism",
    "n",
    "k",
    "m",
    "size_class",
    "u_mean",
    "u_se",
    "method",
    "R",
    "seed",
    "utilization",
    "fairness_ratio",
    "envy_margin",
    "eff_bound",
    "eff_pass",
    "fair_bound",
    "fair_pass",
];

const NA: &str = "NA";

impl OutcomeReport {
    /// One CSV record per group-size class.
    pub fn csv_records(&self) -> Vec<Vec<String>> {
        let opt = |x: Option<f64>| x.map_or(NA.to_string(), fmt_float);
        let pass = |c: &Option<BoundCheck>| {
            c.as_ref().map_or(NA.to_string(), |c| {
                if c.pass { "PASS" } else { "FAIL" }.to_string()
            })
        };
        self.classes
            .iter()
            .map(|c| {
                vec![
                    self.instance_id.clone(),
                    self.mechanism.clone(),
                    self.stats.n.to_string(),
                    self.stats.k.to_string(),
                    self.stats.m.to_string(),
                    c.size.to_string(),
                    fmt_float(c.mean),
                    fmt_float(c.se),
                    self.utility.method.label().to_string(),
                    self.utility
                        .replicas
                        .map_or(NA.to_string(), |r| r.to_string()),
                    self.utility.seed.map_or(NA.to_string(), |s| s.to_string()),
                    fmt_float(self.utilization),
                    fmt_float(self.fairness_ratio),
                    opt(self.envy.as_ref().map(|e| e.margin)),
                    opt(self.efficiency_check.as_ref().map(|c| c.bound)),
                    pass(&self.efficiency_check),
                    opt(self.fairness_check.as_ref().map(|c| c.bound)),
                    pass(&self.fairness_check),
                ]
            })
            .collect()
    }
}

/// Header plus every report's records.
pub fn write_csv<W: std::io::Write>(out: W, reports: &[OutcomeReport]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in reports {
        for rec in r.csv_records() {
            w.write_record(&rec)?;
        }
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_named, NamedConstruction};

    #[test]
    fn float_format() {
        assert_eq!(fmt_float(20.0 / 21.0), "0.9523809524");
        assert_eq!(fmt_float(19.0 / 21.0), "0.9047619048");
        assert_eq!(fmt_float(1.0), "1.000000000");
        assert_eq!(fmt_float(0.0), "0");
        assert_eq!(fmt_float(123.456), "123.4560000");
        assert_eq!(fmt_float(9.99999999999), "10.00000000");
        assert_eq!(fmt_float(1.5e-7), "1.500000000e-7");
    }

    #[test]
    fn gl_tight_row() {
        let inst = generate_named(&NamedConstruction::GlTight { r: 2, m: 3 }).unwrap();
        let p = ActionProfile::group_declarations(&inst);
        let rep = evaluate(MechanismKind::Gl, &inst, &p, &EvalConfig::new("t")).unwrap();
        assert!((rep.fairness_ratio - 0.75).abs() < 1e-12);
        let fc = rep.fairness_check.as_ref().unwrap();
        assert!((fc.bound - 1.0 / 3.0).abs() < 1e-12 && fc.pass);
        assert!((rep.utilization - 8.0 / 9.0).abs() < 1e-12);
        let recs = rep.csv_records();
        assert_eq!(recs.len(), 2);
        assert_eq!(recs[0][12], "0.7500000000");
        let mut buf = Vec::new();
        write_csv(&mut buf, &[rep]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("instance_id,mechanism,n,k,m,size_class,u_mean"));
    }

    #[test]
    fn sampling_requires_seed() {
        let inst = Instance::new(30, vec![1; 100]).unwrap();
        let p = ActionProfile::group_request(MechanismKind::Iw, &inst);
        let mut cfg = EvalConfig::new("x");
        cfg.method = MethodChoice::MonteCarlo;
        assert!(matches!(
            evaluate(MechanismKind::Iw, &inst, &p, &cfg),
            Err(Error::Invalid(_))
        ));
        cfg.seed = Some(1);
        cfg.replicas = 100;
        assert!(evaluate(MechanismKind::Iw, &inst, &p, &cfg).is_ok());
    }

    #[test]
    fn fair_gl_utilization_is_benchmark() {
        let inst = Instance::new(5, vec![1, 2, 3, 2, 1]).unwrap();
        let p = ActionProfile::group_declarations(&inst);
        let rep = evaluate(MechanismKind::FairGl, &inst, &p, &EvalConfig::new("f")).unwrap();
        assert!((rep.utilization - (1.0 - 2.0 / 5.0)).abs() < 1e-12);
        assert!(rep.passed());
    }
}
