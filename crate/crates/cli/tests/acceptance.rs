//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits non-zero if any criterion fails.

use std::process::Command;
use std::time::{Duration, Instant};

use lottery_core::analysis::{bounds, example1_closed_forms, spl_tight_closed_form};
use lottery_core::evaluation::{
    evaluate, exact_enumerate, exact_gl_dp, fairness_ratio, monte_carlo, utilization, EvalConfig,
    McConfig, MethodChoice,
};
use lottery_core::mechanisms::build_fair_lottery;
use lottery_core::suites::{self, random_instance};
use lottery_core::{
    generate_named, ActionProfile, Fraction, Instance, MechanismKind, NamedConstruction,
};
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn named(spec: NamedConstruction) -> Instance {
    generate_named(&spec).expect("valid construction")
}

fn mc(
    kind: MechanismKind,
    inst: &Instance,
    replicas: u64,
    seed: u64,
) -> lottery_core::evaluation::McResult {
    let profile = ActionProfile::group_request(kind, inst);
    let mut cfg = McConfig::new(replicas, seed);
    cfg.workers = 8;
    monte_carlo(kind, inst, &profile, &cfg).expect("monte carlo")
}

/// Fairness ratio of class means, lowered by three standard errors on each side.
fn fairness_lower(r: &lottery_core::evaluation::McResult) -> f64 {
    let lo = r
        .classes
        .iter()
        .map(|c| c.mean - 3.0 * c.se)
        .fold(f64::INFINITY, f64::min);
    let hi = r
        .classes
        .iter()
        .map(|c| c.mean + 3.0 * c.se)
        .fold(f64::NEG_INFINITY, f64::max);
    (lo / hi).min(1.0)
}

fn class_fairness(r: &lottery_core::evaluation::McResult) -> f64 {
    fairness_ratio(&r.classes.iter().map(|c| c.mean).collect::<Vec<_>>())
}

fn hamilton() -> Outcome {
    let start = Instant::now();
    let spec = named(NamedConstruction::HamiltonLike {
        n: 10_000,
        k: 21,
        couples: 1_000,
    });
    let b = bounds(&spec, None);
    let anchors = (b.clamped.gl_eff - 0.9523809524).abs() < 5e-11
        && (b.clamped.gl_fair - 0.9047619048).abs() < 5e-11;
    let rounded =
        (b.clamped.gl_eff * 100.0).round() == 95.0 && (b.clamped.gl_fair * 100.0).round() == 90.0;

    let inst = named(NamedConstruction::HamiltonLike {
        n: 2000,
        k: 21,
        couples: 600,
    });
    let hb = bounds(&inst, None);
    let r = mc(MechanismKind::Gl, &inst, 100_000, 1);
    let util_ok = r.utilization.mean - 3.0 * r.utilization.se >= hb.clamped.gl_eff;
    let fair_ok = fairness_lower(&r) >= hb.clamped.gl_fair;
    let elapsed = start.elapsed();
    outcome(
        anchors && rounded && util_ok && fair_ok && elapsed < Duration::from_secs(30),
        format!(
            "gl_eff={:.10} gl_fair={:.10}; n=2000 util={:.4}±{:.4} fair={:.4} (lower {:.4}) vs {:.4}/{:.4}; {:.1}s",
            b.clamped.gl_eff,
            b.clamped.gl_fair,
            r.utilization.mean,
            r.utilization.se,
            class_fairness(&r),
            fairness_lower(&r),
            hb.clamped.gl_eff,
            hb.clamped.gl_fair,
            elapsed.as_secs_f64()
        ),
    )
}

fn big_sur() -> Outcome {
    let inst = named(NamedConstruction::BigSurLike {
        n: 1296,
        k: 702,
        s_max: 15,
    });
    let b = bounds(&inst, None);
    let c = b.clamped;
    let params = (b.kappa - 14.0 / 702.0).abs() < 1e-15 && (b.alpha - 702.0 / 1296.0).abs() < 1e-15;
    let ok = params
        && (0.755..=0.760).contains(&c.iw_eff)
        && (0.738..=0.744).contains(&c.iw_fair)
        && (c.gl_eff - 0.9801).abs() < 5e-5
        && (c.gl_fair - 0.9601).abs() < 5e-5;
    outcome(
        ok,
        format!(
            "kappa={:.6} alpha={:.6} iw_eff={:.4} iw_fair={:.4} gl_eff={:.4} gl_fair={:.4}",
            b.kappa, b.alpha, c.iw_eff, c.iw_fair, c.gl_eff, c.gl_fair
        ),
    )
}

fn gl_tightness() -> Outcome {
    let big = named(NamedConstruction::GlTight { r: 3, m: 500 });
    let u = exact_gl_dp(&big).expect("dp").u;
    let ratio = u[1] / u[0];
    let kappa = 1.0 / 5.0;
    // (r-1)/r - (1 - 2κ) = 1/(r(2r-1)) for κ = 1/(2r-1).
    let gap = ratio - (1.0 - 2.0 * kappa);
    let near = (ratio - 2.0 / 3.0).abs() <= 0.005 && (0.0..=1.0 / 15.0 + 0.005).contains(&gap);

    let small = named(NamedConstruction::GlTight { r: 2, m: 3 });
    let us = exact_gl_dp(&small).expect("dp").u;
    let expect = [2.0 / 3.0, 0.5, 0.5];
    let exact = us.iter().zip(expect).all(|(a, b)| (a - b).abs() < 1e-9);
    outcome(
        near && exact,
        format!("GL_TIGHT(3,500) ratio={ratio:.5} (1-2κ gap {gap:.5}); GL_TIGHT(2,3) u={us:.9?}"),
    )
}

fn il_degradation() -> Outcome {
    let mut rows = Vec::new();
    for (i, r) in [8usize, 16, 24].into_iter().enumerate() {
        let inst = named(NamedConstruction::IlBad {
            r,
            s: r * r,
            alpha: 0.25,
        });
        let il = mc(MechanismKind::Il, &inst, 100_000, 40 + i as u64);
        let gl = exact_gl_dp(&inst).expect("dp");
        let gl_util = utilization(&gl.u, &inst);
        rows.push((
            r,
            il.utilization,
            class_fairness(&il),
            fairness_lower(&il),
            gl_util,
        ));
    }
    let decreasing = rows.windows(2).all(|w| {
        let (a, b) = (w[0].1, w[1].1);
        b.mean + 3.0 * b.se < a.mean - 3.0 * a.se
    });
    let last = rows[2];
    let ok =
        decreasing && last.1.mean + 3.0 * last.1.se <= 0.30 && last.4 >= 0.80 && last.2 <= 0.30;
    let text = rows
        .iter()
        .map(|(r, u, f, _, g)| {
            format!(
                "r={r}: il util={:.4}±{:.4} fair={:.4}, gl util={:.4}",
                u.mean, u.se, f, g
            )
        })
        .collect::<Vec<_>>()
        .join("; ");
    outcome(ok, text)
}

fn dominance() -> Outcome {
    let start = Instant::now();
    let report = suites::dominance(20, 10_000, 5);
    let elapsed = start.elapsed();
    outcome(
        report.passed && elapsed < Duration::from_secs(60),
        format!(
            "{} group comparisons, {} violations, {:.1}s",
            report.checks,
            report.failures.len(),
            elapsed.as_secs_f64()
        ),
    )
}

fn hitting() -> Outcome {
    let report = suites::hitting(1000, 6).expect("hitting");
    outcome(
        report.passed,
        format!(
            "{} checks, {} failures",
            report.checks,
            report.failures.len()
        ),
    )
}

fn small_instances(count: usize, seed: u64) -> Vec<Instance> {
    let mut out = Vec::new();
    let mut j = 0u64;
    while out.len() < count {
        let inst = random_instance(seed.wrapping_add(j), 6, 3);
        j += 1;
        if inst.n() <= 8 {
            out.push(inst);
        }
    }
    out
}

fn oracle_agreement() -> Outcome {
    let kinds = [
        MechanismKind::Gl,
        MechanismKind::Il,
        MechanismKind::Iw,
        MechanismKind::Glr,
        MechanismKind::FairGl,
        MechanismKind::IlLimit(2),
    ];
    let mut comparisons = 0usize;
    let mut misses = Vec::new();
    let mut dp_worst = 0.0f64;
    let mut seed = 700u64;
    for inst in small_instances(50, 7_000) {
        let dp = exact_gl_dp(&inst).expect("dp").u;
        let en = exact_enumerate(
            MechanismKind::Gl,
            &inst,
            &ActionProfile::group_declarations(&inst),
        )
        .expect("enumerate")
        .u;
        dp_worst = dp
            .iter()
            .zip(&en)
            .map(|(a, b)| (a - b).abs())
            .fold(dp_worst, f64::max);
        for kind in kinds {
            if kind == MechanismKind::FairGl && inst.s_max() > inst.k() {
                continue;
            }
            let profile = ActionProfile::group_request(kind, &inst);
            let exact = exact_enumerate(kind, &inst, &profile).expect("enumerate").u;
            seed += 1;
            let r = mc(kind, &inst, 100_000, seed);
            let se = r.utility.se.as_ref().expect("se");
            for (g, (&p, (&q, &s))) in exact.iter().zip(r.utility.u.iter().zip(se)).enumerate() {
                comparisons += 1;
                if (p - q).abs() > 3.0 * s {
                    misses.push(format!(
                        "{kind} k={} sizes={:?} group {g}: exact {p:.5} mc {q:.5} se {s:.5}",
                        inst.k(),
                        inst.group_sizes()
                    ));
                }
            }
        }
    }
    // Two-sided normal tail beyond 3 SE.
    let nominal = 0.002_699_796;
    let mut detail = format!(
        "{comparisons} group comparisons, {} outside 3 SE ({:.1} expected by chance); max |dp - enum| = {dp_worst:.2e}",
        misses.len(),
        nominal * comparisons as f64
    );
    for m in misses.iter().take(5) {
        detail.push_str("\n      ");
        detail.push_str(m);
    }
    outcome(misses.is_empty() && dp_worst <= 1e-9, detail)
}

fn example1_crossover() -> Outcome {
    let mut order_ok = true;
    for m in 4..=20 {
        let e = example1_closed_forms(m).expect("closed form");
        let good = if m <= 13 {
            e.u_all_twos <= e.u_group_request
        } else {
            e.u_all_twos > e.u_group_request
        };
        order_ok &= good;
    }
    let inst = named(NamedConstruction::SplExample { n: 17 });
    let e = example1_closed_forms(inst.m()).expect("closed form");
    let mut cfg = McConfig::new(100_000, 81);
    cfg.workers = 8;
    let gr = ActionProfile::group_request(MechanismKind::Iw, &inst);
    let mut twos = vec![1usize; inst.n()];
    twos[..4].fill(2);
    let twos = ActionProfile::TicketRequest(twos);
    let a = monte_carlo(MechanismKind::Iw, &inst, &gr, &cfg).expect("mc");
    cfg.seed = 82;
    let b = monte_carlo(MechanismKind::Iw, &inst, &twos, &cfg).expect("mc");
    let (ua, sa) = (a.utility.u[0], a.utility.se.as_ref().unwrap()[0]);
    let (ub, sb) = (b.utility.u[0], b.utility.se.as_ref().unwrap()[0]);
    let match_a = (ua - e.u_group_request).abs() <= 3.0 * sa;
    let match_b = (ub - e.u_all_twos).abs() <= 3.0 * sb;
    outcome(
        order_ok && match_a && match_b,
        format!(
            "ordering m=4..20 {}; n=17: group request {ua:.5}±{sa:.5} vs {:.5}, all twos {ub:.5}±{sb:.5} vs {:.5}",
            if order_ok { "ok" } else { "wrong" },
            e.u_group_request,
            e.u_all_twos
        ),
    )
}

fn iw_tightness() -> Outcome {
    let alpha = Fraction::new(1, 2).unwrap();
    let inst = named(NamedConstruction::SplTight {
        m: 200,
        s: 100,
        alpha,
    });
    let closed = spl_tight_closed_form(200, 100, alpha).expect("closed form");
    let g = lottery_core::analysis::g(0.5);
    let r = mc(MechanismKind::Iw, &inst, 100_000, 9);
    let u = r.utilization.mean;
    outcome(
        (u - closed).abs() <= 0.02 && (u - g).abs() <= 0.03,
        format!(
            "util={u:.5}±{:.5} closed form={closed:.5} g(0.5)={g:.5}",
            r.utilization.se
        ),
    )
}

fn br_and_conjecture() -> Outcome {
    let br = suites::br().expect("br");
    let conj = suites::conjecture(5, 100_000, 10).expect("conjecture");
    let mut detail = format!(
        "B_r: {} strategies, {} violations; probes: {} (strategy, T) pairs, {} above 1-e^-T + 3 SE",
        br.checks,
        br.failures.len(),
        conj.checks,
        conj.failures.len()
    );
    for f in conj.failures.iter().take(5) {
        detail.push_str("\n      ");
        detail.push_str(f);
    }
    outcome(br.passed && conj.passed, detail)
}

fn fair_lottery() -> Outcome {
    let q = |a: usize, b: usize| BigRational::new(BigInt::from(a), BigInt::from(b));
    let mut built = 0;
    let mut problems = Vec::new();
    let mut j = 0u64;
    while built < 30 {
        let inst = random_instance(11_000 + j, 12, 4);
        j += 1;
        if inst.s_max() > inst.k() {
            continue;
        }
        built += 1;
        let (n, k, s_max) = (inst.n(), inst.k(), inst.s_max());
        let u_star = q(k - s_max + 1, n);
        let lottery = build_fair_lottery(&inst).expect("fair lottery");
        let marg_ok = lottery
            .marginals(inst.m())
            .iter()
            .all(|&x| (x - u_star_f(&u_star)).abs() <= 1e-9);
        let mut total = BigRational::zero();
        let mut feasible = true;
        for (set, w) in &lottery.support {
            total += w;
            let used: usize = set.iter().map(|&g| inst.group_size(g)).sum();
            let mut sorted = set.clone();
            sorted.sort_unstable();
            sorted.dedup();
            feasible &= used <= k && sorted.len() == set.len() && *w >= BigRational::zero();
        }
        feasible &= total == BigRational::one();
        let run = exact_enumerate(
            MechanismKind::FairGl,
            &inst,
            &ActionProfile::group_declarations(&inst),
        )
        .expect("enumerate");
        let util = utilization(&run.u, &inst);
        let util_ok = (util - (1.0 - (s_max as f64 - 1.0) / k as f64)).abs() <= 1e-9;
        if !(marg_ok && feasible && util_ok) {
            problems.push(format!("k={k} sizes={:?}", inst.group_sizes()));
        }
    }
    outcome(
        problems.is_empty(),
        format!(
            "{built} instances, {} with a failed check {problems:?}",
            problems.len()
        ),
    )
}

fn u_star_f(x: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    x.to_f64().unwrap()
}

fn il_limit() -> Outcome {
    let mut worst = Vec::new();
    let mut ok = true;
    // The 1/ell arguments need k >= ell; below that a group of size ell can
    // never be served. Such draws are counted, not checked.
    let mut below_limit = (0, 0);
    for ell in [2usize, 3] {
        let mut lowest = (f64::INFINITY, f64::INFINITY);
        let mut done = 0;
        let mut j = 0u64;
        while done < 10 {
            let inst = random_instance(12_000 + 100 * ell as u64 + j, 10, ell);
            j += 1;
            if inst.s_max() > ell {
                continue;
            }
            let kind = MechanismKind::IlLimit(ell);
            let mut cfg = EvalConfig::new("il_limit");
            cfg.seed = Some(1200 + j);
            cfg.replicas = 100_000;
            cfg.workers = 8;
            let rep = evaluate(
                kind,
                &inst,
                &ActionProfile::group_request(kind, &inst),
                &cfg,
            )
            .expect("evaluate");
            let bound = 1.0 / ell as f64;
            if inst.k() < ell {
                below_limit.0 += 1;
                if rep.utilization < bound || rep.fairness_ratio < bound {
                    below_limit.1 += 1;
                }
                continue;
            }
            done += 1;
            let util = rep.utilization + 3.0 * rep.utilization_se;
            let fair = if rep.utility.method.is_exact() {
                rep.fairness_ratio
            } else {
                let lo = rep
                    .classes
                    .iter()
                    .map(|c| c.mean + 3.0 * c.se)
                    .fold(f64::INFINITY, f64::min);
                let hi = rep
                    .classes
                    .iter()
                    .map(|c| c.mean - 3.0 * c.se)
                    .fold(f64::NEG_INFINITY, f64::max);
                (lo / hi).min(1.0)
            };
            ok &= util >= bound && fair >= bound;
            lowest = (
                lowest.0.min(rep.utilization),
                lowest.1.min(rep.fairness_ratio),
            );
        }
        worst.push(format!(
            "ell={ell}: min util {:.4}, min fair {:.4}",
            lowest.0, lowest.1
        ));
    }
    worst.push(format!(
        "k < ell draws skipped: {} ({} below 1/ell)",
        below_limit.0, below_limit.1
    ));

    let mut scales = Vec::new();
    for (i, m) in [50usize, 500].into_iter().enumerate() {
        let inst = named(NamedConstruction::IlLimitBad { ell: 2, m, k: 6 });
        let kind = MechanismKind::IlLimit(2);
        let mut cfg = EvalConfig::new("il_limit_bad");
        cfg.method = MethodChoice::MonteCarlo;
        cfg.seed = Some(1250 + i as u64);
        cfg.replicas = 100_000;
        cfg.workers = 8;
        let rep = evaluate(
            kind,
            &inst,
            &ActionProfile::group_request(kind, &inst),
            &cfg,
        )
        .expect("evaluate");
        scales.push((
            inst.n(),
            rep.utilization,
            rep.utilization_se,
            rep.fairness_ratio,
        ));
    }
    let shrinking = scales[1].1 + 3.0 * scales[1].2 < scales[0].1 - 3.0 * scales[0].2
        && scales[1].3 < scales[0].3;
    let text = scales
        .iter()
        .map(|(n, u, se, f)| format!("n={n}: util {u:.4}±{se:.4} fair {f:.4}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(
        ok && shrinking,
        format!("{}; IL_LIMIT_BAD(2,k=6) {text}", worst.join("; ")),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_lottery");
    let run = |workers: &str| {
        Command::new(bin)
            .args([
                "--seed",
                "13",
                "--workers",
                workers,
                "eval",
                "--named",
                "hamilton_like",
                "--n",
                "300",
                "--k",
                "40",
                "--couples",
                "100",
                "--mech",
                "gl,il,iw,glr,il_limit:2",
                "--method",
                "mc",
                "--replicas",
                "20000",
            ])
            .output()
            .expect("run lottery")
    };
    let a = run("1");
    let b = run("8");
    let c = run("8");
    let ok =
        a.status.success() && !a.stdout.is_empty() && a.stdout == b.stdout && b.stdout == c.stdout;
    outcome(
        ok,
        format!(
            "{} CSV bytes; 1 vs 8 workers {}",
            a.stdout.len(),
            if a.stdout == b.stdout {
                "identical"
            } else {
                "differ"
            }
        ),
    )
}

fn main() {
    let criteria: [Criterion; 13] = [
        ("hamilton anchors", hamilton),
        ("big sur anchors", big_sur),
        ("gl tightness", gl_tightness),
        ("il degradation", il_degradation),
        ("dominance coupling", dominance),
        ("hitting-time bounds", hitting),
        ("oracle agreement", oracle_agreement),
        ("example 1 crossover", example1_crossover),
        ("iw tightness", iw_tightness),
        ("B_r and threshold probes", br_and_conjecture),
        ("fair group lottery", fair_lottery),
        ("il with limit", il_limit),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {:>2} {:<26} {} ({:.1}s) {}",
            i + 1,
            name,
            if o.pass { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64(),
            o.detail
        );
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
