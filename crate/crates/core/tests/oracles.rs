use lottery_core::analysis::{bounds, spl_tight_closed_form};
use lottery_core::evaluation::{
    exact_auto, exact_enumerate, exact_glr_dp, fairness_ratio, monte_carlo, utilization, write_csv,
    EvalConfig, McConfig, CSV_HEADER,
};
use lottery_core::suites::random_instance;
use lottery_core::{
    evaluate, generate_named, ActionProfile, Fraction, Instance, MechanismKind, NamedConstruction,
};

/// Standardized errors of many short runs against enumeration should have
/// unit variance for every mechanism.
#[test]
fn monte_carlo_is_calibrated() {
    let inst = Instance::new(4, vec![2, 1, 1, 3, 1]).unwrap();
    for name in ["gl", "il", "iw", "glr", "fair_gl", "il_limit:2"] {
        let kind: MechanismKind = name.parse().unwrap();
        let profile = ActionProfile::group_request(kind, &inst);
        let exact = exact_enumerate(kind, &inst, &profile).unwrap().u;
        let replicas = 2_000u64;
        let (mut count, mut sum_sq) = (0usize, 0.0);
        for seed in 0..300 {
            let r = monte_carlo(
                kind,
                &inst,
                &profile,
                &McConfig::new(replicas, 90_000 + seed),
            )
            .unwrap();
            for (p, q) in exact.iter().zip(&r.utility.u) {
                let se = (p * (1.0 - p) / replicas as f64).sqrt();
                if se > 0.0 {
                    count += 1;
                    sum_sq += ((q - p) / se).powi(2);
                }
            }
        }
        let var = sum_sq / count as f64;
        assert!((0.88..1.12).contains(&var), "{name}: z variance {var}");
    }
}

#[test]
fn symmetric_instances_match_closed_form() {
    for (m, s, num, den) in [(6, 3, 1, 2), (8, 2, 1, 4), (9, 4, 2, 3)] {
        let alpha = Fraction::new(num, den).unwrap();
        let inst = generate_named(&NamedConstruction::SplTight { m, s, alpha }).unwrap();
        let closed = spl_tight_closed_form(m, s, alpha).unwrap();
        let iw = exact_auto(
            MechanismKind::Iw,
            &inst,
            &ActionProfile::group_request(MechanismKind::Iw, &inst),
        )
        .unwrap();
        assert!(
            (utilization(&iw.u, &inst) - closed).abs() < 1e-9,
            "iw m={m} s={s}"
        );
    }
}

#[test]
fn glr_never_beats_iw_or_gl_in_expectation() {
    for seed in 0..40 {
        let inst = random_instance(31_000 + seed, 7, 3);
        // With s_max > k the IW requests are clamped to k and the coupling no
        // longer applies.
        if inst.n() > 8 || inst.s_max() > inst.k() {
            continue;
        }
        let gr = |k: MechanismKind| {
            exact_auto(k, &inst, &ActionProfile::group_request(k, &inst))
                .unwrap()
                .u
        };
        let (glr, iw, gl) = (
            exact_glr_dp(&inst).unwrap().u,
            gr(MechanismKind::Iw),
            gr(MechanismKind::Gl),
        );
        for g in 0..inst.m() {
            assert!(
                glr[g] <= iw[g] + 1e-12 && iw[g] <= gl[g] + 1e-12,
                "{:?} k={}",
                inst.group_sizes(),
                inst.k()
            );
        }
    }
}

/// The worst-case guarantees hold on every instance, so exact values on
/// random instances must clear them.
#[test]
fn exact_values_respect_guarantees() {
    for seed in 0..150 {
        let inst = random_instance(40_000 + seed, 9, 4);
        let b = bounds(&inst, None).clamped;
        let gl = exact_auto(
            MechanismKind::Gl,
            &inst,
            &ActionProfile::group_declarations(&inst),
        )
        .unwrap()
        .u;
        assert!(utilization(&gl, &inst) >= b.gl_eff - 1e-12);
        assert!(fairness_ratio(&gl) >= b.gl_fair - 1e-12);
        if inst.n() <= 8 {
            let kind = MechanismKind::Iw;
            let iw = exact_auto(kind, &inst, &ActionProfile::group_request(kind, &inst))
                .unwrap()
                .u;
            assert!(utilization(&iw, &inst) >= b.iw_eff - 1e-12);
            assert!(fairness_ratio(&iw) >= b.iw_fair - 1e-12);
        }
    }
}

#[test]
fn report_rows_are_well_formed() {
    let inst = generate_named(&NamedConstruction::GlTight { r: 2, m: 4 }).unwrap();
    let mut cfg = EvalConfig::new("a,b");
    cfg.seed = Some(4);
    cfg.replicas = 2_000;
    let reports: Vec<_> = ["gl", "il", "iw", "glr", "fair_gl", "il_limit:2"]
        .iter()
        .map(|k| {
            let kind: MechanismKind = k.parse().unwrap();
            evaluate(
                kind,
                &inst,
                &ActionProfile::group_request(kind, &inst),
                &cfg,
            )
            .unwrap()
        })
        .collect();
    assert!(reports.iter().all(|r| r.passed()));
    let mut buf = Vec::new();
    write_csv(&mut buf, &reports).unwrap();
    let mut rd = csv::Reader::from_reader(buf.as_slice());
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), CSV_HEADER);
    let rows: Vec<_> = rd.records().map(|r| r.unwrap()).collect();
    // Two size classes per mechanism.
    assert_eq!(rows.len(), 12);
    assert!(rows
        .iter()
        .all(|r| &r[0] == "a,b" && r.len() == CSV_HEADER.len()));
}
