use serde::Serialize;

use crate::instance::Instance;

/// `g(x) = (1 - e^{-x}) / x`, with `g(0) = 1`.
pub fn g(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        -(-x).exp_m1() / x
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundValues {
    pub gl_eff: f64,
    pub gl_fair: f64,
    pub iw_eff: f64,
    pub iw_fair: f64,
    /// Efficiency guarantee of GLR, `(1-κ)g(α)`.
    pub glr_eff: f64,
    /// Per-agent GLR guarantee, `(k/n)(1-κ)g(α)`.
    pub glr_agent: f64,
    /// `1/ℓ` when every group fits within the limit.
    pub il_limit: Option<f64>,
    pub benchmark_eff: f64,
    pub benchmark_fair: f64,
    pub u_star: f64,
}

impl BoundValues {
    fn clamped(&self) -> Self {
        let c = |x: f64| x.clamp(0.0, 1.0);
        BoundValues {
            gl_eff: c(self.gl_eff),
            gl_fair: c(self.gl_fair),
            iw_eff: c(self.iw_eff),
            iw_fair: c(self.iw_fair),
            glr_eff: c(self.glr_eff),
            glr_agent: c(self.glr_agent),
            il_limit: self.il_limit.map(c),
            benchmark_eff: c(self.benchmark_eff),
            benchmark_fair: c(self.benchmark_fair),
            u_star: c(self.u_star),
        }
    }
}

/// Worst-case guarantees evaluated at an instance's `κ̂` and `α̂`.
/// Nonpositive raw values mean the guarantee is vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundRecord {
    pub kappa: f64,
    pub alpha: f64,
    pub g_alpha: f64,
    pub ell: Option<usize>,
    pub raw: BoundValues,
    pub clamped: BoundValues,
}

pub fn bounds(inst: &Instance, ell: Option<usize>) -> BoundRecord {
    let stats = inst.stats();
    bounds_from(
        stats.kappa_hat,
        stats.alpha_hat,
        stats.benchmark_u_star,
        ell.and_then(|l| (inst.s_max() <= l && l <= inst.k()).then_some(l)),
        ell,
    )
}

/// Bounds for explicit parameters. `fitting_ell` is the limit when all groups
/// fit within it and `k >= ell`; the `1/ell` guarantees need both.
pub fn bounds_from(
    kappa: f64,
    alpha: f64,
    u_star: f64,
    fitting_ell: Option<usize>,
    ell: Option<usize>,
) -> BoundRecord {
    let ga = g(alpha);
    let raw = BoundValues {
        gl_eff: 1.0 - kappa,
        gl_fair: 1.0 - 2.0 * kappa,
        iw_eff: (1.0 - kappa) * ga,
        iw_fair: (1.0 - 2.0 * kappa) * ga,
        glr_eff: (1.0 - kappa) * ga,
        glr_agent: alpha * (1.0 - kappa) * ga,
        il_limit: fitting_ell.map(|l| 1.0 / l as f64),
        benchmark_eff: 1.0 - kappa,
        benchmark_fair: 1.0,
        u_star,
    };
    BoundRecord {
        kappa,
        alpha,
        g_alpha: ga,
        ell,
        raw,
        clamped: raw.clamped(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::{generate_named, NamedConstruction};

    #[test]
    fn g_properties() {
        assert_eq!(g(0.0), 1.0);
        assert!((g(0.5) - 2.0 * (1.0 - (-0.5f64).exp())).abs() < 1e-15);
        assert!((g(1e-9) - 1.0).abs() < 1e-9);
        let mut prev = 1.0;
        for i in 1..1000 {
            let x = i as f64 / 1000.0;
            let v = g(x);
            assert!(v < prev);
            assert!(v <= 1.0 && v >= 1.0 - x / 2.0);
            prev = v;
        }
    }

    #[test]
    fn hamilton() {
        let inst = generate_named(&NamedConstruction::HamiltonLike {
            n: 10_000,
            k: 21,
            couples: 4000,
        })
        .unwrap();
        let b = bounds(&inst, None);
        assert!((b.raw.gl_eff - 20.0 / 21.0).abs() < 1e-15);
        assert!((b.raw.gl_fair - 19.0 / 21.0).abs() < 1e-15);
        assert!(b.raw.gl_eff >= 0.95 && b.raw.gl_fair >= 0.90);
    }

    #[test]
    fn big_sur() {
        let b = bounds_from(14.0 / 702.0, 702.0 / 1296.0, 0.0, None, None);
        assert!((b.raw.iw_eff - 0.7567).abs() < 5e-4, "{}", b.raw.iw_eff);
        assert!((b.raw.iw_fair - 0.7413).abs() < 5e-4, "{}", b.raw.iw_fair);
        assert!((b.raw.gl_eff - 0.9801).abs() < 1e-4);
        assert!((b.raw.gl_fair - 0.9601).abs() < 1e-4);
    }

    #[test]
    fn small_alpha_recovers_gl() {
        let b = bounds_from(0.1, 1e-12, 0.0, None, None);
        assert!((b.raw.iw_eff - b.raw.gl_eff).abs() < 1e-9);
        assert!((b.raw.iw_fair - b.raw.gl_fair).abs() < 1e-9);
    }

    #[test]
    fn vacuous_bounds_are_clamped() {
        let inst = Instance::new(2, vec![4, 1]).unwrap();
        let b = bounds(&inst, Some(3));
        assert!(b.raw.gl_fair < 0.0);
        assert_eq!(b.clamped.gl_fair, 0.0);
        assert!(b.raw.u_star < 0.0);
        assert_eq!(b.raw.il_limit, None);
        assert_eq!(
            bounds(&Instance::new(2, vec![2, 1]).unwrap(), Some(2))
                .raw
                .il_limit,
            Some(0.5)
        );
        // k < ell: the pair can never be served, so no guarantee applies.
        assert_eq!(
            bounds(&Instance::new(1, vec![2, 1]).unwrap(), Some(2))
                .raw
                .il_limit,
            None
        );
    }
}
