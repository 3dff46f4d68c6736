use serde::Serialize;

use crate::instance::Instance;

/// `(sum_G |G| u_G) / k`.
pub fn utilization(u: &[f64], inst: &Instance) -> f64 {
    u.iter()
        .zip(inst.group_sizes())
        .map(|(&x, &s)| x * s as f64)
        .sum::<f64>()
        / inst.k() as f64
}

/// `min u / max u`; an all-zero vector counts as perfectly fair.
pub fn fairness_ratio(u: &[f64]) -> f64 {
    let max = u.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = u.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= 0.0 {
        1.0
    } else {
        (min / max).max(0.0)
    }
}

/// `(size, count, mean utility)` per group-size class, ascending in size.
pub fn class_means(u: &[f64], inst: &Instance) -> Vec<(usize, usize, f64)> {
    inst.size_classes()
        .into_iter()
        .map(|(s, c)| {
            let total: f64 = (0..inst.m())
                .filter(|&g| inst.group_size(g) == s)
                .map(|g| u[g])
                .sum();
            (s, c, total / c as f64)
        })
        .collect()
}

/// `entries[a][b]` is the chance that row `a`'s size requirement would be met
/// by column `b`'s ticket count. Rows and columns are groups or size classes.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvyMatrix {
    /// Group size of each row and column.
    pub sizes: Vec<usize>,
    pub entries: Vec<Vec<f64>>,
    /// `max_{a,b} entries[a][b] - entries[a][a]`.
    pub margin: f64,
    pub margin_se: f64,
}

impl EnvyMatrix {
    pub(crate) fn from_differences(
        sizes: Vec<usize>,
        entries: Vec<Vec<f64>>,
        diff: &[Vec<(f64, f64)>],
    ) -> Self {
        let mut margin = f64::NEG_INFINITY;
        let mut margin_se = 0.0;
        for row in diff {
            for &(d, se) in row {
                if d > margin {
                    margin = d;
                    margin_se = se;
                }
            }
        }
        EnvyMatrix {
            sizes,
            entries,
            margin,
            margin_se,
        }
    }
}

/// Exact group-level envy matrix of a finite lottery given as
/// `(tickets per group, probability)` outcomes.
pub fn envy_from_outcomes(sizes: &[usize], outcomes: &[(Vec<usize>, f64)]) -> EnvyMatrix {
    let m = sizes.len();
    let mut entries = vec![vec![0.0; m]; m];
    for (tickets, p) in outcomes {
        for a in 0..m {
            for b in 0..m {
                if tickets[b] >= sizes[a] {
                    entries[a][b] += p;
                }
            }
        }
    }
    let diff: Vec<Vec<(f64, f64)>> = (0..m)
        .map(|a| {
            (0..m)
                .map(|b| (entries[a][b] - entries[a][a], 0.0))
                .collect()
        })
        .collect();
    EnvyMatrix::from_differences(sizes.to_vec(), entries, &diff)
}
