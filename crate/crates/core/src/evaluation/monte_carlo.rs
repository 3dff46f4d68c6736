use rayon::prelude::*;
use serde::Serialize;

use super::exact::{Method, UtilityVector};
use super::metrics::EnvyMatrix;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::mechanisms::{ActionProfile, Mechanism, MechanismKind, Scratch};
use crate::rng::replica_stream;

/// Replicas per work unit. Fixed so the partition of work never depends on
/// the number of workers.
const BLOCK: u64 = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct McConfig {
    pub replicas: u64,
    pub seed: u64,
    pub workers: usize,
    /// Also estimate the class-level envy matrix.
    pub envy: bool,
}

impl McConfig {
    pub fn new(replicas: u64, seed: u64) -> Self {
        McConfig {
            replicas,
            seed,
            workers: 1,
            envy: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Estimate {
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassStat {
    pub size: usize,
    pub count: usize,
    pub mean: f64,
    pub se: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McResult {
    pub utility: UtilityVector,
    pub classes: Vec<ClassStat>,
    pub utilization: Estimate,
    pub envy: Option<EnvyMatrix>,
}

/// Integer tallies; merging is exact, so the result is independent of how
/// blocks are scheduled.
#[derive(Debug, Clone)]
struct Tally {
    success: Vec<u64>,
    class_sum: Vec<u64>,
    class_sq: Vec<u128>,
    agents: u64,
    agents_sq: u128,
    envy_sum: Vec<i128>,
    envy_sq: Vec<u128>,
}

impl Tally {
    fn new(m: usize, classes: usize, envy: bool) -> Self {
        let e = if envy { classes * classes } else { 0 };
        Tally {
            success: vec![0; m],
            class_sum: vec![0; classes],
            class_sq: vec![0; classes],
            agents: 0,
            agents_sq: 0,
            envy_sum: vec![0; e],
            envy_sq: vec![0; e],
        }
    }

    fn merge(mut self, other: Tally) -> Tally {
        fn add<T: std::ops::AddAssign + Copy>(a: &mut [T], b: &[T]) {
            for (x, y) in a.iter_mut().zip(b) {
                *x += *y;
            }
        }
        add(&mut self.success, &other.success);
        add(&mut self.class_sum, &other.class_sum);
        add(&mut self.class_sq, &other.class_sq);
        add(&mut self.envy_sum, &other.envy_sum);
        add(&mut self.envy_sq, &other.envy_sq);
        self.agents += other.agents;
        self.agents_sq += other.agents_sq;
        self
    }
}

struct Layout {
    sizes: Vec<usize>,
    class_of: Vec<usize>,
    class_size: Vec<usize>,
    class_count: Vec<usize>,
}

impl Layout {
    fn new(inst: &Instance) -> Self {
        let classes = inst.size_classes();
        let class_size: Vec<usize> = classes.iter().map(|&(s, _)| s).collect();
        let class_count: Vec<usize> = classes.iter().map(|&(_, c)| c).collect();
        let class_of = inst
            .group_sizes()
            .iter()
            .map(|s| class_size.binary_search(s).expect("size has a class"))
            .collect();
        Layout {
            sizes: inst.group_sizes().to_vec(),
            class_of,
            class_size,
            class_count,
        }
    }
}

fn run_block(mech: &Mechanism, layout: &Layout, cfg: &McConfig, start: u64, end: u64) -> Tally {
    let j = layout.class_size.len();
    let mut t = Tally::new(layout.sizes.len(), j, cfg.envy);
    let mut scratch = Scratch::default();
    let mut per_class = vec![0u64; j];
    let mut reach = vec![0u64; j * j];
    for r in start..end {
        let mut rng = replica_stream(cfg.seed, r);
        mech.sample_tickets(&mut rng, &mut scratch);
        per_class.fill(0);
        let mut agents = 0u64;
        for &g in &scratch.touched {
            if scratch.tickets[g] >= layout.sizes[g] {
                t.success[g] += 1;
                per_class[layout.class_of[g]] += 1;
                agents += layout.sizes[g] as u64;
            }
        }
        for (c, &count) in per_class.iter().enumerate() {
            t.class_sum[c] += count;
            t.class_sq[c] += (count as u128).pow(2);
        }
        t.agents += agents;
        t.agents_sq += (agents as u128).pow(2);
        if cfg.envy {
            reach.fill(0);
            for &g in &scratch.touched {
                let n = scratch.tickets[g];
                for c in 0..j {
                    if n >= layout.class_size[c] {
                        reach[c * j + layout.class_of[g]] += 1;
                    }
                }
            }
            // Scaled per-replica envy of class c toward class c':
            // reach(c, c') m_c - successes(c) m_c'.
            for c in 0..j {
                for c2 in 0..j {
                    let d = reach[c * j + c2] as i128 * layout.class_count[c] as i128
                        - per_class[c] as i128 * layout.class_count[c2] as i128;
                    t.envy_sum[c * j + c2] += d;
                    t.envy_sq[c * j + c2] += (d * d) as u128;
                }
            }
        }
    }
    t
}

fn mean_se(sum: f64, sq: f64, r: f64) -> (f64, f64) {
    let mean = sum / r;
    if r < 2.0 {
        return (mean, 0.0);
    }
    let var = ((sq - sum * sum / r) / (r - 1.0)).max(0.0);
    (mean, (var / r).sqrt())
}

/// Averages `cfg.replicas` independent outcomes. Replica `r` draws from
/// `replica_stream(cfg.seed, r)`; the output does not depend on `cfg.workers`.
pub fn monte_carlo(
    kind: MechanismKind,
    inst: &Instance,
    profile: &ActionProfile,
    cfg: &McConfig,
) -> Result<McResult> {
    if cfg.replicas == 0 {
        return Err(Error::Nonpositive("replicas"));
    }
    let mech = Mechanism::new(kind, inst, profile)?;
    let layout = Layout::new(inst);
    let blocks: Vec<(u64, u64)> = (0..cfg.replicas.div_ceil(BLOCK))
        .map(|b| (b * BLOCK, ((b + 1) * BLOCK).min(cfg.replicas)))
        .collect();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers.max(1))
        .build()
        .map_err(|e| Error::Invalid(format!("worker pool: {e}")))?;
    let tallies: Vec<Tally> = pool.install(|| {
        blocks
            .par_iter()
            .map(|&(s, e)| run_block(&mech, &layout, cfg, s, e))
            .collect()
    });
    let j = layout.class_size.len();
    let total = tallies
        .into_iter()
        .fold(Tally::new(inst.m(), j, cfg.envy), Tally::merge);

    let r = cfg.replicas as f64;
    let u: Vec<f64> = total.success.iter().map(|&c| c as f64 / r).collect();
    let se = u.iter().map(|&p| (p * (1.0 - p) / r).sqrt()).collect();
    let classes = (0..j)
        .map(|c| {
            let cnt = layout.class_count[c] as f64;
            let (mean, se) = mean_se(
                total.class_sum[c] as f64 / cnt,
                total.class_sq[c] as f64 / (cnt * cnt),
                r,
            );
            ClassStat {
                size: layout.class_size[c],
                count: layout.class_count[c],
                mean,
                se,
            }
        })
        .collect::<Vec<_>>();
    let k = inst.k() as f64;
    let (umean, use_) = mean_se(total.agents as f64 / k, total.agents_sq as f64 / (k * k), r);
    let envy = cfg.envy.then(|| {
        let mut entries = vec![vec![0.0; j]; j];
        let mut diff = vec![vec![(0.0, 0.0); j]; j];
        for c in 0..j {
            for c2 in 0..j {
                let scale = (layout.class_count[c] * layout.class_count[c2]) as f64;
                let (d, dse) = mean_se(
                    total.envy_sum[c * j + c2] as f64 / scale,
                    total.envy_sq[c * j + c2] as f64 / (scale * scale),
                    r,
                );
                entries[c][c2] = classes[c].mean + d;
                diff[c][c2] = (d, dse);
            }
        }
        EnvyMatrix::from_differences(layout.class_size.clone(), entries, &diff)
    });
    Ok(McResult {
        utility: UtilityVector {
            u,
            method: Method::MonteCarlo,
            se: Some(se),
            replicas: Some(cfg.replicas),
            seed: Some(cfg.seed),
        },
        classes,
        utilization: Estimate {
            mean: umean,
            se: use_,
        },
        envy,
    })
}
