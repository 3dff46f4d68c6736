use std::cmp::Ordering;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::Exp1;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum OrderLaw {
    UniformPerm,
    WeightedPerm,
    WithReplacement,
}

/// A processing order together with the law it was drawn from.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DrawOrder {
    pub elements: Vec<usize>,
    pub law: OrderLaw,
    /// `a_i * X_i` per agent id, for weighted orders.
    pub scores: Option<Vec<f64>>,
}

/// Fisher–Yates shuffle of `elements`.
pub fn sample_uniform_order<R: Rng + ?Sized>(elements: &[usize], rng: &mut R) -> DrawOrder {
    let mut out = elements.to_vec();
    out.shuffle(rng);
    DrawOrder {
        elements: out,
        law: OrderLaw::UniformPerm,
        scores: None,
    }
}

/// Uniform order built by insertion: shuffle `subset`, shuffle the rest, then
/// place the subset at a uniformly chosen set of positions.
pub fn sample_uniform_order_via_subset<R: Rng + ?Sized>(
    elements: &[usize],
    subset: &[usize],
    rng: &mut R,
) -> DrawOrder {
    let mut inside: Vec<usize> = elements
        .iter()
        .copied()
        .filter(|e| subset.contains(e))
        .collect();
    let mut outside: Vec<usize> = elements
        .iter()
        .copied()
        .filter(|e| !subset.contains(e))
        .collect();
    inside.shuffle(rng);
    outside.shuffle(rng);
    let len = elements.len();
    let mut slots = vec![false; len];
    for p in index::sample(rng, len, inside.len()) {
        slots[p] = true;
    }
    let (mut a, mut b) = (inside.into_iter(), outside.into_iter());
    let out = slots
        .into_iter()
        .map(|is_inside| if is_inside { a.next() } else { b.next() }.expect("slot counts match"))
        .collect();
    DrawOrder {
        elements: out,
        law: OrderLaw::UniformPerm,
        scores: None,
    }
}

pub fn cmp_score(a: (f64, usize), b: (f64, usize)) -> Ordering {
    a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
}

/// Order over agents `0..requests.len()` ascending in `a_i * X_i` with
/// `X_i ~ Exp(1)`; ties go to the lower index.
pub fn sample_weighted_order<R: Rng + ?Sized>(requests: &[usize], rng: &mut R) -> DrawOrder {
    let scores: Vec<f64> = requests
        .iter()
        .map(|&a| {
            let x: f64 = rng.sample(Exp1);
            a as f64 * x
        })
        .collect();
    let mut elements: Vec<usize> = (0..requests.len()).collect();
    elements.sort_by(|&i, &j| cmp_score((scores[i], i), (scores[j], j)));
    DrawOrder {
        elements,
        law: OrderLaw::WeightedPerm,
        scores: Some(scores),
    }
}

/// `len` i.i.d. uniform draws from `elements`.
pub fn sample_with_replacement<R: Rng + ?Sized>(
    elements: &[usize],
    len: usize,
    rng: &mut R,
) -> DrawOrder {
    let out = (0..len)
        .map(|_| elements[rng.random_range(0..elements.len())])
        .collect();
    DrawOrder {
        elements: out,
        law: OrderLaw::WithReplacement,
        scores: None,
    }
}

/// Probability of a full order under the weighted law:
/// `prod_t (1/a_t) / (sum of 1/a over not-yet-drawn agents)`.
pub fn weighted_order_probability(requests: &[usize], order: &[usize]) -> f64 {
    let mut rest: f64 = order.iter().map(|&i| 1.0 / requests[i] as f64).sum();
    let mut p = 1.0;
    for &i in order {
        let w = 1.0 / requests[i] as f64;
        p *= w / rest;
        rest -= w;
    }
    p
}

#[cfg(test)]
mod tests {
    use std::collections::HashMap;

    use statrs::distribution::{ChiSquared, ContinuousCDF};

    use super::*;
    use crate::rng::stream;

    fn chi_square_p(
        counts: &HashMap<Vec<usize>, u64>,
        expected: &HashMap<Vec<usize>, f64>,
        total: u64,
    ) -> f64 {
        let stat: f64 = expected
            .iter()
            .map(|(key, p)| {
                let e = p * total as f64;
                let o = *counts.get(key).unwrap_or(&0) as f64;
                (o - e).powi(2) / e
            })
            .sum();
        let dof = (expected.len() - 1) as f64;
        1.0 - ChiSquared::new(dof).unwrap().cdf(stat)
    }

    fn perms3() -> Vec<Vec<usize>> {
        vec![
            vec![0, 1, 2],
            vec![0, 2, 1],
            vec![1, 0, 2],
            vec![1, 2, 0],
            vec![2, 0, 1],
            vec![2, 1, 0],
        ]
    }

    fn uniform3() -> HashMap<Vec<usize>, f64> {
        perms3().into_iter().map(|p| (p, 1.0 / 6.0)).collect()
    }

    #[test]
    fn uniform_order_passes_chi_square() {
        let mut rng = stream(11);
        let mut counts = HashMap::new();
        for _ in 0..60_000 {
            *counts
                .entry(sample_uniform_order(&[0, 1, 2], &mut rng).elements)
                .or_insert(0) += 1;
        }
        assert!(chi_square_p(&counts, &uniform3(), 60_000) > 1e-3);
    }

    #[test]
    fn insertion_path_passes_chi_square() {
        for subset in [vec![0, 1, 2], vec![1], vec![0, 2], vec![]] {
            let mut rng = stream(12);
            let mut counts = HashMap::new();
            for _ in 0..60_000 {
                let o = sample_uniform_order_via_subset(&[0, 1, 2], &subset, &mut rng);
                *counts.entry(o.elements).or_insert(0) += 1;
            }
            assert!(
                chi_square_p(&counts, &uniform3(), 60_000) > 1e-3,
                "subset {subset:?}"
            );
        }
    }

    #[test]
    fn singleton_order() {
        let mut rng = stream(1);
        assert_eq!(sample_uniform_order(&[4], &mut rng).elements, vec![4]);
        assert_eq!(sample_weighted_order(&[3], &mut rng).elements, vec![0]);
    }

    #[test]
    fn weighted_order_law() {
        assert!((weighted_order_probability(&[1, 2], &[0, 1]) - 2.0 / 3.0).abs() < 1e-15);
        let total: f64 = perms3()
            .iter()
            .map(|p| weighted_order_probability(&[1, 2, 2], p))
            .sum();
        assert!((total - 1.0).abs() < 1e-12);

        let mut rng = stream(13);
        let draws = 90_000u64;
        let mut first = [0u64; 3];
        let mut counts = HashMap::new();
        for _ in 0..draws {
            let o = sample_weighted_order(&[1, 2, 2], &mut rng);
            first[o.elements[0]] += 1;
            *counts.entry(o.elements).or_insert(0) += 1;
        }
        for (i, p) in [0.5, 0.25, 0.25].into_iter().enumerate() {
            let se = (p * (1.0 - p) / draws as f64).sqrt();
            assert!(
                (first[i] as f64 / draws as f64 - p).abs() <= 3.0 * se,
                "agent {i}"
            );
        }
        let expected = perms3()
            .into_iter()
            .map(|p| {
                let q = weighted_order_probability(&[1, 2, 2], &p);
                (p, q)
            })
            .collect();
        assert!(chi_square_p(&counts, &expected, draws) > 1e-3);
    }

    #[test]
    fn equal_requests_give_uniform_order() {
        let mut rng = stream(14);
        let mut counts = HashMap::new();
        for _ in 0..60_000 {
            *counts
                .entry(sample_weighted_order(&[3, 3, 3], &mut rng).elements)
                .or_insert(0) += 1;
        }
        assert!(chi_square_p(&counts, &uniform3(), 60_000) > 1e-3);
    }

    #[test]
    fn weighted_scores_are_sorted() {
        let mut rng = stream(15);
        let o = sample_weighted_order(&[1, 4, 2, 3, 1], &mut rng);
        let s = o.scores.unwrap();
        assert!(o.elements.windows(2).all(|w| s[w[0]] <= s[w[1]]));
    }
}
