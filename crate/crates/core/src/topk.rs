//! Top-k robustness variants: plain, relaxed (any rank up to K) and affinity
//! (expert-supplied class sets within which misclassification is tolerated).
//!
//! All three variants compare logits strictly (`y_i > y_j`); the affinity
//! clause uses the same comparator as the other two, so the tie-free
//! set-equality reading applies uniformly. Ties at a rank boundary are
//! rejected outright rather than resolved.

use std::collections::BTreeSet;

use crate::error::{Error, Result};
use crate::formula::{Atom, Formula, LinearExpr};

/// Seed data for the top-k family.
#[derive(Debug, Clone)]
pub struct TopKContext {
    pub seed_logits: Vec<f64>,
    /// Largest rank the property quantifies over.
    pub k_max: usize,
    pub affinity_sets: Option<Vec<BTreeSet<usize>>>,
}

impl TopKContext {
    /// Validates ranks, affinity-set membership and tie-freeness of every
    /// rank boundary up to `k_max`.
    pub fn new(
        seed_logits: Vec<f64>,
        k_max: usize,
        affinity_sets: Option<Vec<BTreeSet<usize>>>,
    ) -> Result<Self> {
        let m = seed_logits.len();
        if m < 2 {
            return Err(Error::ClassCount(m));
        }
        if seed_logits.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteLogits);
        }
        if k_max == 0 || k_max >= m {
            return Err(Error::TopKRange {
                k: k_max,
                max: m - 1,
            });
        }
        if let Some(sets) = &affinity_sets {
            for set in sets {
                if let Some(&class) = set.iter().find(|&&c| c >= m) {
                    return Err(Error::AffinityClassRange { class, m });
                }
            }
        }
        let ctx = TopKContext {
            seed_logits,
            k_max,
            affinity_sets,
        };
        for k in 1..=k_max {
            topk_set(&ctx.seed_logits, k)?;
        }
        Ok(ctx)
    }

    pub fn m(&self) -> usize {
        self.seed_logits.len()
    }
}

/// Indices of the `k` largest logits.
///
/// A tie across the rank-k boundary is rejected: the set would not have
/// exactly `k` members, and the set-equality reading of the property needs
/// equal cardinalities on both sides.
pub fn topk_set(logits: &[f64], k: usize) -> Result<BTreeSet<usize>> {
    let m = logits.len();
    if k == 0 || k > m {
        return Err(Error::TopKRange { k, max: m });
    }
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| logits[b].partial_cmp(&logits[a]).unwrap());
    if k < m && logits[order[k - 1]] == logits[order[k]] {
        return Err(Error::TopKTie { k });
    }
    Ok(order[..k].iter().copied().collect())
}

/// One disjunctive clause: some outsider strictly beats some member of the
/// seed top-k set. Exactly `(m - k) * k` strict atoms `y_j - y_i < 0`
/// (reading: `y_i > y_j` for `i` outside, `j` inside).
fn topk_clause(ctx: &TopKContext, inside: &BTreeSet<usize>) -> Formula {
    let m = ctx.m();
    let atoms = (0..m)
        .filter(|i| !inside.contains(i))
        .flat_map(|i| {
            inside
                .iter()
                .map(move |&j| Formula::Atom(Atom::lt(LinearExpr::margin(j, i, 0.0))))
        })
        .collect();
    Formula::or(atoms)
}

/// Negated top-k post-condition for a single rank `k`.
pub fn build_topk_negation(ctx: &TopKContext, k: usize) -> Result<Formula> {
    if k == 0 || k > ctx.k_max {
        return Err(Error::TopKRange { k, max: ctx.k_max });
    }
    let inside = topk_set(&ctx.seed_logits, k)?;
    Ok(topk_clause(ctx, &inside))
}

/// Negated top-k-relaxed post-condition: the top-k set changes at every rank
/// up to `k_max`. CNF with one clause per rank.
pub fn build_topk_relaxed_negation(ctx: &TopKContext) -> Result<Formula> {
    let clauses = (1..=ctx.k_max)
        .map(|k| build_topk_negation(ctx, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(Formula::and(clauses))
}

/// The `(k, S)` pairs whose seed top-k set is contained in the affinity set
/// `S`, in rank order. Pairs whose containment fails contribute a vacuously
/// satisfied clause to the negation and are dropped.
pub fn filter_affinity_pairs(ctx: &TopKContext) -> Result<Vec<(usize, BTreeSet<usize>)>> {
    let sets = ctx
        .affinity_sets
        .as_ref()
        .ok_or(Error::MissingAffinitySets)?;
    let mut pairs = Vec::new();
    for k in 1..=ctx.k_max {
        let inside = topk_set(&ctx.seed_logits, k)?;
        for set in sets {
            if inside.is_subset(set) {
                pairs.push((k, set.clone()));
            }
        }
    }
    Ok(pairs)
}

/// Negated top-k-affinity post-condition over the filtered pairs.
#[derive(Debug, Clone, PartialEq)]
pub enum AffinityNegation {
    Formula(Formula),
    /// No `(k, S)` pair has its seed top-k set inside `S`; the negated
    /// post-condition is vacuously true (even the unperturbed seed violates
    /// the property).
    TriviallyViolated,
}

pub fn build_affinity_negation(ctx: &TopKContext) -> Result<AffinityNegation> {
    let pairs = filter_affinity_pairs(ctx)?;
    if pairs.is_empty() {
        return Ok(AffinityNegation::TriviallyViolated);
    }
    // The clause depends only on the rank, so duplicate ranks from several
    // containing sets collapse to one clause.
    let mut ranks: Vec<usize> = pairs.iter().map(|(k, _)| *k).collect();
    ranks.dedup();
    let clauses = ranks
        .into_iter()
        .map(|k| {
            let inside = topk_set(&ctx.seed_logits, k)?;
            Ok(topk_clause(ctx, &inside))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(AffinityNegation::Formula(Formula::and(clauses)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::formula::{Shape, Strictness};
    use crate::sampling::random_point;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(items: &[usize]) -> BTreeSet<usize> {
        items.iter().copied().collect()
    }

    #[test]
    fn topk_set_basics() {
        let logits = [3.0, 1.0, 2.0, 0.5];
        assert_eq!(topk_set(&logits, 2).unwrap(), set(&[0, 2]));
        assert_eq!(topk_set(&logits, 1).unwrap(), set(&[0]));
        assert!(matches!(
            topk_set(&[1.0, 1.0, 0.0], 1),
            Err(Error::TopKTie { k: 1 })
        ));
    }

    #[test]
    fn topk_negation_counts_and_instances() {
        let ctx = TopKContext::new(vec![3.0, 1.0, 2.0, 0.5], 2, None).unwrap();
        let f = build_topk_negation(&ctx, 2).unwrap();
        // (m - k) * k = 4 strict atoms: y1>y0, y1>y2, y3>y0, y3>y2
        assert_eq!(f.atoms().len(), 4);
        assert_eq!(f.classify().shape, Shape::PureDisj);
        assert_eq!(f.classify().strictness, Strictness::Strict);
        assert!(f.eval(&[0.0, 5.0, 0.0, 0.0]).unwrap());
        // ranking preserved: negation unsatisfied
        assert!(!f.eval(&[30.0, 1.0, 20.0, 0.0]).unwrap());
    }

    #[test]
    fn topk_negation_matches_set_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &m in &[4usize, 6] {
            for k in 1..=3usize.min(m - 1) {
                let mut checked = 0;
                while checked < 2000 {
                    let seed = random_point(&mut rng, m, -5.0, 5.0);
                    let probe = random_point(&mut rng, m, -5.0, 5.0);
                    let (Ok(a), Ok(b)) = (topk_set(&seed, k), topk_set(&probe, k)) else {
                        continue;
                    };
                    let ctx = TopKContext::new(seed.clone(), k, None).unwrap();
                    let f = build_topk_negation(&ctx, k).unwrap();
                    assert_eq!(f.eval(&probe).unwrap(), a != b);
                    checked += 1;
                }
            }
        }
    }

    #[test]
    fn relaxed_combines_ranks() {
        let ctx = TopKContext::new(vec![3.0, 1.0, 2.0, 0.5], 2, None).unwrap();
        let f = build_topk_relaxed_negation(&ctx).unwrap();
        // k=1 clause has (4-1)*1 = 3 atoms, k=2 clause has (4-2)*2 = 4
        assert_eq!(f.atoms().len(), 7);
        assert_eq!(f.classify().shape, Shape::Cnf);

        // K = 1 degenerates to the plain top-k negation
        let ctx1 = TopKContext::new(vec![3.0, 1.0, 2.0, 0.5], 1, None).unwrap();
        assert_eq!(
            build_topk_relaxed_negation(&ctx1).unwrap(),
            build_topk_negation(&ctx1, 1).unwrap()
        );
    }

    #[test]
    fn relaxed_matches_per_rank_set_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let seed = vec![2.5, -1.0, 1.5, 0.25];
        let ctx = TopKContext::new(seed.clone(), 3, None).unwrap();
        let f = build_topk_relaxed_negation(&ctx).unwrap();
        let mut checked = 0;
        while checked < 5000 {
            let probe = random_point(&mut rng, 4, -4.0, 4.0);
            let sets: Option<Vec<_>> = (1..=3).map(|k| topk_set(&probe, k).ok()).collect();
            let Some(sets) = sets else { continue };
            let want = (1..=3).all(|k| topk_set(&seed, k).unwrap() != sets[k - 1]);
            assert_eq!(f.eval(&probe).unwrap(), want);
            checked += 1;
        }
    }

    #[test]
    fn affinity_filtering() {
        // seed top-1 is {0}; only {0,8} contains it
        let mut logits = vec![0.0; 10];
        logits[0] = 5.0;
        logits[8] = 4.0;
        let sets = vec![set(&[0, 8]), set(&[4, 9])];
        let ctx = TopKContext::new(logits.clone(), 1, Some(sets.clone())).unwrap();
        assert_eq!(
            filter_affinity_pairs(&ctx).unwrap(),
            vec![(1, set(&[0, 8]))]
        );

        // with K = 2 the top-2 set {0,8} matches as well
        let ctx = TopKContext::new(logits, 2, Some(sets)).unwrap();
        assert_eq!(
            filter_affinity_pairs(&ctx).unwrap(),
            vec![(1, set(&[0, 8])), (2, set(&[0, 8]))]
        );
    }

    #[test]
    fn affinity_empty_filter_is_trivially_violated() {
        let mut logits = vec![0.0; 10];
        logits[2] = 5.0;
        let sets = vec![set(&[0, 8]), set(&[4, 9])];
        let ctx = TopKContext::new(logits, 1, Some(sets)).unwrap();
        assert_eq!(
            build_affinity_negation(&ctx).unwrap(),
            AffinityNegation::TriviallyViolated
        );
    }

    #[test]
    fn affinity_single_pair_clause() {
        let ctx = TopKContext::new(vec![3.0, 1.0, 2.0, 0.5], 2, Some(vec![set(&[0, 2])])).unwrap();
        match build_affinity_negation(&ctx).unwrap() {
            AffinityNegation::Formula(f) => {
                // both {0} (k=1) and {0,2} (k=2) sit inside {0,2}: 3 + 4 atoms
                assert_eq!(f.atoms().len(), 7);
            }
            other => panic!("expected formula, got {other:?}"),
        }
    }

    #[test]
    fn affinity_matches_set_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let seed = vec![2.5, -1.0, 1.5, 0.25];
        let sets = vec![set(&[0, 2]), set(&[1, 3])];
        let ctx = TopKContext::new(seed.clone(), 2, Some(sets)).unwrap();
        let pairs = filter_affinity_pairs(&ctx).unwrap();
        assert_eq!(pairs.len(), 2);
        let f = match build_affinity_negation(&ctx).unwrap() {
            AffinityNegation::Formula(f) => f,
            other => panic!("expected formula, got {other:?}"),
        };
        let mut checked = 0;
        while checked < 5000 {
            let probe = random_point(&mut rng, 4, -4.0, 4.0);
            let ok: Option<Vec<_>> = pairs
                .iter()
                .map(|(k, _)| topk_set(&probe, *k).ok())
                .collect();
            let Some(probe_sets) = ok else { continue };
            let want = pairs
                .iter()
                .zip(&probe_sets)
                .all(|((k, _), ps)| topk_set(&seed, *k).unwrap() != *ps);
            assert_eq!(f.eval(&probe).unwrap(), want);
            checked += 1;
        }
    }

    #[test]
    fn context_rejects_bad_input() {
        assert!(TopKContext::new(vec![1.0], 1, None).is_err());
        assert!(TopKContext::new(vec![1.0, 2.0], 2, None).is_err());
        assert!(TopKContext::new(vec![1.0, 1.0, 0.0], 1, None).is_err());
        assert!(TopKContext::new(vec![1.0, 2.0, 3.0], 1, Some(vec![set(&[5])])).is_err());
    }
}
