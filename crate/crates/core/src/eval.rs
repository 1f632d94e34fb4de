//! Ranking and the IR metrics used to compare rankers: MAP, R-Precision and
//! precision at fixed cutoffs, plus a shuffled-ranking baseline.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::ser::SerializeMap;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};

pub const DEFAULT_KS: [usize; 4] = [5, 10, 20, 50];

/// Sentence indices with their scores, best first.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankedList {
    pub entries: Vec<(usize, f64)>,
}

impl RankedList {
    pub fn indices(&self) -> Vec<usize> {
        self.entries.iter().map(|&(i, _)| i).collect()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Labels reordered by this ranking.
    pub fn reorder<T: Copy>(&self, labels: &[T]) -> Vec<T> {
        self.entries.iter().map(|&(i, _)| labels[i]).collect()
    }
}

/// Orders by score descending; equal scores keep ascending index order.
pub fn rank(scores: &[f64]) -> Result<RankedList> {
    if scores.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFiniteScore(i));
    }
    let mut entries: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
    entries.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    Ok(RankedList { entries })
}

/// Mean of precision@i over the relevant positions; 0 when nothing is
/// relevant.
pub fn average_precision(ranked_labels: &[bool]) -> f64 {
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (i, &rel) in ranked_labels.iter().enumerate() {
        if rel {
            hits += 1;
            sum += hits as f64 / (i + 1) as f64;
        }
    }
    if hits == 0 {
        0.0
    } else {
        sum / hits as f64
    }
}

/// Fraction of the first `k` items that are relevant; short lists count as
/// padded with non-relevant items.
pub fn precision_at(ranked_labels: &[bool], k: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let hits = ranked_labels.iter().take(k).filter(|&&r| r).count();
    hits as f64 / k as f64
}

/// Precision at the list's own positive count; 0 when there are none.
pub fn r_precision(ranked_labels: &[bool]) -> f64 {
    let r = ranked_labels.iter().filter(|&&l| l).count();
    if r == 0 {
        0.0
    } else {
        precision_at(ranked_labels, r)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    pub map: f64,
    pub r_precision: f64,
    pub p_at: BTreeMap<usize, f64>,
}

impl Metrics {
    pub fn p(&self, k: usize) -> Option<f64> {
        self.p_at.get(&k).copied()
    }

    /// Two-line aligned table: header and values.
    pub fn to_table(&self) -> String {
        let mut header = format!("{:>8}{:>8}", "MAP", "R-Pr");
        let mut row = format!("{:>8.4}{:>8.4}", self.map, self.r_precision);
        for (k, v) in &self.p_at {
            let _ = write!(header, "{:>8}", format!("P@{k}"));
            let _ = write!(row, "{v:>8.4}");
        }
        format!("{header}\n{row}\n")
    }
}

impl Serialize for Metrics {
    /// Flat object: `map`, `r_precision`, `p_at_<k>` for each cutoff.
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(2 + self.p_at.len()))?;
        map.serialize_entry("map", &self.map)?;
        map.serialize_entry("r_precision", &self.r_precision)?;
        for (k, v) in &self.p_at {
            map.serialize_entry(&format!("p_at_{k}"), v)?;
        }
        map.end()
    }
}

/// Per-debate metrics averaged over debates. Each inner list is one debate's
/// labels in ranked order.
pub fn evaluate<L: AsRef<[bool]>>(debates: &[L], ks: &[usize]) -> Result<Metrics> {
    if debates.is_empty() || debates.iter().any(|d| d.as_ref().is_empty()) {
        return Err(Error::EmptyInput);
    }
    let n = debates.len() as f64;
    let mean = |f: &dyn Fn(&[bool]) -> f64| debates.iter().map(|d| f(d.as_ref())).sum::<f64>() / n;
    Ok(Metrics {
        map: mean(&average_precision),
        r_precision: mean(&r_precision),
        p_at: ks.iter().map(|&k| (k, mean(&|d| precision_at(d, k)))).collect(),
    })
}

/// Ranks each debate by its scores and evaluates the labels in that order.
pub fn evaluate_scores(debates: &[(Vec<f64>, Vec<bool>)], ks: &[usize]) -> Result<Metrics> {
    let ranked = debates
        .iter()
        .map(|(scores, labels)| {
            if scores.len() != labels.len() {
                return Err(Error::LayoutMismatch(format!(
                    "{} scores for {} labels",
                    scores.len(),
                    labels.len()
                )));
            }
            Ok(rank(scores)?.reorder(labels))
        })
        .collect::<Result<Vec<_>>>()?;
    evaluate(&ranked, ks)
}

/// Metrics averaged over `trials` uniform shuffles of every debate.
pub fn random_baseline<L: AsRef<[bool]>>(debates: &[L], ks: &[usize], trials: usize, seed: u64) -> Result<Metrics> {
    if trials == 0 {
        return Err(Error::InvalidHyperparameter("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut work: Vec<Vec<bool>> = debates.iter().map(|d| d.as_ref().to_vec()).collect();
    let mut total = Metrics {
        map: 0.0,
        r_precision: 0.0,
        p_at: ks.iter().map(|&k| (k, 0.0)).collect(),
    };
    for _ in 0..trials {
        for d in &mut work {
            d.shuffle(&mut rng);
        }
        let m = evaluate(&work, ks)?;
        total.map += m.map;
        total.r_precision += m.r_precision;
        for (k, v) in m.p_at {
            *total.p_at.get_mut(&k).expect("same cutoffs") += v;
        }
    }
    let t = trials as f64;
    total.map /= t;
    total.r_precision /= t;
    total.p_at.values_mut().for_each(|v| *v /= t);
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn labels(bits: &[u8]) -> Vec<bool> {
        bits.iter().map(|&b| b == 1).collect()
    }

    #[test]
    fn rank_examples() {
        assert_eq!(rank(&[0.2, 0.9, 0.5]).unwrap().indices(), [1, 2, 0]);
        assert_eq!(rank(&[0.3; 5]).unwrap().indices(), [0, 1, 2, 3, 4]);
        assert_eq!(rank(&[0.1, 0.7, 0.1, 0.7]).unwrap().indices(), [1, 3, 0, 2]);
        assert!(matches!(rank(&[]), Err(Error::EmptyInput)));
        assert!(matches!(rank(&[0.1, f64::NAN]), Err(Error::NonFiniteScore(1))));
    }

    #[test]
    fn ap_examples() {
        assert!((average_precision(&labels(&[1, 0, 1, 0])) - (1.0 + 2.0 / 3.0) / 2.0).abs() < 1e-15);
        assert_eq!(average_precision(&labels(&[1, 1, 1])), 1.0);
        assert_eq!(average_precision(&labels(&[0, 0, 0])), 0.0);
    }

    #[test]
    fn evaluate_examples() {
        let m = evaluate(&[labels(&[1, 0, 1, 0])], &DEFAULT_KS).unwrap();
        assert_eq!(m.r_precision, 0.5);
        let m = evaluate(&[labels(&[1, 1, 1])], &DEFAULT_KS).unwrap();
        assert!((m.p(5).unwrap() - 0.6).abs() < 1e-15);
        assert!((m.p(50).unwrap() - 0.06).abs() < 1e-15);
        // APs 0.5 and 1.0
        let m = evaluate(&[labels(&[0, 1]), labels(&[1, 0])], &[]).unwrap();
        assert_eq!(m.map, 0.75);
        assert!(matches!(evaluate(&[labels(&[])], &[5]), Err(Error::EmptyInput)));
    }

    #[test]
    fn zero_positive_debate_still_counts() {
        let m = evaluate(&[labels(&[0, 0]), labels(&[1, 0])], &[1]).unwrap();
        assert_eq!(m.map, 0.5);
        assert_eq!(m.r_precision, 0.5);
        assert_eq!(m.p(1), Some(0.5));
    }

    #[test]
    fn json_keys() {
        let m = evaluate(&[labels(&[1, 0, 1])], &DEFAULT_KS).unwrap();
        let v = serde_json::to_value(&m).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        for key in ["map", "r_precision", "p_at_5", "p_at_10", "p_at_20", "p_at_50"] {
            assert!(keys.contains(&key), "{key}");
        }
        assert_eq!(keys.len(), 6);
    }

    #[test]
    fn table_has_columns() {
        let m = evaluate(&[labels(&[1, 0, 1])], &DEFAULT_KS).unwrap();
        let t = m.to_table();
        let header = t.lines().next().unwrap();
        for col in ["MAP", "R-Pr", "P@5", "P@10", "P@20", "P@50"] {
            assert!(header.contains(col));
        }
    }

    #[test]
    fn baseline_degenerate() {
        let all = vec![vec![true; 7]];
        assert_eq!(random_baseline(&all, &[5], 20, 1).unwrap().map, 1.0);
        let none = vec![vec![false; 7]];
        assert_eq!(random_baseline(&none, &[5], 20, 1).unwrap().map, 0.0);
        assert!(random_baseline(&all, &[5], 0, 1).is_err());
    }

    #[test]
    fn baseline_matches_independent_monte_carlo() {
        let mut base = vec![false; 200];
        base[..30].iter_mut().for_each(|l| *l = true);
        let m = random_baseline(&[base.clone()], &[], 10_000, 5).unwrap();
        // separate oracle: shuffle via sort by random keys, direct AP definition
        use rand::Rng;
        let mut rng = ChaCha8Rng::seed_from_u64(12345);
        let mut sum = 0.0;
        let trials = 10_000;
        for _ in 0..trials {
            let mut keyed: Vec<(u64, bool)> = base.iter().map(|&l| (rng.random(), l)).collect();
            keyed.sort();
            let mut seen = 0.0;
            let mut acc = 0.0;
            for (i, (_, l)) in keyed.iter().enumerate() {
                if *l {
                    seen += 1.0;
                    acc += seen / (i + 1) as f64;
                }
            }
            sum += acc / 30.0;
        }
        let oracle = sum / trials as f64;
        assert!((m.map - oracle).abs() <= 0.01, "{} vs {}", m.map, oracle);
    }

    fn swap_improves(labels: &[bool]) -> bool {
        for i in 1..labels.len() {
            if labels[i] && !labels[i - 1] {
                let mut swapped = labels.to_vec();
                swapped.swap(i, i - 1);
                if average_precision(&swapped) <= average_precision(labels) {
                    return false;
                }
            }
        }
        true
    }

    proptest! {
        #[test]
        fn ap_ignores_trailing_negatives(l in prop::collection::vec(any::<bool>(), 1..40), pad in 0usize..20) {
            let mut padded = l.clone();
            padded.extend(std::iter::repeat_n(false, pad));
            prop_assert_eq!(average_precision(&l), average_precision(&padded));
        }

        #[test]
        fn ap_swap_monotone(l in prop::collection::vec(any::<bool>(), 2..30)) {
            prop_assert!(swap_improves(&l));
        }

        #[test]
        fn rank_invariant_under_monotone_map(s in prop::collection::vec(-5.0f64..5.0, 1..50)) {
            let mapped: Vec<f64> = s.iter().map(|x| (2.0 * x).exp() + 3.0).collect();
            prop_assert_eq!(rank(&s).unwrap().indices(), rank(&mapped).unwrap().indices());
        }

        #[test]
        fn rank_is_permutation_in_order(s in prop::collection::vec(prop::sample::select(vec![0.0, 0.25, 0.5, 1.0]), 1..60)) {
            let r = rank(&s).unwrap();
            let mut idx = r.indices();
            for w in r.entries.windows(2) {
                prop_assert!(w[0].1 > w[1].1 || (w[0].1 == w[1].1 && w[0].0 < w[1].0));
            }
            idx.sort();
            prop_assert_eq!(idx, (0..s.len()).collect::<Vec<_>>());
        }

        #[test]
        fn perfect_ranking(r in 1usize..30, neg in 0usize..30) {
            let mut l = vec![true; r];
            l.extend(vec![false; neg]);
            let m = evaluate(&[l], &DEFAULT_KS).unwrap();
            prop_assert_eq!(m.map, 1.0);
            prop_assert_eq!(m.r_precision, 1.0);
            for k in DEFAULT_KS {
                prop_assert!((m.p(k).unwrap() - r.min(k) as f64 / k as f64).abs() < 1e-15);
            }
        }

        #[test]
        fn metrics_in_unit_interval(ds in prop::collection::vec(prop::collection::vec(any::<bool>(), 1..60), 1..4)) {
            let m = evaluate(&ds, &DEFAULT_KS).unwrap();
            prop_assert!((0.0..=1.0).contains(&m.map));
            prop_assert!((0.0..=1.0).contains(&m.r_precision));
            prop_assert!(m.p_at.values().all(|v| (0.0..=1.0).contains(v)));
        }
    }
}
