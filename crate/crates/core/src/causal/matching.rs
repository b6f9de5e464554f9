//! Greedy 1:1 caliper matching on the logit propensity scale, and the
//! matched-pair treatment-effect estimate.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::PropensityScores;
use crate::error::{Error, Result};

/// Matched treated/control pairs under a logit-scale caliper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// (treated_id, control_id), in processing order.
    pub pairs: Vec<(u64, u64)>,
    /// Maximum |logit difference| admitted, in logit units.
    pub caliper_width: f64,
    pub unmatched_treated: usize,
    /// Human-readable description of the deterministic processing order.
    pub order_rule: String,
}

/// Average effect on the treated over matched pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectEstimate {
    pub att: f64,
    pub n_pairs: usize,
    /// Filled by the harness: which analysis arm produced the estimate.
    pub arm_tag: Option<String>,
}

fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Greedily pair each treated sample with the nearest unused control on
/// the logit scale, within `caliper_multiplier` times the standard
/// deviation of all logit scores.
///
/// Treated samples are processed in descending score order (ties by
/// ascending id); distance ties between candidate controls go to the
/// lower control id. Controls are used at most once.
pub fn caliper_match(
    scores: &PropensityScores,
    treatment: &BTreeMap<u64, bool>,
    caliper_multiplier: f64,
) -> Result<MatchResult> {
    let mut treated: Vec<(u64, f64)> = Vec::new();
    let mut controls: Vec<(u64, f64)> = Vec::new();
    for (id, score) in scores.iter() {
        let &is_treated = treatment
            .get(&id)
            .ok_or_else(|| Error::DimensionMismatch(format!("no treatment entry for id {id}")))?;
        if is_treated {
            treated.push((id, score));
        } else {
            controls.push((id, score));
        }
    }
    if treated.is_empty() || controls.is_empty() {
        return Err(Error::Degenerate(
            "matching needs at least one treated and one control sample".into(),
        ));
    }

    // Caliper width from the spread of all logit scores.
    let logits: Vec<f64> = scores.iter().map(|(_, s)| logit(s)).collect();
    let n = logits.len() as f64;
    let mean = logits.iter().sum::<f64>() / n;
    let var = logits.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (n - 1.0).max(1.0);
    if var == 0.0 {
        return Err(Error::Degenerate(
            "all logit scores are identical; the caliper would be empty".into(),
        ));
    }
    let caliper_width = caliper_multiplier * var.sqrt();

    // Treated in descending score order, ids ascending on ties.
    treated.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    // Controls sorted by (logit, id); removals maintain a linked list of
    // the still-unused entries so neighbor lookups stay cheap.
    let mut ctl: Vec<(u64, f64)> = controls.iter().map(|&(id, s)| (id, logit(s))).collect();
    ctl.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap().then(a.0.cmp(&b.0)));
    let nc = ctl.len();
    let mut alive = vec![true; nc];
    let mut prev: Vec<isize> = (0..nc).map(|i| i as isize - 1).collect();
    let mut next: Vec<usize> = (1..=nc).collect();
    let mut tail: isize = nc as isize - 1;
    let mut alive_count = nc;

    let mut pairs = Vec::new();
    let mut unmatched = 0usize;
    for &(tid, tscore) in &treated {
        if alive_count == 0 {
            unmatched += 1;
            continue;
        }
        let tl = logit(tscore);
        // Insertion point in the static sorted array.
        let mut lo = 0usize;
        let mut hi = nc;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if ctl[mid].1 < tl {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        // Nearest unused control at or after the insertion point, then
        // its unused predecessor.
        let right = {
            let mut i = lo;
            while i < nc && !alive[i] {
                i += 1;
            }
            (i < nc).then_some(i)
        };
        let left = match right {
            Some(r) => {
                let p = prev[r];
                (p >= 0).then_some(p as usize)
            }
            None => (tail >= 0).then_some(tail as usize),
        };
        // Controls sharing one logit are sorted by id; the linked list
        // hands back the last unused member of the left group, but ties
        // on distance must go to the lowest id, i.e. the group's first
        // unused member.
        let left = left.map(|l| {
            let v = ctl[l].1;
            let mut start = 0usize;
            let mut end = l;
            while start < end {
                let mid = (start + end) / 2;
                if ctl[mid].1 < v {
                    start = mid + 1;
                } else {
                    end = mid;
                }
            }
            let mut i = start;
            while i < l {
                if alive[i] {
                    break;
                }
                i += 1;
            }
            i
        });
        let best = match (left, right) {
            (Some(l), Some(r)) => {
                let dl = (tl - ctl[l].1).abs();
                let dr = (ctl[r].1 - tl).abs();
                if dl < dr {
                    Some(l)
                } else if dr < dl {
                    Some(r)
                } else if ctl[l].0 <= ctl[r].0 {
                    Some(l)
                } else {
                    Some(r)
                }
            }
            (Some(l), None) => Some(l),
            (None, Some(r)) => Some(r),
            (None, None) => None,
        };
        match best {
            Some(idx) if (tl - ctl[idx].1).abs() <= caliper_width => {
                pairs.push((tid, ctl[idx].0));
                alive[idx] = false;
                alive_count -= 1;
                let p = prev[idx];
                let nx = next[idx];
                if p >= 0 {
                    next[p as usize] = nx;
                }
                if nx < nc {
                    prev[nx] = p;
                } else {
                    tail = p;
                }
            }
            _ => unmatched += 1,
        }
    }

    Ok(MatchResult {
        pairs,
        caliper_width,
        unmatched_treated: unmatched,
        order_rule: "treated by descending score (id asc on ties); nearest |logit diff| control (control id asc on ties)".into(),
    })
}

/// Mean outcome difference over matched pairs: treated minus control.
pub fn estimate_att(matches: &MatchResult, outcomes: &BTreeMap<u64, f64>) -> Result<EffectEstimate> {
    if matches.pairs.is_empty() {
        return Err(Error::NoMatches);
    }
    let mut total = 0.0;
    for &(t, c) in &matches.pairs {
        let yt = outcomes
            .get(&t)
            .ok_or_else(|| Error::DimensionMismatch(format!("no outcome for treated id {t}")))?;
        let yc = outcomes
            .get(&c)
            .ok_or_else(|| Error::DimensionMismatch(format!("no outcome for control id {c}")))?;
        total += yt - yc;
    }
    Ok(EffectEstimate {
        att: total / matches.pairs.len() as f64,
        n_pairs: matches.pairs.len(),
        arm_tag: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn scores(entries: &[(u64, f64)]) -> PropensityScores {
        PropensityScores::new(entries.iter().copied().collect()).unwrap()
    }

    fn assignments(treated: &[u64], control: &[u64]) -> BTreeMap<u64, bool> {
        treated
            .iter()
            .map(|&id| (id, true))
            .chain(control.iter().map(|&id| (id, false)))
            .collect()
    }

    #[test]
    fn nearest_control_wins() {
        let s = scores(&[(0, 0.50), (1, 0.49), (2, 0.30)]);
        let z = assignments(&[0], &[1, 2]);
        let result = caliper_match(&s, &z, 100.0).unwrap();
        assert_eq!(result.pairs, vec![(0, 1)]);
        assert_eq!(result.unmatched_treated, 0);
    }

    #[test]
    fn narrow_caliper_excludes_far_pairs() {
        let s = scores(&[(0, 0.90), (1, 0.10)]);
        let z = assignments(&[0], &[1]);
        let result = caliper_match(&s, &z, 0.1).unwrap();
        assert!(result.pairs.is_empty());
        assert_eq!(result.unmatched_treated, 1);
    }

    #[test]
    fn greedy_order_gives_the_shared_control_to_the_higher_score() {
        let s = scores(&[(10, 0.51), (11, 0.50), (20, 0.50)]);
        let z = assignments(&[10, 11], &[20]);
        let result = caliper_match(&s, &z, 100.0).unwrap();
        assert_eq!(result.pairs, vec![(10, 20)]);
        assert_eq!(result.unmatched_treated, 1);
    }

    #[test]
    fn caliper_bound_holds_for_every_pair() {
        let s = scores(&[
            (0, 0.8),
            (1, 0.6),
            (2, 0.55),
            (3, 0.52),
            (4, 0.41),
            (5, 0.27),
            (6, 0.12),
        ]);
        let z = assignments(&[0, 1, 2], &[3, 4, 5, 6]);
        let result = caliper_match(&s, &z, 0.5).unwrap();
        for &(t, c) in &result.pairs {
            let lt = (s.get(t).unwrap() / (1.0 - s.get(t).unwrap())).ln();
            let lc = (s.get(c).unwrap() / (1.0 - s.get(c).unwrap())).ln();
            assert!((lt - lc).abs() <= result.caliper_width);
        }
        // 1:1 without replacement.
        let mut used: Vec<u64> = result.pairs.iter().flat_map(|&(t, c)| [t, c]).collect();
        used.sort_unstable();
        used.dedup();
        assert_eq!(used.len(), result.pairs.len() * 2);
    }

    #[test]
    fn equal_logit_controls_match_by_ascending_id() {
        // Two controls share one score on the treated's left; the lower
        // id wins the tie.
        let s = scores(&[(0, 0.60), (7, 0.50), (9, 0.50), (3, 0.10)]);
        let z = assignments(&[0], &[7, 9, 3]);
        let result = caliper_match(&s, &z, 100.0).unwrap();
        assert_eq!(result.pairs, vec![(0, 7)]);

        // Equidistant groups on both sides: the lowest id overall wins.
        let s = scores(&[(0, 0.50), (5, 0.40), (3, 0.60)]);
        let z = assignments(&[0], &[5, 3]);
        let result = caliper_match(&s, &z, 100.0).unwrap();
        assert_eq!(result.pairs, vec![(0, 3)]);
    }

    #[test]
    fn constant_scores_are_rejected() {
        let s = scores(&[(0, 0.4), (1, 0.4)]);
        let z = assignments(&[0], &[1]);
        assert!(matches!(
            caliper_match(&s, &z, 0.2),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn matching_is_deterministic() {
        let s = scores(&[
            (3, 0.61),
            (9, 0.60),
            (4, 0.59),
            (1, 0.58),
            (7, 0.40),
            (2, 0.39),
        ]);
        let z = assignments(&[3, 9, 4], &[1, 7, 2]);
        let a = caliper_match(&s, &z, 0.3).unwrap();
        let b = caliper_match(&s, &z, 0.3).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn att_examples() {
        let m = MatchResult {
            pairs: vec![(0, 1)],
            caliper_width: 1.0,
            unmatched_treated: 0,
            order_rule: String::new(),
        };
        let y: BTreeMap<u64, f64> = [(0, 3.0), (1, 1.0)].into_iter().collect();
        assert_abs_diff_eq!(estimate_att(&m, &y).unwrap().att, 2.0);

        let m2 = MatchResult {
            pairs: vec![(0, 1), (2, 3)],
            ..m.clone()
        };
        let y2: BTreeMap<u64, f64> = [(0, 3.0), (1, 1.0), (2, 5.0), (3, 2.0)].into_iter().collect();
        let estimate = estimate_att(&m2, &y2).unwrap();
        assert_abs_diff_eq!(estimate.att, 2.5);
        assert_eq!(estimate.n_pairs, 2);

        // Negating all outcomes negates the estimate exactly.
        let y_neg: BTreeMap<u64, f64> = y2.iter().map(|(&k, &v)| (k, -v)).collect();
        assert_eq!(estimate_att(&m2, &y_neg).unwrap().att, -estimate.att);

        let y_flat: BTreeMap<u64, f64> = y2.keys().map(|&k| (k, 7.0)).collect();
        assert_abs_diff_eq!(estimate_att(&m2, &y_flat).unwrap().att, 0.0);

        let empty = MatchResult { pairs: vec![], ..m };
        assert!(matches!(estimate_att(&empty, &y2), Err(Error::NoMatches)));
    }
}
