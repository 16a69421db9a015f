//! Lifespan arithmetic of the marking rules.

use crate::interval::{FragmentedInterval, Interval, POS_INF};
use crate::mtgl::OpInterval;

/// Intersection of the lifetimes of matched elements.
pub fn match_lifespan<'a>(lifetimes: impl IntoIterator<Item = &'a FragmentedInterval>) -> FragmentedInterval {
    let mut acc = FragmentedInterval::universe();
    for l in lifetimes {
        acc = acc.intersect(l);
        if acc.is_empty() {
            break;
        }
    }
    acc
}

/// Kernel lifespan combined with the union of the grouped dependency lifespans.
pub fn alpha_lifespan<'a>(
    kernel: &FragmentedInterval,
    deps: impl IntoIterator<Item = &'a FragmentedInterval>,
    positive: bool,
) -> FragmentedInterval {
    let grouped = deps.into_iter().fold(FragmentedInterval::empty(), |acc, d| acc.union(d));
    if positive {
        kernel.intersect(&grouped)
    } else {
        kernel.difference(&grouped)
    }
}

fn even(p: u64) -> bool {
    p.is_multiple_of(2)
}

fn shift_down(p: u64, by: u64) -> Option<u64> {
    if p == POS_INF {
        Some(POS_INF)
    } else {
        p.checked_sub(by)
    }
}

fn shift_up(p: u64, by: u64) -> u64 {
    if p == POS_INF {
        POS_INF
    } else {
        p.saturating_add(by).min(POS_INF - 1)
    }
}

/// Time points at which `left U_I right` holds.
pub fn until_satisfaction(left: &FragmentedInterval, right: &FragmentedInterval, i: OpInterval) -> FragmentedInterval {
    let (a, b) = (i.lo.saturating_mul(2), i.hi.saturating_mul(2));
    let mut parts = Vec::new();
    for r in right.parts() {
        for l in left.parts() {
            if !r.adjacent(l) {
                continue;
            }
            // admissible witnesses t' for left part l: r ∩ (inf l, sup l]
            let lo = if even(l.lo_pos()) { l.lo_pos() + 1 } else { l.lo_pos() };
            let hi = match l.hi_pos() {
                POS_INF => POS_INF,
                h if even(h) => h,
                h => h + 1,
            };
            let Some(k) = Interval::from_pos(lo, hi).and_then(|w| w.intersect(r)) else { continue };
            // start points t with t' - t in I and t' > t
            let (slo, shi) = if i.lo > 0 {
                (k.lo_pos().saturating_sub(b), shift_down(k.hi_pos(), a))
            } else if i.hi == 0 {
                continue;
            } else {
                let hi = match k.hi_pos() {
                    POS_INF => Some(POS_INF),
                    h if even(h) => h.checked_sub(1),
                    h => Some(h),
                };
                (k.lo_pos().saturating_sub(b), hi)
            };
            let Some(shi) = shi else { continue };
            if let Some(s) = Interval::from_pos(slo, shi).and_then(|s| s.intersect(l)) {
                parts.push(s);
            }
        }
    }
    let mut out = FragmentedInterval::from_parts(parts);
    if i.lo == 0 {
        out = out.union(right);
    }
    out
}

/// Time points at which `left S_I right` holds.
pub fn since_satisfaction(left: &FragmentedInterval, right: &FragmentedInterval, i: OpInterval) -> FragmentedInterval {
    let (a, b) = (i.lo.saturating_mul(2), i.hi.saturating_mul(2));
    let mut parts = Vec::new();
    for r in right.parts() {
        for l in left.parts() {
            if !r.adjacent(l) {
                continue;
            }
            // admissible witnesses t' for left part l: r ∩ [inf l, sup l)
            let lo = if even(l.lo_pos()) { l.lo_pos() } else { l.lo_pos() - 1 };
            let hi = match l.hi_pos() {
                POS_INF => POS_INF,
                h if even(h) => match h.checked_sub(1) {
                    Some(h) => h,
                    None => continue,
                },
                h => h,
            };
            let Some(k) = Interval::from_pos(lo, hi).and_then(|w| w.intersect(r)) else { continue };
            let (slo, shi) = if i.lo > 0 {
                (shift_up(k.lo_pos(), a), shift_up(k.hi_pos(), b))
            } else if i.hi == 0 {
                continue;
            } else {
                let lo = if even(k.lo_pos()) { k.lo_pos() + 1 } else { k.lo_pos() };
                (lo, shift_up(k.hi_pos(), b))
            };
            if let Some(s) = Interval::from_pos(slo, shi).and_then(|s| s.intersect(l)) {
                parts.push(s);
            }
        }
    }
    let mut out = FragmentedInterval::from_parts(parts);
    if i.lo == 0 {
        out = out.union(right);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn fi(s: &str) -> FragmentedInterval {
        s.parse().unwrap()
    }

    fn op(lo: u64, hi: u64) -> OpInterval {
        OpInterval::new(lo, hi).unwrap()
    }

    #[test]
    fn match_lifespans() {
        assert_eq!(match_lifespan([&fi("[5,8]"), &fi("[6,7]"), &fi("[0,inf]")]), fi("[6,7]"));
        assert!(match_lifespan([&fi("[1,2]"), &fi("[5,6]")]).is_empty());
        assert_eq!(match_lifespan([]), FragmentedInterval::universe());
    }

    #[test]
    fn alpha_lifespans() {
        let u = FragmentedInterval::universe();
        assert_eq!(alpha_lifespan(&u, [&fi("[6,8]"), &fi("[8,9]")], true), fi("[6,9]"));
        assert_eq!(alpha_lifespan(&fi("[0,10]"), [], false), fi("[0,10]"));
        assert_eq!(alpha_lifespan(&fi("[0,10]"), [&fi("[3,5]")], false), fi("[0,3)∪(5,10]"));
    }

    #[test]
    fn until_examples() {
        assert_eq!(until_satisfaction(&fi("[5,7]"), &fi("[6,9]"), op(0, 2)), fi("[5,9]"));
        assert_eq!(until_satisfaction(&fi("∅"), &fi("[4,6]"), op(0, 3)), fi("[4,6]"));
        assert!(until_satisfaction(&fi("[0,10]"), &fi("∅"), op(1, 4)).is_empty());
    }

    #[test]
    fn since_examples() {
        assert_eq!(since_satisfaction(&fi("[0,inf]"), &fi("[4,4]"), op(0, 5)), fi("[4,9]"));
        assert!(since_satisfaction(&fi("[0,10]"), &fi("∅"), op(0, 5)).is_empty());
        assert_eq!(since_satisfaction(&fi("[2,8]"), &fi("[2,3]"), op(1, 4)), fi("[3,7]"));
    }

    /// Pointwise definitions over half-tick positions `0..=n`. A witness in an
    /// open segment also needs the left operand on that segment.
    fn until_naive(l: &FragmentedInterval, r: &FragmentedInterval, i: OpInterval, n: u64) -> Vec<bool> {
        (0..=n)
            .map(|p| {
                (p + 2 * i.lo..=p + 2 * i.hi)
                    .any(|q| r.contains_pos(q) && (q == p || (p..q + q % 2).all(|x| l.contains_pos(x))))
            })
            .collect()
    }

    fn since_naive(l: &FragmentedInterval, r: &FragmentedInterval, i: OpInterval, n: u64) -> Vec<bool> {
        (0..=n)
            .map(|p| {
                let lo = p.saturating_sub(2 * i.hi);
                let Some(hi) = p.checked_sub(2 * i.lo) else { return false };
                (lo..=hi).any(|q| r.contains_pos(q) && (q == p || (q + 1 - q % 2..=p).all(|x| l.contains_pos(x))))
            })
            .collect()
    }

    fn arb_frag() -> impl Strategy<Value = FragmentedInterval> {
        let part = (0u64..24, 0u64..6, any::<bool>(), any::<bool>())
            .prop_filter_map("non-empty", |(lo, len, lc, uc)| Interval::new(lo.into(), lc, (lo + len).into(), uc));
        proptest::collection::vec(part, 0..4).prop_map(FragmentedInterval::from_parts)
    }

    proptest! {
        #[test]
        fn until_matches_pointwise(l in arb_frag(), r in arb_frag(), lo in 0u64..5, len in 0u64..5) {
            let i = op(lo, lo + len);
            let got = until_satisfaction(&l, &r, i);
            // everything is bounded by 30, so positions past 60 are irrelevant
            let want = until_naive(&l, &r, i, 60);
            for (p, w) in want.iter().enumerate() {
                prop_assert_eq!(got.contains_pos(p as u64), *w, "pos {} l={} r={} I={}", p, l, r, i);
            }
        }

        #[test]
        fn since_matches_pointwise(l in arb_frag(), r in arb_frag(), lo in 0u64..5, len in 0u64..5) {
            let i = op(lo, lo + len);
            let got = since_satisfaction(&l, &r, i);
            let want = since_naive(&l, &r, i, 80);
            for (p, w) in want.iter().enumerate() {
                prop_assert_eq!(got.contains_pos(p as u64), *w, "pos {} l={} r={} I={}", p, l, r, i);
            }
        }

        #[test]
        fn zero_interval_until_is_right(l in arb_frag(), r in arb_frag()) {
            prop_assert_eq!(until_satisfaction(&l, &r, op(0, 0)), r);
        }
    }
}
