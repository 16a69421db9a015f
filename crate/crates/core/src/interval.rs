//! Exact set arithmetic over time intervals on the non-negative real line.
//!
//! All stored endpoints are integer ticks, so every set this module can
//! produce is a finite union of integer points and open unit segments
//! `(t, t+1)`. Internally an interval is kept on the *half-tick* line: the
//! point `t` is position `2t` and the open segment `(t, t+1)` is position
//! `2t+1`. Open/closed endpoint flags then fall out of the parity of the
//! positions and all set operations reduce to integer range arithmetic.

use std::cmp::{max, min, Ordering};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Position of "infinity" on the half-tick line.
pub(crate) const POS_INF: u64 = u64::MAX;

/// Largest finite tick value accepted by [`TimePoint::new`].
pub const MAX_TICK: u64 = (1 << 62) - 1;

/// A non-negative count of base time units, or infinity.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct TimePoint(u64);

impl TimePoint {
    pub const ZERO: TimePoint = TimePoint(0);
    pub const INFINITY: TimePoint = TimePoint(u64::MAX);

    /// Panics if `ticks` exceeds [`MAX_TICK`].
    pub fn new(ticks: u64) -> Self {
        assert!(ticks <= MAX_TICK, "time point {ticks} out of range");
        TimePoint(ticks)
    }

    pub fn is_finite(self) -> bool {
        self.0 != u64::MAX
    }

    /// The tick count, `None` for infinity.
    pub fn ticks(self) -> Option<u64> {
        self.is_finite().then_some(self.0)
    }

    /// Saturating addition of a duration; infinity absorbs.
    pub fn saturating_add(self, d: u64) -> TimePoint {
        if !self.is_finite() {
            return self;
        }
        TimePoint(min(self.0.saturating_add(d), MAX_TICK))
    }

    pub(crate) fn pos(self) -> u64 {
        if self.is_finite() {
            self.0 * 2
        } else {
            POS_INF
        }
    }
}

impl From<u64> for TimePoint {
    fn from(v: u64) -> Self {
        TimePoint::new(v)
    }
}

impl fmt::Debug for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for TimePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.ticks() {
            Some(t) => write!(f, "{t}"),
            None => f.write_str("inf"),
        }
    }
}

impl FromStr for TimePoint {
    type Err = IntervalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s == "∞" {
            return Ok(TimePoint::INFINITY);
        }
        let v: u64 = s.parse().map_err(|_| IntervalParseError::BadNumber(s.to_string()))?;
        if v > MAX_TICK {
            return Err(IntervalParseError::BadNumber(s.to_string()));
        }
        Ok(TimePoint(v))
    }
}

/// Serialized as an integer, or the string `"inf"`.
impl Serialize for TimePoint {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self.ticks() {
            Some(t) => s.serialize_u64(t),
            None => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for TimePoint {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(n) if n <= MAX_TICK => Ok(TimePoint(n)),
            Raw::Num(n) => Err(serde::de::Error::custom(format!("time point {n} out of range"))),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum IntervalParseError {
    #[error("bad time value `{0}`")]
    BadNumber(String),
    #[error("malformed interval `{0}`")]
    Malformed(String),
    #[error("empty interval `{0}`")]
    Empty(String),
}

/// A non-empty interval of time points.
///
/// An upper bound of infinity is always reported as closed (`[t, inf]`).
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct Interval {
    lo: u64,
    hi: u64,
}

impl Interval {
    /// Builds an interval from its bounds; `None` if the set would be empty.
    pub fn new(lower: TimePoint, lower_closed: bool, upper: TimePoint, upper_closed: bool) -> Option<Interval> {
        if !lower.is_finite() {
            return None;
        }
        let lo = if lower_closed { lower.pos() } else { lower.pos() + 1 };
        let hi = if !upper.is_finite() {
            POS_INF
        } else if upper_closed {
            upper.pos()
        } else {
            upper.pos().checked_sub(1)?
        };
        Interval::from_pos(lo, hi)
    }

    /// `[lower, upper]`. Panics when `lower > upper`.
    pub fn closed(lower: u64, upper: u64) -> Interval {
        Interval::new(TimePoint::new(lower), true, TimePoint::new(upper), true)
            .expect("closed interval with lower > upper")
    }

    /// `[cts, dts]` lifetime of a graph element.
    pub fn lifetime(cts: TimePoint, dts: TimePoint) -> Option<Interval> {
        Interval::new(cts, true, dts, true)
    }

    pub fn point(t: u64) -> Interval {
        Interval::closed(t, t)
    }

    /// `[t, inf]`
    pub fn starting_at(t: u64) -> Interval {
        Interval::new(TimePoint::new(t), true, TimePoint::INFINITY, true).unwrap()
    }

    /// `[0, inf]`
    pub fn universe() -> Interval {
        Interval { lo: 0, hi: POS_INF }
    }

    pub(crate) fn from_pos(lo: u64, hi: u64) -> Option<Interval> {
        (lo <= hi && lo != POS_INF).then_some(Interval { lo, hi })
    }

    pub(crate) fn lo_pos(&self) -> u64 {
        self.lo
    }

    pub(crate) fn hi_pos(&self) -> u64 {
        self.hi
    }

    pub fn lower(&self) -> TimePoint {
        TimePoint(self.lo / 2)
    }

    pub fn lower_closed(&self) -> bool {
        self.lo.is_multiple_of(2)
    }

    pub fn upper(&self) -> TimePoint {
        if self.hi == POS_INF {
            TimePoint::INFINITY
        } else {
            TimePoint(self.hi.div_ceil(2))
        }
    }

    pub fn upper_closed(&self) -> bool {
        self.hi == POS_INF || self.hi.is_multiple_of(2)
    }

    pub fn is_bounded(&self) -> bool {
        self.hi != POS_INF
    }

    pub fn contains(&self, t: TimePoint) -> bool {
        t.is_finite() && self.contains_pos(t.pos())
    }

    pub(crate) fn contains_pos(&self, p: u64) -> bool {
        self.lo <= p && p <= self.hi
    }

    /// True iff the union of both intervals is itself an interval.
    pub fn adjacent(&self, other: &Interval) -> bool {
        let lo = max(self.lo, other.lo);
        let hi = min(self.hi, other.hi);
        lo <= hi.saturating_add(1)
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        Interval::from_pos(max(self.lo, other.lo), min(self.hi, other.hi))
    }
}

impl PartialOrd for Interval {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Interval {
    fn cmp(&self, other: &Self) -> Ordering {
        (self.lo, self.hi).cmp(&(other.lo, other.hi))
    }
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let open = if self.lower_closed() { '[' } else { '(' };
        let close = if self.upper_closed() { ']' } else { ')' };
        write!(f, "{open}{},{}{close}", self.lower(), self.upper())
    }
}

impl FromStr for Interval {
    type Err = IntervalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        let malformed = || IntervalParseError::Malformed(t.to_string());
        let lower_closed = match t.chars().next() {
            Some('[') => true,
            Some('(') => false,
            _ => return Err(malformed()),
        };
        let upper_closed = match t.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return Err(malformed()),
        };
        let body = &t[1..t.len() - 1];
        let (a, b) = body.split_once(',').ok_or_else(malformed)?;
        let lower: TimePoint = a.parse()?;
        let upper: TimePoint = b.parse()?;
        if !lower.is_finite() {
            return Err(malformed());
        }
        Interval::new(lower, lower_closed, upper, upper_closed).ok_or_else(|| IntervalParseError::Empty(t.to_string()))
    }
}

/// A normalized finite union of intervals.
///
/// Parts are sorted, pairwise disjoint and pairwise non-adjacent; the empty
/// sequence is the empty set.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct FragmentedInterval {
    parts: Vec<Interval>,
}

impl FragmentedInterval {
    pub fn empty() -> Self {
        FragmentedInterval { parts: Vec::new() }
    }

    pub fn universe() -> Self {
        Interval::universe().into()
    }

    /// Normalizes an arbitrary collection of intervals.
    pub fn from_parts(parts: impl IntoIterator<Item = Interval>) -> Self {
        let mut parts: Vec<Interval> = parts.into_iter().collect();
        parts.sort();
        let mut out: Vec<Interval> = Vec::with_capacity(parts.len());
        for p in parts {
            match out.last_mut() {
                Some(last) if last.hi == POS_INF || p.lo <= last.hi + 1 => {
                    last.hi = max(last.hi, p.hi);
                }
                _ => out.push(p),
            }
        }
        FragmentedInterval { parts: out }
    }

    pub fn parts(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn contains(&self, t: TimePoint) -> bool {
        t.is_finite() && self.contains_pos(t.pos())
    }

    pub(crate) fn contains_pos(&self, p: u64) -> bool {
        // parts are sorted, so binary search on the lower bound
        let idx = self.parts.partition_point(|i| i.lo <= p);
        idx > 0 && self.parts[idx - 1].hi >= p
    }

    /// Re-normalizes; a no-op on values built through this API.
    pub fn normalize(&self) -> Self {
        FragmentedInterval::from_parts(self.parts.iter().copied())
    }

    pub fn is_normalized(&self) -> bool {
        self.parts.windows(2).all(|w| w[0].hi != POS_INF && w[0].hi + 1 < w[1].lo)
    }

    pub fn union(&self, other: &Self) -> Self {
        if other.is_empty() {
            return self.clone();
        }
        if self.is_empty() {
            return other.clone();
        }
        FragmentedInterval::from_parts(self.parts.iter().chain(other.parts.iter()).copied())
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let mut out = Vec::new();
        let (mut i, mut j) = (0, 0);
        while i < self.parts.len() && j < other.parts.len() {
            let a = self.parts[i];
            let b = other.parts[j];
            if let Some(x) = a.intersect(&b) {
                out.push(x);
            }
            if a.hi < b.hi {
                i += 1;
            } else {
                j += 1;
            }
        }
        // intersections of normalized inputs are already disjoint and non-adjacent
        FragmentedInterval { parts: out }
    }

    /// Set difference `self \ other`.
    pub fn difference(&self, other: &Self) -> Self {
        if other.is_empty() || self.is_empty() {
            return self.clone();
        }
        self.intersect(&other.complement())
    }

    /// Complement with respect to `[0, inf]`.
    pub fn complement(&self) -> Self {
        let mut out = Vec::new();
        let mut next = 0u64;
        for p in &self.parts {
            if p.lo > next {
                out.push(Interval { lo: next, hi: p.lo - 1 });
            }
            if p.hi == POS_INF {
                return FragmentedInterval { parts: out };
            }
            next = p.hi + 1;
        }
        out.push(Interval { lo: next, hi: POS_INF });
        FragmentedInterval { parts: out }
    }

    /// Restriction to `[0, horizon]`.
    pub fn clip(&self, horizon: u64) -> Self {
        self.intersect(&Interval::closed(0, horizon).into())
    }

    /// Earliest time point of the set, if any.
    pub fn lower(&self) -> Option<TimePoint> {
        self.parts.first().map(Interval::lower)
    }
}

impl From<Interval> for FragmentedInterval {
    fn from(i: Interval) -> Self {
        FragmentedInterval { parts: vec![i] }
    }
}

impl FromIterator<Interval> for FragmentedInterval {
    fn from_iter<T: IntoIterator<Item = Interval>>(iter: T) -> Self {
        FragmentedInterval::from_parts(iter)
    }
}

impl fmt::Debug for FragmentedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl fmt::Display for FragmentedInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.parts.is_empty() {
            return f.write_str("∅");
        }
        for (k, p) in self.parts.iter().enumerate() {
            if k > 0 {
                f.write_str("∪")?;
            }
            write!(f, "{p}")?;
        }
        Ok(())
    }
}

impl FromStr for FragmentedInterval {
    type Err = IntervalParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "∅" || s == "{}" || s.is_empty() {
            return Ok(FragmentedInterval::empty());
        }
        s.split('∪').map(str::parse::<Interval>).collect::<Result<Vec<_>, _>>().map(FragmentedInterval::from_parts)
    }
}

impl Serialize for FragmentedInterval {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for FragmentedInterval {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
