//! Exact rational exponent calculus: Lebesgue exponents with a symbolic
//! infinity, Strichartz pairs, and power-law potential classification.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_rational::Rational64;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A nonnegative rational exponent or the symbol `inf`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Exponent {
    Finite(Rational64),
    Infinite,
}

impl Exponent {
    pub fn int(n: i64) -> Self {
        Exponent::Finite(Rational64::from_integer(n))
    }

    pub fn ratio(num: i64, den: i64) -> Self {
        Exponent::Finite(Rational64::new(num, den))
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, Exponent::Infinite)
    }

    /// `1/p`, with `1/inf = 0`. `None` for `p = 0`.
    pub fn recip(&self) -> Option<Rational64> {
        match self {
            Exponent::Infinite => Some(Rational64::zero()),
            Exponent::Finite(p) if p.is_zero() => None,
            Exponent::Finite(p) => Some(p.recip()),
        }
    }

    /// Inverse of [`Exponent::recip`]: `0 -> inf`.
    pub fn from_recip(r: Rational64) -> Result<Self> {
        if r.is_negative() {
            return Err(Error::OutOfRange(format!("negative reciprocal {r}")));
        }
        if r.is_zero() {
            Ok(Exponent::Infinite)
        } else {
            Ok(Exponent::Finite(r.recip()))
        }
    }

    /// Hölder dual `p'` with `1/p + 1/p' = 1`, defined for `p` in `[1, inf]`.
    pub fn dual(&self) -> Result<Self> {
        let r = self.recip().ok_or_else(|| Error::OutOfRange("dual of 0".into()))?;
        if r > Rational64::one() {
            return Err(Error::OutOfRange(format!("dual of {self} (needs p >= 1)")));
        }
        Exponent::from_recip(Rational64::one() - r)
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            Exponent::Infinite => f64::INFINITY,
            Exponent::Finite(p) => *p.numer() as f64 / *p.denom() as f64,
        }
    }

    /// `max(self, other)`.
    pub fn max(self, other: Self) -> Self {
        if self >= other {
            self
        } else {
            other
        }
    }

    fn check_lebesgue(&self, what: &str) -> Result<()> {
        match self {
            Exponent::Finite(p) if *p < Rational64::one() => Err(Error::OutOfRange(format!("{what} = {self} must lie in [1, inf]"))),
            _ => Ok(()),
        }
    }
}

impl PartialOrd for Exponent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Exponent {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self, other) {
            (Exponent::Infinite, Exponent::Infinite) => Ordering::Equal,
            (Exponent::Infinite, _) => Ordering::Greater,
            (_, Exponent::Infinite) => Ordering::Less,
            (Exponent::Finite(a), Exponent::Finite(b)) => a.cmp(b),
        }
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Infinite => write!(f, "inf"),
            Exponent::Finite(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => return Ok(Exponent::Infinite),
            _ => {}
        }
        let r = parse_rational(t)?;
        if r.is_negative() {
            return Err(Error::Parse(s.to_string()));
        }
        Ok(Exponent::Finite(r))
    }
}

impl Serialize for Exponent {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Parses `"3"`, `"-3/2"` or a finite decimal such as `"1.4"` into an exact rational.
pub fn parse_rational(s: &str) -> Result<Rational64> {
    let t = s.trim();
    let bad = || Error::Parse(s.to_string());
    if t.is_empty() {
        return Err(bad());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| bad())?;
        let d: i64 = d.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational64::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        let negative = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if frac.is_empty() && int_digits.is_empty() {
            return Err(bad());
        }
        if !int_digits.chars().all(|c| c.is_ascii_digit()) || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        if frac.len() > 15 {
            return Err(bad());
        }
        let den = 10i64.pow(frac.len() as u32);
        let whole: i64 = if int_digits.is_empty() {
            0
        } else {
            int_digits.parse().map_err(|_| bad())?
        };
        let part: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let mag = whole.checked_mul(den).and_then(|w| w.checked_add(part)).ok_or_else(bad)?;
        let r = Rational64::new(mag, den);
        return Ok(if negative { -r } else { r });
    }
    let n: i64 = t.parse().map_err(|_| bad())?;
    Ok(Rational64::from_integer(n))
}

/// A set of interacting particles, labelled `1..=N`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ClusterSpec {
    members: Vec<usize>,
    dim: usize,
}

impl ClusterSpec {
    /// `members` are 1-based particle labels; duplicates are rejected.
    pub fn new(members: &[usize], dim: usize) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::InvalidCluster("empty cluster".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidCluster("spatial dimension must be >= 1".into()));
        }
        if members.contains(&0) {
            return Err(Error::InvalidCluster("particle labels start at 1".into()));
        }
        let mut sorted = members.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != members.len() {
            return Err(Error::InvalidCluster(format!("duplicate members in {members:?}")));
        }
        Ok(ClusterSpec { members: sorted, dim })
    }

    /// Checks membership against a system of `n_particles`.
    pub fn validate_for(&self, n_particles: usize) -> Result<()> {
        match self.members.last() {
            Some(&m) if m <= n_particles => Ok(()),
            _ => Err(Error::InvalidCluster(format!(
                "{:?} is not a subset of 1..={n_particles}",
                self.members
            ))),
        }
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    /// Zero-based particle indices.
    pub fn indices(&self) -> Vec<usize> {
        self.members.iter().map(|m| m - 1).collect()
    }

    pub fn size(&self) -> usize {
        self.members.len()
    }

    pub fn spatial_dim(&self) -> usize {
        self.dim
    }

    pub fn relative_dimension(&self) -> usize {
        relative_dimension(self)
    }
}

impl fmt::Display for ClusterSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let labels: Vec<String> = self.members.iter().map(|m| m.to_string()).collect();
        write!(f, "{{{}}}", labels.join(","))
    }
}

/// `n_D`: `(|D|-1) d` for genuine clusters, `d` for a single particle.
pub fn relative_dimension(cluster: &ClusterSpec) -> usize {
    if cluster.size() >= 2 {
        (cluster.size() - 1) * cluster.dim
    } else {
        cluster.dim
    }
}

fn half_n(n: usize) -> Rational64 {
    Rational64::new(n as i64, 2)
}

fn recip_of(p: &Exponent) -> Result<Rational64> {
    p.recip().ok_or_else(|| Error::OutOfRange("exponent 0 has no reciprocal".into()))
}

/// Time exponent `a(p)` with `1/a = 1 - n/(2p)`, for `n/2 < p <= inf`.
pub fn a_of_p(n: usize, p: Exponent) -> Result<Exponent> {
    if p <= Exponent::Finite(half_n(n)) {
        return Err(Error::OutOfRange(format!("a(p) needs p > n/2 = {}, got {p}", half_n(n))));
    }
    let r = recip_of(&p)?;
    Exponent::from_recip(Rational64::one() - Rational64::from_integer(n as i64) * r / 2)
}

/// The Strichartz pair `(l, theta)` attached to a potential exponent `p`.
pub fn strichartz_pair(n: usize, p: Exponent) -> Result<(Exponent, Exponent)> {
    if p < Exponent::Finite(half_n(n)) || p < Exponent::int(1) {
        return Err(Error::OutOfRange(format!(
            "strichartz pair needs p >= max(1, n/2), got p = {p}, n = {n}"
        )));
    }
    let r = recip_of(&p)?;
    let half = Rational64::new(1, 2);
    let l = Exponent::from_recip(half - r / 2)?;
    let theta = Exponent::from_recip(Rational64::from_integer(n as i64) * r / 4)?;
    Ok((l, theta))
}

/// Exact test of `0 <= 2/sigma = n (1/2 - 1/lambda) <= 1`.
pub fn is_admissible(n: usize, lambda: Exponent, sigma: Exponent) -> bool {
    if lambda.check_lebesgue("lambda").is_err() || sigma.check_lebesgue("sigma").is_err() {
        return false;
    }
    let (Some(rl), Some(rs)) = (lambda.recip(), sigma.recip()) else {
        return false;
    };
    let lhs = rs * 2;
    let rhs = Rational64::from_integer(n as i64) * (Rational64::new(1, 2) - rl);
    lhs == rhs && lhs >= Rational64::zero() && lhs <= Rational64::one()
}

/// Exponents controlling the time derivative of a potential.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DerivativeExponents {
    pub b: Exponent,
    pub q: Exponent,
    pub p_tilde: Exponent,
}

pub fn derivative_exponents(n: usize, p: Exponent) -> Result<DerivativeExponents> {
    if n < 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    if p < Exponent::Finite(half_n(n)) {
        return Err(Error::OutOfRange(format!("needs p >= n/2, got {p}")));
    }
    let r = recip_of(&p)?;
    let nn = Rational64::from_integer(n as i64);
    let b = Exponent::from_recip(Rational64::one() - nn * r / 4)?;
    let q_recip = if n >= 4 {
        r / 2 + Rational64::new(2, n as i64)
    } else {
        Rational64::new(1, 2) + r / 2
    };
    let q = Exponent::from_recip(q_recip)?;
    Ok(DerivativeExponents {
        b,
        q,
        p_tilde: p.max(Exponent::int(2)),
    })
}

/// Which potential hypothesis a classification targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Assumption {
    V1,
    V2,
}

impl FromStr for Assumption {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "v-1" => Ok(Assumption::V1),
            "v2" | "v-2" => Ok(Assumption::V2),
            _ => Err(Error::Parse(s.to_string())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassKind {
    /// `L^a(I, L^p) + L^1(I, L^inf)`
    Lebesgue,
    /// `C(I, L^p) + L^1(I, L^inf)`
    ContinuousL1,
    /// `C(I, L^p) + C(I, L^inf)`
    Continuous,
}

/// Membership of a potential (or its time derivative) in one of the
/// space-time classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PotentialClassTag {
    pub kind: ClassKind,
    pub a: Exponent,
    pub p: Exponent,
    pub cluster: Option<ClusterSpec>,
    /// `true` when the tag describes the time derivative.
    pub time_derivative: bool,
}

#[derive(Debug, Clone, Copy)]
pub struct ClassifyOptions {
    /// Grid step for the scan is `1/denominator`.
    pub denominator: i64,
    /// Largest finite `p` scanned, as a multiple of `n`.
    pub max_p_over_n: i64,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            denominator: 100,
            max_p_over_n: 4,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FeasibilityReport {
    pub n: usize,
    pub gamma: String,
    pub assumption: Assumption,
    pub feasible: bool,
    /// `inf` for bounded potentials, otherwise the smallest feasible grid `p`.
    pub witness: Option<Exponent>,
    /// Smallest and largest feasible grid points.
    pub feasible_interval: Option<(Exponent, Exponent)>,
    pub feasible_count: usize,
    /// For V1: whether the critical branch `C(I, L^{n/2})` also holds.
    pub critical_branch: bool,
    pub tags: Vec<PotentialClassTag>,
    pub grid_step: String,
}

/// `|x|^{-gamma}` (truncated at infinity) lies in `L^p` near the origin of
/// `R^n` iff `gamma p < n`.
fn locally_in(n: usize, gamma: Rational64, p: Exponent) -> bool {
    match p {
        Exponent::Infinite => gamma.is_zero(),
        Exponent::Finite(p) => gamma * p < Rational64::from_integer(n as i64),
    }
}

/// Feasibility of a single `p` for `|x|^{-gamma}` with moving centres.
pub fn power_feasible_at(n: usize, gamma: Rational64, p: Exponent, assumption: Assumption) -> bool {
    if p < Exponent::int(1) {
        return false;
    }
    match assumption {
        Assumption::V1 => p > Exponent::Finite(half_n(n)) && locally_in(n, gamma, p),
        Assumption::V2 => {
            let Ok(de) = derivative_exponents(n, p) else {
                return false;
            };
            locally_in(n, gamma, de.p_tilde) && locally_in(n, gamma + Rational64::one(), de.q)
        }
    }
}

/// Scans `p` over `[n/2, max_p]` on a rational grid (plus `inf`) for
/// exponents at which `|x|^{-gamma}` meets the chosen assumption.
pub fn classify_power_potential(n: usize, gamma: Rational64, assumption: Assumption, opts: ClassifyOptions) -> Result<FeasibilityReport> {
    if gamma.is_negative() {
        return Err(Error::OutOfRange(format!("gamma = {gamma} must be >= 0")));
    }
    if opts.denominator <= 0 {
        return Err(Error::OutOfRange("denominator must be positive".into()));
    }
    if assumption == Assumption::V2 && n < 3 {
        return Err(Error::UnsupportedDimension(n));
    }
    let step = Rational64::new(1, opts.denominator);
    let start = half_n(n);
    let stop = Rational64::from_integer(opts.max_p_over_n.max(1) * n as i64);

    let mut candidates = Vec::new();
    let mut p = start;
    while p <= stop {
        candidates.push(Exponent::Finite(p));
        p += step;
    }
    candidates.push(Exponent::Infinite);

    let feasible: Vec<Exponent> = candidates
        .into_iter()
        .filter(|&p| power_feasible_at(n, gamma, p, assumption))
        .collect();

    let witness = if feasible.contains(&Exponent::Infinite) {
        Some(Exponent::Infinite)
    } else {
        feasible.first().copied()
    };
    let critical_branch =
        assumption == Assumption::V1 && Exponent::Finite(start) >= Exponent::int(1) && locally_in(n, gamma, Exponent::Finite(start));

    let mut tags = Vec::new();
    if let Some(w) = witness {
        match assumption {
            Assumption::V1 => tags.push(PotentialClassTag {
                kind: ClassKind::Lebesgue,
                a: a_of_p(n, w)?,
                p: w,
                cluster: None,
                time_derivative: false,
            }),
            Assumption::V2 => {
                let de = derivative_exponents(n, w)?;
                tags.push(PotentialClassTag {
                    kind: ClassKind::Continuous,
                    a: Exponent::Infinite,
                    p: de.p_tilde,
                    cluster: None,
                    time_derivative: false,
                });
                tags.push(PotentialClassTag {
                    kind: ClassKind::Lebesgue,
                    a: de.b,
                    p: de.q,
                    cluster: None,
                    time_derivative: true,
                });
            }
        }
    }
    if critical_branch {
        tags.push(PotentialClassTag {
            kind: ClassKind::ContinuousL1,
            a: Exponent::Infinite,
            p: Exponent::Finite(start),
            cluster: None,
            time_derivative: false,
        });
    }

    Ok(FeasibilityReport {
        n,
        gamma: gamma.to_string(),
        assumption,
        feasible: witness.is_some() || critical_branch,
        witness,
        feasible_interval: match (feasible.first(), feasible.last()) {
            (Some(a), Some(b)) => Some((*a, *b)),
            _ => None,
        },
        feasible_count: feasible.len(),
        critical_branch,
        tags,
        grid_step: step.to_string(),
    })
}

/// Sweeps `gamma = k/denominator` upward from 0 and returns the last feasible
/// and first infeasible values (the located threshold bracket).
pub fn feasibility_threshold(
    n: usize,
    assumption: Assumption,
    gamma_max: Rational64,
    opts: ClassifyOptions,
) -> Result<Option<(Rational64, Rational64)>> {
    let step = Rational64::new(1, opts.denominator);
    let mut last_ok: Option<Rational64> = None;
    let mut gamma = Rational64::zero();
    while gamma <= gamma_max {
        let report = classify_power_potential(n, gamma, assumption, opts)?;
        if report.feasible {
            last_ok = Some(gamma);
        } else if let Some(ok) = last_ok {
            return Ok(Some((ok, gamma)));
        }
        gamma += step;
    }
    Ok(None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn e(s: &str) -> Exponent {
        s.parse().unwrap()
    }

    #[test]
    fn relative_dimension_cases() {
        assert_eq!(relative_dimension(&ClusterSpec::new(&[1, 2], 3).unwrap()), 3);
        assert_eq!(relative_dimension(&ClusterSpec::new(&[1], 3).unwrap()), 3);
        assert_eq!(relative_dimension(&ClusterSpec::new(&[1, 2, 3], 1).unwrap()), 2);
        assert!(matches!(ClusterSpec::new(&[], 3), Err(Error::InvalidCluster(_))));
        assert!(ClusterSpec::new(&[1, 4], 1).unwrap().validate_for(3).is_err());
    }

    #[test]
    fn a_of_p_examples() {
        assert_eq!(a_of_p(3, e("3")).unwrap(), e("2"));
        assert_eq!(a_of_p(3, e("inf")).unwrap(), e("1"));
        assert_eq!(a_of_p(4, e("2")), Err(Error::OutOfRange("a(p) needs p > n/2 = 2, got 2".into())));
        assert_eq!(a_of_p(4, e("5/2")).unwrap(), e("5"));
    }

    #[test]
    fn strichartz_pair_examples() {
        assert_eq!(strichartz_pair(3, e("3")).unwrap(), (e("3"), e("4")));
        assert_eq!(strichartz_pair(7, e("inf")).unwrap(), (e("2"), e("inf")));
        assert_eq!(strichartz_pair(1, e("3/2")).unwrap(), (e("6"), e("6")));
        assert!(strichartz_pair(3, e("1")).is_err());
    }

    #[test]
    fn admissibility_examples() {
        assert!(is_admissible(3, e("2"), e("inf")));
        assert!(is_admissible(3, e("6"), e("2")));
        assert!(!is_admissible(3, e("inf"), e("2")));
        assert!(!is_admissible(1, e("1/2"), e("inf")));
    }

    #[test]
    fn derivative_exponent_examples() {
        let d = derivative_exponents(6, e("3")).unwrap();
        assert_eq!((d.b, d.q), (e("2"), e("2")));
        let d = derivative_exponents(3, e("3/2")).unwrap();
        assert_eq!((d.b, d.q, d.p_tilde), (e("2"), e("6/5"), e("2")));
        let d = derivative_exponents(4, e("inf")).unwrap();
        assert_eq!((d.b, d.q), (e("1"), e("2")));
        assert_eq!(derivative_exponents(2, e("3")), Err(Error::UnsupportedDimension(2)));
    }

    #[test]
    fn duals() {
        assert_eq!(e("2").dual().unwrap(), e("2"));
        assert_eq!(e("1").dual().unwrap(), e("inf"));
        assert_eq!(e("inf").dual().unwrap(), e("1"));
        assert_eq!(e("6").dual().unwrap(), e("6/5"));
        assert!(e("1/2").dual().is_err());
    }

    #[test]
    fn parsing() {
        assert_eq!(e("1.4"), Exponent::ratio(7, 5));
        assert_eq!(e(" 3/6 "), Exponent::ratio(1, 2));
        assert_eq!(e("∞"), Exponent::Infinite);
        assert!("abc".parse::<Exponent>().is_err());
        assert!("1/0".parse::<Exponent>().is_err());
        assert!("-2".parse::<Exponent>().is_err());
        assert_eq!(parse_rational("-.5").unwrap(), Rational64::new(-1, 2));
    }

    #[test]
    fn classification_examples() {
        let opts = ClassifyOptions::default();
        let r = classify_power_potential(3, parse_rational("1.4").unwrap(), Assumption::V2, opts).unwrap();
        assert!(r.feasible);
        assert_eq!(r.witness, Some(e("3/2")));

        let r = classify_power_potential(3, parse_rational("1.6").unwrap(), Assumption::V2, opts).unwrap();
        assert!(!r.feasible);
        assert!(r.tags.is_empty());

        let r = classify_power_potential(3, Rational64::zero(), Assumption::V1, opts).unwrap();
        assert!(r.feasible);
        assert_eq!(r.witness, Some(Exponent::Infinite));
    }

    #[test]
    fn v1_reports_both_branches() {
        let r = classify_power_potential(3, Rational64::new(3, 2), Assumption::V1, ClassifyOptions::default()).unwrap();
        assert!(r.critical_branch);
        assert_eq!(r.witness, Some(e("151/100")));
        assert_eq!(r.feasible_interval, Some((e("151/100"), e("199/100"))));
        assert_eq!(r.tags.len(), 2);
    }

    #[test]
    fn n3_threshold_bracket() {
        let (ok, bad) = feasibility_threshold(3, Assumption::V2, Rational64::from_integer(3), ClassifyOptions::default())
            .unwrap()
            .unwrap();
        assert_eq!(ok, Rational64::new(149, 100));
        assert_eq!(bad, Rational64::new(3, 2));
    }
}
