//! Code space: finite words, eventually periodic infinite words, the
//! ultrametric `2^-n`, the shift maps `ω -> iω`, cylinder images and the
//! canonical projection `ω -> a_ω` onto the attractor.
//!
//! Symbols are 0-based internally and written 1-based in text, so the word
//! `"12"` is `[0, 1]`.

use std::fmt;
use std::ops::Deref;
use std::str::FromStr;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::{diameter, euclid, Point, PointSet};
use crate::maps::compose_word;
use crate::system::{check_word_budget, IFSSystem};

/// Hard cap on the number of symbols `project` will unroll.
pub const MAX_PROJECTION_DEPTH: usize = 1 << 16;

/// Finite word over the map indices; the empty word is allowed.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(symbols: Vec<usize>) -> Self {
        Word(symbols)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    pub fn symbols(&self) -> &[usize] {
        &self.0
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = self.0.clone();
        s.extend_from_slice(&other.0);
        Word(s)
    }

    /// `i·w`.
    pub fn prepend(&self, i: usize) -> Word {
        let mut s = Vec::with_capacity(self.0.len() + 1);
        s.push(i);
        s.extend_from_slice(&self.0);
        Word(s)
    }

    pub fn check_symbols(&self, count: usize) -> Result<()> {
        match self.0.iter().find(|&&s| s >= count) {
            Some(&symbol) => Err(Error::UnknownSymbol { symbol, count }),
            None => Ok(()),
        }
    }
}

impl Deref for Word {
    type Target = [usize];

    fn deref(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.iter().all(|&s| s < 9) {
            for s in &self.0 {
                write!(f, "{}", s + 1)?;
            }
            Ok(())
        } else {
            let parts: Vec<String> = self.0.iter().map(|s| (s + 1).to_string()).collect();
            write!(f, "{}", parts.join(","))
        }
    }
}

/// Digits `1`–`9`, or comma-separated 1-based indices for larger alphabets.
impl FromStr for Word {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() {
            return Ok(Word::empty());
        }
        let parse_one = |tok: &str| -> Result<usize> {
            match tok.trim().parse::<usize>() {
                Ok(v) if v >= 1 => Ok(v - 1),
                _ => Err(Error::Parse(format!("invalid symbol {tok:?}"))),
            }
        };
        let symbols = if s.contains(',') {
            s.split(',').map(parse_one).collect::<Result<Vec<_>>>()?
        } else {
            s.chars()
                .map(|c| parse_one(c.encode_utf8(&mut [0; 4])))
                .collect::<Result<Vec<_>>>()?
        };
        Ok(Word(symbols))
    }
}

/// An infinite word: either eventually periodic (exact) or known only up
/// to a finite prefix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum CodeStream {
    /// `preamble · cycle · cycle · …`, `cycle` non-empty.
    Periodic { preamble: Word, cycle: Word },
    /// Only the first `prefix.len()` symbols are known.
    Truncated { prefix: Word },
}

impl CodeStream {
    pub fn periodic(preamble: Word, cycle: Word) -> Result<Self> {
        if cycle.is_empty() {
            return Err(Error::Parse(
                "periodic stream needs a non-empty cycle".into(),
            ));
        }
        Ok(CodeStream::Periodic { preamble, cycle })
    }

    /// The constant word `iii…`.
    pub fn constant(i: usize) -> Self {
        CodeStream::Periodic {
            preamble: Word::empty(),
            cycle: Word::new(vec![i]),
        }
    }

    pub fn truncated(prefix: Word) -> Self {
        CodeStream::Truncated { prefix }
    }

    /// Symbol at 1-based position `n`, if known.
    pub fn symbol(&self, n: usize) -> Option<usize> {
        let k = n.checked_sub(1)?;
        match self {
            CodeStream::Periodic { preamble, cycle } => Some(if k < preamble.len() {
                preamble[k]
            } else {
                cycle[(k - preamble.len()) % cycle.len()]
            }),
            CodeStream::Truncated { prefix } => prefix.get(k).copied(),
        }
    }

    /// Number of known symbols (`None` for periodic streams).
    pub fn known_len(&self) -> Option<usize> {
        match self {
            CodeStream::Periodic { .. } => None,
            CodeStream::Truncated { prefix } => Some(prefix.len()),
        }
    }

    pub fn check_symbols(&self, count: usize) -> Result<()> {
        match self {
            CodeStream::Periodic { preamble, cycle } => {
                preamble.check_symbols(count)?;
                cycle.check_symbols(count)
            }
            CodeStream::Truncated { prefix } => prefix.check_symbols(count),
        }
    }
}

impl fmt::Display for CodeStream {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CodeStream::Periodic { preamble, cycle } => write!(f, "{preamble}|{cycle}"),
            CodeStream::Truncated { prefix } => write!(f, "{prefix}"),
        }
    }
}

/// `"pre|cycle"` is periodic (`"1|2"` = 1222…, `"|12"` = 1212…); text
/// without `|` is a truncated prefix.
impl FromStr for CodeStream {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once('|') {
            Some((pre, cyc)) => CodeStream::periodic(pre.parse()?, cyc.parse()?),
            None => Ok(CodeStream::truncated(s.parse()?)),
        }
    }
}

/// `[w]_m`, the first `m` symbols of a finite word.
pub fn prefix_word(w: &Word, m: usize) -> Result<Word> {
    if m > w.len() {
        return Err(Error::Parse(format!(
            "prefix length {m} exceeds word length {}",
            w.len()
        )));
    }
    Ok(Word::new(w[..m].to_vec()))
}

/// `[ω]_m`, the first `m` symbols of a stream.
pub fn prefix(stream: &CodeStream, m: usize) -> Result<Word> {
    if let Some(len) = stream.known_len() {
        if m > len {
            return Err(Error::Parse(format!(
                "prefix length {m} exceeds known length {len}"
            )));
        }
    }
    Ok(Word::new(
        (1..=m)
            .map(|n| stream.symbol(n).expect("checked"))
            .collect(),
    ))
}

/// Result of comparing two streams.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CodeDistance {
    Exact(f64),
    /// No disagreement within the compared depth; the true distance is at
    /// most this value ("indistinguishable at horizon").
    AtMost(f64),
}

impl CodeDistance {
    pub fn value(&self) -> f64 {
        match *self {
            CodeDistance::Exact(v) | CodeDistance::AtMost(v) => v,
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, CodeDistance::Exact(_))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn two_pow_neg(n: usize) -> f64 {
    0.5f64.powi(i32::try_from(n).unwrap_or(i32::MAX))
}

/// `2^-n` with `n` the first (1-based) disagreement, `0` when equal.
///
/// Two periodic streams are compared exactly: they agree everywhere once
/// they agree on the longer preamble plus `lcm` of the cycle lengths. When
/// a truncated stream is involved at most `horizon` symbols are compared.
pub fn code_distance(a: &CodeStream, b: &CodeStream, horizon: usize) -> CodeDistance {
    let (limit, exact_if_equal) = match (a, b) {
        (
            CodeStream::Periodic {
                preamble: pa,
                cycle: ca,
            },
            CodeStream::Periodic {
                preamble: pb,
                cycle: cb,
            },
        ) => {
            let lcm = ca.len() / gcd(ca.len(), cb.len()) * cb.len();
            (pa.len().max(pb.len()) + lcm, true)
        }
        _ => {
            let known = [a.known_len(), b.known_len()]
                .into_iter()
                .flatten()
                .min()
                .unwrap_or(usize::MAX);
            (horizon.min(known), false)
        }
    };
    for n in 1..=limit {
        if a.symbol(n) != b.symbol(n) {
            return CodeDistance::Exact(two_pow_neg(n));
        }
    }
    if exact_if_equal {
        CodeDistance::Exact(0.0)
    } else {
        CodeDistance::AtMost(two_pow_neg(limit))
    }
}

/// `F_i(ω) = iω`.
pub fn shift_prepend(i: usize, stream: &CodeStream, count: usize) -> Result<CodeStream> {
    if i >= count {
        return Err(Error::UnknownSymbol { symbol: i, count });
    }
    Ok(match stream {
        CodeStream::Periodic { preamble, cycle } => CodeStream::Periodic {
            preamble: preamble.prepend(i),
            cycle: cycle.clone(),
        },
        CodeStream::Truncated { prefix } => CodeStream::Truncated {
            prefix: prefix.prepend(i),
        },
    })
}

/// The point `a_ω` together with the depth reached.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProjectionResult {
    #[serde(serialize_with = "serialize_point")]
    pub point: Point,
    pub depth: usize,
    /// `diameter(f_{[ω]_depth}(B))`.
    pub residual_diam: f64,
}

fn serialize_point<S: serde::Serializer>(p: &Point, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.collect_seq(p.coords())
}

/// `f_{ω_1} ∘ … ∘ f_{ω_n}` applied to `b`, innermost symbol first.
fn apply_prefix(system: &IFSSystem, stream: &CodeStream, n: usize, b: &PointSet) -> PointSet {
    let mut cloud = b.clone();
    for k in (1..=n).rev() {
        let s = stream.symbol(k).expect("depth within known symbols");
        cloud = system.map(s).image_unchecked(&cloud);
    }
    cloud
}

/// Approximates `a_ω` by `f_{[ω]_n}(B)` with `n` doubled until the image
/// has diameter at most `tol`.
///
/// With `B` the box corners (see [`project_from_box`]) the residual also
/// bounds the distance to `a_ω` for affine and monotone 1-D maps.
pub fn project(
    system: &IFSSystem,
    stream: &CodeStream,
    b: &PointSet,
    tol: f64,
) -> Result<ProjectionResult> {
    if !(tol > 0.0) {
        return Err(Error::InvalidPoint(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    stream.check_symbols(system.len())?;
    system.check_cloud(b)?;
    let cap = stream
        .known_len()
        .unwrap_or(MAX_PROJECTION_DEPTH)
        .min(MAX_PROJECTION_DEPTH);
    let mut depth = 16.min(cap);
    loop {
        let cloud = apply_prefix(system, stream, depth, b);
        let residual_diam = diameter(&cloud);
        if residual_diam <= tol {
            return Ok(ProjectionResult {
                point: Point::new(cloud.point(0).to_vec())?,
                depth,
                residual_diam,
            });
        }
        if depth >= cap {
            return Err(Error::ProjectionNonConvergence {
                depth,
                residual_diam,
                last: cloud,
            });
        }
        depth = (depth * 2).min(cap);
    }
}

pub fn project_from_box(
    system: &IFSSystem,
    stream: &CodeStream,
    tol: f64,
) -> Result<ProjectionResult> {
    project(system, stream, &system.domain().corners(), tol)
}

/// `A_w = f_w(A)`.
pub fn cylinder(system: &IFSSystem, w: &Word, a: &PointSet) -> Result<PointSet> {
    let f = compose_word(system.maps(), w)?;
    f.image(a)
}

/// All words of length `len` over `count` symbols, lexicographic.
pub fn enumerate_words(count: usize, len: usize) -> impl Iterator<Item = Word> {
    let total = (count as u128).pow(len as u32);
    (0..total).map(move |mut idx| {
        let mut symbols = vec![0usize; len];
        for slot in symbols.iter_mut().rev() {
            *slot = (idx % count as u128) as usize;
            idx /= count as u128;
        }
        Word::new(symbols)
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivarianceReport {
    pub max_error: f64,
    /// 0-based symbol and stream text at the maximum.
    pub worst: Option<(usize, String)>,
    pub passed: bool,
}

/// Max over streams `ω` and symbols `i` of `|π(iω) - f_i(π(ω))|`.
pub fn check_equivariance(
    system: &IFSSystem,
    streams: &[CodeStream],
    tol: f64,
) -> Result<EquivarianceReport> {
    let proj_tol = tol * 1e-2;
    let mut max_error = 0.0;
    let mut worst = None;
    for stream in streams {
        let base = project_from_box(system, stream, proj_tol)?;
        for i in 0..system.len() {
            let lhs = project_from_box(system, &shift_prepend(i, stream, system.len())?, proj_tol)?;
            let rhs = system.map(i).eval(&base.point)?;
            let err = euclid(lhs.point.coords(), rhs.coords());
            if worst.is_none() || err > max_error {
                max_error = err;
                worst = Some((i, stream.to_string()));
            }
        }
    }
    Ok(EquivarianceReport {
        max_error,
        worst,
        passed: max_error <= tol,
    })
}

/// `max_{|w| = n} diameter(f_w(A))`: two streams sharing an `n`-prefix
/// project at most this far apart.
pub fn continuity_modulus(system: &IFSSystem, a: &PointSet, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::Parse("continuity modulus needs n >= 1".into()));
    }
    check_word_budget(system.len(), n)?;
    if a.dim() != system.dim() {
        return Err(Error::DimensionMismatch {
            expected: system.dim(),
            found: a.dim(),
        });
    }
    // Words are grown on the outside: f_{iw}(A) = f_i(f_w(A)).
    fn walk(system: &IFSSystem, cloud: &PointSet, remaining: usize) -> f64 {
        if remaining == 0 {
            return diameter(cloud);
        }
        (0..system.len())
            .map(|i| walk(system, &system.map(i).image_unchecked(cloud), remaining - 1))
            .fold(0.0, f64::max)
    }
    Ok((0..system.len())
        .into_par_iter()
        .map(|i| walk(system, &system.map(i).image_unchecked(a), n - 1))
        .reduce(|| 0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::system::fixtures::*;

    fn w(s: &str) -> Word {
        s.parse().unwrap()
    }

    fn cs(s: &str) -> CodeStream {
        s.parse().unwrap()
    }

    #[test]
    fn parse_and_display() {
        assert_eq!(w("312").symbols(), &[2, 0, 1]);
        assert_eq!(w("").len(), 0);
        assert_eq!(w("10,2").symbols(), &[9, 1]);
        assert!("1a".parse::<Word>().is_err());
        assert!("0".parse::<Word>().is_err());
        assert_eq!(cs("1|2").to_string(), "1|2");
        assert_eq!(Word::new(vec![9, 0]).to_string(), "10,1");
        assert!("1|".parse::<CodeStream>().is_err());
        assert_eq!(cs("12"), CodeStream::truncated(w("12")));
    }

    #[test]
    fn prefix_examples() {
        assert_eq!(prefix(&cs("|12"), 5).unwrap(), w("12121"));
        assert_eq!(prefix(&cs("3|12"), 0).unwrap(), Word::empty());
        assert_eq!(prefix_word(&w("312"), 2).unwrap(), w("31"));
        assert!(prefix_word(&w("312"), 4).is_err());
        assert!(prefix(&cs("12"), 3).is_err());
    }

    #[test]
    fn distance_examples() {
        assert_eq!(
            code_distance(&cs("|12"), &cs("|12"), 10),
            CodeDistance::Exact(0.0)
        );
        assert_eq!(
            code_distance(&cs("|12"), &cs("1|2"), 10),
            CodeDistance::Exact(0.125)
        );
        assert_eq!(
            code_distance(&cs("|12"), &cs("|11"), 10),
            CodeDistance::Exact(0.25)
        );
        assert_eq!(
            code_distance(&cs("|1"), &cs("|2"), 10),
            CodeDistance::Exact(0.5)
        );
        assert_eq!(
            code_distance(&cs("12|1"), &cs("12|2"), 10),
            CodeDistance::Exact(0.125)
        );
        // Same infinite word written two ways.
        assert_eq!(
            code_distance(&cs("1|21"), &cs("|12"), 1),
            CodeDistance::Exact(0.0)
        );
        let t = code_distance(&cs("1212"), &cs("|12"), 3);
        assert_eq!(t, CodeDistance::AtMost(0.125));
        assert!(!t.is_exact());
        assert_eq!(
            code_distance(&cs("1211"), &cs("|12"), 8),
            CodeDistance::Exact(1.0 / 16.0)
        );
    }

    #[test]
    fn shift_examples() {
        let s = shift_prepend(0, &cs("|2"), 2).unwrap();
        assert_eq!(s, cs("1|2"));
        let alpha = cs("2|12");
        for m in 0..6 {
            assert_eq!(
                prefix(&shift_prepend(1, &alpha, 2).unwrap(), m + 1).unwrap(),
                prefix(&alpha, m).unwrap().prepend(1)
            );
        }
        let twice = shift_prepend(0, &shift_prepend(1, &alpha, 2).unwrap(), 2).unwrap();
        assert_eq!(prefix(&twice, 2).unwrap(), w("12"));
        assert!(shift_prepend(2, &alpha, 2).is_err());
    }

    #[test]
    fn projection_examples() {
        let c = cantor();
        let r = project_from_box(&c, &cs("|2"), 1e-12).unwrap();
        assert!((r.point.coords()[0] - 1.0).abs() <= 1e-12);
        assert!(r.residual_diam <= 1e-12);
        let r = project_from_box(&c, &cs("1|2"), 1e-12).unwrap();
        assert!((r.point.coords()[0] - 1.0 / 3.0).abs() <= 1e-12);
        let r = project_from_box(&quadratic(), &cs("|1"), 1e-12).unwrap();
        assert!(r.point.coords()[0].abs() <= 1e-12);
        assert!(matches!(
            project_from_box(&c, &cs("12"), 1e-12),
            Err(Error::ProjectionNonConvergence { depth: 2, .. })
        ));
        assert!(project_from_box(&c, &cs("|3"), 1e-6).is_err());
    }

    #[test]
    fn cylinder_examples() {
        let c = cantor();
        let a = PointSet::from_scalars(&[0.0, 2.0 / 9.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
        let c1 = cylinder(&c, &w("1"), &a).unwrap();
        assert!((diameter(&c1) - 1.0 / 3.0).abs() < 1e-15);
        for n in 1..6 {
            let word = Word::new(vec![0; n]);
            let d = diameter(&cylinder(&c, &word, &a).unwrap());
            assert!((d - 3f64.powi(-(n as i32))).abs() < 1e-15);
        }
        assert!(matches!(
            cylinder(&c, &Word::empty(), &a),
            Err(Error::EmptyWord)
        ));
    }

    #[test]
    fn equivariance_examples() {
        let c = cantor();
        let r = check_equivariance(&c, &[cs("|2"), cs("|1"), cs("2|12")], 1e-9).unwrap();
        assert!(r.passed, "{r:?}");
        assert!(r.max_error <= 1e-9);
    }

    #[test]
    fn continuity_modulus_on_cantor_and_single_map() {
        let c = cantor();
        let a = PointSet::from_scalars(&[0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0]).unwrap();
        let mut prev = f64::INFINITY;
        for n in 1..=6 {
            let m = continuity_modulus(&c, &a, n).unwrap();
            assert!(m <= prev);
            assert!((m - 3f64.powi(-(n as i32))).abs() < 1e-15);
            prev = m;
        }
        let single = half();
        let b = PointSet::from_scalars(&[0.0, 1.0]).unwrap();
        assert_eq!(continuity_modulus(&single, &b, 1).unwrap(), 0.5);
        assert!(continuity_modulus(&c, &a, 0).is_err());
    }

    #[test]
    fn word_enumeration_order() {
        let words: Vec<String> = enumerate_words(2, 2).map(|w| w.to_string()).collect();
        assert_eq!(words, ["11", "12", "21", "22"]);
        assert_eq!(enumerate_words(3, 0).count(), 1);
    }
}
