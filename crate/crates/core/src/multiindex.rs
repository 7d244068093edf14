//! Finitely supported multi-indices and truncated index sets.
//!
//! A [`MultiIndex`] stores only its nonzero entries as `(position, exponent)`
//! pairs with positions starting at 1, so the zero index is the empty list.
//! The total order implemented on `MultiIndex` is the graded order used for
//! storage everywhere in the crate: ascending `|α|`, then larger exponents at
//! lower positions first (so `ε₁` precedes `ε₂`, and `2ε₁` precedes `ε₁+ε₂`).

use std::cmp::Ordering;
use std::collections::HashMap;
use std::fmt;
use std::ops::{Add, Range};
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::One;

use crate::error::{Error, Result};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct MultiIndex {
    entries: Vec<(u32, u32)>,
}

impl MultiIndex {
    pub fn zero() -> Self {
        Self::default()
    }

    /// The unit index `ε_k`.
    pub fn unit(k: u32) -> Self {
        assert!(k >= 1, "positions start at 1");
        Self {
            entries: vec![(k, 1)],
        }
    }

    /// Builds an index from `(position, exponent)` pairs in any order.
    /// Repeated positions are summed and zero exponents dropped.
    pub fn from_entries<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Result<Self> {
        let mut entries: Vec<(u32, u32)> = Vec::new();
        for (k, e) in pairs {
            if k == 0 {
                return Err(Error::Input("multi-index positions start at 1".into()));
            }
            if e == 0 {
                continue;
            }
            entries.push((k, e));
        }
        entries.sort_unstable();
        let mut merged: Vec<(u32, u32)> = Vec::with_capacity(entries.len());
        for (k, e) in entries {
            match merged.last_mut() {
                Some(last) if last.0 == k => last.1 += e,
                _ => merged.push((k, e)),
            }
        }
        Ok(Self { entries: merged })
    }

    /// Builds an index from the exponents of positions `1, 2, …`.
    pub fn from_dense(exponents: &[u32]) -> Self {
        let entries = exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, &e)| (i as u32 + 1, e))
            .collect();
        Self { entries }
    }

    pub fn entries(&self) -> &[(u32, u32)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    /// `|α|`, the sum of all exponents.
    pub fn order(&self) -> u32 {
        self.entries.iter().map(|&(_, e)| e).sum()
    }

    /// Exponent at position `k` (zero when absent).
    pub fn get(&self, k: u32) -> u32 {
        self.entries
            .binary_search_by_key(&k, |&(pos, _)| pos)
            .map(|i| self.entries[i].1)
            .unwrap_or(0)
    }

    /// Largest position carrying a nonzero exponent, 0 for the zero index.
    pub fn max_position(&self) -> u32 {
        self.entries.last().map(|&(k, _)| k).unwrap_or(0)
    }

    pub fn to_dense(&self, len: usize) -> Vec<u32> {
        let mut out = vec![0; len];
        for &(k, e) in &self.entries {
            if (k as usize) <= len {
                out[k as usize - 1] = e;
            }
        }
        out
    }

    /// Componentwise `self ≤ other`.
    pub fn is_below(&self, other: &MultiIndex) -> bool {
        self.entries.iter().all(|&(k, e)| other.get(k) >= e)
    }

    /// Componentwise difference, `None` when some entry would go negative.
    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        if !other.is_below(self) {
            return None;
        }
        let entries = self
            .entries
            .iter()
            .filter_map(|&(k, e)| {
                let d = e - other.get(k);
                (d > 0).then_some((k, d))
            })
            .collect();
        Some(MultiIndex { entries })
    }

    /// `α! = Π α_k!`, exactly.
    pub fn factorial(&self) -> BigUint {
        self.entries
            .iter()
            .fold(BigUint::one(), |acc, &(_, e)| acc * factorial(e))
    }

    /// `ln (2ℕ)^{rα} = Σ r·α_k·ln(2k)`.
    pub fn log_weight(&self, r: f64) -> f64 {
        self.entries
            .iter()
            .map(|&(k, e)| r * e as f64 * (2.0 * k as f64).ln())
            .sum()
    }

    /// `(2ℕ)^{rα} = Π (2k)^{r·α_k}`, accumulated in log space.
    pub fn weight(&self, r: f64) -> Result<f64> {
        let log = self.log_weight(r);
        if log > f64::MAX.ln() {
            return Err(Error::Overflow(format!(
                "(2N)^(r*alpha) for alpha = {self}, r = {r}: log-weight {log:.3}"
            )));
        }
        Ok(log.exp())
    }

    /// All `β ≤ α` (including `0` and `α`), in graded order.
    pub fn sub_indices(&self) -> Vec<MultiIndex> {
        let mut out = vec![MultiIndex::zero()];
        for &(k, e) in &self.entries {
            let mut next = Vec::with_capacity(out.len() * (e as usize + 1));
            for base in &out {
                for j in 0..=e {
                    let mut entries = base.entries.clone();
                    if j > 0 {
                        entries.push((k, j));
                    }
                    next.push(MultiIndex { entries });
                }
            }
            out = next;
        }
        out.sort();
        out
    }

    /// Every ordered pair `(γ, α−γ)` with `0 < γ < α`, ordered by `γ`.
    pub fn interior_splits(&self) -> Vec<(MultiIndex, MultiIndex)> {
        self.sub_indices()
            .into_iter()
            .filter(|g| !g.is_zero() && g != self)
            .map(|g| {
                let rest = self.checked_sub(&g).expect("sub-index");
                (g, rest)
            })
            .collect()
    }
}

pub(crate) fn factorial(n: u32) -> BigUint {
    (2..=n).fold(BigUint::one(), |acc, i| acc * i)
}

impl Ord for MultiIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.order().cmp(&other.order()) {
            Ordering::Equal => {}
            ord => return ord,
        }
        // Walk positions in increasing order; the first position with
        // differing exponents decides, larger exponent first.
        let (mut i, mut j) = (0, 0);
        let (a, b) = (&self.entries, &other.entries);
        while i < a.len() || j < b.len() {
            let pa = a.get(i).map(|x| x.0).unwrap_or(u32::MAX);
            let pb = b.get(j).map(|x| x.0).unwrap_or(u32::MAX);
            let k = pa.min(pb);
            let ea = if pa == k { a[i].1 } else { 0 };
            let eb = if pb == k { b[j].1 } else { 0 };
            if ea != eb {
                return eb.cmp(&ea);
            }
            if pa == k {
                i += 1;
            }
            if pb == k {
                j += 1;
            }
        }
        Ordering::Equal
    }
}

impl PartialOrd for MultiIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Add for &MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: &MultiIndex) -> MultiIndex {
        let (a, b) = (&self.entries, &rhs.entries);
        let mut entries = Vec::with_capacity(a.len() + b.len());
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].0.cmp(&b[j].0) {
                Ordering::Less => {
                    entries.push(a[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    entries.push(b[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    entries.push((a[i].0, a[i].1 + b[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        entries.extend_from_slice(&a[i..]);
        entries.extend_from_slice(&b[j..]);
        MultiIndex { entries }
    }
}

impl Add for MultiIndex {
    type Output = MultiIndex;

    fn add(self, rhs: MultiIndex) -> MultiIndex {
        &self + &rhs
    }
}

/// Text form `"k1^e1 k2^e2"`, or `"0"` for the zero index.
impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.entries.is_empty() {
            return f.write_str("0");
        }
        for (i, (k, e)) in self.entries.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{k}^{e}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "0" {
            return Ok(MultiIndex::zero());
        }
        let bad = || Error::Parse(format!("malformed multi-index {s:?}; expected \"k^e k^e ...\" or \"0\""));
        let mut pairs = Vec::new();
        for tok in s.split_whitespace() {
            let (k, e) = tok.split_once('^').ok_or_else(bad)?;
            let k: u32 = k.parse().map_err(|_| bad())?;
            let e: u32 = e.parse().map_err(|_| bad())?;
            if k == 0 || e == 0 {
                return Err(bad());
            }
            pairs.push((k, e));
        }
        if pairs.is_empty() {
            return Err(bad());
        }
        let mut sorted = pairs.clone();
        sorted.sort_unstable();
        sorted.dedup_by_key(|p| p.0);
        if sorted.len() != pairs.len() {
            return Err(bad());
        }
        MultiIndex::from_entries(pairs)
    }
}

/// Finite projection of the index set: support in `{1..K}` and `|α| ≤ P`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Truncation {
    k: u32,
    p: u32,
}

impl Truncation {
    pub fn new(k: u32, p: u32) -> Result<Self> {
        if k == 0 {
            return Err(Error::Input("truncation needs K >= 1".into()));
        }
        Ok(Self { k, p })
    }

    /// Stochastic dimension (largest active position).
    pub fn dimension(&self) -> u32 {
        self.k
    }

    /// Largest total order kept.
    pub fn max_order(&self) -> u32 {
        self.p
    }

    /// `binomial(K+P, K)`.
    pub fn size(&self) -> usize {
        let (k, p) = (self.k as u128, self.p as u128);
        let mut acc: u128 = 1;
        for i in 1..=k.min(p) {
            acc = acc * (k + p - i + 1) / i;
        }
        acc as usize
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        alpha.order() <= self.p && alpha.max_position() <= self.k
    }
}

/// All multi-indices of a truncation in graded order; `0` comes first.
pub fn enumerate(t: Truncation) -> Vec<MultiIndex> {
    let k = t.k as usize;
    let mut out = Vec::with_capacity(t.size());
    let mut buf = vec![0u32; k];
    for level in 0..=t.p {
        compositions(level, 0, &mut buf, &mut out);
    }
    out
}

fn compositions(remaining: u32, pos: usize, buf: &mut [u32], out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex::from_dense(buf));
        buf[pos] = 0;
        return;
    }
    for e in (0..=remaining).rev() {
        buf[pos] = e;
        compositions(remaining - e, pos + 1, buf, out);
    }
    buf[pos] = 0;
}

/// Enumerated truncation with O(1) lookup and precomputed convolution pairs.
///
/// `pairs(a)` lists `(β, α−β)` as positions in this set for every `β ≤ α`,
/// ordered by `β`. The ordering depends only on `α`, so a product computed
/// in two different truncations performs identical arithmetic.
#[derive(Debug)]
pub struct IndexSet {
    trunc: Truncation,
    indices: Vec<MultiIndex>,
    lookup: HashMap<MultiIndex, usize>,
    levels: Vec<Range<usize>>,
    pairs: Vec<Vec<(usize, usize)>>,
}

impl IndexSet {
    pub fn new(trunc: Truncation) -> Self {
        let indices = enumerate(trunc);
        let lookup: HashMap<MultiIndex, usize> = indices
            .iter()
            .enumerate()
            .map(|(i, a)| (a.clone(), i))
            .collect();
        let mut levels = Vec::with_capacity(trunc.p as usize + 1);
        let mut start = 0;
        for level in 0..=trunc.p {
            let end = start + indices[start..].iter().take_while(|a| a.order() == level).count();
            levels.push(start..end);
            start = end;
        }
        let pairs = indices
            .iter()
            .map(|alpha| {
                alpha
                    .sub_indices()
                    .into_iter()
                    .map(|beta| {
                        let rest = alpha.checked_sub(&beta).expect("sub-index");
                        (lookup[&beta], lookup[&rest])
                    })
                    .collect()
            })
            .collect();
        Self {
            trunc,
            indices,
            lookup,
            levels,
            pairs,
        }
    }

    pub fn truncation(&self) -> Truncation {
        self.trunc
    }

    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn get(&self, i: usize) -> &MultiIndex {
        &self.indices[i]
    }

    pub fn position(&self, alpha: &MultiIndex) -> Option<usize> {
        self.lookup.get(alpha).copied()
    }

    /// Positions of all indices with `|α| = level`.
    pub fn level(&self, level: u32) -> Range<usize> {
        self.levels
            .get(level as usize)
            .cloned()
            .unwrap_or(self.len()..self.len())
    }

    pub fn pairs(&self, i: usize) -> &[(usize, usize)] {
        &self.pairs[i]
    }

    /// Pairs with both parts nonzero.
    pub fn interior_pairs(&self, i: usize) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.pairs[i].iter().copied().filter(|&(b, r)| b != 0 && r != 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mi(s: &str) -> MultiIndex {
        s.parse().unwrap()
    }

    #[test]
    fn addition() {
        let e1 = MultiIndex::unit(1);
        assert_eq!(&e1 + &e1, mi("1^2"));
        assert_eq!(
            MultiIndex::from_dense(&[1, 2]) + MultiIndex::from_dense(&[0, 1]),
            MultiIndex::from_dense(&[1, 3])
        );
        let a = mi("2^3 5^1");
        assert_eq!(&a + &MultiIndex::zero(), a);
        assert_eq!((&a + &mi("1^1")).order(), a.order() + 1);
    }

    #[test]
    fn subtraction() {
        assert_eq!(mi("1^2").checked_sub(&MultiIndex::unit(1)), Some(MultiIndex::unit(1)));
        assert_eq!(MultiIndex::unit(1).checked_sub(&MultiIndex::unit(2)), None);
        let a = mi("1^1 4^2");
        assert_eq!(a.checked_sub(&MultiIndex::zero()), Some(a.clone()));
        assert_eq!(a.checked_sub(&a), Some(MultiIndex::zero()));
    }

    #[test]
    fn factorials() {
        assert_eq!(MultiIndex::zero().factorial(), BigUint::from(1u32));
        assert_eq!(MultiIndex::from_dense(&[1, 2]).factorial(), BigUint::from(2u32));
        assert_eq!(MultiIndex::from_dense(&[3, 0, 2]).factorial(), BigUint::from(12u32));
    }

    #[test]
    fn weights() {
        assert_eq!(MultiIndex::unit(1).weight(1.0).unwrap(), 2.0);
        let w = MultiIndex::from_dense(&[1, 2]).weight(1.0).unwrap();
        assert!((w - 32.0).abs() < 1e-12);
        let w = MultiIndex::unit(2).weight(-1.0).unwrap();
        assert!((w - 0.25).abs() < 1e-15);
        assert!(matches!(
            MultiIndex::from_dense(&[0, 0, 0, 0, 0, 0, 0, 0, 0, 200]).weight(20.0),
            Err(Error::Overflow(_))
        ));
    }

    #[test]
    fn enumeration_examples() {
        let t = Truncation::new(1, 3).unwrap();
        let e1 = MultiIndex::unit(1);
        assert_eq!(
            enumerate(t),
            vec![MultiIndex::zero(), e1.clone(), &e1 + &e1, mi("1^3")]
        );
        assert_eq!(enumerate(Truncation::new(2, 2).unwrap()).len(), 6);
        assert_eq!(enumerate(Truncation::new(3, 4).unwrap()).len(), 35);
        assert_eq!(
            enumerate(Truncation::new(2, 2).unwrap()),
            vec![
                mi("0"),
                mi("1^1"),
                mi("2^1"),
                mi("1^2"),
                mi("1^1 2^1"),
                mi("2^2")
            ]
        );
    }

    #[test]
    fn enumeration_is_sorted_and_unique() {
        for k in 1..=4 {
            for p in 0..=5 {
                let t = Truncation::new(k, p).unwrap();
                let list = enumerate(t);
                assert_eq!(list.len(), t.size());
                assert!(list.windows(2).all(|w| w[0] < w[1]));
                assert!(list.iter().all(|a| t.contains(a)));
            }
        }
    }

    #[test]
    fn splits() {
        let e1 = MultiIndex::unit(1);
        let e2 = MultiIndex::unit(2);
        assert_eq!(mi("1^2").interior_splits(), vec![(e1.clone(), e1.clone())]);
        assert_eq!(
            mi("1^1 2^1").interior_splits(),
            vec![(e1.clone(), e2.clone()), (e2.clone(), e1.clone())]
        );
        assert!(e1.interior_splits().is_empty());
        assert!(MultiIndex::zero().interior_splits().is_empty());
    }

    #[test]
    fn text_round_trip() {
        for s in ["0", "1^2 3^1", "7^1"] {
            assert_eq!(mi(s).to_string(), s);
        }
        assert!("1^0".parse::<MultiIndex>().is_err());
        assert!("0^1".parse::<MultiIndex>().is_err());
        assert!("1^1 1^2".parse::<MultiIndex>().is_err());
        assert!("".parse::<MultiIndex>().is_err());
        assert!("x".parse::<MultiIndex>().is_err());
    }

    #[test]
    fn index_set_pairs_cover_products() {
        let set = IndexSet::new(Truncation::new(3, 3).unwrap());
        for (i, alpha) in set.indices().iter().enumerate() {
            for &(b, r) in set.pairs(i) {
                assert_eq!(set.get(b) + set.get(r), *alpha);
            }
            let expected: usize = alpha.entries().iter().map(|&(_, e)| e as usize + 1).product();
            assert_eq!(set.pairs(i).len(), expected);
        }
        assert_eq!(set.level(0), 0..1);
        assert_eq!(set.level(1), 1..4);
        assert_eq!(set.level(3).len(), 10);
    }
}
