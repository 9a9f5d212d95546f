//! Multi-index combinatorics: the corners of the mixed difference operator and
//! the tensor-product / total-degree index sets.

use std::collections::BTreeMap;
use std::fmt;

use num_traits::{One, Zero};

use crate::error::{Error, Result};

/// Resolution exponents, one per resolution axis. Axis `i` has resolution `2^-alpha[i]`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(entries: Vec<u32>) -> Self {
        MultiIndex(entries)
    }

    pub fn zeros(dim: usize) -> Self {
        MultiIndex(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn entries(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, axis: usize) -> u32 {
        self.0[axis]
    }

    /// Sum of the entries.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    /// Number of strictly positive entries.
    pub fn active_axes(&self) -> usize {
        self.0.iter().filter(|&&a| a > 0).count()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&a| a == 0)
    }

    /// Componentwise `self + offset`.
    pub fn offset(&self, offset: &[u32]) -> MultiIndex {
        debug_assert_eq!(offset.len(), self.dim());
        MultiIndex(self.0.iter().zip(offset).map(|(a, o)| a + o).collect())
    }

    /// Same index with `axis` decremented, `None` at the boundary.
    pub fn decrement(&self, axis: usize) -> Option<MultiIndex> {
        let mut e = self.0.clone();
        e[axis] = e[axis].checked_sub(1)?;
        Some(MultiIndex(e))
    }

    /// Weighted inner product `<alpha, w>`.
    pub fn dot(&self, w: &[f64]) -> f64 {
        self.0.iter().zip(w).map(|(&a, &x)| a as f64 * x).sum()
    }

    /// True when every entry is `<=` the corresponding entry of `other`.
    pub fn le_all(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }
}

impl From<Vec<u32>> for MultiIndex {
    fn from(v: Vec<u32>) -> Self {
        MultiIndex(v)
    }
}

impl<const N: usize> From<[u32; N]> for MultiIndex {
    fn from(v: [u32; N]) -> Self {
        MultiIndex(v.to_vec())
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, a) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{a}")?;
        }
        write!(f, ")")
    }
}

impl fmt::Debug for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// One term of the mixed difference at some index.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SignedCorner {
    pub index: MultiIndex,
    /// `+1` or `-1`.
    pub sign: i8,
}

impl SignedCorner {
    pub fn sign_as<T: One + std::ops::Neg<Output = T>>(&self) -> T {
        if self.sign > 0 {
            T::one()
        } else {
            -T::one()
        }
    }
}

/// Corners of the mixed difference at `alpha`, with signs.
///
/// Corner `m` decrements the axes whose bit is set in `m` (axis 0 is the least
/// significant bit), so `corners(alpha)[0]` is `alpha` itself. Corners that
/// would leave the non-negative orthant are dropped, which leaves
/// `2^(#active axes)` terms.
pub fn corners(alpha: &MultiIndex) -> Vec<SignedCorner> {
    let d = alpha.dim();
    let mut out = Vec::with_capacity(1 << alpha.active_axes());
    'mask: for mask in 0u32..(1u32 << d) {
        let mut entries = alpha.entries().to_vec();
        for (axis, e) in entries.iter_mut().enumerate() {
            if mask & (1 << axis) != 0 {
                match e.checked_sub(1) {
                    Some(v) => *e = v,
                    None => continue 'mask,
                }
            }
        }
        let sign = if mask.count_ones() % 2 == 0 { 1 } else { -1 };
        out.push(SignedCorner {
            index: MultiIndex(entries),
            sign,
        });
    }
    out
}

/// Mixed difference of `values` at `alpha`: the signed sum over its corners.
pub fn mixed_difference<T>(values: &BTreeMap<MultiIndex, T>, alpha: &MultiIndex) -> Result<T>
where
    T: Clone + Zero + std::ops::Sub<Output = T>,
{
    let mut acc = T::zero();
    for c in corners(alpha) {
        let v = values
            .get(&c.index)
            .cloned()
            .ok_or_else(|| Error::MissingCorner(c.index.clone()))?;
        acc = if c.sign > 0 { acc + v } else { acc - v };
    }
    Ok(acc)
}

/// Mixed difference of a function evaluated on demand at each corner.
pub fn mixed_difference_with<T, F>(alpha: &MultiIndex, mut f: F) -> T
where
    T: Zero + std::ops::Sub<Output = T>,
    F: FnMut(&MultiIndex) -> T,
{
    corners(alpha).into_iter().fold(T::zero(), |acc, c| {
        let v = f(&c.index);
        if c.sign > 0 {
            acc + v
        } else {
            acc - v
        }
    })
}

#[derive(Clone, Debug, PartialEq)]
pub enum IndexSetKind {
    TensorProduct { max: Vec<u32> },
    TotalDegree { level: f64, weights: Vec<f64> },
    /// Arbitrary downward-closed or user supplied collection.
    Explicit,
}

/// An admissible collection of multi-indices, iterated in lexicographic order.
#[derive(Clone, Debug, PartialEq)]
pub struct IndexSet {
    kind: IndexSetKind,
    members: Vec<MultiIndex>,
}

const WEIGHT_SUM_TOL: f64 = 1e-12;

impl IndexSet {
    /// All `alpha` with `alpha[i] <= max[i]`.
    pub fn tensor_product(max: &[u32]) -> IndexSet {
        let mut members = Vec::new();
        let mut cur = vec![0u32; max.len()];
        loop {
            members.push(MultiIndex(cur.clone()));
            // odometer increment, last axis fastest (lexicographic order)
            let mut axis = max.len();
            loop {
                if axis == 0 {
                    return IndexSet {
                        kind: IndexSetKind::TensorProduct { max: max.to_vec() },
                        members,
                    };
                }
                axis -= 1;
                if cur[axis] < max[axis] {
                    cur[axis] += 1;
                    break;
                }
                cur[axis] = 0;
            }
        }
    }

    /// All `alpha` with `sum_i weights[i] * alpha[i] <= level`.
    ///
    /// The weights must lie in `(0, 1]` and sum to one.
    pub fn total_degree(level: f64, weights: &[f64]) -> Result<IndexSet> {
        if weights.is_empty() {
            return Err(Error::InvalidArgument("total degree set needs at least one weight".into()));
        }
        if weights.iter().any(|&w| !(w > 0.0 && w <= 1.0)) {
            return Err(Error::InvalidArgument(format!(
                "total degree weights must lie in (0, 1], got {weights:?}"
            )));
        }
        let sum: f64 = weights.iter().sum();
        if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
            return Err(Error::InvalidArgument(format!(
                "total degree weights must sum to 1, got {sum}"
            )));
        }
        if !(level >= 0.0) || !level.is_finite() {
            return Err(Error::InvalidArgument(format!("invalid total degree level {level}")));
        }
        let tol = 1e-12 * (1.0 + level);
        let bounds: Vec<u32> = weights
            .iter()
            .map(|w| ((level + tol) / w).floor() as u32)
            .collect();
        let members = IndexSet::tensor_product(&bounds)
            .members
            .into_iter()
            .filter(|a| a.dot(weights) <= level + tol)
            .collect();
        Ok(IndexSet {
            kind: IndexSetKind::TotalDegree {
                level,
                weights: weights.to_vec(),
            },
            members,
        })
    }

    /// Builds a set from arbitrary members (sorted and deduplicated).
    pub fn explicit(mut members: Vec<MultiIndex>) -> Result<IndexSet> {
        if members.is_empty() {
            return Err(Error::EmptyIndexSet);
        }
        let d = members[0].dim();
        if members.iter().any(|m| m.dim() != d) {
            return Err(Error::InvalidArgument("mixed dimensions in index set".into()));
        }
        members.sort();
        members.dedup();
        Ok(IndexSet {
            kind: IndexSetKind::Explicit,
            members,
        })
    }

    pub fn kind(&self) -> &IndexSetKind {
        &self.kind
    }

    pub fn members(&self) -> &[MultiIndex] {
        &self.members
    }

    pub fn iter(&self) -> std::slice::Iter<'_, MultiIndex> {
        self.members.iter()
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.members.first().map_or(0, |m| m.dim())
    }

    pub fn contains(&self, alpha: &MultiIndex) -> bool {
        self.members.binary_search(alpha).is_ok()
    }

    /// Componentwise maximum over the members.
    pub fn max_index(&self) -> MultiIndex {
        let d = self.dim();
        let mut m = vec![0u32; d];
        for a in &self.members {
            for (mi, &ai) in m.iter_mut().zip(a.entries()) {
                *mi = (*mi).max(ai);
            }
        }
        MultiIndex(m)
    }

    /// True if every corner of every member is itself a member.
    pub fn is_downward_closed(&self) -> bool {
        self.members
            .iter()
            .all(|a| corners(a).iter().all(|c| self.contains(&c.index)))
    }
}

impl<'a> IntoIterator for &'a IndexSet {
    type Item = &'a MultiIndex;
    type IntoIter = std::slice::Iter<'a, MultiIndex>;
    fn into_iter(self) -> Self::IntoIter {
        self.members.iter()
    }
}

/// Per-axis levels of the tensor-product set reaching tolerance `eps`:
/// `L_i = ceil(log2(D / eps) / s_i)`.
pub fn tensor_product_levels(eps: f64, rates_s: &[f64]) -> Vec<u32> {
    let d = rates_s.len() as f64;
    rates_s
        .iter()
        .map(|s| ((d / eps).log2() / s).ceil().max(0.0) as u32)
        .collect()
}

/// Level of the total-degree set reaching tolerance `eps` with weights `delta`.
///
/// `L = log(eps^-1 (log eps^-1)^(2(n-1))) / A` with `A = min_i log(2) s_i / delta_i`
/// and `n` the number of axes attaining the minimum. For `eps >= 1/e` the
/// logarithmic correction is dropped.
pub fn total_degree_level(eps: f64, rates_s: &[f64], delta: &[f64]) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let a: Vec<f64> = rates_s.iter().zip(delta).map(|(s, d)| ln2 * s / d).collect();
    let a_min = a.iter().cloned().fold(f64::INFINITY, f64::min);
    let n = a.iter().filter(|&&x| (x - a_min).abs() <= 1e-12 * a_min).count();
    let inv = 1.0 / eps;
    let log_inv = inv.ln();
    let corr = if log_inv > 1.0 {
        2.0 * (n as f64 - 1.0) * log_inv.ln()
    } else {
        0.0
    };
    ((log_inv + corr) / a_min).max(0.0)
}

/// Total-degree weights proportional to the bias rates.
pub fn weights_from_rates(rates_s: &[f64]) -> Vec<f64> {
    let total: f64 = rates_s.iter().sum();
    rates_s.iter().map(|s| s / total).collect()
}
