//! Encoder topologies.
//!
//! A [`Cover`] lists the source index sets seen by each encoder. Indices are
//! 0-based in this API; [`Cover::from_one_based`] and [`Cover::to_one_based`]
//! convert at file and CLI boundaries.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{GaussianSource, MAX_SOURCES};

/// Bitmask over source indices `0..MAX_SOURCES`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub struct IndexSet(u16);

impl IndexSet {
    pub fn from_indices(indices: impl IntoIterator<Item = usize>) -> Self {
        Self(indices.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn full(l: usize) -> Self {
        Self((1u16 << l) - 1)
    }

    pub fn bits(self) -> u16 {
        self.0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 & (1 << i) != 0
    }

    pub fn is_subset(self, other: IndexSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn union(self, other: IndexSet) -> Self {
        Self(self.0 | other.0)
    }

    pub fn iter(self) -> impl Iterator<Item = usize> {
        (0..16).filter(move |&i| self.contains(i))
    }

    pub fn to_vec(self) -> Vec<usize> {
        self.iter().collect()
    }

    /// Image of the set under `perm`.
    pub fn relabel(self, perm: &[usize]) -> Self {
        Self::from_indices(self.iter().map(|i| perm[i]))
    }
}

impl PartialOrd for IndexSet {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Size first, then lexicographic on the sorted element lists.
impl Ord for IndexSet {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.len()
            .cmp(&other.len())
            .then_with(|| self.to_vec().cmp(&other.to_vec()))
    }
}

impl fmt::Display for IndexSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.iter().map(|i| (i + 1).to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

/// A family of nonempty index sets whose union is `{0..L}`, kept in
/// canonical order without duplicates.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Cover {
    l: usize,
    sets: Vec<IndexSet>,
}

impl Cover {
    pub fn new(l: usize, sets: &[Vec<usize>]) -> Result<Self> {
        if l == 0 || l > MAX_SOURCES {
            return Err(Error::NotACover(format!("L = {l} is outside 1..={MAX_SOURCES}")));
        }
        let mut out = Vec::with_capacity(sets.len());
        for set in sets {
            if set.is_empty() {
                return Err(Error::NotACover("empty encoder set".into()));
            }
            if let Some(&bad) = set.iter().find(|&&i| i >= l) {
                return Err(Error::NotACover(format!(
                    "index {} out of range 1..={l}",
                    bad + 1
                )));
            }
            out.push(IndexSet::from_indices(set.iter().copied()));
        }
        Self::from_sets(l, out)
    }

    /// Same as [`Cover::new`] with 1-based indices.
    pub fn from_one_based(l: usize, sets: &[Vec<usize>]) -> Result<Self> {
        let mut shifted = Vec::with_capacity(sets.len());
        for set in sets {
            let mut s = Vec::with_capacity(set.len());
            for &i in set {
                if i == 0 {
                    return Err(Error::NotACover("index 0 in a 1-based cover".into()));
                }
                s.push(i - 1);
            }
            shifted.push(s);
        }
        Self::new(l, &shifted)
    }

    pub fn from_sets(l: usize, mut sets: Vec<IndexSet>) -> Result<Self> {
        let union = sets.iter().fold(IndexSet::default(), |u, s| u.union(*s));
        if union != IndexSet::full(l) {
            let missing: Vec<String> = (0..l)
                .filter(|&i| !union.contains(i))
                .map(|i| (i + 1).to_string())
                .collect();
            return Err(Error::NotACover(format!(
                "indices {} are not observed by any encoder",
                missing.join(",")
            )));
        }
        if sets.iter().any(|s| s.is_empty()) {
            return Err(Error::NotACover("empty encoder set".into()));
        }
        sets.sort();
        sets.dedup();
        Ok(Self { l, sets })
    }

    pub fn centralized(l: usize) -> Result<Self> {
        Self::from_sets(l, vec![IndexSet::full(l)])
    }

    pub fn distributed(l: usize) -> Result<Self> {
        Self::from_sets(l, (0..l).map(|i| IndexSet::from_indices([i])).collect())
    }

    pub fn num_sources(&self) -> usize {
        self.l
    }

    pub fn sets(&self) -> &[IndexSet] {
        &self.sets
    }

    pub fn to_one_based(&self) -> Vec<Vec<usize>> {
        self.sets
            .iter()
            .map(|s| s.iter().map(|i| i + 1).collect())
            .collect()
    }

    /// Pairs `(i, j)`, `i < j`, that no single encoder observes jointly.
    pub fn uncovered_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for i in 0..self.l {
            for j in i + 1..self.l {
                let pair = IndexSet::from_indices([i, j]);
                if !self.sets.iter().any(|s| pair.is_subset(*s)) {
                    out.push((i, j));
                }
            }
        }
        out
    }

    /// True when every set of `other` fits inside some set of `self`.
    pub fn dominates(&self, other: &Cover) -> Result<bool> {
        self.check_dim(other)?;
        Ok(other
            .sets
            .iter()
            .all(|s| self.sets.iter().any(|t| s.is_subset(*t))))
    }

    pub fn equivalent(&self, other: &Cover) -> Result<bool> {
        Ok(self.dominates(other)? && other.dominates(self)?)
    }

    /// Drops every set contained in another one.
    pub fn reduce(&self) -> Cover {
        let sets: Vec<IndexSet> = self
            .sets
            .iter()
            .filter(|s| !self.sets.iter().any(|t| t != *s && s.is_subset(*t)))
            .copied()
            .collect();
        Cover { l: self.l, sets }
    }

    pub fn is_non_redundant(&self) -> bool {
        self.reduce().sets.len() == self.sets.len()
    }

    /// Relabels sources: index `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Cover> {
        if perm.len() != self.l {
            return Err(Error::DimensionMismatch {
                expected: self.l,
                found: perm.len(),
            });
        }
        Cover::from_sets(self.l, self.sets.iter().map(|s| s.relabel(perm)).collect())
    }

    fn check_dim(&self, other: &Cover) -> Result<()> {
        if self.l != other.l {
            return Err(Error::DimensionMismatch {
                expected: self.l,
                found: other.l,
            });
        }
        Ok(())
    }
}

impl fmt::Display for Cover {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.sets.iter().map(|s| s.to_string()).collect();
        write!(f, "{{{}}}", items.join(","))
    }
}

impl Serialize for Cover {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_one_based().serialize(s)
    }
}

/// The five canonical encoder topologies for `L ≤ 3`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    /// `{{1,..,L}}`
    Centralized,
    /// `{{1},..,{L}}`
    Distributed,
    /// `{{1,2},{3}}`
    PairPlusSingleton,
    /// `{{1,2},{1,3}}`
    TwoPairs,
    /// `{{1,2},{1,3},{2,3}}`
    Triangle,
}

impl Topology {
    pub const ALL: [Topology; 5] = [
        Topology::Centralized,
        Topology::Distributed,
        Topology::PairPlusSingleton,
        Topology::TwoPairs,
        Topology::Triangle,
    ];

    /// Canonical representative, if this topology exists for `l` sources.
    pub fn canonical_cover(self, l: usize) -> Option<Cover> {
        let s = |v: &[usize]| v.to_vec();
        let sets = match (self, l) {
            (Topology::Centralized, _) => return Cover::centralized(l).ok(),
            (Topology::Distributed, _) => return Cover::distributed(l).ok(),
            (Topology::PairPlusSingleton, 3) => vec![s(&[0, 1]), s(&[2])],
            (Topology::TwoPairs, 3) => vec![s(&[0, 1]), s(&[0, 2])],
            (Topology::Triangle, 3) => vec![s(&[0, 1]), s(&[0, 2]), s(&[1, 2])],
            _ => return None,
        };
        Cover::new(l, &sets).ok()
    }

    pub fn name(self) -> &'static str {
        match self {
            Topology::Centralized => "centralized",
            Topology::Distributed => "distributed",
            Topology::PairPlusSingleton => "pair-plus-singleton",
            Topology::TwoPairs => "two-pairs",
            Topology::Triangle => "triangle",
        }
    }
}

impl fmt::Display for Topology {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Topology {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Topology::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::UnsupportedTopology(s.to_string()))
    }
}

/// Canonical topology of a cover and the relabeling that maps it there.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TopologyClass {
    pub tag: Topology,
    /// `relabeling[i]` is the canonical label of input source `i`.
    pub relabeling: Vec<usize>,
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn rec(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for v in 0..used.len() {
            if !used[v] {
                used[v] = true;
                prefix.push(v);
                rec(prefix, used, out);
                prefix.pop();
                used[v] = false;
            }
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Classifies a cover of `L ≤ 3` sources by brute force over relabelings.
/// Permutations are tried in lexicographic order, so the first witness wins.
pub fn classify(c: &Cover) -> Result<TopologyClass> {
    let l = c.num_sources();
    if l > 3 {
        return Err(Error::UnsupportedTopology(format!(
            "exact classification needs L <= 3, got {l}"
        )));
    }
    let reduced = c.reduce();
    for perm in permutations(l) {
        let image = reduced.relabel(&perm)?;
        for tag in Topology::ALL {
            if tag.canonical_cover(l).as_ref() == Some(&image) {
                return Ok(TopologyClass {
                    tag,
                    relabeling: perm,
                });
            }
        }
    }
    Err(Error::Unclassifiable(l))
}

/// `½ Σ θᵢⱼ²` over the uncovered pairs: the predicted d² coefficient of the
/// gap to centralized coding.
pub fn gap_coefficient(src: &GaussianSource, c: &Cover) -> Result<f64> {
    if src.len() != c.num_sources() {
        return Err(Error::DimensionMismatch {
            expected: src.len(),
            found: c.num_sources(),
        });
    }
    let theta = src.theta();
    Ok(0.5
        * c.uncovered_pairs()
            .into_iter()
            .fold(0.0, |acc, (i, j)| acc + theta.get(i, j).powi(2)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::SymMatrix;

    fn cov(l: usize, sets: &[&[usize]]) -> Cover {
        let v: Vec<Vec<usize>> = sets.iter().map(|s| s.to_vec()).collect();
        Cover::from_one_based(l, &v).unwrap()
    }

    #[test]
    fn construction_and_canonical_order() {
        assert!(Cover::from_one_based(3, &[vec![1, 2], vec![3]]).is_ok());
        assert!(matches!(
            Cover::from_one_based(3, &[vec![1, 2]]),
            Err(Error::NotACover(_))
        ));
        assert!(matches!(
            Cover::from_one_based(3, &[vec![1, 2], vec![]]),
            Err(Error::NotACover(_))
        ));
        assert!(matches!(
            Cover::from_one_based(2, &[vec![1, 3]]),
            Err(Error::NotACover(_))
        ));
        let c = cov(2, &[&[1, 2], &[2], &[1]]);
        assert_eq!(c.to_one_based(), vec![vec![1], vec![2], vec![1, 2]]);
    }

    #[test]
    fn uncovered_pair_examples() {
        assert!(cov(3, &[&[1, 2, 3]]).uncovered_pairs().is_empty());
        assert_eq!(cov(3, &[&[1, 2], &[3]]).uncovered_pairs(), vec![(0, 2), (1, 2)]);
        assert_eq!(cov(3, &[&[1, 2], &[1, 3]]).uncovered_pairs(), vec![(1, 2)]);
        assert_eq!(
            cov(3, &[&[1], &[2], &[3]]).uncovered_pairs(),
            vec![(0, 1), (0, 2), (1, 2)]
        );
    }

    #[test]
    fn dominance_examples() {
        let two_pairs = cov(3, &[&[1, 2], &[1, 3]]);
        let pair_single = cov(3, &[&[1, 2], &[3]]);
        let triangle = cov(3, &[&[1, 2], &[1, 3], &[2, 3]]);
        let dist = Cover::distributed(3).unwrap();
        assert!(two_pairs.dominates(&pair_single).unwrap());
        assert!(triangle.dominates(&two_pairs).unwrap());
        assert!(!two_pairs.dominates(&triangle).unwrap());
        assert!(!dist.dominates(&pair_single).unwrap());
        for c in [&two_pairs, &pair_single, &triangle, &dist] {
            assert!(c.dominates(&dist).unwrap());
            assert!(Cover::centralized(3).unwrap().dominates(c).unwrap());
        }
        assert!(matches!(
            dist.dominates(&Cover::distributed(2).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn equivalence_and_reduction_examples() {
        let a = cov(3, &[&[1, 2], &[2, 3]]);
        let b = cov(3, &[&[1], &[1, 2], &[2, 3]]);
        assert!(a.equivalent(&b).unwrap());
        assert!(a.equivalent(&a).unwrap());
        assert!(!cov(3, &[&[1, 2], &[3]])
            .equivalent(&Cover::distributed(3).unwrap())
            .unwrap());
        assert_eq!(b.reduce(), a);
        assert!(!b.is_non_redundant());
        let ps = cov(3, &[&[1, 2], &[3]]);
        assert_eq!(ps.reduce(), ps);
        let dup = cov(2, &[&[1], &[1], &[1, 2]]);
        assert_eq!(dup.reduce().to_one_based(), vec![vec![1, 2]]);
    }

    #[test]
    fn classification_examples() {
        let c = classify(&cov(3, &[&[1, 3], &[2, 3]])).unwrap();
        assert_eq!(c.tag, Topology::TwoPairs);
        // 1→2, 2→3, 3→1 in 1-based labels
        assert_eq!(c.relabeling, vec![1, 2, 0]);

        let c = classify(&Cover::distributed(3).unwrap()).unwrap();
        assert_eq!(c.tag, Topology::Distributed);
        assert_eq!(c.relabeling, vec![0, 1, 2]);

        let c = classify(&cov(3, &[&[2, 3], &[1, 2], &[1, 3]])).unwrap();
        assert_eq!(c.tag, Topology::Triangle);

        let c = classify(&cov(3, &[&[1, 3], &[2]])).unwrap();
        assert_eq!(c.tag, Topology::PairPlusSingleton);
        let image = cov(3, &[&[1, 3], &[2]]).relabel(&c.relabeling).unwrap();
        assert_eq!(image, Topology::PairPlusSingleton.canonical_cover(3).unwrap());

        assert_eq!(classify(&Cover::distributed(2).unwrap()).unwrap().tag, Topology::Distributed);
        assert_eq!(classify(&cov(2, &[&[1], &[1, 2]])).unwrap().tag, Topology::Centralized);
        assert!(matches!(
            classify(&Cover::distributed(4).unwrap()),
            Err(Error::UnsupportedTopology(_))
        ));
    }

    #[test]
    fn every_three_source_cover_classifies() {
        // all 2^7 - 1 nonempty families of nonempty subsets of {1,2,3}
        for mask in 1u32..(1 << 7) {
            let sets: Vec<IndexSet> = (1u16..8)
                .filter(|s| mask & (1 << (s - 1)) != 0)
                .map(IndexSet)
                .collect();
            if let Ok(c) = Cover::from_sets(3, sets) {
                let class = classify(&c).unwrap();
                let image = c.reduce().relabel(&class.relabeling).unwrap();
                assert_eq!(Some(image), class.tag.canonical_cover(3));
            }
        }
    }

    #[test]
    fn gap_coefficient_examples() {
        let src = GaussianSource::new(
            SymMatrix::from_lower(3, &[1.0, 0.5, 1.0, 0.5, 0.5, 1.0]).unwrap(),
        )
        .unwrap();
        assert_eq!(gap_coefficient(&src, &Cover::centralized(3).unwrap()).unwrap(), 0.0);
        let dist = gap_coefficient(&src, &Cover::distributed(3).unwrap()).unwrap();
        assert!((dist - 0.375).abs() < 1e-14);
        let ps = gap_coefficient(&src, &cov(3, &[&[1, 2], &[3]])).unwrap();
        assert!((ps - 0.25).abs() < 1e-14);
        assert!(matches!(
            gap_coefficient(&src, &Cover::distributed(2).unwrap()),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
