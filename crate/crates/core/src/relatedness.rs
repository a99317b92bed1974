//! Pairwise entity relatedness from inlink-set overlap, plus aggregation of
//! a candidate's relatedness to a set of already-resolved entities.
//!
//! All measures are total functions into [0, 1]: unknown entities, empty
//! inlink sets, empty intersections, and degenerate denominators all map to
//! 0 so the disambiguation loop never has to special-case noisy candidates.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use crate::error::Error;
use crate::graph::{EntityId, LinkGraph};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RelatednessMeasure {
    MilneWitten,
    Jaccard,
    Pmi,
    ConditionalProbability,
}

impl RelatednessMeasure {
    pub const ALL: [RelatednessMeasure; 4] = [
        RelatednessMeasure::MilneWitten,
        RelatednessMeasure::Jaccard,
        RelatednessMeasure::Pmi,
        RelatednessMeasure::ConditionalProbability,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RelatednessMeasure::MilneWitten => "milne_witten",
            RelatednessMeasure::Jaccard => "jaccard",
            RelatednessMeasure::Pmi => "pmi",
            RelatednessMeasure::ConditionalProbability => "conditional_probability",
        }
    }

    /// True for measures where argument order is irrelevant.
    pub fn is_symmetric(&self) -> bool {
        !matches!(self, RelatednessMeasure::ConditionalProbability)
    }
}

impl fmt::Display for RelatednessMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for RelatednessMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "milne_witten" | "milne-witten" | "mw" => Ok(RelatednessMeasure::MilneWitten),
            "jaccard" => Ok(RelatednessMeasure::Jaccard),
            "pmi" => Ok(RelatednessMeasure::Pmi),
            "conditional_probability" | "condprob" => {
                Ok(RelatednessMeasure::ConditionalProbability)
            }
            other => Err(Error::Config(format!(
                "unknown relatedness measure `{other}` (expected milne_witten, jaccard, pmi, or conditional_probability)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMode {
    Max,
    Min,
    Avg,
}

impl AggregationMode {
    pub const ALL: [AggregationMode; 3] = [
        AggregationMode::Max,
        AggregationMode::Min,
        AggregationMode::Avg,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            AggregationMode::Max => "max",
            AggregationMode::Min => "min",
            AggregationMode::Avg => "avg",
        }
    }
}

impl fmt::Display for AggregationMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for AggregationMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "max" => Ok(AggregationMode::Max),
            "min" => Ok(AggregationMode::Min),
            "avg" | "mean" => Ok(AggregationMode::Avg),
            other => Err(Error::Config(format!(
                "unknown aggregation mode `{other}` (expected max, min, or avg)"
            ))),
        }
    }
}

/// Size of the intersection of two sorted, duplicate-free id lists.
fn intersection_size(a: &[EntityId], b: &[EntityId]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Normalized log-overlap relatedness:
///
/// ```text
/// d = log(max(|L1|,|L2|) / |L1 ∩ L2|) / log(W / min(|L1|,|L2|))
/// relatedness = clamp(1 - d, 0, 1)
/// ```
///
/// The raw expression is a distance (0 for coinciding sets); returning
/// `1 - d` makes argmax-over-relatedness semantics correct and keeps the
/// score in the same [0, 1] range as the other measures.
pub fn milne_witten(g: &LinkGraph, e1: EntityId, e2: EntityId) -> f64 {
    let l1 = g.inlinks(e1);
    let l2 = g.inlinks(e2);
    if e1 == e2 && !l1.is_empty() {
        return 1.0;
    }
    if l1.is_empty() || l2.is_empty() {
        return 0.0;
    }
    let inter = intersection_size(l1, l2);
    if inter == 0 {
        return 0.0;
    }
    let (lo, hi) = (l1.len().min(l2.len()) as f64, l1.len().max(l2.len()) as f64);
    let den = (g.total_pages() as f64 / lo).ln();
    if den <= 0.0 {
        return 0.0;
    }
    let d = (hi / inter as f64).ln() / den;
    (1.0 - d).clamp(0.0, 1.0)
}

/// |L1 ∩ L2| / |L1 ∪ L2|, 0 when the union is empty.
pub fn jaccard(g: &LinkGraph, e1: EntityId, e2: EntityId) -> f64 {
    let l1 = g.inlinks(e1);
    let l2 = g.inlinks(e2);
    let inter = intersection_size(l1, l2);
    let union = l1.len() + l2.len() - inter;
    if union == 0 {
        return 0.0;
    }
    inter as f64 / union as f64
}

/// Pointwise mutual information of co-citation, normalized by log W and
/// clamped into [0, 1]. Zero on empty intersections, empty inlink sets,
/// and the degenerate single-page universe.
pub fn pmi(g: &LinkGraph, e1: EntityId, e2: EntityId) -> f64 {
    let l1 = g.inlinks(e1);
    let l2 = g.inlinks(e2);
    if l1.is_empty() || l2.is_empty() {
        return 0.0;
    }
    let inter = intersection_size(l1, l2);
    if inter == 0 {
        return 0.0;
    }
    let w = g.total_pages() as f64;
    let log_w = w.ln();
    if log_w <= 0.0 {
        return 0.0;
    }
    let raw = (inter as f64 * w / (l1.len() as f64 * l2.len() as f64)).ln();
    (raw / log_w).clamp(0.0, 1.0)
}

/// P(anchor | candidate) = |L_cand ∩ L_anchor| / |L_cand|, 0 when the
/// candidate has no inlinks. Directed: scores the candidate under test
/// against an already-resolved anchor entity.
pub fn conditional_probability(g: &LinkGraph, candidate: EntityId, anchor: EntityId) -> f64 {
    let lc = g.inlinks(candidate);
    if lc.is_empty() {
        return 0.0;
    }
    intersection_size(lc, g.inlinks(anchor)) as f64 / lc.len() as f64
}

/// Dispatch on the configured measure. For the directed measure the first
/// argument is the candidate and the second the anchor.
pub fn score(g: &LinkGraph, measure: RelatednessMeasure, e1: EntityId, e2: EntityId) -> f64 {
    match measure {
        RelatednessMeasure::MilneWitten => milne_witten(g, e1, e2),
        RelatednessMeasure::Jaccard => jaccard(g, e1, e2),
        RelatednessMeasure::Pmi => pmi(g, e1, e2),
        RelatednessMeasure::ConditionalProbability => conditional_probability(g, e1, e2),
    }
}

/// max / min / arithmetic mean of a nonempty score list.
///
/// Panics on an empty list; the seed phase of the disambiguation loop
/// guarantees at least one resolved entity before aggregation runs.
pub fn aggregate(scores: &[f64], mode: AggregationMode) -> f64 {
    assert!(
        !scores.is_empty(),
        "contract violation: aggregate over an empty score list"
    );
    match mode {
        AggregationMode::Max => scores.iter().copied().fold(f64::MIN, f64::max),
        AggregationMode::Min => scores.iter().copied().fold(f64::MAX, f64::min),
        AggregationMode::Avg => scores.iter().sum::<f64>() / scores.len() as f64,
    }
}

/// Memo table over (measure, pair) keys. Symmetric measures store one entry
/// per unordered pair. Cached values are bit-identical to fresh computation,
/// so sharing a cache across threads or documents never changes results.
#[derive(Debug, Default)]
pub struct PairCache {
    table: Mutex<HashMap<(RelatednessMeasure, EntityId, EntityId), f64>>,
}

impl PairCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn score(
        &self,
        g: &LinkGraph,
        measure: RelatednessMeasure,
        e1: EntityId,
        e2: EntityId,
    ) -> f64 {
        let key = if measure.is_symmetric() && e2 < e1 {
            (measure, e2, e1)
        } else {
            (measure, e1, e2)
        };
        if let Some(&v) = self.table.lock().unwrap().get(&key) {
            return v;
        }
        let v = score(g, measure, e1, e2);
        self.table.lock().unwrap().insert(key, v);
        v
    }

    pub fn len(&self) -> usize {
        self.table.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_graph;

    fn e(id: u32) -> EntityId {
        EntityId(id)
    }

    /// Graph with L(100) = {1,2,3,4}, L(101) = {3,4,5}, W = 10.
    fn spec_fixture() -> LinkGraph {
        let edges = [
            (e(1), e(100)),
            (e(2), e(100)),
            (e(3), e(100)),
            (e(4), e(100)),
            (e(3), e(101)),
            (e(4), e(101)),
            (e(5), e(101)),
        ];
        build_graph(edges, [], Some(10)).unwrap()
    }

    #[test]
    fn milne_witten_fixture_value() {
        let g = spec_fixture();
        // 1 - ln(4/2)/ln(10/3), hand-checked against an independent
        // set-arithmetic + logarithm computation.
        let expected = 1.0 - 2f64.ln() / (10.0f64 / 3.0).ln();
        assert!((milne_witten(&g, e(100), e(101)) - expected).abs() < 1e-9);
        assert!((expected - 0.4242833575065551).abs() < 1e-12);
    }

    #[test]
    fn milne_witten_self_is_one_for_nonempty() {
        let g = spec_fixture();
        assert_eq!(milne_witten(&g, e(100), e(100)), 1.0);
    }

    #[test]
    fn milne_witten_disjoint_is_zero() {
        let g = build_graph([(e(1), e(10)), (e(2), e(11))], [], Some(10)).unwrap();
        assert_eq!(milne_witten(&g, e(10), e(11)), 0.0);
    }

    #[test]
    fn milne_witten_empty_set_is_zero() {
        let g = spec_fixture();
        assert_eq!(milne_witten(&g, e(100), e(999)), 0.0);
        assert_eq!(milne_witten(&g, e(999), e(999)), 0.0);
    }

    #[test]
    fn milne_witten_degenerate_denominator_is_zero() {
        // W equals the smaller inlink-set size, so log(W/min) = 0
        let edges = [
            (e(1), e(10)),
            (e(2), e(10)),
            (e(3), e(10)),
            (e(1), e(11)),
            (e(2), e(11)),
            (e(3), e(11)),
        ];
        let g = build_graph(edges, [], Some(3)).unwrap();
        assert_eq!(milne_witten(&g, e(10), e(11)), 0.0);
    }

    #[test]
    fn jaccard_is_monotone_in_the_intersection() {
        // union fixed at {1..6}; intersection grows 0 -> 2 -> 6
        let make = |l1: &[u32], l2: &[u32]| {
            let mut edges = Vec::new();
            for &p in l1 {
                edges.push((e(p), e(70)));
            }
            for &p in l2 {
                edges.push((e(p), e(71)));
            }
            build_graph(edges, [], Some(100)).unwrap()
        };
        let disjoint = jaccard(&make(&[1, 2, 3], &[4, 5, 6]), e(70), e(71));
        let partial = jaccard(&make(&[1, 2, 3, 4], &[3, 4, 5, 6]), e(70), e(71));
        let full = jaccard(&make(&[1, 2, 3, 4, 5, 6], &[1, 2, 3, 4, 5, 6]), e(70), e(71));
        assert!(disjoint < partial && partial < full);
        assert_eq!((disjoint, full), (0.0, 1.0));
    }

    #[test]
    fn jaccard_examples() {
        // L1 = {1,2,3}, L2 = {2,3,4} -> 2/4
        let edges = [
            (e(1), e(50)),
            (e(2), e(50)),
            (e(3), e(50)),
            (e(2), e(51)),
            (e(3), e(51)),
            (e(4), e(51)),
        ];
        let g = build_graph(edges, [], None).unwrap();
        assert!((jaccard(&g, e(50), e(51)) - 0.5).abs() < 1e-12);
        assert_eq!(jaccard(&g, e(50), e(50)), 1.0);
        assert_eq!(jaccard(&g, e(50), e(999)), 0.0);
    }

    #[test]
    fn pmi_examples() {
        // L1 = {1,2}, L2 = {2,3}, W = 8 -> ln2 / ln8 = 1/3
        let edges = [(e(1), e(60)), (e(2), e(60)), (e(2), e(61)), (e(3), e(61))];
        let g = build_graph(edges, [], Some(8)).unwrap();
        assert!((pmi(&g, e(60), e(61)) - 2f64.ln() / 8f64.ln()).abs() < 1e-12);
        assert!((pmi(&g, e(60), e(61)) - 1.0 / 3.0).abs() < 1e-9);

        // L1 = L2 = {1}, W = 10 -> raw = ln 10, normalized 1.0
        let g2 = build_graph([(e(1), e(70))], [], Some(10)).unwrap();
        assert_eq!(pmi(&g2, e(70), e(70)), 1.0);

        assert_eq!(pmi(&g, e(60), e(999)), 0.0);
    }

    #[test]
    fn conditional_probability_examples() {
        // L_cand = {1,2,3,4}, L_anchor = {3,4,5} -> 2/4
        let g = spec_fixture();
        assert!((conditional_probability(&g, e(100), e(101)) - 0.5).abs() < 1e-12);
        // subset case: L_cand = {3,4} would be 1.0; use self-relatedness
        assert_eq!(conditional_probability(&g, e(100), e(100)), 1.0);
        assert_eq!(conditional_probability(&g, e(999), e(100)), 0.0);
    }

    #[test]
    fn conditional_probability_is_directed() {
        let g = spec_fixture();
        let ab = conditional_probability(&g, e(100), e(101)); // 2/4
        let ba = conditional_probability(&g, e(101), e(100)); // 2/3
        assert!((ab - 0.5).abs() < 1e-12);
        assert!((ba - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn aggregate_examples() {
        assert_eq!(aggregate(&[0.2, 0.8], AggregationMode::Max), 0.8);
        assert_eq!(aggregate(&[0.2, 0.8], AggregationMode::Min), 0.2);
        assert!((aggregate(&[0.2, 0.8, 0.5], AggregationMode::Avg) - 0.5).abs() < 1e-12);
        assert!((aggregate(&[0.8, 0.1], AggregationMode::Avg) - 0.45).abs() < 1e-12);
    }

    #[test]
    #[should_panic(expected = "contract violation")]
    fn aggregate_rejects_empty_list() {
        aggregate(&[], AggregationMode::Max);
    }

    #[test]
    fn cache_is_transparent() {
        let g = spec_fixture();
        let cache = PairCache::new();
        for m in RelatednessMeasure::ALL {
            for &a in &[e(100), e(101), e(999)] {
                for &b in &[e(100), e(101), e(999)] {
                    let fresh = score(&g, m, a, b);
                    let cached_cold = cache.score(&g, m, a, b);
                    let cached_warm = cache.score(&g, m, a, b);
                    assert_eq!(fresh.to_bits(), cached_cold.to_bits());
                    assert_eq!(fresh.to_bits(), cached_warm.to_bits());
                }
            }
        }
        assert!(!cache.is_empty());
    }

    #[test]
    fn measure_names_round_trip() {
        for m in RelatednessMeasure::ALL {
            assert_eq!(m.name().parse::<RelatednessMeasure>().unwrap(), m);
        }
        for a in AggregationMode::ALL {
            assert_eq!(a.name().parse::<AggregationMode>().unwrap(), a);
        }
        assert!("bogus".parse::<RelatednessMeasure>().is_err());
        assert!("bogus".parse::<AggregationMode>().is_err());
    }
}
