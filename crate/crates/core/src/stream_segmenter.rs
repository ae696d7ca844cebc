//! Online segmentation of crowd picture streams into sub-events, plus the
//! partition-comparison and redundancy metrics used to evaluate it.

use std::collections::{HashMap, HashSet};
use std::ops::Range;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("K = {k} must lie in [1, {len}]")]
    InvalidK { k: usize, len: usize },
    #[error("segmentations cover {0} and {1} pictures")]
    MismatchedLength(usize, usize),
    #[error("threshold r = {0} must lie in (0, 1]")]
    InvalidThreshold(f64),
    #[error("viewer count must be positive")]
    NoViewers,
    #[error("boundaries must be strictly increasing within (0, {0})")]
    InvalidBoundaries(usize),
    #[error("events are not sorted by timestamp at index {0}")]
    Unsorted(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PictureEvent {
    pub timestamp: f64,
    pub contributor: String,
}

impl PictureEvent {
    pub fn new(timestamp: f64, contributor: impl Into<String>) -> Self {
        PictureEvent { timestamp, contributor: contributor.into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ViewerCount {
    Known(usize),
    /// Number of distinct contributors in the whole stream.
    Inferred,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PictureStream {
    events: Vec<PictureEvent>,
    pub viewer_count: ViewerCount,
}

impl PictureStream {
    pub fn new(events: Vec<PictureEvent>, viewer_count: ViewerCount) -> Result<Self, SegmentError> {
        if let Some(i) = events.windows(2).position(|w| w[1].timestamp < w[0].timestamp) {
            return Err(SegmentError::Unsorted(i + 1));
        }
        if viewer_count == ViewerCount::Known(0) {
            return Err(SegmentError::NoViewers);
        }
        Ok(PictureStream { events, viewer_count })
    }

    /// Stream from contributor ids alone, with timestamps 0, 1, 2, …
    pub fn from_contributors<S: AsRef<str>>(ids: &[S], viewer_count: ViewerCount) -> Self {
        let events = ids
            .iter()
            .enumerate()
            .map(|(i, c)| PictureEvent::new(i as f64, c.as_ref()))
            .collect();
        PictureStream { events, viewer_count }
    }

    pub fn events(&self) -> &[PictureEvent] {
        &self.events
    }

    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    /// Effective N.
    pub fn viewers(&self) -> usize {
        match self.viewer_count {
            ViewerCount::Known(n) => n,
            ViewerCount::Inferred => {
                let distinct: HashSet<&str> =
                    self.events.iter().map(|e| e.contributor.as_str()).collect();
                distinct.len().max(1)
            }
        }
    }

    /// Contributor ids mapped to dense integers in order of first appearance.
    fn interned(&self) -> Vec<usize> {
        let mut ids: HashMap<&str, usize> = HashMap::new();
        self.events
            .iter()
            .map(|e| {
                let next = ids.len();
                *ids.entry(e.contributor.as_str()).or_insert(next)
            })
            .collect()
    }
}

/// Partition of `0..len` into contiguous, nonempty segments.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Segmentation {
    len: usize,
    /// Start index of every segment after the first.
    boundaries: Vec<usize>,
}

impl Segmentation {
    pub fn new(len: usize, boundaries: Vec<usize>) -> Result<Self, SegmentError> {
        let ok = boundaries.windows(2).all(|w| w[0] < w[1])
            && boundaries.first().is_none_or(|&b| b > 0)
            && boundaries.last().is_none_or(|&b| b < len);
        if !ok {
            return Err(SegmentError::InvalidBoundaries(len));
        }
        Ok(Segmentation { len, boundaries })
    }

    pub fn from_sizes(sizes: &[usize]) -> Result<Self, SegmentError> {
        let len = sizes.iter().sum();
        let mut boundaries = Vec::with_capacity(sizes.len().saturating_sub(1));
        let mut at = 0;
        for &s in sizes.iter().take(sizes.len().saturating_sub(1)) {
            at += s;
            boundaries.push(at);
        }
        Segmentation::new(len, boundaries)
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn boundaries(&self) -> &[usize] {
        &self.boundaries
    }

    pub fn num_segments(&self) -> usize {
        if self.len == 0 {
            0
        } else {
            self.boundaries.len() + 1
        }
    }

    pub fn segments(&self) -> Vec<Range<usize>> {
        if self.len == 0 {
            return Vec::new();
        }
        let mut starts = vec![0];
        starts.extend_from_slice(&self.boundaries);
        let mut ends = self.boundaries.clone();
        ends.push(self.len);
        starts.into_iter().zip(ends).map(|(s, e)| s..e).collect()
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.segments().iter().map(|r| r.len()).collect()
    }

    /// Segment label of every index.
    pub fn labels(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len);
        for (k, r) in self.segments().into_iter().enumerate() {
            out.extend(std::iter::repeat_n(k, r.len()));
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairCountResult {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Distinct contributors of `segment` divided by `n`.
pub fn coverage_ratio(segment: &[PictureEvent], n: usize) -> f64 {
    assert!(n >= 1, "viewer count must be positive");
    let distinct: HashSet<&str> = segment.iter().map(|e| e.contributor.as_str()).collect();
    distinct.len() as f64 / n as f64
}

fn check_threshold(r: f64) -> Result<(), SegmentError> {
    if r > 0.0 && r <= 1.0 {
        Ok(())
    } else {
        Err(SegmentError::InvalidThreshold(r))
    }
}

/// Shared single pass for the two online rules. `needs_repeat` selects the
/// crowd-individual rule, which additionally requires the incoming contributor
/// to already be present in the open segment.
fn segment_online(stream: &PictureStream, r: f64, needs_repeat: bool) -> Result<Segmentation, SegmentError> {
    check_threshold(r)?;
    let n = stream.viewers() as f64;
    let ids = stream.interned();
    let mut seen = vec![false; ids.len()];
    let mut members: Vec<usize> = Vec::new();
    let mut boundaries = Vec::new();
    for (idx, &c) in ids.iter().enumerate() {
        if idx > 0 {
            let mu = members.len() as f64 / n;
            let split = mu >= r && (!needs_repeat || seen[c]);
            if split {
                boundaries.push(idx);
                for m in members.drain(..) {
                    seen[m] = false;
                }
            }
        }
        if !seen[c] {
            seen[c] = true;
            members.push(c);
        }
    }
    Segmentation::new(ids.len(), boundaries)
}

/// Crowd-behavior rule: a new segment opens once the current one's coverage reaches `r`.
pub fn segment_cs(stream: &PictureStream, r: f64) -> Result<Segmentation, SegmentError> {
    segment_online(stream, r, false)
}

/// Crowd-individual rule: split only when coverage reached `r` and the
/// incoming picture's contributor already posted in the current segment.
pub fn segment_cis(stream: &PictureStream, r: f64) -> Result<Segmentation, SegmentError> {
    segment_online(stream, r, true)
}

/// `k` near-equal contiguous segments; earlier segments take the remainder.
pub fn segment_mean(stream: &PictureStream, k: usize) -> Result<Segmentation, SegmentError> {
    let len = stream.len();
    if k == 0 || k > len {
        return Err(SegmentError::InvalidK { k, len });
    }
    let base = len / k;
    let extra = len % k;
    let sizes: Vec<usize> = (0..k).map(|i| base + usize::from(i < extra)).collect();
    Segmentation::from_sizes(&sizes)
}

fn pairs(n: usize) -> u64 {
    let n = n as u64;
    n * n.saturating_sub(1) / 2
}

/// Pair-counting precision, recall and F1 of `s` against ground truth `g`.
///
/// Empty pair sets count as perfect: precision is 1 when `s` has no
/// co-segmented pairs, recall is 1 when `g` has none.
pub fn pair_counting_eval(s: &Segmentation, g: &Segmentation) -> Result<PairCountResult, SegmentError> {
    if s.len() != g.len() {
        return Err(SegmentError::MismatchedLength(s.len(), g.len()));
    }
    let ss: u64 = s.sizes().into_iter().map(pairs).sum();
    let sg: u64 = g.sizes().into_iter().map(pairs).sum();
    // both are contiguous, so the contingency table is a merge of range overlaps
    let (a, b) = (s.segments(), g.segments());
    let (mut i, mut j, mut both) = (0, 0, 0u64);
    while i < a.len() && j < b.len() {
        let lo = a[i].start.max(b[j].start);
        let hi = a[i].end.min(b[j].end);
        if hi > lo {
            both += pairs(hi - lo);
        }
        if a[i].end <= b[j].end {
            i += 1;
        } else {
            j += 1;
        }
    }
    let precision = if ss == 0 { 1.0 } else { both as f64 / ss as f64 };
    let recall = if sg == 0 { 1.0 } else { both as f64 / sg as f64 };
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    Ok(PairCountResult { precision, recall, f1 })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Redundancy {
    /// Fraction of segments in which some contributor posted at least twice.
    pub red_r: f64,
    /// Fraction of pictures whose contributor already posted earlier in the same segment.
    pub r_rc: f64,
}

pub fn redundancy_metrics(stream: &PictureStream, g: &Segmentation) -> Result<Redundancy, SegmentError> {
    if stream.len() != g.len() {
        return Err(SegmentError::MismatchedLength(stream.len(), g.len()));
    }
    if stream.is_empty() {
        return Ok(Redundancy { red_r: 0.0, r_rc: 0.0 });
    }
    let ids = stream.interned();
    let mut redundant_segments = 0usize;
    let mut repeats = 0usize;
    for range in g.segments() {
        let mut seen = HashSet::new();
        let before = repeats;
        for &c in &ids[range] {
            if !seen.insert(c) {
                repeats += 1;
            }
        }
        if repeats > before {
            redundant_segments += 1;
        }
    }
    Ok(Redundancy {
        red_r: redundant_segments as f64 / g.num_segments() as f64,
        r_rc: repeats as f64 / stream.len() as f64,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const WORKED: [&str; 7] = ["v1", "v3", "v5", "v2", "v5", "v6", "v5"];

    fn worked(n: ViewerCount) -> PictureStream {
        PictureStream::from_contributors(&WORKED, n)
    }

    #[test]
    fn coverage_examples() {
        let evs: Vec<_> = ["v1", "v3", "v5"].iter().map(|c| PictureEvent::new(0.0, *c)).collect();
        assert_eq!(coverage_ratio(&evs, 6), 0.5);
        assert_eq!(coverage_ratio(&[], 6), 0.0);
        let same: Vec<_> = (0..10).map(|i| PictureEvent::new(i as f64, "v")).collect();
        assert_eq!(coverage_ratio(&same, 10), 0.1);
    }

    #[test]
    fn worked_example_both_viewer_counts() {
        for n in [ViewerCount::Known(6), ViewerCount::Known(5), ViewerCount::Inferred] {
            let s = worked(n);
            assert_eq!(segment_cs(&s, 0.5).unwrap().sizes(), vec![3, 3, 1], "{n:?}");
            assert_eq!(segment_cis(&s, 0.5).unwrap().sizes(), vec![4, 3], "{n:?}");
        }
    }

    #[test]
    fn cs_never_reaching_threshold() {
        let s = PictureStream::from_contributors(&["a"; 5], ViewerCount::Known(2));
        assert_eq!(segment_cs(&s, 1.0).unwrap().num_segments(), 1);
    }

    #[test]
    fn cs_tiny_threshold_gives_singletons() {
        let s = PictureStream::from_contributors(&["a", "b", "a", "c"], ViewerCount::Known(1));
        assert_eq!(segment_cs(&s, 0.01).unwrap().sizes(), vec![1, 1, 1, 1]);
    }

    #[test]
    fn cis_distinct_contributors_never_split() {
        let ids: Vec<String> = (0..9).map(|i| format!("u{i}")).collect();
        let s = PictureStream::from_contributors(&ids, ViewerCount::Known(3));
        for r in [0.1, 0.5, 1.0] {
            assert_eq!(segment_cis(&s, r).unwrap().num_segments(), 1);
        }
    }

    #[test]
    fn threshold_validation() {
        let s = worked(ViewerCount::Inferred);
        assert_eq!(segment_cs(&s, 1.5), Err(SegmentError::InvalidThreshold(1.5)));
        assert_eq!(segment_cis(&s, 0.0), Err(SegmentError::InvalidThreshold(0.0)));
    }

    #[test]
    fn empty_stream() {
        let s = PictureStream::new(vec![], ViewerCount::Inferred).unwrap();
        assert_eq!(segment_cs(&s, 0.4).unwrap().num_segments(), 0);
        assert_eq!(segment_mean(&s, 1), Err(SegmentError::InvalidK { k: 1, len: 0 }));
    }

    #[test]
    fn unsorted_stream_rejected() {
        let evs = vec![PictureEvent::new(2.0, "a"), PictureEvent::new(1.0, "b")];
        assert_eq!(PictureStream::new(evs, ViewerCount::Inferred), Err(SegmentError::Unsorted(1)));
    }

    #[test]
    fn mean_examples() {
        let s = worked(ViewerCount::Inferred);
        assert_eq!(segment_mean(&s, 2).unwrap().sizes(), vec![4, 3]);
        assert_eq!(segment_mean(&s, 1).unwrap().sizes(), vec![7]);
        assert_eq!(segment_mean(&s, 7).unwrap().sizes(), vec![1; 7]);
        assert_eq!(segment_mean(&s, 3).unwrap().sizes(), vec![3, 2, 2]);
        assert_eq!(segment_mean(&s, 8), Err(SegmentError::InvalidK { k: 8, len: 7 }));
    }

    #[test]
    fn pair_counting_identity() {
        let s = Segmentation::from_sizes(&[2, 3]).unwrap();
        let r = pair_counting_eval(&s, &s).unwrap();
        assert_eq!((r.precision, r.recall, r.f1), (1.0, 1.0, 1.0));
    }

    #[test]
    fn pair_counting_singletons_convention() {
        let s = Segmentation::from_sizes(&[1, 1, 1]).unwrap();
        let r = pair_counting_eval(&s, &s).unwrap();
        assert_eq!(r.f1, 1.0);
        let g = Segmentation::from_sizes(&[3]).unwrap();
        let r = pair_counting_eval(&s, &g).unwrap();
        assert_eq!((r.precision, r.recall), (1.0, 0.0));
    }

    #[test]
    fn pair_counting_mismatch() {
        let a = Segmentation::from_sizes(&[2]).unwrap();
        let b = Segmentation::from_sizes(&[3]).unwrap();
        assert_eq!(pair_counting_eval(&a, &b), Err(SegmentError::MismatchedLength(2, 3)));
    }

    #[test]
    fn redundancy_examples() {
        let s = worked(ViewerCount::Inferred);
        let g = Segmentation::from_sizes(&[4, 3]).unwrap();
        let r = redundancy_metrics(&s, &g).unwrap();
        assert_eq!(r.red_r, 0.5);
        assert_eq!(r.r_rc, 1.0 / 7.0);

        let ids: Vec<String> = (0..5).map(|i| format!("u{i}")).collect();
        let d = PictureStream::from_contributors(&ids, ViewerCount::Inferred);
        let r = redundancy_metrics(&d, &Segmentation::from_sizes(&[2, 3]).unwrap()).unwrap();
        assert_eq!((r.red_r, r.r_rc), (0.0, 0.0));

        let one = PictureStream::from_contributors(&["a"; 6], ViewerCount::Inferred);
        let r = redundancy_metrics(&one, &Segmentation::from_sizes(&[6]).unwrap()).unwrap();
        assert_eq!((r.red_r, r.r_rc), (1.0, 5.0 / 6.0));
    }

    #[test]
    fn segmentation_rejects_bad_boundaries() {
        assert!(Segmentation::new(5, vec![0, 2]).is_err());
        assert!(Segmentation::new(5, vec![3, 2]).is_err());
        assert!(Segmentation::new(5, vec![5]).is_err());
        assert!(Segmentation::new(5, vec![1, 4]).is_ok());
    }

    fn stream_strategy() -> impl Strategy<Value = (Vec<u8>, usize)> {
        (prop::collection::vec(0u8..6, 0..40), 1usize..8)
    }

    fn to_stream(ids: &[u8], n: usize) -> PictureStream {
        let names: Vec<String> = ids.iter().map(|i| format!("v{i}")).collect();
        PictureStream::from_contributors(&names, ViewerCount::Known(n))
    }

    proptest! {
        #[test]
        fn online_rules_are_partitions((ids, n) in stream_strategy(), r in 0.05..1.0f64) {
            let s = to_stream(&ids, n);
            for seg in [segment_cs(&s, r).unwrap(), segment_cis(&s, r).unwrap()] {
                prop_assert_eq!(seg.sizes().iter().sum::<usize>(), ids.len());
                prop_assert!(seg.sizes().iter().all(|&k| k > 0));
                prop_assert!(seg.boundaries().windows(2).all(|w| w[0] < w[1]));
            }
        }

        #[test]
        fn cis_never_has_more_segments((ids, n) in stream_strategy(), r in 0.05..1.0f64) {
            let s = to_stream(&ids, n);
            prop_assert!(segment_cis(&s, r).unwrap().num_segments() <= segment_cs(&s, r).unwrap().num_segments());
        }

        #[test]
        fn online_rules_are_prefix_stable((ids, n) in stream_strategy(), r in 0.05..1.0f64, cut in 0usize..40) {
            let cut = cut.min(ids.len());
            let full = to_stream(&ids, n);
            let prefix = to_stream(&ids[..cut], n);
            for f in [segment_cs, segment_cis] {
                let a = f(&full, r).unwrap().labels();
                let b = f(&prefix, r).unwrap().labels();
                prop_assert_eq!(&a[..cut], &b[..]);
            }
        }

        #[test]
        fn precision_is_recall_swapped(a in prop::collection::vec(1usize..5, 1..6), b in prop::collection::vec(1usize..5, 1..6)) {
            let total_a: usize = a.iter().sum();
            let total_b: usize = b.iter().sum();
            let mut b = b;
            // pad the shorter partition so both cover the same stream
            if total_b < total_a { b.push(total_a - total_b); }
            let mut a = a;
            if total_a < total_b { a.push(total_b - total_a); }
            let s = Segmentation::from_sizes(&a).unwrap();
            let g = Segmentation::from_sizes(&b).unwrap();
            let sg = pair_counting_eval(&s, &g).unwrap();
            let gs = pair_counting_eval(&g, &s).unwrap();
            prop_assert_eq!(sg.precision, gs.recall);
            prop_assert_eq!(sg.recall, gs.precision);
        }
    }
}
