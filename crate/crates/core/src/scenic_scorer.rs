//! Per-segment scenic scores from geo-tagged photos and category-weighted
//! check-ins.
//!
//! * `sp = ln(1 + c)` where `c` counts photos within `delta` of the segment.
//! * `sc = Σ_k w_k · c_k / |CK|` where `c_k` counts in-range check-ins of POI group `k`.
//! * `si = sp · sc`.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geomath::{point_to_polyline_distance, PlanarPoint};
use crate::network::{AllowedDirection, RoadNetwork, RoadSegment, SegmentId};

#[derive(Debug, Error, PartialEq)]
pub enum ScoreError {
    #[error("check-in set is empty")]
    EmptyCheckInSet,
    #[error("invalid scoring configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown segment {0}")]
    UnknownSegment(SegmentId),
}

/// Venue category groups, most scenic first.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoiGroup {
    NaturalScenery = 1,
    TouristAttraction = 2,
    Others = 3,
}

impl PoiGroup {
    pub fn index(self) -> usize {
        self as usize - 1
    }
}

pub const NATURAL_SCENERY_LABELS: [&str; 12] = [
    "park", "garden", "lake", "forest", "mountain", "beach", "sea", "river", "bridge", "harbor",
    "scenic", "hiking",
];

pub const TOURIST_ATTRACTION_LABELS: [&str; 10] = [
    "museum", "palace", "church", "gallery", "memorial", "monument", "square", "zoo",
    "university", "historic site",
];

fn words(label: &str) -> Vec<String> {
    label
        .split(|c: char| !c.is_alphanumeric())
        .filter(|w| !w.is_empty())
        .map(str::to_lowercase)
        .collect()
}

fn word_matches(word: &str, key: &str) -> bool {
    word == key
        || word.strip_suffix('s') == Some(key)
        || word.strip_suffix("es") == Some(key)
}

/// True when the keyword's words occur consecutively in `label_words`.
fn contains_keyword(label_words: &[String], keyword: &str) -> bool {
    let key: Vec<&str> = keyword.split(' ').collect();
    label_words
        .windows(key.len())
        .any(|w| w.iter().zip(&key).all(|(a, b)| word_matches(a, b)))
}

/// Maps a venue category label to its POI group by whole-word keyword
/// match, case-insensitive. Natural scenery wins over tourist attraction.
pub fn categorize_poi(label: &str) -> PoiGroup {
    let w = words(label);
    if NATURAL_SCENERY_LABELS.iter().any(|k| contains_keyword(&w, k)) {
        PoiGroup::NaturalScenery
    } else if TOURIST_ATTRACTION_LABELS.iter().any(|k| contains_keyword(&w, k)) {
        PoiGroup::TouristAttraction
    } else {
        PoiGroup::Others
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoTaggedPhoto {
    pub loc: PlanarPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CheckIn {
    pub loc: PlanarPoint,
    pub category: PoiGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoringConfig {
    /// Visibility radius in meters.
    pub delta: f64,
    /// Weights of natural scenery, tourist attraction and other check-ins.
    pub weights: [f64; 3],
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig { delta: 100.0, weights: [0.65, 0.30, 0.05] }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(ScoreError::InvalidConfig("delta must be positive".into()));
        }
        if self.weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(ScoreError::InvalidConfig("weights must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SegmentScore {
    pub sp: f64,
    pub sc: f64,
    pub si: f64,
}

/// A road network with per-segment scores and allowed driving directions,
/// both aligned with `network.segments()`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredRoadNetwork {
    pub network: RoadNetwork,
    scores: Vec<SegmentScore>,
    directions: Vec<AllowedDirection>,
}

impl ScoredRoadNetwork {
    /// Pairs `network` with per-segment scores given in segment order.
    pub fn new(network: RoadNetwork, scores: Vec<SegmentScore>) -> Self {
        assert_eq!(network.segments().len(), scores.len(), "one score per segment");
        let directions = vec![AllowedDirection::Both; scores.len()];
        ScoredRoadNetwork { network, scores, directions }
    }

    /// Network where every segment carries the same `si` (with `sp = 1`, `sc = si`).
    pub fn uniform(network: RoadNetwork, si: f64) -> Self {
        let n = network.segments().len();
        Self::new(network, vec![SegmentScore { sp: 1.0, sc: si, si }; n])
    }

    pub fn score(&self, id: SegmentId) -> Option<SegmentScore> {
        self.network.segment_index(id).map(|i| self.scores[i])
    }

    pub fn si(&self, id: SegmentId) -> f64 {
        self.score(id).map_or(0.0, |s| s.si)
    }

    pub fn scores(&self) -> &[SegmentScore] {
        &self.scores
    }

    pub fn direction(&self, id: SegmentId) -> Option<AllowedDirection> {
        self.network.segment_index(id).map(|i| self.directions[i])
    }

    pub fn directions(&self) -> &[AllowedDirection] {
        &self.directions
    }

    pub fn set_score(&mut self, id: SegmentId, score: SegmentScore) -> Result<(), ScoreError> {
        let i = self.network.segment_index(id).ok_or(ScoreError::UnknownSegment(id))?;
        self.scores[i] = score;
        Ok(())
    }

    pub fn set_direction(&mut self, id: SegmentId, d: AllowedDirection) -> Result<(), ScoreError> {
        let i = self.network.segment_index(id).ok_or(ScoreError::UnknownSegment(id))?;
        self.directions[i] = d;
        Ok(())
    }

    /// Iterates `(segment, score, allowed direction)` in segment id order.
    pub fn iter(&self) -> impl Iterator<Item = (&RoadSegment, SegmentScore, AllowedDirection)> {
        self.network
            .segments()
            .iter()
            .zip(self.scores.iter().copied())
            .zip(self.directions.iter().copied())
            .map(|((s, sc), d)| (s, sc, d))
    }

    /// Sub-network restricted to segments accepted by `keep`, scores and directions carried over.
    pub fn filtered(&self, mut keep: impl FnMut(&RoadSegment) -> bool) -> ScoredRoadNetwork {
        let network = self.network.filtered(|s| keep(s));
        let mut scores = Vec::with_capacity(network.segments().len());
        let mut directions = Vec::with_capacity(network.segments().len());
        for s in network.segments() {
            let i = self.network.segment_index(s.id).expect("subset");
            scores.push(self.scores[i]);
            directions.push(self.directions[i]);
        }
        ScoredRoadNetwork { network, scores, directions }
    }

    /// Segment ids ordered by descending `si`, ties by ascending id.
    pub fn ranked(&self) -> Vec<SegmentId> {
        let mut ids: Vec<(SegmentId, f64)> =
            self.iter().map(|(s, sc, _)| (s.id, sc.si)).collect();
        ids.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ids.into_iter().map(|(id, _)| id).collect()
    }
}

/// Uniform bucket grid over points for radius queries.
struct PointIndex {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl PointIndex {
    fn new(points: impl Iterator<Item = PlanarPoint>, cell: f64) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.enumerate() {
            buckets.entry(Self::key(p, cell)).or_default().push(i);
        }
        PointIndex { cell, buckets }
    }

    fn key(p: PlanarPoint, cell: f64) -> (i64, i64) {
        ((p.x / cell).floor() as i64, (p.y / cell).floor() as i64)
    }

    /// Indices of points possibly within `radius` of the segment's polyline,
    /// in ascending order.
    fn candidates(&self, seg: &RoadSegment, radius: f64) -> Vec<usize> {
        let bb = seg.bounding_box().expanded(radius);
        let (i0, j0) = Self::key(bb.min, self.cell);
        let (i1, j1) = Self::key(bb.max, self.cell);
        let span = (i1 - i0 + 1) as u128 * (j1 - j0 + 1) as u128;
        let mut out = Vec::new();
        if span > self.buckets.len() as u128 {
            for v in self.buckets.values() {
                out.extend_from_slice(v);
            }
        } else {
            for i in i0..=i1 {
                for j in j0..=j1 {
                    if let Some(v) = self.buckets.get(&(i, j)) {
                        out.extend_from_slice(v);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

fn in_range(seg: &RoadSegment, p: PlanarPoint, delta: f64) -> bool {
    point_to_polyline_distance(p, &seg.polyline) < delta
}

pub fn score_photos(segment: &RoadSegment, photos: &[GeoTaggedPhoto], cfg: &ScoringConfig) -> f64 {
    let c = photos.iter().filter(|p| in_range(segment, p.loc, cfg.delta)).count();
    (c as f64).ln_1p()
}

fn weighted_checkins(counts: [usize; 3], total: usize, cfg: &ScoringConfig) -> f64 {
    let num: f64 = counts.iter().zip(cfg.weights).map(|(&c, w)| w * c as f64).sum();
    num / total as f64
}

pub fn score_checkins(
    segment: &RoadSegment,
    checkins: &[CheckIn],
    total_checkins: usize,
    cfg: &ScoringConfig,
) -> Result<f64, ScoreError> {
    if total_checkins == 0 {
        return Err(ScoreError::EmptyCheckInSet);
    }
    let mut counts = [0usize; 3];
    for ck in checkins.iter().filter(|c| in_range(segment, c.loc, cfg.delta)) {
        counts[ck.category.index()] += 1;
    }
    Ok(weighted_checkins(counts, total_checkins, cfg))
}

pub fn score_integrated(sp: f64, sc: f64) -> f64 {
    sp * sc
}

/// Scores every segment of `network`. Directions start as `Both`.
pub fn score_network(
    network: &RoadNetwork,
    photos: &[GeoTaggedPhoto],
    checkins: &[CheckIn],
    cfg: &ScoringConfig,
) -> Result<ScoredRoadNetwork, ScoreError> {
    cfg.validate()?;
    if checkins.is_empty() {
        return Err(ScoreError::EmptyCheckInSet);
    }
    let photo_idx = PointIndex::new(photos.iter().map(|p| p.loc), cfg.delta);
    let ck_idx = PointIndex::new(checkins.iter().map(|c| c.loc), cfg.delta);
    let total = checkins.len();
    let scores: Vec<SegmentScore> = network
        .segments()
        .par_iter()
        .map(|seg| {
            let c = photo_idx
                .candidates(seg, cfg.delta)
                .into_iter()
                .filter(|&i| in_range(seg, photos[i].loc, cfg.delta))
                .count();
            let sp = (c as f64).ln_1p();
            let mut counts = [0usize; 3];
            for i in ck_idx.candidates(seg, cfg.delta) {
                if in_range(seg, checkins[i].loc, cfg.delta) {
                    counts[checkins[i].category.index()] += 1;
                }
            }
            let sc = weighted_checkins(counts, total, cfg);
            SegmentScore { sp, sc, si: score_integrated(sp, sc) }
        })
        .collect();
    Ok(ScoredRoadNetwork::new(network.clone(), scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeId;
    use proptest::prelude::*;

    fn line_network(len: f64) -> RoadNetwork {
        let mut net = RoadNetwork::new();
        net.add_node(NodeId(1), PlanarPoint::new(0.0, 0.0)).unwrap();
        net.add_node(NodeId(2), PlanarPoint::new(len, 0.0)).unwrap();
        net.add_segment(SegmentId(1), NodeId(1), NodeId(2), &[]).unwrap();
        net
    }

    fn photos_near(n: usize) -> Vec<GeoTaggedPhoto> {
        (0..n).map(|i| GeoTaggedPhoto { loc: PlanarPoint::new(10.0 * i as f64, 20.0) }).collect()
    }

    /// 2 natural + 1 tourist in range, 7 far away.
    fn paper_checkins() -> Vec<CheckIn> {
        let mut v = vec![
            CheckIn { loc: PlanarPoint::new(5.0, 5.0), category: PoiGroup::NaturalScenery },
            CheckIn { loc: PlanarPoint::new(50.0, -5.0), category: PoiGroup::NaturalScenery },
            CheckIn { loc: PlanarPoint::new(80.0, 30.0), category: PoiGroup::TouristAttraction },
        ];
        for i in 0..7 {
            v.push(CheckIn { loc: PlanarPoint::new(5000.0 + i as f64, 5000.0), category: PoiGroup::Others });
        }
        v
    }

    #[test]
    fn categorize_table_labels() {
        for l in NATURAL_SCENERY_LABELS {
            assert_eq!(categorize_poi(l), PoiGroup::NaturalScenery, "{l}");
        }
        for l in TOURIST_ATTRACTION_LABELS {
            assert_eq!(categorize_poi(l), PoiGroup::TouristAttraction, "{l}");
        }
        assert_eq!(categorize_poi("Park"), PoiGroup::NaturalScenery);
        assert_eq!(categorize_poi("Museum"), PoiGroup::TouristAttraction);
        assert_eq!(categorize_poi("Laundromat"), PoiGroup::Others);
        assert_eq!(categorize_poi("Historic Site Museum"), PoiGroup::TouristAttraction);
        assert_eq!(categorize_poi("HISTORIC SITE"), PoiGroup::TouristAttraction);
        assert_eq!(categorize_poi("Botanical Gardens"), PoiGroup::NaturalScenery);
    }

    #[test]
    fn categorize_requires_whole_words() {
        assert_eq!(categorize_poi("Seafood Restaurant"), PoiGroup::Others);
        assert_eq!(categorize_poi("Parking Lot"), PoiGroup::Others);
        assert_eq!(categorize_poi("Historic Hotel"), PoiGroup::Others);
        assert_eq!(categorize_poi("Cafe"), PoiGroup::Others);
    }

    #[test]
    fn photo_score_examples() {
        let net = line_network(100.0);
        let seg = &net.segments()[0];
        let cfg = ScoringConfig::default();
        assert_eq!(score_photos(seg, &[], &cfg), 0.0);
        let sp = score_photos(seg, &photos_near(9), &cfg);
        assert!((sp - 10f64.ln()).abs() < 1e-12);
        assert!((sp - 2.3026).abs() < 1e-4);
    }

    #[test]
    fn delta_is_strict() {
        let net = line_network(100.0);
        let seg = &net.segments()[0];
        let cfg = ScoringConfig { delta: 20.0, ..Default::default() };
        let on_edge = [GeoTaggedPhoto { loc: PlanarPoint::new(50.0, 20.0) }];
        assert_eq!(score_photos(seg, &on_edge, &cfg), 0.0);
    }

    #[test]
    fn checkin_score_example() {
        let net = line_network(100.0);
        let seg = &net.segments()[0];
        let cfg = ScoringConfig::default();
        let ck = paper_checkins();
        let sc = score_checkins(seg, &ck, ck.len(), &cfg).unwrap();
        assert!((sc - 0.16).abs() < 1e-9, "{sc}");
        assert_eq!(score_checkins(seg, &ck[3..], 10, &cfg).unwrap(), 0.0);
        assert_eq!(score_checkins(seg, &[], 0, &cfg), Err(ScoreError::EmptyCheckInSet));
    }

    #[test]
    fn natural_beats_other_checkin() {
        let net = line_network(100.0);
        let seg = &net.segments()[0];
        let cfg = ScoringConfig::default();
        let mut ck = paper_checkins();
        ck[3] = CheckIn { loc: PlanarPoint::new(1.0, 1.0), category: PoiGroup::Others };
        let before = score_checkins(seg, &ck, ck.len(), &cfg).unwrap();
        ck[3].category = PoiGroup::NaturalScenery;
        let after = score_checkins(seg, &ck, ck.len(), &cfg).unwrap();
        assert!(after > before);
    }

    #[test]
    fn integrated_examples() {
        assert_eq!(score_integrated(0.0, 7.0), 0.0);
        assert_eq!(score_integrated(7.0, 0.0), 0.0);
        assert!((score_integrated(2.3026, 0.16) - 0.3684).abs() < 1e-4);
    }

    #[test]
    fn network_composition() {
        let net = line_network(100.0);
        let scored = score_network(&net, &photos_near(9), &paper_checkins(), &ScoringConfig::default()).unwrap();
        let s = scored.score(SegmentId(1)).unwrap();
        assert!((s.si - 10f64.ln() * 0.16).abs() < 1e-12);
        assert!((s.si - 0.3684).abs() < 1e-4);
        assert_eq!(scored.direction(SegmentId(1)), Some(AllowedDirection::Both));
    }

    #[test]
    fn network_requires_checkins() {
        let net = line_network(100.0);
        assert_eq!(
            score_network(&net, &[], &[], &ScoringConfig::default()).unwrap_err(),
            ScoreError::EmptyCheckInSet
        );
    }

    #[test]
    fn far_data_scores_zero() {
        let net = line_network(100.0);
        let far: Vec<_> = (0..5).map(|i| GeoTaggedPhoto { loc: PlanarPoint::new(i as f64, 900.0) }).collect();
        let ck = vec![CheckIn { loc: PlanarPoint::new(0.0, -900.0), category: PoiGroup::NaturalScenery }];
        let scored = score_network(&net, &far, &ck, &ScoringConfig::default()).unwrap();
        assert_eq!(scored.si(SegmentId(1)), 0.0);
    }

    #[test]
    fn scenic_road_outranks_commercial_street() {
        // Road A: few photos, several natural-scenery check-ins.
        // Road B: more photos, many check-ins at shops and restaurants.
        let mut net = RoadNetwork::new();
        for (id, x, y) in [(1, 0.0, 0.0), (2, 500.0, 0.0), (3, 0.0, 2000.0), (4, 500.0, 2000.0)] {
            net.add_node(NodeId(id), PlanarPoint::new(x, y)).unwrap();
        }
        net.add_segment(SegmentId(1), NodeId(1), NodeId(2), &[]).unwrap();
        net.add_segment(SegmentId(2), NodeId(3), NodeId(4), &[]).unwrap();
        let mut photos: Vec<_> = (0..4).map(|i| GeoTaggedPhoto { loc: PlanarPoint::new(100.0 * i as f64, 10.0) }).collect();
        photos.extend((0..6).map(|i| GeoTaggedPhoto { loc: PlanarPoint::new(60.0 * i as f64, 2010.0) }));
        let mut ck: Vec<_> = (0..4)
            .map(|i| CheckIn { loc: PlanarPoint::new(120.0 * i as f64, -15.0), category: PoiGroup::NaturalScenery })
            .collect();
        ck.extend((0..8).map(|i| CheckIn { loc: PlanarPoint::new(60.0 * i as f64, 1990.0), category: PoiGroup::Others }));
        let scored = score_network(&net, &photos, &ck, &ScoringConfig::default()).unwrap();
        assert_eq!(scored.ranked(), vec![SegmentId(1), SegmentId(2)]);
        // photo density alone would rank them the other way
        assert!(scored.score(SegmentId(2)).unwrap().sp > scored.score(SegmentId(1)).unwrap().sp);
    }

    fn pts() -> impl Strategy<Value = Vec<(f64, f64, u8)>> {
        prop::collection::vec((-300.0..300.0f64, -300.0..300.0f64, 1u8..4), 1..40)
    }

    fn grid_net() -> RoadNetwork {
        let mut net = RoadNetwork::new();
        for i in 0..3 {
            for j in 0..3 {
                net.add_node(NodeId(i * 3 + j), PlanarPoint::new(i as f64 * 150.0 - 150.0, j as f64 * 150.0 - 150.0)).unwrap();
            }
        }
        let mut sid = 0;
        for i in 0..3 {
            for j in 0..3 {
                if i + 1 < 3 {
                    net.add_segment(SegmentId(sid), NodeId(i * 3 + j), NodeId((i + 1) * 3 + j), &[]).unwrap();
                    sid += 1;
                }
                if j + 1 < 3 {
                    net.add_segment(SegmentId(sid), NodeId(i * 3 + j), NodeId(i * 3 + j + 1), &[]).unwrap();
                    sid += 1;
                }
            }
        }
        net
    }

    fn build(v: &[(f64, f64, u8)], shift: PlanarPoint) -> (Vec<GeoTaggedPhoto>, Vec<CheckIn>) {
        let photos = v.iter().map(|&(x, y, _)| GeoTaggedPhoto { loc: PlanarPoint::new(x, y) + shift }).collect();
        let ck = v
            .iter()
            .map(|&(x, y, g)| CheckIn {
                loc: PlanarPoint::new(y, x) + shift,
                category: match g { 1 => PoiGroup::NaturalScenery, 2 => PoiGroup::TouristAttraction, _ => PoiGroup::Others },
            })
            .collect();
        (photos, ck)
    }

    proptest! {
        #[test]
        fn index_matches_direct_scoring(v in pts()) {
            let net = grid_net();
            let (photos, ck) = build(&v, PlanarPoint::ORIGIN);
            let cfg = ScoringConfig::default();
            let scored = score_network(&net, &photos, &ck, &cfg).unwrap();
            for seg in net.segments() {
                let sp = score_photos(seg, &photos, &cfg);
                let sc = score_checkins(seg, &ck, ck.len(), &cfg).unwrap();
                let s = scored.score(seg.id).unwrap();
                prop_assert_eq!(s.sp, sp);
                prop_assert_eq!(s.sc, sc);
                prop_assert_eq!(s.si, sp * sc);
            }
        }

        #[test]
        fn translation_invariant(v in pts(), dx in -1000i32..1000, dy in -1000i32..1000) {
            // integer shifts keep every coordinate exactly representable
            let shift = PlanarPoint::new(dx as f64, dy as f64);
            let net = grid_net();
            let (photos, ck) = build(&v, PlanarPoint::ORIGIN);
            let (photos2, ck2) = build(&v, shift);
            let cfg = ScoringConfig::default();
            let a = score_network(&net, &photos, &ck, &cfg).unwrap();
            let b = score_network(&net.translated(shift), &photos2, &ck2, &cfg).unwrap();
            prop_assert_eq!(a.scores(), b.scores());
        }

        #[test]
        fn permutation_invariant(v in pts(), k in 0usize..40) {
            let net = grid_net();
            let (photos, ck) = build(&v, PlanarPoint::ORIGIN);
            let mut p2 = photos.clone();
            p2.reverse();
            let n = p2.len();
            p2.rotate_left(k % n);
            let cfg = ScoringConfig::default();
            let a = score_network(&net, &photos, &ck, &cfg).unwrap();
            let b = score_network(&net, &p2, &ck, &cfg).unwrap();
            prop_assert_eq!(a.scores(), b.scores());
        }

        #[test]
        fn adding_in_range_data_never_decreases(v in pts()) {
            let net = grid_net();
            let (mut photos, mut ck) = build(&v, PlanarPoint::ORIGIN);
            let cfg = ScoringConfig::default();
            let seg = &net.segments()[0];
            let sp0 = score_photos(seg, &photos, &cfg);
            photos.push(GeoTaggedPhoto { loc: seg.polyline[0] });
            prop_assert!(score_photos(seg, &photos, &cfg) >= sp0);
            // sc with a fixed denominator is monotone in in-range counts
            let total = ck.len() + 1;
            let sc0 = score_checkins(seg, &ck, total, &cfg).unwrap();
            ck.push(CheckIn { loc: seg.polyline[0], category: PoiGroup::Others });
            prop_assert!(score_checkins(seg, &ck, total, &cfg).unwrap() >= sc0);
        }
    }
}
