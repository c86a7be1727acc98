//! Matching zone and block outlines to a city boundary, the intra-city trip
//! share, and the city admission rule.
//!
//! A feature is selected when at least `overlap_threshold` of its area lies
//! inside the city. Features given as several rings are the union of those
//! rings.

use std::collections::{BTreeMap, HashSet};

use geo::{Area, BooleanOps, Coord, LineString, MultiPolygon, Polygon};
use serde::{Deserialize, Serialize};

use savsim_core::scenario::{Geometry, OdMatrix, Ring};

use crate::error::GeoError;

pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 0.5;

/// Relative area below which a clipped piece counts as empty.
const AREA_EPS: f64 = 1e-12;

/// Checks and converts the rings of one feature.
pub fn feature_polygon(feature: &str, rings: &[Ring]) -> Result<MultiPolygon<f64>, GeoError> {
    let bad = |reason: String| GeoError::Degenerate {
        feature: feature.to_string(),
        reason,
    };
    if rings.is_empty() {
        return Err(bad("no rings".into()));
    }
    let mut out: Option<MultiPolygon<f64>> = None;
    for (i, ring) in rings.iter().enumerate() {
        if ring.iter().any(|p| !p[0].is_finite() || !p[1].is_finite()) {
            return Err(bad(format!("ring {i} has a non-finite coordinate")));
        }
        let mut pts: Vec<[f64; 2]> = ring.clone();
        if pts.len() > 1 && pts.first() == pts.last() {
            pts.pop();
        }
        if pts.len() < 3 {
            return Err(bad(format!("ring {i} has fewer than three vertices")));
        }
        let poly = Polygon::new(
            LineString::from(pts.iter().map(|p| Coord { x: p[0], y: p[1] }).collect::<Vec<_>>()),
            Vec::new(),
        );
        if !(poly.unsigned_area() > 0.0) {
            return Err(bad(format!("ring {i} has zero area")));
        }
        let piece = MultiPolygon::new(vec![poly]);
        out = Some(match out {
            None => piece,
            Some(acc) => acc.union(&piece),
        });
    }
    Ok(out.expect("at least one ring"))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlignmentResult {
    pub zones: Vec<String>,
    pub blocks: Vec<String>,
    /// Share of the city's area covered by the selected zones.
    pub coverage: f64,
    /// Share of the selected zones' area lying outside the city.
    pub spill: f64,
    /// Area of the selected zones.
    pub selected_area: f64,
    pub city_area: f64,
    /// Per zone, the fraction of its area inside the city.
    pub zone_overlap: BTreeMap<String, f64>,
}

fn overlap_fraction(city: &MultiPolygon<f64>, feature: &MultiPolygon<f64>) -> f64 {
    let area = feature.unsigned_area();
    let inside = city.intersection(feature).unsigned_area();
    (inside / area).clamp(0.0, 1.0)
}

fn select(
    city: &MultiPolygon<f64>,
    features: &BTreeMap<String, Vec<Ring>>,
    threshold: f64,
) -> Result<(Vec<String>, BTreeMap<String, f64>, Vec<MultiPolygon<f64>>), GeoError> {
    let mut ids = Vec::new();
    let mut fractions = BTreeMap::new();
    let mut shapes = Vec::new();
    for (id, rings) in features {
        let shape = feature_polygon(id, rings)?;
        let f = overlap_fraction(city, &shape);
        fractions.insert(id.clone(), f);
        if f >= threshold {
            ids.push(id.clone());
            shapes.push(shape);
        }
    }
    Ok((ids, fractions, shapes))
}

/// Zones and blocks whose in-city share of area reaches `overlap_threshold`.
pub fn align_boundary(geom: &Geometry, overlap_threshold: f64) -> Result<AlignmentResult, GeoError> {
    let city = feature_polygon("city", &geom.city)?;
    let city_area = city.unsigned_area();
    let (zones, zone_overlap, shapes) = select(&city, &geom.zones, overlap_threshold)?;
    let (blocks, _, _) = select(&city, &geom.blocks, overlap_threshold)?;
    let selected = shapes
        .into_iter()
        .reduce(|acc, s| acc.union(&s))
        .unwrap_or_else(|| MultiPolygon::new(Vec::new()));
    let selected_area = selected.unsigned_area();
    let covered = selected.intersection(&city).unsigned_area();
    let outside = selected.difference(&city).unsigned_area();
    let clean = |x: f64, total: f64| {
        if total > 0.0 && x > AREA_EPS * total {
            (x / total).clamp(0.0, 1.0)
        } else {
            0.0
        }
    };
    Ok(AlignmentResult {
        zones,
        blocks,
        coverage: clean(covered, city_area),
        spill: clean(outside, selected_area),
        selected_area,
        city_area,
        zone_overlap,
    })
}

/// OD mass with both ends in `selected` over OD mass with at least one end
/// there, summed over every period.
pub fn intra_city_trip_share(od: &[OdMatrix], selected: &[String]) -> Result<f64, GeoError> {
    if selected.is_empty() {
        return Err(GeoError::EmptySelection);
    }
    let set: HashSet<&str> = selected.iter().map(String::as_str).collect();
    let (mut inside, mut touching) = (0.0, 0.0);
    for m in od {
        for e in &m.entries {
            let (o, d) = (set.contains(e.origin.as_str()), set.contains(e.destination.as_str()));
            if o && d {
                inside += e.mean;
            }
            if o || d {
                touching += e.mean;
            }
        }
    }
    if !(touching > 0.0) {
        return Err(GeoError::ZeroDenominator);
    }
    Ok(inside / touching)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionCriteria {
    /// A city needs strictly more zones than this.
    pub min_zones: usize,
    /// A city needs an intra-city share strictly above this.
    pub min_share: f64,
}

impl Default for SelectionCriteria {
    fn default() -> Self {
        Self {
            min_zones: 10,
            min_share: 0.20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CityCandidate {
    pub city: String,
    pub n_zones: usize,
    pub share: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRow {
    pub city: String,
    pub n_zones: usize,
    pub share: f64,
    pub accepted: bool,
}

pub fn select_cities(candidates: &[CityCandidate], criteria: &SelectionCriteria) -> Vec<SelectionRow> {
    candidates
        .iter()
        .map(|c| SelectionRow {
            city: c.city.clone(),
            n_zones: c.n_zones,
            share: c.share,
            accepted: c.n_zones > criteria.min_zones && c.share > criteria.min_share,
        })
        .collect()
}
