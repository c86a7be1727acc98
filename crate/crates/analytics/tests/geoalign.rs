use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use savsim_analytics::geoalign::{
    align_boundary, feature_polygon, intra_city_trip_share, select_cities, CityCandidate, SelectionCriteria,
};
use savsim_analytics::GeoError;
use savsim_core::scenario::{Geometry, OdEntry, OdMatrix, Ring};

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Ring {
    vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1], [x0, y0]]
}

fn geometry(city: Ring, zones: Vec<(&str, Vec<Ring>)>) -> Geometry {
    Geometry {
        city: vec![city],
        zones: zones.into_iter().map(|(k, v)| (k.to_string(), v)).collect(),
        blocks: BTreeMap::new(),
    }
}

#[test]
fn inside_outside_and_exactly_half() {
    let g = geometry(
        rect(0.0, 0.0, 10.0, 10.0),
        vec![
            ("in", vec![rect(1.0, 1.0, 3.0, 3.0)]),
            ("out", vec![rect(20.0, 20.0, 22.0, 22.0)]),
            ("half", vec![rect(9.0, 4.0, 11.0, 6.0)]),
            ("third", vec![rect(9.0, 0.0, 12.0, 1.0)]),
        ],
    );
    let r = align_boundary(&g, 0.5).unwrap();
    assert_eq!(r.zones, vec!["half".to_string(), "in".to_string()]);
    assert_eq!(r.zone_overlap["in"], 1.0);
    assert_eq!(r.zone_overlap["out"], 0.0);
    assert!((r.zone_overlap["half"] - 0.5).abs() < 1e-12);
    assert!((r.zone_overlap["third"] - 1.0 / 3.0).abs() < 1e-12);
    // Selected area 8, of which 6 lies in the city of area 100.
    assert!((r.selected_area - 8.0).abs() < 1e-9);
    assert!((r.coverage - 0.06).abs() < 1e-12);
    assert!((r.spill - 0.25).abs() < 1e-12);
}

#[test]
fn multi_ring_feature_is_the_union() {
    let shape = feature_polygon("z", &[rect(0.0, 0.0, 2.0, 1.0), rect(1.0, 0.0, 3.0, 1.0)]).unwrap();
    use geo::Area;
    assert!((shape.unsigned_area() - 3.0).abs() < 1e-12);
    // Half of each ring's union lies in the city only when the union is used.
    let g = geometry(rect(0.0, 0.0, 1.5, 1.0), vec![("z", vec![rect(0.0, 0.0, 2.0, 1.0), rect(1.0, 0.0, 3.0, 1.0)])]);
    let r = align_boundary(&g, 0.5).unwrap();
    assert!((r.zone_overlap["z"] - 0.5).abs() < 1e-12);
    assert_eq!(r.zones, vec!["z".to_string()]);
}

#[test]
fn degenerate_polygons_name_the_feature() {
    let flat = vec![vec![[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]];
    let g = geometry(rect(0.0, 0.0, 1.0, 1.0), vec![("flat", flat)]);
    match align_boundary(&g, 0.5) {
        Err(GeoError::Degenerate { feature, .. }) => assert_eq!(feature, "flat"),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        feature_polygon("two", &[vec![[0.0, 0.0], [1.0, 0.0]]]),
        Err(GeoError::Degenerate { .. })
    ));
    assert!(matches!(feature_polygon("none", &[]), Err(GeoError::Degenerate { .. })));
    assert!(matches!(
        feature_polygon("nan", &[vec![[0.0, 0.0], [f64::NAN, 0.0], [1.0, 1.0]]]),
        Err(GeoError::Degenerate { .. })
    ));
}

fn inside(poly: &[[f64; 2]], x: f64, y: f64) -> bool {
    let mut c = false;
    let n = poly.len();
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = (poly[i][0], poly[i][1]);
        let (xj, yj) = (poly[j][0], poly[j][1]);
        if (yi > y) != (yj > y) && x < (xj - xi) * (y - yi) / (yj - yi) + xi {
            c = !c;
        }
        j = i;
    }
    c
}

#[test]
fn overlap_matches_monte_carlo_estimate() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let city: Ring = vec![[0.0, 0.0], [8.0, 1.0], [9.0, 7.0], [4.0, 10.0], [-1.0, 6.0]];
    for case in 0..10 {
        let cx = rng.random_range(-2.0..10.0);
        let cy = rng.random_range(-2.0..11.0);
        let tri: Ring = (0..3)
            .map(|k| {
                let a = k as f64 * 2.1 + rng.random_range(0.0..1.5);
                let r = rng.random_range(1.0..4.0);
                [cx + r * a.cos(), cy + r * a.sin()]
            })
            .collect();
        let g = geometry(city.clone(), vec![("z", vec![tri.clone()])]);
        let got = align_boundary(&g, 0.5).unwrap().zone_overlap["z"];
        let (xmin, xmax) = tri.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p[0]), b.max(p[0])));
        let (ymin, ymax) = tri.iter().fold((f64::MAX, f64::MIN), |(a, b), p| (a.min(p[1]), b.max(p[1])));
        let (mut hit, mut both) = (0usize, 0usize);
        for _ in 0..200_000 {
            let x = rng.random_range(xmin..xmax);
            let y = rng.random_range(ymin..ymax);
            if inside(&tri, x, y) {
                hit += 1;
                if inside(&city, x, y) {
                    both += 1;
                }
            }
        }
        let estimate = both as f64 / hit as f64;
        assert!((got - estimate).abs() < 0.01, "case {case}: {got} vs {estimate}");
    }
}

proptest! {
    #[test]
    fn selection_is_monotone_in_threshold(
        zones in proptest::collection::vec((-5.0f64..12.0, -5.0f64..12.0, 0.5f64..4.0, 0.5f64..4.0), 1..12),
        t1 in 0.0f64..1.0,
        t2 in 0.0f64..1.0,
    ) {
        let rings: Vec<(String, Vec<Ring>)> = zones
            .iter()
            .enumerate()
            .map(|(i, &(x, y, w, h))| (format!("z{i}"), vec![rect(x, y, x + w, y + h)]))
            .collect();
        let g = Geometry {
            city: vec![rect(0.0, 0.0, 10.0, 10.0)],
            zones: rings.into_iter().collect(),
            blocks: BTreeMap::new(),
        };
        let (lo, hi) = (t1.min(t2), t1.max(t2));
        let a = align_boundary(&g, lo).unwrap();
        let b = align_boundary(&g, hi).unwrap();
        prop_assert!(b.zones.iter().all(|z| a.zones.contains(z)));
        prop_assert!((0.0..=1.0).contains(&a.coverage) && (0.0..=1.0).contains(&a.spill));
        // Selected area splits into its in-city and out-of-city parts, up to
        // the rounding of the clipping backend (about 1e-9 relative).
        let in_city = a.coverage * a.city_area;
        let outside = a.spill * a.selected_area;
        prop_assert!((in_city + outside - a.selected_area).abs() <= 1e-6 * (1.0 + a.selected_area));
    }
}

fn od(entries: &[(&str, &str, f64)]) -> Vec<OdMatrix> {
    vec![OdMatrix {
        period: "am".into(),
        entries: entries
            .iter()
            .map(|&(o, d, m)| OdEntry { origin: o.into(), destination: d.into(), mean: m })
            .collect(),
    }]
}

#[test]
fn trip_share_cases() {
    let sel = vec!["a".to_string(), "b".to_string()];
    assert_eq!(intra_city_trip_share(&od(&[("a", "b", 5.0), ("b", "a", 2.0)]), &sel), Ok(1.0));
    assert_eq!(intra_city_trip_share(&od(&[("a", "x", 5.0), ("y", "b", 2.0)]), &sel), Ok(0.0));
    let share = intra_city_trip_share(&od(&[("a", "b", 30.0), ("a", "x", 40.0), ("y", "a", 30.0), ("x", "y", 99.0)]), &sel)
        .unwrap();
    assert!((share - 0.30).abs() < 1e-15);
    assert_eq!(intra_city_trip_share(&od(&[("x", "y", 1.0)]), &sel), Err(GeoError::ZeroDenominator));
    assert_eq!(intra_city_trip_share(&od(&[]), &[]), Err(GeoError::EmptySelection));
}

#[test]
fn city_selection_is_strict() {
    let cands = [
        CityCandidate { city: "ok".into(), n_zones: 11, share: 0.25 },
        CityCandidate { city: "ten".into(), n_zones: 10, share: 0.9 },
        CityCandidate { city: "edge".into(), n_zones: 50, share: 0.20 },
    ];
    let rows = select_cities(&cands, &SelectionCriteria::default());
    let accepted: Vec<bool> = rows.iter().map(|r| r.accepted).collect();
    assert_eq!(accepted, vec![true, false, false]);
    let loose = SelectionCriteria { min_zones: 9, min_share: 0.1 };
    assert!(select_cities(&cands, &loose).iter().all(|r| r.accepted));
}
