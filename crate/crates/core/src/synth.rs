//! Parameterized synthetic grid cities.
//!
//! The city is an `n × n` block of square zones, optionally surrounded by
//! `halo_rings` rings of external zones that lie outside the city polygon
//! and exchange trips with it. Every zone has one network node at its
//! centroid; streets join 4-neighbours (plus one diagonal per cell when
//! requested). `link_keep_fraction < 1` thins the street grid: a random
//! spanning tree is always kept so the network stays connected.
//!
//! Each zone is split into `blocks_per_zone_side²` block groups. A block's
//! activity is split over five land-use categories (single-family housing,
//! multi-family housing, retail/service jobs, professional jobs,
//! labor/resource jobs) with shares `mix/5 + (1 − mix)·[k = c(b)]`, where
//! `c(b)` is the block's dominant category. OD means follow a gravity weight
//! normalized to mean one per pair and are split over periods by
//! departure-histogram mass.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demand::default_departure_histogram;
use crate::error::ScenarioError;
use crate::scenario::{
    BlockGroup, Flow, Geometry, Link, Network, Node, OdEntry, OdMatrix, PeriodSchedule, Point,
    Ring, Scenario, SectorJobs, Zone, ZoneConnector,
};
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub name: String,
    pub region: String,
    /// Regional coordinates of the city (miles).
    pub location: [f64; 2],
    pub n_zones_side: usize,
    pub zone_size_miles: f64,
    /// Mean daily trips per OD pair before density scaling.
    pub base_od_rate: f64,
    /// Scales block activity and every OD mean.
    pub density_multiplier: f64,
    pub diversity_mix: f64,
    pub extra_diagonal_links: bool,
    pub halo_rings: usize,
    /// Multiplier on OD weight for pairs touching an external zone.
    pub external_od_factor: f64,
    pub link_keep_fraction: f64,
    pub blocks_per_zone_side: usize,
    /// Activity units (housing units plus jobs) per square mile at unit density.
    pub activity_per_sqmi: f64,
    pub speed_mph: f64,
    pub lanes: u32,
    pub ped_allowed: bool,
    /// Fractional travel-time increase in both peak periods.
    pub peak_congestion: f64,
    /// Gravity decay per mile.
    pub distance_decay: f64,

    /// Work destinations kept per home block in the commute-flow table.
    pub flow_destinations: usize,
}

impl Default for SynthParams {
    fn default() -> Self {
        Self {
            name: "synthetic".into(),
            region: "r0".into(),
            location: [0.0, 0.0],
            n_zones_side: 4,
            zone_size_miles: 1.0,
            base_od_rate: 5.0,
            density_multiplier: 1.0,
            diversity_mix: 0.5,
            extra_diagonal_links: false,
            halo_rings: 0,
            external_od_factor: 1.0,
            link_keep_fraction: 1.0,
            blocks_per_zone_side: 2,
            activity_per_sqmi: 4000.0,
            speed_mph: 25.0,
            lanes: 1,
            ped_allowed: true,
            peak_congestion: 0.3,
            distance_decay: 0.3,
            flow_destinations: 5,
        }
    }
}

impl SynthParams {
    /// Positional constructor mirroring the six core generator knobs.
    pub fn grid(
        n_zones_side: usize,
        zone_size_miles: f64,
        base_od_rate: f64,
        density_multiplier: f64,
        diversity_mix: f64,
        extra_diagonal_links: bool,
    ) -> Self {
        Self {
            n_zones_side,
            zone_size_miles,
            base_od_rate,
            density_multiplier,
            diversity_mix,
            extra_diagonal_links,
            ..Self::default()
        }
    }

    fn check(&self) -> Result<(), ScenarioError> {
        let bad = |m: &str| Err(ScenarioError::InvalidParams(m.to_string()));
        if self.n_zones_side < 2 {
            return bad("n_zones_side must be >= 2");
        }
        if !(self.zone_size_miles > 0.0 && self.zone_size_miles.is_finite()) {
            return bad("zone_size_miles must be > 0");
        }
        if !(self.base_od_rate >= 0.0 && self.base_od_rate.is_finite()) {
            return bad("base_od_rate must be >= 0");
        }
        if !(self.density_multiplier > 0.0 && self.density_multiplier.is_finite()) {
            return bad("density_multiplier must be > 0");
        }
        if !(0.0..=1.0).contains(&self.diversity_mix) {
            return bad("diversity_mix must lie in [0, 1]");
        }
        if !(self.link_keep_fraction > 0.0 && self.link_keep_fraction <= 1.0) {
            return bad("link_keep_fraction must lie in (0, 1]");
        }
        if !(self.external_od_factor >= 0.0) {
            return bad("external_od_factor must be >= 0");
        }
        if self.blocks_per_zone_side == 0 {
            return bad("blocks_per_zone_side must be >= 1");
        }
        if !(self.speed_mph > 0.0) || !(self.activity_per_sqmi > 0.0) {
            return bad("speed_mph and activity_per_sqmi must be > 0");
        }
        if !(self.peak_congestion >= 0.0) || !(self.distance_decay >= 0.0) {
            return bad("peak_congestion and distance_decay must be >= 0");
        }
        Ok(())
    }
}

fn square(x0: f64, y0: f64, size: f64) -> Ring {
    vec![
        [x0, y0],
        [x0 + size, y0],
        [x0 + size, y0 + size],
        [x0, y0 + size],
        [x0, y0],
    ]
}

fn find(parent: &mut [usize], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

/// Builds a grid city. Identical parameters and seed give an identical
/// scenario (and therefore identical files).
pub fn generate_synthetic_city(params: &SynthParams, seed: u64) -> Result<Scenario, ScenarioError> {
    params.check()?;
    let p = params;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "synth"));
    let n = p.n_zones_side;
    let h = p.halo_rings;
    let side = n + 2 * h;
    let s = p.zone_size_miles;
    let zid = |r: usize, c: usize| format!("z{r:03}_{c:03}");
    let nid = |r: usize, c: usize| format!("n{r:03}_{c:03}");
    let internal = |r: usize, c: usize| r >= h && r < h + n && c >= h && c < h + n;

    let periods = PeriodSchedule::standard();
    let period_ids = periods.period_ids();

    // nodes and zones
    let mut nodes = Vec::with_capacity(side * side);
    let mut zones = Vec::with_capacity(side * side);
    let mut connectors = Vec::with_capacity(side * side);
    let mut geometry = Geometry {
        city: vec![square(h as f64 * s, h as f64 * s, n as f64 * s)],
        ..Geometry::default()
    };
    for r in 0..side {
        for c in 0..side {
            let centroid = Point::new((c as f64 + 0.5) * s, (r as f64 + 0.5) * s);
            nodes.push(Node {
                id: nid(r, c),
                pos: centroid,
            });
            zones.push(Zone {
                id: zid(r, c),
                centroid,
                area: s * s,
                blocks: Vec::new(),
            });
            connectors.push(ZoneConnector {
                zone: zid(r, c),
                node: nid(r, c),
            });
            geometry
                .zones
                .insert(zid(r, c), vec![square(c as f64 * s, r as f64 * s, s)]);
        }
    }

    // streets
    let idx = |r: usize, c: usize| r * side + c;
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for r in 0..side {
        for c in 0..side {
            if c + 1 < side {
                edges.push((idx(r, c), idx(r, c + 1), s));
            }
            if r + 1 < side {
                edges.push((idx(r, c), idx(r + 1, c), s));
            }
            if p.extra_diagonal_links && r + 1 < side && c + 1 < side {
                edges.push((idx(r, c), idx(r + 1, c + 1), s * std::f64::consts::SQRT_2));
            }
        }
    }
    // thinning draws from its own stream so land use does not depend on it
    let mut keep = vec![p.link_keep_fraction >= 1.0; edges.len()];
    if p.link_keep_fraction < 1.0 {
        let mut link_rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "synth:links"));
        let mut order: Vec<usize> = (0..edges.len()).collect();
        order.shuffle(&mut link_rng);
        let mut parent: Vec<usize> = (0..side * side).collect();
        for &e in &order {
            let (a, b) = (find(&mut parent, edges[e].0), find(&mut parent, edges[e].1));
            if a != b {
                parent[a] = b;
                keep[e] = true;
            }
        }
        for k in keep.iter_mut() {
            let draw: f64 = link_rng.random();
            if !*k && draw < p.link_keep_fraction {
                *k = true;
            }
        }
    }
    let mut links = Vec::new();
    for (e, &(a, b, len)) in edges.iter().enumerate() {
        if !keep[e] {
            continue;
        }
        let free = len / p.speed_mph * 60.0;
        let travel_time: BTreeMap<String, f64> = period_ids
            .iter()
            .map(|pid| {
                let t = if *pid == periods.am_peak || *pid == periods.pm_peak {
                    free * (1.0 + p.peak_congestion)
                } else {
                    free
                };
                (pid.clone(), t)
            })
            .collect();
        for (from, to) in [(a, b), (b, a)] {
            links.push(Link {
                from: nodes[from].id.clone(),
                to: nodes[to].id.clone(),
                length: len,
                speed: p.speed_mph,
                lanes: p.lanes,
                ped_allowed: p.ped_allowed,
                travel_time: travel_time.clone(),
            });
        }
    }

    // blocks
    let k = p.blocks_per_zone_side;
    let bs = s / k as f64;
    let block_area = bs * bs;
    let mut blocks = Vec::with_capacity(side * side * k * k);
    for r in 0..side {
        for c in 0..side {
            let zi = idx(r, c);
            for br in 0..k {
                for bc in 0..k {
                    let x0 = c as f64 * s + bc as f64 * bs;
                    let y0 = r as f64 * s + br as f64 * bs;
                    let id = format!("b{}_{}", zid(r, c), br * k + bc);
                    let activity = p.activity_per_sqmi
                        * block_area
                        * rng.random_range(0.5..1.5)
                        * p.density_multiplier;
                    let dominant = rng.random_range(0..5usize);
                    let share = |cat: usize| {
                        p.diversity_mix * 0.2
                            + (1.0 - p.diversity_mix) * if cat == dominant { 1.0 } else { 0.0 }
                    };
                    let h_sf = activity * share(0);
                    let h_mf = activity * share(1);
                    let reserve = activity * share(2);
                    let prof = activity * share(3);
                    let other = activity * share(4);
                    let labor = other * 0.75;
                    let resource = other - labor;
                    let population = 2.4 * (h_sf + h_mf);
                    let jobs = SectorJobs {
                        reserve,
                        prof,
                        labor,
                        resource,
                        office: 0.7 * prof + 0.1 * reserve,
                        industry: labor + 0.5 * resource,
                        entertain: 0.25 * reserve,
                    };
                    zones[zi].blocks.push(blocks.len());
                    geometry.blocks.insert(id.clone(), vec![square(x0, y0, bs)]);
                    blocks.push(BlockGroup {
                        id,
                        zone: zid(r, c),
                        centroid: Point::new(x0 + 0.5 * bs, y0 + 0.5 * bs),
                        area: block_area,
                        population,
                        households: h_sf + h_mf,
                        housing_sf: h_sf,
                        housing_mf: h_mf,
                        workers: 0.5 * population,
                        jobs,
                    });
                }
            }
        }
    }

    // OD gravity weights, computed on density-free activity so scaling is exact
    let nz = zones.len();
    let prod: Vec<f64> = zones
        .iter()
        .map(|z| z.blocks.iter().map(|&b| blocks[b].population).sum::<f64>() / p.density_multiplier)
        .collect();
    let attr: Vec<f64> = zones
        .iter()
        .map(|z| z.blocks.iter().map(|&b| blocks[b].jobs.job_all()).sum::<f64>() / p.density_multiplier)
        .collect();
    let mean_p = prod.iter().sum::<f64>() / nz as f64;
    let mean_j = attr.iter().sum::<f64>() / nz as f64;
    let eps = 0.05 * mean_p * mean_j;
    let mut weight = vec![0.0; nz * nz];
    for o in 0..nz {
        for d in 0..nz {
            let dist = if o == d {
                0.5 * zones[o].area.sqrt()
            } else {
                zones[o].centroid.distance(&zones[d].centroid)
            };
            let (ro, co) = (o / side, o % side);
            let (rd, cd) = (d / side, d % side);
            let ext = if internal(ro, co) && internal(rd, cd) {
                1.0
            } else {
                p.external_od_factor
            };
            weight[o * nz + d] =
                ext * (prod[o] * attr[d] + attr[o] * prod[d] + eps) * (-p.distance_decay * dist).exp();
        }
    }
    let mean_w = weight.iter().sum::<f64>() / weight.len() as f64;
    let hist = default_departure_histogram();
    let mut od = Vec::with_capacity(period_ids.len());
    for pid in &period_ids {
        let mass: f64 = periods
            .windows
            .iter()
            .filter(|w| &w.id == pid)
            .map(|w| hist.mass_between(w.start, w.end))
            .sum();
        let mut entries = Vec::with_capacity(nz * nz);
        for o in 0..nz {
            for d in 0..nz {
                let w = if mean_w > 0.0 { weight[o * nz + d] / mean_w } else { 0.0 };
                entries.push(OdEntry {
                    origin: zones[o].id.clone(),
                    destination: zones[d].id.clone(),
                    mean: (w * mass * p.base_od_rate) * p.density_multiplier,
                });
            }
        }
        od.push(OdMatrix {
            period: pid.clone(),
            entries,
        });
    }

    // commute flows: each home block sends its workers to its strongest destinations
    let mut flows = Vec::new();
    if p.flow_destinations > 0 {
        for home in &blocks {
            if home.workers <= 0.0 {
                continue;
            }
            let mut scored: Vec<(f64, usize)> = blocks
                .iter()
                .enumerate()
                .filter(|(_, w)| w.id != home.id)
                .map(|(wi, w)| {
                    let d = home.centroid.distance(&w.centroid);
                    (w.jobs.job_all() * (-p.distance_decay * d).exp(), wi)
                })
                .filter(|(g, _)| *g > 0.0)
                .collect();
            scored.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            scored.truncate(p.flow_destinations);
            let total: f64 = scored.iter().map(|(g, _)| g).sum();
            for (g, wi) in scored {
                flows.push(Flow {
                    home: home.id.clone(),
                    work: blocks[wi].id.clone(),
                    count: home.workers * g / total,
                });
            }
        }
    }

    Ok(Scenario {
        name: p.name.clone(),
        region: p.region.clone(),
        location: Point::new(p.location[0], p.location[1]),
        periods,
        zones,
        blocks,
        network: Network {
            nodes,
            links,
            zone_connector: connectors,
        },
        od,
        geometry,
        flows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::validate_scenario;

    #[test]
    fn small_city_is_valid() {
        let s = generate_synthetic_city(&SynthParams::grid(2, 1.0, 5.0, 1.0, 1.0, false), 7).unwrap();
        assert_eq!(s.zones.len(), 4);
        assert_eq!(s.network.links.len(), 8);
        assert!(validate_scenario(&s).is_empty());
    }

    #[test]
    fn thinned_and_haloed_city_stays_connected() {
        let params = SynthParams {
            n_zones_side: 5,
            halo_rings: 1,
            link_keep_fraction: 0.3,
            extra_diagonal_links: true,
            ..SynthParams::default()
        };
        let s = generate_synthetic_city(&params, 3).unwrap();
        assert_eq!(s.zones.len(), 49);
        assert!(validate_scenario(&s).is_empty(), "{:?}", validate_scenario(&s));
    }

    #[test]
    fn rejects_bad_params() {
        let params = SynthParams {
            n_zones_side: 1,
            ..SynthParams::default()
        };
        assert!(generate_synthetic_city(&params, 0).is_err());
    }
}
