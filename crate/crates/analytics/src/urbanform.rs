//! City-level urban-form measures: densities, sector accessibility, street
//! design, job-housing entropy, commute-flow clustering and AM-peak speed.
//!
//! Block-level measures are aggregated to the city by both median and mean.
//! Street design measures use the nodes lying inside the city's zones and
//! the links joining two such nodes. A street segment is the unordered node
//! pair of one or more directed links; it is auto-oriented when any of its
//! links is, pedestrian-oriented when all of them are.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::Write;
use std::path::Path;

use geo::{Coord, Intersects, LineString, MultiPolygon, Point as GeoPoint, Polygon};
use serde::{Deserialize, Serialize};

use savsim_core::scenario::{BlockGroup, Flow, Network, Point, Ring, Scenario};

use crate::error::UrbanFormError;

pub const ACCESS_RADII: [f64; 8] = [1.0, 3.0, 5.0, 10.0, 20.0, 40.0, 60.0, 80.0];

/// Speed above which a link is auto-oriented, mph.
pub const AUTO_SPEED_MPH: f64 = 41.0;
/// Speed below which a link is pedestrian-oriented, mph.
pub const PED_SPEED_MPH: f64 = 30.0;
/// Lanes in one direction at which a link is auto-oriented.
pub const AUTO_LANES: u32 = 4;

/// Job-housing entropy of one block over five shares: single-family units,
/// multi-family units, retail/service jobs, professional jobs, and
/// labor-intensive plus resource jobs. Uses natural logs with a 0.01
/// smoothing term, so a single-use block scores slightly below zero.
pub fn job_house_entropy(b: &BlockGroup) -> Result<f64, UrbanFormError> {
    let parts = [
        b.housing_sf,
        b.housing_mf,
        b.jobs.reserve,
        b.jobs.prof,
        b.jobs.labor + b.jobs.resource,
    ];
    let denom = b.housing_sf + b.housing_mf + b.jobs.job_all();
    if !(denom > 0.0) {
        return Err(UrbanFormError::EmptyBlock(b.id.clone()));
    }
    let sum: f64 = parts
        .iter()
        .map(|x| {
            let p = x / denom;
            p * (p + 0.01).ln()
        })
        .sum();
    Ok(-sum / 5f64.ln())
}

/// How a triplet's value is formed from its two edge weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TripletValue {
    #[default]
    ArithmeticMean,
    GeometricMean,
}

impl TripletValue {
    fn of(self, a: f64, b: f64) -> f64 {
        match self {
            TripletValue::ArithmeticMean => (a + b) / 2.0,
            TripletValue::GeometricMean => (a * b).sqrt(),
        }
    }
}

/// Home-to-work commuter counts between block groups.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct CommuteFlowGraph {
    pub nodes: Vec<String>,
    /// `(home, work) -> count`, indices into `nodes`.
    pub edges: BTreeMap<(usize, usize), f64>,
}

impl CommuteFlowGraph {
    pub fn from_flows(flows: &[Flow]) -> Self {
        let mut ids: BTreeSet<&str> = BTreeSet::new();
        for f in flows {
            ids.insert(&f.home);
            ids.insert(&f.work);
        }
        let nodes: Vec<String> = ids.into_iter().map(str::to_string).collect();
        let index: HashMap<&str, usize> = nodes.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        let mut edges = BTreeMap::new();
        for f in flows {
            *edges.entry((index[f.home.as_str()], index[f.work.as_str()])).or_insert(0.0) += f.count;
        }
        Self { nodes, edges }
    }

    /// Undirected weights `w_ij + w_ji`, self-loops and zero weights dropped.
    pub fn symmetrized(&self) -> Vec<BTreeMap<usize, f64>> {
        let mut adj = vec![BTreeMap::new(); self.nodes.len()];
        for (&(a, b), &w) in &self.edges {
            if a == b || !(w > 0.0) {
                continue;
            }
            *adj[a].entry(b).or_insert(0.0) += w;
            *adj[b].entry(a).or_insert(0.0) += w;
        }
        adj
    }
}

/// Weighted global clustering coefficient: total value of closed triplets
/// over total value of all triplets, on the symmetrized graph.
pub fn od_clustering_coefficient(g: &CommuteFlowGraph, value: TripletValue) -> Result<f64, UrbanFormError> {
    let adj = g.symmetrized();
    let mut closed = 0.0;
    let mut total = 0.0;
    for nbrs in &adj {
        let list: Vec<(usize, f64)> = nbrs.iter().map(|(&k, &w)| (k, w)).collect();
        for (a, &(j, wj)) in list.iter().enumerate() {
            for &(k, wk) in &list[a + 1..] {
                let v = value.of(wj, wk);
                total += v;
                if adj[j].contains_key(&k) {
                    closed += v;
                }
            }
        }
    }
    if !(total > 0.0) {
        return Err(UrbanFormError::NoTriplets);
    }
    Ok(closed / total)
}

/// Job sectors used for accessibility counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Sector {
    Service,
    Retail,
    Office,
    Indust,
    Entertain,
}

impl Sector {
    pub const ALL: [Sector; 5] = [Sector::Service, Sector::Retail, Sector::Office, Sector::Indust, Sector::Entertain];

    pub fn name(self) -> &'static str {
        match self {
            Sector::Service => "Service",
            Sector::Retail => "Retail",
            Sector::Office => "Office",
            Sector::Indust => "Indust",
            Sector::Entertain => "Entertain",
        }
    }

    /// Service counts all retail/service jobs; retail counts those outside
    /// entertainment.
    pub fn jobs(self, b: &BlockGroup) -> f64 {
        match self {
            Sector::Service => b.jobs.reserve,
            Sector::Retail => (b.jobs.reserve - b.jobs.entertain).max(0.0),
            Sector::Office => b.jobs.office,
            Sector::Indust => b.jobs.industry,
            Sector::Entertain => b.jobs.entertain,
        }
    }
}

/// `out[block][r]`: the sector's jobs over all blocks whose centroid lies
/// within `radii[r]` miles (inclusive) of the block's centroid.
pub fn accessibility_counts(blocks: &[BlockGroup], sector: Sector, radii: &[f64]) -> Vec<Vec<f64>> {
    let jobs: Vec<f64> = blocks.iter().map(|b| sector.jobs(b)).collect();
    blocks
        .iter()
        .map(|b| {
            let mut row = vec![0.0; radii.len()];
            for (other, &j) in blocks.iter().zip(&jobs) {
                let d = b.centroid.distance(&other.centroid);
                for (slot, &r) in row.iter_mut().zip(radii) {
                    if d <= r {
                        *slot += j;
                    }
                }
            }
            row
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct IntersectionCounts {
    pub ped_3leg: usize,
    /// Pedestrian-oriented intersections with four or more legs.
    pub ped_4leg: usize,
    pub nonauto_total: usize,
    pub auto_total: usize,
}

fn link_is_auto(speed: f64, lanes: u32, ped_allowed: bool) -> bool {
    speed > AUTO_SPEED_MPH || lanes >= AUTO_LANES || !ped_allowed
}

fn link_is_ped(speed: f64, lanes: u32, ped_allowed: bool) -> bool {
    !link_is_auto(speed, lanes, ped_allowed) && speed < PED_SPEED_MPH
}

#[derive(Debug, Clone, Copy)]
struct Segment {
    a: usize,
    b: usize,
    length: f64,
    auto: bool,
    ped: bool,
}

/// Undirected street segments; the longest directed link sets the length.
fn segments(network: &Network) -> Vec<Segment> {
    let index: HashMap<&str, usize> = network.nodes.iter().enumerate().map(|(i, n)| (n.id.as_str(), i)).collect();
    let mut by_pair: BTreeMap<(usize, usize), Segment> = BTreeMap::new();
    for l in &network.links {
        let (Some(&u), Some(&v)) = (index.get(l.from.as_str()), index.get(l.to.as_str())) else {
            continue;
        };
        if u == v {
            continue;
        }
        let key = (u.min(v), u.max(v));
        let auto = link_is_auto(l.speed, l.lanes, l.ped_allowed);
        let ped = link_is_ped(l.speed, l.lanes, l.ped_allowed);
        by_pair
            .entry(key)
            .and_modify(|s| {
                s.length = s.length.max(l.length);
                s.auto |= auto;
                s.ped &= ped;
            })
            .or_insert(Segment {
                a: key.0,
                b: key.1,
                length: l.length,
                auto,
                ped,
            });
    }
    by_pair.into_values().collect()
}

/// Classifies every node with three or more distinct neighbours.
pub fn classify_intersections(network: &Network) -> IntersectionCounts {
    let segs = segments(network);
    let mut incident: Vec<Vec<Segment>> = vec![Vec::new(); network.nodes.len()];
    for s in &segs {
        incident[s.a].push(*s);
        incident[s.b].push(*s);
    }
    let mut out = IntersectionCounts::default();
    for legs in &incident {
        if legs.len() < 3 {
            continue;
        }
        if legs.iter().any(|s| s.auto) {
            out.auto_total += 1;
            continue;
        }
        out.nonauto_total += 1;
        if legs.iter().all(|s| s.ped) {
            if legs.len() == 3 {
                out.ped_3leg += 1;
            } else {
                out.ped_4leg += 1;
            }
        }
    }
    out
}

/// `(pedestrian-oriented miles, auto-oriented miles)` of street segments.
pub fn network_miles(network: &Network) -> (f64, f64) {
    segments(network).iter().fold((0.0, 0.0), |(p, a), s| {
        (p + if s.ped { s.length } else { 0.0 }, a + if s.auto { s.length } else { 0.0 })
    })
}

fn polygon(ring: &Ring) -> Polygon<f64> {
    Polygon::new(
        LineString::from(ring.iter().map(|p| Coord { x: p[0], y: p[1] }).collect::<Vec<_>>()),
        Vec::new(),
    )
}

/// Nodes inside (or on the edge of) the scenario's zones, and the links
/// between them. Without zone outlines the network is returned whole.
pub fn network_within_zones(s: &Scenario) -> Network {
    let outlines: Vec<Polygon<f64>> = s
        .zones
        .iter()
        .filter_map(|z| s.geometry.zones.get(&z.id))
        .flat_map(|rings| rings.iter().map(polygon))
        .collect();
    if outlines.is_empty() {
        return s.network.clone();
    }
    let area = MultiPolygon::new(outlines);
    let inside: HashSet<&str> = s
        .network
        .nodes
        .iter()
        .filter(|n| area.intersects(&GeoPoint::new(n.pos.x, n.pos.y)))
        .map(|n| n.id.as_str())
        .collect();
    Network {
        nodes: s.network.nodes.iter().filter(|n| inside.contains(n.id.as_str())).cloned().collect(),
        links: s
            .network
            .links
            .iter()
            .filter(|l| inside.contains(l.from.as_str()) && inside.contains(l.to.as_str()))
            .cloned()
            .collect(),
        zone_connector: s.network.zone_connector.clone(),
    }
}

/// Median (mean of the middle pair for even counts); `None` when empty.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 })
}

pub fn mean(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        None
    } else {
        Some(values.iter().sum::<f64>() / values.len() as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccessStat {
    pub sector: Sector,
    pub radius: f64,
    pub median: f64,
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrbanFormVector {
    pub city: String,
    pub region: String,
    pub location: Point,
    pub pop_den: f64,
    pub hh_den: f64,
    pub hs_den: f64,
    pub worker_den: f64,
    pub job_den: f64,
    pub accessibility: Vec<AccessStat>,
    pub intersect3_den_ped: f64,
    pub intersect4_den_ped: f64,
    pub intersect_den_non_auto: f64,
    pub intersect_den_auto: f64,
    pub net_den_ped: f64,
    pub net_den_auto: f64,
    pub od_cluster: Option<f64>,
    pub job_house_entropy_median: Option<f64>,
    pub job_house_entropy_mean: Option<f64>,
    pub land_sqml: f64,
    pub speed_ave: Option<f64>,
    pub speed_median: Option<f64>,
    /// Measures that could not be computed, or blocks left out of them.
    pub flags: Vec<String>,
}

fn radius_label(r: f64) -> String {
    if r.fract() == 0.0 {
        format!("{}", r as i64)
    } else {
        r.to_string().replace('.', "_")
    }
}

impl UrbanFormVector {
    /// Named numeric measures in a fixed order.
    pub fn columns(&self) -> Vec<(String, Option<f64>)> {
        let mut out: Vec<(String, Option<f64>)> = vec![
            ("popDen".into(), Some(self.pop_den)),
            ("hhDen".into(), Some(self.hh_den)),
            ("hsDen".into(), Some(self.hs_den)),
            ("workerDen".into(), Some(self.worker_den)),
            ("jobDen".into(), Some(self.job_den)),
        ];
        for a in &self.accessibility {
            let base = format!("job{}{}", a.sector.name(), radius_label(a.radius));
            out.push((format!("{base}Median"), Some(a.median)));
            out.push((format!("{base}Mean"), Some(a.mean)));
        }
        out.extend([
            ("intersect3DenPed".into(), Some(self.intersect3_den_ped)),
            ("intersect4DenPed".into(), Some(self.intersect4_den_ped)),
            ("intersectDenNonAuto".into(), Some(self.intersect_den_non_auto)),
            ("intersectDenAuto".into(), Some(self.intersect_den_auto)),
            ("netDenPed".into(), Some(self.net_den_ped)),
            ("netDenAuto".into(), Some(self.net_den_auto)),
            ("odCluster".into(), self.od_cluster),
            ("jobHouseEntropyMedian".into(), self.job_house_entropy_median),
            ("jobHouseEntropyMean".into(), self.job_house_entropy_mean),
            ("landSqml".into(), Some(self.land_sqml)),
            ("speedAve".into(), self.speed_ave),
            ("speedMedian".into(), self.speed_median),
        ]);
        out
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.columns().into_iter().find(|(n, _)| n == name).and_then(|(_, v)| v)
    }
}

/// Urban-form measures of a scenario, taken over all of its zones and
/// blocks (restrict the scenario to the aligned zone set first).
pub fn build_urbanform_vector(s: &Scenario) -> UrbanFormVector {
    let mut flags = Vec::new();
    let land = s.land_area();
    let per_area = |x: f64| if land > 0.0 { x / land } else { 0.0 };
    let sum = |f: &dyn Fn(&BlockGroup) -> f64| s.blocks.iter().map(f).sum::<f64>();
    if !(land > 0.0) {
        flags.push("land_area_zero".to_string());
    }

    let mut accessibility = Vec::new();
    for sector in Sector::ALL {
        let counts = accessibility_counts(&s.blocks, sector, &ACCESS_RADII);
        for (ri, &radius) in ACCESS_RADII.iter().enumerate() {
            let column: Vec<f64> = counts.iter().map(|row| row[ri]).collect();
            accessibility.push(AccessStat {
                sector,
                radius,
                median: median(&column).unwrap_or(0.0),
                mean: mean(&column).unwrap_or(0.0),
            });
        }
    }

    let mut entropies = Vec::with_capacity(s.blocks.len());
    let mut excluded = 0usize;
    for b in &s.blocks {
        match job_house_entropy(b) {
            Ok(e) => entropies.push(e),
            Err(_) => excluded += 1,
        }
    }
    if excluded > 0 {
        flags.push(format!("entropy_blocks_excluded:{excluded}"));
    }
    if entropies.is_empty() {
        flags.push("entropy_undefined".to_string());
    }

    let od_cluster = match od_clustering_coefficient(&CommuteFlowGraph::from_flows(&s.flows), TripletValue::default()) {
        Ok(c) => Some(c),
        Err(e) => {
            flags.push(format!("od_cluster_undefined: {e}"));
            None
        }
    };

    let net = network_within_zones(s);
    let ints = classify_intersections(&net);
    let (ped_miles, auto_miles) = network_miles(&net);

    let am = &s.periods.am_peak;
    let speeds: Vec<f64> = net
        .links
        .iter()
        .filter_map(|l| {
            let tt = *l.travel_time.get(am)?;
            (tt > 0.0).then(|| l.length / (tt / 60.0))
        })
        .collect();
    if speeds.is_empty() {
        flags.push("speed_undefined".to_string());
    }

    UrbanFormVector {
        city: s.name.clone(),
        region: s.region.clone(),
        location: s.location,
        pop_den: per_area(sum(&|b| b.population)),
        hh_den: per_area(sum(&|b| b.households)),
        hs_den: per_area(sum(&|b| b.housing_sf + b.housing_mf)),
        worker_den: per_area(sum(&|b| b.workers)),
        job_den: per_area(sum(&|b| b.jobs.job_all())),
        accessibility,
        intersect3_den_ped: per_area(ints.ped_3leg as f64),
        intersect4_den_ped: per_area(ints.ped_4leg as f64),
        intersect_den_non_auto: per_area(ints.nonauto_total as f64),
        intersect_den_auto: per_area(ints.auto_total as f64),
        net_den_ped: per_area(ped_miles),
        net_den_auto: per_area(auto_miles),
        od_cluster,
        job_house_entropy_median: median(&entropies),
        job_house_entropy_mean: mean(&entropies),
        land_sqml: land,
        speed_ave: mean(&speeds),
        speed_median: median(&speeds),
        flags,
    }
}

/// Writes one row per city: `city,region,x,y,<measures...>,flags`. Missing
/// measures are empty cells; flags are joined with `;`.
pub fn write_urbanform_csv(rows: &[UrbanFormVector], path: &Path) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    let Some(first) = rows.first() else {
        return writeln!(f, "city,region,x,y,flags");
    };
    let names: Vec<String> = first.columns().into_iter().map(|(n, _)| n).collect();
    writeln!(f, "city,region,x,y,{},flags", names.join(","))?;
    for r in rows {
        let cells: Vec<String> = r
            .columns()
            .into_iter()
            .map(|(_, v)| v.map_or(String::new(), |x| x.to_string()))
            .collect();
        writeln!(
            f,
            "{},{},{},{},{},{}",
            r.city,
            r.region,
            r.location.x,
            r.location.y,
            cells.join(","),
            r.flags.join(";")
        )?;
    }
    f.flush()
}
