//! City scenario data model, file formats and validation.
//!
//! A scenario directory holds:
//!
//! | file | columns |
//! |------|---------|
//! | `zones.csv` | `id,cx,cy,area,node` |
//! | `blocks.csv` | `id,zone_id,cx,cy,area,pop,hh,h_sf,h_mf,workers,job_reserve,job_prof,job_labor,job_resource,job_office,job_industry,job_entertain` |
//! | `nodes.csv` | `id,x,y` |
//! | `links.csv` | `from,to,length,speed,lanes,ped_allowed,tt_<period>...` |
//! | `od_<period>.csv` | `o,d,mean_trips` |
//! | `flows.csv` (optional) | `home_block,work_block,count` |
//! | `periods.json` | period windows, peak ids and city metadata |
//! | `boundary.json` | city, zone and block rings of `[x, y]` points |
//!
//! Coordinates are planar miles. The `node` column of `zones.csv` names the
//! zone's single connector node; when absent the nearest node is used.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::ScenarioError;

pub const MINUTES_PER_DAY: u32 = 1440;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Jobs by sector for one block group.
///
/// `reserve`, `prof`, `labor` and `resource` partition all jobs and feed the
/// job-housing entropy. `office`, `industry` and `entertain` are an
/// overlapping tier classification of the same jobs used for accessibility.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SectorJobs {
    pub reserve: f64,
    pub prof: f64,
    pub labor: f64,
    pub resource: f64,
    pub office: f64,
    pub industry: f64,
    pub entertain: f64,
}

impl SectorJobs {
    pub fn job_all(&self) -> f64 {
        self.reserve + self.prof + self.labor + self.resource
    }

    fn values(&self) -> [(&'static str, f64); 7] {
        [
            ("job_reserve", self.reserve),
            ("job_prof", self.prof),
            ("job_labor", self.labor),
            ("job_resource", self.resource),
            ("job_office", self.office),
            ("job_industry", self.industry),
            ("job_entertain", self.entertain),
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockGroup {
    pub id: String,
    pub zone: String,
    pub centroid: Point,
    pub area: f64,
    pub population: f64,
    pub households: f64,
    pub housing_sf: f64,
    pub housing_mf: f64,
    pub workers: f64,
    pub jobs: SectorJobs,
}

impl BlockGroup {
    fn counts(&self) -> Vec<(&'static str, f64)> {
        let mut out = vec![
            ("pop", self.population),
            ("hh", self.households),
            ("h_sf", self.housing_sf),
            ("h_mf", self.housing_mf),
            ("workers", self.workers),
        ];
        out.extend(self.jobs.values());
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub centroid: Point,
    pub area: f64,
    /// Indices into [`Scenario::blocks`].
    pub blocks: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Node {
    pub id: String,
    pub pos: Point,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub from: String,
    pub to: String,
    /// Miles.
    pub length: f64,
    /// Posted speed, mph.
    pub speed: f64,
    pub lanes: u32,
    pub ped_allowed: bool,
    /// Minutes per period id.
    pub travel_time: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZoneConnector {
    pub zone: String,
    pub node: String,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Network {
    pub nodes: Vec<Node>,
    pub links: Vec<Link>,
    /// One connector per zone, in zone order.
    pub zone_connector: Vec<ZoneConnector>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdEntry {
    pub origin: String,
    pub destination: String,
    pub mean: f64,
}

/// Mean person trips per OD pair over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OdMatrix {
    pub period: String,
    pub entries: Vec<OdEntry>,
}

impl OdMatrix {
    pub fn total(&self) -> f64 {
        self.entries.iter().map(|e| e.mean).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodWindow {
    pub id: String,
    pub start: u32,
    pub end: u32,
}

/// Half-open minute windows covering the day. A period id may own several
/// windows (e.g. off-peak overnight and midday).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodSchedule {
    pub windows: Vec<PeriodWindow>,
    pub am_peak: String,
    pub pm_peak: String,
    /// Period whose time-shortest paths define the distance skim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<String>,
}

impl PeriodSchedule {
    /// Distinct period ids in order of first appearance.
    pub fn period_ids(&self) -> Vec<String> {
        let mut seen = HashSet::new();
        self.windows
            .iter()
            .filter(|w| seen.insert(w.id.clone()))
            .map(|w| w.id.clone())
            .collect()
    }

    pub fn period_at(&self, minute: u32) -> Option<&str> {
        let m = minute % MINUTES_PER_DAY;
        self.windows
            .iter()
            .find(|w| w.start <= m && m < w.end)
            .map(|w| w.id.as_str())
    }

    pub fn minutes_in(&self, id: &str) -> u32 {
        self.windows
            .iter()
            .filter(|w| w.id == id)
            .map(|w| w.end.saturating_sub(w.start))
            .sum()
    }

    /// Reference period: explicit, else `off_peak` when declared, else the first.
    pub fn reference_period(&self) -> String {
        let ids = self.period_ids();
        if let Some(r) = &self.reference {
            if ids.contains(r) {
                return r.clone();
            }
        }
        if ids.iter().any(|p| p == "off_peak") {
            return "off_peak".to_string();
        }
        ids.into_iter().next().unwrap_or_default()
    }

    /// Generator default: off-peak overnight/midday/evening, AM 6-9h, PM 15-19h.
    pub fn standard() -> Self {
        let w = |id: &str, start: u32, end: u32| PeriodWindow {
            id: id.to_string(),
            start,
            end,
        };
        Self {
            windows: vec![
                w("off_peak", 0, 360),
                w("am_peak", 360, 540),
                w("off_peak", 540, 900),
                w("pm_peak", 900, 1140),
                w("off_peak", 1140, 1440),
            ],
            am_peak: "am_peak".into(),
            pm_peak: "pm_peak".into(),
            reference: None,
        }
    }
}

pub type Ring = Vec<[f64; 2]>;

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Geometry {
    #[serde(default)]
    pub city: Vec<Ring>,
    #[serde(default)]
    pub zones: BTreeMap<String, Vec<Ring>>,
    #[serde(default)]
    pub blocks: BTreeMap<String, Vec<Ring>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Flow {
    pub home: String,
    pub work: String,
    pub count: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub region: String,
    /// City location in regional coordinates (miles), used for spatial weights.
    pub location: Point,
    pub periods: PeriodSchedule,
    pub zones: Vec<Zone>,
    pub blocks: Vec<BlockGroup>,
    pub network: Network,
    pub od: Vec<OdMatrix>,
    pub geometry: Geometry,
    pub flows: Vec<Flow>,
}

impl Scenario {
    pub fn zone_index(&self) -> HashMap<&str, usize> {
        self.zones
            .iter()
            .enumerate()
            .map(|(i, z)| (z.id.as_str(), i))
            .collect()
    }

    pub fn land_area(&self) -> f64 {
        self.zones.iter().map(|z| z.area).sum()
    }

    pub fn od_for(&self, period: &str) -> Option<&OdMatrix> {
        self.od.iter().find(|m| m.period == period)
    }

    /// Sub-scenario on a zone subset: blocks, OD cells, flows and geometry
    /// are filtered to the subset; the network is kept whole so routes may
    /// still pass outside the selection.
    pub fn restrict_to_zones(&self, keep: &[String]) -> Scenario {
        let keep_set: HashSet<&str> = keep.iter().map(String::as_str).collect();
        let mut block_ids = HashSet::new();
        let mut blocks = Vec::new();
        for b in &self.blocks {
            if keep_set.contains(b.zone.as_str()) {
                block_ids.insert(b.id.clone());
                blocks.push(b.clone());
            }
        }
        let mut zones: Vec<Zone> = self
            .zones
            .iter()
            .filter(|z| keep_set.contains(z.id.as_str()))
            .cloned()
            .collect();
        relink_blocks(&mut zones, &blocks);
        let mut network = self.network.clone();
        network
            .zone_connector
            .retain(|c| keep_set.contains(c.zone.as_str()));
        let od = self
            .od
            .iter()
            .map(|m| OdMatrix {
                period: m.period.clone(),
                entries: m
                    .entries
                    .iter()
                    .filter(|e| {
                        keep_set.contains(e.origin.as_str())
                            && keep_set.contains(e.destination.as_str())
                    })
                    .cloned()
                    .collect(),
            })
            .collect();
        let flows = self
            .flows
            .iter()
            .filter(|f| block_ids.contains(&f.home) && block_ids.contains(&f.work))
            .cloned()
            .collect();
        let geometry = Geometry {
            city: self.geometry.city.clone(),
            zones: self
                .geometry
                .zones
                .iter()
                .filter(|(k, _)| keep_set.contains(k.as_str()))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
            blocks: self
                .geometry
                .blocks
                .iter()
                .filter(|(k, _)| block_ids.contains(*k))
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect(),
        };
        Scenario {
            name: self.name.clone(),
            region: self.region.clone(),
            location: self.location,
            periods: self.periods.clone(),
            zones,
            blocks,
            network,
            od,
            geometry,
            flows,
        }
    }
}

fn relink_blocks(zones: &mut [Zone], blocks: &[BlockGroup]) {
    let index: HashMap<String, usize> = zones
        .iter()
        .enumerate()
        .map(|(i, z)| (z.id.clone(), i))
        .collect();
    for z in zones.iter_mut() {
        z.blocks.clear();
    }
    for (bi, b) in blocks.iter().enumerate() {
        if let Some(&zi) = index.get(b.zone.as_str()) {
            zones[zi].blocks.push(bi);
        }
    }
}

// ---------------------------------------------------------------------------
// Validation

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: String,
    pub subject: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    fn push(&mut self, code: &str, subject: impl Into<String>, message: impl Into<String>) {
        self.violations.push(Violation {
            code: code.to_string(),
            subject: subject.into(),
            message: message.into(),
        });
    }
}

/// Lists every invariant violation. Pure: the same scenario always yields the
/// same report, in a fixed order.
pub fn validate_scenario(s: &Scenario) -> ValidationReport {
    let mut r = ValidationReport::default();
    let period_ids = s.periods.period_ids();
    validate_periods(&s.periods, &mut r);

    let mut zone_ids = HashSet::new();
    for z in &s.zones {
        if !zone_ids.insert(z.id.as_str()) {
            r.push("zone.duplicate", &z.id, "zone id is not unique");
        }
        if !(z.area > 0.0) {
            r.push("zone.area", &z.id, format!("area {} must be > 0", z.area));
        }
        if !z.centroid.is_finite() {
            r.push("zone.centroid", &z.id, "centroid is not finite");
        }
    }

    let mut block_ids = HashSet::new();
    for b in &s.blocks {
        if !block_ids.insert(b.id.as_str()) {
            r.push("block.duplicate", &b.id, "block id is not unique");
        }
        if !zone_ids.contains(b.zone.as_str()) {
            r.push("block.zone", &b.id, format!("unknown zone {}", b.zone));
        }
        if !(b.area > 0.0) {
            r.push("block.area", &b.id, format!("area {} must be > 0", b.area));
        }
        for (name, v) in b.counts() {
            if !(v >= 0.0) || !v.is_finite() {
                r.push("block.count", &b.id, format!("{name} = {v} must be >= 0"));
            }
        }
    }

    let node_ids: HashSet<&str> = s.network.nodes.iter().map(|n| n.id.as_str()).collect();
    for n in &s.network.nodes {
        if !n.pos.is_finite() {
            r.push("node.pos", &n.id, "coordinates are not finite");
        }
    }
    for (i, l) in s.network.links.iter().enumerate() {
        let subject = format!("link#{i} {}->{}", l.from, l.to);
        if !node_ids.contains(l.from.as_str()) {
            r.push("link.from", &subject, format!("unknown node {}", l.from));
        }
        if !node_ids.contains(l.to.as_str()) {
            r.push("link.to", &subject, format!("unknown node {}", l.to));
        }
        if !(l.length > 0.0) {
            r.push("link.length", &subject, format!("length {} must be > 0", l.length));
        }
        for p in &period_ids {
            match l.travel_time.get(p) {
                Some(t) if *t > 0.0 && t.is_finite() => {}
                Some(t) => r.push(
                    "link.travel_time",
                    &subject,
                    format!("travel time {t} in period {p} must be > 0"),
                ),
                None => r.push(
                    "link.travel_time",
                    &subject,
                    format!("missing travel time for period {p}"),
                ),
            }
        }
    }

    let mut connected_zones = HashSet::new();
    for c in &s.network.zone_connector {
        connected_zones.insert(c.zone.as_str());
        if !zone_ids.contains(c.zone.as_str()) {
            r.push("connector.zone", &c.zone, "connector for unknown zone");
        }
        if !node_ids.contains(c.node.as_str()) {
            r.push(
                "connector.node",
                &c.zone,
                format!("connector node {} does not exist", c.node),
            );
        }
    }
    for z in &s.zones {
        if !connected_zones.contains(z.id.as_str()) {
            r.push("connector.missing", &z.id, "zone has no connector node");
        }
    }
    check_connectivity(&s.network, &node_ids, &mut r);

    let declared: HashSet<&str> = period_ids.iter().map(String::as_str).collect();
    for m in &s.od {
        if !declared.contains(m.period.as_str()) {
            r.push("od.period", &m.period, "OD matrix for undeclared period");
        }
        for e in &m.entries {
            let cell = format!("od_{}[{},{}]", m.period, e.origin, e.destination);
            if !zone_ids.contains(e.origin.as_str()) {
                r.push("od.origin", &cell, format!("unknown zone {}", e.origin));
            }
            if !zone_ids.contains(e.destination.as_str()) {
                r.push("od.destination", &cell, format!("unknown zone {}", e.destination));
            }
            if !(e.mean >= 0.0) || !e.mean.is_finite() {
                r.push("od.mean", &cell, format!("mean {} must be >= 0", e.mean));
            }
        }
    }

    for f in &s.flows {
        let subject = format!("flow {}->{}", f.home, f.work);
        if !block_ids.contains(f.home.as_str()) || !block_ids.contains(f.work.as_str()) {
            r.push("flow.block", &subject, "flow references unknown block");
        }
        if !(f.count >= 0.0) {
            r.push("flow.count", &subject, format!("count {} must be >= 0", f.count));
        }
    }
    r
}

fn validate_periods(p: &PeriodSchedule, r: &mut ValidationReport) {
    let mut windows: Vec<&PeriodWindow> = p.windows.iter().collect();
    windows.sort_by_key(|w| (w.start, w.end));
    let mut cursor = 0u32;
    for w in &windows {
        if w.start >= w.end {
            r.push("periods.window", &w.id, format!("empty window [{}, {})", w.start, w.end));
            continue;
        }
        if w.start < cursor {
            r.push("periods.overlap", &w.id, format!("window starting at {} overlaps", w.start));
        } else if w.start > cursor {
            r.push("periods.gap", &w.id, format!("minutes [{cursor}, {}) are uncovered", w.start));
        }
        cursor = cursor.max(w.end);
    }
    if cursor != MINUTES_PER_DAY {
        r.push("periods.coverage", "periods", format!("coverage ends at {cursor}, not 1440"));
    }
    let ids = p.period_ids();
    if p.am_peak == p.pm_peak {
        r.push("periods.peaks", "periods", "am_peak and pm_peak must differ");
    }
    for peak in [&p.am_peak, &p.pm_peak] {
        if !ids.contains(peak) {
            r.push("periods.peaks", peak, "peak period is not declared");
        }
    }
}

/// Every connector node must reach every other connector node.
fn check_connectivity(net: &Network, node_ids: &HashSet<&str>, r: &mut ValidationReport) {
    let connectors: BTreeSet<&str> = net
        .zone_connector
        .iter()
        .map(|c| c.node.as_str())
        .filter(|n| node_ids.contains(n))
        .collect();
    let Some(&root) = connectors.iter().next() else {
        return;
    };
    let mut fwd: HashMap<&str, Vec<&str>> = HashMap::new();
    let mut rev: HashMap<&str, Vec<&str>> = HashMap::new();
    for l in &net.links {
        if node_ids.contains(l.from.as_str()) && node_ids.contains(l.to.as_str()) {
            fwd.entry(l.from.as_str()).or_default().push(l.to.as_str());
            rev.entry(l.to.as_str()).or_default().push(l.from.as_str());
        }
    }
    fn reach<'n>(root: &'n str, adj: &HashMap<&'n str, Vec<&'n str>>) -> HashSet<&'n str> {
        let mut seen = HashSet::from([root]);
        let mut queue = VecDeque::from([root]);
        while let Some(u) = queue.pop_front() {
            for &v in adj.get(u).into_iter().flatten() {
                if seen.insert(v) {
                    queue.push_back(v);
                }
            }
        }
        seen
    }
    let out = reach(root, &fwd);
    let back = reach(root, &rev);
    for c in &net.zone_connector {
        if !node_ids.contains(c.node.as_str()) {
            r.push(
                "network.connectivity",
                &c.zone,
                format!("zone {} is disconnected: connector node {} missing", c.zone, c.node),
            );
        } else if !out.contains(c.node.as_str()) || !back.contains(c.node.as_str()) {
            r.push(
                "network.connectivity",
                &c.zone,
                format!("zone {} is not strongly connected to zone network", c.zone),
            );
        }
    }
}

// ---------------------------------------------------------------------------
// File I/O

#[derive(Debug, Serialize, Deserialize)]
struct PeriodsFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    city: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    region: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    location: Option<[f64; 2]>,
    periods: Vec<PeriodWindow>,
    am_peak: String,
    pm_peak: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    reference: Option<String>,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ScenarioError + '_ {
    move |source| ScenarioError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> ScenarioError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => ScenarioError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => ScenarioError::Schema {
            file: file_name(path),
            row: 0,
            message: format!("{other:?}"),
        },
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// A CSV table read fully, with header lookup and row-numbered parse errors.
struct Table {
    file: String,
    headers: Vec<String>,
    rows: Vec<csv::StringRecord>,
}

impl Table {
    fn read(path: &Path) -> Result<Self, ScenarioError> {
        if !path.exists() {
            return Err(ScenarioError::MissingFile(path.to_path_buf()));
        }
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let headers = rdr
            .headers()
            .map_err(|e| csv_err(path, e))?
            .iter()
            .map(str::to_string)
            .collect();
        let rows = rdr
            .records()
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| csv_err(path, e))?;
        Ok(Self {
            file: file_name(path),
            headers,
            rows,
        })
    }

    fn col(&self, name: &str) -> Result<usize, ScenarioError> {
        self.headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ScenarioError::Schema {
                file: self.file.clone(),
                row: 1,
                message: format!("missing column {name:?}"),
            })
    }

    fn opt_col(&self, name: &str) -> Option<usize> {
        self.headers.iter().position(|h| h == name)
    }

    /// Line number of data row `i` (header is line 1).
    fn line(i: usize) -> usize {
        i + 2
    }

    fn schema(&self, i: usize, message: impl Into<String>) -> ScenarioError {
        ScenarioError::Schema {
            file: self.file.clone(),
            row: Self::line(i),
            message: message.into(),
        }
    }

    fn str(&self, i: usize, col: usize) -> &str {
        self.rows[i].get(col).unwrap_or("")
    }

    fn f64(&self, i: usize, col: usize) -> Result<f64, ScenarioError> {
        let raw = self.str(i, col);
        raw.parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| self.schema(i, format!("column {} = {raw:?} is not a finite number", self.headers[col])))
    }

    fn nonneg(&self, i: usize, col: usize) -> Result<f64, ScenarioError> {
        let v = self.f64(i, col)?;
        if v < 0.0 {
            return Err(self.schema(i, format!("column {} = {v} must be >= 0", self.headers[col])));
        }
        Ok(v)
    }

    fn positive(&self, i: usize, col: usize) -> Result<f64, ScenarioError> {
        let v = self.f64(i, col)?;
        if v <= 0.0 {
            return Err(self.schema(i, format!("column {} = {v} must be > 0", self.headers[col])));
        }
        Ok(v)
    }
}

fn parse_bool(raw: &str) -> Option<bool> {
    match raw.to_ascii_lowercase().as_str() {
        "1" | "true" | "yes" | "y" => Some(true),
        "0" | "false" | "no" | "n" => Some(false),
        _ => None,
    }
}

/// Loads and cross-references a scenario directory. Row-level invariants and
/// foreign keys are enforced here; global properties (coverage,
/// connectivity) are left to [`validate_scenario`].
pub fn load_scenario(dir: &Path) -> Result<Scenario, ScenarioError> {
    let periods_path = dir.join("periods.json");
    if !periods_path.exists() {
        return Err(ScenarioError::MissingFile(periods_path));
    }
    let raw = fs::read_to_string(&periods_path).map_err(io_err(&periods_path))?;
    let pf: PeriodsFile = serde_json::from_str(&raw).map_err(|e| ScenarioError::Json {
        file: "periods.json".into(),
        message: e.to_string(),
    })?;
    let periods = PeriodSchedule {
        windows: pf.periods,
        am_peak: pf.am_peak,
        pm_peak: pf.pm_peak,
        reference: pf.reference,
    };
    let period_ids = periods.period_ids();

    // nodes
    let t = Table::read(&dir.join("nodes.csv"))?;
    let (ci, cx, cy) = (t.col("id")?, t.col("x")?, t.col("y")?);
    let mut nodes = Vec::with_capacity(t.rows.len());
    let mut node_set = HashSet::new();
    for i in 0..t.rows.len() {
        let id = t.str(i, ci).to_string();
        if !node_set.insert(id.clone()) {
            return Err(t.schema(i, format!("duplicate node id {id:?}")));
        }
        nodes.push(Node {
            id,
            pos: Point::new(t.f64(i, cx)?, t.f64(i, cy)?),
        });
    }

    // zones
    let t = Table::read(&dir.join("zones.csv"))?;
    let (ci, cx, cy, ca) = (t.col("id")?, t.col("cx")?, t.col("cy")?, t.col("area")?);
    let cn = t.opt_col("node");
    let mut zones = Vec::with_capacity(t.rows.len());
    let mut connectors = Vec::with_capacity(t.rows.len());
    let mut zone_set = HashSet::new();
    for i in 0..t.rows.len() {
        let id = t.str(i, ci).to_string();
        if !zone_set.insert(id.clone()) {
            return Err(t.schema(i, format!("duplicate zone id {id:?}")));
        }
        let centroid = Point::new(t.f64(i, cx)?, t.f64(i, cy)?);
        let area = t.positive(i, ca)?;
        let node = match cn.map(|c| t.str(i, c)).filter(|s| !s.is_empty()) {
            Some(n) => {
                if !node_set.contains(n) {
                    return Err(ScenarioError::UnknownNode {
                        file: t.file.clone(),
                        row: Table::line(i),
                        node: n.to_string(),
                    });
                }
                n.to_string()
            }
            None => nearest_node(&nodes, &centroid)
                .ok_or_else(|| t.schema(i, "no nodes to connect zone to"))?,
        };
        connectors.push(ZoneConnector {
            zone: id.clone(),
            node,
        });
        zones.push(Zone {
            id,
            centroid,
            area,
            blocks: Vec::new(),
        });
    }

    // blocks
    let t = Table::read(&dir.join("blocks.csv"))?;
    let cols: Vec<usize> = [
        "id", "zone_id", "cx", "cy", "area", "pop", "hh", "h_sf", "h_mf", "workers",
        "job_reserve", "job_prof", "job_labor", "job_resource", "job_office", "job_industry",
        "job_entertain",
    ]
    .iter()
    .map(|c| t.col(c))
    .collect::<Result<_, _>>()?;
    let mut blocks = Vec::with_capacity(t.rows.len());
    let mut block_set = HashSet::new();
    for i in 0..t.rows.len() {
        let id = t.str(i, cols[0]).to_string();
        if !block_set.insert(id.clone()) {
            return Err(t.schema(i, format!("duplicate block id {id:?}")));
        }
        let zone = t.str(i, cols[1]).to_string();
        if !zone_set.contains(&zone) {
            return Err(ScenarioError::UnknownZone {
                file: t.file.clone(),
                row: Table::line(i),
                zone,
            });
        }
        blocks.push(BlockGroup {
            id,
            zone,
            centroid: Point::new(t.f64(i, cols[2])?, t.f64(i, cols[3])?),
            area: t.positive(i, cols[4])?,
            population: t.nonneg(i, cols[5])?,
            households: t.nonneg(i, cols[6])?,
            housing_sf: t.nonneg(i, cols[7])?,
            housing_mf: t.nonneg(i, cols[8])?,
            workers: t.nonneg(i, cols[9])?,
            jobs: SectorJobs {
                reserve: t.nonneg(i, cols[10])?,
                prof: t.nonneg(i, cols[11])?,
                labor: t.nonneg(i, cols[12])?,
                resource: t.nonneg(i, cols[13])?,
                office: t.nonneg(i, cols[14])?,
                industry: t.nonneg(i, cols[15])?,
                entertain: t.nonneg(i, cols[16])?,
            },
        });
    }
    relink_blocks(&mut zones, &blocks);

    // links
    let t = Table::read(&dir.join("links.csv"))?;
    let cols: Vec<usize> = ["from", "to", "length", "speed", "lanes", "ped_allowed"]
        .iter()
        .map(|c| t.col(c))
        .collect::<Result<_, _>>()?;
    let tt_cols: Vec<(String, usize)> = period_ids
        .iter()
        .map(|p| Ok((p.clone(), t.col(&format!("tt_{p}"))?)))
        .collect::<Result<_, ScenarioError>>()?;
    let mut links = Vec::with_capacity(t.rows.len());
    for i in 0..t.rows.len() {
        let mut ends = [String::new(), String::new()];
        for (k, end) in ends.iter_mut().enumerate() {
            let n = t.str(i, cols[k]);
            if !node_set.contains(n) {
                return Err(ScenarioError::UnknownNode {
                    file: t.file.clone(),
                    row: Table::line(i),
                    node: n.to_string(),
                });
            }
            *end = n.to_string();
        }
        let lanes_raw = t.str(i, cols[4]);
        let lanes = lanes_raw
            .parse::<u32>()
            .map_err(|_| t.schema(i, format!("lanes = {lanes_raw:?} is not a non-negative integer")))?;
        let ped_raw = t.str(i, cols[5]);
        let ped_allowed =
            parse_bool(ped_raw).ok_or_else(|| t.schema(i, format!("ped_allowed = {ped_raw:?} is not boolean")))?;
        let mut travel_time = BTreeMap::new();
        for (p, c) in &tt_cols {
            travel_time.insert(p.clone(), t.positive(i, *c)?);
        }
        let [from, to] = ends;
        links.push(Link {
            from,
            to,
            length: t.positive(i, cols[2])?,
            speed: t.positive(i, cols[3])?,
            lanes,
            ped_allowed,
            travel_time,
        });
    }

    // od
    let mut od = Vec::with_capacity(period_ids.len());
    for p in &period_ids {
        let t = Table::read(&dir.join(format!("od_{p}.csv")))?;
        let (co, cd, cm) = (t.col("o")?, t.col("d")?, t.col("mean_trips")?);
        let mut entries = Vec::with_capacity(t.rows.len());
        for i in 0..t.rows.len() {
            let mut ends = [String::new(), String::new()];
            for (k, c) in [co, cd].into_iter().enumerate() {
                let z = t.str(i, c);
                if !zone_set.contains(z) {
                    return Err(ScenarioError::UnknownZone {
                        file: t.file.clone(),
                        row: Table::line(i),
                        zone: z.to_string(),
                    });
                }
                ends[k] = z.to_string();
            }
            let [origin, destination] = ends;
            entries.push(OdEntry {
                origin,
                destination,
                mean: t.nonneg(i, cm)?,
            });
        }
        od.push(OdMatrix {
            period: p.clone(),
            entries,
        });
    }

    // flows (optional)
    let flows_path = dir.join("flows.csv");
    let mut flows = Vec::new();
    if flows_path.exists() {
        let t = Table::read(&flows_path)?;
        let (ch, cw, cc) = (t.col("home_block")?, t.col("work_block")?, t.col("count")?);
        for i in 0..t.rows.len() {
            let mut ends = [String::new(), String::new()];
            for (k, c) in [ch, cw].into_iter().enumerate() {
                let b = t.str(i, c);
                if !block_set.contains(b) {
                    return Err(ScenarioError::UnknownBlock {
                        file: t.file.clone(),
                        row: Table::line(i),
                        block: b.to_string(),
                    });
                }
                ends[k] = b.to_string();
            }
            let [home, work] = ends;
            flows.push(Flow {
                home,
                work,
                count: t.nonneg(i, cc)?,
            });
        }
    }

    // geometry
    let geo_path = dir.join("boundary.json");
    if !geo_path.exists() {
        return Err(ScenarioError::MissingFile(geo_path));
    }
    let raw = fs::read_to_string(&geo_path).map_err(io_err(&geo_path))?;
    let geometry: Geometry = serde_json::from_str(&raw).map_err(|e| ScenarioError::Json {
        file: "boundary.json".into(),
        message: e.to_string(),
    })?;

    let name = pf.city.unwrap_or_else(|| {
        dir.file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "city".into())
    });
    let location = pf
        .location
        .map(|[x, y]| Point::new(x, y))
        .unwrap_or(Point::new(0.0, 0.0));
    Ok(Scenario {
        name,
        region: pf.region.unwrap_or_else(|| "default".into()),
        location,
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

fn nearest_node(nodes: &[Node], p: &Point) -> Option<String> {
    nodes
        .iter()
        .min_by(|a, b| {
            a.pos
                .distance(p)
                .total_cmp(&b.pos.distance(p))
                .then_with(|| a.id.cmp(&b.id))
        })
        .map(|n| n.id.clone())
}

fn csv_writer(path: &Path) -> Result<csv::Writer<fs::File>, ScenarioError> {
    csv::Writer::from_path(path).map_err(|e| csv_err(path, e))
}

fn write_rows<I, R>(path: &Path, header: &[String], rows: I) -> Result<(), ScenarioError>
where
    I: IntoIterator<Item = R>,
    R: IntoIterator<Item = String>,
{
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        let row: Vec<String> = row.into_iter().collect();
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))
}

fn hdr(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Writes every scenario file into `dir` (created if needed).
pub fn write_scenario(s: &Scenario, dir: &Path) -> Result<(), ScenarioError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    let connector: HashMap<&str, &str> = s
        .network
        .zone_connector
        .iter()
        .map(|c| (c.zone.as_str(), c.node.as_str()))
        .collect();

    let pf = PeriodsFile {
        city: Some(s.name.clone()),
        region: Some(s.region.clone()),
        location: Some([s.location.x, s.location.y]),
        periods: s.periods.windows.clone(),
        am_peak: s.periods.am_peak.clone(),
        pm_peak: s.periods.pm_peak.clone(),
        reference: s.periods.reference.clone(),
    };
    write_json(&dir.join("periods.json"), &pf)?;
    write_json(&dir.join("boundary.json"), &s.geometry)?;

    write_rows(
        &dir.join("zones.csv"),
        &hdr(&["id", "cx", "cy", "area", "node"]),
        s.zones.iter().map(|z| {
            vec![
                z.id.clone(),
                z.centroid.x.to_string(),
                z.centroid.y.to_string(),
                z.area.to_string(),
                connector.get(z.id.as_str()).unwrap_or(&"").to_string(),
            ]
        }),
    )?;
    write_rows(
        &dir.join("blocks.csv"),
        &hdr(&[
            "id", "zone_id", "cx", "cy", "area", "pop", "hh", "h_sf", "h_mf", "workers",
            "job_reserve", "job_prof", "job_labor", "job_resource", "job_office",
            "job_industry", "job_entertain",
        ]),
        s.blocks.iter().map(|b| {
            let mut row = vec![
                b.id.clone(),
                b.zone.clone(),
                b.centroid.x.to_string(),
                b.centroid.y.to_string(),
                b.area.to_string(),
            ];
            row.extend(b.counts().into_iter().map(|(_, v)| v.to_string()));
            row
        }),
    )?;
    write_rows(
        &dir.join("nodes.csv"),
        &hdr(&["id", "x", "y"]),
        s.network
            .nodes
            .iter()
            .map(|n| vec![n.id.clone(), n.pos.x.to_string(), n.pos.y.to_string()]),
    )?;
    let period_ids = s.periods.period_ids();
    let mut link_header = hdr(&["from", "to", "length", "speed", "lanes", "ped_allowed"]);
    link_header.extend(period_ids.iter().map(|p| format!("tt_{p}")));
    write_rows(
        &dir.join("links.csv"),
        &link_header,
        s.network.links.iter().map(|l| {
            let mut row = vec![
                l.from.clone(),
                l.to.clone(),
                l.length.to_string(),
                l.speed.to_string(),
                l.lanes.to_string(),
                l.ped_allowed.to_string(),
            ];
            row.extend(
                period_ids
                    .iter()
                    .map(|p| l.travel_time.get(p).copied().unwrap_or(f64::NAN).to_string()),
            );
            row
        }),
    )?;
    for m in &s.od {
        write_rows(
            &dir.join(format!("od_{}.csv", m.period)),
            &hdr(&["o", "d", "mean_trips"]),
            m.entries
                .iter()
                .map(|e| vec![e.origin.clone(), e.destination.clone(), e.mean.to_string()]),
        )?;
    }
    write_rows(
        &dir.join("flows.csv"),
        &hdr(&["home_block", "work_block", "count"]),
        s.flows
            .iter()
            .map(|f| vec![f.home.clone(), f.work.clone(), f.count.to_string()]),
    )?;
    Ok(())
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), ScenarioError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| ScenarioError::Json {
        file: file_name(path),
        message: e.to_string(),
    })?;
    fs::write(path, text + "\n").map_err(io_err(path))
}

/// Scenario directories directly below `root` (those holding `periods.json`),
/// sorted by path.
pub fn scenario_dirs(root: &Path) -> Result<Vec<PathBuf>, ScenarioError> {
    if root.join("periods.json").exists() {
        return Ok(vec![root.to_path_buf()]);
    }
    let mut out = Vec::new();
    for entry in fs::read_dir(root).map_err(io_err(root))? {
        let path = entry.map_err(io_err(root))?.path();
        if path.join("periods.json").exists() {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}
