//! Zone-to-zone skims: shortest travel time per period and route distance.
//!
//! Times come from Dijkstra over each period's link travel times, starting at
//! every zone's connector node. Distances are the link lengths along the
//! time-shortest path of the reference period. Among equal-time paths the
//! one whose predecessor node id is lexicographically smallest wins, which
//! makes every matrix a pure function of the network.
//!
//! For each period the skim also records the first zone passed on every
//! route (`next_hop`), which lets the engine divert a moving vehicle at the
//! next zone it reaches.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};
use std::io::Write;
use std::path::Path;

use crate::error::{RouterError, ScenarioError};
use crate::scenario::{Network, PeriodSchedule, MINUTES_PER_DAY};

#[derive(Debug, Clone)]
pub struct SkimSet {
    zone_ids: Vec<String>,
    index: HashMap<String, usize>,
    period_ids: Vec<String>,
    minute_period: Vec<usize>,
    /// Per period, row-major `n × n` minutes.
    time: Vec<Vec<f64>>,
    /// Row-major `n × n` miles.
    dist: Vec<f64>,
    /// Per period, row-major `n × n` zone index of the first zone on the route.
    next_hop: Vec<Vec<u32>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct QueueItem {
    time: f64,
    node: usize,
}

impl Eq for QueueItem {}

impl Ord for QueueItem {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for QueueItem {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

struct Graph {
    /// Node ids sorted, so index order equals id order.
    ids: Vec<String>,
    /// Per node: (to, time per period, length).
    adj: Vec<Vec<(usize, Vec<f64>, f64)>>,
}

struct Tree {
    time: Vec<f64>,
    pred: Vec<usize>,
    pred_len: Vec<f64>,
}

const NONE: usize = usize::MAX;

impl Graph {
    fn build(net: &Network, period_ids: &[String]) -> Result<Self, RouterError> {
        let mut ids: Vec<String> = net.nodes.iter().map(|n| n.id.clone()).collect();
        ids.sort();
        ids.dedup();
        let pos: HashMap<&str, usize> = ids.iter().enumerate().map(|(i, s)| (s.as_str(), i)).collect();
        let mut adj = vec![Vec::new(); ids.len()];
        for l in &net.links {
            let from = *pos
                .get(l.from.as_str())
                .ok_or_else(|| RouterError::UnknownNode(l.from.clone()))?;
            let to = *pos
                .get(l.to.as_str())
                .ok_or_else(|| RouterError::UnknownNode(l.to.clone()))?;
            let times = period_ids
                .iter()
                .map(|p| {
                    l.travel_time.get(p).copied().ok_or_else(|| RouterError::MissingTravelTime {
                        from: l.from.clone(),
                        to: l.to.clone(),
                        period: p.clone(),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            adj[from].push((to, times, l.length));
        }
        Ok(Self { ids, adj })
    }

    fn node(&self, id: &str) -> Result<usize, RouterError> {
        self.ids
            .binary_search_by(|s| s.as_str().cmp(id))
            .map_err(|_| RouterError::UnknownNode(id.to_string()))
    }

    fn dijkstra(&self, source: usize, period: usize) -> Tree {
        let n = self.ids.len();
        let mut time = vec![f64::INFINITY; n];
        let mut pred = vec![NONE; n];
        let mut pred_len = vec![0.0; n];
        let mut done = vec![false; n];
        let mut heap = BinaryHeap::new();
        time[source] = 0.0;
        heap.push(QueueItem { time: 0.0, node: source });
        while let Some(QueueItem { time: t, node: u }) = heap.pop() {
            if done[u] {
                continue;
            }
            done[u] = true;
            for (v, times, len) in &self.adj[u] {
                let v = *v;
                if v == source {
                    continue;
                }
                let cand = t + times[period];
                let better = cand < time[v]
                    || (cand == time[v] && (u < pred[v] || (u == pred[v] && *len < pred_len[v])));
                if better && !done[v] {
                    if cand < time[v] {
                        heap.push(QueueItem { time: cand, node: v });
                    }
                    time[v] = cand;
                    pred[v] = u;
                    pred_len[v] = *len;
                }
            }
        }
        Tree { time, pred, pred_len }
    }
}

/// Builds time, distance and next-hop skims for every period of `schedule`.
pub fn build_skims(network: &Network, schedule: &PeriodSchedule) -> Result<SkimSet, RouterError> {
    let period_ids = schedule.period_ids();
    let graph = Graph::build(network, &period_ids)?;
    let zone_ids: Vec<String> = network.zone_connector.iter().map(|c| c.zone.clone()).collect();
    let conn: Vec<usize> = network
        .zone_connector
        .iter()
        .map(|c| graph.node(&c.node))
        .collect::<Result<_, _>>()?;
    let nz = zone_ids.len();
    // node -> zone for next-hop detection (first zone listed wins)
    let mut zone_at = vec![NONE; graph.ids.len()];
    for (z, &node) in conn.iter().enumerate() {
        if zone_at[node] == NONE {
            zone_at[node] = z;
        }
    }
    let reference = schedule.reference_period();
    let ref_idx = period_ids.iter().position(|p| *p == reference).unwrap_or(0);

    let mut time = vec![vec![0.0; nz * nz]; period_ids.len()];
    let mut next_hop = vec![vec![0u32; nz * nz]; period_ids.len()];
    let mut dist = vec![0.0; nz * nz];
    for (pi, pid) in period_ids.iter().enumerate() {
        for o in 0..nz {
            let tree = graph.dijkstra(conn[o], pi);
            // route length from the source, filled lazily along predecessor chains
            let mut length: Vec<Option<f64>> = vec![None; graph.ids.len()];
            length[conn[o]] = Some(0.0);
            for d in 0..nz {
                let target = conn[d];
                let t = tree.time[target];
                if !t.is_finite() {
                    return Err(RouterError::Unreachable {
                        origin: zone_ids[o].clone(),
                        destination: zone_ids[d].clone(),
                        period: pid.clone(),
                    });
                }
                time[pi][o * nz + d] = if o == d { 0.0 } else { t };
                next_hop[pi][o * nz + d] = first_zone(&tree, conn[o], target, d, &zone_at) as u32;
                if pi == ref_idx && o != d {
                    dist[o * nz + d] = route_length(&tree, target, &mut length);
                }
            }
        }
    }
    let index = zone_ids.iter().enumerate().map(|(i, z)| (z.clone(), i)).collect();
    Ok(SkimSet {
        zone_ids,
        index,
        minute_period: minute_table(schedule, &period_ids),
        period_ids,
        time,
        dist,
        next_hop,
    })
}

fn route_length(tree: &Tree, target: usize, memo: &mut [Option<f64>]) -> f64 {
    let mut chain = Vec::new();
    let mut v = target;
    while memo[v].is_none() {
        chain.push(v);
        v = tree.pred[v];
    }
    let mut acc = memo[v].unwrap_or(0.0);
    while let Some(u) = chain.pop() {
        acc += tree.pred_len[u];
        memo[u] = Some(acc);
    }
    acc
}

/// First zone connector strictly after the source on the route to `target`.
fn first_zone(tree: &Tree, source: usize, target: usize, dest_zone: usize, zone_at: &[usize]) -> usize {
    if source == target {
        return dest_zone;
    }
    let mut path = Vec::new();
    let mut v = target;
    while v != source {
        path.push(v);
        v = tree.pred[v];
    }
    for &node in path.iter().rev() {
        if node == target {
            return dest_zone;
        }
        if zone_at[node] != NONE {
            return zone_at[node];
        }
    }
    dest_zone
}

fn minute_table(schedule: &PeriodSchedule, period_ids: &[String]) -> Vec<usize> {
    (0..MINUTES_PER_DAY)
        .map(|m| {
            schedule
                .period_at(m)
                .and_then(|p| period_ids.iter().position(|q| q == p))
                .unwrap_or(usize::MAX)
        })
        .collect()
}

impl SkimSet {
    /// Skims from explicit matrices (`time[period][o][d]`, `dist[o][d]`), with
    /// every route treated as a direct hop. Used for hand-built fixtures.
    pub fn from_matrices(
        zone_ids: Vec<String>,
        schedule: &PeriodSchedule,
        time: Vec<Vec<Vec<f64>>>,
        dist: Vec<Vec<f64>>,
    ) -> Self {
        let period_ids = schedule.period_ids();
        let n = zone_ids.len();
        assert_eq!(time.len(), period_ids.len(), "one time matrix per period");
        let flat = |m: &Vec<Vec<f64>>| {
            assert!(m.len() == n && m.iter().all(|r| r.len() == n), "matrix must be n x n");
            m.iter().flatten().copied().collect::<Vec<f64>>()
        };
        let hop: Vec<u32> = (0..n * n).map(|k| (k % n) as u32).collect();
        Self {
            index: zone_ids.iter().enumerate().map(|(i, z)| (z.clone(), i)).collect(),
            zone_ids,
            minute_period: minute_table(schedule, &period_ids),
            next_hop: vec![hop; period_ids.len()],
            time: time.iter().map(flat).collect(),
            dist: flat(&dist),
            period_ids,
        }
    }

    pub fn zone_ids(&self) -> &[String] {
        &self.zone_ids
    }

    pub fn n_zones(&self) -> usize {
        self.zone_ids.len()
    }

    pub fn period_ids(&self) -> &[String] {
        &self.period_ids
    }

    pub fn zone(&self, id: &str) -> Result<usize, RouterError> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| RouterError::UnknownZone(id.to_string()))
    }

    /// Period index for a minute of the day (wraps past midnight).
    pub fn period_index(&self, minute: u32) -> usize {
        self.minute_period[(minute % MINUTES_PER_DAY) as usize]
    }

    /// Period index for a fractional minute, wrapping past midnight.
    pub fn period_index_f(&self, minute: f64) -> usize {
        let m = minute.max(0.0).floor() as u64 % MINUTES_PER_DAY as u64;
        self.minute_period[m as usize]
    }

    #[inline]
    pub fn time(&self, period: usize, o: usize, d: usize) -> f64 {
        self.time[period][o * self.zone_ids.len() + d]
    }

    #[inline]
    pub fn dist(&self, o: usize, d: usize) -> f64 {
        self.dist[o * self.zone_ids.len() + d]
    }

    #[inline]
    pub fn next_hop(&self, period: usize, o: usize, d: usize) -> usize {
        self.next_hop[period][o * self.zone_ids.len() + d] as usize
    }

    /// `(minutes, miles)` for a zone pair at a minute of the day.
    pub fn lookup(&self, o: &str, d: &str, minute: u32) -> Result<(f64, f64), RouterError> {
        if minute >= MINUTES_PER_DAY {
            return Err(RouterError::MinuteOutOfRange(minute));
        }
        let (oi, di) = (self.zone(o)?, self.zone(d)?);
        let p = self.period_index(minute);
        if p == usize::MAX {
            return Err(RouterError::Uncovered(minute));
        }
        Ok((self.time(p, oi, di), self.dist(oi, di)))
    }

    /// Writes `skims_<period>.csv` files with columns `o,d,time,dist`.
    pub fn write_csv(&self, dir: &Path) -> Result<(), ScenarioError> {
        std::fs::create_dir_all(dir).map_err(|source| ScenarioError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        for (pi, pid) in self.period_ids.iter().enumerate() {
            let path = dir.join(format!("skims_{pid}.csv"));
            let io = |source| ScenarioError::Io {
                path: path.clone(),
                source,
            };
            let mut out = std::io::BufWriter::new(std::fs::File::create(&path).map_err(io)?);
            writeln!(out, "o,d,time,dist").map_err(io)?;
            let n = self.zone_ids.len();
            for o in 0..n {
                for d in 0..n {
                    writeln!(
                        out,
                        "{},{},{},{}",
                        self.zone_ids[o],
                        self.zone_ids[d],
                        self.time(pi, o, d),
                        self.dist(o, d)
                    )
                    .map_err(io)?;
                }
            }
            out.flush().map_err(io)?;
        }
        Ok(())
    }
}
