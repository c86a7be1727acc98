//! Acceptance criteria. Each test writes one `criterion N: PASS|FAIL` line
//! to stderr (bypassing output capture) before asserting.

use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use savsim_analytics::stats::{
    kurtosis, morans_i, ols, pearson, stepwise_select, vif, Column, DesignTable, StepwiseConfig, INTERCEPT,
};
use savsim_analytics::urbanform::{job_house_entropy, od_clustering_coefficient, CommuteFlowGraph, TripletValue};
use savsim_cli::batch::{prepare_all, simulate_prepared, CityRecord, PreparedCity};
use savsim_cli::regress::coefficient_rows;
use savsim_cli::{run_batch, run_sweep, AnalysisConfig, CityInput, Family, GenSpec, SweepSpec};
use savsim_core::engine::{read_trip_outcomes, VehicleSummary};
use savsim_core::metrics::performance_from_parts;
use savsim_core::scenario::{BlockGroup, Flow, Point, SectorJobs};
use savsim_core::{
    build_skims, compute_performance, generate_synthetic_city, run_simulation, EventKind, EventLog, EventRecord,
    SimConfig, SimulationResult, SynthParams, TripRequest, TripState,
};

fn report(n: u32, pass: bool, detail: &str) {
    let verdict = if pass { "PASS" } else { "FAIL" };
    let _ = writeln!(std::io::stderr(), "criterion {n}: {verdict} ({detail})");
}

// ---------------------------------------------------------------------------
// shared helpers

fn simulate_city(params: &SynthParams, city_seed: u64, seed: u64) -> SimulationResult {
    let s = generate_synthetic_city(params, city_seed).unwrap();
    let sk = build_skims(&s.network, &s.periods).unwrap();
    run_simulation(&s, &sk, &SimConfig::default(), seed).unwrap()
}

/// Simulation outputs as read back from their files.
struct Written {
    log: EventLog,
    trips: Vec<TripRequest>,
}

fn write_and_read(r: &SimulationResult) -> Written {
    let dir = tempfile::tempdir().unwrap();
    r.write_outputs(dir.path()).unwrap();
    let text = std::fs::read_to_string(dir.path().join("eventlog.jsonl")).unwrap();
    let records: Vec<EventRecord> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    Written {
        log: EventLog { records },
        trips: read_trip_outcomes(&dir.path().join("trips_out.csv")).unwrap(),
    }
}

#[derive(Default, Clone, Debug)]
struct Ride {
    pickup: Option<f64>,
    dropoff: Option<f64>,
    shared: bool,
}

/// Per-trip pickup, dropoff and sharing rebuilt from the measured day's
/// events: a rider is pooled when a driven leg carries two riders.
fn replay(log: &EventLog) -> BTreeMap<u32, Ride> {
    let mut rides: BTreeMap<u32, Ride> = BTreeMap::new();
    let mut aboard: BTreeMap<u32, BTreeSet<u32>> = BTreeMap::new();
    for e in log.records.iter().filter(|e| e.day == 2) {
        let held = aboard.entry(e.vehicle).or_default();
        match e.kind {
            EventKind::Pickup => {
                held.insert(e.trips[0]);
                rides.entry(e.trips[0]).or_default().pickup = Some(e.minute);
            }
            EventKind::Dropoff => {
                held.remove(&e.trips[0]);
                rides.entry(e.trips[0]).or_default().dropoff = Some(e.minute);
            }
            EventKind::Arrive if e.miles > 0.0 && held.len() >= 2 => {
                for t in held.iter() {
                    rides.entry(*t).or_default().shared = true;
                }
            }
            _ => {}
        }
    }
    rides
}

// ---------------------------------------------------------------------------

fn tree(root: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_string_lossy().into_owned();
                out.insert(rel, std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

#[test]
fn criterion_01_pipeline_is_deterministic() {
    let run = |dir: &Path| {
        let start = Instant::now();
        let out = Command::new(env!("CARGO_BIN_EXE_savsim"))
            .args(["--seed", "2024", "--out", dir.to_str().unwrap(), "pipeline", "--count", "5", "--logs"])
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        (start.elapsed().as_secs_f64(), out.stdout)
    };
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let (ta, sa) = run(a.path());
    let (tb, sb) = run(b.path());
    let (ta_tree, tb_tree) = (tree(a.path()), tree(b.path()));
    let differing: Vec<&String> = ta_tree.keys().filter(|k| ta_tree.get(*k) != tb_tree.get(*k)).collect();
    let cities = ta_tree.keys().filter(|k| k.ends_with("simresult.json")).count();
    let pass = ta_tree.keys().eq(tb_tree.keys()) && differing.is_empty() && sa == sb && cities == 5 && ta.max(tb) < 120.0;
    report(
        1,
        pass,
        &format!("{} files, {} differ, {cities} cities, runs {ta:.1}s and {tb:.1}s", ta_tree.len(), differing.len()),
    );
    assert!(pass, "differing: {differing:?}");
}

fn served(id: u32, ws: bool, pooled: bool, dist: f64) -> TripRequest {
    TripRequest {
        id,
        origin: "A".into(),
        destination: "B".into(),
        o: 0,
        d: 1,
        request_minute: 0,
        willing_to_share: ws,
        state: TripState::Served,
        wait_minutes: Some(0.0),
        direct_time: 2.0 * dist,
        direct_dist: dist,
        pooled,
        vehicle: Some(0),
        pickup_minute: Some(0.0),
        dropoff_minute: Some(2.0 * dist),
    }
}

fn arrive(vehicle: u32, miles: f64, occupied: bool) -> EventRecord {
    EventRecord {
        day: 2,
        minute: 10.0,
        vehicle,
        kind: EventKind::Arrive,
        zone: "B".into(),
        miles,
        occupied,
        trips: Vec::new(),
    }
}

#[test]
fn criterion_02_metric_formulas() {
    let mut trips: Vec<TripRequest> = (0..10).map(|i| served(i, i < 4, i < 2, 1.0)).collect();
    let m = performance_from_parts("fixture", 2, &EventLog::default(), &trips).unwrap();
    let eq1 = m.served_trips_per_sav == Some(5.0);
    let eq2 = m.pct_pooled_trips == Some(50.0);

    trips = vec![served(0, false, false, 4.0), served(1, false, false, 6.0)];
    let log = EventLog {
        records: vec![arrive(0, 2.0, true), arrive(0, 3.0, true)],
    };
    let m3 = performance_from_parts("fixture", 1, &log, &trips).unwrap();
    let eq3 = m3.pct_extra_vmt == Some(-50.0) && m3.empty_vmt == 0.0 && m3.occupied_vmt == 5.0 && m3.demanded_vmt == 10.0;
    let pass = eq1 && eq2 && eq3;
    report(
        2,
        pass,
        &format!(
            "trips/SAV {:?}, pooled {:?}, extra VMT {:?}",
            m.served_trips_per_sav, m.pct_pooled_trips, m3.pct_extra_vmt
        ),
    );
    assert!(pass);
}

/// About 10,000 requests on the measured day.
fn busy_day() -> SimulationResult {
    let params = SynthParams {
        n_zones_side: 6,
        base_od_rate: 8.0,
        ..SynthParams::default()
    };
    simulate_city(&params, 31, 5)
}

#[test]
fn criterion_03_detour_audit() {
    let r = busy_day();
    let w = write_and_read(&r);
    let rides = replay(&w.log);
    let cap = r.config.detour_cap;
    let mut pooled = 0;
    let mut violations = 0;
    let mut flag_mismatch = 0;
    for t in &w.trips {
        let ride = rides.get(&t.id).cloned().unwrap_or_default();
        if ride.shared != t.pooled {
            flag_mismatch += 1;
        }
        if !ride.shared {
            continue;
        }
        pooled += 1;
        let in_vehicle = ride.dropoff.unwrap() - ride.pickup.unwrap();
        if in_vehicle - t.direct_time > cap * t.direct_time {
            violations += 1;
        }
    }
    let pass = w.trips.len() >= 10_000 && pooled > 0 && violations == 0 && flag_mismatch == 0;
    report(
        3,
        pass,
        &format!("{} trips, {pooled} pooled riders, {violations} over the cap", w.trips.len()),
    );
    assert!(pass, "{flag_mismatch} pooled flags disagree with the replay");
}

#[test]
fn criterion_04_wait_rule_audit() {
    let r = busy_day();
    let w = write_and_read(&r);
    let rides = replay(&w.log);
    let limit = r.config.max_wait + r.config.tick;
    let (mut served_late, mut abandoned_off, mut served_n, mut abandoned_n) = (0, 0, 0, 0);
    for t in w.trips.iter().filter(|t| !t.willing_to_share) {
        let ride = rides.get(&t.id).cloned().unwrap_or_default();
        match t.state {
            TripState::Served => {
                served_n += 1;
                let wait = ride.pickup.unwrap() - t.request_minute as f64;
                if wait >= limit {
                    served_late += 1;
                }
            }
            TripState::Abandoned => {
                abandoned_n += 1;
                if t.wait_minutes != Some(r.config.max_wait) || ride.pickup.is_some() {
                    abandoned_off += 1;
                }
            }
            _ => {}
        }
    }
    let pass = served_late == 0 && abandoned_off == 0 && served_n > 0;
    report(
        4,
        pass,
        &format!("{served_n} served and {abandoned_n} abandoned non-sharers; {served_late} late, {abandoned_off} off-rule"),
    );
    assert!(pass);
}

#[test]
fn criterion_05_vmt_conservation() {
    let params = SynthParams {
        n_zones_side: 5,
        base_od_rate: 4.0,
        ..SynthParams::default()
    };
    let r = simulate_city(&params, 8, 12);
    let engine = compute_performance(&r).unwrap();
    let w = write_and_read(&r);
    let (mut empty, mut occupied) = (0.0, 0.0);
    for e in w.log.records.iter().filter(|e| e.day == 2 && e.kind == EventKind::Arrive) {
        if e.occupied {
            occupied += e.miles;
        } else {
            empty += e.miles;
        }
    }
    let odometer: f64 = r.vehicles.iter().map(|v: &VehicleSummary| v.empty_miles + v.occupied_miles).sum();
    let odo_rel = ((empty + occupied) - odometer).abs() / odometer;
    let demanded: f64 = w.trips.iter().filter(|t| t.state == TripState::Served).map(|t| t.direct_dist).sum();
    let eq3 = (empty + occupied - demanded) / demanded * 100.0;
    let reported = engine.pct_extra_vmt.unwrap();
    let eq3_rel = (eq3 - reported).abs() / reported.abs();
    let pass = odo_rel <= 1e-9 && eq3_rel <= 1e-9;
    report(
        5,
        pass,
        &format!("log vs odometer rel {odo_rel:.1e}, extra VMT {eq3:.6}% vs {reported:.6}% (rel {eq3_rel:.1e})"),
    );
    assert!(pass);
}

#[test]
fn criterion_06_fleet_discipline() {
    let params = SynthParams {
        n_zones_side: 5,
        base_od_rate: 4.0,
        ..SynthParams::default()
    };
    let r = simulate_city(&params, 9, 13);
    let w = write_and_read(&r);
    let mut alive: BTreeSet<u32> = BTreeSet::new();
    let mut counts = Vec::new();
    let mut unknown_vehicle = 0;
    let mut day2_spawns = 0;
    for e in &w.log.records {
        match (e.day, e.kind) {
            (1, EventKind::Spawn) => {
                alive.insert(e.vehicle);
            }
            (2, EventKind::Spawn) => day2_spawns += 1,
            _ if !alive.contains(&e.vehicle) => unknown_vehicle += 1,
            _ => {}
        }
        counts.push((e.day, alive.len()));
    }
    let day1: Vec<usize> = counts.iter().filter(|c| c.0 == 1).map(|c| c.1).collect();
    let day2: BTreeSet<usize> = counts.iter().filter(|c| c.0 == 2).map(|c| c.1).collect();
    let spawns = w.log.records.iter().filter(|e| e.kind == EventKind::Spawn).count();
    let pass = day1.windows(2).all(|x| x[1] >= x[0])
        && day2.len() == 1
        && day2_spawns == 0
        && unknown_vehicle == 0
        && spawns == r.fleet_size as usize
        && r.vehicles.len() == spawns;
    report(
        6,
        pass,
        &format!("fleet {} from {spawns} day-1 spawns, day-2 counts {day2:?}", r.fleet_size),
    );
    assert!(pass);
}

fn block(mix: [f64; 5]) -> BlockGroup {
    BlockGroup {
        id: "b".into(),
        zone: "z".into(),
        centroid: Point::new(0.0, 0.0),
        area: 1.0,
        population: 0.0,
        households: 0.0,
        housing_sf: mix[0],
        housing_mf: mix[1],
        workers: 0.0,
        jobs: SectorJobs {
            reserve: mix[2],
            prof: mix[3],
            labor: mix[4],
            ..SectorJobs::default()
        },
    }
}

fn flow(h: &str, w: &str, c: f64) -> Flow {
    Flow {
        home: h.into(),
        work: w.into(),
        count: c,
    }
}

/// Ordered-triplet clustering over a dense 6-node weight matrix, with
/// triplet value the arithmetic mean of the two symmetrized edge weights.
fn triplet_oracle(w: &[[f64; 6]; 6]) -> Option<f64> {
    let s = |i: usize, j: usize| if i == j { 0.0 } else { w[i][j] + w[j][i] };
    let (mut closed, mut total) = (0.0, 0.0);
    for c in 0..6 {
        for a in 0..6 {
            for b in 0..6 {
                if a == b || a == c || b == c || s(c, a) <= 0.0 || s(c, b) <= 0.0 {
                    continue;
                }
                let v = (s(c, a) + s(c, b)) / 2.0;
                total += v;
                if s(a, b) > 0.0 {
                    closed += v;
                }
            }
        }
    }
    (total > 0.0).then(|| closed / total)
}

#[test]
fn criterion_07_urban_form_oracles() {
    let uniform = job_house_entropy(&block([20.0, 20.0, 20.0, 20.0, 20.0])).unwrap();
    let uni_ok = (uniform - (-(0.21f64).ln() / 5f64.ln())).abs() < 1e-9 && (uniform - 0.96975).abs() < 1e-4;
    let single = job_house_entropy(&block([100.0, 0.0, 0.0, 0.0, 0.0])).unwrap();
    let deg_ok = (single - (-(1.01f64).ln() / 5f64.ln())).abs() < 1e-9 && (single + 0.006183).abs() < 1e-6;

    let tri = CommuteFlowGraph::from_flows(&[flow("a", "b", 2.0), flow("b", "c", 5.0), flow("c", "a", 1.0)]);
    let star = CommuteFlowGraph::from_flows(&[flow("h", "a", 1.0), flow("h", "b", 3.0), flow("c", "h", 2.0)]);
    let tri_ok = od_clustering_coefficient(&tri, TripletValue::ArithmeticMean) == Ok(1.0);
    let star_ok = od_clustering_coefficient(&star, TripletValue::ArithmeticMean) == Ok(0.0);

    let mut rng = ChaCha8Rng::seed_from_u64(606);
    let mut worst = 0.0f64;
    let mut graphs = 0;
    while graphs < 200 {
        let mut w = [[0.0; 6]; 6];
        let mut flows = Vec::new();
        for (i, row) in w.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                if i != j && rng.random_bool(0.4) {
                    *cell = rng.random_range(0.1..10.0);
                    flows.push(flow(&format!("n{i}"), &format!("n{j}"), *cell));
                }
            }
        }
        let Some(expected) = triplet_oracle(&w) else { continue };
        let got = od_clustering_coefficient(&CommuteFlowGraph::from_flows(&flows), TripletValue::ArithmeticMean).unwrap();
        worst = worst.max((got - expected).abs());
        graphs += 1;
    }
    let pass = uni_ok && deg_ok && tri_ok && star_ok && worst <= 1e-12;
    report(
        7,
        pass,
        &format!("entropy {uniform:.6} and {single:.6}; triangle/star ok {tri_ok}/{star_ok}; worst triplet error {worst:.1e}"),
    );
    assert!(pass);
}

fn gauss_jordan(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Vec<f64> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..n {
            if r != c {
                let f = a[r][c] / a[c][c];
                for k in c..n {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
    }
    (0..n).map(|i| b[i] / a[i][i]).collect()
}

fn normals(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let d = Normal::new(0.0, 1.0).unwrap();
    (0..n).map(|_| d.sample(rng)).collect()
}

fn moran_double_sum(r: &[f64], pts: &[Point]) -> f64 {
    let n = r.len() as f64;
    let m = r.iter().sum::<f64>() / n;
    let (mut num, mut s0, mut den) = (0.0, 0.0, 0.0);
    for i in 0..r.len() {
        den += (r[i] - m).powi(2);
        for j in 0..r.len() {
            if i != j {
                let w = 1.0 / ((pts[i].x - pts[j].x).powi(2) + (pts[i].y - pts[j].y).powi(2)).sqrt();
                s0 += w;
                num += w * (r[i] - m) * (r[j] - m);
            }
        }
    }
    n / s0 * num / den
}

#[test]
fn criterion_08_statistics_oracles() {
    let mut rng = ChaCha8Rng::seed_from_u64(808);
    let mut ols_err = 0.0f64;
    for _ in 0..20 {
        let (n, p) = (40, rng.random_range(2..6));
        let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { rng.random_range(-2.0..2.0) });
        let y: Vec<f64> = (0..n).map(|i| (0..p).map(|j| x[(i, j)] * j as f64).sum::<f64>() + rng.random_range(-1.0..1.0)).collect();
        let xtx = (0..p).map(|a| (0..p).map(|b| (0..n).map(|i| x[(i, a)] * x[(i, b)]).sum()).collect()).collect();
        let xty = (0..p).map(|a| (0..n).map(|i| x[(i, a)] * y[i]).sum()).collect();
        let oracle = gauss_jordan(xtx, xty);
        let names: Vec<String> = std::iter::once(INTERCEPT.to_string()).chain((1..p).map(|j| format!("x{j}"))).collect();
        let fit = ols(&names, &x, &y).unwrap();
        for (b, o) in fit.coefficients.iter().zip(&oracle) {
            ols_err = ols_err.max((b - o).abs());
        }
    }

    // x2 = x1 + noise orthogonal to x1 and the intercept, scaled so the
    // regression of x2 on x1 has R² = 0.96.
    let n = 50;
    let mut a = normals(&mut rng, n);
    let ma = a.iter().sum::<f64>() / n as f64;
    a.iter_mut().for_each(|v| *v -= ma);
    let mut e = normals(&mut rng, n);
    let me = e.iter().sum::<f64>() / n as f64;
    e.iter_mut().for_each(|v| *v -= me);
    let k = e.iter().zip(&a).map(|(x, y)| x * y).sum::<f64>() / a.iter().map(|v| v * v).sum::<f64>();
    e.iter_mut().zip(&a).for_each(|(v, x)| *v -= k * x);
    let scale = (a.iter().map(|v| v * v).sum::<f64>() * (1.0 / 0.96 - 1.0) / e.iter().map(|v| v * v).sum::<f64>()).sqrt();
    let b: Vec<f64> = a.iter().zip(&e).map(|(x, z)| x + scale * z).collect();
    let v = vif(&DMatrix::from_fn(n, 2, |i, j| if j == 0 { a[i] } else { b[i] })).unwrap();
    let vif_err = (v[0] - 25.0).abs().max((v[1] - 25.0).abs());

    let mut moran_err = 0.0f64;
    for _ in 0..20 {
        let m = rng.random_range(3..25);
        let pts: Vec<Point> = (0..m).map(|_| Point::new(rng.random_range(0.0..40.0), rng.random_range(0.0..40.0))).collect();
        let r = normals(&mut rng, m);
        moran_err = moran_err.max((morans_i(&r, &pts).unwrap() - moran_double_sum(&r, &pts)).abs());
    }

    let alt: Vec<f64> = (0..12).map(|i| if i % 2 == 0 { -1.0 } else { 1.0 }).collect();
    let kurt = kurtosis(&alt).unwrap();
    let pass = ols_err <= 1e-9 && vif_err <= 1e-6 && moran_err <= 1e-12 && kurt == -2.0;
    report(
        8,
        pass,
        &format!("OLS err {ols_err:.1e}, VIF {:.9}, Moran err {moran_err:.1e}, kurtosis {kurt}", v[0]),
    );
    assert!(pass);
}

#[test]
fn criterion_09_stepwise_contract() {
    let cfg = StepwiseConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(909);
    let mut broken = Vec::new();
    let mut selected_total = 0;
    for case in 0..50 {
        let n = rng.random_range(30..80);
        let k = rng.random_range(3..8);
        let latent: Vec<Vec<f64>> = (0..2).map(|_| normals(&mut rng, n)).collect();
        let cols: Vec<Column> = (0..k)
            .map(|j| {
                let (m0, m1, sd) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(0.1..1.0));
                let e = normals(&mut rng, n);
                Column::new(format!("v{j}"), (0..n).map(|i| m0 * latent[0][i] + m1 * latent[1][i] + sd * e[i]).collect())
            })
            .collect();
        let beta: Vec<f64> = (0..k).map(|_| if rng.random_bool(0.5) { rng.random_range(-2.0..2.0) } else { 0.0 }).collect();
        let e = normals(&mut rng, n);
        let y: Vec<f64> = (0..n).map(|i| (0..k).map(|j| beta[j] * cols[j].values[i]).sum::<f64>() + e[i]).collect();
        let regions = (0..n).map(|i| format!("g{}", i % 3)).collect();
        let t = DesignTable::new((0..n).map(|i| format!("c{i}")).collect(), regions, cols).unwrap();
        let res = stepwise_select(&t, &y, "y", &cfg).unwrap();
        selected_total += res.selected.len();
        let mut ok = true;
        for (i, a) in res.selected.iter().enumerate() {
            for b in &res.selected[i + 1..] {
                let r = pearson(&t.column(a).unwrap().values, &t.column(b).unwrap().values).unwrap();
                ok &= r.abs() <= cfg.r_max;
            }
            ok &= res.fit.coefficient(a).unwrap().2 < cfg.alpha;
        }
        ok &= res.vif.iter().all(|(_, v)| *v <= cfg.vif_max);
        ok &= res.adj_r2_path().windows(2).all(|w| w[1] >= w[0]);
        if !ok {
            broken.push(case);
        }
    }
    let pass = broken.is_empty() && selected_total > 0;
    report(9, pass, &format!("50 datasets, {selected_total} variables selected, violations in {broken:?}"));
    assert!(pass);
}

fn family_records(family: Family, count: usize, keep_range: [f64; 2]) -> Vec<CityRecord> {
    let spec = GenSpec {
        family,
        count,
        keep_range,
        ..GenSpec::default()
    };
    let inputs: Vec<CityInput> = spec.generate(17).unwrap().into_iter().map(CityInput::from_scenario).collect();
    let (runs, _) = run_batch(&inputs, &SimConfig::default(), &AnalysisConfig::default(), 99, false);
    runs.into_iter().map(|r| r.record).collect()
}

/// Slope and p-value of `y` on `x` with an intercept.
fn slope(x: &[f64], y: &[f64]) -> (f64, f64) {
    let m = DMatrix::from_fn(x.len(), 2, |i, j| if j == 0 { 1.0 } else { x[i] });
    let fit = ols(&[INTERCEPT.to_string(), "x".to_string()], &m, y).unwrap();
    (fit.coefficients[1], fit.p_values[1])
}

fn measure(recs: &[CityRecord], name: &str) -> Vec<f64> {
    recs.iter().map(|r| r.urbanform.as_ref().unwrap().get(name).unwrap()).collect()
}

fn perf(recs: &[CityRecord], f: fn(&savsim_core::PerformanceReport) -> Option<f64>) -> Vec<f64> {
    recs.iter().map(|r| f(r.performance.as_ref().unwrap()).unwrap()).collect()
}

fn ln(v: Vec<f64>) -> Vec<f64> {
    v.into_iter().map(f64::ln).collect()
}

#[test]
fn criterion_10_directional_signs() {
    let start = Instant::now();
    let density = family_records(Family::Density, 8, [0.3, 1.0]);
    let connectivity = family_records(Family::Connectivity, 8, [0.3, 1.0]);
    let (b1, p1) = slope(&ln(measure(&density, "jobDen")), &perf(&density, |p| p.pct_pooled_trips));
    let (b2, p2) = slope(&measure(&connectivity, "netDenPed"), &perf(&connectivity, |p| p.served_trips_per_sav));
    let (b3, p3) = slope(
        &ln(measure(&connectivity, "intersectDenNonAuto")),
        &ln(perf(&connectivity, |p| p.pct_extra_vmt)),
    );
    let secs = start.elapsed().as_secs_f64();
    let pooled_ok = b1 > 0.0 && p1 < 0.10;
    let trips_ok = b2 > 0.0 && p2 < 0.10;
    let vmt_ok = b3 < 0.0 && p3 < 0.10;
    let pass = pooled_ok && trips_ok && vmt_ok && secs < 600.0;
    report(
        10,
        pass,
        &format!(
            "pooled~ln jobDen {b1:+.3} (p {p1:.1e}) {}; trips/SAV~netDenPed {b2:+.3} (p {p2:.1e}) {}; \
             ln extraVMT~ln intersectDenNonAuto {b3:+.3} (p {p3:.1e}) {}; {secs:.0}s",
            ok_word(pooled_ok),
            ok_word(trips_ok),
            ok_word(vmt_ok)
        ),
    );
    assert!(pass);
}

fn ok_word(ok: bool) -> &'static str {
    if ok {
        "ok"
    } else {
        "wrong"
    }
}

#[test]
fn criterion_11_sensitivity_harness() {
    let density = GenSpec {
        family: Family::Density,
        count: 8,
        ..GenSpec::default()
    };
    let connectivity = GenSpec {
        family: Family::Connectivity,
        count: 7,
        keep_range: [0.3, 0.9],
        ..GenSpec::default()
    };
    let mut scenarios = density.generate(17).unwrap();
    for mut s in connectivity.generate(17).unwrap() {
        // keep the two families apart so city locations stay distinct
        s.location.y += 100.0;
        scenarios.push(s);
    }
    let inputs: Vec<CityInput> = scenarios.into_iter().map(CityInput::from_scenario).collect();
    let cfg = AnalysisConfig::default();
    let cities: Vec<PreparedCity> = prepare_all(&inputs, &cfg).into_iter().map(|p| p.unwrap()).collect();
    let spec = SweepSpec {
        ws_values: vec![0.10, 0.275, 0.50],
        mp_values: vec![],
        ..SweepSpec::default()
    };
    let out = run_sweep(&cities, &SimConfig::default(), &spec, &cfg, 99).unwrap();

    // urban form is identical across cells by construction
    let forms: BTreeSet<String> = out
        .records
        .iter()
        .map(|r| format!("{}:{:?}", r.city, r.urbanform))
        .collect();
    let invariant = forms.len() == cities.len();
    let curves = out.bundles.len() == 3
        && out.bundles.iter().all(|b| {
            let rows = coefficient_rows(b);
            b.models.iter().all(|m| rows.iter().any(|r| r.response == m.response))
        });
    let ps: Vec<f64> = out.comparisons.iter().filter_map(|c| c.p).collect();
    let min_p = ps.iter().copied().fold(f64::INFINITY, f64::min);
    let worst = out
        .comparisons
        .iter()
        .filter(|c| c.p == Some(min_p))
        .map(|c| format!("{} {} at ws {}: {:.3} vs {:.3}", c.response, c.variable, c.ws, c.estimate, c.baseline_estimate))
        .next()
        .unwrap_or_default();
    let pass = invariant && curves && !ps.is_empty() && ps.len() == out.comparisons.len() && min_p > 0.05;
    report(
        11,
        pass,
        &format!(
            "{} cells, {} coefficient comparisons, smallest p {min_p:.3} ({worst}), urban form invariant {invariant}",
            out.bundles.len(),
            ps.len()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_12_sanity_band() {
    let params = SynthParams {
        n_zones_side: 10,
        base_od_rate: 3.0,
        ..SynthParams::default()
    };
    let input = CityInput::from_scenario(generate_synthetic_city(&params, 23).unwrap());
    let cfg = AnalysisConfig::default();
    let city = prepare_all(&[input], &cfg).pop().unwrap().unwrap();
    let start = Instant::now();
    let (rec, _) = simulate_prepared(&city, &SimConfig::default(), 7, 0);
    let per_day = start.elapsed().as_secs_f64() / 2.0;
    let p = rec.performance.unwrap();
    let tps = p.served_trips_per_sav.unwrap();
    let trips_ok = (24_000..=36_000).contains(&p.generated_count);
    let pass = city.record.n_zones == Some(100) && trips_ok && (26.0..=123.0).contains(&tps) && per_day < 60.0;
    report(
        12,
        pass,
        &format!("{} trips, fleet {}, {tps:.1} trips/SAV, {per_day:.1}s per day", p.generated_count, p.fleet_size),
    );
    assert!(pass);
}
