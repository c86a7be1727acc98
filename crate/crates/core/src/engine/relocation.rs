//! Idle-vehicle rebalancing toward zones short of supply.
//!
//! A zone's ratio is its idle supply (parked vehicles plus vehicles already
//! relocating toward it) over its expected demand in the next window. The
//! city average is total supply over total demand. Zones above the average
//! (including zones with supply and no demand) donate, most parked vehicles
//! first, one vehicle each, to the nearest zone below the average. Supplies
//! are updated after every move. With no expected demand anywhere nothing
//! moves.

/// Relative band around the city average treated as "equal".
const RATIO_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Relocation {
    pub vehicle: u32,
    pub from: usize,
    pub to: usize,
}

/// `parked[z]` lists the ids of vehicles parked in zone `z`, ascending.
/// `travel(a, b)` is the minutes from zone `a` to `b`.
pub fn plan_relocations(
    supply: &[f64],
    demand: &[f64],
    parked: &[Vec<u32>],
    travel: impl Fn(usize, usize) -> f64,
) -> Vec<Relocation> {
    let total_demand: f64 = demand.iter().sum();
    if !(total_demand > 0.0) {
        return Vec::new();
    }
    let avg = supply.iter().sum::<f64>() / total_demand;
    let mut supply = supply.to_vec();
    let ratio = |s: &[f64], z: usize| -> Option<f64> {
        if demand[z] > 0.0 {
            Some(s[z] / demand[z])
        } else if s[z] > 0.0 {
            Some(f64::INFINITY)
        } else {
            None
        }
    };
    let above = |r: f64| r > avg * (1.0 + RATIO_TOLERANCE);
    let below = |r: f64| r < avg * (1.0 - RATIO_TOLERANCE);

    let mut donors: Vec<usize> = (0..supply.len())
        .filter(|&z| !parked[z].is_empty() && ratio(&supply, z).is_some_and(above))
        .collect();
    donors.sort_by(|a, b| parked[*b].len().cmp(&parked[*a].len()).then(a.cmp(b)));

    let mut moves = Vec::new();
    for donor in donors {
        if !ratio(&supply, donor).is_some_and(above) {
            continue;
        }
        let target = (0..supply.len())
            .filter(|&z| z != donor && demand[z] > 0.0 && ratio(&supply, z).is_some_and(below))
            .min_by(|&a, &b| travel(donor, a).total_cmp(&travel(donor, b)).then(a.cmp(&b)));
        let Some(to) = target else {
            break;
        };
        supply[donor] -= 1.0;
        supply[to] += 1.0;
        moves.push(Relocation {
            vehicle: parked[donor][0],
            from: donor,
            to,
        });
    }
    moves
}
