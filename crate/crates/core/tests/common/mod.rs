//! Fixtures shared by the integration tests.
#![allow(dead_code)]

use chargeplan::datagen::{generate_instance, range_for_assignable_fraction, GenParams};
use chargeplan::model::AssignCost;
use chargeplan::Instance;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const TINY_COUNT: u64 = 25;

/// Three locations, four slots, no delay, everyone charges, integer flows up
/// to 10 and integer prices. About a third of the pairs are forbidden.
pub fn tiny_instance(seed: u64) -> Instance {
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e57_0000 + seed);
    let mut inst = Instance::blank(3, 4);
    inst.beta = 10.0;
    inst.base_cost = 5.0;
    for row in inst.flow.iter_mut() {
        for f in row.iter_mut() {
            *f = rng.random_range(0..=10u32) as f64;
        }
    }
    inst.location_cost = (0..3).map(|_| rng.random_range(0..=40u32) as f64).collect();
    inst.recurrence = (0..4).map(|_| rng.random_range(1..=4u32) as f64).collect();
    for i in 0..3 {
        for j in 0..3 {
            if i != j && rng.random_range(0..3u32) > 0 {
                inst.assign_cost[i][j] = AssignCost::Allowed(rng.random_range(1..=60u32) as f64);
            }
        }
    }
    inst.validate().unwrap();
    inst
}

/// Exhaustive minimum over integer assignment plans of a delay-free
/// instance with unit charging shares.
///
/// Slots only interact through the capacities, so each slot's plans are
/// enumerated once and reduced to the cheapest plan per net-demand vector.
/// Capacities at the optimum of an integer plan are `beta` times integer
/// peaks, which are then enumerated directly.
pub fn brute_force_integer(inst: &Instance) -> f64 {
    let (n, nt) = (inst.n_locations, inst.n_slots);
    assert_eq!(n, 3, "brute force expects three locations");
    assert!(inst.delay.iter().flatten().all(|&d| d == 0));
    assert!(inst.alpha.iter().flatten().all(|&a| a == 1.0));
    let pairs: Vec<(usize, usize, f64)> = (0..n)
        .flat_map(|i| (0..n).map(move |j| (i, j)))
        .filter_map(|(i, j)| inst.assign_cost[i][j].value().filter(|_| i != j).map(|l| (i, j, l)))
        .collect();
    let k = (0..nt).map(|t| inst.flow[t].iter().sum::<f64>() as usize).max().unwrap();
    let side = k + 1;
    let idx = |a: usize, b: usize, c: usize| (a * side + b) * side + c;
    let mut best_per_slot = Vec::with_capacity(nt);
    for t in 0..nt {
        let flow: Vec<usize> = inst.flow[t].iter().map(|&f| f as usize).collect();
        let mut table = vec![f64::INFINITY; side * side * side];
        let mut z = vec![0usize; pairs.len()];
        enumerate(&pairs, &flow, 0, &mut z, &mut vec![0; n], &mut |z| {
            let mut net: Vec<i64> = flow.iter().map(|&f| f as i64).collect();
            let mut cost = 0.0;
            for (p, &(i, j, l)) in pairs.iter().enumerate() {
                net[i] -= z[p] as i64;
                net[j] += z[p] as i64;
                cost += z[p] as f64 * l;
            }
            let c = &mut table[idx(net[0] as usize, net[1] as usize, net[2] as usize)];
            *c = c.min(cost * inst.recurrence[t]);
        });
        // prefix minimum: cheapest plan whose net demand fits under each peak
        for a in 0..side {
            for b in 0..side {
                for c in 0..side {
                    let mut v = table[idx(a, b, c)];
                    if a > 0 {
                        v = v.min(table[idx(a - 1, b, c)]);
                    }
                    if b > 0 {
                        v = v.min(table[idx(a, b - 1, c)]);
                    }
                    if c > 0 {
                        v = v.min(table[idx(a, b, c - 1)]);
                    }
                    table[idx(a, b, c)] = v;
                }
            }
        }
        best_per_slot.push(table);
    }
    let unit: Vec<f64> = (0..n).map(|i| inst.beta * (inst.base_cost + inst.location_cost[i])).collect();
    let mut best = f64::INFINITY;
    for a in 0..side {
        for b in 0..side {
            for c in 0..side {
                let caps = [a, b, c];
                if (0..n).any(|i| inst.beta * caps[i] as f64 > inst.capacity_max[i]) {
                    continue;
                }
                let inv: f64 = (0..n).map(|i| unit[i] * caps[i] as f64).sum();
                if inv > inst.budget {
                    continue;
                }
                let ops: f64 = best_per_slot.iter().map(|tb| tb[idx(a, b, c)]).sum();
                best = best.min(inv + ops);
            }
        }
    }
    best
}

fn enumerate(
    pairs: &[(usize, usize, f64)],
    flow: &[usize],
    p: usize,
    z: &mut Vec<usize>,
    used: &mut Vec<usize>,
    visit: &mut impl FnMut(&[usize]),
) {
    if p == pairs.len() {
        visit(z);
        return;
    }
    let i = pairs[p].0;
    for v in 0..=flow[i] - used[i] {
        z[p] = v;
        used[i] += v;
        enumerate(pairs, flow, p + 1, z, used, visit);
        used[i] -= v;
    }
    z[p] = 0;
}

/// n = 20, T = 96 with the range set so that about 30% of ordered pairs are
/// assignable.
pub fn synthetic_20x96(seed: u64) -> Instance {
    let mut p = GenParams {
        n_locations: 20,
        n_slots: 96,
        seed,
        ..GenParams::default()
    };
    let probe = generate_instance(&p).unwrap();
    p.range_km = range_for_assignable_fraction(probe.distance.as_ref().unwrap(), 0.3);
    generate_instance(&p).unwrap()
}

/// Mixed archetypes on a city whose center is much dearer than its edge.
pub fn heterogeneous(seed: u64) -> Instance {
    let p = GenParams {
        n_locations: 16,
        n_slots: 96,
        seed,
        archetype_weights: [1.0, 1.0, 1.0],
        ..GenParams::default()
    };
    generate_instance(&p).unwrap()
}

pub fn relative_gap(x: f64, reference: f64) -> f64 {
    (x - reference).abs() / reference.abs().max(1e-300)
}
pub mod trips50;
