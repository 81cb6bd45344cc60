#![allow(dead_code)]

use ehflow_core::curves::{Grid, Sampled};
use ehflow_core::multihop::Node;
use ehflow_core::p2p::energy_of_data_curve;
use ehflow_core::{builtin, PiecewiseCurve, RateFunction, Scenario, Schedule, Term};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn scenario(name: &str) -> Scenario {
    builtin(name).unwrap().build().unwrap()
}

/// Three hops with a jumpy source and relays of different strength.
pub fn three_hop_chain() -> Scenario {
    let horizon = 1.5;
    let source = PiecewiseCurve::new(
        vec![Term::poly(4.0, 0.0, 2.0, 0.5), Term::step(2.0, 0.4), Term::step(1.0, 1.1)],
        horizon,
    )
    .unwrap();
    let relay1 = PiecewiseCurve::new(vec![Term::poly(3.0, 0.0, 1.0, 0.0)], horizon).unwrap();
    let relay2 = PiecewiseCurve::new(vec![Term::exp(0.2, 2.0, 1.0), Term::constant(-0.2)], horizon).unwrap();
    let arrival = PiecewiseCurve::new(vec![Term::poly(2.0, 0.0, 1.5, 0.2), Term::step(1.0, 0.7)], horizon).unwrap();
    Scenario::new(
        vec![
            Node::new("source", source, RateFunction::shannon()),
            Node::new("relay1", relay1, RateFunction::shannon()),
            Node::new("relay2", relay2, RateFunction::sqrt()),
        ],
        arrival,
        horizon,
    )
    .unwrap()
    .with_cells(1500)
}

/// The built-in examples plus a three-hop chain.
pub fn all_scenarios() -> Vec<(&'static str, Scenario)> {
    vec![
        ("ex1", scenario("ex1")),
        ("ex2", scenario("ex2")),
        ("ex3", scenario("ex3")),
        ("cubic", scenario("cubic")),
        ("chain3", three_hop_chain()),
    ]
}

/// A random power profile clipped cell by cell so that transmitted energy and
/// data never exceed the bounds at the next grid time.
pub fn random_feasible(
    rng: &mut ChaCha8Rng,
    grid: &Grid,
    energy: &Sampled,
    data: &Sampled,
    rate: &RateFunction,
    reference: &[f64],
) -> Schedule {
    let times = grid.times();
    let n = grid.cells();
    let peak = reference.iter().fold(0.0f64, |m, p| m.max(*p)).max(1e-3);
    let mode = rng.random_range(0..3);
    let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let freq: f64 = rng.random_range(1.0..12.0);
    let depth: f64 = rng.random_range(0.05..0.6);
    let mut level = rng.random_range(0.0..2.0 * peak);

    let mut power = Vec::with_capacity(n);
    let (mut e, mut b) = (0.0, 0.0);
    for k in 0..n {
        let wanted = match mode {
            0 => reference[k] * rng.random_range(0.5..1.5),
            1 => {
                if rng.random_bool(0.01) {
                    level = rng.random_range(0.0..2.0 * peak);
                }
                level
            }
            _ => reference[k] * (1.0 + depth * (freq * times[k] + phase).sin()),
        };
        let h = times[k + 1] - times[k];
        let e_room = ((energy.bound(k + 1) - e) / h).max(0.0);
        let d_room = ((data.bound(k + 1) - b) / h).max(0.0);
        let p = wanted.max(0.0).min(e_room).min(rate.inverse(d_room));
        e += p * h;
        b += rate.rate(p) * h;
        power.push(p);
    }
    Schedule::from_power(times, power, rate)
}

/// A convex data curve through the origin on `times`.
pub fn random_convex(rng: &mut ChaCha8Rng, times: &[f64]) -> Vec<f64> {
    let t_end = *times.last().unwrap();
    let a: f64 = rng.random_range(0.1..2.0);
    let b: f64 = rng.random_range(0.0..3.0);
    let k: f64 = rng.random_range(1.5..4.0);
    let c: f64 = rng.random_range(0.0..4.0);
    let knee: f64 = rng.random_range(0.2..0.8) * t_end;
    times
        .iter()
        .map(|&t| a * t + b * (t / t_end).powf(k) + c * (t - knee).max(0.0))
        .collect()
}

/// `running_max(convex - alpha * bump)`: stays under `convex`, keeps both
/// endpoints, and is nondecreasing.
pub fn perturbed_below(rng: &mut ChaCha8Rng, times: &[f64], convex: &[f64]) -> Vec<f64> {
    let t_end = *times.last().unwrap();
    let bumps = rng.random_range(1..4);
    let params: Vec<(f64, f64)> = (0..bumps)
        .map(|_| (rng.random_range(1..5) as f64, rng.random_range(0.1..1.0)))
        .collect();
    let alpha = rng.random_range(0.05..0.5) * convex.last().unwrap();
    let mut running = 0.0f64;
    times
        .iter()
        .zip(convex)
        .map(|(&t, &c)| {
            let x = t / t_end;
            let bump: f64 = params
                .iter()
                .map(|(m, w)| w * (m * std::f64::consts::PI * x).sin().abs())
                .sum();
            running = running.max(c - alpha * bump * x * (1.0 - x));
            running.min(c)
        })
        .collect()
}

pub fn energy_of(times: &[f64], data: &[f64], rate: &RateFunction) -> f64 {
    energy_of_data_curve(times, data, rate).unwrap()
}

pub fn rel_err(value: f64, reference: f64) -> f64 {
    (value - reference).abs() / reference.abs()
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

pub mod slotted {
    use ehflow_core::oracle::{uniform_levels, SlottedInstance};
    use ehflow_core::RateFunction;
    use rand::Rng;
    use rand_chacha::ChaCha8Rng;

    pub const LEVELS: usize = 9;
    pub const P_MAX: f64 = 2.0;

    fn levels() -> Vec<f64> {
        uniform_levels(P_MAX, LEVELS)
    }

    fn cumulative(increments: &[f64]) -> Vec<f64> {
        increments
            .iter()
            .scan(0.0, |acc, x| {
                *acc += x;
                Some(*acc)
            })
            .collect()
    }

    fn nondecreasing_levels(rng: &mut ChaCha8Rng, slots: usize, cap: &[usize]) -> Vec<usize> {
        let mut picked: Vec<usize> = (0..slots).map(|i| rng.random_range(0..=cap[i])).collect();
        picked.sort_unstable();
        // Sorting can push a level above its cap; clamp while keeping the order.
        for i in (0..slots).rev() {
            picked[i] = picked[i].min(cap[i]);
            if i + 1 < slots {
                picked[i] = picked[i].min(picked[i + 1]);
            }
        }
        picked
    }

    /// Instances whose continuous optimum lies on the power grid: energy (and
    /// optionally data) arrives exactly as nondecreasing level-valued powers
    /// spend it, with the relay's levels never above the source's.
    pub fn aligned(rng: &mut ChaCha8Rng, rate: &RateFunction) -> SlottedInstance {
        let slots = rng.random_range(2..=4);
        let slot_len = rng.random_range(0.25..1.5);
        let lv = levels();
        let top = vec![LEVELS - 1; slots];
        let src = nondecreasing_levels(rng, slots, &top);
        let relay = nondecreasing_levels(rng, slots, &src);
        let e_src = cumulative(&src.iter().map(|&i| lv[i] * slot_len).collect::<Vec<_>>());
        let e_relay = cumulative(&relay.iter().map(|&i| lv[i] * slot_len).collect::<Vec<_>>());
        let data = if rng.random_bool(0.5) {
            vec![1e6; slots]
        } else {
            // Data arrives exactly as the source can send it.
            let sent: Vec<f64> = src.iter().map(|&i| rate.rate(lv[i]) * slot_len).collect();
            cumulative(&sent)
        };
        SlottedInstance::new(slot_len, vec![e_src, e_relay], data, lv).unwrap()
    }

    pub fn random(rng: &mut ChaCha8Rng) -> SlottedInstance {
        let slots = rng.random_range(2..=4);
        let slot_len = rng.random_range(0.25..1.5);
        let mut draw = |scale: f64| {
            let inc: Vec<f64> = (0..slots).map(|_| rng.random_range(0.0..scale)).collect();
            cumulative(&inc)
        };
        let e_src = draw(2.0 * slot_len);
        let e_relay = draw(2.0 * slot_len);
        let data = draw(2.0 * slot_len);
        SlottedInstance::new(slot_len, vec![e_src, e_relay], data, levels()).unwrap()
    }

    /// The expected throughput of an aligned instance.
    pub fn aligned_throughput(inst: &SlottedInstance, rate: &RateFunction) -> f64 {
        let e = &inst.energy[1];
        (0..inst.slots())
            .map(|i| {
                let inc = e[i] - if i == 0 { 0.0 } else { e[i - 1] };
                rate.rate(inc / inst.slot_len) * inst.slot_len
            })
            .sum()
    }
}

/// Solver results on a slotted instance: throughput and minimized source energy.
pub fn solve_slotted(inst: &ehflow_core::oracle::SlottedInstance, rate: &RateFunction) -> (f64, f64) {
    let sc = inst.to_scenario(&[rate.clone(), rate.clone()], 400).unwrap();
    let sol = ehflow_core::solve_throughput(&sc, true).unwrap();
    (sol.delivered, sol.schedules[0].energy_used())
}
