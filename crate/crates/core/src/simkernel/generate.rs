use std::cmp::Reverse;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Geometric};

use super::{IntervalModel, MessageRecord, PredicateInterval, SimConfig, SimError, Trace};
use crate::clocks::{HlcTimestamp, PhysTime, VectorClock};

/// Called after every generation step with the current process clocks.
pub trait StepObserver {
    fn on_step(&mut self, step: u64, clocks: &[u64]);
}

impl<F: FnMut(u64, &[u64])> StepObserver for F {
    fn on_step(&mut self, step: u64, clocks: &[u64]) {
        self(step, clocks)
    }
}

/// Choose which processes advance their clock in this step.
///
/// A process whose clock sits at `min + eps` may only advance together with
/// every process at the minimum. If nothing is selected, the lowest-index
/// process at the minimum advances (all of them when `eps == 0`).
pub fn step_schedule<R: Rng + ?Sized>(clocks: &[u64], eps: u64, advance_prob: f64, rng: &mut R) -> Vec<usize> {
    let min = clocks.iter().copied().min().unwrap_or(0);
    let cap = min.saturating_add(eps);
    let mut picked: Vec<usize> = (0..clocks.len()).filter(|_| rng.random::<f64>() < advance_prob).collect();
    let lifts_min =
        clocks.iter().enumerate().filter(|&(_, &c)| c == min).all(|(i, _)| picked.binary_search(&i).is_ok());
    if !lifts_min {
        picked.retain(|&i| clocks[i] < cap);
    }
    if picked.is_empty() {
        let at_min = clocks.iter().enumerate().filter(|&(_, &c)| c == min).map(|(i, _)| i);
        if eps == 0 {
            picked.extend(at_min);
        } else {
            picked.extend(at_min.take(1));
        }
    }
    picked
}

pub fn sample_interval_length<R: Rng + ?Sized>(model: &IntervalModel, rng: &mut R) -> u64 {
    match *model {
        IntervalModel::Point => 1,
        IntervalModel::FixedLength { len } | IntervalModel::Retriggered { len } => len,
        IntervalModel::GeometricLength { p } => {
            // failures before the first success, shifted to start at 1
            let g = Geometric::new(p).expect("validated geometric parameter");
            g.sample(rng) + 1
        }
    }
}

struct Open {
    start: u64,
    end: u64,
    vc_start: VectorClock,
    vc_end: VectorClock,
    hlc_start: HlcTimestamp,
    hlc_end: HlcTimestamp,
}

struct Proc {
    clock: u64,
    vc: VectorClock,
    hlc: HlcTimestamp,
    open: Option<Open>,
    inbox: BinaryHeap<Reverse<(u64, usize)>>,
    rng: ChaCha8Rng,
    intervals: Vec<PredicateInterval>,
}

struct InFlight {
    sender: usize,
    receiver: usize,
    send_pt: u64,
    vc: VectorClock,
    hlc: HlcTimestamp,
}

/// Truthify under [`IntervalModel::Retriggered`]: extend the open interval,
/// resume one that closed on the previous tick, or open a new one.
fn retrigger(p: &mut Proc, c: u64, len: u64) {
    let end = c + len - 1;
    if let Some(open) = p.open.as_mut() {
        open.end = open.end.max(end);
        return;
    }
    if let Some(last) = p.intervals.pop_if(|iv| iv.end.0 + 1 == c) {
        // the predicate never became false; events since the old end are inside
        p.open = Some(Open {
            start: last.start.0,
            end,
            vc_start: last.vc_start,
            vc_end: p.vc.clone(),
            hlc_start: last.hlc_start,
            hlc_end: p.hlc,
        });
        return;
    }
    p.vc = p.vc.local_event();
    p.hlc = p.hlc.local_or_send(PhysTime(c));
    p.open =
        Some(Open { start: c, end, vc_start: p.vc.clone(), vc_end: p.vc.clone(), hlc_start: p.hlc, hlc_end: p.hlc });
}

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn generate(config: &SimConfig) -> Result<Trace, SimError> {
    generate_observed(config, &mut |_: u64, _: &[u64]| {})
}

/// Same as [`generate`], reporting the clock vector after every step.
pub fn generate_observed<O: StepObserver + ?Sized>(config: &SimConfig, observer: &mut O) -> Result<Trace, SimError> {
    config.validate()?;
    let n = config.n;
    let mut sched = stream(config.seed, 0);
    let mut procs: Vec<Proc> = (0..n)
        .map(|i| Proc {
            clock: 0,
            vc: VectorClock::new(n, i).expect("owner in range"),
            hlc: HlcTimestamp::default(),
            open: None,
            inbox: BinaryHeap::new(),
            rng: stream(config.seed, i as u64 + 1),
            intervals: Vec::new(),
        })
        .collect();
    let mut truth = vec![false; n];
    let mut in_flight: Vec<Option<InFlight>> = Vec::new();
    let mut messages = Vec::new();
    let mut clocks = vec![0u64; n];
    let mut max_spread = 0;
    let mut steps = 0u64;

    while clocks.iter().copied().min().unwrap_or(0) < config.horizon {
        let movers = step_schedule(&clocks, config.epsilon_app, config.advance_prob, &mut sched);
        for i in movers {
            let c = procs[i].clock + 1;
            procs[i].clock = c;
            clocks[i] = c;

            // deliveries first
            while let Some(&Reverse((due, id))) = procs[i].inbox.peek() {
                if due > c {
                    break;
                }
                procs[i].inbox.pop();
                let msg = in_flight[id].take().expect("each message delivered once");
                let p = &mut procs[i];
                p.vc = p.vc.receive(&msg.vc).expect("uniform dimension");
                p.hlc = p.hlc.receive(msg.hlc, PhysTime(c));
                if let Some(open) = p.open.as_mut() {
                    open.vc_end = p.vc.clone();
                    open.hlc_end = p.hlc;
                }
                messages.push(MessageRecord {
                    sender: msg.sender,
                    receiver: msg.receiver,
                    send_pt: PhysTime(msg.send_pt),
                    receive_pt: PhysTime(c),
                    vc_send: msg.vc,
                    hlc_send: msg.hlc,
                    vc_receive: p.vc.clone(),
                    hlc_receive: p.hlc,
                });
            }

            if let IntervalModel::Retriggered { len } = config.interval {
                let p = &mut procs[i];
                if config.correlation.decide(i, &truth, config.beta, &mut p.rng) {
                    retrigger(p, c, len);
                }
            } else if procs[i].open.is_none() {
                let p = &mut procs[i];
                if config.correlation.decide(i, &truth, config.beta, &mut p.rng) {
                    let len = sample_interval_length(&config.interval, &mut p.rng);
                    p.vc = p.vc.local_event();
                    p.hlc = p.hlc.local_or_send(PhysTime(c));
                    p.open = Some(Open {
                        start: c,
                        end: c + len - 1,
                        vc_start: p.vc.clone(),
                        vc_end: p.vc.clone(),
                        hlc_start: p.hlc,
                        hlc_end: p.hlc,
                    });
                }
            }
            truth[i] = procs[i].open.is_some();

            if config.alpha > 0.0 && procs[i].rng.random::<f64>() < config.alpha {
                let p = &mut procs[i];
                let mut receiver = p.rng.random_range(0..n - 1);
                if receiver >= i {
                    receiver += 1;
                }
                p.vc = p.vc.local_event();
                p.hlc = p.hlc.local_or_send(PhysTime(c));
                // a send on the last tick of an interval falls outside it
                if let Some(open) = p.open.as_mut() {
                    if c < open.end {
                        open.vc_end = p.vc.clone();
                        open.hlc_end = p.hlc;
                    }
                }
                let id = in_flight.len();
                in_flight.push(Some(InFlight { sender: i, receiver, send_pt: c, vc: p.vc.clone(), hlc: p.hlc }));
                procs[receiver].inbox.push(Reverse((c + config.delta, id)));
            }

            let p = &mut procs[i];
            if p.open.as_ref().is_some_and(|o| o.end == c) {
                let o = p.open.take().expect("checked above");
                p.intervals.push(PredicateInterval {
                    proc: i,
                    start: PhysTime(o.start),
                    end: PhysTime(o.end),
                    vc_start: o.vc_start,
                    vc_end: o.vc_end,
                    hlc_start: o.hlc_start,
                    hlc_end: o.hlc_end,
                });
            }
        }
        steps += 1;
        let lo = clocks.iter().copied().min().unwrap_or(0);
        let hi = clocks.iter().copied().max().unwrap_or(0);
        let spread = hi - lo;
        debug_assert!(spread <= config.epsilon_app);
        max_spread = max_spread.max(spread);
        observer.on_step(steps, &clocks);
    }

    Ok(Trace {
        config: config.clone(),
        final_clocks: clocks,
        intervals: procs.into_iter().map(|p| p.intervals).collect(),
        messages,
        max_spread,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simkernel::Correlation;

    fn small(n: usize, eps: u64) -> SimConfig {
        SimConfig {
            n,
            epsilon_app: eps,
            delta: 2,
            alpha: 0.2,
            beta: 0.2,
            interval: IntervalModel::Point,
            horizon: 300,
            correlation: Correlation::Independent,
            seed: 7,
            advance_prob: 0.5,
        }
    }

    #[test]
    fn schedule_all_equal_all_advance() {
        let mut rng = stream(1, 0);
        assert_eq!(step_schedule(&[4, 4, 4], 3, 1.0, &mut rng), vec![0, 1, 2]);
        assert_eq!(step_schedule(&[4, 4, 4], 0, 1.0, &mut rng), vec![0, 1, 2]);
    }

    #[test]
    fn schedule_blocks_cap_unless_min_lifts() {
        let mut rng = stream(2, 0);
        // min processes 0 and 2, process 1 at the cap
        for _ in 0..500 {
            let picked = step_schedule(&[10, 13, 10], 3, 0.5, &mut rng);
            if picked.contains(&1) {
                assert!(picked.contains(&0) && picked.contains(&2));
            }
            assert!(!picked.is_empty());
        }
    }

    #[test]
    fn schedule_progress_fallback() {
        // advance_prob so small nothing gets picked: lowest-index min process moves
        let mut rng = stream(3, 0);
        let picked = step_schedule(&[5, 3, 3, 6], 3, 1e-12, &mut rng);
        assert_eq!(picked, vec![1]);
        let picked = step_schedule(&[3, 3, 3], 0, 1e-12, &mut rng);
        assert_eq!(picked, vec![0, 1, 2]);
    }

    #[test]
    fn beta_one_truthifies_every_tick() {
        let cfg = SimConfig { n: 2, beta: 1.0, alpha: 0.0, horizon: 5, epsilon_app: 2, ..small(2, 2) };
        let t = generate(&cfg).unwrap();
        for (p, ivs) in t.intervals.iter().enumerate() {
            let ticks: Vec<u64> = ivs.iter().map(|iv| iv.start.0).collect();
            let expect: Vec<u64> = (1..=t.final_clocks[p]).collect();
            assert_eq!(ticks, expect);
            assert!(ivs.iter().all(|iv| iv.start == iv.end));
        }
    }

    #[test]
    fn alpha_zero_sends_nothing() {
        let t = generate(&SimConfig { alpha: 0.0, ..small(3, 4) }).unwrap();
        assert!(t.messages.is_empty());
    }

    #[test]
    fn spread_bounded_every_step() {
        for eps in [0, 1, 2, 5] {
            let cfg = SimConfig { n: 3, ..small(3, eps) };
            let mut worst = 0;
            let t = generate_observed(&cfg, &mut |_: u64, clocks: &[u64]| {
                let spread = clocks.iter().max().unwrap() - clocks.iter().min().unwrap();
                worst = worst.max(spread);
            })
            .unwrap();
            assert!(worst <= eps, "eps {eps}: spread {worst}");
            assert_eq!(t.max_spread, worst);
            assert!(t.final_clocks.iter().all(|&c| c >= cfg.horizon));
        }
    }

    #[test]
    fn deliveries_respect_delay() {
        let t = generate(&small(4, 5)).unwrap();
        assert!(!t.messages.is_empty());
        for m in &t.messages {
            assert!(m.receive_pt.0 >= m.send_pt.0 + t.config.delta);
            assert!(m.vc_send.happened_before(&m.vc_receive));
            assert!(m.hlc_send < m.hlc_receive);
        }
        // delay >= eps means the receiver can never be ahead of the due time
        let t = generate(&SimConfig { delta: 6, ..small(4, 5) }).unwrap();
        assert!(t.messages.iter().all(|m| m.receive_pt.0 == m.send_pt.0 + 6));
    }

    #[test]
    fn deterministic_under_seed() {
        let cfg = SimConfig { interval: IntervalModel::GeometricLength { p: 0.3 }, ..small(4, 3) };
        assert_eq!(generate(&cfg).unwrap(), generate(&cfg).unwrap());
        let other = generate(&SimConfig { seed: 8, ..cfg.clone() }).unwrap();
        assert_ne!(generate(&cfg).unwrap().intervals, other.intervals);
    }

    #[test]
    fn intervals_disjoint_and_ordered() {
        let cfg = SimConfig { beta: 0.5, interval: IntervalModel::GeometricLength { p: 0.3 }, ..small(3, 3) };
        let t = generate(&cfg).unwrap();
        for ivs in &t.intervals {
            for w in ivs.windows(2) {
                assert!(w[0].end < w[1].start);
            }
            assert!(ivs.iter().all(|iv| iv.start <= iv.end));
        }
    }

    #[test]
    fn retriggered_intervals_merge() {
        let cfg =
            SimConfig { beta: 0.3, interval: IntervalModel::Retriggered { len: 4 }, horizon: 20_000, ..small(2, 3) };
        let t = generate(&cfg).unwrap();
        for ivs in &t.intervals {
            for w in ivs.windows(2) {
                assert!(w[0].end.0 + 1 < w[1].start.0);
            }
            assert!(ivs.iter().all(|iv| iv.end.0 - iv.start.0 + 1 >= 4));
            // a tick is true iff one of the last 4 ticks truthified
            let covered: u64 = ivs.iter().map(|iv| iv.end.0 - iv.start.0 + 1).sum();
            let share = covered as f64 / cfg.horizon as f64;
            assert!((share - (1.0 - 0.7f64.powi(4))).abs() < 0.02, "{share}");
        }
    }

    #[test]
    fn point_mode_has_point_intervals() {
        let t = generate(&small(3, 3)).unwrap();
        assert!(t.interval_count() > 0);
        assert!(t.intervals.iter().flatten().all(|iv| iv.start == iv.end && iv.vc_start == iv.vc_end));
    }

    #[test]
    fn geometric_length_mean() {
        let mut rng = stream(11, 0);
        let model = IntervalModel::GeometricLength { p: 0.3 };
        let draws = 200_000;
        let total: u64 = (0..draws).map(|_| sample_interval_length(&model, &mut rng)).sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 1.0 / 0.3).abs() < 0.02 / 0.3, "mean {mean}");
    }

    #[test]
    fn truthification_rate_tracks_free_ticks() {
        let cfg = SimConfig {
            n: 2,
            beta: 0.1,
            alpha: 0.0,
            interval: IntervalModel::FixedLength { len: 4 },
            horizon: 200_000,
            ..small(2, 2)
        };
        let t = generate(&cfg).unwrap();
        for (p, ivs) in t.intervals.iter().enumerate() {
            let busy: u64 = ivs.iter().map(|iv| iv.end.0 - iv.start.0 + 1).sum();
            let free = t.final_clocks[p] - busy + ivs.len() as u64;
            let rate = ivs.len() as f64 / free as f64;
            assert!((rate - 0.1).abs() < 0.002, "rate {rate}");
        }
    }

    #[test]
    fn min_clock_keeps_moving() {
        // statistical check: the minimum advances at least every n/advance_prob steps on average
        for seed in 0..5 {
            let cfg = SimConfig { seed, advance_prob: 0.3, horizon: 2_000, ..small(5, 4) };
            let t = generate(&cfg).unwrap();
            let bound = cfg.horizon as f64 * cfg.n as f64 / cfg.advance_prob;
            assert!((t.steps as f64) < bound, "steps {}", t.steps);
        }
    }
}
