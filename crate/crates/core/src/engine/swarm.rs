use web_time::Instant;

use rand::Rng;

use super::{EventQueue, Horizon, Recorder, RunConfig, Scheme, Trace, TraceRecord, TraceSummary};
use crate::error::{check_dim, Error, Result};
use crate::metrics;
use crate::objective::ObjectiveSpec;
use crate::positions::Positions;
use crate::rng::{exponential, seeded, SimRng};
use crate::topology::Graph;

/// `delta = gamma * (-g - a * sum_{j ~ i} (x_i - x_j))`, the increment thread
/// `i` applies after drawing gradient sample `g`. Neighbour positions are read
/// as they are at the update instant.
pub fn swarm_increment(
    graph: &Graph,
    positions: &Positions,
    i: usize,
    g: &[f64],
    step_size: f64,
    attraction: f64,
    delta: &mut [f64],
) {
    let xi = positions.row(i);
    let deg = graph.degree(i) as f64;
    for (d, (&gc, &xc)) in delta.iter_mut().zip(g.iter().zip(xi)) {
        *d = -gc - attraction * deg * xc;
    }
    if attraction != 0.0 {
        for &j in graph.neighbors(i) {
            for (d, &xj) in delta.iter_mut().zip(positions.row(j)) {
                *d += attraction * xj;
            }
        }
    }
    delta.iter_mut().for_each(|d| *d *= step_size);
}

/// Mutable state of a swarm run.
#[derive(Debug, Clone)]
pub struct SwarmState {
    positions: Positions,
    virtual_clock: f64,
    per_thread_update_counts: Vec<u64>,
    /// Pending events (event-driven mode only).
    event_queue: Option<EventQueue>,
    /// Time of the next merged tick (global-tick mode only).
    next_tick: f64,
    global_update_count: u64,
    samples_drawn: u64,
    last_updater: Option<usize>,
    sum: Vec<f64>,
}

impl SwarmState {
    pub fn positions(&self) -> &Positions {
        &self.positions
    }

    pub fn virtual_clock(&self) -> f64 {
        self.virtual_clock
    }

    pub fn per_thread_update_counts(&self) -> &[u64] {
        &self.per_thread_update_counts
    }

    pub fn event_queue(&self) -> Option<&EventQueue> {
        self.event_queue.as_ref()
    }

    pub fn global_update_count(&self) -> u64 {
        self.global_update_count
    }

    pub fn samples_drawn(&self) -> u64 {
        self.samples_drawn
    }

    /// Thread that performed the latest update.
    pub fn last_updater(&self) -> Option<usize> {
        self.last_updater
    }

    /// Incrementally maintained `x_bar`.
    pub fn mean(&self) -> Vec<f64> {
        let inv = 1.0 / self.positions.n() as f64;
        self.sum.iter().map(|s| s * inv).collect()
    }

    /// Time of the next update that would be applied.
    pub fn next_update_time(&self) -> f64 {
        match &self.event_queue {
            Some(q) => q.peek().map_or(f64::INFINITY, |e| e.time),
            None => self.next_tick,
        }
    }
}

/// Step-by-step swarm simulator.
pub struct SwarmSimulator<'a> {
    config: RunConfig,
    graph: &'a Graph,
    spec: &'a ObjectiveSpec,
    rng: SimRng,
    state: SwarmState,
    sample: Vec<f64>,
    delta: Vec<f64>,
}

impl<'a> SwarmSimulator<'a> {
    pub fn new(
        config: &RunConfig,
        graph: &'a Graph,
        spec: &'a ObjectiveSpec,
        init: Positions,
    ) -> Result<Self> {
        config.validate()?;
        if !config.scheme.is_swarm() {
            return Err(Error::param(
                "scheme",
                "swarm simulator needs a swarm scheme",
            ));
        }
        check_dim(config.n_threads, graph.n_vertices())?;
        check_dim(config.n_threads, init.n())?;
        check_dim(spec.dim(), init.dim())?;

        let n = config.n_threads;
        let mut rng = seeded(config.seed);
        let (event_queue, next_tick) = match config.scheme {
            Scheme::SwarmEventDriven => {
                let mut q = EventQueue::new();
                for i in 0..n {
                    q.push(exponential(&mut rng, config.mean_sample_time), i);
                }
                (Some(q), f64::NAN)
            }
            _ => (
                None,
                exponential(&mut rng, config.mean_sample_time / n as f64),
            ),
        };
        let m = spec.dim();
        let mut sum = vec![0.0; m];
        for row in init.rows() {
            sum.iter_mut().zip(row).for_each(|(s, v)| *s += v);
        }
        Ok(SwarmSimulator {
            config: config.clone(),
            graph,
            spec,
            rng,
            state: SwarmState {
                positions: init,
                virtual_clock: 0.0,
                per_thread_update_counts: vec![0; n],
                event_queue,
                next_tick,
                global_update_count: 0,
                samples_drawn: 0,
                last_updater: None,
                sum,
            },
            sample: vec![0.0; m],
            delta: vec![0.0; m],
        })
    }

    pub fn state(&self) -> &SwarmState {
        &self.state
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    /// Applies the next global update.
    pub fn step(&mut self) -> Result<()> {
        let n = self.config.n_threads;
        let mean_time = self.config.mean_sample_time;
        let st = &mut self.state;
        let thread = match st.event_queue.as_mut() {
            Some(queue) => {
                let event = queue
                    .next_event()
                    .ok_or(Error::Internal("event queue is empty"))?;
                if event.time < st.virtual_clock {
                    return Err(Error::Internal("event scheduled in the past"));
                }
                st.virtual_clock = event.time;
                event.thread
            }
            None => {
                st.virtual_clock = st.next_tick;
                self.rng.random_range(0..n)
            }
        };

        self.spec
            .sample_into(st.positions.row(thread), &mut self.sample, &mut self.rng);
        match st.event_queue.as_mut() {
            // The sample's generation time is the gap until this thread's
            // next update: threads sample back to back.
            Some(queue) => queue.push(
                st.virtual_clock + exponential(&mut self.rng, mean_time),
                thread,
            ),
            None => {
                st.next_tick = st.virtual_clock + exponential(&mut self.rng, mean_time / n as f64)
            }
        }

        swarm_increment(
            self.graph,
            &st.positions,
            thread,
            &self.sample,
            self.config.step_size,
            self.config.attraction,
            &mut self.delta,
        );
        for ((x, s), d) in st
            .positions
            .row_mut(thread)
            .iter_mut()
            .zip(st.sum.iter_mut())
            .zip(&self.delta)
        {
            *x += d;
            *s += d;
        }
        st.per_thread_update_counts[thread] += 1;
        st.global_update_count += 1;
        st.samples_drawn += 1;
        st.last_updater = Some(thread);
        Ok(())
    }

    fn horizon_reached(&self) -> bool {
        match self.config.horizon {
            Horizon::MaxUpdates(k) => self.state.global_update_count >= k,
            Horizon::MaxVirtualTime(t) => self.state.next_update_time() > t,
        }
    }
}

fn crossing_error(spec: &ObjectiveSpec, x_star: Option<&[f64]>, mean: &[f64]) -> f64 {
    match x_star {
        Some(xs) => mean.iter().zip(xs).map(|(a, b)| (a - b) * (a - b)).sum(),
        None => spec.grad_norm_sq(mean).unwrap_or(f64::INFINITY),
    }
}

/// Event-driven swarm run.
pub fn run_swarm(
    config: &RunConfig,
    graph: &Graph,
    spec: &ObjectiveSpec,
    init: Positions,
) -> Result<Trace> {
    if config.scheme != Scheme::SwarmEventDriven {
        return Err(Error::param("scheme", "expected swarm_event_driven"));
    }
    run_swarm_observed(config, graph, spec, init, |_, _| {})
}

/// Global-tick swarm run: equal in distribution to [`run_swarm`] by
/// memorylessness of the sampling times.
pub fn run_swarm_global_tick(
    config: &RunConfig,
    graph: &Graph,
    spec: &ObjectiveSpec,
    init: Positions,
) -> Result<Trace> {
    if config.scheme != Scheme::SwarmGlobalTick {
        return Err(Error::param("scheme", "expected swarm_global_tick"));
    }
    run_swarm_observed(config, graph, spec, init, |_, _| {})
}

/// Runs either swarm scheme. `observer` sees the initial state and the state
/// after every update, with the trace record when that state was recorded.
pub fn run_swarm_observed<F>(
    config: &RunConfig,
    graph: &Graph,
    spec: &ObjectiveSpec,
    init: Positions,
    mut observer: F,
) -> Result<Trace>
where
    F: FnMut(&SwarmState, Option<&TraceRecord>),
{
    let started = Instant::now();
    let mut sim = SwarmSimulator::new(config, graph, spec, init)?;
    let x_star = spec.optimum();
    let x_star = x_star.as_deref();
    let mut recorder = Recorder::new(config);

    let record = |state: &SwarmState| -> Result<TraceRecord> {
        let snap = metrics::snapshot(state.positions(), spec, x_star)?;
        Ok(TraceRecord::new(
            state.global_update_count(),
            state.virtual_clock(),
            &snap,
        ))
    };

    loop {
        let st = sim.state();
        let k = st.global_update_count();
        let error = crossing_error(spec, x_star, &st.mean());
        let wanted = recorder.wants(k, st.virtual_clock(), error);
        let last = (config.stop_at_threshold && recorder.hit.is_some()) || sim.horizon_reached();
        if wanted || (last && recorder.last_k() != Some(k)) {
            let rec = record(st)?;
            recorder.records.push(rec);
            observer(st, Some(&rec));
        } else {
            observer(st, None);
        }
        if last {
            break;
        }
        sim.step()?;
    }

    let st = sim.state();
    let fin = *recorder
        .records
        .last()
        .expect("initial state is always recorded");
    Ok(Trace {
        summary: TraceSummary {
            t_hit: recorder.hit.map(|h| h.1),
            k_hit: recorder.hit.map(|h| h.0),
            threshold: config.threshold,
            final_u: fin.u,
            final_vbar: fin.vbar,
            final_f_gap: fin.f_gap,
            final_grad_norm_sq: fin.grad_norm_sq,
            updates: st.global_update_count(),
            samples: st.samples_drawn(),
            virtual_time: st.virtual_clock(),
            seed: config.seed,
            scheme: config.scheme,
            wall_time: started.elapsed(),
        },
        records: recorder.records,
    })
}
