use web_time::Instant;

use super::{Horizon, Recorder, RunConfig, Scheme, Trace, TraceRecord, TraceSummary};
use crate::error::{check_dim, Error, Result};
use crate::metrics;
use crate::objective::ObjectiveSpec;
use crate::positions::Positions;
use crate::rng::{exponential, seeded, SimRng};

/// State of the synchronized baseline.
#[derive(Debug, Clone)]
pub struct CentralState {
    position: Vec<f64>,
    virtual_clock: f64,
    update_count: u64,
    samples_drawn: u64,
}

impl CentralState {
    pub fn position(&self) -> &[f64] {
        &self.position
    }

    pub fn virtual_clock(&self) -> f64 {
        self.virtual_clock
    }

    pub fn update_count(&self) -> u64 {
        self.update_count
    }

    pub fn samples_drawn(&self) -> u64 {
        self.samples_drawn
    }
}

/// Batch SGD: every step waits for `N` parallel samples and moves along
/// their average.
pub struct CentralSimulator<'a> {
    config: RunConfig,
    spec: &'a ObjectiveSpec,
    rng: SimRng,
    state: CentralState,
    sample: Vec<f64>,
    avg: Vec<f64>,
    next_duration: f64,
}

impl<'a> CentralSimulator<'a> {
    pub fn new(config: &RunConfig, spec: &'a ObjectiveSpec, init: &[f64]) -> Result<Self> {
        config.validate()?;
        if config.scheme != Scheme::Centralized {
            return Err(Error::param("scheme", "expected centralized"));
        }
        check_dim(spec.dim(), init.len())?;
        let m = spec.dim();
        Ok(CentralSimulator {
            config: config.clone(),
            spec,
            rng: seeded(config.seed),
            state: CentralState {
                position: init.to_vec(),
                virtual_clock: 0.0,
                update_count: 0,
                samples_drawn: 0,
            },
            sample: vec![0.0; m],
            avg: vec![0.0; m],
            next_duration: f64::NAN,
        })
    }

    pub fn state(&self) -> &CentralState {
        &self.state
    }

    /// Draws the next batch and applies `x <- x - gamma * mean(g)`. The clock
    /// advances by the slowest of the `N` sampling times.
    pub fn step(&mut self) {
        let n = self.config.n_threads;
        let st = &mut self.state;
        self.avg.iter_mut().for_each(|v| *v = 0.0);
        let mut duration = 0.0f64;
        for _ in 0..n {
            self.spec
                .sample_into(&st.position, &mut self.sample, &mut self.rng);
            duration = duration.max(exponential(&mut self.rng, self.config.mean_sample_time));
            self.avg
                .iter_mut()
                .zip(&self.sample)
                .for_each(|(a, g)| *a += g);
        }
        let scale = self.config.step_size / n as f64;
        for (x, a) in st.position.iter_mut().zip(&self.avg) {
            *x -= scale * a;
        }
        st.virtual_clock += duration;
        st.update_count += 1;
        st.samples_drawn += n as u64;
        self.next_duration = duration;
    }

    /// Duration of the most recent step.
    pub fn last_step_duration(&self) -> f64 {
        self.next_duration
    }
}

pub fn run_centralized(config: &RunConfig, spec: &ObjectiveSpec, init: &[f64]) -> Result<Trace> {
    run_centralized_observed(config, spec, init, |_, _| {})
}

/// Like [`run_centralized`], calling `observer` on the initial state and after
/// every step.
///
/// With a virtual-time horizon the step that would end past the horizon is
/// still drawn (its duration is only known once sampled) but not recorded.
pub fn run_centralized_observed<F>(
    config: &RunConfig,
    spec: &ObjectiveSpec,
    init: &[f64],
    mut observer: F,
) -> Result<Trace>
where
    F: FnMut(&CentralState, Option<&TraceRecord>),
{
    let started = Instant::now();
    let mut sim = CentralSimulator::new(config, spec, init)?;
    let x_star = spec.optimum();
    let x_star = x_star.as_deref();
    let mut recorder = Recorder::new(config);

    let mut pending: Option<CentralState> = None;
    loop {
        let st = sim.state().clone();
        let k = st.update_count();
        let snap = metrics::snapshot(&Positions::filled(1, st.position()), spec, x_star)?;
        let wanted = recorder.wants(
            k,
            st.virtual_clock(),
            TraceRecord::new(k, 0.0, &snap).error(),
        );
        let stop = config.stop_at_threshold && recorder.hit.is_some();
        let last = stop
            || match config.horizon {
                Horizon::MaxUpdates(max) => k >= max,
                Horizon::MaxVirtualTime(_) => false,
            };
        if wanted || (last && recorder.last_k() != Some(k)) {
            let rec = TraceRecord::new(k, st.virtual_clock(), &snap);
            recorder.records.push(rec);
            observer(&st, Some(&rec));
        } else {
            observer(&st, None);
        }
        if last {
            break;
        }
        sim.step();
        if let Horizon::MaxVirtualTime(t) = config.horizon {
            if sim.state().virtual_clock() > t {
                pending = Some(st);
                break;
            }
        }
    }

    // Virtual-time horizon: the final state is the last one inside the
    // horizon.
    let (updates, virtual_time, samples) = match &pending {
        Some(st) => {
            if recorder.last_k() != Some(st.update_count()) {
                let snap = metrics::snapshot(&Positions::filled(1, st.position()), spec, x_star)?;
                recorder.records.push(TraceRecord::new(
                    st.update_count(),
                    st.virtual_clock(),
                    &snap,
                ));
            }
            (st.update_count(), st.virtual_clock(), st.samples_drawn())
        }
        None => {
            let st = sim.state();
            (st.update_count(), st.virtual_clock(), st.samples_drawn())
        }
    };

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
            updates,
            samples,
            virtual_time,
            seed: config.seed,
            scheme: config.scheme,
            wall_time: started.elapsed(),
        },
        records: recorder.records,
    })
}
