//! Exact continuous-time, event-driven simulation of the generalized
//! activated random walk.
//!
//! Each particle owns a lazily sampled putative path and traverses it at a
//! rate set by the interaction rule; the rule only time-changes the path,
//! never resamples it. While active and alone, a particle falls asleep at
//! the first point of its rate-λ Poisson clock; sleep attempts at shared
//! vertices are no-ops. A sleeping particle wakes the instant another
//! particle arrives.
//!
//! Rate changes reschedule the pending jump by consuming the elapsed inner
//! holding time and stretching the remainder at the new rate, which is
//! exact for exponential holds under piecewise-constant rates. Events are
//! ordered by (time, particle, kind) with lazy invalidation via per-particle
//! generation counters, so runs are reproducible event for event.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use thiserror::Error;

use crate::graph::{FiniteGraph, GraphError, VertexId};
use crate::paths::{sample_exp, PathDistribution, PathError, PutativePath};
use crate::seed::SeedStream;

/// Hard cap on interaction-rule rates.
pub const RATE_CAP: f64 = 1e6;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct ParticleId(pub u32);

impl ParticleId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for ParticleId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Active,
    Sleeping,
    Exited,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid initial law: {0}")]
    InvalidLaw(String),
    #[error("invalid interaction rule: {0}")]
    InvalidRule(String),
    #[error("interaction rule returned invalid rate {rate} (allowed range [0, {max}])")]
    InvalidRate { rate: f64, max: f64 },
    #[error("negative rate {0} passed to rate_change_resample")]
    NegativeRate(f64),
    #[error("particle {0} is not active")]
    NotActive(ParticleId),
    #[error("unknown particle id {0}")]
    UnknownParticle(ParticleId),
    #[error("unrecognized stop rule `{0}` (expected time:T, absorbed or events:M)")]
    ParseStop(String),
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

/// Distribution of the initial particle count per vertex.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialLaw {
    Poisson { mean: f64 },
    Bernoulli { p: f64 },
    Deterministic { count: u32 },
}

impl InitialLaw {
    pub fn validate(&self) -> Result<(), EngineError> {
        match *self {
            InitialLaw::Poisson { mean } if !(mean.is_finite() && mean > 0.0) => {
                Err(EngineError::InvalidLaw(format!("poisson mean must be positive, got {mean}")))
            }
            InitialLaw::Bernoulli { p } if !(p.is_finite() && p > 0.0 && p <= 1.0) => {
                Err(EngineError::InvalidLaw(format!("bernoulli p must be in (0,1], got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            InitialLaw::Poisson { mean } => mean,
            InitialLaw::Bernoulli { p } => p,
            InitialLaw::Deterministic { count } => count as f64,
        }
    }

    fn sample(&self, rng: &mut ChaCha8Rng) -> u32 {
        match *self {
            InitialLaw::Poisson { mean } => {
                let d = Poisson::new(mean).expect("validated mean");
                let x: f64 = d.sample(rng);
                x as u32
            }
            InitialLaw::Bernoulli { p } => u32::from(rng.random_bool(p)),
            InitialLaw::Deterministic { count } => count,
        }
    }
}

impl fmt::Display for InitialLaw {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InitialLaw::Poisson { mean } => write!(f, "poisson:{mean}"),
            InitialLaw::Bernoulli { p } => write!(f, "bern:{p}"),
            InitialLaw::Deterministic { count } => write!(f, "det:{count}"),
        }
    }
}

impl FromStr for InitialLaw {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, EngineError> {
        let err = || EngineError::InvalidLaw(format!("unrecognized law `{s}` (expected poisson:z, bern:p or det:k)"));
        let law = if let Some(z) = s.strip_prefix("poisson:") {
            InitialLaw::Poisson { mean: z.parse().map_err(|_| err())? }
        } else if let Some(p) = s.strip_prefix("bern:") {
            InitialLaw::Bernoulli { p: p.parse().map_err(|_| err())? }
        } else if let Some(k) = s.strip_prefix("det:") {
            InitialLaw::Deterministic { count: k.parse().map_err(|_| err())? }
        } else {
            return Err(err());
        };
        law.validate()?;
        Ok(law)
    }
}

/// Automorphism-invariant view of the configuration within the rule's
/// locality radius: one entry per vertex of the ball, carrying only its
/// distance from the particle and its occupancy. The subject particle is
/// included in the distance-0 active count. Entries are sorted by
/// (distance, active, sleeping), so the rule cannot distinguish
/// configurations that differ by a root-fixing automorphism.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub struct SiteView {
    pub distance: u32,
    pub active: u32,
    pub sleeping: bool,
}

#[derive(Clone, Debug)]
pub struct LocalView<'a> {
    sites: &'a [SiteView],
}

impl<'a> LocalView<'a> {
    pub fn sites(&self) -> &[SiteView] {
        self.sites
    }

    /// Total active particles at the given distance (subject included at 0).
    pub fn active_at_distance(&self, d: u32) -> u32 {
        self.sites.iter().filter(|s| s.distance == d).map(|s| s.active).sum()
    }

    pub fn sleepers_at_distance(&self, d: u32) -> u32 {
        self.sites.iter().filter(|s| s.distance == d && s.sleeping).count() as u32
    }
}

type RateFn = Arc<dyn Fn(&LocalView<'_>, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
enum RuleKind {
    ConstantRate(f64),
    Custom(RateFn),
}

impl fmt::Debug for RuleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RuleKind::ConstantRate(c) => write!(f, "ConstantRate({c})"),
            RuleKind::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Local interaction rule: progression rate as a function of the local
/// configuration and the particle's U[0,1] mark, plus the sleep rate λ.
#[derive(Clone, Debug)]
pub struct InteractionRule {
    locality_radius: u32,
    sleep_rate: f64,
    r_max: f64,
    kind: RuleKind,
}

impl InteractionRule {
    /// The classical model: unit progression rate, sleep at rate λ.
    pub fn standard_arw(sleep_rate: f64) -> Self {
        Self {
            locality_radius: 0,
            sleep_rate,
            r_max: 1.0,
            kind: RuleKind::ConstantRate(1.0),
        }
    }

    /// Constant progression rate (still radius 0).
    pub fn constant_rate(sleep_rate: f64, rate: f64) -> Result<Self, EngineError> {
        let rule = Self {
            locality_radius: 0,
            sleep_rate,
            r_max: rate.max(1.0),
            kind: RuleKind::ConstantRate(rate),
        };
        rule.validate()?;
        Ok(rule)
    }

    /// Arbitrary local rule. The engine hands `rate_fn` only the restricted
    /// view within `locality_radius`, which enforces locality by construction.
    pub fn custom(
        locality_radius: u32,
        sleep_rate: f64,
        r_max: f64,
        rate_fn: impl Fn(&LocalView<'_>, f64) -> f64 + Send + Sync + 'static,
    ) -> Result<Self, EngineError> {
        let rule = Self {
            locality_radius,
            sleep_rate,
            r_max,
            kind: RuleKind::Custom(Arc::new(rate_fn)),
        };
        rule.validate()?;
        Ok(rule)
    }

    fn validate(&self) -> Result<(), EngineError> {
        if !(self.sleep_rate.is_finite() && self.sleep_rate >= 0.0) {
            return Err(EngineError::InvalidRule(format!(
                "sleep rate must be finite and nonnegative, got {}",
                self.sleep_rate
            )));
        }
        if !(self.r_max.is_finite() && self.r_max > 0.0 && self.r_max <= RATE_CAP) {
            return Err(EngineError::InvalidRule(format!(
                "r_max must lie in (0, {RATE_CAP}], got {}",
                self.r_max
            )));
        }
        if let RuleKind::ConstantRate(c) = self.kind {
            if !(c.is_finite() && c >= 0.0 && c <= self.r_max) {
                return Err(EngineError::InvalidRule(format!("constant rate {c} outside [0, r_max]")));
            }
        }
        Ok(())
    }

    pub fn locality_radius(&self) -> u32 {
        self.locality_radius
    }

    pub fn sleep_rate(&self) -> f64 {
        self.sleep_rate
    }

    pub fn r_max(&self) -> f64 {
        self.r_max
    }

    fn constant(&self) -> Option<f64> {
        match self.kind {
            RuleKind::ConstantRate(c) => Some(c),
            RuleKind::Custom(_) => None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum EventKind {
    Jump,
    SleepAttempt,
}

#[derive(Clone, Copy, Debug)]
struct QueuedEvent {
    time: f64,
    particle: ParticleId,
    kind: EventKind,
    gen: u32,
}

impl PartialEq for QueuedEvent {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueuedEvent {}

impl Ord for QueuedEvent {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time
            .total_cmp(&other.time)
            .then(self.particle.cmp(&other.particle))
            .then(self.kind.cmp(&other.kind))
            .then(self.gen.cmp(&other.gen))
    }
}

impl PartialOrd for QueuedEvent {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// What an executed event did.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum EventEffect {
    Moved { from: VertexId, to: VertexId, woke: Option<ParticleId> },
    ExitedAtSink { from: VertexId, sink: VertexId },
    FellAsleep,
    /// Sleep attempt at a shared vertex: no-op, the clock keeps ticking.
    SleepBlocked,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExecutedEvent {
    pub time: f64,
    pub particle: ParticleId,
    pub kind: EventKind,
    pub effect: EventEffect,
}

#[derive(Clone, Debug)]
struct Particle {
    origin: (VertexId, u32),
    position: VertexId,
    mode: Mode,
    path: PutativePath,
    /// Index into the path of the step the particle currently occupies.
    cursor: usize,
    /// Inner holding time left at the current step, measured at `rate_since`.
    remaining_inner: f64,
    rate: f64,
    rate_since: f64,
    mark: f64,
    jumps: u64,
    last_jump_time: Option<f64>,
    jump_gen: u32,
    sleep_gen: u32,
}

#[derive(Clone, Debug, Default)]
struct Site {
    active: Vec<ParticleId>,
    sleeper: Option<ParticleId>,
}

impl Site {
    fn remove_active(&mut self, pid: ParticleId) {
        let pos = self.active.iter().position(|&q| q == pid).expect("particle listed at its site");
        self.active.swap_remove(pos);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StopRule {
    Time(f64),
    Absorbed,
    MaxEvents(u64),
}

impl FromStr for StopRule {
    type Err = EngineError;

    fn from_str(s: &str) -> Result<Self, EngineError> {
        if s == "absorbed" {
            return Ok(StopRule::Absorbed);
        }
        if let Some(t) = s.strip_prefix("time:") {
            if let Ok(t) = t.parse::<f64>() {
                if t.is_finite() && t >= 0.0 {
                    return Ok(StopRule::Time(t));
                }
            }
        }
        if let Some(m) = s.strip_prefix("events:") {
            if let Ok(m) = m.parse::<u64>() {
                return Ok(StopRule::MaxEvents(m));
            }
        }
        Err(EngineError::ParseStop(s.to_string()))
    }
}

impl fmt::Display for StopRule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StopRule::Time(t) => write!(f, "time:{t}"),
            StopRule::Absorbed => write!(f, "absorbed"),
            StopRule::MaxEvents(m) => write!(f, "events:{m}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Absorbed,
    TimeLimit,
    EventBudget,
    /// No pending events although active particles remain (rate-0 rule with λ = 0).
    Stalled,
}

impl fmt::Display for StopReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            StopReason::Absorbed => "absorbed",
            StopReason::TimeLimit => "time_limit",
            StopReason::EventBudget => "event_budget",
            StopReason::Stalled => "stalled",
        };
        write!(f, "{s}")
    }
}

/// Per-particle summary in a run report.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParticleRecord {
    pub origin: (VertexId, u32),
    pub position: VertexId,
    pub mode: Mode,
    pub jumps: u64,
}

/// Outcome of one simulation run.
#[derive(Clone, Debug)]
pub struct RunReport {
    pub stop_reason: StopReason,
    pub absorbed: bool,
    pub final_time: f64,
    pub absorption_time: Option<f64>,
    pub events: u64,
    pub particles_created: usize,
    pub particles_remaining: usize,
    pub sleeping: usize,
    /// Marked vacuous when the system started with zero particles.
    pub vacuous: bool,
    /// Per-vertex fixation time: `None` while an active particle occupies
    /// the vertex, otherwise the last time one did (0 if never).
    pub vertex_fixation_time: Vec<Option<f64>>,
    pub particle_records: Vec<ParticleRecord>,
    /// Per-vertex count of jump departures.
    pub odometer: Vec<u64>,
}

impl RunReport {
    pub fn max_odometer(&self) -> u64 {
        self.odometer.iter().copied().max().unwrap_or(0)
    }

    pub fn events_per_particle(&self) -> f64 {
        if self.particles_created == 0 {
            0.0
        } else {
            self.events as f64 / self.particles_created as f64
        }
    }
}

/// Full configuration of one run: graph, particles, occupancy, event queue,
/// clock, odometer and fixation statistics. Strictly single-threaded; clone
/// or move it across threads, never share it.
#[derive(Debug)]
pub struct SystemState {
    graph: Arc<FiniteGraph>,
    dist: PathDistribution,
    rule: InteractionRule,
    particles: Vec<Particle>,
    sites: Vec<Site>,
    queue: BinaryHeap<std::cmp::Reverse<QueuedEvent>>,
    now: f64,
    odometer: Vec<u64>,
    last_active_time: Vec<f64>,
    active_count: usize,
    remaining_count: usize,
    events_executed: u64,
    rng: ChaCha8Rng,
    view_buf: Vec<SiteView>,
}

/// Draw `N_v ~ law` i.i.d. per vertex and start every particle active, with
/// fresh jump and sleep clocks. Deterministic given the seed.
pub fn init_system(
    graph: Arc<FiniteGraph>,
    law: InitialLaw,
    dist: PathDistribution,
    rule: InteractionRule,
    seed: u64,
) -> Result<SystemState, EngineError> {
    SystemState::init_with_rng(graph, law, dist, rule, SeedStream::new(seed).rng())
}

impl SystemState {
    pub fn init_with_rng(
        graph: Arc<FiniteGraph>,
        law: InitialLaw,
        dist: PathDistribution,
        rule: InteractionRule,
        mut rng: ChaCha8Rng,
    ) -> Result<Self, EngineError> {
        law.validate()?;
        let placement_of = |rng: &mut ChaCha8Rng| -> Vec<u32> {
            graph.vertices().map(|_| law.sample(rng)).collect()
        };
        let counts = placement_of(&mut rng);
        Self::init_from_counts(graph, &counts, dist, rule, rng)
    }

    /// Place particles explicitly: `placement[i]` is the start vertex of the
    /// i-th particle. Origin indices number the particles at each vertex in
    /// placement order.
    pub fn init_with_placement(
        graph: Arc<FiniteGraph>,
        placement: &[VertexId],
        dist: PathDistribution,
        rule: InteractionRule,
        rng: ChaCha8Rng,
    ) -> Result<Self, EngineError> {
        let mut counts = vec![0u32; graph.vertex_count() as usize];
        for &v in placement {
            if v.0 >= graph.vertex_count() {
                return Err(GraphError::VertexOutOfRange { vertex: v.0, count: graph.vertex_count() }.into());
            }
            counts[v.idx()] += 1;
        }
        Self::init_from_counts(graph, &counts, dist, rule, rng)
    }

    fn init_from_counts(
        graph: Arc<FiniteGraph>,
        counts: &[u32],
        dist: PathDistribution,
        rule: InteractionRule,
        rng: ChaCha8Rng,
    ) -> Result<Self, EngineError> {
        dist.validate(&graph)?;
        rule.validate()?;
        let n_vertices = graph.vertex_count() as usize;
        let mut state = SystemState {
            graph,
            dist,
            rule,
            particles: Vec::new(),
            sites: vec![Site::default(); n_vertices],
            queue: BinaryHeap::new(),
            now: 0.0,
            odometer: vec![0; n_vertices],
            last_active_time: vec![0.0; n_vertices],
            active_count: 0,
            remaining_count: 0,
            events_executed: 0,
            rng,
            view_buf: Vec::new(),
        };

        for v in state.graph.vertices() {
            for i in 0..counts[v.idx()] {
                let pid = ParticleId(state.particles.len() as u32);
                let mark: f64 = state.rng.random();
                state.particles.push(Particle {
                    origin: (v, i),
                    position: v,
                    mode: Mode::Active,
                    path: PutativePath::new(v),
                    cursor: 0,
                    remaining_inner: 0.0,
                    rate: 0.0,
                    rate_since: 0.0,
                    mark,
                    jumps: 0,
                    last_jump_time: None,
                    jump_gen: 0,
                    sleep_gen: 0,
                });
                if state.graph.is_sink(v) {
                    // born outside the bulk: removed immediately
                    state.particles[pid.idx()].mode = Mode::Exited;
                } else {
                    state.sites[v.idx()].active.push(pid);
                    state.active_count += 1;
                    state.remaining_count += 1;
                }
            }
        }

        // All placements are in; now draw first holds and schedule clocks.
        for id in 0..state.particles.len() {
            let pid = ParticleId(id as u32);
            if state.particles[id].mode != Mode::Active {
                continue;
            }
            state.ensure_next_step(pid)?;
            let first_hold = state.particles[id].path.steps()[1].entry_inner_time;
            let p = &mut state.particles[id];
            p.remaining_inner = first_hold;
            p.rate_since = 0.0;
            let rate = state.eval_rate(pid)?;
            state.particles[id].rate = rate;
            state.push_jump(pid);
            state.push_sleep_attempt(pid);
        }
        Ok(state)
    }

    pub fn graph(&self) -> &Arc<FiniteGraph> {
        &self.graph
    }

    pub fn now(&self) -> f64 {
        self.now
    }

    pub fn events_executed(&self) -> u64 {
        self.events_executed
    }

    pub fn active_count(&self) -> usize {
        self.active_count
    }

    pub fn particles_created(&self) -> usize {
        self.particles.len()
    }

    pub fn particles_remaining(&self) -> usize {
        self.remaining_count
    }

    pub fn sleeping_count(&self) -> usize {
        self.remaining_count - self.active_count
    }

    /// True iff no particle is active; every remaining particle is then
    /// sleeping and alone on its vertex.
    pub fn is_absorbed(&self) -> bool {
        self.active_count == 0
    }

    /// (active count, sleeper present) at a vertex.
    pub fn occupancy(&self, v: VertexId) -> (u32, bool) {
        let site = &self.sites[v.idx()];
        (site.active.len() as u32, site.sleeper.is_some())
    }

    pub fn particle_mode(&self, pid: ParticleId) -> Mode {
        self.particles[pid.idx()].mode
    }

    pub fn particle_position(&self, pid: ParticleId) -> VertexId {
        self.particles[pid.idx()].position
    }

    pub fn particle_origin(&self, pid: ParticleId) -> (VertexId, u32) {
        self.particles[pid.idx()].origin
    }

    pub fn particle_jumps(&self, pid: ParticleId) -> u64 {
        self.particles[pid.idx()].jumps
    }

    pub fn particle_last_jump_time(&self, pid: ParticleId) -> Option<f64> {
        self.particles[pid.idx()].last_jump_time
    }

    pub fn particle_mark(&self, pid: ParticleId) -> f64 {
        self.particles[pid.idx()].mark
    }

    /// Particles are created in (vertex, index) order, so origins are sorted.
    pub fn particle_by_origin(&self, vertex: VertexId, index: u32) -> Option<ParticleId> {
        self.particles
            .binary_search_by_key(&(vertex, index), |p| p.origin)
            .ok()
            .map(|i| ParticleId(i as u32))
    }

    /// Extend a particle's putative path past inner time `t`.
    pub fn extend_path_inner_time(&mut self, pid: ParticleId, t: f64) -> Result<(), EngineError> {
        self.check_pid(pid)?;
        let Self { particles, rng, graph, dist, .. } = self;
        particles[pid.idx()].path.ensure_inner_time(t, dist, graph, rng)?;
        Ok(())
    }

    pub fn path_jumps_by_inner_time(&self, pid: ParticleId, t: f64) -> u32 {
        self.particles[pid.idx()].path.jumps_by_inner_time(t)
    }

    pub fn path_first_n_distinct(&mut self, pid: ParticleId, n: u32) -> Result<Vec<VertexId>, EngineError> {
        self.check_pid(pid)?;
        let Self { particles, rng, graph, dist, .. } = self;
        Ok(particles[pid.idx()].path.first_n_distinct(dist, graph, n, rng)?)
    }

    fn check_pid(&self, pid: ParticleId) -> Result<(), EngineError> {
        if pid.idx() < self.particles.len() {
            Ok(())
        } else {
            Err(EngineError::UnknownParticle(pid))
        }
    }

    fn ensure_next_step(&mut self, pid: ParticleId) -> Result<(), EngineError> {
        let Self { particles, rng, graph, dist, .. } = self;
        let p = &mut particles[pid.idx()];
        if p.cursor + 1 >= p.path.len() {
            let step = p.path.sample_next_step(dist, graph, rng)?;
            debug_assert!(step.is_some(), "next step requested at a sink");
        }
        Ok(())
    }

    fn push_jump(&mut self, pid: ParticleId) {
        let p = &self.particles[pid.idx()];
        debug_assert_eq!(p.mode, Mode::Active);
        if p.rate > 0.0 {
            let time = p.rate_since + p.remaining_inner / p.rate;
            self.queue.push(std::cmp::Reverse(QueuedEvent {
                time,
                particle: pid,
                kind: EventKind::Jump,
                gen: p.jump_gen,
            }));
        }
    }

    fn push_sleep_attempt(&mut self, pid: ParticleId) {
        let lambda = self.rule.sleep_rate();
        if lambda > 0.0 {
            let dt = sample_exp(lambda, &mut self.rng);
            let p = &self.particles[pid.idx()];
            debug_assert_eq!(p.mode, Mode::Active);
            self.queue.push(std::cmp::Reverse(QueuedEvent {
                time: self.now + dt,
                particle: pid,
                kind: EventKind::SleepAttempt,
                gen: p.sleep_gen,
            }));
        }
    }

    /// Evaluate the rule for a particle at its current position.
    fn eval_rate(&mut self, pid: ParticleId) -> Result<f64, EngineError> {
        if let Some(c) = self.rule.constant() {
            return Ok(c);
        }
        let p = &self.particles[pid.idx()];
        let ball = self.graph.ball(p.position, self.rule.locality_radius());
        self.view_buf.clear();
        for (v, d) in ball {
            let site = &self.sites[v.idx()];
            self.view_buf.push(SiteView {
                distance: d,
                active: site.active.len() as u32,
                sleeping: site.sleeper.is_some(),
            });
        }
        self.view_buf.sort_unstable();
        let view = LocalView { sites: &self.view_buf };
        let rate = match &self.rule.kind {
            RuleKind::Custom(f) => f(&view, p.mark),
            RuleKind::ConstantRate(c) => *c,
        };
        if !rate.is_finite() || rate < 0.0 || rate > self.rule.r_max() {
            return Err(EngineError::InvalidRate { rate, max: self.rule.r_max() });
        }
        Ok(rate)
    }

    /// Burn the inner time elapsed at the current rate into the stored
    /// remainder. Exact bookkeeping: randomness is never consumed here.
    fn consume_inner(&mut self, pid: ParticleId) {
        let now = self.now;
        let p = &mut self.particles[pid.idx()];
        p.remaining_inner = (p.remaining_inner - p.rate * (now - p.rate_since)).max(0.0);
        p.rate_since = now;
    }

    /// Reschedule a particle's pending jump for a new progression rate. The
    /// remaining inner holding time is preserved and stretched at the new
    /// rate (infinite when the rate is 0); the sleep clock is untouched.
    pub fn rate_change_resample(&mut self, pid: ParticleId, new_rate: f64) -> Result<(), EngineError> {
        self.check_pid(pid)?;
        if new_rate < 0.0 || !new_rate.is_finite() {
            return Err(EngineError::NegativeRate(new_rate));
        }
        if new_rate > self.rule.r_max() {
            return Err(EngineError::InvalidRate { rate: new_rate, max: self.rule.r_max() });
        }
        if self.particles[pid.idx()].mode != Mode::Active {
            return Err(EngineError::NotActive(pid));
        }
        self.consume_inner(pid);
        let p = &mut self.particles[pid.idx()];
        p.rate = new_rate;
        p.jump_gen += 1;
        self.push_jump(pid);
        Ok(())
    }

    /// Pop stale events until the head of the queue is valid.
    fn peek_valid(&mut self) -> Option<QueuedEvent> {
        while let Some(std::cmp::Reverse(ev)) = self.queue.peek().copied() {
            let p = &self.particles[ev.particle.idx()];
            let valid = p.mode == Mode::Active
                && match ev.kind {
                    EventKind::Jump => ev.gen == p.jump_gen,
                    EventKind::SleepAttempt => ev.gen == p.sleep_gen,
                };
            if valid {
                return Some(ev);
            }
            self.queue.pop();
        }
        None
    }

    /// Execute the next valid event. Returns `None` when no event is pending.
    pub fn step(&mut self) -> Result<Option<ExecutedEvent>, EngineError> {
        let Some(ev) = self.peek_valid() else {
            return Ok(None);
        };
        self.queue.pop();
        debug_assert!(ev.time >= self.now, "event time regressed");
        self.now = ev.time;
        let effect = match ev.kind {
            EventKind::Jump => self.execute_jump(ev.particle)?,
            EventKind::SleepAttempt => self.execute_sleep_attempt(ev.particle),
        };
        self.events_executed += 1;
        Ok(Some(ExecutedEvent { time: ev.time, particle: ev.particle, kind: ev.kind, effect }))
    }

    fn execute_jump(&mut self, pid: ParticleId) -> Result<EventEffect, EngineError> {
        let from = self.particles[pid.idx()].position;
        self.sites[from.idx()].remove_active(pid);
        self.odometer[from.idx()] += 1;
        self.last_active_time[from.idx()] = self.now;
        {
            let p = &mut self.particles[pid.idx()];
            p.jumps += 1;
            p.last_jump_time = Some(self.now);
            p.cursor += 1;
            p.position = p.path.steps()[p.cursor].vertex;
        }
        let to = self.particles[pid.idx()].position;

        if self.graph.is_sink(to) {
            let p = &mut self.particles[pid.idx()];
            p.mode = Mode::Exited;
            p.jump_gen += 1;
            p.sleep_gen += 1;
            self.active_count -= 1;
            self.remaining_count -= 1;
            self.last_active_time[to.idx()] = self.now;
            return Ok(EventEffect::ExitedAtSink { from, sink: to });
        }

        self.sites[to.idx()].active.push(pid);
        // wake-on-arrival happens inside the arrival event, before any
        // clock draw below sees the configuration
        let woke = self.sites[to.idx()].sleeper.take();
        if let Some(s) = woke {
            let sp = &mut self.particles[s.idx()];
            debug_assert_eq!(sp.mode, Mode::Sleeping);
            sp.mode = Mode::Active;
            self.sites[to.idx()].active.push(s);
            self.active_count += 1;
        }

        // next hold for the mover
        self.ensure_next_step(pid)?;
        {
            let p = &mut self.particles[pid.idx()];
            let hold = p.path.steps()[p.cursor + 1].entry_inner_time - p.path.steps()[p.cursor].entry_inner_time;
            p.remaining_inner = hold;
            p.rate_since = self.now;
            p.jump_gen += 1;
        }
        if let Some(s) = woke {
            let sp = &mut self.particles[s.idx()];
            sp.rate_since = self.now;
            sp.jump_gen += 1;
            sp.sleep_gen += 1;
        }

        if let Some(c) = self.rule.constant() {
            self.particles[pid.idx()].rate = c;
            self.push_jump(pid);
            if let Some(s) = woke {
                self.particles[s.idx()].rate = c;
                self.push_jump(s);
                self.push_sleep_attempt(s);
            }
        } else {
            if let Some(s) = woke {
                self.push_sleep_attempt(s);
            }
            self.refresh_rates_around(&[from, to], pid, woke)?;
        }
        Ok(EventEffect::Moved { from, to, woke })
    }

    /// Recompute rates for every active particle whose view may have changed
    /// (within the locality radius of a touched vertex) and reschedule jumps
    /// where the rate actually moved. The just-moved and just-woken particles
    /// are rescheduled unconditionally.
    fn refresh_rates_around(
        &mut self,
        centers: &[VertexId],
        moved: ParticleId,
        woken: Option<ParticleId>,
    ) -> Result<(), EngineError> {
        let radius = self.rule.locality_radius();
        let mut affected: Vec<ParticleId> = Vec::new();
        for &c in centers {
            for (v, _) in self.graph.ball(c, radius) {
                affected.extend(self.sites[v.idx()].active.iter().copied());
            }
        }
        affected.sort_unstable();
        affected.dedup();
        for pid in affected {
            let new_rate = self.eval_rate(pid)?;
            if pid == moved || Some(pid) == woken {
                self.particles[pid.idx()].rate = new_rate;
                self.push_jump(pid);
            } else if new_rate != self.particles[pid.idx()].rate {
                self.consume_inner(pid);
                let p = &mut self.particles[pid.idx()];
                p.rate = new_rate;
                p.jump_gen += 1;
                self.push_jump(pid);
            }
        }
        Ok(())
    }

    fn execute_sleep_attempt(&mut self, pid: ParticleId) -> EventEffect {
        let at = self.particles[pid.idx()].position;
        let alone = {
            let site = &self.sites[at.idx()];
            debug_assert!(site.sleeper.is_none(), "sleeper coexisting with an active particle");
            site.active.len() == 1
        };
        if alone {
            self.sites[at.idx()].remove_active(pid);
            self.sites[at.idx()].sleeper = Some(pid);
            let p = &mut self.particles[pid.idx()];
            p.mode = Mode::Sleeping;
            p.jump_gen += 1;
            p.sleep_gen += 1;
            self.active_count -= 1;
            self.last_active_time[at.idx()] = self.now;
            // freeze the inner clock where it stood
            let rate = p.rate;
            let since = p.rate_since;
            let p = &mut self.particles[pid.idx()];
            p.remaining_inner = (p.remaining_inner - rate * (self.now - since)).max(0.0);
            p.rate_since = self.now;
            EventEffect::FellAsleep
        } else {
            // shared vertex: the Poisson clock just ticks on
            self.push_sleep_attempt(pid);
            EventEffect::SleepBlocked
        }
    }

    /// Run until the stop condition (or absorption, which always halts the
    /// dynamics) is reached.
    pub fn run_until(&mut self, stop: StopRule) -> Result<RunReport, EngineError> {
        let reason = loop {
            if self.is_absorbed() {
                break StopReason::Absorbed;
            }
            match stop {
                StopRule::MaxEvents(m) if self.events_executed >= m => break StopReason::EventBudget,
                StopRule::Time(t) => {
                    match self.peek_valid() {
                        None => break StopReason::Stalled,
                        Some(ev) if ev.time > t => {
                            self.now = self.now.max(t);
                            break StopReason::TimeLimit;
                        }
                        Some(_) => {}
                    }
                    self.step()?;
                }
                _ => {
                    if self.step()?.is_none() {
                        break StopReason::Stalled;
                    }
                }
            }
        };
        Ok(self.report(reason))
    }

    fn report(&self, stop_reason: StopReason) -> RunReport {
        let absorbed = self.is_absorbed();
        let vertex_fixation_time = self
            .graph
            .vertices()
            .map(|v| {
                if self.sites[v.idx()].active.is_empty() {
                    Some(self.last_active_time[v.idx()])
                } else {
                    None
                }
            })
            .collect();
        let particle_records = self
            .particles
            .iter()
            .map(|p| ParticleRecord { origin: p.origin, position: p.position, mode: p.mode, jumps: p.jumps })
            .collect();
        RunReport {
            stop_reason,
            absorbed,
            final_time: self.now,
            absorption_time: absorbed.then_some(self.now),
            events: self.events_executed,
            particles_created: self.particles.len(),
            particles_remaining: self.remaining_count,
            sleeping: self.sleeping_count(),
            vacuous: self.particles.is_empty(),
            vertex_fixation_time,
            particle_records,
            odometer: self.odometer.clone(),
        }
    }
}
