//! Putative paths: the intended trajectory of a particle, parameterized by
//! its inner time. A path is a sequence of (vertex, entry time) steps with
//! strictly increasing entry times starting at 0; the path sits at step i's
//! vertex on the half-open inner-time interval up to step i+1's entry.
//!
//! Paths are sampled lazily and never resampled: interactions in the engine
//! only time-change them.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::graph::{FiniteGraph, GraphError, VertexId};

/// One-step law of the walk: holding-time rate plus a neighbor kernel.
/// `WeightedKernel` weights are indexed by neighbor position in the
/// ascending-index neighbor list, so they only make sense on regular
/// (periodic) graphs where every vertex has the same degree.
#[derive(Clone, Debug, PartialEq)]
pub enum PathDistribution {
    SimpleRandomWalk,
    HoldingTimeWalk { rate: f64 },
    WeightedKernel { weights: Vec<f64>, rate: f64 },
}

#[derive(Debug, Error)]
pub enum PathError {
    #[error("invalid path distribution: {0}")]
    InvalidDistribution(String),
    #[error("requested {requested} distinct vertices but the graph has only {available}")]
    TooManyDistinct { requested: u32, available: u32 },
    #[error("path exited at a sink after visiting {distinct_found} distinct vertices")]
    ExitedBeforeDistinct { distinct_found: u32 },
    #[error("unrecognized path distribution `{0}` (expected srw, hold:r or kernel:w1,w2,...:r)")]
    Parse(String),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

impl PathDistribution {
    /// Inner holding-time rate.
    pub fn rate(&self) -> f64 {
        match self {
            PathDistribution::SimpleRandomWalk => 1.0,
            PathDistribution::HoldingTimeWalk { rate } => *rate,
            PathDistribution::WeightedKernel { rate, .. } => *rate,
        }
    }

    pub fn validate(&self, g: &FiniteGraph) -> Result<(), PathError> {
        let bad = |m: String| Err(PathError::InvalidDistribution(m));
        match self {
            PathDistribution::SimpleRandomWalk => Ok(()),
            PathDistribution::HoldingTimeWalk { rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("holding rate must be positive, got {rate}"));
                }
                Ok(())
            }
            PathDistribution::WeightedKernel { weights, rate } => {
                if !(rate.is_finite() && *rate > 0.0) {
                    return bad(format!("kernel rate must be positive, got {rate}"));
                }
                if weights.len() != g.degree() as usize {
                    return bad(format!(
                        "kernel has {} weights but the graph degree is {}",
                        weights.len(),
                        g.degree()
                    ));
                }
                if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
                    return bad("kernel weights must be nonnegative and finite".into());
                }
                if weights.iter().sum::<f64>() <= 0.0 {
                    return bad("kernel weights must not all be zero".into());
                }
                Ok(())
            }
        }
    }

    fn sample_neighbor<R: Rng + ?Sized>(&self, g: &FiniteGraph, v: VertexId, rng: &mut R) -> VertexId {
        let nbrs = g.nbrs(v);
        match self {
            PathDistribution::SimpleRandomWalk | PathDistribution::HoldingTimeWalk { .. } => {
                nbrs[rng.random_range(0..nbrs.len())]
            }
            PathDistribution::WeightedKernel { weights, .. } => {
                let total: f64 = weights[..nbrs.len()].iter().sum();
                let mut target = rng.random::<f64>() * total;
                for (i, &w) in weights[..nbrs.len()].iter().enumerate() {
                    target -= w;
                    if target < 0.0 {
                        return nbrs[i];
                    }
                }
                nbrs[nbrs.len() - 1]
            }
        }
    }
}

impl fmt::Display for PathDistribution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PathDistribution::SimpleRandomWalk => write!(f, "srw"),
            PathDistribution::HoldingTimeWalk { rate } => write!(f, "hold:{rate}"),
            PathDistribution::WeightedKernel { weights, rate } => {
                let ws: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                write!(f, "kernel:{}:{rate}", ws.join(","))
            }
        }
    }
}

impl FromStr for PathDistribution {
    type Err = PathError;

    fn from_str(s: &str) -> Result<Self, PathError> {
        let err = || PathError::Parse(s.to_string());
        if s == "srw" {
            return Ok(PathDistribution::SimpleRandomWalk);
        }
        if let Some(rest) = s.strip_prefix("hold:") {
            let rate = rest.parse::<f64>().map_err(|_| err())?;
            return Ok(PathDistribution::HoldingTimeWalk { rate });
        }
        if let Some(rest) = s.strip_prefix("kernel:") {
            let (ws, rate) = rest.rsplit_once(':').ok_or_else(err)?;
            let weights = ws
                .split(',')
                .map(|w| w.parse::<f64>().map_err(|_| err()))
                .collect::<Result<Vec<_>, _>>()?;
            let rate = rate.parse::<f64>().map_err(|_| err())?;
            return Ok(PathDistribution::WeightedKernel { weights, rate });
        }
        Err(err())
    }
}

/// Draw a strictly positive exponential holding time.
pub(crate) fn sample_exp<R: Rng + ?Sized>(rate: f64, rng: &mut R) -> f64 {
    let exp = Exp::new(rate).expect("positive rate");
    loop {
        let h = exp.sample(rng);
        if h > 0.0 {
            return h;
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathStep {
    pub vertex: VertexId,
    pub entry_inner_time: f64,
}

/// Growable realization of a putative path.
#[derive(Clone, Debug)]
pub struct PutativePath {
    steps: Vec<PathStep>,
    exited: bool,
}

impl PutativePath {
    pub fn new(start: VertexId) -> Self {
        Self {
            steps: vec![PathStep { vertex: start, entry_inner_time: 0.0 }],
            exited: false,
        }
    }

    pub fn steps(&self) -> &[PathStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        false // always seeded with the start vertex
    }

    /// True once the path has terminated at a sink.
    pub fn exited(&self) -> bool {
        self.exited
    }

    pub fn last(&self) -> PathStep {
        *self.steps.last().expect("path is never empty")
    }

    /// Append one step: a strictly positive exponential holding time at the
    /// current vertex and a kernel-sampled next vertex. Returns `None` (and
    /// flags the path exited) when the current vertex is a sink.
    pub fn sample_next_step<R: Rng + ?Sized>(
        &mut self,
        dist: &PathDistribution,
        g: &FiniteGraph,
        rng: &mut R,
    ) -> Result<Option<PathStep>, PathError> {
        if self.exited {
            return Ok(None);
        }
        let at = self.last();
        if g.is_sink(at.vertex) {
            self.exited = true;
            return Ok(None);
        }
        let hold = sample_exp(dist.rate(), rng);
        let next = dist.sample_neighbor(g, at.vertex, rng);
        let step = PathStep { vertex: next, entry_inner_time: at.entry_inner_time + hold };
        self.steps.push(step);
        Ok(Some(step))
    }

    /// Extend until the last entry time exceeds `t` (or the path exits).
    pub fn ensure_inner_time<R: Rng + ?Sized>(
        &mut self,
        t: f64,
        dist: &PathDistribution,
        g: &FiniteGraph,
        rng: &mut R,
    ) -> Result<(), PathError> {
        while !self.exited && self.last().entry_inner_time <= t {
            if self.sample_next_step(dist, g, rng)?.is_none() {
                break;
            }
        }
        Ok(())
    }

    /// Number of jumps with entry time in (0, t]. Only meaningful after
    /// `ensure_inner_time(t, ..)` unless the path has exited.
    pub fn jumps_by_inner_time(&self, t: f64) -> u32 {
        self.steps[1..]
            .iter()
            .take_while(|s| s.entry_inner_time <= t)
            .count() as u32
    }

    /// The first `n` distinct vertices in visit order, extending the path as
    /// needed. The first entry is always the start vertex.
    pub fn first_n_distinct<R: Rng + ?Sized>(
        &mut self,
        dist: &PathDistribution,
        g: &FiniteGraph,
        n: u32,
        rng: &mut R,
    ) -> Result<Vec<VertexId>, PathError> {
        if n == 0 || n > g.vertex_count() {
            return Err(PathError::TooManyDistinct { requested: n, available: g.vertex_count() });
        }
        let mut seen = vec![false; g.vertex_count() as usize];
        let mut distinct = Vec::with_capacity(n as usize);
        let mut cursor = 0usize;
        loop {
            while cursor < self.steps.len() {
                let v = self.steps[cursor].vertex;
                if !seen[v.idx()] {
                    seen[v.idx()] = true;
                    distinct.push(v);
                    if distinct.len() == n as usize {
                        return Ok(distinct);
                    }
                }
                cursor += 1;
            }
            if self.sample_next_step(dist, g, rng)?.is_none() {
                return Err(PathError::ExitedBeforeDistinct { distinct_found: distinct.len() as u32 });
            }
        }
    }
}

/// Result of the first-step invariance diagnostic.
#[derive(Clone, Debug)]
pub struct InvarianceReport {
    pub samples: u32,
    pub maps_checked: usize,
    pub max_tv_residual: f64,
}

/// Compare the empirical one-step law from vertex 0 with its pushforward
/// under every stabilizer map the topology provides, and report the largest
/// total-variation residual. A diagnostic, not a gate: user kernels may
/// legitimately violate invariance and this makes the violation visible.
pub fn check_invariance(
    dist: &PathDistribution,
    g: &FiniteGraph,
    samples: u32,
    seed: u64,
) -> Result<InvarianceReport, PathError> {
    dist.validate(g)?;
    let origin = VertexId(0);
    let maps = g.stabilizer_maps(origin)?;
    let mut rng = crate::seed::SeedStream::new(seed).rng();
    let mut counts = vec![0u64; g.vertex_count() as usize];
    for _ in 0..samples {
        let mut path = PutativePath::new(origin);
        let step = path
            .sample_next_step(dist, g, &mut rng)?
            .expect("periodic graphs have no sinks");
        counts[step.vertex.idx()] += 1;
    }
    let p: Vec<f64> = counts.iter().map(|&c| c as f64 / samples as f64).collect();
    let mut max_tv = 0.0f64;
    for map in &maps {
        // pushforward: mass of w moves to map[w]
        let mut q = vec![0.0; p.len()];
        for (w, &target) in map.iter().enumerate() {
            q[target.idx()] += p[w];
        }
        let tv = 0.5 * p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>();
        max_tv = max_tv.max(tv);
    }
    Ok(InvarianceReport { samples, maps_checked: maps.len(), max_tv_residual: max_tv })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{build_topology, TopologyDescriptor};
    use crate::seed::SeedStream;

    fn rng(seed: u64) -> rand_chacha::ChaCha8Rng {
        SeedStream::new(seed).rng()
    }

    #[test]
    fn srw_first_step_uniform_on_cycle3() {
        let g = build_topology(TopologyDescriptor::cycle(3)).unwrap();
        let dist = PathDistribution::SimpleRandomWalk;
        let mut rng = rng(1);
        let n = 100_000u32;
        let mut hits = [0u32; 3];
        for _ in 0..n {
            let mut path = PutativePath::new(VertexId(0));
            let s = path.sample_next_step(&dist, &g, &mut rng).unwrap().unwrap();
            hits[s.vertex.idx()] += 1;
        }
        assert_eq!(hits[0], 0);
        // each neighbor with probability 1/2; 4 standard errors of binomial
        let se = (0.25 * n as f64).sqrt();
        for &h in &hits[1..] {
            assert!((h as f64 - n as f64 / 2.0).abs() < 4.0 * se, "biased neighbor counts {hits:?}");
        }
    }

    #[test]
    fn holding_time_means() {
        let g = build_topology(TopologyDescriptor::cycle(6)).unwrap();
        let mut rng = rng(2);
        let n = 100_000;

        // rate 2 walk: mean holding time 1/2
        let dist = PathDistribution::HoldingTimeWalk { rate: 2.0 };
        let mut total = 0.0;
        for _ in 0..n {
            let mut path = PutativePath::new(VertexId(0));
            let s = path.sample_next_step(&dist, &g, &mut rng).unwrap().unwrap();
            total += s.entry_inner_time;
        }
        let mean = total / n as f64;
        let se = 0.5 / (n as f64).sqrt();
        assert!((mean - 0.5).abs() < 4.0 * se, "rate-2 mean {mean}");

        // unit-rate walk: mean holding time within 1 +/- 0.02 at 1e5 samples
        let dist = PathDistribution::SimpleRandomWalk;
        let mut total = 0.0;
        for _ in 0..n {
            let mut path = PutativePath::new(VertexId(0));
            let s = path.sample_next_step(&dist, &g, &mut rng).unwrap().unwrap();
            total += s.entry_inner_time;
        }
        let mean = total / n as f64;
        assert!((mean - 1.0).abs() < 0.02, "unit-rate mean {mean}");
    }

    #[test]
    fn inner_times_strictly_increase_and_steps_adjacent() {
        let g = build_topology(TopologyDescriptor::torus(4, 2)).unwrap();
        let dist = PathDistribution::SimpleRandomWalk;
        for seed in 0..20 {
            let mut rng = rng(seed);
            let mut path = PutativePath::new(VertexId(5));
            for _ in 0..200 {
                path.sample_next_step(&dist, &g, &mut rng).unwrap().unwrap();
            }
            for pair in path.steps().windows(2) {
                assert!(pair[1].entry_inner_time > pair[0].entry_inner_time);
                assert!(g.neighbors(pair[0].vertex).unwrap().contains(&pair[1].vertex));
            }
        }
    }

    #[test]
    fn first_n_distinct_basics() {
        let g = build_topology(TopologyDescriptor::cycle(3)).unwrap();
        let dist = PathDistribution::SimpleRandomWalk;
        let mut rng = rng(3);

        let mut path = PutativePath::new(VertexId(2));
        assert_eq!(path.first_n_distinct(&dist, &g, 1, &mut rng).unwrap(), vec![VertexId(2)]);

        let all = path.first_n_distinct(&dist, &g, 3, &mut rng).unwrap();
        assert_eq!(all.len(), 3);
        assert_eq!(all[0], VertexId(2));
        let mut sorted = all.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 3);
        // visit order must agree with the path prefix
        let mut seen = Vec::new();
        for s in path.steps() {
            if !seen.contains(&s.vertex) {
                seen.push(s.vertex);
            }
            if seen.len() == 3 {
                break;
            }
        }
        assert_eq!(seen, all);

        assert!(matches!(
            path.first_n_distinct(&dist, &g, 4, &mut rng),
            Err(PathError::TooManyDistinct { requested: 4, available: 3 })
        ));
    }

    #[test]
    fn first_n_distinct_on_torus() {
        let g = build_topology(TopologyDescriptor::torus(8, 2)).unwrap();
        let dist = PathDistribution::SimpleRandomWalk;
        for seed in 0..50 {
            let mut rng = rng(100 + seed);
            let start = VertexId((seed % 64) as u32);
            let mut path = PutativePath::new(start);
            let picked = path.first_n_distinct(&dist, &g, 10, &mut rng).unwrap();
            assert_eq!(picked.len(), 10);
            assert_eq!(picked[0], start);
            let mut sorted = picked.clone();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 10);
        }
    }

    #[test]
    fn sink_exit_is_flagged() {
        let g = build_topology(TopologyDescriptor::tree_ball(3, 1)).unwrap();
        let dist = PathDistribution::SimpleRandomWalk;
        let mut rng = rng(4);
        // root -> leaf, then the path terminates at the sink
        let mut path = PutativePath::new(VertexId(0));
        let step = path.sample_next_step(&dist, &g, &mut rng).unwrap().unwrap();
        assert!(g.is_sink(step.vertex));
        assert!(!path.exited());
        assert!(path.sample_next_step(&dist, &g, &mut rng).unwrap().is_none());
        assert!(path.exited());

        let mut path = PutativePath::new(VertexId(0));
        match path.first_n_distinct(&dist, &g, 4, &mut rng) {
            Err(PathError::ExitedBeforeDistinct { distinct_found: 2 }) => {}
            other => panic!("expected exit after 2 distinct vertices, got {other:?}"),
        }
    }

    #[test]
    fn jumps_by_inner_time_counts_prefix() {
        let g = build_topology(TopologyDescriptor::cycle(5)).unwrap();
        let dist = PathDistribution::SimpleRandomWalk;
        let mut rng = rng(5);
        let mut path = PutativePath::new(VertexId(0));
        path.ensure_inner_time(3.0, &dist, &g, &mut rng).unwrap();
        let by_hand = path.steps()[1..].iter().filter(|s| s.entry_inner_time <= 3.0).count() as u32;
        assert_eq!(path.jumps_by_inner_time(3.0), by_hand);
        assert!(path.last().entry_inner_time > 3.0);
    }

    #[test]
    fn invariance_symmetric_kernels() {
        let g = build_topology(TopologyDescriptor::cycle(6)).unwrap();
        let r = check_invariance(&PathDistribution::SimpleRandomWalk, &g, 200_000, 6).unwrap();
        assert!(r.max_tv_residual < 0.01, "srw residual {}", r.max_tv_residual);

        let g = build_topology(TopologyDescriptor::complete(4)).unwrap();
        let r = check_invariance(&PathDistribution::SimpleRandomWalk, &g, 200_000, 7).unwrap();
        assert!(r.max_tv_residual < 0.01, "complete residual {}", r.max_tv_residual);
    }

    /// Clockwise-biased kernel on a cycle: the reflection residual has the
    /// closed form |p - (1-p)|.
    #[test]
    fn invariance_detects_bias() {
        let g = build_topology(TopologyDescriptor::cycle(6)).unwrap();
        let p = 0.8;
        // neighbor list of v is [v-1, v+1] sorted by index except at the seam;
        // weights apply by position, so this is not exactly "clockwise" at
        // every vertex, but from vertex 0 the first step law is (p, 1-p).
        let dist = PathDistribution::WeightedKernel { weights: vec![p, 1.0 - p], rate: 1.0 };
        let r = check_invariance(&dist, &g, 400_000, 8).unwrap();
        let expected = (p - (1.0 - p)) as f64;
        assert!(
            (r.max_tv_residual - expected).abs() < 0.02,
            "residual {} vs closed form {expected}",
            r.max_tv_residual
        );
    }

    #[test]
    fn kernel_validation() {
        let g = build_topology(TopologyDescriptor::cycle(6)).unwrap();
        for bad in [
            PathDistribution::WeightedKernel { weights: vec![1.0], rate: 1.0 },
            PathDistribution::WeightedKernel { weights: vec![0.0, 0.0], rate: 1.0 },
            PathDistribution::WeightedKernel { weights: vec![1.0, -0.5], rate: 1.0 },
            PathDistribution::WeightedKernel { weights: vec![1.0, 1.0], rate: 0.0 },
            PathDistribution::HoldingTimeWalk { rate: -1.0 },
        ] {
            assert!(bad.validate(&g).is_err(), "{bad:?} should be invalid");
        }
        assert!(PathDistribution::SimpleRandomWalk.validate(&g).is_ok());
    }

    #[test]
    fn parse_distributions() {
        assert_eq!("srw".parse::<PathDistribution>().unwrap(), PathDistribution::SimpleRandomWalk);
        assert_eq!(
            "hold:2.5".parse::<PathDistribution>().unwrap(),
            PathDistribution::HoldingTimeWalk { rate: 2.5 }
        );
        assert_eq!(
            "kernel:0.8,0.2:1".parse::<PathDistribution>().unwrap(),
            PathDistribution::WeightedKernel { weights: vec![0.8, 0.2], rate: 1.0 }
        );
        assert!("walk".parse::<PathDistribution>().is_err());
        assert!("kernel:1,2".parse::<PathDistribution>().is_err());
    }
}
