//! Finite stand-ins for infinite transitive graphs.
//!
//! Two boundary conventions are supported: periodic wrap-around (cycles,
//! tori, complete graphs), which is vertex-transitive by construction and
//! carries an explicit translation group, and absorbing boundaries (balls
//! in regular trees), where the boundary vertices act as sinks that remove
//! particles.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

/// Dense vertex index, stable for the lifetime of a graph.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct VertexId(pub u32);

impl VertexId {
    #[inline]
    pub fn idx(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Boundary {
    Periodic,
    Absorbing,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Topology {
    Cycle { len: u32 },
    Torus { len: u32, dim: u32 },
    TreeBall { degree: u32, radius: u32 },
    Complete { size: u32 },
}

/// Topology plus boundary convention; validated before building.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TopologyDescriptor {
    pub kind: Topology,
    pub boundary: Boundary,
}

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("invalid descriptor field `{field}`: {message}")]
    InvalidDescriptor { field: &'static str, message: String },
    #[error("vertex {vertex} out of range (vertex count {count})")]
    VertexOutOfRange { vertex: u32, count: u32 },
    #[error("`{op}` requires a periodic (vertex-transitive) graph")]
    RequiresPeriodic { op: &'static str },
    #[error("unrecognized topology `{0}` (expected cycle:L, torus:L:dim, treeball:d:r or complete:k)")]
    Parse(String),
}

impl TopologyDescriptor {
    pub fn cycle(len: u32) -> Self {
        Self { kind: Topology::Cycle { len }, boundary: Boundary::Periodic }
    }

    pub fn torus(len: u32, dim: u32) -> Self {
        Self { kind: Topology::Torus { len, dim }, boundary: Boundary::Periodic }
    }

    pub fn tree_ball(degree: u32, radius: u32) -> Self {
        Self { kind: Topology::TreeBall { degree, radius }, boundary: Boundary::Absorbing }
    }

    pub fn complete(size: u32) -> Self {
        Self { kind: Topology::Complete { size }, boundary: Boundary::Periodic }
    }

    pub fn validate(&self) -> Result<(), GraphError> {
        let invalid = |field: &'static str, message: String| {
            Err(GraphError::InvalidDescriptor { field, message })
        };
        match self.kind {
            Topology::Cycle { len } => {
                if len < 3 {
                    return invalid("len", format!("cycle length must be >= 3, got {len}"));
                }
            }
            Topology::Torus { len, dim } => {
                if len < 3 {
                    return invalid("len", format!("torus side must be >= 3, got {len}"));
                }
                if !(1..=3).contains(&dim) {
                    return invalid("dim", format!("torus dimension must be in 1..=3, got {dim}"));
                }
            }
            Topology::TreeBall { degree, radius } => {
                if degree < 3 {
                    return invalid("degree", format!("tree degree must be >= 3, got {degree}"));
                }
                if radius < 1 {
                    return invalid("radius", format!("tree radius must be >= 1, got {radius}"));
                }
            }
            Topology::Complete { size } => {
                if size < 2 {
                    return invalid("size", format!("complete graph needs >= 2 vertices, got {size}"));
                }
            }
        }
        // Tree balls have a genuine boundary and require sinks; the wrapped
        // topologies have none to absorb at.
        match (self.kind, self.boundary) {
            (Topology::TreeBall { .. }, Boundary::Periodic) => {
                invalid("boundary", "tree balls require an absorbing boundary".into())
            }
            (Topology::TreeBall { .. }, Boundary::Absorbing) => Ok(()),
            (_, Boundary::Absorbing) => {
                invalid("boundary", "periodic topologies have no boundary to absorb at".into())
            }
            (_, Boundary::Periodic) => Ok(()),
        }
    }
}

impl fmt::Display for TopologyDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            Topology::Cycle { len } => write!(f, "cycle:{len}"),
            Topology::Torus { len, dim } => write!(f, "torus:{len}:{dim}"),
            Topology::TreeBall { degree, radius } => write!(f, "treeball:{degree}:{radius}"),
            Topology::Complete { size } => write!(f, "complete:{size}"),
        }
    }
}

impl FromStr for TopologyDescriptor {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, GraphError> {
        let err = || GraphError::Parse(s.to_string());
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| t.parse::<u32>().map_err(|_| err());
        let desc = match parts.as_slice() {
            ["cycle", l] => Self::cycle(num(l)?),
            ["torus", l, d] => Self::torus(num(l)?, num(d)?),
            ["treeball", d, r] => Self::tree_ball(num(d)?, num(r)?),
            ["complete", k] => Self::complete(num(k)?),
            _ => return Err(err()),
        };
        desc.validate()?;
        Ok(desc)
    }
}

/// Finite approximation of a transitive graph: symmetric adjacency in
/// ascending-index order, plus sink bookkeeping for absorbing boundaries.
#[derive(Clone, Debug)]
pub struct FiniteGraph {
    descriptor: TopologyDescriptor,
    vertex_count: u32,
    adjacency: Vec<Vec<VertexId>>,
    degree: u32,
    sinks: Vec<bool>,
    sink_list: Vec<VertexId>,
    transitive_by_construction: bool,
    /// (side length, dimension) of the translation group Z_L^dim, when periodic.
    period: Option<(u32, u32)>,
}

/// Build the graph described by `desc`.
pub fn build_topology(desc: TopologyDescriptor) -> Result<FiniteGraph, GraphError> {
    FiniteGraph::build(desc)
}

impl FiniteGraph {
    pub fn build(descriptor: TopologyDescriptor) -> Result<Self, GraphError> {
        descriptor.validate()?;
        let mut g = match descriptor.kind {
            Topology::Cycle { len } => Self::build_torus(descriptor, len, 1),
            Topology::Torus { len, dim } => Self::build_torus(descriptor, len, dim),
            Topology::Complete { size } => Self::build_complete(descriptor, size),
            Topology::TreeBall { degree, radius } => Self::build_tree_ball(descriptor, degree, radius),
        };
        for list in &mut g.adjacency {
            list.sort_unstable();
        }
        debug_assert!(g.check_symmetric());
        Ok(g)
    }

    fn build_torus(descriptor: TopologyDescriptor, len: u32, dim: u32) -> Self {
        let n = len.pow(dim);
        let mut adjacency = vec![Vec::with_capacity(2 * dim as usize); n as usize];
        let mut stride = 1u32;
        for _ in 0..dim {
            for v in 0..n {
                let coord = (v / stride) % len;
                let plus = v - coord * stride + ((coord + 1) % len) * stride;
                let minus = v - coord * stride + ((coord + len - 1) % len) * stride;
                adjacency[v as usize].push(VertexId(plus));
                adjacency[v as usize].push(VertexId(minus));
            }
            stride *= len;
        }
        FiniteGraph {
            descriptor,
            vertex_count: n,
            adjacency,
            degree: 2 * dim,
            sinks: vec![false; n as usize],
            sink_list: Vec::new(),
            transitive_by_construction: true,
            period: Some((len, dim)),
        }
    }

    fn build_complete(descriptor: TopologyDescriptor, size: u32) -> Self {
        let adjacency = (0..size)
            .map(|v| (0..size).filter(|&w| w != v).map(VertexId).collect())
            .collect();
        FiniteGraph {
            descriptor,
            vertex_count: size,
            adjacency,
            degree: size - 1,
            sinks: vec![false; size as usize],
            sink_list: Vec::new(),
            transitive_by_construction: true,
            period: Some((size, 1)),
        }
    }

    fn build_tree_ball(descriptor: TopologyDescriptor, degree: u32, radius: u32) -> Self {
        // Ball of the d-regular tree: the root has d children, interior
        // vertices d-1; vertices at depth `radius` are leaves and sinks.
        let mut adjacency: Vec<Vec<VertexId>> = vec![Vec::new()];
        let mut depth_of = vec![0u32];
        let mut frontier = vec![0u32];
        for depth in 1..=radius {
            let mut next = Vec::new();
            for &parent in &frontier {
                let children = if parent == 0 { degree } else { degree - 1 };
                for _ in 0..children {
                    let child = adjacency.len() as u32;
                    adjacency.push(vec![VertexId(parent)]);
                    adjacency[parent as usize].push(VertexId(child));
                    depth_of.push(depth);
                    next.push(child);
                }
            }
            frontier = next;
        }
        let n = adjacency.len() as u32;
        let mut sinks = vec![false; n as usize];
        let mut sink_list = Vec::new();
        for v in 0..n {
            if depth_of[v as usize] == radius {
                sinks[v as usize] = true;
                sink_list.push(VertexId(v));
            }
        }
        FiniteGraph {
            descriptor,
            vertex_count: n,
            adjacency,
            degree,
            sinks,
            sink_list,
            transitive_by_construction: false,
            period: None,
        }
    }

    fn check_symmetric(&self) -> bool {
        self.adjacency.iter().enumerate().all(|(v, nbrs)| {
            nbrs.iter().all(|w| {
                w.idx() != v && self.adjacency[w.idx()].contains(&VertexId(v as u32))
            })
        })
    }

    fn check_vertex(&self, v: VertexId) -> Result<(), GraphError> {
        if v.0 < self.vertex_count {
            Ok(())
        } else {
            Err(GraphError::VertexOutOfRange { vertex: v.0, count: self.vertex_count })
        }
    }

    pub fn descriptor(&self) -> TopologyDescriptor {
        self.descriptor
    }

    pub fn vertex_count(&self) -> u32 {
        self.vertex_count
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        (0..self.vertex_count).map(VertexId)
    }

    /// Common degree of interior vertices.
    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn is_periodic(&self) -> bool {
        self.descriptor.boundary == Boundary::Periodic
    }

    pub fn transitive_by_construction(&self) -> bool {
        self.transitive_by_construction
    }

    pub fn is_sink(&self, v: VertexId) -> bool {
        self.sinks[v.idx()]
    }

    pub fn sink_vertices(&self) -> &[VertexId] {
        &self.sink_list
    }

    /// Neighbors of `v` in ascending index order.
    pub fn neighbors(&self, v: VertexId) -> Result<&[VertexId], GraphError> {
        self.check_vertex(v)?;
        Ok(&self.adjacency[v.idx()])
    }

    /// Unchecked neighbor access for internally produced vertex ids.
    #[inline]
    pub(crate) fn nbrs(&self, v: VertexId) -> &[VertexId] {
        &self.adjacency[v.idx()]
    }

    /// Graph distance by breadth-first search.
    pub fn distance(&self, u: VertexId, v: VertexId) -> Result<u32, GraphError> {
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        if u == v {
            return Ok(0);
        }
        let mut dist = vec![u32::MAX; self.vertex_count as usize];
        dist[u.idx()] = 0;
        let mut queue = VecDeque::from([u]);
        while let Some(w) = queue.pop_front() {
            let d = dist[w.idx()];
            for &x in self.nbrs(w) {
                if dist[x.idx()] == u32::MAX {
                    if x == v {
                        return Ok(d + 1);
                    }
                    dist[x.idx()] = d + 1;
                    queue.push_back(x);
                }
            }
        }
        unreachable!("graph is connected by construction");
    }

    /// All vertices within distance `radius` of `v`, as (vertex, distance)
    /// pairs in BFS order (ascending distance, ascending index inside a shell).
    pub fn ball(&self, v: VertexId, radius: u32) -> Vec<(VertexId, u32)> {
        let mut out = vec![(v, 0)];
        if radius == 0 {
            return out;
        }
        let mut dist = vec![u32::MAX; self.vertex_count as usize];
        dist[v.idx()] = 0;
        let mut frontier = vec![v];
        for d in 1..=radius {
            let mut next = Vec::new();
            for &w in &frontier {
                for &x in self.nbrs(w) {
                    if dist[x.idx()] == u32::MAX {
                        dist[x.idx()] = d;
                        next.push(x);
                    }
                }
            }
            next.sort_unstable();
            out.extend(next.iter().map(|&x| (x, d)));
            frontier = next;
        }
        out
    }

    fn period(&self, op: &'static str) -> Result<(u32, u32), GraphError> {
        self.period.ok_or(GraphError::RequiresPeriodic { op })
    }

    /// Apply the translation labeled by `t` to `v` (component-wise addition
    /// in Z_L^dim; cyclic shift on complete graphs). Periodic graphs only.
    pub fn translate(&self, v: VertexId, t: VertexId) -> Result<VertexId, GraphError> {
        let (len, dim) = self.period("translate")?;
        self.check_vertex(v)?;
        self.check_vertex(t)?;
        let mut out = 0u32;
        let mut stride = 1u32;
        for _ in 0..dim {
            let a = (v.0 / stride) % len;
            let b = (t.0 / stride) % len;
            out += ((a + b) % len) * stride;
            stride *= len;
        }
        Ok(VertexId(out))
    }

    /// The translation label δ with `translate(u, δ) = v`.
    pub fn offset(&self, u: VertexId, v: VertexId) -> Result<VertexId, GraphError> {
        let (len, dim) = self.period("offset")?;
        self.check_vertex(u)?;
        self.check_vertex(v)?;
        let mut out = 0u32;
        let mut stride = 1u32;
        for _ in 0..dim {
            let a = (u.0 / stride) % len;
            let b = (v.0 / stride) % len;
            out += ((b + len - a) % len) * stride;
            stride *= len;
        }
        Ok(VertexId(out))
    }

    /// Exhaustively check that every coordinate translation maps edges to
    /// edges. Errors on absorbing-boundary graphs.
    pub fn verify_translation_invariance(&self) -> Result<bool, GraphError> {
        self.period("verify_translation_invariance")?;
        for t in self.vertices() {
            for v in self.vertices() {
                let tv = self.translate(v, t)?;
                let mut mapped: Vec<VertexId> = self
                    .nbrs(v)
                    .iter()
                    .map(|&w| self.translate(w, t))
                    .collect::<Result<_, _>>()?;
                mapped.sort_unstable();
                if mapped != self.adjacency[tv.idx()] {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    /// Nonidentity automorphisms fixing `origin` that the topology provides:
    /// the reflection on cycles, signed coordinate permutations on tori, and
    /// transpositions of non-origin vertices on complete graphs. Each map is
    /// returned as a full image table.
    pub fn stabilizer_maps(&self, origin: VertexId) -> Result<Vec<Vec<VertexId>>, GraphError> {
        self.period("stabilizer_maps")?;
        self.check_vertex(origin)?;
        let n = self.vertex_count as usize;
        let mut maps = Vec::new();
        match self.descriptor.kind {
            Topology::Complete { size } => {
                for a in 0..size {
                    for b in (a + 1)..size {
                        if VertexId(a) == origin || VertexId(b) == origin {
                            continue;
                        }
                        let mut map: Vec<VertexId> = (0..size as u32).map(VertexId).collect();
                        map.swap(a as usize, b as usize);
                        maps.push(map);
                    }
                }
            }
            Topology::Cycle { len } => {
                let map = (0..len)
                    .map(|x| VertexId((2 * origin.0 % len + len - x % len) % len))
                    .collect();
                maps.push(map);
            }
            Topology::Torus { len, dim } => {
                let dim = dim as usize;
                let coords = |v: u32| -> Vec<u32> {
                    let mut c = Vec::with_capacity(dim);
                    let mut rest = v;
                    for _ in 0..dim {
                        c.push(rest % len);
                        rest /= len;
                    }
                    c
                };
                let pack = |c: &[u32]| -> u32 {
                    c.iter().rev().fold(0, |acc, &x| acc * len + x)
                };
                let o = coords(origin.0);
                let perms = permutations(dim);
                for perm in &perms {
                    for signs in 0..(1u32 << dim) {
                        if *perm == (0..dim).collect::<Vec<_>>() && signs == 0 {
                            continue; // identity
                        }
                        let mut map = Vec::with_capacity(n);
                        for v in 0..self.vertex_count {
                            let c = coords(v);
                            let mut out = vec![0u32; dim];
                            for i in 0..dim {
                                let rel = (c[perm[i]] + len - o[perm[i]]) % len;
                                let rel = if signs & (1 << i) != 0 { (len - rel) % len } else { rel };
                                out[i] = (o[i] + rel) % len;
                            }
                            map.push(VertexId(pack(&out)));
                        }
                        maps.push(map);
                    }
                }
            }
            Topology::TreeBall { .. } => unreachable!("tree balls are never periodic"),
        }
        Ok(maps)
    }
}

fn permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 1 {
        return vec![vec![0]];
    }
    let mut out = Vec::new();
    for sub in permutations(n - 1) {
        for pos in 0..n {
            let mut p = sub.clone();
            p.insert(pos, n - 1);
            out.push(p);
        }
    }
    out.sort();
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(len: u32) -> FiniteGraph {
        build_topology(TopologyDescriptor::cycle(len)).unwrap()
    }

    fn torus(len: u32, dim: u32) -> FiniteGraph {
        build_topology(TopologyDescriptor::torus(len, dim)).unwrap()
    }

    #[test]
    fn cycle3_smallest() {
        let g = cycle(3);
        assert_eq!(g.vertex_count(), 3);
        for v in g.vertices() {
            assert_eq!(g.neighbors(v).unwrap().len(), 2);
        }
    }

    #[test]
    fn torus4x4_regular() {
        let g = torus(4, 2);
        assert_eq!(g.vertex_count(), 16);
        assert_eq!(g.degree(), 4);
        for v in g.vertices() {
            assert_eq!(g.neighbors(v).unwrap().len(), 4);
        }
    }

    #[test]
    fn tree_ball_counts() {
        let g = build_topology(TopologyDescriptor::tree_ball(3, 2)).unwrap();
        assert_eq!(g.vertex_count(), 10); // 1 + 3 + 6
        assert_eq!(g.sink_vertices().len(), 6);
        for &s in g.sink_vertices() {
            assert_eq!(g.neighbors(s).unwrap().len(), 1);
        }
    }

    #[test]
    fn neighbor_order_ascending() {
        let g = cycle(4);
        assert_eq!(g.neighbors(VertexId(0)).unwrap(), &[VertexId(1), VertexId(3)]);
        let g = torus(3, 1);
        assert_eq!(g.neighbors(VertexId(1)).unwrap(), &[VertexId(0), VertexId(2)]);
        let g = build_topology(TopologyDescriptor::complete(3)).unwrap();
        assert_eq!(g.neighbors(VertexId(2)).unwrap(), &[VertexId(0), VertexId(1)]);
    }

    #[test]
    fn distance_identity_and_cycle() {
        let g = cycle(6);
        for v in g.vertices() {
            assert_eq!(g.distance(v, v).unwrap(), 0);
        }
        assert_eq!(g.distance(VertexId(0), VertexId(3)).unwrap(), 3);
    }

    /// Independent all-pairs oracle: rebuild torus adjacency from coordinate
    /// arithmetic and run Floyd–Warshall, then compare every pair.
    #[test]
    fn distance_matches_floyd_warshall_oracle() {
        let len = 4u32;
        let g = torus(len, 2);
        let n = (len * len) as usize;
        let coord = |v: usize| ((v as u32 % len) as i64, (v as u32 / len) as i64);
        let mut d = vec![vec![u32::MAX / 2; n]; n];
        for v in 0..n {
            d[v][v] = 0;
            let (x, y) = coord(v);
            for (dx, dy) in [(1i64, 0i64), (-1, 0), (0, 1), (0, -1)] {
                let w = ((x + dx).rem_euclid(len as i64) + (y + dy).rem_euclid(len as i64) * len as i64)
                    as usize;
                d[v][w] = 1;
            }
        }
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    d[i][j] = d[i][j].min(d[i][k] + d[k][j]);
                }
            }
        }
        for u in 0..n {
            for v in 0..n {
                assert_eq!(
                    g.distance(VertexId(u as u32), VertexId(v as u32)).unwrap(),
                    d[u][v],
                    "distance mismatch at ({u},{v})"
                );
            }
        }
        // the spec's pinned example: (0,0) to (2,2) on the 4x4 torus
        assert_eq!(g.distance(VertexId(0), VertexId(2 + 2 * 4)).unwrap(), 4);
    }

    #[test]
    fn invalid_descriptors_name_the_field() {
        let cases = [
            (TopologyDescriptor::cycle(2), "len"),
            (TopologyDescriptor::torus(4, 4), "dim"),
            (TopologyDescriptor::tree_ball(2, 1), "degree"),
            (TopologyDescriptor::tree_ball(3, 0), "radius"),
            (TopologyDescriptor::complete(1), "size"),
            (
                TopologyDescriptor { kind: Topology::TreeBall { degree: 3, radius: 1 }, boundary: Boundary::Periodic },
                "boundary",
            ),
            (
                TopologyDescriptor { kind: Topology::Cycle { len: 5 }, boundary: Boundary::Absorbing },
                "boundary",
            ),
        ];
        for (desc, field) in cases {
            match build_topology(desc) {
                Err(GraphError::InvalidDescriptor { field: f, .. }) => assert_eq!(f, field),
                other => panic!("expected InvalidDescriptor({field}) for {desc:?}, got {other:?}"),
            }
        }
    }

    #[test]
    fn translation_invariance() {
        assert!(torus(4, 2).verify_translation_invariance().unwrap());
        assert!(cycle(5).verify_translation_invariance().unwrap());
        assert!(build_topology(TopologyDescriptor::complete(4))
            .unwrap()
            .verify_translation_invariance()
            .unwrap());
        let tree = build_topology(TopologyDescriptor::tree_ball(3, 2)).unwrap();
        assert!(matches!(
            tree.verify_translation_invariance(),
            Err(GraphError::RequiresPeriodic { .. })
        ));
    }

    #[test]
    fn adjacency_symmetric_and_degree_sum_even() {
        let graphs = [
            build_topology(TopologyDescriptor::cycle(7)).unwrap(),
            build_topology(TopologyDescriptor::torus(3, 3)).unwrap(),
            build_topology(TopologyDescriptor::tree_ball(4, 3)).unwrap(),
            build_topology(TopologyDescriptor::complete(5)).unwrap(),
        ];
        for g in &graphs {
            let total: usize = g.vertices().map(|v| g.neighbors(v).unwrap().len()).sum();
            assert_eq!(total % 2, 0);
            for v in g.vertices() {
                for &w in g.neighbors(v).unwrap() {
                    assert_ne!(w, v, "self-loop at {v}");
                    assert!(g.neighbors(w).unwrap().contains(&v));
                }
            }
        }
    }

    #[test]
    fn translate_offset_roundtrip() {
        let g = torus(5, 2);
        for u in g.vertices() {
            for v in g.vertices() {
                let delta = g.offset(u, v).unwrap();
                assert_eq!(g.translate(u, delta).unwrap(), v);
            }
        }
    }

    #[test]
    fn ball_radius_matches_distance() {
        let g = torus(5, 2);
        let center = VertexId(7);
        let ball = g.ball(center, 2);
        for (v, d) in &ball {
            assert_eq!(g.distance(center, *v).unwrap(), *d);
        }
        let by_distance = g
            .vertices()
            .filter(|&v| g.distance(center, v).unwrap() <= 2)
            .count();
        assert_eq!(ball.len(), by_distance);
    }

    #[test]
    fn stabilizer_maps_fix_origin_and_preserve_edges() {
        for g in [cycle(6), torus(4, 2), build_topology(TopologyDescriptor::complete(4)).unwrap()] {
            let origin = VertexId(0);
            let maps = g.stabilizer_maps(origin).unwrap();
            assert!(!maps.is_empty());
            for map in &maps {
                assert_eq!(map[origin.idx()], origin);
                for v in g.vertices() {
                    let mut mapped: Vec<VertexId> =
                        g.neighbors(v).unwrap().iter().map(|&w| map[w.idx()]).collect();
                    mapped.sort_unstable();
                    assert_eq!(mapped.as_slice(), g.neighbors(map[v.idx()]).unwrap());
                }
            }
        }
    }

    #[test]
    fn parse_descriptors() {
        assert_eq!("cycle:8".parse::<TopologyDescriptor>().unwrap(), TopologyDescriptor::cycle(8));
        assert_eq!("torus:4:2".parse::<TopologyDescriptor>().unwrap(), TopologyDescriptor::torus(4, 2));
        assert_eq!(
            "treeball:3:2".parse::<TopologyDescriptor>().unwrap(),
            TopologyDescriptor::tree_ball(3, 2)
        );
        assert_eq!("complete:5".parse::<TopologyDescriptor>().unwrap(), TopologyDescriptor::complete(5));
        assert!("torus:4".parse::<TopologyDescriptor>().is_err());
        assert!("blob:3".parse::<TopologyDescriptor>().is_err());
        assert!("cycle:2".parse::<TopologyDescriptor>().is_err());
    }
}
