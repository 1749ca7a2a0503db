//! Independent oracles and helpers shared by the integration tests.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use toponav::geometry::Point;
use toponav::harness::{DecisionContext, GoalPolicy, Scenario, Selection};
use toponav::planner::{teacher_goal_r2r, Goal};
use toponav::topomap::{NodeId, TopoGraph};

pub const SUITES: [&str; 3] = ["apartment.scn", "deadlock.scn", "rooms.scn"];

pub fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn load(name: &str) -> Scenario {
    Scenario::load(&fixture(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

pub fn random_point(rng: &mut ChaCha8Rng, lo: f64, hi: f64) -> Point {
    Point::new(rng.random_range(lo..hi), rng.random_range(lo..hi))
}

pub fn random_path(rng: &mut ChaCha8Rng, len: usize) -> Vec<Point> {
    (0..len).map(|_| random_point(rng, -5.0, 5.0)).collect()
}

// ---------------------------------------------------------------- attention

pub type Mat = Vec<Vec<f64>>;

pub fn matmul(a: &Mat, b: &Mat) -> Mat {
    let (n, k, m) = (a.len(), b.len(), b[0].len());
    let mut out = vec![vec![0.0; m]; n];
    for i in 0..n {
        for j in 0..m {
            let mut s = 0.0;
            for t in 0..k {
                s += a[i][t] * b[t][j];
            }
            out[i][j] = s;
        }
    }
    out
}

/// Plain scaled dot-product self-attention, softmax(QK^T/sqrt(d))V.
pub fn reference_attention(x: &Mat, wq: &Mat, wk: &Mat, wv: &Mat) -> Mat {
    let q = matmul(x, wq);
    let k = matmul(x, wk);
    let v = matmul(x, wv);
    let d = wq[0].len() as f64;
    let n = x.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let logits: Vec<f64> = (0..n)
            .map(|j| q[i].iter().zip(&k[j]).map(|(a, b)| a * b).sum::<f64>() / d.sqrt())
            .collect();
        let m = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = logits.iter().map(|l| (l - m).exp()).collect();
        let z: f64 = e.iter().sum();
        let row: Vec<f64> = (0..v[0].len())
            .map(|c| (0..n).map(|j| e[j] / z * v[j][c]).sum())
            .collect();
        out.push(row);
    }
    out
}

// ---------------------------------------------------------------- metrics

/// Minimum over every monotone alignment of the summed point distances,
/// enumerated explicitly.
pub fn brute_dtw(p: &[Point], r: &[Point]) -> f64 {
    fn walk(p: &[Point], r: &[Point], i: usize, j: usize, acc: f64, best: &mut f64) {
        let acc = acc + p[i].distance(r[j]);
        if i + 1 == p.len() && j + 1 == r.len() {
            if acc < *best {
                *best = acc;
            }
            return;
        }
        if i + 1 < p.len() {
            walk(p, r, i + 1, j, acc, best);
        }
        if j + 1 < r.len() {
            walk(p, r, i, j + 1, acc, best);
        }
        if i + 1 < p.len() && j + 1 < r.len() {
            walk(p, r, i + 1, j + 1, acc, best);
        }
    }
    let mut best = f64::INFINITY;
    walk(p, r, 0, 0, 0.0, &mut best);
    best
}

/// Symmetric Chamfer (mean of the directed means) and Hausdorff distance by
/// all-pairs comparison.
pub fn brute_chamfer_hausdorff(a: &[Point], b: &[Point]) -> (f64, f64) {
    let directed = |x: &[Point], y: &[Point]| {
        let mut sum = 0.0;
        let mut worst: f64 = 0.0;
        for p in x {
            let mut nearest = f64::INFINITY;
            for q in y {
                nearest = nearest.min(p.distance(*q));
            }
            sum += nearest;
            worst = worst.max(nearest);
        }
        (sum / x.len() as f64, worst)
    };
    let (ma, ha) = directed(a, b);
    let (mb, hb) = directed(b, a);
    ((ma + mb) / 2.0, ha.max(hb))
}

// ---------------------------------------------------------------- topomap

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OKind {
    Visited,
    Current,
    Ghost,
}

#[derive(Debug, Clone)]
pub struct ONode {
    pub id: u32,
    pub kind: OKind,
    pub position: Point,
    /// Every waypoint position folded into a ghost.
    pub folded: Vec<Point>,
    pub count: u32,
}

/// Replays a waypoint stream from scratch, recomputing every localization
/// by a global scan over all nodes.
#[derive(Debug, Clone, Default)]
pub struct ReplayMap {
    pub nodes: Vec<ONode>,
    pub edges: BTreeMap<(u32, u32), f64>,
    next: u32,
}

fn nearest(nodes: &[(u32, OKind, Point)], p: Point, gamma: f64) -> Option<(u32, OKind)> {
    let mut best: Option<(f64, u32, OKind)> = None;
    for &(id, kind, q) in nodes {
        let d = p.distance(q);
        let better = match best {
            None => true,
            Some((bd, bid, _)) => d < bd || (d == bd && id < bid),
        };
        if better {
            best = Some((d, id, kind));
        }
    }
    best.filter(|b| b.0 < gamma).map(|b| (b.1, b.2))
}

impl ReplayMap {
    fn pos(&self, id: u32) -> Point {
        self.nodes.iter().find(|n| n.id == id).unwrap().position
    }

    fn link(&mut self, a: u32, b: u32) {
        if a == b {
            return;
        }
        let key = (a.min(b), a.max(b));
        if !self.edges.contains_key(&key) {
            let len = self.pos(a).distance(self.pos(b));
            self.edges.insert(key, len);
        }
    }

    pub fn step(&mut self, agent: Point, waypoints: &[Point], gamma: f64, accumulate: bool) {
        let prev = self.nodes.iter().position(|n| n.kind == OKind::Current);
        let prev_id = prev.map(|i| self.nodes[i].id);
        if let Some(i) = prev {
            self.nodes[i].kind = OKind::Visited;
        }
        let places: Vec<(u32, OKind, Point)> = self
            .nodes
            .iter()
            .filter(|n| n.kind != OKind::Ghost)
            .map(|n| (n.id, n.kind, n.position))
            .collect();
        let cur = match nearest(&places, agent, gamma) {
            Some((id, _)) => {
                self.nodes.iter_mut().find(|n| n.id == id).unwrap().kind = OKind::Current;
                id
            }
            None => {
                let id = self.next;
                self.next += 1;
                self.nodes.push(ONode {
                    id,
                    kind: OKind::Current,
                    position: agent,
                    folded: vec![],
                    count: 1,
                });
                id
            }
        };
        if let Some(p) = prev_id {
            self.link(cur, p);
        }
        let frozen: Vec<(u32, OKind, Point)> = self.nodes.iter().map(|n| (n.id, n.kind, n.position)).collect();
        for &w in waypoints {
            match nearest(&frozen, w, gamma) {
                Some((_, OKind::Current)) => {}
                Some((id, OKind::Visited)) => self.link(cur, id),
                Some((id, OKind::Ghost)) => {
                    let n = self.nodes.iter_mut().find(|n| n.id == id).unwrap();
                    n.folded.push(w);
                    n.count += 1;
                    n.position = if accumulate {
                        let s = n.folded.iter().fold(Point::new(0.0, 0.0), |a, &b| a + b);
                        s * (1.0 / n.folded.len() as f64)
                    } else {
                        w
                    };
                    self.link(cur, id);
                }
                None => {
                    let id = self.next;
                    self.next += 1;
                    self.nodes.push(ONode {
                        id,
                        kind: OKind::Ghost,
                        position: w,
                        folded: vec![w],
                        count: 1,
                    });
                    self.link(cur, id);
                }
            }
        }
    }

    pub fn delete(&mut self, id: u32) {
        self.nodes.retain(|n| n.id != id);
        self.edges.retain(|&(a, b), _| a != id && b != id);
    }
}

/// Describes the first difference between a graph and a replay, if any.
pub fn compare_maps(g: &TopoGraph, r: &ReplayMap, tol: f64) -> Result<(), String> {
    if g.len() != r.nodes.len() {
        return Err(format!("{} nodes vs {} replayed", g.len(), r.nodes.len()));
    }
    for o in &r.nodes {
        let n = g.node(NodeId(o.id)).ok_or_else(|| format!("node {} missing", o.id))?;
        if n.position.distance(o.position) >= tol {
            return Err(format!("node {} at {} vs {}", o.id, n.position, o.position));
        }
        if n.accum_count != o.count {
            return Err(format!("node {} count {} vs {}", o.id, n.accum_count, o.count));
        }
        let kind_ok = matches!(
            (n.kind, o.kind),
            (toponav::topomap::NodeKind::Visited, OKind::Visited)
                | (toponav::topomap::NodeKind::Current, OKind::Current)
                | (toponav::topomap::NodeKind::Ghost, OKind::Ghost)
        );
        if !kind_ok {
            return Err(format!("node {} kind {:?} vs {:?}", o.id, n.kind, o.kind));
        }
    }
    let edges: BTreeMap<(u32, u32), f64> = g.edges().into_iter().map(|(a, b, l)| ((a.0, b.0), l)).collect();
    if edges.keys().collect::<Vec<_>>() != r.edges.keys().collect::<Vec<_>>() {
        return Err(format!("edges {:?} vs {:?}", edges.keys(), r.edges.keys()));
    }
    for (k, l) in &edges {
        if (l - r.edges[k]).abs() >= tol {
            return Err(format!("edge {k:?} length {l} vs {}", r.edges[k]));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- graphs

/// All-pairs shortest paths by Floyd-Warshall over the stored edges.
pub fn floyd_warshall(g: &TopoGraph) -> (Vec<NodeId>, Vec<Vec<f64>>) {
    let ids: Vec<NodeId> = g.ids().collect();
    let n = ids.len();
    let idx: BTreeMap<NodeId, usize> = ids.iter().enumerate().map(|(i, &id)| (id, i)).collect();
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for (a, b, l) in g.edges() {
        d[idx[&a]][idx[&b]] = l;
        d[idx[&b]][idx[&a]] = l;
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    (ids, d)
}

/// Every simple path from `from` to `to` with its length.
pub fn all_simple_paths(g: &TopoGraph, from: NodeId, to: NodeId) -> Vec<(f64, Vec<NodeId>)> {
    fn dfs(g: &TopoGraph, to: NodeId, path: &mut Vec<NodeId>, len: f64, seen: &mut BTreeSet<NodeId>, out: &mut Vec<(f64, Vec<NodeId>)>) {
        let u = *path.last().unwrap();
        if u == to {
            out.push((len, path.clone()));
            return;
        }
        let next: Vec<(NodeId, f64)> = g.neighbors(u).collect();
        for (v, w) in next {
            if seen.insert(v) {
                path.push(v);
                dfs(g, to, path, len + w, seen, out);
                path.pop();
                seen.remove(&v);
            }
        }
    }
    let mut out = Vec::new();
    let mut seen = BTreeSet::from([from]);
    dfs(g, to, &mut vec![from], 0.0, &mut seen, &mut out);
    out
}

// ---------------------------------------------------------------- policies

/// Scripted scorer that prefers ghosts the agent cannot reach (smallest id
/// first) and otherwise behaves like the shortest-path teacher.
pub struct Adversary;

pub fn unreachable_from(ctx: &DecisionContext<'_>, p: Point) -> bool {
    match ctx.space.distance_field(ctx.agent.position) {
        Ok(f) => f.distance_or_inf(p).is_infinite(),
        Err(_) => true,
    }
}

impl GoalPolicy for Adversary {
    fn select(&mut self, ctx: &DecisionContext<'_>) -> toponav::Result<Selection> {
        let field = ctx.space.distance_field(ctx.agent.position)?;
        for g in ctx.graph.ghosts() {
            if field.distance_or_inf(g.position).is_infinite() {
                return Ok(Goal::Node(g.id).into());
            }
        }
        Ok(teacher_goal_r2r(ctx.graph, ctx.agent.position, ctx.goal_field).into())
    }
}
