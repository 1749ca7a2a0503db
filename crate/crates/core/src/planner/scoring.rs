//! Node encoding, goal scoring and goal selection.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::gasa::{gasa_forward, uniform_matrix, GasaWeights};
use crate::error::{Error, Result};
use crate::geometry::{heading_vector, wrap_delta};
use crate::topomap::{NodeId, NodeKind, TopoGraph};
use crate::waypoint::DESCRIPTOR_LEN;
use crate::world::AgentState;

/// Width of a node encoding: descriptor, (cos, sin, distance), visit step.
pub const ENCODING_DIM: usize = DESCRIPTOR_LEN + 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Goal {
    Stop,
    Node(NodeId),
}

/// Per-node encodings in ascending id order.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeEncodings {
    pub ids: Vec<NodeId>,
    pub kinds: Vec<NodeKind>,
    pub features: DMatrix<f64>,
}

/// Encodes each node as its descriptor followed by its pose relative to the
/// agent (cos and sin of the relative bearing, distance) and its latest
/// visit step (0 for ghosts).
pub fn encode_nodes(graph: &TopoGraph, agent: &AgentState) -> NodeEncodings {
    let nodes: Vec<_> = graph.nodes().collect();
    let mut features = DMatrix::zeros(nodes.len(), ENCODING_DIM);
    for (i, n) in nodes.iter().enumerate() {
        for (j, &v) in n.descriptor.iter().take(DESCRIPTOR_LEN).enumerate() {
            features[(i, j)] = v;
        }
        let offset = n.position - agent.position;
        let dist = offset.norm();
        let (c, s) = if dist > 0.0 {
            let rel = wrap_delta(agent.position.bearing_to(n.position) - agent.heading);
            let v = heading_vector(rel);
            (v.x, v.y)
        } else {
            (1.0, 0.0)
        };
        features[(i, DESCRIPTOR_LEN)] = c;
        features[(i, DESCRIPTOR_LEN + 1)] = s;
        features[(i, DESCRIPTOR_LEN + 2)] = dist;
        features[(i, DESCRIPTOR_LEN + 3)] = n.last_visit_step as f64;
    }
    NodeEncodings {
        ids: nodes.iter().map(|n| n.id).collect(),
        kinds: nodes.iter().map(|n| n.kind).collect(),
        features,
    }
}

/// Two-layer feed-forward head mapping an encoding to a scalar score.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreHead {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DVector<f64>,
    pub b2: f64,
}

impl ScoreHead {
    pub fn score(&self, row: &DMatrix<f64>) -> f64 {
        let hidden = (row * &self.w1).transpose() + &self.b1;
        hidden.map(|v| v.max(0.0)).dot(&self.w2) + self.b2
    }
}

/// Everything the learned planner needs: attention, scoring head and the
/// embedding of the stop node.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerWeights {
    pub gasa: GasaWeights,
    pub head: ScoreHead,
    pub stop_embedding: DVector<f64>,
}

impl PlannerWeights {
    pub fn seeded(seed: u64) -> Self {
        let d = ENCODING_DIM;
        let hidden = 16;
        let gasa = GasaWeights::seeded(d, seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
        let w1 = uniform_matrix(&mut rng, d, hidden);
        let b1 = DVector::zeros(hidden);
        let w2 = DVector::from_iterator(hidden, uniform_matrix(&mut rng, hidden, 1).iter().copied());
        let stop_embedding = DVector::from_fn(d, |_, _| rng.random_range(-0.5..0.5));
        PlannerWeights {
            gasa,
            head: ScoreHead { w1, b1, w2, b2: 0.0 },
            stop_embedding,
        }
    }

    /// Plain-text form: one header line per block giving its name and shape,
    /// followed by its values row-major, one matrix row per line.
    pub fn to_text(&self) -> String {
        let mut out = String::from("planner-weights v1\n");
        write_matrix(&mut out, "w_q", &self.gasa.w_q);
        write_matrix(&mut out, "w_k", &self.gasa.w_k);
        write_matrix(&mut out, "w_v", &self.gasa.w_v);
        write_matrix(&mut out, "w_e", &DMatrix::from_element(1, 1, self.gasa.w_e));
        write_matrix(&mut out, "ffn_w1", &self.head.w1);
        write_matrix(&mut out, "ffn_b1", &DMatrix::from_row_slice(1, self.head.b1.len(), self.head.b1.as_slice()));
        write_matrix(&mut out, "ffn_w2", &DMatrix::from_row_slice(1, self.head.w2.len(), self.head.w2.as_slice()));
        write_matrix(&mut out, "ffn_b2", &DMatrix::from_element(1, 1, self.head.b2));
        write_matrix(
            &mut out,
            "stop",
            &DMatrix::from_row_slice(1, self.stop_embedding.len(), self.stop_embedding.as_slice()),
        );
        out
    }

    pub fn from_text(text: &str, source: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            message,
        };
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        match lines.next() {
            Some((_, "planner-weights v1")) => {}
            Some((n, other)) => return Err(err(n, format!("bad header {other:?}"))),
            None => return Err(err(1, "empty weights file".into())),
        }
        let mut blocks = std::collections::BTreeMap::new();
        while let Some((n, header)) = lines.next() {
            if header.is_empty() {
                continue;
            }
            let parts: Vec<&str> = header.split_whitespace().collect();
            let [name, rows, cols] = parts[..] else {
                return Err(err(n, format!("expected `<name> <rows> <cols>`, got {header:?}")));
            };
            let rows: usize = rows.parse().map_err(|e| err(n, format!("rows: {e}")))?;
            let cols: usize = cols.parse().map_err(|e| err(n, format!("cols: {e}")))?;
            let mut values = Vec::with_capacity(rows * cols);
            for _ in 0..rows {
                let (ln, row) = lines.next().ok_or_else(|| err(n, format!("block {name} truncated")))?;
                let parsed: std::result::Result<Vec<f64>, _> = row.split_whitespace().map(str::parse).collect();
                let parsed = parsed.map_err(|e| err(ln, format!("{e}")))?;
                if parsed.len() != cols {
                    return Err(err(ln, format!("expected {cols} values, got {}", parsed.len())));
                }
                values.extend(parsed);
            }
            blocks.insert(name.to_string(), DMatrix::from_row_slice(rows, cols, &values));
        }
        let mut take = |name: &str| {
            blocks
                .remove(name)
                .ok_or_else(|| err(0, format!("missing block {name}")))
        };
        let w_q = take("w_q")?;
        let w_k = take("w_k")?;
        let w_v = take("w_v")?;
        let w_e = take("w_e")?[(0, 0)];
        let w1 = take("ffn_w1")?;
        let b1 = take("ffn_b1")?;
        let w2 = take("ffn_w2")?;
        let b2 = take("ffn_b2")?[(0, 0)];
        let stop = take("stop")?;
        let weights = PlannerWeights {
            gasa: GasaWeights { w_q, w_k, w_v, w_e },
            head: ScoreHead {
                b1: DVector::from_iterator(b1.len(), b1.iter().copied()),
                w2: DVector::from_iterator(w2.len(), w2.iter().copied()),
                w1,
                b2,
            },
            stop_embedding: DVector::from_iterator(stop.len(), stop.iter().copied()),
        };
        weights.validate().map_err(|m| err(0, m))?;
        Ok(weights)
    }

    fn validate(&self) -> std::result::Result<(), String> {
        let d = self.gasa.w_q.nrows();
        if self.stop_embedding.len() != d {
            return Err(format!("stop embedding has {} values, expected {d}", self.stop_embedding.len()));
        }
        if self.head.w1.nrows() != self.gasa.w_v.ncols() {
            return Err("ffn_w1 rows must match w_v columns".into());
        }
        if self.head.b1.len() != self.head.w1.ncols() || self.head.w2.len() != self.head.w1.ncols() {
            return Err("ffn hidden widths disagree".into());
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text()).map_err(|e| Error::io(path, e))
    }
}

fn write_matrix(out: &mut String, name: &str, m: &DMatrix<f64>) {
    let _ = writeln!(out, "{name} {} {}", m.nrows(), m.ncols());
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
}

/// Scores per candidate; index 0 is always the stop node. Masked
/// candidates carry `-inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoalScores {
    pub candidates: Vec<Goal>,
    pub scores: Vec<f64>,
}

/// Applies the scoring head to each row of the attention output and masks
/// visited and current nodes. Row 0 of `gasa_output` is the stop node; the
/// remaining rows follow `encodings`.
pub fn score_nodes(encodings: &NodeEncodings, gasa_output: &DMatrix<f64>, head: &ScoreHead) -> Result<GoalScores> {
    if gasa_output.nrows() != encodings.ids.len() + 1 {
        return Err(Error::Shape(format!(
            "attention output has {} rows for {} nodes plus stop",
            gasa_output.nrows(),
            encodings.ids.len()
        )));
    }
    let mut candidates = vec![Goal::Stop];
    let mut scores = vec![head.score(&gasa_output.rows(0, 1).into_owned())];
    for (i, (&id, &kind)) in encodings.ids.iter().zip(&encodings.kinds).enumerate() {
        candidates.push(Goal::Node(id));
        scores.push(match kind {
            NodeKind::Ghost => head.score(&gasa_output.rows(i + 1, 1).into_owned()),
            NodeKind::Visited | NodeKind::Current => f64::NEG_INFINITY,
        });
    }
    Ok(GoalScores { candidates, scores })
}

/// Full learned-planner pass: encode, prepend stop, attend with the spatial
/// bias, score and mask.
pub fn score_graph(graph: &TopoGraph, agent: &AgentState, weights: &PlannerWeights) -> Result<GoalScores> {
    let enc = encode_nodes(graph, agent);
    let n = enc.ids.len();
    let d = enc.features.ncols();
    let mut x = DMatrix::zeros(n + 1, d);
    if weights.stop_embedding.len() != d {
        return Err(Error::Shape(format!(
            "stop embedding has {} values, encodings have {d}",
            weights.stop_embedding.len()
        )));
    }
    x.row_mut(0).copy_from(&weights.stop_embedding.transpose());
    x.rows_mut(1, n).copy_from(&enc.features);
    // the stop node is joined to every node by a zero-length edge
    let sm = graph.spatial_matrix();
    let e = DMatrix::from_fn(n + 1, n + 1, |i, j| {
        if i == 0 || j == 0 {
            0.0
        } else {
            sm.dist[i - 1][j - 1]
        }
    });
    let out = gasa_forward(&x, &e, &weights.gasa)?;
    score_nodes(&enc, &out, &weights.head)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMode {
    Argmax,
    Sample,
}

/// Picks a goal: the best score (ties to the earlier candidate, so stop and
/// then smaller ids win) or a softmax sample. STOP when everything is masked.
pub fn select_goal<R: Rng + ?Sized>(scores: &GoalScores, mode: SelectMode, rng: &mut R) -> Goal {
    let finite: Vec<usize> = (0..scores.scores.len())
        .filter(|&i| scores.scores[i].is_finite())
        .collect();
    if finite.is_empty() {
        return Goal::Stop;
    }
    match mode {
        SelectMode::Argmax => {
            let mut best = finite[0];
            for &i in &finite[1..] {
                if scores.scores[i] > scores.scores[best] {
                    best = i;
                }
            }
            scores.candidates[best]
        }
        SelectMode::Sample => {
            let max = finite.iter().map(|&i| scores.scores[i]).fold(f64::NEG_INFINITY, f64::max);
            let weights: Vec<f64> = finite.iter().map(|&i| (scores.scores[i] - max).exp()).collect();
            let total: f64 = weights.iter().sum();
            let mut u = rng.random::<f64>() * total;
            for (k, &i) in finite.iter().enumerate() {
                if u < weights[k] {
                    return scores.candidates[i];
                }
                u -= weights[k];
            }
            scores.candidates[*finite.last().expect("non-empty")]
        }
    }
}
