//! Growing preferential dynamic attachment circuits.
//!
//! A circuit of index `m` keeps one *gap* (external node) per insertion slot:
//! a node of outdegree `s` owns `s + 1` gaps. Choosing a gap uniformly is
//! exactly choosing a parent with probability proportional to outdegree
//! plus one, and the within-sample update is a single append.

use std::io::Write;

use num_rational::BigRational;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub type NodeId = u32;

/// Color of the gap hit by a draw: the outdegree class of its owner.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Color {
    White,
    Blue,
    Red,
}

impl Color {
    pub fn of_outdegree(d: u32) -> Self {
        match d {
            0 => Color::White,
            1 => Color::Blue,
            _ => Color::Red,
        }
    }
}

/// White/blue/red external node counts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColorCounts {
    pub white: u64,
    pub blue: u64,
    pub red: u64,
}

impl ColorCounts {
    /// Nodes of outdegree zero.
    pub fn y0(&self) -> u64 {
        self.white
    }

    /// Nodes of outdegree one.
    pub fn y1(&self) -> u64 {
        self.blue / 2
    }

    pub fn total(&self) -> u64 {
        self.white + self.blue + self.red
    }
}

/// The draws that produced one inserted node, in draw order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleTrace {
    pub node: NodeId,
    pub parents: Vec<NodeId>,
    pub colors: Vec<Color>,
    /// Gap-table size seen by each draw.
    pub totals: Vec<u64>,
}

impl SampleTrace {
    /// Intra-sample `(white, blue, red)` counts after each draw, starting
    /// from the counts seen by the first draw.
    pub fn intra_sample_counts(&self, start: ColorCounts) -> Vec<ColorCounts> {
        let mut c = start;
        let mut out = Vec::with_capacity(self.colors.len() + 1);
        out.push(c);
        for color in &self.colors {
            match color {
                Color::White => {
                    c.white -= 1;
                    c.blue += 2;
                }
                Color::Blue => {
                    c.blue -= 2;
                    c.red += 3;
                }
                Color::Red => c.red += 1,
            }
            out.push(c);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CircuitDump {
    pub m: u32,
    pub n: u64,
    pub outdeg: Vec<u32>,
}

#[derive(Clone, Debug)]
pub struct CircuitState {
    m: u32,
    n: u64,
    outdeg: Vec<u32>,
    gap_owners: Vec<NodeId>,
    terminal_nodes: u64,
    single_child_nodes: u64,
}

/// Uniform integer in `0..bound`, by rejection over the next power of two.
pub fn uniform_index<R: RngCore + ?Sized>(rng: &mut R, bound: u64) -> u64 {
    assert!(bound > 0, "uniform_index over an empty range");
    let mask = bound.next_power_of_two() - 1;
    loop {
        let x = rng.next_u64() & mask;
        if x < bound {
            return x;
        }
    }
}

impl CircuitState {
    /// The originator alone: node 0 with a single white gap.
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(invalid("m must be at least 1"));
        }
        Ok(Self {
            m,
            n: 0,
            outdeg: vec![0],
            gap_owners: vec![0],
            terminal_nodes: 1,
            single_child_nodes: 0,
        })
    }

    /// Grows a circuit to age `n` without recording traces.
    pub fn grown<R: RngCore + ?Sized>(m: u32, n: u64, rng: &mut R) -> Result<Self> {
        let mut c = Self::new(m)?;
        c.reserve(n);
        for _ in 0..n {
            c.grow(rng);
        }
        Ok(c)
    }

    pub fn reserve(&mut self, insertions: u64) {
        self.outdeg.reserve(insertions as usize);
        self.gap_owners
            .reserve(insertions as usize * (self.m as usize + 1));
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn age(&self) -> u64 {
        self.n
    }

    pub fn outdeg(&self) -> &[u32] {
        &self.outdeg
    }

    pub fn gap_owners(&self) -> &[NodeId] {
        &self.gap_owners
    }

    /// Current number of external nodes.
    pub fn gap_total(&self) -> u64 {
        self.gap_owners.len() as u64
    }

    /// `(m+1) n + 1`.
    pub fn expected_gap_total(&self) -> u64 {
        (self.m as u64 + 1) * self.n + 1
    }

    fn draw_node<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> (NodeId, Color, u64) {
        let total = self.gap_owners.len() as u64;
        let v = self.gap_owners[uniform_index(rng, total) as usize];
        let color = self.attach(v);
        (v, color, total)
    }

    fn attach(&mut self, v: NodeId) -> Color {
        let d = &mut self.outdeg[v as usize];
        let color = Color::of_outdegree(*d);
        match color {
            Color::White => {
                self.terminal_nodes -= 1;
                self.single_child_nodes += 1;
            }
            Color::Blue => self.single_child_nodes -= 1,
            Color::Red => {}
        }
        *d += 1;
        self.gap_owners.push(v);
        color
    }

    fn finish_insertion(&mut self) -> NodeId {
        self.n += 1;
        let child = self.n as NodeId;
        self.outdeg.push(0);
        self.gap_owners.push(child);
        self.terminal_nodes += 1;
        child
    }

    /// Inserts node `n + 1`, choosing its `m` parents dynamically.
    pub fn insert_node<R: RngCore + ?Sized>(&mut self, rng: &mut R) -> SampleTrace {
        let m = self.m as usize;
        let mut parents = Vec::with_capacity(m);
        let mut colors = Vec::with_capacity(m);
        let mut totals = Vec::with_capacity(m);
        for _ in 0..m {
            let (v, c, t) = self.draw_node(rng);
            parents.push(v);
            colors.push(c);
            totals.push(t);
        }
        let node = self.finish_insertion();
        SampleTrace {
            node,
            parents,
            colors,
            totals,
        }
    }

    /// Same law as [`insert_node`](Self::insert_node), no trace.
    pub fn grow<R: RngCore + ?Sized>(&mut self, rng: &mut R) {
        for _ in 0..self.m {
            self.draw_node(rng);
        }
        self.finish_insertion();
    }

    /// Inserts a node with prescribed parents and returns the trace and the
    /// conditional probability of each draw.
    pub fn insert_with_parents(
        &mut self,
        parents: &[NodeId],
    ) -> Result<(SampleTrace, Vec<BigRational>)> {
        if parents.len() != self.m as usize {
            return Err(invalid(format!(
                "expected {} parents, got {}",
                self.m,
                parents.len()
            )));
        }
        if let Some(&bad) = parents.iter().find(|&&v| v as u64 > self.n) {
            return Err(invalid(format!("node {bad} is not in the circuit")));
        }
        let mut probs = Vec::with_capacity(parents.len());
        let mut colors = Vec::with_capacity(parents.len());
        let mut totals = Vec::with_capacity(parents.len());
        for &v in parents {
            let total = self.gap_total();
            probs.push(BigRational::new(
                (self.outdeg[v as usize] as i64 + 1).into(),
                (total as i64).into(),
            ));
            totals.push(total);
            colors.push(self.attach(v));
        }
        let node = self.finish_insertion();
        Ok((
            SampleTrace {
                node,
                parents: parents.to_vec(),
                colors,
                totals,
            },
            probs,
        ))
    }

    /// Maintained color counts.
    pub fn color_counts(&self) -> ColorCounts {
        let white = self.terminal_nodes;
        let blue = 2 * self.single_child_nodes;
        ColorCounts {
            white,
            blue,
            red: self.gap_total() - white - blue,
        }
    }

    /// Color counts recomputed from the outdegree sequence.
    pub fn recount_colors(&self) -> ColorCounts {
        let white = self.outdeg.iter().filter(|&&d| d == 0).count() as u64;
        let blue = 2 * self.outdeg.iter().filter(|&&d| d == 1).count() as u64;
        ColorCounts {
            white,
            blue,
            red: self.gap_total() - white - blue,
        }
    }

    /// Outdegree plus indegree; the originator has no parents.
    pub fn degree_of(&self, j: u64) -> Result<u64> {
        if j > self.n {
            return Err(invalid(format!("node {j} not present at age {}", self.n)));
        }
        let indeg = if j == 0 { 0 } else { self.m as u64 };
        Ok(self.outdeg[j as usize] as u64 + indeg)
    }

    /// Full invariant check (linear time).
    pub fn check_invariants(&self) -> Result<()> {
        let tau = self.expected_gap_total();
        if self.gap_total() != tau {
            return Err(Error::InconsistentState(format!(
                "gap table has {} entries, expected {tau}",
                self.gap_total()
            )));
        }
        let mut owned = vec![0u64; self.outdeg.len()];
        for &v in &self.gap_owners {
            owned[v as usize] += 1;
        }
        for (v, (&d, &g)) in self.outdeg.iter().zip(&owned).enumerate() {
            if g != d as u64 + 1 {
                return Err(Error::InconsistentState(format!(
                    "node {v} owns {g} gaps with outdegree {d}"
                )));
            }
        }
        let edges: u64 = self.outdeg.iter().map(|&d| d as u64).sum();
        if edges != self.m as u64 * self.n {
            return Err(Error::InconsistentState(format!(
                "outdegrees sum to {edges}, expected {}",
                self.m as u64 * self.n
            )));
        }
        if self.color_counts() != self.recount_colors() {
            return Err(Error::InconsistentState("color counters drifted".into()));
        }
        Ok(())
    }

    pub fn dump(&self) -> CircuitDump {
        CircuitDump {
            m: self.m,
            n: self.n,
            outdeg: self.outdeg.clone(),
        }
    }
}

/// Writes traces as JSON lines.
pub fn write_traces_jsonl<W: Write>(mut out: W, traces: &[SampleTrace]) -> Result<()> {
    for t in traces {
        serde_json::to_writer(&mut out, t)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
