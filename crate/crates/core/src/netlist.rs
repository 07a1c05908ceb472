//! Array multiplier built from AND gates and full adders.
//!
//! The partial products `p_i & q_j` are summed row by row with ripple-carry
//! rows of full adders. Every row has exactly `p_width` adders, so the
//! circuit contains `p_width * q_width` AND gates and
//! `p_width * (q_width - 1)` full adders. Carry-ins that are structurally
//! zero are tied to a shared ground node, which the clause encoder fixes to
//! false.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};

pub type NodeId = usize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GateKind {
    And,
    FullAdder,
}

impl GateKind {
    pub fn name(self) -> &'static str {
        match self {
            GateKind::And => "AND",
            GateKind::FullAdder => "FA",
        }
    }
}

/// A gate and its terminals.
///
/// AND: `[a, b, out]`. Full adder: `[a, b, carry_in, sum, carry_out]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Gate {
    pub kind: GateKind,
    pub terminals: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct GateNetlist {
    pub gates: Vec<Gate>,
    pub nodes: Vec<String>,
    pub p_width: usize,
    pub q_width: usize,
    /// Node ids of the factor registers, least significant bit first.
    pub p_bits: Vec<NodeId>,
    pub q_bits: Vec<NodeId>,
    /// Node ids of the product register, least significant bit first.
    pub product_bits: Vec<NodeId>,
    /// Constant-false node feeding the zero carry-ins.
    pub ground: NodeId,
}

#[derive(Default)]
struct Builder {
    nodes: Vec<String>,
    index: HashMap<String, NodeId>,
    gates: Vec<Gate>,
}

impl Builder {
    fn node(&mut self, name: String) -> NodeId {
        debug_assert!(!self.index.contains_key(&name), "duplicate node {name}");
        let id = self.nodes.len();
        self.index.insert(name.clone(), id);
        self.nodes.push(name);
        id
    }

    fn gate(&mut self, kind: GateKind, terminals: Vec<NodeId>) {
        self.gates.push(Gate { kind, terminals });
    }
}

/// Builds the schoolbook array multiplier for `p_width x q_width` factors.
pub fn build_multiplier(p_width: usize, q_width: usize) -> Result<GateNetlist> {
    for w in [p_width, q_width] {
        if w < 2 {
            return Err(Error::WidthTooSmall(w));
        }
    }
    let total = p_width + q_width;
    let mut b = Builder::default();

    let p_bits: Vec<NodeId> = (0..p_width).map(|i| b.node(format!("p{i}"))).collect();
    let q_bits: Vec<NodeId> = (0..q_width).map(|j| b.node(format!("q{j}"))).collect();
    let ground = b.node("gnd".to_string());
    let mut product_bits = vec![usize::MAX; total];

    // pp[j][i] = p_i & q_j; pp[0][0] is product bit 0 directly.
    let mut pp = vec![vec![0; p_width]; q_width];
    for (j, row) in pp.iter_mut().enumerate() {
        for (i, slot) in row.iter_mut().enumerate() {
            let name = if i == 0 && j == 0 {
                "m0".to_string()
            } else {
                format!("pp{i}_{j}")
            };
            let out = b.node(name);
            b.gate(GateKind::And, vec![p_bits[i], q_bits[j], out]);
            *slot = out;
        }
    }
    product_bits[0] = pp[0][0];

    // acc[k] holds the running sum bit of weight k.
    let mut acc: Vec<Option<NodeId>> = vec![None; total];
    for (i, &bit) in pp[0].iter().enumerate() {
        acc[i] = Some(bit);
    }

    for j in 1..q_width {
        let mut carry = ground;
        for i in 0..p_width {
            let w = i + j;
            let a = acc[w].unwrap_or(ground);
            let is_last_row = j == q_width - 1;
            let sum_name = if i == 0 || is_last_row {
                format!("m{w}")
            } else {
                format!("s{j}_{i}")
            };
            let carry_name = if is_last_row && i == p_width - 1 {
                format!("m{}", w + 1)
            } else {
                format!("c{j}_{i}")
            };
            let s = b.node(sum_name);
            let c = b.node(carry_name);
            b.gate(GateKind::FullAdder, vec![a, pp[j][i], carry, s, c]);
            acc[w] = Some(s);
            if i == 0 {
                product_bits[w] = s;
            }
            carry = c;
        }
        acc[j + p_width] = Some(carry);
    }
    for w in q_width..total {
        product_bits[w] = acc[w].expect("final accumulator is complete");
    }

    Ok(GateNetlist {
        gates: b.gates,
        nodes: b.nodes,
        p_width,
        q_width,
        p_bits,
        q_bits,
        product_bits,
        ground,
    })
}

impl GateNetlist {
    pub fn product_width(&self) -> usize {
        self.product_bits.len()
    }

    pub fn count(&self, kind: GateKind) -> usize {
        self.gates.iter().filter(|g| g.kind == kind).count()
    }

    /// Line-oriented dump: one gate per line, kind followed by terminal names.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            out.push_str(g.kind.name());
            for &t in &g.terminals {
                out.push(' ');
                out.push_str(&self.nodes[t]);
            }
            out.push('\n');
        }
        out
    }

    /// Evaluates the circuit forward on concrete factors. Returns the value
    /// of every node.
    pub fn simulate(&self, p: u64, q: u64) -> Vec<bool> {
        let mut val = vec![false; self.nodes.len()];
        for (i, &n) in self.p_bits.iter().enumerate() {
            val[n] = (p >> i) & 1 == 1;
        }
        for (j, &n) in self.q_bits.iter().enumerate() {
            val[n] = (q >> j) & 1 == 1;
        }
        // Gates are emitted in topological order.
        for g in &self.gates {
            let t = &g.terminals;
            match g.kind {
                GateKind::And => val[t[2]] = val[t[0]] && val[t[1]],
                GateKind::FullAdder => {
                    let (a, b, c) = (val[t[0]], val[t[1]], val[t[2]]);
                    val[t[3]] = a ^ b ^ c;
                    val[t[4]] = (a && b) || (a && c) || (b && c);
                }
            }
        }
        val
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = write!(
            s,
            "{}x{} multiplier: {} nodes, {} AND, {} FA",
            self.p_width,
            self.q_width,
            self.nodes.len(),
            self.count(GateKind::And),
            self.count(GateKind::FullAdder)
        );
        s
    }
}
