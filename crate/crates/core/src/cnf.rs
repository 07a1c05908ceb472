//! Clause encoding of gate netlists, plus DIMACS import and export.

use std::fmt::{self, Write as _};

use crate::error::{Error, Result};
use crate::netlist::{GateKind, GateNetlist};

/// A literal: variable index (0-based) with a polarity.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Lit {
    pub var: usize,
    pub positive: bool,
}

impl Lit {
    pub fn pos(var: usize) -> Self {
        Lit { var, positive: true }
    }

    pub fn neg(var: usize) -> Self {
        Lit { var, positive: false }
    }

    pub fn new(var: usize, positive: bool) -> Self {
        Lit { var, positive }
    }

    /// Polarity as `+1.0` / `-1.0`.
    #[inline]
    pub fn sign(self) -> f64 {
        if self.positive {
            1.0
        } else {
            -1.0
        }
    }

    #[inline]
    pub fn eval(self, assignment: &[bool]) -> bool {
        assignment[self.var] == self.positive
    }

    fn dimacs(self) -> i64 {
        let v = self.var as i64 + 1;
        if self.positive {
            v
        } else {
            -v
        }
    }
}

impl fmt::Display for Lit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.dimacs())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClauseSystem {
    pub num_vars: usize,
    pub clauses: Vec<Vec<Lit>>,
    /// Fixed values, indexed by variable.
    pub units: Vec<Option<bool>>,
    /// Circuit node name of each variable.
    pub node_map: Vec<String>,
}

impl ClauseSystem {
    /// Checks the structural invariants.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidClauses(msg));
        if self.units.len() != self.num_vars || self.node_map.len() != self.num_vars {
            return bad("units/node_map length differs from num_vars".into());
        }
        let mut used = vec![false; self.num_vars];
        for (ci, clause) in self.clauses.iter().enumerate() {
            if clause.is_empty() {
                return bad(format!("clause {ci} is empty"));
            }
            for (k, l) in clause.iter().enumerate() {
                if l.var >= self.num_vars {
                    return bad(format!("clause {ci} references variable {}", l.var));
                }
                if clause[..k].iter().any(|o| o.var == l.var && o.positive != l.positive) {
                    return bad(format!("clause {ci} is tautological in variable {}", l.var));
                }
                used[l.var] = true;
            }
        }
        for (v, u) in used.iter().enumerate() {
            if !u && self.units[v].is_none() {
                return bad(format!("variable {v} is unconstrained"));
            }
        }
        Ok(())
    }

    pub fn is_unit(&self, var: usize) -> bool {
        self.units[var].is_some()
    }

    /// Variables not fixed by a unit.
    pub fn free_vars(&self) -> Vec<usize> {
        (0..self.num_vars).filter(|&v| self.units[v].is_none()).collect()
    }

    /// Exact Boolean evaluation: every clause and every unit holds.
    pub fn satisfied_by(&self, assignment: &[bool]) -> bool {
        assignment.len() == self.num_vars
            && self
                .units
                .iter()
                .zip(assignment)
                .all(|(u, &a)| u.is_none_or(|u| u == a))
            && self
                .clauses
                .iter()
                .all(|c| c.iter().any(|l| l.eval(assignment)))
    }

    pub fn var_named(&self, name: &str) -> Option<usize> {
        self.node_map.iter().position(|n| n == name)
    }

    fn register(&self, prefix: char, assignment: &[bool]) -> Option<u64> {
        let mut value = 0u64;
        let mut found = false;
        for bit in 0..64 {
            match self.var_named(&format!("{prefix}{bit}")) {
                Some(v) => {
                    found = true;
                    if assignment[v] {
                        value |= 1 << bit;
                    }
                }
                None => break,
            }
        }
        found.then_some(value)
    }

    /// Reads the factor registers (`p0..`, `q0..`) from an assignment.
    pub fn decode_factors(&self, assignment: &[bool]) -> Option<(u64, u64)> {
        Some((
            self.register('p', assignment)?,
            self.register('q', assignment)?,
        ))
    }

    /// Reads the product register (`m0..`).
    pub fn decode_product(&self, assignment: &[bool]) -> Option<u64> {
        self.register('m', assignment)
    }

    pub fn export_dimacs(&self) -> String {
        let n_units = self.units.iter().filter(|u| u.is_some()).count();
        let mut out = String::new();
        for (v, name) in self.node_map.iter().enumerate() {
            let _ = writeln!(out, "c node {} {}", v + 1, name);
        }
        let _ = writeln!(out, "p cnf {} {}", self.num_vars, self.clauses.len() + n_units);
        for clause in &self.clauses {
            for l in clause {
                let _ = write!(out, "{l} ");
            }
            out.push_str("0\n");
        }
        for (v, u) in self.units.iter().enumerate() {
            if let Some(val) = u {
                let _ = writeln!(out, "{} 0", Lit::new(v, *val));
            }
        }
        out
    }

    /// Parses DIMACS CNF. Single-literal clauses become units; `c node <var>
    /// <name>` comments restore the node map.
    pub fn parse_dimacs(text: &str) -> Result<Self> {
        let err = |line: usize, msg: &str| Error::Dimacs { line, msg: msg.to_string() };
        let mut header: Option<(usize, usize, usize)> = None;
        let mut names: Vec<(usize, String, usize)> = Vec::new();
        let mut raw: Vec<(Vec<i64>, usize)> = Vec::new();
        let mut current: Vec<i64> = Vec::new();
        let mut current_line = 0;

        for (idx, line) in text.lines().enumerate() {
            let lineno = idx + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed.starts_with('%') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('c') {
                let mut it = rest.split_whitespace();
                if it.next() == Some("node") {
                    let var = it
                        .next()
                        .and_then(|s| s.parse::<usize>().ok())
                        .ok_or_else(|| err(lineno, "bad node comment"))?;
                    let name = it.next().ok_or_else(|| err(lineno, "node comment without name"))?;
                    names.push((var, name.to_string(), lineno));
                }
                continue;
            }
            if trimmed.starts_with('p') {
                if header.is_some() {
                    return Err(err(lineno, "duplicate header"));
                }
                let parts: Vec<&str> = trimmed.split_whitespace().collect();
                if parts.len() != 4 || parts[0] != "p" || parts[1] != "cnf" {
                    return Err(err(lineno, "malformed header, expected `p cnf V C`"));
                }
                let v = parts[2].parse().map_err(|_| err(lineno, "bad variable count"))?;
                let c = parts[3].parse().map_err(|_| err(lineno, "bad clause count"))?;
                header = Some((v, c, lineno));
                continue;
            }
            let (num_vars, _, _) = header.ok_or_else(|| err(lineno, "clause before header"))?;
            for tok in trimmed.split_whitespace() {
                let lit: i64 = tok.parse().map_err(|_| err(lineno, "bad literal"))?;
                if current.is_empty() {
                    current_line = lineno;
                }
                if lit == 0 {
                    if current.is_empty() {
                        return Err(err(lineno, "empty clause"));
                    }
                    raw.push((std::mem::take(&mut current), current_line));
                } else {
                    if lit.unsigned_abs() as usize > num_vars {
                        return Err(err(lineno, "literal out of range"));
                    }
                    current.push(lit);
                }
            }
        }
        let (num_vars, num_clauses, header_line) = header.ok_or_else(|| err(0, "missing header"))?;
        if !current.is_empty() {
            return Err(err(current_line, "unterminated clause"));
        }
        if raw.len() != num_clauses {
            return Err(err(
                header_line,
                &format!("header declares {num_clauses} clauses, found {}", raw.len()),
            ));
        }

        let mut units: Vec<Option<bool>> = vec![None; num_vars];
        let mut clauses = Vec::new();
        for (lits, line) in raw {
            let lits: Vec<Lit> = lits
                .iter()
                .map(|&l| Lit::new(l.unsigned_abs() as usize - 1, l > 0))
                .collect();
            if let [l] = lits[..] {
                match units[l.var] {
                    Some(prev) if prev != l.positive => {
                        return Err(err(line, "conflicting unit clauses"));
                    }
                    _ => units[l.var] = Some(l.positive),
                }
            } else {
                clauses.push(lits);
            }
        }

        let mut node_map: Vec<String> = (1..=num_vars).map(|v| format!("x{v}")).collect();
        for (var, name, line) in names {
            if var == 0 || var > num_vars {
                return Err(err(line, "node comment out of range"));
            }
            node_map[var - 1] = name;
        }

        let cs = ClauseSystem {
            num_vars,
            clauses,
            units,
            node_map,
        };
        cs.validate().map_err(|e| err(header_line, &e.to_string()))?;
        Ok(cs)
    }
}

/// Encodes the netlist with the product fixed to `n`.
///
/// Units: product bits of `n`, ground = false, both factor MSBs = true and,
/// for odd `n`, both factor LSBs = true.
pub fn encode_cnf(net: &GateNetlist, n: u64) -> Result<ClauseSystem> {
    let bits = net.product_width();
    if bits < 64 && n >> bits != 0 {
        return Err(Error::NotRepresentable { n, bits });
    }
    let num_vars = net.nodes.len();
    let mut clauses: Vec<Vec<Lit>> = Vec::new();
    for g in &net.gates {
        let t = &g.terminals;
        match g.kind {
            GateKind::And => and_clauses(&mut clauses, t[2], t[0], t[1]),
            GateKind::FullAdder => {
                xor3_clauses(&mut clauses, t[3], t[0], t[1], t[2]);
                maj3_clauses(&mut clauses, t[4], t[0], t[1], t[2]);
            }
        }
    }

    let mut units: Vec<Option<bool>> = vec![None; num_vars];
    let mut fix = |var: usize, val: bool| -> Result<()> {
        match units[var] {
            Some(prev) if prev != val => Err(Error::InvalidClauses(format!(
                "conflicting units on {}",
                net.nodes[var]
            ))),
            _ => {
                units[var] = Some(val);
                Ok(())
            }
        }
    };
    for (k, &node) in net.product_bits.iter().enumerate() {
        fix(node, (n >> k) & 1 == 1)?;
    }
    fix(net.ground, false)?;
    fix(*net.p_bits.last().unwrap(), true)?;
    fix(*net.q_bits.last().unwrap(), true)?;
    if n & 1 == 1 {
        fix(net.p_bits[0], true)?;
        fix(net.q_bits[0], true)?;
    }

    let cs = ClauseSystem {
        num_vars,
        clauses,
        units,
        node_map: net.nodes.clone(),
    };
    cs.validate()?;
    Ok(cs)
}

/// z <-> a & b
fn and_clauses(out: &mut Vec<Vec<Lit>>, z: usize, a: usize, b: usize) {
    out.push(vec![Lit::neg(z), Lit::pos(a)]);
    out.push(vec![Lit::neg(z), Lit::pos(b)]);
    out.push(vec![Lit::pos(z), Lit::neg(a), Lit::neg(b)]);
}

/// s <-> a ^ b ^ c: one clause per input pattern, forbidding the wrong sum.
fn xor3_clauses(out: &mut Vec<Vec<Lit>>, s: usize, a: usize, b: usize, c: usize) {
    for pattern in 0..8u8 {
        let (va, vb, vc) = (pattern & 1 == 1, pattern & 2 == 2, pattern & 4 == 4);
        let parity = va ^ vb ^ vc;
        out.push(vec![
            Lit::new(a, !va),
            Lit::new(b, !vb),
            Lit::new(c, !vc),
            Lit::new(s, parity),
        ]);
    }
}

/// m <-> majority(a, b, c)
fn maj3_clauses(out: &mut Vec<Vec<Lit>>, m: usize, a: usize, b: usize, c: usize) {
    for (x, y) in [(a, b), (a, c), (b, c)] {
        out.push(vec![Lit::neg(x), Lit::neg(y), Lit::pos(m)]);
    }
    for (x, y) in [(a, b), (a, c), (b, c)] {
        out.push(vec![Lit::pos(x), Lit::pos(y), Lit::neg(m)]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::netlist::build_multiplier;

    /// Exhaustive enumeration over the free variables.
    fn all_solutions(cs: &ClauseSystem) -> Vec<Vec<bool>> {
        let free = cs.free_vars();
        assert!(free.len() <= 30);
        let mut base: Vec<bool> = cs.units.iter().map(|u| u.unwrap_or(false)).collect();
        let mut sols = Vec::new();
        for mask in 0..1u64 << free.len() {
            for (k, &v) in free.iter().enumerate() {
                base[v] = (mask >> k) & 1 == 1;
            }
            if cs.satisfied_by(&base) {
                sols.push(base.clone());
            }
        }
        sols
    }

    fn trial_division(n: u64, pw: usize, qw: usize) -> Vec<(u64, u64)> {
        let mut out = Vec::new();
        for p in 1u64 << (pw - 1)..1 << pw {
            if n % p == 0 {
                let q = n / p;
                if q >> (qw - 1) == 1 {
                    out.push((p, q));
                }
            }
        }
        out
    }

    #[test]
    fn and_gate_forces_inputs_by_propagation() {
        let mut clauses = Vec::new();
        and_clauses(&mut clauses, 0, 1, 2);
        let mut units = [Some(true), None, None];
        // unit propagation to fixpoint
        loop {
            let mut changed = false;
            for c in &clauses {
                let open: Vec<&Lit> = c.iter().filter(|l| units[l.var].is_none()).collect();
                let sat = c.iter().any(|l| units[l.var] == Some(l.positive));
                if !sat && open.len() == 1 {
                    units[open[0].var] = Some(open[0].positive);
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        assert_eq!(units, [Some(true), Some(true), Some(true)]);
    }

    #[test]
    fn gate_clauses_match_truth_tables() {
        for pattern in 0..32u8 {
            let v: Vec<bool> = (0..5).map(|k| (pattern >> k) & 1 == 1).collect();
            let mut c = Vec::new();
            xor3_clauses(&mut c, 3, 0, 1, 2);
            let xor_ok = c.iter().all(|cl| cl.iter().any(|l| l.eval(&v)));
            assert_eq!(xor_ok, v[3] == (v[0] ^ v[1] ^ v[2]));
            let mut c = Vec::new();
            maj3_clauses(&mut c, 4, 0, 1, 2);
            let maj_ok = c.iter().all(|cl| cl.iter().any(|l| l.eval(&v)));
            let maj = (v[0] as u8 + v[1] as u8 + v[2] as u8) >= 2;
            assert_eq!(maj_ok, v[4] == maj);
        }
    }

    #[test]
    fn fifteen_decodes_to_three_times_five() {
        let net = build_multiplier(2, 3).unwrap();
        let cs = encode_cnf(&net, 15).unwrap();
        let sols = all_solutions(&cs);
        assert!(!sols.is_empty());
        let expected = trial_division(15, 2, 3);
        assert_eq!(expected, vec![(3, 5)]);
        for s in &sols {
            assert_eq!(cs.decode_factors(s), Some((3, 5)));
            assert_eq!(cs.decode_product(s), Some(15));
        }
    }

    #[test]
    fn every_solution_multiplies_to_n() {
        for (n, pw, qw) in [(4, 2, 2), (21, 2, 3), (35, 3, 3), (77, 3, 4), (143, 4, 4)] {
            let net = build_multiplier(pw, qw).unwrap();
            let cs = encode_cnf(&net, n).unwrap();
            if cs.free_vars().len() > 30 {
                continue;
            }
            let sols = all_solutions(&cs);
            let mut pairs: Vec<_> = sols.iter().map(|s| cs.decode_factors(s).unwrap()).collect();
            pairs.sort();
            pairs.dedup();
            assert_eq!(pairs, trial_division(n, pw, qw), "n = {n}");
        }
    }

    #[test]
    fn paper_instance_solution_is_consistent() {
        let net = build_multiplier(9, 10).unwrap();
        let cs = encode_cnf(&net, 497_503).unwrap();
        assert_eq!(trial_division(497_503, 9, 10), vec![(499, 997)]);
        let assignment = net.simulate(499, 997);
        assert!(cs.satisfied_by(&assignment));
        assert_eq!(cs.decode_factors(&assignment), Some((499, 997)));
        assert_eq!(499 * 997, 497_503);
    }

    #[test]
    fn rejects_unrepresentable_product() {
        let net = build_multiplier(2, 2).unwrap();
        assert!(matches!(
            encode_cnf(&net, 16),
            Err(Error::NotRepresentable { n: 16, bits: 4 })
        ));
    }

    #[test]
    fn dimacs_header_counts() {
        let cs = encode_cnf(&build_multiplier(2, 3).unwrap(), 15).unwrap();
        let text = cs.export_dimacs();
        let header = text.lines().find(|l| l.starts_with("p ")).unwrap();
        let units = cs.units.iter().flatten().count();
        assert_eq!(header, format!("p cnf {} {}", cs.num_vars, cs.clauses.len() + units));
        assert_eq!(ClauseSystem::parse_dimacs(&text).unwrap(), cs);
    }

    #[test]
    fn dimacs_errors_carry_line_numbers() {
        let e = ClauseSystem::parse_dimacs("p cnf 2 1\n0\n").unwrap_err();
        assert!(matches!(e, Error::Dimacs { line: 2, .. }), "{e}");
        let e = ClauseSystem::parse_dimacs("p cnf 2 1\n1 3 0\n").unwrap_err();
        assert!(matches!(e, Error::Dimacs { line: 2, .. }), "{e}");
        let e = ClauseSystem::parse_dimacs("p dnf 2 1\n1 2 0\n").unwrap_err();
        assert!(matches!(e, Error::Dimacs { line: 1, .. }), "{e}");
        let e = ClauseSystem::parse_dimacs("c hi\np cnf 2 2\n1 2 0\n").unwrap_err();
        assert!(matches!(e, Error::Dimacs { line: 2, .. }), "{e}");
        let e = ClauseSystem::parse_dimacs("p cnf 2 2\n1 0\n-1 0\n").unwrap_err();
        assert!(matches!(e, Error::Dimacs { line: 3, .. }), "{e}");
    }
}
