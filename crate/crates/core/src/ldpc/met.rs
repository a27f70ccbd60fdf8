//! Multi-edge-type ensembles and a socket-based progressive construction.
//!
//! Degree-2 variables of single-type ensembles are first threaded into a chain
//! through the checks. The rest are placed in order of decreasing degree. Each edge
//! takes a random free socket of the right edge type, rejecting checks that are
//! already adjacent to the variable or that would close a 4-cycle through it.
//! Columns are shuffled at the end so node types are spread evenly along the block.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use libm::{fabs, floor, round};
use rand_core::RngCore;

use super::SparseParityCheck;
use crate::rng::stream;
use crate::{Error, Result};

/// Share of variable nodes with the given number of edges of each type.
#[derive(Debug, Clone, PartialEq)]
pub struct VarType {
    pub fraction: f64,
    pub degrees: Vec<u32>,
}

/// Check-node count per variable node with the given number of edges of each type.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckType {
    pub fraction: f64,
    pub degrees: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetEnsemble {
    pub name: String,
    pub vars: Vec<VarType>,
    pub checks: Vec<CheckType>,
}

fn vt(fraction: f64, degrees: &[u32]) -> VarType {
    VarType {
        fraction,
        degrees: degrees.to_vec(),
    }
}

fn ct(fraction: f64, degrees: &[u32]) -> CheckType {
    CheckType {
        fraction,
        degrees: degrees.to_vec(),
    }
}

impl MetEnsemble {
    /// Three-edge-type ensemble of rate 0.097 for SNR near 0.17.
    pub fn rate_0_1() -> Self {
        Self {
            name: "met-r0.10".into(),
            vars: vec![vt(0.0775, &[2, 21, 0]), vt(0.0475, &[3, 21, 0]), vt(0.875, &[0, 0, 1])],
            checks: vec![ct(0.0105, &[10, 0, 0]), ct(0.0175, &[11, 0, 0]), ct(0.875, &[0, 3, 1])],
        }
    }

    /// Rate-1/20 three-edge-type ensemble for SNR near 0.1.
    pub fn rate_0_05() -> Self {
        Self {
            name: "met-r0.05".into(),
            vars: vec![vt(0.0372, &[2, 47, 0]), vt(0.0228, &[3, 47, 0]), vt(0.94, &[0, 0, 1])],
            checks: vec![ct(0.0072, &[14, 0, 0]), ct(0.0028, &[15, 0, 0]), ct(0.94, &[0, 3, 1])],
        }
    }

    /// Rate-1/2 irregular ensemble with variable degrees {2, 3, 8} and check degrees {6, 7}.
    pub fn rate_0_5() -> Self {
        Self::irregular("irr-r0.50", &[(2, 0.30013), (3, 0.28395), (8, 0.41592)], &[(6, 0.22919), (7, 0.77081)])
    }

    /// Rate-1/4 irregular ensemble with variable degrees {2, 3, 4, 5, 12} and check degrees {4, 5}.
    pub fn rate_0_25() -> Self {
        Self::irregular(
            "irr-r0.25",
            &[(2, 0.34948), (3, 0.15053), (4, 0.11516), (5, 0.06478), (12, 0.32005)],
            &[(4, 0.4), (5, 0.6)],
        )
    }

    /// Single-edge-type ensemble from edge-perspective degree distributions.
    pub fn irregular(name: &str, lambda: &[(u32, f64)], rho: &[(u32, f64)]) -> Self {
        let sl: f64 = lambda.iter().map(|(d, w)| w / *d as f64).sum();
        let sr: f64 = rho.iter().map(|(d, w)| w / *d as f64).sum();
        let m_over_n = sr / sl;
        Self {
            name: name.into(),
            vars: lambda.iter().map(|(d, w)| vt(w / *d as f64 / sl, &[*d])).collect(),
            checks: rho.iter().map(|(d, w)| ct(w / *d as f64 / sr * m_over_n, &[*d])).collect(),
        }
    }

    pub fn edge_types(&self) -> usize {
        self.vars.first().map_or(0, |v| v.degrees.len())
    }

    pub fn design_rate(&self) -> f64 {
        1.0 - self.checks.iter().map(|c| c.fraction).sum::<f64>()
    }

    /// Checks shape, fractions and per-type edge balance (to 1e-3 relative).
    pub fn validate(&self) -> Result<()> {
        let t = self.edge_types();
        if t == 0 || self.checks.is_empty() {
            return Err(Error::InvalidCode("ensemble has no node types"));
        }
        if self.vars.iter().any(|v| v.degrees.len() != t) || self.checks.iter().any(|c| c.degrees.len() != t) {
            return Err(Error::InvalidCode("inconsistent edge-type count"));
        }
        let mut fractions = self.vars.iter().map(|v| v.fraction).chain(self.checks.iter().map(|c| c.fraction));
        if fractions.any(|f| !(f > 0.0)) {
            return Err(Error::InvalidCode("node fractions must be positive"));
        }
        if fabs(self.vars.iter().map(|v| v.fraction).sum::<f64>() - 1.0) > 1e-9 {
            return Err(Error::InvalidCode("variable fractions must sum to 1"));
        }
        if !(self.design_rate() > 0.0) {
            return Err(Error::InvalidCode("design rate must be positive"));
        }
        for i in 0..t {
            let ev: f64 = self.vars.iter().map(|v| v.fraction * v.degrees[i] as f64).sum();
            let ec: f64 = self.checks.iter().map(|c| c.fraction * c.degrees[i] as f64).sum();
            if !(ev > 0.0) || fabs(ev - ec) > 1e-3 * ev {
                return Err(Error::InvalidCode("unbalanced edge type"));
            }
        }
        Ok(())
    }
}

/// Splits `total` into integer counts proportional to `weights` (largest remainder).
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * total as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| floor(*e) as usize).collect();
    let mut rest = total - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - floor(exact[a]);
        let fb = exact[b] - floor(exact[b]);
        fb.partial_cmp(&fa).unwrap_or(core::cmp::Ordering::Equal)
    });
    for &i in order.iter().cycle() {
        if rest == 0 {
            break;
        }
        counts[i] += 1;
        rest -= 1;
    }
    counts
}

fn below(rng: &mut impl RngCore, n: usize) -> usize {
    (rng.next_u64() % n as u64) as usize
}

struct Builder {
    var_adj: Vec<Vec<u32>>,
    check_adj: Vec<Vec<u32>>,
    stamp: Vec<u32>,
    /// Placed edges per edge type, for rewiring.
    placed: Vec<Vec<(u32, u32)>>,
}

impl Builder {
    fn mark(&mut self, v: usize, c: u32) {
        let tag = v as u32 + 1;
        self.stamp[c as usize] = tag;
        for &w in &self.check_adj[c as usize] {
            if w as usize != v {
                for &c2 in &self.var_adj[w as usize] {
                    self.stamp[c2 as usize] = tag;
                }
            }
        }
    }

    fn connect(&mut self, t: usize, v: usize, c: u32) {
        self.var_adj[v].push(c);
        self.check_adj[c as usize].push(v as u32);
        self.placed[t].push((c, v as u32));
    }

    fn disconnect(&mut self, c: u32, w: u32) {
        self.var_adj[w as usize].retain(|&x| x != c);
        self.check_adj[c as usize].retain(|&x| x != w);
    }
}

const TRIES: usize = 64;

/// Builds a length-`n` parity-check matrix from `ens`, deterministically in `seed`.
pub fn generate_code(ens: &MetEnsemble, n: usize, seed: u64) -> Result<SparseParityCheck> {
    ens.validate()?;
    let t_count = ens.edge_types();
    let var_counts = apportion(n, &ens.vars.iter().map(|v| v.fraction).collect::<Vec<_>>());
    let m_total = round(n as f64 * (1.0 - ens.design_rate())) as usize;
    let check_counts = apportion(m_total, &ens.checks.iter().map(|c| c.fraction).collect::<Vec<_>>());
    if var_counts.iter().any(|&c| c == 0) || check_counts.iter().any(|&c| c == 0) {
        return Err(Error::InvalidCode("block too short for the ensemble"));
    }
    let mut rng = stream(seed, 0x6d65_7400);

    let mut var_deg: Vec<&[u32]> = Vec::with_capacity(n);
    for (ty, &cnt) in ens.vars.iter().zip(&var_counts) {
        var_deg.extend(core::iter::repeat_n(ty.degrees.as_slice(), cnt));
    }
    let mut check_deg: Vec<Vec<u32>> = Vec::with_capacity(m_total);
    for (ty, &cnt) in ens.checks.iter().zip(&check_counts) {
        check_deg.extend(core::iter::repeat_n(ty.degrees.clone(), cnt));
    }

    // Match check sockets to variable sockets per edge type.
    for t in 0..t_count {
        let ev: i64 = var_deg.iter().map(|d| d[t] as i64).sum();
        let mut diff = ev - check_deg.iter().map(|d| d[t] as i64).sum::<i64>();
        let holders: Vec<usize> = (0..m_total).filter(|&c| check_deg[c][t] > 0).collect();
        if holders.is_empty() {
            return Err(Error::InvalidCode("edge type without checks"));
        }
        let mut i = below(&mut rng, holders.len());
        let mut guard = 0usize;
        while diff != 0 {
            let c = holders[i % holders.len()];
            if diff > 0 {
                check_deg[c][t] += 1;
                diff -= 1;
            } else if check_deg[c][t] > 1 {
                check_deg[c][t] -= 1;
                diff += 1;
            }
            i += 1;
            guard += 1;
            if guard > 4 * (holders.len() + diff.unsigned_abs() as usize) {
                return Err(Error::InvalidCode("cannot balance sockets"));
            }
        }
    }

    let mut b = Builder {
        var_adj: vec![Vec::new(); n],
        check_adj: vec![Vec::new(); m_total],
        stamp: vec![0; m_total],
        placed: vec![Vec::new(); t_count],
    };

    // Degree-2 variables on a single edge type form a chain through the checks, so
    // they close no short cycles among themselves.
    let mut chained = vec![false; n];
    for t in 0..t_count {
        let twos: Vec<usize> = (0..n)
            .filter(|&v| var_deg[v][t] == 2 && var_deg[v].iter().sum::<u32>() == 2)
            .collect();
        let mut left: Vec<u32> = check_deg.iter().map(|d| d[t]).collect();
        let mut prev: Option<u32> = None;
        let mut k = 0;
        'rounds: while k < twos.len() {
            let mut seq: Vec<u32> = (0..m_total as u32).filter(|&c| left[c as usize] >= 2).collect();
            for i in (1..seq.len()).rev() {
                seq.swap(i, below(&mut rng, i + 1));
            }
            let mut progressed = false;
            for c in seq {
                if left[c as usize] < 2 || prev.is_some_and(|p| b.check_adj[p as usize].iter().any(|&w| b.var_adj[w as usize].contains(&c))) {
                    continue;
                }
                if let Some(p) = prev {
                    if k == twos.len() {
                        break 'rounds;
                    }
                    let v = twos[k];
                    b.connect(t, v, p);
                    b.connect(t, v, c);
                    chained[v] = true;
                    left[p as usize] -= 1;
                    left[c as usize] -= 1;
                    k += 1;
                    progressed = true;
                }
                prev = Some(c);
            }
            if !progressed {
                break;
            }
        }
        for (c, d) in check_deg.iter_mut().enumerate() {
            d[t] = left[c];
        }
    }

    let mut pools: Vec<Vec<u32>> = vec![Vec::new(); t_count];
    for (c, d) in check_deg.iter().enumerate() {
        for t in 0..t_count {
            pools[t].extend(core::iter::repeat_n(c as u32, d[t] as usize));
        }
    }

    let mut order: Vec<usize> = (0..n).filter(|&v| !chained[v]).collect();
    order.sort_by_key(|&v| core::cmp::Reverse(var_deg[v].iter().sum::<u32>()));

    for &v in &order {
        for t in 0..t_count {
            for _ in 0..var_deg[v][t] {
                let pool = &mut pools[t];
                let tag = v as u32 + 1;
                let mut chosen = None;
                for _ in 0..TRIES {
                    let i = below(&mut rng, pool.len());
                    if b.stamp[pool[i] as usize] != tag {
                        chosen = Some(i);
                        break;
                    }
                }
                if chosen.is_none() {
                    chosen = pool.iter().position(|&c| !b.var_adj[v].contains(&c));
                }
                match chosen {
                    Some(i) => {
                        let c = pool.swap_remove(i);
                        b.connect(t, v, c);
                        b.mark(v, c);
                    }
                    None => {
                        // Every free socket sits on a neighbour of v: rewire a placed edge.
                        let i = below(&mut rng, pool.len());
                        let c0 = pool.swap_remove(i);
                        let placed = &b.placed[t];
                        let mut found = None;
                        let start = below(&mut rng, placed.len().max(1));
                        for k in 0..placed.len() {
                            let j = (start + k) % placed.len();
                            let (c1, w) = placed[j];
                            if w as usize != v && !b.var_adj[v].contains(&c1) && !b.var_adj[w as usize].contains(&c0) {
                                found = Some(j);
                                break;
                            }
                        }
                        let j = found.ok_or(Error::InvalidCode("construction stuck"))?;
                        let (c1, w) = b.placed[t].swap_remove(j);
                        b.disconnect(c1, w);
                        b.connect(t, w as usize, c0);
                        b.connect(t, v, c1);
                        b.mark(v, c1);
                    }
                }
            }
        }
    }

    let mut perm: Vec<u32> = (0..n as u32).collect();
    for i in (1..n).rev() {
        perm.swap(i, below(&mut rng, i + 1));
    }
    let edges: Vec<(u32, u32)> = b.placed.iter().flatten().map(|&(c, v)| (c, perm[v as usize])).collect();
    SparseParityCheck::from_edges(n, m_total, &edges)
}
