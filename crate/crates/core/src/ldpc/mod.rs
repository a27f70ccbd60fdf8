//! Multi-edge-type LDPC codes in syndrome form.
//!
//! Bob sends the syndrome `H·u` of his bit vector `u`; Alice decodes toward `u` from
//! her MDR log-likelihood ratios with belief propagation whose check equations are
//! offset by that syndrome.

mod adapt;
mod bp;
mod met;
mod reconcile;

pub use adapt::{adapt_rate, RateAdaptation, MAX_PUNCTURE_FRACTION};
pub use bp::{bp_decode, BpConfig, BpDecoder, DecodeResult, LLR_CLAMP};
pub use met::{generate_code, CheckType, MetEnsemble, VarType};
pub use reconcile::{
    efficiency_trial, measure_efficiency, verify_blocks, BlockAccounting, EfficiencyReport, TrialOutcome, Verdict,
    HASH_BITS,
};

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Sparse parity-check matrix with both row and column adjacency.
///
/// Edges are numbered in row-major order; `col_edges` maps each column entry to its
/// edge number so messages can be stored once per edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SparseParityCheck {
    n: usize,
    m: usize,
    row_ptr: Vec<u32>,
    row_vars: Vec<u32>,
    col_ptr: Vec<u32>,
    col_checks: Vec<u32>,
    col_edges: Vec<u32>,
}

/// Node-degree histogram, `(degree, count)` sorted by degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DegreeProfile {
    pub var: Vec<(usize, usize)>,
    pub check: Vec<(usize, usize)>,
}

fn histogram(degrees: impl Iterator<Item = usize>) -> Vec<(usize, usize)> {
    let mut h: Vec<(usize, usize)> = Vec::new();
    for d in degrees {
        match h.binary_search_by_key(&d, |e| e.0) {
            Ok(i) => h[i].1 += 1,
            Err(i) => h.insert(i, (d, 1)),
        }
    }
    h
}

impl SparseParityCheck {
    /// Builds the matrix from `(check, variable)` pairs.
    pub fn from_edges(n: usize, m: usize, edges: &[(u32, u32)]) -> Result<Self> {
        if n == 0 || m == 0 {
            return Err(Error::InvalidCode("empty matrix"));
        }
        if n > u32::MAX as usize || m > u32::MAX as usize || edges.len() > u32::MAX as usize {
            return Err(Error::InvalidCode("matrix too large"));
        }
        let mut sorted = edges.to_vec();
        sorted.sort_unstable();
        if sorted.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::InvalidCode("duplicate edge"));
        }
        if sorted.iter().any(|&(c, v)| c as usize >= m || v as usize >= n) {
            return Err(Error::InvalidCode("edge index out of range"));
        }
        let mut row_ptr = vec![0u32; m + 1];
        for &(c, _) in &sorted {
            row_ptr[c as usize + 1] += 1;
        }
        for i in 0..m {
            row_ptr[i + 1] += row_ptr[i];
        }
        let row_vars: Vec<u32> = sorted.iter().map(|e| e.1).collect();

        let mut col_ptr = vec![0u32; n + 1];
        for &(_, v) in &sorted {
            col_ptr[v as usize + 1] += 1;
        }
        for i in 0..n {
            col_ptr[i + 1] += col_ptr[i];
        }
        let mut fill = col_ptr.clone();
        let mut col_checks = vec![0u32; sorted.len()];
        let mut col_edges = vec![0u32; sorted.len()];
        for (e, &(c, v)) in sorted.iter().enumerate() {
            let slot = fill[v as usize] as usize;
            col_checks[slot] = c;
            col_edges[slot] = e as u32;
            fill[v as usize] += 1;
        }
        Ok(Self {
            n,
            m,
            row_ptr,
            row_vars,
            col_ptr,
            col_checks,
            col_edges,
        })
    }

    /// Block length.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of parity checks.
    pub fn m_rows(&self) -> usize {
        self.m
    }

    /// Design dimension `n - m_rows`.
    pub fn k(&self) -> usize {
        self.n - self.m
    }

    pub fn design_rate(&self) -> f64 {
        self.k() as f64 / self.n as f64
    }

    pub fn edge_count(&self) -> usize {
        self.row_vars.len()
    }

    /// Variables checked by row `c`.
    pub fn row(&self, c: usize) -> &[u32] {
        &self.row_vars[self.row_ptr[c] as usize..self.row_ptr[c + 1] as usize]
    }

    /// Checks involving column `v`.
    pub fn col(&self, v: usize) -> &[u32] {
        &self.col_checks[self.col_ptr[v] as usize..self.col_ptr[v + 1] as usize]
    }

    pub(crate) fn row_ptr(&self) -> &[u32] {
        &self.row_ptr
    }

    /// Variable index of every edge, in edge order.
    pub(crate) fn edge_vars(&self) -> &[u32] {
        &self.row_vars
    }

    /// Edge numbers of the entries in column `v`.
    pub fn col_edge_ids(&self, v: usize) -> &[u32] {
        &self.col_edges[self.col_ptr[v] as usize..self.col_ptr[v + 1] as usize]
    }

    /// All `(check, variable)` pairs in row-major order.
    pub fn edges(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (0..self.m).flat_map(move |c| self.row(c).iter().map(move |&v| (c as u32, v)))
    }

    pub fn degree_profile(&self) -> DegreeProfile {
        DegreeProfile {
            var: histogram((0..self.n).map(|v| self.col(v).len())),
            check: histogram((0..self.m).map(|c| self.row(c).len())),
        }
    }
}

/// `H·bits` over GF(2); `bits` holds one 0/1 value per position.
pub fn compute_syndrome(bits: &[u8], code: &SparseParityCheck) -> Result<Vec<u8>> {
    if bits.len() != code.n() {
        return Err(Error::LengthMismatch {
            expected: code.n(),
            got: bits.len(),
        });
    }
    Ok((0..code.m_rows())
        .map(|c| code.row(c).iter().fold(0u8, |acc, &v| acc ^ (bits[v as usize] & 1)))
        .collect())
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn hamming74() -> SparseParityCheck {
        let rows: [&[u32]; 3] = [&[0, 1, 2, 4], &[0, 1, 3, 5], &[0, 2, 3, 6]];
        let edges: Vec<(u32, u32)> = rows
            .iter()
            .enumerate()
            .flat_map(|(c, r)| r.iter().map(move |&v| (c as u32, v)))
            .collect();
        SparseParityCheck::from_edges(7, 3, &edges).unwrap()
    }

    #[test]
    fn adjacency_is_consistent() {
        let h = hamming74();
        assert_eq!((h.n(), h.m_rows(), h.k()), (7, 3, 4));
        for c in 0..3 {
            for &v in h.row(c) {
                assert!(h.col(v as usize).contains(&(c as u32)));
            }
        }
        for v in 0..7 {
            for (&c, &e) in h.col(v).iter().zip(h.col_edge_ids(v)) {
                let c = c as usize;
                assert!((h.row_ptr[c]..h.row_ptr[c + 1]).contains(&e));
                assert_eq!(h.row_vars[e as usize], v as u32);
            }
        }
        assert_eq!(h.degree_profile().var, vec![(1, 3), (2, 3), (3, 1)]);
        assert_eq!(h.edges().count(), 12);
    }

    #[test]
    fn rejects_bad_edges() {
        assert!(SparseParityCheck::from_edges(3, 1, &[(0, 1), (0, 1)]).is_err());
        assert!(SparseParityCheck::from_edges(3, 1, &[(0, 3)]).is_err());
        assert!(SparseParityCheck::from_edges(3, 1, &[(1, 0)]).is_err());
    }

    #[test]
    fn syndrome_linearity() {
        let h = hamming74();
        assert_eq!(compute_syndrome(&[0; 7], &h).unwrap(), vec![0, 0, 0]);
        let mut bits = [0u8; 7];
        bits[0] = 1;
        assert_eq!(compute_syndrome(&bits, &h).unwrap(), vec![1, 1, 1]);
        bits[0] = 0;
        bits[4] = 1;
        assert_eq!(compute_syndrome(&bits, &h).unwrap(), vec![1, 0, 0]);
        assert!(compute_syndrome(&[0; 6], &h).is_err());
    }
}
