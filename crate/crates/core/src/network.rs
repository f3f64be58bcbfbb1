//! Longitudinal networks: timestamped interaction events between node pairs.

use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::partition::{Domain, PartitionTree};

/// Whether events connect nodes of one set or two.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Directedness {
    /// Undirected pairs among `n` nodes.
    Symmetric { n: usize },
    /// Pairs between `m` row nodes and `n` column nodes.
    Bipartite { m: usize, n: usize },
}

/// One interaction event. Node ids are 0-based; symmetric events have `u < v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetEvent {
    pub u: u32,
    pub v: u32,
    pub t: f64,
}

/// A collection of pairwise point-process realizations sorted by time.
#[derive(Debug, Clone, PartialEq)]
pub struct LongitudinalNetwork {
    directedness: Directedness,
    domain: Domain,
    events: Vec<NetEvent>,
}

impl LongitudinalNetwork {
    /// Builds a symmetric network from 1-based `(u, v, t)` triples; pairs are
    /// stored with `u < v`.
    pub fn symmetric(n: usize, domain: Domain, triples: &[(usize, usize, f64)]) -> Result<Self> {
        if n < 2 {
            return invalid("a network needs at least two nodes");
        }
        let mut events = Vec::with_capacity(triples.len());
        for &(u, v, t) in triples {
            if u == v {
                return invalid("self-interaction events are not allowed");
            }
            if u < 1 || v < 1 || u > n || v > n {
                return invalid("node id out of range");
            }
            let (a, b) = if u < v { (u, v) } else { (v, u) };
            events.push(NetEvent { u: (a - 1) as u32, v: (b - 1) as u32, t });
        }
        Self::finish(Directedness::Symmetric { n }, domain, events)
    }

    /// Builds a bipartite network from 1-based `(row, column, t)` triples.
    pub fn bipartite(m: usize, n: usize, domain: Domain, triples: &[(usize, usize, f64)]) -> Result<Self> {
        if m < 1 || n < 1 {
            return invalid("both node sets must be nonempty");
        }
        let mut events = Vec::with_capacity(triples.len());
        for &(u, v, t) in triples {
            if u < 1 || v < 1 || u > m || v > n {
                return invalid("node id out of range");
            }
            events.push(NetEvent { u: (u - 1) as u32, v: (v - 1) as u32, t });
        }
        Self::finish(Directedness::Bipartite { m, n }, domain, events)
    }

    /// Builds a network from 0-based events that already satisfy the
    /// invariants of `directedness`.
    pub fn from_events(directedness: Directedness, domain: Domain, events: Vec<NetEvent>) -> Result<Self> {
        let ok = events.iter().all(|e| match directedness {
            Directedness::Symmetric { n } => e.u < e.v && (e.v as usize) < n,
            Directedness::Bipartite { m, n } => (e.u as usize) < m && (e.v as usize) < n,
        });
        if !ok {
            return invalid("event endpoints violate the network layout");
        }
        Self::finish(directedness, domain, events)
    }

    fn finish(directedness: Directedness, domain: Domain, mut events: Vec<NetEvent>) -> Result<Self> {
        if events.iter().any(|e| !domain.contains(e.t)) {
            return invalid("event time outside the domain");
        }
        events.sort_by(|a, b| a.t.total_cmp(&b.t).then(a.u.cmp(&b.u)).then(a.v.cmp(&b.v)));
        Ok(Self { directedness, domain, events })
    }

    pub fn directedness(&self) -> Directedness {
        self.directedness
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn events(&self) -> &[NetEvent] {
        &self.events
    }

    pub fn times(&self) -> Vec<f64> {
        self.events.iter().map(|e| e.t).collect()
    }

    /// Pair marks aligned with [`times`](Self::times).
    pub fn marks(&self) -> Vec<(u32, u32)> {
        self.events.iter().map(|e| (e.u, e.v)).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        matches!(self.directedness, Directedness::Symmetric { .. })
    }

    /// Row and column counts of the count matrices.
    pub fn shape(&self) -> (usize, usize) {
        match self.directedness {
            Directedness::Symmetric { n } => (n, n),
            Directedness::Bipartite { m, n } => (m, n),
        }
    }

    pub(crate) fn check_tree(&self, tree: &PartitionTree) -> Result<()> {
        if tree.domain() != self.domain {
            return invalid("partition and network live on different domains");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonicalizes_and_validates() {
        let net = LongitudinalNetwork::symmetric(3, Domain::unit(), &[(2, 1, 0.3), (2, 3, 0.1)]).unwrap();
        assert_eq!(net.events()[0], NetEvent { u: 1, v: 2, t: 0.1 });
        assert_eq!(net.events()[1], NetEvent { u: 0, v: 1, t: 0.3 });
        assert!(LongitudinalNetwork::symmetric(3, Domain::unit(), &[(1, 1, 0.3)]).is_err());
        assert!(LongitudinalNetwork::symmetric(3, Domain::unit(), &[(1, 4, 0.3)]).is_err());
        assert!(LongitudinalNetwork::symmetric(3, Domain::unit(), &[(1, 2, 1.0)]).is_err());
        let bip = LongitudinalNetwork::bipartite(2, 3, Domain::unit(), &[(2, 3, 0.5)]).unwrap();
        assert_eq!(bip.shape(), (2, 3));
        assert!(LongitudinalNetwork::bipartite(2, 3, Domain::unit(), &[(3, 1, 0.5)]).is_err());
    }
}
