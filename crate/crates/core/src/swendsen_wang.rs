//! Swendsen-Wang cluster updates for Ising and Potts lattices.
//!
//! Bonds are placed independently on equal-spin edges with the model's
//! Fortuin-Kasteleyn probability, clusters are the connected components
//! of active bonds, and every cluster takes a fresh uniform value.

use alloc::string::String;
use alloc::vec::Vec;

use libm::pow;

use crate::chain::Kernel;
use crate::error::{Error, Result};
use crate::models::lattice::{LatticeModel, Spins};
use crate::oracle::ExactKernel;
use crate::rng::RngStream;

/// Active flags indexed like [`LatticeModel::edge`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BondConfiguration {
    side: usize,
    active: Vec<bool>,
}

impl BondConfiguration {
    pub fn new(side: usize, active: Vec<bool>) -> Result<Self> {
        if active.len() != 2 * side * side {
            return Err(Error::argument("bond vector must have 2 L^2 entries"));
        }
        Ok(BondConfiguration { side, active })
    }

    pub fn empty(side: usize) -> Self {
        BondConfiguration {
            side,
            active: alloc::vec![false; 2 * side * side],
        }
    }

    pub fn full(side: usize) -> Self {
        BondConfiguration {
            side,
            active: alloc::vec![true; 2 * side * side],
        }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn active(&self) -> &[bool] {
        &self.active
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|&&b| b).count()
    }

    pub fn endpoints(&self, e: usize) -> (usize, usize) {
        edge_endpoints(self.side, e)
    }
}

/// Endpoints of edge `e` on an `side x side` torus.
pub fn edge_endpoints(side: usize, e: usize) -> (usize, usize) {
    let site = e / 2;
    let (r, c) = (site / side, site % side);
    if e.is_multiple_of(2) {
        (site, r * side + (c + 1) % side)
    } else {
        (site, ((r + 1) % side) * side + c)
    }
}

/// Each equal-spin edge is activated with the bond probability; unequal
/// edges stay inactive and consume no randomness.
pub fn sample_bonds(model: &LatticeModel, spins: &[u8], rng: &mut RngStream) -> BondConfiguration {
    let p = model.bond_probability();
    let side = model.side();
    let active = (0..model.n_edges())
        .map(|e| {
            let (a, b) = edge_endpoints(side, e);
            spins[a] == spins[b] && rng.uniform() < p
        })
        .collect();
    BondConfiguration { side, active }
}

/// Disjoint sets with path compression and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
            size: alloc::vec![1; n],
        }
    }

    pub fn find(&mut self, x: usize) -> usize {
        let mut root = x;
        while self.parent[root] != root {
            root = self.parent[root];
        }
        let mut cur = x;
        while self.parent[cur] != root {
            let next = self.parent[cur];
            self.parent[cur] = root;
            cur = next;
        }
        root
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            core::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        true
    }
}

/// Cluster label per site. Labels are numbered `0..count` in order of each
/// cluster's smallest site, so equal partitions give equal labelings.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabeling {
    pub labels: Vec<usize>,
    pub count: usize,
}

impl ClusterLabeling {
    /// Canonical relabeling of any per-site component identifiers.
    pub fn canonical(raw: &[usize]) -> Self {
        let mut map = alloc::collections::BTreeMap::new();
        let labels = raw
            .iter()
            .map(|r| {
                let next = map.len();
                *map.entry(*r).or_insert(next)
            })
            .collect();
        ClusterLabeling {
            labels,
            count: map.len(),
        }
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = alloc::vec![0; self.count];
        for &l in &self.labels {
            s[l] += 1;
        }
        s
    }
}

pub fn find_clusters(bonds: &BondConfiguration) -> ClusterLabeling {
    let order: Vec<usize> = (0..bonds.active.len()).collect();
    find_clusters_in_order(bonds, &order)
}

/// Same as [`find_clusters`] but merging edges in the given order.
pub fn find_clusters_in_order(bonds: &BondConfiguration, order: &[usize]) -> ClusterLabeling {
    let n = bonds.side * bonds.side;
    let mut uf = UnionFind::new(n);
    for &e in order {
        if bonds.active[e] {
            let (a, b) = bonds.endpoints(e);
            uf.union(a, b);
        }
    }
    let roots: Vec<usize> = (0..n).map(|s| uf.find(s)).collect();
    ClusterLabeling::canonical(&roots)
}

/// One Swendsen-Wang update; returns the bonds and clusters used.
pub fn sw_step(
    model: &LatticeModel,
    spins: &mut [u8],
    rng: &mut RngStream,
) -> (BondConfiguration, ClusterLabeling) {
    let bonds = sample_bonds(model, spins, rng);
    let clusters = find_clusters(&bonds);
    let q = model.n_values();
    let values: Vec<u8> = (0..clusters.count).map(|_| rng.index(q) as u8).collect();
    for (s, &l) in spins.iter_mut().zip(&clusters.labels) {
        *s = values[l];
    }
    (bonds, clusters)
}

#[derive(Debug, Clone)]
pub struct SwendsenWang {
    pub model: LatticeModel,
    label: String,
}

impl SwendsenWang {
    pub fn new(model: LatticeModel) -> Self {
        SwendsenWang {
            model,
            label: String::from("swendsen-wang"),
        }
    }
}

impl Kernel for SwendsenWang {
    type State = Spins;

    fn step(&mut self, spins: &mut Spins, rng: &mut RngStream) -> Result<()> {
        sw_step(&self.model, spins, rng);
        Ok(())
    }

    fn id(&self) -> &str {
        &self.label
    }
}

/// Largest number of equal-spin edges whose bond subsets are enumerated.
const MAX_ENUMERATED_EDGES: usize = 20;

/// Exact transition law by enumerating every bond subset and every
/// cluster assignment.
impl ExactKernel for SwendsenWang {
    fn n_states(&self) -> usize {
        self.model.state_count().unwrap_or(usize::MAX)
    }

    fn transition_row(&self, from: usize) -> Result<Vec<(usize, f64)>> {
        let m = &self.model;
        let spins = m.config_from_index(from);
        let side = m.side();
        let equal: Vec<usize> = (0..m.n_edges())
            .filter(|&e| {
                let (a, b) = edge_endpoints(side, e);
                spins[a] == spins[b]
            })
            .collect();
        if equal.len() > MAX_ENUMERATED_EDGES {
            return Err(Error::Capacity {
                states: 1 << equal.len().min(63),
                capacity: 1 << MAX_ENUMERATED_EDGES,
            });
        }
        let p = m.bond_probability();
        let q = m.n_values();
        let mut row = Vec::new();
        for mask in 0u32..(1 << equal.len()) {
            let mut bonds = BondConfiguration::empty(side);
            for (bit, &e) in equal.iter().enumerate() {
                bonds.active[e] = mask >> bit & 1 == 1;
            }
            let on = mask.count_ones() as f64;
            let w = pow(p, on) * pow(1.0 - p, equal.len() as f64 - on);
            if w == 0.0 {
                continue;
            }
            let clusters = find_clusters(&bonds);
            let assignments = q.pow(clusters.count as u32);
            let each = w / assignments as f64;
            let mut config = alloc::vec![0u8; spins.len()];
            for a in 0..assignments {
                let mut digits = a;
                let values: Vec<u8> = (0..clusters.count)
                    .map(|_| {
                        let v = digits % q;
                        digits /= q;
                        v as u8
                    })
                    .collect();
                for (c, &l) in config.iter_mut().zip(&clusters.labels) {
                    *c = values[l];
                }
                row.push((m.config_index(&config), each));
            }
        }
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;
    use alloc::collections::VecDeque;

    fn bfs_labels(bonds: &BondConfiguration) -> ClusterLabeling {
        let n = bonds.side() * bonds.side();
        let mut adj = alloc::vec![Vec::new(); n];
        for (e, &on) in bonds.active().iter().enumerate() {
            if on {
                let (a, b) = bonds.endpoints(e);
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        let mut comp = alloc::vec![usize::MAX; n];
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            comp[start] = start;
            let mut queue = VecDeque::from([start]);
            while let Some(v) = queue.pop_front() {
                for &w in &adj[v] {
                    if comp[w] == usize::MAX {
                        comp[w] = start;
                        queue.push_back(w);
                    }
                }
            }
        }
        ClusterLabeling::canonical(&comp)
    }

    #[test]
    fn zero_beta_has_no_bonds() {
        let m = LatticeModel::ising(4, 0.0).unwrap();
        let mut rng = make_rng(1, 0);
        let s = m.uniform_config(1);
        for _ in 0..100 {
            assert_eq!(sample_bonds(&m, &s, &mut rng).count(), 0);
        }
    }

    #[test]
    fn cold_uniform_config_bonds_everything() {
        let m = LatticeModel::ising(4, 40.0).unwrap();
        let b = sample_bonds(&m, &m.uniform_config(0), &mut make_rng(2, 0));
        assert_eq!(b.count(), m.n_edges());
        assert_eq!(find_clusters(&b).count, 1);
    }

    #[test]
    fn unequal_edge_never_active() {
        let m = LatticeModel::ising(2, 5.0).unwrap();
        // sites 0 and 1 differ; edges 0 (0-1) and 2 (1-0) join them
        let s = alloc::vec![0, 1, 0, 1];
        let mut rng = make_rng(3, 0);
        for _ in 0..100_000 {
            let b = sample_bonds(&m, &s, &mut rng);
            assert!(!b.active()[0] && !b.active()[2]);
        }
    }

    #[test]
    fn empty_and_full_bond_sets() {
        assert_eq!(find_clusters(&BondConfiguration::empty(5)).count, 25);
        assert_eq!(find_clusters(&BondConfiguration::full(5)).count, 1);
    }

    #[test]
    fn union_find_matches_bfs() {
        let mut rng = make_rng(4, 0);
        for _ in 0..500 {
            let density = rng.uniform();
            let active = (0..32).map(|_| rng.uniform() < density).collect();
            let b = BondConfiguration::new(4, active).unwrap();
            assert_eq!(find_clusters(&b), bfs_labels(&b));
        }
    }

    #[test]
    fn flips_respect_active_bonds() {
        let m = LatticeModel::potts(6, 3, 1.2).unwrap();
        let mut rng = make_rng(5, 0);
        let mut s = m.random_config(&mut rng);
        for _ in 0..200 {
            let (bonds, _) = sw_step(&m, &mut s, &mut rng);
            for (e, &on) in bonds.active().iter().enumerate() {
                let (a, b) = bonds.endpoints(e);
                assert!(!on || s[a] == s[b]);
            }
        }
    }

    #[test]
    fn zero_beta_step_is_uniform() {
        let m = LatticeModel::ising(2, 0.0).unwrap();
        let k = SwendsenWang::new(m.clone());
        for from in 0..16 {
            let row = k.transition_row(from).unwrap();
            let mut p = [0.0; 16];
            for (to, w) in row {
                p[to] += w;
            }
            assert!(p.iter().all(|&x| (x - 1.0 / 16.0).abs() < 1e-15));
        }
    }
}
