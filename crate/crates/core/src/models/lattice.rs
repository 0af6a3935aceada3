//! Ising and Potts models on an `L x L` torus.
//!
//! Spins are stored as values `0..n_values`. For Ising, value 0 is spin -1
//! and value 1 is spin +1, with energy `E = -sum_edges s_i s_j`. For Potts,
//! `E` counts unequal neighbour pairs. The Boltzmann weight is
//! `exp(-beta E)` in both cases.
//!
//! Each site owns its right and down edge, giving `2 L^2` edges. At `L = 2`
//! the right and left neighbours coincide, so that pair is joined twice.

use alloc::string::String;
use alloc::vec::Vec;

use libm::exp;

use crate::chain::{AcceptanceStats, Kernel};
use crate::dist::categorical;
use crate::error::{Error, Result};
use crate::kernels::{metropolis_accept, FullConditionalSet, MoveOutcome};
use crate::oracle::{ExactKernel, FiniteModel};
use crate::rng::RngStream;

pub type Spins = Vec<u8>;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LatticeKind {
    Ising,
    Potts { q: u8 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeModel {
    side: usize,
    kind: LatticeKind,
    beta: f64,
}

impl LatticeModel {
    pub fn new(side: usize, kind: LatticeKind, beta: f64) -> Result<Self> {
        if side < 2 {
            return Err(Error::argument("lattice side must be at least 2"));
        }
        if let LatticeKind::Potts { q } = kind {
            if q < 2 {
                return Err(Error::argument("Potts model needs q >= 2"));
            }
        }
        if !(beta >= 0.0 && beta.is_finite()) {
            return Err(Error::ParameterDomain { name: "beta", value: beta });
        }
        Ok(LatticeModel { side, kind, beta })
    }

    pub fn ising(side: usize, beta: f64) -> Result<Self> {
        Self::new(side, LatticeKind::Ising, beta)
    }

    pub fn potts(side: usize, q: u8, beta: f64) -> Result<Self> {
        Self::new(side, LatticeKind::Potts { q }, beta)
    }

    pub fn side(&self) -> usize {
        self.side
    }

    pub fn kind(&self) -> LatticeKind {
        self.kind
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Self::new(self.side, self.kind, beta)
    }

    pub fn n_sites(&self) -> usize {
        self.side * self.side
    }

    pub fn n_values(&self) -> usize {
        match self.kind {
            LatticeKind::Ising => 2,
            LatticeKind::Potts { q } => q as usize,
        }
    }

    pub fn n_edges(&self) -> usize {
        2 * self.n_sites()
    }

    /// Right, left, down, up.
    pub fn neighbors(&self, site: usize) -> [usize; 4] {
        let l = self.side;
        let (r, c) = (site / l, site % l);
        [
            r * l + (c + 1) % l,
            r * l + (c + l - 1) % l,
            ((r + 1) % l) * l + c,
            ((r + l - 1) % l) * l + c,
        ]
    }

    /// Edge `2 i` joins site `i` to its right neighbour, edge `2 i + 1` to
    /// the one below.
    pub fn edge(&self, e: usize) -> (usize, usize) {
        let site = e / 2;
        let nb = self.neighbors(site);
        (site, if e.is_multiple_of(2) { nb[0] } else { nb[2] })
    }

    /// Ising spin (`-1` or `+1`) of a stored value.
    pub fn spin(value: u8) -> f64 {
        if value == 0 {
            -1.0
        } else {
            1.0
        }
    }

    pub fn pair_energy(&self, a: u8, b: u8) -> f64 {
        match self.kind {
            LatticeKind::Ising => -Self::spin(a) * Self::spin(b),
            LatticeKind::Potts { .. } => {
                if a == b {
                    0.0
                } else {
                    1.0
                }
            }
        }
    }

    /// Energy gap between an unequal and an equal pair.
    fn pair_gap(&self) -> f64 {
        match self.kind {
            LatticeKind::Ising => 2.0,
            LatticeKind::Potts { .. } => 1.0,
        }
    }

    /// Fortuin-Kasteleyn bond probability between equal spins:
    /// `1 - exp(-2 beta)` for Ising, `1 - exp(-beta)` for Potts.
    pub fn bond_probability(&self) -> f64 {
        -libm::expm1(-self.beta * self.pair_gap())
    }

    pub fn energy(&self, spins: &[u8]) -> f64 {
        (0..self.n_edges())
            .map(|e| {
                let (a, b) = self.edge(e);
                self.pair_energy(spins[a], spins[b])
            })
            .sum()
    }

    /// Energy of `site` taking `value` against its four neighbours.
    pub fn local_energy(&self, spins: &[u8], site: usize, value: u8) -> f64 {
        self.neighbors(site)
            .iter()
            .map(|&n| self.pair_energy(value, spins[n]))
            .sum()
    }

    pub fn energy_delta(&self, spins: &[u8], site: usize, new_value: u8) -> f64 {
        let old = spins[site];
        if old == new_value {
            return 0.0;
        }
        self.local_energy(spins, site, new_value) - self.local_energy(spins, site, old)
    }

    /// Heat-bath probabilities for `site`, proportional to
    /// `exp(-beta * local energy)`.
    pub fn conditional_probs(&self, spins: &[u8], site: usize) -> Vec<f64> {
        let local: Vec<f64> = (0..self.n_values())
            .map(|v| self.local_energy(spins, site, v as u8))
            .collect();
        let min = local.iter().copied().fold(f64::INFINITY, f64::min);
        let w: Vec<f64> = local.iter().map(|e| exp(-self.beta * (e - min))).collect();
        let total: f64 = w.iter().sum();
        w.into_iter().map(|x| x / total).collect()
    }

    pub fn full_conditional(&self, spins: &[u8], site: usize, rng: &mut RngStream) -> u8 {
        categorical(&self.conditional_probs(spins, site), rng) as u8
    }

    /// Mean Ising spin. For Potts, `(q max_fraction - 1) / (q - 1)`.
    pub fn magnetization(&self, spins: &[u8]) -> f64 {
        let n = spins.len() as f64;
        match self.kind {
            LatticeKind::Ising => spins.iter().map(|&v| Self::spin(v)).sum::<f64>() / n,
            LatticeKind::Potts { q } => {
                let mut counts = alloc::vec![0usize; q as usize];
                for &v in spins {
                    counts[v as usize] += 1;
                }
                let max = *counts.iter().max().unwrap_or(&0) as f64;
                let q = q as f64;
                (q * max / n - 1.0) / (q - 1.0)
            }
        }
    }

    pub fn uniform_config(&self, value: u8) -> Spins {
        alloc::vec![value; self.n_sites()]
    }

    pub fn random_config(&self, rng: &mut RngStream) -> Spins {
        (0..self.n_sites())
            .map(|_| rng.index(self.n_values()) as u8)
            .collect()
    }

    /// Site 0 is the least significant digit in base `n_values`.
    pub fn config_index(&self, spins: &[u8]) -> usize {
        let q = self.n_values();
        spins.iter().rev().fold(0, |acc, &v| acc * q + v as usize)
    }

    pub fn config_from_index(&self, mut index: usize) -> Spins {
        let q = self.n_values();
        (0..self.n_sites())
            .map(|_| {
                let v = index % q;
                index /= q;
                v as u8
            })
            .collect()
    }

    pub fn state_count(&self) -> Option<usize> {
        self.n_values().checked_pow(self.n_sites() as u32)
    }
}

impl FiniteModel for LatticeModel {
    fn n_states(&self) -> Option<usize> {
        self.state_count()
    }

    fn log_weight(&self, state: usize) -> f64 {
        -self.beta * self.energy(&self.config_from_index(state))
    }
}

/// Exact law after a sequence of single-site updates starting from `from`.
/// `None` picks the site uniformly at random.
fn exact_rows(
    model: &LatticeModel,
    from: usize,
    steps: &[Option<usize>],
    update: impl Fn(&[u8], usize) -> Vec<(u8, f64)>,
) -> Result<Vec<(usize, f64)>> {
    let n = model
        .state_count()
        .filter(|&n| n <= crate::oracle::STATIONARY_CAPACITY)
        .ok_or(Error::Capacity {
            states: model.state_count().unwrap_or(usize::MAX),
            capacity: crate::oracle::STATIONARY_CAPACITY,
        })?;
    let mut dist = alloc::vec![0.0; n];
    dist[from] = 1.0;
    for &step in steps {
        let mut out = alloc::vec![0.0; n];
        let sites: Vec<(usize, f64)> = match step {
            Some(s) => alloc::vec![(s, 1.0)],
            None => {
                let pick = 1.0 / model.n_sites() as f64;
                (0..model.n_sites()).map(|s| (s, pick)).collect()
            }
        };
        for (i, &mass) in dist.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            let mut config = model.config_from_index(i);
            for &(s, pick) in &sites {
                let saved = config[s];
                for (value, p) in update(&config, s) {
                    config[s] = value;
                    out[model.config_index(&config)] += mass * pick * p;
                }
                config[s] = saved;
            }
        }
        dist = out;
    }
    Ok(dist
        .into_iter()
        .enumerate()
        .filter(|&(_, p)| p > 0.0)
        .collect())
}

/// Random-site Metropolis. Ising proposes a flip; Potts proposes a value
/// uniformly among the other `q - 1`. One kernel step makes
/// `updates_per_step` single-site updates.
#[derive(Debug, Clone)]
pub struct LatticeMetropolis {
    pub model: LatticeModel,
    pub updates_per_step: usize,
    stats: AcceptanceStats,
    label: String,
}

impl LatticeMetropolis {
    /// One step is one sweep (`L^2` updates).
    pub fn new(model: LatticeModel) -> Self {
        let n = model.n_sites();
        Self::with_updates(model, n)
    }

    pub fn with_updates(model: LatticeModel, updates_per_step: usize) -> Self {
        LatticeMetropolis {
            model,
            updates_per_step,
            stats: AcceptanceStats::new(1),
            label: String::from("metropolis"),
        }
    }

    /// Propose and accept or reject one update at `site`.
    pub fn update_site(&mut self, spins: &mut [u8], site: usize, rng: &mut RngStream) -> MoveOutcome {
        let q = self.model.n_values();
        let old = spins[site];
        let shift = 1 + rng.index(q - 1);
        let new = ((old as usize + shift) % q) as u8;
        let delta = self.model.energy_delta(spins, site, new);
        let outcome = if metropolis_accept(-self.model.beta * delta, rng) {
            spins[site] = new;
            MoveOutcome::Accepted
        } else {
            MoveOutcome::Rejected
        };
        self.stats.record(0, outcome);
        outcome
    }

    /// Outcome law of one update at `site`.
    fn site_law(&self, spins: &[u8], site: usize) -> Vec<(u8, f64)> {
        let q = self.model.n_values();
        let old = spins[site];
        let propose = 1.0 / (q - 1) as f64;
        let mut stay = 1.0;
        let mut out = Vec::with_capacity(q);
        for v in (0..q as u8).filter(|&v| v != old) {
            let delta = self.model.energy_delta(spins, site, v);
            let a = propose * exp(-self.model.beta * delta).min(1.0);
            stay -= a;
            out.push((v, a));
        }
        out.push((old, stay));
        out
    }
}

impl Kernel for LatticeMetropolis {
    type State = Spins;

    fn step(&mut self, spins: &mut Spins, rng: &mut RngStream) -> Result<()> {
        let n = self.model.n_sites();
        for _ in 0..self.updates_per_step {
            let site = rng.index(n);
            self.update_site(spins, site, rng);
        }
        Ok(())
    }

    fn id(&self) -> &str {
        &self.label
    }

    fn acceptance(&self) -> Option<&AcceptanceStats> {
        Some(&self.stats)
    }
}

impl ExactKernel for LatticeMetropolis {
    fn n_states(&self) -> usize {
        self.model.state_count().unwrap_or(usize::MAX)
    }

    fn transition_row(&self, from: usize) -> Result<Vec<(usize, f64)>> {
        let steps = alloc::vec![None; self.updates_per_step];
        exact_rows(&self.model, from, &steps, |c, s| self.site_law(c, s))
    }
}

/// Heat-bath full conditionals, one component per site.
#[derive(Debug, Clone)]
pub struct HeatBath {
    pub model: LatticeModel,
}

impl HeatBath {
    pub fn new(model: LatticeModel) -> Self {
        HeatBath { model }
    }
}

impl FullConditionalSet for HeatBath {
    type State = Spins;

    fn components(&self) -> usize {
        self.model.n_sites()
    }

    fn sample_component(&self, i: usize, spins: &mut Spins, rng: &mut RngStream) -> Result<()> {
        spins[i] = self.model.full_conditional(spins, i, rng);
        Ok(())
    }
}

/// Exact law of one systematic heat-bath sweep.
impl ExactKernel for HeatBath {
    fn n_states(&self) -> usize {
        self.model.state_count().unwrap_or(usize::MAX)
    }

    fn transition_row(&self, from: usize) -> Result<Vec<(usize, f64)>> {
        let steps: Vec<Option<usize>> = (0..self.model.n_sites()).map(Some).collect();
        exact_rows(&self.model, from, &steps, |c, s| {
            self.model
                .conditional_probs(c, s)
                .into_iter()
                .enumerate()
                .map(|(v, p)| (v as u8, p))
                .collect()
        })
    }
}
