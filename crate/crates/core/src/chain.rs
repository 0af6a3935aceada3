//! The generic chain runner every transition kernel plugs into.

use alloc::boxed::Box;
use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Per-component acceptance bookkeeping for Metropolis-type kernels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AcceptanceStats {
    pub proposed: Vec<u64>,
    pub accepted: Vec<u64>,
    /// Proposals that left the target's support; counted as rejections.
    pub out_of_support: Vec<u64>,
}

impl AcceptanceStats {
    pub fn new(components: usize) -> Self {
        AcceptanceStats {
            proposed: alloc::vec![0; components],
            accepted: alloc::vec![0; components],
            out_of_support: alloc::vec![0; components],
        }
    }

    pub fn rates(&self) -> Vec<f64> {
        self.proposed
            .iter()
            .zip(&self.accepted)
            .map(|(&p, &a)| if p == 0 { f64::NAN } else { a as f64 / p as f64 })
            .collect()
    }

    pub fn overall_rate(&self) -> f64 {
        let p: u64 = self.proposed.iter().sum();
        let a: u64 = self.accepted.iter().sum();
        if p == 0 {
            f64::NAN
        } else {
            a as f64 / p as f64
        }
    }

    pub(crate) fn record(&mut self, component: usize, outcome: crate::kernels::MoveOutcome) {
        use crate::kernels::MoveOutcome;
        self.proposed[component] += 1;
        match outcome {
            MoveOutcome::Accepted => self.accepted[component] += 1,
            MoveOutcome::Rejected => {}
            MoveOutcome::OutOfSupport => self.out_of_support[component] += 1,
        }
    }
}

/// A Markov transition kernel acting on states in place.
pub trait Kernel {
    type State: Clone;

    fn step(&mut self, state: &mut Self::State, rng: &mut RngStream) -> Result<()>;

    fn id(&self) -> &str;

    fn acceptance(&self) -> Option<&AcceptanceStats> {
        None
    }
}

/// The identity kernel; leaves every state unchanged.
#[derive(Debug, Clone, Default)]
pub struct Identity<S>(core::marker::PhantomData<S>);

impl<S> Identity<S> {
    pub fn new() -> Self {
        Identity(core::marker::PhantomData)
    }
}

impl<S: Clone> Kernel for Identity<S> {
    type State = S;

    fn step(&mut self, _state: &mut S, _rng: &mut RngStream) -> Result<()> {
        Ok(())
    }

    fn id(&self) -> &str {
        "identity"
    }
}

/// Kept states of one run, in generation order. Burn-in is never stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainTrace<S> {
    pub states: Vec<S>,
    pub kernel_id: String,
    pub seed: u64,
    pub stream_id: u64,
    pub n_burn: usize,
    pub thin: usize,
    summaries: BTreeMap<String, Vec<f64>>,
}

impl<S> ChainTrace<S> {
    pub fn new(kernel_id: &str, seed: u64, stream_id: u64, n_burn: usize, thin: usize) -> Self {
        ChainTrace {
            states: Vec::new(),
            kernel_id: String::from(kernel_id),
            seed,
            stream_id,
            n_burn,
            thin,
            summaries: BTreeMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Scalar summary `f(state)` of every kept state, computed once per name.
    pub fn summary(&mut self, name: &str, f: impl Fn(&S) -> f64) -> &[f64] {
        if !self.summaries.contains_key(name) {
            let values = self.states.iter().map(&f).collect();
            self.summaries.insert(String::from(name), values);
        }
        &self.summaries[name]
    }

    pub fn cached_summary(&self, name: &str) -> Option<&[f64]> {
        self.summaries.get(name).map(Vec::as_slice)
    }

    pub fn map<F: Fn(&S) -> f64>(&self, f: F) -> Vec<f64> {
        self.states.iter().map(f).collect()
    }
}

/// Apply `kernel` `n_burn + n_keep * thin` times, keeping every `thin`-th
/// post-burn-in state.
pub fn run_chain<K: Kernel>(
    kernel: &mut K,
    init: K::State,
    n_burn: usize,
    n_keep: usize,
    thin: usize,
    rng: &mut RngStream,
) -> Result<ChainTrace<K::State>> {
    if n_keep == 0 {
        return Err(Error::argument("n_keep must be at least 1"));
    }
    if thin == 0 {
        return Err(Error::argument("thin must be at least 1"));
    }
    let mut trace = ChainTrace::new(kernel.id(), rng.seed(), rng.stream_id(), n_burn, thin);
    trace.states.reserve_exact(n_keep);
    let mut state = init;
    let mut iteration: u64 = 0;
    let mut advance = |state: &mut K::State, kernel: &mut K, rng: &mut RngStream| {
        iteration += 1;
        kernel.step(state, rng).map_err(|e| Error::Kernel {
            iteration,
            source: Box::new(e),
        })
    };
    for _ in 0..n_burn {
        advance(&mut state, kernel, rng)?;
    }
    for _ in 0..n_keep {
        for _ in 0..thin {
            advance(&mut state, kernel, rng)?;
        }
        trace.states.push(state.clone());
    }
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::make_rng;

    struct Counter;

    impl Kernel for Counter {
        type State = u64;
        fn step(&mut self, s: &mut u64, _rng: &mut RngStream) -> Result<()> {
            *s += 1;
            Ok(())
        }
        fn id(&self) -> &str {
            "counter"
        }
    }

    struct RandomWalk;

    impl Kernel for RandomWalk {
        type State = f64;
        fn step(&mut self, s: &mut f64, rng: &mut RngStream) -> Result<()> {
            *s += rng.standard_normal();
            Ok(())
        }
        fn id(&self) -> &str {
            "walk"
        }
    }

    struct FailsAt(u64);

    impl Kernel for FailsAt {
        type State = u64;
        fn step(&mut self, s: &mut u64, _rng: &mut RngStream) -> Result<()> {
            *s += 1;
            if *s == self.0 {
                Err(Error::NumericalRank)
            } else {
                Ok(())
            }
        }
        fn id(&self) -> &str {
            "fails"
        }
    }

    #[test]
    fn identity_copies_init() {
        let mut rng = make_rng(1, 0);
        let t = run_chain(&mut Identity::new(), 7.5f64, 3, 5, 2, &mut rng).unwrap();
        assert_eq!(t.states, alloc::vec![7.5; 5]);
    }

    #[test]
    fn bookkeeping_counts_and_thinning() {
        let mut rng = make_rng(1, 0);
        let t = run_chain(&mut Counter, 0, 0, 4, 1, &mut rng).unwrap();
        assert_eq!(t.states, alloc::vec![1, 2, 3, 4]);
        let t = run_chain(&mut Counter, 0, 10, 3, 5, &mut rng).unwrap();
        assert_eq!(t.states, alloc::vec![15, 20, 25]);
        assert_eq!(t.len(), 3);
    }

    #[test]
    fn equal_seeds_equal_traces() {
        let a = run_chain(&mut RandomWalk, 0.0, 10, 100, 3, &mut make_rng(9, 2)).unwrap();
        let b = run_chain(&mut RandomWalk, 0.0, 10, 100, 3, &mut make_rng(9, 2)).unwrap();
        let bits = |t: &ChainTrace<f64>| t.states.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!((a.seed, a.stream_id), (9, 2));
    }

    #[test]
    fn failure_carries_iteration() {
        let err = run_chain(&mut FailsAt(7), 0, 2, 10, 1, &mut make_rng(1, 0)).unwrap_err();
        match err {
            Error::Kernel { iteration, source } => {
                assert_eq!(iteration, 7);
                assert_eq!(*source, Error::NumericalRank);
            }
            e => panic!("unexpected {e:?}"),
        }
    }

    #[test]
    fn invalid_lengths() {
        let mut rng = make_rng(1, 0);
        assert!(run_chain(&mut Counter, 0, 0, 0, 1, &mut rng).is_err());
        assert!(run_chain(&mut Counter, 0, 0, 1, 0, &mut rng).is_err());
    }

    #[test]
    fn summary_cache() {
        let mut t = run_chain(&mut Counter, 0, 0, 3, 1, &mut make_rng(1, 0)).unwrap();
        assert_eq!(t.summary("double", |s| 2.0 * *s as f64), &[2.0, 4.0, 6.0]);
        assert_eq!(t.cached_summary("double").unwrap().len(), 3);
    }
}
