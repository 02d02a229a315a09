use std::collections::BTreeMap;

use crate::scalar::Scalar;

/// Identifies one relay flow: commodity `origin -> dest` carried on arc `from -> to`.
///
/// Field order gives the lexicographic `(i, j, k, l)` ordering used in every
/// report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct RelayKey {
    pub origin: usize,
    pub dest: usize,
    pub from: usize,
    pub to: usize,
}

impl RelayKey {
    pub fn new(origin: usize, dest: usize, from: usize, to: usize) -> Self {
        Self { origin, dest, from, to }
    }
}

/// Admitted calls, relay flows and resource reservations for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct AdmissionPlan<T> {
    n: usize,
    admitted: Vec<T>,
    pub relay: BTreeMap<RelayKey, T>,
    pub cpu_use: Vec<T>,
    pub mem_use: Vec<T>,
    pub objective: T,
}

impl<T: Scalar> AdmissionPlan<T> {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            admitted: vec![T::zero(); n * n],
            relay: BTreeMap::new(),
            cpu_use: vec![T::zero(); n],
            mem_use: vec![T::zero(); n],
            objective: T::zero(),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn admitted(&self, i: usize, j: usize) -> T {
        self.admitted[i * self.n + j]
    }

    pub fn set_admitted(&mut self, i: usize, j: usize, v: T) {
        self.admitted[i * self.n + j] = v;
    }

    pub fn total_admitted(&self) -> T {
        self.admitted.iter().copied().sum()
    }

    pub fn flow(&self, key: &RelayKey) -> T {
        self.relay.get(key).copied().unwrap_or_else(T::zero)
    }

    /// Relay entries of commodity `(i, j)` in arc order.
    pub fn commodity_flows(&self, i: usize, j: usize) -> impl Iterator<Item = (&RelayKey, &T)> {
        let lo = RelayKey::new(i, j, 0, 0);
        let hi = RelayKey::new(i, j, usize::MAX, usize::MAX);
        self.relay.range(lo..=hi)
    }

    /// Commodities (off-diagonal pairs) that carry any relay entry.
    pub fn commodities(&self) -> Vec<(usize, usize)> {
        let mut out: Vec<(usize, usize)> = self.relay.keys().map(|k| (k.origin, k.dest)).collect();
        out.dedup();
        out
    }

    /// Sum of in-arc and out-arc relay flow at every server, over all commodities.
    pub fn relay_load(&self) -> Vec<T> {
        let mut load = vec![T::zero(); self.n];
        for (k, &f) in &self.relay {
            load[k.from] += f;
            load[k.to] += f;
        }
        load
    }

    pub fn is_integral(&self) -> bool {
        self.admitted.iter().chain(self.relay.values()).all(|v| v.fract() == T::zero())
    }
}
