//! Row-standardized binary contiguity weights: `w_ij = 1 / |N(i)|` for
//! neighbors, zero otherwise. Regions without neighbors are isolated and
//! left out of every statistic that uses the weights.

use crate::ingest::AdjacencyList;

#[derive(Debug, Clone, PartialEq)]
pub struct SpatialWeights {
    total: usize,
    /// Input positions of the non-isolated units.
    members: Vec<usize>,
    /// Neighbor lists over member positions, sorted.
    neighbors: Vec<Vec<usize>>,
    isolated: Vec<usize>,
}

impl SpatialWeights {
    /// Builds weights over `neighbors.len()` units from index neighbor lists.
    /// Lists are symmetrized; self-references and out-of-range entries are ignored.
    pub fn from_neighbor_lists(neighbors: &[Vec<usize>]) -> Self {
        let n = neighbors.len();
        let mut sym: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (i, ns) in neighbors.iter().enumerate() {
            for &j in ns {
                if j < n && j != i {
                    sym[i].push(j);
                    sym[j].push(i);
                }
            }
        }
        for ns in &mut sym {
            ns.sort_unstable();
            ns.dedup();
        }
        let (members, isolated): (Vec<usize>, Vec<usize>) = (0..n).partition(|&i| !sym[i].is_empty());
        let mut local = vec![usize::MAX; n];
        for (k, &i) in members.iter().enumerate() {
            local[i] = k;
        }
        let neighbors = members.iter().map(|&i| sym[i].iter().map(|&j| local[j]).collect()).collect();
        SpatialWeights { total: n, members, neighbors, isolated }
    }

    /// Weights over `regions` (in that order) from an adjacency list; edges to
    /// regions outside the list are dropped.
    pub fn from_adjacency<S: AsRef<str>>(adjacency: &AdjacencyList, regions: &[S]) -> Self {
        let index: std::collections::HashMap<&str, usize> =
            regions.iter().enumerate().map(|(i, r)| (r.as_ref(), i)).collect();
        let lists: Vec<Vec<usize>> = regions
            .iter()
            .map(|r| adjacency.neighbors(r.as_ref()).filter_map(|n| index.get(n).copied()).collect())
            .collect();
        Self::from_neighbor_lists(&lists)
    }

    /// Number of units the weights were built over, isolated ones included.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn isolated(&self) -> &[usize] {
        &self.isolated
    }

    /// Neighbors of member `k`, as member positions.
    pub fn neighbors(&self, k: usize) -> &[usize] {
        &self.neighbors[k]
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `w_kl` between member positions.
    pub fn weight(&self, k: usize, l: usize) -> f64 {
        let ns = &self.neighbors[k];
        if ns.binary_search(&l).is_ok() {
            1.0 / ns.len() as f64
        } else {
            0.0
        }
    }

    /// Sum of all weights; equals the member count under row standardization.
    pub fn s0(&self) -> f64 {
        self.neighbors.iter().map(|ns| if ns.is_empty() { 0.0 } else { 1.0 }).sum()
    }

    /// `1/2 * sum_ij (w_ij + w_ji)^2`.
    pub fn s1(&self) -> f64 {
        let mut s = 0.0;
        for ns in &self.neighbors {
            let wk = 1.0 / ns.len() as f64;
            for &l in ns {
                let wl = 1.0 / self.neighbors[l].len() as f64;
                s += (wk + wl).powi(2);
            }
        }
        s / 2.0
    }

    /// `sum_i (w_i. + w_.i)^2`.
    pub fn s2(&self) -> f64 {
        self.neighbors
            .iter()
            .map(|ns| {
                let col: f64 = ns.iter().map(|&l| 1.0 / self.neighbors[l].len() as f64).sum();
                (1.0 + col).powi(2)
            })
            .sum()
    }
}
