//! Initial placement of logical qubits on lattice sites and SWAP routing.
//!
//! Placement puts the most strongly interacting pair at the lattice centre,
//! then repeatedly picks the unplaced qubit with the largest interaction
//! weight to the placed set and gives it the free site maximising
//! `sum_v w(q, v) / dist(site, site(v))`. Routing walks operands toward each
//! other one SWAP at a time, always to the reachable site closest to the
//! target. Three-qubit gates first pull operands toward their centroid; when
//! that stalls, the closest pair is brought adjacent and the third operand is
//! walked along a shortest SWAP path to a site near both. Every lattice site
//! holds an atom, so a SWAP may move a qubit onto a spectator site.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::circuit::{Circuit, GateKind, GateTag, InteractionGraph};
use crate::rng::seeded;
use crate::scalar::{clearly_less, Scalar};
use crate::topology::{Lattice, RadiusConfig, TopologyError};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MapError {
    #[error("lattice has {available} sites but the circuit needs {needed}")]
    LatticeTooSmall { needed: usize, available: usize },
    #[error("instruction {instr}: no SWAP strictly reduces operand distance (radii too small?)")]
    NoProgress { instr: usize },
    #[error("instruction {instr}: routing exceeded the bound of {bound} SWAPs")]
    StepBound { instr: usize, bound: usize },
    #[error("invalid mapping: {0}")]
    InvalidMapping(String),
    #[error(transparent)]
    Topology(#[from] TopologyError),
}

/// Injective assignment of logical qubits to lattice sites.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mapping {
    qubit_to_site: Vec<usize>,
    site_to_qubit: Vec<Option<usize>>,
}

impl Mapping {
    pub fn from_sites(qubit_to_site: Vec<usize>, num_sites: usize) -> Result<Self, MapError> {
        let mut site_to_qubit = vec![None; num_sites];
        for (q, &s) in qubit_to_site.iter().enumerate() {
            if s >= num_sites {
                return Err(MapError::InvalidMapping(format!(
                    "qubit {q} mapped to missing site {s}"
                )));
            }
            if let Some(other) = site_to_qubit[s] {
                return Err(MapError::InvalidMapping(format!(
                    "qubits {other} and {q} share site {s}"
                )));
            }
            site_to_qubit[s] = Some(q);
        }
        Ok(Mapping {
            qubit_to_site,
            site_to_qubit,
        })
    }

    pub fn site_of(&self, qubit: usize) -> usize {
        self.qubit_to_site[qubit]
    }

    /// Logical qubit at `site`, or `None` for a spectator atom.
    pub fn qubit_at(&self, site: usize) -> Option<usize> {
        self.site_to_qubit[site]
    }

    pub fn num_qubits(&self) -> usize {
        self.qubit_to_site.len()
    }

    pub fn num_sites(&self) -> usize {
        self.site_to_qubit.len()
    }

    pub fn sites(&self) -> &[usize] {
        &self.qubit_to_site
    }

    /// Exchanges the contents of two sites.
    pub fn swap_sites(&mut self, a: usize, b: usize) {
        let qa = self.site_to_qubit[a];
        let qb = self.site_to_qubit[b];
        self.site_to_qubit[a] = qb;
        self.site_to_qubit[b] = qa;
        if let Some(q) = qa {
            self.qubit_to_site[q] = b;
        }
        if let Some(q) = qb {
            self.qubit_to_site[q] = a;
        }
    }

    /// Checks that both directions agree.
    pub fn is_consistent(&self) -> bool {
        let forward = self
            .qubit_to_site
            .iter()
            .enumerate()
            .all(|(q, &s)| self.site_to_qubit.get(s) == Some(&Some(q)));
        let mapped = self.site_to_qubit.iter().flatten().count();
        forward && mapped == self.qubit_to_site.len()
    }
}

/// Free site for `qubit` given the partial placement `placed` (site per
/// qubit). Maximises `sum_v w(qubit, v) / dist`, ties to the lowest index;
/// with no placed partner the free site nearest the lattice centre wins.
/// Distances are full 3-D, so layered lattices use the same rule.
pub fn place_qubit<T: Scalar>(
    qubit: usize,
    placed: &[Option<usize>],
    graph: &InteractionGraph,
    lattice: &Lattice<T>,
) -> Result<usize, MapError> {
    let mut occupied = vec![false; lattice.len()];
    for &s in placed.iter().flatten() {
        occupied[s] = true;
    }
    let partners: Vec<(usize, T)> = placed
        .iter()
        .enumerate()
        .filter_map(|(v, s)| s.map(|s| (s, T::of(graph.weight(qubit, v) as f64))))
        .filter(|&(_, w)| w > T::zero())
        .collect();

    let mut best: Option<(usize, T)> = None;
    if !partners.is_empty() {
        for site in (0..lattice.len()).filter(|&s| !occupied[s]) {
            let score: T = partners
                .iter()
                .map(|&(s, w)| w / lattice.distance(site, s))
                .sum();
            if best.is_none_or(|(_, b)| clearly_less(b, score)) {
                best = Some((site, score));
            }
        }
    }
    match best {
        Some((site, score)) if score > T::zero() => Ok(site),
        _ => nearest_free_to_center(lattice, &occupied),
    }
}

fn nearest_free_to_center<T: Scalar>(lattice: &Lattice<T>, occupied: &[bool]) -> Result<usize, MapError> {
    let center = lattice.center_site(&[])?;
    if !occupied[center] {
        return Ok(center);
    }
    Ok(lattice.nearest_free(center, occupied)?)
}

/// Places every logical qubit of `circuit` (declared width) on `lattice`.
pub fn map_circuit<T: Scalar>(
    circuit: &Circuit,
    lattice: &Lattice<T>,
    graph: &InteractionGraph,
) -> Result<Mapping, MapError> {
    let n = circuit.num_qubits();
    if lattice.len() < n {
        return Err(MapError::LatticeTooSmall {
            needed: n,
            available: lattice.len(),
        });
    }
    let mut placed: Vec<Option<usize>> = vec![None; n];
    let mut occupied = vec![false; lattice.len()];

    let mut heaviest: Option<((usize, usize), u64)> = None;
    for (pair, w) in graph.pairs() {
        if heaviest.is_none_or(|(_, best)| w > best) {
            heaviest = Some((pair, w));
        }
    }
    if let Some(((a, b), _)) = heaviest {
        let center = lattice.center_site(&[])?;
        placed[a] = Some(center);
        occupied[center] = true;
        let next = lattice.nearest_free(center, &occupied)?;
        placed[b] = Some(next);
        occupied[next] = true;
    }

    while let Some(q) = next_qubit(&placed, graph) {
        let site = place_qubit(q, &placed, graph, lattice)?;
        placed[q] = Some(site);
        occupied[site] = true;
    }
    Mapping::from_sites(placed.into_iter().map(Option::unwrap).collect(), lattice.len())
}

/// Unplaced qubit with the largest total weight to the placed set. When no
/// candidate touches the placed set, the lowest-index qubit that interacts at
/// all goes next, and qubits with no interactions come last.
fn next_qubit(placed: &[Option<usize>], graph: &InteractionGraph) -> Option<usize> {
    let unplaced: Vec<usize> = (0..placed.len()).filter(|&q| placed[q].is_none()).collect();
    let mut best: Option<(usize, u64)> = None;
    for &q in &unplaced {
        let score: u64 = placed
            .iter()
            .enumerate()
            .filter(|(_, s)| s.is_some())
            .map(|(v, _)| graph.weight(q, v))
            .sum();
        if best.is_none_or(|(_, b)| score > b) {
            best = Some((q, score));
        }
    }
    match best {
        Some((q, score)) if score > 0 => Some(q),
        _ => unplaced
            .iter()
            .copied()
            .find(|&q| graph.strength(q) > 0)
            .or_else(|| unplaced.first().copied()),
    }
}

/// Uniformly random injective placement, used as a baseline.
pub fn random_mapping(num_qubits: usize, num_sites: usize, seed: u64) -> Result<Mapping, MapError> {
    if num_sites < num_qubits {
        return Err(MapError::LatticeTooSmall {
            needed: num_qubits,
            available: num_sites,
        });
    }
    let mut sites: Vec<usize> = (0..num_sites).collect();
    sites.shuffle(&mut seeded(seed));
    sites.truncate(num_qubits);
    Mapping::from_sites(sites, num_sites)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Origin {
    /// A gate of the logical input, by its logical id.
    Logical { source: usize },
    /// A routing SWAP inserted for logical gate `serves`, after the SWAPs
    /// listed in `after` (routed ids) for the same gate.
    Swap { serves: usize, after: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedInstruction {
    pub id: usize,
    pub kind: GateKind,
    /// Operand sites at execution time.
    pub sites: Vec<usize>,
    /// Logical qubit per operand; `None` marks a spectator atom.
    pub qubits: Vec<Option<usize>>,
    pub origin: Origin,
}

impl RoutedInstruction {
    pub fn is_swap(&self) -> bool {
        matches!(self.origin, Origin::Swap { .. })
    }

    pub fn arity(&self) -> usize {
        self.sites.len()
    }
}

/// A circuit expressed on lattice sites, SWAPs included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoutedCircuit {
    pub num_qubits: usize,
    pub num_sites: usize,
    pub instructions: Vec<RoutedInstruction>,
    pub initial_mapping: Mapping,
    pub final_mapping: Mapping,
}

impl RoutedCircuit {
    pub fn swap_count(&self) -> usize {
        self.instructions.iter().filter(|i| i.is_swap()).count()
    }

    /// Replays the instruction stream from the initial mapping and checks that
    /// operand sites, radius feasibility and the final mapping all agree.
    pub fn verify<T: Scalar>(&self, lattice: &Lattice<T>, radii: &RadiusConfig<T>) -> Result<(), String> {
        let mut mapping = self.initial_mapping.clone();
        for (pos, instr) in self.instructions.iter().enumerate() {
            if instr.id != pos {
                return Err(format!("instruction at position {pos} has id {}", instr.id));
            }
            for (&site, &qubit) in instr.sites.iter().zip(&instr.qubits) {
                if mapping.qubit_at(site) != qubit {
                    return Err(format!(
                        "instruction {pos}: site {site} holds {:?}, recorded {qubit:?}",
                        mapping.qubit_at(site)
                    ));
                }
            }
            if instr.is_swap() {
                if !lattice.within(instr.sites[0], instr.sites[1], radii.r2) {
                    return Err(format!("swap {pos} spans more than r2"));
                }
                mapping.swap_sites(instr.sites[0], instr.sites[1]);
            } else if !operands_within(lattice, &instr.sites, radii) {
                return Err(format!("instruction {pos}: operands outside the interaction radius"));
            }
        }
        if mapping != self.final_mapping {
            return Err("replayed mapping differs from the recorded final mapping".into());
        }
        if !mapping.is_consistent() {
            return Err("final mapping is inconsistent".into());
        }
        Ok(())
    }
}

/// Pairwise operand distances within the radius for the gate's arity.
pub fn operands_within<T: Scalar>(lattice: &Lattice<T>, sites: &[usize], radii: &RadiusConfig<T>) -> bool {
    let radius = match sites.len() {
        0 | 1 => return true,
        2 => radii.r2,
        _ => radii.r3,
    };
    sites
        .iter()
        .enumerate()
        .all(|(i, &a)| sites[i + 1..].iter().all(|&b| lattice.within(a, b, radius)))
}

/// The reachable site (within `reach` of `from`, not in `exclude`) closest to
/// `target`, if it is strictly closer than `from`. Ties go to the lowest index.
fn step_toward<T: Scalar>(
    lattice: &Lattice<T>,
    from: usize,
    target: [T; 3],
    reach: T,
    exclude: &[usize],
) -> Option<usize> {
    let current = lattice.site(from).distance_sq_to(target);
    let mut best: Option<(usize, T)> = None;
    for h in lattice.neighbors_within(from, reach) {
        if exclude.contains(&h) {
            continue;
        }
        let d = lattice.site(h).distance_sq_to(target);
        if best.is_none_or(|(_, b)| clearly_less(d, b)) {
            best = Some((h, d));
        }
    }
    best.filter(|&(_, d)| clearly_less(d, current)).map(|(h, _)| h)
}

fn position<T: Scalar>(lattice: &Lattice<T>, site: usize) -> [T; 3] {
    let s = lattice.site(site);
    [s.x, s.y, s.z]
}

fn centroid<T: Scalar>(lattice: &Lattice<T>, sites: &[usize]) -> [T; 3] {
    let mut c = [T::zero(); 3];
    for &s in sites {
        let p = position(lattice, s);
        for k in 0..3 {
            c[k] += p[k];
        }
    }
    let n = T::of_usize(sites.len());
    c.map(|v| v / n)
}

struct Router<'a, T: Scalar> {
    lattice: &'a Lattice<T>,
    radii: &'a RadiusConfig<T>,
    mapping: Mapping,
    out: Vec<RoutedInstruction>,
    bound: usize,
}

impl<T: Scalar> Router<'_, T> {
    fn emit_swap(&mut self, a: usize, b: usize, serves: usize, chain: &mut Vec<usize>) {
        let id = self.out.len();
        self.out.push(RoutedInstruction {
            id,
            kind: GateKind::new(GateTag::Swap),
            sites: vec![a, b],
            qubits: vec![self.mapping.qubit_at(a), self.mapping.qubit_at(b)],
            origin: Origin::Swap {
                serves,
                after: chain.clone(),
            },
        });
        chain.push(id);
        self.mapping.swap_sites(a, b);
    }

    fn route_pair(&mut self, instr: usize, u: usize, v: usize) -> Result<(), MapError> {
        let mut chain = Vec::new();
        while !self
            .lattice
            .within(self.mapping.site_of(u), self.mapping.site_of(v), self.radii.r2)
        {
            if chain.len() >= self.bound {
                return Err(MapError::StepBound {
                    instr,
                    bound: self.bound,
                });
            }
            let from = self.mapping.site_of(u);
            let target = position(self.lattice, self.mapping.site_of(v));
            let h = step_toward(self.lattice, from, target, self.radii.r2, &[])
                .ok_or(MapError::NoProgress { instr })?;
            self.emit_swap(from, h, instr, &mut chain);
        }
        Ok(())
    }

    fn route_triple(&mut self, instr: usize, qubits: &[usize]) -> Result<(), MapError> {
        let mut chain = Vec::new();
        let mut fallback: Option<(usize, usize, usize)> = None;
        loop {
            let sites: Vec<usize> = qubits.iter().map(|&q| self.mapping.site_of(q)).collect();
            if operands_within(self.lattice, &sites, self.radii) {
                return Ok(());
            }
            if chain.len() >= self.bound {
                return Err(MapError::StepBound {
                    instr,
                    bound: self.bound,
                });
            }
            if fallback.is_none() {
                if let Some((from, to)) = self.centroid_move(&sites) {
                    self.emit_swap(from, to, instr, &mut chain);
                    continue;
                }
                fallback = Some(self.closest_pair(&sites));
            }
            let (a, b, c) = fallback.unwrap();
            let (qa, qb, qc) = (qubits[a], qubits[b], qubits[c]);
            let (sa, sb, sc) = (sites[a], sites[b], sites[c]);
            if !self.lattice.within(sa, sb, self.radii.r2) {
                let target = position(self.lattice, sb);
                let h = step_toward(self.lattice, sa, target, self.radii.r2, &[sc])
                    .ok_or(MapError::NoProgress { instr })?;
                self.emit_swap(sa, h, instr, &mut chain);
                continue;
            }
            let path = self
                .relocation_path(sc, sa, sb)
                .ok_or(MapError::NoProgress { instr })?;
            for next in path {
                if chain.len() >= self.bound {
                    return Err(MapError::StepBound {
                        instr,
                        bound: self.bound,
                    });
                }
                let from = self.mapping.site_of(qc);
                self.emit_swap(from, next, instr, &mut chain);
            }
            debug_assert_eq!(self.mapping.site_of(qa), sa);
            debug_assert_eq!(self.mapping.site_of(qb), sb);
        }
    }

    /// Farthest-from-centroid operand first; the first operand that can step
    /// strictly closer to the centroid moves.
    fn centroid_move(&self, sites: &[usize]) -> Option<(usize, usize)> {
        let c = centroid(self.lattice, sites);
        let mut order: Vec<usize> = (0..sites.len()).collect();
        let dist: Vec<T> = sites
            .iter()
            .map(|&s| self.lattice.site(s).distance_sq_to(c))
            .collect();
        order.sort_by(|&a, &b| {
            if clearly_less(dist[b], dist[a]) {
                std::cmp::Ordering::Less
            } else if clearly_less(dist[a], dist[b]) {
                std::cmp::Ordering::Greater
            } else {
                a.cmp(&b)
            }
        });
        order.into_iter().find_map(|k| {
            let others: Vec<usize> = sites.iter().copied().filter(|&s| s != sites[k]).collect();
            step_toward(self.lattice, sites[k], c, self.radii.r2, &others).map(|h| (sites[k], h))
        })
    }

    /// Operand positions `(a, b, c)` where `(a, b)` is the closest pair.
    fn closest_pair(&self, sites: &[usize]) -> (usize, usize, usize) {
        let mut best = (0, 1, 2);
        let mut best_d = self.lattice.distance(sites[0], sites[1]);
        for (a, b, c) in [(0, 2, 1), (1, 2, 0)] {
            let d = self.lattice.distance(sites[a], sites[b]);
            if clearly_less(d, best_d) {
                best = (a, b, c);
                best_d = d;
            }
        }
        best
    }

    /// Shortest SWAP path (breadth-first over sites within `r2` of each
    /// other, avoiding `a` and `b`) taking the operand at `from` to the
    /// nearest site within `r3` of both `a` and `b`. Lowest indices win ties.
    fn relocation_path(&self, from: usize, a: usize, b: usize) -> Option<Vec<usize>> {
        let n = self.lattice.len();
        let mut prev = vec![usize::MAX; n];
        let mut queue = std::collections::VecDeque::from([from]);
        prev[from] = from;
        while let Some(site) = queue.pop_front() {
            if site != from && self.lattice.within(site, a, self.radii.r3) && self.lattice.within(site, b, self.radii.r3) {
                let mut path = vec![site];
                let mut cur = site;
                while prev[cur] != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for next in self.lattice.neighbors_within(site, self.radii.r2) {
                if prev[next] == usize::MAX && next != a && next != b {
                    prev[next] = site;
                    queue.push_back(next);
                }
            }
        }
        None
    }
}

/// Inserts SWAPs so every gate's operands sit within its interaction radius
/// when it executes. The mapping evolves through the circuit.
pub fn route_swaps<T: Scalar>(
    circuit: &Circuit,
    initial: &Mapping,
    lattice: &Lattice<T>,
    radii: &RadiusConfig<T>,
) -> Result<RoutedCircuit, MapError> {
    radii.validate()?;
    if initial.num_qubits() != circuit.num_qubits() || initial.num_sites() != lattice.len() {
        return Err(MapError::InvalidMapping(
            "mapping does not match circuit width or lattice size".into(),
        ));
    }
    let spec = lattice.spec();
    let mut router = Router {
        lattice,
        radii,
        mapping: initial.clone(),
        out: Vec::with_capacity(circuit.len()),
        bound: 4 * (spec.rows + spec.cols + spec.layers - 1),
    };
    for instr in circuit.instructions() {
        match instr.qubits.as_slice() {
            [_] => {}
            &[u, v] => router.route_pair(instr.id, u, v)?,
            qs => router.route_triple(instr.id, qs)?,
        }
        let id = router.out.len();
        let sites: Vec<usize> = instr.qubits.iter().map(|&q| router.mapping.site_of(q)).collect();
        router.out.push(RoutedInstruction {
            id,
            kind: instr.kind.clone(),
            sites,
            qubits: instr.qubits.iter().map(|&q| Some(q)).collect(),
            origin: Origin::Logical { source: instr.id },
        });
    }
    Ok(RoutedCircuit {
        num_qubits: circuit.num_qubits(),
        num_sites: lattice.len(),
        instructions: router.out,
        initial_mapping: initial.clone(),
        final_mapping: router.mapping,
    })
}
