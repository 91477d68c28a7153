//! Dependency DAG over a routed circuit and greedy, blockade-aware
//! scheduling in pulse units.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::circuit::GateTag;
use crate::mapper::{RoutedCircuit, RoutedInstruction};
use crate::scalar::{clearly_less, Scalar};
use crate::topology::{Lattice, RadiusConfig};

/// Pulse cost of each gate class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateDurations {
    pub pulses_1q: u64,
    pub pulses_2q: u64,
    pub pulses_3q: u64,
    pub pulses_swap: u64,
}

impl Default for GateDurations {
    /// 1, 3, 5 and 9 pulses; a SWAP costs three two-qubit gates.
    fn default() -> Self {
        GateDurations {
            pulses_1q: 1,
            pulses_2q: 3,
            pulses_3q: 5,
            pulses_swap: 9,
        }
    }
}

impl GateDurations {
    pub fn validate(&self) -> Result<(), String> {
        if self.pulses_1q == 0 || self.pulses_2q == 0 || self.pulses_3q == 0 || self.pulses_swap == 0 {
            return Err("gate durations must be positive".into());
        }
        if self.pulses_swap < self.pulses_2q {
            return Err("a SWAP cannot be shorter than a two-qubit gate".into());
        }
        Ok(())
    }

    pub fn of(&self, instr: &RoutedInstruction) -> u64 {
        if instr.kind.tag == GateTag::Swap {
            return self.pulses_swap;
        }
        match instr.arity() {
            1 => self.pulses_1q,
            2 => self.pulses_2q,
            _ => self.pulses_3q,
        }
    }
}

/// Rydberg frequency channel per multi-qubit gate class. Gates on different
/// channels never block each other. All share channel 0 by default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FrequencyPlan {
    pub two_qubit: u8,
    pub three_qubit: u8,
    pub swap: u8,
}

impl FrequencyPlan {
    fn channel(&self, instr: &RoutedInstruction) -> Option<u8> {
        if instr.kind.tag == GateTag::Swap {
            return Some(self.swap);
        }
        match instr.arity() {
            1 => None,
            2 => Some(self.two_qubit),
            _ => Some(self.three_qubit),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dag {
    preds: Vec<Vec<usize>>,
    succs: Vec<Vec<usize>>,
}

impl Dag {
    pub fn len(&self) -> usize {
        self.preds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.preds.is_empty()
    }

    pub fn preds(&self, id: usize) -> &[usize] {
        &self.preds[id]
    }

    pub fn succs(&self, id: usize) -> &[usize] {
        &self.succs[id]
    }

    /// All edges `(pred, succ)`, ordered by successor then predecessor.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.preds
            .iter()
            .enumerate()
            .flat_map(|(s, ps)| ps.iter().map(move |&p| (p, s)))
    }

    /// Longest path where node `i` costs `weight[i]`.
    pub fn longest_path(&self, weight: &[u64]) -> u64 {
        let mut finish = vec![0u64; self.len()];
        // ids are a topological order: every edge points forward
        for id in 0..self.len() {
            let start = self.preds[id].iter().map(|&p| finish[p]).max().unwrap_or(0);
            finish[id] = start + weight[id];
        }
        finish.into_iter().max().unwrap_or(0)
    }
}

/// Links consecutive instructions on every site, plus each SWAP's recorded
/// predecessor SWAPs.
pub fn build_dag(routed: &RoutedCircuit) -> Dag {
    let n = routed.instructions.len();
    let mut preds: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
    let mut last_on = vec![None::<usize>; routed.num_sites];
    for instr in &routed.instructions {
        for &site in &instr.sites {
            if let Some(p) = last_on[site] {
                preds[instr.id].insert(p);
            }
            last_on[site] = Some(instr.id);
        }
        if let crate::mapper::Origin::Swap { after, .. } = &instr.origin {
            preds[instr.id].extend(after.iter().copied());
        }
    }
    let preds: Vec<Vec<usize>> = preds.into_iter().map(|s| s.into_iter().collect()).collect();
    let mut succs = vec![Vec::new(); n];
    for (s, ps) in preds.iter().enumerate() {
        for &p in ps {
            succs[p].push(s);
        }
    }
    Dag { preds, succs }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schedule {
    pub start: Vec<u64>,
    pub duration: Vec<u64>,
    pub makespan: u64,
}

impl Schedule {
    pub fn from_parts(start: Vec<u64>, duration: Vec<u64>) -> Self {
        let makespan = start
            .iter()
            .zip(&duration)
            .map(|(s, d)| s + d)
            .max()
            .unwrap_or(0);
        Schedule {
            start,
            duration,
            makespan,
        }
    }

    pub fn end(&self, id: usize) -> u64 {
        self.start[id] + self.duration[id]
    }
}

fn blockade_conflict<T: Scalar>(lattice: &Lattice<T>, a: &[usize], b: &[usize], rb: T) -> bool {
    a.iter()
        .any(|&x| b.iter().any(|&y| clearly_less(lattice.distance(x, y), rb)))
}

pub fn schedule<T: Scalar>(
    dag: &Dag,
    routed: &RoutedCircuit,
    lattice: &Lattice<T>,
    radii: &RadiusConfig<T>,
    durations: &GateDurations,
) -> Schedule {
    schedule_with(dag, routed, lattice, radii, durations, &FrequencyPlan::default())
}

/// Greedy list scheduling. At each time step the ready instructions are
/// scanned by ascending id; one starts when none of its sites is busy and, for
/// multi-qubit gates, no running gate on the same channel has an operand
/// strictly closer than `rb` to one of its operands.
pub fn schedule_with<T: Scalar>(
    dag: &Dag,
    routed: &RoutedCircuit,
    lattice: &Lattice<T>,
    radii: &RadiusConfig<T>,
    durations: &GateDurations,
    frequencies: &FrequencyPlan,
) -> Schedule {
    let instrs = &routed.instructions;
    let n = instrs.len();
    let duration: Vec<u64> = instrs.iter().map(|i| durations.of(i)).collect();
    let channel: Vec<Option<u8>> = instrs.iter().map(|i| frequencies.channel(i)).collect();
    let mut start = vec![0u64; n];
    let mut waiting: Vec<usize> = (0..n).map(|i| dag.preds(i).len()).collect();
    let mut ready: BTreeSet<usize> = (0..n).filter(|&i| waiting[i] == 0).collect();
    let mut running: Vec<(usize, u64)> = Vec::new();
    let mut site_busy_until = vec![0u64; routed.num_sites];
    let mut scheduled = 0;
    let mut t = 0u64;

    while scheduled < n {
        let mut finished = Vec::new();
        running.retain(|&(id, end)| {
            if end <= t {
                finished.push(id);
                false
            } else {
                true
            }
        });
        for id in finished {
            for &s in dag.succs(id) {
                waiting[s] -= 1;
                if waiting[s] == 0 {
                    ready.insert(s);
                }
            }
        }

        let candidates: Vec<usize> = ready.iter().copied().collect();
        for id in candidates {
            let instr = &instrs[id];
            if instr.sites.iter().any(|&s| site_busy_until[s] > t) {
                continue;
            }
            if let Some(ch) = channel[id] {
                let blocked = running.iter().any(|&(other, _)| {
                    channel[other] == Some(ch)
                        && blockade_conflict(lattice, &instr.sites, &instrs[other].sites, radii.rb)
                });
                if blocked {
                    continue;
                }
            }
            start[id] = t;
            let end = t + duration[id];
            for &s in &instr.sites {
                site_busy_until[s] = end;
            }
            running.push((id, end));
            ready.remove(&id);
            scheduled += 1;
        }

        match running.iter().map(|&(_, end)| end).min() {
            Some(next) => t = next,
            None => {
                assert!(scheduled == n, "scheduler stalled with nothing running");
            }
        }
    }
    Schedule::from_parts(start, duration)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExecutionMetrics {
    /// Schedule makespan in pulses.
    pub critical_pulse_count: u64,
    /// Sum of pulses over all instructions, SWAPs included.
    pub total_pulse_count: u64,
    pub swap_count: usize,
}

pub fn metrics(schedule: &Schedule, routed: &RoutedCircuit) -> ExecutionMetrics {
    ExecutionMetrics {
        critical_pulse_count: schedule.makespan,
        total_pulse_count: schedule.duration.iter().sum(),
        swap_count: routed.swap_count(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum Violation {
    /// `succ` starts before `pred` finishes.
    Dependency { pred: usize, succ: usize },
    /// Two overlapping instructions share a site.
    SiteOverlap { first: usize, second: usize, site: usize },
    /// Two overlapping multi-qubit gates on one channel are within `rb`.
    Blockade { first: usize, second: usize },
    /// Schedule and circuit disagree in length.
    Shape { expected: usize, got: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::Dependency { pred, succ } => {
                write!(f, "dependency: {succ} starts before {pred} finishes")
            }
            Violation::SiteOverlap { first, second, site } => {
                write!(f, "site overlap: {first} and {second} both use site {site}")
            }
            Violation::Blockade { first, second } => {
                write!(f, "blockade: {first} and {second} overlap within the blockade radius")
            }
            Violation::Shape { expected, got } => {
                write!(f, "shape: schedule covers {got} instructions, circuit has {expected}")
            }
        }
    }
}

pub fn validate<T: Scalar>(
    schedule: &Schedule,
    dag: &Dag,
    routed: &RoutedCircuit,
    lattice: &Lattice<T>,
    radii: &RadiusConfig<T>,
) -> Vec<Violation> {
    validate_with(schedule, dag, routed, lattice, radii, &FrequencyPlan::default())
}

/// Lists every broken schedule invariant; empty means the schedule is legal.
pub fn validate_with<T: Scalar>(
    schedule: &Schedule,
    dag: &Dag,
    routed: &RoutedCircuit,
    lattice: &Lattice<T>,
    radii: &RadiusConfig<T>,
    frequencies: &FrequencyPlan,
) -> Vec<Violation> {
    let instrs = &routed.instructions;
    let n = instrs.len();
    if schedule.start.len() != n || schedule.duration.len() != n || dag.len() != n {
        return vec![Violation::Shape {
            expected: n,
            got: schedule.start.len(),
        }];
    }
    let mut out = Vec::new();
    for (pred, succ) in dag.edges() {
        if schedule.start[succ] < schedule.end(pred) {
            out.push(Violation::Dependency { pred, succ });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (schedule.start[i], i));
    for (k, &a) in order.iter().enumerate() {
        for &b in &order[k + 1..] {
            if schedule.start[b] >= schedule.end(a) {
                break;
            }
            let (first, second) = (a.min(b), a.max(b));
            if let Some(&site) = instrs[a].sites.iter().find(|s| instrs[b].sites.contains(s)) {
                out.push(Violation::SiteOverlap { first, second, site });
            }
            let (ca, cb) = (frequencies.channel(&instrs[a]), frequencies.channel(&instrs[b]));
            if ca.is_some()
                && ca == cb
                && blockade_conflict(lattice, &instrs[a].sites, &instrs[b].sites, radii.rb)
            {
                out.push(Violation::Blockade { first, second });
            }
        }
    }
    out
}
