//! Core (blocking-based) stability of coalition partitions.
//!
//! A coalition blocks a partition when every one of its members would be
//! strictly better off in it than where the partition puts them. A
//! partition with no blocking coalition is stable. Everything here is
//! exhaustive and exact: scans run in ascending bitmask order, so results
//! are deterministic, and all guards come from [`SearchLimits`].

use std::fmt;

use crate::problems::{Coalition, CoalitionEvaluator, InducedPreferences, ThetaProblem};
use crate::rational::Rational;
use crate::rules::DivisionRule;
use crate::{AgentId, Error, Result, SearchLimits};

/// A partition of the agents `1..=n` into disjoint coalitions, stored in
/// canonical order (ascending smallest member).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Coalition>,
    n: usize,
}

impl Partition {
    pub fn new(blocks: Vec<Coalition>, n: usize) -> Result<Self> {
        if n == 0 || n > Coalition::MAX_AGENTS {
            return Err(Error::InvalidProblem(format!(
                "agent count {n} outside 1..={}",
                Coalition::MAX_AGENTS
            )));
        }
        let mut union = Coalition::EMPTY;
        let mut covered = 0;
        for &b in &blocks {
            if b.is_empty() {
                return Err(Error::InvalidProblem("empty block".into()));
            }
            union = union.union(b);
            covered += b.size();
        }
        if covered != union.size() {
            return Err(Error::InvalidProblem("blocks overlap".into()));
        }
        if union != Coalition::everyone(n) {
            return Err(Error::InvalidProblem(format!(
                "blocks cover {union}, not all of {}",
                Coalition::everyone(n)
            )));
        }
        let mut blocks = blocks;
        blocks.sort_by_key(|b| b.min_member());
        Ok(Partition { blocks, n })
    }

    pub fn from_blocks_of_ids(blocks: &[Vec<AgentId>], n: usize) -> Result<Self> {
        let coalitions = blocks
            .iter()
            .map(|ids| Coalition::from_ids(ids))
            .collect::<Result<Vec<_>>>()?;
        Self::new(coalitions, n)
    }

    pub fn singletons(n: usize) -> Self {
        let blocks = (1..=n).map(Coalition::singleton).collect();
        Partition { blocks, n }
    }

    pub fn grand(n: usize) -> Self {
        Partition {
            blocks: vec![Coalition::everyone(n)],
            n,
        }
    }

    /// Internal fast path: `blocks` must already be disjoint, covering, and
    /// ordered by smallest member.
    pub(crate) fn from_canonical_blocks(blocks: Vec<Coalition>, n: usize) -> Self {
        debug_assert!(blocks.windows(2).all(|w| w[0].min_member() < w[1].min_member()));
        debug_assert_eq!(
            blocks.iter().fold(Coalition::EMPTY, |u, &b| u.union(b)),
            Coalition::everyone(n)
        );
        Partition { blocks, n }
    }

    pub fn blocks(&self) -> &[Coalition] {
        &self.blocks
    }

    pub fn agent_count(&self) -> usize {
        self.n
    }

    pub fn block_of(&self, agent: AgentId) -> Option<Coalition> {
        self.blocks.iter().copied().find(|b| b.contains(agent))
    }

    /// Multiset of block sizes, descending.
    pub fn size_profile(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.blocks.iter().map(|b| b.size()).collect();
        sizes.sort_unstable_by(|a, b| b.cmp(a));
        sizes
    }
}

impl fmt::Display for Partition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, b) in self.blocks.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{b}")?;
        }
        write!(f, "}}")
    }
}

/// Iterator over all partitions of `1..=n` in restricted-growth-string
/// order. The first item is the grand coalition (all labels equal), the
/// last all singletons.
struct RgsIter {
    labels: Vec<usize>,
    started: bool,
    done: bool,
}

impl RgsIter {
    fn new(n: usize) -> Self {
        RgsIter {
            labels: vec![0; n],
            started: false,
            done: n == 0,
        }
    }

    fn advance(&mut self) -> bool {
        let n = self.labels.len();
        let mut j = n;
        while j > 1 {
            j -= 1;
            let prefix_max = *self.labels[..j].iter().max().unwrap();
            if self.labels[j] <= prefix_max {
                self.labels[j] += 1;
                for k in j + 1..n {
                    self.labels[k] = 0;
                }
                return true;
            }
        }
        false
    }
}

impl Iterator for RgsIter {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if self.started && !self.advance() {
            self.done = true;
            return None;
        }
        self.started = true;
        Some(self.labels.clone())
    }
}

fn labels_to_partition(labels: &[usize]) -> Partition {
    let blocks_count = labels.iter().max().unwrap() + 1;
    let mut blocks = vec![Coalition::EMPTY; blocks_count];
    for (pos, &label) in labels.iter().enumerate() {
        blocks[label] = blocks[label].insert(pos + 1);
    }
    // Labels appear in first-use order, so blocks are already canonical.
    Partition::from_canonical_blocks(blocks, labels.len())
}

/// Iterator over every partition of `1..=n`, grand coalition first,
/// all singletons last. Bell-number sized; guarded by `limits.partitions`.
pub struct PartitionIter {
    inner: RgsIter,
}

impl Iterator for PartitionIter {
    type Item = Partition;

    fn next(&mut self) -> Option<Partition> {
        self.inner.next().map(|labels| labels_to_partition(&labels))
    }
}

pub fn all_partitions(n: usize, limits: &SearchLimits) -> Result<PartitionIter> {
    limits.check("partition enumeration", n, limits.partitions)?;
    Ok(PartitionIter {
        inner: RgsIter::new(n),
    })
}

/// First coalition, in ascending mask order, in which every member is
/// strictly better off than under `partition`. `None` means stable.
pub fn find_blocking(
    evaluator: &dyn CoalitionEvaluator,
    partition: &Partition,
    limits: &SearchLimits,
) -> Result<Option<Coalition>> {
    let n = evaluator.agent_count();
    limits.check("blocking-coalition scan", n, limits.blocking)?;
    if partition.agent_count() != n {
        return Err(Error::InvalidProblem(format!(
            "partition is over {} agents, problem has {n}",
            partition.agent_count()
        )));
    }

    let mut current = Vec::with_capacity(n);
    for agent in 1..=n {
        let home = partition.block_of(agent).expect("partition covers agents");
        current.push(evaluator.utility(agent, home)?);
    }

    'next: for candidate in Coalition::all_nonempty(n) {
        for agent in candidate.members() {
            if evaluator.utility(agent, candidate)? <= current[agent - 1] {
                continue 'next;
            }
        }
        return Ok(Some(candidate));
    }
    Ok(None)
}

pub fn is_stable(
    evaluator: &dyn CoalitionEvaluator,
    partition: &Partition,
    limits: &SearchLimits,
) -> Result<bool> {
    Ok(find_blocking(evaluator, partition, limits)?.is_none())
}

/// Stability check plus the data a caller usually reports alongside it.
#[derive(Clone, Debug)]
pub struct StabilityReport {
    pub stable: bool,
    pub blocking: Option<Coalition>,
    /// Material payoff of each agent `1..=n` in its own block.
    pub payoffs: Vec<Rational>,
}

pub fn stability_report(
    evaluator: &dyn CoalitionEvaluator,
    partition: &Partition,
    limits: &SearchLimits,
) -> Result<StabilityReport> {
    let blocking = find_blocking(evaluator, partition, limits)?;
    let mut payoffs = Vec::with_capacity(evaluator.agent_count());
    for agent in 1..=evaluator.agent_count() {
        let home = partition.block_of(agent).expect("partition covers agents");
        payoffs.push(evaluator.payoff(agent, home)?);
    }
    Ok(StabilityReport {
        stable: blocking.is_none(),
        blocking,
        payoffs,
    })
}

/// Every stable partition, by exhaustive enumeration in
/// restricted-growth-string order. Bell-number sized; guarded by
/// `limits.partitions`.
pub fn enumerate_stable_partitions(
    evaluator: &dyn CoalitionEvaluator,
    limits: &SearchLimits,
) -> Result<Vec<Partition>> {
    let n = evaluator.agent_count();
    let mut stable = Vec::new();
    for partition in all_partitions(n, limits)? {
        if find_blocking(evaluator, &partition, limits)?.is_none() {
            stable.push(partition);
        }
    }
    Ok(stable)
}

/// An agent in an oversized block paid something other than its
/// proportional share.
#[derive(Clone, Debug)]
pub struct OversizeOffender {
    pub block: Coalition,
    pub agent: AgentId,
    pub payoff: Rational,
    pub proportional: Rational,
}

/// Outcome of [`verify_strict_rm_structure`].
#[derive(Clone, Debug)]
pub struct StructureVerdict {
    pub holds: bool,
    /// Agents living in blocks below the minimal size.
    pub undersized_agents: usize,
    /// Those agents may number at most `theta - 1`.
    pub undersized_bound: usize,
    pub oversize_offender: Option<OversizeOffender>,
}

/// Check the structure every stable partition has under a strictly
/// resource-monotonic rule: at most `theta - 1` agents live in undersized
/// blocks, and members of blocks larger than `theta` receive exactly the
/// proportional share of their claim. The partition must be stable;
/// verifying an unstable one is an error, not a `false`.
pub fn verify_strict_rm_structure(
    problem: &ThetaProblem,
    rule: &dyn DivisionRule,
    partition: &Partition,
    limits: &SearchLimits,
) -> Result<StructureVerdict> {
    let prefs = InducedPreferences::new(problem, rule);
    if let Some(blocker) = find_blocking(&prefs, partition, limits)? {
        return Err(Error::Precondition(format!(
            "partition {partition} is not stable (blocked by {blocker}); structure checks apply to stable partitions only"
        )));
    }

    let theta = problem.theta();
    let mut undersized_agents = 0;
    let mut oversize_offender = None;
    for &block in partition.blocks() {
        if block.size() < theta {
            undersized_agents += block.size();
        } else if block.size() > theta && oversize_offender.is_none() {
            let alloc = prefs.allocation(block)?;
            for agent in block.members() {
                let payoff = alloc.get(agent).expect("member in allocation").clone();
                let proportional = problem.claim(agent) * problem.alpha();
                if payoff != proportional {
                    oversize_offender = Some(OversizeOffender {
                        block,
                        agent,
                        payoff,
                        proportional,
                    });
                    break;
                }
            }
        }
    }
    Ok(StructureVerdict {
        holds: undersized_agents <= theta - 1 && oversize_offender.is_none(),
        undersized_agents,
        undersized_bound: theta - 1,
        oversize_offender,
    })
}

/// Is `coalition` weakly best for each of its members among all coalitions
/// available inside `ground`?
pub fn is_top_coalition(
    evaluator: &dyn CoalitionEvaluator,
    coalition: Coalition,
    ground: Coalition,
    limits: &SearchLimits,
) -> Result<bool> {
    limits.check("top-coalition scan", ground.size(), limits.blocking)?;
    if coalition.is_empty() {
        return Err(Error::InvalidProblem("empty coalition".into()));
    }
    if !coalition.is_subset_of(ground) {
        return Err(Error::NotAMember {
            agent: coalition.difference(ground).min_member().unwrap(),
            context: format!("the ground set {ground}"),
        });
    }

    let mut own = Vec::new();
    for agent in coalition.members() {
        own.push((agent, evaluator.utility(agent, coalition)?));
    }
    for alternative in ground.nonempty_subsets() {
        for (agent, utility) in &own {
            if alternative.contains(*agent)
                && evaluator.utility(*agent, alternative)? > *utility
            {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Two overlapping coalitions pulling two shared members in opposite
/// directions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlignmentWitness {
    pub first: Coalition,
    pub second: Coalition,
    /// Shared member strictly preferring `first`.
    pub prefers_first: AgentId,
    /// Shared member strictly preferring `second`.
    pub prefers_second: AgentId,
}

/// Search all coalition pairs sharing at least two members for a
/// disagreement between shared members. `None` means aligned: in every
/// such pair, all shared members pull the same way.
pub fn check_weak_pairwise_alignment(
    evaluator: &dyn CoalitionEvaluator,
    limits: &SearchLimits,
) -> Result<Option<AlignmentWitness>> {
    let n = evaluator.agent_count();
    limits.check("pairwise alignment scan", n, limits.alignment)?;

    let utilities = utility_table(evaluator, n)?;
    let coalitions: Vec<Coalition> = Coalition::all_nonempty(n).collect();
    for (pos, &first) in coalitions.iter().enumerate() {
        for &second in &coalitions[pos + 1..] {
            let shared = first.intersection(second);
            if shared.size() < 2 {
                continue;
            }
            let mut prefers_first = None;
            let mut prefers_second = None;
            for agent in shared.members() {
                let a = &utilities[agent - 1][first.mask() as usize];
                let b = &utilities[agent - 1][second.mask() as usize];
                if a > b {
                    prefers_first.get_or_insert(agent);
                } else if b > a {
                    prefers_second.get_or_insert(agent);
                }
            }
            if let (Some(i), Some(j)) = (prefers_first, prefers_second) {
                return Ok(Some(AlignmentWitness {
                    first,
                    second,
                    prefers_first: i,
                    prefers_second: j,
                }));
            }
        }
    }
    Ok(None)
}

/// Utilities of every agent in every coalition containing it, indexed
/// `[agent - 1][mask]`. Slots for coalitions not containing the agent stay
/// `None`.
fn utility_table(
    evaluator: &dyn CoalitionEvaluator,
    n: usize,
) -> Result<Vec<Vec<Option<Rational>>>> {
    let mut table = vec![vec![None; 1usize << n]; n];
    for coalition in Coalition::all_nonempty(n) {
        for agent in coalition.members() {
            table[agent - 1][coalition.mask() as usize] =
                Some(evaluator.utility(agent, coalition)?);
        }
    }
    Ok(table)
}

/// Does `winner` improve on `loser` for everyone they share, strictly for
/// at least one? (Vacuously false on disjoint coalitions.)
fn improves_for_shared(
    utilities: &[Vec<Option<Rational>>],
    winner: Coalition,
    loser: Coalition,
) -> bool {
    let shared = winner.intersection(loser);
    if shared.is_empty() {
        return false;
    }
    let mut strict = false;
    for agent in shared.members() {
        let w = utilities[agent - 1][winner.mask() as usize]
            .as_ref()
            .expect("shared member");
        let l = utilities[agent - 1][loser.mask() as usize]
            .as_ref()
            .expect("shared member");
        if w < l {
            return false;
        }
        if w > l {
            strict = true;
        }
    }
    strict
}

/// Shortest improvement cycle of length at most `max_len`: coalitions
/// `(S_1, ..., S_k)` where each `S_{l+1}` improves on `S_l` for their
/// shared members (cyclically). The relation is irreflexive and has no
/// 2-cycles, so any cycle has `k >= 3`; `max_len < 3` always yields `None`.
///
/// Deterministic: the search prefers shorter cycles, then earlier starting
/// coalitions in mask order.
pub fn find_cycle(
    evaluator: &dyn CoalitionEvaluator,
    max_len: usize,
    limits: &SearchLimits,
) -> Result<Option<Vec<Coalition>>> {
    let n = evaluator.agent_count();
    limits.check("improvement-cycle search", n, limits.cycles)?;
    if max_len < 3 {
        return Ok(None);
    }

    let utilities = utility_table(evaluator, n)?;
    let coalitions: Vec<Coalition> = Coalition::all_nonempty(n).collect();
    let index_of = |c: Coalition| (c.mask() - 1) as usize;

    // successors[u] = coalitions improving on u, ascending.
    let mut successors: Vec<Vec<usize>> = vec![Vec::new(); coalitions.len()];
    for (ui, &u) in coalitions.iter().enumerate() {
        for &v in &coalitions {
            if u != v && improves_for_shared(&utilities, v, u) {
                successors[ui].push(index_of(v));
            }
        }
    }

    let mut best: Option<Vec<usize>> = None;
    for start in 0..coalitions.len() {
        let bound = best.as_ref().map_or(max_len, |b| b.len() - 1);
        // Breadth-first from `start`; closing edge u -> start completes a
        // cycle of length dist(u) + 1.
        let mut parent: Vec<Option<usize>> = vec![None; coalitions.len()];
        let mut dist: Vec<Option<usize>> = vec![None; coalitions.len()];
        dist[start] = Some(0);
        let mut queue = std::collections::VecDeque::from([start]);
        'bfs: while let Some(u) = queue.pop_front() {
            let du = dist[u].unwrap();
            if du + 1 > bound {
                break;
            }
            for &v in &successors[u] {
                if v == start && du >= 2 {
                    // Parent chain ends at `start`, so the reversed chain
                    // is the full cycle (start, ..., u).
                    let mut path = vec![u];
                    let mut w = u;
                    while let Some(p) = parent[w] {
                        path.push(p);
                        w = p;
                    }
                    path.reverse();
                    debug_assert_eq!(path.len(), du + 1);
                    best = Some(path);
                    break 'bfs;
                }
                if dist[v].is_none() {
                    dist[v] = Some(du + 1);
                    parent[v] = Some(u);
                    queue.push_back(v);
                }
            }
        }
        if best.as_ref().is_some_and(|b| b.len() == 3) {
            break; // no cycle can be shorter
        }
    }

    Ok(best.map(|path| path.into_iter().map(|i| coalitions[i]).collect()))
}
