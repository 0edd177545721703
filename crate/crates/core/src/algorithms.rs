//! Constructive stable-partition algorithms.
//!
//! All of them work on a minimal-size problem, repeatedly carving one block
//! out of the residual agent pool until at most `theta` agents remain (the
//! remainder block). Every run returns a [trace](AlgorithmTrace) recording,
//! step by step, which case fired and the exact threshold values behind the
//! decision, so a reader can replay and audit the construction.
//!
//! Agents are always ranked by (claim, id) ascending; ties in a case
//! condition resolve to Case (i). Everything is exact rational arithmetic.

use std::fmt;

use num::{One, Signed};

use crate::problems::{Coalition, CoalitionEvaluator, InducedPreferences, ThetaProblem};
use crate::rational::Rational;
use crate::rules::{cea, ClaimsProblem, DivisionRule};
use crate::stability::Partition;
use crate::{AgentId, Error, Result, SearchLimits};

/// Which branch a case decision took.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Case {
    I,
    II,
}

impl fmt::Display for Case {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Case::I => write!(f, "i"),
            Case::II => write!(f, "ii"),
        }
    }
}

/// The exact quantities a case decision compared.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CaseComparison {
    /// Pair form: Case (i) iff `alpha <= delta`.
    Delta { delta: Rational, alpha: Rational },
    /// Growth form: Case (i) iff the equal-awards water level of the
    /// candidate (current set plus `high`) stays within
    /// `(1 - alpha) * claim(low) + alpha * claim(high)`.
    Lambda {
        lambda: Rational,
        bound: Rational,
        low: AgentId,
        high: AgentId,
    },
}

/// One audited decision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    /// 1-based position in the run.
    pub index: usize,
    /// Agents still in play at this decision. For growth steps this is the
    /// candidate pool, excluding the block under construction.
    pub working_set: Coalition,
    /// `None` for remainder and discovery steps.
    pub case: Option<Case>,
    pub comparison: Option<CaseComparison>,
    /// The set selected by this step; a partial set while a block grows.
    pub formed: Coalition,
    /// Whether `formed` enters the partition as a finished block.
    pub completes_block: bool,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlgorithmTrace {
    pub algorithm: String,
    pub steps: Vec<TraceStep>,
}

impl AlgorithmTrace {
    /// Finished blocks in formation order.
    pub fn completed_blocks(&self) -> Vec<Coalition> {
        self.steps
            .iter()
            .filter(|s| s.completes_block)
            .map(|s| s.formed)
            .collect()
    }
}

/// A constructed partition together with its audit trail.
#[derive(Clone, Debug)]
pub struct AlgorithmRun {
    pub partition: Partition,
    pub trace: AlgorithmTrace,
}

/// Members of `set` ranked by (claim, id) ascending.
fn ranked(problem: &ThetaProblem, set: Coalition) -> Vec<AgentId> {
    let mut ids = set.ids();
    ids.sort_by(|&a, &b| problem.claim(a).cmp(problem.claim(b)).then(a.cmp(&b)));
    ids
}

fn finish(
    problem: &ThetaProblem,
    algorithm: &str,
    blocks: Vec<Coalition>,
    mut steps: Vec<TraceStep>,
) -> Result<AlgorithmRun> {
    for (pos, step) in steps.iter_mut().enumerate() {
        step.index = pos + 1;
    }
    Ok(AlgorithmRun {
        partition: Partition::new(blocks, problem.agent_count())?,
        trace: AlgorithmTrace {
            algorithm: algorithm.to_string(),
            steps,
        },
    })
}

fn remainder_step(working: Coalition) -> TraceStep {
    TraceStep {
        index: 0,
        working_set: working,
        case: None,
        comparison: None,
        formed: working,
        completes_block: true,
    }
}

/// Pairing algorithm for minimal size 2.
///
/// While more than two agents remain (ranked by claim), compare the
/// endowment fraction with `delta = 2*c_low / (2*c_low - c_second + c_high)`:
/// at most delta, the two highest claims pair up (Case i); above it, the
/// extremes pair up (Case ii). The last one or two agents form the
/// remainder. With one or two agents total there is nothing to decide and
/// the grand coalition is returned.
pub fn cea_algorithm(problem: &ThetaProblem) -> Result<AlgorithmRun> {
    if problem.theta() != 2 {
        return Err(Error::InvalidProblem(format!(
            "the pairing algorithm requires minimal size 2, got {}",
            problem.theta()
        )));
    }
    let n = problem.agent_count();
    if n <= 2 {
        let everyone = problem.everyone();
        return finish(problem, "cea", vec![everyone], vec![remainder_step(everyone)]);
    }

    let alpha = problem.alpha();
    let mut queue = ranked(problem, problem.everyone());
    let mut blocks = Vec::new();
    let mut steps = Vec::new();
    while queue.len() > 2 {
        let working = Coalition::from_ids(&queue)?;
        let low = queue[0];
        let second = queue[queue.len() - 2];
        let high = queue[queue.len() - 1];
        let two_low = Rational::from_integer(2.into()) * problem.claim(low);
        let delta = &two_low / (&two_low - problem.claim(second) + problem.claim(high));
        let (case, pair) = if *alpha <= delta {
            (Case::I, Coalition::from_ids(&[second, high])?)
        } else {
            (Case::II, Coalition::from_ids(&[low, high])?)
        };
        queue.retain(|&a| !pair.contains(a));
        steps.push(TraceStep {
            index: 0,
            working_set: working,
            case: Some(case),
            comparison: Some(CaseComparison::Delta {
                delta,
                alpha: alpha.clone(),
            }),
            formed: pair,
            completes_block: true,
        });
        blocks.push(pair);
    }
    let remainder = Coalition::from_ids(&queue)?;
    steps.push(remainder_step(remainder));
    blocks.push(remainder);
    finish(problem, "cea", blocks, steps)
}

/// A block grown by [`theta_cea_set`], with the decisions that built it.
#[derive(Clone, Debug)]
pub struct GrowthOutcome {
    pub coalition: Coalition,
    pub steps: Vec<TraceStep>,
}

/// Grow one block of size `theta` inside `ground`.
///
/// Seeded with the highest-ranked agent, the set absorbs one agent per
/// step: either the highest remaining claim (Case i) or the lowest
/// (Case ii), depending on whether the equal-awards water level of the
/// high candidate set stays within `(1-alpha)*c_low + alpha*c_high`. The
/// candidate's endowment is the proportional share of its total claim
/// regardless of its size; the minimal-size cutoff shapes the induced
/// game, not this construction.
pub fn theta_cea_set(problem: &ThetaProblem, ground: Coalition) -> Result<GrowthOutcome> {
    let theta = problem.theta();
    if !ground.is_subset_of(problem.everyone()) {
        return Err(Error::NotAMember {
            agent: ground.difference(problem.everyone()).min_member().unwrap_or(0),
            context: "the problem".into(),
        });
    }
    if ground.size() <= theta {
        return Err(Error::Precondition(format!(
            "growth needs a ground set larger than the minimal size {theta}, got {} agents",
            ground.size()
        )));
    }

    let alpha = problem.alpha();
    let order = ranked(problem, ground);
    let mut lo = 0;
    let mut hi = order.len() - 2;
    let mut grown = Coalition::singleton(order[order.len() - 1]);
    let mut steps = Vec::new();
    while grown.size() < theta {
        let low = order[lo];
        let high = order[hi];
        let candidate = grown.insert(high);
        let lambda = equal_awards_level(problem, candidate)?;
        let bound = (Rational::one() - alpha) * problem.claim(low) + alpha * problem.claim(high);
        let case = if lambda <= bound { Case::I } else { Case::II };
        let mut working = Coalition::EMPTY;
        for &a in &order[lo..=hi] {
            working = working.insert(a);
        }
        match case {
            Case::I => {
                grown = candidate;
                hi -= 1;
            }
            Case::II => {
                grown = grown.insert(low);
                lo += 1;
            }
        }
        steps.push(TraceStep {
            index: steps.len() + 1,
            working_set: working,
            case: Some(case),
            comparison: Some(CaseComparison::Lambda {
                lambda,
                bound,
                low,
                high,
            }),
            formed: grown,
            completes_block: grown.size() == theta,
        });
    }
    Ok(GrowthOutcome {
        coalition: grown,
        steps,
    })
}

/// Equal-awards water level of `set` dividing the proportional share of its
/// total claim.
fn equal_awards_level(problem: &ThetaProblem, set: Coalition) -> Result<Rational> {
    let ids = set.ids();
    let claims: Vec<Rational> = ids.iter().map(|&a| problem.claim(a).clone()).collect();
    let endowment = problem.coalition_claim(set)? * problem.alpha();
    Ok(cea(&ClaimsProblem::new(ids, claims, endowment)?)?.lambda)
}

/// Carve size-`theta` blocks out of the agent pool with [`theta_cea_set`]
/// until at most `theta` agents remain; they form the remainder. With
/// exactly `theta` agents the grand coalition is returned directly.
pub fn theta_cea_algorithm(problem: &ThetaProblem) -> Result<AlgorithmRun> {
    let theta = problem.theta();
    let mut residual = problem.everyone();
    let mut blocks = Vec::new();
    let mut steps = Vec::new();
    while residual.size() > theta {
        let grown = theta_cea_set(problem, residual)?;
        steps.extend(grown.steps);
        blocks.push(grown.coalition);
        residual = residual.difference(grown.coalition);
    }
    steps.push(remainder_step(residual));
    blocks.push(residual);
    finish(problem, "theta-cea", blocks, steps)
}

/// Blocks of `theta` consecutive lowest-claim agents; the highest claims
/// are the remainder. No case decisions, so the trace only records block
/// formation.
pub fn theta_cel_algorithm(problem: &ThetaProblem) -> Result<AlgorithmRun> {
    let theta = problem.theta();
    let order = ranked(problem, problem.everyone());
    let mut blocks = Vec::new();
    let mut steps = Vec::new();
    let mut from = 0;
    while order.len() - from > theta {
        let block = Coalition::from_ids(&order[from..from + theta])?;
        let mut working = Coalition::EMPTY;
        for &a in &order[from..] {
            working = working.insert(a);
        }
        steps.push(TraceStep {
            index: 0,
            working_set: working,
            case: None,
            comparison: None,
            formed: block,
            completes_block: true,
        });
        blocks.push(block);
        from += theta;
    }
    let remainder = Coalition::from_ids(&order[from..])?;
    steps.push(remainder_step(remainder));
    blocks.push(remainder);
    finish(problem, "theta-cel", blocks, steps)
}

/// Build a stable partition for any rule declared resource monotonic and
/// consistent, by repeatedly extracting a top coalition.
///
/// Each round brute-forces the first coalition (ascending mask order) of at
/// least the minimal size that is unanimously best for its members within
/// the residual pool, then shrinks it to exactly the minimal size: an
/// agent paid above its proportional share leaves (largest surplus first,
/// ties to the smallest id); if everyone is exactly proportional, the
/// largest id leaves, which lands on the lexicographically first subset.
/// The declared properties guarantee a qualifying top coalition exists and
/// that shrinking preserves topness; if a rule breaks that promise the
/// construction aborts rather than emit an unstable partition.
pub fn top_coalition_constructor(
    problem: &ThetaProblem,
    rule: &dyn DivisionRule,
    limits: &SearchLimits,
) -> Result<AlgorithmRun> {
    if !rule.declares_resource_monotonic() || !rule.declares_consistent() {
        return Err(Error::Precondition(format!(
            "rule {:?} must declare resource monotonicity and consistency",
            rule.name()
        )));
    }
    let n = problem.agent_count();
    limits.check("top-coalition construction", n, limits.top_search)?;

    let theta = problem.theta();
    let prefs = InducedPreferences::new(problem, rule);
    let mut residual = problem.everyone();
    let mut blocks = Vec::new();
    let mut steps = Vec::new();
    while residual.size() > theta {
        // Best utility each residual agent can reach inside the pool.
        let mut best: Vec<Option<Rational>> = vec![None; n];
        for s in residual.nonempty_subsets() {
            for agent in s.members() {
                let u = prefs.utility(agent, s)?;
                let slot = &mut best[agent - 1];
                if slot.as_ref().is_none_or(|b| u > *b) {
                    *slot = Some(u);
                }
            }
        }

        let mut top = None;
        'search: for s in residual.nonempty_subsets() {
            if s.size() < theta {
                continue;
            }
            for agent in s.members() {
                if prefs.utility(agent, s)? < *best[agent - 1].as_ref().unwrap() {
                    continue 'search;
                }
            }
            top = Some(s);
            break;
        }
        let top = top.ok_or_else(|| {
            Error::RuleContract(format!(
                "no coalition of size at least {theta} is unanimously best within {residual}"
            ))
        })?;

        if top.size() > theta {
            steps.push(TraceStep {
                index: 0,
                working_set: residual,
                case: None,
                comparison: None,
                formed: top,
                completes_block: false,
            });
        }
        let mut block = top;
        while block.size() > theta {
            let alloc = prefs.allocation(block)?;
            let mut leaver: Option<(AgentId, Rational)> = None;
            for agent in block.members() {
                let surplus =
                    alloc.get(agent).expect("member paid").clone() - problem.claim(agent) * problem.alpha();
                if surplus.is_positive()
                    && leaver.as_ref().is_none_or(|(_, s)| surplus > *s)
                {
                    leaver = Some((agent, surplus));
                }
            }
            block = match leaver {
                Some((agent, _)) => block.remove(agent),
                // Everyone exactly proportional: drop the largest id.
                None => block.remove(block.max_member().unwrap()),
            };
        }
        for agent in block.members() {
            if prefs.utility(agent, block)? < *best[agent - 1].as_ref().unwrap() {
                return Err(Error::RuleContract(format!(
                    "shrinking {top} to {block} hurt agent {agent}; the declared properties do not hold"
                )));
            }
        }
        steps.push(TraceStep {
            index: 0,
            working_set: residual,
            case: None,
            comparison: None,
            formed: block,
            completes_block: true,
        });
        blocks.push(block);
        residual = residual.difference(block);
    }
    steps.push(remainder_step(residual));
    blocks.push(residual);
    finish(problem, "top-coalition", blocks, steps)
}

/// The three claim-profile thresholds of a working set, evaluated on its
/// lowest, second-highest, and highest claims.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThresholdBundle {
    /// Below this fraction the water level stays under the lowest claim.
    pub beta: Rational,
    /// Case boundary of the pairing decision.
    pub delta: Rational,
    /// Above this fraction the top pair's water level caps its junior
    /// member.
    pub gamma: Rational,
}

/// Compute `beta`, `delta`, `gamma` for `working` (at least two members).
/// The chain `beta <= delta <= gamma` is a theorem for positive claims; it
/// is asserted, not returned.
pub fn thresholds(problem: &ThetaProblem, working: Coalition) -> Result<ThresholdBundle> {
    if working.size() < 2 {
        return Err(Error::Precondition(
            "thresholds need at least two agents".into(),
        ));
    }
    let order = ranked(problem, working);
    let low = problem.claim(order[0]);
    let second = problem.claim(order[order.len() - 2]);
    let high = problem.claim(order[order.len() - 1]);
    let two = Rational::from_integer(2.into());

    let beta = &two * low / (low + high);
    let delta = &two * low / (&two * low - second + high);
    let gamma = &two * second / (second + high);
    assert!(beta <= delta && delta <= gamma, "threshold chain broke");
    Ok(ThresholdBundle { beta, delta, gamma })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AssortativityLabel {
    /// Consecutive claims (or a singleton).
    Positive,
    /// An extreme pair: lowest with highest of its working set.
    Negative,
    Mixed,
}

impl fmt::Display for AssortativityLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AssortativityLabel::Positive => write!(f, "positive"),
            AssortativityLabel::Negative => write!(f, "negative"),
            AssortativityLabel::Mixed => write!(f, "mixed"),
        }
    }
}

/// Per-block assortativity labels, in the partition's canonical block
/// order.
#[derive(Clone, Debug)]
pub struct AssortativityReport {
    pub labels: Vec<(Coalition, AssortativityLabel)>,
    /// Without a trace, extreme pairs cannot be told apart from arbitrary
    /// non-consecutive blocks, and only Positive/Mixed are assigned.
    pub trace_informed: bool,
}

impl AssortativityReport {
    pub fn label_of(&self, block: Coalition) -> Option<AssortativityLabel> {
        self.labels
            .iter()
            .find(|(b, _)| *b == block)
            .map(|(_, l)| *l)
    }
}

/// Classify each block of `partition`: singletons and blocks of consecutive
/// claims are positively assortative; pairs formed by a Case (ii) decision
/// in `trace` are negatively assortative; everything else is mixed. Pass
/// the trace of the run that produced the partition for the full
/// classification.
pub fn classify_assortativity(
    problem: &ThetaProblem,
    partition: &Partition,
    trace: Option<&AlgorithmTrace>,
) -> Result<AssortativityReport> {
    if partition.agent_count() != problem.agent_count() {
        return Err(Error::InvalidProblem(format!(
            "partition is over {} agents, problem has {}",
            partition.agent_count(),
            problem.agent_count()
        )));
    }
    let order = ranked(problem, problem.everyone());
    let mut rank = vec![0usize; problem.agent_count() + 1];
    for (pos, &agent) in order.iter().enumerate() {
        rank[agent] = pos;
    }

    let mut labels = Vec::new();
    for &block in partition.blocks() {
        let mut ranks: Vec<usize> = block.members().map(|a| rank[a]).collect();
        ranks.sort_unstable();
        let consecutive = ranks.windows(2).all(|w| w[1] == w[0] + 1);
        let label = if consecutive {
            AssortativityLabel::Positive
        } else if trace.is_some_and(|t| {
            t.steps.iter().any(|s| {
                s.completes_block && s.formed == block && s.case == Some(Case::II) && block.size() == 2
            })
        }) {
            AssortativityLabel::Negative
        } else {
            AssortativityLabel::Mixed
        };
        labels.push((block, label));
    }
    Ok(AssortativityReport {
        labels,
        trace_informed: trace.is_some(),
    })
}

/// The pair blocks formed by explicit case decisions, with their labels,
/// in formation order. Remainder blocks are excluded.
pub fn case_pair_summary(
    report: &AssortativityReport,
    trace: &AlgorithmTrace,
) -> Vec<(Coalition, Case, AssortativityLabel)> {
    trace
        .steps
        .iter()
        .filter(|s| s.completes_block && s.formed.size() == 2)
        .filter_map(|s| {
            let case = s.case?;
            let label = report.label_of(s.formed)?;
            Some((s.formed, case, label))
        })
        .collect()
}
