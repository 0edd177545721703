//! Division when agents have an ideal point instead of a claim.
//!
//! A coalition may have more to divide than its members ideally want, so
//! the waterline rules gain a second regime: ideal points act as caps under
//! excess demand and as floors under excess supply. Coalitional endowments
//! come either from an explicit per-coalition table or from the same
//! ratio-with-minimal-size schedule the claims modules use, except the
//! ratio may exceed 1. Block construction for the supply side lives at the
//! bottom of this module; the demand side reduces to the claims algorithms.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num::{One, Signed, Zero};

use crate::algorithms::{AlgorithmRun, AlgorithmTrace, TraceStep};
use crate::problems::{Coalition, CoalitionEvaluator};
use crate::rational::{format_rational, int, total, Rational};
use crate::rules::{cap_fill, floor_fill, loss_fill};
use crate::stability::{all_partitions, Partition};
use crate::{AgentId, Error, Result, SearchLimits};

/// Where an endowment sits relative to the sum of ideal points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    /// Less to divide than the members ideally want.
    Demand,
    /// More to divide than the members ideally want.
    Supply,
    /// Endowment exactly matches the sum of ideals.
    Balanced,
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Regime::Demand => write!(f, "excess demand"),
            Regime::Supply => write!(f, "excess supply"),
            Regime::Balanced => write!(f, "balanced"),
        }
    }
}

pub fn regime(peaks: &[Rational], endowment: &Rational) -> Regime {
    match endowment.cmp(&total(peaks)) {
        Ordering::Less => Regime::Demand,
        Ordering::Greater => Regime::Supply,
        Ordering::Equal => Regime::Balanced,
    }
}

fn check_profile(peaks: &[Rational], endowment: &Rational) -> Result<()> {
    if peaks.is_empty() {
        return Err(Error::InvalidProblem("no agents".into()));
    }
    if let Some(bad) = peaks.iter().find(|p| p.is_negative()) {
        return Err(Error::InvalidProblem(format!(
            "ideal points must be nonnegative, found {}",
            format_rational(bad)
        )));
    }
    if endowment.is_negative() {
        return Err(Error::InvalidProblem(format!(
            "endowment must be nonnegative, found {}",
            format_rational(endowment)
        )));
    }
    Ok(())
}

/// Divides `endowment` as equally as possible subject to the ideal points:
/// they cap payoffs when the endowment falls short of their sum and floor
/// them when it exceeds it. The balanced case hands everyone their ideal.
pub fn uniform_rule(peaks: &[Rational], endowment: &Rational) -> Result<Vec<Rational>> {
    check_profile(peaks, endowment)?;
    let (_, payoffs) = match regime(peaks, endowment) {
        Regime::Supply => floor_fill(peaks, endowment),
        _ => cap_fill(peaks, endowment),
    };
    Ok(payoffs)
}

/// Everyone receives their ideal point plus an equal share of the slack.
/// Defined only when the endowment covers the sum of ideals.
pub fn equal_surplus_rule(peaks: &[Rational], endowment: &Rational) -> Result<Vec<Rational>> {
    check_profile(peaks, endowment)?;
    let sum = total(peaks);
    if sum > *endowment {
        return Err(Error::RegimeMismatch(format!(
            "equal-surplus split needs excess supply; ideals sum to {} but the endowment is {}",
            format_rational(&sum),
            format_rational(endowment)
        )));
    }
    let share = (endowment - &sum) / int(peaks.len() as i64);
    Ok(peaks.iter().map(|p| p + &share).collect())
}

/// Which payoff family a coalition's division follows.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpVariant {
    /// Uniform division in both regimes.
    Uniform,
    /// Equal losses under excess demand, equal surplus under excess supply.
    CelEqualSurplus,
}

impl fmt::Display for SpVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpVariant::Uniform => write!(f, "uniform"),
            SpVariant::CelEqualSurplus => write!(f, "cel-es"),
        }
    }
}

impl FromStr for SpVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(SpVariant::Uniform),
            "cel-es" => Ok(SpVariant::CelEqualSurplus),
            other => Err(Error::InvalidProblem(format!(
                "unknown payoff variant {other:?} (expected \"uniform\" or \"cel-es\")"
            ))),
        }
    }
}

/// Payoff vector for one coalition under the chosen variant, routed by
/// regime. Both variants hand out exactly the ideals on the knife edge.
pub fn mixed_rule_payoff(
    variant: SpVariant,
    peaks: &[Rational],
    endowment: &Rational,
) -> Result<Vec<Rational>> {
    match variant {
        SpVariant::Uniform => uniform_rule(peaks, endowment),
        SpVariant::CelEqualSurplus => {
            check_profile(peaks, endowment)?;
            if regime(peaks, endowment) == Regime::Supply {
                equal_surplus_rule(peaks, endowment)
            } else {
                Ok(loss_fill(peaks, endowment).1)
            }
        }
    }
}

/// Orders two payoffs from the viewpoint of an agent with the given ideal
/// point: strictly closer is strictly better, symmetrically around the
/// ideal. `Greater` means `x` wins.
pub fn sp_prefers(x: &Rational, y: &Rational, peak: &Rational) -> Ordering {
    let dx = (x - peak).abs();
    let dy = (y - peak).abs();
    dy.cmp(&dx)
}

/// How many agents an explicit endowment table may cover; it stores one
/// entry per nonempty coalition.
pub const MAX_TABLE_AGENTS: usize = 16;

/// Coalitional endowments: either spelled out per coalition, or derived
/// from a ratio with a minimal viable size.
#[derive(Clone, Debug)]
pub enum SpEndowments {
    /// One endowment per nonempty coalition.
    Table(BTreeMap<Coalition, Rational>),
    /// Coalitions of at least `theta` members receive `alpha` times the
    /// sum of member ideals; smaller ones receive nothing. A ratio above 1
    /// puts every viable coalition in excess supply.
    Proportional { alpha: Rational, theta: usize },
}

#[derive(Clone, Debug)]
pub struct SinglePeakedProblem {
    peaks: Vec<Rational>,
    endowments: SpEndowments,
}

impl SinglePeakedProblem {
    /// Problem with an explicit endowment table. The table must price every
    /// nonempty coalition of `1..=n`.
    pub fn with_table(
        peaks: Vec<Rational>,
        entries: Vec<(Coalition, Rational)>,
    ) -> Result<Self> {
        let n = peaks.len();
        if n == 0 {
            return Err(Error::InvalidProblem("no agents".into()));
        }
        if n > MAX_TABLE_AGENTS {
            return Err(Error::TooLarge {
                what: "endowment-table agents",
                n,
                max: MAX_TABLE_AGENTS,
            });
        }
        check_profile(&peaks, &Rational::zero())?;
        let everyone = Coalition::everyone(n);
        let mut table = BTreeMap::new();
        for (coalition, value) in entries {
            if coalition.is_empty() {
                return Err(Error::InvalidProblem(
                    "the empty coalition cannot carry an endowment".into(),
                ));
            }
            if let Some(stray) = coalition.difference(everyone).min_member() {
                return Err(Error::NotAMember {
                    agent: stray,
                    context: format!("endowment table over agents 1..={n}"),
                });
            }
            if value.is_negative() {
                return Err(Error::InvalidProblem(format!(
                    "endowment of {coalition} is negative"
                )));
            }
            if table.insert(coalition, value).is_some() {
                return Err(Error::InvalidProblem(format!(
                    "duplicate endowment entry for {coalition}"
                )));
            }
        }
        if table.len() != (1usize << n) - 1 {
            let missing = Coalition::all_nonempty(n)
                .find(|s| !table.contains_key(s))
                .expect("a coalition is missing");
            return Err(Error::InvalidProblem(format!(
                "endowment table is incomplete: no entry for {missing}"
            )));
        }
        Ok(SinglePeakedProblem {
            peaks,
            endowments: SpEndowments::Table(table),
        })
    }

    /// Threshold form: viable coalitions get `alpha` times their summed
    /// ideals.
    pub fn proportional(peaks: Vec<Rational>, alpha: Rational, theta: usize) -> Result<Self> {
        let n = peaks.len();
        if n == 0 {
            return Err(Error::InvalidProblem("no agents".into()));
        }
        if n > Coalition::MAX_AGENTS {
            return Err(Error::TooLarge {
                what: "agents",
                n,
                max: Coalition::MAX_AGENTS,
            });
        }
        check_profile(&peaks, &Rational::zero())?;
        if !alpha.is_positive() {
            return Err(Error::InvalidProblem(format!(
                "the endowment ratio must be positive, found {}",
                format_rational(&alpha)
            )));
        }
        if theta == 0 || theta > n {
            return Err(Error::InvalidProblem(format!(
                "minimal size {theta} is outside 1..={n}"
            )));
        }
        Ok(SinglePeakedProblem {
            peaks,
            endowments: SpEndowments::Proportional { alpha, theta },
        })
    }

    /// Threshold form with the ratio derived from a whole-group endowment.
    pub fn proportional_from_endowment(
        peaks: Vec<Rational>,
        endowment: &Rational,
        theta: usize,
    ) -> Result<Self> {
        let sum = total(&peaks);
        if !sum.is_positive() {
            return Err(Error::InvalidProblem(
                "ideal points sum to zero; the endowment ratio is undefined".into(),
            ));
        }
        Self::proportional(peaks, endowment / &sum, theta)
    }

    pub fn agent_count(&self) -> usize {
        self.peaks.len()
    }

    pub fn peaks(&self) -> &[Rational] {
        &self.peaks
    }

    /// Ideal point of `agent` (1-based).
    pub fn peak(&self, agent: AgentId) -> &Rational {
        &self.peaks[agent - 1]
    }

    pub fn endowments(&self) -> &SpEndowments {
        &self.endowments
    }

    pub fn everyone(&self) -> Coalition {
        Coalition::everyone(self.agent_count())
    }

    /// Ratio of the threshold form, if that is how endowments are defined.
    pub fn alpha(&self) -> Option<&Rational> {
        match &self.endowments {
            SpEndowments::Proportional { alpha, .. } => Some(alpha),
            SpEndowments::Table(_) => None,
        }
    }

    pub fn theta(&self) -> Option<usize> {
        match &self.endowments {
            SpEndowments::Proportional { theta, .. } => Some(*theta),
            SpEndowments::Table(_) => None,
        }
    }

    /// Smallest coalition size that can carry a positive endowment under
    /// the threshold form. Deviations below this size are not available
    /// moves; explicit tables leave every coalition available.
    pub fn viability_threshold(&self) -> usize {
        match &self.endowments {
            SpEndowments::Proportional { theta, .. } => *theta,
            SpEndowments::Table(_) => 1,
        }
    }

    fn check_membership(&self, coalition: Coalition) -> Result<()> {
        if coalition.is_empty() {
            return Err(Error::InvalidProblem(
                "the empty coalition has no allocation".into(),
            ));
        }
        if let Some(stray) = coalition.difference(self.everyone()).min_member() {
            return Err(Error::NotAMember {
                agent: stray,
                context: format!("problem over agents 1..={}", self.agent_count()),
            });
        }
        Ok(())
    }

    /// Sum of member ideal points.
    pub fn coalition_peak(&self, coalition: Coalition) -> Result<Rational> {
        self.check_membership(coalition)?;
        Ok(coalition
            .members()
            .fold(Rational::zero(), |acc, i| acc + self.peak(i)))
    }

    /// What `coalition` has to divide under this problem's schedule.
    pub fn coalitional_endowment(&self, coalition: Coalition) -> Result<Rational> {
        self.check_membership(coalition)?;
        match &self.endowments {
            SpEndowments::Table(table) => Ok(table[&coalition].clone()),
            SpEndowments::Proportional { alpha, theta } => {
                if coalition.size() < *theta {
                    Ok(Rational::zero())
                } else {
                    Ok(alpha * self.coalition_peak(coalition)?)
                }
            }
        }
    }
}

/// How an agent ranks two payoffs.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpComparison {
    /// Symmetric single-peaked: closer to the ideal point is better.
    Distance,
    /// More is better (the claims reading of the same data).
    Monotonic,
}

impl fmt::Display for SpComparison {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpComparison::Distance => write!(f, "distance"),
            SpComparison::Monotonic => write!(f, "monotonic"),
        }
    }
}

impl FromStr for SpComparison {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "distance" => Ok(SpComparison::Distance),
            "monotonic" => Ok(SpComparison::Monotonic),
            other => Err(Error::InvalidProblem(format!(
                "unknown comparison {other:?} (expected \"distance\" or \"monotonic\")"
            ))),
        }
    }
}

/// Coalition evaluator over a single-peaked problem: payoffs via
/// [`mixed_rule_payoff`], utilities via the chosen comparison. Distance
/// utilities are negated distances, so bigger stays better.
pub struct SpEvaluator<'a> {
    problem: &'a SinglePeakedProblem,
    variant: SpVariant,
    comparison: SpComparison,
    cache: Mutex<HashMap<u64, Arc<Vec<Rational>>>>,
}

impl<'a> SpEvaluator<'a> {
    pub fn new(
        problem: &'a SinglePeakedProblem,
        variant: SpVariant,
        comparison: SpComparison,
    ) -> Self {
        SpEvaluator {
            problem,
            variant,
            comparison,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn problem(&self) -> &SinglePeakedProblem {
        self.problem
    }

    pub fn variant(&self) -> SpVariant {
        self.variant
    }

    pub fn comparison(&self) -> SpComparison {
        self.comparison
    }

    /// Member payoffs of `coalition`, in ascending agent order. Memoized.
    pub fn allocation(&self, coalition: Coalition) -> Result<Arc<Vec<Rational>>> {
        if let Some(hit) = self.cache.lock().unwrap().get(&coalition.mask()) {
            return Ok(Arc::clone(hit));
        }
        let endowment = self.problem.coalitional_endowment(coalition)?;
        let peaks: Vec<Rational> = coalition
            .members()
            .map(|i| self.problem.peak(i).clone())
            .collect();
        let payoffs = Arc::new(mixed_rule_payoff(self.variant, &peaks, &endowment)?);
        self.cache
            .lock()
            .unwrap()
            .insert(coalition.mask(), Arc::clone(&payoffs));
        Ok(payoffs)
    }
}

impl CoalitionEvaluator for SpEvaluator<'_> {
    fn agent_count(&self) -> usize {
        self.problem.agent_count()
    }

    fn payoff(&self, agent: AgentId, coalition: Coalition) -> Result<Rational> {
        let position = coalition
            .members()
            .position(|i| i == agent)
            .ok_or_else(|| Error::NotAMember {
                agent,
                context: format!("coalition {coalition}"),
            })?;
        Ok(self.allocation(coalition)?[position].clone())
    }

    fn utility(&self, agent: AgentId, coalition: Coalition) -> Result<Rational> {
        let x = self.payoff(agent, coalition)?;
        match self.comparison {
            SpComparison::Monotonic => Ok(x),
            SpComparison::Distance => Ok(-(x - self.problem.peak(agent)).abs()),
        }
    }
}

/// First available blocking coalition in ascending mask order, or `None`.
/// Candidates below the problem's viability threshold are skipped: they
/// cannot be formed as deviations, even though an undersized remainder
/// block inside `partition` still counts at face value.
pub fn sp_find_blocking(
    evaluator: &SpEvaluator<'_>,
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
    let min_size = evaluator.problem().viability_threshold();

    let mut current = Vec::with_capacity(n);
    for agent in 1..=n {
        let home = partition.block_of(agent).expect("partition covers agents");
        current.push(evaluator.utility(agent, home)?);
    }

    'next: for candidate in Coalition::all_nonempty(n) {
        if candidate.size() < min_size {
            continue;
        }
        for agent in candidate.members() {
            if evaluator.utility(agent, candidate)? <= current[agent - 1] {
                continue 'next;
            }
        }
        return Ok(Some(candidate));
    }
    Ok(None)
}

pub fn sp_is_stable(
    evaluator: &SpEvaluator<'_>,
    partition: &Partition,
    limits: &SearchLimits,
) -> Result<bool> {
    Ok(sp_find_blocking(evaluator, partition, limits)?.is_none())
}

/// Every stable partition by exhaustive search, grand coalition first.
pub fn sp_stability_scan(
    problem: &SinglePeakedProblem,
    variant: SpVariant,
    comparison: SpComparison,
    limits: &SearchLimits,
) -> Result<Vec<Partition>> {
    let n = problem.agent_count();
    limits.check("stability scan", n, limits.scan)?;
    // The scan guard is the binding one; widen the inner bounds to match.
    let inner = SearchLimits {
        partitions: limits.partitions.max(n),
        blocking: limits.blocking.max(n),
        ..*limits
    };
    let evaluator = SpEvaluator::new(problem, variant, comparison);
    let mut stable = Vec::new();
    for partition in all_partitions(n, &inner)? {
        if sp_find_blocking(&evaluator, &partition, &inner)?.is_none() {
            stable.push(partition);
        }
    }
    Ok(stable)
}

/// Agents ranked by (ideal point, id) ascending, plus the minimal size,
/// for a threshold-form problem in excess supply.
fn supply_order(problem: &SinglePeakedProblem) -> Result<(Vec<AgentId>, usize)> {
    let SpEndowments::Proportional { alpha, theta } = &problem.endowments else {
        return Err(Error::Precondition(
            "the block schedule needs the threshold form with proportional endowments".into(),
        ));
    };
    if *alpha <= Rational::one() {
        let label = if alpha.is_one() {
            "balanced"
        } else {
            "excess demand"
        };
        return Err(Error::RegimeMismatch(format!(
            "the block schedule needs excess supply (ratio above 1); \
             ratio {} means {label}, which the claims-side pairing algorithms handle",
            format_rational(alpha)
        )));
    }
    let mut order: Vec<AgentId> = (1..=problem.agent_count()).collect();
    order.sort_by(|&a, &b| problem.peak(a).cmp(problem.peak(b)).then(a.cmp(&b)));
    Ok((order, *theta))
}

fn consume_blocks(name: &str, order: &[AgentId], theta: usize, n: usize) -> Result<AlgorithmRun> {
    let mut steps = Vec::new();
    let mut blocks = Vec::new();
    let mut rest = order.to_vec();
    while rest.len() > theta {
        let working = Coalition::from_ids(&rest)?;
        let formed = Coalition::from_ids(&rest[..theta])?;
        steps.push(TraceStep {
            index: steps.len() + 1,
            working_set: working,
            case: None,
            comparison: None,
            formed,
            completes_block: true,
        });
        blocks.push(formed);
        rest.drain(..theta);
    }
    let remainder = Coalition::from_ids(&rest)?;
    steps.push(TraceStep {
        index: steps.len() + 1,
        working_set: remainder,
        case: None,
        comparison: None,
        formed: remainder,
        completes_block: true,
    });
    blocks.push(remainder);
    Ok(AlgorithmRun {
        partition: Partition::new(blocks, n)?,
        trace: AlgorithmTrace {
            algorithm: name.to_string(),
            steps,
        },
    })
}

/// Carves blocks of the `theta` lowest ideal points, leaving the highest
/// ones as the remainder. Needs the threshold form in excess supply. The
/// output is stable under uniform division with the distance comparison:
/// every viable alternative has a higher per-member endowment, pushing its
/// lowest member further past her ideal.
pub fn uniform_algorithm(problem: &SinglePeakedProblem) -> Result<AlgorithmRun> {
    let (order, theta) = supply_order(problem)?;
    consume_blocks("uniform", &order, theta, problem.agent_count())
}

/// Same schedule as [`uniform_algorithm`]; only the payoffs it is verified
/// against differ (equal surplus instead of uniform division).
pub fn equal_surplus_algorithm(problem: &SinglePeakedProblem) -> Result<AlgorithmRun> {
    let (order, theta) = supply_order(problem)?;
    consume_blocks("equal-surplus", &order, theta, problem.agent_count())
}

/// Supply-side schedule when more is simply better: blocks of the `theta`
/// highest claims form first and the lowest claims are left over.
pub fn monotonic_supply_algorithm(problem: &SinglePeakedProblem) -> Result<AlgorithmRun> {
    let (mut order, theta) = supply_order(problem)?;
    order.reverse();
    consume_blocks("monotonic-supply", &order, theta, problem.agent_count())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::preference_order;
    use crate::rational::rat;
    use crate::stability::find_cycle;

    fn ints(values: &[i64]) -> Vec<Rational> {
        values.iter().map(|&v| int(v)).collect()
    }

    fn coa(ids: &[AgentId]) -> Coalition {
        Coalition::from_ids(ids).unwrap()
    }

    fn table(entries: &[(&[AgentId], i64)]) -> Vec<(Coalition, Rational)> {
        entries
            .iter()
            .map(|&(ids, value)| (coa(ids), int(value)))
            .collect()
    }

    /// Three agents who overshoot each other in pairs; no partition survives.
    fn overshoot_uniform_fixture() -> SinglePeakedProblem {
        SinglePeakedProblem::with_table(
            ints(&[2, 4, 5]),
            table(&[
                (&[1], 0),
                (&[2], 0),
                (&[3], 0),
                (&[1, 2], 7),
                (&[1, 3], 6),
                (&[2, 3], 11),
                (&[1, 2, 3], 21),
            ]),
        )
        .unwrap()
    }

    /// Companion fixture for the loss/surplus variant.
    fn overshoot_surplus_fixture() -> SinglePeakedProblem {
        SinglePeakedProblem::with_table(
            ints(&[2, 7, 18]),
            table(&[
                (&[1], 7),
                (&[2], 0),
                (&[3], 0),
                (&[1, 2], 15),
                (&[1, 3], 10),
                (&[2, 3], 13),
                (&[1, 2, 3], 54),
            ]),
        )
        .unwrap()
    }

    #[test]
    fn uniform_rule_caps_under_demand_and_floors_under_supply() {
        assert_eq!(uniform_rule(&ints(&[2, 4]), &int(7)).unwrap(), ints(&[3, 4]));
        assert_eq!(
            uniform_rule(&ints(&[4, 5]), &int(11)).unwrap(),
            vec![rat(11, 2), rat(11, 2)]
        );
        assert_eq!(
            uniform_rule(&ints(&[2, 4, 5]), &int(21)).unwrap(),
            ints(&[7, 7, 7])
        );
        assert_eq!(uniform_rule(&ints(&[2, 5]), &int(6)).unwrap(), ints(&[2, 4]));
        // Knife edge and empty endowment.
        assert_eq!(
            uniform_rule(&ints(&[2, 4, 5]), &int(11)).unwrap(),
            ints(&[2, 4, 5])
        );
        assert_eq!(
            uniform_rule(&ints(&[2, 4, 5]), &int(0)).unwrap(),
            ints(&[0, 0, 0])
        );
    }

    #[test]
    fn equal_surplus_adds_the_same_slack_to_every_ideal() {
        assert_eq!(
            equal_surplus_rule(&ints(&[2, 7]), &int(15)).unwrap(),
            ints(&[5, 10])
        );
        assert_eq!(equal_surplus_rule(&ints(&[2]), &int(7)).unwrap(), ints(&[7]));
        assert_eq!(
            equal_surplus_rule(&ints(&[2, 7]), &int(9)).unwrap(),
            ints(&[2, 7])
        );
        assert!(matches!(
            equal_surplus_rule(&ints(&[2, 7]), &int(8)),
            Err(Error::RegimeMismatch(_))
        ));
    }

    #[test]
    fn mixed_variant_routes_by_regime() {
        let celes = SpVariant::CelEqualSurplus;
        assert_eq!(
            mixed_rule_payoff(celes, &ints(&[7, 18]), &int(13)).unwrap(),
            ints(&[1, 12])
        );
        assert_eq!(
            mixed_rule_payoff(celes, &ints(&[2, 18]), &int(10)).unwrap(),
            ints(&[0, 10])
        );
        assert_eq!(
            mixed_rule_payoff(celes, &ints(&[2, 7]), &int(15)).unwrap(),
            ints(&[5, 10])
        );
        assert_eq!(
            mixed_rule_payoff(celes, &ints(&[2, 7]), &int(9)).unwrap(),
            ints(&[2, 7])
        );
        assert_eq!(
            mixed_rule_payoff(SpVariant::Uniform, &ints(&[2, 5]), &int(6)).unwrap(),
            ints(&[2, 4])
        );
    }

    #[test]
    fn variant_names_round_trip() {
        assert_eq!("uniform".parse::<SpVariant>().unwrap(), SpVariant::Uniform);
        assert_eq!(
            "cel-es".parse::<SpVariant>().unwrap(),
            SpVariant::CelEqualSurplus
        );
        assert_eq!(SpVariant::CelEqualSurplus.to_string(), "cel-es");
        assert!("equal".parse::<SpVariant>().is_err());
        assert_eq!(
            "monotonic".parse::<SpComparison>().unwrap(),
            SpComparison::Monotonic
        );
        assert!("closest".parse::<SpComparison>().is_err());
    }

    #[test]
    fn ideal_point_comparison_is_symmetric_distance() {
        assert_eq!(sp_prefers(&int(0), &int(5), &int(2)), Ordering::Greater);
        assert_eq!(sp_prefers(&int(4), &int(7), &int(4)), Ordering::Greater);
        assert_eq!(sp_prefers(&int(3), &int(5), &int(4)), Ordering::Equal);
        assert_eq!(sp_prefers(&int(5), &int(5), &int(1)), Ordering::Equal);
        assert_eq!(sp_prefers(&int(7), &int(4), &int(4)), Ordering::Less);
    }

    #[test]
    fn endowment_tables_must_price_every_coalition() {
        let peaks = ints(&[2, 4, 5]);
        let missing = SinglePeakedProblem::with_table(
            peaks.clone(),
            table(&[
                (&[1], 0),
                (&[2], 0),
                (&[3], 0),
                (&[1, 2], 7),
                (&[1, 3], 6),
                (&[1, 2, 3], 21),
            ]),
        );
        match missing {
            Err(Error::InvalidProblem(msg)) => assert!(msg.contains("{2,3}"), "{msg}"),
            other => panic!("expected incomplete-table error, got {other:?}"),
        }

        let duplicated = SinglePeakedProblem::with_table(
            peaks.clone(),
            table(&[(&[1], 0), (&[1], 1)]),
        );
        assert!(matches!(duplicated, Err(Error::InvalidProblem(_))));

        let stranger =
            SinglePeakedProblem::with_table(peaks.clone(), table(&[(&[4], 0)]));
        assert!(matches!(
            stranger,
            Err(Error::NotAMember { agent: 4, .. })
        ));

        let negative = SinglePeakedProblem::with_table(
            peaks.clone(),
            vec![(coa(&[1]), int(-1))],
        );
        assert!(matches!(negative, Err(Error::InvalidProblem(_))));

        let oversized = SinglePeakedProblem::with_table(ints(&[1; 17]), Vec::new());
        assert!(matches!(
            oversized,
            Err(Error::TooLarge {
                what: "endowment-table agents",
                n: 17,
                max: MAX_TABLE_AGENTS,
            })
        ));
    }

    #[test]
    fn table_payoffs_match_uniform_division() {
        let problem = overshoot_uniform_fixture();
        let eval = SpEvaluator::new(&problem, SpVariant::Uniform, SpComparison::Distance);
        assert_eq!(*eval.allocation(coa(&[1, 2])).unwrap(), ints(&[3, 4]));
        assert_eq!(*eval.allocation(coa(&[1, 3])).unwrap(), ints(&[2, 4]));
        assert_eq!(
            *eval.allocation(coa(&[2, 3])).unwrap(),
            vec![rat(11, 2), rat(11, 2)]
        );
        assert_eq!(*eval.allocation(coa(&[1, 2, 3])).unwrap(), ints(&[7, 7, 7]));
        assert_eq!(*eval.allocation(coa(&[1])).unwrap(), ints(&[0]));

        let limits = SearchLimits::new();
        let classes = preference_order(&eval, 1, &limits).unwrap();
        assert_eq!(
            classes,
            vec![
                vec![coa(&[1, 3])],
                vec![coa(&[1, 2])],
                vec![coa(&[1])],
                vec![coa(&[1, 2, 3])],
            ]
        );
        let classes = preference_order(&eval, 2, &limits).unwrap();
        assert_eq!(
            classes,
            vec![
                vec![coa(&[1, 2])],
                vec![coa(&[2, 3])],
                vec![coa(&[1, 2, 3])],
                vec![coa(&[2])],
            ]
        );
        let classes = preference_order(&eval, 3, &limits).unwrap();
        assert_eq!(
            classes,
            vec![
                vec![coa(&[2, 3])],
                vec![coa(&[1, 3])],
                vec![coa(&[1, 2, 3])],
                vec![coa(&[3])],
            ]
        );
    }

    #[test]
    fn surplus_table_payoffs_route_between_losses_and_surplus() {
        let problem = overshoot_surplus_fixture();
        let eval = SpEvaluator::new(
            &problem,
            SpVariant::CelEqualSurplus,
            SpComparison::Distance,
        );
        assert_eq!(*eval.allocation(coa(&[1])).unwrap(), ints(&[7]));
        assert_eq!(*eval.allocation(coa(&[1, 2])).unwrap(), ints(&[5, 10]));
        assert_eq!(*eval.allocation(coa(&[1, 3])).unwrap(), ints(&[0, 10]));
        assert_eq!(*eval.allocation(coa(&[2, 3])).unwrap(), ints(&[1, 12]));
        assert_eq!(
            *eval.allocation(coa(&[1, 2, 3])).unwrap(),
            ints(&[11, 16, 27])
        );
    }

    #[test]
    fn neither_overshoot_fixture_admits_a_stable_partition() {
        let limits = SearchLimits::new();
        let scan = sp_stability_scan(
            &overshoot_uniform_fixture(),
            SpVariant::Uniform,
            SpComparison::Distance,
            &limits,
        )
        .unwrap();
        assert!(scan.is_empty());

        let scan = sp_stability_scan(
            &overshoot_surplus_fixture(),
            SpVariant::CelEqualSurplus,
            SpComparison::Distance,
            &limits,
        )
        .unwrap();
        assert!(scan.is_empty());
    }

    #[test]
    fn overshooting_pairs_cycle_under_distance_preferences() {
        let problem = overshoot_uniform_fixture();
        let eval = SpEvaluator::new(&problem, SpVariant::Uniform, SpComparison::Distance);
        let cycle = find_cycle(&eval, 7, &SearchLimits::new()).unwrap();
        assert_eq!(
            cycle,
            Some(vec![coa(&[1, 2]), coa(&[1, 3]), coa(&[2, 3])])
        );
    }

    #[test]
    fn threshold_form_derives_endowments_from_the_ratio() {
        let problem =
            SinglePeakedProblem::proportional(ints(&[1, 2, 3, 4, 5]), int(2), 2).unwrap();
        assert_eq!(problem.coalitional_endowment(coa(&[1, 2])).unwrap(), int(6));
        assert_eq!(problem.coalitional_endowment(coa(&[4, 5])).unwrap(), int(18));
        assert_eq!(problem.coalitional_endowment(coa(&[5])).unwrap(), int(0));
        assert_eq!(problem.alpha(), Some(&int(2)));
        assert_eq!(problem.theta(), Some(2));
        assert_eq!(problem.viability_threshold(), 2);

        let derived = SinglePeakedProblem::proportional_from_endowment(
            ints(&[1, 2, 3, 4, 5]),
            &int(30),
            2,
        )
        .unwrap();
        assert_eq!(derived.alpha(), Some(&int(2)));

        assert!(SinglePeakedProblem::proportional_from_endowment(
            ints(&[0, 0]),
            &int(5),
            1
        )
        .is_err());
        assert!(SinglePeakedProblem::proportional(ints(&[1]), int(0), 1).is_err());
        assert!(SinglePeakedProblem::proportional(ints(&[1, 2]), int(2), 3).is_err());
        assert!(SinglePeakedProblem::proportional(ints(&[1, 2]), int(2), 0).is_err());

        let tabled = overshoot_uniform_fixture();
        assert_eq!(tabled.alpha(), None);
        assert_eq!(tabled.theta(), None);
        assert_eq!(tabled.viability_threshold(), 1);
    }

    #[test]
    fn sub_viability_deviations_are_not_available_moves() {
        // Overshooting alone would beat the pair, but the pair is the
        // smallest viable coalition.
        let problem =
            SinglePeakedProblem::proportional(ints(&[1, 100]), rat(101, 100), 2).unwrap();
        let eval = SpEvaluator::new(&problem, SpVariant::Uniform, SpComparison::Distance);
        let grand = Partition::grand(2);

        let alone = eval.utility(1, coa(&[1])).unwrap();
        let paired = eval.utility(1, coa(&[1, 2])).unwrap();
        assert_eq!(alone, int(-1));
        assert_eq!(paired, rat(-101, 100));
        assert!(alone > paired);

        let limits = SearchLimits::new();
        assert_eq!(sp_find_blocking(&eval, &grand, &limits).unwrap(), None);
        let scan = sp_stability_scan(
            &problem,
            SpVariant::Uniform,
            SpComparison::Distance,
            &limits,
        )
        .unwrap();
        assert!(scan.contains(&grand));
    }

    #[test]
    fn lowest_ideals_pair_first_in_supply() {
        let problem =
            SinglePeakedProblem::proportional(ints(&[1, 2, 3, 4, 5]), int(2), 2).unwrap();
        let run = uniform_algorithm(&problem).unwrap();
        assert_eq!(
            run.partition,
            Partition::from_blocks_of_ids(&[vec![1, 2], vec![3, 4], vec![5]], 5).unwrap()
        );
        assert_eq!(run.trace.algorithm, "uniform");
        let working: Vec<Coalition> = run.trace.steps.iter().map(|s| s.working_set).collect();
        assert_eq!(
            working,
            vec![coa(&[1, 2, 3, 4, 5]), coa(&[3, 4, 5]), coa(&[5])]
        );
        assert_eq!(
            run.trace.completed_blocks(),
            vec![coa(&[1, 2]), coa(&[3, 4]), coa(&[5])]
        );
        assert!(run.trace.steps.iter().all(|s| s.case.is_none()));

        let eval = SpEvaluator::new(&problem, SpVariant::Uniform, SpComparison::Distance);
        assert!(sp_is_stable(&eval, &run.partition, &SearchLimits::new()).unwrap());

        // Ties on the ideal point break by id.
        let tied = SinglePeakedProblem::proportional(ints(&[3, 3, 3]), int(2), 2).unwrap();
        let run = uniform_algorithm(&tied).unwrap();
        assert_eq!(
            run.partition,
            Partition::from_blocks_of_ids(&[vec![1, 2], vec![3]], 3).unwrap()
        );

        // Whole group at the minimal size forms the grand coalition.
        let grand = SinglePeakedProblem::proportional(ints(&[3, 7]), rat(3, 2), 2).unwrap();
        let run = uniform_algorithm(&grand).unwrap();
        assert_eq!(run.partition, Partition::grand(2));
        assert_eq!(run.trace.steps.len(), 1);

        let demand =
            SinglePeakedProblem::proportional(ints(&[1, 2, 3]), rat(1, 2), 2).unwrap();
        assert!(matches!(
            uniform_algorithm(&demand),
            Err(Error::RegimeMismatch(_))
        ));
        let balanced = SinglePeakedProblem::proportional(ints(&[1, 2, 3]), int(1), 2).unwrap();
        assert!(matches!(
            uniform_algorithm(&balanced),
            Err(Error::RegimeMismatch(_))
        ));
        assert!(matches!(
            uniform_algorithm(&overshoot_uniform_fixture()),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn equal_surplus_schedule_matches_and_verifies() {
        let problem =
            SinglePeakedProblem::proportional(ints(&[1, 2, 3, 4, 5]), int(2), 3).unwrap();
        let run = equal_surplus_algorithm(&problem).unwrap();
        assert_eq!(
            run.partition,
            Partition::from_blocks_of_ids(&[vec![1, 2, 3], vec![4, 5]], 5).unwrap()
        );
        assert_eq!(run.trace.algorithm, "equal-surplus");

        let eval = SpEvaluator::new(
            &problem,
            SpVariant::CelEqualSurplus,
            SpComparison::Distance,
        );
        assert!(sp_is_stable(&eval, &run.partition, &SearchLimits::new()).unwrap());

        // Pairing with a minimal size of two matches the uniform schedule.
        let pairs =
            SinglePeakedProblem::proportional(ints(&[1, 2, 3, 4, 5]), int(2), 2).unwrap();
        let run = equal_surplus_algorithm(&pairs).unwrap();
        assert_eq!(
            run.partition,
            Partition::from_blocks_of_ids(&[vec![1, 2], vec![3, 4], vec![5]], 5).unwrap()
        );
    }

    #[test]
    fn highest_claims_pair_first_when_more_is_better() {
        let problem =
            SinglePeakedProblem::proportional(ints(&[1, 2, 3, 4, 5]), int(2), 2).unwrap();
        let run = monotonic_supply_algorithm(&problem).unwrap();
        assert_eq!(
            run.partition,
            Partition::from_blocks_of_ids(&[vec![4, 5], vec![2, 3], vec![1]], 5).unwrap()
        );
        assert_eq!(run.trace.algorithm, "monotonic-supply");
        assert_eq!(
            run.trace.completed_blocks(),
            vec![coa(&[4, 5]), coa(&[2, 3]), coa(&[1])]
        );

        let eval = SpEvaluator::new(&problem, SpVariant::Uniform, SpComparison::Monotonic);
        assert!(sp_is_stable(&eval, &run.partition, &SearchLimits::new()).unwrap());

        // Equal claims: blocks fall out of the id order alone.
        let tied = SinglePeakedProblem::proportional(ints(&[5, 5, 5, 5]), int(2), 2).unwrap();
        let run = monotonic_supply_algorithm(&tied).unwrap();
        assert_eq!(
            run.trace.completed_blocks(),
            vec![coa(&[3, 4]), coa(&[1, 2])]
        );

        let solo = SinglePeakedProblem::proportional(ints(&[2, 9]), int(3), 2).unwrap();
        assert_eq!(
            monotonic_supply_algorithm(&solo).unwrap().partition,
            Partition::grand(2)
        );
    }

    #[test]
    fn demand_side_uniform_division_equals_the_claims_waterline() {
        // With the ratio below one, ideal points behave exactly like claims.
        let problem =
            SinglePeakedProblem::proportional(ints(&[2, 6, 22]), rat(1, 2), 2).unwrap();
        let eval = SpEvaluator::new(&problem, SpVariant::Uniform, SpComparison::Distance);
        assert_eq!(*eval.allocation(coa(&[1, 3])).unwrap(), ints(&[2, 10]));
        assert_eq!(
            *eval.allocation(coa(&[2, 3])).unwrap(),
            ints(&[6, 8])
        );
        // Below their ideals, closer and larger agree.
        assert_eq!(
            eval.utility(3, coa(&[1, 3])).unwrap() > eval.utility(3, coa(&[2, 3])).unwrap(),
            eval.payoff(3, coa(&[1, 3])).unwrap() > eval.payoff(3, coa(&[2, 3])).unwrap()
        );
    }

    #[test]
    fn scan_respects_the_size_guard() {
        let problem =
            SinglePeakedProblem::proportional(ints(&[1; 11]), int(2), 2).unwrap();
        let result = sp_stability_scan(
            &problem,
            SpVariant::Uniform,
            SpComparison::Distance,
            &SearchLimits::new(),
        );
        assert!(matches!(
            result,
            Err(Error::TooLarge {
                what: "stability scan",
                n: 11,
                max: 10,
            })
        ));
    }
}
