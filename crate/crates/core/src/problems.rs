//! Coalitions, minimal-size claims problems, and induced preferences.
//!
//! Starting from a base claims problem, each coalition is endowed with the
//! proportional share of what its members claim, but only when the
//! coalition clears a minimal size; smaller groups receive nothing. A
//! division rule then splits each coalition's endowment among its members,
//! which induces every agent's preference over the coalitions containing
//! them. These preferences are the input to everything in
//! [`stability`](crate::stability) and [`algorithms`](crate::algorithms).

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use num::{One, Signed, Zero};

use crate::rational::{format_rational, total, Rational};
use crate::rules::{Allocation, ClaimsProblem, DivisionRule};
use crate::{AgentId, Error, Result, SearchLimits};

/// A set of agents encoded as a bitmask. Bit `i - 1` stands for agent `i`,
/// so at most 64 agents are supported and the derived `Ord` is exactly the
/// ascending-bitmask order used by every deterministic scan in this crate.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Coalition(u64);

impl Coalition {
    pub const MAX_AGENTS: usize = 64;

    pub const EMPTY: Coalition = Coalition(0);

    pub fn from_mask(mask: u64) -> Self {
        Coalition(mask)
    }

    pub fn from_ids(ids: &[AgentId]) -> Result<Self> {
        let mut mask = 0u64;
        for &id in ids {
            if id == 0 || id > Self::MAX_AGENTS {
                return Err(Error::InvalidProblem(format!(
                    "agent id {id} outside 1..={}",
                    Self::MAX_AGENTS
                )));
            }
            let bit = 1u64 << (id - 1);
            if mask & bit != 0 {
                return Err(Error::InvalidProblem(format!("duplicate agent id {id}")));
            }
            mask |= bit;
        }
        Ok(Coalition(mask))
    }

    pub fn singleton(agent: AgentId) -> Self {
        debug_assert!(agent >= 1 && agent <= Self::MAX_AGENTS);
        Coalition(1u64 << (agent - 1))
    }

    /// All agents `1..=n`.
    pub fn everyone(n: usize) -> Self {
        debug_assert!(n <= Self::MAX_AGENTS);
        if n == 64 {
            Coalition(u64::MAX)
        } else {
            Coalition((1u64 << n) - 1)
        }
    }

    pub fn mask(self) -> u64 {
        self.0
    }

    pub fn size(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn contains(self, agent: AgentId) -> bool {
        agent >= 1 && agent <= Self::MAX_AGENTS && self.0 & (1u64 << (agent - 1)) != 0
    }

    pub fn insert(self, agent: AgentId) -> Self {
        debug_assert!(agent >= 1 && agent <= Self::MAX_AGENTS);
        Coalition(self.0 | (1u64 << (agent - 1)))
    }

    pub fn remove(self, agent: AgentId) -> Self {
        debug_assert!(agent >= 1 && agent <= Self::MAX_AGENTS);
        Coalition(self.0 & !(1u64 << (agent - 1)))
    }

    pub fn union(self, other: Self) -> Self {
        Coalition(self.0 | other.0)
    }

    pub fn intersection(self, other: Self) -> Self {
        Coalition(self.0 & other.0)
    }

    pub fn difference(self, other: Self) -> Self {
        Coalition(self.0 & !other.0)
    }

    pub fn is_subset_of(self, other: Self) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn min_member(self) -> Option<AgentId> {
        if self.0 == 0 {
            None
        } else {
            Some(self.0.trailing_zeros() as usize + 1)
        }
    }

    pub fn max_member(self) -> Option<AgentId> {
        if self.0 == 0 {
            None
        } else {
            Some(64 - self.0.leading_zeros() as usize)
        }
    }

    /// Members in ascending id order.
    pub fn members(self) -> impl Iterator<Item = AgentId> {
        let mut mask = self.0;
        std::iter::from_fn(move || {
            if mask == 0 {
                None
            } else {
                let id = mask.trailing_zeros() as usize + 1;
                mask &= mask - 1;
                Some(id)
            }
        })
    }

    pub fn ids(self) -> Vec<AgentId> {
        self.members().collect()
    }

    /// All nonempty coalitions within `1..=n` in ascending mask order.
    pub fn all_nonempty(n: usize) -> impl Iterator<Item = Coalition> {
        debug_assert!(n < 64, "iteration over 2^64 masks is not supported");
        (1..(1u64 << n)).map(Coalition)
    }

    /// Nonempty subsets of this coalition in ascending mask order.
    pub fn nonempty_subsets(self) -> impl Iterator<Item = Coalition> {
        let full = self.0;
        let mut sub = 0u64;
        let mut done = full == 0;
        std::iter::from_fn(move || {
            if done {
                return None;
            }
            // Enumerating submasks via (sub - full) & full walks them in
            // ascending numeric order.
            sub = sub.wrapping_sub(full) & full;
            if sub == full {
                done = true;
            }
            if sub == 0 {
                None
            } else {
                Some(Coalition(sub))
            }
        })
    }
}

impl fmt::Display for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (k, id) in self.members().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{id}")?;
        }
        write!(f, "}}")
    }
}

impl fmt::Debug for Coalition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

/// A claims problem extended with a minimal coalition size.
///
/// The grand coalition's endowment covers the fraction `alpha` of every
/// claim; a coalition of size at least `theta` is endowed with the same
/// fraction of its own total claim, smaller coalitions with nothing.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThetaProblem {
    claims: Vec<Rational>,
    endowment: Rational,
    theta: usize,
    alpha: Rational,
}

impl ThetaProblem {
    pub fn new(claims: Vec<Rational>, endowment: Rational, theta: usize) -> Result<Self> {
        let n = claims.len();
        if n == 0 {
            return Err(Error::InvalidProblem("no agents".into()));
        }
        if n > Coalition::MAX_AGENTS {
            return Err(Error::InvalidProblem(format!(
                "at most {} agents supported, got {n}",
                Coalition::MAX_AGENTS
            )));
        }
        if let Some(pos) = claims.iter().position(|c| !c.is_positive()) {
            return Err(Error::InvalidProblem(format!(
                "claim of agent {} must be positive, got {}",
                pos + 1,
                format_rational(&claims[pos])
            )));
        }
        if !endowment.is_positive() {
            return Err(Error::InvalidProblem("endowment must be positive".into()));
        }
        let grand = total(&claims);
        if endowment > grand {
            return Err(Error::InvalidProblem(format!(
                "endowment {} exceeds the total claim {}",
                format_rational(&endowment),
                format_rational(&grand)
            )));
        }
        if theta == 0 || theta > n {
            return Err(Error::InvalidProblem(format!(
                "minimal size {theta} outside 1..={n}"
            )));
        }
        let alpha = &endowment / &grand;
        Ok(ThetaProblem {
            claims,
            endowment,
            theta,
            alpha,
        })
    }

    /// Construct from the covered fraction instead of the endowment.
    pub fn from_alpha(claims: Vec<Rational>, alpha: Rational, theta: usize) -> Result<Self> {
        if !alpha.is_positive() || alpha > Rational::one() {
            return Err(Error::InvalidProblem(format!(
                "alpha must lie in (0, 1], got {}",
                format_rational(&alpha)
            )));
        }
        let endowment = total(&claims) * &alpha;
        Self::new(claims, endowment, theta)
    }

    pub fn agent_count(&self) -> usize {
        self.claims.len()
    }

    pub fn claims(&self) -> &[Rational] {
        &self.claims
    }

    pub fn claim(&self, agent: AgentId) -> &Rational {
        &self.claims[agent - 1]
    }

    pub fn endowment(&self) -> &Rational {
        &self.endowment
    }

    pub fn theta(&self) -> usize {
        self.theta
    }

    /// Fraction of every claim the endowment covers.
    pub fn alpha(&self) -> &Rational {
        &self.alpha
    }

    /// Endowment equals the total claim, so every feasible division is
    /// trivial.
    pub fn is_degenerate(&self) -> bool {
        self.alpha.is_one()
    }

    pub fn everyone(&self) -> Coalition {
        Coalition::everyone(self.agent_count())
    }

    fn check_membership(&self, coalition: Coalition) -> Result<()> {
        if coalition.is_empty() {
            return Err(Error::InvalidProblem("empty coalition".into()));
        }
        if !coalition.is_subset_of(self.everyone()) {
            return Err(Error::NotAMember {
                agent: coalition.difference(self.everyone()).min_member().unwrap(),
                context: "the problem".into(),
            });
        }
        Ok(())
    }

    /// Total claim held by the members of `coalition`.
    pub fn coalition_claim(&self, coalition: Coalition) -> Result<Rational> {
        self.check_membership(coalition)?;
        Ok(coalition
            .members()
            .fold(Rational::zero(), |acc, i| acc + self.claim(i)))
    }

    /// The claims problem a coalition divides internally: its members'
    /// claims against its own endowment.
    pub fn subproblem(&self, coalition: Coalition) -> Result<ClaimsProblem> {
        let endowment = coalitional_endowment(self, coalition)?;
        let ids = coalition.ids();
        let claims = ids.iter().map(|&i| self.claim(i).clone()).collect();
        ClaimsProblem::new(ids, claims, endowment)
    }
}

/// What a coalition has to divide: the proportional share of its total
/// claim if it clears the minimal size, nothing otherwise.
pub fn coalitional_endowment(problem: &ThetaProblem, coalition: Coalition) -> Result<Rational> {
    if coalition.size() < problem.theta() {
        problem.check_membership(coalition)?;
        return Ok(Rational::zero());
    }
    Ok(problem.coalition_claim(coalition)? * problem.alpha())
}

/// Anything that assigns each agent a payoff in each coalition and an
/// exactly comparable utility, higher is better. Implementations are
/// expected to be deterministic; scans rely on it.
pub trait CoalitionEvaluator: Sync {
    fn agent_count(&self) -> usize;

    /// Material payoff of `agent` inside `coalition` (must contain it).
    fn payoff(&self, agent: AgentId, coalition: Coalition) -> Result<Rational>;

    /// Comparison key; defaults to the payoff itself, which is the right
    /// reading whenever more is better.
    fn utility(&self, agent: AgentId, coalition: Coalition) -> Result<Rational> {
        self.payoff(agent, coalition)
    }
}

/// The preferences a division rule induces on a minimal-size problem.
///
/// Coalition allocations are memoized per coalition; one value of this type
/// pins one (problem, rule) pair, so the cache can never mix rules.
pub struct InducedPreferences<'a> {
    problem: &'a ThetaProblem,
    rule: &'a dyn DivisionRule,
    cache: Mutex<HashMap<u64, Arc<Allocation>>>,
}

impl<'a> InducedPreferences<'a> {
    pub fn new(problem: &'a ThetaProblem, rule: &'a dyn DivisionRule) -> Self {
        InducedPreferences {
            problem,
            rule,
            cache: Mutex::new(HashMap::new()),
        }
    }

    pub fn problem(&self) -> &ThetaProblem {
        self.problem
    }

    pub fn rule(&self) -> &dyn DivisionRule {
        self.rule
    }

    /// How `coalition` divides its endowment under the rule, memoized.
    pub fn allocation(&self, coalition: Coalition) -> Result<Arc<Allocation>> {
        if let Some(hit) = self.cache.lock().unwrap().get(&coalition.mask()) {
            return Ok(Arc::clone(hit));
        }
        let sub = self.problem.subproblem(coalition)?;
        let solved = self.rule.apply(&sub)?;
        let alloc = Arc::new(solved.allocation);
        self.cache
            .lock()
            .unwrap()
            .insert(coalition.mask(), Arc::clone(&alloc));
        Ok(alloc)
    }
}

impl CoalitionEvaluator for InducedPreferences<'_> {
    fn agent_count(&self) -> usize {
        self.problem.agent_count()
    }

    fn payoff(&self, agent: AgentId, coalition: Coalition) -> Result<Rational> {
        let alloc = self.allocation(coalition)?;
        alloc.get(agent).cloned().ok_or(Error::NotAMember {
            agent,
            context: format!("coalition {coalition}"),
        })
    }
}

/// Payoff of every member of `coalition` under `rule`, uncached. For
/// repeated queries build an [`InducedPreferences`] instead.
pub fn coalition_payoff(
    problem: &ThetaProblem,
    rule: &dyn DivisionRule,
    coalition: Coalition,
) -> Result<Allocation> {
    Ok(rule.apply(&problem.subproblem(coalition)?)?.allocation)
}

/// Does agent `i` weakly prefer `s` to `t`? `Greater` means strictly
/// better, `Equal` indifferent. The agent must belong to both.
pub fn prefers(
    evaluator: &dyn CoalitionEvaluator,
    agent: AgentId,
    s: Coalition,
    t: Coalition,
) -> Result<std::cmp::Ordering> {
    if !s.contains(agent) {
        return Err(Error::NotAMember {
            agent,
            context: format!("coalition {s}"),
        });
    }
    if !t.contains(agent) {
        return Err(Error::NotAMember {
            agent,
            context: format!("coalition {t}"),
        });
    }
    Ok(evaluator.utility(agent, s)?.cmp(&evaluator.utility(agent, t)?))
}

/// Agent `i`'s complete weak order over the coalitions containing them:
/// indifference classes from best to worst, classes ordered internally by
/// ascending mask. Exponential; guarded by `limits.preferences`.
pub fn preference_order(
    evaluator: &dyn CoalitionEvaluator,
    agent: AgentId,
    limits: &SearchLimits,
) -> Result<Vec<Vec<Coalition>>> {
    let n = evaluator.agent_count();
    limits.check("preference order construction", n, limits.preferences)?;
    if agent == 0 || agent > n {
        return Err(Error::NotAMember {
            agent,
            context: "the problem".into(),
        });
    }

    let mut scored: Vec<(Rational, Coalition)> = Vec::new();
    for coalition in Coalition::all_nonempty(n) {
        if coalition.contains(agent) {
            scored.push((evaluator.utility(agent, coalition)?, coalition));
        }
    }
    scored.sort_by(|(ua, ca), (ub, cb)| ub.cmp(ua).then(ca.cmp(cb)));

    let mut classes: Vec<Vec<Coalition>> = Vec::new();
    let mut last: Option<Rational> = None;
    for (u, c) in scored {
        if last.as_ref() == Some(&u) {
            classes.last_mut().unwrap().push(c);
        } else {
            classes.push(vec![c]);
            last = Some(u);
        }
    }
    Ok(classes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, rat};
    use crate::rules::{ConstrainedEqualAwards, ConstrainedEqualLosses, Proportional};
    use std::cmp::Ordering;

    fn reference() -> ThetaProblem {
        ThetaProblem::new(vec![int(2), int(6), int(22)], int(15), 2).unwrap()
    }

    fn c(ids: &[AgentId]) -> Coalition {
        Coalition::from_ids(ids).unwrap()
    }

    #[test]
    fn coalition_basics() {
        let s = c(&[1, 3]);
        assert_eq!(s.mask(), 0b101);
        assert_eq!(s.size(), 2);
        assert!(s.contains(1) && !s.contains(2));
        assert_eq!(s.ids(), vec![1, 3]);
        assert_eq!(s.min_member(), Some(1));
        assert_eq!(s.max_member(), Some(3));
        assert_eq!(s.to_string(), "{1,3}");
        assert_eq!(Coalition::everyone(3).mask(), 0b111);
        assert_eq!(s.union(c(&[2])).mask(), 0b111);
        assert_eq!(Coalition::everyone(3).difference(s), c(&[2]));
        assert!(Coalition::from_ids(&[1, 1]).is_err());
        assert!(Coalition::from_ids(&[0]).is_err());
        assert!(Coalition::from_ids(&[65]).is_err());
    }

    #[test]
    fn subset_enumeration_is_ascending() {
        let subs: Vec<u64> = c(&[1, 3]).nonempty_subsets().map(|s| s.mask()).collect();
        assert_eq!(subs, vec![0b001, 0b100, 0b101]);
        let all: Vec<u64> = Coalition::all_nonempty(3).map(|s| s.mask()).collect();
        assert_eq!(all, (1..8).collect::<Vec<u64>>());
        assert_eq!(Coalition::EMPTY.nonempty_subsets().count(), 0);
    }

    #[test]
    fn endowments_require_the_minimal_size() {
        let p = reference();
        assert_eq!(p.alpha(), &rat(1, 2));
        assert_eq!(coalitional_endowment(&p, c(&[1, 3])).unwrap(), int(12));
        assert_eq!(coalitional_endowment(&p, c(&[2])).unwrap(), int(0));
        assert_eq!(
            coalitional_endowment(&p, p.everyone()).unwrap(),
            *p.endowment()
        );
        assert!(coalitional_endowment(&p, Coalition::EMPTY).is_err());
        assert!(coalitional_endowment(&p, c(&[1, 4])).is_err());
    }

    #[test]
    fn from_alpha_matches_endowment_form() {
        let p = ThetaProblem::from_alpha(vec![int(2), int(6), int(22)], rat(1, 2), 2).unwrap();
        assert_eq!(&p, &reference());
        assert!(ThetaProblem::from_alpha(vec![int(1)], rat(3, 2), 1).is_err());
        assert!(ThetaProblem::from_alpha(vec![int(1)], int(0), 1).is_err());
    }

    #[test]
    fn rejects_bad_minimal_sizes() {
        assert!(ThetaProblem::new(vec![int(1), int(1)], int(1), 0).is_err());
        assert!(ThetaProblem::new(vec![int(1), int(1)], int(1), 3).is_err());
    }

    #[test]
    fn proportional_rule_pays_alpha_share_everywhere() {
        let p = reference();
        let prefs = InducedPreferences::new(&p, &Proportional);
        for s in Coalition::all_nonempty(3) {
            if s.size() < 2 {
                continue;
            }
            for i in s.members() {
                assert_eq!(prefs.payoff(i, s).unwrap(), p.claim(i) * p.alpha());
            }
        }
    }

    #[test]
    fn small_coalitions_pay_nothing() {
        let p = reference();
        let prefs = InducedPreferences::new(&p, &ConstrainedEqualLosses);
        for i in 1..=3 {
            assert_eq!(prefs.payoff(i, Coalition::singleton(i)).unwrap(), int(0));
        }
    }

    #[test]
    fn memoization_is_transparent() {
        let p = reference();
        let prefs = InducedPreferences::new(&p, &ConstrainedEqualAwards);
        let direct = coalition_payoff(&p, &ConstrainedEqualAwards, c(&[1, 3])).unwrap();
        let cached = prefs.allocation(c(&[1, 3])).unwrap();
        let again = prefs.allocation(c(&[1, 3])).unwrap();
        assert_eq!(*cached, direct);
        assert_eq!(*again, direct);
        assert_eq!(direct.payoffs(), &[int(2), int(10)]);
    }

    #[test]
    fn prefers_compares_common_coalitions_only() {
        let p = reference();
        let prefs = InducedPreferences::new(&p, &ConstrainedEqualAwards);
        // Agent 1 gets its full claim in both pairs containing it.
        assert_eq!(
            prefers(&prefs, 1, c(&[1, 2]), c(&[1, 3])).unwrap(),
            Ordering::Equal
        );
        // Agent 3 prefers the pair with the small claimant.
        assert_eq!(
            prefers(&prefs, 3, c(&[1, 3]), c(&[2, 3])).unwrap(),
            Ordering::Greater
        );
        assert!(prefers(&prefs, 2, c(&[1, 3]), c(&[2, 3])).is_err());
    }

    #[test]
    fn preference_order_groups_ties_by_mask() {
        let p = reference();
        let prefs = InducedPreferences::new(&p, &ConstrainedEqualAwards);
        let order = preference_order(&prefs, 2, &SearchLimits::new()).unwrap();
        // Agent 2 under equal awards: 6 in {2,3} and {1,2,3}, then 4 in
        // {1,2}, then 0 alone.
        assert_eq!(order.len(), 3);
        assert_eq!(order[0], vec![c(&[2, 3]), c(&[1, 2, 3])]);
        assert_eq!(order[1], vec![c(&[1, 2])]);
        assert_eq!(order[2], vec![c(&[2])]);

        let tight = SearchLimits {
            preferences: 2,
            ..SearchLimits::new()
        };
        assert!(matches!(
            preference_order(&prefs, 2, &tight),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn coalitional_endowments_are_superadditive() {
        let p = ThetaProblem::new(vec![int(3), int(5), int(7), int(11)], int(13), 2).unwrap();
        for s in Coalition::all_nonempty(4) {
            for t in Coalition::all_nonempty(4) {
                if !s.intersection(t).is_empty() {
                    continue;
                }
                let joint = coalitional_endowment(&p, s.union(t)).unwrap();
                let split = coalitional_endowment(&p, s).unwrap()
                    + coalitional_endowment(&p, t).unwrap();
                assert!(joint >= split, "union {} vs parts", s.union(t));
            }
        }
    }

    #[test]
    fn payoffs_are_equivariant_under_relabeling() {
        // Swap agents 1 and 3 of the reference problem; payoffs must follow
        // the labels.
        let p = reference();
        let q = ThetaProblem::new(vec![int(22), int(6), int(2)], int(15), 2).unwrap();
        let rp = InducedPreferences::new(&p, &ConstrainedEqualAwards);
        let rq = InducedPreferences::new(&q, &ConstrainedEqualAwards);
        let map = |i: AgentId| match i {
            1 => 3,
            3 => 1,
            other => other,
        };
        for s in Coalition::all_nonempty(3) {
            let mapped = Coalition::from_ids(&s.members().map(map).collect::<Vec<_>>()).unwrap();
            for i in s.members() {
                assert_eq!(
                    rp.payoff(i, s).unwrap(),
                    rq.payoff(map(i), mapped).unwrap()
                );
            }
        }
    }
}
