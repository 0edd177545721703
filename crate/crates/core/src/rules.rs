//! Division rules for claims problems.
//!
//! A claims problem is a group of agents with positive claims on an
//! endowment no larger than the total claim. A division rule picks one
//! feasible allocation (componentwise between zero and the claims, summing
//! to the endowment). Three classical rules ship with closed-form exact
//! solvers:
//!
//! * proportional: everyone receives the same fraction of their claim;
//! * constrained equal awards: equal amounts capped by the claims;
//! * constrained equal losses: equal losses floored at zero.
//!
//! All three are parametric: payoffs are `f(claim, lambda)` for a schedule
//! `f` weakly increasing in lambda, with lambda chosen to exhaust the
//! endowment. [`parametric_solve`] handles arbitrary schedules by rational
//! bisection; the closed-form solvers never bisect.
//!
//! The module also provides finite-sample checkers for resource
//! monotonicity and consistency. They audit declared properties on concrete
//! instances; a `Violated` verdict is a proof, a `Holds` verdict is only
//! evidence.

use num::{One, Signed, Zero};

use crate::rational::{format_rational, total, Rational};
use crate::{AgentId, Error, Result};

/// Agents with positive claims on an endowment that cannot cover them all.
///
/// Agent ids are arbitrary but strictly increasing, so a reduced problem
/// keeps the names of the original agents.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClaimsProblem {
    agents: Vec<AgentId>,
    claims: Vec<Rational>,
    endowment: Rational,
}

impl ClaimsProblem {
    pub fn new(agents: Vec<AgentId>, claims: Vec<Rational>, endowment: Rational) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidProblem("no agents".into()));
        }
        if agents.len() != claims.len() {
            return Err(Error::InvalidProblem(format!(
                "{} agents but {} claims",
                agents.len(),
                claims.len()
            )));
        }
        if agents[0] == 0 || !agents.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidProblem(
                "agent ids must be positive and strictly increasing".into(),
            ));
        }
        if let Some(pos) = claims.iter().position(|c| !c.is_positive()) {
            return Err(Error::InvalidProblem(format!(
                "claim of agent {} must be positive, got {}",
                agents[pos],
                format_rational(&claims[pos])
            )));
        }
        if endowment.is_negative() {
            return Err(Error::InvalidProblem("endowment is negative".into()));
        }
        if endowment > total(&claims) {
            return Err(Error::InvalidProblem(format!(
                "endowment {} exceeds the total claim {}",
                format_rational(&endowment),
                format_rational(&total(&claims))
            )));
        }
        Ok(ClaimsProblem {
            agents,
            claims,
            endowment,
        })
    }

    /// Problem with agents named `1..=n`.
    pub fn from_claims(claims: Vec<Rational>, endowment: Rational) -> Result<Self> {
        let agents = (1..=claims.len()).collect();
        Self::new(agents, claims, endowment)
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn claims(&self) -> &[Rational] {
        &self.claims
    }

    pub fn endowment(&self) -> &Rational {
        &self.endowment
    }

    pub fn total_claim(&self) -> Rational {
        total(&self.claims)
    }

    pub fn claim_of(&self, agent: AgentId) -> Option<&Rational> {
        let pos = self.agents.iter().position(|&a| a == agent)?;
        Some(&self.claims[pos])
    }

    /// Reduced problem on `keep` with a fresh endowment. `keep` must be a
    /// subset of the agents; order is normalized to ascending ids.
    pub fn restrict(&self, keep: &[AgentId], endowment: Rational) -> Result<Self> {
        let mut ids: Vec<AgentId> = keep.to_vec();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != keep.len() {
            return Err(Error::InvalidProblem("duplicate agent in subset".into()));
        }
        let mut claims = Vec::with_capacity(ids.len());
        for &id in &ids {
            match self.claim_of(id) {
                Some(c) => claims.push(c.clone()),
                None => {
                    return Err(Error::NotAMember {
                        agent: id,
                        context: "the claims problem".into(),
                    })
                }
            }
        }
        Self::new(ids, claims, endowment)
    }
}

/// Payoff vector keyed by agent id. Shipped rules always return feasible
/// allocations; the type itself does not re-validate bounds so the axiom
/// checkers can inspect candidate rules that break feasibility.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Allocation {
    agents: Vec<AgentId>,
    payoffs: Vec<Rational>,
}

impl Allocation {
    pub fn new(agents: Vec<AgentId>, payoffs: Vec<Rational>) -> Self {
        assert_eq!(agents.len(), payoffs.len(), "agents/payoffs length mismatch");
        Allocation { agents, payoffs }
    }

    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn payoffs(&self) -> &[Rational] {
        &self.payoffs
    }

    pub fn get(&self, agent: AgentId) -> Option<&Rational> {
        let pos = self.agents.iter().position(|&a| a == agent)?;
        Some(&self.payoffs[pos])
    }

    pub fn sum(&self) -> Rational {
        total(&self.payoffs)
    }
}

/// A solved problem: the exhausting parameter and the allocation it induces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LambdaResult {
    pub lambda: Rational,
    pub allocation: Allocation,
}

/// Smallest lambda with `sum_i min(v_i, lambda) = target`.
/// Needs `0 <= target <= sum(v)` and nonnegative values.
pub(crate) fn cap_fill(values: &[Rational], target: &Rational) -> (Rational, Vec<Rational>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].cmp(&values[b]));

    let mut filled = Rational::zero();
    let mut lambda = None;
    for (k, &idx) in order.iter().enumerate() {
        // k agents saturated so far; the rest would receive lambda.
        let cand = (target - &filled) / Rational::from_integer((n - k).into());
        if cand <= values[idx] {
            lambda = Some(cand);
            break;
        }
        filled += &values[idx];
    }
    // Everyone saturated: only possible when target = sum(v).
    let lambda = lambda.unwrap_or_else(|| values[order[n - 1]].clone());

    let payoffs: Vec<Rational> = values.iter().map(|v| v.min(&lambda).clone()).collect();
    debug_assert_eq!(total(&payoffs), *target);
    (lambda, payoffs)
}

/// Largest lambda with `sum_i max(0, v_i - lambda) = target`.
/// Needs `0 <= target <= sum(v)` and nonnegative values.
pub(crate) fn loss_fill(values: &[Rational], target: &Rational) -> (Rational, Vec<Rational>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].cmp(&values[b]));

    let mut suffix = total(values);
    let mut lambda = None;
    for m in (1..=n).rev() {
        // The m largest values stay above lambda; suffix is their sum.
        let cand = (&suffix - target) / Rational::from_integer(m.into());
        if cand <= values[order[n - m]] {
            lambda = Some(cand);
            break;
        }
        suffix -= &values[order[n - m]];
    }
    let lambda = lambda.expect("loss fill always terminates at m = 1");

    let zero = Rational::zero();
    let payoffs: Vec<Rational> = values
        .iter()
        .map(|v| {
            let gain = v - &lambda;
            if gain.is_negative() {
                zero.clone()
            } else {
                gain
            }
        })
        .collect();
    debug_assert_eq!(total(&payoffs), *target);
    (lambda, payoffs)
}

/// Smallest lambda with `sum_i max(v_i, lambda) = target`.
/// Needs `target >= sum(v)`; used on the supply side where everyone is
/// pushed at least up to lambda.
pub(crate) fn floor_fill(values: &[Rational], target: &Rational) -> (Rational, Vec<Rational>) {
    let n = values.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| values[a].cmp(&values[b]));

    let mut suffix = Rational::zero();
    let mut lambda = None;
    for k in (1..=n).rev() {
        // The k smallest values are lifted to lambda; suffix is the sum of
        // the n - k values left at their own level.
        let cand = (target - &suffix) / Rational::from_integer(k.into());
        if cand >= values[order[k - 1]] {
            lambda = Some(cand);
            break;
        }
        suffix += &values[order[k - 1]];
    }
    let lambda = lambda.expect("floor fill always terminates at k = 1");

    let payoffs: Vec<Rational> = values.iter().map(|v| v.max(&lambda).clone()).collect();
    debug_assert_eq!(total(&payoffs), *target);
    (lambda, payoffs)
}

/// A division procedure for claims problems.
///
/// The declaration methods are claims made by the rule author, audited (not
/// proven) by [`check_resource_monotonicity`] and [`check_consistency`];
/// algorithms that require those properties check the declarations.
pub trait DivisionRule: Sync {
    fn name(&self) -> &str;

    fn apply(&self, problem: &ClaimsProblem) -> Result<LambdaResult>;

    /// Whether the rule claims to never pay anyone less when the endowment
    /// grows.
    fn declares_resource_monotonic(&self) -> bool {
        false
    }

    /// Whether the rule claims to be consistent under reduction to a
    /// subgroup re-dividing what it received.
    fn declares_consistent(&self) -> bool {
        false
    }
}

/// Everyone receives the same fraction of their claim.
#[derive(Clone, Copy, Debug, Default)]
pub struct Proportional;

/// Equal awards capped by the claims.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstrainedEqualAwards;

/// Equal losses floored at zero.
#[derive(Clone, Copy, Debug, Default)]
pub struct ConstrainedEqualLosses;

impl DivisionRule for Proportional {
    fn name(&self) -> &str {
        "proportional"
    }

    fn apply(&self, problem: &ClaimsProblem) -> Result<LambdaResult> {
        let lambda = problem.endowment() / problem.total_claim();
        let payoffs = problem.claims().iter().map(|c| c * &lambda).collect();
        Ok(LambdaResult {
            lambda,
            allocation: Allocation::new(problem.agents().to_vec(), payoffs),
        })
    }

    fn declares_resource_monotonic(&self) -> bool {
        true
    }

    fn declares_consistent(&self) -> bool {
        true
    }
}

impl DivisionRule for ConstrainedEqualAwards {
    fn name(&self) -> &str {
        "cea"
    }

    fn apply(&self, problem: &ClaimsProblem) -> Result<LambdaResult> {
        let (lambda, payoffs) = cap_fill(problem.claims(), problem.endowment());
        Ok(LambdaResult {
            lambda,
            allocation: Allocation::new(problem.agents().to_vec(), payoffs),
        })
    }

    fn declares_resource_monotonic(&self) -> bool {
        true
    }

    fn declares_consistent(&self) -> bool {
        true
    }
}

impl DivisionRule for ConstrainedEqualLosses {
    fn name(&self) -> &str {
        "cel"
    }

    fn apply(&self, problem: &ClaimsProblem) -> Result<LambdaResult> {
        let (lambda, payoffs) = loss_fill(problem.claims(), problem.endowment());
        Ok(LambdaResult {
            lambda,
            allocation: Allocation::new(problem.agents().to_vec(), payoffs),
        })
    }

    fn declares_resource_monotonic(&self) -> bool {
        true
    }

    fn declares_consistent(&self) -> bool {
        true
    }
}

pub fn proportional(problem: &ClaimsProblem) -> Result<LambdaResult> {
    Proportional.apply(problem)
}

pub fn cea(problem: &ClaimsProblem) -> Result<LambdaResult> {
    ConstrainedEqualAwards.apply(problem)
}

pub fn cel(problem: &ClaimsProblem) -> Result<LambdaResult> {
    ConstrainedEqualLosses.apply(problem)
}

/// Payoff schedule `f(claim, lambda)`.
pub type Schedule = dyn Fn(&Rational, &Rational) -> Rational + Send + Sync;

/// Bracket `[a, b]` for the parameter, derived from the problem.
pub type Bracket = dyn Fn(&ClaimsProblem) -> (Rational, Rational) + Send + Sync;

/// A rule given by an arbitrary parametric schedule, solved by bisection.
///
/// The schedule must be weakly increasing in lambda on the bracket with
/// `f(c, a) = 0` and `f(c, b) = c` for every claim; [`parametric_solve`]
/// verifies the boundary conditions exactly and monotonicity on a sample
/// grid before bisecting.
pub struct ParametricRule {
    name: String,
    schedule: Box<Schedule>,
    bracket: Box<Bracket>,
    declares_monotonic: bool,
    declares_consistent: bool,
}

impl ParametricRule {
    pub fn new(
        name: impl Into<String>,
        schedule: Box<Schedule>,
        bracket: Box<Bracket>,
    ) -> Self {
        ParametricRule {
            name: name.into(),
            schedule,
            bracket,
            declares_monotonic: false,
            declares_consistent: false,
        }
    }

    /// Record property declarations for this schedule (unaudited claims).
    pub fn with_declarations(mut self, resource_monotonic: bool, consistent: bool) -> Self {
        self.declares_monotonic = resource_monotonic;
        self.declares_consistent = consistent;
        self
    }

    /// Equal awards capped by the claims, expressed as a generic schedule.
    /// Exercises the bisection path; the dedicated [`cea`] solver is exact.
    pub fn cea_schedule() -> Self {
        Self::new(
            "cea (parametric)",
            Box::new(|claim: &Rational, lambda: &Rational| claim.min(lambda).clone()),
            Box::new(|p: &ClaimsProblem| {
                let hi = p
                    .claims()
                    .iter()
                    .max()
                    .expect("nonempty problem")
                    .clone();
                (Rational::zero(), hi)
            }),
        )
        .with_declarations(true, true)
    }

    /// Proportional awards as a generic schedule on the bracket `[0, 1]`.
    pub fn proportional_schedule() -> Self {
        Self::new(
            "proportional (parametric)",
            Box::new(|claim: &Rational, lambda: &Rational| claim * lambda),
            Box::new(|_: &ClaimsProblem| (Rational::zero(), Rational::one())),
        )
        .with_declarations(true, true)
    }

    fn payoff(&self, claim: &Rational, lambda: &Rational) -> Rational {
        (self.schedule)(claim, lambda)
    }
}

impl DivisionRule for ParametricRule {
    fn name(&self) -> &str {
        &self.name
    }

    fn apply(&self, problem: &ClaimsProblem) -> Result<LambdaResult> {
        parametric_solve(self, problem, &default_tolerance())
    }

    fn declares_resource_monotonic(&self) -> bool {
        self.declares_monotonic
    }

    fn declares_consistent(&self) -> bool {
        self.declares_consistent
    }
}

/// Default bisection tolerance, 10^-12 as an exact rational.
pub fn default_tolerance() -> Rational {
    Rational::new(1.into(), num::pow(num::bigint::BigInt::from(10), 12))
}

/// Bisection iteration budget. The interval halves every step, so this is
/// far more than any sane bracket/tolerance pair needs.
pub const PARAMETRIC_MAX_ITERATIONS: usize = 200;

/// Number of grid points used to spot-check schedule monotonicity.
const SCHEDULE_GRID: usize = 8;

/// Solve a parametric rule by rational bisection.
///
/// Stops when the endowment residual is within `tol`; payoffs are the
/// schedule values at the final parameter, clamped into `[0, claim]`, so the
/// allocation sums to the endowment only up to `tol`. Exact shortcuts cover
/// the empty and full endowments. Schedule contract violations (bad
/// boundaries, non-monotone samples, out-of-range values) abort the solve.
pub fn parametric_solve(
    rule: &ParametricRule,
    problem: &ClaimsProblem,
    tol: &Rational,
) -> Result<LambdaResult> {
    if !tol.is_positive() {
        return Err(Error::Precondition("tolerance must be positive".into()));
    }
    let (lo, hi) = (rule.bracket)(problem);
    if lo >= hi {
        return Err(Error::ScheduleContract(format!(
            "empty bracket [{}, {}]",
            format_rational(&lo),
            format_rational(&hi)
        )));
    }

    for (pos, claim) in problem.claims().iter().enumerate() {
        let at_lo = rule.payoff(claim, &lo);
        if !at_lo.is_zero() {
            return Err(Error::ScheduleContract(format!(
                "f(c, a) = {} instead of 0 for agent {}",
                format_rational(&at_lo),
                problem.agents()[pos]
            )));
        }
        let at_hi = rule.payoff(claim, &hi);
        if at_hi != *claim {
            return Err(Error::ScheduleContract(format!(
                "f(c, b) = {} instead of the claim {} for agent {}",
                format_rational(&at_hi),
                format_rational(claim),
                problem.agents()[pos]
            )));
        }
    }

    let step = (&hi - &lo) / Rational::from_integer(SCHEDULE_GRID.into());
    for (pos, claim) in problem.claims().iter().enumerate() {
        let mut prev = Rational::zero();
        for j in 0..=SCHEDULE_GRID {
            let lambda = &lo + &step * Rational::from_integer(j.into());
            let value = rule.payoff(claim, &lambda);
            if value.is_negative() || value > *claim {
                return Err(Error::ScheduleContract(format!(
                    "f out of [0, claim] at lambda = {} for agent {}",
                    format_rational(&lambda),
                    problem.agents()[pos]
                )));
            }
            if value < prev {
                return Err(Error::ScheduleContract(format!(
                    "f decreases at lambda = {} for agent {}",
                    format_rational(&lambda),
                    problem.agents()[pos]
                )));
            }
            prev = value;
        }
    }

    let endowment = problem.endowment();
    if endowment.is_zero() {
        let zeros = vec![Rational::zero(); problem.claims().len()];
        return Ok(LambdaResult {
            lambda: lo,
            allocation: Allocation::new(problem.agents().to_vec(), zeros),
        });
    }
    if *endowment == problem.total_claim() {
        return Ok(LambdaResult {
            lambda: hi,
            allocation: Allocation::new(problem.agents().to_vec(), problem.claims().to_vec()),
        });
    }

    let residual = |lambda: &Rational| -> Rational {
        problem
            .claims()
            .iter()
            .fold(Rational::zero(), |acc, c| acc + rule.payoff(c, lambda))
            - endowment
    };

    let (mut lo, mut hi) = (lo, hi);
    let mut last = Rational::zero();
    let two = Rational::from_integer(2.into());
    for _ in 0..PARAMETRIC_MAX_ITERATIONS {
        let mid = (&lo + &hi) / &two;
        let r = residual(&mid);
        if r.abs() <= *tol {
            let payoffs = problem
                .claims()
                .iter()
                .map(|c| {
                    let v = rule.payoff(c, &mid);
                    v.clamp(Rational::zero(), c.clone())
                })
                .collect();
            return Ok(LambdaResult {
                lambda: mid,
                allocation: Allocation::new(problem.agents().to_vec(), payoffs),
            });
        }
        if r.is_negative() {
            lo = mid;
        } else {
            hi = mid;
        }
        last = r;
    }
    Err(Error::NoConvergence {
        iterations: PARAMETRIC_MAX_ITERATIONS,
        residual: format_rational(&last.abs()),
    })
}

/// Outcome of a finite-sample axiom check. `Violated` carries a
/// counterexample and is conclusive; `Holds` only says no counterexample
/// was found in the checked instance.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict<W> {
    Holds,
    Violated(W),
}

impl<W> Verdict<W> {
    pub fn holds(&self) -> bool {
        matches!(self, Verdict::Holds)
    }

    pub fn witness(&self) -> Option<&W> {
        match self {
            Verdict::Holds => None,
            Verdict::Violated(w) => Some(w),
        }
    }
}

/// Agent whose payoff moved the wrong way when the endowment grew.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotonicityWitness {
    pub agent: AgentId,
    pub before: Rational,
    pub after: Rational,
}

/// Agent whose reduced-problem payoff differs from the original one.
/// `recomputed` is `None` when the reduction itself was infeasible because
/// the rule paid the agent outside `[0, claim]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConsistencyWitness {
    pub agent: AgentId,
    pub original: Rational,
    pub recomputed: Option<Rational>,
}

/// Compare payoffs at endowments `e < e_prime` on the same claims. With
/// `strict`, every payoff must grow strictly; otherwise weakly.
pub fn check_resource_monotonicity(
    rule: &dyn DivisionRule,
    claims: &[Rational],
    e: &Rational,
    e_prime: &Rational,
    strict: bool,
) -> Result<Verdict<MonotonicityWitness>> {
    if e >= e_prime {
        return Err(Error::Precondition(format!(
            "endowments must satisfy e < e', got {} and {}",
            format_rational(e),
            format_rational(e_prime)
        )));
    }
    let before = rule.apply(&ClaimsProblem::from_claims(claims.to_vec(), e.clone())?)?;
    let after = rule.apply(&ClaimsProblem::from_claims(claims.to_vec(), e_prime.clone())?)?;
    for (pos, (x, y)) in before
        .allocation
        .payoffs()
        .iter()
        .zip(after.allocation.payoffs())
        .enumerate()
    {
        let ok = if strict { y > x } else { y >= x };
        if !ok {
            return Ok(Verdict::Violated(MonotonicityWitness {
                agent: pos + 1,
                before: x.clone(),
                after: y.clone(),
            }));
        }
    }
    Ok(Verdict::Holds)
}

/// Check that the members of `subset` splitting what the rule gave them
/// re-receive exactly their original payoffs.
pub fn check_consistency(
    rule: &dyn DivisionRule,
    claims: &[Rational],
    e: &Rational,
    subset: &[AgentId],
) -> Result<Verdict<ConsistencyWitness>> {
    check_consistency_within(rule, claims, e, subset, &Rational::zero())
}

/// Like [`check_consistency`] but allowing payoff differences up to `tol`,
/// for rules solved numerically.
pub fn check_consistency_within(
    rule: &dyn DivisionRule,
    claims: &[Rational],
    e: &Rational,
    subset: &[AgentId],
    tol: &Rational,
) -> Result<Verdict<ConsistencyWitness>> {
    let problem = ClaimsProblem::from_claims(claims.to_vec(), e.clone())?;
    if subset.is_empty() || subset.len() >= claims.len() {
        return Err(Error::Precondition(
            "subset must be nonempty and proper".into(),
        ));
    }
    let full = rule.apply(&problem)?;

    // A payoff outside [0, claim] makes the reduced problem ill-posed; that
    // is itself a consistency failure of the candidate rule.
    for &agent in subset {
        let claim = problem.claim_of(agent).ok_or(Error::NotAMember {
            agent,
            context: "the claims problem".into(),
        })?;
        let x = full.allocation.get(agent).expect("agent present");
        if x.is_negative() || x > claim {
            return Ok(Verdict::Violated(ConsistencyWitness {
                agent,
                original: x.clone(),
                recomputed: None,
            }));
        }
    }

    let reduced_endowment = subset
        .iter()
        .fold(Rational::zero(), |acc, &a| {
            acc + full.allocation.get(a).expect("agent present")
        });
    let reduced = problem.restrict(subset, reduced_endowment)?;
    let again = rule.apply(&reduced)?;
    for &agent in reduced.agents() {
        let x = full.allocation.get(agent).expect("agent present");
        let y = again.allocation.get(agent).expect("agent present");
        if (x - y).abs() > *tol {
            return Ok(Verdict::Violated(ConsistencyWitness {
                agent,
                original: x.clone(),
                recomputed: Some(y.clone()),
            }));
        }
    }
    Ok(Verdict::Holds)
}
