//! Subcommand implementations: solve, verify, enumerate, axioms.
//!
//! Exit codes follow one contract everywhere: 0 when the requested check
//! succeeds (or nothing was checked), 1 when instability was detected, 2 on
//! input or usage errors. Errors bubble up as `anyhow` errors, which main
//! turns into exit 2.

use std::fs;

use anyhow::{bail, Context, Result};
use claimstable::algorithms::{
    cea_algorithm, classify_assortativity, theta_cea_algorithm, theta_cel_algorithm,
    top_coalition_constructor, AlgorithmRun,
};
use claimstable::problems::{InducedPreferences, ThetaProblem};
use claimstable::rational::{format_rational, int, rat, total, Rational};
use claimstable::rules::{
    check_consistency, check_resource_monotonicity, ConsistencyWitness, MonotonicityWitness,
    Verdict,
};
use claimstable::singlepeaked::{
    equal_surplus_algorithm, monotonic_supply_algorithm, sp_find_blocking, sp_stability_scan,
    uniform_algorithm, SinglePeakedProblem, SpComparison, SpEvaluator, SpVariant,
};
use claimstable::stability::{enumerate_stable_partitions, find_blocking, Partition};
use claimstable::{AgentId, SearchLimits};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::problem::{Model, ParsedProblem, RuleChoice};
use crate::report::{
    blocking_ids, label_records, partition_ids, print_json, trace_records, AxiomVerdict,
    AxiomsReport, EnumerateReport, SolveReport, VerifyReport, WitnessRecord,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Algorithm {
    ThetaCea,
    ThetaCel,
    Cea,
    TopCoalition,
    Uniform,
    EqualSurplus,
    MonotonicSupply,
}

impl Algorithm {
    pub fn name(self) -> &'static str {
        match self {
            Algorithm::ThetaCea => "theta-cea",
            Algorithm::ThetaCel => "theta-cel",
            Algorithm::Cea => "cea",
            Algorithm::TopCoalition => "top-coalition",
            Algorithm::Uniform => "uniform",
            Algorithm::EqualSurplus => "equal-surplus",
            Algorithm::MonotonicSupply => "monotonic-supply",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum RuleArg {
    Proportional,
    Cea,
    Cel,
}

impl RuleArg {
    fn choice(self) -> RuleChoice {
        match self {
            RuleArg::Proportional => RuleChoice::Proportional,
            RuleArg::Cea => RuleChoice::Cea,
            RuleArg::Cel => RuleChoice::Cel,
        }
    }
}

/// Payoff of every agent in her own block, in agent order.
fn claims_payoffs(prefs: &InducedPreferences, partition: &Partition) -> Result<Vec<String>> {
    let mut out = vec![String::new(); partition.agent_count()];
    for &block in partition.blocks() {
        let allocation = prefs.allocation(block)?;
        for agent in block.members() {
            out[agent - 1] = format_rational(allocation.get(agent).expect("member has a payoff"));
        }
    }
    Ok(out)
}

fn peaks_payoffs(evaluator: &SpEvaluator, partition: &Partition) -> Result<Vec<String>> {
    let mut out = vec![String::new(); partition.agent_count()];
    for &block in partition.blocks() {
        let allocation = evaluator.allocation(block)?;
        for (pos, agent) in block.members().enumerate() {
            out[agent - 1] = format_rational(&allocation[pos]);
        }
    }
    Ok(out)
}

pub fn solve(
    parsed: ParsedProblem,
    algorithm: Algorithm,
    verify: bool,
    exhaustive: bool,
    limits: &SearchLimits,
) -> Result<i32> {
    let mut echo = parsed.echo;
    match parsed.model {
        Model::Claims { problem, rule } => {
            // An explicit file rule wins; otherwise judge the outcome by
            // the rule the algorithm optimizes.
            let rule = if parsed.rule_explicit {
                rule
            } else {
                match algorithm {
                    Algorithm::ThetaCel => RuleChoice::Cel,
                    _ => rule,
                }
            };
            echo.rule = rule.name().to_string();
            let prefs = InducedPreferences::new(&problem, rule.as_rule());
            let run = run_claims_algorithm(&problem, rule, algorithm, limits);
            finish_solve(
                echo,
                algorithm,
                run,
                exhaustive,
                verify,
                |partition| Ok(find_blocking(&prefs, partition, limits)?),
                |partition| claims_payoffs(&prefs, partition),
                || Ok(enumerate_stable_partitions(&prefs, limits)?),
                |run| {
                    let labels = classify_assortativity(&problem, &run.partition, Some(&run.trace))?;
                    Ok(Some(label_records(&labels)))
                },
            )
        }
        Model::Peaks {
            problem,
            variant,
            comparison,
        } => {
            let variant = if parsed.rule_explicit {
                variant
            } else {
                match algorithm {
                    Algorithm::EqualSurplus => SpVariant::CelEqualSurplus,
                    _ => variant,
                }
            };
            let comparison = if parsed.comparison_explicit {
                comparison
            } else {
                match algorithm {
                    Algorithm::MonotonicSupply => SpComparison::Monotonic,
                    _ => comparison,
                }
            };
            echo.rule = variant.to_string();
            echo.comparison = Some(comparison.to_string());
            let evaluator = SpEvaluator::new(&problem, variant, comparison);
            let run = run_peaks_algorithm(&problem, algorithm);
            finish_solve(
                echo,
                algorithm,
                run,
                exhaustive,
                verify,
                |partition| Ok(sp_find_blocking(&evaluator, partition, limits)?),
                |partition| peaks_payoffs(&evaluator, partition),
                || Ok(sp_stability_scan(&problem, variant, comparison, limits)?),
                |_| Ok(None),
            )
        }
    }
}

fn run_claims_algorithm(
    problem: &ThetaProblem,
    rule: RuleChoice,
    algorithm: Algorithm,
    limits: &SearchLimits,
) -> Result<AlgorithmRun> {
    match algorithm {
        Algorithm::Cea => Ok(cea_algorithm(problem)?),
        Algorithm::ThetaCea => Ok(theta_cea_algorithm(problem)?),
        Algorithm::ThetaCel => Ok(theta_cel_algorithm(problem)?),
        Algorithm::TopCoalition => Ok(top_coalition_constructor(problem, rule.as_rule(), limits)?),
        other => bail!(
            "algorithm {} applies to peaks problems, this file has claims",
            other.name()
        ),
    }
}

fn run_peaks_algorithm(problem: &SinglePeakedProblem, algorithm: Algorithm) -> Result<AlgorithmRun> {
    match algorithm {
        Algorithm::Uniform => Ok(uniform_algorithm(problem)?),
        Algorithm::EqualSurplus => Ok(equal_surplus_algorithm(problem)?),
        Algorithm::MonotonicSupply => Ok(monotonic_supply_algorithm(problem)?),
        other => bail!(
            "algorithm {} applies to claims problems, this file has peaks",
            other.name()
        ),
    }
}

/// Shared tail of solve: verification, exhaustive scan, report, exit code.
/// When the algorithm itself failed but an exhaustive scan was requested,
/// the scan is still reported and the failure becomes a note.
#[allow(clippy::too_many_arguments)]
fn finish_solve(
    echo: crate::report::ProblemEcho,
    algorithm: Algorithm,
    run: Result<AlgorithmRun>,
    exhaustive: bool,
    verify: bool,
    mut find_block: impl FnMut(&Partition) -> Result<Option<claimstable::problems::Coalition>>,
    mut payoffs_of: impl FnMut(&Partition) -> Result<Vec<String>>,
    mut scan: impl FnMut() -> Result<Vec<Partition>>,
    mut labels_of: impl FnMut(&AlgorithmRun) -> Result<Option<Vec<crate::report::BlockLabel>>>,
) -> Result<i32> {
    match run {
        Ok(run) => {
            let payoffs = payoffs_of(&run.partition)?;
            let blocking = if verify { find_block(&run.partition)? } else { None };
            let stable = if verify { Some(blocking.is_none()) } else { None };
            let stable_set = if exhaustive { Some(scan()?) } else { None };
            let assortativity = labels_of(&run)?;
            let report = SolveReport {
                problem: echo,
                algorithm: Some(algorithm.name().to_string()),
                partition: Some(partition_ids(&run.partition)),
                payoffs: Some(payoffs),
                stable,
                blocking: blocking_ids(&blocking),
                stable_set: stable_set
                    .as_ref()
                    .map(|set| set.iter().map(partition_ids).collect()),
                trace: Some(trace_records(&run.trace)),
                assortativity,
                note: None,
            };
            print_json(&report)?;
            let unstable = stable == Some(false)
                || stable_set.as_ref().is_some_and(|set| set.is_empty());
            Ok(if unstable { 1 } else { 0 })
        }
        Err(err) if exhaustive => {
            // No partition to show, but the scan answers the real question.
            let stable_set = scan()?;
            let report = SolveReport {
                problem: echo,
                algorithm: None,
                partition: None,
                payoffs: None,
                stable: None,
                blocking: None,
                stable_set: Some(stable_set.iter().map(partition_ids).collect()),
                trace: None,
                assortativity: None,
                note: Some(format!("{err:#}")),
            };
            print_json(&report)?;
            Ok(if stable_set.is_empty() { 1 } else { 0 })
        }
        Err(err) => Err(err),
    }
}

/// Accept `[[1,3],[2]]` inline or a path to a file holding the same JSON.
fn parse_partition_arg(arg: &str) -> Result<Vec<Vec<AgentId>>> {
    let text = if arg.trim_start().starts_with('[') {
        arg.to_string()
    } else {
        fs::read_to_string(arg).with_context(|| format!("reading partition file {arg}"))?
    };
    serde_json::from_str(&text).context("partition must be a JSON array of id arrays")
}

pub fn verify(parsed: ParsedProblem, partition_arg: &str, limits: &SearchLimits) -> Result<i32> {
    let blocks = parse_partition_arg(partition_arg)?;
    let n = parsed.agent_count();
    let partition = Partition::from_blocks_of_ids(&blocks, n)?;

    let (payoffs, blocking) = match &parsed.model {
        Model::Claims { problem, rule } => {
            let prefs = InducedPreferences::new(problem, rule.as_rule());
            (
                claims_payoffs(&prefs, &partition)?,
                find_blocking(&prefs, &partition, limits)?,
            )
        }
        Model::Peaks {
            problem,
            variant,
            comparison,
        } => {
            let evaluator = SpEvaluator::new(problem, *variant, *comparison);
            (
                peaks_payoffs(&evaluator, &partition)?,
                sp_find_blocking(&evaluator, &partition, limits)?,
            )
        }
    };

    let report = VerifyReport {
        problem: parsed.echo,
        partition: partition_ids(&partition),
        payoffs,
        stable: blocking.is_none(),
        blocking: blocking_ids(&blocking),
    };
    print_json(&report)?;
    Ok(if report.stable { 0 } else { 1 })
}

pub fn enumerate(parsed: ParsedProblem, force: bool, limits: &SearchLimits) -> Result<i32> {
    let limits = if force {
        limits.raised_to(parsed.agent_count())
    } else {
        *limits
    };
    let stable = match &parsed.model {
        Model::Claims { problem, rule } => {
            let prefs = InducedPreferences::new(problem, rule.as_rule());
            enumerate_stable_partitions(&prefs, &limits)?
        }
        Model::Peaks {
            problem,
            variant,
            comparison,
        } => sp_stability_scan(problem, *variant, *comparison, &limits)?,
    };

    let report = EnumerateReport {
        problem: parsed.echo,
        count: stable.len(),
        stable_partitions: stable.iter().map(partition_ids).collect(),
    };
    print_json(&report)?;
    Ok(if stable.is_empty() { 1 } else { 0 })
}

/// One audited instance: claims, an endowment pair for monotonicity, and a
/// proper subset for consistency.
struct AxiomSample {
    claims: Vec<Rational>,
    e: Rational,
    e_prime: Rational,
    subset: Vec<AgentId>,
}

/// Fixed probes checked before any random sampling. Both make the
/// constrained rules cap or zero out an agent across the endowment change,
/// so the strict-monotonicity witnesses are reproducible.
fn fixed_probes() -> Vec<AxiomSample> {
    vec![
        AxiomSample {
            claims: vec![int(1), int(5)],
            e: int(2),
            e_prime: int(3),
            subset: vec![2],
        },
        AxiomSample {
            claims: vec![int(2), int(22)],
            e: int(12),
            e_prime: int(13),
            subset: vec![2],
        },
    ]
}

fn random_sample(seed: u64, index: u64, fixed_claims: &Option<Vec<Rational>>) -> AxiomSample {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ index.wrapping_mul(0x9E3779B97F4A7C15));
    let claims = match fixed_claims {
        Some(claims) => claims.clone(),
        None => {
            let n = rng.random_range(2..=8);
            (0..n).map(|_| int(rng.random_range(1..=50))).collect()
        }
    };
    let n = claims.len();
    let sum = total(&claims);
    let d = rng.random_range(3..=12i64);
    let lo = rng.random_range(1..d - 1);
    let hi = rng.random_range(lo + 1..d);
    let e = &sum * rat(lo, d);
    let e_prime = &sum * rat(hi, d);
    let keep = rng.random_range(1..n.max(2));
    let mut ids: Vec<AgentId> = (1..=n).collect();
    ids.shuffle(&mut rng);
    let mut subset: Vec<AgentId> = ids[..keep].to_vec();
    subset.sort_unstable();
    AxiomSample {
        claims,
        e,
        e_prime,
        subset,
    }
}

struct SampleFindings {
    rm: Option<WitnessRecord>,
    strict_rm: Option<WitnessRecord>,
    consistency: Option<WitnessRecord>,
}

fn monotonicity_record(sample: &AxiomSample, witness: &MonotonicityWitness) -> WitnessRecord {
    WitnessRecord {
        claims: sample.claims.iter().map(format_rational).collect(),
        endowment: None,
        endowment_before: Some(format_rational(&sample.e)),
        endowment_after: Some(format_rational(&sample.e_prime)),
        subset: None,
        agent: witness.agent,
        payoff_before: Some(format_rational(&witness.before)),
        payoff_after: Some(format_rational(&witness.after)),
        payoff_original: None,
        payoff_recomputed: None,
    }
}

fn consistency_record(sample: &AxiomSample, witness: &ConsistencyWitness) -> WitnessRecord {
    WitnessRecord {
        claims: sample.claims.iter().map(format_rational).collect(),
        endowment: Some(format_rational(&sample.e)),
        endowment_before: None,
        endowment_after: None,
        subset: Some(sample.subset.clone()),
        agent: witness.agent,
        payoff_before: None,
        payoff_after: None,
        payoff_original: Some(format_rational(&witness.original)),
        payoff_recomputed: witness.recomputed.as_ref().map(format_rational),
    }
}

fn audit_sample(rule: RuleChoice, sample: &AxiomSample) -> Result<SampleFindings> {
    let rule = rule.as_rule();
    let rm = check_resource_monotonicity(rule, &sample.claims, &sample.e, &sample.e_prime, false)?;
    let strict =
        check_resource_monotonicity(rule, &sample.claims, &sample.e, &sample.e_prime, true)?;
    let consistency = check_consistency(rule, &sample.claims, &sample.e, &sample.subset)?;
    let record =
        |v: &Verdict<MonotonicityWitness>| v.witness().map(|w| monotonicity_record(sample, w));
    Ok(SampleFindings {
        rm: record(&rm),
        strict_rm: record(&strict),
        consistency: consistency
            .witness()
            .map(|w| consistency_record(sample, w)),
    })
}

pub fn axioms(
    input: Option<ParsedProblem>,
    rule: RuleArg,
    samples: usize,
    seed: u64,
) -> Result<i32> {
    let fixed_claims = match input {
        None => None,
        Some(parsed) => match parsed.model {
            Model::Claims { problem, .. } => Some(problem.claims().to_vec()),
            Model::Peaks { .. } => {
                bail!("axiom audits run on claims problems; this file has peaks")
            }
        },
    };
    let choice = rule.choice();

    let battery: Vec<AxiomSample> = fixed_probes()
        .into_iter()
        .chain((0..samples as u64).map(|i| random_sample(seed, i, &fixed_claims)))
        .collect();
    let findings = battery
        .par_iter()
        .map(|sample| audit_sample(choice, sample))
        .collect::<Result<Vec<_>>>()?;

    // First witness in battery order wins, so reports are seed-stable.
    let mut rm = None;
    let mut strict_rm = None;
    let mut consistency = None;
    for finding in findings {
        rm = rm.or(finding.rm);
        strict_rm = strict_rm.or(finding.strict_rm);
        consistency = consistency.or(finding.consistency);
    }

    let verdict = |witness: Option<WitnessRecord>| AxiomVerdict {
        holds: witness.is_none(),
        witness,
    };
    let report = AxiomsReport {
        rule: choice.name().to_string(),
        samples,
        seed,
        claims: fixed_claims
            .as_ref()
            .map(|claims| claims.iter().map(format_rational).collect()),
        resource_monotonicity: verdict(rm),
        strict_resource_monotonicity: verdict(strict_rm),
        consistency: verdict(consistency),
    };
    print_json(&report)?;
    Ok(0)
}
