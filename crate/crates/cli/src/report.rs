//! Machine-readable reports.
//!
//! Every rational is emitted as an exact string ("p" or "p/q"), agent ids
//! and block lists are always sorted ascending, and field order is fixed by
//! the struct declarations, so identical inputs produce byte-identical
//! output. All report types round-trip through serde unchanged.

use claimstable::algorithms::{AlgorithmTrace, AssortativityReport, CaseComparison};
use claimstable::problems::Coalition;
use claimstable::rational::format_rational;
use claimstable::stability::Partition;
use claimstable::AgentId;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TableEntryEcho {
    pub coalition: Vec<AgentId>,
    pub value: String,
}

/// The parsed problem, normalized: numerics in lowest terms, defaults made
/// explicit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemEcho {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claims: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub peaks: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endowment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endowments: Option<Vec<TableEntryEcho>>,
    pub theta: usize,
    pub rule: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ComparisonRecord {
    Delta {
        delta: String,
        alpha: String,
    },
    Lambda {
        lambda: String,
        bound: String,
        low: AgentId,
        high: AgentId,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceStepRecord {
    pub index: usize,
    pub working: Vec<AgentId>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub case: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub comparison: Option<ComparisonRecord>,
    pub formed: Vec<AgentId>,
    pub completes_block: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockLabel {
    pub block: Vec<AgentId>,
    pub label: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub problem: ProblemEcho,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub algorithm: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<Vec<Vec<AgentId>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoffs: Option<Vec<String>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocking: Option<Vec<AgentId>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stable_set: Option<Vec<Vec<Vec<AgentId>>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trace: Option<Vec<TraceStepRecord>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub assortativity: Option<Vec<BlockLabel>>,
    /// Why the algorithm itself produced no partition, when it did not.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub problem: ProblemEcho,
    pub partition: Vec<Vec<AgentId>>,
    pub payoffs: Vec<String>,
    pub stable: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub blocking: Option<Vec<AgentId>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnumerateReport {
    pub problem: ProblemEcho,
    pub count: usize,
    pub stable_partitions: Vec<Vec<Vec<AgentId>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WitnessRecord {
    pub claims: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endowment: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endowment_before: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub endowment_after: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subset: Option<Vec<AgentId>>,
    pub agent: AgentId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_before: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_after: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_original: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payoff_recomputed: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomVerdict {
    pub holds: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessRecord>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AxiomsReport {
    pub rule: String,
    pub samples: usize,
    pub seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub claims: Option<Vec<String>>,
    pub resource_monotonicity: AxiomVerdict,
    pub strict_resource_monotonicity: AxiomVerdict,
    pub consistency: AxiomVerdict,
}

pub fn partition_ids(partition: &Partition) -> Vec<Vec<AgentId>> {
    partition.blocks().iter().map(|b| b.ids()).collect()
}

pub fn trace_records(trace: &AlgorithmTrace) -> Vec<TraceStepRecord> {
    trace
        .steps
        .iter()
        .map(|step| TraceStepRecord {
            index: step.index,
            working: step.working_set.ids(),
            case: step.case.map(|c| c.to_string()),
            comparison: step.comparison.as_ref().map(|c| match c {
                CaseComparison::Delta { delta, alpha } => ComparisonRecord::Delta {
                    delta: format_rational(delta),
                    alpha: format_rational(alpha),
                },
                CaseComparison::Lambda {
                    lambda,
                    bound,
                    low,
                    high,
                } => ComparisonRecord::Lambda {
                    lambda: format_rational(lambda),
                    bound: format_rational(bound),
                    low: *low,
                    high: *high,
                },
            }),
            formed: step.formed.ids(),
            completes_block: step.completes_block,
        })
        .collect()
}

pub fn label_records(report: &AssortativityReport) -> Vec<BlockLabel> {
    report
        .labels
        .iter()
        .map(|(block, label)| BlockLabel {
            block: block.ids(),
            label: label.to_string(),
        })
        .collect()
}

pub fn blocking_ids(blocking: &Option<Coalition>) -> Option<Vec<AgentId>> {
    blocking.map(|b| b.ids())
}

/// Print a report as pretty JSON on stdout.
pub fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}
