//! Problem files: JSON in, exact rationals out.
//!
//! Numeric fields accept JSON numbers or strings; either way the text is
//! parsed as an exact rational ("47/5", "9.4", "2.5e-3"), never through
//! binary floating point.

use std::fs;
use std::io::Read;

use anyhow::{anyhow, bail, Context, Result};
use claimstable::problems::{Coalition, ThetaProblem};
use claimstable::rational::{format_rational, parse_rational, Rational};
use claimstable::rules::{
    ConstrainedEqualAwards, ConstrainedEqualLosses, DivisionRule, Proportional,
};
use claimstable::singlepeaked::{SinglePeakedProblem, SpComparison, SpVariant};
use claimstable::AgentId;
use serde_json::{Map, Value};

use crate::report::{ProblemEcho, TableEntryEcho};

/// Division rules selectable for claims problems.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RuleChoice {
    Proportional,
    Cea,
    Cel,
}

impl RuleChoice {
    pub fn as_rule(self) -> &'static dyn DivisionRule {
        match self {
            RuleChoice::Proportional => &Proportional,
            RuleChoice::Cea => &ConstrainedEqualAwards,
            RuleChoice::Cel => &ConstrainedEqualLosses,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            RuleChoice::Proportional => "proportional",
            RuleChoice::Cea => "cea",
            RuleChoice::Cel => "cel",
        }
    }
}

/// A parsed problem: claims with a division rule, or ideal points with a
/// peak-side division variant and a comparison mode.
pub enum Model {
    Claims {
        problem: ThetaProblem,
        rule: RuleChoice,
    },
    Peaks {
        problem: SinglePeakedProblem,
        variant: SpVariant,
        comparison: SpComparison,
    },
}

pub struct ParsedProblem {
    pub model: Model,
    pub echo: ProblemEcho,
    /// Whether the file named the rule itself; when it did not, solve may
    /// substitute the rule its algorithm optimizes.
    pub rule_explicit: bool,
    pub comparison_explicit: bool,
}

impl ParsedProblem {
    pub fn agent_count(&self) -> usize {
        match &self.model {
            Model::Claims { problem, .. } => problem.agent_count(),
            Model::Peaks { problem, .. } => problem.agent_count(),
        }
    }
}

/// Read a problem from a path, or from stdin when `input` is "-".
pub fn load(input: &str) -> Result<ParsedProblem> {
    let text = if input == "-" {
        let mut buf = String::new();
        std::io::stdin()
            .read_to_string(&mut buf)
            .context("reading stdin")?;
        buf
    } else {
        fs::read_to_string(input).with_context(|| format!("reading {input}"))?
    };
    parse(&text)
}

pub fn parse(text: &str) -> Result<ParsedProblem> {
    let value: Value = serde_json::from_str(text).context("problem file is not valid JSON")?;
    let map = value
        .as_object()
        .ok_or_else(|| anyhow!("problem file must be a JSON object"))?;

    const KNOWN: [&str; 8] = [
        "claims",
        "peaks",
        "endowment",
        "alpha",
        "endowments",
        "theta",
        "rule",
        "comparison",
    ];
    for key in map.keys() {
        if !KNOWN.contains(&key.as_str()) {
            bail!("unknown field {key:?} in problem file");
        }
    }

    let claims = field_array(map, "claims")?;
    let peaks = field_array(map, "peaks")?;
    if claims.is_some() == peaks.is_some() {
        bail!("provide exactly one of \"claims\" and \"peaks\"");
    }

    let endowment = field_rational(map, "endowment")?;
    let alpha = field_rational(map, "alpha")?;
    let table = map.get("endowments").map(parse_table).transpose()?;
    let budget_count = [endowment.is_some(), alpha.is_some(), table.is_some()]
        .into_iter()
        .filter(|present| *present)
        .count();
    if budget_count != 1 {
        bail!("provide exactly one of \"endowment\", \"alpha\", and \"endowments\"");
    }

    let theta = required_integer(map, "theta")?;
    let rule_name = field_string(map, "rule")?;
    let comparison_name = field_string(map, "comparison")?;

    let endowment_echo = endowment.as_ref().map(format_rational);
    let alpha_echo = alpha.as_ref().map(format_rational);
    let table_echo = table.as_ref().map(|entries| {
        entries
            .iter()
            .map(|(coalition, value)| TableEntryEcho {
                coalition: coalition.ids(),
                value: format_rational(value),
            })
            .collect::<Vec<_>>()
    });

    if let Some(claims) = claims {
        let rule = match rule_name.as_deref() {
            None => RuleChoice::Cea,
            Some("proportional") => RuleChoice::Proportional,
            Some("cea") => RuleChoice::Cea,
            Some("cel") => RuleChoice::Cel,
            Some(other) => bail!(
                "rule {other:?} does not apply to claims; pick proportional, cea, or cel"
            ),
        };
        if comparison_name.is_some() {
            bail!("\"comparison\" applies to peaks problems only");
        }
        if table.is_some() {
            bail!("coalitional endowment tables pair with \"peaks\"");
        }
        let problem = match (endowment, alpha) {
            (Some(e), None) => ThetaProblem::new(claims, e, theta)?,
            (None, Some(a)) => ThetaProblem::from_alpha(claims, a, theta)?,
            _ => unreachable!("budget arity checked above"),
        };
        let echo = ProblemEcho {
            claims: Some(problem.claims().iter().map(format_rational).collect()),
            peaks: None,
            endowment: endowment_echo,
            alpha: alpha_echo,
            endowments: None,
            theta,
            rule: rule.name().to_string(),
            comparison: None,
        };
        return Ok(ParsedProblem {
            model: Model::Claims { problem, rule },
            echo,
            rule_explicit: rule_name.is_some(),
            comparison_explicit: false,
        });
    }

    let peaks = peaks.expect("either claims or peaks is present");
    let variant = match rule_name.as_deref() {
        None => SpVariant::Uniform,
        Some("uniform") => SpVariant::Uniform,
        Some("cel-es") => SpVariant::CelEqualSurplus,
        Some(other) => bail!("rule {other:?} does not apply to peaks; pick uniform or cel-es"),
    };
    let comparison = match comparison_name.as_deref() {
        None => SpComparison::Distance,
        Some("distance") => SpComparison::Distance,
        Some("monotonic") => SpComparison::Monotonic,
        Some(other) => bail!("comparison {other:?} unknown; pick distance or monotonic"),
    };
    let problem = match (endowment, alpha, table) {
        (Some(e), None, None) => SinglePeakedProblem::proportional_from_endowment(peaks, &e, theta)?,
        (None, Some(a), None) => SinglePeakedProblem::proportional(peaks, a, theta)?,
        (None, None, Some(entries)) => SinglePeakedProblem::with_table(peaks, entries)?,
        _ => unreachable!("budget arity checked above"),
    };
    let echo = ProblemEcho {
        claims: None,
        peaks: Some(problem.peaks().iter().map(format_rational).collect()),
        endowment: endowment_echo,
        alpha: alpha_echo,
        endowments: table_echo,
        theta,
        rule: match variant {
            SpVariant::Uniform => "uniform".to_string(),
            SpVariant::CelEqualSurplus => "cel-es".to_string(),
        },
        comparison: Some(comparison.to_string()),
    };
    Ok(ParsedProblem {
        model: Model::Peaks {
            problem,
            variant,
            comparison,
        },
        echo,
        rule_explicit: rule_name.is_some(),
        comparison_explicit: comparison_name.is_some(),
    })
}

/// One numeric leaf: a JSON number (kept as its decimal text) or a string.
fn rational_of(value: &Value, what: &str) -> Result<Rational> {
    let text = match value {
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => bail!("{what} must be a number or string, got {other}"),
    };
    Ok(parse_rational(&text)?)
}

fn field_rational(map: &Map<String, Value>, name: &str) -> Result<Option<Rational>> {
    map.get(name).map(|v| rational_of(v, name)).transpose()
}

fn field_array(map: &Map<String, Value>, name: &str) -> Result<Option<Vec<Rational>>> {
    let Some(value) = map.get(name) else {
        return Ok(None);
    };
    let items = value
        .as_array()
        .ok_or_else(|| anyhow!("{name} must be an array"))?;
    let parsed = items
        .iter()
        .enumerate()
        .map(|(i, v)| rational_of(v, &format!("{name}[{i}]")))
        .collect::<Result<Vec<_>>>()?;
    Ok(Some(parsed))
}

fn field_string(map: &Map<String, Value>, name: &str) -> Result<Option<String>> {
    match map.get(name) {
        None => Ok(None),
        Some(Value::String(s)) => Ok(Some(s.clone())),
        Some(other) => bail!("{name} must be a string, got {other}"),
    }
}

fn required_integer(map: &Map<String, Value>, name: &str) -> Result<usize> {
    let value = map
        .get(name)
        .ok_or_else(|| anyhow!("missing field {name:?}"))?;
    let number = value
        .as_u64()
        .ok_or_else(|| anyhow!("{name} must be a non-negative integer, got {value}"))?;
    Ok(usize::try_from(number)?)
}

fn parse_table(value: &Value) -> Result<Vec<(Coalition, Rational)>> {
    let items = value
        .as_array()
        .ok_or_else(|| anyhow!("endowments must be an array of {{coalition, value}} objects"))?;
    let mut entries = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        let object = item
            .as_object()
            .ok_or_else(|| anyhow!("endowments[{i}] must be an object"))?;
        for key in object.keys() {
            if key != "coalition" && key != "value" {
                bail!("unknown field {key:?} in endowments[{i}]");
            }
        }
        let ids_value = object
            .get("coalition")
            .ok_or_else(|| anyhow!("endowments[{i}] is missing \"coalition\""))?;
        let ids = ids_value
            .as_array()
            .ok_or_else(|| anyhow!("endowments[{i}].coalition must be an array of ids"))?
            .iter()
            .map(|v| {
                v.as_u64()
                    .and_then(|id| usize::try_from(id).ok())
                    .filter(|&id| id >= 1)
                    .ok_or_else(|| anyhow!("endowments[{i}].coalition has a bad agent id {v}"))
            })
            .collect::<Result<Vec<AgentId>>>()?;
        let coalition = Coalition::from_ids(&ids)?;
        let value = rational_of(
            object
                .get("value")
                .ok_or_else(|| anyhow!("endowments[{i}] is missing \"value\""))?,
            &format!("endowments[{i}].value"),
        )?;
        entries.push((coalition, value));
    }
    // Canonical order, so echoes do not depend on input order.
    entries.sort_by_key(|(coalition, _)| coalition.mask());
    Ok(entries)
}
