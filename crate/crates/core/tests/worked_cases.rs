//! End-to-end runs through the public API on fixed, hand-checked instances.

use claimstable::algorithms::{
    case_pair_summary, cea_algorithm, classify_assortativity, theta_cea_algorithm,
    theta_cel_algorithm, thresholds, top_coalition_constructor, AssortativityLabel, Case,
    CaseComparison,
};
use claimstable::problems::{
    coalition_payoff, preference_order, Coalition, InducedPreferences, ThetaProblem,
};
use claimstable::rational::{int, rat, Rational};
use claimstable::rules::{
    cea, cel, ClaimsProblem, ConstrainedEqualAwards, ConstrainedEqualLosses, DivisionRule,
};
use claimstable::singlepeaked::{
    sp_find_blocking, SinglePeakedProblem, SpComparison, SpEvaluator, SpVariant,
};
use claimstable::stability::{
    all_partitions, enumerate_stable_partitions, find_blocking, is_stable, stability_report,
    is_top_coalition, Partition,
};
use claimstable::{AgentId, SearchLimits};

fn c(ids: &[AgentId]) -> Coalition {
    Coalition::from_ids(ids).unwrap()
}

fn part(blocks: &[&[AgentId]], n: usize) -> Partition {
    Partition::new(blocks.iter().map(|ids| c(ids)).collect(), n).unwrap()
}

fn ints(values: &[i64]) -> Vec<Rational> {
    values.iter().copied().map(int).collect()
}

/// Three agents with claims 2, 6, 22; pairs and the grand coalition get
/// half their combined claim, singletons get nothing.
fn benchmark() -> ThetaProblem {
    ThetaProblem::new(ints(&[2, 6, 22]), int(15), 2).unwrap()
}

fn five_agents(endowment: Rational) -> ThetaProblem {
    ThetaProblem::new(ints(&[2, 6, 22, 30, 34]), endowment, 2).unwrap()
}

fn payoff_row(problem: &ThetaProblem, rule: &dyn DivisionRule, ids: &[AgentId]) -> Vec<Rational> {
    coalition_payoff(problem, rule, c(ids))
        .unwrap()
        .payoffs()
        .to_vec()
}

#[test]
fn awards_and_losses_tables_on_the_three_agent_benchmark() {
    let p = benchmark();
    let awards = ConstrainedEqualAwards;
    let losses = ConstrainedEqualLosses;

    for agent in 1..=3 {
        assert_eq!(payoff_row(&p, &awards, &[agent]), ints(&[0]));
        assert_eq!(payoff_row(&p, &losses, &[agent]), ints(&[0]));
    }

    assert_eq!(payoff_row(&p, &awards, &[1, 2]), ints(&[2, 2]));
    assert_eq!(payoff_row(&p, &awards, &[1, 3]), ints(&[2, 10]));
    assert_eq!(payoff_row(&p, &awards, &[2, 3]), ints(&[6, 8]));
    assert_eq!(payoff_row(&p, &awards, &[1, 2, 3]), ints(&[2, 6, 7]));

    assert_eq!(payoff_row(&p, &losses, &[1, 2]), ints(&[0, 4]));
    assert_eq!(payoff_row(&p, &losses, &[1, 3]), ints(&[0, 12]));
    assert_eq!(payoff_row(&p, &losses, &[2, 3]), ints(&[0, 14]));
    assert_eq!(payoff_row(&p, &losses, &[1, 2, 3]), ints(&[0, 0, 15]));
}

#[test]
fn induced_rankings_match_the_payoff_tables() {
    let p = benchmark();
    let limits = SearchLimits::new();

    let awards = ConstrainedEqualAwards;
    let by_awards = InducedPreferences::new(&p, &awards);
    let order = |agent| preference_order(&by_awards, agent, &limits).unwrap();
    assert_eq!(order(1), vec![vec![c(&[1, 2]), c(&[1, 3]), c(&[1, 2, 3])], vec![c(&[1])]]);
    assert_eq!(
        order(2),
        vec![vec![c(&[2, 3]), c(&[1, 2, 3])], vec![c(&[1, 2])], vec![c(&[2])]]
    );
    assert_eq!(
        order(3),
        vec![vec![c(&[1, 3])], vec![c(&[2, 3])], vec![c(&[1, 2, 3])], vec![c(&[3])]]
    );

    let losses = ConstrainedEqualLosses;
    let by_losses = InducedPreferences::new(&p, &losses);
    let order = |agent| preference_order(&by_losses, agent, &limits).unwrap();
    assert_eq!(
        order(1),
        vec![vec![c(&[1]), c(&[1, 2]), c(&[1, 3]), c(&[1, 2, 3])]]
    );
    assert_eq!(
        order(2),
        vec![vec![c(&[1, 2])], vec![c(&[2]), c(&[2, 3]), c(&[1, 2, 3])]]
    );
    assert_eq!(
        order(3),
        vec![vec![c(&[1, 2, 3])], vec![c(&[2, 3])], vec![c(&[1, 3])], vec![c(&[3])]]
    );
}

#[test]
fn stable_sets_under_awards_and_losses() {
    let p = benchmark();
    let limits = SearchLimits::new();

    let awards = ConstrainedEqualAwards;
    let by_awards = InducedPreferences::new(&p, &awards);
    let stable = enumerate_stable_partitions(&by_awards, &limits).unwrap();
    assert_eq!(stable, vec![Partition::grand(3), part(&[&[1, 3], &[2]], 3)]);

    // The enumerator must agree with filtering the raw partition stream.
    let manual: Vec<Partition> = all_partitions(3, &limits)
        .unwrap()
        .filter(|pi| is_stable(&by_awards, pi, &limits).unwrap())
        .collect();
    assert_eq!(stable, manual);

    let losses = ConstrainedEqualLosses;
    let by_losses = InducedPreferences::new(&p, &losses);
    let stable = enumerate_stable_partitions(&by_losses, &limits).unwrap();
    let every: Vec<Partition> = all_partitions(3, &limits).unwrap().collect();
    assert_eq!(stable, every);
    assert_eq!(every.len(), 5);
}

#[test]
fn pair_algorithm_full_pipeline_at_alpha_one_half() {
    let p = five_agents(int(47));
    let run = cea_algorithm(&p).unwrap();
    assert_eq!(run.partition, part(&[&[4, 5], &[1, 3], &[2]], 5));

    let cases: Vec<Option<Case>> = run.trace.steps.iter().map(|s| s.case).collect();
    assert_eq!(cases, vec![Some(Case::I), Some(Case::II), None]);
    match &run.trace.steps[0].comparison {
        Some(CaseComparison::Delta { delta, alpha }) => {
            assert_eq!(*delta, rat(1, 2));
            assert_eq!(*alpha, rat(1, 2));
        }
        other => panic!("expected a pair comparison, got {other:?}"),
    }
    match &run.trace.steps[1].comparison {
        Some(CaseComparison::Delta { delta, .. }) => assert_eq!(*delta, rat(1, 5)),
        other => panic!("expected a pair comparison, got {other:?}"),
    }

    let awards = ConstrainedEqualAwards;
    let prefs = InducedPreferences::new(&p, &awards);
    let limits = SearchLimits::new();
    let report = stability_report(&prefs, &run.partition, &limits).unwrap();
    assert!(report.stable);
    assert!(report.blocking.is_none());

    let labels = classify_assortativity(&p, &run.partition, Some(&run.trace)).unwrap();
    assert_eq!(labels.label_of(c(&[4, 5])), Some(AssortativityLabel::Positive));
    assert_eq!(labels.label_of(c(&[1, 3])), Some(AssortativityLabel::Negative));
    assert_eq!(labels.label_of(c(&[2])), Some(AssortativityLabel::Positive));

    let pairs = case_pair_summary(&labels, &run.trace);
    assert_eq!(
        pairs,
        vec![
            (c(&[4, 5]), Case::I, AssortativityLabel::Positive),
            (c(&[1, 3]), Case::II, AssortativityLabel::Negative),
        ]
    );

    let bundle = thresholds(&p, p.everyone()).unwrap();
    assert_eq!(bundle.beta, rat(1, 9));
    assert_eq!(bundle.delta, rat(1, 2));
    assert_eq!(bundle.gamma, rat(15, 16));
}

#[test]
fn pair_algorithm_at_alpha_one_tenth() {
    let p = five_agents(rat(47, 5));
    assert_eq!(*p.alpha(), rat(1, 10));
    let run = cea_algorithm(&p).unwrap();
    assert_eq!(run.partition, part(&[&[4, 5], &[2, 3], &[1]], 5));
    let cases: Vec<Option<Case>> = run.trace.steps.iter().map(|s| s.case).collect();
    assert_eq!(cases, vec![Some(Case::I), Some(Case::I), None]);

    let awards = ConstrainedEqualAwards;
    let prefs = InducedPreferences::new(&p, &awards);
    assert!(is_stable(&prefs, &run.partition, &SearchLimits::new()).unwrap());
}

#[test]
fn triple_algorithm_trace_replays_by_direct_waterfilling() {
    let p =
        ThetaProblem::new(ints(&[2, 6, 22, 30, 34, 38, 46]), int(89), 3).unwrap();
    assert_eq!(*p.alpha(), rat(1, 2));
    let run = theta_cea_algorithm(&p).unwrap();
    assert_eq!(run.partition, part(&[&[1, 6, 7], &[2, 4, 5], &[3]], 7));

    let mut seen = Vec::new();
    for step in &run.trace.steps {
        let Some(CaseComparison::Lambda {
            lambda,
            bound,
            low,
            high,
        }) = &step.comparison
        else {
            continue;
        };
        // The logged level must reproduce from scratch: equal-awards
        // waterfilling on the tried set with its proportional endowment.
        // The tried set is the formed set when the high candidate was
        // taken, and the formed set with low swapped for high otherwise.
        let tried = match step.case {
            Some(Case::I) => step.formed,
            Some(Case::II) => step.formed.remove(*low).insert(*high),
            None => panic!("level comparison without a case decision"),
        };
        let claims: Vec<Rational> = tried.members().map(|a| p.claim(a).clone()).collect();
        let endowment = p.alpha() * claims.iter().sum::<Rational>();
        let direct = cea(&ClaimsProblem::from_claims(claims, endowment).unwrap()).unwrap();
        assert_eq!(direct.lambda, *lambda, "level mismatch on {tried}");
        seen.push((lambda.clone(), bound.clone()));
    }
    let expected = [
        (int(21), int(20)),
        (rat(41, 2), int(22)),
        (int(16), int(18)),
        (rat(43, 3), int(14)),
    ];
    assert_eq!(seen, expected);

    let awards = ConstrainedEqualAwards;
    let prefs = InducedPreferences::new(&p, &awards);
    assert!(is_stable(&prefs, &run.partition, &SearchLimits::new()).unwrap());
}

#[test]
fn lowest_pairs_algorithm_on_the_pair_benchmark() {
    let p = five_agents(int(47));
    let run = theta_cel_algorithm(&p).unwrap();
    assert_eq!(run.partition, part(&[&[1, 2], &[3, 4], &[5]], 5));
    assert_eq!(
        run.trace.completed_blocks(),
        vec![c(&[1, 2]), c(&[3, 4]), c(&[5])]
    );

    let losses = ConstrainedEqualLosses;
    let prefs = InducedPreferences::new(&p, &losses);
    let limits = SearchLimits::new();
    assert_eq!(find_blocking(&prefs, &run.partition, &limits).unwrap(), None);
}

#[test]
fn growth_form_agrees_with_pair_form_on_pair_problems() {
    for endowment in [int(47), rat(47, 5), rat(141, 5)] {
        let p = five_agents(endowment);
        let pair = cea_algorithm(&p).unwrap();
        let growth = theta_cea_algorithm(&p).unwrap();
        assert_eq!(pair.partition, growth.partition);
    }
}

#[test]
fn constructor_blocks_are_top_coalitions() {
    let p = benchmark();
    let limits = SearchLimits::new();

    let awards = ConstrainedEqualAwards;
    let run = top_coalition_constructor(&p, &awards, &limits).unwrap();
    assert_eq!(run.partition, part(&[&[1, 3], &[2]], 3));
    let first = run.trace.completed_blocks()[0];
    let prefs = InducedPreferences::new(&p, &awards);
    assert!(is_top_coalition(&prefs, first, p.everyone(), &limits).unwrap());
    assert!(is_stable(&prefs, &run.partition, &limits).unwrap());

    let losses = ConstrainedEqualLosses;
    let run = top_coalition_constructor(&p, &losses, &limits).unwrap();
    assert_eq!(run.partition, part(&[&[1, 2], &[3]], 3));
    let prefs = InducedPreferences::new(&p, &losses);
    let first = run.trace.completed_blocks()[0];
    assert!(is_top_coalition(&prefs, first, p.everyone(), &limits).unwrap());
    assert!(is_stable(&prefs, &run.partition, &limits).unwrap());
}

#[test]
fn losses_complement_awards_on_fixed_problems() {
    let fixtures = [
        (ints(&[2, 6, 22]), int(15)),
        (ints(&[2, 6, 22, 30, 34]), int(47)),
        (ints(&[1, 1, 1]), rat(3, 2)),
        (ints(&[5, 5, 9]), int(7)),
    ];
    for (claims, endowment) in fixtures {
        let total: Rational = claims.iter().sum();
        let direct = cel(&ClaimsProblem::from_claims(claims.clone(), endowment.clone()).unwrap())
            .unwrap();
        let mirrored = cea(
            &ClaimsProblem::from_claims(claims.clone(), &total - &endowment).unwrap(),
        )
        .unwrap();
        let complement: Vec<Rational> = claims
            .iter()
            .zip(mirrored.allocation.payoffs())
            .map(|(claim, award)| claim - award)
            .collect();
        assert_eq!(direct.allocation.payoffs(), complement.as_slice());
    }
}

#[test]
fn removing_an_agent_with_her_payoff_preserves_the_rest() {
    let full = ClaimsProblem::from_claims(ints(&[2, 6, 22]), int(15)).unwrap();
    let solved = cea(&full).unwrap();
    assert_eq!(solved.allocation.payoffs(), ints(&[2, 6, 7]).as_slice());

    let leaver_payoff = solved.allocation.get(2).unwrap().clone();
    let reduced = full.restrict(&[1, 3], int(15) - leaver_payoff).unwrap();
    let solved = cea(&reduced).unwrap();
    assert_eq!(solved.allocation.agents(), &[1, 3]);
    assert_eq!(solved.allocation.payoffs(), ints(&[2, 7]).as_slice());
}

#[test]
fn table_based_peak_problems_use_the_literal_blocking_scan() {
    // Peaks 2, 4, 5; pair endowments overshoot some pair claims.
    let table = [
        (vec![1], int(0)),
        (vec![2], int(0)),
        (vec![3], int(0)),
        (vec![1, 2], int(7)),
        (vec![1, 3], int(6)),
        (vec![2, 3], int(11)),
        (vec![1, 2, 3], int(21)),
    ];
    let entries: Vec<(Coalition, Rational)> = table
        .into_iter()
        .map(|(ids, value)| (c(&ids), value))
        .collect();
    let problem = SinglePeakedProblem::with_table(ints(&[2, 4, 5]), entries).unwrap();
    let eval = SpEvaluator::new(&problem, SpVariant::Uniform, SpComparison::Distance);
    let limits = SearchLimits::new();

    // {1,3} splits 6 as (2,4); agent 2 alone sits at 0. Agents 2 and 3
    // both get closer to their peaks by pooling into {2,3} at 11/2 each.
    let split = part(&[&[1, 3], &[2]], 3);
    let blocker = sp_find_blocking(&eval, &split, &limits).unwrap();
    assert_eq!(blocker, Some(c(&[2, 3])));
}
