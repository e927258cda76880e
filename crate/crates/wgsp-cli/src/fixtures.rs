//! Built-in reference scenarios: a four-advertiser, three-slot keyword
//! auction with explicitly tabulated click-through rates, evaluated under
//! three scoring profiles. The third profile shows the engine earning more
//! revenue with scores that deliberately misstate relative ad quality.

use std::collections::BTreeMap;

use wgsp::auction::{settle, surplus_report, AuctionInstance, BidProfile, ScoringProfile, TieRule};
use wgsp::ctr::{CtrModel, TableCtr};
use wgsp::equilibrium::is_nash_equilibrium;

/// Rates for the three tabulated advertisers under each of their six
/// relative orders; the fourth advertiser never attracts clicks.
pub fn fixture_ctr() -> CtrModel<f64> {
    let entries: BTreeMap<Vec<usize>, Vec<f64>> = [
        (vec![1, 2, 3], vec![70.0, 30.0, 20.0]),
        (vec![1, 3, 2], vec![80.0, 15.0, 30.0]),
        (vec![2, 1, 3], vec![50.0, 50.0, 20.0]),
        (vec![2, 3, 1], vec![70.0, 30.0, 35.0]),
        (vec![3, 1, 2], vec![40.0, 60.0, 30.0]),
        (vec![3, 2, 1], vec![50.0, 50.0, 35.0]),
    ]
    .into_iter()
    .collect();
    CtrModel::Table(TableCtr::new(vec![0, 1, 2], entries).expect("valid table"))
}

pub fn fixture_instance() -> AuctionInstance<f64> {
    AuctionInstance::new(vec![0.10, 0.10, 0.10, 0.07], 3, 0.0, fixture_ctr()).expect("valid")
}

/// One scoring scenario with its expected settlement.
pub struct Scenario {
    pub name: &'static str,
    pub scores: Vec<f64>,
    pub bids: Vec<f64>,
    pub expected_rank_of: Vec<usize>,
    pub expected_prices: Vec<f64>,
    pub expected_clicks: Vec<f64>,
    pub expected_surplus: Vec<f64>,
    pub expected_revenue_share: Vec<f64>,
    pub expected_revenue: f64,
}

pub fn scenarios() -> Vec<Scenario> {
    vec![
        Scenario {
            name: "scenario-1",
            scores: vec![70.0, 30.0, 20.0, 20.0],
            bids: vec![0.05, 0.07, 0.10, 0.07],
            expected_rank_of: vec![1, 2, 3, 4],
            expected_prices: vec![0.03, 0.0667, 0.07, 0.0],
            expected_clicks: vec![70.0, 30.0, 20.0, 0.0],
            expected_surplus: vec![4.9, 1.0, 0.6, 0.0],
            expected_revenue_share: vec![2.1, 2.0, 1.4, 0.0],
            expected_revenue: 5.5,
        },
        Scenario {
            name: "scenario-2",
            scores: vec![50.0, 50.0, 20.0, 20.0],
            bids: vec![0.05, 0.07, 0.10, 0.07],
            expected_rank_of: vec![2, 1, 3, 4],
            expected_prices: vec![0.04, 0.05, 0.07, 0.0],
            expected_clicks: vec![50.0, 50.0, 20.0, 0.0],
            expected_surplus: vec![3.0, 2.5, 0.6, 0.0],
            expected_revenue_share: vec![2.0, 2.5, 1.4, 0.0],
            expected_revenue: 5.9,
        },
        Scenario {
            // The second advertiser's lowered score raises its bid without
            // raising its price, and lifts revenue above both other
            // profiles. Its price is 2.5/40 = 0.0625, consistent with the
            // surplus (0.10 - 0.0625)*50 = 1.875 and revenue 0.0625*50 =
            // 3.125 columns.
            name: "scenario-3",
            scores: vec![50.0, 40.0, 20.0, 20.0],
            bids: vec![0.05, 0.08, 0.10, 0.07],
            expected_rank_of: vec![2, 1, 3, 4],
            expected_prices: vec![0.04, 0.0625, 0.07, 0.0],
            expected_clicks: vec![50.0, 50.0, 20.0, 0.0],
            expected_surplus: vec![3.0, 1.875, 0.6, 0.0],
            expected_revenue_share: vec![2.0, 3.125, 1.4, 0.0],
            expected_revenue: 6.525,
        },
    ]
}

/// Outcome of re-deriving every scenario cell from the auction rules.
pub struct FixtureReport {
    pub mismatches: Vec<String>,
    pub revenues: Vec<f64>,
    pub all_equilibria: bool,
}

impl FixtureReport {
    pub fn passed(&self) -> bool {
        self.mismatches.is_empty() && self.all_equilibria
    }
}

const CELL_TOL: f64 = 5e-5; // printed cells carry four decimals

fn check_cell(mismatches: &mut Vec<String>, scenario: &str, what: &str, got: f64, want: f64) {
    if (got - want).abs() > CELL_TOL {
        mismatches.push(format!("{scenario}: {what}: got {got:.6}, expected {want:.4}"));
    }
}

/// Settle each scenario and compare every derived cell — ranking, prices,
/// clicks, surpluses, revenue shares, total revenue, equilibrium status —
/// against the expected table, plus the strict revenue ordering across the
/// three scenarios.
pub fn validate_motivating_example() -> FixtureReport {
    let instance = fixture_instance();
    let mut mismatches = Vec::new();
    let mut revenues = Vec::new();
    let mut all_equilibria = true;

    for scenario in scenarios() {
        let scores = ScoringProfile::new(scenario.scores.clone()).expect("valid scores");
        let bids = BidProfile::new(scenario.bids.clone()).expect("valid bids");
        let outcome = settle(&bids, &scores, &instance, &TieRule::AdvertiserIndex)
            .expect("fixture settles");
        let report = surplus_report(&outcome, instance.values());

        if outcome.permutation.rank_vector() != scenario.expected_rank_of {
            mismatches.push(format!(
                "{}: ranking: got {:?}, expected {:?}",
                scenario.name,
                outcome.permutation.rank_vector(),
                scenario.expected_rank_of
            ));
        }
        for i in 0..4 {
            let tag = |what: &str| format!("advertiser {} {what}", i + 1);
            check_cell(&mut mismatches, scenario.name, &tag("price"), outcome.prices[i], scenario.expected_prices[i]);
            check_cell(&mut mismatches, scenario.name, &tag("clicks"), outcome.clicks[i], scenario.expected_clicks[i]);
            check_cell(&mut mismatches, scenario.name, &tag("surplus"), report.per_advertiser[i], scenario.expected_surplus[i]);
            check_cell(
                &mut mismatches,
                scenario.name,
                &tag("revenue share"),
                outcome.prices[i] * outcome.clicks[i],
                scenario.expected_revenue_share[i],
            );
        }
        check_cell(&mut mismatches, scenario.name, "total revenue", report.search_engine, scenario.expected_revenue);
        revenues.push(report.search_engine);

        match is_nash_equilibrium(&bids, &scores, &instance, &TieRule::AdvertiserIndex, 1e-9) {
            Ok((true, _)) => {}
            Ok((false, deviations)) => {
                all_equilibria = false;
                for d in deviations {
                    mismatches.push(format!(
                        "{}: profitable deviation: advertiser {} to rank {} gains {:.4}",
                        scenario.name,
                        d.advertiser + 1,
                        d.target_rank,
                        d.gain
                    ));
                }
            }
            Err(e) => {
                all_equilibria = false;
                mismatches.push(format!("{}: equilibrium check failed: {e}", scenario.name));
            }
        }
    }

    if !(revenues[0] < revenues[1] && revenues[1] < revenues[2]) {
        mismatches.push(format!(
            "revenues not strictly increasing across scenarios: {revenues:?}"
        ));
    }
    FixtureReport { mismatches, revenues, all_equilibria }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn all_scenarios_reproduce_and_are_equilibria() {
        let report = validate_motivating_example();
        assert!(report.passed(), "mismatches: {:#?}", report.mismatches);
        assert_relative_eq!(report.revenues[0], 5.5, max_relative = 1e-9);
        assert_relative_eq!(report.revenues[1], 5.9, max_relative = 1e-9);
        assert_relative_eq!(report.revenues[2], 6.525, max_relative = 1e-9);
    }

    #[test]
    fn raising_a_value_breaks_the_equilibrium() {
        // with the second advertiser's value at 0.20, jumping to the top
        // slot pays 3.5/30 for 50 clicks: surplus 4.1667 beats 4.0
        let instance =
            AuctionInstance::new(vec![0.10, 0.20, 0.10, 0.07], 3, 0.0, fixture_ctr()).unwrap();
        let scenario = &scenarios()[0];
        let scores = ScoringProfile::new(scenario.scores.clone()).unwrap();
        let bids = BidProfile::new(scenario.bids.clone()).unwrap();
        let (ne, deviations) =
            is_nash_equilibrium(&bids, &scores, &instance, &TieRule::AdvertiserIndex, 1e-9)
                .unwrap();
        assert!(!ne);
        assert_eq!(deviations.len(), 1);
        assert_eq!(deviations[0].advertiser, 1);
        assert_eq!(deviations[0].target_rank, 1);
        assert_relative_eq!(deviations[0].gain, 1.0 / 6.0, max_relative = 1e-9);
    }

    #[test]
    fn deviation_rates_follow_the_table() {
        // moving the top advertiser down one slot re-ranks to the column
        // where it collects 50 clicks
        let instance = fixture_instance();
        let sigma = wgsp::Permutation::from_rank_of(vec![1, 2, 3, 4]).unwrap();
        let moved = sigma.deviation(0, 2).unwrap();
        assert_eq!(moved.rank_vector(), &[2, 1, 3, 4]);
        assert_eq!(instance.click_rate(0, &moved).unwrap(), 50.0);
    }
}
