use trustweave::bounds::misclassification_bound;
use trustweave::error::Error;
use trustweave::graph::{build_nominal_weights, check_primitive};
use trustweave::harness::{
    build_platoon_scenario, compare_with_window_baseline, run_ensemble, simulate_classification, sweep,
    validate_bounds, GraphSpec, PlatoonConfig, Scenario,
};
use trustweave::protocol::{run_protocol, AdversaryStrategy, ConfidenceSchedule, RunOptions};
use trustweave::trust::{TrustDist, TrustModel};

fn platoon() -> Scenario {
    build_platoon_scenario(&PlatoonConfig::default()).unwrap()
}

fn certain_trust() -> TrustModel {
    TrustModel { legit: TrustDist::Point(0.9), malicious: TrustDist::Point(0.1) }
}

/// Perron vector of a nominal matrix over an undirected graph: the chain is
/// reversible, so `v_i` is proportional to `|N_i| + 1`.
fn reversible_perron(s: &Scenario) -> Vec<f64> {
    let w: Vec<f64> = s
        .graph
        .legitimate()
        .iter()
        .map(|&i| (s.graph.in_neighbors(i).iter().filter(|&&j| !s.graph.is_malicious(j)).count() + 1) as f64)
        .collect();
    let total: f64 = w.iter().sum();
    w.iter().map(|x| x / total).collect()
}

#[test]
fn platoon_shape() {
    let s = platoon();
    assert_eq!(s.graph.agent_count(), 13);
    assert_eq!(s.graph.legit_count(), 10);
    assert_eq!(s.graph.malicious_count(), 3);
    let stats = s.graph.degree_stats();
    assert_eq!((stats.d_max, stats.malicious_links, stats.legit_links), (5, 6, 34));
    assert_eq!(stats.malicious_weight_cap, 0.5);
    assert!(check_primitive(&build_nominal_weights(&s.graph).unwrap()));
}

#[test]
fn platoon_nominal_rows_by_hand() {
    let w = build_nominal_weights(&platoon().graph).unwrap();
    // A1 hears A2, A3, B1, B2
    assert_eq!(w.row(0), &[0.2, 0.2, 0.2, 0.0, 0.0, 0.2, 0.2, 0.0, 0.0, 0.0]);
    // A5 hears A3, A4
    let third = 1.0 / 3.0;
    assert_eq!(w.row(4), &[0.0, 0.0, third, third, third, 0.0, 0.0, 0.0, 0.0, 0.0]);
    // B3 hears B1, B2, B4, B5
    assert_eq!(w.row(7), &[0.0, 0.0, 0.0, 0.0, 0.0, 0.2, 0.2, 0.2, 0.2, 0.2]);
    for i in 0..10 {
        assert!((0.2..=third).contains(&w.get(i, i)));
        assert!((w.row(i).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}

#[test]
fn platoon_nominal_consensus_matches_perron_oracle() {
    for (a, b) in [(20.0, 30.0), (12.0, 47.5)] {
        let s = build_platoon_scenario(&PlatoonConfig { speed_a: a, speed_b: b, ..Default::default() }).unwrap();
        let oracle: f64 = reversible_perron(&s).iter().zip(&s.x0).map(|(v, x)| v * x).sum();
        assert!((s.nominal_consensus().unwrap() - oracle).abs() < 1e-9);
    }
}

#[test]
fn platoon_overrides_are_checked() {
    let broken = PlatoonConfig { cross_links: vec![], ..Default::default() };
    assert!(matches!(build_platoon_scenario(&broken), Err(Error::Scenario(_))));
    let bad_target = PlatoonConfig { attackers: vec![vec![11]], ..Default::default() };
    assert!(matches!(build_platoon_scenario(&bad_target), Err(Error::Scenario(_))));
    let too_fast = PlatoonConfig { speed_b: 70.0, ..Default::default() };
    assert!(matches!(build_platoon_scenario(&too_fast), Err(Error::Scenario(_))));
    let loud = PlatoonConfig { adversary: AdversaryStrategy::Constant { value: 61.0 }, ..Default::default() };
    assert!(matches!(build_platoon_scenario(&loud), Err(Error::Scenario(_))));
    let quiet = build_platoon_scenario(&PlatoonConfig { attackers: vec![], ..Default::default() }).unwrap();
    assert_eq!(quiet.graph.malicious_count(), 0);
}

#[test]
fn graph_spec_is_one_based() {
    let spec: GraphSpec =
        serde_json::from_str(r#"{"agents": 3, "malicious": [3], "edges": [[1, 2], [2, 1], [3, 1]]}"#).unwrap();
    let g = spec.to_graph().unwrap();
    assert_eq!(g.in_neighbors(0), &[1, 2]);
    assert_eq!(g.in_neighbors(1), &[0]);
    assert!(g.is_malicious(2));
    let bad = GraphSpec { agents: 2, malicious: vec![], edges: vec![[0, 1]] };
    assert!(matches!(bad.to_graph(), Err(Error::Config(_))));
}

#[test]
fn nominal_recovery_without_attackers() {
    let cfg = PlatoonConfig { attackers: vec![], trust: certain_trust(), horizon: 400, ..Default::default() };
    let s = build_platoon_scenario(&cfg).unwrap();
    let r = run_ensemble(&s, &ConfidenceSchedule::Zero, 1, 3).unwrap();
    assert!(*r.mean_deviation.last().unwrap() < 1e-8);
    assert!(r.summary.mean_final_deviation < 1e-8);
    assert_eq!(r.summary.consensus_trials, 1);
}

#[test]
fn ensemble_shapes() {
    let s = Scenario { horizon: 300, ..platoon() };
    let r = run_ensemble(&s, &ConfidenceSchedule::exponential(0.9, 0.05).unwrap(), 7, 1).unwrap();
    assert_eq!(r.mean_deviation.len(), 301);
    assert_eq!(r.mean_spread.len(), 301);
    assert_eq!(r.per_trial.len(), 7);
    assert!(r.per_trial.iter().enumerate().all(|(k, t)| t.trial == k as u64));
    assert!(matches!(run_ensemble(&s, &ConfidenceSchedule::Zero, 0, 1), Err(Error::Config(_))));
}

#[test]
fn ensemble_is_reproducible_across_thread_counts() {
    let s = Scenario { horizon: 300, ..platoon() };
    let schedule = ConfidenceSchedule::exponential(0.9, 0.05).unwrap();
    let run = |threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| serde_json::to_string(&run_ensemble(&s, &schedule, 12, 42).unwrap()).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(4));
    assert_eq!(one, run(1));
}

#[test]
fn classification_only_runs_share_protocol_streams() {
    let s = Scenario { horizon: 400, ..platoon() };
    let ens = simulate_classification(&s.graph, &s.trust, s.horizon, 5, 9, &[]).unwrap();
    for (trial, record) in ens.records.iter().enumerate() {
        let opts = RunOptions { horizon: s.horizon, master_seed: 9, trial: trial as u64, record_weights: false };
        let traj = run_protocol(&s.graph, &s.trust, &ConfidenceSchedule::Zero, &s.adversary, &s.x0, &opts).unwrap();
        assert_eq!(&traj.classification, record);
    }
}

#[test]
fn misclassification_frequencies_respect_hoeffding() {
    let s = platoon();
    let ens = simulate_classification(&s.graph, &s.trust, 51, 2000, 17, &[0, 5, 10, 50]).unwrap();
    for c in &ens.checkpoints {
        for (rate, total, gap) in
            [(c.legit_rate(), c.legit_total, s.trust.e_l()), (c.malicious_rate(), c.malicious_total, s.trust.e_m())]
        {
            let p = misclassification_bound(gap, c.t);
            let margin = 3.0 * (p * (1.0 - p) / total as f64).sqrt();
            assert!(rate <= p + margin, "t={} rate={rate} bound={p}", c.t);
        }
    }
    assert_eq!(ens.checkpoints[0].legit_total, 2000 * 34);
}

#[test]
fn malicious_classification_pmf_below_union_bound() {
    let s = platoon();
    let trials = 2000;
    let ens = simulate_classification(&s.graph, &s.trust, 1500, trials, 23, &[]).unwrap();
    let e2 = 2.0 * s.trust.e_m().powi(2);
    for k in 1..=50 {
        let hits = ens.records.iter().filter(|r| !r.censored_m && r.t_f_m == k).count();
        let freq = hits as f64 / trials as f64;
        let bound = (6.0 * (-e2 * k as f64).exp()).min(1.0);
        let margin = 3.0 * (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!(freq <= bound + margin, "k={k}");
    }
}

#[test]
fn gamma_sweep_orders_deviation_and_speed() {
    let s = platoon();
    let schedules: Vec<_> =
        [0.01, 0.05, 0.2, 1.0].iter().map(|&g| ConfidenceSchedule::exponential(0.9, g).unwrap()).collect();
    let reports = sweep(&s, &schedules, 60, 2024).unwrap();
    for w in reports.windows(2) {
        assert!(w[0].summary.mean_final_deviation <= w[1].summary.mean_final_deviation);
        assert!(w[0].summary.mean_time_to_consensus.unwrap() >= w[1].summary.mean_time_to_consensus.unwrap());
    }
}

#[test]
fn window_after_classification_recovers_nominal_consensus() {
    let s = Scenario { horizon: 1200, ..platoon() };
    let cmp = compare_with_window_baseline(&s, 0.9, 0.05, 700, 20, 8).unwrap();
    assert!(cmp.window.per_trial.iter().all(|t| t.t_f <= 700), "pick a later window");
    for t in &cmp.window.per_trial {
        assert!(t.final_deviation < 1e-6 * s.eta);
    }
}

#[test]
fn unprotected_window_loses_to_exponential() {
    let cmp = compare_with_window_baseline(&platoon(), 0.9, 0.05, 0, 60, 31).unwrap();
    assert!(cmp.window.summary.mean_final_deviation >= cmp.exponential.summary.mean_final_deviation);
    assert_eq!(cmp.exponential.per_trial.len(), cmp.window.per_trial.len());
}

#[test]
fn paired_arms_share_classification() {
    let s = Scenario { horizon: 500, ..platoon() };
    let cmp = compare_with_window_baseline(&s, 0.9, 0.05, 50, 10, 4).unwrap();
    for (e, w) in cmp.exponential.per_trial.iter().zip(&cmp.window.per_trial) {
        assert_eq!((e.t_f, e.t_f_m, e.t_f_l), (w.t_f, w.t_f_m, w.t_f_l));
    }
}

#[test]
fn deterministic_trust_has_no_violations() {
    let cfg = PlatoonConfig { trust: certain_trust(), horizon: 600, ..Default::default() };
    let s = build_platoon_scenario(&cfg).unwrap();
    let v = validate_bounds(&s, 0.9, 0.05, 3, 1, 50).unwrap();
    assert!(v.all_ok());
    assert_eq!(v.censored, 0);
    assert_eq!(v.rate_checks, 3 * 600);
}

#[test]
fn platoon_bounds_hold() {
    let v = validate_bounds(&platoon(), 0.9, 0.05, 150, 77, 100).unwrap();
    assert_eq!(v.rate_violations, 0, "worst ratio {}", v.worst_rate_ratio);
    assert_eq!(v.tail_violations, 0);
    assert!(v.deviation_ok);
    assert!(v.rate_checks > 0);
}
