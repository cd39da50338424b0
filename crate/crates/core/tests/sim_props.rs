use proptest::prelude::*;
use tierbid_core::coop::WeightPolicy;
use tierbid_core::sim::{
    generate_workload, run_episode, strategy_payoff_experiment, Mode, PopulationEntry, Strategy, TargetSpec,
    WorkloadSpec,
};
use tierbid_core::{Bandwidth, EngineConfig, Money, NetworkNode, ServiceCatalog, ServiceClass, ServiceId, Topology};

fn topology() -> Topology {
    Topology::build(vec![
        NetworkNode::new("wide", 1, Bandwidth::from_units(6), None),
        NetworkNode::new("mid", 2, Bandwidth::from_units(3), Some("wide")),
        NetworkNode::new("a", 3, Bandwidth::from_units(2), Some("mid")),
        NetworkNode::new("b", 3, Bandwidth::from_units(2), Some("mid")),
    ])
    .unwrap()
}

fn catalog() -> ServiceCatalog {
    ServiceCatalog::new(vec![
        ServiceClass::new("small", Bandwidth::from_units(1)),
        ServiceClass::new("big", Bandwidth::from_units(2)),
    ])
    .unwrap()
}

fn entry(service: &str, class: &str, count: usize, strategy: Strategy) -> PopulationEntry {
    PopulationEntry { service: ServiceId::new(service), class: class.into(), count, networks: None, strategy }
}

fn workload(seed: u64, per_slot: bool) -> WorkloadSpec {
    let population = vec![
        entry("small", "low", 3, Strategy::Truthful),
        entry("small", "high", 2, Strategy::Shade),
        entry("big", "medium", 3, Strategy::Aggressive),
    ];
    WorkloadSpec { per_slot_values: per_slot, ..WorkloadSpec::new(20, population, seed) }
}

fn modes() -> impl proptest::strategy::Strategy<Value = Mode> {
    prop_oneof![
        Just(Mode::Auction),
        Just(Mode::Multicast { thresholds: vec![2] }),
        Just(Mode::Cooperative { policy: WeightPolicy::RoundRobin }),
        Just(Mode::Cooperative { policy: WeightPolicy::Fcfs }),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(60))]

    #[test]
    fn episodes_are_consistent(seed in any::<u64>(), per_slot in any::<bool>(), mode in modes()) {
        let (t, c) = (topology(), catalog());
        let spec = workload(seed, per_slot);
        let agents = generate_workload(&spec, &t, &c).unwrap();
        let m = run_episode(&t, &agents, &mode, &spec, EngineConfig::default()).unwrap();
        prop_assert_eq!(m.agents.len(), agents.len());
        for (a, am) in agents.iter().zip(&m.agents) {
            prop_assert!(a.start >= 1 && a.start + a.duration - 1 <= spec.horizon);
            prop_assert_eq!(am.history.len(), a.duration as usize);
            for (k, r) in am.history.iter().enumerate() {
                prop_assert_eq!(r.slot, a.start + k as u32);
                if let Some(n) = r.node {
                    prop_assert!(a.path.contains(&n));
                } else {
                    prop_assert!(r.charge.is_zero());
                }
                if a.strategy == Strategy::Truthful {
                    prop_assert!(r.charge <= r.value);
                }
            }
            prop_assert_eq!(am.served_slots as usize, am.history.iter().filter(|r| r.node.is_some()).count());
            prop_assert!(am.handoffs <= am.served_slots.saturating_sub(1));
            prop_assert_eq!(am.payoff, am.payoff_from_history());
            prop_assert_eq!(am.total_charge, am.history.iter().map(|r| r.charge).sum::<Money>());
            prop_assert!((0.0..=1.0).contains(&am.completion()));
        }
        for row in &m.networks {
            prop_assert!(row.served <= row.supply);
            prop_assert!(row.supply.raw() >= 1);
        }
        prop_assert_eq!(m.revenue(), m.agents.iter().map(|a| a.total_charge).sum::<Money>());
        if matches!(mode, Mode::Cooperative { .. }) {
            prop_assert_eq!(m.revenue(), Money::ZERO);
        }
    }

    #[test]
    fn episodes_are_reproducible(seed in any::<u64>(), mode in modes()) {
        let (t, c) = (topology(), catalog());
        let spec = workload(seed, true);
        let a = generate_workload(&spec, &t, &c).unwrap();
        let b = generate_workload(&spec, &t, &c).unwrap();
        prop_assert_eq!(&a, &b);
        let seq = EngineConfig { parallel: false, ..EngineConfig::default() };
        let x = run_episode(&t, &a, &mode, &spec, EngineConfig::default()).unwrap();
        let y = run_episode(&t, &b, &mode, &spec, seq).unwrap();
        prop_assert_eq!(x, y);
    }

    #[test]
    fn arrival_order_follows_start_slots(seed in any::<u64>()) {
        let agents = generate_workload(&workload(seed, false), &topology(), &catalog()).unwrap();
        let mut seqs: Vec<u64> = agents.iter().map(|a| a.arrival_seq).collect();
        seqs.sort_unstable();
        prop_assert_eq!(seqs, (0..agents.len() as u64).collect::<Vec<_>>());
        for a in &agents {
            for b in &agents {
                if a.start < b.start {
                    prop_assert!(a.arrival_seq < b.arrival_seq);
                }
            }
        }
    }
}

#[test]
fn zero_fluctuation_keeps_nominal_capacities() {
    let (t, c) = (topology(), catalog());
    let spec = WorkloadSpec { capacity_fluctuation: 0.0, ..workload(4, false) };
    let agents = generate_workload(&spec, &t, &c).unwrap();
    let m = run_episode(&t, &agents, &Mode::Auction, &spec, EngineConfig::default()).unwrap();
    for row in &m.networks {
        assert_eq!(row.supply, t.node(row.node).capacity);
    }
}

#[test]
fn an_empty_population_is_rejected() {
    let spec = WorkloadSpec::new(10, Vec::new(), 0);
    assert!(generate_workload(&spec, &topology(), &catalog()).is_err());
}

#[test]
fn strategy_arms_share_their_rivals() {
    let (t, c) = (topology(), catalog());
    let target = TargetSpec { network: None, service: ServiceId::new("small"), class: "medium".into() };
    let report = strategy_payoff_experiment(&t, &c, &workload(9, true), &Mode::Auction, &target, 6, EngineConfig::default()).unwrap();
    assert_eq!(report.replications, 6);
    assert_eq!(report.arms.len(), 3);
    let truthful = report.arm(Strategy::Truthful);
    assert_eq!(truthful.truthful_advantage, 0.0);
    assert_eq!(truthful.advantage_std_error, 0.0);
    for arm in &report.arms {
        assert_eq!(arm.payoffs.len(), 6);
    }
    let again = strategy_payoff_experiment(&t, &c, &workload(9, true), &Mode::Auction, &target, 6, EngineConfig::default()).unwrap();
    assert_eq!(report, again);
}
