use proptest::prelude::*;
use tierbid_cli::scenario::{ModeKind, MulticastSection, ScenarioSpec, MAX_SEED};
use tierbid_core::coop::WeightPolicy;
use tierbid_core::sim::{PopulationEntry, Strategy as Bidding, WorkloadSpec};
use tierbid_core::{Bandwidth, Money, NetworkNode, ServiceClass, WinnerRule};

fn spec(seed: u64, mode: ModeKind, prefix: bool, horizon: u32, counts: Vec<usize>, fluct: f64, bonus: i64) -> ScenarioSpec {
    let services = vec![ServiceClass::new("FTP", Bandwidth::from_units(1)), ServiceClass::new("VID", Bandwidth::from_units(4))];
    let population = counts
        .iter()
        .enumerate()
        .map(|(i, c)| PopulationEntry {
            service: services[i % 2].id.clone(),
            class: ["low", "medium", "high"][i % 3].into(),
            count: *c,
            networks: None,
            strategy: [Bidding::Truthful, Bidding::Shade, Bidding::Aggressive][i % 3],
        })
        .collect();
    let mut engine = tierbid_cli::scenario::EngineSection::default();
    if prefix {
        engine.winner_rule = WinnerRule::Prefix;
    }
    ScenarioSpec {
        currency_scale: 6,
        bandwidth_scale: 3,
        seed,
        mode,
        engine,
        multicast: MulticastSection { thresholds: vec![2, 3] },
        cooperative: (mode == ModeKind::Cooperative).then_some(WeightPolicy::RoundRobin),
        strategy: None,
        output: None,
        manifest: None,
        networks: vec![
            NetworkNode::new("root", 1, Bandwidth::from_units(20), None),
            NetworkNode::new("leaf", 2, Bandwidth::from_units(5), Some("root")),
        ],
        services,
        workload: WorkloadSpec {
            capacity_fluctuation: fluct,
            continuation_bonus: Money::from_raw(bonus),
            ..WorkloadSpec::new(horizon, population, 0)
        },
    }
}

fn modes() -> impl Strategy<Value = ModeKind> {
    prop_oneof![Just(ModeKind::Auction), Just(ModeKind::Multicast), Just(ModeKind::Cooperative)]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn scenarios_survive_emit_and_parse(
        seed in 0..=MAX_SEED,
        mode in modes(),
        prefix in any::<bool>(),
        horizon in 1u32..1000,
        counts in proptest::collection::vec(1usize..50, 1..5),
        fluct in 0.0f64..0.5,
        bonus in 0i64..10_000_000,
    ) {
        let s = spec(seed, mode, prefix, horizon, counts, fluct, bonus);
        let parsed = ScenarioSpec::parse(&s.emit()).unwrap();
        prop_assert_eq!(&parsed, &s);
        prop_assert_eq!(parsed.config_hash(), s.config_hash());
        let r = parsed.resolve().unwrap();
        prop_assert_eq!(r.workload.seed, seed);
        prop_assert_eq!(r.config.winner_rule, if prefix { WinnerRule::Prefix } else { WinnerRule::SkipGreedy });
    }

    #[test]
    fn the_hash_tracks_the_experiment(seed in 0..MAX_SEED, horizon in 1u32..1000) {
        let a = spec(seed, ModeKind::Auction, false, horizon, vec![3], 0.2, 0);
        let b = spec(seed.wrapping_add(1), ModeKind::Auction, false, horizon, vec![3], 0.2, 0);
        let c = spec(seed, ModeKind::Auction, false, horizon, vec![4], 0.2, 0);
        prop_assert_ne!(a.config_hash(), b.config_hash());
        prop_assert_ne!(a.config_hash(), c.config_hash());
    }
}

#[test]
fn an_empty_population_is_a_workload_error() {
    let s = spec(0, ModeKind::Auction, false, 10, vec![], 0.2, 0);
    let err = ScenarioSpec::parse(&s.emit()).unwrap().resolve().unwrap_err();
    assert_eq!(err.exit_code(), 1);
    assert!(err.to_string().starts_with("[workload]"), "{err}");
}

#[test]
fn seeds_beyond_the_toml_range_are_rejected() {
    let s = spec(MAX_SEED + 1, ModeKind::Auction, false, 10, vec![2], 0.2, 0);
    assert!(s.resolve().unwrap_err().to_string().contains("seed"));
}

#[test]
fn unknown_keys_are_rejected() {
    let s = spec(0, ModeKind::Auction, false, 10, vec![2], 0.2, 0);
    let text = format!("surprise = 1\n{}", s.emit());
    assert!(ScenarioSpec::parse(&text).is_err());
}

#[test]
fn the_shipped_scenarios_resolve() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios");
    for name in ["completion-handoffs.toml", "revenue-welfare.toml", "strategy.toml", "round-robin.toml"] {
        let s = ScenarioSpec::load(&dir.join(name)).unwrap();
        s.resolve().unwrap_or_else(|e| panic!("{name}: {e}"));
    }
}
