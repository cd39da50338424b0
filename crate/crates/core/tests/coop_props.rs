use std::collections::BTreeMap;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tierbid_core::coop::{run_cooperative_round, true_welfare, CoopFlow, FlowState, WeightPolicy};
use tierbid_core::instances::InstanceFamily;
use tierbid_core::{Bandwidth, EngineConfig, Money, NetworkNode, ServiceCatalog, ServiceClass, ServiceId, Topology, UserFlow};

fn catalog() -> ServiceCatalog {
    ServiceCatalog::new((0..2).map(|k| ServiceClass::new(format!("rate1-{k}"), Bandwidth::from_units(1))).collect()).unwrap()
}

fn policies() -> impl Strategy<Value = WeightPolicy> {
    let table: BTreeMap<ServiceId, f64> = [("rate1-0", 3.0), ("rate1-1", 1.0)].into_iter().map(|(s, w)| (ServiceId::new(s), w)).collect();
    prop_oneof![
        Just(WeightPolicy::StaticService { weights: table.clone() }),
        Just(WeightPolicy::Aging { weights: table, gamma: 0.5 }),
        Just(WeightPolicy::RoundRobin),
        Just(WeightPolicy::Fcfs),
    ]
}

fn coop_instance(seed: u64) -> (Topology, Vec<CoopFlow>) {
    let family = InstanceFamily { services_per_rate: 2, ..InstanceFamily::equal_rate(30) };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let inst = family.generate(&mut rng);
    let flows = inst
        .book
        .bids()
        .iter()
        .map(|pb| CoopFlow {
            flow: UserFlow {
                user_id: pb.bid.user_id.clone(),
                service_id: pb.bid.service_id.clone(),
                willingness: pb.bid.willingness,
                path: inst.topology.ids(&pb.path),
                arrival_seq: pb.bid.arrival_seq,
            },
            state: FlowState {
                service_id: pb.bid.service_id.clone(),
                t_init: rng.gen_range(1..=10),
                cumulative_share: Bandwidth::from_units(rng.gen_range(0..=5)),
                slots_served: rng.gen_range(0..=5),
                now: 10,
            },
        })
        .collect();
    (inst.topology, flows)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn cooperative_rounds_charge_nothing(seed in any::<u64>(), policy in policies()) {
        let (topology, flows) = coop_instance(seed);
        let out = run_cooperative_round(&topology, &catalog(), &flows, &policy, 10, EngineConfig::default()).unwrap();
        prop_assert!(out.assignments.iter().all(|a| a.charge.is_zero()));
        prop_assert_eq!(out.revenue, Money::ZERO);
        prop_assert_eq!(true_welfare(&out), out.social_welfare);
        for s in &out.networks {
            prop_assert!(s.served_rate() <= s.capacity);
        }
    }

    #[test]
    fn round_robin_weight_falls_with_service_received(a in 0i64..1_000_000, b in 0i64..1_000_000) {
        let state = |share: i64| FlowState {
            service_id: ServiceId::new("rate1-0"),
            t_init: 1,
            cumulative_share: Bandwidth::from_raw(share),
            slots_served: 0,
            now: 5,
        };
        let (wa, wb) = (WeightPolicy::RoundRobin.compute_weight(&state(a)).unwrap(), WeightPolicy::RoundRobin.compute_weight(&state(b)).unwrap());
        if a < b {
            prop_assert!(wa >= wb);
        }
    }

    #[test]
    fn fcfs_serves_the_earliest_flows_on_one_network(starts in proptest::collection::vec(1u64..50, 1..12), cap in 1i64..6) {
        let topology = Topology::build(vec![NetworkNode::new("n", 1, Bandwidth::from_units(cap), None)]).unwrap();
        let flows: Vec<CoopFlow> = starts
            .iter()
            .enumerate()
            .map(|(i, t)| CoopFlow {
                flow: UserFlow {
                    user_id: tierbid_core::UserId::new(format!("u{i:02}")),
                    service_id: ServiceId::new("rate1-0"),
                    willingness: Money::from_units(1),
                    path: vec![tierbid_core::NetworkId::new("n")],
                    arrival_seq: i as u64,
                },
                state: FlowState {
                    service_id: ServiceId::new("rate1-0"),
                    t_init: *t,
                    cumulative_share: Bandwidth::ZERO,
                    slots_served: 0,
                    now: 50,
                },
            })
            .collect();
        let out = run_cooperative_round(&topology, &catalog(), &flows, &WeightPolicy::Fcfs, 50, EngineConfig::default()).unwrap();
        let served: Vec<u64> = out.assignments.iter().zip(&starts).filter(|(a, _)| a.node.is_some()).map(|(_, t)| *t).collect();
        let waiting: Vec<u64> = out.assignments.iter().zip(&starts).filter(|(a, _)| a.node.is_none()).map(|(_, t)| *t).collect();
        prop_assert_eq!(served.len(), starts.len().min(cap as usize));
        if let (Some(last), Some(first_waiting)) = (served.iter().max(), waiting.iter().min()) {
            prop_assert!(last <= first_waiting);
        }
    }
}

#[test]
fn weights_before_initiation_are_rejected() {
    let state = FlowState { service_id: ServiceId::new("rate1-0"), t_init: 5, cumulative_share: Bandwidth::ZERO, slots_served: 0, now: 4 };
    assert!(WeightPolicy::Fcfs.compute_weight(&state).is_err());
}

#[test]
fn static_tables_must_cover_the_catalog() {
    let partial: BTreeMap<ServiceId, f64> = [(ServiceId::new("rate1-0"), 1.0)].into_iter().collect();
    assert!(WeightPolicy::StaticService { weights: partial }.validate(&catalog()).is_err());
}
