use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tierbid_core::auction::Claimant;
use tierbid_core::instances::{Instance, InstanceFamily};
use tierbid_core::multicast::run_multicast_auction;
use tierbid_core::{run_hierarchical_auction, EngineConfig, Money};

fn instance(seed: u64, heterogeneous: bool) -> Instance {
    let base = if heterogeneous { InstanceFamily::heterogeneous(30) } else { InstanceFamily::equal_rate(30) };
    let family = InstanceFamily { services_per_rate: 2, willingness: (1, 40), ..base };
    family.generate(&mut ChaCha8Rng::seed_from_u64(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn groups_are_well_formed(seed in any::<u64>(), het in any::<bool>(), n in 1usize..5) {
        let inst = instance(seed, het);
        let out = run_multicast_auction(&inst.topology, &inst.book, &[n], EngineConfig::default()).unwrap();
        let bids = inst.book.bids();
        for g in &out.groups {
            prop_assert!(g.members.len() >= n.max(2));
            let best = g.members.iter().map(|m| bids[*m].bid.price).max().unwrap();
            prop_assert!(g.price >= best);
            for m in &g.members {
                prop_assert_eq!(&bids[*m].bid.service_id, &g.service_id);
                prop_assert_eq!(bids[*m].bid.rate, g.rate);
                prop_assert!(bids[*m].path.contains(&g.node));
            }
        }
        prop_assert!(out.check_invariants(&inst.book).is_ok());
    }

    #[test]
    fn group_charges_split_exactly(seed in any::<u64>(), het in any::<bool>()) {
        let inst = instance(seed, het);
        let out = run_multicast_auction(&inst.topology, &inst.book, &[2], EngineConfig::default()).unwrap();
        for s in &out.networks {
            for w in &s.winners {
                let Claimant::Group(g) = w.claimant else { continue };
                let group = &out.groups[g];
                prop_assert!(group.won);
                let shares: Money = group.members.iter().map(|m| out.assignments[*m].charge).sum();
                prop_assert_eq!(shares, s.charges[&group.rate]);
                for m in &group.members {
                    prop_assert_eq!(out.assignments[*m].node, Some(s.node));
                    prop_assert_eq!(out.assignments[*m].group, Some(g));
                }
            }
        }
    }

    #[test]
    fn unreachable_thresholds_reduce_to_unicast(seed in any::<u64>(), het in any::<bool>()) {
        let inst = instance(seed, het);
        let multi = run_multicast_auction(&inst.topology, &inst.book, &[1000], EngineConfig::default()).unwrap();
        let uni = run_hierarchical_auction(&inst.topology, &inst.book, EngineConfig::default()).unwrap();
        prop_assert!(multi.groups.is_empty());
        prop_assert_eq!(multi.assignments, uni.assignments);
        prop_assert_eq!(multi.revenue, uni.revenue);
    }

    #[test]
    fn multicast_is_deterministic_across_schedulers(seed in any::<u64>()) {
        let inst = instance(seed, true);
        let par = EngineConfig { parallel: true, ..EngineConfig::default() };
        let seq = EngineConfig { parallel: false, ..EngineConfig::default() };
        let a = run_multicast_auction(&inst.topology, &inst.book, &[2, 3], par).unwrap();
        let b = run_multicast_auction(&inst.topology, &inst.book, &[2, 3], seq).unwrap();
        prop_assert_eq!(a, b);
    }
}

#[test]
fn zero_threshold_is_rejected() {
    let inst = instance(1, false);
    assert!(run_multicast_auction(&inst.topology, &inst.book, &[0], EngineConfig::default()).is_err());
}
