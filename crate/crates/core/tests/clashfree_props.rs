mod common;

use std::collections::HashSet;

use num_bigint::BigUint;
use proptest::prelude::*;
use sparsepipe::clashfree::*;

fn any_type() -> impl Strategy<Value = CfType> {
    prop_oneof![
        Just(CfType::Type1),
        Just(CfType::Type2),
        Just(CfType::Type3)
    ]
}

/// `(z, depth, d_out)` with `z * depth <= 64` and `d_out <= 8`.
fn spec_shape() -> impl Strategy<Value = (usize, usize, usize)> {
    (1usize..=16).prop_flat_map(|z| (Just(z), 1usize..=(64 / z), 1usize..=8))
}

/// Independent clash and coverage check over the raw neuron sequence.
fn check_schedule(s: &AccessSchedule, z: usize, depth: usize, sweeps: usize) {
    assert_eq!(s.cycles(), depth * sweeps);
    for sweep in 0..sweeps {
        let mut seen = vec![0usize; z * depth];
        for c in sweep * depth..(sweep + 1) * depth {
            let neurons = s.neurons(c);
            assert_eq!(neurons.len(), z);
            let memories: HashSet<usize> = neurons.iter().map(|n| n % z).collect();
            assert_eq!(memories.len(), z, "clash in cycle {c}");
            for n in neurons {
                seen[n] += 1;
            }
        }
        assert!(
            seen.iter().all(|&k| k == 1),
            "sweep {sweep} coverage {seen:?}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn random_specs_are_clash_free(
        (z, depth, d_out) in spec_shape(),
        cf in any_type(),
        dither in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let spec = generate_spec(z * depth, d_out, z, cf, dither, seed).unwrap();
        let s = address_schedule(&spec);
        prop_assert!(verify_clash_free(&s).is_ok());
        check_schedule(&s, z, depth, d_out);
    }
}

proptest! {
    #[test]
    fn type1_schedules_have_period_depth(
        (z, depth, d_out) in spec_shape(),
        dither in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let spec = generate_spec(z * depth, d_out, z, CfType::Type1, dither, seed).unwrap();
        let s = address_schedule(&spec);
        for c in 0..s.cycles() - depth {
            prop_assert_eq!(s.neurons(c), s.neurons(c + depth));
        }
    }

    #[test]
    fn spec_text_round_trip(
        (z, depth, d_out) in spec_shape(),
        cf in any_type(),
        dither in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let spec = generate_spec(z * depth, d_out, z, cf, dither, seed).unwrap();
        prop_assert_eq!(ClashFreeSpec::from_text(&spec.to_text()).unwrap(), spec);
    }

    #[test]
    fn generated_patterns_are_regular(
        (z, depth) in (1usize..=8).prop_flat_map(|z| (Just(z), 1usize..=6)),
        n_right in 1usize..=24,
        d_out_pick in any::<prop::sample::Index>(),
        cf in any_type(),
        dither in any::<bool>(),
        seed in any::<u64>(),
    ) {
        let n_left = z * depth;
        let feasible: Vec<usize> = (1..=n_right).filter(|d| (n_left * d) % n_right == 0).collect();
        prop_assume!(!feasible.is_empty());
        let d_out = feasible[d_out_pick.index(feasible.len())];
        let d_in = n_left * d_out / n_right;
        match generate_connection_pattern(n_left, n_right, d_out, z, cf, dither, seed) {
            Ok((_, p)) => {
                prop_assert_eq!(p.edge_count(), n_left * d_out);
                prop_assert!(p.out_degrees().iter().all(|&d| d == d_out));
                for r in 0..n_right {
                    let row: HashSet<_> = p.row(r).iter().collect();
                    prop_assert_eq!(row.len(), d_in);
                }
            }
            // a right neuron may wrap around to a left neuron it already reads
            Err(sparsepipe::Error::Spec(_)) => {}
            Err(e) => return Err(TestCaseError::fail(e.to_string())),
        }
    }
}

#[test]
fn distinct_specs_give_distinct_patterns_when_z_covers_d_in() {
    // every type 1 seed vector, with and without a fixed dither, for small banks
    for depth in 2..=3usize {
        for z in 1..=4usize {
            let n_left = z * depth;
            for d_in in (1..=z).filter(|d| z % d == 0) {
                // one sweep, right layer sized so that d_out = 1
                let n_right = n_left / d_in;
                let mut seen = HashSet::new();
                let mut total = 0;
                let mut phi = vec![0usize; z];
                loop {
                    let spec =
                        ClashFreeSpec::new(z, depth, 1, Seeds::Type1(phi.clone()), None).unwrap();
                    let p = to_connection_pattern(&spec, d_in, n_right).unwrap();
                    let mut rows: Vec<Vec<u32>> = p
                        .rows()
                        .map(|r| {
                            let mut r = r.to_vec();
                            r.sort_unstable();
                            r
                        })
                        .collect();
                    rows.shrink_to_fit();
                    seen.insert(rows);
                    total += 1;
                    let mut i = 0;
                    while i < z {
                        phi[i] += 1;
                        if phi[i] < depth {
                            break;
                        }
                        phi[i] = 0;
                        i += 1;
                    }
                    if i == z {
                        break;
                    }
                }
                assert_eq!(seen.len(), total, "D={depth} z={z} d_in={d_in}");
                assert_eq!(total, depth.pow(z as u32));
            }
        }
    }
}

#[test]
fn counts_match_exhaustive_enumeration() {
    const LIMIT: u64 = 100_000;
    let mut compared = 0;
    for kind in 1..=3u8 {
        let cf = CfType::from_number(kind).unwrap();
        for depth in 1..=3usize {
            for z in 1..=4usize {
                for d_out in 1..=3usize {
                    let n_left = depth * z;
                    for d_in in 1..=n_left {
                        // d_in must split the edge stream into whole right neurons
                        if (n_left * d_out) % d_in != 0 {
                            continue;
                        }
                        for dither in [false, true] {
                            let formula = count_patterns(depth, z, d_out, d_in, cf, dither);
                            let value: u64 = match u64::try_from(&formula.value) {
                                Ok(v) if v <= LIMIT => v,
                                _ => continue,
                            };
                            let Some(brute) = common::brute_force_count(
                                kind,
                                depth,
                                z,
                                d_out,
                                d_in,
                                dither,
                                LIMIT * 50,
                            ) else {
                                continue;
                            };
                            if formula.exact {
                                assert_eq!(
                                    brute, value,
                                    "type {kind} D={depth} z={z} d_out={d_out} d_in={d_in} dither={dither}"
                                );
                            } else {
                                assert!(brute <= value, "bound below enumeration");
                            }
                            compared += 1;
                        }
                    }
                }
            }
        }
    }
    assert!(compared > 100, "only {compared} cases compared");
}

#[test]
fn smallest_documented_count() {
    let c = count_patterns(2, 2, 1, 1, CfType::Type1, false);
    assert_eq!(c.value, BigUint::from(4u32));
    assert_eq!(
        common::brute_force_count(1, 2, 2, 1, 1, false, 100),
        Some(4)
    );
}

#[test]
fn table_counts_for_the_twelve_neuron_junction() {
    let expect = [
        (CfType::Type1, false, 81u64),
        (CfType::Type1, true, 486),
        (CfType::Type2, false, 6561),
        (CfType::Type2, true, 236196),
        (CfType::Type3, false, 1679616),
        (CfType::Type3, true, 60466176),
    ];
    for (cf, dither, n) in expect {
        let c = count_patterns(3, 4, 2, 2, cf, dither);
        assert!(c.exact);
        assert_eq!(c.value, BigUint::from(n));
    }
    // the two smallest rows are small enough to enumerate
    assert_eq!(
        common::brute_force_count(1, 3, 4, 2, 2, false, 1_000_000),
        Some(81)
    );
    assert_eq!(
        common::brute_force_count(1, 3, 4, 2, 2, true, 1_000_000),
        Some(486)
    );
    assert_eq!(
        common::brute_force_count(2, 3, 4, 2, 2, false, 1_000_000),
        Some(6561)
    );
}

#[test]
fn network_count_is_the_product() {
    let a = count_patterns(3, 4, 2, 2, CfType::Type2, true);
    let b = count_patterns(2, 2, 1, 1, CfType::Type1, false);
    let c = count_patterns(4, 3, 3, 5, CfType::Type3, true);
    let net = network_pattern_count(&[a.clone(), b.clone(), c.clone()]);
    assert_eq!(net.value, &a.value * &b.value * &c.value);
    assert_eq!(net.exact, a.exact && b.exact && c.exact);
    assert!(!c.exact && !net.exact);
}
