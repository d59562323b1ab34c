mod common {
    pub mod lstm;
}

use common::lstm::lstm_forward;
use drnn::cell::{dos_acceleration, dos_velocity, forward_sequence, CellParams};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn frames(rng: &mut ChaCha8Rng, t: usize, n: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..t).map(|_| (0..n).map(|_| rng.random_range(-scale..scale)).collect()).collect()
}

fn max_abs_diff(a: &[Vec<f64>], b: &[Vec<f64>]) -> f64 {
    a.iter()
        .flatten()
        .zip(b.iter().flatten())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Order-2 parameters whose order-1 and order-2 DoS weights are zero, and
/// the order-0 parameters sharing every other tensor.
fn reduced_pair(rng: &mut ChaCha8Rng) -> (CellParams, CellParams) {
    let mut p2 = CellParams::random(2, 5, 4, 3, 0.5, rng).unwrap();
    for family in [&mut p2.w_id, &mut p2.w_fd, &mut p2.w_od] {
        for w in &mut family[1..] {
            w.fill(0.0);
        }
    }
    let mut p0 = CellParams::zeros(0, 5, 4, 3).unwrap();
    let shared = p2.tensors().into_iter().filter(|(n, _)| !n.ends_with('1') && !n.ends_with('2'));
    for ((dst_name, dst), (src_name, src)) in p0.tensors_mut().into_iter().zip(shared) {
        assert_eq!(dst_name, src_name);
        *dst = src.clone();
    }
    (p2, p0)
}

#[test]
fn zeroed_higher_orders_reduce_to_order_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..100 {
        let (p2, p0) = reduced_pair(&mut rng);
        let xs = frames(&mut rng, 8, 5, 1.0);
        let (z2, _) = forward_sequence(&xs, &p2).unwrap();
        let (z0, _) = forward_sequence(&xs, &p0).unwrap();
        assert!(max_abs_diff(&z2, &z0) <= 1e-15);
    }
}

#[test]
fn order_zero_matches_independent_lstm() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let p = CellParams::random(0, 5, 4, 3, 0.5, &mut rng).unwrap();
        let xs = frames(&mut rng, 8, 5, 1.0);
        let (z, _) = forward_sequence(&xs, &p).unwrap();
        assert!(max_abs_diff(&z, &lstm_forward(&xs, &p)) <= 1e-15);
    }
}

#[test]
fn all_zero_parameters_keep_the_zero_fixed_point() {
    let p = CellParams::zeros(2, 3, 4, 2).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let xs = frames(&mut rng, 6, 3, 10.0);
    let (z, traces) = forward_sequence(&xs, &p).unwrap();
    assert!(z.iter().flatten().all(|&v| v == 0.0));
    assert!(traces.iter().all(|tr| tr.s.iter().all(|&v| v == 0.0)));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn trace_identities_and_ranges(seed in any::<u64>(), order in 0usize..=2, t in 1usize..12, scale in 0.1f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = CellParams::random(order, 3, 4, 2, scale, &mut rng).unwrap();
        let xs = frames(&mut rng, t, 3, 2.0);
        let (z, traces) = forward_sequence(&xs, &p).unwrap();
        prop_assert_eq!(z.len(), t);
        let zero = vec![0.0; 4];
        for (step, tr) in traces.iter().enumerate() {
            let s_prev2 = if step >= 2 { &traces[step - 2].s } else { &zero };
            prop_assert_eq!(&tr.v, &dos_velocity(&tr.s, &tr.s_prev).unwrap());
            prop_assert_eq!(&tr.a, &dos_acceleration(&tr.s, &tr.s_prev, s_prev2).unwrap());
            if step > 0 {
                prop_assert_eq!(&tr.s_prev, &traces[step - 1].s);
                prop_assert_eq!(&tr.v_prev, &traces[step - 1].v);
                prop_assert_eq!(&tr.a_prev, &traces[step - 1].a);
            }
            // open ranges, except where f64 rounds a saturated activation
            let gates = tr.i.iter().zip(&tr.i_pre).chain(tr.f.iter().zip(&tr.f_pre)).chain(tr.o.iter().zip(&tr.o_pre));
            for (g, pre) in gates {
                prop_assert!((0.0..=1.0).contains(g));
                if pre.abs() < 30.0 {
                    prop_assert!(*g > 0.0 && *g < 1.0);
                }
            }
            for (h, pre) in tr.s_half.iter().zip(&tr.s_half_pre) {
                prop_assert!(h.abs() <= 1.0);
                if pre.abs() < 15.0 {
                    prop_assert!(h.abs() < 1.0);
                }
            }
            for h in tr.z_act.iter().chain(&tr.z) {
                prop_assert!(h.abs() <= 1.0);
            }
            // |s_t| grows by less than one per step from zero
            for s in &tr.s {
                prop_assert!(s.abs() <= (step + 1) as f64);
            }
        }
        // zero initial history: v_1 = a_1 = s_1
        prop_assert_eq!(&traces[0].v, &traces[0].s);
        prop_assert_eq!(&traces[0].a, &traces[0].s);
    }
}
