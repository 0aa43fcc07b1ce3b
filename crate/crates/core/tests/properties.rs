use proptest::prelude::*;
use rug::Float;
use widom_core::cantor::{GapLocation, Position};
use widom_core::oracle::{arcsine_measure, monic_norm, pullback_quadrature};
use widom_core::potential::{green_level, harnack_bracket, harnack_one_slit};
use widom_core::sequences::{regularize, Extension};
use widom_core::widom::{alternating_set, residual_dyadic, verify_alternation};
use widom_core::{CantorModel, ExactReal, Gamma, PrecisionPolicy, SequenceSpec, TailCertificate};

fn f(v: f64) -> Float {
    Float::with_val(256, v)
}

fn direct_model(gammas: &[u32], s_max: u32) -> CantorModel {
    // γ_k = 1/g_k with g_k > 4
    let values: Vec<ExactReal> = gammas.iter().map(|g| ExactReal::parse(&format!("1/{g}")).unwrap()).collect();
    let tail = TailCertificate::Constant { value: values.last().unwrap().clone() };
    let gamma = Gamma::direct(values, Some(tail)).unwrap();
    CantorModel::new(gamma, PrecisionPolicy::default(), s_max).unwrap()
}

fn family() -> impl Strategy<Value = SequenceSpec> {
    prop_oneof![
        (27u32..100, 1u32..9).prop_map(|(a, p)| SequenceSpec::power(&format!("{a}/10"), &format!("{p}/10")).unwrap()),
        (27u32..100, 0u32..50).prop_map(|(a, b)| SequenceSpec::logarithmic(&format!("{a}/10"), &format!("{b}/10")).unwrap()),
        (27u32..100).prop_map(|a| SequenceSpec::constant(&format!("{a}/10")).unwrap()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn regularized_families_are_regular(spec in family()) {
        let n_max = 1u64 << 10;
        let reg = regularize(&spec, n_max).unwrap();
        let mut prev: Option<(Float, Float)> = None;
        for n in 1..=u128::from(n_max) {
            let ls = reg.ln_s_work(n).unwrap();
            let t = reg.tail_decay(n).unwrap();
            prop_assert!(ls >= spec.ln_value(n, 128).unwrap());
            if let Some((ps, pt)) = &prev {
                prop_assert!(ls >= *ps && t <= *pt, "n={}", n);
            }
            prev = Some((ls, t));
        }
        for k in 0..9u32 {
            let a = reg.ln_s_work(1u128 << k).unwrap();
            let b = reg.ln_s_work(1u128 << (k + 1)).unwrap();
            prop_assert!(b <= Float::with_val(128, &a * 2u32));
        }
    }

    #[test]
    fn regularize_is_idempotent(spec in family()) {
        let n_max = 1u64 << 8;
        let once = regularize(&spec, n_max).unwrap();
        let table = once.to_table(160).unwrap();
        let twice = regularize(&table, n_max).unwrap();
        for n in 1..=u128::from(n_max) {
            let d = Float::with_val(128, once.ln_s_work(n).unwrap() - twice.ln_s_work(n).unwrap()).abs();
            prop_assert!(d < Float::with_val(64, 1e-30), "n={}", n);
        }
    }

    #[test]
    fn derived_gamma_is_at_most_a_sixth(spec in family()) {
        let model = CantorModel::from_sequence(&spec, PrecisionPolicy::default(), 6).unwrap();
        let sixth = Float::with_val(256, 1) / 6u32;
        for n in 1..=40 {
            prop_assert!(model.gamma().gamma(n, 256).unwrap() <= sixth);
        }
    }

    #[test]
    fn random_direct_levels_nest(g in prop::collection::vec(5u32..40, 1..5)) {
        let model = direct_model(&g, 4);
        let mut prev = model.level(0).unwrap();
        for s in 1..=4 {
            let level = model.level(s).unwrap();
            prop_assert_eq!(level.endpoints.len(), 1usize << (s + 1));
            prop_assert!(level.total_length() < prev.total_length());
            for j in 1..=level.interval_count() {
                let (a, b) = level.interval(j);
                let mid = Float::with_val(level.bits, a + b) / 2u32;
                prop_assert_eq!(prev.position(&mid), Position::Inside(j.div_ceil(2)));
                prop_assert!(model.contains(s, &mid).unwrap());
            }
            prev = level;
        }
    }

    #[test]
    fn preimages_map_back_to_target(t in -0.999f64..0.999, s in 0u32..5) {
        let model = direct_model(&[6, 8, 5], 5);
        let target = f(t);
        let xs = model.preimages(s, &target).unwrap();
        prop_assert_eq!(xs.len(), 1usize << s);
        prop_assert!(xs.windows(2).all(|w| w[0] < w[1]));
        for x in &xs {
            let v = model.eval_f(s, x).unwrap().value.to_float(256);
            prop_assert!(Float::with_val(256, v - &target).abs() < 1e-50);
        }
    }

    #[test]
    fn green_lower_bounds_grow_with_the_level(x in 1.0001f64..5.0) {
        let model = direct_model(&[6], 8);
        let x0 = f(x);
        let mut prev = f(0.0);
        for s in 0..=8 {
            let g = green_level(&model, s, &x0).unwrap();
            prop_assert!(g >= prev);
            prev = g;
        }
    }

    #[test]
    fn harnack_bracket_is_ordered(x in 0.01f64..0.99, w in 0.01f64..0.5) {
        let alpha = f(x * (1.0 - w));
        let beta = Float::with_val(256, &alpha + f(w * (1.0 - x * (1.0 - w)) * 0.999));
        let x0 = Float::with_val(256, &alpha + &beta) / 2u32;
        let h = harnack_bracket(&x0, &alpha, &beta).unwrap();
        prop_assert!(h.lo >= 1 && h.lo <= h.hi);
    }

    #[test]
    fn monic_minimizer_beats_random_competitors(
        n in 1usize..7,
        noise in prop::collection::vec(-1.0f64..1.0, 7),
        scale in 0i32..10,
    ) {
        let mu = arcsine_measure(&f(0.0), &f(1.0), 32, 512).unwrap();
        let g = monic_norm(&mu, n).unwrap();
        let best = g.monic_norm.to_float(512).square();
        let mut c = g.coefficients.clone();
        for (ci, e) in c.iter_mut().zip(&noise).take(n) {
            *ci += e * 10f64.powi(-scale);
        }
        let other = mu.norm_sq(&c);
        prop_assert!(other >= Float::with_val(512, &best - Float::with_val(512, &best >> 480u32)));
    }
}

#[test]
fn one_slit_distance_tends_to_one_and_infinity() {
    let (a, b) = (f(0.0), f(1.0));
    let far: Vec<f64> = [2.0, 4.0, 16.0, 256.0]
        .iter()
        .map(|&x| harnack_one_slit(&f(x), &a, &b).unwrap().to_f64())
        .collect();
    assert!(far.windows(2).all(|w| w[1] < w[0]));
    assert!(far[3] - 1.0 < 0.1);
    let near: Vec<f64> = [1.1, 1.01, 1.001, 1.0001]
        .iter()
        .map(|&x| harnack_one_slit(&f(x), &a, &b).unwrap().to_f64())
        .collect();
    assert!(near.windows(2).all(|w| w[1] > w[0]));
    assert!(near[3] > 100.0);
}

#[test]
fn oracle_resolution_is_stable() {
    let mu = arcsine_measure(&f(0.0), &f(1.0), 16, 512).unwrap();
    let nu = arcsine_measure(&f(0.0), &f(1.0), 32, 512).unwrap();
    for n in 1..=8 {
        let a = monic_norm(&mu, n).unwrap().monic_norm.to_float(512);
        let b = monic_norm(&nu, n).unwrap().monic_norm.to_float(512);
        assert!(Float::with_val(512, &a - &b).abs() < Float::with_val(512, &a >> 480u32), "n={n}");
    }
}

#[test]
fn pullback_weights_sum_to_one_and_stay_in_the_set() {
    let spec = SequenceSpec::constant("e").unwrap();
    let model = CantorModel::from_sequence(&spec, PrecisionPolicy::default(), 4).unwrap();
    for s in 0..=3 {
        let q = pullback_quadrature(&model, s, 8).unwrap();
        let one = Float::with_val(512, 1);
        assert!(Float::with_val(512, q.total_weight() - &one).abs() < Float::with_val(64, 1) >> 200u32);
        for x in &q.nodes {
            assert!(model.contains(s, x).unwrap());
        }
    }
}

#[test]
fn table_without_extension_is_prefix_certified() {
    let spec = SequenceSpec::table(&["e^2", "e", "e", "e"], Extension::None).unwrap();
    let reg = regularize(&spec, 4).unwrap();
    assert!(reg.prefix_certified_only());
    assert!(reg.ln_s_work(5).is_err());
    let ext = SequenceSpec::table(&["e^2", "e", "e", "e"], Extension::RepeatLast).unwrap();
    assert!(!regularize(&ext, 4).unwrap().prefix_certified_only());
}

#[test]
fn alternation_holds_in_every_level_three_gap() {
    let model = direct_model(&[7, 5, 9, 6], 6);
    let level = model.level(3).unwrap();
    let tol = Float::with_val(64, 1e-20);
    for j in 1..level.interval_count() {
        let x0 = Float::with_val(level.bits, &level.endpoints[2 * j - 1] + &level.endpoints[2 * j]) / 2u32;
        let gap = model.locate_gap(&x0).unwrap();
        assert!(matches!(gap, GapLocation::Bounded { .. }));
        for s in gap.first_level()..=6 {
            let r = residual_dyadic(&model, s, &x0, &gap).unwrap();
            let pts = alternating_set(&model, s, &x0, &gap).unwrap();
            assert!(verify_alternation(&model, &pts, &r, &tol).unwrap().ok, "gap {j} s={s}");
        }
    }
}
