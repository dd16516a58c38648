use alterfactual_analysis::{one_way_anova, t_test, t_two_sided_p, Df, GroupSample};
use alterfactual_study::Condition;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sample(rng: &mut ChaCha8Rng, n: usize, shift: f64) -> Vec<f64> {
    (0..n).map(|_| shift + rng.gen_range(-3.0..3.0) + rng.gen_range(-3.0..3.0)).collect()
}

#[test]
fn two_group_anova_is_squared_t() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let n1 = rng.gen_range(2..30);
        let n2 = rng.gen_range(2..30);
        let shift = rng.gen_range(-2.0..2.0);
        let a = GroupSample::new(Condition::Alterfactual, sample(&mut rng, n1, 0.0));
        let b = GroupSample::new(Condition::NoExplanation, sample(&mut rng, n2, shift));
        let t = t_test(&a, &b).unwrap();
        let f = one_way_anova(&[a, b]).unwrap();
        let t2 = t.statistic * t.statistic;
        assert!((f.statistic - t2).abs() <= 1e-9 * t2.max(1.0), "{} vs {t2}", f.statistic);
        assert!((f.p - t.p).abs() <= 1e-9, "{} vs {}", f.p, t.p);
        assert_eq!(f.df, Df::Two(1.0, (n1 + n2 - 2) as f64));
    }
}

fn group() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-100.0f64..100.0, 2..20)
}

proptest! {
    #[test]
    fn p_decreases_with_abs_t(t1 in 0.0f64..50.0, dt in 0.0f64..50.0, df in 1u32..200) {
        let df = f64::from(df);
        let near = t_two_sided_p(t1, df).unwrap();
        let far = t_two_sided_p(-(t1 + dt), df).unwrap();
        prop_assert!(far <= near + 1e-15);
        prop_assert!((0.0..=1.0).contains(&near));
    }

    #[test]
    fn affine_invariance(a in group(), b in group(), c in group(), scale in 0.01f64..100.0, shift in -1e3f64..1e3) {
        let map = |v: &[f64]| v.iter().map(|x| scale * x + shift).collect::<Vec<_>>();
        let g = |cond, v: Vec<f64>| GroupSample::new(cond, v);
        let (ga, gb, gc) = (g(Condition::Alterfactual, a.clone()), g(Condition::Counterfactual, b.clone()), g(Condition::Combination, c.clone()));
        let (ha, hb, hc) = (g(Condition::Alterfactual, map(&a)), g(Condition::Counterfactual, map(&b)), g(Condition::Combination, map(&c)));
        let t = t_test(&ga, &gb).unwrap();
        let u = t_test(&ha, &hb).unwrap();
        prop_assume!(!t.degenerate && !u.degenerate);
        prop_assert!((t.statistic - u.statistic).abs() <= 1e-6 * t.statistic.abs().max(1.0));
        prop_assert!((t.p - u.p).abs() <= 1e-7);
        let (dt, du) = (t.effect.unwrap().d, u.effect.unwrap().d);
        prop_assert!((dt - du).abs() <= 1e-6 * dt.max(1.0));
        let f = one_way_anova(&[ga, gb, gc]).unwrap();
        let h = one_way_anova(&[ha, hb, hc]).unwrap();
        prop_assert!((f.statistic - h.statistic).abs() <= 1e-6 * f.statistic.max(1.0));
        prop_assert!((f.p - h.p).abs() <= 1e-7);
    }
}
