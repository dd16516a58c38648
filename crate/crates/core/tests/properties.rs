//! Property tests for the feature space, the rule model and the generators.
//!
//! The oracles here recompute everything from `predict` and plain per-feature
//! arithmetic over the full (strided) grid, without the projection used by
//! the engine.

use alterfactual_core::explain::{AlterfactualMode, Explainer};
use alterfactual_core::fixtures::{builtin_document_model, document_instance as doc};
use alterfactual_core::{Domain, FeatureKind, FeatureSchema, Fraction, GridOptions, Instance, RuleModel, Value};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const COLORS: [&str; 3] = ["light", "medium", "dark"];

/// Exact rational `num/den` in lowest terms.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Q(i128, i128);

impl Q {
    fn new(n: i128, d: i128) -> Q {
        fn gcd(a: i128, b: i128) -> i128 {
            if b == 0 { a.abs() } else { gcd(b, a % b) }
        }
        let g = gcd(n, d).max(1);
        Q(n / g, d / g)
    }
    fn add(self, o: Q) -> Q {
        Q::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn lt(self, o: Q) -> bool {
        self.0 * o.1 < o.0 * self.1
    }
}

/// Mean normalized delta with exact fractions, independent of the schema's
/// common-denominator scaling.
fn exact_distance(schema: &FeatureSchema, x: &Instance, y: &Instance) -> Q {
    let mut sum = Q(0, 1);
    for f in schema.features() {
        let (a, b) = (&x.values[&f.name], &y.values[&f.name]);
        let term = match (&f.domain, f.kind) {
            (Domain::Numeric { min, max, .. }, _) => {
                Q::new((a.as_int().unwrap() - b.as_int().unwrap()).abs() as i128, (max - min) as i128)
            }
            (Domain::Categorical { values }, FeatureKind::Ordinal) => {
                let pos = |v: &Value| values.iter().position(|s| Some(s.as_str()) == v.as_label()).unwrap() as i128;
                Q::new((pos(a) - pos(b)).abs(), (values.len() as i128 - 1).max(1))
            }
            _ => Q::new(i128::from(a != b), 1),
        };
        sum = sum.add(term);
    }
    Q::new(sum.0, sum.1 * schema.len() as i128)
}

fn doc_strategy() -> impl Strategy<Value = Instance> {
    (0usize..3, 1i64..=500, -200i64..=200).prop_map(|(c, w, y)| doc(COLORS[c], w, y))
}

fn closed_form_forged(color: &str, wc: i64) -> bool {
    wc <= 50 || ((51..=150).contains(&wc) && (color == "light" || color == "medium"))
}

proptest! {
    #[test]
    fn distance_is_a_bounded_metric(x in doc_strategy(), y in doc_strategy(), z in doc_strategy()) {
        let (schema, _) = builtin_document_model();
        let d = |a: &Instance, b: &Instance| schema.distance(a, b).unwrap();
        prop_assert!(d(&x, &y).value() >= 0.0 && d(&x, &y).value() <= 1.0);
        prop_assert_eq!(d(&x, &y), d(&y, &x));
        prop_assert_eq!(d(&x, &y).is_zero(), x == y);
        // all distances on one schema share a denominator
        prop_assert!(d(&x, &z).num <= d(&x, &y).num + d(&y, &z).num);
    }

    #[test]
    fn distance_matches_exact_fractions(x in doc_strategy(), y in doc_strategy(), z in doc_strategy()) {
        let (schema, _) = builtin_document_model();
        let got = schema.distance(&x, &y).unwrap().reduced();
        let want = exact_distance(&schema, &x, &y);
        prop_assert_eq!((got.num as i128, got.den as i128), (want.0, want.1));
        // tie-break comparisons agree with exact comparisons
        let (dxy, dxz) = (schema.distance(&x, &y).unwrap(), schema.distance(&x, &z).unwrap());
        prop_assert_eq!(dxy < dxz, want.lt(exact_distance(&schema, &x, &z)));
        prop_assert_eq!(dxy.value() < dxz.value(), dxy < dxz);
    }

    #[test]
    fn prediction_ignores_the_year(x in doc_strategy(), year in -200i64..=200) {
        let (_, m) = builtin_document_model();
        let mut y = x.clone();
        y.values.insert("year".into(), Value::Int(year));
        prop_assert_eq!(m.predict(&x).unwrap(), m.predict(&y).unwrap());
    }
}

#[test]
fn stride_one_grid_enumerates_every_instance_once() {
    let (schema, m) = builtin_document_model();
    let all: Vec<Instance> = schema.enumerate_grid(&GridOptions::default()).unwrap().collect();
    assert_eq!(all.len(), 601_500);
    assert!(all.windows(2).all(|w| schema.encode(&w[0]).unwrap() < schema.encode(&w[1]).unwrap()));
    assert_eq!(all[0], doc("light", 1, -200));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let x = doc(COLORS[rng.gen_range(0..3)], rng.gen_range(1..=500), rng.gen_range(-200..=200));
        let c = COLORS.iter().position(|c| Value::from(*c) == x.values["parchment_color"]).unwrap();
        let idx = c * 500 * 401
            + (x.values["word_count"].as_int().unwrap() - 1) as usize * 401
            + (x.values["year"].as_int().unwrap() + 200) as usize;
        assert_eq!(all[idx], x);
        assert_eq!(
            m.predict(&x).unwrap().as_str() == "forged",
            closed_form_forged(x.values["parchment_color"].as_label().unwrap(), x.values["word_count"].as_int().unwrap())
        );
    }
}

/// Every point of the strided grid with its label.
fn labelled_grid(m: &RuleModel, opts: &GridOptions) -> Vec<(Instance, String)> {
    m.schema()
        .enumerate_grid(opts)
        .unwrap()
        .map(|p| {
            let l = m.predict(&p).unwrap().0;
            (p, l)
        })
        .collect()
}

fn key(schema: &FeatureSchema, x: &Instance) -> alterfactual_core::Point {
    schema.encode(x).unwrap()
}

fn naive_margin(m: &RuleModel, grid: &[(Instance, String)], x: &Instance) -> Fraction {
    let label = m.predict(x).unwrap().0;
    grid.iter()
        .filter(|(_, l)| *l != label)
        .map(|(z, _)| m.schema().distance(x, z).unwrap())
        .min()
        .unwrap()
}

fn random_doc(rng: &mut ChaCha8Rng) -> Instance {
    doc(COLORS[rng.gen_range(0..3)], rng.gen_range(1..=500), rng.gen_range(-200..=200))
}

#[test]
fn generators_agree_with_brute_force_on_coarse_grids() {
    let (schema, m) = builtin_document_model();
    let opts = GridOptions::default().with_stride("word_count", 20).with_stride("year", 50);
    let ex = Explainer::new(&m, &opts).unwrap();
    let grid = labelled_grid(&m, &opts);
    let margins: Vec<Fraction> = grid.iter().map(|(z, _)| naive_margin(&m, &grid, z)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for round in 0..30 {
        // alternate on-grid and arbitrary inputs
        let x = if round % 2 == 0 { grid[rng.gen_range(0..grid.len())].0.clone() } else { random_doc(&mut rng) };
        let label = m.predict(&x).unwrap().0;
        let d = |z: &Instance| schema.distance(&x, z).unwrap();
        let changes = |z: &Instance| x.values.iter().filter(|(k, v)| z.values[*k] != **v).count();

        let cf = ex.counterfactual(&x, None, None).unwrap();
        let want = grid
            .iter()
            .filter(|(_, l)| *l != label)
            .min_by_key(|(z, _)| (d(z), changes(z), key(&schema, z)))
            .unwrap();
        assert_eq!(cf.altered, want.0, "counterfactual for {x}");

        let sf = ex.semifactual(&x, None).unwrap();
        let want = grid
            .iter()
            .zip(&margins)
            .filter(|((z, l), _)| *l == label && *z != x)
            .min_by_key(|((z, _), mz)| (**mz, d(z), key(&schema, z)))
            .unwrap();
        assert_eq!(sf.altered, (want.0).0, "semifactual for {x}");

        let m_x = naive_margin(&m, &grid, &x);
        let af = ex.alterfactual(&x, AlterfactualMode::Strict, Some(0.0), None);
        let want = grid
            .iter()
            .zip(&margins)
            .filter(|((z, l), mz)| *l == label && **mz == m_x && d(z).num > 0)
            .min_by_key(|((z, _), _)| (std::cmp::Reverse(d(z)), key(&schema, z)));
        match (af, want) {
            (Ok(e), Some(((z, _), _))) => assert_eq!(&e.altered, z, "strict alterfactual for {x}"),
            (Err(_), None) => {}
            (got, want) => panic!("strict alterfactual for {x}: {got:?} vs {want:?}"),
        }

        let af = ex.alterfactual(&x, AlterfactualMode::Irrelevance, None, None).unwrap();
        let relevance = ex.local_relevance(&x).unwrap();
        assert_eq!(m.predict(&af.altered).unwrap().0, label);
        for f in &relevance.features {
            if !f.irrelevant {
                assert_eq!(af.altered.values[&f.feature], x.values[&f.feature]);
            }
        }
    }
}

#[test]
fn irrelevance_alterfactuals_keep_the_word_count() {
    let (_, m) = builtin_document_model();
    let ex = Explainer::new(&m, &GridOptions::default()).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    for _ in 0..1_000 {
        let x = random_doc(&mut rng);
        let e = ex.alterfactual(&x, AlterfactualMode::Irrelevance, None, None).unwrap();
        assert_eq!(e.altered.values["word_count"], x.values["word_count"]);
        assert_eq!(e.altered_label, e.original_label);
        // the year is always free, so there is always something to change
        assert_ne!(e.altered.values["year"], x.values["year"]);
    }
}

#[test]
fn generators_are_deterministic() {
    let (_, m) = builtin_document_model();
    let opts = GridOptions::default().with_stride("word_count", 5).with_stride("year", 5);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..5 {
        let x = random_doc(&mut rng);
        let run = || {
            let ex = Explainer::new(&m, &opts).unwrap();
            let b = alterfactual_core::SearchBudget::new(7, 4, 100);
            (
                ex.counterfactual(&x, None, None).unwrap(),
                ex.counterfactual(&x, None, Some(&b)).unwrap(),
                ex.semifactual(&x, None).unwrap(),
                ex.alterfactual(&x, AlterfactualMode::Strict, None, None).unwrap(),
                ex.alterfactual(&x, AlterfactualMode::Irrelevance, None, Some(&b)).unwrap(),
            )
        };
        assert_eq!(run(), run());
    }
}
