use super::*;
use crate::fixtures::{builtin_cactus_model, builtin_document_model, document_instance as doc};
use crate::featurespace::FeatureSchema;

fn frac(num: u128, den: u128) -> Fraction {
    Fraction::new(num, den)
}

/// Plain O(grid) scan: nearest other-class grid point, ties lexicographic.
fn naive_margin(model: &RuleModel, grid: &Grid, x: &Point) -> Option<(Fraction, Point)> {
    let class = model.predict_point(x);
    grid.points()
        .filter(|z| model.predict_point(z) != class)
        .map(|z| (model.schema().point_distance(x, &z), z))
        .min()
}

#[test]
fn margin_examples() {
    let (_, m) = builtin_document_model();
    let ex = Explainer::new(&m, &GridOptions::default()).unwrap();
    let r = ex.margin(&doc("dark", 40, 100)).unwrap();
    assert_eq!(r.value, frac(11, 1497));
    assert_eq!(r.witness, doc("dark", 51, 100));
    let r = ex.margin(&doc("dark", 51, 100)).unwrap();
    assert_eq!(r.value, frac(1, 1497));
    assert_eq!(r.witness, doc("dark", 50, 100));
}

#[test]
fn margin_without_boundary_fails() {
    let (schema, _) = builtin_document_model();
    let m = RuleModel::parse(
        r#"{"labels":["forged","authentic"],"default":"authentic","rules":[]}"#,
        schema,
    )
    .unwrap();
    let err = margin(&m, &doc("dark", 40, 100), &GridOptions::default()).unwrap_err();
    assert!(matches!(err, Error::NoBoundary(_)));
    assert!(semifactual(&m, &doc("dark", 40, 100), &GridOptions::default(), None).is_err());
}

#[test]
fn projected_margin_matches_naive_scan() {
    let (_, m) = builtin_document_model();
    let opts = GridOptions::default().with_stride("word_count", 7).with_stride("year", 40);
    let ex = Explainer::new(&m, &opts).unwrap();
    for p in ex.grid().points().step_by(13) {
        let (value, witness) = naive_margin(&m, ex.grid(), &p).unwrap();
        let got = ex.margin(&m.schema().decode(&p)).unwrap();
        assert_eq!(got.value, value);
        assert_eq!(got.witness, m.schema().decode(&witness));
        assert_eq!(ex.margin_num(&p).map(|n| ex.frac(n)), Some(value));
    }
    // off-grid inputs go through the scan path
    for (c, w, y) in [("dark", 40, 100), ("light", 3, -17), ("medium", 151, 199)] {
        let p = ex.encode(&doc(c, w, y)).unwrap();
        assert!(!ex.grid().contains(&p));
        let (value, witness) = naive_margin(&m, ex.grid(), &p).unwrap();
        let got = ex.margin(&doc(c, w, y)).unwrap();
        assert_eq!((got.value, got.witness), (value, m.schema().decode(&witness)));
    }
}

#[test]
fn local_relevance_examples() {
    let (_, m) = builtin_document_model();
    let r = local_relevance(&m, &doc("dark", 40, 100)).unwrap();
    assert!(r.is_irrelevant("year"));
    assert!(r.is_irrelevant("parchment_color"));
    assert!(!r.is_irrelevant("word_count"));
    assert_eq!(r.feature("parchment_color").unwrap().admissible_values.as_ref().unwrap().len(), 3);
    assert!(r.feature("word_count").unwrap().admissible_values.is_none());

    let r = local_relevance(&m, &doc("light", 100, 0)).unwrap();
    assert!(r.is_irrelevant("year"));
    assert!(!r.is_irrelevant("parchment_color"));
    assert!(!r.is_irrelevant("word_count"));
}

#[test]
fn global_relevance_of_fixtures() {
    let (_, m) = builtin_document_model();
    let r = global_relevance(&m, &GridOptions::default()).unwrap();
    assert!(r.is_irrelevant("year"));
    assert!(!r.is_irrelevant("word_count"));
    assert!(!r.is_irrelevant("parchment_color"));
    let color = r.feature("parchment_color").unwrap();
    assert_eq!(color.relevant_instances, Some(3 * 100 * 401));
    assert_eq!(r.feature("word_count").unwrap().relevant_instances, Some(601_500));

    let (_, cactus) = builtin_cactus_model();
    let ex = Explainer::new(&cactus, &GridOptions::default()).unwrap();
    let r = ex.global_relevance();
    assert!(r.is_irrelevant("weather"));
    assert!(!r.is_irrelevant("temperature"));
    // temperature matters at every one of the 61 x 3 points
    for p in ex.grid().points() {
        assert!(!relevance::local_flags(&cactus, &p)[0]);
    }
}

#[test]
fn counterfactual_examples() {
    let (_, m) = builtin_document_model();
    let ex = Explainer::new(&m, &GridOptions::default()).unwrap();
    let e = ex.counterfactual(&doc("dark", 40, 100), None, None).unwrap();
    assert_eq!(e.altered, doc("dark", 51, 100));
    assert_eq!(e.distance.fraction(), frac(11, 1497));
    assert_eq!(e.altered_label.as_str(), "authentic");
    assert_eq!(e.changed_features.len(), 1);

    let e = ex.counterfactual(&doc("light", 100, 0), None, None).unwrap();
    assert_eq!(e.altered, doc("light", 151, 0));
    assert_eq!(e.distance.fraction(), frac(51, 1497));

    let e = ex.counterfactual(&doc("dark", 51, 100), None, None).unwrap();
    assert_eq!(e.altered, doc("dark", 50, 100));
    assert_eq!(e.distance.fraction(), frac(1, 1497));

    let forged = Label::new("forged");
    assert!(ex.counterfactual(&doc("dark", 40, 100), Some(&forged), None).is_err());
    let e = ex.counterfactual(&doc("dark", 51, 100), Some(&forged), None).unwrap();
    assert_eq!(e.altered_label, forged);
}

#[test]
fn semifactual_examples() {
    let (_, m) = builtin_document_model();
    let ex = Explainer::new(&m, &GridOptions::default()).unwrap();
    let e = ex.semifactual(&doc("dark", 40, 100), None).unwrap();
    assert_eq!(e.altered, doc("dark", 50, 100));
    assert_eq!(e.altered_margin.unwrap().fraction(), frac(1, 1497));
    assert_eq!(e.distance.fraction(), frac(10, 1497));
    assert_eq!(e.altered_label, e.original_label);

    // x already has the minimal margin; the closest other such point only
    // moves the year by one
    let e = ex.semifactual(&doc("dark", 50, 100), None).unwrap();
    assert_eq!(e.altered, doc("dark", 50, 99));
    assert_eq!(e.altered_margin.unwrap().fraction(), frac(1, 1497));
    assert_eq!(m.predict(&e.altered).unwrap().as_str(), "forged");
}

#[test]
fn alterfactual_examples() {
    let (_, m) = builtin_document_model();
    let ex = Explainer::new(&m, &GridOptions::default()).unwrap();

    let e = ex.alterfactual(&doc("dark", 40, 100), AlterfactualMode::Irrelevance, None, None).unwrap();
    assert_eq!(e.altered, doc("light", 40, -200));
    assert_eq!(e.distance.fraction(), frac(7, 12));
    assert_eq!(e.kind, ExplanationKind::AlterfactualIrrelevance);

    let e = ex.alterfactual(&doc("light", 100, 0), AlterfactualMode::Irrelevance, None, None).unwrap();
    assert_eq!(e.altered, doc("light", 100, -200));
    assert_eq!(e.distance.fraction(), frac(1, 6));
    assert_eq!(e.changed_features.len(), 1);

    let e = ex.alterfactual(&doc("dark", 40, 100), AlterfactualMode::Strict, Some(0.0), None).unwrap();
    assert_eq!(e.altered, doc("light", 140, -200));
    assert!((e.distance.value - 0.65013).abs() < 1e-5);
    assert_eq!(e.original_margin.unwrap().fraction(), frac(11, 1497));
    assert_eq!(e.altered_margin.unwrap().fraction(), frac(11, 1497));
}

#[test]
fn default_epsilon_is_one_cheapest_step() {
    let (_, m) = builtin_document_model();
    let ex = Explainer::new(&m, &GridOptions::default()).unwrap();
    assert!((ex.default_epsilon() - 1.0 / 1497.0).abs() < 1e-15);
    let e = ex.alterfactual(&doc("dark", 40, 100), AlterfactualMode::Strict, None, None).unwrap();
    let diff = e.altered_margin.unwrap().fraction().abs_diff(&frac(11, 1497));
    assert!(diff.value() <= 1.0 / 1497.0 + 1e-15);
    assert!(ex
        .alterfactual(&doc("dark", 40, 100), AlterfactualMode::Strict, Some(-1.0), None)
        .is_err());
}

#[test]
fn alterfactual_fails_when_nothing_can_change() {
    let schema = std::sync::Arc::new(
        FeatureSchema::new(vec![crate::FeatureSpec::numeric("t", "T", 0, 3, 1)]).unwrap(),
    );
    let m = RuleModel::parse(
        r#"{"labels":["lo","hi"],"default":"lo","rules":[{"when":[{"feature":"t","op":">=","value":2}],"label":"hi"}]}"#,
        schema,
    )
    .unwrap();
    let x = Instance::new([("t", 1)]);
    let err = alterfactual(&m, &x, AlterfactualMode::Irrelevance, None, &GridOptions::default(), None).unwrap_err();
    assert_eq!(err, Error::NoExplanation("alterfactual"));
    // strict mode may move t to 0 only if the margin is kept: margin(1)=1/3, margin(0)=2/3
    let err = alterfactual(&m, &x, AlterfactualMode::Strict, Some(0.0), &GridOptions::default(), None).unwrap_err();
    assert_eq!(err, Error::NoExplanation("alterfactual"));
}

#[test]
fn irrelevance_mode_reverts_when_joint_change_flips() {
    // at (0, 0, 0) neither a nor b alone flips the decision, both together do
    let schema = std::sync::Arc::new(
        FeatureSchema::new(vec![
            crate::FeatureSpec::numeric("a", "A", 0, 2, 1),
            crate::FeatureSpec::numeric("b", "B", 0, 4, 1),
            crate::FeatureSpec::numeric("c", "C", 0, 1, 1),
        ])
        .unwrap(),
    );
    let m = RuleModel::parse(
        r#"{"labels":["no","yes"],"default":"no","rules":[
            {"when":[{"feature":"c","op":">=","value":1}],"label":"yes"},
            {"when":[{"feature":"a","op":">=","value":1},{"feature":"b","op":">=","value":3}],"label":"yes"}
        ]}"#,
        schema,
    )
    .unwrap();
    let x = Instance::new([("a", 0), ("b", 0), ("c", 1)]);
    let ex = Explainer::new(&m, &GridOptions::default()).unwrap();
    let x0 = Instance::new([("a", 0), ("b", 0), ("c", 0)]);
    let r = ex.local_relevance(&x0).unwrap();
    assert!(r.is_irrelevant("a") && r.is_irrelevant("b") && !r.is_irrelevant("c"));

    let exact = ex.alterfactual(&x0, AlterfactualMode::Irrelevance, None, None).unwrap();
    assert_eq!(exact.altered_label.as_str(), "no");
    // best is a=2,b=2 (2/2 + 2/4) vs a=0,b=4 (1) vs a=2,b=0 (1): 1.5/3
    assert_eq!(exact.altered, Instance::new([("a", 2), ("b", 2), ("c", 0)]));

    let greedy = ex
        .alterfactual(&x0, AlterfactualMode::Irrelevance, None, Some(&SearchBudget::default()))
        .unwrap();
    assert_eq!(greedy.strategy, Strategy::Heuristic);
    assert_eq!(greedy.altered_label.as_str(), "no");
    // reverting the cheaper change (a: 2/2 vs b: 4/4 tie -> first feature)
    assert_eq!(greedy.altered, Instance::new([("a", 0), ("b", 4), ("c", 0)]));

    let e = ex.alterfactual(&x, AlterfactualMode::Irrelevance, None, None).unwrap();
    assert_eq!(e.altered, Instance::new([("a", 2), ("b", 4), ("c", 1)]));
}

#[test]
fn factual_examples() {
    let (_, m) = builtin_document_model();
    let opts = GridOptions::default();
    let x = doc("dark", 40, 100);
    let data = [doc("dark", 45, 0), doc("light", 300, 0)];
    let e = factual(&m, &x, &data, &opts).unwrap();
    assert_eq!(e.altered, doc("dark", 45, 0));
    assert!(e.original_margin.is_none());

    assert_eq!(factual(&m, &x, &[x.clone()], &opts).unwrap_err(), Error::NoExplanation("factual"));
    assert!(factual(&m, &x, &[], &opts).is_err());
    let e = factual(&m, &x, &[x.clone(), doc("dark", 45, 0)], &opts).unwrap();
    assert_eq!(e.altered, doc("dark", 45, 0));
}

#[test]
fn heuristic_matches_exhaustive_counterfactual() {
    let (_, m) = builtin_document_model();
    let budget = SearchBudget::new(42, 8, 1_000);
    let h = heuristic_search(
        &m,
        &doc("dark", 40, 100),
        Objective::MinimizeDistance,
        &Constraints {
            class: ClassConstraint::Different,
            ..Constraints::default()
        },
        &budget,
        &GridOptions::default(),
    )
    .unwrap();
    assert_eq!(h, doc("dark", 51, 100));
}

#[test]
fn heuristic_search_is_deterministic_and_respects_budget() {
    let (_, m) = builtin_document_model();
    let opts = GridOptions::default().with_stride("word_count", 5).with_stride("year", 5);
    let ex = Explainer::new(&m, &opts).unwrap();
    let x = doc("medium", 121, -35);
    let b = SearchBudget::new(9, 4, 50);
    let a = ex.alterfactual(&x, AlterfactualMode::Strict, None, Some(&b)).unwrap();
    let b2 = ex.alterfactual(&x, AlterfactualMode::Strict, None, Some(&b)).unwrap();
    assert_eq!(a, b2);
    assert_eq!(a.strategy, Strategy::Heuristic);

    // zero steps: best feasible start point or failure
    let c = Constraints {
        class: ClassConstraint::Same,
        ..Constraints::default()
    };
    let start = heuristic_search(&m, &x, Objective::MaximizeDistance, &c, &SearchBudget::new(1, 1, 0), &opts).unwrap();
    assert_eq!(start, x);
    let c = Constraints {
        class: ClassConstraint::Different,
        ..Constraints::default()
    };
    assert_eq!(
        heuristic_search(&m, &x, Objective::MinimizeDistance, &c, &SearchBudget::new(1, 1, 0), &opts).unwrap_err(),
        Error::SearchExhausted
    );
    assert!(SearchBudget::new(1, 0, 5).validate().is_err());
}

#[test]
fn explanation_serializes_exact_fractions() {
    let (_, m) = builtin_document_model();
    let e = counterfactual(&m, &doc("dark", 40, 100), None, &GridOptions::default(), None).unwrap();
    let v = serde_json::to_value(&e).unwrap();
    assert_eq!(v["kind"], "counterfactual");
    assert_eq!(v["distance"]["num"], 11);
    assert_eq!(v["distance"]["den"], 1497);
    assert_eq!(v["original_margin"]["den"], 1497);
    assert_eq!(v["altered"]["word_count"], 51);
    let back: Explanation = serde_json::from_value(v).unwrap();
    assert_eq!(back, e);
}
