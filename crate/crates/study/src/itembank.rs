//! Default stimuli and questionnaires for the forged-documents study.

use std::collections::BTreeMap;

use alterfactual_core::explain::{AlterfactualMode, Explainer};
use alterfactual_core::fixtures::{builtin_document_model, document_instance};
use alterfactual_core::render::{render_explanation, TemplateSet};
use alterfactual_core::{ExplanationKind, GridOptions, Instance, Label, RuleModel};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{ConditionWeights, Payment, Quiz, QuizQuestion, Stimulus, StimulusItem, StudyConfig};
use crate::error::{Result, StudyError};

const COLOR: &str = "parchment_color";
const WORDS: &str = "word_count";
const YEAR: &str = "year";

/// A region of the document space: one color and an inclusive word range.
#[derive(Debug, Clone, Copy)]
struct Cell {
    color: &'static str,
    words: (i64, i64),
    forged: bool,
}

const fn cell(color: &'static str, lo: i64, hi: i64, forged: bool) -> Cell {
    Cell {
        color,
        words: (lo, hi),
        forged,
    }
}

/// Prediction cells: every rule branch plus the word-count boundary.
const PREDICTION_CELLS: [Cell; 8] = [
    cell("dark", 1, 50, true),
    cell("light", 1, 50, true),
    cell("light", 51, 150, true),
    cell("medium", 51, 150, true),
    cell("dark", 52, 150, false),
    cell("dark", 51, 51, false),
    cell("light", 151, 500, false),
    cell("medium", 151, 500, false),
];

const TRAINING_CELLS: [Cell; 4] = [
    cell("medium", 1, 50, true),
    cell("light", 51, 150, true),
    cell("dark", 51, 150, false),
    cell("dark", 151, 500, false),
];

const EXAMPLE_CELLS: [Cell; 2] = [cell("light", 1, 50, true), cell("medium", 151, 500, false)];

/// Templates for the prediction task: the same sentences without the decision.
pub fn blind_templates(templates: &TemplateSet) -> TemplateSet {
    let mut blind = templates.clone();
    let alter = "No matter whether {changes}, the AI's decision would stay the same.";
    blind.templates.insert(
        ExplanationKind::Counterfactual,
        "If {changes}, the AI would have made the other decision.".into(),
    );
    blind.templates.insert(ExplanationKind::AlterfactualIrrelevance, alter.into());
    blind.templates.insert(ExplanationKind::AlterfactualStrict, alter.into());
    blind
}

struct Generator<'a> {
    explainer: Explainer<'a>,
    templates: &'a TemplateSet,
    blind: TemplateSet,
    rng: ChaCha8Rng,
    used: Vec<Instance>,
    labels: [Option<Label>; 2],
}

impl Generator<'_> {
    fn draw(&mut self, c: Cell) -> Instance {
        loop {
            let x = document_instance(
                c.color,
                self.rng.gen_range(c.words.0..=c.words.1),
                self.rng.gen_range(-200..=200),
            );
            if !self.used.contains(&x) {
                self.used.push(x.clone());
                return x;
            }
        }
    }

    fn stimulus(&self, e: alterfactual_core::Explanation) -> Result<Stimulus> {
        Ok(Stimulus {
            text: render_explanation(&e, self.templates)?,
            blind_text: render_explanation(&e, &self.blind)?,
            explanation: e,
        })
    }

    fn item(&mut self, c: Cell) -> Result<StimulusItem> {
        let x = self.draw(c);
        let label = self.explainer.model().predict(&x)?;
        // every forged cell must share one label and every authentic cell the other
        let slot = &mut self.labels[usize::from(!c.forged)];
        match slot {
            Some(l) if *l != label => return Err(incompatible()),
            Some(_) => {}
            None => *slot = Some(label.clone()),
        }
        if self.labels[0].is_some() && self.labels[0] == self.labels[1] {
            return Err(incompatible());
        }
        let af = self.explainer.alterfactual(&x, AlterfactualMode::Irrelevance, None, None)?;
        let cf = self.explainer.counterfactual(&x, None, None)?;
        Ok(StimulusItem {
            instance: x,
            label,
            alterfactual: Some(self.stimulus(af)?),
            counterfactual: Some(self.stimulus(cf)?),
        })
    }
}

fn incompatible() -> StudyError {
    StudyError::Config("model does not split the document cells into two classes".into())
}

/// The item banks generated from one seed.
#[derive(Debug, Clone, PartialEq)]
pub struct ItemBank {
    pub examples: Vec<StimulusItem>,
    pub training: Vec<StimulusItem>,
    pub prediction: Vec<StimulusItem>,
}

/// Seeded stimuli for a model over the document schema: eight prediction
/// items (four per class) covering every rule branch and the word-count
/// boundary, four training items and two examples, all with precomputed
/// alterfactual and counterfactual explanations.
pub fn generate_item_bank(seed: u64, model: &RuleModel, templates: &TemplateSet) -> Result<ItemBank> {
    let schema = model.schema();
    for name in [COLOR, WORDS, YEAR] {
        if schema.feature(name).is_none() {
            return Err(StudyError::Config(format!("model has no `{name}` feature")));
        }
    }
    let mut g = Generator {
        explainer: Explainer::new(model, &GridOptions::default())?,
        templates,
        blind: blind_templates(templates),
        rng: ChaCha8Rng::seed_from_u64(seed),
        used: Vec::new(),
        labels: [None, None],
    };
    let mut run = |cells: &[Cell]| cells.iter().map(|&c| g.item(c)).collect::<Result<Vec<_>>>();
    let prediction = run(&PREDICTION_CELLS)?;
    let training = run(&TRAINING_CELLS)?;
    let examples = run(&EXAMPLE_CELLS)?;
    Ok(ItemBank {
        examples,
        training,
        prediction,
    })
}

/// Quiz on the introduction. The published study does not list its questions.
pub fn default_quiz() -> Quiz {
    let q = |question: &str, options: &[&str], correct| QuizQuestion {
        question: question.into(),
        options: options.iter().map(|s| s.to_string()).collect(),
        correct,
    };
    Quiz {
        questions: vec![
            q("How many attributes describe each document?", &["Two", "Three", "Four"], 1),
            q(
                "Which of these is one of the attributes?",
                &["Ink type", "Author", "Parchment color"],
                2,
            ),
            q(
                "What does the AI decide about each document?",
                &["Whether it is forged or authentic", "Its exact age", "Who wrote it"],
                0,
            ),
        ],
        pass_threshold: None,
    }
}

/// Explanation satisfaction items, rated 0..4.
pub fn default_satisfaction_items() -> Vec<String> {
    [
        "From the explanations, I understand how the AI works.",
        "The explanations of how the AI works are satisfying.",
        "The explanations of how the AI works have sufficient detail.",
        "The explanations of how the AI works seem complete.",
        "The explanations tell me how to use the AI.",
        "The explanations are useful to my goals.",
        "The explanations show me how accurate the AI is.",
    ]
    .into_iter()
    .map(String::from)
    .collect()
}

impl StudyConfig {
    /// The forged-documents study with seeded default stimuli.
    pub fn document(seed: u64) -> Result<StudyConfig> {
        let (schema, model) = builtin_document_model();
        let templates = TemplateSet::document(&schema);
        let bank = generate_item_bank(seed, &model, &templates)?;
        let global = Explainer::new(&model, &GridOptions::default())?.global_relevance();
        let understanding: BTreeMap<String, bool> =
            global.features.iter().map(|f| (f.feature.clone(), !f.irrelevant)).collect();
        let config = StudyConfig {
            schema,
            model,
            templates,
            condition_weights: ConditionWeights::default(),
            quiz: default_quiz(),
            examples: bank.examples,
            training: bank.training,
            prediction: bank.prediction,
            understanding,
            satisfaction_items: default_satisfaction_items(),
            payment: Payment::default(),
            seed,
        };
        config.validate()?;
        Ok(config)
    }
}
