use std::path::Path;

use serde::{Deserialize, Serialize};

use super::session::pretty_json;
use super::{read_file, write_file, DataError};
use crate::fml::FuzzyController;
use crate::inference::{semantic_accuracy, Engine, InferenceError};
use crate::preprocess::MoveFeatureRecord;
use crate::pso::controller_fitness;

const ACCURACY_DEFINITION: &str =
    "share of records whose inferred WR label equals the label of the desired WR under the same controller's WR terms; records where no rule fires count as mismatches";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveEvaluation {
    #[serde(rename = "move")]
    pub move_number: u32,
    pub inferred_wr: Option<f64>,
    pub desired_wr: f64,
    pub inferred_label: Option<String>,
    pub desired_label: String,
    #[serde(rename = "match")]
    pub matched: bool,
}

/// Before/after comparison of two controllers on one training set.
/// Per-move rows describe the `after` controller.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub game_id: String,
    pub record_count: usize,
    pub semantic_accuracy_before: f64,
    pub semantic_accuracy_after: f64,
    pub fitness_before: f64,
    pub fitness_after: f64,
    pub accuracy_definition: String,
    pub per_move: Vec<MoveEvaluation>,
}

pub fn evaluate_controllers(
    game_id: &str,
    before: &FuzzyController,
    after: &FuzzyController,
    records: &[MoveFeatureRecord],
) -> Result<EvaluationReport, DataError> {
    if !before.same_variable_structure(after) {
        return Err(DataError::Invalid(
            "controllers do not share the same variables and terms".to_string(),
        ));
    }
    let invalid = |e: &dyn std::fmt::Display| DataError::Invalid(e.to_string());
    let engine = Engine::new(after).map_err(|e| invalid(&e))?;
    let mut per_move = Vec::with_capacity(records.len());
    for r in records {
        let values = engine.arrange_record(r).map_err(|e| invalid(&e))?;
        let inferred = match engine.crisp(&values) {
            Ok(x) => Some(x),
            Err(InferenceError::NoRuleFired) => None,
            Err(e) => return Err(invalid(&format!("move {}: {e}", r.move_number))),
        };
        let inferred_label = inferred.map(|x| engine.label(x));
        let desired_label = engine.label(r.desired_output);
        per_move.push(MoveEvaluation {
            move_number: r.move_number,
            inferred_wr: inferred,
            desired_wr: r.desired_output,
            matched: inferred_label.as_deref() == Some(desired_label.as_str()),
            inferred_label,
            desired_label,
        });
    }
    Ok(EvaluationReport {
        game_id: game_id.to_string(),
        record_count: records.len(),
        semantic_accuracy_before: semantic_accuracy(before, records).map_err(|e| invalid(&e))?,
        semantic_accuracy_after: semantic_accuracy(after, records).map_err(|e| invalid(&e))?,
        fitness_before: controller_fitness(before, records).map_err(|e| invalid(&e))?,
        fitness_after: controller_fitness(after, records).map_err(|e| invalid(&e))?,
        accuracy_definition: ACCURACY_DEFINITION.to_string(),
        per_move,
    })
}

pub fn write_report(path: &Path, report: &EvaluationReport) -> Result<(), DataError> {
    write_file(path, &pretty_json(report))
}

pub fn read_report(path: &Path) -> Result<EvaluationReport, DataError> {
    let text = read_file(path)?;
    serde_json::from_str(&text)
        .map_err(|e| DataError::schema(&path.display().to_string(), e.to_string()))
}
