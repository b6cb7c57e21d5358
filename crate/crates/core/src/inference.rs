//! Mamdani inference: fuzzification, MIN/MAX rule firing, clip-then-MAX
//! aggregation and centroid defuzzification.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::fml::{Connector, FuzzyController, FuzzyTerm, FuzzyVariable, TrapezoidShape, VarType};
use crate::preprocess::MoveFeatureRecord;

/// Number of midpoint samples used to integrate the aggregated output surface.
pub const CENTROID_SAMPLES: usize = 1001;

/// Membership differences below this are treated as ties when labelling.
pub const LABEL_TIE_EPSILON: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("value {value} for {variable} lies outside its domain [{left}, {right}]")]
    OutOfDomain {
        variable: String,
        value: f64,
        left: f64,
        right: f64,
    },
    #[error("no rule fired")]
    NoRuleFired,
    #[error("rule {rule} references unknown variable {variable}")]
    UnknownVariable { rule: String, variable: String },
    #[error("rule {rule} references unknown term {term} of {variable}")]
    UnknownTerm {
        rule: String,
        variable: String,
        term: String,
    },
    #[error("no crisp value supplied for input variable {variable}")]
    MissingInput { variable: String },
    #[error("{variable} is not an input variable of the controller")]
    UnexpectedInput { variable: String },
    #[error("controller must declare exactly one output variable, found {found}")]
    OutputCount { found: usize },
    #[error("rule {rule} concludes on {variable}, which is not the output variable")]
    ForeignConsequent { rule: String, variable: String },
    #[error("dataset is empty")]
    EmptyDataset,
}

/// Crisp values keyed by input-variable name.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CrispInput(BTreeMap<String, f64>);

impl CrispInput {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, variable: impl Into<String>, value: f64) -> Self {
        self.0.insert(variable.into(), value);
        self
    }

    pub fn insert(&mut self, variable: impl Into<String>, value: f64) {
        self.0.insert(variable.into(), value);
    }

    pub fn get(&self, variable: &str) -> Option<f64> {
        self.0.get(variable).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.0.iter().map(|(k, v)| (k.as_str(), *v))
    }
}

impl From<&MoveFeatureRecord> for CrispInput {
    fn from(r: &MoveFeatureRecord) -> Self {
        MoveFeatureRecord::INPUT_NAMES
            .iter()
            .zip(r.inputs())
            .fold(CrispInput::new(), |acc, (name, value)| {
                acc.with(*name, value)
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InferenceResult {
    pub crisp_output: f64,
    pub label: String,
    pub fired_rules: Vec<(String, f64)>,
}

pub fn trapezoid_membership(shape: &TrapezoidShape, x: f64) -> f64 {
    shape.membership(x)
}

fn check_domain(variable: &FuzzyVariable, x: f64) -> Result<(), InferenceError> {
    if variable.contains(x) {
        Ok(())
    } else {
        Err(InferenceError::OutOfDomain {
            variable: variable.name.clone(),
            value: x,
            left: variable.domain_left,
            right: variable.domain_right,
        })
    }
}

/// Degree of every term of `variable` at `x`, in declaration order.
pub fn fuzzify(variable: &FuzzyVariable, x: f64) -> Result<Vec<(String, f64)>, InferenceError> {
    check_domain(variable, x)?;
    Ok(variable
        .terms
        .iter()
        .map(|t| (t.name.clone(), t.shape.membership(x)))
        .collect())
}

/// Term with the highest membership at `x`; near-ties go to the earliest term.
pub fn linguistic_label(variable: &FuzzyVariable, x: f64) -> Result<String, InferenceError> {
    check_domain(variable, x)?;
    Ok(best_term(&variable.terms, x).name.clone())
}

fn best_term(terms: &[FuzzyTerm], x: f64) -> &FuzzyTerm {
    let mut best = &terms[0];
    let mut best_degree = best.shape.membership(x);
    for term in &terms[1..] {
        let degree = term.shape.membership(x);
        if degree > best_degree + LABEL_TIE_EPSILON {
            best = term;
            best_degree = degree;
        }
    }
    best
}

#[derive(Debug, Clone)]
struct CompiledInput {
    name: String,
    left: f64,
    right: f64,
    shapes: Vec<TrapezoidShape>,
}

#[derive(Debug, Clone)]
struct CompiledRule {
    name: String,
    connector: Connector,
    weight: f64,
    antecedent: Vec<(usize, usize)>,
    consequent: Vec<usize>,
}

/// A controller with every name resolved to an index and the output
/// membership functions pre-sampled on the centroid grid.
#[derive(Debug, Clone)]
pub struct Engine {
    inputs: Vec<CompiledInput>,
    output: FuzzyVariable,
    rules: Vec<CompiledRule>,
    grid: Vec<f64>,
    // output term membership at each grid point, term-major
    samples: Vec<Vec<f64>>,
}

fn midpoint_grid(left: f64, right: f64) -> Vec<f64> {
    let step = (right - left) / CENTROID_SAMPLES as f64;
    (0..CENTROID_SAMPLES)
        .map(|k| left + (k as f64 + 0.5) * step)
        .collect()
}

fn sample_terms(terms: &[FuzzyTerm], grid: &[f64]) -> Vec<Vec<f64>> {
    terms
        .iter()
        .map(|t| grid.iter().map(|&x| t.shape.membership(x)).collect())
        .collect()
}

/// Centroid of `max_t min(activation_t, mu_t(x))` over the grid.
fn centroid(grid: &[f64], samples: &[Vec<f64>], activations: &[f64]) -> Option<f64> {
    let mut moment = 0.0;
    let mut mass = 0.0;
    for (k, &x) in grid.iter().enumerate() {
        let mut mu: f64 = 0.0;
        for (term, &a) in samples.iter().zip(activations) {
            if a > 0.0 {
                mu = mu.max(a.min(term[k]));
            }
        }
        moment += x * mu;
        mass += mu;
    }
    (mass > 0.0).then(|| moment / mass)
}

impl Engine {
    pub fn new(controller: &FuzzyController) -> Result<Self, InferenceError> {
        let outputs: Vec<&FuzzyVariable> = controller.outputs().collect();
        let [output] = outputs[..] else {
            return Err(InferenceError::OutputCount {
                found: outputs.len(),
            });
        };
        let input_vars: Vec<&FuzzyVariable> = controller.inputs().collect();
        let inputs = input_vars
            .iter()
            .map(|v| CompiledInput {
                name: v.name.clone(),
                left: v.domain_left,
                right: v.domain_right,
                shapes: v.terms.iter().map(|t| t.shape).collect(),
            })
            .collect();

        let mut rules = Vec::with_capacity(controller.rule_base.rules.len());
        for rule in &controller.rule_base.rules {
            let unknown_var = |variable: &str| InferenceError::UnknownVariable {
                rule: rule.name.clone(),
                variable: variable.to_string(),
            };
            let unknown_term = |variable: &str, term: &str| InferenceError::UnknownTerm {
                rule: rule.name.clone(),
                variable: variable.to_string(),
                term: term.to_string(),
            };
            let mut antecedent = Vec::with_capacity(rule.antecedent.len());
            for clause in &rule.antecedent {
                let var_index = input_vars
                    .iter()
                    .position(|v| v.name == clause.variable)
                    .ok_or_else(|| unknown_var(&clause.variable))?;
                let term_index = input_vars[var_index]
                    .term_index(&clause.term)
                    .ok_or_else(|| unknown_term(&clause.variable, &clause.term))?;
                antecedent.push((var_index, term_index));
            }
            let mut consequent = Vec::with_capacity(rule.consequent.len());
            for clause in &rule.consequent {
                if clause.variable != output.name {
                    return Err(match controller.variable(&clause.variable) {
                        None => unknown_var(&clause.variable),
                        Some(_) => InferenceError::ForeignConsequent {
                            rule: rule.name.clone(),
                            variable: clause.variable.clone(),
                        },
                    });
                }
                consequent.push(
                    output
                        .term_index(&clause.term)
                        .ok_or_else(|| unknown_term(&clause.variable, &clause.term))?,
                );
            }
            rules.push(CompiledRule {
                name: rule.name.clone(),
                connector: rule.connector,
                weight: rule.weight,
                antecedent,
                consequent,
            });
        }

        let grid = midpoint_grid(output.domain_left, output.domain_right);
        let samples = sample_terms(&output.terms, &grid);
        Ok(Self {
            inputs,
            output: output.clone(),
            rules,
            grid,
            samples,
        })
    }

    pub fn input_names(&self) -> impl Iterator<Item = &str> {
        self.inputs.iter().map(|i| i.name.as_str())
    }

    pub fn output(&self) -> &FuzzyVariable {
        &self.output
    }

    /// Order input values to match the controller's input declaration order.
    pub fn arrange(&self, input: &CrispInput) -> Result<Vec<f64>, InferenceError> {
        if let Some((name, _)) = input
            .iter()
            .find(|(name, _)| !self.inputs.iter().any(|i| i.name == *name))
        {
            return Err(InferenceError::UnexpectedInput {
                variable: name.to_string(),
            });
        }
        self.inputs
            .iter()
            .map(|i| {
                input
                    .get(&i.name)
                    .ok_or_else(|| InferenceError::MissingInput {
                        variable: i.name.clone(),
                    })
            })
            .collect()
    }

    /// Values for a training record, looked up by input-variable name.
    pub fn arrange_record(&self, record: &MoveFeatureRecord) -> Result<Vec<f64>, InferenceError> {
        self.inputs
            .iter()
            .map(|i| {
                record
                    .input(&i.name)
                    .ok_or_else(|| InferenceError::MissingInput {
                        variable: i.name.clone(),
                    })
            })
            .collect()
    }

    /// Activation degree of every rule, in rule-base order.
    pub fn activations(&self, values: &[f64]) -> Result<Vec<f64>, InferenceError> {
        for (input, &x) in self.inputs.iter().zip(values) {
            if !(x >= input.left && x <= input.right) {
                return Err(InferenceError::OutOfDomain {
                    variable: input.name.clone(),
                    value: x,
                    left: input.left,
                    right: input.right,
                });
            }
        }
        Ok(self
            .rules
            .iter()
            .map(|rule| {
                let degrees = rule
                    .antecedent
                    .iter()
                    .map(|&(v, t)| self.inputs[v].shapes[t].membership(values[v]));
                let combined = match rule.connector {
                    Connector::And => degrees.fold(1.0, f64::min),
                    Connector::Or => degrees.fold(0.0, f64::max),
                };
                rule.weight * combined
            })
            .collect())
    }

    /// Per-output-term activation: MAX over the rules concluding each term.
    pub fn term_activations(&self, rule_activations: &[f64]) -> Vec<f64> {
        let mut acts = vec![0.0; self.output.terms.len()];
        for (rule, &a) in self.rules.iter().zip(rule_activations) {
            for &t in &rule.consequent {
                acts[t] = f64::max(acts[t], a);
            }
        }
        acts
    }

    /// Crisp output for values already arranged in input order.
    pub fn crisp(&self, values: &[f64]) -> Result<f64, InferenceError> {
        let rule_acts = self.activations(values)?;
        let term_acts = self.term_activations(&rule_acts);
        centroid(&self.grid, &self.samples, &term_acts).ok_or(InferenceError::NoRuleFired)
    }

    pub fn infer(&self, input: &CrispInput) -> Result<InferenceResult, InferenceError> {
        let values = self.arrange(input)?;
        let rule_acts = self.activations(&values)?;
        let term_acts = self.term_activations(&rule_acts);
        let crisp_output =
            centroid(&self.grid, &self.samples, &term_acts).ok_or(InferenceError::NoRuleFired)?;
        Ok(InferenceResult {
            crisp_output,
            label: self.label(crisp_output),
            fired_rules: self
                .rules
                .iter()
                .zip(rule_acts)
                .map(|(r, a)| (r.name.clone(), a))
                .collect(),
        })
    }

    /// Label of `x` on the output variable; `x` is clamped into the domain.
    pub fn label(&self, x: f64) -> String {
        let x = x.clamp(self.output.domain_left, self.output.domain_right);
        best_term(&self.output.terms, x).name.clone()
    }
}

/// Activation of each rule, paired with its name.
pub fn fire_rules(
    controller: &FuzzyController,
    input: &CrispInput,
) -> Result<Vec<(String, f64)>, InferenceError> {
    let engine = Engine::new(controller)?;
    let values = engine.arrange(input)?;
    let acts = engine.activations(&values)?;
    Ok(controller
        .rule_base
        .rules
        .iter()
        .zip(acts)
        .map(|(r, a)| (r.name.clone(), a))
        .collect())
}

/// Centroid of the clipped, MAX-aggregated output terms. Terms missing from
/// `activations` count as zero.
pub fn defuzzify_centroid(
    output: &FuzzyVariable,
    activations: &BTreeMap<String, f64>,
) -> Result<f64, InferenceError> {
    if let Some(name) = activations.keys().find(|n| output.term(n).is_none()) {
        return Err(InferenceError::UnknownTerm {
            rule: String::new(),
            variable: output.name.clone(),
            term: name.clone(),
        });
    }
    let acts: Vec<f64> = output
        .terms
        .iter()
        .map(|t| activations.get(&t.name).copied().unwrap_or(0.0))
        .collect();
    let grid = midpoint_grid(output.domain_left, output.domain_right);
    let samples = sample_terms(&output.terms, &grid);
    centroid(&grid, &samples, &acts).ok_or(InferenceError::NoRuleFired)
}

pub fn infer(
    controller: &FuzzyController,
    input: &CrispInput,
) -> Result<InferenceResult, InferenceError> {
    Engine::new(controller)?.infer(input)
}

/// Fraction of records whose inferred WR label equals the label of the
/// desired output. Records for which no rule fires count as mismatches.
pub fn semantic_accuracy(
    controller: &FuzzyController,
    records: &[MoveFeatureRecord],
) -> Result<f64, InferenceError> {
    if records.is_empty() {
        return Err(InferenceError::EmptyDataset);
    }
    let engine = Engine::new(controller)?;
    let mut hits = 0usize;
    for record in records {
        let values = engine.arrange_record(record)?;
        match engine.crisp(&values) {
            Ok(wr) => {
                if engine.label(wr) == engine.label(record.desired_output) {
                    hits += 1;
                }
            }
            Err(InferenceError::NoRuleFired) => {}
            Err(e) => return Err(e),
        }
    }
    Ok(hits as f64 / records.len() as f64)
}

/// Win-rate variable with the expert trapezoids, used for situation phrases.
pub fn reference_win_rate() -> FuzzyVariable {
    FuzzyVariable::new(
        "WR",
        0.0,
        1.0,
        VarType::Output,
        vec![
            FuzzyTerm::new("VeryLow", TrapezoidShape::new(0.0, 0.0, 0.35, 0.4)),
            FuzzyTerm::new("Low", TrapezoidShape::new(0.35, 0.4, 0.5, 0.6)),
            FuzzyTerm::new("High", TrapezoidShape::new(0.5, 0.6, 0.7, 0.8)),
            FuzzyTerm::new("VeryHigh", TrapezoidShape::new(0.7, 0.8, 1.0, 1.0)),
        ],
    )
}

/// Spoken game-situation phrase for a win rate seen from Black's side.
pub fn situation_phrase(black_win_rate: f64) -> Result<&'static str, InferenceError> {
    let label = linguistic_label(&reference_win_rate(), black_win_rate)?;
    Ok(match label.as_str() {
        "VeryLow" => "Black may be at a disadvantage",
        "Low" => "The winner still hasn't been determined",
        "High" => "Black is at an advantage",
        _ => "Black may win",
    })
}
