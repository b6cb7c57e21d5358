use std::collections::HashSet;
use std::fmt;

use super::model::*;

/// A broken invariant found by [`validate_controller`].
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateVariable {
        variable: String,
    },
    EmptyDomain {
        variable: String,
    },
    NoTerms {
        variable: String,
    },
    EmptyTermName {
        variable: String,
    },
    DuplicateTerm {
        variable: String,
        term: String,
    },
    NonFiniteParams {
        variable: String,
        term: String,
    },
    NonMonotoneParams {
        variable: String,
        term: String,
        shape: TrapezoidShape,
    },
    ParamsOutOfDomain {
        variable: String,
        term: String,
        shape: TrapezoidShape,
    },
    UnsupportedHedge {
        variable: String,
        term: String,
        hedge: String,
    },
    CoverageGap {
        variable: String,
        at: f64,
    },
    DomainMismatch {
        variable: String,
        expected: (f64, f64),
        found: (f64, f64),
    },
    UnsupportedRuleBaseType {
        found: String,
    },
    DuplicateRule {
        rule: String,
    },
    WeightOutOfRange {
        rule: String,
        weight: f64,
    },
    EmptyAntecedent {
        rule: String,
    },
    EmptyConsequent {
        rule: String,
    },
    EmptyClause {
        rule: String,
    },
    UnknownVariable {
        rule: String,
        variable: String,
    },
    UnknownTerm {
        rule: String,
        variable: String,
        term: String,
    },
    AntecedentNotInput {
        rule: String,
        variable: String,
    },
    ConsequentNotOutput {
        rule: String,
        variable: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            DuplicateVariable { variable } => {
                write!(f, "variable {variable} declared more than once")
            }
            EmptyDomain { variable } => write!(
                f,
                "variable {variable}: domainleft must be below domainright"
            ),
            NoTerms { variable } => write!(f, "variable {variable} has no terms"),
            EmptyTermName { variable } => {
                write!(f, "variable {variable} has a term with an empty name")
            }
            DuplicateTerm { variable, term } => write!(
                f,
                "variable {variable}: term {term} declared more than once"
            ),
            NonFiniteParams { variable, term } => {
                write!(f, "{variable}.{term}: non-finite trapezoid parameter")
            }
            NonMonotoneParams {
                variable,
                term,
                shape,
            } => {
                write!(
                    f,
                    "{variable}.{term}: trapezoid {shape} is not ordered p1<=p2<=p3<=p4"
                )
            }
            ParamsOutOfDomain {
                variable,
                term,
                shape,
            } => {
                write!(
                    f,
                    "{variable}.{term}: trapezoid {shape} leaves the variable domain"
                )
            }
            UnsupportedHedge {
                variable,
                term,
                hedge,
            } => {
                write!(f, "{variable}.{term}: unsupported hedge {hedge:?}")
            }
            CoverageGap { variable, at } => {
                write!(f, "variable {variable}: no term covers x = {at}")
            }
            DomainMismatch {
                variable,
                expected,
                found,
            } => write!(
                f,
                "variable {variable}: domain [{}, {}] differs from the expected [{}, {}]",
                found.0, found.1, expected.0, expected.1
            ),
            UnsupportedRuleBaseType { found } => {
                write!(f, "rule base type {found:?} is not mamdani")
            }
            DuplicateRule { rule } => write!(f, "rule {rule} declared more than once"),
            WeightOutOfRange { rule, weight } => {
                write!(f, "rule {rule}: weight {weight} outside [0, 1]")
            }
            EmptyAntecedent { rule } => write!(f, "rule {rule} has no antecedent clauses"),
            EmptyConsequent { rule } => write!(f, "rule {rule} has no consequent clauses"),
            EmptyClause { rule } => write!(f, "rule {rule} has a clause with an empty field"),
            UnknownVariable { rule, variable } => {
                write!(f, "rule {rule} references unknown variable {variable}")
            }
            UnknownTerm {
                rule,
                variable,
                term,
            } => {
                write!(
                    f,
                    "rule {rule} references unknown term {term} of {variable}"
                )
            }
            AntecedentNotInput { rule, variable } => {
                write!(
                    f,
                    "rule {rule}: antecedent uses non-input variable {variable}"
                )
            }
            ConsequentNotOutput { rule, variable } => {
                write!(
                    f,
                    "rule {rule}: consequent uses non-output variable {variable}"
                )
            }
        }
    }
}

/// Domains of the seven variables of the Go win-rate knowledge base.
pub const KNOWN_DOMAINS: [(&str, f64, f64); 7] = [
    ("ALD", 0.0, 10.0),
    ("BALD", 0.0, 10.0),
    ("SLD", 0.0, 10.0),
    ("FLD", 0.0, 10.0),
    ("SN", 0.0, 2048.0),
    ("TMR", 0.0, 1.0),
    ("WR", 0.0, 1.0),
];

/// Collect every invariant violation; an empty list means the controller is valid.
pub fn validate_controller(controller: &FuzzyController) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for var in &controller.knowledge_base {
        if !seen.insert(var.name.as_str()) {
            out.push(Violation::DuplicateVariable {
                variable: var.name.clone(),
            });
        }
        validate_variable(var, &mut out);
    }
    if controller.rule_base.rule_base_type != MAMDANI {
        out.push(Violation::UnsupportedRuleBaseType {
            found: controller.rule_base.rule_base_type.clone(),
        });
    }
    let mut rule_names = HashSet::new();
    for rule in &controller.rule_base.rules {
        if !rule_names.insert(rule.name.as_str()) {
            out.push(Violation::DuplicateRule {
                rule: rule.name.clone(),
            });
        }
        validate_rule(controller, rule, &mut out);
    }
    out
}

fn validate_variable(var: &FuzzyVariable, out: &mut Vec<Violation>) {
    let name = || var.name.clone();
    let domain_ok = var.domain_left.is_finite()
        && var.domain_right.is_finite()
        && var.domain_left < var.domain_right;
    if !domain_ok {
        out.push(Violation::EmptyDomain { variable: name() });
    }
    if let Some(&(_, lo, hi)) = KNOWN_DOMAINS.iter().find(|(n, _, _)| *n == var.name) {
        if var.domain_left != lo || var.domain_right != hi {
            out.push(Violation::DomainMismatch {
                variable: name(),
                expected: (lo, hi),
                found: (var.domain_left, var.domain_right),
            });
        }
    }
    if var.terms.is_empty() {
        out.push(Violation::NoTerms { variable: name() });
        return;
    }

    let mut term_names = HashSet::new();
    let mut shapes_ok = true;
    for term in &var.terms {
        let term_name = || term.name.clone();
        if term.name.is_empty() {
            out.push(Violation::EmptyTermName { variable: name() });
        } else if !term_names.insert(term.name.as_str()) {
            out.push(Violation::DuplicateTerm {
                variable: name(),
                term: term_name(),
            });
        }
        if term.hedge != NORMAL_HEDGE {
            out.push(Violation::UnsupportedHedge {
                variable: name(),
                term: term_name(),
                hedge: term.hedge.clone(),
            });
        }
        let shape = term.shape;
        if shape.params().iter().any(|p| !p.is_finite()) {
            out.push(Violation::NonFiniteParams {
                variable: name(),
                term: term_name(),
            });
            shapes_ok = false;
            continue;
        }
        if !shape.is_monotone() {
            out.push(Violation::NonMonotoneParams {
                variable: name(),
                term: term_name(),
                shape,
            });
            shapes_ok = false;
        }
        if shape.params().iter().any(|&p| !var.contains(p)) {
            out.push(Violation::ParamsOutOfDomain {
                variable: name(),
                term: term_name(),
                shape,
            });
        }
    }

    if domain_ok && shapes_ok {
        if let Some(at) = first_coverage_gap(var) {
            out.push(Violation::CoverageGap {
                variable: name(),
                at,
            });
        }
    }
}

/// First point of the domain where every term has zero membership.
///
/// Each term's positive set is an interval bounded by its own p1 and p4, so
/// positivity of the union can only change at those abscissae. Probing every
/// breakpoint and one interior point between consecutive breakpoints is exact.
pub fn first_coverage_gap(var: &FuzzyVariable) -> Option<f64> {
    let (lo, hi) = (var.domain_left, var.domain_right);
    let mut points: Vec<f64> = var
        .terms
        .iter()
        .flat_map(|t| [t.shape.p1, t.shape.p4])
        .chain([lo, hi])
        .filter(|p| *p >= lo && *p <= hi)
        .collect();
    points.sort_by(f64::total_cmp);
    points.dedup();

    let covered = |x: f64| var.terms.iter().any(|t| t.shape.membership(x) > 0.0);
    for (i, &p) in points.iter().enumerate() {
        if !covered(p) {
            return Some(p);
        }
        if let Some(&next) = points.get(i + 1) {
            let mid = p + (next - p) / 2.0;
            if mid > p && mid < next && !covered(mid) {
                return Some(mid);
            }
        }
    }
    None
}

fn validate_rule(controller: &FuzzyController, rule: &Rule, out: &mut Vec<Violation>) {
    let rule_name = || rule.name.clone();
    if !(0.0..=1.0).contains(&rule.weight) {
        out.push(Violation::WeightOutOfRange {
            rule: rule_name(),
            weight: rule.weight,
        });
    }
    if rule.antecedent.is_empty() {
        out.push(Violation::EmptyAntecedent { rule: rule_name() });
    }
    if rule.consequent.is_empty() {
        out.push(Violation::EmptyConsequent { rule: rule_name() });
    }
    let sides = [
        (&rule.antecedent, VarType::Input),
        (&rule.consequent, VarType::Output),
    ];
    for (clauses, expected) in sides {
        for clause in clauses {
            if clause.variable.is_empty() || clause.term.is_empty() {
                out.push(Violation::EmptyClause { rule: rule_name() });
                continue;
            }
            let Some(var) = controller.variable(&clause.variable) else {
                out.push(Violation::UnknownVariable {
                    rule: rule_name(),
                    variable: clause.variable.clone(),
                });
                continue;
            };
            if var.term(&clause.term).is_none() {
                out.push(Violation::UnknownTerm {
                    rule: rule_name(),
                    variable: clause.variable.clone(),
                    term: clause.term.clone(),
                });
            }
            if var.var_type != expected {
                out.push(match expected {
                    VarType::Input => Violation::AntecedentNotInput {
                        rule: rule_name(),
                        variable: clause.variable.clone(),
                    },
                    VarType::Output => Violation::ConsequentNotOutput {
                        rule: rule_name(),
                        variable: clause.variable.clone(),
                    },
                });
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn single_rule_fixture_is_valid() {
        assert_eq!(
            validate_controller(&fixtures::single_rule_controller()),
            vec![]
        );
        assert_eq!(validate_controller(&fixtures::expert_controller()), vec![]);
    }

    #[test]
    fn unknown_variable_in_rule() {
        let mut c = fixtures::single_rule_controller();
        c.rule_base.rules[0].antecedent[0].variable = "XYZ".into();
        assert_eq!(
            validate_controller(&c),
            vec![Violation::UnknownVariable {
                rule: "Rule1".into(),
                variable: "XYZ".into()
            }]
        );
    }

    #[test]
    fn non_monotone_trapezoid() {
        let var = FuzzyVariable::new(
            "X",
            0.0,
            10.0,
            VarType::Input,
            vec![
                FuzzyTerm::new("Bad", TrapezoidShape::new(3.0, 4.0, 2.0, 10.0)),
                FuzzyTerm::new("All", TrapezoidShape::new(0.0, 0.0, 10.0, 10.0)),
            ],
        );
        let c = FuzzyController::new(vec![var], RuleBase::default());
        let v = validate_controller(&c);
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0], Violation::NonMonotoneParams { .. }));
    }

    #[test]
    fn coverage_gap_is_found() {
        let var = FuzzyVariable::new(
            "X",
            0.0,
            10.0,
            VarType::Input,
            vec![
                FuzzyTerm::new("Low", TrapezoidShape::new(0.0, 0.0, 2.0, 4.0)),
                FuzzyTerm::new("High", TrapezoidShape::new(4.0, 6.0, 10.0, 10.0)),
            ],
        );
        // both terms are zero exactly at x = 4
        assert_eq!(first_coverage_gap(&var), Some(4.0));

        let mut touching = var.clone();
        touching.terms[1].shape = TrapezoidShape::new(3.0, 6.0, 10.0, 10.0);
        assert_eq!(first_coverage_gap(&touching), None);

        let mut open_right = var;
        open_right.terms[1].shape = TrapezoidShape::new(3.0, 6.0, 8.0, 10.0);
        assert_eq!(first_coverage_gap(&open_right), Some(10.0));
    }

    #[test]
    fn wrong_domain_for_known_variable() {
        let mut c = fixtures::single_rule_controller();
        c.knowledge_base[4].domain_right = 1024.0;
        c.knowledge_base[4].terms[1].shape.p3 = 1024.0;
        c.knowledge_base[4].terms[1].shape.p4 = 1024.0;
        let v = validate_controller(&c);
        assert_eq!(v.len(), 1);
        assert!(matches!(&v[0], Violation::DomainMismatch { variable, .. } if variable == "SN"));
    }

    #[test]
    fn rule_side_checks() {
        let mut c = fixtures::single_rule_controller();
        let rule = &mut c.rule_base.rules[0];
        rule.weight = 1.5;
        rule.antecedent.push(Clause::new("WR", "Low"));
        rule.consequent.push(Clause::new("ALD", "Nope"));
        let v = validate_controller(&c);
        assert!(v.contains(&Violation::WeightOutOfRange {
            rule: "Rule1".into(),
            weight: 1.5
        }));
        assert!(v.contains(&Violation::AntecedentNotInput {
            rule: "Rule1".into(),
            variable: "WR".into()
        }));
        assert!(v.contains(&Violation::ConsequentNotOutput {
            rule: "Rule1".into(),
            variable: "ALD".into()
        }));
        assert!(v.contains(&Violation::UnknownTerm {
            rule: "Rule1".into(),
            variable: "ALD".into(),
            term: "Nope".into()
        }));
    }
}
