use std::fmt;
use std::str::FromStr;

/// Attributes we do not interpret, kept in document order so they can be re-emitted.
pub type ExtraAttributes = Vec<(String, String)>;

/// Four abscissae of a trapezoidal membership function, in the owning variable's units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapezoidShape {
    pub p1: f64,
    pub p2: f64,
    pub p3: f64,
    pub p4: f64,
}

impl TrapezoidShape {
    pub const fn new(p1: f64, p2: f64, p3: f64, p4: f64) -> Self {
        Self { p1, p2, p3, p4 }
    }

    pub fn params(&self) -> [f64; 4] {
        [self.p1, self.p2, self.p3, self.p4]
    }

    pub fn is_monotone(&self) -> bool {
        self.p1 <= self.p2 && self.p2 <= self.p3 && self.p3 <= self.p4
    }

    /// Membership degree at `x`.
    ///
    /// Zero outside `[p1, p4]`, one on the plateau `[p2, p3]`, linear on the
    /// two edges. A vertical edge (`p1 == p2` or `p3 == p4`) has degree one at
    /// the shared abscissa.
    pub fn membership(&self, x: f64) -> f64 {
        let TrapezoidShape { p1, p2, p3, p4 } = *self;
        let degree = if x < p1 || x > p4 {
            0.0
        } else if x >= p2 && x <= p3 {
            1.0
        } else if x < p2 {
            (x - p1) / (p2 - p1)
        } else {
            (p4 - x) / (p4 - p3)
        };
        if degree.is_nan() {
            0.0
        } else {
            degree.clamp(0.0, 1.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyTerm {
    pub name: String,
    pub hedge: String,
    pub shape: TrapezoidShape,
    pub extra: ExtraAttributes,
    /// Unrecognised attributes found on the `TrapezoidShape` element.
    pub shape_extra: ExtraAttributes,
}

impl FuzzyTerm {
    pub fn new(name: impl Into<String>, shape: TrapezoidShape) -> Self {
        Self {
            name: name.into(),
            hedge: NORMAL_HEDGE.to_string(),
            shape,
            extra: Vec::new(),
            shape_extra: Vec::new(),
        }
    }
}

pub const NORMAL_HEDGE: &str = "Normal";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum VarType {
    Input,
    Output,
}

impl VarType {
    pub fn as_str(self) -> &'static str {
        match self {
            VarType::Input => "input",
            VarType::Output => "output",
        }
    }
}

impl FromStr for VarType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "input" => Ok(VarType::Input),
            "output" => Ok(VarType::Output),
            other => Err(format!("unknown variable type {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyVariable {
    pub name: String,
    pub domain_left: f64,
    pub domain_right: f64,
    pub scale: String,
    pub var_type: VarType,
    pub terms: Vec<FuzzyTerm>,
    pub extra: ExtraAttributes,
}

impl FuzzyVariable {
    pub fn new(
        name: impl Into<String>,
        domain_left: f64,
        domain_right: f64,
        var_type: VarType,
        terms: Vec<FuzzyTerm>,
    ) -> Self {
        Self {
            name: name.into(),
            domain_left,
            domain_right,
            scale: String::new(),
            var_type,
            terms,
            extra: Vec::new(),
        }
    }

    pub fn term(&self, name: &str) -> Option<&FuzzyTerm> {
        self.terms.iter().find(|t| t.name == name)
    }

    pub fn term_index(&self, name: &str) -> Option<usize> {
        self.terms.iter().position(|t| t.name == name)
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.domain_left && x <= self.domain_right
    }

    pub fn width(&self) -> f64 {
        self.domain_right - self.domain_left
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connector {
    And,
    Or,
}

impl Connector {
    pub fn as_str(self) -> &'static str {
        match self {
            Connector::And => "and",
            Connector::Or => "or",
        }
    }
}

impl FromStr for Connector {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "and" => Ok(Connector::And),
            "or" => Ok(Connector::Or),
            other => Err(format!("unknown connector {other:?}")),
        }
    }
}

/// T-norm / t-conorm names used by rule and rule-base attributes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Operator {
    Min,
    Max,
}

impl Operator {
    pub fn as_str(self) -> &'static str {
        match self {
            Operator::Min => "MIN",
            Operator::Max => "MAX",
        }
    }
}

impl FromStr for Operator {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "MIN" => Ok(Operator::Min),
            "MAX" => Ok(Operator::Max),
            other => Err(format!("unknown operator {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Clause {
    pub variable: String,
    pub term: String,
}

impl Clause {
    pub fn new(variable: impl Into<String>, term: impl Into<String>) -> Self {
        Self {
            variable: variable.into(),
            term: term.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub name: String,
    pub connector: Connector,
    pub weight: f64,
    pub operator: Operator,
    pub antecedent: Vec<Clause>,
    pub consequent: Vec<Clause>,
    pub extra: ExtraAttributes,
}

impl Rule {
    pub fn new(
        name: impl Into<String>,
        connector: Connector,
        antecedent: Vec<Clause>,
        consequent: Vec<Clause>,
    ) -> Self {
        Self {
            name: name.into(),
            connector,
            weight: 1.0,
            operator: match connector {
                Connector::And => Operator::Min,
                Connector::Or => Operator::Max,
            },
            antecedent,
            consequent,
            extra: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleBase {
    pub name: String,
    pub rule_base_type: String,
    pub activation_method: Operator,
    pub and_method: Operator,
    pub or_method: Operator,
    pub rules: Vec<Rule>,
    pub extra: ExtraAttributes,
}

pub const MAMDANI: &str = "mamdani";

impl Default for RuleBase {
    fn default() -> Self {
        Self {
            name: String::new(),
            rule_base_type: MAMDANI.to_string(),
            activation_method: Operator::Min,
            and_method: Operator::Min,
            or_method: Operator::Max,
            rules: Vec::new(),
            extra: Vec::new(),
        }
    }
}

/// A complete FML document: knowledge base plus rule base.
#[derive(Debug, Clone, PartialEq)]
pub struct FuzzyController {
    pub name: String,
    pub ip: String,
    pub knowledge_base: Vec<FuzzyVariable>,
    pub rule_base: RuleBase,
    pub extra: ExtraAttributes,
    /// Unrecognised attributes on the `KnowledgeBase` element.
    pub knowledge_base_extra: ExtraAttributes,
}

impl FuzzyController {
    pub fn new(knowledge_base: Vec<FuzzyVariable>, rule_base: RuleBase) -> Self {
        Self {
            name: String::new(),
            ip: "localhost".to_string(),
            knowledge_base,
            rule_base,
            extra: Vec::new(),
            knowledge_base_extra: Vec::new(),
        }
    }

    pub fn variable(&self, name: &str) -> Option<&FuzzyVariable> {
        self.knowledge_base.iter().find(|v| v.name == name)
    }

    pub fn inputs(&self) -> impl Iterator<Item = &FuzzyVariable> {
        self.knowledge_base
            .iter()
            .filter(|v| v.var_type == VarType::Input)
    }

    pub fn outputs(&self) -> impl Iterator<Item = &FuzzyVariable> {
        self.knowledge_base
            .iter()
            .filter(|v| v.var_type == VarType::Output)
    }

    /// True when both controllers declare the same variables (name, type,
    /// domain and term names, in order). Parameters and rules may differ.
    pub fn same_variable_structure(&self, other: &FuzzyController) -> bool {
        self.knowledge_base.len() == other.knowledge_base.len()
            && self
                .knowledge_base
                .iter()
                .zip(&other.knowledge_base)
                .all(|(a, b)| {
                    a.name == b.name
                        && a.var_type == b.var_type
                        && a.domain_left == b.domain_left
                        && a.domain_right == b.domain_right
                        && a.terms.len() == b.terms.len()
                        && a.terms.iter().zip(&b.terms).all(|(s, t)| s.name == t.name)
                })
    }
}

impl fmt::Display for TrapezoidShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}, {}, {}]", self.p1, self.p2, self.p3, self.p4)
    }
}
