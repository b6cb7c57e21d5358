use std::fmt::Write;

use quick_xml::escape::escape;

use super::model::*;

/// Shortest decimal string that parses back to the same `f64`.
pub fn format_real(value: f64) -> String {
    if value == 0.0 {
        // Drop the sign of negative zero so "-0" never shows up in fixtures.
        return "0".to_string();
    }
    format!("{value}")
}

struct Emitter {
    out: String,
}

impl Emitter {
    fn open(
        &mut self,
        depth: usize,
        name: &str,
        attrs: &[(&str, String)],
        extra: &[(String, String)],
        empty: bool,
    ) {
        self.indent(depth);
        self.out.push('<');
        self.out.push_str(name);
        let all = attrs
            .iter()
            .map(|(k, v)| (*k, v.as_str()))
            .chain(extra.iter().map(|(k, v)| (k.as_str(), v.as_str())));
        for (key, value) in all {
            let _ = write!(self.out, " {key}=\"{}\"", escape(value));
        }
        self.out.push_str(if empty { " />\n" } else { ">\n" });
    }

    fn close(&mut self, depth: usize, name: &str) {
        self.indent(depth);
        let _ = writeln!(self.out, "</{name}>");
    }

    fn text_element(&mut self, depth: usize, name: &str, text: &str) {
        self.indent(depth);
        let _ = writeln!(self.out, "<{name}>{}</{name}>", escape(text));
    }

    fn indent(&mut self, depth: usize) {
        for _ in 0..depth {
            self.out.push_str("  ");
        }
    }
}

/// Render a controller as an FML document using the attribute vocabulary and
/// ordering of the reference knowledge base files.
pub fn serialize_fml(controller: &FuzzyController) -> String {
    let mut e = Emitter {
        out: String::from("<?xml version=\"1.0\"?>\n"),
    };
    e.open(
        0,
        "FuzzyController",
        &[
            ("ip", controller.ip.clone()),
            ("name", controller.name.clone()),
        ],
        &controller.extra,
        false,
    );

    e.open(
        1,
        "KnowledgeBase",
        &[],
        &controller.knowledge_base_extra,
        false,
    );
    for var in &controller.knowledge_base {
        e.open(
            2,
            "FuzzyVariable",
            &[
                ("domainleft", format_real(var.domain_left)),
                ("domainright", format_real(var.domain_right)),
                ("name", var.name.clone()),
                ("scale", var.scale.clone()),
                ("type", var.var_type.as_str().to_string()),
            ],
            &var.extra,
            false,
        );
        for term in &var.terms {
            e.open(
                3,
                "FuzzyTerm",
                &[("name", term.name.clone()), ("hedge", term.hedge.clone())],
                &term.extra,
                false,
            );
            let s = term.shape;
            e.open(
                4,
                "TrapezoidShape",
                &[
                    ("Param1", format_real(s.p1)),
                    ("Param2", format_real(s.p2)),
                    ("Param3", format_real(s.p3)),
                    ("Param4", format_real(s.p4)),
                ],
                &term.shape_extra,
                true,
            );
            e.close(3, "FuzzyTerm");
        }
        e.close(2, "FuzzyVariable");
    }
    e.close(1, "KnowledgeBase");

    let rb = &controller.rule_base;
    let rb_attrs = [
        (
            "activationMethod",
            rb.activation_method.as_str().to_string(),
        ),
        ("andMethod", rb.and_method.as_str().to_string()),
        ("orMethod", rb.or_method.as_str().to_string()),
        ("name", rb.name.clone()),
        ("type", rb.rule_base_type.clone()),
    ];
    if rb.rules.is_empty() {
        e.open(1, "RuleBase", &rb_attrs, &rb.extra, true);
    } else {
        e.open(1, "RuleBase", &rb_attrs, &rb.extra, false);
        for rule in &rb.rules {
            e.open(
                2,
                "Rule",
                &[
                    ("name", rule.name.clone()),
                    ("connector", rule.connector.as_str().to_string()),
                    ("weight", format_real(rule.weight)),
                    ("operator", rule.operator.as_str().to_string()),
                ],
                &rule.extra,
                false,
            );
            for (tag, clauses) in [
                ("Antecedent", &rule.antecedent),
                ("Consequent", &rule.consequent),
            ] {
                e.open(3, tag, &[], &[], false);
                for clause in clauses {
                    e.open(4, "Clause", &[], &[], false);
                    e.text_element(5, "Variable", &clause.variable);
                    e.text_element(5, "Term", &clause.term);
                    e.close(4, "Clause");
                }
                e.close(3, tag);
            }
            e.close(2, "Rule");
        }
        e.close(1, "RuleBase");
    }

    e.close(0, "FuzzyController");
    e.out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reals_render_shortest() {
        assert_eq!(format_real(1.0), "1");
        assert_eq!(format_real(0.5), "0.5");
        assert_eq!(format_real(-0.0), "0");
        assert_eq!(format_real(2048.0), "2048");
        let awkward = 0.1 + 0.2;
        assert_eq!(format_real(awkward).parse::<f64>().unwrap(), awkward);
    }
}
