use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;

use super::model::*;
use super::ParseError;

/// Minimal element tree; FML documents are small enough to hold in memory.
#[derive(Debug)]
struct Node {
    name: String,
    attrs: Vec<(String, String)>,
    children: Vec<Node>,
    text: String,
    line: usize,
}

fn line_of(src: &str, byte_offset: usize) -> usize {
    let end = byte_offset.min(src.len());
    src.as_bytes()[..end]
        .iter()
        .filter(|&&b| b == b'\n')
        .count()
        + 1
}

fn start_node(src: &str, e: &BytesStart<'_>, offset: usize) -> Result<Node, ParseError> {
    // `offset` is where the previous event ended; the tag starts at the next '<'.
    let tag_start = src[offset.min(src.len())..]
        .find('<')
        .map_or(offset, |i| offset + i);
    let line = line_of(src, tag_start);
    let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
    let mut attrs = Vec::new();
    for attr in e.attributes() {
        let attr = attr.map_err(|err| ParseError::Xml {
            line,
            message: err.to_string(),
        })?;
        let key = String::from_utf8_lossy(attr.key.as_ref()).into_owned();
        let value = attr
            .unescape_value()
            .map_err(|err| ParseError::Xml {
                line,
                message: err.to_string(),
            })?
            .into_owned();
        attrs.push((key, value));
    }
    Ok(Node {
        name,
        attrs,
        children: Vec::new(),
        text: String::new(),
        line,
    })
}

fn build_tree(src: &str) -> Result<Node, ParseError> {
    let mut reader = Reader::from_str(src);
    reader.config_mut().trim_text(true);
    let mut stack: Vec<Node> = Vec::new();
    let mut root: Option<Node> = None;

    loop {
        let offset = reader.buffer_position() as usize;
        let event = reader.read_event().map_err(|err| ParseError::Xml {
            line: line_of(src, reader.error_position() as usize),
            message: err.to_string(),
        })?;
        match event {
            Event::Start(e) => stack.push(start_node(src, &e, offset)?),
            Event::Empty(e) => {
                let node = start_node(src, &e, offset)?;
                attach(&mut stack, &mut root, node, src, offset)?;
            }
            Event::End(_) => {
                let node = stack.pop().ok_or_else(|| ParseError::Xml {
                    line: line_of(src, offset),
                    message: "unbalanced closing tag".into(),
                })?;
                attach(&mut stack, &mut root, node, src, offset)?;
            }
            Event::Text(t) => {
                let text = t.unescape().map_err(|err| ParseError::Xml {
                    line: line_of(src, offset),
                    message: err.to_string(),
                })?;
                match stack.last_mut() {
                    Some(parent) => parent.text.push_str(&text),
                    None if text.trim().is_empty() => {}
                    None => {
                        return Err(ParseError::Xml {
                            line: line_of(src, offset),
                            message: "text outside the root element".into(),
                        })
                    }
                }
            }
            Event::CData(t) => {
                if let Some(parent) = stack.last_mut() {
                    parent.text.push_str(&String::from_utf8_lossy(&t));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }

    if let Some(open) = stack.last() {
        return Err(ParseError::Xml {
            line: open.line,
            message: format!("element <{}> is never closed", open.name),
        });
    }
    root.ok_or(ParseError::Xml {
        line: 1,
        message: "document has no root element".into(),
    })
}

fn attach(
    stack: &mut [Node],
    root: &mut Option<Node>,
    node: Node,
    src: &str,
    offset: usize,
) -> Result<(), ParseError> {
    match stack.last_mut() {
        Some(parent) => parent.children.push(node),
        None if root.is_none() => *root = Some(node),
        None => {
            return Err(ParseError::Xml {
                line: line_of(src, offset),
                message: "more than one root element".into(),
            })
        }
    }
    Ok(())
}

impl Node {
    fn attr(&self, key: &str) -> Option<&str> {
        self.attrs
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn required(&self, key: &str) -> Result<&str, ParseError> {
        self.attr(key).ok_or_else(|| ParseError::MissingAttribute {
            element: self.name.clone(),
            attribute: key.to_string(),
            line: self.line,
        })
    }

    fn invalid(&self, key: &str, value: &str, reason: impl Into<String>) -> ParseError {
        ParseError::InvalidAttribute {
            element: self.name.clone(),
            attribute: key.to_string(),
            value: value.to_string(),
            line: self.line,
            reason: reason.into(),
        }
    }

    fn number(&self, key: &str) -> Result<f64, ParseError> {
        let raw = self.required(key)?;
        parse_real(raw).ok_or_else(|| self.invalid(key, raw, "expected a finite decimal number"))
    }

    fn optional_number(&self, key: &str, default: f64) -> Result<f64, ParseError> {
        match self.attr(key) {
            None => Ok(default),
            Some(raw) => parse_real(raw)
                .ok_or_else(|| self.invalid(key, raw, "expected a finite decimal number")),
        }
    }

    fn parsed<T: FromStr<Err = String>>(&self, key: &str) -> Result<T, ParseError> {
        let raw = self.required(key)?;
        raw.parse().map_err(|reason| self.invalid(key, raw, reason))
    }

    fn optional_parsed<T: FromStr<Err = String>>(
        &self,
        key: &str,
        default: T,
    ) -> Result<T, ParseError> {
        match self.attr(key) {
            None => Ok(default),
            Some(raw) => raw.parse().map_err(|reason| self.invalid(key, raw, reason)),
        }
    }

    fn extras(&self, known: &[&str]) -> ExtraAttributes {
        self.attrs
            .iter()
            .filter(|(k, _)| !known.contains(&k.as_str()))
            .cloned()
            .collect()
    }

    fn unexpected(&self, child: &Node) -> ParseError {
        ParseError::UnexpectedElement {
            element: child.name.clone(),
            parent: self.name.clone(),
            line: child.line,
        }
    }

    fn missing(&self, child: &str) -> ParseError {
        ParseError::MissingElement {
            element: self.name.clone(),
            child: child.to_string(),
            line: self.line,
        }
    }
}

fn parse_real(raw: &str) -> Option<f64> {
    raw.trim().parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Parse an FML document into a [`FuzzyController`].
pub fn parse_fml(document: &str) -> Result<FuzzyController, ParseError> {
    let root = build_tree(document)?;
    if root.name != "FuzzyController" {
        return Err(ParseError::UnexpectedElement {
            element: root.name.clone(),
            parent: "document".into(),
            line: root.line,
        });
    }

    let mut knowledge_base = None;
    let mut rule_base = None;
    for child in &root.children {
        match child.name.as_str() {
            "KnowledgeBase" if knowledge_base.is_none() => knowledge_base = Some(child),
            "RuleBase" if rule_base.is_none() => rule_base = Some(child),
            _ => return Err(root.unexpected(child)),
        }
    }
    let kb_node = knowledge_base.ok_or_else(|| root.missing("KnowledgeBase"))?;

    let variables = kb_node
        .children
        .iter()
        .map(|n| match n.name.as_str() {
            "FuzzyVariable" => parse_variable(n),
            _ => Err(kb_node.unexpected(n)),
        })
        .collect::<Result<Vec<_>, _>>()?;

    let rule_base = match rule_base {
        Some(node) => parse_rule_base(node)?,
        None => RuleBase::default(),
    };

    Ok(FuzzyController {
        name: root.attr("name").unwrap_or_default().to_string(),
        ip: root.attr("ip").unwrap_or_default().to_string(),
        knowledge_base: variables,
        rule_base,
        extra: root.extras(&["ip", "name"]),
        knowledge_base_extra: kb_node.extras(&[]),
    })
}

fn parse_variable(node: &Node) -> Result<FuzzyVariable, ParseError> {
    let terms = node
        .children
        .iter()
        .map(|n| match n.name.as_str() {
            "FuzzyTerm" => parse_term(n),
            _ => Err(node.unexpected(n)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FuzzyVariable {
        name: node.required("name")?.to_string(),
        domain_left: node.number("domainleft")?,
        domain_right: node.number("domainright")?,
        scale: node.attr("scale").unwrap_or_default().to_string(),
        var_type: node.parsed("type")?,
        terms,
        extra: node.extras(&["domainleft", "domainright", "name", "scale", "type"]),
    })
}

fn parse_term(node: &Node) -> Result<FuzzyTerm, ParseError> {
    let mut shape_node = None;
    for child in &node.children {
        if child.name == "TrapezoidShape" && shape_node.is_none() {
            shape_node = Some(child);
        } else if child.name.ends_with("Shape") {
            return Err(ParseError::UnsupportedShape {
                element: child.name.clone(),
                line: child.line,
            });
        } else {
            return Err(node.unexpected(child));
        }
    }
    let shape_node = shape_node.ok_or_else(|| node.missing("TrapezoidShape"))?;
    let shape = TrapezoidShape::new(
        shape_node.number("Param1")?,
        shape_node.number("Param2")?,
        shape_node.number("Param3")?,
        shape_node.number("Param4")?,
    );
    Ok(FuzzyTerm {
        name: node.required("name")?.to_string(),
        hedge: node.attr("hedge").unwrap_or(NORMAL_HEDGE).to_string(),
        shape,
        extra: node.extras(&["name", "hedge"]),
        shape_extra: shape_node.extras(&["Param1", "Param2", "Param3", "Param4"]),
    })
}

fn parse_rule_base(node: &Node) -> Result<RuleBase, ParseError> {
    let rules = node
        .children
        .iter()
        .map(|n| match n.name.as_str() {
            "Rule" => parse_rule(n),
            _ => Err(node.unexpected(n)),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(RuleBase {
        name: node.attr("name").unwrap_or_default().to_string(),
        rule_base_type: node.required("type")?.to_string(),
        activation_method: node.optional_parsed("activationMethod", Operator::Min)?,
        and_method: node.optional_parsed("andMethod", Operator::Min)?,
        or_method: node.optional_parsed("orMethod", Operator::Max)?,
        rules,
        extra: node.extras(&["activationMethod", "andMethod", "orMethod", "name", "type"]),
    })
}

fn parse_rule(node: &Node) -> Result<Rule, ParseError> {
    let connector: Connector = node.parsed("connector")?;
    let default_operator = match connector {
        Connector::And => Operator::Min,
        Connector::Or => Operator::Max,
    };
    let mut antecedent = None;
    let mut consequent = None;
    for child in &node.children {
        match child.name.as_str() {
            "Antecedent" if antecedent.is_none() => antecedent = Some(parse_clauses(child)?),
            "Consequent" if consequent.is_none() => consequent = Some(parse_clauses(child)?),
            _ => return Err(node.unexpected(child)),
        }
    }
    Ok(Rule {
        name: node.required("name")?.to_string(),
        connector,
        weight: node.optional_number("weight", 1.0)?,
        operator: node.optional_parsed("operator", default_operator)?,
        antecedent: antecedent.ok_or_else(|| node.missing("Antecedent"))?,
        consequent: consequent.ok_or_else(|| node.missing("Consequent"))?,
        extra: node.extras(&["name", "connector", "weight", "operator"]),
    })
}

fn parse_clauses(node: &Node) -> Result<Vec<Clause>, ParseError> {
    node.children
        .iter()
        .map(|clause| {
            if clause.name != "Clause" {
                return Err(node.unexpected(clause));
            }
            let mut variable = None;
            let mut term = None;
            for part in &clause.children {
                match part.name.as_str() {
                    "Variable" if variable.is_none() => variable = Some(part.text.trim()),
                    "Term" if term.is_none() => term = Some(part.text.trim()),
                    _ => return Err(clause.unexpected(part)),
                }
            }
            Ok(Clause::new(
                variable.ok_or_else(|| clause.missing("Variable"))?,
                term.ok_or_else(|| clause.missing("Term"))?,
            ))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"<?xml version="1.0"?>
<FuzzyController ip="localhost" name="tiny">
  <KnowledgeBase>
    <FuzzyVariable domainleft="0" domainright="1" name="X" scale="" type="input">
      <FuzzyTerm name="All" hedge="Normal">
        <TrapezoidShape Param1="0" Param2="0" Param3="1" Param4="1" />
      </FuzzyTerm>
    </FuzzyVariable>
  </KnowledgeBase>
  <RuleBase activationMethod="MIN" andMethod="MIN" orMethod="MAX" name="rb" type="mamdani"/>
</FuzzyController>"#;

    #[test]
    fn minimal_document() {
        let c = parse_fml(MINIMAL).unwrap();
        assert_eq!(c.name, "tiny");
        assert_eq!(c.knowledge_base.len(), 1);
        assert_eq!(
            c.knowledge_base[0].terms[0].shape,
            TrapezoidShape::new(0.0, 0.0, 1.0, 1.0)
        );
        assert!(c.rule_base.rules.is_empty());
    }

    #[test]
    fn triangle_is_unsupported() {
        let doc = MINIMAL.replace(
            r#"<TrapezoidShape Param1="0" Param2="0" Param3="1" Param4="1" />"#,
            r#"<TriangleShape Param1="0" Param2="0.5" Param3="1" />"#,
        );
        match parse_fml(&doc) {
            Err(ParseError::UnsupportedShape { element, line }) => {
                assert_eq!(element, "TriangleShape");
                assert_eq!(line, 6);
            }
            other => panic!("expected UnsupportedShape, got {other:?}"),
        }
    }

    #[test]
    fn missing_attribute_names_the_element() {
        let doc = MINIMAL.replace(r#"domainright="1" "#, "");
        match parse_fml(&doc) {
            Err(ParseError::MissingAttribute {
                element,
                attribute,
                line,
            }) => {
                assert_eq!(element, "FuzzyVariable");
                assert_eq!(attribute, "domainright");
                assert_eq!(line, 4);
            }
            other => panic!("expected MissingAttribute, got {other:?}"),
        }
    }

    #[test]
    fn malformed_xml_reports_line() {
        let doc = MINIMAL.replace("</FuzzyTerm>", "</FuzzyTermX>");
        match parse_fml(&doc) {
            Err(ParseError::Xml { line, .. }) => assert_eq!(line, 7),
            other => panic!("expected Xml error, got {other:?}"),
        }
        assert!(matches!(
            parse_fml("<FuzzyController><KnowledgeBase>"),
            Err(ParseError::Xml { .. })
        ));
    }

    #[test]
    fn attribute_spelling_is_exact() {
        let doc = MINIMAL.replace("domainleft", "domainLeft");
        assert!(matches!(
            parse_fml(&doc),
            Err(ParseError::MissingAttribute { attribute, .. }) if attribute == "domainleft"
        ));
    }

    #[test]
    fn bad_number_is_rejected() {
        let doc = MINIMAL.replace(r#"Param3="1""#, r#"Param3="one""#);
        assert!(matches!(
            parse_fml(&doc),
            Err(ParseError::InvalidAttribute { attribute, .. }) if attribute == "Param3"
        ));
    }

    #[test]
    fn extra_attributes_are_kept() {
        let doc = MINIMAL.replace(r#"hedge="Normal""#, r#"hedge="Normal" complement="false""#);
        let c = parse_fml(&doc).unwrap();
        assert_eq!(
            c.knowledge_base[0].terms[0].extra,
            vec![("complement".to_string(), "false".to_string())]
        );
    }
}
