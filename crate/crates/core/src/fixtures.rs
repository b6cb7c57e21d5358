//! Knowledge bases shipped with the crate.
//!
//! `single_rule_controller` holds the seven Go win-rate variables with their expert
//! trapezoids and the single all-Low rule. `expert_controller` keeps the same
//! knowledge base but adds a rule base that fires for every input, which is
//! what learning and synthetic sessions need.

use crate::fml::{parse_fml, FuzzyController};

pub const SINGLE_RULE_CONTROLLER_XML: &str = include_str!("../fixtures/single_rule_controller.xml");
pub const EXPERT_CONTROLLER_XML: &str = include_str!("../fixtures/expert_controller.xml");
/// The partial knowledge/rule base listing (only ALD declared) as a standalone document.
pub const KB_RB_SNIPPET_XML: &str = include_str!("../fixtures/kb_rb_snippet.xml");

pub fn single_rule_controller() -> FuzzyController {
    parse_fml(SINGLE_RULE_CONTROLLER_XML).expect("bundled fixture parses")
}

pub fn expert_controller() -> FuzzyController {
    parse_fml(EXPERT_CONTROLLER_XML).expect("bundled fixture parses")
}
