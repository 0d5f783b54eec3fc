use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::data::Problem;
use crate::error::{Error, Result};
use crate::population::Profile;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    ZeroShot,
    MultiPersona,
    SelfConsistency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PromptBundle {
    pub strategy: Strategy,
    pub text: String,
    pub persona: Option<Profile>,
}

/// Render the task, requirement and context sections. The persona, when
/// present, is the first part of the context section; the other sections do
/// not depend on the strategy.
pub fn render_prompt(
    problem: &Problem,
    strategy: Strategy,
    persona: Option<&Profile>,
) -> Result<PromptBundle> {
    match (strategy, persona) {
        (Strategy::MultiPersona, None) => {
            return Err(Error::InvalidArgument(
                "multi_persona prompting needs a persona".into(),
            ))
        }
        (Strategy::ZeroShot | Strategy::SelfConsistency, Some(_)) => {
            return Err(Error::InvalidArgument(
                "only multi_persona prompting takes a persona".into(),
            ))
        }
        _ => {}
    }
    let mut text = String::new();
    let _ = write!(
        text,
        "## Task\n{}\n\n## Requirements\n{}\n{}\n\n## Context\n",
        problem.description,
        problem.requirements,
        problem.scale.instruction()
    );
    if let Some(p) = persona {
        text.push_str("Answer as the person described by this profile.\n");
        for (field, value) in &p.values {
            let _ = writeln!(text, "{field}: {value}");
        }
        text.push('\n');
    }
    text.push_str(&problem.context);
    text.push('\n');
    Ok(PromptBundle {
        strategy,
        text,
        persona: persona.cloned(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DecisionScale;
    use crate::population::ProfileValue;
    use indexmap::IndexMap;

    fn problem() -> Problem {
        Problem::new(
            "p1",
            "How offensive is this remark?",
            "Use the rating scale.",
            "Posted on a sports forum.",
            DecisionScale::likert(1, 5).unwrap(),
            8,
        )
    }

    fn teacher() -> Profile {
        let mut values = IndexMap::new();
        values.insert("Age".to_string(), ProfileValue::Number(30.0));
        values.insert(
            "Occupation".to_string(),
            ProfileValue::Level("teacher".into()),
        );
        Profile {
            participant_id: "v0".into(),
            values,
            encoded: vec![],
        }
    }

    fn section<'a>(text: &'a str, name: &str) -> &'a str {
        let start = text.find(name).unwrap();
        let rest = &text[start..];
        let end = rest[3..].find("## ").map_or(rest.len(), |e| e + 3);
        &rest[..end]
    }

    #[test]
    fn zero_shot_contains_everything() {
        let p = render_prompt(&problem(), Strategy::ZeroShot, None).unwrap();
        for part in [
            "How offensive is this remark?",
            "Use the rating scale.",
            "Posted on a sports forum.",
            "1, 2, 3, 4, 5",
        ] {
            assert!(p.text.contains(part), "{part}");
        }
        assert_eq!(
            p.text,
            render_prompt(&problem(), Strategy::ZeroShot, None)
                .unwrap()
                .text
        );
    }

    #[test]
    fn persona_only_changes_context() {
        let z = render_prompt(&problem(), Strategy::ZeroShot, None)
            .unwrap()
            .text;
        let m = render_prompt(&problem(), Strategy::MultiPersona, Some(&teacher()))
            .unwrap()
            .text;
        assert!(m.contains("Age: 30") && m.contains("Occupation: teacher"));
        assert_eq!(section(&z, "## Task"), section(&m, "## Task"));
        assert_eq!(
            section(&z, "## Requirements"),
            section(&m, "## Requirements")
        );
        assert_ne!(section(&z, "## Context"), section(&m, "## Context"));
    }

    #[test]
    fn persona_presence_is_checked() {
        assert!(render_prompt(&problem(), Strategy::MultiPersona, None).is_err());
        assert!(render_prompt(&problem(), Strategy::ZeroShot, Some(&teacher())).is_err());
    }
}
