use std::sync::LazyLock;

use regex::Regex;

use crate::data::DecisionScale;
use crate::error::{Error, Result};

static NUMBER: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"[-+]?\d+(?:\.\d+)?").expect("valid regex"));

/// First on-scale numeric token in a completion. Continuous scales accept the
/// first number and clamp it; ordinal scales take the first token equal to a
/// level; choice scales take the first integer in `1..=M`.
pub fn parse_decision(raw: &str, scale: &DecisionScale) -> Result<f64> {
    let mut tokens = NUMBER.find_iter(raw).filter_map(|m| {
        let s = m.as_str();
        s.parse::<f64>().ok().map(|v| (v, !s.contains('.')))
    });
    let found = match scale {
        DecisionScale::Continuous { lo, hi } => tokens.next().map(|(v, _)| v.clamp(*lo, *hi)),
        DecisionScale::Ordinal { .. } => tokens.find(|(v, _)| scale.contains(*v)).map(|(v, _)| {
            let i = scale.level_index(v).expect("token is a level");
            scale.levels().expect("ordinal levels")[i]
        }),
        DecisionScale::Choice { alternatives } => tokens
            .find(|(v, int)| *int && *v >= 1.0 && *v <= *alternatives as f64)
            .map(|(v, _)| v),
    };
    found.ok_or_else(|| Error::Unparseable {
        raw: raw.to_string(),
        scale: scale.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_examples() {
        let likert = DecisionScale::likert(1, 5).unwrap();
        assert_eq!(
            parse_decision("I rate this 4 out of 5", &likert).unwrap(),
            4.0
        );
        let cont = DecisionScale::continuous(1.0, 5.0).unwrap();
        assert_eq!(parse_decision("4.7", &cont).unwrap(), 4.7);
        assert!(matches!(
            parse_decision("no idea", &likert),
            Err(Error::Unparseable { .. })
        ));
    }

    #[test]
    fn skips_off_scale_tokens() {
        let likert = DecisionScale::likert(1, 5).unwrap();
        assert_eq!(
            parse_decision("Out of 10 I'd say... 3", &likert).unwrap(),
            3.0
        );
        assert_eq!(
            parse_decision("score 9.5", &DecisionScale::continuous(0.0, 5.0).unwrap()).unwrap(),
            5.0
        );
        let choice = DecisionScale::choice(3).unwrap();
        assert_eq!(
            parse_decision("Option 2.5? no: 0, then 3", &choice).unwrap(),
            3.0
        );
        assert!(parse_decision("7", &choice).is_err());
    }
}
