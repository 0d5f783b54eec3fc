use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::ProblemSet;
use crate::error::{Error, Result};

/// One participant's decision on one problem.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Response {
    pub participant_id: String,
    pub problem_id: String,
    pub value: f64,
}

impl Response {
    pub fn new(participant: impl Into<String>, problem: impl Into<String>, value: f64) -> Self {
        Response {
            participant_id: participant.into(),
            problem_id: problem.into(),
            value,
        }
    }
}

/// Sparse participant x problem decisions.
///
/// Participants and problems are indexed in sorted id order, and responses are
/// stored sorted by (problem, participant), so two matrices built from the same
/// set of responses are identical regardless of input order. The participation
/// mask is the support of the response set.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Response>", into = "Vec<Response>")]
pub struct ResponseMatrix {
    responses: Vec<Response>,
    participants: Vec<String>,
    problems: Vec<String>,
    participant_index: HashMap<String, usize>,
    problem_index: HashMap<String, usize>,
    cell: HashMap<(usize, usize), usize>,
}

impl TryFrom<Vec<Response>> for ResponseMatrix {
    type Error = Error;

    fn try_from(v: Vec<Response>) -> Result<Self> {
        ResponseMatrix::new(v)
    }
}

impl From<ResponseMatrix> for Vec<Response> {
    fn from(m: ResponseMatrix) -> Self {
        m.responses
    }
}

impl ResponseMatrix {
    pub fn new(mut responses: Vec<Response>) -> Result<Self> {
        if responses.iter().any(|r| !r.value.is_finite()) {
            return Err(Error::NonFinite("response value"));
        }
        responses.sort_by(|a, b| {
            (a.problem_id.as_str(), a.participant_id.as_str())
                .cmp(&(b.problem_id.as_str(), b.participant_id.as_str()))
        });
        for w in responses.windows(2) {
            if w[0].problem_id == w[1].problem_id && w[0].participant_id == w[1].participant_id {
                return Err(Error::DuplicateResponse {
                    participant: w[0].participant_id.clone(),
                    problem: w[0].problem_id.clone(),
                });
            }
        }
        let participants: Vec<String> = responses
            .iter()
            .map(|r| r.participant_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let problems: Vec<String> = responses
            .iter()
            .map(|r| r.problem_id.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        let participant_index: HashMap<String, usize> = participants
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let problem_index: HashMap<String, usize> = problems
            .iter()
            .enumerate()
            .map(|(i, p)| (p.clone(), i))
            .collect();
        let cell = responses
            .iter()
            .enumerate()
            .map(|(k, r)| {
                (
                    (
                        problem_index[&r.problem_id],
                        participant_index[&r.participant_id],
                    ),
                    k,
                )
            })
            .collect();
        Ok(ResponseMatrix {
            responses,
            participants,
            problems,
            participant_index,
            problem_index,
            cell,
        })
    }

    /// Reject responses whose problem is unknown or whose value is off-scale.
    pub fn validate_against(&self, problems: &ProblemSet) -> Result<()> {
        for r in &self.responses {
            let p = problems
                .get(&r.problem_id)
                .ok_or_else(|| Error::UnknownProblem(r.problem_id.clone()))?;
            p.scale.check(r.value)?;
        }
        Ok(())
    }

    pub fn responses(&self) -> &[Response] {
        &self.responses
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }

    pub fn participants(&self) -> &[String] {
        &self.participants
    }

    pub fn problems(&self) -> &[String] {
        &self.problems
    }

    pub fn participant_index(&self, id: &str) -> Option<usize> {
        self.participant_index.get(id).copied()
    }

    pub fn problem_index(&self, id: &str) -> Option<usize> {
        self.problem_index.get(id).copied()
    }

    /// phi_{t,i}: 1 iff participant `i` answered problem `t`.
    pub fn participates(&self, problem: &str, participant: &str) -> bool {
        self.get(problem, participant).is_some()
    }

    pub fn get(&self, problem: &str, participant: &str) -> Option<f64> {
        let t = self.problem_index(problem)?;
        let i = self.participant_index(participant)?;
        self.cell.get(&(t, i)).map(|&k| self.responses[k].value)
    }

    /// Dense participation mask, rows = problems, columns = participants.
    pub fn mask(&self) -> Vec<Vec<bool>> {
        let mut m = vec![vec![false; self.participants.len()]; self.problems.len()];
        for &(t, i) in self.cell.keys() {
            m[t][i] = true;
        }
        m
    }

    /// N_t, the number of participants who answered `problem`.
    pub fn count_for_problem(&self, problem: &str) -> usize {
        self.responses_for_problem(problem).len()
    }

    /// Responses on one problem, in participant order.
    pub fn responses_for_problem(&self, problem: &str) -> &[Response] {
        let start = self
            .responses
            .partition_point(|r| r.problem_id.as_str() < problem);
        let end = self
            .responses
            .partition_point(|r| r.problem_id.as_str() <= problem);
        &self.responses[start..end]
    }

    pub fn values_for_problem(&self, problem: &str) -> Vec<f64> {
        self.responses_for_problem(problem)
            .iter()
            .map(|r| r.value)
            .collect()
    }

    /// T_i, the number of problems a participant answered.
    pub fn counts_by_participant(&self) -> BTreeMap<String, usize> {
        let mut out = BTreeMap::new();
        for r in &self.responses {
            *out.entry(r.participant_id.clone()).or_insert(0) += 1;
        }
        out
    }

    /// Keep only responses whose problem id satisfies `keep`.
    pub fn filter_problems(&self, keep: impl Fn(&str) -> bool) -> ResponseMatrix {
        let kept = self
            .responses
            .iter()
            .filter(|r| keep(&r.problem_id))
            .cloned()
            .collect();
        ResponseMatrix::new(kept).expect("subset of a valid matrix is valid")
    }
}
