use crate::data::{DecisionScale, ProblemSet, ResponseMatrix};
use crate::error::{Error, Result};

/// Sparse item x worker matrix of class indices `0..n_classes`.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelMatrix {
    pub n_classes: usize,
    pub items: Vec<String>,
    pub workers: Vec<String>,
    /// Per item: `(worker index, class index)` pairs.
    pub labels: Vec<Vec<(usize, usize)>>,
    /// Decision value represented by each class index.
    pub class_values: Vec<f64>,
}

/// Discrete support used for label aggregation. Continuous scales are
/// discretized onto the integers inside `[lo, hi]`.
pub fn discrete_support(scale: &DecisionScale) -> Result<Vec<f64>> {
    match scale.levels() {
        Some(l) => Ok(l),
        None => {
            let (lo, hi) = scale.bounds();
            let levels: Vec<f64> = (lo.ceil() as i64..=hi.floor() as i64)
                .map(|v| v as f64)
                .collect();
            if levels.len() < 2 {
                return Err(Error::InvalidScale(format!(
                    "{scale} has fewer than two integer levels to discretize onto"
                )));
            }
            Ok(levels)
        }
    }
}

fn nearest(levels: &[f64], v: f64) -> usize {
    let mut best = 0;
    for (k, w) in levels.windows(2).enumerate() {
        if v >= 0.5 * (w[0] + w[1]) {
            best = k + 1;
        }
    }
    best
}

impl LabelMatrix {
    pub fn new(
        n_classes: usize,
        items: Vec<String>,
        workers: Vec<String>,
        labels: Vec<Vec<(usize, usize)>>,
    ) -> Result<Self> {
        if n_classes < 2 {
            return Err(Error::InvalidArgument(
                "label aggregation needs at least 2 classes".into(),
            ));
        }
        if labels.len() != items.len() {
            return Err(Error::Dimension {
                what: "label rows",
                expected: items.len(),
                got: labels.len(),
            });
        }
        for (item, row) in items.iter().zip(&labels) {
            if row.is_empty() {
                return Err(Error::Insufficient(format!("item {item} has no labels")));
            }
            let mut seen = std::collections::HashSet::new();
            for &(w, c) in row {
                if w >= workers.len() || c >= n_classes {
                    return Err(Error::InvalidArgument(format!(
                        "label ({w}, {c}) out of range on item {item}"
                    )));
                }
                if !seen.insert(w) {
                    return Err(Error::DuplicateResponse {
                        participant: workers[w].clone(),
                        problem: item.clone(),
                    });
                }
            }
        }
        Ok(LabelMatrix {
            n_classes,
            class_values: (0..n_classes).map(|k| k as f64).collect(),
            items,
            workers,
            labels,
        })
    }

    /// From raw label rows given as `labels[item][worker] = Some(class)`.
    pub fn from_dense(n_classes: usize, dense: &[Vec<Option<usize>>]) -> Result<Self> {
        let n_workers = dense.iter().map(Vec::len).max().unwrap_or(0);
        let labels = dense
            .iter()
            .map(|row| {
                row.iter()
                    .enumerate()
                    .filter_map(|(w, c)| c.map(|c| (w, c)))
                    .collect()
            })
            .collect();
        LabelMatrix::new(
            n_classes,
            (0..dense.len()).map(|i| format!("item{i}")).collect(),
            (0..n_workers).map(|w| format!("worker{w}")).collect(),
            labels,
        )
    }

    /// All problems in `responses` must share one discrete support.
    pub fn from_responses(responses: &ResponseMatrix, problems: &ProblemSet) -> Result<Self> {
        let mut support: Option<Vec<f64>> = None;
        let mut labels = Vec::new();
        for pid in responses.problems() {
            let problem = problems
                .get(pid)
                .ok_or_else(|| Error::UnknownProblem(pid.clone()))?;
            let levels = discrete_support(&problem.scale)?;
            match &support {
                None => support = Some(levels.clone()),
                Some(s) if *s != levels => {
                    return Err(Error::InvalidScale(format!(
                        "problem {pid} uses {} while others use a different support",
                        problem.scale
                    )))
                }
                _ => {}
            }
            labels.push(
                responses
                    .responses_for_problem(pid)
                    .iter()
                    .map(|r| {
                        let w = responses
                            .participant_index(&r.participant_id)
                            .expect("indexed participant");
                        (w, nearest(&levels, r.value))
                    })
                    .collect(),
            );
        }
        let support = support.ok_or(Error::Empty("responses"))?;
        let mut m = LabelMatrix::new(
            support.len(),
            responses.problems().to_vec(),
            responses.participants().to_vec(),
            labels,
        )?;
        m.class_values = support;
        Ok(m)
    }

    /// Fraction of each item's labels per class.
    pub fn vote_shares(&self) -> Vec<Vec<f64>> {
        self.labels
            .iter()
            .map(|row| {
                let mut s = vec![0.0; self.n_classes];
                for &(_, c) in row {
                    s[c] += 1.0 / row.len() as f64;
                }
                s
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{Problem, Response};

    #[test]
    fn continuous_support_is_integer_grid() {
        let s = DecisionScale::continuous(0.5, 3.2).unwrap();
        assert_eq!(discrete_support(&s).unwrap(), vec![1.0, 2.0, 3.0]);
        assert!(discrete_support(&DecisionScale::continuous(0.1, 0.9).unwrap()).is_err());
    }

    #[test]
    fn from_responses_maps_levels() {
        let scale = DecisionScale::likert(1, 5).unwrap();
        let problems = ProblemSet::new(vec![
            Problem::new("p1", "a", "", "", scale.clone(), 4),
            Problem::new("p2", "b", "", "", scale, 4),
        ])
        .unwrap();
        let r = ResponseMatrix::new(vec![
            Response::new("w1", "p1", 2.0),
            Response::new("w2", "p1", 3.0),
            Response::new("w1", "p2", 5.0),
        ])
        .unwrap();
        let m = LabelMatrix::from_responses(&r, &problems).unwrap();
        assert_eq!(m.n_classes, 5);
        assert_eq!(m.labels, vec![vec![(0, 1), (1, 2)], vec![(0, 4)]]);
        assert_eq!(m.class_values[4], 5.0);
    }
}
