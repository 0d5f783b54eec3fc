//! Shared data model: decision scales, problems, responses, file formats and
//! run reports.

pub mod io;
mod problem;
mod report;
mod responses;
mod scale;

pub use io::{load_responses, save_responses, ResponseFormat};
pub use problem::{hashed_features, load_problems, Problem, ProblemSet, DEFAULT_FEATURE_DIM};
pub use report::{
    load_report, save_report, Diagnostics, ProblemDiagnostics, ProblemReport, RunReport,
};
pub use responses::{Response, ResponseMatrix};
pub use scale::DecisionScale;
