use serde::Serialize;
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Fail,
}

/// One measured quantity against its bound. `id` names the invariant checked.
#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub id: String,
    pub status: Status,
    pub measured: f64,
    pub bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(id: impl Into<String>, measured: f64, bound: f64, pass: bool) -> Self {
        Check { id: id.into(), status: if pass { Status::Pass } else { Status::Fail }, measured, bound, note: None }
    }

    /// Passes when `measured <= bound`; NaN fails.
    pub fn at_most(id: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check::new(id, measured, bound, measured <= bound)
    }

    /// Passes when `|measured − target| <= tol`; the bound recorded is `tol`.
    pub fn near(id: impl Into<String>, measured: f64, target: f64, tol: f64) -> Self {
        let mut c = Check::new(id, measured, tol, (measured - target).abs() <= tol);
        c.note = Some(format!("target {target}"));
        c
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    pub fn passed(&self) -> bool {
        self.status == Status::Pass
    }
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct SuiteReport {
    pub checks: Vec<Check>,
    pub pass: bool,
}

impl SuiteReport {
    pub fn new(checks: Vec<Check>) -> Self {
        let pass = !checks.is_empty() && checks.iter().all(Check::passed);
        SuiteReport { checks, pass }
    }
}

pub type Report = BTreeMap<String, SuiteReport>;

pub fn all_pass(r: &Report) -> bool {
    r.values().all(|s| s.pass)
}
