//! Serializable reports. Field order is fixed so identical runs produce
//! byte-identical JSON.

use serde::Serialize;

pub const AXIOM_SCHEMA: &str = "approxc.axiom-report/v1";
pub const CHECK_SCHEMA: &str = "approxc.check-report/v1";
pub const DERIVATION_SCHEMA: &str = "approxc.derivation/v1";
pub const CORPUS_SCHEMA: &str = "approxc.corpus-report/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum AxiomStatus {
    /// Decided exactly on every sampled instance.
    Pass,
    /// Held on every sampled input of a function carrier.
    PassOnSamples,
    Fail,
    Inconclusive,
}

impl AxiomStatus {
    pub fn is_failure(self) -> bool {
        self == AxiomStatus::Fail
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomResult {
    pub axiom: String,
    pub status: AxiomStatus,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomReport {
    pub schema: &'static str,
    pub suite: String,
    pub seed: u64,
    pub results: Vec<AxiomResult>,
}

impl AxiomReport {
    pub fn new(suite: impl Into<String>, seed: u64, results: Vec<AxiomResult>) -> AxiomReport {
        AxiomReport { schema: AXIOM_SCHEMA, suite: suite.into(), seed, results }
    }

    pub fn failures(&self) -> usize {
        self.results.iter().filter(|r| r.status.is_failure()).count()
    }

    pub fn all_passed(&self) -> bool {
        self.results
            .iter()
            .all(|r| matches!(r.status, AxiomStatus::Pass | AxiomStatus::PassOnSamples))
    }
}

pub fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize")
}

pub fn to_json_line<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).expect("reports serialize")
}
