//! Report envelope: a header carrying the only time-dependent field, and a body
//! that is a pure function of the inputs.

use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

#[derive(Debug, Clone, Serialize)]
pub struct Header {
    pub tool: &'static str,
    pub version: &'static str,
    pub generated_unix: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report<T> {
    pub header: Header,
    pub body: T,
}

impl<T: Serialize> Report<T> {
    pub fn new(body: T) -> Self {
        let generated_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        Report { header: Header { tool: "gensol", version: env!("CARGO_PKG_VERSION"), generated_unix }, body }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports serialize")
    }

    /// The body alone, for comparisons that must ignore the header.
    pub fn body_json(&self) -> String {
        serde_json::to_string_pretty(&self.body).expect("reports serialize")
    }
}
