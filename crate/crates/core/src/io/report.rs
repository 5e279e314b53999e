//! Fit reports: `# key = value` lines followed by a fenced JSON block with
//! the same entries.

use serde_json::{Map, Value};

use crate::fit::FitResult;

/// Ordered report entries.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Report {
    entries: Vec<(String, Value)>,
}

impl Report {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl Into<Value>) -> &mut Self {
        self.entries.push((key.into(), value.into()));
        self
    }

    pub fn from_fit(mode: &str, fit: &FitResult<f64>) -> Self {
        let mut r = Self::new();
        r.push("mode", mode)
            .push("converged", fit.converged)
            .push("iterations", fit.iterations as u64)
            .push("residual_norm", fit.residual_norm);
        if let Some(strong) = fit.strong_coupling {
            r.push("strong_coupling", strong);
        }
        for (name, value, err) in fit.iter() {
            r.push(name, value).push(format!("{name}_stderr"), err);
        }
        r
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            let shown = match v {
                Value::String(s) => s.clone(),
                other => other.to_string(),
            };
            out.push_str(&format!("# {k} = {shown}\n"));
        }
        let map: Map<String, Value> = self.entries.iter().cloned().collect();
        out.push_str("```json\n");
        out.push_str(&serde_json::to_string_pretty(&Value::Object(map)).expect("JSON values serialize"));
        out.push_str("\n```\n");
        out
    }

    /// Parses the machine block of a rendered report.
    pub fn parse_block(text: &str) -> Option<Map<String, Value>> {
        let start = text.find("```json\n")? + "```json\n".len();
        let end = start + text[start..].find("\n```")?;
        match serde_json::from_str(&text[start..end]).ok()? {
            Value::Object(m) => Some(m),
            _ => None,
        }
    }
}
