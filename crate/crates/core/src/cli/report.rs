use std::fmt::Write;

use crate::contraction::ProbeRecord;

/// Ordered key/value run report with a `[trace]` section.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    header: Vec<(String, String)>,
    entries: Vec<(String, String)>,
    trace: Vec<(String, Vec<String>)>,
}

impl Report {
    pub fn new(tool: &str, command: &str, seed: u64) -> Self {
        Report {
            header: vec![
                ("tool".into(), tool.into()),
                ("command".into(), command.into()),
                ("seed".into(), seed.to_string()),
            ],
            entries: Vec::new(),
            trace: Vec::new(),
        }
    }

    /// Tool, command line and seed, for artifact headers.
    pub fn header(&self) -> Vec<(String, String)> {
        self.header.clone()
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn set(&mut self, key: impl Into<String>, value: impl ToString) {
        let key = key.into();
        let value = value.to_string().replace('\n', " ");
        match self.entries.iter_mut().find(|(k, _)| *k == key) {
            Some(slot) => slot.1 = value,
            None => self.entries.push((key, value)),
        }
    }

    /// Records a bisection trace under `name`.
    pub fn trace(&mut self, name: &str, probes: &[ProbeRecord]) {
        self.trace
            .push((name.to_string(), probes.iter().map(super::trace_line).collect()));
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("format = 1\n");
        for (k, v) in self.header.iter().chain(&self.entries) {
            let _ = writeln!(out, "{} = {}", k, v);
        }
        for (name, lines) in &self.trace {
            let _ = writeln!(out, "[trace {}]", name);
            let _ = writeln!(out, "# value result status feasibility_ratio attempt");
            for (i, l) in lines.iter().enumerate() {
                let _ = writeln!(out, "probe {} = {}", i + 1, l);
            }
        }
        out
    }
}
