//! Per-cycle port-value traces and their JSON/CSV forms.

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};

use crate::value::PortValueMap;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CycleRecord {
    pub cycle: usize,
    pub inputs: PortValueMap,
    pub outputs: PortValueMap,
}

/// Ordered cycle records. `resets` holds, for each reset marker, the index
/// of the record that follows it.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(into = "TraceJson", try_from = "TraceJson")]
pub struct CycleTrace {
    pub input_ports: Vec<String>,
    pub output_ports: Vec<String>,
    pub records: Vec<CycleRecord>,
    pub resets: Vec<usize>,
    pub warnings: Vec<String>,
}

impl CycleTrace {
    pub fn new(input_ports: Vec<String>, output_ports: Vec<String>) -> Self {
        CycleTrace {
            input_ports,
            output_ports,
            ..Default::default()
        }
    }

    pub fn push(&mut self, inputs: PortValueMap, outputs: PortValueMap) {
        let cycle = self.records.len();
        self.records.push(CycleRecord { cycle, inputs, outputs });
    }

    pub fn mark_reset(&mut self) {
        self.resets.push(self.records.len());
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Values of one port (input or output) across all cycles.
    pub fn column(&self, port: &str) -> Option<Vec<u64>> {
        if self.output_ports.iter().any(|p| p == port) {
            Some(self.records.iter().map(|r| r.outputs[port]).collect())
        } else if self.input_ports.iter().any(|p| p == port) {
            Some(self.records.iter().map(|r| r.inputs[port]).collect())
        } else {
            None
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("trace serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    /// One row per cycle: `cycle`, inputs, outputs.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("cycle");
        for p in self.input_ports.iter().chain(&self.output_ports) {
            out.push(',');
            out.push_str(p);
        }
        out.push('\n');
        for r in &self.records {
            out.push_str(&r.cycle.to_string());
            for p in &self.input_ports {
                out.push_str(&format!(",{}", r.inputs[p]));
            }
            for p in &self.output_ports {
                out.push_str(&format!(",{}", r.outputs[p]));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Serialize, Deserialize)]
struct PortEntry {
    name: String,
    dir: String,
}

#[derive(Serialize, Deserialize)]
struct CycleJson {
    i: PortValueMap,
    o: PortValueMap,
}

#[derive(Serialize, Deserialize)]
struct TraceJson {
    ports: Vec<PortEntry>,
    cycles: Vec<CycleJson>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    resets: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    warnings: Vec<String>,
}

impl From<CycleTrace> for TraceJson {
    fn from(t: CycleTrace) -> Self {
        let entry = |n: &String, d: &str| PortEntry { name: n.clone(), dir: d.into() };
        TraceJson {
            ports: t
                .input_ports
                .iter()
                .map(|n| entry(n, "in"))
                .chain(t.output_ports.iter().map(|n| entry(n, "out")))
                .collect(),
            cycles: t
                .records
                .into_iter()
                .map(|r| CycleJson { i: r.inputs, o: r.outputs })
                .collect(),
            resets: t.resets,
            warnings: t.warnings,
        }
    }
}

impl TryFrom<TraceJson> for CycleTrace {
    type Error = String;

    fn try_from(j: TraceJson) -> Result<Self, String> {
        let mut t = CycleTrace::default();
        for p in j.ports {
            match p.dir.as_str() {
                "in" => t.input_ports.push(p.name),
                "out" => t.output_ports.push(p.name),
                other => return Err(format!("port `{}` has direction `{other}`", p.name)),
            }
        }
        for (k, c) in j.cycles.into_iter().enumerate() {
            let order = |names: &[String], m: &PortValueMap| -> Result<PortValueMap, String> {
                if m.len() != names.len() {
                    return Err(format!("cycle {k} does not cover the declared ports"));
                }
                names
                    .iter()
                    .map(|n| {
                        m.get(n)
                            .map(|v| (n.clone(), *v))
                            .ok_or_else(|| format!("cycle {k} lacks port `{n}`"))
                    })
                    .collect::<Result<IndexMap<_, _>, _>>()
            };
            let inputs = order(&t.input_ports, &c.i)?;
            let outputs = order(&t.output_ports, &c.o)?;
            t.push(inputs, outputs);
        }
        t.resets = j.resets;
        t.warnings = j.warnings;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> CycleTrace {
        let mut t = CycleTrace::new(vec!["en".into()], vec!["count".into()]);
        t.mark_reset();
        t.push([("en".to_string(), 1)].into_iter().collect(), [("count".to_string(), 1)].into_iter().collect());
        t.push([("en".to_string(), 0)].into_iter().collect(), [("count".to_string(), 1)].into_iter().collect());
        t
    }

    #[test]
    fn json_round_trip() {
        let t = sample();
        let text = t.to_json();
        assert!(text.starts_with(r#"{"ports":[{"name":"en","dir":"in"},{"name":"count","dir":"out"}],"cycles":[{"i":{"en":1},"o":{"count":1}}"#));
        assert_eq!(CycleTrace::from_json(&text).unwrap(), t);
    }

    #[test]
    fn csv_layout() {
        assert_eq!(sample().to_csv(), "cycle,en,count\n0,1,1\n1,0,1\n");
    }

    #[test]
    fn column_lookup() {
        assert_eq!(sample().column("count"), Some(vec![1, 1]));
        assert_eq!(sample().column("nope"), None);
    }

    #[test]
    fn rejects_incomplete_cycle() {
        let bad = r#"{"ports":[{"name":"a","dir":"in"}],"cycles":[{"i":{},"o":{}}]}"#;
        assert!(CycleTrace::from_json(bad).is_err());
    }
}
