//! Class scaffold handed to the generator for filling. Registers become
//! class-level state, the clock becomes the `step` call itself.

use serde::Serialize;

use crate::specmodel::VerificationSpec;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct StateVar {
    pub name: String,
    pub width: u32,
    pub reset_value: i128,
}

/// A packed input port carrying a one-dimensional array.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct FlattenedInput {
    pub port: String,
    pub elements: u32,
    pub element_bits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct ModelTemplate {
    pub class_name: String,
    pub state_vars: Vec<StateVar>,
    pub step_inputs: Vec<String>,
    pub step_outputs: Vec<String>,
    pub flattened_inputs: Vec<FlattenedInput>,
    pub helper_stubs: Vec<String>,
    pub rendered_text: String,
}

pub const HELPER_STUBS: [&str; 2] = ["compute", "reshape"];

fn class_name(module: &str) -> String {
    let mut out: String = module
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| {
            let mut c = s.chars();
            c.next().map(|f| f.to_ascii_uppercase()).into_iter().chain(c).collect::<String>()
        })
        .collect();
    if out.chars().next().is_none_or(|c| c.is_ascii_digit()) {
        out.insert(0, 'M');
    }
    out + "Model"
}

/// State is implied by a reset: each output gets a `<out>_reg` register
/// cleared to 0. Without a reset the step is a pure function.
pub fn render_template(vspec: &VerificationSpec) -> ModelTemplate {
    let step_inputs: Vec<String> = vspec.step_inputs().map(|p| p.name.clone()).collect();
    let step_outputs: Vec<String> = vspec.outputs().map(|p| p.name.clone()).collect();
    let state_vars: Vec<StateVar> = if vspec.reset.is_some() {
        vspec
            .outputs()
            .map(|p| StateVar {
                name: format!("{}_reg", p.name),
                width: p.width,
                reset_value: 0,
            })
            .collect()
    } else {
        Vec::new()
    };
    let flattened_inputs: Vec<FlattenedInput> = vspec
        .step_inputs()
        .filter_map(|p| {
            let c = vspec.boundary_conditions.iter().find(|c| c.port_name == p.name)?;
            c.element_count(p.width).map(|n| FlattenedInput {
                port: p.name.clone(),
                elements: n,
                element_bits: c.max_width_bits,
            })
        })
        .collect();
    let class_name = class_name(&vspec.module_name);

    let mut t = String::new();
    t.push_str(&format!("class {class_name}:\n"));
    t.push_str(&format!("    \"\"\"Reference model for `{}`.\n\n", vspec.module_name));
    for l in vspec.function_summary.lines() {
        if l.trim().is_empty() {
            t.push('\n');
        } else {
            t.push_str(&format!("    {}\n", l.trim_end()));
        }
    }
    t.push_str("\n    One call to step() is one rising clock edge: update state first,\n");
    t.push_str("    then compute outputs from the updated state. Plain Python integers are\n");
    t.push_str("    fine; the harness masks every output to its declared width.\n    \"\"\"\n\n");

    t.push_str("    def __init__(self):\n");
    if state_vars.is_empty() {
        t.push_str("        pass\n");
    }
    for s in &state_vars {
        t.push_str(&format!("        self.{} = {}  # {} bits\n", s.name, s.reset_value, s.width));
    }
    t.push_str("\n    def reset(self):\n");
    if state_vars.is_empty() {
        t.push_str("        pass\n");
    }
    for s in &state_vars {
        t.push_str(&format!("        self.{} = {}\n", s.name, s.reset_value));
    }

    t.push_str(&format!("\n    def step(self{}):\n", step_inputs.iter().map(|n| format!(", {n}")).collect::<String>()));
    for p in vspec.step_inputs() {
        let kind = if p.is_signed() { "signed" } else { "unsigned" };
        match flattened_inputs.iter().find(|f| f.port == p.name) {
            Some(f) => t.push_str(&format!(
                "        # {}: flattened one-dimensional array of {} x {}-bit elements, element 0 in the low bits\n",
                p.name, f.elements, f.element_bits
            )),
            None => t.push_str(&format!("        # {}: {} bits, {kind}\n", p.name, p.width)),
        }
    }
    for p in vspec.outputs() {
        t.push_str(&format!("        {} = 0\n", p.name));
    }
    let ret = step_outputs.iter().map(|n| format!("\"{n}\": {n}")).collect::<Vec<_>>().join(", ");
    t.push_str(&format!("        return {{{ret}}}\n"));

    t.push_str("\n    # Helpers. Add more as needed.\n");
    t.push_str("    def compute(self, *args):\n        pass\n\n");
    t.push_str("    def reshape(self, flat, rows, cols):\n        pass\n");

    ModelTemplate {
        class_name,
        state_vars,
        step_inputs,
        step_outputs,
        flattened_inputs,
        helper_stubs: HELPER_STUBS.iter().map(|s| s.to_string()).collect(),
        rendered_text: t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::refmodel::tests::counter_vspec;

    #[test]
    fn counter_template() {
        let t = render_template(&counter_vspec());
        assert_eq!(
            t.state_vars,
            vec![StateVar {
                name: "count_reg".into(),
                width: 8,
                reset_value: 0
            }]
        );
        assert_eq!(t.step_inputs, ["en"]);
        assert_eq!(t.step_outputs, ["count"]);
        assert!(t.rendered_text.contains("def step(self, en):"));
        assert!(t.rendered_text.contains("self.count_reg = 0"));
        assert!(t.rendered_text.contains("return {\"count\": count}"));
        assert!(!t.rendered_text.split(|c: char| !c.is_alphanumeric() && c != '_').any(|w| w == "rst" || w == "clk"));
        assert_eq!(t.class_name, "CounterModel");
    }

    #[test]
    fn stateless_template() {
        let mut v = counter_vspec();
        v.reset = None;
        v.ports.retain(|p| p.name != "rst");
        let t = render_template(&v);
        assert!(t.state_vars.is_empty());
        assert!(t.rendered_text.contains("def __init__(self):\n        pass"));
    }

    #[test]
    fn class_names() {
        assert_eq!(class_name("conv_2x2"), "Conv2x2Model");
        assert_eq!(class_name("4bit"), "M4bitModel");
    }
}
