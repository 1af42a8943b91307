//! Plain-text parameter checkpoints.
//!
//! ```text
//! mtlbench-checkpoint v1
//! spec input=144 trunk=32,16 c=1 heads= tasks=2 classes=10
//! meta method uniform
//! tensor shared 0 144,32
//! 1.234e-1 -5.6e-2 ...
//! tensor task1 3 10
//! ...
//! ```
//!
//! Values are written in shortest round-trip scientific notation, so a
//! reload reproduces every bit. `meta` lines carry free-form provenance.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::network::{NetworkSpec, ParameterSet, Partition};
use super::tensor::Tensor;
use crate::error::{Error, Result};

const MAGIC: &str = "mtlbench-checkpoint v1";

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub spec: NetworkSpec,
    pub params: ParameterSet,
    pub meta: Vec<(String, String)>,
}

impl Checkpoint {
    pub fn new(spec: NetworkSpec, params: ParameterSet) -> Self {
        Self {
            spec,
            params,
            meta: Vec::new(),
        }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(MAGIC);
        out.push('\n');
        out.push_str(&format!("spec {}\n", self.spec));
        for (k, v) in &self.meta {
            out.push_str(&format!("meta {k} {}\n", v.replace('\n', " ")));
        }
        for part in self.params.partitions() {
            let label = match part {
                Partition::Shared => "shared".to_string(),
                Partition::Task(j) => format!("task{j}"),
            };
            for (i, t) in self.params.group(part).iter().enumerate() {
                let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
                out.push_str(&format!("tensor {label} {i} {}\n", shape.join(",")));
                let values: Vec<String> = t.values().iter().map(|v| format!("{v:e}")).collect();
                out.push_str(&values.join(" "));
                out.push('\n');
            }
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        if lines.next() != Some(MAGIC) {
            return Err(Error::Parse("not a checkpoint (bad header)".into()));
        }
        let spec_line = lines
            .next()
            .and_then(|l| l.strip_prefix("spec "))
            .ok_or_else(|| Error::Parse("missing spec line".into()))?;
        let spec: NetworkSpec = spec_line.parse()?;
        let mut params = ParameterSet::zeros(&spec);
        let mut meta = Vec::new();
        let mut seen = 0usize;

        while let Some(line) = lines.next() {
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                meta.push((k.to_string(), v.to_string()));
                continue;
            }
            let Some(rest) = line.strip_prefix("tensor ") else {
                if line.trim().is_empty() {
                    continue;
                }
                return Err(Error::Parse(format!("unexpected line {line:?}")));
            };
            let fields: Vec<&str> = rest.split_whitespace().collect();
            let [label, index, shape] = fields[..] else {
                return Err(Error::Parse(format!("bad tensor header {line:?}")));
            };
            let part = match label {
                "shared" => Partition::Shared,
                l => Partition::Task(
                    l.strip_prefix("task")
                        .and_then(|j| j.parse().ok())
                        .filter(|&j| j < spec.task_count)
                        .ok_or_else(|| Error::Parse(format!("bad partition {l:?}")))?,
                ),
            };
            let index: usize = index
                .parse()
                .map_err(|_| Error::Parse(format!("bad tensor index {index:?}")))?;
            let shape: Vec<usize> = shape
                .split(',')
                .map(|d| d.parse().map_err(|_| Error::Parse(format!("bad dim {d:?}"))))
                .collect::<Result<_>>()?;
            let values: Vec<f64> = lines
                .next()
                .ok_or_else(|| Error::Parse("missing tensor values".into()))?
                .split_whitespace()
                .map(|v| v.parse().map_err(|_| Error::Parse(format!("bad value {v:?}"))))
                .collect::<Result<_>>()?;
            let group = params.group_mut(part);
            let slot = group
                .get_mut(index)
                .ok_or_else(|| Error::Parse(format!("tensor index {index} out of range")))?;
            if slot.shape() != shape.as_slice() {
                return Err(Error::Shape(format!(
                    "checkpoint tensor {label}/{index} has shape {shape:?}, spec needs {:?}",
                    slot.shape()
                )));
            }
            *slot = Tensor::new(shape, values)?;
            seen += 1;
        }
        let expected = params.tensors().count();
        if seen != expected {
            return Err(Error::Parse(format!("expected {expected} tensors, found {seen}")));
        }
        Ok(Self { spec, params, meta })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = fs::File::create(path)?;
        f.write_all(self.to_text().as_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_text(&fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn spec() -> NetworkSpec {
        NetworkSpec {
            input_dim: 4,
            trunk_widths: vec![3],
            width_multiplier: 1.5,
            head_widths: vec![2],
            task_count: 2,
            classes_per_task: 3,
        }
    }

    #[test]
    fn reload_is_bit_exact() {
        let s = spec();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut params = ParameterSet::init(&s, &mut rng);
        params.shared[0].values_mut()[0] = 1e-300;
        params.shared[0].values_mut()[1] = -0.0;
        let ck = Checkpoint::new(s, params).with_meta("method", "mgda(l2)");
        let back = Checkpoint::from_text(&ck.to_text()).unwrap();
        assert_eq!(back.meta("method"), Some("mgda(l2)"));
        for (a, b) in back.params.flatten().iter().zip(ck.params.flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
        assert_eq!(back, ck);
    }

    #[test]
    fn rejects_truncated_and_mismatched_files() {
        let s = spec();
        let ck = Checkpoint::new(s.clone(), ParameterSet::zeros(&s));
        let text = ck.to_text();
        let truncated: String = text.lines().take(5).map(|l| format!("{l}\n")).collect();
        assert!(Checkpoint::from_text(&truncated).is_err());
        let wrong = text.replace("input=4", "input=5");
        assert!(Checkpoint::from_text(&wrong).is_err());
        assert!(Checkpoint::from_text("hello").is_err());
    }
}
