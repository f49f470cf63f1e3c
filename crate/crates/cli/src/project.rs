//! Project configuration files.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use appraise_core::{generate, load_scenarios, GeneratorSpec, ScenarioSet};
use serde::Deserialize;
use serde_json::Value;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ProjectFile {
    id: Option<String>,
    name: Option<String>,
    horizon: Option<usize>,
    scenario_file: Option<PathBuf>,
    generator: Option<Value>,
}

/// Command-line values that replace the corresponding generator fields.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub seed: Option<u64>,
}

impl Overrides {
    fn apply(&self, block: &mut Value) {
        if let Value::Object(map) = block {
            if let Some(n) = self.n {
                map.insert("n".into(), n.into());
            }
            if let Some(seed) = self.seed {
                map.insert("seed".into(), seed.into());
            }
        }
    }
}

pub enum Source {
    File(PathBuf),
    Generator(Value),
}

pub struct Project {
    pub id: String,
    pub name: Option<String>,
    pub horizon: Option<usize>,
    pub source: Source,
}

fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

impl Project {
    /// Reads the project description. Scenario files are resolved relative to
    /// the JSON file and must exist.
    pub fn open(path: &Path) -> Result<Self> {
        let raw: ProjectFile = serde_json::from_value(read_json(path)?)
            .map_err(appraise_core::AppraiseError::from)
            .with_context(|| format!("invalid project file {}", path.display()))?;
        let id = raw.id.unwrap_or_else(|| {
            path.file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| "project".into())
        });
        let source = match (raw.scenario_file, raw.generator) {
            (Some(file), None) => {
                let resolved = path.parent().unwrap_or(Path::new(".")).join(file);
                if !resolved.is_file() {
                    bail!(missing(&resolved));
                }
                Source::File(resolved)
            }
            (None, Some(block)) => Source::Generator(block),
            _ => bail!(appraise_core::AppraiseError::InvalidSpec {
                field: "scenario_file".into(),
                message: format!(
                    "{} needs exactly one of scenario_file or generator",
                    path.display()
                ),
            }),
        };
        Ok(Self {
            id,
            name: raw.name,
            horizon: raw.horizon,
            source,
        })
    }

    pub fn scenarios(&self, overrides: Overrides) -> Result<ScenarioSet> {
        let set = match &self.source {
            Source::File(path) => {
                let Some(horizon) = self.horizon else {
                    bail!(appraise_core::AppraiseError::InvalidSpec {
                        field: "horizon".into(),
                        message: format!("project {} loads a scenario file and needs a horizon", self.id),
                    });
                };
                load_scenarios(path, horizon)
                    .with_context(|| format!("loading {}", path.display()))?
            }
            Source::Generator(block) => {
                let spec = generator_spec(block.clone(), overrides)?;
                if let Some(h) = self.horizon {
                    if spec.template.len() != h + 1 {
                        bail!(appraise_core::AppraiseError::HorizonMismatch {
                            expected: h,
                            found: spec.template.len() - 1,
                        });
                    }
                }
                generate(&spec)?
            }
        };
        Ok(set.with_project_id(self.id.clone()))
    }
}

pub fn generator_spec(mut block: Value, overrides: Overrides) -> Result<GeneratorSpec> {
    overrides.apply(&mut block);
    Ok(GeneratorSpec::from_json_value(block)?)
}

/// A `simulate` spec is either a bare generator block or a project file
/// carrying one.
pub fn read_generator(path: &Path, overrides: Overrides) -> Result<GeneratorSpec> {
    let mut value = read_json(path)?;
    if let Some(block) = value.get_mut("generator") {
        value = block.take();
    }
    generator_spec(value, overrides).with_context(|| format!("invalid generator in {}", path.display()))
}

pub fn missing(path: &Path) -> appraise_core::AppraiseError {
    appraise_core::AppraiseError::Io(std::io::Error::new(
        std::io::ErrorKind::NotFound,
        format!("{} not found", path.display()),
    ))
}
