//! TOML experiment configuration.
//!
//! ```toml
//! [lattice]
//! size = 12
//! dim = 2
//!
//! [partition]
//! kind = "annulus"          # annulus | strip | explicit
//! row = 2
//! col = 2
//! size = 8
//! thickness = 2
//!
//! [strings]
//! files = ["bridge_ac.str"]
//! constructions = ["arch"]  # cut | bridge | arch
//! [strings.generate]
//! count = 100
//! depth = 6
//! seed = 7
//! shapes = [{ kind = "plaquette" }, { kind = "disk", radius = 1 }]
//!
//! [oracle]
//! kind = "group"            # group | geometric | statevector | constant1
//!
//! [monte_carlo]
//! samples = 10000
//! seed = 1
//!
//! [regions]
//! count = 30
//! seed = 3
//!
//! [output]
//! csv = "out.csv"
//!
//! [budget]
//! term_cap = 262144
//! memory_cap = 1048576
//! ```
//!
//! Relative paths resolve against the directory holding the config file.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::circuits::{DomainShape, DEFAULT_REJECTION_CAP};
use crate::error::{Error, Result};
use crate::lattice::{Lattice, LatticeConfig};
use crate::oracle::{DEFAULT_MEMORY_CAP, MIN_SAMPLES};
use crate::partition::{simply_connected_partition, standard_partition, Partition, PartitionGeometry};
use crate::swap_dynamics::DEFAULT_TERM_CAP;

use super::files::read_region_file;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeSection {
    pub size: usize,
    pub dim: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PartitionSpec {
    Annulus {
        row: isize,
        col: isize,
        size: usize,
        thickness: usize,
    },
    /// Three side-by-side blocks; the arrangement without a hole.
    Strip {
        row: isize,
        col: isize,
        height: usize,
        widths: [usize; 3],
    },
    /// Region files per piece.
    Explicit {
        a: PathBuf,
        b_left: PathBuf,
        b_right: PathBuf,
        c: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Construction {
    Cut,
    Bridge,
    Arch,
}

impl Construction {
    pub fn name(self) -> &'static str {
        match self {
            Construction::Cut => "cut",
            Construction::Bridge => "bridge",
            Construction::Arch => "arch",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GenerateSpec {
    pub count: usize,
    pub depth: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_shapes")]
    pub shapes: Vec<DomainShape>,
    /// Draw without safety filtering (for oracle comparisons).
    #[serde(default)]
    pub unfiltered: bool,
}

fn default_shapes() -> Vec<DomainShape> {
    vec![DomainShape::Plaquette, DomainShape::Disk { radius: 1 }]
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StringsSection {
    #[serde(default)]
    pub generate: Option<GenerateSpec>,
    #[serde(default)]
    pub files: Vec<PathBuf>,
    #[serde(default)]
    pub constructions: Vec<Construction>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OracleKind {
    #[default]
    Group,
    Geometric,
    Statevector,
    Constant1,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    #[serde(default)]
    pub kind: OracleKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonteCarloSection {
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_samples() -> usize {
    10_000
}

impl Default for MonteCarloSection {
    fn default() -> Self {
        MonteCarloSection {
            samples: default_samples(),
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RegionsSection {
    #[serde(default)]
    pub count: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    /// Fill the runtime column. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub timing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BudgetSection {
    #[serde(default = "default_term_cap")]
    pub term_cap: usize,
    #[serde(default = "default_memory_cap")]
    pub memory_cap: usize,
    #[serde(default = "default_rejection_cap")]
    pub rejection_cap: usize,
}

fn default_term_cap() -> usize {
    DEFAULT_TERM_CAP
}
fn default_memory_cap() -> usize {
    DEFAULT_MEMORY_CAP
}
fn default_rejection_cap() -> usize {
    DEFAULT_REJECTION_CAP
}

impl Default for BudgetSection {
    fn default() -> Self {
        BudgetSection {
            term_cap: DEFAULT_TERM_CAP,
            memory_cap: DEFAULT_MEMORY_CAP,
            rejection_cap: DEFAULT_REJECTION_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub lattice: LatticeSection,
    #[serde(default)]
    pub partition: Option<PartitionSpec>,
    #[serde(default)]
    pub strings: StringsSection,
    #[serde(default)]
    pub oracle: OracleSection,
    #[serde(default)]
    pub monte_carlo: MonteCarloSection,
    #[serde(default)]
    pub regions: RegionsSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub budget: BudgetSection,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl ExperimentConfig {
    /// A config with only the lattice set.
    pub fn new(size: usize, dim: u32) -> Self {
        ExperimentConfig {
            lattice: LatticeSection { size, dim },
            partition: None,
            strings: StringsSection::default(),
            oracle: OracleSection::default(),
            monte_carlo: MonteCarloSection::default(),
            regions: RegionsSection::default(),
            output: OutputSection::default(),
            budget: BudgetSection::default(),
            base_dir: PathBuf::from("."),
        }
    }

    pub fn from_toml_str(text: &str, base_dir: impl Into<PathBuf>) -> Result<Self> {
        let de = toml::de::Deserializer::parse(text).map_err(|e| Error::parse("<toml>", e.message()))?;
        let mut cfg: ExperimentConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let key = e.path().to_string();
            Error::parse(key, e.into_inner().message())
        })?;
        cfg.base_dir = base_dir.into();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml_str(&text, base)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lattice.size < 2 {
            return Err(Error::parse("lattice.size", "must be at least 2"));
        }
        if self.lattice.dim < 2 {
            return Err(Error::parse("lattice.dim", "must be at least 2"));
        }
        if self.monte_carlo.samples < MIN_SAMPLES {
            return Err(Error::parse(
                "monte_carlo.samples",
                format!("must be at least {MIN_SAMPLES}"),
            ));
        }
        if self.budget.term_cap == 0 {
            return Err(Error::parse("budget.term_cap", "must be positive"));
        }
        if let Some(g) = &self.strings.generate {
            if g.shapes.is_empty() && g.depth > 0 {
                return Err(Error::parse("strings.generate.shapes", "no shapes to sample from"));
            }
        }
        if let Some(PartitionSpec::Annulus { thickness, .. }) = &self.partition {
            if *thickness < 2 {
                return Err(Error::parse("partition.thickness", "must be at least 2"));
            }
        }
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn build_lattice(&self) -> Result<Lattice> {
        Lattice::new(LatticeConfig::new(self.lattice.size, self.lattice.dim))
    }

    /// Annulus geometry when the partition is given by parameters.
    pub fn geometry(&self) -> Option<PartitionGeometry> {
        match self.partition {
            Some(PartitionSpec::Annulus {
                row,
                col,
                size,
                thickness,
            }) => Some(PartitionGeometry {
                row,
                col,
                size,
                thickness,
            }),
            _ => None,
        }
    }

    pub fn build_partition(&self, lattice: &Lattice) -> Result<Partition> {
        let spec = self
            .partition
            .as_ref()
            .ok_or_else(|| Error::parse("partition", "section missing"))?;
        let keyed = |key: &str, e: Error| match e {
            Error::Config(m) => Error::parse(format!("partition.{key}"), m),
            other => other,
        };
        match spec {
            PartitionSpec::Annulus { .. } => {
                standard_partition(lattice, self.geometry().unwrap()).map_err(|e| keyed("size", e))
            }
            PartitionSpec::Strip {
                row,
                col,
                height,
                widths,
            } => simply_connected_partition(lattice, *row, *col, *height, *widths).map_err(|e| keyed("widths", e)),
            PartitionSpec::Explicit { a, b_left, b_right, c } => {
                let load = |key: &str, p: &Path| read_region_file(lattice, &self.resolve(p)).map_err(|e| keyed(key, e));
                Partition::from_pieces(
                    lattice,
                    load("a", a)?,
                    load("b_left", b_left)?,
                    load("b_right", b_right)?,
                    load("c", c)?,
                )
            }
        }
    }

    /// SHA-256 of the canonical config text followed by every referenced
    /// file, in order.
    pub fn hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        let canonical = toml::to_string(self).map_err(|e| Error::Config(e.to_string()))?;
        h.update(canonical.as_bytes());
        let mut files: Vec<&PathBuf> = self.strings.files.iter().chain(&self.regions.files).collect();
        if let Some(PartitionSpec::Explicit { a, b_left, b_right, c }) = &self.partition {
            files.extend([a, b_left, b_right, c]);
        }
        for f in files {
            h.update(std::fs::read(self.resolve(f))?);
        }
        Ok(hex::encode(h.finalize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"
[lattice]
size = 12
dim = 2

[partition]
kind = "annulus"
row = 2
col = 2
size = 8
thickness = 2
"#;

    #[test]
    fn parses_minimal_annulus_config() {
        let cfg = ExperimentConfig::from_toml_str(BASE, ".").unwrap();
        assert_eq!(cfg.lattice.size, 12);
        assert_eq!(cfg.geometry().unwrap().size, 8);
        assert_eq!(cfg.budget.term_cap, DEFAULT_TERM_CAP);
        assert_eq!(cfg.oracle.kind, OracleKind::Group);
        let lat = cfg.build_lattice().unwrap();
        assert!(cfg.build_partition(&lat).is_ok());
    }

    #[test]
    fn unknown_key_is_named() {
        let text = format!("{BASE}\n[budget]\nterm_cup = 5\n");
        let err = ExperimentConfig::from_toml_str(&text, ".").unwrap_err();
        assert!(err.to_string().contains("budget"), "{err}");
        assert!(err.to_string().contains("term_cup"), "{err}");
    }

    #[test]
    fn bad_type_is_named() {
        let text = BASE.replace("size = 12", "size = \"twelve\"");
        let err = ExperimentConfig::from_toml_str(&text, ".").unwrap_err();
        assert!(err.to_string().contains("lattice.size"), "{err}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn semantic_errors_are_named() {
        let text = BASE.replace("dim = 2", "dim = 1");
        let err = ExperimentConfig::from_toml_str(&text, ".").unwrap_err();
        assert!(err.to_string().contains("lattice.dim"), "{err}");
        let text = format!("{BASE}\n[monte_carlo]\nsamples = 10\n");
        let err = ExperimentConfig::from_toml_str(&text, ".").unwrap_err();
        assert!(err.to_string().contains("monte_carlo.samples"), "{err}");
    }

    #[test]
    fn oversized_partition_is_a_config_error() {
        let text = BASE.replace("size = 8", "size = 11");
        let cfg = ExperimentConfig::from_toml_str(&text, ".").unwrap();
        let lat = cfg.build_lattice().unwrap();
        let err = cfg.build_partition(&lat).unwrap_err();
        assert!(err.to_string().contains("partition"), "{err}");
    }

    #[test]
    fn hash_is_stable_and_sensitive() {
        let a = ExperimentConfig::from_toml_str(BASE, ".").unwrap();
        let b = ExperimentConfig::from_toml_str(&format!("# comment\n{BASE}"), ".").unwrap();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        let c = ExperimentConfig::from_toml_str(&BASE.replace("row = 2", "row = 3"), ".").unwrap();
        assert_ne!(a.hash().unwrap(), c.hash().unwrap());
    }

    #[test]
    fn generator_shapes_parse() {
        let text =
            format!("{BASE}\n[strings.generate]\ncount = 3\ndepth = 2\nshapes = [{{ kind = \"disk\", radius = 1 }}]\n");
        let cfg = ExperimentConfig::from_toml_str(&text, ".").unwrap();
        let g = cfg.strings.generate.unwrap();
        assert_eq!(g.shapes, vec![DomainShape::Disk { radius: 1 }]);
    }
}
