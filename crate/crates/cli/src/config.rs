use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use polyvem::analysis::{BeamSolution, Benchmark, PatchSolution};
use polyvem::element::Material;
use polyvem::meshgen::{self, BoxDomain};
use polyvem::quadrature::MomentMode;
use polyvem::PolyMesh;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Problem {
    Patch,
    #[default]
    Beam,
}

/// Where a mesh comes from. Boxes default to the problem domain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum MeshSource {
    File(PathBuf),
    Hex {
        #[serde(default)]
        bounds: Option<[f64; 6]>,
        n: [usize; 3],
        #[serde(default)]
        distortion: f64,
        #[serde(default)]
        seed: u64,
    },
    Voronoi {
        #[serde(default)]
        bounds: Option<[f64; 6]>,
        n: usize,
        #[serde(default)]
        seed: u64,
    },
    Cvt {
        #[serde(default)]
        bounds: Option<[f64; 6]>,
        n: usize,
        #[serde(default)]
        seed: u64,
        #[serde(default = "default_max_iters")]
        max_iters: usize,
    },
}

pub fn default_max_iters() -> usize {
    100
}

impl MeshSource {
    pub fn build(&self, default_domain: &BoxDomain) -> Result<PolyMesh> {
        let domain = |bounds: &Option<[f64; 6]>| -> Result<BoxDomain> {
            Ok(match bounds {
                Some(b) => BoxDomain::from_bounds(*b)?,
                None => *default_domain,
            })
        };
        Ok(match self {
            MeshSource::File(path) => meshgen::read_mesh(path)?,
            MeshSource::Hex {
                bounds,
                n,
                distortion,
                seed,
            } => {
                if *distortion == 0.0 {
                    meshgen::hex_mesh(&domain(bounds)?, n[0], n[1], n[2])?
                } else {
                    meshgen::distorted_hex_mesh(&domain(bounds)?, *n, *distortion, *seed)?
                }
            }
            MeshSource::Voronoi { bounds, n, seed } => {
                meshgen::voronoi_mesh(&meshgen::random_seeds(&domain(bounds)?, *n, *seed)?)?
            }
            MeshSource::Cvt {
                bounds,
                n,
                seed,
                max_iters,
            } => meshgen::cvt_mesh(&domain(bounds)?, *n, *max_iters, *seed)?,
        })
    }
}

/// Run configuration as read from a JSON file; every field has a default.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub problem: Problem,
    /// Defaults to E = 25, nu = 0.3 for the beam and E = 1, nu = 0.3 for the patch test.
    pub material: Option<Material>,
    pub gamma: f64,
    pub mode: MomentMode,
    pub mesh: Option<MeshSource>,
    /// Refinement sequence for convergence studies.
    pub meshes: Vec<MeshSource>,
    /// Stabilisation values for a gamma sweep on a single mesh.
    pub gammas: Vec<f64>,
    pub output: PathBuf,
    /// Largest accepted relative residual of the reduced system.
    pub tolerance: f64,
    pub nterms: usize,
    pub force: f64,
    pub length: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let beam = BeamSolution::default();
        Self {
            problem: Problem::Beam,
            material: None,
            gamma: 1.0,
            mode: MomentMode::Nodal,
            mesh: None,
            meshes: Vec::new(),
            gammas: Vec::new(),
            output: PathBuf::from("output"),
            tolerance: polyvem::assembly::SOLVE_TOLERANCE,
            nterms: beam.nterms,
            force: beam.force,
            length: beam.length,
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            bail!("gamma must be positive, got {}", self.gamma);
        }
        if let Some(g) = self.gammas.iter().find(|g| !(**g > 0.0 && g.is_finite())) {
            bail!("gamma sweep values must be positive, got {g}");
        }
        if !(self.tolerance > 0.0) {
            bail!("solver tolerance must be positive, got {}", self.tolerance);
        }
        if let Some(m) = &self.material {
            m.validate()?;
        }
        self.benchmark()?;
        Ok(())
    }

    pub fn material(&self) -> Result<Material> {
        Ok(match (self.material, self.problem) {
            (Some(m), _) => m,
            (None, Problem::Beam) => Material::isotropic(25.0, 0.3)?,
            (None, Problem::Patch) => Material::isotropic(1.0, 0.3)?,
        })
    }

    pub fn benchmark(&self) -> Result<Benchmark> {
        let material = self.material()?;
        Ok(match self.problem {
            Problem::Patch => Benchmark::Patch(PatchSolution::standard(material)?),
            Problem::Beam => {
                let Material::Isotropic { young, poisson } = material else {
                    bail!("the beam solution needs an isotropic material");
                };
                Benchmark::Beam(BeamSolution::new(self.force, self.length, young, poisson, self.nterms)?)
            }
        })
    }

    pub fn domain(&self) -> Result<BoxDomain> {
        Ok(match self.benchmark()? {
            Benchmark::Beam(b) => b.domain(),
            Benchmark::Patch(_) => BoxDomain::unit(),
        })
    }

    /// The single mesh of a run; exactly one source must be configured.
    pub fn single_mesh_source(&self) -> Result<&MeshSource> {
        match (&self.mesh, self.meshes.as_slice()) {
            (Some(m), []) => Ok(m),
            (None, [m]) => Ok(m),
            (None, []) => bail!("no mesh source configured"),
            _ => bail!("exactly one mesh source is required, found several"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_describe_the_beam() {
        let c = RunConfig::default();
        c.validate().unwrap();
        let Benchmark::Beam(b) = c.benchmark().unwrap() else {
            panic!("beam expected")
        };
        assert_eq!((b.force, b.length, b.young, b.poisson, b.nterms), (0.1, 10.0, 25.0, 0.3, 16));
    }

    #[test]
    fn json_config_parses() {
        let c: RunConfig = serde_json::from_str(
            r#"{"problem": "patch", "gamma": 2, "mode": "moment",
                "material": {"type": "isotropic", "young": 3, "poisson": 0.2},
                "mesh": {"hex": {"n": [3, 3, 3]}}}"#,
        )
        .unwrap();
        assert_eq!(c.problem, Problem::Patch);
        assert_eq!(c.mode, MomentMode::Moment);
        assert_eq!(c.single_mesh_source().unwrap(), &MeshSource::Hex {
            bounds: None,
            n: [3, 3, 3],
            distortion: 0.0,
            seed: 0
        });
        c.validate().unwrap();
    }

    #[test]
    fn invalid_configs_rejected() {
        assert!(serde_json::from_str::<RunConfig>(r#"{"problem": "plate"}"#).is_err());
        assert!(serde_json::from_str::<RunConfig>(r#"{"gama": 1}"#).is_err());
        let c = RunConfig {
            gamma: 0.0,
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        let c = RunConfig {
            material: Some(Material::Isotropic {
                young: 1.0,
                poisson: 0.5,
            }),
            ..RunConfig::default()
        };
        assert!(c.validate().is_err());
        let two = RunConfig {
            mesh: Some(MeshSource::File("a.json".into())),
            meshes: vec![MeshSource::File("b.json".into())],
            ..RunConfig::default()
        };
        assert!(two.single_mesh_source().is_err());
    }
}
