use std::collections::BTreeMap;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use nalgebra::DVector;
use polyvem::analysis::{
    convergence_study, displacement_error, element_stresses, evaluate, stress_error, Benchmark, ErrorReport,
};
use polyvem::assembly::{
    apply_dirichlet, assemble_system, dirichlet_values, mat_vec, solve, ConstrainedSystem, Solution,
};
use polyvem::element::Material;
use polyvem::meshgen::{self, BoxDomain};
use polyvem::quadrature::MomentMode;
use polyvem::{Point3, PolyMesh};
use serde::Serialize;

use crate::config::{MeshSource, Problem, RunConfig};
use crate::output::{csv_table, vtk_document, write_json, write_text};
use crate::{ConfigArgs, MeshKind};

fn bounds6(v: &[f64]) -> Result<[f64; 6]> {
    v.try_into()
        .map_err(|_| anyhow::anyhow!("--box needs 6 values x0,x1,y0,y1,z0,z1, got {}", v.len()))
}

fn counts3(v: &[usize]) -> Result<[usize; 3]> {
    v.try_into()
        .map_err(|_| anyhow::anyhow!("brick subdivisions need 3 values nx,ny,nz, got {}", v.len()))
}

impl ConfigArgs {
    /// Config file (if any) with the command-line flags applied on top.
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let mut cfg = RunConfig::load(path)?;
                let base = path.parent().unwrap_or(Path::new("."));
                for source in cfg.mesh.iter_mut().chain(cfg.meshes.iter_mut()) {
                    if let MeshSource::File(p) = source {
                        *p = base.join(&*p);
                    }
                }
                if cfg.output.is_relative() {
                    cfg.output = base.join(&cfg.output);
                }
                cfg
            }
            None => RunConfig::default(),
        };
        if let Some(p) = self.problem {
            cfg.problem = p;
        }
        if self.young.is_some() || self.poisson.is_some() {
            let (young, poisson) = match cfg.material()? {
                Material::Isotropic { young, poisson } => (young, poisson),
                Material::Anisotropic { .. } => bail!("--young/--poisson cannot modify an anisotropic material"),
            };
            cfg.material = Some(Material::isotropic(
                self.young.unwrap_or(young),
                self.poisson.unwrap_or(poisson),
            )?);
        }
        macro_rules! set {
            ($($field:ident),*) => {$(if let Some(v) = &self.$field { cfg.$field = v.clone(); })*};
        }
        set!(gamma, mode, output, tolerance, nterms, force, length);

        let bounds = self.bounds.as_deref().map(bounds6).transpose()?;
        let seed = self.seed.unwrap_or(0);
        let source = if let Some(path) = &self.mesh {
            Some(MeshSource::File(path.clone()))
        } else if let Some(n) = &self.hex {
            Some(MeshSource::Hex {
                bounds,
                n: counts3(n)?,
                distortion: self.distortion.unwrap_or(0.0),
                seed,
            })
        } else if let Some(n) = self.voronoi {
            Some(MeshSource::Voronoi { bounds, n, seed })
        } else {
            self.cvt.map(|n| MeshSource::Cvt {
                bounds,
                n,
                seed,
                max_iters: self.max_iters.unwrap_or_else(crate::config::default_max_iters),
            })
        };
        if let Some(source) = source {
            cfg.mesh = Some(source);
            cfg.meshes.clear();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Serialize)]
struct MeshSummary {
    vertices: usize,
    faces: usize,
    elements: usize,
    h_min: f64,
    h_max: f64,
    volume: f64,
}

impl MeshSummary {
    fn of(mesh: &PolyMesh) -> Self {
        Self {
            vertices: mesh.num_vertices(),
            faces: mesh.num_faces(),
            elements: mesh.num_elements(),
            h_min: mesh.min_element_diameter(),
            h_max: mesh.max_element_diameter(),
            volume: mesh.total_volume(),
        }
    }
}

pub fn meshgen(kind: &MeshKind) -> Result<()> {
    let (mesh, common) = match kind {
        MeshKind::Hex { common, n, distortion } => {
            let domain = BoxDomain::from_bounds(bounds6(&common.bounds)?)?;
            let n = counts3(n)?;
            let mesh = if *distortion == 0.0 {
                meshgen::hex_mesh(&domain, n[0], n[1], n[2])?
            } else {
                meshgen::distorted_hex_mesh(&domain, n, *distortion, common.seed)?
            };
            (mesh, common)
        }
        MeshKind::Voronoi { common, n } => {
            let domain = BoxDomain::from_bounds(bounds6(&common.bounds)?)?;
            (meshgen::voronoi_mesh(&meshgen::random_seeds(&domain, *n, common.seed)?)?, common)
        }
        MeshKind::Cvt { common, n, max_iters } => {
            let domain = BoxDomain::from_bounds(bounds6(&common.bounds)?)?;
            let result = meshgen::cvt(&domain, *n, *max_iters, common.seed)?;
            if !result.converged {
                eprintln!(
                    "warning: Lloyd iteration stopped after {} steps (last move {:.3e})",
                    result.movements.len(),
                    result.movements.last().copied().unwrap_or(0.0)
                );
            }
            (result.mesh, common)
        }
    };
    meshgen::write_mesh(&mesh, &common.output).with_context(|| format!("writing {}", common.output.display()))?;
    let s = MeshSummary::of(&mesh);
    println!(
        "wrote {}: {} elements, {} faces, {} vertices, element diameter {:.6e} to {:.6e}",
        common.output.display(),
        s.elements,
        s.faces,
        s.vertices,
        s.h_min,
        s.h_max
    );
    Ok(())
}

/// Displacement at a point, read from the nearest mesh vertex.
#[derive(Serialize)]
struct Probe {
    name: String,
    point: [f64; 3],
    vertex: usize,
    vertex_position: [f64; 3],
    computed: [f64; 3],
    exact: [f64; 3],
}

#[derive(Serialize)]
struct RunReport {
    problem: Problem,
    mode: MomentMode,
    gamma: f64,
    material: Material,
    parameters: BTreeMap<String, f64>,
    mesh: MeshSummary,
    num_dofs: usize,
    num_constrained: usize,
    relative_residual: f64,
    e_u: f64,
    e_sigma: f64,
    probes: Vec<Probe>,
}

fn relative_residual(system: &ConstrainedSystem, full: &DVector<f64>) -> f64 {
    let reduced = DVector::from_iterator(system.free_dofs.len(), system.free_dofs.iter().map(|&d| full[d]));
    let r = mat_vec(&system.matrix, &reduced) - &system.rhs;
    let scale = system.rhs.norm();
    if scale > 0.0 {
        r.norm() / scale
    } else {
        r.norm()
    }
}

fn nearest_vertex(mesh: &PolyMesh, x: &Point3) -> usize {
    (0..mesh.num_vertices())
        .min_by(|&a, &b| (mesh.vertex(a) - x).norm().total_cmp(&(mesh.vertex(b) - x).norm()))
        .expect("mesh has vertices")
}

fn probes(mesh: &PolyMesh, bench: &Benchmark, u: &Solution) -> Vec<Probe> {
    let Benchmark::Beam(beam) = bench else {
        return Vec::new();
    };
    [Point3::zeros(), Point3::new(0.0, 0.0, beam.length)]
        .iter()
        .map(|x| {
            let v = nearest_vertex(mesh, x);
            Probe {
                name: format!("u({}, {}, {})", x.x, x.y, x.z),
                point: [x.x, x.y, x.z],
                vertex: v,
                vertex_position: (*mesh.vertex(v)).into(),
                computed: u.vertex_displacement(v).into(),
                exact: bench.solution().displacement(x).into(),
            }
        })
        .collect()
}

fn prepare_output(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating output directory {}", dir.display()))
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let bench = cfg.benchmark()?;
    let material = cfg.material()?;
    let mesh = cfg.single_mesh_source()?.build(&cfg.domain()?)?;
    let problem = bench.problem(cfg.gamma)?;
    let system = assemble_system(&mesh, &problem, cfg.mode)?;
    let constraints = dirichlet_values(&mesh, &*problem.displacement, &problem.displacement_boundary);
    let constrained = apply_dirichlet(&system, constraints)?;
    let solution = Solution {
        displacement: solve(&constrained)?,
        num_dofs: constrained.num_dofs,
        num_constrained: constrained.constraints.len(),
    };
    let residual = relative_residual(&constrained, &solution.displacement);
    ensure!(
        residual <= cfg.tolerance,
        "linear solve residual {residual:.3e} exceeds the tolerance {:.3e}",
        cfg.tolerance
    );
    let exact = bench.solution();
    let u = &solution.displacement;
    let report = RunReport {
        problem: cfg.problem,
        mode: cfg.mode,
        gamma: cfg.gamma,
        material,
        parameters: exact.parameters(),
        mesh: MeshSummary::of(&mesh),
        num_dofs: solution.num_dofs,
        num_constrained: solution.num_constrained,
        relative_residual: residual,
        e_u: displacement_error(&mesh, u, exact)?,
        e_sigma: stress_error(&mesh, u, exact, &material, cfg.mode)?,
        probes: probes(&mesh, &bench, &solution),
    };
    let stresses = element_stresses(&mesh, u, &material, cfg.mode)?;

    prepare_output(&cfg.output)?;
    write_text(&cfg.output.join("solution.vtk"), &vtk_document(&mesh, Some(u.as_slice()), Some(&stresses)))?;
    write_json(&cfg.output.join("report.json"), &report)?;
    let csv = csv_table(
        &["elements", "dofs", "h", "gamma", "e_u", "e_sigma"],
        &[vec![
            report.mesh.elements as f64,
            report.num_dofs as f64,
            report.mesh.h_max,
            cfg.gamma,
            report.e_u,
            report.e_sigma,
        ]],
    );
    write_text(&cfg.output.join("report.csv"), &csv)?;
    println!(
        "{} on {} elements ({} dofs, {} mode, gamma {}): e_u {:.6e}, e_sigma {:.6e}",
        problem_name(cfg.problem),
        report.mesh.elements,
        report.num_dofs,
        cfg.mode,
        cfg.gamma,
        report.e_u,
        report.e_sigma
    );
    for p in &report.probes {
        println!("  {}: computed u2 {:.6e}, exact u2 {:.6e}", p.name, p.computed[1], p.exact[1]);
    }
    println!("results in {}", cfg.output.display());
    Ok(())
}

fn problem_name(p: Problem) -> &'static str {
    match p {
        Problem::Beam => "beam",
        Problem::Patch => "patch",
    }
}

/// Brick refinement sequence over the problem domain.
fn level_sources(cfg: &RunConfig, levels: &[usize]) -> Vec<MeshSource> {
    levels
        .iter()
        .map(|&n| MeshSource::Hex {
            bounds: None,
            n: match cfg.problem {
                Problem::Beam => [n, n, 5 * n],
                Problem::Patch => [n, n, n],
            },
            distortion: 0.0,
            seed: 0,
        })
        .collect()
}

#[derive(Serialize)]
struct SweepReport<'a> {
    problem: Problem,
    mode: MomentMode,
    levels: &'a [ErrorReport],
    e_sigma_max_over_min: f64,
}

pub fn convergence(cfg: &RunConfig, levels: Option<&[usize]>) -> Result<()> {
    let sources = match levels {
        Some(levels) => level_sources(cfg, levels),
        None if !cfg.meshes.is_empty() => cfg.meshes.clone(),
        None => cfg.mesh.iter().cloned().collect(),
    };
    let domain = cfg.domain()?;
    let meshes = sources.iter().map(|s| s.build(&domain)).collect::<Result<Vec<_>>>()?;
    let bench = cfg.benchmark()?;
    prepare_output(&cfg.output)?;

    if !cfg.gammas.is_empty() {
        let [mesh] = meshes.as_slice() else {
            bail!("a gamma sweep runs on exactly one mesh, got {}", meshes.len());
        };
        let reports = cfg
            .gammas
            .iter()
            .map(|&g| evaluate(mesh, &bench, g, cfg.mode).map(|(_, r)| r))
            .collect::<polyvem::Result<Vec<_>>>()?;
        let rows: Vec<Vec<f64>> = reports
            .iter()
            .map(|r| vec![r.gamma, r.h, r.num_dofs as f64, r.e_u, r.e_sigma])
            .collect();
        write_text(
            &cfg.output.join("gamma_sweep.csv"),
            &csv_table(&["gamma", "h", "dofs", "e_u", "e_sigma"], &rows),
        )?;
        let es = reports.iter().map(|r| r.e_sigma);
        let ratio = es.clone().fold(0.0, f64::max) / es.fold(f64::INFINITY, f64::min);
        write_json(
            &cfg.output.join("gamma_sweep.json"),
            &SweepReport {
                problem: cfg.problem,
                mode: cfg.mode,
                levels: &reports,
                e_sigma_max_over_min: ratio,
            },
        )?;
        for r in &reports {
            println!("gamma {:<6} e_u {:.6e}  e_sigma {:.6e}", r.gamma, r.e_u, r.e_sigma);
        }
        println!("e_sigma max/min {ratio:.4}; results in {}", cfg.output.display());
        return Ok(());
    }

    let study = convergence_study(&bench, &meshes, cfg.gamma, cfg.mode)?;
    let rows: Vec<Vec<f64>> = study
        .levels
        .iter()
        .enumerate()
        .map(|(i, r)| vec![i as f64, r.h, r.num_dofs as f64, r.e_u, r.e_sigma])
        .collect();
    write_text(
        &cfg.output.join("convergence.csv"),
        &csv_table(&["level", "h", "dofs", "e_u", "e_sigma"], &rows),
    )?;
    write_json(&cfg.output.join("convergence.json"), &study)?;
    for (i, r) in study.levels.iter().enumerate() {
        println!("level {i}: h {:.6e}  dofs {}  e_u {:.6e}  e_sigma {:.6e}", r.h, r.num_dofs, r.e_u, r.e_sigma);
    }
    println!(
        "slope e_u {}, slope e_sigma {}; results in {}",
        study.slope_u,
        study.slope_sigma,
        cfg.output.display()
    );
    Ok(())
}

/// Patch-test thresholds on the relative displacement and stress errors.
pub const PATCH_TOLERANCE_U: f64 = 1e-10;
pub const PATCH_TOLERANCE_SIGMA: f64 = 1e-9;

pub fn patch(cfg: &RunConfig) -> Result<bool> {
    let mut cfg = cfg.clone();
    cfg.problem = Problem::Patch;
    let source = match cfg.single_mesh_source() {
        Ok(s) => s.clone(),
        Err(_) if cfg.mesh.is_none() && cfg.meshes.is_empty() => MeshSource::Hex {
            bounds: None,
            n: [3, 3, 3],
            distortion: 0.0,
            seed: 0,
        },
        Err(e) => return Err(e),
    };
    let mesh = source.build(&cfg.domain()?)?;
    let (_, report) = evaluate(&mesh, &cfg.benchmark()?, cfg.gamma, cfg.mode)?;
    let passed = report.e_u <= PATCH_TOLERANCE_U && report.e_sigma <= PATCH_TOLERANCE_SIGMA;
    println!(
        "{} patch test on {} elements ({} mode, gamma {}): e_u {:.3e}, e_sigma {:.3e}",
        if passed { "PASS" } else { "FAIL" },
        report.num_elements,
        cfg.mode,
        cfg.gamma,
        report.e_u,
        report.e_sigma
    );
    Ok(passed)
}
