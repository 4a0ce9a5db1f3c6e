//! End-to-end orchestration: one declarative config in, artifacts out
//! (`summary.json`, `report.csv`, `decomposition.svg`). Every stage is
//! deterministic given the config and seed.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::approximant::{
    convergence_run, poincare_check, PoincareReport, RunSettings, SobolevReport,
};
use crate::capacity::{lemma22_check, verify_estimates, EstimatesReport, Lemma22Report};
use crate::decomposition::build_cells;
use crate::error::{Error, Result};
use crate::field::ScalarField;
use crate::grid::PullbackGrid;
use crate::layer::{build_layer, verify_separation, C_GEO_HARD_DEFAULT, SeparationReport};
use crate::map::ConformalMap;
use crate::partition::{Partition, PartitionConfig, PartitionReport};
use crate::quadrature::PolarQuadrature;
use crate::svg::render_to_file;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub schema_version: u32,
    pub map: String,
    pub map_param: Option<f64>,
    /// field spec, e.g. `const:1`, `re`, `powerdist:0:0.5`, `loglog:0`
    pub field: String,
    pub p: f64,
    pub m_list: Vec<u32>,
    pub n_max: u32,
    pub k_samples: usize,
    pub quad_density: usize,
    pub metric_density: usize,
    /// lattice size for the capacity suite (0 disables the suite)
    pub capacity_grid: usize,
    pub verify_samples: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            map: "identity".into(),
            map_param: None,
            field: "const:1".into(),
            p: 2.0,
            m_list: vec![3, 4, 5],
            n_max: 4,
            k_samples: 8,
            quad_density: 2,
            metric_density: 16,
            capacity_grid: 160,
            verify_samples: 20_000,
            seed: 1,
            output_dir: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Config(format!(
                "unsupported schema version {} (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.m_list.is_empty() {
            return Err(Error::Config("m_list must be nonempty".into()));
        }
        for &m in &self.m_list {
            if !(2..=14).contains(&m) {
                return Err(Error::Config(format!("m = {m} out of range 2..=14")));
            }
        }
        if !(1.0..=16.0).contains(&self.p) {
            return Err(Error::Config(format!("p = {} out of range [1, 16]", self.p)));
        }
        if self.n_max < 3 || self.k_samples < 8 || self.quad_density == 0 {
            return Err(Error::Config(
                "need n_max >= 3, k_samples >= 8, quad_density >= 1".into(),
            ));
        }
        Ok(())
    }

    fn settings(&self) -> RunSettings {
        RunSettings {
            n_max: self.n_max,
            k_samples: self.k_samples,
            quad_density: self.quad_density,
            metric_density: self.metric_density,
        }
    }
}

/// Everything `run` measures, serialized as `summary.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunSummary {
    pub config: RunConfig,
    pub partition_config: PartitionConfig,
    pub partition_report: PartitionReport,
    pub separation: SeparationReport,
    pub poincare: PoincareReport,
    pub capacity: Option<EstimatesReport>,
    pub lemma22: Option<Lemma22Report>,
    pub convergence: Vec<SobolevReport>,
    pub max_lambda: f64,
    pub c_geo: f64,
    pub pass: bool,
}

fn stage<T>(name: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| Error::Construction(format!("stage {name}: {e}")))
}

/// Execute the full pipeline and write the artifacts.
pub fn run(config: &RunConfig) -> Result<RunSummary> {
    config.validate()?;
    std::fs::create_dir_all(&config.output_dir)?;

    let map = stage("map", ConformalMap::by_name(&config.map, config.map_param))?;
    let u = stage("field", ScalarField::by_name(&config.field, &map))?;
    stage("field", u.check_membership(config.p))?;

    // structural verification at the first requested level
    let m0 = config.m_list[0];
    let mut decomp = stage("decompose", build_cells(m0))?;
    stage("decompose", decomp.compute_metrics(&map, config.metric_density))?;
    let layer = stage(
        "layer",
        build_layer(&map, &decomp, config.n_max, config.k_samples, C_GEO_HARD_DEFAULT),
    )?;
    let partition = stage("partition", Partition::build(&map, &decomp, &layer))?;
    let partition_report = stage(
        "partition-verify",
        partition.verify_partition(config.verify_samples, config.seed),
    )?;

    let sep_grid = stage(
        "separation",
        PullbackGrid::build(&map, m0 + config.n_max + 5, 16, 8192),
    )?;
    let separation = stage("separation", verify_separation(&sep_grid, &layer, &decomp))?;

    let quadrature = stage(
        "quadrature",
        PolarQuadrature::build(&map, m0, config.n_max, config.quad_density),
    )?;
    let h = 0.5f64.powi(m0 as i32 + 6);
    let poincare = stage(
        "poincare",
        poincare_check(&u, &map, &decomp, config.p, &quadrature, h),
    )?;

    let (capacity, lemma22) = if config.capacity_grid >= 16 {
        (
            Some(stage("capacity", verify_estimates(&map, config.capacity_grid))?),
            Some(stage("lemma22", lemma22_check(&map, 0.5, config.capacity_grid))?),
        )
    } else {
        (None, None)
    };

    let convergence = stage(
        "convergence",
        convergence_run(&u, &map, config.p, &config.m_list, &config.settings()),
    )?;

    stage(
        "render",
        render_to_file(&map, &decomp, &layer, &config.output_dir.join("decomposition.svg")),
    )?;

    let pass = partition_report.min_phi >= 0.25
        && partition_report.max_sum_defect < 1e-12
        && separation.passed()
        && capacity
            .as_ref()
            .map_or(true, |c| c.ring_ratios.iter().all(|r| (0.8..=1.2).contains(r)))
        && convergence.iter().all(|r| r.w1p_error.is_finite());

    let summary = RunSummary {
        config: config.clone(),
        partition_config: partition.config.clone(),
        partition_report,
        separation,
        poincare,
        capacity,
        lemma22,
        convergence,
        max_lambda: decomp.max_lambda().unwrap_or(f64::NAN),
        c_geo: layer.c_geo,
        pass,
    };

    write_summary(&summary, &config.output_dir)?;
    write_csv(&summary.convergence, &config.output_dir.join("report.csv"))?;
    Ok(summary)
}

fn write_summary(summary: &RunSummary, dir: &Path) -> Result<()> {
    let json = serde_json::to_string_pretty(summary)?;
    std::fs::write(dir.join("summary.json"), json + "\n")?;
    Ok(())
}

fn write_csv(rows: &[SobolevReport], path: &Path) -> Result<()> {
    let mut out = String::from(
        "m,p,lp_error,grad_error,w1p_error,sup_um,sup_grad_um,tail_energy,tail_area\n",
    );
    for r in rows {
        out.push_str(&format!(
            "{},{},{:e},{:e},{:e},{:e},{:e},{:e},{:e}\n",
            r.m,
            r.p,
            r.lp_error,
            r.grad_error,
            r.w1p_error,
            r.sup_um,
            r.sup_grad_um,
            r.tail_energy,
            r.tail_area
        ));
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_config(dir: &Path) -> RunConfig {
        RunConfig {
            map: "identity".into(),
            field: "const:1".into(),
            p: 1.0,
            m_list: vec![3],
            capacity_grid: 0, // skip the slow suite here
            verify_samples: 2_000,
            seed: 7,
            output_dir: dir.to_path_buf(),
            ..RunConfig::default()
        }
    }

    #[test]
    fn config_validation() {
        let mut c = RunConfig::default();
        c.m_list = vec![1];
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.p = 0.5;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.schema_version = 99;
        assert!(c.validate().is_err());
        assert!(RunConfig::default().validate().is_ok());
    }

    #[test]
    fn constant_run_produces_artifacts_and_tiny_error() {
        let dir = std::env::temp_dir().join("confapprox-pipeline-test");
        let _ = std::fs::remove_dir_all(&dir);
        let config = tiny_config(&dir);
        let summary = run(&config).unwrap();
        assert!(summary.pass, "{summary:?}");
        assert!(summary.convergence[0].w1p_error <= 1e-10);
        for artifact in ["summary.json", "report.csv", "decomposition.svg"] {
            assert!(dir.join(artifact).exists(), "missing {artifact}");
        }
        let csv = std::fs::read_to_string(dir.join("report.csv")).unwrap();
        assert!(csv.starts_with("m,p,lp_error"));
        assert_eq!(csv.lines().count(), 2);
    }

    #[test]
    fn identical_config_and_seed_byte_identical_summary() {
        let dir_a = std::env::temp_dir().join("confapprox-det-a");
        let dir_b = std::env::temp_dir().join("confapprox-det-b");
        for d in [&dir_a, &dir_b] {
            let _ = std::fs::remove_dir_all(d);
        }
        let mut config_a = tiny_config(&dir_a);
        config_a.field = "re".into();
        let mut config_b = config_a.clone();
        config_b.output_dir = dir_b.clone();
        run(&config_a).unwrap();
        run(&config_b).unwrap();
        let mut a = std::fs::read_to_string(dir_a.join("summary.json")).unwrap();
        let mut b = std::fs::read_to_string(dir_b.join("summary.json")).unwrap();
        // the echoed config differs only in output_dir
        a = a.replace("confapprox-det-a", "X");
        b = b.replace("confapprox-det-b", "X");
        assert_eq!(a, b);
    }

    #[test]
    fn bad_map_names_failing_stage() {
        let dir = std::env::temp_dir().join("confapprox-badmap");
        let mut config = tiny_config(&dir);
        config.map = "dodecahedron".into();
        let err = run(&config).unwrap_err();
        assert!(err.to_string().contains("stage map"), "{err}");
    }
}
