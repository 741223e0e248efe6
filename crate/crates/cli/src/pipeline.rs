//! Experiment drivers shared by the commands: fit grids and perturbation sweeps.

use anyhow::{anyhow, bail, Context, Result};
use daa::archetypes::SystemSpec as Spec;
use daa::perturb::{self, GpKernelParams, PerturbationKind};
use daa::targets::TargetBase;
use daa::{FitConfig, FitResult, PerturbationSpec, SystemSpec, TargetSpec, TrajectoryBatch};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

pub const DEFAULT_TARGETS: [&str; 6] = ["ring", "ring_noisy", "vdp", "selkov", "lienard", "two_blas"];

/// A registry target, a bare archetype, or a target JSON file.
pub fn resolve_target(system: Option<&str>, spec: Option<&Path>, dim: Option<usize>) -> Result<TargetSpec> {
    match (system, spec) {
        (_, Some(path)) => {
            let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            Ok(TargetSpec::from_json(&text).with_context(|| format!("parsing {}", path.display()))?)
        }
        (Some(name), None) => {
            if let Ok(t) = TargetSpec::named(name) {
                if dim.is_some_and(|d| d != t.dim()) {
                    bail!("target `{name}` is {}-dimensional", t.dim());
                }
                return Ok(t);
            }
            let s = Spec::named(name, dim.unwrap_or(2)).map_err(|_| anyhow!("unknown system `{name}`"))?;
            Ok(TargetSpec::new(name, TargetBase::System(s)))
        }
        (None, None) => bail!("one of --system or --spec is required"),
    }
}

pub fn archetype(name: &str, dim: usize) -> Result<SystemSpec> {
    Spec::named(name, dim).map_err(|_| anyhow!("unknown archetype `{name}`"))
}

/// Fits one archetype to a batch and labels the result.
pub fn fit_one(arch: &str, target_name: &str, batch: &TrajectoryBatch, cfg: &FitConfig) -> Result<FitResult> {
    let spec = archetype(arch, batch.dim())?;
    let mut r = daa::train::fit(&spec, &spec.params, batch, cfg).with_context(|| format!("fitting {arch} to {target_name}"))?;
    r.archetype_name = arch.to_string();
    r.target_name = target_name.to_string();
    Ok(r)
}

/// Every (archetype, target) fit at one seed. Targets are simulated with
/// their default protocol; fits run in parallel and `done` sees each one as
/// it finishes. The map is keyed by `(archetype, target)`.
pub fn fit_grid(
    archetypes: &[String],
    targets: &[TargetSpec],
    cfg: &FitConfig,
    done: impl Fn(&str, &str, &Result<FitResult>) + Sync,
) -> Result<BTreeMap<(String, String), Result<FitResult>>> {
    let batches = targets
        .iter()
        .map(|t| t.simulate_default(cfg.seed).with_context(|| format!("simulating {}", t.name)))
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, &String)> = (0..targets.len()).flat_map(|j| archetypes.iter().map(move |a| (j, a))).collect();
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(j, a)| {
            let r = fit_one(a, &targets[j].name, &batches[j], cfg);
            done(a, &targets[j].name, &r);
            ((a.clone(), targets[j].name.clone()), r)
        })
        .collect();
    Ok(results.into_iter().collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepKind {
    /// Trajectories mapped through a random diffeomorphism scaled by `s`.
    Diffeo,
    /// An additive GP vector field of RMS `s`.
    Vf,
}

impl FromStr for SweepKind {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "diffeo" | "diffeo_interp" => Ok(Self::Diffeo),
            "vf" | "gp" | "gp_field" => Ok(Self::Vf),
            _ => bail!("unknown perturbation kind `{s}` (expected diffeo or vf)"),
        }
    }
}

impl SweepKind {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Diffeo => "diffeo",
            Self::Vf => "vf",
        }
    }
}

pub fn perturbation(kind: SweepKind, s: f64, seed: u64, lengthscale: Option<f64>) -> PerturbationSpec {
    match kind {
        SweepKind::Diffeo => PerturbationSpec::diffeo_interp(s, seed),
        SweepKind::Vf => {
            let mut p = PerturbationSpec::gp_field(s, seed);
            p.gp = Some(GpKernelParams { lengthscale, ..Default::default() });
            p
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub kind: SweepKind,
    pub s: f64,
    pub seed: u64,
    pub archetype: String,
    pub dissimilarity: f64,
    pub complexity: f64,
    /// Known-deformation reference: complexity of the generating map over
    /// the unperturbed points (`diffeo`), or the sup norm of the added
    /// field (`vf`).
    pub baseline: f64,
}

pub const SWEEP_HEADER: &str = "kind,s,seed,archetype,dissimilarity,complexity,baseline";

impl SweepRow {
    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.kind.as_str(),
            self.s,
            self.seed,
            self.archetype,
            self.dissimilarity,
            self.complexity,
            self.baseline
        )
    }

    pub fn parse_csv(text: &str) -> Result<Vec<Self>> {
        let mut lines = text.lines();
        match lines.next() {
            Some(h) if h.trim() == SWEEP_HEADER => {}
            _ => bail!("sweep CSV must start with `{SWEEP_HEADER}`"),
        }
        lines
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty())
            .map(|(i, l)| {
                let c: Vec<&str> = l.split(',').collect();
                if c.len() != 7 {
                    bail!("line {}: expected 7 fields", i + 2);
                }
                let num = |k: usize| c[k].parse::<f64>().with_context(|| format!("line {}: bad number `{}`", i + 2, c[k]));
                Ok(Self {
                    kind: c[0].parse()?,
                    s: num(1)?,
                    seed: c[2].parse().with_context(|| format!("line {}: bad seed", i + 2))?,
                    archetype: c[3].to_string(),
                    dissimilarity: num(4)?,
                    complexity: num(5)?,
                    baseline: num(6)?,
                })
            })
            .collect()
    }
}

/// One perturbed target per `(s, seed)`, fitted by each archetype with the
/// same seed. Rows come out ordered by seed, then `s`, then archetype.
pub fn sweep(
    kind: SweepKind,
    base: &TargetSpec,
    scales: &[f64],
    seeds: &[u64],
    archetypes: &[String],
    lengthscale: Option<f64>,
    cfg: &FitConfig,
) -> Result<Vec<SweepRow>> {
    let mut jobs = Vec::new();
    for &seed in seeds {
        for &s in scales {
            let p = perturbation(kind, s, seed, lengthscale);
            let target = base.clone().with_perturbation(p.clone());
            let batch = target.simulate_default(seed).with_context(|| format!("simulating {} at s = {s}", base.name))?;
            let baseline = match p.kind {
                PerturbationKind::DiffeoInterp => {
                    let clean = base.simulate_default(seed)?;
                    perturb::random_diffeo_interp(&p, base.dim())?.complexity(clean.points())?.mean
                }
                PerturbationKind::GpField => {
                    let clean = base.simulate_default(seed)?;
                    perturb::sample_gp_field(&p, target.gp_lattice(&p, &clean)?)?.sup_norm()
                }
            };
            for a in archetypes {
                jobs.push((seed, s, a.clone(), batch.clone(), baseline));
            }
        }
    }
    jobs.par_iter()
        .map(|(seed, s, a, batch, baseline)| {
            let r = fit_one(a, &base.name, batch, &FitConfig { seed: *seed, ..cfg.clone() })?;
            Ok(SweepRow {
                kind,
                s: *s,
                seed: *seed,
                archetype: a.clone(),
                dissimilarity: r.test_mse,
                complexity: r.complexity,
                baseline: *baseline,
            })
        })
        .collect()
}

/// Spearman correlation of `s` with dissimilarity, complexity and baseline
/// for one archetype, pooled over seeds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTrend {
    pub archetype: String,
    pub dissimilarity: Option<f64>,
    pub complexity: Option<f64>,
    pub baseline: Option<f64>,
}

pub fn trends(rows: &[SweepRow]) -> Vec<SweepTrend> {
    let mut names: Vec<&str> = Vec::new();
    for r in rows {
        if !names.contains(&r.archetype.as_str()) {
            names.push(&r.archetype);
        }
    }
    names
        .into_iter()
        .map(|a| {
            let sel: Vec<&SweepRow> = rows.iter().filter(|r| r.archetype == a).collect();
            let s: Vec<f64> = sel.iter().map(|r| r.s).collect();
            let col = |f: fn(&SweepRow) -> f64| daa::stats::spearman(&s, &sel.iter().map(|r| f(r)).collect::<Vec<_>>());
            SweepTrend {
                archetype: a.to_string(),
                dissimilarity: col(|r| r.dissimilarity),
                complexity: col(|r| r.complexity),
                baseline: col(|r| r.baseline),
            }
        })
        .collect()
}
