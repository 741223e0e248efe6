use crate::config::{self, list, seed_or_env};
use crate::manifest::RunManifest;
use crate::pipeline::{self, SweepKind, SweepRow, DEFAULT_TARGETS, SWEEP_HEADER};
use crate::svg;
use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use daa::score::{map_manifold, MappedManifold};
use daa::sim::{self, InitRegion};
use daa::{FitConfig, FitResult, ScoreMatrix, SimConfig, SystemSpec, TargetSpec};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Parser, Debug)]
#[command(name = "daa", version, about = "Compare dynamical systems against canonical archetypes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Simulate a target or archetype and write its trajectories.
    Simulate(SimulateArgs),
    /// Simulate a system with and without a perturbation.
    Perturb(PerturbArgs),
    /// Fit one archetype to one target.
    Fit(FitArgs),
    /// Build the score matrix from saved fits, or run the whole fit grid.
    Score(ScoreArgs),
    /// Fit archetypes across a range of perturbation scales.
    Sweep(SweepArgs),
    /// Render tables and SVG figures from a matrix or sweep.
    Report(ReportArgs),
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Registry target (ring, vdp, ...) or archetype name.
    #[arg(long)]
    pub system: Option<String>,
    /// Target specification JSON, instead of --system.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// State dimension for bare archetypes.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub tmax: Option<f64>,
    #[arg(long)]
    pub n_traj: Option<usize>,
    /// Diffusion coefficient; overrides the target's own.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Integrator steps per recorded interval.
    #[arg(long)]
    pub substeps: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON file with any of these flags as keys.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
pub struct PerturbArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimulateArgs,
    /// `vf` (additive GP vector field) or `diffeo` (random diffeomorphism).
    #[arg(long)]
    pub kind: Option<String>,
    /// RMS of the added field, or the interpolation weight in [0, 1].
    #[arg(long)]
    pub scale: Option<f64>,
    /// GP lengthscale; drawn from U[0.1, 1] when absent.
    #[arg(long)]
    pub lengthscale: Option<f64>,
    /// Seed of the perturbation; defaults to --seed.
    #[arg(long)]
    pub perturb_seed: Option<u64>,
}

#[derive(Args, Debug, Default, Clone, Serialize, Deserialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub lr: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Hidden units of the diffeomorphism's vector field.
    #[arg(long)]
    pub hidden: Option<usize>,
    /// RK4 steps of the time-1 flow.
    #[arg(long)]
    pub flow_steps: Option<usize>,
    /// Base RK4 substeps for archetypes without a closed-form flow.
    #[arg(long)]
    pub fit_substeps: Option<usize>,
    #[arg(long)]
    pub train_fraction: Option<f64>,
    #[arg(long)]
    pub learn_beta: Option<bool>,
    #[arg(long)]
    pub scan_velocity: Option<bool>,
}

impl TrainArgs {
    pub fn fit_config(&self, seed: u64) -> FitConfig {
        let d = FitConfig::default();
        FitConfig {
            lr: self.lr.unwrap_or(d.lr),
            epochs: self.epochs.unwrap_or(d.epochs),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            seed,
            learn_beta: self.learn_beta.unwrap_or(d.learn_beta),
            hidden: self.hidden.unwrap_or(d.hidden),
            flow_steps: self.flow_steps.unwrap_or(d.flow_steps),
            substeps: self.fit_substeps.unwrap_or(d.substeps),
            train_fraction: self.train_fraction.unwrap_or(d.train_fraction),
            scan_velocity: self.scan_velocity.unwrap_or(d.scan_velocity),
            ..d
        }
    }
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
pub struct FitArgs {
    #[arg(long)]
    pub archetype: Option<String>,
    /// Registry target or archetype to simulate with its default protocol.
    #[arg(long)]
    pub target: Option<String>,
    /// Target specification JSON.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Trajectory CSV to fit instead of a simulated target.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    /// Points of the archetype's invariant manifold to map into target space.
    #[arg(long)]
    pub manifold_points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
pub struct ScoreArgs {
    /// Directory of fit JSON files; without it the grid is fitted here.
    #[arg(long)]
    pub fits: Option<PathBuf>,
    /// Comma-separated archetypes (default: the whole library).
    #[arg(long)]
    pub archetypes: Option<String>,
    /// Comma-separated targets.
    #[arg(long)]
    pub targets: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
pub struct SweepArgs {
    /// `diffeo` or `vf`.
    #[arg(long)]
    pub kind: Option<String>,
    /// Comma-separated scales.
    #[arg(long)]
    pub scales: Option<String>,
    /// Comma-separated seeds.
    #[arg(long)]
    pub seeds: Option<String>,
    #[arg(long)]
    pub archetypes: Option<String>,
    /// Unperturbed system.
    #[arg(long)]
    pub target: Option<String>,
    #[arg(long)]
    pub lengthscale: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub train: TrainArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Default, Serialize, Deserialize)]
pub struct ReportArgs {
    /// Score matrix CSV.
    #[arg(long)]
    pub matrix: Option<PathBuf>,
    /// Sweep CSV.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(a) => {
            let cfg = a.config.clone();
            simulate(config::resolve(&a, cfg.as_deref())?)
        }
        Command::Perturb(a) => {
            let cfg = a.sim.config.clone();
            perturb(config::resolve(&a, cfg.as_deref())?)
        }
        Command::Fit(a) => {
            let cfg = a.config.clone();
            fit(config::resolve(&a, cfg.as_deref())?)
        }
        Command::Score(a) => {
            let cfg = a.config.clone();
            score(config::resolve(&a, cfg.as_deref())?)
        }
        Command::Sweep(a) => {
            let cfg = a.config.clone();
            sweep(config::resolve(&a, cfg.as_deref())?)
        }
        Command::Report(a) => {
            let cfg = a.config.clone();
            report(config::resolve(&a, cfg.as_deref())?)
        }
    }
}

fn out_dir(out: &Option<PathBuf>) -> Result<&Path> {
    out.as_deref().context("--out is required")
}

/// Opens the manifest, runs `body`, and records the outcome either way.
fn with_manifest<A: Serialize>(
    command: &str,
    args: &A,
    out: &Path,
    seeds: Vec<u64>,
    body: impl FnOnce(&Mutex<RunManifest>) -> Result<()>,
) -> Result<()> {
    let (value, hash) = config::config_hash(command, args)?;
    let m = Mutex::new(RunManifest::create(out, command, value, hash, seeds)?);
    let outcome = body(&m);
    let m = m.into_inner().expect("manifest lock poisoned");
    m.finish(&outcome)?;
    outcome
}

fn sim_setup(a: &SimulateArgs, seed: u64) -> Result<(TargetSpec, InitRegion<f64>, SimConfig)> {
    let mut target = pipeline::resolve_target(a.system.as_deref(), a.spec.as_deref(), a.dim)?;
    if let Some(s) = a.sigma {
        target.noise_sigma = s;
    }
    target.validate()?;
    let p = target.protocol()?;
    let mut cfg = SimConfig::new(a.dt.unwrap_or(p.dt), a.tmax.unwrap_or(p.t_max), a.n_traj.unwrap_or(p.n_traj), seed);
    if let Some(k) = a.substeps {
        cfg = cfg.with_substeps(k);
    }
    cfg.validate()?;
    Ok((target, p.region, cfg))
}

fn write_batch(m: &Mutex<RunManifest>, rel: &str, batch: &daa::TrajectoryBatch) -> Result<()> {
    let mut m = m.lock().unwrap();
    let path = m.path(rel);
    sim::write_batch(&path, batch).with_context(|| format!("writing {}", path.display()))?;
    m.register(rel)?;
    let side = sim::meta_path(Path::new(rel));
    m.register(&side.to_string_lossy())
}

fn simulate(mut a: SimulateArgs) -> Result<()> {
    let seed = seed_or_env(a.seed)?;
    a.seed = Some(seed);
    let out = out_dir(&a.out)?.to_path_buf();
    let (target, region, cfg) = sim_setup(&a, seed)?;
    with_manifest("simulate", &a, &out, vec![seed], |m| {
        let batch = target.simulate(&region, &cfg)?;
        write_batch(m, "trajectories.csv", &batch)?;
        println!("{}: {} trajectories x {} samples x {} dims", target.name, batch.n_traj(), batch.n_samples(), batch.dim());
        Ok(())
    })
}

fn perturb(mut a: PerturbArgs) -> Result<()> {
    let seed = seed_or_env(a.sim.seed)?;
    a.sim.seed = Some(seed);
    let pseed = *a.perturb_seed.get_or_insert(seed);
    let kind: SweepKind = a.kind.as_deref().context("--kind is required")?.parse()?;
    let scale = a.scale.context("--scale is required")?;
    let out = out_dir(&a.sim.out)?.to_path_buf();
    let (target, region, cfg) = sim_setup(&a.sim, seed)?;
    let p = pipeline::perturbation(kind, scale, pseed, a.lengthscale);
    p.validate()?;
    with_manifest("perturb", &a, &out, vec![seed, pseed], |m| {
        let clean = target.simulate(&region, &cfg)?;
        write_batch(m, "base.csv", &clean)?;
        let perturbed = target.clone().with_perturbation(p.clone()).simulate(&region, &cfg)?;
        write_batch(m, "trajectories.csv", &perturbed)?;
        match kind {
            SweepKind::Vf => {
                let field = daa::perturb::sample_gp_field(&p, target.gp_lattice(&p, &clean)?)?;
                let mut buf = Vec::new();
                field.write_csv(&mut buf)?;
                m.lock().unwrap().write("field.csv", &buf)?;
                println!("GP field: lengthscale {}, rms {}, sup {}", field.lengthscale, field.rms_norm(), field.sup_norm());
            }
            SweepKind::Diffeo => {
                let psi = daa::perturb::random_diffeo_interp(&p, target.dim())?;
                m.lock().unwrap().write("diffeo.json", psi.to_json()?.as_bytes())?;
                println!("deformation complexity {}", psi.complexity(clean.points())?.mean);
            }
        }
        Ok(())
    })
}

fn write_fit(m: &Mutex<RunManifest>, prefix: &str, r: &FitResult) -> Result<()> {
    let mut m = m.lock().unwrap();
    m.write(&format!("{prefix}fit.json"), r.to_json()?.as_bytes())?;
    let mut buf = Vec::new();
    r.write_loss_csv(&mut buf)?;
    m.write(&format!("{prefix}loss.csv"), &buf)
}

fn fit(mut a: FitArgs) -> Result<()> {
    let seed = seed_or_env(a.seed)?;
    a.seed = Some(seed);
    let out = out_dir(&a.out)?.to_path_buf();
    let arch = a.archetype.clone().context("--archetype is required")?;
    let cfg = a.train.fit_config(seed);
    cfg.validate()?;
    let (name, batch) = match &a.data {
        Some(path) => {
            let batch = sim::load_batch::<f64>(path).with_context(|| format!("loading {}", path.display()))?;
            let name = path.file_stem().map_or("external".into(), |s| s.to_string_lossy().into_owned());
            (name, batch)
        }
        None => {
            let t = pipeline::resolve_target(a.target.as_deref(), a.spec.as_deref(), a.dim)?;
            let batch = t.simulate_default(seed)?;
            (t.name, batch)
        }
    };
    with_manifest("fit", &a, &out, vec![seed], |m| {
        let r = pipeline::fit_one(&arch, &name, &batch, &cfg)?;
        write_fit(m, "", &r)?;
        let mapped = map_manifold(&r, a.manifold_points.unwrap_or(200))?;
        let raw = MappedManifold { points: mapped.denormalized(&r), ..mapped };
        let mut buf = Vec::new();
        raw.write_csv(&mut buf)?;
        m.lock().unwrap().write("manifold.csv", &buf)?;
        println!(
            "{name} <- {arch}: dissimilarity {:.6e}, complexity {:.4}, train {:.6e}, {:.1}s",
            r.test_mse, r.complexity, r.train_mse, r.wall_time
        );
        Ok(())
    })
}

fn names(flag: &Option<String>, default: &[&str]) -> Result<Vec<String>> {
    match flag {
        Some(s) => list(s),
        None => Ok(default.iter().map(|s| s.to_string()).collect()),
    }
}

/// Registry order first, then anything else alphabetically.
fn ordered(found: impl IntoIterator<Item = String>, registry: &[&str]) -> Vec<String> {
    let mut all: Vec<String> = found.into_iter().collect();
    all.sort();
    all.dedup();
    let rank = |s: &String| registry.iter().position(|r| r == s).unwrap_or(registry.len());
    all.sort_by_key(|s| rank(s));
    all
}

fn load_fits(dir: &Path) -> Result<BTreeMap<(String, String), FitResult>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .map(|e| e.map(|e| e.path()))
        .collect::<std::io::Result<_>>()?;
    paths.retain(|p| p.extension().is_some_and(|e| e == "json") && p.file_name().is_some_and(|n| n != crate::manifest::FILE_NAME));
    paths.sort();
    let mut fits = BTreeMap::new();
    for p in paths {
        let text = fs::read_to_string(&p).with_context(|| format!("reading {}", p.display()))?;
        let r = FitResult::from_json(&text).with_context(|| format!("{} is not a fit result", p.display()))?;
        fits.insert((r.archetype_name.clone(), r.target_name.clone()), r);
    }
    Ok(fits)
}

fn write_matrix(m: &Mutex<RunManifest>, matrix: &ScoreMatrix) -> Result<()> {
    let mut m = m.lock().unwrap();
    let mut buf = Vec::new();
    matrix.write_csv(&mut buf)?;
    m.write("matrix.csv", &buf)?;
    m.write("matrix.json", (matrix.to_json()? + "\n").as_bytes())?;
    m.write("best.csv", best_table(matrix)?.as_bytes())
}

fn best_table(matrix: &ScoreMatrix) -> Result<String> {
    let mut s = String::from("target,best_archetype,similarity,simplicity\n");
    for (j, t) in matrix.targets.iter().enumerate() {
        let best = matrix.best_archetype(t)?;
        let i = matrix.archetypes.iter().position(|a| a == best).unwrap();
        s += &format!("{t},{best},{},{}\n", matrix.similarity[i][j], matrix.simplicity[i][j]);
    }
    Ok(s)
}

fn score(mut a: ScoreArgs) -> Result<()> {
    let seed = seed_or_env(a.seed)?;
    a.seed = Some(seed);
    let out = out_dir(&a.out)?.to_path_buf();
    let cfg = a.train.fit_config(seed);
    cfg.validate()?;
    with_manifest("score", &a, &out, vec![seed], |m| {
        let (archs, targets, fits) = match &a.fits {
            Some(dir) => {
                let fits: BTreeMap<_, _> = load_fits(dir)?.into_iter().map(|(k, r)| (k, Ok(r))).collect();
                let archs = match &a.archetypes {
                    Some(s) => list(s)?,
                    None => ordered(fits.keys().map(|k| k.0.clone()), &SystemSpec::LIBRARY),
                };
                let targets = match &a.targets {
                    Some(s) => list(s)?,
                    None => ordered(fits.keys().map(|k| k.1.clone()), &TargetSpec::REGISTRY),
                };
                (archs, targets, fits)
            }
            None => {
                let archs = names(&a.archetypes, &SystemSpec::LIBRARY)?;
                let targets = names(&a.targets, &DEFAULT_TARGETS)?;
                let specs = targets.iter().map(|t| pipeline::resolve_target(Some(t), None, None)).collect::<Result<Vec<_>>>()?;
                let grid = pipeline::fit_grid(&archs, &specs, &cfg, |arch, target, r| match r {
                    Ok(r) => {
                        println!("{target} <- {arch}: dissimilarity {:.6e}, complexity {:.4}", r.test_mse, r.complexity);
                        if let Err(e) = write_fit(m, &format!("fits/{arch}__{target}."), r) {
                            eprintln!("{e:#}");
                        }
                    }
                    Err(e) => eprintln!("{target} <- {arch}: {e:#}"),
                })?;
                let mut fits = BTreeMap::new();
                for (k, r) in grid {
                    match r {
                        Ok(r) => {
                            fits.insert(k, Ok(r));
                        }
                        Err(e) => {
                            fits.insert(k, Err(format!("{e:#}")));
                        }
                    }
                }
                (archs, targets, fits)
            }
        };
        // failed or absent fits enter as infinite and score zero
        let mut pairs = BTreeMap::new();
        let mut failed = String::new();
        for arch in &archs {
            for t in &targets {
                let k = (arch.clone(), t.clone());
                let err = match fits.get(&k) {
                    Some(Ok(r)) => {
                        pairs.insert(k, (r.test_mse, r.complexity));
                        continue;
                    }
                    Some(Err(e)) => e.clone(),
                    None => "no fit found".to_string(),
                };
                eprintln!("warning: {t} <- {arch}: {err}");
                failed += &format!("{arch},{t},\"{}\"\n", err.replace('"', "'"));
                pairs.insert(k, (f64::INFINITY, f64::INFINITY));
            }
        }
        let matrix = ScoreMatrix::from_pairs(&archs, &targets, &pairs)?;
        if !failed.is_empty() {
            m.lock().unwrap().write("failed.csv", format!("archetype,target,error\n{failed}").as_bytes())?;
        }
        write_matrix(m, &matrix)?;
        for t in &matrix.targets {
            println!("{t}: {}", matrix.best_archetype(t)?);
        }
        Ok(())
    })
}

fn sweep(mut a: SweepArgs) -> Result<()> {
    let out = out_dir(&a.out)?.to_path_buf();
    let kind: SweepKind = a.kind.as_deref().context("--kind is required")?.parse()?;
    let scales: Vec<f64> = match &a.scales {
        Some(s) => list(s)?,
        None => match kind {
            SweepKind::Diffeo => vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0],
            SweepKind::Vf => vec![0.0, 0.05, 0.1, 0.15],
        },
    };
    let seeds: Vec<u64> = match &a.seeds {
        Some(s) => list(s)?,
        None => vec![seed_or_env(None)?],
    };
    a.seeds = Some(seeds.iter().map(u64::to_string).collect::<Vec<_>>().join(","));
    let default_archs: &[&str] = match kind {
        SweepKind::Diffeo => &["ring"],
        SweepKind::Vf => &["ring", "fixed_point"],
    };
    let archs = names(&a.archetypes, default_archs)?;
    let base = pipeline::resolve_target(Some(a.target.as_deref().unwrap_or("ring")), None, None)?;
    let cfg = a.train.fit_config(0);
    cfg.validate()?;
    with_manifest("sweep", &a, &out, seeds.clone(), |m| {
        let rows = pipeline::sweep(kind, &base, &scales, &seeds, &archs, a.lengthscale, &cfg)?;
        let mut csv = format!("{SWEEP_HEADER}\n");
        for r in &rows {
            csv += &r.csv_line();
            csv.push('\n');
        }
        let trends = pipeline::trends(&rows);
        let mut m = m.lock().unwrap();
        m.write("sweep.csv", csv.as_bytes())?;
        m.write("trends.json", (serde_json::to_string_pretty(&trends)? + "\n").as_bytes())?;
        for t in &trends {
            println!(
                "{}: spearman(s, dissimilarity) {:?}, spearman(s, complexity) {:?}, spearman(s, baseline) {:?}",
                t.archetype, t.dissimilarity, t.complexity, t.baseline
            );
        }
        Ok(())
    })
}

fn report(a: ReportArgs) -> Result<()> {
    let out = out_dir(&a.out)?.to_path_buf();
    if a.matrix.is_none() && a.sweep.is_none() {
        bail!("give --matrix and/or --sweep");
    }
    with_manifest("report", &a, &out, vec![], |m| {
        let mut m = m.lock().unwrap();
        if let Some(path) = &a.matrix {
            let file = fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
            let matrix = ScoreMatrix::read_csv(file).with_context(|| format!("reading {}", path.display()))?;
            m.write("matrix.svg", svg::matrix(&matrix).as_bytes())?;
            m.write("similarity.csv", wide(&matrix, &matrix.similarity).as_bytes())?;
            m.write("simplicity.csv", wide(&matrix, &matrix.simplicity).as_bytes())?;
            m.write("best.csv", best_table(&matrix)?.as_bytes())?;
        }
        if let Some(path) = &a.sweep {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            let rows = SweepRow::parse_csv(&text).with_context(|| format!("parsing {}", path.display()))?;
            let series = |f: fn(&SweepRow) -> f64| -> Vec<svg::Series> {
                let mut names: Vec<&str> = Vec::new();
                for r in &rows {
                    if !names.contains(&r.archetype.as_str()) {
                        names.push(&r.archetype);
                    }
                }
                names
                    .into_iter()
                    .map(|n| svg::Series {
                        name: n.to_string(),
                        points: rows.iter().filter(|r| r.archetype == n).map(|r| (r.s, f(r))).collect(),
                    })
                    .collect()
            };
            let baseline = vec![svg::Series {
                name: "generating perturbation".into(),
                points: rows.iter().map(|r| (r.s, r.baseline)).collect(),
            }];
            let doc = svg::panels(
                "s",
                &[("dissimilarity", series(|r| r.dissimilarity)), ("complexity", series(|r| r.complexity)), ("baseline", baseline)],
            );
            m.write("sweep.svg", doc.as_bytes())?;
            let mut summary = String::from("archetype,s,mean_dissimilarity,mean_complexity\n");
            for (d, c) in series(|r| r.dissimilarity).iter().zip(series(|r| r.complexity)) {
                for (&(s, md), &(_, mc)) in svg::means(&d.points).iter().zip(&svg::means(&c.points)) {
                    summary += &format!("{},{s},{md},{mc}\n", d.name);
                }
            }
            m.write("sweep_summary.csv", summary.as_bytes())?;
        }
        Ok(())
    })
}

fn wide(matrix: &ScoreMatrix, values: &[Vec<f64>]) -> String {
    let mut s = format!("archetype,{}\n", matrix.targets.join(","));
    for (a, row) in matrix.archetypes.iter().zip(values) {
        let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        s += &format!("{a},{}\n", cells.join(","));
    }
    s
}
