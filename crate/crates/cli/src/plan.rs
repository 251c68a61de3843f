//! Turning parsed arguments into a validated [`RunPlan`].

use std::path::{Path, PathBuf};

use radmax::dilation_sets::{AnalyticProfile, Generator, SetSpec, WindowSpec, MAX_DEPTH};
use radmax::numeric::Number;
use radmax::radial_averages::{RadialFunction, Step};
use radmax::type_sets::{ExponentPair, TypeRegion};

use crate::args::*;
use crate::CliError;

pub const OUT_DIR_ENV: &str = "RADMAX_OUT_DIR";

/// Where the dilation set comes from.
#[derive(Clone, Debug, PartialEq)]
pub enum SetInput {
    /// JSON file holding a set, a generator spec, or an artifact wrapping
    /// either. `depth` overrides the stored depth.
    File { path: PathBuf, depth: Option<u32> },
    Generated(SetSpec),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProfileSource {
    Inline(AnalyticProfile),
    FromSet(PathBuf),
}

/// Optional user bounds of a scale window, resolved once the depth is known.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct WindowBounds {
    pub m_min: Option<u32>,
    pub m_max: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Task {
    SetMake,
    DimEstimate { window: WindowBounds },
    NuSharp { window: WindowBounds, alphas: Vec<f64>, slack: f64 },
    Spectrum { window: WindowBounds, thetas: Vec<f64> },
    RegionVertices { region: TypeRegion },
    RegionMembership { region: TypeRegion, point: ExponentPair },
    RegionBoundary { region: TypeRegion, resolution: u32 },
    RegionClassify { d: u32, point: ExponentPair, profile: ProfileSource },
    Avg { d: u32, function: RadialFunction, r: f64, t: f64, tol: f64, mc_samples: Option<usize> },
    Maximal { d: u32, function: RadialFunction, r: f64, tol: f64 },
    Domination { d: u32, function: RadialFunction, p: f64, r_max: f64, nodes: usize, tol: f64 },
    Pq { d: u32, p: f64, q: f64, k_range: (u32, u32) },
    Knapp { d: u32, p: f64, q: f64, window: WindowSpec, m_range: (u32, u32) },
    Annulus { d: u32, t_left: f64, t: f64, m_range: (u32, u32), offsets: Vec<f64> },
    Stein { d: u32, q: f64, m_range: (u32, u32) },
    Scan { d: u32, resolution: u32, window: WindowBounds },
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunPlan {
    /// Subcommand path, e.g. `experiment pq`.
    pub command: String,
    pub task: Task,
    pub set: Option<SetInput>,
    /// Absolute output path; `None` writes to stdout.
    pub out: Option<PathBuf>,
    pub format: Format,
    pub seed: u64,
    pub threads: Option<usize>,
}

fn usage(flag: &str, msg: impl std::fmt::Display) -> CliError {
    CliError::Usage(format!("{flag}: {msg}"))
}

fn absolute(path: &Path, base: Option<&Path>) -> Result<PathBuf, CliError> {
    let joined = match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.to_path_buf(),
    };
    if joined.is_absolute() {
        return Ok(joined);
    }
    let cwd = std::env::current_dir()
        .map_err(|e| CliError::Io { path: ".".into(), message: e.to_string() })?;
    Ok(cwd.join(joined))
}

fn check_d(d: u32) -> Result<u32, CliError> {
    if d < 2 {
        return Err(usage("--d", format!("dimension must be at least 2, got {d}")));
    }
    Ok(d)
}

fn check_exponent(flag: &str, x: f64) -> Result<f64, CliError> {
    if !(x >= 1.0 && x.is_finite()) {
        return Err(usage(flag, format!("need a finite exponent >= 1, got {x}")));
    }
    Ok(x)
}

fn check_depth(depth: u32) -> Result<u32, CliError> {
    if !(1..=MAX_DEPTH).contains(&depth) {
        return Err(usage("--depth", format!("must lie in [1, {MAX_DEPTH}], got {depth}")));
    }
    Ok(depth)
}

fn check_range(lo_flag: &str, hi_flag: &str, lo: u32, hi: u32) -> Result<(u32, u32), CliError> {
    if lo > hi {
        return Err(usage(lo_flag, format!("{lo} exceeds {hi_flag} {hi}")));
    }
    Ok((lo, hi))
}

/// Parses an exponent `p` (`a/b`, decimal or `inf`) into `1/p`.
fn reciprocal(flag: &str, s: &str) -> Result<Number, CliError> {
    let t = s.trim();
    if matches!(t, "inf" | "infinity" | "∞") {
        return Ok(Number::zero());
    }
    let x: Number = t.parse().map_err(|e| usage(flag, e))?;
    if x.to_f64() < 1.0 {
        return Err(usage(flag, format!("need an exponent >= 1, got {x}")));
    }
    Ok(Number::one() / x)
}

fn point(args: &ExponentArgs) -> Result<ExponentPair, CliError> {
    let inv_p = reciprocal("--p", &args.p)?;
    let inv_q = reciprocal("--q", &args.q)?;
    ExponentPair::new(inv_p, inv_q).map_err(|e| usage("--p", e))
}

fn region(args: &RegionArgs) -> Result<TypeRegion, CliError> {
    let d = check_d(args.d)?;
    if args.radial && d == 2 {
        let gamma = args
            .gamma
            .ok_or_else(|| usage("--gamma", "required for the radial region when d = 2"))?;
        TypeRegion::closure_closed_form(args.beta, gamma).map_err(|e| usage("--beta", e))
    } else {
        TypeRegion::triangle(d, args.beta).map_err(|e| usage("--beta", e))
    }
}

fn numbers(flag: &str, body: &str, n: usize) -> Result<Vec<f64>, CliError> {
    let v: Vec<f64> = body
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| usage(flag, format!("`{body}`: {e}")))?;
    if v.len() != n {
        return Err(usage(flag, format!("`{body}`: expected {n} numbers, got {}", v.len())));
    }
    Ok(v)
}

/// Parses the compact radial-function syntax (see `--function`).
pub fn parse_function(flag: &str, spec: &str) -> Result<RadialFunction, CliError> {
    let spec = spec.trim();
    let f = if spec.starts_with('{') {
        serde_json::from_str(spec).map_err(|e| usage(flag, e))?
    } else {
        let (kind, body) = spec
            .split_once(':')
            .ok_or_else(|| usage(flag, format!("`{spec}`: expected KIND:PARAMS or JSON")))?;
        match kind {
            "indicator" => {
                let v = numbers(flag, body, 2)?;
                RadialFunction::indicator(v[0], v[1])
            }
            "bump" => {
                let v = numbers(flag, body, 2)?;
                RadialFunction::SmoothBump { center: v[0], width: v[1] }
            }
            "powerlog" => {
                let v = numbers(flag, body, 4)?;
                RadialFunction::PowerLog { exponent: v[0], log_exponent: v[1], a: v[2], b: v[3] }
            }
            "step" => {
                let pieces = body
                    .split(';')
                    .map(|p| numbers(flag, p, 3).map(|v| Step { a: v[0], b: v[1], height: v[2] }))
                    .collect::<Result<_, _>>()?;
                RadialFunction::StepTrain { pieces }
            }
            other => return Err(usage(flag, format!("unknown function kind `{other}`"))),
        }
    };
    f.validate().map_err(|e| usage(flag, e))?;
    Ok(f)
}

fn generator(src: &SetSource, kind: GeneratorKind) -> Result<Generator, CliError> {
    let need_number = |v: Option<Number>, flag: &str| {
        v.ok_or_else(|| usage(flag, format!("required by --generator {kind:?}").to_lowercase()))
    };
    Ok(match kind {
        GeneratorKind::Full => Generator::FullInterval {},
        GeneratorKind::Points => Generator::FinitePoints {
            points: src.points.clone().ok_or_else(|| usage("--points", "required by --generator points"))?,
        },
        GeneratorKind::Cantor => Generator::Cantor {
            base: src.base.unwrap_or(3),
            digits: src.digits.clone().unwrap_or_else(|| vec![0, 2]),
        },
        GeneratorKind::Convex => Generator::ConvexSequence { beta: need_number(src.beta, "--beta")? },
        GeneratorKind::Regular => Generator::AssouadRegular {
            beta: need_number(src.beta, "--beta")?,
            gamma: need_number(src.gamma, "--gamma")?,
        },
    })
}

fn set_input(src: &SetSource) -> Result<SetInput, CliError> {
    if let Some(d) = src.depth {
        check_depth(d)?;
    }
    match (&src.set_spec, src.generator) {
        (Some(path), _) => Ok(SetInput::File { path: absolute(path, None)?, depth: src.depth }),
        (None, Some(kind)) => {
            let depth = src.depth.ok_or_else(|| usage("--depth", "required with --generator"))?;
            let spec = SetSpec { generator: generator(src, kind)?, depth };
            // Cheap structural checks now; the set itself is built at execution.
            match &spec.generator {
                Generator::Cantor { base, digits } => {
                    if *base < 2 || digits.is_empty() || digits.iter().any(|d| d >= base) {
                        return Err(usage("--digits", format!("need digits below base {base}")));
                    }
                }
                Generator::FinitePoints { points } => {
                    if points.is_empty() || points.iter().any(|p| !(1.0..=2.0).contains(p)) {
                        return Err(usage("--points", "need nonempty points in [1,2]"));
                    }
                }
                _ => {}
            }
            Ok(SetInput::Generated(spec))
        }
        (None, None) => Err(usage("--set-spec", "a dilation set is required (--set-spec or --generator)")),
    }
}

fn window(w: &WindowArgs) -> Result<WindowBounds, CliError> {
    if let (Some(a), Some(b)) = (w.mmin, w.mmax) {
        check_range("--mmin", "--mmax", a, b)?;
    }
    Ok(WindowBounds { m_min: w.mmin, m_max: w.mmax })
}

fn grid_or(values: &Option<Vec<f64>>, default: Vec<f64>, flag: &str) -> Result<Vec<f64>, CliError> {
    let v = values.clone().unwrap_or(default);
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(usage(flag, "need a nonempty list of finite values"));
    }
    Ok(v)
}

/// Validates parsed arguments and resolves paths.
pub fn plan(cli: Cli) -> Result<RunPlan, CliError> {
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let out = match &cli.global.out {
        Some(p) => Some(absolute(p, out_dir.as_deref())?),
        None => None,
    };
    if cli.global.threads == Some(0) {
        return Err(usage("--threads", "must be at least 1"));
    }
    let mut set = None;
    let mut with_set = |src: &SetSource| -> Result<(), CliError> {
        set = Some(set_input(src)?);
        Ok(())
    };
    let (command, task) = match &cli.command {
        Command::Set(SetCommand::Make(src)) => {
            if src.set_spec.is_some() {
                return Err(usage("--set-spec", "set make builds from --generator flags"));
            }
            with_set(src)?;
            ("set make", Task::SetMake)
        }
        Command::Dim(DimCommand::Estimate(a)) => {
            with_set(&a.set)?;
            ("dim estimate", Task::DimEstimate { window: window(&a.window)? })
        }
        Command::Nusharp(a) => {
            with_set(&a.set)?;
            let alphas = grid_or(&a.alpha, (0..=8).map(|i| i as f64 * 0.25).collect(), "--alpha")?;
            if !(a.slack >= 0.0) {
                return Err(usage("--slack", "must be nonnegative"));
            }
            ("nusharp", Task::NuSharp { window: window(&a.window)?, alphas, slack: a.slack })
        }
        Command::Spectrum(a) => {
            with_set(&a.set)?;
            let thetas = grid_or(&a.theta, (0..10).map(|i| i as f64 / 10.0).collect(), "--theta")?;
            if thetas.iter().any(|t| !(0.0..1.0).contains(t)) {
                return Err(usage("--theta", "ratios must lie in [0, 1)"));
            }
            ("spectrum", Task::Spectrum { window: window(&a.window)?, thetas })
        }
        Command::Region(RegionCommand::Vertices(a)) => {
            ("region vertices", Task::RegionVertices { region: region(a)? })
        }
        Command::Region(RegionCommand::Membership(a)) => (
            "region membership",
            Task::RegionMembership { region: region(&a.region)?, point: point(&a.point)? },
        ),
        Command::Region(RegionCommand::Boundary(a)) => {
            if a.resolution < 8 {
                return Err(usage("--resolution", "must be at least 8"));
            }
            ("region boundary", Task::RegionBoundary { region: region(&a.region)?, resolution: a.resolution })
        }
        Command::Region(RegionCommand::Classify(a)) => {
            let d = check_d(a.d)?;
            let profile = match (&a.set_spec, a.beta) {
                (Some(path), _) => ProfileSource::FromSet(absolute(path, None)?),
                (None, Some(beta)) => {
                    let gamma = a.gamma.unwrap_or(beta);
                    let mut prof = AnalyticProfile::new(beta, gamma, a.sup_finite, "command line")
                        .map_err(|e| usage("--beta", e))?;
                    if let Some(l) = a.log_decay {
                        prof = prof.with_log_decay(l);
                    }
                    ProfileSource::Inline(prof)
                }
                (None, None) => return Err(usage("--beta", "required unless --set-spec is given")),
            };
            ("region classify", Task::RegionClassify { d, point: point(&a.point)?, profile })
        }
        Command::Avg(a) => {
            if !(a.r >= 0.0 && a.r.is_finite()) {
                return Err(usage("--r", "need r >= 0"));
            }
            if !(a.t > 0.0 && a.t.is_finite()) {
                return Err(usage("--t", "need t > 0"));
            }
            if !(a.tol > 0.0) {
                return Err(usage("--tol", "must be positive"));
            }
            if let Some(n) = a.mc_samples {
                if n < 1000 {
                    return Err(usage("--mc-samples", "need at least 1000 samples"));
                }
            }
            let task = Task::Avg {
                d: check_d(a.d)?,
                function: parse_function("--function", &a.function)?,
                r: a.r,
                t: a.t,
                tol: a.tol,
                mc_samples: a.mc_samples,
            };
            ("avg", task)
        }
        Command::Maximal(a) => {
            with_set(&a.set)?;
            let d = check_d(a.d)?;
            let function = parse_function("--function", &a.function)?;
            if !(a.tol > 0.0) {
                return Err(usage("--tol", "must be positive"));
            }
            match (a.p, a.r) {
                (Some(p), _) => {
                    check_exponent("--p", p)?;
                    if !(a.r_max > 0.0 && a.r_max.is_finite()) {
                        return Err(usage("--r-max", "must be positive"));
                    }
                    if a.nodes == 0 {
                        return Err(usage("--nodes", "must be at least 1"));
                    }
                    let task = Task::Domination { d, function, p, r_max: a.r_max, nodes: a.nodes, tol: a.tol };
                    ("maximal", task)
                }
                (None, Some(r)) => {
                    if !(r >= 0.0 && r.is_finite()) {
                        return Err(usage("--r", "need r >= 0"));
                    }
                    ("maximal", Task::Maximal { d, function, r, tol: a.tol })
                }
                (None, None) => return Err(usage("--r", "required unless --p is given")),
            }
        }
        Command::Experiment(ExperimentCommand::Pq(a)) => {
            with_set(&a.set)?;
            let (p, q) = (check_exponent("--p", a.p)?, check_exponent("--q", a.q)?);
            if q < p {
                return Err(usage("--q", format!("need q >= p, got q={q} < p={p}")));
            }
            let k_range = check_range("--kmin", "--kmax", a.kmin, a.kmax)?;
            if a.kmin < 6 || a.kmax > 16 {
                return Err(usage("--kmin", "k range must lie within [6, 16]"));
            }
            ("experiment pq", Task::Pq { d: check_d(a.d)?, p, q, k_range })
        }
        Command::Experiment(ExperimentCommand::Knapp(a)) => {
            with_set(&a.set)?;
            let (p, q) = (check_exponent("--p", a.p)?, check_exponent("--q", a.q)?);
            if q < 2.0 {
                return Err(usage("--q", "need q >= 2"));
            }
            let window = WindowSpec::new(a.window_level, a.window_position)
                .map_err(|e| usage("--window-position", e))?;
            let m_range = check_range("--mmin", "--mmax", a.mmin, a.mmax)?;
            if a.mmin < 4 || a.mmax > 12 {
                return Err(usage("--mmin", "m range must lie within [4, 12]"));
            }
            ("experiment knapp", Task::Knapp { d: check_d(a.d)?, p, q, window, m_range })
        }
        Command::Experiment(ExperimentCommand::Annulus(a)) => {
            let m_range = check_range("--mmin", "--mmax", a.mmin, a.mmax)?;
            if a.mmax > 40 {
                return Err(usage("--mmax", "at most 40"));
            }
            if !(a.t_left > 0.0 && a.t > a.t_left && a.t <= 2.0 * a.t_left) {
                return Err(usage("--t", "need t_left < t <= 2 t_left"));
            }
            if a.offsets.is_empty() {
                return Err(usage("--offsets", "need at least one offset"));
            }
            let task = Task::Annulus {
                d: check_d(a.d)?,
                t_left: a.t_left,
                t: a.t,
                m_range,
                offsets: a.offsets.clone(),
            };
            ("experiment annulus", task)
        }
        Command::Experiment(ExperimentCommand::Stein(a)) => {
            with_set(&a.set)?;
            let m_range = check_range("--mmin", "--mmax", a.mmin, a.mmax)?;
            if a.mmin < 6 || a.mmax > 16 {
                return Err(usage("--mmin", "m range must lie within [6, 16]"));
            }
            ("experiment stein", Task::Stein { d: check_d(a.d)?, q: check_exponent("--q", a.q)?, m_range })
        }
        Command::Experiment(ExperimentCommand::Scan(a)) => {
            with_set(&a.set)?;
            if !(1..=64).contains(&a.resolution) {
                return Err(usage("--resolution", "must lie in [1, 64]"));
            }
            let task = Task::Scan { d: check_d(a.d)?, resolution: a.resolution, window: window(&a.window)? };
            ("experiment scan", task)
        }
    };
    if cli.global.format == Format::Csv && !csv_supported(&task) {
        return Err(usage("--format", format!("`{command}` has no CSV form; use json")));
    }
    Ok(RunPlan {
        command: command.to_string(),
        task,
        set,
        out,
        format: cli.global.format,
        seed: cli.global.seed,
        threads: cli.global.threads,
    })
}

fn csv_supported(task: &Task) -> bool {
    !matches!(
        task,
        Task::RegionMembership { .. } | Task::RegionClassify { .. } | Task::Avg { .. } | Task::Maximal { .. }
    )
}
