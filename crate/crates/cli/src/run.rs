//! Executing a [`RunPlan`].

use std::path::Path;

use radmax::artifacts::{csv_string, SCHEMA_VERSION};
use radmax::dilation_sets::{DilationSet, SetSpec};
use radmax::experiments::{
    claim_annulus, experiment_knapp, experiment_pq, experiment_stein_log, region_scan,
};
use radmax::maximal_ops::{domination_check, maximal_value, RadialGrid};
use radmax::par::Exec;
use radmax::radial_averages::{sphere_average, sphere_average_mc, MonteCarloEstimate};
use radmax::spectra::{
    assouad_spectrum_estimate, fits_to_csv, fracprop_check, minkowski_estimate, nu_sharp_estimate,
    nu_sharp_upper_bound, CoveringProfile, ScaleWindow,
};
use radmax::type_sets::{
    boundary_to_csv, endpoint_classify, quadrangle_vertices_radial, triangle_vertices, ExponentPair,
    NuSharp, RegionMode, TypeRegion, TypeSetError,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::args::Format;
use crate::plan::{ProfileSource, RunPlan, SetInput, Task, WindowBounds};
use crate::CliError;

/// JSON envelope of every artifact.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub schema_version: u32,
    pub command: String,
    pub seed: u64,
    pub result: T,
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io { path: path.display().to_string(), message: e.to_string() }
}

fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::Runtime(format!("csv: {e}"))
}

/// Reads a set from a file written by `set make`, a bare set, or a
/// generator spec.
pub fn load_set(path: &Path, depth: Option<u32>) -> Result<DilationSet, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_error(path, e))?;
    let mut value: Value = serde_json::from_str(&text).map_err(|e| io_error(path, e))?;
    if let Some(inner) = value.get_mut("result") {
        value = inner.take();
    }
    if value.get("cells").is_some() {
        let set: DilationSet = serde_json::from_value(value).map_err(|e| io_error(path, e))?;
        return match depth {
            None => Ok(set),
            Some(d) if d == set.depth() => Ok(set),
            Some(d) if d < set.depth() => set.coarsen(d).map_err(runtime),
            Some(d) => Err(CliError::Usage(format!(
                "--depth: {d} exceeds the stored set's depth {}",
                set.depth()
            ))),
        };
    }
    let mut spec: SetSpec = serde_json::from_value(value).map_err(|e| io_error(path, e))?;
    if let Some(d) = depth {
        spec.depth = d;
    }
    spec.build().map_err(runtime)
}

fn resolve_set(input: &Option<SetInput>) -> Result<DilationSet, CliError> {
    match input {
        Some(SetInput::File { path, depth }) => load_set(path, *depth),
        Some(SetInput::Generated(spec)) => spec.build().map_err(|e| CliError::Usage(format!("--generator: {e}"))),
        None => Err(CliError::Usage("--set-spec: a dilation set is required".into())),
    }
}

fn resolve_window(bounds: WindowBounds, depth: u32) -> Result<ScaleWindow, CliError> {
    let default = ScaleWindow::default_for(depth);
    let w = ScaleWindow::new(bounds.m_min.unwrap_or(default.m_min), bounds.m_max.unwrap_or(default.m_max));
    if w.m_max > depth || w.m_min + 2 > w.m_max {
        return Err(CliError::Usage(format!(
            "--mmin: window [{}, {}] needs at least three scales within depth {depth}",
            w.m_min, w.m_max
        )));
    }
    Ok(w)
}

/// Rendered artifact text.
pub struct Output {
    pub text: String,
}

fn json_output<T: Serialize>(plan: &RunPlan, result: &T) -> Result<Output, CliError> {
    let artifact = Artifact {
        schema_version: SCHEMA_VERSION,
        command: plan.command.clone(),
        seed: plan.seed,
        result,
    };
    let mut text = serde_json::to_string_pretty(&artifact).map_err(runtime)?;
    text.push('\n');
    Ok(Output { text })
}

fn render<T: Serialize>(
    plan: &RunPlan,
    result: &T,
    csv: impl FnOnce() -> csv::Result<String>,
) -> Result<Output, CliError> {
    match plan.format {
        Format::Json => json_output(plan, result),
        Format::Csv => Ok(Output { text: csv().map_err(csv_err)? }),
    }
}

fn exec_for(plan: &RunPlan) -> Exec {
    match plan.threads {
        Some(1) => Exec::Sequential,
        _ => Exec::Parallel,
    }
}

/// Corner points of the triangle and, for the planar closure with known
/// `γ`, the two extra quadrangle corners.
fn named_points(region: &TypeRegion) -> Result<Vec<(&'static str, ExponentPair)>, TypeSetError> {
    let [p1, p2, p3] = triangle_vertices(region.d(), region.beta())?;
    let mut out = vec![("P1", p1), ("P2", p2), ("P3rad", p3)];
    if let RegionMode::ClosureD2(NuSharp::ClosedForm { beta, gamma }) = region.mode() {
        // Without the quadrangle case the closure is the triangle itself.
        if let Ok([_, _, p4, p5]) = quadrangle_vertices_radial(*beta, *gamma) {
            out.extend([("P4rad", p4), ("P5rad", p5)]);
        }
    }
    Ok(out)
}

/// Computes the artifact of `plan` without writing it.
pub fn compute(plan: &RunPlan) -> Result<Output, CliError> {
    let exec = exec_for(plan);
    match &plan.task {
        Task::SetMake => {
            let set = resolve_set(&plan.set)?;
            render(plan, &set, || {
                csv_string("dilation_set", |w| {
                    w.write_record(["cell", "left", "right"])?;
                    for &j in set.cells() {
                        let (a, b) = set.cell_bounds(j);
                        w.write_record([j.to_string(), a.to_string(), b.to_string()])?;
                    }
                    Ok(())
                })
            })
        }
        Task::DimEstimate { window } => {
            let set = resolve_set(&plan.set)?;
            let w = resolve_window(*window, set.depth())?;
            let profile = CoveringProfile::compute(&set, exec);
            let fit = minkowski_estimate(&profile, w).map_err(runtime)?;
            let counts = profile.global_counts();
            let result = json!({
                "window": w,
                "minkowski": fit,
                "known_beta": set.profile().map(|p| p.beta),
                "counts": counts,
            });
            render(plan, &result, || {
                csv_string("covering_counts", |w| {
                    w.write_record(["m", "count"])?;
                    for (m, c) in counts.iter().enumerate() {
                        w.write_record([m.to_string(), c.to_string()])?;
                    }
                    Ok(())
                })
            })
        }
        Task::NuSharp { window, alphas, slack } => {
            let set = resolve_set(&plan.set)?;
            let w = resolve_window(*window, set.depth())?;
            let profile = CoveringProfile::compute(&set, exec);
            let fits = alphas
                .iter()
                .map(|&a| nu_sharp_estimate(&profile, a, w).map(|f| (a, f)))
                .collect::<Result<Vec<_>, _>>()
                .map_err(runtime)?;
            let known = set.profile().map(|p| (p.beta.to_f64(), p.gamma.to_f64()));
            let sandwich = match known {
                Some((b, g)) => {
                    Some(fracprop_check(&profile, b, g, alphas, *slack, w).map_err(runtime)?)
                }
                None => None,
            };
            let rows: Vec<Value> = fits
                .iter()
                .map(|(a, f)| {
                    json!({
                        "alpha": a,
                        "estimate": f.slope,
                        "fit": f,
                        "upper_bound": known.map(|(b, g)| nu_sharp_upper_bound(b, g, *a)),
                    })
                })
                .collect();
            let result = json!({ "window": w, "rows": rows, "sandwich": sandwich });
            render(plan, &result, || fits_to_csv("alpha", &fits))
        }
        Task::Spectrum { window, thetas } => {
            let set = resolve_set(&plan.set)?;
            let w = resolve_window(*window, set.depth())?;
            let profile = CoveringProfile::compute(&set, exec);
            let points = assouad_spectrum_estimate(&profile, thetas, w).map_err(runtime)?;
            let fits: Vec<_> = points.iter().map(|p| (p.theta, p.fit.clone())).collect();
            render(plan, &points, || fits_to_csv("theta", &fits))
        }
        Task::RegionVertices { region } => {
            let dump = region.dump().map_err(runtime)?;
            let named = named_points(region).map_err(runtime)?;
            let mut rows: Vec<(String, ExponentPair, bool)> = named
                .iter()
                .map(|(n, p)| (n.to_string(), *p, dump.vertices.contains(p)))
                .collect();
            rows.extend(
                dump.vertices.iter().filter(|v| !named.iter().any(|(_, p)| p == *v)).map(|v| (String::new(), *v, true)),
            );
            let points: Vec<Value> = named
                .iter()
                .map(|(n, p)| json!({ "name": n, "point": p, "exact": format!("({}, {})", p.inv_p, p.inv_q) }))
                .collect();
            let result = json!({ "region": dump, "named_points": points });
            render(plan, &result, || {
                csv_string("region_vertices", |w| {
                    w.write_record(["name", "inv_p", "inv_q", "inv_p_exact", "inv_q_exact", "region_vertex"])?;
                    for (name, v, is_vertex) in &rows {
                        let (x, y) = v.to_f64();
                        w.write_record([
                            name.clone(),
                            x.to_string(),
                            y.to_string(),
                            v.inv_p.to_string(),
                            v.inv_q.to_string(),
                            is_vertex.to_string(),
                        ])?;
                    }
                    Ok(())
                })
            })
        }
        Task::RegionMembership { region, point } => {
            let membership = region.membership(*point).map_err(runtime)?;
            let distance = region.signed_distance(point.to_f64()).map_err(runtime)?;
            let result = json!({
                "point": point,
                "region": region.mode_label(),
                "membership": membership,
                "signed_distance": distance,
            });
            json_output(plan, &result)
        }
        Task::RegionBoundary { region, resolution } => {
            let pts = region.closure_boundary(*resolution).map_err(runtime)?;
            let rows: Vec<Value> = pts
                .iter()
                .map(|b| json!({ "point": b.point, "active_constraint": b.active_constraint }))
                .collect();
            render(plan, &rows, || boundary_to_csv(&pts))
        }
        Task::RegionClassify { d, point, profile } => {
            let prof = match profile {
                ProfileSource::Inline(p) => p.clone(),
                ProfileSource::FromSet(path) => load_set(path, None)?
                    .profile()
                    .cloned()
                    .ok_or_else(|| CliError::Runtime(format!("{} has no analytic profile", path.display())))?,
            };
            let c = endpoint_classify(Some(&prof), *d, *point).map_err(runtime)?;
            json_output(plan, &json!({ "point": point, "d": d, "classification": c }))
        }
        Task::Avg { d, function, r, t, tol, mc_samples } => {
            let q = sphere_average(function, *d, *r, *t, *tol).map_err(runtime)?;
            let mc: Option<MonteCarloEstimate> = match mc_samples {
                Some(n) => Some(sphere_average_mc(function, *d, *r, *t, *n, plan.seed, exec).map_err(runtime)?),
                None => None,
            };
            let result = json!({
                "d": d,
                "r": r,
                "t": t,
                "value": q.value,
                "error": q.abs_error_estimate,
                "evaluations": q.evaluations,
                "monte_carlo": mc,
            });
            json_output(plan, &result)
        }
        Task::Maximal { d, function, r, tol } => {
            let set = resolve_set(&plan.set)?;
            let v = maximal_value(&set, function, *d, *r, *tol).map_err(runtime)?;
            json_output(plan, &json!({ "d": d, "r": r, "maximal": v }))
        }
        Task::Domination { d, function, p, r_max, nodes, tol } => {
            let set = resolve_set(&plan.set)?;
            let grid = RadialGrid::for_function(function, *d, *r_max, *nodes).map_err(runtime)?;
            let report = domination_check(&set, function, *p, &grid, *tol, exec).map_err(runtime)?;
            render(plan, &report, || report.to_csv())
        }
        Task::Pq { d, p, q, k_range } => {
            let set = resolve_set(&plan.set)?;
            let rec = experiment_pq(&set, *d, *p, *q, *k_range, exec).map_err(runtime)?;
            render(plan, &rec, || rec.to_csv())
        }
        Task::Knapp { d, p, q, window, m_range } => {
            let set = resolve_set(&plan.set)?;
            let rec = experiment_knapp(&set, *d, *p, *q, *window, *m_range, exec).map_err(runtime)?;
            render(plan, &rec, || rec.to_csv())
        }
        Task::Annulus { d, t_left, t, m_range, offsets } => {
            let deltas: Vec<f64> = (m_range.0..=m_range.1).map(|m| (-(m as f64)).exp2()).collect();
            let rep = claim_annulus(*d, *t_left, *t, &deltas, offsets).map_err(runtime)?;
            render(plan, &rep, || rep.to_csv())
        }
        Task::Stein { d, q, m_range } => {
            let set = resolve_set(&plan.set)?;
            let rec = experiment_stein_log(&set, *d, *q, *m_range, exec).map_err(runtime)?;
            render(plan, &rec, || rec.to_csv())
        }
        Task::Scan { d, resolution, window } => {
            let set = resolve_set(&plan.set)?;
            let w = resolve_window(*window, set.depth())?;
            let profile = CoveringProfile::compute(&set, exec);
            let scan = region_scan(&profile, *d, *resolution, w, exec).map_err(runtime)?;
            render(plan, &scan, || scan.to_csv())
        }
    }
}

/// Runs `plan` on a pool capped at `--threads` and writes the artifact to
/// `--out` or `stdout`.
pub fn execute(plan: &RunPlan, stdout: &mut dyn std::io::Write) -> Result<(), CliError> {
    let output = match plan.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(runtime)?
            .install(|| compute(plan))?,
        None => compute(plan)?,
    };
    match &plan.out {
        Some(path) => {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            }
            std::fs::write(path, output.text).map_err(|e| io_error(path, e))
        }
        None => stdout.write_all(output.text.as_bytes()).map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}
