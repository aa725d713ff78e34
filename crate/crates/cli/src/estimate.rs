//! `estimate`: set-based state estimation runs.

use lz_setkit::estimator::{estimate_run_with, simulate, EstimatorState, RunOptions};
use lz_setkit::linalg::Vector;
use lz_setkit::sets::{interval_hull, membership};
use rayon::prelude::*;

use crate::error::CliError;
use crate::output::{hull_rows, json_num, json_str, num, OutDir, Table};
use crate::scenario::{matrix, vector, EstimateSpec, Kind, ScenarioFile};
use crate::Method;

const MEMBERSHIP_TOL: f64 = 1e-7;

struct MethodRun {
    method: Method,
    states: Vec<EstimatorState>,
}

pub fn run(sc: &ScenarioFile, out: &OutDir, method: Option<Method>) -> Result<(), CliError> {
    sc.expect(Kind::Estimate)?;
    let spec: EstimateSpec = sc.payload()?;
    let model = spec.model.build("model")?;
    let (nu, ny) = (model.n_u(), model.n_y());
    if spec.inputs.is_empty() {
        return Err(CliError::Input("schema error: inputs must hold at least the step k = 0".into()));
    }
    let inputs = rows_to_vectors(&spec.inputs, nu, "inputs")?;
    let x0 = spec.x0.build("x0")?;
    let w = spec.w.build("w")?;
    let v = spec.v.build("v")?;
    let limits = spec.limits.build();

    let methods = match method {
        Some(m) => vec![m],
        None => match &spec.methods {
            Some(names) => names.iter().map(|s| Method::parse(s)).collect::<Result<_, _>>()?,
            None if spec.baseline.is_some() => vec![Method::Lz, Method::Cz],
            None => vec![Method::Lz],
        },
    };
    let baseline = match &spec.baseline {
        Some(b) => Some((b.x0.build("baseline.x0")?, b.admissible.build("baseline.admissible")?)),
        None if methods.iter().any(|m| *m != Method::Lz) => {
            return Err(CliError::Input("schema error: the baseline methods need a `baseline` block".into()));
        }
        None => None,
    };

    let (outputs, truth) = match (&spec.outputs, &spec.true_initial_state) {
        (Some(ys), _) => (rows_to_vectors(ys, ny, "outputs")?, None),
        (None, Some(x)) => {
            let tr = simulate(&model, &vector(x, "true_initial_state")?, &inputs, &w, &v, sc.seed)?;
            (tr.outputs.clone(), Some(tr))
        }
        (None, None) => return Err(CliError::Input("schema error: give either `outputs` or `true_initial_state`".into())),
    };
    if outputs.len() != inputs.len() {
        return Err(CliError::Input(format!("schema error: {} outputs for {} inputs", outputs.len(), inputs.len())));
    }

    let runs: Vec<MethodRun> = methods
        .par_iter()
        .map(|&m| {
            let opts = match m {
                Method::Lz => RunOptions { limits, admissible: None },
                Method::Cz | Method::Zonotope => {
                    let mut limits = limits;
                    if m == Method::Zonotope {
                        limits.max_constraints = 0;
                    }
                    RunOptions {
                        limits,
                        admissible: baseline.as_ref().map(|b| b.1.clone()),
                    }
                }
            };
            let start = if m == Method::Lz { &x0 } else { &baseline.as_ref().expect("checked above").0 };
            let states = estimate_run_with(&model, start, &w, &v, &inputs, &outputs, &opts)?;
            Ok(MethodRun { method: m, states })
        })
        .collect::<Result<_, CliError>>()?;

    let mut radii = Table::new(&["k", "method", "radius", "empty", "contains_true_state"])?;
    let mut hulls = Table::new(&["k", "method", "coord", "lower", "upper", "bounded"])?;
    let mut timing = Table::new(&["k", "method", "reduce_seconds"])?;
    let mut summary = Vec::new();
    for run in &runs {
        let name = run.method.label();
        let mut enclosed = true;
        let mut last_radius = f64::NAN;
        for s in &run.states {
            let k = s.k.to_string();
            let contains = match (&truth, s.empty) {
                (Some(tr), false) => {
                    let inside = membership(&tr.states[s.k], &s.xhat, MEMBERSHIP_TOL)?;
                    enclosed &= inside;
                    inside.to_string()
                }
                (Some(_), true) => {
                    enclosed = false;
                    "false".into()
                }
                (None, _) => String::new(),
            };
            let radius = if s.empty {
                String::new()
            } else {
                let hull = interval_hull(&s.xhat)?;
                hull_rows(&mut hulls, &[k.clone(), name.into()], &hull)?;
                last_radius = hull.radius();
                num(last_radius)
            };
            radii.row([k.as_str(), name, &radius, &s.empty.to_string(), &contains])?;
            timing.row([k, name.into(), num(s.reduce_seconds)])?;
        }
        let first_empty = run.states.iter().find(|s| s.empty).map(|s| s.k);
        let mut secs: Vec<f64> = run.states.iter().skip(1).filter(|s| !s.empty).map(|s| s.reduce_seconds).collect();
        secs.sort_by(f64::total_cmp);
        let median = secs.get(secs.len() / 2).copied().unwrap_or(0.0);
        println!(
            "{name}: {} steps, first empty step {}, last finite radius {}, median reduction {:.3} ms",
            run.states.len(),
            first_empty.map_or("none".into(), |k| k.to_string()),
            if last_radius.is_nan() { "n/a".into() } else { format!("{last_radius:.4}") },
            median * 1e3
        );
        summary.push(format!(
            "    {{\"method\": {}, \"steps\": {}, \"first_empty\": {}, \"last_finite_radius\": {}, \"true_states_enclosed\": {}}}",
            json_str(name),
            run.states.len(),
            first_empty.map_or("null".into(), |k| k.to_string()),
            json_num(last_radius),
            if truth.is_some() { enclosed.to_string() } else { "null".into() }
        ));
    }

    out.write_csv("radii.csv", radii)?;
    out.write_csv("hulls.csv", hulls)?;
    out.write_csv("timing.csv", timing)?;
    if let Some(tr) = &truth {
        let n = model.n();
        let mut header = vec!["k".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        header.extend((1..=ny).map(|i| format!("y{i}")));
        let mut table = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>())?;
        for (k, (x, y)) in tr.states.iter().zip(&tr.outputs).enumerate() {
            let mut row = vec![k.to_string()];
            row.extend(x.iter().chain(y.iter()).map(|&val| num(val)));
            table.row(&row)?;
        }
        out.write_csv("trajectory.csv", table)?;
    }
    out.write("summary.json", format!("{{\n  \"seed\": {},\n  \"runs\": [\n{}\n  ]\n}}\n", sc.seed, summary.join(",\n")).as_bytes())?;
    Ok(())
}

fn rows_to_vectors(rows: &[Vec<f64>], width: usize, what: &str) -> Result<Vec<Vector>, CliError> {
    if rows.iter().any(|r| r.len() != width) {
        return Err(CliError::Input(format!("schema error: every entry of {what} must have {width} values")));
    }
    let m = matrix(rows, what, width)?;
    Ok(m.row_iter().map(|r| r.transpose()).collect())
}
