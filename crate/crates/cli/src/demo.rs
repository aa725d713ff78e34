//! `sets-demo`: set operations on small examples, with hulls and sample clouds for plotting.

use lz_setkit::estimator::{estimate_run, svd_transform, DescriptorModel, RANK_TOL};
use lz_setkit::linalg::{eye, Mat, Vector};
use lz_setkit::reduction::ReductionLimits;
use lz_setkit::sets::{generalized_intersection, interval_hull, is_empty, linear_map, lz_zonotope, minkowski_sum, sample_points, LineZonotope, DEFAULT_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::CliError;
use crate::output::{hull_rows, json_str, num, OutDir, Table};
use crate::scenario::{check_name, matrix, Demo, DemoSpec, Kind, ScenarioFile};

/// The feasible-set demo keeps every set exact up to this size.
const FEASIBLE_LIMITS: ReductionLimits = ReductionLimits {
    max_generators: 1000,
    max_constraints: 1000,
    minimize_lines: false,
};

struct DemoResult {
    name: String,
    op: &'static str,
    sets: Vec<(String, LineZonotope)>,
}

fn identity_or(map: &Option<Vec<Vec<f64>>>, n: usize, what: &str) -> Result<Mat, CliError> {
    match map {
        Some(rows) => matrix(rows, what, n),
        None => Ok(eye(n)),
    }
}

fn feasible_sets(model: &DescriptorModel, x0: &LineZonotope, steps: usize) -> Result<Vec<(String, LineZonotope)>, CliError> {
    // outputs play no part: the measurement equation is switched off
    let mut m = model.clone();
    m.c.fill(0.0);
    m.d.fill(0.0);
    m.dv.fill(0.0);
    let point = |n: usize| lz_zonotope(Mat::zeros(n, 0), Vector::zeros(n));
    let zeros_u = vec![Vector::zeros(m.n_u()); steps];
    let zeros_y = vec![Vector::zeros(m.n_y()); steps];
    let run = estimate_run(&m, x0, &point(m.n_w())?, &point(m.n_v())?, &zeros_u, &zeros_y, &FEASIBLE_LIMITS)?;
    let t = svd_transform(&m, RANK_TOL)?;
    let mut sets = vec![("X0".to_string(), x0.clone())];
    for s in &run {
        // at k = 0 the estimate without the static row is the prior itself
        let set = if s.k == 0 { linear_map(&t.t, &s.zhat)? } else { s.xhat.clone() };
        sets.push((format!("S{}", s.k), set));
    }
    Ok(sets)
}

fn evaluate(demo: &Demo) -> Result<DemoResult, CliError> {
    check_name(demo.name())?;
    let (op, sets) = match demo {
        Demo::Intersection { z, y, map, .. } => {
            let (z, y) = (z.build("z")?, y.build("y")?);
            let r = identity_or(map, z.dim(), "map")?;
            let out = generalized_intersection(&z, &y, &r)?;
            ("intersection", vec![("z".into(), z), ("y".into(), y), ("result".into(), out)])
        }
        Demo::MinkowskiSum { z, y, .. } => {
            let (z, y) = (z.build("z")?, y.build("y")?);
            let out = minkowski_sum(&z, &y)?;
            ("minkowski-sum", vec![("z".into(), z), ("y".into(), y), ("result".into(), out)])
        }
        Demo::LinearMap { z, map, .. } => {
            let z = z.build("z")?;
            let out = linear_map(&matrix(map, "map", z.dim())?, &z)?;
            ("linear-map", vec![("z".into(), z), ("result".into(), out)])
        }
        Demo::FeasibleSets { model, x0, steps, .. } => {
            if *steps == 0 {
                return Err(CliError::Input("schema error: feasible-sets needs at least one step".into()));
            }
            ("feasible-sets", feasible_sets(&model.build("model")?, &x0.build("x0")?, *steps)?)
        }
    };
    Ok(DemoResult {
        name: demo.name().to_string(),
        op,
        sets,
    })
}

pub fn run(sc: &ScenarioFile, out: &OutDir) -> Result<(), CliError> {
    sc.expect(Kind::SetsDemo)?;
    let spec: DemoSpec = sc.payload()?;
    if spec.demos.is_empty() {
        println!("no demos to run");
        return Ok(());
    }
    let mut seen: Vec<&str> = spec.demos.iter().map(Demo::name).collect();
    seen.sort_unstable();
    if seen.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Input("schema error: demo names must be unique".into()));
    }
    let results: Vec<DemoResult> = spec.demos.par_iter().map(evaluate).collect::<Result<_, _>>()?;

    let mut hulls = Table::new(&["demo", "set", "coord", "lower", "upper", "bounded"])?;
    for (index, r) in results.iter().enumerate() {
        let parts: Vec<String> = r.sets.iter().map(|(label, z)| format!("    {}: {}", json_str(label), indent(&z.to_json()))).collect();
        let doc = format!(
            "{{\n  \"name\": {},\n  \"op\": {},\n  \"sets\": {{\n{}\n  }}\n}}\n",
            json_str(&r.name),
            json_str(r.op),
            parts.join(",\n")
        );
        out.write(&format!("{}.json", r.name), doc.as_bytes())?;

        let n = r.sets.iter().map(|(_, z)| z.dim()).max().unwrap_or(0);
        let mut header = vec!["set".to_string(), "point".to_string()];
        header.extend((1..=n).map(|i| format!("x{i}")));
        let mut samples = Table::new(&header.iter().map(String::as_str).collect::<Vec<_>>())?;
        let mut rng = ChaCha8Rng::seed_from_u64(sc.seed.wrapping_add(index as u64));
        let mut report = Vec::new();
        for (label, z) in &r.sets {
            if is_empty(z, DEFAULT_TOL)? {
                report.push(format!("{label} empty"));
                continue;
            }
            let hull = interval_hull(z)?;
            hull_rows(&mut hulls, &[r.name.clone(), label.clone()], &hull)?;
            report.push(format!("{label} {}", if hull.is_bounded() { "bounded" } else { "unbounded" }));
            for (p, x) in sample_points(z, spec.samples, spec.line_box, &mut rng)?.iter().enumerate() {
                let mut row = vec![label.clone(), p.to_string()];
                row.extend(x.iter().map(|&val| num(val)));
                row.resize(n + 2, String::new());
                samples.row(&row)?;
            }
        }
        out.write_csv(&format!("{}_samples.csv", r.name), samples)?;
        println!("{} ({}): {}", r.name, r.op, report.join(", "));
    }
    out.write_csv("hulls.csv", hulls)?;
    Ok(())
}

fn indent(json: &str) -> String {
    json.trim_end().replace('\n', "\n    ")
}
