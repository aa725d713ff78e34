//! `afd-design` and `afd-verify`: active fault diagnosis inputs and their checks.

use lz_setkit::afd::{
    design_input, design_input_cz, intersection_table, output_tubes, transform_fault_models, verify_diagnosis, AffineLz, Design,
    FaultModelSet,
};
use lz_setkit::linalg::Vector;
use lz_setkit::sets::interval_hull;
use serde::Deserialize;

use crate::error::CliError;
use crate::output::{json_array, json_num, json_str, num, OutDir, Table};
use crate::scenario::{stack_steps, AfdSpec, InputSpec, Kind, ScenarioFile};
use crate::Method;

fn designed(f: &FaultModelSet, spec: &AfdSpec, method: Method) -> Result<Design, CliError> {
    match method {
        Method::Lz => Ok(design_input(f)?),
        Method::Cz => {
            let xa = spec
                .baseline_admissible
                .as_ref()
                .ok_or_else(|| CliError::Input("schema error: `--method cz` needs `baseline_admissible`".into()))?
                .build("baseline_admissible")?;
            Ok(design_input_cz(f, &xa)?)
        }
        Method::Zonotope => Err(CliError::Input("input design supports the methods lz and cz".into())),
    }
}

fn per_step(u: &Vector, nu: usize) -> String {
    if nu == 0 {
        return "[]".into();
    }
    let steps: Vec<String> = u.as_slice().chunks(nu).map(|c| json_array(c.iter().copied())).collect();
    format!("[{}]", steps.join(", "))
}

pub fn design(sc: &ScenarioFile, out: &OutDir, method: Method) -> Result<(), CliError> {
    sc.expect(Kind::Afd)?;
    let spec: AfdSpec = sc.payload()?;
    let f = spec.build()?;
    let d = designed(&f, &spec, method)?;
    let nu = f.n_u();

    let u_json = format!(
        "{{\n  \"method\": {},\n  \"horizon\": {},\n  \"n_u\": {nu},\n  \"cost\": {},\n  \"steps\": {},\n  \"factors\": {}\n}}\n",
        json_str(method.label()),
        f.horizon,
        json_num(d.cost),
        per_step(&d.input, nu),
        json_array(d.factors.iter().copied())
    );
    out.write("u.json", u_json.as_bytes())?;

    let mut kappa = Table::new(&["model_i", "model_j", "kappa", "reduced_kappa", "kappa_max"])?;
    for c in &d.certificates {
        kappa.row([(c.pair.0 + 1).to_string(), (c.pair.1 + 1).to_string(), num(c.kappa), num(c.reduced_kappa), num(c.kappa_max)])?;
    }
    out.write_csv("kappa.csv", kappa)?;

    let tubes = output_tubes(&f, &transform_fault_models(&f)?)?;
    out.write_csv("tubes.csv", tube_table(&f, &tubes, &d.input)?)?;

    let separated = d.certificates.iter().filter(|c| c.kappa > 0.0).count();
    println!(
        "{}: cost {:.6}, input {}, {separated}/{} pairs certified, reduction {:.3} s",
        method.label(),
        d.cost,
        per_step(&d.input, nu),
        d.certificates.len(),
        d.reduce_seconds
    );
    Ok(())
}

/// Per-step interval hulls of each output tube at input `u`.
fn tube_table(f: &FaultModelSet, tubes: &[AffineLz], u: &Vector) -> Result<Table, CliError> {
    let ny = f.models[0].n_y();
    let mut table = Table::new(&["model", "k", "output", "lower", "upper", "bounded"])?;
    for (i, tube) in tubes.iter().enumerate() {
        let hull = interval_hull(&tube.at(u)?)?;
        for k in 0..=f.horizon {
            for j in 0..ny {
                let (lo, hi) = (hull.lower[k * ny + j], hull.upper[k * ny + j]);
                let bounded = lo.is_finite() && hi.is_finite();
                table.row([(i + 1).to_string(), k.to_string(), (j + 1).to_string(), num(lo), num(hi), bounded.to_string()])?;
            }
        }
    }
    Ok(table)
}

#[derive(Deserialize)]
struct InputFile {
    steps: Vec<Vec<f64>>,
}

fn resolve_input(sc: &ScenarioFile, f: &FaultModelSet, spec: &AfdSpec, input: &InputSpec) -> Result<Vector, CliError> {
    let sources = [input.steps.is_some(), input.file.is_some(), input.reference, input.design.is_some()];
    if sources.iter().filter(|s| **s).count() != 1 {
        return Err(CliError::Input(format!(
            "schema error: input `{}` needs exactly one of `steps`, `file`, `reference`, `design`",
            input.name
        )));
    }
    let (nu, steps) = (f.n_u(), f.horizon + 1);
    if let Some(rows) = &input.steps {
        return stack_steps(rows, nu, steps, &input.name);
    }
    if let Some(file) = &input.file {
        let path = sc.base.join(file);
        let text = std::fs::read_to_string(&path).map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
        let parsed: InputFile = serde_json::from_str(&text).map_err(|e| CliError::Input(format!("schema error in {}: {e}", path.display())))?;
        return stack_steps(&parsed.steps, nu, steps, &input.name);
    }
    if input.reference {
        return Ok(f.reference.clone());
    }
    let method = Method::parse(input.design.as_deref().expect("one source is set"))?;
    Ok(designed(f, spec, method)?.input)
}

pub fn verify(sc: &ScenarioFile, out: &OutDir, method: Method) -> Result<(), CliError> {
    sc.expect(Kind::Afd)?;
    let spec: AfdSpec = sc.payload()?;
    let f = spec.build()?;
    let mut inputs = spec.verify.inputs.clone();
    if inputs.is_empty() {
        inputs.push(InputSpec {
            name: method.label().into(),
            steps: None,
            file: None,
            reference: false,
            design: Some(method.label().into()),
        });
    }
    let mut names: Vec<&str> = inputs.iter().map(|i| i.name.as_str()).collect();
    names.sort_unstable();
    if names.windows(2).any(|w| w[0] == w[1]) {
        return Err(CliError::Input("schema error: verification input names must be unique".into()));
    }

    let tubes = output_tubes(&f, &transform_fault_models(&f)?)?;
    let samples = spec.verify.samples;
    let mut inclusion = Table::new(&["input", "model", "tube", "inside", "samples"])?;
    let mut intersections = Table::new(&["input", "model_i", "model_j", "kappa", "disjoint"])?;
    for input in &inputs {
        let u = resolve_input(sc, &f, &spec, input)?;
        let counts = verify_diagnosis(&f, &u, samples, sc.seed, spec.verify.line_box)?;
        println!("{}: simulated outputs of model i inside tube j ({samples} samples)", input.name);
        for (i, row) in counts.iter().enumerate() {
            let cells: Vec<String> = row.iter().map(|c| format!("{c:>5}")).collect();
            println!("  model {}: {}", i + 1, cells.join(" "));
            for (j, c) in row.iter().enumerate() {
                inclusion.row([input.name.clone(), (i + 1).to_string(), (j + 1).to_string(), c.to_string(), samples.to_string()])?;
            }
        }
        let table = intersection_table(&tubes, &u)?;
        let disjoint = table.iter().filter(|p| p.empty).count();
        println!("  disjoint tube pairs: {disjoint}/{}", table.len());
        for p in table {
            intersections.row([input.name.clone(), (p.pair.0 + 1).to_string(), (p.pair.1 + 1).to_string(), num(p.kappa), p.empty.to_string()])?;
        }
    }
    out.write_csv("inclusion.csv", inclusion)?;
    out.write_csv("intersections.csv", intersections)?;
    Ok(())
}
