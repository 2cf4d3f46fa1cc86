use std::f64::consts::PI;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;
use serde_json::{json, Value};

use dirac_reduction::bubbles::{energy_j0, residual_rescaled, residual_system, BubbleParams, GridSpec};
use dirac_reduction::degree::{degree_quadrature, gamma_degree, MeshSpec};
use dirac_reduction::geometry::PointR3;
use dirac_reduction::morse::{build_h, theorem_check, PerturbationFunction, PerturbationSpec, TheoremOptions};
use dirac_reduction::quadrature::QuadratureSpec;
use dirac_reduction::reduced_functional::{
    gamma_jet_estimate, kernel_moments, lambda_expansion, Chart, Order, DEFAULT_LAMBDAS,
};

use crate::config::{parse_point, parse_xi_grid, FileConfig, Range};
use crate::report::{Failure, Outcome, EXIT_HYPOTHESES, EXIT_NUMERIC, EXIT_OK};

/// Minimum observed order accepted by `verify`.
pub const MIN_ORDER: f64 = 1.8;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    /// Centre, e.g. `1,0,0`.
    #[arg(long, allow_hyphen_values = true)]
    pub xi: Option<String>,
    /// Nodes per axis of the coarse grid; the fine grid has twice as many.
    #[arg(long)]
    pub grid_n: Option<usize>,
    /// Half width of the box; defaults to `4λ`.
    #[arg(long)]
    pub grid_l: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConstantsArgs {
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct PerturbationArgs {
    /// Function on S³ in `x1..x4`.
    #[arg(long, allow_hyphen_values = true)]
    pub k: Option<String>,
    /// Function on ℝ³ in `y1..y3`.
    #[arg(long, allow_hyphen_values = true)]
    pub h: Option<String>,
}

#[derive(Debug, Args)]
pub struct ScanArgs {
    #[command(flatten)]
    pub perturbation: PerturbationArgs,
    /// `lo:hi:n`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda_range: Option<String>,
    /// `lo:hi:n` for every coordinate, or three such ranges separated by commas.
    #[arg(long, allow_hyphen_values = true)]
    pub xi_grid: Option<String>,
    /// CSV output file.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub perturbation: PerturbationArgs,
    /// Initial half width of the critical-point search box.
    #[arg(long = "box")]
    pub box_radius: Option<f64>,
    /// Accepted for compatibility; the report is always JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct DegreeArgs {
    #[command(flatten)]
    pub perturbation: PerturbationArgs,
    #[arg(long)]
    pub s: Option<f64>,
    /// Gauss nodes per polar panel of the boundary mesh.
    #[arg(long)]
    pub mesh: Option<usize>,
}

fn perturbation_spec(a: &PerturbationArgs, cfg: &FileConfig) -> Result<PerturbationSpec, Failure> {
    let k = a.k.clone().or_else(|| if a.h.is_none() { cfg.k.clone() } else { None });
    let h = a.h.clone().or_else(|| if a.k.is_none() { cfg.h.clone() } else { None });
    match (&k, &h) {
        (Some(_), None) | (None, Some(_)) => Ok(PerturbationSpec { k, h, epsilon: 0.0 }),
        _ => Err(Failure::usage("give exactly one of --k and --h")),
    }
}

fn spec_json(spec: &PerturbationSpec) -> Value {
    json!({ "k": spec.k, "h": spec.h })
}

fn quadrature(tol: Option<f64>) -> Result<QuadratureSpec, Failure> {
    let q = QuadratureSpec {
        tol: tol.unwrap_or(QuadratureSpec::default().tol),
        ..QuadratureSpec::default()
    };
    q.validate().map_err(Failure::usage)?;
    Ok(q)
}

fn order(coarse: f64, fine: f64, h_coarse: f64, h_fine: f64) -> f64 {
    (coarse / fine).ln() / (h_coarse / h_fine).ln()
}

pub fn verify(a: &VerifyArgs, cfg: &FileConfig) -> Result<Outcome, Failure> {
    let lambda = a.lambda.or(cfg.lambda).unwrap_or(1.0);
    let xi = match a.xi.clone().or_else(|| cfg.xi.clone()) {
        Some(t) => parse_point(&t).map_err(Failure::usage)?,
        None => [0.0; 3],
    };
    let n = a.grid_n.or(cfg.grid_n).unwrap_or(64);
    let l = a.grid_l.or(cfg.grid_l).unwrap_or(4.0 * lambda);
    let input = json!({ "lambda": lambda, "xi": xi, "grid_n": n, "grid_l": l });
    let fail = |e: Failure| e.with_input(&input);

    let p = BubbleParams::with_scale(lambda, xi).map_err(|e| fail(e.into()))?;
    let grids = [
        GridSpec::new(l, n).map_err(|e| fail(e.into()))?,
        GridSpec::new(l, 2 * n).map_err(|e| fail(e.into()))?,
    ];
    let mut levels = Vec::new();
    for g in &grids {
        let (s, sp) = residual_system(&p, g).map_err(|e| fail(e.into()))?;
        let (rs, rsp) = residual_rescaled(&p, g).map_err(|e| fail(e.into()))?;
        levels.push((g.n, g.spacing(), [s, sp, rs, rsp]));
    }
    let names = ["scalar", "spinor", "rescaled_scalar", "rescaled_spinor"];
    let orders: Vec<f64> = (0..4)
        .map(|i| order(levels[0].2[i], levels[1].2[i], levels[0].1, levels[1].1))
        .collect();
    let passed = orders.iter().all(|o| *o >= MIN_ORDER);
    let resolutions: Vec<Value> = levels
        .iter()
        .map(|(n, h, r)| {
            let mut m = serde_json::Map::new();
            m.insert("n".into(), json!(n));
            m.insert("spacing".into(), json!(h));
            for (name, v) in names.iter().zip(r) {
                m.insert((*name).into(), json!(v));
            }
            Value::Object(m)
        })
        .collect();
    let order_map: serde_json::Map<String, Value> =
        names.iter().zip(&orders).map(|(k, v)| ((*k).to_string(), json!(v))).collect();
    Ok(Outcome {
        input,
        results: json!({
            "resolutions": resolutions,
            "orders": order_map,
            "min_order": MIN_ORDER,
            "passed": passed,
        }),
        warnings: Vec::new(),
        exit: if passed { EXIT_OK } else { EXIT_NUMERIC },
    })
}

/// Relative tolerance for the quadrature constants.
pub const CONSTANT_TOL: f64 = 1e-5;
/// Relative tolerance for the fitted expansion constant, which carries an
/// `O(λ²)` bias.
pub const FIT_TOL: f64 = 1e-2;

pub fn constants(a: &ConstantsArgs, cfg: &FileConfig) -> Result<Outcome, Failure> {
    let tol = a.tol.or(cfg.tol);
    let input = json!({ "tol": tol.unwrap_or(QuadratureSpec::default().tol) });
    let q = quadrature(tol).map_err(|e| e.with_input(&input))?;
    let fail = |e: Failure| e.with_input(&input);

    let ([m0, m2], _) = kernel_moments(&q).map_err(|e| fail(e.into()))?;
    let j0 = energy_j0(&BubbleParams::standard(), &q).map_err(|e| fail(e.into()))?;
    let probe = PerturbationFunction::flat("2*y1/(1+y1^2+y2^2+y3^2)").map_err(|e| fail(e.into()))?;
    let fit = lambda_expansion(&probe, PointR3([1.0, 0.0, 0.0]), &DEFAULT_LAMBDAS, &q).map_err(|e| fail(e.into()))?;

    let pi2 = PI * PI;
    let table = [
        ("integral_v", m0, 9.0 * pi2 / 4.0, CONSTANT_TOL),
        ("c0", 0.5 * m0, 9.0 * pi2 / 8.0, CONSTANT_TOL),
        ("second_moment_v", m2, 27.0 * pi2 / 4.0, CONSTANT_TOL),
        ("j0_standard_bubble", j0, 9.0 * pi2 / 8.0, CONSTANT_TOL),
        ("expansion_constant", m2 / 6.0, 9.0 * pi2 / 8.0, CONSTANT_TOL),
        ("fitted_c_star", fit.fitted, 9.0 * pi2 / 8.0, FIT_TOL),
    ];
    let mut all_ok = true;
    let rows: Vec<Value> = table
        .iter()
        .map(|(name, value, reference, tolerance)| {
            let rel = (value - reference).abs() / reference.abs();
            let ok = rel <= *tolerance;
            all_ok &= ok;
            json!({
                "name": name,
                "value": value,
                "reference": reference,
                "relative_error": rel,
                "tolerance": tolerance,
                "ok": ok,
            })
        })
        .collect();
    Ok(Outcome {
        input,
        results: json!({ "constants": rows, "all_ok": all_ok }),
        warnings: Vec::new(),
        exit: if all_ok { EXIT_OK } else { EXIT_NUMERIC },
    })
}

pub const CSV_COLUMNS: [&str; 10] = [
    "lambda",
    "xi1",
    "xi2",
    "xi3",
    "gamma",
    "dgamma_dlambda",
    "grad_xi1",
    "grad_xi2",
    "grad_xi3",
    "est_error",
];

pub fn gamma_scan(a: &ScanArgs, cfg: &FileConfig) -> Result<Outcome, Failure> {
    let spec = perturbation_spec(&a.perturbation, cfg)?;
    let lambda_text = a.lambda_range.clone().or_else(|| cfg.lambda_range.clone()).unwrap_or_else(|| "0.01:1:5".into());
    let xi_text = a.xi_grid.clone().or_else(|| cfg.xi_grid.clone()).unwrap_or_else(|| "0:0:1".into());
    let out = a.out.clone().or_else(|| cfg.out.clone());
    let tol = a.tol.or(cfg.tol);
    let mut input = spec_json(&spec);
    input["lambda_range"] = json!(lambda_text);
    input["xi_grid"] = json!(xi_text);
    input["out"] = json!(out);
    input["tol"] = json!(tol.unwrap_or(QuadratureSpec::default().tol));
    let fail = |e: Failure| e.with_input(&input);

    let lambdas = Range::parse(&lambda_text).map_err(|e| fail(Failure::usage(e)))?;
    if lambdas.lo < 0.0 {
        return Err(fail(Failure::usage("lambda must be non-negative")));
    }
    let xis = parse_xi_grid(&xi_text).map_err(|e| fail(Failure::usage(e)))?;
    let q = quadrature(tol).map_err(fail)?;
    let h = build_h(&spec).map_err(|e| fail(e.into()))?;

    let mut points = Vec::new();
    for l in lambdas.values() {
        for x1 in xis[0].values() {
            for x2 in xis[1].values() {
                for x3 in xis[2].values() {
                    points.push([l, x1, x2, x3]);
                }
            }
        }
    }
    points.sort_by(|a, b| {
        a.iter()
            .zip(b)
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let evaluated: Vec<_> = points
        .par_iter()
        .map(|p| gamma_jet_estimate(&h, p[0], PointR3([p[1], p[2], p[3]]), &q, Order::Gradient, Chart::Auto))
        .collect();

    let mut warnings = Vec::new();
    let mut rows: Vec<[f64; 10]> = Vec::with_capacity(points.len());
    for (p, r) in points.iter().zip(evaluated) {
        let g = r.map_err(|e| fail(e.into()))?;
        if !g.converged {
            warnings.push(format!(
                "QuadratureNotConverged at lambda = {}, xi = ({}, {}, {}): error estimate {:e} exceeds {:e}",
                p[0], p[1], p[2], p[3], g.error, q.tol
            ));
        }
        let j = g.jet;
        rows.push([p[0], p[1], p[2], p[3], j.value, j.grad[0], j.grad[1], j.grad[2], j.grad[3], g.error]);
    }

    let mut results = json!({ "rows": rows.len(), "columns": CSV_COLUMNS, "unconverged_rows": warnings.len() });
    match &out {
        Some(path) => {
            write_csv(path, &rows).map_err(|e| fail(Failure::new(EXIT_NUMERIC, "IoError", e)))?;
            results["csv"] = json!(path);
        }
        None => results["data"] = json!(rows),
    }
    Ok(Outcome {
        input,
        results,
        warnings,
        exit: EXIT_OK,
    })
}

fn write_csv(path: &PathBuf, rows: &[[f64; 10]]) -> Result<(), String> {
    let mut w = csv::Writer::from_path(path).map_err(|e| format!("cannot write {}: {e}", path.display()))?;
    w.write_record(CSV_COLUMNS).map_err(|e| e.to_string())?;
    for r in rows {
        w.write_record(r.iter().map(|v| format!("{v:.16e}"))).map_err(|e| e.to_string())?;
    }
    w.flush().map_err(|e| e.to_string())
}

pub fn analyze(a: &AnalyzeArgs, cfg: &FileConfig) -> Result<Outcome, Failure> {
    let spec = perturbation_spec(&a.perturbation, cfg)?;
    let box_radius = a.box_radius.or(cfg.box_radius).unwrap_or(TheoremOptions::default().box_radius);
    let mut input = spec_json(&spec);
    input["box"] = json!(box_radius);
    let fail = |e: Failure| e.with_input(&input);
    if !(box_radius > 0.0 && box_radius.is_finite()) {
        return Err(fail(Failure::usage("--box must be positive")));
    }
    let opts = TheoremOptions {
        box_radius,
        max_box_radius: TheoremOptions::default().max_box_radius.max(box_radius),
        ..TheoremOptions::default()
    };
    let v = theorem_check(&spec, &opts).map_err(|e| fail(e.into()))?;
    let critical_points: Vec<Value> = v
        .critical_points
        .iter()
        .map(|c| {
            json!({
                "xi": c.location,
                "index": c.index,
                "laplacian": c.laplacian,
                "grad_norm": c.grad_norm,
            })
        })
        .collect();
    let results = json!({
        "south_pole_ok": v.south_pole_ok,
        "south_pole": {
            "status": v.south_pole.status.as_str(),
            "kelvin_grad_norm": v.south_pole.kelvin_grad_norm,
            "intrinsic_grad_norm": v.south_pole.intrinsic_grad_norm,
        },
        "condition_i": v.condition_i,
        "condition_ii": v.condition_ii,
        "degree_sum": v.degree_sum,
        "guarantee": v.guarantee,
        "critical_points": critical_points,
        "box_radius": v.box_radius,
        "seeds": v.seeds,
        "failed_seeds": v.failed_seeds,
    });
    Ok(Outcome {
        input,
        results,
        warnings: v.diagnostics.clone(),
        exit: if v.guarantee { EXIT_OK } else { EXIT_HYPOTHESES },
    })
}

pub fn degree(a: &DegreeArgs, cfg: &FileConfig) -> Result<Outcome, Failure> {
    let spec = perturbation_spec(&a.perturbation, cfg)?;
    let s = a.s.or(cfg.s).unwrap_or(6.0);
    let mesh = a.mesh.or(cfg.mesh).unwrap_or(4);
    let mut input = spec_json(&spec);
    input["s"] = json!(s);
    input["mesh"] = json!(mesh);
    let fail = |e: Failure| e.with_input(&input);
    if mesh < 2 {
        return Err(fail(Failure::usage("--mesh must be at least 2")));
    }
    let h = build_h(&spec).map_err(|e| fail(e.into()))?;
    let q = degree_quadrature();
    let d = gamma_degree(&h, s, &q, &MeshSpec { density: mesh }).map_err(|e| fail(e.into()))?;
    let v = theorem_check(&spec, &TheoremOptions::default()).map_err(|e| fail(e.into()))?;
    let agree = v.degree_sum == Some(d.result.degree);
    let mut warnings = v.diagnostics.clone();
    if d.unconverged > 0 {
        warnings.push(format!(
            "{} boundary evaluations exceeded the quadrature tolerance {:e}",
            d.unconverged, q.tol
        ));
    }
    let exit = match v.degree_sum {
        None => EXIT_HYPOTHESES,
        Some(_) if agree => EXIT_OK,
        Some(_) => EXIT_NUMERIC,
    };
    Ok(Outcome {
        input,
        results: json!({
            "kronecker_degree": d.result.degree,
            "raw_integral": d.result.raw,
            "degree_sum": v.degree_sum,
            "agree": agree,
            "boundary_min_grad": d.result.boundary_min,
            "boundary_max_grad": d.result.boundary_max,
            "mesh_density": d.result.density,
            "evaluations": d.result.evaluations,
        }),
        warnings,
        exit,
    })
}
