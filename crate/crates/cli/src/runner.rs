//! Experiment execution: assembles the operator and data a config describes,
//! runs the bidiagonalization and the requested solvers, and writes the
//! trace CSV, the summary, and the noise-estimate vectors. Every float is
//! written with `{:e}` so identical configs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use gkreg::{
    apply_transpose, bidiagonalize, detect_noise_revealing, make_foxgood, make_gravity,
    make_paralleltomo, make_phillips, make_shaw, mtx, noise_estimate, numerical_rank,
    phi_factors, psi_factors, solver_trace, BidiagState, LinearOperator, Method, NoiseRevealing,
    ProblemOperator, ReorthMode, SolverTrace, TestProblem, Vector,
};

use crate::config::{ExperimentConfig, ProblemSpec};
use crate::error::CliError;

/// Operator and data ready to run: generated or loaded, noise applied.
#[derive(Debug)]
pub struct Assembled {
    pub op: ProblemOperator,
    /// Data the solvers see (perturbed when noise is configured).
    pub b: Vector,
    pub x_true: Option<Vector>,
    /// The exact perturbation, when it is known (synthetic noise).
    pub eta: Option<Vector>,
    /// Realized `||eta|| / ||b_exact||`.
    pub level_actual: Option<f64>,
    pub noise_description: String,
}

/// Builds the generator-backed test problem a spec describes; `mtx` is not a
/// generator and is rejected here.
pub fn generate_problem(spec: &ProblemSpec) -> Result<TestProblem, CliError> {
    match spec {
        ProblemSpec::Shaw { n } => make_shaw(*n).map_err(CliError::invalid),
        ProblemSpec::Phillips { n } => make_phillips(*n).map_err(CliError::invalid),
        ProblemSpec::Gravity { n } => make_gravity(*n).map_err(CliError::invalid),
        ProblemSpec::Foxgood { n } => make_foxgood(*n).map_err(CliError::invalid),
        ProblemSpec::Paralleltomo { nx, angles, nrays } => {
            let (start, step, stop) = *angles;
            let angles = gkreg::angle_range(start, step, stop).map_err(CliError::invalid)?;
            make_paralleltomo(*nx, &angles, *nrays).map_err(CliError::invalid)
        }
        ProblemSpec::Mtx { .. } => Err(CliError::Validation(
            "a matrix-market problem cannot be generated; use a generator problem".to_string(),
        )),
    }
}

pub fn assemble(cfg: &ExperimentConfig) -> Result<Assembled, CliError> {
    let (op, b_exact, x_true) = match &cfg.problem {
        ProblemSpec::Mtx { matrix, rhs, x_true } => {
            let a = mtx::read_matrix(matrix).map_err(CliError::invalid)?;
            let b = mtx::read_vector(rhs).map_err(CliError::invalid)?;
            if b.len() != a.nrows() {
                return Err(CliError::Validation(format!(
                    "right-hand side length {} does not match the matrix ({} rows)",
                    b.len(),
                    a.nrows()
                )));
            }
            let x = match x_true {
                Some(path) => {
                    let x = mtx::read_vector(path).map_err(CliError::invalid)?;
                    if x.len() != a.ncols() {
                        return Err(CliError::Validation(format!(
                            "x_true length {} does not match the matrix ({} columns)",
                            x.len(),
                            a.ncols()
                        )));
                    }
                    Some(x)
                }
                None => None,
            };
            (ProblemOperator::Dense(a), b, x)
        }
        spec => {
            let p = generate_problem(spec)?;
            (p.op, p.b_exact, Some(p.x_true))
        }
    };

    if cfg.kmax > op.nrows().min(op.ncols()) {
        return Err(CliError::Validation(format!(
            "kmax = {} exceeds min(m, n) = {} for this problem",
            cfg.kmax,
            op.nrows().min(op.ncols())
        )));
    }

    match cfg.noise {
        None => Ok(Assembled {
            op,
            b: b_exact,
            x_true,
            eta: None,
            level_actual: None,
            noise_description: "none".to_string(),
        }),
        Some(setting) => {
            let spec = setting.to_spec(cfg.seed);
            let sys = gkreg::apply_noise(&spec, &b_exact).map_err(CliError::invalid)?;
            Ok(Assembled {
                op,
                b: sys.b,
                x_true,
                eta: Some(sys.eta),
                level_actual: Some(sys.level_actual),
                noise_description: format!("{} seed {}", setting.describe(), cfg.seed),
            })
        }
    }
}

/// Everything one run produces before it is written out.
pub struct RunResult {
    pub state: BidiagState,
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    pub detected: NoiseRevealing,
    /// Traces in canonical method order; `None` for methods not requested.
    pub traces: [Option<SolverTrace>; 3],
    /// `rank_Sk` per iteration, starting at k = 1.
    pub ranks: Vec<usize>,
}

pub fn execute(cfg: &ExperimentConfig, asm: &Assembled) -> Result<RunResult, CliError> {
    let state = bidiagonalize(&asm.op, &asm.b, cfg.reorth, cfg.kmax)
        .map_err(CliError::numerical)?;
    let phi = phi_factors(&state);
    let psi = psi_factors(&state);
    let detected = detect_noise_revealing(&phi).map_err(CliError::numerical)?;

    let mut traces = [None, None, None];
    for method in &cfg.methods {
        let trace = solver_trace(&asm.op, &state, *method, asm.x_true.as_ref())
            .map_err(CliError::numerical)?;
        traces[method_slot(*method)] = Some(trace);
    }

    let ranks = (1..=state.k())
        .map(|k| numerical_rank(&state.s_matrix(k), 0.1))
        .collect::<gkreg::Result<Vec<usize>>>()
        .map_err(CliError::numerical)?;

    Ok(RunResult { state, phi, psi, detected, traces, ranks })
}

pub fn method_slot(method: Method) -> usize {
    match method {
        Method::Craig => 0,
        Method::Lsqr => 1,
        Method::Lsmr => 2,
    }
}

const TRACE_HEADER: &str =
    "k,alpha_k,beta_kplus1,phi0_k,psi0_k,res_craig,res_lsqr,atres_lsmr,err_craig,err_lsqr,err_lsmr,rank_Sk";

fn field(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

/// Renders the 12-column trace. Row k = 0 is the zero iterate (residual
/// norms of `b` itself); later rows read from the solver traces, with empty
/// fields where a method was not requested or an iterate does not exist.
pub fn render_trace(asm: &Assembled, run: &RunResult) -> String {
    let state = &run.state;
    let b_norm = asm.b.norm();
    let atb_norm = apply_transpose(&asm.op, &asm.b).expect("dimensions fixed").norm();
    let xt_norm = asm.x_true.as_ref().map(|x| x.norm());
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');

    let method_val = |slot: usize, k: usize, pick: &dyn Fn(&SolverTrace) -> Option<f64>| {
        run.traces[slot].as_ref().and_then(|t| {
            if k >= 1 && k <= t.ks.len() {
                pick(t)
            } else {
                None
            }
        })
    };

    for k in 0..=state.k() {
        let mut cols: Vec<String> = vec![k.to_string()];
        if k == 0 {
            cols.push(String::new()); // no alpha_0
            cols.push(field(Some(state.betas()[0])));
            cols.push(field(run.phi.first().copied()));
            cols.push(field(run.psi.first().copied()));
            for slot in [0, 1] {
                cols.push(field(run.traces[slot].as_ref().map(|_| b_norm)));
            }
            cols.push(field(run.traces[2].as_ref().map(|_| atb_norm)));
            for slot in [0, 1, 2] {
                cols.push(field(run.traces[slot].as_ref().and(xt_norm)));
            }
            cols.push(String::new()); // S_0 has no columns to rank
        } else {
            cols.push(field(Some(state.alphas()[k - 1])));
            cols.push(field(Some(state.betas()[k])));
            cols.push(field(run.phi.get(k).copied()));
            cols.push(field(run.psi.get(k).copied()));
            cols.push(field(method_val(0, k, &|t| Some(t.resnorms[k - 1]))));
            cols.push(field(method_val(1, k, &|t| Some(t.resnorms[k - 1]))));
            cols.push(field(method_val(2, k, &|t| Some(t.atresnorms[k - 1]))));
            for slot in [0, 1, 2] {
                cols.push(field(method_val(slot, k, &|t| {
                    t.errnorms.as_ref().map(|e| e[k - 1])
                })));
            }
            cols.push(run.ranks[k - 1].to_string());
        }
        debug_assert_eq!(cols.len(), 12);
        out.push_str(&cols.join(","));
        out.push('\n');
    }
    out
}

pub fn render_summary(cfg: &ExperimentConfig, asm: &Assembled, run: &RunResult) -> String {
    let mut s = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    line("problem", cfg.problem.name().to_string());
    line("m", asm.op.nrows().to_string());
    line("n", asm.op.ncols().to_string());
    line("reorth", match cfg.reorth {
        ReorthMode::FullDouble => "full".to_string(),
        ReorthMode::None => "none".to_string(),
    });
    line("kmax", cfg.kmax.to_string());
    line("seed", cfg.seed.to_string());
    line("noise", asm.noise_description.clone());
    if let Some(eta) = &asm.eta {
        line("eta_norm", format!("{:e}", eta.norm()));
    }
    if let Some(level) = asm.level_actual {
        line("level_actual", format!("{level:e}"));
    }
    line("steps", run.state.k().to_string());
    line(
        "termination",
        run.state
            .termination()
            .map(|t| t.to_string())
            .unwrap_or_else(|| "kmax reached".to_string()),
    );
    line(
        "k_rev",
        run.detected.k_rev.map(|k| k.to_string()).unwrap_or_else(|| "none".to_string()),
    );
    line("phase", format!("{}..{}", run.detected.phase.0, run.detected.phase.1));
    for method in [Method::Craig, Method::Lsqr, Method::Lsmr] {
        let Some(trace) = run.traces[method_slot(method)].as_ref() else { continue };
        let name = method.name();
        let (norms, what) = match method {
            Method::Lsmr => (&trace.atresnorms, "atres"),
            _ => (&trace.resnorms, "res"),
        };
        if let Some(i) = argmin(norms) {
            line(&format!("{name}_argmin_{what}"), trace.ks[i].to_string());
            line(&format!("{name}_min_{what}"), format!("{:e}", norms[i]));
        }
        if let Some(errs) = &trace.errnorms {
            if let Some(i) = argmin(errs) {
                line(&format!("{name}_argmin_err"), trace.ks[i].to_string());
                line(&format!("{name}_min_err"), format!("{:e}", errs[i]));
            }
        }
    }
    s
}

fn argmin(v: &[f64]) -> Option<usize> {
    (0..v.len()).reduce(|best, i| if v[i] < v[best] { i } else { best })
}

/// Single-column CSV with a header, the format every vector output uses.
pub fn render_vector_csv(name: &str, v: &Vector) -> String {
    let mut s = String::with_capacity(v.len() * 12 + name.len() + 1);
    s.push_str(name);
    s.push('\n');
    for x in v.iter() {
        let _ = writeln!(s, "{x:e}");
    }
    s
}

/// Runs the full `run` subcommand pipeline and writes all outputs. Returns
/// the lines to print on stdout.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<String>, CliError> {
    let out_dir = cfg.outputs.clone().ok_or_else(|| {
        CliError::Validation("'outputs' is required (set outputs= or pass --outputs)".to_string())
    })?;
    let asm = assemble(cfg)?;
    let run = execute(cfg, &asm)?;

    fs::create_dir_all(&out_dir)
        .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", out_dir.display())))?;
    let mut printed = Vec::new();
    let trace = render_trace(&asm, &run);
    let trace_path = out_dir.join("trace.csv");
    write_text(&trace_path, &trace)?;
    printed.push(format!("wrote {} ({} rows)", trace_path.display(), run.state.k() + 1));

    let summary_path = out_dir.join("summary.txt");
    write_text(&summary_path, &render_summary(cfg, &asm, &run))?;
    printed.push(format!("wrote {}", summary_path.display()));

    if let Some(k_rev) = run.detected.k_rev {
        let est = noise_estimate(&run.state, k_rev).map_err(CliError::numerical)?;
        let est_path = out_dir.join("eta_est.csv");
        write_text(&est_path, &render_vector_csv("eta_est", &est))?;
        printed.push(format!("wrote {} (k_rev = {k_rev})", est_path.display()));
        if let Some(eta) = &asm.eta {
            let diff_path = out_dir.join("eta_diff.csv");
            write_text(&diff_path, &render_vector_csv("eta_diff", &eta.sub(&est)))?;
            printed.push(format!("wrote {}", diff_path.display()));
        }
    } else {
        printed.push("no noise-revealing iteration detected; eta_est.csv not written".to_string());
    }
    Ok(printed)
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text)
        .map_err(|e| CliError::Numerical(format!("cannot write {}: {e}", path.display())))
}

/// Exports a generator problem as Matrix Market files plus a small metadata
/// sidecar, so the same experiment can be re-run through the `mtx` problem
/// source or fed to other tools.
pub fn export_problem(spec: &ProblemSpec, out_dir: &PathBuf) -> Result<Vec<String>, CliError> {
    let p = generate_problem(spec)?;
    fs::create_dir_all(out_dir)
        .map_err(|e| CliError::Numerical(format!("cannot create {}: {e}", out_dir.display())))?;
    let a = p.op.to_dense();
    let matrix_path = out_dir.join("A.mtx");
    mtx::write_matrix(&matrix_path, &a).map_err(CliError::numerical)?;
    let rhs_path = out_dir.join("b_exact.mtx");
    mtx::write_vector(&rhs_path, &p.b_exact).map_err(CliError::numerical)?;
    let x_path = out_dir.join("x_true.mtx");
    mtx::write_vector(&x_path, &p.x_true).map_err(CliError::numerical)?;

    let mut meta = String::new();
    let _ = writeln!(meta, "problem = {}", p.name);
    let _ = writeln!(meta, "m = {}", a.nrows());
    let _ = writeln!(meta, "n = {}", a.ncols());
    let _ = writeln!(meta, "matrix = A.mtx");
    let _ = writeln!(meta, "rhs = b_exact.mtx");
    let _ = writeln!(meta, "x_true = x_true.mtx");
    write_text(&out_dir.join("meta.txt"), &meta)?;

    Ok(vec![
        format!("wrote {} ({} x {})", matrix_path.display(), a.nrows(), a.ncols()),
        format!("wrote {}", rhs_path.display()),
        format!("wrote {}", x_path.display()),
        format!("wrote {}", out_dir.join("meta.txt").display()),
    ])
}
