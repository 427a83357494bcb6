use std::path::Path;

use dlqr_core::analysis::{certify_gamma, evaluate_cost, CostCertificate};
use dlqr_core::graph::{spectrum, LaplacianSpectrum};
use dlqr_core::sim::{consensus_error, quadrature_cost, simulate, DEFAULT_DT, DEFAULT_HORIZON};
use dlqr_core::synthesis::{
    admissibility, c_interval, design_gain, design_gain_single, GainDesign, Method, SynthesisBudget,
};
use dlqr_core::{example, Matrix, Tolerances};

use crate::config::{read_gain, GainFile, Problem};
use crate::error::{CliError, CliResult, EXIT_INFEASIBLE, EXIT_OK};
use crate::output::{self, CertificateFile};

/// Designs the gain the problem asks for.
fn design(problem: &Problem, tol: &Tolerances) -> CliResult<GainDesign> {
    let budget = SynthesisBudget::new(problem.gamma)?;
    if problem.method == Method::SingleSystem {
        return Ok(design_gain_single(&problem.dynamics, &problem.weights, &problem.x0, budget, problem.epsilon, tol)?);
    }
    let inputs = problem
        .spectral_inputs()
        .ok_or_else(|| CliError::validation(format!("method `{}` needs spectral data", problem.method)))?;
    Ok(design_gain(&problem.dynamics, &problem.weights, problem.method, inputs, problem.c, problem.epsilon, tol)?)
}

/// Gain source, in order of precedence: `--gain` file, the config's
/// `[gain]` table, a fresh design. Returns `K` and, when known, `P`.
fn resolve_gain(problem: &Problem, gain: Option<&Path>, tol: &Tolerances) -> CliResult<(Matrix, Option<Matrix>)> {
    if let Some(path) = gain {
        let d = read_gain(path, &problem.dynamics)?;
        return Ok((d.k, Some(d.p)));
    }
    if let Some(k) = &problem.gain {
        return Ok((k.clone(), None));
    }
    let d = design(problem, tol)?;
    Ok((d.k, Some(d.p)))
}

fn network_spectrum(problem: &Problem) -> CliResult<&LaplacianSpectrum> {
    problem
        .spectrum
        .as_ref()
        .ok_or_else(|| CliError::validation("this command needs a `graph` section"))
}

pub fn synthesize(problem: &Problem, out: Option<&Path>, tol: &Tolerances) -> CliResult<u8> {
    println!("method: {}", problem.method);
    if let Some(inputs) = problem.spectral_inputs() {
        println!("spectral inputs: lower = {}, upper = {}", inputs.lower, inputs.upper);
        println!("c interval: {}", c_interval(problem.method, inputs.lower, inputs.upper)?);
    }
    let d = design(problem, tol)?;
    println!("c = {}", d.c);
    println!("epsilon = {}", d.epsilon);
    println!("P = {}", output::matrix(&d.p, 10));
    println!("K = {}", output::matrix(&d.k, 10));

    let admissible = if problem.method == Method::SingleSystem {
        // `design_gain_single` only returns admissible designs.
        let value = problem.x0.dot(&(&d.p * &problem.x0));
        println!("x0' P x0 = {value} < gamma = {}: admissible", problem.gamma);
        true
    } else {
        let a = admissibility(&d.p, &problem.x0, SynthesisBudget::new(problem.gamma)?)?;
        println!(
            "bound x0'(Pi (x) P)x0 = {} vs gamma = {}: {}",
            a.bound_value,
            problem.gamma,
            if a.admissible { "admissible" } else { "not admissible" }
        );
        a.admissible
    };

    if let Some(path) = out {
        let text = toml::to_string(&GainFile::from_design(&d))
            .map_err(|e| CliError::validation(format!("cannot serialize gain: {e}")))?;
        output::write_text(path, &text)?;
        println!("gain written to {}", path.display());
    }
    Ok(if admissible { EXIT_OK } else { EXIT_INFEASIBLE })
}

fn print_cost_table(cert: &CostCertificate) {
    println!("{:>6} {:>22} {:>22} {:>22}", "mode", "lambda", "J_i", "hurwitz margin");
    for m in &cert.per_mode {
        println!("{:>6} {:>22.15e} {:>22.15e} {:>22.15e}", m.index, m.lambda, m.j, m.hurwitz_margin);
    }
    println!("J = {}", cert.j);
    println!("gamma - J = {}", cert.margin);
    if let Some(b) = cert.bound_value {
        println!("bound x0'(Pi (x) P)x0 = {b}; J <= bound: {}", cert.chain_holds() == Some(true));
    }
}

pub fn analyze(problem: &Problem, gain: Option<&Path>, out: Option<&Path>, tol: &Tolerances) -> CliResult<u8> {
    let (k, p) = resolve_gain(problem, gain, tol)?;
    let file = if problem.method == Method::SingleSystem {
        let dynamics = &problem.dynamics;
        let abar = &dynamics.a + &dynamics.b * &k;
        let qbar = &problem.weights.q + k.transpose() * &problem.weights.r * &k;
        let cert = certify_gamma(&abar, &qbar, &problem.x0, problem.gamma, tol)?;
        println!("J = {}", cert.j);
        println!("gamma - J = {}", problem.gamma - cert.j);
        if let Some(eps) = cert.witness_epsilon {
            println!("witness found with epsilon = {eps}");
        }
        CertificateFile::single(&cert, problem.gamma)
    } else {
        let spec = network_spectrum(problem)?;
        let cert = evaluate_cost(
            &problem.dynamics,
            &problem.weights,
            spec,
            &k,
            &problem.x0,
            problem.gamma,
            p.as_ref(),
            tol,
        )?;
        print_cost_table(&cert);
        CertificateFile::network(&cert)
    };
    let certified = file.certified();
    println!("{}", if certified { "certified: J < gamma" } else { "not certified: J >= gamma" });
    if let Some(path) = out {
        output::write_text(path, &file.to_toml())?;
    }
    Ok(if certified { EXIT_OK } else { EXIT_INFEASIBLE })
}

pub fn simulate_cmd(problem: &Problem, gain: Option<&Path>, out: &Path, tol: &Tolerances) -> CliResult<u8> {
    let spec = network_spectrum(problem)?;
    let (k, _) = resolve_gain(problem, gain, tol)?;
    run_simulation(problem, spec, &k, out)?;
    Ok(EXIT_OK)
}

fn run_simulation(problem: &Problem, spec: &LaplacianSpectrum, k: &Matrix, out: &Path) -> CliResult<f64> {
    let traj = simulate(&problem.dynamics, &spec.laplacian, k, &problem.x0, problem.horizon, problem.dt)?;
    let consensus = consensus_error(&traj);
    output::write_trajectory_csv(out, &traj, &consensus)?;
    let cost = quadrature_cost(&traj, &problem.weights, &spec.laplacian, k);
    let terminal = consensus.last().copied().unwrap_or(0.0);
    println!(
        "{}: {} steps, quadrature cost {}, tail estimate {:e}, terminal consensus error {terminal:e}",
        out.display(),
        traj.times.len() - 1,
        cost.value,
        cost.tail_estimate
    );
    Ok(terminal)
}

/// The built-in eight-oscillator example end to end.
pub fn demo(out_dir: &Path, dt: Option<f64>, horizon: Option<f64>, tol: &Tolerances) -> CliResult<u8> {
    let spec = spectrum(&example::graph()?, tol)?;
    let problem = Problem {
        dynamics: example::dynamics(tol)?,
        weights: example::weights(tol)?,
        method: Method::ExactSpectrumUpper,
        gamma: example::GAMMA,
        c: Some(example::C),
        epsilon: example::EPSILON,
        spectrum: Some(spec.clone()),
        bounds: None,
        x0: example::initial_state(),
        dt: dt.unwrap_or(DEFAULT_DT),
        horizon: horizon.unwrap_or(DEFAULT_HORIZON),
        gain: None,
    };
    println!("path graph with {} agents", example::AGENTS);
    println!("lambda_2 = {}", spec.lambda2);
    println!("lambda_{} = {}", example::AGENTS, spec.lambda_n);
    synthesize(&problem, None, tol)?;

    let d = design(&problem, tol)?;
    let cert = evaluate_cost(
        &problem.dynamics,
        &problem.weights,
        &spec,
        &d.k,
        &problem.x0,
        problem.gamma,
        Some(&d.p),
        tol,
    )?;
    print_cost_table(&cert);

    std::fs::create_dir_all(out_dir)
        .map_err(|e| CliError::validation(format!("{}: cannot create directory: {e}", out_dir.display())))?;
    let controlled = run_simulation(&problem, &spec, &d.k, &out_dir.join("demo_controlled.csv"))?;
    let free = run_simulation(&problem, &spec, &Matrix::zeros(1, 2), &out_dir.join("demo_uncontrolled.csv"))?;
    println!("terminal consensus error: controlled {controlled:e}, uncontrolled {free:e}");
    Ok(if cert.certified() { EXIT_OK } else { EXIT_INFEASIBLE })
}
