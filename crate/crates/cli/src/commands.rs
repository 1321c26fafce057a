use cgnet::noise::{self, JitterMode, JitterScale};
use cgnet::pauli::{diagonalize, trotter2_schedule};
use cgnet::rodeo::{self, Construction, Evolution, PassSpec, RodeoSystem, RunMode, ScanSettings};
use cgnet::transpile::{self, count_gates, predict_chain_counts, ChainMethod};
use cgnet::varsub::{self, Axis, Estimation};
use cgnet::{Circuit, NativeGateSet, PauliHamiltonian, StateVector};
use serde::Serialize;

use crate::config::{CircuitSettings, Settings};
use crate::error::CliError;
use crate::output::Out;

fn hamiltonian(text: &str) -> Result<PauliHamiltonian, CliError> {
    text.parse().map_err(|e| CliError::Config(format!("hamiltonian: {e}")))
}

fn state(spec: &str) -> Result<StateVector, CliError> {
    StateVector::product(spec).map_err(|e| CliError::Config(format!("state {spec:?}: {e}")))
}

fn system(s: &Settings) -> Result<RodeoSystem, CliError> {
    let sys = &s.system;
    Ok(RodeoSystem::new(hamiltonian(&sys.hamiltonian)?, state(&sys.state)?, sys.construction, sys.evolution)?)
}

pub fn diagonalize_cmd(s: &Settings, out: &Out) -> Result<(), CliError> {
    let h = hamiltonian(&s.system.hamiltonian)?;
    let spec = diagonalize(&h, &state(&s.system.state)?)?;
    println!("{:>14} {:>12} {:>4}", "energy", "overlap", "deg");
    for l in &spec.levels {
        println!("{:>14.10} {:>12.8} {:>4}", l.energy, l.overlap, l.degeneracy);
    }
    #[derive(Serialize)]
    struct Report<'a> {
        eigenvalues: &'a [f64],
        overlaps: &'a [f64],
        levels: &'a [cgnet::pauli::Level],
    }
    out.json("levels.json", &Report { eigenvalues: &spec.eigenvalues, overlaps: &spec.overlaps, levels: &spec.levels })
}

pub fn scan_cmd(s: &Settings, out: &Out) -> Result<(), CliError> {
    let sys = system(s)?;
    let res = rodeo::run_protocol(&sys, &s.protocol_config())?;
    out.scan("pass1.csv", &res.pass1)?;
    for (i, w) in res.pass2.iter().enumerate() {
        out.scan(&format!("pass2_{i}.csv"), w)?;
    }
    for (i, w) in res.pass3.iter().enumerate() {
        out.scan(&format!("pass3_{i}.csv"), w)?;
    }
    out.json("peaks.json", &res.peaks)?;
    #[derive(Serialize)]
    struct Summary<'a> {
        candidates: &'a [rodeo::Candidate],
        locations: &'a [rodeo::Location],
        failures: &'a [String],
    }
    out.json("summary.json", &Summary { candidates: &res.candidates, locations: &res.locations, failures: &res.failures })?;
    for f in &res.failures {
        eprintln!("warning: {f}");
    }
    if res.peaks.is_empty() {
        return Err(if res.failures.is_empty() {
            CliError::NoPeaks
        } else {
            CliError::Numerical(format!("every peak fit failed: {}", res.failures.join("; ")))
        });
    }
    println!("{:>10} {:>9} {:>9} {:>8} {:>8}", "center", "err", "width", "height", "chi2_red");
    for p in &res.peaks {
        println!("{:>10.5} {:>9.5} {:>9.5} {:>8.4} {:>8.2}", p.center, p.center_err, p.width, p.height, p.chi2_red);
    }
    Ok(())
}

/// A circuit for `count`/`transpile` plus the chain parameters when it is one.
struct Source {
    circuit: Circuit,
    name: String,
    chain: Option<(usize, f64, f64)>,
}

fn parse_chain(name: &str, c: &CircuitSettings) -> Result<Option<(usize, f64, f64)>, CliError> {
    if name == "chain" {
        return Ok(Some((c.chain_n, c.chain_sigma, c.chain_dt)));
    }
    let Some(args) = name.strip_prefix("chain(").and_then(|r| r.strip_suffix(')')) else {
        return Ok(None);
    };
    let bad = || CliError::Config(format!("expected chain(N, sigma, dt), got {name:?}"));
    let parts: Vec<&str> = args.split(',').map(str::trim).collect();
    let [n, sigma, dt] = parts[..] else { return Err(bad()) };
    Ok(Some((n.parse().map_err(|_| bad())?, sigma.parse().map_err(|_| bad())?, dt.parse().map_err(|_| bad())?)))
}

fn chain_system(n: usize, dt: f64, construction: Construction) -> Result<RodeoSystem, CliError> {
    Ok(RodeoSystem::new(PauliHamiltonian::chain(n, 1.0, 1.0)?, StateVector::zero(n)?, construction, Evolution::Trotter { dt })?)
}

/// One chain cycle whose evolution segments last `sigma` in total per branch.
fn chain_cycle(n: usize, sigma: f64, dt: f64, construction: Construction, energy: f64) -> Result<Circuit, CliError> {
    let t = match construction {
        Construction::Reversal => 2.0 * sigma,
        Construction::Controlled => sigma,
    };
    Ok(chain_system(n, dt, construction)?.build_cycle_circuit(energy, t)?)
}

fn source(s: &Settings) -> Result<Source, CliError> {
    let c = &s.circuit;
    if let Some(text) = &c.text {
        let circuit = text.parse().map_err(|e| CliError::Config(format!("circuit: {e}")))?;
        return Ok(Source { circuit, name: "file".into(), chain: None });
    }
    let name = c.builtin.trim();
    if let Some((n, sigma, dt)) = parse_chain(name, c)? {
        let circuit = chain_cycle(n, sigma, dt, Construction::Reversal, c.energy)?;
        return Ok(Source { circuit, name: format!("chain({n}, {sigma}, {dt})"), chain: Some((n, sigma, dt)) });
    }
    let pair = || -> Result<_, CliError> {
        match &s.varsub.params[..] {
            [p, q, ..] => Ok((*p, *q)),
            _ => Err(CliError::Config("the overlap circuits need two varsub.params entries".into())),
        }
    };
    let circuit = match name {
        "fig2_network" => {
            let (p, q) = pair()?;
            varsub::build_network_circuit(&p, &q, Axis::Y, None)?
        }
        "fig4_hadamard" => {
            let (p, q) = pair()?;
            varsub::build_hadamard_test_circuit(&p, &q, Axis::Y, None)?
        }
        "rodeo_cycle_reversal" => rodeo::rodeo_cycle_reversal(c.energy, c.time)?,
        "rodeo_cycle_naive" => rodeo::rodeo_cycle_naive(c.energy, c.time)?,
        other => {
            return Err(CliError::Config(format!(
                "unknown circuit {other:?} (fig2_network, fig4_hadamard, rodeo_cycle_reversal, rodeo_cycle_naive, chain(N, sigma, dt))"
            )))
        }
    };
    Ok(Source { circuit, name: name.into(), chain: None })
}

fn basis(s: &Settings) -> Result<NativeGateSet, CliError> {
    Ok(s.circuit.basis.parse()?)
}

fn count_report(s: &Settings, src: &Source, basis: NativeGateSet) -> Result<String, CliError> {
    let count = count_gates(&transpile::transpile(&src.circuit, basis)?)?;
    let mut lines = vec![
        format!("basis: {basis}"),
        format!("two_qubit: {}", count.two_qubit),
        format!("one_qubit: {}", count.one_qubit),
        format!("source: {}", src.name),
    ];
    if let Some((n, sigma, dt)) = src.chain {
        let naive = count_gates(&transpile::transpile(&chain_cycle(n, sigma, dt, Construction::Controlled, s.circuit.energy)?, basis)?)?;
        let h = PauliHamiltonian::chain(n, 1.0, 1.0)?;
        lines.push(format!("exponentials: {}", trotter2_schedule(&h, sigma, dt)?.len()));
        lines.push(format!("naive_two_qubit: {}", naive.two_qubit));
        lines.push(format!("naive_one_qubit: {}", naive.one_qubit));
        lines.push(format!("predicted_reversal: {}", predict_chain_counts(n, sigma, dt, ChainMethod::Reversal)?));
        lines.push(format!("predicted_naive: {}", predict_chain_counts(n, sigma, dt, ChainMethod::NaiveControlled)?));
    }
    Ok(lines.join("\n") + "\n")
}

pub fn count_cmd(s: &Settings, out: &Out) -> Result<(), CliError> {
    let src = source(s)?;
    let report = count_report(s, &src, basis(s)?)?;
    print!("{report}");
    out.text("count.txt", &report)
}

pub fn transpile_cmd(s: &Settings, out: &Out) -> Result<(), CliError> {
    let src = source(s)?;
    let b = basis(s)?;
    let native = transpile::transpile(&src.circuit, b)?;
    let text = native.to_text();
    print!("{text}");
    out.text("source.txt", &src.circuit.to_text())?;
    out.text("transpiled.txt", &text)?;
    out.text("count.txt", &count_report(s, &src, b)?)
}

pub fn varsub_cmd(s: &Settings, out: &Out) -> Result<(), CliError> {
    let v = &s.varsub;
    let h = hamiltonian(&v.hamiltonian)?;
    let est = match s.mode {
        RunMode::Exact => Estimation::Exact,
        RunMode::Sampled => Estimation::Sampled { shots: v.shots },
    };
    let m = varsub::build_subspace(&v.params, &h, &state(&v.state)?, v.method, est, s.seed)?;
    out.json("subspace.json", &m)?;
    let sol = varsub::solve_generalized_eig(&m.s_matrix(), &m.h_matrix(), v.overlap_threshold)?;
    out.json("eigen.json", &sol)?;
    let fmt = |rows: &Vec<Vec<cgnet::Complex64>>| {
        rows.iter()
            .map(|r| r.iter().map(|z| format!("{:>10.6}{:+.6}i", z.re, z.im)).collect::<Vec<_>>().join("  "))
            .collect::<Vec<_>>()
            .join("\n")
    };
    println!("method: {}\nS =\n{}\nH =\n{}", v.method, fmt(&m.s), fmt(&m.h));
    println!("rank: {}", sol.rank);
    let e: Vec<String> = sol.energies.iter().map(|x| format!("{x:.8}")).collect();
    println!("energies: {}", e.join(" "));
    Ok(())
}

#[derive(Serialize)]
struct JitterRow {
    sigma: f64,
    epsilon: f64,
    mode: JitterMode,
    energy: f64,
    p_clean: f64,
    p_jitter: f64,
    suppression: f64,
}

#[derive(Serialize)]
struct DepolarizingRow {
    sigma: f64,
    energy: f64,
    p_clean: f64,
    p_noisy: f64,
    reduction: f64,
}

pub fn noise_sweep_cmd(s: &Settings, out: &Out) -> Result<(), CliError> {
    let sys = system(s)?;
    let levels = diagonalize(sys.hamiltonian(), sys.initial_state())?.levels;
    let n = s.cycles;
    let modes = match s.jitter_mode {
        Some(m) => vec![m],
        None => vec![JitterMode::PerCycle, JitterMode::PerShot],
    };
    let mut rows = Vec::new();
    for &sigma in &s.sweep.sigmas {
        for &eps in &s.jitter_eps {
            let scale = JitterScale::Shared(eps);
            for &mode in &modes {
                for l in &levels {
                    let p_jitter = match mode {
                        JitterMode::PerCycle => noise::noisy_pn_per_cycle(l.energy, &levels, sigma, n, &scale)?,
                        JitterMode::PerShot => noise::noisy_pn_per_shot(l.energy, &levels, sigma, n, &scale)?,
                    };
                    rows.push(JitterRow {
                        sigma,
                        epsilon: eps,
                        mode,
                        energy: l.energy,
                        p_clean: rodeo::analytic_pn(l.energy, &levels, sigma, n),
                        p_jitter,
                        suppression: noise::peak_suppression(n, sigma, eps, mode),
                    });
                }
            }
        }
    }
    println!("{:>6} {:>7} {:>9} {:>10} {:>8} {:>8} {:>11}", "sigma", "eps", "mode", "energy", "p_clean", "p_jit", "suppression");
    for r in &rows {
        let mode = match r.mode {
            JitterMode::PerCycle => "per-cycle",
            JitterMode::PerShot => "per-shot",
        };
        println!(
            "{:>6} {:>7} {:>9} {:>10.5} {:>8.5} {:>8.5} {:>11.6}",
            r.sigma, r.epsilon, mode, r.energy, r.p_clean, r.p_jitter, r.suppression
        );
    }
    out.csv("jitter.csv", &rows)?;
    if s.noise_p2q > 0.0 {
        let energies: Vec<f64> = levels.iter().map(|l| l.energy).collect();
        let mut dep = Vec::new();
        for (i, &sigma) in s.sweep.sigmas.iter().enumerate() {
            let pass = PassSpec { sigma, ..s.protocol.passes[0] };
            let clean = ScanSettings { n_cycles: n, mode: s.mode, p2q: 0.0, seed: s.seed };
            let noisy = ScanSettings { p2q: s.noise_p2q, ..clean };
            let a = rodeo::run_scan(&sys, &energies, &pass, &clean, [1, i as u64])?;
            let b = rodeo::run_scan(&sys, &energies, &pass, &noisy, [1, i as u64])?;
            for (x, y) in a.points.iter().zip(&b.points) {
                dep.push(DepolarizingRow {
                    sigma,
                    energy: x.energy,
                    p_clean: x.p_hat,
                    p_noisy: y.p_hat,
                    reduction: if x.p_hat > 0.0 { 1.0 - y.p_hat / x.p_hat } else { 0.0 },
                });
            }
        }
        println!("\ndepolarizing p2q = {}", s.noise_p2q);
        println!("{:>6} {:>10} {:>8} {:>8} {:>9}", "sigma", "energy", "p_clean", "p_noisy", "reduction");
        for r in &dep {
            println!("{:>6} {:>10.5} {:>8.5} {:>8.5} {:>8.2}%", r.sigma, r.energy, r.p_clean, r.p_noisy, 100.0 * r.reduction);
        }
        out.csv("depolarizing.csv", &dep)?;
    }
    Ok(())
}
