use cgnet::pauli::diagonalize;
use cgnet::rodeo::{self, h_obj_system, run_scan, Construction, PassSpec, RunMode, ScanSettings};
use cgnet::varsub::{self, AnsatzParams, Estimation, OverlapMethod};
use cgnet::{PauliHamiltonian, StateVector};

fn settings(mode: RunMode, p2q: f64, seed: u64) -> ScanSettings {
    ScanSettings { n_cycles: 3, mode, p2q, seed }
}

#[test]
fn hamiltonian_text_round_trips() {
    let h: PauliHamiltonian = "2.5 XZ\n1.5 ZX # second\n\n-0.25 YY\n".parse().unwrap();
    let back: PauliHamiltonian = h.to_text().parse().unwrap();
    assert_eq!(h, back);
    assert!("1.0 XZ\n2.0 XYZ\n".parse::<PauliHamiltonian>().is_err());
}

#[test]
fn h_obj_spectrum() {
    let sys = h_obj_system(Construction::Reversal).unwrap();
    let spec = diagonalize(sys.hamiltonian(), sys.initial_state()).unwrap();
    let e: Vec<f64> = spec.levels.iter().map(|l| l.energy).collect();
    for (a, b) in e.iter().zip([-4.0, -1.0, 1.0, 4.0]) {
        assert!((a - b).abs() < 1e-12);
    }
    let total: f64 = spec.levels.iter().map(|l| l.overlap).sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn scans_are_deterministic_and_noise_free_at_zero_p2q() {
    let sys = h_obj_system(Construction::Reversal).unwrap();
    let grid: Vec<f64> = (0..9).map(|i| -4.5 + i as f64).collect();
    let pass = PassSpec { sigma: 4.0, n_circuits: 3, n_shots: 256 };
    let a = run_scan(&sys, &grid, &pass, &settings(RunMode::Sampled, 0.0, 11), [1, 0]).unwrap();
    let b = run_scan(&sys, &grid, &pass, &settings(RunMode::Sampled, 0.0, 11), [1, 0]).unwrap();
    assert_eq!(a, b);
    let other = run_scan(&sys, &grid, &pass, &settings(RunMode::Sampled, 0.0, 12), [1, 0]).unwrap();
    assert_ne!(a, other);
    // p2q is checked against a fault draw per two-qubit gate; zero never fires
    let z = run_scan(&sys, &grid, &pass, &settings(RunMode::Sampled, 1e-300, 11), [1, 0]).unwrap();
    assert_eq!(a, z);
}

#[test]
fn both_constructions_share_statistics() {
    let rev = h_obj_system(Construction::Reversal).unwrap();
    let ctl = h_obj_system(Construction::Controlled).unwrap();
    let ts = [0.3, -1.7, 2.2];
    for e in [-4.0, -2.5, 0.0, 1.0, 3.3] {
        let a = rev.run_exact(e, &ts).unwrap();
        let b = ctl.run_exact(e, &ts).unwrap();
        assert!((a - b).abs() < 1e-10, "E={e}: {a} vs {b}");
    }
}

#[test]
fn exact_scan_tracks_analytic_curve() {
    let sys = h_obj_system(Construction::Reversal).unwrap();
    let levels = diagonalize(sys.hamiltonian(), sys.initial_state()).unwrap().levels;
    let grid = [-4.0, -2.5, 1.0];
    let pass = PassSpec { sigma: 4.0, n_circuits: 4000, n_shots: 1 };
    let scan = run_scan(&sys, &grid, &pass, &settings(RunMode::Exact, 0.0, 5), [1, 0]).unwrap();
    for p in &scan.points {
        let want = rodeo::analytic_pn(p.energy, &levels, 4.0, 3);
        assert!((p.p_hat - want).abs() < 0.02, "E={}: {} vs {want}", p.energy, p.p_hat);
    }
}

#[test]
fn subspace_recovers_heisenberg_ground_state() {
    let h = PauliHamiltonian::heisenberg(1.0, 1.0, 1.0);
    let psi = StateVector::product("01").unwrap();
    let params = vec![AnsatzParams::new(0.0, 0.0, 0.0, 0.0), AnsatzParams::new(0.4, 0.4, 0.4, 0.0)];
    for method in [OverlapMethod::Network, OverlapMethod::HadamardTest] {
        let m = varsub::build_subspace(&params, &h, &psi, method, Estimation::Exact, 3).unwrap();
        let sol = varsub::solve_generalized_eig(&m.s_matrix(), &m.h_matrix(), varsub::DEFAULT_OVERLAP_THRESHOLD).unwrap();
        assert!((sol.energies[0] + 3.0).abs() < 1e-9, "{method}: {:?}", sol.energies);
    }
}
