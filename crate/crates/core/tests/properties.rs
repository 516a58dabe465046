use ndarray::Array2;
use num_complex::Complex64 as C64;
use proptest::prelude::*;

use qdshe::engine::{inverse_spin_temperature, run_stage, CycleLedger, ModelParams, RunOptions, StageConfig};
use qdshe::hyperfine::{
    apply_pulse, collective_ket, evolve_collective, expand_collective, f_vector, fidelity, g_vector, gamma_tilde, norm,
    raise_collective, lower_collective, CollectiveNuclearState, CouplingProfile, FullSpace, PulseSpec, Segment, Spin,
    Term, brute_force_oracle,
};
use qdshe::liouvillian::{unvec, vec_of, Superoperator};
use qdshe::propagator::{diagonalize, integrate_direct, propagate, truncation_error_estimate, DirectOptions, KeepPolicy};
use qdshe::quantum_core::{embed, expectation, fock_operators, thermal_state, DensityMatrix, Operator};
use qdshe::spectral::{
    coupling_d1_squared, coupling_d1_squared_quadrature, effective_omega1_squared, effective_omega1_squared_quadrature,
    thermal_energy, SpectralParams,
};
use qdshe::units::HBAR_MEV_PS;

fn cfg(cases: u32) -> ProptestConfig {
    ProptestConfig::with_cases(cases)
}

fn complex_matrix(n: usize) -> impl Strategy<Value = Array2<C64>> {
    prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
        .prop_map(move |v| Array2::from_shape_fn((n, n), |(i, j)| C64::new(v[i * n + j].0, v[i * n + j].1)))
}

fn density(n: usize) -> impl Strategy<Value = DensityMatrix> {
    complex_matrix(n).prop_map(move |a| {
        let m = a.dot(&a.t().mapv(|z| z.conj())) + Array2::<C64>::eye(n) * C64::new(1e-3, 0.0);
        let tr: C64 = m.diag().sum();
        DensityMatrix::new(Operator::new(m / tr).unwrap()).unwrap()
    })
}

fn small_model() -> impl Strategy<Value = (ModelParams, StageConfig)> {
    (3usize..6, 10.0f64..200.0, 0.0f64..0.2, 0.3f64..1.5, 0.5f64..3.0).prop_map(|(n, t, g, rabi, de)| {
        let mut m = ModelParams::reference_defaults();
        m.n_levels = n;
        m.temperature = t;
        m.hbar_gamma_ph = g;
        (m, StageConfig::heat_extraction(rabi, de, 4.0))
    })
}

fn superop(m: &ModelParams, s: &StageConfig) -> Superoperator {
    m.superoperator(s, &m.operators().unwrap()).unwrap()
}

fn max_abs(a: &Array2<C64>, b: &Array2<C64>) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

proptest! {
    #![proptest_config(cfg(32))]

    #[test]
    fn canonical_commutator_off_the_corner(n in 2usize..20, w in 0.5f64..10.0) {
        let f = fock_operators(n, w).unwrap();
        let c = f.q1.commutator(&f.p1);
        for i in 0..n {
            for j in 0..n {
                let expect = if i == j && i + 1 < n { C64::new(0.0, HBAR_MEV_PS) } else { C64::new(0.0, 0.0) };
                if !(i == n - 1 && j == n - 1) {
                    prop_assert!((c.matrix()[[i, j]] - expect).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn thermal_state_is_diagonal(n in 1usize..25, w in 0.5f64..10.0, t in 0.0f64..400.0) {
        let rho = thermal_state(w, t, n).unwrap();
        let f = fock_operators(n.max(2), w).unwrap();
        if n >= 2 {
            let c = rho.operator().commutator(&f.number);
            prop_assert!(c.matrix().iter().all(|z| z.norm() < 1e-14));
        }
        prop_assert!((rho.trace().re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn embed_commutes_with_dagger(a in complex_matrix(3), b in complex_matrix(4)) {
        let a = Operator::new(a).unwrap();
        let b = Operator::new(b).unwrap();
        let lhs = embed(&a, &b).unwrap().dagger();
        let rhs = embed(&a.dagger(), &b.dagger()).unwrap();
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-15);
    }

    #[test]
    fn number_operator_readings_agree(n in 3usize..16, w in 0.5f64..10.0, t in 1.0f64..300.0) {
        let f = fock_operators(n, w).unwrap();
        let alt = &f.bath_hamiltonian().scale_re(1.0 / (HBAR_MEV_PS * w)) - &Operator::identity(n).scale_re(0.5);
        // a state with no weight on the top level
        let full = thermal_state(w, t, n - 1).unwrap();
        let mut m = Array2::<C64>::zeros((n, n));
        m.slice_mut(ndarray::s![..n - 1, ..n - 1]).assign(full.matrix());
        let rho = DensityMatrix::new(Operator::new(m).unwrap()).unwrap();
        let a = expectation(&rho, &f.number).unwrap();
        let b = expectation(&rho, &alt).unwrap();
        prop_assert!((a - b).norm() < 1e-10);
    }

    #[test]
    fn spectral_moments_match_closed_forms(alpha in 0.1f64..10.0, wb in 0.5f64..5.0) {
        let p = SpectralParams::new(alpha, wb).unwrap();
        let q0 = coupling_d1_squared_quadrature(&p).value;
        let q2 = effective_omega1_squared_quadrature(&p).value;
        prop_assert!((q0 / coupling_d1_squared(&p) - 1.0).abs() < 1e-6);
        prop_assert!((q2 / effective_omega1_squared(&p) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn thermal_energy_increases(w in 0.5f64..10.0, t in 0.1f64..500.0, dt in 0.01f64..50.0) {
        prop_assert!(thermal_energy(t + dt, w).unwrap() > thermal_energy(t, w).unwrap());
        prop_assert_eq!(thermal_energy(0.0, w).unwrap(), 0.5 * HBAR_MEV_PS * w);
    }

    #[test]
    fn ledger_identities(de in 0.0f64..10.0, p in -1.0f64..1.0) {
        prop_assert!(CycleLedger::from_transfer(de, p).identities_hold());
    }

    #[test]
    fn spin_temperature_decreases_with_polarization(n in 2.0f64..1000.0, a in 0.01f64..0.9, b in 0.01f64..0.9) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        prop_assume!(hi - lo > 1e-6);
        let g_lo = inverse_spin_temperature(lo * n / 2.0, n).unwrap();
        let g_hi = inverse_spin_temperature(hi * n / 2.0, n).unwrap();
        prop_assert!(g_hi.abs() > g_lo.abs());
    }
}

proptest! {
    #![proptest_config(cfg(8))]

    #[test]
    fn superoperator_invariants((m, s) in small_model(), rho in density(3)) {
        let v = superop(&m, &s);
        prop_assert!(v.trace_residual() <= 1e-10);
        let ep = diagonalize(&v, KeepPolicy::All).unwrap();
        let max_re = ep.eigenvalues().iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(max_re <= 1e-8, "{}", max_re);
        prop_assert!(ep.biorthonormality_residual() <= 1e-8);

        let bath = thermal_state(m.omega1, m.temperature, m.n_levels).unwrap();
        let full = DensityMatrix::product(&rho, &bath).unwrap();
        let out = unvec(&v.apply_vec(&vec_of(full.operator()))).unwrap();
        prop_assert!(out.hermiticity_defect() <= 1e-10);
    }

    #[test]
    fn propagator_completeness_and_truncation_bound((m, s) in small_model()) {
        let v = superop(&m, &s);
        let rho0 = m.initial_state().unwrap();
        let ep = diagonalize(&v, KeepPolicy::All).unwrap();
        prop_assume!(!ep.is_defective());
        let back = propagate(&rho0, &ep, 0.0).unwrap();
        prop_assert!(max_abs(back.matrix(), rho0.matrix()) <= 1e-8);

        let t_end = 4.0;
        let direct = integrate_direct(&rho0, &v, t_end, &DirectOptions { tol: 1e-11, output_step: 1.0, ..Default::default() }).unwrap();
        let windows = [5.0, 10.0, 20.0, 30.0].map(|factor| KeepPolicy::StageWindow { t_stage: t_end, factor });
        let mut last_bound = f64::INFINITY;
        let mut err = f64::INFINITY;
        for policy in windows.into_iter().chain([KeepPolicy::All]) {
            let ek = ep.with_policy(policy);
            err = direct
                .times
                .iter()
                .zip(&direct.states)
                .skip(1)
                .map(|(t, rd)| max_abs(propagate(&rho0, &ek, *t).unwrap().matrix(), rd.matrix()))
                .fold(0.0, f64::max);
            let bound = truncation_error_estimate(&ek, &rho0, (1.0, t_end)).unwrap();
            prop_assert!(err <= bound + 1e-7, "kept {} err {} bound {}", ek.kept_count(), err, bound);
            prop_assert!(bound <= last_bound * (1.0 + 1e-12), "kept {} bound {} previous {}", ek.kept_count(), bound, last_bound);
            last_bound = bound;
        }
        prop_assert!(err <= 1e-6);
    }

    #[test]
    fn stationary_state_is_invariant((m, s) in small_model()) {
        let v = superop(&m, &s);
        let ep = diagonalize(&v, KeepPolicy::All).unwrap();
        let st = ep.stationary_state().unwrap();
        let tr = integrate_direct(&st, &v, 50.0, &DirectOptions { tol: 1e-10, output_step: 50.0, ..Default::default() }).unwrap();
        prop_assert!(max_abs(tr.states.last().unwrap().matrix(), st.matrix()) <= 1e-6);
    }

    #[test]
    fn populations_are_conserved((m, s) in small_model()) {
        let run = run_stage(&m.initial_state().unwrap(), &s, &m, &RunOptions::default()).unwrap();
        prop_assert!(run.trajectory.population_defect() <= 1e-8);
    }
}

// hyperfine

fn history(n: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..3000.0, n)
}

fn random_profile(n: usize, phi_tau_sigma: f64) -> impl Strategy<Value = (CouplingProfile, PulseSpec)> {
    (prop::collection::vec((0.2f64..1.0, -10.0f64..10.0), n), -0.05f64..0.05).prop_map(move |(v, c)| {
        let pulse = PulseSpec::with_phase_spread(phi_tau_sigma, 5.0, 1.0, 5.0, c);
        let positions = v.iter().map(|(_, x)| [*x, 0.0, 0.0]).collect();
        let couplings = v.iter().map(|(a, _)| a * 1e-5).collect();
        (CouplingProfile::from_parts(positions, couplings, 5.0).unwrap().with_pulse(&pulse), pulse)
    })
}

fn spin() -> impl Strategy<Value = Spin> {
    prop_oneof![Just(Spin::Up), Just(Spin::Down)]
}

proptest! {
    #![proptest_config(cfg(24))]

    #[test]
    fn exchange_bookkeeping_preserves_weight(
        (p, _) in random_profile(6, 8.0),
        s in spin(),
        t in (0usize..4).prop_flat_map(history),
        time in 0.0f64..1e5,
        phase in 0.0f64..6.3,
    ) {
        let st = CollectiveNuclearState::from_terms(vec![Term::new(s, t, C64::from_polar(1.0, phase))]);
        let out = evolve_collective(&st, &p, time);
        prop_assert!((out.amplitude_norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn up_terms_are_fixed_points((p, _) in random_profile(5, 8.0), t in (0usize..4).prop_flat_map(history), time in 0.0f64..1e5) {
        let st = CollectiveNuclearState::from_terms(vec![Term::new(Spin::Up, t, C64::new(0.6, 0.8))]);
        prop_assert_eq!(evolve_collective(&st, &p, time), st);
    }

    #[test]
    fn index_vectors(t in (1usize..6).prop_flat_map(history), m_frac in 0.0f64..1.0) {
        let n = t.len();
        let m = 1 + ((m_frac * n as f64) as usize).min(n - 1);
        let f = f_vector(&t, m);
        let g = g_vector(&t, m);
        prop_assert_eq!(f.len(), n - 1);
        prop_assert_eq!(g.len(), n);
        prop_assert_eq!(*g.last().unwrap(), 0.0);
        // the partial sums of f are those of t with T_m removed (T_1 too when m = 1)
        let partial = |v: &[f64]| (0..v.len()).map(|k| v[k..].iter().sum::<f64>()).collect::<Vec<_>>();
        let mut expect = partial(&t);
        expect.remove(m - 1);
        for (a, b) in partial(&f).iter().zip(&expect) {
            prop_assert!((a - b).abs() <= 1e-9 * (1.0 + b.abs()));
        }
    }

    #[test]
    fn gamma_tilde_modulus_ignores_offset((p, pulse) in random_profile(7, 4.0), c in -1.0f64..1.0, tau in 0.0f64..3000.0) {
        let q = p.clone().with_pulse(&PulseSpec { offset: c, ..pulse });
        let a = gamma_tilde(&p, tau).unwrap();
        let b = gamma_tilde(&q, tau).unwrap();
        prop_assert!((a.discrete.norm() - b.discrete.norm()).abs() <= 1e-12 * a.gamma);
    }
}

proptest! {
    #![proptest_config(cfg(12))]

    #[test]
    fn oracle_is_unitary(
        (p, _) in random_profile(7, 8.0),
        segs in prop::collection::vec((any::<bool>(), 0.0f64..2e4), 1..6),
        s in spin(),
        t in (0usize..3).prop_flat_map(history),
    ) {
        let space = FullSpace::new(&p).unwrap();
        let psi = expand_collective(&space, s, &t).unwrap();
        let n0 = norm(&psi);
        let schedule: Vec<Segment> = segs.iter().map(|(e, x)| if *e { Segment::Exchange(*x) } else { Segment::Pulse(*x) }).collect();
        let out = brute_force_oracle(&space, &schedule, &psi).unwrap();
        prop_assert!((norm(&out) - n0).abs() <= 1e-12);
    }

    #[test]
    fn erasure_step_tracks_the_oracle(
        n in prop_oneof![Just(4usize), Just(6), Just(8)].prop_flat_map(|n| (Just(n), random_profile(n, 8.0))),
        n_exc in 0usize..3,
        extra in prop::collection::vec(0.0f64..2000.0, 2),
        alpha in 0.0f64..1.0,
    ) {
        let (n, (p, pulse)) = n;
        let tau = pulse.tau_ps();
        // histories of kets produced by earlier cycles: every entry includes at least one pulse
        let t: Vec<f64> = (0..n_exc).map(|k| tau + extra[k]).collect();
        let st = CollectiveNuclearState::from_terms(vec![
            Term::new(Spin::Up, t.clone(), C64::new(alpha.sqrt(), 0.0)),
            Term::new(Spin::Down, t.clone(), C64::new(0.0, (1.0 - alpha).sqrt())),
        ]);
        let space = FullSpace::new(&p).unwrap();
        let collective = apply_pulse(&evolve_collective(&st, &p, p.flip_time()), &p, tau).unwrap();
        let exact = brute_force_oracle(
            &space,
            &[Segment::Exchange(p.flip_time()), Segment::Pulse(tau)],
            &collective_ket(&space, &st).unwrap(),
        ).unwrap();
        let f = fidelity(&collective_ket(&space, &collective).unwrap(), &exact);
        let r = gamma_tilde(&p, tau).unwrap().ratio();
        let bound = 1.0 - 5.0 * (r + n_exc as f64 / n as f64);
        prop_assert!(f >= bound - 1e-12, "fidelity {} bound {} (r {})", f, bound, r);
    }

    #[test]
    fn lowering_is_exact(
        (p, _) in random_profile(8, 8.0),
        t in (0usize..4).prop_flat_map(history),
        s in spin(),
    ) {
        let space = FullSpace::new(&p).unwrap();
        let st = CollectiveNuclearState::from_terms(vec![Term::new(s, t, C64::new(1.0, 0.0))]);
        let lhs = space.collective_lower(&collective_ket(&space, &st).unwrap());
        let rhs = collective_ket(&space, &lower_collective(&st)).unwrap();
        prop_assert!(norm(&(&lhs - &rhs)) <= 1e-13);
    }

    #[test]
    fn raising_within_its_error_order(
        (p, _) in random_profile(8, 8.0),
        t in (1usize..4).prop_flat_map(history),
    ) {
        let space = FullSpace::new(&p).unwrap();
        let st = CollectiveNuclearState::from_terms(vec![Term::new(Spin::Up, t.clone(), C64::new(1.0, 0.0))]);
        let exact = space.collective_raise(&collective_ket(&space, &st).unwrap());
        let approx = collective_ket(&space, &raise_collective(&st, &p).unwrap()).unwrap();
        let a_max = p.couplings.iter().cloned().fold(0.0, f64::max);
        let n = t.len();
        let bound: f64 = (1..=n)
            .map(|m| (n - 1) as f64 * a_max * a_max / p.gamma() * norm(&expand_collective(&space, Spin::Up, &f_vector(&t, m)).unwrap()))
            .sum();
        prop_assert!(norm(&(&exact - &approx)) <= bound + 1e-13);
        if n == 1 {
            prop_assert!(norm(&(&exact - &approx)) <= 1e-14);
        }
    }
}
