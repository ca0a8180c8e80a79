use rustfft::num_complex::Complex64;

use super::*;
use crate::engine::{simulate_path, PathConfig};
use crate::operators::SaltCoefficients;
use crate::spaces::{Space, SpectralField, TripleWeights};

fn k(kx: i32, ky: i32) -> ModeIndex {
    ModeIndex::new(kx, ky).unwrap()
}

fn base(pair: OperatorPair, initial: InitialCondition) -> EnsembleConfig {
    let mut cfg = EnsembleConfig::new(pair, initial);
    cfg.paths = 2;
    cfg.levels = vec![2, 4];
    cfg.threshold = 1e12;
    cfg
}

/// `a²(1 + w_H(1 − e^{−2λT})/(2λ))` for a single decaying mode.
fn heat_uh(a: f64, kk: ModeIndex, nu: f64, t: f64) -> f64 {
    let lambda = nu * kk.norm_sq();
    let wh = TripleWeights::weight(Space::H, kk.kx, kk.ky);
    a * a * (1.0 + wh * (1.0 - (-2.0 * lambda * t).exp()) / (2.0 * lambda))
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn config_validation() {
    let mut cfg = base(OperatorPair::zero(), InitialCondition::Zero);
    assert!(cfg.validate().is_ok());
    cfg.paths = 1;
    assert!(cfg.validate().is_err());
    cfg.paths = 2;
    cfg.deltas = vec![0.0105];
    assert!(matches!(cfg.validate(), Err(Error::InvalidParameter(m)) if m.contains("multiple")));
    cfg.deltas = vec![0.5];
    assert!(cfg.validate().is_err());
    cfg.deltas = vec![0.01];
    cfg.thresholds = vec![4.0, 2.0];
    assert!(cfg.validate().is_err());
    cfg.thresholds = vec![0.5];
    assert!(cfg.validate().is_err());
}

#[test]
fn zero_pair_moment_is_deterministic() {
    let ic = InitialCondition::mode(1, 2, 0.7).unwrap();
    let r = moment_bound_study(&base(OperatorPair::zero(), ic)).unwrap();
    // a constant path: sup term plus T times the H energy
    let want = 0.49 + 0.5 * 0.49 * 6.0;
    for row in &r.rows {
        assert!(rel(row.estimate, want) < 1e-12, "{row:?}");
        assert_eq!(row.std_error, 0.0);
    }
    assert!(r.pass);
    let hv = hv_bound_study(&base(OperatorPair::zero(), InitialCondition::mode(1, 2, 0.7).unwrap())).unwrap();
    assert!(rel(hv.estimate, 0.49 * 6.0 + 0.5 * 0.49 * 36.0) < 1e-12);
}

#[test]
fn heat_moment_matches_mode_energy() {
    let nu = 0.1;
    let cfg = base(OperatorPair::heat(nu).unwrap(), InitialCondition::mode(1, 1, 1.3).unwrap());
    let r = moment_bound_study(&cfg).unwrap();
    let want = heat_uh(1.3, k(1, 1), nu, 0.5);
    assert!(rel(r.estimate, want) < 1e-3, "{} vs {want}", r.estimate);
    assert!(r.pass);
}

#[test]
fn hitting_extremes() {
    // decaying dynamics never reach an astronomically large level
    let mut cfg = base(OperatorPair::heat(0.1).unwrap(), InitialCondition::mode(1, 0, 1.0).unwrap());
    cfg.thresholds = vec![1e6, 1e9];
    let r = hitting_probability_study(&cfg).unwrap();
    assert!(r.rows.iter().all(|row| row.estimate == 0.0));
    assert!(r.pass);

    // constant path with ‖Ψ‖²_H = 5 crosses M + baseline at t = M/5
    let mut cfg = base(OperatorPair::zero(), InitialCondition::mode(2, 0, 1.0).unwrap());
    cfg.thresholds = vec![1.5, 2.0];
    let r = hitting_probability_study(&cfg).unwrap();
    assert!(r.rows.iter().all(|row| row.estimate == 1.0));
    assert!(!r.pass, "frequency 1 exceeds the ceiling");
    let pc = PathConfig::new(2, 1e-3, 0.5).unwrap().with_threshold(2.0).unwrap();
    let rec = simulate_path(&OperatorPair::zero(), &pc, &cfg.initial.sample(0), 0, &mut Workspace::new()).unwrap();
    assert!((rec.hit_time().unwrap() - 0.4).abs() <= 1.5e-3);
}

fn heat_increment(a: f64, lambda: f64, t: f64, delta: f64) -> f64 {
    a * a * (1.0 - (-lambda * delta).exp()).powi(2) * (1.0 - (-2.0 * lambda * (t - delta)).exp()) / (2.0 * lambda)
}

#[test]
fn increment_tightness_oracles() {
    let cfg = base(OperatorPair::zero(), InitialCondition::mode(1, 0, 1.0).unwrap());
    let r = increment_tightness_study(&cfg).unwrap();
    assert!(r.rows.iter().all(|row| row.estimate == 0.0));

    let nu = 0.4;
    let cfg = base(OperatorPair::heat(nu).unwrap(), InitialCondition::mode(1, 1, 2.0).unwrap());
    let r = increment_tightness_study(&cfg).unwrap();
    for row in &r.rows {
        let want = heat_increment(2.0, 2.0 * nu, 0.5, row.value);
        assert!(rel(row.estimate, want) < 1e-3, "{row:?} vs {want}");
    }
    assert!(r.pass);
}

#[test]
fn functional_tightness_oracles() {
    let mut cfg = base(OperatorPair::heat(0.3).unwrap(), InitialCondition::mode(1, 0, 1.5).unwrap());
    cfg.probe = k(3, 1);
    cfg.levels = vec![2];
    let r = functional_tightness_study(&cfg).unwrap();
    assert!(r.rows.iter().all(|row| row.estimate == 0.0));

    cfg.probe = k(1, 0);
    cfg.levels = vec![2, 4];
    let r = functional_tightness_study(&cfg).unwrap();
    let (lambda, gamma) = (0.3f64, 0.25);
    for row in &r.rows {
        let want = 1.5 * ((-lambda * gamma).exp() - (-lambda * (gamma + row.value)).exp());
        assert!(rel(row.estimate, want) < 1e-3, "{row:?} vs {want}");
    }
    assert!(r.pass);

    // stopped at the hit: the stopped process no longer moves
    let mut cfg = base(OperatorPair::zero(), InitialCondition::mode(2, 0, 1.0).unwrap());
    cfg.threshold = 1.5;
    cfg.stopping = StoppingRule::HitTime;
    let r = functional_tightness_study(&cfg).unwrap();
    assert!(r.rows.iter().all(|row| row.estimate == 0.0));
}

#[test]
fn equicontinuity_oracles() {
    let mut cfg = base(OperatorPair::heat(0.2).unwrap(), InitialCondition::mode(1, 0, 1.0).unwrap());
    cfg.stopping = StoppingRule::Fixed(0.7);
    let r = equicontinuity_study(&cfg).unwrap();
    assert!(r.rows.iter().all(|row| row.estimate == 0.0));

    // constant path: only the integral term moves, by ‖Ψ‖²_H·δ
    let mut cfg = base(OperatorPair::zero(), InitialCondition::mode(1, 1, 0.8).unwrap());
    cfg.stopping = StoppingRule::Fixed(0.1);
    let r = equicontinuity_study(&cfg).unwrap();
    for row in &r.rows {
        let want = 0.64 * 3.0 * row.value;
        assert!(rel(row.estimate, want) < 1e-12, "{row:?}");
    }
}

#[test]
fn cauchy_oracles() {
    let nu = 0.01;
    let mut ic = SpectralField::solenoidal_mode(6, k(1, 0), Complex64::new(1.0, 0.0));
    ic.axpy(1.0, &SpectralField::solenoidal_mode(6, k(3, 0), Complex64::new(0.5, 0.0)));
    ic.axpy(1.0, &SpectralField::solenoidal_mode(6, k(6, 0), Complex64::new(0.25, 0.0)));
    let mut cfg = base(OperatorPair::heat(nu).unwrap(), InitialCondition::Field(ic));
    cfg.cauchy_levels = vec![2, 4];
    cfg.cauchy_factors = vec![1, 2];
    let r = cauchy_convergence_study(&cfg).unwrap();
    let same: Vec<_> = r.rows.iter().filter(|row| row.value as usize == row.level).collect();
    assert_eq!(same.len(), 2);
    assert!(same.iter().all(|row| row.estimate == 0.0));
    let want = [(2, heat_uh(0.5, k(3, 0), nu, 0.5)), (4, heat_uh(0.25, k(6, 0), nu, 0.5))];
    for (m, w) in want {
        let row = r.rows.iter().find(|row| row.level == m && row.value as usize == 2 * m).unwrap();
        assert!(rel(row.estimate, w) < 1e-3, "{row:?} vs {w}");
    }
    assert!(!r.pass, "the m = n rows cannot decrease");
    assert!((cauchy_lambda(4) - 26f64.sqrt()).abs() < 1e-15);
}

#[test]
fn blowups_are_counted_and_fail_the_study() {
    // explicit Euler far past its stability limit
    let mut cfg = base(OperatorPair::heat(100.0).unwrap(), InitialCondition::mode(4, 4, 1.0).unwrap());
    cfg.levels = vec![4];
    cfg.dt = 0.01;
    cfg.horizon = 5.0;
    cfg.deltas = vec![0.1];
    cfg.stopping = StoppingRule::Fixed(1.0);
    let r = moment_bound_study(&cfg).unwrap();
    assert_eq!(r.blowups, 2);
    assert_eq!(r.paths, 0);
    assert!(!r.pass);
}

#[test]
fn reports_are_reproducible() {
    let xi = SaltCoefficients::trigonometric(2, 0.3, 0.5);
    let mut cfg = base(OperatorPair::salt_ns(0.2, xi).unwrap(), InitialCondition::random(3, 4.0, 1.0, 0.2, 2.0).unwrap());
    cfg.paths = 6;
    cfg.horizon = 0.1;
    cfg.deltas = vec![0.02, 0.01];
    cfg.stopping = StoppingRule::Fixed(0.05);
    let a = increment_tightness_study(&cfg).unwrap();
    let b = increment_tightness_study(&cfg).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.to_csv(), b.to_csv());
    assert!(a.to_csv().starts_with(CSV_HEADER));
    cfg.master_seed = 1;
    assert_ne!(increment_tightness_study(&cfg).unwrap().to_csv(), a.to_csv());
}

#[test]
fn standard_error_shrinks_with_root_paths() {
    let col = SpectralField::solenoidal_mode(2, k(1, 0), Complex64::new(0.5, 0.0));
    let pair = OperatorPair::heat_additive(0.5, vec![col]).unwrap();
    let mut cfg = base(pair, InitialCondition::Zero);
    cfg.levels = vec![2];
    cfg.paths = 1000;
    let small = moment_bound_study(&cfg).unwrap().std_error;
    cfg.paths = 4000;
    let large = moment_bound_study(&cfg).unwrap().std_error;
    let ratio = small / large;
    assert!((1.5..=2.5).contains(&ratio), "ratio {ratio}");
}

#[test]
fn constant_xi_schemes_match_the_linear_mean() {
    // B_i = ξ_i·∇ acts on mode k as i(ξ_i·k), so E u_T = u_0 exp(−(ν|k|² + ½Σ(ξ_i·k)²) T)
    let cs = [[0.8, 0.1], [-0.5, 0.3]];
    let nu = 0.2;
    let pair = OperatorPair::salt_ns(nu, SaltCoefficients::constant(&cs)).unwrap();
    let mut cfg = base(pair, InitialCondition::mode(1, 0, 1.0).unwrap());
    cfg.paths = 2000;
    cfg.horizon = 0.5;
    let p = paired_terminal_means(&cfg, 1, 1e-3, 1).unwrap();
    let s: f64 = cs.iter().map(|c| c[0] * c[0]).sum();
    let decay = (-(nu + 0.5 * s) * 0.5).exp();
    let want = SpectralField::solenoidal_mode(1, k(1, 0), Complex64::new(decay, 0.0));
    let naive = (-nu * 0.5f64).exp();
    for (mean, se) in [(&p.ito_mean, p.ito_se), (&p.heun_mean, p.heun_se)] {
        let err = mean.difference(&want).norm(Space::U);
        assert!(err < 3.0 * se + 2e-3, "err {err}, se {se}");
        // the corrector is visible: dropping it would be far off
        assert!((naive - decay) > 5.0 * (se + err));
    }
    assert!(p.gap <= 3.0 * p.gap_se + 1e-3, "{p:?}");
}

#[test]
fn energy_check_on_heat_halves() {
    let mut cfg = base(OperatorPair::heat(0.5).unwrap(), InitialCondition::mode(1, 1, 1.0).unwrap());
    cfg.levels = vec![2];
    let r = energy_check(&cfg).unwrap();
    assert!((r.estimate - 2.0).abs() < 0.1, "{}", r.estimate);
    assert!(r.pass);
}

#[test]
fn zero_noise_schemes_differ_by_integrator_order() {
    let pair = OperatorPair::salt_ns(0.3, SaltCoefficients::empty()).unwrap();
    let mut cfg = base(pair, InitialCondition::random(3, 4.0, 1.0, 0.0, 2.0).unwrap());
    cfg.horizon = 0.2;
    let a = paired_terminal_means(&cfg, 3, 2e-3, 1).unwrap();
    let b = paired_terminal_means(&cfg, 3, 1e-3, 1).unwrap();
    // Euler is first order, Heun second: their gap is the Euler error
    let ratio = a.gap / b.gap;
    assert!((1.8..=2.2).contains(&ratio), "ratio {ratio}");
}
