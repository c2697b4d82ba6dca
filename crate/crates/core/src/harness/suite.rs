//! The acceptance suite: twelve criteria with fixed families, seeds and
//! tolerances, plus a nonnegativity spot check of an assembled limit density.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::Result;
use crate::resonance_lattice::{
    decompose, directions_of_modes, enumerate_directions, primitive_direction, same_coset,
    LatticePoint, LineDecomposition, PrimitiveDirection,
};
use crate::resonant::{
    build_resonant, evolve_resonant, hs_norm_bound, hs_norm_sq_window, k_a_phi_window,
    main_formula_pair, operator_window, resonant_and_remainder, trace_density_eval,
    trace_norm_bound_gap, trace_pair, vanishing_criterion, ResonantMeasure,
};
use crate::symbols::{CoefficientFn, Symbol, TimeWindow};
use crate::torus_state::{
    near_hyperplane_mass, resonant_plane_wave, wave_packet, FourierState, GaussianProfile,
    ModeJson, ModeMap, StateFamily,
};
use crate::wigner::{
    classical_limit_gap, liouville_invariance_gap, time_averaged_pair, time_averaged_position_pair,
    transported_limit_gap,
};

use super::fit::{fit_rate, FitOutcome};
use super::oracles::{
    averaged_density_coefficients, averaged_density_eval, averaged_density_oracle,
    wave_packet_limit_oracle,
};
use super::tolerances::*;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u32,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.pass { "PASS" } else { "FAIL" };
        let id = if self.id == 0 {
            "spot".to_string()
        } else {
            format!("{:>4}", self.id)
        };
        write!(
            f,
            "criterion {id} {tag} [{}] {} ({:.2} s)",
            self.name, self.detail, self.seconds
        )
    }
}

pub struct Criterion {
    pub id: u32,
    pub name: &'static str,
    run: fn() -> Result<(bool, String)>,
}

impl Criterion {
    pub fn run(&self) -> CriterionOutcome {
        let start = Instant::now();
        let (pass, detail) = match (self.run)() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        CriterionOutcome {
            id: self.id,
            name: self.name,
            pass,
            detail,
            seconds: start.elapsed().as_secs_f64(),
        }
    }
}

/// All criteria in order; the nonnegativity spot check carries id 0 and runs last.
pub fn criteria() -> Vec<Criterion> {
    vec![
        Criterion {
            id: 1,
            name: "lattice bijection",
            run: lattice_bijection,
        },
        Criterion {
            id: 2,
            name: "exact finite-h decomposition",
            run: exact_decomposition,
        },
        Criterion {
            id: 3,
            name: "O(h) residual",
            run: residual_rate,
        },
        Criterion {
            id: 4,
            name: "trace bound",
            run: trace_bound,
        },
        Criterion {
            id: 5,
            name: "Hilbert-Schmidt bound",
            run: hs_bound,
        },
        Criterion {
            id: 6,
            name: "Liouville invariance",
            run: liouville_invariance,
        },
        Criterion {
            id: 7,
            name: "density-matrix evolution",
            run: density_matrix_evolution,
        },
        Criterion {
            id: 8,
            name: "wave-packet propagation",
            run: wave_packet_propagation,
        },
        Criterion {
            id: 9,
            name: "resonant plane wave",
            run: resonant_plane_wave_limit,
        },
        Criterion {
            id: 10,
            name: "classical limit",
            run: classical_limit,
        },
        Criterion {
            id: 11,
            name: "vanishing criterion dichotomy",
            run: vanishing_dichotomy,
        },
        Criterion {
            id: 12,
            name: "trace density",
            run: trace_density,
        },
        Criterion {
            id: 0,
            name: "limit density nonnegativity",
            run: limit_density_nonnegative,
        },
    ]
}

pub fn run_all() -> Vec<CriterionOutcome> {
    criteria().iter().map(Criterion::run).collect()
}

fn lp<const N: usize>(c: [i64; N]) -> LatticePoint {
    LatticePoint::from(c)
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn dir<const N: usize>(v: [i64; N]) -> PrimitiveDirection {
    primitive_direction(&lp(v)).expect("nonzero direction")
}

fn dyadic(from: i32, to: i32) -> Vec<f64> {
    (from..=to).map(|e| 2f64.powi(-e)).collect()
}

fn non_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] <= w[0])
}

fn fmt_series(values: &[f64]) -> String {
    let parts: Vec<String> = values.iter().map(|v| format!("{v:.3e}")).collect();
    format!("[{}]", parts.join(", "))
}

fn unit_mass(u: FourierState) -> FourierState {
    let n = u.norm_sq().sqrt();
    u.scaled(c(1.0 / n, 0.0))
}

/// Random real observable with zero mean mode and 2-4 conjugate pairs of
/// modes in `[-3, 3]^2`.
fn random_zero_mean_symbol(rng: &mut ChaCha8Rng) -> Symbol {
    let count = rng.gen_range(2..=4);
    let mut half: Vec<(LatticePoint, CoefficientFn)> = Vec::new();
    while half.len() < count {
        let k = lp([rng.gen_range(0..=3), rng.gen_range(-3..=3)]);
        let canonical = k.coords()[0] > 0 || (k.coords()[0] == 0 && k.coords()[1] > 0);
        if !canonical || half.iter().any(|(q, _)| *q == k) {
            continue;
        }
        half.push((k, random_coefficient(rng)));
    }
    Symbol::hermitian_from_half(2, half).expect("valid symbol")
}

fn random_coefficient(rng: &mut ChaCha8Rng) -> CoefficientFn {
    let re = rng.gen_range(-1.0..1.0);
    let im = rng.gen_range(-1.0..1.0);
    let center = vec![rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
    let width = rng.gen_range(0.3..1.5);
    match rng.gen_range(0..3) {
        0 => CoefficientFn::Constant { re, im },
        1 => CoefficientFn::Gaussian {
            re,
            im,
            center,
            width,
        },
        _ => CoefficientFn::PolyGaussian {
            re,
            im,
            center,
            width,
            powers: vec![rng.gen_range(0..3), rng.gen_range(0..3)],
        },
    }
}

fn nonnegative_coefficients() -> Vec<CoefficientFn> {
    vec![
        CoefficientFn::constant(c(1.0, 0.0)),
        CoefficientFn::gaussian(c(2.0, 0.0), vec![0.0, 0.0], 0.5),
        CoefficientFn::gaussian(c(0.7, 0.0), vec![0.4, -0.3], 0.2),
        CoefficientFn::PolyGaussian {
            re: 1.5,
            im: 0.0,
            center: vec![0.1, 0.2],
            width: 0.8,
            powers: vec![2, 0],
        },
        CoefficientFn::PolyGaussian {
            re: 0.3,
            im: 0.0,
            center: vec![-0.5, 0.0],
            width: 1.2,
            powers: vec![2, 2],
        },
    ]
}

fn lattice_bijection() -> Result<(bool, String)> {
    let mut total = 0usize;
    let mut failures: Vec<String> = Vec::new();
    for d in [2usize, 3] {
        let dirs = enumerate_directions(d, 30)?;
        let side = 31usize;
        let points = side.pow(d as u32);
        let results: Vec<(usize, Vec<String>)> = dirs
            .par_iter()
            .map(|p| {
                let p2 = p.norm_sq();
                let mut bad = Vec::new();
                for idx in 0..points {
                    let mut rest = idx;
                    let k = LatticePoint::new((0..d).map(|_| {
                        let v = (rest % side) as i64 - 15;
                        rest /= side;
                        v
                    }));
                    let dec = match decompose(&k, p) {
                        Ok(dec) => dec,
                        Err(e) => {
                            bad.push(format!("{k:?}: {e}"));
                            continue;
                        }
                    };
                    let lhs = k.scale(p2);
                    let rhs = &p.vector().scale(dec.n) + &dec.r_scaled;
                    let exact = lhs == rhs
                        && dec.n == k.dot(p.vector())
                        && dec.r_scaled.dot(p.vector()) == 0
                        && dec.class_c == dec.n.rem_euclid(p2)
                        && LineDecomposition::reconstruct(dec.n, &dec.r_scaled, p).as_ref()
                            == Some(&k);
                    // m lies on the line of k exactly when m = n (mod |p|^2)
                    let coset = [1, p2, p2 + 1, -p2, 2 * p2 - 1].iter().all(|&delta| {
                        let m = dec.n + delta;
                        let on_line = LineDecomposition::reconstruct(m, &dec.r_scaled, p).is_some();
                        on_line == same_coset(dec.n, m, p) && on_line == (delta.rem_euclid(p2) == 0)
                    });
                    if !(exact && coset) {
                        bad.push(format!("p = {:?}, k = {:?}", p.vector(), k));
                    }
                }
                (points, bad)
            })
            .collect();
        for (n, bad) in results {
            total += n;
            failures.extend(bad);
        }
    }
    let pass = failures.is_empty();
    let detail = if pass {
        format!("{total} (direction, point) pairs exact")
    } else {
        format!(
            "{} failures, first {:?}",
            failures.len(),
            &failures[..failures.len().min(3)]
        )
    };
    Ok((pass, detail))
}

fn exact_decomposition() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let symbols: Vec<Symbol> = (0..3).map(|_| random_zero_mean_symbol(&mut rng)).collect();
    let phi = TimeWindow::new(1.0, 1.0, 0.25)?;
    let h = 1.0 / 16.0;
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let count = 40 + 8 * seed as usize;
        let u = FourierState::random(2, count.min(200), 16, 100 + seed);
        for a in &symbols {
            let total = time_averaged_pair(&u, h, a, &phi)?.value;
            let (res, rem) = resonant_and_remainder(&u, h, a, &phi)?;
            let rel = (total - res - rem).norm() / (total.norm() + u.norm_sq());
            worst = worst.max(rel);
        }
    }
    Ok((
        worst <= DECOMPOSITION_REL,
        format!("worst relative defect {worst:.2e} (limit {DECOMPOSITION_REL:e})"),
    ))
}

fn residual_symbol() -> Result<Symbol> {
    let g = CoefficientFn::gaussian(c(1.0, 0.0), vec![1.0, 0.3], 1.0);
    Symbol::hermitian_from_half(2, [(lp([0, 1]), g)])
}

fn residual_rate() -> Result<(bool, String)> {
    let a = residual_symbol()?;
    let phi = TimeWindow::unit();
    let hs = dyadic(3, 8);
    let series: Vec<(f64, f64)> = hs
        .iter()
        .map(|&h| {
            let u = wave_packet(&[0.5, 0.0], &[1.0, 0.0], 1.0, h, 1e-12)?;
            Ok((h, crate::resonant::lemma_main_residual(&u, h, &a, &phi)?))
        })
        .collect::<Result<_>>()?;
    let fit = fit_rate(&series);
    let values: Vec<f64> = series.iter().map(|p| p.1).collect();
    Ok((
        fit.meets(MIN_SLOPE, MIN_R_SQUARED),
        format!("{fit:?}, residuals {}", fmt_series(&values)),
    ))
}

fn trace_bound() -> Result<(bool, String)> {
    let dirs = enumerate_directions(2, 10)?;
    let bs = nonnegative_coefficients();
    let mut worst_gap = f64::INFINITY;
    let mut worst_eig = f64::INFINITY;
    for seed in 0..50u64 {
        let u = FourierState::random(2, 30 + (seed as usize % 5) * 20, 8, 400 + seed);
        let omega = &dirs[seed as usize % dirs.len()];
        let r = build_resonant(&u, 0.1, omega)?;
        let window = r.max_abs_n() as usize;
        for b in &bs {
            worst_gap = worst_gap.min(trace_norm_bound_gap(&r, b));
            let w = operator_window(&r, b, window);
            let trace = w.trace().re;
            worst_eig = worst_eig.min(w.min_eigenvalue() / trace.max(f64::MIN_POSITIVE));
        }
    }
    let pass = worst_gap >= -POSITIVITY_REL && worst_eig >= -POSITIVITY_REL;
    Ok((
        pass,
        format!("smallest gap {worst_gap:.3e}, smallest eigenvalue/trace {worst_eig:.3e}"),
    ))
}

fn hs_bound() -> Result<(bool, String)> {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let windows = [
        TimeWindow::new(1.0, 0.5, 0.0)?,
        TimeWindow::new(0.8, 1.0, 0.3)?,
        TimeWindow::new(1.5, 2.0, -1.0)?,
    ];
    let xis = [[0.0, 0.0], [0.4, -0.7], [1.2, 0.5]];
    let mut worst_slack = f64::INFINITY;
    let mut worst_tail: f64 = 0.0;
    for _ in 0..10 {
        let a = random_zero_mean_symbol(&mut rng);
        for phi in &windows {
            let bound = hs_norm_bound(&a, phi);
            for xi in &xis {
                let mut total = 0.0;
                for omega in directions_of_modes(a.modes().keys()) {
                    let mut m = 16usize;
                    let k = loop {
                        let k = k_a_phi_window(&omega, xi, &a, phi, m);
                        if k.tail_bound < HS_TAIL_MAX || m > 4096 {
                            break k;
                        }
                        m *= 2;
                    };
                    worst_tail = worst_tail.max(k.tail_bound);
                    total += hs_norm_sq_window(&k);
                }
                worst_slack = worst_slack.min((bound - total) / bound);
            }
        }
    }
    let pass = worst_slack >= -HS_SLACK_REL && worst_tail < HS_TAIL_MAX;
    Ok((
        pass,
        format!("smallest relative slack {worst_slack:.3e}, largest tail {worst_tail:.2e}"),
    ))
}

fn liouville_invariance() -> Result<(bool, String)> {
    let bs = [
        CoefficientFn::gaussian(c(1.0, 0.0), vec![0.0, 0.0], 1.0),
        CoefficientFn::gaussian(c(0.5, 0.5), vec![0.3, -0.2], 0.4),
        CoefficientFn::PolyGaussian {
            re: 1.0,
            im: 0.0,
            center: vec![0.0, 0.5],
            width: 0.7,
            powers: vec![1, 2],
        },
    ];
    let times = [-10.0, -3.3, 0.7, 4.25, 10.0];
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let u = FourierState::random(2, 100, 12, 600 + seed);
        for b in &bs {
            for &t in &times {
                let gap = liouville_invariance_gap(&u, 0.05, b, t);
                worst = worst.max(gap / (u.norm_sq() * b.sup_norm()));
            }
        }
    }
    Ok((
        worst <= LIOUVILLE_REL,
        format!("largest relative gap {worst:.2e}"),
    ))
}

fn density_matrix_evolution() -> Result<(bool, String)> {
    let dirs = [
        dir([1, 0]),
        dir([1, 1]),
        dir([1, -2]),
        dir([2, 1]),
        dir([0, 1]),
    ];
    let mut worst_defect: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    let dt = ODE_STEP;
    for seed in 0..10u64 {
        let u = unit_mass(FourierState::random(2, 40, 4, 700 + seed));
        let omega = &dirs[seed as usize % dirs.len()];
        let r = build_resonant(&u, 0.1, omega)?;
        let t = 0.3 * seed as f64 - 1.0;
        let m = r.max_abs_n() as usize;
        let b = CoefficientFn::constant(c(1.0, 0.0));
        let at = |s: f64| operator_window(&evolve_resonant(&r, s), &b, m);
        let (w, wp, wm) = (at(t), at(t + dt), at(t - dt));
        let p2 = omega.norm_sq() as f64;
        let mi = m as i64;
        for i in -mi..=mi {
            for j in -mi..=mi {
                let deriv = (wp.entry(i, j) - wm.entry(i, j)) / (2.0 * dt);
                let rhs = c(0.0, (j * j - i * i) as f64 / (2.0 * p2)) * w.entry(i, j);
                worst_defect = worst_defect.max((deriv - rhs).norm());
            }
        }
        let g = CoefficientFn::gaussian(c(1.0, 0.0), vec![0.2, 0.0], 0.6);
        let evolved = evolve_resonant(&r, t);
        worst_trace = worst_trace
            .max((evolved.total_trace() - r.total_trace()).abs())
            .max((trace_pair(&evolved, &g) - trace_pair(&r, &g)).norm());
    }
    let pass = worst_defect <= ODE_DEFECT && worst_trace <= TRACE_INVARIANCE;
    Ok((
        pass,
        format!("largest ODE defect {worst_defect:.2e}, largest trace drift {worst_trace:.2e}"),
    ))
}

fn wave_packet_density() -> ModeMap {
    let mut m = ModeMap::new();
    m.insert(lp([0, 0]), c(1.0, 0.0));
    for (k, v) in [
        (lp([1, 0]), c(0.2, 0.0)),
        (lp([0, 1]), c(0.15, 0.1)),
        (lp([2, 1]), c(0.1, -0.05)),
        (lp([1, -2]), c(0.0, 0.08)),
        (lp([0, 3]), c(0.05, 0.0)),
    ] {
        m.insert(-&k, v.conj());
        m.insert(k, v);
    }
    m
}

fn wave_packet_propagation() -> Result<(bool, String)> {
    let (x0, xi0, sigma) = ([0.0, 0.0], [1.0, 0.0], 0.2);
    let hs = dyadic(4, 10);
    let dirs = [dir([0, 1]), dir([1, 1]), dir([1, -1])];
    let m = wave_packet_density();
    let phi = TimeWindow::unit();
    let mass = GaussianProfile { sigma }.norm_sq(2);
    let oracle = wave_packet_limit_oracle(&m, &phi, mass, 2);
    let mut slabs = vec![Vec::new(); dirs.len()];
    let mut errors = Vec::new();
    for &h in &hs {
        let u = wave_packet(&x0, &xi0, sigma, h, 1e-10)?;
        for (i, p) in dirs.iter().enumerate() {
            slabs[i].push(near_hyperplane_mass(&u, p, 5.0)?);
        }
        let pair = time_averaged_position_pair(&u, &m, &phi)?.value;
        errors.push((pair - oracle).norm() / oracle.norm());
    }
    let slab_ok = slabs
        .iter()
        .all(|s| non_increasing(s) && *s.last().expect("nonempty") < WAVE_PACKET_SLAB_MAX);
    let limit_ok =
        non_increasing(&errors) && *errors.last().expect("nonempty") < WAVE_PACKET_LIMIT_REL;
    let detail = format!(
        "(a) slab masses {} / {} / {}; (b) relative errors {}",
        fmt_series(&slabs[0]),
        fmt_series(&slabs[1]),
        fmt_series(&slabs[2]),
        fmt_series(&errors)
    );
    Ok((slab_ok && limit_ok, detail))
}

fn plane_wave_profile() -> ModeMap {
    ModeMap::from([
        (lp([0, 0]), c(0.7, 0.0)),
        (lp([0, 1]), c(0.3, 0.2)),
        (lp([1, 0]), c(0.0, -0.4)),
        (lp([1, -1]), c(0.25, 0.0)),
        (lp([0, -2]), c(-0.2, 0.1)),
    ])
}

fn plane_wave_density() -> ModeMap {
    let mut m = ModeMap::new();
    m.insert(lp([0, 0]), c(1.0, 0.0));
    for (k, v) in [
        (lp([0, 1]), c(0.3, 0.1)),
        (lp([1, 0]), c(0.25, 0.0)),
        (lp([1, 1]), c(0.1, -0.2)),
        (lp([0, 2]), c(0.0, 0.15)),
        (lp([1, -1]), c(0.2, 0.05)),
    ] {
        m.insert(-&k, v.conj());
        m.insert(k, v);
    }
    m
}

fn plane_wave_window() -> Result<TimeWindow> {
    TimeWindow::new(1.0, 0.1, 0.0)
}

fn resonant_plane_wave_limit() -> Result<(bool, String)> {
    let profile = plane_wave_profile();
    let k_dir = lp([1, 0]);
    let m = plane_wave_density();
    let phi = plane_wave_window()?;
    let oracle = averaged_density_oracle(&profile, &k_dir, &m, &phi)?;
    let profile_mass: f64 = profile.values().map(|v| v.norm_sqr()).sum();
    let scale = oracle.norm() + profile_mass;
    let a = Symbol::from_density(2, &m)?;
    let mut errors = Vec::new();
    let mut formula_errors = Vec::new();
    for n in [8i64, 16, 32, 64] {
        let (u, h) = resonant_plane_wave(&profile, &k_dir, n, 1e-12)?;
        let pair = time_averaged_position_pair(&u, &m, &phi)?.value;
        errors.push((pair - oracle).norm() / scale);
        formula_errors.push((main_formula_pair(&u, h, &a, &phi)? - oracle).norm() / scale);
    }
    let last = *errors.last().expect("nonempty");
    let last_formula = *formula_errors.last().expect("nonempty");
    let pass = non_increasing(&errors)
        && last <= PLANE_WAVE_LIMIT_REL
        && last_formula <= PLANE_WAVE_LIMIT_REL;
    Ok((
        pass,
        format!(
            "pairing errors {}, main formula errors {}",
            fmt_series(&errors),
            fmt_series(&formula_errors)
        ),
    ))
}

fn classical_limit() -> Result<(bool, String)> {
    let a = residual_symbol()?;
    let (x0, xi0, sigma) = ([0.5, 0.0], [1.0, 0.0], 1.0);
    let hs = dyadic(3, 8);
    let mut gaps = Vec::new();
    let mut transported = Vec::new();
    let mass = GaussianProfile { sigma }.norm_sq(2);
    for &h in &hs {
        let u = wave_packet(&x0, &xi0, sigma, h, 1e-12)?;
        gaps.push((h, classical_limit_gap(&u, h, &a, 1.0)?));
        transported.push((h, transported_limit_gap(&u, h, &a, 1.0, &x0, &xi0, mass)?));
    }
    let fit = fit_rate(&gaps);
    let supplementary = fit_rate(&transported);
    let values: Vec<f64> = gaps.iter().map(|p| p.1).collect();
    let note = match fit {
        FitOutcome::IdenticallyZero => {
            "; the gap vanishes identically at every h, so no rate can be fitted"
        }
        _ => "",
    };
    Ok((
        fit.meets(MIN_SLOPE, MIN_R_SQUARED),
        format!(
            "gaps {} fit {fit:?}{note}; transported-limit gap fit {supplementary:?}",
            fmt_series(&values)
        ),
    ))
}

fn vanishing_dichotomy() -> Result<(bool, String)> {
    let hs = dyadic(3, 10);
    let packet = StateFamily::WavePacket {
        x0: vec![0.0, 0.0],
        xi0: vec![1.0, 0.0],
        sigma: 0.5,
        trunc: 1e-12,
    };
    let p = dir([1, 0]);
    let decay = vanishing_criterion(&packet, 2, &p, 5.0, &hs)?;
    let mass = packet.limit_mass(2).expect("wave packet mass");
    let decays = non_increasing(&decay) && *decay.last().expect("nonempty") <= 1e-3 * mass;

    let profile: Vec<ModeJson> = plane_wave_profile()
        .iter()
        .map(|(k, v)| ModeJson {
            k: k.coords().to_vec(),
            re: v.re,
            im: v.im,
        })
        .collect();
    let plane = StateFamily::ResonantPlaneWave {
        profile,
        direction: vec![1, 0],
        trunc: 1e-12,
    };
    let reciprocal: Vec<f64> = [8.0, 16.0, 32.0, 64.0].iter().map(|n| 1.0 / n).collect();
    let q = dir([0, 1]);
    let stays = vanishing_criterion(&plane, 2, &q, 5.0, &reciprocal)?;
    let floor = PLANE_WAVE_SLAB_MIN * plane.limit_mass(2).expect("plane wave mass");
    let bounded = stays.iter().all(|v| *v >= floor);
    Ok((
        decays && bounded,
        format!(
            "wave packet {} ; plane wave {} (floor {floor:.3})",
            fmt_series(&decay),
            fmt_series(&stays)
        ),
    ))
}

fn density_grid_check(r: &ResonantMeasure, t: f64, b: &CoefficientFn) -> Result<(f64, f64)> {
    let len = r.omega.geodesic_length();
    let grid = 1024;
    let mut least = f64::INFINITY;
    let mut mass = 0.0;
    for i in 0..grid {
        let v = trace_density_eval(r, t, len * i as f64 / grid as f64, b)?;
        least = least.min(v);
        mass += v * len / grid as f64;
    }
    Ok((
        least,
        (mass - trace_pair(&evolve_resonant(r, t), b).re).abs(),
    ))
}

fn trace_density() -> Result<(bool, String)> {
    let b = CoefficientFn::gaussian(c(1.0, 0.0), vec![0.0, 0.1], 0.7);
    let mut least = f64::INFINITY;
    let mut mass_err: f64 = 0.0;
    for (seed, omega) in [(0u64, dir([1, 0])), (1, dir([1, 2])), (2, dir([2, -1]))] {
        let u = FourierState::random(2, 60, 6, 800 + seed);
        let r = build_resonant(&u, 0.1, &omega)?;
        let (l, e) = density_grid_check(&r, 0.9, &b)?;
        least = least.min(l);
        mass_err = mass_err.max(e);
    }
    let two = FourierState::from_modes(2, [(lp([1, 0]), c(1.0, 0.0)), (lp([2, 0]), c(1.0, 0.0))])?;
    let r = build_resonant(&two, 0.1, &dir([1, 0]))?;
    let one = CoefficientFn::constant(c(1.0, 0.0));
    let mut formula_err: f64 = 0.0;
    for i in 0..1024 {
        let s = 2.0 * PI * i as f64 / 1024.0;
        formula_err =
            formula_err.max((trace_density_eval(&r, 0.0, s, &one)? - (1.0 + s.cos()) / PI).abs());
    }
    let pass = least >= 0.0 && mass_err <= DENSITY_MASS && formula_err <= DENSITY_FORMULA;
    Ok((
        pass,
        format!("min density {least:.3e}, mass error {mass_err:.2e}, two-mode formula error {formula_err:.2e}"),
    ))
}

fn limit_density_nonnegative() -> Result<(bool, String)> {
    let coeffs =
        averaged_density_coefficients(&plane_wave_profile(), &lp([1, 0]), &plane_wave_window()?)?;
    let n = 128;
    let mut least = f64::INFINITY;
    let mut most = f64::NEG_INFINITY;
    let mut imag: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let x = [
                2.0 * PI * i as f64 / n as f64,
                2.0 * PI * j as f64 / n as f64,
            ];
            let v = averaged_density_eval(&coeffs, &x);
            least = least.min(v.re);
            most = most.max(v.re);
            imag = imag.max(v.im.abs());
        }
    }
    let pass = least >= -1e-12 * most && imag <= 1e-12 * most;
    Ok((
        pass,
        format!("density range [{least:.3e}, {most:.3e}] on a {n}x{n} grid"),
    ))
}
