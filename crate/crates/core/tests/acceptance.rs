//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use multicopter_energy::energy_aware::{
    generate_synthetic_log, simulate, thrust_correction, validate_against_log, CombinedState, EcmModel,
    InputCommand, Schedule, SimOptions, SyntheticOptions, ValidationOptions,
};
use multicopter_energy::fixtures::holybro;
use multicopter_energy::frames::EulerAngles;
use multicopter_energy::linear::{
    hover_set_point, linearize_vehicle, taylor_lie_affine, LinearOptions, LpvModel,
};
use multicopter_energy::powertrain::{
    battery_current, battery_response, check_powertrain_constraints, total_demand, OcvCurve, PowertrainOutput,
    PowertrainState,
};
use multicopter_energy::sensors::{
    lidar_ground_constraints, lidar_obstacle_constraints, lidar_point_density, LidarConfig, LidarSpec,
};
use multicopter_energy::vehicle::{check_vehicle_constraints, dynamics, UavInput, UavState, WindDisturbance};
use multicopter_energy::ModelConfig;
use nalgebra::{DMatrix, DVector, Vector3};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Outcome,
}

fn main() -> ExitCode {
    let criteria = [
        Criterion { id: 1, name: "hover equilibrium", budget: Duration::from_secs(1), run: hover_equilibrium },
        Criterion { id: 2, name: "set-point quantities", budget: Duration::from_secs(1), run: set_point },
        Criterion { id: 3, name: "battery power balance", budget: Duration::from_secs(5), run: power_balance },
        Criterion { id: 4, name: "OCV continuity", budget: Duration::from_secs(1), run: ocv_continuity },
        Criterion { id: 5, name: "linearization fidelity", budget: Duration::from_secs(30), run: linearization },
        Criterion { id: 6, name: "discretization order", budget: Duration::from_secs(5), run: discretization },
        Criterion { id: 7, name: "energy accounting", budget: Duration::from_secs(10), run: energy_accounting },
        Criterion { id: 8, name: "validation self-consistency", budget: Duration::from_secs(10), run: validation },
        Criterion { id: 9, name: "sensor bounds", budget: Duration::from_secs(5), run: sensor_bounds },
        Criterion { id: 10, name: "constraint reports", budget: Duration::from_secs(1), run: constraint_reports },
    ];
    let mut failed = 0;
    for c in &criteria {
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(c.run)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|detail| {
            if elapsed <= c.budget {
                Ok(detail)
            } else {
                Err(format!("{detail}; runtime {elapsed:.2?} over budget {:?}", c.budget))
            }
        });
        match result {
            Ok(detail) => println!("criterion {:>2} PASS {} ({elapsed:.2?}): {detail}", c.id, c.name),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL {} ({elapsed:.2?}): {detail}", c.id, c.name)
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn hover_equilibrium() -> Outcome {
    let c = holybro();
    let vp = &c.vehicle;
    let mut worst: f64 = 0.0;
    for psi in [0.0, 0.7, -2.5] {
        let x = UavState {
            attitude: EulerAngles::new(0.0, 0.0, psi),
            ..Default::default()
        };
        let dx = dynamics(&x, &UavInput::hover(vp), &WindDisturbance::default(), vp).map_err(|e| e.to_string())?;
        worst = worst.max(dx.amax());
    }
    ensure(worst <= 1e-12, || format!("max |dx| = {worst:e}"))?;
    Ok(format!("max |dx| = {worst:e}"))
}

/// Battery current for `demand` at a full, relaxed pack by bisection on
/// `u_b(i) i = demand` over the branch that starts at zero current.
fn bisect_current(cfg: &ModelConfig, demand: f64) -> f64 {
    let b = &cfg.battery;
    let (ns, np) = (f64::from(b.cells_series), f64::from(b.cells_parallel));
    let b0 = match b.ocv {
        OcvCurve::Linear { b0, .. } => b0,
        OcvCurve::Piecewise { ref segments } => segments[0].b0,
    };
    let power = |i: f64| ns * (b0 - b.r_int / np * i) * i;
    let (mut lo, mut hi) = (0.0, np * b0 / (2.0 * b.r_int));
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if power(mid) < demand {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn set_point() -> Outcome {
    let c = holybro();
    let sp = hover_set_point(&c.vehicle, &c.battery, &c.motor).map_err(|e| e.to_string())?;
    ensure((sp.thrust - 14.220).abs() <= 0.001, || format!("T_SP = {}", sp.thrust))?;
    ensure((sp.motor_speed - 542.0).abs() <= 0.5, || format!("Omega_SP = {}", sp.motor_speed))?;

    // supply power per motor from the motor constants
    let m = &c.motor;
    let w = sp.motor_speed;
    let load = m.damping * w + m.k_m * w * w;
    let p_dc = m.r_dc * m.k_v * m.k_v * load * load + m.damping * w * w + m.k_m * w * w * w;
    let oracle = bisect_current(&c, 4.0 * p_dc / m.eta_esc);
    let nonlinear =
        battery_current(&PowertrainState::full(), &[w; 4], 0.0, &c.battery, &c.motor).map_err(|e| e.to_string())?;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    ensure(rel(sp.i_b, nonlinear) <= 1e-6, || format!("i_SP {} vs battery_current {nonlinear}", sp.i_b))?;
    ensure(rel(sp.i_b, oracle) <= 1e-6, || format!("i_SP {} vs bisection {oracle}", sp.i_b))?;
    Ok(format!(
        "T_SP = {:.4} N, Omega_SP = {:.2} rad/s, i_SP = {:.4} A (rel. diff {:.1e} / {:.1e})",
        sp.thrust,
        sp.motor_speed,
        sp.i_b,
        rel(sp.i_b, nonlinear),
        rel(sp.i_b, oracle)
    ))
}

fn power_balance() -> Outcome {
    let c = holybro();
    let mut rng = StdRng::seed_from_u64(0x5eed);
    let omega_max = c.vehicle.limits.motor_speed_max;
    let (mut checked, mut worst) = (0, 0.0f64);
    let mut attempts = 0;
    while checked < 1000 {
        attempts += 1;
        ensure(attempts < 5000, || format!("only {checked} feasible samples"))?;
        let state = PowertrainState {
            dod: rng.random_range(0.0..c.battery.dod_cutoff),
            u_th: rng.random_range(-0.05..0.2),
        };
        let omegas: Vec<f64> = (0..4).map(|_| rng.random_range(0.0..omega_max)).collect();
        let extra = rng.random_range(0.0..30.0);
        let Ok(i_b) = battery_current(&state, &omegas, extra, &c.battery, &c.motor) else {
            continue;
        };
        let (_, out) = battery_response(&state, i_b, &c.battery).map_err(|e| e.to_string())?;
        let demand = total_demand(&omegas, extra, &c.motor).map_err(|e| e.to_string())?;
        let rel = (out.u_b * out.i_b - demand).abs() / demand;
        worst = worst.max(rel);
        checked += 1;
    }
    ensure(worst <= 1e-9, || format!("worst relative imbalance {worst:e}"))?;
    for dod in [0.0, 0.3, 0.8] {
        let state = PowertrainState { dod, u_th: 0.05 };
        let i0 = battery_current(&state, &[0.0; 4], 0.0, &c.battery, &c.motor).map_err(|e| e.to_string())?;
        ensure(i0 == 0.0, || format!("zero-power current {i0:e} at DoD {dod}"))?;
    }
    Ok(format!("{checked} samples, worst relative imbalance {worst:.1e}; zero power gives 0 A"))
}

fn ocv_continuity() -> Outcome {
    let c = holybro();
    let Some(OcvCurve::Piecewise { segments }) = &c.ocv_piecewise else {
        return Err("fixture has no piecewise OCV curve".into());
    };
    let mut parts = Vec::new();
    for at in [0.2, 0.4] {
        let left = segments.iter().find(|s| s.dod_end == at).ok_or("no segment ends at breakpoint")?;
        let right = segments.iter().find(|s| s.dod_start == at).ok_or("no segment starts at breakpoint")?;
        let jump = ((left.b0 + left.b1 * at) - (right.b0 + right.b1 * at)).abs();
        ensure(jump <= 1e-3, || format!("jump {jump} V at DoD {at}"))?;
        ensure(jump <= 5e-5, || format!("jump {jump} V at DoD {at} above the measured 5e-5 V"))?;
        parts.push(format!("{jump:.1e} V at DoD {at}"));
    }
    Ok(parts.join(", "))
}

fn linearization() -> Outcome {
    let c = holybro();
    let vp = &c.vehicle;
    let t_sp = vp.mass * vp.gravity;
    let mut worst = 0.0f64;
    for psi in [0.0, 0.7, -2.5] {
        let lin = linearize_vehicle(vp, psi);
        let f = |x: &DVector<f64>, u: &DVector<f64>, d: &DVector<f64>| -> DVector<f64> {
            let s = UavState::from_vector(&nalgebra::SVector::<f64, 12>::from_column_slice(x.as_slice()));
            let input = UavInput {
                thrust: t_sp + u[0],
                torque: Vector3::new(u[1], u[2], u[3]),
                rotor_speed_diff: 0.0,
            };
            let w = WindDisturbance::new(d[0], d[1], d[2]);
            DVector::from_column_slice(dynamics(&s, &input, &w, vp).unwrap().as_slice())
        };
        let mut x0 = DVector::zeros(12);
        x0[8] = psi;
        let (u0, d0) = (DVector::zeros(4), DVector::zeros(3));
        let h = 1e-6;
        let jac = |n: usize, which: usize| {
            DMatrix::from_fn(12, n, |r, col| {
                let mut args = [x0.clone(), u0.clone(), d0.clone()];
                args[which][col] += h;
                let plus = f(&args[0], &args[1], &args[2])[r];
                args[which][col] -= 2.0 * h;
                let minus = f(&args[0], &args[1], &args[2])[r];
                (plus - minus) / (2.0 * h)
            })
        };
        worst = worst
            .max((&lin.a - jac(12, 0)).amax())
            .max((&lin.b - jac(4, 1)).amax())
            .max((&lin.h - jac(3, 2)).amax());
    }
    ensure(worst <= 1e-6, || format!("max Jacobian entry error {worst:e}"))?;

    // 1 s rollouts from a rolled hover; only the vehicle states are compared
    let hover = Schedule::Constant(InputCommand::Hover);
    let calm = Schedule::Constant(WindDisturbance::default());
    let mut lpv_opts = SimOptions::lpv(1.0).with_dt(0.01);
    lpv_opts.vehicle_order = 4;
    let eps = [0.01, 0.005, 0.0025];
    let mut errors = Vec::new();
    for e in eps {
        let mut x0 = CombinedState::default();
        x0.uav.attitude = EulerAngles::new(e, 0.0, 0.0);
        let nl = simulate(&x0, &hover, &calm, &c, &SimOptions::nonlinear(1.0)).map_err(|e| e.to_string())?;
        let lp = simulate(&x0, &hover, &calm, &c, &lpv_opts).map_err(|e| e.to_string())?;
        let diff = nl.last().state.uav.to_vector() - lp.last().state.uav.to_vector();
        errors.push(diff.amax());
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let fitted = fit_order(&eps, &errors);
    ensure(fitted >= 1.8, || format!("fitted order {fitted:.3}, errors {errors:?}"))?;
    Ok(format!(
        "Jacobian error {worst:.1e}; rollout errors {:?}, pairwise orders {:?}, fitted order {fitted:.3}",
        errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
        orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
    ))
}

/// Least-squares slope of log(err) against log(h).
fn fit_order(h: &[f64], err: &[f64]) -> f64 {
    let xs: Vec<f64> = h.iter().map(|v| v.ln()).collect();
    let ys: Vec<f64> = err.iter().map(|v| v.ln()).collect();
    let n = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn discretization() -> Outcome {
    let c = holybro();
    let lin = linearize_vehicle(&c.vehicle, 0.3);
    let (n, m) = (lin.a.nrows(), lin.b.ncols());
    let dts = [0.1, 0.05, 0.025];
    let mut errors = Vec::new();
    for dt in dts {
        let disc = lin.discretize(dt, 2).map_err(|e| e.to_string())?;
        // exp([[A, B], [0, 0]] dt) holds e^{A dt} and the exact input matrix
        let mut aug = DMatrix::zeros(n + m, n + m);
        aug.view_mut((0, 0), (n, n)).copy_from(&lin.a);
        aug.view_mut((0, n), (n, m)).copy_from(&lin.b);
        let exact = (aug * dt).exp();
        let err_a = (&disc.a - exact.view((0, 0), (n, n))).amax();
        let err_b = (&disc.b - exact.view((0, n), (n, m))).amax();
        errors.push(err_a.max(err_b));
    }
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let min_order = orders.iter().cloned().fold(f64::INFINITY, f64::min);
    ensure(min_order >= 2.7, || format!("orders {orders:?}, errors {errors:?}"))?;

    let (a_d, _) = taylor_lie_affine(&DMatrix::from_element(1, 1, -1.0), 0.1, 3).map_err(|e| e.to_string())?;
    let decay_err = (a_d[(0, 0)] - (-0.1f64).exp()).abs();
    ensure(decay_err <= 5e-6, || format!("scalar decay error {decay_err:e}"))?;
    Ok(format!(
        "errors {:?}, observed orders {:?}; scalar decay error {decay_err:.2e}",
        errors.iter().map(|e| format!("{e:.2e}")).collect::<Vec<_>>(),
        orders.iter().map(|o| format!("{o:.3}")).collect::<Vec<_>>()
    ))
}

fn energy_accounting() -> Outcome {
    let c = holybro();
    let hover = Schedule::Constant(InputCommand::Hover);
    let calm = Schedule::Constant(WindDisturbance::default());
    let traj = simulate(&CombinedState::default(), &hover, &calm, &c, &SimOptions::nonlinear(300.0))
        .map_err(|e| e.to_string())?;
    let last = traj.last();
    let d_soc = last.output.soc - 1.0;
    ensure((d_soc + 0.1362).abs() <= 0.002, || format!("dSoC = {d_soc}"))?;

    // Coulomb counting against the trapezoidal integral of the logged current
    let charge: f64 = traj
        .records
        .windows(2)
        .map(|w| 0.5 * (w[0].output.i_b + w[1].output.i_b) * (w[1].t - w[0].t))
        .sum();
    let counted = c.battery.coulombic_efficiency * charge / c.battery.capacity;
    let rel = (last.state.pt.dod - counted).abs() / counted;
    ensure(rel <= 1e-6, || format!("DoD {} vs integral {counted} (rel {rel:e})", last.state.pt.dod))?;

    // steady flight at v_th: tilt balances drag and the lift gain cancels it
    let vp = &c.vehicle;
    let v_th = c.etl.v_th;
    let mut worst_dt = 0.0f64;
    for exact_tilt in [false, true] {
        let etl = multicopter_energy::EtlParams { exact_tilt, ..c.etl };
        let ratio = c.etl.c_f * v_th / (vp.mass * vp.gravity);
        let alpha = if exact_tilt { ratio.atan() } else { ratio };
        worst_dt = worst_dt.max(thrust_correction(0.0, alpha, v_th, vp, &etl).abs());
    }
    ensure(worst_dt <= 1e-12, || format!("thrust correction at v_th = {worst_dt:e}"))?;
    let lpv = LpvModel::build(vp, &c.battery, &c.motor, &LinearOptions::default()).map_err(|e| e.to_string())?;
    let model = lpv.model(0);
    let mut x = DVector::zeros(14);
    x[3] = v_th;
    let u_hover = DVector::zeros(5);
    let mut u_fast = DVector::zeros(5);
    let alpha = c.etl.c_f * v_th / (vp.mass * vp.gravity);
    u_fast[4] = thrust_correction(0.0, alpha, v_th, vp, &c.etl);
    let i_hover = model.output(&DVector::zeros(14), &u_hover).map_err(|e| e.to_string())?[2];
    let i_fast = model.output(&x, &u_fast).map_err(|e| e.to_string())?[2];
    ensure((i_fast - i_hover).abs() <= 1e-12 * i_hover, || format!("current at v_th {i_fast} vs hover {i_hover}"))?;
    Ok(format!(
        "dSoC = {d_soc:.6}, Coulomb-count rel. diff {rel:.1e}, dT at v_th = {worst_dt:.1e} N, i_b at v_th = hover = {i_hover:.4} A"
    ))
}

fn validation() -> Outcome {
    let c = holybro();
    let hover = 542.03;
    let profile = move |t: f64| {
        let bump = 40.0 * (t / 20.0).sin();
        vec![hover + bump, hover - bump, hover + 0.5 * bump, hover - 0.5 * bump]
    };
    let opts = ValidationOptions::new(EcmModel::Nonlinear);
    let log = generate_synthetic_log(&c, profile, 310.0, 0.1, &SyntheticOptions::default()).map_err(|e| e.to_string())?;
    let clean = validate_against_log(&log, &c, &opts).map_err(|e| e.to_string())?;
    let f_clean = clean.f_error_window.ok_or("log reported as partial")?;
    ensure(f_clean <= 0.01, || format!("self-consistency f_error = {f_clean}%"))?;

    let biased_opts = SyntheticOptions {
        current_bias: 0.05,
        ..Default::default()
    };
    let biased = generate_synthetic_log(&c, profile, 310.0, 0.1, &biased_opts).map_err(|e| e.to_string())?;
    let r = validate_against_log(&biased, &c, &opts).map_err(|e| e.to_string())?;
    let f_bias = r.f_error_window.ok_or("log reported as partial")?;
    // true SoC change over the window from the unbiased run
    let t_w = log.records[0].t + 300.0;
    let d_true = log.interpolate(t_w, |rec| rec.soc) - log.records[0].soc;
    let predicted = 0.05 * d_true.abs() * 100.0;
    ensure((f_bias - predicted).abs() <= 0.1 * predicted, || format!("biased f_error {f_bias}% vs predicted {predicted}%"))?;
    Ok(format!(
        "clean f_error = {f_clean:.2e}%, +5% bias f_error = {f_bias:.4}% (predicted {predicted:.4}%)"
    ))
}

fn lidar(range: f64, reaction_time: f64) -> LidarSpec {
    LidarSpec {
        fov_h: 2.0 * std::f64::consts::PI,
        fov_v: 30f64.to_radians(),
        fov_h_valid: 90f64.to_radians(),
        range,
        res_v: 2f64.to_radians(),
        res_h: 0.2f64.to_radians(),
        scan_rate: 10.0,
        overlap: 0.2,
        min_density: 100.0,
        reaction_time,
        config: LidarConfig::HorizontalScan,
    }
}

fn sensor_bounds() -> Outcome {
    let c = holybro();
    let a = c.vehicle.limits.alpha_max * c.vehicle.gravity;
    let mut worst = 0.0f64;
    for (range, t_r) in [(50.0, 0.5), (100.0, 0.0), (10.0, 2.0), (250.0, 0.3)] {
        let v = lidar_obstacle_constraints(&c.vehicle, &lidar(range, t_r)).v_g_max;
        worst = worst.max((v * t_r + v * v / (2.0 * a) - range).abs());
    }
    ensure(worst <= 1e-9, || format!("stopping-distance residual {worst:e}"))?;

    // Cast the beam grid onto the ground plane at the density-limited
    // distance and count the returns inside the rectangular footprint.
    let spec = LidarSpec {
        config: LidarConfig::VerticalScan,
        ..lidar(100.0, 0.5)
    };
    let d = lidar_ground_constraints(-10.0, 0.0, &spec).d_max_density;
    let (half_v, half_h) = (spec.fov_v / 2.0, spec.fov_h_valid / 2.0);
    let (ext_x, ext_y) = (d * half_v.tan(), d * half_h.tan());
    let nv = (spec.fov_v / spec.res_v).round() as usize;
    let nh = (spec.fov_h_valid / spec.res_h).round() as usize;
    let mut count = 0usize;
    for i in 0..nv {
        let av = -half_v + (i as f64 + 0.5) * spec.res_v;
        for j in 0..nh {
            let ah = -half_h + (j as f64 + 0.5) * spec.res_h;
            let (x, y) = (d * av.tan(), d * ah.tan());
            if x.abs() <= ext_x && y.abs() <= ext_y {
                count += 1;
            }
        }
    }
    let density = count as f64 / (4.0 * ext_x * ext_y);
    let rel = (density - spec.min_density).abs() / spec.min_density;
    ensure(rel <= 0.02, || format!("brute-force density {density} vs {}", spec.min_density))?;
    let model_rel = (lidar_point_density(d, &spec) - spec.min_density).abs() / spec.min_density;
    ensure(model_rel <= 1e-9, || format!("density model at d_max off by {model_rel:e}"))?;
    Ok(format!(
        "stopping residual {worst:.1e} m; {count} returns over {:.2} m2 at d = {d:.3} m -> {density:.2} pts/m2 ({:.2}% off)",
        4.0 * ext_x * ext_y,
        rel * 100.0
    ))
}

fn constraint_reports() -> Outcome {
    let c = holybro();
    let vp = &c.vehicle;
    let lim = &vp.limits;
    let bp = &c.battery;
    let mut count = 0;

    // (name, builder taking the tested value)
    let vehicle_case = |name: &str, value: f64, expect: bool, x: UavState, omegas: [f64; 4]| -> Result<(), String> {
        let r = check_vehicle_constraints(&x, &omegas, vp);
        let check = r.get(name).ok_or_else(|| format!("no check `{name}`"))?;
        ensure(check.pass == expect, || format!("{name} = {value}: pass = {}, expected {expect}", check.pass))
    };
    let nudge = |v: f64| v.abs().max(1.0) * 1e-9;

    for (name, limit) in [("ground_speed", lim.v_g_max), ("climb_speed", lim.v_c_max)] {
        for (value, expect) in [(limit - nudge(limit), true), (limit, true), (limit + nudge(limit), false)] {
            for sign in [1.0, -1.0] {
                let mut x = UavState::default();
                if name == "ground_speed" {
                    x.velocity = Vector3::new(sign * value * 0.6, sign * value * 0.8, 0.0);
                    // the ground speed itself decides
                    let expect = x.ground_speed() <= limit;
                    vehicle_case(name, value, expect, x, [0.0; 4])?;
                } else {
                    x.velocity.z = sign * value;
                    vehicle_case(name, value, expect, x, [0.0; 4])?;
                }
                count += 1;
            }
        }
    }
    for (value, expect) in [(lim.alpha_max - 1e-9, true), (lim.alpha_max + 1e-9, false)] {
        for att in [EulerAngles::new(value, 0.0, 0.0), EulerAngles::new(0.0, -value, 1.0)] {
            let x = UavState {
                attitude: att,
                ..Default::default()
            };
            vehicle_case("tilt", value, expect, x, [0.0; 4])?;
            count += 1;
        }
    }
    for axis in 0..3 {
        for (value, expect) in [
            (lim.omega_max, true),
            (-lim.omega_max, true),
            (lim.omega_max + 1e-12, false),
            (-lim.omega_max - 1e-12, false),
        ] {
            let mut x = UavState::default();
            x.rates[axis] = value;
            vehicle_case("body_rate", value, expect, x, [0.0; 4])?;
            count += 1;
        }
    }
    for motor in 0..4 {
        for (value, expect) in [
            (lim.motor_speed_max, true),
            (0.0, true),
            (lim.motor_speed_max + nudge(lim.motor_speed_max), false),
        ] {
            let mut omegas = [500.0; 4];
            omegas[motor] = value;
            vehicle_case(&format!("motor_speed_{}", motor + 1), value, expect, UavState::default(), omegas)?;
            count += 1;
        }
    }

    let ns = f64::from(bp.cells_series);
    let nominal = PowertrainOutput {
        soc: 0.5,
        u_b: 15.0,
        i_b: 10.0,
    };
    let pt_case = |name: &str, out: PowertrainOutput, value: f64, expect: bool| -> Result<(), String> {
        let r = check_powertrain_constraints(&out, bp);
        let check = r.get(name).ok_or_else(|| format!("no check `{name}`"))?;
        ensure(check.pass == expect, || format!("{name} = {value}: pass = {}, expected {expect}", check.pass))
    };
    let soc_min = 1.0 - bp.dod_cutoff;
    for (value, expect) in [(soc_min, true), (soc_min - 1e-12, false), (1.0, true)] {
        pt_case("soc", PowertrainOutput { soc: value, ..nominal }, value, expect)?;
        count += 1;
    }
    let (u_lo, u_hi) = (ns * bp.u_cell_min, ns * bp.u_cell_max);
    for (value, expect) in [(u_lo, true), (u_lo - 1e-9, false), (u_hi, true), (u_hi + 1e-9, false)] {
        pt_case("battery_voltage", PowertrainOutput { u_b: value, ..nominal }, value, expect)?;
        count += 1;
    }
    for (value, expect) in [
        (bp.i_discharge_max, true),
        (bp.i_discharge_max + 1e-9, false),
        (-bp.i_charge_max, true),
        (-bp.i_charge_max - 1e-9, false),
    ] {
        pt_case("battery_current", PowertrainOutput { i_b: value, ..nominal }, value, expect)?;
        count += 1;
    }
    Ok(format!("{count} boundary cases over 8 vehicle and 3 power-train limits"))
}
