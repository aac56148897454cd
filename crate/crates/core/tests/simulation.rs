use std::sync::Arc;

use multicopter_energy::energy_aware::{simulate, CombinedState, InputCommand, Schedule, SimOptions};
use multicopter_energy::fixtures::holybro;
use multicopter_energy::powertrain::PowertrainState;
use multicopter_energy::{Error, WindDisturbance};
use nalgebra::Vector3;

fn calm() -> Schedule<WindDisturbance> {
    Schedule::Constant(WindDisturbance::default())
}

fn manoeuvre() -> Schedule<InputCommand> {
    Schedule::Function(Arc::new(|t: f64| InputCommand::Reduced {
        lift: 0.8 * (1.3 * t).sin(),
        torque: Vector3::new(0.02 * (2.0 * t).cos(), -0.015 * t.sin(), 0.004),
    }))
}

/// Tumbling start under a constant command. Inputs are held over each step,
/// so only a constant command leaves the integrator as the sole error source.
fn tumbling() -> (CombinedState, Schedule<InputCommand>) {
    let mut x0 = CombinedState::default();
    x0.uav.velocity = Vector3::new(2.0, -1.0, 0.5);
    x0.uav.attitude = multicopter_energy::EulerAngles::new(0.3, -0.2, 0.5);
    x0.uav.rates = Vector3::new(0.8, -0.5, 0.3);
    let cmd = InputCommand::Reduced {
        lift: 0.8,
        torque: Vector3::new(0.02, -0.015, 0.004),
    };
    (x0, Schedule::Constant(cmd))
}

#[test]
fn rk4_converges_at_fourth_order() {
    let c = holybro();
    let (x0, cmd) = tumbling();
    let run = |dt: f64| {
        let traj = simulate(&x0, &cmd, &calm(), &c, &SimOptions::nonlinear(2.0).with_dt(dt)).unwrap();
        traj.last().state.to_vector()
    };
    let reference = run(0.001);
    let dts = [0.04, 0.02, 0.01];
    let errs: Vec<f64> = dts.iter().map(|&dt| (run(dt) - reference).amax()).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.7, "order {order}, errors {errs:?}");
    }
}

#[test]
fn discharge_is_monotone_and_charge_is_conserved() {
    let c = holybro();
    let climb = Schedule::Constant(InputCommand::Reduced {
        lift: 0.8,
        torque: Vector3::zeros(),
    });
    let traj = simulate(&CombinedState::default(), &climb, &calm(), &c, &SimOptions::nonlinear(60.0)).unwrap();
    assert!(traj.records.windows(2).all(|w| w[1].output.soc <= w[0].output.soc));
    assert!(traj.records.iter().all(|r| r.output.i_b > 0.0));
    let counted = c.battery.coulombic_efficiency * traj.charge_drawn() / c.battery.capacity;
    let dod = traj.last().state.pt.dod;
    assert!((dod - counted).abs() <= 1e-6 * counted, "{dod} vs {counted}");
}

#[test]
fn lpv_switches_segments_with_depth_of_discharge() {
    let base = holybro();
    let c = base.with_ocv(base.ocv_piecewise.clone().unwrap());
    let x0 = CombinedState {
        pt: PowertrainState { dod: 0.195, u_th: 0.0 },
        ..Default::default()
    };
    let hover = Schedule::Constant(InputCommand::Hover);
    let traj = simulate(&x0, &hover, &calm(), &c, &SimOptions::lpv(30.0)).unwrap();
    assert_eq!(traj.records[0].segment, Some(0));
    assert_eq!(traj.last().segment, Some(1));
    let switch = traj.records.iter().position(|r| r.segment == Some(1)).unwrap();
    assert!(traj.records[switch].state.pt.dod > 0.2);
    assert!(traj.records[switch - 1].state.pt.dod <= 0.2);
    // the OCV is continuous, so the terminal voltage barely moves at the switch
    let jump = (traj.records[switch].output.u_b - traj.records[switch - 1].output.u_b).abs();
    assert!(jump < 0.01, "{jump}");
}

#[test]
fn lpv_and_nonlinear_discharge_agree_over_a_manoeuvre() {
    let c = holybro();
    let nl = simulate(&CombinedState::default(), &manoeuvre(), &calm(), &c, &SimOptions::nonlinear(60.0)).unwrap();
    let lpv = simulate(&CombinedState::default(), &manoeuvre(), &calm(), &c, &SimOptions::lpv(60.0)).unwrap();
    let (a, b) = (nl.last().output.soc, lpv.last().output.soc);
    assert!((a - b).abs() < 5e-4, "{a} vs {b}");
}

#[test]
fn wind_pushes_the_hovering_vehicle() {
    let c = holybro();
    let wind = Schedule::Constant(WindDisturbance::new(3.0, 0.0, 0.0));
    let traj = simulate(
        &CombinedState::default(),
        &Schedule::Constant(InputCommand::Hover),
        &wind,
        &c,
        &SimOptions::nonlinear(5.0),
    )
    .unwrap();
    let v = traj.last().state.uav.velocity;
    assert!(v.x > 0.0 && v.x < 3.0);
}

#[test]
fn infeasible_power_halts_only_when_asked() {
    let c = holybro();
    let x0 = CombinedState {
        pt: PowertrainState { dod: 0.0, u_th: 4.0 },
        ..Default::default()
    };
    let hover = Schedule::Constant(InputCommand::Hover);
    let free = simulate(&x0, &hover, &calm(), &c, &SimOptions::nonlinear(0.1));
    assert!(matches!(free, Err(Error::PowerInfeasible { .. })));
    let mut opts = SimOptions::nonlinear(0.1);
    opts.halt_on_violation = true;
    assert!(matches!(
        simulate(&x0, &hover, &calm(), &c, &opts),
        Err(Error::ConstraintHalt { .. })
    ));
}
