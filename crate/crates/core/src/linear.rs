//! Hover-point linear models, their Taylor-Lie discretization and the
//! block-diagonal energy-aware LPV model that switches with the active OCV
//! segment.

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::powertrain::{bldc_power, BatteryParams, MotorEscParams, OcvCurve};
use crate::vehicle::VehicleParams;

pub const VEHICLE_STATES: [&str; 12] = [
    "x", "y", "z", "vx", "vy", "vz", "phi", "theta", "psi", "wx", "wy", "wz",
];
pub const VEHICLE_INPUTS: [&str; 4] = ["L", "tau_x", "tau_y", "tau_z"];
pub const WIND_INPUTS: [&str; 3] = ["v_wx", "v_wy", "v_wz"];
pub const ECM_STATES: [&str; 2] = ["DoD", "u_th"];
pub const ECM_INPUTS: [&str; 1] = ["dT"];
pub const ECM_OUTPUTS: [&str; 3] = ["SoC", "u_b", "i_b"];

/// Default discretization orders for the vehicle and battery blocks.
pub const DEFAULT_VEHICLE_ORDER: usize = 2;
pub const DEFAULT_ECM_ORDER: usize = 1;

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct Labels {
    pub states: Vec<String>,
    pub inputs: Vec<String>,
    pub disturbances: Vec<String>,
    pub outputs: Vec<String>,
}

fn owned(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// `x' = A x + B u + H d + E`, `y = C x + D u + y_sp`.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousLinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub e: DVector<f64>,
    pub y_sp: DVector<f64>,
    pub labels: Labels,
}

/// `x(k+1) = A_d x + B_d u + H_d d + E_d`, `y = C_d x + D_d u + y_sp`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteLinearModel {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub h: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
    pub e: DVector<f64>,
    pub y_sp: DVector<f64>,
    pub dt: f64,
    pub labels: Labels,
}

fn expect_len(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

impl ContinuousLinearModel {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn derivative(&self, x: &DVector<f64>, u: &DVector<f64>, d: &DVector<f64>) -> Result<DVector<f64>> {
        expect_len(self.a.ncols(), x.len())?;
        expect_len(self.b.ncols(), u.len())?;
        expect_len(self.h.ncols(), d.len())?;
        Ok(&self.a * x + &self.b * u + &self.h * d + &self.e)
    }

    pub fn output(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        expect_len(self.c.ncols(), x.len())?;
        expect_len(self.d.ncols(), u.len())?;
        Ok(&self.c * x + &self.d * u + &self.y_sp)
    }

    /// Truncated Taylor-Lie discretization of order `order`.
    pub fn discretize(&self, dt: f64, order: usize) -> Result<DiscreteLinearModel> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::param("dt", format!("must be positive, got {dt}")));
        }
        let (a, gamma) = taylor_lie_affine(&self.a, dt, order)?;
        Ok(DiscreteLinearModel {
            a,
            b: &gamma * &self.b,
            h: &gamma * &self.h,
            c: self.c.clone(),
            d: self.d.clone(),
            e: &gamma * &self.e,
            y_sp: self.y_sp.clone(),
            dt,
            labels: self.labels.clone(),
        })
    }
}

impl DiscreteLinearModel {
    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn input_dim(&self) -> usize {
        self.b.ncols()
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn step(&self, x: &DVector<f64>, u: &DVector<f64>, d: &DVector<f64>) -> Result<DVector<f64>> {
        expect_len(self.a.ncols(), x.len())?;
        expect_len(self.b.ncols(), u.len())?;
        expect_len(self.h.ncols(), d.len())?;
        Ok(&self.a * x + &self.b * u + &self.h * d + &self.e)
    }

    pub fn output(&self, x: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        expect_len(self.c.ncols(), x.len())?;
        expect_len(self.d.ncols(), u.len())?;
        Ok(&self.c * x + &self.d * u + &self.y_sp)
    }

    /// Writes every matrix as a labeled CSV block separated by blank lines.
    pub fn write_labeled_csv<W: Write>(&self, w: &mut W) -> io::Result<()> {
        writeln!(w, "dt,{}", self.dt)?;
        let l = &self.labels;
        let value = vec!["value".to_string()];
        type Block<'a> = (&'static str, DMatrix<f64>, &'a [String], &'a [String]);
        let blocks: [Block; 7] = [
            ("A_d", self.a.clone(), &l.states, &l.states),
            ("B_d", self.b.clone(), &l.states, &l.inputs),
            ("H_d", self.h.clone(), &l.states, &l.disturbances),
            ("C_d", self.c.clone(), &l.outputs, &l.states),
            ("D_d", self.d.clone(), &l.outputs, &l.inputs),
            ("E_d", DMatrix::from_column_slice(self.e.len(), 1, self.e.as_slice()), &l.states, &value),
            (
                "y_SP",
                DMatrix::from_column_slice(self.y_sp.len(), 1, self.y_sp.as_slice()),
                &l.outputs,
                &value,
            ),
        ];
        for (name, m, rows, cols) in blocks.iter() {
            writeln!(w)?;
            writeln!(w, "block,{name},{},{}", m.nrows(), m.ncols())?;
            writeln!(w, "{name},{}", cols.join(","))?;
            for (i, row) in rows.iter().enumerate() {
                write!(w, "{row}")?;
                for j in 0..m.ncols() {
                    write!(w, ",{}", m[(i, j)])?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// Returns `(A_d, Gamma)` with `A_d = sum_{k=0}^{N} (A dt)^k / k!` and
/// `Gamma = sum_{k=1}^{N} A^{k-1} dt^k / k!`, so that one step of the affine
/// system `x' = A x + g` with constant `g` reads `A_d x + Gamma g`.
pub fn taylor_lie_affine(a: &DMatrix<f64>, dt: f64, order: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if order < 1 {
        return Err(Error::InvalidOrder(order));
    }
    if !a.is_square() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    let n = a.nrows();
    let adt = a * dt;
    let mut power = DMatrix::identity(n, n);
    let mut a_d = DMatrix::identity(n, n);
    let mut gamma = DMatrix::zeros(n, n);
    for k in 1..=order {
        gamma += &power * (dt / k as f64);
        power = &power * &adt / k as f64;
        a_d += &power;
    }
    Ok((a_d, gamma))
}

/// One Taylor-Lie step of a general `x' = f(t, x)`.
///
/// The Lie derivatives are directional derivatives in `(t, x)` along
/// `(1, f)`; they are evaluated by nested central differences, so `order`
/// above 3 or 4 quickly loses accuracy.
pub fn taylor_lie_step<F>(f: F, t: f64, x: &DVector<f64>, dt: f64, order: usize) -> Result<DVector<f64>>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    if order < 1 {
        return Err(Error::InvalidOrder(order));
    }
    let h = 1e-3 * x.amax().max(1.0);
    let mut next = x + f(t, x) * dt;
    let mut factor = dt;
    for k in 2..=order {
        factor *= dt / k as f64;
        next += lie_derivative(&f, k - 1, t, x, h) * factor;
    }
    Ok(next)
}

fn lie_derivative<F>(f: &F, level: usize, t: f64, x: &DVector<f64>, h: f64) -> DVector<f64>
where
    F: Fn(f64, &DVector<f64>) -> DVector<f64>,
{
    if level == 0 {
        return f(t, x);
    }
    let dir = f(t, x);
    let plus = lie_derivative(f, level - 1, t + h, &(x + &dir * h), h);
    let minus = lie_derivative(f, level - 1, t - h, &(x - &dir * h), h);
    (plus - minus) / (2.0 * h)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Kappas {
    /// Slope of one motor's supply power in the squared speed, W s^2/rad^2.
    pub dc: f64,
    pub dod: f64,
    pub uth: f64,
    pub p: f64,
    pub kappa: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HoverSetPoint {
    pub thrust: f64,
    pub motor_speed: f64,
    /// Supply power of one motor, W.
    pub p_dc: f64,
    pub p_sigma: f64,
    pub i_b: f64,
    /// OCV line the battery linearization uses.
    pub b0: f64,
    pub b1: f64,
    pub kappas: Kappas,
}

/// Set point of a level hover with a full battery, using the first OCV
/// segment.
pub fn hover_set_point(vp: &VehicleParams, bp: &BatteryParams, mp: &MotorEscParams) -> Result<HoverSetPoint> {
    let seg = bp.ocv.segment(0)?;
    hover_set_point_with_ocv(vp, bp, mp, seg.b0, seg.b1)
}

pub fn hover_set_point_with_ocv(
    vp: &VehicleParams,
    bp: &BatteryParams,
    mp: &MotorEscParams,
    b0: f64,
    b1: f64,
) -> Result<HoverSetPoint> {
    let n_m = vp.motor_count() as f64;
    let thrust = vp.weight();
    let omega = (thrust / (n_m * vp.k_f)).sqrt();
    let p_dc = bldc_power(omega, mp).total();
    let p_sigma = n_m * p_dc;
    let (ns, np) = (bp.ns(), bp.np());
    let radicand = 1.0 - 4.0 * bp.r_int * p_sigma / (ns * np * b0 * b0 * mp.eta_esc);
    if !(radicand > 0.0) {
        return Err(Error::PowerInfeasible {
            demand: p_sigma / mp.eta_esc,
            limit: ns * np * b0 * b0 / (4.0 * bp.r_int),
        });
    }
    let kappa_inv = radicand.sqrt();
    let kappa = 1.0 / kappa_inv;
    let (d_f, k_m) = (mp.damping, mp.k_m);
    let dc = mp.k_v * mp.k_v * mp.r_dc * (2.0 * k_m * k_m * omega * omega + 3.0 * k_m * d_f * omega + d_f * d_f)
        + 1.5 * k_m * omega
        + d_f;
    let half = np / (2.0 * bp.r_int);
    Ok(HoverSetPoint {
        thrust,
        motor_speed: omega,
        p_dc,
        p_sigma,
        i_b: half * b0 * (1.0 - kappa_inv),
        b0,
        b1,
        kappas: Kappas {
            dc,
            dod: half * b1 * (1.0 - kappa),
            uth: half * (kappa - 1.0),
            p: kappa / (ns * b0 * mp.eta_esc),
            kappa,
        },
    })
}

/// Vehicle dynamics linearized about hover with yaw `psi_sp`; inputs are
/// lift `L = T - m g` and the body torques, disturbances the wind velocity.
pub fn linearize_vehicle(vp: &VehicleParams, psi_sp: f64) -> ContinuousLinearModel {
    let g = vp.gravity;
    let m = vp.mass;
    let (s, c) = psi_sp.sin_cos();
    let cf = vp.translational_drag;
    let ct = vp.angular_drag;
    let j = vp.inertia;

    let mut a = DMatrix::zeros(12, 12);
    for i in 0..3 {
        a[(i, 3 + i)] = 1.0;
        a[(6 + i, 9 + i)] = 1.0;
        a[(3 + i, 3 + i)] = -cf[i] / m;
        a[(9 + i, 9 + i)] = -ct[i] / j[i];
    }
    a[(3, 6)] = -g * s;
    a[(3, 7)] = -g * c;
    a[(4, 6)] = g * c;
    a[(4, 7)] = -g * s;

    let mut b = DMatrix::zeros(12, 4);
    b[(5, 0)] = -1.0 / m;
    for i in 0..3 {
        b[(9 + i, 1 + i)] = 1.0 / j[i];
    }

    let mut h = DMatrix::zeros(12, 3);
    for i in 0..3 {
        h[(3 + i, i)] = cf[i] / m;
    }

    ContinuousLinearModel {
        a,
        b,
        h,
        c: DMatrix::zeros(0, 12),
        d: DMatrix::zeros(0, 4),
        e: DVector::zeros(12),
        y_sp: DVector::zeros(0),
        labels: Labels {
            states: owned(&VEHICLE_STATES),
            inputs: owned(&VEHICLE_INPUTS),
            disturbances: owned(&WIND_INPUTS),
            outputs: Vec::new(),
        },
    }
}

/// Linear battery model driven by the thrust deviation `dT`.
///
/// The output offset holds the absolute set-point outputs, so `y` is
/// `(SoC, u_b, i_b)` itself rather than a deviation.
pub fn linearize_ecm(bp: &BatteryParams, sp: &HoverSetPoint, vp: &VehicleParams) -> ContinuousLinearModel {
    let (ns, np) = (bp.ns(), bp.np());
    let a_b = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, -1.0 / (bp.r_th * bp.c_th)]);
    let b_b = DVector::from_row_slice(&[bp.coulombic_efficiency / bp.capacity, 1.0 / (np * bp.c_th)]);
    let c_b = DMatrix::from_row_slice(3, 2, &[-1.0, 0.0, ns * sp.b1, -ns, 0.0, 0.0]);
    let d_b = DVector::from_row_slice(&[0.0, -ns * bp.r_int / np, 1.0]);
    let k = &sp.kappas;
    let feedback = DMatrix::from_row_slice(1, 2, &[k.dod, k.uth]);
    let gain = k.p * k.dc / vp.k_f;

    ContinuousLinearModel {
        a: &a_b + &b_b * &feedback,
        b: DMatrix::from_column_slice(2, 1, (&b_b * gain).as_slice()),
        h: DMatrix::zeros(2, 0),
        c: &c_b + &d_b * &feedback,
        d: DMatrix::from_column_slice(3, 1, (&d_b * gain).as_slice()),
        e: &b_b * sp.i_b,
        y_sp: &d_b * sp.i_b + DVector::from_row_slice(&[1.0, ns * sp.b0, 0.0]),
        labels: Labels {
            states: owned(&ECM_STATES),
            inputs: owned(&ECM_INPUTS),
            disturbances: Vec::new(),
            outputs: owned(&ECM_OUTPUTS),
        },
    }
}

/// Block-diagonal combination: states `(x_u, x_e)`, inputs
/// `(L, tau, dT)`, wind acting on the vehicle block, outputs from the
/// battery block only.
pub fn assemble_energy_aware_lpv(
    vehicle: &DiscreteLinearModel,
    ecm: &DiscreteLinearModel,
) -> Result<DiscreteLinearModel> {
    if (vehicle.dt - ecm.dt).abs() > 1e-12 * vehicle.dt.abs().max(ecm.dt.abs()) {
        return Err(Error::SamplingMismatch(vehicle.dt, ecm.dt));
    }
    let (nu, ne) = (vehicle.state_dim(), ecm.state_dim());
    let (mu, me) = (vehicle.input_dim(), ecm.input_dim());
    let nd = vehicle.h.ncols();
    let ny = ecm.output_dim();
    let n = nu + ne;

    let mut a = DMatrix::zeros(n, n);
    a.view_mut((0, 0), (nu, nu)).copy_from(&vehicle.a);
    a.view_mut((nu, nu), (ne, ne)).copy_from(&ecm.a);
    let mut b = DMatrix::zeros(n, mu + me);
    b.view_mut((0, 0), (nu, mu)).copy_from(&vehicle.b);
    b.view_mut((nu, mu), (ne, me)).copy_from(&ecm.b);
    let mut h = DMatrix::zeros(n, nd);
    h.view_mut((0, 0), (nu, nd)).copy_from(&vehicle.h);
    let mut c = DMatrix::zeros(ny, n);
    c.view_mut((0, nu), (ny, ne)).copy_from(&ecm.c);
    let mut d = DMatrix::zeros(ny, mu + me);
    d.view_mut((0, mu), (ny, me)).copy_from(&ecm.d);
    let mut e = DVector::zeros(n);
    e.rows_mut(0, nu).copy_from(&vehicle.e);
    e.rows_mut(nu, ne).copy_from(&ecm.e);

    let cat = |x: &[String], y: &[String]| x.iter().chain(y).cloned().collect::<Vec<_>>();
    Ok(DiscreteLinearModel {
        a,
        b,
        h,
        c,
        d,
        e,
        y_sp: ecm.y_sp.clone(),
        dt: vehicle.dt,
        labels: Labels {
            states: cat(&vehicle.labels.states, &ecm.labels.states),
            inputs: cat(&vehicle.labels.inputs, &ecm.labels.inputs),
            disturbances: vehicle.labels.disturbances.clone(),
            outputs: ecm.labels.outputs.clone(),
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SegmentSelection {
    /// Zero-based segment index.
    pub index: usize,
    pub b0: f64,
    pub b1: f64,
}

pub fn lpv_segment_select(dod: f64, curve: &OcvCurve) -> Result<SegmentSelection> {
    let index = curve.segment_index(dod)?;
    let seg = curve.segment(index)?;
    Ok(SegmentSelection {
        index,
        b0: seg.b0,
        b1: seg.b1,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearOptions {
    pub dt: f64,
    pub vehicle_order: usize,
    pub ecm_order: usize,
    pub psi_sp: f64,
}

impl Default for LinearOptions {
    fn default() -> Self {
        Self {
            dt: 0.1,
            vehicle_order: DEFAULT_VEHICLE_ORDER,
            ecm_order: DEFAULT_ECM_ORDER,
            psi_sp: 0.0,
        }
    }
}

/// Discrete energy-aware model for one OCV segment (zero-based index).
pub fn energy_aware_segment_model(
    vp: &VehicleParams,
    bp: &BatteryParams,
    mp: &MotorEscParams,
    segment: usize,
    opts: &LinearOptions,
) -> Result<(HoverSetPoint, DiscreteLinearModel)> {
    let seg = bp.ocv.segment(segment)?;
    let sp = hover_set_point_with_ocv(vp, bp, mp, seg.b0, seg.b1)?;
    let vehicle = linearize_vehicle(vp, opts.psi_sp).discretize(opts.dt, opts.vehicle_order)?;
    let ecm = linearize_ecm(bp, &sp, vp).discretize(opts.dt, opts.ecm_order)?;
    Ok((sp, assemble_energy_aware_lpv(&vehicle, &ecm)?))
}

/// One discrete model per OCV segment, built once and reused whenever the
/// depth of discharge moves into that segment.
#[derive(Debug, Clone, PartialEq)]
pub struct LpvModel {
    pub curve: OcvCurve,
    pub set_points: Vec<HoverSetPoint>,
    pub models: Vec<DiscreteLinearModel>,
    pub options: LinearOptions,
}

impl LpvModel {
    pub fn build(vp: &VehicleParams, bp: &BatteryParams, mp: &MotorEscParams, opts: &LinearOptions) -> Result<Self> {
        let (set_points, models) = (0..bp.ocv.segment_count())
            .map(|i| energy_aware_segment_model(vp, bp, mp, i, opts))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .unzip();
        Ok(Self {
            curve: bp.ocv.clone(),
            set_points,
            models,
            options: *opts,
        })
    }

    pub fn segment_for(&self, dod: f64) -> Result<usize> {
        Ok(lpv_segment_select(dod, &self.curve)?.index)
    }

    pub fn model(&self, segment: usize) -> &DiscreteLinearModel {
        &self.models[segment]
    }

    /// Thrust of the hover set point, identical for all segments.
    pub fn hover_thrust(&self) -> f64 {
        self.set_points[0].thrust
    }
}
