use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::vehicle::VehicleParams;

/// What the log records as the vehicle input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LogDrive {
    /// `omega_1 .. omega_N` columns, rad/s.
    MotorSpeeds(usize),
    /// A single `thrust` column, N.
    Thrust,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    /// Motor speeds, or the single total thrust for [`LogDrive::Thrust`].
    pub drive: Vec<f64>,
    pub u_b: f64,
    pub i_b: f64,
    pub soc: f64,
    /// Additional electrical load, W.
    pub p_extra: f64,
}

/// Timestamped telemetry read from CSV.
///
/// Required columns: `t`, either `omega_1..omega_N` or `thrust`, `u_b`,
/// `i_b`, `soc`. An optional `p_extra` column adds electrical load. Other
/// columns are ignored.
#[derive(Debug, Clone, PartialEq)]
pub struct FlightLog {
    pub drive: LogDrive,
    pub records: Vec<LogRecord>,
}

fn malformed(line: usize, message: impl Into<String>) -> Error {
    Error::MalformedLog {
        line,
        message: message.into(),
    }
}

impl FlightLog {
    pub fn from_path(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| malformed(0, format!("{}: {e}", path.display())))?;
        Self::from_reader(file)
    }

    pub fn from_reader<R: Read>(reader: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers().map_err(|e| malformed(1, e.to_string()))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let require = |name: &str| col(name).ok_or_else(|| malformed(1, format!("missing column `{name}`")));
        let t_col = require("t")?;
        let u_col = require("u_b")?;
        let i_col = require("i_b")?;
        let soc_col = require("soc")?;
        let extra_col = col("p_extra");

        let mut omega_cols = Vec::new();
        while let Some(c) = col(&format!("omega_{}", omega_cols.len() + 1)) {
            omega_cols.push(c);
        }
        let (drive, drive_cols) = match (omega_cols.is_empty(), col("thrust")) {
            (false, _) => (LogDrive::MotorSpeeds(omega_cols.len()), omega_cols),
            (true, Some(c)) => (LogDrive::Thrust, vec![c]),
            (true, None) => return Err(malformed(1, "need `omega_1..omega_N` or `thrust` columns")),
        };

        let mut records: Vec<LogRecord> = Vec::new();
        for row in rdr.records() {
            let row = row.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                malformed(line, e.to_string())
            })?;
            let line = row.position().map_or(0, |p| p.line() as usize);
            let field = |c: usize| -> Result<f64> {
                let name = &headers[c];
                let raw = row.get(c).ok_or_else(|| malformed(line, format!("missing `{name}`")))?;
                let v: f64 = raw
                    .parse()
                    .map_err(|_| malformed(line, format!("`{name}` is not a number: {raw:?}")))?;
                if !v.is_finite() {
                    return Err(malformed(line, format!("`{name}` is not finite")));
                }
                Ok(v)
            };
            let rec = LogRecord {
                t: field(t_col)?,
                drive: drive_cols.iter().map(|&c| field(c)).collect::<Result<_>>()?,
                u_b: field(u_col)?,
                i_b: field(i_col)?,
                soc: field(soc_col)?,
                p_extra: match extra_col {
                    Some(c) => field(c)?,
                    None => 0.0,
                },
            };
            if let Some(prev) = records.last() {
                if !(rec.t > prev.t) {
                    return Err(malformed(line, format!("time {} does not increase (previous {})", rec.t, prev.t)));
                }
            }
            if drive == LogDrive::Thrust && rec.drive[0] < 0.0 {
                return Err(malformed(line, "negative thrust"));
            }
            records.push(rec);
        }
        if records.len() < 2 {
            return Err(malformed(0, "need at least two records"));
        }
        Ok(Self { drive, records })
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let io = |e: csv::Error| Error::param("log", e.to_string());
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["t".to_string()];
        match self.drive {
            LogDrive::MotorSpeeds(n) => header.extend((1..=n).map(|i| format!("omega_{i}"))),
            LogDrive::Thrust => header.push("thrust".into()),
        }
        header.extend(["u_b", "i_b", "soc", "p_extra"].map(String::from));
        out.write_record(&header).map_err(io)?;
        for r in &self.records {
            let mut row = vec![r.t];
            row.extend(&r.drive);
            row.extend([r.u_b, r.i_b, r.soc, r.p_extra]);
            out.write_record(row.iter().map(|v| v.to_string())).map_err(io)?;
        }
        out.flush().map_err(|e| Error::param("log", e.to_string()))
    }

    pub fn duration(&self) -> f64 {
        self.records.last().unwrap().t - self.records[0].t
    }

    /// Linear interpolation of a per-record quantity at time `t`, clamped to
    /// the log span.
    pub fn interpolate(&self, t: f64, f: impl Fn(&LogRecord) -> f64) -> f64 {
        let r = &self.records;
        let i = r.partition_point(|x| x.t <= t);
        if i == 0 {
            return f(&r[0]);
        }
        if i == r.len() {
            return f(&r[r.len() - 1]);
        }
        let (a, b) = (&r[i - 1], &r[i]);
        let s = (t - a.t) / (b.t - a.t);
        f(a) + s * (f(b) - f(a))
    }

    /// Motor speeds at record `i`. A thrust log is spread evenly over the
    /// motors.
    pub fn motor_speeds(&self, rec: &LogRecord, vp: &VehicleParams) -> Result<Vec<f64>> {
        match self.drive {
            LogDrive::MotorSpeeds(n) => {
                if n != vp.motor_count() {
                    return Err(Error::DimensionMismatch {
                        expected: vp.motor_count(),
                        got: n,
                    });
                }
                Ok(rec.drive.clone())
            }
            LogDrive::Thrust => {
                let n = vp.motor_count();
                Ok(vec![(rec.drive[0] / (n as f64 * vp.k_f)).sqrt(); n])
            }
        }
    }
}
