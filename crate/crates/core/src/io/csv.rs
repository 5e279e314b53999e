//! Sweep and branch-energy tables as CSV.
//!
//! Sweep files have the header `tuning,unit_value,intensity`; frames are
//! concatenated and a new frame starts whenever the tuning value changes.
//! `unit_value` is either photon energy in µeV or vacuum wavelength in nm,
//! never both; the unit is chosen by the caller, not stored in the file.

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::fit::ZeemanPoint;
use crate::spectrum::{SweepAxis, SweepMap};
use crate::units::{energy_to_wavelength, wavelength_to_energy};

pub const SWEEP_HEADER: [&str; 3] = ["tuning", "unit_value", "intensity"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnergyUnit {
    #[default]
    MicroElectronVolt,
    Nanometer,
}

impl EnergyUnit {
    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ueV" | "uev" | "µeV" => Some(Self::MicroElectronVolt),
            "nm" => Some(Self::Nanometer),
            _ => None,
        }
    }
}

fn csv_err(line: u64, message: impl Into<String>) -> Error {
    Error::Csv {
        line: line as usize,
        message: message.into(),
    }
}

fn from_csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line());
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        csv::ErrorKind::UnequalLengths { len, expected_len, .. } => {
            csv_err(line, format!("expected {expected_len} fields, found {len}"))
        }
        other => csv_err(line, format!("{other:?}")),
    }
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().has_headers(false).from_writer(w)
}

/// Writes `map` with one row per (frame, grid point). In nm the rows of a
/// frame run in increasing wavelength.
pub fn write_sweep<W: Write>(map: &SweepMap<f64>, unit: EnergyUnit, out: W) -> Result<()> {
    map.validate()?;
    let mut w = writer(out);
    w.write_record(SWEEP_HEADER).map_err(from_csv_error)?;
    for (t, frame) in map.tuning.iter().zip(&map.frames) {
        let rows: Vec<(f64, f64)> = match unit {
            EnergyUnit::MicroElectronVolt => map.energies.iter().copied().zip(frame.iter().copied()).collect(),
            EnergyUnit::Nanometer => map
                .energies
                .iter()
                .zip(frame)
                .rev()
                .map(|(e, i)| Ok((energy_to_wavelength(*e)?, *i)))
                .collect::<Result<_>>()?,
        };
        for (x, i) in rows {
            w.write_record([t.to_string(), x.to_string(), i.to_string()])
                .map_err(from_csv_error)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn parse_field(s: &str, line: u64, what: &str) -> Result<f64> {
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| csv_err(line, format!("{what}: cannot parse {s:?} as a number")))?;
    if !v.is_finite() {
        return Err(csv_err(line, format!("{what}: non-finite value {s:?}")));
    }
    Ok(v)
}

/// Reads a sweep written by [`write_sweep`]. Every frame must share one
/// energy grid; blank lines are rejected.
pub fn read_sweep<R: Read>(input: R, unit: EnergyUnit, axis: SweepAxis) -> Result<SweepMap<f64>> {
    let mut text = String::new();
    let mut input = input;
    input.read_to_string(&mut text)?;
    if let Some(i) = text.lines().position(|l| l.trim().is_empty()) {
        return Err(csv_err(i as u64 + 1, "blank lines are not allowed"));
    }
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(text.as_bytes());
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| csv_err(1, "missing header"))?
        .map_err(from_csv_error)?;
    if header.iter().map(str::trim).ne(SWEEP_HEADER) {
        return Err(csv_err(1, format!("header must be {:?}", SWEEP_HEADER.join(","))));
    }

    let mut tuning: Vec<f64> = Vec::new();
    let mut frames: Vec<Vec<(f64, f64)>> = Vec::new();
    let mut frame_start: Vec<u64> = Vec::new();
    for rec in records {
        let rec = rec.map_err(from_csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(csv_err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let t = parse_field(&rec[0], line, "tuning")?;
        let x = parse_field(&rec[1], line, "unit_value")?;
        let i = parse_field(&rec[2], line, "intensity")?;
        if i < 0.0 {
            return Err(csv_err(line, "intensity must be non-negative"));
        }
        let energy = match unit {
            EnergyUnit::MicroElectronVolt => x,
            EnergyUnit::Nanometer => wavelength_to_energy(x).map_err(|e| csv_err(line, e.to_string()))?,
        };
        if tuning.last() != Some(&t) {
            tuning.push(t);
            frames.push(Vec::new());
            frame_start.push(line);
        }
        frames.last_mut().expect("frame pushed").push((energy, i));
    }
    if frames.is_empty() {
        return Err(csv_err(2, "no data rows"));
    }

    for f in frames.iter_mut() {
        f.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(core::cmp::Ordering::Equal));
    }
    let energies: Vec<f64> = frames[0].iter().map(|p| p.0).collect();
    for (k, f) in frames.iter().enumerate().skip(1) {
        if f.len() != energies.len() {
            return Err(csv_err(
                frame_start[k],
                format!(
                    "frame at tuning {} has {} rows, expected {}",
                    tuning[k],
                    f.len(),
                    energies.len()
                ),
            ));
        }
        let same = f
            .iter()
            .zip(&energies)
            .all(|(p, e)| (p.0 - e).abs() <= 1e-9 * e.abs().max(1.0));
        if !same {
            return Err(csv_err(
                frame_start[k],
                format!("frame at tuning {} uses a different energy grid", tuning[k]),
            ));
        }
    }
    let map = SweepMap {
        axis,
        tuning,
        energies,
        frames: frames.into_iter().map(|f| f.into_iter().map(|p| p.1).collect()).collect(),
    };
    map.validate().map_err(|e| csv_err(frame_start[0], e.to_string()))?;
    Ok(map)
}

/// Header of the branch-energy table in the given unit.
pub fn zeeman_header(unit: EnergyUnit) -> [&'static str; 3] {
    match unit {
        EnergyUnit::MicroElectronVolt => ["field", "e_plus", "e_minus"],
        EnergyUnit::Nanometer => ["field", "lambda_plus", "lambda_minus"],
    }
}

pub fn write_zeeman<W: Write>(points: &[ZeemanPoint<f64>], unit: EnergyUnit, out: W) -> Result<()> {
    let mut w = writer(out);
    w.write_record(zeeman_header(unit)).map_err(from_csv_error)?;
    for p in points {
        let (a, b) = match unit {
            EnergyUnit::MicroElectronVolt => (p.e_plus, p.e_minus),
            EnergyUnit::Nanometer => (energy_to_wavelength(p.e_plus)?, energy_to_wavelength(p.e_minus)?),
        };
        w.write_record([p.field.to_string(), a.to_string(), b.to_string()])
            .map_err(from_csv_error)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a branch-energy table; the unit follows from the header.
pub fn read_zeeman<R: Read>(input: R) -> Result<Vec<ZeemanPoint<f64>>> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(input);
    let mut records = rdr.records();
    let header = records
        .next()
        .ok_or_else(|| csv_err(1, "missing header"))?
        .map_err(from_csv_error)?;
    let unit = [EnergyUnit::MicroElectronVolt, EnergyUnit::Nanometer]
        .into_iter()
        .find(|u| header.iter().map(str::trim).eq(zeeman_header(*u)))
        .ok_or_else(|| csv_err(1, "header must be field,e_plus,e_minus or field,lambda_plus,lambda_minus"))?;
    let mut out = Vec::new();
    for rec in records {
        let rec = rec.map_err(from_csv_error)?;
        let line = rec.position().map_or(0, |p| p.line());
        if rec.len() != 3 {
            return Err(csv_err(line, format!("expected 3 fields, found {}", rec.len())));
        }
        let field = parse_field(&rec[0], line, "field")?;
        let mut vals = [parse_field(&rec[1], line, "plus")?, parse_field(&rec[2], line, "minus")?];
        if unit == EnergyUnit::Nanometer {
            for v in vals.iter_mut() {
                *v = wavelength_to_energy(*v).map_err(|e| csv_err(line, e.to_string()))?;
            }
        }
        out.push(ZeemanPoint {
            field,
            e_plus: vals[0],
            e_minus: vals[1],
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_map() -> SweepMap<f64> {
        SweepMap {
            axis: SweepAxis::Temperature,
            tuning: vec![30.0, 30.5],
            energies: vec![1.0e6, 1.0e6 + 1.5, 1.0e6 + 3.0],
            frames: vec![vec![0.1, 0.25, 1.0 / 3.0], vec![0.0, 2.0, 1e-17]],
        }
    }

    #[test]
    fn sweep_round_trip_uev_is_exact() {
        let map = tiny_map();
        let mut buf = Vec::new();
        write_sweep(&map, EnergyUnit::MicroElectronVolt, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("tuning,unit_value,intensity\n"));
        assert!(!text.contains("\n\n"));
        let back = read_sweep(&buf[..], EnergyUnit::MicroElectronVolt, SweepAxis::Temperature).unwrap();
        assert_eq!(back, map);
    }

    #[test]
    fn sweep_round_trip_nm() {
        let map = tiny_map();
        let mut buf = Vec::new();
        write_sweep(&map, EnergyUnit::Nanometer, &mut buf).unwrap();
        let back = read_sweep(&buf[..], EnergyUnit::Nanometer, SweepAxis::Temperature).unwrap();
        assert_eq!(back.frames, map.frames);
        for (a, b) in back.energies.iter().zip(&map.energies) {
            assert!((a - b).abs() / b < 1e-12);
        }
    }

    #[test]
    fn truncated_file_reports_line() {
        let map = tiny_map();
        let mut buf = Vec::new();
        write_sweep(&map, EnergyUnit::MicroElectronVolt, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let cut: String = text.lines().take(6).map(|l| format!("{l}\n")).collect();
        match read_sweep(cut.as_bytes(), EnergyUnit::MicroElectronVolt, SweepAxis::Temperature) {
            Err(Error::Csv { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        let bad = text.replacen("0.25", "abc", 1);
        match read_sweep(bad.as_bytes(), EnergyUnit::MicroElectronVolt, SweepAxis::Temperature) {
            Err(Error::Csv { line, message }) => {
                assert_eq!(line, 3);
                assert!(message.contains("intensity"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_inputs_rejected() {
        let e = read_sweep("a,b,c\n1,2,3\n".as_bytes(), EnergyUnit::MicroElectronVolt, SweepAxis::Temperature);
        assert!(matches!(e, Err(Error::Csv { line: 1, .. })));
        let e = read_sweep(
            "tuning,unit_value,intensity\n1,2,3\n\n1,3,3\n".as_bytes(),
            EnergyUnit::MicroElectronVolt,
            SweepAxis::Temperature,
        );
        assert!(matches!(e, Err(Error::Csv { line: 3, .. })), "{e:?}");
        let e = read_sweep(
            "tuning,unit_value,intensity\n1,2\n".as_bytes(),
            EnergyUnit::MicroElectronVolt,
            SweepAxis::Temperature,
        );
        assert!(matches!(e, Err(Error::Csv { line: 2, .. })), "{e:?}");
        let e = read_sweep("".as_bytes(), EnergyUnit::MicroElectronVolt, SweepAxis::Temperature);
        assert!(matches!(e, Err(Error::Csv { .. })), "{e:?}");
    }

    #[test]
    fn zeeman_round_trip_both_units() {
        let pts = vec![
            ZeemanPoint {
                field: 0.0,
                e_plus: 1.3e6,
                e_minus: 1.3e6,
            },
            ZeemanPoint {
                field: 7.0,
                e_plus: 1.3e6 - 293.5,
                e_minus: 1.3e6 + 881.5,
            },
        ];
        let mut buf = Vec::new();
        write_zeeman(&pts, EnergyUnit::MicroElectronVolt, &mut buf).unwrap();
        assert_eq!(read_zeeman(&buf[..]).unwrap(), pts);
        let mut buf = Vec::new();
        write_zeeman(&pts, EnergyUnit::Nanometer, &mut buf).unwrap();
        let back = read_zeeman(&buf[..]).unwrap();
        assert!((back[1].e_minus - pts[1].e_minus).abs() / pts[1].e_minus < 1e-12);
    }
}
