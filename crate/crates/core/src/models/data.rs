//! Dataset files: observation tables and point patterns as headed CSV.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// Observed values at observation locations. Columns: `z1[,z2],y`.
#[derive(Clone, Debug, PartialEq)]
pub struct Observations {
    pub points: Vec<Vec<f64>>,
    pub values: Vec<f64>,
}

fn csv_err(e: csv::Error) -> Error {
    Error::Dataset(e.to_string())
}

fn parse_row(rec: &csv::StringRecord) -> Result<Vec<f64>> {
    rec.iter()
        .map(|f| {
            f.trim()
                .parse::<f64>()
                .map_err(|e| Error::Dataset(format!("bad number {f:?}: {e}")))
        })
        .collect()
}

/// Reads an observation table whose last column is the observed value.
pub fn read_observations<R: Read>(reader: R, point_dim: usize) -> Result<Observations> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut obs = Observations {
        points: Vec::new(),
        values: Vec::new(),
    };
    for rec in rdr.records() {
        let row = parse_row(&rec.map_err(csv_err)?)?;
        if row.len() != point_dim + 1 {
            return Err(Error::Dataset(format!(
                "expected {} columns, found {}",
                point_dim + 1,
                row.len()
            )));
        }
        obs.points.push(row[..point_dim].to_vec());
        obs.values.push(row[point_dim]);
    }
    if obs.values.is_empty() {
        return Err(Error::Dataset("no observations".into()));
    }
    Ok(obs)
}

pub fn write_observations<W: Write>(writer: W, obs: &Observations) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let dim = obs.points.first().map_or(0, Vec::len);
    let mut header: Vec<String> = (1..=dim).map(|i| format!("z{i}")).collect();
    header.push("y".into());
    w.write_record(&header).map_err(csv_err)?;
    for (p, y) in obs.points.iter().zip(&obs.values) {
        let mut row: Vec<String> = p.iter().map(|v| format!("{v:.17e}")).collect();
        row.push(format!("{y:.17e}"));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a two-column `z1,z2` point pattern; points must lie in `[0, 1]^2`.
pub fn read_points<R: Read>(reader: R) -> Result<Vec<[f64; 2]>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let mut pts = Vec::new();
    for rec in rdr.records() {
        let row = parse_row(&rec.map_err(csv_err)?)?;
        if row.len() != 2 || row.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Dataset(format!("bad point row {row:?}")));
        }
        pts.push([row[0], row[1]]);
    }
    if pts.is_empty() {
        return Err(Error::Dataset("empty point pattern".into()));
    }
    Ok(pts)
}

pub fn write_points<W: Write>(writer: W, pts: &[[f64; 2]]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["z1", "z2"]).map_err(csv_err)?;
    for p in pts {
        w.write_record([format!("{:.17e}", p[0]), format!("{:.17e}", p[1])])
            .map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn observations_round_trip() {
        let obs = Observations {
            points: vec![vec![0.1, 0.2], vec![0.3, 0.4]],
            values: vec![1.5, -0.1 / 3.0],
        };
        let mut buf = Vec::new();
        write_observations(&mut buf, &obs).unwrap();
        assert_eq!(read_observations(buf.as_slice(), 2).unwrap(), obs);
        assert!(read_observations(buf.as_slice(), 1).is_err());
    }

    #[test]
    fn points_round_trip_and_validation() {
        let pts = vec![[0.1, 0.9], [1.0, 0.0]];
        let mut buf = Vec::new();
        write_points(&mut buf, &pts).unwrap();
        assert_eq!(read_points(buf.as_slice()).unwrap(), pts);
        assert!(read_points("z1,z2\n1.5,0.2\n".as_bytes()).is_err());
    }
}
