//! CSV readers and writers for arm pools.
//!
//! Arm-pool files have the header `arm_id,mean_ctr,mean_revenue`; row order
//! is arm index order. Nested child-pool files add a leading `parent`
//! column naming the parent arm index.

use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::types::ArmPool;

pub const ARM_POOL_HEADER: [&str; 3] = ["arm_id", "mean_ctr", "mean_revenue"];
pub const CHILD_POOL_HEADER: [&str; 4] = ["parent", "arm_id", "mean_ctr", "mean_revenue"];
pub const GAIN_HEADER: [&str; 2] = ["arm_id", "g"];

#[derive(Debug, Deserialize)]
struct PoolRow {
    arm_id: u64,
    mean_ctr: f64,
    mean_revenue: f64,
}

#[derive(Debug, Deserialize)]
struct GainRow {
    #[allow(dead_code)]
    arm_id: u64,
    g: f64,
}

#[derive(Debug, Deserialize)]
struct ChildRow {
    parent: usize,
    arm_id: u64,
    mean_ctr: f64,
    mean_revenue: f64,
}

pub(crate) fn open_csv(path: &Path, header: &[&str]) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let found = rdr
        .headers()
        .map_err(|e| Error::parse(path, 1, e.to_string()))?
        .clone();
    if found.iter().ne(header.iter().copied()) {
        return Err(Error::parse(
            path,
            1,
            format!("expected header `{}`, found `{}`", header.join(","), found.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    Ok(rdr)
}

pub(crate) fn rows<T: serde::de::DeserializeOwned>(
    path: &Path,
    rdr: &mut csv::Reader<File>,
) -> Result<Vec<(u64, T)>> {
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            Error::parse(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line());
        let row: T = rec
            .deserialize(None)
            .map_err(|e| Error::parse(path, line, e.to_string()))?;
        out.push((line, row));
    }
    Ok(out)
}

pub fn read_arm_pool(path: impl AsRef<Path>) -> Result<ArmPool> {
    let path = path.as_ref();
    let mut rdr = open_csv(path, &ARM_POOL_HEADER)?;
    let rows: Vec<(u64, PoolRow)> = rows(path, &mut rdr)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput(format!("{} has no arms", path.display())));
    }
    let mut ids = Vec::with_capacity(rows.len());
    let mut ctr = Vec::with_capacity(rows.len());
    let mut rev = Vec::with_capacity(rows.len());
    for (line, r) in rows {
        if !(0.0..=1.0).contains(&r.mean_ctr) || !(0.0..=1.0).contains(&r.mean_revenue) {
            return Err(Error::parse(path, line, "means must lie in [0, 1]"));
        }
        ids.push(r.arm_id);
        ctr.push(r.mean_ctr);
        rev.push(r.mean_revenue);
    }
    ArmPool::with_ids(ids, ctr, rev)
}

pub fn write_arm_pool<W: Write>(out: W, pool: &ArmPool) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let to_err = |e: csv::Error| Error::Config(format!("writing arm pool: {e}"));
    w.write_record(ARM_POOL_HEADER).map_err(to_err)?;
    for i in 0..pool.len() {
        w.write_record([
            pool.ids()[i].to_string(),
            pool.mean_ctr()[i].to_string(),
            pool.mean_revenue()[i].to_string(),
        ])
        .map_err(to_err)?;
    }
    w.flush().map_err(|e| Error::Config(format!("writing arm pool: {e}")))?;
    Ok(())
}

pub fn write_arm_pool_file(path: impl AsRef<Path>, pool: &ArmPool) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_arm_pool(file, pool)
}

/// Reads a per-arm objective vector (`arm_id,g`, arm index order).
pub fn read_gain_vector(path: impl AsRef<Path>) -> Result<Vec<f64>> {
    let path = path.as_ref();
    let mut rdr = open_csv(path, &GAIN_HEADER)?;
    let rows: Vec<(u64, GainRow)> = rows(path, &mut rdr)?;
    rows.into_iter()
        .map(|(line, r)| {
            if r.g.is_finite() {
                Ok(r.g)
            } else {
                Err(Error::parse(path, line, "g must be finite"))
            }
        })
        .collect()
}

/// Reads one child pool per parent arm; every parent in `0..parents` must
/// appear.
pub fn read_child_pools(path: impl AsRef<Path>, parents: usize) -> Result<Vec<ArmPool>> {
    let path = path.as_ref();
    let mut rdr = open_csv(path, &CHILD_POOL_HEADER)?;
    let rows: Vec<(u64, ChildRow)> = rows(path, &mut rdr)?;
    let mut grouped: Vec<(Vec<u64>, Vec<f64>, Vec<f64>)> = vec![Default::default(); parents];
    for (line, r) in rows {
        let Some(g) = grouped.get_mut(r.parent) else {
            return Err(Error::parse(
                path,
                line,
                format!("parent {} out of range for {parents} arms", r.parent),
            ));
        };
        g.0.push(r.arm_id);
        g.1.push(r.mean_ctr);
        g.2.push(r.mean_revenue);
    }
    grouped
        .into_iter()
        .enumerate()
        .map(|(p, (ids, a, b))| {
            if ids.is_empty() {
                return Err(Error::EmptyInput(format!("no children for parent arm {p}")));
            }
            ArmPool::with_ids(ids, a, b)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pool_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("arms.csv");
        let pool = ArmPool::with_ids(vec![4, 9], vec![0.25, 1.0], vec![0.5, 0.125]).unwrap();
        write_arm_pool_file(&path, &pool).unwrap();
        assert_eq!(read_arm_pool(&path).unwrap(), pool);
    }

    #[test]
    fn bad_row_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("arms.csv");
        std::fs::write(&path, "arm_id,mean_ctr,mean_revenue\n0,0.5,0.5\n1,abc,0.5\n").unwrap();
        match read_arm_pool(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn wrong_header_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("arms.csv");
        std::fs::write(&path, "id,ctr,rev\n0,0.5,0.5\n").unwrap();
        assert!(matches!(read_arm_pool(&path), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn child_pools_grouped_by_parent() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("kids.csv");
        std::fs::write(
            &path,
            "parent,arm_id,mean_ctr,mean_revenue\n0,0,0.5,0.5\n1,0,0.2,0.1\n0,1,0.9,0.3\n",
        )
        .unwrap();
        let pools = read_child_pools(&path, 2).unwrap();
        assert_eq!(pools[0].len(), 2);
        assert_eq!(pools[1].len(), 1);
        assert!(read_child_pools(&path, 3).is_err());
    }
}
