//! Point clouds as CSV: `x,y[,z],label[,nx,ny[,nz],H]` with a header row.

use std::io::{BufRead, Write};

use super::{Point, PointCloud, PointLabel};
use crate::error::{Error, Result};

const AXES: [&str; 3] = ["x", "y", "z"];
const NORMAL_AXES: [&str; 3] = ["nx", "ny", "nz"];

pub fn write_point_cloud_csv<W: Write>(cloud: &PointCloud, mut out: W) -> Result<()> {
    let dim = cloud.dim();
    let mut header: Vec<&str> = AXES[..dim].to_vec();
    header.push("label");
    let with_surface = cloud.normals().is_some() && cloud.mean_curvatures().is_some();
    if with_surface {
        header.extend_from_slice(&NORMAL_AXES[..dim]);
        header.push("H");
    }
    writeln!(out, "{}", header.join(","))?;
    for i in 0..cloud.len() {
        let mut fields: Vec<String> = cloud.coords(i).iter().map(|v| v.to_string()).collect();
        fields.push(cloud.labels()[i].as_str().to_string());
        if with_surface {
            let n = cloud.normals().unwrap()[i];
            fields.extend(n[..dim].iter().map(|v| v.to_string()));
            fields.push(cloud.mean_curvatures().unwrap()[i].to_string());
        }
        writeln!(out, "{}", fields.join(","))?;
    }
    Ok(())
}

pub fn read_point_cloud_csv<R: BufRead>(input: R) -> Result<PointCloud> {
    let mut lines = input.lines();
    let header = lines.next().ok_or(Error::Parse { line: 1, reason: "missing header".into() })??;
    let columns: Vec<&str> = header.trim().split(',').collect();
    let (dim, with_surface) = match columns.as_slice() {
        ["x", "y", "label"] => (2, false),
        ["x", "y", "z", "label"] => (3, false),
        ["x", "y", "label", "nx", "ny", "H"] => (2, true),
        ["x", "y", "z", "label", "nx", "ny", "nz", "H"] => (3, true),
        _ => return Err(Error::Parse { line: 1, reason: format!("unrecognised header '{header}'") }),
    };
    let mut points = Vec::new();
    let mut labels = Vec::new();
    let mut normals = Vec::new();
    let mut curvatures = Vec::new();
    for (offset, line) in lines.enumerate() {
        let line_no = offset + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.trim().split(',').collect();
        if fields.len() != columns.len() {
            return Err(Error::Parse {
                line: line_no,
                reason: format!("expected {} fields, found {}", columns.len(), fields.len()),
            });
        }
        let num = |s: &str| -> Result<f64> {
            s.parse::<f64>()
                .map_err(|e| Error::Parse { line: line_no, reason: format!("'{s}': {e}") })
        };
        let mut p: Point = [0.0; 3];
        for k in 0..dim {
            p[k] = num(fields[k])?;
        }
        points.push(p);
        labels.push(match fields[dim] {
            "interior" => PointLabel::Interior,
            "boundary" => PointLabel::Boundary,
            other => return Err(Error::Parse { line: line_no, reason: format!("unknown label '{other}'") }),
        });
        if with_surface {
            let mut n: Point = [0.0; 3];
            for k in 0..dim {
                n[k] = num(fields[dim + 1 + k])?;
            }
            normals.push(n);
            curvatures.push(num(fields[2 * dim + 1])?);
        }
    }
    let cloud = PointCloud::new(dim, points, labels)?;
    if with_surface {
        cloud.with_normals(normals)?.with_mean_curvatures(curvatures)
    } else {
        Ok(cloud)
    }
}
