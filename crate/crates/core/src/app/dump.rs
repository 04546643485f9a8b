//! Field dumps.
//!
//! Text format: a header line `derham-field <family> <ndofs> <nx> <ny>`
//! followed by one coefficient per line in global DOF order, written in the
//! shortest representation that parses back to the same bits.
//!
//! VTK: legacy ASCII unstructured grid of the unfolded `(nx+1)×(ny+1)`
//! lattice with one value (V0, V2) or vector (V1) per cell, sampled at the
//! cell centre.

use std::fmt::Write as _;
use std::path::Path;

use crate::assembly::DeRhamComplex;
use crate::error::{Error, Result};
use crate::fespace::{Family, Field, Value};

const MAGIC: &str = "derham-field";
const VTK_MAGIC: &str = "# vtk DataFile Version 3.0";

fn family_from_name(name: &str) -> Option<Family> {
    match name {
        "V0" => Some(Family::V0),
        "V1" => Some(Family::V1),
        "V2" => Some(Family::V2),
        _ => None,
    }
}

pub fn to_text(dc: &DeRhamComplex, field: &Field) -> Result<String> {
    dc.space(field.family()).check(field)?;
    let mesh = dc.mesh();
    let mut s = format!(
        "{MAGIC} {} {} {} {}\n",
        field.family().name(),
        field.len(),
        mesh.nx(),
        mesh.ny()
    );
    for v in field.coeffs() {
        writeln!(s, "{v:e}").expect("writing to a String");
    }
    Ok(s)
}

/// Header fields and coefficients of a text dump.
#[derive(Debug, Clone, PartialEq)]
pub struct TextDump {
    pub nx: usize,
    pub ny: usize,
    pub field: Field,
}

pub fn from_text(text: &str) -> Result<TextDump> {
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| Error::Format("empty dump".into()))?;
    let parts: Vec<&str> = header.split_whitespace().collect();
    if parts.len() != 5 || parts[0] != MAGIC {
        return Err(Error::Format(format!("bad header '{header}'")));
    }
    let family = family_from_name(parts[1]).ok_or_else(|| Error::Format(format!("unknown family '{}'", parts[1])))?;
    let num = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad count '{s}'")));
    let (n, nx, ny) = (num(parts[2])?, num(parts[3])?, num(parts[4])?);
    let expected = match family {
        Family::V0 | Family::V2 => nx * ny,
        Family::V1 => 2 * nx * ny,
    };
    if n != expected {
        return Err(Error::Format(format!("{} DOFs inconsistent with a {nx}x{ny} mesh", n)));
    }
    let coeffs = lines
        .filter(|l| !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>().map_err(|_| Error::Format(format!("bad value '{l}'"))))
        .collect::<Result<Vec<f64>>>()?;
    if coeffs.len() != n {
        return Err(Error::Format(format!("expected {n} values, found {}", coeffs.len())));
    }
    Ok(TextDump {
        nx,
        ny,
        field: Field::new(family, coeffs),
    })
}

pub fn to_vtk(dc: &DeRhamComplex, name: &str, field: &Field) -> Result<String> {
    let space = dc.space(field.family());
    space.check(field)?;
    let mesh = dc.mesh();
    let (nx, ny) = (mesh.nx(), mesh.ny());
    let (dx, dy) = (mesh.dx(), mesh.dy());
    let nc = mesh.num_cells();
    let mut s = String::new();
    let w = &mut s;
    let _ = writeln!(w, "{VTK_MAGIC}\n{name}\nASCII\nDATASET UNSTRUCTURED_GRID");
    let _ = writeln!(w, "POINTS {} double", (nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            let _ = writeln!(w, "{:e} {:e} 0", i as f64 * dx, j as f64 * dy);
        }
    }
    let _ = writeln!(w, "CELLS {nc} {}", 5 * nc);
    let p = |i: usize, j: usize| j * (nx + 1) + i;
    for c in mesh.cells() {
        let (i, j) = mesh.cell_coords(c);
        let _ = writeln!(w, "4 {} {} {} {}", p(i, j), p(i + 1, j), p(i + 1, j + 1), p(i, j + 1));
    }
    let _ = writeln!(w, "CELL_TYPES {nc}");
    for _ in 0..nc {
        let _ = writeln!(w, "9");
    }
    let _ = writeln!(w, "CELL_DATA {nc}");
    match field.family() {
        Family::V1 => {
            let _ = writeln!(w, "VECTORS {name} double");
            for c in mesh.cells() {
                let v = match space.evaluate_in_cell(field, c, [0.5, 0.5]) {
                    Value::Vector(v) => v,
                    Value::Scalar(_) => unreachable!("V1 values are vectors"),
                };
                let _ = writeln!(w, "{:e} {:e} 0", v[0], v[1]);
            }
        }
        _ => {
            let _ = writeln!(w, "SCALARS {name} double 1\nLOOKUP_TABLE default");
            for c in mesh.cells() {
                let v = match space.evaluate_in_cell(field, c, [0.5, 0.5]) {
                    Value::Scalar(v) => v,
                    Value::Vector(_) => unreachable!("V0 and V2 values are scalars"),
                };
                let _ = writeln!(w, "{v:e}");
            }
        }
    }
    Ok(s)
}

/// Counts declared by a legacy VTK unstructured grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VtkSummary {
    pub points: usize,
    pub cells: usize,
    pub cell_values: usize,
    pub components: usize,
}

/// Structural check of a legacy ASCII unstructured grid: magic line,
/// section keywords and every declared count against the data present.
pub fn check_vtk(text: &str) -> Result<VtkSummary> {
    let bad = |m: String| Err(Error::Format(m));
    let lines: Vec<&str> = text.lines().collect();
    if lines.len() < 4 || lines[0] != VTK_MAGIC || lines[2] != "ASCII" || lines[3] != "DATASET UNSTRUCTURED_GRID" {
        return bad("missing legacy VTK header".into());
    }
    let mut k = 4;
    let header = |k: usize, key: &str| -> Result<Vec<String>> {
        let l = lines.get(k).ok_or_else(|| Error::Format(format!("missing {key}")))?;
        let parts: Vec<String> = l.split_whitespace().map(str::to_string).collect();
        if parts.first().map(String::as_str) != Some(key) {
            return Err(Error::Format(format!("expected {key}, found '{l}'")));
        }
        Ok(parts)
    };
    let count = |s: &str| s.parse::<usize>().map_err(|_| Error::Format(format!("bad count '{s}'")));
    let numbers = |l: &str, n: usize| -> Result<Vec<f64>> {
        let v: Vec<f64> = l
            .split_whitespace()
            .map(|t| t.parse::<f64>().map_err(|_| Error::Format(format!("bad number '{t}'"))))
            .collect::<Result<_>>()?;
        if v.len() != n {
            return Err(Error::Format(format!("expected {n} numbers in '{l}'")));
        }
        Ok(v)
    };

    let points = count(&header(k, "POINTS")?[1])?;
    k += 1;
    for _ in 0..points {
        numbers(lines.get(k).copied().unwrap_or(""), 3)?;
        k += 1;
    }
    let ch = header(k, "CELLS")?;
    let (cells, size) = (count(&ch[1])?, count(&ch.get(2).cloned().unwrap_or_default())?);
    k += 1;
    let mut used = 0;
    for _ in 0..cells {
        let l = lines.get(k).copied().unwrap_or("");
        let n = count(l.split_whitespace().next().unwrap_or(""))?;
        let ids = numbers(l, n + 1)?;
        if ids[1..].iter().any(|&i| i < 0.0 || i as usize >= points) {
            return bad(format!("cell references a missing point: '{l}'"));
        }
        used += n + 1;
        k += 1;
    }
    if used != size {
        return bad(format!("CELLS size {size} but {used} entries"));
    }
    if count(&header(k, "CELL_TYPES")?[1])? != cells {
        return bad("CELL_TYPES count differs from CELLS".into());
    }
    k += 1 + cells;
    if count(&header(k, "CELL_DATA")?[1])? != cells {
        return bad("CELL_DATA count differs from CELLS".into());
    }
    k += 1;
    let kind = lines.get(k).and_then(|l| l.split_whitespace().next()).unwrap_or("");
    let components = match kind {
        "SCALARS" => {
            k += 2;
            1
        }
        "VECTORS" => {
            k += 1;
            3
        }
        other => return bad(format!("unsupported attribute '{other}'")),
    };
    let mut values = 0;
    while let Some(l) = lines.get(k) {
        if !l.trim().is_empty() {
            numbers(l, components)?;
            values += 1;
        }
        k += 1;
    }
    if values != cells {
        return bad(format!("{values} cell values for {cells} cells"));
    }
    Ok(VtkSummary {
        points,
        cells,
        cell_values: values,
        components,
    })
}

pub fn write_text(dc: &DeRhamComplex, field: &Field, path: &Path) -> Result<()> {
    std::fs::write(path, to_text(dc, field)?).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: &Path) -> Result<TextDump> {
    from_text(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
}

pub fn write_vtk(dc: &DeRhamComplex, name: &str, field: &Field, path: &Path) -> Result<()> {
    std::fs::write(path, to_vtk(dc, name, field)?).map_err(|e| Error::io(path, e))
}
