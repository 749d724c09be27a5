//! Wavefront OBJ and OFF readers/writers (ASCII, triangles only).
//!
//! The OBJ subset is `v` and triangular `f` lines; normal and texture
//! indices inside face corners are ignored on read and never written, since
//! the solver derives normals itself. Coordinates are written with 17
//! significant digits, so a save/load round trip reproduces them exactly.

use crate::error::{Error, Result};
use crate::math::V3;
use crate::mesh::TriMesh;
use std::fmt::Write as _;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase())
            .as_deref()
        {
            Some("obj") => Ok(MeshFormat::Obj),
            Some("off") => Ok(MeshFormat::Off),
            other => Err(Error::UnsupportedFormat(
                other.unwrap_or("<none>").to_string(),
            )),
        }
    }
}

/// Loads a closed triangle mesh, validating topology on the way in.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    let text = std::fs::read_to_string(path)?;
    let (vertices, triangles) = match format {
        MeshFormat::Obj => parse_obj(&text)?,
        MeshFormat::Off => parse_off(&text)?,
    };
    TriMesh::build(vertices, triangles)
}

/// Saves a mesh in the format implied by the file extension.
pub fn save_mesh(mesh: &TriMesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    let text = match format {
        MeshFormat::Obj => write_obj(mesh),
        MeshFormat::Off => write_off(mesh),
    };
    std::fs::write(path, text)?;
    Ok(())
}

fn parse_error(line: usize, message: impl Into<String>) -> Error {
    Error::ParseError {
        line,
        message: message.into(),
    }
}

fn parse_obj(text: &str) -> Result<(Vec<V3>, Vec<[usize; 3]>)> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        match parts.next() {
            Some("v") => {
                let mut coord = [0.0; 3];
                for c in coord.iter_mut() {
                    let tok = parts
                        .next()
                        .ok_or_else(|| parse_error(lineno, "vertex needs three coordinates"))?;
                    *c = tok
                        .parse()
                        .map_err(|_| parse_error(lineno, format!("bad coordinate '{tok}'")))?;
                }
                vertices.push(V3::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let corners: Vec<&str> = parts.collect();
                if corners.len() != 3 {
                    return Err(parse_error(
                        lineno,
                        format!("non-triangular face with {} corners", corners.len()),
                    ));
                }
                let mut tri = [0usize; 3];
                for (t, corner) in tri.iter_mut().zip(&corners) {
                    // `i`, `i/t`, `i//n`, `i/t/n`: only the vertex index is used.
                    let tok = corner.split('/').next().unwrap_or("");
                    let i: i64 = tok
                        .parse()
                        .map_err(|_| parse_error(lineno, format!("bad face index '{corner}'")))?;
                    if i < 1 {
                        return Err(parse_error(lineno, "face indices must be positive"));
                    }
                    *t = (i - 1) as usize;
                }
                triangles.push(tri);
            }
            // Other keywords (vn, vt, o, g, s, usemtl, mtllib) carry no
            // geometry we use.
            _ => {}
        }
    }
    Ok((vertices, triangles))
}

fn parse_off(text: &str) -> Result<(Vec<V3>, Vec<[usize; 3]>)> {
    let mut tokens = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        for tok in line.split_whitespace() {
            tokens.push((idx + 1, tok));
        }
    }
    let mut pos = 0;
    let mut next = |what: &str| -> Result<(usize, &str)> {
        let t = tokens
            .get(pos)
            .copied()
            .ok_or_else(|| parse_error(tokens.last().map_or(1, |t| t.0), format!("missing {what}")))?;
        pos += 1;
        Ok(t)
    };
    let (line0, header) = next("OFF header")?;
    if !header.eq_ignore_ascii_case("off") {
        return Err(parse_error(line0, "expected OFF header"));
    }
    let counts: Result<Vec<usize>> = (0..3)
        .map(|_| {
            let (l, t) = next("count")?;
            t.parse()
                .map_err(|_| parse_error(l, format!("bad count '{t}'")))
        })
        .collect();
    let counts = counts?;
    let (nv, nf) = (counts[0], counts[1]);
    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let mut coord = [0.0; 3];
        for c in coord.iter_mut() {
            let (l, t) = next("coordinate")?;
            *c = t
                .parse()
                .map_err(|_| parse_error(l, format!("bad coordinate '{t}'")))?;
        }
        vertices.push(V3::new(coord[0], coord[1], coord[2]));
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (l, t) = next("face size")?;
        let size: usize = t
            .parse()
            .map_err(|_| parse_error(l, format!("bad face size '{t}'")))?;
        if size != 3 {
            return Err(parse_error(l, format!("non-triangular face with {size} corners")));
        }
        let mut tri = [0usize; 3];
        for v in tri.iter_mut() {
            let (l, t) = next("face index")?;
            *v = t
                .parse()
                .map_err(|_| parse_error(l, format!("bad face index '{t}'")))?;
        }
        triangles.push(tri);
    }
    Ok((vertices, triangles))
}

fn write_obj(mesh: &TriMesh) -> String {
    let mut out = String::new();
    for v in mesh.vertices() {
        let _ = writeln!(out, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}

fn write_off(mesh: &TriMesh) -> String {
    let mut out = String::from("OFF\n");
    let _ = writeln!(
        out,
        "{} {} {}",
        mesh.num_vertices(),
        mesh.num_triangles(),
        mesh.num_edges()
    );
    for v in mesh.vertices() {
        let _ = writeln!(out, "{:.16e} {:.16e} {:.16e}", v.x, v.y, v.z);
    }
    for t in mesh.triangles() {
        let _ = writeln!(out, "3 {} {} {}", t[0], t[1], t[2]);
    }
    out
}
