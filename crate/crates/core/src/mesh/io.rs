//! OBJ (ASCII) and binary little-endian PLY readers and writers.
//!
//! OBJ: `v x y z [r g b]`, `f` with 1-based (or negative relative) indices in
//! any of the `i`, `i/t`, `i//n`, `i/t/n` forms. Polygons are fan
//! triangulated. `vt`, `vn`, groups and materials are ignored.
//!
//! PLY: `format binary_little_endian 1.0`, one `vertex` element with float
//! `x y z` optionally followed by uchar `red green blue`, and one `face`
//! element with a single `list uchar int` property.

use std::fs;
use std::io::Write;
use std::path::Path;

use nalgebra::Point3;

use super::{MeshError, Result, TriangleMesh};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let path = path.as_ref();
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    match ext.as_deref() {
        Some("obj") => load_obj(path),
        Some("ply") => load_ply(path),
        _ => {
            let bytes = fs::read(path)?;
            if bytes.starts_with(b"ply") {
                read_ply(&bytes)
            } else {
                Err(MeshError::UnsupportedFormat(path.display().to_string()))
            }
        }
    }
}

pub fn load_obj(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let text = fs::read_to_string(path)?;
    read_obj(&text)
}

pub fn load_ply(path: impl AsRef<Path>) -> Result<TriangleMesh> {
    let bytes = fs::read(path)?;
    read_ply(&bytes)
}

fn parse_f64(token: &str, line: usize) -> Result<f64> {
    token.parse::<f64>().map_err(|_| MeshError::Parse {
        line,
        message: format!("invalid number `{token}`"),
    })
}

pub fn read_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut colors: Vec<[f32; 3]> = Vec::new();
    let mut colored: Option<bool> = None;
    let mut triangles = Vec::new();
    // (line, raw index) for every face corner, resolved after all vertices are read
    let mut faces: Vec<(usize, Vec<i64>)> = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let tag = tokens.next().unwrap_or("");
        match tag {
            "v" => {
                let values = tokens
                    .map(|t| parse_f64(t, line))
                    .collect::<Result<Vec<_>>>()?;
                let has_color = match values.len() {
                    3 => false,
                    6 => true,
                    // homogeneous w coordinate
                    4 => false,
                    n => {
                        return Err(MeshError::Parse {
                            line,
                            message: format!("vertex with {n} components"),
                        })
                    }
                };
                match colored {
                    None => colored = Some(has_color),
                    Some(c) if c != has_color => {
                        return Err(MeshError::Parse {
                            line,
                            message: "mixed vertex layouts (with and without colors)".into(),
                        })
                    }
                    _ => {}
                }
                vertices.push(Point3::new(values[0], values[1], values[2]));
                if has_color {
                    colors.push([values[3] as f32, values[4] as f32, values[5] as f32]);
                }
            }
            "f" => {
                let mut corners = Vec::new();
                for t in tokens {
                    let idx = t.split('/').next().unwrap_or("");
                    let value = idx.parse::<i64>().map_err(|_| MeshError::Parse {
                        line,
                        message: format!("invalid face index `{t}`"),
                    })?;
                    if value == 0 {
                        return Err(MeshError::Parse {
                            line,
                            message: "face index 0 (OBJ indices are 1-based)".into(),
                        });
                    }
                    // negative indices are relative to the vertices read so far
                    let absolute = if value < 0 {
                        vertices.len() as i64 + value + 1
                    } else {
                        value
                    };
                    corners.push(absolute);
                }
                if corners.len() < 3 {
                    return Err(MeshError::Parse {
                        line,
                        message: format!("face with {} corners", corners.len()),
                    });
                }
                faces.push((line, corners));
            }
            "vt" | "vn" | "vp" | "o" | "g" | "s" | "usemtl" | "mtllib" | "l" => {}
            other => {
                return Err(MeshError::Parse {
                    line,
                    message: format!("unsupported statement `{other}`"),
                })
            }
        }
    }

    let n = vertices.len();
    for (_, corners) in &faces {
        let tri_index = triangles.len();
        let resolved = corners
            .iter()
            .map(|&c| {
                if c < 1 || c as usize > n {
                    Err(MeshError::IndexOutOfRange {
                        triangle: tri_index,
                        index: (c - 1).max(0) as usize,
                        vertex_count: n,
                    })
                } else {
                    Ok(c as usize - 1)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        for k in 1..resolved.len() - 1 {
            triangles.push([resolved[0], resolved[k], resolved[k + 1]]);
        }
    }

    if triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    let mesh = TriangleMesh {
        vertices,
        triangles,
        colors: if colored == Some(true) {
            Some(colors)
        } else {
            None
        },
    };
    mesh.check_indices()?;
    Ok(mesh)
}

pub fn write_obj(mesh: &TriangleMesh, out: &mut impl Write) -> std::io::Result<()> {
    for (i, v) in mesh.vertices.iter().enumerate() {
        match &mesh.colors {
            Some(c) => writeln!(
                out,
                "v {} {} {} {} {} {}",
                v.x, v.y, v.z, c[i][0], c[i][1], c[i][2]
            )?,
            None => writeln!(out, "v {} {} {}", v.x, v.y, v.z)?,
        }
    }
    for [a, b, c] in &mesh.triangles {
        writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1)?;
    }
    Ok(())
}

#[derive(Debug, PartialEq)]
enum VertexLayout {
    Xyz,
    XyzRgb,
}

struct PlyHeader {
    vertex_count: usize,
    face_count: usize,
    layout: VertexLayout,
    body_offset: usize,
}

fn ply_err(offset: usize, message: impl Into<String>) -> MeshError {
    MeshError::PlyFormat {
        offset,
        message: message.into(),
    }
}

fn parse_ply_header(bytes: &[u8]) -> Result<PlyHeader> {
    const END: &[u8] = b"end_header";
    let end = bytes
        .windows(END.len())
        .position(|w| w == END)
        .ok_or_else(|| ply_err(0, "missing end_header"))?;
    let mut body_offset = end + END.len();
    if bytes.get(body_offset) == Some(&b'\r') {
        body_offset += 1;
    }
    if bytes.get(body_offset) != Some(&b'\n') {
        return Err(ply_err(body_offset, "end_header not followed by newline"));
    }
    body_offset += 1;

    let header = std::str::from_utf8(&bytes[..end])
        .map_err(|_| ply_err(0, "header is not valid UTF-8"))?;
    let mut lines = header.lines().map(str::trim).filter(|l| !l.is_empty());
    if lines.next() != Some("ply") {
        return Err(ply_err(0, "missing `ply` magic"));
    }

    let mut format_ok = false;
    let mut vertex_count = None;
    let mut face_count = None;
    let mut vertex_props: Vec<(String, String)> = Vec::new();
    let mut face_prop_ok = false;
    let mut current: Option<&str> = None;
    let mut offset = 4;
    for line in lines {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        match tokens.as_slice() {
            ["format", "binary_little_endian", "1.0"] => format_ok = true,
            ["format", other, ..] => {
                return Err(ply_err(offset, format!("unsupported PLY format `{other}`")))
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", "vertex", n] => {
                vertex_count = Some(n.parse().map_err(|_| ply_err(offset, "bad vertex count"))?);
                current = Some("vertex");
            }
            ["element", "face", n] => {
                face_count = Some(n.parse().map_err(|_| ply_err(offset, "bad face count"))?);
                current = Some("face");
            }
            ["element", name, ..] => {
                return Err(ply_err(offset, format!("unsupported element `{name}`")))
            }
            ["property", "list", count_ty, index_ty, _name] => {
                if current != Some("face") {
                    return Err(ply_err(offset, "list property outside face element"));
                }
                if *count_ty != "uchar" && *count_ty != "uint8" {
                    return Err(ply_err(offset, format!("face count type `{count_ty}`")));
                }
                if *index_ty != "int" && *index_ty != "int32" {
                    return Err(ply_err(offset, format!("face index type `{index_ty}`")));
                }
                if face_prop_ok {
                    return Err(ply_err(offset, "multiple face properties"));
                }
                face_prop_ok = true;
            }
            ["property", ty, name] => {
                if current != Some("vertex") {
                    return Err(ply_err(offset, "scalar property outside vertex element"));
                }
                vertex_props.push((ty.to_string(), name.to_string()));
            }
            _ => return Err(ply_err(offset, format!("unrecognized header line `{line}`"))),
        }
        offset += line.len() + 1;
    }
    if !format_ok {
        return Err(ply_err(0, "missing format line"));
    }
    let is_float = |t: &str| t == "float" || t == "float32";
    let is_uchar = |t: &str| t == "uchar" || t == "uint8";
    let names: Vec<&str> = vertex_props.iter().map(|(_, n)| n.as_str()).collect();
    let layout = match names.as_slice() {
        ["x", "y", "z"] if vertex_props.iter().all(|(t, _)| is_float(t)) => VertexLayout::Xyz,
        ["x", "y", "z", "red", "green", "blue"]
            if vertex_props[..3].iter().all(|(t, _)| is_float(t))
                && vertex_props[3..].iter().all(|(t, _)| is_uchar(t)) =>
        {
            VertexLayout::XyzRgb
        }
        _ => {
            return Err(ply_err(
                0,
                format!("unsupported vertex layout {vertex_props:?}"),
            ))
        }
    };
    if !face_prop_ok {
        return Err(ply_err(0, "face element lacks a list property"));
    }
    Ok(PlyHeader {
        vertex_count: vertex_count.ok_or_else(|| ply_err(0, "missing vertex element"))?,
        face_count: face_count.ok_or_else(|| ply_err(0, "missing face element"))?,
        layout,
        body_offset,
    })
}

pub fn read_ply(bytes: &[u8]) -> Result<TriangleMesh> {
    let header = parse_ply_header(bytes)?;
    let mut pos = header.body_offset;
    let take = |pos: &mut usize, n: usize| -> Result<&[u8]> {
        let slice = bytes
            .get(*pos..*pos + n)
            .ok_or_else(|| ply_err(*pos, "unexpected end of data"))?;
        *pos += n;
        Ok(slice)
    };

    let mut vertices = Vec::with_capacity(header.vertex_count);
    let mut colors = Vec::new();
    for _ in 0..header.vertex_count {
        let mut xyz = [0.0f64; 3];
        for c in &mut xyz {
            let b = take(&mut pos, 4)?;
            *c = f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64;
        }
        vertices.push(Point3::new(xyz[0], xyz[1], xyz[2]));
        if header.layout == VertexLayout::XyzRgb {
            let b = take(&mut pos, 3)?;
            colors.push([
                b[0] as f32 / 255.0,
                b[1] as f32 / 255.0,
                b[2] as f32 / 255.0,
            ]);
        }
    }

    let mut triangles = Vec::with_capacity(header.face_count);
    for _ in 0..header.face_count {
        let face_offset = pos;
        let count = take(&mut pos, 1)?[0] as usize;
        if count < 3 {
            return Err(ply_err(face_offset, format!("face with {count} corners")));
        }
        let mut corners = Vec::with_capacity(count);
        for _ in 0..count {
            let b = take(&mut pos, 4)?;
            let idx = i32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if idx < 0 || idx as usize >= header.vertex_count {
                return Err(MeshError::IndexOutOfRange {
                    triangle: triangles.len(),
                    index: idx.max(0) as usize,
                    vertex_count: header.vertex_count,
                });
            }
            corners.push(idx as usize);
        }
        for k in 1..count - 1 {
            triangles.push([corners[0], corners[k], corners[k + 1]]);
        }
    }
    if pos != bytes.len() {
        return Err(ply_err(pos, "trailing bytes after face data"));
    }
    if triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    Ok(TriangleMesh {
        vertices,
        triangles,
        colors: if header.layout == VertexLayout::XyzRgb {
            Some(colors)
        } else {
            None
        },
    })
}

pub fn write_ply(mesh: &TriangleMesh, out: &mut impl Write) -> std::io::Result<()> {
    writeln!(out, "ply")?;
    writeln!(out, "format binary_little_endian 1.0")?;
    writeln!(out, "element vertex {}", mesh.vertices.len())?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    if mesh.colors.is_some() {
        writeln!(out, "property uchar red")?;
        writeln!(out, "property uchar green")?;
        writeln!(out, "property uchar blue")?;
    }
    writeln!(out, "element face {}", mesh.triangles.len())?;
    writeln!(out, "property list uchar int vertex_indices")?;
    writeln!(out, "end_header")?;
    for (i, v) in mesh.vertices.iter().enumerate() {
        for c in [v.x, v.y, v.z] {
            out.write_all(&(c as f32).to_le_bytes())?;
        }
        if let Some(colors) = &mesh.colors {
            let rgb = colors[i].map(|c| (c.clamp(0.0, 1.0) * 255.0).round() as u8);
            out.write_all(&rgb)?;
        }
    }
    for tri in &mesh.triangles {
        out.write_all(&[3u8])?;
        for &i in tri {
            out.write_all(&(i as i32).to_le_bytes())?;
        }
    }
    Ok(())
}
