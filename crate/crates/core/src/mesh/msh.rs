//! Reader for Gmsh MSH 4.1 ASCII files. Keeps linear tetrahedra and
//! boundary triangles, resolves surface physical tags and names, and counts
//! every other element type as skipped.

use super::{BoundaryKind, BoundaryTri, MeshError, RawMesh};
use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MshError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("unsupported mesh format: {0}")]
    Unsupported(String),
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("line {line}: unknown element type {etype}")]
    UnknownElementType { etype: i32, line: usize },
    #[error("mesh file has no ${0} section")]
    MissingSection(&'static str),
}

/// Parsed MSH file: the element lists plus what is needed to resolve
/// boundary names.
#[derive(Debug)]
pub struct MshFile {
    pub raw: RawMesh,
    /// Physical surface names, keyed by the tag the boundary triangles use.
    pub surface_names: BTreeMap<i32, String>,
    /// Tags that actually occur on boundary triangles.
    pub boundary_tags: BTreeSet<i32>,
    /// Elements of types other than 4-node tetrahedra / 3-node triangles.
    pub skipped_elements: usize,
}

pub fn load_msh(path: &Path) -> Result<MshFile, MshError> {
    let text = std::fs::read_to_string(path).map_err(|source| MshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_msh(&text)
}

/// Resolve `name=kind` assignments against the surfaces of a parsed file.
/// Names match physical surface names; a numeric name matches a raw tag.
/// Every tag used on the boundary must end up assigned.
pub fn tag_map_from_names(
    file: &MshFile,
    assignments: &[(String, BoundaryKind)],
) -> Result<BTreeMap<i32, BoundaryKind>, MeshError> {
    let mut map = BTreeMap::new();
    for (name, kind) in assignments {
        let mut tags: Vec<i32> = file
            .surface_names
            .iter()
            .filter(|(_, n)| *n == name)
            .map(|(t, _)| *t)
            .collect();
        if tags.is_empty() {
            if let Ok(tag) = name.parse::<i32>() {
                if file.boundary_tags.contains(&tag) {
                    tags.push(tag);
                }
            }
        }
        if tags.is_empty() {
            return Err(MeshError::UnknownBoundaryName { name: name.clone() });
        }
        for t in tags {
            map.insert(t, *kind);
        }
    }
    for tag in &file.boundary_tags {
        if !map.contains_key(tag) {
            return Err(MeshError::UnassignedSurface {
                name: file
                    .surface_names
                    .get(tag)
                    .cloned()
                    .unwrap_or_else(|| tag.to_string()),
                tag: *tag,
            });
        }
    }
    Ok(map)
}

/// Node count of each element type we know how to traverse.
fn nodes_per_element(etype: i32) -> Option<usize> {
    Some(match etype {
        1 => 2,   // line
        2 => 3,   // triangle
        3 => 4,   // quadrangle
        4 => 4,   // tetrahedron
        5 => 8,   // hexahedron
        6 => 6,   // prism
        7 => 5,   // pyramid
        8 => 3,   // second order line
        9 => 6,   // second order triangle
        10 => 9,  // second order quadrangle
        11 => 10, // second order tetrahedron
        12 => 27, // second order hexahedron
        13 => 18, // second order prism
        14 => 14, // second order pyramid
        15 => 1,  // point
        16 => 8,  // serendipity quadrangle
        17 => 20, // serendipity hexahedron
        18 => 15, // serendipity prism
        19 => 13, // serendipity pyramid
        20 => 9,
        21 => 10,
        22 => 12,
        23 => 15,
        24 => 15,
        25 => 21,
        26 => 4,
        27 => 5,
        28 => 6,
        29 => 20,
        30 => 35,
        31 => 56,
        _ => return None,
    })
}

struct Cursor<'a> {
    toks: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn new(text: &'a str) -> Self {
        let toks = text
            .lines()
            .enumerate()
            .flat_map(|(i, line)| line.split_whitespace().map(move |t| (i + 1, t)))
            .collect();
        Cursor { toks, pos: 0 }
    }

    fn peek(&self) -> Option<(usize, &'a str)> {
        self.toks.get(self.pos).copied()
    }

    fn line(&self) -> usize {
        self.toks
            .get(self.pos.min(self.toks.len().saturating_sub(1)))
            .map_or(0, |(l, _)| *l)
    }

    fn take(&mut self, what: &str) -> Result<(usize, &'a str), MshError> {
        let t = self.toks.get(self.pos).copied().ok_or(MshError::Parse {
            line: self.line(),
            msg: format!("unexpected end of file while reading {what}"),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn parse<T: FromStr>(&mut self, what: &str) -> Result<T, MshError> {
        let (line, tok) = self.take(what)?;
        tok.parse().map_err(|_| MshError::Parse {
            line,
            msg: format!("expected {what}, found {tok:?}"),
        })
    }

    /// Read a double-quoted string (may span several whitespace tokens).
    fn quoted(&mut self, what: &str) -> Result<String, MshError> {
        let (line, first) = self.take(what)?;
        if !first.starts_with('"') {
            return Err(MshError::Parse {
                line,
                msg: format!("expected quoted {what}, found {first:?}"),
            });
        }
        let mut s = first.to_string();
        while !(s.len() >= 2 && s.ends_with('"')) {
            let (_, next) = self.take(what)?;
            s.push(' ');
            s.push_str(next);
        }
        Ok(s[1..s.len() - 1].to_string())
    }

    /// Consume tokens until `$End<section>`.
    fn skip_section(&mut self, section: &str) -> Result<(), MshError> {
        let end = format!("$End{section}");
        loop {
            let (_, tok) = self.take(&end)?;
            if tok == end {
                return Ok(());
            }
        }
    }

    fn expect(&mut self, lit: &str) -> Result<(), MshError> {
        let (line, tok) = self.take(lit)?;
        if tok == lit {
            Ok(())
        } else {
            Err(MshError::Parse {
                line,
                msg: format!("expected {lit}, found {tok:?}"),
            })
        }
    }
}

pub fn parse_msh(text: &str) -> Result<MshFile, MshError> {
    let mut cur = Cursor::new(text);
    let mut seen_format = false;
    let mut seen_nodes = false;
    let mut seen_elements = false;
    // Physical tag -> name, for dim-2 physical groups.
    let mut physical_surface_names: BTreeMap<i32, String> = BTreeMap::new();
    // Surface entity tag -> physical tag (first one listed).
    let mut surface_physical: BTreeMap<i32, i32> = BTreeMap::new();
    let mut node_index: BTreeMap<u64, usize> = BTreeMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut tets: Vec<[usize; 4]> = Vec::new();
    let mut boundary: Vec<BoundaryTri> = Vec::new();
    let mut skipped = 0usize;

    while let Some((line, tok)) = cur.peek() {
        if !tok.starts_with('$') {
            return Err(MshError::Parse {
                line,
                msg: format!("expected a section header, found {tok:?}"),
            });
        }
        cur.pos += 1;
        let section = &tok[1..];
        match section {
            "MeshFormat" => {
                let (vline, version) = cur.take("format version")?;
                if version != "4.1" {
                    return Err(MshError::Unsupported(format!(
                        "MSH version {version} (line {vline}); only 4.1 is supported"
                    )));
                }
                let file_type: i32 = cur.parse("file type")?;
                if file_type != 0 {
                    return Err(MshError::Unsupported(
                        "binary MSH files; re-export as ASCII".to_string(),
                    ));
                }
                let _data_size: i32 = cur.parse("data size")?;
                cur.expect("$EndMeshFormat")?;
                seen_format = true;
            }
            "PhysicalNames" => {
                let count: usize = cur.parse("physical name count")?;
                for _ in 0..count {
                    let dim: i32 = cur.parse("physical dimension")?;
                    let tag: i32 = cur.parse("physical tag")?;
                    let name = cur.quoted("physical name")?;
                    if dim == 2 {
                        physical_surface_names.insert(tag, name);
                    }
                }
                cur.expect("$EndPhysicalNames")?;
            }
            "Entities" => {
                let n_points: usize = cur.parse("point entity count")?;
                let n_curves: usize = cur.parse("curve entity count")?;
                let n_surfaces: usize = cur.parse("surface entity count")?;
                let n_volumes: usize = cur.parse("volume entity count")?;
                for _ in 0..n_points {
                    let _tag: i32 = cur.parse("point tag")?;
                    for _ in 0..3 {
                        let _: f64 = cur.parse("point coordinate")?;
                    }
                    let n_phys: usize = cur.parse("physical tag count")?;
                    for _ in 0..n_phys {
                        let _: i32 = cur.parse("physical tag")?;
                    }
                }
                let bounded_entity = |cur: &mut Cursor| -> Result<(i32, Option<i32>), MshError> {
                    let tag: i32 = cur.parse("entity tag")?;
                    for _ in 0..6 {
                        let _: f64 = cur.parse("bounding box coordinate")?;
                    }
                    let n_phys: usize = cur.parse("physical tag count")?;
                    let mut phys = None;
                    for i in 0..n_phys {
                        let p: i32 = cur.parse("physical tag")?;
                        if i == 0 {
                            phys = Some(p);
                        }
                    }
                    let n_bnd: usize = cur.parse("bounding entity count")?;
                    for _ in 0..n_bnd {
                        let _: i32 = cur.parse("bounding entity tag")?;
                    }
                    Ok((tag, phys))
                };
                for _ in 0..n_curves {
                    bounded_entity(&mut cur)?;
                }
                for _ in 0..n_surfaces {
                    let (tag, phys) = bounded_entity(&mut cur)?;
                    if let Some(p) = phys {
                        surface_physical.insert(tag, p);
                    }
                }
                for _ in 0..n_volumes {
                    bounded_entity(&mut cur)?;
                }
                cur.expect("$EndEntities")?;
            }
            "Nodes" => {
                let n_blocks: usize = cur.parse("node block count")?;
                let _total: usize = cur.parse("node count")?;
                let _min: u64 = cur.parse("min node tag")?;
                let _max: u64 = cur.parse("max node tag")?;
                for _ in 0..n_blocks {
                    let _dim: i32 = cur.parse("entity dimension")?;
                    let _tag: i32 = cur.parse("entity tag")?;
                    let parametric: i32 = cur.parse("parametric flag")?;
                    if parametric != 0 {
                        return Err(MshError::Unsupported(
                            "parametric node coordinates".to_string(),
                        ));
                    }
                    let n_nodes: usize = cur.parse("node count in block")?;
                    let mut tags = Vec::with_capacity(n_nodes);
                    for _ in 0..n_nodes {
                        tags.push(cur.parse::<u64>("node tag")?);
                    }
                    for tag in tags {
                        let x: f64 = cur.parse("node x")?;
                        let y: f64 = cur.parse("node y")?;
                        let z: f64 = cur.parse("node z")?;
                        node_index.insert(tag, vertices.len());
                        vertices.push([x, y, z]);
                    }
                }
                cur.expect("$EndNodes")?;
                seen_nodes = true;
            }
            "Elements" => {
                let n_blocks: usize = cur.parse("element block count")?;
                let _total: usize = cur.parse("element count")?;
                let _min: u64 = cur.parse("min element tag")?;
                let _max: u64 = cur.parse("max element tag")?;
                for _ in 0..n_blocks {
                    let _dim: i32 = cur.parse("entity dimension")?;
                    let entity: i32 = cur.parse("entity tag")?;
                    let etype_line = cur.line();
                    let etype: i32 = cur.parse("element type")?;
                    let n_elems: usize = cur.parse("element count in block")?;
                    let n_nodes = nodes_per_element(etype).ok_or(MshError::UnknownElementType {
                        etype,
                        line: etype_line,
                    })?;
                    for _ in 0..n_elems {
                        let _etag: u64 = cur.parse("element tag")?;
                        let mut nodes = Vec::with_capacity(n_nodes);
                        for _ in 0..n_nodes {
                            let (nline, ntok) = cur.take("element node tag")?;
                            let tag: u64 = ntok.parse().map_err(|_| MshError::Parse {
                                line: nline,
                                msg: format!("expected node tag, found {ntok:?}"),
                            })?;
                            let idx = *node_index.get(&tag).ok_or(MshError::Parse {
                                line: nline,
                                msg: format!("element references unknown node {tag}"),
                            })?;
                            nodes.push(idx);
                        }
                        match etype {
                            4 => tets.push([nodes[0], nodes[1], nodes[2], nodes[3]]),
                            2 => {
                                let tag = surface_physical.get(&entity).copied().unwrap_or(entity);
                                boundary.push(BoundaryTri {
                                    vertices: [nodes[0], nodes[1], nodes[2]],
                                    tag,
                                });
                            }
                            _ => skipped += 1,
                        }
                    }
                }
                cur.expect("$EndElements")?;
                seen_elements = true;
            }
            other => {
                let owned = other.to_string();
                cur.skip_section(&owned)?;
            }
        }
    }

    if !seen_format {
        return Err(MshError::MissingSection("MeshFormat"));
    }
    if !seen_nodes {
        return Err(MshError::MissingSection("Nodes"));
    }
    if !seen_elements {
        return Err(MshError::MissingSection("Elements"));
    }

    // Names keyed by the tags triangles actually carry (physical tags when
    // the surface has one, entity tags otherwise).
    let mut surface_names = BTreeMap::new();
    for (tag, name) in &physical_surface_names {
        surface_names.insert(*tag, name.clone());
    }
    let boundary_tags = boundary.iter().map(|b| b.tag).collect();

    Ok(MshFile {
        raw: RawMesh {
            vertices,
            tets,
            boundary,
        },
        surface_names,
        boundary_tags,
        skipped_elements: skipped,
    })
}
