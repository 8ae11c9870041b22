//! Mesh and contour files, experiment configs, CSV tables and SVG plots.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::Vec3;
use crate::levelset::TriMesh;

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> Error {
    Error::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn parse_f64(path: &Path, line: usize, tok: &str) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| parse_err(path, line, format!("expected a number, got `{tok}`")))?;
    if v.is_finite() {
        Ok(v)
    } else {
        Err(parse_err(path, line, format!("non-finite value `{tok}`")))
    }
}

/// Loads an OFF (`OFF` / `NOFF`) or Wavefront OBJ triangle mesh, chosen by
/// extension. Missing normals are computed from the faces.
pub fn load_mesh(path: &Path) -> Result<TriMesh> {
    let text = fs::read_to_string(path)?;
    let ext = path.extension().and_then(|e| e.to_str()).unwrap_or("").to_ascii_lowercase();
    let (vertices, triangles, normals) = match ext.as_str() {
        "off" => parse_off(path, &text)?,
        "obj" => parse_obj(path, &text)?,
        _ => return Err(parse_err(path, 0, "unknown mesh format, expected .off or .obj")),
    };
    match normals {
        Some(n) => TriMesh::with_normals(vertices, triangles, n),
        None => TriMesh::new(vertices, triangles),
    }
}

type MeshParts = (Vec<Vec3>, Vec<[usize; 3]>, Option<Vec<Vec3>>);

fn parse_off(path: &Path, text: &str) -> Result<MeshParts> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());
    let (ln, header) = lines.next().ok_or_else(|| parse_err(path, 1, "empty file"))?;
    let with_normals = match header.split_whitespace().next() {
        Some("OFF") => false,
        Some("NOFF") => true,
        _ => return Err(parse_err(path, ln, "missing OFF header")),
    };
    // counts may share the header line
    let rest: Vec<&str> = header.split_whitespace().skip(1).collect();
    let (ln, counts) = if rest.is_empty() {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(path, ln, "missing element counts"))?;
        (ln, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (ln, rest)
    };
    if counts.len() < 2 {
        return Err(parse_err(path, ln, "expected vertex and face counts"));
    }
    let nv: usize = counts[0].parse().map_err(|_| parse_err(path, ln, "bad vertex count"))?;
    let nf: usize = counts[1].parse().map_err(|_| parse_err(path, ln, "bad face count"))?;
    let mut vertices = Vec::with_capacity(nv);
    let mut normals = Vec::with_capacity(if with_normals { nv } else { 0 });
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(path, ln, "unexpected end of vertex list"))?;
        let toks: Vec<&str> = l.split_whitespace().collect();
        let need = if with_normals { 6 } else { 3 };
        if toks.len() < need {
            return Err(parse_err(path, ln, format!("expected {need} values per vertex")));
        }
        let v: Vec<f64> = toks[..need].iter().map(|t| parse_f64(path, ln, t)).collect::<Result<_>>()?;
        vertices.push(Vec3::new(v[0], v[1], v[2]));
        if with_normals {
            normals.push(Vec3::new(v[3], v[4], v[5]));
        }
    }
    let mut triangles = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(path, ln, "unexpected end of face list"))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(path, ln, format!("bad index `{t}`"))))
            .collect::<Result<_>>()?;
        if idx.first() != Some(&3) || idx.len() < 4 {
            return Err(parse_err(path, ln, "only triangular faces are supported"));
        }
        if idx[1..4].iter().any(|&i| i >= nv) {
            return Err(parse_err(path, ln, "face index out of range"));
        }
        triangles.push([idx[1], idx[2], idx[3]]);
    }
    Ok((vertices, triangles, with_normals.then_some(normals)))
}

fn parse_obj(path: &Path, text: &str) -> Result<MeshParts> {
    let mut vertices = Vec::new();
    let mut normals = Vec::new();
    let mut triangles = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("v") | Some("vn") => {
                let v: Vec<f64> = toks.take(3).map(|t| parse_f64(path, ln, t)).collect::<Result<_>>()?;
                if v.len() != 3 {
                    return Err(parse_err(path, ln, "expected three coordinates"));
                }
                let v = Vec3::new(v[0], v[1], v[2]);
                if l.starts_with("vn") {
                    normals.push(v);
                } else {
                    vertices.push(v);
                }
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        let first = t.split('/').next().unwrap_or("");
                        let k: i64 = first.parse().map_err(|_| parse_err(path, ln, format!("bad index `{t}`")))?;
                        let n = vertices.len() as i64;
                        let k = if k < 0 { n + k } else { k - 1 };
                        if k < 0 || k >= n {
                            return Err(parse_err(path, ln, "face index out of range"));
                        }
                        Ok(k as usize)
                    })
                    .collect::<Result<_>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(path, ln, "only triangular faces are supported"));
                }
                triangles.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    let normals = (!normals.is_empty() && normals.len() == vertices.len()).then_some(normals);
    Ok((vertices, triangles, normals))
}

/// Writes an OFF file.
pub fn save_off(mesh: &TriMesh, path: &Path) -> Result<()> {
    let mut out = String::new();
    writeln!(out, "OFF\n{} {} 0", mesh.vertices().len(), mesh.triangles().len()).unwrap();
    for v in mesh.vertices() {
        writeln!(out, "{} {} {}", fmt_float(v.x), fmt_float(v.y), fmt_float(v.z)).unwrap();
    }
    for t in mesh.triangles() {
        writeln!(out, "3 {} {} {}", t[0], t[1], t[2]).unwrap();
    }
    fs::write(path, out)?;
    Ok(())
}

const CONTOUR_COLUMNS: [&str; 6] = ["x", "y", "z", "nx", "ny", "nz"];

/// Reads a contour CSV with columns `x,y,z,nx,ny,nz` (header optional).
pub fn load_contour(path: &Path) -> Result<(Vec<Vec3>, Vec<Vec3>)> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_path(path).map_err(|e| csv_err(path, e))?;
    let mut points = Vec::new();
    let mut normals = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let ln = rec.position().map(|p| p.line() as usize).unwrap_or(i + 1);
        if i == 0 && rec.get(0).is_some_and(|f| f.eq_ignore_ascii_case("x")) {
            continue;
        }
        if rec.len() != 6 {
            return Err(parse_err(path, ln, format!("expected 6 columns, got {}", rec.len())));
        }
        let v: Vec<f64> = rec.iter().map(|t| parse_f64(path, ln, t)).collect::<Result<_>>()?;
        let n = Vec3::new(v[3], v[4], v[5]);
        let len = n.norm();
        if !(len > 0.0) {
            return Err(parse_err(path, ln, format!("row {ln} has a zero-length normal")));
        }
        points.push(Vec3::new(v[0], v[1], v[2]));
        normals.push(n / len);
    }
    if points.len() < 3 {
        return Err(Error::TooFewPoints(points.len()));
    }
    Ok((points, normals))
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => parse_err(path, line, format!("{other:?}")),
    }
}

pub fn save_contour(path: &Path, points: &[Vec3], normals: &[Vec3]) -> Result<()> {
    if points.len() != normals.len() {
        return Err(Error::InvalidInput(format!("{} normals for {} points", normals.len(), points.len())));
    }
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    w.write_record(CONTOUR_COLUMNS).map_err(|e| csv_err(path, e))?;
    for (x, n) in points.iter().zip(normals) {
        let row = [x.x, x.y, x.z, n.x, n.y, n.z].map(fmt_float);
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush()?;
    Ok(())
}

/// Shortest-round-trip decimal, at most 17 significant digits.
pub fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:?}")
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Float(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Float(f) => fmt_float(*f),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Cell::Int(i) => Some(*i as f64),
            Cell::Float(f) => Some(*f),
            _ => None,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<u32> for Cell {
    fn from(v: u32) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

/// A rectangular table with a metadata block written as leading `#` lines.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    pub metadata: BTreeMap<String, String>,
}

impl ResultTable {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        ResultTable { columns: columns.into_iter().map(Into::into).collect(), ..Default::default() }
    }

    pub fn push(&mut self, row: Vec<Cell>) -> Result<()> {
        if row.len() != self.columns.len() {
            return Err(Error::InvalidInput(format!("row has {} cells, table has {} columns", row.len(), self.columns.len())));
        }
        self.rows.push(row);
        Ok(())
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn get(&self, row: usize, name: &str) -> Option<&Cell> {
        self.column(name).and_then(|c| self.rows.get(row).map(|r| &r[c]))
    }

    pub fn with_meta(mut self, key: &str, value: impl Into<String>) -> Self {
        self.metadata.insert(key.to_string(), value.into());
        self
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut out = String::new();
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}={v}").unwrap();
        }
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::InvalidInput(e.to_string());
        w.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render)).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        out.push_str(&String::from_utf8(bytes).expect("csv output is utf-8"));
        Ok(out)
    }
}

pub fn emit_table(table: &ResultTable, path: &Path) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, table.to_csv()?)?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq)]
pub struct Series {
    pub label: String,
    pub points: Vec<(f64, f64)>,
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Log-log line chart. `guide_slopes` adds dashed reference lines
/// `y ~ x^slope` anchored at the first point of the first series.
pub fn render_svg_plot(series: &[Series], title: &str, guide_slopes: &[f64]) -> String {
    let (w, h, m) = (640.0, 420.0, 60.0);
    let pts: Vec<(f64, f64)> = series
        .iter()
        .flat_map(|s| s.points.iter().copied())
        .filter(|(x, y)| *x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())
        .map(|(x, y)| (x.log10(), y.log10()))
        .collect();
    let (mut x0, mut x1, mut y0, mut y1) = (0.0, 1.0, 0.0, 1.0);
    if !pts.is_empty() {
        x0 = pts.iter().map(|p| p.0).fold(f64::INFINITY, f64::min).floor();
        x1 = pts.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max).ceil();
        y0 = pts.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).floor();
        y1 = pts.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max).ceil();
        if x1 <= x0 {
            x1 = x0 + 1.0;
        }
        if y1 <= y0 {
            y1 = y0 + 1.0;
        }
    }
    let sx = |x: f64| m + (x - x0) / (x1 - x0) * (w - 2.0 * m);
    let sy = |y: f64| h - m - (y - y0) / (y1 - y0) * (h - 2.0 * m);
    let mut out = String::new();
    writeln!(out, r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#).unwrap();
    writeln!(out, r#"<rect width="{w}" height="{h}" fill="white"/>"#).unwrap();
    writeln!(out, r#"<text x="{}" y="24" text-anchor="middle" font-family="sans-serif" font-size="14">{}</text>"#, w / 2.0, escape(title)).unwrap();
    writeln!(
        out,
        r#"<path d="M{m:.2} {:.2} L{m:.2} {:.2} L{:.2} {:.2}" stroke="black" fill="none"/>"#,
        m,
        h - m,
        w - m,
        h - m
    )
    .unwrap();
    for e in (x0 as i64)..=(x1 as i64) {
        let x = sx(e as f64);
        writeln!(out, r#"<text x="{x:.2}" y="{:.2}" text-anchor="middle" font-family="sans-serif" font-size="11">1e{e}</text>"#, h - m + 16.0).unwrap();
    }
    for e in (y0 as i64)..=(y1 as i64) {
        let y = sy(e as f64);
        writeln!(out, r#"<text x="{:.2}" y="{y:.2}" text-anchor="end" font-family="sans-serif" font-size="11">1e{e}</text>"#, m - 6.0).unwrap();
    }
    if let Some(anchor) = series.iter().flat_map(|s| s.points.first()).find(|(x, y)| *x > 0.0 && *y > 0.0) {
        let (ax, ay) = (anchor.0.log10(), anchor.1.log10());
        for slope in guide_slopes {
            let (bx, by) = (x1, ay + slope * (x1 - ax));
            writeln!(
                out,
                r#"<path d="M{:.2} {:.2} L{:.2} {:.2}" stroke="gray" stroke-dasharray="4 4" fill="none"/>"#,
                sx(ax),
                sy(ay),
                sx(bx),
                sy(by)
            )
            .unwrap();
        }
    }
    for (k, s) in series.iter().enumerate() {
        let color = PALETTE[k % PALETTE.len()];
        let d: Vec<String> = s
            .points
            .iter()
            .filter(|(x, y)| *x > 0.0 && *y > 0.0)
            .enumerate()
            .map(|(i, (x, y))| format!("{}{:.2} {:.2}", if i == 0 { "M" } else { "L" }, sx(x.log10()), sy(y.log10())))
            .collect();
        if !d.is_empty() {
            writeln!(out, r#"<path d="{}" stroke="{color}" stroke-width="2" fill="none"/>"#, d.join(" ")).unwrap();
        }
        writeln!(
            out,
            r#"<text x="{:.2}" y="{:.2}" fill="{color}" font-family="sans-serif" font-size="12">{}</text>"#,
            w - m - 100.0,
            m + 16.0 * k as f64,
            escape(&s.label)
        )
        .unwrap();
    }
    out.push_str("</svg>\n");
    out
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

pub fn emit_svg_plot(series: &[Series], path: &Path, title: &str, guide_slopes: &[f64]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, render_svg_plot(series, title, guide_slopes))?;
    Ok(())
}

/// Flat `key = value` experiment description.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ExperimentConfig {
    pub id: String,
    pub surface: String,
    pub curve: String,
    pub scheme: Option<String>,
    pub ranks: Vec<u32>,
    pub levels: Vec<usize>,
    pub outputs: Vec<PathBuf>,
    pub seed: u64,
    /// Keys not covered by the fields above.
    pub extra: BTreeMap<String, String>,
    /// Files the config refers to, which must exist.
    pub inputs: Vec<PathBuf>,
}

fn parse_list<T: std::str::FromStr>(path: &Path, line: usize, key: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<T>().map_err(|_| parse_err(path, line, format!("bad entry `{s}` in `{key}`"))))
        .collect()
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let base = path.parent().unwrap_or(Path::new(""));
        for (i, raw) in text.lines().enumerate() {
            let ln = i + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| parse_err(path, ln, "expected `key = value`"))?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "id" => cfg.id = value.to_string(),
                "surface" => cfg.surface = value.to_string(),
                "curve" => cfg.curve = value.to_string(),
                "scheme" => cfg.scheme = Some(value.to_string()),
                "ranks" | "p" => cfg.ranks = parse_list(path, ln, key, value)?,
                "levels" => cfg.levels = parse_list(path, ln, key, value)?,
                "outputs" => cfg.outputs = value.split(',').map(|s| base.join(s.trim())).collect(),
                "inputs" => cfg.inputs = value.split(',').map(|s| base.join(s.trim())).collect(),
                "seed" => cfg.seed = value.parse().map_err(|_| parse_err(path, ln, "seed must be an unsigned integer"))?,
                _ => {
                    cfg.extra.insert(key.to_string(), value.to_string());
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(p) = self.ranks.iter().find(|p| !(1..=16).contains(*p)) {
            return Err(Error::InvalidInput(format!("rank {p} outside 1..=16")));
        }
        if self.levels.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput("levels must be strictly increasing".into()));
        }
        if let Some(f) = self.inputs.iter().find(|f| !f.exists()) {
            return Err(Error::InvalidInput(format!("referenced file {} does not exist", f.display())));
        }
        Ok(())
    }

    /// Canonical `key=value` rendering; equal configs render identically.
    pub fn canonical(&self) -> String {
        let join = |v: Vec<String>| v.join(",");
        let mut out = String::new();
        writeln!(out, "id={}", self.id).unwrap();
        writeln!(out, "surface={}", self.surface).unwrap();
        writeln!(out, "curve={}", self.curve).unwrap();
        writeln!(out, "scheme={}", self.scheme.clone().unwrap_or_default()).unwrap();
        writeln!(out, "ranks={}", join(self.ranks.iter().map(|p| p.to_string()).collect())).unwrap();
        writeln!(out, "levels={}", join(self.levels.iter().map(|p| p.to_string()).collect())).unwrap();
        writeln!(out, "outputs={}", join(self.outputs.iter().map(|p| p.display().to_string()).collect())).unwrap();
        writeln!(out, "inputs={}", join(self.inputs.iter().map(|p| p.display().to_string()).collect())).unwrap();
        writeln!(out, "seed={}", self.seed).unwrap();
        for (k, v) in &self.extra {
            writeln!(out, "{k}={v}").unwrap();
        }
        out
    }

    /// SHA-256 of the canonical rendering, hex encoded.
    pub fn hash(&self) -> String {
        Sha256::digest(self.canonical().as_bytes()).iter().fold(String::with_capacity(64), |mut s, b| {
            write!(s, "{b:02x}").unwrap();
            s
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use tempfile::tempdir;

    const OCTAHEDRON: &str = "OFF\n6 8 0\n1 0 0\n0 1 0\n-1 0 0\n0 -1 0\n0 0 1\n0 0 -1\n\
        3 0 1 4\n3 1 2 4\n3 2 3 4\n3 3 0 4\n3 1 0 5\n3 2 1 5\n3 3 2 5\n3 0 3 5\n";

    #[test]
    fn loads_octahedron() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("oct.off");
        fs::write(&p, OCTAHEDRON).unwrap();
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.triangles().len(), 8);
        assert_abs_diff_eq!(m.h(), 2f64.sqrt(), epsilon = 1e-15);
        for (v, n) in m.vertices().iter().zip(m.vertex_normals()) {
            assert_abs_diff_eq!(*v, *n, epsilon = 1e-15);
        }
        let q = dir.path().join("copy.off");
        save_off(&m, &q).unwrap();
        assert_eq!(load_mesh(&q).unwrap(), m);
    }

    #[test]
    fn dangling_edge_is_rejected() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("bad.off");
        let broken = OCTAHEDRON.replace("3 0 3 5\n", "");
        fs::write(&p, broken.replace("6 8 0", "6 7 0")).unwrap();
        assert!(matches!(load_mesh(&p), Err(Error::NonManifold(..))));
    }

    #[test]
    fn obj_with_slashes() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("tet.obj");
        fs::write(&p, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nf 1/1 3/1 2/1\nf 1//1 2//1 4//1\nf 2 3 4\nf 1 4 3\n").unwrap();
        let m = load_mesh(&p).unwrap();
        assert_eq!(m.vertices().len(), 4);
        fs::write(&p, "v 0 0 0\nv 1 0 x\n").unwrap();
        match load_mesh(&p) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn contour_round_trip() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.csv");
        let pts = vec![Vec3::new(0.1, 1.0 / 3.0, 2.0), Vec3::new(1e-17, 5.0, 7.25), Vec3::new(-3.0, 0.7, 1e300)];
        let nrm = vec![Vec3::z(), Vec3::x(), Vec3::new(0.6, 0.8, 0.0)];
        save_contour(&p, &pts, &nrm).unwrap();
        let (a, b) = load_contour(&p).unwrap();
        assert_eq!(a, pts);
        assert_eq!(b, nrm);
    }

    #[test]
    fn contour_errors() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("c.csv");
        fs::write(&p, "x,y,z,nx,ny,nz\n0,0,0,0,0,1\n1,0,0,0,0,0\n0,1,0,0,0,1\n").unwrap();
        match load_contour(&p) {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("row 3"));
            }
            other => panic!("{other:?}"),
        }
        fs::write(&p, "0,0,0,0,0,1\n1,0,0,0,0,1\n").unwrap();
        assert!(matches!(load_contour(&p), Err(Error::TooFewPoints(2))));
    }

    #[test]
    fn table_is_deterministic() {
        let mut t = ResultTable::new(["q", "err"]).with_meta("config_hash", "abc");
        t.push(vec![Cell::from(4usize), Cell::from(0.1)]).unwrap();
        t.push(vec![Cell::from(16usize), Cell::from(None)]).unwrap();
        assert!(t.push(vec![Cell::from(1usize)]).is_err());
        let a = t.to_csv().unwrap();
        assert_eq!(a, t.clone().to_csv().unwrap());
        assert_eq!(a, "# config_hash=abc\nq,err\n4,0.1\n16,\n");
        let x = std::f64::consts::PI / 7.0;
        assert_eq!(fmt_float(x).parse::<f64>().unwrap(), x);
    }

    #[test]
    fn empty_plot_is_valid_svg() {
        let svg = render_svg_plot(&[], "empty", &[1.0]);
        assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
        let s = Series { label: "a<b".into(), points: vec![(1.0, 1.0), (0.5, 0.25)] };
        let svg = render_svg_plot(&[s], "t", &[1.0, 2.0]);
        assert!(svg.contains("a&lt;b"));
        assert_eq!(svg.matches("stroke-dasharray").count(), 2);
    }

    #[test]
    fn config_parse_and_hash() {
        let dir = tempdir().unwrap();
        let p = dir.path().join("exp.cfg");
        let text = "id = t1\nsurface = ellipsoid:1.6,1.3,1.0\ncurve = flower:0.7,0.2,3\nscheme = line\nranks = 2,3\nlevels = 4,16,64\nseed = 7\n";
        let cfg = ExperimentConfig::parse(&p, text).unwrap();
        assert_eq!(cfg.ranks, vec![2, 3]);
        assert_eq!(cfg.levels, vec![4, 16, 64]);
        let mut other = cfg.clone();
        assert_eq!(cfg.hash(), other.hash());
        other.seed = 8;
        assert_ne!(cfg.hash(), other.hash());
        assert!(ExperimentConfig::parse(&p, "levels = 4,4\n").is_err());
        assert!(ExperimentConfig::parse(&p, "ranks = 17\n").is_err());
        assert!(ExperimentConfig::parse(&p, "inputs = missing.csv\n").is_err());
        assert!(matches!(ExperimentConfig::parse(&p, "nonsense\n"), Err(Error::Parse { line: 1, .. })));
    }
}
