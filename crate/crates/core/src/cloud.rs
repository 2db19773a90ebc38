//! Point clouds and their ASCII PLY representation.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Located points with optional RGB colors in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud<T> {
    pub points: Vec<[T; 3]>,
    pub colors: Option<Vec<[T; 3]>>,
}

impl<T: Real> PointCloud<T> {
    pub fn new(points: Vec<[T; 3]>) -> Self {
        Self {
            points,
            colors: None,
        }
    }

    pub fn with_colors(points: Vec<[T; 3]>, colors: Vec<[T; 3]>) -> Result<Self> {
        if points.len() != colors.len() {
            return Err(Error::contract(format!(
                "{} points but {} colors",
                points.len(),
                colors.len()
            )));
        }
        Ok(Self {
            points,
            colors: Some(colors),
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.points
            .iter()
            .all(|p| p.iter().all(|c| c.is_finite()))
    }

    /// Appends another cloud. Colors are kept only if both sides have them.
    pub fn extend(&mut self, other: &PointCloud<T>) {
        match (&mut self.colors, &other.colors) {
            (Some(a), Some(b)) if self.points.len() == a.len() => a.extend_from_slice(b),
            _ => self.colors = None,
        }
        self.points.extend_from_slice(&other.points);
    }

    pub fn translated(&self, v: [T; 3]) -> Self {
        Self {
            points: self
                .points
                .iter()
                .map(|p| [p[0] + v[0], p[1] + v[1], p[2] + v[2]])
                .collect(),
            colors: self.colors.clone(),
        }
    }

    /// ASCII PLY: `element vertex N`, `x y z` and optionally `red green blue`
    /// as 0..255 bytes.
    pub fn write_ply<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "ply")?;
        writeln!(out, "format ascii 1.0")?;
        writeln!(out, "element vertex {}", self.points.len())?;
        writeln!(out, "property float x")?;
        writeln!(out, "property float y")?;
        writeln!(out, "property float z")?;
        if self.colors.is_some() {
            writeln!(out, "property uchar red")?;
            writeln!(out, "property uchar green")?;
            writeln!(out, "property uchar blue")?;
        }
        writeln!(out, "end_header")?;
        for (i, p) in self.points.iter().enumerate() {
            write!(out, "{} {} {}", p[0].as_f64(), p[1].as_f64(), p[2].as_f64())?;
            if let Some(c) = &self.colors {
                let b = |v: T| (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8;
                write!(out, " {} {} {}", b(c[i][0]), b(c[i][1]), b(c[i][2]))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn read_ply<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let mut next = |what: &str| -> Result<(usize, String)> {
            match lines.next() {
                Some((i, Ok(l))) => Ok((i + 1, l)),
                Some((i, Err(e))) => Err(Error::parse(format!("line {}", i + 1), e.to_string())),
                None => Err(Error::parse("end of file", format!("expected {what}"))),
            }
        };
        let (ln, magic) = next("ply magic")?;
        if magic.trim() != "ply" {
            return Err(Error::parse(format!("line {ln}"), "missing 'ply' magic"));
        }
        let mut count: Option<usize> = None;
        let mut props: Vec<String> = Vec::new();
        let mut in_vertex = false;
        loop {
            let (ln, line) = next("end_header")?;
            let words: Vec<&str> = line.split_whitespace().collect();
            match words.as_slice() {
                ["end_header"] => break,
                ["format", "ascii", _] => {}
                ["format", f, ..] => {
                    return Err(Error::parse(
                        format!("line {ln}"),
                        format!("unsupported format {f}"),
                    ))
                }
                ["comment", ..] | ["obj_info", ..] => {}
                ["element", "vertex", n] => {
                    count = Some(n.parse().map_err(|_| {
                        Error::parse(format!("line {ln}"), format!("bad vertex count {n}"))
                    })?);
                    in_vertex = true;
                }
                ["element", ..] => in_vertex = false,
                ["property", "list", ..] if in_vertex => {
                    return Err(Error::parse(
                        format!("line {ln}"),
                        "list properties on vertices are not supported",
                    ))
                }
                ["property", _, name] if in_vertex => props.push((*name).to_string()),
                ["property", ..] => {}
                _ => {
                    return Err(Error::parse(
                        format!("line {ln}"),
                        format!("unexpected header line '{line}'"),
                    ))
                }
            }
        }
        let count = count.ok_or_else(|| Error::parse("header", "no vertex element"))?;
        let idx = |name: &str| props.iter().position(|p| p == name);
        let (xi, yi, zi) = match (idx("x"), idx("y"), idx("z")) {
            (Some(x), Some(y), Some(z)) => (x, y, z),
            _ => return Err(Error::parse("header", "vertex needs x, y and z")),
        };
        let rgb = match (idx("red"), idx("green"), idx("blue")) {
            (Some(r), Some(g), Some(b)) => Some((r, g, b)),
            _ => None,
        };
        let mut points = Vec::with_capacity(count);
        let mut colors = rgb.map(|_| Vec::with_capacity(count));
        for _ in 0..count {
            let (ln, line) = next("vertex row")?;
            let vals: Vec<f64> = line
                .split_whitespace()
                .enumerate()
                .map(|(col, w)| {
                    w.parse::<f64>().map_err(|_| {
                        Error::parse(
                            format!("line {ln}, column {}", col + 1),
                            format!("not a number: '{w}'"),
                        )
                    })
                })
                .collect::<Result<_>>()?;
            if vals.len() < props.len() {
                return Err(Error::parse(
                    format!("line {ln}"),
                    format!("expected {} values, found {}", props.len(), vals.len()),
                ));
            }
            points.push([T::lit(vals[xi]), T::lit(vals[yi]), T::lit(vals[zi])]);
            if let (Some(cs), Some((r, g, b))) = (colors.as_mut(), rgb) {
                let u = |v: f64| T::lit(v / 255.0);
                cs.push([u(vals[r]), u(vals[g]), u(vals[b])]);
            }
        }
        Ok(Self { points, colors })
    }
}
