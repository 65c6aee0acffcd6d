//! On-disk formats: binary volume files and CSV tables.
//!
//! Volume files start with the magic line `MXC1`, followed by one text header
//! line `dims nx ny nz | spacing hx hy hz | kind K` and a payload of
//! little-endian `f64` pairs `(re, im)` in x-fastest order. CSV numbers use
//! 17 significant digits so that a write/read cycle is lossless.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use faer::Mat;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::grid::BoxGrid;
use crate::impedance::ImpedanceOperator;
use crate::locate::EffectiveMoment;
use crate::recon::{ContrastVolume, FourierSample, FourierTable, Route};

pub const MAGIC: &str = "MXC1";

pub const TABLE_HEADER: [&str; 7] = ["lx", "ly", "lz", "re", "im", "s", "route"];
pub const CENTERS_HEADER: [&str; 6] = ["j", "x", "y", "z", "q_re", "q_im"];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum VolumeKind {
    Contrast,
    Field,
    Impedance,
}

impl VolumeKind {
    pub fn label(self) -> &'static str {
        match self {
            VolumeKind::Contrast => "contrast",
            VolumeKind::Field => "field",
            VolumeKind::Impedance => "impedance",
        }
    }
}

impl fmt::Display for VolumeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for VolumeKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "contrast" => Ok(VolumeKind::Contrast),
            "field" => Ok(VolumeKind::Field),
            "impedance" => Ok(VolumeKind::Impedance),
            _ => Err(Error::Format(format!("unknown volume kind '{s}'"))),
        }
    }
}

/// A complex array on a box lattice (or an impedance matrix with dims `m m 1`).
#[derive(Clone, Debug, PartialEq)]
pub struct VolumeFile {
    pub dims: [usize; 3],
    pub spacing: [f64; 3],
    pub kind: VolumeKind,
    pub data: Vec<C64>,
}

impl VolumeFile {
    pub fn new(dims: [usize; 3], spacing: [f64; 3], kind: VolumeKind, data: Vec<C64>) -> Result<Self> {
        let n = dims[0] * dims[1] * dims[2];
        if data.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: data.len(),
            });
        }
        Ok(Self {
            dims,
            spacing,
            kind,
            data,
        })
    }

    pub fn from_contrast(volume: &ContrastVolume) -> Self {
        let g = volume.grid();
        Self {
            dims: g.cells(),
            spacing: g.spacing(),
            kind: VolumeKind::Contrast,
            data: volume.values().to_vec(),
        }
    }

    /// Entry `(i, j)` is stored at `i + m j`.
    pub fn from_impedance(z: &ImpedanceOperator) -> Self {
        let m = z.dim();
        let a = z.matrix();
        let mut data = Vec::with_capacity(m * m);
        for j in 0..m {
            for i in 0..m {
                data.push(a[(i, j)]);
            }
        }
        Self {
            dims: [m, m, 1],
            spacing: z.patch().grid().spacing(),
            kind: VolumeKind::Impedance,
            data,
        }
    }

    /// Cell-averaged Cartesian components of an edge field, one file per axis.
    pub fn field_components(grid: &BoxGrid, e: &[C64]) -> Result<[VolumeFile; 3]> {
        if e.len() != grid.n_edges() {
            return Err(Error::DimensionMismatch {
                expected: grid.n_edges(),
                found: e.len(),
            });
        }
        let [nx, ny, nz] = grid.cells();
        let comp = |d: usize| {
            let (a, b) = ((d + 1) % 3, (d + 2) % 3);
            let mut out = Vec::with_capacity(grid.n_cells());
            for k in 0..nz {
                for j in 0..ny {
                    for i in 0..nx {
                        let mut acc = C64::new(0.0, 0.0);
                        for sa in 0..2 {
                            for sb in 0..2 {
                                let mut ijk = [i, j, k];
                                ijk[a] += sa;
                                ijk[b] += sb;
                                acc += e[grid.edge_index(d, ijk)];
                            }
                        }
                        out.push(acc / 4.0);
                    }
                }
            }
            VolumeFile {
                dims: grid.cells(),
                spacing: grid.spacing(),
                kind: VolumeKind::Field,
                data: out,
            }
        };
        Ok([comp(0), comp(1), comp(2)])
    }

    /// Matrix view of an impedance-kind file.
    pub fn to_matrix(&self) -> Result<Mat<C64>> {
        if self.kind != VolumeKind::Impedance || self.dims[0] != self.dims[1] || self.dims[2] != 1 {
            return Err(Error::Format("not an impedance matrix file".into()));
        }
        let m = self.dims[0];
        Ok(Mat::from_fn(m, m, |i, j| self.data[i + m * j]))
    }

    pub fn header(&self) -> String {
        let [nx, ny, nz] = self.dims;
        let [hx, hy, hz] = self.spacing;
        format!(
            "dims {nx} {ny} {nz} | spacing {hx:.16e} {hy:.16e} {hz:.16e} | kind {}",
            self.kind
        )
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 16 * self.data.len());
        out.extend_from_slice(MAGIC.as_bytes());
        out.push(b'\n');
        out.extend_from_slice(self.header().as_bytes());
        out.push(b'\n');
        for z in &self.data {
            out.extend_from_slice(&z.re.to_le_bytes());
            out.extend_from_slice(&z.im.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (magic, rest) = split_line(bytes).ok_or_else(|| Error::Format("missing magic line".into()))?;
        if magic != MAGIC.as_bytes() {
            return Err(Error::Format("bad magic".into()));
        }
        let (header, payload) = split_line(rest).ok_or_else(|| Error::Format("missing header line".into()))?;
        let header = std::str::from_utf8(header).map_err(|_| Error::Format("header is not UTF-8".into()))?;
        let (dims, spacing, kind) = parse_header(header)?;
        let n = dims[0] * dims[1] * dims[2];
        if payload.len() != 16 * n {
            return Err(Error::Format(format!(
                "payload holds {} bytes, header implies {}",
                payload.len(),
                16 * n
            )));
        }
        let data = payload
            .chunks_exact(16)
            .map(|c| {
                let re = f64::from_le_bytes(c[..8].try_into().unwrap());
                let im = f64::from_le_bytes(c[8..].try_into().unwrap());
                C64::new(re, im)
            })
            .collect();
        Ok(Self {
            dims,
            spacing,
            kind,
            data,
        })
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes)
    }
}

fn split_line(b: &[u8]) -> Option<(&[u8], &[u8])> {
    let i = b.iter().position(|&c| c == b'\n')?;
    Some((&b[..i], &b[i + 1..]))
}

fn parse_header(h: &str) -> Result<([usize; 3], [f64; 3], VolumeKind)> {
    let bad = || Error::Format(format!("malformed header '{h}'"));
    let parts: Vec<&str> = h.split('|').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let field = |p: &str, key: &str| -> Result<Vec<String>> {
        let mut it = p.split_whitespace();
        if it.next() != Some(key) {
            return Err(bad());
        }
        Ok(it.map(String::from).collect())
    };
    let d = field(parts[0], "dims")?;
    let s = field(parts[1], "spacing")?;
    let k = field(parts[2], "kind")?;
    if d.len() != 3 || s.len() != 3 || k.len() != 1 {
        return Err(bad());
    }
    let mut dims = [0usize; 3];
    let mut spacing = [0f64; 3];
    for a in 0..3 {
        dims[a] = d[a].parse().map_err(|_| bad())?;
        spacing[a] = s[a].parse().map_err(|_| bad())?;
    }
    Ok((dims, spacing, k[0].parse()?))
}

fn num(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(format!("csv: {e}"))
}

fn parse_f64(s: &str) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Format(format!("bad number '{s}'")))
}

fn check_header(r: &mut csv::Reader<&[u8]>, want: &[&str]) -> Result<()> {
    let h = r.headers().map_err(csv_err)?;
    if h.iter().ne(want.iter().copied()) {
        return Err(Error::Format(format!(
            "unexpected CSV header '{}'",
            h.iter().collect::<Vec<_>>().join(",")
        )));
    }
    Ok(())
}

/// Failed samples are written with `nan` values.
pub fn table_to_csv(table: &FourierTable) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(TABLE_HEADER).unwrap();
    for s in &table.samples {
        let v = if s.ok() { s.value } else { C64::new(f64::NAN, f64::NAN) };
        w.write_record([
            num(s.l[0]),
            num(s.l[1]),
            num(s.l[2]),
            num(v.re),
            num(v.im),
            num(s.s),
            table.route.label().to_string(),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

pub fn table_from_csv(text: &str) -> Result<FourierTable> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    check_header(&mut r, &TABLE_HEADER)?;
    let mut route = None;
    let mut samples = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| parse_f64(&rec[i]);
        let rt: Route = rec[6].parse()?;
        if *route.get_or_insert(rt) != rt {
            return Err(Error::Format("mixed routes in one table".into()));
        }
        let value = C64::new(f(3)?, f(4)?);
        let failure = (!value.is_finite()).then(|| "unavailable".to_string());
        samples.push(FourierSample {
            l: [f(0)?, f(1)?, f(2)?],
            value,
            s: f(5)?,
            failure,
        });
    }
    Ok(FourierTable::new(route.unwrap_or(Route::Linearized), samples))
}

pub fn centers_to_csv(moments: &[EffectiveMoment]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CENTERS_HEADER).unwrap();
    for (j, m) in moments.iter().enumerate() {
        w.write_record([
            j.to_string(),
            num(m.center[0]),
            num(m.center[1]),
            num(m.center[2]),
            num(m.scalar.re),
            num(m.scalar.im),
        ])
        .unwrap();
    }
    String::from_utf8(w.into_inner().unwrap()).unwrap()
}

/// Read back centers and scalar moments (tensors come back isotropic).
pub fn centers_from_csv(text: &str) -> Result<Vec<EffectiveMoment>> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    check_header(&mut r, &CENTERS_HEADER)?;
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(csv_err)?;
        let f = |i: usize| parse_f64(&rec[i]);
        let j: usize = rec[0]
            .trim()
            .parse()
            .map_err(|_| Error::Format(format!("bad row index '{}'", &rec[0])))?;
        if j != out.len() {
            return Err(Error::Format(format!("row index {j} out of order")));
        }
        out.push(EffectiveMoment::isotropic(
            [f(1)?, f(2)?, f(3)?],
            C64::new(f(4)?, f(5)?),
            true,
        ));
    }
    Ok(out)
}

pub fn write_text(path: impl AsRef<Path>, text: &str) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_text(path: impl AsRef<Path>) -> Result<String> {
    let path = path.as_ref();
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn volume_bytes_round_trip_bit_exact() {
        let data: Vec<C64> = (0..4 * 5 * 6)
            .map(|i| C64::new((i as f64).sin() * 1e-300, 1.0 / (i as f64 + 0.1)))
            .collect();
        let v = VolumeFile::new([4, 5, 6], [0.1, 1.0 / 3.0, 0.25], VolumeKind::Contrast, data).unwrap();
        let bytes = v.to_bytes();
        let w = VolumeFile::from_bytes(&bytes).unwrap();
        assert_eq!(w.to_bytes(), bytes);
        assert_eq!(w.spacing, v.spacing);
        assert!(v.data.iter().zip(&w.data).all(|(a, b)| a.re.to_bits() == b.re.to_bits() && a.im.to_bits() == b.im.to_bits()));
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let v = VolumeFile::new([1, 1, 2], [1.0; 3], VolumeKind::Field, vec![C64::new(1.0, 2.0); 2]).unwrap();
        let b = v.to_bytes();
        assert!(matches!(VolumeFile::from_bytes(&b[..b.len() - 1]), Err(Error::Format(_))));
        assert!(matches!(VolumeFile::from_bytes(b"MXC2\n"), Err(Error::Format(_))));
    }

    #[test]
    fn empty_table_is_header_only() {
        let t = FourierTable::new(Route::Joint, vec![]);
        let s = table_to_csv(&t);
        assert_eq!(s, "lx,ly,lz,re,im,s,route\n");
        assert!(table_from_csv(&s).unwrap().is_empty());
    }

    #[test]
    fn table_csv_round_trip() {
        let t = FourierTable::new(
            Route::Linearized,
            vec![
                FourierSample {
                    l: [0.1, -2.0 * std::f64::consts::PI, 1e-17],
                    value: C64::new(1.0 / 3.0, -7.25e-9),
                    s: 6.0,
                    failure: None,
                },
                FourierSample {
                    l: [1.0, 0.0, 0.0],
                    value: C64::new(0.0, 0.0),
                    s: 6.0,
                    failure: Some("x".into()),
                },
            ],
        );
        let u = table_from_csv(&table_to_csv(&t)).unwrap();
        assert_eq!(u.samples[0], t.samples[0]);
        assert!(!u.samples[1].ok());
        assert_eq!(u.route, Route::Linearized);
    }

    #[test]
    fn centers_csv_round_trip() {
        let m = vec![
            EffectiveMoment::isotropic([0.3, 0.5, 0.5], C64::new(7.1e-4, 2.6e-4), true),
            EffectiveMoment::isotropic([0.7, 0.5, 0.5], C64::new(-1.0 / 7.0, 0.0), true),
        ];
        let text = centers_to_csv(&m);
        assert_eq!(text.lines().count(), 3);
        assert_eq!(centers_from_csv(&text).unwrap(), m);
    }
}
