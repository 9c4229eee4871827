//! Minimal binary field format.
//!
//! ```text
//! magic      4 bytes  "QLH1"
//! dim        u32
//! points     3 x u32  (unused axes hold 1)
//! extents    3 x f64  (unused axes hold 0)
//! time       f64
//! kind       u8       0 real, 1 complex, 2 vector, 3 symmetric tensor
//! scalar     u8       1 = f64
//! components u32
//! payload    components x prod(points) f64, component-major, each
//!            component row-major over (x, y, z) with z fastest
//! ```
//!
//! All integers and floats are little-endian. The grid origin is implied
//! to be `-L/2` on every axis.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::grid::{sym_len, ComplexField, GridSpec, RealField, SymTensorField, VectorField};

pub const MAGIC: &[u8; 4] = b"QLH1";
const SCALAR_F64: u8 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FieldKind {
    Real,
    Complex,
    Vector,
    SymTensor,
}

impl FieldKind {
    fn tag(self) -> u8 {
        match self {
            FieldKind::Real => 0,
            FieldKind::Complex => 1,
            FieldKind::Vector => 2,
            FieldKind::SymTensor => 3,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            0 => FieldKind::Real,
            1 => FieldKind::Complex,
            2 => FieldKind::Vector,
            3 => FieldKind::SymTensor,
            t => return Err(Error::Format(format!("unknown field kind tag {t}"))),
        })
    }

    fn components(self, dim: usize) -> usize {
        match self {
            FieldKind::Real => 1,
            FieldKind::Complex => 2,
            FieldKind::Vector => dim,
            FieldKind::SymTensor => sym_len(dim),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FieldFileHeader {
    pub dim: usize,
    pub points: [usize; 3],
    pub extents: [f64; 3],
    pub time: f64,
    pub kind: FieldKind,
    pub components: usize,
}

impl FieldFileHeader {
    /// Number of f64 values in the payload.
    pub fn payload_len(&self) -> usize {
        self.components * self.points.iter().product::<usize>()
    }

    pub fn grid(&self) -> Result<GridSpec> {
        let d = self.dim;
        let origin: Vec<f64> = self.extents[..d].iter().map(|l| -0.5 * l).collect();
        GridSpec::new(d, &self.extents[..d], &self.points[..d], &origin)
    }
}

/// Header plus component arrays.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldFile {
    pub header: FieldFileHeader,
    pub data: Vec<Vec<f64>>,
}

impl FieldFile {
    fn new(grid: &GridSpec, time: f64, kind: FieldKind, data: Vec<Vec<f64>>) -> Self {
        let d = grid.dim();
        let mut extents = [0.0; 3];
        for (a, e) in extents.iter_mut().enumerate().take(d) {
            *e = grid.extent(a);
        }
        let mut points = [1; 3];
        for (a, p) in points.iter_mut().enumerate().take(d) {
            *p = grid.points(a);
        }
        FieldFile {
            header: FieldFileHeader {
                dim: d,
                points,
                extents,
                time,
                kind,
                components: data.len(),
            },
            data,
        }
    }

    pub fn real(f: &RealField, time: f64) -> Self {
        Self::new(f.grid(), time, FieldKind::Real, vec![f.values().to_vec()])
    }

    pub fn complex(f: &ComplexField, time: f64) -> Self {
        let re = f.values().iter().map(|z| z.re).collect();
        let im = f.values().iter().map(|z| z.im).collect();
        Self::new(f.grid(), time, FieldKind::Complex, vec![re, im])
    }

    pub fn vector(f: &VectorField, time: f64) -> Self {
        let data = (0..f.grid().dim())
            .map(|a| f.component(a).to_vec())
            .collect();
        Self::new(f.grid(), time, FieldKind::Vector, data)
    }

    pub fn sym_tensor(f: &SymTensorField, time: f64) -> Self {
        let d = f.grid().dim();
        let mut data = Vec::new();
        for i in 0..d {
            for j in i..d {
                data.push(f.get(i, j).to_vec());
            }
        }
        Self::new(f.grid(), time, FieldKind::SymTensor, data)
    }

    pub fn to_real(&self) -> Result<RealField> {
        self.expect(FieldKind::Real)?;
        Ok(RealField::from_vec(
            &self.header.grid()?,
            self.data[0].clone(),
        ))
    }

    pub fn to_complex(&self) -> Result<ComplexField> {
        self.expect(FieldKind::Complex)?;
        let vals = self.data[0]
            .iter()
            .zip(&self.data[1])
            .map(|(r, i)| Complex64::new(*r, *i))
            .collect();
        Ok(ComplexField::from_vec(&self.header.grid()?, vals))
    }

    fn expect(&self, kind: FieldKind) -> Result<()> {
        if self.header.kind != kind {
            return Err(Error::Format(format!(
                "expected a {kind:?} field, found {:?}",
                self.header.kind
            )));
        }
        Ok(())
    }

    pub fn write_to(&self, w: &mut impl Write) -> Result<()> {
        let h = &self.header;
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(h.dim as u32)?;
        for p in h.points {
            w.write_u32::<LittleEndian>(p as u32)?;
        }
        for e in h.extents {
            w.write_f64::<LittleEndian>(e)?;
        }
        w.write_f64::<LittleEndian>(h.time)?;
        w.write_u8(h.kind.tag())?;
        w.write_u8(SCALAR_F64)?;
        w.write_u32::<LittleEndian>(h.components as u32)?;
        for comp in &self.data {
            for v in comp {
                w.write_f64::<LittleEndian>(*v)?;
            }
        }
        Ok(())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(64 + 8 * self.header.payload_len());
        self.write_to(&mut out)
            .expect("writing to memory cannot fail");
        out
    }

    pub fn read_from(r: &mut impl Read) -> Result<Self> {
        let truncated = |e: std::io::Error| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::Format("file is truncated".into())
            } else {
                Error::Io(e)
            }
        };
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::Format("missing QLH1 magic".into()));
        }
        let dim = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        if !(1..=3).contains(&dim) {
            return Err(Error::Format(format!("dimension {dim} is out of range")));
        }
        let mut points = [0usize; 3];
        for p in points.iter_mut() {
            *p = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        }
        let mut extents = [0.0; 3];
        for e in extents.iter_mut() {
            *e = r.read_f64::<LittleEndian>().map_err(truncated)?;
        }
        let time = r.read_f64::<LittleEndian>().map_err(truncated)?;
        let kind = FieldKind::from_tag(r.read_u8().map_err(truncated)?)?;
        let scalar = r.read_u8().map_err(truncated)?;
        if scalar != SCALAR_F64 {
            return Err(Error::Format(format!(
                "unsupported scalar type tag {scalar}"
            )));
        }
        let components = r.read_u32::<LittleEndian>().map_err(truncated)? as usize;
        if components != kind.components(dim) {
            return Err(Error::Format(format!(
                "{kind:?} field in {dim}D needs {} components, header says {components}",
                kind.components(dim)
            )));
        }
        if points[dim..].iter().any(|&p| p != 1) {
            return Err(Error::Format("unused axes must have one point".into()));
        }
        let header = FieldFileHeader {
            dim,
            points,
            extents,
            time,
            kind,
            components,
        };
        header.grid().map_err(|e| Error::Format(e.to_string()))?;
        let n: usize = points.iter().product();
        let mut data = Vec::with_capacity(components);
        for _ in 0..components {
            let mut comp = vec![0.0; n];
            r.read_f64_into::<LittleEndian>(&mut comp)
                .map_err(truncated)?;
            data.push(comp);
        }
        let mut rest = [0u8; 1];
        if r.read(&mut rest)? != 0 {
            return Err(Error::Format("trailing bytes after payload".into()));
        }
        Ok(FieldFile { header, data })
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut f)?;
        f.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
        Self::read_from(&mut f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid2() -> GridSpec {
        GridSpec::centered(2, 4.0, 8).unwrap()
    }

    #[test]
    fn complex_round_trip() {
        let g = grid2();
        let psi = ComplexField::from_fn(&g, |p| Complex64::new(p[0], p[1] * 2.0));
        let file = FieldFile::complex(&psi, 0.25);
        let back = FieldFile::read_from(&mut file.to_bytes().as_slice()).unwrap();
        assert_eq!(back, file);
        assert_eq!(back.to_complex().unwrap().values(), psi.values());
        assert_eq!(back.header.time, 0.25);
    }

    #[test]
    fn header_fixes_payload_length() {
        let g = grid2();
        let file = FieldFile::real(&RealField::constant(&g, 1.5), 0.0);
        let bytes = file.to_bytes();
        assert_eq!(bytes.len(), 4 + 4 + 12 + 24 + 8 + 1 + 1 + 4 + 8 * 64);
        assert!(matches!(
            FieldFile::read_from(&mut &bytes[..bytes.len() - 3]),
            Err(Error::Format(_))
        ));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(
            FieldFile::read_from(&mut longer.as_slice()),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn layout_is_row_major_with_z_fastest() {
        let g = GridSpec::centered(3, 8.0, 8).unwrap();
        let f = RealField::from_fn(&g, |p| p[0] * 100.0 + p[1] * 10.0 + p[2]);
        let bytes = FieldFile::real(&f, 0.0).to_bytes();
        let payload = &bytes[58..];
        let second = f64::from_le_bytes(payload[8..16].try_into().unwrap());
        // second sample steps z by one cell from the corner
        assert_eq!(second - f.values()[0], 1.0);
    }

    #[test]
    fn tensor_component_count() {
        let g = grid2();
        let file = FieldFile::sym_tensor(&SymTensorField::zeros(&g), 0.0);
        assert_eq!(file.header.components, 3);
        let mut bytes = file.to_bytes();
        bytes[0] = b'X';
        assert!(FieldFile::read_from(&mut bytes.as_slice()).is_err());
    }
}
