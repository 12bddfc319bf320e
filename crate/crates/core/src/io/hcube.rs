//! HCUBE container: a sequence of named records, each a little-endian header
//! followed by `8 * height * width * bands` bytes of little-endian `f64`.
//!
//! ```text
//! offset  size  field
//!      0     4  magic "HCUB"
//!      4     4  version (u32, = 1)
//!      8     4  dtype code (u32, 1 = f64)
//!     12     4  height (u32)
//!     16     4  width (u32)
//!     20     4  bands (u32)
//!     24     4  name length L (u32)
//!     28     L  name (UTF-8)
//!   28+L   8*H*W*C  payload, row-major H x W x C
//! ```

use std::fs;
use std::io::Write;
use std::path::Path;

use super::HsiCube;
use crate::detect::ChangeScoreMap;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: [u8; 4] = *b"HCUB";
pub const VERSION: u32 = 1;
pub const DTYPE_F64: u32 = 1;
const FIXED_LEN: usize = 28;

/// Record name of the wavelength list that may follow a cube record.
pub const WAVELENGTHS: &str = "wavelengths";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HcubeHeader {
    pub version: u32,
    pub dtype: u32,
    pub height: u32,
    pub width: u32,
    pub bands: u32,
    pub name: String,
}

impl HcubeHeader {
    pub fn new(name: &str, height: usize, width: usize, bands: usize) -> Result<Self> {
        let dim = |v: usize, field: &str| {
            u32::try_from(v).map_err(|_| Error::parse(field, format!("{v} does not fit in u32")))
        };
        Ok(HcubeHeader {
            version: VERSION,
            dtype: DTYPE_F64,
            height: dim(height, "height")?,
            width: dim(width, "width")?,
            bands: dim(bands, "bands")?,
            name: name.to_string(),
        })
    }

    /// Number of payload bytes that follow the header.
    pub fn payload_len(&self) -> u64 {
        8 * self.height as u64 * self.width as u64 * self.bands as u64
    }

    pub fn encoded_len(&self) -> usize {
        FIXED_LEN + self.name.len()
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        for v in [self.version, self.dtype, self.height, self.width, self.bands] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&(self.name.len() as u32).to_le_bytes());
        out.extend_from_slice(self.name.as_bytes());
        out
    }

    /// Parses a header from the start of `bytes`.
    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let field = |off: usize, name: &str| -> Result<u32> {
            bytes
                .get(off..off + 4)
                .map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
                .ok_or_else(|| Error::parse(name, "truncated header"))
        };
        let magic = bytes.get(0..4).ok_or_else(|| Error::parse("magic", "truncated header"))?;
        if magic != MAGIC {
            return Err(Error::parse("magic", format!("expected \"HCUB\", found {:?}", magic)));
        }
        let version = field(4, "version")?;
        if version != VERSION {
            return Err(Error::parse("version", format!("unsupported version {version}")));
        }
        let dtype = field(8, "dtype")?;
        if dtype != DTYPE_F64 {
            return Err(Error::parse("dtype", format!("unsupported dtype code {dtype}")));
        }
        let height = field(12, "height")?;
        let width = field(16, "width")?;
        let bands = field(20, "bands")?;
        let name_len = field(24, "name length")? as usize;
        let name_bytes = bytes
            .get(FIXED_LEN..FIXED_LEN + name_len)
            .ok_or_else(|| Error::parse("name", "truncated record name"))?;
        let name = String::from_utf8(name_bytes.to_vec())
            .map_err(|_| Error::parse("name", "record name is not UTF-8"))?;
        Ok(HcubeHeader { version, dtype, height, width, bands, name })
    }
}

/// One named `height x width x bands` block of `f64` values.
#[derive(Clone, Debug, PartialEq)]
pub struct HcubeRecord {
    pub name: String,
    pub height: usize,
    pub width: usize,
    pub bands: usize,
    pub data: Vec<f64>,
}

pub fn encode_records(records: &[HcubeRecord]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for r in records {
        if r.data.len() != r.height * r.width * r.bands {
            return Err(Error::shape(
                "hcube",
                format!("record {} declares {}x{}x{} but holds {}", r.name, r.height, r.width, r.bands, r.data.len()),
            ));
        }
        out.extend(HcubeHeader::new(&r.name, r.height, r.width, r.bands)?.encode());
        for v in &r.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_records(bytes: &[u8]) -> Result<Vec<HcubeRecord>> {
    let mut records = Vec::new();
    let mut pos = 0;
    while pos < bytes.len() {
        let header = HcubeHeader::decode(&bytes[pos..])?;
        pos += header.encoded_len();
        let len = usize::try_from(header.payload_len())
            .map_err(|_| Error::parse("payload", "payload too large"))?;
        let payload = bytes.get(pos..pos + len).ok_or_else(|| {
            Error::parse(
                "payload",
                format!(
                    "record {} needs {} bytes, {} available",
                    header.name,
                    len,
                    bytes.len() - pos
                ),
            )
        })?;
        let data = payload
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().expect("8 bytes")))
            .collect();
        pos += len;
        records.push(HcubeRecord {
            name: header.name,
            height: header.height as usize,
            width: header.width as usize,
            bands: header.bands as usize,
            data,
        });
    }
    Ok(records)
}

pub fn write_records(path: impl AsRef<Path>, records: &[HcubeRecord]) -> Result<()> {
    let bytes = encode_records(records)?;
    let mut f = fs::File::create(path)?;
    f.write_all(&bytes)?;
    Ok(())
}

pub fn read_records(path: impl AsRef<Path>) -> Result<Vec<HcubeRecord>> {
    decode_records(&fs::read(path)?)
}

fn cube_records<T: Scalar>(cube: &HsiCube<T>) -> Vec<HcubeRecord> {
    let mut records = vec![HcubeRecord {
        name: "cube".into(),
        height: cube.height,
        width: cube.width,
        bands: cube.bands,
        data: cube.data.iter().map(|v| v.as_f64()).collect(),
    }];
    if let Some(wl) = &cube.wavelengths {
        records.push(HcubeRecord {
            name: WAVELENGTHS.into(),
            height: 1,
            width: 1,
            bands: wl.len(),
            data: wl.clone(),
        });
    }
    records
}

/// Writes a cube as one record, followed by its wavelengths when present.
pub fn write_hcube<T: Scalar>(cube: &HsiCube<T>, path: impl AsRef<Path>) -> Result<()> {
    write_records(path, &cube_records(cube))
}

pub fn cube_from_records<T: Scalar>(records: Vec<HcubeRecord>) -> Result<HsiCube<T>> {
    let mut it = records.into_iter();
    let first = it.next().ok_or_else(|| Error::parse("record", "file holds no records"))?;
    let data = first.data.into_iter().map(T::lit).collect();
    let mut cube = HsiCube::new(first.height, first.width, first.bands, data)?;
    if let Some(r) = it.next() {
        if r.name == WAVELENGTHS {
            cube = cube.with_wavelengths(r.data)?;
        }
    }
    Ok(cube)
}

pub fn read_hcube<T: Scalar>(path: impl AsRef<Path>) -> Result<HsiCube<T>> {
    cube_from_records(read_records(path)?)
}

/// Writes a score map as a single `H x W x 1` record named `scores`.
pub fn write_scores<T: Scalar>(map: &ChangeScoreMap<T>, path: impl AsRef<Path>) -> Result<()> {
    write_records(
        path,
        &[HcubeRecord {
            name: "scores".into(),
            height: map.height,
            width: map.width,
            bands: 1,
            data: map.scores.iter().map(|v| v.as_f64()).collect(),
        }],
    )
}

pub fn read_scores<T: Scalar>(path: impl AsRef<Path>) -> Result<ChangeScoreMap<T>> {
    let records = read_records(path)?;
    let r = records.into_iter().next().ok_or_else(|| Error::parse("record", "file holds no records"))?;
    if r.bands != 1 {
        return Err(Error::parse("bands", format!("score map must have 1 band, found {}", r.bands)));
    }
    ChangeScoreMap::new(r.height, r.width, r.data.into_iter().map(T::lit).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_declares_payload_length() {
        let h = HcubeHeader::new("cube", 450, 375, 127).unwrap();
        assert_eq!(h.payload_len(), 8 * 450 * 375 * 127);
        assert_eq!(HcubeHeader::decode(&h.encode()).unwrap(), h);
    }

    #[test]
    fn roundtrip_cube_with_wavelengths() {
        let data: Vec<f64> = (0..48).map(|i| (i as f64 - 20.0) * 0.37).collect();
        let cube = HsiCube::new(4, 4, 3, data)
            .unwrap()
            .with_wavelengths(vec![450.0, 550.0, 650.0])
            .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.hcube");
        write_hcube(&cube, &p).unwrap();
        let back: HsiCube<f64> = read_hcube(&p).unwrap();
        assert_eq!(back, cube);
    }

    #[test]
    fn truncated_payload_is_an_error() {
        let cube = HsiCube::new(2, 2, 2, vec![1.0f64; 8]).unwrap();
        let mut bytes = encode_records(&cube_records(&cube)).unwrap();
        bytes.truncate(bytes.len() - 3);
        match decode_records(&bytes) {
            Err(Error::Parse { field, .. }) => assert_eq!(field, "payload"),
            other => panic!("expected payload error, got {other:?}"),
        }
    }

    #[test]
    fn bad_magic_and_version_name_their_field() {
        let mut bytes = HcubeHeader::new("x", 1, 1, 1).unwrap().encode();
        bytes.extend_from_slice(&1.0f64.to_le_bytes());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(decode_records(&bad), Err(Error::Parse { field, .. }) if field == "magic"));
        let mut bad = bytes.clone();
        bad[4] = 2;
        assert!(matches!(decode_records(&bad), Err(Error::Parse { field, .. }) if field == "version"));
        let mut bad = bytes;
        bad[8] = 9;
        assert!(matches!(decode_records(&bad), Err(Error::Parse { field, .. }) if field == "dtype"));
    }
}
