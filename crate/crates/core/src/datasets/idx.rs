//! IDX container format: a big-endian u32 magic `0x0000_08NN` (unsigned
//! bytes, `NN` dimensions), `NN` big-endian u32 sizes, then the payload.

use std::path::Path;

use super::DataError;

pub const IMAGES_MAGIC: u32 = 2051;
pub const LABELS_MAGIC: u32 = 2049;
const UBYTE_TYPE: u8 = 0x08;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IdxFile {
    pub magic: u32,
    pub dims: Vec<u32>,
    pub payload: Vec<u8>,
}

impl IdxFile {
    pub fn new(dims: Vec<u32>, payload: Vec<u8>) -> Result<Self, DataError> {
        let expected: usize = dims.iter().map(|&d| d as usize).product();
        if dims.is_empty() || dims.len() > 255 || expected != payload.len() {
            return Err(DataError::Shape(format!(
                "dims {dims:?} describe {expected} bytes but payload holds {}",
                payload.len()
            )));
        }
        let magic = (u32::from(UBYTE_TYPE) << 8) | dims.len() as u32;
        Ok(Self { magic, dims, payload })
    }

    pub fn rank(&self) -> usize {
        self.dims.len()
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, DataError> {
        let magic = read_u32(bytes, 0)?;
        let type_code = ((magic >> 8) & 0xff) as u8;
        let rank = (magic & 0xff) as usize;
        if magic >> 16 != 0 || type_code != UBYTE_TYPE || rank == 0 {
            return Err(DataError::BadMagic { offset: 0, found: magic });
        }
        let dims = (0..rank)
            .map(|i| read_u32(bytes, 4 + 4 * i))
            .collect::<Result<Vec<_>, _>>()?;
        let header = 4 + 4 * rank;
        let len: usize = dims.iter().map(|&d| d as usize).product();
        let available = bytes.len() - header;
        if available < len {
            return Err(DataError::Truncated {
                offset: header + available,
                needed: len,
                available,
            });
        }
        if available > len {
            return Err(DataError::TrailingBytes {
                offset: header + len,
                extra: available - len,
            });
        }
        Ok(Self {
            magic,
            dims,
            payload: bytes[header..].to_vec(),
        })
    }

    pub fn read(path: &Path) -> Result<Self, DataError> {
        let bytes = std::fs::read(path).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&bytes).map_err(|e| e.at(path))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.payload.len());
        out.extend_from_slice(&self.magic.to_be_bytes());
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), DataError> {
        std::fs::write(path, self.to_bytes()).map_err(|source| DataError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn read_u32(bytes: &[u8], offset: usize) -> Result<u32, DataError> {
    let chunk = bytes.get(offset..offset + 4).ok_or(DataError::Truncated {
        offset,
        needed: 4,
        available: bytes.len().saturating_sub(offset),
    })?;
    Ok(u32::from_be_bytes(chunk.try_into().expect("slice of length 4")))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn magic_numbers_follow_rank() {
        let images = IdxFile::new(vec![1, 28, 28], vec![0; 784]).unwrap();
        assert_eq!(images.magic, IMAGES_MAGIC);
        let labels = IdxFile::new(vec![3], vec![1, 2, 3]).unwrap();
        assert_eq!(labels.magic, LABELS_MAGIC);
    }

    #[test]
    fn bad_magic_is_positioned() {
        let mut bytes = IdxFile::new(vec![2], vec![0, 1]).unwrap().to_bytes();
        bytes[2] = 0x0d;
        let err = IdxFile::parse(&bytes).unwrap_err();
        assert!(matches!(err, DataError::BadMagic { offset: 0, found: 0x0d01 }));
        assert!(err.to_string().contains("byte offset 0"));
    }

    #[test]
    fn truncation_is_positioned() {
        let bytes = IdxFile::new(vec![1, 2, 2], vec![9; 4]).unwrap().to_bytes();
        let err = IdxFile::parse(&bytes[..bytes.len() - 1]).unwrap_err();
        assert!(matches!(err, DataError::Truncated { offset: 19, needed: 4, available: 3 }));
        let err = IdxFile::parse(&bytes[..6]).unwrap_err();
        assert!(matches!(err, DataError::Truncated { offset: 4, .. }));
    }

    #[test]
    fn trailing_bytes_rejected() {
        let mut bytes = IdxFile::new(vec![2], vec![0, 1]).unwrap().to_bytes();
        bytes.push(7);
        assert!(matches!(IdxFile::parse(&bytes), Err(DataError::TrailingBytes { offset: 10, extra: 1 })));
    }
}
