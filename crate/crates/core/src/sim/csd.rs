//! "CSD1" dataset container: little-endian header followed by fixed-size
//! sample records.
//!
//! ```text
//! magic "CSD1" | u32 version | u32 L | u32 A | u32 S | u32 T | u32 count
//! per sample: u8 activity | u8 location | u8 mask bits | u64 seed |
//!             L*A*S*T x (f32 re, f32 im)
//! ```

use std::io::{BufReader, BufWriter, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex32;

use super::{Activity, CsiSample, SimError};

pub const CSD_MAGIC: &[u8; 4] = b"CSD1";
pub const CSD_VERSION: u32 = 1;
const HEADER_LEN: u64 = 4 + 4 * 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CsdHeader {
    pub version: u32,
    pub links: u32,
    pub antenna_pairs: u32,
    pub subcarriers: u32,
    pub len: u32,
    pub sample_count: u32,
}

impl CsdHeader {
    pub fn shape(&self) -> [usize; 4] {
        [
            self.links as usize,
            self.antenna_pairs as usize,
            self.subcarriers as usize,
            self.len as usize,
        ]
    }

    fn values_per_sample(&self) -> usize {
        self.shape().iter().product()
    }

    pub fn record_len(&self) -> u64 {
        1 + 1 + 1 + 8 + 8 * self.values_per_sample() as u64
    }

    pub fn file_len(&self) -> u64 {
        HEADER_LEN + self.record_len() * self.sample_count as u64
    }
}

pub struct CsdWriter<W: Write> {
    out: BufWriter<W>,
    header: CsdHeader,
    written: u32,
}

impl<W: Write> CsdWriter<W> {
    pub fn new(inner: W, shape: [usize; 4], sample_count: usize) -> Result<Self, SimError> {
        if shape[0] > 8 {
            return Err(SimError::Format(format!(
                "{} links do not fit the 8-bit link mask",
                shape[0]
            )));
        }
        let to_u32 = |v: usize| {
            u32::try_from(v).map_err(|_| SimError::Format(format!("dimension {v} exceeds u32")))
        };
        let header = CsdHeader {
            version: CSD_VERSION,
            links: to_u32(shape[0])?,
            antenna_pairs: to_u32(shape[1])?,
            subcarriers: to_u32(shape[2])?,
            len: to_u32(shape[3])?,
            sample_count: to_u32(sample_count)?,
        };
        let mut out = BufWriter::with_capacity(1 << 20, inner);
        out.write_all(CSD_MAGIC)?;
        for v in [
            header.version,
            header.links,
            header.antenna_pairs,
            header.subcarriers,
            header.len,
            header.sample_count,
        ] {
            out.write_u32::<LittleEndian>(v)?;
        }
        Ok(CsdWriter {
            out,
            header,
            written: 0,
        })
    }

    pub fn write_sample(&mut self, sample: &CsiSample) -> Result<(), SimError> {
        if sample.shape != self.header.shape() {
            return Err(SimError::Format(format!(
                "sample shape {:?} does not match header {:?}",
                sample.shape,
                self.header.shape()
            )));
        }
        if self.written >= self.header.sample_count {
            return Err(SimError::Format(
                "more samples than declared in header".into(),
            ));
        }
        let location = u8::try_from(sample.location)
            .map_err(|_| SimError::Format(format!("location {} exceeds u8", sample.location)))?;
        self.out.write_u8(sample.activity.id() as u8)?;
        self.out.write_u8(location)?;
        self.out.write_u8(sample.mask_bits())?;
        self.out.write_u64::<LittleEndian>(sample.seed)?;
        let mut buf = Vec::with_capacity(sample.csi.len() * 8);
        for c in &sample.csi {
            buf.extend_from_slice(&c.re.to_le_bytes());
            buf.extend_from_slice(&c.im.to_le_bytes());
        }
        self.out.write_all(&buf)?;
        self.written += 1;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W, SimError> {
        if self.written != self.header.sample_count {
            return Err(SimError::Format(format!(
                "declared {} samples, wrote {}",
                self.header.sample_count, self.written
            )));
        }
        self.out.flush()?;
        self.out
            .into_inner()
            .map_err(|e| SimError::Io(e.into_error()))
    }
}

pub struct CsdReader<R: Read> {
    input: BufReader<R>,
    header: CsdHeader,
    read: u32,
}

impl<R: Read> CsdReader<R> {
    pub fn new(inner: R) -> Result<Self, SimError> {
        let mut input = BufReader::with_capacity(1 << 20, inner);
        let mut magic = [0u8; 4];
        input
            .read_exact(&mut magic)
            .map_err(|_| SimError::Format("truncated header".into()))?;
        if &magic != CSD_MAGIC {
            return Err(SimError::Format(format!("bad magic {magic:?}")));
        }
        let mut fields = [0u32; 6];
        for f in &mut fields {
            *f = input
                .read_u32::<LittleEndian>()
                .map_err(|_| SimError::Format("truncated header".into()))?;
        }
        let header = CsdHeader {
            version: fields[0],
            links: fields[1],
            antenna_pairs: fields[2],
            subcarriers: fields[3],
            len: fields[4],
            sample_count: fields[5],
        };
        if header.version != CSD_VERSION {
            return Err(SimError::Format(format!(
                "unsupported version {}",
                header.version
            )));
        }
        if header.links == 0 || header.links > 8 {
            return Err(SimError::Format(format!(
                "invalid link count {}",
                header.links
            )));
        }
        Ok(CsdReader {
            input,
            header,
            read: 0,
        })
    }

    pub fn header(&self) -> &CsdHeader {
        &self.header
    }

    pub fn next_sample(&mut self) -> Result<Option<CsiSample>, SimError> {
        if self.read >= self.header.sample_count {
            return Ok(None);
        }
        let trunc = |_| SimError::Format(format!("truncated sample record {}", self.read));
        let activity_id = self.input.read_u8().map_err(trunc)?;
        let location = self.input.read_u8().map_err(trunc)? as usize;
        let bits = self.input.read_u8().map_err(trunc)?;
        let seed = self.input.read_u64::<LittleEndian>().map_err(trunc)?;
        let activity = Activity::from_id(activity_id as usize)
            .ok_or_else(|| SimError::Format(format!("unknown activity id {activity_id}")))?;
        let n = self.header.values_per_sample();
        let mut raw = vec![0u8; n * 8];
        self.input.read_exact(&mut raw).map_err(trunc)?;
        let csi = raw
            .chunks_exact(8)
            .map(|b| {
                Complex32::new(
                    f32::from_le_bytes([b[0], b[1], b[2], b[3]]),
                    f32::from_le_bytes([b[4], b[5], b[6], b[7]]),
                )
            })
            .collect();
        let links = self.header.links as usize;
        let informative_mask = (0..links).map(|i| bits & (1 << i) != 0).collect();
        self.read += 1;
        Ok(Some(CsiSample {
            csi,
            shape: self.header.shape(),
            activity,
            location,
            informative_mask,
            seed,
        }))
    }
}

impl<R: Read> Iterator for CsdReader<R> {
    type Item = Result<CsiSample, SimError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_sample().transpose()
    }
}
