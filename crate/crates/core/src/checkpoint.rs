//! `CVNNCKPT` checkpoint files: magic, `u32` version, then named tensor
//! records (`u32` name length, UTF-8 name, `CVTNSR01` tensor) until EOF.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::tensor::read_u32;
use crate::{ComplexTensor, Error, ParamSet, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"CVNNCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    records: Vec<(String, ComplexTensor)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_params(params: &ParamSet) -> Self {
        Self {
            records: params.iter().map(|(n, t)| (n.to_string(), t.clone())).collect(),
        }
    }

    pub fn push(&mut self, name: impl Into<String>, tensor: ComplexTensor) -> Result<()> {
        let name = name.into();
        if self.get(&name).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate checkpoint record `{name}`")));
        }
        self.records.push((name, tensor));
        Ok(())
    }

    pub fn extend(&mut self, records: impl IntoIterator<Item = (String, ComplexTensor)>) -> Result<()> {
        records.into_iter().try_for_each(|(n, t)| self.push(n, t))
    }

    pub fn get(&self, name: &str) -> Option<&ComplexTensor> {
        self.records.iter().find(|(n, _)| n == name).map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &ComplexTensor)> {
        self.records.iter().map(|(n, t)| (n.as_str(), t))
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records whose name starts with `prefix`, with the prefix removed.
    pub fn with_prefix<'a>(&'a self, prefix: &'a str) -> impl Iterator<Item = (&'a str, &'a ComplexTensor)> {
        self.iter().filter_map(move |(n, t)| n.strip_prefix(prefix).map(|rest| (rest, t)))
    }

    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(CHECKPOINT_MAGIC)?;
        w.write_all(&CHECKPOINT_VERSION.to_le_bytes())?;
        for (name, t) in &self.records {
            w.write_all(&(name.len() as u32).to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            t.write_to(w)?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Truncated("checkpoint magic".into()))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::Format(format!(
                "bad checkpoint magic {:?}",
                String::from_utf8_lossy(&magic)
            )));
        }
        let version = read_u32(r, "checkpoint version")?;
        if version != CHECKPOINT_VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let mut out = Self::new();
        while let Some(len) = read_len_or_eof(r)? {
            let mut name = vec![0u8; len as usize];
            r.read_exact(&mut name)
                .map_err(|_| Error::Truncated("checkpoint record name".into()))?;
            let name = String::from_utf8(name)
                .map_err(|_| Error::Format("checkpoint record name is not UTF-8".into()))?;
            let t = ComplexTensor::read_from(r)?;
            out.push(name, t)?;
        }
        Ok(out)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_to(&mut buf).expect("writing to a Vec cannot fail");
        buf
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let bytes = fs::read(path)?;
        Self::read_from(&mut bytes.as_slice())
    }
}

/// A record length, or `None` at a clean end of file.
fn read_len_or_eof<R: Read>(r: &mut R) -> Result<Option<u32>> {
    let mut b = [0u8; 4];
    let mut got = 0;
    while got < 4 {
        match r.read(&mut b[got..])? {
            0 if got == 0 => return Ok(None),
            0 => return Err(Error::Truncated("checkpoint record length".into())),
            n => got += n,
        }
    }
    Ok(Some(u32::from_le_bytes(b)))
}
