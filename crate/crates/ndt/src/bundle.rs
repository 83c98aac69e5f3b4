//! Named-tensor bundle serialization.
//!
//! Layout, in order:
//!
//! ```text
//! PSEL1\n
//! meta <key> <value>\n                          (zero or more)
//! tensor <name> <dtype> <rank> <d0> ... <dk>\n  (zero or more)
//! data\n
//! <raw little-endian element data, tensors in header order>
//! ```
//!
//! Tensor names and meta keys are restricted to `[A-Za-z0-9_./-]`; meta
//! values may be any single-line UTF-8. The writer emits entries in sorted
//! order, so identical bundles serialize to identical bytes. The reader
//! validates the declared payload size against the actual byte count before
//! allocating anything, so it is safe on untrusted input.

use crate::scalar::{Dtype, Scalar};
use crate::tensor::Tensor;
use crate::{NdtError, Result};
use std::collections::BTreeMap;
use std::path::Path;

pub const MAGIC: &str = "PSEL1";

const MAX_RANK: usize = 8;
const MAX_DIM: usize = 1 << 32;

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Bundle<S> {
    pub meta: BTreeMap<String, String>,
    pub tensors: BTreeMap<String, Tensor<S>>,
}

fn valid_name(s: &str) -> bool {
    !s.is_empty()
        && s.bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'.' | b'/' | b'-'))
}

impl<S: Scalar> Bundle<S> {
    pub fn new() -> Self {
        Bundle {
            meta: BTreeMap::new(),
            tensors: BTreeMap::new(),
        }
    }

    pub fn set_meta(&mut self, key: &str, value: &str) {
        self.meta.insert(key.to_string(), value.to_string());
    }

    pub fn insert(&mut self, name: &str, tensor: Tensor<S>) {
        self.tensors.insert(name.to_string(), tensor);
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<S>> {
        self.tensors.get(name)
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut header = String::from(MAGIC);
        header.push('\n');
        for (k, v) in &self.meta {
            if !valid_name(k) || v.contains('\n') {
                return Err(NdtError::Bundle(format!("invalid meta entry `{k}`")));
            }
            header.push_str(&format!("meta {k} {v}\n"));
        }
        for (name, t) in &self.tensors {
            if !valid_name(name) {
                return Err(NdtError::Bundle(format!("invalid tensor name `{name}`")));
            }
            header.push_str(&format!("tensor {name} {} {}", S::DTYPE.name(), t.rank()));
            for d in t.shape() {
                header.push_str(&format!(" {d}"));
            }
            header.push('\n');
        }
        header.push_str("data\n");
        let mut out = header.into_bytes();
        for t in self.tensors.values() {
            for &x in t.data() {
                x.write_le(&mut out);
            }
        }
        Ok(out)
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cursor = 0usize;
        let mut next_line = |bytes: &[u8]| -> Result<String> {
            let rest = &bytes[cursor..];
            let end = rest
                .iter()
                .position(|&b| b == b'\n')
                .ok_or_else(|| NdtError::Bundle("unterminated header line".into()))?;
            let line = std::str::from_utf8(&rest[..end])
                .map_err(|_| NdtError::Bundle("non-utf8 header".into()))?
                .to_string();
            cursor += end + 1;
            Ok(line)
        };

        if next_line(bytes)? != MAGIC {
            return Err(NdtError::Bundle(format!("bad magic, want `{MAGIC}`")));
        }

        let mut meta = BTreeMap::new();
        // (name, shape) in declaration order.
        let mut decls: Vec<(String, Vec<usize>)> = Vec::new();
        let mut total_elems: usize = 0;
        loop {
            let line = next_line(bytes)?;
            if line == "data" {
                break;
            }
            let mut parts = line.splitn(2, ' ');
            match parts.next() {
                Some("meta") => {
                    let rest = parts
                        .next()
                        .ok_or_else(|| NdtError::Bundle("meta missing key".into()))?;
                    let (k, v) = rest
                        .split_once(' ')
                        .ok_or_else(|| NdtError::Bundle("meta missing value".into()))?;
                    if !valid_name(k) {
                        return Err(NdtError::Bundle(format!("invalid meta key `{k}`")));
                    }
                    meta.insert(k.to_string(), v.to_string());
                }
                Some("tensor") => {
                    let rest = parts
                        .next()
                        .ok_or_else(|| NdtError::Bundle("tensor missing fields".into()))?;
                    let fields: Vec<&str> = rest.split(' ').collect();
                    if fields.len() < 3 {
                        return Err(NdtError::Bundle("short tensor line".into()));
                    }
                    let name = fields[0];
                    if !valid_name(name) {
                        return Err(NdtError::Bundle(format!("invalid tensor name `{name}`")));
                    }
                    if decls.iter().any(|(n, _)| n == name) {
                        return Err(NdtError::Bundle(format!("duplicate tensor `{name}`")));
                    }
                    let dtype = Dtype::parse(fields[1])
                        .ok_or_else(|| NdtError::Bundle(format!("bad dtype `{}`", fields[1])))?;
                    if dtype != S::DTYPE {
                        return Err(NdtError::Bundle(format!(
                            "dtype {} does not match requested {}",
                            dtype.name(),
                            S::DTYPE.name()
                        )));
                    }
                    let rank: usize = fields[2]
                        .parse()
                        .map_err(|_| NdtError::Bundle("bad rank".into()))?;
                    if rank > MAX_RANK || fields.len() != 3 + rank {
                        return Err(NdtError::Bundle("rank/dims mismatch".into()));
                    }
                    let mut shape = Vec::with_capacity(rank);
                    let mut elems: usize = 1;
                    for f in &fields[3..] {
                        let d: usize =
                            f.parse().map_err(|_| NdtError::Bundle("bad dim".into()))?;
                        if d >= MAX_DIM {
                            return Err(NdtError::Bundle("dim too large".into()));
                        }
                        elems = elems
                            .checked_mul(d)
                            .ok_or_else(|| NdtError::Bundle("element count overflow".into()))?;
                        shape.push(d);
                    }
                    total_elems = total_elems
                        .checked_add(elems)
                        .ok_or_else(|| NdtError::Bundle("element count overflow".into()))?;
                    decls.push((name.to_string(), shape));
                }
                _ => return Err(NdtError::Bundle(format!("unknown header line `{line}`"))),
            }
        }

        let elem_size = S::DTYPE.size();
        let expected = total_elems
            .checked_mul(elem_size)
            .ok_or_else(|| NdtError::Bundle("payload size overflow".into()))?;
        let payload = &bytes[cursor..];
        if payload.len() != expected {
            return Err(NdtError::Bundle(format!(
                "payload is {} bytes, header declares {}",
                payload.len(),
                expected
            )));
        }

        let mut tensors = BTreeMap::new();
        let mut offset = 0usize;
        for (name, shape) in decls {
            let n: usize = shape.iter().product();
            let mut data = Vec::with_capacity(n);
            for i in 0..n {
                data.push(S::read_le(&payload[offset + i * elem_size..]));
            }
            offset += n * elem_size;
            tensors.insert(name, Tensor::from_vec(&shape, data)?);
        }
        Ok(Bundle { meta, tensors })
    }

    pub fn write_file(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn read_file(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path)?;
        Self::from_bytes(&bytes)
    }
}
