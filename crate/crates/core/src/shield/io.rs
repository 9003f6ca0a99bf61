//! Little-endian file header shared by shields, trees and Q-tables:
//!
//! ```text
//! magic [u8; 4], version u32, dim u32,
//! dim x (low f64, high f64, count u64),
//! action count u32, action count x (len u32, utf-8 bytes),
//! transform tag u32, param count u32, params f64...
//! ```
//!
//! The transform parameters are the kind's own parameters followed by the
//! domain box as `(low, high)` pairs.

use crate::error::ShieldError;
use crate::grid::{Aabb, Axis, GridSpec};
use crate::transform::{Transform, TransformKind};

pub const SHIELD_MAGIC: &[u8; 4] = b"SHLD";
pub const TREE_MAGIC: &[u8; 4] = b"SHTR";
pub const VERSION: u32 = 1;

/// Everything needed to interpret a file body without the original config.
#[derive(Clone, Debug, PartialEq)]
pub struct FileHeader {
    pub grid: GridSpec,
    pub actions: Vec<String>,
    pub transform: Transform,
}

pub fn write_header(buf: &mut Vec<u8>, magic: &[u8; 4], h: &FileHeader) {
    buf.extend_from_slice(magic);
    buf.extend_from_slice(&VERSION.to_le_bytes());
    buf.extend_from_slice(&(h.grid.dim() as u32).to_le_bytes());
    for a in h.grid.axes() {
        buf.extend_from_slice(&a.low.to_le_bytes());
        buf.extend_from_slice(&a.high.to_le_bytes());
        buf.extend_from_slice(&(a.count as u64).to_le_bytes());
    }
    buf.extend_from_slice(&(h.actions.len() as u32).to_le_bytes());
    for name in &h.actions {
        buf.extend_from_slice(&(name.len() as u32).to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
    }
    let kind = h.transform.kind();
    let mut params = kind.params();
    let dom = h.transform.domain();
    for i in 0..dom.dim() {
        params.push(dom.lo[i]);
        params.push(dom.hi[i]);
    }
    buf.extend_from_slice(&kind.tag().to_le_bytes());
    buf.extend_from_slice(&(params.len() as u32).to_le_bytes());
    for p in params {
        buf.extend_from_slice(&p.to_le_bytes());
    }
}

pub fn read_header(r: &mut Reader<'_>, magic: &[u8; 4]) -> Result<FileHeader, ShieldError> {
    let m = r.take(4).map_err(|_| ShieldError::VersionMismatch)?;
    if m != magic {
        return Err(ShieldError::VersionMismatch);
    }
    if r.u32().map_err(|_| ShieldError::VersionMismatch)? != VERSION {
        return Err(ShieldError::VersionMismatch);
    }
    let dim = r.u32()? as usize;
    if dim == 0 || dim > 8 {
        return Err(ShieldError::Corrupt(format!("unsupported dimension {dim}")));
    }
    let mut axes = Vec::with_capacity(dim);
    for _ in 0..dim {
        let low = r.f64()?;
        let high = r.f64()?;
        let count = usize::try_from(r.u64()?).map_err(|_| ShieldError::Corrupt("cell count overflows".into()))?;
        axes.push(Axis::new(low, high, count));
    }
    let grid = GridSpec::new(axes).map_err(|e| ShieldError::Corrupt(e.to_string()))?;
    let n_actions = r.u32()? as usize;
    if n_actions > 8 {
        return Err(ShieldError::TooManyActions(n_actions));
    }
    let mut actions = Vec::with_capacity(n_actions);
    for _ in 0..n_actions {
        let len = r.u32()? as usize;
        let bytes = r.take(len)?;
        actions.push(
            String::from_utf8(bytes.to_vec()).map_err(|_| ShieldError::Corrupt("action name is not UTF-8".into()))?,
        );
    }
    let tag = r.u32()?;
    let n_params = r.u32()? as usize;
    if n_params < 2 * dim || n_params > 2 * dim + 64 {
        return Err(ShieldError::Corrupt(format!("{n_params} transform parameters")));
    }
    let mut params = Vec::with_capacity(n_params);
    for _ in 0..n_params {
        params.push(r.f64()?);
    }
    let (kind_params, dom) = params.split_at(n_params - 2 * dim);
    let domain = Aabb::new(
        (0..dim).map(|i| dom[2 * i]).collect(),
        (0..dim).map(|i| dom[2 * i + 1]).collect(),
    );
    let kind = TransformKind::from_tag(tag, kind_params).map_err(|e| ShieldError::Corrupt(e.to_string()))?;
    let transform =
        Transform::from_parts(kind, domain, &grid.bounds()).map_err(|e| ShieldError::Corrupt(e.to_string()))?;
    Ok(FileHeader { grid, actions, transform })
}

/// Cursor over a byte slice; every read past the end is `Corrupt`.
pub struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    pub fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub fn take(&mut self, n: usize) -> Result<&'a [u8], ShieldError> {
        if self.bytes.len() - self.pos < n {
            return Err(ShieldError::Corrupt("unexpected end of file".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    pub fn u8(&mut self) -> Result<u8, ShieldError> {
        Ok(self.take(1)?[0])
    }

    pub fn u32(&mut self) -> Result<u32, ShieldError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }

    pub fn u64(&mut self) -> Result<u64, ShieldError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn f64(&mut self) -> Result<f64, ShieldError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    pub fn rest(&mut self) -> &'a [u8] {
        let s = &self.bytes[self.pos..];
        self.pos = self.bytes.len();
        s
    }

    pub fn is_done(&self) -> bool {
        self.pos == self.bytes.len()
    }
}
