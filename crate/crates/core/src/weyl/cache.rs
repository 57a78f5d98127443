use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;
use std::sync::RwLock;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::hermite::{read_f64, read_u32, HermiteContext, OperatorMatrix};
use crate::weyl::engine::WeylEngine;
use crate::weyl::grid::PhaseGrid;
use crate::C64;

const MAGIC: &[u8; 4] = b"WBWC";
const VERSION: u32 = 1;

/// Lazily filled per-grid-point matrices Φ(z), keyed by flat grid index i·m + j.
///
/// Concurrent readers are fine; fills are idempotent, so a racing duplicate
/// computation simply overwrites with an identical value.
pub struct WeylMatrixCache {
    engine: WeylEngine,
    hash: [u8; 32],
    entries: RwLock<BTreeMap<u32, OperatorMatrix>>,
}

pub fn context_hash(ctx: &HermiteContext, grid: &PhaseGrid, lambda: f64) -> [u8; 32] {
    let mut h = Sha256::new();
    h.update((ctx.n() as u64).to_le_bytes());
    h.update((ctx.trunc() as u64).to_le_bytes());
    h.update(ctx.l_xi().to_le_bytes());
    h.update((ctx.points() as u64).to_le_bytes());
    h.update(grid.l_z.to_le_bytes());
    h.update((grid.m_pts as u64).to_le_bytes());
    h.update(lambda.to_le_bytes());
    h.finalize().into()
}

impl WeylMatrixCache {
    pub fn new(ctx: &HermiteContext, grid: PhaseGrid) -> Result<Self> {
        let engine = WeylEngine::new(ctx, grid)?;
        Ok(Self { engine, hash: context_hash(ctx, &grid, 1.0), entries: RwLock::new(BTreeMap::new()) })
    }

    pub fn hash(&self) -> [u8; 32] {
        self.hash
    }

    pub fn len(&self) -> usize {
        self.entries.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, i: usize, j: usize) -> Result<OperatorMatrix> {
        let grid = self.engine.grid();
        if i >= grid.m_pts || j >= grid.m_pts {
            return Err(Error::InvalidArgument(format!("grid index ({i}, {j}) out of range")));
        }
        let key = (i * grid.m_pts + j) as u32;
        if let Some(m) = self.entries.read().expect("cache lock").get(&key) {
            return Ok(m.clone());
        }
        let m = self.engine.point_matrix(grid.coord(i), grid.coord(j))?;
        self.entries.write().expect("cache lock").insert(key, m.clone());
        Ok(m)
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        let entries = self.entries.read().expect("cache lock");
        w.write_all(MAGIC)?;
        w.write_all(&VERSION.to_le_bytes())?;
        w.write_all(&self.hash)?;
        w.write_all(&(self.engine.trunc() as u32).to_le_bytes())?;
        w.write_all(&(entries.len() as u32).to_le_bytes())?;
        for (k, m) in entries.iter() {
            w.write_all(&k.to_le_bytes())?;
            for z in m.entries().iter() {
                w.write_all(&z.re.to_le_bytes())?;
                w.write_all(&z.im.to_le_bytes())?;
            }
        }
        Ok(())
    }

    /// Loads entries persisted for the same context; a different context hash
    /// invalidates the file and leaves the cache empty (returns `false`).
    pub fn read_from<R: Read>(&self, mut r: R) -> Result<bool> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::Format("not a Weyl matrix cache file".into()));
        }
        if read_u32(&mut r)? != VERSION {
            return Err(Error::Format("unsupported cache version".into()));
        }
        let mut hash = [0u8; 32];
        r.read_exact(&mut hash)?;
        if hash != self.hash {
            log::warn!("Weyl matrix cache invalidated: context hash differs");
            return Ok(false);
        }
        let trunc = read_u32(&mut r)? as usize;
        let count = read_u32(&mut r)? as usize;
        let mut loaded = BTreeMap::new();
        for _ in 0..count {
            let key = read_u32(&mut r)?;
            let mut m = nalgebra::DMatrix::zeros(trunc, trunc);
            // entries were written in column-major storage order
            for c in 0..trunc {
                for rr in 0..trunc {
                    let re = read_f64(&mut r)?;
                    let im = read_f64(&mut r)?;
                    m[(rr, c)] = C64::new(re, im);
                }
            }
            loaded.insert(key, OperatorMatrix::from_entries(1, trunc, m)?);
        }
        *self.entries.write().expect("cache lock") = loaded;
        Ok(true)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(&self, path: impl AsRef<Path>) -> Result<bool> {
        self.read_from(std::io::BufReader::new(std::fs::File::open(path)?))
    }
}
