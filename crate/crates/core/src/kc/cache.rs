//! Binary AC cache: little-endian, length-prefixed.
//!
//! Layout: magic `IRAC`, format version, source digest, cardinalities,
//! parameter count, root, nodes, CNF symbol map, ordering constraints.

use super::ac::{AcNode, ArithmeticCircuit};
use super::{KcError, Result};
use crate::encoder::{OrderingConstraintSet, Symbol, VarMap};

const MAGIC: &[u8; 4] = b"IRAC";
pub const CACHE_VERSION: u32 = 1;

/// A compiled circuit with the map and constraints it was checked against.
#[derive(Debug, Clone, PartialEq)]
pub struct AcCache {
    pub ac: ArithmeticCircuit,
    pub map: VarMap,
    pub constraints: OrderingConstraintSet,
    /// Digest of whatever produced the circuit; compared by callers.
    pub digest: u64,
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn len(&mut self, x: usize) {
        self.u64(x as u64);
    }
    fn ids(&mut self, ids: &[u32]) {
        self.len(ids.len());
        ids.iter().for_each(|&i| self.u32(i));
    }
    fn str(&mut self, s: &str) {
        self.len(s.len());
        self.0.extend_from_slice(s.as_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| KcError::Cache(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn len(&mut self) -> Result<usize> {
        let n = self.u64()? as usize;
        if n > self.buf.len() {
            return Err(KcError::Cache(format!("implausible length {n}")));
        }
        Ok(n)
    }
    fn ids(&mut self) -> Result<Vec<u32>> {
        let n = self.len()?;
        (0..n).map(|_| self.u32()).collect()
    }
    fn str(&mut self) -> Result<String> {
        let n = self.len()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|e| KcError::Cache(e.to_string()))
    }
}

pub fn write_cache(cache: &AcCache) -> Vec<u8> {
    let mut w = Writer(Vec::new());
    w.0.extend_from_slice(MAGIC);
    w.u32(CACHE_VERSION);
    w.u64(cache.digest);
    let ac = &cache.ac;
    w.len(ac.cards.len());
    ac.cards.iter().for_each(|&c| w.len(c));
    w.len(ac.num_params);
    w.u32(ac.root);
    w.len(ac.nodes.len());
    for n in &ac.nodes {
        match n {
            AcNode::Indicator { var, value } => {
                w.u8(0);
                w.len(*var);
                w.len(*value);
            }
            AcNode::Parameter { index, var } => {
                w.u8(1);
                w.len(*index);
                w.len(*var);
            }
            AcNode::One => w.u8(2),
            AcNode::Zero => w.u8(3),
            AcNode::Product(c) => {
                w.u8(4);
                w.ids(c);
            }
            AcNode::Sum { children, split } => {
                w.u8(5);
                w.u64(split.map_or(u64::MAX, |s| s as u64));
                w.ids(children);
            }
        }
    }
    w.len(cache.map.len());
    cache.map.symbols().iter().for_each(|s| w.str(&s.to_string()));
    w.len(cache.constraints.len());
    for (a, b) in cache.constraints.pairs() {
        w.len(a);
        w.len(b);
    }
    w.0
}

pub fn read_cache(bytes: &[u8]) -> Result<AcCache> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(4)? != MAGIC {
        return Err(KcError::Cache("not an AC cache file".into()));
    }
    let version = r.u32()?;
    if version != CACHE_VERSION {
        return Err(KcError::Cache(format!(
            "format version {version}, expected {CACHE_VERSION}"
        )));
    }
    let digest = r.u64()?;
    let nv = r.len()?;
    let cards = (0..nv).map(|_| r.len()).collect::<Result<Vec<_>>>()?;
    let num_params = r.len()?;
    let root = r.u32()?;
    let nn = r.len()?;
    let mut nodes = Vec::with_capacity(nn);
    for i in 0..nn {
        let node = match r.u8()? {
            0 => AcNode::Indicator {
                var: r.len()?,
                value: r.len()?,
            },
            1 => AcNode::Parameter {
                index: r.len()?,
                var: r.len()?,
            },
            2 => AcNode::One,
            3 => AcNode::Zero,
            4 => AcNode::Product(r.ids()?),
            5 => {
                let s = r.u64()?;
                let split = (s != u64::MAX).then_some(s as usize);
                AcNode::Sum {
                    children: r.ids()?,
                    split,
                }
            }
            t => return Err(KcError::Cache(format!("node {i}: unknown tag {t}"))),
        };
        let bad_child = match &node {
            AcNode::Product(c) | AcNode::Sum { children: c, .. } => c.iter().any(|&k| k as usize >= i),
            _ => false,
        };
        if bad_child {
            return Err(KcError::Cache(format!("node {i} references a later node")));
        }
        nodes.push(node);
    }
    if root as usize >= nodes.len() {
        return Err(KcError::Cache("root out of range".into()));
    }
    let ns = r.len()?;
    let mut map = VarMap::new();
    for _ in 0..ns {
        let sym: Symbol = r.str()?.parse().map_err(KcError::Cache)?;
        map.push(sym);
    }
    let nc = r.len()?;
    let mut constraints = OrderingConstraintSet::new();
    for _ in 0..nc {
        let (a, b) = (r.len()?, r.len()?);
        constraints.insert(a, b);
    }
    if r.pos != bytes.len() {
        return Err(KcError::Cache("trailing bytes".into()));
    }
    Ok(AcCache {
        ac: ArithmeticCircuit {
            nodes,
            root,
            cards,
            num_params,
        },
        map,
        constraints,
        digest,
    })
}
