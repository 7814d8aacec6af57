//! Versioned binary model file: config, layout descriptor, raw
//! parameter values (little-endian f64), normalization statistics, and
//! the split provenance needed to re-evaluate the model on its source
//! dataset. Loading rejects any layout/config disagreement.

use std::io::Write;
use std::path::Path;

use crate::data::Normalization;
use crate::error::{Error, Result};
use crate::params::{Layout, ModelConfig, ParamGroup, RawParams, Variant};

const MAGIC: &[u8; 8] = b"GT2FLSM\0";
const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct SavedModel {
    pub config: ModelConfig,
    pub raw: RawParams,
    pub normalization: Normalization,
    pub split_seed: u64,
    pub split_ratio: f64,
    pub target_column: String,
}

fn variant_code(v: Variant) -> u8 {
    match v {
        Variant::ZGt2 => 0,
        Variant::MjGt2 => 1,
        Variant::It2H => 2,
        Variant::It2Hs => 3,
    }
}

fn variant_from_code(code: u8) -> Result<Variant> {
    Ok(match code {
        0 => Variant::ZGt2,
        1 => Variant::MjGt2,
        2 => Variant::It2H,
        3 => Variant::It2Hs,
        other => return Err(Error::Model(format!("unknown variant code {other}"))),
    })
}

pub fn save_model(path: &Path, model: &SavedModel) -> Result<()> {
    let mut buf = Vec::new();
    buf.extend_from_slice(MAGIC);
    put_u32(&mut buf, VERSION);

    buf.push(variant_code(model.config.variant));
    put_u32(&mut buf, model.config.rules as u32);
    put_u32(&mut buf, model.config.inputs as u32);
    put_u32(&mut buf, model.config.k as u32);

    put_u64(&mut buf, model.split_seed);
    put_f64(&mut buf, model.split_ratio);
    put_str(&mut buf, &model.target_column);

    let layout = model.raw.layout();
    put_u32(&mut buf, layout.entries().len() as u32);
    for &(group, offset, len) in layout.entries() {
        put_str(&mut buf, group.name());
        put_u64(&mut buf, offset as u64);
        put_u64(&mut buf, len as u64);
    }

    put_u64(&mut buf, model.raw.values().len() as u64);
    for &v in model.raw.values() {
        put_f64(&mut buf, v);
    }

    let norm = &model.normalization;
    put_u32(&mut buf, norm.original_feature_count as u32);
    put_u32(&mut buf, norm.kept_columns.len() as u32);
    for &c in &norm.kept_columns {
        put_u32(&mut buf, c as u32);
    }
    for &v in &norm.feature_means {
        put_f64(&mut buf, v);
    }
    for &v in &norm.feature_stds {
        put_f64(&mut buf, v);
    }
    put_f64(&mut buf, norm.target_mean);
    put_f64(&mut buf, norm.target_std);

    let mut file = std::fs::File::create(path)?;
    file.write_all(&buf)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<SavedModel> {
    let bytes = std::fs::read(path)?;
    let mut r = Cursor { bytes: &bytes, pos: 0 };

    let magic = r.take(8)?;
    if magic != MAGIC {
        return Err(Error::Model("not a model file (bad magic)".to_string()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Model(format!("unsupported model version {version}")));
    }

    let variant = variant_from_code(r.u8()?)?;
    let rules = r.u32()? as usize;
    let inputs = r.u32()? as usize;
    let k = r.u32()? as usize;
    let config = ModelConfig::new(variant, rules, inputs, k)
        .map_err(|e| Error::Model(format!("invalid stored config: {e}")))?;

    let split_seed = r.u64()?;
    let split_ratio = r.f64()?;
    if !(0.0 < split_ratio && split_ratio < 1.0) {
        return Err(Error::Model(format!("invalid stored split ratio {split_ratio}")));
    }
    let target_column = r.string()?;

    let expected = Layout::new(variant, rules, inputs);
    let n_groups = r.u32()? as usize;
    if n_groups != expected.entries().len() {
        return Err(Error::Model(format!(
            "layout has {n_groups} groups, config implies {}",
            expected.entries().len()
        )));
    }
    for &(group, offset, len) in expected.entries() {
        let name = r.string()?;
        let stored_offset = r.u64()? as usize;
        let stored_len = r.u64()? as usize;
        let stored_group = ParamGroup::from_name(&name)
            .ok_or_else(|| Error::Model(format!("unknown parameter group `{name}`")))?;
        if stored_group != group || stored_offset != offset || stored_len != len {
            return Err(Error::Model(format!(
                "layout mismatch at group `{name}`: stored ({stored_offset}, {stored_len}), config implies ({offset}, {len}) for `{}`",
                group.name()
            )));
        }
    }

    let n_values = r.u64()? as usize;
    if n_values != expected.total_len() {
        return Err(Error::Model(format!(
            "value count {n_values} does not match layout length {}",
            expected.total_len()
        )));
    }
    let mut values = Vec::with_capacity(n_values);
    for _ in 0..n_values {
        let v = r.f64()?;
        if !v.is_finite() {
            return Err(Error::Model("non-finite parameter value".to_string()));
        }
        values.push(v);
    }
    let raw = RawParams::new(values, expected)?;

    let original_feature_count = r.u32()? as usize;
    let n_kept = r.u32()? as usize;
    if n_kept != inputs {
        return Err(Error::Model(format!(
            "normalization keeps {n_kept} columns but the model expects {inputs} inputs"
        )));
    }
    let mut kept_columns = Vec::with_capacity(n_kept);
    for _ in 0..n_kept {
        let c = r.u32()? as usize;
        if c >= original_feature_count {
            return Err(Error::Model(format!("kept column {c} out of range")));
        }
        kept_columns.push(c);
    }
    let mut feature_means = Vec::with_capacity(n_kept);
    for _ in 0..n_kept {
        feature_means.push(r.f64()?);
    }
    let mut feature_stds = Vec::with_capacity(n_kept);
    for _ in 0..n_kept {
        let s = r.f64()?;
        if !(s > 0.0) {
            return Err(Error::Model(format!("non-positive stored feature std {s}")));
        }
        feature_stds.push(s);
    }
    let target_mean = r.f64()?;
    let target_std = r.f64()?;
    if !(target_std > 0.0) {
        return Err(Error::Model(format!("non-positive stored target std {target_std}")));
    }

    if r.pos != bytes.len() {
        return Err(Error::Model(format!(
            "{} trailing bytes after model payload",
            bytes.len() - r.pos
        )));
    }

    Ok(SavedModel {
        config,
        raw,
        normalization: Normalization {
            kept_columns,
            original_feature_count,
            feature_means,
            feature_stds,
            target_mean,
            target_std,
        },
        split_seed,
        split_ratio,
        target_column,
    })
}

fn put_u32(buf: &mut Vec<u8>, v: u32) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_u64(buf: &mut Vec<u8>, v: u64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_f64(buf: &mut Vec<u8>, v: f64) {
    buf.extend_from_slice(&v.to_le_bytes());
}

fn put_str(buf: &mut Vec<u8>, s: &str) {
    put_u32(buf, s.len() as u32);
    buf.extend_from_slice(s.as_bytes());
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Model("model file truncated".to_string()));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
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

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self) -> Result<String> {
        let len = self.u32()? as usize;
        let bytes = self.take(len)?;
        String::from_utf8(bytes.to_vec()).map_err(|_| Error::Model("invalid utf-8".to_string()))
    }
}
