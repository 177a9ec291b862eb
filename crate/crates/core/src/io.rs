//! File formats: the flat binary training-set layout, its CSV mirror, and
//! atomic writes.
//!
//! Binary layout: the five bytes `NEBL1`, then `d, m, N, p, seed` as
//! little-endian `u64`, then `N × p` parameters and `N × (m·d)` observations
//! as little-endian `f64`, both row-major.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::TrainingSet;

pub const MAGIC: &[u8; 5] = b"NEBL1";

/// Writes `bytes` to a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| Error::Config(format!("not a file path: {}", path.display())))?;
    let tmp = path.with_file_name(format!(".{}.tmp", file_name.to_string_lossy()));
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)?;
    Ok(())
}

pub fn encode_training_set(ts: &TrainingSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(5 + 40 + 8 * (ts.theta.len() + ts.x.len()));
    out.extend_from_slice(MAGIC);
    for v in [ts.d, ts.m, ts.n, ts.p] {
        out.extend_from_slice(&(v as u64).to_le_bytes());
    }
    out.extend_from_slice(&ts.seed.to_le_bytes());
    for v in ts.theta.iter().chain(&ts.x) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_training_set(bytes: &[u8]) -> Result<TrainingSet> {
    let mut r = bytes;
    let mut magic = [0u8; 5];
    r.read_exact(&mut magic)
        .map_err(|_| Error::Format("truncated header".into()))?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic, expected NEBL1".into()));
    }
    let mut word = [0u8; 8];
    let mut header = [0u64; 5];
    for h in &mut header {
        r.read_exact(&mut word)
            .map_err(|_| Error::Format("truncated header".into()))?;
        *h = u64::from_le_bytes(word);
    }
    let [d, m, n, p, seed] = header;
    let (d, m, n, p) = (d as usize, m as usize, n as usize, p as usize);
    let n_theta = n
        .checked_mul(p)
        .ok_or_else(|| Error::Format("header overflow".into()))?;
    let n_x = n
        .checked_mul(m)
        .and_then(|v| v.checked_mul(d))
        .ok_or_else(|| Error::Format("header overflow".into()))?;
    if r.len() != 8 * (n_theta + n_x) {
        return Err(Error::Format(format!(
            "payload has {} bytes, header implies {}",
            r.len(),
            8 * (n_theta + n_x)
        )));
    }
    let values: Vec<f64> = r
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let (theta, x) = values.split_at(n_theta);
    Ok(TrainingSet {
        x: x.to_vec(),
        theta: theta.to_vec(),
        n,
        m,
        d,
        p,
        seed,
        purpose: "train".into(),
    })
}

pub fn save_training_set(ts: &TrainingSet, path: &Path) -> Result<()> {
    write_atomic(path, &encode_training_set(ts))
}

pub fn load_training_set(path: &Path) -> Result<TrainingSet> {
    decode_training_set(&fs::read(path)?)
}

/// CSV mirror: columns `theta_1..theta_p, z_1_1..z_m_d` (replicate, coordinate).
pub fn training_set_csv(ts: &TrainingSet) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header: Vec<String> = (1..=ts.p).map(|k| format!("theta_{k}")).collect();
    for r in 1..=ts.m {
        for c in 1..=ts.d {
            header.push(format!("z_{r}_{c}"));
        }
    }
    w.write_record(&header)?;
    let dim = ts.input_dim();
    for i in 0..ts.n {
        let row: Vec<String> = ts.theta[i * ts.p..(i + 1) * ts.p]
            .iter()
            .chain(&ts.x[i * dim..(i + 1) * dim])
            .map(|v| format!("{v:?}"))
            .collect();
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::linear_gaussian_sample;
    use proptest::prelude::*;

    #[test]
    fn header_layout() {
        let ts = linear_gaussian_sample(0.0, 1.0, 1.0, 3, 2, 77).unwrap();
        let bytes = encode_training_set(&ts);
        assert_eq!(&bytes[..5], b"NEBL1");
        assert_eq!(u64::from_le_bytes(bytes[5..13].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[13..21].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[21..29].try_into().unwrap()), 2);
        assert_eq!(u64::from_le_bytes(bytes[29..37].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[37..45].try_into().unwrap()), 77);
        assert_eq!(f64::from_le_bytes(bytes[45..53].try_into().unwrap()), ts.theta[0]);
        assert_eq!(bytes.len(), 45 + 8 * (2 + 6));
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let ts = linear_gaussian_sample(0.0, 1.0, 1.0, 3, 2, 77).unwrap();
        let bytes = encode_training_set(&ts);
        assert!(decode_training_set(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(decode_training_set(&bad).is_err());
    }

    #[test]
    fn csv_mirror_shape() {
        let ts = linear_gaussian_sample(0.0, 1.0, 1.0, 2, 3, 1).unwrap();
        let text = String::from_utf8(training_set_csv(&ts).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "theta_1,z_1_1,z_2_1");
        assert_eq!(lines.len(), 4);
    }

    proptest! {
        #[test]
        fn binary_round_trip(n in 1usize..20, m in 1usize..4, seed in any::<u64>()) {
            let ts = linear_gaussian_sample(0.5, 2.0, 1.0, m, n, seed).unwrap();
            let back = decode_training_set(&encode_training_set(&ts)).unwrap();
            prop_assert_eq!(back.x, ts.x);
            prop_assert_eq!(back.theta, ts.theta);
            prop_assert_eq!((back.n, back.m, back.d, back.p, back.seed), (ts.n, ts.m, ts.d, ts.p, ts.seed));
        }
    }
}
