//! Binary corpus files: a JSON header followed by the row-major sample
//! payload as little-endian 64-bit floats. The payload representation is
//! exact, so read∘write is the identity on finite doubles.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::{SampleSet, Signal};

const MAGIC: &[u8; 4] = b"SBC1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusHeader {
    pub d: usize,
    pub grid: Vec<usize>,
    pub modality: String,
    pub n: usize,
    pub seed: u64,
    /// Generator spec for synthesized corpora; free-form otherwise.
    pub generator: serde_json::Value,
}

pub fn write_corpus(path: &Path, set: &SampleSet, generator: serde_json::Value) -> Result<()> {
    let header = CorpusHeader {
        d: set.dim(),
        grid: set.grid().to_vec(),
        modality: set.modality().to_string(),
        n: set.len(),
        seed: set.seed(),
        generator,
    };
    let header_bytes = serde_json::to_vec(&header)?;
    let mut w = BufWriter::new(File::create(path)?);
    w.write_all(MAGIC)?;
    w.write_all(&(header_bytes.len() as u64).to_le_bytes())?;
    w.write_all(&header_bytes)?;
    for sample in set.samples() {
        for v in sample.values() {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn read_corpus(path: &Path) -> Result<(SampleSet, CorpusHeader)> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::CorruptCorpus("bad magic".into()));
    }
    let mut len_bytes = [0u8; 8];
    r.read_exact(&mut len_bytes)?;
    let header_len = u64::from_le_bytes(len_bytes) as usize;
    if header_len > 16 * 1024 * 1024 {
        return Err(Error::CorruptCorpus("header too large".into()));
    }
    let mut header_bytes = vec![0u8; header_len];
    r.read_exact(&mut header_bytes)?;
    let header: CorpusHeader = serde_json::from_slice(&header_bytes)?;
    let cells: usize = header.grid.iter().product();
    if cells != header.d {
        return Err(Error::CorruptCorpus("grid does not match d".into()));
    }
    let expected_bytes = header
        .n
        .checked_mul(header.d)
        .and_then(|cells| cells.checked_mul(8))
        .ok_or_else(|| Error::CorruptCorpus("sample count overflows".into()))?;
    let mut payload = Vec::new();
    r.read_to_end(&mut payload)?;
    if payload.len() != expected_bytes {
        return Err(Error::CorruptCorpus(format!(
            "payload holds {} bytes, expected {expected_bytes}",
            payload.len(),
        )));
    }
    let mut samples = Vec::with_capacity(header.n);
    for i in 0..header.n {
        let mut values = Vec::with_capacity(header.d);
        for j in 0..header.d {
            let off = (i * header.d + j) * 8;
            let mut buf = [0u8; 8];
            buf.copy_from_slice(&payload[off..off + 8]);
            values.push(f64::from_le_bytes(buf));
        }
        // Row index as the id keeps pipelines reproducible.
        samples.push(Signal::with_id(
            values,
            header.grid.clone(),
            header.modality.clone(),
            i as u64,
        )?);
    }
    Ok((SampleSet::new(samples, header.seed)?, header))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::make_signal;
    use tempfile::tempdir;

    #[test]
    fn round_trip_is_bit_exact() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.bin");
        let samples = vec![
            make_signal(vec![0.1, -0.25, 1e-300, 3.5], vec![2, 2], "image").unwrap(),
            make_signal(vec![-0.0, 2.5e17, -1.0, 0.0], vec![2, 2], "image").unwrap(),
        ];
        let set = SampleSet::new(samples, 42).unwrap();
        write_corpus(&path, &set, serde_json::json!({"kind": "manual"})).unwrap();
        let (read, header) = read_corpus(&path).unwrap();
        assert_eq!(header.n, 2);
        assert_eq!(header.seed, 42);
        for (a, b) in set.samples().iter().zip(read.samples()) {
            let bits_a: Vec<u64> = a.values().iter().map(|v| v.to_bits()).collect();
            let bits_b: Vec<u64> = b.values().iter().map(|v| v.to_bits()).collect();
            assert_eq!(bits_a, bits_b);
        }
    }

    #[test]
    fn rewrite_preserves_bytes() {
        let dir = tempdir().unwrap();
        let p1 = dir.path().join("a.bin");
        let p2 = dir.path().join("b.bin");
        let set = SampleSet::new(
            vec![make_signal(vec![0.3, 0.7], vec![2], "sound").unwrap()],
            7,
        )
        .unwrap();
        write_corpus(&p1, &set, serde_json::Value::Null).unwrap();
        let (read, _) = read_corpus(&p1).unwrap();
        write_corpus(&p2, &read, serde_json::Value::Null).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let dir = tempdir().unwrap();
        let path = dir.path().join("c.bin");
        let set =
            SampleSet::new(vec![make_signal(vec![1.0, 2.0], vec![2], "t").unwrap()], 0).unwrap();
        write_corpus(&path, &set, serde_json::Value::Null).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 4]).unwrap();
        assert!(matches!(read_corpus(&path), Err(Error::CorruptCorpus(_))));
    }
}
