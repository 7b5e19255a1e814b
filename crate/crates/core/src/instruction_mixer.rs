//! Interleaves reading-comprehension records with general-instruction
//! records at a fixed record-count ratio.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Seek, SeekFrom, Write};
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::stream_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixRatio {
    pub rc: u32,
    pub gi: u32,
}

impl FromStr for MixRatio {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidRatio(s.to_string());
        let (rc, gi) = s.split_once(':').ok_or_else(bad)?;
        let rc: u32 = rc.trim().parse().map_err(|_| bad())?;
        let gi: u32 = gi.trim().parse().map_err(|_| bad())?;
        if rc == 0 || gi == 0 {
            return Err(bad());
        }
        Ok(MixRatio { rc, gi })
    }
}

impl fmt::Display for MixRatio {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.rc, self.gi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sampling {
    /// Use the first `n_gi_target` instructions; fail if there are fewer.
    #[default]
    Truncate,
    /// Reuse instructions round-robin when there are fewer than needed.
    Cycle,
}

impl FromStr for Sampling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "truncate" => Ok(Sampling::Truncate),
            "cycle" => Ok(Sampling::Cycle),
            other => Err(Error::InvalidConfig(vec![format!(
                "unknown sampling mode {other:?} (expected truncate or cycle)"
            )])),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixPlan {
    pub ratio_rc: u32,
    pub ratio_gi: u32,
    pub n_rc: usize,
    pub n_gi_target: usize,
    pub seed: u64,
    pub sampling: Sampling,
}

/// `n_gi_target` is `n_rc * gi / rc` rounded half up.
pub fn plan_mix(n_rc: usize, ratio: MixRatio, seed: u64, sampling: Sampling) -> Result<MixPlan> {
    if ratio.rc == 0 || ratio.gi == 0 {
        return Err(Error::InvalidRatio(ratio.to_string()));
    }
    let (rc, gi) = (ratio.rc as u128, ratio.gi as u128);
    let n_gi_target = ((2 * n_rc as u128 * gi + rc) / (2 * rc)) as usize;
    Ok(MixPlan {
        ratio_rc: ratio.rc,
        ratio_gi: ratio.gi,
        n_rc,
        n_gi_target,
        seed,
        sampling,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Pick {
    Rc(usize),
    Gi(usize),
}

/// The shuffled sequence of records to emit, given how many instruction
/// records are available.
pub fn mix_order(plan: &MixPlan, n_gi_available: usize) -> Result<Vec<Pick>> {
    let gi: Vec<usize> = match plan.sampling {
        Sampling::Truncate => {
            if n_gi_available < plan.n_gi_target {
                return Err(Error::InsufficientInstructions {
                    needed: plan.n_gi_target,
                    available: n_gi_available,
                });
            }
            (0..plan.n_gi_target).collect()
        }
        Sampling::Cycle => {
            if n_gi_available == 0 && plan.n_gi_target > 0 {
                return Err(Error::InsufficientInstructions {
                    needed: plan.n_gi_target,
                    available: 0,
                });
            }
            (0..plan.n_gi_target).map(|i| i % n_gi_available).collect()
        }
    };
    let mut order: Vec<Pick> = (0..plan.n_rc).map(Pick::Rc).chain(gi.into_iter().map(Pick::Gi)).collect();
    order.shuffle(&mut stream_rng(plan.seed, "mix"));
    Ok(order)
}

/// Byte offsets and lengths of the non-blank lines of a file, without the
/// line terminator.
pub fn index_lines(path: &Path) -> Result<Vec<(u64, u32)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::with_capacity(1 << 20, file);
    let mut out = Vec::new();
    let mut buf = Vec::new();
    let mut offset = 0u64;
    loop {
        buf.clear();
        let n = reader.read_until(b'\n', &mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        let mut len = buf.len();
        while len > 0 && matches!(buf[len - 1], b'\n' | b'\r') {
            len -= 1;
        }
        if buf[..len].iter().any(|b| !b.is_ascii_whitespace()) {
            out.push((offset, len as u32));
        }
        offset += n as u64;
    }
    Ok(out)
}

struct LineFile {
    path: std::path::PathBuf,
    file: File,
    lines: Vec<(u64, u32)>,
}

impl LineFile {
    fn open(path: &Path) -> Result<Self> {
        let lines = index_lines(path)?;
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        Ok(LineFile {
            path: path.to_path_buf(),
            file,
            lines,
        })
    }

    fn read(&mut self, i: usize, buf: &mut Vec<u8>) -> Result<()> {
        let (offset, len) = self.lines[i];
        buf.resize(len as usize, 0);
        self.file
            .seek(SeekFrom::Start(offset))
            .and_then(|_| self.file.read_exact(buf))
            .map_err(|e| Error::io(&self.path, e))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MixSummary {
    pub plan: MixPlan,
    pub n_gi_available: usize,
    pub records_out: usize,
}

/// Mixes two jsonl files line by line. Every instruction record must be a
/// JSON object with a string `text` field; lines are copied verbatim.
pub fn mix_files(
    rc_path: &Path,
    gi_path: &Path,
    ratio: MixRatio,
    seed: u64,
    sampling: Sampling,
    out: &mut dyn Write,
) -> Result<MixSummary> {
    let mut rc = LineFile::open(rc_path)?;
    let mut gi = LineFile::open(gi_path)?;
    let plan = plan_mix(rc.lines.len(), ratio, seed, sampling)?;
    let order = mix_order(&plan, gi.lines.len())?;
    let mut buf = Vec::new();
    let mut checked = vec![false; gi.lines.len()];
    for pick in &order {
        match *pick {
            Pick::Rc(i) => rc.read(i, &mut buf)?,
            Pick::Gi(j) => {
                gi.read(j, &mut buf)?;
                if !checked[j] {
                    check_instruction(&buf, gi_path, j)?;
                    checked[j] = true;
                }
            }
        }
        buf.push(b'\n');
        out.write_all(&buf).map_err(|e| Error::io("<output>", e))?;
    }
    Ok(MixSummary {
        plan,
        n_gi_available: gi.lines.len(),
        records_out: order.len(),
    })
}

fn check_instruction(line: &[u8], path: &Path, index: usize) -> Result<()> {
    #[derive(Deserialize)]
    struct Instruction<'a> {
        #[serde(borrow)]
        #[allow(dead_code)]
        text: std::borrow::Cow<'a, str>,
    }
    serde_json::from_slice::<Instruction<'_>>(line)
        .map(|_| ())
        .map_err(|e| Error::Malformed {
            location: format!("{} record {}", path.display(), index + 1),
            reason: e.to_string(),
        })
}
