//! Sparse SDPA (.dat-s) interchange.
//!
//! The instance is `minimize cᵀx` subject to `Σ_i F_i x_i − F_0 ⪰ 0`, so the
//! objective is negated. Blocks 1–8 are the moment matrices in
//! [`MomentProblem::blocks`] order; the last block is diagonal and holds each
//! equality `aᵀx = r` as the pair `aᵀx − r ≥ 0`, `r − aᵀx ≥ 0`.

use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use super::problem::MomentProblem;
use crate::error::{Error, Result};

/// One nonzero of `F_mat`, block `block`, upper-triangular position (i, j).
/// All indices are 1-based as in the file.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdpaEntry {
    pub mat: usize,
    pub block: usize,
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SdpaInstance {
    pub block_struct: Vec<i64>,
    pub c: Vec<f64>,
    pub entries: Vec<SdpaEntry>,
}

impl SdpaInstance {
    pub fn num_vars(&self) -> usize {
        self.c.len()
    }

    pub fn from_problem(p: &MomentProblem) -> Self {
        let n = p.block_size();
        let mut entries = Vec::new();
        for (bi, block) in p.blocks.iter().enumerate() {
            for i in 0..n {
                for j in i..n {
                    for (v, coef) in p.entry_terms(*block, i, j) {
                        entries.push(SdpaEntry {
                            mat: v + 1,
                            block: bi + 1,
                            i: i + 1,
                            j: j + 1,
                            value: coef,
                        });
                    }
                }
            }
        }
        let eq_block = p.blocks.len() + 1;
        for (e, con) in p.constraints.iter().enumerate() {
            for (k, sign) in [(2 * e + 1, 1.0), (2 * e + 2, -1.0)] {
                if con.rhs != 0.0 {
                    entries.push(SdpaEntry {
                        mat: 0,
                        block: eq_block,
                        i: k,
                        j: k,
                        value: sign * con.rhs,
                    });
                }
                for &(v, a) in &con.coeffs {
                    entries.push(SdpaEntry {
                        mat: v + 1,
                        block: eq_block,
                        i: k,
                        j: k,
                        value: sign * a,
                    });
                }
            }
        }
        let mut c = vec![0.0; p.num_vars()];
        for &(v, coef) in &p.objective {
            c[v] = -coef;
        }
        let mut block_struct = vec![n as i64; p.blocks.len()];
        block_struct.push(-2 * p.constraints.len() as i64);
        let mut inst = SdpaInstance {
            block_struct,
            c,
            entries,
        };
        inst.canonicalize();
        inst
    }

    /// Sorts entries by (mat, block, i, j).
    pub fn canonicalize(&mut self) {
        self.entries
            .sort_by(|a, b| (a.mat, a.block, a.i, a.j).cmp(&(b.mat, b.block, b.i, b.j)));
    }

    /// The file body without comment lines.
    pub fn body(&self) -> String {
        let mut s = String::new();
        let nblocks = self.block_struct.len();
        let _ = writeln!(s, "{}", self.c.len());
        let _ = writeln!(s, "{nblocks}");
        let bs: Vec<String> = self.block_struct.iter().map(|b| b.to_string()).collect();
        let _ = writeln!(s, "{}", bs.join(" "));
        let cs: Vec<String> = self.c.iter().map(|v| fmt_num(*v)).collect();
        let _ = writeln!(s, "{}", cs.join(" "));
        for e in &self.entries {
            let _ = writeln!(s, "{} {} {} {} {}", e.mat, e.block, e.i, e.j, fmt_num(e.value));
        }
        s
    }

    /// Value of entry (block, i, j) of Σ_i F_i x_i − F_0 for 0-based `x`.
    pub fn slack_entries(&self, x: &[f64]) -> Vec<(usize, usize, usize, f64)> {
        let mut acc: std::collections::BTreeMap<(usize, usize, usize), f64> = Default::default();
        for e in &self.entries {
            let v = if e.mat == 0 { -e.value } else { e.value * x[e.mat - 1] };
            *acc.entry((e.block, e.i, e.j)).or_insert(0.0) += v;
        }
        acc.into_iter().map(|((b, i, j), v)| (b, i, j, v)).collect()
    }
}

fn fmt_num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v}")
    }
}

pub fn content_hash(body: &str) -> String {
    let digest = Sha256::digest(body.as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Full file text, header comments included.
pub fn render_sdpa(p: &MomentProblem) -> String {
    let inst = SdpaInstance::from_problem(p);
    let body = inst.body();
    let na = p.basis.iter().map(|e| &e.0).collect::<std::collections::BTreeSet<_>>().len();
    let nc = p.basis.iter().map(|e| &e.1).collect::<std::collections::BTreeSet<_>>().len();
    let mut s = String::new();
    let _ = writeln!(s, "\"real quantum theory moment relaxation, maximize W as minimize -W");
    let _ = writeln!(s, "\"level {} partial-transpose {}", p.level, p.enforce_pt);
    let _ = writeln!(s, "\"block size {} alice words {} charlie words {}", p.block_size(), na, nc);
    let _ = writeln!(s, "\"variables {} equalities {}", p.num_vars(), p.constraints.len());
    let _ = writeln!(s, "\"sha256 {}", content_hash(&body));
    s.push_str(&body);
    s
}

pub fn export_sdpa(p: &MomentProblem, destination: &Path) -> Result<String> {
    let text = render_sdpa(p);
    std::fs::write(destination, &text).map_err(|e| Error::io(destination, e))?;
    Ok(content_hash(&SdpaInstance::from_problem(p).body()))
}

fn parse_err(line: usize, msg: impl Into<String>) -> Error {
    Error::SdpaParse {
        line,
        msg: msg.into(),
    }
}

/// Parses sparse SDPA text; comment lines start with `"` or `*`.
pub fn parse_sdpa(text: &str) -> Result<SdpaInstance> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('"') && !l.starts_with('*'));
    let clean = |l: &str| l.replace(['{', '}', '(', ')', ','], " ");
    let mut next = |what: &str| lines.next().ok_or_else(|| parse_err(0, format!("missing {what}")));

    let (ln, l) = next("variable count")?;
    let m: usize = first_token(&clean(l)).parse().map_err(|_| parse_err(ln, "bad variable count"))?;
    let (ln, l) = next("block count")?;
    let nb: usize = first_token(&clean(l)).parse().map_err(|_| parse_err(ln, "bad block count"))?;
    let (ln, l) = next("block structure")?;
    let block_struct: Vec<i64> = clean(l)
        .split_whitespace()
        .take(nb)
        .map(|t| t.parse::<i64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(ln, "bad block structure"))?;
    if block_struct.len() != nb || block_struct.contains(&0) {
        return Err(parse_err(ln, "block structure length or size"));
    }
    let (ln, l) = next("objective")?;
    let c: Vec<f64> = clean(l)
        .split_whitespace()
        .take(m)
        .map(|t| t.parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| parse_err(ln, "bad objective vector"))?;
    if c.len() != m {
        return Err(parse_err(ln, format!("objective has {} of {m} entries", c.len())));
    }
    let mut entries = Vec::new();
    for (ln, l) in lines {
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < 5 {
            return Err(parse_err(ln, "entry needs 5 fields"));
        }
        let int = |s: &str| s.parse::<usize>().map_err(|_| parse_err(ln, "bad index"));
        let e = SdpaEntry {
            mat: int(t[0])?,
            block: int(t[1])?,
            i: int(t[2])?,
            j: int(t[3])?,
            value: t[4].parse().map_err(|_| parse_err(ln, "bad value"))?,
        };
        if e.mat > m || e.block == 0 || e.block > nb {
            return Err(parse_err(ln, "matrix or block index out of range"));
        }
        let size = block_struct[e.block - 1].unsigned_abs() as usize;
        if e.i == 0 || e.j == 0 || e.i > size || e.j > size || e.i > e.j {
            return Err(parse_err(ln, "entry position outside upper triangle"));
        }
        if block_struct[e.block - 1] < 0 && e.i != e.j {
            return Err(parse_err(ln, "off-diagonal entry in diagonal block"));
        }
        entries.push(e);
    }
    let mut inst = SdpaInstance {
        block_struct,
        c,
        entries,
    };
    inst.canonicalize();
    Ok(inst)
}

fn first_token(s: &str) -> &str {
    s.split_whitespace().next().unwrap_or("")
}

pub fn read_sdpa(path: &Path) -> Result<SdpaInstance> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_sdpa(&text)
}
