//! File formats: symbol files, point lists, Hermite-basis matrices and the
//! small value parsers shared by the subcommands.

use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::Arc;

use anyhow::{anyhow, bail, Context, Result};
use num_complex::Complex64;
use num_rational::BigRational;
use weylcalc::fsring::rat_from_f64;
use weylcalc::quant::HermiteOperator;
use weylcalc::{PhasePoint, Registry, SymExpr};

/// A symbol file: an optional registry header (`dim`, `param`, `base`,
/// `exp` lines) followed by one `symbol EXPR` line. A file holding a single
/// bare expression is read in dimension one.
#[derive(Clone, Debug)]
pub struct SymbolFile {
    pub registry: Arc<Registry>,
    pub text: String,
}

impl SymbolFile {
    pub fn parse(src: &str) -> Result<Self> {
        let mut header = Vec::new();
        let mut symbol = None;
        let mut bare = Vec::new();
        for (k, raw) in src.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix("symbol") {
                if symbol.is_some() {
                    bail!("line {}: more than one `symbol` line", k + 1);
                }
                symbol = Some(rest.trim().to_string());
            } else if ["dim", "param", "base", "exp"]
                .iter()
                .any(|kw| line.split_whitespace().next() == Some(*kw))
            {
                header.push(line.to_string());
            } else {
                bare.push(line.to_string());
            }
        }
        let (registry, text) = match (header.is_empty(), symbol) {
            (true, None) if bare.len() == 1 => (Registry::plain(1), bare.remove(0)),
            (false, Some(s)) if bare.is_empty() => (Registry::from_text(&header.join("\n"))?, s),
            (true, Some(s)) if bare.is_empty() => (Registry::plain(1), s),
            _ => bail!("expected a registry header and one `symbol` line, or a single bare expression"),
        };
        Ok(SymbolFile { registry, text })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let src = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::parse(&src).with_context(|| format!("parsing symbol file {}", path.display()))
    }

    pub fn expr(&self) -> Result<SymExpr> {
        Ok(SymExpr::parse(&self.registry, &self.text)?)
    }

    /// The symbol with a bare polynomial registered as base `a`, so that
    /// operations needing `1/a` can express it.
    pub fn lifted(&self) -> Result<SymExpr> {
        let e = self.expr()?;
        if !self.registry.bases().is_empty() || e.as_poly().is_none() {
            return Ok(e);
        }
        let reg = Registry::from_text(&format!("dim {}\nbase a = {}", self.registry.dim(), self.text))?;
        Ok(SymExpr::parse(&reg, "a")?)
    }
}

/// Reads phase-space points from CSV with columns `x1..xd, xi1..xid` (a
/// header row is required; for `d = 1` the names `x, xi` work as well).
pub fn read_points(path: &Path, dim: usize) -> Result<Vec<PhasePoint>> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = rdr.headers()?.clone();
    let col = |name: &str, alt: Option<&str>| {
        headers
            .iter()
            .position(|h| h == name || Some(h) == alt)
            .ok_or_else(|| anyhow!("{}: missing column `{name}`", path.display()))
    };
    let mut idx = Vec::with_capacity(2 * dim);
    for i in 1..=dim {
        idx.push(col(&format!("x{i}"), (dim == 1).then_some("x"))?);
    }
    for i in 1..=dim {
        idx.push(col(&format!("xi{i}"), (dim == 1).then_some("xi"))?);
    }
    let mut out = Vec::new();
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let vals = idx
            .iter()
            .map(|&c| {
                rec.get(c)
                    .unwrap_or("")
                    .parse::<f64>()
                    .map_err(|_| anyhow!("{}: row {}: bad number in column {}", path.display(), row + 2, c + 1))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(PhasePoint::new(vals[..dim].to_vec(), vals[dim..].to_vec()));
    }
    if out.is_empty() {
        bail!("{}: no points", path.display());
    }
    Ok(out)
}

/// `"re"` or `"re,im"`.
pub fn parse_complex(s: &str) -> Result<Complex64> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| anyhow!("bad number `{t}` in `{s}`"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => bail!("expected RE or RE,IM, got `{s}`"),
    }
}

/// `"p/q"`, an integer, or a decimal converted exactly.
pub fn parse_rational(s: &str) -> Result<BigRational> {
    if let Ok(r) = BigRational::from_str(s.trim()) {
        return Ok(r);
    }
    let v: f64 = s
        .trim()
        .parse()
        .map_err(|_| anyhow!("expected a rational number, got `{s}`"))?;
    // decimals like 0.5 are read through their shortest decimal form
    let text = format!("{v}");
    match text.split_once('.') {
        Some((int, frac)) if !text.contains('e') => {
            let den = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
            let num: num_bigint::BigInt = format!("{int}{frac}").parse()?;
            Ok(BigRational::new(num, den))
        }
        _ => Ok(rat_from_f64(v)?),
    }
}

/// `"lo:hi"` (half-open).
pub fn parse_range(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(':').ok_or_else(|| anyhow!("expected LO:HI, got `{s}`"))?;
    Ok((a.trim().parse()?, b.trim().parse()?))
}

const MAGIC: &[u8; 4] = b"WCMX";
const FORMAT_VERSION: u16 = 1;
const FLAG_HERMITIAN: u16 = 1;

/// Binary matrix: `WCMX`, version `u16`, flags `u16`, `n` `u64`, `n_pad`
/// `u64`, then `n²` row-major `(re, im)` pairs of little-endian `f64`.
pub fn write_matrix(op: &HermiteOperator) -> Vec<u8> {
    let n = op.n_basis();
    let mut out = Vec::with_capacity(24 + 16 * n * n);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    let flags = if op.is_hermitian() { FLAG_HERMITIAN } else { 0 };
    out.extend_from_slice(&flags.to_le_bytes());
    out.extend_from_slice(&(n as u64).to_le_bytes());
    out.extend_from_slice(&(op.n_pad() as u64).to_le_bytes());
    for c in op.to_row_major() {
        out.extend_from_slice(&c.re.to_le_bytes());
        out.extend_from_slice(&c.im.to_le_bytes());
    }
    out
}

pub fn read_matrix(mut r: impl Read) -> Result<HermiteOperator> {
    let mut head = [0u8; 24];
    r.read_exact(&mut head).context("matrix header truncated")?;
    if &head[..4] != MAGIC {
        bail!("not a matrix file (bad magic)");
    }
    let version = u16::from_le_bytes([head[4], head[5]]);
    if version != FORMAT_VERSION {
        bail!("unsupported matrix format version {version}");
    }
    let flags = u16::from_le_bytes([head[6], head[7]]);
    let n = u64::from_le_bytes(head[8..16].try_into()?) as usize;
    let n_pad = u64::from_le_bytes(head[16..24].try_into()?) as usize;
    if n == 0 || n > 1 << 15 {
        bail!("implausible matrix dimension {n}");
    }
    let mut body = Vec::new();
    r.read_to_end(&mut body)?;
    if body.len() != 16 * n * n {
        bail!("matrix body has {} bytes, expected {}", body.len(), 16 * n * n);
    }
    let data: Vec<Complex64> = body
        .chunks_exact(16)
        .map(|c| {
            Complex64::new(
                f64::from_le_bytes(c[..8].try_into().unwrap()),
                f64::from_le_bytes(c[8..].try_into().unwrap()),
            )
        })
        .collect();
    let op = HermiteOperator::from_row_major(n, &data, n_pad)?;
    if flags & FLAG_HERMITIAN != 0 && !op.is_hermitian() {
        bail!("matrix is flagged Hermitian but is not");
    }
    Ok(op)
}

pub fn read_matrix_file(path: &Path) -> Result<HermiteOperator> {
    let f = std::fs::File::open(path).with_context(|| format!("opening {}", path.display()))?;
    read_matrix(std::io::BufReader::new(f)).with_context(|| format!("reading matrix {}", path.display()))
}

/// CSV debug form: `row,col,re,im`, one line per entry.
pub fn matrix_csv(op: &HermiteOperator) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["row", "col", "re", "im"])?;
    let n = op.n_basis();
    for i in 0..n {
        for j in 0..n {
            let c = op.get(i, j);
            w.write_record([i.to_string(), j.to_string(), num(c.re), num(c.im)])?;
        }
    }
    w.flush()?;
    Ok(w.into_inner()?)
}

/// CSV writer into memory.
pub struct CsvBuf(csv::Writer<Vec<u8>>);

impl CsvBuf {
    pub fn new(header: &[String]) -> Result<Self> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(header)?;
        Ok(CsvBuf(w))
    }

    pub fn row(&mut self, fields: &[String]) -> Result<()> {
        self.0.write_record(fields)?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<Vec<u8>> {
        self.0.flush()?;
        Ok(self.0.into_inner()?)
    }
}

/// Column names `x1..xd, xi1..xid` (or `x, xi` for `d = 1`).
pub fn point_columns(dim: usize) -> Vec<String> {
    if dim == 1 {
        return vec!["x".into(), "xi".into()];
    }
    (1..=dim)
        .map(|i| format!("x{i}"))
        .chain((1..=dim).map(|i| format!("xi{i}")))
        .collect()
}

pub fn point_fields(w: &PhasePoint) -> Vec<String> {
    w.x.iter().chain(&w.xi).map(|&v| num(v)).collect()
}

/// Shortest round-trip float text, switching to exponent form for very
/// small or large magnitudes.
pub fn num(v: f64) -> String {
    format!("{v:?}")
}

pub fn write_all(path: &Path, bytes: &[u8]) -> Result<()> {
    let mut f = std::fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    f.write_all(bytes)?;
    Ok(())
}
