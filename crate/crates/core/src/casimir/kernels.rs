use std::fmt;
use std::path::Path;
use std::sync::Arc;

use crate::error::{invalid, Error, Result};

/// Perfect-reflector first-order response g⁽¹⁾(Z) = e⁻ᶻ(1 + Z + 16Z²/45 + Z³/45).
pub fn g1_perfect_reflector(z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(invalid(format!("g1 is defined for Z = kz >= 0, got {z}")));
    }
    Ok(g1_unchecked(z))
}

#[inline]
pub(crate) fn g1_unchecked(z: f64) -> f64 {
    (-z).exp() * (1.0 + z * (1.0 + z * (16.0 / 45.0 + z / 45.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum G2Source {
    ClosedFormExternal,
    TabulatedGrid,
    Disabled,
}

impl fmt::Display for G2Source {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            G2Source::ClosedFormExternal => "closed-form-external",
            G2Source::TabulatedGrid => "tabulated-grid",
            G2Source::Disabled => "disabled",
        })
    }
}

/// g⁽²⁾ sampled on a regular (Zᵢ, Zⱼ) grid, bilinearly interpolated.
///
/// File layout (plain text, `#` starts a comment line):
///
/// ```text
/// n1 n2
/// z1_min z1_max
/// z2_min z2_max
/// v[0][0] v[0][1] ... v[0][n2-1]
/// ...
/// v[n1-1][0] ...
/// ```
///
/// Row `i` holds Zᵢ = z1_min + i·(z1_max − z1_min)/(n1 − 1), column `j`
/// holds Zⱼ likewise. The second axis must extend to negative values to
/// cover the difference-frequency branch g⁽²⁾(kᵢz, −kⱼz). Values may be
/// spread over any number of lines as long as they are in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct G2Table {
    n1: usize,
    n2: usize,
    z1: (f64, f64),
    z2: (f64, f64),
    values: Vec<f64>,
}

impl G2Table {
    pub fn new(
        n1: usize,
        n2: usize,
        z1: (f64, f64),
        z2: (f64, f64),
        values: Vec<f64>,
    ) -> Result<Self> {
        if n1 < 2 || n2 < 2 {
            return Err(invalid("g2 table needs at least 2 points per axis"));
        }
        if !(z1.0 < z1.1) || !(z2.0 < z2.1) {
            return Err(invalid("g2 table ranges must be increasing"));
        }
        if values.len() != n1 * n2 {
            return Err(invalid(format!(
                "g2 table expects {} values, got {}",
                n1 * n2,
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(invalid("g2 table contains non-finite values"));
        }
        Ok(Self {
            n1,
            n2,
            z1,
            z2,
            values,
        })
    }

    /// Tabulates `f` on the given grid.
    pub fn from_fn(
        n1: usize,
        n2: usize,
        z1: (f64, f64),
        z2: (f64, f64),
        f: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let mut values = Vec::with_capacity(n1 * n2);
        for i in 0..n1 {
            let a = z1.0 + (z1.1 - z1.0) * i as f64 / (n1 - 1) as f64;
            for j in 0..n2 {
                let b = z2.0 + (z2.1 - z2.0) * j as f64 / (n2 - 1) as f64;
                values.push(f(a, b));
            }
        }
        Self::new(n1, n2, z1, z2, values)
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut nums = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .flat_map(str::split_whitespace);
        let mut next = |what: &str| -> Result<&str> {
            nums.next()
                .ok_or_else(|| Error::Parse(format!("g2 table truncated while reading {what}")))
        };
        let parse_usize = |s: &str| {
            s.parse::<usize>()
                .map_err(|e| Error::Parse(format!("g2 table dimension: {e}")))
        };
        let parse_f = |s: &str| {
            s.parse::<f64>()
                .map_err(|e| Error::Parse(format!("g2 table value: {e}")))
        };
        let n1 = parse_usize(next("n1")?)?;
        let n2 = parse_usize(next("n2")?)?;
        let z1 = (parse_f(next("z1_min")?)?, parse_f(next("z1_max")?)?);
        let z2 = (parse_f(next("z2_min")?)?, parse_f(next("z2_max")?)?);
        let mut values = Vec::with_capacity(n1.saturating_mul(n2).min(1 << 24));
        for _ in 0..n1 * n2 {
            values.push(parse_f(next("values")?)?);
        }
        if nums.next().is_some() {
            return Err(Error::Parse("g2 table has trailing values".into()));
        }
        Self::new(n1, n2, z1, z2, values)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!(
            "# g2 table: n1 n2 / z1 range / z2 range / row-major values\n{} {}\n{:e} {:e}\n{:e} {:e}\n",
            self.n1, self.n2, self.z1.0, self.z1.1, self.z2.0, self.z2.1
        );
        for row in self.values.chunks(self.n2) {
            let line: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            s.push_str(&line.join(" "));
            s.push('\n');
        }
        s
    }

    pub fn contains(&self, a: f64, b: f64) -> bool {
        a >= self.z1.0 && a <= self.z1.1 && b >= self.z2.0 && b <= self.z2.1
    }

    pub fn eval(&self, a: f64, b: f64) -> Result<f64> {
        if !self.contains(a, b) {
            return Err(Error::Domain(format!(
                "g2 lookup (Zi, Zj) = ({a}, {b}) outside table [{}, {}] x [{}, {}]",
                self.z1.0, self.z1.1, self.z2.0, self.z2.1
            )));
        }
        let fi = (a - self.z1.0) / (self.z1.1 - self.z1.0) * (self.n1 - 1) as f64;
        let fj = (b - self.z2.0) / (self.z2.1 - self.z2.0) * (self.n2 - 1) as f64;
        let i = (fi.floor() as usize).min(self.n1 - 2);
        let j = (fj.floor() as usize).min(self.n2 - 2);
        let (ti, tj) = (fi - i as f64, fj - j as f64);
        let v = |r: usize, c: usize| self.values[r * self.n2 + c];
        Ok((1.0 - ti) * ((1.0 - tj) * v(i, j) + tj * v(i, j + 1))
            + ti * ((1.0 - tj) * v(i + 1, j) + tj * v(i + 1, j + 1)))
    }
}

pub type KernelFn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type KernelFn2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

#[derive(Clone)]
pub enum G2Kernel {
    External(KernelFn2),
    Tabulated(Arc<G2Table>),
    Disabled,
}

impl G2Kernel {
    pub fn source(&self) -> G2Source {
        match self {
            G2Kernel::External(_) => G2Source::ClosedFormExternal,
            G2Kernel::Tabulated(_) => G2Source::TabulatedGrid,
            G2Kernel::Disabled => G2Source::Disabled,
        }
    }

    pub fn eval(&self, a: f64, b: f64) -> Result<f64> {
        match self {
            G2Kernel::External(f) => Ok(f(a, b)),
            G2Kernel::Tabulated(t) => t.eval(a, b),
            G2Kernel::Disabled => Err(Error::Unsupported(
                "second-order potential requested but g2 kernel is disabled".into(),
            )),
        }
    }
}

/// Response kernels g⁽¹⁾ and g⁽²⁾ of one surface material.
#[derive(Clone)]
pub struct CasimirKernelSet {
    g1: KernelFn1,
    g2: G2Kernel,
}

impl fmt::Debug for CasimirKernelSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CasimirKernelSet")
            .field("g2_source", &self.g2_source())
            .finish()
    }
}

impl CasimirKernelSet {
    /// Perfect reflector, first order only.
    pub fn perfect_reflector() -> Self {
        Self {
            g1: Arc::new(g1_unchecked),
            g2: G2Kernel::Disabled,
        }
    }

    pub fn with_g1(g1: KernelFn1, g2: G2Kernel) -> Self {
        Self { g1, g2 }
    }

    pub fn with_g2(mut self, g2: G2Kernel) -> Self {
        self.g2 = g2;
        self
    }

    pub fn g1(&self, z: f64) -> f64 {
        (self.g1)(z)
    }

    pub fn g2(&self, a: f64, b: f64) -> Result<f64> {
        self.g2.eval(a, b)
    }

    pub fn g2_source(&self) -> G2Source {
        self.g2.source()
    }
}
