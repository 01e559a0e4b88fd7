//! Sobol' sequence from Joe–Kuo direction numbers.
//!
//! Points are produced in natural (binary) order: point `i` is the XOR of the
//! direction numbers selected by the bits of `i`. Index 0, the origin, is
//! skipped, so node 0 of a rule is Sobol' point 1.

use std::fs;
use std::ops::Range;
use std::path::Path;
use std::sync::OnceLock;

use super::NodeSource;
use crate::{Error, Result};

/// Bits per coordinate.
pub const MAX_SOBOL_BITS: usize = 32;

const EMBEDDED: &str = include_str!("../../data/new-joe-kuo-6.1111.txt");

#[derive(Debug, Clone, PartialEq, Eq)]
struct Primitive {
    degree: u32,
    coeffs: u32,
    initial: Vec<u32>,
}

/// Primitive polynomials and initial direction integers, one entry per dimension.
///
/// Text format, one line per dimension starting at dimension 2:
/// `d s a m_1 … m_s`. Lines that do not start with an integer (headers,
/// comments) are skipped. Dimension 1 is implicit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DirectionNumbers {
    entries: Vec<Primitive>,
}

impl DirectionNumbers {
    /// The table shipped with the crate (1111 dimensions).
    pub fn embedded() -> &'static DirectionNumbers {
        static TABLE: OnceLock<DirectionNumbers> = OnceLock::new();
        TABLE.get_or_init(|| {
            DirectionNumbers::parse(EMBEDDED, Path::new("<embedded>"))
                .expect("embedded table parses")
        })
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let err = |line: usize, message: String| Error::Parse {
            path: origin.to_path_buf(),
            line,
            message,
        };
        let mut entries = Vec::new();
        for (k, raw) in text.lines().enumerate() {
            let line = k + 1;
            let fields: Vec<&str> = raw.split_whitespace().collect();
            if fields.is_empty() || fields[0].parse::<u64>().is_err() {
                continue;
            }
            let nums = fields
                .iter()
                .map(|f| f.parse::<u32>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| err(line, e.to_string()))?;
            if nums.len() < 3 {
                return Err(err(line, "expected `d s a m_1 ... m_s`".into()));
            }
            let (dim, degree, coeffs) = (nums[0] as usize, nums[1], nums[2]);
            if dim != entries.len() + 2 {
                return Err(err(
                    line,
                    format!("expected dimension {}, found {dim}", entries.len() + 2),
                ));
            }
            let initial = nums[3..].to_vec();
            if degree == 0 || degree as usize >= MAX_SOBOL_BITS || initial.len() != degree as usize
            {
                return Err(err(
                    line,
                    format!(
                        "degree {degree} does not match {} initial values",
                        initial.len()
                    ),
                ));
            }
            for (i, &m) in initial.iter().enumerate() {
                if m % 2 == 0 || m >= 1 << (i + 1) {
                    return Err(err(
                        line,
                        format!("m_{} = {m} must be odd and below 2^{}", i + 1, i + 1),
                    ));
                }
            }
            entries.push(Primitive {
                degree,
                coeffs,
                initial,
            });
        }
        Ok(DirectionNumbers { entries })
    }

    /// Largest supported dimension.
    pub fn max_dim(&self) -> usize {
        self.entries.len() + 1
    }

    /// The 32 direction numbers `V_1 … V_32` of dimension `j` (1-based), scaled to 32 bits.
    fn directions(&self, j: usize) -> [u32; MAX_SOBOL_BITS] {
        let mut v = [0u32; MAX_SOBOL_BITS];
        if j == 1 {
            for (k, vk) in v.iter_mut().enumerate() {
                *vk = 1 << (31 - k);
            }
            return v;
        }
        let p = &self.entries[j - 2];
        let s = p.degree as usize;
        for k in 0..s {
            v[k] = p.initial[k] << (31 - k);
        }
        for k in s..MAX_SOBOL_BITS {
            let mut x = v[k - s] ^ (v[k - s] >> s);
            for l in 1..s {
                if (p.coeffs >> (s - 1 - l)) & 1 == 1 {
                    x ^= v[k - l];
                }
            }
            v[k] = x;
        }
        v
    }
}

/// The first `M` nonzero Sobol' points in `d` dimensions.
#[derive(Debug, Clone)]
pub struct Sobol {
    len: usize,
    dim: usize,
    /// `directions[k * dim + j]`: direction number `k` of coordinate `j`.
    directions: Vec<u32>,
    /// `prefix[k * dim + j] = V_0 ^ … ^ V_k`, the change from point `i - 1` to `i`
    /// when `i` has `k` trailing zeros.
    prefix: Vec<u32>,
}

impl Sobol {
    pub fn new(len: usize, dim: usize) -> Result<Self> {
        Self::with_directions(len, dim, DirectionNumbers::embedded())
    }

    pub fn with_directions(len: usize, dim: usize, table: &DirectionNumbers) -> Result<Self> {
        if dim == 0 {
            return Err(Error::input("Sobol' dimension must be at least 1"));
        }
        if dim > table.max_dim() {
            return Err(Error::input(format!(
                "Sobol' dimension {dim} exceeds the direction table ({} dimensions)",
                table.max_dim()
            )));
        }
        if len as u64 >= 1u64 << MAX_SOBOL_BITS {
            return Err(Error::input(format!(
                "Sobol' supports fewer than 2^32 points, asked for {len}"
            )));
        }
        let mut directions = vec![0u32; MAX_SOBOL_BITS * dim];
        for j in 0..dim {
            let v = table.directions(j + 1);
            for k in 0..MAX_SOBOL_BITS {
                directions[k * dim + j] = v[k];
            }
        }
        let mut prefix = directions.clone();
        for k in 1..MAX_SOBOL_BITS {
            for j in 0..dim {
                prefix[k * dim + j] = prefix[(k - 1) * dim + j] ^ directions[k * dim + j];
            }
        }
        Ok(Sobol {
            len,
            dim,
            directions,
            prefix,
        })
    }

    /// Integer coordinates of Sobol' point `index`.
    fn integer_point(&self, index: u64, out: &mut [u32]) {
        out.fill(0);
        let mut bits = index;
        let mut k = 0;
        while bits != 0 {
            if bits & 1 == 1 {
                let row = &self.directions[k * self.dim..(k + 1) * self.dim];
                out.iter_mut().zip(row).for_each(|(o, v)| *o ^= v);
            }
            bits >>= 1;
            k += 1;
        }
    }
}

const SCALE: f64 = 1.0 / 4_294_967_296.0;

impl NodeSource for Sobol {
    fn dim(&self) -> usize {
        self.dim
    }

    fn len(&self) -> usize {
        self.len
    }

    fn for_each_node(&self, range: Range<usize>, f: &mut dyn FnMut(&[f64], f64)) {
        if range.is_empty() {
            return;
        }
        let w = 1.0 / self.len as f64;
        let mut x = vec![0u32; self.dim];
        let mut u = vec![0.0; self.dim];
        let first = range.start as u64 + 1;
        self.integer_point(first, &mut x);
        for i in range.clone() {
            let index = i as u64 + 1;
            if index != first {
                let k = index.trailing_zeros() as usize;
                let row = &self.prefix[k * self.dim..(k + 1) * self.dim];
                x.iter_mut().zip(row).for_each(|(o, p)| *o ^= p);
            }
            u.iter_mut()
                .zip(&x)
                .for_each(|(o, &b)| *o = b as f64 * SCALE);
            f(&u, w);
        }
    }
}

/// Sobol' points `1..=M` as a row-major matrix.
pub fn sobol_points(len: usize, dim: usize) -> Result<super::PointSet> {
    Ok(super::PointSet::collect(&Sobol::new(len, dim)?))
}
