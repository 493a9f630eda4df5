//! Plain-text import/export of DCM coding matrices.
//!
//! Format: a single-line JSON header followed by one row of space-separated
//! integer phase codes per DCM grid row, each code in `[0, 2^bits)`:
//!
//! ```text
//! {"side":"reflection","mechanism":"energy_splitting","bits":2,"l_h":4,"l_v":2}
//! 0 1 2 3
//! 3 2 1 0
//! ```

use crate::metasurface::{MetasurfaceError, PhaseCodebook, Side};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CodingMatrixError {
    #[error("missing header line")]
    MissingHeader,
    #[error("invalid header: {0}")]
    InvalidHeader(#[from] serde_json::Error),
    #[error("expected {expected} rows of codes, found {found}")]
    RowCountMismatch { expected: usize, found: usize },
    #[error("row {row} has {found} codes, expected {expected}")]
    RowLengthMismatch {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("row {row}: invalid code token {token:?}")]
    InvalidCode { row: usize, token: String },
    #[error("code {code} out of range for {bits} bits")]
    CodeOutOfRange { code: u32, bits: u32 },
    #[error(transparent)]
    Metasurface(#[from] MetasurfaceError),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    side: Side,
    mechanism: String,
    bits: u32,
    l_h: usize,
    l_v: usize,
}

/// Quantized phase codes of one side of a DCM profile, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CodingMatrix {
    pub side: Side,
    pub mechanism: String,
    pub bits: u32,
    pub l_h: usize,
    pub l_v: usize,
    pub codes: Vec<u32>,
}

impl CodingMatrix {
    /// Quantizes a row-major phase vector into codes for the given codebook.
    pub fn from_phases(
        side: Side,
        mechanism: impl Into<String>,
        codebook: &PhaseCodebook,
        l_h: usize,
        l_v: usize,
        phases: &[f64],
    ) -> Result<Self, CodingMatrixError> {
        if phases.len() != l_h * l_v {
            return Err(MetasurfaceError::LengthMismatch {
                expected: l_h * l_v,
                found: phases.len(),
            }
            .into());
        }
        Ok(Self {
            side,
            mechanism: mechanism.into(),
            bits: codebook.bits(),
            l_h,
            l_v,
            codes: phases.iter().map(|&p| codebook.code_of(p)).collect(),
        })
    }

    /// Phases in radians corresponding to the stored codes.
    pub fn phases(&self) -> Result<Vec<f64>, CodingMatrixError> {
        let cb = PhaseCodebook::new(self.bits)?;
        self.codes
            .iter()
            .map(|&c| {
                if c >= cb.len() {
                    Err(CodingMatrixError::CodeOutOfRange {
                        code: c,
                        bits: self.bits,
                    })
                } else {
                    Ok(cb.phase_of(c))
                }
            })
            .collect()
    }

    pub fn to_text(&self) -> String {
        let header = Header {
            side: self.side,
            mechanism: self.mechanism.clone(),
            bits: self.bits,
            l_h: self.l_h,
            l_v: self.l_v,
        };
        let mut out = serde_json::to_string(&header).expect("header serializes");
        out.push('\n');
        for row in 0..self.l_v {
            let cells: Vec<String> = (0..self.l_h)
                .map(|col| self.codes[row * self.l_h + col].to_string())
                .collect();
            out.push_str(&cells.join(" "));
            out.push('\n');
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self, CodingMatrixError> {
        let mut lines = text.lines().filter(|l| !l.trim().is_empty());
        let header: Header =
            serde_json::from_str(lines.next().ok_or(CodingMatrixError::MissingHeader)?)?;
        let cb = PhaseCodebook::new(header.bits)?;
        let rows: Vec<&str> = lines.collect();
        if rows.len() != header.l_v {
            return Err(CodingMatrixError::RowCountMismatch {
                expected: header.l_v,
                found: rows.len(),
            });
        }
        let mut codes = Vec::with_capacity(header.l_h * header.l_v);
        for (row, line) in rows.iter().enumerate() {
            let tokens: Vec<&str> = line.split_whitespace().collect();
            if tokens.len() != header.l_h {
                return Err(CodingMatrixError::RowLengthMismatch {
                    row,
                    expected: header.l_h,
                    found: tokens.len(),
                });
            }
            for token in tokens {
                let code: u32 = token.parse().map_err(|_| CodingMatrixError::InvalidCode {
                    row,
                    token: token.to_string(),
                })?;
                if code >= cb.len() {
                    return Err(CodingMatrixError::CodeOutOfRange {
                        code,
                        bits: header.bits,
                    });
                }
                codes.push(code);
            }
        }
        Ok(Self {
            side: header.side,
            mechanism: header.mechanism,
            bits: header.bits,
            l_h: header.l_h,
            l_v: header.l_v,
            codes,
        })
    }
}
