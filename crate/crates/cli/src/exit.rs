//! Exit-code contract: 0 ok, 1 verification failed, 2 invalid spec,
//! 3 numeric regime failure, 64 usage. Output write failures use 74.

use std::fmt;

use qsum::QError;

pub const OK: u8 = 0;
pub const VERIFY_FAIL: u8 = 1;
pub const INVALID_SPEC: u8 = 2;
pub const NUMERIC: u8 = 3;
pub const USAGE: u8 = 64;
pub const IO: u8 = 74;

#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub fn new(code: u8, message: impl Into<String>) -> Self {
        Failure { code, message: message.into() }
    }

    pub fn usage(message: impl Into<String>) -> Self {
        Self::new(USAGE, message)
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

pub fn code_for(e: &QError) -> u8 {
    use QError::*;
    match e {
        InvalidSpec { .. }
        | InvalidQ(_)
        | InvalidOrder
        | InvalidTolerance
        | InvalidGrid(_)
        | GridMismatch(_)
        | SpaceMismatch(_)
        | BadDirection { .. }
        | SmallDelta { .. }
        | InvalidExclusion(_)
        | InvalidSector
        | EnvelopeViolation { .. }
        | BadMahlerPower(_) => INVALID_SPEC,
        BoundViolation { .. } => VERIFY_FAIL,
        _ => NUMERIC,
    }
}

impl From<QError> for Failure {
    fn from(e: QError) -> Self {
        Failure::new(code_for(&e), e.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::new(IO, format!("writing output: {e}"))
    }
}

pub type CmdResult = Result<u8, Failure>;
