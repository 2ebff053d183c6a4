use std::io::{Read, Write};

use super::SysidError;
use crate::signal::{read_dataset_csv, remove_linear_trend, write_dataset_csv, SignalRecord};
use crate::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Estimation,
    Validation,
}

/// Paired input/output records `Z^N`.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetZN<T> {
    pub u: SignalRecord<T>,
    pub y: SignalRecord<T>,
    pub role: Role,
}

impl<T: Scalar> DatasetZN<T> {
    pub fn new(u: SignalRecord<T>, y: SignalRecord<T>, role: Role) -> Result<Self, SysidError> {
        if u.len() != y.len() {
            return Err(SysidError::Mismatch("length"));
        }
        if u.dt() != y.dt() {
            return Err(SysidError::Mismatch("sample interval"));
        }
        Ok(Self { u, y, role })
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn dt(&self) -> T {
        self.u.dt()
    }

    /// Both records with mean and linear trend removed.
    pub fn detrended(&self) -> Result<Self, SysidError> {
        let u = remove_linear_trend(&self.u)?.detrended;
        let y = remove_linear_trend(&self.y)?.detrended;
        Ok(Self {
            u,
            y,
            role: self.role,
        })
    }

    pub fn read_csv<R: Read>(reader: R, role: Role) -> Result<Self, SysidError> {
        let (u, y) = read_dataset_csv(reader)?;
        Self::new(u, y, role)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), SysidError> {
        Ok(write_dataset_csv(writer, &self.u, &self.y)?)
    }

    /// Splits at sample `at` into (first, second) with the given roles.
    pub fn split(&self, at: usize) -> Result<(Self, Self), SysidError> {
        if at == 0 || at >= self.len() {
            return Err(SysidError::OutOfRange {
                index: at,
                min: 1,
                len: self.len(),
            });
        }
        let dt = self.dt();
        let part = |a: usize, b: usize, role| -> Result<Self, SysidError> {
            Self::new(
                SignalRecord::new(self.u.samples()[a..b].to_vec(), dt)?,
                SignalRecord::new(self.y.samples()[a..b].to_vec(), dt)?,
                role,
            )
        };
        Ok((
            part(0, at, Role::Estimation)?,
            part(at, self.len(), Role::Validation)?,
        ))
    }
}
