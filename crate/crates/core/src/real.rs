//! Storage scalar for parameter tables.
//!
//! Parameters live in `f32` for training and checkpoints and in `f64` for
//! numerical gradient checks. All arithmetic is carried out in `f64`; the
//! storage type only decides how values are rounded when written back.

use std::fmt::Debug;

pub trait Real: Copy + Send + Sync + Debug + PartialEq + Default + 'static {
    fn to_f64(self) -> f64;
    fn from_f64(v: f64) -> Self;
}

impl Real for f32 {
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v as f32
    }
}

impl Real for f64 {
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn from_f64(v: f64) -> Self {
        v
    }
}
