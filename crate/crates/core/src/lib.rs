//! Spectra of Birman–Schwinger type operators `T = A*PA` for singular
//! measures `P = Vμ`, discretized on point clouds.

pub mod coeffs;
pub mod error;
pub mod experiment;
pub mod measures;
pub mod operators;
pub mod orlicz;
pub mod special;
pub mod spectral;

pub use error::{Error, Result};

/// Sizes the worker pools used for assembly and eigensolves. Must run before
/// any parallel work; later calls only affect the dense solver.
pub fn configure_threads(threads: usize) -> Result<()> {
    if threads == 0 {
        return Err(Error::InvalidParameter {
            param: "threads".into(),
            reason: "must be positive".into(),
        });
    }
    // the pool can only be built once per process; keep the existing one
    let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    faer::set_global_parallelism(if threads == 1 { faer::Par::Seq } else { faer::Par::rayon(threads) });
    Ok(())
}
