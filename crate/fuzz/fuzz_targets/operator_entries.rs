//! Operator decoding: the first byte picks a dimension, the rest are read as
//! little-endian f64 pairs (re, im) in row-major order. Validation must never
//! panic, and accepted operators must decompose cleanly.
#![no_main]

use libfuzzer_sys::fuzz_target;
use mkc_core::linalg::{spectral_decomposition, DensityOperator, HermitianOperator, C64};

fuzz_target!(|data: &[u8]| {
    let Some((&d, rest)) = data.split_first() else { return };
    let dim = usize::from(d % 10);
    let entries: Vec<C64> = rest
        .chunks_exact(16)
        .map(|c| {
            let re = f64::from_le_bytes(c[..8].try_into().unwrap());
            let im = f64::from_le_bytes(c[8..].try_into().unwrap());
            C64::new(re, im)
        })
        .collect();
    if let Ok(op) = HermitianOperator::from_rows(dim, &entries) {
        if op.inner().iter().all(|z| z.re.abs() < 1e6 && z.im.abs() < 1e6) {
            let parts = spectral_decomposition(&op);
            let rank: f64 = parts.iter().map(|p| p.projector.trace()).sum();
            assert!((rank - dim as f64).abs() < 1e-6);
        }
    }
    let _ = DensityOperator::from_rows(dim, &entries);
});
