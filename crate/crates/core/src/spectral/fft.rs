use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::TorusGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub(crate) enum FftDirection {
    Forward,
    Inverse,
}

type PlanCache = Mutex<HashMap<(usize, FftDirection), Arc<dyn Fft<f64>>>>;

fn plan(n: usize, dir: FftDirection) -> Arc<dyn Fft<f64>> {
    static CACHE: OnceLock<PlanCache> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry((n, dir))
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            match dir {
                FftDirection::Forward => planner.plan_fft_forward(n),
                FftDirection::Inverse => planner.plan_fft_inverse(n),
            }
        })
        .clone()
}

/// Unnormalized in-place transform over every axis of a row-major `n^dim` buffer.
pub(crate) fn fft_nd(buf: &mut [Complex64], grid: TorusGrid, dir: FftDirection) {
    let n = grid.n();
    let dim = grid.dim();
    debug_assert_eq!(buf.len(), grid.len());
    let fft = plan(n, dir);
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];

    // last axis is contiguous
    fft.process_with_scratch(buf, &mut scratch);

    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim.saturating_sub(1) {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for start in (0..buf.len()).step_by(block) {
            for offset in 0..stride {
                let base = start + offset;
                for (i, slot) in line.iter_mut().enumerate() {
                    *slot = buf[base + i * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (i, v) in line.iter().enumerate() {
                    buf[base + i * stride] = *v;
                }
            }
        }
    }
}
