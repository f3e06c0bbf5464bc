//! End-to-end tour of the library: simulate a path, evaluate a weighted
//! pair statistic two ways, probe a map's contraction rate, and price the
//! long-memory limit. Exits nonzero if any step produces values outside
//! loose sanity bands, so it doubles as a smoke check:
//!
//! ```text
//! cargo run --release -p wustat-core --example walkthrough
//! ```

use wustat_core::contraction::estimate_gmc;
use wustat_core::engine::{compute_banded, compute_dense};
use wustat_core::kernels::{KernelSpec, Transform};
use wustat_core::longmem::{limit_variance, rate_exponent, RateCase, WeightMode};
use wustat_core::process::{
    generate, InnovationSpec, IteratedMapSpec, LinearProcessSpec, ProcessSpec,
};
use wustat_core::weights::WeightSpec;

fn main() {
    let mut failures = 0usize;
    let mut check = |name: &str, ok: bool, detail: String| {
        println!("[{}] {name}: {detail}", if ok { "ok" } else { "FAIL" });
        if !ok {
            failures += 1;
        }
    };

    // Simulate a short-memory linear path and evaluate the lag-2 product
    // statistic with both evaluators.
    let spec = ProcessSpec::Linear(LinearProcessSpec::geometric(
        0.5,
        256,
        InnovationSpec::standard_normal(),
    ));
    let path = generate(&spec, 4096, 20260814).unwrap();
    let weights = WeightSpec::Delta { k0: 2 };
    let kernel = KernelSpec::Product {
        transform: Transform::Identity,
    };
    let dense = compute_dense(&path, &weights, &kernel, false).unwrap();
    let banded = compute_banded(&path, &weights, &kernel, false).unwrap();
    check(
        "evaluators agree",
        (dense.value - banded.value).abs() <= 1e-9 * dense.value.abs().max(1.0),
        format!("dense {:.6}, banded {:.6}", dense.value, banded.value),
    );

    // The lag-2 autocovariance of this process is 0.5^2 / (1 - 0.25); the
    // statistic averages n - 2 such pairs (x2 for symmetry).
    let pairs = 2.0 * (path.n() - 2) as f64;
    let emp = dense.value / pairs;
    // The estimator's spread at this n is about 0.04, so the band is ~3 sd.
    check(
        "lag-2 covariance near theory",
        (emp - 1.0 / 3.0).abs() < 0.12,
        format!("empirical {emp:.4}, theory {:.4}", 1.0 / 3.0),
    );

    // Contraction rate of the AR(1) map x -> 0.5 x + eps.
    let gmc = estimate_gmc(&IteratedMapSpec::ar1(0.5), 1.0, &[1, 2, 4, 8, 16], 4000, 7).unwrap();
    check(
        "coupling decay rate",
        (gmc.r_hat - 0.5).abs() < 0.02,
        format!("r_hat {:.4}", gmc.r_hat),
    );

    // Long-memory side: growth exponent and first-order limit variance for
    // coefficient decay exponent 0.6.
    let rate = rate_exponent(&RateCase::SampleCovariance { beta: 0.6 }).unwrap();
    let lv = limit_variance(0.6, 1, &WeightMode::SummableConst { c: 1.0 }).unwrap();
    check(
        "limit variance agrees across schemes",
        lv.error <= 1e-4 * lv.value,
        format!(
            "sd exponent {rate:.2}, integral {:.6} +/- {:.1e}",
            lv.value, lv.error
        ),
    );

    if failures > 0 {
        eprintln!("{failures} check(s) failed");
        std::process::exit(1);
    }
}
