//! Empirical decay checks: resolvent, sine-cosine projection and the
//! bracket coefficients, written as JSON/CSV reports.

use doi_edwards::diagnostics::{
    verify_b_bound_first_order, verify_brt_bound, verify_cos_bound, verify_resolvent_bound, BoundReport, VerifyOptions,
};
use doi_edwards::{KappaTensor, Result};

fn main() -> Result<()> {
    let kappa = KappaTensor::simple_shear(1.0);
    let opts = VerifyOptions { trials: 10, ..Default::default() };
    let (resolvent, drift) = verify_resolvent_bound(&kappa, 12, 2.0, &opts)?;
    let reports: Vec<BoundReport> = vec![
        resolvent,
        drift,
        verify_b_bound_first_order(&kappa, 16, opts.trials, &opts)?,
        verify_cos_bound(16, opts.trials, &opts)?,
        verify_brt_bound(8, 8, opts.trials, &opts)?,
    ];

    let dir = std::env::temp_dir().join("doi-edwards-bounds");
    for r in &reports {
        r.write(&dir)?;
        println!(
            "{:<24} slope {:+.3}  max {:.3e}  {}",
            r.bound_name,
            r.trend_slope,
            r.max_normalized,
            if r.verdict { "bounded" } else { "GROWS" }
        );
    }
    println!("reports in {}", dir.display());
    Ok(())
}
