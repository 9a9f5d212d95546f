//! Posterior mean of the Elliptic2D quantity of interest with a
//! tensor-product MISMC ratio estimator.

use mismc::estimator::pilot_variances;
use mismc::{allocate_samples, mismc_ratio_estimate, IndexSet, Model, SmcConfig};

fn main() -> mismc::Result<()> {
    let model = mismc::Elliptic2D::with_default_data();
    let set = IndexSet::tensor_product(&[2, 2]);
    let config = SmcConfig::new(10)?;

    let v = pilot_variances(&model, &set, 100, &config, 7, "pilot")?;
    let c = set.iter().map(|a| (a.clone(), model.cost(a))).collect();
    let plan = allocate_samples(&v, &c, 0.05, None)?;

    let report = mismc_ratio_estimate(&model, &set, &plan, &config, 7, "run")?;
    println!("posterior mean {:.4} at cost {:.3e}", report.estimate, report.total_cost);
    Ok(())
}
