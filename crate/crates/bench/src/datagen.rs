//! Synthetic datasets in the formats the models read.

use std::fs::File;
use std::path::{Path, PathBuf};

use mismc::models::{
    write_observations, write_points, Elliptic2D, LogGaussian, LogGaussianConfig, Toy1D, ELLIPTIC_TRUTH, TOY_TRUTH,
};
use mismc::rng::stream;

use crate::config::ModelKind;
use crate::error::{BenchError, Result};

/// Toy1D data resolution.
pub const TOY_DATA_LEVEL: u32 = 12;
/// Effective Elliptic2D mesh of the data.
pub const ELLIPTIC_DATA_MESH: (u32, u32) = (9, 9);
/// Effective log-Gaussian grid of the intensity the points are drawn from.
pub const LG_DATA_RESOLUTION: u32 = 9;
pub const LG_POINTS: usize = 126;

/// File name the generated dataset is written to.
pub fn dataset_file(kind: ModelKind) -> &'static str {
    match kind {
        ModelKind::Toy1d => "toy1d.csv",
        ModelKind::Elliptic2d => "elliptic2d.csv",
        ModelKind::Lgc | ModelKind::Lgp => "lg_points.csv",
    }
}

/// Writes a synthetic dataset for `kind` into `dir`:
///
/// * Toy1D: the level-12 forward map at the reference truth plus noise of sd 0.2.
/// * Elliptic2D: the effective (9, 9) forward map at the reference truth plus noise of sd 0.5.
/// * LGC/LGP: 126 points drawn from `exp(x)` for one prior field `x` at effective resolution 9
///   (both variants use the density model's spectrum).
pub fn generate_dataset(kind: ModelKind, seed: u64, dir: &Path) -> Result<PathBuf> {
    std::fs::create_dir_all(dir).map_err(|e| BenchError::io(format!("creating {}", dir.display()), e))?;
    let path = dir.join(dataset_file(kind));
    let file = File::create(&path).map_err(|e| BenchError::io(format!("creating {}", path.display()), e))?;
    let mut rng = stream(seed, &format!("generate-data/{}", dataset_file(kind)));
    match kind {
        ModelKind::Toy1d => {
            let obs = Toy1D::<f64>::generate_data(TOY_TRUTH, TOY_DATA_LEVEL, 0.2, &mut rng);
            write_observations(file, &obs)?;
        }
        ModelKind::Elliptic2d => {
            let obs = Elliptic2D::<f64>::generate_data(ELLIPTIC_TRUTH, ELLIPTIC_DATA_MESH, 0.5, &mut rng)?;
            write_observations(file, &obs)?;
        }
        ModelKind::Lgc | ModelKind::Lgp => {
            let pts = LogGaussian::<f64>::generate_points(&LogGaussianConfig::density(), LG_DATA_RESOLUTION, LG_POINTS, &mut rng);
            write_points(file, &pts)?;
        }
    }
    Ok(path)
}
