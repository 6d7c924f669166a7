use std::fs;
use std::path::Path;

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use super::arch::{ArchSpec, Layer};
use super::network::{DenseParams, ShifterModel};
use super::train::TrainConfig;
use crate::{npy, Error, Result, Scalar};

const FORMAT_TAG: &str = "latent-shift/shifter-v1";

#[derive(Serialize, Deserialize)]
struct Manifest {
    format: String,
    arch_name: String,
    d: usize,
    k: usize,
    layers: Vec<Layer>,
    param_count: usize,
    train_config: Option<TrainConfig>,
    seed: Option<u64>,
    /// One file per dense layer, shape `outputs × (inputs + 1)`; the last
    /// column holds the bias.
    files: Vec<String>,
}

impl<T: Scalar> ShifterModel<T> {
    /// Writes `manifest.json` and `dense-<i>.npy` files into `dir` at
    /// 32-bit precision.
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        let mut files = Vec::new();
        for (i, p) in self.params.iter().enumerate() {
            let (o, n) = p.weight.dim();
            let mut packed = Array2::<f32>::zeros((o, n + 1));
            packed.slice_mut(s![.., ..n]).assign(&p.weight.mapv(|v| v.f64() as f32));
            packed.column_mut(n).assign(&p.bias.mapv(|v| v.f64() as f32));
            let name = format!("dense-{i}.npy");
            npy::write(&dir.join(&name), packed.view())?;
            files.push(name);
        }
        let manifest = Manifest {
            format: FORMAT_TAG.into(),
            arch_name: self.spec.name.clone(),
            d: self.spec.d,
            k: self.spec.k,
            layers: self.spec.layers.clone(),
            param_count: self.param_count(),
            seed: self.trained_with.as_ref().map(|c| c.seed),
            train_config: self.trained_with.clone(),
            files,
        };
        fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let text = fs::read_to_string(dir.join("manifest.json"))?;
        let manifest: Manifest =
            serde_json::from_str(&text).map_err(|e| Error::format(format!("model manifest: {e}")))?;
        if manifest.format != FORMAT_TAG {
            return Err(Error::format(format!("unknown model format '{}'", manifest.format)));
        }
        let spec = ArchSpec { name: manifest.arch_name, d: manifest.d, k: manifest.k, layers: manifest.layers };
        spec.validate().map_err(|e| Error::format(format!("model architecture: {e}")))?;
        if spec.param_count() != manifest.param_count {
            return Err(Error::format(format!(
                "manifest declares {} parameters, architecture has {}",
                manifest.param_count,
                spec.param_count()
            )));
        }
        if manifest.files.len() != spec.dense_count() {
            return Err(Error::format("one weight file per dense layer expected"));
        }
        let params = spec
            .dense_layers()
            .zip(&manifest.files)
            .map(|((inputs, outputs, _), file)| {
                let packed = npy::read(&dir.join(file))?;
                if packed.dim() != (outputs, inputs + 1) {
                    return Err(Error::format(format!(
                        "{file} has shape {:?}, expected ({outputs}, {})",
                        packed.dim(),
                        inputs + 1
                    )));
                }
                if packed.iter().any(|v| !v.is_finite()) {
                    return Err(Error::format(format!("{file} contains non-finite weights")));
                }
                let weight: Array2<T> = packed.slice(s![.., ..inputs]).mapv(|v| T::of(f64::from(v)));
                let bias: Array1<T> = packed.column(inputs).mapv(|v| T::of(f64::from(v)));
                Ok(DenseParams { weight, bias })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { spec, params, trained_with: manifest.train_config })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::sample_gaussian_latents;
    use crate::shifter::{build_arch, ArchName};

    #[test]
    fn round_trip_is_bit_exact_after_narrowing() {
        let dir = tempfile::tempdir().unwrap();
        let model = ShifterModel::<f64>::init(build_arch(ArchName::D, 6, 1).unwrap(), 11).unwrap();
        model.save(dir.path()).unwrap();
        let loaded = ShifterModel::<f64>::load(dir.path()).unwrap();
        assert_eq!(loaded.spec, model.spec);
        assert_eq!(loaded.param_count(), model.spec.param_count());

        let again = tempfile::tempdir().unwrap();
        loaded.save(again.path()).unwrap();
        let reloaded = ShifterModel::<f64>::load(again.path()).unwrap();
        let z = sample_gaussian_latents(1, 6, 3).unwrap().remove(0);
        let a = loaded.forward(&z, &[1.0], false, 0).unwrap();
        let b = reloaded.forward(&z, &[1.0], false, 0).unwrap();
        assert!(a.as_slice().iter().zip(b.as_slice()).all(|(x, y)| x.to_bits() == y.to_bits()));
        let orig = model.forward(&z, &[1.0], false, 0).unwrap();
        assert!(a.as_slice().iter().zip(orig.as_slice()).all(|(x, y)| (x - y).abs() < 1e-5));

        let f32_model = ShifterModel::<f32>::load(dir.path()).unwrap();
        assert_eq!(f32_model.param_count(), model.param_count());
    }

    #[test]
    fn corrupted_files_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let model = ShifterModel::<f64>::init(build_arch(ArchName::B, 4, 1).unwrap(), 1).unwrap();
        model.save(dir.path()).unwrap();
        let weights = dir.path().join("dense-1.npy");
        let mut bytes = fs::read(&weights).unwrap();
        bytes[0] = 0;
        fs::write(&weights, &bytes).unwrap();
        assert!(matches!(ShifterModel::<f64>::load(dir.path()), Err(Error::Format(_))));

        model.save(dir.path()).unwrap();
        let manifest = dir.path().join("manifest.json");
        let n = model.param_count();
        let text = fs::read_to_string(&manifest).unwrap();
        let tampered = text.replace(&format!("\"param_count\": {n}"), &format!("\"param_count\": {}", n + 1));
        assert_ne!(text, tampered);
        fs::write(&manifest, tampered).unwrap();
        assert!(matches!(ShifterModel::<f64>::load(dir.path()), Err(Error::Format(_))));
    }
}
