use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::loss::LossConfig;
use super::pann::PannModel;
use crate::error::{PannError, Result};
use crate::scalar::Scalar;

pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Record<F> {
    format: String,
    version: u32,
    scalar: String,
    loss: Option<LossConfig>,
    model: PannModel<F>,
}

const FORMAT: &str = "pann-checkpoint";

fn scalar_name<F: Scalar>() -> &'static str {
    if std::mem::size_of::<F>() == 4 {
        "f32"
    } else {
        "f64"
    }
}

/// Serialises the model (network config, basis, coefficients and masks) and
/// the optional loss settings as versioned JSON.
pub fn write_checkpoint<F, W>(writer: W, model: &PannModel<F>, loss: Option<&LossConfig>) -> Result<()>
where
    F: Scalar + Serialize,
    W: Write,
{
    let rec = Record {
        format: FORMAT.into(),
        version: CHECKPOINT_VERSION,
        scalar: scalar_name::<F>().into(),
        loss: loss.cloned(),
        model: model.clone(),
    };
    serde_json::to_writer_pretty(writer, &rec).map_err(|e| PannError::Checkpoint(e.to_string()))
}

pub fn read_checkpoint<F, R>(reader: R) -> Result<(PannModel<F>, Option<LossConfig>)>
where
    F: Scalar + DeserializeOwned,
    R: Read,
{
    let value: serde_json::Value =
        serde_json::from_reader(reader).map_err(|e| PannError::Checkpoint(e.to_string()))?;
    let version = value.get("version").and_then(|v| v.as_u64());
    if value.get("format").and_then(|v| v.as_str()) != Some(FORMAT) {
        return Err(PannError::Checkpoint("not a model checkpoint".into()));
    }
    if version != Some(CHECKPOINT_VERSION as u64) {
        return Err(PannError::Checkpoint(format!(
            "unsupported checkpoint version {version:?} (this build reads {CHECKPOINT_VERSION})"
        )));
    }
    let rec: Record<F> =
        serde_json::from_value(value).map_err(|e| PannError::Checkpoint(e.to_string()))?;
    if rec.scalar != scalar_name::<F>() {
        return Err(PannError::Checkpoint(format!(
            "checkpoint stores {} values, requested {}",
            rec.scalar,
            scalar_name::<F>()
        )));
    }
    rec.model
        .validate()
        .map_err(|e| PannError::Checkpoint(format!("invalid model: {e}")))?;
    if let Some(net) = &rec.model.mlp {
        if net.params.output_mask.len() != net.params.output.len()
            || net.params.output.len() != net.config.feature_count()
        {
            return Err(PannError::Checkpoint("output coefficients do not match the network".into()));
        }
    }
    Ok((rec.model, rec.loss))
}

pub fn save_checkpoint<F: Scalar + Serialize>(
    path: &Path,
    model: &PannModel<F>,
    loss: Option<&LossConfig>,
) -> Result<()> {
    let file = File::create(path).map_err(|e| PannError::Checkpoint(format!("{}: {e}", path.display())))?;
    let mut w = BufWriter::new(file);
    write_checkpoint(&mut w, model, loss)?;
    w.flush().map_err(|e| PannError::Checkpoint(e.to_string()))
}

pub fn load_checkpoint<F: Scalar + DeserializeOwned>(
    path: &Path,
) -> Result<(PannModel<F>, Option<LossConfig>)> {
    let file = File::open(path).map_err(|e| PannError::Checkpoint(format!("{}: {e}", path.display())))?;
    read_checkpoint(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{truncate, NetworkPart, PolyLayer};
    use crate::network::{init_params, Activation, MlpConfig};
    use crate::polybasis::{enumerate_indices, BasisSpec};
    use ndarray::Array1;

    #[test]
    fn round_trip_keeps_masks() {
        let config = MlpConfig::new(2, vec![5], Activation::Repu(3)).unwrap();
        let params = init_params(&config, 3);
        let mut poly = PolyLayer::zeros(enumerate_indices(BasisSpec::total_degree(2, 3)));
        poly.coeffs = Array1::linspace(-1.0, 1.0, 10);
        let mut model = PannModel::new(Some(NetworkPart { config, params }), Some(poly)).unwrap();
        truncate(&mut model, 0.3);
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &model, Some(&LossConfig::default())).unwrap();
        let (back, loss) = read_checkpoint::<f64, _>(buf.as_slice()).unwrap();
        assert_eq!(back, model);
        assert_eq!(loss, Some(LossConfig::default()));
    }

    #[test]
    fn rejects_other_versions_and_scalars() {
        let poly = PolyLayer::<f64>::zeros(enumerate_indices(BasisSpec::total_degree(1, 2)));
        let model = PannModel::new(None, Some(poly)).unwrap();
        let mut buf = Vec::new();
        write_checkpoint(&mut buf, &model, None).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let bumped = text.replace("\"version\": 1", "\"version\": 99");
        assert!(matches!(
            read_checkpoint::<f64, _>(bumped.as_bytes()),
            Err(PannError::Checkpoint(_))
        ));
        assert!(read_checkpoint::<f32, _>(text.as_bytes()).is_err());
    }
}
