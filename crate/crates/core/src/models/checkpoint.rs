use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EmbedCosine, MatFac, ModelKind, RankMlp, ScoreModel};
use crate::error::{Error, Result};
use crate::numerics::Mat64;

const FORMAT: &str = "advrank-checkpoint";
const VERSION: u32 = 1;

/// A model of any supported kind.
#[derive(Debug, Clone, PartialEq)]
pub enum AnyModel {
    RankMlp(RankMlp),
    MatFac(MatFac),
    EmbedCosine(EmbedCosine),
}

impl AnyModel {
    pub fn kind(&self) -> ModelKind {
        match self {
            AnyModel::RankMlp(m) => m.kind(),
            AnyModel::MatFac(m) => m.kind(),
            AnyModel::EmbedCosine(m) => m.kind(),
        }
    }

    pub fn params(&self) -> Vec<f64> {
        match self {
            AnyModel::RankMlp(m) => m.params(),
            AnyModel::MatFac(m) => m.params(),
            AnyModel::EmbedCosine(m) => m.params(),
        }
    }

    fn dims(&self) -> Vec<usize> {
        match self {
            AnyModel::RankMlp(m) => vec![m.input_dim(), m.hidden()],
            AnyModel::MatFac(m) => vec![m.num_users(), m.num_items(), m.dim()],
            AnyModel::EmbedCosine(m) => vec![m.vocab(), m.dim()],
        }
    }
}

impl From<RankMlp> for AnyModel {
    fn from(m: RankMlp) -> Self {
        AnyModel::RankMlp(m)
    }
}

impl From<MatFac> for AnyModel {
    fn from(m: MatFac) -> Self {
        AnyModel::MatFac(m)
    }
}

impl From<EmbedCosine> for AnyModel {
    fn from(m: EmbedCosine) -> Self {
        AnyModel::EmbedCosine(m)
    }
}

/// On-disk layout. Floats are stored as the hex of their IEEE-754 bits so a
/// save/load round trip is bit-exact.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub version: u32,
    pub kind: ModelKind,
    pub dims: Vec<usize>,
    pub params: Vec<String>,
}

impl Checkpoint {
    pub fn from_model(model: &AnyModel) -> Self {
        Self {
            format: FORMAT.to_string(),
            version: VERSION,
            kind: model.kind(),
            dims: model.dims(),
            params: model.params().iter().map(|v| format!("{:016x}", v.to_bits())).collect(),
        }
    }

    pub fn into_model(self) -> Result<AnyModel> {
        if self.format != FORMAT {
            return Err(Error::Checkpoint(format!("unknown format {:?}", self.format)));
        }
        if self.version != VERSION {
            return Err(Error::Checkpoint(format!("unsupported version {}", self.version)));
        }
        let params = self
            .params
            .iter()
            .map(|s| u64::from_str_radix(s, 16).map(f64::from_bits))
            .collect::<std::result::Result<Vec<f64>, _>>()
            .map_err(|e| Error::Checkpoint(format!("bad parameter encoding: {e}")))?;
        let dims = |n: usize| -> Result<&[usize]> {
            if self.dims.len() != n {
                return Err(Error::Checkpoint(format!(
                    "{} expects {n} dimensions, found {}",
                    self.kind.name(),
                    self.dims.len()
                )));
            }
            Ok(&self.dims)
        };
        let bad = |e: Error| Error::Checkpoint(format!("parameter count: {e}"));
        Ok(match self.kind {
            ModelKind::RankMlp => {
                let d = dims(2)?;
                let mut m = RankMlp::zeros(d[0], d[1]);
                m.set_params(&params).map_err(bad)?;
                AnyModel::RankMlp(m)
            }
            ModelKind::MatFac => {
                let d = dims(3)?;
                let mut m = MatFac {
                    user_vecs: Mat64::zeros(d[0], d[2]),
                    item_vecs: Mat64::zeros(d[1], d[2]),
                    item_bias: vec![0.0; d[1]],
                };
                m.set_params(&params).map_err(bad)?;
                AnyModel::MatFac(m)
            }
            ModelKind::EmbedCosine => {
                let d = dims(2)?;
                let mut m = EmbedCosine {
                    embeddings: Mat64::zeros(d[0], d[1]),
                };
                m.set_params(&params).map_err(bad)?;
                AnyModel::EmbedCosine(m)
            }
        })
    }
}

pub fn save_checkpoint(model: &AnyModel, path: &Path) -> Result<()> {
    let json = serde_json::to_string(&Checkpoint::from_model(model))?;
    fs::write(path, json)?;
    Ok(())
}

pub fn load_checkpoint(path: &Path) -> Result<AnyModel> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let ck: Checkpoint = serde_json::from_slice(&fs::read(path)?)?;
    ck.into_model()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::seeded_rng;

    #[test]
    fn round_trip_is_bit_exact() {
        let mut rng = seeded_rng(11);
        let mut mlp = RankMlp::new(4, 3, &mut rng);
        mlp.b2 = -0.0;
        mlp.b1[0] = f64::MIN_POSITIVE / 3.0;
        let models = [
            AnyModel::RankMlp(mlp),
            AnyModel::MatFac(MatFac::new(3, 5, 2, &mut rng)),
            AnyModel::EmbedCosine(EmbedCosine::new(7, 4, &mut rng)),
        ];
        let dir = tempfile::tempdir().unwrap();
        for m in models {
            let path = dir.path().join("ck.json");
            save_checkpoint(&m, &path).unwrap();
            let back = load_checkpoint(&path).unwrap();
            let bits = |v: Vec<f64>| v.into_iter().map(f64::to_bits).collect::<Vec<_>>();
            assert_eq!(bits(back.params()), bits(m.params()));
            assert_eq!(back.kind(), m.kind());
        }
    }

    #[test]
    fn rejects_wrong_parameter_count() {
        let mut ck = Checkpoint::from_model(&AnyModel::RankMlp(RankMlp::zeros(2, 2)));
        ck.params.pop();
        assert!(matches!(ck.into_model(), Err(Error::Checkpoint(_))));
    }

    #[test]
    fn missing_file() {
        let err = load_checkpoint(Path::new("/nonexistent/ck.json")).unwrap_err();
        assert!(err.is_config());
    }
}
