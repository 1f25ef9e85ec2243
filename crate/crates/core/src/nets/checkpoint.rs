use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Autoencoder, Discriminator, Encoder, Generator, Vae};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "minlgan-checkpoint/1";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Model {
    Gan {
        generator: Generator,
        discriminator: Discriminator,
        encoder: Option<Encoder>,
    },
    Ae {
        autoencoder: Autoencoder,
    },
    Vae {
        vae: Vae,
    },
}

/// Self-describing parameter snapshot: architecture, flat parameter arrays,
/// the seed of the run that produced it and its step counter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format: String,
    pub seed: u64,
    pub step: usize,
    pub model: Model,
}

impl Checkpoint {
    pub fn new(seed: u64, step: usize, model: Model) -> Self {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            seed,
            step,
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let ck: Checkpoint = serde_json::from_str(s).map_err(|e| Error::Format(e.to_string()))?;
        if ck.format != CHECKPOINT_FORMAT {
            return Err(Error::Format(format!("unsupported checkpoint format {:?}", ck.format)));
        }
        Ok(ck)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Checkpoint::from_json(&s)
    }

    pub fn discriminator(&self) -> Option<&Discriminator> {
        match &self.model {
            Model::Gan { discriminator, .. } => Some(discriminator),
            _ => None,
        }
    }

    pub fn generator(&self) -> Option<&Generator> {
        match &self.model {
            Model::Gan { generator, .. } => Some(generator),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nets::Architecture;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn gan_checkpoint(seed: u64, dim: usize) -> Checkpoint {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let arch = Architecture {
            latent_dim: 3,
            hidden: vec![5, 4],
            ..Architecture::default()
        };
        Checkpoint::new(
            seed,
            17,
            Model::Gan {
                generator: Generator::new(&arch, dim, &mut rng).unwrap(),
                discriminator: Discriminator::new(&arch, dim, &mut rng).unwrap(),
                encoder: Some(Encoder::new(&arch, dim, 3, &mut rng).unwrap()),
            },
        )
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]
        #[test]
        fn json_round_trip_is_bit_exact(seed in any::<u64>(), dim in 1usize..6, scale in -1e6f64..1e6) {
            let mut ck = gan_checkpoint(seed, dim);
            if let Model::Gan { generator, .. } = &mut ck.model {
                for s in generator.net.params_mut() {
                    for v in s.iter_mut() { *v *= scale; }
                }
            }
            let back = Checkpoint::from_json(&ck.to_json().unwrap()).unwrap();
            let bits = |c: &Checkpoint| match &c.model {
                Model::Gan { generator, discriminator, encoder } => generator.net.to_flat().into_iter()
                    .chain(discriminator.net.to_flat())
                    .chain(encoder.as_ref().unwrap().net.to_flat())
                    .map(f64::to_bits).collect::<Vec<_>>(),
                _ => unreachable!(),
            };
            prop_assert_eq!(bits(&ck), bits(&back));
            prop_assert_eq!(ck, back);
        }
    }

    #[test]
    fn rejects_foreign_format() {
        let mut ck = gan_checkpoint(1, 2);
        ck.format = "something-else".into();
        let s = serde_json::to_string(&ck).unwrap();
        assert!(matches!(Checkpoint::from_json(&s), Err(Error::Format(_))));
    }
}
