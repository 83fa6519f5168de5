use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::net::{DenseNet, NetSpec};
use crate::error::{Error, Result};

const FORMAT: &str = "s2cd-dense-net";
const VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetFile {
    format: String,
    version: u32,
    spec: NetSpec,
    params: Vec<f64>,
}

pub fn net_to_json(net: &DenseNet) -> Result<String> {
    let file = NetFile {
        format: FORMAT.into(),
        version: VERSION,
        spec: net.spec().clone(),
        params: net.params().to_vec(),
    };
    Ok(serde_json::to_string(&file)?)
}

pub fn net_from_json(s: &str) -> Result<DenseNet> {
    let file: NetFile = serde_json::from_str(s)?;
    if file.format != FORMAT || file.version != VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported checkpoint {} v{}",
            file.format, file.version
        )));
    }
    DenseNet::from_params(file.spec, file.params)
}

pub fn save_net(net: &DenseNet, path: &Path) -> Result<()> {
    fs::write(path, net_to_json(net)?)?;
    Ok(())
}

pub fn load_net(path: &Path) -> Result<DenseNet> {
    let s = fs::read_to_string(path)
        .map_err(|e| Error::Checkpoint(format!("cannot read {}: {e}", path.display())))?;
    net_from_json(&s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(seed: u64, scale in 1e-300..1e300f64) {
            let mut net = DenseNet::new(NetSpec::policy(11).with_hidden(vec![5]), &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            net.params_mut()[0] *= scale;
            let back = net_from_json(&net_to_json(&net).unwrap()).unwrap();
            prop_assert_eq!(back.checksum(), net.checksum());
            prop_assert!(back.params().iter().zip(net.params()).all(|(a, b)| a.to_bits() == b.to_bits()));
        }
    }

    #[test]
    fn rejects_foreign_or_corrupt_files() {
        let net = DenseNet::new(NetSpec::value(3), &mut ChaCha8Rng::seed_from_u64(0)).unwrap();
        let s = net_to_json(&net).unwrap();
        assert!(net_from_json(&s.replace(FORMAT, "other")).is_err());
        assert!(net_from_json(&s.replace("\"params\":[", "\"params\":[1.0,")).is_err());
        assert!(net_from_json("{}").is_err());
    }
}
