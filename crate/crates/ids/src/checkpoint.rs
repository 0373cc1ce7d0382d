//! Text checkpoints: a three-line header, then one weight per line.
//!
//! ```text
//! fsfl-weights v1
//! arch <dnn|cnn> <classifier|pairwise>
//! count <n>
//! <weight 0>
//! ...
//! ```
//!
//! Weights use the shortest decimal form that parses back to the same bits.

use std::io::{BufRead, Write};

use crate::error::IdsError;
use crate::nn::{Arch, Network};

const MAGIC: &str = "fsfl-weights v1";

pub fn write<W: Write>(mut w: W, net: &Network) -> Result<(), IdsError> {
    let a = net.arch();
    writeln!(w, "{MAGIC}")?;
    writeln!(w, "arch {} {}", a.model, a.head)?;
    writeln!(w, "count {}", net.params().len())?;
    for p in net.params() {
        writeln!(w, "{p:?}")?;
    }
    Ok(())
}

pub fn read<R: BufRead>(r: R) -> Result<Network, IdsError> {
    let bad = |m: String| IdsError::Checkpoint(m);
    let mut lines = r.lines();
    let mut next = |what: &str| -> Result<String, IdsError> {
        lines.next().ok_or_else(|| bad(format!("missing {what}")))?.map_err(IdsError::from)
    };
    if next("header")? != MAGIC {
        return Err(bad("not a weight checkpoint".into()));
    }
    let arch_line = next("arch line")?;
    let parts: Vec<&str> = arch_line.split_whitespace().collect();
    let arch = match parts.as_slice() {
        ["arch", m, h] => Arch::new(m.parse().map_err(bad)?, h.parse().map_err(bad)?),
        _ => return Err(bad(format!("bad arch line '{arch_line}'"))),
    };
    let count: usize = next("count line")?
        .strip_prefix("count ")
        .and_then(|c| c.parse().ok())
        .ok_or_else(|| bad("bad count line".into()))?;
    let mut params = Vec::with_capacity(count);
    for i in 0..count {
        let v: f64 = next("weight")?.trim().parse().map_err(|_| bad(format!("weight {i} is not a number")))?;
        params.push(v);
    }
    Network::from_params(arch, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{HeadKind, ModelKind};
    use fanet_sim::seed;

    #[test]
    fn round_trip_is_bit_exact() {
        for head in [HeadKind::Classifier, HeadKind::Pairwise] {
            let net = Network::init(Arch::new(ModelKind::Cnn, head), &mut seed::rng(3));
            let mut buf = Vec::new();
            write(&mut buf, &net).unwrap();
            assert_eq!(read(&buf[..]).unwrap(), net);
        }
    }

    #[test]
    fn truncated_and_mismatched_files_error() {
        let net = Network::zeros(Arch::classifier(ModelKind::Dnn));
        let mut buf = Vec::new();
        write(&mut buf, &net).unwrap();
        assert!(read(&buf[..buf.len() - 10]).is_err());
        let text = String::from_utf8(buf).unwrap().replace("count 441", "count 3");
        assert!(read(text.as_bytes()).is_err());
        assert!(read("hello\n".as_bytes()).is_err());
    }
}
