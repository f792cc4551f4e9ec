//! Binary checkpoint format for one network.
//!
//! | bytes | content                                  |
//! |-------|------------------------------------------|
//! | 4     | magic `DVPV`                             |
//! | 4     | format version (u32, currently 1)        |
//! | 4     | number of layer widths `k` (u32)         |
//! | 4 k   | layer widths input..output (u32 each)    |
//! | 8     | parameter count (u64)                    |
//! | 8 n   | parameters (f64)                         |
//!
//! All integers and floats are little-endian.

use std::io::{Read, Write};

use crate::{Error, Result};

use super::{NetworkSpec, ParamVector};

const MAGIC: &[u8; 4] = b"DVPV";
const VERSION: u32 = 1;

pub fn write_params<W: Write>(mut w: W, spec: &NetworkSpec, params: &ParamVector) -> Result<()> {
    if params.len() != spec.param_count() {
        return Err(Error::shape("parameter vector", spec.param_count(), params.len()));
    }
    let dims: Vec<usize> = spec.dims().collect();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(dims.len() as u32).to_le_bytes())?;
    for d in dims {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    w.write_all(&(params.len() as u64).to_le_bytes())?;
    for x in params.iter() {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

pub fn read_params<R: Read>(mut r: R) -> Result<(NetworkSpec, ParamVector)> {
    let bad = |msg: &str| Error::Parse {
        what: "parameter file",
        msg: msg.to_string(),
    };
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(bad("wrong magic"));
    }
    if read_u32(&mut r)? != VERSION {
        return Err(bad("unsupported version"));
    }
    let n_dims = read_u32(&mut r)? as usize;
    if n_dims < 2 {
        return Err(bad("need at least input and output widths"));
    }
    let dims = (0..n_dims)
        .map(|_| read_u32(&mut r).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let spec = NetworkSpec::new(dims[0], dims[1..n_dims - 1].to_vec(), dims[n_dims - 1])?;
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    let count = u64::from_le_bytes(buf) as usize;
    if count != spec.param_count() {
        return Err(bad("parameter count does not match layer widths"));
    }
    let mut values = Vec::with_capacity(count);
    for _ in 0..count {
        r.read_exact(&mut buf)?;
        values.push(f64::from_le_bytes(buf));
    }
    Ok((spec, ParamVector::from(values)))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut buf = [0u8; 4];
    r.read_exact(&mut buf)?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::init_params;
    use crate::rng::{stream_rng, Stream};

    #[test]
    fn round_trip_is_exact() {
        let spec = NetworkSpec::new(5, vec![7, 3], 4).unwrap();
        let params = init_params(&spec, &mut stream_rng(3, Stream::Init(1)));
        let mut bytes = Vec::new();
        write_params(&mut bytes, &spec, &params).unwrap();
        assert_eq!(bytes.len(), 4 + 4 + 4 + 4 * 4 + 8 + 8 * params.len());
        assert_eq!(&bytes[..4], b"DVPV");
        let (spec2, params2) = read_params(bytes.as_slice()).unwrap();
        assert_eq!(spec, spec2);
        assert_eq!(params, params2);
    }

    #[test]
    fn rejects_corruption() {
        let spec = NetworkSpec::new(2, vec![2], 2).unwrap();
        let mut bytes = Vec::new();
        write_params(&mut bytes, &spec, &ParamVector::zeros(spec.param_count())).unwrap();
        let mut wrong = bytes.clone();
        wrong[0] = b'X';
        assert!(read_params(wrong.as_slice()).is_err());
        assert!(read_params(&bytes[..bytes.len() - 3]).is_err());
    }
}
