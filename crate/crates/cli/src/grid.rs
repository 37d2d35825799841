use anyhow::{bail, Context, Result};

/// Parses `3`, `1-4` or `1,3,5` (and mixtures like `1-2,5`) into a sorted,
/// deduplicated list of positive integers.
pub fn parse_range(spec: &str) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((lo, hi)) => {
                let lo: usize = lo.trim().parse().with_context(|| format!("bad range start in {part:?}"))?;
                let hi: usize = hi.trim().parse().with_context(|| format!("bad range end in {part:?}"))?;
                if lo > hi {
                    bail!("empty range {part:?}");
                }
                out.extend(lo..=hi);
            }
            None => out.push(part.parse().with_context(|| format!("bad value {part:?}"))?),
        }
    }
    if out.is_empty() {
        bail!("empty range {spec:?}");
    }
    if out.contains(&0) {
        bail!("counts must be at least 1 in {spec:?}");
    }
    out.sort_unstable();
    out.dedup();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("3").unwrap(), vec![3]);
        assert_eq!(parse_range("1-4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_range("5,1-2,2").unwrap(), vec![1, 2, 5]);
        assert!(parse_range("0-2").is_err());
        assert!(parse_range("4-2").is_err());
        assert!(parse_range("x").is_err());
        assert!(parse_range("").is_err());
    }
}
