use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};

use crate::OUT_ENV;

/// `--out` if given, else `<root>/<name>` with the root taken from the
/// environment or `runs`.
pub fn resolve(out: Option<PathBuf>, name: &str) -> PathBuf {
    out.unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from("runs"), PathBuf::from);
        root.join(name)
    })
}

/// Creates `dir`, refusing to touch a non-empty one unless `force` is set.
pub fn prepare(dir: &Path, force: bool) -> Result<()> {
    if dir.exists() {
        let occupied = dir
            .read_dir()
            .with_context(|| format!("reading {}", dir.display()))?
            .next()
            .is_some();
        if occupied {
            if !force {
                bail!("{} already exists; pass --force to replace it", dir.display());
            }
            std::fs::remove_dir_all(dir).with_context(|| format!("removing {}", dir.display()))?;
        }
    }
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    Ok(())
}

pub fn subdir(dir: &Path, name: &str) -> Result<PathBuf> {
    let p = dir.join(name);
    std::fs::create_dir_all(&p).with_context(|| format!("creating {}", p.display()))?;
    Ok(p)
}
