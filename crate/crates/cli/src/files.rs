//! Directory listing and stem pairing for corpus-level commands.

use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::{data, CliResult};

pub fn stem(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

pub fn has_ext(path: &Path, ext: &str) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case(ext))
}

/// Files in `dir` with extension `ext`, sorted by name. An empty result is
/// an error so typos in paths do not silently produce empty outputs.
pub fn list(dir: &Path, ext: &str) -> CliResult<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).map_err(|e| data(format!("{}: {e}", dir.display())))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| data(format!("{}: {e}", dir.display())))?.path();
        if path.is_file() && has_ext(&path, ext) {
            out.push(path);
        }
    }
    if out.is_empty() {
        return Err(data(format!("{}: no .{ext} files", dir.display())));
    }
    out.sort();
    Ok(out)
}

pub fn create_dir(dir: &Path) -> CliResult {
    std::fs::create_dir_all(dir).map_err(|e| data(format!("{}: {e}", dir.display())))
}

/// `dir/<stem>.<ext>`, required to exist.
pub fn partner(dir: &Path, stem: &str, ext: &str) -> CliResult<PathBuf> {
    let p = dir.join(format!("{stem}.{ext}"));
    if !p.is_file() {
        return Err(data(format!("{}: missing (paired by file stem)", p.display())));
    }
    Ok(p)
}

/// Runs `f` over `items` in parallel and reports the first failure in input
/// order, so errors do not depend on scheduling.
pub fn par_map<T: Sync, U: Send>(items: &[T], f: impl Fn(&T) -> CliResult<U> + Sync + Send) -> CliResult<Vec<U>> {
    items.par_iter().map(f).collect::<Vec<_>>().into_iter().collect()
}

/// Maps one input file to one output file, or every matching file in an
/// input directory to `<out>/<stem>.<out_ext>`. Returns the number of files
/// written.
pub fn file_or_dir(
    input: &Path,
    out: &Path,
    in_ext: &str,
    out_ext: &str,
    f: impl Fn(&Path, &Path) -> CliResult + Sync + Send,
) -> CliResult<usize> {
    if input.is_dir() {
        let inputs = list(input, in_ext)?;
        create_dir(out)?;
        par_map(&inputs, |p| f(p, &out.join(format!("{}.{out_ext}", stem(p)))))?;
        Ok(inputs.len())
    } else {
        f(input, out)?;
        Ok(1)
    }
}
