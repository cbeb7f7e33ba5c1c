//! Complex manifests: a delimited table with columns `id`, `protein`,
//! `ligand` and optionally `features`. Tab-delimited when the header line
//! contains a tab, comma-delimited otherwise. Relative paths resolve
//! against the manifest's directory.

use std::path::{Path, PathBuf};

use serde::Deserialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Entry {
    pub id: String,
    pub protein: PathBuf,
    pub ligand: PathBuf,
    pub features: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ManifestError {
    #[error("reading {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: duplicate id {id:?}")]
    Duplicate { path: PathBuf, id: String },
    #[error("{path}: no entries")]
    Empty { path: PathBuf },
}

#[derive(Deserialize)]
struct Row {
    id: String,
    protein: String,
    ligand: String,
    #[serde(default)]
    features: Option<String>,
}

pub fn parse_manifest(text: &str, base: &Path, path: &Path) -> Result<Vec<Entry>, ManifestError> {
    let header = text.lines().next().unwrap_or("");
    let delimiter = if header.contains('\t') { b'\t' } else { b',' };
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let resolve = |p: &str| {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            base.join(p)
        }
    };
    let mut out: Vec<Entry> = Vec::new();
    for row in reader.deserialize() {
        let row: Row = row.map_err(|source| ManifestError::Csv { path: path.into(), source })?;
        if out.iter().any(|e| e.id == row.id) {
            return Err(ManifestError::Duplicate { path: path.into(), id: row.id });
        }
        out.push(Entry {
            protein: resolve(&row.protein),
            ligand: resolve(&row.ligand),
            features: row.features.filter(|f| !f.is_empty()).map(|f| resolve(&f)),
            id: row.id,
        });
    }
    if out.is_empty() {
        return Err(ManifestError::Empty { path: path.into() });
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<Entry>, ManifestError> {
    let text = std::fs::read_to_string(path).map_err(|source| ManifestError::Io { path: path.into(), source })?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tab_and_comma() {
        let base = Path::new("/data");
        let tsv = "id\tprotein\tligand\tfeatures\na\tp.pdb\tl.pdb\t\nb\t/abs/p.pdb\tl2.pdb\tf.txt\n";
        let e = parse_manifest(tsv, base, Path::new("m.tsv")).unwrap();
        assert_eq!(e[0].protein, Path::new("/data/p.pdb"));
        assert_eq!(e[0].features, None);
        assert_eq!(e[1].protein, Path::new("/abs/p.pdb"));
        assert_eq!(e[1].features.as_deref(), Some(Path::new("/data/f.txt")));
        let csv = "id,protein,ligand\na,p.pdb,l.pdb\n";
        assert_eq!(parse_manifest(csv, base, Path::new("m.csv")).unwrap().len(), 1);
    }

    #[test]
    fn rejects_duplicates_and_empty() {
        let base = Path::new(".");
        let dup = "id,protein,ligand\na,p,l\na,p,l\n";
        assert!(matches!(parse_manifest(dup, base, Path::new("m")), Err(ManifestError::Duplicate { .. })));
        assert!(matches!(parse_manifest("id,protein,ligand\n", base, Path::new("m")), Err(ManifestError::Empty { .. })));
        assert!(matches!(parse_manifest("id,protein\na,p\n", base, Path::new("m")), Err(ManifestError::Csv { .. })));
    }
}
