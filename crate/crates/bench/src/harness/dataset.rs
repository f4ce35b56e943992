//! Dataset layout and preparation.
//!
//! ```text
//! <root>/HR/<stem>.png
//! <root>/LR/x<scale>/<stem>.png
//! <root>/manifest.json
//! ```

use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use srbench_core::resample::{hr_crop_for_scale, CropRect};
use srbench_core::{decode_png, downscale_hr, encode_png, load_png, quantize, PlanarImage};

use crate::error::{Error, Result};

const MANIFEST_FORMAT: &str = "srbench-dataset";
const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetSpec {
    pub name: String,
    pub root: PathBuf,
    /// Scales with an `LR/x<scale>` directory.
    pub scales: BTreeSet<usize>,
    /// HR stems in sorted order.
    pub stems: Vec<String>,
}

impl DatasetSpec {
    /// Reads a prepared dataset. Every LR file must have an HR partner.
    pub fn open(root: impl AsRef<Path>) -> Result<Self> {
        let root = root.as_ref().to_path_buf();
        let hr_dir = root.join("HR");
        if !hr_dir.is_dir() {
            return Err(Error::Dataset(format!(
                "{} has no HR directory",
                root.display()
            )));
        }
        let stems: Vec<String> = png_files(&hr_dir)?.into_keys().collect();
        if stems.is_empty() {
            return Err(Error::Dataset(format!(
                "{} contains no PNG files",
                hr_dir.display()
            )));
        }
        let mut scales = BTreeSet::new();
        let lr_root = root.join("LR");
        if lr_root.is_dir() {
            for entry in fs::read_dir(&lr_root).map_err(|e| Error::io(&lr_root, e))? {
                let entry = entry.map_err(|e| Error::io(&lr_root, e))?;
                let name = entry.file_name().to_string_lossy().into_owned();
                let Some(scale) = name.strip_prefix('x').and_then(|s| s.parse::<usize>().ok())
                else {
                    continue;
                };
                for stem in png_files(&entry.path())?.into_keys() {
                    if stems.binary_search(&stem).is_err() {
                        return Err(Error::Dataset(format!(
                            "LR/x{scale}/{stem}.png has no HR counterpart"
                        )));
                    }
                }
                scales.insert(scale);
            }
        }
        let name = read_manifest(&root)
            .ok()
            .flatten()
            .map(|m| m.name)
            .unwrap_or_else(|| dir_name(&root));
        Ok(Self {
            name,
            root,
            scales,
            stems,
        })
    }

    pub fn hr_path(&self, stem: &str) -> PathBuf {
        self.root.join("HR").join(format!("{stem}.png"))
    }

    pub fn lr_dir(&self, scale: usize) -> PathBuf {
        self.root.join("LR").join(format!("x{scale}"))
    }

    pub fn lr_path(&self, stem: &str, scale: usize) -> PathBuf {
        self.lr_dir(scale).join(format!("{stem}.png"))
    }

    /// Stems present at `scale`, sorted.
    pub fn stems_at(&self, scale: usize) -> Result<Vec<String>> {
        if !self.scales.contains(&scale) {
            return Err(Error::Dataset(format!(
                "dataset `{}` has no LR/x{scale} directory (available: {:?})",
                self.name, self.scales
            )));
        }
        Ok(png_files(&self.lr_dir(scale))?.into_keys().collect())
    }

    /// Loads an LR image and its HR reference, cropped the way the LR image
    /// was generated. Fails if the sizes do not line up.
    pub fn load_pair(&self, stem: &str, scale: usize) -> Result<(PlanarImage, PlanarImage)> {
        let lr = load_png(self.lr_path(stem, scale))?;
        let hr = load_png(self.hr_path(stem))?;
        let crop = hr_crop_for_scale(hr.width(), hr.height(), scale)?;
        if (lr.width() * scale, lr.height() * scale) != (crop.width, crop.height) {
            return Err(Error::Dataset(format!(
                "LR/x{scale}/{stem}.png is {}x{} but HR {}x{} implies {}x{}",
                lr.width(),
                lr.height(),
                hr.width(),
                hr.height(),
                crop.width / scale,
                crop.height / scale
            )));
        }
        let hr = hr.crop(crop.x, crop.y, crop.width, crop.height)?;
        Ok((lr, hr))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FileEntry {
    pub sha256: String,
    pub width: usize,
    pub height: usize,
}

/// HR region used for one LR file when it is smaller than the whole image.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropNote {
    pub stem: String,
    pub scale: usize,
    pub hr_width: usize,
    pub hr_height: usize,
    pub crop: CropRect,
}

/// `manifest.json`. Contains nothing time-dependent, so an unchanged
/// dataset always produces the same bytes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub format: String,
    pub version: u32,
    pub name: String,
    pub scales: BTreeSet<usize>,
    /// Keyed by path relative to the dataset root, `/`-separated.
    pub files: BTreeMap<String, FileEntry>,
    pub crops: Vec<CropNote>,
    pub downscale: String,
}

fn read_manifest(root: &Path) -> Result<Option<DatasetManifest>> {
    let path = root.join("manifest.json");
    if !path.exists() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| Error::json(&path, e))
}

#[derive(Debug, Clone, PartialEq)]
pub struct PrepareReport {
    pub dataset: DatasetSpec,
    /// Files written (created or overwritten), relative to the root.
    pub written: Vec<String>,
    /// Files already present with the expected contents.
    pub unchanged: Vec<String>,
    pub manifest: DatasetManifest,
}

/// Copies HR images into `out_root/HR`, generates `LR/x<s>` for every scale
/// and writes the manifest. Existing files with the expected checksum are
/// left alone; mismatched ones are an error unless `force` is set.
pub fn prepare_dataset(
    hr_dir: impl AsRef<Path>,
    out_root: impl AsRef<Path>,
    scales: &BTreeSet<usize>,
    force: bool,
) -> Result<PrepareReport> {
    let (hr_dir, out_root) = (hr_dir.as_ref(), out_root.as_ref());
    if scales.is_empty() || scales.contains(&0) {
        return Err(Error::InvalidArgument(
            "scales must be a non-empty set of integers >= 1".into(),
        ));
    }
    let sources = png_files(hr_dir)?;
    if sources.is_empty() {
        return Err(Error::Dataset(format!(
            "{} contains no PNG files",
            hr_dir.display()
        )));
    }

    let mut writer = Writer {
        root: out_root.to_path_buf(),
        force,
        written: Vec::new(),
        unchanged: Vec::new(),
    };
    let mut files = BTreeMap::new();
    let mut crops = Vec::new();
    for (stem, src) in &sources {
        let bytes = fs::read(src).map_err(|e| Error::io(src, e))?;
        let hr =
            decode_png(&bytes).map_err(|e| Error::Dataset(format!("{}: {e}", src.display())))?;
        let rel = format!("HR/{stem}.png");
        writer.put(&rel, &bytes)?;
        files.insert(rel, entry(&bytes, &hr));

        for &scale in scales {
            let crop = hr_crop_for_scale(hr.width(), hr.height(), scale)
                .map_err(|e| Error::Dataset(format!("{}: {e}", src.display())))?;
            if (crop.width, crop.height) != hr.dims() {
                crops.push(CropNote {
                    stem: stem.clone(),
                    scale,
                    hr_width: hr.width(),
                    hr_height: hr.height(),
                    crop,
                });
            }
            let lr = quantize(&downscale_hr(&hr, scale)?);
            let png = encode_png(&lr)?;
            let rel = format!("LR/x{scale}/{stem}.png");
            writer.put(&rel, &png)?;
            files.insert(rel, entry(&png, &lr));
        }
    }

    let manifest = DatasetManifest {
        format: MANIFEST_FORMAT.into(),
        version: MANIFEST_VERSION,
        name: dir_name(out_root),
        scales: scales.clone(),
        files,
        crops,
        downscale:
            "center crop to a multiple of the scale, bicubic (a = -0.5) with antialiasing, 8-bit"
                .into(),
    };
    let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    text.push('\n');
    // The manifest is derived from the files above, so it may always be replaced.
    writer.write("manifest.json", text.as_bytes(), true)?;

    Ok(PrepareReport {
        dataset: DatasetSpec::open(out_root)?,
        written: writer.written,
        unchanged: writer.unchanged,
        manifest,
    })
}

struct Writer {
    root: PathBuf,
    force: bool,
    written: Vec<String>,
    unchanged: Vec<String>,
}

impl Writer {
    fn put(&mut self, rel: &str, bytes: &[u8]) -> Result<()> {
        self.write(rel, bytes, self.force)
    }

    fn write(&mut self, rel: &str, bytes: &[u8], force: bool) -> Result<()> {
        let path = self.root.join(rel);
        if path.exists() {
            let existing = fs::read(&path).map_err(|e| Error::io(&path, e))?;
            if sha256_hex(&existing) == sha256_hex(bytes) {
                self.unchanged.push(rel.to_string());
                return Ok(());
            }
            if !force {
                return Err(Error::Collision { path });
            }
        }
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.written.push(rel.to_string());
        Ok(())
    }
}

fn entry(bytes: &[u8], img: &PlanarImage) -> FileEntry {
    FileEntry {
        sha256: sha256_hex(bytes),
        width: img.width(),
        height: img.height(),
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// PNG files in `dir` keyed by stem.
fn png_files(dir: &Path) -> Result<BTreeMap<String, PathBuf>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).map_err(|e| Error::io(dir, e))? {
        let path = entry.map_err(|e| Error::io(dir, e))?.path();
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if path.is_file() && is_png {
            if let Some(stem) = path.file_stem() {
                out.insert(stem.to_string_lossy().into_owned(), path);
            }
        }
    }
    Ok(out)
}

fn dir_name(p: &Path) -> String {
    let abs = fs::canonicalize(p).unwrap_or_else(|_| p.to_path_buf());
    abs.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into())
}

#[cfg(test)]
mod tests {
    use super::*;
    use srbench_core::synthetic::smooth_gradient;
    use srbench_core::{save_png, ColorSpace};

    fn hr_dir(n: usize, w: usize, h: usize) -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        for i in 0..n {
            save_png(
                &smooth_gradient(w, h, i as u64),
                dir.path().join(format!("img{i:02}.png")),
            )
            .unwrap();
        }
        dir
    }

    #[test]
    fn generates_lr_for_each_scale() {
        let src = hr_dir(5, 64, 48);
        let out = tempfile::tempdir().unwrap();
        let r = prepare_dataset(src.path(), out.path(), &BTreeSet::from([2, 4]), false).unwrap();
        let lr: Vec<_> = r.written.iter().filter(|p| p.starts_with("LR/")).collect();
        assert_eq!(lr.len(), 10);
        assert_eq!(r.dataset.scales, BTreeSet::from([2, 4]));
        assert_eq!(r.dataset.stems.len(), 5);
        assert_eq!(r.manifest.files.len(), 15);
        assert!(out.path().join("manifest.json").exists());
    }

    #[test]
    fn rerun_writes_nothing() {
        let src = hr_dir(3, 40, 40);
        let out = tempfile::tempdir().unwrap();
        let scales = BTreeSet::from([2]);
        prepare_dataset(src.path(), out.path(), &scales, false).unwrap();
        let again = prepare_dataset(src.path(), out.path(), &scales, false).unwrap();
        assert!(again.written.is_empty(), "{:?}", again.written);
        assert_eq!(again.unchanged.len(), 7);
    }

    #[test]
    fn odd_size_crop_is_noted() {
        let src = tempfile::tempdir().unwrap();
        save_png(
            &PlanarImage::filled(101, 50, ColorSpace::Rgb, 70.0).unwrap(),
            src.path().join("a.png"),
        )
        .unwrap();
        let out = tempfile::tempdir().unwrap();
        let r = prepare_dataset(src.path(), out.path(), &BTreeSet::from([4]), false).unwrap();
        assert_eq!(r.manifest.files["LR/x4/a.png"].width, 25);
        assert_eq!(r.manifest.files["LR/x4/a.png"].height, 12);
        let note = &r.manifest.crops[0];
        assert_eq!(
            (note.crop.x, note.crop.y, note.crop.width, note.crop.height),
            (0, 1, 100, 48)
        );
        let (lr, hr) = r.dataset.load_pair("a", 4).unwrap();
        assert_eq!((lr.dims(), hr.dims()), ((25, 12), (100, 48)));
    }

    #[test]
    fn collision_needs_force() {
        let src = hr_dir(1, 32, 32);
        let out = tempfile::tempdir().unwrap();
        let scales = BTreeSet::from([2]);
        prepare_dataset(src.path(), out.path(), &scales, false).unwrap();
        let lr = out.path().join("LR/x2/img00.png");
        save_png(
            &PlanarImage::filled(16, 16, ColorSpace::Rgb, 1.0).unwrap(),
            &lr,
        )
        .unwrap();
        assert!(matches!(
            prepare_dataset(src.path(), out.path(), &scales, false),
            Err(Error::Collision { .. })
        ));
        let r = prepare_dataset(src.path(), out.path(), &scales, true).unwrap();
        assert_eq!(r.written, vec!["LR/x2/img00.png".to_string()]);
    }

    #[test]
    fn empty_hr_dir_rejected() {
        let src = tempfile::tempdir().unwrap();
        let out = tempfile::tempdir().unwrap();
        assert!(prepare_dataset(src.path(), out.path(), &BTreeSet::from([2]), false).is_err());
    }

    #[test]
    fn missing_scale_reported() {
        let src = hr_dir(1, 32, 32);
        let out = tempfile::tempdir().unwrap();
        let r = prepare_dataset(src.path(), out.path(), &BTreeSet::from([2]), false).unwrap();
        assert!(matches!(r.dataset.stems_at(3), Err(Error::Dataset(_))));
    }
}
