//! On-disk scene layout:
//!
//! ```text
//! <root>/pair.txt
//! <root>/cams/00000000_cam.txt
//! <root>/depths_est/00000000.pfm     estimated depth
//! <root>/gt_depths/00000000.pfm      ground-truth depth
//! <root>/confidence/00000000.pfm     optional, fusion only
//! <root>/masks/00000000.pfm          optional reference masks (non-zero = inside)
//! ```

use std::path::{Path, PathBuf};

use gcmvs::io::{self, PairList};
use gcmvs::{Camera, DepthMap, Grid, Mask, SourceView, ViewBundle};

use crate::CliError;

pub type Real = f64;

pub struct SceneDir {
    pub root: PathBuf,
    pub pairs: PairList,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DepthKind {
    Estimated,
    GroundTruth,
}

impl DepthKind {
    fn dir(self) -> &'static str {
        match self {
            Self::Estimated => "depths_est",
            Self::GroundTruth => "gt_depths",
        }
    }
}

pub fn cam_path(root: &Path, id: usize) -> PathBuf {
    root.join("cams").join(format!("{id:08}_cam.txt"))
}

pub fn depth_path(root: &Path, kind: DepthKind, id: usize) -> PathBuf {
    root.join(kind.dir()).join(format!("{id:08}.pfm"))
}

impl SceneDir {
    pub fn open(root: &Path) -> Result<Self, CliError> {
        let pair_path = root.join("pair.txt");
        let text = io::read_text(&pair_path)?;
        let pairs = io::read_pair(&text).map_err(|e| CliError::Input(format!("{}: {e}", pair_path.display())))?;
        Ok(Self {
            root: root.to_path_buf(),
            pairs,
        })
    }

    pub fn camera(&self, id: usize) -> Result<Camera<Real>, CliError> {
        let path = cam_path(&self.root, id);
        let text = io::read_text(&path)?;
        io::read_cam(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    pub fn depth(&self, kind: DepthKind, id: usize) -> Result<DepthMap<Real>, CliError> {
        let path = depth_path(&self.root, kind, id);
        let bytes = io::read_file(&path)?;
        io::read_depth_pfm(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
    }

    fn optional_grid(&self, dir: &str, id: usize) -> Result<Option<Grid<Real>>, CliError> {
        let path = self.root.join(dir).join(format!("{id:08}.pfm"));
        if !path.exists() {
            return Ok(None);
        }
        let bytes = io::read_file(&path)?;
        let img = io::read_pfm(&bytes).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
        Ok(Some(img.to_grid()?))
    }

    pub fn confidence(&self, id: usize) -> Result<Option<Grid<Real>>, CliError> {
        self.optional_grid("confidence", id)
    }

    pub fn mask(&self, id: usize) -> Result<Option<Mask>, CliError> {
        Ok(self.optional_grid("masks", id)?.map(|g| g.map(|&v| v > 0.0)))
    }

    pub fn sources_of(&self, id: usize) -> Result<Vec<usize>, CliError> {
        self.pairs
            .sources_for(id)
            .ok_or_else(|| CliError::Input(format!("view {id} is not listed in pair.txt")))
    }

    /// Reference view `id` with `ref_kind` depth and ground-truth sources,
    /// keeping the first `m` pair-file neighbours.
    pub fn bundle(&self, id: usize, ref_kind: DepthKind, m: usize) -> Result<ViewBundle<Real>, CliError> {
        let source_ids = self.sources_of(id)?;
        if source_ids.len() < m {
            return Err(CliError::Constraint(format!(
                "M={m} source views requested but view {id} lists only {} in pair.txt",
                source_ids.len()
            )));
        }
        let ref_cam = self.camera(id)?;
        let ref_depth = self.depth(ref_kind, id)?;
        let sources = source_ids[..m]
            .iter()
            .map(|&s| {
                Ok(SourceView {
                    id: s,
                    camera: self.camera(s)?,
                    depth: self.depth(DepthKind::GroundTruth, s)?,
                })
            })
            .collect::<Result<Vec<_>, CliError>>()?;
        let mask = match self.mask(id)? {
            Some(m) => m,
            None if ref_kind == DepthKind::Estimated && depth_path(&self.root, DepthKind::GroundTruth, id).exists() => {
                self.depth(DepthKind::GroundTruth, id)?.validity()
            }
            None => ref_depth.validity(),
        };
        let mut bundle = ViewBundle::new(id, ref_cam, ref_depth, sources)?.with_mask(mask)?;
        bundle.provenance = std::iter::once(depth_path(&self.root, ref_kind, id))
            .chain(source_ids[..m].iter().map(|&s| depth_path(&self.root, DepthKind::GroundTruth, s)))
            .collect();
        Ok(bundle)
    }
}
