//! Card templates and their JSON manifest.

use std::path::{Path, PathBuf};

use idbsynth_core::record::DocumentKind;
use image::RgbImage;
use serde::{Deserialize, Serialize};

use crate::compositor::{CompositeError, Symbology};

/// Fewer pixels than this per side cannot hold a resolvable symbol.
pub const MIN_PLACEMENT_PX: u32 = 40;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateSpec {
    pub template_id: String,
    /// Relative to the manifest.
    pub image_path: PathBuf,
    pub width_px: u32,
    pub height_px: u32,
    pub placement: Rect,
    pub symbology: Symbology,
    pub document_kind: DocumentKind,
}

impl TemplateSpec {
    pub fn validate(&self) -> Result<(), CompositeError> {
        let p = self.placement;
        let bad = |m: String| Err(CompositeError::InvalidTemplate { template: self.template_id.clone(), message: m });
        if p.w < MIN_PLACEMENT_PX || p.h < MIN_PLACEMENT_PX {
            return bad(format!("placement {}x{} is below {MIN_PLACEMENT_PX} px", p.w, p.h));
        }
        if p.x as u64 + p.w as u64 > self.width_px as u64 || p.y as u64 + p.h as u64 > self.height_px as u64 {
            return bad(format!("placement {p:?} leaves the {}x{} image", self.width_px, self.height_px));
        }
        let expected = match self.document_kind {
            DocumentKind::InsuranceCard => Symbology::Code128,
            _ => Symbology::Pdf417,
        };
        if self.symbology != expected {
            return bad(format!("{} cards carry {:?}", self.document_kind, expected));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TemplateManifest {
    pub templates: Vec<TemplateSpec>,
}

/// A template with its decoded image.
#[derive(Clone, Debug)]
pub struct Template {
    pub spec: TemplateSpec,
    pub image: RgbImage,
}

impl Template {
    pub fn new(spec: TemplateSpec, image: RgbImage) -> Result<Template, CompositeError> {
        spec.validate()?;
        if image.dimensions() != (spec.width_px, spec.height_px) {
            return Err(CompositeError::InvalidTemplate {
                template: spec.template_id.clone(),
                message: format!("image is {:?}, manifest says {}x{}", image.dimensions(), spec.width_px, spec.height_px),
            });
        }
        Ok(Template { spec, image })
    }

    /// Plain white template, handy for tests.
    pub fn blank(id: &str, kind: DocumentKind, symbology: Symbology, size: (u32, u32), placement: Rect) -> Result<Template, CompositeError> {
        let spec = TemplateSpec {
            template_id: id.to_string(),
            image_path: PathBuf::from(format!("{id}.png")),
            width_px: size.0,
            height_px: size.1,
            placement,
            symbology,
            document_kind: kind,
        };
        Template::new(spec, RgbImage::from_pixel(size.0, size.1, image::Rgb([255; 3])))
    }
}

/// Templates loaded once and shared read-only by the workers.
#[derive(Clone, Debug)]
pub struct TemplateSet {
    templates: Vec<Template>,
}

const BUNDLED_MANIFEST: &str = include_str!("../assets/templates/manifest.json");
const BUNDLED_IMAGES: [(&str, &[u8]); 6] = [
    ("dl_back_blue.png", include_bytes!("../assets/templates/dl_back_blue.png")),
    ("dl_back_sand.png", include_bytes!("../assets/templates/dl_back_sand.png")),
    ("ins_front_green.png", include_bytes!("../assets/templates/ins_front_green.png")),
    ("ins_front_violet.png", include_bytes!("../assets/templates/ins_front_violet.png")),
    ("uni_front_crimson.png", include_bytes!("../assets/templates/uni_front_crimson.png")),
    ("uni_front_navy.png", include_bytes!("../assets/templates/uni_front_navy.png")),
];

fn decode_png(bytes: &[u8], what: &Path) -> Result<RgbImage, CompositeError> {
    image::load_from_memory_with_format(bytes, image::ImageFormat::Png)
        .map(|i| i.to_rgb8())
        .map_err(|e| CompositeError::Image { path: what.to_path_buf(), message: e.to_string() })
}

fn parse_manifest(text: &str, what: &Path) -> Result<TemplateManifest, CompositeError> {
    serde_json::from_str(text).map_err(|e| CompositeError::Manifest(format!("{}: {e}", what.display())))
}

impl TemplateSet {
    pub fn new(templates: Vec<Template>) -> Result<TemplateSet, CompositeError> {
        for (i, t) in templates.iter().enumerate() {
            if templates[..i].iter().any(|o| o.spec.template_id == t.spec.template_id) {
                return Err(CompositeError::Manifest(format!("duplicate template id {}", t.spec.template_id)));
            }
        }
        Ok(TemplateSet { templates })
    }

    /// The six stand-in cards shipped with the crate.
    pub fn bundled() -> TemplateSet {
        let manifest = parse_manifest(BUNDLED_MANIFEST, Path::new("bundled manifest")).expect("bundled manifest parses");
        let templates = manifest
            .templates
            .into_iter()
            .map(|spec| {
                let name = spec.image_path.to_str().expect("ascii name");
                let (_, bytes) = BUNDLED_IMAGES.iter().find(|(n, _)| *n == name).expect("bundled image present");
                let img = decode_png(bytes, &spec.image_path).expect("bundled image decodes");
                Template::new(spec, img).expect("bundled template is valid")
            })
            .collect();
        TemplateSet::new(templates).expect("bundled ids are unique")
    }

    pub fn load(manifest_path: &Path) -> Result<TemplateSet, CompositeError> {
        let text = std::fs::read_to_string(manifest_path)
            .map_err(|e| CompositeError::Manifest(format!("{}: {e}", manifest_path.display())))?;
        let manifest = parse_manifest(&text, manifest_path)?;
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let mut templates = Vec::with_capacity(manifest.templates.len());
        for spec in manifest.templates {
            let path = base.join(&spec.image_path);
            let bytes = std::fs::read(&path).map_err(|e| CompositeError::Image { path: path.clone(), message: e.to_string() })?;
            templates.push(Template::new(spec, decode_png(&bytes, &path)?)?);
        }
        TemplateSet::new(templates)
    }

    pub fn all(&self) -> &[Template] {
        &self.templates
    }

    /// Templates for `kind` in manifest order.
    pub fn for_kind(&self, kind: DocumentKind) -> Vec<&Template> {
        self.templates.iter().filter(|t| t.spec.document_kind == kind).collect()
    }

    pub fn get(&self, id: &str) -> Option<&Template> {
        self.templates.iter().find(|t| t.spec.template_id == id)
    }
}
