//! Scene setup types shared by both games, preset tables, and resolution of a
//! raw scene config into a fully numeric [`ResolvedScene`].

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::Value;
use thiserror::Error;

use crate::chess::{ChessConfig, ChessError, ChessLayout};
use crate::config::GameKind;
use crate::poker::{PokerConfig, PokerError, PokerLayout};
use crate::seed::{rng_for, sub_seed};

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("unknown {kind} preset `{name}` (valid: {valid})")]
    UnknownPreset { kind: &'static str, name: String, valid: String },
    #[error("{path}: {reason}")]
    Invalid { path: String, reason: String },
    #[error("scene config: {0}")]
    Config(String),
    #[error(transparent)]
    Chess(#[from] ChessError),
    #[error(transparent)]
    Poker(#[from] PokerError),
}

// ---------------------------------------------------------------------------
// colors

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rgba(pub [f64; 4]);

pub const NAMED_COLORS: [(&str, [f64; 4]); 16] = [
    ("white", [0.9, 0.9, 0.9, 1.0]),
    ("black", [0.1, 0.1, 0.1, 1.0]),
    ("pure_white", [1.0, 1.0, 1.0, 1.0]),
    ("pure_black", [0.0, 0.0, 0.0, 1.0]),
    ("red", [0.8, 0.1, 0.1, 1.0]),
    ("green", [0.2, 0.8, 0.2, 1.0]),
    ("blue", [0.1, 0.2, 0.8, 1.0]),
    ("yellow", [0.9, 0.8, 0.1, 1.0]),
    ("gray", [0.5, 0.5, 0.5, 1.0]),
    ("light_gray", [0.8, 0.8, 0.8, 1.0]),
    ("medium_gray", [0.6, 0.6, 0.6, 1.0]),
    ("dark_gray", [0.4, 0.4, 0.4, 1.0]),
    ("light_wood", [0.8, 0.7, 0.6, 1.0]),
    ("medium_wood", [0.6, 0.5, 0.4, 1.0]),
    ("dark_wood", [0.4, 0.3, 0.2, 1.0]),
    ("green_felt", [0.1, 0.4, 0.2, 1.0]),
];

impl Rgba {
    pub const fn new(r: f64, g: f64, b: f64, a: f64) -> Self {
        Rgba([r, g, b, a])
    }

    pub fn named(name: &str) -> Option<Self> {
        let key = name.trim().to_ascii_lowercase().replace([' ', '-'], "_");
        NAMED_COLORS.iter().find(|(n, _)| *n == key).map(|(_, c)| Rgba(*c))
    }

    pub fn in_range(&self) -> bool {
        self.0.iter().all(|c| (0.0..=1.0).contains(c))
    }

    /// Rec. 601 luma of the color channels.
    pub fn luma(&self) -> f64 {
        0.299 * self.0[0] + 0.587 * self.0[1] + 0.114 * self.0[2]
    }

    pub fn scaled(&self, k: f64) -> Self {
        Rgba([
            (self.0[0] * k).clamp(0.0, 1.0),
            (self.0[1] * k).clamp(0.0, 1.0),
            (self.0[2] * k).clamp(0.0, 1.0),
            self.0[3],
        ])
    }

    pub fn to_u8(&self) -> [u8; 4] {
        let q = |c: f64| (c.clamp(0.0, 1.0) * 255.0).round() as u8;
        [q(self.0[0]), q(self.0[1]), q(self.0[2]), q(self.0[3])]
    }
}

impl Serialize for Rgba {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

impl<'de> Deserialize<'de> for Rgba {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Input {
            Name(String),
            Channels(Vec<f64>),
        }
        match Input::deserialize(d)? {
            Input::Name(n) => Rgba::named(&n)
                .ok_or_else(|| serde::de::Error::custom(format!("unknown color name `{n}`"))),
            Input::Channels(c) if c.len() == 4 => Ok(Rgba([c[0], c[1], c[2], c[3]])),
            Input::Channels(c) if c.len() == 3 => Ok(Rgba([c[0], c[1], c[2], 1.0])),
            Input::Channels(c) => Err(serde::de::Error::custom(format!(
                "color needs 3 or 4 channels, got {}",
                c.len()
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MaterialSpec {
    pub color: Rgba,
    pub roughness: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub material_name: Option<String>,
}

impl Default for MaterialSpec {
    fn default() -> Self {
        Self { color: Rgba::new(0.8, 0.8, 0.8, 1.0), roughness: 0.5, material_name: None }
    }
}

impl MaterialSpec {
    pub fn colored(color: Rgba, roughness: f64) -> Self {
        Self { color, roughness, material_name: None }
    }
}

// ---------------------------------------------------------------------------
// presets

/// A preset name or a literal number.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Setting {
    Value(f64),
    Preset(String),
}

impl Setting {
    pub fn preset(name: &str) -> Self {
        Setting::Preset(name.to_string())
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Setting::Value(v) => write!(f, "{v}"),
            Setting::Preset(p) => f.write_str(p),
        }
    }
}

pub const RESOLUTION_PRESETS: [(&str, (u32, u32)); 3] =
    [("low", (640, 480)), ("medium", (1280, 720)), ("high", (1920, 1080))];

/// f-stop per blur preset; `None` disables blur.
pub const BLUR_PRESETS: [(&str, Option<f64>); 6] = [
    ("none", None),
    ("very_low", Some(9.0)),
    ("low", Some(4.0)),
    ("medium", Some(2.0)),
    ("high", Some(1.0)),
    ("very_high", Some(0.5)),
];

pub const LIGHTING_PRESETS: [(&str, f64); 5] =
    [("very_low", 0.3), ("low", 0.6), ("medium", 1.0), ("high", 1.5), ("very_high", 2.0)];

pub const DISTANCE_PRESETS: [(&str, f64); 5] =
    [("very_close", 1.7), ("close", 2.5), ("medium", 3.5), ("far", 5.5), ("very_far", 7.5)];

pub const ANGLE_PRESETS: [(&str, f64); 3] = [("low", 30.0), ("medium", 55.0), ("high", 80.0)];

/// Scene light powers when no lighting noise is active.
pub const SCENE_LIGHT_BASE: (f64, f64, f64) = (300.0, 50.0, 50.0);
/// Light powers scaled by a lighting-noise preset.
pub const NOISE_LIGHT_BASE: (f64, f64, f64) = (400.0, 200.0, 300.0);

fn lookup<T: Copy>(table: &[(&str, T)], kind: &'static str, name: &str) -> Result<T, SceneError> {
    table
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, v)| *v)
        .ok_or_else(|| SceneError::UnknownPreset {
            kind,
            name: name.to_string(),
            valid: table.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "),
        })
}

/// Inverse lookup: the preset a resolved value came from, if any.
pub fn preset_name<T: PartialEq>(table: &[(&'static str, T)], value: &T) -> Option<&'static str> {
    let mut hits = table.iter().filter(|(_, v)| v == value);
    let first = hits.next().map(|(n, _)| *n);
    debug_assert!(hits.next().is_none(), "preset tables are injective");
    first
}

fn resolve_setting(s: &Setting, table: &[(&str, f64)], kind: &'static str) -> Result<f64, SceneError> {
    match s {
        Setting::Value(v) => Ok(*v),
        Setting::Preset(p) => lookup(table, kind, p),
    }
}

pub fn resolve_blur(s: &Setting) -> Result<Option<f64>, SceneError> {
    match s {
        Setting::Value(v) => Ok(Some(*v)),
        Setting::Preset(p) => lookup(&BLUR_PRESETS, "blur", p),
    }
}

// ---------------------------------------------------------------------------
// raw setup config

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraSpec {
    pub distance: Setting,
    pub angle: Setting,
    pub horizontal_angle: f64,
    pub randomize_distance: bool,
    pub randomize_distance_percentage: f64,
    pub randomize_angle: bool,
    pub randomize_angle_percentage: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self {
            distance: Setting::preset("medium"),
            angle: Setting::preset("medium"),
            horizontal_angle: 0.0,
            randomize_distance: false,
            randomize_distance_percentage: 0.1,
            randomize_angle: false,
            randomize_angle_percentage: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableShape {
    #[default]
    #[serde(alias = "RECTANGULAR")]
    Rectangular,
    #[serde(alias = "CIRCULAR")]
    Circular,
    #[serde(alias = "ELLIPTIC")]
    Elliptic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TableTexture {
    #[default]
    #[serde(alias = "WOOD")]
    Wood,
    #[serde(alias = "MARBLE")]
    Marble,
    #[serde(alias = "METAL")]
    Metal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TableSpec {
    pub shape: TableShape,
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub texture: TableTexture,
    pub material: MaterialSpec,
}

impl Default for TableSpec {
    fn default() -> Self {
        Self {
            shape: TableShape::Rectangular,
            length: 2.0,
            width: 1.0,
            height: 0.9,
            texture: TableTexture::Wood,
            material: MaterialSpec::colored(Rgba::new(0.6, 0.5, 0.4, 1.0), 0.5),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FloorSpec {
    pub color: Rgba,
    pub roughness: f64,
}

impl Default for FloorSpec {
    fn default() -> Self {
        Self { color: Rgba::new(0.8, 0.8, 0.8, 1.0), roughness: 0.5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundSpec {
    pub color: Rgba,
    pub use_hdri: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub hdri_path: Option<String>,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        Self { color: Rgba::new(0.5, 0.5, 0.5, 1.0), use_hdri: false, hdri_path: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LightingSpec {
    pub lighting: Setting,
    pub key_light_power: f64,
    pub fill_light_power: f64,
    pub back_light_power: f64,
}

impl Default for LightingSpec {
    fn default() -> Self {
        Self {
            lighting: Setting::preset("medium"),
            key_light_power: SCENE_LIGHT_BASE.0,
            fill_light_power: SCENE_LIGHT_BASE.1,
            back_light_power: SCENE_LIGHT_BASE.2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResolutionSpec {
    pub preset: Option<String>,
    pub width: u32,
    pub height: u32,
    pub resolution_percentage: f64,
}

impl Default for ResolutionSpec {
    fn default() -> Self {
        Self { preset: None, width: 1920, height: 1080, resolution_percentage: 100.0 }
    }
}

impl<'de> Deserialize<'de> for ResolutionSpec {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(default, deny_unknown_fields)]
        struct Full {
            preset: Option<String>,
            width: u32,
            height: u32,
            resolution_percentage: f64,
        }
        impl Default for Full {
            fn default() -> Self {
                let d = ResolutionSpec::default();
                Full { preset: d.preset, width: d.width, height: d.height, resolution_percentage: d.resolution_percentage }
            }
        }
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Input {
            Preset(String),
            Full(Full),
        }
        Ok(match Input::deserialize(d)? {
            Input::Preset(p) => ResolutionSpec { preset: Some(p), ..ResolutionSpec::default() },
            Input::Full(f) => ResolutionSpec {
                preset: f.preset,
                width: f.width,
                height: f.height,
                resolution_percentage: f.resolution_percentage,
            },
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Backend {
    #[default]
    Raster,
    Blender,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenderSpec {
    pub backend: Backend,
    pub engine: String,
    pub samples: u32,
    /// Samples per pixel edge used by the raster backend.
    pub supersample: u32,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self { backend: Backend::Raster, engine: "CYCLES".into(), samples: 128, supersample: 2 }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SetupConfig {
    pub camera: CameraSpec,
    pub table: TableSpec,
    pub floor: FloorSpec,
    pub background: BackgroundSpec,
    pub lighting: LightingSpec,
    pub resolution: ResolutionSpec,
    pub render: RenderSpec,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum TextureLevel {
    Low,
    #[default]
    Medium,
    High,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    pub blur: Setting,
    #[serde(alias = "light", skip_serializing_if = "Option::is_none")]
    pub lighting: Option<Setting>,
    pub table_texture: TextureLevel,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self { blur: Setting::preset("none"), lighting: None, table_texture: TextureLevel::Medium }
    }
}

// ---------------------------------------------------------------------------
// resolved types

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraSettings {
    pub distance: f64,
    /// Elevation in degrees, 90 = top-down.
    pub angle: f64,
    pub horizontal_angle: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Lighting {
    pub multiplier: f64,
    pub key_light_power: f64,
    pub fill_light_power: f64,
    pub back_light_power: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub width: u32,
    pub height: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedSetup {
    pub camera: CameraSettings,
    pub table: TableSpec,
    pub floor: FloorSpec,
    pub background: BackgroundSpec,
    pub lighting: Lighting,
    pub resolution: Resolution,
    pub render: RenderSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedNoise {
    /// `None` disables blur.
    pub blur_fstop: Option<f64>,
    /// Brightness multiplier of the lighting-noise layer, if active.
    pub lighting: Option<f64>,
    pub table_texture: TextureLevel,
}

impl Default for ResolvedNoise {
    fn default() -> Self {
        Self { blur_fstop: None, lighting: None, table_texture: TextureLevel::Medium }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GameScene {
    Chess(ChessLayout),
    Poker(PokerLayout),
}

impl GameScene {
    pub fn kind(&self) -> GameKind {
        match self {
            GameScene::Chess(_) => GameKind::Chess,
            GameScene::Poker(_) => GameKind::Poker,
        }
    }
}

/// A fully numeric scene: what the renderer, legend and exporters consume.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResolvedScene {
    pub setup: ResolvedSetup,
    pub noise: ResolvedNoise,
    pub game: GameScene,
    pub derived_seed: u64,
}

/// Raw scene config as assembled from a dataset's base scene and assignments.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub setup: SetupConfig,
    pub noise: NoiseConfig,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chess: Option<ChessConfig>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub poker: Option<PokerConfig>,
}

// ---------------------------------------------------------------------------
// assembling configs from dotted assignments

const SETUP_SECTIONS: [&str; 7] = ["camera", "table", "floor", "background", "lighting", "resolution", "render"];

/// Map a dataset variable path onto its location in [`SceneConfig`].
pub fn canonical_path(game: GameKind, path: &str) -> String {
    let first = path.split('.').next().unwrap_or("");
    if ["setup", "noise", "chess", "poker"].contains(&first) {
        return path.to_string();
    }
    if SETUP_SECTIONS.contains(&first) {
        return format!("setup.{path}");
    }
    if path == "n_players" {
        return "poker.n_players".into();
    }
    if let Some(rest) = path.strip_prefix("card_distribution_inputs.") {
        return format!("poker.card_distribution.{rest}");
    }
    if let Some(rest) = path.strip_prefix("chip_distribution_inputs.") {
        let rest = if rest == "color_options" { "color" } else { rest };
        return format!("poker.chips.{rest}");
    }
    format!("{}.{path}", game.as_str())
}

fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), SceneError> {
    let mut cur = root;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        if !cur.is_object() {
            if cur.is_null() {
                *cur = Value::Object(Default::default());
            } else {
                return Err(SceneError::Invalid {
                    path: parts[..i].join("."),
                    reason: "cannot assign below a non-mapping value".into(),
                });
            }
        }
        let map = cur.as_object_mut().expect("object");
        if i + 1 == parts.len() {
            map.insert(part.to_string(), value);
            return Ok(());
        }
        cur = map.entry(part.to_string()).or_insert(Value::Null);
    }
    Ok(())
}

impl SceneConfig {
    /// Build a scene config for `game` from an optional base document and a set
    /// of dotted-path assignments.
    pub fn from_assignments(
        game: GameKind,
        base: Option<&Value>,
        assignments: &BTreeMap<String, Value>,
    ) -> Result<Self, SceneError> {
        let mut doc = base.cloned().unwrap_or_else(|| serde_json::json!({}));
        if !doc.is_object() {
            return Err(SceneError::Config("base scene must be a mapping".into()));
        }
        let obj = doc.as_object_mut().unwrap();
        obj.entry(game.as_str()).or_insert_with(|| serde_json::json!({}));
        for (path, value) in assignments {
            set_path(&mut doc, &canonical_path(game, path), value.clone())?;
        }
        let cfg: SceneConfig = serde_json::from_value(doc).map_err(|e| SceneError::Config(e.to_string()))?;
        if cfg.chess.is_some() && cfg.poker.is_some() {
            return Err(SceneError::Config("a scene is either chess or poker, not both".into()));
        }
        Ok(cfg)
    }
}

// ---------------------------------------------------------------------------
// resolution

pub fn resolve_camera(spec: &CameraSpec, seed: u64) -> Result<CameraSettings, SceneError> {
    let mut distance = resolve_setting(&spec.distance, &DISTANCE_PRESETS, "camera distance")?;
    let mut angle = resolve_setting(&spec.angle, &ANGLE_PRESETS, "camera angle")?;
    let mut rng = rng_for(seed, "camera");
    if spec.randomize_distance {
        distance = crate::config::resolve_randomization(distance, spec.randomize_distance_percentage, &mut rng);
    }
    if spec.randomize_angle {
        angle = crate::config::resolve_randomization(angle, spec.randomize_angle_percentage, &mut rng).min(90.0);
    }
    Ok(CameraSettings { distance, angle, horizontal_angle: spec.horizontal_angle.rem_euclid(360.0) })
}

pub fn resolve_resolution(spec: &ResolutionSpec) -> Result<Resolution, SceneError> {
    let (w, h) = match &spec.preset {
        Some(p) => lookup(&RESOLUTION_PRESETS, "resolution", p)?,
        None => (spec.width, spec.height),
    };
    let pct = spec.resolution_percentage / 100.0;
    let scale = |v: u32| (f64::from(v) * pct).round() as u32;
    Ok(Resolution { width: scale(w), height: scale(h) })
}

pub fn resolve_noise(spec: &NoiseConfig) -> Result<ResolvedNoise, SceneError> {
    Ok(ResolvedNoise {
        blur_fstop: resolve_blur(&spec.blur)?,
        lighting: match &spec.lighting {
            Some(s) => Some(resolve_setting(s, &LIGHTING_PRESETS, "lighting")?),
            None => None,
        },
        table_texture: spec.table_texture,
    })
}

/// Scene lights; an active lighting-noise layer replaces the scene's own.
pub fn resolve_lighting(spec: &LightingSpec, noise: &ResolvedNoise) -> Result<Lighting, SceneError> {
    Ok(match noise.lighting {
        Some(m) => Lighting {
            multiplier: m,
            key_light_power: NOISE_LIGHT_BASE.0 * m,
            fill_light_power: NOISE_LIGHT_BASE.1 * m,
            back_light_power: NOISE_LIGHT_BASE.2 * m,
        },
        None => {
            let m = resolve_setting(&spec.lighting, &LIGHTING_PRESETS, "lighting")?;
            Lighting {
                multiplier: m,
                key_light_power: spec.key_light_power * m,
                fill_light_power: spec.fill_light_power * m,
                back_light_power: spec.back_light_power * m,
            }
        }
    })
}

pub fn resolve_setup(setup: &SetupConfig, noise: &NoiseConfig, seed: u64) -> Result<(ResolvedSetup, ResolvedNoise), SceneError> {
    let noise = resolve_noise(noise)?;
    let resolved = ResolvedSetup {
        camera: resolve_camera(&setup.camera, seed)?,
        table: setup.table.clone(),
        floor: setup.floor.clone(),
        background: setup.background.clone(),
        lighting: resolve_lighting(&setup.lighting, &noise)?,
        resolution: resolve_resolution(&setup.resolution)?,
        render: setup.render.clone(),
    };
    Ok((resolved, noise))
}

/// Resolve every preset and generate the game payload.
pub fn resolve_presets(config: &SceneConfig, seed: u64) -> Result<ResolvedScene, SceneError> {
    let (setup, noise) = resolve_setup(&config.setup, &config.noise, seed)?;
    let game = match (&config.chess, &config.poker) {
        (Some(c), None) => GameScene::Chess(crate::chess::generate_layout(c, sub_seed(seed, "chess"))?),
        (None, Some(p)) => GameScene::Poker(crate::poker::generate_layout(p, &setup.table, sub_seed(seed, "poker"))?),
        (None, None) => GameScene::Chess(crate::chess::generate_layout(&ChessConfig::default(), sub_seed(seed, "chess"))?),
        (Some(_), Some(_)) => return Err(SceneError::Config("a scene is either chess or poker, not both".into())),
    };
    Ok(ResolvedScene { setup, noise, game, derived_seed: seed })
}

impl ResolvedSetup {
    /// Raw config that resolves back to this setup.
    pub fn to_config(&self) -> SetupConfig {
        SetupConfig {
            camera: CameraSpec {
                distance: Setting::Value(self.camera.distance),
                angle: Setting::Value(self.camera.angle),
                horizontal_angle: self.camera.horizontal_angle,
                ..CameraSpec::default()
            },
            table: self.table.clone(),
            floor: self.floor.clone(),
            background: self.background.clone(),
            lighting: LightingSpec {
                lighting: Setting::Value(self.lighting.multiplier),
                key_light_power: self.lighting.key_light_power / self.lighting.multiplier,
                fill_light_power: self.lighting.fill_light_power / self.lighting.multiplier,
                back_light_power: self.lighting.back_light_power / self.lighting.multiplier,
            },
            resolution: ResolutionSpec {
                preset: None,
                width: self.resolution.width,
                height: self.resolution.height,
                resolution_percentage: 100.0,
            },
            render: self.render.clone(),
        }
    }
}

impl ResolvedNoise {
    pub fn to_config(&self) -> NoiseConfig {
        NoiseConfig {
            blur: match self.blur_fstop {
                Some(f) => Setting::Value(f),
                None => Setting::preset("none"),
            },
            lighting: self.lighting.map(Setting::Value),
            table_texture: self.table_texture,
        }
    }
}

// ---------------------------------------------------------------------------
// validation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub path: String,
    pub message: String,
}

fn push(out: &mut Vec<Violation>, path: &str, message: impl Into<String>) {
    out.push(Violation { path: path.to_string(), message: message.into() });
}

fn check_positive(out: &mut Vec<Violation>, path: &str, v: f64) {
    if !(v.is_finite() && v > 0.0) {
        push(out, path, format!("must be positive, got {v}"));
    }
}

fn check_color(out: &mut Vec<Violation>, path: &str, c: &Rgba) {
    if !c.in_range() {
        push(out, path, format!("RGBA components must lie in [0, 1], got {:?}", c.0));
    }
}

/// Whether the point (x, y) lies on the table top.
pub fn on_table(table: &TableSpec, x: f64, y: f64) -> bool {
    let (a, b) = (table.length / 2.0, table.width / 2.0);
    match table.shape {
        TableShape::Rectangular => x.abs() <= a + 1e-9 && y.abs() <= b + 1e-9,
        TableShape::Circular => {
            let r = a.min(b);
            x * x + y * y <= r * r + 1e-9
        }
        TableShape::Elliptic => (x / a).powi(2) + (y / b).powi(2) <= 1.0 + 1e-9,
    }
}

/// Ordered list of problems; empty means the scene is valid.
pub fn validate_scene(scene: &ResolvedScene) -> Vec<Violation> {
    let mut out = Vec::new();
    let s = &scene.setup;
    check_positive(&mut out, "table.length", s.table.length);
    check_positive(&mut out, "table.width", s.table.width);
    check_positive(&mut out, "table.height", s.table.height);
    check_color(&mut out, "table.material.color", &s.table.material.color);
    check_color(&mut out, "floor.color", &s.floor.color);
    check_color(&mut out, "background.color", &s.background.color);
    if s.background.use_hdri {
        push(&mut out, "background.use_hdri", "unsupported in primary backend");
    }
    check_positive(&mut out, "camera.distance", s.camera.distance);
    if !(s.camera.angle > 0.0 && s.camera.angle <= 90.0) {
        push(&mut out, "camera.angle", format!("elevation must lie in (0, 90], got {}", s.camera.angle));
    }
    if s.resolution.width < 16 || s.resolution.height < 16 {
        push(&mut out, "resolution", format!("at least 16×16 pixels required, got {}×{}", s.resolution.width, s.resolution.height));
    }
    if s.render.supersample == 0 {
        push(&mut out, "render.supersample", "must be at least 1");
    }
    check_positive(&mut out, "lighting.multiplier", s.lighting.multiplier);
    if let Some(f) = scene.noise.blur_fstop {
        check_positive(&mut out, "noise.blur", f);
    }
    if let Some(m) = scene.noise.lighting {
        check_positive(&mut out, "noise.lighting", m);
    }
    match &scene.game {
        GameScene::Chess(c) => crate::chess::validate_layout(c, &s.table, &mut out),
        GameScene::Poker(p) => crate::poker::validate_layout(p, &mut out),
    }
    out
}

pub(crate) fn push_violation(out: &mut Vec<Violation>, path: &str, message: impl Into<String>) {
    push(out, path, message);
}

pub(crate) fn check_color_violation(out: &mut Vec<Violation>, path: &str, c: &Rgba) {
    check_color(out, path, c);
}

/// Serialize a resolved scene as a scene-spec JSON document.
pub fn export_scene_spec(scene: &ResolvedScene) -> Result<String, serde_json::Error> {
    serde_json::to_string_pretty(scene)
}

pub fn import_scene_spec(text: &str) -> Result<ResolvedScene, serde_json::Error> {
    serde_json::from_str(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn default_scene() -> ResolvedScene {
        resolve_presets(&SceneConfig::default(), 1).unwrap()
    }

    #[test]
    fn resolution_presets() {
        let r = |p: &str| resolve_resolution(&ResolutionSpec { preset: Some(p.into()), ..Default::default() }).unwrap();
        assert_eq!(r("high"), Resolution { width: 1920, height: 1080 });
        assert_eq!(r("medium"), Resolution { width: 1280, height: 720 });
        assert_eq!(r("low"), Resolution { width: 640, height: 480 });
        let half = ResolutionSpec { resolution_percentage: 50.0, ..Default::default() };
        assert_eq!(resolve_resolution(&half).unwrap(), Resolution { width: 960, height: 540 });
    }

    #[test]
    fn blur_presets_and_unknown_names() {
        assert_eq!(resolve_blur(&Setting::preset("none")).unwrap(), None);
        assert_eq!(resolve_blur(&Setting::preset("very_low")).unwrap(), Some(9.0));
        assert_eq!(resolve_blur(&Setting::preset("very_high")).unwrap(), Some(0.5));
        assert_eq!(resolve_blur(&Setting::Value(3.3)).unwrap(), Some(3.3));
        match resolve_blur(&Setting::preset("extreme")) {
            Err(SceneError::UnknownPreset { valid, .. }) => assert!(valid.contains("very_high")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn lighting_noise_bases() {
        let noise = resolve_noise(&NoiseConfig { lighting: Some(Setting::preset("very_low")), ..Default::default() }).unwrap();
        let l = resolve_lighting(&LightingSpec::default(), &noise).unwrap();
        assert!((l.key_light_power - 120.0).abs() < 1e-12);
        assert!((l.fill_light_power - 60.0).abs() < 1e-12);
        assert!((l.back_light_power - 90.0).abs() < 1e-12);
        let plain = resolve_lighting(&LightingSpec::default(), &ResolvedNoise::default()).unwrap();
        assert_eq!((plain.key_light_power, plain.fill_light_power), (300.0, 50.0));
    }

    #[test]
    fn preset_tables_are_injective() {
        for (name, v) in DISTANCE_PRESETS {
            assert_eq!(preset_name(&DISTANCE_PRESETS, &v), Some(name));
        }
        for (name, v) in BLUR_PRESETS {
            assert_eq!(preset_name(&BLUR_PRESETS, &v), Some(name));
        }
        for (name, v) in LIGHTING_PRESETS {
            assert_eq!(preset_name(&LIGHTING_PRESETS, &v), Some(name));
        }
        assert_eq!(preset_name(&DISTANCE_PRESETS, &4.0), None);
    }

    #[test]
    fn default_scene_is_valid() {
        assert!(validate_scene(&default_scene()).is_empty());
    }

    #[test]
    fn negative_table_width_is_reported() {
        let mut scene = default_scene();
        scene.setup.table.width = -1.0;
        let v = validate_scene(&scene);
        assert!(v.iter().any(|x| x.path == "table.width"));
        assert_eq!(v.iter().filter(|x| x.path == "table.width").count(), 1);
    }

    #[test]
    fn board_must_fit_on_table() {
        let mut scene = default_scene();
        scene.setup.table.length = 0.5;
        scene.setup.table.width = 0.5;
        let v = validate_scene(&scene);
        assert!(v.iter().any(|x| x.path == "chess.board" && x.message.contains("fit")), "{v:?}");
    }

    #[test]
    fn hdri_rejected() {
        let mut scene = default_scene();
        scene.setup.background.use_hdri = true;
        let v = validate_scene(&scene);
        assert!(v.iter().any(|x| x.message == "unsupported in primary backend"));
    }

    #[test]
    fn setup_resolution_is_idempotent() {
        let mut cfg = SetupConfig::default();
        cfg.camera.distance = Setting::preset("far");
        cfg.lighting.lighting = Setting::preset("high");
        let noise = NoiseConfig { blur: Setting::preset("medium"), ..Default::default() };
        let (a, na) = resolve_setup(&cfg, &noise, 3).unwrap();
        let (b, nb) = resolve_setup(&a.to_config(), &na.to_config(), 3).unwrap();
        assert_eq!(a, b);
        assert_eq!(na, nb);
    }

    #[test]
    fn named_colors_and_channel_lists() {
        let c: Rgba = serde_json::from_str("\"light wood\"").unwrap();
        assert_eq!(c, Rgba::new(0.8, 0.7, 0.6, 1.0));
        let c: Rgba = serde_json::from_str("[0.1, 0.2, 0.3]").unwrap();
        assert_eq!(c, Rgba::new(0.1, 0.2, 0.3, 1.0));
        assert!(serde_json::from_str::<Rgba>("\"mauve-ish\"").is_err());
    }

    #[test]
    fn assignments_land_in_sections() {
        let mut a = BTreeMap::new();
        a.insert("noise.blur".to_string(), Value::from("medium"));
        a.insert("camera.distance".to_string(), Value::from("far"));
        a.insert("resolution".to_string(), Value::from("low"));
        let cfg = SceneConfig::from_assignments(GameKind::Chess, None, &a).unwrap();
        assert_eq!(cfg.noise.blur, Setting::preset("medium"));
        assert_eq!(cfg.setup.camera.distance, Setting::preset("far"));
        assert_eq!(cfg.setup.resolution.preset.as_deref(), Some("low"));
        assert!(cfg.chess.is_some());

        let mut bad = BTreeMap::new();
        bad.insert("noise.blurr".to_string(), Value::from("medium"));
        assert!(SceneConfig::from_assignments(GameKind::Chess, None, &bad).is_err());
    }
}
