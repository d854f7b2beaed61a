//! Deterministic raster backend: project a resolved scene into flat
//! primitives, fill them, then apply image-space noise.
//!
//! Layers, back to front: floor and table (0), board frame (1), squares (2),
//! flat cards ordered by height (3), upright pieces and chip piles ordered by
//! depth (4).

pub mod camera;
pub mod glyphs;
pub mod noise;
pub mod raster;
pub mod texture;

use thiserror::Error;

use crate::chess::ChessLayout;
use crate::poker::{ChipPile, PlacedCard, PokerLayout};
use crate::scene::{GameScene, ResolvedScene, Rgba, TableShape, TableSpec};
use crate::seed::sub_seed;

pub use camera::{CameraPose, Projector, VFOV_DEG};
pub use noise::{apply_noise, blur_sigma, high_frequency_energy};
pub use raster::{rasterize, Paint, RasterImage, RasterParams, ScenePrimitive, ShapeKind};

use camera::{add, clip_project, scale, Vec3};
use glyphs::Contour;
use raster::{sort_primitives, TableTexturePaint};
use texture::TextureParams;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("degenerate camera: {0}")]
    DegenerateCamera(String),
    #[error("cannot rasterize a {width}x{height} image")]
    ZeroArea { width: u32, height: u32 },
    #[error("the raster backend cannot render a scene configured for `{0}`")]
    Backend(String),
    #[error("png encoding failed: {0}")]
    Png(String),
}

/// Azimuth of the default viewpoint per game, degrees.
pub fn front_azimuth(game: &GameScene) -> f64 {
    match game {
        GameScene::Chess(_) => 0.0,
        GameScene::Poker(_) => -90.0,
    }
}

pub fn look_at(scene: &ResolvedScene) -> Vec3 {
    match &scene.game {
        GameScene::Chess(c) => {
            let l = c.board.spec.location;
            [l[0], l[1], c.board.surface_z()]
        }
        GameScene::Poker(_) => [0.0, 0.0, scene.setup.table.height],
    }
}

pub fn camera_pose(scene: &ResolvedScene) -> Result<CameraPose, RenderError> {
    CameraPose::from_settings(&scene.setup.camera, look_at(scene), front_azimuth(&scene.game))
}

fn convex_hull(mut pts: Vec<[f64; 2]>) -> Contour {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let turn = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && turn(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 0.0 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && turn(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 0.0 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

struct Builder<'a> {
    pose: &'a CameraPose,
    proj: Projector,
    shade: f64,
    prims: Vec<ScenePrimitive>,
}

struct Style {
    shape: ShapeKind,
    layer: u8,
    order: f64,
    depth: f64,
    outline: Option<[u8; 4]>,
    object: Option<String>,
}

impl Builder<'_> {
    fn color(&self, c: &Rgba) -> [u8; 4] {
        c.scaled(self.shade).to_u8()
    }

    fn project_world(&self, pts: &[Vec3]) -> Contour {
        let cam: Vec<Vec3> = pts.iter().map(|&p| self.pose.to_camera(p)).collect();
        clip_project(&cam, &self.proj)
    }

    fn push(&mut self, contours: Vec<Contour>, fill: Paint, st: &Style) {
        let contours: Vec<Contour> = contours.into_iter().filter(|c| c.len() >= 3).collect();
        if contours.is_empty() {
            return;
        }
        let seq = self.prims.len() as u32;
        self.prims.push(ScenePrimitive {
            shape: st.shape,
            contours,
            layer: st.layer,
            depth: st.depth,
            order: st.order,
            seq,
            fill,
            outline: st.outline,
            object: st.object.clone(),
        });
    }

    /// Flat world polygon.
    fn flat(&mut self, pts: &[Vec3], fill: Paint, st: &Style) {
        let c = self.project_world(pts);
        self.push(vec![c], fill, st);
    }

    /// Silhouette of a slab: hull of a footprint at two heights.
    fn slab(&mut self, footprint: &[[f64; 2]], z0: f64, z1: f64, fill: Paint, st: &Style) {
        let mut pts = Vec::with_capacity(2 * footprint.len());
        for &z in &[z0, z1] {
            let ring: Vec<Vec3> = footprint.iter().map(|p| [p[0], p[1], z]).collect();
            let cam: Vec<Vec3> = ring.iter().map(|&p| self.pose.to_camera(p)).collect();
            if cam.iter().any(|c| c[2] < camera::NEAR) {
                return;
            }
            pts.extend(cam.iter().map(|&c| self.proj.project(c)));
        }
        self.push(vec![convex_hull(pts)], fill, st);
    }
}

fn table_footprint(t: &TableSpec) -> Vec<[f64; 2]> {
    let (a, b) = (t.length / 2.0, t.width / 2.0);
    match t.shape {
        TableShape::Rectangular => vec![[-a, -b], [a, -b], [a, b], [-a, b]],
        TableShape::Circular => glyphs::ellipse(0.0, 0.0, a.min(b), a.min(b), 64),
        TableShape::Elliptic => glyphs::ellipse(0.0, 0.0, a, b, 64),
    }
}

fn contrast(c: &Rgba) -> [u8; 4] {
    if c.luma() > 0.5 {
        [25, 25, 25, 255]
    } else {
        [215, 215, 215, 255]
    }
}

fn environment(b: &mut Builder, scene: &ResolvedScene) {
    let floor = b.color(&scene.setup.floor.color);
    let st = |order: f64| Style { shape: ShapeKind::Polygon, layer: 0, order, depth: 0.0, outline: None, object: None };
    let e = 30.0;
    b.flat(&[[-e, -e, 0.0], [e, -e, 0.0], [e, e, 0.0], [-e, e, 0.0]], Paint::Solid(floor), &st(0.0));
    let t = &scene.setup.table;
    let fp = table_footprint(t);
    let side = b.color(&t.material.color.scaled(0.6));
    b.slab(&fp, t.height - 0.05, t.height, Paint::Solid(side), &st(1.0));
    let c = t.material.color.scaled(b.shade).0;
    let paint = Paint::Table(Box::new(TableTexturePaint {
        pose: b.pose.clone(),
        projector: b.proj,
        plane_z: t.height,
        params: TextureParams {
            base: [c[0], c[1], c[2]],
            level: scene.noise.table_texture,
            kind: t.texture,
            seed: sub_seed(scene.derived_seed, "table-texture"),
        },
    }));
    let top: Vec<Vec3> = fp.iter().map(|p| [p[0], p[1], t.height]).collect();
    b.flat(&top, paint, &st(2.0));
}

fn chess(b: &mut Builder, layout: &ChessLayout) {
    let spec = &layout.board.spec;
    let [x0, y0, z0] = spec.location;
    let zs = layout.board.surface_z();
    let (a, w) = (spec.length / 2.0, spec.width / 2.0);
    let frame = [[x0 - a, y0 - w], [x0 + a, y0 - w], [x0 + a, y0 + w], [x0 - a, y0 + w]];
    let st = |layer: u8, order: f64| Style { shape: ShapeKind::Polygon, layer, order, depth: 0.0, outline: None, object: None };
    let side = b.color(&spec.board_material.color.scaled(0.7));
    b.slab(&frame, z0, zs, Paint::Solid(side), &st(1, 0.0));
    let top: Vec<Vec3> = frame.iter().map(|p| [p[0], p[1], zs]).collect();
    let fc = b.color(&spec.board_material.color);
    b.flat(&top, Paint::Solid(fc), &st(1, 1.0));
    let [px, py] = [layout.board.pitch[0] / 2.0, layout.board.pitch[1] / 2.0];
    for cell in &layout.board.cells {
        let [cx, cy, cz] = cell.center;
        let m = if cell.dark { &spec.black_material } else { &spec.white_material };
        let fill = b.color(&m.color);
        b.flat(
            &[[cx - px, cy - py, cz], [cx + px, cy - py, cz], [cx + px, cy + py, cz], [cx - px, cy + py, cz]],
            Paint::Solid(fill),
            &st(2, 0.0),
        );
    }
    for (i, piece) in layout.pieces.iter().enumerate() {
        let base = piece.world_location;
        let depth = b.pose.depth(base);
        let (right, up) = (b.pose.right, b.pose.up);
        let contours: Vec<Vec<Vec3>> = glyphs::piece_glyph(piece.piece_type)
            .iter()
            .map(|c| {
                c.iter()
                    .map(|g| add(base, add(scale(right, g[0] * piece.scale), scale(up, g[1] * piece.scale))))
                    .collect()
            })
            .collect();
        let projected = contours.iter().map(|c| b.project_world(c)).collect();
        let fill = b.color(&piece.material.color);
        b.push(
            projected,
            Paint::Solid(fill),
            &Style {
                shape: ShapeKind::Glyph,
                layer: 4,
                order: -depth,
                depth,
                outline: Some(contrast(&piece.material.color)),
                object: Some(format!("piece/{i}")),
            },
        );
    }
}

const CARD_FACE: Rgba = Rgba::new(0.96, 0.96, 0.94, 1.0);
const CARD_BACK: Rgba = Rgba::new(0.15, 0.25, 0.6, 1.0);
const CARD_BACK_INNER: Rgba = Rgba::new(0.25, 0.4, 0.8, 1.0);
const CARD_RED: Rgba = Rgba::new(0.8, 0.1, 0.1, 1.0);
const CARD_BLACK: Rgba = Rgba::new(0.08, 0.08, 0.08, 1.0);

fn rounded_rect(hw: f64, hh: f64, r: f64) -> Contour {
    let mut out = Vec::with_capacity(20);
    let corners = [(hw - r, hh - r, 0.0), (-hw + r, hh - r, 90.0), (-hw + r, -hh + r, 180.0), (hw - r, -hh + r, 270.0)];
    for (cx, cy, start) in corners {
        for k in 0..=4 {
            let t = (start + 22.5 * f64::from(k)).to_radians();
            out.push([cx + r * libm::cos(t), cy + r * libm::sin(t)]);
        }
    }
    out
}

fn card(b: &mut Builder, c: &PlacedCard) {
    let [w, h] = c.size;
    let [x, y, z] = c.position;
    let yaw = c.rotation.to_radians();
    let (cs, sn) = (libm::cos(yaw), libm::sin(yaw));
    let to_world = |p: &[f64; 2]| -> Vec3 { [x + p[0] * cs - p[1] * sn, y + p[0] * sn + p[1] * cs, z] };
    let depth = b.pose.depth([x, y, z]);
    let st = |shape: ShapeKind, outline: Option<[u8; 4]>| Style {
        shape,
        layer: 3,
        order: z,
        depth,
        outline,
        object: Some(format!("card/{}", c.card)),
    };
    let local = |b: &mut Builder, contours: Vec<Contour>, color: &Rgba, shape: ShapeKind, outline: Option<[u8; 4]>| {
        let projected = contours
            .iter()
            .map(|ct| b.project_world(&ct.iter().map(to_world).collect::<Vec<_>>()))
            .collect();
        let fill = b.color(color);
        b.push(projected, Paint::Solid(fill), &st(shape, outline));
    };
    let body = rounded_rect(w / 2.0, h / 2.0, 0.1 * w);
    if !c.face_up {
        local(b, vec![body], &CARD_BACK, ShapeKind::RoundedRect, Some([230, 230, 230, 255]));
        local(b, vec![rounded_rect(0.4 * w, h / 2.0 - 0.1 * w, 0.05 * w)], &CARD_BACK_INNER, ShapeKind::RoundedRect, None);
        return;
    }
    local(b, vec![body], &CARD_FACE, ShapeKind::RoundedRect, Some([90, 90, 90, 255]));
    let ink = if c.card.suit.is_red() { CARD_RED } else { CARD_BLACK };
    // rank in the upper half, y down in text space
    let rank = c.card.rank_str();
    let cell = 0.12 * w;
    let text_w = (4 * rank.len() - 1) as f64 * cell;
    let (ox, oy) = (-text_w / 2.0, h / 2.0 - 0.08 * w);
    let text: Vec<Contour> = glyphs::text_cells(rank)
        .into_iter()
        .map(|ct| ct.into_iter().map(|p| [ox + p[0] * cell, oy - p[1] * cell]).collect())
        .collect();
    local(b, text, &ink, ShapeKind::Glyph, None);
    let pip_size = 0.5 * w;
    let pip: Vec<Contour> = glyphs::suit_pip(c.card.suit)
        .into_iter()
        .map(|ct| ct.into_iter().map(|p| [p[0] * pip_size, -0.25 * h + p[1] * pip_size]).collect())
        .collect();
    local(b, pip, &ink, ShapeKind::Glyph, None);
}

fn chip_pile(b: &mut Builder, pile: &ChipPile, object: String) {
    let depth = b.pose.depth(pile.position);
    let st = Style { shape: ShapeKind::Disk, layer: 4, order: -depth, depth, outline: None, object: Some(object) };
    let side = pile.color.scaled(0.6);
    let ring = glyphs::ellipse(0.0, 0.0, pile.radius, pile.radius, 24);
    for (i, off) in pile.offsets.iter().enumerate() {
        let [cx, cy] = [pile.position[0] + off[0], pile.position[1] + off[1]];
        let z0 = pile.position[2] + i as f64 * pile.thickness;
        let fp: Vec<[f64; 2]> = ring.iter().map(|p| [cx + p[0], cy + p[1]]).collect();
        let sc = b.color(&side);
        b.slab(&fp, z0, z0 + pile.thickness, Paint::Solid(sc), &st);
        let top: Vec<Vec3> = fp.iter().map(|p| [p[0], p[1], z0 + pile.thickness]).collect();
        let tc = b.color(&pile.color);
        b.flat(&top, Paint::Solid(tc), &st);
    }
}

fn poker(b: &mut Builder, layout: &PokerLayout) {
    for c in layout.all_cards() {
        card(b, c);
    }
    for p in &layout.players {
        for (k, pile) in p.chips.iter().enumerate() {
            chip_pile(b, pile, format!("chips/{}/{k}", p.player_id));
        }
    }
}

/// Project every visible object, sorted in painter order.
pub fn project_scene(scene: &ResolvedScene) -> Result<Vec<ScenePrimitive>, RenderError> {
    let pose = camera_pose(scene)?;
    let res = scene.setup.resolution;
    if res.width == 0 || res.height == 0 {
        return Err(RenderError::ZeroArea { width: res.width, height: res.height });
    }
    let shade = if scene.noise.lighting.is_some() { 1.0 } else { scene.setup.lighting.multiplier };
    let mut b = Builder { pose: &pose, proj: Projector::new(res.width, res.height, pose.vfov_deg), shade, prims: Vec::new() };
    environment(&mut b, scene);
    match &scene.game {
        GameScene::Chess(c) => chess(&mut b, c),
        GameScene::Poker(p) => poker(&mut b, p),
    }
    let mut prims = b.prims;
    sort_primitives(&mut prims);
    Ok(prims)
}

/// Rasterize without image-space noise.
pub fn render_clean(scene: &ResolvedScene) -> Result<RasterImage, RenderError> {
    if scene.setup.render.backend != crate::scene::Backend::Raster {
        return Err(RenderError::Backend("blender".into()));
    }
    let prims = project_scene(scene)?;
    let res = scene.setup.resolution;
    let shade = if scene.noise.lighting.is_some() { 1.0 } else { scene.setup.lighting.multiplier };
    rasterize(
        &prims,
        &RasterParams {
            width: res.width,
            height: res.height,
            supersample: scene.setup.render.supersample,
            background: scene.setup.background.color.scaled(shade).to_u8(),
            outline_px: (f64::from(res.height) / 480.0).max(1.0),
        },
    )
}

pub fn render_scene(scene: &ResolvedScene) -> Result<RasterImage, RenderError> {
    Ok(apply_noise(&render_clean(scene)?, &scene.noise))
}

/// RGBA8, non-interlaced PNG bytes.
pub fn encode_png(img: &RasterImage) -> Result<Vec<u8>, RenderError> {
    let mut out = Vec::new();
    {
        let mut enc = png::Encoder::new(&mut out, img.width, img.height);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(|e| RenderError::Png(e.to_string()))?;
        w.write_image_data(&img.pixels).map_err(|e| RenderError::Png(e.to_string()))?;
    }
    Ok(out)
}

pub fn decode_png(bytes: &[u8]) -> Result<RasterImage, RenderError> {
    let dec = png::Decoder::new(std::io::Cursor::new(bytes));
    let mut reader = dec.read_info().map_err(|e| RenderError::Png(e.to_string()))?;
    let mut buf = vec![0; reader.output_buffer_size().unwrap_or(0)];
    let info = reader.next_frame(&mut buf).map_err(|e| RenderError::Png(e.to_string()))?;
    if info.color_type != png::ColorType::Rgba || info.bit_depth != png::BitDepth::Eight {
        return Err(RenderError::Png("expected RGBA8".into()));
    }
    buf.truncate(info.buffer_size());
    Ok(RasterImage { width: info.width, height: info.height, pixels: buf })
}
