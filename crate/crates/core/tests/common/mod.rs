//! Shared test support: independent oracles, random inputs, and a helper
//! that runs the real `cluecart serve` process.
#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::Path;
use std::process::{Child, Command, Stdio};

use cluecart::capture::{CameraState, ScreenRect, Vec3};
use cluecart::graph::{ClueCatalog, InterpretationGraph, NodeId, NodeKind, Rect};
use cluecart::model::{Clue, ClueId, ElementType, MediaKind, MediaRef, Tag, TagKind};
use cluecart::retrieval::{ClueLibrary, TagQuery};
use rand::rngs::StdRng;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;

// ---------------------------------------------------------------- retrieval

/// A tag as plain strings, compared by kind and lowercased label.
#[derive(Debug, Clone)]
pub struct PlainTag {
    pub kind: &'static str,
    pub label: String,
}

impl PlainTag {
    fn same(&self, kind: &str, label: &str) -> bool {
        self.kind == kind && self.label.to_lowercase() == label.to_lowercase()
    }

    pub fn qualified(&self) -> String {
        format!("{}:{}", self.kind, self.label)
    }
}

fn plain_tags(clue: &Clue) -> Vec<PlainTag> {
    clue.tags
        .iter()
        .map(|t| PlainTag {
            kind: t.kind().as_str(),
            label: t.label().to_string(),
        })
        .collect()
}

/// Brute-force priority score: the tag at rank r of n contributes n - r.
pub fn oracle_score(tags: &[PlainTag], query: &[PlainTag]) -> u64 {
    let n = query.len() as u64;
    query
        .iter()
        .enumerate()
        .filter(|(_, q)| tags.iter().any(|t| t.same(q.kind, &q.label)))
        .map(|(r, _)| n - r as u64)
        .sum()
}

/// Brute-force search: (id, score) by score desc, time asc, id asc.
pub fn oracle_search(clues: &[Clue], query: &[PlainTag]) -> Vec<(String, u64)> {
    let mut hits: Vec<(u64, i64, String)> = clues
        .iter()
        .map(|c| (oracle_score(&plain_tags(c), query), c.timestamp_ms, c.id.0.clone()))
        .filter(|(s, _, _)| *s > 0)
        .collect();
    hits.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2)));
    hits.into_iter().map(|(s, _, id)| (id, s)).collect()
}

pub fn oracle_related(clues: &[Clue], id: &str) -> Vec<(String, u64)> {
    let src = clues.iter().find(|c| c.id.0 == id).expect("source exists");
    let query = plain_tags(src);
    oracle_search(clues, &query)
        .into_iter()
        .filter(|(cid, _)| cid != id)
        .collect()
}

const DISPLAY: [ElementType; 6] = [
    ElementType::CutScene,
    ElementType::RelatedCharacter,
    ElementType::Environment,
    ElementType::Artifact,
    ElementType::Dialogue,
    ElementType::Text,
];

/// Brute-force grouped listing: ids per element, in display order.
pub fn oracle_sort(clues: &[Clue], query: Option<&[PlainTag]>) -> Vec<Vec<String>> {
    DISPLAY
        .iter()
        .map(|&e| {
            let mut members: Vec<(u64, i64, String)> = clues
                .iter()
                .filter(|c| c.element == e)
                .map(|c| {
                    let s = query.map_or(0, |q| oracle_score(&plain_tags(c), q));
                    (s, c.timestamp_ms, c.id.0.clone())
                })
                .collect();
            match query {
                Some(_) => members.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)).then(a.2.cmp(&b.2))),
                None => members.sort_by(|a, b| a.1.cmp(&b.1).then(a.2.cmp(&b.2))),
            }
            members.into_iter().map(|m| m.2).collect()
        })
        .collect()
}

const KINDS: [TagKind; 4] = [TagKind::Character, TagKind::Location, TagKind::Achievement, TagKind::Custom];
const NAMES: [&str; 10] = [
    "Sly", "Hornet", "Dirtmouth", "Greenpath", "Lore", "Quirrel", "City of Tears", "Falsehood", "Elderbug", "Mask",
];

fn random_case(rng: &mut StdRng, s: &str) -> String {
    match rng.random_range(0..3) {
        0 => s.to_string(),
        1 => s.to_uppercase(),
        _ => s.to_lowercase(),
    }
}

fn random_universe(rng: &mut StdRng, max_tags: usize) -> Vec<PlainTag> {
    let size = rng.random_range(1..=max_tags);
    let mut out: Vec<PlainTag> = Vec::new();
    while out.len() < size {
        let kind = KINDS.choose(rng).unwrap().as_str();
        let label = NAMES.choose(rng).unwrap().to_string();
        if !out.iter().any(|t| t.same(kind, &label)) {
            out.push(PlainTag { kind, label });
        }
    }
    out
}

/// A random store: up to `max_clues` clues over a universe of at most
/// `max_tags` distinct tags, with colliding timestamps and mixed casing.
pub struct RandomStore {
    pub clues: Vec<Clue>,
    pub library: ClueLibrary,
    pub universe: Vec<PlainTag>,
}

pub fn random_store(rng: &mut StdRng, max_clues: usize, max_tags: usize) -> RandomStore {
    let universe = random_universe(rng, max_tags);
    let count = rng.random_range(0..=max_clues);
    let mut clues = Vec::with_capacity(count);
    for i in 0..count {
        let mut tags = Vec::new();
        for t in &universe {
            if rng.random_bool(0.4) {
                let kind: TagKind = t.kind.parse().unwrap();
                tags.push(Tag::new(kind, &random_case(rng, &t.label)).unwrap());
            }
        }
        tags.shuffle(rng);
        clues.push(Clue {
            id: ClueId::new(format!("c{:03}", rng.random_range(0..1000) * 100 + i)),
            media: MediaRef::new(MediaKind::Screenshot, format!("s/{i}.png")).unwrap(),
            timestamp_ms: rng.random_range(0..8),
            tags,
            element: *DISPLAY.choose(rng).unwrap(),
            description: String::new(),
            keywords: vec![],
        });
    }
    let mut library = ClueLibrary::new();
    for c in &clues {
        library.insert(c.clone()).unwrap();
    }
    RandomStore {
        clues,
        library,
        universe,
    }
}

/// A random priority-ordered query; may include tags absent from the store.
pub fn random_query(rng: &mut StdRng, universe: &[PlainTag]) -> Vec<PlainTag> {
    let mut pool: Vec<PlainTag> = universe
        .iter()
        .map(|t| PlainTag {
            kind: t.kind,
            label: random_case(rng, &t.label),
        })
        .collect();
    if rng.random_bool(0.3) {
        pool.push(PlainTag {
            kind: "custom",
            label: "absent-tag".into(),
        });
    }
    pool.shuffle(rng);
    let n = rng.random_range(1..=pool.len());
    pool.truncate(n);
    pool
}

pub fn to_query(tags: &[PlainTag]) -> TagQuery {
    let qualified: Vec<String> = tags.iter().map(PlainTag::qualified).collect();
    TagQuery::parse(qualified.iter().map(String::as_str)).unwrap()
}

// ------------------------------------------------------------------ frustum

fn unit(rng: &mut StdRng) -> Vec3 {
    loop {
        let v = Vec3::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let n = v.norm();
        if n > 0.1 && n <= 1.0 {
            return v / n;
        }
    }
}

pub fn random_camera(rng: &mut StdRng) -> CameraState {
    let forward = unit(rng);
    let mut up = unit(rng);
    up = (up - forward * forward.dot(&up)).normalize();
    let near = rng.random_range(0.05..2.0);
    CameraState {
        position: Vec3::new(
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
            rng.random_range(-10.0..10.0),
        ),
        forward,
        up,
        vfov_deg: rng.random_range(20.0..120.0),
        aspect: rng.random_range(0.5..2.5),
        near,
        far: near + rng.random_range(5.0..60.0),
        ui_rect: ScreenRect {
            min_x: 0.0,
            min_y: 0.0,
            max_x: 1.0,
            max_y: 1.0,
        },
    }
}

/// A sphere placed around the camera so that hits and misses both occur.
pub fn random_sphere(rng: &mut StdRng, cam: &CameraState) -> (Vec3, f64) {
    let dir = if rng.random_bool(0.6) {
        (cam.forward * 2.0 + unit(rng)).normalize()
    } else {
        unit(rng)
    };
    let dist = rng.random_range(0.0..cam.far * 1.3);
    (cam.position + dir * dist, rng.random_range(0.01..5.0))
}

/// Inward plane (unit normal, point on plane) from frustum corners.
struct FacePlane {
    normal: Vec3,
    point: Vec3,
}

impl FacePlane {
    fn dist(&self, p: &Vec3) -> f64 {
        self.normal.dot(&(p - self.point))
    }
}

/// The six faces of the frustum, built from its eight corners.
fn corner_planes(cam: &CameraState) -> Vec<FacePlane> {
    let right = cam.forward.cross(&cam.up);
    let tan_v = (cam.vfov_deg.to_radians() / 2.0).tan();
    let corners = |d: f64| -> [Vec3; 4] {
        let c = cam.position + cam.forward * d;
        let hh = d * tan_v;
        let hw = hh * cam.aspect;
        [
            c - right * hw - cam.up * hh,
            c + right * hw - cam.up * hh,
            c + right * hw + cam.up * hh,
            c - right * hw + cam.up * hh,
        ]
    };
    let n = corners(cam.near);
    let f = corners(cam.far);
    let centroid = n.iter().chain(f.iter()).fold(Vec3::zeros(), |a, p| a + p) / 8.0;
    let faces = [
        [n[0], n[1], n[2]],
        [f[0], f[2], f[1]],
        [n[0], f[0], n[3]],
        [n[1], n[2], f[1]],
        [n[0], n[1], f[0]],
        [n[3], f[3], n[2]],
    ];
    faces
        .iter()
        .map(|[a, b, c]| {
            let mut normal = (b - a).cross(&(c - a)).normalize();
            if normal.dot(&(centroid - a)) < 0.0 {
                normal = -normal;
            }
            FacePlane { normal, point: *a }
        })
        .collect()
}

/// Fibonacci lattice of `n` points on the sphere surface.
pub fn sphere_points(center: &Vec3, radius: f64, n: usize) -> Vec<Vec3> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..n)
        .map(|i| {
            let y = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
            let r = (1.0 - y * y).sqrt();
            let theta = golden * i as f64;
            center + Vec3::new(r * theta.cos(), y, r * theta.sin()) * radius
        })
        .collect()
}

/// Sampling oracle: for every face, some sampled surface point lies on or
/// inside it.
pub fn oracle_visible(cam: &CameraState, center: &Vec3, radius: f64, samples: usize) -> bool {
    let points = sphere_points(center, radius, samples);
    corner_planes(cam)
        .iter()
        .all(|plane| points.iter().any(|p| plane.dist(p) >= 0.0))
}

/// `min over faces of (distance to centre + radius)`; cases within the
/// boundary band of zero are excluded from comparison.
pub fn boundary_margin(cam: &CameraState, center: &Vec3, radius: f64) -> f64 {
    corner_planes(cam)
        .iter()
        .map(|p| p.dist(center) + radius)
        .fold(f64::INFINITY, f64::min)
}

// -------------------------------------------------------------------- graph

/// Applies one random edit; errors are legitimate refusals and ignored.
pub fn random_graph_edit(rng: &mut StdRng, g: &mut InterpretationGraph, catalog: &ClueLibrary, clue_ids: &[ClueId]) {
    let ids: Vec<NodeId> = g.nodes.keys().cloned().collect();
    let pick = |rng: &mut StdRng| ids.choose(rng).cloned();
    let rect = |rng: &mut StdRng| {
        Rect::new(
            rng.random_range(-2000.0..2000.0),
            rng.random_range(-2000.0..2000.0),
            rng.random_range(1.0..400.0),
            rng.random_range(1.0..300.0),
        )
    };
    let op = rng.random_range(0..12);
    let _ = match op {
        0 | 1 if g.nodes.len() < 100 => {
            let kind = match (rng.random_range(0..3), clue_ids.choose(rng)) {
                (0, Some(id)) => NodeKind::Clue { clue_id: id.clone() },
                (1, _) => NodeKind::Context {
                    keyword: "geo".into(),
                    text: "Currency of Hallownest".into(),
                },
                _ => NodeKind::Text {
                    text: format!("note {}", rng.random_range(0..1000)),
                },
            };
            let r = rect(rng);
            g.add_node(kind, r, catalog).map(|_| ())
        }
        2 => match pick(rng) {
            Some(n) => g.remove_node(&n).map(|_| ()),
            None => Ok(()),
        },
        3 => match pick(rng) {
            Some(n) => {
                let r = rect(rng);
                g.move_resize(&n, r)
            }
            None => Ok(()),
        },
        4 => match pick(rng) {
            Some(n) => g.translate(&n, rng.random_range(-50.0..50.0), rng.random_range(-50.0..50.0)),
            None => Ok(()),
        },
        5 | 6 if g.edges.len() < 200 => match (pick(rng), pick(rng)) {
            (Some(a), Some(b)) => {
                let ann = rng.random_bool(0.5).then(|| "leads to".to_string());
                g.link(&a, &b, ann).map(|_| ())
            }
            _ => Ok(()),
        },
        7 => match g.edges.keys().cloned().collect::<Vec<_>>().choose(rng) {
            Some(e) if rng.random_bool(0.5) => g.annotate_edge(e, Some("contradicts".into())),
            Some(e) => g.remove_edge(e).map(|_| ()),
            None => Ok(()),
        },
        8 if g.nodes.len() < 100 => {
            let k = rng.random_range(1..=3.min(ids.len().max(1)));
            let members: Vec<NodeId> = ids.choose_multiple(rng, k).cloned().collect();
            g.group(&members).map(|_| ())
        }
        9 => {
            let groups: Vec<NodeId> = g
                .nodes
                .values()
                .filter(|n| matches!(n.kind, NodeKind::Group { .. }))
                .map(|n| n.id.clone())
                .collect();
            match (groups.choose(rng), pick(rng)) {
                (Some(gr), Some(m)) if rng.random_bool(0.7) => g.add_to_group(gr, &[m]),
                (Some(gr), _) => g.ungroup(gr).map(|_| ()),
                _ => Ok(()),
            }
        }
        10 => {
            let clue_nodes: Vec<NodeId> = g
                .nodes
                .values()
                .filter(|n| matches!(n.kind, NodeKind::Clue { .. }))
                .map(|n| n.id.clone())
                .collect();
            match clue_nodes.choose(rng) {
                Some(n) if g.nodes.len() < 100 => {
                    let (kws, _) = g.expand_node(n, catalog).unwrap();
                    match kws.first() {
                        Some(k) => g.insert_context_node(n, k, format!("about {k}"), catalog).map(|_| ()),
                        None => Ok(()),
                    }
                }
                _ => Ok(()),
            }
        }
        _ => Ok(()),
    };
}

/// Clue library used as the catalog for random graphs.
pub fn graph_catalog() -> (ClueLibrary, Vec<ClueId>) {
    let mut lib = ClueLibrary::new();
    let mut ids = Vec::new();
    for i in 0..12 {
        let id = ClueId::new(format!("evt-{i:04}"));
        lib.insert(Clue {
            id: id.clone(),
            media: MediaRef::new(MediaKind::Screenshot, format!("screenshots/{}.png", id.0)).unwrap(),
            timestamp_ms: i,
            tags: vec![Tag::new(TagKind::Character, NAMES[i as usize % NAMES.len()]).unwrap()],
            element: ElementType::Text,
            description: String::new(),
            keywords: if i % 3 == 0 { vec![] } else { vec!["geo".into(), "mask".into()] },
        })
        .unwrap();
        ids.push(id);
    }
    (lib, ids)
}

pub fn assert_catalog_trait(lib: &ClueLibrary) -> &dyn ClueCatalog {
    lib
}

// ------------------------------------------------------------------ process

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_cluecart")
}

/// `cluecart` run to completion with a clean environment for the tool's
/// own variables.
pub fn run_cli(args: &[&str]) -> std::process::Output {
    Command::new(bin())
        .args(args)
        .env_remove("CLUECART_DATA_DIR")
        .env_remove("CLUECART_CLASSIFIER_MODE")
        .output()
        .expect("binary runs")
}

/// A running `cluecart serve` process on an ephemeral port.
pub struct Server {
    pub child: Child,
    pub base: String,
}

impl Server {
    pub fn start(data_dir: &Path) -> Server {
        let mut child = Command::new(bin())
            .args(["--data-dir", data_dir.to_str().unwrap(), "serve", "--listen", "127.0.0.1:0"])
            .env_remove("CLUECART_CLASSIFIER_MODE")
            .stdout(Stdio::piped())
            .stderr(Stdio::inherit())
            .spawn()
            .expect("server starts");
        let stdout = child.stdout.take().unwrap();
        let mut line = String::new();
        BufReader::new(stdout).read_line(&mut line).unwrap();
        let base = line
            .trim()
            .strip_prefix("listening on ")
            .unwrap_or_else(|| panic!("unexpected banner `{line}`"))
            .to_string();
        Server { child, base }
    }

    pub fn url(&self, path: &str) -> String {
        format!("{}/api/v1{}", self.base, path)
    }

    /// SIGKILL, no shutdown hooks.
    pub fn kill(mut self) {
        self.child.kill().unwrap();
        self.child.wait().unwrap();
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

pub fn fixture_script() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures/hollow_knight.json")
}
