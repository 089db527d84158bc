#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vtd_core::label::{
    rle_encode, write_flow, write_label_file, BinaryMask, Box2D, FlowField, Frame, FrameSet, Joint, Keypoints, Label,
    Poly2D, Scene, Weather, NUM_JOINTS,
};
use vtd_core::EvalTask;

pub const SIDE: usize = 16;

pub fn vtd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vtd"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

pub fn rect_mask(x: usize, y: usize, w: usize, h: usize) -> BinaryMask {
    BinaryMask::from_fn(SIDE, SIDE, |r, c| (y..y + h).contains(&r) && (x..x + w).contains(&c))
}

fn jitter(rng: &mut ChaCha8Rng, v: usize, max: usize) -> usize {
    (v as i64 + rng.gen_range(-1..=1)).clamp(0, max as i64) as usize
}

struct Obj {
    id: usize,
    class: &'static str,
    x: usize,
    y: usize,
    w: usize,
    h: usize,
}

fn objects(rng: &mut ChaCha8Rng, n: usize) -> Vec<Obj> {
    (0..n)
        .map(|id| Obj {
            id,
            class: ["car", "pedestrian", "bus"][rng.gen_range(0..3)],
            x: rng.gen_range(0..10),
            y: rng.gen_range(0..10),
            w: rng.gen_range(2..6),
            h: rng.gen_range(2..6),
        })
        .collect()
}

fn skeleton(o: &Obj, rng: &mut ChaCha8Rng, pred: bool) -> Keypoints {
    let joints = (0..NUM_JOINTS)
        .map(|i| {
            let dx = if pred { rng.gen_range(-0.5..0.5) } else { 0.0 };
            Joint {
                x: o.x as f64 + (i % 3) as f64 + dx,
                y: o.y as f64 + (i / 3) as f64 * 0.5,
                score: if pred { rng.gen_range(0.1..1.0) } else { 1.0 },
            }
        })
        .collect();
    Keypoints::new(joints).unwrap()
}

/// Instance-level frames for a task; predictions are jittered copies plus
/// some false positives, with random scores.
fn instance_frames(task: EvalTask, rng: &mut ChaCha8Rng, pred: bool) -> FrameSet {
    let tracking = matches!(
        task,
        EvalTask::Mot | EvalTask::Mots | EvalTask::MotAp | EvalTask::MotAssa | EvalTask::MotsAp | EvalTask::MotsAssa
    );
    let masks = matches!(
        task,
        EvalTask::Ins | EvalTask::Mots | EvalTask::MotsAp | EvalTask::MotsAssa
    );
    let mut base = ChaCha8Rng::seed_from_u64(99);
    let objs = objects(&mut base, 6);
    let frames = (0..6u32)
        .map(|i| {
            let mut labels = Vec::new();
            for o in &objs {
                if !base.gen_bool(0.8) && !tracking {
                    continue;
                }
                let (x, y) = if pred {
                    (jitter(rng, o.x, 10), jitter(rng, o.y, 10))
                } else {
                    (o.x, o.y)
                };
                let id = if pred && tracking && i >= 3 && o.id % 2 == 0 {
                    o.id + 100
                } else {
                    o.id
                };
                let class = if task == EvalTask::Pose { "pedestrian" } else { o.class };
                let mut l = Label::new(id.to_string(), class)
                    .with_box(Box2D::new(x as f64, y as f64, (x + o.w) as f64, (y + o.h) as f64).unwrap());
                if masks {
                    l = l.with_rle(rle_encode(&rect_mask(x, y, o.w, o.h)));
                }
                if task == EvalTask::Pose {
                    l = l.with_graph(skeleton(o, rng, pred));
                }
                if pred {
                    l = l.with_score((rng.gen_range(1..10) as f64) / 10.0);
                }
                labels.push(l);
            }
            if pred && rng.gen_bool(0.5) {
                let mut l = Label::new("900", "car").with_box(Box2D::new(12.0, 12.0, 15.0, 15.0).unwrap());
                if masks {
                    l = l.with_rle(rle_encode(&rect_mask(12, 12, 3, 3)));
                }
                if task == EvalTask::Pose {
                    l.category = "pedestrian".into();
                    l = l.with_graph(skeleton(&objs[0], rng, true));
                }
                labels.push(l.with_score(0.35));
            }
            let f = Frame::new(format!("v-{i}.jpg")).with_labels(labels);
            if tracking {
                f.in_video("v", i)
            } else {
                f
            }
        })
        .collect();
    FrameSet::new(frames)
}

fn dense_frames(task: EvalTask, rng: &mut ChaCha8Rng, pred: bool) -> FrameSet {
    let classes: &[&str] = match task {
        EvalTask::Sem => &["road", "car", "sky", "building"],
        _ => &["direct", "alternative", "background"],
    };
    let frames = (0..4)
        .map(|i| {
            // horizontal bands, one per class, with jittered borders in predictions
            let mut edges: Vec<usize> = (1..classes.len()).map(|k| k * SIDE / classes.len()).collect();
            if pred {
                for e in &mut edges {
                    *e = jitter(rng, *e, SIDE);
                }
            }
            let labels = classes
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let lo = if k == 0 { 0 } else { edges[k - 1] };
                    let hi = edges.get(k).copied().unwrap_or(SIDE);
                    let m = BinaryMask::from_fn(SIDE, SIDE, |r, _| (lo..hi).contains(&r));
                    Label::new(k.to_string(), *c).with_rle(rle_encode(&m))
                })
                .collect();
            Frame::new(format!("d-{i}.jpg")).with_labels(labels)
        })
        .collect();
    FrameSet::new(frames)
}

fn lane_frames(rng: &mut ChaCha8Rng, pred: bool) -> FrameSet {
    let frames = (0..2)
        .map(|i| {
            let labels = (0..3)
                .map(|k| {
                    let x = 200.0 + 300.0 * k as f64 + if pred { rng.gen_range(-4.0..4.0) } else { 0.0 };
                    Label::new(k.to_string(), "single white")
                        .with_poly(Poly2D::polyline(vec![(x, 700.0), (x + 40.0, 100.0)], false))
                        .with_attribute("laneDirection", "parallel")
                        .with_attribute("laneStyle", "solid")
                })
                .collect();
            Frame::new(format!("l-{i}.jpg")).with_labels(labels)
        })
        .collect();
    FrameSet::new(frames)
}

fn tag_frames(rng: &mut ChaCha8Rng, pred: bool) -> FrameSet {
    let frames = (0..20)
        .map(|i| {
            let mut f = Frame::new(format!("t-{i:02}.jpg"));
            let (w, s) = if pred {
                (rng.gen_range(0..6), rng.gen_range(0..6))
            } else {
                (i % 6, (i / 2) % 6)
            };
            f.attributes.weather = Some(Weather::ALL[w]);
            f.attributes.scene = Some(Scene::ALL[s]);
            f
        })
        .collect();
    FrameSet::new(frames)
}

/// Write a ground-truth / prediction pair for `task` into `dir`. For flow
/// the prediction is a directory of `.flo` files.
pub fn fixture(dir: &Path, task: EvalTask, seed: u64) -> (PathBuf, PathBuf) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (gt, pred) = match task {
        EvalTask::Tag => (tag_frames(&mut rng, false), Some(tag_frames(&mut rng, true))),
        EvalTask::Sem | EvalTask::Drivable => (
            dense_frames(task, &mut rng, false),
            Some(dense_frames(task, &mut rng, true)),
        ),
        EvalTask::Lane => (lane_frames(&mut rng, false), Some(lane_frames(&mut rng, true))),
        EvalTask::Flow => (instance_frames(EvalTask::Mots, &mut rng, false), None),
        _ => (
            instance_frames(task, &mut rng, false),
            Some(instance_frames(task, &mut rng, true)),
        ),
    };
    let key = task.key();
    let gt_path = write(dir, &format!("{key}-gt.json"), &write_label_file(&gt));
    let pred_path = match pred {
        Some(p) => write(dir, &format!("{key}-pred.json"), &write_label_file(&p)),
        None => {
            let flow_dir = dir.join(format!("{key}-flow"));
            std::fs::create_dir_all(&flow_dir).unwrap();
            for i in 0..5 {
                let uv = (0..SIDE * SIDE)
                    .map(|_| [rng.gen_range(-1.5..1.5), rng.gen_range(-1.5..1.5)])
                    .collect();
                let flow = FlowField::new(SIDE, SIDE, uv).unwrap();
                std::fs::write(flow_dir.join(format!("v-{i}.flo")), write_flow(&flow)).unwrap();
            }
            flow_dir
        }
    };
    (gt_path, pred_path)
}

/// Report JSON with the timing field removed.
pub fn strip_duration(text: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(text).expect("report is JSON");
    v.as_object_mut().unwrap().remove("duration_ms");
    serde_json::to_string(&v).unwrap()
}
