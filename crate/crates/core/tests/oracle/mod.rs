//! Slow reference implementations used as test oracles. Each one works from
//! the definitions directly (dense pixels, exhaustive enumeration, one
//! detection at a time) and shares no code with the library.
#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet, HashMap};

use vtd_core::label::{Frame, FrameSet, Keypoints, Label, RleMask};

/// Column-major pixel vector of an RLE mask.
pub fn dense(rle: &RleMask) -> Vec<bool> {
    let mut out = Vec::new();
    for (i, &r) in rle.runs().iter().enumerate() {
        out.extend(std::iter::repeat_n(i % 2 == 1, r as usize));
    }
    out
}

pub fn dense_counts(a: &[bool], b: &[bool]) -> (u64, u64) {
    assert_eq!(a.len(), b.len());
    let inter = a.iter().zip(b).filter(|(x, y)| **x && **y).count() as u64;
    let union = a.iter().zip(b).filter(|(x, y)| **x || **y).count() as u64;
    (inter, union)
}

pub fn dense_iou(a: &[bool], b: &[bool]) -> f64 {
    let (i, u) = dense_counts(a, b);
    if u == 0 {
        0.0
    } else {
        i as f64 / u as f64
    }
}

/// Every permutation of `0..n` in lexicographic order.
pub fn permutations(n: usize) -> Vec<Vec<usize>> {
    fn go(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for j in 0..used.len() {
            if !used[j] {
                used[j] = true;
                prefix.push(j);
                go(prefix, used, out);
                prefix.pop();
                used[j] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::new(), &mut vec![false; n], &mut out);
    out
}

/// Minimum total cost over all matchings that pair `min(rows, cols)` rows
/// with distinct columns.
pub fn exhaustive_min_cost(cost: &[Vec<f64>]) -> f64 {
    let r = cost.len();
    let c = cost.first().map_or(0, Vec::len);
    let n = r.max(c);
    let mut best = f64::INFINITY;
    for p in permutations(n) {
        let total: f64 = (0..r).filter(|&i| p[i] < c).map(|i| cost[i][p[i]]).sum();
        best = best.min(total);
    }
    if n == 0 {
        0.0
    } else {
        best
    }
}

fn box_iou_int(a: &Label, b: &Label) -> f64 {
    let (a, b) = (a.box2d.unwrap(), b.box2d.unwrap());
    let iw = (a.x2.min(b.x2) - a.x1.max(b.x1)).max(0.0);
    let ih = (a.y2.min(b.y2) - a.y1.max(b.y1)).max(0.0);
    let inter = iw * ih;
    let union = (a.x2 - a.x1) * (a.y2 - a.y1) + (b.x2 - b.x1) * (b.y2 - b.y1) - inter;
    if union > 0.0 {
        inter / union
    } else {
        0.0
    }
}

fn oks_direct(pred: &Keypoints, gt: &Keypoints, area: f64, sigma: f64) -> f64 {
    let mut vals = Vec::new();
    for (p, g) in pred.joints().iter().zip(gt.joints()) {
        if g.score > 0.0 {
            let d2 = (p.x - g.x) * (p.x - g.x) + (p.y - g.y) * (p.y - g.y);
            let k = 2.0 * sigma;
            vals.push((-d2 / (2.0 * area * k * k)).exp());
        }
    }
    vals.iter().sum::<f64>() / vals.len() as f64
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum Mode {
    Box,
    Mask,
    Keypoint,
}

fn similarity(mode: Mode, pred: &Label, gt: &Label, sigma: f64) -> f64 {
    match mode {
        Mode::Box => box_iou_int(pred, gt),
        Mode::Mask => dense_iou(&dense(pred.rle.as_ref().unwrap()), &dense(gt.rle.as_ref().unwrap())),
        Mode::Keypoint => oks_direct(
            pred.graph.as_ref().unwrap(),
            gt.graph.as_ref().unwrap(),
            gt.box2d.unwrap().area(),
            sigma,
        ),
    }
}

fn counts_gt(mode: Mode, l: &Label) -> bool {
    mode != Mode::Keypoint || l.graph.as_ref().unwrap().joints().iter().any(|j| j.score > 0.0)
}

/// AP in percent per class (`None` without ground truth) and the mean over
/// classes with ground truth. Builds the full precision/recall curve one
/// detection at a time.
pub fn ap_oracle(
    preds: &FrameSet,
    gts: &FrameSet,
    mode: Mode,
    thresholds: &[f64],
    sigma: f64,
) -> (BTreeMap<String, Option<f64>>, f64) {
    let gt_frames: HashMap<&str, &Frame> = gts.frames().iter().map(|f| (f.name.as_str(), f)).collect();
    let classes: BTreeSet<String> = gts
        .frames()
        .iter()
        .chain(preds.frames())
        .flat_map(|f| f.labels.iter().map(|l| l.category.clone()))
        .collect();
    let mut out = BTreeMap::new();
    for class in classes {
        let num_gt: usize = gts
            .frames()
            .iter()
            .flat_map(|f| &f.labels)
            .filter(|l| l.category == class && counts_gt(mode, l))
            .count();
        if num_gt == 0 {
            out.insert(class, None);
            continue;
        }
        // every detection of this class on a frame that has ground truth
        let mut dets: Vec<(&Frame, &Label)> = preds
            .frames()
            .iter()
            .filter(|f| gt_frames.contains_key(f.name.as_str()))
            .flat_map(|f| f.labels.iter().map(move |l| (f, l)))
            .filter(|(_, l)| l.category == class)
            .collect();
        dets.sort_by(|a, b| {
            b.1.score
                .unwrap()
                .partial_cmp(&a.1.score.unwrap())
                .unwrap()
                .then(a.0.name.cmp(&b.0.name))
                .then(a.1.id.cmp(&b.1.id))
        });
        let mut per_threshold = Vec::new();
        for &thr in thresholds {
            let mut used: HashMap<(&str, usize), bool> = HashMap::new();
            let mut tp = 0usize;
            let mut curve: Vec<(usize, f64)> = Vec::new();
            for (n, (frame, det)) in dets.iter().enumerate() {
                let gt_frame = gt_frames[frame.name.as_str()];
                let mut best: Option<(usize, f64)> = None;
                for (gi, g) in gt_frame.labels.iter().enumerate() {
                    if g.category != class || !counts_gt(mode, g) || used.contains_key(&(frame.name.as_str(), gi)) {
                        continue;
                    }
                    let s = similarity(mode, det, g, sigma);
                    if s >= thr && best.is_none_or(|(_, b)| s > b) {
                        best = Some((gi, s));
                    }
                }
                if let Some((gi, _)) = best {
                    used.insert((frame.name.as_str(), gi), true);
                    tp += 1;
                }
                curve.push((tp, tp as f64 / (n + 1) as f64));
            }
            // precision envelope: best precision at this rank or later
            let mut envelope: Vec<f64> = curve.iter().map(|c| c.1).collect();
            for k in (0..envelope.len().saturating_sub(1)).rev() {
                envelope[k] = envelope[k].max(envelope[k + 1]);
            }
            let mut sum = 0.0;
            for i in 0..=100usize {
                // recall tp/num_gt >= i/100, exactly
                if let Some(k) = curve.iter().position(|c| c.0 * 100 >= i * num_gt) {
                    sum += envelope[k];
                }
            }
            per_threshold.push(100.0 * (sum / 101.0));
        }
        out.insert(
            class,
            Some(per_threshold.iter().sum::<f64>() / per_threshold.len() as f64),
        );
    }
    let present: Vec<f64> = out.values().flatten().copied().collect();
    let map = present.iter().sum::<f64>() / present.len() as f64;
    (out, map)
}

/// Tracks of a split keyed by video, then frame index.
type Video<'a> = BTreeMap<u32, Vec<&'a Label>>;

fn videos(fs: &FrameSet) -> BTreeMap<String, Video<'_>> {
    let mut out: BTreeMap<String, Video> = BTreeMap::new();
    for f in fs.frames() {
        out.entry(f.video_name.clone().unwrap())
            .or_default()
            .insert(f.frame_index.unwrap(), f.labels.iter().collect());
    }
    out
}

/// The frame matching used for association: most eligible pairs, then
/// highest total similarity, then the lexicographically first assignment
/// (rows are ground truth in frame order).
fn best_matching(sim: &[Vec<f64>], alpha: f64) -> Vec<(usize, usize)> {
    let r = sim.len();
    let c = sim.first().map_or(0, Vec::len);
    if r == 0 || c == 0 {
        return Vec::new();
    }
    let n = r.max(c);
    // (eligible matches, total similarity, pairs)
    type Candidate = (usize, f64, Vec<(usize, usize)>);
    let mut best: Option<Candidate> = None;
    for p in permutations(n) {
        let pairs: Vec<(usize, usize)> = (0..r)
            .filter(|&i| p[i] < c && sim[i][p[i]] >= alpha)
            .map(|i| (i, p[i]))
            .collect();
        let total: f64 = pairs.iter().map(|&(i, j)| sim[i][j]).sum();
        let better = match &best {
            None => true,
            Some((n0, t0, _)) => pairs.len() > *n0 || (pairs.len() == *n0 && total > t0 + 1e-9),
        };
        if better {
            best = Some((pairs.len(), total, pairs));
        }
    }
    best.unwrap().2
}

/// Association accuracy in percent, mean over categories with ground truth.
pub fn assa_oracle(preds: &FrameSet, gts: &FrameSet, alphas: &[f64], masks: bool) -> f64 {
    let gv = videos(gts);
    let pv = videos(preds);
    let sim = |a: &Label, b: &Label| {
        if masks {
            dense_iou(&dense(a.rle.as_ref().unwrap()), &dense(b.rle.as_ref().unwrap()))
        } else {
            box_iou_int(a, b)
        }
    };
    let classes: BTreeSet<&str> = gts
        .frames()
        .iter()
        .flat_map(|f| f.labels.iter().map(|l| l.category.as_str()))
        .collect();
    let mut class_scores = Vec::new();
    for class in &classes {
        let mut alpha_scores = Vec::new();
        for &alpha in alphas {
            // one entry per true positive: (video, gt id, pred id)
            let mut tps: Vec<(String, String, String)> = Vec::new();
            let mut gt_len: HashMap<(String, String), usize> = HashMap::new();
            let mut pred_len: HashMap<(String, String), usize> = HashMap::new();
            for (video, gframes) in &gv {
                let empty = Video::new();
                let pframes = pv.get(video).unwrap_or(&empty);
                let indices: BTreeSet<u32> = gframes.keys().chain(pframes.keys()).copied().collect();
                for idx in indices {
                    let g: Vec<&Label> = gframes
                        .get(&idx)
                        .into_iter()
                        .flatten()
                        .filter(|l| l.category == *class)
                        .copied()
                        .collect();
                    let p: Vec<&Label> = pframes
                        .get(&idx)
                        .into_iter()
                        .flatten()
                        .filter(|l| l.category == *class)
                        .copied()
                        .collect();
                    for l in &g {
                        *gt_len.entry((video.clone(), l.id.clone())).or_default() += 1;
                    }
                    for l in &p {
                        *pred_len.entry((video.clone(), l.id.clone())).or_default() += 1;
                    }
                    let s: Vec<Vec<f64>> = g.iter().map(|a| p.iter().map(|b| sim(a, b)).collect()).collect();
                    for (i, j) in best_matching(&s, alpha) {
                        tps.push((video.clone(), g[i].id.clone(), p[j].id.clone()));
                    }
                }
            }
            if tps.is_empty() {
                alpha_scores.push(0.0);
                continue;
            }
            // counts are brute force; the reduction runs videos in name order and
            // pairs in (gt, pred) order so the float sum is the library's
            let mut tpa: BTreeMap<&(String, String, String), usize> = BTreeMap::new();
            for t in &tps {
                *tpa.entry(t).or_default() += 1;
            }
            let mut total = 0.0;
            let mut video_sum = 0.0;
            let mut current: Option<&str> = None;
            for (t, &a) in &tpa {
                if current.is_some_and(|v| v != t.0) {
                    total += video_sum;
                    video_sum = 0.0;
                }
                current = Some(&t.0);
                let fna = gt_len[&(t.0.clone(), t.1.clone())] - a;
                let fpa = pred_len[&(t.0.clone(), t.2.clone())] - a;
                video_sum += a as f64 * (a as f64 / (a + fna + fpa) as f64);
            }
            total += video_sum;
            alpha_scores.push(total / tps.len() as f64);
        }
        class_scores.push(100.0 * alpha_scores.iter().sum::<f64>() / alphas.len() as f64);
    }
    class_scores.iter().sum::<f64>() / class_scores.len() as f64
}
