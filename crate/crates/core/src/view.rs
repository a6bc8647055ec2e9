//! Step-by-step 2-D views of a transform.
//!
//! Every frame is a linear projection onto two orthonormal camera vectors,
//! without centering, so the origin always sits at `(0, 0)`.

use serde::{Deserialize, Serialize};

use crate::embedding::{EmbeddingSnapshot, SnapshotId, WordSet};
use crate::error::{Error, Result};
use crate::linalg;
use crate::metrics::{report, MetricReport};
use crate::scalar::Scalar;
use crate::subspace::ConceptDirection;
use crate::transforms::{run_job, DebiasJob, InlpTermination, JobOutput, JobSeeds, Method, StepDescriptor, StepOp};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Group {
    SeedF,
    SeedM,
    Evaluation,
    Equalize,
    Other,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePoint<T> {
    pub token: String,
    pub x: T,
    pub y: T,
    pub group: Group,
}

/// Segment from the origin to the projection of a unit concept direction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectionSegment<T> {
    pub label: String,
    pub x: T,
    pub y: T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CameraKind {
    /// Top two principal directions of the displayed words.
    Pca,
    /// Concept direction on x, top residual principal direction on y.
    Aligned,
    /// The plane of two concept directions, the first on x.
    Span,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera<T> {
    pub kind: CameraKind,
    /// Two orthonormal vectors: x axis, then y axis.
    pub basis: [Vec<T>; 2],
    /// Set when the displayed words did not determine an axis and a fallback was used.
    #[serde(default)]
    pub degenerate: bool,
}

impl<T: Scalar> Camera<T> {
    pub fn project(&self, x: &[T]) -> (T, T) {
        (linalg::dot(x, &self.basis[0]), linalg::dot(x, &self.basis[1]))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ViewFrame<T> {
    pub step_index: usize,
    pub step_label: String,
    pub description: String,
    pub points: Vec<FramePoint<T>>,
    pub direction_segments: Vec<DirectionSegment<T>>,
    pub camera: Camera<T>,
    pub snapshot_id: SnapshotId,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepTrace<T> {
    pub method: Method,
    pub label: String,
    pub frames: Vec<ViewFrame<T>>,
    /// Snapshot state shown by each frame.
    pub snapshots: Vec<SnapshotId>,
    pub directions: Vec<ConceptDirection<T>>,
    pub steps: Vec<StepDescriptor<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<InlpTermination>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics_before: Option<MetricReport<T>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metrics_after: Option<MetricReport<T>>,
}

/// Relative eigenvalue below which an axis counts as missing.
fn axis_cutoff<T: Scalar>(rows: &[&[T]]) -> T {
    let mu = linalg::mean(rows);
    let total = rows.iter().fold(T::zero(), |acc, r| {
        acc + linalg::dot(&linalg::sub(r, &mu), &linalg::sub(r, &mu))
    });
    total * T::lit(1e-20)
}

fn top_axes<T: Scalar>(rows: &[&[T]], cutoff: T, k: usize) -> Vec<Vec<T>> {
    linalg::principal_axes(rows, true, k)
        .into_iter()
        .filter(|a| a.eigenvalue > cutoff)
        .map(|a| a.direction)
        .collect()
}

/// PCA camera over raw rows: top two centred principal directions, with an
/// arbitrary orthogonal fill-in (flagged) when the rows span fewer than two.
pub fn pca_camera<T: Scalar>(rows: &[&[T]], dim: usize) -> Camera<T> {
    let cutoff = if rows.is_empty() { T::zero() } else { axis_cutoff(rows) };
    let mut axes = if rows.is_empty() {
        Vec::new()
    } else {
        top_axes(rows, cutoff, 2)
    };
    let degenerate = axes.len() < 2;
    if axes.is_empty() {
        axes.push(linalg::any_orthogonal(dim, &[]));
    }
    let b1 = axes.swap_remove(0);
    let b2 = axes
        .first()
        .and_then(|a| {
            let mut u = linalg::orthogonalize(a, &[&b1])?;
            linalg::canonicalize_sign(&mut u);
            Some(u)
        })
        .unwrap_or_else(|| linalg::any_orthogonal(dim, &[&b1]));
    Camera {
        kind: CameraKind::Pca,
        basis: [b1, b2],
        degenerate,
    }
}

/// Aligned camera over raw rows: `v` on x, the top principal direction of the
/// rows with their `v` components removed on y.
pub fn aligned_camera<T: Scalar>(v: &[T], rows: &[&[T]]) -> Result<Camera<T>> {
    if rows.len() < 2 {
        return Err(Error::Degenerate("aligned view needs at least 2 words".into()));
    }
    let cutoff = axis_cutoff(rows);
    let residual: Vec<Vec<T>> = rows.iter().map(|r| linalg::project_out(r, v)).collect();
    let refs: Vec<&[T]> = residual.iter().map(Vec::as_slice).collect();
    let axis = top_axes(&refs, cutoff, 1)
        .into_iter()
        .next()
        .ok_or_else(|| Error::Degenerate("no spread left after removing the concept direction".into()))?;
    let mut b2 = linalg::orthogonalize(&axis, &[v])
        .ok_or_else(|| Error::Degenerate("residual axis is parallel to the concept direction".into()))?;
    linalg::canonicalize_sign(&mut b2);
    Ok(Camera {
        kind: CameraKind::Aligned,
        basis: [v.to_vec(), b2],
        degenerate: false,
    })
}

fn display_rows<'s, T: Scalar>(snapshot: &'s EmbeddingSnapshot<T>, display: &WordSet) -> Result<Vec<&'s [T]>> {
    if display.len() < 2 {
        return Err(Error::InvalidArgument("a view needs at least 2 display words".into()));
    }
    snapshot.get_vectors(display)
}

/// PCA camera for `display` on `snapshot`.
pub fn camera_pca<T: Scalar>(snapshot: &EmbeddingSnapshot<T>, display: &WordSet) -> Result<Camera<T>> {
    let rows = display_rows(snapshot, display)?;
    Ok(pca_camera(&rows, snapshot.dim()))
}

/// Aligned camera for `v` and `display` on `snapshot`.
pub fn camera_aligned<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    v: &ConceptDirection<T>,
    display: &WordSet,
) -> Result<Camera<T>> {
    let rows = display_rows(snapshot, display)?;
    aligned_camera(&v.vector, &rows)
}

/// Displayed words with their groups, first occurrence wins.
pub fn display_set(job: &DebiasJob) -> Vec<(String, Group)> {
    let mut out: Vec<(String, Group)> = Vec::new();
    let mut push = |t: &str, g: Group| {
        if !out.iter().any(|(o, _)| o == t) {
            out.push((t.to_string(), g));
        }
    };
    let mut seeds = |s: &JobSeeds, whole: Option<Group>| {
        for (set, g) in [(&s.f, Group::SeedF), (&s.m, Group::SeedM), (&s.set, Group::Other)] {
            for t in set.iter().flat_map(|w| w.iter()) {
                push(t, whole.unwrap_or(g));
            }
        }
        if let Some(p) = &s.pairs {
            for (i, t) in p.tokens().enumerate() {
                let g = if i % 2 == 0 { Group::SeedF } else { Group::SeedM };
                push(t, whole.unwrap_or(g));
            }
        }
    };
    if job.method == Method::Oscar {
        seeds(&job.seeds, Some(Group::SeedF));
        if let Some(s) = &job.second_subspace_seeds {
            seeds(s, Some(Group::SeedM));
        }
    } else {
        seeds(&job.seeds, None);
    }
    for t in job.equalize.iter().flat_map(|p| p.tokens()) {
        push(t, Group::Equalize);
    }
    for t in job.evaluation.iter() {
        push(t, Group::Evaluation);
    }
    out
}

struct FrameMaker<'a, T> {
    tokens: &'a [(String, Group)],
    frames: Vec<ViewFrame<T>>,
}

impl<T: Scalar> FrameMaker<'_, T> {
    fn push(
        &mut self,
        label: &str,
        description: String,
        camera: &Camera<T>,
        rows: &[Vec<T>],
        directions: &[(String, Vec<T>)],
        id: &SnapshotId,
    ) {
        let points = self
            .tokens
            .iter()
            .zip(rows)
            .map(|((token, group), r)| {
                let (x, y) = camera.project(r);
                FramePoint {
                    token: token.clone(),
                    x,
                    y,
                    group: *group,
                }
            })
            .collect();
        let direction_segments = directions
            .iter()
            .map(|(l, v)| {
                let (x, y) = camera.project(v);
                DirectionSegment { label: l.clone(), x, y }
            })
            .collect();
        self.frames.push(ViewFrame {
            step_index: self.frames.len(),
            step_label: label.to_string(),
            description,
            points,
            direction_segments,
            camera: camera.clone(),
            snapshot_id: id.clone(),
        });
    }
}

fn direction_name(d: &ConceptDirection<impl Scalar>, fallback: &str) -> String {
    if d.label.is_empty() {
        fallback.to_string()
    } else {
        d.label.clone()
    }
}

/// Builds the frame sequence for a finished job.
///
/// The first frame is a PCA view of the input; every row-changing step gets
/// a frame before it (with a fresh aligned or span camera) and a frame after
/// it (same camera), except equalization, which reuses the previous camera;
/// the last frame is a PCA view of the output.
pub fn trace_from_output<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    job: &DebiasJob,
    out: &JobOutput<T>,
) -> Result<StepTrace<T>> {
    let tokens = display_set(job);
    let idx = snapshot.resolve(tokens.iter().map(|(t, _)| t.as_str()))?;
    let dim = snapshot.dim();
    let mut rows: Vec<Vec<T>> = idx.iter().map(|&i| snapshot.row(i).to_vec()).collect();
    let mut maker = FrameMaker {
        tokens: &tokens,
        frames: Vec::new(),
    };
    let mut snapshots = Vec::new();
    let tr = &out.transform;
    let op_ids = tr.op_snapshot_ids();

    // directions drawn in PCA views, tracked through rotations
    let mut shown: Vec<(String, Vec<T>)> = match job.method {
        Method::Oscar => vec![
            (
                direction_name(&out.directions[0], "v1"),
                out.directions[0].vector.clone(),
            ),
            (
                direction_name(&out.directions[1], "v2"),
                out.directions[1].vector.clone(),
            ),
        ],
        _ => vec![(
            direction_name(&out.directions[0], "v"),
            out.directions[0].vector.clone(),
        )],
    };

    let cam = {
        let r: Vec<&[T]> = rows.iter().map(Vec::as_slice).collect();
        pca_camera(&r, dim)
    };
    maker.push(
        "initial view",
        "The displayed words in the best 2-dimensional PCA view of the original embedding.".into(),
        &cam,
        &rows,
        &shown,
        snapshot.id(),
    );
    snapshots.push(snapshot.id().clone());

    let mut camera = cam;
    let mut active: Vec<(String, Vec<T>)> = shown.clone();
    let mut current_id = snapshot.id().clone();
    let step_of = |k: usize| {
        tr.steps
            .iter()
            .find(|s| s.op_index == Some(k))
            .expect("every op has a step")
    };

    for (k, op) in tr.ops.iter().enumerate() {
        let step = step_of(k);
        match op {
            StepOp::Project { direction, .. } => {
                let name = match job.method {
                    Method::Inlp => format!("v{}", k + 1),
                    _ => shown[0].0.clone(),
                };
                let r: Vec<&[T]> = rows.iter().map(Vec::as_slice).collect();
                camera = aligned_camera(direction, &r).unwrap_or_else(|_| Camera {
                    kind: CameraKind::Aligned,
                    basis: [direction.clone(), linalg::any_orthogonal(dim, &[direction])],
                    degenerate: true,
                });
                active = vec![(name, direction.clone())];
                let description = match (job.method, step.accuracy) {
                    (Method::Inlp, Some(acc)) => format!(
                        "Rotate the view so the normal of a classifier separating the seed groups (accuracy {acc:.3}) lies along the x-axis."
                    ),
                    _ => "Rotate the view so the concept direction lies along the x-axis; the y-axis shows the largest remaining spread.".into(),
                };
                maker.push("align", description, &camera, &rows, &active, &current_id);
                snapshots.push(current_id.clone());
            }
            StepOp::Rotate(plane) => {
                camera = Camera {
                    kind: CameraKind::Span,
                    basis: [plane.u1.clone(), plane.u2.clone()],
                    degenerate: false,
                };
                maker.push(
                    "span view",
                    "Show the plane spanned by the two concept directions, with the first along the x-axis.".into(),
                    &camera,
                    &rows,
                    &shown,
                    &current_id,
                );
                snapshots.push(current_id.clone());
            }
            StepOp::Equalize { .. } => {}
        }
        for (r, &i) in rows.iter_mut().zip(&idx) {
            op.apply_row(i, r);
        }
        if let StepOp::Rotate(_) = op {
            for (_, v) in shown.iter_mut().skip(1) {
                op.apply_free(v);
            }
            active = shown.clone();
        }
        current_id = op_ids[k].clone();
        maker.push(
            &step.label,
            step.description.clone(),
            &camera,
            &rows,
            &active,
            &current_id,
        );
        snapshots.push(current_id.clone());
    }

    let r: Vec<&[T]> = rows.iter().map(Vec::as_slice).collect();
    let final_cam = pca_camera(&r, dim);
    maker.push(
        "final view",
        "The displayed words in the best 2-dimensional PCA view of the transformed embedding.".into(),
        &final_cam,
        &rows,
        &shown,
        tr.output.id(),
    );
    snapshots.push(tr.output.id().clone());

    let (metrics_before, metrics_after) = match &job.metrics {
        Some(sets) => (Some(report(snapshot, sets)?), Some(report(&tr.output, sets)?)),
        None => (None, None),
    };
    Ok(StepTrace {
        method: job.method,
        label: job.label.clone(),
        frames: maker.frames,
        snapshots,
        directions: out.directions.clone(),
        steps: tr.steps.clone(),
        termination: tr.termination,
        metrics_before,
        metrics_after,
    })
}

/// Runs `job` on `snapshot` and builds its trace.
pub fn build_trace<T: Scalar>(
    snapshot: &EmbeddingSnapshot<T>,
    job: &DebiasJob,
) -> Result<(StepTrace<T>, JobOutput<T>)> {
    let out = run_job(snapshot, job)?;
    let trace = trace_from_output(snapshot, job, &out)?;
    Ok((trace, out))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::PairedWordSet;

    fn ws(tokens: &[&str]) -> WordSet {
        WordSet::new("", tokens.iter().copied()).unwrap()
    }

    fn snap() -> EmbeddingSnapshot<f64> {
        EmbeddingSnapshot::from_rows([
            ("she", vec![0.9, 0.2, 0.1, 0.0]),
            ("he", vec![-0.8, 0.3, 0.0, 0.1]),
            ("girl", vec![0.7, 0.1, 0.4, 0.0]),
            ("boy", vec![-0.6, 0.2, 0.5, 0.1]),
            ("nurse", vec![0.4, 0.6, -0.2, 0.3]),
            ("engineer", vec![-0.3, 0.7, -0.1, 0.2]),
            ("pilot", vec![-0.2, 0.5, 0.3, -0.4]),
        ])
        .unwrap()
    }

    #[test]
    fn plane_cameras() {
        let s = EmbeddingSnapshot::from_rows([
            ("a", vec![3.0, 0.0, 0.0]),
            ("b", vec![-3.0, 0.0, 0.0]),
            ("c", vec![0.0, 1.0, 0.0]),
            ("d", vec![0.0, -1.0, 0.0]),
        ])
        .unwrap();
        let c = camera_pca(&s, &ws(&["a", "b", "c", "d"])).unwrap();
        assert_eq!(c.basis, [vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]]);
        assert!(!c.degenerate);
        let line = camera_pca(&s, &ws(&["a", "b"])).unwrap();
        assert!(line.degenerate);
    }

    #[test]
    fn aligned_camera_examples() {
        let s = EmbeddingSnapshot::from_rows([
            ("a", vec![1.0, 0.0, 1.0]),
            ("b", vec![2.0, 0.0, -1.0]),
            ("c", vec![0.5, 0.0, 0.0]),
        ])
        .unwrap();
        let v = ConceptDirection::from_vector(
            &[1.0, 0.0, 0.0],
            crate::SubspaceMethod::Pca,
            crate::subspace::Seeds::Single { set: ws(&["a"]) },
            "",
        )
        .unwrap();
        let c = camera_aligned(&s, &v, &ws(&["a", "b", "c"])).unwrap();
        assert_eq!(c.basis[1], vec![0.0, 0.0, 1.0]);
        let flat = camera_aligned(&s, &v, &ws(&["c", "a"]));
        assert!(flat.is_ok());
        let s2 = EmbeddingSnapshot::from_rows([("p", vec![1.0, 0.0]), ("q", vec![2.0, 0.0])]).unwrap();
        let v2 = ConceptDirection {
            vector: vec![1.0, 0.0],
            ..v
        };
        assert!(matches!(
            camera_aligned(&s2, &v2, &ws(&["p", "q"])),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn frame_schedules() {
        let s = snap();
        let seeds = JobSeeds::groups(ws(&["she", "girl"]), ws(&["he", "boy"]));
        let mut lp = DebiasJob::new(Method::Lp, seeds.clone());
        lp.evaluation = ws(&["nurse", "engineer", "pilot"]);
        let (t, out) = build_trace(&s, &lp).unwrap();
        assert_eq!(t.frames.len(), 4);
        assert_eq!(t.snapshots.len(), 4);
        assert_eq!(t.snapshots[3], *out.transform.output.id());
        for p in &t.frames[2].points {
            assert!(p.x.abs() <= 1e-9, "{p:?}");
        }
        assert!((t.frames[1].direction_segments[0].x - 1.0).abs() < 1e-12);
        assert_eq!(t.frames[3].camera.kind, CameraKind::Pca);

        let mut hd = DebiasJob::new(Method::Hd, JobSeeds::groups(ws(&["she"]), ws(&["he"])));
        hd.equalize = Some(PairedWordSet::new([("girl", "boy")]).unwrap());
        hd.evaluation = ws(&["nurse", "engineer"]);
        assert_eq!(build_trace(&s, &hd).unwrap().0.frames.len(), 5);

        let mut os = DebiasJob::new(Method::Oscar, JobSeeds::single(ws(&["she", "he", "girl", "boy"])));
        os.subspace_method = Some(crate::SubspaceMethod::Pca);
        os.second_subspace_seeds = Some(JobSeeds::single(ws(&["nurse", "engineer", "pilot"])));
        let (t, _) = build_trace(&s, &os).unwrap();
        assert_eq!(t.frames.len(), 4);
        let seg = &t.frames[2].direction_segments;
        let angle = seg[1].y.atan2(seg[1].x) - seg[0].y.atan2(seg[0].x);
        assert!((angle.abs().to_degrees() - 90.0).abs() < 0.5, "{seg:?}");
    }

    #[test]
    fn frames_replay_the_transform() {
        let s = snap();
        let mut job = DebiasJob::new(Method::Inlp, JobSeeds::groups(ws(&["she", "girl"]), ws(&["he", "boy"])));
        job.evaluation = ws(&["nurse", "engineer"]);
        let (t, out) = build_trace(&s, &job).unwrap();
        let r = out.transform.ops.len();
        assert_eq!(t.frames.len(), 2 + 2 * r);
        let last = t.frames.last().unwrap();
        for p in &last.points {
            let v = out.transform.output.vector(&p.token).unwrap();
            assert_eq!((p.x, p.y), last.camera.project(v));
        }
    }
}
