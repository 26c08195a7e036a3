use super::{FrameView, TrialObserver};
use crate::environment::SpaceMap;
use crate::geometry::Vec2;
use crate::redirection::{ResetEvent, UserState};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceFrame {
    pub physical_position: Vec2,
    pub curvature_sign: i8,
    pub future_physical: Option<Vec2>,
}

/// Physical trajectory of one episode, for rendering.
#[derive(Debug, Clone, Default)]
pub struct Trace {
    pub physical: Option<SpaceMap>,
    pub frames: Vec<TraceFrame>,
    pub resets: Vec<ResetEvent>,
    /// Keep every n-th frame (1 keeps all).
    pub stride: u64,
}

impl Trace {
    pub fn new(stride: u64) -> Self {
        Trace {
            stride: stride.max(1),
            ..Trace::default()
        }
    }
}

impl TrialObserver for Trace {
    fn frame(&mut self, view: &FrameView<'_>) {
        if self.physical.is_none() {
            self.physical = Some(view.physical.clone());
        }
        if !view.frame.is_multiple_of(self.stride.max(1)) {
            return;
        }
        let p = view.user.physical_pose.position;
        self.frames.push(TraceFrame {
            physical_position: p,
            curvature_sign: view.decision.gains.curvature_sign,
            future_physical: view.decision.debug.future_physical,
        });
    }

    fn reset(&mut self, event: &ResetEvent, _after: &UserState) {
        self.resets.push(*event);
    }
}
