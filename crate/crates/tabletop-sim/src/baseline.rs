use crate::env::{Action, SimState, TabletopEnv, Task};
use crate::Result;
use geom_core::Vec3;

/// Scripted controller used to guide policy learning: a deterministic
/// four-phase state machine computed from the simulator state.
///
/// 1. move above the target in (x, y);
/// 2. descend onto the grasp point;
/// 3. close and lift to a safe height;
/// 4. pick-and-place only: carry over the goal, descend, open.
pub fn baseline_controller(env: &TabletopEnv, state: &SimState) -> Result<Action> {
    let cfg = env.config();
    let cap = cfg.max_step * 0.9;
    let target_name = cfg.task.target();
    let grasp_point = env.grasp_point(state, target_name)?;
    let g = state.gripper_pos;

    let clampv = |v: Vec3| Vec3::new(v.x.clamp(-cap, cap), v.y.clamp(-cap, cap), v.z.clamp(-cap, cap));

    let lift_target = cfg.lift_height + 0.02;

    if state.held_object.is_none() {
        let xy_err = Vec3::new(grasp_point.x - g.x, grasp_point.y - g.y, 0.0);
        if xy_err.norm() > 0.01 {
            // Phase 1: translate over the target at a safe hover height.
            let hover = grasp_point.z + 0.06;
            let dz = (hover - g.z).clamp(-cap, cap);
            let mut delta = clampv(xy_err);
            delta.z = dz;
            return Ok(Action { delta, gripper: 0.8 });
        }
        if g.z > grasp_point.z + 0.005 {
            // Phase 2: descend, keeping centered.
            let mut delta = clampv(xy_err);
            delta.z = (grasp_point.z - g.z).clamp(-cap, cap);
            return Ok(Action { delta, gripper: 0.8 });
        }
        // Phase 3a: close.
        return Ok(Action { delta: Vec3::ZERO, gripper: -0.9 });
    }

    // Holding the object.
    match &cfg.task {
        Task::Grasp { .. } => {
            // Keep lifting; success triggers on the object height.
            Ok(Action { delta: Vec3::new(0.0, 0.0, cap), gripper: -0.9 })
        }
        Task::PickPlace { target } => {
            let goal = cfg.plate_center;
            let xy_err = Vec3::new(goal.x - g.x, goal.y - g.y, 0.0);
            if xy_err.norm() > 0.01 {
                // Lift clear of the table first, then carry over the goal.
                if g.z < lift_target {
                    return Ok(Action { delta: Vec3::new(0.0, 0.0, cap), gripper: -0.9 });
                }
                let mut delta = clampv(xy_err);
                delta.z = 0.0;
                return Ok(Action { delta, gripper: -0.9 });
            }
            // Descend until the held object nearly rests, then open.
            let rest = env.rest_height(target);
            let plate_top = {
                // support height under the goal: plate top plus rest offset
                let obj_z = state.object_poses[target].translation.z;
                let _ = obj_z;
                rest + 0.012 // plate thickness margin
            };
            let held_bottom_target = plate_top + 0.004;
            let gripper_target_z = held_bottom_target - state.held_offset.z;
            if g.z > gripper_target_z + 0.004 {
                let mut delta = clampv(xy_err);
                delta.z = (gripper_target_z - g.z).clamp(-cap, cap);
                return Ok(Action { delta, gripper: -0.9 });
            }
            Ok(Action { delta: Vec3::ZERO, gripper: 0.9 })
        }
    }
}
