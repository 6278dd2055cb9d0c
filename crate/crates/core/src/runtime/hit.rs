use super::log::ObjectState;
use crate::project::Project;

/// Bounding box of a sprite's current look: `(min_x, min_y, max_x, max_y)`.
/// Sprites without looks have no box.
pub fn sprite_bounds(project: &Project, sprite: usize, state: &ObjectState) -> Option<(f64, f64, f64, f64)> {
    let look = project.objects.get(sprite)?.looks.get(state.look_index)?;
    let scale = state.size / 100.0;
    let half_w = f64::from(look.width) * scale / 2.0;
    let half_h = f64::from(look.height) * scale / 2.0;
    Some((state.x - half_w, state.y - half_h, state.x + half_w, state.y + half_h))
}

/// The topmost visible sprite whose bounding box contains the point, edges
/// included. `sprites[i]` is the state of `project.objects[i]`; later sprites
/// are drawn on top.
pub fn hit_test(project: &Project, sprites: &[ObjectState], x: f64, y: f64) -> Option<usize> {
    sprites.iter().enumerate().rev().find_map(|(i, state)| {
        if !state.visible {
            return None;
        }
        let (x0, y0, x1, y1) = sprite_bounds(project, i, state)?;
        (x0 <= x && x <= x1 && y0 <= y && y <= y1).then_some(i)
    })
}
