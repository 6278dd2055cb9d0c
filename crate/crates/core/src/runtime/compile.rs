//! Lowers nested script bodies to a flat instruction list with explicit
//! jumps, so a suspended script is just a program counter plus a stack of
//! repeat counters.
//!
//! A loop iteration ends with a yield only when nothing inside it yielded, so
//! a `forever` around a `wait` keeps the wait's period.

use crate::formula::Formula;
use crate::project::Brick;

#[derive(Debug, Clone)]
pub(crate) enum Op {
    /// A brick that never yields.
    Exec(Brick),
    /// Suspend for the formula's seconds, at least one tick.
    Wait(Formula),
    JumpUnless { condition: Formula, target: usize },
    Jump(usize),
    /// Start of a loop iteration: remember the thread's yield count in `slot`.
    Mark(usize),
    /// Forever tail: continue at `target`, yielding first if the iteration
    /// recorded in `slot` did not.
    LoopBack { target: usize, slot: usize },
    /// Push the rounded count, or skip to `exit` when it is not positive.
    RepeatStart { count: Formula, exit: usize },
    /// Repeat tail: count down and loop to `body` while iterations remain.
    /// Yields like `LoopBack`, including after the last iteration.
    RepeatNext { body: usize, slot: usize },
}

#[derive(Debug, Clone)]
pub(crate) struct Instr {
    pub op: Op,
    /// Element path of the originating brick.
    pub location: String,
}

/// Returns the code and the number of loop slots it uses.
pub(crate) fn compile_script(body: &[Brick], script_path: &str) -> (Vec<Instr>, usize) {
    let mut code = Vec::new();
    let mut slots = 0;
    compile_body(body, &format!("{script_path}/body"), &mut code, &mut slots);
    (code, slots)
}

fn compile_body(body: &[Brick], prefix: &str, code: &mut Vec<Instr>, slots: &mut usize) {
    for (i, brick) in body.iter().enumerate() {
        let location = format!("{prefix}[{i}]");
        let emit = |code: &mut Vec<Instr>, op| {
            code.push(Instr {
                op,
                location: location.clone(),
            });
            code.len() - 1
        };
        match brick {
            Brick::Forever(inner) => {
                let slot = *slots;
                *slots += 1;
                let start = emit(code, Op::Mark(slot));
                compile_body(inner, &format!("{location}/body"), code, slots);
                emit(code, Op::LoopBack { target: start, slot });
            }
            Brick::Repeat { count, body } => {
                let head = emit(
                    code,
                    Op::RepeatStart {
                        count: count.clone(),
                        exit: usize::MAX,
                    },
                );
                let slot = *slots;
                *slots += 1;
                emit(code, Op::Mark(slot));
                compile_body(body, &format!("{location}/body"), code, slots);
                emit(code, Op::RepeatNext { body: head + 1, slot });
                let exit = code.len();
                if let Op::RepeatStart { exit: e, .. } = &mut code[head].op {
                    *e = exit;
                }
            }
            Brick::If {
                condition,
                then_body,
                else_body,
            } => {
                let test = emit(
                    code,
                    Op::JumpUnless {
                        condition: condition.clone(),
                        target: usize::MAX,
                    },
                );
                compile_body(then_body, &format!("{location}/then"), code, slots);
                let else_start = if else_body.is_empty() {
                    code.len()
                } else {
                    let skip = emit(code, Op::Jump(usize::MAX));
                    let start = code.len();
                    compile_body(else_body, &format!("{location}/else"), code, slots);
                    let end = code.len();
                    code[skip].op = Op::Jump(end);
                    start
                };
                if let Op::JumpUnless { target, .. } = &mut code[test].op {
                    *target = else_start;
                }
            }
            Brick::Wait(seconds) => {
                emit(code, Op::Wait(seconds.clone()));
            }
            other => {
                emit(code, Op::Exec(other.clone()));
            }
        }
    }
}
