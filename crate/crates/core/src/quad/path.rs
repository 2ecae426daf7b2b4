//! Admissible polylines between two jet points.
//!
//! Candidates are tried in order: the straight chord, axis-aligned
//! staircases in every coordinate order, then a shortest path on a coarse
//! grid of the box. A segment is admissible when densely sampled points on it
//! lie in the box and clear of every excluded locus.

use std::collections::VecDeque;

use super::{OneForm, QuadError};
use crate::expr::{Env, Var};
use crate::sample::{Point, SampleBox};

const SEGMENT_CHECKS: usize = 48;
const GRID: usize = 20;

fn env_of(sbox: &SampleBox, p: &Point) -> Env {
    let mut env = sbox.env_with_fixed();
    for v in Var::JET {
        env.set(v, p.get(v).unwrap());
    }
    env
}

fn admissible_point(sbox: &SampleBox, vars: &[Var], p: &Point) -> bool {
    let env = env_of(sbox, p);
    let inside = vars.iter().all(|v| match sbox.range(*v) {
        Some(i) => i.contains(p.get(*v).unwrap()),
        None => true,
    });
    inside && sbox.clear_of_loci(&env)
}

fn lerp(p: &Point, q: &Point, t: f64) -> Point {
    let mut out = *p;
    for v in Var::JET {
        let (a, b) = (p.get(v).unwrap(), q.get(v).unwrap());
        out.set(v, a + t * (b - a));
    }
    out
}

fn admissible_segment(sbox: &SampleBox, vars: &[Var], p: &Point, q: &Point) -> bool {
    (0..=SEGMENT_CHECKS)
        .all(|k| admissible_point(sbox, vars, &lerp(p, q, k as f64 / SEGMENT_CHECKS as f64)))
}

fn admissible_path(sbox: &SampleBox, vars: &[Var], path: &[Point]) -> bool {
    path.windows(2)
        .all(|w| admissible_segment(sbox, vars, &w[0], &w[1]))
}

fn permutations(vars: &[Var]) -> Vec<Vec<Var>> {
    if vars.len() <= 1 {
        return vec![vars.to_vec()];
    }
    let mut out = Vec::new();
    for (i, v) in vars.iter().enumerate() {
        let mut rest = vars.to_vec();
        rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, *v);
            out.push(tail);
        }
    }
    out
}

fn staircase(order: &[Var], from: &Point, to: &Point) -> Vec<Point> {
    let mut path = vec![*from];
    let mut cur = *from;
    for v in order {
        let target = to.get(*v).unwrap();
        if cur.get(*v).unwrap() != target {
            cur.set(*v, target);
            path.push(cur);
        }
    }
    path
}

/// Shortest admissible path on a `GRID`-per-axis lattice over the form's
/// variables, entered and left by straight admissible segments.
fn grid_path(sbox: &SampleBox, vars: &[Var], from: &Point, to: &Point) -> Option<Vec<Point>> {
    let ranges: Vec<_> = vars.iter().map(|v| sbox.range(*v)).collect::<Option<_>>()?;
    let dims = vars.len();
    let total = GRID.pow(dims as u32);
    let node = |idx: usize| -> Point {
        let mut p = *from;
        let mut rest = idx;
        for (v, r) in vars.iter().zip(&ranges) {
            let k = rest % GRID;
            rest /= GRID;
            p.set(*v, r.at((k as f64 + 0.5) / GRID as f64));
        }
        p
    };
    let ok: Vec<bool> = (0..total)
        .map(|i| admissible_point(sbox, vars, &node(i)))
        .collect();
    let dist2 = |a: &Point, b: &Point| -> f64 {
        vars.iter()
            .zip(&ranges)
            .map(|(v, r)| ((a.get(*v).unwrap() - b.get(*v).unwrap()) / r.width()).powi(2))
            .sum()
    };
    let nearest = |p: &Point| -> Option<usize> {
        let mut cands: Vec<usize> = (0..total).filter(|i| ok[*i]).collect();
        cands.sort_by(|a, b| dist2(&node(*a), p).total_cmp(&dist2(&node(*b), p)));
        cands
            .into_iter()
            .take(8)
            .find(|i| admissible_segment(sbox, vars, p, &node(*i)))
    };
    let start = nearest(from)?;
    let goal = nearest(to)?;
    let mut prev = vec![usize::MAX; total];
    prev[start] = start;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        if i == goal {
            break;
        }
        let mut stride = 1;
        for _ in 0..dims {
            let coord = (i / stride) % GRID;
            let mut neighbours = Vec::with_capacity(2);
            if coord > 0 {
                neighbours.push(i - stride);
            }
            if coord + 1 < GRID {
                neighbours.push(i + stride);
            }
            for j in neighbours {
                if ok[j]
                    && prev[j] == usize::MAX
                    && admissible_segment(sbox, vars, &node(i), &node(j))
                {
                    prev[j] = i;
                    queue.push_back(j);
                }
            }
            stride *= GRID;
        }
    }
    if prev[goal] == usize::MAX {
        return None;
    }
    let mut chain = vec![goal];
    let mut i = goal;
    while i != start {
        i = prev[i];
        chain.push(i);
    }
    chain.reverse();
    let mut path = vec![*from];
    path.extend(chain.into_iter().map(node));
    path.push(*to);
    Some(path)
}

/// Plans an admissible polyline from `from` to `to` for integrating `form`.
pub fn plan_path(
    form: &OneForm,
    sbox: &SampleBox,
    from: Point,
    to: Point,
) -> Result<Vec<Point>, QuadError> {
    let vars = form.vars();
    for v in Var::JET {
        if !vars.contains(&v) && from.get(v) != to.get(v) {
            return Err(QuadError::FiberMismatch(
                from.get(v).unwrap(),
                to.get(v).unwrap(),
            ));
        }
    }
    for p in [from, to] {
        if !admissible_point(sbox, &vars, &p) {
            return Err(QuadError::Inadmissible(p));
        }
    }
    if from == to {
        return Ok(vec![from]);
    }
    let straight = vec![from, to];
    if admissible_path(sbox, &vars, &straight) {
        return Ok(straight);
    }
    for order in permutations(&vars) {
        let p = staircase(&order, &from, &to);
        if admissible_path(sbox, &vars, &p) {
            return Ok(p);
        }
    }
    grid_path(sbox, &vars, &from, &to).ok_or(QuadError::NoPath { from, to })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, Expr};
    use crate::sample::Interval;

    fn form3() -> OneForm {
        OneForm::new(Var::JET.map(|v| (v, Expr::one())))
    }

    #[test]
    fn straight_when_possible() {
        let b = SampleBox::jet(
            Interval::new(0.0, 1.0),
            Interval::new(0.5, 2.0),
            Interval::new(-1.0, 1.0),
        );
        let p = plan_path(
            &form3(),
            &b,
            Point::new(0.0, 1.0, 0.0),
            Point::new(1.0, 2.0, 1.0),
        )
        .unwrap();
        assert_eq!(p.len(), 2);
    }

    #[test]
    fn detours_around_an_excluded_slab() {
        // ux = 0 is only crossable where u > 1.
        let b = SampleBox::jet(
            Interval::new(0.0, 1.0),
            Interval::new(0.5, 2.0),
            Interval::new(-1.0, 1.0),
        )
        .requiring_positive(parse("ux^2 + u - 1").unwrap());
        let from = Point::new(0.5, 0.6, -0.8);
        let to = Point::new(0.5, 0.6, 0.8);
        let p = plan_path(&form3(), &b, from, to).unwrap();
        assert!(p.len() > 2);
        assert!(admissible_path(&b, &form3().vars(), &p));
    }

    #[test]
    fn fibre_mismatch_is_rejected() {
        let b = SampleBox::jet(
            Interval::new(0.0, 1.0),
            Interval::new(0.5, 2.0),
            Interval::new(-1.0, 1.0),
        );
        let f = OneForm::new([(Var::U, Expr::one())]);
        let r = plan_path(&f, &b, Point::new(0.0, 1.0, 0.0), Point::new(0.5, 1.0, 0.0));
        assert!(matches!(r, Err(QuadError::FiberMismatch(..))));
    }

    #[test]
    fn inadmissible_endpoint() {
        let b = SampleBox::jet(
            Interval::new(0.0, 1.0),
            Interval::new(-1.0, 1.0),
            Interval::new(-1.0, 1.0),
        )
        .excluding(Expr::u());
        let r = plan_path(
            &form3(),
            &b,
            Point::new(0.0, 0.0, 0.0),
            Point::new(0.5, 1.0, 0.0),
        );
        assert!(matches!(r, Err(QuadError::Inadmissible(_))));
    }
}
