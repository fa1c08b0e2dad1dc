use super::servers::ServerPool;
use super::{check_rate, BlockKey, BlockSet, Matrix, ModelError, PhaseLayout, QbdModel};

fn m(rows: usize, cols: usize, entries: &[f64]) -> Matrix {
    Matrix::from_row_slice(rows, cols, entries)
}

fn eye(n: usize, scale: f64) -> Matrix {
    Matrix::identity(n, n) * scale
}

/// Single-server two-class non-preemptive priority queue with setup times.
///
/// Phases: on the l1-axis `{serving 1, setting up 1}`, on the l2-axis
/// `{serving 2, setting up 2}`, in the interior `{serving 1, setting up 1,
/// serving 2, setting up 2}`; the origin has the single idle phase.
pub fn build_priority_setup(
    lambda1: f64,
    lambda2: f64,
    mu1: f64,
    mu2: f64,
    gamma1: f64,
    gamma2: f64,
) -> Result<QbdModel, ModelError> {
    let l1 = check_rate("lambda1", lambda1)?;
    let l2 = check_rate("lambda2", lambda2)?;
    let mu1 = check_rate("mu1", mu1)?;
    let mu2 = check_rate("mu2", mu2)?;
    let g1 = check_rate("gamma1", gamma1)?;
    let g2 = check_rate("gamma2", gamma2)?;
    let l = l1 + l2;

    let mut b = BlockSet::zeros(PhaseLayout::new(1, 2, 2, 4)?);
    #[rustfmt::skip]
    b.set(BlockKey::plus(-1, 0), m(4, 4, &[
        mu1, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
    ]))?
    .set(BlockKey::plus(0, 0), m(4, 4, &[
        -(l + mu1), 0.0, 0.0, 0.0,
        g1, -(l + g1), 0.0, 0.0,
        0.0, 0.0, -(l + mu2), 0.0,
        0.0, 0.0, g2, -(l + g2),
    ]))?
    .set(BlockKey::plus(0, -1), m(4, 4, &[
        0.0, 0.0, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
        0.0, mu2, 0.0, 0.0,
        0.0, 0.0, 0.0, 0.0,
    ]))?
    .set(BlockKey::plus(1, 0), eye(4, l1))?
    .set(BlockKey::plus(0, 1), eye(4, l2))?;

    #[rustfmt::skip]
    b.set(BlockKey::axis1(0, -1), m(4, 2, &[
        0.0, 0.0,
        0.0, 0.0,
        0.0, mu2,
        0.0, 0.0,
    ]))?
    .set(BlockKey::axis1(-1, 0), m(2, 2, &[mu1, 0.0, 0.0, 0.0]))?
    .set(BlockKey::axis1(0, 0), m(2, 2, &[-(l + mu1), 0.0, g1, -(l + g1)]))?
    .set(BlockKey::axis1(0, 1), m(2, 4, &[
        l2, 0.0, 0.0, 0.0,
        0.0, l2, 0.0, 0.0,
    ]))?
    .set(BlockKey::axis1(1, 0), eye(2, l1))?;

    #[rustfmt::skip]
    b.set(BlockKey::axis2(-1, 0), m(4, 2, &[
        0.0, mu1,
        0.0, 0.0,
        0.0, 0.0,
        0.0, 0.0,
    ]))?
    .set(BlockKey::axis2(0, 0), m(2, 2, &[-(l + mu2), 0.0, g2, -(l + g2)]))?
    .set(BlockKey::axis2(0, -1), m(2, 2, &[mu2, 0.0, 0.0, 0.0]))?
    .set(BlockKey::axis2(1, 0), m(2, 4, &[
        0.0, 0.0, l1, 0.0,
        0.0, 0.0, 0.0, l1,
    ]))?
    .set(BlockKey::axis2(0, 1), eye(2, l2))?;

    b.set(BlockKey::origin(-1, 0), m(2, 1, &[mu1, 0.0]))?
        .set(BlockKey::origin(0, 0), m(1, 1, &[-l]))?
        .set(BlockKey::origin(0, -1), m(2, 1, &[mu2, 0.0]))?
        .set(BlockKey::origin(1, 0), m(1, 2, &[0.0, l1]))?
        .set(BlockKey::origin(0, 1), m(1, 2, &[0.0, l2]))?;

    b.build("priority-setup")
}

/// Two M/M/1 queues plus a shared server that prefers queue 1.
///
/// Levels are `max(0, n_i - 1)` for queue contents `n_i`. Interior and axis
/// blocks are written out directly; origin blocks are generated from the
/// server-assignment rules.
pub fn build_additional_server(
    lambda1: f64,
    lambda2: f64,
    mu1: f64,
    mu2: f64,
) -> Result<QbdModel, ModelError> {
    let l1 = check_rate("lambda1", lambda1)?;
    let l2 = check_rate("lambda2", lambda2)?;
    let mu1 = check_rate("mu1", mu1)?;
    let mu2 = check_rate("mu2", mu2)?;
    let l = l1 + l2;
    let layout = PhaseLayout::new(8, 3, 3, 2)?;

    let mut b = BlockSet::zeros(layout);
    #[rustfmt::skip]
    b.set(BlockKey::plus(-1, 0), m(2, 2, &[2.0 * mu1, 0.0, 0.0, mu1]))?
        .set(BlockKey::plus(0, 0), m(2, 2, &[
            -(l + 2.0 * mu1 + mu2), 0.0,
            0.0, -(l + mu1 + 2.0 * mu2),
        ]))?
        .set(BlockKey::plus(0, -1), m(2, 2, &[mu2, 0.0, mu2, mu2]))?
        .set(BlockKey::plus(1, 0), eye(2, l1))?
        .set(BlockKey::plus(0, 1), eye(2, l2))?;

    #[rustfmt::skip]
    b.set(BlockKey::axis1(0, 0), m(3, 3, &[
        -(l + 2.0 * mu1), l2, 0.0,
        mu2, -(l + 2.0 * mu1 + mu2), 0.0,
        mu2, 0.0, -(l + mu1 + mu2),
    ]))?
    .set(BlockKey::axis1(0, 1), m(3, 2, &[
        0.0, 0.0,
        l2, 0.0,
        0.0, l2,
    ]))?
    .set(BlockKey::axis1(-1, 0), m(3, 3, &[
        2.0 * mu1, 0.0, 0.0,
        0.0, 2.0 * mu1, 0.0,
        0.0, 0.0, mu1,
    ]))?
    .set(BlockKey::axis1(0, -1), m(2, 3, &[
        0.0, mu2, 0.0,
        0.0, mu2, mu2,
    ]))?
    .set(BlockKey::axis1(1, 0), eye(3, l1))?;

    // Phase 1 on the l2-axis has both the queue-2 server and the shared
    // server working queue 2, so it leaves at 2·mu2.
    #[rustfmt::skip]
    b.set(BlockKey::axis2(0, 0), m(3, 3, &[
        -(l + 2.0 * mu2), l1, 0.0,
        mu1, -(l + mu1 + 2.0 * mu2), 0.0,
        mu1, 0.0, -(l + mu1 + mu2),
    ]))?
    .set(BlockKey::axis2(1, 0), m(3, 2, &[
        0.0, 0.0,
        0.0, l1,
        l1, 0.0,
    ]))?
    .set(BlockKey::axis2(0, -1), m(3, 3, &[
        2.0 * mu2, 0.0, 0.0,
        0.0, 2.0 * mu2, 0.0,
        0.0, 0.0, mu2,
    ]))?
    .set(BlockKey::axis2(-1, 0), m(2, 3, &[
        0.0, mu1, mu1,
        0.0, mu1, 0.0,
    ]))?
    .set(BlockKey::axis2(0, 1), eye(3, l2))?;

    let pool = ServerPool::new(l1, l2, mu1, mu2);
    for key in BlockKey::all().filter(|k| k.region() == super::Region::Origin) {
        b.set(key, pool.block(key, &layout))?;
    }

    b.build("additional-server")
}

/// Two independent M/M/1 queues with a single phase everywhere.
pub fn build_independent_pair(
    lambda1: f64,
    lambda2: f64,
    mu1: f64,
    mu2: f64,
) -> Result<QbdModel, ModelError> {
    let l1 = check_rate("lambda1", lambda1)?;
    let l2 = check_rate("lambda2", lambda2)?;
    let mu1 = check_rate("mu1", mu1)?;
    let mu2 = check_rate("mu2", mu2)?;
    let s = |v: f64| Matrix::from_element(1, 1, v);

    let mut b = BlockSet::zeros(PhaseLayout::new(1, 1, 1, 1)?);
    b.set(BlockKey::plus(1, 0), s(l1))?
        .set(BlockKey::plus(0, 1), s(l2))?
        .set(BlockKey::plus(-1, 0), s(mu1))?
        .set(BlockKey::plus(0, -1), s(mu2))?
        .set(BlockKey::plus(0, 0), s(-(l1 + l2 + mu1 + mu2)))?;
    b.set(BlockKey::axis1(1, 0), s(l1))?
        .set(BlockKey::axis1(0, 1), s(l2))?
        .set(BlockKey::axis1(-1, 0), s(mu1))?
        .set(BlockKey::axis1(0, -1), s(mu2))?
        .set(BlockKey::axis1(0, 0), s(-(l1 + l2 + mu1)))?;
    b.set(BlockKey::axis2(1, 0), s(l1))?
        .set(BlockKey::axis2(0, 1), s(l2))?
        .set(BlockKey::axis2(-1, 0), s(mu1))?
        .set(BlockKey::axis2(0, -1), s(mu2))?
        .set(BlockKey::axis2(0, 0), s(-(l1 + l2 + mu2)))?;
    b.set(BlockKey::origin(1, 0), s(l1))?
        .set(BlockKey::origin(0, 1), s(l2))?
        .set(BlockKey::origin(-1, 0), s(mu1))?
        .set(BlockKey::origin(0, -1), s(mu2))?
        .set(BlockKey::origin(0, 0), s(-(l1 + l2)))?;

    b.build("independent-pair")
}
