use super::{governing_block, Matrix, ModelError, QbdModel, Region};

/// Finite generator on levels `0..=n1 × 0..=n2`, states ordered by `l1`, then
/// `l2`, then phase.
#[derive(Debug, Clone)]
pub struct TruncatedGenerator {
    generator: Matrix,
    caps: (usize, usize),
    offsets: Vec<usize>,
}

impl TruncatedGenerator {
    pub fn generator(&self) -> &Matrix {
        &self.generator
    }

    pub fn into_generator(self) -> Matrix {
        self.generator
    }

    pub fn caps(&self) -> (usize, usize) {
        self.caps
    }

    pub fn len(&self) -> usize {
        self.generator.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Index of the first phase at level `(l1, l2)`.
    pub fn offset(&self, l1: usize, l2: usize) -> usize {
        self.offsets[l1 * (self.caps.1 + 1) + l2]
    }

    pub fn index(&self, l1: usize, l2: usize, phase: usize) -> usize {
        self.offset(l1, l2) + phase
    }

    /// `(l1, l2, phase)` of a state index.
    pub fn state(&self, index: usize) -> (usize, usize, usize) {
        let level = self.offsets.partition_point(|&o| o <= index) - 1;
        let w = self.caps.1 + 1;
        (level / w, level % w, index - self.offsets[level])
    }
}

/// Places every block per the level rule on a finite level box. Transitions
/// that would leave the box are folded back into the diagonal, so every row
/// still sums to zero.
pub fn assemble_truncated_generator(
    model: &QbdModel,
    n1: usize,
    n2: usize,
) -> Result<TruncatedGenerator, ModelError> {
    if n1 < 2 || n2 < 2 {
        return Err(ModelError::TruncationTooSmall(n1, n2));
    }
    let layout = model.layout();
    let mut offsets = Vec::with_capacity((n1 + 1) * (n2 + 1) + 1);
    let mut total = 0;
    for l1 in 0..=n1 {
        for l2 in 0..=n2 {
            offsets.push(total);
            total += layout.phases(Region::at(l1 as i64, l2 as i64));
        }
    }
    offsets.push(total);

    let at = |l1: i64, l2: i64| offsets[l1 as usize * (n2 + 1) + l2 as usize];
    let mut g = Matrix::zeros(total, total);
    for l1 in 0..=n1 as i64 {
        for l2 in 0..=n2 as i64 {
            let row = at(l1, l2);
            for k1 in -1..=1 {
                for k2 in -1..=1 {
                    let Some(key) = governing_block(l1, l2, k1, k2) else { continue };
                    let block = model.block(key);
                    let (d1, d2) = (l1 + k1, l2 + k2);
                    if d1 <= n1 as i64 && d2 <= n2 as i64 {
                        let col = at(d1, d2);
                        let mut view = g.view_mut((row, col), block.shape());
                        view += block;
                    } else {
                        for i in 0..block.nrows() {
                            g[(row + i, row + i)] += block.row(i).sum();
                        }
                    }
                }
            }
        }
    }

    Ok(TruncatedGenerator {
        generator: g,
        caps: (n1, n2),
        offsets,
    })
}
