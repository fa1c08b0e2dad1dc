//! Server-assignment rules of the two-queue model with a shared server.
//!
//! A server configuration is `(j1, j2, j3)`: `j1 ∈ {0,1}` is the queue-1
//! server, `j2 ∈ {0,2}` the queue-2 server, `j3 ∈ {0,1,2}` the shared server
//! (idle, on queue 1, on queue 2). Arrivals go to their own idle server first,
//! then to an idle shared server. A freed shared server takes a waiting
//! queue-1 customer before a waiting queue-2 customer.

use super::{BlockKey, Matrix, PhaseLayout, Region};

type Config = (u8, u8, u8);

const ORIGIN: [Config; 8] = [
    (0, 0, 0),
    (1, 0, 0),
    (0, 0, 1),
    (0, 2, 0),
    (0, 0, 2),
    (1, 2, 0),
    (0, 2, 1),
    (1, 0, 2),
];
const AXIS1: [Config; 3] = [(1, 0, 1), (1, 2, 1), (1, 0, 2)];
const AXIS2: [Config; 3] = [(0, 2, 2), (1, 2, 2), (0, 2, 1)];
const INTERIOR: [Config; 2] = [(1, 2, 1), (1, 2, 2)];

fn phases(region: Region) -> &'static [Config] {
    match region {
        Region::Origin => &ORIGIN,
        Region::Axis1 => &AXIS1,
        Region::Axis2 => &AXIS2,
        Region::Interior => &INTERIOR,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct System {
    n1: i64,
    n2: i64,
    servers: Config,
}

impl System {
    fn from_state(l1: i64, l2: i64, phase: usize) -> System {
        let servers = phases(Region::at(l1, l2))[phase];
        let (j1, j2, j3) = servers;
        let n1 = if l1 > 0 { l1 + 1 } else { (j1 == 1) as i64 + (j3 == 1) as i64 };
        let n2 = if l2 > 0 { l2 + 1 } else { (j2 == 2) as i64 + (j3 == 2) as i64 };
        System { n1, n2, servers }
    }

    fn state(&self) -> (i64, i64, usize) {
        let l1 = (self.n1 - 1).max(0);
        let l2 = (self.n2 - 1).max(0);
        let phase = phases(Region::at(l1, l2))
            .iter()
            .position(|c| *c == self.servers)
            .unwrap_or_else(|| panic!("server configuration {:?} unreachable at {:?}", self.servers, (l1, l2)));
        (l1, l2, phase)
    }

    fn waiting1(&self) -> i64 {
        let (j1, _, j3) = self.servers;
        self.n1 - (j1 == 1) as i64 - (j3 == 1) as i64
    }

    fn waiting2(&self) -> i64 {
        let (_, j2, j3) = self.servers;
        self.n2 - (j2 == 2) as i64 - (j3 == 2) as i64
    }
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct ServerPool {
    lambda1: f64,
    lambda2: f64,
    mu1: f64,
    mu2: f64,
}

impl ServerPool {
    pub(crate) fn new(lambda1: f64, lambda2: f64, mu1: f64, mu2: f64) -> Self {
        Self { lambda1, lambda2, mu1, mu2 }
    }

    fn events(&self, s: System) -> Vec<(f64, System)> {
        let (j1, j2, j3) = s.servers;
        let mut out = Vec::with_capacity(5);

        let mut a = s;
        a.n1 += 1;
        if j1 == 0 {
            a.servers.0 = 1;
        } else if j3 == 0 {
            a.servers.2 = 1;
        }
        out.push((self.lambda1, a));

        let mut a = s;
        a.n2 += 1;
        if j2 == 0 {
            a.servers.1 = 2;
        } else if j3 == 0 {
            a.servers.2 = 2;
        }
        out.push((self.lambda2, a));

        if j1 == 1 {
            let mut d = s;
            d.n1 -= 1;
            d.servers.0 = 0;
            if d.waiting1() > 0 {
                d.servers.0 = 1;
            }
            out.push((self.mu1, d));
        }
        if j2 == 2 {
            let mut d = s;
            d.n2 -= 1;
            d.servers.1 = 0;
            if d.waiting2() > 0 {
                d.servers.1 = 2;
            }
            out.push((self.mu2, d));
        }
        if j3 != 0 {
            let mut d = s;
            let rate = if j3 == 1 {
                d.n1 -= 1;
                self.mu1
            } else {
                d.n2 -= 1;
                self.mu2
            };
            d.servers.2 = 0;
            if d.waiting1() > 0 {
                d.servers.2 = 1;
            } else if d.waiting2() > 0 {
                d.servers.2 = 2;
            }
            out.push((rate, d));
        }
        out
    }

    /// Generates block `key` by enumerating every event out of each phase at
    /// the block's representative source level.
    pub(crate) fn block(&self, key: BlockKey, layout: &PhaseLayout) -> Matrix {
        let (rows, cols) = super::block_shape(key, layout);
        let (l1, l2) = key.representative_source();
        let mut out = Matrix::zeros(rows, cols);
        for i in 0..rows {
            let from = System::from_state(l1, l2, i);
            for (rate, to) in self.events(from) {
                let (d1, d2, j) = to.state();
                if (d1, d2, j) == (l1, l2, i) {
                    continue;
                }
                if key.k1() == 0 && key.k2() == 0 {
                    out[(i, i)] -= rate;
                }
                if (d1 - l1, d2 - l2) == (key.k1(), key.k2()) {
                    out[(i, j)] += rate;
                }
            }
        }
        out
    }
}
