use crate::linalg::{pauli, tensor, HermitianOperator, Pauli};

/// The six measurement contexts of the square, in the order they enter the
/// Cabello sum.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Context {
    R1,
    R2,
    R3,
    C1,
    C2,
    C3,
}

impl Context {
    pub const ALL: [Context; 6] = [Context::R1, Context::R2, Context::R3, Context::C1, Context::C2, Context::C3];

    pub fn name(self) -> &'static str {
        match self {
            Context::R1 => "R1",
            Context::R2 => "R2",
            Context::R3 => "R3",
            Context::C1 => "C1",
            Context::C2 => "C2",
            Context::C3 => "C3",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }

    /// Grid positions `(row, col)` of the three members, zero based.
    pub fn cells(self) -> [(usize, usize); 3] {
        match self {
            Context::R1 => [(0, 0), (0, 1), (0, 2)],
            Context::R2 => [(1, 0), (1, 1), (1, 2)],
            Context::R3 => [(2, 0), (2, 1), (2, 2)],
            Context::C1 => [(0, 0), (1, 0), (2, 0)],
            Context::C2 => [(0, 1), (1, 1), (2, 1)],
            Context::C3 => [(0, 2), (1, 2), (2, 2)],
        }
    }

    /// The operator product of the members: `-I` for C3, `+I` otherwise.
    pub fn product(self) -> f64 {
        if self == Context::C3 {
            -1.0
        } else {
            1.0
        }
    }

    /// Sign with which the context enters the Cabello sum.
    pub fn sign(self) -> f64 {
        self.product()
    }
}

/// The Mermin-Peres square of two-qubit observables.
#[derive(Clone, Debug)]
pub struct MerminPeresSquare {
    pub entries: [[HermitianOperator; 3]; 3],
}

impl Default for MerminPeresSquare {
    fn default() -> Self {
        Self::new()
    }
}

impl MerminPeresSquare {
    pub fn new() -> Self {
        let id = HermitianOperator::identity(2).expect("dim 2 is supported");
        let (x, y, z) = (pauli(Pauli::X), pauli(Pauli::Y), pauli(Pauli::Z));
        let t = |a: &HermitianOperator, b: &HermitianOperator| tensor(a, b).expect("2x2 fits");
        Self {
            entries: [
                [t(&x, &id), t(&id, &x), t(&x, &x)],
                [t(&id, &y), t(&y, &id), t(&y, &y)],
                [t(&x, &y), t(&y, &x), t(&z, &z)],
            ],
        }
    }

    pub fn context(&self, ctx: Context) -> [HermitianOperator; 3] {
        ctx.cells().map(|(r, c)| self.entries[r][c].clone())
    }
}

/// Cabello sum `R1 + R2 + R3 + C1 + C2 - C3` of a ±1 assignment to the nine
/// cells (row-major).
pub fn cabello_sum_of(assignment: &[i8; 9]) -> i32 {
    Context::ALL
        .iter()
        .map(|ctx| {
            let p: i32 = ctx.cells().iter().map(|&(r, c)| i32::from(assignment[3 * r + c])).product();
            p * ctx.sign() as i32
        })
        .sum()
}

fn assignments() -> impl Iterator<Item = [i8; 9]> {
    (0u32..512).map(|bits| std::array::from_fn(|i| if bits & (1 << i) != 0 { -1 } else { 1 }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassicalBound {
    pub bound: i32,
    pub maximizers: Vec<[i8; 9]>,
}

/// Maximum of the Cabello sum over all 512 non-contextual ±1 assignments.
pub fn classical_bound_bruteforce() -> ClassicalBound {
    let mut best = ClassicalBound { bound: i32::MIN, maximizers: Vec::new() };
    for a in assignments() {
        let s = cabello_sum_of(&a);
        if s > best.bound {
            best = ClassicalBound { bound: s, maximizers: vec![a] };
        } else if s == best.bound {
            best.maximizers.push(a);
        }
    }
    best
}

/// Whether some ±1 assignment makes each context's product equal the given
/// target (indexed like [`Context::ALL`]).
pub fn satisfiable_with_targets(targets: [i8; 6]) -> bool {
    assignments().any(|a| {
        Context::ALL.iter().all(|ctx| {
            let p: i8 = ctx.cells().iter().map(|&(r, c)| a[3 * r + c]).product();
            p == targets[ctx.index()]
        })
    })
}

/// True iff no ±1 assignment reproduces the operator identities of the
/// square (every product +1 except C3 = -1).
pub fn ks_obstruction_check() -> bool {
    !satisfiable_with_targets(Context::ALL.map(|c| c.product() as i8))
}
