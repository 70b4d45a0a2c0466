//! Built-in algebras.
//!
//! Vector examples over `Z_2` encode a vector `(x_1, ..., x_k)` as the binary
//! number `x_1 x_2 ... x_k`, first coordinate most significant: `(a,b,c)` is
//! `4a + 2b + c` and `(a,b)` is `2a + b`. Elements of a product `B x C` are
//! encoded as `|C| * b + c`.

use crate::algebra::{FiniteAlgebra, Operation};
use crate::error::{Error, Result};
use crate::Elem;

pub const BUILTIN_NAMES: &[&str] = &[
    "example_A",
    "example_A_bar",
    "example_B",
    "example_C",
    "example_BxC",
    "z2_group",
    "z3_group",
    "z4_group",
    "two_element_lattice",
    "two_element_boolean",
    "two_element_bare_set",
];

pub fn builtin(name: &str) -> Result<FiniteAlgebra> {
    Ok(match name {
        "example_A" => example_a(),
        "example_A_bar" => example_a_bar(),
        "example_B" => example_b(),
        "example_C" => example_c(),
        "example_BxC" => example_bxc(),
        "z2_group" => z2_group(),
        "z3_group" => z3_group(),
        "z4_group" => z4_group(),
        "two_element_lattice" => two_element_lattice(),
        "two_element_boolean" => two_element_boolean(),
        "two_element_bare_set" => two_element_bare_set(),
        _ => {
            return Err(Error::UnknownBuiltin {
                name: name.to_string(),
                available: BUILTIN_NAMES.join(", "),
            })
        }
    })
}

pub fn all() -> Vec<FiniteAlgebra> {
    BUILTIN_NAMES
        .iter()
        .map(|n| builtin(n).expect("builtin names are valid"))
        .collect()
}

/// Square matrix over `Z_2`, rows listed top to bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Z2Matrix<const N: usize>(pub [[u8; N]; N]);

impl<const N: usize> Z2Matrix<N> {
    pub fn mul_vec(&self, v: [u8; N]) -> [u8; N] {
        let mut out = [0u8; N];
        for (o, row) in out.iter_mut().zip(&self.0) {
            *o = row.iter().zip(&v).map(|(a, b)| a & b).fold(0, |x, y| x ^ y);
        }
        out
    }
}

pub fn vec_to_elem<const N: usize>(v: [u8; N]) -> Elem {
    v.iter().fold(0, |acc, &b| acc * 2 + b as Elem)
}

pub fn elem_to_vec<const N: usize>(e: Elem) -> [u8; N] {
    let mut out = [0u8; N];
    for (i, o) in out.iter_mut().enumerate() {
        *o = ((e >> (N - 1 - i)) & 1) as u8;
    }
    out
}

fn add<const N: usize>(u: [u8; N], v: [u8; N]) -> [u8; N] {
    let mut out = [0u8; N];
    for i in 0..N {
        out[i] = u[i] ^ v[i];
    }
    out
}

fn bit_names(bits: usize) -> Vec<String> {
    (0..1usize << bits)
        .map(|e| format!("{:0width$b}", e, width = bits))
        .collect()
}

pub const F1: Z2Matrix<3> = Z2Matrix([[1, 0, 0], [0, 1, 0], [1, 0, 0]]);
pub const F2: Z2Matrix<3> = Z2Matrix([[1, 0, 0], [0, 1, 0], [0, 0, 0]]);
pub const G: Z2Matrix<3> = Z2Matrix([[1, 0, 0], [1, 1, 0], [0, 0, 1]]);
pub const P: Z2Matrix<2> = Z2Matrix([[1, 0], [0, 0]]);
pub const N: Z2Matrix<2> = Z2Matrix([[0, 0], [1, 0]]);

fn star_op() -> Operation {
    Operation::from_fn("*", 8, 2, |a| {
        let u = elem_to_vec::<3>(a[0]);
        let v = elem_to_vec::<3>(a[1]);
        vec_to_elem(add(F1.mul_vec(u), F2.mul_vec(v)))
    })
}

fn g_op() -> Operation {
    Operation::from_fn("g", 8, 1, |a| {
        let v = elem_to_vec::<3>(a[0]);
        vec_to_elem(add(G.mul_vec(v), [1, 0, 0]))
    })
}

/// `Z_2^3` with `u * v = F1 u + F2 v` and `g(v) = G v + (1,0,0)`.
pub fn example_a() -> FiniteAlgebra {
    FiniteAlgebra::new("example_A", 8, vec![star_op(), g_op()])
        .and_then(|a| a.with_element_names(bit_names(3)))
        .expect("valid builtin")
}

/// `example_A` with the transposition `h` of `(1,0,0)` and `(1,0,1)`.
pub fn example_a_bar() -> FiniteAlgebra {
    let h = Operation::from_fn("h", 8, 1, |a| match a[0] {
        4 => 5,
        5 => 4,
        x => x,
    });
    FiniteAlgebra::new("example_A_bar", 8, vec![star_op(), g_op(), h])
        .and_then(|a| a.with_element_names(bit_names(3)))
        .expect("valid builtin")
}

fn f_pn(x: [u8; 2], y: [u8; 2]) -> [u8; 2] {
    add(P.mul_vec(x), N.mul_vec(y))
}

/// `V = Z_2^2` with `+`, `⊕`, 4-ary `g` and the constant `0`; `which_b`
/// selects the `B` interpretation (`+` is addition, `g` reads its first two
/// arguments) or the `C` one (`⊕` is addition, `g` reads its last two).
fn bc_factor(which_b: bool) -> FiniteAlgebra {
    let plus = Operation::from_fn("+", 4, 2, |a| {
        if which_b {
            a[0] ^ a[1]
        } else {
            0
        }
    });
    let oplus = Operation::from_fn("⊕", 4, 2, |a| {
        if which_b {
            0
        } else {
            a[0] ^ a[1]
        }
    });
    let g = Operation::from_fn("g", 4, 4, |a| {
        let v: Vec<[u8; 2]> = a.iter().map(|&e| elem_to_vec::<2>(e)).collect();
        if which_b {
            vec_to_elem(f_pn(v[0], v[1]))
        } else {
            vec_to_elem(f_pn(v[2], v[3]))
        }
    });
    let zero = Operation::new("0", 0, vec![0]);
    let name = if which_b { "example_B" } else { "example_C" };
    FiniteAlgebra::new(name, 4, vec![plus, oplus, g, zero])
        .and_then(|a| a.with_element_names(bit_names(2)))
        .expect("valid builtin")
}

pub fn example_b() -> FiniteAlgebra {
    bc_factor(true)
}

pub fn example_c() -> FiniteAlgebra {
    bc_factor(false)
}

/// Direct product of two algebras of the same signature, encoded
/// `|B| * b + c`.
pub fn product(b: &FiniteAlgebra, c: &FiniteAlgebra, name: &str) -> Result<FiniteAlgebra> {
    if b.operations().len() != c.operations().len() {
        return Err(Error::Precondition("product of algebras of different signatures".into()));
    }
    let nc = c.size();
    let size = b.size() * nc;
    let mut ops = Vec::new();
    for (ob, oc) in b.operations().iter().zip(c.operations()) {
        if ob.symbol() != oc.symbol() || ob.arity() != oc.arity() {
            return Err(Error::Precondition(format!(
                "signature mismatch at `{}` / `{}`",
                ob.symbol(),
                oc.symbol()
            )));
        }
        let mut lb = vec![0; ob.arity()];
        let mut lc = vec![0; ob.arity()];
        ops.push(Operation::from_fn(ob.symbol(), size, ob.arity(), |a| {
            for ((x, y), &e) in lb.iter_mut().zip(lc.iter_mut()).zip(a) {
                *x = e / nc as Elem;
                *y = e % nc as Elem;
            }
            ob.apply(&lb, b.size()) * nc as Elem + oc.apply(&lc, nc)
        }));
    }
    let alg = FiniteAlgebra::new(name, size, ops)?;
    match (b.element_names(), c.element_names()) {
        (Some(nb), Some(ncn)) => {
            let names = nb
                .iter()
                .flat_map(|x| ncn.iter().map(move |y| format!("({x},{y})")))
                .collect();
            alg.with_element_names(names)
        }
        _ => Ok(alg),
    }
}

pub fn example_bxc() -> FiniteAlgebra {
    product(&example_b(), &example_c(), "example_BxC").expect("valid builtin")
}

fn cyclic_group(n: usize, name: &str) -> FiniteAlgebra {
    let plus = Operation::from_fn("+", n, 2, |a| (a[0] + a[1]) % n as Elem);
    FiniteAlgebra::new(name, n, vec![plus]).expect("valid builtin")
}

/// `Z_2` with addition only.
pub fn z2_group() -> FiniteAlgebra {
    cyclic_group(2, "z2_group")
}

pub fn z3_group() -> FiniteAlgebra {
    cyclic_group(3, "z3_group")
}

pub fn z4_group() -> FiniteAlgebra {
    cyclic_group(4, "z4_group")
}

pub fn two_element_lattice() -> FiniteAlgebra {
    let meet = Operation::new("∧", 2, vec![0, 0, 0, 1]);
    let join = Operation::new("∨", 2, vec![0, 1, 1, 1]);
    FiniteAlgebra::new("two_element_lattice", 2, vec![meet, join]).expect("valid builtin")
}

pub fn two_element_boolean() -> FiniteAlgebra {
    let meet = Operation::new("∧", 2, vec![0, 0, 0, 1]);
    let join = Operation::new("∨", 2, vec![0, 1, 1, 1]);
    let neg = Operation::new("¬", 1, vec![1, 0]);
    let zero = Operation::new("0", 0, vec![0]);
    let one = Operation::new("1", 0, vec![1]);
    FiniteAlgebra::new("two_element_boolean", 2, vec![meet, join, neg, zero, one])
        .expect("valid builtin")
}

pub fn two_element_bare_set() -> FiniteAlgebra {
    FiniteAlgebra::new("two_element_bare_set", 2, vec![]).expect("valid builtin")
}

/// FNV-1a over sizes, arities and table entries.
pub fn table_checksum(alg: &FiniteAlgebra) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |x: u64| {
        for b in x.to_le_bytes() {
            h ^= b as u64;
            h = h.wrapping_mul(0x0100_0000_01b3);
        }
    };
    eat(alg.size() as u64);
    for op in alg.operations() {
        eat(op.arity() as u64);
        for &e in op.table() {
            eat(e as u64);
        }
    }
    h
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn g_of_zero_is_100() {
        let a = example_a();
        assert_eq!(a.apply("g", &[0]).unwrap(), 4);
        // g: (a,b,c) -> (a+1, a+b, c)
        for e in 0..8 {
            let [x, y, z] = elem_to_vec::<3>(e);
            assert_eq!(
                a.apply("g", &[e]).unwrap(),
                vec_to_elem([x ^ 1, x ^ y, z])
            );
        }
    }

    #[test]
    fn star_is_f1_u_plus_f2_v() {
        let a = example_a();
        for u in 0..8 {
            for v in 0..8 {
                let [a1, b1, _] = elem_to_vec::<3>(u);
                let [a2, b2, _] = elem_to_vec::<3>(v);
                assert_eq!(a.apply("*", &[u, v]).unwrap(), vec_to_elem([a1 ^ a2, b1 ^ b2, a1]));
            }
        }
    }

    #[test]
    fn a_bar_differs_only_by_h() {
        let a = example_a();
        let abar = example_a_bar();
        assert_eq!(&abar.operations()[..2], a.operations());
        let h = abar.operation("h").unwrap();
        assert_eq!(h.table(), &[0, 1, 2, 3, 5, 4, 6, 7]);
    }

    #[test]
    fn bxc_g_kills_v() {
        let bxc = example_bxc();
        // v = (0,1) -> 1; (v,0) -> 4, (0,v) -> 1
        assert_eq!(bxc.apply("g", &[4, 4, 1, 1]).unwrap(), 0);
        // f(v,v) = f(v,0) = f(0,v) = 0 on V
        let b = example_b();
        for (x, y) in [(1, 1), (1, 0), (0, 1)] {
            assert_eq!(b.apply("g", &[x, y, 0, 0]).unwrap(), 0);
        }
    }

    #[test]
    fn lattice_meet_table() {
        assert_eq!(two_element_lattice().operation("∧").unwrap().table(), &[0, 0, 0, 1]);
    }

    #[test]
    fn unknown_builtin_lists_names() {
        match builtin("nope") {
            Err(Error::UnknownBuiltin { available, .. }) => assert!(available.contains("example_A")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn tables_are_frozen() {
        let frozen = [
            ("example_A", 0x58124dbf98317b6e),
            ("example_A_bar", 0x476c29fd4c9eee2f),
            ("example_B", 0x75ee3c78926a5fa5),
            ("example_C", 0xcc049932356301a5),
            ("example_BxC", 0x39b0880116610db1),
            ("z2_group", 0x1daf4488352dc105),
            ("z3_group", 0xa5d33df748b1a887),
            ("z4_group", 0x186cf594a1777323),
            ("two_element_lattice", 0xf202dd2792bea507),
            ("two_element_boolean", 0x0b2541517ad954e6),
            ("two_element_bare_set", 0xe6bd86443df8ce07),
        ];
        assert_eq!(all().len(), frozen.len());
        for (name, sum) in frozen {
            assert_eq!(table_checksum(&builtin(name).unwrap()), sum, "{name}");
        }
    }
}
