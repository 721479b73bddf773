//! Constructors for the group families in the built-in catalog.

use std::collections::HashMap;

use super::extension::{central_extension, pauli_factor_system};
use super::FiniteGroup;

pub fn trivial() -> FiniteGroup {
    cyclic(1)
}

pub fn cyclic(n: usize) -> FiniteGroup {
    FiniteGroup::from_fn(format!("C{n}"), n, 0, |a, b| (a + b) % n).expect("cyclic group")
}

/// `C_{n1} × C_{n2} × …`, element `(i1, i2, …)` at mixed-radix index.
pub fn abelian(factors: &[usize]) -> FiniteGroup {
    let name = factors
        .iter()
        .map(|n| format!("C{n}"))
        .collect::<Vec<_>>()
        .join("x");
    let mut g = cyclic(1);
    for &n in factors {
        g = g.direct_product(&cyclic(n), "");
    }
    g.with_name(name)
}

/// `⟨a, b | aⁿ = 1, bᵐ = aᵗ, b a b⁻¹ = aᵏ⟩`, element `aⁱbʲ` at `j·n + i`.
pub fn metacyclic(name: &str, n: usize, m: usize, t: usize, k: usize) -> FiniteGroup {
    let kpow: Vec<usize> = (0..m).scan(1usize, |acc, _| {
        let v = *acc;
        *acc = (*acc * k) % n;
        Some(v)
    })
    .collect();
    FiniteGroup::from_fn(name, n * m, 0, |x, y| {
        let (i1, j1) = (x % n, x / n);
        let (i2, j2) = (y % n, y / n);
        let mut i = i1 + i2 * kpow[j1];
        let mut j = j1 + j2;
        if j >= m {
            j -= m;
            i += t;
        }
        j * n + i % n
    })
    .unwrap_or_else(|e| panic!("metacyclic {name}: {e}"))
}

/// Dihedral group of order `2n`.
pub fn dihedral(n: usize) -> FiniteGroup {
    metacyclic(&format!("D{n}"), n, 2, 0, n - 1)
}

pub fn quaternion8() -> FiniteGroup {
    metacyclic("Q8", 4, 2, 2, 3)
}

/// `N ⋊ H` with `(n₁,h₁)(n₂,h₂) = (n₁·φ_{h₁}(n₂), h₁h₂)`, element at `h·|N| + n`.
pub fn semidirect(
    name: &str,
    normal: &FiniteGroup,
    acting: &FiniteGroup,
    action: impl Fn(usize, usize) -> usize,
) -> FiniteGroup {
    let m = normal.order();
    FiniteGroup::from_fn(name, m * acting.order(), acting.identity() * m + normal.identity(), |x, y| {
        let (n1, h1) = (x % m, x / m);
        let (n2, h2) = (y % m, y / m);
        acting.mul(h1, h2) * m + normal.mul(n1, action(h1, n2))
    })
    .unwrap_or_else(|e| panic!("semidirect {name}: {e}"))
}

/// Closure of permutation generators under composition `(p·q)(x) = p(q(x))`;
/// element 0 is the identity permutation.
pub fn from_permutations(name: &str, gens: &[Vec<usize>]) -> FiniteGroup {
    let degree = gens[0].len();
    let id: Vec<usize> = (0..degree).collect();
    let mut elements = vec![id.clone()];
    let mut index: HashMap<Vec<usize>, usize> = HashMap::from([(id, 0)]);
    let mut cursor = 0;
    while cursor < elements.len() {
        for g in gens {
            let p: Vec<usize> = (0..degree).map(|x| elements[cursor][g[x]]).collect();
            if !index.contains_key(&p) {
                index.insert(p.clone(), elements.len());
                elements.push(p);
            }
        }
        cursor += 1;
    }
    FiniteGroup::from_fn(name, elements.len(), 0, |a, b| {
        let p: Vec<usize> = (0..degree).map(|x| elements[a][elements[b][x]]).collect();
        index[&p]
    })
    .expect("permutation group")
}

pub fn symmetric(n: usize) -> FiniteGroup {
    let transposition: Vec<usize> = (0..n).map(|x| match x {
        0 => 1,
        1 => 0,
        _ => x,
    })
    .collect();
    let cycle: Vec<usize> = (0..n).map(|x| (x + 1) % n).collect();
    from_permutations(&format!("S{n}"), &[transposition, cycle])
}

pub fn alternating4() -> FiniteGroup {
    from_permutations("A4", &[vec![1, 2, 0, 3], vec![0, 2, 3, 1]])
}

/// Heisenberg group over `Z_d`: `(m, a, b)` with `(a,b)(a',b')` picking up `m += a·b'`.
pub fn heisenberg(d: usize) -> FiniteGroup {
    let base = abelian(&[d, d]);
    let exps: Vec<u32> = (0..d * d)
        .flat_map(|f| (0..d * d).map(move |g| ((f / d) * (g % d) % d) as u32))
        .collect();
    central_extension(&base, &exps, d as u32)
        .expect("Heisenberg cocycle is bilinear")
        .with_name(format!("Heis{d}"))
}

/// The group generated by the Pauli matrices (with phases `iᵏ`), order 16.
pub fn pauli16() -> FiniteGroup {
    let base = abelian(&[2, 2]);
    let fs = pauli_factor_system(&base);
    central_extension(&base, fs.exponents().expect("exact exponents"), 4)
        .expect("Pauli cocycle")
        .with_name("Pauli16")
}

/// `(C4 × C2) ⋊ C2` with `c a c⁻¹ = ab`, `c b c⁻¹ = b`.
pub fn c4xc2_semidirect_c2() -> FiniteGroup {
    let normal = abelian(&[4, 2]);
    let acting = cyclic(2);
    semidirect("(C4xC2):C2", &normal, &acting, |h, n| {
        if h == 0 {
            n
        } else {
            let (x, y) = (n / 2, n % 2);
            x * 2 + (y + x) % 2
        }
    })
}
