//! Isomorphism testing by extending a generator assignment along the Cayley
//! graph. Exhaustive in the images of the generators, so intended for small
//! groups.

use super::FiniteGroup;

/// Cheap invariants that every isomorphism preserves.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    order: usize,
    abelian: bool,
    center: usize,
    class_sizes: Vec<usize>,
    /// `(element order, centralizer size)` pairs, sorted.
    profile: Vec<(usize, usize)>,
}

pub fn fingerprint(g: &FiniteGroup) -> Fingerprint {
    let mut class_sizes: Vec<usize> = g.conjugacy_classes().iter().map(|c| c.len()).collect();
    class_sizes.sort_unstable();
    let mut profile: Vec<(usize, usize)> = (0..g.order())
        .map(|f| {
            let centralizer = (0..g.order()).filter(|&h| g.commutes(f, h)).count();
            (g.element_order(f), centralizer)
        })
        .collect();
    profile.sort_unstable();
    Fingerprint {
        order: g.order(),
        abelian: g.is_abelian(),
        center: g.center().len(),
        class_sizes,
        profile,
    }
}

/// An isomorphism `a → b` as an image table, if one exists.
pub fn find_isomorphism(a: &FiniteGroup, b: &FiniteGroup) -> Option<Vec<usize>> {
    if fingerprint(a) != fingerprint(b) {
        return None;
    }
    let gens = a.generators();
    let candidates: Vec<Vec<usize>> = gens
        .iter()
        .map(|&x| {
            let k = a.element_order(x);
            (0..b.order()).filter(|&y| b.element_order(y) == k).collect()
        })
        .collect();
    let mut images = vec![0usize; gens.len()];
    search(a, b, &gens, &candidates, &mut images, 0)
}

fn search(
    a: &FiniteGroup,
    b: &FiniteGroup,
    gens: &[usize],
    candidates: &[Vec<usize>],
    images: &mut Vec<usize>,
    depth: usize,
) -> Option<Vec<usize>> {
    if depth == gens.len() {
        return extend(a, b, gens, images);
    }
    for &y in &candidates[depth] {
        images[depth] = y;
        if let Some(map) = search(a, b, gens, candidates, images, depth + 1) {
            return Some(map);
        }
    }
    None
}

/// Breadth-first extension `φ(x·g_i) = φ(x)·h_i`; consistency on every
/// Cayley-graph edge makes `φ` a homomorphism.
fn extend(a: &FiniteGroup, b: &FiniteGroup, gens: &[usize], images: &[usize]) -> Option<Vec<usize>> {
    let mut map = vec![usize::MAX; a.order()];
    let mut used = vec![false; b.order()];
    map[a.identity()] = b.identity();
    used[b.identity()] = true;
    let mut queue = vec![a.identity()];
    let mut head = 0;
    while head < queue.len() {
        let x = queue[head];
        head += 1;
        for (&g, &h) in gens.iter().zip(images) {
            let y = a.mul(x, g);
            let img = b.mul(map[x], h);
            if map[y] == usize::MAX {
                if used[img] {
                    return None;
                }
                map[y] = img;
                used[img] = true;
                queue.push(y);
            } else if map[y] != img {
                return None;
            }
        }
    }
    (queue.len() == a.order()).then_some(map)
}

pub fn are_isomorphic(a: &FiniteGroup, b: &FiniteGroup) -> bool {
    find_isomorphism(a, b).is_some()
}
