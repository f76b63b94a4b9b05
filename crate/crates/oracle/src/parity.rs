use crate::{subsets, Digits};

/// The parity color of two distinct, eventually equal sequences.
pub fn parity(x: &Digits, y: &Digits) -> Option<u8> {
    let d = x.diff(y)?;
    let delta = *d.last()? + 1;
    let ones = (0..delta).filter(|&n| x.bit(n)).count() + (0..delta).filter(|&n| y.bit(n)).count();
    Some(if ones % 2 == 0 { 1 } else { 2 })
}

/// The first triple of `points` whose three pairs all have color 2.
pub fn find_color2_triple(points: &[Digits]) -> Option<[usize; 3]> {
    subsets(points.len(), 3).into_iter().find_map(|t| {
        let two = |i: usize, j: usize| parity(&points[t[i]], &points[t[j]]) == Some(2);
        (two(0, 1) && two(0, 2) && two(1, 2)).then(|| [t[0], t[1], t[2]])
    })
}

/// Labels for the blocks of the relation generated by color 1, numbered in
/// order of first appearance.
pub fn component_labels(points: &[Digits]) -> Vec<usize> {
    let mut parent: Vec<usize> = (0..points.len()).collect();
    fn root(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            if parity(&points[i], &points[j]) == Some(1) {
                let (a, b) = (root(&mut parent, i), root(&mut parent, j));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut names: Vec<Option<usize>> = vec![None; points.len()];
    let mut next = 0;
    (0..points.len())
        .map(|i| {
            let r = root(&mut parent, i);
            *names[r].get_or_insert_with(|| {
                next += 1;
                next - 1
            })
        })
        .collect()
}

/// Whether two samples share a block exactly when their flip differences
/// from the first sample have sizes of equal parity.
pub fn parity_blocks_match(points: &[Digits], labels: &[usize]) -> bool {
    let Some(anchor) = points.first() else { return true };
    let sizes: Vec<Option<usize>> = points.iter().map(|p| anchor.diff(p).map(|d| d.len() % 2)).collect();
    (0..points.len()).all(|i| {
        (0..points.len()).all(|j| match (sizes[i], sizes[j]) {
            (Some(a), Some(b)) => (a == b) == (labels[i] == labels[j]),
            _ => false,
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbit;

    fn d(s: &str) -> Digits {
        Digits::parse(s).unwrap()
    }

    #[test]
    fn parity_examples() {
        assert_eq!(parity(&d("e|0"), &d("1|0")), Some(2));
        assert_eq!(parity(&d("e|0"), &d("11|0")), Some(1));
        assert_eq!(parity(&d("e|0"), &d("e|0")), None);
        assert_eq!(parity(&d("e|0"), &d("e|1")), None);
    }

    #[test]
    fn orbit_has_two_blocks_and_no_triple() {
        let pts = orbit(&d("e|01"), 32);
        assert_eq!(find_color2_triple(&pts), None);
        let labels = component_labels(&pts);
        assert_eq!(labels.iter().max(), Some(&1));
        assert!(parity_blocks_match(&pts, &labels));
    }
}
