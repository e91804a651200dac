//! Small graphs shared by the unit tests.

use crate::graph::MetricGraph;
use crate::rational::Rational;

/// Two vertices `u`, `v` joined by `n` parallel edges `e1..en` with the
/// given integer lengths. Genus `n - 1`.
pub fn banana(n: usize, lengths: &[i64]) -> MetricGraph {
    assert_eq!(lengths.len(), n);
    let edges = (0..n)
        .map(|i| {
            (
                format!("e{}", i + 1),
                "u".to_string(),
                "v".to_string(),
                Rational::from_int(lengths[i]),
            )
        })
        .collect();
    MetricGraph::new(vec!["u".into(), "v".into()], edges).unwrap()
}

/// A chain of `g` circles with the given circumferences, sharing
/// consecutive cut vertices `x1..x(g-1)`: the two end circles are loops,
/// every middle circle is a pair of equal parallel arcs. Genus `g`.
pub fn chain(g: usize, circumferences: &[i64]) -> MetricGraph {
    assert!(g >= 2);
    assert_eq!(circumferences.len(), g);
    let vertices: Vec<String> = (1..g).map(|i| format!("x{i}")).collect();
    let mut edges = vec![(
        "c1".to_string(),
        "x1".to_string(),
        "x1".to_string(),
        Rational::from_int(circumferences[0]),
    )];
    for i in 2..g {
        let half = Rational::new(circumferences[i - 1], 2);
        for arc in ["a", "b"] {
            edges.push((
                format!("c{i}{arc}"),
                format!("x{}", i - 1),
                format!("x{i}"),
                half.clone(),
            ));
        }
    }
    edges.push((
        format!("c{g}"),
        format!("x{}", g - 1),
        format!("x{}", g - 1),
        Rational::from_int(circumferences[g - 1]),
    ));
    MetricGraph::new(vertices, edges).unwrap()
}

/// The complete graph on `a`, `b`, `c`, `d` with unit lengths. Genus 3,
/// not hyperelliptic.
pub fn k4() -> MetricGraph {
    let names = ["a", "b", "c", "d"];
    let mut edges = Vec::new();
    for i in 0..4 {
        for j in (i + 1)..4 {
            edges.push((
                format!("{}{}", names[i], names[j]),
                names[i].to_string(),
                names[j].to_string(),
                Rational::one(),
            ));
        }
    }
    MetricGraph::new(names.iter().map(|s| s.to_string()).collect(), edges).unwrap()
}

/// One vertex `x` with a loop of length 2. Genus 1.
pub fn circle() -> MetricGraph {
    MetricGraph::new(
        vec!["x".into()],
        vec![("loop".into(), "x".into(), "x".into(), Rational::from_int(2))],
    )
    .unwrap()
}

/// Two vertices joined by a single unit edge. Genus 0.
pub fn segment() -> MetricGraph {
    MetricGraph::new(
        vec!["s".into(), "t".into()],
        vec![("st".into(), "s".into(), "t".into(), Rational::one())],
    )
    .unwrap()
}

/// Loops of length 2 at `a` and at `b`, joined by a unit bridge `mid`.
/// Genus 2; hyperelliptic after contracting the bridge.
pub fn two_circles_with_bridge() -> MetricGraph {
    MetricGraph::new(
        vec!["a".into(), "b".into()],
        vec![
            ("ca".into(), "a".into(), "a".into(), Rational::from_int(2)),
            ("mid".into(), "a".into(), "b".into(), Rational::one()),
            ("cb".into(), "b".into(), "b".into(), Rational::from_int(2)),
        ],
    )
    .unwrap()
}
