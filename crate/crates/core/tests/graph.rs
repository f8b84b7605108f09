use proptest::prelude::*;
use synsis::graph::{karate_club, parse_edge_list, Graph};
use synsis::Error;

fn edge_text(edges: &[(usize, usize)]) -> String {
    edges.iter().map(|(a, b)| format!("n{a} n{b}\n")).collect()
}

fn labelled_edges(g: &Graph) -> Vec<(String, String)> {
    let mut out: Vec<_> = g
        .edges()
        .iter()
        .map(|&(a, b)| {
            let (x, y) = (g.label(a).to_string(), g.label(b).to_string());
            if x < y {
                (x, y)
            } else {
                (y, x)
            }
        })
        .collect();
    out.sort();
    out
}

fn edge_list() -> impl Strategy<Value = Vec<(usize, usize)>> {
    prop::collection::vec((0usize..12, 0usize..12), 1..40)
        .prop_map(|v| v.into_iter().filter(|(a, b)| a != b).collect::<Vec<_>>())
        .prop_filter("needs an edge", |v| !v.is_empty())
}

proptest! {
    #[test]
    fn reordering_and_duplicates_give_the_same_graph(
        edges in edge_list(),
        seed in any::<u64>(),
        dup in 0usize..5,
    ) {
        let g = parse_edge_list(&edge_text(&edges)).unwrap();

        let mut shuffled = edges.clone();
        let mut state = seed | 1;
        for i in (1..shuffled.len()).rev() {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            shuffled.swap(i, (state % (i as u64 + 1)) as usize);
        }
        // repeat some edges, some reversed
        for k in 0..dup.min(shuffled.len()) {
            let (a, b) = shuffled[k];
            shuffled.push((b, a));
            shuffled.push((a, b));
        }
        let h = parse_edge_list(&edge_text(&shuffled)).unwrap();

        prop_assert_eq!(g.num_nodes(), h.num_nodes());
        prop_assert_eq!(g.num_edges(), h.num_edges());
        prop_assert_eq!(labelled_edges(&g), labelled_edges(&h));
        let mut gl = g.labels().to_vec();
        let mut hl = h.labels().to_vec();
        gl.sort();
        hl.sort();
        prop_assert_eq!(gl, hl);
    }

    #[test]
    fn adjacency_is_symmetric(edges in edge_list()) {
        let g = parse_edge_list(&edge_text(&edges)).unwrap();
        let n = g.num_nodes();
        for i in 0..n {
            prop_assert!(!g.is_adjacent(i, i));
            let nb = g.neighbors(i);
            prop_assert!(nb.windows(2).all(|w| w[0] < w[1]));
            for j in 0..n {
                prop_assert_eq!(g.is_adjacent(i, j), g.is_adjacent(j, i));
                prop_assert_eq!(g.is_adjacent(i, j), nb.contains(&j));
            }
        }
        let degree_sum: usize = (0..n).map(|i| g.degree(i).unwrap()).sum();
        prop_assert_eq!(degree_sum, 2 * g.num_edges());
    }
}

#[test]
fn karate_club_shape() {
    let g = karate_club();
    assert_eq!(g.num_nodes(), 34);
    assert_eq!(g.num_edges(), 78);
    assert_eq!(g.max_degree(), 17);
    // member 34 (the administrator) is the hub, then member 1 (the instructor)
    assert_eq!(g.degree(g.index_of("34").unwrap()).unwrap(), 17);
    assert_eq!(g.degree(g.index_of("1").unwrap()).unwrap(), 16);
}

#[test]
fn parse_errors_carry_line_numbers() {
    match parse_edge_list("# c\na b\nc\n") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
        other => panic!("unexpected {other:?}"),
    }
    match parse_edge_list("a b c") {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
        other => panic!("unexpected {other:?}"),
    }
    match parse_edge_list("a b\n\nq q\n") {
        Err(Error::SelfLoop { line, label }) => {
            assert_eq!(line, 3);
            assert_eq!(label, "q");
        }
        other => panic!("unexpected {other:?}"),
    }
    assert!(matches!(
        parse_edge_list("# nothing\n\n"),
        Err(Error::EmptyInput)
    ));
    assert!(matches!(parse_edge_list(""), Err(Error::EmptyInput)));
}

#[test]
fn star_degrees_and_range() {
    let g = Graph::star(4).unwrap();
    assert_eq!(g.degree(0).unwrap(), 4);
    assert_eq!(g.degree(1).unwrap(), 1);
    assert!(matches!(
        g.degree(5),
        Err(Error::NodeOutOfRange { index: 5, n: 5 })
    ));
}

#[test]
fn disconnected_graphs_are_accepted() {
    let g = parse_edge_list("a b\nc d\n").unwrap();
    assert_eq!(g.num_nodes(), 4);
    assert!(!g.is_adjacent(1, 2));
}
