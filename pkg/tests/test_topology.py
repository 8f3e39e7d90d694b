import collections

import numpy as np
import pytest

from hippo.topology import (
    Topology,
    TopologyError,
    build_incidence,
    complete_topology,
    generate_connected_gnp,
    load_edge_list,
    path_topology,
    save_edge_list,
    spectral_constants,
)


def bfs_reachable(m, edges):
    """Independent reachability oracle (queue-based breadth-first search)."""
    adj = collections.defaultdict(list)
    for (i, j) in edges:
        adj[i].append(j)
        adj[j].append(i)
    seen = {0}
    queue = collections.deque([0])
    while queue:
        u = queue.popleft()
        for v in adj[u]:
            if v not in seen:
                seen.add(v)
                queue.append(v)
    return len(seen) == m


def random_connected(m, seed):
    return generate_connected_gnp(m, 0.5, seed)


def test_two_agents_full_probability_gives_single_edge():
    topo = generate_connected_gnp(2, 1.0, seed=0)
    assert topo.edges == ((0, 1),)
    assert topo.n == 1


def test_m50_sparse_graph_is_connected_with_sane_edge_count():
    topo = generate_connected_gnp(50, 0.1, seed=7)
    assert bfs_reachable(topo.m, topo.edges)
    assert 49 <= topo.n <= 1225


def test_gnp_connectivity_matches_bfs_oracle():
    topo = generate_connected_gnp(5, 0.5, seed=42)
    assert bfs_reachable(topo.m, topo.edges)


def test_gnp_deterministic_given_seed():
    a = generate_connected_gnp(12, 0.2, seed=3)
    b = generate_connected_gnp(12, 0.2, seed=3)
    assert a.edges == b.edges and a.redraws == b.redraws


def test_gnp_redraw_budget_exhaustion():
    with pytest.raises(TopologyError, match="redraw"):
        generate_connected_gnp(30, 0.01, seed=0, max_redraws=3)


def test_gnp_rejects_bad_inputs():
    with pytest.raises(TopologyError):
        generate_connected_gnp(1, 0.5, seed=0)
    with pytest.raises(TopologyError):
        generate_connected_gnp(5, 0.0, seed=0)
    with pytest.raises(TopologyError):
        generate_connected_gnp(5, 1.5, seed=0)


def test_topology_rejects_disconnected_and_malformed():
    with pytest.raises(TopologyError):
        Topology(m=4, edges=((0, 1), (2, 3)))
    with pytest.raises(TopologyError):
        Topology(m=3, edges=((1, 0),))
    with pytest.raises(TopologyError):
        Topology(m=3, edges=((0, 1), (0, 1), (1, 2)))


def test_degree_sum_is_twice_edge_count():
    for seed in range(5):
        topo = random_connected(6, seed)
        assert topo.degrees.sum() == 2 * topo.n


def test_path_incidence_matrices_exact():
    inc = build_incidence(path_topology(3))
    assert np.array_equal(inc.E_s, [[1, -1, 0], [0, 1, -1]])
    assert np.array_equal(inc.L_s, [[1, -1, 0], [-1, 2, -1], [0, -1, 1]])
    assert np.array_equal(inc.E_u, [[1, 1, 0], [0, 1, 1]])
    assert np.array_equal(inc.L_u, [[1, 1, 0], [1, 2, 1], [0, 1, 1]])


def test_incidence_row_structure():
    for seed in range(4):
        topo = random_connected(7, seed)
        inc = build_incidence(topo)
        for A in (inc.A_s, inc.A_d):
            assert np.all(A.sum(axis=1) == 1.0)
            assert np.all((A == 0) | (A == 1))
        assert np.allclose(inc.E_s.sum(axis=1), 0.0)


def test_degree_identity_two_d_equals_ls_plus_lu():
    for seed in range(5):
        inc = build_incidence(random_connected(8, seed))
        assert np.array_equal(2.0 * inc.D, inc.L_s + inc.L_u)


def test_signed_laplacian_matches_degree_adjacency_construction():
    for seed in range(5):
        topo = random_connected(6, seed)
        inc = build_incidence(topo)
        expected = np.diag(topo.degrees.astype(float))
        for (i, j) in topo.edges:
            expected[i, j] = expected[j, i] = -1.0
        assert np.array_equal(inc.L_s, expected)


def test_signed_incidence_nullspace_is_consensus():
    # E_s x = 0 iff x is constant, checked by nullspace inspection
    for seed in range(5):
        topo = random_connected(6, seed)
        inc = build_incidence(topo)
        _, sv, vt = np.linalg.svd(inc.E_s)
        null_dim = inc.E_s.shape[1] - np.sum(sv > 1e-12)
        assert null_dim == 1
        direction = vt[-1]
        assert np.allclose(direction, direction[0])


def test_spectral_single_edge():
    inc = build_incidence(path_topology(2))
    sc = spectral_constants(inc, 0)
    assert sc.sigma_max_Lu == pytest.approx(2.0, abs=1e-12)


def test_spectral_path3_vs_characteristic_polynomial():
    # oracle: explicit 3x3 characteristic polynomial of the stacked Gram matrix
    inc = build_incidence(path_topology(3))
    s = np.zeros((1, 3))
    s[0, 0] = 1.0
    G = np.vstack([inc.E_s, s])
    M = G @ G.T
    trace = M[0, 0] + M[1, 1] + M[2, 2]
    minors = (M[0, 0] * M[1, 1] - M[0, 1] * M[1, 0]
              + M[0, 0] * M[2, 2] - M[0, 2] * M[2, 0]
              + M[1, 1] * M[2, 2] - M[1, 2] * M[2, 1])
    det = np.linalg.det(M)
    roots = np.roots([1.0, -trace, minors, -det])
    smallest_positive = min(r.real for r in roots if r.real > 1e-9 * max(abs(roots)))
    sc = spectral_constants(inc, 0)
    assert sc.sigma_min_plus == pytest.approx(smallest_positive, rel=1e-9)


def test_spectral_complete3_vs_power_iteration():
    inc = build_incidence(complete_topology(3))
    v = np.array([0.3, -0.5, 0.9])
    for _ in range(200):
        v = inc.L_u @ v
        v /= np.linalg.norm(v)
    rayleigh = float(v @ inc.L_u @ v)
    sc = spectral_constants(inc, 1)
    assert sc.sigma_max_Lu == pytest.approx(rayleigh, rel=1e-10)


def test_spectral_bounds_on_random_graphs():
    for seed in range(6):
        topo = random_connected(7, seed)
        inc = build_incidence(topo)
        sc = spectral_constants(inc, seed % topo.m)
        assert sc.sigma_min_plus > 0
        assert sc.sigma_max_Lu <= 2 * topo.degrees.max() + 1e-12


def test_edge_list_round_trip(tmp_path):
    topo = generate_connected_gnp(9, 0.3, seed=5)
    path = tmp_path / "graph.txt"
    save_edge_list(topo, path)
    loaded = load_edge_list(path)
    assert loaded.m == topo.m and loaded.edges == topo.edges
    first = path.read_text().splitlines()[0]
    assert first == f"{topo.m} {topo.n}"


def test_edge_list_file_is_one_indexed(tmp_path):
    path = tmp_path / "p.txt"
    save_edge_list(path_topology(3), path)
    assert path.read_text() == "3 2\n1 2\n2 3\n"
