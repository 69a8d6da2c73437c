import numpy as np
import pytest

from threshcsp.instances import (
    CspInstance,
    evaluate,
    label_extended,
    maxcut_instance,
    normalize_edges,
    normalized_label_extended,
)
from threshcsp.net import lift
from threshcsp.sdp import (
    AdmmOptions,
    Pseudoexpectation,
    SdpBuilder,
    build_sdp,
    expected_objective,
    expected_quadform,
    round_assignments,
    solve_sdp,
    svec,
    svec_index_arrays,
    unsvec,
)
from threshcsp.solver import brute_force
from threshcsp.spectral import Projector, top_eigenspace

ALL2 = frozenset({(0, 0), (0, 1), (1, 0), (1, 1)})


def two_csp_setup(instance):
    M, E = normalized_label_extended(instance)
    dhat = instance.q * instance.degrees().astype(float)
    trd = float(dhat.sum())
    eps_alg = 0.4
    proj = top_eigenspace(M, eps_alg)
    builder = SdpBuilder(M, np.repeat(dhat, instance.q), proj, eps_alg, trd,
                         instance.n, instance.q)
    return M, E, proj, builder, trd, eps_alg


def single_edge_cut():
    return maxcut_instance(2, [(0, 1)])


def test_svec_roundtrip_preserves_inner_products():
    rng = np.random.default_rng(0)
    d = 7
    si, sj = svec_index_arrays(d)
    A = rng.standard_normal((d, d))
    A = A + A.T
    B = rng.standard_normal((d, d))
    B = B + B.T
    assert np.allclose(unsvec(svec(A, si, sj), si, sj, d), A)
    assert np.isclose(svec(A, si, sj) @ svec(B, si, sj), np.sum(A * B))


def test_objective_matrix_is_label_extended_adjacency():
    # E^{1/2} M E^{1/2} for the normalized label-extended pair recovers the
    # plain 0/1 label-extended adjacency
    inst = CspInstance(n=3, q=2, edges=normalize_edges(
        [(0, 1, {(0, 1), (1, 0)}), (1, 2, {(0, 0), (1, 1)}), (0, 2, ALL2)]))
    _, _, _, builder, _, _ = two_csp_setup(inst)
    assert np.allclose(builder.C_yy, label_extended(inst), atol=1e-12)


def test_build_sdp_rejects_nonzero_diagonal_block():
    inst = single_edge_cut()
    M, E = normalized_label_extended(inst)
    M = M.copy()
    M[0, 1] = M[1, 0] = 0.25  # inside variable 0's diagonal block
    proj = Projector(basis=np.zeros((4, 0)), threshold=0.5)
    with pytest.raises(ValueError, match="diagonal block"):
        build_sdp(M, E, proj, np.zeros(4), 0.4, 4.0, 2, 2)


def test_ball_matrix_single_edge_hand_expansion():
    # single-edge MAX-CUT reduction: the sign-block tensor has one eigenvalue
    # at 1, so the enumeration space is one-dimensional
    A_norm = np.array([[0.0, 1.0], [1.0, 0.0]])
    sign_block = np.array([[0.5, -0.5], [-0.5, 0.5]])
    M = -np.kron(A_norm, sign_block)
    dhat = np.ones(2)
    eps_alg = 0.1
    proj = top_eigenspace(M, eps_alg)
    assert proj.k == 1
    builder = SdpBuilder(M, np.repeat(dhat, 2), proj, eps_alg, float(dhat.sum()), 2, 2)
    v = lift([0.7], proj.basis)
    prob = builder.problem(v)
    d = builder.space.d
    P = unsvec(prob.p_svec, builder.space.si, builder.space.sj, d)
    # hand expansion of || Pi E^{1/2} y - v ||^2 in the monomial basis [1, y]
    U = proj.basis
    EU = np.sqrt(np.repeat(dhat, 2))[:, None] * U
    expected = np.zeros((d, d))
    expected[0, 0] = v @ v
    expected[0, 1:] = expected[1:, 0] = -(EU @ (U.T @ v))
    expected[1:, 1:] = EU @ EU.T
    assert np.allclose(P, expected, atol=1e-12)
    assert np.linalg.matrix_rank(P, tol=1e-9) <= 2
    eigs = np.linalg.eigvalsh(P)
    assert eigs[0] >= -1e-9  # PSD


def test_ball_constraint_inactive_when_dominated():
    # slack large enough that no reachable point can violate the ball at v=0
    inst = single_edge_cut()
    M, E = normalized_label_extended(inst)
    dhat = 2.0 * inst.degrees().astype(float)
    proj = top_eigenspace(M, 0.4)
    builder = SdpBuilder(M, np.repeat(dhat, 2), proj, 1.5, float(dhat.sum()), 2, 2)
    prob = builder.problem(np.zeros(4))
    assert prob.s_ball >= float(dhat.sum())  # >= max || Pi E^{1/2} y ||^2
    sol = solve_sdp(prob)
    assert sol.status == "solved"
    assert sol.ball_value <= prob.s_ball + 1e-9
    # matches the unconstrained optimum
    free = solve_sdp(builder.problem(np.zeros(4), use_ball=False))
    assert abs(sol.objective - free.objective) <= 1e-5


def test_tight_ball_at_center_detected_infeasible():
    # every y has || Pi E^{1/2} y ||^2 = 2 here, so a ball of slack 1.6 at the
    # origin excludes all pseudoexpectations; the solver must report that
    inst = single_edge_cut()
    _, _, proj, builder, _, _ = two_csp_setup(inst)
    assert builder.s_ball < 2.0
    sol = solve_sdp(builder.problem(np.zeros(4)))
    assert sol.status == "infeasible"


def test_k0_projector_always_satisfied():
    inst = single_edge_cut()
    M, E, _, _, trd, eps_alg = two_csp_setup(inst)
    empty = Projector(basis=np.zeros((4, 0)), threshold=2.0)
    prob = build_sdp(M, E, empty, np.zeros(4), eps_alg, trd, 2, 2)
    assert not prob.use_ball
    sol = solve_sdp(prob)
    assert sol.status == "solved"
    assert abs(sol.ball_value) <= 1e-12


def test_solved_pseudoexpectation_invariants():
    inst = CspInstance(n=4, q=2, edges=normalize_edges(
        [(0, 1, {(0, 1), (1, 0)}), (1, 2, {(0, 1), (1, 0)}), (2, 3, {(0, 0), (1, 1)}),
         (0, 3, ALL2), (0, 2, {(1, 1)})]))
    _, _, proj, builder, _, _ = two_csp_setup(inst)
    v = builder.EU @ (proj.basis.T @ np.zeros(8)) if proj.k == 0 else lift(
        np.zeros(proj.k), proj.basis)
    sol = solve_sdp(builder.problem(v))
    assert sol.status == "solved"
    assert sol.pe.violations() == []
    X = sol.pe.X
    assert np.allclose(X, X.T)
    # pseudocovariance PSD up to tolerance
    cov_min = np.linalg.eigvalsh(sol.pe.pseudocovariance())[0]
    assert cov_min >= -2e-7


def relaxation_soundness_case(inst, eps_alg=0.4):
    """Dirac feasibility: with v at the projected optimum, the SDP value must
    reach the optimum's quadratic form value (up to eta)."""
    M, E, proj, builder, trd, _ = two_csp_setup(inst)
    opt, y_star = brute_force(inst)
    y_ind = np.zeros(inst.n * inst.q)
    for i, a in enumerate(y_star):
        y_ind[inst.q * i + int(a)] = 1.0
    # v = Pi E^{1/2} y*: the Dirac on y* is feasible for this ball
    z = builder.sqrt_e * y_ind
    v = builder.U @ (builder.U.T @ z)
    prob = builder.problem(v)
    sol = solve_sdp(prob)
    assert sol.status == "solved"
    quad_opt = y_ind @ builder.C_yy @ y_ind
    assert np.isclose(quad_opt, 2 * opt, atol=1e-9)
    eta = 1e-5 * builder.scale()
    assert sol.objective >= quad_opt - eta, (sol.objective, quad_opt)
    return sol


def test_relaxation_soundness_small_instances():
    for seed in range(3):
        from threshcsp.instances import generate, strip_isolated

        inst = generate("planted-assignment", {"n": 6, "q": 2, "m": 9}, seed=seed).instance
        inst, _ = strip_isolated(inst)
        relaxation_soundness_case(inst)
    inst = generate_q3()
    relaxation_soundness_case(inst)


def generate_q3():
    from threshcsp.instances import generate, strip_isolated

    inst = generate("planted-assignment", {"n": 5, "q": 3, "m": 8}, seed=2).instance
    return strip_isolated(inst)[0]


def test_infeasible_far_ball_center():
    inst = single_edge_cut()
    _, _, proj, builder, trd, _ = two_csp_setup(inst)
    # beyond any achievable || Pi E^{1/2} y ||: brute max reach is sqrt(trd)
    coords = np.zeros(proj.k)
    coords[0] = 2.5 * np.sqrt(trd)
    sol = solve_sdp(builder.problem(lift(coords, proj.basis)))
    assert sol.status == "infeasible"


def test_round_integral_marginals():
    X = np.zeros((5, 5))
    means = np.array([0.0, 1.0, 1.0, 0.0])
    X[0, 0] = 1.0
    X[0, 1:] = X[1:, 0] = means
    X[1:, 1:] = np.outer(means, means)
    np.fill_diagonal(X[1:, 1:], means)
    pe = Pseudoexpectation(X=X, n=2, q=2)
    out = round_assignments(pe, 123, 32)
    assert np.array_equal(out, np.tile([1, 0], (32, 1)))


def test_round_uniform_frequency():
    X = np.zeros((3, 3))
    X[0, 0] = 1.0
    X[0, 1:] = X[1:, 0] = 0.5
    X[1:, 1:] = np.array([[0.5, 0.0], [0.0, 0.5]])
    pe = Pseudoexpectation(X=X, n=1, q=2)
    out = round_assignments(pe, 7, 10_000)
    freq = out.mean()
    assert abs(freq - 0.5) <= 0.05


def test_round_deterministic_in_seed():
    inst = single_edge_cut()
    _, _, proj, builder, _, _ = two_csp_setup(inst)
    sol = solve_sdp(builder.problem(np.zeros(4), use_ball=False))
    assert sol.status == "solved"
    a = round_assignments(sol.pe, 99, 64)
    b = round_assignments(sol.pe, 99, 64)
    assert np.array_equal(a, b)


def test_rounded_mean_matches_expected_objective():
    from threshcsp.instances import generate, strip_isolated

    inst = generate("random-csp", {"n": 6, "q": 2, "m": 10}, seed=3).instance
    inst, _ = strip_isolated(inst)
    _, _, proj, builder, _, _ = two_csp_setup(inst)
    sol = solve_sdp(builder.problem(np.zeros(inst.n * 2)))
    assert sol.status == "solved"
    exact = expected_objective(sol.pe, inst)
    samples = 20_000
    out = round_assignments(sol.pe, 11, samples)
    from threshcsp.instances import evaluate_batch

    vals = evaluate_batch(inst, out)
    # 3 sigma binomial-style bound with per-edge variance at most 1/4
    sigma = np.sqrt(inst.m * 0.25 / samples) * 3
    assert abs(vals.mean() - exact) <= max(3 * sigma, 0.05)


def test_expected_objective_integral_and_uniform():
    inst = single_edge_cut()
    X = np.zeros((5, 5))
    means = np.array([1.0, 0.0, 0.0, 1.0])  # x0=0, x1=1 -> edge cut
    X[0, 0] = 1.0
    X[0, 1:] = X[1:, 0] = means
    X[1:, 1:] = np.outer(means, means)
    np.fill_diagonal(X[1:, 1:], means)
    pe = Pseudoexpectation(X=X, n=2, q=2)
    assert np.isclose(expected_objective(pe, inst), evaluate(inst, [0, 1]))

    Xu = np.zeros((5, 5))
    Xu[0, 0] = 1.0
    Xu[0, 1:] = Xu[1:, 0] = 0.5
    Xu[1:, 1:] = 0.25
    for i in range(2):
        blk = slice(1 + 2 * i, 3 + 2 * i)
        Xu[blk, blk] = np.eye(2) / 2
    peu = Pseudoexpectation(X=Xu, n=2, q=2)
    assert np.isclose(expected_objective(peu, inst), 0.5)
    all_inst = CspInstance(n=2, q=2, edges=((0, 1, ALL2),))
    assert np.isclose(expected_objective(peu, all_inst), 1.0)


def test_rounding_error_bound_on_solved_points():
    # executable form of the rounding-error lemma, per solved net point
    from threshcsp.instances import generate, strip_isolated
    from threshcsp.net import build_net

    inst = generate("planted-assignment", {"n": 6, "q": 2, "m": 10}, seed=5).instance
    inst, _ = strip_isolated(inst)
    M, E, proj, builder, trd, eps_alg = two_csp_setup(inst)
    net = build_net(proj.k, np.sqrt(trd), np.sqrt(eps_alg * trd))
    scale = builder.scale()
    checked = 0
    for idx in range(net.size):
        v = lift(net.points[idx], proj.basis)
        sol = solve_sdp(builder.problem(v))
        if sol.status != "solved":
            continue
        checked += 1
        exp_quad = expected_quadform(sol.pe, builder.C_yy)
        bound = eps_alg * trd + 4.0 * sol.ball_value + 1e-4 * scale
        assert sol.objective - exp_quad <= bound
    assert checked >= 1
