"""End-to-end quantitative gates over the whole library, one check per area.

Each test is self-contained: it draws its own instances with a fixed seed,
states its tolerance inline, and passes or fails as a single line.
"""

import math
import time
from fractions import Fraction

import numpy as np
import pytest

from parhodge.cartan import (
    alcove_membership,
    alcove_normalize,
    build_root_datum,
    cochar_contains,
    in_A_prime,
)
from parhodge.degree import relative_degree, relative_degree_filtration
from parhodge.liealg import (
    build_realization,
    comm,
    hs_norm,
    is_nilpotent,
    kostant_sekiguchi_orbit_map,
)
from parhodge.modelmetric import (
    curvature_pair,
    hitchin_residual,
    holonomy_check,
    radial_grid,
)
from parhodge.nahodge import (
    canonical_alpha,
    complete_ks_triple,
    higgs_to_localsystem,
    hitchin_section,
    localsystem_to_higgs,
    milnor_wood_check,
    toledo_invariant,
    y_orbit_certificate,
)
from parhodge.parhiggs import (
    ReductionCertificate,
    gr_res,
    hecke_apply,
    make_data,
    pardeg_reduction,
    stability_check,
)

E12 = np.array([[0, 1], [0, 0]], dtype=complex)
E21 = np.array([[0, 0], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)
Z2 = np.zeros((2, 2), dtype=complex)
U_PLUS = 0.5 * np.array([[1, -1j], [-1j, -1]], dtype=complex)
U_MINUS = np.conj(U_PLUS)
HALF = Fraction(1, 2)

SU11 = build_realization("SU(1,1)")
CUSP_TRIPLE = complete_ks_triple(SU11, E21)


def _unitary(rng, n):
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    q, r = np.linalg.qr(a)
    return q @ np.diag(np.sign(np.diag(r).real + 1e-300))


def _unit_boundary_pair(model, rng):
    """Two unit-norm symmetric-space directions of the given realization."""
    out = []
    for _ in range(2):
        if model == "su(1,1)":
            b = complex(rng.standard_normal(), rng.standard_normal())
            m = np.array([[0.0, b], [np.conj(b), 0.0]], dtype=complex)
        else:
            n = {"gl2": 2, "gl3": 3}[model]
            a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
            m = (a + a.conj().T) / 2.0
        out.append(m / np.linalg.norm(m))
    return out[0], out[1]


def _hyp_exponents(s):
    return np.linalg.eigvalsh(-1j * (-s + s.conj().T))


def _tame_hyperbolic(s, need_gap=True):
    t = _hyp_exponents(s)
    if float(np.max(np.abs(t))) > 0.75:
        return False
    return not need_gap or float(t[-1] - t[0]) > 1e-2


def _random_higgs_instance(model, rng):
    """(alpha, s, y) drawn from the commuting families of one model."""

    def weight(lo=-0.49, hi=0.49):
        return round(float(rng.uniform(lo, hi)), 3)

    def cnormal(scale=0.35):
        return scale * complex(rng.normal(), rng.normal())

    kind = rng.integers(0, 3)
    if model == "GL(2,C)":
        if kind == 0:
            a, b = weight(), weight()
            while abs(a - b) < 5e-3:
                b = weight()
            alpha = (a, b)
            s = np.diag([cnormal(), cnormal()])
            while not _tame_hyperbolic(s, need_gap=False):
                s = np.diag([cnormal(), cnormal()])
            y = Z2
        elif kind == 1:
            a = weight()
            alpha = (a, a)
            s = np.array([[cnormal(), cnormal()], [cnormal(), cnormal()]])
            while not _tame_hyperbolic(s):
                s = np.array([[cnormal(), cnormal()], [cnormal(), cnormal()]])
            y = Z2
        else:
            a = weight()
            alpha = (a, a + 1)
            s = cnormal() * I2
            y = cnormal(1.0) * (E21 if rng.integers(0, 2) else E12)
    elif model == "SU(1,1)":
        if kind == 0:
            a = weight()
            alpha = (a, a)

            def draw():
                return np.array([[0, cnormal()], [cnormal(), 0]], dtype=complex)

            s = draw()
            while abs(s[0, 1] * s[1, 0]) < 1e-2 or not _tame_hyperbolic(s):
                s = draw()
            y = Z2
        elif kind == 1:
            alpha = (weight(), weight())
            s = Z2
            y = Z2
        else:
            alpha = (HALF, -HALF) if rng.integers(0, 2) else (0, 0)
            s = Z2
            y = cnormal(1.0) * (E21 if rng.integers(0, 2) else E12)
    else:  # SL(2,R)
        if kind == 0:
            alpha = (weight(), weight())
            p = cnormal()
            s = np.array([[p, 0], [0, -p]], dtype=complex)
            while not _tame_hyperbolic(s):
                p = cnormal()
                s = np.array([[p, 0], [0, -p]], dtype=complex)
            y = Z2
        elif kind == 1:
            a = weight()
            alpha = (a, a)

            def draw():
                p, q = cnormal(), cnormal()
                return np.array([[p, q], [q, -p]], dtype=complex)

            s = draw()
            while abs(np.trace(s @ s)) < 1e-2 or not _tame_hyperbolic(s):
                s = draw()
            y = Z2
        else:
            alpha = (HALF, -HALF) if rng.integers(0, 2) else (0, 0)
            s = Z2
            y = cnormal(1.0) * (U_PLUS if rng.integers(0, 2) else U_MINUS)
    return alpha, s, y


def _sorted_spectrum(m):
    return sorted(np.linalg.eigvals(m), key=lambda z: (round(z.real, 9), round(z.imag, 9)))


def test_relative_degree_reciprocity_on_random_unit_pairs():
    # >= 200 unit pairs across gl2 / gl3 / su(1,1); the pairing is symmetric
    # to 1e-6 and each evaluation stays under one second
    rng = np.random.default_rng(20260815)
    worst_gap = 0.0
    worst_time = 0.0
    for model in ("gl2", "gl3", "su(1,1)"):
        for _ in range(70):
            s, sigma = _unit_boundary_pair(model, rng)
            t0 = time.perf_counter()
            forward = relative_degree(s, sigma)
            t1 = time.perf_counter()
            backward = relative_degree(sigma, s)
            t2 = time.perf_counter()
            worst_gap = max(worst_gap, abs(forward.value - backward.value))
            worst_time = max(worst_time, t1 - t0, t2 - t1)
    assert worst_gap < 1e-6
    assert worst_time < 1.0


def test_relative_degree_traces_monotone_and_commuting_exact():
    rng = np.random.default_rng(4)
    # flow traces never increase beyond 1e-9
    for model in ("gl2", "gl3", "su(1,1)"):
        for _ in range(20):
            s, sigma = _unit_boundary_pair(model, rng)
            trace = relative_degree(s, sigma).t_trace
            values = [v for _, v in trace]
            assert all(b <= a + 1e-9 for a, b in zip(values, values[1:]))
    # commuting pairs return the trace pairing to 1e-12
    for n in (2, 3):
        for _ in range(10):
            u = _unitary(rng, n)
            d1 = np.sort(rng.standard_normal(n))
            d2 = np.sort(rng.standard_normal(n))
            s = u @ np.diag(d1).astype(complex) @ u.conj().T
            sigma = u @ np.diag(d2).astype(complex) @ u.conj().T
            result = relative_degree(s, sigma)
            assert abs(result.value - float(np.trace(s @ sigma).real)) < 1e-12


def test_numeric_flow_matches_filtration_pairing_on_random_flags():
    # >= 100 random weighted-flag pairs in GL_n, n <= 4
    rng = np.random.default_rng(77)
    count = 0
    for n in (2, 3, 4):
        for _ in range(34):
            ua, ub = _unitary(rng, n), _unitary(rng, n)
            a = np.sort(rng.standard_normal(n))
            b = np.sort(rng.standard_normal(n))
            s = ua @ np.diag(a).astype(complex) @ ua.conj().T
            sigma = ub @ np.diag(b).astype(complex) @ ub.conj().T
            flag_a = [ua[:, : k + 1] for k in range(n)]
            flag_b = [ub[:, : k + 1] for k in range(n)]
            exact = relative_degree_filtration(flag_a, list(a), flag_b, list(b))
            numeric = relative_degree(s, sigma)
            assert abs(numeric.value - exact) < 1e-6
            count += 1
    assert count >= 100


def test_hecke_shifts_invert_exactly_and_preserve_verdicts():
    rng = np.random.default_rng(31)
    base = make_data(
        0,
        "GL(2,C)",
        [(Fraction(1, 3), 0), (0, Fraction(1, 4))],
        None,
        (1, -1),
    )
    # 100 random lattice vectors: shifting by lambda then -lambda restores
    # every weight and degree as exact rationals
    for _ in range(100):
        lams = [tuple(int(x) for x in rng.integers(-6, 7, size=2)) for _ in range(2)]
        there = hecke_apply(base, lams)
        back = hecke_apply(there, [tuple(-x for x in lam) for lam in lams])
        assert [p.weight for p in back.punctures] == [p.weight for p in base.punctures]
        assert back.summand_degrees == base.summand_degrees
    # 50 certificate instances keep their stability verdict under a common shift
    rows = [
        ReductionCertificate("first", chi=(Fraction(-1), Fraction(1))),
        ReductionCertificate("second", chi=(Fraction(1), Fraction(-1))),
    ]
    for _ in range(50):
        data = make_data(
            0,
            "GL(2,C)",
            [
                (Fraction(int(rng.integers(-1, 2)), 3), 0),
                (0, Fraction(int(rng.integers(-1, 2)), 4)),
            ],
            None,
            (int(rng.integers(-2, 3)), int(rng.integers(-2, 3))),
        )
        lam = (int(rng.integers(-3, 4)), int(rng.integers(-3, 4)))
        before = stability_check(data, "certificate", rows)
        after = stability_check(hecke_apply(data, [lam, lam]), "certificate", rows)
        assert before.verdict == after.verdict
        assert [r[2] for r in before.slope_table] == [r[2] for r in after.slope_table]


def test_dictionary_round_trip_recovers_higgs_invariants():
    # >= 100 random entries across the three rank-2 models
    rng = np.random.default_rng(20260815)
    count = 0
    for model in ("GL(2,C)", "SU(1,1)", "SL(2,R)"):
        for _ in range(34):
            alpha, s, y = _random_higgs_instance(model, rng)
            fwd = higgs_to_localsystem(alpha, s, y, model)
            back = localsystem_to_higgs(fwd.monodromy, model, beta=fwd.beta)
            want = canonical_alpha(alpha)
            assert max(abs(a - b) for a, b in zip(back.alpha, want)) < 1e-8
            got_spec = _sorted_spectrum(back.s)
            want_spec = _sorted_spectrum(s)
            assert max(abs(a - b) for a, b in zip(got_spec, want_spec)) < 1e-8
            assert back.y_certificate.rank_sequence == fwd.y_certificate.rank_sequence
            assert back.y_certificate.component_signs == fwd.y_certificate.component_signs
            # the three monodromy factors commute pairwise
            for left, right in (
                (fwd.elliptic, fwd.hyperbolic),
                (fwd.elliptic, fwd.unipotent),
                (fwd.hyperbolic, fwd.unipotent),
            ):
                assert hs_norm(comm(left, right)) < 1e-10
            count += 1
    assert count >= 100


def test_nilpotent_orbit_desk_bijection_sl2r():
    start = time.perf_counter()
    real = build_realization("SL(2,R)")
    rng = np.random.default_rng(9)
    g_reps = {"zero": Z2, "plus": E12, "minus": -E12}
    m_reps = {
        "zero": Z2,
        "plus": np.array([[1, 1j], [1j, -1]], dtype=complex),
        "minus": np.array([[1, -1j], [-1j, -1]], dtype=complex),
    }
    image = {}
    for name, e in g_reps.items():
        cert = kostant_sekiguchi_orbit_map(real, e)
        image[name] = (cert.rank_sequence, cert.component_signs)
        # orbit invariance under random group conjugation
        for _ in range(3):
            a = rng.standard_normal((2, 2))
            a -= np.trace(a) / 2 * np.eye(2)
            g = np.asarray(
                np.eye(2) + a + a @ a / 2 + a @ a @ a / 6, dtype=complex
            )
            g /= np.sqrt(np.linalg.det(g))
            moved = kostant_sekiguchi_orbit_map(real, g @ e @ np.linalg.inv(g))
            assert (moved.rank_sequence, moved.component_signs) == image[name]
    target = set()
    for name, y in m_reps.items():
        cert = y_orbit_certificate(real, y)
        target.add((cert.rank_sequence, cert.component_signs))
        # invariance under the complexified isotropy group SO(2,C)
        theta = complex(rng.standard_normal(), rng.standard_normal())
        rot = np.array(
            [[np.cos(theta), np.sin(theta)], [-np.sin(theta), np.cos(theta)]]
        )
        moved = y_orbit_certificate(real, rot @ y @ rot.T)
        assert (moved.rank_sequence, moved.component_signs) == (
            cert.rank_sequence,
            cert.component_signs,
        )
    # bijection: three distinct certificates, same set on both sides
    assert len(set(image.values())) == 3
    assert set(image.values()) == target
    assert time.perf_counter() - start < 1.0


def test_wall_section_degree_stability_and_residue():
    data = hitchin_section("SL2R", 0, 3)
    # the line summand has parabolic degree g - 1 + n/2 = 1/2, exactly
    line = ReductionCertificate("L", chi=(Fraction(1), Fraction(0)))
    assert pardeg_reduction(data, line) == HALF
    # stable, by the bounded desk search
    verdict = stability_check(data, mode="exhaustive_small")
    assert verdict.verdict == "stable"
    # each residue is regular nilpotent: full rank drop in one step
    for i in range(3):
        graded = gr_res(data, i)
        assert is_nilpotent(graded.nilpotent)
        cert = y_orbit_certificate(SU11, graded.nilpotent)
        assert cert.rank_sequence == (1, 0)
        assert cert.component_signs in ((1,), (-1,))


def test_milnor_wood_attained_and_no_random_violations():
    # the section data attains |tau| = 2g - 2 + n with zero margin
    for genus, n in ((0, 3), (1, 1), (1, 2)):
        data = hitchin_section("SL2R", genus, n)
        report = milnor_wood_check(data)
        assert report.ok
        assert abs(toledo_invariant(data)) == 2 * genus - 2 + n
        assert min(report.margins) == 0
    # 100 random certificate-semistable SU(1,1) instances stay in the window
    rng = np.random.default_rng(3)
    base = hitchin_section("SL2R", 0, 3)
    split = ReductionCertificate("split", chi=(Fraction(1), Fraction(-1)))
    laurent = [
        [(t.order, t.eigenvalue, t.matrix) for t in p.laurent] for p in base.punctures
    ]
    checked = 0
    attempts = 0
    while checked < 100:
        attempts += 1
        assert attempts < 500
        eps = [Fraction(int(rng.integers(0, 5)), 16) for _ in range(3)]
        shift = Fraction(int(rng.integers(-2, 3)))
        weights = [(-HALF + e + shift, HALF - e + shift) for e in eps]
        data = make_data(
            0,
            "SU(1,1)",
            weights,
            laurent,
            tuple(d + 3 * shift for d in base.summand_degrees),
        )
        if stability_check(data, reductions=[split]).verdict == "unstable":
            continue
        report = milnor_wood_check(data)
        assert report.ok
        assert report.tau == 1 - 2 * sum(eps)
        checked += 1


def test_model_residual_decays_and_curvature_is_second_order():
    radii = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    grid = radial_grid(1e-2, 1e-6, 5)
    assert max(abs(a - b) for a, b in zip(grid.radii, radii)) < 1e-18
    # the exact cusp model solves the equation on the nose
    pure = hitchin_residual((0, 0), Z2, CUSP_TRIPLE, grid, "SU(1,1)")
    assert max(pure.rho) < 1e-12
    # a holomorphic perturbation decays strictly along the same radii
    perturbed = hitchin_residual(
        (0, 0), Z2, CUSP_TRIPLE, grid, "SU(1,1)", extra_terms=[(1, 0.5 * E12)]
    )
    assert all(a > b for a, b in zip(perturbed.rho, perturbed.rho[1:]))
    # halving the step divides the finite-difference error by four
    a1, f1 = curvature_pair((0, 0), CUSP_TRIPLE, 1e-3, 0.7, fd_step=1e-3)
    a2, f2 = curvature_pair((0, 0), CUSP_TRIPLE, 1e-3, 0.7, fd_step=5e-4)
    order = math.log2(hs_norm(a1 - f1) / hs_norm(a2 - f2))
    assert abs(order - 2) < 0.05


def test_holonomy_deviation_follows_log_law():
    radii = (1e-2, 1e-3, 1e-4, 1e-5, 1e-6)
    devs = []
    for r in radii:
        report = holonomy_check((0, 0), Z2, CUSP_TRIPLE, r, "SU(1,1)")
        devs.append(report.deviation_levi)
    assert all(a > b for a, b in zip(devs, devs[1:]))
    # deviation ~ C / |ln r|: a through-origin fit explains the data
    x = np.array([1 / abs(math.log(r)) for r in radii])
    y = np.array(devs)
    c_fit = float(x @ y / (x @ x))
    ss_res = float(np.sum((y - c_fit * x) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    assert 1 - ss_res / ss_tot > 0.95
    # constant-coefficient cases agree to 1e-10
    weight_only = holonomy_check((0.5, -0.5), Z2, None, 1e-3, "SU(1,1)")
    assert weight_only.deviation_full < 1e-10
    s = np.array([[0, 0.2], [0.2j, 0]], dtype=complex)
    hyperbolic = holonomy_check((0.3, 0.3), s, None, 1e-3, "SU(1,1)")
    assert hyperbolic.deviation_full < 1e-10


def test_alcove_normalization_bounded_and_verified():
    rng = np.random.default_rng(64)
    quotas = {("A", 1): 34, ("A", 2): 33, ("C", 2): 33}
    for (cartan_type, rank), quota in quotas.items():
        rd = build_root_datum(cartan_type, rank)
        collected = 0
        attempts = 0
        while collected < quota:
            attempts += 1
            assert attempts < 5000
            den = int(rng.integers(1, 13))
            point = tuple(
                Fraction(int(rng.integers(0, den + 1)), den) for _ in range(rank)
            )
            if alcove_membership(rd, point).kind == "outside":
                continue
            result = alcove_normalize(rd, point, search_bound=64)
            assert result.k <= 64
            assert result.normalized == tuple(
                result.k * x + l for x, l in zip(point, result.lattice_vector)
            )
            assert in_A_prime(rd, result.normalized)
            assert cochar_contains(rd, result.lattice_vector)
            collected += 1
    # a weight on the level-one wall needs exactly the doubling
    rd = build_root_datum("A", 1)
    assert alcove_membership(rd, (HALF,)).kind == "boundary"
    assert alcove_normalize(rd, (HALF,)).k == 2
