import numpy as np
import pytest

from kreinspec.linalg import LinOp, commutator, masked_columns, op_norm
from kreinspec.torus import (
    GOLDEN_THETA,
    TorusParams,
    build_torus,
    random_elliptic_tau,
    time_orientation_terms,
    torus_ellipticity,
    torus_ladder,
    torus_metric,
    torus_orientation_two_form,
    torus_spectrum,
)
from kreinspec.triples import (
    check_equivariance,
    check_order_one,
    check_reality,
    check_time_orientation,
    run_suite,
)

SPINS = [(0.0, 0.0), (0.5, 0.0), (0.0, 0.5), (0.5, 0.5)]


def basis_index(bundle):
    return {bi: i for i, bi in enumerate(bundle.truncation.basis)}


def column(bundle, op, state):
    return op.to_dense()[:, basis_index(bundle)[state]]


def test_weyl_relation_uv():
    # pi(V) pi(U) |0,0> = lam^{-1} |1,1> while pi(U) pi(V) |0,0> = |1,1>,
    # so UV = lam VU on interior vectors.
    p = TorusParams(N=3)
    b = build_torus(p)
    lam = p.lam
    uv = b.generator("U") @ b.generator("V")
    vu = b.generator("V") @ b.generator("U")
    mask = b.truncation.interior(2)
    assert op_norm(masked_columns(uv - lam * vu, mask)) < 1e-14
    idx = basis_index(b)
    col = column(b, vu, (+1, 0, 0))
    assert col[idx[(+1, 1, 1)]] == pytest.approx(lam ** (-1))
    col = column(b, uv, (+1, 0, 0))
    assert col[idx[(+1, 1, 1)]] == pytest.approx(1.0)


def test_generators_unitary_on_interior():
    b = build_torus(TorusParams(N=3))
    mask = b.truncation.interior(2)
    ident = LinOp.identity(b.dim)
    for g in ("U", "V"):
        x = b.generator(g)
        assert op_norm(masked_columns(x.adjoint() @ x - ident, mask)) < 1e-14
        assert op_norm(masked_columns(x @ x.adjoint() - ident, mask)) < 1e-14


def test_dirac_action_identity_family():
    # D|1,1,+> = d+_{1,1}|1,1,-> = 1 * |1,1,-> for the identity family at
    # spin (0,0).
    p = TorusParams(theta=0.0, N=2)
    b = build_torus(p)
    idx = basis_index(b)
    col = column(b, b.dirac, (+1, 1, 1))
    assert col[idx[(-1, 1, 1)]] == pytest.approx(1.0)
    assert np.count_nonzero(col) == 1


def test_spin_structure_shifts_coefficients():
    p = TorusParams(spin=(0.5, 0.0), N=2)
    assert p.d_coeff(+1, 1, 1) == pytest.approx(1.5 * p.tau[0] + 1.0 * p.tau[1])


def test_reality_squares_to_one_all_spins():
    for spin in SPINS:
        b = build_torus(TorusParams(spin=spin, N=4))
        rep = check_reality(b)
        assert rep.entries["reality_involution"].violation < 1e-13


def test_commutant_property():
    b = build_torus(TorusParams(N=4))
    rep = check_reality(b)
    assert rep.entries["order_zero"].violation < 1e-13


def test_order_one_holds_for_affine_family():
    b = build_torus(TorusParams(N=4, tau=(0.7, -1.2, 0.4, 0.9)))
    assert check_order_one(b).entries["order_one"].violation < 1e-12


def test_equivariance_weights():
    b = build_torus(TorusParams(N=3))
    rep = check_equivariance(b)
    assert rep.entries["equivariance_fixed"].violation < 1e-13
    assert rep.entries["equivariance_action"].violation < 1e-13


def test_full_suite_random_elliptic_all_spins():
    rng = np.random.default_rng(7)
    for _ in range(2):
        tau = random_elliptic_tau(rng)
        for spin in SPINS:
            p = TorusParams(tau=tau, spin=spin, N=5)
            rep = run_suite(build_torus(p),
                            time_orientation_terms=time_orientation_terms(p))
            assert rep.all_asserted_passed(), rep.failures()


def test_spectrum_blocks_and_residuals():
    p = TorusParams(theta=0.0, N=3)
    report = torus_spectrum(p)
    assert report.residual_max < 1e-12
    blocks = dict(report.blocks)
    assert np.allclose(sorted(blocks["n=1,m=1"], key=lambda z: z.real), [-1, 1])
    assert np.allclose(blocks["n=2,m=0"], [0, 0])
    mixed = TorusParams(theta=0.0, tau=(1.0, 0.0, 0.0, -1.0), N=3)
    pair = dict(torus_spectrum(mixed).blocks)["n=1,m=1"]
    assert np.allclose(sorted(pair, key=lambda z: z.imag), [-1j, 1j])


def test_spectrum_negation_symmetry():
    report = torus_spectrum(TorusParams(tau=(1.3, 0.2, -0.4, 0.8), N=4))
    flat = report.flat()
    from kreinspec.triples import multiset_distance
    assert multiset_distance(flat, -flat) < 1e-12


def test_isospectrality_across_theta():
    thetas = [0.0, 1.0 / 3.0, GOLDEN_THETA]
    spectra = [np.sort_complex(torus_spectrum(TorusParams(theta=t, N=4)).flat())
               for t in thetas]
    assert np.array_equal(spectra[0], spectra[1])
    assert np.array_equal(spectra[0], spectra[2])


def test_ellipticity_verdicts():
    assert torus_ellipticity(TorusParams())["elliptic"]
    out = torus_ellipticity(TorusParams(tau=(1.0, 1.0, 1.0, 1.0)))
    assert not out["elliptic"]
    assert out["det"] == pytest.approx(0.0, abs=1e-12)
    out = torus_ellipticity(TorusParams(tau=(2.0, 1.0, 1.0, 1.0)))
    assert out["elliptic"] and out["det"] == pytest.approx(1.0)
    ident = torus_ellipticity(TorusParams())
    assert np.allclose(ident["quadratic_form"], np.eye(2))


def test_metric_identity_and_mixed():
    out = torus_metric(TorusParams(theta=0.0))
    assert np.allclose(out["g"], [[0, -0.5], [-0.5, 0]])
    assert out["det"] == pytest.approx(-0.25)
    assert out["signature"] == (1, 1)
    assert not out["formal"]
    out = torus_metric(TorusParams(theta=0.0, tau=(1.0, 0.0, 0.0, -1.0)))
    assert np.allclose(out["g"], [[0, 0.5], [0.5, 0]])
    assert out["det"] == pytest.approx(-0.25)


def test_metric_determinant_identity_random():
    rng = np.random.default_rng(11)
    for _ in range(50):
        tau = tuple(rng.uniform(-2, 2, 4))
        out = torus_metric(TorusParams(theta=0.0, tau=tau))
        t1p, t2p, t1m, t2m = tau
        want = -0.25 * (t2p * t1m - t1p * t2m) ** 2
        assert out["det"] == pytest.approx(want, abs=1e-12)
        assert out["anticommutator_violation"] < 1e-12
        if abs(t1p * t2m - t2p * t1m) > 1e-6:
            assert out["signature"] == (1, 1)


def test_metric_formal_flag():
    assert torus_metric(TorusParams(theta=GOLDEN_THETA))["formal"]


def test_time_orientation_closed_form():
    # terms {(1,U*,U,w), (1,V*,V,z)} with w = (tau2- + tau2+)/Delta and
    # z = -(tau1- + tau1+)/Delta reconstruct beta exactly.
    p = TorusParams(theta=0.0, N=3)
    terms = time_orientation_terms(p)
    assert terms[0][3] == pytest.approx(1.0)   # w at the identity family
    assert terms[1][3] == pytest.approx(-1.0)  # z at the identity family
    rep = check_time_orientation(build_torus(p), terms)
    assert rep.entries["time_orientation"].violation < 1e-13


def test_time_orientation_random_elliptic():
    rng = np.random.default_rng(3)
    for _ in range(4):
        p = TorusParams(tau=random_elliptic_tau(rng), N=4)
        rep = check_time_orientation(build_torus(p), time_orientation_terms(p))
        assert rep.entries["time_orientation"].violation < 1e-12


def test_time_orientation_degenerate_raises():
    with pytest.raises(ValueError):
        time_orientation_terms(TorusParams(tau=(1.0, 1.0, 1.0, 1.0)))


def test_orientation_two_form():
    p = TorusParams(theta=0.0, N=3)
    rep = torus_orientation_two_form(p)
    entry = rep.entries["orientation_two_form"]
    assert entry.violation < 1e-13
    # -beta gamma is the constant off-diagonal block with entries -1
    b = build_torus(p)
    sigma = (-1.0 * (b.krein @ b.grading)).to_dense()
    idx = basis_index(b)
    assert sigma[idx[(-1, 0, 0)], idx[(+1, 0, 0)]] == pytest.approx(-1.0)
    assert sigma[idx[(+1, 0, 0)], idx[(-1, 0, 0)]] == pytest.approx(-1.0)
    with pytest.raises(ValueError):
        torus_orientation_two_form(TorusParams(tau=(1.0, 1.0, 1.0, 1.0)))


def test_one_form_norm_constant_across_sizes():
    # [D, pi(U)] is the constant spinor block tensored with a shift, so its
    # norm is max(|tau1+|, |tau1-|) at every window size.
    p = TorusParams(tau=(0.8, 0.1, -1.4, 0.9), N=4)
    want = max(abs(p.tau[0]), abs(p.tau[2]))
    for b in torus_ladder(p, [4, 8, 16]):
        got = op_norm(masked_columns(commutator(b.dirac, b.generator("U")),
                                     b.truncation.interior(1)))
        assert got == pytest.approx(want, abs=1e-12)
