import numpy as np
import pytest

from kreinspec.linalg import LinOp, masked_columns, op_norm
from kreinspec.sphere import (
    SphereParams,
    abs_dirac_sq_state_value,
    build_sphere,
    dirac_block_eigenvalues,
    sphere_abs_spectrum,
    sphere_blocks,
    sphere_metric,
    sphere_spectrum,
    sphere_time_orientation,
)
from kreinspec.torus import GOLDEN_THETA
from kreinspec.triples import multiset_distance, run_suite


def basis_index(bundle):
    return {bi: i for i, bi in enumerate(bundle.truncation.basis)}


def test_generator_action_at_origin():
    # a|0,0,0> = (1/sqrt2) |1/2, 1/2, 1/2> on both spinor components (up to
    # the lam^{s/4} twist); the l- term is absent at l = 0.
    p = SphereParams(theta=0.0, L=1.0)
    b = build_sphere(p)
    idx = basis_index(b)
    col = b.generator("a").to_dense()[:, idx[(0, 0, 0, +1)]]
    assert col[idx[(1, 1, 1, +1)]] == pytest.approx(1 / np.sqrt(2))
    assert np.count_nonzero(col) == 1


def test_krein_relations_exact():
    b = build_sphere(SphereParams(L=1.5))
    ident = LinOp.identity(b.dim)
    assert op_norm(b.krein @ b.krein + ident) == 0.0
    assert op_norm(b.krein + b.krein.adjoint()) == 0.0
    for g in ("a", "b", "a*", "b*"):
        assert op_norm(b.krein @ b.generator(g) - b.generator(g) @ b.krein) < 1e-12


def test_reality_squares_to_one():
    # J^2 = i^{-4(m+n)} = 1 because m + n is an integer on every multiplet.
    b = build_sphere(SphereParams(L=1.5))
    assert op_norm(b.reality.squared() - LinOp.identity(b.dim)) == 0.0


def test_algebra_sphere_relations():
    b = build_sphere(SphereParams(L=2.0))
    mask = b.truncation.interior(2)
    ident = LinOp.identity(b.dim)
    A, B = b.generator("a"), b.generator("b")
    As, Bs = b.generator("a*"), b.generator("b*")
    for expr in (As @ A + Bs @ B - ident, A @ As + B @ Bs - ident):
        assert op_norm(masked_columns(expr, mask)) < 1e-13


def test_block_exactness_and_dims():
    p = SphereParams(L=2.0)
    blocks = sphere_blocks(p)
    total = 0
    for blk in blocks:
        assert blk.matrix.shape == (2 * (blk.two_l + 1), 2 * (blk.two_l + 1))
        total += blk.matrix.shape[0]
    assert total == build_sphere(p).dim
    zero_block = [blk for blk in blocks if blk.two_l == 0][0]
    assert np.all(zero_block.matrix == 0)
    count = sum(1 for blk in blocks if blk.two_l == 1)
    assert count == 2  # n = -1/2, +1/2


def test_full_suite_criterion_parameters():
    for R, S in [(1.0, 1.0), (1.0, 1j), (2.0, 0.5)]:
        b = build_sphere(SphereParams(R=R, S=S, L=3.0))
        rep = run_suite(b)
        assert rep.all_asserted_passed(), (R, S, rep.failures())
        for name in ("order_one", "order_zero", "reality_involution",
                     "reality_dirac", "krein_reality"):
            assert rep.entries[name].violation <= 1e-10


def test_spectrum_matches_closed_form():
    report = sphere_spectrum(SphereParams(theta=0.0, R=1.0, S=1.0, L=3.0))
    assert report.meta["root_prefactor"] == 1.0
    assert report.meta["formula_max_residual"] < 1e-9
    # the halved-root convention is excluded by orders of magnitude
    assert report.meta["formula_residual_by_prefactor"]["0.5"] > 0.1


def test_spectrum_r_zero_real_with_zero_modes():
    p = SphereParams(theta=0.0, R=0.0, S=1.0, L=2.5)
    report = sphere_spectrum(p)
    flat = report.flat()
    assert np.abs(flat.imag).max() == 0.0
    # +-|S| sqrt((l-m)(l+m+1)) with zeros exactly from the extreme states
    want = []
    for blk in sphere_blocks(p):
        vals = dirac_block_eigenvalues(blk.two_l, 0.0, 1.0)
        want.extend(vals)
    assert multiset_distance(flat, np.asarray(want)) < 1e-10
    zeros_small = int(np.sum(np.abs(sphere_spectrum(
        SphereParams(theta=0.0, R=0.0, S=1.0, L=2.0)).flat()) < 1e-12))
    zeros_large = int(np.sum(np.abs(flat) < 1e-12))
    assert zeros_large > zeros_small  # zero multiplicity grows with the cutoff


def test_spectrum_s_zero_pure_imaginary():
    p = SphereParams(theta=0.0, R=1.0, S=0.0, L=2.5)
    flat = sphere_spectrum(p).flat()
    assert np.abs(flat.real).max() == 0.0
    # family -(1/2) i R (1 +- (1+2m)) = {i R m, -i R (m+1)} per coupled
    # sector m = -l..l-1, plus the two extreme states at i R l
    for blk in sphere_blocks(p):
        got = np.linalg.eigvals(blk.matrix)
        l = blk.two_l / 2.0
        want = [1j * l, 1j * l]
        for tm in range(-blk.two_l, blk.two_l, 2):
            m = tm / 2.0
            want.extend([1j * m, -1j * (m + 1)])
        assert multiset_distance(got, np.asarray(want)) < 1e-10


def test_spectrum_reflection_symmetry_of_paired_sector():
    # Eigenvalues from the coupled 2x2 sectors are symmetric about the
    # horizontal line Im = -R/2, i.e. invariant under z -> conj(z) - iR.
    # The two extreme states (eigenvalue iRl) sit outside this pairing.
    R, S = 1.0, 1.3
    for blk in sphere_blocks(SphereParams(theta=0.0, R=R, S=S, L=2.5)):
        vals = list(np.linalg.eigvals(blk.matrix))
        l = blk.two_l / 2.0
        for _ in range(2):  # remove the two extreme eigenvalues i R l
            k = int(np.argmin(np.abs(np.asarray(vals) - 1j * R * l)))
            vals.pop(k)
        vals = np.asarray(vals)
        assert multiset_distance(vals, np.conj(vals) - 1j * R) < 1e-9


def test_spectrum_block_degeneracy_structure():
    # Within one block the coupled sectors m and -(m+1) share (m+1/2)^2 and
    # hence their eigenvalue pairs: the reality symmetry J (which reflects
    # m) forces this two-fold degeneracy.  Sector m = -1/2 is self-paired.
    # For an irrational |S|/R nothing else collides.
    p = SphereParams(theta=0.0, R=1.0, S=np.sqrt(2.0), L=2.5)
    for blk in sphere_blocks(p):
        vals = np.sort_complex(np.linalg.eigvals(blk.matrix))
        mults = []
        k = 0
        while k < len(vals):
            run = 1
            while k + run < len(vals) and abs(vals[k + run] - vals[k]) < 1e-9:
                run += 1
            mults.append(run)
            k += run
        l = blk.two_l / 2.0
        # paired sectors contribute multiplicity 2; the self-paired sector
        # m = -1/2 (half-integer l only) and the extreme pair contribute
        # ones and twos as derived
        assert set(mults) <= {1, 2}
        expected_total = 2 * (blk.two_l + 1)
        assert sum(mults) == expected_total
        if blk.two_l % 2 == 0:  # integer l: no self-paired sector
            n_deg2 = sum(1 for m in mults if m == 2)
            assert n_deg2 >= blk.two_l  # all coupled sectors come in pairs


def test_abs_spectrum_formula_and_compactness():
    report = sphere_abs_spectrum(SphereParams(theta=0.0, R=1.0, S=1.0, L=3.0),
                                 counting_cutoffs=[2.0, 3.0, 4.0])
    assert report.residual_max < 1e-9
    assert report.meta["compactness"] == "compact-consistent"
    report = sphere_abs_spectrum(SphereParams(theta=0.0, R=0.0, S=1.0, L=3.0),
                                 counting_cutoffs=[2.0, 3.0, 4.0], lambdas=(0.1, 1.0))
    assert report.meta["compactness"] == "non-compact-consistent"


def test_abs_state_values():
    # l = 1/2 block: per-state values R^2 m^2 + |S|^2 (l -+ m)(l +- m + 1)
    vals = sorted([abs_dirac_sq_state_value(1, tm, s, 1.0, 1.0)
                   for tm in (-1, 1) for s in (+1, -1)])
    assert np.allclose(vals, [0.25, 0.25, 1.25, 1.25])
    # l = 0 block is annihilated by D entirely
    assert abs_dirac_sq_state_value(0, 0, +1, 1.0, 1.0) == 0.0
    assert abs_dirac_sq_state_value(0, 0, -1, 1.0, 1.0) == 0.0


def test_metric_reconstruction():
    out = sphere_metric(SphereParams(theta=0.0, R=2.0, S=1.0, L=2.5))
    assert np.allclose(np.diag(out["g"]), [-0.5, -0.5, 0.5], atol=1e-9)
    assert np.abs(out["g"] - np.diag(np.diag(out["g"]))).max() < 1e-9
    assert out["signature"] == (1, 2)
    rng = np.random.default_rng(5)
    for _ in range(3):
        R = rng.uniform(0.5, 2.0)
        S = rng.uniform(0.5, 1.5) * np.exp(1j * rng.uniform(0, 2 * np.pi))
        out = sphere_metric(SphereParams(theta=0.0, R=R, S=S, L=2.5))
        want = 0.5 * np.diag([-abs(S) ** 2, -abs(S) ** 2, 0.25 * R ** 2])
        assert np.allclose(out["g"], want, atol=1e-9)
        assert out["signature"] == (1, 2)


def test_metric_requires_classical_point():
    with pytest.raises(ValueError):
        sphere_metric(SphereParams(theta=GOLDEN_THETA, L=2.0))
    out = sphere_metric(SphereParams(theta=0.0, L=2.0))
    assert out["scalar_violation"] < 1e-9


def test_time_orientation_reports():
    p = SphereParams(theta=0.0, R=1.0, S=1.0, L=2.5)
    rep = sphere_time_orientation(p)
    cyc = rep.entries["time_orientation_cycle"]
    ls = rep.entries["time_orientation_least_squares"]
    # least squares over a superset of candidates can never do worse
    assert ls.violation <= cyc.violation + 1e-12
    # an exact algebraic reconstruction of beta exists; the discovered
    # coefficient on the cycle combination is -1/R, not i/R
    assert ls.extra["relative_residual"] < 1e-10
    fitted = complex(*cyc.extra["fitted_coefficient"])
    assert fitted == pytest.approx(-1.0, abs=1e-9)
    assert cyc.extra["fitted_residual"] < 1e-9


def test_time_orientation_scaling_in_r():
    # the defining equation is linear in 1/R for the diagonal part of D,
    # so the fitted cycle coefficient halves when R doubles
    c1 = complex(*sphere_time_orientation(SphereParams(theta=0.0, R=1.0, S=1.0, L=2.0))
                 .entries["time_orientation_cycle"].extra["fitted_coefficient"])
    c2 = complex(*sphere_time_orientation(SphereParams(theta=0.0, R=2.0, S=1.0, L=2.0))
                 .entries["time_orientation_cycle"].extra["fitted_coefficient"])
    assert c2 == pytest.approx(c1 / 2.0, abs=1e-9)


def test_time_orientation_needs_r():
    with pytest.raises(ValueError):
        sphere_time_orientation(SphereParams(theta=0.0, R=0.0, S=1.0, L=2.0))


def test_isospectrality_across_theta():
    spectra = [np.sort_complex(sphere_spectrum(SphereParams(theta=t, L=2.0)).flat())
               for t in (0.0, 1.0 / 3.0, GOLDEN_THETA)]
    assert np.array_equal(spectra[0], spectra[1])
    assert np.array_equal(spectra[0], spectra[2])
