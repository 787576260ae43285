"""The (1,1) Lorentzian geometry on the noncommutative two-torus.

Basis |n,m,s> with |n|,|m| <= N and spinor s = +-1.  The algebra acts by
pi(U)|n,m> = |n+1,m> and pi(V)|n,m> = lambda^{-n} |n,m+1> with lambda =
exp(2 pi i theta) on both spinor components.  The Dirac operator swaps the
spinor components with coefficients

    d^{+-}_{n,m} = tau1^{+-} (n + sigma_+) + tau2^{+-} (m + sigma_-),

the four real tau parameters being the full equivariant family and
(sigma_+, sigma_-) in {0, 1/2}^2 labelling the spin structure.

Conventions: gamma = diag(1, -1) blockwise, beta maps (v+, v-) to
(-v-, +v+), and the real structure is J = diag(J0, -J0) with the antilinear

    J0 |n,m> = lambda^{-nm - sigma_- n - sigma_+ m} |-n - 2 sigma_+, -m - 2 sigma_->.

The reflection point of J0 follows the spin structure; this is what makes
DJ = JD hold for all four spin structures (the coefficient family is odd
around (-sigma_+, -sigma_-)), and the phase is fixed by J0^2 = 1 together
with the commutant property of J0 pi(x) J0.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import LinOp, AntiLinOp, commutator, eig_dense, op_norm, masked_columns
from .triples import (
    AxiomReport,
    CheckResult,
    SpectralReport,
    TripleBundle,
    TruncationDescriptor,
    multiset_distance,
    sign_table,
)

GOLDEN_THETA = (np.sqrt(5.0) - 1.0) / 2.0

IDENTITY_TAU = (1.0, 0.0, 0.0, 1.0)  # (tau1+, tau2+, tau1-, tau2-)


@dataclass(frozen=True)
class TorusParams:
    theta: float = GOLDEN_THETA
    tau: tuple = IDENTITY_TAU
    spin: tuple = (0.0, 0.0)
    N: int = 6

    def __post_init__(self):
        if len(self.tau) != 4:
            raise ValueError("tau must be (tau1+, tau2+, tau1-, tau2-)")
        if any(s not in (0.0, 0.5) for s in self.spin):
            raise ValueError("spin structure labels must be 0 or 1/2")
        if self.N < 2:
            raise ValueError("window N must be at least 2")

    @property
    def lam(self):
        return np.exp(2j * np.pi * self.theta)

    def d_coeff(self, chirality, n, m):
        t1p, t2p, t1m, t2m = self.tau
        sp_, sm_ = self.spin
        if chirality > 0:
            return t1p * (n + sp_) + t2p * (m + sm_)
        return t1m * (n + sp_) + t2m * (m + sm_)

    def ellipticity_det(self):
        t1p, t2p, t1m, t2m = self.tau
        return t1p * t2m - t2p * t1m


def _lattice(N):
    side = 2 * N + 1
    pts = [(n, m) for n in range(-N, N + 1) for m in range(-N, N + 1)]
    index = {pt: i for i, pt in enumerate(pts)}
    return side, pts, index


def build_torus(p: TorusParams) -> TripleBundle:
    N = p.N
    side, pts, index = _lattice(N)
    npts = len(pts)
    dim = 2 * npts
    lam_pow = lambda e: np.exp(2j * np.pi * p.theta * e)

    def idx(s, n, m):
        return (0 if s > 0 else npts) + index[(n, m)]

    def doubled(entry_iter):
        triples = []
        for (n, m), (n2, m2), val in entry_iter:
            if abs(n2) > N or abs(m2) > N:
                continue
            for s in (+1, -1):
                triples.append((idx(s, n2, m2), idx(s, n, m), val))
        return LinOp.from_triples(dim, triples)

    pi_u = doubled(((n, m), (n + 1, m), 1.0) for n, m in pts)
    pi_v = doubled(((n, m), (n, m + 1), lam_pow(-n)) for n, m in pts)
    generators = {"U": pi_u, "V": pi_v, "U*": pi_u.adjoint(), "V*": pi_v.adjoint()}

    dirac = LinOp.from_triples(dim, (
        trip for n, m in pts for trip in (
            (idx(-1, n, m), idx(+1, n, m), p.d_coeff(+1, n, m)),
            (idx(+1, n, m), idx(-1, n, m), p.d_coeff(-1, n, m)))))

    grading = LinOp.from_triples(dim, (
        (idx(s, n, m), idx(s, n, m), float(s)) for n, m in pts for s in (+1, -1)))

    # beta (v+, v-) = (-v-, +v+): squares to -1, anti-hermitian, and makes
    # the closed-form time-orientation coefficients below exact.
    krein = LinOp.from_triples(dim, (
        trip for n, m in pts for trip in (
            (idx(+1, n, m), idx(-1, n, m), -1.0),
            (idx(-1, n, m), idx(+1, n, m), +1.0))))

    sp_, sm_ = p.spin
    twop, twor = int(2 * sp_), int(2 * sm_)
    j_triples = []
    for n, m in pts:
        n2, m2 = -n - twop, -m - twor
        if abs(n2) > N or abs(m2) > N:
            continue
        phase = lam_pow(-(n * m + sm_ * n + sp_ * m))
        j_triples.append((idx(+1, n2, m2), idx(+1, n, m), phase))
        j_triples.append((idx(-1, n2, m2), idx(-1, n, m), -phase))
    reality = AntiLinOp(LinOp.from_triples(dim, j_triples))

    delta1 = LinOp.from_triples(dim, (
        (idx(s, n, m), idx(s, n, m), float(n)) for n, m in pts for s in (+1, -1)))
    delta2 = LinOp.from_triples(dim, (
        (idx(s, n, m), idx(s, n, m), float(m)) for n, m in pts for s in (+1, -1)))

    distance = np.zeros(dim, dtype=int)
    for n, m in pts:
        d = min(N - abs(n), N - abs(m))
        distance[idx(+1, n, m)] = d
        distance[idx(-1, n, m)] = d

    basis = tuple((s, n, m) for s in (+1, -1) for n, m in pts)
    truncation = TruncationDescriptor(basis=basis, distance=distance,
                                      label=f"torus-N{N}")

    return TripleBundle(
        generators=generators,
        dirac=dirac,
        krein=krein,
        reality=reality,
        grading=grading,
        signs=sign_table(1, 1),
        signature=(1, 1),
        truncation=truncation,
        symmetry_generators={"delta1": delta1, "delta2": delta2},
        derivation_weights={
            ("delta1", "U"): 1.0, ("delta2", "U"): 0.0,
            ("delta1", "V"): 0.0, ("delta2", "V"): 1.0,
            ("delta1", "U*"): -1.0, ("delta2", "U*"): 0.0,
            ("delta1", "V*"): 0.0, ("delta2", "V*"): -1.0,
        },
        step_costs={"gen": 1, "dirac": 0,
                    "reality": 1 if (sp_, sm_) != (0.0, 0.0) else 0},
        label=f"torus N={N} theta={p.theta:g}",
        params={"geometry": "torus", "theta": p.theta, "tau": list(p.tau),
                "spin": list(p.spin), "N": N},
    )


def torus_ladder(p: TorusParams, sizes) -> list:
    return [build_torus(replace(p, N=int(N))) for N in sorted(sizes)]


def torus_spectrum(p: TorusParams, cross_check: bool = True) -> SpectralReport:
    """Eigenvalues +-sqrt(d+ d-) per lattice site, from the 2x2 spinor
    blocks [[0, d-], [d+, 0]]; imaginary pairs where the product is
    negative."""
    values, blocks = [], []
    residual = 0.0
    _, pts, _ = _lattice(p.N)
    for n, m in pts:
        dp = p.d_coeff(+1, n, m)
        dm = p.d_coeff(-1, n, m)
        root = np.sqrt(complex(dp * dm))
        pair = np.array([-root, root])
        if cross_check:
            block = LinOp.from_dense(np.array([[0.0, dm], [dp, 0.0]], dtype=complex))
            got = eig_dense(block, tol=1e-12)
            residual = max(residual, multiset_distance(got.eigenvalues, pair),
                           float(got.residuals.max()))
        values.extend(pair)
        blocks.append((f"n={n},m={m}", pair))
    report = SpectralReport.from_values(values, residual_max=residual, blocks=blocks)
    report.meta["geometry"] = "torus"
    return report


def torus_ellipticity(p: TorusParams) -> dict:
    """Gram matrix of the mean-square symbol on the lattice directions and
    the compactness verdict det > 0, i.e. tau1+ tau2- != tau2+ tau1-."""
    t1p, t2p, t1m, t2m = p.tau
    form = np.array([
        [t1p ** 2 + t1m ** 2, t1p * t2p + t1m * t2m],
        [t1p * t2p + t1m * t2m, t2p ** 2 + t2m ** 2],
    ])
    det = float(np.linalg.det(form))
    return {"elliptic": bool(p.ellipticity_det() ** 2 > 1e-24),
            "quadratic_form": form, "det": det}


def torus_metric(p: TorusParams) -> dict:
    """Metric of the commutative limit from the anticommutators of the
    constant spinor blocks Gamma_i = [[0, tau_i+], [tau_i-, 0]]:
    Gamma_i Gamma_j + Gamma_j Gamma_i = -2 g_ij.  Emitted for any theta but
    flagged formal away from theta = 0, where the state space is not the
    classical torus."""
    t1p, t2p, t1m, t2m = p.tau
    g = -np.array([
        [t1p * t1m, 0.5 * (t2p * t1m + t1p * t2m)],
        [0.5 * (t2p * t1m + t1p * t2m), t2p * t2m],
    ])
    gammas = [np.array([[0.0, t1p], [t1m, 0.0]]), np.array([[0.0, t2p], [t2m, 0.0]])]
    viol = 0.0
    for i in range(2):
        for j in range(2):
            anti = gammas[i] @ gammas[j] + gammas[j] @ gammas[i]
            viol = max(viol, np.abs(anti + 2.0 * g[i, j] * np.eye(2)).max())
    det = float(np.linalg.det(g))
    evals = np.linalg.eigvalsh(g)
    if evals[0] < 0 < evals[1]:
        signature = (1, 1)
    elif np.all(evals > 0):
        signature = (2, 0)
    elif np.all(evals < 0):
        signature = (0, 2)
    else:
        signature = "degenerate"
    return {"g": g, "det": det, "signature": signature,
            "formal": bool(p.theta != 0.0), "anticommutator_violation": float(viol)}


def time_orientation_terms(p: TorusParams):
    """Coefficients w, z with beta = w U*[D,U] + z V*[D,V].

    Solving the 2x2 linear system for the constant spinor blocks gives
    w = (tau2- + tau2+)/Delta and z = -(tau1- + tau1+)/Delta with
    Delta = tau1+ tau2- - tau2+ tau1-."""
    t1p, t2p, t1m, t2m = p.tau
    delta = p.ellipticity_det()
    if delta == 0.0:
        raise ValueError("time orientation needs tau1+ tau2- != tau2+ tau1-")
    w = (t2m + t2p) / delta
    z = -(t1m + t1p) / delta
    return [("1", "U*", "U", w), ("1", "V*", "V", z)]


def torus_orientation_two_form(p: TorusParams, bundle: TripleBundle | None = None) -> AxiomReport:
    """Check that -beta gamma equals the one-form
    w U*[D,U] + z V*[D,V] with w = (tau2+ - tau2-)/Delta and
    z = (tau1- - tau1+)/Delta (the unique solution of the defining 2x2
    system with our beta, gamma orientation)."""
    t1p, t2p, t1m, t2m = p.tau
    delta = p.ellipticity_det()
    if delta == 0.0:
        raise ValueError("orientation two-form needs tau1+ tau2- != tau2+ tau1-")
    w = (t2p - t2m) / delta
    z = (t1m - t1p) / delta
    b = bundle if bundle is not None else build_torus(p)
    sigma_built = -1.0 * (b.krein @ b.grading)
    sigma_formula = (
        w * (b.generator("U*") @ commutator(b.dirac, b.generator("U")))
        + z * (b.generator("V*") @ commutator(b.dirac, b.generator("V"))))
    mask = b.truncation.interior(2)
    viol = op_norm(masked_columns(sigma_built - sigma_formula, mask))
    rep = AxiomReport()
    rep.add("orientation_two_form", CheckResult(
        float(viol), 1.0, 1e-10, viol <= 1e-10, True, "orientation",
        {"w": w, "z": z}))
    return rep


def random_elliptic_tau(rng, min_det: float = 0.3, scale: float = 2.0):
    while True:
        tau = tuple(rng.uniform(-scale, scale, size=4))
        if abs(tau[0] * tau[3] - tau[1] * tau[2]) >= min_det:
            return tau
