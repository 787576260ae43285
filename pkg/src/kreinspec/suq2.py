"""Candidate Lorentzian spectral data on the quantum group SU_q(2).

Spinor basis |j,mu,n,s> with j = 0, 1/2, ..., J_cut, mu = -j..j,
n = -j-1/2..j+1/2 and s in {up, down}; the down component is absent at
n = +-(j+1/2) and at j = 0.  Symmetric q-numbers throughout:
[x] = (q^x - q^{-x})/(q - q^{-1}).

The generators act through triangular 2x2 spin matrices (one per branch
j -> j +- 1/2); a shifts (mu, n) by (+1/2, +1/2) and b by (+1/2, -1/2),
with a* and b* their matrix adjoints.  The Krein symmetry is
beta = diag(i, -i), which commutes with the algebra only up to terms that
decay like q^{2j}; the tail norms are measured, not assumed.

The Dirac family, diagonal in (j, mu, n) and mixing only the spinor,

  D |j,mu,n,up>   =  i (r_up j + R_up) |up> + i Shat(j,n) |dn>,
  D |j,mu,n,dn>   = -i (r_dn j + R_dn) |dn> - i Shat(j,n) |up>,

with Shat(j,n) = S (j+n+1/2) q^{j-2n} sqrt([j-n+1/2]/[j+n+1/2]), is
beta-selfadjoint for real parameters and commutes with the right quantum
symmetry (mu-ladder) and the residual u(1) (n-grading).  Shat vanishes
identically at n = +-(j+1/2), so the single-component edge states are
D-eigenvectors with the purely imaginary eigenvalue i (r_up j + R_up); any
steeper edge family (slope 2r instead of r in j) is ruled out by
boundedness, because the generators connect edge states to interior states
with O(1) amplitudes and [D, pi(a)] would inherit the linearly growing
diagonal jump.  Under the reduction r_up = -r_dn = r, R_up = (3/2) r,
R_dn = r/2 each interior (j,mu,n) sector contributes

  lambda = (i/2) r (2j+1) +- sqrt(Shat(j,n)^2 - r^2),

and the edge family is i r (j + 3/2).

No order-one condition holds here; its violation is reported as a
measurement (it must not vanish).
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .linalg import LinOp, AntiLinOp, commutator, eig_dense, masked_columns, op_norm
from .triples import (
    SpectralReport,
    TripleBundle,
    TruncationDescriptor,
    abs_dirac,
    multiset_distance,
    sign_table,
)


def qnum(x: float, q: float) -> float:
    """Symmetric q-number [x] = (q^x - q^-x)/(q - q^-1)."""
    if x == 0:
        return 0.0
    return (q ** x - q ** (-x)) / (q - 1.0 / q)


def _qsqrt(x, q):
    v = qnum(x, q)
    if v < -1e-12:
        raise ValueError(f"negative q-number radicand [{x}] = {v:.3g}")
    return np.sqrt(max(v, 0.0))


@dataclass(frozen=True)
class SuqParams:
    q: float = 0.5
    r_up: float = 1.0
    r_dn: float = -1.0
    R_up: float = 1.5
    R_dn: float = 0.5
    S: float = 1.0
    J_cut: float = 4.0

    def __post_init__(self):
        if not 0.0 < self.q < 1.0:
            raise ValueError("q must lie strictly between 0 and 1")
        if abs(2 * self.J_cut - round(2 * self.J_cut)) > 1e-12 or self.J_cut < 1:
            raise ValueError("J_cut must be a half-integer >= 1")

    @classmethod
    def reduced(cls, q=0.5, r=1.0, S=1.0, J_cut=4.0):
        """The one-parameter diagonal family r_up = -r_dn = r,
        R_up = R_dn + r = (3/2) r."""
        return cls(q=q, r_up=r, r_dn=-r, R_up=1.5 * r, R_dn=0.5 * r, S=S, J_cut=J_cut)

    @property
    def two_J(self):
        return round(2 * self.J_cut)

    def shat(self, j: float, n: float) -> float:
        if abs(n) >= j + 0.5:
            return 0.0  # vanishes at both n edges (continuously at the lower one)
        return (self.S * (j + n + 0.5) * self.q ** (j - 2 * n)
                * np.sqrt(qnum(j - n + 0.5, self.q) / qnum(j + n + 0.5, self.q)))


def _basis(two_J):
    """(2j, 2mu, 2n, s) with s = +1 (up) / -1 (down); down absent at the
    n edges and at j = 0.  Ordered so each (j, mu, n) sector is contiguous."""
    out = []
    for tj in range(two_J + 1):
        for tmu in range(-tj, tj + 1, 2):
            for tn in range(-tj - 1, tj + 2, 2):
                out.append((tj, tmu, tn, +1))
                if tj > 0 and abs(tn) != tj + 1:
                    out.append((tj, tmu, tn, -1))
    return out


def arrow_matrices(p: SuqParams, two_j: int, two_mu: int, two_n: int) -> dict:
    """The four triangular 2x2 coefficient matrices at (j, mu, n); keys
    'a+', 'a-', 'b+', 'b-' for the branches j -> j +- 1/2.  Rows and
    columns are ordered (up, down); a zero matrix marks an absent branch,
    and the down column is zero where the down source state is absent."""
    q = p.q
    j, mu, n = two_j / 2.0, two_mu / 2.0, two_n / 2.0
    has_down = two_j > 0 and abs(two_n) != two_j + 1
    pref = q ** ((mu + n - 0.5) / 2.0)
    out = {}
    up_pref = pref * _qsqrt(j + mu + 1, q)
    out["a+"] = up_pref * np.array([
        [q ** (-j - 0.5) * _qsqrt(j + n + 1.5, q) / qnum(2 * j + 2, q), 0.0],
        [q ** 0.5 * _qsqrt(j - n + 0.5, q) / (qnum(2 * j + 1, q) * qnum(2 * j + 2, q)),
         q ** (-j) * _qsqrt(j + n + 0.5, q) / qnum(2 * j + 1, q) if has_down else 0.0],
    ])
    out["b+"] = up_pref * np.array([
        [_qsqrt(j - n + 1.5, q) / qnum(2 * j + 2, q), 0.0],
        [-q ** (-j - 1) * _qsqrt(j + n + 0.5, q) / (qnum(2 * j + 1, q) * qnum(2 * j + 2, q)),
         q ** (-0.5) * _qsqrt(j - n + 0.5, q) / qnum(2 * j + 1, q) if has_down else 0.0],
    ])
    if two_j > 0 and two_mu < two_j:
        dn_pref = pref * _qsqrt(j - mu, q)
        out["a-"] = dn_pref * np.array([
            [q ** (j + 1) * _qsqrt(j - n + 0.5, q) / qnum(2 * j + 1, q),
             -q ** 0.5 * _qsqrt(j + n + 0.5, q) / (qnum(2 * j, q) * qnum(2 * j + 1, q))
             if has_down else 0.0],
            [0.0, q ** (j + 0.5) * _qsqrt(j - n - 0.5, q) / qnum(2 * j, q)
             if has_down else 0.0],
        ])
        out["b-"] = dn_pref * np.array([
            [-q ** (-0.5) * _qsqrt(j + n + 0.5, q) / qnum(2 * j + 1, q),
             -q ** j * _qsqrt(j - n + 0.5, q) / (qnum(2 * j, q) * qnum(2 * j + 1, q))
             if has_down else 0.0],
            [0.0, -_qsqrt(j + n - 0.5, q) / qnum(2 * j, q) if has_down else 0.0],
        ])
    else:
        out["a-"] = np.zeros((2, 2))
        out["b-"] = np.zeros((2, 2))
    return out


def build_suq2(p: SuqParams, branch_phase=None) -> TripleBundle:
    """branch_phase(two_j, branch) may supply a j-dependent unit phase on
    the generator coefficient matrices; the axiom checks are insensitive to
    it (a*, b* are built as matrix adjoints, so adjointness is automatic)."""
    two_J = p.two_J
    basis = _basis(two_J)
    index = {bi: i for i, bi in enumerate(basis)}
    dim = len(basis)

    def add_gen(shift_mu, shift_n, key_plus, key_minus):
        triples = []
        for (tj, tmu, tn, s) in basis:
            mats = arrow_matrices(p, tj, tmu, tn)
            col_s = 0 if s > 0 else 1
            for branch, key in ((+1, key_plus), (-1, key_minus)):
                tj2 = tj + branch
                if tj2 < 0 or tj2 > two_J:
                    continue
                mat = mats[key]
                if branch_phase is not None:
                    mat = mat * branch_phase(tj, branch)
                tmu2, tn2 = tmu + shift_mu, tn + shift_n
                for row_s, s2 in ((0, +1), (1, -1)):
                    val = mat[row_s, col_s]
                    if val == 0.0:
                        continue
                    tgt = (tj2, tmu2, tn2, s2)
                    if tgt in index:
                        triples.append((index[tgt], index[(tj, tmu, tn, s)], val))
        return LinOp.from_triples(dim, triples)

    pi_a = add_gen(+1, +1, "a+", "a-")
    pi_b = add_gen(+1, -1, "b+", "b-")
    generators = {"a": pi_a, "b": pi_b, "a*": pi_a.adjoint(), "b*": pi_b.adjoint()}

    d_triples = []
    for (tj, tmu, tn, s) in basis:
        j, n = tj / 2.0, tn / 2.0
        i = index[(tj, tmu, tn, s)]
        if s > 0:
            d_triples.append((i, i, 1j * (p.r_up * j + p.R_up)))
            tgt = (tj, tmu, tn, -1)
            if tgt in index:
                d_triples.append((index[tgt], i, 1j * p.shat(j, n)))
        else:
            d_triples.append((i, i, -1j * (p.r_dn * j + p.R_dn)))
            d_triples.append((index[(tj, tmu, tn, +1)], i, -1j * p.shat(j, n)))
    dirac = LinOp.from_triples(dim, d_triples)

    krein = LinOp.from_triples(dim, ((index[bi], index[bi], 1j * bi[3]) for bi in basis))

    # No reality structure exists for this geometry; the flip-conjugation
    # below is only a probe so the order-one violation can be quantified.
    j_triples = []
    for (tj, tmu, tn, s) in basis:
        j_triples.append((index[(tj, -tmu, -tn, s)], index[(tj, tmu, tn, s)], 1.0))
    reality = AntiLinOp(LinOp.from_triples(dim, j_triples))

    weight_mu = LinOp.from_triples(dim, ((index[bi], index[bi], float(bi[1]))
                                         for bi in basis))
    rot_n = LinOp.from_triples(dim, ((index[bi], index[bi], float(bi[2]))
                                     for bi in basis))
    ladder = []
    for (tj, tmu, tn, s) in basis:
        if tmu < tj:
            j, mu = tj / 2.0, tmu / 2.0
            ladder.append((index[(tj, tmu + 2, tn, s)], index[(tj, tmu, tn, s)],
                           _qsqrt(j - mu, p.q) * _qsqrt(j + mu + 1, p.q)))
    ladder_up = LinOp.from_triples(dim, ladder)

    distance = np.array([two_J - bi[0] for bi in basis], dtype=int)
    truncation = TruncationDescriptor(basis=tuple(basis), distance=distance,
                                      label=f"suq2-2J{two_J}")

    return TripleBundle(
        generators=generators,
        dirac=dirac,
        krein=krein,
        reality=reality,
        grading=None,
        signs=sign_table(1, 2),
        signature=(1, 2),
        truncation=truncation,
        symmetry_generators={"weight_mu": weight_mu, "rot_n": rot_n,
                             "ladder_mu+": ladder_up, "ladder_mu-": ladder_up.adjoint()},
        derivation_weights={
            ("weight_mu", "a"): 1.0, ("weight_mu", "b"): 1.0,
            ("weight_mu", "a*"): -1.0, ("weight_mu", "b*"): -1.0,
            ("rot_n", "a"): 1.0, ("rot_n", "b"): -1.0,
            ("rot_n", "a*"): -1.0, ("rot_n", "b*"): 1.0,
        },
        step_costs={"gen": 1, "dirac": 0, "reality": 0},
        soft_checks=frozenset({"reality", "reality_dirac", "order_zero",
                               "order_one", "krein_commutant", "krein_reality"}),
        label=f"suq2 2J={two_J} q={p.q:g}",
        params={"geometry": "suq2", "q": p.q, "r_up": p.r_up, "r_dn": p.r_dn,
                "R_up": p.R_up, "R_dn": p.R_dn, "S": p.S, "J_cut": p.J_cut},
    )


def suq2_ladder(p: SuqParams, cutoffs) -> list:
    return [build_suq2(replace(p, J_cut=float(J))) for J in sorted(cutoffs)]


def sector_eigenvalues(p: SuqParams, two_j: int, two_n: int) -> np.ndarray:
    """Closed-form D eigenvalues of one (j, mu, n) sector."""
    j, n = two_j / 2.0, two_n / 2.0
    alpha = p.r_up * j + p.R_up
    delta = p.r_dn * j + p.R_dn
    if abs(two_n) == two_j + 1 or two_j == 0:
        return np.array([1j * alpha])
    shat = p.shat(j, n)
    half_sum = 0.5 * (alpha + delta)
    root = np.sqrt(complex(shat ** 2 - half_sum ** 2))
    base = 0.5j * (alpha - delta)
    return np.array([base + root, base - root])


def suq2_dirac_spectrum(p: SuqParams, bundle: TripleBundle | None = None) -> SpectralReport:
    """Numerical spectrum per invariant (j, mu, n) sector against the
    derived closed form; edge eigenvalues are i(2 r_up j + R_up), of
    modulus r(2j + 3/2) under the reduced parameters."""
    b = bundle if bundle is not None else build_suq2(p)
    basis = b.truncation.basis
    index = {bi: i for i, bi in enumerate(basis)}
    dense = b.dirac.to_dense()
    values, blocks = [], []
    worst = 0.0
    edge_dev = 0.0          # against the implemented family i(r_up j + R_up)
    edge_claimed_dev = 0.0  # against the steeper modulus r_up (2j + 3/2)
    edge_realpart = 0.0
    for (tj, tmu, tn, s) in basis:
        if s < 0:
            continue
        idx = [index[(tj, tmu, tn, +1)]]
        if (tj, tmu, tn, -1) in index:
            idx.append(index[(tj, tmu, tn, -1)])
        sub = dense[np.ix_(idx, idx)]
        got = eig_dense(LinOp.from_dense(sub), tol=1e-11).eigenvalues
        want = sector_eigenvalues(p, tj, tn)
        worst = max(worst, multiset_distance(got, want))
        if abs(tn) == tj + 1:
            j = tj / 2.0
            edge_realpart = max(edge_realpart, float(np.abs(got.real).max()))
            edge_dev = max(edge_dev, abs(abs(got[0]) - abs(p.r_up * j + p.R_up)))
            edge_claimed_dev = max(edge_claimed_dev,
                                   abs(abs(got[0]) - abs(p.r_up * (2 * j + 1.5))))
        values.extend(got)
        blocks.append((f"2j={tj},2mu={tmu},2n={tn}", got))
    report = SpectralReport.from_values(values, residual_max=worst, blocks=blocks)
    report.meta = {
        "geometry": "suq2",
        "closed_form": "i r (2j+1)/2 +- sqrt(Shat^2 - r^2) inside, i(r_up j + R_up) at the n edges",
        "closed_form_max_residual": worst,
        "edge_max_real_part": edge_realpart,
        "edge_modulus_max_deviation": edge_dev,
        "edge_claimed_steeper_modulus_max_deviation": edge_claimed_dev,
    }
    return report


def abs_sq_sector_values(p: SuqParams, two_j: int, two_n: int) -> np.ndarray:
    """<D>^2 values of one sector: alpha^2 + Shat^2 (up), delta^2 + Shat^2
    (down), alpha^2 alone at the single-component edges."""
    j, n = two_j / 2.0, two_n / 2.0
    alpha = p.r_up * j + p.R_up
    delta = p.r_dn * j + p.R_dn
    if abs(two_n) == two_j + 1 or two_j == 0:
        return np.array([alpha ** 2])
    shat = p.shat(j, n)
    return np.array([min(alpha ** 2, delta ** 2) + shat ** 2,
                     max(alpha ** 2, delta ** 2) + shat ** 2])


def suq2_abs_spectrum(p: SuqParams, bundle: TripleBundle | None = None,
                      counting_cutoffs=None, lambdas=(1.0, 3.0)) -> SpectralReport:
    """Exact <D>^2 sector values cross-checked numerically, compared with
    the large-j approximation c r^2 (j + 1 +- 1/2)^2 + S^2 q^{2(j-n)}
    (j+n+1/2)^2 whose r^2 prefactor c in {1/2, 1} is decided by the fit,
    plus a counting-function compactness verdict over a cutoff ladder."""
    from .triples import compact_resolvent_probe
    b = bundle if bundle is not None else build_suq2(p)
    basis = b.truncation.basis
    index = {bi: i for i, bi in enumerate(basis)}
    d = b.dirac
    da = d.adjoint()
    h = (0.5 * (d @ da + da @ d)).to_dense()
    values, blocks = [], []
    worst = 0.0
    fit = {1.0: 0.0, 0.5: 0.0}
    r_eff = abs(p.r_up)
    for (tj, tmu, tn, s) in basis:
        if s < 0:
            continue
        idx = [index[(tj, tmu, tn, +1)]]
        if (tj, tmu, tn, -1) in index:
            idx.append(index[(tj, tmu, tn, -1)])
        sub = h[np.ix_(idx, idx)]
        got = np.linalg.eigvalsh(0.5 * (sub + sub.conj().T))
        want = np.sort(abs_sq_sector_values(p, tj, tn))
        scale = max(1.0, np.abs(want).max())
        worst = max(worst, float(np.abs(got - want).max()) / scale)
        j, n = tj / 2.0, tn / 2.0
        if abs(tn) != tj + 1 and tj > 0:
            sterm = p.S ** 2 * p.q ** (2 * (j - n)) * (j + n + 0.5) ** 2
            for c in fit:
                approx = np.sort([c * r_eff ** 2 * (j + 0.5) ** 2 + sterm,
                                  c * r_eff ** 2 * (j + 1.5) ** 2 + sterm])
                fit[c] = max(fit[c], float(np.abs(got - approx).max()) / scale)
        values.extend(got)
        blocks.append((f"2j={tj},2mu={tmu},2n={tn}", got))
    prefactor = min(fit, key=fit.get)
    report = SpectralReport.from_values(values, residual_max=worst, blocks=blocks)
    report.meta = {
        "geometry": "suq2",
        "exact_max_rel_residual": worst,
        "approx_r2_prefactor": prefactor,
        "approx_max_rel_deviation": fit[prefactor],
    }
    if counting_cutoffs is not None:
        probe = compact_resolvent_probe(suq2_ladder(p, counting_cutoffs), lambdas)
        report.counting_samples = probe
        report.meta["compactness"] = probe["verdict"]
    return report


def suq2_boundedness_probe(p: SuqParams, cutoffs=(4.0, 6.0, 8.0),
                           tail_range=(3, 8)) -> dict:
    """Measured boundedness data:

    - norms of [D, pi(x)] and [<D>, [D, pi(x)]] across the cutoff ladder
      with their worst growth per step,
    - tail norms ||[beta, pi(a)] P_{j >= J}|| with the fitted decay
      exponent per unit j (the commutation is only up to compacts; the
      expected slope is 2 ln q),
    - the order-one violation at the smallest cutoff (reported only; it
      must not vanish).
    """
    bundles = suq2_ladder(p, cutoffs)
    names = sorted(bundles[0].generators)
    one_form = {x: [] for x in names}
    regularity = {x: [] for x in names}
    for b in bundles:
        absd = abs_dirac(b)
        mask = b.truncation.interior(1)
        for x in names:
            inner = commutator(b.dirac, b.generator(x))
            one_form[x].append(op_norm(masked_columns(inner, mask)))
            regularity[x].append(op_norm(masked_columns(commutator(absd, inner), mask)))

    def growth(seq):
        return max((hi / max(lo, 1e-12) - 1.0) for lo, hi in zip(seq, seq[1:]))

    big = bundles[-1]
    basis = big.truncation.basis
    beta_comm = commutator(big.krein, big.generator("a"))
    tail_js = list(range(tail_range[0], tail_range[1] + 1))
    tail_norms = []
    for J in tail_js:
        mask = np.array([bi[0] >= 2 * J for bi in basis])
        tail_norms.append(op_norm(masked_columns(beta_comm, mask)))
    slope = float(np.polyfit(tail_js, np.log(tail_norms), 1)[0])

    small = bundles[0]
    from .triples import check_order_one
    order_one = check_order_one(small).entries["order_one"].violation

    return {
        "cutoffs": [b.params["J_cut"] for b in bundles],
        "one_form_norms": one_form,
        "one_form_worst_growth": {x: growth(v) for x, v in one_form.items()},
        "regularity_norms": regularity,
        "regularity_worst_growth": {x: growth(v) for x, v in regularity.items()},
        "beta_tail_js": tail_js,
        "beta_tail_norms": tail_norms,
        "beta_tail_exponent": slope,
        "beta_tail_expected_exponent": 2.0 * np.log(p.q),
        "order_one_violation": order_one,
    }
