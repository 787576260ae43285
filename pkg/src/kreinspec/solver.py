"""Rediscovery of the equivariant Dirac families as null spaces.

The equivariance shape of each geometry is hard-coded into an ansatz: a
list of real unknowns together with the structure operator each one
multiplies (complex unknowns are split into two real ones, so the
antilinear reality constraint stays linear).  The remaining defining
conditions -- order one, the reality compatibility DJ = eps JD, and Krein
selfadjointness D~ = beta D beta -- are each linear in the unknowns, so
every matrix entry of every condition contributes one row, and the family
of admissible Dirac operators is the null space of the stacked rows.

Unknowns referenced only through truncation-boundary sites are
under-constrained window artifacts; the reported family is the kernel
projected onto the core unknowns (those at interior sites).  Some kernel
directions are central, i.e. D(x) commutes with the whole represented
algebra and drops out of every one-form; they are detected and counted
separately -- on the torus the reality constraints kill them, while in the
(1,2) signature the constant i*identity always survives.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .linalg import LinOp, commutator, masked_columns, nullspace, op_norm
from .triples import TripleBundle, check_order_one

KERNEL_TOL = 1e-9
AFFINE_FIT_TOL = 1e-8


@dataclass(frozen=True)
class DiracAnsatz:
    """Linear parameterization D(x) = sum_k x_k S_k with real x."""

    geometry: str
    labels: tuple            # one tuple per unknown, e.g. ("d+", n, m) or ("d21", 2l, 2m, "re")
    structure: tuple         # LinOp per unknown
    core: np.ndarray         # bool per unknown: supported away from the window boundary

    @property
    def n_unknowns(self):
        return len(self.labels)

    def dirac(self, x) -> LinOp:
        x = np.asarray(x, dtype=float)
        dim = self.structure[0].dim
        total = LinOp.zeros(dim)
        for xk, sk in zip(x, self.structure):
            if xk != 0.0:
                total = total + float(xk) * sk
        return total


def torus_ansatz(bundle: TripleBundle) -> DiracAnsatz:
    """Real unknowns d+-(n,m) over the window; the equivariant shape maps
    |n,m,+-> to d+-(n,m) |n,m,-+>."""
    basis = bundle.truncation.basis
    index = {bi: i for i, bi in enumerate(basis)}
    n_max = max(abs(bi[1]) for bi in basis)
    labels, structure, core = [], [], []
    for chirality, tag in ((+1, "d+"), (-1, "d-")):
        sites = sorted({(n, m) for s, n, m in basis if s == chirality})
        for n, m in sites:
            labels.append((tag, n, m))
            structure.append(LinOp.from_triples(
                len(basis), [(index[(-chirality, n, m)], index[(chirality, n, m)], 1.0)]))
            core.append(max(abs(n), abs(m)) <= n_max - 2)
    return DiracAnsatz("torus", tuple(labels), tuple(structure),
                       np.asarray(core, dtype=bool))


def sphere_ansatz(bundle: TripleBundle) -> DiracAnsatz:
    """Complex unknowns d11, d22 (spinor-diagonal) and d21, d12 (spinor
    off-diagonal with an m shift), n-independent within each l multiplet,
    split into real and imaginary parts."""
    basis = bundle.truncation.basis
    index = {bi: i for i, bi in enumerate(basis)}
    two_L = max(bi[0] for bi in basis)
    lm = sorted({(tl, tm) for tl, tm, tn, s in basis})
    labels, structure, core = [], [], []

    def add(tag, tl, tm, triple_fn):
        triples = [t for t in triple_fn() if t is not None]
        for part, factor in (("re", 1.0), ("im", 1j)):
            labels.append((tag, tl, tm, part))
            structure.append(LinOp.from_triples(
                len(basis), [(r, c, factor * v) for r, c, v in triples]))
            core.append(tl <= two_L - 2)

    for tl, tm in lm:
        ns = range(-tl, tl + 1, 2)
        add("d11", tl, tm, lambda tl=tl, tm=tm, ns=ns: [
            (index[(tl, tm, tn, +1)], index[(tl, tm, tn, +1)], 1.0) for tn in ns])
        add("d22", tl, tm, lambda tl=tl, tm=tm, ns=ns: [
            (index[(tl, tm, tn, -1)], index[(tl, tm, tn, -1)], 1.0) for tn in ns])
        if tm < tl:
            add("d21", tl, tm, lambda tl=tl, tm=tm, ns=ns: [
                (index[(tl, tm + 2, tn, -1)], index[(tl, tm, tn, +1)], 1.0) for tn in ns])
        if tm > -tl:
            add("d12", tl, tm, lambda tl=tl, tm=tm, ns=ns: [
                (index[(tl, tm - 2, tn, +1)], index[(tl, tm, tn, -1)], 1.0) for tn in ns])
    return DiracAnsatz("sphere", tuple(labels), tuple(structure),
                       np.asarray(core, dtype=bool))


@dataclass
class ConstraintSystem:
    rows: np.ndarray
    ansatz: DiracAnsatz
    included: tuple
    meta: dict = field(default_factory=dict)

    @property
    def n_rows(self):
        return self.rows.shape[0]


def _row_dict_to_matrix(rowmap, n_unknowns):
    if not rowmap:
        return np.zeros((0, n_unknowns))
    complex_rows = np.zeros((len(rowmap), n_unknowns), dtype=complex)
    for i, vec in enumerate(rowmap.values()):
        for k, v in vec.items():
            complex_rows[i, k] = v
    rows = np.vstack([complex_rows.real, complex_rows.imag])
    keep = np.linalg.norm(rows, axis=1) > 1e-14
    rows = rows[keep]
    # canonical form: unit rows, sign fixed by the largest entry, sorted
    norms = np.linalg.norm(rows, axis=1, keepdims=True)
    rows = rows / norms
    lead = rows[np.arange(rows.shape[0]), np.argmax(np.abs(rows), axis=1)]
    rows = rows * np.sign(lead)[:, None]
    order = np.lexsort(np.round(rows, 12).T[::-1])
    return rows[order]


def assemble_constraints(ansatz: DiracAnsatz, bundle: TripleBundle,
                         include=("order_one", "reality", "krein_selfadjoint")) -> ConstraintSystem:
    """One row per matrix entry of each included condition, linear in the
    real unknowns; complex rows are split into their real and imaginary
    parts and brought to a canonical order."""
    rowmap = {}

    def scatter(tag, op, k, col_mask=None):
        m = op.csc().tocoo()
        for r, c, v in zip(m.row, m.col, m.data):
            if col_mask is not None and not col_mask[c]:
                continue
            rowmap.setdefault((tag, int(r), int(c)), {})[k] = \
                rowmap.get((tag, int(r), int(c)), {}).get(k, 0.0) + v

    gens = sorted(bundle.generators)
    if "order_one" in include:
        depth = (2 * bundle.cost("reality") + 2 * bundle.cost("gen")
                 + bundle.cost("dirac"))
        mask = bundle.truncation.interior(depth)
        commutants = {a: bundle.commutant_rep(a) for a in gens}
        for a in gens:
            for b_sym in gens:
                pi_b = bundle.generator(b_sym)
                for k, sk in enumerate(ansatz.structure):
                    t = commutator(commutants[a], commutator(sk, pi_b))
                    scatter(("o1", a, b_sym), t, k, mask)
    if "reality" in include:
        eps = bundle.signs.epsilon
        lp = bundle.reality.linear_part
        mask = bundle.truncation.interior(bundle.cost("reality") + bundle.cost("dirac"))
        for k, sk in enumerate(ansatz.structure):
            t = sk @ lp - eps * (lp @ sk.conj())
            scatter(("re",), t, k, mask)
    if "krein_selfadjoint" in include:
        beta = bundle.krein
        for k, sk in enumerate(ansatz.structure):
            t = sk.adjoint() - beta @ sk @ beta
            scatter(("sa",), t, k)
    rows = _row_dict_to_matrix(rowmap, ansatz.n_unknowns)
    return ConstraintSystem(rows, ansatz, tuple(include),
                            {"geometry": ansatz.geometry, "n_rows": rows.shape[0]})


@dataclass
class FittedForm:
    group: str
    coefficients: dict
    residual: float
    is_affine: bool


@dataclass
class SolutionFamily:
    kernel_dim: int              # rank of the kernel on core unknowns
    central_dim: int             # directions with all one-forms [D(x), pi(g)] = 0
    core_labels: tuple
    core_basis: np.ndarray       # orthonormal columns over the core unknowns
    full_basis: np.ndarray       # matching full-window representatives
    fitted: list
    meta: dict = field(default_factory=dict)

    @property
    def effective_dim(self):
        return self.kernel_dim - self.central_dim

    def contains(self, target_core) -> float:
        """Relative residual of a core-coordinate vector against the family."""
        t = np.asarray(target_core, dtype=float)
        nt = np.linalg.norm(t)
        if nt == 0.0:
            return 0.0
        proj = self.core_basis @ (self.core_basis.T @ t)
        return float(np.linalg.norm(t - proj) / nt)


def _affine_fits(labels, core_mask, basis):
    """Least-squares affine fit in the index labels, one per unknown group
    and basis vector."""
    groups = sorted({lab[0] for lab in labels})
    out = []
    core_labels = [lab for lab, c in zip(labels, core_mask) if c]
    for col in range(basis.shape[1]):
        vec = basis[:, col]
        for g in groups:
            sel = [i for i, lab in enumerate(core_labels) if lab[0] == g]
            if not sel:
                continue
            idx = np.array([[float(v) for v in core_labels[i][1:3]] for i in sel])
            design = np.column_stack([idx, np.ones(len(sel))])
            vals = vec[sel]
            coef, _, _, _ = np.linalg.lstsq(design, vals, rcond=None)
            resid = float(np.linalg.norm(design @ coef - vals))
            scale = max(np.linalg.norm(vals), 1e-30)
            out.append(FittedForm(
                group=f"vector{col}:{g}",
                coefficients={"idx1": float(coef[0]), "idx2": float(coef[1]),
                              "const": float(coef[2])},
                residual=resid,
                is_affine=bool(resid < AFFINE_FIT_TOL * max(scale, 1.0))))
    return out


def solve_family(system: ConstraintSystem, bundle: TripleBundle,
                 tol: float = KERNEL_TOL) -> SolutionFamily:
    """Kernel of the assembled rows, projected onto the core unknowns.

    The projection removes boundary artifacts: a raw kernel vector may
    carry arbitrary values on unknowns that only boundary-touching
    constraints reference.  Central directions (zero one-forms with every
    generator) are detected by instantiating each basis vector.
    """
    ansatz = system.ansatz
    kernel = nullspace(system.rows if system.n_rows else np.zeros((0, ansatz.n_unknowns)),
                       tol=tol)
    core = ansatz.core
    labels = ansatz.labels
    if kernel.shape[1] == 0:
        return SolutionFamily(0, 0, tuple(l for l, c in zip(labels, core) if c),
                              np.zeros((int(core.sum()), 0)),
                              np.zeros((ansatz.n_unknowns, 0)), [])
    proj = kernel[core, :]
    u, svals, vh = np.linalg.svd(proj, full_matrices=False)
    smax = svals[0] if svals.size else 0.0
    rank = int(np.sum(svals > tol * max(smax, 1e-30)))
    core_basis = u[:, :rank]
    full_basis = kernel @ vh.conj().T[:, :rank] / svals[:rank]

    # central subspace: combinations y with [D(B y), pi(g)] = 0 for all g,
    # found as a null space over the kernel coordinates, then rotated to
    # the last basis columns.  Boundary coordinates of the representatives
    # are window artifacts, so they are zeroed and the one-forms only
    # sampled two extra steps inside (the core margin).
    central = 0
    if rank:
        mask = bundle.truncation.interior(2 + bundle.cost("gen") + bundle.cost("dirac"))
        one_form_cols = []
        for col in range(rank):
            vec = np.where(core, full_basis[:, col], 0.0)
            d = ansatz.dirac(vec)
            pieces = [masked_columns(commutator(d, bundle.generator(g)), mask).to_dense().ravel()
                      for g in sorted(bundle.generators)]
            one_form_cols.append(np.concatenate(pieces))
        m_central = np.stack(one_form_cols, axis=1)
        scale = max(np.abs(m_central).max(), 1e-30)
        rows_c = np.vstack([m_central.real, m_central.imag]) / scale
        y_central = nullspace(rows_c, tol=1e-8)
        central = y_central.shape[1]
        if 0 < central < rank:
            # orthogonal completion: non-central directions first
            proj = np.eye(rank) - y_central @ y_central.T
            u2, s2, _ = np.linalg.svd(proj)
            q = np.column_stack([u2[:, :rank - central], y_central])
            core_basis = core_basis @ q
            full_basis = full_basis @ q

    fits = _affine_fits(labels, core, core_basis)
    return SolutionFamily(
        kernel_dim=rank,
        central_dim=central,
        core_labels=tuple(l for l, c in zip(labels, core) if c),
        core_basis=core_basis,
        full_basis=full_basis,
        fitted=fits,
        meta={"singular_values": svals.tolist(), "raw_kernel_dim": kernel.shape[1],
              "n_rows": system.n_rows},
    )


def family_bundle(bundle: TripleBundle, ansatz: DiracAnsatz, x) -> TripleBundle:
    """The input bundle with its Dirac operator replaced by D(x)."""
    return replace(bundle, dirac=ansatz.dirac(x))


def verify_family(family: SolutionFamily, bundle: TripleBundle,
                  ansatz: DiracAnsatz, tol: float = 1e-10) -> dict:
    """Re-run the defining checks on every kernel basis vector (and on a
    random combination) after instantiating D from it."""
    from .triples import check_reality, check_dirac
    rng = np.random.default_rng(271828)
    vectors = [family.full_basis[:, k] for k in range(family.kernel_dim)]
    if family.kernel_dim > 1:
        combo = rng.standard_normal(family.kernel_dim)
        vectors.append(family.full_basis @ (combo / np.linalg.norm(combo)))
    results = []
    for vec in vectors:
        b = family_bundle(bundle, ansatz, vec)
        scale = max(1.0, op_norm(b.dirac))
        o1 = check_order_one(b).entries["order_one"].violation
        re = check_reality(b).entries["reality_dirac"].violation
        sa = check_dirac(b).entries["dirac_krein_selfadjoint"].violation
        results.append({"order_one": o1, "reality_dirac": re,
                        "krein_selfadjoint": sa,
                        "passed": max(o1, re, sa) <= tol * scale})
    return {"all_passed": all(r["passed"] for r in results), "per_vector": results}


def perturb_off_kernel(family: SolutionFamily, ansatz: DiracAnsatz,
                       magnitude: float = 1e-3, seed: int = 1234) -> np.ndarray:
    """A kernel basis vector plus a core-supported off-kernel perturbation
    of the given relative magnitude (the negative control)."""
    rng = np.random.default_rng(seed)
    base = family.full_basis[:, 0]
    noise_core = rng.standard_normal(int(ansatz.core.sum()))
    noise_core -= family.core_basis @ (family.core_basis.T @ noise_core)
    noise = np.zeros(ansatz.n_unknowns)
    noise[ansatz.core] = noise_core / np.linalg.norm(noise_core)
    return base + magnitude * np.linalg.norm(base) * noise


def rowspace_membership(system: ConstraintSystem, row, tol: float = KERNEL_TOL) -> float:
    """Relative distance of a constraint row from the assembled row space
    (zero iff the row is implied, since the row space is the orthogonal
    complement of the kernel)."""
    kernel = nullspace(system.rows, tol=tol)
    r = np.asarray(row, dtype=float)
    nr = np.linalg.norm(r)
    if nr == 0.0:
        return 0.0
    if kernel.shape[1] == 0:
        return 0.0
    return float(np.linalg.norm(kernel.T @ r) / nr)


def torus_recursion_rows(ansatz: DiracAnsatz, n: int, m: int, chirality: str):
    """The four second-difference relations of the affine torus family
    centered at (n, m), as rows over the ansatz unknowns:
        d(n+1,m) - 2 d(n,m) + d(n-1,m) = 0
        (d(n+1,m) - d(n,m)) - (d(n+1,m-1) - d(n,m-1)) = 0
        (d(n,m+1) - d(n,m)) - (d(n-1,m+1) - d(n-1,m)) = 0
        d(n,m+1) - 2 d(n,m) + d(n,m-1) = 0
    """
    pos = {lab: k for k, lab in enumerate(ansatz.labels)}
    def row(entries):
        r = np.zeros(ansatz.n_unknowns)
        for (dn, dm), v in entries.items():
            r[pos[(chirality, n + dn, m + dm)]] = v
        return r
    return [
        row({(1, 0): 1.0, (0, 0): -2.0, (-1, 0): 1.0}),
        row({(1, 0): 1.0, (0, 0): -1.0, (1, -1): -1.0, (0, -1): 1.0}),
        row({(0, 1): 1.0, (0, 0): -1.0, (-1, 1): -1.0, (-1, 0): 1.0}),
        row({(0, 1): 1.0, (0, 0): -2.0, (0, -1): 1.0}),
    ]


def sphere_d21_recursion_row(ansatz: DiracAnsatz, two_l: int, two_m: int, part: str):
    """The three-point relation along (l+m) = const for the off-diagonal
    coefficient, in the original labels:
        2 sqrt(l-m+1) d21(l+1/2, m-1/2)
            = sqrt(l-m) d21(l, m) + sqrt(l-m+2) d21(l+1, m-1).
    """
    pos = {lab: k for k, lab in enumerate(ansatz.labels)}
    l, m = two_l / 2.0, two_m / 2.0
    r = np.zeros(ansatz.n_unknowns)
    r[pos[("d21", two_l + 1, two_m - 1, part)]] = 2.0 * np.sqrt(l - m + 1.0)
    r[pos[("d21", two_l, two_m, part)]] = -np.sqrt(l - m)
    r[pos[("d21", two_l + 2, two_m - 2, part)]] = -np.sqrt(l - m + 2.0)
    return r
