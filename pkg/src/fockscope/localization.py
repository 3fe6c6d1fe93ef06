"""Localization machinery on the single-particle space.

Generators are transforms of x^kappa * chi(O_r), where chi is a smooth
plateau (1 on the inner 60 % of the ball, 0 outside it, built from the
standard mollifier step); the two families carry omega^{-1/2} (plus)
respectively omega^{+1/2} (minus) weights, matching the decomposition
f = f^+ + i f^- of local symplectic data.  Gram-Schmidt bases, the
localization-energy operator T with its eigenvalues, and large-distance
correlation profiles are all derived from these generators.
"""

from __future__ import annotations

import numpy as np

from .grids import ConfigurationError, SPVector
from .multiindex import MultiIndex, enumerate_up_to_length
from .quadrature import gauss_legendre

GS_DROP_TOL = 1e-10


def mollifier_profile(x_over_r):
    """exp(-1/(1-t^2)) for |t| < 1, 0 outside (t = |x|/r)."""
    t = np.asarray(x_over_r, dtype=float)
    out = np.zeros_like(t)
    inside = np.abs(t) < 1.0
    u = t[inside]
    out[inside] = np.exp(-1.0 / (1.0 - u ** 2))
    return out


PLATEAU_INNER = 0.6


def plateau_profile(x_over_r):
    """Smooth cutoff chi(O_r): 1 for |x| <= 0.6 r, 0 for |x| >= r.

    Built from the standard mollifier step so that supports stay inside
    O_r; the 4r locality statements for the minus-family correlations
    rely on this support radius.
    """
    t = np.abs(np.asarray(x_over_r, dtype=float))
    return smooth_step((1.0 - t) / (1.0 - PLATEAU_INNER))


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=float)

    def phi(u):
        out = np.zeros_like(u)
        pos = u > 0
        out[pos] = np.exp(-1.0 / u[pos])
        return out

    a = phi(t)
    b = phi(1.0 - t)
    return a / (a + b)


def chi_energy(grid_omega, energy, mass):
    """Smooth cutoff equal to 1 on {omega <= E}, 0 outside
    {omega <= E + m + 1}."""
    outer = energy + mass + 1.0
    return smooth_step((outer - np.asarray(grid_omega)) / (outer - energy))


class MollifierTransforms:
    """Transforms F_kappa(p) = (2 pi)^{-s/2} int x^kappa chi_r(x) e^{-ipx} dx.

    Evaluation uses a tensor Gauss-Legendre rule over [-r, r]^s with the
    radial mollifier; arbitrary tensor-product meshes in p are supported so
    profiles can be re-evaluated on meshes finer than the carrier grid.
    """

    def __init__(self, s, r, nodes_per_axis=None, profile="plateau"):
        if r <= 0:
            raise ConfigurationError("mollifier radius must be positive")
        self.s = s
        self.r = float(r)
        self.profile = profile
        shape_fn = plateau_profile if profile == "plateau" else mollifier_profile
        if nodes_per_axis is None:
            nodes_per_axis = 96 if s == 1 else (48 if s == 2 else 30)
        if profile == "plateau":
            # composite rule split at the plateau edges, where high
            # derivatives of the smooth step concentrate
            edges = [-r, -PLATEAU_INNER * r, PLATEAU_INNER * r, r]
            per_seg = max(nodes_per_axis // 3, 8)
            nodes, weights = [], []
            for a, b in zip(edges[:-1], edges[1:]):
                x, w = gauss_legendre(per_seg, a, b)
                nodes.append(x)
                weights.append(w)
            self.nodes = np.concatenate(nodes)
            self.weights = np.concatenate(weights)
        else:
            self.nodes, self.weights = gauss_legendre(nodes_per_axis, -r, r)
        if s == 1:
            radii = np.abs(self.nodes)
            self.chi_tensor = shape_fn(radii / r)
        else:
            mesh = np.meshgrid(*([self.nodes] * s), indexing="ij")
            radii = np.sqrt(sum(mm ** 2 for mm in mesh))
            self.chi_tensor = shape_fn(radii / r)

    def _axis_matrix(self, p_axis, power):
        """E[p, node] = exp(-i p x) x^power w."""
        phase = np.exp(-1j * np.outer(p_axis, self.nodes))
        return phase * (self.nodes ** power * self.weights)

    def eval_on_axes(self, axes, kappa):
        """F_kappa on the tensor mesh spanned by per-axis p arrays.

        Returns an array of shape (len(axes[0]), ..., len(axes[s-1])).
        """
        kap = kappa.dense(self.s) if isinstance(kappa, MultiIndex) else tuple(kappa)
        out = self.chi_tensor
        if self.s == 1:
            e = self._axis_matrix(axes[0], kap[0])
            out = e @ out
        else:
            # contract the chi tensor axis by axis (last axis first)
            for ax in reversed(range(self.s)):
                e = self._axis_matrix(axes[ax], kap[ax])
                out = np.tensordot(out, e, axes=([ax], [1]))
                out = np.moveaxis(out, -1, ax)
        return out * (2.0 * np.pi) ** (-self.s / 2.0)

    def eval_on_grid(self, grid, kappa):
        vals = self.eval_on_axes([grid.axis] * self.s, kappa)
        return vals.ravel()


def s_indices_up_to(s, K):
    """s-indices kappa with |kappa| <= K; the zero index comes first."""
    return enumerate_up_to_length(K, s)


def taylor_vectors(grid, r, E, K, transforms=None):
    """Taylor generators b_{kappa,r}^{+-} and h_{kappa,E}^{+-}.

    Returns (kappas, b_plus, b_minus, h_plus, h_minus) where each list is
    indexed like ``kappas`` and contains SPVectors.  All vectors are
    J-invariant by construction.
    """
    if r <= 0 or E <= 0 or K < 0:
        raise ConfigurationError("taylor_vectors requires r > 0, E > 0, K >= 0")
    tr = transforms or MollifierTransforms(grid.s, r)
    kappas = s_indices_up_to(grid.s, K)
    chi_e = chi_energy(grid.omega, E, grid.m)
    pref = (2.0 * np.pi) ** (-grid.s / 2.0)

    b_plus, b_minus, h_plus, h_minus = [], [], [], []
    for kap in kappas:
        fk = tr.eval_on_grid(grid, kap)
        fact = kap.factorial()
        b_plus.append(SPVector(grid, pref * grid.omega ** 0.5 * fk / fact))
        b_minus.append(SPVector(grid, pref * grid.omega ** -0.5 * fk / fact))
        dense = kap.dense(grid.s)
        mono = np.ones(grid.n_cells, dtype=complex)
        for ax, c in enumerate(dense):
            if c:
                mono = mono * (1j * grid.points[:, ax]) ** c
        sign = (-1.0) ** kap.length
        h_plus.append(SPVector(grid, sign * grid.omega ** -0.5 * mono * chi_e))
        h_minus.append(SPVector(grid, sign * grid.omega ** 0.5 * mono * chi_e))
    return kappas, b_plus, b_minus, h_plus, h_minus


class LocalizationFamily:
    """Gram-Schmidt basis for one of the families spanned by the mollifier
    generators omega^{-sign/2} * F_kappa.

    sign '+' carries omega^{-1/2}, sign '-' carries omega^{+1/2}; this is
    the convention under which the minus-family vectors, multiplied by a
    further omega^{-1/2} h, are compactly supported in configuration space.
    """

    def __init__(self, grid, r, K, sign, transforms=None):
        if sign not in ("+", "-"):
            raise ConfigurationError("sign must be '+' or '-'")
        self.grid = grid
        self.r = float(r)
        self.K = int(K)
        self.sign = sign
        self.omega_power = -0.5 if sign == "+" else 0.5
        self.transforms = transforms or MollifierTransforms(grid.s, r)
        self.kappas = s_indices_up_to(grid.s, K)

        gen = np.empty((grid.n_cells, len(self.kappas)), dtype=complex)
        for j, kap in enumerate(self.kappas):
            fk = self.transforms.eval_on_grid(grid, kap)
            gen[:, j] = grid.omega ** self.omega_power * fk
        self.generators = gen
        self._gram_schmidt()

    def _gram_schmidt(self):
        g = self.grid
        basis_cols = []
        coeff_rows = []
        self.dropped = 0
        n_gen = self.generators.shape[1]
        for j in range(n_gen):
            v = self.generators[:, j].copy()
            c = np.zeros(n_gen, dtype=complex)
            c[j] = 1.0
            nrm0 = g.norm(v)
            for b, cb in zip(basis_cols, coeff_rows):
                ov = g.inner(b, v)
                v -= ov * b
                c -= ov * cb
            nrm = g.norm(v)
            if nrm <= GS_DROP_TOL * max(nrm0, 1.0):
                self.dropped += 1
                continue
            basis_cols.append(v / nrm)
            coeff_rows.append(c / nrm)
        if basis_cols:
            self.basis = np.stack(basis_cols, axis=1)
            self.coeffs = np.stack(coeff_rows, axis=0)
        else:
            self.basis = np.zeros((g.n_cells, 0), dtype=complex)
            self.coeffs = np.zeros((0, n_gen), dtype=complex)
        self.dim = self.basis.shape[1]

    def basis_vectors(self):
        return [SPVector(self.grid, self.basis[:, k]) for k in range(self.dim)]

    def project_coeffs(self, amps):
        """Coefficients of the projection of ``amps`` in the GS basis."""
        return self.grid.cell_weight * (self.basis.conj().T @ amps)

    def project(self, amps):
        return self.basis @ self.project_coeffs(amps)

    def basis_on_axes(self, axes):
        """GS basis profiles on an arbitrary tensor mesh (n_pts..., dim)."""
        mesh = np.meshgrid(*axes, indexing="ij")
        absp = np.sqrt(sum(mm ** 2 for mm in mesh))
        omega = np.sqrt(absp ** 2 + self.grid.m ** 2)
        shape = omega.shape
        gen = np.empty(shape + (len(self.kappas),), dtype=complex)
        for j, kap in enumerate(self.kappas):
            gen[..., j] = self.transforms.eval_on_axes(axes, kap)
        gen = gen * omega[..., None] ** self.omega_power
        return gen @ self.coeffs.T


class TOperator:
    """Localization-energy operator T and its eigen-decomposition.

    T = (|T_{E,+}|^2 + |T_{E,-}|^2 + |T_{h,+}|^2 + |T_{h,-}|^2)^{1/2}
    restricted to the finite span of the two localization families.
    Eigenvalues are sorted descending; eigenvectors are J-invariant grid
    vectors with coefficient representations over the mollifier generators.
    """

    def __init__(self, grid, families, eigenvalues, eigvec_cols, part_traces,
                 h_profile, gamma, energy):
        self.grid = grid
        self.families = families
        self.eigenvalues = eigenvalues
        self.eigvec_cols = eigvec_cols
        self.part_trace_norms = part_traces
        self.h_profile = h_profile
        self.gamma = gamma
        self.energy = energy

    @property
    def dim(self):
        return len(self.eigenvalues)

    def eigenvector(self, j):
        return SPVector(self.grid, self.eigvec_cols[:, j])

    def schatten_sum(self, p):
        return float(np.sum(self.eigenvalues ** p))

    def family(self, sign):
        return self.families[sign]


def schatten_p_norm(top, p):
    """||T||_p = (sum t_j^p)^{1/p} from stored eigenvalues, 0 < p <= 1."""
    if not (0 < p <= 1):
        raise ValueError("p must lie in (0, 1]")
    if top.dim == 0:
        return 0.0
    return float(np.sum(top.eigenvalues ** p) ** (1.0 / p))


def default_h_r0(grid, r, transforms=None):
    """Transform of the radius-r mollifier; must be positive on the grid."""
    tr = transforms or MollifierTransforms(grid.s, r)
    prof = tr.eval_on_grid(grid, MultiIndex()).real
    return prof


def build_T(grid, r, E, gamma, h_r0=None, K=4, transforms=None):
    """Assemble T in the localization basis and diagonalize it.

    ``h_r0`` is the transform of the positive-definite smearing function;
    by default the radius-r mollifier transform, whose positivity on the
    grid is confirmed (minimum reported via the returned object).
    """
    if grid.s >= 3:
        if not (0.5 <= gamma < (grid.s - 1) / 2.0):
            raise ConfigurationError(
                "gamma must satisfy 1/2 <= gamma < (s-1)/2 for s >= 3")
    else:
        if grid.m <= 0:
            raise ConfigurationError(
                "s < 3 requires a massive grid for the T operator")
        if gamma < 0.5:
            raise ConfigurationError("gamma must be >= 1/2")
    tr = transforms or MollifierTransforms(grid.s, r)
    if h_r0 is None:
        h_r0 = default_h_r0(grid, r, transforms=tr)
    h_r0 = np.asarray(h_r0, dtype=float)
    if h_r0.min() <= 0:
        raise ConfigurationError(
            "h_r0 transform is not strictly positive on the grid "
            "(min %.3e); shrink the radius or the cutoff" % h_r0.min())

    families = {
        "+": LocalizationFamily(grid, r, K, "+", transforms=tr),
        "-": LocalizationFamily(grid, r, K, "-", transforms=tr),
    }
    if K >= 0 and all(f.dim == 0 for f in families.values()):
        raise ConfigurationError("Gram-Schmidt left no localization basis")

    # orthonormal basis W of the union of the two family spans
    g = grid
    cols = []
    for sign in ("+", "-"):
        fam = families[sign]
        for k in range(fam.dim):
            v = fam.basis[:, k].copy()
            nrm0 = g.norm(v)
            for b in cols:
                v -= g.inner(b, v) * b
            nrm = g.norm(v)
            if nrm > GS_DROP_TOL * max(nrm0, 1.0):
                cols.append(v / nrm)
    if cols:
        W = np.stack(cols, axis=1)
    else:
        W = np.zeros((g.n_cells, 0), dtype=complex)
    dim = W.shape[1]

    q_e = (g.omega <= E).astype(float)
    weights = {
        "E": q_e / g.omega,
        "h": h_r0 * g.omega ** (-2.0 * gamma),
    }

    M = np.zeros((dim, dim), dtype=complex)
    part_traces = {}
    for sign in ("+", "-"):
        fam = families[sign]
        PW = np.stack([fam.project(W[:, a]) for a in range(dim)], axis=1) \
            if dim else np.zeros((g.n_cells, 0), dtype=complex)
        for label, wgt in weights.items():
            part = g.cell_weight * (PW.conj().T @ (wgt[:, None] * PW))
            M += part
            sv = np.sqrt(np.clip(np.linalg.eigvalsh(part).real, 0.0, None)) \
                if dim else np.array([])
            part_traces["%s,%s" % (label, sign)] = float(np.sum(sv))
    if dim:
        M = 0.5 * (M + M.conj().T)
        # J-invariant generators give real matrix elements; diagonalize in
        # real arithmetic so eigenvectors stay J-invariant (degenerate
        # eigenvalues would otherwise mix with arbitrary complex phases)
        if np.max(np.abs(M.imag)) > 1e-9 * max(1.0, np.max(np.abs(M.real))):
            raise ConfigurationError("T matrix acquired imaginary parts; "
                                     "generators are not J-invariant")
        evals, evecs = np.linalg.eigh(M.real)
        evals = np.sqrt(np.clip(evals, 0.0, None))
        order = np.argsort(evals)[::-1]
        evals = evals[order]
        evecs = evecs[:, order]
        eig_cols = W @ evecs
    else:
        evals = np.array([])
        eig_cols = np.zeros((g.n_cells, 0), dtype=complex)

    return TOperator(grid, families, evals, eig_cols, part_traces,
                     h_r0, gamma, E)


def correlation_profile(top, j, sign):
    """omega^{-1/2} h_r0 L^{sign} e_j as localization-basis data.

    Returns (family, coeffs) so the profile can be evaluated on any tensor
    mesh: profile = h(p) * omega^{-1/2}(p) * (basis-on-mesh @ coeffs).
    """
    fam = top.family(sign)
    amps = top.eigvec_cols[:, j]
    return fam, fam.project_coeffs(amps)


def correlation_function(top, j, sign, xs, direction=None, mesh_per_axis=None,
                         half_width_factor=None):
    """<q | U(0, x) q> for q = omega^{-1/2} h_r0 L^{sign} e_j.

    ``xs`` are spatial distances along ``direction`` (first axis by
    default).  The profile is re-evaluated on a momentum mesh fine enough
    for the largest requested distance (the carrier lattice only resolves
    phases up to pi/dp) and extended beyond the carrier cutoff so that
    truncation ringing stays below the decay tails of interest.
    """
    grid = top.grid
    fam, basis_coeffs = correlation_profile(top, j, sign)
    xs = np.asarray(xs, dtype=float)
    xmax = float(np.max(np.abs(xs)))
    if half_width_factor is None:
        half_width_factor = 3.0 if grid.s == 1 else 1.5
    half = half_width_factor * grid.half_width
    if mesh_per_axis is None:
        needed = int(np.ceil(2.0 * half * (xmax + 4.0) / np.pi)) + 8
        mesh_per_axis = max(int(grid.n_per_axis * half_width_factor), needed)
        if mesh_per_axis % 2:
            mesh_per_axis += 1
        if grid.s == 3:
            mesh_per_axis = min(mesh_per_axis, 160)
    dp = 2.0 * half / mesh_per_axis
    axis = -half + (np.arange(mesh_per_axis) + 0.5) * dp
    axes = [axis] * grid.s

    prof = fam.basis_on_axes(axes) @ basis_coeffs
    mesh = np.meshgrid(*axes, indexing="ij")
    absp = np.sqrt(sum(mm ** 2 for mm in mesh))
    omega = np.sqrt(absp ** 2 + grid.m ** 2)
    h_interp = _mollifier_on_axes(fam.transforms, axes)
    q = prof * h_interp / np.sqrt(omega)
    density = (np.abs(q) ** 2) * dp ** grid.s

    if direction is None:
        direction = np.zeros(grid.s)
        direction[0] = 1.0
    direction = np.asarray(direction, dtype=float)
    direction = direction / np.linalg.norm(direction)

    out = np.empty(len(xs), dtype=complex)
    for i, x in enumerate(xs):
        phases = [np.exp(-1j * axis * (x * direction[a]))
                  for a in range(grid.s)]
        acc = density
        for a in reversed(range(grid.s)):
            acc = np.tensordot(acc, phases[a], axes=([a], [0]))
        out[i] = acc
    return out


def _mollifier_on_axes(transforms, axes):
    return transforms.eval_on_axes(axes, MultiIndex()).real


def config_correlation_minus(top, j, xs, n_quad=400):
    """Exact configuration-space route for the (-,-) correlation (s = 1).

    q = omega^{-1/2} h L^- e_j is the transform of u = (2 pi)^{-1/2}
    (h * g) with g = sum_kappa c_kappa x^kappa chi_r, both supported in
    O_r, so <q|U(0,x)q> = int conj(u(y)) u(y - x) dy vanishes identically
    for |x| > 4r.
    """
    grid = top.grid
    if grid.s != 1:
        raise ConfigurationError("configuration route implemented for s = 1")
    fam = top.family("-")
    tr = fam.transforms
    r = fam.r
    basis_coeffs = fam.project_coeffs(top.eigvec_cols[:, j])
    gen_coeffs = fam.coeffs.T @ basis_coeffs

    powers = np.array([kap.length for kap in fam.kappas])

    def g_profile(t):
        t = np.asarray(t, dtype=float)
        chi = plateau_profile(t / r)
        acc = np.zeros(t.shape, dtype=complex)
        for c, k in zip(gen_coeffs, powers):
            acc += c * t ** k
        return acc * chi

    z, wz = tr.nodes, tr.weights
    chi_h = tr.chi_tensor

    def u_profile(t):
        t = np.asarray(t, dtype=float)
        conv = (chi_h * wz)[None, :] * g_profile(t[:, None] - z[None, :])
        return conv.sum(axis=1) / np.sqrt(2.0 * np.pi)

    out = np.empty(len(xs), dtype=complex)
    for i, x in enumerate(xs):
        lo = max(-2.0 * r, -2.0 * r + x)
        hi = min(2.0 * r, 2.0 * r + x)
        if lo >= hi:
            out[i] = 0.0
            continue
        y, wy = gauss_legendre(n_quad, lo, hi)
        out[i] = np.sum(wy * np.conj(u_profile(y)) * u_profile(y - x))
    return out
