"""Randomized certification of the inequalities the regularity estimates use.

Every estimate of the form ``LHS <~ RHS`` is evaluated over a seeded corpus and
summarised by its fitted constant, the largest ``|LHS| / RHS`` seen (``RHS``
floored at 1e-300).  A constant counts as stable when evaluating twice as many
cases raises it by less than a factor two.  Cases are drawn from
``numpy.random.default_rng([seed, claim_code, index])``, so a corpus of ``2N``
cases contains the corpus of ``N`` cases and each case replays bit-exactly
from its digest.

Scalar inequalities with explicit constants are checked for zero violations.
"""
from __future__ import annotations

import json
import math
import zlib
from dataclasses import asdict, dataclass, field

import numpy as np

from .dynamics import PotentialSpec, density, force, force_convolution
from .energy import compute_enl, transport_weight
from .norms import (GevreyParams, force_w1inf, gevrey_multiplier, gevrey_norm_from_moments, gradv_sup,
                    per_alpha_norms, spatial_gevrey_norm)
from .phase_space import GridSpec, PhaseSpectrum, flip, moment_spectra, multi_indices, to_physical, to_spectral

RHS_FLOOR = 1e-300
S_CHOICES = (0.25, 0.5, 0.75, 1.0)
CANCELLATION_TOL = 1e-12


@dataclass(frozen=True)
class InequalityCase:
    name: str
    lhs: float
    rhs: float
    ratio: float
    inputs_digest: str

    def as_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


@dataclass
class ClaimReport:
    """Fitted constant over ``N`` cases and over the doubled corpus."""

    name: str
    cases: list = field(repr=False)
    n_half: int
    c_half: float
    c_full: float
    extra: dict = field(default_factory=dict)

    @property
    def n_cases(self) -> int:
        return len(self.cases)

    @property
    def stable(self) -> bool:
        if not (math.isfinite(self.c_full) and math.isfinite(self.c_half)):
            return False
        return self.c_full <= 2.0 * self.c_half or self.c_full == 0.0

    @property
    def passed(self) -> bool:
        return self.stable and self.extra.get("violations", 0) == 0


@dataclass(frozen=True)
class Corpus:
    """Seeded case generator; ``size`` is the base corpus size ``N``."""

    seed: int = 0
    size: int = 1000
    n_x_choices: tuple = (5, 9, 17)
    n_v_choices: tuple = (16, 32, 64)
    v_max_choices: tuple = (6.0, 8.0)

    def rng(self, claim: str, index: int) -> np.random.Generator:
        return np.random.default_rng([self.seed, zlib.crc32(claim.encode()), index])

    def digest(self, claim: str, index: int, **params) -> str:
        return json.dumps({"seed": self.seed, "claim": claim, "index": index, **params}, sort_keys=True)


def _ratio(lhs: float, rhs: float) -> float:
    return abs(lhs) / max(rhs, RHS_FLOOR)


# ---------------------------------------------------------------------------
# Random inputs
# ---------------------------------------------------------------------------

def _complex_normal(rng, shape) -> np.ndarray:
    return (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2.0)


def _symmetrize(c: np.ndarray) -> np.ndarray:
    return 0.5 * (c + np.conj(flip(c, range(c.ndim))))


def random_grid(rng, corpus: Corpus) -> GridSpec:
    return GridSpec(dim=1, n_x=int(rng.choice(corpus.n_x_choices)), n_v=int(rng.choice(corpus.n_v_choices)),
                    v_max=float(rng.choice(corpus.v_max_choices)))


def random_spectrum(rng, grid: GridSpec, decay: float, kind: str | None = None) -> PhaseSpectrum:
    """Real, velocity-localised random spectrum normalised to unit L2 norm.

    ``kind`` is ``envelope`` (algebraic decay ``<k,eta>^-decay`` times complex
    Gaussians), ``single_mode`` or ``near_nyquist``; ``None`` draws it.
    """
    if kind is None:
        kind = str(rng.choice(["envelope"] * 8 + ["single_mode", "near_nyquist"]))
    br = np.sqrt(1.0 + sum(km.astype(float) ** 2 for km in grid.k_mesh())
                 + sum(e ** 2 for e in grid.eta_mesh()))
    br = np.broadcast_to(br, grid.shape)
    if kind == "envelope":
        c = br ** (-decay) * _complex_normal(rng, grid.shape)
    elif kind == "single_mode":
        c = np.zeros(grid.shape, dtype=complex)
        idx = tuple(int(rng.integers(n)) for n in grid.shape)
        c[idx] = _complex_normal(rng, ())
        c[(0,) * (2 * grid.dim)] += 1.0
    elif kind == "near_nyquist":
        c = (br / br.max()) ** 4 * _complex_normal(rng, grid.shape)
    else:
        raise ValueError(f"unknown spectrum kind {kind!r}")
    field_ = to_physical(PhaseSpectrum.wrap(grid, _symmetrize(c)), check=False)
    width = grid.v_max / 5.0
    window = sum(np.exp(-(vm / width) ** 2 / 2) for vm in grid.v_mesh())
    spec = to_spectral(field_ * window, grid)
    nrm = spec.l2_norm()
    return spec * (1.0 / nrm) if nrm > 0 else spec


def _random_params(rng, sigma: float, lam_max: float = 1.0) -> GevreyParams:
    return GevreyParams(lam=float(rng.uniform(0.0, lam_max)), sigma=sigma, s=float(rng.choice(S_CHOICES)), M=1)


# ---------------------------------------------------------------------------
# Generic driver
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Evaluator:
    """``fn(rng, corpus) -> (lhs, rhs, params, extra)``; claims sharing a stream share inputs."""

    name: str
    stream: str
    fn: object


EVALUATORS: dict = {}


def _register(name: str, stream: str | None = None):
    def deco(fn):
        EVALUATORS[name] = Evaluator(name=name, stream=stream or name, fn=fn)
        return fn
    return deco


def evaluate_case(name: str, corpus: Corpus, index: int) -> tuple:
    ev = EVALUATORS[name]
    lhs, rhs, params, extra = ev.fn(corpus.rng(ev.stream, index), corpus)
    case = InequalityCase(name=name, lhs=float(lhs), rhs=float(rhs), ratio=_ratio(lhs, rhs),
                          inputs_digest=corpus.digest(ev.stream, index, **params))
    return case, extra


def run_claim(name: str, corpus: Corpus, extra_reducer=None) -> ClaimReport:
    """Evaluate ``2 N`` cases of one claim and fit its constant at ``N`` and ``2 N``."""
    cases, extras = [], []
    for index in range(2 * corpus.size):
        case, extra = evaluate_case(name, corpus, index)
        cases.append(case)
        extras.append(extra)
    ratios = np.array([c.ratio for c in cases])
    report = ClaimReport(name=name, cases=cases, n_half=corpus.size,
                         c_half=float(ratios[:corpus.size].max()), c_full=float(ratios.max()))
    if extra_reducer is not None:
        report.extra.update(extra_reducer(extras))
    return report


def replay(case: InequalityCase, corpus: Corpus | None = None) -> InequalityCase:
    """Recompute one case from its digest (pass ``corpus`` if it used non-default grid choices)."""
    info = json.loads(case.inputs_digest)
    base = corpus or Corpus()
    base = Corpus(info["seed"], base.size, base.n_x_choices, base.n_v_choices, base.v_max_choices)
    return evaluate_case(case.name, base, info["index"])[0]


# ---------------------------------------------------------------------------
# Young's inequality for the (k, eta) convolution
# ---------------------------------------------------------------------------

def _lattice_convolution_pairing(f1, r, f2, deta) -> complex:
    """``sum_{k,l} int f1_k(eta) r_l f2_{k-l}(eta) deta`` with ``k`` in FFT order (explicit loop over l)."""
    n = f1.shape[0]
    K = (n - 1) // 2
    ks = np.rint(np.fft.fftfreq(n) * n).astype(int)
    total = 0j
    for li, l in enumerate(ks):
        for ki, k in enumerate(ks):
            m = k - l
            if abs(m) <= K:
                total += r[li] * np.sum(f1[ki] * f2[m % n])
    return total * deta


def young_bilinear_terms(f1, r, f2, sigma: float, deta: float) -> tuple:
    """``(lhs, rhs_form1, rhs_form2)`` for the two Young bounds (one space dimension)."""
    n = f1.shape[0]
    kb = np.sqrt(1.0 + (np.fft.fftfreq(n) * n) ** 2)

    def l2(a):
        return math.sqrt(deta * float(np.sum(np.abs(a) ** 2)))

    lhs = abs(_lattice_convolution_pairing(f1, r, f2, deta))
    rhs1 = l2(f1) * math.sqrt(float(np.sum(np.abs(kb ** sigma * r) ** 2))) * l2(f2)
    rhs2 = l2(f1) * math.sqrt(float(np.sum(np.abs(r) ** 2))) * l2(kb[:, None] ** sigma * f2)
    return lhs, rhs1, rhs2


def _young(rng, corpus: Corpus):
    grid = random_grid(rng, corpus)
    sigma = float(rng.uniform(0.6, 3.0))
    decay = float(rng.uniform(0.5, 3.0))
    shape = (grid.n_x, grid.n_v)
    kb = np.sqrt(1.0 + (np.fft.fftfreq(grid.n_x) * grid.n_x) ** 2)
    f1 = _complex_normal(rng, shape) * kb[:, None] ** (-decay)
    f2 = _complex_normal(rng, shape) * kb[:, None] ** (-decay)
    r = _complex_normal(rng, grid.n_x) * kb ** (-decay - sigma)
    if rng.random() < 0.1:  # adversarial: aligned phases maximise the pairing
        f1, r, f2 = np.abs(f1), np.abs(r), np.abs(f2)
    params = {"n_x": grid.n_x, "n_v": grid.n_v, "sigma": sigma, "decay": decay}
    return young_bilinear_terms(f1, r, f2, sigma, grid.deta), params


@_register("young_bilinear_form1", stream="young_bilinear")
def _young_form1(rng, corpus):
    (lhs, rhs1, _), params = _young(rng, corpus)
    return lhs, rhs1, params, None


@_register("young_bilinear_form2", stream="young_bilinear")
def _young_form2(rng, corpus):
    (lhs, _, rhs2), params = _young(rng, corpus)
    return lhs, rhs2, params, None


def test_young_bilinear(corpus: Corpus) -> dict:
    """Both forms of the bilinear Young bound; returns ``{name: ClaimReport}``."""
    return {name: run_claim(name, corpus) for name in ("young_bilinear_form1", "young_bilinear_form2")}


# ---------------------------------------------------------------------------
# Density bound
# ---------------------------------------------------------------------------

def density_bound_terms(spec: PhaseSpectrum, params: GevreyParams) -> tuple:
    """``(||rho||_{lam,sigma;s}, ||f||_{lam,sigma,M;s})``."""
    grid = spec.grid
    moments = moment_spectra(spec, int(params.M))
    return (spatial_gevrey_norm(density(spec), params, grid, check=False),
            gevrey_norm_from_moments(moments, grid, params))


def embedding_ratio(spec: PhaseSpectrum, M: int) -> float:
    """``max_k |f_hat_k(0)|^2 / sum_alpha ||D^alpha f_hat_k||^2_{L^2_eta}``."""
    grid = spec.grid
    moments = moment_spectra(spec, M)
    denom = sum(grid.deta ** grid.dim * np.sum(np.abs(u) ** 2, axis=grid.v_axes) for u in moments.values())
    num = np.abs(density(spec)) ** 2
    return float(np.max(num / np.maximum(denom, RHS_FLOOR)))


def _spectrum_case(rng, corpus, decay_range):
    grid = random_grid(rng, corpus)
    decay = float(rng.uniform(*decay_range))
    spec = random_spectrum(rng, grid, decay)
    return spec, {"n_x": grid.n_x, "n_v": grid.n_v, "v_max": grid.v_max, "decay": decay}


@_register("density_bound")
def _density_bound(rng, corpus):
    spec, p = _spectrum_case(rng, corpus, (1.0, 4.0))
    params = _random_params(rng, sigma=float(rng.uniform(0.0, 7.0)))
    lhs, rhs = density_bound_terms(spec, params)
    return lhs, rhs, {**p, **asdict(params)}, None


@_register("density_embedding")
def _density_embedding(rng, corpus):
    spec, p = _spectrum_case(rng, corpus, (1.0, 4.0))
    return embedding_ratio(spec, 1), 1.0, p, None


def test_density_bound(corpus: Corpus) -> dict:
    """Density bound and its pointwise-in-eta embedding step (``M = 1``)."""
    return {name: run_claim(name, corpus) for name in ("density_bound", "density_embedding")}


# ---------------------------------------------------------------------------
# Commutator estimate on a periodic 2-D grid
# ---------------------------------------------------------------------------

def _freqs2(n: int):
    k = np.fft.fftfreq(n) * n
    return k[:, None], k[None, :]


def band_limited_field(rng, n: int, decay: float) -> np.ndarray:
    """Real field on ``[0, 2 pi)^2`` with modes ``|k_i| < n/4`` so products are alias-free."""
    kx, ky = _freqs2(n)
    c = _complex_normal(rng, (n, n)) * np.sqrt(1.0 + kx ** 2 + ky ** 2) ** (-decay)
    c[(np.abs(kx) >= n // 4) | (np.abs(ky) >= n // 4)] = 0.0
    return np.real(np.fft.ifft2(_symmetrize(c))) * n * n


def sobolev_2d(u: np.ndarray, order: float) -> float:
    """``H^order`` norm on ``[0, 2 pi)^2`` via Parseval."""
    n = u.shape[0]
    kx, ky = _freqs2(n)
    uh = np.fft.fft2(u) / (n * n)
    return 2 * math.pi * math.sqrt(float(np.sum((1.0 + kx ** 2 + ky ** 2) ** order * np.abs(uh) ** 2)))


def deriv_2d(u: np.ndarray, beta) -> np.ndarray:
    n = u.shape[0]
    kx, ky = _freqs2(n)
    return np.real(np.fft.ifft2(np.fft.fft2(u) * (1j * kx) ** beta[0] * (1j * ky) ** beta[1]))


def commutator_terms(u: np.ndarray, v: np.ndarray, sigma: int) -> tuple:
    """``sum_{|beta| <= sigma} ||D^beta(uv) - u D^beta v||`` against the interpolation bound."""
    n = u.shape[0]
    cell = (2 * math.pi / n) ** 2
    lhs = 0.0
    for beta in multi_indices(2, sigma):
        d = deriv_2d(u * v, beta) - u * deriv_2d(v, beta)
        lhs += math.sqrt(cell * float(np.sum(d ** 2)))
    grad_u = float(np.max(np.sqrt(deriv_2d(u, (1, 0)) ** 2 + deriv_2d(u, (0, 1)) ** 2)))
    rhs = grad_u * sobolev_2d(v, sigma - 1) + sobolev_2d(u, sigma) * float(np.max(np.abs(v)))
    return lhs, rhs


@_register("commutator")
def _commutator(rng, corpus):
    n = int(rng.choice([16, 32]))
    sigma = int(rng.choice([1, 2, 3]))
    du, dv_ = float(rng.uniform(0.5, 3.0)), float(rng.uniform(0.5, 3.0))
    u = band_limited_field(rng, n, du)
    v = band_limited_field(rng, n, dv_)
    lhs, rhs = commutator_terms(u, v, sigma)
    return lhs, rhs, {"n": n, "sigma": sigma, "decay_u": du, "decay_v": dv_}, None


def test_commutator(corpus: Corpus) -> dict:
    return {"commutator": run_claim("commutator", corpus)}


# ---------------------------------------------------------------------------
# Physical-space energy terms of the Sobolev growth argument
# ---------------------------------------------------------------------------

def phys_deriv(field_: np.ndarray, grid: GridSpec, beta) -> np.ndarray:
    """Spectral ``d_x^{beta_x} d_v^{beta_v}`` on the (x, v) grid (one space dimension)."""
    if sum(beta) == 0:
        return field_
    kx = grid.k1d.astype(float)[:, None]
    xi = grid.eta1d.copy()
    xi[grid.nyquist_index] = 0.0
    mult = (1j * kx) ** beta[0] * (1j * xi[None, :]) ** beta[1]
    return np.real(np.fft.ifft2(np.fft.fft2(field_) * mult))


@dataclass(frozen=True)
class SobolevEnergyTerms:
    e_l: float
    e_nl: float
    norm_sq: float
    force_w1inf: float
    gradv_supM: float
    cancel_transport: float
    cancel_force: float


def sobolev_energy_terms(spec: PhaseSpectrum, sigma: int, M: int, pot: PotentialSpec) -> SobolevEnergyTerms:
    """Sums over ``|alpha| <= M, |beta| <= sigma`` of ``|E_L|``, ``|E_NL|`` and ``||D^beta(v^alpha f)||^2``.

    Also returns the relative size of the summation-by-parts identities
    ``int v g d_x g = 0`` and ``int F g d_v g = 0`` with ``g = D^beta(v^alpha f)``.
    """
    grid = spec.grid
    if grid.dim != 1:
        raise ValueError("physical-space energy terms are implemented for one space dimension")
    f = to_physical(spec, check=False)
    v = grid.v_mesh()[0]
    F = force(density(spec), pot, grid).physical[0][:, None]
    cell = grid.dx * grid.dv
    transport = v * phys_deriv(f, grid, (1, 0))
    accel = F * phys_deriv(f, grid, (0, 1))
    e_l = e_nl = norm_sq = 0.0
    c1 = c2 = 0.0
    for (a,) in multi_indices(1, M):
        w = v ** a
        for beta in multi_indices(2, sigma):
            g = phys_deriv(w * f, grid, beta)
            e_l += abs(cell * float(np.sum(g * phys_deriv(w * transport, grid, beta))))
            e_nl += abs(cell * float(np.sum(g * phys_deriv(w * accel, grid, beta))))
            norm_sq += cell * float(np.sum(g ** 2))
            gx, gv = phys_deriv(g, grid, (1, 0)), phys_deriv(g, grid, (0, 1))
            s1 = math.sqrt(float(np.sum((v * g) ** 2) * np.sum(gx ** 2)))
            s2 = math.sqrt(float(np.sum((F * g) ** 2) * np.sum(gv ** 2)))
            if s1 > 0:
                c1 = max(c1, abs(float(np.sum(v * g * gx))) / s1)
            if s2 > 0:
                c2 = max(c2, abs(float(np.sum(F * g * gv))) / s2)
    return SobolevEnergyTerms(e_l=e_l, e_nl=e_nl, norm_sq=norm_sq, force_w1inf=force_w1inf(spec, pot),
                              gradv_supM=gradv_sup(spec, M), cancel_transport=c1, cancel_force=c2)


def _sobolev_case(rng, corpus):
    spec, p = _spectrum_case(rng, corpus, (2.0, 5.0))
    sigma = int(rng.choice([1, 2]))
    return sobolev_energy_terms(spec, sigma, 1, PotentialSpec()), {**p, "sigma": sigma, "M": 1}


@_register("sobolev_linear", stream="sobolev_energy")
def _sobolev_linear(rng, corpus):
    t, p = _sobolev_case(rng, corpus)
    return t.e_l, t.norm_sq, p, max(t.cancel_transport, t.cancel_force)


@_register("sobolev_nonlinear", stream="sobolev_energy")
def _sobolev_nonlinear(rng, corpus):
    t, p = _sobolev_case(rng, corpus)
    return t.e_nl, t.norm_sq * (t.force_w1inf + t.gradv_supM), p, max(t.cancel_transport, t.cancel_force)


def _cancellation_summary(extras) -> dict:
    worst = max(extras)
    return {"max_cancellation": worst, "violations": int(worst > CANCELLATION_TOL)}


def test_claims_sobolev(corpus: Corpus) -> dict:
    """Linear and nonlinear physical-space energy bounds plus the exact cancellations."""
    return {name: run_claim(name, corpus, _cancellation_summary)
            for name in ("sobolev_linear", "sobolev_nonlinear")}


# ---------------------------------------------------------------------------
# Gevrey energy terms
# ---------------------------------------------------------------------------

GEVREY_SIGMA = 6.5  # d/2 + 6 in one dimension


def linear_gevrey_terms(spec: PhaseSpectrum, params: GevreyParams) -> tuple:
    """Worst per-alpha ``(|E_L^alpha|, lam ||v^a f||^2_{lam,sigma+s/2} + ||v^a f||^2_{lam,sigma})``."""
    grid = spec.grid
    moments = moment_spectra(spec, int(params.M))
    w = transport_weight(grid, params)
    base = per_alpha_norms(moments, grid, params)
    shifted = per_alpha_norms(moments, grid, params.with_(sigma=params.sigma + params.s / 2))
    best = (0.0, RHS_FLOOR)
    for alpha, u in moments.items():
        lhs = abs(grid.deta ** grid.dim * float(np.sum(np.abs(u) ** 2 * w)))
        rhs = params.lam * shifted[alpha] ** 2 + base[alpha] ** 2
        if _ratio(lhs, rhs) >= _ratio(*best):
            best = (lhs, rhs)
    return best


def nl1_gevrey_terms(spec: PhaseSpectrum, params: GevreyParams, pot: PotentialSpec) -> tuple:
    grid = spec.grid
    moments = moment_spectra(spec, int(params.M))
    e1, _ = compute_enl(spec, density(spec), pot, params, moments)
    G = gevrey_norm_from_moments(moments, grid, params)
    S = gevrey_norm_from_moments(moments, grid, params.with_(lam=0.0))
    H = gevrey_norm_from_moments(moments, grid, params.with_(sigma=params.sigma + params.s / 2))
    lam = params.lam
    rhs = H ** 2 * (lam ** 2 * G + lam * S) + G ** 2 * S * (lam ** 2 + 1.0)
    return abs(e1), rhs


def nl2_gevrey_terms(spec: PhaseSpectrum, params: GevreyParams, pot: PotentialSpec) -> tuple:
    """Worst ``(alpha, j)`` term against ``||v^a f|| ||rho|| ||v^{a-j} f||`` (all at ``lam, sigma``)."""
    grid = spec.grid
    moments = moment_spectra(spec, int(params.M))
    rho = density(spec)
    A2 = gevrey_multiplier(params, grid).values ** 2
    norms = per_alpha_norms(moments, grid, params)
    rho_norm = spatial_gevrey_norm(rho, params, grid, check=False)
    best = (0.0, RHS_FLOOR)
    for alpha in multi_indices(grid.dim, int(params.M)):
        for j, a in enumerate(alpha):
            if a == 0:
                continue
            lower = tuple(b - (i == j) for i, b in enumerate(alpha))
            conv = force_convolution(moments[lower], rho, pot, grid, component=j)
            lhs = abs(a * grid.deta ** grid.dim * float(np.sum(A2 * np.conj(moments[alpha]) * conv).real))
            rhs = norms[alpha] * rho_norm * norms[lower]
            if _ratio(lhs, rhs) >= _ratio(*best):
                best = (lhs, rhs)
    return best


def _gevrey_case(rng, corpus):
    spec, p = _spectrum_case(rng, corpus, (2.0, 6.0))
    params = _random_params(rng, sigma=GEVREY_SIGMA, lam_max=1.0)
    return spec, params, {**p, **asdict(params)}


@_register("gevrey_linear", stream="gevrey_energy")
def _gevrey_linear(rng, corpus):
    spec, params, p = _gevrey_case(rng, corpus)
    return (*linear_gevrey_terms(spec, params), p, None)


@_register("gevrey_nonlinear_1", stream="gevrey_energy")
def _gevrey_nl1(rng, corpus):
    spec, params, p = _gevrey_case(rng, corpus)
    return (*nl1_gevrey_terms(spec, params, PotentialSpec()), p, None)


@_register("gevrey_nonlinear_2", stream="gevrey_energy")
def _gevrey_nl2(rng, corpus):
    spec, params, p = _gevrey_case(rng, corpus)
    return (*nl2_gevrey_terms(spec, params, PotentialSpec()), p, None)


def test_energy_claims(corpus: Corpus) -> dict:
    """Bounds on the linear and both nonlinear Gevrey energy terms (``sigma = 6.5``, ``M = 1``)."""
    return {name: run_claim(name, corpus) for name in ("gevrey_linear", "gevrey_nonlinear_1", "gevrey_nonlinear_2")}


# ---------------------------------------------------------------------------
# Scalar inequalities
# ---------------------------------------------------------------------------

def _bracket_rows(k, eta):
    return np.sqrt(1.0 + np.sum(k ** 2, axis=-1) + np.sum(eta ** 2, axis=-1))


def exp_quadratic_margin(x: np.ndarray) -> np.ndarray:
    """``e^x <= e + x^2 e^x`` divided by ``e^x``: returns ``e^{1-x} + x^2 - 1`` (violation if < 0)."""
    return np.exp(1.0 - x) + x * x - 1.0


def exp_remainder_ratio(x: np.ndarray) -> np.ndarray:
    """``|e^x - 1 - x| / (x^2 e^{|x|})``, evaluated without overflow or cancellation."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    small = np.abs(x) < 1e-2
    xs = x[small]
    series = sum(xs ** n / math.factorial(n) for n in range(2, 9))
    with np.errstate(invalid="ignore"):
        out[small] = np.where(xs == 0, 0.0, np.abs(series) / (xs * xs * np.exp(np.abs(xs))))
    xl = x[~small]
    # |e^x - 1 - x| e^{-|x|}: for x > 0 this is 1 - (1 + x) e^{-x}
    pos = xl > 0
    val = np.where(pos, -np.expm1(-xl) - xl * np.exp(-np.abs(xl)),
                   np.abs(np.expm1(xl) - xl) * np.exp(-np.abs(xl)))
    out[~small] = val / (xl * xl)
    return out


def _draw_tuples(rng, n: int):
    dims = rng.integers(1, 4, size=n)
    kmax = 64
    k = rng.integers(-kmax, kmax + 1, size=(n, 3)).astype(float)
    l = rng.integers(-kmax, kmax + 1, size=(n, 3)).astype(float)
    mag = 10.0 ** rng.uniform(-3, 3, size=n)
    direction = rng.standard_normal((n, 3))
    eta = direction / np.linalg.norm(direction, axis=1, keepdims=True) * mag[:, None]
    mask = np.arange(3)[None, :] < dims[:, None]
    k, l, eta = k * mask, l * mask, eta * mask
    # adversarial: a slice with k = l, eta = 0, or tiny l
    m = n // 20
    k[:m] = l[:m]
    eta[m:2 * m] = 0.0
    l[2 * m:3 * m] = np.sign(rng.standard_normal((m, 3))) * mask[2 * m:3 * m]
    s = rng.choice(S_CHOICES, size=n)
    sigma = rng.uniform(1.0, 12.0, size=n)
    return k, l, eta, s, sigma


@dataclass
class ScalarReport:
    samples: int
    violations: dict
    fitted: dict
    fitted_half: dict

    @property
    def passed(self) -> bool:
        stable = all(self.fitted[name] <= 2.0 * self.fitted_half[name] for name in self.fitted)
        return stable and all(v == 0 for v in self.violations.values())


def scalar_inequality_values(k, l, eta, s, sigma, x):
    """Per-sample margins (``>= 0`` means satisfied) and fitted-constant ratios."""
    b_k = _bracket_rows(k, eta)
    b_kl = _bracket_rows(k - l, eta)
    b_l = np.sqrt(1.0 + np.sum(l ** 2, axis=-1))
    with np.errstate(over="ignore"):
        diff_sigma = np.abs(b_k ** sigma - b_kl ** sigma)
        mvt_rhs = sigma * b_l * (b_kl + b_l) ** (sigma - 1.0)
        split_rest = np.maximum(diff_sigma - sigma * b_l ** sigma, 0.0)
        split_den = sigma * (b_l ** (sigma - 1.0) * b_kl + b_l * b_kl ** (sigma - 1.0))
    diff_s = np.abs(b_k ** s - b_kl ** s)
    mean_value_den = b_l / (b_k ** (1.0 - s) + b_kl ** (1.0 - s))
    margins = {
        "exp_quadratic": exp_quadratic_margin(np.abs(x)),
        "exp_remainder": 1.0 - exp_remainder_ratio(x),
        "bracket_lipschitz": b_l - np.abs(b_k - b_kl),
        "bracket_mean_value": (mvt_rhs - diff_sigma) / np.maximum(mvt_rhs, RHS_FLOOR),
        "bracket_subadditive": (b_kl ** s + b_l ** s - b_k ** s) / (b_k ** s),
    }
    ratios = {
        "bracket_split": split_rest / np.maximum(split_den, RHS_FLOOR),
        "power_difference": diff_s / np.maximum(mean_value_den, RHS_FLOOR),
    }
    return margins, ratios


def test_scalar_inequalities(sample_count: int = 100_000, seed: int = 0) -> ScalarReport:
    """Zero-violation checks plus fitted constants for the two ``<~`` bracket bounds.

    Relative margins below ``-1e-12`` count as violations (rounding slack).
    """
    rng = np.random.default_rng([seed, zlib.crc32(b"scalar")])
    k, l, eta, s, sigma = _draw_tuples(rng, sample_count)
    mag = 10.0 ** rng.uniform(-8, math.log10(700.0), size=sample_count)
    x = mag * np.where(rng.random(sample_count) < 0.5, -1.0, 1.0)
    x[:3] = (0.0, 1.0, 700.0)
    margins, ratios = scalar_inequality_values(k, l, eta, s, sigma, x)
    viol = {}
    for name, m in margins.items():
        if name == "exp_remainder":
            m = m[x != 0]
        viol[name] = int(np.sum(~(m >= -1e-12)))
    half = sample_count // 2
    fitted = {name: float(np.max(r)) for name, r in ratios.items()}
    fitted_half = {name: float(np.max(r[:half])) for name, r in ratios.items()}
    return ScalarReport(samples=sample_count, violations=viol, fitted=fitted, fitted_half=fitted_half)


# ---------------------------------------------------------------------------
# Reporting
# ---------------------------------------------------------------------------

def run_all(corpus: Corpus, scalar_samples: int = 100_000) -> tuple:
    """Every registered claim; returns ``(claim_reports, scalar_report)``."""
    reports = {}
    for fn in (test_young_bilinear, test_density_bound, test_commutator, test_claims_sobolev, test_energy_claims):
        reports.update(fn(corpus))
    return reports, test_scalar_inequalities(scalar_samples, corpus.seed)


def write_report(path, reports: dict) -> None:
    """One JSON object per case, in claim then case order."""
    with open(path, "w", encoding="utf-8") as fh:
        for rep in reports.values():
            for case in rep.cases:
                fh.write(case.as_json() + "\n")


def summary_table(reports: dict, scalar: ScalarReport | None = None) -> str:
    rows = [f"{'claim':<22} {'cases':>6} {'C(N)':>11} {'C(2N)':>11} {'pass':>5}"]
    for rep in reports.values():
        rows.append(f"{rep.name:<22} {rep.n_cases:>6} {rep.c_half:>11.4g} {rep.c_full:>11.4g} "
                    f"{('yes' if rep.passed else 'NO'):>5}")
    if scalar is not None:
        rows.append("")
        rows.append(f"scalar inequalities over {scalar.samples} samples")
        for name, v in scalar.violations.items():
            rows.append(f"  {name:<26} violations {v}")
        for name, c in scalar.fitted.items():
            rows.append(f"  {name:<26} fitted C {c:.4g} (half sample {scalar.fitted_half[name]:.4g})")
    return "\n".join(rows)
