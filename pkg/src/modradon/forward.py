"""Forward measurement pipeline in parallel-beam geometry.

Projections are sampled on the radial lattice ``t_k = k*T`` for angles
``theta_m = m*pi/M``, band-limited by an ideal low-pass applied as a discrete
convolution with the sampled sinc kernel (digital anti-aliasing at the
acquisition rate), and finally folded into [-lam, lam) by the centered modulo.
The filtered samples are exactly the lattice samples of a band-limited
function, which is what the recovery guarantees operate on.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace

import numpy as np
from scipy.signal import fftconvolve
from scipy.special import sici

from .core import SampleSeq, Threshold, guarded_ceil, modulo_fold
from .errors import ConfigError, DomainError, MarginError, NumericError, ParseError, SizeError
from .phantom import Phantom, radon_phantom

_MAGIC = b"MRTS"
_VERSION = 1


@dataclass(frozen=True)
class SamplingParams:
    """Every sampling-theory quantity in one place.

    Parameters
    ----------
    omega : float
        Bandwidth of the anti-aliasing low-pass, rad per unit length.
    T : float
        Radial sample spacing.
    lam : float
        Fold threshold (half-range of the modulo detector).
    K : int
        Symmetric radial index bound; the detector grid is [-K, K].
    K_prime : int
        Extended left index bound; acquisition covers [-K_prime, K].
    M : int
        Number of projection angles over [0, pi).
    beta : float, optional
        Measured uniform amplitude bound for the projections.
    rho : float, optional
        Measured exceedance radius: |projection| < lam outside [-rho, rho].
    N : int, optional
        Difference order used by the unfolding stage.
    """

    omega: float
    T: float
    lam: float
    K: int
    K_prime: int
    M: int
    beta: float | None = None
    rho: float | None = None
    N: int | None = None

    def __post_init__(self):
        for name in ("omega", "T", "lam"):
            v = getattr(self, name)
            if not np.isfinite(v) or v <= 0:
                raise ConfigError(f"{name} must be positive and finite, got {v}")
        for name in ("K", "K_prime", "M"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ConfigError(f"{name} must be a positive integer, got {v}")
            object.__setattr__(self, name, int(v))
        if self.K_prime < self.K:
            raise ConfigError(f"K_prime ({self.K_prime}) must be >= K ({self.K})")

    @classmethod
    def design(cls, omega, lam, t_frac=0.5, M=None, K=None, K_prime=None):
        """Standard parameter choice: ``T = t_frac / (omega*e)``, ``K = ceil(1/T)``,
        ``M = omega`` rounded, margin defaulting to the symmetric grid."""
        T = t_frac / (omega * np.e)
        if K is None:
            K = int(guarded_ceil(1.0 / T))
        if M is None:
            M = int(round(omega))
        if K_prime is None:
            K_prime = K
        return cls(omega=omega, T=T, lam=lam, K=K, K_prime=K_prime, M=M)

    @property
    def t_shannon(self) -> float:
        return np.pi / self.omega

    @property
    def t_us(self) -> float:
        return 1.0 / (self.omega * np.e)

    @property
    def oversampling(self) -> float:
        """T * omega * e; exact-recovery guarantees need this below 1."""
        return self.T * self.omega * np.e

    def thetas(self) -> np.ndarray:
        return np.arange(self.M) * (np.pi / self.M)

    def fbp_conditions_ok(self) -> bool:
        """Classical sampling conditions for filtered back projection."""
        return self.M >= self.omega and self.K >= 1.0 / self.T


@dataclass(frozen=True, eq=False)
class Sinogram:
    """Radial-by-angular sample grid of band-limited projections.

    ``rows[m, i]`` holds the projection at angle ``theta_m`` and offset
    ``t_k = k*T`` with ``k = i - K_prime``; shape is (M, K_prime + K + 1).
    """

    params: SamplingParams
    rows: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.rows, dtype=float)
        want = (self.params.M, self.params.K_prime + self.params.K + 1)
        if arr.shape != want:
            raise SizeError(f"rows shape {arr.shape} != {want}")
        object.__setattr__(self, "rows", arr)

    @property
    def base_index(self) -> int:
        return -self.params.K_prime

    def row(self, m: int) -> SampleSeq:
        return SampleSeq(self.base_index, self.rows[m].copy())

    def symmetric_rows(self) -> np.ndarray:
        """The [-K, K] block used by back projection, shape (M, 2K+1)."""
        p = self.params
        lo = p.K_prime - p.K
        return self.rows[:, lo : lo + 2 * p.K + 1]

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.rows)))


@dataclass(frozen=True, eq=False)
class ModuloSinogram:
    """Folded projections; every value lies in [-lam, lam)."""

    params: SamplingParams
    rows: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.rows, dtype=float)
        want = (self.params.M, self.params.K_prime + self.params.K + 1)
        if arr.shape != want:
            raise SizeError(f"rows shape {arr.shape} != {want}")
        lam = self.params.lam
        if np.max(np.abs(arr)) > lam * (1.0 + 1e-12):
            raise DomainError("folded values must lie within [-lam, lam)")
        object.__setattr__(self, "rows", arr)

    @property
    def base_index(self) -> int:
        return -self.params.K_prime

    def row(self, m: int) -> SampleSeq:
        return SampleSeq(self.base_index, self.rows[m].copy())


def lowpass_kernel(t, omega: float) -> np.ndarray:
    """Ideal low-pass impulse response sin(omega*t)/(pi*t), value omega/pi at 0."""
    t = np.asarray(t, dtype=float)
    return (omega / np.pi) * np.sinc(omega * t / np.pi)


def _prefilter_batch(raw: np.ndarray, omega: float, T: float, k_half_in: int,
                     k_lo: int, k_hi: int) -> np.ndarray:
    """Discrete anti-aliasing: out[.., k] = T * sum_j raw[.., j] * kernel((k-j)T).

    ``raw`` covers lattice indices [-k_half_in, k_half_in]; the output covers
    [k_lo, k_hi].  Evaluated as one FFT convolution per batch.
    """
    lags = np.arange(k_lo - k_half_in, k_hi + k_half_in + 1) * T
    kern = lowpass_kernel(lags, omega)
    conv = fftconvolve(np.atleast_2d(raw), kern[None, :], axes=1)
    sel = slice(2 * k_half_in, 2 * k_half_in + (k_hi - k_lo + 1))
    out = T * conv[:, sel]
    return out if raw.ndim == 2 else out[0]


def _raw_rows(p: Phantom, T: float, M: int, k_half: int) -> np.ndarray:
    """Analytic projection samples at t = k*T, k in [-k_half, k_half], per angle."""
    t = np.arange(-k_half, k_half + 1) * T
    rows = np.empty((M, t.size))
    for m in range(M):
        rows[m] = radon_phantom(p, m * np.pi / M, t)
    return rows


def support_index(T: float) -> int:
    """Last lattice index that can touch the unit-disk support: ceil(1/T)."""
    return int(guarded_ceil(1.0 / T))


def prefilter_projection(p: Phantom, theta: float, params: SamplingParams) -> SampleSeq:
    """Band-limited projection samples over [-K_prime, K] at angle theta.

    Samples the analytic projection on the acquisition lattice and applies the
    ideal low-pass at bandwidth ``params.omega`` as a discrete convolution.
    The result is numerically band-limited (spectral content above omega is at
    the truncation-leakage level).
    """
    ks = support_index(params.T)
    t = np.arange(-ks, ks + 1) * params.T
    raw = radon_phantom(p, theta, t)
    vals = _prefilter_batch(raw, params.omega, params.T, ks, -params.K_prime, params.K)
    if not np.all(np.isfinite(vals)):
        raise NumericError("prefilter produced non-finite values")
    return SampleSeq(-params.K_prime, vals)


def make_sinogram(p: Phantom, params: SamplingParams) -> Sinogram:
    """Prefiltered sinogram: M angle rows over the [-K_prime, K] lattice."""
    raw = _raw_rows(p, params.T, params.M, support_index(params.T))
    rows = _prefilter_batch(raw, params.omega, params.T, support_index(params.T),
                            -params.K_prime, params.K)
    beta = float(np.max(np.abs(raw)))
    return Sinogram(replace(params, beta=beta), rows)


def fold_sinogram(s: Sinogram) -> ModuloSinogram:
    """Fold every sample into [-lam, lam) with the centered modulo."""
    folded = modulo_fold(s.rows, Threshold(s.params.lam))
    return ModuloSinogram(s.params, folded)


@dataclass(frozen=True, eq=False)
class ForwardScan:
    """Wide prefiltered materialization used to measure amplitude and tails.

    ``rows`` covers lattice indices [-k_scan, k_scan] for every angle;
    ``beta_raw`` is the max absolute raw sample (before the low-pass).
    """

    omega: float
    T: float
    M: int
    k_scan: int
    rows: np.ndarray
    beta_raw: float

    @property
    def prefiltered_max(self) -> float:
        return float(np.max(np.abs(self.rows)))

    def exceedance_index(self, lam: float, clear_band: int = 32) -> int:
        """Largest |k| whose sample magnitude reaches lam, over all angles.

        Raises
        ------
        MarginError
            If the outermost ``clear_band`` lattice positions are not strictly
            below lam (the scan window was too narrow to bound the tails).
        """
        exc = np.abs(self.rows) >= lam
        if np.any(exc[:, :clear_band]) or np.any(exc[:, -clear_band:]):
            raise MarginError("exceedance reaches the scan boundary; enlarge the scan radius")
        cols = np.nonzero(exc.any(axis=0))[0]
        if cols.size == 0:
            return 0
        k = cols - self.k_scan
        return int(np.max(np.abs(k)))

    def sinogram(self, params: SamplingParams) -> Sinogram:
        """Slice the scan down to the [-K_prime, K] acquisition window."""
        if params.K_prime > self.k_scan or params.K > self.k_scan:
            raise SizeError("requested window exceeds the scanned range")
        if params.M != self.M:
            raise SizeError(f"angle count mismatch: {params.M} != {self.M}")
        lo = self.k_scan - params.K_prime
        hi = self.k_scan + params.K + 1
        return Sinogram(replace(params, beta=self.beta_raw), self.rows[:, lo:hi].copy())


def scan_forward(p: Phantom, omega: float, T: float, M: int, radius: float = 4.0) -> ForwardScan:
    """Materialize prefiltered rows over |t| <= radius for tail measurement."""
    k_scan = int(np.ceil(radius / T))
    ks = support_index(T)
    raw = _raw_rows(p, T, M, ks)
    rows = _prefilter_batch(raw, omega, T, ks, -k_scan, k_scan)
    return ForwardScan(omega, T, M, k_scan, rows, float(np.max(np.abs(raw))))


def scan_from_raw(raw_rows: np.ndarray, omega: float, T: float,
                  radius: float = 4.0) -> ForwardScan:
    """Like :func:`scan_forward` but starting from measured raw samples.

    ``raw_rows`` must cover a symmetric lattice window per angle (odd column
    count); values outside it are treated as zero.
    """
    raw_rows = np.asarray(raw_rows, dtype=float)
    if raw_rows.ndim != 2 or raw_rows.shape[1] % 2 != 1:
        raise SizeError("raw rows must be 2-D with an odd number of columns")
    k_half = (raw_rows.shape[1] - 1) // 2
    k_scan = int(np.ceil(radius / T))
    rows = _prefilter_batch(raw_rows, omega, T, k_half, -k_scan, k_scan)
    return ForwardScan(omega, T, raw_rows.shape[0], k_scan, rows,
                       float(np.max(np.abs(raw_rows))))


def highband_energy_fraction(values: np.ndarray, T: float, omega: float) -> float:
    """Fraction of DFT energy at frequencies above omega (band-limit check)."""
    v = np.asarray(values, dtype=float)
    spec = np.abs(np.fft.rfft(v)) ** 2
    freqs = 2.0 * np.pi * np.fft.rfftfreq(v.size, d=T)
    total = float(np.sum(spec))
    if total == 0.0:
        return 0.0
    return float(np.sum(spec[freqs > omega]) / total)


@dataclass(frozen=True, eq=False)
class RandomBandlimitedSignal:
    """Random band-limited test signal with compact fold exceedance.

    A piecewise-constant profile with levels in [-1, 1] supported on [-1, 1]
    is convolved with the ideal low-pass at bandwidth ``omega``; the sine
    integral gives the convolution in closed form, so samples at any rate are
    exact.
    """

    omega: float
    edges: np.ndarray
    levels: np.ndarray

    @classmethod
    def draw(cls, omega: float, seed_seq) -> "RandomBandlimitedSignal":
        """Draw breakpoints and levels from a seeded generator.

        20 interior breakpoints uniform on (-1, 1); 21 levels i.i.d. uniform
        on [-1, 1].
        """
        rng = np.random.Generator(np.random.PCG64(seed_seq))
        breaks = np.sort(rng.uniform(-1.0, 1.0, size=20))
        edges = np.concatenate([[-1.0], breaks, [1.0]])
        levels = rng.uniform(-1.0, 1.0, size=21)
        return cls(omega, edges, levels)

    def sample(self, t) -> np.ndarray:
        """Evaluate the signal at times t (exact, via the sine integral)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        acc = np.zeros_like(t)
        for i, c in enumerate(self.levels):
            acc += c * (
                sici(self.omega * (t - self.edges[i]))[0]
                - sici(self.omega * (t - self.edges[i + 1]))[0]
            )
        return acc / np.pi

    def samples(self, T: float, k_lo: int, k_hi: int) -> SampleSeq:
        k = np.arange(k_lo, k_hi + 1)
        return SampleSeq(k_lo, self.sample(k * T))

    def sup_norm(self, step_frac: float = 1 / 32, pad: float = 2.0) -> float:
        """Max magnitude on a fine grid (step = step_frac * pi/omega)."""
        step = step_frac * np.pi / self.omega
        t = np.arange(-1.0 - pad, 1.0 + pad + step, step)
        return float(np.max(np.abs(self.sample(t))))

    def exceedance_index(self, T: float, lam: float, clear_band: int = 32,
                         max_radius: float = 64.0) -> int:
        """Largest lattice |k| with |g(kT)| >= lam, with a verified clear tail."""
        radius = 3.0
        while radius <= max_radius:
            kw = int(np.ceil(radius / T))
            g = self.sample(np.arange(-kw, kw + 1) * T)
            exc = np.abs(g) >= lam
            if not (np.any(exc[:clear_band]) or np.any(exc[-clear_band:])):
                cols = np.nonzero(exc)[0]
                return int(np.max(np.abs(cols - kw))) if cols.size else 0
            radius *= 2.0
        raise NumericError("exceedance region did not close within the scan limit")


def random_lambda_exceedance(omega: float, lam: float, seed: int,
                             T: float | None = None):
    """Seeded random band-limited signal of compact fold exceedance.

    Returns
    -------
    seq : SampleSeq
        Samples at spacing ``T`` (default ``0.5/(omega*e)``) over a window
        that provably contains the exceedance region with a clear tail.
    signal : RandomBandlimitedSignal
        The generating signal, carrying the exact sampler; its measured
        ``sup_norm()`` and ``exceedance_index()`` describe the realization.

    Determinism: identical (omega, lam, seed, T) always produce identical
    output (PCG64 stream seeded from ``seed``).
    """
    if omega <= 0 or lam <= 0:
        raise DomainError("omega and lam must be positive")
    if T is None:
        T = 0.5 / (omega * np.e)
    sig = RandomBandlimitedSignal.draw(omega, np.random.SeedSequence(seed))
    kstar = sig.exceedance_index(T, lam)
    kw = kstar + 32
    return sig.samples(T, -kw, kw), sig


def save_sinogram(s: Sinogram | ModuloSinogram, path: str) -> None:
    """Write a sinogram; format chosen by extension (.mrts binary, .csv text)."""
    if str(path).endswith(".csv"):
        _save_csv(s, path)
    else:
        _save_binary(s, path)


def load_sinogram(path: str) -> Sinogram:
    """Read a sinogram written by :func:`save_sinogram` (bit-exact round trip)."""
    if str(path).endswith(".csv"):
        return _load_csv(path)
    return _load_binary(path)


def _save_binary(s, path):
    p = s.params
    header = _MAGIC + struct.pack("<IIII", _VERSION, p.M, p.K, p.K_prime)
    header += struct.pack("<ddd", p.omega, p.T, p.lam)
    with open(path, "wb") as f:
        f.write(header)
        f.write(np.ascontiguousarray(s.rows, dtype="<f8").tobytes())


def _load_binary(path) -> Sinogram:
    with open(path, "rb") as f:
        blob = f.read()
    if blob[:4] != _MAGIC:
        raise ParseError(f"{path}: bad magic {blob[:4]!r}, expected {_MAGIC!r}")
    version, M, K, K_prime = struct.unpack("<IIII", blob[4:20])
    if version != _VERSION:
        raise ParseError(f"{path}: unsupported version {version}")
    omega, T, lam = struct.unpack("<ddd", blob[20:44])
    n = M * (K_prime + K + 1)
    data = np.frombuffer(blob[44:], dtype="<f8")
    if data.size != n:
        raise ParseError(f"{path}: expected {n} samples, found {data.size}")
    params = SamplingParams(omega=omega, T=T, lam=lam, K=K, K_prime=K_prime, M=M)
    return Sinogram(params, data.reshape(M, K_prime + K + 1).astype(float))


def _save_csv(s, path):
    p = s.params
    head = (f"# modradon-sinogram omega={p.omega!r} T={p.T!r} lambda={p.lam!r}"
            f" M={p.M} K={p.K} K_prime={p.K_prime}")
    with open(path, "w") as f:
        f.write(head + "\n")
        for m in range(p.M):
            f.write(",".join(repr(v) for v in s.rows[m].tolist()) + "\n")


def _load_csv(path) -> Sinogram:
    with open(path) as f:
        head = f.readline().strip()
        if not head.startswith("# modradon-sinogram"):
            raise ParseError(f"{path}: line 1: missing sinogram header")
        kv = {}
        for tok in head.split()[2:]:
            key, _, val = tok.partition("=")
            kv[key] = val
        try:
            params = SamplingParams(
                omega=float(kv["omega"]), T=float(kv["T"]), lam=float(kv["lambda"]),
                K=int(kv["K"]), K_prime=int(kv["K_prime"]), M=int(kv["M"]),
            )
        except (KeyError, ValueError) as exc:
            raise ParseError(f"{path}: line 1: bad header field ({exc})") from None
        width = params.K_prime + params.K + 1
        rows = np.empty((params.M, width))
        for m in range(params.M):
            line = f.readline()
            if not line:
                raise ParseError(f"{path}: row {m}: unexpected end of file")
            cols = line.strip().split(",")
            if len(cols) != width:
                raise ParseError(f"{path}: row {m}: expected {width} columns, got {len(cols)}")
            try:
                rows[m] = [float(c) for c in cols]
            except ValueError:
                bad = next(i for i, c in enumerate(cols) if not _is_float(c))
                raise ParseError(f"{path}: row {m}, column {bad}: not a number") from None
    return Sinogram(params, rows)


def _is_float(s: str) -> bool:
    try:
        float(s)
        return True
    except ValueError:
        return False
