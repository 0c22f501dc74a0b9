"""
Performative Control - Stock Market Instance
Portefeuille de L actions dont la volatilité réagit aux poids déployés
"""

from dataclasses import asdict, dataclass
from typing import Dict, Optional, Tuple

import numpy as np
from loguru import logger
from scipy.stats import norm

from core.interfaces import (
    InstanceBundle,
    IPerturbationMap,
    Policy,
    RowSimplex,
    SeedPair,
    SystemConfig,
    ConfigException,
    DimensionException,
)
from core.dynamics.noise import UniformBoxNoise
from core.cost.models import StockRiskCost
from core.experiments.schedules import SensitivitySchedule


QUADRATURE_NODES = 64

# Lien entre ε_t et la loi de la volatilité
LOCATION = "location"
SENSITIVITY = "sensitivity"
VOLATILITY_LINKS = (LOCATION, SENSITIVITY)

# Masse sous −c au-delà de laquelle la volatilité est considérée collée
PINNED_MASS = 1e-6

# Échelle a de la transition moyenne A = a·I
REGIME_SCALES: Dict[str, float] = {
    "general": 1.0,
    "stable": 0.5,
    "unstable": 1.2,
}


@dataclass(frozen=True)
class StockMarketConfig:
    """
    Paramètres de l'expérience boursière

    Les valeurs par défaut reproduisent l'échelle complète (L=10, T=60,
    N=1000, η=0.01) ; reduced() donne l'instance de test L=3, T=12.
    """
    L: int = 10
    T: int = 60
    r: float = 0.0
    vol_std: float = 0.2
    vol_clip: float = 0.6
    link: str = LOCATION
    noise_lo: float = 0.0
    noise_hi: float = 1.0
    N: int = 1000
    eta: float = 0.01
    seed: int = 0
    regime: str = "general"
    transition_scale: Optional[float] = None
    nonnegative: bool = True
    kappa: float = 1.0
    gamma: float = 0.1
    eval_samples: int = 200
    log_every: int = 1
    batch_size: int = 1
    reference: str = "rrm"
    reference_tol: float = 1e-4
    reference_samples: int = 256
    reference_iters: int = 50

    def __post_init__(self):
        if self.L < 1:
            raise ConfigException(f"L must be >= 1, got {self.L}")
        if self.T < 2:
            raise ConfigException(f"T must be >= 2 (H = 1 < T), got {self.T}")
        if not self.vol_std > 0 or not self.vol_clip > 0:
            raise ConfigException("vol_std and vol_clip must be > 0")
        if self.link not in VOLATILITY_LINKS:
            raise ConfigException(f"Unknown volatility link '{self.link}', expected one of {VOLATILITY_LINKS}")
        if not self.noise_hi > self.noise_lo:
            raise ConfigException(f"Noise range must satisfy lo < hi, got [{self.noise_lo}, {self.noise_hi}]")
        if self.N < 1 or not self.eta > 0:
            raise ConfigException("N must be >= 1 and eta > 0")
        if self.seed < 0:
            raise ConfigException("seed must be non-negative")
        if self.regime not in REGIME_SCALES:
            raise ConfigException(f"Unknown regime '{self.regime}', expected one of {sorted(REGIME_SCALES)}")
        if self.transition_scale is not None and not self.transition_scale > 0:
            raise ConfigException("transition_scale must be > 0")
        if self.reference not in ("rrm", "none"):
            raise ConfigException(f"Unknown reference source '{self.reference}'")

    @classmethod
    def reduced(cls, **overrides) -> "StockMarketConfig":
        """Instance réduite L=3, T=12"""
        params = {"L": 3, "T": 12}
        params.update(overrides)
        return cls(**params)

    @property
    def scale(self) -> float:
        """a tel que A = a·I_{2L}"""
        if self.transition_scale is not None:
            return self.transition_scale
        return REGIME_SCALES[self.regime]

    def as_dict(self) -> dict:
        return asdict(self)


def exponent(v: np.ndarray, r: float, T: int) -> np.ndarray:
    """(r − ½v²)/T + v/√T"""
    return (r - 0.5 * v ** 2) / T + v / np.sqrt(T)


class StockVolatilityPerturbation(IPerturbationMap):
    """
    Perturbation de la matrice de transition par la volatilité des actions

    À chaque pas t, ṽ⁽ⁱ⁾ est tiré puis projeté sur [−c, c],
    eᵢ = exp((r − ½ṽᵢ²)/T + ṽᵢ/√T) et V = diag(B·e) avec B le bloc L×L de M.
    Δ_t = s_t·[[E[V] − I, V − E[V]], [0, V − I]].

    Deux liens entre ε_t et la loi :
      - location : ṽ ∼ N(log ε_t, vol_std²) et s_t = 1. Avec log ε_t ≤ −c − 7·vol_std
        la volatilité est collée à −c et ε_t n'agit plus (pinned_steps).
      - sensitivity : ṽ ∼ N(0, vol_std²) et s_t = ε_t / ε̂_t, où ε̂_t majore la
        constante de Lipschitz de M ↦ Δ_t sous couplage identique ; la
        sensibilité W¹ de D_t vaut alors au plus ε_t.

    E[V] = Ē_t·diag(Σ_i m^{l,i}) où Ē_t = E[eᵢ] est calculé par quadrature
    de Gauss–Legendre sur la partie intérieure et par les masses de Φ aux
    bornes de projection. ε_t = 0 dégénère en ṽ ≡ −c (lien location).

    Args:
        L: nombre d'actions
        eps: calendrier ε_0..ε_{T−1}
        r: taux sans risque
        vol_std: écart-type du tirage de volatilité (0 = déterministe)
        vol_clip: rayon c de projection
        nodes: nombre de nœuds de quadrature
        link: "location" ou "sensitivity"
        nonnegative: poids positifs (ξ_t n'est prouvé que dans ce cas)
    """

    def __init__(
        self,
        L: int,
        eps: np.ndarray,
        r: float = 0.0,
        vol_std: float = 0.2,
        vol_clip: float = 0.6,
        nodes: int = QUADRATURE_NODES,
        link: str = LOCATION,
        nonnegative: bool = True,
    ):
        eps = np.array(eps, dtype=float)
        if L < 1:
            raise ConfigException(f"L must be >= 1, got {L}")
        if eps.ndim != 1 or np.any(eps < 0):
            raise ConfigException("Sensitivity schedule must be 1-D and non-negative")
        if vol_std < 0 or not vol_clip > 0:
            raise ConfigException("vol_std must be >= 0 and vol_clip > 0")
        if link not in VOLATILITY_LINKS:
            raise ConfigException(f"Unknown volatility link '{link}', expected one of {VOLATILITY_LINKS}")

        self.L = L
        self.d_x = 2 * L
        self.r = float(r)
        self.vol_std = float(vol_std)
        self.vol_clip = float(vol_clip)
        self.link = link
        self.nonnegative = nonnegative
        self.eps = eps
        self.degenerate = np.nonzero(eps == 0)[0] if link == LOCATION else np.zeros(0, dtype=int)
        if self.degenerate.size:
            logger.warning(
                f"⚠️ ε_t = 0 at steps {self.degenerate.tolist()}: volatility fixed at −{self.vol_clip}"
            )
        self._nodes, self._weights = np.polynomial.legendre.leggauss(nodes)
        self._mean_factor: Dict[int, float] = {}
        self.e_min, self.e_max = self.factor_range()
        steps = range(len(eps))
        if link == SENSITIVITY:
            self.amplitude = eps / np.array([self.unit_sensitivity(t) for t in steps])
        else:
            self.amplitude = np.ones(len(eps))
        self.xi = self.amplitude * np.array([self._support_bound(t) for t in steps])

    def factor_range(self) -> Tuple[float, float]:
        """Bornes de eᵢ sur ṽ ∈ [−c, c] (exposant concave, pic en ṽ = √T)"""
        T, c = self.T, self.vol_clip
        peak = min(c, np.sqrt(T))
        low = float(np.exp(exponent(np.array(-c), self.r, T)))
        high = float(np.exp(exponent(np.array(peak), self.r, T)))
        return low, high

    def _support_bound(self, t: int) -> float:
        # Poids convexes : V et E[V] ont leur diagonale dans [e_min, e_max]
        mean = self.mean_factor(t)
        spread = self.e_max - self.e_min
        return abs(mean - 1.0) + spread + max(abs(self.e_max - 1.0), abs(self.e_min - 1.0))

    def unit_sensitivity(self, t: int) -> float:
        """ε̂_t = √L·(Ē_t² + (e_max − e_min)² + e_max²)^½"""
        spread = self.e_max - self.e_min
        return float(np.sqrt(self.L * (self.mean_factor(t) ** 2 + spread ** 2 + self.e_max ** 2)))

    def _location(self, t: int) -> Optional[float]:
        """Centre du tirage de ṽ, ou None pour un pas dégénéré"""
        if self.link == SENSITIVITY:
            return 0.0
        if self.eps[t] == 0:
            return None
        return float(np.log(self.eps[t]))

    def pinned_steps(self) -> np.ndarray:
        """Pas où ṽ tombe sous −c avec probabilité ≥ 1 − PINNED_MASS"""
        pinned = []
        for t in range(self.T):
            location = self._location(t)
            if location is None:
                pinned.append(t)
            elif self.vol_std == 0:
                if location <= -self.vol_clip:
                    pinned.append(t)
            elif norm.cdf((-self.vol_clip - location) / self.vol_std) >= 1.0 - PINNED_MASS:
                pinned.append(t)
        return np.array(pinned, dtype=int)

    def mean_factor(self, t: int) -> float:
        """Ē_t = E[exp((r − ½ṽ²)/T + ṽ/√T)] sous la gaussienne projetée"""
        if t in self._mean_factor:
            return self._mean_factor[t]
        T, c, s = self.T, self.vol_clip, self.vol_std
        location = self._location(t)
        if location is None:
            value = float(np.exp(exponent(np.array(-c), self.r, T)))
        elif s == 0:
            value = float(np.exp(exponent(np.clip(location, -c, c), self.r, T)))
        else:
            low_mass = norm.cdf((-c - location) / s)
            high_mass = norm.sf((c - location) / s)
            v = c * self._nodes
            density = norm.pdf(v, loc=location, scale=s)
            interior = c * float(np.sum(self._weights * np.exp(exponent(v, self.r, T)) * density))
            value = float(
                low_mass * np.exp(exponent(np.array(-c), self.r, T))
                + high_mass * np.exp(exponent(np.array(c), self.r, T))
                + interior
            )
        self._mean_factor[t] = value
        return value

    def _weights_block(self, M: np.ndarray) -> np.ndarray:
        M = np.asarray(M, dtype=float)
        if M.shape != (self.d_x, self.d_x):
            raise DimensionException(f"Stock policy must be {self.d_x}×{self.d_x}, got {M.shape}")
        return M[: self.L, : self.L]

    def draw_volatility(self, t: int, rng: np.random.Generator, n: Optional[int] = None) -> np.ndarray:
        """ṽ projeté, shape (L,) ou (n, L)"""
        size = self.L if n is None else (n, self.L)
        draws = rng.normal(0.0, 1.0, size=size)
        location = self._location(t)
        if location is None:
            return np.full(size, -self.vol_clip)
        return np.clip(location + self.vol_std * draws, -self.vol_clip, self.vol_clip)

    def _assemble(self, weights: np.ndarray, diag_v: np.ndarray, t: int) -> np.ndarray:
        L = self.L
        mean_v = self.mean_factor(t) * weights.sum(axis=1)
        batch = diag_v.shape[:-1]
        delta = np.zeros(batch + (self.d_x, self.d_x))
        idx = np.arange(L)
        delta[..., idx, idx] = mean_v - 1.0
        delta[..., idx, L + idx] = diag_v - mean_v
        delta[..., L + idx, L + idx] = diag_v - 1.0
        return self.amplitude[t] * delta

    def volatility_matrix(self, M: np.ndarray, v: np.ndarray) -> np.ndarray:
        """V = diag(B·e(ṽ))"""
        weights = self._weights_block(M)
        return np.diag(weights @ np.exp(exponent(v, self.r, self.T)))

    def sample(self, M: np.ndarray, t: int, rng: np.random.Generator) -> np.ndarray:
        v = self.draw_volatility(t, rng)
        diag_v = np.diag(self.volatility_matrix(M, v))
        return self._assemble(self._weights_block(M), diag_v, t)

    def sample_many(self, M: np.ndarray, t: int, rng: np.random.Generator, n: int) -> np.ndarray:
        weights = self._weights_block(M)
        v = self.draw_volatility(t, rng, n)
        diag_v = np.exp(exponent(v, self.r, self.T)) @ weights.T
        return self._assemble(weights, diag_v, t)

    @property
    def zero_mean(self) -> bool:
        # Le bloc (1,1) E[V] − I est déterministe
        return False

    @property
    def support_certified(self) -> bool:
        return self.nonnegative


def transition_matrix(cfg: StockMarketConfig) -> np.ndarray:
    return cfg.scale * np.eye(2 * cfg.L)


def build_stock_instance(cfg: StockMarketConfig, schedule: SensitivitySchedule) -> InstanceBundle:
    """
    Construit l'instance boursière

    x_{t+1} = (A + Δ_t)x_t + M w̃_{t−1} + w̃_t avec A = a·I_{2L}, B = I,
    K = 0, H = 1 et w̃ = [w − E[w]; w], w ∼ U[lo, hi]^L.

    Args:
        cfg: paramètres de l'expérience
        schedule: calendrier ε_t de longueur T

    Returns:
        InstanceBundle (as_tuple() donne système, coût, perturbation, bruit)
    """
    if len(schedule.values) != cfg.T:
        logger.error(f"❌ Schedule '{schedule.order}' has {len(schedule.values)} values, T={cfg.T}")
        raise ConfigException(f"Schedule length {len(schedule.values)} does not match T={cfg.T}")

    L, d = cfg.L, 2 * cfg.L
    noise = UniformBoxNoise(cfg.noise_lo, cfg.noise_hi, L, shifted_stack=True)
    perturbation = StockVolatilityPerturbation(
        L, schedule.values, r=cfg.r, vol_std=cfg.vol_std, vol_clip=cfg.vol_clip,
        link=cfg.link, nonnegative=cfg.nonnegative,
    )
    config = SystemConfig(
        A=transition_matrix(cfg),
        B=np.eye(d),
        K=np.zeros((d, d)),
        T=cfg.T,
        H=1,
        W=noise.norm_bound(),
        x0_bound=0.0,
        sigma2=noise.entry_variance(),
        kappa=cfg.kappa,
        gamma=cfg.gamma,
    )
    notes = [
        "noise covariance is singular (stacked [w − E w; w]); sigma2 is the per-entry variance",
        "perturbations are not zero-mean: the (1,1) block E[V] − I is deterministic",
        "stage cost weights are projections: mu = 0, strong convexity does not hold",
    ]
    if cfg.scale >= 1.0:
        notes.append(f"transition A = {cfg.scale}·I is not strongly stable for any gamma > 0")
    if perturbation.degenerate.size:
        notes.append(f"degenerate volatility (eps = 0) at steps {perturbation.degenerate.tolist()}")
    pinned = perturbation.pinned_steps()
    if pinned.size == cfg.T:
        notes.append(
            f"volatility is pinned at -{cfg.vol_clip} on every step: D_t does not depend on the schedule"
            f" order (link '{SENSITIVITY}' scales Delta_t by eps_t instead)"
        )
    elif pinned.size:
        notes.append(f"volatility is pinned at -{cfg.vol_clip} on steps {pinned.tolist()}")
    if cfg.link == SENSITIVITY:
        notes.append("Delta_t is scaled so that the Wasserstein sensitivity of D_t is at most eps_t")
    if not cfg.nonnegative:
        notes.append("xi bounds assume nonnegative weights and are declared only")
    for note in notes:
        logger.warning(f"⚠️ Stock instance: {note}")

    return InstanceBundle(
        config=config,
        cost=StockRiskCost(L),
        perturbation=perturbation,
        noise=noise,
        x0=np.zeros(d),
        feasible_set=RowSimplex(scale=1.0, width=L, nonnegative=cfg.nonnegative),
        notes=notes,
    )


def random_portfolio(cfg: StockMarketConfig, seed: SeedPair) -> Policy:
    """M_0 tirée uniformément sur l'ensemble admissible (lignes de Dirichlet(1))"""
    rng, _ = seed.generators()
    matrix = np.zeros((2 * cfg.L, 2 * cfg.L))
    matrix[: cfg.L, : cfg.L] = rng.dirichlet(np.ones(cfg.L), size=cfg.L)
    return Policy(matrix=matrix, feasible_set=RowSimplex(scale=1.0, width=cfg.L, nonnegative=cfg.nonnegative))


def sample_volatility_perturbation(
    cfg: StockMarketConfig,
    schedule: SensitivitySchedule,
    M: Policy,
    t: int,
    seed: SeedPair,
) -> np.ndarray:
    """Un tirage Δ_t ∼ D_t(M) avec le générateur de perturbations de seed"""
    if not 0 <= t < cfg.T:
        raise DimensionException(f"Step t={t} outside 0..{cfg.T - 1}")
    if len(schedule.values) != cfg.T:
        raise ConfigException(f"Schedule length {len(schedule.values)} does not match T={cfg.T}")
    if not M.is_feasible():
        raise ConfigException("Portfolio weights must lie in the feasible set")
    perturbation = StockVolatilityPerturbation(
        cfg.L, schedule.values, r=cfg.r, vol_std=cfg.vol_std, vol_clip=cfg.vol_clip,
        link=cfg.link, nonnegative=cfg.nonnegative,
    )
    _, rng = seed.generators()
    return perturbation.sample(M.matrix, t, rng)
