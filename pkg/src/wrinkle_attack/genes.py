"""Gene parameterization of a wrinkle perturbation and its search box."""

from __future__ import annotations

from dataclasses import dataclass, field

from .rng import Xoshiro256, derive_seed, mix64

SCALES = ("large", "medium", "small")


@dataclass(frozen=True)
class ScaleParams:
    """One scale's wrinkle parameters.

    ``frequencies`` holds a single oscillation frequency for the large and
    small scales and a (sine, cosine) pair for the medium scale.
    """

    intensity: float
    layers: int
    decay: float
    frequencies: tuple[float, ...]

    def __post_init__(self):
        if self.layers < 1:
            raise ValueError("layers must be >= 1")
        if self.decay < 0:
            raise ValueError("decay must be >= 0")
        if any(f <= 0 for f in self.frequencies):
            raise ValueError("frequencies must be > 0")


@dataclass(frozen=True)
class AppearanceParams:
    """Brightness modulation parameters: L = base + amplitude * zhat."""

    base: float
    amplitude: float
    eps: float = 1e-6

    def __post_init__(self):
        if self.amplitude < 0:
            raise ValueError("amplitude must be >= 0")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")


@dataclass(frozen=True)
class ScaleMask:
    """Which scale components contribute to the total field."""

    large: bool = True
    medium: bool = True
    small: bool = True

    def enabled(self, scale: str) -> bool:
        return getattr(self, scale)

    @staticmethod
    def from_token(token: str) -> "ScaleMask":
        """Parse a condition token: 'L', 'M', 'S', 'LM' or 'full'."""
        token = token.strip().lower()
        if token == "full":
            return ScaleMask(True, True, True)
        if token and set(token) <= {"l", "m", "s"}:
            return ScaleMask("l" in token, "m" in token, "s" in token)
        raise ValueError(f"unknown component condition {token!r}")

    def token(self) -> str:
        if self.large and self.medium and self.small:
            return "full"
        return "".join(c for c, on in zip("LMS", (self.large, self.medium, self.small)) if on)


@dataclass(frozen=True)
class WrinkleGene:
    """Full perturbation parameter vector plus its center-sampling seed."""

    large: ScaleParams
    medium: ScaleParams
    small: ScaleParams
    gain_u: float
    gain_v: float
    appearance: AppearanceParams
    center_seed: int
    mask: ScaleMask = field(default_factory=ScaleMask)

    def scale(self, name: str) -> ScaleParams:
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {
            "large": vars(self.large) | {"frequencies": list(self.large.frequencies)},
            "medium": vars(self.medium) | {"frequencies": list(self.medium.frequencies)},
            "small": vars(self.small) | {"frequencies": list(self.small.frequencies)},
            "gain_u": self.gain_u,
            "gain_v": self.gain_v,
            "appearance": vars(self.appearance),
            "center_seed": self.center_seed,
            "mask": vars(self.mask),
        }

    @staticmethod
    def from_dict(d: dict) -> "WrinkleGene":
        def sp(s):
            return ScaleParams(
                intensity=s["intensity"],
                layers=int(s["layers"]),
                decay=s["decay"],
                frequencies=tuple(s["frequencies"]),
            )

        return WrinkleGene(
            large=sp(d["large"]),
            medium=sp(d["medium"]),
            small=sp(d["small"]),
            gain_u=d["gain_u"],
            gain_v=d["gain_v"],
            appearance=AppearanceParams(**d["appearance"]),
            center_seed=int(d["center_seed"]),
            mask=ScaleMask(**d.get("mask", {})),
        )


def identity_gene(mask: ScaleMask = ScaleMask()) -> WrinkleGene:
    """Gene whose rendering is the identity map (zero field, unit brightness)."""
    zero = lambda freqs: ScaleParams(intensity=0.0, layers=1, decay=0.0, frequencies=freqs)
    return WrinkleGene(
        large=zero((1.0,)),
        medium=zero((1.0, 1.0)),
        small=zero((1.0,)),
        gain_u=0.0,
        gain_v=0.0,
        appearance=AppearanceParams(base=1.0, amplitude=0.0),
        center_seed=0,
        mask=mask,
    )


@dataclass(frozen=True)
class Coord:
    """One searched gene coordinate with its box interval."""

    name: str
    lo: float
    hi: float
    integer: bool = False


@dataclass(frozen=True)
class GeneBox:
    """Box constraints of the searched coordinates (seed and mask excluded)."""

    coords: tuple[Coord, ...]

    def __post_init__(self):
        for c in self.coords:
            if c.hi < c.lo:
                raise ValueError(f"inverted range for {c.name}: [{c.lo}, {c.hi}]")

    def index(self, name: str) -> int:
        for i, c in enumerate(self.coords):
            if c.name == name:
                return i
        raise KeyError(name)

    def sample_vector(self, rng: Xoshiro256) -> list[float]:
        vec = []
        for c in self.coords:
            if c.integer:
                vec.append(float(rng.randint(int(c.lo), int(c.hi))))
            else:
                vec.append(rng.uniform_in(c.lo, c.hi))
        return vec

    def contains(self, vec: list[float]) -> bool:
        return all(c.lo <= v <= c.hi for c, v in zip(self.coords, vec))

    def to_dict(self) -> dict:
        return {c.name: [c.lo, c.hi] for c in self.coords}


# Coordinate order is part of the reproducibility contract: crossover and
# mutation walk this order, so reordering would change seeded runs.
_COORD_ORDER = (
    ("large.intensity", False),
    ("large.layers", True),
    ("large.decay", False),
    ("large.freq", False),
    ("medium.intensity", False),
    ("medium.layers", True),
    ("medium.decay", False),
    ("medium.freq1", False),
    ("medium.freq2", False),
    ("small.intensity", False),
    ("small.layers", True),
    ("small.decay", False),
    ("small.freq", False),
    ("gain_u", False),
    ("gain_v", False),
    ("appearance.base", False),
    ("appearance.amplitude", False),
)

DEFAULT_RANGES: dict[str, tuple[float, float]] = {
    "large.intensity": (0.4, 0.8),
    "large.layers": (2, 4),
    "large.decay": (1.0, 3.0),
    "large.freq": (1.0, 3.0),
    "medium.intensity": (0.4, 0.8),
    "medium.layers": (4, 6),
    "medium.decay": (2.0, 5.0),
    "medium.freq1": (2.0, 6.0),
    "medium.freq2": (2.0, 6.0),
    "small.intensity": (0.3, 0.5),
    "small.layers": (6, 8),
    "small.decay": (4.0, 8.0),
    "small.freq": (4.0, 10.0),
    "gain_u": (0.4, 0.6),
    "gain_v": (0.4, 0.6),
    "appearance.base": (0.4, 0.8),
    "appearance.amplitude": (0.2, 0.4),
}


def default_box(overrides: dict[str, tuple[float, float]] | None = None) -> GeneBox:
    ranges = dict(DEFAULT_RANGES)
    if overrides:
        unknown = set(overrides) - set(ranges)
        if unknown:
            raise ValueError(f"unknown box coordinates: {sorted(unknown)}")
        ranges.update(overrides)
    coords = tuple(
        Coord(name, float(ranges[name][0]), float(ranges[name][1]), integer)
        for name, integer in _COORD_ORDER
    )
    return GeneBox(coords)


def vector_to_gene(vec: list[float], center_seed: int, mask: ScaleMask) -> WrinkleGene:
    v = list(vec)
    return WrinkleGene(
        large=ScaleParams(v[0], int(round(v[1])), v[2], (v[3],)),
        medium=ScaleParams(v[4], int(round(v[5])), v[6], (v[7], v[8])),
        small=ScaleParams(v[9], int(round(v[10])), v[11], (v[12],)),
        gain_u=v[13],
        gain_v=v[14],
        appearance=AppearanceParams(base=v[15], amplitude=v[16]),
        center_seed=center_seed,
        mask=mask,
    )


def gene_to_vector(gene: WrinkleGene) -> list[float]:
    L, M, S = gene.large, gene.medium, gene.small
    return [
        L.intensity, float(L.layers), L.decay, L.frequencies[0],
        M.intensity, float(M.layers), M.decay, M.frequencies[0], M.frequencies[1],
        S.intensity, float(S.layers), S.decay, S.frequencies[0],
        gene.gain_u, gene.gain_v,
        gene.appearance.base, gene.appearance.amplitude,
    ]


def sample_gene(box: GeneBox, rng: Xoshiro256, seed_base: int, seed_index: int,
                mask: ScaleMask) -> WrinkleGene:
    """Draw one uniform gene; its center seed is derived, not drawn."""
    vec = box.sample_vector(rng)
    return vector_to_gene(vec, derive_seed(seed_base, seed_index), mask)


def child_seed(seed_a: int, seed_b: int) -> int:
    """Center seed for an offspring: a deterministic mix of both parent
    seeds that reduces to the shared seed when the parents agree."""
    if seed_a == seed_b:
        return seed_a
    return mix64(seed_a, seed_b)
