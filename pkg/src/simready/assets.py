"""Simulation-ready asset data model, file I/O, and point-cloud ingestion.

An asset is a point-sampled object where every point carries geometry,
albedo color, a part label, and a full physical parameter bundle. Assets
are immutable after load and safe to share across threads.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

SCHEMA_VERSION = 1
MAGIC = "SRA"

E_MIN = 1.0e4
E_MAX = 1.0e13
NU_MIN = 0.0
NU_MAX = 0.499
PHI_MIN = 0.0
PHI_MAX = math.pi / 2

# Sentinels used when a parameter does not apply to the behavior type.
# sigma_y sentinel is 1 Pa so its base-10 log encodes as 0.
SIGMA_Y_SENTINEL = 1.0
PHI_SENTINEL = 0.0

FEATURE_DIM = 9


class AssetError(Exception):
    """Base class for asset problems."""


class AssetFormatError(AssetError):
    """File does not conform to the .sra schema."""


class AssetValidationError(AssetError):
    """Asset content violates a type invariant. Carries all failures."""

    def __init__(self, failures):
        self.failures = list(failures)
        super().__init__("; ".join(self.failures))


class DegenerateExtentError(AssetError):
    """Point cloud has zero extent on every axis."""


class BehaviorType(enum.IntEnum):
    """The four material behavior types.

    Each maps to a fixed (elasticity, plasticity) pair:
      M0  neo-Hookean + identity (pure elastic)
      M1  neo-Hookean + von Mises with softening (damage)
      M2  neo-Hookean + von Mises (no softening)
      M3  StVK + Drucker-Prager (granular)
    """

    M0 = 0
    M1 = 1
    M2 = 2
    M3 = 3

    @property
    def elasticity(self) -> str:
        return "stvk" if self is BehaviorType.M3 else "neo_hookean"

    @property
    def plasticity(self) -> str:
        return {
            BehaviorType.M0: "identity",
            BehaviorType.M1: "von_mises_damage",
            BehaviorType.M2: "von_mises",
            BehaviorType.M3: "drucker_prager",
        }[self]

    @property
    def requires_sigma_y(self) -> bool:
        return self in (BehaviorType.M1, BehaviorType.M2)

    @property
    def requires_phi(self) -> bool:
        return self is BehaviorType.M3

    @classmethod
    def from_name(cls, name: str) -> "BehaviorType":
        try:
            return cls[name]
        except KeyError:
            raise ValueError(f"unknown behavior type {name!r}") from None


@dataclass(frozen=True)
class MaterialParams:
    """Per-point physical parameter bundle, linear SI units.

    E and sigma_y in Pa, phi in radians, rho in kg/m^3. sigma_y is
    required for M1/M2, phi for M3; both are None when inapplicable.
    """

    E: float
    nu: float
    rho: float
    behavior: BehaviorType
    sigma_y: float | None = None
    phi: float | None = None

    def validation_failures(self) -> list[str]:
        fails = []
        if not (E_MIN <= self.E <= E_MAX):
            fails.append(f"E={self.E!r} outside [{E_MIN:g}, {E_MAX:g}] Pa")
        if not (NU_MIN <= self.nu <= NU_MAX):
            fails.append(f"nu={self.nu!r} outside [{NU_MIN}, {NU_MAX}]")
        if not self.rho > 0:
            fails.append(f"rho={self.rho!r} must be > 0")
        if self.behavior.requires_sigma_y:
            if self.sigma_y is None:
                fails.append(f"sigma_y required for {self.behavior.name}")
            elif not self.sigma_y > 0:
                fails.append(f"sigma_y={self.sigma_y!r} must be > 0")
        if self.behavior.requires_phi:
            if self.phi is None:
                fails.append(f"phi required for {self.behavior.name}")
            elif not (PHI_MIN <= self.phi <= PHI_MAX):
                fails.append(f"phi={self.phi!r} outside [0, pi/2]")
        return fails

    def validate(self) -> "MaterialParams":
        fails = self.validation_failures()
        if fails:
            raise AssetValidationError(fails)
        return self

    def canonical(self) -> "MaterialParams":
        """Drop parameters the behavior type does not use (sentinel rule)."""
        sy = self.sigma_y if self.behavior.requires_sigma_y else None
        ph = self.phi if self.behavior.requires_phi else None
        return replace(self, sigma_y=sy, phi=ph)


def material_feature_vector(m: MaterialParams) -> np.ndarray:
    """Encode material parameters as the fixed 9-component numeric vector.

    Layout: [log10(E), nu, log10(sigma_y), phi, rho, onehot(behavior) x4].
    Inapplicable sigma_y/phi slots carry sentinels (log10 of 1 Pa = 0; 0 rad).
    """
    m.validate()
    sy = m.sigma_y if m.behavior.requires_sigma_y else SIGMA_Y_SENTINEL
    ph = m.phi if m.behavior.requires_phi else PHI_SENTINEL
    vec = np.zeros(FEATURE_DIM)
    vec[0] = math.log10(m.E)
    vec[1] = m.nu
    vec[2] = math.log10(sy)
    vec[3] = ph
    vec[4] = m.rho
    vec[5 + int(m.behavior)] = 1.0
    return vec


def material_from_feature_vector(vec: np.ndarray) -> MaterialParams:
    """Inverse of material_feature_vector (sentinels decode to None)."""
    vec = np.asarray(vec, dtype=float)
    if vec.shape != (FEATURE_DIM,):
        raise ValueError(f"feature vector must have shape ({FEATURE_DIM},)")
    behavior = BehaviorType(int(np.argmax(vec[5:9])))
    return MaterialParams(
        E=10.0 ** vec[0],
        nu=float(vec[1]),
        rho=float(vec[4]),
        behavior=behavior,
        sigma_y=10.0 ** vec[2] if behavior.requires_sigma_y else None,
        phi=float(vec[3]) if behavior.requires_phi else None,
    )


@dataclass(frozen=True)
class NormalizationTransform:
    """Affine map from world meters to normalized coordinates.

    normalized = world * scale + translation. scale is uniform.
    """

    scale: float
    translation: tuple[float, float, float]

    def apply(self, points: np.ndarray) -> np.ndarray:
        return np.asarray(points, dtype=float) * self.scale + np.asarray(self.translation)

    def invert(self, points: np.ndarray) -> np.ndarray:
        return (np.asarray(points, dtype=float) - np.asarray(self.translation)) / self.scale

    def to_dict(self) -> dict:
        return {"scale": self.scale, "translation": list(self.translation)}

    @classmethod
    def from_dict(cls, d: dict) -> "NormalizationTransform":
        return cls(scale=float(d["scale"]), translation=tuple(float(v) for v in d["translation"]))

    @classmethod
    def identity(cls) -> "NormalizationTransform":
        return cls(scale=1.0, translation=(0.0, 0.0, 0.0))


@dataclass(frozen=True)
class PartInfo:
    name: str
    coarse_material: str = ""
    fine_material: str | None = None
    color: str | None = None

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "coarse_material": self.coarse_material,
            "fine_material": self.fine_material,
            "color": self.color,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PartInfo":
        return cls(
            name=d["name"],
            coarse_material=d.get("coarse_material", ""),
            fine_material=d.get("fine_material"),
            color=d.get("color"),
        )


@dataclass(frozen=True)
class AssetMetadata:
    category: str
    parts: tuple[PartInfo, ...]
    normalization: NormalizationTransform = field(default_factory=NormalizationTransform.identity)
    # meters per normalized unit during simulation
    world_scale: float = 1.0
    asset_id: str = ""

    def to_dict(self) -> dict:
        return {
            "category": self.category,
            "parts": [p.to_dict() for p in self.parts],
            "normalization": self.normalization.to_dict(),
            "world_scale": self.world_scale,
            "asset_id": self.asset_id,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "AssetMetadata":
        return cls(
            category=d.get("category", ""),
            parts=tuple(PartInfo.from_dict(p) for p in d.get("parts", [])),
            normalization=NormalizationTransform.from_dict(
                d.get("normalization", {"scale": 1.0, "translation": [0.0, 0.0, 0.0]})
            ),
            world_scale=float(d.get("world_scale", 1.0)),
            asset_id=d.get("asset_id", ""),
        )


# Per-point storage is struct-of-arrays in float32/int32, matching the binary
# wire format exactly so binary round trips are bit-for-bit.
@dataclass(frozen=True)
class SimReadyAsset:
    points: np.ndarray  # (N, 3) float32, normalized object space
    colors: np.ndarray  # (N, 3) float32 in [0, 1]
    part_labels: np.ndarray  # (N,) int32, index into metadata.parts
    E: np.ndarray  # (N,) float32, Pa
    nu: np.ndarray  # (N,) float32
    sigma_y: np.ndarray  # (N,) float32, Pa (sentinel 1.0 where inapplicable)
    phi: np.ndarray  # (N,) float32, rad (sentinel 0.0 where inapplicable)
    rho: np.ndarray  # (N,) float32, kg/m^3
    behavior: np.ndarray  # (N,) int32, BehaviorType values
    metadata: AssetMetadata

    @property
    def n_points(self) -> int:
        return int(self.points.shape[0])

    def material_at(self, i: int) -> MaterialParams:
        b = BehaviorType(int(self.behavior[i]))
        return MaterialParams(
            E=float(self.E[i]),
            nu=float(self.nu[i]),
            rho=float(self.rho[i]),
            behavior=b,
            sigma_y=float(self.sigma_y[i]) if b.requires_sigma_y else None,
            phi=float(self.phi[i]) if b.requires_phi else None,
        )

    def materials(self) -> list[MaterialParams]:
        return [self.material_at(i) for i in range(self.n_points)]

    def feature_matrix(self) -> np.ndarray:
        """(N, 9) feature encoding of all per-point materials."""
        n = self.n_points
        out = np.zeros((n, FEATURE_DIM))
        out[:, 0] = np.log10(self.E.astype(np.float64))
        out[:, 1] = self.nu
        sy = self.sigma_y.astype(np.float64).copy()
        ph = self.phi.astype(np.float64).copy()
        needs_sy = np.isin(self.behavior, (int(BehaviorType.M1), int(BehaviorType.M2)))
        needs_phi = self.behavior == int(BehaviorType.M3)
        sy[~needs_sy] = SIGMA_Y_SENTINEL
        ph[~needs_phi] = PHI_SENTINEL
        out[:, 2] = np.log10(sy)
        out[:, 3] = ph
        out[:, 4] = self.rho
        out[np.arange(n), 5 + self.behavior.astype(int)] = 1.0
        return out

    def validation_failures(self) -> list[str]:
        fails = []
        n = self.n_points
        if n < 1:
            return ["asset must contain at least one point"]
        arrays = {
            "colors": self.colors,
            "part_labels": self.part_labels,
            "E": self.E,
            "nu": self.nu,
            "sigma_y": self.sigma_y,
            "phi": self.phi,
            "rho": self.rho,
            "behavior": self.behavior,
        }
        for name, arr in arrays.items():
            if arr.shape[0] != n:
                fails.append(f"{name} has length {arr.shape[0]}, expected {n}")
        if fails:
            return fails
        eps = 1e-5
        if np.any(self.points < -eps) or np.any(self.points > 1 + eps):
            fails.append("points outside the unit bounding box")
        if np.any(self.colors < -eps) or np.any(self.colors > 1 + eps):
            fails.append("colors outside [0, 1]")
        n_parts = len(self.metadata.parts)
        if np.any(self.part_labels < 0) or np.any(self.part_labels >= n_parts):
            bad = sorted(set(self.part_labels[(self.part_labels < 0) | (self.part_labels >= n_parts)].tolist()))
            fails.append(f"part_labels {bad} not in metadata part list (0..{n_parts - 1})")
        if np.any((self.E < E_MIN) | (self.E > E_MAX)):
            fails.append(f"E outside [{E_MIN:g}, {E_MAX:g}] Pa for some points")
        if np.any((self.nu < NU_MIN) | (self.nu > NU_MAX)):
            fails.append(f"nu outside [{NU_MIN}, {NU_MAX}] for some points")
        if np.any(self.rho <= 0):
            fails.append("rho must be > 0 for all points")
        if np.any((self.behavior < 0) | (self.behavior > 3)):
            fails.append("behavior values must be in 0..3")
        else:
            needs_sy = np.isin(self.behavior, (int(BehaviorType.M1), int(BehaviorType.M2)))
            if np.any(self.sigma_y[needs_sy] <= 0):
                fails.append("sigma_y must be > 0 where behavior is M1/M2")
            needs_phi = self.behavior == int(BehaviorType.M3)
            if np.any((self.phi[needs_phi] < PHI_MIN) | (self.phi[needs_phi] > PHI_MAX + 1e-6)):
                fails.append("phi outside [0, pi/2] where behavior is M3")
        return fails

    def validate(self) -> "SimReadyAsset":
        fails = self.validation_failures()
        if fails:
            raise AssetValidationError(fails)
        return self

    @classmethod
    def from_materials(
        cls,
        points,
        colors,
        part_labels,
        materials: list[MaterialParams],
        metadata: AssetMetadata,
    ) -> "SimReadyAsset":
        """Build from a list of per-point MaterialParams (sentinels filled in)."""
        n = len(materials)
        E = np.empty(n, np.float32)
        nu = np.empty(n, np.float32)
        sy = np.full(n, SIGMA_Y_SENTINEL, np.float32)
        ph = np.full(n, PHI_SENTINEL, np.float32)
        rho = np.empty(n, np.float32)
        beh = np.empty(n, np.int32)
        for i, m in enumerate(materials):
            E[i] = m.E
            nu[i] = m.nu
            rho[i] = m.rho
            beh[i] = int(m.behavior)
            if m.behavior.requires_sigma_y:
                sy[i] = m.sigma_y
            if m.behavior.requires_phi:
                ph[i] = m.phi
        asset = cls(
            points=np.ascontiguousarray(points, np.float32),
            colors=np.ascontiguousarray(colors, np.float32),
            part_labels=np.ascontiguousarray(part_labels, np.int32),
            E=E,
            nu=nu,
            sigma_y=sy,
            phi=ph,
            rho=rho,
            behavior=beh,
            metadata=metadata,
        )
        return asset.validate()

    def equal_fields(self, other: "SimReadyAsset") -> bool:
        return (
            np.array_equal(self.points, other.points)
            and np.array_equal(self.colors, other.colors)
            and np.array_equal(self.part_labels, other.part_labels)
            and np.array_equal(self.E, other.E)
            and np.array_equal(self.nu, other.nu)
            and np.array_equal(self.sigma_y, other.sigma_y)
            and np.array_equal(self.phi, other.phi)
            and np.array_equal(self.rho, other.rho)
            and np.array_equal(self.behavior, other.behavior)
            and self.metadata == other.metadata
        )


def normalize_to_unit_box(points) -> tuple[np.ndarray, NormalizationTransform]:
    """Fit points into [0,1]^3: longest axis spans exactly [0,1], uniform
    scale, centered on the other axes. Returns (points', transform) where
    transform.apply maps world points to the normalized ones.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 3 or pts.shape[0] < 1:
        raise ValueError("points must be a nonempty (N, 3) array")
    lo = pts.min(axis=0)
    hi = pts.max(axis=0)
    extent = hi - lo
    longest = float(extent.max())
    if longest <= 0:
        raise DegenerateExtentError("all points coincide; bounding box has zero extent")
    s = 1.0 / longest
    offset = (1.0 - extent * s) / 2.0
    translation = offset - lo * s
    transform = NormalizationTransform(scale=s, translation=tuple(translation))
    return transform.apply(pts), transform


def propagate_part_labels(labeled_positions, labels, queries, k: int = 5) -> np.ndarray:
    """Assign each query point the majority part label among its k nearest
    labeled points (Euclidean). Ties break to the label of the single
    nearest point carrying one of the tied labels.
    """
    pos = np.asarray(labeled_positions, dtype=float)
    lab = np.asarray(labels)
    q = np.asarray(queries, dtype=float)
    if pos.shape[0] == 0:
        raise ValueError("labeled set is empty")
    if k < 1:
        raise ValueError("k must be >= 1")
    k = min(k, pos.shape[0])
    tree = cKDTree(pos)
    _, idx = tree.query(q, k=k)
    idx = np.atleast_2d(idx)
    if idx.shape[0] != q.shape[0]:  # k == 1 returns (Q,), reshape
        idx = idx.reshape(q.shape[0], k)
    out = np.empty(q.shape[0], dtype=lab.dtype)
    for qi in range(q.shape[0]):
        neigh = lab[idx[qi]]
        values, counts = np.unique(neigh, return_counts=True)
        best = counts.max()
        tied = set(values[counts == best].tolist())
        # neighbors come back sorted by distance; first hit wins the tie
        for l in neigh:
            if l in tied:
                out[qi] = l
                break
    return out


def propagate_colors(surface_positions, surface_colors, queries) -> np.ndarray:
    """Each query inherits the color of its single nearest surface point."""
    pos = np.asarray(surface_positions, dtype=float)
    col = np.asarray(surface_colors)
    q = np.asarray(queries, dtype=float)
    if pos.shape[0] == 0:
        raise ValueError("surface set is empty")
    tree = cKDTree(pos)
    _, idx = tree.query(q, k=1)
    return col[idx]


# ---------------------------------------------------------------------------
# .sra container: one JSON header line, then per-point arrays either as
# text lines (field name + values) or one little-endian binary blob.
# Field order is fixed: positions, colors, part_labels, E, nu, sigma_y,
# phi, rho, behavior.
# ---------------------------------------------------------------------------

_FIELD_ORDER = ("positions", "colors", "part_labels", "E", "nu", "sigma_y", "phi", "rho", "behavior")


def _asset_arrays(asset: SimReadyAsset) -> dict[str, np.ndarray]:
    return {
        "positions": asset.points,
        "colors": asset.colors,
        "part_labels": asset.part_labels,
        "E": asset.E,
        "nu": asset.nu,
        "sigma_y": asset.sigma_y,
        "phi": asset.phi,
        "rho": asset.rho,
        "behavior": asset.behavior,
    }


def save_asset(asset: SimReadyAsset, path, mode: str = "binary") -> None:
    if mode not in ("binary", "text"):
        raise ValueError(f"mode must be 'binary' or 'text', got {mode!r}")
    header = {
        "format": MAGIC,
        "schema_version": SCHEMA_VERSION,
        "mode": mode,
        "n_points": asset.n_points,
        "metadata": asset.metadata.to_dict(),
    }
    head = json.dumps(header, separators=(",", ":")) + "\n"
    arrays = _asset_arrays(asset)
    with open(path, "wb") as f:
        f.write(head.encode("utf-8"))
        if mode == "binary":
            for name in _FIELD_ORDER:
                arr = arrays[name]
                dt = "<i4" if arr.dtype.kind == "i" else "<f4"
                f.write(np.ascontiguousarray(arr, dtype=dt).tobytes())
        else:
            for name in _FIELD_ORDER:
                arr = arrays[name]
                if arr.dtype.kind == "i":
                    vals = " ".join(str(int(v)) for v in arr.ravel())
                else:
                    # repr of float32 round-trips exactly
                    vals = " ".join(repr(float(v)) for v in arr.ravel())
                f.write(f"{name} {vals}\n".encode("utf-8"))


def load_asset(path) -> SimReadyAsset:
    with open(path, "rb") as f:
        head_line = f.readline()
        rest = f.read()
    try:
        header = json.loads(head_line.decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as e:
        raise AssetFormatError(f"unreadable header: {e}") from None
    if header.get("format") != MAGIC:
        raise AssetFormatError(f"not an asset file (format={header.get('format')!r})")
    if header.get("schema_version") != SCHEMA_VERSION:
        raise AssetFormatError(f"unsupported schema_version {header.get('schema_version')!r}")
    for key in ("mode", "n_points", "metadata"):
        if key not in header:
            raise AssetFormatError(f"header missing field {key!r}")
    mode = header["mode"]
    n = int(header["n_points"])
    if n < 1:
        raise AssetFormatError(f"n_points must be >= 1, got {n}")
    try:
        metadata = AssetMetadata.from_dict(header["metadata"])
    except (KeyError, TypeError, ValueError) as e:
        raise AssetFormatError(f"bad metadata: {e}") from None

    shapes = {
        "positions": (n, 3),
        "colors": (n, 3),
        "part_labels": (n,),
        "E": (n,),
        "nu": (n,),
        "sigma_y": (n,),
        "phi": (n,),
        "rho": (n,),
        "behavior": (n,),
    }
    int_fields = {"part_labels", "behavior"}
    arrays: dict[str, np.ndarray] = {}
    if mode == "binary":
        off = 0
        for name in _FIELD_ORDER:
            shape = shapes[name]
            count = int(np.prod(shape))
            dt = np.dtype("<i4") if name in int_fields else np.dtype("<f4")
            nbytes = count * 4
            if off + nbytes > len(rest):
                raise AssetFormatError(f"truncated binary blob while reading {name!r}")
            arrays[name] = np.frombuffer(rest, dtype=dt, count=count, offset=off).reshape(shape).copy()
            off += nbytes
        if off != len(rest):
            raise AssetFormatError(f"{len(rest) - off} trailing bytes after last field")
    elif mode == "text":
        lines = [ln for ln in rest.decode("utf-8").splitlines() if ln.strip()]
        if len(lines) != len(_FIELD_ORDER):
            raise AssetFormatError(f"expected {len(_FIELD_ORDER)} field lines, found {len(lines)}")
        for name, line in zip(_FIELD_ORDER, lines):
            tag, _, payload = line.partition(" ")
            if tag != name:
                raise AssetFormatError(f"expected field {name!r}, found {tag!r}")
            shape = shapes[name]
            dt = np.int32 if name in int_fields else np.float32
            try:
                vals = np.array(payload.split(), dtype=dt)
            except ValueError as e:
                raise AssetFormatError(f"field {name!r}: {e}") from None
            if vals.size != int(np.prod(shape)):
                raise AssetFormatError(f"field {name!r} has {vals.size} values, expected {int(np.prod(shape))}")
            arrays[name] = vals.reshape(shape)
    else:
        raise AssetFormatError(f"unknown mode {mode!r}")

    asset = SimReadyAsset(
        points=arrays["positions"],
        colors=arrays["colors"],
        part_labels=arrays["part_labels"],
        E=arrays["E"],
        nu=arrays["nu"],
        sigma_y=arrays["sigma_y"],
        phi=arrays["phi"],
        rho=arrays["rho"],
        behavior=arrays["behavior"],
        metadata=metadata,
    )
    return asset.validate()
