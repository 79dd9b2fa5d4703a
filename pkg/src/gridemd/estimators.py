"""Turnstile EMD estimators over hierarchies of randomly shifted grids.

`MultigridEstimator` keeps, for every level i in [0, log2(delta)] and every
one of g = 2*log2(delta) independently shifted level-i grids, a linear
sketch of the difference of the two multisets' per-cell count vectors,
plus distinct-count sketches over the unit cells.  Its estimate is

    k_hat**2 / 2 * sum_i 2**i * C_hat_i

with C_hat_i the smallest estimated l1 difference among the level-i grids
and k_hat the smaller estimated distinct count, clamped to at least 1.

`NestedGridEstimator` is the single-shift baseline: one nested grid per
level sharing one shift vector, concatenated into a single l1 embedding
where level-i mass carries weight 2**i.  Taking the minimum of the two
estimators' outputs gives the combined estimate.

Every estimator supports an exact backend (`backend="dense"`) where the
sketches are replaced by exact sparse count vectors; used by tests and the
grid-selection experiments.
"""

from __future__ import annotations

import hashlib
import json
import random
import struct
from dataclasses import dataclass, field

from ._mix import derive_key
from .errors import ConfigError, EmptyStream, SizeMismatch
from .geometry import (
    GridSpec,
    StreamUpdate,
    cell_of,
    random_grid,
    validate_delta,
    validate_update,
)
from .sketches import L0Sketch, L1Sketch

BACKENDS = ("sketch", "dense")


def pack_cell(ix: int, iy: int) -> int:
    """Pack a cell index pair into one nonnegative sketch coordinate."""
    return ((ix + 1) << 32) | (iy + 1)


def pack_level_cell(level: int, ix: int, iy: int) -> int:
    """Pack (level, cell) for the concatenated single-shift embedding."""
    return (level << 58) | ((ix + 1) << 29) | (iy + 1)


class _DenseL1:
    """Exact stand-in for an l1 sketch: sparse net counts per coordinate."""

    __slots__ = ("_counts",)

    def __init__(self):
        self._counts: dict[int, int] = {}

    def update(self, coord: int, delta: int) -> None:
        new = self._counts.get(coord, 0) + delta
        if new:
            self._counts[coord] = new
        else:
            self._counts.pop(coord, None)

    def estimate(self) -> int:
        return sum(abs(v) for v in self._counts.values())

    def copy(self) -> "_DenseL1":
        out = type(self)()
        out._counts = dict(self._counts)
        return out

    def __eq__(self, other) -> bool:
        return type(self) is type(other) and self._counts == other._counts

    def to_bytes(self) -> bytes:
        payload = struct.pack("<2sBI", b"DN", 1, len(self._counts))
        for coord in sorted(self._counts):
            payload += struct.pack("<Qq", coord, self._counts[coord])
        return struct.pack("<I", len(payload)) + payload

    @classmethod
    def from_bytes(cls, blob: bytes) -> "_DenseL1":
        (length,) = struct.unpack_from("<I", blob)
        payload = blob[4 : 4 + length]
        magic, version, entries = struct.unpack_from("<2sBI", payload)
        if magic != b"DN" or version != 1:
            raise ConfigError("not a dense counter blob")
        out = cls()
        offset = struct.calcsize("<2sBI")
        for _ in range(entries):
            coord, net = struct.unpack_from("<Qq", payload, offset)
            offset += 16
            out.update(coord, net)
        return out


class _DenseL0(_DenseL1):
    """Exact distinct counter over packed coordinates."""

    __slots__ = ()

    def estimate(self) -> int:
        return len(self._counts)


@dataclass
class LevelEstimate:
    level: int
    grid_index: int
    c_hat: float


@dataclass
class EstimateReport:
    """Estimates produced at end of stream; `combined` is min(multigrid, baseline)."""

    multigrid: float | None = None
    baseline: float | None = None
    combined: float | None = None
    k_hat: float | None = None
    n: int = 0
    levels: list[LevelEstimate] = field(default_factory=list)

    def as_dict(self) -> dict:
        return {
            "multigrid": self.multigrid,
            "baseline": self.baseline,
            "combined": self.combined,
            "k_hat": self.k_hat,
            "n": self.n,
            "levels": [
                {"level": l.level, "grid_index": l.grid_index, "c_hat": l.c_hat}
                for l in self.levels
            ],
        }


_CHECKPOINT_MAGIC = b"GEMD"
_KINDS = {"multigrid": 1, "nested": 2, "combined": 3}


def _config_hash(config: dict) -> str:
    return hashlib.sha256(json.dumps(config, sort_keys=True).encode()).hexdigest()


def _frame(manifest: dict, blobs: list[bytes]) -> bytes:
    head = json.dumps(manifest, sort_keys=True).encode()
    out = _CHECKPOINT_MAGIC + struct.pack("<BI", 1, len(head)) + head
    for blob in blobs:
        out += struct.pack("<I", len(blob)) + blob
    return out


def _unframe(data: bytes) -> tuple[dict, list[bytes]]:
    if data[:4] != _CHECKPOINT_MAGIC:
        raise ConfigError("not a gridemd checkpoint")
    version, head_len = struct.unpack_from("<BI", data, 4)
    if version != 1:
        raise ConfigError(f"unsupported checkpoint version {version}")
    offset = 9
    manifest = json.loads(data[offset : offset + head_len])
    offset += head_len
    blobs = []
    while offset < len(data):
        (blob_len,) = struct.unpack_from("<I", data, offset)
        blobs.append(data[offset + 4 : offset + 4 + blob_len])
        offset += 4 + blob_len
    return manifest, blobs


class MultigridEstimator:
    """Min-over-shifted-grids estimator for turnstile point streams."""

    kind = "multigrid"

    def __init__(
        self,
        delta: int,
        *,
        epsilon: float = 0.1,
        delta_prob: float = 0.05,
        seed: int = 0,
        grids_per_level: int | None = None,
        backend: str = "sketch",
    ):
        self.max_level = validate_delta(delta)
        if backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        self.delta = delta
        self.epsilon = epsilon
        self.delta_prob = delta_prob
        self.seed = seed
        self.grids_per_level = grids_per_level or max(1, 2 * self.max_level)
        self.backend = backend
        self.n_s = 0
        self.n_t = 0

        rng = random.Random(derive_key(seed, "grids"))
        self.grids: list[list[GridSpec]] = [
            [random_grid(i, rng, self.max_level) for _ in range(self.grids_per_level)]
            for i in range(self.max_level + 1)
        ]
        # Per-grid failure budget: split the confidence target across both
        # estimate kinds and all grids.
        per_sketch_delta = delta_prob / (2 * max(1, self.max_level) ** 2)
        if backend == "sketch":
            self._l1 = [
                [
                    L1Sketch(epsilon, per_sketch_delta, key=derive_key(seed, "l1", i, j))
                    for j in range(self.grids_per_level)
                ]
                for i in range(self.max_level + 1)
            ]
            self._l0_s = L0Sketch(epsilon, delta_prob / 4, key=derive_key(seed, "l0", 0))
            self._l0_t = L0Sketch(epsilon, delta_prob / 4, key=derive_key(seed, "l0", 1))
        else:
            self._l1 = [
                [_DenseL1() for _ in range(self.grids_per_level)]
                for _ in range(self.max_level + 1)
            ]
            self._l0_s = _DenseL0()
            self._l0_t = _DenseL0()

    def config(self) -> dict:
        return {
            "delta": self.delta,
            "epsilon": self.epsilon,
            "delta_prob": self.delta_prob,
            "seed": self.seed,
            "grids_per_level": self.grids_per_level,
            "backend": self.backend,
        }

    def update(self, u: StreamUpdate) -> None:
        validate_update(u, self.delta)
        direction = u.sign if u.side == "S" else -u.sign
        amount = direction * u.count
        point = u.point
        for level_grids, level_sketches in zip(self.grids, self._l1):
            for grid, sketch in zip(level_grids, level_sketches):
                cell = cell_of(point, grid)
                sketch.update(pack_cell(cell.ix, cell.iy), amount)
        unit = pack_cell(point[0], point[1])
        if u.side == "S":
            self._l0_s.update(unit, u.sign * u.count)
            self.n_s += u.sign * u.count
        else:
            self._l0_t.update(unit, u.sign * u.count)
            self.n_t += u.sign * u.count

    def estimate(self) -> EstimateReport:
        if self.n_s == 0 and self.n_t == 0:
            raise EmptyStream("no points in the stream")
        if self.n_s != self.n_t:
            raise SizeMismatch(f"|S| = {self.n_s} but |T| = {self.n_t}")
        k_hat = max(1, min(self._l0_s.estimate(), self._l0_t.estimate()))
        levels = []
        total = 0.0
        for i, level_sketches in enumerate(self._l1):
            values = [sk.estimate() for sk in level_sketches]
            j = min(range(len(values)), key=values.__getitem__)
            levels.append(LevelEstimate(i, j, values[j]))
            total += (1 << i) * values[j]
        z = k_hat * k_hat / 2 * total
        return EstimateReport(multigrid=z, k_hat=k_hat, n=self.n_s, levels=levels)

    def memory_report(self) -> dict:
        count = (self.max_level + 1) * self.grids_per_level
        if self.backend == "sketch":
            rows = self._l1[0][0].rows
            return {
                "l1_sketch_count": count,
                "rows_per_sketch": rows,
                "accumulators_total": count * rows,
                "accumulator_bytes": count * rows * 8,
                "l0_tracked": len(self._l0_s._net) + len(self._l0_t._net),
            }
        return {
            "l1_sketch_count": count,
            "dense_coordinates": sum(
                len(sk._counts) for row in self._l1 for sk in row
            ),
        }

    def checkpoint(self) -> bytes:
        config = self.config()
        manifest = {
            "kind": self.kind,
            "config": config,
            "config_sha256": _config_hash(config),
            "n_s": self.n_s,
            "n_t": self.n_t,
        }
        blobs = [sk.to_bytes() for row in self._l1 for sk in row]
        blobs.append(self._l0_s.to_bytes())
        blobs.append(self._l0_t.to_bytes())
        return _frame(manifest, blobs)

    @classmethod
    def restore(cls, data: bytes) -> "MultigridEstimator":
        manifest, blobs = _unframe(data)
        if manifest["kind"] != cls.kind:
            raise ConfigError(f"checkpoint holds a {manifest['kind']} estimator")
        est = cls(**manifest["config"])
        est.n_s = manifest["n_s"]
        est.n_t = manifest["n_t"]
        flat = [(i, j) for i in range(est.max_level + 1) for j in range(est.grids_per_level)]
        if len(blobs) != len(flat) + 2:
            raise ConfigError("checkpoint blob count does not match configuration")
        l1_cls = L1Sketch if est.backend == "sketch" else _DenseL1
        l0_cls = L0Sketch if est.backend == "sketch" else _DenseL0
        for (i, j), blob in zip(flat, blobs):
            est._l1[i][j] = l1_cls.from_bytes(blob)
        est._l0_s = l0_cls.from_bytes(blobs[-2])
        est._l0_t = l0_cls.from_bytes(blobs[-1])
        return est

    def clone(self) -> "MultigridEstimator":
        return type(self).restore(self.checkpoint())

    def state_equal(self, other: "MultigridEstimator") -> bool:
        return self.checkpoint() == other.checkpoint()


class NestedGridEstimator:
    """Single-shift nested-grid l1 embedding estimator."""

    kind = "nested"

    def __init__(
        self,
        delta: int,
        *,
        epsilon: float = 0.1,
        delta_prob: float = 0.05,
        seed: int = 0,
        backend: str = "sketch",
    ):
        self.max_level = validate_delta(delta)
        if backend not in BACKENDS:
            raise ConfigError(f"backend must be one of {BACKENDS}")
        self.delta = delta
        self.epsilon = epsilon
        self.delta_prob = delta_prob
        self.seed = seed
        self.backend = backend
        self.n_s = 0
        self.n_t = 0

        # One shift drawn at the top level and reduced per level keeps the
        # grids nested: every level-i line is also a level-(i-1) line.
        rng = random.Random(derive_key(seed, "nested-shift"))
        mx, my = rng.randrange(delta), rng.randrange(delta)
        self.grids = [
            GridSpec(i, ((mx % (1 << i)) + 0.5, (my % (1 << i)) + 0.5))
            for i in range(self.max_level + 1)
        ]
        if backend == "sketch":
            self._sketch = L1Sketch(epsilon, delta_prob, key=derive_key(seed, "embed"))
        else:
            self._sketch = _DenseL1()

    def config(self) -> dict:
        return {
            "delta": self.delta,
            "epsilon": self.epsilon,
            "delta_prob": self.delta_prob,
            "seed": self.seed,
            "backend": self.backend,
        }

    def update(self, u: StreamUpdate) -> None:
        validate_update(u, self.delta)
        direction = u.sign if u.side == "S" else -u.sign
        for i, grid in enumerate(self.grids):
            cell = cell_of(u.point, grid)
            self._sketch.update(
                pack_level_cell(i, cell.ix, cell.iy), direction * u.count * (1 << i)
            )
        if u.side == "S":
            self.n_s += u.sign * u.count
        else:
            self.n_t += u.sign * u.count

    def estimate(self) -> float:
        if self.n_s == 0 and self.n_t == 0:
            raise EmptyStream("no points in the stream")
        if self.n_s != self.n_t:
            raise SizeMismatch(f"|S| = {self.n_s} but |T| = {self.n_t}")
        return float(self._sketch.estimate())

    def memory_report(self) -> dict:
        if self.backend == "sketch":
            return {
                "l1_sketch_count": 1,
                "rows_per_sketch": self._sketch.rows,
                "accumulators_total": self._sketch.rows,
                "accumulator_bytes": self._sketch.rows * 8,
            }
        return {"l1_sketch_count": 1, "dense_coordinates": len(self._sketch._counts)}

    def checkpoint(self) -> bytes:
        config = self.config()
        manifest = {
            "kind": self.kind,
            "config": config,
            "config_sha256": _config_hash(config),
            "n_s": self.n_s,
            "n_t": self.n_t,
        }
        return _frame(manifest, [self._sketch.to_bytes()])

    @classmethod
    def restore(cls, data: bytes) -> "NestedGridEstimator":
        manifest, blobs = _unframe(data)
        if manifest["kind"] != cls.kind:
            raise ConfigError(f"checkpoint holds a {manifest['kind']} estimator")
        est = cls(**manifest["config"])
        est.n_s = manifest["n_s"]
        est.n_t = manifest["n_t"]
        sketch_cls = L1Sketch if est.backend == "sketch" else _DenseL1
        est._sketch = sketch_cls.from_bytes(blobs[0])
        return est

    def clone(self) -> "NestedGridEstimator":
        return type(self).restore(self.checkpoint())

    def state_equal(self, other: "NestedGridEstimator") -> bool:
        return self.checkpoint() == other.checkpoint()


def combined_estimate(multigrid: MultigridEstimator, nested: NestedGridEstimator) -> float:
    """Minimum of the two estimates; both states must have seen one stream."""
    return min(multigrid.estimate().multigrid, nested.estimate())


class CombinedEstimator:
    """Feeds one stream to both estimators and reports their minimum."""

    kind = "combined"

    def __init__(
        self,
        delta: int,
        *,
        epsilon: float = 0.1,
        delta_prob: float = 0.05,
        seed: int = 0,
        grids_per_level: int | None = None,
        backend: str = "sketch",
    ):
        self.multigrid = MultigridEstimator(
            delta,
            epsilon=epsilon,
            delta_prob=delta_prob,
            seed=seed,
            grids_per_level=grids_per_level,
            backend=backend,
        )
        self.nested = NestedGridEstimator(
            delta,
            epsilon=epsilon,
            delta_prob=delta_prob,
            seed=seed,
            backend=backend,
        )

    def update(self, u: StreamUpdate) -> None:
        self.multigrid.update(u)
        self.nested.update(u)

    def estimate(self) -> EstimateReport:
        report = self.multigrid.estimate()
        report.baseline = self.nested.estimate()
        report.combined = min(report.multigrid, report.baseline)
        return report

    def memory_report(self) -> dict:
        mg = self.multigrid.memory_report()
        ng = self.nested.memory_report()
        merged = {f"multigrid_{k}": v for k, v in mg.items()}
        merged.update({f"baseline_{k}": v for k, v in ng.items()})
        return merged

    def checkpoint(self) -> bytes:
        manifest = {"kind": self.kind}
        return _frame(manifest, [self.multigrid.checkpoint(), self.nested.checkpoint()])

    @classmethod
    def restore(cls, data: bytes) -> "CombinedEstimator":
        manifest, blobs = _unframe(data)
        if manifest["kind"] != cls.kind:
            raise ConfigError(f"checkpoint holds a {manifest['kind']} estimator")
        mg = MultigridEstimator.restore(blobs[0])
        ng = NestedGridEstimator.restore(blobs[1])
        out = cls.__new__(cls)
        out.multigrid = mg
        out.nested = ng
        return out

    def clone(self) -> "CombinedEstimator":
        return type(self).restore(self.checkpoint())

    def state_equal(self, other: "CombinedEstimator") -> bool:
        return self.checkpoint() == other.checkpoint()
