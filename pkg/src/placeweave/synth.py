"""Synthetic POI catalogs and device-day traffic with planted ground truth.

Each synthetic device-day draws a motif class and walks a fixed canonical
traversal of that class's edge set over freshly sampled POIs, so the
trajectory graph recovered downstream equals the planted class exactly.
Sub-seeds derive from (seed, device-day index), making generation order-
and parallelism-independent.
"""

from __future__ import annotations

import datetime as dt
import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .attributes import sector_by_id
from .errors import ConfigError, UnknownSectorError
from .ingest import PoiCatalog, PoiRecord, StopRecord
from .motifs import MotifClass
from .stats import EARTH_RADIUS_KM

# Canonical walk per class, as positions into the sampled POI list. Every
# walk's consecutive-pair set equals the class's edge set; classes without
# an Eulerian path revisit nodes, never consecutively.
CLASS_WALKS: dict[MotifClass, tuple[int, ...]] = {
    MotifClass.M2_1: (0, 1),
    MotifClass.M3_1: (0, 1, 2),
    MotifClass.M3_2: (0, 1, 2, 0),
    MotifClass.M4_1: (0, 1, 2, 3, 0, 2, 1, 3),
    MotifClass.M4_2: (0, 2, 1, 3, 0, 1),
    MotifClass.M4_3: (0, 1, 2, 3, 0),
    MotifClass.M4_4: (3, 0, 1, 2, 0),
    MotifClass.M4_5: (0, 1, 2, 3),
    MotifClass.M4_6: (1, 0, 2, 0, 3),
}

_STOP_SPACING_S = 900
_DAY_START_HOUR = 8


@dataclass(frozen=True)
class WorldSpec:
    n_pois: int
    bbox: tuple[float, float, float, float]  # lat_min, lat_max, lon_min, lon_max
    category_shares: dict[int, float]
    seed: int

    def validate(self) -> None:
        if self.n_pois < 1:
            raise ConfigError("n_pois must be >= 1")
        lat_min, lat_max, lon_min, lon_max = self.bbox
        if not (lat_min < lat_max and lon_min < lon_max):
            raise ConfigError(f"degenerate bbox {self.bbox}")
        if not (-90 <= lat_min and lat_max <= 90 and -180 <= lon_min and lon_max <= 180):
            raise ConfigError(f"bbox {self.bbox} outside coordinate range")
        if not self.category_shares:
            raise ConfigError("category_shares is empty")
        for cat_id, share in self.category_shares.items():
            try:
                sector_by_id(cat_id)
            except UnknownSectorError as exc:
                raise ConfigError(str(exc)) from None
            if share < 0:
                raise ConfigError(f"negative share for category {cat_id}")
        if abs(sum(self.category_shares.values()) - 1.0) > 1e-9:
            raise ConfigError("category shares must sum to 1")


@dataclass(frozen=True)
class TrafficSpec:
    n_device_days: int
    class_mix: dict[MotifClass, float]
    date_range: tuple[dt.date, dt.date]  # inclusive
    dwell_range: tuple[int, int] = (600, 3600)
    seed: int = 0
    max_sample_km: float | None = None

    def validate(self) -> None:
        if self.n_device_days < 1:
            raise ConfigError("n_device_days must be >= 1")
        if not self.class_mix:
            raise ConfigError("class_mix is empty")
        for cls, share in self.class_mix.items():
            if cls not in CLASS_WALKS:
                raise ConfigError(f"class {cls} has no planted walk")
            if share < 0:
                raise ConfigError(f"negative share for class {cls}")
        if abs(sum(self.class_mix.values()) - 1.0) > 1e-9:
            raise ConfigError("class mix must sum to 1")
        if self.date_range[0] > self.date_range[1]:
            raise ConfigError("empty date range")
        lo, hi = self.dwell_range
        if lo < 0 or hi < lo:
            raise ConfigError(f"bad dwell range {self.dwell_range}")
        if self.max_sample_km is not None and self.max_sample_km <= 0:
            raise ConfigError("max_sample_km must be positive")


@dataclass(frozen=True)
class DeviceDayPlan:
    device_id: str
    local_date: dt.date
    motif_class: MotifClass
    walk: tuple[str, ...]
    dwells: tuple[int, ...]


def gen_catalog(spec: WorldSpec) -> PoiCatalog:
    """Place POIs uniformly in the bbox with NAICS codes drawn per share."""
    spec.validate()
    rng = np.random.default_rng(spec.seed)
    lat_min, lat_max, lon_min, lon_max = spec.bbox
    cat_ids = sorted(spec.category_shares)
    probs = np.array([spec.category_shares[c] for c in cat_ids], dtype=float)
    probs = probs / probs.sum()
    width = max(6, len(str(spec.n_pois - 1)))
    records = []
    for i in range(spec.n_pois):
        lat = float(rng.uniform(lat_min, lat_max))
        lon = float(rng.uniform(lon_min, lon_max))
        cat = sector_by_id(cat_ids[int(rng.choice(len(cat_ids), p=probs))])
        prefix = sorted(cat.prefixes)[int(rng.integers(len(cat.prefixes)))]
        naics = prefix + f"{int(rng.integers(100)):02d}"
        poi_id = f"p{i:0{width}d}"
        records.append(PoiRecord(poi_id, f"place-{i:0{width}d}", lat, lon, naics))
    return PoiCatalog(records)


def _candidate_indices(
    lats: np.ndarray, lons: np.ndarray, anchor: int, radius_km: float
) -> np.ndarray:
    """Indices within radius/2 of the anchor: pairwise distances <= radius."""
    phi = np.radians(lats)
    dphi = np.radians(lats - lats[anchor]) / 2.0
    dlam = np.radians(lons - lons[anchor]) / 2.0
    a = np.sin(dphi) ** 2 + np.cos(phi[anchor]) * np.cos(phi) * np.sin(dlam) ** 2
    d = 2.0 * EARTH_RADIUS_KM * np.arcsin(np.minimum(1.0, np.sqrt(a)))
    return np.flatnonzero(d <= radius_km / 2.0)


def gen_traffic_plan(catalog: PoiCatalog, spec: TrafficSpec) -> list[DeviceDayPlan]:
    """Draw the per-device-day classes, POI sets, walks and dwell times."""
    spec.validate()
    classes = sorted(spec.class_mix, key=lambda c: c.value)
    max_size = max(c.size for c in classes)
    if len(catalog) < max_size:
        raise ConfigError(
            f"catalog has {len(catalog)} POIs but the largest planted class needs {max_size}"
        )
    probs = np.array([spec.class_mix[c] for c in classes], dtype=float)
    probs = probs / probs.sum()
    poi_ids = catalog.poi_ids()
    n_pois = len(poi_ids)
    lats = np.array([catalog[p].lat for p in poi_ids])
    lons = np.array([catalog[p].lon for p in poi_ids])
    start, end = spec.date_range
    n_days = (end - start).days + 1
    lo, hi = spec.dwell_range
    width = max(7, len(str(spec.n_device_days - 1)))
    plans = []
    for i in range(spec.n_device_days):
        rng = np.random.default_rng([spec.seed, i])
        cls = classes[int(rng.choice(len(classes), p=probs))]
        day = start + dt.timedelta(days=int(rng.integers(n_days)))
        if spec.max_sample_km is None:
            idxs = rng.choice(n_pois, size=cls.size, replace=False)
        else:
            anchor = int(rng.integers(n_pois))
            candidates = _candidate_indices(lats, lons, anchor, spec.max_sample_km)
            if candidates.size < cls.size:
                raise ConfigError(
                    f"only {candidates.size} POIs within {spec.max_sample_km / 2} km "
                    f"of {poi_ids[anchor]}; class {cls} needs {cls.size}"
                )
            idxs = candidates[rng.choice(candidates.size, size=cls.size, replace=False)]
        pois = [poi_ids[int(j)] for j in idxs]
        walk = tuple(pois[pos] for pos in CLASS_WALKS[cls])
        dwells = tuple(int(d) for d in rng.integers(lo, hi + 1, size=len(walk)))
        plans.append(DeviceDayPlan(f"d{i:0{width}d}", day, cls, walk, dwells))
    return plans


def plan_stops(plan: DeviceDayPlan) -> list[StopRecord]:
    base = int(
        dt.datetime(
            plan.local_date.year,
            plan.local_date.month,
            plan.local_date.day,
            _DAY_START_HOUR,
            tzinfo=dt.timezone.utc,
        ).timestamp()
    )
    return [
        StopRecord(plan.device_id, poi, base + k * _STOP_SPACING_S, dwell)
        for k, (poi, dwell) in enumerate(zip(plan.walk, plan.dwells))
    ]


def gen_device_days(catalog: PoiCatalog, spec: TrafficSpec) -> list[StopRecord]:
    """Stop records whose per-device-day trajectory graphs are the planted classes."""
    stops = []
    for plan in gen_traffic_plan(catalog, spec):
        stops.extend(plan_stops(plan))
    return stops


# -- spec files and output formats -------------------------------------------


def _require_keys(doc: dict, required: set[str], optional: set[str], what: str) -> None:
    unknown = set(doc) - required - optional
    if unknown:
        raise ConfigError(f"{what}: unknown key(s) {sorted(unknown)}")
    missing = required - set(doc)
    if missing:
        raise ConfigError(f"{what}: missing key(s) {sorted(missing)}")


def load_world_spec(path: str | Path) -> WorldSpec:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    _require_keys(doc, {"n_pois", "bbox", "category_shares", "seed"}, set(), "world spec")
    try:
        shares = {int(k): float(v) for k, v in doc["category_shares"].items()}
    except (ValueError, AttributeError):
        raise ConfigError("world spec: category_shares must map ids to numbers") from None
    spec = WorldSpec(
        n_pois=int(doc["n_pois"]),
        bbox=tuple(float(x) for x in doc["bbox"]),
        category_shares=shares,
        seed=int(doc["seed"]),
    )
    spec.validate()
    return spec


def load_traffic_spec(path: str | Path) -> TrafficSpec:
    doc = json.loads(Path(path).read_text(encoding="utf-8"))
    _require_keys(
        doc,
        {"n_device_days", "class_mix", "date_range", "seed"},
        {"dwell_range", "max_sample_km"},
        "traffic spec",
    )
    try:
        mix = {MotifClass(k): float(v) for k, v in doc["class_mix"].items()}
    except ValueError as exc:
        raise ConfigError(f"traffic spec: bad class name ({exc})") from None
    try:
        start, end = (dt.date.fromisoformat(d) for d in doc["date_range"])
    except ValueError as exc:
        raise ConfigError(f"traffic spec: bad date_range ({exc})") from None
    spec = TrafficSpec(
        n_device_days=int(doc["n_device_days"]),
        class_mix=mix,
        date_range=(start, end),
        dwell_range=tuple(int(x) for x in doc.get("dwell_range", (600, 3600))),
        seed=int(doc["seed"]),
        max_sample_km=(
            float(doc["max_sample_km"]) if doc.get("max_sample_km") is not None else None
        ),
    )
    spec.validate()
    return spec


def write_catalog_csv(catalog: PoiCatalog, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("poi_id,name,lat,lon,naics\n")
        for rec in sorted(catalog, key=lambda r: r.poi_id):
            fh.write(f"{rec.poi_id},{rec.name},{rec.lat!r},{rec.lon!r},{rec.naics}\n")


def write_stops_csv(stops: list[StopRecord], path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("device_id,poi_id,start_time,dwell\n")
        for s in stops:
            fh.write(f"{s.device_id},{s.poi_id},{s.start_time},{s.dwell}\n")
