"""Stage functions behind the CLI: each reads and writes files only.

`run` chains the same functions over the same artifact paths the
individual subcommands use, so a full run and a manually chained pipeline
produce byte-identical outputs. No artifact embeds wall-clock state.
"""

from __future__ import annotations

import csv
import datetime as dt
import json
import logging
from pathlib import Path

from . import __version__, attributes, ingest, metrics, motifs, refnets, stats, synth
from .config import RunConfig
from .errors import SchemaError
from .motifs import CLASS_ORDER, InstanceRecord, MotifInstance
from .network import build_network, merge_networks, read_network, write_network

logger = logging.getLogger(__name__)

_RESERVED = ("|", ";", ",")


def write_json(doc: dict, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(doc, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _ensure_dir(path: str | Path) -> Path:
    path = Path(path)
    path.mkdir(parents=True, exist_ok=True)
    return path


# -- synth --------------------------------------------------------------------


def stage_synth(world_path: str | Path, traffic_path: str | Path, out_dir: str | Path) -> dict:
    out = _ensure_dir(out_dir)
    world = synth.load_world_spec(world_path)
    traffic = synth.load_traffic_spec(traffic_path)
    catalog = synth.gen_catalog(world)
    stops = synth.gen_device_days(catalog, traffic)
    synth.write_catalog_csv(catalog, out / "pois.csv")
    synth.write_stops_csv(stops, out / "stops.csv")
    meta = {
        "n_pois": len(catalog),
        "n_stops": len(stops),
        "n_device_days": traffic.n_device_days,
        "world_seed": world.seed,
        "traffic_seed": traffic.seed,
        "rng": refnets.RNG_ALGORITHM,
    }
    write_json(meta, out / "synth_meta.json")
    return meta


# -- ingest -------------------------------------------------------------------


def stage_ingest(
    stops_path: str | Path,
    pois_path: str | Path,
    min_dwell: int,
    utc_offset: float,
    out_dir: str | Path,
) -> dict:
    out = _ensure_dir(out_dir)
    stops = ingest.parse_stops(stops_path)
    catalog = ingest.load_poi_catalog(pois_path)
    visits = ingest.filter_visits(stops, min_dwell)
    visits, dropped = ingest.filter_cataloged(visits, catalog)
    sequences = ingest.build_stay_sequences(visits, utc_offset)
    ingest.write_sequences(sequences, out / "sequences.csv")
    meta = {
        "rows_read": len(stops),
        "visits_kept": len(visits),
        "dropped_unknown_poi": dropped,
        "sequences": len(sequences),
        "min_dwell": min_dwell,
        "utc_offset": utc_offset,
    }
    write_json(meta, out / "ingest_meta.json")
    return meta


# -- network ------------------------------------------------------------------


def stage_network(sequences_path: str | Path, mode: str, out_dir: str | Path) -> Path:
    """Build one network per local date plus the merged whole-period network."""
    out = _ensure_dir(out_dir)
    daily_dir = _ensure_dir(out / "daily")
    sequences = ingest.read_sequences(sequences_path)
    if not sequences:
        raise SchemaError(f"no sequences in {sequences_path}")
    by_date: dict[dt.date, list] = {}
    for seq in sequences:
        by_date.setdefault(seq.local_date, []).append(seq)
    daily = []
    for day in sorted(by_date):
        net = build_network(by_date[day], mode=mode, label=day.isoformat())
        write_network(net, daily_dir / f"{day.isoformat()}.csv")
        daily.append(net)
    merged = merge_networks(daily)
    merged_path = out / "merged.csv"
    write_network(merged, merged_path, extra_meta={"days": len(daily)})
    return merged_path


# -- metrics ------------------------------------------------------------------


def stage_metrics(network_path: str | Path, out_dir: str | Path) -> dict:
    out = _ensure_dir(out_dir)
    net = read_network(network_path)
    summary = metrics.network_summary(net)
    write_json(summary.as_dict(), out / "summary.json")
    hist = metrics.degree_distribution(net)
    with open(out / "degree_hist.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("k,count,pdf,ccdf\n")
        for k, count, pdf, ccdf in hist.curve():
            fh.write(f"{k},{count},{pdf!r},{ccdf!r}\n")
    try:
        fit = metrics.fit_power_law(hist)
        fit_doc = {
            "exponent": fit.exponent,
            "xmin": fit.xmin,
            "ks_distance": fit.ks_distance,
        }
    except ValueError as exc:
        logger.warning("power-law fit skipped: %s", exc)
        fit_doc = None
    pmf = metrics.poisson_reference(summary.average_degree, hist.support())
    write_json(
        {
            "power_law": fit_doc,
            "poisson": {"lambda": summary.average_degree, "pmf": [[k, p] for k, p in pmf]},
        },
        out / "fit.json",
    )
    return summary.as_dict()


# -- refnet -------------------------------------------------------------------


def stage_refnet(kind: str, n: int, avg_degree: float, seed: int, out_file: str | Path) -> None:
    spec = refnets.RefNetSpec(kind=kind, n=n, target_average_degree=avg_degree, seed=seed)
    net = refnets.generate(spec)
    out_file = Path(out_file)
    _ensure_dir(out_file.parent)
    write_network(
        net,
        out_file,
        extra_meta={
            "rng": refnets.RNG_ALGORITHM,
            "seed": seed,
            "kind": kind,
            "target_average_degree": avg_degree,
        },
    )


# -- motif census -------------------------------------------------------------


def _check_id(value: str) -> str:
    if any(ch in value for ch in _RESERVED):
        raise SchemaError(f"poi_id {value!r} contains a reserved separator character")
    return value


def write_instances_csv(
    rows: list[tuple[dt.date, MotifInstance, int]], path: str | Path
) -> None:
    """Rows are (local_date, instance, device_count), one per instance-day."""
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("local_date,motif_class,nodes,edges,device_count\n")
        for day, inst, count in sorted(
            rows, key=lambda r: (r[0], r[1].motif_class.value, r[1].nodes, sorted(r[1].edges))
        ):
            nodes = "|".join(_check_id(n) for n in inst.nodes)
            edges = ";".join(f"{a}|{b}" for a, b in inst.sorted_edges())
            fh.write(f"{day.isoformat()},{inst.motif_class.value},{nodes},{edges},{count}\n")


def read_instances_csv(path: str | Path) -> list[tuple[dt.date, MotifInstance, int]]:
    rows = []
    with open(path, "r", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        expected = {"local_date", "motif_class", "nodes", "edges", "device_count"}
        if reader.fieldnames is None or expected - set(reader.fieldnames):
            raise SchemaError(f"{path}: missing instance columns")
        for row in reader:
            try:
                day = dt.date.fromisoformat(row["local_date"])
                edges = []
                for pair in row["edges"].split(";"):
                    a, b = pair.split("|")
                    edges.append((a, b))
            except (ValueError, TypeError) as exc:
                raise SchemaError(f"{path}:{reader.line_num}: bad instance row: {exc}") from None
            inst = motifs.instance_from_edges(row["nodes"].split("|"), edges)
            if inst.motif_class.value != row["motif_class"]:
                raise SchemaError(
                    f"{path}: row classifies as {inst.motif_class} but claims {row['motif_class']}"
                )
            rows.append((day, inst, int(row["device_count"])))
    return rows


def aggregate_instances(
    rows: list[tuple[dt.date, MotifInstance, int]],
) -> dict[MotifInstance, InstanceRecord]:
    agg: dict[MotifInstance, InstanceRecord] = {}
    for day, inst, count in rows:
        rec = agg.setdefault(inst, InstanceRecord())
        rec.device_count += count
        if motifs.is_weekend(day):
            rec.weekend_count += count
        else:
            rec.weekday_count += count
    return agg


def write_census_csv(census: motifs.MotifCensus, path: str | Path, min_count: int = 1) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("class,motif_count,device_count,flow_count,percentage,avg_distance_km\n")
        fh.write(
            "GLOBAL,{},{},{},,\n".format(
                census.total_motifs, _fmt(census.total_devices), _fmt(census.total_flows)
            )
        )
        for cls in CLASS_ORDER:
            row = census.classes[cls]
            if row.motif_count < min_count:
                continue
            fh.write(
                ",".join(
                    [
                        cls.value,
                        str(row.motif_count),
                        _fmt(row.device_count),
                        _fmt(row.flow_count),
                        _fmt(row.percentage),
                        _fmt(row.avg_distance_km),
                    ]
                )
                + "\n"
            )


def stage_motifs(
    out_dir: str | Path,
    mode: str,
    network_path: str | Path | None = None,
    sequences_path: str | Path | None = None,
    pois_path: str | Path | None = None,
    threads: int = 1,
    min_count: int = 1,
    weighting: str = "devices",
) -> motifs.MotifCensus:
    out = _ensure_dir(out_dir)
    catalog = ingest.load_poi_catalog(pois_path) if pois_path else None
    instance_rows: list[tuple[dt.date, MotifInstance, int]] | None = None
    if sequences_path:
        sequences = ingest.read_sequences(sequences_path)
        per_day: dict[dt.date, dict[MotifInstance, int]] = {}
        traj = motifs.TrajectoryCensus()
        for seq in sequences:
            inst = traj.add_sequence(seq)
            day_bucket = per_day.setdefault(seq.local_date, {})
            day_bucket[inst] = day_bucket.get(inst, 0) + 1
        instance_rows = [
            (day, inst, count)
            for day, bucket in per_day.items()
            for inst, count in bucket.items()
        ]
        write_instances_csv(instance_rows, out / "instances.csv")

    if mode == "trajectory":
        if instance_rows is None:
            raise SchemaError("trajectory census requires --sequences")
        census = motifs.census_percentages(traj.census())
        if catalog is not None:
            table = stats.class_avg_distance(traj.instances, catalog, weighting=weighting)
            stats.attach_distances(census, table)
    elif mode == "enumerate":
        if network_path is None:
            raise SchemaError("enumeration census requires --network")
        net = read_network(network_path)
        census = motifs.census_percentages(motifs.enumeration_census(net, threads=threads))
    else:
        raise SchemaError(f"unknown census mode {mode!r}")

    write_census_csv(census, out / "census.csv", min_count=min_count)
    doc = stats.census_document(census)
    doc["min_count"] = min_count
    write_json(doc, out / "census.json")
    return census


# -- attributed ---------------------------------------------------------------


def _iter_flows(rows: list[tuple[dt.date, MotifInstance, int]]):
    for _, inst, count in rows:
        for edge in inst.sorted_edges():
            for _ in range(count):
                yield edge


def stage_attributed(
    instances_path: str | Path,
    pois_path: str | Path,
    top_k: int,
    out_dir: str | Path,
) -> None:
    out = _ensure_dir(out_dir)
    catalog = ingest.load_poi_catalog(pois_path)
    rows = read_instances_csv(instances_path)
    if not rows:
        raise SchemaError(f"no instances in {instances_path}")
    agg = aggregate_instances(rows)
    ranked = attributes.attributed_census(agg, catalog, top_k=top_k)
    with open(out / "attributed_census.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["class", "labels", "label_names", "device_count", "share", "same_category"])
        for cls in CLASS_ORDER:
            for entry in ranked.get(cls, []):
                names = " + ".join(
                    attributes.sector_by_id(i).label for i in entry.key.labels
                )
                writer.writerow(
                    [
                        cls.value,
                        "|".join(str(i) for i in entry.key.labels),
                        names,
                        entry.device_count,
                        repr(entry.share),
                        "yes" if entry.same_category else "no",
                    ]
                )
    unresolved_total = 0
    for digits in (2, 4):
        ranked_cats, unresolved = attributes.category_frequency(
            _iter_flows(rows), catalog, digits=digits
        )
        unresolved_total = max(unresolved_total, unresolved)
        with open(out / f"category_freq_{digits}digit.csv", "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["rank", "label", "share"])
            for rank, (label, share) in enumerate(ranked_cats, start=1):
                writer.writerow([rank, label, repr(share)])
    write_json({"top_k": top_k, "unresolved_endpoints": unresolved_total}, out / "attributed_meta.json")


# -- series and report --------------------------------------------------------


def _write_series_csv(series, path: Path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("date,value,day_type\n")
        for point in series:
            fh.write(f"{point.date.isoformat()},{_fmt(point.value)},{point.day_type}\n")


def stage_series(
    census_dir: str | Path,
    pois_path: str | Path,
    out_dir: str | Path,
    config: RunConfig,
    summary_path: str | Path | None = None,
    window: int = 7,
    top_distance: int = 20,
) -> dict:
    census_dir = Path(census_dir)
    out = _ensure_dir(out_dir)
    catalog = ingest.load_poi_catalog(pois_path)
    rows = read_instances_csv(census_dir / "instances.csv")
    if not rows:
        raise SchemaError("series stage needs at least one instance row")
    census_doc = json.loads((census_dir / "census.json").read_text(encoding="utf-8"))

    weighting = config.distance_weighting
    # Per-day censuses with per-day distances feed the two series families.
    by_date: dict[dt.date, dict[MotifInstance, int]] = {}
    for day, inst, count in rows:
        by_date.setdefault(day, {}).setdefault(inst, 0)
        by_date[day][inst] += count
    day_censuses: dict[dt.date, motifs.MotifCensus] = {}
    for day, bucket in by_date.items():
        agg: dict[MotifInstance, InstanceRecord] = {}
        for inst, count in bucket.items():
            rec = agg.setdefault(inst, InstanceRecord())
            rec.device_count += count
            if motifs.is_weekend(day):
                rec.weekend_count += count
            else:
                rec.weekday_count += count
        # per-walk step counts are not recoverable from unique-edge
        # instances, so the per-day flow total stays at zero; the series
        # only consume per-class counts and distances
        traj = motifs.TrajectoryCensus(
            instances=agg, total_device_days=sum(bucket.values()), total_flows=0
        )
        census = traj.census()
        stats.attach_distances(
            census, stats.class_avg_distance(agg, catalog, weighting=weighting)
        )
        day_censuses[day] = census

    series_files: list[str] = []
    if len(day_censuses) >= 2:
        counts, dists = stats.daily_census_series(day_censuses)
        for cls in CLASS_ORDER:
            count_series = counts[cls]
            name = f"counts_{cls.value}.csv"
            _write_series_csv(count_series, out / name)
            series_files.append(name)
            if len(count_series) >= 2:
                name = f"pctchange_{cls.value}.csv"
                _write_series_csv(stats.pct_change_series(count_series), out / name)
                series_files.append(name)
            if len(count_series) >= window:
                name = f"movavg_{cls.value}.csv"
                _write_series_csv(stats.moving_average(count_series, window), out / name)
                series_files.append(name)
            if dists[cls]:
                name = f"distances_{cls.value}.csv"
                _write_series_csv(dists[cls], out / name)
                series_files.append(name)
    else:
        logger.warning("fewer than 2 days of instances; daily series skipped")

    # Whole-period distance tables.
    agg_all = aggregate_instances(rows)
    table = stats.class_avg_distance(agg_all, catalog, weighting=weighting)
    with open(out / "distance_table.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("class,split,km\n")
        for cls in CLASS_ORDER:
            split = table.get(cls)
            if split is None:
                continue
            for split_name, km in (
                ("total", split.total_km),
                ("weekday", split.weekday_km),
                ("weekend", split.weekend_km),
            ):
                fh.write(f"{cls.value},{split_name},{_fmt(km)}\n")
    attr_table = stats.class_avg_distance(
        agg_all,
        catalog,
        weighting=weighting,
        key_fn=lambda inst: attributes.canonical_key(inst, catalog),
    )
    top_rows = sorted(
        attr_table.items(),
        key=lambda kv: (-(kv[1].total_km or 0.0), kv[0].motif_class.value, kv[0].labels),
    )[:top_distance]
    with open(out / "attributed_distance.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("class,labels,total_km,weekday_km,weekend_km\n")
        for key, split in top_rows:
            labels = "|".join(str(i) for i in key.labels)
            fh.write(
                f"{key.motif_class.value},{labels},{_fmt(split.total_km)},"
                f"{_fmt(split.weekday_km)},{_fmt(split.weekend_km)}\n"
            )

    if summary_path is None:
        summary_path = Path(out_dir).parent / "metrics" / "summary.json"
    summary_path = Path(summary_path)
    if not summary_path.exists():
        raise SchemaError(
            f"summary not found at {summary_path}; run the metrics stage first"
        )
    summary_doc = json.loads(summary_path.read_text(encoding="utf-8"))

    report = stats.build_report(
        summary=summary_doc,
        census=census_doc,
        distances=stats.distance_document(table, weighting),
        series_files=series_files,
        config=config.analysis_dict(),
        tool_version=__version__,
    )
    write_json(report, out / "report.json")
    return report


# -- full run -----------------------------------------------------------------


def run_pipeline(config: RunConfig) -> Path:
    """Execute ingest through series under config.out; returns the report path."""
    config.validate()
    if not (config.stops and config.pois and config.out):
        raise SchemaError("run requires stops, pois and out paths")
    out = _ensure_dir(config.out)
    manifest: list[dict] = []

    def done(stage: str, *paths: str) -> None:
        manifest.append({"stage": stage, "status": "complete", "paths": sorted(paths)})

    try:
        stage_ingest(
            config.stops, config.pois, config.min_dwell, config.utc_offset, out / "ingest"
        )
        done("ingest", "ingest/sequences.csv", "ingest/ingest_meta.json")

        merged = stage_network(out / "ingest" / "sequences.csv", config.network_mode, out / "networks")
        done("network", "networks/merged.csv", "networks/daily")

        stage_metrics(merged, out / "metrics")
        done("metrics", "metrics/summary.json", "metrics/degree_hist.csv", "metrics/fit.json")

        stage_motifs(
            out / "census",
            mode=config.census_mode,
            network_path=merged,
            sequences_path=out / "ingest" / "sequences.csv",
            pois_path=config.pois,
            threads=config.threads,
            weighting=config.distance_weighting,
        )
        done("motifs", "census/census.csv", "census/census.json", "census/instances.csv")

        stage_attributed(
            out / "census" / "instances.csv", config.pois, config.top_k, out / "attributed"
        )
        done("attributed", "attributed/attributed_census.csv")

        stage_series(
            out / "census",
            config.pois,
            out / "series",
            config,
            summary_path=out / "metrics" / "summary.json",
        )
        done("series", "series/report.json", "series/distance_table.csv")

        report_path = out / "report.json"
        report_path.write_bytes((out / "series" / "report.json").read_bytes())
        done("report", "report.json")
    except Exception:
        manifest.append({"stage": "run", "status": "failed", "paths": []})
        write_json({"artifacts": manifest, "status": "partial"}, out / "manifest.json")
        raise
    write_json({"artifacts": manifest, "status": "complete"}, out / "manifest.json")
    return out / "report.json"
