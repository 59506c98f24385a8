import csv
import io
import json
import os
import tempfile
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from .dispatch import DispatchSolution
from .network import SusceptanceBlocks
from .rocof import Disturbance, RoCoFReport, ScreeningResult
from .simulate import SimulationTrace

SIGNIFICANT_DIGITS = 9


def fmt(value: float) -> float:
    """Round to the printed precision; ``-0.0`` becomes ``0.0``."""
    return float(f"{float(value):.{SIGNIFICANT_DIGITS}g}") + 0.0


def fmt_str(value: float) -> str:
    return f"{fmt(value):.{SIGNIFICANT_DIGITS}g}"


def write_text(text: str, path: Optional[str] = None) -> None:
    r"""
    Write ``text`` to ``path`` atomically, or to stdout if ``path`` is ``None``.

    The content goes to a temporary file in the target directory, which then
    replaces ``path`` in one rename.
    """
    if path is None:
        print(text, end="")
        return
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.remove(tmp)
        raise


def to_json(doc: Dict[str, Any]) -> str:
    return json.dumps(doc, indent=2, allow_nan=False) + "\n"


def to_csv(header: Sequence[str], rows: Sequence[Sequence[Any]]) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([fmt_str(v) if isinstance(v, (float, np.floating)) else v for v in row])
    return buffer.getvalue()


def disturbance_dict(d: Disturbance) -> Dict[str, Any]:
    doc = {"bus": d.bus, "mw": fmt(d.p_dis)}
    if d.label is not None:
        doc["label"] = d.label
    return doc


def rocof_report_dict(report: RoCoFReport) -> Dict[str, Any]:
    return {
        "disturbance": disturbance_dict(report.disturbance),
        "worst_bus": report.worst_bus,
        "worst_rocof_hz_per_s": fmt(report.worst_rocof),
        "coi_rocof_hz_per_s": fmt(report.coi_rocof),
        "exceeds_coi": list(report.exceeds_coi),
        "delta_pg_mw": {bus: fmt(v) for bus, v in zip(report.gen_ids, report.impact.delta_pg_n.tolist())},
        "buses": [{**r, "rocof_hz_per_s": fmt(r["rocof_hz_per_s"])} for r in report.records()],
    }


def rocof_report_json(report: RoCoFReport) -> str:
    return to_json(rocof_report_dict(report))


def rocof_report_csv(report: RoCoFReport) -> str:
    rows = [(r["bus_id"], r["bus_kind"], r["rocof_hz_per_s"]) for r in report.records()]
    return to_csv(["bus_id", "bus_kind", "rocof_hz_per_s"], rows)


def screening_json(result: ScreeningResult) -> str:
    worst = result.worst
    return to_json(
        {
            "worst": {
                "disturbance": disturbance_dict(worst.disturbance),
                "worst_bus": worst.worst_bus,
                "worst_rocof_hz_per_s": fmt(worst.worst_rocof),
            },
            "worst_delta_pg_mw": {
                bus: fmt(v) for bus, v in zip(worst.gen_ids, result.worst_delta_pg_n.tolist())
            },
            "contingencies": [rocof_report_dict(r) for r in result.reports],
        }
    )


def screening_csv(result: ScreeningResult) -> str:
    rows = [
        (r.disturbance.name, rec["bus_id"], rec["bus_kind"], rec["rocof_hz_per_s"])
        for r in result.reports
        for rec in r.records()
    ]
    return to_csv(["disturbance", "bus_id", "bus_kind", "rocof_hz_per_s"], rows)


def dispatch_dict(solution: DispatchSolution) -> Dict[str, Any]:
    doc: Dict[str, Any] = {"status": solution.status, "model": solution.model, "rocof_max_hz_per_s": solution.rocof_max}
    if not solution.optimal:
        doc["infeasible"] = [
            {"generator": gen, "disturbance": disturbance_dict(solution.contingencies[k])}
            for gen, k in solution.infeasible_pairs
        ]
        return doc
    doc["objective"] = fmt(solution.objective)
    doc["awards"] = [
        {"bus": bus, "h_v_mws": fmt(h), "price_per_mws": fmt(p)}
        for bus, h, p in zip(solution.gen_ids, solution.h_v.tolist(), solution.prices.tolist())
    ]
    doc["audit"] = {
        "worst_bus": solution.audit.worst_bus,
        "worst_rocof_hz_per_s": fmt(solution.audit.worst_rocof),
        "worst_disturbance": disturbance_dict(solution.contingencies[solution.audit.worst_contingency]),
        "secure": solution.audit.secure,
    }
    doc["degenerate"] = solution.degenerate
    return doc


def dispatch_json(solution: DispatchSolution) -> str:
    return to_json(dispatch_dict(solution))


def dispatch_csv(solution: DispatchSolution) -> str:
    if not solution.optimal:
        rows = [(gen, solution.contingencies[k].name) for gen, k in solution.infeasible_pairs]
        return to_csv(["generator", "disturbance"], rows)
    rows = [
        (bus, float(h), float(p))
        for bus, h, p in zip(solution.gen_ids, solution.h_v.tolist(), solution.prices.tolist())
    ]
    return to_csv(["bus", "h_v_mws", "price_per_mws"], rows)


def trace_csv(trace: SimulationTrace, rocof: bool = False) -> str:
    """Frequency deviation (or RoCoF, if ``rocof``) per sample, one column per bus."""
    values_tb = trace.rocof_hz_per_s if rocof else trace.freq_hz
    rows: List[List[Any]] = [
        [float(t)] + [float(v) for v in row] for t, row in zip(trace.times.tolist(), values_tb.tolist())
    ]
    return to_csv(["t_s"] + list(trace.bus_ids), rows)


def simulation_json(trace: SimulationTrace, initial_rocof: Sequence[float], algebraic: Optional[RoCoFReport]) -> str:
    doc: Dict[str, Any] = {
        "dt_s": trace.dt,
        "horizon_s": fmt(float(trace.times[-1])),
        "initial_rocof_hz_per_s": {bus: fmt(v) for bus, v in zip(trace.bus_ids, initial_rocof)},
        "max_absorbed_mw": fmt(float(trace.absorbed_mw.max())),
    }
    if algebraic is not None:
        doc["algebraic_rocof_hz_per_s"] = {r["bus_id"]: fmt(r["rocof_hz_per_s"]) for r in algebraic.records()}
    return to_json(doc)


def companion_path(path: str, suffix: str) -> str:
    """``out/trace.csv`` -> ``out/trace_rocof.csv``."""
    stem, ext = os.path.splitext(path)
    return f"{stem}_{suffix}{ext or '.csv'}"


def blocks_csv(blocks: SusceptanceBlocks) -> str:
    """The full assembled susceptance matrix, generator rows first, labelled by bus."""
    labels = list(blocks.gen_index) + list(blocks.load_index)
    rows = [[bus] + [float(v) for v in row] for bus, row in zip(labels, blocks.full.tolist())]
    return to_csv(["bus"] + labels, rows)
