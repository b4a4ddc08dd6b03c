"""Segmentation metrics and campaign statistics.

Confusion bookkeeping feeds per-class IoU and mIoU (classes absent from
both prediction and truth are excluded). Campaign logs aggregate to
inter-corner-case distance/time statistics; both stats report sample
standard deviations and go absent below two events.
"""

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import InputError
from .semantics import CLASS_NAMES, NUM_CLASSES, SemanticClass

REPORT_FORMAT = "aeye-eval/1"


@dataclass
class ConfusionAccumulator:
    tp: np.ndarray = field(default_factory=lambda: np.zeros(NUM_CLASSES, dtype=np.int64))
    fp: np.ndarray = field(default_factory=lambda: np.zeros(NUM_CLASSES, dtype=np.int64))
    fn: np.ndarray = field(default_factory=lambda: np.zeros(NUM_CLASSES, dtype=np.int64))

    def merge(self, other):
        out = ConfusionAccumulator(self.tp + other.tp, self.fp + other.fp,
                                   self.fn + other.fn)
        return out


def accumulate(conf: ConfusionAccumulator, predicted, truth) -> ConfusionAccumulator:
    """Add one frame's per-class tp/fp/fn counts in place."""
    predicted = np.asarray(predicted)
    truth = np.asarray(truth)
    if predicted.shape != truth.shape:
        raise InputError(
            f"shape mismatch: predicted {predicted.shape} vs truth {truth.shape}"
        )
    p = predicted.ravel().astype(np.int64)
    t = truth.ravel().astype(np.int64)
    agree = p == t
    conf.tp += np.bincount(t[agree], minlength=NUM_CLASSES)
    conf.fp += np.bincount(p[~agree], minlength=NUM_CLASSES)
    conf.fn += np.bincount(t[~agree], minlength=NUM_CLASSES)
    return conf


def iou(conf: ConfusionAccumulator, cls) -> float:
    """tp/(tp+fp+fn) for one class; None when the class never appears."""
    c = int(cls)
    denom = int(conf.tp[c] + conf.fp[c] + conf.fn[c])
    if denom == 0:
        return None
    return float(conf.tp[c] / denom)


def miou(conf: ConfusionAccumulator) -> float:
    """Mean IoU over classes present in prediction or truth."""
    vals = [iou(conf, c) for c in range(NUM_CLASSES)]
    present = [v for v in vals if v is not None]
    if not present:
        raise InputError("no classes present; nothing was accumulated")
    return float(np.mean(present))


# ---------------------------------------------------------------------------
# Campaign statistics
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CampaignEvent:
    odometer_km: float
    time_min: float
    cause: str


@dataclass(frozen=True)
class CampaignLog:
    events: tuple
    distance_km: float
    time_min: float

    def validate(self):
        odos = [e.odometer_km for e in self.events]
        times = [e.time_min for e in self.events]
        if any(b < a for a, b in zip(odos, odos[1:])):
            raise InputError("event odometers must be non-decreasing")
        if any(b < a for a, b in zip(times, times[1:])):
            raise InputError("event times must be non-decreasing")
        if odos and (odos[-1] > self.distance_km + 1e-9 or times[-1] > self.time_min + 1e-9):
            raise InputError("events exceed campaign totals")
        return self


@dataclass(frozen=True)
class CampaignStats:
    distance_km: float
    time_min: float
    n_cc: int
    mean_d_cc: float = None
    std_d_cc: float = None
    mean_t_cc: float = None
    std_t_cc: float = None
    note: str = ""


def _intervals(values):
    prev = 0.0
    out = []
    for v in values:
        out.append(v - prev)
        prev = v
    return np.asarray(out)


def campaign_stats(log: CampaignLog) -> CampaignStats:
    """Inter-event distance/time statistics; first interval from start."""
    log.validate()
    n = len(log.events)
    if n < 2:
        return CampaignStats(distance_km=log.distance_km, time_min=log.time_min,
                             n_cc=n, note="fewer than 2 corner cases; interval stats absent")
    d = _intervals([e.odometer_km for e in log.events])
    t = _intervals([e.time_min for e in log.events])
    return CampaignStats(
        distance_km=log.distance_km,
        time_min=log.time_min,
        n_cc=n,
        mean_d_cc=float(np.mean(d)),
        std_d_cc=float(np.std(d, ddof=1)),
        mean_t_cc=float(np.mean(t)),
        std_t_cc=float(np.std(t, ddof=1)),
    )


def log_to_dict(log: CampaignLog) -> dict:
    return {
        "events": [
            {"odometer_km": e.odometer_km, "time_min": e.time_min, "cause": e.cause}
            for e in log.events
        ],
        "totals": {"distance_km": log.distance_km, "time_min": log.time_min},
    }


def log_from_dict(d: dict) -> CampaignLog:
    events = tuple(
        CampaignEvent(odometer_km=e["odometer_km"], time_min=e["time_min"],
                      cause=e["cause"])
        for e in d["events"]
    )
    return CampaignLog(events=events, distance_km=d["totals"]["distance_km"],
                       time_min=d["totals"]["time_min"]).validate()


# ---------------------------------------------------------------------------
# Three-way training comparison (per-seed rows; the experiment module
# aggregates across seeds)
# ---------------------------------------------------------------------------


def evaluate_model(model, dataset) -> dict:
    """Pedestrian IoU and mIoU of one model over one dataset."""
    from .perception import predict

    conf = ConfusionAccumulator()
    n = 0
    for sample in dataset.iter_samples():
        accumulate(conf, predict(model, sample.appearance), sample.label)
        n += 1
    if n == 0:
        raise InputError("test dataset is empty")
    return {
        "iou_pedestrian": iou(conf, SemanticClass.PEDESTRIAN),
        "miou": miou(conf),
        "n_frames": n,
    }


def compare_report(models: dict, tests: dict) -> dict:
    """Score every model on every test set; Table-style rows."""
    if not models or not tests:
        raise InputError("need at least one model and one test set")
    rows = []
    for model_name, model in models.items():
        for test_name, ds in tests.items():
            scores = evaluate_model(model, ds)
            rows.append({"model": model_name, "test": test_name, **scores})
    return {"report": REPORT_FORMAT, "rows": rows}


def render_report_text(report: dict) -> str:
    """Plain-text table for terminals and logs."""
    header = f"{'model':<24} {'test':<18} {'IoU_ped':>8} {'mIoU':>8} {'frames':>7}"
    lines = [header, "-" * len(header)]
    for row in report["rows"]:
        ped = "absent" if row["iou_pedestrian"] is None else f"{row['iou_pedestrian']:.4f}"
        lines.append(
            f"{row['model']:<24} {row['test']:<18} {ped:>8} "
            f"{row['miou']:>8.4f} {row['n_frames']:>7d}"
        )
    return "\n".join(lines)


def save_report(report: dict, path):
    with open(path, "w") as fh:
        json.dump(report, fh, indent=1, sort_keys=True)
    return str(path)


def stats_to_dict(stats: CampaignStats) -> dict:
    out = {
        "distance_km": stats.distance_km,
        "time_min": stats.time_min,
        "n_cc": stats.n_cc,
    }
    for name in ("mean_d_cc", "std_d_cc", "mean_t_cc", "std_t_cc"):
        v = getattr(stats, name)
        if v is not None:
            out[name] = v
    if stats.note:
        out["note"] = stats.note
    return out
