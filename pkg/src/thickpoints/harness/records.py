"""JSONL persistence for experiment records.

Files are append-safe: each run writes its own header line carrying the
schema version, config hash and master seed, followed by one JSON object
per record.  Corruption is reported with the offending line number.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field

SCHEMA_VERSION = 1


@dataclass
class ResultRecord:
    kind: str
    params: dict
    estimate: float | None = None
    ci: tuple | None = None
    envelope: float | None = None
    fitted_constant: float | None = None
    seed: int | None = None
    replica: int | None = None
    timestamp: float | None = None
    extra: dict = field(default_factory=dict)

    def to_json(self):
        d = asdict(self)
        d["ci"] = list(self.ci) if self.ci is not None else None
        return json.dumps(d, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)
        if d.get("ci") is not None:
            d["ci"] = tuple(d["ci"])
        return cls(**d)


def write_records(path, records, config_hash="", master_seed=None, append=False):
    mode = "a" if append else "w"
    header = {
        "schema": SCHEMA_VERSION,
        "config_hash": config_hash,
        "master_seed": master_seed,
    }
    try:
        with open(path, mode) as fh:
            fh.write("#" + json.dumps(header, sort_keys=True) + "\n")
            for rec in records:
                fh.write(rec.to_json() + "\n")
    except OSError as exc:
        raise OSError(f"cannot write records to {path}: {exc}") from exc


def read_records(path):
    """Returns (headers, records); raises ValueError naming the bad line."""
    headers, records = [], []
    try:
        with open(path) as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    if line.startswith("#"):
                        headers.append(json.loads(line[1:]))
                    else:
                        records.append(ResultRecord.from_json(line))
                except (json.JSONDecodeError, TypeError) as exc:
                    raise ValueError(
                        f"{path}: corrupted record at line {lineno}: {exc}"
                    ) from exc
    except OSError as exc:
        raise OSError(f"cannot read records from {path}: {exc}") from exc
    return headers, records


def export_csv(path, records):
    import csv

    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["kind", "params", "estimate", "ci_lo", "ci_hi",
                         "envelope", "fitted_constant", "seed", "replica"])
        for r in records:
            lo, hi = (r.ci if r.ci is not None else (None, None))
            writer.writerow([r.kind, json.dumps(r.params, sort_keys=True),
                             r.estimate, lo, hi, r.envelope,
                             r.fitted_constant, r.seed, r.replica])
