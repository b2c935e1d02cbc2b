"""Result tables with provenance, CSV and JSON emission."""

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from . import __version__

HEADER = ["experiment", "eps", "statistic", "value", "se", "passed", "note", "seed", "config_hash"]


@dataclass
class Row:
    experiment: str
    eps: Optional[float]
    statistic: str
    value: float
    se: Optional[float] = None
    passed: Optional[bool] = None
    note: str = ""


@dataclass
class ResultTable:
    experiment: str
    seed: int
    config_hash: str
    rows: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> (header, list of rows)
    version: str = __version__

    def add(self, statistic, value, eps=None, se=None, passed=None, note=""):
        row = Row(self.experiment, eps, statistic, float(value),
                  None if se is None else float(se), None if passed is None else bool(passed), note)
        self.rows.append(row)
        return row

    def checks(self):
        return [r for r in self.rows if r.passed is not None]

    @property
    def passed(self):
        return all(r.passed for r in self.checks())

    def get(self, statistic, eps=None):
        for r in self.rows:
            if r.statistic == statistic and (eps is None or r.eps == eps):
                return r
        raise KeyError(statistic)

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        name = self.experiment.replace("-", "_")
        with open(out / f"{name}.csv", "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HEADER)
            for r in self.rows:
                w.writerow([r.experiment, "" if r.eps is None else r.eps, r.statistic, repr(r.value),
                            "" if r.se is None else repr(r.se), "" if r.passed is None else int(r.passed),
                            r.note, self.seed, self.config_hash])
        for tname, (header, rows) in self.tables.items():
            with open(out / f"{name}_{tname}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows(rows)
        return out


def write_manifest(out_dir, config, tables, wall_time, command):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    manifest = {
        "command": command,
        "version": __version__,
        "seed": config.seed,
        "config_hash": config.digest(),
        "config": config.to_dict(),
        "wall_time_s": wall_time,
        "experiments": {t.experiment: {"passed": t.passed, "checks": len(t.checks()),
                                       "failed": [r.statistic for r in t.checks() if not r.passed]}
                        for t in tables},
        "passed": all(t.passed for t in tables),
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2))
    return manifest
