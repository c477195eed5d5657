"""Input tables: productivity, survival, time use and an empirical child penalty.

All tables are CSV files with a header row.  Column layouts::

    productivity.csv  age,male_college,male_highschool,female_college,female_highschool
    survival.csv      age,male,female
    timeuse.csv       age,work,leisure,childcare          (hours per day)
    penalty.csv       event_time,gap

Missing interior ages are filled by linear interpolation and ages outside the
file are extrapolated flat; both are logged.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .model import AgeProfileInputs
from .params import CalibratedParams, Education, HouseholdType

log = logging.getLogger(__name__)

PRODUCTIVITY_COLUMNS = ("male_college", "male_highschool", "female_college", "female_highschool")
SURVIVAL_COLUMNS = ("male", "female")
TIMEUSE_COLUMNS = ("work", "leisure", "childcare")
PENALTY_COLUMNS = ("gap",)

FILE_NAMES = {
    "productivity": "productivity.csv",
    "survival": "survival.csv",
    "timeuse": "timeuse.csv",
    "penalty": "penalty.csv",
}


class DataError(ValueError):
    """Malformed or out-of-range input data; the message names file and line."""


@dataclass(frozen=True)
class AgeTable:
    """Columns of numbers indexed by consecutive integer keys (ages or event times)."""

    key_name: str
    keys: np.ndarray
    columns: dict[str, np.ndarray]

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def at(self, name: str, keys) -> np.ndarray:
        """Values at ``keys``, flat beyond the table's range."""
        idx = np.clip(np.asarray(keys) - self.keys[0], 0, len(self.keys) - 1)
        return self.columns[name][idx]

    def to_csv(self, path) -> None:
        names = list(self.columns)
        with open(path, "w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow([self.key_name, *names])
            for i, key in enumerate(self.keys):
                w.writerow([int(key), *(repr(float(self.columns[n][i])) for n in names)])


@dataclass(frozen=True)
class TableSet:
    productivity: AgeTable
    survival: AgeTable
    timeuse: AgeTable
    penalty: AgeTable

    def write(self, directory) -> dict[str, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        out = {}
        for name, fname in FILE_NAMES.items():
            path = directory / fname
            getattr(self, name).to_csv(path)
            out[name] = path
        return out


def _read_rows(path: Path, key_name: str, columns):
    try:
        fh = open(path, encoding="utf-8", newline="")
    except OSError as exc:
        raise DataError(f"{path}: cannot open ({exc.strerror})") from None
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise DataError(f"{path}: empty file") from None
        missing = [c for c in (key_name, *columns) if c not in header]
        if missing:
            raise DataError(f"{path}:1: missing columns {missing}")
        pos = [header.index(c) for c in (key_name, *columns)]
        rows = {}
        for row in reader:
            line = reader.line_num
            if not row or all(not c.strip() for c in row):
                continue
            if len(row) != len(header):
                raise DataError(f"{path}:{line}: expected {len(header)} fields, got {len(row)}")
            try:
                key = int(row[pos[0]])
                vals = [float(row[p]) for p in pos[1:]]
            except ValueError:
                raise DataError(f"{path}:{line}: non-numeric entry in {row}") from None
            if not all(np.isfinite(vals)):
                raise DataError(f"{path}:{line}: non-finite entry in {row}")
            if key in rows:
                raise DataError(f"{path}:{line}: duplicate {key_name} {key}")
            rows[key] = (line, vals)
    if not rows:
        raise DataError(f"{path}: no data rows")
    return rows


def _fill(rows, path, key_name, columns, lo=None, hi=None) -> AgeTable:
    present = np.array(sorted(rows))
    lo = present[0] if lo is None else lo
    hi = present[-1] if hi is None else hi
    keys = np.arange(lo, hi + 1)
    data = np.array([rows[k][1] for k in present])
    gaps = sorted(set(range(present[0], present[-1] + 1)) - set(present.tolist()))
    if gaps:
        log.warning("%s: interpolating missing %s %s", path, key_name, gaps)
    if lo < present[0] or hi > present[-1]:
        log.info("%s: extrapolating flat to %s range [%d, %d]", path, key_name, lo, hi)
    cols = {c: np.interp(keys, present, data[:, i]) for i, c in enumerate(columns)}
    return AgeTable(key_name, keys, cols)


def _check(rows, path, predicate, message):
    for key, (line, vals) in sorted(rows.items()):
        if not predicate(np.array(vals)):
            raise DataError(f"{path}:{line}: {message} (row {key}: {vals})")


def load_productivity(path, ages=None) -> AgeTable:
    path = Path(path)
    rows = _read_rows(path, "age", PRODUCTIVITY_COLUMNS)
    _check(rows, path, lambda v: np.all(v >= 0), "negative productivity")
    lo, hi = (None, None) if ages is None else ages
    return _fill(rows, path, "age", PRODUCTIVITY_COLUMNS, lo, hi)


def load_survival(path, ages=None) -> AgeTable:
    path = Path(path)
    rows = _read_rows(path, "age", SURVIVAL_COLUMNS)
    _check(rows, path, lambda v: np.all((v >= 0) & (v <= 1)), "survival outside [0, 1]")
    lo, hi = (None, None) if ages is None else ages
    return _fill(rows, path, "age", SURVIVAL_COLUMNS, lo, hi)


def load_timeuse(path) -> AgeTable:
    path = Path(path)
    rows = _read_rows(path, "age", TIMEUSE_COLUMNS)
    _check(rows, path, lambda v: np.all(v >= 0) and v.sum() <= 24 + 1e-9,
           "hours must be nonnegative and sum to at most 24")
    return _fill(rows, path, "age", TIMEUSE_COLUMNS)


def load_penalty(path) -> AgeTable:
    path = Path(path)
    rows = _read_rows(path, "event_time", PENALTY_COLUMNS)
    _check(rows, path, lambda v: np.all(v >= -1), "earnings gap below -100%")
    return _fill(rows, path, "event_time", PENALTY_COLUMNS)


def load_tables(paths: dict | None = None, data_dir=None, cal: CalibratedParams | None = None) -> TableSet:
    """Load the four tables, falling back to synthetic defaults for absent files.

    ``paths`` maps table names to files and takes precedence over files named
    as in :data:`FILE_NAMES` inside ``data_dir``.
    """
    cal = cal or CalibratedParams()
    paths = dict(paths or {})
    if data_dir is not None:
        for name, fname in FILE_NAMES.items():
            p = Path(data_dir) / fname
            if name not in paths and p.exists():
                paths[name] = p
    synth = synth_defaults(cal) if len(paths) < len(FILE_NAMES) else None
    ages = (cal.j_entry, cal.j_max)
    return TableSet(
        productivity=load_productivity(paths["productivity"], ages) if "productivity" in paths else synth.productivity,
        survival=load_survival(paths["survival"], ages) if "survival" in paths else synth.survival,
        timeuse=load_timeuse(paths["timeuse"]) if "timeuse" in paths else synth.timeuse,
        penalty=load_penalty(paths["penalty"]) if "penalty" in paths else synth.penalty,
    )


def synth_defaults(cal: CalibratedParams | None = None) -> TableSet:
    """Stylized stand-in tables used when no data files are supplied."""
    cal = cal or CalibratedParams()
    ages = np.arange(cal.j_entry, max(cal.j_max, 100) + 1)
    a = ages.astype(float)
    # quadratic humps; men peak at 50, women lower and flatter with an earlier peak
    male = np.maximum(1.0 + 0.6 * (1.0 - ((a - 50.0) / 30.0) ** 2), 0.2)
    female = np.maximum(0.8 + 0.25 * (1.0 - ((a - 45.0) / 30.0) ** 2), 0.2)
    college = 1.3
    productivity = AgeTable("age", ages, {
        "male_college": college * male, "male_highschool": male,
        "female_college": college * female, "female_highschool": female,
    })

    # Gompertz mortality, lower level for women
    hazard_m = 3e-4 * np.exp(0.1 * (a - 20.0))
    hazard_f = 2e-4 * np.exp(0.1 * (a - 20.0))
    survival = AgeTable("age", ages, {
        "male": np.clip(1.0 - hazard_m, 0.0, 1.0),
        "female": np.clip(1.0 - hazard_f, 0.0, 1.0),
    })

    tu_ages = np.arange(cal.j_entry, cal.j_retire)
    t = tu_ages.astype(float)
    childcare = 0.2 + 2.8 * np.exp(-0.5 * ((t - 32.0) / 4.0) ** 2)
    work = 8.5 - 3.0 * np.exp(-0.5 * ((t - 33.0) / 5.0) ** 2) - 0.04 * np.maximum(t - 50.0, 0.0)
    leisure = 24.0 - work - childcare
    timeuse = AgeTable("age", tu_ages, {"work": work, "leisure": leisure, "childcare": childcare})

    ev = np.arange(0, 11)
    gap = -0.6 - 0.25 * np.exp(-ev / 2.0)
    penalty = AgeTable("event_time", ev, {"gap": gap})
    return TableSet(productivity, survival, timeuse, penalty)


def couple_survival(male, female, mode: str = "geometric") -> np.ndarray:
    """Joint survival of a couple that dies together."""
    male, female = np.asarray(male, float), np.asarray(female, float)
    if mode == "geometric":
        return np.sqrt(male * female)
    if mode == "male":
        return male.copy()
    if mode == "female":
        return female.copy()
    raise ValueError(f"unknown survival mode {mode!r}")


def type_inputs(tables: TableSet, htype: HouseholdType, cal: CalibratedParams,
                survival_mode: str = "geometric") -> AgeProfileInputs:
    """Age profiles of one household type over ``j_entry..j_max``."""
    ages = cal.ages
    edu = "college" if htype.education == Education.COLLEGE else "highschool"
    k1 = tables.productivity.at(f"male_{edu}", ages)
    k2 = tables.productivity.at(f"female_{edu}", ages)
    s = couple_survival(tables.survival.at("male", ages), tables.survival.at("female", ages), survival_mode)
    return AgeProfileInputs(kappa_1=k1, kappa_2=k2, survival=s)
