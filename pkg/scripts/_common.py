"""Shared plumbing for the experiment scripts."""

import argparse
import pathlib

from phasetrack import __version__, cli


def parser(description: str) -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(description=description)
    p.add_argument("--out-dir", default="results", help="directory for CSV output")
    p.add_argument("--trials", type=int, default=15)
    p.add_argument("--duration-ms", type=float, default=2.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    return p


def write(table, out_dir: str, name: str, scenario) -> pathlib.Path:
    path = pathlib.Path(out_dir)
    path.mkdir(parents=True, exist_ok=True)
    meta = {"seed": scenario.master_seed, "version": __version__, "scenario": scenario.to_dict()}
    target = path / f"{name}.csv"
    cli.emit(table, "csv", str(target), meta)
    print(f"wrote {target}")
    return target
