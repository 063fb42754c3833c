"""Command-line entry point: ``fedgrid {gen-data,train,train-fed,eval}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import yaml

from .checkpoint import load_checkpoint, save_checkpoint
from .config import ConfigError, RunConfig, dump_config, load_config, parse_config, set_key, to_dict
from .dataset import DatasetError, save_series
from .federation import FederationSchedule, run_federated
from .metrics import JsonlWriter, read_jsonl, summarize
from .training import HouseTrainer, NonFiniteError, build_houses, evaluate, house_series, train_isolated

log = logging.getLogger("fedgrid")


def _write_json(path: Path, obj) -> None:
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")


def _save_checkpoints(out: Path, trainers: list[HouseTrainer]) -> None:
    for tr in trainers:
        state = tr.agent.state_dict()
        state["t"] = tr.t
        state["agent"] = tr.agent.name
        save_checkpoint(out / "checkpoints" / tr.house_id, state)


def run(config: RunConfig) -> dict:
    """Execute one run; returns the summary (or the list of written files for ``gen-data``)."""
    out = Path(config.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.yaml").write_text(dump_config(config))

    if config.mode == "gen-data":
        files = []
        for i in range(config.houses):
            series = house_series(config, i)
            path = out / f"{series.house_id}.csv"
            save_series(series, path)
            files.append(str(path))
        return {"files": files}

    houses = build_houses(config)
    metrics_path = out / "metrics.jsonl"
    if config.mode == "eval":
        if not config.checkpoint_dir:
            raise ConfigError("eval mode needs checkpoint_dir (--checkpoint-dir)")
        trainers = []
        for house in houses:
            if house.eval is None:
                raise ConfigError(f"{house.house_id}: no evaluation days left after the train split")
            tr = HouseTrainer(house, config, learn=False, series=house.eval)
            state = load_checkpoint(Path(config.checkpoint_dir) / "checkpoints" / house.house_id)
            if state.get("agent") != config.agent:
                raise ConfigError(f"checkpoint holds a {state.get('agent')!r} agent, config asks for {config.agent!r}")
            tr.agent.load_state_dict(state)
            trainers.append(tr)
        with JsonlWriter(metrics_path) as writer:
            evaluate(trainers, writer.write, config.workers)
    else:
        trainers = [HouseTrainer(h, config) for h in houses]
        with JsonlWriter(metrics_path) as writer:
            if config.mode == "train":
                train_isolated(trainers, config.timesteps, writer.write, config.workers,
                               config.federation.episodes_per_round)
            else:
                if config.agent == "random":
                    raise ConfigError("federated training needs a learning agent")
                schedule = FederationSchedule(config.federation.episodes_per_round, config.timesteps)
                with JsonlWriter(out / "rounds.jsonl") as round_writer:
                    transport = run_federated(trainers, schedule, writer.write, round_writer.write,
                                              workers=config.workers,
                                              reset_targets=config.federation.reset_targets_on_sync)
                _write_json(out / "transport.json", {
                    "upload_events": transport.upload_events, "upload_bytes": transport.upload_bytes,
                    "download_events": transport.download_events,
                    "download_bytes": transport.download_bytes})
            expected = config.houses * config.timesteps
            if writer.count != expected:
                raise RuntimeError(f"wrote {writer.count} metric records, expected {expected}")
        _save_checkpoints(out, trainers)

    summary = summarize(read_jsonl(metrics_path))
    summary["run_id"] = config.run_id
    summary["mode"] = config.mode
    summary["agent"] = config.agent
    _write_json(out / "summary.json", summary)
    return summary


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fedgrid", description=__doc__)
    sub = parser.add_subparsers(dest="mode", required=True)
    for mode in ("gen-data", "train", "train-fed", "eval"):
        p = sub.add_parser(mode)
        p.add_argument("--config", help="YAML run configuration")
        p.add_argument("--seed", type=int)
        p.add_argument("--houses", type=int)
        p.add_argument("--timesteps", type=int)
        p.add_argument("--agent", choices=("sac", "dqn", "random", "tabular"))
        p.add_argument("--out-dir")
        p.add_argument("--days", type=int, help="synthetic days per house")
        p.add_argument("--workers", type=int)
        p.add_argument("--run-id")
        p.add_argument("--checkpoint-dir", help="directory of a finished training run (eval)")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override any config key, e.g. sac.batch_size=64")
        p.add_argument("-v", "--verbose", action="store_true")
    return parser


def config_from_args(args: argparse.Namespace) -> RunConfig:
    data = to_dict(load_config(args.config)) if args.config else {}
    data["mode"] = args.mode
    flags = {"seed": args.seed, "houses": args.houses, "timesteps": args.timesteps,
             "agent": args.agent, "out_dir": args.out_dir, "data.days": args.days,
             "workers": args.workers, "run_id": args.run_id, "checkpoint_dir": args.checkpoint_dir}
    for key, value in flags.items():
        if value is not None:
            set_key(data, key, value)
    for item in args.set:
        key, sep, raw = item.partition("=")
        if not sep:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        set_key(data, key.strip(), yaml.safe_load(raw))
    return parse_config(data)


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        config = config_from_args(args)
        result = run(config)
    except (ConfigError, DatasetError) as exc:
        print(f"fedgrid: error: {exc}", file=sys.stderr)
        return 2
    except (OSError, NonFiniteError, RuntimeError) as exc:
        print(f"fedgrid: error: {exc}", file=sys.stderr)
        return 1
    if config.mode == "gen-data":
        for f in result["files"]:
            print(f)
    else:
        brief = {k: v for k, v in result.items() if k != "houses"}
        print(json.dumps(brief, indent=2, sort_keys=True))
    return 0


if __name__ == "__main__":
    sys.exit(main())
