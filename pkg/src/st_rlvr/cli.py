"""Command-line entry point: ``st-rlvr {generate,score,train-toy,stats}``."""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
import tempfile
from pathlib import Path
from typing import Optional, Sequence

from .annotations import load_scene_dir
from .config import AppConfig, load_config
from .errors import StRlvrError
from .grpo import train_toy
from .qa_gen import QAPair, build_dataset, dataset_stats, dumps_qa, read_dataset
from .rewards import RewardBreakdown, reward_total

log = logging.getLogger("st_rlvr")


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def stats_path_for(out_path: str | os.PathLike) -> Path:
    p = Path(out_path)
    return p.with_name(p.stem + ".stats.json")


def cmd_generate(scene_dir: str, out_path: str, config: AppConfig, stats_path: Optional[str] = None) -> int:
    if not Path(scene_dir).is_dir():
        log.error("scene directory %s does not exist", scene_dir)
        return 1
    try:
        scenes = load_scene_dir(scene_dir)
        if not scenes:
            log.error("no scene files (*.json) in %s", scene_dir)
            return 1
        qas, stats = build_dataset(scenes, config.generation)
    except StRlvrError as exc:
        log.error("%s", exc)
        return 1
    write_atomic(out_path, "".join(dumps_qa(q) + "\n" for q in qas))
    write_atomic(stats_path or stats_path_for(out_path), json.dumps(stats, indent=2) + "\n")
    print(f"wrote {len(qas)} QA pairs from {len(scenes)} scenes to {out_path}")
    for task, n in stats["per_task"].items():
        print(f"  {task:20s} {n}")
    return 0


_ZERO = RewardBreakdown(0.0, 0.0, 0.0, 0.0, 0.0, "none")


def cmd_score(dataset_path: str, responses_path: str, out_path: str, config: AppConfig) -> int:
    try:
        dataset = {q.qa_id: q for q in read_dataset(dataset_path)}
    except (OSError, ValueError, KeyError) as exc:
        log.error("cannot read dataset %s: %s", dataset_path, exc)
        return 1
    try:
        lines = [ln for ln in Path(responses_path).read_text(encoding="utf-8").splitlines() if ln.strip()]
    except OSError as exc:
        log.error("cannot read responses %s: %s", responses_path, exc)
        return 1
    if not lines:
        log.error("no responses in %s", responses_path)
        return 1

    records, unknown = [], []
    for lineno, line in enumerate(lines, 1):
        item = None
        try:
            item = json.loads(line)
            qa_id, text = item["qa_id"], item["response_text"]
            if not isinstance(qa_id, str) or not isinstance(text, str):
                raise TypeError("qa_id and response_text must be strings")
        except (ValueError, KeyError, TypeError) as exc:
            log.warning("line %d malformed (%s); scored 0", lineno, exc)
            qa_id = item.get("qa_id") if isinstance(item, dict) and isinstance(item.get("qa_id"), str) else None
            records.append({"line": lineno, "qa_id": qa_id, **_ZERO.to_dict(), "error": "malformed response line"})
            continue
        qa: Optional[QAPair] = dataset.get(qa_id)
        if qa is None:
            unknown.append(qa_id)
            continue
        b = reward_total(text, qa, qa.gt_graphs, config.reward)
        records.append({"line": lineno, "qa_id": qa_id, **b.to_dict()})

    if unknown:
        log.error("unknown qa_id(s): %s", ", ".join(unknown))
        return 1
    write_atomic(out_path, "".join(json.dumps(r, separators=(",", ":")) + "\n" for r in records))
    mean = sum(r["r_total"] for r in records) / len(records)
    print(f"scored {len(records)} responses; mean r_total = {mean:.6f}")
    return 0


def cmd_train_toy(dataset_path: str, config: AppConfig, trace_out: str) -> int:
    try:
        dataset = read_dataset(dataset_path)
        trace = train_toy(dataset, config.grpo, config.reward)
    except (OSError, ValueError, KeyError, StRlvrError) as exc:
        log.error("%s", exc)
        return 1
    write_atomic(trace_out, trace.to_csv())
    if trace.iteration:
        print(f"{len(trace.iteration)} iterations; mean reward {trace.mean_reward[0]:.4f} -> "
              f"{trace.mean_reward[-1]:.4f}, final KL {trace.kl[-1]:.4f}")
    return 0


def cmd_stats(dataset_path: str) -> int:
    try:
        stats = dataset_stats(read_dataset(dataset_path))
    except (OSError, ValueError, KeyError) as exc:
        log.error("%s", exc)
        return 1
    print(json.dumps(stats, indent=2))
    return 0


def _window(text: str) -> tuple[int, int]:
    parts = text.replace(" ", "").split(",")
    if len(parts) != 2:
        raise argparse.ArgumentTypeError("expected L_MIN,L_MAX")
    return int(parts[0]), int(parts[1])


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config file with generation/reward/grpo sections")
    common.add_argument("--seed", type=int)
    common.add_argument("--frames-k", type=int, help="ground-truth frames per graph reward")
    common.add_argument("--omega", type=float, help="length bonus")
    common.add_argument("--length-window", type=_window, help="L_MIN,L_MAX in whitespace tokens")
    common.add_argument("--epsilon", type=float, help="clip radius")
    common.add_argument("--beta", type=float, help="KL coefficient")
    common.add_argument("--group-size", type=int)
    common.add_argument("--learning-rate", type=float)
    common.add_argument("--iterations", type=int)
    common.add_argument("--max-questions", type=int)
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="st-rlvr", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("generate", parents=[common], help="build a QA dataset from scene files")
    p.add_argument("scene_dir")
    p.add_argument("out")
    p.add_argument("--stats", help="stats JSON path (default: <out stem>.stats.json)")
    p = sub.add_parser("score", parents=[common], help="score model responses against a dataset")
    p.add_argument("dataset")
    p.add_argument("responses")
    p.add_argument("out")
    p = sub.add_parser("train-toy", parents=[common], help="run toy GRPO and write a CSV trace")
    p.add_argument("dataset")
    p.add_argument("trace_out")
    p = sub.add_parser("stats", parents=[common], help="print dataset statistics")
    p.add_argument("dataset")
    return parser


def config_from_args(args: argparse.Namespace) -> AppConfig:
    overrides = {
        "generation.seed": args.seed,
        "grpo.seed": args.seed,
        "generation.graph_frames": args.frames_k,
        "reward.graph_frames": args.frames_k,
        "reward.omega": args.omega,
        "reward.length_window": args.length_window,
        "grpo.epsilon": args.epsilon,
        "grpo.beta": args.beta,
        "grpo.group_size": args.group_size,
        "grpo.learning_rate": args.learning_rate,
        "grpo.iterations": args.iterations,
        "grpo.max_questions": args.max_questions,
    }
    return load_config(args.config, overrides)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = config_from_args(args)
    except StRlvrError as exc:
        log.error("invalid config: %s", exc)
        return 1
    if args.command == "generate":
        return cmd_generate(args.scene_dir, args.out, config, args.stats)
    if args.command == "score":
        return cmd_score(args.dataset, args.responses, args.out, config)
    if args.command == "train-toy":
        return cmd_train_toy(args.dataset, config, args.trace_out)
    return cmd_stats(args.dataset)


if __name__ == "__main__":
    sys.exit(main())
