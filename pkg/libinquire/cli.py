"""
Command line entry point.

    libinquire ingest    --corpus cases.jsonl --out runs/a
    libinquire train     --stage all --out runs/a
    libinquire simulate  --rounds 5 --out runs/a
    libinquire evaluate  --sweep 2,4,6 --out runs/a
    libinquire grad-check --nets 25
    libinquire synth     --corpus synth.jsonl --episodes 200
    libinquire serve     --out runs/a --port 5000

Every ``RunConfig`` field has a ``--field-name`` flag; flags override the
``--config`` JSON file, which overrides the defaults.
"""
import argparse
import logging
import sys
from dataclasses import fields
from . import __version__
from .config import RunConfig, STAGES, ABLATIONS
from .exceptions import InquireError
from . import pipeline

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(levelname)s - %(message)s"
# handled by -v / -q
SKIP_FLAGS = ("verbose",)


def _int_list(text):
    try:
        return tuple(int(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated integers, got {!r}".format(text))


def _float_list(text):
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError:
        raise argparse.ArgumentTypeError("expected comma-separated numbers, got {!r}".format(text))


def _flag_kwargs(f, default):
    type_name = str(f.type)
    if "Tuple" in type_name:
        return {"type": _float_list if "float" in type_name else _int_list,
                "metavar": "A,B,..."}
    if isinstance(default, bool):
        return {"action": argparse.BooleanOptionalAction}
    if f.name == "ablate":
        return {"choices": sorted(ABLATIONS)}
    if isinstance(default, int):
        return {"type": int}
    if isinstance(default, float):
        return {"type": float}
    return {"type": str}


def config_flags():
    """Parent parser with one override flag per config field."""
    parent = argparse.ArgumentParser(add_help=False)
    parent.add_argument("--config", help="JSON config file")
    group = parent.add_argument_group("config overrides")
    defaults = RunConfig()
    for f in fields(RunConfig):
        if f.name in SKIP_FLAGS:
            continue
        flag = "--" + f.name.replace("_", "-")
        group.add_argument(flag, dest="cfg_" + f.name, default=None,
                           **_flag_kwargs(f, getattr(defaults, f.name)))
    verbosity = parent.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_const", const=2, dest="verbosity",
                           help="debug logging and progress bars")
    verbosity.add_argument("-q", "--quiet", action="store_const", const=0, dest="verbosity",
                           help="warnings only")
    return parent


def build_parser():
    parent = config_flags()
    parser = argparse.ArgumentParser(prog="libinquire",
                                     description="Dual-agent inquisitive dialogue policy")
    parser.add_argument("--version", action="version", version="%(prog)s " + __version__)
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    sub.add_parser("ingest", parents=[parent], help="build the dataset bundle from a corpus")

    train = sub.add_parser("train", parents=[parent], help="train one stage or all of them")
    train.add_argument("--stage", default="all", choices=list(STAGES) + ["all"])
    train.add_argument("--resume", action="store_true",
                       help="continue from the stage's existing checkpoint")

    simulate = sub.add_parser("simulate", parents=[parent],
                              help="simulate dialogues with the trained policy")
    simulate.add_argument("--rounds", type=int, help="round cap, default max_rounds")

    evaluate = sub.add_parser("evaluate", parents=[parent],
                              help="simulate and write the metrics report")
    evaluate.add_argument("--rounds", type=int, help="round cap, default max_rounds")

    check = sub.add_parser("grad-check", parents=[parent],
                           help="finite-difference check of random networks")
    check.add_argument("--nets", type=int, default=25)
    check.add_argument("--tolerance", type=float, default=1e-4)

    synth = sub.add_parser("synth", parents=[parent], help="write a synthetic corpus")
    synth.add_argument("--episodes", type=int, default=200)
    synth.add_argument("--episode-rounds", type=_int_list, default=(3, 7), metavar="MIN,MAX",
                       help="range of rounds per synthetic episode")

    serve = sub.add_parser("serve", parents=[parent], help="serve the trained policy over HTTP")
    serve.add_argument("--host", default="127.0.0.1")
    serve.add_argument("--port", type=int, default=5000)
    return parser


def load_config(args):
    """Defaults, then the --config file, then command-line flags."""
    config = RunConfig.from_file(args.config) if args.config else RunConfig()
    overrides = {k[len("cfg_"):]: v for k, v in vars(args).items()
                 if k.startswith("cfg_") and v is not None}
    if args.verbosity is not None:
        overrides["verbose"] = args.verbosity
    return config.with_overrides(**overrides)


def setup_logging(verbose):
    level = {0: logging.WARNING, 2: logging.DEBUG}.get(verbose, logging.INFO)
    logging.basicConfig(format=LOG_FORMAT, level=level)


def run_command(args, config):
    command = args.command
    if command == "ingest":
        pipeline.cmd_ingest(config)
    elif command == "train":
        pipeline.cmd_train(config, stage=args.stage, resume=args.resume)
    elif command == "simulate":
        pipeline.cmd_simulate(config, rounds=args.rounds)
    elif command == "evaluate":
        report = pipeline.cmd_evaluate(config, rounds=args.rounds)
        agg = report["aggregate"]
        logger.info("coverage %s, mr %s, mean reward %s over %d cases",
                    agg["coverage_normalized"], agg["mr"], agg["total_reward"], agg["n_cases"])
    elif command == "grad-check":
        results = pipeline.cmd_grad_check(config, n_nets=args.nets, tolerance=args.tolerance)
        worst = max(r.max_error for r in results) if results else 0.0
        if worst >= args.tolerance:
            logger.error("gradient check failed: max relative error %.3e >= %.1e",
                         worst, args.tolerance)
            return 1
        logger.info("gradient check passed: max relative error %.3e", worst)
    elif command == "synth":
        if len(args.episode_rounds) != 2 or not 1 <= args.episode_rounds[0] <= \
                args.episode_rounds[1]:
            logger.error("--episode-rounds needs MIN,MAX with 1 <= MIN <= MAX")
            return 2
        pipeline.cmd_synth(config, n_episodes=args.episodes,
                           min_rounds=args.episode_rounds[0], max_rounds=args.episode_rounds[1])
    elif command == "serve":
        from .serving import create_app
        create_app(config).run(host=args.host, port=args.port)
    return 0


def main(argv=None):
    """Run one subcommand; returns the process exit code."""
    args = build_parser().parse_args(argv)
    try:
        config = load_config(args)
    except InquireError as e:
        setup_logging(1)
        logger.error("%s", e)
        return e.exit_code
    setup_logging(config.verbose)
    try:
        return run_command(args, config)
    except InquireError as e:
        logger.error("%s failed: %s", args.command, e)
        return e.exit_code
    except KeyboardInterrupt:
        logger.warning("interrupted")
        return 130


if __name__ == "__main__":
    sys.exit(main())
