"""``thermalink`` command line.

Exit codes: 0 success, 1 argument error, 2 no link or link lost,
3 a reproduction ran but one of its checks failed.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path
from typing import Sequence

from .channel import Layout, NoLink, link_profile
from .harness import REPRODUCTIONS, ExperimentSpec, bench_link, export_trace
from .link import LinkLost
from .modem import detect_ping, send_ping
from .node import load_presets
from .pipeline import simulate
from .sensing import NoiseModel

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_NO_LINK = 2
EXIT_CHECK_FAILED = 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: error: {message}")


def _bits(text: str) -> str:
    if not text or set(text) - {"0", "1"}:
        raise argparse.ArgumentTypeError(f"not a bit string: {text!r}")
    return text


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--layout", type=Layout.parse, default=Layout.PARALLEL,
                        metavar="{" + ",".join(m.value for m in Layout) + "}")
    common.add_argument("--distance", type=float, default=0.0, help="separation in cm")
    common.add_argument("--vm", action="store_true", help="transmitter runs inside a VM")
    common.add_argument("--noise", action="store_true", help="enable drift and jitter at the receiver")
    common.add_argument("--out", type=Path, default=None, help="write the primary output here")
    common.add_argument("--preset", default="i7-tower", choices=sorted(load_presets()))

    p = _Parser(prog="thermalink", description="Thermal covert-channel simulator and experiment runner.")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)
    r = sub.add_parser("reproduce", parents=[common], help="reproduce a figure or table")
    r.add_argument("target", choices=sorted(REPRODUCTIONS))
    b = sub.add_parser("bench", parents=[common], help="run one session and report BER and throughput")
    b.add_argument("--message", type=_bits, default=None, help="bits to send (default: 40 seeded bits)")
    sub.add_parser("ping", parents=[common], help="send a thermal ping and report the measured link")
    t = sub.add_parser("trace", parents=[common], help="export the receiver reading as CSV")
    t.add_argument("--duration", type=float, default=4800.0, help="step-response length in s")
    t.add_argument("--bits", type=_bits, default=None, help="send a ping and these bits instead of a step")
    return p


def _emit(text: str, out: Path | None) -> None:
    if out is None:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")
    else:
        out.write_text(text if text.endswith("\n") else text + "\n")


def _spec(args, **kw) -> ExperimentSpec:
    return ExperimentSpec(layout=args.layout, distance_cm=args.distance, tx_preset=args.preset,
                          rx_preset=args.preset, noise=NoiseModel() if args.noise else None,
                          vm_mode=args.vm, seed=args.seed,
                          out=None if args.out is None else str(args.out), **kw)


def _run(args) -> int:
    if args.command == "reproduce":
        fn = REPRODUCTIONS[args.target]
        res = fn(args.preset) if args.target == "fig3" else fn()
        if args.out is not None:
            args.out.write_text(res.csv)
        print(res.summary_json())
        return EXIT_OK if res.ok else EXIT_CHECK_FAILED
    if args.command == "bench":
        _emit(bench_link(_spec(args), args.message).to_json(), args.out)
        return EXIT_OK
    if args.command == "ping":
        spec = _spec(args)
        a, b = spec.endpoints()
        run = simulate(a.params, link_profile(spec.channel), send_ping(), rx_idle_C=b.idle_C,
                       noise=b.noise)
        resp = detect_ping(run.reading)
        if resp is None:
            raise NoLink("ping not detected")
        _emit(resp.to_json(), args.out)
        return EXIT_OK
    if args.command == "trace":
        _emit(export_trace(_spec(args, duration_s=args.duration), args.bits).to_csv(), args.out)
        return EXIT_OK
    raise UsageError(f"unknown command {args.command!r}")


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return _run(args)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as e:  # --help
        return int(e.code or 0)
    except (NoLink, LinkLost) as e:
        print(f"thermalink: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_NO_LINK
    except (ValueError, KeyError) as e:
        print(f"thermalink: error: {e}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
