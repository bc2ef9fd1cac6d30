"""Командная строка решателя самозахваченных волновых функций."""

# Standard library
import argparse
import os
import sys
from pathlib import Path
from typing import List, Optional

# Third-party
from dotenv import find_dotenv, load_dotenv

# Load environment variables
load_dotenv(find_dotenv(usecwd=True))

from opentelemetry import trace
from opentelemetry.sdk.trace import TracerProvider
from opentelemetry.sdk.trace.export import ConsoleSpanExporter, SimpleSpanProcessor

from madelung.errors import MadelungError
from madelung.sweep import COMMANDS, EXIT_CONFIG_ERROR, load_config, run_command
from madelung.utils import format_error_text, handle_domain_error
from structured_logging import get_logger

logger = get_logger("madelung")


# Инициализация трейсинга
def init_tracing() -> None:
    """Консольный экспорт спанов при MADELUNG_TRACE=console; иначе no-op tracer."""
    if os.getenv("MADELUNG_TRACE", "").strip().lower() != "console":
        return
    provider = TracerProvider()
    provider.add_span_processor(SimpleSpanProcessor(ConsoleSpanExporter(out=sys.stderr)))
    trace.set_tracer_provider(provider)


def _float_list(text: str) -> List[float]:
    try:
        return [float(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"ожидается список чисел через запятую: {text!r}") from e


def build_parser() -> argparse.ArgumentParser:
    """Подкоманды solve-spatial, solve-temporal, sweep, verify, limits с общими флагами."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="TOML файл с полями RunConfig")
    common.add_argument("--out", type=Path, help="Каталог результатов (по умолчанию out)")
    common.add_argument("--format", choices=["csv", "json"], help="Формат таблиц")
    common.add_argument("--t-list", type=_float_list, help="Значения T через запятую")
    common.add_argument("--us0", type=float, help="U_s(0)")
    common.add_argument("--ut0", type=float, help="U_t(0); для verify задаёт verify_U_t0")
    common.add_argument("--hbar", type=float, help="Постоянная Планка")
    common.add_argument("--c", type=float, help="Скорость света")
    common.add_argument("--grid", type=int, help="Узлов равномерной сетки плотности")

    parser = argparse.ArgumentParser(
        prog="madelung",
        description="Самозахваченные волновые функции максимальной энтропии",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common])
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    """Точка входа: разбор флагов, сборка конфигурации и запуск команды."""
    args = build_parser().parse_args(argv)
    init_tracing()

    overrides = {
        "out_dir": args.out,
        "output_format": args.format,
        "T_list": args.t_list,
        "U_s0": args.us0,
        "hbar": args.hbar,
        "c": args.c,
        "grid_points": args.grid,
    }
    overrides["verify_U_t0" if args.command == "verify" else "U_t0"] = args.ut0

    try:
        config = load_config(args.config, overrides)
    except MadelungError as e:
        record = handle_domain_error(e, logger, "load config")
        print(format_error_text(record))
        return EXIT_CONFIG_ERROR

    return run_command(args.command, config)


if __name__ == "__main__":
    sys.exit(main())
