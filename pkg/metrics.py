"""Prometheus метрики решателя."""

from pathlib import Path

from prometheus_client import (
    CollectorRegistry,
    Counter,
    Histogram,
    disable_created_metrics,
    write_to_textfile,
)

# Без серий _created с меткой времени создания
disable_created_metrics()

# Отдельный реестр: метрики пишутся в файл рядом с результатами запуска
REGISTRY = CollectorRegistry()

# Метрики решателей
SOLVES_TOTAL = Counter(
    "madelung_solves_total",
    "Total number of ODE solves",
    ["solver", "status"],
    registry=REGISTRY,
)

SOLVE_DURATION_SECONDS = Histogram(
    "madelung_solve_duration_seconds",
    "Duration of a single solve in seconds",
    ["solver"],
    buckets=[0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 30.0],
    registry=REGISTRY,
)

# Метрики проверок
CHECKS_TOTAL = Counter(
    "madelung_checks_total",
    "Total number of verification checks",
    ["check", "outcome"],
    registry=REGISTRY,
)

# Метрики команд
COMMAND_RUNS_TOTAL = Counter(
    "madelung_command_runs_total",
    "Total number of CLI command runs",
    ["command", "exit_code"],
    registry=REGISTRY,
)


def dump_metrics(out_dir: Path) -> Path:
    """
    Записывает текущее состояние метрик в ``<out_dir>/metrics.prom``.

    Args:
        out_dir: Каталог результатов запуска

    Returns:
        Путь к файлу метрик
    """
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / "metrics.prom"
    write_to_textfile(str(path), REGISTRY)
    return path
