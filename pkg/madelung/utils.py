"""Общие утилиты команд: запись таблиц, обработка ошибок и текстовые сводки."""

import csv
import json
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from pydantic import ValidationError

from structured_logging import StructuredLogger

from .errors import MadelungError
from .schemas import ErrorRecord, SweepRecord, VerifyReport

ERROR_FILE = "error.json"


def format_float(value: float) -> str:
    """Кратчайшая запись, читающаяся обратно в то же double."""
    return repr(float(value))


def _cell(value: Any) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format_float(value)
    return str(value)


def write_csv(path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> Path:
    """
    Пишет CSV: строка заголовка, одна запись на строку, UTF-8, окончания LF.

    Returns:
        Путь к записанному файлу
    """
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_cell(value) for value in row])
    return path


def write_json(path: Path, payload: Any) -> Path:
    """Пишет JSON с отсортированными ключами; float сериализуется кратчайшей точной записью."""
    path.parent.mkdir(parents=True, exist_ok=True)
    text = json.dumps(payload, sort_keys=True, indent=2, ensure_ascii=False)
    path.write_text(text + "\n", encoding="utf-8", newline="\n")
    return path


def write_table(
    out_dir: Path, stem: str, header: Sequence[str], rows: List[Sequence[Any]], output_format: str
) -> Path:
    """CSV или JSON-массив объектов с теми же именами полей."""
    if output_format == "json":
        records = [dict(zip(header, row)) for row in rows]
        return write_json(out_dir / f"{stem}.json", records)
    return write_csv(out_dir / f"{stem}.csv", header, rows)


def handle_domain_error(
    error: Exception,
    logger: Optional[StructuredLogger] = None,
    operation: str = "madelung operation",
    out_dir: Optional[Path] = None,
) -> ErrorRecord:
    """
    Преобразует исключение в машиночитаемую запись ошибки.

    Доменные ошибки сохраняют свой код и код выхода; ошибки валидации
    pydantic считаются ошибками конфигурации (код выхода 1).

    Args:
        error: Исключение, которое нужно обработать
        logger: Логгер для записи (опционально)
        operation: Описание операции для сообщения об ошибке
        out_dir: Если задан, запись сохраняется в ``<out_dir>/error.json``

    Returns:
        ErrorRecord
    """
    if isinstance(error, MadelungError):
        record = ErrorRecord(
            error_code=error.code,
            error_message=error.message,
            exit_code=error.exit_code,
            operation=operation,
            details={key: _jsonable(value) for key, value in error.context.items()},
        )
    elif isinstance(error, ValidationError):
        record = ErrorRecord(
            error_code="ConfigError",
            error_message=f"некорректные параметры: {error.error_count()} ошибок валидации",
            exit_code=1,
            operation=operation,
            details={"errors": [e["msg"] for e in error.errors()]},
        )
    else:
        record = ErrorRecord(
            error_code=type(error).__name__,
            error_message=str(error),
            exit_code=2,
            operation=operation,
        )

    if logger:
        logger.error(
            f"❌ Ошибка при {operation}: {record.error_message}",
            error_code=record.error_code,
            exit_code=record.exit_code,
        )
    if out_dir is not None:
        write_json(out_dir / ERROR_FILE, record.model_dump())
    return record


def _jsonable(value: Any) -> Any:
    if isinstance(value, (str, int, float, bool)) or value is None:
        return value
    return str(value)


def format_error_text(record: ErrorRecord) -> str:
    return f"❌ {record.operation}: {record.error_code} ({record.error_message}), код выхода {record.exit_code}"


def format_sweep_text(records: List[SweepRecord], failed: Dict[float, str]) -> str:
    """
    Форматирует результаты развёртки по T в человекочитаемый текст.

    Args:
        records: Успешные строки развёртки
        failed: T -> код ошибки для неудавшихся строк

    Returns:
        Отформатированный текст
    """
    lines = [
        "📈 **Развёртка по T**",
        "",
    ]
    for record in records:
        lines.append(
            f"  T={record.T:g}: r_m={record.r_m:.6f}, t_a={record.t_a:.6f}, "
            f"dist_s={record.dist_spatial:.3e}, dist_t={record.dist_temporal:.3e}"
        )
    for T, code in sorted(failed.items(), reverse=True):
        lines.append(f"  🔴 T={T:g}: {code}")
    return "\n".join(lines)


def format_verify_text(report: VerifyReport) -> str:
    """Форматирует отчёт проверки: одна строка на проверку."""
    status = "✅ pass" if report.status == "pass" else "🔴 fail"
    lines = [f"🔬 **Проверка тождеств**: {status}", ""]
    if report.mass_report:
        mass = report.mass_report
        lines.append(f"⚛️ m={mass.m:.12g}, omega0={mass.omega0:.12g}, Delta_t={mass.delta_t:.12g}")
    for check in report.checks:
        mark = "✅" if check.passed else "🔴"
        lines.append(f"  {mark} {check.name}: {check.value:.3e} ({check.comparison} {check.threshold:g})")
    if report.error:
        lines.append(format_error_text(report.error))
    return "\n".join(lines)
