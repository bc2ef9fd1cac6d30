"""
Structured logging для решателя и командной строки.
Единый формат JSON логов; stdout остаётся за сводкой команд.
"""

import json
import logging
import os
import sys
from datetime import datetime, timezone
from enum import Enum
from pathlib import Path
from typing import Dict, Optional


class LogLevel(str, Enum):
    """Уровни логирования."""
    DEBUG = "DEBUG"
    INFO = "INFO"
    WARNING = "WARNING"
    ERROR = "ERROR"
    CRITICAL = "CRITICAL"


class StructuredLogger:
    """
    Structured logger с JSON форматом вывода.

    Пример использования:
        logger = StructuredLogger("madelung")
        logger.info("sweep finished", rows=4, failed=0)
    """

    def __init__(self, service_name: str, level: LogLevel = LogLevel.INFO):
        """
        Инициализация structured logger.

        Args:
            service_name: Имя сервиса (например, "madelung")
            level: Уровень логирования
        """
        self.service_name = service_name
        self.logger = logging.getLogger(service_name)
        self.logger.setLevel(getattr(logging, level.value))
        self.logger.propagate = False

        # Удаляем существующие handlers
        self.logger.handlers = []

        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(JSONFormatter(service_name))
        self.logger.addHandler(handler)
        self._file_handler: Optional[logging.FileHandler] = None

    def attach_file(self, path: Path) -> None:
        """Дублирует записи в файл (sidecar лог запуска); прежний файл закрывается."""
        self.detach_file()
        path.parent.mkdir(parents=True, exist_ok=True)
        handler = logging.FileHandler(path, mode="w", encoding="utf-8")
        handler.setFormatter(JSONFormatter(self.service_name))
        self.logger.addHandler(handler)
        self._file_handler = handler

    def detach_file(self) -> None:
        if self._file_handler is not None:
            self.logger.removeHandler(self._file_handler)
            self._file_handler.close()
            self._file_handler = None

    def set_level(self, level: LogLevel) -> None:
        self.logger.setLevel(getattr(logging, level.value))

    def _log(self, level: str, message: str, **kwargs):
        """Внутренний метод для логирования."""
        fields = {
            "service": self.service_name,
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            **kwargs,
        }
        getattr(self.logger, level.lower())(message, extra={"fields": fields})

    def debug(self, message: str, **kwargs):
        """Логирование уровня DEBUG."""
        self._log("DEBUG", message, **kwargs)

    def info(self, message: str, **kwargs):
        """Логирование уровня INFO."""
        self._log("INFO", message, **kwargs)

    def warning(self, message: str, **kwargs):
        """Логирование уровня WARNING."""
        self._log("WARNING", message, **kwargs)

    def error(self, message: str, **kwargs):
        """Логирование уровня ERROR."""
        self._log("ERROR", message, **kwargs)

    def critical(self, message: str, **kwargs):
        """Логирование уровня CRITICAL."""
        self._log("CRITICAL", message, **kwargs)


class JSONFormatter(logging.Formatter):
    """JSON formatter для structured logging."""

    def __init__(self, service_name: str):
        super().__init__()
        self.service_name = service_name

    def format(self, record: logging.LogRecord) -> str:
        """Форматирует запись лога в JSON."""
        fields = getattr(record, "fields", {})

        log_data = {
            "timestamp": fields.get(
                "timestamp", datetime.now(timezone.utc).isoformat().replace("+00:00", "Z")
            ),
            "level": record.levelname,
            "service": fields.get("service", self.service_name),
            "message": record.getMessage(),
        }

        for key, value in fields.items():
            if key not in ["timestamp", "service"]:
                log_data[key] = value

        if record.exc_info:
            log_data["exception"] = self.formatException(record.exc_info)

        return json.dumps(log_data, ensure_ascii=False, default=str)


_loggers: Dict[str, StructuredLogger] = {}


def level_from_env(default: LogLevel = LogLevel.INFO) -> LogLevel:
    """Уровень из MADELUNG_LOG_LEVEL; неизвестное значение даёт ``default``."""
    raw = os.getenv("MADELUNG_LOG_LEVEL", default.value).strip().upper()
    try:
        return LogLevel(raw)
    except ValueError:
        return default


def get_logger(service_name: str = "madelung", level: Optional[LogLevel] = None) -> StructuredLogger:
    """
    Получить или создать structured logger для сервиса.

    Args:
        service_name: Имя сервиса
        level: Уровень логирования; по умолчанию берётся из окружения

    Returns:
        StructuredLogger экземпляр
    """
    if service_name not in _loggers:
        _loggers[service_name] = StructuredLogger(service_name, level or level_from_env())
    elif level is not None:
        _loggers[service_name].set_level(level)
    return _loggers[service_name]
