"""Иерархия доменных ошибок решателя."""


class MadelungError(Exception):
    """
    Базовая доменная ошибка.

    Атрибут ``code`` совпадает с именем ошибки в отчётах и машиночитаемых
    записях, ``exit_code`` используется командной строкой.
    """

    code = "MadelungError"
    exit_code = 2

    def __init__(self, message: str, **context: object):
        super().__init__(message)
        self.message = message
        self.context = context


class ConfigError(MadelungError):
    """Некорректная конфигурация запуска."""

    code = "ConfigError"
    exit_code = 1


class NonFiniteRhs(MadelungError):
    """Правая часть ОДУ вернула нечисловые значения до пересечения порога."""

    code = "NonFiniteRhs"


class FitFailed(MadelungError):
    """Не удалось подогнать логарифмическую асимптотику к хвосту траектории."""

    code = "FitFailed"


class NonUniformGrid(MadelungError):
    """Шаблон требует равномерной сетки."""

    code = "NonUniformGrid"


class NoBlowup(MadelungError):
    """Решение не разошлось до горизонта интегрирования: режим без самозахвата."""

    code = "NoBlowup"


class DegenerateFlat(MadelungError):
    """Тождественно нулевое решение, плотность не нормируема."""

    code = "DegenerateFlat"


class WrongSign(MadelungError):
    """Центральное значение потенциала вне исследуемого семейства."""

    code = "WrongSign"


class OverflowGuard(MadelungError):
    """Показатель -U/T вышел за пределы представимых чисел."""

    code = "OverflowGuard"


class NonNegativeUtot(MadelungError):
    """U_s0 + U_t0 >= 0: масса не определена, нужно увеличить |U_t0|."""

    code = "NonNegativeUtot"


class DensityFloorReached(MadelungError):
    """Оценка запрошена в зоне, где плотность обрезана до пола."""

    code = "DensityFloorReached"


class IdentityViolation(MadelungError):
    """Нарушено алгебраическое тождество между величинами отчёта."""

    code = "IdentityViolation"
