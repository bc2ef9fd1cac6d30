"""Pydantic схемы доменных типов, входных параметров и отчётов."""

import math
from enum import Enum
from pathlib import Path
from typing import Any, Callable, Dict, List, Literal, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .errors import NonUniformGrid

# Относительный допуск проверки равномерности сетки
UNIFORM_SPACING_RTOL = 1e-6


# ============================================================================
# Перечисления
# ============================================================================

class Termination(str, Enum):
    """Причина остановки интегрирования."""

    REACHED_END = "ReachedEnd"
    BLOWUP_DETECTED = "BlowupDetected"
    STEP_UNDERFLOW = "StepUnderflow"


class Weight(str, Enum):
    """Мера интегрирования: dx или 4*pi*r^2 dr."""

    UNIT = "Unit"
    RADIAL_BALL = "RadialBall"


class StencilKind(str, Enum):
    """Вид второй производной."""

    CARTESIAN_1D = "Cartesian1D"
    RADIAL_LAPLACIAN_3D = "RadialLaplacian3D"


class LimitKind(str, Enum):
    """Тип аналитического предела T=0."""

    SPATIAL_SINC = "SpatialSinc"
    TEMPORAL_COS = "TemporalCos"


# ============================================================================
# Базовые численные типы
# ============================================================================

class PhysicalConstants(BaseModel):
    """Постоянные hbar, c и множитель Лагранжа T."""

    model_config = ConfigDict(frozen=True)

    hbar: float = Field(1.0, gt=0, description="Приведённая постоянная Планка")
    c: float = Field(1.0, gt=0, description="Скорость света")
    T: float = Field(0.0, ge=0, description="Множитель Лагранжа распределения Гиббса")


class GridFunction(BaseModel):
    """
    Сеточная функция: узлы и значения в них.

    Узлы строго возрастают, значения конечны, узлов не меньше трёх.
    Массивы копируются и замораживаются при создании.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    nodes: np.ndarray = Field(..., description="Строго возрастающие координаты")
    values: np.ndarray = Field(..., description="Значения в узлах")

    @field_validator("nodes", "values", mode="before")
    @classmethod
    def _as_frozen_array(cls, value: Any) -> np.ndarray:
        array = np.array(value, dtype=float)
        if array.ndim != 1:
            raise ValueError("ожидается одномерный массив")
        array.setflags(write=False)
        return array

    @model_validator(mode="after")
    def _check_invariants(self) -> "GridFunction":
        if self.nodes.shape != self.values.shape:
            raise ValueError(
                f"размеры узлов и значений различаются: {self.nodes.size} != {self.values.size}"
            )
        if self.nodes.size < 3:
            raise ValueError("сеточная функция должна иметь не менее 3 узлов")
        if not np.all(np.isfinite(self.nodes)) or not np.all(np.diff(self.nodes) > 0):
            raise ValueError("узлы должны быть конечными и строго возрастать")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("значения должны быть конечными во всех узлах")
        return self

    @property
    def size(self) -> int:
        return int(self.nodes.size)

    def spacing(self) -> float:
        """
        Шаг равномерной сетки.

        Raises:
            NonUniformGrid: Если шаг непостоянен
        """
        h = (self.nodes[-1] - self.nodes[0]) / (self.size - 1)
        if not np.allclose(np.diff(self.nodes), h, rtol=UNIFORM_SPACING_RTOL, atol=0.0):
            raise NonUniformGrid("шаг сетки непостоянен", size=self.size)
        return float(h)

    def with_values(self, values: np.ndarray) -> "GridFunction":
        return GridFunction(nodes=self.nodes, values=values)

    def restrict(self, lower: float, upper: float) -> "GridFunction":
        """Сужение на узлы из [lower, upper]."""
        mask = (self.nodes >= lower) & (self.nodes <= upper)
        return GridFunction(nodes=self.nodes[mask], values=self.values[mask])


class IvpProblem(BaseModel):
    """
    Задача Коши для ОДУ второго порядка, записанного системой размерности 2.

    ``blowup_component`` выбирает компоненту (0 - значение, 1 - производная),
    по модулю которой срабатывает событие расходимости ``blowup_threshold``.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    rhs: Callable[[float, np.ndarray], np.ndarray] = Field(
        ..., description="Правая часть системы (x, (y, y')) -> (y', y'')"
    )
    initial_point: float = Field(..., description="Начальная координата")
    initial_state: Tuple[float, float] = Field(..., description="(значение, производная)")
    direction: Literal[1, -1] = Field(1, description="Направление интегрирования")
    abs_tol: float = Field(1e-12, gt=0)
    rel_tol: float = Field(1e-10, gt=0)
    blowup_threshold: float = Field(1e8, gt=0, description="Порог расходимости Theta")
    blowup_component: Literal[0, 1] = 0
    method: Literal["RK45", "DOP853"] = Field(
        "RK45", description="Вложенная пара Рунге-Кутты: 4(5) или 8(5,3)"
    )
    max_step: Optional[float] = Field(None, gt=0)

    @model_validator(mode="after")
    def _threshold_above_start(self) -> "IvpProblem":
        value, derivative = self.initial_state
        floor = max(abs(value), 1.0)
        if self.blowup_component == 1:
            floor = max(floor, abs(derivative))
        if not self.blowup_threshold > floor:
            raise ValueError(
                f"порог {self.blowup_threshold} должен превышать начальный масштаб {floor}"
            )
        return self


class LogDivergence(BaseModel):
    """Модель хвоста U ~ -s*ln(x* - x) + C."""

    strength: float = Field(..., gt=0, description="Сила расходимости s")
    tail_nodes: int = Field(16, ge=8, description="Сколько последних узлов подгонять")


class IvpResult(BaseModel):
    """Траектория задачи Коши и причина остановки."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    value: GridFunction
    derivative: GridFunction
    terminated_by: Termination
    direction: Literal[1, -1] = 1
    threshold_crossing: Optional[float] = None
    blowup_estimate: Optional[float] = None
    n_steps: int = 0
    dense: Optional[Callable[..., np.ndarray]] = Field(default=None, exclude=True, repr=False)

    @model_validator(mode="after")
    def _check_blowup_estimate(self) -> "IvpResult":
        if self.terminated_by is Termination.BLOWUP_DETECTED:
            if self.blowup_estimate is None:
                raise ValueError("для BlowupDetected нужна оценка точки расходимости")
            if self.direction * (self.blowup_estimate - self.last_point) <= 0:
                raise ValueError("оценка расходимости должна лежать за последним узлом")
        return self

    @property
    def last_point(self) -> float:
        nodes = self.value.nodes
        return float(nodes[-1] if self.direction == 1 else nodes[0])

    def tail(self, count: int) -> Tuple[np.ndarray, np.ndarray]:
        """Последние ``count`` узлов и значений в порядке интегрирования."""
        nodes, values = self.value.nodes, self.value.values
        if self.direction == -1:
            nodes, values = nodes[::-1], values[::-1]
        return nodes[-count:], values[-count:]


# ============================================================================
# Профили и решения
# ============================================================================

class PotentialProfile(BaseModel):
    """Потенциал на равномерной сетке и координата его расходимости."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: GridFunction = Field(..., description="U на равномерной сетке носителя")
    trajectory: GridFunction = Field(..., description="U в адаптивных узлах интегратора")
    blowup: float = Field(..., description="Координата расходимости по лог-подгонке")
    threshold_crossing: Optional[float] = Field(None, description="Координата пересечения порога")
    terminated_by: Termination


class DensityProfile(BaseModel):
    """Нормированная плотность rho = exp(-U/T)/Z с ln Z и энтропией."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    grid: GridFunction
    log_normalization: float = Field(..., description="ln Z")
    entropy: float = Field(..., description="H = -int rho ln rho")
    weight: Weight

    @property
    def normalization(self) -> float:
        """Z; для малых T уходит в ноль, поэтому в расчётах используется ln Z."""
        return math.exp(self.log_normalization)


class SolveSettings(BaseModel):
    """Общие численные параметры решателей."""

    rel_tol: float = Field(1e-12, gt=0)
    abs_tol: float = Field(1e-14, gt=0)
    method: Literal["RK45", "DOP853"] = "DOP853"
    grid_points: int = Field(4096, ge=65, description="Узлов равномерной сетки плотности")
    rho_floor: float = Field(1e-12, gt=0, lt=1, description="Пол плотности у границы носителя")
    horizon_factor: float = Field(
        100.0, gt=1, description="Горизонт интегрирования в единицах радиуса при T=0"
    )


class SpatialSolveInput(SolveSettings):
    """Параметры пространственной задачи: U_s(0) и константы."""

    constants: PhysicalConstants
    U_s0: float = Field(..., description="Центральное значение U_s(0)")

    @model_validator(mode="after")
    def _positive_T(self) -> "SpatialSolveInput":
        if not self.constants.T > 0:
            raise ValueError("численный путь требует T > 0; T = 0 даёт аналитический предел")
        return self


class TemporalSolveInput(SolveSettings):
    """Параметры временной задачи: U_t(0) и константы."""

    constants: PhysicalConstants
    U_t0: float = Field(..., description="Центральное значение U_t(0)")

    @model_validator(mode="after")
    def _positive_T(self) -> "TemporalSolveInput":
        if not self.constants.T > 0:
            raise ValueError("численный путь требует T > 0; T = 0 даёт аналитический предел")
        return self


class _Solution(BaseModel):
    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    potential: PotentialProfile
    density: DensityProfile
    constants: PhysicalConstants
    floor_coordinate: float = Field(..., description="Последний узел сетки, где rho = rho_floor")
    rho_floor: float
    evaluate: Callable[[np.ndarray], np.ndarray] = Field(..., exclude=True, repr=False)

    def potential_at(self, x: np.ndarray) -> np.ndarray:
        """U в произвольных точках отрезка [0, floor_coordinate] по плотному выводу."""
        return self.evaluate(np.abs(np.asarray(x, dtype=float)))[0]


class SpatialSolution(_Solution):
    """Решение пространственной задачи на [0, r_last]."""

    r_m: float = Field(..., description="Радиус носителя")
    U_s0: float


class TemporalSolution(_Solution):
    """Решение временной задачи, отражённое на [-t_last, t_last]."""

    t_a: float = Field(..., description="Полуширина носителя")
    U_t0: float


class AnalyticLimitState(BaseModel):
    """Замкнутое состояние при T=0: sinc или косинус."""

    model_config = ConfigDict(frozen=True)

    kind: LimitKind
    wavenumber: float = Field(..., gt=0, description="k0 или omega0")
    boundary: float = Field(..., gt=0, description="r0 или t0")
    amplitude: float = Field(..., gt=0, description="A_s0 или A_t0")
    level: float = Field(..., description="U_s0 или U_t0")


class MassReport(BaseModel):
    """Возникающая масса и связанные с ней величины."""

    model_config = ConfigDict(frozen=True)

    U_s0: float
    U_t0: float
    U_tot: float
    m: float = Field(..., ge=0)
    k0: float = Field(..., ge=0)
    omega0: float = Field(..., gt=0)
    energy: float = Field(..., gt=0, description="calE = c*sqrt(hbar^2 k0^2 + m^2 c^2)")
    delta_t: float = Field(..., gt=0)
    t0: float = Field(..., gt=0)
    r0: Optional[float] = None
    identity_residual: float = Field(..., ge=0)

    @model_validator(mode="after")
    def _check_total(self) -> "MassReport":
        if not math.isclose(self.U_tot, self.U_s0 + self.U_t0, rel_tol=1e-12, abs_tol=1e-15):
            raise ValueError("U_tot должно равняться U_s0 + U_t0")
        if self.U_tot > 0:
            raise ValueError("масса определена только при U_tot <= 0")
        return self


class DeBroglieState(BaseModel):
    """Классические энергия и квадрат импульса."""

    model_config = ConfigDict(frozen=True)

    E: float
    p_sq: float = Field(..., ge=0)


class ProductState(BaseModel):
    """
    Произведение I_s(r) * I_t(t) на пространственно-временном носителе.

    Узлы амплитуд хранятся в локальной системе центра носителя; сдвиг
    носителя целиком содержится в ``origin`` = (c*t, x, y, z) центра.
    """

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    spatial_amplitude: GridFunction
    temporal_amplitude: GridFunction
    mass: float = Field(..., ge=0)
    constants: PhysicalConstants
    normalization: float
    origin: Tuple[float, float, float, float] = (0.0, 0.0, 0.0, 0.0)

    def time_nodes(self) -> np.ndarray:
        """Абсолютные моменты времени узлов временной сетки."""
        return self.origin[0] / self.constants.c + self.temporal_amplitude.nodes

    def center(self) -> Tuple[float, float, float]:
        return self.origin[1], self.origin[2], self.origin[3]


# ============================================================================
# Конфигурация и отчёты командной строки
# ============================================================================

class RunConfig(BaseModel):
    """Конфигурация запуска; поля совпадают с ключами TOML файла."""

    hbar: float = Field(1.0, gt=0)
    c: float = Field(1.0, gt=0)
    U_s0: float = Field(1.0, description="U_s(0) для решений и предела sinc")
    U_t0: float = Field(-1.0, description="U_t(0) для решений и предела cos")
    verify_U_t0: float = Field(-2.0, description="U_t(0) для проверки массы и Клейна-Гордона")
    T_list: List[float] = Field(default_factory=lambda: [0.2, 0.1, 0.05, 0.02])
    grid_points: int = Field(4096, ge=65)
    product_grid: Tuple[int, int] = (513, 513)
    rel_tol: float = Field(1e-12, gt=0)
    abs_tol: float = Field(1e-14, gt=0)
    roundtrip_T: float = Field(0.05, gt=0)
    flatness_T: float = Field(1e-3, gt=0)
    out_dir: Path = Path("out")
    output_format: Literal["csv", "json"] = "csv"
    threads: Optional[int] = Field(None, ge=1)

    @field_validator("T_list")
    @classmethod
    def _sorted_positive(cls, value: List[float]) -> List[float]:
        if not value:
            raise ValueError("T_list не может быть пустым")
        if any(not (T > 0 and math.isfinite(T)) for T in value):
            raise ValueError("все T должны быть конечными и положительными")
        return sorted(set(value), reverse=True)

    @field_validator("product_grid")
    @classmethod
    def _odd_product_grid(cls, value: Tuple[int, int]) -> Tuple[int, int]:
        for n in value:
            if n < 129 or n % 2 == 0:
                raise ValueError("размеры сетки произведения должны быть нечётными и >= 129")
        return value

    def constants(self, T: float = 0.0) -> PhysicalConstants:
        return PhysicalConstants(hbar=self.hbar, c=self.c, T=T)

    def settings(self) -> Dict[str, Any]:
        """Численные параметры для входов решателей."""
        return {
            "rel_tol": self.rel_tol,
            "abs_tol": self.abs_tol,
            "grid_points": self.grid_points,
        }


class SweepRecord(BaseModel):
    """Строка таблицы развёртки по T."""

    T: float = Field(..., gt=0)
    r_m: float
    t_a: float
    dist_spatial: float = Field(..., description="max-норма до плотности sinc-предела")
    dist_temporal: float = Field(..., description="max-норма до плотности cos-предела")
    ln_Z_s: float
    ln_Z_t: float
    H_s: float
    H_t: float

    @model_validator(mode="after")
    def _finite(self) -> "SweepRecord":
        for name, value in self.model_dump().items():
            if not math.isfinite(value):
                raise ValueError(f"поле {name} должно быть конечным")
        return self


class ErrorRecord(BaseModel):
    """Машиночитаемая запись ошибки."""

    error_code: str = Field(..., description="Имя ошибки")
    error_message: str
    exit_code: int
    operation: str
    details: Dict[str, Any] = Field(default_factory=dict)


class CheckResult(BaseModel):
    """Строка отчёта проверки."""

    name: str
    value: float
    threshold: float
    comparison: Literal["<", ">=", "~1", "=="]
    passed: bool


class VerifyReport(BaseModel):
    """Итоговый отчёт команды verify."""

    status: Literal["pass", "fail"]
    checks: List[CheckResult] = Field(default_factory=list)
    mass_report: Optional[MassReport] = None
    error: Optional[ErrorRecord] = None
