"""Команды: решения по списку T, развёртка, проверка тождеств и пределы T=0."""

import math
import os
import time
import tomllib
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Tuple, Union

import numpy as np
from opentelemetry import trace
from pydantic import ValidationError

from structured_logging import get_logger

from .analytic_limits import cos_limit, eigen_residual, limit_distance, sinc_limit
from .errors import ConfigError, MadelungError
from .kg_verifier import (
    average_quantum_potential,
    build_product_state,
    kg_residual,
    potential_roundtrip,
    translate_state,
)
from .mass_spectrum import (
    compute_mass,
    de_broglie_state,
    delta_t_vs_mass,
    energy_momentum_check,
    time_uncertainty,
)
from .schemas import (
    CheckResult,
    ErrorRecord,
    MassReport,
    RunConfig,
    SpatialSolution,
    SpatialSolveInput,
    SweepRecord,
    TemporalSolution,
    TemporalSolveInput,
    VerifyReport,
)
from .spatial_solver import ode_defect as spatial_ode_defect
from .spatial_solver import solve_spatial
from .temporal_solver import ode_defect as temporal_ode_defect
from .temporal_solver import solve_temporal
from .utils import (
    format_error_text,
    format_float,
    format_sweep_text,
    format_verify_text,
    handle_domain_error,
    write_csv,
    write_json,
    write_table,
)

try:
    from metrics import CHECKS_TOTAL, COMMAND_RUNS_TOTAL, dump_metrics
except ImportError:
    CHECKS_TOTAL = None
    COMMAND_RUNS_TOTAL = None
    dump_metrics = None

tracer = trace.get_tracer(__name__)
logger = get_logger("madelung")

# Коды выхода
EXIT_OK = 0
EXIT_CONFIG_ERROR = 1
EXIT_DOMAIN_ERROR = 2
EXIT_PARTIAL_FAILURE = 3

# Пороги проверок
IDENTITY_THRESHOLD = 1e-10
EXACT_IDENTITY_THRESHOLD = 1e-12
NORMALIZATION_THRESHOLD = 1e-6
KG_RESIDUAL_THRESHOLD = 1e-3
KG_ORDER_TOLERANCE = 0.125
WRONG_MASS_FACTOR = 100.0
ROUNDTRIP_THRESHOLD = 1e-3
# Невязка ОДУ относительно rel_tol интегратора
ODE_DEFECT_TOLERANCE_FACTOR = 10.0
FLATNESS_THRESHOLD = 0.02
# Шаг сетки для дефекта пределов: доля носителя
LIMIT_RESIDUAL_INTERVALS = 512

SWEEP_HEADER = [
    "T",
    "status",
    "r_m",
    "t_a",
    "dist_spatial",
    "dist_temporal",
    "ln_Z_s",
    "ln_Z_t",
    "H_s",
    "H_t",
]

Solution = Union[SpatialSolution, TemporalSolution]


# ============================================================================
# Конфигурация
# ============================================================================

def load_config(path: Optional[Path] = None, overrides: Optional[Dict[str, Any]] = None) -> RunConfig:
    """
    Собирает RunConfig: значения по умолчанию, затем TOML файл, затем флаги.

    Args:
        path: Путь к TOML файлу (опционально)
        overrides: Значения из командной строки; None означает "не задано"

    Returns:
        Проверенная конфигурация

    Raises:
        ConfigError: Файл не читается или значения не проходят валидацию
    """
    data: Dict[str, Any] = {}
    if path is not None:
        try:
            with path.open("rb") as handle:
                data.update(tomllib.load(handle))
        except FileNotFoundError as e:
            raise ConfigError(f"файл конфигурации не найден: {path}") from e
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"файл конфигурации не разобран: {e}", path=str(path)) from e

    data.update({key: value for key, value in (overrides or {}).items() if value is not None})
    try:
        return RunConfig(**data)
    except ValidationError as e:
        messages = "; ".join(f"{'.'.join(map(str, err['loc']))}: {err['msg']}" for err in e.errors())
        raise ConfigError(f"некорректная конфигурация: {messages}") from e


def pool_size(config: RunConfig) -> int:
    """Размер пула: config.threads, затем MADELUNG_THREADS, затем число CPU."""
    if config.threads:
        return config.threads
    raw = os.getenv("MADELUNG_THREADS")
    if raw:
        try:
            value = int(raw)
        except ValueError as e:
            raise ConfigError(f"MADELUNG_THREADS должно быть целым, получено {raw!r}") from e
        if value < 1:
            raise ConfigError("MADELUNG_THREADS должно быть >= 1")
        return value
    return os.cpu_count() or 1


def _run_pool(config: RunConfig, task: Callable[[float], Any]) -> List[Any]:
    """Запускает task по T_list; результаты собираются в порядке T_list."""
    with ThreadPoolExecutor(max_workers=min(pool_size(config), len(config.T_list))) as pool:
        return list(pool.map(task, config.T_list))


def spatial_input(config: RunConfig, T: float) -> SpatialSolveInput:
    return SpatialSolveInput(constants=config.constants(T), U_s0=config.U_s0, **config.settings())


def temporal_input(config: RunConfig, T: float, U_t0: Optional[float] = None) -> TemporalSolveInput:
    return TemporalSolveInput(
        constants=config.constants(T),
        U_t0=config.U_t0 if U_t0 is None else U_t0,
        **config.settings(),
    )


def _capture(func: Callable[[], Any]) -> Union[Any, MadelungError]:
    """Доменная ошибка возвращается как значение, чтобы пул дошёл до конца."""
    try:
        return func()
    except MadelungError as e:
        return e


# ============================================================================
# solve-spatial / solve-temporal
# ============================================================================

def profile_rows(solution: Solution) -> List[Tuple[float, float, float, float]]:
    """(координата, U, U - min U, rho) по узлам равномерной сетки."""
    coords = solution.potential.grid.nodes
    potential = solution.potential.grid.values
    shifted = potential - np.min(potential)
    rho = solution.density.grid.values
    return [
        (float(x), float(u), float(s), float(p))
        for x, u, s, p in zip(coords, potential, shifted, rho)
    ]


def cmd_solve(config: RunConfig, which: str) -> int:
    """
    Решает пространственную или временную задачу для каждого T из T_list.

    Пишет ``<which>_profile_T<T>.<fmt>`` (координата, U, U_shifted, rho) и
    ``<which>_summary.<fmt>``.

    Returns:
        0 при успехе, 2 при доменной ошибке (с записью error.json)
    """
    if which not in ("spatial", "temporal"):
        raise ValueError(f"неизвестная задача: {which}")
    out_dir = config.out_dir
    solve = (
        (lambda T: solve_spatial(spatial_input(config, T)))
        if which == "spatial"
        else (lambda T: solve_temporal(temporal_input(config, T)))
    )
    results = _run_pool(config, lambda T: _capture(lambda: solve(T)))

    for T, result in zip(config.T_list, results):
        if isinstance(result, MadelungError):
            record = handle_domain_error(result, logger, f"solve-{which} T={T:g}", out_dir)
            print(format_error_text(record))
            return record.exit_code

    coordinate = "r" if which == "spatial" else "t"
    support = "r_m" if which == "spatial" else "t_a"
    summary = []
    for T, solution in zip(config.T_list, results):
        write_table(
            out_dir,
            f"{which}_profile_T{T:g}",
            [coordinate, "U", "U_shifted", "rho"],
            profile_rows(solution),
            config.output_format,
        )
        summary.append(
            (
                T,
                solution.potential.blowup,
                solution.potential.threshold_crossing,
                solution.floor_coordinate,
                solution.density.log_normalization,
                solution.density.entropy,
            )
        )
        print(f"✅ T={T:g}: {support}={solution.potential.blowup:.8f}")

    write_table(
        out_dir,
        f"{which}_summary",
        ["T", support, "threshold_crossing", "floor_coordinate", "ln_Z", "H"],
        summary,
        config.output_format,
    )
    logger.info(f"solve-{which} finished", count=len(summary), out_dir=str(out_dir))
    return EXIT_OK


# ============================================================================
# sweep
# ============================================================================

def sweep_entry(config: RunConfig, T: float) -> SweepRecord:
    """Одна строка развёртки: обе задачи при данном T и расстояния до пределов."""
    spatial = solve_spatial(spatial_input(config, T))
    temporal = solve_temporal(temporal_input(config, T))
    sinc = sinc_limit(config.U_s0, config.hbar)
    cosine = cos_limit(config.U_t0, config.c, config.hbar)
    return SweepRecord(
        T=T,
        r_m=spatial.r_m,
        t_a=temporal.t_a,
        dist_spatial=limit_distance(spatial.density, sinc),
        dist_temporal=limit_distance(temporal.density, cosine),
        ln_Z_s=spatial.density.log_normalization,
        ln_Z_t=temporal.density.log_normalization,
        H_s=spatial.density.entropy,
        H_t=temporal.density.entropy,
    )


def _direction(values: List[float]) -> str:
    """Направление изменения величины при убывании T (порядок T_list)."""
    steps = np.diff(values)
    if steps.size and np.all(steps > 0):
        return "increasing"
    if steps.size and np.all(steps < 0):
        return "decreasing"
    return "non-monotone"


def sweep_verdicts(records: List[SweepRecord], config: RunConfig) -> Dict[str, Any]:
    """
    Измеренная монотонность по T и точность предельного радиуса.

    Направления записываются по ходу T_list, то есть при убывании T.
    """
    limit_radius = sinc_limit(config.U_s0, config.hbar).boundary
    verdicts: Dict[str, Any] = {
        "rows": len(records),
        "limit_radius": limit_radius,
        "limit_half_width": cos_limit(config.U_t0, config.c, config.hbar).boundary,
    }
    if not records:
        return verdicts
    r_m = [record.r_m for record in records]
    verdicts.update(
        {
            "r_m_as_T_decreases": _direction(r_m),
            "r_m_decreasing_in_T": _direction(r_m) == "increasing",
            "t_a_as_T_decreases": _direction([record.t_a for record in records]),
            "dist_spatial_as_T_decreases": _direction([r.dist_spatial for r in records]),
            "dist_temporal_as_T_decreases": _direction([r.dist_temporal for r in records]),
            "smallest_T": records[-1].T,
            "r_m_limit_relative_error": abs(records[-1].r_m - limit_radius) / limit_radius,
        }
    )
    return verdicts


def plot_script(config: RunConfig, table: str) -> str:
    """gnuplot скрипт для log-log графика r_m(T) с асимптотой T=0."""
    limit_radius = sinc_limit(config.U_s0, config.hbar).boundary
    return "\n".join(
        [
            "# r_m(T) по результатам развёртки",
            "set terminal pngcairo size 800,600",
            "set output 'sweep_r_m.png'",
            "set logscale xy",
            "set xlabel 'T'",
            "set ylabel 'r_m'",
            "set key top right",
            "set datafile separator ','",
            f"r0 = {format_float(limit_radius)}",
            f"plot '{table}' using 1:3 every ::1 with linespoints title 'r_m(T)', \\",
            "     r0 with lines dashtype 2 title 'r_0 = pi hbar / sqrt(2 U_s0)'",
            "",
        ]
    )


def cmd_sweep(config: RunConfig) -> int:
    """
    Развёртка по T_list: таблица SweepRecord, gnuplot скрипт и вердикты.

    Returns:
        0 при успехе всех T, 3 если хотя бы одно T завершилось ошибкой
    """
    out_dir = config.out_dir
    results = _run_pool(config, lambda T: _capture(lambda: sweep_entry(config, T)))

    rows: List[Tuple[Any, ...]] = []
    records: List[SweepRecord] = []
    failed: Dict[float, str] = {}
    for T, result in zip(config.T_list, results):
        if isinstance(result, MadelungError):
            failed[T] = result.code
            handle_domain_error(result, logger, f"sweep T={T:g}")
            rows.append((T, result.code) + (None,) * (len(SWEEP_HEADER) - 2))
            continue
        records.append(result)
        rows.append(
            (
                result.T,
                "ok",
                result.r_m,
                result.t_a,
                result.dist_spatial,
                result.dist_temporal,
                result.ln_Z_s,
                result.ln_Z_t,
                result.H_s,
                result.H_t,
            )
        )

    table = write_table(out_dir, "sweep", SWEEP_HEADER, rows, config.output_format)
    if config.output_format == "csv":
        (out_dir / "sweep.gp").write_text(plot_script(config, table.name), encoding="utf-8")
    verdicts = sweep_verdicts(records, config)
    verdicts["failed"] = {format_float(T): code for T, code in failed.items()}
    write_json(out_dir / "sweep_verdicts.json", verdicts)

    print(format_sweep_text(records, failed))
    logger.info("sweep finished", rows=len(rows), failed=len(failed), out_dir=str(out_dir))
    return EXIT_PARTIAL_FAILURE if failed else EXIT_OK


# ============================================================================
# verify
# ============================================================================

def make_check(name: str, value: float, threshold: float, comparison: str) -> CheckResult:
    """Строка отчёта; "~1" означает |value - 1| < threshold."""
    if comparison == "<":
        passed = value < threshold
    elif comparison == ">=":
        passed = value >= threshold
    elif comparison == "~1":
        passed = abs(value - 1.0) < threshold
    else:
        passed = value == threshold
    passed = bool(passed) and math.isfinite(value)
    if CHECKS_TOTAL:
        CHECKS_TOTAL.labels(check=name, outcome="pass" if passed else "fail").inc()
    return CheckResult(
        name=name, value=value, threshold=threshold, comparison=comparison, passed=passed
    )


def identity_checks(report: MassReport, config: RunConfig) -> List[CheckResult]:
    constants = config.constants()
    dbe = de_broglie_state(report, constants)
    delta_t = time_uncertainty(report, constants)
    return [
        make_check("mass_identity_residual", report.identity_residual, IDENTITY_THRESHOLD, "<"),
        make_check(
            "energy_momentum_residual",
            energy_momentum_check(report, dbe, constants),
            IDENTITY_THRESHOLD,
            "<",
        ),
        make_check(
            "delta_t_energy_over_pi_hbar",
            delta_t * report.energy / (math.pi * config.hbar),
            EXACT_IDENTITY_THRESHOLD,
            "~1",
        ),
        make_check("delta_t_minus_2t0", abs(delta_t - 2.0 * report.t0), EXACT_IDENTITY_THRESHOLD, "<"),
    ]


def product_checks(config: RunConfig) -> List[CheckResult]:
    """Нормировка, невязка Клейна-Гордона, её порядок, контроль массы и сдвиг."""
    constants = config.constants()
    sinc = sinc_limit(config.U_s0, config.hbar)
    cosine = cos_limit(config.verify_U_t0, config.c, config.hbar)
    n_r, n_t = config.product_grid
    state = build_product_state(sinc, cosine, (n_r, n_t), constants)
    coarse = build_product_state(sinc, cosine, (n_r // 2 + 1, n_t // 2 + 1), constants)

    residual = kg_residual(state)
    shifted = translate_state(state, (constants.c * 1.0, 0.3, 0.0, 0.0))
    return [
        make_check(
            "product_normalization_error",
            abs(state.normalization - 1.0),
            NORMALIZATION_THRESHOLD,
            "<",
        ),
        make_check("kg_residual", residual, KG_RESIDUAL_THRESHOLD, "<"),
        make_check("kg_order_ratio_over_4", kg_residual(coarse) / residual / 4.0, KG_ORDER_TOLERANCE, "~1"),
        make_check(
            "kg_wrong_mass_ratio",
            kg_residual(state, mass=2.0 * state.mass) / residual,
            WRONG_MASS_FACTOR,
            ">=",
        ),
        make_check("translation_residual_change", abs(kg_residual(shifted) - residual), 0.0, "=="),
    ]


def solver_checks(config: RunConfig) -> List[CheckResult]:
    """Обратное восстановление, дефект ОДУ и плоскость потенциала на решениях."""
    U_t0 = config.verify_U_t0
    spatial = solve_spatial(spatial_input(config, config.roundtrip_T))
    temporal = solve_temporal(temporal_input(config, config.roundtrip_T, U_t0))
    defect_threshold = ODE_DEFECT_TOLERANCE_FACTOR * config.rel_tol
    checks = [
        make_check(
            "roundtrip_spatial",
            potential_roundtrip(spatial, spatial.constants),
            ROUNDTRIP_THRESHOLD,
            "<",
        ),
        make_check(
            "roundtrip_temporal",
            potential_roundtrip(temporal, temporal.constants),
            ROUNDTRIP_THRESHOLD,
            "<",
        ),
        make_check("ode_defect_spatial", spatial_ode_defect(spatial), defect_threshold, "<"),
        make_check("ode_defect_temporal", temporal_ode_defect(temporal), defect_threshold, "<"),
    ]

    flat_spatial = solve_spatial(spatial_input(config, config.flatness_T))
    flat_temporal = solve_temporal(temporal_input(config, config.flatness_T, U_t0))
    U_tot = config.U_s0 + U_t0
    average = average_quantum_potential(flat_spatial, flat_temporal)
    checks.append(
        make_check("flatness_relative_error", abs(average - U_tot) / abs(U_tot), FLATNESS_THRESHOLD, "<")
    )
    return checks


def cmd_verify(config: RunConfig) -> int:
    """
    Полная проверка на паре (U_s0, verify_U_t0).

    Пишет ``verify_report.json`` (и ``verify_checks.csv`` для формата csv).

    Returns:
        0 если все проверки пройдены, иначе 2
    """
    out_dir = config.out_dir
    checks: List[CheckResult] = []
    mass_report: Optional[MassReport] = None
    error: Optional[ErrorRecord] = None
    try:
        constants = config.constants()
        mass_report = compute_mass(
            sinc_limit(config.U_s0, config.hbar),
            cos_limit(config.verify_U_t0, config.c, config.hbar),
            constants,
        )
        checks.extend(identity_checks(mass_report, config))
        checks.extend(product_checks(config))
        checks.extend(solver_checks(config))
    except MadelungError as e:
        error = handle_domain_error(e, logger, "verify", out_dir)

    passed = error is None and all(check.passed for check in checks)
    report = VerifyReport(
        status="pass" if passed else "fail",
        checks=checks,
        mass_report=mass_report,
        error=error,
    )
    write_json(out_dir / "verify_report.json", report.model_dump(mode="json"))
    if config.output_format == "csv":
        write_csv(
            out_dir / "verify_checks.csv",
            ["name", "value", "threshold", "comparison", "passed"],
            [(c.name, c.value, c.threshold, c.comparison, c.passed) for c in checks],
        )
    print(format_verify_text(report))
    logger.info("verify finished", status=report.status, checks=len(checks))
    return EXIT_OK if passed else EXIT_DOMAIN_ERROR


# ============================================================================
# limits
# ============================================================================

def cmd_limits(config: RunConfig) -> int:
    """
    Состояния предела T=0 для (U_s0, U_t0) с дефектом собственного соотношения.

    При U_s0 + U_t0 < 0 дополнительно пишет отчёт о массе и Delta_t(m).
    """
    out_dir = config.out_dir
    sinc = sinc_limit(config.U_s0, config.hbar)
    cosine = cos_limit(config.U_t0, config.c, config.hbar)
    rows = [
        (
            state.kind.value,
            state.wavenumber,
            state.boundary,
            state.amplitude,
            state.level,
            eigen_residual(state, state.boundary / LIMIT_RESIDUAL_INTERVALS),
        )
        for state in (sinc, cosine)
    ]
    write_table(
        out_dir,
        "limits",
        ["kind", "wavenumber", "boundary", "amplitude", "level", "eigen_residual"],
        rows,
        config.output_format,
    )
    for kind, wavenumber, boundary, *_ in rows:
        print(f"✅ {kind}: wavenumber={wavenumber:.12g}, boundary={boundary:.12g}")

    if config.U_s0 + config.U_t0 < 0:
        constants = config.constants()
        report = compute_mass(sinc, cosine, constants)
        write_json(out_dir / "mass_report.json", report.model_dump(mode="json"))
        masses = np.linspace(0.0, 4.0 * max(report.m, 1.0), 41)
        write_table(
            out_dir,
            "delta_t_vs_mass",
            ["m", "delta_t"],
            list(zip(masses.tolist(), delta_t_vs_mass(report.k0, masses, constants).tolist())),
            config.output_format,
        )
        print(f"⚛️ m={report.m:.12g}, Delta_t={report.delta_t:.12g}")
    else:
        print("⚠️ U_s0 + U_t0 >= 0: масса не определена")
    return EXIT_OK


# ============================================================================
# Обвязка команд
# ============================================================================

COMMANDS: Dict[str, Callable[[RunConfig], int]] = {
    "solve-spatial": lambda config: cmd_solve(config, "spatial"),
    "solve-temporal": lambda config: cmd_solve(config, "temporal"),
    "sweep": cmd_sweep,
    "verify": cmd_verify,
    "limits": cmd_limits,
}


def run_command(name: str, config: RunConfig) -> int:
    """
    Выполняет команду с sidecar логом, трассировкой и метриками.

    Доменные ошибки, не обработанные самой командой, превращаются в
    error.json и код выхода ошибки.
    """
    out_dir = config.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    logger.attach_file(out_dir / "run.log")
    start_time = time.time()
    exit_code = EXIT_DOMAIN_ERROR

    with tracer.start_as_current_span(name) as span:
        span.set_attribute("out_dir", str(out_dir))
        span.set_attribute("T_list", [float(T) for T in config.T_list])
        logger.info(f"🚀 {name} started", config=config.model_dump(mode="json"))
        try:
            exit_code = COMMANDS[name](config)
        except (MadelungError, ValueError) as e:
            record = handle_domain_error(e, logger, name, out_dir)
            print(format_error_text(record))
            exit_code = record.exit_code
        finally:
            span.set_attribute("exit_code", exit_code)
            if COMMAND_RUNS_TOTAL:
                COMMAND_RUNS_TOTAL.labels(command=name, exit_code=str(exit_code)).inc()
            logger.info(
                f"{name} finished",
                exit_code=exit_code,
                duration_seconds=round(time.time() - start_time, 3),
            )
            if dump_metrics:
                dump_metrics(out_dir)
            logger.detach_file()
    return exit_code
