"""
Точка входа suris-lab.

Интерфейс командной строки для интегрируемого стандартного отображения Суриса:
фазовые портреты, инвариантные кривые, карты угол-действие, коэффициенты в
деформированном базисе, периодические орбиты, функция beta и эксперименты
жесткости.
"""

import argparse
import logging
import sys
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from src.action_angle import build_chart
from src.basis import InnerProductContext
from src.config import DEFAULT_GRID, DEFAULT_TOL, RunConfig
from src.dynamics import PhasePoint, phase_portrait
from src.errors import ParameterError, SurisLabError
from src.invariant_curves import curve_for_rotation_number
from src.orbits import action, action_spectrum_sample, beta, minimize_action, rationals_in_window
from src.potentials import (
    Potential,
    SurisParams,
    load_potential,
    random_trig_perturbation,
    suris_increment,
    suris_params_of,
    suris_potential,
)
from src.reporter import ReportGenerator
from src.rigidity import (
    EstimateReport,
    beta_consistency,
    periodic_rigidity_obstruction,
    project_to_suris,
    verify_coefficient_halving,
    verify_deviation_scaling,
    verify_orthogonality,
    verify_tail_bound,
)

logger = logging.getLogger("src.main")

EXPERIMENTS = ("orthogonality", "tail", "coefficient-bound", "deviation", "obstruction",
               "beta-consistency")

SCHEMAS = {
    "phase-portrait": ["x_mod1", "y", "orbit_id"],
    "orbit": ["index", "x"],
    "curve": ["x", "psi"],
    "chart": ["x", "theta", "dtheta"],
    "coeffs": ["q", "re", "im", "abs"],
    "beta": ["p", "q", "beta"],
    "spectrum": ["p", "q", "action", "residual", "error"],
}

EXIT_OK, EXIT_ERROR, EXIT_THRESHOLD = 0, 1, 2


def _increment(text: str) -> List[float]:
    values = [float(v) for v in text.split(",")]
    if len(values) != 4:
        raise argparse.ArgumentTypeError("ожидается четыре числа dA,dB,dC,dD")
    return values


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subcommand per operation."""
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--potential", type=str, default=None,
                        help="JSON-файл потенциала ({\"suris\": ..., \"trig\": ...})")
    common.add_argument("--eps", type=float, default=None,
                        help="Параметры Суриса A=B=D=0, C=-eps (если не задан --potential)")
    common.add_argument("--out", "-o", type=str, default=None, help="Путь к файлу результата")
    common.add_argument("--format", "-f", type=str, choices=["csv", "json"], default="csv",
                        help="Формат вывода (csv или json)")
    common.add_argument("--grid", type=int, default=DEFAULT_GRID,
                        help=f"Число узлов квадратуры (по умолчанию: {DEFAULT_GRID})")
    common.add_argument("--tol", type=float, default=DEFAULT_TOL,
                        help=f"Допуск невязки (по умолчанию: {DEFAULT_TOL})")
    common.add_argument("--threads", type=int, default=None,
                        help="Число потоков (иначе SURIS_LAB_THREADS, иначе 1)")
    common.add_argument("--seed", type=int, default=0, help="Зерно случайных возмущений")
    common.add_argument("--schema", action="store_true", help="Показать столбцы CSV и выйти")
    common.add_argument("--verbose", "-v", action="store_true", help="Подробный журнал")

    parser = argparse.ArgumentParser(
        description="suris-lab - интегрируемое стандартное отображение Суриса и эксперименты жесткости"
    )
    commands = parser.add_subparsers(dest="command", required=True)

    sub = commands.add_parser("phase-portrait", parents=[common], help="Фазовый портрет")
    sub.add_argument("--orbits", type=int, default=20, help="Число орбит")
    sub.add_argument("--steps", type=int, default=500, help="Число итераций")
    sub.add_argument("--y-min", type=float, default=0.0, help="Нижняя начальная высота")
    sub.add_argument("--y-max", type=float, default=0.5, help="Верхняя начальная высота")

    sub = commands.add_parser("orbit", parents=[common], help="Периодическая орбита (p, q)")
    sub.add_argument("--p", type=int, default=None)
    sub.add_argument("--q", type=int, default=None)
    sub.add_argument("--pin", type=float, default=None, help="Закрепленная точка x0")

    for name, help_text in (("curve", "Инвариантная кривая"), ("chart", "Угловая карта")):
        sub = commands.add_parser(name, parents=[common], help=help_text)
        sub.add_argument("--rho", type=float, default=None, help="Число вращения")
        if name == "curve":
            sub.add_argument("--sigma", type=int, choices=[1, -1], default=1)
            sub.add_argument("--k", type=int, default=0)

    sub = commands.add_parser("coeffs", parents=[common], help="Коэффициенты <W, f_q>")
    sub.add_argument("--perturbation", type=str, default=None, help="JSON-файл возмущения W")
    sub.add_argument("--qmax", type=int, default=32)

    sub = commands.add_parser("beta", parents=[common], help="Функция beta Мазера")
    sub.add_argument("--p", type=int, default=None)
    sub.add_argument("--q", type=int, default=None)
    sub.add_argument("--qmax", type=int, default=None, help="Таблица по рациональным в [1/6, 1/3]")

    sub = commands.add_parser("spectrum", parents=[common], help="Спектр действий")
    sub.add_argument("--qmax", type=int, default=12)

    sub = commands.add_parser("project", parents=[common], help="Проекция на семейство Суриса")
    sub.add_argument("--perturbation", type=str, default=None)
    sub.add_argument("--delta", type=_increment, default=None, help="Приращение dA,dB,dC,dD")
    sub.add_argument("--iterations", type=int, default=5)

    rigidity = commands.add_parser("rigidity", help="Эксперименты жесткости")
    experiments = rigidity.add_subparsers(dest="experiment", required=True)
    for name in EXPERIMENTS:
        sub = experiments.add_parser(name, parents=[common])
        sub.add_argument("--qmax", type=int, default=None)
        sub.add_argument("--perturbation", type=str, default=None)
        sub.add_argument("--delta", type=_increment, default=None)
        sub.add_argument("--halvings", type=int, default=4)
        sub.add_argument("--p", type=int, default=1)
        sub.add_argument("--q", type=int, default=5)
        sub.add_argument("--x0", type=float, default=0.0)
        sub.add_argument("--r", type=int, default=1)
        sub.add_argument("--k", type=int, default=2)
    return parser


def _potential(config: RunConfig) -> Potential:
    if config.potential:
        return load_potential(config.potential)
    return suris_potential(SurisParams.special(config.params.get("eps", 0.0)))


def _suris_params(config: RunConfig) -> SurisParams:
    return suris_params_of(_potential(config))


def _perturbation(config: RunConfig, params: SurisParams, default_delta=(1e-2, 0.0, 0.0, 0.0)) -> Potential:
    if config.params.get("perturbation"):
        return load_potential(config.params["perturbation"])
    delta = config.params.get("delta") or list(default_delta)
    return suris_increment(params, delta)


def _require(config: RunConfig, *names: str) -> List[Any]:
    missing = [n for n in names if config.params.get(n) is None]
    if missing:
        raise ParameterError("не заданы параметры: " + ", ".join("--" + n for n in missing))
    return [config.params[n] for n in names]


def _emit(config: RunConfig, reporter: ReportGenerator, columns: Sequence[str], rows, payload: Dict,
          metadata: Optional[Dict] = None):
    if config.format == "json":
        report = reporter.generate_json_report({**payload, **(metadata or {})}, output_file=config.out)
    else:
        report = reporter.generate_csv_report(columns, rows, metadata, output_file=config.out)
    if config.out is None:
        sys.stdout.write(report)


def _run_phase_portrait(config, reporter):
    V = _potential(config)
    heights = np.linspace(config.params["y_min"], config.params["y_max"], config.params["orbits"])
    rows = phase_portrait(V, [PhasePoint(0.0, float(y)) for y in heights], config.params["steps"])
    _emit(config, reporter, SCHEMAS["phase-portrait"], rows, {"rows": rows})
    return EXIT_OK


def _run_orbit(config, reporter):
    p, q = _require(config, "p", "q")
    V = _potential(config)
    orbit = minimize_action(V, p, q, pin=config.params.get("pin"), tol=config.tol)
    value = action(V, orbit).value
    points = [float(x) for x in orbit.points]
    metadata = {"p": p, "q": q, "pin": orbit.pin, "action": value, "residual": orbit.residual,
                "iterations": orbit.iterations}
    _emit(config, reporter, SCHEMAS["orbit"], list(enumerate(points)), {"points": points}, metadata)
    return EXIT_OK


def _run_curve(config, reporter):
    (rho,) = _require(config, "rho")
    params = _suris_params(config)
    curve = curve_for_rotation_number(params, rho, config.params.get("sigma", 1),
                                      config.params.get("k", 0), nodes=config.grid)
    birkhoff = curve.rotation_number_bracket()
    metadata = {"eta": curve.eta, "rho": rho, "measured_rho": curve.measured_rotation,
                "birkhoff": list(birkhoff), "level_residual": curve.level_residual(),
                "invariance_residual": curve.invariance_residual()}
    rows = list(zip(curve.grid.tolist(), curve.values.tolist()))
    _emit(config, reporter, SCHEMAS["curve"], rows, {"x": curve.grid.tolist(), "psi": curve.values.tolist()},
          metadata)
    return EXIT_OK


def _run_chart(config, reporter):
    (rho,) = _require(config, "rho")
    chart = build_chart(_suris_params(config), rho, config.grid)
    metadata = {"rho": rho, "eta": chart.eta, "conjugacy_defect": chart.conjugacy_defect(),
                "normalization_defect": chart.normalization_defect()}
    rows = list(zip(chart.grid.tolist(), chart.theta_table.tolist(), chart.derivative_table.tolist()))
    _emit(config, reporter, SCHEMAS["chart"], rows,
          {"x": chart.grid.tolist(), "theta": chart.theta_table.tolist(),
           "dtheta": chart.derivative_table.tolist()}, metadata)
    return EXIT_OK


def _run_coeffs(config, reporter):
    (path,) = _require(config, "perturbation")
    W = load_potential(path)
    ctx = InnerProductContext(_suris_params(config), config.grid, config.threads)
    qmax = config.params.get("qmax", 32)
    qs = list(range(-qmax, qmax + 1))
    rows = [(q, c.real, c.imag, abs(c)) for q, c in zip(qs, ctx.coefficients(W, qs))]
    _emit(config, reporter, SCHEMAS["coeffs"], rows, {"coefficients": [list(r) for r in rows]})
    return EXIT_OK


def _run_beta(config, reporter):
    V = _potential(config)
    if config.params.get("qmax") is None:
        p, q = _require(config, "p", "q")
        value = beta(V, p, q, tol=config.tol)
        if config.out is None and config.format == "csv":
            print(format(value, ".15g"))
        else:
            _emit(config, reporter, SCHEMAS["beta"], [(p, q, value)], {"p": p, "q": q, "beta": value})
        return EXIT_OK
    rows = [(p, q, beta(V, p, q, tol=config.tol)) for p, q in rationals_in_window(config.params["qmax"])]
    _emit(config, reporter, SCHEMAS["beta"], rows, {"beta": [list(r) for r in rows]})
    return EXIT_OK


def _run_spectrum(config, reporter):
    entries = action_spectrum_sample(_potential(config), config.params.get("qmax", 12),
                                     config.threads, config.tol)
    rows = [(e.p, e.q, e.action, e.residual, e.error) for e in entries]
    _emit(config, reporter, SCHEMAS["spectrum"], rows, {"entries": [list(r) for r in rows]})
    return EXIT_OK


def _run_project(config, reporter):
    params = _suris_params(config)
    result = project_to_suris(params, _perturbation(config, params), config.params.get("iterations", 5),
                              config.grid)
    return _finish_report(config, reporter, result.to_report(params))


def _run_rigidity(config, reporter):
    experiment = config.command.split(" ", 1)[1]
    qmax = config.params.get("qmax")
    if experiment == "obstruction":
        V = _potential(config)
        r, k = config.params.get("r", 1), config.params.get("k", 2)
        value = periodic_rigidity_obstruction(V, r, k)
        report = EstimateReport("obstruction", sweep={"r": r, "k": k}, measured={"obstruction": value},
                                parameters={"potential": V.tag})
        return _finish_report(config, reporter, report)

    params = _suris_params(config)
    if experiment == "orthogonality":
        report = verify_orthogonality(params, qmax or 32, config.grid, config.threads)
    elif experiment == "tail":
        W = (load_potential(config.params["perturbation"]) if config.params.get("perturbation")
             else random_trig_perturbation(config.seed))
        report = verify_tail_bound(params, W, qmax or 64, config.grid)
        report.parameters["seed"] = config.seed
    elif experiment == "coefficient-bound":
        delta = config.params.get("delta") or [1e-2, 0.0, 0.0, 0.0]
        report = verify_coefficient_halving(params, delta, range(3, (qmax or 16) + 1),
                                            config.params.get("halvings", 4),
                                            InnerProductContext(params, config.grid, config.threads))
    elif experiment == "deviation":
        delta = config.params.get("delta") or [1e-2, 0.0, 0.0, 0.0]
        report = verify_deviation_scaling(params, delta, config.params.get("p", 1),
                                          config.params.get("q", 5), config.params.get("x0", 0.0),
                                          config.params.get("halvings", 4))
    else:
        report = beta_consistency(params, _perturbation(config, params, (1e-3, 0.0, 0.0, 0.0)),
                                  qmax or 12, config.threads)
    return _finish_report(config, reporter, report)


def _finish_report(config: RunConfig, reporter: ReportGenerator, report: EstimateReport) -> int:
    text = reporter.generate_json_report(report.to_dict(), output_file=config.out)
    if config.out is None:
        sys.stdout.write(text)
    status = "пройден" if report.passed else "НЕ пройден"
    print(f"Эксперимент {report.experiment}: {status}", file=sys.stderr)
    return EXIT_OK if report.passed else EXIT_THRESHOLD


HANDLERS = {
    "phase-portrait": _run_phase_portrait,
    "orbit": _run_orbit,
    "curve": _run_curve,
    "chart": _run_chart,
    "coeffs": _run_coeffs,
    "beta": _run_beta,
    "spectrum": _run_spectrum,
    "project": _run_project,
    "rigidity": _run_rigidity,
}


def dispatch(config: RunConfig) -> int:
    """
    Route a validated configuration to its handler.

    Returns:
        0 on success, 2 when an experiment misses its threshold, 1 on error
    """
    name = config.command.split(" ", 1)[0]
    if config.schema:
        columns = SCHEMAS.get(name)
        print(",".join(columns) if columns else "JSON-отчет (столбцы CSV отсутствуют)")
        return EXIT_OK
    reporter = ReportGenerator(config_echo=config.echo())
    try:
        return HANDLERS[name](config, reporter)
    except SurisLabError as e:
        print(f"Ошибка: {e}", file=sys.stderr)
        if hasattr(e, "best_residual"):
            print(f"Лучшая невязка: {e.best_residual:.3e}", file=sys.stderr)
        return EXIT_ERROR
    except OSError as e:
        print(f"Ошибка ввода-вывода: {e}", file=sys.stderr)
        return EXIT_ERROR


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Main function to run suris-lab."""
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        config = RunConfig.from_args(args)
    except SurisLabError as e:
        print(f"Ошибка: {e}", file=sys.stderr)
        return EXIT_ERROR
    return dispatch(config)


if __name__ == "__main__":
    sys.exit(main())
