# Línea de comandos: raíces, dominio, modelo de juguete, frentes, barridos y simulación

import argparse
import logging
import math
import sys
import time
from pathlib import Path
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from bistable_fronts.config import (
    DEFAULT_L,
    DEFAULT_N,
    LOG_FORMAT,
    SIM_NX,
    SIM_OUTPUT_INTERVAL,
    SIM_T_FINAL,
    SIM_X_MAX,
)
from bistable_fronts.errors import (
    BranchUnavailableError,
    DomainInconsistencyError,
    HypothesisError,
    SimulationError,
    SolverError,
)
from bistable_fronts.model_zoo import (
    ModelSpec,
    SteadyStates,
    check_hypotheses,
    find_steady_states,
    load_model_config,
)
from bistable_fronts.outputs import (
    RunManifest,
    get_default_output_path,
    save_to_parquet,
    to_json,
    write_csv,
    write_gnuplot_script,
    write_json,
)
from bistable_fronts.pde_sim import SimConfig, simulate
from bistable_fronts.profile_solver import ContinuationOptions, continue_in_tau, solve_nondelayed
from bistable_fronts.quasipoly import CharParams, Rect, root_report
from bistable_fronts.stability_domain import DomainParams, tau_sharp, theta, trace_boundary
from bistable_fronts.toy_model import (
    POSITIVE,
    ToyParams,
    branch_of,
    domain_exit_tau,
    k_star,
    profile_positive,
    speed_curve,
)
from bistable_fronts.wave_verify import report_as_dict, verify
from bistable_fronts.waves import Termination, WaveProfile

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_IO = 3
EXIT_MODEL = 4
EXIT_SOLVER = 5


#######################################################################################
# Utilidades
#######################################################################################


def parse_tau_grid(text: str) -> np.ndarray:
    """
    Grilla "a:b:s" -> a, a + s, ..., hasta b inclusive (dentro de 1e-9 s).

    Raises:
        ValueError: formato inválido, s <= 0 o b < a
    """
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError(f"--tau-grid debe tener la forma a:b:s, se recibió {text!r}")
    start, stop, step = (float(p) for p in parts)
    if not step > 0:
        raise ValueError(f"El paso de --tau-grid debe ser positivo: {step}")
    if stop < start:
        raise ValueError(f"--tau-grid con b < a: {text!r}")
    count = int(math.floor((stop - start) / step + 1e-9))
    return np.round(start + step * np.arange(count + 1), 12)


def _parse_window(text: Optional[str]) -> Optional[Rect]:
    if text is None:
        return None
    parts = [float(p) for p in text.split(",")]
    if len(parts) != 4:
        raise ValueError(f"--window debe ser re_min,re_max,im_min,im_max: {text!r}")
    return Rect(*parts)


def _output_path(args: argparse.Namespace, default_name: str) -> Path:
    if args.out:
        return Path(args.out)
    return get_default_output_path() / default_name


def _sibling(out: Path, suffix: str) -> Path:
    return out.with_name(f"{out.stem}{suffix}")


def _emit(payload: dict) -> None:
    print(to_json(payload))


def _write_table(
    df: pd.DataFrame,
    out: Path,
    args: argparse.Namespace,
    manifest: RunManifest,
    labels=("x", "y", ""),
    columns: str = "1:2",
) -> None:
    manifest.add_output(write_csv(df, out))
    if getattr(args, "parquet", False):
        manifest.add_output(save_to_parquet(df, out.parent, out.stem))
    if getattr(args, "gnuplot", False):
        xlabel, ylabel, title = labels
        script = write_gnuplot_script(
            _sibling(out, ".gp"), [out], xlabel, ylabel, title, columns=columns
        )
        manifest.add_output(script)


def _model_and_states(path: str) -> tuple[ModelSpec, SteadyStates, dict]:
    model = load_model_config(Path(path))
    states = find_steady_states(model)
    report = check_hypotheses(model, states)
    for note in report.failure_notes:
        logger.warning(f"Hipótesis: {note}")
    return model, states, report.as_dict()


def _front_at(
    model: ModelSpec, states: SteadyStates, tau: float, L: float, N: int
) -> WaveProfile:
    profile = solve_nondelayed(model, states, L=L, N=N)
    if tau == 0:
        return profile
    curve = continue_in_tau(
        model, states, profile, tau, ContinuationOptions(track_domain=False, keep_profiles=True)
    )
    if curve.termination != Termination.REACHED_TAU_MAX:
        last = curve.points[-1].tau
        raise SolverError(
            f"La continuación terminó en tau={last:.6g} "
            f"({curve.termination.value}) antes de {tau}"
        )
    return curve.points[-1].profile


#######################################################################################
# Subcomandos
#######################################################################################


def cmd_roots(args: argparse.Namespace, manifest: RunManifest) -> int:
    params = CharParams(args.a, args.b, args.c, args.h)
    report = root_report(params, _parse_window(args.window))
    payload = report.as_dict()
    _emit(payload)
    manifest.summary = {"dominant_real": payload.get("dominant_real")}
    manifest.add_output(write_json(payload, _output_path(args, "roots.json")))
    return EXIT_OK


def cmd_domain(args: argparse.Namespace, manifest: RunManifest) -> int:
    params = DomainParams(args.a, args.b)
    curve = trace_boundary(params, args.tau_max, args.points, jobs=args.jobs)
    out = _output_path(args, "domain.csv")
    _write_table(curve.to_frame(), out, args, manifest, ("tau", "clin", "clin(tau)"))

    omega, theta_value = theta(params)
    summary = {"tau_sharp": tau_sharp(params), "omega": omega, "theta": theta_value}
    manifest.summary = summary
    _emit(summary)
    return EXIT_OK


def cmd_toy(args: argparse.Namespace, manifest: RunManifest) -> int:
    params = ToyParams(kappa=args.kappa, p=args.p, q=args.q)
    taus = np.array([args.tau]) if args.tau is not None else parse_tau_grid(args.tau_grid)
    branch = branch_of(params)
    curve = speed_curve(params, taus, jobs=args.jobs)

    out = _output_path(args, "toy_speed.csv")
    if branch == POSITIVE:
        frame, labels, columns = curve.to_frame(), ("tau", "c", f"c(tau) {params.label}"), "1:2"
    else:
        # la rama negativa se grafica como |c|
        frame = curve.to_frame(include_abs_speed=True)
        labels, columns = ("tau", "|c|", f"|c(tau)| {params.label}"), "1:3"
    _write_table(frame, out, args, manifest, labels, columns=columns)

    summary: Dict[str, object] = {"branch": branch, "k_star": k_star(params)}
    if branch == POSITIVE:
        summary["domain_exit_tau"] = domain_exit_tau(params, curve)

    if args.profile_out:
        if branch != POSITIVE:
            raise BranchUnavailableError(
                "positive-speed branch absent: el perfil completo solo existe con k* < 1"
            )
        grid = np.linspace(-args.profile_range, args.profile_range, args.profile_points)
        profile = profile_positive(params, float(taus[0]), grid)
        manifest.add_output(write_csv(profile.to_frame(), Path(args.profile_out)))
        summary["profile_tau"] = float(taus[0])

    manifest.summary = summary
    _emit(summary)
    return EXIT_OK


def cmd_front(args: argparse.Namespace, manifest: RunManifest) -> int:
    model, states, hypotheses = _model_and_states(args.model)
    profile = _front_at(model, states, args.tau, args.L, args.N)
    report = verify(profile, model, states)

    out = _output_path(args, "front.csv")
    _write_table(profile.to_frame(), out, args, manifest, ("t", "phi", model.model_id))
    payload = {
        "model_id": model.model_id,
        "tau": profile.tau,
        "c": profile.c,
        "h": profile.h,
        "states": [states.e1, states.e2, states.e3],
        "hypotheses": hypotheses,
        "verify": report_as_dict(report),
    }
    manifest.add_output(write_json(payload, _sibling(out, "_report.json")))
    manifest.summary = {"c": profile.c, "monotone": report.monotone}
    _emit(payload)
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, manifest: RunManifest) -> int:
    model, states, hypotheses = _model_and_states(args.model)
    start = solve_nondelayed(model, states, L=args.L, N=args.N)
    options = ContinuationOptions(keep_profiles=False)
    curve = continue_in_tau(model, states, start, args.tau_max, options)

    out = _output_path(args, "sweep.csv")
    _write_table(curve.to_frame(), out, args, manifest, ("tau", "c", model.model_id))

    first_nonmonotone = next((p.tau for p in curve.points if not p.monotone), None)
    first_outside = next((p.tau for p in curve.points if p.in_domain is False), None)
    summary = {
        "model_id": model.model_id,
        "termination": curve.termination.value,
        "points": len(curve.points),
        "tau_last": float(curve.taus[-1]),
        "first_nonmonotone_tau": first_nonmonotone,
        "first_outside_domain_tau": first_outside,
        "hypotheses": hypotheses,
    }
    manifest.summary = summary
    _emit(summary)
    return EXIT_OK


def cmd_simulate(args: argparse.Namespace, manifest: RunManifest) -> int:
    model, states, hypotheses = _model_and_states(args.model)
    seed = None
    if args.initial == "profile_seed":
        seed = _front_at(model, states, args.tau, DEFAULT_L, DEFAULT_N)

    config = SimConfig(
        model=model,
        tau=args.tau,
        x_max=args.x_max,
        nx=args.nx,
        dt=args.dt,
        t_final=args.t_final,
        initial=args.initial,
        states=states,
        seed_profile=seed,
        output_interval=args.output_interval,
        snapshot_interval=args.snapshot_interval,
    )
    result = simulate(config)

    out = _output_path(args, "simulate.csv")
    _write_table(result.fronts_frame(), out, args, manifest, ("t", "x_front", model.model_id))
    manifest.add_output(write_csv(result.snapshot_frame(), _sibling(out, "_final.csv")))
    for index, (t, u) in enumerate(result.snapshots):
        path = _sibling(out, f"_snapshot_{index:04d}.csv")
        manifest.add_output(write_csv(result.snapshot_frame(u), path))
    summary_path = _sibling(out, "_summary.csv")
    manifest.add_output(write_csv(pd.DataFrame([result.summary()]), summary_path))

    summary = {
        **result.summary(),
        "speed_r_squared": result.speed_r_squared,
        "max_overshoot": result.max_overshoot,
        "kappa_band_cells": result.kappa_band_cells,
        "hypotheses": hypotheses,
    }
    manifest.summary = summary
    _emit(summary)
    return EXIT_OK


#######################################################################################
# Parser y punto de entrada
#######################################################################################


def _add_output_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--out", help="archivo CSV principal (default: directorio de salida)")
    parser.add_argument("--jobs", type=int, default=None, help="procesos en paralelo")
    parser.add_argument("--gnuplot", action="store_true", help="escribe un script .gp")
    parser.add_argument("--parquet", action="store_true", help="copia Parquet del CSV")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bistable-fronts",
        description="Frentes de onda biestables en ecuaciones de reacción-difusión con retardo",
    )
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("--verbose", action="store_true", help="logs en nivel DEBUG")
    verbosity.add_argument("--quiet", action="store_true", help="solo advertencias y errores")
    sub = parser.add_subparsers(dest="command", required=True)

    roots = sub.add_parser("roots", help="raíces de chi(z) = z^2 - c z + a + b e^{-z h}")
    roots.add_argument("--a", type=float, required=True)
    roots.add_argument("--b", type=float, required=True)
    roots.add_argument("--c", type=float, required=True)
    roots.add_argument("--h", type=float, required=True)
    roots.add_argument("--window", help="re_min,re_max,im_min,im_max")
    roots.add_argument("--out", help="copia JSON del reporte (default <salida>/roots.json)")
    roots.set_defaults(func=cmd_roots)

    domain = sub.add_parser("domain", help="frontera clin(tau) del dominio D(a, b)")
    domain.add_argument("--a", type=float, required=True)
    domain.add_argument("--b", type=float, required=True)
    domain.add_argument("--tau-max", type=float, required=True)
    domain.add_argument("--points", type=int, default=200)
    _add_output_flags(domain)
    domain.set_defaults(func=cmd_domain)

    toy = sub.add_parser("toy", help="curva de velocidad del modelo lineal a trozos")
    toy.add_argument("--kappa", type=float, required=True)
    toy.add_argument("--p", type=float, required=True)
    toy.add_argument("--q", type=float, required=True)
    grid = toy.add_mutually_exclusive_group(required=True)
    grid.add_argument("--tau-grid", help="a:b:s")
    grid.add_argument("--tau", type=float)
    toy.add_argument("--profile-out", help="CSV t,phi del perfil en el primer tau")
    toy.add_argument("--profile-range", type=float, default=20.0)
    toy.add_argument("--profile-points", type=int, default=2001)
    _add_output_flags(toy)
    toy.set_defaults(func=cmd_toy)

    for name, func, text in (
        ("front", cmd_front, "perfil y reporte de verificación para un tau"),
        ("sweep", cmd_sweep, "continuación en tau desde el frente sin retardo"),
    ):
        command = sub.add_parser(name, help=text)
        command.add_argument("--model", required=True, help="archivo de modelo clave=valor")
        command.add_argument("--L", type=float, default=DEFAULT_L)
        command.add_argument("--N", type=int, default=DEFAULT_N)
        if name == "front":
            command.add_argument("--tau", type=float, default=0.0)
        else:
            command.add_argument("--tau-max", type=float, required=True)
        _add_output_flags(command)
        command.set_defaults(func=func)

    sim = sub.add_parser("simulate", help="simulación directa de la EDP con retardo")
    sim.add_argument("--model", required=True)
    sim.add_argument("--tau", type=float, default=0.0)
    sim.add_argument("--x-max", type=float, default=SIM_X_MAX)
    sim.add_argument("--nx", type=int, default=SIM_NX)
    sim.add_argument("--dt", type=float, default=None)
    sim.add_argument("--t-final", type=float, default=SIM_T_FINAL)
    sim.add_argument("--initial", choices=["step", "profile_seed"], default="step")
    sim.add_argument("--output-interval", type=float, default=SIM_OUTPUT_INTERVAL)
    sim.add_argument("--snapshot-interval", type=float, default=None)
    _add_output_flags(sim)
    sim.set_defaults(func=cmd_simulate)

    return parser


def _configure_logging(args: argparse.Namespace) -> None:
    level = logging.INFO
    if args.verbose:
        level = logging.DEBUG
    elif args.quiet:
        level = logging.WARNING
    logging.basicConfig(level=level, format=LOG_FORMAT, force=True)


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Punto de entrada. Códigos de salida: 0 éxito, 2 argumentos, 3 E/S,
    4 modelo/hipótesis, 5 falla del solver.
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)

    _configure_logging(args)
    parameters = {k: v for k, v in vars(args).items() if k not in ("func", "verbose", "quiet")}
    manifest = RunManifest(command=args.command, parameters=parameters)
    logger.info("=" * 70)
    logger.info(f"bistable-fronts {args.command}")
    logger.info("=" * 70)

    start = time.time()
    try:
        code = args.func(args, manifest)
    except (HypothesisError, BranchUnavailableError) as e:
        logger.error(f"Error de modelo: {e}")
        _emit({"error": str(e)})
        return EXIT_MODEL
    except ValueError as e:
        logger.error(f"Argumento inválido: {e}")
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except OSError as e:
        logger.error(f"Error de E/S: {e}")
        return EXIT_IO
    except (SolverError, SimulationError, DomainInconsistencyError) as e:
        logger.error(f"Falla numérica: {e}")
        return EXIT_SOLVER

    manifest.wall_time = time.time() - start
    if manifest.outputs:
        first = Path(manifest.outputs[0])
        try:
            manifest.write(_sibling(first, ".manifest.json"))
        except OSError as e:
            logger.error(f"No se pudo escribir el manifiesto: {e}")
            return EXIT_IO
    logger.info(f"Listo en {manifest.wall_time:.2f}s")
    return code