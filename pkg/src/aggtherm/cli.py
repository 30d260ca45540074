"""``aggtherm`` command-line interface.

Exit codes: 0 success, 2 bad arguments or configuration, 3 identification
did not converge (outputs are still written), 4 input/output or data error.
"""

from __future__ import annotations

import argparse
import logging
import sys

import numpy as np

from . import io
from .aggregation import PARAM_UNITS, AggregateParams, average_signals, deviation_signals
from .config import ConfigError, RunConfig, build_run_config, format_config, read_config
from .estimation.identify import predict_out_of_sample, solve_batch
from .heuristics import variance_report
from .scenarios import generate

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NONCONVERGED = 3
EXIT_IO = 4

logger = logging.getLogger("aggtherm")


class _Data:
    """Zone traces plus ground truth when they come from a scenario."""

    def __init__(self, run: RunConfig):
        self.scenario = None
        if run.zones_path is not None:
            self.zones = io.ingest_zone_csv(run.zones_path)
            self.aggregate = average_signals(self.zones)
            self.truth = None
            self.q_bar_agg = None
        else:
            self.scenario = generate(run.scenario)
            self.zones = self.scenario.zones
            self.aggregate = self.scenario.aggregate
            self.truth = self.scenario.truth
            self.q_bar_agg = self.scenario.q_bar_agg


def _split_index(run: RunConfig, n_t: int, t_s: float, default_fraction: float | None) -> int:
    if run.train_days is not None:
        n0 = int(round(run.train_days * 24.0 / t_s))
    elif default_fraction is None:
        n0 = n_t
    else:
        n0 = int(round(default_fraction * n_t))
    if not 3 <= n0 <= n_t:
        raise ConfigError(f"training window of {n0} samples does not fit {n_t} samples")
    return n0


def _param_lines(theta: AggregateParams, truth: AggregateParams | None) -> list[str]:
    lines = [f"{'parameter':<10}{'estimate':>14}{'true value':>14}  unit"]
    for n in AggregateParams.names():
        true = f"{getattr(truth, n):14.4f}" if truth is not None else f"{'-':>14}"
        lines.append(f"{n:<10}{getattr(theta, n):14.4f}{true}  {PARAM_UNITS[n]}")
    return lines


def _identify(run: RunConfig, data: _Data, n0: int):
    train = data.aggregate.slice(0, n0)
    res = solve_batch(train, run.ident)
    out = run.out_dir
    io.write_results_csv(
        out / "results.csv", train.start_time, train.t_s, train.t_bar_z, res.t_bar_w_hat, res.q_agg_hat, res.nu_hat
    )
    io.write_params_csv(out / "params.csv", res.theta_hat, data.truth)
    cols = {"q_agg_hat": res.q_agg_hat}
    if train.q_bar_int is not None:
        cols["q_bar_int"] = train.q_bar_int
    if data.q_bar_agg is not None:
        cols["q_bar_agg"] = data.q_bar_agg[:n0]
    io.write_series_csv(out / "disturbance.csv", train.start_time, train.t_s, cols)

    lines = ["[identification]", f"samples = {n0}", f"converged = {str(res.converged).lower()}"]
    lines += [
        f"objective = {res.objective_value!r}",
        f"kkt_residual = {res.kkt_residual:.3e}",
        f"constraint_residual = {res.constraint_residual:.3e}",
        f"outer_iterations = {res.iterations}",
        f"inner_iterations = {res.inner_iterations}",
    ]
    if data.q_bar_agg is not None:
        err = res.q_agg_hat - data.q_bar_agg[:n0]
        lines.append(f"q_agg_rmse = {float(np.sqrt(np.mean(err * err))):.6g}")
    lines += ["", "[parameters]"] + _param_lines(res.theta_hat, data.truth)
    return res, lines


def cmd_simulate(run: RunConfig) -> int:
    if run.scenario is None:
        raise ConfigError("simulate needs a scenario; remove data.zones")
    data = _Data(run)
    out, agg, sc = run.out_dir, data.aggregate, data.scenario
    io.export_zone_csv(data.zones, out / "zones.csv")
    io.write_series_csv(
        out / "aggregate_truth.csv",
        agg.start_time,
        agg.t_s,
        {
            "T_bar_z": agg.t_bar_z,
            "T_bar_w": agg.t_bar_w,
            "T_bar_a": agg.t_bar_a,
            "eta_bar_solar": agg.eta_bar_solar,
            "q_bar_ac": agg.q_bar_ac,
            "q_bar_int": agg.q_bar_int,
            "q_bar_agg": sc.q_bar_agg,
            "w_tilde_z": sc.errors.w_tilde_z,
            "w_tilde_w": sc.errors.w_tilde_w,
        },
    )
    io.write_params_csv(out / "true_params.csv", sc.truth, sc.truth)
    lines = ["[simulation]", f"zones = {data.zones.n_zones}", f"samples = {data.zones.n_t}", f"t_s = {agg.t_s!r}"]
    io.write_text(out / "summary.txt", lines)
    return EXIT_OK


def cmd_aggregate(run: RunConfig) -> int:
    data = _Data(run)
    agg, out = data.aggregate, run.out_dir
    cols = {
        "T_bar_z": agg.t_bar_z,
        "T_bar_a": agg.t_bar_a,
        "eta_bar_solar": agg.eta_bar_solar,
        "q_bar_ac": agg.q_bar_ac,
    }
    if agg.q_bar_int is not None:
        cols["q_bar_int"] = agg.q_bar_int
    io.write_series_csv(out / "aggregate.csv", agg.start_time, agg.t_s, cols)
    tildes = deviation_signals(data.zones, agg)
    lines = ["[aggregation]", f"zones = {data.zones.n_zones}", f"samples = {agg.n_t}"]
    for kind, arr in tildes.items():
        lines.append(f"max_abs_zone_mean_{kind} = {float(np.max(np.abs(np.mean(arr, axis=1)))):.3e}")
    if data.truth is not None:
        lines += ["", "[aggregate parameters]"] + _param_lines(data.truth, data.truth)
    io.write_text(out / "summary.txt", lines)
    return EXIT_OK


def cmd_identify(run: RunConfig) -> int:
    data = _Data(run)
    n0 = _split_index(run, data.aggregate.n_t, data.aggregate.t_s, None)
    res, lines = _identify(run, data, n0)
    io.write_text(run.out_dir / "summary.txt", lines)
    return EXIT_OK if res.converged else EXIT_NONCONVERGED


def cmd_predict(run: RunConfig) -> int:
    data = _Data(run)
    agg = data.aggregate
    n0 = _split_index(run, agg.n_t, agg.t_s, 2.0 / 3.0)
    if n0 >= agg.n_t:
        raise ConfigError("no samples left for testing")
    lines = []
    converged = True
    if run.params_path is not None:
        theta = io.read_params_csv(run.params_path)
        t_w0 = agg.t_bar_z[n0]
        lines += ["[parameters]", f"source = {run.params_path}"]
    else:
        res, lines = _identify(run, data, n0)
        theta, converged = res.theta_hat, res.converged
        # carry the wall state across the split one Euler step
        u = agg.inputs[n0 - 1]
        x = np.array([agg.t_bar_z[n0 - 1], res.t_bar_w_hat[-1]])
        t_w0 = x[1] + agg.t_s * ((u[0] - x[1]) / theta.tau_wa + (x[0] - x[1]) / theta.tau_wz + theta.a_w * u[1])
        lines.append("")

    test = agg.slice(n0, agg.n_t)
    sources = {}
    if "q_int" in run.disturbances and test.q_bar_int is not None:
        sources["q_int"] = test.q_bar_int
    if "q_agg" in run.disturbances and data.q_bar_agg is not None:
        sources["q_agg"] = data.q_bar_agg[n0:]
    if not sources:
        raise io.DataError("no disturbance trace available for prediction")
    cols = {"T_bar_z": test.t_bar_z}
    lines += ["[prediction]", f"test_samples = {test.n_t}"]
    for name, d in sources.items():
        p = predict_out_of_sample(theta, test.inputs, d, (test.t_bar_z[0], t_w0), test.t_bar_z, test.t_s)
        cols[f"T_bar_z_pred_{name}"] = p.t_z
        lines.append(f"rmse_{name} = {p.rmse:.6g}")
    io.write_series_csv(run.out_dir / "prediction.csv", test.start_time, test.t_s, cols)
    io.write_text(run.out_dir / "summary.txt", lines)
    return EXIT_OK if converged else EXIT_NONCONVERGED


def cmd_variance_report(run: RunConfig) -> int:
    data = _Data(run)
    rep = variance_report(data.zones, window_hours=run.window_hours)
    cols = {}
    for kind in rep.kinds:
        cols[f"var_{kind}"] = rep.variance[kind]
        cols[f"windowed_var_{kind}"] = rep.windowed[kind]
    cols["asynchronicity_index"] = rep.index
    io.write_series_csv(run.out_dir / "variance.csv", data.zones.start_time, data.zones.t_s, cols)

    hours = np.mod(np.arange(data.zones.n_t) * data.zones.t_s + data.zones.start_time.hour, 24.0)
    day = (hours >= 8.0) & (hours < 18.0)
    lines = ["[variance report]", f"window_samples = {rep.window}", f"kinds = {','.join(rep.kinds)}"]
    if rep.kinds:
        lines.append(f"index_mean_day = {float(np.mean(rep.index[day])) if day.any() else float('nan'):.6g}")
        lines.append(f"index_mean_night = {float(np.mean(rep.index[~day])) if (~day).any() else float('nan'):.6g}")
    else:
        lines.append("index = undefined (fewer than two zones)")
    io.write_text(run.out_dir / "summary.txt", lines)
    return EXIT_OK


COMMANDS = {
    "simulate": cmd_simulate,
    "aggregate": cmd_aggregate,
    "identify": cmd_identify,
    "predict": cmd_predict,
    "variance-report": cmd_variance_report,
}


def make_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="aggtherm", description="Aggregate multi-zone thermal model identification.")
    p.add_argument("command", choices=list(COMMANDS))
    p.add_argument("--config", help="flat key=value configuration file")
    p.add_argument("--out", help="output directory (overrides output.dir)")
    p.add_argument("--seed", type=int, help="scenario seed (overrides scenario.seed)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        run = build_run_config(read_config(args.config), out_dir=args.out, seed=args.seed)
        run.out_dir.mkdir(parents=True, exist_ok=True)
        io.write_text(run.out_dir / "config.effective.txt", format_config(run.values))
        code = COMMANDS[args.command](run)
    except ConfigError as exc:
        print(f"aggtherm: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (io.DataError, OSError) as exc:
        print(f"aggtherm: data error: {exc}", file=sys.stderr)
        return EXIT_IO
    if code == EXIT_NONCONVERGED:
        print("aggtherm: identification did not converge; outputs written with converged = false", file=sys.stderr)
    return code


if __name__ == "__main__":
    sys.exit(main())
