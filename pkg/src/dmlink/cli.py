"""Command-line front end.

Subcommands mirror an operator workflow: calibrate a link and save the
report, transmit messages against a saved calibration, run batch error
experiments, serve the interactive console backend. Exit codes: 0 on
success, 1 on domain or config failures (bad scenario, rank-deficient
channel, non-ASCII text, bad modulation order), 2 when calibration itself
fails (an element below the measurement floor).
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .array_channel import MIN_SAMPLES_PER_SYMBOL
from .calibration import CalibrationError
from .exports import (calibration_report_doc, h_from_report,
                      load_calibration_report, write_bit_logs,
                      write_calibration_report, write_phase_csv,
                      write_stats_json, write_weights_csv)
from .experiments import (ExperimentConfig, positional_bit_errors,
                          run_experiment)
from .fec import ConstructionFailed, LengthMismatch, ldpc_build
from .link import SimulatedLink
from .modem import (DetectorConfig, DpskConfig, ModemError, async_detect,
                    format_bit_log, sync_detect, trace_from_stream,
                    uniform_boundaries)
from .precoder import RankDeficient, build_weight_stream
from .scenario import ScenarioError, builtin_names, load_scenario
from .transmission import build_frame, recover_message

FORMAT_VERSION = 1


def _detector_config(args) -> DetectorConfig:
    threshold = None
    if getattr(args, "threshold_scale", None) is not None:
        threshold = args.threshold_scale * np.pi / (1 << args.bits_per_symbol)
    return DetectorConfig(transition_threshold=threshold,
                          confirmation_window=args.confirmation_window,
                          refractory=args.refractory)


def _add_detector_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--detector", choices=("sync", "async"), default="async",
                   help="symbol recovery: known boundaries or transition events")
    p.add_argument("--threshold-scale", type=float, default=None,
                   help="async threshold as a multiple of the default pi/2^B")
    p.add_argument("--confirmation-window", type=int, default=3,
                   help="consecutive samples that confirm a transition")
    p.add_argument("--refractory", type=float, default=0.5,
                   help="post-event dead time, fraction of a symbol")


def _add_modulation_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--bits-per-symbol", type=int, default=1,
                   help="modulation order, 1..4")
    p.add_argument("--symbol-rate", type=float, default=1000.0)
    p.add_argument("--fec", action="store_true", help="enable LDPC coding")
    p.add_argument("--fec-seed", type=int, default=11)
    p.add_argument("--fec-n", type=int, default=816, help="LDPC block length")


def cmd_scenarios(args) -> int:
    for name in builtin_names():
        print(name)
    return 0


def cmd_calibrate(args) -> int:
    scenario = load_scenario(args.scenario)
    link = SimulatedLink(scenario, sample_rate=args.sample_rate)
    h_hat, csi, meas = link.run_calibration(window_samples=args.window)
    doc = calibration_report_doc(h_hat.entries, csi, meas, scenario,
                                 link.state_dict(), args.sample_rate, args.window)
    write_calibration_report(doc, args.out)
    print(f"calibrated {scenario.n_receivers} receiver(s) -> {args.out}")
    for n in range(scenario.n_receivers):
        mags = ", ".join(f"{m:.4g}" for m in csi.magnitudes[n])
        ths = ", ".join(f"{np.degrees(t):+.2f}" for t in np.atleast_2d(csi.theta)[n])
        print(f"rx {n + 1}: |h| = [{mags}]  theta_deg = [{ths}]")
    return 0


def _collect_messages(args) -> list[str]:
    if args.message and (args.msg1 is not None or args.msg2 is not None):
        raise ValueError("use either --message or --msg1/--msg2, not both")
    if args.message:
        return list(args.message)
    return [m for m in (args.msg1, args.msg2) if m is not None]


def cmd_transmit(args) -> int:
    report = load_calibration_report(args.calibration)
    scenario = _scenario_from_report(report)
    link = SimulatedLink(scenario, sample_rate=float(report["sample_rate"]))
    link.restore_state(report["link_state"])
    h_hat = h_from_report(report)
    messages = _collect_messages(args)
    if len(messages) != scenario.n_receivers:
        raise ModemError(f"got {len(messages)} message(s) for "
                         f"{scenario.n_receivers} receiver(s)")
    if link.sample_rate < MIN_SAMPLES_PER_SYMBOL * args.symbol_rate:
        raise ValueError(
            f"sample rate {link.sample_rate:g} gives fewer than "
            f"{MIN_SAMPLES_PER_SYMBOL} samples per symbol at {args.symbol_rate:g} Bd")
    config = DpskConfig(args.bits_per_symbol, args.symbol_rate)
    fec = ldpc_build(args.fec_seed, args.fec_n) if args.fec else None
    frame = build_frame(messages, config, fec, terminator=True)
    weights = build_weight_stream(h_hat, frame.phases, config.symbol_duration)
    start_time = link.sim_time
    stream = link.transmit(weights)
    traces = trace_from_stream(stream)
    detector = _detector_config(args)

    out = Path(args.out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_weights_csv(weights, out / "weights.csv")
    for trace in traces:
        write_phase_csv([trace], out / f"phase_rx{trace.receiver + 1}.csv")

    channels = []
    for ch in range(scenario.n_receivers):
        if args.detector == "sync":
            edges = uniform_boundaries(traces[ch].phases.size, frame.n_symbols + 1)
            detected = sync_detect(traces[ch], config, edges)
        else:
            detected = async_detect(traces[ch], config, detector)
        rec = recover_message(detected, frame)
        errors = positional_bit_errors(frame.message_bits[ch], rec.message_bits)
        log_path = out / f"bits_rx{ch + 1}.log"
        log_path.write_text(format_bit_log(frame.wire_bits[ch], rec.wire_bits))
        channels.append({
            "receiver": ch + 1,
            "sent": frame.texts[ch],
            "decoded": rec.text,
            "bit_errors": errors,
            "message_bits": int(frame.message_bits.shape[1]),
            "anomalies": list(rec.anomalies),
            "fec_converged": rec.fec_converged,
        })
        status = "ok" if errors == 0 else f"{errors} bit error(s)"
        print(f"rx {ch + 1}: {rec.text!r}  [{status}]")

    summary = {
        "format_version": FORMAT_VERSION,
        "start_time_s": start_time,
        "end_time_s": link.sim_time,
        "bits_per_symbol": args.bits_per_symbol,
        "symbol_rate": args.symbol_rate,
        "detector": args.detector,
        "fec": bool(args.fec),
        "wire_bits_per_channel": int(frame.wire_bits.shape[1]),
        "channels": channels,
    }
    (out / "transmit.json").write_text(json.dumps(summary, indent=2, sort_keys=True) + "\n")

    # persist the advanced clock/seed cursor so the next transmit against
    # this report sees fresh noise, exactly like a long-lived service would
    report["link_state"] = link.state_dict()
    write_calibration_report(report, args.calibration)
    return 0


def _scenario_from_report(report: dict):
    from .scenario import scenario_from_dict
    return scenario_from_dict(report["scenario"])


def cmd_ber(args) -> int:
    scenario = load_scenario(args.scenario)
    cfg = ExperimentConfig(
        scenario=scenario,
        num_messages=args.messages,
        chars_per_message=args.chars,
        bits_per_symbol=args.bits_per_symbol,
        fec_enabled=args.fec,
        detector=args.detector,
        master_seed=args.seed,
        symbol_rate=args.symbol_rate,
        sample_rate=args.sample_rate,
        detector_config=_detector_config(args),
        calibration_window=args.calibration_window,
        fec_seed=args.fec_seed,
        fec_n=args.fec_n,
        keep_bit_logs=args.bit_log_dir is not None,
        classify=not args.no_classify,
    )
    result = run_experiment(cfg)
    total_bits = cfg.num_messages * 8 * cfg.chars_per_message
    print(f"{cfg.num_messages} message(s) x {cfg.chars_per_message} chars, "
          f"B={cfg.bits_per_symbol}, detector={cfg.detector}, "
          f"fec={'on' if cfg.fec_enabled else 'off'}, seed={cfg.master_seed}")
    for ch, stats in enumerate(result.per_channel):
        line = (f"rx {ch + 1}: {stats.total_bit_errors}/{total_bits} bit errors"
                f"  percent {stats.percent_2dp:.2f}"
                f"  mean/message {stats.mean_2dp:.2f}"
                f"  std {stats.std_2dp:.2f}")
        if cfg.classify:
            b = result.breakdown[ch]
            line += f"  (sub {b.substitutions} / del {b.deletions} / ins {b.insertions})"
        print(line)
    if args.stats:
        write_stats_json(result, args.stats)
        print(f"stats -> {args.stats}")
    if args.bit_log_dir:
        written = write_bit_logs(result, args.bit_log_dir)
        print(f"{len(written)} bit log(s) -> {args.bit_log_dir}")
    return 0


def cmd_serve(args) -> int:
    import uvicorn

    from .service import create_app

    scenario = load_scenario(args.scenario)
    app = create_app(scenario, sample_rate=args.sample_rate, pace_s=args.pace)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dmlink",
        description="Directional-modulation link simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("scenarios", help="list built-in scenarios")
    p.set_defaults(func=cmd_scenarios)

    p = sub.add_parser("calibrate", help="run amplitude-only calibration")
    p.add_argument("--scenario", required=True,
                   help="scenario JSON path or built-in name")
    p.add_argument("--out", default="calibration.json",
                   help="calibration report path")
    p.add_argument("--sample-rate", type=float, default=16000.0)
    p.add_argument("--window", type=int, default=256,
                   help="samples per probe measurement")
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("transmit", help="send one message per receiver")
    p.add_argument("--calibration", required=True,
                   help="report produced by the calibrate command")
    p.add_argument("--message", action="append", default=None,
                   help="one per receiver, in receiver order (repeatable)")
    p.add_argument("--msg1", default=None, help="message for receiver 1")
    p.add_argument("--msg2", default=None, help="message for receiver 2")
    p.add_argument("--out-dir", default="transmit_out")
    _add_modulation_args(p)
    _add_detector_args(p)
    p.set_defaults(func=cmd_transmit)

    p = sub.add_parser("ber", help="batch bit-error experiment")
    p.add_argument("--scenario", required=True)
    p.add_argument("--messages", type=int, default=100)
    p.add_argument("--chars", type=int, default=100)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sample-rate", type=float, default=16000.0)
    p.add_argument("--calibration-window", type=int, default=256)
    p.add_argument("--stats", default=None, help="write stats JSON here")
    p.add_argument("--bit-log-dir", default=None,
                   help="write per-message tx/rx bit logs here")
    p.add_argument("--no-classify", action="store_true",
                   help="skip the edit-distance error breakdown")
    _add_modulation_args(p)
    _add_detector_args(p)
    p.set_defaults(func=cmd_ber)

    p = sub.add_parser("serve", help="run the HTTP/WebSocket console backend")
    p.add_argument("--scenario", default="default")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--sample-rate", type=float, default=16000.0)
    p.add_argument("--pace", type=float, default=0.005,
                   help="wall-clock seconds per replayed symbol on /stream")
    p.set_defaults(func=cmd_serve)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except CalibrationError as exc:
        print(f"calibration failed: {exc}", file=sys.stderr)
        return 2
    except (ScenarioError, RankDeficient, ModemError, ConstructionFailed,
            LengthMismatch, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
