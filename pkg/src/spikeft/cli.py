"""
Command line front end.

    spikeft synth  --scenario S1 --out s1.csv
    spikeft run    --arch sfft --n 1024 --steps 257 --quantized --in s1.csv --out spec.csv
    spikeft sweep  --n 64,256,1024 --steps 129,257,513
    spikeft cost   --arch sdft --n 1024 --steps 75
    spikeft rdmap  --scenario dynamic --velocity 1.0

Any flag can also come from a JSON file passed with --config; flags given on
the command line win. Relative output paths are resolved against --out-dir,
then $SFT_OUTPUT_DIR, then the working directory.
"""
import argparse
import csv
import json
import logging
import os
import sys
from dataclasses import asdict, dataclass, field, replace

from . import costmodel, evaluate
from .errors import SpikeFTError, UsageError
from .signal import (SCENARIOS, RadarConfig, Target, load_frame, load_signal, save_frame,
                     save_signal, scenario, synthesize_chirp, synthesize_frame)

log = logging.getLogger("spikeft")

ENV_OUTPUT_DIR = "SFT_OUTPUT_DIR"
DYNAMIC = "dynamic"

EXIT_OK, EXIT_FAILURE, EXIT_USAGE, EXIT_IO = 0, 1, 2, 3


@dataclass
class RunConfig:
    """Resolved settings of one invocation, serialisable as a run manifest."""
    command: str
    architecture: str = None
    n: int = None
    n_T: int = None
    scenario: str = None
    quantized: bool = False
    seed: int = 0
    outputs: dict = field(default_factory=dict)
    hardware: dict = field(default_factory=dict)

    def to_json(self):
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls(**json.loads(text))


def _int_list(value):
    if isinstance(value, (list, tuple)):
        return [int(v) for v in value]
    try:
        return [int(v) for v in str(value).split(",") if v.strip()]
    except ValueError:
        raise UsageError(f"expected a comma separated list of integers, got {value!r}") from None


def _str_list(value):
    if isinstance(value, (list, tuple)):
        return [str(v) for v in value]
    return [v.strip() for v in str(value).split(",") if v.strip()]


def _steps(value):
    n_t = int(value)
    if n_t < 2:
        raise argparse.ArgumentTypeError(f"steps per stage must be >= 2, got {n_t}")
    return n_t


def _arch(value):
    v = str(value).upper().replace("-", "")
    if v not in ("SDFT", "SFFT"):
        raise argparse.ArgumentTypeError(f"architecture must be sdft or sfft, got {value!r}")
    return v


def _common():
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="JSON file supplying defaults for any flag")
    p.add_argument("--out-dir", help=f"directory for relative outputs (default ${ENV_OUTPUT_DIR} or .)")
    p.add_argument("--save-config", metavar="PATH", help="write the resolved run manifest as JSON")
    p.add_argument("-v", "--verbose", action="count", default=0)
    return p


def build_parser():
    common = _common()
    parser = argparse.ArgumentParser(prog="spikeft", description="Spiking Fourier transform experiments.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", parents=[common], help="synthesize a radar chirp or frame")
    p.add_argument("--scenario", default="S1", help="S1..S4 or 'dynamic'")
    p.add_argument("--n", type=int, help="samples per chirp (default: largest power of 4 that fits)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--range", type=float, default=10.0, help="dynamic target range in m")
    p.add_argument("--velocity", type=float, default=1.0, help="dynamic target velocity in m/s")
    p.add_argument("--frame", action="store_true", help="write all chirps of one frame")
    p.add_argument("--chirps", type=int, help="chirps per frame")
    p.add_argument("--format", choices=["csv", "f32"], default="csv")
    p.add_argument("--out")

    p = sub.add_parser("run", parents=[common], help="run a spiking network on one chirp")
    p.add_argument("--arch", type=_arch, default="SFFT")
    p.add_argument("--n", type=int)
    p.add_argument("--steps", type=_steps, default=257)
    p.add_argument("--quantized", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--mode", choices=["stepped", "continuous"], default="stepped")
    p.add_argument("--in", dest="input", help="input signal file")
    p.add_argument("--format", choices=["csv", "f32"], default=None, help="input format (default from suffix)")
    p.add_argument("--scenario", help="synthesize the input instead of reading it")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--out", default="spectrum.csv")
    p.add_argument("--report", help="JSON evaluation report path")

    p = sub.add_parser("sweep", parents=[common], help="RMSE over sizes and steps per stage")
    p.add_argument("--arch", type=_arch, default="SFFT")
    p.add_argument("--n", default="64,256,1024")
    p.add_argument("--steps", default="65,129,257,513")
    p.add_argument("--scenarios", default=",".join(SCENARIOS))
    p.add_argument("--quantized", action=argparse.BooleanOptionalAction, default=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--out", default="sweep.csv")

    p = sub.add_parser("cost", parents=[common], help="energy, timing and power estimate")
    p.add_argument("--arch", default="both", help="sdft, sfft or both")
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--steps", type=int, default=75)
    p.add_argument("--spike-energy-pj", type=float)
    p.add_argument("--neuron-energy-pj", type=float)
    p.add_argument("--spike-time-ns", type=float)
    p.add_argument("--neuron-time-ns", type=float)
    p.add_argument("--cores", type=int)
    p.add_argument("--spike-profile", choices=sorted(costmodel.ALTERNATIVE_SPIKE_ENERGY_PJ),
                   help="replace the per-spike energy by another chip's figure")
    p.add_argument("--out", help="JSON report path")

    p = sub.add_parser("rdmap", parents=[common], help="spiking range-Doppler map of one frame")
    p.add_argument("--scenario", default=DYNAMIC)
    p.add_argument("--in", dest="input", help="frame CSV written by 'synth --frame'")
    p.add_argument("--range", type=float, default=10.0)
    p.add_argument("--velocity", type=float, default=1.0)
    p.add_argument("--n", type=int)
    p.add_argument("--chirps", type=int)
    p.add_argument("--steps", type=_steps, default=257)
    p.add_argument("--arch", type=_arch, default="SFFT", help="range transform architecture")
    p.add_argument("--quantized", action=argparse.BooleanOptionalAction, default=False)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--noise", type=float, default=0.01)
    p.add_argument("--out", default="rdmap.csv")
    return parser, sub.choices


def parse_args(argv):
    parser, subparsers = build_parser()
    args = parser.parse_args(argv)
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot read config {args.config}: {exc}") from None
        if not isinstance(cfg, dict):
            raise UsageError("config file must hold a JSON object")
        sp = subparsers[args.command]
        known = {a.dest for a in sp._actions}
        cfg = {k.replace("-", "_"): v for k, v in cfg.items() if k != "command"}
        cfg = {("input" if k == "in" else k): v for k, v in cfg.items()}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise UsageError(f"unknown config keys for '{args.command}': {', '.join(unknown)}")
        # string values still go through the flag's type conversion
        for action in sp._actions:
            if action.dest in cfg and isinstance(cfg[action.dest], str) and action.type:
                cfg[action.dest] = action.type(cfg[action.dest])
        sp.set_defaults(**cfg)
        args = parser.parse_args(argv)
    return args


def out_path(args, name):
    if name is None or os.path.isabs(name):
        return name
    base = args.out_dir or os.environ.get(ENV_OUTPUT_DIR) or "."
    os.makedirs(base, exist_ok=True)
    return os.path.join(base, name)


def _radar(args):
    cfg = RadarConfig()
    if getattr(args, "chirps", None):
        cfg = replace(cfg, chirps_per_frame=args.chirps)
    if args.n:
        cfg = cfg.with_samples(args.n)
    return cfg


def _targets(args, cfg):
    if args.scenario == DYNAMIC:
        return [Target(args.range, args.velocity, 1.0)]
    if args.scenario not in SCENARIOS:
        raise UsageError(f"unknown scenario {args.scenario!r}, expected S1..S4 or {DYNAMIC}")
    return scenario(args.scenario, cfg, args.seed)


def cmd_synth(args):
    cfg = _radar(args)
    targets = _targets(args, cfg)
    print(f"{'range_m':>9} {'velocity_mps':>12} {'amplitude':>9} {'range_bin':>9}")
    for t in targets:
        print(f"{t.range:9.3f} {t.radial_velocity:12.3f} {t.amplitude:9.3f} {cfg.range_bin(t.range):9d}")
    if args.frame:
        path = out_path(args, args.out or f"{args.scenario}_frame.csv")
        save_frame(synthesize_frame(cfg, targets, args.noise, args.seed), path)
        print(f"wrote {cfg.chirps_per_frame} chirps x {cfg.samples_per_chirp} samples to {path}")
    else:
        path = out_path(args, args.out or f"{args.scenario}.{args.format}")
        save_signal(synthesize_chirp(cfg, targets, args.noise, args.seed), path, args.format)
        print(f"wrote {cfg.samples_per_chirp} samples to {path}")
    return {"signal": path}


def _input_signal(args):
    if args.input:
        fmt = args.format or ("f32" if args.input.endswith((".f32", ".bin")) else "csv")
        sig = load_signal(args.input, fmt)
        if args.n and len(sig) != args.n:
            raise UsageError(f"input holds {len(sig)} samples but --n is {args.n}")
        return sig
    if not args.scenario:
        raise UsageError("run needs --in FILE or --scenario NAME")
    cfg = _radar(args)
    return synthesize_chirp(cfg, _targets(args, cfg), args.noise, args.seed)


def cmd_run(args):
    sig = _input_signal(args)
    builder = evaluate.plan_builder(args.arch, args.quantized)
    report, result, exact = evaluate.evaluate_signal(
        sig, args.arch, args.steps, args.quantized, args.mode, args.scenario or args.input or "input",
        builder=builder)
    path = out_path(args, args.out)
    evaluate.write_spectrum_csv(path, result.spectrum, exact, sig.is_real)
    outputs = {"spectrum": path}
    if args.report:
        outputs["report"] = out_path(args, args.report)
        report.to_json(outputs["report"])
    print(f"{report.architecture} n={report.n_bins} n_T={report.n_T} mode={report.mode} "
          f"quantized={'yes' if report.quantized else 'no'} rmse={report.rmse:.6g} "
          f"peak_bin={report.peak_bin} oracle_peak_bin={report.oracle_peak_bin} "
          f"missing={report.missing_spikes} clamped={report.clamped}")
    return outputs


def cmd_sweep(args):
    n_list, steps_list = _int_list(args.n), _int_list(args.steps)
    for n_t in steps_list:
        _steps(n_t)
    scen = _str_list(args.scenarios)
    bad = [s for s in scen if s not in SCENARIOS]
    if bad:
        raise UsageError(f"unknown scenarios: {', '.join(bad)}")
    table = evaluate.sweep_steps(evaluate.plan_builder(args.arch, args.quantized), scen,
                                 steps_list, n_list, args.seed, args.noise)
    path = out_path(args, args.out)
    table.write_csv(path)
    for n, n_t, r in table.rows:
        print(f"n={n:5d} n_T={n_t:4d} rmse={r:.6f}")
    print(f"rmse decreased on {table.trend:.0%} of step doublings; table in {path}")
    return {"table": path}


def _profile(args):
    prof = costmodel.HardwareProfile()
    if args.spike_profile:
        prof = prof.with_spike_energy(args.spike_profile)
    over = {}
    if args.spike_energy_pj is not None:
        over["energy_per_spike"] = args.spike_energy_pj * costmodel.PJ
    if args.neuron_energy_pj is not None:
        over["energy_per_neuron_step"] = args.neuron_energy_pj * costmodel.PJ
    if args.spike_time_ns is not None:
        over["time_per_spike"] = args.spike_time_ns * costmodel.NS
    if args.neuron_time_ns is not None:
        over["time_per_neuron_step"] = args.neuron_time_ns * costmodel.NS
    if args.cores is not None:
        over["cores"] = args.cores
    return replace(prof, **over)


def cmd_cost(args):
    kinds = ["SDFT", "SFFT"] if str(args.arch).lower() == "both" else [_arch(args.arch)]
    prof = _profile(args)
    reports = [costmodel.estimate(k, args.n, args.steps, prof) for k in kinds]
    print(f"{'':24}" + "".join(f"{r.kind:>12}" for r in reports))
    for i, (label, _, unit) in enumerate(reports[0].rows()):
        vals = [r.rows()[i][1] for r in reports]
        cells = "".join(f"{v:>12d}" if isinstance(v, int) else f"{v:>12.4g}" for v in vals)
        print(f"{label + (' (' + unit + ')' if unit else ''):24}{cells}")
    comparisons = {}
    for r in reports:
        comparisons[r.kind] = [asdict(c) for c in costmodel.compare_accelerators(r)]
        for c in costmodel.compare_accelerators(r):
            print(f"{r.kind} vs {c.accelerator}: energy x{c.energy_ratio:.0f}, "
                  f"latency x{c.latency_ratio:.1f}, frame period x{c.period_ratio:.1f}")
    outputs = {}
    if args.out:
        outputs["report"] = out_path(args, args.out)
        with open(outputs["report"], "w") as fh:
            json.dump({"reports": [r.to_dict() for r in reports], "comparisons": comparisons,
                       "profile": asdict(prof)}, fh, indent=2)
            fh.write("\n")
    return outputs


def cmd_rdmap(args):
    if args.input:
        frame = load_frame(args.input)
        cfg = None
    else:
        cfg = _radar(args)
        frame = synthesize_frame(cfg, _targets(args, cfg), args.noise, args.seed)
    res = evaluate.range_doppler(frame, evaluate.plan_builder(args.arch, args.quantized),
                                 steps_per_stage=args.steps)
    path = out_path(args, args.out)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["range_bin", "doppler_bin", "snn_mag", "oracle_mag"])
        for i in range(res.magnitude.shape[0]):
            for j in range(res.magnitude.shape[1]):
                w.writerow([i, j, f"{res.magnitude[i, j]:.9g}", f"{res.oracle_magnitude[i, j]:.9g}"])
    stem = os.path.splitext(path)[0]
    rc, dc = stem + "_range_cut.csv", stem + "_doppler_cut.csv"
    evaluate.write_spectrum_csv(rc, res.range_cut, res.oracle_range_cut, real_input=False)
    evaluate.write_spectrum_csv(dc, res.doppler_cut, res.oracle_doppler_cut, real_input=False)
    n_chirps = res.magnitude.shape[1]
    line = (f"peak (range_bin, doppler_bin): snn={res.peak} oracle={res.oracle_peak} "
            f"match={'yes' if res.peak == res.oracle_peak else 'no'}")
    if cfg is not None:
        d = evaluate.doppler_index(res.peak[1], n_chirps)
        line += (f"; {res.peak[0] * cfg.bin_range_resolution:.2f} m, "
                 f"{d * cfg.velocity_resolution:.3f} m/s")
    print(line)
    return {"map": path, "range_cut": rc, "doppler_cut": dc}


COMMANDS = {"synth": cmd_synth, "run": cmd_run, "sweep": cmd_sweep, "cost": cmd_cost, "rdmap": cmd_rdmap}


def run_config(args, outputs=None):
    hw = {}
    if args.command == "cost":
        hw = {k: getattr(args, k) for k in ("spike_energy_pj", "neuron_energy_pj", "spike_time_ns",
                                            "neuron_time_ns", "cores", "spike_profile")
              if getattr(args, k) is not None}
    arch = getattr(args, "arch", None)
    n = getattr(args, "n", None)
    return RunConfig(
        command=args.command, architecture=str(arch) if arch is not None else None,
        n=n if isinstance(n, int) else None, n_T=getattr(args, "steps", None)
        if isinstance(getattr(args, "steps", None), int) else None,
        scenario=getattr(args, "scenario", None), quantized=bool(getattr(args, "quantized", False)),
        seed=getattr(args, "seed", 0), outputs=outputs or {}, hardware=hw)


def main(argv=None):
    try:
        args = parse_args(argv)
    except UsageError as exc:
        print(f"spikeft: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # argparse already printed the message
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    logging.basicConfig(level=logging.WARNING - 10 * min(args.verbose, 2),
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        outputs = COMMANDS[args.command](args)
        if args.save_config:
            with open(out_path(args, args.save_config), "w") as fh:
                fh.write(run_config(args, outputs).to_json() + "\n")
    except (UsageError, argparse.ArgumentTypeError) as exc:
        print(f"spikeft: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SpikeFTError as exc:
        print(f"spikeft: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_FAILURE
    except OSError as exc:
        print(f"spikeft: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
