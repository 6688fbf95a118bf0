"""Command-line surface over the data, training, and simulation stages.

Exit codes: 0 success, 1 runtime failure (including an invalid config
file, reported with the offending field), 2 usage error.  Artifacts
carry no timestamps, so a subcommand rerun with the same config and
seed reproduces its output directory byte for byte.
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, RunConfig, default_config, load_config
from .model import (NetConfig, SpectralNet, TaskHead, finetune_joint,
                    pretrain_spectral, save_training_log,
                    spectral_correlations)
from .mppi import MppiConfig, plan_to_goal, path_length, patch_occupancy, \
    write_trajectory_csv
from .gridworld import render_ppm
from .pipeline import (WheeledReport, WheeledRun, benchmark_inference,
                       make_crossing_world, monte_carlo_quad,
                       write_quad_episode_csv, write_wheeled_csv)
from .quadruped import MpcConfig, SimConfig, run_episode, write_campaign_csv, \
    write_trace_csv
from .synth import (WavelengthGrid, default_class_table, gen_dataset,
                    load_dataset, save_class_table, save_dataset)
from .weights_io import load_weights, save_weights


def _grid(cfg: RunConfig) -> WavelengthGrid:
    return WavelengthGrid(cfg.spectral.wavelength_start,
                          cfg.spectral.wavelength_end, cfg.spectral.bands)


def _net_config(cfg: RunConfig) -> NetConfig:
    return NetConfig(input_size=cfg.spectral.patch_size,
                     n_bands=cfg.spectral.bands, alpha=cfg.train.alpha,
                     dropout_rate=cfg.train.dropout)


def cmd_gen_data(args, cfg: RunConfig, out: Path) -> int:
    table = default_class_table()
    ds = gen_dataset(table, cfg.data.n_per_class, seed=args.seed,
                     grid=_grid(cfg), size=cfg.spectral.patch_size)
    target = out / "dataset"
    save_dataset(ds, target)
    save_class_table(table, target / "class_table.json")
    print(f"dataset: {len(ds.train)} train / {len(ds.val)} val / "
          f"{len(ds.test)} test / {len(ds.heldout)} held-out -> {target}")
    return 0


def cmd_train(args, cfg: RunConfig, out: Path) -> int:
    data_dir = Path(args.data) if args.data else out / "dataset"
    ds = load_dataset(data_dir)
    net_cfg = _net_config(cfg)
    model = SpectralNet(net_cfg, seed=args.seed)
    log = pretrain_spectral(model, ds.train, epochs=cfg.train.pretrain_epochs,
                            seed=args.seed, lr=cfg.train.lr)
    if log:
        save_training_log(log, out / "pretrain_log.csv")
    snapshot = out / "weights-pretrained.rsnw"
    save_weights(snapshot, model)
    print(f"pretrained backbone -> {snapshot}")

    kinds = (("regression", "classification") if args.head == "both"
             else (args.head,))
    for kind in kinds:
        # Each head gets its own joint run from the pretrained snapshot;
        # finetuning the same backbone twice would undo the first task.
        net, _ = load_weights(snapshot)
        head = TaskHead(kind, net_cfg.n_bands, head_dims=net_cfg.head_dims,
                        n_classes=max(2, len(ds.class_names)),
                        dropout_rate=cfg.train.dropout, seed=args.seed)
        log = finetune_joint(net, head, ds.train, ds.class_names,
                             alpha=cfg.train.alpha,
                             epochs=cfg.train.finetune_epochs,
                             seed=args.seed, lr=cfg.train.lr)
        if log:
            save_training_log(log, out / f"train_log-{kind}.csv")
        path = out / f"weights-{kind}.rsnw"
        save_weights(path, net, {kind: head})
        print(f"{kind} head -> {path}")
    return 0


def cmd_eval_spectral(args, cfg: RunConfig, out: Path) -> int:
    data_dir = Path(args.data) if args.data else out / "dataset"
    ds = load_dataset(data_dir)
    model, _ = load_weights(args.weights)
    lines = []
    for split in ("test", "heldout"):
        samples = getattr(ds, split)
        by_class: dict = {}
        for s in samples:
            by_class.setdefault(s.class_name, []).append(s)
        for name in sorted(by_class):
            corr = spectral_correlations(model, by_class[name])
            lines.append((split, name, len(corr), float(corr.mean())))
    with open(out / "spectral_eval.csv", "w", newline="") as fh:
        fh.write("split,class,n,mean_pearson\n")
        for split, name, n, r in lines:
            fh.write(f"{split},{name},{n},{r:.17g}\n")
    for split, name, n, r in lines:
        print(f"{split:8s} {name:10s} n={n:<4d} pearson={r:.4f}")
    return 0


def cmd_sim_quad(args, cfg: RunConfig, out: Path) -> int:
    table = default_class_table()
    if args.terrain not in table:
        print(f"error: unknown terrain {args.terrain!r}; choose from "
              f"{sorted(table)}", file=sys.stderr)
        return 1
    mu_true = table[args.terrain].friction
    sim = SimConfig(sim_dt=cfg.quad.sim_dt)
    rows = []
    for variant, mu_c in (("informed", mu_true), ("fixed", cfg.quad.mu_fixed)):
        mpc = MpcConfig(mu=mu_c, dt=cfg.quad.mpc_dt, horizon=cfg.quad.horizon)
        res = run_episode(mu_true, mu_c, duration=cfg.quad.duration,
                          seed=args.seed, config=mpc, sim=sim)
        write_trace_csv(out / f"trace-{variant}.csv", res.trace)
        m = res.metrics
        rows.append((variant, mu_c, m))
        print(f"{variant:9s} mu={mu_c:.3f} success={m.success} "
              f"min_h={m.min_height:.3f} slip={m.slippage:.4f}")
    with open(out / "episode_metrics.csv", "w", newline="") as fh:
        fh.write("variant,mu_true,mu_controller,success,min_height,"
                 "slippage,tracking,effort\n")
        for variant, mu_c, m in rows:
            fh.write(f"{variant},{mu_true:.17g},{mu_c:.17g},"
                     f"{int(m.success)},{m.min_height:.17g},"
                     f"{m.slippage:.17g},{m.tracking:.17g},"
                     f"{m.effort:.17g}\n")
    return 0


def cmd_sim_mppi(args, cfg: RunConfig, out: Path) -> int:
    m = cfg.mppi
    mcfg = MppiConfig(n_samples=m.n_samples, horizon=m.horizon, dt=m.dt,
                      max_linear=m.max_linear, max_angular=m.max_angular,
                      temperature=m.temperature, noise_frac=m.noise_frac)
    # Ground-truth cost layer: the planner-only protocol needs no model.
    truth = make_crossing_world(0.1, patch_cost=1.0)
    worlds = {"baseline": make_crossing_world(0.1), "terrain-aware": truth}
    runs, results = [], {}
    for condition in ("baseline", "terrain-aware"):
        result = plan_to_goal(worlds[condition], mcfg,
                              max_steps=args.max_steps, seed=args.seed)
        results[condition] = result
        runs.append(WheeledRun(
            condition=condition, reached=result.reached,
            time_to_goal=result.elapsed,
            path_length=path_length(result.trajectory),
            occupancy=patch_occupancy(truth, result.trajectory),
        ))
        write_trajectory_csv(out / f"trajectory-{condition}.csv", result)
        render_ppm(out / f"world-{condition}.ppm", worlds[condition],
                   trajectory=result.trajectory)
        print(f"{condition:13s} reached={result.reached} "
              f"t={result.elapsed:.2f}s occupancy={runs[-1].occupancy:.3f}")
    write_wheeled_csv(out / "wheeled.csv", WheeledReport(runs, {}, results))
    return 0


def cmd_monte_carlo(args, cfg: RunConfig, out: Path) -> int:
    episodes = 1000 if args.full else (args.episodes or
                                       cfg.campaign.episodes)
    model = head = None
    if args.weights:
        model, heads = load_weights(args.weights)
        head = heads.get("regression")
        if head is None:
            print(f"error: {args.weights} holds no regression head",
                  file=sys.stderr)
            return 1
    report = monte_carlo_quad(
        episodes=episodes, seed=args.seed, duration=cfg.quad.duration,
        mu_fixed=cfg.quad.mu_fixed, model=model, head=head,
        sim=SimConfig(sim_dt=cfg.quad.sim_dt),
        input_size=cfg.spectral.patch_size)
    write_quad_episode_csv(out / "episodes.csv", report.episodes)
    write_campaign_csv(out / "campaign.csv", report.summary)
    for r in report.summary:
        print(f"{r.variant:9s} n={r.n_episodes:<5d} "
              f"success={r.success_rate:.3f} slip={r.slippage:.4f} "
              f"tracking={r.tracking:.3f} effort={r.effort:.3f}")
    return 0


def cmd_bench(args, cfg: RunConfig, out: Path) -> int:
    if args.weights:
        model, heads = load_weights(args.weights)
        head = heads.get("regression")
        if head is None:
            print(f"error: {args.weights} holds no regression head",
                  file=sys.stderr)
            return 1
    else:
        net_cfg = _net_config(cfg)
        model = SpectralNet(net_cfg, seed=args.seed)
        head = TaskHead("regression", net_cfg.n_bands,
                        head_dims=net_cfg.head_dims,
                        dropout_rate=cfg.train.dropout, seed=args.seed)
        print("note: timing untrained weights (pass --weights for a "
              "trained model; throughput is identical)")
    rep = benchmark_inference(model, head, n_patches=args.patches,
                              input_size=cfg.spectral.patch_size)
    print(f"patches={rep.n_patches} frames/s={rep.frames_per_second:.2f} "
          f"patches/s={rep.patches_per_second:.2f} "
          f"single-frame={rep.single_frame_seconds * 1e3:.1f}ms")
    return 0


def _add_global_flags(parser, root: bool) -> None:
    # Duplicated on every subparser so the flags work both before and
    # after the subcommand name; SUPPRESS keeps a subparser from
    # clobbering a value parsed at the root level.
    def default(value):
        return value if root else argparse.SUPPRESS

    parser.add_argument("--config", metavar="PATH", default=default(None),
                        help="INI run configuration (see specnav.config)")
    parser.add_argument("--seed", type=int, default=default(0),
                        help="seed for all sampled quantities (default 0)")
    parser.add_argument("--out", metavar="DIR", default=default("out"),
                        help="artifact directory (default ./out)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="specnav",
        description="Spectral terrain perception with planning consumers.")
    _add_global_flags(parser, root=True)
    sub = parser.add_subparsers(dest="command", required=True,
                                metavar="subcommand")

    p = sub.add_parser("gen-data", help="render the synthetic dataset")
    _add_global_flags(p, root=False)
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", help="pretrain and joint-finetune the model")
    _add_global_flags(p, root=False)
    p.add_argument("--data", metavar="DIR",
                   help="dataset directory (default OUT/dataset)")
    p.add_argument("--head", choices=("both", "regression", "classification"),
                   default="both", help="task heads to finetune")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval-spectral",
                       help="per-class spectral correlation report")
    _add_global_flags(p, root=False)
    p.add_argument("--data", metavar="DIR")
    p.add_argument("--weights", metavar="FILE", required=True)
    p.set_defaults(handler=cmd_eval_spectral)

    p = sub.add_parser("sim-quad", help="one paired trot episode")
    _add_global_flags(p, root=False)
    p.add_argument("--terrain", default="ice",
                   help="material under the robot (default ice)")
    p.set_defaults(handler=cmd_sim_quad)

    p = sub.add_parser("sim-mppi",
                       help="baseline vs terrain-aware planner runs")
    _add_global_flags(p, root=False)
    p.add_argument("--max-steps", type=int, default=400)
    p.set_defaults(handler=cmd_sim_mppi)

    p = sub.add_parser("monte-carlo", help="paired-variant trot campaign")
    _add_global_flags(p, root=False)
    p.add_argument("--episodes", type=int,
                   help="override campaign.episodes from the config")
    p.add_argument("--full", action="store_true",
                   help="run the full 1000-episode protocol")
    p.add_argument("--weights", metavar="FILE",
                   help="regression weights; the informed variant then "
                        "walks on estimated friction")
    p.set_defaults(handler=cmd_monte_carlo)

    p = sub.add_parser("bench", help="segment-then-predict throughput")
    _add_global_flags(p, root=False)
    p.add_argument("--patches", type=int, default=6)
    p.add_argument("--weights", metavar="FILE")
    p.set_defaults(handler=cmd_bench)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = load_config(args.config) if args.config else default_config()
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        return args.handler(args, cfg, out)
    except Exception as exc:  # CLI boundary: map any failure to exit 1
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
