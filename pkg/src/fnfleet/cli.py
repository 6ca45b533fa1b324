"""Command-line front door.

Subcommands: serve (control plane), agent (device agent), scenario run,
bench deploy, inspect. Exit codes: 0 success, 1 assertion failure,
2 usage/config error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from .errors import ConfigError, ScenarioError, ValidationError

USAGE_ERROR = 2
ASSERTION_ERROR = 1


def _cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .api import create_app
    from .config import load_api_config
    from .plane import ControlPlane
    from .storage import JournalStore

    cfg = load_api_config(args.config)
    store = JournalStore(cfg.storage)
    if cfg.transport == "ssh":
        from .sshtransport import CredentialStore, SshTransport

        if not cfg.credentials_file:
            raise ConfigError("ssh transport requires credentials_file")
        transport = SshTransport(CredentialStore.load(cfg.credentials_file))
    else:
        from .transport import InMemoryNetwork, InMemoryTransport

        transport = InMemoryTransport(InMemoryNetwork())
    plane = ControlPlane(store=store, transport=transport, notifier_url=cfg.notifier_url)
    app = create_app(plane, cfg.admin_token)
    host, port = cfg.listen.rsplit(":", 1)
    try:
        uvicorn.run(app, host=host, port=int(port), log_level="info")
    finally:
        plane.close()
    return 0


def _cmd_agent(args: argparse.Namespace) -> int:
    from .agent import run_agent
    from .config import load_agent_config

    cfg = load_agent_config(args.config)
    run_agent(cfg)
    return 0


def _cmd_scenario_run(args: argparse.Namespace) -> int:
    from .sim import FleetSimulation, Scenario

    scenario = Scenario.load(args.file)
    sim = FleetSimulation(scenario, seed=args.seed, virtual=args.virtual_clock)
    report = sim.run()
    output = report.to_json()
    if args.out:
        Path(args.out).write_text(output, "utf-8")
    print(output, end="")
    if report.assertion_failures:
        for failure in report.assertion_failures:
            print(f"ASSERTION FAILED: {failure}", file=sys.stderr)
        return ASSERTION_ERROR
    return 0


def _cmd_bench_deploy(args: argparse.Namespace) -> int:
    from .bench import measure_deployment

    report = measure_deployment(args.n, args.devices)
    if args.out:
        report.write_csv(args.out)
    print(report.summary())
    if report.failures or not report.linear:
        return ASSERTION_ERROR
    return 0


def _cmd_inspect(args: argparse.Namespace) -> int:
    import httpx

    headers = {"Authorization": f"Bearer {args.token}"}
    base = args.endpoint.rstrip("/")
    if args.what == "devices":
        resp = httpx.get(f"{base}/devices", headers=headers, timeout=10)
        resp.raise_for_status()
        for d in resp.json()["devices"]:
            caps = ",".join(d["capabilities"]) or "-"
            print(f"{d['id']}  {d['address']:<24} {d['status']:<12} {caps}")
    elif args.what == "functions":
        resp = httpx.get(f"{base}/functions", headers=headers, timeout=10)
        resp.raise_for_status()
        for f in resp.json()["functions"]:
            params = ",".join(p["name"] for p in f["params"]) or "-"
            print(f"{f['id']}  {f['name']:<24} v{f['version']:<4} params: {params}")
    else:  # rules
        resp = httpx.get(f"{base}/rules/interop", headers=headers, timeout=10)
        resp.raise_for_status()
        for r in resp.json()["rules"]:
            print(
                f"{r['id']}  if {r['device_id']}.{r['metric']} {r['comparator']} "
                f"{r['threshold']} -> {len(r['actions'])} action(s) "
                f"(cooldown {r['cooldown']}s)"
            )
        resp = httpx.get(f"{base}/rules/autodeploy", headers=headers, timeout=10)
        resp.raise_for_status()
        for r in resp.json()["rules"]:
            caps = ",".join(r["capabilities"]) or "<any>"
            print(f"{r['id']}  on-register [{caps}] -> {r['function_id']}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="fnfleet", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    serve = sub.add_parser("serve", help="run the control plane service")
    serve.add_argument("--config", required=True, help="service config file (JSON/TOML)")
    serve.set_defaults(fn=_cmd_serve)

    agent = sub.add_parser("agent", help="run the device agent")
    agent.add_argument("--config", required=True, help="agent config file (JSON)")
    agent.set_defaults(fn=_cmd_agent)

    scenario = sub.add_parser("scenario", help="fleet simulator scenarios")
    scenario_sub = scenario.add_subparsers(dest="scenario_command", required=True)
    run = scenario_sub.add_parser("run", help="run a scenario file")
    run.add_argument("file", help="scenario JSON file")
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--virtual-clock", action="store_true", help="deterministic virtual time")
    run.add_argument("--out", help="write the report JSON here as well")
    run.set_defaults(fn=_cmd_scenario_run)

    bench = sub.add_parser("bench", help="benchmarks")
    bench_sub = bench.add_subparsers(dest="bench_command", required=True)
    deploy = bench_sub.add_parser("deploy", help="measure repeated deployments")
    deploy.add_argument("--n", type=int, required=True, help="number of deployments")
    deploy.add_argument("--devices", type=int, default=1)
    deploy.add_argument("--out", help="write per-deployment rows as CSV")
    deploy.set_defaults(fn=_cmd_bench_deploy)

    inspect = sub.add_parser("inspect", help="pretty-print control plane state")
    inspect.add_argument("what", choices=["devices", "functions", "rules"])
    inspect.add_argument("--endpoint", required=True, help="control plane base URL")
    inspect.add_argument("--token", required=True, help="admin token")
    inspect.set_defaults(fn=_cmd_inspect)

    return parser


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    warnings.filterwarnings("ignore", category=DeprecationWarning)
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.fn(args)
    except (ConfigError, ValidationError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except ScenarioError as exc:
        report = getattr(exc, "report", None)
        if report is not None:
            print(report.to_json(), end="")
        print(f"error: {exc}", file=sys.stderr)
        return ASSERTION_ERROR


if __name__ == "__main__":
    sys.exit(main())
