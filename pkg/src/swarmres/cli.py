"""Command-line driver: ``swarmres <subcommand> ... --seed S --out DIR``.

Exit codes: 0 success, 2 bad configuration/input, 3 infeasible request.
"""
from __future__ import annotations

import argparse
import json
import math
import sys
import time
from pathlib import Path

import networkx as nx
import numpy as np

from .adversary import (METHODS, AttackPlan, SirConfig, calibrate_r, compromise, mean_curve,
                        phase_impact, random_campaigns, run_campaign)
from .criticality import surbi_rank, write_report_csv
from .graphcore import GraphError, edge_key, edgelist_text, natural_connectivity, read_edgelist
from .io import (ConfigError, atomic_write_text, load_mission, load_scenario, save_mission,
                 save_scenario, write_csv, write_json, write_manifest)
from .layered import LayeredNetworkError
from .mission import LinkModel, MissionPlan, Phase
from .optimize.topology import (InfeasibleError, ReconfigConfig, TopologyProblem, attack_auc,
                                evaluate_static, feasibility_pool, optimize, reconfiguration_cost,
                                reconfigure, score_front, select_by_attack, subsequent_vulnerability)
from .optimize.topsis import simplex_grid
from .scenarios import ScenarioConfig, ScenarioError, gen_contested3d, gen_multiphase, gen_pln, stream, stream_seed


# --- input helpers --------------------------------------------------------------

def _graph_input(args) -> nx.Graph:
    if getattr(args, "graph", None):
        return read_edgelist(args.graph)
    if getattr(args, "scenario", None):
        net, _ = load_scenario(args.scenario)
        return net.comm
    raise ConfigError("an input is required: --graph FILE or --scenario FILE")


def _plan_for(args, net, scenario_plan) -> MissionPlan:
    if getattr(args, "mission", None):
        return load_mission(args.mission)
    if scenario_plan is not None:
        return scenario_plan
    vehicles = frozenset(net.struct_.nodes)
    return MissionPlan((Phase(vehicles, 1.0, 1.0),))


def _weights_grid(path, n_obj: int) -> list:
    if path is None:
        return simplex_grid(n_obj)
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"{path}: cannot read weight grid: {exc}") from None
    if not isinstance(doc, list) or not doc:
        raise ConfigError(f"{path}: weight grid must be a non-empty array of weight vectors")
    grid = []
    for k, w in enumerate(doc):
        if not (isinstance(w, list) and len(w) == n_obj and all(isinstance(c, (int, float)) for c in w)):
            raise ConfigError(f"{path}: entry {k}: expected {n_obj} numbers")
        w = np.asarray(w, dtype=float)
        if np.any(w < 0) or not math.isclose(w.sum(), 1.0, abs_tol=1e-9):
            raise ConfigError(f"{path}: entry {k}: weights must be non-negative and sum to 1")
        grid.append(w)
    return grid


def _ids(batch) -> str:
    return " ".join(f"{e[0]}-{e[1]}" if isinstance(e, tuple) else str(e) for e in batch)


def _front_rows(front) -> list:
    return [s.as_dict() for s in front]


# --- subcommands ----------------------------------------------------------------

def cmd_generate(args, out: Path) -> dict:
    cfg = ScenarioConfig(args.dataset, args.nodes, args.attachment, args.gamma, args.phases,
                         args.active_fraction, args.rewire, args.n_uav, args.n_usv,
                         tuple(args.bounds), args.comm_range, args.mean_degree, args.d0, args.n_exp,
                         args.seed)
    gen = stream(args.seed, "generation")
    s1, s2 = (int(s) for s in gen.integers(2**31 - 1, size=2))
    if cfg.dataset == "pln":
        atomic_write_text(out / "graph.edgelist", edgelist_text(gen_pln(cfg.nodes, cfg.attachment, s1, cfg.gamma)))
    elif cfg.dataset == "multiphase":
        base = gen_pln(cfg.nodes, cfg.attachment, s1, cfg.gamma)
        plan, graphs = gen_multiphase(base, cfg.phases, s2, cfg.active_fraction, cfg.rewire)
        atomic_write_text(out / "base.edgelist", edgelist_text(base))
        for j, g in enumerate(graphs):
            atomic_write_text(out / f"phase_{j}.edgelist", edgelist_text(g))
        save_mission(plan, out / "mission.json")
    else:
        net, plan = gen_contested3d(cfg.n_uav, cfg.n_usv, cfg.bounds, cfg.comm_range, s1, cfg.mean_degree,
                                    phases=cfg.phases)
        save_scenario(net, out / "scenario.json", plan)
        save_mission(plan, out / "mission.json")
    return cfg.as_dict()


def cmd_rank(args, out: Path) -> dict:
    g = _graph_input(args)
    report = surbi_rank(g, args.r)
    write_report_csv(report, out / "criticality.csv", out / "edges.csv")
    return {"input": args.graph or args.scenario, "r": args.r}


def cmd_calibrate(args, out: Path) -> dict:
    g = _graph_input(args)
    grid = [float(x) for x in args.r_grid.split(",")] if args.r_grid else [k / 10 for k in range(11)]
    cfg = SirConfig(args.infection_prob, args.recovery_prob, args.max_ticks, args.repetitions)
    res = calibrate_r(g, grid, args.group_size, args.groups, cfg, seed=stream_seed(args.seed, "sir"))
    write_csv(out / "calibration.csv", ["r", "group", "mean_time_to_peak", "monotone_ok"],
              ([r, k, t, str(ok).lower()] for r, k, t, ok in res.table))
    write_json(out / "selection.json", {"r": res.r, "flagged": res.flagged})
    return {"input": args.graph or args.scenario, "r_grid": grid, "group_size": args.group_size,
            "groups": args.groups, "sir": vars(cfg)}


def _trace_rows(trace) -> list:
    return [[k, _ids(trace.removals[k - 1]) if k else "", trace.phi[k], trace.lambda2[k]]
            for k in range(len(trace.phi))]


def cmd_attack(args, out: Path) -> dict:
    # a scenario is attacked as a layered network so failures propagate across layers
    target = load_scenario(args.scenario)[0] if args.scenario and not args.graph else _graph_input(args)
    header = ["step", "removed_ids", "phi", "lambda2"]
    mode = "random" if args.method == "random" else "targeted"
    plan = AttackPlan(mode, args.target, args.fraction, args.steps,
                      None if mode == "random" else args.method, stream_seed(args.seed, "attacks"),
                      args.rerank, args.r)
    summary = {"method": args.method}
    if mode == "random":
        traces = random_campaigns(target, plan, args.runs, seed=plan.seed)
        write_csv(out / "attack_trace.csv", header, _trace_rows(traces[0]))
        phi, lam, fractions = mean_curve(traces)
        write_csv(out / "attack_mean.csv", ["step", "fraction", "phi", "lambda2"],
                  ([k, f, p, l] for k, (f, p, l) in enumerate(zip(fractions, phi, lam))))
        summary["auc"] = float(np.mean([t.auc() for t in traces]))
    else:
        trace = run_campaign(target, plan)
        write_csv(out / "attack_trace.csv", header, _trace_rows(trace))
        summary["auc"] = trace.auc()
        summary["fractions"] = trace.fractions
    write_json(out / "summary.json", summary)
    return {"input": args.graph or args.scenario, "method": args.method, "target": args.target,
            "fraction": args.fraction, "steps": args.steps, "rerank": args.rerank, "r": args.r,
            "runs": args.runs}


def _phase_dir(path: Path):
    plan = load_mission(path / "mission.json")
    graphs = []
    for j in range(len(plan.phases)):
        f = path / f"phase_{j}.edgelist"
        if not f.exists():
            raise ConfigError(f"{f}: missing phase graph")
        graphs.append(read_edgelist(f))
    return plan, graphs


def cmd_phase_impact(args, out: Path) -> dict:
    plan, graphs = _phase_dir(Path(args.phase_dir))
    res = phase_impact(graphs, plan.betas, args.fraction, args.r)
    base = res["none"]
    rows = []
    for attack, values in res.items():
        for j, (b, v) in enumerate(zip(base, values)):
            rows.append([attack, j, v, v / b if b > 0 else 0.0])
    write_csv(out / "phase_impact.csv", ["attack", "phase", "phi", "phi_ratio"], rows)
    return {"phase_dir": args.phase_dir, "fraction": args.fraction, "r": args.r}


def _scenario_problem(args):
    net, splan = load_scenario(args.scenario)
    plan = _plan_for(args, net, splan)
    vehicles = sorted(net.struct_.nodes)
    pool = feasibility_pool(net.positions, vehicles, args.comm_range)
    return net, plan, vehicles, pool


def cmd_optimize_static(args, out: Path) -> dict:
    net, plan, vehicles, pool = _scenario_problem(args)
    lm = LinkModel(args.d0, args.n_exp)
    n_edges = args.edges or net.comm.number_of_edges()
    pool_graph = nx.Graph(e for e, _ in pool)
    pool_graph.add_nodes_from(vehicles)
    if not nx.is_connected(pool_graph):
        raise InfeasibleError(f"vehicles cannot be connected within comm range {args.comm_range} m")
    problem = TopologyProblem(vehicles, pool, n_edges, plan, lm, "static",
                              seed_edges=[[edge_key(u, v) for u, v in net.comm.edges]])
    front = optimize(problem, args.pop, args.gens, stream(args.seed, "nsga"))
    grid = _weights_grid(args.weights_grid, 3)
    sel = select_by_attack(front, grid, net, plan, args.attack_fraction, args.attack_steps, args.r, args.rerank)
    scored = score_front(front, sel.weights)
    aucs = {k: auc for _, k, _, auc in sel.table}
    rows = []
    for k, s in enumerate(scored):
        d = s.as_dict()
        d["decay_auc"] = aucs.get(k)
        rows.append(d)
    write_json(out / "front.json", rows)
    write_json(out / "selection.json", {
        "weights": sel.weights.tolist(), "solution": sel.solution.as_dict(),
        "table": [{"weights": w.tolist(), "index": k, "topsis_score": sc, "decay_auc": auc}
                  for w, k, sc, auc in sel.table]})
    return {"scenario": args.scenario, "mission": args.mission, "edges": n_edges, "pop": args.pop,
            "gens": args.gens, "comm_range": args.comm_range, "attack_fraction": args.attack_fraction,
            "attack_steps": args.attack_steps, "weights_grid": [w.tolist() for w in grid]}


def cmd_reconfigure(args, out: Path) -> dict:
    net, splan = load_scenario(args.scenario)
    plan = _plan_for(args, net, splan)
    n_edges = args.edges or net.comm.number_of_edges()
    net0, victims, cut = compromise(net, args.attack_nodes, args.attack_edges, args.r)
    grid = _weights_grid(args.weights_grid, 4)
    cfg = ReconfigConfig(args.comm_range, LinkModel(args.d0, args.n_exp), args.pop, args.gens,
                         args.attack_fraction, args.attack_steps, args.r, args.rerank,
                         stream_seed(args.seed, "nsga"), tuple(grid))
    res = reconfigure(net0, plan, args.attack_phase, n_edges, cfg)
    save_scenario(net0, out / "compromised.json", plan.restrict(sorted(net0.struct_.nodes)))
    atomic_write_text(out / "g0.edgelist", edgelist_text(res.g0))
    atomic_write_text(out / "g_star.edgelist", edgelist_text(res.g_star.graph))
    write_json(out / "front.json", _front_rows(res.front))
    total = args.attack_fraction * args.attack_steps
    mean_auc = res.front_mean_auc
    d_front = 1.0 - mean_auc / total
    d_star = 1.0 - res.g_star.decay_auc / total
    # follow-up strike on G* to half its nodes: raw Phi and Phi/Phi0
    half = attack_auc(res.g_star.graph, 0.5, 1, args.r)[1].phi
    write_json(out / "summary.json", {
        "attacked_vehicles": [int(v) for v in victims], "attacked_links": [list(e) for e in cut],
        "phi_g0": res.phi_g0, "phi_star": res.phi_star, "g_star": res.g_star.as_dict(),
        "front_mean_auc": mean_auc, "degradation_reduction": (d_front - d_star) / d_front if d_front > 0 else 0.0,
        "phi_star_half_removed": half[-1], "phi_star_half_removed_ratio": half[-1] / half[0] if half[0] else 0.0,
        "selections": [{"weights": w.tolist(), "index": k, "topsis_score": sc, "decay_auc": auc}
                       for w, k, sc, auc in res.selections]})
    return {"scenario": args.scenario, "mission": args.mission, "edges": n_edges,
            "attack_nodes": args.attack_nodes, "attack_edges": args.attack_edges,
            "attack_phase": args.attack_phase, "pop": args.pop, "gens": args.gens,
            "comm_range": args.comm_range, "attack_fraction": args.attack_fraction,
            "attack_steps": args.attack_steps, "weights_grid": [w.tolist() for w in grid]}


def cmd_evaluate(args, out: Path) -> dict:
    net, splan = load_scenario(args.scenario)
    plan = _plan_for(args, net, splan)
    lm = LinkModel(args.d0, args.n_exp)
    g = read_edgelist(args.topology) if args.topology else net.comm.copy()
    unknown = set(g.nodes) - set(net.struct_.nodes)
    if unknown:
        raise ConfigError(f"{args.topology}: topology uses unknown vehicles {sorted(unknown)[:5]}")
    g.add_nodes_from(net.struct_.nodes)
    for u, v in g.edges:
        g.edges[u, v]["length"] = max(float(np.linalg.norm(np.subtract(net.positions[u], net.positions[v]))),
                                      np.finfo(float).tiny)
    vec = evaluate_static(g, net, plan, lm)
    if vec is None:
        doc = {"feasible": False, "reason": "topology is disconnected"}
    else:
        doc = {"feasible": True, **vec.as_dict(), "phi": natural_connectivity(g)}
        if args.attack_phase is not None:
            doc["f3_prime"] = subsequent_vulnerability(g, net, plan, args.attack_phase)
        if args.e0:
            doc["f4"] = reconfiguration_cost(g.edges, read_edgelist(args.e0).edges)
    write_json(out / "objectives.json", doc)
    return {"scenario": args.scenario, "mission": args.mission, "topology": args.topology,
            "e0": args.e0, "attack_phase": args.attack_phase}


# --- parser ---------------------------------------------------------------------

def _common(p, graph_input=False, scenario=False, optimizer=False):
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--r", type=float, default=0.3, help="SurBi weight on Birnbaum importance")
    if graph_input:
        p.add_argument("--graph", help="edge list 'u v [length_m]'")
        p.add_argument("--scenario", help="scenario JSON (comm layer is used)")
    if scenario:
        p.add_argument("--scenario", required=True, help="scenario JSON")
        p.add_argument("--mission", help="mission JSON overriding the scenario phases")
        p.add_argument("--comm-range", type=float, default=600.0)
        p.add_argument("--d0", type=float, default=400.0)
        p.add_argument("--n-exp", type=float, default=2.0)
    if optimizer:
        p.add_argument("--edges", type=int, help="target edge count (default: current)")
        p.add_argument("--pop", type=int, default=92)
        p.add_argument("--gens", type=int, default=200)
        p.add_argument("--weights-grid", help="JSON array of weight vectors")
        p.add_argument("--attack-fraction", type=float, default=0.1)
        p.add_argument("--attack-steps", type=int, default=5)
        p.add_argument("--rerank", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="swarmres", description="Swarm network resilience experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("generate", help="write scenario files")
    _common(p)
    p.add_argument("--dataset", choices=("pln", "multiphase", "contested3d"), default="pln")
    p.add_argument("--nodes", type=int, default=1000)
    p.add_argument("--attachment", type=int, default=2)
    p.add_argument("--gamma", type=float)
    p.add_argument("--phases", type=int)
    p.add_argument("--active-fraction", type=float, default=0.5)
    p.add_argument("--rewire", type=float, default=1.0)
    p.add_argument("--n-uav", type=int, default=30)
    p.add_argument("--n-usv", type=int, default=20)
    p.add_argument("--bounds", type=float, nargs=3, default=[1000.0, 1000.0, 1000.0])
    p.add_argument("--comm-range", type=float, default=600.0)
    p.add_argument("--mean-degree", type=float, default=4.0)
    p.add_argument("--d0", type=float, default=400.0)
    p.add_argument("--n-exp", type=float, default=2.0)
    p.set_defaults(func=cmd_generate)

    p = sub.add_parser("rank", help="SurBi criticality report")
    _common(p, graph_input=True)
    p.set_defaults(func=cmd_rank)

    p = sub.add_parser("calibrate-r", help="SIR-based choice of r")
    _common(p, graph_input=True)
    p.add_argument("--r-grid", help="comma-separated r values (default 0,0.1,...,1)")
    p.add_argument("--group-size", type=int, default=50)
    p.add_argument("--groups", type=int, default=5)
    p.add_argument("--infection-prob", type=float, default=0.1)
    p.add_argument("--recovery-prob", type=float, default=0.05)
    p.add_argument("--max-ticks", type=int, default=500)
    p.add_argument("--repetitions", type=int, default=30)
    p.set_defaults(func=cmd_calibrate)

    p = sub.add_parser("attack", help="connectivity decay under an attack campaign")
    _common(p, graph_input=True)
    p.add_argument("--method", choices=METHODS, default="surbi")
    p.add_argument("--target", choices=("nodes", "edges"), default="nodes")
    p.add_argument("--fraction", type=float, default=0.02)
    p.add_argument("--steps", type=int, default=25)
    p.add_argument("--rerank", action="store_true")
    p.add_argument("--runs", type=int, default=20, help="Monte-Carlo runs for --method random")
    p.set_defaults(func=cmd_attack)

    p = sub.add_parser("phase-impact", help="per-phase connectivity after phase/global strikes")
    _common(p)
    p.add_argument("--phase-dir", required=True, help="directory from 'generate --dataset multiphase'")
    p.add_argument("--fraction", type=float, default=0.1)
    p.set_defaults(func=cmd_phase_impact)

    p = sub.add_parser("optimize-static", help="3-objective topology search with TOPSIS selection")
    _common(p, scenario=True, optimizer=True)
    p.set_defaults(func=cmd_optimize_static)

    p = sub.add_parser("reconfigure", help="post-attack 4-objective reconfiguration")
    _common(p, scenario=True, optimizer=True)
    p.add_argument("--attack-nodes", type=float, default=0.1, help="fraction of vehicles struck")
    p.add_argument("--attack-edges", type=float, default=0.1, help="fraction of links struck")
    p.add_argument("--attack-phase", type=int, default=0, help="0-based phase of the strike")
    p.set_defaults(func=cmd_reconfigure)

    p = sub.add_parser("evaluate", help="objective vector of a topology")
    _common(p, scenario=True)
    p.add_argument("--topology", help="edge list (default: the scenario comm layer)")
    p.add_argument("--e0", help="reference edge list for the reconfiguration cost")
    p.add_argument("--attack-phase", type=int, help="0-based phase for the subsequent vulnerability")
    p.set_defaults(func=cmd_evaluate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "phases", 0) is None:
        args.phases = 5 if args.dataset == "multiphase" else 3
    out = Path(args.out)
    start = time.perf_counter()
    try:
        out.mkdir(parents=True, exist_ok=True)
        config = args.func(args, out)
    except InfeasibleError as exc:
        print(f"swarmres: infeasible: {exc}", file=sys.stderr)
        return 3
    except (ConfigError, ScenarioError, GraphError, LayeredNetworkError, ValueError, OSError) as exc:
        print(f"swarmres: error: {exc}", file=sys.stderr)
        return 2
    write_manifest(out, args.command, config, args.seed, time.perf_counter() - start)
    return 0


if __name__ == "__main__":
    sys.exit(main())
