"""Sweep the inequality chains and the pi_s brackets; write JSON and CSV under --out."""
from __future__ import annotations

import argparse
import json
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from lorentzlab.experiments import reports_to_csv, sweep
from lorentzlab.tensor_duality import pis_bracket, random_tensor
from lorentzlab.weights import weight_from_spec


@dataclass
class ChainSweepConfig:
    weight: str = "power:1"
    N: int = 2
    n: int = 5
    eps: tuple = (1.0, 0.5, 0.1, 0.01, 0.0)
    eta_scales: tuple = (0.25, 1.0, 4.0)
    beta_scales: tuple = (0.5, 1.0, 2.0)
    seed: int = 0


@dataclass
class PisSweepConfig:
    weight: str = "power:1"
    N: int = 2
    n: int = 3
    tensors: int = 10
    terms: int = 3
    restarts: int = 2
    family: int = 8
    seed: int = 0


@dataclass
class RunConfig:
    out: str = "results"
    chains: ChainSweepConfig = field(default_factory=ChainSweepConfig)
    pis: PisSweepConfig = field(default_factory=PisSweepConfig)


def run_chains(cfg: ChainSweepConfig, out: Path) -> None:
    w = weight_from_spec(cfg.weight, cfg.n)
    for kind in ("bp", "lb", "lb-multilinear"):
        t0 = time.perf_counter()
        if kind == "lb":
            reps = sweep(kind, w, max(cfg.N, 3), cfg.n, cfg.eps, cfg.seed,
                         cfg.eta_scales, cfg.beta_scales)
        else:
            reps = sweep(kind, w, cfg.N, cfg.n, cfg.eps, cfg.seed)
        (out / f"chain_{kind}.json").write_text(
            json.dumps({"config": asdict(cfg), "reports": [r.to_dict() for r in reps]},
                       sort_keys=True, indent=2, default=str) + "\n")
        (out / f"chain_{kind}.csv").write_text(reports_to_csv(reps))
        for r in reps:
            print(f"{kind:15s} eps={r.params['eps']:<6g} {r.summary}")
        print(f"{kind}: {len(reps)} reports in {time.perf_counter() - t0:.1f}s")


def run_pis(cfg: PisSweepConfig, out: Path) -> None:
    w = weight_from_spec(cfg.weight, cfg.n)
    rng = np.random.default_rng(cfg.seed)
    rows = []
    for i in range(cfg.tensors):
        u = random_tensor(rng, cfg.N, cfg.n, w, cfg.terms)
        b = pis_bracket(u, cfg.restarts, cfg.family, cfg.seed + i)
        rows.append({"tensor": i, "representation_value": u.value(), "lower": b.lower,
                     "upper": b.upper, "lower_exact_norm": b.lower_exact_norm})
        print(f"tensor {i}: rep {u.value():.6f}  bracket [{b.lower:.6f}, {b.upper:.6f}]"
              f"{'' if b.lower_exact_norm else '  (searched lower)'}")
    (out / "pis_brackets.json").write_text(
        json.dumps({"config": asdict(cfg), "rows": rows}, sort_keys=True, indent=2) + "\n")


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", default=RunConfig.out)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--skip-pis", action="store_true")
    args = ap.parse_args()
    cfg = RunConfig(out=args.out, chains=ChainSweepConfig(seed=args.seed),
                    pis=PisSweepConfig(seed=args.seed))
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    run_chains(cfg.chains, out)
    if not args.skip_pis:
        run_pis(cfg.pis, out)


if __name__ == "__main__":
    main()
