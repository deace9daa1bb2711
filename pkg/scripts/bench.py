"""GSI runtime against circuit width for the S1/S2/S3 map configurations."""

import argparse

from gateprune.gsi import HardwareEstimatorConfig
from gateprune.pipeline import bench_scalability


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--configs", nargs="+", default=["S1", "S2", "S3"])
    ap.add_argument("--qubits", nargs="+", type=int, default=[4, 6, 8, 10])
    ap.add_argument("--engine", choices=("exact", "hardware"), default="exact")
    ap.add_argument("--shots", type=int, default=2000)
    args = ap.parse_args()

    hw = HardwareEstimatorConfig(shots=args.shots) if args.engine == "hardware" else None
    rows = bench_scalability(args.configs, args.qubits, args.engine, hardware=hw)
    print(f"{'config':<6} {'qubits':>6} {'gates':>6} {'seconds':>9}")
    for r in rows:
        print(f"{r['config']:<6} {r['qubits']:>6} {r['gates']:>6} {r['seconds']:>9.3f}")


if __name__ == "__main__":
    main()
