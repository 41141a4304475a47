"""Run the full pipeline from a YAML config and print the summary table.

    python scripts/run_pipeline.py configs/easy.yaml
"""

import argparse
import logging
import time

from focusline.pipeline import PipelineConfig, apply_seed_override, run_pipeline


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("config")
    ap.add_argument("--seed", type=int)
    args = ap.parse_args()
    logging.basicConfig(level=logging.INFO, format="%(asctime)s %(message)s")
    cfg = apply_seed_override(PipelineConfig.load(args.config))
    if args.seed is not None:
        cfg.seed = args.seed
    t0 = time.perf_counter()
    result = run_pipeline(cfg)
    print(result.summary_text)
    print(f"\n{time.perf_counter() - t0:.1f} s, artifacts in {result.out_dir}")


if __name__ == "__main__":
    main()
