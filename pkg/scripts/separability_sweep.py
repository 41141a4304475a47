"""Test accuracy of one model as the synthetic class separation shrinks.

    python scripts/separability_sweep.py --model random_forest --levels 1 0.5 0.25 0.1
"""

import argparse
import tempfile
from pathlib import Path

from focusline.models import KINDS
from focusline.pipeline import PipelineConfig, run_pipeline
from focusline.synth import preset


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--model", choices=KINDS, default="random_forest")
    ap.add_argument("--levels", type=float, nargs="+", default=[1.0, 0.5, 0.25, 0.1, 0.0])
    ap.add_argument("--seed", type=int, default=42)
    ap.add_argument("--noise", type=float, default=0.1)
    args = ap.parse_args()
    print(f"{'separability':>12} {'val':>7} {'test':>7} {'auc':>7}")
    with tempfile.TemporaryDirectory() as tmp:
        for level in args.levels:
            cfg = PipelineConfig(out_dir=Path(tmp) / f"sep{level}", seed=args.seed, models=(args.model,),
                                 synth=preset("easy", separability=level, noise_sigma=args.noise))
            s = run_pipeline(cfg).summaries[0]
            auc = f"{s.test_macro_auc:.4f}" if s.test_macro_auc is not None else "n/a"
            print(f"{level:>12g} {s.tuned_acc:>7.4f} {s.test_acc:>7.4f} {auc:>7}")


if __name__ == "__main__":
    main()
