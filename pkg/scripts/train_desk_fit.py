"""Produce the desk-scale fit artifact used by the acceptance suite.

Renders the 32-view collocated checker-sphere dataset and optimizes the
coarse/fine field networks for 20k iterations. Re-runnable: an existing
dataset is reused and training resumes from the last checkpoint.

    python3 scripts/train_desk_fit.py [out_dir]
"""

import os
import sys

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from reflectfield.scenes import load_dataset, make_scene, generate_dataset
from reflectfield.training import TrainConfig, train

DESK_FIT_CONFIG = TrainConfig(
    learning_rate=1e-4,
    beta=1e-4,
    rays_per_batch=128,
    iterations=20000,
    n_coarse=64,
    n_fine=128,
    width=32,
    n_freqs=10,
    ray_chunk=32,
    seed=0,
)


def main(out_dir):
    data_dir = os.path.join(out_dir, "data")
    run_dir = os.path.join(out_dir, "run")
    if os.path.isfile(os.path.join(data_dir, "manifest.txt")):
        dataset = load_dataset(data_dir)
    else:
        scene = make_scene("checker-sphere")
        dataset = generate_dataset(scene, 32, 64, "sphere", (6.0, 6.0, 6.0),
                                   data_dir, step=4e-3, write_png=False)
    train(dataset, DESK_FIT_CONFIG, run_dir, resume=True)


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else
         os.path.join(os.path.dirname(__file__), "..", "artifacts", "desk_fit"))
