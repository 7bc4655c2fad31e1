#!/usr/bin/env python3
"""Train federated logistic regression over the three uplink transports.

A short run (40 rounds, 2 trials) comparing the ideal noiseless transport,
the orthogonal-sequence uplink, and truncated channel inversion on the
bundled MNIST subset.  Pass --rounds/--trials to reproduce longer curves;
the full figure presets live behind `floras run --preset ...`.
"""

import argparse

import numpy as np

from floras.config import resolve_data_dir
from floras.data import load_mnist, partition
from floras.fedavg import FLConfig, run_training
from floras.streams import derive_rng
from floras.transport import (ChannelInversionTransport, FlorasTransport,
                              NoiselessTransport)

parser = argparse.ArgumentParser()
parser.add_argument("--rounds", type=int, default=40)
parser.add_argument("--trials", type=int, default=2)
parser.add_argument("--snr-db", type=float, default=15.0)
parser.add_argument("--data-dir", default=None)
args = parser.parse_args()

data_dir = resolve_data_dir(args.data_dir)
transports = {
    "noiseless": lambda: NoiselessTransport(),
    "floras (N=K)": lambda: FlorasTransport(20, 1.0, 10.0, args.snr_db,
                                            bytes.fromhex("f10ca5")),
    "floras (N=K+5)": lambda: FlorasTransport(25, 1.0, 10.0, args.snr_db,
                                              bytes.fromhex("f10ca5")),
    "channel inversion": lambda: ChannelInversionTransport(1.0, 10.0,
                                                           args.snr_db),
}

print(f"{args.trials} trials x {args.rounds} rounds at {args.snr_db:g} dB")
for name, factory in transports.items():
    accs, losses, eps = [], [], []
    for trial in range(args.trials):
        train, test = load_mnist(data_dir, rng=derive_rng(1, "data", trial))
        shards = partition(train, 20, "iid", derive_rng(1, "partition", trial))
        config = FLConfig(m_clients=20, k_clients=20, rounds=args.rounds,
                          local_steps=1, batch_size=50, lr=0.005, reg=0.01)
        res = run_training(config, factory(), shards, train, test,
                           master_seed=1, trial=trial)
        accs.append(res.metrics[-1].test_accuracy)
        losses.append(res.metrics[-1].train_loss)
        eps.append(res.metrics[-1].epsilon_item)
    eps_txt = ("inf" if np.isinf(eps[0])
               else f"{float(np.mean(eps)):.3f}")
    print(f"  {name:<18} loss {np.mean(losses):.4f}  "
          f"accuracy {np.mean(accs):.4f}  eps_item {eps_txt}")
