"""
This source code is licensed under the MIT license found in the
LICENSE file in the root directory of this source tree.
"""

import argparse
import os
import sys

root_dir = os.path.dirname(os.path.abspath(__file__)) + "/.."
sys.path.append(root_dir)
import config
import utils


def resolved(path):
    cfg = config.load_config(path) if path else config.parse_config({})
    return cfg


def main(args):
    try:
        cfg = resolved(args.config)
    except utils.ConfigError as err:
        for problem in err.problems:
            print(problem, file=sys.stderr)
        return err.exit_code
    print(config.serialize_config(cfg))
    if args.hash:
        print(f"config_hash={config.config_hash(cfg)}")
    return 0


if __name__ == "__main__":
    parser = argparse.ArgumentParser(
        description="Print a fully resolved configuration, defaults filled in."
    )
    parser.add_argument(
        "--config",
        type=str,
        help="Configuration file, the built-in defaults when omitted.",
    )
    parser.add_argument(
        "--hash", action="store_true", help="Also print the configuration hash."
    )
    sys.exit(main(parser.parse_args()))
