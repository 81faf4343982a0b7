# config.py
"""
Configuration settings for the Segmentation Reliability Evaluator
"""

import os
from pathlib import Path

from dotenv import load_dotenv

# Project root directory
BASE_DIR = Path(__file__).resolve().parent

load_dotenv(BASE_DIR / '.env')

# Evaluation Configuration
EVAL_CONFIG = {
    'num_bins': int(os.getenv('RSS_NUM_BINS', '15')),
    'weights': os.getenv('RSS_WEIGHTS', '1,1,1,1'),
    'ignore_index': int(os.getenv('RSS_IGNORE_INDEX', '255')),
    'jobs': int(os.getenv('RSS_JOBS', '0')),  # 0 = one worker per CPU
    'probability_tolerance': 1e-3,
    'entropy_epsilon': 1e-12,
    'inflight_per_job': 2  # images held in memory per worker
}

# Named RSS weightings (mIoU, ECE, p(acc|cer), p(unc|inacc))
WEIGHT_PRESETS = {
    'equal': (1.0, 1.0, 1.0, 1.0),
    'accuracy_first': (1.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0)
}

# Synthetic Data Configuration
SYNTH_CONFIG = {
    'confidence_spread': 0.05,  # half-width of the per-pixel correctness interval
    'runner_up_ratio': 0.99,  # runner-up mass relative to the max in peaked pixels
    'confidence_floor_ratio': 1.01  # confidence floor as a multiple of 1/C
}

# Report Configuration
REPORT_CONFIG = {
    'schema_version': 1,
    'display_decimals': 3
}

# Benchmark Configuration
BENCH_CONFIG = {
    'log_file': os.getenv('RSS_BENCH_LOG', str(BASE_DIR / 'bench_results.csv')),
    'warmup_images': 1
}

# Logging Configuration
LOGGING_CONFIG = {
    'level': os.getenv('LOG_LEVEL', 'INFO'),
    'format': '%(asctime)s - %(name)s - %(levelname)s - %(message)s'
}
