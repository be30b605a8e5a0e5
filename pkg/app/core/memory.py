"""
Process memory reporting for health and status payloads
"""

import gc
import logging

import psutil

logger = logging.getLogger(__name__)


def get_memory_info():
    """Resident memory of this process"""
    process = psutil.Process()
    info = process.memory_info()
    return {
        "cpu_memory_mb": info.rss / 1024 / 1024,
        "cpu_memory_percent": process.memory_percent(),
        "virtual_memory_mb": info.vms / 1024 / 1024,
    }


def cleanup_memory():
    """Collect garbage after a large run; returns the number of objects freed"""
    collected = gc.collect()
    if collected:
        logger.debug("memory cleanup collected %d objects", collected)
    return collected
