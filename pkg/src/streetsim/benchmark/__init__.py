"""Benchmark protocols: cleaning, localization recall, recognition / VQA and VLN."""
from .cleaning import CleaningConfig, CleaningEntry, clean_places, cleaned_world, removed_ids
from .detection import (DetectionReport, count_instances, eval_detection, recall, region_detection,
                        subsample_categories, sweep, visible_ground_truth)
from .recognition import (AlwaysFirstModel, NoisyVQAModel, OracleVQAModel, PositionBiasedModel,
                          TypePredictor, VQAItem, answers_from_items, answers_from_world,
                          eval_recognition, eval_vqa_circular, predict_types, recognize, vqa_outcomes)
from .suite import Suite, SuiteParams, generate_benchmark_suite
from .vln import SUCCESS_RADIUS_M, VLNRecord, VLNReport, aggregate_vln, run_vln_episode

__all__ = [
    "AlwaysFirstModel", "CleaningConfig", "CleaningEntry", "DetectionReport", "NoisyVQAModel",
    "OracleVQAModel", "PositionBiasedModel", "SUCCESS_RADIUS_M", "Suite", "SuiteParams", "TypePredictor",
    "VLNRecord", "VLNReport", "VQAItem", "aggregate_vln", "answers_from_items", "answers_from_world",
    "clean_places", "cleaned_world", "count_instances", "eval_detection", "eval_recognition",
    "eval_vqa_circular", "generate_benchmark_suite", "predict_types", "recall", "recognize",
    "region_detection", "removed_ids", "run_vln_episode", "subsample_categories", "sweep",
    "visible_ground_truth", "vqa_outcomes",
]
