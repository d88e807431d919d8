"""Simulation toolkit for perception-guided variable-flow PWM orchard spraying."""

from .config import ConfigError, SimConfig, load_config
from .control import ControllerConfig, Mode, NozzleCommand, all_open, command, command_frame, on_off, variable_rate
from .harness import Report, Stats, TrialResult, compare_controls, describe, pool, run_trial, summarize
from .perception import (
    DepthFrame,
    RasterFormatError,
    SegClass,
    SegmentedFrame,
    ZoneFeatures,
    compute_zone_features,
    frame_features,
    fuse_depth_gate,
    load_depth,
    load_mask,
    partition_zones,
)
from .scenario import GeneratorSpec, Scenario, ScenarioError, generate_scenario, load_scenario, validate_scenario
from .spray import (
    Boom,
    DepositionField,
    PeSetup,
    PlumeModel,
    WaterSensitivePaper,
    adhesion_rate,
    deposit,
    plume_reach,
    replicate_pe1,
    replicate_pe2,
)
from .valve import FlowTrace, PlungerState, PwmSignal, ValveParams, integrate_volume, nozzle_flow, plunger_step, pwm_waveform

__version__ = "0.1.0"
