"""Damage assessment: flow network, max-flow, waste and tariff arithmetic."""
from .maxflow import BACKEND, BACKENDS, Algorithm, FlowResult, max_flow, max_flow_result, solve
from .network import SCALE, SINK, SOURCE, FlowEdge, FlowNetwork, build_flow_network, from_fixed, to_fixed
from .report import (PORTLAND_TARIFF, PUBLISHED_WASTE, WATER_TOWER_M3, ConsumptionSeries, DamageReport,
                     SeriesMismatch, WasteRow, empirical_waste, financial_damage, monitor_consumption,
                     waste_table)
from .topology import Pipe, PipelineTopology, TopologyFormatError, load_topology, parse_topology

__all__ = [
    "Algorithm", "BACKEND", "BACKENDS", "ConsumptionSeries", "DamageReport", "FlowEdge", "FlowNetwork",
    "FlowResult", "PORTLAND_TARIFF", "PUBLISHED_WASTE", "Pipe", "PipelineTopology", "SCALE", "SINK",
    "SOURCE", "SeriesMismatch", "TopologyFormatError", "WATER_TOWER_M3", "WasteRow", "build_flow_network",
    "empirical_waste", "financial_damage", "from_fixed", "load_topology", "max_flow", "max_flow_result",
    "monitor_consumption", "parse_topology", "solve", "to_fixed", "waste_table",
]
