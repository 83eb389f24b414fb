"""Simulated smart irrigation controllers and background LAN devices."""
from .background import DEFAULT_PROFILES, BackgroundDevice, BackgroundProfile, DeviceClass, background_step
from .bluespray import BlueSprayDevice, BlueSprayState, bluespray_handle, schedule_payload
from .common import (CLOUD_HOSTS, DEFAULT_SESSIONS, CloudService, IrrigationDevice, IrrigationKind,
                     SessionProfile, hostname_table)
from .greeniq import (GreenIqCloud, GreenIqDevice, GreenIqState, factory_reset, greeniq_on_response,
                      greeniq_step, greeniq_valve_exec)
from .rainmachine import (NeedModel, RainMachineDevice, RainMachineState, rainmachine_adapt,
                          rainmachine_on_forecast, rainmachine_poll)

__all__ = [
    "BackgroundDevice", "BackgroundProfile", "BlueSprayDevice", "BlueSprayState", "CLOUD_HOSTS",
    "CloudService", "DEFAULT_PROFILES", "DEFAULT_SESSIONS", "DeviceClass", "GreenIqCloud",
    "GreenIqDevice", "GreenIqState", "IrrigationDevice", "IrrigationKind", "NeedModel",
    "RainMachineDevice", "RainMachineState", "SessionProfile", "background_step",
    "bluespray_handle", "factory_reset", "greeniq_on_response", "greeniq_step",
    "greeniq_valve_exec", "hostname_table", "rainmachine_adapt", "rainmachine_on_forecast",
    "rainmachine_poll", "schedule_payload",
]
